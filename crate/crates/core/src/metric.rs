//! Distance matrices and the metric catalog used to build them.
//!
//! Every sample enters the library as a [`DistanceMatrix`]; the estimators
//! and diagnostics never see raw points. Matrices are either built from
//! points under a [`MetricSpec`] or loaded from CSV/JSON files.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use petgraph::algo::floyd_warshall;
use petgraph::graph::{NodeIndex, UnGraph};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for metric-axiom validation.
pub const METRIC_TOL: f64 = 1e-9;

/// Triangle checks are O(n³); they run by default only up to this size.
pub const TRIANGLE_CHECK_MAX_N: usize = 512;

/// An observation in one of the marginal spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    /// Coordinates for the vector metrics.
    Vector(Vec<f64>),
    /// Opaque identifier for graph and discrete metrics.
    Label(String),
}

impl Point {
    pub fn vector(coords: impl Into<Vec<f64>>) -> Self {
        Point::Vector(coords.into())
    }

    pub fn label(label: impl Into<String>) -> Self {
        Point::Label(label.into())
    }
}

/// Weighted undirected graph given by its edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub edges: Vec<(String, String, f64)>,
}

impl GraphSpec {
    pub fn new(edges: Vec<(String, String, f64)>) -> Self {
        GraphSpec { edges }
    }

    /// Unit-weight graph from unweighted edges.
    pub fn unit<S: AsRef<str>>(edges: &[(S, S)]) -> Self {
        GraphSpec {
            edges: edges
                .iter()
                .map(|(a, b)| (a.as_ref().to_string(), b.as_ref().to_string(), 1.0))
                .collect(),
        }
    }

    /// All-pairs shortest-path distances between the named vertices.
    fn shortest_paths(&self, labels: &[&str]) -> Result<Vec<f64>> {
        let mut graph: UnGraph<String, f64> = UnGraph::new_undirected();
        let mut index: HashMap<String, NodeIndex> = HashMap::new();
        let mut node = |graph: &mut UnGraph<String, f64>, name: &str| {
            *index
                .entry(name.to_string())
                .or_insert_with(|| graph.add_node(name.to_string()))
        };
        for (a, b, w) in &self.edges {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::Input(format!(
                    "edge ({a}, {b}) has invalid weight {w}; weights must be finite and nonnegative"
                )));
            }
            let (u, v) = (node(&mut graph, a), node(&mut graph, b));
            graph.add_edge(u, v, *w);
        }
        let all = floyd_warshall(&graph, |e| *e.weight())
            .map_err(|_| Error::Input("negative cycle in graph".into()))?;

        // The graph itself must be connected, not just the sampled vertices.
        if let Some(first) = graph.node_indices().next() {
            for other in graph.node_indices() {
                if all[&(first, other)] == f64::MAX {
                    return Err(Error::DisconnectedGraph(
                        graph[first].clone(),
                        graph[other].clone(),
                    ));
                }
            }
        }

        let ids = labels
            .iter()
            .map(|l| {
                index
                    .get(*l)
                    .copied()
                    .ok_or_else(|| Error::Input(format!("label {l:?} is not a graph vertex")))
            })
            .collect::<Result<Vec<_>>>()?;
        let n = ids.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = if ids[i] == ids[j] { 0.0 } else { all[&(ids[i], ids[j])] };
            }
        }
        Ok(d)
    }
}

/// Choice of metric for one marginal space.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    Euclidean,
    Manhattan,
    Chebyshev,
    Minkowski { p: f64 },
    Discrete,
    Graph(GraphSpec),
    /// Distances supplied directly as a matrix; see [`load_matrix`].
    Precomputed,
}

impl MetricSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MetricSpec::Euclidean => "euclidean",
            MetricSpec::Manhattan => "manhattan",
            MetricSpec::Chebyshev => "chebyshev",
            MetricSpec::Minkowski { .. } => "minkowski",
            MetricSpec::Discrete => "discrete",
            MetricSpec::Graph(_) => "graph",
            MetricSpec::Precomputed => "precomputed",
        }
    }

    /// Parses the vector/discrete metric names (`minkowski:3` selects p = 3).
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let spec = match lower.as_str() {
            "euclidean" | "l2" => MetricSpec::Euclidean,
            "manhattan" | "l1" | "cityblock" => MetricSpec::Manhattan,
            "chebyshev" | "linf" => MetricSpec::Chebyshev,
            "discrete" => MetricSpec::Discrete,
            "precomputed" => MetricSpec::Precomputed,
            other => match other.strip_prefix("minkowski") {
                Some(rest) => {
                    let p = rest
                        .trim_start_matches([':', '='])
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidArgument(format!("bad minkowski spec {s:?}")))?;
                    MetricSpec::Minkowski { p }
                }
                None => {
                    return Err(Error::InvalidArgument(format!("unknown metric {s:?}")));
                }
            },
        };
        Ok(spec)
    }
}

/// Square table of pairwise distances, stored row-major.
///
/// Construction only enforces shape and finiteness; the metric axioms are
/// checked by [`validate_metric`] so that deficient inputs can be reported
/// rather than rejected outright.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Input("distance matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input(format!(
                    "non-square matrix: row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Self::from_vec(n, data)
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::Input(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite distance at ({}, {})",
                k / n,
                k % n
            )));
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self::from_vec(n, data)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "distance matrix needs n >= 1");
        DistanceMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Largest absolute entry (0 for the all-zero matrix).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Matrix with entries `d[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        self.submatrix(perm)
    }

    /// Rows and columns restricted to `idx`, in that order.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let mut data = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        DistanceMatrix { n: k, data }
    }

    pub fn scaled(&self, s: f64) -> Self {
        DistanceMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// Errors unless the matrix is symmetric with zero diagonal and
    /// nonnegative entries; the triangle inequality is checked on request.
    pub fn validate(&self, tol: f64, check_triangle: bool) -> Result<()> {
        let report = validate_metric_with(self, tol, check_triangle);
        match report.first_failure() {
            None => Ok(()),
            Some(msg) => Err(Error::InvalidMetric(msg)),
        }
    }
}

/// A violated triangle inequality: `d[i][j] > d[i][via] + d[via][j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TriangleViolation {
    pub i: usize,
    pub j: usize,
    pub via: usize,
}

/// Outcome of checking the metric axioms; each field holds the first
/// offending location, if any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub tol: f64,
    pub asymmetry: Option<(usize, usize)>,
    pub nonzero_diagonal: Option<usize>,
    pub negative_entry: Option<(usize, usize)>,
    /// False when the triangle check was skipped.
    pub triangle_checked: bool,
    pub triangle: Option<TriangleViolation>,
}

impl ValidationReport {
    pub fn symmetric(&self) -> bool {
        self.asymmetry.is_none()
    }

    pub fn zero_diagonal(&self) -> bool {
        self.nonzero_diagonal.is_none()
    }

    pub fn nonnegative(&self) -> bool {
        self.negative_entry.is_none()
    }

    pub fn triangle_ok(&self) -> bool {
        self.triangle.is_none()
    }

    /// Symmetric, zero diagonal and nonnegative (the triangle inequality is
    /// not required for the covariance algebra).
    pub fn is_semimetric(&self) -> bool {
        self.symmetric() && self.zero_diagonal() && self.nonnegative()
    }

    pub fn is_metric(&self) -> bool {
        self.is_semimetric() && self.triangle_checked && self.triangle_ok()
    }

    pub fn first_failure(&self) -> Option<String> {
        if let Some(i) = self.nonzero_diagonal {
            return Some(format!("nonzero diagonal at i={i}"));
        }
        if let Some((i, j)) = self.asymmetry {
            return Some(format!("asymmetric at ({i}, {j})"));
        }
        if let Some((i, j)) = self.negative_entry {
            return Some(format!("negative distance at ({i}, {j})"));
        }
        self.triangle.map(|t| {
            format!(
                "triangle inequality fails at ({}, {}) via {}",
                t.i, t.j, t.via
            )
        })
    }
}

/// Full axiom check including the O(n³) triangle inequality.
pub fn validate_metric(m: &DistanceMatrix, tol: f64) -> ValidationReport {
    validate_metric_with(m, tol, true)
}

pub fn validate_metric_with(m: &DistanceMatrix, tol: f64, check_triangle: bool) -> ValidationReport {
    let n = m.n();
    let nonzero_diagonal = (0..n).find(|&i| m.get(i, i).abs() > tol);
    let mut asymmetry = None;
    let mut negative_entry = None;
    'outer: for i in 0..n {
        for j in 0..n {
            if asymmetry.is_none() && j > i && (m.get(i, j) - m.get(j, i)).abs() > tol {
                asymmetry = Some((i, j));
            }
            if negative_entry.is_none() && m.get(i, j) < -tol {
                negative_entry = Some((i, j));
            }
            if asymmetry.is_some() && negative_entry.is_some() {
                break 'outer;
            }
        }
    }
    let triangle = if check_triangle {
        find_triangle_violation(m, tol)
    } else {
        None
    };
    ValidationReport {
        n,
        tol,
        asymmetry,
        nonzero_diagonal,
        negative_entry,
        triangle_checked: check_triangle,
        triangle,
    }
}

fn find_triangle_violation(m: &DistanceMatrix, tol: f64) -> Option<TriangleViolation> {
    let n = m.n();
    for i in 0..n {
        for j in 0..n {
            let direct = m.get(i, j);
            for via in 0..n {
                if direct > m.get(i, via) + m.get(via, j) + tol {
                    return Some(TriangleViolation { i, j, via });
                }
            }
        }
    }
    None
}

fn vector_distance(spec: &MetricSpec, a: &[f64], b: &[f64]) -> f64 {
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    match spec {
        MetricSpec::Euclidean => diffs.map(|t| t * t).sum::<f64>().sqrt(),
        MetricSpec::Manhattan => diffs.sum(),
        MetricSpec::Chebyshev => diffs.fold(0.0, f64::max),
        MetricSpec::Minkowski { p } => diffs.map(|t| t.powf(*p)).sum::<f64>().powf(1.0 / p),
        MetricSpec::Discrete => {
            if a == b {
                0.0
            } else {
                1.0
            }
        }
        MetricSpec::Graph(_) | MetricSpec::Precomputed => unreachable!(),
    }
}

/// Pairwise distances between `points` under `spec`.
///
/// Rows are filled in parallel; every entry is computed independently so
/// the result does not depend on the thread count.
pub fn build_distance_matrix(points: &[Point], spec: &MetricSpec) -> Result<DistanceMatrix> {
    let n = points.len();
    if n == 0 {
        return Err(Error::Input("no points given".into()));
    }
    match spec {
        MetricSpec::Precomputed => Err(Error::InvalidArgument(
            "precomputed distances are loaded as a matrix, not built from points".into(),
        )),
        MetricSpec::Graph(graph) => {
            let labels = points
                .iter()
                .map(|p| match p {
                    Point::Label(l) if !l.is_empty() => Ok(l.as_str()),
                    _ => Err(Error::Input("graph metric needs nonempty vertex labels".into())),
                })
                .collect::<Result<Vec<_>>>()?;
            DistanceMatrix::from_vec(n, graph.shortest_paths(&labels)?)
        }
        MetricSpec::Discrete => {
            let data = (0..n * n)
                .map(|k| if points[k / n] == points[k % n] { 0.0 } else { 1.0 })
                .collect();
            DistanceMatrix::from_vec(n, data)
        }
        _ => {
            if let MetricSpec::Minkowski { p } = spec {
                if p.is_nan() || *p < 1.0 || !p.is_finite() {
                    return Err(Error::InvalidExponent(*p));
                }
            }
            let coords = points
                .iter()
                .map(|p| match p {
                    Point::Vector(c) => Ok(c.as_slice()),
                    Point::Label(_) => Err(Error::Input(format!(
                        "{} metric needs coordinate points, got a label",
                        spec.name()
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            let dim = coords[0].len();
            for (index, c) in coords.iter().enumerate() {
                if c.len() != dim {
                    return Err(Error::DimensionMismatch {
                        index,
                        expected: dim,
                        found: c.len(),
                    });
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Input(format!("point {index} has non-finite coordinates")));
                }
            }
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .map(|j| match j.cmp(&i) {
                            std::cmp::Ordering::Equal => 0.0,
                            // Always evaluate with the smaller index first so
                            // d[i][j] and d[j][i] are the same float.
                            std::cmp::Ordering::Greater => vector_distance(spec, coords[i], coords[j]),
                            std::cmp::Ordering::Less => vector_distance(spec, coords[j], coords[i]),
                        })
                        .collect()
                })
                .collect();
            DistanceMatrix::from_rows(rows)
        }
    }
}

/// On-disk matrix encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Json,
}

impl MatrixFormat {
    /// Guesses from the file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => MatrixFormat::Json,
            _ => MatrixFormat::Csv,
        }
    }
}

/// JSON matrix schema `{"n": int, "d": [[...]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub d: Vec<Vec<f64>>,
}

impl From<&DistanceMatrix> for MatrixJson {
    fn from(m: &DistanceMatrix) -> Self {
        MatrixJson {
            n: m.n(),
            d: m.to_rows(),
        }
    }
}

impl TryFrom<MatrixJson> for DistanceMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.d.len() != j.n {
            return Err(Error::Input(format!(
                "matrix declares n={} but has {} rows",
                j.n,
                j.d.len()
            )));
        }
        DistanceMatrix::from_rows(j.d)
    }
}

/// Loads a distance matrix from a CSV grid or JSON document.
///
/// Only shape and finiteness are enforced here; callers decide how strictly
/// to validate via [`DistanceMatrix::validate`].
pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<DistanceMatrix> {
    let text = fs::read_to_string(path)?;
    match format {
        MatrixFormat::Json => parse_matrix_json(&text),
        MatrixFormat::Csv => parse_matrix_csv(&text, path),
    }
}

pub fn parse_matrix_json(text: &str) -> Result<DistanceMatrix> {
    let j: MatrixJson = serde_json::from_str(text)?;
    DistanceMatrix::try_from(j)
}

/// Parses a square numeric CSV grid. `path` is only used in error messages.
pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<DistanceMatrix> {
    let records = read_numeric_csv(text, path, false)?;
    let n = records.len();
    let width = records.first().map_or(0, |r| r.values.len());
    if n != width {
        return Err(Error::Input(format!(
            "non-square matrix: {n} rows but {width} columns"
        )));
    }
    DistanceMatrix::from_rows(records.into_iter().map(|r| r.values).collect())
}

struct NumericRecord {
    values: Vec<f64>,
}

/// Reads a rectangular numeric CSV. With `allow_header`, a first row that
/// does not parse as numbers is skipped.
fn read_numeric_csv(text: &str, path: &Path, allow_header: bool) -> Result<Vec<NumericRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out: Vec<NumericRecord> = Vec::new();
    let mut width = None;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            column: 0,
            message: e.to_string(),
        })?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(c, f)| f.parse::<f64>().map_err(|_| c))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if allow_header && out.is_empty() && width.is_none() => {
                width = Some(record.len());
                continue;
            }
            Err(c) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: c + 1,
                    message: format!("not a number: {:?}", &record[c]),
                });
            }
        };
        if let Some(c) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                column: c + 1,
                message: "non-finite value".into(),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line,
                    column: values.len().min(w) + 1,
                    message: format!("ragged row: expected {w} fields, found {}", values.len()),
                });
            }
            Some(_) => {}
        }
        out.push(NumericRecord { values });
    }
    if out.is_empty() {
        return Err(Error::Input(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Reads a CSV point file: one observation per row, numeric coordinate
/// columns, optional header row.
pub fn load_points(path: &Path) -> Result<Vec<Point>> {
    let text = fs::read_to_string(path)?;
    parse_points_csv(&text, path)
}

pub fn parse_points_csv(text: &str, path: &Path) -> Result<Vec<Point>> {
    Ok(read_numeric_csv(text, path, true)?
        .into_iter()
        .map(|r| Point::Vector(r.values))
        .collect())
}

/// Reads one label per line (first CSV column) for graph or discrete metrics.
pub fn load_labels(path: &Path) -> Result<Vec<Point>> {
    let text = fs::read_to_string(path)?;
    let labels: Vec<Point> = text
        .lines()
        .map(|l| l.split(',').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(Point::label)
        .collect();
    if labels.is_empty() {
        return Err(Error::Input(format!("{}: no labels", path.display())));
    }
    Ok(labels)
}

/// Reads a graph edge list `u,v[,w]` (weight defaults to 1).
pub fn load_graph(path: &Path) -> Result<GraphSpec> {
    let text = fs::read_to_string(path)?;
    let mut edges = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parse_err = |column: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line: k + 1,
            column,
            message,
        };
        let weight = match fields.as_slice() {
            [_, _] => 1.0,
            [_, _, w] => match w.parse::<f64>() {
                Ok(w) => w,
                // header row
                Err(_) if edges.is_empty() => continue,
                Err(_) => return Err(parse_err(3, format!("bad edge weight {w:?}"))),
            },
            _ => return Err(parse_err(1, "expected u,v or u,v,w".into())),
        };
        edges.push((fields[0].to_string(), fields[1].to_string(), weight));
    }
    Ok(GraphSpec::new(edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| Point::vector(vec![x])).collect()
    }

    /// Shortest path lengths by enumerating every simple path (test oracle).
    fn brute_force_paths(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<f64>> {
        fn walk(
            at: usize,
            target: usize,
            len: f64,
            seen: &mut Vec<bool>,
            adj: &[Vec<usize>],
            best: &mut f64,
        ) {
            if at == target {
                *best = best.min(len);
                return;
            }
            for &next in &adj[at] {
                if !seen[next] {
                    seen[next] = true;
                    walk(next, target, len + 1.0, seen, adj, best);
                    seen[next] = false;
                }
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut seen = vec![false; n];
                        seen[i] = true;
                        let mut best = f64::INFINITY;
                        walk(i, j, 0.0, &mut seen, &adj, &mut best);
                        best
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn euclidean_on_line() {
        let m = build_distance_matrix(&line(&[0.0, 3.0, 4.0]), &MetricSpec::Euclidean).unwrap();
        assert_eq!(
            m.to_rows(),
            vec![vec![0.0, 3.0, 4.0], vec![3.0, 0.0, 1.0], vec![4.0, 1.0, 0.0]]
        );
    }

    #[test]
    fn discrete_labels() {
        let pts = vec![Point::label("a"), Point::label("b")];
        let m = build_distance_matrix(&pts, &MetricSpec::Discrete).unwrap();
        assert_eq!(m.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn k23_shortest_paths_match_enumeration() {
        // a1=0, a2=1, b1=2, b2=3, b3=4
        let idx_edges: Vec<(usize, usize)> =
            (0..2).flat_map(|a| (2..5).map(move |b| (a, b))).collect();
        let names = ["a1", "a2", "b1", "b2", "b3"];
        let spec = MetricSpec::Graph(GraphSpec::unit(
            &idx_edges
                .iter()
                .map(|&(a, b)| (names[a], names[b]))
                .collect::<Vec<_>>(),
        ));
        let pts: Vec<Point> = names.iter().map(|s| Point::label(*s)).collect();
        let m = build_distance_matrix(&pts, &spec).unwrap();
        assert_eq!(m.to_rows(), brute_force_paths(5, &idx_edges));
        assert_eq!(m.get(0, 2), 1.0);
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(3, 4), 2.0);
    }

    #[test]
    fn path_graph_distances_are_index_gaps() {
        let names: Vec<String> = (0..7).map(|i| format!("v{i}")).collect();
        let edges: Vec<(&str, &str)> = names
            .windows(2)
            .map(|w| (w[0].as_str(), w[1].as_str()))
            .collect();
        let spec = MetricSpec::Graph(GraphSpec::unit(&edges));
        let pts: Vec<Point> = names.iter().map(Point::label).collect();
        let m = build_distance_matrix(&pts, &spec).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m.get(i, j), (i as f64 - j as f64).abs());
            }
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let spec = MetricSpec::Graph(GraphSpec::unit(&[("a", "b"), ("c", "d")]));
        let err = build_distance_matrix(&[Point::label("a"), Point::label("b")], &spec).unwrap_err();
        assert!(matches!(err, Error::DisconnectedGraph(..)));
    }

    #[test]
    fn unknown_vertex_is_rejected() {
        let spec = MetricSpec::Graph(GraphSpec::unit(&[("a", "b")]));
        assert!(build_distance_matrix(&[Point::label("z")], &spec).is_err());
    }

    #[test]
    fn dimension_mismatch_and_bad_exponent() {
        let pts = vec![Point::vector(vec![0.0, 1.0]), Point::vector(vec![1.0])];
        assert!(matches!(
            build_distance_matrix(&pts, &MetricSpec::Euclidean),
            Err(Error::DimensionMismatch { index: 1, .. })
        ));
        assert!(matches!(
            build_distance_matrix(&line(&[0.0, 1.0]), &MetricSpec::Minkowski { p: 0.5 }),
            Err(Error::InvalidExponent(_))
        ));
    }

    #[test]
    fn validation_examples() {
        let ok = DistanceMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(validate_metric(&ok, 1e-12).is_metric());

        let diag = DistanceMatrix::from_rows(vec![vec![0.0, 5.0], vec![5.0, 0.1]]).unwrap();
        let r = validate_metric(&diag, 1e-12);
        assert_eq!(r.nonzero_diagonal, Some(1));
        assert!(r.symmetric() && r.nonnegative());

        let tri = DistanceMatrix::from_rows(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ])
        .unwrap();
        let r = validate_metric(&tri, 1e-12);
        assert!(r.is_semimetric());
        assert_eq!(r.triangle, Some(TriangleViolation { i: 0, j: 2, via: 1 }));
        assert!(validate_metric_with(&tri, 1e-12, false).triangle.is_none());
    }

    #[test]
    fn csv_matrix_parsing() {
        let p = Path::new("m.csv");
        let m = parse_matrix_csv("0,1\n1,0\n", p).unwrap();
        assert_eq!(m.to_rows(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);

        match parse_matrix_csv("0,1\n1", p).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("ragged"));
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            parse_matrix_csv("0,1\n1,x\n", p),
            Err(Error::Parse { line: 2, column: 2, .. })
        ));
        assert!(parse_matrix_csv("0,1,2\n1,0,1\n", p).is_err());
    }

    #[test]
    fn json_matrix_parsing() {
        let m = parse_matrix_json(r#"{"n":1,"d":[[0]]}"#).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 0.0);
        assert!(parse_matrix_json(r#"{"n":2,"d":[[0]]}"#).is_err());
    }

    #[test]
    fn points_csv_with_header() {
        let pts = parse_points_csv("x,y\n0,1\n2,3\n", Path::new("p.csv")).unwrap();
        assert_eq!(pts, vec![Point::vector(vec![0.0, 1.0]), Point::vector(vec![2.0, 3.0])]);
        let pts = parse_points_csv("0.5\n1.5\n", Path::new("p.csv")).unwrap();
        assert_eq!(pts.len(), 2);
    }

    #[test]
    fn metric_names_parse() {
        assert_eq!(MetricSpec::parse("Euclidean").unwrap(), MetricSpec::Euclidean);
        assert_eq!(
            MetricSpec::parse("minkowski:3").unwrap(),
            MetricSpec::Minkowski { p: 3.0 }
        );
        assert!(MetricSpec::parse("hamming").is_err());
    }

    fn point_sets() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..4).prop_flat_map(|dim| {
            prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), 1..12)
        })
    }

    fn to_points(raw: &[Vec<f64>]) -> Vec<Point> {
        raw.iter().cloned().map(Point::Vector).collect()
    }

    proptest! {
        #[test]
        fn builtin_metrics_pass_validation(raw in point_sets(), p in 1.0f64..4.0) {
            let pts = to_points(&raw);
            for spec in [
                MetricSpec::Euclidean,
                MetricSpec::Manhattan,
                MetricSpec::Chebyshev,
                MetricSpec::Minkowski { p },
                MetricSpec::Discrete,
            ] {
                let m = build_distance_matrix(&pts, &spec).unwrap();
                let r = validate_metric(&m, 1e-12);
                prop_assert!(r.is_metric(), "{}: {:?}", spec.name(), r.first_failure());
            }
        }

        #[test]
        fn permutation_equivariance(raw in point_sets(), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let n = raw.len();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let pts = to_points(&raw);
            let shuffled: Vec<Point> = perm.iter().map(|&i| pts[i].clone()).collect();
            for spec in [MetricSpec::Euclidean, MetricSpec::Manhattan, MetricSpec::Chebyshev] {
                let m = build_distance_matrix(&pts, &spec).unwrap();
                let mp = build_distance_matrix(&shuffled, &spec).unwrap();
                prop_assert_eq!(mp, m.permuted(&perm));
            }
        }

        #[test]
        fn minkowski_special_cases(raw in point_sets()) {
            let pts = to_points(&raw);
            let e = build_distance_matrix(&pts, &MetricSpec::Euclidean).unwrap();
            let m2 = build_distance_matrix(&pts, &MetricSpec::Minkowski { p: 2.0 }).unwrap();
            let l1 = build_distance_matrix(&pts, &MetricSpec::Manhattan).unwrap();
            let m1 = build_distance_matrix(&pts, &MetricSpec::Minkowski { p: 1.0 }).unwrap();
            for (a, b) in e.as_slice().iter().zip(m2.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
            for (a, b) in l1.as_slice().iter().zip(m1.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }
}
