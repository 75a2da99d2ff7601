use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdcov::inference::spectral_test;
use mdcov::metric::{load_graph, load_labels, load_points, METRIC_TOL, TRIANGLE_CHECK_MAX_N};
use mdcov::negtype::NEGTYPE_TOL;
use mdcov::population::JointMeasureJson;
use mdcov::{
    big_d, construct_counterexample, dcor_v, dcov_u, dcov_v, dvar_v, find_null_measure_pair,
    load_matrix, negative_type_check, permutation_test, population_dcor, population_dcov,
    population_dvar, product_measure, schoenberg_embed, DistanceMatrix, Error, MatrixFormat,
    MetricSpec, PairedSample, Statistic,
};
use serde_json::{json, Map, Value};

const FOUR_CYCLE: &str = include_str!("../fixtures/four_cycle.json");

#[derive(Parser)]
#[command(name = "mdcov", version, about = "Distance covariance and correlation in metric spaces")]
struct Cli {
    /// Worker threads for parallel sections; results do not depend on it.
    #[arg(long, global = true, env = "MDCOV_THREADS")]
    threads: Option<usize>,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample distance covariance, correlation and variances.
    Compute(PairArgs),
    /// Permutation (or experimental spectral) test of independence.
    Test(TestArgs),
    /// Negative-type check of one sample.
    Negtype(SpaceArgs),
    /// Euclidean embedding of (X, sqrt d).
    Embed(EmbedArgs),
    /// Pair of distinct probability measures with D(nu1 - nu2) = 0, if the sample has one.
    Nullpair(SpaceArgs),
    /// Exact population quantities of a finite joint measure given as JSON.
    Population(PopulationArgs),
    /// Zero distance covariance without independence, on a space lacking strong negative type.
    DemoCounterexample(DemoArgs),
}

#[derive(Args)]
struct PairArgs {
    /// Observations of X: a point CSV, a label file, or a distance matrix (precomputed).
    #[arg(long)]
    x: PathBuf,
    /// Observations of Y, paired row by row with X.
    #[arg(long)]
    y: PathBuf,
    /// euclidean, manhattan, chebyshev, minkowski:<p>, discrete, graph, precomputed.
    #[arg(long, default_value = "euclidean")]
    metric_x: String,
    #[arg(long, default_value = "euclidean")]
    metric_y: String,
    /// Edge list `u,v[,w]` for --metric-x graph.
    #[arg(long)]
    graph_x: Option<PathBuf>,
    #[arg(long)]
    graph_y: Option<PathBuf>,
    #[command(flatten)]
    validation: ValidationArgs,
}

#[derive(Args, Clone, Copy)]
struct ValidationArgs {
    /// Accept precomputed matrices that fail the triangle inequality.
    #[arg(long)]
    allow_non_metric: bool,
    /// Skip the O(n³) triangle check (on by default for n ≤ 512).
    #[arg(long)]
    no_triangle_check: bool,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Number of permutations (or spectral draws).
    #[arg(long = "R", short = 'R', default_value_t = 999)]
    replications: usize,
    #[arg(long, env = "MDCOV_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "dcov_v")]
    stat: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Permutation)]
    method: MethodArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Permutation,
    Spectral,
}

#[derive(Args)]
struct SpaceArgs {
    /// Sample file: a point CSV, a label file, or a distance matrix (CSV or JSON).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "precomputed")]
    metric: String,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Tolerance relative to the largest distance.
    #[arg(long, default_value_t = NEGTYPE_TOL)]
    tol: f64,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    space: SpaceArgs,
    /// Index of the base point mapped to the origin.
    #[arg(long, default_value_t = 0)]
    base: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct PopulationArgs {
    /// Joint measure: {"spaceX": ..., "spaceY": ..., "weights": [[...]]}.
    #[arg(long)]
    measure: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    /// Distance matrix of the X-side space; defaults to the bundled 4-cycle.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = NEGTYPE_TOL)]
    tol: f64,
}

/// A failed command: the library error plus the exit code it maps to.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Input(_) => "input",
            Error::Parse { .. } => "parse",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::InvalidExponent(_) => "invalid_exponent",
            Error::DisconnectedGraph(..) => "disconnected_graph",
            Error::InvalidMetric(_) => "invalid_metric",
            Error::NotProbability(_) => "not_probability",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::SampleTooSmall { .. } => "sample_too_small",
            Error::SampleTooLarge { .. } => "sample_too_large",
            Error::Asymmetric { .. } => "asymmetric",
            Error::NotNegativeType(_) => "not_negative_type",
            Error::Counterexample(_) => "counterexample",
            Error::InvalidArgument(_) => "invalid_argument",
        };
        Failure {
            code: if e.is_input_error() { 2 } else { 3 },
            kind,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        kind: "usage",
        message: message.into(),
    }
}

fn warn(message: &str) {
    eprintln!("{}", json!({ "warning": message }));
}

fn load_side(
    path: &Path,
    metric: &str,
    graph: Option<&Path>,
    validation: ValidationArgs,
) -> Result<DistanceMatrix, Failure> {
    let spec = if metric == "graph" {
        let edges = graph.ok_or_else(|| usage("--metric graph needs an edge list (--graph-x/--graph-y/--graph)"))?;
        MetricSpec::Graph(load_graph(edges)?)
    } else {
        MetricSpec::parse(metric)?
    };
    match spec {
        MetricSpec::Precomputed => {
            let m = load_matrix(path, MatrixFormat::from_path(path))?;
            let triangle = !validation.allow_non_metric
                && !validation.no_triangle_check
                && m.n() <= TRIANGLE_CHECK_MAX_N;
            m.validate(METRIC_TOL, triangle)?;
            Ok(m)
        }
        MetricSpec::Graph(_) => Ok(mdcov::build_distance_matrix(&load_labels(path)?, &spec)?),
        MetricSpec::Discrete => {
            let points = load_points(path).or_else(|_| load_labels(path))?;
            Ok(mdcov::build_distance_matrix(&points, &spec)?)
        }
        _ => Ok(mdcov::build_distance_matrix(&load_points(path)?, &spec)?),
    }
}

fn load_pair(a: &PairArgs) -> Result<PairedSample, Failure> {
    let dx = load_side(&a.x, &a.metric_x, a.graph_x.as_deref(), a.validation)?;
    let dy = load_side(&a.y, &a.metric_y, a.graph_y.as_deref(), a.validation)?;
    Ok(PairedSample::new(dx, dy)?)
}

fn load_space(a: &SpaceArgs) -> Result<DistanceMatrix, Failure> {
    let validation = ValidationArgs {
        allow_non_metric: false,
        no_triangle_check: false,
    };
    load_side(&a.input, &a.metric, a.graph.as_deref(), validation)
}

fn cmd_compute(a: &PairArgs) -> Result<Value, Failure> {
    let s = load_pair(a)?;
    let n = s.n();
    let mut out = Map::new();
    out.insert("n".into(), json!(n));
    out.insert("dcov_v".into(), json!(dcov_v(&s)));
    if n >= mdcov::estimators::U_MIN_N {
        out.insert("dcov_u".into(), json!(dcov_u(&s)?));
    } else {
        warn(&format!("dcov_u omitted: needs n >= {}, got {n}", mdcov::estimators::U_MIN_N));
    }
    out.insert("dcor_v".into(), json!(dcor_v(&s)));
    out.insert("dvar_x".into(), json!(dvar_v(s.dx())));
    out.insert("dvar_y".into(), json!(dvar_v(s.dy())));
    Ok(Value::Object(out))
}

fn cmd_test(a: &TestArgs) -> Result<Value, Failure> {
    let stat = Statistic::parse(&a.stat).map_err(|e| usage(e.to_string()))?;
    if a.replications == 0 {
        return Err(usage("--R must be at least 1"));
    }
    let s = load_pair(&a.pair)?;
    let result = match a.method {
        MethodArg::Permutation => permutation_test(&s, stat, a.replications, a.seed)?,
        MethodArg::Spectral => {
            if stat != Statistic::DcovV {
                return Err(usage("the spectral method only calibrates dcov_v"));
            }
            spectral_test(&s, a.replications, a.seed)?
        }
    };
    let mut out = serde_json::to_value(&result).map_err(Error::from)?;
    if let MethodArg::Spectral = a.method {
        out["experimental"] = json!(true);
        warn("spectral calibration is experimental; the permutation test is authoritative");
    }
    Ok(out)
}

fn cmd_negtype(a: &SpaceArgs) -> Result<Value, Failure> {
    let m = load_space(a)?;
    let report = negative_type_check(&m, a.tol)?;
    let mut out = serde_json::to_value(report.to_json()).map_err(Error::from)?;
    out["status"] = json!(if report.is_negative_type_on_sample {
        "satisfied"
    } else {
        "violated"
    });
    Ok(out)
}

fn cmd_embed(a: &EmbedArgs) -> Result<Value, Failure> {
    let m = load_space(&a.space)?;
    let e = schoenberg_embed(&m, a.base)?;
    Ok(serde_json::to_value(&e).map_err(Error::from)?)
}

fn embedding_csv(v: &Value) -> String {
    let mut out = String::new();
    for row in v["coords"].as_array().into_iter().flatten() {
        let cells: Vec<String> = row
            .as_array()
            .into_iter()
            .flatten()
            .map(|c| format!("{:.16e}", c.as_f64().unwrap_or(f64::NAN)))
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn cmd_nullpair(a: &SpaceArgs) -> Result<Value, Failure> {
    let m = load_space(a)?;
    Ok(match find_null_measure_pair(&m, a.tol)? {
        None => json!({ "found": false, "n": m.n() }),
        Some((nu1, nu2)) => {
            let delta = nu1.difference(&nu2)?;
            json!({
                "found": true,
                "n": m.n(),
                "nu1": nu1.weights(),
                "nu2": nu2.weights(),
                "sup_gap": nu1.sup_distance(&nu2),
                "form": big_d(&delta),
            })
        }
    })
}

fn cmd_population(a: &PopulationArgs) -> Result<Value, Failure> {
    let text = fs::read_to_string(&a.measure)?;
    let doc: JointMeasureJson = serde_json::from_str(&text).map_err(Error::from)?;
    let theta = doc.to_measure()?;
    let mx = theta.marginal_x()?;
    let my = theta.marginal_y()?;
    let product = product_measure(&mx, &my)?;
    Ok(json!({
        "dcov": population_dcov(&theta)?,
        "dcor": population_dcor(&theta)?,
        "dvar_x": population_dvar(&mx)?,
        "dvar_y": population_dvar(&my)?,
        "D_x": big_d(&mx),
        "D_y": big_d(&my),
        "marginal_x": mx.weights(),
        "marginal_y": my.weights(),
        "product_sup_gap": theta.sup_distance(&product),
    }))
}

fn cmd_demo(a: &DemoArgs) -> Result<Value, Failure> {
    let space = match &a.input {
        Some(path) => load_matrix(path, MatrixFormat::from_path(path))?,
        None => mdcov::metric::parse_matrix_json(FOUR_CYCLE)?,
    };
    let source = a
        .input
        .as_ref()
        .map_or("bundled 4-cycle".to_string(), |p| p.display().to_string());
    let (nu1, nu2) = find_null_measure_pair(&space, a.tol)?.ok_or_else(|| {
        Failure::from(Error::Counterexample(
            "the space has strong negative type on this sample: no null direction".into(),
        ))
    })?;
    let delta = nu1.difference(&nu2)?;
    let form = big_d(&delta);
    let theta = construct_counterexample(&space, &nu1, &nu2)?;
    let dcov = population_dcov(&theta)?;
    let mx = theta.marginal_x()?;
    let my = theta.marginal_y()?;
    let gap = theta.sup_distance(&product_measure(&mx, &my)?);
    let narrative = vec![
        format!("Space: {source} with {} points.", space.n()),
        format!(
            "The distance form vanishes on the sum-zero direction nu1 - nu2, with nu1 = {:?} and nu2 = {:?}.",
            nu1.weights(),
            nu2.weights()
        ),
        format!("D(nu1 - nu2) = {form:e}, although sup|nu1 - nu2| = {}.", nu1.sup_distance(&nu2)),
        "Let X be uniform on two points and, given X, draw Y from nu1 or nu2.".to_string(),
        format!("Then dcov(theta) = {dcov:e}."),
        format!("But theta is not the product of its marginals: sup|theta - mu x nu| = {gap}."),
        "Zero distance covariance therefore does not imply independence on this space.".to_string(),
    ];
    Ok(json!({
        "n": space.n(),
        "nu1": nu1.weights(),
        "nu2": nu2.weights(),
        "null_form": form,
        "theta": JointMeasureJson::from_measure(&theta),
        "dcov_theta": dcov,
        "marginal_x": mx.weights(),
        "marginal_y": my.weights(),
        "product_sup_gap": gap,
        "independent": false,
        "narrative": narrative,
    }))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let (value, csv) = match &cli.command {
        Command::Compute(a) => (cmd_compute(a)?, None),
        Command::Test(a) => (cmd_test(a)?, None),
        Command::Negtype(a) => (cmd_negtype(a)?, None),
        Command::Embed(a) => {
            let v = cmd_embed(a)?;
            let csv = matches!(a.format, Format::Csv).then(|| embedding_csv(&v));
            (v, csv)
        }
        Command::Nullpair(a) => (cmd_nullpair(a)?, None),
        Command::Population(a) => (cmd_population(a)?, None),
        Command::DemoCounterexample(a) => (cmd_demo(a)?, None),
    };
    let text = match csv {
        Some(csv) => csv,
        None => {
            let mut s = serde_json::to_string_pretty(&value).map_err(Error::from)?;
            s.push('\n');
            s
        }
    };
    match &cli.output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(usage(format!("cannot start thread pool: {e}"))),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!(
                "{}",
                json!({ "error": f.kind, "message": f.message, "exit_code": f.code })
            );
            ExitCode::from(f.code)
        }
    }
}
