//! Command-line front end: `train`, `eval` and `transform`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
//! Output files are written only after the whole command has succeeded.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::boost::{train_with, TrainConfig};
use crate::constraints::{factors_from_triplets, generate_triplets, Dataset};
use crate::datasets::{
    bundled_by_name, concentric_circles, load_delimited, to_delimited, CirclesConfig, ParseOptions,
};
use crate::error::{Error, Result};
use crate::eval::{
    classification_error, classification_error_with_model, retrieval_precision, v_sweep, Compare,
    ExperimentSpec,
};
use crate::metric::MetricModel;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const DEFAULT_V_GRID: [f64; 5] = [1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

#[derive(Debug, Parser)]
#[command(
    name = "mahal-boost",
    version,
    about = "Boosted Mahalanobis metric learning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a metric from labeled data and write the model file.
    Train(TrainArgs),
    /// Run a kNN, retrieval or v-sweep experiment and print a results table.
    Eval(EvalArgs),
    /// Project a dataset through a model's top eigen-directions.
    Transform(TransformArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Synthetic {
    Circles,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Delimited feature file, one point per row.
    #[arg(long, conflicts_with_all = ["dataset", "synthetic"])]
    pub data: Option<PathBuf>,
    /// Bundled dataset: iris, wine or breast-cancer.
    #[arg(long, conflicts_with = "synthetic")]
    pub dataset: Option<String>,
    /// Bundled generator; `--seed` seeds it.
    #[arg(long, value_enum)]
    pub synthetic: Option<Synthetic>,
    /// Field delimiter of `--data`.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Label column of `--data`; negative counts from the end.
    #[arg(long, default_value_t = -1, allow_hyphen_values = true)]
    pub label_col: i64,
    /// `--data` starts with a header line.
    #[arg(long, default_value_t = false)]
    pub header: bool,
}

impl DataArgs {
    fn load(&self, seed: u64) -> Result<Dataset> {
        if let Some(path) = &self.data {
            let opts = ParseOptions {
                delimiter: self.delimiter,
                label_column: self.label_col,
                has_header: self.header,
            };
            return load_delimited(path, &opts).map_err(|e| match e {
                Error::Io(io) => {
                    Error::InvalidInput(format!("cannot read {}: {io}", path.display()))
                }
                other => other,
            });
        }
        if let Some(name) = &self.dataset {
            return bundled_by_name(name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown bundled dataset {name:?}")));
        }
        match self.synthetic {
            Some(Synthetic::Circles) => concentric_circles(&CirclesConfig {
                seed,
                ..CirclesConfig::default()
            }),
            None => Err(Error::InvalidInput(
                "one of --data, --dataset or --synthetic is required".into(),
            )),
        }
    }
}

#[derive(Debug, Args)]
pub struct BoostArgs {
    /// Maximum boosting rounds.
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Bisection tolerance on the step weight.
    #[arg(long, default_value_t = 1e-9)]
    pub bisect_tol: f64,
    /// Relative residual tolerance of the eigen solver.
    #[arg(long, default_value_t = 1e-8)]
    pub eig_tol: f64,
    /// Largest step weight tried before giving up on a bracket.
    #[arg(long, default_value_t = 2f64.powi(60))]
    pub w_cap: f64,
    /// Operator applications allowed per eigen solve [default: 10·D + 1000].
    #[arg(long)]
    pub eig_max_iter: Option<usize>,
    /// Targets and impostors mined per point.
    #[arg(short = 'k', long = "k", default_value_t = 3)]
    pub triplet_k: usize,
}

impl BoostArgs {
    fn config(&self, v: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            v,
            max_iters: self.max_iters,
            bisect_tol: self.bisect_tol,
            eig_tol: self.eig_tol,
            w_cap: self.w_cap,
            eig_max_iter: self.eig_max_iter,
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Trace regularization weight.
    #[arg(long, default_value_t = 1e-7)]
    pub v: f64,
    #[command(flatten)]
    pub boost: BoostArgs,
    /// Seed for the eigen solver's start vector and synthetic data.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration training log to write.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Stream the training log to stderr.
    #[arg(short, long, default_value_t = false)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Knn,
    Retrieval,
    Vsweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Boost,
    Euclidean,
    Both,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub boost: BoostArgs,
    /// Experiment to run.
    #[arg(long, value_enum, default_value_t = Mode::Knn)]
    pub mode: Mode,
    /// Distances to score.
    #[arg(long, value_enum, default_value_t = MetricArg::Both)]
    pub metric: MetricArg,
    /// Training points per split [default: 70% of the data].
    #[arg(long)]
    pub n_train: Option<usize>,
    /// Test points per split [default: the rest].
    #[arg(long)]
    pub n_test: Option<usize>,
    /// Random splits; run `r` uses seed `seed + r`.
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Neighbors in the kNN classifier.
    #[arg(long, default_value_t = 3)]
    pub knn: usize,
    /// Project onto this many principal components of each training split.
    #[arg(long)]
    pub pca_dim: Option<usize>,
    /// Trace regularization weight; a comma-separated grid for `--mode vsweep`
    /// [default: 1e-7, or 1e-8,1e-7,1e-6,1e-5,1e-4 when sweeping].
    #[arg(long, value_delimiter = ',')]
    pub v: Vec<f64>,
    /// Comma-separated precision cutoffs for `--mode retrieval`.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
    pub cutoffs: Vec<usize>,
    /// Query class for `--mode retrieval` [default: smallest label].
    #[arg(long, allow_hyphen_values = true)]
    pub target_label: Option<i64>,
    /// Score this fixed model instead of training one per split (`--mode knn` only).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Base seed for splits, the eigen solver and synthetic data.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the table here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model file from `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Output dimension [default: the model's dimension].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Seed for `--synthetic`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DATA
    }
}

/// Writes through a sibling temp file so a failed write leaves nothing behind.
fn write_file(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let res = fs::write(&tmp, contents).and_then(|_| fs::rename(&tmp, path));
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

fn run_train(args: &TrainArgs) -> Result<String> {
    let cfg = args.boost.config(args.v, args.seed);
    cfg.validate()?;
    let data = args.data.load(args.seed)?;
    let triplets = generate_triplets(&data, args.boost.triplet_k)?;
    let factors = factors_from_triplets(&data, &triplets)?;
    let mut log = String::new();
    let report = train_with(&factors, &cfg, |round| {
        let line = round.record.log_line();
        if args.verbose {
            eprintln!("{line}");
        }
        log.push_str(&line);
        log.push('\n');
    })?;
    let mut model = report.model;
    model.meta.dataset_fingerprint = Some(data.fingerprint());
    let json = model.to_json()?;
    write_file(&args.out, &json)?;
    if let Some(path) = &args.log {
        write_file(path, &log)?;
    }
    Ok(format!(
        "points={} dim={} triplets={} iterations={} converged={} trace={:.6e} model={}\n",
        data.len(),
        data.dim(),
        triplets.len(),
        model.meta.iterations,
        model.meta.converged,
        model.weight_sum(),
        args.out.display()
    ))
}

fn run_eval(args: &EvalArgs) -> Result<String> {
    let data = args.data.load(args.seed)?;
    let n = data.len();
    let n_train = args.n_train.unwrap_or(((n as f64) * 0.7).round() as usize);
    let n_test = match args.n_test {
        Some(t) => t,
        None => n.checked_sub(n_train).ok_or_else(|| {
            Error::InvalidInput(format!("--n-train {n_train} exceeds {n} points"))
        })?,
    };
    let v_grid = match (args.mode, args.v.as_slice()) {
        (Mode::Vsweep, []) => DEFAULT_V_GRID.to_vec(),
        (Mode::Vsweep, grid) => grid.to_vec(),
        (_, []) => vec![TrainConfig::default().v],
        (_, [v]) => vec![*v],
        _ => {
            return Err(Error::InvalidInput(
                "a list of --v values needs --mode vsweep".into(),
            ))
        }
    };
    let spec = ExperimentSpec {
        n_train,
        n_test,
        n_runs: args.runs,
        knn_k: args.knn,
        triplet_k: args.boost.triplet_k,
        pca_dim: args.pca_dim,
        train: args.boost.config(v_grid[0], args.seed),
        seed: args.seed,
        compare: match args.metric {
            MetricArg::Boost => Compare::Boost,
            MetricArg::Euclidean => Compare::Euclidean,
            MetricArg::Both => Compare::Both,
        },
    };
    if args.model.is_some() && args.mode != Mode::Knn {
        return Err(Error::InvalidInput(
            "--model is only supported with --mode knn".into(),
        ));
    }
    let table = match args.mode {
        Mode::Knn => {
            let result = match &args.model {
                Some(path) => {
                    classification_error_with_model(&data, &spec, &MetricModel::load(path)?)?
                }
                None => classification_error(&data, &spec)?,
            };
            for r in &result.runs {
                eprintln!("run={} time_s={:.3}", r.run, r.elapsed_secs);
            }
            result.to_table()
        }
        Mode::Retrieval => {
            let target = match args.target_label {
                Some(t) => t,
                None => *data
                    .class_counts()
                    .keys()
                    .next()
                    .expect("dataset has points"),
            };
            retrieval_precision(&data, &spec, target, &args.cutoffs)?.to_table()
        }
        Mode::Vsweep => v_sweep(&data, &spec, &v_grid)?.to_table(),
    };
    if let Some(path) = &args.out {
        write_file(path, &table)?;
    }
    Ok(table)
}

fn run_transform(args: &TransformArgs) -> Result<String> {
    let model = MetricModel::load(&args.model)?;
    let data = args.data.load(args.seed)?;
    let projected = model.transform_dataset(&data, args.dim.unwrap_or(model.dim()))?;
    let text = to_delimited(&projected);
    match &args.out {
        Some(path) => {
            write_file(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Transform(a) => run_transform(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
