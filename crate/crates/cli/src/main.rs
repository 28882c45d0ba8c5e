//! `svmcs` command-line interface.
//!
//! Exit codes: 0 success, 2 invalid configuration or input, 3 solver
//! failure, 1 anything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use svmcs::criterion::{label_grid, Label, LabeledGrid};
use svmcs::experiment::{
    classify_dense, run_ols, run_synthetic, write_ols_csv, write_point_csv, write_svg,
    CriterionSpec, GridSizeRule, OlsConfig, Reference, SyntheticConfig,
};
use svmcs::grid::{generate, Hyperbox, SequenceKind};
use svmcs::io;
use svmcs::refine::{refine, RefineConfig};
use svmcs::svm::{batch_predict, train, TrainedClassifier};
use svmcs::tuning::{admissible_sigma, training_probes, Tuning};
use svmcs::Error;

#[derive(Parser)]
#[command(name = "svmcs", version, about = "Confidence sets from labeled grids and RBF support vector classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the first --count terms of a sequence mapped into --box.
    Generate(GenerateArgs),
    /// Label a grid with a criterion from a config file.
    Label(LabelArgs),
    /// Train a classifier on a labeled grid.
    Train(TrainArgs),
    /// Classify a grid with a saved classifier.
    Predict(PredictArgs),
    /// Insert midpoints between nearby points of opposite labels.
    Refine(RefineArgs),
    /// Run one of the simulation studies.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Args)]
struct GridSpec {
    /// sobol, weyl, baker, montecarlo or montecarlo:SEED
    #[arg(long, default_value = "sobol")]
    kind: SequenceKind,
    /// lo:hi per dimension, comma separated, e.g. 0:1,0:1
    #[arg(long = "box", allow_hyphen_values = true)]
    bounds: Option<Hyperbox>,
    #[arg(long)]
    count: Option<usize>,
}

impl GridSpec {
    fn build(&self) -> svmcs::Result<svmcs::grid::Grid> {
        let b = self.bounds.as_ref().ok_or_else(|| invalid("--box is required"))?;
        let n = self.count.ok_or_else(|| invalid("--count is required"))?;
        generate(self.kind, b, n)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    grid: GridSpec,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LabelArgs {
    /// Grid CSV to label.
    #[arg(long)]
    grid: PathBuf,
    /// TOML file with a [criterion] table.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// sigma = 0.1 * smallest pairwise distance, C = max(10, 2 l0 / (l0 + l1)).
    #[arg(long, conflicts_with = "sigma2")]
    auto_tune: bool,
    /// sigma = FACTOR * (box volume / point count)^(1/d).
    #[arg(long, conflicts_with_all = ["sigma2", "auto_tune"])]
    spacing: Option<f64>,
}

impl TuneArgs {
    fn tuning(&self, fallback: Tuning) -> svmcs::Result<Tuning> {
        let c = self.c;
        Ok(match (self.auto_tune, self.sigma2, self.spacing) {
            (true, _, _) => Tuning::Auto,
            (_, Some(sigma2), _) => Tuning::Fixed { sigma2, c: c.unwrap_or(10.0) },
            (_, _, Some(factor)) => Tuning::Spacing { factor, c: c.unwrap_or(1000.0) },
            _ => match (fallback, c) {
                (Tuning::Fixed { sigma2, .. }, Some(c)) => Tuning::Fixed { sigma2, c },
                (Tuning::Spacing { factor, .. }, Some(c)) => Tuning::Spacing { factor, c },
                (Tuning::Auto, Some(_)) => return Err(invalid("--c needs --sigma2 or --spacing")),
                (t, None) => t,
            },
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Labeled grid CSV.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    tune: TuneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    classifier: PathBuf,
    /// Grid CSV; alternatively describe a grid with --kind/--box/--count.
    #[arg(long, conflicts_with_all = ["bounds", "count"])]
    grid: Option<PathBuf>,
    #[command(flatten)]
    spec: GridSpec,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    data: PathBuf,
    /// TOML file with the [criterion] that labels inserted points.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 5)]
    iters: usize,
    /// Cap on the total number of points.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    min_distance: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Experiment {
    /// Two-component region seen through vanishing noise.
    Synthetic(SyntheticArgs),
    /// OLS confidence ellipsoid, accuracy and coverage per training split.
    Ols(OlsArgs),
}

#[derive(Args)]
struct SyntheticArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    kind: Option<SequenceKind>,
    /// Grid size; defaults to round(500 ln n).
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    tune: TuneArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OlsArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    count: Option<usize>,
    /// Training fractions, comma separated.
    #[arg(long, value_delimiter = ',')]
    split: Option<Vec<f64>>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid of round(6^(ln n)) points and 2000 iterations.
    #[arg(long)]
    full_scale: bool,
    #[command(flatten)]
    tune: TuneArgs,
    #[arg(long)]
    out: PathBuf,
}

fn invalid(msg: &str) -> Error {
    Error::InvalidArgument(msg.to_string())
}

fn read(path: &Path) -> svmcs::Result<String> {
    fs::read_to_string(path).map_err(|e| invalid(&format!("cannot read {}: {e}", path.display())))
}

fn accuracy(pred: &[Label], truth: &[Label]) -> f64 {
    pred.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len().max(1) as f64
}

fn run(cli: Cli) -> svmcs::Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let g = a.grid.build()?;
            io::save_grid(&a.out, &g)?;
            println!("wrote {} {} points to {}", g.count(), g.kind(), a.out.display());
        }
        Command::Label(a) => {
            let grid = io::load_grid(&a.grid)?;
            let criterion = CriterionSpec::from_toml(&read(&a.config)?)?.build()?;
            let data = label_grid(&criterion, &grid)?;
            io::save_labeled(&a.out, &data)?;
            println!("labeled {} points: {} inside, {} outside", data.len(), data.inside_count(), data.outside_count());
        }
        Command::Train(a) => {
            let data = io::load_labeled(&a.data)?;
            let params = a.tune.tuning(Tuning::Auto)?.resolve(&data)?;
            let clf = train(&data, params)?;
            let acc = accuracy(&batch_predict(&clf, data.grid().points())?, data.labels());
            clf.save(&a.out)?;
            println!(
                "sigma2={} c={} support_vectors={} training_accuracy={acc}",
                params.sigma2,
                params.c,
                clf.support_count()
            );
            match admissible_sigma(&data, &training_probes(&data)) {
                Ok(s2) => log::info!("all-ones rule separates the training grid for sigma2 <= {s2}"),
                Err(e) => log::info!("no admissible sigma2 for the training grid: {e}"),
            }
        }
        Command::Predict(a) => {
            let clf = TrainedClassifier::load(&a.classifier)?;
            let grid = match &a.grid {
                Some(p) => io::load_grid(p)?,
                None => a.spec.build()?,
            };
            let report = classify_dense(&clf, &grid)?;
            io::save_labeled(&a.out, &LabeledGrid::new(grid, report.labels.clone())?)?;
            println!("inside={} of {}", report.inside_count, report.labels.len());
            match &report.inside_box {
                Some(b) => println!("inside_box={b}"),
                None => println!("inside_box=none"),
            }
            println!("seconds={:.6} seconds_per_point={:.3e}", report.seconds, report.seconds_per_point);
            if report.extrapolated {
                println!("warning: grid extends beyond the training box {}", clf.bounds());
            }
        }
        Command::Refine(a) => {
            let data = io::load_labeled(&a.data)?;
            let criterion = CriterionSpec::from_toml(&read(&a.config)?)?.build()?;
            let mut cfg = RefineConfig::new(a.radius);
            cfg.max_iterations = a.iters;
            if let Some(b) = a.budget {
                cfg.point_budget = b;
            }
            if let Some(m) = a.min_distance {
                cfg.min_insert_distance = m;
            }
            let out = refine(&data, &criterion, &cfg)?;
            io::save_labeled(&a.out, &out.data)?;
            println!(
                "inserted={} iterations={} truncated={} total={}",
                out.inserted,
                out.iterations,
                out.truncated,
                out.data.len()
            );
        }
        Command::Experiment(Experiment::Synthetic(a)) => synthetic(a)?,
        Command::Experiment(Experiment::Ols(a)) => ols(a)?,
    }
    Ok(())
}

fn synthetic(a: SyntheticArgs) -> svmcs::Result<()> {
    let mut cfg = match &a.config {
        Some(p) => SyntheticConfig::from_toml(&read(p)?)?,
        None => SyntheticConfig::default(),
    };
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(k) = a.kind {
        cfg.kind = k;
    }
    if a.count.is_some() {
        cfg.grid_size = a.count;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.tuning = a.tune.tuning(cfg.tuning)?;
    let run = run_synthetic(&cfg)?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("report.csv"), run.report.to_csv())?;
    fs::write(a.out.join("config.toml"), cfg.to_toml())?;
    write_point_csv(fs::File::create(a.out.join("points.csv"))?, &run.records)?;
    write_svg(fs::File::create(a.out.join("estimated.svg"))?, &run.bounds, &run.records, Reference::Estimated)?;
    write_svg(fs::File::create(a.out.join("truth.svg"))?, &run.bounds, &run.records, Reference::Truth)?;
    run.classifier.save(&a.out.join("classifier.json"))?;
    print!("{}", run.report.to_csv());
    Ok(())
}

fn ols(a: OlsArgs) -> svmcs::Result<()> {
    let mut cfg = match &a.config {
        Some(p) => OlsConfig::from_toml(&read(p)?)?,
        None => OlsConfig::default(),
    };
    if a.full_scale {
        cfg.rule = Some(GridSizeRule::LogExponential);
        cfg.iterations = 2000;
    }
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(c) = a.count {
        cfg.grid_size = c;
        cfg.rule = None;
    }
    if let Some(s) = a.split {
        cfg.splits = s;
    }
    if let Some(i) = a.iters {
        cfg.iterations = i;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.tuning = a.tune.tuning(cfg.tuning)?;
    let report = run_ols(&cfg)?;
    fs::create_dir_all(&a.out)?;
    fs::write(a.out.join("config.toml"), cfg.to_toml())?;
    write_ols_csv(fs::File::create(a.out.join("table.csv"))?, &report)?;
    println!(
        "grid_size={} chi2_threshold={:.6} mean_inside={:.1}",
        report.grid_size, report.threshold, report.mean_inside
    );
    write_ols_csv(std::io::stdout().lock(), &report)?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::SolverFailure(_) | Error::NumericalConditioning(_) => 3,
        Error::InvalidArgument(_)
        | Error::UnsupportedDimension { .. }
        | Error::DegenerateBox { .. }
        | Error::Format(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
