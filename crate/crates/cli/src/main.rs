//! `rankbias`: audit a ranked CSV for under-represented groups.
//!
//! Exit status is 0 on success, 1 for invalid input or usage, 2 for I/O failures.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rankbias::explain::{explain_group, fit_surrogate, write_histograms, ExplainConfig, Hyperparams, ShapleyMode, SurrogateKind};
use rankbias::generators::{random_dataset, random_ranking, worst_case};
use rankbias::ingest::{ingest_csv, write_csv};
use rankbias::oracle::{oracle_detect_with_cap, DEFAULT_CAP};
use rankbias::report::{AuditReport, SortOrder};
use rankbias::{
    global_bounds, iter_td, prop_bounds, validate_bounds, Alpha, BoundsSpec, Dataset, LowerSchedule, Ranking, ResultSet,
};

const DEFAULT_TAU: u64 = 50;
const DEFAULT_K_MIN: usize = 10;
const DEFAULT_K_MAX: usize = 49;
const DEFAULT_BOUNDS: &str = "10:10,20:20,30:30,40:40";
const DEFAULT_ALPHA: &str = "0.8";

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Invalid(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) | Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Invalid(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<rankbias::Error> for Failure {
    fn from(e: rankbias::Error) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<rankbias::BoundsError> for Failure {
    fn from(e: rankbias::BoundsError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "rankbias", version, about = "Find groups under-represented in the top-k of a ranking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect groups below global lower bounds L_k
    AuditGlobal {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Lower bounds as `from_k:L` steps, e.g. `10:10,20:20`
        #[arg(long)]
        bounds: Option<String>,
        #[arg(long, value_enum)]
        engine: Option<Engine>,
    },
    /// Detect groups below alpha times their proportional share
    AuditProp {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        range: RangeArgs,
        /// Decimal or `num/den`
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, value_enum)]
        engine: Option<Engine>,
    },
    /// Shapley values of a surrogate ranking model, aggregated over a group
    Explain {
        #[command(flatten)]
        input: InputArgs,
        /// Group as `Attribute=value` pairs, e.g. `School=GP,Address=U`
        #[arg(long)]
        pattern: String,
        /// Prefix length the group is compared against
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_parser = ["ridge-linear", "regression-tree"])]
        surrogate: Option<String>,
        #[arg(long, value_parser = ["exact", "monte-carlo"])]
        shapley: Option<String>,
        #[arg(long)]
        permutations: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write group and top-k value proportions as CSV
        #[arg(long)]
        histograms: Option<PathBuf>,
    },
    /// Emit the worst-case instance over `n` binary attributes as CSV
    GenWorstcase {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare evaluated-node counts of the baseline and optimized engines
    Bench {
        /// Ranked CSV; a seeded random table is used when absent
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        rank_column: Option<String>,
        #[arg(long, default_value_t = 500)]
        rows: usize,
        #[arg(long, default_value_t = 6)]
        attributes: usize,
        #[arg(long, default_value_t = 2)]
        cardinality: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long)]
        bounds: Option<String>,
        /// Benchmark proportional bounds instead of global ones
        #[arg(long)]
        alpha: Option<String>,
    },
    /// Exhaustive reference detection for small schemas
    Oracle {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long)]
        bounds: Option<String>,
        /// Use proportional bounds
        #[arg(long)]
        alpha: Option<String>,
        /// Largest lattice the oracle may enumerate
        #[arg(long, default_value_t = DEFAULT_CAP as u64)]
        cap: u64,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Column holding rank positions (1 = best)
    #[arg(long)]
    rank_column: Option<String>,
    /// Column to drop; repeatable
    #[arg(long)]
    ignore: Vec<String>,
}

#[derive(Args)]
struct RangeArgs {
    #[arg(long)]
    tau: Option<u64>,
    #[arg(long)]
    kmin: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_parser = ["canonical", "size", "deficit"])]
    sort: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Baseline,
    Optimized,
}

struct Loaded {
    data: Dataset,
    ranking: Ranking,
    config: config::Config,
}

fn load(
    input: &Path,
    config_path: Option<&Path>,
    rank_column: &Option<String>,
    ignore: &[String],
) -> Result<Loaded, Failure> {
    let mut config = config::load(config_path)?;
    if let Some(r) = rank_column {
        config.ingest.rank_column = Some(r.clone());
    }
    config.ingest.ignore.extend(ignore.iter().cloned());
    let ingested = ingest_csv(input, &config.ingest)?;
    for w in &ingested.warnings {
        eprintln!("warning: {w}");
    }
    let ranking = ingested.require_ranking()?.clone();
    Ok(Loaded {
        data: ingested.data,
        ranking,
        config,
    })
}

fn parse_steps(text: &str) -> Result<Vec<(usize, u64)>, Failure> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|step| {
            let (k, l) = step
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("bound step `{step}` is not `from_k:L`")))?;
            let k = k.trim().parse().map_err(|_| Failure::Usage(format!("bad k in `{step}`")))?;
            let l = l.trim().parse().map_err(|_| Failure::Usage(format!("bad bound in `{step}`")))?;
            Ok((k, l))
        })
        .collect()
}

fn global_spec(range: &RangeArgs, bounds: &Option<String>, cfg: &config::AuditSection) -> Result<BoundsSpec, Failure> {
    let (tau, k_min, k_max) = range_values(range, cfg);
    let steps = match (bounds, &cfg.bounds) {
        (Some(b), _) => parse_steps(b)?,
        (None, Some(steps)) => steps.clone(),
        (None, None) => parse_steps(DEFAULT_BOUNDS)?,
    };
    let schedule = LowerSchedule::from_steps(&steps, k_max)?;
    Ok(BoundsSpec::global(tau, k_min, k_max, schedule))
}

fn prop_spec(range: &RangeArgs, alpha: &Option<String>, cfg: &config::AuditSection) -> Result<BoundsSpec, Failure> {
    let (tau, k_min, k_max) = range_values(range, cfg);
    let text = alpha.as_deref().or(cfg.alpha.as_deref()).unwrap_or(DEFAULT_ALPHA);
    let alpha: Alpha = text.parse()?;
    Ok(BoundsSpec::proportional(tau, k_min, k_max, alpha))
}

fn range_values(range: &RangeArgs, cfg: &config::AuditSection) -> (u64, usize, usize) {
    (
        range.tau.or(cfg.tau).unwrap_or(DEFAULT_TAU),
        range.kmin.or(cfg.k_min).unwrap_or(DEFAULT_K_MIN),
        range.kmax.or(cfg.k_max).unwrap_or(DEFAULT_K_MAX),
    )
}

fn sort_order(range: &RangeArgs, cfg: &config::AuditSection) -> Result<SortOrder, Failure> {
    Ok(range.sort.as_deref().or(cfg.sort.as_deref()).unwrap_or("canonical").parse()?)
}

fn engine_choice(flag: Option<Engine>, cfg: &config::AuditSection) -> Result<Engine, Failure> {
    if let Some(e) = flag {
        return Ok(e);
    }
    match cfg.engine.as_deref() {
        None | Some("optimized") => Ok(Engine::Optimized),
        Some("baseline") => Ok(Engine::Baseline),
        Some(other) => Err(Failure::Usage(format!("unknown engine `{other}`"))),
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<(), Failure> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn audit(loaded: &Loaded, spec: &BoundsSpec, engine: Engine, range: &RangeArgs) -> Result<(), Failure> {
    validate_bounds(spec, &loaded.data)?;
    let result = match (engine, spec.is_global()) {
        (Engine::Baseline, _) => iter_td(&loaded.data, &loaded.ranking, spec)?,
        (Engine::Optimized, true) => global_bounds(&loaded.data, &loaded.ranking, spec)?,
        (Engine::Optimized, false) => prop_bounds(&loaded.data, &loaded.ranking, spec)?,
    };
    let report = AuditReport::build(
        &loaded.data,
        &loaded.ranking,
        spec,
        &result,
        sort_order(range, &loaded.config.audit)?,
    );
    emit(&(report.to_json() + "\n"), range.output.as_deref())
}

#[derive(Serialize)]
struct EngineCounts {
    generated: u64,
    evaluated: u64,
}

#[derive(Serialize)]
struct BenchReport {
    mode: &'static str,
    dataset: String,
    n_rows: usize,
    n_attributes: usize,
    k_min: usize,
    k_max: usize,
    baseline: EngineCounts,
    optimized: EngineCounts,
    /// `(baseline - optimized) / baseline` over evaluated nodes, in percent.
    pruned_evaluations_percent: f64,
    pruned_generated_percent: f64,
    identical_results: bool,
}

fn percent(base: u64, opt: u64) -> f64 {
    if base == 0 {
        0.0
    } else {
        (base as f64 - opt as f64) / base as f64 * 100.0
    }
}

fn counts(r: &ResultSet) -> EngineCounts {
    let t = r.totals();
    EngineCounts {
        generated: t.generated,
        evaluated: t.evaluated,
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::AuditGlobal {
            input,
            range,
            bounds,
            engine,
        } => {
            let loaded = load(&input.input, input.config.as_deref(), &input.rank_column, &input.ignore)?;
            let spec = global_spec(&range, &bounds, &loaded.config.audit)?;
            let engine = engine_choice(engine, &loaded.config.audit)?;
            audit(&loaded, &spec, engine, &range)
        }
        Command::AuditProp {
            input,
            range,
            alpha,
            engine,
        } => {
            let loaded = load(&input.input, input.config.as_deref(), &input.rank_column, &input.ignore)?;
            let spec = prop_spec(&range, &alpha, &loaded.config.audit)?;
            let engine = engine_choice(engine, &loaded.config.audit)?;
            audit(&loaded, &spec, engine, &range)
        }
        Command::Explain {
            input,
            pattern,
            k,
            seed,
            surrogate,
            shapley,
            permutations,
            output,
            histograms,
        } => {
            let loaded = load(&input.input, input.config.as_deref(), &input.rank_column, &input.ignore)?;
            let ex = &loaded.config.explain;
            let pairs: Vec<(String, String)> = pattern
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|pair| {
                    pair.split_once('=')
                        .map(|(a, v)| (a.trim().to_string(), v.trim().to_string()))
                        .ok_or_else(|| Failure::Usage(format!("`{pair}` is not `Attribute=value`")))
                })
                .collect::<Result<_, _>>()?;
            let group = loaded.data.pattern(&pairs)?;
            let kind: SurrogateKind = surrogate
                .as_deref()
                .or(ex.surrogate.as_deref())
                .unwrap_or("ridge-linear")
                .parse()?;
            let defaults = Hyperparams::default();
            let hp = Hyperparams {
                lambda: ex.lambda.unwrap_or(defaults.lambda),
                max_depth: ex.max_depth.unwrap_or(defaults.max_depth),
                ..defaults
            };
            let seed = seed.or(ex.seed).unwrap_or(0);
            let mode = match shapley.as_deref().or(ex.shapley.as_deref()).unwrap_or("exact") {
                "exact" => ShapleyMode::Exact,
                "monte-carlo" => ShapleyMode::MonteCarlo {
                    permutations: permutations.or(ex.permutations).unwrap_or(2000),
                    seed,
                },
                other => return Err(Failure::Usage(format!("unknown Shapley mode `{other}`"))),
            };
            let base = ExplainConfig::default();
            let config = ExplainConfig {
                mode,
                background_rows: ex.background_rows.unwrap_or(base.background_rows),
                seed,
                top_m: ex.top_m.unwrap_or(base.top_m),
            };
            let k = k.unwrap_or(DEFAULT_K_MIN.min(loaded.data.n_rows()));
            let model = fit_surrogate(&loaded.data, &loaded.ranking, kind, &hp)?;
            if model.degenerate {
                eprintln!("warning: all rows are identical; the surrogate is constant");
            }
            let report = explain_group(&loaded.data, &loaded.ranking, &model, &group, k, &config)?;
            if let Some(path) = histograms {
                let file = std::fs::File::create(&path)
                    .map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))?;
                write_histograms(&report, file)?;
            }
            let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Invalid(e.to_string()))?;
            emit(&(json + "\n"), output.as_deref())
        }
        Command::GenWorstcase { n, output } => {
            let (data, ranking, _, _) = worst_case(n)?;
            let mut buf = Vec::new();
            write_csv(&data, Some(&ranking), &mut buf)?;
            emit(&String::from_utf8(buf).expect("labels are UTF-8"), output.as_deref())
        }
        Command::Bench {
            input,
            config,
            rank_column,
            rows,
            attributes,
            cardinality,
            seed,
            range,
            bounds,
            alpha,
        } => {
            let (data, ranking, cfg, name) = match input {
                Some(path) => {
                    let l = load(&path, config.as_deref(), &rank_column, &[])?;
                    (l.data, l.ranking, l.config, path.display().to_string())
                }
                None => {
                    let data = random_dataset(seed, rows, &vec![cardinality; attributes])?;
                    let ranking = random_ranking(seed, data.n_rows());
                    let cfg = config::load(config.as_deref())?;
                    let name = format!("random(seed={seed}, rows={rows}, attributes={attributes}, cardinality={cardinality})");
                    (data, ranking, cfg, name)
                }
            };
            let spec = match alpha {
                Some(_) => prop_spec(&range, &alpha, &cfg.audit)?,
                None => global_spec(&range, &bounds, &cfg.audit)?,
            };
            validate_bounds(&spec, &data)?;
            let base = iter_td(&data, &ranking, &spec)?;
            let opt = if spec.is_global() {
                global_bounds(&data, &ranking, &spec)?
            } else {
                prop_bounds(&data, &ranking, &spec)?
            };
            let (b, o) = (counts(&base), counts(&opt));
            let report = BenchReport {
                mode: if spec.is_global() { "global" } else { "proportional" },
                dataset: name,
                n_rows: data.n_rows(),
                n_attributes: data.n_attributes(),
                k_min: spec.k_min,
                k_max: spec.k_max,
                pruned_evaluations_percent: percent(b.evaluated, o.evaluated),
                pruned_generated_percent: percent(b.generated, o.generated),
                identical_results: base.same_patterns(&opt),
                baseline: b,
                optimized: o,
            };
            let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Invalid(e.to_string()))?;
            emit(&(json + "\n"), range.output.as_deref())
        }
        Command::Oracle {
            input,
            range,
            bounds,
            alpha,
            cap,
        } => {
            let loaded = load(&input.input, input.config.as_deref(), &input.rank_column, &input.ignore)?;
            let spec = match alpha {
                Some(_) => prop_spec(&range, &alpha, &loaded.config.audit)?,
                None => global_spec(&range, &bounds, &loaded.config.audit)?,
            };
            let result = oracle_detect_with_cap(&loaded.data, &loaded.ranking, &spec, cap as u128)?;
            let report = AuditReport::build(
                &loaded.data,
                &loaded.ranking,
                &spec,
                &result,
                sort_order(&range, &loaded.config.audit)?,
            );
            emit(&(report.to_json() + "\n"), range.output.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
