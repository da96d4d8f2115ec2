//! `ctdnull`: theory tables, Monte-Carlo sweeps, rate sweeps and validation
//! gates, written as CSV or JSON datasets.
//!
//! Exit codes: 0 success, 1 a validation gate failed, 2 usage or parameter
//! error.

mod grid;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ctdnull::dataset::{Cell, Dataset};
use ctdnull::harness::{
    check_ideal_limit, check_oracle_equivalence, rates_dataset, snr_dataset, sweep_error_vs_snr,
    sweep_rates, validate_alpha_stats, validate_orthogonality, BinAssignment, Gate,
    SnrSweepConfig, TrialBudget, MC_MAX_MODES, SNR_DEFINITION,
};
use ctdnull::rates::{log_integer_grid, ErrorModel, GridSpec, DEFAULT_MODES_PER_DECADE};
use ctdnull::receiver::NullPolicy;
use ctdnull::{derive_statistics, RandomStream, ScenarioParams};

use grid::{parse_grid, parse_integer_grid};

/// Seed used when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const WORKERS_ENV: &str = "CTDNULL_WORKERS";

#[derive(Parser)]
#[command(name = "ctdnull", version, about = "Conditional-nulling PPM receiver simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic error probabilities over an M or SNR grid.
    Theory(SnrArgs),
    /// Monte-Carlo error estimates next to the analytic columns.
    Simulate(SimulateArgs),
    /// Capacities and optimized PPM rates over an n_S grid.
    Rates(RatesArgs),
    /// Statistical and analytic validation gates.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// kappa 0.1, N_B 10, m 10, N_S 0.01, SNR 0.1..10
    Fig3,
    /// kappa 0.1, N_B 20, n_S 1e-4..1e-1
    Fig4,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelChoice {
    Helstrom,
    Cn,
    Both,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Worker threads [env: CTDNULL_WORKERS]; defaults to the number of CPUs.
    #[arg(long)]
    workers: Option<usize>,
    /// Suppress progress lines on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ChannelArgs {
    /// Parameter preset; explicit flags override its values.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Transmissivity kappa.
    #[arg(long)]
    kappa: Option<f64>,
    /// Thermal noise N_B.
    #[arg(long)]
    nb: Option<f64>,
}

#[derive(Args)]
struct SnrArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Per-bin signal brightness N_S.
    #[arg(long)]
    ns: Option<f64>,
    /// Number of PPM bins m.
    #[arg(long)]
    m: Option<usize>,
    /// Modes per bin: value, list or grid (e.g. 1000:100000:log32).
    #[arg(long = "M")]
    modes: Option<String>,
    /// SNR = M*kappa*N_S/N_B grid; exclusive with --M.
    #[arg(long, conflicts_with = "modes")]
    snr: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    snr: SnrArgs,
    /// Trials per point: `auto` or a count of at least 100.
    #[arg(long, default_value = "auto")]
    trials: String,
    #[arg(long, default_value = "asymptotic")]
    policy: NullPolicy,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Fix the true bin (1-based) instead of drawing it uniformly.
    #[arg(long)]
    h: Option<usize>,
    /// Skip Monte Carlo at points with more modes than this.
    #[arg(long, default_value_t = MC_MAX_MODES)]
    mc_max_modes: u64,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    /// Per-mode brightness n_S grid.
    #[arg(long)]
    ns: Option<String>,
    #[arg(long, value_enum, default_value = "both")]
    model: ModelChoice,
    /// Bin counts 2, 4, ..., 2^k searched.
    #[arg(long, default_value_t = 16)]
    max_bins_log2: u32,
    #[arg(long, default_value_t = ctdnull::rates::DEFAULT_MIN_MODES)]
    min_modes: u64,
    #[arg(long, default_value_t = ctdnull::rates::DEFAULT_MAX_MODES)]
    max_modes: u64,
    /// Skip integer refinement around the grid argmax.
    #[arg(long)]
    no_refine: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    ns: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Modes per bin for the sampling gates.
    #[arg(long = "M", default_value_t = 10_000)]
    modes: usize,
    /// Samples per sampling gate.
    #[arg(long, default_value_t = 1_000)]
    samples: usize,
    /// Overlap thresholds a for the tail gates.
    #[arg(long, default_value = "0.01,0.02,0.05,0.1,1")]
    thresholds: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Corrupt Q_n inside the analytic checks; the gates must then fail.
    #[arg(long)]
    self_test_negative: bool,
    #[command(flatten)]
    out: OutputArgs,
}

struct Channel {
    kappa: f64,
    nb: f64,
}

fn resolve_channel(args: &ChannelArgs, default: Preset) -> Channel {
    let preset = args.preset.unwrap_or(default);
    let nb = match preset {
        Preset::Fig3 => 10.0,
        Preset::Fig4 => 20.0,
    };
    Channel {
        kappa: args.kappa.unwrap_or(0.1),
        nb: args.nb.unwrap_or(nb),
    }
}

/// Sweep configuration shared by `theory` and `simulate`.
fn snr_config(args: &SnrArgs) -> Result<SnrSweepConfig> {
    let ch = resolve_channel(&args.channel, Preset::Fig3);
    let ns = args.ns.unwrap_or(0.01);
    let m = args.m.unwrap_or(10);
    ScenarioParams::new(ch.kappa, ns, ch.nb, m, m)?;
    if !(ch.nb > 0.0) {
        bail!("--nb must be positive: the SNR axis is M*kappa*N_S/N_B");
    }
    let snr_grid = match (&args.modes, &args.snr) {
        (Some(modes), _) => parse_integer_grid(modes)?
            .into_iter()
            .map(|mm| mm as f64 * ch.kappa * ns / ch.nb)
            .collect(),
        (None, Some(snr)) => parse_grid(snr)?,
        (None, None) => parse_grid("0.1:10:log10")?,
    };
    Ok(SnrSweepConfig::new(ch.kappa, ns, ch.nb, m, snr_grid))
}

fn progress_enabled(out: &OutputArgs) -> bool {
    !out.quiet
}

fn cmd_theory(args: &SnrArgs) -> Result<Dataset> {
    let mut cfg = snr_config(args)?;
    cfg.mc_max_modes = 0;
    let points = sweep_error_vs_snr(&cfg, |_, _, _| {})?;
    let mut ds = snr_dataset(&cfg, &points);
    ds.set_meta("kind", json!("theory"));
    for key in ["trials", "policy", "seed", "mc_max_modes", "true_bin"] {
        ds.meta.remove(key);
    }
    ds.drop_columns(&["P_cn_mc", "P_cn_mc_se", "mc_trials", "mc_within_3se"]);
    Ok(ds)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Dataset> {
    let mut cfg = snr_config(&args.snr)?;
    cfg.trials = match args.trials.as_str() {
        "auto" => TrialBudget::Auto,
        n => TrialBudget::Fixed(
            n.parse()
                .map_err(|_| anyhow!("--trials must be `auto` or a count, got `{n}`"))?,
        ),
    };
    cfg.trials.trials_for(0.5)?;
    cfg.policy = args.policy;
    cfg.master_seed = args.seed;
    cfg.mc_max_modes = args.mc_max_modes;
    if let Some(h) = args.h {
        if h == 0 || h > cfg.num_bins {
            bail!("--h must lie in 1..={}, got {h}", cfg.num_bins);
        }
        cfg.h_assignment = BinAssignment::Fixed(h - 1);
    }
    let verbose = progress_enabled(&args.snr.out);
    let points = sweep_error_vs_snr(&cfg, |k, total, p| {
        if verbose {
            let mc = p.mc.as_ref().map_or("mc=null".to_string(), |e| {
                format!("mc={:.4e} +/- {:.1e} ({} trials)", e.p_hat, e.std_err, e.trials)
            });
            eprintln!(
                "[{}/{total}] snr={:.4} M={} P_rec={:.4e} {mc}",
                k + 1,
                p.snr,
                p.modes_per_bin,
                p.p_cn_recursive
            );
        }
    })?;
    Ok(snr_dataset(&cfg, &points))
}

fn cmd_rates(args: &RatesArgs) -> Result<Dataset> {
    let ch = resolve_channel(&args.channel, Preset::Fig4);
    let n_s_grid = parse_grid(args.ns.as_deref().unwrap_or("1e-4:1e-1:log30"))?;
    let models = match args.model {
        ModelChoice::Helstrom => vec![ErrorModel::HelstromEa],
        ModelChoice::Cn => vec![ErrorModel::CnRecursion],
        ModelChoice::Both => vec![ErrorModel::HelstromEa, ErrorModel::CnRecursion],
    };
    if !(1..=30).contains(&args.max_bins_log2) {
        bail!("--max-bins-log2 must lie in 1..=30");
    }
    if args.min_modes == 0 || args.min_modes > args.max_modes {
        bail!("need 1 <= --min-modes <= --max-modes");
    }
    let search = GridSpec {
        bins: (1..=args.max_bins_log2).map(|k| 1usize << k).collect(),
        modes: log_integer_grid(args.min_modes, args.max_modes, DEFAULT_MODES_PER_DECADE),
        refine: !args.no_refine,
    };
    let verbose = progress_enabled(&args.out);
    let rows = sweep_rates(ch.kappa, ch.nb, &n_s_grid, &models, &search, |k, total, r| {
        if verbose {
            eprintln!("[{}/{total}] n_s={:.4e} C={:.4e} C_E={:.4e}", k + 1, r.n_s, r.classical, r.entanglement_assisted);
        }
    })?;
    Ok(rates_dataset(ch.kappa, ch.nb, &models, &search, &rows))
}

fn cmd_validate(args: &ValidateArgs) -> Result<(Dataset, bool)> {
    let ch = resolve_channel(&args.channel, Preset::Fig3);
    let params = ScenarioParams::new(
        ch.kappa,
        args.ns.unwrap_or(0.01),
        ch.nb,
        args.m.unwrap_or(10),
        args.modes,
    )?;
    let thresholds = parse_grid(&args.thresholds)?;
    if thresholds.iter().any(|&a| !(a > 0.0)) {
        bail!("--thresholds must be positive");
    }
    let verbose = progress_enabled(&args.out);
    let root = RandomStream::new(args.seed);
    let mut gates: Vec<(&str, Gate)> = Vec::new();

    let stats = derive_statistics(&params)?;
    let ortho = validate_orthogonality(
        params.modes_per_bin,
        stats.v_het,
        args.samples,
        &thresholds,
        &root.labelled("orthogonality"),
    )?;
    gates.extend(ortho.gates().into_iter().map(|g| ("orthogonality", g)));
    if verbose {
        eprintln!("orthogonality gates done");
    }
    let alpha = validate_alpha_stats(&params, args.samples, &root.labelled("alpha"))?;
    gates.extend(alpha.gates().into_iter().map(|g| ("alpha_statistics", g)));
    if verbose {
        eprintln!("alpha statistics gates done");
    }
    let corrupt = args.self_test_negative;
    gates.push(("oracle", check_oracle_equivalence(6, corrupt)?));
    let alpha_sq: Vec<f64> = (1..=200).map(|k| k as f64 / 10.0).collect();
    gates.push(("ideal_limit", check_ideal_limit(64, &alpha_sq, corrupt)?));

    let mut ds = Dataset::new(&["suite", "gate", "observed", "bound", "pass"]);
    ds.set_meta("kind", json!("validation"));
    ds.set_meta("kappa", json!(params.kappa));
    ds.set_meta("n_signal", json!(params.n_signal));
    ds.set_meta("n_noise", json!(params.n_noise));
    ds.set_meta("num_bins", json!(params.num_bins));
    ds.set_meta("modes_per_bin", json!(params.modes_per_bin));
    ds.set_meta("samples", json!(args.samples));
    ds.set_meta("thresholds", json!(thresholds));
    ds.set_meta("seed", json!(args.seed));
    ds.set_meta("self_test_negative", json!(corrupt));
    ds.set_meta("snr_definition", json!(SNR_DEFINITION));
    let mut all = true;
    for (suite, g) in gates {
        all &= g.pass;
        if verbose {
            eprintln!(
                "{} {suite}/{}: observed {:.4e}, bound {:.4e}",
                if g.pass { "PASS" } else { "FAIL" },
                g.name,
                g.observed,
                g.bound
            );
        }
        ds.push_row(vec![
            Cell::Text(suite.into()),
            Cell::Text(g.name),
            Cell::Float(g.observed),
            Cell::Float(g.bound),
            Cell::Bool(g.pass),
        ]);
    }
    Ok((ds, all))
}

/// Writes through a temporary file in the target directory, then renames.
fn write_output(ds: &Dataset, out: &OutputArgs) -> Result<()> {
    let text = match out.format {
        Format::Csv => ds.to_csv(),
        Format::Json => ds.to_json(),
    };
    match &out.output {
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing to standard output"),
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(path)
                .with_context(|| format!("writing {}", path.display()))?;
            Ok(())
        }
    }
}

fn configure_workers(out: &OutputArgs) -> Result<()> {
    let n = match out.workers {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| anyhow!("{WORKERS_ENV} must be a positive integer, got `{v}`"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            bail!("worker count must be positive");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    Ok(())
}

fn output_args(cmd: &Command) -> &OutputArgs {
    match cmd {
        Command::Theory(a) => &a.out,
        Command::Simulate(a) => &a.snr.out,
        Command::Rates(a) => &a.out,
        Command::Validate(a) => &a.out,
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let out = output_args(&cli.command);
    configure_workers(out)?;
    let (ds, pass) = match &cli.command {
        Command::Theory(a) => (cmd_theory(a)?, true),
        Command::Simulate(a) => (cmd_simulate(a)?, true),
        Command::Rates(a) => (cmd_rates(a)?, true),
        Command::Validate(a) => cmd_validate(a)?,
    };
    write_output(&ds, out)?;
    Ok(pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("ctdnull: validation gates failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("ctdnull: {e:#}");
            ExitCode::from(2)
        }
    }
}
