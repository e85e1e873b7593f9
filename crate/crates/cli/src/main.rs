use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mfm::identify::IdentifyOptions;
use mfm::io::app::{diagnose_run, identify_run, prior_table, run_sampling, simulate_to_file};
use mfm::io::report::{read_trace, write_prior_table, TRACE_FILE};
use mfm::io::{DataConfig, KernelTag, OutputConfig, RunConfig};
use mfm::partition::Regime;
use mfm::prior::{ComponentCountPrior, ConcentrationSpec, Hyperprior, WeightScheme};
use mfm::{Error, Result};

/// Mixtures of finite mixtures: exact prior calculations and telescoping
/// sampling.
#[derive(Parser)]
#[command(name = "mfm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the prior of K and K+ for N observations as CSV.
    Prior(PriorArgs),
    /// Run the telescoping sampler.
    Sample(Box<SampleArgs>),
    /// Identify clusters from a finished run.
    Identify(IdentifyArgs),
    /// Posterior tables, autocorrelations and identification for a run.
    Diagnose(DiagnoseArgs),
    /// Write a data set from the eight-component benchmark mixture.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PriorRegime {
    Static,
    Dynamic,
    Dpm,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleRegime {
    Static,
    Dynamic,
}

#[derive(Args)]
struct PriorArgs {
    /// Number of observations.
    #[arg(long)]
    n: usize,
    /// Prior family on K: poisson, negbin, geometric, bnb, uniform, pointmass.
    #[arg(long, default_value = "bnb")]
    prior: String,
    #[arg(long, value_delimiter = ',', default_value = "1,4,3")]
    prior_params: Vec<f64>,
    #[arg(long, value_enum, default_value = "dynamic")]
    regime: PriorRegime,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of components for the fixed regime.
    #[arg(long)]
    kfix: Option<usize>,
    /// Largest k printed.
    #[arg(long, default_value_t = 50)]
    cutoff: usize,
}

#[derive(Args)]
struct SampleArgs {
    /// TOML configuration (or a run manifest); flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// uvn-rg, mvn-hier or lca.
    #[arg(long)]
    kernel: Option<String>,
    /// Prior on K as family:params, e.g. bnb:1,4,3 or uniform:30.
    #[arg(long)]
    prior_k: Option<String>,
    #[arg(long, value_enum)]
    regime: Option<SampleRegime>,
    #[arg(long, conflicts_with = "alpha")]
    gamma: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Hyperprior on the concentration as f:nu_l,nu_r or gamma:shape,rate.
    #[arg(long, conflicts_with_all = ["gamma", "alpha"])]
    alpha_prior: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    k0: Option<usize>,
    /// Column with reference labels, excluded from the observations.
    #[arg(long)]
    truth_col: Option<String>,
    /// Output directory; defaults to `$MFM_OUTPUT_ROOT/<name>`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, env = "MFM_OUTPUT_ROOT", default_value = "mfm-runs", hide_env_values = true)]
    output_root: PathBuf,
}

#[derive(Args)]
struct IdentifyArgs {
    run_dir: PathBuf,
    #[command(flatten)]
    opts: ClusterArgs,
}

#[derive(Args)]
struct ClusterArgs {
    /// k-means restarts when clustering component draws.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    kmeans_seed: u64,
}

impl ClusterArgs {
    fn options(&self) -> IdentifyOptions {
        IdentifyOptions {
            restarts: self.restarts,
            seed: self.kmeans_seed,
        }
    }
}

#[derive(Args)]
struct DiagnoseArgs {
    run_dir: PathBuf,
    /// Column of the data file with reference labels for the adjusted Rand
    /// index.
    #[arg(long)]
    truth_col: Option<String>,
    #[arg(long, default_value_t = 50)]
    max_lag: usize,
    #[command(flatten)]
    opts: ClusterArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Dimension (even).
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_family(spec: &str) -> Result<(&str, Vec<f64>)> {
    let (family, params) = spec
        .split_once(':')
        .ok_or_else(|| config_err(format!("expected family:params, got '{spec}'")))?;
    let params = params
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| config_err(format!("bad number '{p}' in '{spec}'"))))
        .collect::<Result<_>>()?;
    Ok((family, params))
}

fn parse_hyperprior(spec: &str) -> Result<Hyperprior> {
    let (family, p) = parse_family(spec)?;
    let h = match (family, p.as_slice()) {
        ("f", &[a, b]) => Hyperprior::f(a, b),
        ("gamma", &[a, b]) => Hyperprior::gamma(a, b),
        _ => return Err(config_err(format!("unknown hyperprior '{spec}' (use f:a,b or gamma:a,b)"))),
    };
    h.map_err(|e| config_err(e.to_string()))
}

fn prior(args: &PriorArgs) -> Result<()> {
    let p = ComponentCountPrior::from_tag(&args.prior, &args.prior_params).map_err(|e| config_err(e.to_string()))?;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| config_err(format!("--{name} is required for this regime")));
    let regime = match args.regime {
        PriorRegime::Static => Regime::Static { gamma: need(args.gamma, "gamma")? },
        PriorRegime::Dynamic => Regime::Dynamic { alpha: need(args.alpha, "alpha")? },
        PriorRegime::Dpm => Regime::Dpm { alpha: need(args.alpha, "alpha")? },
        PriorRegime::Fixed => Regime::FixedK {
            k: args.kfix.ok_or_else(|| config_err("--kfix is required for the fixed regime"))?,
            gamma: need(args.gamma, "gamma")?,
        },
    };
    let (pk, pkp) = prior_table(args.n, &p, &regime, args.cutoff).map_err(|e| match e {
        Error::InvalidArgument(m) => config_err(m),
        other => other,
    })?;
    let stdout = std::io::stdout();
    write_prior_table(stdout.lock(), &pk, &pkp)
}

fn resolve_concentration(args: &SampleArgs, base: Option<ConcentrationSpec>) -> Result<ConcentrationSpec> {
    if args.regime.is_none() && args.gamma.is_none() && args.alpha.is_none() && args.alpha_prior.is_none() {
        return base.ok_or_else(|| config_err("--gamma, --alpha or --alpha-prior is required without --config"));
    }
    let dynamic = match (args.regime, base) {
        (Some(r), _) => matches!(r, SampleRegime::Dynamic),
        (None, Some(b)) if args.alpha_prior.is_some() => b.scheme() == WeightScheme::Dynamic,
        (None, _) => args.gamma.is_none(),
    };
    if dynamic && args.gamma.is_some() {
        return Err(config_err("--gamma applies to the static regime; use --alpha"));
    }
    if !dynamic && args.alpha.is_some() {
        return Err(config_err("--alpha applies to the dynamic regime; use --gamma"));
    }
    let spec = match (args.gamma.or(args.alpha), &args.alpha_prior) {
        (Some(v), _) if dynamic => ConcentrationSpec::dynamic_fixed(v),
        (Some(v), _) => ConcentrationSpec::static_fixed(v),
        (None, Some(h)) => {
            let prior = parse_hyperprior(h)?;
            Ok(if dynamic {
                ConcentrationSpec::DynamicPrior { prior, init: None }
            } else {
                ConcentrationSpec::StaticPrior { prior, init: None }
            })
        }
        (None, None) => match base {
            Some(b) if (b.scheme() == WeightScheme::Dynamic) == dynamic => Ok(b),
            _ => return Err(config_err("give --gamma, --alpha or --alpha-prior for the chosen regime")),
        },
    };
    spec.map_err(|e| config_err(e.to_string()))
}

/// Merges the configuration file (if any) with the command-line flags.
fn resolve_config(args: &SampleArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => Some(RunConfig::load(path)?),
        None => None,
    };
    let data = match (&args.data, &cfg) {
        (Some(path), Some(c)) => DataConfig {
            path: path.clone(),
            ..c.data.clone()
        },
        (Some(path), None) => DataConfig {
            path: path.clone(),
            kernel: KernelTag::parse(args.kernel.as_deref().ok_or_else(|| config_err("--kernel is required"))?)?,
            truth_column: None,
        },
        (None, Some(c)) => c.data.clone(),
        (None, None) => return Err(config_err("either --config or --data is required")),
    };
    let prior_k = match (&args.prior_k, &cfg) {
        (Some(spec), _) => {
            let (family, p) = parse_family(spec)?;
            ComponentCountPrior::from_tag(family, &p).map_err(|e| config_err(e.to_string()))?
        }
        (None, Some(c)) => c.prior_k.clone(),
        (None, None) => return Err(config_err("--prior-k is required without --config")),
    };
    let concentration = resolve_concentration(args, cfg.as_ref().map(|c| c.concentration))?;

    let mut run = match cfg.take() {
        Some(c) => RunConfig {
            data,
            prior_k,
            concentration,
            ..c
        },
        None => RunConfig {
            data,
            prior_k,
            concentration,
            sampler: Default::default(),
            chains: 1,
            output: OutputConfig::default(),
        },
    };
    if let Some(k) = &args.kernel {
        run.data.kernel = KernelTag::parse(k)?;
    }
    if let Some(t) = &args.truth_col {
        run.data.truth_column = Some(t.clone());
    }
    let s = &mut run.sampler;
    args.iters.inspect(|&v| s.iterations = v);
    args.burnin.inspect(|&v| s.burn_in = v);
    args.thin.inspect(|&v| s.thin = v);
    args.seed.inspect(|&v| s.seed = v);
    args.kmax.inspect(|&v| s.k_max = v);
    args.k0.inspect(|&v| s.k0 = v);
    args.chains.inspect(|&v| run.chains = v);
    if let Some(d) = &args.out_dir {
        run.output.dir = Some(d.clone());
    }
    run.validate()?;
    Ok(run)
}

fn default_run_name(cfg: &RunConfig, config_path: Option<&Path>) -> String {
    let stem = config_path
        .or(Some(cfg.data.path.as_path()))
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    format!("{stem}-seed{}", cfg.sampler.seed)
}

fn sample(args: &SampleArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    let out_dir = cfg
        .output
        .dir
        .clone()
        .unwrap_or_else(|| args.output_root.join(default_run_name(&cfg, args.config.as_deref())));
    let outputs = run_sampling(&cfg, &out_dir)?;
    for o in &outputs {
        let written = read_trace(&o.dir.join(TRACE_FILE))?.len();
        if written != o.draws {
            return Err(Error::Runtime(format!(
                "{}: trace has {written} rows, expected {}",
                o.dir.display(),
                o.draws
            )));
        }
        eprintln!(
            "{}: {} draws, concentration acceptance {:.3}",
            o.dir.display(),
            o.draws,
            o.acceptance_rate
        );
    }
    Ok(())
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value).expect("serializable"))
        .map_err(|e| Error::Runtime(format!("stdout: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prior(a) => prior(&a),
        Command::Sample(a) => sample(&a),
        Command::Identify(a) => {
            let m = identify_run(&a.run_dir, &a.opts.options())?;
            print_json(&serde_json::json!({
                "k_plus_hat": m.k_plus_hat,
                "qualifying_draws": m.qualifying,
                "retained_draws": m.retained,
                "retention_rate": m.retention_rate(),
                "cluster_sizes": m.cluster_sizes(),
            }))
        }
        Command::Diagnose(a) => {
            let s = diagnose_run(&a.run_dir, a.truth_col.as_deref(), a.max_lag, &a.opts.options())?;
            print_json(&serde_json::to_value(&s).expect("serializable"))
        }
        Command::Simulate(a) => simulate_to_file(a.r, a.n, a.seed, &a.out).map_err(|e| match e {
            Error::InvalidArgument(m) => config_err(m),
            other => other,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mfm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
