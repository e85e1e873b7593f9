//! End-to-end operations behind the command-line interface.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::diagnostics::{acf, adjusted_rand_index, posterior_table, Acf, PosteriorTable};
use crate::error::{Error, Result};
use crate::identify::{identify, DrawSet, IdentifiedModel, IdentifyOptions};
use crate::kernel::{ComponentKernel, LatentClassKernel, MultivariateNormalKernel, UnivariateNormalKernel};
use crate::partition::{prior_k_plus, Regime};
use crate::prior::ComponentCountPrior;
use crate::sampler::TelescopingSampler;

use super::config::{KernelTag, RunConfig};
use super::ingest::{read_categorical, read_continuous, Dataset, Observations};
use super::report::*;
use super::simulate::simulate_benchmark;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where one chain's files were written.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub dir: PathBuf,
    pub draws: usize,
    pub acceptance_rate: f64,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads the data file named in a run configuration.
pub fn load_dataset(cfg: &RunConfig, truth_column: Option<&str>) -> Result<Dataset> {
    let path = &cfg.data.path;
    let ds = match cfg.data.kernel {
        KernelTag::LatentClass => read_categorical(path)?,
        _ => read_continuous(path, truth_column)?,
    };
    if cfg.data.kernel == KernelTag::UnivariateNormal && ds.observations.dim() != 1 {
        return Err(Error::Data(format!(
            "{}: the univariate kernel needs exactly one data column, found {}",
            path.display(),
            ds.observations.dim()
        )));
    }
    Ok(ds)
}

/// Runs every configured chain and writes `trace.csv`, `alloc.bin`,
/// `theta.csv` and `manifest.json` per chain. With several chains each one
/// runs on its own thread and writes to its own `chain-<c>` subdirectory.
pub fn run_sampling(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<ChainOutput>> {
    cfg.validate()?;
    let mut resolved = cfg.clone();
    resolved.data.path = std::fs::canonicalize(&cfg.data.path).map_err(|e| Error::io(&cfg.data.path, e))?;
    let ds = load_dataset(&resolved, resolved.data.truth_column.as_deref())?;
    create_dir(out_dir)?;
    let mut jobs = Vec::with_capacity(cfg.chains);
    for c in 0..cfg.chains {
        let mut chain_cfg = resolved.clone();
        chain_cfg.chains = 1;
        chain_cfg.sampler.chain = cfg.sampler.chain + c as u64;
        chain_cfg.output.dir = None;
        let dir = if cfg.chains == 1 {
            out_dir.to_path_buf()
        } else {
            out_dir.join(format!("chain-{}", c + 1))
        };
        create_dir(&dir)?;
        jobs.push((chain_cfg, dir));
    }
    if jobs.len() == 1 {
        let (c, d) = &jobs[0];
        return Ok(vec![run_dataset_chain(&ds.observations, c, d)?]);
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(c, d)| s.spawn(|| run_dataset_chain(&ds.observations, c, d)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Runtime("a sampling thread panicked".into()))))
            .collect()
    })
}

fn run_dataset_chain(obs: &Observations, cfg: &RunConfig, dir: &Path) -> Result<ChainOutput> {
    match obs {
        Observations::Continuous { rows, .. } => match cfg.data.kernel {
            KernelTag::UnivariateNormal => {
                let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
                let kernel = UnivariateNormalKernel::from_data(&y)?;
                run_chain(&kernel, &y, cfg, dir)
            }
            KernelTag::MultivariateNormal => {
                let kernel = MultivariateNormalKernel::from_data(rows)?;
                run_chain(&kernel, rows, cfg, dir)
            }
            KernelTag::LatentClass => unreachable!("categorical data loaded for lca"),
        },
        Observations::Categorical { levels, rows } => {
            let kernel = LatentClassKernel::new(levels.clone())?;
            kernel.validate(rows)?;
            run_chain(&kernel, rows, cfg, dir)
        }
    }
}

/// Runs one chain of any kernel and streams its output files into `dir`.
pub fn run_chain<K: ComponentKernel>(
    kernel: &K,
    data: &[K::Obs],
    cfg: &RunConfig,
    dir: &Path,
) -> Result<ChainOutput> {
    let sampler = TelescopingSampler::new(kernel, data, cfg.prior_k.clone(), cfg.concentration, cfg.sampler.clone())?;
    let mut trace_w = TraceWriter::create(&dir.join(TRACE_FILE))?;
    let mut alloc_w = if cfg.output.allocations {
        Some(AllocWriter::create(&dir.join(ALLOC_FILE), data.len())?)
    } else {
        None
    };
    let mut theta_w = if cfg.output.parameters {
        // A throwaway generator keeps the chain's random stream untouched.
        let mut probe = ChaCha8Rng::seed_from_u64(0);
        let width = kernel.flatten(&kernel.draw_theta_prior(&kernel.initial_phi(), &mut probe)).len();
        Some(ThetaWriter::create(&dir.join(THETA_FILE), width)?)
    } else {
        None
    };
    let mut failure: Option<Error> = None;
    let mut draws = 0usize;
    let trace = sampler.run_with(|rec, state| {
        if failure.is_some() {
            return;
        }
        draws += 1;
        let res = trace_w
            .write(rec)
            .and_then(|_| match alloc_w.as_mut() {
                Some(w) => w.write_row(&state.allocations),
                None => Ok(()),
            })
            .and_then(|_| match theta_w.as_mut() {
                Some(w) => {
                    let flat: Vec<Vec<f64>> = state.thetas[..rec.k_plus].iter().map(|t| kernel.flatten(t)).collect();
                    w.write_draw(rec.iteration, &flat)
                }
                None => Ok(()),
            });
        if let Err(e) = res {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    trace_w.finish()?;
    if let Some(w) = alloc_w {
        w.finish()?;
    }
    if let Some(w) = theta_w {
        w.finish()?;
    }
    let dim = match cfg.data.kernel {
        KernelTag::LatentClass => serde_json::Value::Null,
        _ => json!(kernel.features(&kernel.draw_theta_prior(&kernel.initial_phi(), &mut ChaCha8Rng::seed_from_u64(0))).len()),
    };
    let manifest = json!({
        "version": VERSION,
        "config": cfg,
        "n_obs": data.len(),
        "dimension": dim,
        "kernel": kernel.tag(),
        "kernel_constants": kernel.constants(),
        "seed": cfg.sampler.seed,
        "chain": cfg.sampler.chain,
        "residual_prior_mass_beyond_k_max": cfg.prior_k.tail_mass(cfg.sampler.k_max),
        "draws": draws,
        "acceptance_rate": trace.acceptance_rate,
        "final_mh_step": trace.mh_step,
    });
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(ChainOutput {
        dir: dir.to_path_buf(),
        draws,
        acceptance_rate: trace.acceptance_rate,
    })
}

/// Reads the resolved configuration stored with a run.
pub fn read_manifest(dir: &Path) -> Result<(RunConfig, serde_json::Value)> {
    let path = dir.join(MANIFEST_FILE);
    let v = read_json(&path)?;
    let cfg = RunConfig::from_json_str(&v.to_string())?;
    Ok((cfg, v))
}

/// Assembles the draws stored in a run directory for identification.
pub fn load_draws(dir: &Path) -> Result<DrawSet> {
    let (cfg, manifest) = read_manifest(dir)?;
    let trace = read_trace(&dir.join(TRACE_FILE))?;
    let (n, rows, allocations) = read_alloc(&dir.join(ALLOC_FILE))?;
    let theta = read_theta(&dir.join(THETA_FILE))?;
    if rows != trace.len() || theta.len() != trace.len() {
        return Err(Error::Data(format!(
            "{}: trace, allocations and parameters disagree on the number of draws",
            dir.display()
        )));
    }
    let dim = manifest["dimension"].as_u64().map(|d| d as usize);
    let features = theta
        .iter()
        .map(|(_, comps)| {
            comps
                .iter()
                .map(|p| match cfg.data.kernel {
                    KernelTag::UnivariateNormal => p[..1].to_vec(),
                    KernelTag::MultivariateNormal => p[..dim.unwrap_or(p.len()).min(p.len())].to_vec(),
                    KernelTag::LatentClass => p.clone(),
                })
                .collect()
        })
        .collect();
    Ok(DrawSet {
        n_obs: n,
        k_plus: trace.iter().map(|r| r.k_plus).collect(),
        allocations,
        features,
        params: theta.into_iter().map(|(_, c)| c).collect(),
    })
}

/// Identifies the mixture from a run directory and writes
/// `identified.json` and `partition.csv` into it.
pub fn identify_run(dir: &Path, opts: &IdentifyOptions) -> Result<IdentifiedModel> {
    let draws = load_draws(dir)?;
    let model = identify(&draws, opts)?;
    write_partition(&dir.join(PARTITION_FILE), &model.map_partition)?;
    write_json(
        &dir.join(IDENTIFIED_FILE),
        &json!({
            "k_plus_hat": model.k_plus_hat,
            "qualifying_draws": model.qualifying,
            "retained_draws": model.retained,
            "retention_rate": model.retention_rate(),
            "cluster_sizes": model.cluster_sizes(),
            "parameter_means": model.param_means,
        }),
    )?;
    Ok(model)
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub draws: usize,
    pub posterior: PosteriorTable,
    pub acceptance_rate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_plus_hat: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retention_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cluster_sizes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjusted_rand_index: Option<f64>,
}

/// Writes `posterior_k.csv`, `acf.csv`, `summary.json` and, when
/// allocations and parameters were stored, `partition.csv`.
pub fn diagnose_run(dir: &Path, truth_column: Option<&str>, max_lag: usize, opts: &IdentifyOptions) -> Result<RunSummary> {
    let (cfg, _) = read_manifest(dir)?;
    let trace = read_trace(&dir.join(TRACE_FILE))?;
    if trace.is_empty() {
        return Err(Error::Data(format!("{}: no draws in trace", dir.display())));
    }
    let ks: Vec<usize> = trace.iter().map(|r| r.k).collect();
    let kps: Vec<usize> = trace.iter().map(|r| r.k_plus).collect();
    let table = posterior_table(&ks, &kps)?;
    write_posterior_k(&dir.join(POSTERIOR_K_FILE), &table)?;

    let lag = max_lag.min(trace.len() - 1);
    let as_f = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
    let conc: Vec<f64> = trace.iter().map(|r| r.concentration).collect();
    let series: Vec<(&str, Acf)> = vec![
        ("K", acf(&as_f(&ks), lag)?),
        ("Kplus", acf(&as_f(&kps), lag)?),
        ("concentration", acf(&conc, lag)?),
    ];
    write_acf(&dir.join(ACF_FILE), lag, &series)?;

    let mut summary = RunSummary {
        draws: trace.len(),
        posterior: table,
        acceptance_rate: trace.iter().filter(|r| r.accepted).count() as f64 / trace.len() as f64,
        k_plus_hat: None,
        retention_rate: None,
        cluster_sizes: None,
        adjusted_rand_index: None,
    };
    if dir.join(ALLOC_FILE).exists() && dir.join(THETA_FILE).exists() {
        let model = identify_run(dir, opts)?;
        summary.k_plus_hat = Some(model.k_plus_hat);
        summary.retention_rate = Some(model.retention_rate());
        summary.cluster_sizes = Some(model.cluster_sizes());
        if let Some(col) = truth_column {
            let ds = load_dataset(&cfg, Some(col))?;
            let truth = ds.truth.ok_or_else(|| Error::Config(format!("no column '{col}'")))?;
            summary.adjusted_rand_index = Some(adjusted_rand_index(&model.map_partition, &truth.iter().map(String::as_str).collect::<Vec<_>>())?);
        }
    } else if truth_column.is_some() {
        return Err(Error::Config(
            "agreement with reference labels needs stored allocations and parameters".into(),
        ));
    }
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// Prior probabilities of `K` and `K₊` for `k = 1..=min(N, cutoff)`.
pub fn prior_table(n: usize, prior: &ComponentCountPrior, regime: &Regime, cutoff: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let kp = prior_k_plus(n, prior, regime)?;
    let m = n.min(cutoff);
    let pk = (1..=m)
        .map(|k| match *regime {
            Regime::FixedK { k: kk, .. } => f64::from(u8::from(k == kk)),
            Regime::Dpm { .. } => 0.0,
            _ => prior.pmf(k).unwrap_or(0.0),
        })
        .collect();
    Ok((pk, kp[..m].to_vec()))
}

/// Writes a benchmark data set with columns `x1..xr,label` (1-based labels).
pub fn simulate_to_file(r: usize, n: usize, seed: u64, path: &Path) -> Result<()> {
    let (data, labels) = simulate_benchmark(r, n, seed)?;
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(f));
    let mut header: Vec<String> = (1..=r).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    let wrap = |e: csv::Error| Error::Runtime(format!("{}: {e}", path.display()));
    w.write_record(&header).map_err(wrap)?;
    for (row, l) in data.iter().zip(labels) {
        let mut rec: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        rec.push((l + 1).to_string());
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
