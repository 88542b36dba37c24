//! Dispatch a validated configuration and write the result files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use qgnn_core::experiments::dynamics::hidden_model;
use qgnn_core::experiments::{run_dynamics_learning, run_ghz_preparation, run_graph_isomorphism, run_spectral_clustering};
use qgnn_core::optimize::Trace;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
    pub summary: String,
}

struct Artifacts {
    metrics: Value,
    trace: Trace,
    extra: Vec<(&'static str, Vec<u8>)>,
    summary: String,
}

fn to_value<T: Serialize>(v: &T) -> anyhow::Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn execute(config: &RunConfig) -> anyhow::Result<Artifacts> {
    let seed = config.seed;
    Ok(match config.experiment {
        Experiment::Dynamics => {
            let (g, hidden) = hidden_model(&config.dynamics, seed)?;
            let r = run_dynamics_learning(&g, &hidden, &config.dynamics, seed).context("dynamics learning")?;
            Artifacts {
                summary: format!(
                    "dynamics: infidelity {:.3e} -> {:.3e}, max non-edge |J| {:.3}, max param error {:.3}",
                    r.initial_loss, r.final_infidelity, r.max_non_edge_coupling, r.max_param_error
                ),
                metrics: to_value(&r)?,
                trace: r.trace,
                extra: vec![],
            }
        }
        Experiment::Ghz => {
            let r = run_ghz_preparation(&config.ghz, seed).context("GHZ preparation")?;
            Artifacts {
                summary: format!(
                    "ghz: n {} final loss {:.6} fidelity {:.6} kickback ratio {}",
                    r.n, r.final_loss, r.fidelity, r.kickback_ratio
                ),
                metrics: to_value(&r)?,
                trace: r.trace,
                extra: vec![],
            }
        }
        Experiment::Cluster => {
            let r = run_spectral_clustering(&config.cluster, seed).context("spectral clustering")?;
            let mut hist = Vec::new();
            r.write_histogram_csv(&mut hist)?;
            let top = r.top_configurations.first().map_or(String::new(), |c| c.label.clone());
            Artifacts {
                summary: format!(
                    "cluster: energy {:.6} -> {:.6}, most probable configuration {top}",
                    r.initial_loss, r.final_loss
                ),
                metrics: to_value(&r)?,
                trace: r.trace,
                extra: vec![("histogram.csv", hist)],
            }
        }
        Experiment::Isomorphism => {
            let r = run_graph_isomorphism(&config.isomorphism, seed).context("isomorphism classification")?;
            let mut pairs = Vec::new();
            r.write_pairs_csv(&mut pairs)?;
            Artifacts {
                summary: format!(
                    "isomorphism: accuracy train {:.1}% val {:.1}% test {:.1}%, train loss {:.4}",
                    100.0 * r.train.accuracy,
                    100.0 * r.val.accuracy,
                    100.0 * r.test.accuracy,
                    r.train.mean_loss
                ),
                metrics: to_value(&r)?,
                trace: r.trace,
                extra: vec![("pairs.csv", pairs)],
            }
        }
    })
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, dir.join(name)).with_context(|| format!("renaming into {name}"))?;
    Ok(())
}

fn unix_ms(t: SystemTime) -> u128 {
    t.duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

/// Runs the configured experiment and writes `result.json`, `trace.csv` and
/// any experiment-specific CSVs into `config.out`.
pub fn run(config: &RunConfig) -> anyhow::Result<RunOutcome> {
    config.validate().map_err(|e| anyhow::anyhow!("invalid config: {e}"))?;
    if config.threads > 0 {
        // Fails only if a global pool already exists, in which case keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(config.threads).build_global();
    }
    let started_at = SystemTime::now();
    let clock = Instant::now();
    let artifacts = execute(config)?;
    let elapsed = clock.elapsed();

    let out = &config.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut files = vec!["result.json".to_string(), "trace.csv".to_string()];
    let mut trace = Vec::new();
    artifacts.trace.write_csv(&mut trace)?;
    write_atomic(out, "trace.csv", &trace)?;
    for (name, bytes) in &artifacts.extra {
        write_atomic(out, name, bytes)?;
        files.push((*name).to_string());
    }
    let result = json!({
        "experiment": config.experiment.name(),
        "seed": config.seed,
        "config": config,
        "metrics": artifacts.metrics,
        "files": files,
        "meta": {
            "started_unix_ms": unix_ms(started_at),
            "elapsed_ms": elapsed.as_millis(),
            "threads": rayon::current_num_threads(),
            "version": env!("CARGO_PKG_VERSION"),
        },
    });
    let mut body = serde_json::to_vec_pretty(&result)?;
    body.push(b'\n');
    write_atomic(out, "result.json", &body)?;
    Ok(RunOutcome {
        out_dir: out.clone(),
        files,
        summary: artifacts.summary,
    })
}
