//! GHZ-state preparation on a network with an alternating `ZZ` / `X` ansatz,
//! and the phase-kickback frequency test.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::qgcnn_zz_mixer_program;
use crate::error::{QgnnError, Result};
use crate::experiments::GraphSpec;
use crate::hamiltonians::ghz_stabilizer_sum;
use crate::optimize::{adam_minimize, AdamConfig, Trace};
use crate::rng;
use crate::sim::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GhzConfig {
    pub graph: GraphSpec,
    pub depth: usize,
    pub steps: usize,
    pub fd_eps: f64,
    pub adam: AdamConfig,
    /// Initial times are drawn uniformly from `[0, init_scale)`.
    pub init_scale: f64,
    /// Independent Adam runs from fresh random starts; the best is kept.
    pub restarts: usize,
    /// Stop a run early once the loss reaches `-(n - target_gap)`.
    pub target_gap: f64,
    /// Points in the phase-kickback sweep over `[0, 2π)`.
    pub kickback_points: usize,
}

impl Default for GhzConfig {
    fn default() -> Self {
        Self {
            graph: GraphSpec::Path { n: 6 },
            depth: 6,
            steps: 1000,
            fd_eps: 1e-4,
            adam: AdamConfig::default(),
            init_scale: 0.2,
            restarts: 1,
            target_gap: 1e-3,
            kickback_points: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzResult {
    pub n: usize,
    pub depth: usize,
    pub final_loss: f64,
    pub fidelity: f64,
    pub params: Vec<f64>,
    pub restart_losses: Vec<f64>,
    pub kickback_ratio: f64,
    #[serde(skip)]
    pub trace: Trace,
    #[serde(skip)]
    pub state: Option<StateVector>,
}

/// Stabilizer loss `-⟨X^⊗n + Σ Z_j Z_{j+1}⟩` of a state.
pub fn stabilizer_loss(state: &StateVector) -> Result<f64> {
    Ok(-state.expectation(&ghz_stabilizer_sum(state.n_qubits())?)?)
}

pub fn run_ghz_preparation(config: &GhzConfig, seed: u64) -> Result<GhzResult> {
    let g = config.graph.build(&mut rng::stream(seed, 0))?;
    let n = g.n();
    if n < 2 {
        return Err(QgnnError::InvalidArgument("GHZ preparation needs n >= 2".into()));
    }
    let program = qgcnn_zz_mixer_program(&g, config.depth)?;
    let stabilizers = ghz_stabilizer_sum(n)?;
    let initial = StateVector::plus(n);
    let loss = |params: &[f64]| -> f64 {
        program
            .apply(params, &initial)
            .and_then(|s| s.expectation(&stabilizers))
            .map_or(f64::NAN, |e| -e)
    };

    let mut best: Option<(f64, Vec<f64>, Trace)> = None;
    let mut restart_losses = Vec::new();
    for r in 0..config.restarts.max(1) {
        let mut init_rng = rng::stream(seed, 1 + r as u64);
        let init: Vec<f64> = (0..program.param_count())
            .map(|_| init_rng.gen::<f64>() * config.init_scale)
            .collect();
        let target = -(n as f64) + config.target_gap;
        let res = adam_minimize(&loss, &init, config.steps, config.fd_eps, config.adam, Some(target))?;
        restart_losses.push(res.loss);
        if best.as_ref().is_none_or(|b| res.loss < b.0) {
            best = Some((res.loss, res.params, res.trace));
        }
        if res.loss <= target {
            break;
        }
    }
    let (final_loss, params, trace) = best.expect("at least one restart");
    let state = program.apply(&params, &initial)?;
    let fidelity = StateVector::ghz(n).fidelity(&state)?;
    let kickback = phase_kickback_test(&state, 0, &uniform_phases(config.kickback_points))?;
    Ok(GhzResult {
        n,
        depth: config.depth,
        final_loss,
        fidelity,
        params,
        restart_losses,
        kickback_ratio: kickback.ratio,
        trace,
        state: Some(state),
    })
}

/// `count` phases evenly spaced over `[0, 2π)`.
pub fn uniform_phases(count: usize) -> Vec<f64> {
    (0..count).map(|i| 2.0 * PI * i as f64 / count as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickbackResult {
    /// Collector `⟨X⟩` for each phase.
    pub signal: Vec<f64>,
    /// Dominant non-constant Fourier bin of the signal.
    pub signal_bin: usize,
    /// Dominant bin of the single-qubit reference `cos 2φ`.
    pub reference_bin: usize,
    pub ratio: f64,
}

/// Phase-kickback test: for each `φ` apply `⊗_j e^{-iφZ_j}`, fold the phases
/// onto `collector` with a CNOT cascade along the path `collector, …`, and
/// record `⟨X_collector⟩`. The result compares the dominant oscillation
/// frequency of that signal against the single-qubit reference `cos 2φ`.
///
/// The cascade follows qubit order outward from the collector. The constant
/// Fourier component is excluded when locating the dominant frequency.
pub fn phase_kickback_test(state: &StateVector, collector: usize, phis: &[f64]) -> Result<KickbackResult> {
    let n = state.n_qubits();
    if collector >= n {
        return Err(QgnnError::QubitOutOfRange {
            index: collector,
            n_qubits: n,
        });
    }
    if phis.len() < 2 * n + 2 {
        return Err(QgnnError::InvalidArgument(format!(
            "{} phase points cannot resolve frequency {n}; need at least {}",
            phis.len(),
            2 * n + 2
        )));
    }
    let path: Vec<usize> = std::iter::once(collector)
        .chain((0..n).filter(|&q| q != collector))
        .collect();
    let mut signal = Vec::with_capacity(phis.len());
    for &phi in phis {
        let mut s = state.clone();
        for q in 0..n {
            s.rotate_z(q, phi)?;
        }
        for i in (1..path.len()).rev() {
            s.cnot(path[i - 1], path[i])?;
        }
        signal.push(x_expectation(&s, collector));
    }
    let reference: Vec<f64> = phis.iter().map(|p| (2.0 * p).cos()).collect();
    let signal_bin = dominant_bin(&signal);
    let reference_bin = dominant_bin(&reference);
    Ok(KickbackResult {
        ratio: signal_bin as f64 / reference_bin as f64,
        signal,
        signal_bin,
        reference_bin,
    })
}

fn x_expectation(state: &StateVector, qubit: usize) -> f64 {
    let bit = 1usize << qubit;
    let a = state.amplitudes();
    (0..a.len())
        .filter(|b| b & bit == 0)
        .map(|b| 2.0 * (a[b].conj() * a[b | bit]).re)
        .sum()
}

/// Index in `1..=len/2` of the largest DFT magnitude.
fn dominant_bin(signal: &[f64]) -> usize {
    let len = signal.len();
    (1..=len / 2)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &v) in signal.iter().enumerate() {
                let ang = -2.0 * PI * (k * t) as f64 / len as f64;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (k, re * re + im * im)
        })
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}
