//! Learning a hidden Ising Hamiltonian from snapshots of its dynamics.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{ising_coefficients, ising_from_coefficients, qgrnn_ising_program, AnsatzProgram};
use crate::error::{QgnnError, Result};
use crate::experiments::GraphSpec;
use crate::graph::Graph;
use crate::hamiltonians::{ising_hamiltonian, IsingParams};
use crate::optimize::{finite_diff_gradient, AdamConfig, AdamState, Trace};
use crate::rng;
use crate::sim::{DenseHamiltonian, StateVector, DEFAULT_DENSE_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    pub graph: GraphSpec,
    /// Hidden coupling on every edge of the target graph.
    pub coupling: f64,
    /// Hidden bias on every node.
    pub bias: f64,
    /// Trotter step: each slot evolves for `delta` per repetition.
    pub delta: f64,
    pub t_max: f64,
    pub batch: usize,
    pub steps: usize,
    /// Draw a fresh batch of times every step instead of reusing one.
    pub resample: bool,
    pub fd_eps: f64,
    pub adam: AdamConfig,
    /// Initial couplings and biases are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            graph: GraphSpec::Ring { n: 4 },
            coupling: 1.0,
            bias: 0.5,
            delta: 0.05,
            t_max: 1.0,
            batch: 15,
            steps: 500,
            resample: true,
            fd_eps: 1e-4,
            adam: AdamConfig::default(),
            init_range: 1.0,
        }
    }
}

/// `psi0` together with exact evolutions `(T, e^{-iHT} psi0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsDataset {
    pub psi0: StateVector,
    pub pairs: Vec<(f64, StateVector)>,
    pub t_max: f64,
}

impl DynamicsDataset {
    pub fn from_times(hidden: &DenseHamiltonian, psi0: &StateVector, times: &[f64], t_max: f64) -> Result<Self> {
        let mut pairs = Vec::with_capacity(times.len());
        for &t in times {
            if !(0.0..=t_max).contains(&t) {
                return Err(QgnnError::InvalidArgument(format!("time {t} outside [0, {t_max}]")));
            }
            let mut psi = psi0.clone();
            hidden.evolve(&mut psi, t)?;
            pairs.push((t, psi));
        }
        Ok(Self {
            psi0: psi0.clone(),
            pairs,
            t_max,
        })
    }

    /// `batch` times uniform in `[0, t_max]`.
    pub fn sample<R: Rng + ?Sized>(
        hidden: &DenseHamiltonian,
        psi0: &StateVector,
        batch: usize,
        t_max: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let times: Vec<f64> = (0..batch).map(|_| rng.gen::<f64>() * t_max).collect();
        Self::from_times(hidden, psi0, &times, t_max)
    }
}

/// Batch-average infidelity `1 − (1/B) Σ |⟨ψ_T| U(T) |ψ₀⟩|²` of the
/// recurrent program with Ising coefficients `coeffs`, run for `T / delta`
/// repetitions per sample.
pub fn dynamics_loss(program: &AnsatzProgram, coeffs: &[f64], delta: f64, data: &DynamicsDataset) -> Result<f64> {
    if data.pairs.is_empty() {
        return Err(QgnnError::EmptySamples);
    }
    let mut params = vec![delta, delta];
    params.extend_from_slice(coeffs);
    let compiled = program.compile(&params)?;
    let fids: Vec<f64> = data
        .pairs
        .par_iter()
        .map(|(t, target)| {
            let out = compiled.apply_repetitions(&data.psi0, t / delta)?;
            target.fidelity(&out)
        })
        .collect::<Result<_>>()?;
    Ok(1.0 - fids.iter().sum::<f64>() / fids.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsResult {
    pub n: usize,
    pub hidden: IsingParams,
    pub initial: IsingParams,
    /// Learned couplings over the complete graph.
    pub learned: IsingParams,
    pub initial_loss: f64,
    /// Average infidelity on a held-out batch of times.
    pub final_infidelity: f64,
    /// Largest learned `|J|` on a pair that is not an edge of the target.
    pub max_non_edge_coupling: f64,
    /// Largest error over the target's couplings and biases.
    pub max_param_error: f64,
    #[serde(skip)]
    pub trace: Trace,
}

/// Trains a temporally tied Ising program over the complete graph to
/// reproduce the dynamics of the hidden model on `g_true`.
///
/// The start state is the ground state of the random initial guess.
pub fn run_dynamics_learning(g_true: &Graph, hidden: &IsingParams, config: &DynamicsConfig, seed: u64) -> Result<DynamicsResult> {
    let n = g_true.n();
    if n > DEFAULT_DENSE_CAP {
        return Err(QgnnError::DenseCapExceeded {
            n_qubits: n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    if !(config.t_max > 0.0 && config.delta > 0.0) {
        return Err(QgnnError::InvalidArgument("t_max and delta must be positive".into()));
    }
    if config.batch == 0 {
        return Err(QgnnError::InvalidArgument("batch must be at least 1".into()));
    }
    let target = DenseHamiltonian::new(&ising_hamiltonian(g_true, hidden)?)?;
    let full = Graph::complete(n)?;
    let program = qgrnn_ising_program(&full)?;

    let mut init_rng = rng::stream(seed, 0);
    let mut coeffs: Vec<f64> = (0..program.coeff_param_count())
        .map(|_| init_rng.gen_range(-config.init_range..=config.init_range))
        .collect();
    let initial = ising_from_coefficients(&full, &coeffs)?;
    let psi0 = DenseHamiltonian::new(&ising_hamiltonian(&full, &initial)?)?.ground_state();

    let eval_set = DynamicsDataset::sample(&target, &psi0, config.batch, config.t_max, &mut rng::stream(seed, 1))?;
    let initial_loss = dynamics_loss(&program, &coeffs, config.delta, &eval_set)?;

    let started = std::time::Instant::now();
    let mut trace = Trace::default();
    let mut adam = AdamState::new(coeffs.len(), config.adam);
    let mut batch_rng = rng::stream(seed, 2);
    let mut batch = DynamicsDataset::sample(&target, &psi0, config.batch, config.t_max, &mut batch_rng)?;
    for step in 0..config.steps {
        if config.resample && step > 0 {
            batch = DynamicsDataset::sample(&target, &psi0, config.batch, config.t_max, &mut batch_rng)?;
        }
        let f = |c: &[f64]| dynamics_loss(&program, c, config.delta, &batch).unwrap_or(f64::NAN);
        let grad = finite_diff_gradient(&f, &coeffs, config.fd_eps)?;
        trace.push(step, f(&coeffs), started, &coeffs);
        adam.step(&mut coeffs, &grad)?;
    }
    let final_infidelity = dynamics_loss(&program, &coeffs, config.delta, &eval_set)?;
    trace.push(config.steps, final_infidelity, started, &coeffs);

    let learned = ising_from_coefficients(&full, &coeffs)?;
    let mut max_non_edge: f64 = 0.0;
    let mut max_err: f64 = 0.0;
    for (j, k, _) in full.edges() {
        let c = learned.coupling(j, k).unwrap_or(0.0);
        match hidden.coupling(j, k) {
            Some(h) if g_true.has_edge(j, k) => max_err = max_err.max((c - h).abs()),
            _ => max_non_edge = max_non_edge.max(c.abs()),
        }
    }
    for (l, h) in learned.biases.iter().zip(&hidden.biases) {
        max_err = max_err.max((l - h).abs());
    }
    Ok(DynamicsResult {
        n,
        hidden: hidden.clone(),
        initial,
        learned,
        initial_loss,
        final_infidelity,
        max_non_edge_coupling: max_non_edge,
        max_param_error: max_err,
        trace,
    })
}

/// Hidden target of the config: its graph with uniform couplings and biases.
pub fn hidden_model(config: &DynamicsConfig, seed: u64) -> Result<(Graph, IsingParams)> {
    let g = config.graph.build(&mut rng::stream(seed, 3))?;
    let hidden = IsingParams::uniform(&g, config.coupling, config.bias);
    Ok((g, hidden))
}

/// Hidden parameters embedded in the complete-graph coefficient layout
/// (zero coupling off the target's edges).
pub fn embed_complete(g: &Graph, params: &IsingParams) -> Result<Vec<f64>> {
    let full = Graph::complete(g.n())?;
    let embedded = IsingParams {
        couplings: full
            .edges()
            .map(|(j, k, _)| ((j, k), params.coupling(j, k).unwrap_or(0.0)))
            .collect(),
        biases: params.biases.clone(),
    };
    ising_coefficients(&full, &embedded)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_setup() -> (Graph, IsingParams, DenseHamiltonian, AnsatzProgram, StateVector) {
        let g = Graph::ring(4).unwrap();
        let hidden = IsingParams::uniform(&g, 1.0, 0.5);
        let target = DenseHamiltonian::new(&ising_hamiltonian(&g, &hidden).unwrap()).unwrap();
        let program = qgrnn_ising_program(&Graph::complete(4).unwrap()).unwrap();
        let psi0 = StateVector::random(4, &mut rng::master(8));
        (g, hidden, target, program, psi0)
    }

    #[test]
    fn hidden_parameters_leave_only_trotter_error() {
        let (g, hidden, target, program, psi0) = ring_setup();
        let coeffs = embed_complete(&g, &hidden).unwrap();
        let data = DynamicsDataset::sample(&target, &psi0, 15, 1.0, &mut rng::master(3)).unwrap();
        let losses: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&d| dynamics_loss(&program, &coeffs, d, &data).unwrap())
            .collect();
        assert!(losses[0] < 0.05, "{losses:?}");
        assert!(losses[0] > losses[1] && losses[1] > losses[2], "{losses:?}");
    }

    #[test]
    fn zero_time_sample_has_unit_fidelity() {
        let (_, _, target, program, psi0) = ring_setup();
        let data = DynamicsDataset::from_times(&target, &psi0, &[0.0], 1.0).unwrap();
        let coeffs: Vec<f64> = (0..10).map(|i| i as f64 * 0.37 - 1.0).collect();
        assert!(dynamics_loss(&program, &coeffs, 0.05, &data).unwrap().abs() < 1e-12);
    }

    #[test]
    fn times_outside_range_rejected() {
        let (_, _, target, _, psi0) = ring_setup();
        assert!(DynamicsDataset::from_times(&target, &psi0, &[1.5], 1.0).is_err());
    }

    #[test]
    fn dataset_states_follow_exact_evolution() {
        // Oracle: Taylor series of e^{-iHT} applied through the Pauli sum.
        let (g, hidden, target, _, psi0) = ring_setup();
        let h = ising_hamiltonian(&g, &hidden).unwrap();
        let t = 0.3;
        let mut term = psi0.amplitudes().to_vec();
        let mut acc = term.clone();
        for k in 1..40 {
            let mut next = h.apply(&term).unwrap();
            let scale = num_complex::Complex64::new(0.0, -t / k as f64);
            next.iter_mut().for_each(|a| *a *= scale);
            acc.iter_mut().zip(&next).for_each(|(a, b)| *a += b);
            term = next;
        }
        let data = DynamicsDataset::from_times(&target, &psi0, &[t], 1.0).unwrap();
        let got = data.pairs[0].1.amplitudes();
        let err = acc.iter().zip(got).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }
}
