//! Spectral clustering: train the spectral schedule to lower the coupling
//! (plus anharmonic) energy and read out the energy histogram.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{qsgcnn_layer_schedule, AnsatzProgram, Potential, Precision};
use crate::error::{QgnnError, Result};
use crate::experiments::GraphSpec;
use crate::graph::Graph;
use crate::optimize::{adam_minimize, AdamConfig, Trace};
use crate::rng;
use crate::sim::{potential_energies, PositionRegister, StateVector};

/// Largest qubit total the clustering run accepts.
pub const MAX_CLUSTER_QUBITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClusterMode {
    /// One qubit per node; the anharmonic term becomes a constant and drops out.
    SingleQubit,
    /// `m` qubits per node on a grid spanning `[-half_width, half_width]`.
    MultiQubit { m: usize, half_width: f64, mu: f64, omega: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub graph: GraphSpec,
    pub mode: ClusterMode,
    pub depth: usize,
    pub steps: usize,
    pub fd_eps: f64,
    pub adam: AdamConfig,
    /// Initial times are drawn uniformly from `[0, init_scale)`.
    pub init_scale: f64,
    /// Measurement shots for the histogram; 0 uses exact probabilities.
    pub shots: usize,
    /// Number of most probable configurations to report.
    pub top: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            graph: GraphSpec::BridgedTriangles,
            mode: ClusterMode::SingleQubit,
            depth: 4,
            steps: 300,
            fd_eps: 1e-4,
            adam: AdamConfig::default(),
            init_scale: 0.2,
            shots: 0,
            top: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub energy: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    /// Node levels, node 0 first: bits in single-qubit mode, grid indices
    /// otherwise.
    pub label: String,
    pub basis_index: usize,
    pub probability: f64,
    pub energy: f64,
    pub node_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub n_nodes: usize,
    pub n_qubits: usize,
    pub depth: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub params: Vec<f64>,
    pub histogram: Vec<HistogramBin>,
    pub top_configurations: Vec<Configuration>,
    /// Per-node position marginals (multi-qubit mode only).
    pub marginals: Vec<Vec<f64>>,
    #[serde(skip)]
    pub trace: Trace,
    #[serde(skip)]
    pub state: Option<StateVector>,
}

impl ClusterResult {
    /// CSV `energy,probability`.
    pub fn write_histogram_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "energy,probability")?;
        for b in &self.histogram {
            writeln!(w, "{},{}", b.energy, b.probability)?;
        }
        Ok(())
    }
}

/// Everything needed to evaluate and read out the schedule on one graph.
pub struct ClusterProblem {
    pub program: AnsatzProgram,
    /// Loss energy of every basis state.
    pub energies: Vec<f64>,
    register: Option<PositionRegister>,
    n_nodes: usize,
}

impl ClusterProblem {
    pub fn new(g: &Graph, mode: &ClusterMode, depth: usize) -> Result<Self> {
        match mode {
            ClusterMode::SingleQubit => {
                check_cap(g.n())?;
                let lap = g.laplacian();
                Ok(Self {
                    program: qsgcnn_layer_schedule(g, &Precision::SingleQubit, depth)?,
                    energies: (0..1usize << g.n()).map(|b| lap.quadratic_form_bits(b)).collect(),
                    register: None,
                    n_nodes: g.n(),
                })
            }
            ClusterMode::MultiQubit {
                m,
                half_width,
                mu,
                omega,
            } => {
                check_cap(g.n() * m)?;
                let register = PositionRegister::spanning(g.n(), *m, *half_width)?;
                let potential = Potential::Sum(vec![
                    Potential::Coupling { graph: g.clone() },
                    Potential::Quartic { mu: *mu, omega: *omega },
                ]);
                let energies = potential_energies(&register, register.total_qubits(), |xs| potential.energy(xs))?;
                let precision = Precision::MultiQubit {
                    register: register.clone(),
                    mu: *mu,
                    omega: *omega,
                };
                Ok(Self {
                    program: qsgcnn_layer_schedule(g, &precision, depth)?,
                    energies,
                    register: Some(register),
                    n_nodes: g.n(),
                })
            }
        }
    }

    pub fn initial_state(&self) -> StateVector {
        StateVector::plus(self.program.n_qubits())
    }

    pub fn output(&self, params: &[f64]) -> Result<StateVector> {
        self.program.apply(params, &self.initial_state())
    }

    /// Expected energy of a state.
    pub fn energy(&self, state: &StateVector) -> f64 {
        state
            .probabilities()
            .iter()
            .zip(&self.energies)
            .map(|(p, e)| p * e)
            .sum()
    }

    /// Probability per distinct energy, ascending. Energies closer than
    /// `1e-9` share a bin.
    pub fn histogram(&self, probs: &[f64]) -> Vec<HistogramBin> {
        let mut bins: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
        for (e, p) in self.energies.iter().zip(probs) {
            let key = (e * 1e9).round() as i64;
            let bin = bins.entry(key).or_insert((*e, 0.0));
            bin.1 += p;
        }
        bins.into_values()
            .map(|(energy, probability)| HistogramBin { energy, probability })
            .collect()
    }

    pub fn describe(&self, basis_index: usize, probability: f64) -> Configuration {
        let (label, node_values) = match &self.register {
            None => {
                let bits: Vec<f64> = (0..self.n_nodes).map(|v| ((basis_index >> v) & 1) as f64).collect();
                (bits.iter().map(|b| if *b > 0.5 { '1' } else { '0' }).collect(), bits)
            }
            Some(reg) => {
                let mut xs = vec![0.0; self.n_nodes];
                reg.node_values(basis_index, &mut xs);
                let levels: Vec<String> = (0..self.n_nodes)
                    .map(|v| reg.node_level(v, basis_index).to_string())
                    .collect();
                (levels.join(":"), xs)
            }
        };
        Configuration {
            label,
            basis_index,
            probability,
            energy: self.energies[basis_index],
            node_values,
        }
    }

    /// The `count` most probable basis states (ties broken by index).
    pub fn top_configurations(&self, probs: &[f64], count: usize) -> Vec<Configuration> {
        let mut order: Vec<usize> = (0..probs.len()).collect();
        order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
        order.into_iter().take(count).map(|i| self.describe(i, probs[i])).collect()
    }
}

fn check_cap(n_qubits: usize) -> Result<()> {
    if n_qubits > MAX_CLUSTER_QUBITS {
        return Err(QgnnError::DenseCapExceeded {
            n_qubits,
            cap: MAX_CLUSTER_QUBITS,
        });
    }
    Ok(())
}

/// Empirical probabilities from `shots` measurements.
fn sampled_probabilities<R: Rng + ?Sized>(state: &StateVector, shots: usize, rng: &mut R) -> Vec<f64> {
    let record = state.sample_bitstrings(shots, rng);
    let mut probs = vec![0.0; state.dim()];
    for b in record.bitstrings {
        probs[b] += 1.0 / shots as f64;
    }
    probs
}

/// Trains the spectral schedule on `g` by finite-difference Adam on the
/// expected energy, starting from the uniform superposition.
pub fn run_spectral_clustering(config: &ClusterConfig, seed: u64) -> Result<ClusterResult> {
    let g = config.graph.build(&mut rng::stream(seed, 0))?;
    let problem = ClusterProblem::new(&g, &config.mode, config.depth)?;
    let loss = |params: &[f64]| -> f64 {
        problem
            .output(params)
            .map_or(f64::NAN, |s| problem.energy(&s))
    };
    let mut init_rng = rng::stream(seed, 1);
    let init: Vec<f64> = (0..problem.program.param_count())
        .map(|_| init_rng.gen::<f64>() * config.init_scale)
        .collect();
    let initial_loss = loss(&init);
    let opt = adam_minimize(&loss, &init, config.steps, config.fd_eps, config.adam, None)?;
    let state = problem.output(&opt.params)?;
    let probs = if config.shots == 0 {
        state.probabilities()
    } else {
        sampled_probabilities(&state, config.shots, &mut rng::stream(seed, 2))
    };
    let marginals = match &problem.register {
        Some(reg) => (0..g.n()).map(|v| reg.marginal(&state, v)).collect(),
        None => Vec::new(),
    };
    Ok(ClusterResult {
        n_nodes: g.n(),
        n_qubits: problem.program.n_qubits(),
        depth: config.depth,
        initial_loss,
        final_loss: opt.loss,
        params: opt.params,
        histogram: problem.histogram(&probs),
        top_configurations: problem.top_configurations(&probs, config.top),
        marginals,
        trace: opt.trace,
        state: Some(state),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edgeless_graph_has_zero_energy_everywhere() {
        let cfg = ClusterConfig {
            graph: GraphSpec::Edges { n: 4, edges: vec![] },
            steps: 5,
            ..Default::default()
        };
        let res = run_spectral_clustering(&cfg, 1).unwrap();
        assert_eq!(res.final_loss, 0.0);
        assert_eq!(res.histogram.len(), 1);
        assert!((res.histogram[0].probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_matches_cut_counts_on_uniform_state() {
        // Uniform superposition: the mass at energy k is (#bitstrings cutting k edges) / 2^n.
        let g = Graph::ring(4).unwrap();
        let problem = ClusterProblem::new(&g, &ClusterMode::SingleQubit, 1).unwrap();
        let probs = problem.initial_state().probabilities();
        let hist = problem.histogram(&probs);
        // C4 cuts: 0 edges (2 strings), 2 edges (12), 4 edges (2).
        let expect = [(0.0, 2.0 / 16.0), (2.0, 12.0 / 16.0), (4.0, 2.0 / 16.0)];
        assert_eq!(hist.len(), 3);
        for (b, (e, p)) in hist.iter().zip(expect) {
            assert_eq!(b.energy, e);
            assert!((b.probability - p).abs() < 1e-12);
        }
    }

    #[test]
    fn configuration_labels_list_node_zero_first() {
        let g = Graph::bridged_triangles();
        let problem = ClusterProblem::new(&g, &ClusterMode::SingleQubit, 1).unwrap();
        let c = problem.describe(0b000111, 1.0);
        assert_eq!(c.label, "111000");
        assert_eq!(c.energy, 1.0);
    }

    #[test]
    fn qubit_cap_enforced() {
        let mode = ClusterMode::MultiQubit {
            m: 6,
            half_width: 2.0,
            mu: 0.0,
            omega: 1.0,
        };
        let g = Graph::path(4).unwrap();
        assert!(matches!(
            ClusterProblem::new(&g, &mode, 1),
            Err(QgnnError::DenseCapExceeded { .. })
        ));
    }
}
