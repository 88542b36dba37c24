//! Graph-isomorphism classification from output energy distributions.
//!
//! Both graphs of a pair run the single-qubit spectral schedule with the
//! same parameters; the KS distance between their measured `bᵀLb` energies
//! decides the label.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{qsgcnn_layer_schedule, AnsatzProgram, Precision};
use crate::error::{QgnnError, Result};
use crate::experiments::ks::{iso_pair_loss, ks_distributions, ks_statistic, EnergySampleSet, KS_THRESHOLD};
use crate::graph::{are_isomorphic, erdos_renyi_connected, random_permutation, Graph};
use crate::optimize::{nelder_mead, NelderMeadConfig, Trace};
use crate::rng;
use crate::sim::{BasisSampler, StateVector};

/// Largest node count accepted (one qubit per node).
pub const MAX_ISO_NODES: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsoConfig {
    pub n: usize,
    pub edge_probability: f64,
    /// Energy samples per graph; 0 uses the exact distribution.
    pub samples: usize,
    pub depth: usize,
    pub train_pairs: usize,
    pub val_pairs: usize,
    pub test_pairs: usize,
    pub threshold: f64,
    /// Candidate starting points drawn uniformly from `[0, init_scale)`;
    /// Nelder-Mead starts from the one with the lowest training loss.
    pub init_candidates: usize,
    pub init_scale: f64,
    pub nelder_mead: NelderMeadConfig,
}

impl Default for IsoConfig {
    fn default() -> Self {
        Self {
            n: 6,
            edge_probability: 0.5,
            samples: 50,
            depth: 3,
            train_pairs: 100,
            val_pairs: 50,
            test_pairs: 50,
            threshold: KS_THRESHOLD,
            init_candidates: 256,
            init_scale: 2.0 * std::f64::consts::PI,
            nelder_mead: NelderMeadConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoPair {
    pub g1: Graph,
    pub g2: Graph,
    /// 1 when the graphs are isomorphic.
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoPairDataset {
    pub train: Vec<IsoPair>,
    pub val: Vec<IsoPair>,
    pub test: Vec<IsoPair>,
}

impl IsoPairDataset {
    /// Balanced splits of connected `G(n, p)` pairs. Isomorphic pairs relabel
    /// one draw by a random permutation; non-isomorphic pairs are two
    /// independent draws, redrawn while they happen to be isomorphic.
    pub fn generate<R: Rng + ?Sized>(n: usize, p: f64, sizes: [usize; 3], rng: &mut R) -> Result<Self> {
        for &s in &sizes {
            if s % 2 != 0 {
                return Err(QgnnError::InvalidArgument(format!(
                    "split size {s} cannot be balanced between two classes"
                )));
            }
        }
        let mut split = |size: usize| -> Result<Vec<IsoPair>> {
            let mut pairs = Vec::with_capacity(size);
            for i in 0..size {
                let g1 = erdos_renyi_connected(n, p, rng)?;
                if i % 2 == 0 {
                    let g2 = g1.permute(&random_permutation(n, rng))?;
                    pairs.push(IsoPair { g1, g2, label: 1 });
                } else {
                    let mut attempts = 0;
                    let g2 = loop {
                        let g2 = erdos_renyi_connected(n, p, rng)?;
                        if !are_isomorphic(&g1, &g2) {
                            break g2;
                        }
                        attempts += 1;
                        if attempts > 10_000 {
                            return Err(QgnnError::InvalidArgument(format!(
                                "no non-isomorphic partner found for n = {n}"
                            )));
                        }
                    };
                    pairs.push(IsoPair { g1, g2, label: 0 });
                }
            }
            Ok(pairs)
        };
        Ok(Self {
            train: split(sizes[0])?,
            val: split(sizes[1])?,
            test: split(sizes[2])?,
        })
    }
}

/// Exact output energy distribution `(energy, probability)` of the schedule
/// on `g`, sorted by energy with equal energies merged.
pub fn energy_distribution(g: &Graph, depth: usize, params: &[f64]) -> Result<Vec<(f64, f64)>> {
    let prepared = PreparedGraph::new(g, depth)?;
    let probs = prepared.output(params)?.probabilities();
    Ok(prepared.distribution(&probs))
}

/// Samples `shots` energies from the schedule's output on `g`.
pub fn sample_energies<R: Rng + ?Sized>(
    g: &Graph,
    depth: usize,
    params: &[f64],
    shots: usize,
    rng: &mut R,
) -> Result<EnergySampleSet> {
    let prepared = PreparedGraph::new(g, depth)?;
    let probs = prepared.output(params)?.probabilities();
    Ok(prepared.sample(&probs, shots, rng))
}

struct PreparedGraph {
    program: AnsatzProgram,
    energies: Vec<f64>,
}

impl PreparedGraph {
    fn new(g: &Graph, depth: usize) -> Result<Self> {
        if g.n() > MAX_ISO_NODES {
            return Err(QgnnError::DenseCapExceeded {
                n_qubits: g.n(),
                cap: MAX_ISO_NODES,
            });
        }
        let lap = g.laplacian();
        Ok(Self {
            program: qsgcnn_layer_schedule(g, &Precision::SingleQubit, depth)?,
            energies: (0..1usize << g.n()).map(|b| lap.quadratic_form_bits(b)).collect(),
        })
    }

    fn output(&self, params: &[f64]) -> Result<StateVector> {
        self.program.apply(params, &StateVector::plus(self.program.n_qubits()))
    }

    fn distribution(&self, probs: &[f64]) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.energies.iter().copied().zip(probs.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (e, p) in pairs {
            match out.last_mut() {
                Some(last) if last.0 == e => last.1 += p,
                _ => out.push((e, p)),
            }
        }
        out
    }

    fn sample<R: Rng + ?Sized>(&self, probs: &[f64], shots: usize, rng: &mut R) -> EnergySampleSet {
        let sampler = BasisSampler::new(probs);
        EnergySampleSet::new((0..shots).map(|_| self.energies[sampler.sample(rng)]).collect())
    }
}

struct PreparedPair {
    g1: PreparedGraph,
    g2: PreparedGraph,
    label: u8,
    /// Stream ids for the two graphs' measurement noise.
    streams: (u64, u64),
}

impl PreparedPair {
    fn ks(&self, params: &[f64], samples: usize, seed: u64) -> Result<f64> {
        let p1 = self.g1.output(params)?.probabilities();
        let p2 = self.g2.output(params)?.probabilities();
        if samples == 0 {
            return Ok(ks_distributions(&self.g1.distribution(&p1), &self.g2.distribution(&p2)).min(1.0));
        }
        let s1 = self.g1.sample(&p1, samples, &mut rng::stream(seed, self.streams.0));
        let s2 = self.g2.sample(&p2, samples, &mut rng::stream(seed, self.streams.1));
        ks_statistic(&s1, &s2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub split: Split,
    pub index: usize,
    pub label: u8,
    pub ks: f64,
    /// 1 when classified isomorphic (`ks <= threshold`).
    pub predicted: u8,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub accuracy: f64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoResult {
    pub train: SplitMetrics,
    pub val: SplitMetrics,
    pub test: SplitMetrics,
    pub initial_train_loss: f64,
    pub params: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
    pub pairs: Vec<PairRecord>,
    #[serde(skip)]
    pub trace: Trace,
}

impl IsoResult {
    /// CSV `split,index,label,ks,predicted,loss`.
    pub fn write_pairs_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "split,index,label,ks,predicted,loss")?;
        for p in &self.pairs {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                p.split.name(),
                p.index,
                p.label,
                p.ks,
                p.predicted,
                p.loss
            )?;
        }
        Ok(())
    }
}

fn prepare(pairs: &[IsoPair], depth: usize, stream_base: u64) -> Result<Vec<PreparedPair>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let id = stream_base + 2 * i as u64;
            Ok(PreparedPair {
                g1: PreparedGraph::new(&p.g1, depth)?,
                g2: PreparedGraph::new(&p.g2, depth)?,
                label: p.label,
                streams: (id, id + 1),
            })
        })
        .collect()
}

fn pair_ks(pairs: &[PreparedPair], params: &[f64], samples: usize, seed: u64) -> Result<Vec<f64>> {
    pairs.par_iter().map(|p| p.ks(params, samples, seed)).collect()
}

fn mean_loss(pairs: &[PreparedPair], ks: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (p, &k) in pairs.iter().zip(ks) {
        total += iso_pair_loss(p.label, k)?;
    }
    Ok(total / pairs.len().max(1) as f64)
}

/// Builds the dataset, trains the shared times by Nelder-Mead on the mean
/// training pair loss and scores every split with the KS threshold.
///
/// Measurement noise uses fixed per-graph streams, so the training objective
/// is deterministic.
pub fn run_graph_isomorphism(config: &IsoConfig, seed: u64) -> Result<IsoResult> {
    if config.n < 2 || config.n > MAX_ISO_NODES {
        return Err(QgnnError::InvalidArgument(format!(
            "isomorphism node count {} outside 2..={MAX_ISO_NODES}",
            config.n
        )));
    }
    let dataset = IsoPairDataset::generate(
        config.n,
        config.edge_probability,
        [config.train_pairs, config.val_pairs, config.test_pairs],
        &mut rng::stream(seed, 0),
    )?;
    let depth = config.depth;
    let train = prepare(&dataset.train, depth, 1 << 32)?;
    let val = prepare(&dataset.val, depth, 2 << 32)?;
    let test = prepare(&dataset.test, depth, 3 << 32)?;

    let objective = |params: &[f64]| -> f64 {
        pair_ks(&train, params, config.samples, seed)
            .and_then(|ks| mean_loss(&train, &ks))
            .unwrap_or(f64::NAN)
    };
    let mut init_rng = rng::stream(seed, 1);
    let mut init = Vec::new();
    let mut initial_train_loss = f64::INFINITY;
    for _ in 0..config.init_candidates.max(1) {
        let candidate: Vec<f64> = (0..2 * depth).map(|_| init_rng.gen::<f64>() * config.init_scale).collect();
        let loss = objective(&candidate);
        if loss < initial_train_loss {
            initial_train_loss = loss;
            init = candidate;
        }
    }
    let opt = nelder_mead(&objective, &init, &config.nelder_mead)?;

    let mut records = Vec::new();
    let mut score = |split: Split, pairs: &[PreparedPair]| -> Result<SplitMetrics> {
        let ks = pair_ks(pairs, &opt.params, config.samples, seed)?;
        let mut correct = 0;
        for (i, (p, &k)) in pairs.iter().zip(&ks).enumerate() {
            let predicted = u8::from(k <= config.threshold);
            correct += usize::from(predicted == p.label);
            records.push(PairRecord {
                split,
                index: i,
                label: p.label,
                ks: k,
                predicted,
                loss: iso_pair_loss(p.label, k)?,
            });
        }
        Ok(SplitMetrics {
            accuracy: if pairs.is_empty() {
                0.0
            } else {
                correct as f64 / pairs.len() as f64
            },
            mean_loss: mean_loss(pairs, &ks)?,
        })
    };
    let train_m = score(Split::Train, &train)?;
    let val_m = score(Split::Val, &val)?;
    let test_m = score(Split::Test, &test)?;
    Ok(IsoResult {
        train: train_m,
        val: val_m,
        test: test_m,
        initial_train_loss,
        params: opt.params,
        evaluations: opt.evaluations,
        converged: opt.converged,
        pairs: records,
        trace: opt.trace,
    })
}
