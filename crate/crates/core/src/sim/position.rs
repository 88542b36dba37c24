//! Qubit emulation of continuous-variable position registers.
//!
//! Each node owns `m` consecutive qubits whose integer value `s` encodes the
//! grid point `x_s = h (s − (2^m − 1)/2)`. Momentum lives on the conjugate
//! grid of spacing `2π / (2^m h)`, reached with a per-node discrete Fourier
//! transform. The grid is periodic, so wrap-around at the edges is part of
//! the model.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{QgnnError, Result};
use crate::sim::StateVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionRegister {
    m: usize,
    h: f64,
    node_offsets: Vec<usize>,
}

impl PositionRegister {
    /// Nodes laid out back to back: node `j` starts at qubit `j·m`.
    pub fn contiguous(n_nodes: usize, m: usize, h: f64) -> Result<Self> {
        Self::new(m, h, (0..n_nodes).map(|j| j * m).collect())
    }

    /// Grid spacing that makes the grid span `[-half_width, half_width]`.
    pub fn spanning(n_nodes: usize, m: usize, half_width: f64) -> Result<Self> {
        if m == 0 || half_width.is_nan() || half_width <= 0.0 {
            return Err(QgnnError::RegisterLayout(format!(
                "need m >= 1 and positive half width, got m = {m}, half width = {half_width}"
            )));
        }
        let h = half_width / (((1usize << m) - 1) as f64 / 2.0);
        Self::contiguous(n_nodes, m, h)
    }

    pub fn new(m: usize, h: f64, node_offsets: Vec<usize>) -> Result<Self> {
        if m == 0 {
            return Err(QgnnError::RegisterLayout("m must be at least 1".into()));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(QgnnError::RegisterLayout(format!("grid spacing {h} must be positive")));
        }
        if node_offsets.is_empty() {
            return Err(QgnnError::RegisterLayout("register needs at least one node".into()));
        }
        let mut used = 0usize;
        for &off in &node_offsets {
            let mask = ((1usize << m) - 1) << off;
            if used & mask != 0 {
                return Err(QgnnError::RegisterLayout(format!(
                    "node registers overlap at offset {off}"
                )));
            }
            used |= mask;
        }
        Ok(Self { m, h, node_offsets })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn n_nodes(&self) -> usize {
        self.node_offsets.len()
    }

    pub fn node_offsets(&self) -> &[usize] {
        &self.node_offsets
    }

    /// Qubits spanned by the layout (highest used qubit + 1).
    pub fn total_qubits(&self) -> usize {
        self.node_offsets.iter().map(|o| o + self.m).max().unwrap_or(0)
    }

    pub fn levels(&self) -> usize {
        1 << self.m
    }

    pub fn grid_value(&self, s: usize) -> f64 {
        self.h * (s as f64 - (self.levels() as f64 - 1.0) / 2.0)
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..self.levels()).map(|s| self.grid_value(s)).collect()
    }

    /// Conjugate momentum for DFT bin `k`, centered so `|p| ≤ π/h`.
    pub fn momentum_value(&self, k: usize) -> f64 {
        let n = self.levels();
        let dp = 2.0 * PI / (n as f64 * self.h);
        let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
        signed * dp
    }

    pub fn node_level(&self, node: usize, basis: usize) -> usize {
        (basis >> self.node_offsets[node]) & (self.levels() - 1)
    }

    /// Grid value of every node in basis state `basis`.
    pub fn node_values(&self, basis: usize, out: &mut [f64]) {
        for (j, v) in out.iter_mut().enumerate() {
            *v = self.grid_value(self.node_level(j, basis));
        }
    }

    pub fn check(&self, state: &StateVector) -> Result<()> {
        if self.total_qubits() != state.n_qubits() {
            return Err(QgnnError::RegisterLayout(format!(
                "register spans {} qubits but the state has {}",
                self.total_qubits(),
                state.n_qubits()
            )));
        }
        Ok(())
    }

    /// Product state with node `j` holding the (normalized, grid-sampled)
    /// wavefunction `psi_j(x)`.
    pub fn product_state(&self, node_wavefunctions: &[Vec<Complex64>]) -> Result<StateVector> {
        if node_wavefunctions.len() != self.n_nodes() {
            return Err(QgnnError::RegisterLayout(format!(
                "{} wavefunctions for {} nodes",
                node_wavefunctions.len(),
                self.n_nodes()
            )));
        }
        let dim = 1usize << self.total_qubits();
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        for (b, a) in amps.iter_mut().enumerate() {
            let mut v = Complex64::new(1.0, 0.0);
            let mut covered = 0usize;
            for (j, psi) in node_wavefunctions.iter().enumerate() {
                v *= psi[self.node_level(j, b)];
                covered |= (self.levels() - 1) << self.node_offsets[j];
            }
            // Qubits outside every register stay in |0⟩.
            if b & !covered == 0 {
                *a = v;
            }
        }
        StateVector::normalized(amps)
    }

    /// Gaussian `exp(-(x-center)²/(4σ²))` sampled on the grid (unnormalized).
    pub fn gaussian(&self, center: f64, sigma: f64) -> Vec<Complex64> {
        self.grid()
            .iter()
            .map(|x| Complex64::new((-(x - center).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0))
            .collect()
    }

    /// Marginal distribution of node `node` over grid levels.
    pub fn marginal(&self, state: &StateVector, node: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.levels()];
        for (b, a) in state.amplitudes().iter().enumerate() {
            p[self.node_level(node, b)] += a.norm_sqr();
        }
        p
    }

    pub fn mean_position(&self, state: &StateVector, node: usize) -> f64 {
        self.marginal(state, node)
            .iter()
            .enumerate()
            .map(|(s, p)| p * self.grid_value(s))
            .sum()
    }

    pub fn position_variance(&self, state: &StateVector, node: usize) -> f64 {
        let marg = self.marginal(state, node);
        let mean: f64 = marg.iter().enumerate().map(|(s, p)| p * self.grid_value(s)).sum();
        marg.iter()
            .enumerate()
            .map(|(s, p)| p * (self.grid_value(s) - mean).powi(2))
            .sum()
    }

    /// `⟨p̂_node⟩` computed in the conjugate basis.
    pub fn mean_momentum(&self, state: &StateVector, node: usize) -> Result<f64> {
        self.check(state)?;
        let mut work = state.clone();
        let plan = FftPlan::new(self.levels());
        let mut total = 0.0;
        let n = self.levels();
        let norm = 1.0 / n as f64;
        self.for_each_fiber(&mut work, node, |fiber| {
            plan.forward.process(fiber);
            for (k, a) in fiber.iter().enumerate() {
                total += a.norm_sqr() * norm * self.momentum_value(k);
            }
        });
        Ok(total)
    }

    /// Runs `f` on every length-`2^m` amplitude fiber of `node`.
    fn for_each_fiber<F: FnMut(&mut [Complex64])>(&self, state: &mut StateVector, node: usize, mut f: F) {
        let off = self.node_offsets[node];
        let levels = self.levels();
        let mask = (levels - 1) << off;
        let mut fiber = vec![Complex64::new(0.0, 0.0); levels];
        let amps = state.amplitudes_mut();
        for base in 0..amps.len() {
            if base & mask != 0 {
                continue;
            }
            for (s, slot) in fiber.iter_mut().enumerate() {
                *slot = amps[base | (s << off)];
            }
            f(&mut fiber);
            for (s, slot) in fiber.iter().enumerate() {
                amps[base | (s << off)] = *slot;
            }
        }
    }
}

struct FftPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftPlan {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Applies `e^{-i (t/2) p̂_j²}` on every node register (Fourier transform,
/// diagonal phase on the momentum grid, inverse transform).
pub fn evolve_position_kinetic(state: &mut StateVector, reg: &PositionRegister, t: f64) -> Result<()> {
    reg.check(state)?;
    let n = reg.levels();
    let plan = FftPlan::new(n);
    let scale = 1.0 / n as f64;
    let phases: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(scale, -0.5 * t * reg.momentum_value(k).powi(2)))
        .collect();
    for node in 0..reg.n_nodes() {
        reg.for_each_fiber(state, node, |fiber| {
            plan.forward.process(fiber);
            for (a, ph) in fiber.iter_mut().zip(&phases) {
                *a *= ph;
            }
            plan.inverse.process(fiber);
        });
    }
    Ok(())
}

/// Multiplies each basis amplitude by `e^{-it f(x_0, …, x_{n-1})}`, where the
/// `x_j` are the node grid values of that basis state.
pub fn evolve_position_potential<F>(
    state: &mut StateVector,
    reg: &PositionRegister,
    f: F,
    t: f64,
) -> Result<()>
where
    F: Fn(&[f64]) -> f64,
{
    let energies = potential_energies(reg, state.n_qubits(), f)?;
    reg.check(state)?;
    state.apply_diagonal_phases(&energies, t);
    Ok(())
}

/// `f` evaluated on every basis state of a register spanning `n_qubits`.
pub fn potential_energies<F>(reg: &PositionRegister, n_qubits: usize, f: F) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if reg.total_qubits() != n_qubits {
        return Err(QgnnError::RegisterLayout(format!(
            "register spans {} qubits but the state has {n_qubits}",
            reg.total_qubits()
        )));
    }
    let mut xs = vec![0.0; reg.n_nodes()];
    (0..1usize << n_qubits)
        .map(|b| {
            reg.node_values(b, &mut xs);
            let e = f(&xs);
            if e.is_finite() {
                Ok(e)
            } else {
                Err(QgnnError::NonFinitePotential(xs.clone()))
            }
        })
        .collect()
}

/// Quartic double well `((x − μ)² − ω²)²`.
pub fn quartic(x: f64, mu: f64, omega: f64) -> f64 {
    let d = (x - mu).powi(2) - omega * omega;
    d * d
}
