//! Dense statevector with qubit 0 as the least significant bit of the basis index.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QgnnError, Result};
use crate::pauli::PauliSum;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Sampled computational-basis outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub bitstrings: Vec<usize>,
    pub shots: usize,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index {index} out of range");
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    /// `|+⟩^⊗n`.
    pub fn plus(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self {
            n_qubits,
            amps: vec![a; dim],
        }
    }

    /// `(|0…0⟩ + |1…1⟩)/√2`.
    pub fn ghz(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let mut amps = vec![ZERO; dim];
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[0] = a;
        amps[dim - 1] = a;
        Self { n_qubits, amps }
    }

    /// Wraps amplitudes; they must already be normalized to 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = log2_exact(amps.len())?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QgnnError::InvalidArgument(format!(
                "amplitudes have squared norm {norm}, expected 1"
            )));
        }
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = log2_exact(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(QgnnError::InvalidArgument("cannot normalize a zero vector".into()));
        }
        for a in &mut amps {
            *a /= norm;
        }
        Ok(Self { n_qubits, amps })
    }

    /// Haar-ish random state from i.i.d. Gaussian amplitudes.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Self {
        let dim = 1usize << n_qubits;
        let amps = (0..dim)
            .map(|_| Complex64::new(gaussian(rng), gaussian(rng)))
            .collect();
        Self::normalized(amps).expect("gaussian vector is nonzero")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_same_dim(&self, other: &StateVector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(QgnnError::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        Ok(())
    }

    fn check_qubits(&self, h: &PauliSum) -> Result<()> {
        if h.n_qubits() != self.n_qubits {
            return Err(QgnnError::DimensionMismatch {
                expected: self.n_qubits,
                got: h.n_qubits(),
            });
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64> {
        self.check_same_dim(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    pub fn expectation(&self, h: &PauliSum) -> Result<f64> {
        self.check_qubits(h)?;
        h.expectation(&self.amps)
    }

    /// `e^{-itH}` for a diagonal `H`: amplitude `i` picks up `e^{-itE(i)}`.
    pub fn evolve_diagonal(&mut self, h: &PauliSum, t: f64) -> Result<()> {
        self.check_qubits(h)?;
        let diag = h.diagonal_values()?;
        self.apply_diagonal_phases(&diag, t);
        Ok(())
    }

    /// Multiplies amplitude `i` by `e^{-i t energies[i]}`.
    pub fn apply_diagonal_phases(&mut self, energies: &[f64], t: f64) {
        debug_assert_eq!(energies.len(), self.amps.len());
        for (a, &e) in self.amps.iter_mut().zip(energies) {
            *a *= Complex64::from_polar(1.0, -t * e);
        }
    }

    /// Applies `e^{-itX_q}` to each listed qubit.
    pub fn evolve_mixer(&mut self, qubits: &[usize], t: f64) -> Result<()> {
        for &q in qubits {
            self.rotate_x(q, t)?;
        }
        Ok(())
    }

    /// `e^{-itX_q} = cos t − i sin t X_q`.
    pub fn rotate_x(&mut self, qubit: usize, t: f64) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(QgnnError::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let (s, c) = t.sin_cos();
        let mis = Complex64::new(0.0, -s);
        let bit = 1usize << qubit;
        for b in 0..self.amps.len() {
            if b & bit == 0 {
                let a0 = self.amps[b];
                let a1 = self.amps[b | bit];
                self.amps[b] = a0 * c + a1 * mis;
                self.amps[b | bit] = a1 * c + a0 * mis;
            }
        }
        Ok(())
    }

    /// `e^{-itZ_q}`.
    pub fn rotate_z(&mut self, qubit: usize, t: f64) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(QgnnError::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let bit = 1usize << qubit;
        let p0 = Complex64::from_polar(1.0, -t);
        let p1 = Complex64::from_polar(1.0, t);
        for (b, a) in self.amps.iter_mut().enumerate() {
            *a *= if b & bit == 0 { p0 } else { p1 };
        }
        Ok(())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        for q in [control, target] {
            if q >= self.n_qubits {
                return Err(QgnnError::QubitOutOfRange {
                    index: q,
                    n_qubits: self.n_qubits,
                });
            }
        }
        if control == target {
            return Err(QgnnError::InvalidArgument("CNOT control equals target".into()));
        }
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for b in 0..self.amps.len() {
            if b & cbit != 0 && b & tbit == 0 {
                self.amps.swap(b, b | tbit);
            }
        }
        Ok(())
    }

    /// i.i.d. computational-basis samples.
    pub fn sample_bitstrings<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> MeasurementRecord {
        let sampler = BasisSampler::new(&self.probabilities());
        let bitstrings = (0..shots).map(|_| sampler.sample(rng)).collect();
        MeasurementRecord { bitstrings, shots }
    }

    /// Writes `u32` qubit count then interleaved little-endian `(re, im)` doubles.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let n_qubits = u32::from_le_bytes(word) as usize;
        if n_qubits > 40 {
            return Err(QgnnError::InvalidArgument(format!(
                "dump claims {n_qubits} qubits"
            )));
        }
        let mut amps = Vec::with_capacity(1 << n_qubits);
        let mut buf = [0u8; 8];
        for _ in 0..(1usize << n_qubits) {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf);
            r.read_exact(&mut buf)?;
            let im = f64::from_le_bytes(buf);
            amps.push(Complex64::new(re, im));
        }
        Ok(Self { n_qubits, amps })
    }
}

/// Inverse-CDF sampler over a discrete distribution.
#[derive(Debug, Clone)]
pub struct BasisSampler {
    cumulative: Vec<f64>,
}

impl BasisSampler {
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|&p| {
                acc += p;
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty distribution");
        let u = rng.gen::<f64>() * total;
        let idx = self.cumulative.partition_point(|&c| c <= u);
        // Rounding can push `u` past the last positive entry.
        idx.min(self.cumulative.len() - 1)
    }
}

/// Swap-test estimate of `|⟨a|b⟩|²` from `shots` simulated accept/reject outcomes.
///
/// Each shot accepts with probability `(1 + |⟨a|b⟩|²)/2`; the estimate is
/// `2·(accept fraction) − 1`, clamped to `[0, 1]`.
pub fn swap_test_estimate<R: Rng + ?Sized>(
    a: &StateVector,
    b: &StateVector,
    shots: usize,
    rng: &mut R,
) -> Result<f64> {
    if shots == 0 {
        return Err(QgnnError::InvalidArgument("swap test needs at least one shot".into()));
    }
    let f = a.fidelity(b)?.clamp(0.0, 1.0);
    let p_accept = (1.0 + f) / 2.0;
    let accepted = (0..shots).filter(|_| rng.gen::<f64>() < p_accept).count();
    let est = 2.0 * accepted as f64 / shots as f64 - 1.0;
    Ok(est.clamp(0.0, 1.0))
}

fn log2_exact(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(QgnnError::InvalidArgument(format!(
            "amplitude count {len} is not a power of two"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
