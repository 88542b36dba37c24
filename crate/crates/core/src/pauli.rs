//! Real-coefficient sums of Pauli strings.
//!
//! Every Hamiltonian in the crate is a [`PauliSum`]. Strings are stored as
//! sorted `(qubit, axis)` lists and converted to bit masks on demand, so
//! applying a string to a basis state is one XOR plus a sign.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QgnnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// One weighted Pauli string. An empty `ops` list is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: f64,
    ops: Vec<(usize, Axis)>,
}

/// Bit-mask form of a Pauli string: `P|b⟩ = i^y_count (-1)^{|b & z_mask|} |b ^ x_mask⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PauliMask {
    pub x_mask: usize,
    pub z_mask: usize,
    pub y_count: u32,
}

impl PauliMask {
    /// Phase picked up by basis state `b` (before the bit flip).
    #[inline]
    pub fn phase(&self, b: usize) -> Complex64 {
        let sign = if (b & self.z_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let i_pow = match self.y_count % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        i_pow * sign
    }

    pub fn is_diagonal(&self) -> bool {
        self.x_mask == 0
    }

    /// Symplectic commutation test, exact for Pauli strings.
    pub fn commutes_with(&self, other: &PauliMask) -> bool {
        let anti = (self.x_mask & other.z_mask).count_ones() + (self.z_mask & other.x_mask).count_ones();
        anti.is_multiple_of(2)
    }
}

impl PauliTerm {
    /// Builds a term; rejects repeated qubits and non-finite coefficients.
    pub fn new(coeff: f64, ops: impl IntoIterator<Item = (usize, Axis)>) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(QgnnError::PauliParse(format!("non-finite coefficient {coeff}")));
        }
        let mut ops: Vec<(usize, Axis)> = ops.into_iter().collect();
        ops.sort();
        for pair in ops.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(QgnnError::PauliParse(format!(
                    "qubit {} appears twice in one term",
                    pair[0].0
                )));
            }
        }
        Ok(Self { coeff, ops })
    }

    pub fn identity(coeff: f64) -> Self {
        Self { coeff, ops: Vec::new() }
    }

    pub fn ops(&self) -> &[(usize, Axis)] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.ops.last().map(|&(q, _)| q)
    }

    pub fn mask(&self) -> PauliMask {
        let mut m = PauliMask {
            x_mask: 0,
            z_mask: 0,
            y_count: 0,
        };
        for &(q, axis) in &self.ops {
            match axis {
                Axis::X => m.x_mask |= 1 << q,
                Axis::Z => m.z_mask |= 1 << q,
                Axis::Y => {
                    m.x_mask |= 1 << q;
                    m.z_mask |= 1 << q;
                    m.y_count += 1;
                }
            }
        }
        m
    }

    pub fn is_diagonal(&self) -> bool {
        self.ops.iter().all(|&(_, a)| a == Axis::Z)
    }

    fn label(&self) -> String {
        if self.ops.is_empty() {
            return "I".to_string();
        }
        self.ops
            .iter()
            .map(|&(q, a)| format!("{}{}", a.letter(), q))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Hermitian operator `Σ c_t P_t` on `n_qubits` qubits.
///
/// Terms are partitioned into declared groups; terms inside a group pairwise
/// commute, so `exp` of a single group factorizes exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
    groups: Vec<Vec<usize>>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
            groups: Vec::new(),
        }
    }

    /// All terms in one group; use [`PauliSum::from_groups`] for a partition.
    pub fn from_terms(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        Self::from_groups(n_qubits, vec![terms])
    }

    /// Builds a sum whose groups are mutually commuting term sets.
    pub fn from_groups(n_qubits: usize, groups: Vec<Vec<PauliTerm>>) -> Result<Self> {
        let mut sum = Self::zero(n_qubits);
        for group in groups {
            sum.push_group(group)?;
        }
        Ok(sum)
    }

    /// Appends a group of terms, checking range and intra-group commutation.
    pub fn push_group(&mut self, group: Vec<PauliTerm>) -> Result<()> {
        for term in &group {
            if let Some(q) = term.max_qubit() {
                if q >= self.n_qubits {
                    return Err(QgnnError::QubitOutOfRange {
                        index: q,
                        n_qubits: self.n_qubits,
                    });
                }
            }
        }
        let masks: Vec<PauliMask> = group.iter().map(PauliTerm::mask).collect();
        for (a, ma) in masks.iter().enumerate() {
            for (b, mb) in masks.iter().enumerate().skip(a + 1) {
                if !ma.commutes_with(mb) {
                    return Err(QgnnError::NonCommuting(format!(
                        "{} and {}",
                        group[a].label(),
                        group[b].label()
                    )));
                }
            }
        }
        let start = self.terms.len();
        self.groups.push((start..start + group.len()).collect());
        self.terms.extend(group);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term indices of each commuting group.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn group_terms(&self, group: usize) -> impl Iterator<Item = &PauliTerm> {
        self.groups[group].iter().map(move |&i| &self.terms[i])
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(PauliTerm::is_diagonal)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coeff.abs()))
    }

    /// Multiplies every coefficient by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff *= s;
        }
        out
    }

    /// Concatenation `self + other`; the groups of both operands are kept.
    pub fn plus(&self, other: &PauliSum) -> Result<Self> {
        if self.n_qubits != other.n_qubits {
            return Err(QgnnError::DimensionMismatch {
                expected: self.n_qubits,
                got: other.n_qubits,
            });
        }
        let mut out = self.clone();
        let offset = out.terms.len();
        out.terms.extend(other.terms.iter().cloned());
        out.groups
            .extend(other.groups.iter().map(|g| g.iter().map(|i| i + offset).collect()));
        Ok(out)
    }

    /// Merges identical strings, drops exact zeros, and regroups greedily.
    pub fn merged(&self) -> Self {
        let mut acc: BTreeMap<Vec<(usize, Axis)>, f64> = BTreeMap::new();
        for t in &self.terms {
            *acc.entry(t.ops.clone()).or_insert(0.0) += t.coeff;
        }
        let terms: Vec<PauliTerm> = acc
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(ops, coeff)| PauliTerm { coeff, ops })
            .collect();
        Self::greedy_grouped(self.n_qubits, terms)
    }

    /// Partitions terms into commuting groups first-fit.
    pub fn greedy_grouped(n_qubits: usize, terms: Vec<PauliTerm>) -> Self {
        let masks: Vec<PauliMask> = terms.iter().map(PauliTerm::mask).collect();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in 0..terms.len() {
            let slot = groups
                .iter()
                .position(|g| g.iter().all(|&j| masks[i].commutes_with(&masks[j])));
            match slot {
                Some(s) => groups[s].push(i),
                None => groups.push(vec![i]),
            }
        }
        Self {
            n_qubits,
            terms,
            groups,
        }
    }

    /// Eigenvalue of a diagonal sum on basis state `bits`.
    pub fn diagonal_value(&self, bits: usize) -> Result<f64> {
        let mut e = 0.0;
        for t in &self.terms {
            if !t.is_diagonal() {
                return Err(QgnnError::NonDiagonalTerm(t.label()));
            }
            let m = t.mask();
            if (bits & m.z_mask).count_ones().is_multiple_of(2) {
                e += t.coeff;
            } else {
                e -= t.coeff;
            }
        }
        Ok(e)
    }

    /// Diagonal of the operator over all `2^n` basis states.
    pub fn diagonal_values(&self) -> Result<Vec<f64>> {
        if let Some(t) = self.terms.iter().find(|t| !t.is_diagonal()) {
            return Err(QgnnError::NonDiagonalTerm(t.label()));
        }
        let dim = 1usize << self.n_qubits;
        let mut diag = vec![0.0; dim];
        for t in &self.terms {
            let z = t.mask().z_mask;
            for (b, d) in diag.iter_mut().enumerate() {
                if (b & z).count_ones() % 2 == 0 {
                    *d += t.coeff;
                } else {
                    *d -= t.coeff;
                }
            }
        }
        Ok(diag)
    }

    /// `H|ψ⟩` for an amplitude vector of length `2^n`.
    pub fn apply(&self, amps: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n_qubits;
        if amps.len() != dim {
            return Err(QgnnError::DimensionMismatch {
                expected: dim,
                got: amps.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for t in &self.terms {
            let m = t.mask();
            for (b, &a) in amps.iter().enumerate() {
                out[b ^ m.x_mask] += a * m.phase(b) * t.coeff;
            }
        }
        Ok(out)
    }

    /// `⟨ψ|H|ψ⟩`; the imaginary residue is dropped.
    pub fn expectation(&self, amps: &[Complex64]) -> Result<f64> {
        let dim = 1usize << self.n_qubits;
        if amps.len() != dim {
            return Err(QgnnError::DimensionMismatch {
                expected: dim,
                got: amps.len(),
            });
        }
        let mut total = 0.0;
        for t in &self.terms {
            let m = t.mask();
            let mut acc = Complex64::new(0.0, 0.0);
            for (b, &a) in amps.iter().enumerate() {
                acc += amps[b ^ m.x_mask].conj() * m.phase(b) * a;
            }
            total += t.coeff * acc.re;
        }
        Ok(total)
    }

    /// Dense `2^n × 2^n` matrix.
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.n_qubits;
        let mut mat = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for t in &self.terms {
            let m = t.mask();
            for b in 0..dim {
                mat[(b ^ m.x_mask, b)] += m.phase(b) * t.coeff;
            }
        }
        mat
    }

    /// Parses the line format with an explicit qubit count.
    pub fn parse_with_qubits(text: &str, n_qubits: usize) -> Result<Self> {
        let terms = parse_terms(text)?;
        let sum = Self::greedy_grouped(n_qubits, terms);
        if let Some(q) = sum.terms.iter().filter_map(PauliTerm::max_qubit).max() {
            if q >= n_qubits {
                return Err(QgnnError::QubitOutOfRange { index: q, n_qubits });
            }
        }
        Ok(sum)
    }
}

fn parse_terms(text: &str) -> Result<Vec<PauliTerm>> {
    let mut terms = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let coeff_tok = tokens.next().expect("non-empty line has a token");
        let coeff: f64 = coeff_tok.parse().map_err(|_| {
            QgnnError::PauliParse(format!("line {}: bad coefficient {coeff_tok:?}", lineno + 1))
        })?;
        let rest: Vec<&str> = tokens.collect();
        let ops = if rest == ["I"] {
            Vec::new()
        } else {
            rest.iter()
                .map(|tok| parse_op(tok).ok_or_else(|| {
                    QgnnError::PauliParse(format!("line {}: bad operator {tok:?}", lineno + 1))
                }))
                .collect::<Result<Vec<_>>>()?
        };
        if ops.is_empty() && rest.is_empty() {
            return Err(QgnnError::PauliParse(format!(
                "line {}: missing operators (use `I` for identity)",
                lineno + 1
            )));
        }
        terms.push(
            PauliTerm::new(coeff, ops)
                .map_err(|e| QgnnError::PauliParse(format!("line {}: {e}", lineno + 1)))?,
        );
    }
    Ok(terms)
}

fn parse_op(tok: &str) -> Option<(usize, Axis)> {
    let mut chars = tok.chars();
    let axis = match chars.next()? {
        'X' => Axis::X,
        'Y' => Axis::Y,
        'Z' => Axis::Z,
        _ => return None,
    };
    let q = chars.as_str().parse().ok()?;
    Some((q, axis))
}

impl FromStr for PauliSum {
    type Err = QgnnError;

    /// Qubit count is inferred as one past the largest index mentioned.
    fn from_str(s: &str) -> Result<Self> {
        let terms = parse_terms(s)?;
        let n = terms
            .iter()
            .filter_map(PauliTerm::max_qubit)
            .max()
            .map_or(1, |q| q + 1);
        Ok(Self::greedy_grouped(n, terms))
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{} {}", t.coeff, t.label())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_qubit_matrices() {
        let x: PauliSum = "1 X0".parse().unwrap();
        let y: PauliSum = "1 Y0".parse().unwrap();
        let z: PauliSum = "1 Z0".parse().unwrap();
        let mx = x.dense_matrix();
        let my = y.dense_matrix();
        let mz = z.dense_matrix();
        assert_eq!(mx[(0, 1)], c(1.0, 0.0));
        assert_eq!(mx[(1, 0)], c(1.0, 0.0));
        assert_eq!(my[(0, 1)], c(0.0, -1.0));
        assert_eq!(my[(1, 0)], c(0.0, 1.0));
        assert_eq!(mz[(0, 0)], c(1.0, 0.0));
        assert_eq!(mz[(1, 1)], c(-1.0, 0.0));
    }

    #[test]
    fn parse_and_display() {
        let h: PauliSum = "0.5 Z0 Z3\n-1 I\n2 X1".parse().unwrap();
        assert_eq!(h.n_qubits(), 4);
        assert_eq!(h.len(), 3);
        let back: PauliSum = h.to_string().parse().unwrap();
        assert_eq!(back.terms(), h.terms());
        assert!("1 Z0 Z0".parse::<PauliSum>().is_err());
        assert!("abc Z0".parse::<PauliSum>().is_err());
        assert!("1 Q0".parse::<PauliSum>().is_err());
        assert!("1".parse::<PauliSum>().is_err());
        assert!(PauliSum::parse_with_qubits("1 Z4", 3).is_err());
    }

    #[test]
    fn rejects_noncommuting_group() {
        let terms = vec![
            PauliTerm::new(1.0, [(0, Axis::X)]).unwrap(),
            PauliTerm::new(1.0, [(0, Axis::Z)]).unwrap(),
        ];
        assert!(matches!(
            PauliSum::from_terms(1, terms),
            Err(QgnnError::NonCommuting(_))
        ));
        let terms = vec![
            PauliTerm::new(1.0, [(0, Axis::X), (1, Axis::X)]).unwrap(),
            PauliTerm::new(1.0, [(0, Axis::Z), (1, Axis::Z)]).unwrap(),
        ];
        assert!(PauliSum::from_terms(2, terms).is_ok());
    }

    #[test]
    fn merge_combines_identical_strings() {
        let h: PauliSum = "1 Z0\n2 Z0\n-3 X1\n3 X1".parse().unwrap();
        let m = h.merged();
        assert_eq!(m.len(), 1);
        assert_eq!(m.terms()[0].coeff, 3.0);
    }

    #[test]
    fn diagonal_values_reject_offdiagonal() {
        let h: PauliSum = "1 X0".parse().unwrap();
        assert!(h.diagonal_values().is_err());
        let zz: PauliSum = "1 Z0 Z1".parse().unwrap();
        assert_eq!(zz.diagonal_values().unwrap(), vec![1.0, -1.0, -1.0, 1.0]);
    }
}
