//! Graph Hamiltonians as Pauli sums.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{QgnnError, Result};
use crate::graph::Graph;
use crate::pauli::{Axis, PauliSum, PauliTerm};
use crate::sim::StateVector;

/// Couplings `J_jk` per edge and biases `Q_v` per node of a transverse-field
/// Ising model. The transverse field is fixed to 1 on every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "IsingRepr", into = "IsingRepr")]
pub struct IsingParams {
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct IsingRepr {
    couplings: Vec<(usize, usize, f64)>,
    biases: Vec<f64>,
}

impl From<IsingRepr> for IsingParams {
    fn from(r: IsingRepr) -> Self {
        Self {
            couplings: r.couplings.into_iter().map(|(j, k, w)| ((j.min(k), j.max(k)), w)).collect(),
            biases: r.biases,
        }
    }
}

impl From<IsingParams> for IsingRepr {
    fn from(p: IsingParams) -> Self {
        Self {
            couplings: p.couplings.into_iter().map(|((j, k), w)| (j, k, w)).collect(),
            biases: p.biases,
        }
    }
}

impl IsingParams {
    /// Same coupling on every edge and same bias on every node.
    pub fn uniform(g: &Graph, coupling: f64, bias: f64) -> Self {
        Self {
            couplings: g.edges().map(|(j, k, _)| ((j, k), coupling)).collect(),
            biases: vec![bias; g.n()],
        }
    }

    pub fn coupling(&self, j: usize, k: usize) -> Option<f64> {
        self.couplings.get(&(j.min(k), j.max(k))).copied()
    }

    fn check(&self, g: &Graph) -> Result<()> {
        if self.biases.len() != g.n() {
            return Err(QgnnError::InvalidArgument(format!(
                "{} biases for a {}-node graph",
                self.biases.len(),
                g.n()
            )));
        }
        let edges: Vec<(usize, usize)> = g.edges().map(|(j, k, _)| (j, k)).collect();
        let keys: Vec<(usize, usize)> = self.couplings.keys().copied().collect();
        if edges != keys {
            return Err(QgnnError::InvalidArgument(format!(
                "coupling keys {keys:?} do not match graph edges {edges:?}"
            )));
        }
        Ok(())
    }
}

/// `Σ J_jk Z_j Z_k + Σ Q_v Z_v + Σ X_v`, grouped as `{ZZ, Z}` and `{X}`.
pub fn ising_hamiltonian(g: &Graph, params: &IsingParams) -> Result<PauliSum> {
    params.check(g)?;
    let mut diag = Vec::new();
    for (&(j, k), &w) in &params.couplings {
        diag.push(PauliTerm::new(w, [(j, Axis::Z), (k, Axis::Z)])?);
    }
    for (v, &q) in params.biases.iter().enumerate() {
        diag.push(PauliTerm::new(q, [(v, Axis::Z)])?);
    }
    let mixer = (0..g.n())
        .map(|v| PauliTerm::new(1.0, [(v, Axis::X)]))
        .collect::<Result<Vec<_>>>()?;
    PauliSum::from_groups(g.n(), vec![diag, mixer])
}

/// Diagonal part `Σ J_jk Z_j Z_k + Σ Q_v Z_v` of the Ising model.
pub fn ising_diagonal(g: &Graph, params: &IsingParams) -> Result<PauliSum> {
    params.check(g)?;
    let mut diag = Vec::new();
    for (&(j, k), &w) in &params.couplings {
        diag.push(PauliTerm::new(w, [(j, Axis::Z), (k, Axis::Z)])?);
    }
    for (v, &q) in params.biases.iter().enumerate() {
        diag.push(PauliTerm::new(q, [(v, Axis::Z)])?);
    }
    PauliSum::from_terms(g.n(), diag)
}

/// Single-qubit-precision coupling Hamiltonian
/// `Σ_jk L_jk |1⟩⟨1|_j ⊗ |1⟩⟨1|_k` with `|1⟩⟨1| = (I − Z)/2`.
///
/// Its eigenvalue on bitstring `b` is `bᵀ L b`; the identity offset is kept.
pub fn coupling_hamiltonian_1q(g: &Graph) -> PauliSum {
    // Per edge the diagonal entries give w(I − Z_j)/2 + w(I − Z_k)/2 and the two
    // off-diagonal entries give −2w(I − Z_j − Z_k + Z_j Z_k)/4. The single-Z
    // parts cancel, leaving w(I − Z_j Z_k)/2: the edge is counted iff it is cut.
    let identity: f64 = g.edges().map(|(_, _, w)| w / 2.0).sum();
    let mut terms = vec![PauliTerm::identity(identity)];
    terms.extend(g.edges().map(|(j, k, w)| {
        PauliTerm::new(-w / 2.0, [(j, Axis::Z), (k, Axis::Z)]).expect("distinct qubits")
    }));
    PauliSum::from_terms(g.n(), terms).expect("diagonal terms commute")
}

/// `Σ_v X_v` on every node of `g`.
pub fn mixer_hamiltonian(g: &Graph) -> PauliSum {
    let terms = (0..g.n())
        .map(|v| PauliTerm::new(1.0, [(v, Axis::X)]).expect("single op"))
        .collect();
    PauliSum::from_terms(g.n(), terms).expect("single-qubit X terms commute")
}

/// `Σ_{jk ∈ E} Z_j Z_k` with unit coefficients.
pub fn zz_edge_hamiltonian(g: &Graph) -> PauliSum {
    let terms = g
        .edges()
        .map(|(j, k, _)| PauliTerm::new(1.0, [(j, Axis::Z), (k, Axis::Z)]).expect("distinct qubits"))
        .collect();
    PauliSum::from_terms(g.n(), terms).expect("diagonal terms commute")
}

/// GHZ stabilizer generators `X^⊗n + Σ_{j} Z_j Z_{j+1}` (`n` terms).
pub fn ghz_stabilizer_sum(n: usize) -> Result<PauliSum> {
    if n < 2 {
        return Err(QgnnError::InvalidArgument(format!(
            "GHZ stabilizers need at least 2 qubits, got {n}"
        )));
    }
    let mut terms = vec![PauliTerm::new(1.0, (0..n).map(|q| (q, Axis::X)))?];
    for j in 0..n - 1 {
        terms.push(PauliTerm::new(1.0, [(j, Axis::Z), (j + 1, Axis::Z)])?);
    }
    PauliSum::from_terms(n, terms)
}

/// `⟨ψ|H|ψ⟩`.
pub fn expectation(state: &StateVector, h: &PauliSum) -> Result<f64> {
    state.expectation(h)
}

/// General graph Hamiltonian
/// `Σ_{jk∈E} Σ_r W_rjk O_j^(r) ⊗ P_k^(r) + Σ_v Σ_r B_rv R_v^(r)`
/// with single-qubit Pauli choices for the node operators.
///
/// Edge terms may only be placed on edges of the graph. All terms must
/// commute, so that one evolution under the result compiles without
/// Trotter error.
#[derive(Debug, Clone)]
pub struct GraphHamiltonianBuilder<'g> {
    graph: &'g Graph,
    terms: Vec<PauliTerm>,
}

impl<'g> GraphHamiltonianBuilder<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        Self {
            graph,
            terms: Vec::new(),
        }
    }

    pub fn edge_term(mut self, j: usize, k: usize, coeff: f64, o: Axis, p: Axis) -> Result<Self> {
        if !self.graph.has_edge(j, k) {
            return Err(QgnnError::InvalidArgument(format!("{{{j}, {k}}} is not an edge")));
        }
        self.terms.push(PauliTerm::new(coeff, [(j, o), (k, p)])?);
        Ok(self)
    }

    pub fn node_term(mut self, v: usize, coeff: f64, r: Axis) -> Result<Self> {
        if v >= self.graph.n() {
            return Err(QgnnError::InvalidArgument(format!("node {v} out of range")));
        }
        self.terms.push(PauliTerm::new(coeff, [(v, r)])?);
        Ok(self)
    }

    /// Adds `coeff(j, k) O_j P_k` on every edge.
    pub fn on_all_edges(mut self, coeff: impl Fn(usize, usize) -> f64, o: Axis, p: Axis) -> Result<Self> {
        let edges: Vec<(usize, usize)> = self.graph.edges().map(|(j, k, _)| (j, k)).collect();
        for (j, k) in edges {
            self = self.edge_term(j, k, coeff(j, k), o, p)?;
        }
        Ok(self)
    }

    pub fn on_all_nodes(mut self, coeff: impl Fn(usize) -> f64, r: Axis) -> Result<Self> {
        for v in 0..self.graph.n() {
            self = self.node_term(v, coeff(v), r)?;
        }
        Ok(self)
    }

    pub fn build(self) -> Result<PauliSum> {
        PauliSum::from_terms(self.graph.n(), self.terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::DenseHamiltonian;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pure_transverse_field() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let h = ising_hamiltonian(&g, &IsingParams::uniform(&g, 0.0, 0.0)).unwrap();
        let e0 = DenseHamiltonian::new(&h).unwrap().ground_energy();
        // Sign convention: H = +ΣX, ground energy -2.
        assert_abs_diff_eq!(e0, -2.0, epsilon = 1e-12);
        assert_eq!(h.groups().len(), 2);
    }

    #[test]
    fn ising_param_mismatch() {
        let g = Graph::path(3).unwrap();
        let other = Graph::complete(3).unwrap();
        assert!(ising_hamiltonian(&g, &IsingParams::uniform(&other, 1.0, 0.0)).is_err());
        let mut p = IsingParams::uniform(&g, 1.0, 0.0);
        p.biases.pop();
        assert!(ising_hamiltonian(&g, &p).is_err());
    }

    #[test]
    fn coupling_1q_examples() {
        let tri = Graph::complete(3).unwrap();
        let h = coupling_hamiltonian_1q(&tri);
        assert!(h.is_diagonal());
        assert_eq!(h.diagonal_value(0b000).unwrap(), 0.0);
        assert_eq!(h.diagonal_value(0b111).unwrap(), 0.0);
        assert_eq!(h.diagonal_value(0b001).unwrap(), 2.0);
        let path = Graph::path(3).unwrap();
        assert_eq!(coupling_hamiltonian_1q(&path).diagonal_value(0b101).unwrap(), 2.0);
    }

    #[test]
    fn mixer_spectrum() {
        let h = mixer_hamiltonian(&Graph::new(3).unwrap());
        let ev = DenseHamiltonian::new(&h).unwrap().sorted_eigenvalues();
        let expect = [-3.0, -1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 3.0];
        for (a, b) in ev.iter().zip(expect) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        let one = mixer_hamiltonian(&Graph::new(1).unwrap());
        assert_abs_diff_eq!(StateVector::plus(1).expectation(&one).unwrap(), 1.0, epsilon = 1e-15);
        let plus = StateVector::plus(3);
        assert_abs_diff_eq!(plus.expectation(&h).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn ghz_stabilizer_examples() {
        for n in 2..6 {
            let h = ghz_stabilizer_sum(n).unwrap();
            assert_eq!(h.len(), n);
            let nf = n as f64;
            assert_abs_diff_eq!(StateVector::ghz(n).expectation(&h).unwrap(), nf, epsilon = 1e-12);
            assert_abs_diff_eq!(StateVector::zero(n).expectation(&h).unwrap(), nf - 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(StateVector::plus(n).expectation(&h).unwrap(), 1.0, epsilon = 1e-12);
        }
        assert!(ghz_stabilizer_sum(1).is_err());
    }

    #[test]
    fn zz_edge_examples() {
        let edge = zz_edge_hamiltonian(&Graph::from_edges(2, [(0, 1)]).unwrap());
        assert_eq!(edge.diagonal_value(0b00).unwrap(), 1.0);
        assert_eq!(edge.diagonal_value(0b01).unwrap(), -1.0);
        let ring = zz_edge_hamiltonian(&Graph::ring(4).unwrap());
        assert_eq!(ring.diagonal_value(0b1010).unwrap(), -4.0);
    }

    #[test]
    fn expectation_basics() {
        let z: PauliSum = "1 Z0".parse().unwrap();
        assert_eq!(expectation(&StateVector::zero(1), &z).unwrap(), 1.0);
        assert_abs_diff_eq!(expectation(&StateVector::plus(1), &z).unwrap(), 0.0, epsilon = 1e-15);
        assert!(expectation(&StateVector::zero(2), &z).is_err());
    }

    #[test]
    fn builder_enforces_graph_and_commutation() {
        let g = Graph::path(3).unwrap();
        assert!(GraphHamiltonianBuilder::new(&g).edge_term(0, 2, 1.0, Axis::Z, Axis::Z).is_err());
        let h = GraphHamiltonianBuilder::new(&g)
            .on_all_edges(|_, _| 0.5, Axis::X, Axis::X)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(h.len(), 2);
        let bad = GraphHamiltonianBuilder::new(&g)
            .on_all_edges(|_, _| 1.0, Axis::Z, Axis::Z)
            .unwrap()
            .on_all_nodes(|_| 1.0, Axis::X)
            .unwrap()
            .build();
        assert!(matches!(bad, Err(QgnnError::NonCommuting(_))));
    }
}
