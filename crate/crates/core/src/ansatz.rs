//! Layered Hamiltonian-evolution ansatze.
//!
//! An [`AnsatzProgram`] holds `Q` Hamiltonian slots repeated `P` times and
//! applies `Π_p Π_q exp(-i η_pq H_q(θ))`, with `q` running fastest. The
//! parameter vector stores the evolution times `η` first (p-major, q-minor)
//! followed by any trainable Hamiltonian coefficients `θ`.
//!
//! Tying modes:
//! * `Free`: every `η_pq` is independent (`P·Q` times).
//! * `Temporal`: `η_pq = η_q` for all layers (`Q` times), the recurrent form.
//! * `Spatial`: per-layer times, and Hamiltonian coefficients shared across
//!   all edges and nodes of the graph, the convolutional form.

use serde::{Deserialize, Serialize};

use crate::error::{QgnnError, Result};
use crate::graph::Graph;
use crate::hamiltonians::{coupling_hamiltonian_1q, IsingParams};
use crate::pauli::{Axis, PauliSum, PauliTerm};
use crate::sim::position::{evolve_position_kinetic, potential_energies, quartic};
use crate::sim::{DenseHamiltonian, PositionRegister, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tying {
    Free,
    Temporal,
    Spatial,
}

/// Coefficient of one term of a parametric Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoeffRef {
    Fixed(f64),
    /// Index into the coefficient section of the parameter vector.
    Param(usize),
}

/// Diagonal potential on a position register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Potential {
    /// `xᵀ L x = Σ_E w_jk (x_j − x_k)²`.
    Coupling { graph: Graph },
    /// `Σ_j ((x_j − μ)² − ω²)²`.
    Quartic { mu: f64, omega: f64 },
    Sum(Vec<Potential>),
}

impl Potential {
    pub fn energy(&self, xs: &[f64]) -> f64 {
        match self {
            Potential::Coupling { graph } => {
                graph.edges().map(|(j, k, w)| w * (xs[j] - xs[k]).powi(2)).sum::<f64>()
            }
            Potential::Quartic { mu, omega } => xs.iter().map(|&x| quartic(x, *mu, *omega)).sum(),
            Potential::Sum(parts) => parts.iter().map(|p| p.energy(xs)).sum(),
        }
    }
}

/// One Hamiltonian slot `H_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Fixed Hamiltonian diagonal in the computational basis.
    Diagonal(PauliSum),
    /// `Σ_q X_q` over the listed qubits.
    Mixer(Vec<usize>),
    /// Arbitrary fixed Hamiltonian, evolved through its eigendecomposition.
    Dense(PauliSum),
    /// `½ Σ_j p̂_j²` on a position register.
    PositionKinetic(PositionRegister),
    /// Diagonal potential on a position register.
    PositionPotential(PositionRegister, Potential),
    /// `Σ_i c_i P_i` with pairwise-commuting terms and coefficients drawn
    /// from the parameter vector.
    Parametric {
        n_qubits: usize,
        parts: Vec<(CoeffRef, PauliTerm)>,
    },
}

impl Generator {
    pub fn tag(&self) -> &'static str {
        match self {
            Generator::Diagonal(_) => "diagonal",
            Generator::Mixer(_) => "mixer",
            Generator::Dense(_) => "dense",
            Generator::PositionKinetic(_) => "position-kinetic",
            Generator::PositionPotential(..) => "position-potential",
            Generator::Parametric { .. } => "parametric",
        }
    }

    fn n_qubits(&self) -> Option<usize> {
        match self {
            Generator::Diagonal(h) | Generator::Dense(h) => Some(h.n_qubits()),
            Generator::Mixer(_) => None,
            Generator::PositionKinetic(reg) | Generator::PositionPotential(reg, _) => {
                Some(reg.total_qubits())
            }
            Generator::Parametric { n_qubits, .. } => Some(*n_qubits),
        }
    }

    fn max_param(&self) -> Option<usize> {
        match self {
            Generator::Parametric { parts, .. } => parts
                .iter()
                .filter_map(|(c, _)| match c {
                    CoeffRef::Param(i) => Some(*i),
                    CoeffRef::Fixed(_) => None,
                })
                .max(),
            _ => None,
        }
    }

    /// The slot Hamiltonian as a Pauli sum, with coefficients resolved.
    pub fn pauli_sum(&self, n_qubits: usize, coeffs: &[f64]) -> Result<PauliSum> {
        match self {
            Generator::Diagonal(h) | Generator::Dense(h) => Ok(h.clone()),
            Generator::Mixer(qubits) => {
                let terms = qubits
                    .iter()
                    .map(|&q| PauliTerm::new(1.0, [(q, Axis::X)]))
                    .collect::<Result<Vec<_>>>()?;
                PauliSum::from_terms(n_qubits, terms)
            }
            Generator::Parametric { n_qubits, parts } => {
                let terms = parts
                    .iter()
                    .map(|(c, t)| {
                        let mut t = t.clone();
                        t.coeff *= resolve(*c, coeffs);
                        t
                    })
                    .collect();
                PauliSum::from_terms(*n_qubits, terms)
            }
            Generator::PositionKinetic(_) | Generator::PositionPotential(..) => {
                Err(QgnnError::InvalidAnsatz(format!(
                    "{} slot has no Pauli-sum form",
                    self.tag()
                )))
            }
        }
    }
}

fn resolve(c: CoeffRef, coeffs: &[f64]) -> f64 {
    match c {
        CoeffRef::Fixed(v) => v,
        CoeffRef::Param(i) => coeffs[i],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzProgram {
    n_qubits: usize,
    slots: Vec<Generator>,
    depth: usize,
    tying: Tying,
    coeff_count: usize,
}

/// JSON-facing summary of a program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramDescription {
    pub tying: Tying,
    pub depth: usize,
    pub n_qubits: usize,
    pub slots: Vec<String>,
    pub time_params: usize,
    pub coeff_params: usize,
    /// `"p-major"`: time parameter of layer `p`, slot `q` is at `p·Q + q`.
    pub layout: String,
}

impl AnsatzProgram {
    /// Validates slot dimensions, coefficient references and term commutation.
    pub fn new(
        n_qubits: usize,
        slots: Vec<Generator>,
        depth: usize,
        tying: Tying,
        coeff_count: usize,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(QgnnError::InvalidAnsatz("depth must be at least 1".into()));
        }
        if slots.is_empty() {
            return Err(QgnnError::InvalidAnsatz("program needs at least one slot".into()));
        }
        for (q, slot) in slots.iter().enumerate() {
            if let Some(nq) = slot.n_qubits() {
                if nq != n_qubits {
                    return Err(QgnnError::InvalidAnsatz(format!(
                        "slot {q} acts on {nq} qubits, program has {n_qubits}"
                    )));
                }
            }
            if let Generator::Mixer(qs) = slot {
                if let Some(&bad) = qs.iter().find(|&&x| x >= n_qubits) {
                    return Err(QgnnError::QubitOutOfRange {
                        index: bad,
                        n_qubits,
                    });
                }
            }
            if let Some(i) = slot.max_param() {
                if i >= coeff_count {
                    return Err(QgnnError::InvalidAnsatz(format!(
                        "slot {q} references coefficient {i} of {coeff_count}"
                    )));
                }
            }
            if let Generator::Diagonal(h) = slot {
                if !h.is_diagonal() {
                    return Err(QgnnError::InvalidAnsatz(format!(
                        "slot {q} is tagged diagonal but has off-diagonal terms"
                    )));
                }
            }
            if let Generator::Parametric { parts, .. } = slot {
                // Unit coefficients: commutation does not depend on values.
                let terms = parts.iter().map(|(_, t)| t.clone()).collect();
                PauliSum::from_terms(n_qubits, terms)?;
            }
        }
        Ok(Self {
            n_qubits,
            slots,
            depth,
            tying,
            coeff_count,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn slots(&self) -> &[Generator] {
        &self.slots
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn tying(&self) -> Tying {
        self.tying
    }

    /// Number of evolution-time parameters.
    pub fn time_param_count(&self) -> usize {
        match self.tying {
            Tying::Temporal => self.slots.len(),
            Tying::Free | Tying::Spatial => self.depth * self.slots.len(),
        }
    }

    pub fn coeff_param_count(&self) -> usize {
        self.coeff_count
    }

    pub fn param_count(&self) -> usize {
        self.time_param_count() + self.coeff_count
    }

    /// Index of `η_pq` in the parameter vector.
    pub fn time_index(&self, p: usize, q: usize) -> usize {
        match self.tying {
            Tying::Temporal => q,
            Tying::Free | Tying::Spatial => p * self.slots.len() + q,
        }
    }

    pub fn describe(&self) -> ProgramDescription {
        ProgramDescription {
            tying: self.tying,
            depth: self.depth,
            n_qubits: self.n_qubits,
            slots: self.slots.iter().map(|s| s.tag().to_string()).collect(),
            time_params: self.time_param_count(),
            coeff_params: self.coeff_count,
            layout: "p-major".into(),
        }
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(QgnnError::ParamLayout(format!(
                "expected {} parameters ({} times + {} coefficients), got {}",
                self.param_count(),
                self.time_param_count(),
                self.coeff_count,
                params.len()
            )));
        }
        if let Some(bad) = params.iter().find(|v| !v.is_finite()) {
            return Err(QgnnError::ParamLayout(format!("non-finite parameter {bad}")));
        }
        Ok(())
    }

    /// Resolves every slot against `params` into a form ready to run.
    pub fn compile(&self, params: &[f64]) -> Result<CompiledProgram<'_>> {
        self.check_params(params)?;
        let coeffs = &params[self.time_param_count()..];
        let slots = self
            .slots
            .iter()
            .map(|slot| compile_slot(slot, self.n_qubits, coeffs))
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledProgram {
            program: self,
            times: params[..self.time_param_count()].to_vec(),
            slots,
        })
    }

    /// `Π_p Π_q exp(-i η_pq H_q(θ)) |state⟩`.
    pub fn apply(&self, params: &[f64], state: &StateVector) -> Result<StateVector> {
        self.compile(params)?.apply(state)
    }
}

enum CompiledSlot {
    Phases(Vec<f64>),
    Rotations(Vec<(usize, f64)>),
    Dense(DenseHamiltonian),
    Kinetic(PositionRegister),
}

impl CompiledSlot {
    fn run(&self, state: &mut StateVector, eta: f64) -> Result<()> {
        match self {
            CompiledSlot::Phases(e) => {
                state.apply_diagonal_phases(e, eta);
                Ok(())
            }
            CompiledSlot::Rotations(rs) => {
                for &(q, c) in rs {
                    state.rotate_x(q, eta * c)?;
                }
                Ok(())
            }
            CompiledSlot::Dense(d) => d.evolve(state, eta),
            CompiledSlot::Kinetic(reg) => evolve_position_kinetic(state, reg, eta),
        }
    }
}

fn compile_slot(slot: &Generator, n_qubits: usize, coeffs: &[f64]) -> Result<CompiledSlot> {
    Ok(match slot {
        Generator::Diagonal(h) => CompiledSlot::Phases(h.diagonal_values()?),
        Generator::Mixer(qs) => CompiledSlot::Rotations(qs.iter().map(|&q| (q, 1.0)).collect()),
        Generator::Dense(h) => CompiledSlot::Dense(DenseHamiltonian::new(h)?),
        Generator::PositionKinetic(reg) => CompiledSlot::Kinetic(reg.clone()),
        Generator::PositionPotential(reg, pot) => {
            CompiledSlot::Phases(potential_energies(reg, n_qubits, |xs| pot.energy(xs))?)
        }
        Generator::Parametric { .. } => {
            let h = slot.pauli_sum(n_qubits, coeffs)?;
            if h.is_diagonal() {
                CompiledSlot::Phases(h.diagonal_values()?)
            } else if let Some(rs) = single_qubit_x(&h) {
                CompiledSlot::Rotations(rs)
            } else {
                CompiledSlot::Dense(DenseHamiltonian::new(&h)?)
            }
        }
    })
}

/// `Some` when every term is a single `X` on a distinct qubit.
fn single_qubit_x(h: &PauliSum) -> Option<Vec<(usize, f64)>> {
    let mut out = Vec::new();
    for t in h.terms() {
        match t.ops() {
            [(q, Axis::X)] if !out.iter().any(|&(p, _)| p == *q) => out.push((*q, t.coeff)),
            _ => return None,
        }
    }
    Some(out)
}

/// A program bound to one parameter vector.
pub struct CompiledProgram<'a> {
    program: &'a AnsatzProgram,
    times: Vec<f64>,
    slots: Vec<CompiledSlot>,
}

impl CompiledProgram<'_> {
    fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.n_qubits() != self.program.n_qubits {
            return Err(QgnnError::DimensionMismatch {
                expected: self.program.n_qubits,
                got: state.n_qubits(),
            });
        }
        Ok(())
    }

    fn run_layer(&self, state: &mut StateVector, p: usize, scale: f64) -> Result<()> {
        for (q, slot) in self.slots.iter().enumerate() {
            slot.run(state, scale * self.times[self.program.time_index(p, q)])?;
        }
        Ok(())
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        self.check_state(state)?;
        let mut out = state.clone();
        for p in 0..self.program.depth {
            self.run_layer(&mut out, p, 1.0)?;
        }
        Ok(out)
    }

    /// Runs a temporally tied program for `reps` repetitions: `⌊reps⌋` full
    /// layers plus one layer with every time scaled by the fractional part.
    pub fn apply_repetitions(&self, state: &StateVector, reps: f64) -> Result<StateVector> {
        if self.program.tying != Tying::Temporal {
            return Err(QgnnError::InvalidAnsatz(
                "variable repetition count needs temporal tying".into(),
            ));
        }
        if !(reps.is_finite() && reps >= 0.0) {
            return Err(QgnnError::InvalidArgument(format!("invalid repetition count {reps}")));
        }
        self.check_state(state)?;
        let mut out = state.clone();
        let whole = reps.floor();
        for _ in 0..whole as usize {
            self.run_layer(&mut out, 0, 1.0)?;
        }
        let frac = reps - whole;
        if frac > 1e-12 {
            self.run_layer(&mut out, 0, frac)?;
        }
        Ok(out)
    }
}

/// Convenience form of [`AnsatzProgram::apply`].
pub fn apply_qgnn(program: &AnsatzProgram, params: &[f64], state: &StateVector) -> Result<StateVector> {
    program.apply(params, state)
}

/// Effective Hamiltonian `Δ⁻¹ Σ_q η_q H_q` and step `Δ = Σ_q |η_q|` of a
/// temporally tied program.
pub fn qgrnn_effective_hamiltonian(program: &AnsatzProgram, params: &[f64]) -> Result<(PauliSum, f64)> {
    if program.tying != Tying::Temporal {
        return Err(QgnnError::InvalidAnsatz(
            "effective Hamiltonian is defined for temporal tying only".into(),
        ));
    }
    program.check_params(params)?;
    let q = program.slots.len();
    let etas = &params[..q];
    let coeffs = &params[q..];
    let delta: f64 = etas.iter().map(|e| e.abs()).sum();
    if delta == 0.0 {
        return Err(QgnnError::InvalidArgument("all evolution times are zero".into()));
    }
    let mut h = PauliSum::zero(program.n_qubits);
    for (slot, &eta) in program.slots.iter().zip(etas) {
        h = h.plus(&slot.pauli_sum(program.n_qubits, coeffs)?.scaled(eta / delta))?;
    }
    Ok((h, delta))
}

/// Qubit precision of a spectral graph-convolution schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    /// One qubit per node: `x̂ ↦ |1⟩⟨1|`, `p̂² ↦ X̂`, no anharmonic term.
    SingleQubit,
    /// A position register per node with a quartic double well.
    MultiQubit {
        register: PositionRegister,
        mu: f64,
        omega: f64,
    },
}

/// Spectral graph-convolution schedule of depth `depth`.
///
/// Multi-qubit layers run coupling, kinetic, quartic, kinetic (times
/// `α, γ, δ, β`); single-qubit layers run the cut Hamiltonian then the `X`
/// mixer (times `γ, η`).
pub fn qsgcnn_layer_schedule(g: &Graph, precision: &Precision, depth: usize) -> Result<AnsatzProgram> {
    match precision {
        Precision::SingleQubit => AnsatzProgram::new(
            g.n(),
            vec![
                Generator::Diagonal(coupling_hamiltonian_1q(g)),
                Generator::Mixer((0..g.n()).collect()),
            ],
            depth,
            Tying::Free,
            0,
        ),
        Precision::MultiQubit { register, mu, omega } => {
            if register.n_nodes() != g.n() {
                return Err(QgnnError::RegisterLayout(format!(
                    "register has {} nodes, graph has {}",
                    register.n_nodes(),
                    g.n()
                )));
            }
            let coupling = Potential::Coupling { graph: g.clone() };
            let anharmonic = Potential::Quartic {
                mu: *mu,
                omega: *omega,
            };
            AnsatzProgram::new(
                register.total_qubits(),
                vec![
                    Generator::PositionPotential(register.clone(), coupling),
                    Generator::PositionKinetic(register.clone()),
                    Generator::PositionPotential(register.clone(), anharmonic),
                    Generator::PositionKinetic(register.clone()),
                ],
                depth,
                Tying::Free,
                0,
            )
        }
    }
}

/// Broadcasts tied coefficients `[W, B]` to every edge and node of `g`.
pub fn bind_spatial(g: &Graph, tied: &[f64]) -> Result<IsingParams> {
    match tied {
        [w, b] => Ok(IsingParams::uniform(g, *w, *b)),
        _ => Err(QgnnError::ParamLayout(format!(
            "spatial Ising binding takes [W, B], got {} values",
            tied.len()
        ))),
    }
}

/// Convolutional Ising program: slot 0 is `W Σ_E ZZ + B Σ_V Z` with the two
/// shared coefficients `[W, B]`, slot 1 the `X` mixer; per-layer times.
pub fn qgcnn_ising_program(g: &Graph, depth: usize) -> Result<AnsatzProgram> {
    let mut parts = Vec::new();
    for (j, k, _) in g.edges() {
        parts.push((CoeffRef::Param(0), PauliTerm::new(1.0, [(j, Axis::Z), (k, Axis::Z)])?));
    }
    for v in 0..g.n() {
        parts.push((CoeffRef::Param(1), PauliTerm::new(1.0, [(v, Axis::Z)])?));
    }
    AnsatzProgram::new(
        g.n(),
        vec![
            Generator::Parametric {
                n_qubits: g.n(),
                parts,
            },
            Generator::Mixer((0..g.n()).collect()),
        ],
        depth,
        Tying::Spatial,
        2,
    )
}

/// Alternating `Σ_E ZZ` / `Σ X` program with free per-layer times.
pub fn qgcnn_zz_mixer_program(g: &Graph, depth: usize) -> Result<AnsatzProgram> {
    AnsatzProgram::new(
        g.n(),
        vec![
            Generator::Diagonal(crate::hamiltonians::zz_edge_hamiltonian(g)),
            Generator::Mixer((0..g.n()).collect()),
        ],
        depth,
        Tying::Free,
        0,
    )
}

/// Recurrent Ising program on `g` (typically complete): slot 0 is
/// `Σ J_jk ZZ + Σ Q_v Z` with one coefficient per edge then one per node,
/// slot 1 the unit transverse field. Temporal tying.
pub fn qgrnn_ising_program(g: &Graph) -> Result<AnsatzProgram> {
    let mut parts = Vec::new();
    let mut idx = 0;
    for (j, k, _) in g.edges() {
        parts.push((CoeffRef::Param(idx), PauliTerm::new(1.0, [(j, Axis::Z), (k, Axis::Z)])?));
        idx += 1;
    }
    for v in 0..g.n() {
        parts.push((CoeffRef::Param(idx), PauliTerm::new(1.0, [(v, Axis::Z)])?));
        idx += 1;
    }
    AnsatzProgram::new(
        g.n(),
        vec![
            Generator::Parametric {
                n_qubits: g.n(),
                parts,
            },
            Generator::Mixer((0..g.n()).collect()),
        ],
        1,
        Tying::Temporal,
        idx,
    )
}

/// Flattens Ising parameters into the coefficient order of
/// [`qgrnn_ising_program`] (edges in graph order, then nodes).
pub fn ising_coefficients(g: &Graph, params: &IsingParams) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(g.edge_count() + g.n());
    for (j, k, _) in g.edges() {
        out.push(params.coupling(j, k).ok_or_else(|| {
            QgnnError::InvalidArgument(format!("no coupling for edge {{{j}, {k}}}"))
        })?);
    }
    if params.biases.len() != g.n() {
        return Err(QgnnError::InvalidArgument("bias count mismatch".into()));
    }
    out.extend_from_slice(&params.biases);
    Ok(out)
}

/// Inverse of [`ising_coefficients`].
pub fn ising_from_coefficients(g: &Graph, coeffs: &[f64]) -> Result<IsingParams> {
    let m = g.edge_count();
    if coeffs.len() != m + g.n() {
        return Err(QgnnError::ParamLayout(format!(
            "expected {} coefficients, got {}",
            m + g.n(),
            coeffs.len()
        )));
    }
    Ok(IsingParams {
        couplings: g.edges().zip(coeffs).map(|((j, k, _), &c)| ((j, k), c)).collect(),
        biases: coeffs[m..].to_vec(),
    })
}
