//! Cross-module invariants checked against independent oracles.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;
use qgnn_core::ansatz::{
    qgcnn_ising_program, qgrnn_effective_hamiltonian, qgrnn_ising_program, qsgcnn_layer_schedule, Precision,
};
use qgnn_core::experiments::ghz::stabilizer_loss;
use qgnn_core::graph::{are_isomorphic, random_permutation};
use qgnn_core::hamiltonians::{
    coupling_hamiltonian_1q, ghz_stabilizer_sum, ising_hamiltonian, mixer_hamiltonian, zz_edge_hamiltonian,
    IsingParams,
};
use qgnn_core::optimize::{adam_minimize, finite_diff_gradient, AdamConfig};
use qgnn_core::sim::{evolve_dense, evolve_position_kinetic, evolve_position_potential, PositionRegister};
use qgnn_core::{rng, Graph, PauliSum, StateVector};
use rand::Rng;

fn graph_from_mask(n: usize, mask: u64) -> Graph {
    let mut edges = Vec::new();
    let mut bit = 0;
    for j in 0..n {
        for k in j + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((j, k));
            }
            bit += 1;
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, any::<u64>()).prop_map(|(n, mask)| graph_from_mask(n, mask))
}

fn max_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn l2_diff(a: &StateVector, b: &StateVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Oracle: every permutation of 0..n, by Heap's algorithm.
fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    out.push(a.clone());
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn brute_isomorphic(g1: &Graph, g2: &Graph) -> bool {
    g1.n() == g2.n()
        && g1.edge_count() == g2.edge_count()
        && all_permutations(g1.n())
            .iter()
            .any(|p| g1.edges().all(|(j, k, _)| g2.has_edge(p[j], p[k])))
}

/// Oracle: components by union-find.
fn components(g: &Graph) -> usize {
    let mut parent: Vec<usize> = (0..g.n()).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for (j, k, _) in g.edges() {
        let (a, b) = (find(&mut parent, j), find(&mut parent, k));
        parent[a] = b;
    }
    (0..g.n()).filter(|&v| find(&mut parent, v) == v).count()
}

/// Dense matrix of a qubit relabeling: basis `b` goes to `b'` with bit
/// `perm[q]` of `b'` equal to bit `q` of `b`.
fn qubit_permutation(n: usize, perm: &[usize]) -> DMatrix<Complex64> {
    let dim = 1 << n;
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        let mut img = 0;
        for (q, &p) in perm.iter().enumerate() {
            img |= ((b >> q) & 1) << p;
        }
        m[(img, b)] = Complex64::new(1.0, 0.0);
    }
    m
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn random_params<R: Rng>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-scale..scale)).collect()
}

// ---------------------------------------------------------------- graphs

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabeled_graphs_are_isomorphic(g in arb_graph(8), seed in any::<u64>()) {
        let perm = random_permutation(g.n(), &mut rng::master(seed));
        prop_assert!(are_isomorphic(&g, &g.permute(&perm).unwrap()));
    }

    #[test]
    fn laplacian_permutes_by_conjugation(g in arb_graph(8), seed in any::<u64>()) {
        let perm = random_permutation(g.n(), &mut rng::master(seed));
        let n = g.n();
        let mut p = DMatrix::<f64>::zeros(n, n);
        for (v, &img) in perm.iter().enumerate() {
            p[(img, v)] = 1.0;
        }
        let expect = &p * g.laplacian().matrix() * p.transpose();
        let permuted = g.permute(&perm).unwrap().laplacian();
        prop_assert_eq!(permuted.matrix(), &expect);
    }

    #[test]
    fn isomorphism_agrees_with_brute_force(a in any::<u64>(), b in any::<u64>(), n in 2usize..=6) {
        let (g1, g2) = (graph_from_mask(n, a), graph_from_mask(n, b));
        prop_assert_eq!(are_isomorphic(&g1, &g2), brute_isomorphic(&g1, &g2));
    }

    #[test]
    fn laplacian_kernel_counts_components(g in arb_graph(8)) {
        let eig = SymmetricEigen::new(g.laplacian().matrix().clone());
        let zeros = eig.eigenvalues.iter().filter(|l| l.abs() < 1e-9).count();
        prop_assert_eq!(zeros, components(&g));
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-9));
        let ones = nalgebra::DVector::from_element(g.n(), 1.0);
        prop_assert!((g.laplacian().matrix() * ones).amax() < 1e-12);
    }
}

// ------------------------------------------------------------- simulator

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolutions_preserve_norm(seed in any::<u64>(), n in 1usize..=6, t in -4.0f64..4.0) {
        let mut r = rng::master(seed);
        let g = graph_from_mask(n.max(2), r.gen());
        let n = g.n();
        let mut s = StateVector::random(n, &mut r);
        s.evolve_diagonal(&coupling_hamiltonian_1q(&g), t).unwrap();
        s.evolve_mixer(&(0..n).collect::<Vec<_>>(), 0.7 * t).unwrap();
        let ising = ising_hamiltonian(&g, &IsingParams::uniform(&g, 0.3, -0.8)).unwrap();
        evolve_dense(&mut s, &ising, 0.4 * t).unwrap();
        s.rotate_z(0, t).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn diagonal_phases_compose(seed in any::<u64>(), t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let mut r = rng::master(seed);
        let g = graph_from_mask(5, r.gen());
        let h = coupling_hamiltonian_1q(&g);
        let s = StateVector::random(5, &mut r);
        let mut a = s.clone();
        a.evolve_diagonal(&h, t1).unwrap();
        a.evolve_diagonal(&h, t2).unwrap();
        let mut b = s.clone();
        b.evolve_diagonal(&h, t1 + t2).unwrap();
        prop_assert!(max_diff(&a, &b) < 1e-12);
    }

    #[test]
    fn dense_matches_diagonal(seed in any::<u64>(), n in 2usize..=8, t in -2.0f64..2.0) {
        let mut r = rng::master(seed);
        let g = graph_from_mask(n, r.gen());
        let mut terms = ising_hamiltonian(&g, &IsingParams::uniform(&g, r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
            .unwrap()
            .terms()
            .to_vec();
        terms.retain(|t| t.is_diagonal());
        let h = PauliSum::from_terms(n, terms).unwrap();
        let s = StateVector::random(n, &mut r);
        let mut a = s.clone();
        a.evolve_diagonal(&h, t).unwrap();
        let mut b = s.clone();
        evolve_dense(&mut b, &h, t).unwrap();
        prop_assert!(max_diff(&a, &b) < 1e-9);
    }

    #[test]
    fn ansatz_output_is_normalized(seed in any::<u64>()) {
        let mut r = rng::master(seed);
        let g = graph_from_mask(5, r.gen());
        let program = qgcnn_ising_program(&g, 3).unwrap();
        let params = random_params(&mut r, program.param_count(), 3.0);
        let out = program.apply(&params, &StateVector::random(5, &mut r)).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn ghz_loss_is_bounded_below(seed in any::<u64>(), n in 2usize..=6) {
        let mut r = rng::master(seed);
        let program = qgnn_core::ansatz::qgcnn_zz_mixer_program(&Graph::path(n).unwrap(), 3).unwrap();
        let params = random_params(&mut r, program.param_count(), 3.0);
        let out = program.apply(&params, &StateVector::plus(n)).unwrap();
        let loss = stabilizer_loss(&out).unwrap();
        prop_assert!(loss >= -(n as f64) - 1e-9);
        if loss <= -(n as f64) + 0.01 {
            prop_assert!(StateVector::ghz(n).fidelity(&out).unwrap() >= 0.99);
        }
    }

    #[test]
    fn central_differences_exact_on_quadratics(
        a in prop::collection::vec(-3.0f64..3.0, 3),
        c in prop::collection::vec(-3.0f64..3.0, 3),
        x in prop::collection::vec(-3.0f64..3.0, 3),
    ) {
        // f(x) = Σ a_i x_i² + c_i x_i  ⇒  ∂f/∂x_i = 2 a_i x_i + c_i
        let f = |p: &[f64]| p.iter().zip(&a).zip(&c).map(|((x, a), c)| a * x * x + c * x).sum::<f64>();
        let g = finite_diff_gradient(&f, &x, 1e-3).unwrap();
        for i in 0..3 {
            prop_assert!((g[i] - (2.0 * a[i] * x[i] + c[i])).abs() < 1e-9);
        }
    }
}

#[test]
fn norm_preserved_over_ten_thousand_evolutions() {
    let mut r = rng::master(17);
    let g = Graph::ring(4).unwrap();
    let program = qgcnn_ising_program(&g, 2).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let params = random_params(&mut r, program.param_count(), 5.0);
        let out = program.apply(&params, &StateVector::random(4, &mut r)).unwrap();
        worst = worst.max((out.norm_sqr() - 1.0).abs());
    }
    assert!(worst < 1e-10, "{worst}");
}

/// Error of a first-order product formula with `steps` slices against the
/// exact evolution under `a + b`.
fn trotter_error(a: &PauliSum, b: &PauliSum, psi: &StateVector, t: f64, steps: usize) -> f64 {
    let mut exact = psi.clone();
    evolve_dense(&mut exact, &a.plus(b).unwrap(), t).unwrap();
    let mut s = psi.clone();
    for _ in 0..steps {
        evolve_dense(&mut s, a, t / steps as f64).unwrap();
        evolve_dense(&mut s, b, t / steps as f64).unwrap();
    }
    l2_diff(&s, &exact)
}

#[test]
fn trotter_error_halves_when_steps_double() {
    let g = Graph::path(4).unwrap();
    let a = zz_edge_hamiltonian(&g);
    let b = mixer_hamiltonian(&g);
    let psi = StateVector::random(4, &mut rng::master(3));
    let errs: Vec<f64> = [32, 64, 128, 256].iter().map(|&p| trotter_error(&a, &b, &psi, 1.0, p)).collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.8..=2.2).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn recurrent_program_converges_to_effective_evolution() {
    let g = Graph::complete(3).unwrap();
    let program = qgrnn_ising_program(&g).unwrap();
    let mut params = vec![0.3, 0.5];
    params.extend([0.8, -0.4, 0.6, 0.2, -0.7, 0.5]);
    let (h_eff, _) = qgrnn_effective_hamiltonian(&program, &params).unwrap();
    let psi = StateVector::random(3, &mut rng::master(5));
    let total = 1.5;
    let mut exact = psi.clone();
    evolve_dense(&mut exact, &h_eff, total).unwrap();
    let mut last = f64::INFINITY;
    for reps in [8usize, 16, 32, 64, 128] {
        // Scale the times so that `reps` repetitions cover `total`.
        let delta = total / reps as f64;
        let mut p = params.clone();
        let sum = params[0].abs() + params[1].abs();
        p[0] = params[0] / sum * delta;
        p[1] = params[1] / sum * delta;
        let out = program.compile(&p).unwrap().apply_repetitions(&psi, reps as f64).unwrap();
        let err = l2_diff(&out, &exact);
        assert!(err < last, "reps {reps}: {err} !< {last}");
        last = err;
    }
    assert!(last < 0.01, "{last}");
}

#[test]
fn heisenberg_laplacian_update_matches_classical_map() {
    // One coupling step (time α) then one kinetic step (time γ) on narrow
    // packets. Classically x ← x + γ p with p ← p − α ∂V/∂x and
    // V = xᵀ L x, so the position means move by γ⟨p⟩ − 2αγ (L⟨x⟩).
    // The factor 2 comes from ∂(xᵀLx)/∂x = 2Lx.
    let g = Graph::path(2).unwrap();
    let reg = PositionRegister::spanning(2, 6, 4.0).unwrap();
    let (x0, x1) = (-0.8, 0.9);
    let sigma = 0.35;
    let boost = |center: f64, k: f64| -> Vec<Complex64> {
        reg.gaussian(center, sigma)
            .iter()
            .zip(reg.grid())
            .map(|(a, x)| a * Complex64::from_polar(1.0, k * x))
            .collect()
    };
    let psi = reg.product_state(&[boost(x0, 0.5), boost(x1, -0.3)]).unwrap();
    let (alpha, gamma) = (0.05, 0.1);
    let mean_x: Vec<f64> = (0..2).map(|v| reg.mean_position(&psi, v)).collect();
    let mean_p: Vec<f64> = (0..2).map(|v| reg.mean_momentum(&psi, v).unwrap()).collect();

    let mut s = psi.clone();
    let lap = g.laplacian();
    evolve_position_potential(&mut s, &reg, |xs| lap.quadratic_form(xs), alpha).unwrap();
    evolve_position_kinetic(&mut s, &reg, gamma).unwrap();
    for j in 0..2 {
        let coupling: f64 = (0..2).map(|k| lap.get(j, k) * mean_x[k]).sum();
        let predicted = gamma * mean_p[j] - 2.0 * alpha * gamma * coupling;
        let shift = reg.mean_position(&s, j) - mean_x[j];
        let rel = (shift - predicted).abs() / predicted.abs();
        assert!(rel < 0.05, "node {j}: shift {shift} predicted {predicted} rel {rel}");
    }
}

// ---------------------------------------------------------- hamiltonians

#[test]
fn coupling_eigenvalues_are_cut_quadratic_forms() {
    let mut r = rng::master(12);
    for n in 1..=10 {
        let mut g = Graph::new(n).unwrap();
        for j in 0..n {
            for k in j + 1..n {
                if r.gen_bool(0.5) {
                    g.add_edge(j, k, r.gen_range(0.1..2.0)).unwrap();
                }
            }
        }
        let values = coupling_hamiltonian_1q(&g).diagonal_values().unwrap();
        let l = g.laplacian();
        for (b, v) in values.iter().enumerate() {
            let bits: Vec<f64> = (0..n).map(|q| ((b >> q) & 1) as f64).collect();
            let x = nalgebra::DVector::from_vec(bits);
            let quad = (x.transpose() * l.matrix() * &x)[(0, 0)];
            assert!((v - quad).abs() < 1e-12, "n {n} b {b}: {v} vs {quad}");
        }
    }
}

#[test]
fn constructed_hamiltonians_are_hermitian() {
    let mut r = rng::master(4);
    for n in 2..=8 {
        let g = graph_from_mask(n, r.gen());
        let hs = [
            coupling_hamiltonian_1q(&g),
            mixer_hamiltonian(&g),
            zz_edge_hamiltonian(&g),
            ising_hamiltonian(&g, &IsingParams::uniform(&g, 0.7, -0.2)).unwrap(),
            ghz_stabilizer_sum(n).unwrap(),
        ];
        for h in hs {
            let m = h.dense_matrix();
            assert!(max_abs(&(&m - m.adjoint())) < 1e-12);
        }
    }
}

#[test]
fn coupling_hamiltonian_is_permutation_equivariant() {
    let mut r = rng::master(6);
    for n in 2..=6 {
        let g = graph_from_mask(n, r.gen());
        let perm = random_permutation(n, &mut r);
        let p = qubit_permutation(n, &perm);
        let h = coupling_hamiltonian_1q(&g).dense_matrix();
        let hp = coupling_hamiltonian_1q(&g.permute(&perm).unwrap()).dense_matrix();
        assert!(max_abs(&(&hp - &p * h * p.adjoint())) < 1e-12, "n {n}");
    }
}

#[test]
fn ghz_is_unique_top_eigenvector_of_stabilizers() {
    for n in 2..=6 {
        let m = ghz_stabilizer_sum(n).unwrap().dense_matrix();
        let eig = nalgebra::SymmetricEigen::new(m.map(|c| c.re));
        assert!(m.map(|c| c.im).amax() < 1e-15);
        let mut vals: Vec<(f64, usize)> = eig.eigenvalues.iter().copied().zip(0..).collect();
        vals.sort_by(|a, b| b.0.total_cmp(&a.0));
        assert!((vals[0].0 - n as f64).abs() < 1e-9);
        assert!(vals[1].0 < n as f64 - 1.0 + 1e-9, "gap at n {n}");
        let v = eig.eigenvectors.column(vals[0].1);
        let amps: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let top = StateVector::normalized(amps).unwrap();
        assert!((StateVector::ghz(n).fidelity(&top).unwrap() - 1.0).abs() < 1e-9);
    }
}

// ---------------------------------------------------------------- ansatz

#[test]
fn spatial_ansatz_invariant_under_ring_rotation() {
    let n = 5;
    let g = Graph::ring(n).unwrap();
    let program = qgcnn_ising_program(&g, 3).unwrap();
    let mut r = rng::master(8);
    let params = random_params(&mut r, program.param_count(), 2.0);
    let out = program.apply(&params, &StateVector::plus(n)).unwrap();
    let rotate: Vec<usize> = (0..n).map(|v| (v + 1) % n).collect();
    let p = qubit_permutation(n, &rotate);
    let observables = [
        zz_edge_hamiltonian(&g),
        mixer_hamiltonian(&g),
        "0.7 Z0 Z2\n-0.3 Z1 Z3\n0.5 X4".parse::<PauliSum>().unwrap(),
    ];
    for obs in observables {
        let m = obs.dense_matrix();
        let rotated = &p * &m * p.adjoint();
        let psi = nalgebra::DVector::from_column_slice(out.amplitudes());
        let e1 = (psi.adjoint() * &m * &psi)[(0, 0)].re;
        let e2 = (psi.adjoint() * rotated * &psi)[(0, 0)].re;
        assert!((e1 - e2).abs() < 1e-9, "{e1} vs {e2}");
    }
}

#[test]
fn spectral_schedule_is_equivariant_on_exhaustive_distributions() {
    let mut r = rng::master(10);
    for _ in 0..20 {
        let n = r.gen_range(3..=6);
        let g = graph_from_mask(n, r.gen());
        let perm = random_permutation(n, &mut r);
        let program = qsgcnn_layer_schedule(&g, &Precision::SingleQubit, 3).unwrap();
        let permuted = qsgcnn_layer_schedule(&g.permute(&perm).unwrap(), &Precision::SingleQubit, 3).unwrap();
        let params = random_params(&mut r, program.param_count(), 3.0);
        let a = program.apply(&params, &StateVector::plus(n)).unwrap().probabilities();
        let b = permuted.apply(&params, &StateVector::plus(n)).unwrap().probabilities();
        for (bits, pa) in a.iter().enumerate() {
            let mut img = 0;
            for (q, &pq) in perm.iter().enumerate() {
                img |= ((bits >> q) & 1) << pq;
            }
            assert!((pa - b[img]).abs() < 1e-12);
        }
    }
}

// -------------------------------------------------------------- optimize

#[test]
fn adam_traces_are_bit_reproducible() {
    let run = || {
        let mut r = rng::master(99);
        let init = random_params(&mut r, 4, 1.0);
        let f = |p: &[f64]| p.iter().enumerate().map(|(i, x)| (x - i as f64).powi(2) + x.sin()).sum::<f64>();
        adam_minimize(&f, &init, 50, 1e-5, AdamConfig::default(), None).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.params, b.params);
    assert_eq!(a.trace.without_timing(), b.trace.without_timing());
    assert!(a.trace.rows.iter().all(|row| row.loss.is_finite() && row.params.iter().all(|p| p.is_finite())));
}

#[test]
fn coupling_potential_matches_laplacian_form() {
    let g = Graph::from_weighted_edges(3, [(0, 1, 1.5), (1, 2, 0.5)]).unwrap();
    let pot = qgnn_core::ansatz::Potential::Coupling { graph: g.clone() };
    let xs = [0.3, -1.2, 2.0];
    assert!((pot.energy(&xs) - g.laplacian().quadratic_form(&xs)).abs() < 1e-12);
}
