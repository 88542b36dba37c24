//! Weighted undirected graphs and their Laplacians.
//!
//! Graphs are small (tens of nodes at most) and immutable once built, so the
//! edge set lives in a sorted map keyed by `(j, k)` with `j < k` and dense
//! matrices are only materialized on demand.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QgnnError, Result};

/// Default number of rejection-sampling attempts in [`erdos_renyi_connected`].
pub const DEFAULT_RESAMPLE_CAP: usize = 10_000;

/// Weighted undirected simple graph on nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: BTreeMap<(usize, usize), f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = QgnnError;

    fn try_from(repr: GraphRepr) -> Result<Self> {
        Graph::from_weighted_edges(repr.n, repr.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr {
            n: g.n,
            edges: g.edges.iter().map(|(&(j, k), &w)| (j, k, w)).collect(),
        }
    }
}

fn ordered(j: usize, k: usize) -> (usize, usize) {
    if j < k {
        (j, k)
    } else {
        (k, j)
    }
}

impl Graph {
    /// Edgeless graph on `n` nodes.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(QgnnError::InvalidGraph("node count must be positive".into()));
        }
        Ok(Self {
            n,
            edges: BTreeMap::new(),
        })
    }

    /// Unweighted graph from an edge list.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::from_weighted_edges(n, edges.into_iter().map(|(j, k)| (j, k, 1.0)))
    }

    pub fn from_weighted_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut g = Self::new(n)?;
        for (j, k, w) in edges {
            g.add_edge(j, k, w)?;
        }
        Ok(g)
    }

    /// Inserts the edge `{j, k}`; duplicate edges are rejected.
    pub fn add_edge(&mut self, j: usize, k: usize, weight: f64) -> Result<()> {
        if j == k {
            return Err(QgnnError::InvalidGraph(format!("self-loop on node {j}")));
        }
        if j >= self.n || k >= self.n {
            return Err(QgnnError::InvalidGraph(format!(
                "edge {{{j}, {k}}} out of range for {} nodes",
                self.n
            )));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(QgnnError::InvalidGraph(format!(
                "edge {{{j}, {k}}} has non-positive weight {weight}"
            )));
        }
        if self.edges.insert(ordered(j, k), weight).is_some() {
            return Err(QgnnError::InvalidGraph(format!("duplicate edge {{{j}, {k}}}")));
        }
        Ok(())
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(QgnnError::InvalidGraph("a ring needs at least 3 nodes".into()));
        }
        Self::from_edges(n, (0..n).map(|j| (j, (j + 1) % n)))
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n.saturating_sub(1)).map(|j| (j, j + 1)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).flat_map(|j| (j + 1..n).map(move |k| (j, k))))
    }

    /// Two triangles `{0,1,2}` and `{3,4,5}` joined by the bridge `{2,3}`.
    pub fn bridged_triangles() -> Self {
        Self::from_edges(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])
            .expect("static edge list is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(j, k, weight)` with `j < k`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(j, k), &w)| (j, k, w))
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        self.edges.contains_key(&ordered(j, k))
    }

    pub fn weight(&self, j: usize, k: usize) -> Option<f64> {
        self.edges.get(&ordered(j, k)).copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.keys().filter(|&&(j, k)| j == v || k == v).count()
    }

    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(j, k) in self.edges.keys() {
            adj[j].push(k);
            adj[k].push(j);
        }
        adj
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let adj = self.adjacency_lists();
        let mut seen = vec![false; self.n];
        let mut components = 0;
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        components
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Dense weighted adjacency matrix.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for (j, k, w) in self.edges() {
            a[(j, k)] = w;
            a[(k, j)] = w;
        }
        a
    }

    pub fn laplacian(&self) -> Laplacian {
        laplacian(self)
    }

    /// Relabels node `v` as `perm[v]`, keeping weights.
    pub fn permute(&self, perm: &[usize]) -> Result<Graph> {
        permute(self, perm)
    }
}

/// Graph Laplacian `L = D - A` of a weighted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian(DMatrix<f64>);

impl Laplacian {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)]
    }

    /// Quadratic form `bᵀ L b` for a bitstring `b` (bit `j` of `bits` is `b_j`).
    ///
    /// Equals the total weight of edges cut by the partition `b`.
    pub fn quadratic_form_bits(&self, bits: usize) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for j in (0..n).filter(|&j| bits >> j & 1 == 1) {
            for k in (0..n).filter(|&k| bits >> k & 1 == 1) {
                acc += self.0[(j, k)];
            }
        }
        acc
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(x);
        (v.transpose() * &self.0 * &v)[(0, 0)]
    }
}

/// `L_jk = δ_jk Σ_v Λ_jv − Λ_jk`.
pub fn laplacian(g: &Graph) -> Laplacian {
    let mut l = DMatrix::zeros(g.n, g.n);
    for (j, k, w) in g.edges() {
        l[(j, k)] -= w;
        l[(k, j)] -= w;
        l[(j, j)] += w;
        l[(k, k)] += w;
    }
    Laplacian(l)
}

fn check_permutation(n: usize, perm: &[usize]) -> Result<()> {
    if perm.len() != n {
        return Err(QgnnError::PermutationLength {
            expected: n,
            got: perm.len(),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(QgnnError::InvalidPermutation(format!("{perm:?}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Maps edge `{j, k}` to `{perm[j], perm[k]}`.
pub fn permute(g: &Graph, perm: &[usize]) -> Result<Graph> {
    check_permutation(g.n, perm)?;
    let edges = g
        .edges
        .iter()
        .map(|(&(j, k), &w)| (ordered(perm[j], perm[k]), w))
        .collect();
    Ok(Graph { n: g.n, edges })
}

/// Samples `G(n, p)` graphs until a connected one appears.
pub fn erdos_renyi_connected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    erdos_renyi_connected_with_cap(n, p, rng, DEFAULT_RESAMPLE_CAP)
}

pub fn erdos_renyi_connected_with_cap<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    rng: &mut R,
    max_attempts: usize,
) -> Result<Graph> {
    if n < 2 {
        return Err(QgnnError::InvalidArgument(format!("need n >= 2, got {n}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(QgnnError::InvalidArgument(format!("need 0 < p < 1, got {p}")));
    }
    for _ in 0..max_attempts {
        let mut g = Graph::new(n)?;
        for j in 0..n {
            for k in j + 1..n {
                if rng.gen_bool(p) {
                    g.edges.insert((j, k), 1.0);
                }
            }
        }
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(QgnnError::ConnectivityUnreachable {
        n,
        p,
        attempts: max_attempts,
    })
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

/// Exact isomorphism test on the unweighted structure (weights are ignored).
///
/// Backtracking over vertex assignments, pruned by degree sequence and by the
/// multiset of neighbour degrees of each vertex.
pub fn are_isomorphic(g1: &Graph, g2: &Graph) -> bool {
    if g1.n != g2.n || g1.edge_count() != g2.edge_count() {
        return false;
    }
    let n = g1.n;
    let adj1 = g1.adjacency_lists();
    let adj2 = g2.adjacency_lists();
    let sig1 = signatures(&adj1);
    let sig2 = signatures(&adj2);

    let mut sorted1 = sig1.clone();
    let mut sorted2 = sig2.clone();
    sorted1.sort();
    sorted2.sort();
    if sorted1 != sorted2 {
        return false;
    }

    let mat1 = adjacency_bits(&adj1);
    let mat2 = adjacency_bits(&adj2);
    let order = search_order(&adj1);
    let mut mapping = vec![usize::MAX; n];
    let mut used = vec![false; n];
    extend_mapping(
        0, &order, &sig1, &sig2, &mat1, &mat2, &mut mapping, &mut used,
    )
}

type Signature = (usize, Vec<usize>);

fn signatures(adj: &[Vec<usize>]) -> Vec<Signature> {
    adj.iter()
        .map(|nbrs| {
            let mut nd: Vec<usize> = nbrs.iter().map(|&w| adj[w].len()).collect();
            nd.sort_unstable();
            (nbrs.len(), nd)
        })
        .collect()
}

fn adjacency_bits(adj: &[Vec<usize>]) -> Vec<Vec<bool>> {
    let n = adj.len();
    let mut m = vec![vec![false; n]; n];
    for (v, nbrs) in adj.iter().enumerate() {
        for &w in nbrs {
            m[v][w] = true;
        }
    }
    m
}

/// Vertex order for the search: each new vertex is the unvisited one with the
/// most already-ordered neighbours (ties: highest degree), so adjacency
/// constraints bite as early as possible.
fn search_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let mut links = vec![0usize; n];
    for _ in 0..n {
        let next = (0..n)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| (links[v], adj[v].len(), std::cmp::Reverse(v)))
            .expect("an unplaced vertex remains");
        placed[next] = true;
        order.push(next);
        for &w in &adj[next] {
            links[w] += 1;
        }
    }
    order
}

#[allow(clippy::too_many_arguments)]
fn extend_mapping(
    depth: usize,
    order: &[usize],
    sig1: &[Signature],
    sig2: &[Signature],
    mat1: &[Vec<bool>],
    mat2: &[Vec<bool>],
    mapping: &mut [usize],
    used: &mut [bool],
) -> bool {
    if depth == order.len() {
        return true;
    }
    let v = order[depth];
    for cand in 0..sig2.len() {
        if used[cand] || sig1[v] != sig2[cand] {
            continue;
        }
        let consistent = order[..depth]
            .iter()
            .all(|&u| mat1[v][u] == mat2[cand][mapping[u]]);
        if !consistent {
            continue;
        }
        mapping[v] = cand;
        used[cand] = true;
        if extend_mapping(depth + 1, order, sig1, sig2, mat1, mat2, mapping, used) {
            return true;
        }
        used[cand] = false;
        mapping[v] = usize::MAX;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dense(l: &Laplacian) -> Vec<Vec<f64>> {
        (0..l.n()).map(|j| (0..l.n()).map(|k| l.get(j, k)).collect()).collect()
    }

    #[test]
    fn triangle_laplacian() {
        let g = Graph::complete(3).unwrap();
        assert_eq!(
            dense(&g.laplacian()),
            vec![
                vec![2.0, -1.0, -1.0],
                vec![-1.0, 2.0, -1.0],
                vec![-1.0, -1.0, 2.0]
            ]
        );
    }

    #[test]
    fn edgeless_laplacian_is_zero() {
        let g = Graph::new(2).unwrap();
        assert_eq!(dense(&g.laplacian()), vec![vec![0.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn weighted_path_laplacian() {
        let g = Graph::from_weighted_edges(3, [(0, 1, 2.0), (1, 2, 3.0)]).unwrap();
        assert_eq!(
            dense(&g.laplacian()),
            vec![
                vec![2.0, -2.0, 0.0],
                vec![-2.0, 5.0, -3.0],
                vec![0.0, -3.0, 3.0]
            ]
        );
    }

    #[test]
    fn rejects_invalid_edges() {
        let mut g = Graph::new(3).unwrap();
        assert!(g.add_edge(1, 1, 1.0).is_err());
        assert!(g.add_edge(0, 3, 1.0).is_err());
        assert!(g.add_edge(0, 1, 0.0).is_err());
        assert!(g.add_edge(0, 1, -1.0).is_err());
        g.add_edge(0, 1, 1.0).unwrap();
        assert!(g.add_edge(1, 0, 1.0).is_err());
        assert!(Graph::new(0).is_err());
    }

    #[test]
    fn two_node_er_is_single_edge() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = erdos_renyi_connected(2, 0.999, &mut rng).unwrap();
            assert_eq!(g, Graph::from_edges(2, [(0, 1)]).unwrap());
        }
    }

    #[test]
    fn er_is_reproducible() {
        let a = erdos_renyi_connected(6, 0.5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = erdos_renyi_connected(6, 0.5, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
    }

    #[test]
    fn er_mean_edge_count() {
        // Binomial(105, 0.5): sd of a single draw is sqrt(105)/2; over 1000 draws
        // the mean has sd ~0.162. Conditioning on connectivity biases upwards.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 1000;
        let total: usize = (0..draws)
            .map(|_| erdos_renyi_connected(15, 0.5, &mut rng).unwrap().edge_count())
            .sum();
        let mean = total as f64 / draws as f64;
        let sd = (105.0f64).sqrt() / 2.0 / (draws as f64).sqrt();
        assert!(mean > 52.5 - 3.0 * sd, "mean {mean}");
        assert!(mean < 52.5 + 3.0 * sd + 0.5, "mean {mean}");
    }

    #[test]
    fn er_cap_exceeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = erdos_renyi_connected_with_cap(12, 0.01, &mut rng, 5).unwrap_err();
        assert!(matches!(err, QgnnError::ConnectivityUnreachable { attempts: 5, .. }));
        assert!(erdos_renyi_connected(1, 0.5, &mut rng).is_err());
        assert!(erdos_renyi_connected(4, 1.0, &mut rng).is_err());
    }

    #[test]
    fn permute_examples() {
        let path = Graph::path(3).unwrap();
        assert_eq!(path.permute(&[0, 1, 2]).unwrap(), path);
        let tri = Graph::complete(3).unwrap();
        assert_eq!(tri.permute(&[2, 0, 1]).unwrap(), tri);
        let p = path.permute(&[2, 0, 1]).unwrap();
        assert_eq!(p, Graph::from_edges(3, [(2, 0), (0, 1)]).unwrap());
        assert!(matches!(
            path.permute(&[0, 1]),
            Err(QgnnError::PermutationLength { .. })
        ));
        assert!(path.permute(&[0, 0, 1]).is_err());
    }

    #[test]
    fn isomorphism_examples() {
        let tri = Graph::complete(3).unwrap();
        let path = Graph::path(3).unwrap();
        assert!(are_isomorphic(&tri, &tri));
        assert!(!are_isomorphic(&tri, &path));
        let c6 = Graph::ring(6).unwrap();
        let two_tri =
            Graph::from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        assert!(!are_isomorphic(&c6, &two_tri));
        assert!(!are_isomorphic(&tri, &Graph::complete(4).unwrap()));
    }

    #[test]
    fn json_is_canonical() {
        let g = Graph::from_weighted_edges(3, [(2, 1, 3.0), (1, 0, 2.0)]).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"n":3,"edges":[[0,1,2.0],[1,2,3.0]]}"#);
        let back: Graph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Graph>(r#"{"n":2,"edges":[[0,0,1.0]]}"#).is_err());
    }
}
