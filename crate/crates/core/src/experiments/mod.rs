//! Seeded experiment pipelines: dynamics learning, GHZ preparation,
//! spectral clustering and graph-isomorphism classification.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{erdos_renyi_connected, Graph};

pub mod clustering;
pub mod dynamics;
pub mod ghz;
pub mod isomorphism;
pub mod ks;

pub use clustering::{run_spectral_clustering, ClusterConfig, ClusterMode, ClusterResult};
pub use dynamics::{run_dynamics_learning, DynamicsConfig, DynamicsDataset, DynamicsResult};
pub use ghz::{phase_kickback_test, run_ghz_preparation, uniform_phases, GhzConfig, GhzResult, KickbackResult};
pub use isomorphism::{run_graph_isomorphism, IsoConfig, IsoPairDataset, IsoResult};
pub use ks::{iso_pair_loss, ks_statistic, EnergySampleSet, KS_THRESHOLD};

/// How an experiment obtains its graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Path { n: usize },
    Ring { n: usize },
    Complete { n: usize },
    /// Two triangles joined by a single edge (6 nodes).
    BridgedTriangles,
    /// Connected sample of `G(n, p)`.
    ErdosRenyi { n: usize, p: f64 },
    /// Explicit unit-weight edge list.
    Edges { n: usize, edges: Vec<(usize, usize)> },
}

impl GraphSpec {
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Graph> {
        match self {
            GraphSpec::Path { n } => Graph::path(*n),
            GraphSpec::Ring { n } => Graph::ring(*n),
            GraphSpec::Complete { n } => Graph::complete(*n),
            GraphSpec::BridgedTriangles => Ok(Graph::bridged_triangles()),
            GraphSpec::ErdosRenyi { n, p } => erdos_renyi_connected(*n, *p, rng),
            GraphSpec::Edges { n, edges } => Graph::from_edges(*n, edges.iter().copied()),
        }
    }
}
