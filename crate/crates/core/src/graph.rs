//! Agent networks: topologies, weighted adjacency, Laplacians.
//!
//! The stacked constraint operator `A = ℒ ⊗ I_n` is never formed; [`apply_a`]
//! applies it block by block as `(Ax)_i = Σ_{j∈N_i} a_ij (x_i − x_j)`, which
//! equals `Σ_j l_ij x_j` because every Laplacian row sums to zero.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::weighted_disagreement;
use crate::linalg::{symmetric_eigenvalues, BlockVector, DenseMatrix};

const ER_MAX_ATTEMPTS: usize = 100;

/// Shape of a generated network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TopologyKind {
    Complete,
    Ring,
    Star,
    ErdosRenyi { prob: f64 },
}

/// Connected simple undirected graph on `p` agents.
///
/// Edges are stored as `(i, j)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTopology")]
pub struct Topology {
    p: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawTopology {
    p: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawTopology> for Topology {
    type Error = Error;

    fn try_from(raw: RawTopology) -> Result<Self> {
        Topology::new(raw.p, raw.edges)
    }
}

impl Topology {
    /// Validates and normalizes an edge list. Rejects self loops, repeated
    /// edges, out-of-range endpoints and disconnected graphs.
    pub fn new(p: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let t = Self::unchecked(p, edges)?;
        if !t.is_connected() {
            return Err(Error::InvalidTopology("graph is disconnected".into()));
        }
        Ok(t)
    }

    fn unchecked(p: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if p < 2 {
            return Err(Error::InvalidTopology(format!("need at least 2 agents, got {p}")));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j {
                return Err(Error::InvalidTopology(format!("self loop at {i}")));
            }
            if i >= p || j >= p {
                return Err(Error::InvalidTopology(format!("edge ({i}, {j}) out of range for p = {p}")));
            }
            if !set.insert((i.min(j), i.max(j))) {
                return Err(Error::InvalidTopology(format!("repeated edge ({i}, {j})")));
            }
        }
        Ok(Self { p, edges: set.into_iter().collect() })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Sorted neighbor ids of every agent.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.p];
        for &(i, j) in &self.edges {
            out[i].push(j);
            out[j].push(i);
        }
        out.iter_mut().for_each(|l| l.sort_unstable());
        out
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == i || b == i).count()
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.p * (self.p - 1) / 2
    }

    fn is_connected(&self) -> bool {
        let nbrs = self.neighbor_lists();
        let mut seen = vec![false; self.p];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &nbrs[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Builds a connected topology; deterministic in `(kind, p, seed)`.
///
/// Erdős–Rényi draws are rejected until connected, at most 100 times.
pub fn build_topology(kind: TopologyKind, p: usize, seed: u64) -> Result<Topology> {
    if p < 2 {
        return Err(Error::InvalidTopology(format!("need at least 2 agents, got {p}")));
    }
    match kind {
        TopologyKind::Complete => {
            let edges = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect();
            Topology::new(p, edges)
        }
        TopologyKind::Ring => {
            let mut edges: Vec<_> = (0..p - 1).map(|i| (i, i + 1)).collect();
            if p > 2 {
                edges.push((p - 1, 0));
            }
            Topology::new(p, edges)
        }
        TopologyKind::Star => Topology::new(p, (1..p).map(|j| (0, j)).collect()),
        TopologyKind::ErdosRenyi { prob } => {
            if !(prob > 0.0 && prob <= 1.0) {
                return Err(Error::InvalidTopology(format!("edge probability {prob} outside (0, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..ER_MAX_ATTEMPTS {
                let mut edges = Vec::new();
                for i in 0..p {
                    for j in i + 1..p {
                        if rng.random::<f64>() < prob {
                            edges.push((i, j));
                        }
                    }
                }
                let t = Topology::unchecked(p, edges)?;
                if t.is_connected() {
                    return Ok(t);
                }
            }
            Err(Error::DisconnectedTopology { attempts: ER_MAX_ATTEMPTS })
        }
    }
}

/// Topology with symmetric nonnegative edge weights `a_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    topology: Topology,
    weights: DenseMatrix,
    uniform: bool,
}

impl WeightedGraph {
    /// Custom weights; the support must match the edge set exactly.
    pub fn from_weights(topology: Topology, weights: DenseMatrix) -> Result<Self> {
        let p = topology.p();
        if weights.rows() != p || weights.cols() != p {
            return Err(Error::InvalidWeights(format!("expected {p}x{p} weights")));
        }
        if !weights.is_symmetric(0.0) {
            return Err(Error::InvalidWeights("weights are not symmetric".into()));
        }
        for i in 0..p {
            for j in 0..p {
                let a = weights.get(i, j);
                let on_edge = i != j && topology.has_edge(i, j);
                if !(a >= 0.0) || (a > 0.0) != on_edge {
                    return Err(Error::InvalidWeights(format!("weight a[{i}][{j}] = {a} does not match the edge set")));
                }
            }
        }
        Ok(Self { topology, weights, uniform: false })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.weights
    }

    pub fn p(&self) -> usize {
        self.topology.p()
    }

    /// True when built by [`adjacency_uniform`].
    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// `(j, a_ij)` for each neighbor `j` of `i`, ascending in `j`.
    pub fn weighted_neighbors(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.p())
            .filter(|&j| j != i && self.weights.get(i, j) > 0.0)
            .map(|j| (j, self.weights.get(i, j)))
            .collect()
    }
}

/// `a_ij = 1/(2p)` on every edge. With this choice `‖ℒ‖ ≤ 1`.
pub fn adjacency_uniform(t: &Topology) -> WeightedGraph {
    let p = t.p();
    let a = 1.0 / (2.0 * p as f64);
    let mut weights = DenseMatrix::zeros(p, p);
    for &(i, j) in t.edges() {
        weights.set(i, j, a);
        weights.set(j, i, a);
    }
    WeightedGraph { topology: t.clone(), weights, uniform: true }
}

/// Graph Laplacian with a bound `ρ ≥ ‖ℒ‖²` (so `‖AᵀA‖ ≤ ρ`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplacianMatrix {
    entries: DenseMatrix,
    norm_bound: f64,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl LaplacianMatrix {
    /// Wraps an explicit symmetric Laplacian. The bound uses Gershgorin's
    /// disc theorem.
    pub fn from_entries(entries: DenseMatrix) -> Result<Self> {
        if !entries.is_symmetric(1e-15) {
            return Err(Error::InvalidWeights("laplacian is not symmetric".into()));
        }
        let p = entries.rows();
        let neighbors = (0..p)
            .map(|i| {
                (0..p)
                    .filter(|&j| j != i && entries.get(i, j) != 0.0)
                    .map(|j| (j, -entries.get(i, j)))
                    .collect()
            })
            .collect();
        let max_diag = (0..p).map(|i| entries.get(i, i)).fold(0.0, f64::max);
        let bound = 2.0 * max_diag;
        Ok(Self { entries, norm_bound: bound * bound, neighbors })
    }

    pub fn entries(&self) -> &DenseMatrix {
        &self.entries
    }

    /// `ρ` with `‖ℒ‖ ≤ √ρ`.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn p(&self) -> usize {
        self.entries.rows()
    }

    pub(crate) fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        symmetric_eigenvalues(&self.entries)
    }
}

/// `l_ii = Σ_j a_ij`, `l_ij = −a_ij`.
pub fn laplacian(g: &WeightedGraph) -> LaplacianMatrix {
    let p = g.p();
    let w = g.weights();
    let mut entries = DenseMatrix::zeros(p, p);
    for i in 0..p {
        let mut degree = 0.0;
        for j in 0..p {
            if j != i {
                entries.set(i, j, -w.get(i, j));
                degree += w.get(i, j);
            }
        }
        entries.set(i, i, degree);
    }
    let mut l = LaplacianMatrix::from_entries(entries).expect("weights are symmetric");
    if g.is_uniform() {
        l.norm_bound = 1.0;
    }
    l
}

/// Second-smallest Laplacian eigenvalue; positive iff the graph is connected.
pub fn algebraic_connectivity(l: &LaplacianMatrix) -> f64 {
    let ev = l.eigenvalues();
    ev.get(1).copied().unwrap_or(0.0)
}

/// `(ℒ ⊗ I_n) x` without forming the Kronecker product. Symmetric, so it
/// also serves as `Aᵀ`.
pub fn apply_a(l: &LaplacianMatrix, x: &BlockVector) -> Result<BlockVector> {
    crate::error::check_len(l.p(), x.num_blocks())?;
    let mut out = BlockVector::zeros(l.p(), x.block_len());
    apply_a_into(l, x, &mut out);
    Ok(out)
}

pub(crate) fn apply_a_into(l: &LaplacianMatrix, x: &BlockVector, out: &mut BlockVector) {
    for i in 0..l.p() {
        let peers = l.neighbors(i).iter().map(|&(j, a)| (a, x.block(j)));
        weighted_disagreement(x.block(i), peers, out.block_mut(i));
    }
}
