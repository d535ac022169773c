//! Agent objectives, the stacked consensus problem, and the random
//! least-squares workload.
//!
//! A [`ConsensusProblem`] is `min Σ f_i(x_i)` over `x_i ∈ X_i` subject to
//! `A x = b` with `A = ℒ ⊗ I_n`. Consensus is the case `b = 0`.

use alloc::vec;
use alloc::vec::Vec;
use alloc::format;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::graph::{adjacency_uniform, apply_a_into, build_topology, laplacian, LaplacianMatrix, TopologyKind, WeightedGraph};
use crate::linalg::{dist_inf, gram_spectral_norm, least_squares, BlockVector, DenseMatrix};
use crate::sets::ConvexSet;

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 10_000;

/// Differentiable convex objective of one agent.
pub trait Objective {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `∇f(x)` into `out`.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    /// Global Lipschitz constant of the gradient, when known.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }
}

/// `f(x) = ½‖Bx − b‖²`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticObjective {
    matrix: DenseMatrix,
    rhs: Vec<f64>,
}

impl QuadraticObjective {
    pub fn new(matrix: DenseMatrix, rhs: Vec<f64>) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::InvalidDimensions("objective matrix must be nonempty".into()));
        }
        check_len(matrix.rows(), rhs.len())?;
        Ok(Self { matrix, rhs })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn objective_value(&self, x: &[f64]) -> Result<f64> {
        check_len(self.matrix.cols(), x.len())?;
        Ok(self.value(x))
    }

    /// `Bᵀ(Bx − b)`
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.matrix.cols(), x.len())?;
        let mut out = vec![0.0; x.len()];
        self.gradient_into(x, &mut out);
        Ok(out)
    }

    /// `‖BᵀB‖` by power iteration.
    pub fn lipschitz(&self) -> f64 {
        gram_spectral_norm(&self.matrix, POWER_TOL, POWER_MAX_ITERS)
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.matrix.mul_vec(x);
        r.iter_mut().zip(&self.rhs).for_each(|(a, b)| *a -= b);
        r
    }
}

impl Objective for QuadraticObjective {
    fn dim(&self) -> usize {
        self.matrix.cols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.residual(x).iter().map(|r| r * r).sum::<f64>()
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.matrix.tr_mul_vec_into(&self.residual(x), out);
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(self.lipschitz())
    }
}

/// Objective and constraint set held by one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProblem<O = QuadraticObjective> {
    pub id: usize,
    pub objective: O,
    pub set: ConvexSet,
}

impl<O: Objective> AgentProblem<O> {
    pub fn new(id: usize, objective: O, set: ConvexSet) -> Result<Self> {
        check_len(objective.dim(), set.dim())?;
        Ok(Self { id, objective, set })
    }
}

/// Network problem over `p` agents sharing one decision dimension `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusProblem<O = QuadraticObjective> {
    agents: Vec<AgentProblem<O>>,
    graph: WeightedGraph,
    laplacian: LaplacianMatrix,
    constraint_rhs: Option<BlockVector>,
}

impl<O: Objective> ConsensusProblem<O> {
    pub fn new(agents: Vec<AgentProblem<O>>, graph: WeightedGraph) -> Result<Self> {
        check_len(graph.p(), agents.len())?;
        let n = agents[0].objective.dim();
        for (i, a) in agents.iter().enumerate() {
            check_len(n, a.objective.dim())?;
            if a.id != i {
                return Err(Error::InvalidDimensions(format!("agent at position {i} has id {}", a.id)));
            }
        }
        let laplacian = laplacian(&graph);
        Ok(Self { agents, graph, laplacian, constraint_rhs: None })
    }

    /// Replaces the consensus constraint `Ax = 0` by `Ax = b`.
    pub fn with_constraint_rhs(mut self, b: BlockVector) -> Result<Self> {
        b.check_shape(self.p(), self.dim())?;
        self.constraint_rhs = Some(b);
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.agents.len()
    }

    pub fn dim(&self) -> usize {
        self.agents[0].objective.dim()
    }

    pub fn agents(&self) -> &[AgentProblem<O>] {
        &self.agents
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn laplacian(&self) -> &LaplacianMatrix {
        &self.laplacian
    }

    pub fn constraint_rhs(&self) -> Option<&BlockVector> {
        self.constraint_rhs.as_ref()
    }

    pub(crate) fn check_stacked(&self, v: &BlockVector) -> Result<()> {
        v.check_shape(self.p(), self.dim())
    }

    /// `Σ f_i(x_i)`
    pub fn objective(&self, x: &BlockVector) -> Result<f64> {
        self.check_stacked(x)?;
        Ok(self.agents.iter().zip(x.blocks()).map(|(a, xi)| a.objective.value(xi)).sum())
    }

    /// Stacked gradient `(g_1(x_1), …, g_p(x_p))`.
    pub fn gradient(&self, x: &BlockVector) -> Result<BlockVector> {
        self.check_stacked(x)?;
        let mut out = BlockVector::zeros(self.p(), self.dim());
        self.gradient_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, x: &BlockVector, out: &mut BlockVector) {
        for (i, a) in self.agents.iter().enumerate() {
            a.objective.gradient_into(x.block(i), out.block_mut(i));
        }
    }

    /// `Ax − b`
    pub(crate) fn constraint_residual_into(&self, x: &BlockVector, out: &mut BlockVector) {
        apply_a_into(&self.laplacian, x, out);
        if let Some(b) = &self.constraint_rhs {
            out.as_mut_slice().iter_mut().zip(b.as_slice()).for_each(|(o, bi)| *o -= bi);
        }
    }

    /// Largest `‖x_i − x_j‖∞` over the edges of the network.
    pub fn consensus_gap(&self, x: &BlockVector) -> f64 {
        self.graph
            .topology()
            .edges()
            .iter()
            .map(|&(i, j)| dist_inf(x.block(i), x.block(j)))
            .fold(0.0, f64::max)
    }

    /// The monotone operator `F(x, λ) = (g(x) − Aᵀλ, Ax − b)`.
    pub fn vi_operator(&self, x: &BlockVector, lambda: &BlockVector) -> Result<(BlockVector, BlockVector)> {
        self.check_stacked(x)?;
        self.check_stacked(lambda)?;
        let mut primal = self.gradient(x)?;
        let mut coupling = BlockVector::zeros(self.p(), self.dim());
        apply_a_into(&self.laplacian, lambda, &mut coupling);
        primal.as_mut_slice().iter_mut().zip(coupling.as_slice()).for_each(|(g, c)| *g -= c);
        let mut dual = BlockVector::zeros(self.p(), self.dim());
        self.constraint_residual_into(x, &mut dual);
        Ok((primal, dual))
    }
}

/// `consensus_objective` as a free function.
pub fn consensus_objective<O: Objective>(cp: &ConsensusProblem<O>, x: &BlockVector) -> Result<f64> {
    cp.objective(x)
}

/// Least-squares data `(B, b)` split into contiguous row blocks, one per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsqInstance {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    /// Half-open row ranges `[start, end)`.
    pub partition: Vec<(usize, usize)>,
    pub seed: Option<u64>,
}

/// Contiguous near-equal split of `m` rows: the first `m mod p` blocks get
/// `⌈m/p⌉` rows, the rest `⌊m/p⌋`.
pub fn row_partition(m: usize, p: usize) -> Vec<(usize, usize)> {
    let (base, extra) = (m / p, m % p);
    let mut start = 0;
    (0..p)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let range = (start, start + len);
            start += len;
            range
        })
        .collect()
}

impl LsqInstance {
    pub fn new(matrix: DenseMatrix, rhs: Vec<f64>, p: usize, seed: Option<u64>) -> Result<Self> {
        check_len(matrix.rows(), rhs.len())?;
        let (m, n) = (matrix.rows(), matrix.cols());
        if n == 0 || m < n || p < 2 || m < p {
            return Err(Error::InvalidDimensions(format!("need m >= n >= 1, p >= 2, m >= p; got m={m}, n={n}, p={p}")));
        }
        Ok(Self { matrix, rhs, partition: row_partition(m, p), seed })
    }

    pub fn m(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n(&self) -> usize {
        self.matrix.cols()
    }

    pub fn p(&self) -> usize {
        self.partition.len()
    }

    /// `½‖B_i x − b_i‖²` for every block.
    pub fn agent_objectives(&self) -> Vec<QuadraticObjective> {
        self.partition
            .iter()
            .map(|&(s, e)| {
                QuadraticObjective::new(self.matrix.row_block(s, e), self.rhs[s..e].to_vec())
                    .expect("partition blocks are nonempty")
            })
            .collect()
    }

    /// Consensus problem on `graph` with every agent constrained to `set`.
    pub fn consensus_problem(&self, graph: WeightedGraph, set: &ConvexSet) -> Result<ConsensusProblem> {
        let set = if set.dim() == self.n() { set.clone() } else { set.with_dim(self.n())? };
        let agents = self
            .agent_objectives()
            .into_iter()
            .enumerate()
            .map(|(i, o)| AgentProblem::new(i, o, set.clone()))
            .collect::<Result<Vec<_>>>()?;
        ConsensusProblem::new(agents, graph)
    }
}

/// Draws `B` (row-major) and then `b` i.i.d. standard normal from a
/// ChaCha8 stream seeded with `seed`, and splits them over `p` agents.
pub fn generate_lsq_instance(m: usize, n: usize, p: usize, seed: u64) -> Result<LsqInstance> {
    if n == 0 || m < n || p < 2 || m < p {
        return Err(Error::InvalidDimensions(format!("need m >= n >= 1, p >= 2, m >= p; got m={m}, n={n}, p={p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let rhs: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
    LsqInstance::new(DenseMatrix::from_row_major(m, n, data)?, rhs, p, Some(seed))
}

/// Random instance plus its consensus problem on a complete graph with
/// uniform weights and unconstrained agents.
pub fn generate_lsq(m: usize, n: usize, p: usize, seed: u64) -> Result<(LsqInstance, ConsensusProblem)> {
    let inst = generate_lsq_instance(m, n, p, seed)?;
    let graph = adjacency_uniform(&build_topology(TopologyKind::Complete, p, seed)?);
    let cp = inst.consensus_problem(graph, &ConvexSet::whole_space(n))?;
    Ok((inst, cp))
}

/// Reference minimizer of `½‖Bx − b‖²` from a QR factorization of `B`.
pub fn oracle_solve(inst: &LsqInstance) -> Result<Vec<f64>> {
    least_squares(&inst.matrix, &inst.rhs)
}

/// The two-agent scalar problem `f₁ = ½(x−1)²`, `f₂ = ½(x−3)²`.
pub fn toy_instance() -> LsqInstance {
    let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).expect("static shape");
    LsqInstance::new(b, vec![1.0, 3.0], 2, None).expect("static shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{norm_inf, symmetric_eigenvalues};
    use approx::assert_relative_eq;

    fn toy_problem() -> ConsensusProblem {
        let inst = toy_instance();
        let g = adjacency_uniform(&build_topology(TopologyKind::Complete, 2, 0).unwrap());
        inst.consensus_problem(g, &ConvexSet::whole_space(1)).unwrap()
    }

    #[test]
    fn objective_and_gradient_hand_values() {
        let id = QuadraticObjective::new(DenseMatrix::identity(2), vec![0.0, 0.0]).unwrap();
        assert_eq!(id.objective_value(&[3.0, 4.0]).unwrap(), 12.5);
        assert_eq!(id.gradient(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);

        let two = QuadraticObjective::new(DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap(), vec![1.0, 3.0]).unwrap();
        assert_eq!(two.objective_value(&[2.0]).unwrap(), 1.0);
        assert_eq!(two.gradient(&[2.0]).unwrap(), vec![0.0]);
        assert!(matches!(two.gradient(&[1.0, 2.0]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn zero_residual_has_zero_value() {
        let b = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, -1.0], vec![3.0, 0.0]]).unwrap();
        let x = [0.3, -0.7];
        let o = QuadraticObjective::new(b.clone(), b.mul_vec(&x)).unwrap();
        assert_eq!(o.objective_value(&x).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_bounds() {
        assert_relative_eq!(
            QuadraticObjective::new(DenseMatrix::identity(3), vec![0.0; 3]).unwrap().lipschitz(),
            1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            QuadraticObjective::new(DenseMatrix::diagonal(&[1.0, 2.0]), vec![0.0; 2]).unwrap().lipschitz(),
            4.0,
            max_relative = 1e-8
        );
        let inst = generate_lsq_instance(8, 4, 2, 11).unwrap();
        let o = QuadraticObjective::new(inst.matrix.clone(), inst.rhs.clone()).unwrap();
        let mut gram = DenseMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                gram.set(i, j, (0..8).map(|k| inst.matrix.get(k, i) * inst.matrix.get(k, j)).sum());
            }
        }
        let top = *symmetric_eigenvalues(&gram).last().unwrap();
        assert_relative_eq!(o.lipschitz(), top, max_relative = 1e-6);
    }

    #[test]
    fn partition_rules() {
        assert_eq!(row_partition(10, 2), vec![(0, 5), (5, 10)]);
        assert_eq!(row_partition(11, 2), vec![(0, 6), (6, 11)]);
        assert_eq!(row_partition(7, 3), vec![(0, 3), (3, 5), (5, 7)]);
    }

    #[test]
    fn generation_is_deterministic_and_validated() {
        let (a, _) = generate_lsq(10, 3, 2, 42).unwrap();
        let (b, _) = generate_lsq(10, 3, 2, 42).unwrap();
        assert_eq!(a, b);
        let (c, _) = generate_lsq(10, 3, 2, 43).unwrap();
        assert_ne!(a.matrix, c.matrix);
        assert!(matches!(generate_lsq(2, 3, 2, 0), Err(Error::InvalidDimensions(_))));
        assert!(matches!(generate_lsq(10, 3, 1, 0), Err(Error::InvalidDimensions(_))));
        assert!(matches!(generate_lsq(3, 1, 4, 0), Err(Error::InvalidDimensions(_))));
    }

    #[test]
    fn oracle_solutions() {
        assert_eq!(oracle_solve(&toy_instance()).unwrap(), vec![2.0]);

        let b = vec![0.5, -1.0, 2.0];
        let inst = LsqInstance::new(DenseMatrix::identity(3), b.clone(), 2, None).unwrap();
        let x = oracle_solve(&inst).unwrap();
        for (u, v) in x.iter().zip(&b) {
            assert_relative_eq!(u, v, epsilon = 1e-15);
        }

        let inst = generate_lsq_instance(50, 5, 2, 3).unwrap();
        let x = oracle_solve(&inst).unwrap();
        let o = QuadraticObjective::new(inst.matrix.clone(), inst.rhs.clone()).unwrap();
        let atb = inst.matrix.tr_mul_vec(&inst.rhs);
        assert!(norm_inf(&o.gradient(&x).unwrap()) <= 1e-8 * norm_inf(&atb));
    }

    #[test]
    fn toy_consensus_objective() {
        let cp = toy_problem();
        let x = BlockVector::from_blocks(&[vec![2.0], vec![2.0]]).unwrap();
        assert_eq!(cp.objective(&x).unwrap(), 1.0);
        let y = BlockVector::from_blocks(&[vec![1.0], vec![3.0]]).unwrap();
        assert_eq!(consensus_objective(&cp, &y).unwrap(), 0.0);
    }

    #[test]
    fn reassembled_blocks_reproduce_data() {
        let inst = generate_lsq_instance(23, 4, 5, 8).unwrap();
        let objs = inst.agent_objectives();
        let sizes: usize = objs.iter().map(|o| o.matrix().rows()).sum();
        assert_eq!(sizes, 23);
        let rows: Vec<f64> = objs.iter().flat_map(|o| o.matrix().as_slice().to_vec()).collect();
        let rhs: Vec<f64> = objs.iter().flat_map(|o| o.rhs().to_vec()).collect();
        assert_eq!(rows, inst.matrix.as_slice());
        assert_eq!(rhs, inst.rhs);
    }
}
