//! Per-agent update laws for both schemes.
//!
//! Every agent `(i, j)` runs the same local law on its own data `A_ij`,
//! `b_ij`, its states `x_ij`, `z_ij` and two kinds of peer messages:
//!
//! ```text
//! r_ij  = A_ij x_ij − b_ij − Σ_{coordination peers} (z_ij − w)
//! ẋ_ij  = −A_ijᵀ r_ij − Σ_{consensus peers} (x_ij − y)
//! ż_ij  = r_ij
//! ```
//!
//! In the row scheme the coordination peers are agent-neighbors' `z_ik`
//! (agent layer) and the consensus peers are the slices `E_ij 𝒙_k` of
//! neighbor clusters' stacked solutions (cluster layer). The column scheme
//! swaps the layers: consensus peers are agent-neighbors' `x_ik`, coordination
//! peers are slices `E_ij 𝒛_k` of neighbor clusters' stacked coordination
//! states. The self term of each neighborhood is zero and is skipped.
//!
//! Evaluation reads a frozen snapshot; each agent's derivative depends only
//! on what the two layers deliver to it, so the result does not depend on the
//! order in which agents are visited.

use alloc::vec::Vec;

use crate::graph::Topology;
use crate::linalg::{norm2, DenseMatrix, DenseVector};
use crate::partition::{ColumnPartition, Partition, RowPartition, Scheme};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("state shape mismatch at {what}: expected {expected}, found {found}")]
    ShapeMismatch { what: StateSlot, expected: usize, found: usize },
}

/// Where a shape check failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateSlot {
    Clusters,
    Agents { cluster: usize },
    X { cluster: usize, agent: usize },
    Z { cluster: usize, agent: usize },
}

impl core::fmt::Display for StateSlot {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            StateSlot::Clusters => write!(f, "cluster count"),
            StateSlot::Agents { cluster } => write!(f, "agent count of cluster {cluster}"),
            StateSlot::X { cluster, agent } => write!(f, "x[{cluster}][{agent}]"),
            StateSlot::Z { cluster, agent } => write!(f, "z[{cluster}][{agent}]"),
        }
    }
}

fn mismatch(what: StateSlot, expected: usize, found: usize) -> DynamicsError {
    DynamicsError::ShapeMismatch { what, expected, found }
}

/// All agent states at one instant, indexed `[cluster][agent]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub x: Vec<Vec<DenseVector>>,
    pub z: Vec<Vec<DenseVector>>,
    pub time: f64,
}

impl NetworkState {
    pub fn zeros(part: &Partition) -> Self {
        Self::from_fn(part, |_| 0.0)
    }

    /// Fills every entry (x first, then z, in stacked order) from `f`.
    pub fn from_fn(part: &Partition, mut f: impl FnMut(usize) -> f64) -> Self {
        let mut k = 0;
        let mut next = |dim: usize| {
            
            DenseVector::from_fn(dim, |_| {
                let out = f(k);
                k += 1;
                out
            })
        };
        let c = part.cluster_count();
        let x = (0..c).map(|i| (0..part.agent_count(i)).map(|j| next(part.x_dim(i, j))).collect()).collect();
        let z = (0..c).map(|i| (0..part.agent_count(i)).map(|j| next(part.z_dim(i, j))).collect()).collect();
        Self { x, z, time: 0.0 }
    }

    pub fn check_shape(&self, part: &Partition) -> Result<(), DynamicsError> {
        let c = part.cluster_count();
        for field in [&self.x, &self.z] {
            if field.len() != c {
                return Err(mismatch(StateSlot::Clusters, c, field.len()));
            }
        }
        for i in 0..c {
            let ci = part.agent_count(i);
            for field in [&self.x, &self.z] {
                if field[i].len() != ci {
                    return Err(mismatch(StateSlot::Agents { cluster: i }, ci, field[i].len()));
                }
            }
            for j in 0..ci {
                if self.x[i][j].dim() != part.x_dim(i, j) {
                    return Err(mismatch(StateSlot::X { cluster: i, agent: j }, part.x_dim(i, j), self.x[i][j].dim()));
                }
                if self.z[i][j].dim() != part.z_dim(i, j) {
                    return Err(mismatch(StateSlot::Z { cluster: i, agent: j }, part.z_dim(i, j), self.z[i][j].dim()));
                }
            }
        }
        Ok(())
    }

    /// `col{x_ij}` in cluster-major, agent-minor order.
    pub fn stacked_x(&self) -> DenseVector {
        DenseVector::stack(self.x.iter().flatten())
    }

    /// `col{z_ij}` in cluster-major, agent-minor order.
    pub fn stacked_z(&self) -> DenseVector {
        DenseVector::stack(self.z.iter().flatten())
    }

    /// `col{x, z}`, the ordering of the compact form.
    pub fn stacked(&self) -> DenseVector {
        DenseVector::stack([&self.stacked_x(), &self.stacked_z()])
    }

    /// Inverse of [`stacked`](Self::stacked).
    pub fn from_stacked(part: &Partition, v: &DenseVector) -> Result<Self, DynamicsError> {
        let total = state_dim(part);
        if v.dim() != total {
            return Err(mismatch(StateSlot::Clusters, total, v.dim()));
        }
        let s = v.as_slice();
        Ok(Self::from_fn(part, |k| s[k]))
    }

    /// `self + h · d`, keeping `self.time`.
    pub fn offset_by(&self, h: f64, d: &StateDerivative) -> Self {
        let step = |s: &Vec<Vec<DenseVector>>, ds: &Vec<Vec<DenseVector>>| {
            s.iter()
                .zip(ds)
                .map(|(sc, dc)| {
                    sc.iter()
                        .zip(dc)
                        .map(|(v, dv)| {
                            let mut out = v.clone();
                            out.axpy(h, dv);
                            out
                        })
                        .collect()
                })
                .collect()
        };
        Self { x: step(&self.x, &d.dx), z: step(&self.z, &d.dz), time: self.time }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.z).flatten().all(DenseVector::is_finite)
    }
}

/// Total length of `col{x, z}` for a partition.
pub fn state_dim(part: &Partition) -> usize {
    (0..part.cluster_count())
        .map(|i| (0..part.agent_count(i)).map(|j| part.x_dim(i, j) + part.z_dim(i, j)).sum::<usize>())
        .sum()
}

/// Time derivative of a [`NetworkState`], same shape.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub dx: Vec<Vec<DenseVector>>,
    pub dz: Vec<Vec<DenseVector>>,
}

impl StateDerivative {
    pub fn norm_inf(&self) -> f64 {
        self.dx.iter().chain(&self.dz).flatten().map(DenseVector::norm_inf).fold(0.0, f64::max)
    }

    pub fn stacked(&self) -> DenseVector {
        DenseVector::stack(self.dx.iter().flatten().chain(self.dz.iter().flatten()))
    }

    /// All-zero derivative shaped like `s`.
    pub fn zeros_like(s: &NetworkState) -> Self {
        let zeros = |v: &Vec<Vec<DenseVector>>| -> Vec<Vec<DenseVector>> {
            v.iter().map(|cl| cl.iter().map(|x| DenseVector::zeros(x.dim())).collect()).collect()
        };
        Self { dx: zeros(&s.x), dz: zeros(&s.z) }
    }
}

/// Everything agent `(i, j)` can see during one evaluation.
#[derive(Debug, Clone)]
pub struct AgentView<'a> {
    pub block: &'a crate::linalg::DenseMatrix,
    pub offset: &'a DenseVector,
    pub x: &'a DenseVector,
    pub z: &'a DenseVector,
    /// Peer values `w` entering the conservation term `Σ (z_ij − w)`.
    pub coordination_peers: &'a [&'a [f64]],
    /// Peer values `y` entering the consensus term `Σ (x_ij − y)`.
    pub consensus_peers: &'a [&'a [f64]],
}

/// The local law shared by both schemes; returns `(ẋ_ij, ż_ij)`.
pub fn agent_flow(view: &AgentView<'_>) -> (DenseVector, DenseVector) {
    let mut dx = alloc::vec![0.0; view.block.cols()];
    let mut dz = alloc::vec![0.0; view.block.rows()];
    agent_flow_into(view, &mut dx, &mut dz);
    (DenseVector::from_vec(dx), DenseVector::from_vec(dz))
}

/// [`agent_flow`] writing into caller-owned buffers.
pub fn agent_flow_into(view: &AgentView<'_>, dx: &mut [f64], dz: &mut [f64]) {
    let a = view.block;
    assert_eq!((dx.len(), dz.len()), (a.cols(), a.rows()), "agent_flow: buffer shape");
    // ż = A x − b − Σ (z − w)
    for (r, out) in dz.iter_mut().enumerate() {
        let ax: f64 = a.row(r).iter().zip(view.x.iter()).map(|(p, q)| p * q).sum();
        *out = ax - view.offset[r];
    }
    for w in view.coordination_peers {
        for ((ri, zi), wi) in dz.iter_mut().zip(view.z.iter()).zip(w.iter()) {
            *ri -= zi - wi;
        }
    }
    // ẋ = −Aᵀ ż − Σ (x − y)
    dx.fill(0.0);
    for (r, &vr) in dz.iter().enumerate() {
        for (o, p) in dx.iter_mut().zip(a.row(r)) {
            *o += p * vr;
        }
    }
    for v in dx.iter_mut() {
        *v = -*v;
    }
    for y in view.consensus_peers {
        for ((d, xi), yi) in dx.iter_mut().zip(view.x.iter()).zip(y.iter()) {
            *d -= xi - yi;
        }
    }
}

fn check_topology(part: &Partition, topo: &Topology) -> Result<(), DynamicsError> {
    if topo.cluster_count() != part.cluster_count() {
        return Err(mismatch(StateSlot::Clusters, part.cluster_count(), topo.cluster_count()));
    }
    for i in 0..part.cluster_count() {
        if topo.agent_count(i) != part.agent_count(i) {
            return Err(mismatch(StateSlot::Agents { cluster: i }, part.agent_count(i), topo.agent_count(i)));
        }
    }
    Ok(())
}

/// Cluster-layer relay: each cluster stacks its agents' vectors once per
/// evaluation so neighbor clusters can slice out `E_ij · stacked_k`.
fn relay(per_agent: &[Vec<DenseVector>]) -> Vec<DenseVector> {
    per_agent.iter().map(DenseVector::stack).collect()
}

/// Row-scheme derivative of every agent.
pub fn agent_update_row(
    part: &RowPartition,
    topo: &Topology,
    s: &NetworkState,
) -> Result<StateDerivative, DynamicsError> {
    let wrapped = Partition::Row(part.clone());
    check_topology(&wrapped, topo)?;
    s.check_shape(&wrapped)?;
    let mut out = StateDerivative::zeros_like(s);
    row_derivative_into(part, topo, s, &mut out);
    Ok(out)
}

fn row_derivative_into(part: &RowPartition, topo: &Topology, s: &NetworkState, out: &mut StateDerivative) {
    let stacked_x = relay(&s.x);
    let mut coordination: Vec<&[f64]> = Vec::new();
    let mut consensus: Vec<&[f64]> = Vec::new();
    for i in 0..part.cluster_count() {
        let agents = topo.agent_graph(i);
        let clusters = topo.cluster_graph().neighbors(i);
        for j in 0..part.agent_count(i) {
            let band = part.col_range(i, j);
            coordination.clear();
            coordination.extend(agents.neighbors(j).iter().map(|&k| s.z[i][k].as_slice()));
            consensus.clear();
            consensus.extend(clusters.iter().map(|&k| &stacked_x[k].as_slice()[band.clone()]));
            let view = AgentView {
                block: part.block(i, j),
                offset: part.offset(i, j),
                x: &s.x[i][j],
                z: &s.z[i][j],
                coordination_peers: &coordination,
                consensus_peers: &consensus,
            };
            agent_flow_into(&view, out.dx[i][j].as_mut_slice(), out.dz[i][j].as_mut_slice());
        }
    }
}

/// Column-scheme derivative of every agent.
pub fn agent_update_col(
    part: &ColumnPartition,
    topo: &Topology,
    s: &NetworkState,
) -> Result<StateDerivative, DynamicsError> {
    let wrapped = Partition::Column(part.clone());
    check_topology(&wrapped, topo)?;
    s.check_shape(&wrapped)?;
    let mut out = StateDerivative::zeros_like(s);
    col_derivative_into(part, topo, s, &mut out);
    Ok(out)
}

fn col_derivative_into(part: &ColumnPartition, topo: &Topology, s: &NetworkState, out: &mut StateDerivative) {
    let stacked_z = relay(&s.z);
    let mut coordination: Vec<&[f64]> = Vec::new();
    let mut consensus: Vec<&[f64]> = Vec::new();
    for i in 0..part.cluster_count() {
        let agents = topo.agent_graph(i);
        let clusters = topo.cluster_graph().neighbors(i);
        for j in 0..part.agent_count(i) {
            let band = part.row_range(i, j);
            coordination.clear();
            coordination.extend(clusters.iter().map(|&k| &stacked_z[k].as_slice()[band.clone()]));
            consensus.clear();
            consensus.extend(agents.neighbors(j).iter().map(|&k| s.x[i][k].as_slice()));
            let view = AgentView {
                block: part.block(i, j),
                offset: part.offset(i, j),
                x: &s.x[i][j],
                z: &s.z[i][j],
                coordination_peers: &coordination,
                consensus_peers: &consensus,
            };
            agent_flow_into(&view, out.dx[i][j].as_mut_slice(), out.dz[i][j].as_mut_slice());
        }
    }
}

/// Dispatches to the scheme's update law.
pub fn agent_update(part: &Partition, topo: &Topology, s: &NetworkState) -> Result<StateDerivative, DynamicsError> {
    match part {
        Partition::Row(p) => agent_update_row(p, topo, s),
        Partition::Column(p) => agent_update_col(p, topo, s),
    }
}

/// Writes every agent's derivative into `out`; shapes must already match.
pub(crate) fn derivative_into(part: &Partition, topo: &Topology, s: &NetworkState, out: &mut StateDerivative) {
    match part {
        Partition::Row(p) => row_derivative_into(p, topo, s, out),
        Partition::Column(p) => col_derivative_into(p, topo, s, out),
    }
}

/// Distance of a state from the scheme's two limit conditions.
///
/// Row scheme: `conservation[i] = ‖Σ_j (A_ij x_ij − b_ij)‖` per cluster and a
/// single `consensus = max_{i,k} ‖𝒙_i − 𝒙_k‖`.
/// Column scheme: a single `conservation = ‖Σ_i (Ā_i 𝒙_i − b_i)‖` and
/// `consensus[i] = max_{j,l} ‖x_ij − x_il‖` per cluster.
/// `overall = ‖A x̄ − b‖` for the reassembled solution (see [`reassemble`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub scheme: Scheme,
    pub conservation: Vec<f64>,
    pub consensus: Vec<f64>,
    pub overall: f64,
}

impl ResidualReport {
    pub fn max_conservation(&self) -> f64 {
        self.conservation.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_consensus(&self) -> f64 {
        self.consensus.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_all(&self) -> f64 {
        self.max_conservation().max(self.max_consensus()).max(self.overall)
    }

    pub fn is_finite(&self) -> bool {
        self.overall.is_finite()
            && self.conservation.iter().chain(&self.consensus).all(|v| v.is_finite())
    }
}

/// Candidate solution of `Ax = b` read off a state: the mean of the clusters'
/// stacked `𝒙_i` (row scheme) or the stack of per-cluster agent means
/// (column scheme).
pub fn reassemble(part: &Partition, s: &NetworkState) -> DenseVector {
    match part {
        Partition::Row(_) => {
            let c = s.x.len();
            let mut acc = DenseVector::zeros(part.n());
            for cl in &s.x {
                acc.axpy(1.0 / c as f64, &DenseVector::stack(cl));
            }
            acc
        }
        Partition::Column(_) => {
            let means: Vec<DenseVector> = s
                .x
                .iter()
                .map(|cl| {
                    let mut acc = DenseVector::zeros(cl[0].dim());
                    for v in cl {
                        acc.axpy(1.0 / cl.len() as f64, v);
                    }
                    acc
                })
                .collect();
            DenseVector::stack(&means)
        }
    }
}

fn max_pairwise(vs: &[DenseVector]) -> f64 {
    let mut worst = 0.0f64;
    for a in 0..vs.len() {
        for b in (a + 1)..vs.len() {
            worst = worst.max(vs[a].sub(&vs[b]).norm2());
        }
    }
    worst
}

pub fn residuals(part: &Partition, topo: &Topology, s: &NetworkState) -> Result<ResidualReport, DynamicsError> {
    check_topology(part, topo)?;
    s.check_shape(part)?;
    Ok(residuals_unchecked(part, s))
}

pub(crate) fn residuals_unchecked(part: &Partition, s: &NetworkState) -> ResidualReport {
    residuals_with(part, s, &part.assemble_a(), &part.assemble_b())
}

/// [`residuals`] with `A` and `b` already assembled.
pub(crate) fn residuals_with(part: &Partition, s: &NetworkState, a: &DenseMatrix, b: &DenseVector) -> ResidualReport {
    let overall = a.matvec(&reassemble(part, s)).sub(b).norm2();
    match part {
        Partition::Row(p) => {
            let conservation = (0..p.cluster_count())
                .map(|i| {
                    let mut acc = DenseVector::zeros(p.row_range(i).len());
                    for j in 0..p.agent_count(i) {
                        acc = acc.add(&p.block(i, j).matvec(&s.x[i][j]).sub(p.offset(i, j)));
                    }
                    acc.norm2()
                })
                .collect();
            let stacked: Vec<DenseVector> = s.x.iter().map(DenseVector::stack).collect();
            ResidualReport {
                scheme: Scheme::Row,
                conservation,
                consensus: alloc::vec![max_pairwise(&stacked)],
                overall,
            }
        }
        Partition::Column(p) => {
            let mut acc = alloc::vec![0.0; p.m()];
            for i in 0..p.cluster_count() {
                for j in 0..p.agent_count(i) {
                    let r = p.block(i, j).matvec(&s.x[i][j]).sub(p.offset(i, j));
                    for (dst, v) in acc[p.row_range(i, j)].iter_mut().zip(r.iter()) {
                        *dst += v;
                    }
                }
            }
            ResidualReport {
                scheme: Scheme::Column,
                conservation: alloc::vec![norm2(&acc)],
                consensus: s.x.iter().map(|cl| max_pairwise(cl)).collect(),
                overall,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::linalg::DenseMatrix;
    use crate::partition::{Layout, ProblemInstance};
    use alloc::vec;

    fn scalar_instance(scheme: Scheme) -> Partition {
        let topo = Topology::new(Graph::path(1).unwrap(), vec![Graph::path(1).unwrap()]).unwrap();
        let layout = match scheme {
            Scheme::Row => Layout::Rows { cluster_rows: vec![1], agent_cols: vec![vec![1]], offsets: None },
            Scheme::Column => Layout::Columns { cluster_cols: vec![1], agent_rows: vec![vec![1]], cluster_offsets: None },
        };
        ProblemInstance::new(DenseMatrix::from_rows(&[[2.0]]).unwrap(), DenseVector::new(vec![4.0]).unwrap(), topo, layout)
            .unwrap()
            .partition()
            .unwrap()
    }

    #[test]
    fn single_agent_hand_values() {
        let topo = Topology::new(Graph::path(1).unwrap(), vec![Graph::path(1).unwrap()]).unwrap();
        for scheme in [Scheme::Row, Scheme::Column] {
            let part = scalar_instance(scheme);
            let d = agent_update(&part, &topo, &NetworkState::zeros(&part)).unwrap();
            // ẋ = −2(2·0 − 4) = 8, ż = 2·0 − 4 = −4
            assert_eq!(d.dx[0][0].as_slice(), &[8.0]);
            assert_eq!(d.dz[0][0].as_slice(), &[-4.0]);
        }
    }

    #[test]
    fn shape_mismatch_reported() {
        let topo = Topology::new(Graph::path(1).unwrap(), vec![Graph::path(1).unwrap()]).unwrap();
        let part = scalar_instance(Scheme::Row);
        let mut s = NetworkState::zeros(&part);
        s.z[0][0] = DenseVector::zeros(2);
        assert_eq!(
            agent_update(&part, &topo, &s),
            Err(DynamicsError::ShapeMismatch { what: StateSlot::Z { cluster: 0, agent: 0 }, expected: 1, found: 2 })
        );
        assert!(residuals(&part, &topo, &s).is_err());
    }

    #[test]
    fn zero_state_conservation_equals_cluster_rhs() {
        let topo = Topology::new(
            Graph::path(2).unwrap(),
            vec![Graph::path(2).unwrap(), Graph::path(3).unwrap()],
        )
        .unwrap();
        let a = DenseMatrix::from_fn(3, 3, |r, c| (r * 3 + c) as f64 - 4.0);
        let b = DenseVector::new(vec![1.0, -2.0, 2.0]).unwrap();
        let inst = ProblemInstance::new(
            a,
            b,
            topo.clone(),
            Layout::Rows { cluster_rows: vec![1, 2], agent_cols: vec![vec![2, 1], vec![1, 1, 1]], offsets: None },
        )
        .unwrap();
        let part = inst.partition().unwrap();
        let rep = residuals(&part, &topo, &NetworkState::zeros(&part)).unwrap();
        approx::assert_abs_diff_eq!(rep.conservation[0], 1.0, epsilon = 1e-15);
        approx::assert_abs_diff_eq!(rep.conservation[1], libm::sqrt(8.0), epsilon = 1e-15);
        assert_eq!(rep.max_consensus(), 0.0);
        approx::assert_abs_diff_eq!(rep.overall, 3.0, epsilon = 1e-15);
    }

    #[test]
    fn stacking_round_trip() {
        let part = scalar_instance(Scheme::Column);
        let s = NetworkState::from_fn(&part, |k| k as f64 + 0.5);
        assert_eq!(s.stacked().as_slice(), &[0.5, 1.5]);
        assert_eq!(NetworkState::from_stacked(&part, &s.stacked()).unwrap(), s);
    }
}
