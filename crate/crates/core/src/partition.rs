//! Splitting `(A, b)` across clusters and agents.
//!
//! The row scheme gives cluster `i` the row band `A_i` (rows `m_i`) and splits
//! it column-wise, so agent `j` holds `A_ij ∈ ℝ^{m_i×n_ij}` and an offset
//! `b_ij ∈ ℝ^{m_i}` with `Σ_j b_ij = b_i`.
//!
//! The column scheme gives cluster `i` the column band `A_i` (columns `n_i`)
//! and splits it row-wise, so agent `j` holds `A_ij ∈ ℝ^{m_ij×n_i}` and the
//! matching rows `b_ij` of a cluster share `b_i ∈ ℝ^m` with `Σ_i b_i = b`.
//!
//! Bands are contiguous and in index order. Unless explicit offsets are
//! given, shares of `b` are split equally, with the last share absorbing the
//! rounding remainder so that summing the shares in order gives back the
//! original vector exactly.

use alloc::vec::Vec;
use core::ops::Range;

use crate::graph::Topology;
use crate::linalg::{DenseMatrix, DenseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Global consensus + local conservation over block rows.
    Row,
    /// Local consensus + global conservation over block columns.
    Column,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartitionError {
    #[error("A has {rows} rows but b has dimension {dim}")]
    ProblemShape { rows: usize, dim: usize },
    #[error("layout mismatch: {what} is {found}, expected {expected}")]
    LayoutMismatch { what: &'static str, expected: usize, found: usize },
    #[error("layout is for the {found:?} scheme, expected {expected:?}")]
    SchemeMismatch { expected: Scheme, found: Scheme },
    #[error("topology mismatch in cluster {cluster:?}: layout has {layout} entries, topology has {topology}")]
    TopologyMismatch { cluster: Option<usize>, layout: usize, topology: usize },
    #[error("zero-sized block in cluster {cluster}")]
    ZeroSizedBlock { cluster: usize, agent: Option<usize> },
    #[error("explicit offsets for cluster {cluster} do not add up to its share of b")]
    OffsetMismatch { cluster: usize },
    #[error("block sizes sum to {found}, expected {expected}")]
    SumMismatch { expected: usize, found: usize },
}

/// Block sizes for one of the two schemes.
#[derive(Debug, Clone, PartialEq)]
pub enum Layout {
    Rows {
        /// `m_i` per cluster.
        cluster_rows: Vec<usize>,
        /// `n_ij` per agent.
        agent_cols: Vec<Vec<usize>>,
        /// Explicit `b_ij` (dimension `m_i`), otherwise equal split.
        offsets: Option<Vec<Vec<DenseVector>>>,
    },
    Columns {
        /// `n_i` per cluster.
        cluster_cols: Vec<usize>,
        /// `m_ij` per agent.
        agent_rows: Vec<Vec<usize>>,
        /// Explicit cluster shares `b_i ∈ ℝ^m`, otherwise equal split.
        cluster_offsets: Option<Vec<DenseVector>>,
    },
}

impl Layout {
    pub fn scheme(&self) -> Scheme {
        match self {
            Layout::Rows { .. } => Scheme::Row,
            Layout::Columns { .. } => Scheme::Column,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub a: DenseMatrix,
    pub b: DenseVector,
    pub topology: Topology,
    pub layout: Layout,
}

impl ProblemInstance {
    pub fn new(a: DenseMatrix, b: DenseVector, topology: Topology, layout: Layout) -> Result<Self, PartitionError> {
        if a.rows() != b.dim() {
            return Err(PartitionError::ProblemShape { rows: a.rows(), dim: b.dim() });
        }
        Ok(Self { a, b, topology, layout })
    }

    pub fn partition(&self) -> Result<Partition, PartitionError> {
        match self.layout.scheme() {
            Scheme::Row => partition_rows(self).map(Partition::Row),
            Scheme::Column => partition_columns(self).map(Partition::Column),
        }
    }
}

/// Contiguous bands of the identity: `E_j` holds rows `start_j..start_j+sizes[j]`
/// of `I_total`.
pub fn selection_matrices(sizes: &[usize], total: usize) -> Result<Vec<DenseMatrix>, PartitionError> {
    let sum: usize = sizes.iter().sum();
    if sum != total {
        return Err(PartitionError::SumMismatch { expected: total, found: sum });
    }
    Ok(band_ranges(sizes)
        .into_iter()
        .map(|r| DenseMatrix::from_fn(r.len(), total, |i, c| if c == r.start + i { 1.0 } else { 0.0 }))
        .collect())
}

fn band_ranges(sizes: &[usize]) -> Vec<Range<usize>> {
    let mut start = 0;
    sizes
        .iter()
        .map(|&s| {
            let r = start..start + s;
            start += s;
            r
        })
        .collect()
}

/// Splits `v` into `parts` shares whose in-order sum is exactly `v`.
pub(crate) fn split_equal(v: &DenseVector, parts: usize) -> Vec<DenseVector> {
    assert!(parts > 0);
    let share = v.scale(1.0 / parts as f64);
    let mut out: Vec<DenseVector> = (0..parts - 1).map(|_| share.clone()).collect();
    let partial = sum_in_order(v.dim(), &out);
    // exact: partial lies within a factor of two of v (Sterbenz)
    out.push(v.sub(&partial));
    out
}

fn sum_in_order(dim: usize, parts: &[DenseVector]) -> DenseVector {
    let mut acc = DenseVector::zeros(dim);
    for p in parts {
        acc = acc.add(p);
    }
    acc
}

fn offsets_match(parts: &[DenseVector], target: &DenseVector) -> bool {
    if parts.iter().any(|p| p.dim() != target.dim()) {
        return false;
    }
    let sum = sum_in_order(target.dim(), parts);
    sum.sub(target).norm_inf() <= 1e-12 * (1.0 + target.norm_inf())
}

fn check_sizes(what: &'static str, sizes: &[usize], total: usize) -> Result<(), PartitionError> {
    let sum: usize = sizes.iter().sum();
    if sum != total {
        return Err(PartitionError::LayoutMismatch { what, expected: total, found: sum });
    }
    Ok(())
}

fn check_topology(topology: &Topology, per_cluster: &[Vec<usize>]) -> Result<(), PartitionError> {
    if per_cluster.len() != topology.cluster_count() {
        return Err(PartitionError::TopologyMismatch {
            cluster: None,
            layout: per_cluster.len(),
            topology: topology.cluster_count(),
        });
    }
    for (i, agents) in per_cluster.iter().enumerate() {
        if agents.len() != topology.agent_count(i) {
            return Err(PartitionError::TopologyMismatch {
                cluster: Some(i),
                layout: agents.len(),
                topology: topology.agent_count(i),
            });
        }
    }
    Ok(())
}

fn check_nonzero(cluster_sizes: &[usize], agent_sizes: &[Vec<usize>]) -> Result<(), PartitionError> {
    for (i, &s) in cluster_sizes.iter().enumerate() {
        if s == 0 {
            return Err(PartitionError::ZeroSizedBlock { cluster: i, agent: None });
        }
        if let Some(j) = agent_sizes[i].iter().position(|&s| s == 0) {
            return Err(PartitionError::ZeroSizedBlock { cluster: i, agent: Some(j) });
        }
    }
    Ok(())
}

/// Block-row split: cluster `i` owns rows `m_i`, agent `(i, j)` owns columns
/// `n_ij` of that band.
#[derive(Debug, Clone, PartialEq)]
pub struct RowPartition {
    m: usize,
    n: usize,
    row_ranges: Vec<Range<usize>>,
    col_ranges: Vec<Vec<Range<usize>>>,
    blocks: Vec<Vec<DenseMatrix>>,
    offsets: Vec<Vec<DenseVector>>,
}

pub fn partition_rows(inst: &ProblemInstance) -> Result<RowPartition, PartitionError> {
    let Layout::Rows { cluster_rows, agent_cols, offsets } = &inst.layout else {
        return Err(PartitionError::SchemeMismatch { expected: Scheme::Row, found: inst.layout.scheme() });
    };
    let (m, n) = (inst.a.rows(), inst.a.cols());
    if inst.b.dim() != m {
        return Err(PartitionError::ProblemShape { rows: m, dim: inst.b.dim() });
    }
    if cluster_rows.len() != agent_cols.len() {
        return Err(PartitionError::LayoutMismatch {
            what: "number of agent column lists",
            expected: cluster_rows.len(),
            found: agent_cols.len(),
        });
    }
    check_topology(&inst.topology, agent_cols)?;
    check_nonzero(cluster_rows, agent_cols)?;
    check_sizes("sum of cluster row counts", cluster_rows, m)?;
    for cols in agent_cols {
        check_sizes("sum of agent column counts", cols, n)?;
    }

    let row_ranges = band_ranges(cluster_rows);
    let col_ranges: Vec<Vec<Range<usize>>> = agent_cols.iter().map(|c| band_ranges(c)).collect();
    let mut blocks = Vec::with_capacity(row_ranges.len());
    let mut shares = Vec::with_capacity(row_ranges.len());
    for (i, rows) in row_ranges.iter().enumerate() {
        blocks.push(col_ranges[i].iter().map(|cols| inst.a.submatrix(rows.clone(), cols.clone())).collect());
        let b_i = inst.b.segment(rows.clone());
        let share = match offsets {
            Some(explicit) => {
                let given = explicit.get(i).ok_or(PartitionError::OffsetMismatch { cluster: i })?;
                if given.len() != col_ranges[i].len() || !offsets_match(given, &b_i) {
                    return Err(PartitionError::OffsetMismatch { cluster: i });
                }
                given.clone()
            }
            None => split_equal(&b_i, col_ranges[i].len()),
        };
        shares.push(share);
    }
    if let Some(explicit) = offsets {
        if explicit.len() != row_ranges.len() {
            return Err(PartitionError::OffsetMismatch { cluster: row_ranges.len() });
        }
    }
    Ok(RowPartition { m, n, row_ranges, col_ranges, blocks, offsets: shares })
}

impl RowPartition {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cluster_count(&self) -> usize {
        self.row_ranges.len()
    }

    pub fn agent_count(&self, cluster: usize) -> usize {
        self.col_ranges[cluster].len()
    }

    /// Rows of `A` owned by cluster `i`.
    pub fn row_range(&self, cluster: usize) -> Range<usize> {
        self.row_ranges[cluster].clone()
    }

    /// Columns of `A_i` owned by agent `(i, j)`, i.e. the band `E_ij` selects.
    pub fn col_range(&self, cluster: usize, agent: usize) -> Range<usize> {
        self.col_ranges[cluster][agent].clone()
    }

    pub fn block(&self, cluster: usize, agent: usize) -> &DenseMatrix {
        &self.blocks[cluster][agent]
    }

    pub fn offset(&self, cluster: usize, agent: usize) -> &DenseVector {
        &self.offsets[cluster][agent]
    }

    pub fn selection(&self, cluster: usize, agent: usize) -> DenseMatrix {
        let r = self.col_range(cluster, agent);
        DenseMatrix::from_fn(r.len(), self.n, |i, c| if c == r.start + i { 1.0 } else { 0.0 })
    }

    pub fn cluster_matrix(&self, cluster: usize) -> DenseMatrix {
        DenseMatrix::hstack(&self.blocks[cluster])
    }

    pub fn cluster_rhs(&self, cluster: usize) -> DenseVector {
        sum_in_order(self.row_ranges[cluster].len(), &self.offsets[cluster])
    }

    pub fn assemble_a(&self) -> DenseMatrix {
        let bands: Vec<_> = (0..self.cluster_count()).map(|i| self.cluster_matrix(i)).collect();
        if bands.is_empty() {
            return DenseMatrix::zeros(0, self.n);
        }
        DenseMatrix::vstack(&bands)
    }

    pub fn assemble_b(&self) -> DenseVector {
        let parts: Vec<_> = (0..self.cluster_count()).map(|i| self.cluster_rhs(i)).collect();
        DenseVector::stack(&parts)
    }
}

/// Block-column split: cluster `i` owns columns `n_i`, agent `(i, j)` owns
/// rows `m_ij` of that band.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnPartition {
    m: usize,
    n: usize,
    col_ranges: Vec<Range<usize>>,
    row_ranges: Vec<Vec<Range<usize>>>,
    blocks: Vec<Vec<DenseMatrix>>,
    offsets: Vec<Vec<DenseVector>>,
}

pub fn partition_columns(inst: &ProblemInstance) -> Result<ColumnPartition, PartitionError> {
    let Layout::Columns { cluster_cols, agent_rows, cluster_offsets } = &inst.layout else {
        return Err(PartitionError::SchemeMismatch { expected: Scheme::Column, found: inst.layout.scheme() });
    };
    let (m, n) = (inst.a.rows(), inst.a.cols());
    if inst.b.dim() != m {
        return Err(PartitionError::ProblemShape { rows: m, dim: inst.b.dim() });
    }
    if cluster_cols.len() != agent_rows.len() {
        return Err(PartitionError::LayoutMismatch {
            what: "number of agent row lists",
            expected: cluster_cols.len(),
            found: agent_rows.len(),
        });
    }
    check_topology(&inst.topology, agent_rows)?;
    check_nonzero(cluster_cols, agent_rows)?;
    check_sizes("sum of cluster column counts", cluster_cols, n)?;
    for rows in agent_rows {
        check_sizes("sum of agent row counts", rows, m)?;
    }

    let col_ranges = band_ranges(cluster_cols);
    let row_ranges: Vec<Vec<Range<usize>>> = agent_rows.iter().map(|r| band_ranges(r)).collect();
    let shares = match cluster_offsets {
        Some(explicit) => {
            if explicit.len() != col_ranges.len() {
                return Err(PartitionError::OffsetMismatch { cluster: explicit.len().min(col_ranges.len()) });
            }
            if !offsets_match(explicit, &inst.b) {
                return Err(PartitionError::OffsetMismatch { cluster: 0 });
            }
            explicit.clone()
        }
        None => split_equal(&inst.b, col_ranges.len()),
    };

    let mut blocks = Vec::with_capacity(col_ranges.len());
    let mut offsets = Vec::with_capacity(col_ranges.len());
    for (i, cols) in col_ranges.iter().enumerate() {
        blocks.push(row_ranges[i].iter().map(|rows| inst.a.submatrix(rows.clone(), cols.clone())).collect());
        offsets.push(row_ranges[i].iter().map(|rows| shares[i].segment(rows.clone())).collect());
    }
    Ok(ColumnPartition { m, n, col_ranges, row_ranges, blocks, offsets })
}

impl ColumnPartition {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cluster_count(&self) -> usize {
        self.col_ranges.len()
    }

    pub fn agent_count(&self, cluster: usize) -> usize {
        self.row_ranges[cluster].len()
    }

    /// Columns of `A` owned by cluster `i`.
    pub fn col_range(&self, cluster: usize) -> Range<usize> {
        self.col_ranges[cluster].clone()
    }

    /// Rows of `A_i` owned by agent `(i, j)`, i.e. the band `E_ij` selects.
    pub fn row_range(&self, cluster: usize, agent: usize) -> Range<usize> {
        self.row_ranges[cluster][agent].clone()
    }

    pub fn block(&self, cluster: usize, agent: usize) -> &DenseMatrix {
        &self.blocks[cluster][agent]
    }

    pub fn offset(&self, cluster: usize, agent: usize) -> &DenseVector {
        &self.offsets[cluster][agent]
    }

    pub fn selection(&self, cluster: usize, agent: usize) -> DenseMatrix {
        let r = self.row_range(cluster, agent);
        DenseMatrix::from_fn(r.len(), self.m, |i, c| if c == r.start + i { 1.0 } else { 0.0 })
    }

    pub fn cluster_matrix(&self, cluster: usize) -> DenseMatrix {
        DenseMatrix::vstack(&self.blocks[cluster])
    }

    /// `b_i`, the cluster's share of `b`.
    pub fn cluster_rhs(&self, cluster: usize) -> DenseVector {
        DenseVector::stack(&self.offsets[cluster])
    }

    pub fn assemble_a(&self) -> DenseMatrix {
        let bands: Vec<_> = (0..self.cluster_count()).map(|i| self.cluster_matrix(i)).collect();
        if bands.is_empty() {
            return DenseMatrix::zeros(self.m, 0);
        }
        DenseMatrix::hstack(&bands)
    }

    pub fn assemble_b(&self) -> DenseVector {
        let parts: Vec<_> = (0..self.cluster_count()).map(|i| self.cluster_rhs(i)).collect();
        sum_in_order(self.m, &parts)
    }
}

/// Either partition, with the shape queries both schemes share.
#[derive(Debug, Clone, PartialEq)]
pub enum Partition {
    Row(RowPartition),
    Column(ColumnPartition),
}

impl Partition {
    pub fn scheme(&self) -> Scheme {
        match self {
            Partition::Row(_) => Scheme::Row,
            Partition::Column(_) => Scheme::Column,
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Partition::Row(p) => p.m(),
            Partition::Column(p) => p.m(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Partition::Row(p) => p.n(),
            Partition::Column(p) => p.n(),
        }
    }

    pub fn cluster_count(&self) -> usize {
        match self {
            Partition::Row(p) => p.cluster_count(),
            Partition::Column(p) => p.cluster_count(),
        }
    }

    pub fn agent_count(&self, cluster: usize) -> usize {
        match self {
            Partition::Row(p) => p.agent_count(cluster),
            Partition::Column(p) => p.agent_count(cluster),
        }
    }

    pub fn block(&self, cluster: usize, agent: usize) -> &DenseMatrix {
        match self {
            Partition::Row(p) => p.block(cluster, agent),
            Partition::Column(p) => p.block(cluster, agent),
        }
    }

    pub fn offset(&self, cluster: usize, agent: usize) -> &DenseVector {
        match self {
            Partition::Row(p) => p.offset(cluster, agent),
            Partition::Column(p) => p.offset(cluster, agent),
        }
    }

    /// Dimension of agent `(i, j)`'s solution state.
    pub fn x_dim(&self, cluster: usize, agent: usize) -> usize {
        self.block(cluster, agent).cols()
    }

    /// Dimension of agent `(i, j)`'s coordination state.
    pub fn z_dim(&self, cluster: usize, agent: usize) -> usize {
        self.block(cluster, agent).rows()
    }

    pub fn assemble_a(&self) -> DenseMatrix {
        match self {
            Partition::Row(p) => p.assemble_a(),
            Partition::Column(p) => p.assemble_a(),
        }
    }

    pub fn assemble_b(&self) -> DenseVector {
        match self {
            Partition::Row(p) => p.assemble_b(),
            Partition::Column(p) => p.assemble_b(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use alloc::vec;

    fn two_by_two_topology() -> Topology {
        Topology::new(Graph::path(2).unwrap(), vec![Graph::path(2).unwrap(), Graph::path(2).unwrap()]).unwrap()
    }

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn row_identity_equal_split() {
        let inst = ProblemInstance::new(
            DenseMatrix::identity(2),
            v(&[1.0, 1.0]),
            two_by_two_topology(),
            Layout::Rows { cluster_rows: vec![1, 1], agent_cols: vec![vec![1, 1], vec![1, 1]], offsets: None },
        )
        .unwrap();
        let p = partition_rows(&inst).unwrap();
        assert_eq!(p.block(0, 0).as_slice(), &[1.0]);
        assert_eq!(p.block(0, 1).as_slice(), &[0.0]);
        assert_eq!(p.block(1, 0).as_slice(), &[0.0]);
        assert_eq!(p.block(1, 1).as_slice(), &[1.0]);
        assert_eq!(p.offset(0, 0).as_slice(), &[0.5]);
        assert_eq!(p.offset(0, 1).as_slice(), &[0.5]);
    }

    #[test]
    fn column_identity_equal_split() {
        let inst = ProblemInstance::new(
            DenseMatrix::identity(2),
            v(&[1.0, 1.0]),
            two_by_two_topology(),
            Layout::Columns { cluster_cols: vec![1, 1], agent_rows: vec![vec![1, 1], vec![1, 1]], cluster_offsets: None },
        )
        .unwrap();
        let p = partition_columns(&inst).unwrap();
        // agent (i, 0) holds the upper entry of column i
        assert_eq!(p.block(0, 0).as_slice(), &[1.0]);
        assert_eq!(p.block(1, 0).as_slice(), &[0.0]);
        assert_eq!(p.block(1, 1).as_slice(), &[1.0]);
        assert_eq!(p.cluster_rhs(0).as_slice(), &[0.5, 0.5]);
        assert_eq!(p.offset(1, 1).as_slice(), &[0.5]);
        assert_eq!(p.assemble_b(), v(&[1.0, 1.0]));
    }

    #[test]
    fn split_equal_sums_back_exactly() {
        for parts in 1..12 {
            let b = v(&[1.0, 0.1, -7.3, 1e-300, 3.0e10, 0.0, 1.0 / 3.0]);
            let shares = split_equal(&b, parts);
            assert_eq!(sum_in_order(b.dim(), &shares), b, "parts = {parts}");
        }
    }

    #[test]
    fn selection_matrix_examples() {
        let e = selection_matrices(&[3], 3).unwrap();
        assert_eq!(e, vec![DenseMatrix::identity(3)]);
        let e = selection_matrices(&[2, 1], 3).unwrap();
        assert_eq!(e[0], DenseMatrix::identity(3).submatrix(0..2, 0..3));
        assert_eq!(e[1], DenseMatrix::identity(3).submatrix(2..3, 0..3));
        assert_eq!(selection_matrices(&[2, 2], 3), Err(PartitionError::SumMismatch { expected: 3, found: 4 }));
    }

    #[test]
    fn layout_errors() {
        let topo = two_by_two_topology();
        let a = DenseMatrix::identity(2);
        let b = v(&[1.0, 1.0]);
        let bad_sum = ProblemInstance::new(
            a.clone(),
            b.clone(),
            topo.clone(),
            Layout::Rows { cluster_rows: vec![1, 2], agent_cols: vec![vec![1, 1], vec![1, 1]], offsets: None },
        )
        .unwrap();
        assert!(matches!(partition_rows(&bad_sum), Err(PartitionError::LayoutMismatch { .. })));

        let bad_agents = ProblemInstance::new(
            a.clone(),
            b.clone(),
            topo.clone(),
            Layout::Rows { cluster_rows: vec![1, 1], agent_cols: vec![vec![2], vec![1, 1]], offsets: None },
        )
        .unwrap();
        assert_eq!(
            partition_rows(&bad_agents),
            Err(PartitionError::TopologyMismatch { cluster: Some(0), layout: 1, topology: 2 })
        );

        let zero = ProblemInstance::new(
            a.clone(),
            b.clone(),
            topo.clone(),
            Layout::Columns { cluster_cols: vec![2, 0], agent_rows: vec![vec![1, 1], vec![1, 1]], cluster_offsets: None },
        )
        .unwrap();
        assert_eq!(partition_columns(&zero), Err(PartitionError::ZeroSizedBlock { cluster: 1, agent: None }));

        let wrong = ProblemInstance::new(
            a,
            b,
            topo,
            Layout::Columns { cluster_cols: vec![1, 1], agent_rows: vec![vec![1, 1], vec![1, 1]], cluster_offsets: None },
        )
        .unwrap();
        assert!(matches!(partition_rows(&wrong), Err(PartitionError::SchemeMismatch { .. })));
    }

    #[test]
    fn explicit_offsets_validated() {
        let topo = Topology::new(Graph::path(1).unwrap(), vec![Graph::path(2).unwrap()]).unwrap();
        let layout = |offs: Vec<Vec<DenseVector>>| Layout::Rows {
            cluster_rows: vec![1],
            agent_cols: vec![vec![1, 1]],
            offsets: Some(offs),
        };
        let a = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let good = ProblemInstance::new(a.clone(), v(&[3.0]), topo.clone(), layout(vec![vec![v(&[2.0]), v(&[1.0])]]))
            .unwrap();
        let p = partition_rows(&good).unwrap();
        assert_eq!(p.offset(0, 0).as_slice(), &[2.0]);
        let bad = ProblemInstance::new(a, v(&[3.0]), topo, layout(vec![vec![v(&[2.0]), v(&[2.0])]])).unwrap();
        assert_eq!(partition_rows(&bad), Err(PartitionError::OffsetMismatch { cluster: 0 }));
    }

    #[test]
    fn problem_shape_checked() {
        let err = ProblemInstance::new(
            DenseMatrix::identity(2),
            v(&[1.0]),
            two_by_two_topology(),
            Layout::Rows { cluster_rows: vec![1, 1], agent_cols: vec![vec![1, 1], vec![1, 1]], offsets: None },
        )
        .unwrap_err();
        assert_eq!(err, PartitionError::ProblemShape { rows: 2, dim: 1 });
    }
}
