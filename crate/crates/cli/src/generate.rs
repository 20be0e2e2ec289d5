//! Random consistent instances for `verify` and the acceptance suite.

use std::ops::RangeInclusive;

use bilayer_core::linalg::singular_values;
use bilayer_core::{DenseMatrix, DenseVector, Graph, LemmaCheckInput, Layout, Partition, ProblemInstance, Scheme, Topology};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

pub fn uniform_vector(rng: &mut impl Rng, dim: usize) -> DenseVector {
    DenseVector::from_fn(dim, |_| rng.gen_range(-1.0..=1.0))
}

/// Random spanning tree plus up to `n` extra edges.
pub fn connected_graph(rng: &mut impl Rng, n: usize) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for k in 1..n {
        edges.push((order[rng.gen_range(0..k)], order[k]));
    }
    for _ in 0..rng.gen_range(0..=n) {
        edges.push((rng.gen_range(0..n), rng.gen_range(0..n)));
    }
    Graph::new(n, &edges).expect("spanning tree keeps the graph connected")
}

/// Splits `total` into `parts` positive sizes.
pub fn random_sizes(rng: &mut impl Rng, total: usize, parts: usize) -> Vec<usize> {
    assert!(parts >= 1 && total >= parts, "cannot split {total} into {parts} positive parts");
    let mut sizes = vec![1; parts];
    for _ in 0..total - parts {
        sizes[rng.gen_range(0..parts)] += 1;
    }
    sizes
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub scheme: Scheme,
    pub m: usize,
    pub n: usize,
    /// Agent count per cluster.
    pub agents: Vec<usize>,
}

/// A random shape with `m, n ≤ max_dim` and up to 4 agents per cluster.
/// `tall` forces `m ≥ n`, so `A` generically has full column rank.
pub fn random_shape(
    rng: &mut impl Rng,
    scheme: Scheme,
    max_dim: usize,
    clusters: RangeInclusive<usize>,
    tall: bool,
) -> Shape {
    assert!(max_dim >= 1);
    let c = rng.gen_range(clusters).clamp(1, max_dim);
    let agents: Vec<usize> = (0..c).map(|_| rng.gen_range(1..=4.min(max_dim))).collect();
    let widest = *agents.iter().max().expect("at least one cluster");
    // every cluster and agent needs at least one row or column
    let (lo_m, lo_n) = match scheme {
        Scheme::Row => (c, widest),
        Scheme::Column => (widest, c),
    };
    let n = rng.gen_range(lo_n..=max_dim);
    let lo_m = if tall { lo_m.max(n) } else { lo_m };
    let m = rng.gen_range(lo_m..=max_dim);
    Shape { scheme, m, n, agents }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: ProblemInstance,
    pub part: Partition,
    pub x_true: DenseVector,
}

impl Generated {
    pub fn topology(&self) -> &Topology {
        &self.instance.topology
    }
}

/// `A` uniform in `[−1, 1]`, `b = A x_true`, random connected graphs and
/// random block sizes.
pub fn instance(rng: &mut impl Rng, shape: &Shape) -> Generated {
    let a = uniform_matrix(rng, shape.m, shape.n);
    assemble(rng, shape, a)
}

/// Like [`instance`], redrawing `A` until `σ_max / σ_min ≤ max_cond` (over
/// the `min(m, n)` singular values). The slowest mode of the flow scales
/// with `σ_min²`, so this bounds convergence time.
pub fn conditioned_instance(rng: &mut impl Rng, shape: &Shape, max_cond: f64) -> Generated {
    loop {
        let a = uniform_matrix(rng, shape.m, shape.n);
        if condition_number(&a) <= max_cond {
            return assemble(rng, shape, a);
        }
    }
}

pub fn condition_number(a: &DenseMatrix) -> f64 {
    let sv = singular_values(a).expect("Jacobi SVD converges on small matrices");
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

fn assemble(rng: &mut impl Rng, shape: &Shape, a: DenseMatrix) -> Generated {
    let Shape { scheme, m, n, ref agents } = *shape;
    let c = agents.len();
    let x_true = uniform_vector(rng, n);
    let b = a.matvec(&x_true);
    let cluster_graph = connected_graph(rng, c);
    let agent_graphs = agents.iter().map(|&k| connected_graph(rng, k)).collect();
    let topology = Topology::new(cluster_graph, agent_graphs).expect("graph counts match");
    let layout = match scheme {
        Scheme::Row => Layout::Rows {
            cluster_rows: random_sizes(rng, m, c),
            agent_cols: agents.iter().map(|&k| random_sizes(rng, n, k)).collect(),
            offsets: None,
        },
        Scheme::Column => Layout::Columns {
            cluster_cols: random_sizes(rng, n, c),
            agent_rows: agents.iter().map(|&k| random_sizes(rng, m, k)).collect(),
            cluster_offsets: None,
        },
    };
    let instance = ProblemInstance::new(a, b, topology, layout).expect("b matches A");
    let part = instance.partition().expect("generated layout is valid");
    Generated { instance, part, x_true }
}

/// `(M₁, GᵀG, HᵀH)` with every dimension in `1..=max_dim`.
pub fn lemma_triple(rng: &mut impl Rng, max_dim: usize) -> LemmaCheckInput {
    let mut dim = || rng.gen_range(1..=max_dim);
    let (p, q, gr, hr) = (dim(), dim(), dim(), dim());
    let m1 = uniform_matrix(rng, q, p);
    let g = uniform_matrix(rng, gr, p);
    let h = uniform_matrix(rng, hr, q);
    LemmaCheckInput::new(m1, g.transpose().matmul(&g), h.transpose().matmul(&h)).expect("Gram matrices are PSD")
}
