#![allow(dead_code)]

use bilayer_core::{DenseMatrix, DenseVector, Graph, Layout, Partition, ProblemInstance, Scheme, Topology};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

pub fn uniform_vector(rng: &mut impl Rng, dim: usize) -> DenseVector {
    DenseVector::from_fn(dim, |_| rng.gen_range(-1.0..=1.0))
}

/// Random spanning tree plus a few extra edges.
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
    Graph::new(n, &edges).unwrap()
}

/// Splits `total` into `parts` positive sizes.
pub fn random_sizes(rng: &mut impl Rng, total: usize, parts: usize) -> Vec<usize> {
    assert!(parts >= 1 && total >= parts);
    let mut sizes = vec![1; parts];
    for _ in 0..total - parts {
        sizes[rng.gen_range(0..parts)] += 1;
    }
    sizes
}

pub struct Instance {
    pub part: Partition,
    pub topo: Topology,
    pub x_true: DenseVector,
}

/// Consistent instance `b = A x_true` with `clusters` clusters and
/// `agents[i]` agents in cluster `i`.
pub fn instance(rng: &mut impl Rng, scheme: Scheme, m: usize, n: usize, agents: &[usize]) -> Instance {
    let c = agents.len();
    let a = uniform_matrix(rng, m, n);
    let x_true = uniform_vector(rng, n);
    let b = a.matvec(&x_true);
    let cluster_graph = connected_graph(rng, c);
    let agent_graphs = agents.iter().map(|&k| connected_graph(rng, k)).collect();
    let topo = Topology::new(cluster_graph, agent_graphs).unwrap();
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
    let part = ProblemInstance::new(a, b, topo.clone(), layout).unwrap().partition().unwrap();
    Instance { part, topo, x_true }
}

/// Random shape with `m, n ≤ max_dim` (at least 4), 2–4 clusters of 1–4
/// agents; `tall` forces `m ≥ n`.
pub fn random_instance(rng: &mut impl Rng, scheme: Scheme, max_dim: usize, tall: bool) -> Instance {
    assert!(max_dim >= 4);
    let c = rng.gen_range(2..=4);
    let agents: Vec<usize> = (0..c).map(|_| rng.gen_range(1..=4)).collect();
    let widest = *agents.iter().max().unwrap();
    // every cluster and agent needs at least one row or column
    let (lo_m, lo_n) = match scheme {
        Scheme::Row => (c, widest),
        Scheme::Column => (widest, c),
    };
    let n = rng.gen_range(lo_n..=max_dim);
    let lo_m = if tall { lo_m.max(n) } else { lo_m };
    let m = rng.gen_range(lo_m..=max_dim);
    instance(rng, scheme, m, n, &agents)
}
