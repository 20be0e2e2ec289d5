//! Connected, bidirectional, unit-weight graphs for both network layers.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge ({0}, {1}) references a node >= {2}")]
    OutOfRangeEndpoint(usize, usize, usize),
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("agent graph for cluster {cluster}: {source}")]
    InCluster {
        cluster: usize,
        #[source]
        source: alloc::boxed::Box<GraphError>,
    },
    #[error("topology has {clusters} clusters but {agent_graphs} agent graphs")]
    ClusterCountMismatch { clusters: usize, agent_graphs: usize },
}

/// Undirected graph with connectivity checked at construction.
///
/// Self-loops are dropped and duplicate edges collapsed; the edge list is
/// kept as sorted `(lo, hi)` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(GraphError::OutOfRangeEndpoint(a, b, node_count));
            }
            if a != b {
                norm.push((a.min(b), a.max(b)));
            }
        }
        norm.sort_unstable();
        norm.dedup();

        let mut adjacency = vec![Vec::new(); node_count];
        for &(a, b) in &norm {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let components = count_components(node_count, &norm);
        if components != 1 {
            return Err(GraphError::DisconnectedGraph { components });
        }
        Ok(Self { node_count, edges: norm, adjacency })
    }

    /// Complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect();
        Self::new(n, &edges)
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        let edges: Vec<_> = (1..n).map(|b| (b - 1, b)).collect();
        Self::new(n, &edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Adjacent nodes, excluding `node` itself.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    /// Neighborhood in the closed sense: adjacent nodes plus `node`, sorted.
    pub fn closed_neighborhood(&self, node: usize) -> Vec<usize> {
        let mut out = self.adjacency[node].clone();
        let at = out.partition_point(|&v| v < node);
        out.insert(at, node);
        out
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn laplacian(&self) -> Laplacian {
        let n = self.node_count;
        let mut m = DenseMatrix::zeros(n, n);
        for &(a, b) in &self.edges {
            m[(a, b)] = -1.0;
            m[(b, a)] = -1.0;
        }
        for i in 0..n {
            m[(i, i)] = self.degree(i) as f64;
        }
        Laplacian { matrix: m }
    }

    /// `laplacian ⊗ I_block_dim`
    pub fn lifted_laplacian(&self, block_dim: usize) -> DenseMatrix {
        self.laplacian().matrix.kron(&DenseMatrix::identity(block_dim))
    }
}

fn count_components(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components
}

/// Graph Laplacian `D − A` of a connected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    pub matrix: DenseMatrix,
}

/// Cluster graph plus one agent graph per cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    clusters: Graph,
    agents: Vec<Graph>,
}

impl Topology {
    pub fn new(clusters: Graph, agents: Vec<Graph>) -> Result<Self, GraphError> {
        if clusters.node_count() != agents.len() {
            return Err(GraphError::ClusterCountMismatch {
                clusters: clusters.node_count(),
                agent_graphs: agents.len(),
            });
        }
        Ok(Self { clusters, agents })
    }

    /// Builds every graph from raw edge lists, tagging agent-graph failures
    /// with their cluster index.
    pub fn from_edges(
        cluster_count: usize,
        cluster_edges: &[(usize, usize)],
        agent_graphs: &[(usize, Vec<(usize, usize)>)],
    ) -> Result<Self, GraphError> {
        let clusters = Graph::new(cluster_count, cluster_edges)?;
        let agents = agent_graphs
            .iter()
            .enumerate()
            .map(|(cluster, (n, e))| {
                Graph::new(*n, e).map_err(|source| GraphError::InCluster {
                    cluster,
                    source: alloc::boxed::Box::new(source),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(clusters, agents)
    }

    pub fn cluster_graph(&self) -> &Graph {
        &self.clusters
    }

    pub fn agent_graph(&self, cluster: usize) -> &Graph {
        &self.agents[cluster]
    }

    pub fn cluster_count(&self) -> usize {
        self.agents.len()
    }

    pub fn agent_count(&self, cluster: usize) -> usize {
        self.agents[cluster].node_count()
    }

    pub fn agent_counts(&self) -> Vec<usize> {
        self.agents.iter().map(Graph::node_count).collect()
    }

    pub fn total_agents(&self) -> usize {
        self.agents.iter().map(Graph::node_count).sum()
    }
}
