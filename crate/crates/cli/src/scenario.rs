//! JSON scenario files.
//!
//! ```json
//! {
//!   "scheme": "row",
//!   "a": [[1.0, 0.0], [0.0, 1.0]],
//!   "b": [1.0, 2.0],
//!   "cluster_graph": { "nodes": 2, "edges": [[0, 1]] },
//!   "agent_graphs": [{ "nodes": 1 }, { "nodes": 2, "edges": [[0, 1]] }],
//!   "layout": {
//!     "row": { "cluster_rows": [1, 1], "agent_cols": [[2], [1, 1]] },
//!     "column": { "cluster_cols": [1, 1], "agent_rows": [[2], [1, 1]] }
//!   },
//!   "sim": { "max_time": 500.0 }
//! }
//! ```
//!
//! Only the layout of the selected scheme is required; carrying both lets
//! `--scheme` switch a scenario between them.

use std::path::Path;

use bilayer_core::simulator::{InitMode, StepSize};
use bilayer_core::{DenseMatrix, DenseVector, Graph, GraphError, Layout, PartitionError, ProblemInstance, Scheme, SimConfig, Topology};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Row,
    Column,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::Row => Scheme::Row,
            SchemeName::Column => Scheme::Column,
        }
    }
}

impl From<Scheme> for SchemeName {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::Row => SchemeName::Row,
            Scheme::Column => SchemeName::Column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub nodes: usize,
    #[serde(default)]
    pub edges: Vec<[usize; 2]>,
}

impl GraphSpec {
    fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|e| (e[0], e[1])).collect()
    }

    fn build(&self) -> Result<Graph, GraphError> {
        Graph::new(self.nodes, &self.edge_pairs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowLayoutSpec {
    /// `m_i` per cluster.
    pub cluster_rows: Vec<usize>,
    /// `n_ij` per agent.
    pub agent_cols: Vec<Vec<usize>>,
    /// Explicit `b_ij` per agent, each of dimension `m_i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offsets: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnLayoutSpec {
    /// `n_i` per cluster.
    pub cluster_cols: Vec<usize>,
    /// `m_ij` per agent.
    pub agent_rows: Vec<Vec<usize>>,
    /// Explicit cluster shares `b_i`, each of dimension `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_offsets: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<RowLayoutSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column: Option<ColumnLayoutSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    #[default]
    Zeros,
    SeededRandom { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSpec {
    /// Fixed RK4 step; absent means automatic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    pub max_time: f64,
    pub stationarity_tol: f64,
    pub record_every: usize,
    pub rng_seed: u64,
    pub init: InitSpec,
    /// `x*` for `V(t)`; absent means the least-squares solution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<Vec<f64>>,
    /// A run is accepted when every final residual is at or below this.
    pub residual_tol: f64,
}

impl Default for SimSpec {
    fn default() -> Self {
        let d = SimConfig::default();
        Self {
            step_size: None,
            max_time: d.max_time,
            stationarity_tol: d.stationarity_tol,
            record_every: d.record_every,
            rng_seed: d.rng_seed,
            init: InitSpec::Zeros,
            reference: None,
            residual_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scheme: SchemeName,
    /// Row-major.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub cluster_graph: GraphSpec,
    pub agent_graphs: Vec<GraphSpec>,
    pub layout: LayoutSpec,
    #[serde(default)]
    pub sim: SimSpec,
}

/// A scenario resolved into library types.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub instance: ProblemInstance,
    pub config: SimConfig,
    pub residual_tol: f64,
}

/// Build failure tagged with the offending field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
    pub topology: bool,
}

impl FieldError {
    fn parse(field: impl Into<String>, message: impl ToString) -> Self {
        Self { field: field.into(), message: message.to_string(), topology: false }
    }

    fn topology(field: impl Into<String>, message: impl ToString) -> Self {
        Self { field: field.into(), message: message.to_string(), topology: true }
    }

    pub fn into_cli(self, path: &Path) -> CliError {
        let message = format!("field `{}`: {}", self.field, self.message);
        if self.topology {
            CliError::Topology { path: path.to_path_buf(), message }
        } else {
            CliError::Parse { path: path.to_path_buf(), message }
        }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

impl ScenarioFile {
    /// Parses JSON; errors name the field path and the line and column.
    pub fn parse(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                e.inner().to_string()
            } else {
                format!("field `{path}`: {}", e.inner())
            }
        })?;
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|message| CliError::Parse { path: path.to_path_buf(), message })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Resolves into a problem instance for `scheme` (default: the file's).
    pub fn build(&self, scheme: Option<Scheme>) -> Result<Scenario, FieldError> {
        let scheme = scheme.unwrap_or_else(|| self.scheme.into());
        let a = self.matrix()?;
        let b = DenseVector::new(self.b.clone()).map_err(|e| FieldError::parse("b", e))?;
        if b.dim() != a.rows() {
            return Err(FieldError::parse("b", format!("dimension {} but `a` has {} rows", b.dim(), a.rows())));
        }
        let topology = self.topology()?;
        let (field, layout) = self.layout(scheme)?;
        let instance = ProblemInstance::new(a, b, topology, layout).map_err(|e| FieldError::parse("b", e))?;
        instance.partition().map_err(|e| match e {
            PartitionError::TopologyMismatch { .. } => FieldError::topology(field, e),
            _ => FieldError::parse(field, e),
        })?;
        let config = self.sim_config()?;
        if let Some(r) = &config.reference {
            if r.dim() != instance.a.cols() {
                return Err(FieldError::parse(
                    "sim.reference",
                    format!("dimension {} but `a` has {} columns", r.dim(), instance.a.cols()),
                ));
            }
        }
        Ok(Scenario { instance, config, residual_tol: self.sim.residual_tol })
    }

    fn matrix(&self) -> Result<DenseMatrix, FieldError> {
        let cols = self.a.first().map_or(0, Vec::len);
        if cols == 0 {
            return Err(FieldError::parse("a", "matrix must have at least one row and one column"));
        }
        if let Some(i) = self.a.iter().position(|r| r.len() != cols) {
            return Err(FieldError::parse(
                format!("a[{i}]"),
                format!("row has {} entries, expected {cols}", self.a[i].len()),
            ));
        }
        DenseMatrix::from_rows(&self.a).map_err(|e| FieldError::parse("a", e))
    }

    fn topology(&self) -> Result<Topology, FieldError> {
        let clusters = self.cluster_graph.build().map_err(|e| FieldError::topology("cluster_graph", e))?;
        let agents = self
            .agent_graphs
            .iter()
            .enumerate()
            .map(|(i, g)| {
                g.build().map_err(|e| FieldError::topology(format!("agent_graphs[{i}]"), format!("cluster {i}: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Topology::new(clusters, agents).map_err(|e| FieldError::topology("agent_graphs", e))
    }

    fn layout(&self, scheme: Scheme) -> Result<(&'static str, Layout), FieldError> {
        let vectors = |field: &str, rows: &[Vec<f64>]| {
            rows.iter()
                .map(|v| DenseVector::new(v.clone()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| FieldError::parse(field, e))
        };
        match scheme {
            Scheme::Row => {
                let spec = self.layout.row.as_ref().ok_or_else(|| missing_layout("layout.row"))?;
                let offsets = match &spec.offsets {
                    Some(o) => Some(
                        o.iter().map(|cl| vectors("layout.row.offsets", cl)).collect::<Result<Vec<_>, _>>()?,
                    ),
                    None => None,
                };
                Ok((
                    "layout.row",
                    Layout::Rows { cluster_rows: spec.cluster_rows.clone(), agent_cols: spec.agent_cols.clone(), offsets },
                ))
            }
            Scheme::Column => {
                let spec = self.layout.column.as_ref().ok_or_else(|| missing_layout("layout.column"))?;
                let cluster_offsets = match &spec.cluster_offsets {
                    Some(o) => Some(vectors("layout.column.cluster_offsets", o)?),
                    None => None,
                };
                Ok((
                    "layout.column",
                    Layout::Columns {
                        cluster_cols: spec.cluster_cols.clone(),
                        agent_rows: spec.agent_rows.clone(),
                        cluster_offsets,
                    },
                ))
            }
        }
    }

    fn sim_config(&self) -> Result<SimConfig, FieldError> {
        let s = &self.sim;
        let reference = match &s.reference {
            Some(r) => Some(DenseVector::new(r.clone()).map_err(|e| FieldError::parse("sim.reference", e))?),
            None => None,
        };
        let config = SimConfig {
            step_size: s.step_size.map_or(StepSize::Auto, StepSize::Fixed),
            max_time: s.max_time,
            stationarity_tol: s.stationarity_tol,
            record_every: s.record_every,
            rng_seed: s.rng_seed,
            init_mode: match s.init {
                InitSpec::Zeros => InitMode::Zeros,
                InitSpec::SeededRandom { amplitude } => InitMode::SeededRandom { amplitude },
            },
            reference,
            keep_states: false,
        };
        config.validate().map_err(|e| FieldError::parse("sim", e))?;
        if !(s.residual_tol.is_finite() && s.residual_tol > 0.0) {
            return Err(FieldError::parse("sim.residual_tol", "must be positive"));
        }
        Ok(config)
    }
}

fn missing_layout(field: &str) -> FieldError {
    FieldError::parse(field, "no layout given for this scheme")
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITY: &str = r#"{
        "scheme": "row",
        "a": [[1.0, 0.0], [0.0, 1.0]],
        "b": [1.0, 2.0],
        "cluster_graph": { "nodes": 2, "edges": [[0, 1]] },
        "agent_graphs": [{ "nodes": 1 }, { "nodes": 2, "edges": [[0, 1]] }],
        "layout": {
            "row": { "cluster_rows": [1, 1], "agent_cols": [[2], [1, 1]] },
            "column": { "cluster_cols": [1, 1], "agent_rows": [[2], [1, 1]] }
        }
    }"#;

    #[test]
    fn parses_and_builds_both_schemes() {
        let f = ScenarioFile::parse(IDENTITY).unwrap();
        assert_eq!(f.sim, SimSpec::default());
        for scheme in [Scheme::Row, Scheme::Column] {
            let s = f.build(Some(scheme)).unwrap();
            assert_eq!(s.instance.layout.scheme(), scheme);
            assert_eq!(s.config.step_size, StepSize::Auto);
        }
    }

    #[test]
    fn round_trip_is_identical() {
        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.a[0][1] = 0.1 + 0.2;
        f.sim.step_size = Some(1.0 / 3.0);
        f.sim.init = InitSpec::SeededRandom { amplitude: 0.7 };
        f.layout.row.as_mut().unwrap().offsets = Some(vec![vec![vec![1.0]], vec![vec![0.5], vec![1.5]]]);
        let again = ScenarioFile::parse(&f.to_json()).unwrap();
        assert_eq!(f, again);
        assert_eq!(f.build(None).unwrap(), again.build(None).unwrap());
    }

    #[test]
    fn syntax_errors_carry_line_and_field() {
        let bad = IDENTITY.replace("\"b\": [1.0, 2.0]", "\"b\": [1.0, \"x\"]");
        let err = ScenarioFile::parse(&bad).unwrap_err();
        assert!(err.contains("field `b[1]`"), "{err}");
        assert!(err.contains("line 4"), "{err}");
        let unknown = IDENTITY.replace("\"scheme\"", "\"schema\"");
        assert!(ScenarioFile::parse(&unknown).unwrap_err().contains("unknown field"));
        let scheme = IDENTITY.replace("\"row\",", "\"diagonal\",");
        assert!(ScenarioFile::parse(&scheme).unwrap_err().contains("field `scheme`"));
    }

    #[test]
    fn build_errors_name_fields() {
        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.a[1].push(3.0);
        assert_eq!(f.build(None).unwrap_err().field, "a[1]");

        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.b.push(0.0);
        assert_eq!(f.build(None).unwrap_err().field, "b");

        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.agent_graphs[1].edges.clear();
        let e = f.build(None).unwrap_err();
        assert!(e.topology);
        assert_eq!(e.field, "agent_graphs[1]");
        assert!(e.message.contains("cluster 1"), "{}", e.message);

        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.layout.column = None;
        assert_eq!(f.build(Some(Scheme::Column)).unwrap_err().field, "layout.column");

        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.layout.row.as_mut().unwrap().agent_cols[1].push(1);
        let e = f.build(None).unwrap_err();
        assert!(e.topology, "{e}");

        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.layout.row.as_mut().unwrap().cluster_rows = vec![2, 1];
        let e = f.build(None).unwrap_err();
        assert!(!e.topology && e.field == "layout.row", "{e}");

        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.sim.max_time = 0.0;
        assert_eq!(f.build(None).unwrap_err().field, "sim");

        let mut f = ScenarioFile::parse(IDENTITY).unwrap();
        f.sim.reference = Some(vec![1.0]);
        assert_eq!(f.build(None).unwrap_err().field, "sim.reference");
    }
}
