//! `run`: simulate one scenario and write its artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use bilayer_core::dynamics::reassemble;
use bilayer_core::simulator::{fit_convergence_rate, integrate, RateFit, SimError, SimOutcome, StopReason};
use bilayer_core::spectral::{assemble_compact, check_q_spectrum};
use bilayer_core::{Partition, ResidualReport, Scheme, Trajectory};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::scenario::{SchemeName, ScenarioFile};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRAJECTORY_HEADER: [&str; 5] = ["time", "V", "conservation_residual", "consensus_residual", "overall_residual"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub conservation: Vec<f64>,
    pub consensus: Vec<f64>,
    pub overall: f64,
    pub max: f64,
}

impl From<&ResidualReport> for ResidualSummary {
    fn from(r: &ResidualReport) -> Self {
        Self { conservation: r.conservation.clone(), consensus: r.consensus.clone(), overall: r.overall, max: r.max_all() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

impl From<RateFit> for FitSummary {
    fn from(f: RateFit) -> Self {
        Self { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared, samples: f.samples }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub max_abs_imag: f64,
    pub max_real: f64,
    pub rank: usize,
    pub rank_sq: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub stationary: bool,
    pub residuals_ok: bool,
    pub q_spectrum_ok: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    /// `x[i][j]` of agent `j` in cluster `i`.
    pub x: Vec<Vec<Vec<f64>>>,
    pub z: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scheme: SchemeName,
    pub m: usize,
    pub n: usize,
    pub agents_per_cluster: Vec<usize>,
    pub step_size: f64,
    pub steps: usize,
    pub final_time: f64,
    pub stop: String,
    pub final_derivative_norm: f64,
    pub v_initial: f64,
    pub v_final: f64,
    pub reference: Vec<f64>,
    pub solution: Vec<f64>,
    pub solution_residual: f64,
    pub residual_tol: f64,
    pub final_residuals: ResidualSummary,
    /// Absent when too few samples lie above the fit floor.
    pub fit: Option<FitSummary>,
    pub q_spectrum: Option<SpectrumSummary>,
    pub verdicts: Verdicts,
    pub final_state: FinalState,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub scenario: PathBuf,
    pub out: Option<PathBuf>,
    pub scheme: Option<Scheme>,
}

/// Largest `Q` for which `run` also reports the spectrum check.
pub const SPECTRUM_LIMIT: usize = 400;

/// `./out/<scenario stem>/`
pub fn default_out_dir(scenario: &Path) -> PathBuf {
    let stem = scenario.file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned());
    PathBuf::from("out").join(stem)
}

/// Runs the scenario and writes artifacts; an unconverged or inconsistent
/// run still writes them before reporting the error.
pub fn run(opts: &RunOptions) -> Result<(PathBuf, RunSummary), CliError> {
    let file = ScenarioFile::load(&opts.scenario)?;
    let scenario = file.build(opts.scheme).map_err(|e| e.into_cli(&opts.scenario))?;
    let part = scenario
        .instance
        .partition()
        .map_err(|e| CliError::Internal(format!("validated layout failed to partition: {e}")))?;
    let topo = &scenario.instance.topology;
    let outcome = integrate(&part, topo, &scenario.config).map_err(|e| match e {
        SimError::NonFiniteState { .. } => CliError::Divergence(format!("{e}; choose a smaller sim.step_size")),
        other => CliError::Internal(other.to_string()),
    })?;

    let q_spectrum = spectrum_summary(&part, topo)?;
    let summary = summarize(&part, &outcome, scenario.residual_tol, q_spectrum);
    let dir = opts.out.clone().unwrap_or_else(|| default_out_dir(&opts.scenario));
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    write_trajectory(&dir.join(TRAJECTORY_FILE), &outcome.trajectory)?;
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Internal(e.to_string()))?;
    let summary_path = dir.join(SUMMARY_FILE);
    fs::write(&summary_path, json + "\n").map_err(|e| CliError::io(&summary_path, e))?;

    if let Err(e) = outcome.check(scenario.residual_tol) {
        return Err(CliError::Unconverged(format!("{e} (tolerance {:e}); artifacts in {}", scenario.residual_tol, dir.display())));
    }
    if !summary.verdicts.q_spectrum_ok {
        return Err(CliError::Unconverged(format!("spectrum check of Q failed; artifacts in {}", dir.display())));
    }
    Ok((dir, summary))
}

fn spectrum_summary(part: &Partition, topo: &bilayer_core::Topology) -> Result<Option<SpectrumSummary>, CliError> {
    let cs = assemble_compact(part, topo).map_err(|e| CliError::Internal(e.to_string()))?;
    if cs.q.rows() > SPECTRUM_LIMIT {
        return Ok(None);
    }
    let v = check_q_spectrum(&cs).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(Some(SpectrumSummary {
        max_abs_imag: v.max_abs_imag,
        max_real: v.max_real,
        rank: v.spectrum.rank,
        rank_sq: v.spectrum.rank_sq,
        passed: v.passed(),
    }))
}

fn summarize(part: &Partition, out: &SimOutcome, residual_tol: f64, q_spectrum: Option<SpectrumSummary>) -> RunSummary {
    let solution = reassemble(part, &out.final_state);
    let solution_residual = part.assemble_a().matvec(&solution).sub(&part.assemble_b()).norm2();
    let samples = &out.trajectory.samples;
    let stationary = out.stop == StopReason::Stationary;
    let residuals_ok = out.final_residuals.max_all() <= residual_tol;
    let q_spectrum_ok = q_spectrum.as_ref().is_none_or(|s| s.passed);
    let nested = |v: &Vec<Vec<bilayer_core::DenseVector>>| -> Vec<Vec<Vec<f64>>> {
        v.iter().map(|cl| cl.iter().map(|x| x.as_slice().to_vec()).collect()).collect()
    };
    RunSummary {
        scheme: part.scheme().into(),
        m: part.m(),
        n: part.n(),
        agents_per_cluster: (0..part.cluster_count()).map(|i| part.agent_count(i)).collect(),
        step_size: out.step_size,
        steps: out.steps,
        final_time: out.final_state.time,
        stop: match out.stop {
            StopReason::Stationary => "stationary".into(),
            StopReason::MaxTime => "max_time".into(),
        },
        final_derivative_norm: out.final_derivative_norm,
        v_initial: samples.first().map_or(0.0, |s| s.v),
        v_final: samples.last().map_or(0.0, |s| s.v),
        reference: out.reference.as_slice().to_vec(),
        solution: solution.into_vec(),
        solution_residual,
        residual_tol,
        final_residuals: (&out.final_residuals).into(),
        fit: fit_convergence_rate(&out.trajectory).ok().map(Into::into),
        q_spectrum,
        verdicts: Verdicts { stationary, residuals_ok, q_spectrum_ok, converged: stationary && residuals_ok && q_spectrum_ok },
        final_state: FinalState { x: nested(&out.final_state.x), z: nested(&out.final_state.z) },
    }
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::Artifact { path: path.to_path_buf(), message: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(TRAJECTORY_HEADER).map_err(csv_err)?;
    for s in &traj.samples {
        let r = &s.residuals;
        w.write_record([s.time, s.v, r.max_conservation(), r.max_consensus(), r.overall].map(|x| x.to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
