//! Fixed-step RK4 integration of the per-agent flows.
//!
//! States advance in synchronous rounds: every Runge-Kutta stage evaluates all
//! agents on one frozen snapshot through [`crate::dynamics`]. The compact
//! matrix `Q` is touched once, only to size the step automatically.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dynamics::{self, DynamicsError, NetworkState, ResidualReport, StateDerivative};
use crate::graph::Topology;
use crate::linalg::{solve_least_squares, DenseVector, LinalgError};
use crate::partition::Partition;
use crate::spectral::{assemble_compact, SpectralError};

/// Samples with `V` at or below this are excluded from the rate fit.
pub const FIT_FLOOR: f64 = 1e-14;
pub const MIN_FIT_SAMPLES: usize = 10;
/// Upper limit for automatically chosen steps.
pub const MAX_AUTO_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Shape(#[from] DynamicsError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("reference solution has dimension {found}, expected {expected}")]
    ReferenceShape { expected: usize, found: usize },
    #[error("state became non-finite at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("rate fit needs at least {MIN_FIT_SAMPLES} samples with V > {FIT_FLOOR:e}, found {found}")]
    InsufficientSamples { found: usize },
    #[error("run ended {} with max residual {max_residual:e}", if *.stationary { "stationary" } else { "at max_time" })]
    InconsistentOrUnconverged { stationary: bool, max_residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `min(0.9 · 2 / ρ̂, 0.1)` with `ρ̂` a Gershgorin bound on `Q`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    Zeros,
    /// Every entry uniform in `[−amplitude, amplitude]`.
    SeededRandom { amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub step_size: StepSize,
    pub max_time: f64,
    /// Stop once `‖derivative‖_∞` drops below this.
    pub stationarity_tol: f64,
    /// Record a sample every this many steps.
    pub record_every: usize,
    pub rng_seed: u64,
    pub init_mode: InitMode,
    /// `x*` for `V(t)`; defaults to the least-squares solution of `Ax = b`.
    pub reference: Option<DenseVector>,
    /// Keep a full state snapshot with every sample.
    pub keep_states: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step_size: StepSize::Auto,
            max_time: 1000.0,
            stationarity_tol: 1e-10,
            record_every: 10,
            rng_seed: 0,
            init_mode: InitMode::Zeros,
            reference: None,
            keep_states: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if let StepSize::Fixed(h) = self.step_size {
            if !(h.is_finite() && h > 0.0) {
                return Err(SimError::InvalidConfig("step_size must be positive"));
            }
        }
        if !(self.max_time.is_finite() && self.max_time > 0.0) {
            return Err(SimError::InvalidConfig("max_time must be positive"));
        }
        if !(self.stationarity_tol.is_finite() && self.stationarity_tol > 0.0) {
            return Err(SimError::InvalidConfig("stationarity_tol must be positive"));
        }
        if self.record_every == 0 {
            return Err(SimError::InvalidConfig("record_every must be at least 1"));
        }
        if let InitMode::SeededRandom { amplitude } = self.init_mode {
            if !(amplitude.is_finite() && amplitude >= 0.0) {
                return Err(SimError::InvalidConfig("init amplitude must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn initial_state(&self, part: &Partition) -> NetworkState {
        match self.init_mode {
            InitMode::Zeros => NetworkState::zeros(part),
            InitMode::SeededRandom { amplitude } => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
                NetworkState::from_fn(part, |_| amplitude * (2.0 * unit_f64(&mut rng) - 1.0))
            }
        }
    }
}

fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub v: f64,
    pub residuals: ResidualReport,
    pub state: Option<NetworkState>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Stationary,
    MaxTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub trajectory: Trajectory,
    pub final_state: NetworkState,
    pub final_residuals: ResidualReport,
    pub final_derivative_norm: f64,
    pub stop: StopReason,
    pub step_size: f64,
    pub steps: usize,
    pub reference: DenseVector,
}

impl SimOutcome {
    /// Accepts the run only if it reached stationarity with every residual
    /// at or below `tol`.
    pub fn check(&self, tol: f64) -> Result<(), SimError> {
        let max_residual = self.final_residuals.max_all();
        let stationary = self.stop == StopReason::Stationary;
        if !stationary || !(max_residual <= tol) {
            return Err(SimError::InconsistentOrUnconverged { stationary, max_residual });
        }
        Ok(())
    }
}

/// Step size the integrator would use for `cfg`.
pub fn choose_step(part: &Partition, topo: &Topology, cfg: &SimConfig) -> Result<f64, SimError> {
    match cfg.step_size {
        StepSize::Fixed(h) => Ok(h),
        StepSize::Auto => {
            let rho = assemble_compact(part, topo)?.gershgorin_bound();
            Ok(if rho > 0.0 { (0.9 * 2.0 / rho).min(MAX_AUTO_STEP) } else { MAX_AUTO_STEP })
        }
    }
}

fn reference_for(part: &Partition, cfg: &SimConfig) -> Result<DenseVector, SimError> {
    match &cfg.reference {
        Some(r) if r.dim() != part.n() => Err(SimError::ReferenceShape { expected: part.n(), found: r.dim() }),
        Some(r) => Ok(r.clone()),
        None => Ok(solve_least_squares(&part.assemble_a(), &part.assemble_b())?),
    }
}

/// Integrates from the configured initial state.
pub fn integrate(part: &Partition, topo: &Topology, cfg: &SimConfig) -> Result<SimOutcome, SimError> {
    integrate_from(part, topo, cfg, cfg.initial_state(part))
}

/// Integrates from an explicit initial state (its `time` is the start time).
pub fn integrate_from(
    part: &Partition,
    topo: &Topology,
    cfg: &SimConfig,
    initial: NetworkState,
) -> Result<SimOutcome, SimError> {
    cfg.validate()?;
    // validates topology and state shapes once
    dynamics::agent_update(part, topo, &initial)?;
    let h = choose_step(part, topo, cfg)?;
    let reference = reference_for(part, cfg)?;
    let start = initial.time;
    let end = start + cfg.max_time;

    let (a, b) = (part.assemble_a(), part.assemble_b());
    let record = |s: &NetworkState| Sample {
        time: s.time,
        v: closeness_metric_unchecked(part, s, &reference),
        residuals: dynamics::residuals_with(part, s, &a, &b),
        state: if cfg.keep_states { Some(s.clone()) } else { None },
    };

    let mut state = initial;
    let mut trajectory = Trajectory { samples: alloc::vec![record(&state)] };
    let mut steps = 0usize;
    let f = |s: &NetworkState, out: &mut StateDerivative| dynamics::derivative_into(part, topo, s, out);
    let mut k = [(); 4].map(|()| StateDerivative::zeros_like(&state));
    let mut stage = state.clone();
    let mut next = state.clone();

    let (stop, final_norm) = loop {
        f(&state, &mut k[0]);
        let norm = k[0].norm_inf();
        if norm < cfg.stationarity_tol {
            break (StopReason::Stationary, norm);
        }
        let remaining = end - state.time;
        if remaining <= h * 1e-9 {
            break (StopReason::MaxTime, norm);
        }
        let dt = h.min(remaining);
        for (s, (w, d)) in [(dt / 2.0, 0), (dt / 2.0, 1), (dt, 2)].into_iter().enumerate() {
            set_offset(&mut stage, &state, w, &k[d]);
            let (_, rest) = k.split_at_mut(s + 1);
            f(&stage, &mut rest[0]);
        }
        rk4_combine(&mut next, &state, dt, &k);
        steps += 1;
        next.time = if dt < h { end } else { start + steps as f64 * h };
        if !next.is_finite() {
            return Err(SimError::NonFiniteState { time: next.time });
        }
        core::mem::swap(&mut state, &mut next);
        if steps.is_multiple_of(cfg.record_every) {
            trajectory.samples.push(record(&state));
        }
    };

    if trajectory.samples.last().map(|s| s.time) != Some(state.time) {
        trajectory.samples.push(record(&state));
    }
    let final_residuals = dynamics::residuals_unchecked(part, &state);
    Ok(SimOutcome {
        trajectory,
        final_state: state,
        final_residuals,
        final_derivative_norm: final_norm,
        stop,
        step_size: h,
        steps,
        reference,
    })
}

fn zip_slots<'a>(
    out: &'a mut NetworkState,
    base: &'a NetworkState,
) -> impl Iterator<Item = (&'a mut [f64], &'a [f64], bool, usize, usize)> {
    let xs = out.x.iter_mut().zip(&base.x).enumerate().flat_map(|(i, (o, b))| {
        o.iter_mut().zip(b).enumerate().map(move |(j, (o, b))| (o.as_mut_slice(), b.as_slice(), true, i, j))
    });
    let zs = out.z.iter_mut().zip(&base.z).enumerate().flat_map(|(i, (o, b))| {
        o.iter_mut().zip(b).enumerate().map(move |(j, (o, b))| (o.as_mut_slice(), b.as_slice(), false, i, j))
    });
    xs.chain(zs)
}

fn slot_of(d: &StateDerivative, is_x: bool, i: usize, j: usize) -> &[f64] {
    if is_x {
        d.dx[i][j].as_slice()
    } else {
        d.dz[i][j].as_slice()
    }
}

/// `out = base + w · d`
fn set_offset(out: &mut NetworkState, base: &NetworkState, w: f64, d: &StateDerivative) {
    for (o, b, is_x, i, j) in zip_slots(out, base) {
        for ((o, b), dv) in o.iter_mut().zip(b).zip(slot_of(d, is_x, i, j)) {
            *o = b + w * dv;
        }
    }
}

/// `out = base + dt/6 · (k₁ + 2k₂ + 2k₃ + k₄)`
fn rk4_combine(out: &mut NetworkState, base: &NetworkState, dt: f64, k: &[StateDerivative; 4]) {
    for (o, b, is_x, i, j) in zip_slots(out, base) {
        let slot = |n: usize| slot_of(&k[n], is_x, i, j);
        let (k1, k2, k3, k4) = (slot(0), slot(1), slot(2), slot(3));
        for (r, o) in o.iter_mut().enumerate() {
            let incr = k1[r] + 2.0 * k2[r] + 2.0 * k3[r] + k4[r];
            *o = b[r] + dt / 6.0 * incr;
        }
    }
}

/// `V = ½ Σ_i ‖𝒙_i − x*‖²` (row scheme) or `V = ½ Σ_i Σ_j ‖x_ij − x*_i‖²`
/// (column scheme, `x*_i` the cluster's slice of `x*`).
pub fn closeness_metric(part: &Partition, s: &NetworkState, x_star: &DenseVector) -> Result<f64, SimError> {
    s.check_shape(part)?;
    if x_star.dim() != part.n() {
        return Err(SimError::ReferenceShape { expected: part.n(), found: x_star.dim() });
    }
    Ok(closeness_metric_unchecked(part, s, x_star))
}

fn closeness_metric_unchecked(part: &Partition, s: &NetworkState, x_star: &DenseVector) -> f64 {
    let r = x_star.as_slice();
    let mut total = 0.0;
    match part {
        Partition::Row(p) => {
            for (i, cl) in s.x.iter().enumerate() {
                for (j, xij) in cl.iter().enumerate() {
                    total += sq_dist(xij.as_slice(), &r[p.col_range(i, j)]);
                }
            }
        }
        Partition::Column(p) => {
            for (i, cl) in s.x.iter().enumerate() {
                for xij in cl {
                    total += sq_dist(xij.as_slice(), &r[p.col_range(i)]);
                }
            }
        }
    }
    0.5 * total
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Least-squares line through `(t, ln V)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Fits `ln V(t)` from the first sample up to the last one with
/// `V > FIT_FLOOR`; samples in that window with `V ≤ FIT_FLOOR` are skipped.
pub fn fit_convergence_rate(traj: &Trajectory) -> Result<RateFit, SimError> {
    let pairs: Vec<(f64, f64)> = traj.samples.iter().map(|s| (s.time, s.v)).collect();
    fit_log_linear(&pairs)
}

/// [`fit_convergence_rate`] on raw `(t, V)` pairs.
pub fn fit_log_linear(pairs: &[(f64, f64)]) -> Result<RateFit, SimError> {
    let last = pairs.iter().rposition(|p| p.1 > FIT_FLOOR);
    let points: Vec<(f64, f64)> = match last {
        Some(last) => pairs[..=last].iter().filter(|p| p.1 > FIT_FLOOR).map(|p| (p.0, libm::log(p.1))).collect(),
        None => Vec::new(),
    };
    if points.len() < MIN_FIT_SAMPLES {
        return Err(SimError::InsufficientSamples { found: points.len() });
    }
    let n = points.len() as f64;
    let mean_t = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = points.iter().map(|p| (p.0 - mean_t) * (p.0 - mean_t)).sum();
    let sty: f64 = points.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = mean_y - slope * mean_t;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit { slope, intercept, r_squared, samples: points.len() })
}
