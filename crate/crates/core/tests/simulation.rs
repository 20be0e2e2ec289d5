mod common;

use bilayer_core::dynamics::reassemble;
use bilayer_core::simulator::{closeness_metric, fit_convergence_rate, integrate, integrate_from, InitMode, StepSize, StopReason};
use bilayer_core::spectral::{assemble_compact, certificate_state, CompactSystem};
use bilayer_core::{DenseMatrix, DenseVector, Graph, Layout, NetworkState, ProblemInstance, Scheme, SimConfig, Topology};
use common::{instance, random_instance, rng};
use nalgebra::{DMatrix, DVector};

/// `exp(T·[[Q, d], [0, 0]]) · (y₀, 1)` solves `ẏ = Q y + d` exactly.
fn expm_oracle(cs: &CompactSystem, y0: &DenseVector, t: f64) -> DenseVector {
    let n = cs.q.rows();
    let d = cs.drift();
    let mut aug = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = cs.q[(i, j)] * t;
        }
        aug[(i, n)] = d[i] * t;
    }
    let mut y = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        y[i] = y0[i];
    }
    y[n] = 1.0;
    let out = aug.exp() * y;
    DenseVector::from_fn(n, |i| out[i])
}

fn fixed(h: f64, t: f64) -> SimConfig {
    SimConfig { step_size: StepSize::Fixed(h), max_time: t, stationarity_tol: 1e-300, ..Default::default() }
}

fn single_agent(scheme: Scheme) -> (bilayer_core::Partition, Topology) {
    let topo = Topology::new(Graph::path(1).unwrap(), vec![Graph::path(1).unwrap()]).unwrap();
    let layout = match scheme {
        Scheme::Row => Layout::Rows { cluster_rows: vec![1], agent_cols: vec![vec![1]], offsets: None },
        Scheme::Column => Layout::Columns { cluster_cols: vec![1], agent_rows: vec![vec![1]], cluster_offsets: None },
    };
    let part = ProblemInstance::new(
        DenseMatrix::from_rows(&[[2.0]]).unwrap(),
        DenseVector::new(vec![4.0]).unwrap(),
        topo.clone(),
        layout,
    )
    .unwrap()
    .partition()
    .unwrap();
    (part, topo)
}

#[test]
fn single_agent_converges_to_two() {
    for scheme in [Scheme::Row, Scheme::Column] {
        let (part, topo) = single_agent(scheme);
        let out = integrate(&part, &topo, &SimConfig::default()).unwrap();
        assert_eq!(out.stop, StopReason::Stationary);
        assert!((out.final_state.x[0][0][0] - 2.0).abs() < 1e-9);
        // ż = 2x − 4 with x = 2 − 2e^{−4t} integrates to −1
        assert!((out.final_state.z[0][0][0] + 1.0).abs() < 1e-9);
        let cs = assemble_compact(&part, &topo).unwrap();
        let exact = expm_oracle(&cs, &DenseVector::zeros(2), 1.0);
        let run = integrate(&part, &topo, &fixed(1e-3, 1.0)).unwrap();
        assert!(run.final_state.stacked().sub(&exact).norm_inf() < 1e-10);
    }
}

#[test]
fn rk4_matches_matrix_exponential() {
    let mut r = rng(31);
    for k in 0..6 {
        let scheme = if k % 2 == 0 { Scheme::Row } else { Scheme::Column };
        let inst = random_instance(&mut r, scheme, 5, false);
        let cs = assemble_compact(&inst.part, &inst.topo).unwrap();
        let mut cfg = fixed(1e-3, 2.0);
        cfg.init_mode = InitMode::SeededRandom { amplitude: 1.0 };
        cfg.rng_seed = k;
        let y0 = cfg.initial_state(&inst.part).stacked();
        let run = integrate(&inst.part, &inst.topo, &cfg).unwrap();
        assert_eq!(run.final_state.time, 2.0);
        let err = run.final_state.stacked().sub(&expm_oracle(&cs, &y0, 2.0)).norm_inf();
        assert!(err < 1e-6, "{scheme:?}: {err:e}");
    }
}

#[test]
fn certificate_is_a_fixed_point() {
    let mut r = rng(32);
    for scheme in [Scheme::Row, Scheme::Column] {
        let inst = random_instance(&mut r, scheme, 6, false);
        let cs = assemble_compact(&inst.part, &inst.topo).unwrap();
        let start = certificate_state(&cs, &inst.part).unwrap();
        let out = integrate_from(&inst.part, &inst.topo, &fixed(0.01, 5.0), start.clone()).unwrap();
        assert!(out.final_state.stacked().sub(&start.stacked()).norm_inf() < 1e-12);
    }
}

#[test]
fn six_by_five_three_clusters_converges() {
    for scheme in [Scheme::Row, Scheme::Column] {
        let mut r = rng(33);
        let inst = instance(&mut r, scheme, 6, 5, &[2, 2, 1]);
        let out = integrate(&inst.part, &inst.topo, &SimConfig { max_time: 5000.0, ..Default::default() }).unwrap();
        out.check(1e-8).unwrap();
        let x = reassemble(&inst.part, &out.final_state);
        assert!(x.sub(&inst.x_true).norm_inf() < 1e-6);
        let v0 = out.trajectory.samples[0].v;
        assert!(out.trajectory.samples.last().unwrap().v < 1e-8 * v0);
        let fit = fit_convergence_rate(&out.trajectory).unwrap();
        assert!(fit.slope < 0.0 && fit.r_squared > 0.99, "{fit:?}");
    }
}

#[test]
fn runs_are_deterministic() {
    let mut r = rng(34);
    let inst = random_instance(&mut r, Scheme::Column, 6, true);
    let cfg = SimConfig { init_mode: InitMode::SeededRandom { amplitude: 3.0 }, rng_seed: 9, max_time: 20.0, ..Default::default() };
    let a = integrate(&inst.part, &inst.topo, &cfg).unwrap();
    let b = integrate(&inst.part, &inst.topo, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn different_inits_both_solve() {
    // underdetermined: the limits may differ, the residuals may not
    let mut r = rng(35);
    for scheme in [Scheme::Row, Scheme::Column] {
        let inst = instance(&mut r, scheme, 3, 6, &[2, 3]);
        let mut limits = Vec::new();
        for seed in [1, 2] {
            let cfg = SimConfig {
                init_mode: InitMode::SeededRandom { amplitude: 2.0 },
                rng_seed: seed,
                max_time: 5000.0,
                ..Default::default()
            };
            let out = integrate(&inst.part, &inst.topo, &cfg).unwrap();
            out.check(1e-6).unwrap();
            limits.push(reassemble(&inst.part, &out.final_state));
        }
        let a = inst.part.assemble_a();
        let b = inst.part.assemble_b();
        for x in limits {
            assert!(a.matvec(&x).sub(&b).norm2() < 1e-6);
        }
    }
}

#[test]
fn inconsistent_system_is_reported() {
    let topo = Topology::new(Graph::path(1).unwrap(), vec![Graph::path(2).unwrap()]).unwrap();
    let part = ProblemInstance::new(
        DenseMatrix::from_rows(&[[1.0], [1.0]]).unwrap(),
        DenseVector::new(vec![0.0, 1.0]).unwrap(),
        topo.clone(),
        Layout::Columns { cluster_cols: vec![1], agent_rows: vec![vec![1, 1]], cluster_offsets: None },
    )
    .unwrap()
    .partition()
    .unwrap();
    let out = integrate(&part, &topo, &SimConfig { max_time: 200.0, ..Default::default() }).unwrap();
    assert!(out.check(1e-6).is_err());
}

#[test]
fn closeness_is_zero_on_replicated_solution() {
    let mut r = rng(36);
    let inst = random_instance(&mut r, Scheme::Row, 6, true);
    let cs = assemble_compact(&inst.part, &inst.topo).unwrap();
    let s: NetworkState = certificate_state(&cs, &inst.part).unwrap();
    assert!(closeness_metric(&inst.part, &s, &inst.x_true).unwrap() < 1e-20);
}
