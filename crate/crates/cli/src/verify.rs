//! `verify`: randomized spectrum and convergence checks for both schemes.

use std::fmt::Write as _;

use bilayer_core::dynamics::{agent_update, reassemble};
use bilayer_core::simulator::{integrate, SimConfig};
use bilayer_core::spectral::{assemble_compact, certificate_state, check_lemma1, check_q_spectrum};
use bilayer_core::Scheme;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::generate::{conditioned_instance, instance, lemma_triple, random_shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub trials: usize,
    pub max_dim: usize,
    pub seed: u64,
}

/// Residual bound a convergence run must meet.
pub const RUN_TOL: f64 = 1e-6;
/// Time budget of each convergence run.
pub const RUN_MAX_TIME: f64 = 20000.0;
/// Convergence runs use matrices with at most this condition number; the
/// spectrum checks use unrestricted draws.
pub const RUN_MAX_COND: f64 = 10.0;
/// Bound on the derivative at the equilibrium certificate.
pub const CERTIFICATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub passed: usize,
    pub total: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) -> bool {
        self.total += 1;
        self.passed += usize::from(ok);
        ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub text: String,
    pub lemma: Tally,
    pub spectrum: [Tally; 2],
    pub convergence: [Tally; 2],
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        [self.lemma].iter().chain(&self.spectrum).chain(&self.convergence).all(|t| t.passed == t.total)
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

/// Runs the suite. The report contains no timings, so a fixed seed
/// reproduces it byte for byte.
pub fn verify(opts: VerifyOptions) -> VerifyReport {
    assert!(opts.trials >= 1 && opts.max_dim >= 1);
    let mut master = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut text = String::new();
    let mut lemma = Tally::default();
    let mut spectrum = [Tally::default(); 2];
    let mut convergence = [Tally::default(); 2];
    let _ = writeln!(text, "verify trials={} max_dim={} seed={}", opts.trials, opts.max_dim, opts.seed);

    for trial in 0..opts.trials {
        let trial_seed = master.next_u64();
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let _ = writeln!(text, "trial {} seed={trial_seed:#018x}", trial + 1);

        let triple = lemma_triple(&mut rng, opts.max_dim);
        let (ok, detail) = match check_lemma1(&triple) {
            Ok(v) => (v.passed(), format!("max_re={:.3e} max_im={:.3e} rank={}/{}", v.max_real, v.max_abs_imag, v.spectrum.rank, v.spectrum.rank_sq)),
            Err(e) => (false, e.to_string()),
        };
        lemma.record(ok);
        let _ = writeln!(text, "  lemma {}x{}: {} {detail}", triple.matrix().rows(), triple.matrix().cols(), mark(ok));

        for (k, scheme) in [Scheme::Row, Scheme::Column].into_iter().enumerate() {
            let shape = random_shape(&mut rng, scheme, opts.max_dim, 1..=4, false);
            let g = instance(&mut rng, &shape);
            let name = match scheme {
                Scheme::Row => "row",
                Scheme::Column => "column",
            };
            let _ = write!(text, "  {name} check m={} n={} agents={:?}:", shape.m, shape.n, shape.agents);

            let cs = assemble_compact(&g.part, g.topology());
            let spec = cs.clone().and_then(|cs| check_q_spectrum(&cs));
            let cert = cs.and_then(|cs| certificate_state(&cs, &g.part)).map(|s| {
                agent_update(&g.part, g.topology(), &s).map_or(f64::INFINITY, |d| d.norm_inf())
            });
            let ok = matches!(&spec, Ok(v) if v.passed()) && matches!(cert, Ok(d) if d < CERTIFICATE_TOL);
            spectrum[k].record(ok);
            match (&spec, &cert) {
                (Ok(v), Ok(d)) => {
                    let _ = writeln!(
                        text,
                        " spectrum {} (max_re={:.3e} max_im={:.3e} rank={}/{} certificate={d:.3e})",
                        mark(ok),
                        v.max_real,
                        v.max_abs_imag,
                        v.spectrum.rank,
                        v.spectrum.rank_sq
                    );
                }
                (Err(e), _) | (_, Err(e)) => {
                    let _ = writeln!(text, " spectrum FAIL ({e})");
                }
            }

            let shape = random_shape(&mut rng, scheme, opts.max_dim, 1..=4, false);
            let g = conditioned_instance(&mut rng, &shape, RUN_MAX_COND);
            let _ = write!(text, "  {name} run m={} n={} agents={:?}:", shape.m, shape.n, shape.agents);
            let cfg = SimConfig { max_time: RUN_MAX_TIME, ..SimConfig::default() };
            match integrate(&g.part, g.topology(), &cfg) {
                Ok(out) => {
                    let x = reassemble(&g.part, &out.final_state);
                    let solve = g.part.assemble_a().matvec(&x).sub(&g.part.assemble_b()).norm2();
                    let ok = convergence[k].record(out.check(RUN_TOL).is_ok() && solve < RUN_TOL);
                    let _ = writeln!(
                        text,
                        " {} (t={:.3} residual={:.3e} |Ax-b|={solve:.3e})",
                        mark(ok),
                        out.final_state.time,
                        out.final_residuals.max_all()
                    );
                }
                Err(e) => {
                    convergence[k].record(false);
                    let _ = writeln!(text, " FAIL ({e})");
                }
            }
        }
    }

    let line = |label: &str, t: Tally| format!("{label}: {}/{} passed\n", t.passed, t.total);
    text.push_str(&line("lemma", lemma));
    text.push_str(&line("row spectrum+certificate", spectrum[0]));
    text.push_str(&line("row convergence", convergence[0]));
    text.push_str(&line("column spectrum+certificate", spectrum[1]));
    text.push_str(&line("column convergence", convergence[1]));
    let report = VerifyReport { text, lemma, spectrum, convergence };
    let verdict = if report.all_passed() { "PASS" } else { "FAIL" };
    VerifyReport { text: format!("{}result: {verdict}\n", report.text), ..report }
}
