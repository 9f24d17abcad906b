//! Acceptance suite. Each test prints one PASS/FAIL line. Tests hold a
//! shared lock so that their runtime bounds are measured one at a time.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use varmix::engine::FitStatus;
use varmix::families::{identity_checks, z_density};
use varmix::path::PointStatus;
use varmix::simbench::experiments::*;
use varmix::simbench::BenchAlgorithm;

static SERIAL: Mutex<()> = Mutex::new(());

fn run<F: FnOnce() -> Result<String, String>>(id: u32, limit: Duration, body: F) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let t = Instant::now();
    let outcome = body();
    let elapsed = t.elapsed();
    let outcome = match outcome {
        Ok(detail) if elapsed > limit => Err(format!("{detail}; runtime {elapsed:.1?} exceeds {limit:?}")),
        Ok(detail) => Ok(format!("{detail}; runtime {elapsed:.1?}")),
        Err(e) => Err(format!("{e}; runtime {elapsed:.1?}")),
    };
    match outcome {
        Ok(detail) => println!("criterion {id}: PASS ({detail})"),
        Err(detail) => {
            println!("criterion {id}: FAIL ({detail})");
            panic!("criterion {id} failed: {detail}");
        }
    }
}

fn check(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

#[test]
fn criterion_01_moment_oracles() {
    run(1, secs(30), || {
        let rows = moment_oracle_suite().map_err(|e| e.to_string())?;
        let worst = rows.iter().max_by(|a, b| a.rel_error.total_cmp(&b.rel_error)).unwrap();
        let families = rows.iter().map(|r| r.family.as_str()).collect::<std::collections::BTreeSet<_>>();
        check(
            rows.len() == 300 && worst.rel_error <= 1e-6,
            format!(
                "{} families x 50 points, worst rel. error {:.2e} ({} at x={:.2})",
                families.len(),
                worst.rel_error,
                worst.family,
                worst.x
            ),
        )
    });
}

#[test]
fn criterion_02_mixture_identities() {
    run(2, secs(30), || {
        let rows = identity_checks().map_err(|e| e.to_string())?;
        let mut worst_identity = 0.0_f64;
        let mut worst_logistic = 0.0_f64;
        for r in &rows {
            if r.identity == "z_logistic" {
                worst_logistic = worst_logistic.max((r.closed_form - r.quadrature).abs());
            } else {
                worst_identity = worst_identity.max(r.rel_error);
            }
        }
        // Independent spot check of the logistic special case.
        for t in [-2.5, -0.3, 0.0, 1.7] {
            let z = z_density(t, 0.0, 1.0, 0.5).map_err(|e| e.to_string())?;
            worst_logistic = worst_logistic.max((z - t.exp() / (1.0 + t.exp())).abs());
        }
        check(
            worst_identity <= 1e-5 && worst_logistic <= 1e-12,
            format!("worst identity rel. error {worst_identity:.2e}, logistic case abs. error {worst_logistic:.2e}"),
        )
    });
}

#[test]
fn criterion_03_monotone_ascent() {
    run(3, secs(120), || {
        let runs = monotone_suite(20, DEFAULT_SEED).map_err(|e| e.to_string())?;
        let worst = runs.iter().max_by(|a, b| a.max_increase.total_cmp(&b.max_increase)).unwrap();
        check(
            runs.len() == 600 && worst.max_increase <= 1e-10,
            format!(
                "{} traces, largest step increase {:.2e} ({} / {} / accel={})",
                runs.len(),
                worst.max_increase,
                worst.likelihood,
                worst.penalty,
                worst.accel
            ),
        )
    });
}

#[test]
fn criterion_04_optimizer_agreement() {
    run(4, secs(60), || {
        let r = optimizer_agreement(DEFAULT_SEED).map_err(|e| e.to_string())?;
        let all_conv = r.rows.iter().all(|row| row.status == PointStatus::Converged);
        let statuses: Vec<String> = r.rows.iter().map(|row| format!("{}={}", row.algorithm.name(), row.status.name())).collect();
        check(
            r.rows.len() == 5 && all_conv && r.max_deviation <= 1e-4,
            format!("{}; max pairwise deviation {:.2e}", statuses.join(" "), r.max_deviation),
        )
    });
}

#[test]
fn criterion_05_robustness() {
    run(5, secs(300), || {
        let r = robustness(DEFAULT_SEED, 10).map_err(|e| e.to_string())?;
        let em_rows: Vec<_> = r
            .rows
            .iter()
            .filter(|x| matches!(x.cell.algorithm, BenchAlgorithm::Em | BenchAlgorithm::EmAccel))
            .collect();
        let em_ok = em_rows.len() == 20 && em_rows.iter().all(|x| x.cell.status == PointStatus::Converged);
        let irls_failures = r
            .rows
            .iter()
            .filter(|x| x.cell.algorithm == BenchAlgorithm::Irls)
            .filter(|x| matches!(x.cell.status, PointStatus::Diverged | PointStatus::Singular))
            .count();
        check(
            em_ok && irls_failures >= 1,
            format!(
                "EM/accelerated EM converged {}/20; IRLS diverged or singular on {irls_failures}/10 near-separable runs",
                em_rows.iter().filter(|x| x.cell.status == PointStatus::Converged).count()
            ),
        )
    });
}

#[test]
fn criterion_06_acceleration() {
    run(6, secs(120), || {
        let r = acceleration_benefit(DEFAULT_SEED).map_err(|e| e.to_string())?;
        let ok = r.em_status == FitStatus::Converged
            && r.accel_status == FitStatus::Converged
            && (r.accel_iterations as f64) <= 0.5 * r.em_iterations as f64
            && r.max_deviation <= 1e-5;
        check(
            ok,
            format!(
                "iterations {} accelerated vs {} plain; estimates differ by {:.2e}",
                r.accel_iterations, r.em_iterations, r.max_deviation
            ),
        )
    });
}

#[test]
fn criterion_07_path_robustness() {
    run(7, secs(600), || {
        let r = path_robustness(DEFAULT_SEED).map_err(|e| e.to_string())?;
        let em_ok = r.em.all_converged();
        check(
            em_ok && r.irls_singular >= 1 && r.max_excess <= 1e-8,
            format!(
                "EM converged at {}/{} points; IRLS singular at {}; {} joint points, max EM - IRLS objective {:.2e}",
                r.em.points.iter().filter(|p| p.status == PointStatus::Converged).count(),
                r.em.points.len(),
                r.irls_singular,
                r.joint_points,
                r.max_excess
            ),
        )
    });
}

#[test]
fn criterion_08_quantile_study() {
    run(8, secs(1200), || {
        let r = quantile_study(50, DEFAULT_SEED).map_err(|e| e.to_string())?;
        let none = r.method("none").ok_or("missing unpenalized summary")?;
        let lasso = r.method("lasso").ok_or("missing lasso summary")?;
        let dp = r.method("dpareto:3").ok_or("missing double-Pareto summary")?;
        // Margin against the larger of the two means' standard errors.
        let margin = |pen: &QuantileSummary| none.mean_est_error - pen.mean_est_error > 2.0 * none.se_est_error.max(pen.se_est_error);
        let ok = margin(lasso) && margin(dp) && dp.mean_model_size < lasso.mean_model_size && lasso.mean_model_size < 25.0;
        check(
            ok,
            format!(
                "est. error none {:.2} (se {:.2}), lasso {:.2} (se {:.2}), dpareto {:.2} (se {:.2}); model size {:.1} / {:.1} / {:.1}; check loss {:.1} / {:.1} / {:.1}",
                none.mean_est_error,
                none.se_est_error,
                lasso.mean_est_error,
                lasso.se_est_error,
                dp.mean_est_error,
                dp.se_est_error,
                none.mean_model_size,
                lasso.mean_model_size,
                dp.mean_model_size,
                none.mean_check_loss,
                lasso.mean_check_loss,
                dp.mean_check_loss
            ),
        )
    });
}

#[test]
fn criterion_09_masreliez() {
    run(9, secs(60), || {
        let rows = masreliez_suite().map_err(|e| e.to_string())?;
        let exact = rows.iter().filter(|r| r.exact).map(|r| r.abs_error).fold(0.0_f64, f64::max);
        let oracle = rows.iter().filter(|r| !r.exact).map(|r| r.abs_error).fold(0.0_f64, f64::max);
        check(
            exact <= 1e-8 && oracle <= 1e-5,
            format!("Gaussian-Gaussian error {exact:.2e}; GIG priors vs oracle {oracle:.2e} over {} cells", rows.len()),
        )
    });
}

#[test]
fn criterion_10_multinomial() {
    run(10, secs(60), || {
        let r = multinomial_reduction(DEFAULT_SEED).map_err(|e| e.to_string())?;
        check(
            r.converged && r.max_gap <= 1e-4 && r.max_increase <= 1e-10,
            format!("difference vs binary fit {:.2e}; {} sweeps, largest objective increase {:.2e}", r.max_gap, r.sweeps, r.max_increase),
        )
    });
}

#[test]
fn criterion_11_determinism() {
    run(11, secs(600), || {
        let twice = |name: &str, f: &dyn Fn() -> Result<String, String>| -> Result<(), String> {
            let (a, b) = (f()?, f()?);
            if a == b {
                Ok(())
            } else {
                Err(format!("{name} differs between runs"))
            }
        };
        let s = DEFAULT_SEED;
        let json = |r: varmix::Result<String>| r.map_err(|e| e.to_string());
        twice("moment suite", &|| json(moment_oracle_suite().and_then(|r| canonical_json(&r))))?;
        twice("monotone suite", &|| json(monotone_suite(3, s).and_then(|r| canonical_json(&r))))?;
        twice("optimizer agreement", &|| json(optimizer_agreement(s).and_then(|r| canonical_json(&r))))?;
        twice("acceleration", &|| json(acceleration_benefit(s).and_then(|r| canonical_json(&r))))?;
        twice("robustness", &|| json(robustness(s, 2).and_then(|r| canonical_json(&r))))?;
        twice("quantile study", &|| json(quantile_study(2, s).and_then(|r| canonical_json(&r))))?;
        twice("masreliez suite", &|| json(masreliez_suite().and_then(|r| canonical_json(&r))))?;
        twice("multinomial", &|| json(multinomial_reduction(s).and_then(|r| canonical_json(&r))))?;
        Ok("timing-free JSON identical across repeated runs for eight experiments".into())
    });
}
