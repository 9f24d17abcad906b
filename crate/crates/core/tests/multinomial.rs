use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varmix::engine::{fit_single, FitConfig};
use varmix::families::{LikelihoodFamily, PenaltyFamily};
use varmix::multinomial::fit_multinomial;
use varmix::{Dataset, ModelSpec, Task};

fn toy(n: usize, p: usize, classes: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
    let y = Array1::from_shape_fn(n, |_| rng.random_range(1..=classes) as f64);
    (x, y)
}

fn logistic(tau: f64) -> ModelSpec {
    ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::ridge(tau).unwrap())
}

#[test]
fn two_classes_reduce_to_binary_fit() {
    let (x, y) = toy(50, 3, 2, 11);
    let config = FitConfig { tol_obj: 1e-15, tol_grad: 1e-9, ..FitConfig::default() };
    let multi = Dataset::new(x.clone(), y.clone(), Task::Multinomial { classes: 2 }).unwrap();
    let fit = fit_multinomial(&[logistic(1.0), logistic(1.0)], &multi, &config).unwrap();
    assert!(fit.converged);
    // With equal ridge priors the blocks settle at +-delta/2, so the
    // difference carries a ridge prior of scale sqrt(2).
    let binary = Dataset::new(x, y.mapv(|v| if v == 1.0 { 1.0 } else { -1.0 }), Task::Classification).unwrap();
    let b = fit_single(&logistic(2f64.sqrt()), &binary, &config, Array1::zeros(3).view()).unwrap();
    let diff = &fit.beta.row(0) - &fit.beta.row(1);
    let gap = (&diff - &b.beta).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(gap < 1e-4, "gap {gap}");
}

#[test]
fn joint_objective_is_monotone() {
    let (x, y) = toy(60, 3, 3, 5);
    let d = Dataset::new(x, y, Task::Multinomial { classes: 3 }).unwrap();
    let spec = ModelSpec::new(LikelihoodFamily::logistic(), PenaltyFamily::lasso(1.0).unwrap());
    let fit = fit_multinomial(&[spec; 3], &d, &FitConfig::default()).unwrap();
    assert!(fit.sweeps >= 2);
    for w in fit.objective_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn identical_classes_give_equal_blocks() {
    // Every row appears once with each label, so no class is preferred.
    let (x1, _) = toy(20, 2, 3, 3);
    let x = ndarray::concatenate![ndarray::Axis(0), x1, x1, x1];
    let y = Array1::from_shape_fn(60, |i| (i / 20 + 1) as f64);
    let d = Dataset::new(x, y, Task::Multinomial { classes: 3 }).unwrap();
    let fit = fit_multinomial(&[logistic(1.0); 3], &d, &FitConfig::default()).unwrap();
    for k in 1..3 {
        let gap = (&fit.beta.row(k) - &fit.beta.row(0)).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(gap < 1e-6, "class {k} gap {gap}");
    }
}
