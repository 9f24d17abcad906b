use varmix::families::PenaltyFamily;
use varmix::posterior_mean::{masreliez_mean, oracle_mean, LocationLikelihood, LocationProblem};

fn priors() -> Vec<PenaltyFamily> {
    vec![
        PenaltyFamily::lasso(1.0).unwrap(),
        PenaltyFamily::hyperbolic(1.0, 0.3, 1.0).unwrap(),
        PenaltyFamily::hyperbolic(2.0, 1.0, 0.8).unwrap(),
    ]
}

#[test]
fn gig_priors_match_oracle() {
    let liks = [
        LocationLikelihood::Gaussian { sigma: 1.0 },
        LocationLikelihood::Laplace { scale: 1.0 },
        LocationLikelihood::Logistic { scale: 0.7 },
    ];
    for prior in priors() {
        for lik in liks {
            for y in -3..=3 {
                let p = LocationProblem::new(lik, prior, y as f64).unwrap();
                let a = masreliez_mean(&p).unwrap();
                let b = oracle_mean(&p).unwrap();
                assert!((a - b).abs() <= 1e-5, "{prior:?} {lik:?} y={y}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn mean_shrinks_toward_prior_center() {
    let prior = PenaltyFamily::lasso(1.0).unwrap();
    let lik = LocationLikelihood::Gaussian { sigma: 1.0 };
    for y in [0.5, 1.0, 2.0, 3.0] {
        let m = oracle_mean(&LocationProblem::new(lik, prior, y).unwrap()).unwrap();
        assert!(m > 0.0 && m < y);
    }
}
