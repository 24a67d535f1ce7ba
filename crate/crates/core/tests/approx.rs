use std::f64::consts::LN_2;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topocorr::approx::*;
use topocorr::entropy::trace_distance;
use topocorr::layout::FactorLayout;
use topocorr::maxent::AnnulusSplit;
use topocorr::models::{product, random_chain_qms, random_state, ChainShape};
use topocorr::stabilizer::{RegionMask, ToricCode};
use topocorr::DensityMatrix;

fn qlabels(qs: &[usize]) -> Vec<String> {
    qs.iter().map(|q| format!("q{q}")).collect()
}

fn lw_setup() -> (DensityMatrix, AnnulusSplit) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../masks/lw-annulus.json");
    let m = RegionMask::load(&path).unwrap();
    let rho = ToricCode::new(4, 4).unwrap().ground_state().unwrap().rdm_dense(&m.support()).unwrap();
    let split = AnnulusSplit {
        a: qlabels(m.a()),
        b1: qlabels(m.region("B1").unwrap()),
        b2: qlabels(m.region("B2").unwrap()),
        c: qlabels(m.c()),
    };
    (rho, split)
}

fn chain_split() -> AnnulusSplit {
    let one = |x: &str| vec![x.to_string()];
    AnnulusSplit { a: one("A"), b1: one("B1"), b2: one("B2"), c: one("C") }
}

#[test]
fn fixed_point_has_no_residuals() {
    let (rho, split) = lw_setup();
    let r = assumption_residuals(&rho, &split).unwrap();
    assert!(r.max() <= 1e-9, "{r:?}");
    let report = bound_check(&rho, &split).unwrap();
    assert_eq!(report.params.f_delta, 0.0);
    assert!((report.c_hat - 2.0 * LN_2).abs() < 1e-9);
    assert!((report.cmi - 2.0 * LN_2).abs() < 1e-9);
    assert!(report.holds());
    let (_, achieved) = approx_merge(&rho, &split).unwrap();
    assert!(achieved <= 1e-8);
}

// On this annulus every proper sub-region of the fixed point is maximally
// mixed, and local noise keeps it so; only the joint state feels the noise.
#[test]
fn depolarized_toric_state_stays_in_the_bracket() {
    let (rho, split) = lw_setup();
    for p in [1e-4, 1e-3] {
        let noisy = depolarize(&rho, p).unwrap();
        let r = assumption_residuals(&noisy, &split).unwrap();
        assert_eq!(r.max(), 0.0, "{r:?}");
        let (_, achieved) = approx_merge(&noisy, &split).unwrap();
        let report = bound_check(&noisy, &split).unwrap();
        assert!(achieved <= report.params.delta + BOUND_SLACK);
        assert!(report.holds(), "{report:?}");
        assert!(report.cmi < 2.0 * LN_2);
    }
}

#[test]
fn noisy_chain_has_positive_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rho = random_chain_qms(&mut rng, &ChainShape::default()).unwrap();
    let noisy = depolarize(&rho, 1e-3).unwrap();
    let r = assumption_residuals(&noisy, &chain_split()).unwrap();
    assert!(r.a_b2_given_b1 > 0.0 && r.b1_c_given_b2 > 0.0, "{r:?}");
    let report = bound_check(&noisy, &chain_split()).unwrap();
    assert!(report.params.delta > 0.0 && report.params.f_delta > 0.0);
    assert!(report.lower_margin > 0.0 && report.upper_margin > 0.0, "{report:?}");
}

/// `ρ_A ⊗ ρ_{B1 B2 C}` with the second factor a Markov chain through `B2`.
fn independent_end(seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chain = random_chain_qms(&mut rng, &ChainShape::default()).unwrap();
    let rest = chain.partial_trace(&["B1", "B2", "C"]).unwrap();
    let a = random_state(&mut rng, FactorLayout::new(&[("A", 3)]).unwrap(), 3).unwrap();
    product(&[a, rest]).unwrap()
}

#[test]
fn independent_end_is_trivial() {
    let rho = independent_end(4);
    let split = chain_split();
    let r = assumption_residuals(&rho, &split).unwrap();
    assert!(r.max() < 1e-9, "{r:?}");
    let (_, achieved) = approx_merge(&rho, &split).unwrap();
    assert!(achieved < 1e-9);
    let report = bound_check(&rho, &split).unwrap();
    assert!(report.c_hat.abs() < 1e-9 && report.cmi.abs() < 1e-9, "{report:?}");
    assert!(report.holds());
}

#[test]
fn exact_chains_merge_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let rho = random_chain_qms(&mut rng, &ChainShape::default()).unwrap();
        let (merged, achieved) = approx_merge(&rho, &chain_split()).unwrap();
        assert!(achieved <= 1e-8);
        assert!(trace_distance(&merged, &rho).unwrap() <= 1e-8);
    }
}

#[test]
fn merge_stays_within_delta_under_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..4 {
        let rho = random_chain_qms(&mut rng, &ChainShape::default()).unwrap();
        for p in [1e-4, 1e-3, 1e-2, 1e-1] {
            let report = bound_check(&depolarize(&rho, p).unwrap(), &chain_split()).unwrap();
            assert!(report.delta_achieved.holds, "p = {p}: {report:?}");
            assert!(report.holds(), "p = {p}: {report:?}");
        }
    }
}

#[test]
fn depolarizing_keeps_states_valid() {
    let (rho, _) = lw_setup();
    let noisy = depolarize(&rho, 0.3).unwrap();
    assert!((noisy.data().trace().re - 1.0).abs() < 1e-12);
    assert!(noisy.eigenvalues().iter().all(|&v| v > -1e-12));
    assert!(trace_distance(&depolarize(&rho, 0.0).unwrap(), &rho).unwrap() < 1e-14);
    let full = depolarize(&rho, 1.0).unwrap();
    assert!(trace_distance(&full, &DensityMatrix::maximally_mixed(rho.layout().clone())).unwrap() < 1e-12);
    assert!(depolarize(&rho, 1.5).is_err());
}

#[test]
fn sweep_converges_to_the_fixed_point() {
    let (rho, split) = lw_setup();
    let pts = depolarizing_sweep(&rho, &split, &[0.0, 1e-4, 1e-3]).unwrap();
    assert_eq!(pts.iter().map(|x| x.p).collect::<Vec<_>>(), vec![0.0, 1e-4, 1e-3]);
    let base = &pts[0].report;
    let gaps = |f: &dyn Fn(&BoundReport) -> f64| pts.iter().map(|x| (f(&x.report) - f(base)).abs()).collect::<Vec<_>>();
    for g in [gaps(&|r| r.c_hat), gaps(&|r| r.cmi), gaps(&|r| r.params.delta), gaps(&|r| r.params.f_delta)] {
        assert!(g.windows(2).all(|w| w[0] <= w[1]), "{g:?}");
    }
    for x in &pts {
        println!(
            "p = {:.0e}: eps {:.3e} bits, delta {:.3e}, achieved {:.3e}, c_hat {:.6}, cmi {:.6}, f {:.3e}",
            x.p,
            x.report.params.epsilon,
            x.report.params.delta,
            x.report.delta_achieved.value,
            x.report.c_hat,
            x.report.cmi,
            x.report.params.f_delta
        );
    }
}
