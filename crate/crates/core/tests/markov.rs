use std::f64::consts::LN_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topocorr::entropy::{conditional_mutual_information, fidelity, trace_distance};
use topocorr::layout::FactorLayout;
use topocorr::linalg::{self, kron, max_abs, CMat};
use topocorr::markov::{apply_recovery, is_qms, markov_decompose, petz_recovery, MarkovDecomposition};
use topocorr::models::{ghz, random_markov_state, random_state};
use topocorr::{DensityMatrix, Error};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn layout(sites: &[(&str, usize)]) -> FactorLayout {
    FactorLayout::new(sites).unwrap()
}

#[test]
fn product_recovery_appends_the_fixed_state() {
    let mut r = rng(1);
    let rho_b = random_state(&mut r, layout(&[("B", 2)]), 2).unwrap();
    let rho_c = random_state(&mut r, layout(&[("C", 3)]), 3).unwrap();
    let map = petz_recovery(&rho_b.tensor(&rho_c).unwrap(), &rho_b).unwrap();
    let x = random_state(&mut r, layout(&[("B", 2)]), 1).unwrap();
    let out = map.apply(&x).unwrap();
    assert!(max_abs(&(out.data() - kron(x.data(), rho_c.data()))) < 1e-10);
}

#[test]
fn petz_recovers_its_own_marginal() {
    let mut r = rng(2);
    for _ in 0..10 {
        let bc = random_state(&mut r, layout(&[("B", 2), ("C", 2)]), 4).unwrap();
        let b = bc.partial_trace(&["B"]).unwrap();
        let map = petz_recovery(&bc, &b).unwrap();
        assert!(map.trace_preservation_defect() < 1e-9);
        assert!(trace_distance(&map.apply(&b).unwrap(), &bc).unwrap() < 1e-8);
    }
}

#[test]
fn petz_choi_is_positive() {
    let mut r = rng(3);
    for k in 0..100 {
        let bc = random_state(&mut r, layout(&[("B", 2), ("C", 2)]), 1 + k % 4).unwrap();
        let b = bc.partial_trace(&["B"]).unwrap();
        let map = petz_recovery(&bc, &b).unwrap();
        assert!(map.min_choi_eigenvalue() >= -1e-9);
        assert!(map.trace_preservation_defect() < 1e-9);
    }
}

#[test]
fn petz_rejects_a_wrong_marginal() {
    let mut r = rng(4);
    let bc = random_state(&mut r, layout(&[("B", 2), ("C", 2)]), 4).unwrap();
    let other = random_state(&mut r, layout(&[("B", 2)]), 2).unwrap();
    assert!(matches!(petz_recovery(&bc, &other), Err(Error::InconsistentMarginal { .. })));
}

#[test]
fn apply_recovery_examples() {
    let mut r = rng(5);
    let rho = random_markov_state(&mut r, 2, 2, &[(2, 1), (1, 2)], true).unwrap();
    let bc = rho.partial_trace(&["B", "C"]).unwrap();
    let b = rho.partial_trace(&["B"]).unwrap();
    let map = petz_recovery(&bc, &b).unwrap();
    let ab = rho.partial_trace(&["A", "B"]).unwrap();
    let merged = apply_recovery(&map, &ab).unwrap();
    assert_eq!(merged.labels(), vec!["A", "B", "C"]);
    assert!(trace_distance(&merged, &rho).unwrap() <= 1e-8);

    // trivial A reduces to the bare map
    let trivial = DensityMatrix::maximally_mixed(layout(&[("A", 1)])).tensor(&b).unwrap();
    let out = apply_recovery(&map, &trivial).unwrap();
    assert!(max_abs(&(out.data() - map.apply(&b).unwrap().data())) < 1e-12);

    // a product input stays a product
    let rho_a = random_state(&mut r, layout(&[("A", 2)]), 2).unwrap();
    let x = random_state(&mut r, layout(&[("B", 4)]), 2).unwrap();
    let out = apply_recovery(&map, &rho_a.tensor(&x).unwrap()).unwrap();
    let expect = rho_a.tensor(&map.apply(&x).unwrap()).unwrap();
    assert!(max_abs(&(out.data() - expect.data())) < 1e-12);

    assert!(matches!(apply_recovery(&map, &rho_a), Err(Error::UnknownSubsystem(_))));
}

#[test]
fn ghz_recovery_fails_visibly() {
    let g = ghz(&["A", "B", "C"]).unwrap();
    let map = petz_recovery(&g.partial_trace(&["B", "C"]).unwrap(), &g.partial_trace(&["B"]).unwrap()).unwrap();
    let merged = apply_recovery(&map, &g.partial_trace(&["A", "B"]).unwrap()).unwrap();
    assert!(trace_distance(&merged, &g).unwrap() >= 0.1);
}

#[test]
fn is_qms_examples() {
    let mut r = rng(6);
    let m = random_markov_state(&mut r, 2, 3, &[(2, 2), (1, 1)], true).unwrap();
    let check = is_qms(&m, &["A"], &["B"], &["C"], 1e-9).unwrap();
    assert!(check.is_qms && check.cmi.abs() < 1e-9);

    let g = ghz(&["A", "B", "C"]).unwrap();
    let check = is_qms(&g, &["A"], &["B"], &["C"], 1e-9).unwrap();
    assert!(!check.is_qms && (check.cmi - LN_2).abs() < 1e-12);

    let p = random_state(&mut r, layout(&[("A", 2)]), 2)
        .unwrap()
        .tensor(&random_state(&mut r, layout(&[("B", 2)]), 2).unwrap())
        .unwrap()
        .tensor(&random_state(&mut r, layout(&[("C", 2)]), 2).unwrap())
        .unwrap();
    let check = is_qms(&p, &["A"], &["B"], &["C"], 1e-9).unwrap();
    assert!(check.is_qms && check.cmi.abs() < 1e-9);
}

#[test]
fn markov_form_has_zero_cmi() {
    let mut r = rng(7);
    for _ in 0..5 {
        let m = random_markov_state(&mut r, 2, 2, &[(1, 2), (2, 1), (1, 1)], true).unwrap();
        assert!(conditional_mutual_information(&m, &["A"], &["B"], &["C"]).unwrap().abs() < 1e-9);
    }
}

#[test]
fn classical_middle_gives_trivial_blocks() {
    let mut r = rng(8);
    let n = 3;
    let probs = [0.5, 0.3, 0.2];
    let mut acc = CMat::zeros(2 * n * 2, 2 * n * 2);
    for (i, p) in probs.iter().enumerate() {
        let a = linalg::random_density(&mut r, 2, 2);
        let c = linalg::random_density(&mut r, 2, 2);
        let mut proj = CMat::zeros(n, n);
        proj[(i, i)] = linalg::c(1.0);
        acc += kron(&kron(&a, &proj), &c).scale(*p);
    }
    let rho = DensityMatrix::new(layout(&[("A", 2), ("B", n), ("C", 2)]), acc).unwrap();
    let dec = markov_decompose(&rho, &["A"], &["B"], &["C"], 11).unwrap();
    assert_eq!(dec.block_dims(), vec![(1, 1); 3]);
    let mut p = dec.probabilities();
    p.sort_by(|a, b| b.total_cmp(a));
    for (x, y) in p.iter().zip(probs) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn product_with_c_gives_one_block() {
    let mut r = rng(9);
    let ab = random_state(&mut r, layout(&[("A", 2), ("B", 3)]), 6).unwrap();
    let c = random_state(&mut r, layout(&[("C", 2)]), 2).unwrap();
    let rho = ab.tensor(&c).unwrap();
    let dec = markov_decompose(&rho, &["A"], &["B"], &["C"], 12).unwrap();
    assert_eq!(dec.block_dims(), vec![(3, 1)]);
    assert!(trace_distance(&dec.reconstruct().unwrap(), &rho).unwrap() < 1e-7);
}

#[test]
fn two_block_round_trip_recovers_dims() {
    let mut r = rng(10);
    for seed in 0..5 {
        let rho = random_markov_state(&mut r, 2, 2, &[(2, 1), (1, 2)], true).unwrap();
        let dec = markov_decompose(&rho, &["A"], &["B"], &["C"], seed).unwrap();
        assert_eq!(dec.block_dims(), vec![(1, 2), (2, 1)]);
        assert!((dec.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(trace_distance(&dec.reconstruct().unwrap(), &rho).unwrap() < 1e-7);
        // block ranges are mutually orthogonal
        let b = &dec.blocks;
        assert!(max_abs(&(b[0].iso.adjoint() * &b[1].iso)) < 1e-9);
    }
}

#[test]
fn decomposition_rejects_non_markov_states() {
    let g = ghz(&["A", "B", "C"]).unwrap();
    assert!(matches!(markov_decompose(&g, &["A"], &["B"], &["C"], 1), Err(Error::NotMarkov { .. })));
}

#[test]
fn decomposition_json_round_trip() {
    let mut r = rng(13);
    let rho = random_markov_state(&mut r, 2, 2, &[(2, 1), (1, 2)], true).unwrap();
    let dec = markov_decompose(&rho, &["A"], &["B"], &["C"], 3).unwrap();
    let back = MarkovDecomposition::from_json(&dec.to_json().unwrap()).unwrap();
    assert_eq!(back.block_dims(), dec.block_dims());
    assert!(trace_distance(&back.reconstruct().unwrap(), &rho).unwrap() < 1e-7);
}

#[test]
fn fidelity_bound_on_perturbed_markov_states() {
    // I(A:C|B) ≥ −2 log₂ F(ρ, Petz-recovered ρ) along a line towards a random state
    let mut r = rng(14);
    let m = random_markov_state(&mut r, 2, 2, &[(2, 1), (1, 2)], true).unwrap();
    let noise = random_state(&mut r, m.layout().clone(), 16).unwrap();
    for t in [0.0, 0.01, 0.05, 0.1, 0.3] {
        let rho = DensityMatrix::mixture(&[(1.0 - t, &m), (t, &noise)]).unwrap();
        let map = petz_recovery(&rho.partial_trace(&["B", "C"]).unwrap(), &rho.partial_trace(&["B"]).unwrap()).unwrap();
        let rec = apply_recovery(&map, &rho.partial_trace(&["A", "B"]).unwrap()).unwrap();
        let cmi_bits = conditional_mutual_information(&rho, &["A"], &["B"], &["C"]).unwrap() / LN_2;
        let f = fidelity(&rho, &rec).unwrap();
        assert!(cmi_bits >= -2.0 * f.log2() - 1e-9, "t = {t}: {cmi_bits} < {}", -2.0 * f.log2());
    }
}

mod refinement {
    use super::*;
    use topocorr::markov::refine_block;
    use topocorr::models::{random_chain_qms, ChainShape};

    #[test]
    fn two_by_two_chain_weights() {
        let mut r = rng(21);
        let rho = random_chain_qms(&mut r, &ChainShape::default()).unwrap();
        let first = markov_decompose(&rho, &["A"], &["B1"], &["B2"], 1).unwrap();
        let second = markov_decompose(&rho, &["B1"], &["B2"], &["C"], 2).unwrap();
        assert_eq!(first.blocks.len(), 2);
        assert_eq!(second.blocks.len(), 2);
        let chain = refine_block(&rho, &first, &second).unwrap();
        let q = chain.conditional_matrix(1);
        assert_eq!(q.len() * q[0].len(), 4);
        for row in &q {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let p = &chain.marginals[1];
        for (j, &target) in chain.marginals[2].iter().enumerate() {
            let mixed: f64 = (0..2).map(|i| p[i] * q[i][j]).sum();
            assert!((mixed - target).abs() < 1e-9);
        }
        assert!((chain.total_weight() - 1.0).abs() < 1e-9);
        assert!(trace_distance(&chain.assemble().unwrap(), &rho).unwrap() < 1e-8);

        let b = rho.partial_trace(&["B1", "B2"]).unwrap();
        assert!(trace_distance(&second.pinch(&b).unwrap(), &b).unwrap() < 1e-9);
    }

    #[test]
    fn single_block_inputs_give_one_refined_block() {
        let mut r = rng(22);
        let shape = ChainShape { a: 2, c: 2, b1_blocks: vec![(2, 2)], b2_blocks: vec![(2, 2)] };
        let rho = random_chain_qms(&mut r, &shape).unwrap();
        let first = markov_decompose(&rho, &["A"], &["B1"], &["B2"], 1).unwrap();
        let second = markov_decompose(&rho, &["B1"], &["B2"], &["C"], 2).unwrap();
        let chain = refine_block(&rho, &first, &second).unwrap();
        assert_eq!(chain.conditional_matrix(1).len(), 1);
        assert!((chain.conditional(1, 0, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mismatched_decompositions_are_rejected() {
        let mut r = rng(23);
        let rho = random_chain_qms(&mut r, &ChainShape::default()).unwrap();
        let first = markov_decompose(&rho, &["A"], &["B1"], &["B2"], 1).unwrap();
        assert!(matches!(refine_block(&rho, &first, &first), Err(Error::DecompositionFailed(_))));
    }
}
