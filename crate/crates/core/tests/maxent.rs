use std::f64::consts::LN_2;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topocorr::entropy::{entropy_of, relative_entropy, total_correlation, trace_distance, von_neumann_entropy};
use topocorr::layout::FactorLayout;
use topocorr::linalg::{gibbs, kron, max_abs, random_hermitian, trace_first, trace_second, CMat};
use topocorr::markov::{markov_decompose, refine_block};
use topocorr::maxent::*;
use topocorr::models::{ghz, product, random_chain_qms, random_state, ChainShape};
use topocorr::stabilizer::{tee, RegionMask, StabilizerTableau, ToricCode};
use topocorr::{DensityMatrix, Error};

fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn parties(groups: &[&[&str]]) -> Parties {
    groups.iter().map(|g| s(g)).collect()
}

fn mask(name: &str) -> RegionMask {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../masks").join(format!("{name}.json"));
    RegionMask::load(&path).unwrap()
}

fn qlabels(qs: &[usize]) -> Vec<String> {
    qs.iter().map(|q| format!("q{q}")).collect()
}

fn toric() -> StabilizerTableau {
    ToricCode::new(4, 4).unwrap().ground_state().unwrap()
}

fn lw_split(m: &RegionMask) -> AnnulusSplit {
    AnnulusSplit {
        a: qlabels(m.a()),
        b1: qlabels(m.region("B1").unwrap()),
        b2: qlabels(m.region("B2").unwrap()),
        c: qlabels(m.c()),
    }
}

fn ring_split(m: &RegionMask) -> RingSplit {
    RingSplit::new((1..=6).map(|k| qlabels(m.region(&format!("X{k}")).unwrap())).collect()).unwrap()
}

fn small_shape() -> ChainShape {
    ChainShape { a: 2, c: 2, b1_blocks: vec![(1, 1), (1, 2)], b2_blocks: vec![(2, 1), (1, 1)] }
}

fn chain_split() -> AnnulusSplit {
    AnnulusSplit { a: s(&["A"]), b1: s(&["B1"]), b2: s(&["B2"]), c: s(&["C"]) }
}

fn abc_of_chain() -> Parties {
    parties(&[&["A"], &["B1", "B2"], &["C"]])
}

/// Classical iterative proportional fitting of a distribution on three bits
/// to its pairwise marginals.
fn classical_ipf(p: &[f64; 8]) -> [f64; 8] {
    let bit = |x: usize, k: usize| (x >> (2 - k)) & 1;
    let pairs = [(0, 1), (1, 2), (0, 2)];
    let marg = |q: &[f64; 8], (i, j): (usize, usize)| {
        let mut m = [[0.0; 2]; 2];
        for (x, v) in q.iter().enumerate() {
            m[bit(x, i)][bit(x, j)] += v;
        }
        m
    };
    let mut q = [0.125; 8];
    for _ in 0..200 {
        for &pr in &pairs {
            let (want, have) = (marg(p, pr), marg(&q, pr));
            for (x, v) in q.iter_mut().enumerate() {
                let h = have[bit(x, pr.0)][bit(x, pr.1)];
                *v = if h > 0.0 { *v * want[bit(x, pr.0)][bit(x, pr.1)] / h } else { 0.0 };
            }
        }
    }
    q
}

#[test]
fn first_order_gives_product_of_marginals() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let l = FactorLayout::new(&[("a", 2), ("b", 3), ("c", 2)]).unwrap();
    let rho = random_state(&mut rng, l, 12).unwrap();
    let p = parties(&[&["a"], &["b"], &["c"]]);
    let set = MarginalConstraintSet::from_state(&rho, &p, 1).unwrap();
    let sol = iterative_maxent(&set, &SolverOptions::default()).unwrap();
    let prod = product(&[
        rho.partial_trace(&["a"]).unwrap(),
        rho.partial_trace(&["b"]).unwrap(),
        rho.partial_trace(&["c"]).unwrap(),
    ])
    .unwrap();
    assert!(trace_distance(&sol.state, &prod).unwrap() < 1e-7);
}

#[test]
fn ghz_pairwise_maximizer() {
    let g = ghz(&["a", "b", "c"]).unwrap();
    let mut diag = [0.0; 8];
    for (x, v) in diag.iter_mut().enumerate() {
        *v = g.data()[(x, x)].re;
    }
    // the classical fit of the diagonal is the candidate maximizer
    let fit = classical_ipf(&diag);
    assert!((fit[0] - 0.5).abs() < 1e-12 && (fit[7] - 0.5).abs() < 1e-12);
    let oracle = DensityMatrix::diagonal(g.layout().clone(), &fit).unwrap();

    let set = MarginalConstraintSet::from_state(&g, &parties(&[&["a"], &["b"], &["c"]]), 2).unwrap();
    let sol = iterative_maxent(&set, &SolverOptions::default()).unwrap();
    assert!(trace_distance(&sol.state, &oracle).unwrap() < 1e-6);
    assert!((sol.entropy - LN_2).abs() < 1e-6 * 8.0);
}

#[test]
fn ghz_irreducible_correlations() {
    let g = ghz(&["a", "b", "c"]).unwrap();
    let p = parties(&[&["a"], &["b"], &["c"]]);
    let opts = SolverOptions::default();
    assert!((irreducible_correlation(&g, &p, 3, &opts).unwrap() - LN_2).abs() < 1e-4);
    assert!((irreducible_correlation(&g, &p, 2, &opts).unwrap() - 2.0 * LN_2).abs() < 1e-4);
    let prof = correlation_profile(&g, &p, &opts).unwrap();
    assert!((prof.multipartite() - total_correlation(&g, &p).unwrap()).abs() < 1e-5);
    assert!(prof.distances.windows(2).all(|w| w[0] >= w[1] - 1e-9));
}

#[test]
fn product_state_has_no_correlation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let parts: Vec<DensityMatrix> = ["a", "b", "c"]
        .iter()
        .map(|l| random_state(&mut rng, FactorLayout::qubits(&[*l]).unwrap(), 2).unwrap())
        .collect();
    let rho = product(&parts).unwrap();
    let p = parties(&[&["a"], &["b"], &["c"]]);
    let prof = correlation_profile(&rho, &p, &SolverOptions::default()).unwrap();
    for d in &prof.distances[1..] {
        assert!(d.abs() < 1e-8);
    }
    let r = tee_dense(&rho, &Regions::Plain { a: s(&["a"]), b: s(&["b"]), c: s(&["c"]) }, &SolverOptions::default(), 0)
        .unwrap();
    for v in [r.gamma, r.c3, r.c2, r.ct, r.verdict] {
        assert!(v.abs() < 1e-8);
    }
    assert!(!r.assumption_violated);
}

#[test]
fn irreducible_correlation_is_additive() {
    let g1 = ghz(&["a1", "b1", "c1"]).unwrap();
    let g2 = ghz(&["a2", "b2", "c2"]).unwrap();
    let rho = g1.tensor(&g2).unwrap();
    let p = parties(&[&["a1", "a2"], &["b1", "b2"], &["c1", "c2"]]);
    let c3 = irreducible_correlation(&rho, &p, 3, &SolverOptions::default()).unwrap();
    assert!((c3 - 2.0 * LN_2).abs() < 2e-4, "{c3}");
}

#[test]
fn ghz_report_flags_assumptions() {
    let g = ghz(&["a", "b", "c"]).unwrap();
    let r = tee_dense(&g, &Regions::Plain { a: s(&["a"]), b: s(&["b"]), c: s(&["c"]) }, &SolverOptions::default(), 0)
        .unwrap();
    // S(AB)+S(BC)+S(CA) − S(A) − S(B) − S(C) − S(ABC) = 3 ln2 − 3 ln2 − 0
    assert!(r.gamma.abs() < 1e-12);
    assert!((r.c3 - LN_2).abs() < 1e-4);
    assert!(r.assumption_violated);
    assert_eq!(r.method, "iterative");
    let mi = r.mutual_information_sum;
    assert!((r.gamma - (r.ct - mi)).abs() < 1e-9);
}

#[test]
fn incompatible_constraints_are_rejected() {
    let a = DensityMatrix::basis(FactorLayout::qubits(&["a", "b"]).unwrap(), 0).unwrap();
    let b = DensityMatrix::basis(FactorLayout::qubits(&["b", "c"]).unwrap(), 2).unwrap();
    let c = DensityMatrix::basis(FactorLayout::qubits(&["a", "c"]).unwrap(), 0).unwrap();
    let targets = vec![
        Target { parties: vec![0, 1], state: a },
        Target { parties: vec![1, 2], state: b },
        Target { parties: vec![0, 2], state: c },
    ];
    let r = MarginalConstraintSet::new(
        FactorLayout::qubits(&["a", "b", "c"]).unwrap(),
        parties(&[&["a"], &["b"], &["c"]]),
        2,
        targets,
    );
    assert!(matches!(r, Err(Error::InconsistentMarginal { .. })));
}

#[test]
fn non_convergence_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let rho = random_state(&mut rng, FactorLayout::qubits(&["a", "b", "c"]).unwrap(), 8).unwrap();
    let set = MarginalConstraintSet::from_state(&rho, &parties(&[&["a"], &["b"], &["c"]]), 2).unwrap();
    let opts = SolverOptions { max_iter: 2, ..Default::default() };
    assert!(matches!(iterative_maxent(&set, &opts), Err(Error::ConvergenceFailure { iterations: 2, .. })));
    let best = solve(&set, &opts).unwrap();
    assert!(!best.converged);
}

#[test]
fn annulus_merge_on_random_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let rho = random_chain_qms(&mut rng, &ChainShape::default()).unwrap();
        let split = chain_split();
        let merged = merge_annulus(&rho, &split).unwrap();
        assert!(pair_marginal_gap(&merged, &rho, &split.a, &split.b(), &split.c).unwrap() < 1e-8);
        let want = entropy_of(&rho, &s(&["A", "B1", "B2"])).unwrap()
            + entropy_of(&rho, &s(&["B1", "B2", "C"])).unwrap()
            - entropy_of(&rho, &s(&["B1", "B2"])).unwrap();
        assert!((von_neumann_entropy(&merged) - want).abs() < 1e-7);
        let cmi = topocorr::entropy::conditional_mutual_information(&merged, &split.a, &split.b(), &split.c).unwrap();
        assert!(cmi.abs() < 1e-7);
    }
}

#[test]
fn annulus_merge_of_product_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let parts: Vec<DensityMatrix> = ["A", "B1", "B2", "C"]
        .iter()
        .map(|l| random_state(&mut rng, FactorLayout::qubits(&[*l]).unwrap(), 2).unwrap())
        .collect();
    let rho = product(&parts).unwrap();
    let merged = merge_annulus(&rho, &chain_split()).unwrap();
    assert!(trace_distance(&merged, &rho).unwrap() < 1e-10);
}

#[test]
fn annulus_merge_rejects_correlated_ends() {
    let g = ghz(&["A", "B1", "B2", "C"]).unwrap();
    match merge_annulus(&g, &chain_split()) {
        Err(Error::AssumptionViolated { quantity, .. }) => assert_eq!(quantity, "I(A:B2C)"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn iterative_solver_matches_annulus_merge() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..3 {
        let rho = random_chain_qms(&mut rng, &small_shape()).unwrap();
        let merged = merge_annulus(&rho, &chain_split()).unwrap();
        let set = MarginalConstraintSet::from_state(&rho, &abc_of_chain(), 2).unwrap();
        let sol = iterative_maxent(&set, &SolverOptions::default()).unwrap();
        assert!(trace_distance(&sol.state, &merged).unwrap() < 1e-5);
    }
}

#[test]
fn toric_annulus_merge_gives_twice_ln2() {
    let tab = toric();
    let m = mask("lw-annulus");
    let rho = tab.rdm_dense(&m.support()).unwrap();
    let split = lw_split(&m);
    let merged = merge_annulus(&rho, &split).unwrap();
    assert!(pair_marginal_gap(&merged, &rho, &split.a, &split.b(), &split.c).unwrap() < 1e-7);
    let gap = von_neumann_entropy(&merged) - von_neumann_entropy(&rho);
    assert!((gap - 2.0 * LN_2).abs() < 1e-6);
    let r = tee_dense(&rho, &Regions::Annulus(split), &SolverOptions::default(), 0).unwrap();
    assert_eq!(r.method, "annulus-merge");
    assert!((r.gamma - tee(&tab, &m).unwrap()).abs() < 1e-9);
    assert!(r.verdict < 1e-6);
    assert!((r.gamma - (r.ct - r.mutual_information_sum)).abs() < 1e-9);
    assert!((r.c2 - r.mutual_information_sum).abs() < 1e-6);
}

#[test]
fn toric_ring_merge_gives_twice_ln2() {
    let tab = toric();
    let m = mask("kp-annulus");
    let rho = tab.rdm_dense(&m.support()).unwrap();
    let split = ring_split(&m);
    let ring = merge_ring(&rho, &split, 5).unwrap();
    assert!((ring.chain.total_weight() - 1.0).abs() < 1e-9);
    let c3 = von_neumann_entropy(&ring.state) - von_neumann_entropy(&rho);
    assert!((c3 - 2.0 * LN_2).abs() < 1e-6, "{c3}");
    let r = tee_dense(&rho, &Regions::Ring(split), &SolverOptions::default(), 5).unwrap();
    assert_eq!(r.method, "ring-merge");
    assert!(r.verdict < 1e-6);
}

/// Joint weights of the block labels of A = X1X2, B = X3X4, C = X5X6.
#[test]
fn ring_weights_factorize_through_pairs() {
    let tab = toric();
    let m = mask("kp-annulus");
    let rho = tab.rdm_dense(&m.support()).unwrap();
    let ring = merge_ring(&rho, &ring_split(&m), 2).unwrap();
    let sizes: Vec<usize> = ring.chain.sites.iter().map(|s| s.blocks.len()).collect();
    let code = |i: &[usize], a: usize, b: usize| i[a] * sizes[b] + i[b];
    let (na, nb, nc) = (sizes[0] * sizes[1], sizes[2] * sizes[3], sizes[4] * sizes[5]);
    let mut joint = vec![0.0; na * nb * nc];
    for (idx, w) in ring.chain.configurations() {
        joint[(code(&idx, 0, 1) * nb + code(&idx, 2, 3)) * nc + code(&idx, 4, 5)] += w;
    }
    let p = |a: Option<usize>, b: Option<usize>, c: Option<usize>| -> f64 {
        let mut t = 0.0;
        for x in 0..na {
            for y in 0..nb {
                for z in 0..nc {
                    if a.is_none_or(|v| v == x) && b.is_none_or(|v| v == y) && c.is_none_or(|v| v == z) {
                        t += joint[(x * nb + y) * nc + z];
                    }
                }
            }
        }
        t
    };
    for x in 0..na {
        for y in 0..nb {
            let pab = p(Some(x), Some(y), None);
            if pab < 1e-12 {
                continue;
            }
            for z in 0..nc {
                let lhs = p(Some(x), Some(y), Some(z)) / pab;
                let (pa, pb, pc) = (p(Some(x), None, None), p(None, Some(y), None), p(None, None, Some(z)));
                let rhs = if pc > 0.0 {
                    (p(Some(x), None, Some(z)) / pa) * (p(None, Some(y), Some(z)) / pb) / pc
                } else {
                    0.0
                };
                assert!((lhs - rhs).abs() < 1e-6);
            }
        }
    }
    // the merged state decomposes with the same blocks on X1 given X6 and X2
    let split = ring_split(&m);
    let dec = markov_decompose(&ring.state, &split.parts[5], &split.parts[0], &split.parts[1], 9).unwrap();
    let mut probs = dec.probabilities();
    let mut want = ring.chain.marginals[0].clone();
    probs.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    assert_eq!(probs.len(), want.len());
    for (a, b) in probs.iter().zip(&want) {
        assert!((a - b).abs() < 1e-6);
    }
}

/// Six bits with even total parity: any five are independent.
fn parity_ring() -> DensityMatrix {
    let labels: Vec<String> = (1..=6).map(|k| format!("x{k}")).collect();
    let probs: Vec<f64> = (0..64u32).map(|x| if x.count_ones() % 2 == 0 { 1.0 / 32.0 } else { 0.0 }).collect();
    DensityMatrix::diagonal(FactorLayout::qubits(&labels).unwrap(), &probs).unwrap()
}

#[test]
fn classical_parity_ring() {
    let rho = parity_ring();
    let split = RingSplit::new((1..=6).map(|k| vec![format!("x{k}")]).collect()).unwrap();
    let ring = merge_ring(&rho, &split, 1).unwrap();
    // P(x_k | x_{k-1}) from the distribution: every pair is uniform
    for k in 0..6 {
        let from = ring.chain.sites[k].blocks.len();
        let to = ring.chain.sites[(k + 1) % 6].blocks.len();
        for a in 0..from {
            for b in 0..to {
                let cond = ring.chain.conditional(k, a, b);
                if from == 2 && to == 2 {
                    assert!((cond - 0.5).abs() < 1e-9);
                }
            }
        }
    }
    assert!((ring.chain.total_weight() - 1.0).abs() < 1e-9);
    let uniform = DensityMatrix::maximally_mixed(rho.layout().clone());
    assert!(trace_distance(&ring.state, &uniform).unwrap() < 1e-9);
    let c3 = von_neumann_entropy(&ring.state) - von_neumann_entropy(&rho);
    assert!((c3 - LN_2).abs() < 1e-9);
}

#[test]
fn product_ring_is_a_single_block_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let labels: Vec<String> = (1..=6).map(|k| format!("x{k}")).collect();
    let parts: Vec<DensityMatrix> =
        labels.iter().map(|l| random_state(&mut rng, FactorLayout::qubits(&[l]).unwrap(), 2).unwrap()).collect();
    let rho = product(&parts).unwrap();
    let split = RingSplit::new(labels.iter().map(|l| vec![l.clone()]).collect()).unwrap();
    let ring = merge_ring(&rho, &split, 3).unwrap();
    assert!(ring.chain.sites.iter().all(|s| s.blocks.len() == 1));
    assert!(trace_distance(&ring.state, &rho).unwrap() < 1e-9);
    let h = two_local_hamiltonian(&ring.chain, 1e-6).unwrap();
    let g = h.gibbs_state().unwrap().reorder(&rho.labels()).unwrap();
    assert!(trace_distance(&g, &rho).unwrap() < 1e-9);
}

#[test]
fn gibbs_reconstruction_of_a_chain() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rho = random_chain_qms(&mut rng, &ChainShape::default()).unwrap();
    let first = markov_decompose(&rho, &["A"], &["B1"], &["B2"], 1).unwrap();
    let second = markov_decompose(&rho, &["B1"], &["B2"], &["C"], 2).unwrap();
    let chain = refine_block(&rho, &first, &second).unwrap();
    let merged = merge_annulus(&rho, &chain_split()).unwrap();
    let ladder = eps_ladder(&chain, &merged, &[1e-6]).unwrap();
    assert!(ladder[0].1 < 1e-6, "{ladder:?}");
}

#[test]
fn gibbs_ladder_on_toric_annulus() {
    let m = mask("lw-annulus");
    let rho = toric().rdm_dense(&m.support()).unwrap();
    let split = lw_split(&m);
    let merged = merge_annulus(&rho, &split).unwrap();
    let first = markov_decompose(&merged, &split.a, &split.b1, &split.b2, 1).unwrap();
    let second = markov_decompose(&merged, &split.b1, &split.b2, &split.c, 2).unwrap();
    let chain = refine_block(&merged, &first, &second).unwrap();
    let ladder = eps_ladder(&chain, &merged, &EPS_LADDER).unwrap();
    // the flat toric blocks are reproduced up to rounding at every ε
    for w in ladder.windows(2) {
        assert!(w[1].1 <= w[0].1 + 1e-12, "{ladder:?}");
    }
    assert!(ladder[2].1 < 1e-6);
}

#[test]
fn gibbs_ladder_on_a_copy_chain() {
    // a classical bit copied along A − B1 − B2 − C leaves most block pairs empty
    let l = FactorLayout::qubits(&["A", "B1", "B2", "C"]).unwrap();
    let mut p = vec![0.0; 16];
    p[0] = 0.3;
    p[15] = 0.7;
    let rho = DensityMatrix::diagonal(l, &p).unwrap();
    let first = markov_decompose(&rho, &["A"], &["B1"], &["B2"], 1).unwrap();
    let second = markov_decompose(&rho, &["B1"], &["B2"], &["C"], 2).unwrap();
    let chain = refine_block(&rho, &first, &second).unwrap();
    let ladder = eps_ladder(&chain, &rho, &EPS_LADDER).unwrap();
    for w in ladder.windows(2) {
        assert!(w[1].1 < w[0].1, "{ladder:?}");
    }
    assert!(ladder[2].1 < 1e-4);
}

fn random_two_local(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let l = FactorLayout::qubits(&["a", "b", "c"]).unwrap();
    let mut h = CMat::zeros(8, 8);
    for pair in [["a", "b"], ["b", "c"], ["a", "c"]] {
        let sub = FactorLayout::qubits(&pair).unwrap();
        h += l.embed(&sub, &random_hermitian(rng, 4)).unwrap();
    }
    DensityMatrix::normalized(l, gibbs(&h)).unwrap()
}

#[test]
fn pythagorean_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let p = parties(&[&["a"], &["b"], &["c"]]);
    for _ in 0..3 {
        let rho = random_state(&mut rng, FactorLayout::qubits(&["a", "b", "c"]).unwrap(), 8).unwrap();
        let sigma = random_two_local(&mut rng);
        let set = MarginalConstraintSet::from_state(&rho, &p, 2).unwrap();
        let tilde = iterative_maxent(&set, &SolverOptions::default()).unwrap().state;
        let lhs = relative_entropy(&rho, &sigma).unwrap();
        let rhs = relative_entropy(&rho, &tilde).unwrap() + relative_entropy(&tilde, &sigma).unwrap();
        assert!((lhs - rhs).abs() < 1e-6, "{lhs} vs {rhs}");
    }
}

#[test]
fn solver_result_is_independent_of_the_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let rho = random_state(&mut rng, FactorLayout::qubits(&["a", "b", "c"]).unwrap(), 8).unwrap();
    let set = MarginalConstraintSet::from_state(&rho, &parties(&[&["a"], &["b"], &["c"]]), 2).unwrap();
    let spread = uniqueness_spread(&set, &SolverOptions::default(), &[1, 2, 3, 4, 5]).unwrap();
    assert!(spread < 1e-5, "{spread}");
}

/// Remove every component of `x` that has an identity factor on some party,
/// so that all two-party marginals vanish.
fn strip_pair_marginals(x: &CMat, dims: [usize; 3]) -> CMat {
    let [da, db, dc] = dims;
    let mut out = x.clone();
    // apply (1 − E_k) for each party k, where E_k replaces party k by its trace times 1/d
    for k in 0..3 {
        let l = FactorLayout::new(&[("0", da), ("1", db), ("2", dc)]).unwrap();
        let rest: Vec<String> = (0..3).filter(|&j| j != k).map(|j| j.to_string()).collect();
        let (sub, reduced) = l.partial_trace(&out, &rest).unwrap();
        let dk = [da, db, dc][k];
        let avg = l.embed(&sub, &reduced).unwrap().unscale(dk as f64);
        out -= avg;
    }
    out
}

#[test]
fn merge_beats_marginal_preserving_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let rho = random_chain_qms(&mut rng, &small_shape()).unwrap();
    let merged = merge_annulus(&rho, &chain_split()).unwrap();
    // view as three parties A, B = B1 B2, C
    let dims = [2, 9, 2];
    let flat = merged.relabel(FactorLayout::new(&[("A", 2), ("B", 9), ("C", 2)]).unwrap()).unwrap();
    let base = von_neumann_entropy(&flat);
    let low = flat.eigenvalues().last().copied().unwrap();
    for _ in 0..50 {
        let x = strip_pair_marginals(&random_hermitian(&mut rng, 36), dims);
        let norm = topocorr::linalg::trace_norm_herm(&x);
        let t = rng.gen_range(0.1..0.9) * low / norm.max(1e-12);
        let sigma = DensityMatrix::new(flat.layout().clone(), flat.data() + x.scale(t)).unwrap();
        for pair in [["A", "B"], ["B", "C"], ["A", "C"]] {
            let d = trace_distance(&sigma.partial_trace(&pair).unwrap(), &flat.partial_trace(&pair).unwrap()).unwrap();
            assert!(d < 1e-12);
        }
        assert!(von_neumann_entropy(&sigma) <= base + 1e-12);
    }
}

#[test]
fn helpers_are_consistent() {
    // trace_first / trace_second split a product
    let a = CMat::identity(2, 2).scale(0.5);
    let b = CMat::identity(3, 3).unscale(3.0);
    let ab = kron(&a, &b);
    assert!(max_abs(&(trace_second(&ab, 2, 3) - &a)) < 1e-15);
    assert!(max_abs(&(trace_first(&ab, 2, 3) - &b)) < 1e-15);
}
