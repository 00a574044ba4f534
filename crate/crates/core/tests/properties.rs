use polydisc::coloring::{
    anchored_discrepancy, evaluate_discrepancy, exact_discrepancy, hereditary_discrepancy_exact, tusnady_coloring,
    transference_halving, Coloring, HalvingRound,
};
use polydisc::decomposition::{brianchon_gram, verify_signed_decomposition};
use polydisc::gamma2::{dyadic_factorization, gamma2_bracket, trace_norm_lower_bound};
use polydisc::geodisc::{evaluate_corner, star_discrepancy};
use polydisc::geometry::{haar_rotation, Polytope};
use polydisc::gamma2::Factorization;
use polydisc::linalg::SparseMatrix;
use polydisc::privacy::{private_answers, MechanismConfig, Neighboring};
use polydisc::rangestruct::{random_workload, replay, ObliviousStructure};
use polydisc::setsystems::{anchored_boxes_system, SetSystem};
use proptest::prelude::*;

fn points(max_n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..1.0, d), 1..=max_n)
}

/// Coordinates on a coarse grid so ties are common.
fn tied_points(max_n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec((0u8..5).prop_map(|k| f64::from(k) / 4.0), d), 1..=max_n)
}

fn signs(n: usize) -> impl Strategy<Value = Coloring> {
    prop::collection::vec(prop::bool::ANY, n).prop_map(|b| Coloring::new(b.iter().map(|&x| if x { 1 } else { -1 }).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn oracle_dominates_and_ignores_global_flip(pts in tied_points(10, 2), seed in any::<u64>()) {
        let s = anchored_boxes_system(&pts).unwrap();
        let (best, witness) = exact_discrepancy(&s).unwrap();
        let chi = Coloring::new((0..pts.len()).map(|j| if (seed >> (j % 64)) & 1 == 1 { 1 } else { -1 }).collect()).unwrap();
        let v = evaluate_discrepancy(&s, &chi).unwrap().0;
        prop_assert!(best <= v);
        prop_assert_eq!(v, evaluate_discrepancy(&s, &chi.flipped()).unwrap().0);
        prop_assert_eq!(evaluate_discrepancy(&s, &witness).unwrap().0, best);
        prop_assert!(hereditary_discrepancy_exact(&s).unwrap() >= best);
    }

    #[test]
    fn dyadic_product_is_the_incidence(d in 1usize..=3, pts in points(24, 3)) {
        let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p[..d].to_vec()).collect();
        let f = dyadic_factorization(&pts).unwrap();
        let a = anchored_boxes_system(&pts).unwrap().incidence();
        prop_assert!(f.product().exactly_equals(&a));
        let levels = (pts.len() as f64).log2().ceil();
        prop_assert!(f.value() <= (1.0 + levels).powi(d as i32) + 1e-9);
    }

    #[test]
    fn trace_norm_sits_below_every_candidate(pts in tied_points(12, 2)) {
        let s = anchored_boxes_system(&pts).unwrap();
        let b = gamma2_bracket(&s).unwrap();
        let lower = trace_norm_lower_bound(&s.incidence()).unwrap();
        prop_assert!((b.lower - lower).abs() < 1e-12);
        for (v, _) in &b.candidates {
            prop_assert!(lower <= *v + 1e-9);
        }
    }

    #[test]
    fn sweep_matches_trace_evaluation(pts in tied_points(14, 2), chi in signs(14)) {
        let chi = Coloring::new(chi.signs[..pts.len()].to_vec()).unwrap();
        let s = anchored_boxes_system(&pts).unwrap();
        prop_assert_eq!(anchored_discrepancy(&pts, &chi).unwrap().0, evaluate_discrepancy(&s, &chi).unwrap().0);
    }

    #[test]
    fn tusnady_prefix_identity(pts in points(40, 2)) {
        let t = tusnady_coloring(&pts).unwrap();
        let direct = evaluate_discrepancy(&anchored_boxes_system(&pts).unwrap(), &t.coloring).unwrap().0;
        prop_assert_eq!(t.achieved, direct as f64);
    }

    #[test]
    fn brianchon_gram_on_random_triangles(v in prop::collection::vec(0.05f64..0.95, 6), probes in points(200, 2)) {
        let verts = vec![vec![v[0], v[1]], vec![v[2], v[3]], vec![v[4], v[5]]];
        let area = ((v[2] - v[0]) * (v[5] - v[1]) - (v[4] - v[0]) * (v[3] - v[1])).abs();
        prop_assume!(area > 1e-3);
        let tri = Polytope::from_vertices(verts).unwrap();
        let dec = brianchon_gram(&tri).unwrap();
        prop_assert_eq!(dec.budget(), 7);
        prop_assert_eq!(verify_signed_decomposition(&dec, &tri, &probes), 0);
    }

    #[test]
    fn star_discrepancy_witness_and_symmetry(pts in points(20, 2)) {
        let r = star_discrepancy(&pts).unwrap();
        prop_assert_eq!(evaluate_corner(&pts, &r.witness, r.from_below), r.value);
        let swapped: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[1], p[0]]).collect();
        prop_assert!((star_discrepancy(&swapped).unwrap().value - r.value).abs() < 1e-12);
    }

    #[test]
    fn halving_obeys_transference(pts in points(24, 2)) {
        prop_assume!(pts.len() >= 2);
        let target = pts.len().div_ceil(2);
        let (kept, rounds) = transference_halving(&pts, anchored_boxes_system, target).unwrap();
        prop_assert!(kept.len() == pts.len() / 2 || kept.len() == target);
        prop_assert!(rounds.iter().all(HalvingRound::transference_holds));
    }

    #[test]
    fn replay_agrees_with_naive(pts in points(30, 2), seed in any::<u64>()) {
        let mut s = ObliviousStructure::build(&dyadic_factorization(&pts).unwrap()).unwrap();
        let ops = random_workload(s.points(), s.ranges(), 300, seed);
        prop_assert_eq!(replay(&mut s, &ops).unwrap().mismatches, 0);
    }

    #[test]
    fn haar_rotations_are_orthogonal(d in 1usize..=4, seed in any::<u64>()) {
        prop_assert!(haar_rotation(d, seed).orthogonality_defect() < 1e-12);
    }
}

#[test]
fn permuting_ranges_permutes_answers() {
    let pts: Vec<Vec<f64>> = (0..16).map(|k| vec![(k * 3 % 16) as f64, (k * 7 % 16) as f64]).collect();
    let f = dyadic_factorization(&pts).unwrap();
    let m = f.u.nrows();
    let perm: Vec<usize> = (0..m).map(|i| (i * 5 + 3) % m).collect();
    assert_eq!(gcd(5, m), 1, "the map must be a permutation");
    let rows: Vec<Vec<(usize, f64)>> = perm.iter().map(|&i| f.u.row(i).collect()).collect();
    let permuted = Factorization::new(SparseMatrix::from_rows(f.u.ncols(), rows).unwrap(), f.v.clone()).unwrap();
    let c = MechanismConfig::new(1.0, 1e-6, &f, Neighboring::AddRemove).unwrap();
    let h = vec![1u64; 16];
    let a = private_answers(&c, &f, &h, 11).unwrap();
    let b = private_answers(&c, &permuted, &h, 11).unwrap();
    for (k, &i) in perm.iter().enumerate() {
        assert_eq!(b[k], a[i]);
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

#[test]
fn explicit_systems_keep_their_rows() {
    let s = SetSystem::explicit(4, vec![vec![2, 0], vec![1]]).unwrap();
    assert_eq!(exact_discrepancy(&s).unwrap().0, 1);
}
