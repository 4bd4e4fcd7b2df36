mod common;

use causalbench::metrics::{confusion, evaluate, is_valid_adjustment, nsid, sid, varsortability, MetricVector};
use causalbench::scm::{sample_dataset, sample_weights, standardize, MechanismMap};
use causalbench::{Dag, Digraph};
use common::LinearGaussian;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lg_models<R: Rng>(rng: &mut R, g: &Dag, draws: usize) -> Vec<LinearGaussian> {
    (0..draws)
        .map(|_| LinearGaussian::new(&common::random_weights(rng, g)))
        .collect()
}

#[test]
fn sid_matches_linear_gaussian_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for pair in 0..500 {
        let d = 2 + pair % 3;
        let (p, q) = (rng.random_range(0.2..0.9), rng.random_range(0.2..0.9));
        let truth = common::random_dag(&mut rng, d, p);
        let estimate = common::random_dag(&mut rng, d, q);
        let models = lg_models(&mut rng, &truth, 3);
        assert_eq!(
            sid(&truth, &estimate).unwrap(),
            common::oracle_sid(&models, &estimate),
            "truth {:?} estimate {:?}",
            truth.edges().collect::<Vec<_>>(),
            estimate.edges().collect::<Vec<_>>()
        );
    }
}

#[test]
fn adjustment_criterion_matches_oracle_exhaustively() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in 2..=4 {
        for truth in common::all_dags(d) {
            let models = lg_models(&mut rng, &truth, 3);
            for i in 0..d {
                for j in 0..d {
                    if i == j {
                        continue;
                    }
                    let rest: Vec<usize> = (0..d).filter(|&v| v != i).collect();
                    for z in common::subsets(&rest) {
                        assert_eq!(
                            is_valid_adjustment(&truth, i, j, &z),
                            common::oracle_adjustment_ok(&models, i, j, &z),
                            "truth {:?} ({i},{j}) z={z:?}",
                            truth.edges().collect::<Vec<_>>()
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn metric_ranges_over_all_small_pairs() {
    for d in 1..=3 {
        let dags = common::all_dags(d);
        for t in &dags {
            for e in &dags {
                let ev = evaluate::<f64>(t, e).unwrap();
                ev.metrics.validate().unwrap();
            }
        }
    }
    let dags4 = common::all_dags(4);
    for t in dags4.iter().step_by(37) {
        for e in &dags4 {
            evaluate::<f64>(t, e).unwrap().metrics.validate().unwrap();
        }
    }
}

#[test]
fn identity_over_random_dags() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let ideal = MetricVector::from_array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    for _ in 0..200 {
        let d = rng.random_range(1..15);
        let p = rng.random_range(0.0..0.8);
        let g = common::random_dag(&mut rng, d, p);
        assert_eq!(evaluate::<f64>(&g, &g).unwrap().metrics, ideal);
    }
}

#[test]
fn sid_rejects_cyclic_estimate_and_size_mismatch() {
    let truth = Dag::new(3, &[(0, 1)]).unwrap();
    let cyclic = Digraph::from_edges(3, &[(0, 1), (1, 0)]).unwrap();
    assert!(sid(&truth, &cyclic).is_err());
    assert!(evaluate::<f64>(&truth, &cyclic).is_err());
    assert!(confusion(&truth, &Digraph::empty(4)).is_err());
}

#[test]
fn nsid_of_reversed_edge_is_one() {
    let t = Dag::new(2, &[(0, 1)]).unwrap();
    let e = Digraph::from_edges(2, &[(1, 0)]).unwrap();
    assert_eq!(nsid::<f64>(&t, &e).unwrap(), 1.0);
}

#[test]
fn varsortability_of_unit_weight_chains_is_one() {
    // with |w| >= 1 every child variance exceeds its parent's analytically
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = Dag::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
    let w = sample_weights::<f64, _>(&g, 1.0, 2.0, &mut rng).unwrap();
    let ds = sample_dataset(&g, &w, &MechanismMap::all_linear(&g), 100_000, &mut rng).unwrap();
    assert_eq!(varsortability(&g, &ds).unwrap(), 1.0);
    assert_eq!(varsortability(&g, &standardize(&ds).unwrap()).unwrap(), 0.0);
    assert!(varsortability(&Dag::empty(4), &ds).is_err());
}

fn arb_pair() -> impl Strategy<Value = (Dag, Dag, Vec<usize>)> {
    (1usize..=6, 0.0f64..0.9, 0.0f64..0.9, any::<u64>()).prop_map(|(d, p, q, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_dag(&mut rng, d, p);
        let e = common::random_dag(&mut rng, d, q);
        let mut perm: Vec<usize> = (0..d).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
        (t, e, perm)
    })
}

proptest! {
    #[test]
    fn counts_are_conserved((t, e, _) in arb_pair()) {
        let c = confusion(&t, &e).unwrap();
        prop_assert_eq!(c.tp_dir + c.reversed + c.fp_skel, c.e_est);
        prop_assert_eq!(c.tp_dir + c.reversed + c.missing, c.t_true);
        prop_assert_eq!(c.shd(), c.fp_skel + c.missing + c.reversed);
    }

    #[test]
    fn metrics_stay_in_unit_interval((t, e, _) in arb_pair()) {
        let ev = evaluate::<f64>(&t, &e).unwrap();
        prop_assert!(ev.metrics.validate().is_ok());
        let ev32 = evaluate::<f32>(&t, &e).unwrap();
        prop_assert!(ev32.metrics.validate().is_ok());
    }

    #[test]
    fn metrics_are_permutation_equivariant((t, e, perm) in arb_pair()) {
        let a = evaluate::<f64>(&t, &e).unwrap();
        let b = evaluate::<f64>(&t.permuted(&perm), &e.permuted(&perm)).unwrap();
        prop_assert_eq!(a.counts, b.counts);
        prop_assert_eq!(a.sid, b.sid);
        prop_assert_eq!(a.metrics.tpr, b.metrics.tpr);
        prop_assert_eq!(a.metrics.fpr, b.metrics.fpr);
        prop_assert_eq!(a.metrics.nshd, b.metrics.nshd);
        prop_assert_eq!(a.metrics.f1, b.metrics.f1);
        prop_assert_eq!(a.metrics.nsid, b.metrics.nsid);
    }

    #[test]
    fn supergraph_of_truth_has_zero_sid_when_consistent(seed in any::<u64>(), d in 2usize..7) {
        // adding edges that respect a topological order of the truth never hides a parent
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = common::random_dag(&mut rng, d, 0.4);
        let order = t.topological_order();
        let p = order.as_slice();
        let mut e = t.as_digraph().clone();
        for a in 0..d {
            for b in a + 1..d {
                if rng.random_bool(0.3) {
                    e.add_edge(p[a], p[b]).unwrap();
                }
            }
        }
        prop_assert_eq!(sid(&t, &e).unwrap(), 0);
    }
}
