mod common;

use causalbench::discovery::{
    empty_baseline, fully_random_baseline, h_acyclicity, notears_linear, r2_scores, r2_sort_order, r2_sortnregress,
    sortnregress, var_sort_order, var_sortnregress, NoTearsParams, Prune,
};
use causalbench::dos::{dos_single, ScenarioPair};
use causalbench::graph::GraphKind;
use causalbench::metrics::{cod, evaluate};
use causalbench::scm::{sample_dataset, standardize, Dataset, MechanismMap, SimConfig, Simulation, W_LOWER};
use causalbench::{Dag, GraphSpec, Matrix, NodeOrder, WeightedAdjacency64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn linear_data(g: &Dag, weights: &[((usize, usize), f64)], n: usize, seed: u64) -> Dataset<f64> {
    let mut w = WeightedAdjacency64::zeros(g.node_count());
    for &((i, j), v) in weights {
        w.set(i, j, v);
    }
    sample_dataset(g, &w, &MechanismMap::all_linear(g), n, &mut rng(seed)).unwrap()
}

fn chain(n: usize, seed: u64) -> (Dag, Dataset<f64>) {
    let g = Dag::new(3, &[(0, 1), (1, 2)]).unwrap();
    let ds = linear_data(&g, &[((0, 1), 2.0), ((1, 2), 2.0)], n, seed);
    (g, ds)
}

/// A sample whose covariance equals `sigma` exactly: whiten random draws with
/// their own covariance, then colour them with the Cholesky factor of `sigma`.
fn exact_moment_data(sigma: &Matrix<f64>, n: usize, seed: u64) -> Dataset<f64> {
    let d = sigma.nrows();
    let mut r = rng(seed);
    let raw = Dataset::new(Matrix::from_fn(n, d, |_, _| r.sample::<f64, _>(StandardNormal))).unwrap();
    let means = raw.column_means();
    let ls_inv = raw.covariance().cholesky().unwrap().inverse().unwrap();
    let target = sigma.cholesky().unwrap();
    let map = target.matmul(&ls_inv).transpose();
    let centered = Matrix::from_fn(n, d, |i, j| raw.values()[(i, j)] - means[j]);
    Dataset::new(centered.matmul(&map)).unwrap()
}

fn collider_cov() -> Matrix<f64> {
    // X1, X2 ~ N(0, 1), X3 = 2 X1 + 2 X2 + N
    Matrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 2.0], vec![2.0, 2.0, 9.0]]).unwrap()
}

#[test]
fn variance_order_of_a_chain() {
    let (_, ds) = chain(100_000, 1);
    assert_eq!(var_sort_order(&ds).as_slice(), &[0, 1, 2]);
    let z = standardize(&ds).unwrap();
    let fit = var_sortnregress(&z).unwrap();
    assert_eq!(fit.order.as_slice(), &[0, 1, 2]);
    // reversed column labels: standardized order falls back to index order
    let flipped = Dataset::new(Matrix::from_fn(ds.n(), 3, |r, j| ds.values()[(r, 2 - j)])).unwrap();
    assert_eq!(var_sort_order(&flipped).as_slice(), &[2, 1, 0]);
    assert_eq!(var_sort_order(&standardize(&flipped).unwrap()).as_slice(), &[0, 1, 2]);
}

#[test]
fn single_variable_inputs() {
    let ds = Dataset::new(Matrix::from_fn(50, 1, |r, _| r as f64)).unwrap();
    assert_eq!(var_sort_order(&ds).as_slice(), &[0]);
    assert_eq!(r2_sort_order(&ds).as_slice(), &[0]);
    let fit = sortnregress(&ds, &NodeOrder::identity(1), Prune::LassoBic).unwrap();
    assert_eq!(fit.g_est.edge_count(), 0);
}

#[test]
fn r2_order_of_a_collider() {
    let exact = exact_moment_data(&collider_cov(), 2_000, 2);
    let r2 = r2_scores(&exact);
    assert!((r2[0] - 0.8).abs() < 1e-12 && (r2[1] - 0.8).abs() < 1e-12);
    assert!((r2[2] - 8.0 / 9.0).abs() < 1e-12);
    assert_eq!(r2_sort_order(&exact).as_slice(), &[0, 1, 2]);

    let g = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
    let sampled = linear_data(&g, &[((0, 2), 2.0), ((1, 2), 2.0)], 100_000, 3);
    assert_eq!(r2_sort_order(&sampled).as_slice()[2], 2);
}

#[test]
fn r2_order_is_scale_invariant() {
    let exact = exact_moment_data(&collider_cov(), 2_000, 4);
    let g = Dag::new(3, &[(0, 2), (1, 2)]).unwrap();
    let sampled = linear_data(&g, &[((0, 2), 2.0), ((1, 2), 2.0)], 100_000, 5);
    for ds in [exact, sampled] {
        let base = r2_sort_order(&ds);
        for scale in [[10.0, 1.0, 1.0], [1.0, 0.01, 1.0], [3.0, 7.0, 0.2]] {
            let shift = [0.0; 3];
            let inv: Vec<f64> = scale.iter().map(|s| 1.0 / s).collect();
            assert_eq!(r2_sort_order(&ds.affine(&shift, &inv)), base);
        }
        assert_eq!(r2_sort_order(&standardize(&ds).unwrap()), base);
    }
}

#[test]
fn two_variable_r2_is_symmetric() {
    let g = Dag::new(2, &[(1, 0)]).unwrap();
    let ds = linear_data(&g, &[((1, 0), 1.3)], 500, 6);
    let r2 = r2_scores(&ds);
    assert!((r2[0] - r2[1]).abs() < 1e-12);
    assert_eq!(r2_sort_order(&ds).as_slice(), &[0, 1]);
}

#[test]
fn independent_columns_have_negligible_r2() {
    let ds = linear_data(&Dag::empty(4), &[], 100_000, 7);
    assert!(r2_scores(&ds).iter().all(|&r| r < 1e-3));
}

#[test]
fn sortnregress_recovers_chain_weights() {
    let (g, ds) = chain(2_500, 8);
    let fit = sortnregress(&ds, &NodeOrder::identity(3), Prune::LassoBic).unwrap();
    assert_eq!(fit.g_est.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    assert!((fit.w_est.get(0, 1) - 2.0).abs() < 0.1);
    assert!((fit.w_est.get(1, 2) - 2.0).abs() < 0.1);
}

#[test]
fn reversed_order_cannot_orient_true_edges() {
    let (g, ds) = chain(2_500, 9);
    let order = NodeOrder::new(vec![2, 1, 0]).unwrap();
    let fit = sortnregress(&ds, &order, Prune::LassoBic).unwrap();
    assert!(g.edges().all(|(i, j)| !fit.g_est.has_edge(i, j)));
    assert_eq!(cod(&g, &fit.order).unwrap(), 2);
}

#[test]
fn r2_sortnregress_uses_the_r2_order() {
    let sim: Simulation<f64> = SimConfig {
        graph: GraphSpec::matched(8, GraphKind::Er, 0.4),
        relu_fraction: 0.5,
        w_lower: W_LOWER,
        w_upper: 2.0,
        n: 1_000,
    }
    .simulate(&mut rng(10))
    .unwrap();
    let fit = r2_sortnregress(&sim.data).unwrap();
    assert_eq!(fit.order, r2_sort_order(&sim.data));
    assert!(fit.order.is_linear_extension_of(&fit.g_est));
    let fit = var_sortnregress(&sim.data).unwrap();
    assert_eq!(fit.order, var_sort_order(&sim.data));
}

#[test]
fn acyclicity_gradient_matches_central_differences() {
    let mut r = rng(11);
    for _ in 0..10 {
        let w: Matrix<f64> = Matrix::from_fn(5, 5, |i, j| if i == j { 0.0 } else { r.random_range(-1.0..1.0) });
        let (_, grad) = h_acyclicity(&w).unwrap();
        let eps = 1e-6;
        for i in 0..5 {
            for j in 0..5 {
                let mut plus = w.clone();
                plus[(i, j)] += eps;
                let mut minus = w.clone();
                minus[(i, j)] -= eps;
                let fd = (h_acyclicity(&plus).unwrap().0 - h_acyclicity(&minus).unwrap().0) / (2.0 * eps);
                let g = grad[(i, j)];
                assert!((fd - g).abs() <= 1e-5 * g.abs().max(1.0), "({i},{j}) fd {fd} grad {g}");
            }
        }
    }
}

#[test]
fn acyclicity_of_dags_and_cycles() {
    let mut r = rng(12);
    for _ in 0..20 {
        let g = common::random_dag(&mut r, 6, 0.5);
        let w = common::random_weights(&mut r, &g);
        assert!(h_acyclicity(&w).unwrap().0.abs() <= 1e-10);
    }
    let two_cycle = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let expected = 2.0 * 1f64.cosh() - 2.0;
    assert!((h_acyclicity(&two_cycle).unwrap().0 - expected).abs() < 1e-8);
    assert!(h_acyclicity(&Matrix::<f64>::zeros(2, 3)).is_err());
}

fn notears_instance(seed: u64) -> Simulation<f64> {
    SimConfig {
        graph: GraphSpec::matched(6, GraphKind::Er, 0.3),
        relu_fraction: 0.0,
        w_lower: W_LOWER,
        w_upper: 2.0,
        n: 1_000,
    }
    .simulate(&mut rng(seed))
    .unwrap()
}

#[test]
fn notears_contract() {
    let sim = notears_instance(13);
    let params = NoTearsParams::default();
    let fit = notears_linear(&sim.data, &params).unwrap();
    for i in 0..6 {
        assert_eq!(fit.w_est.get(i, i), 0.0);
    }
    assert_eq!(fit.diagnostics["objective_increases"], 0.0);
    if fit.diagnostics["converged"] == 1.0 {
        assert!(fit.diagnostics["h"] <= params.h_tol);
    }
    for (i, j) in fit.g_est.edges() {
        assert!(fit.w_est.get(i, j).abs() > params.prune_threshold);
    }
    let again = notears_linear(&sim.data, &params).unwrap();
    assert_eq!(fit, again);
}

#[test]
fn notears_single_precision_runs() {
    let sim = notears_instance(14);
    let values = Matrix::from_fn(sim.data.n(), sim.data.d(), |r, c| sim.data.values()[(r, c)] as f32);
    let ds = Dataset::new(values).unwrap();
    let fit = notears_linear(&ds, &NoTearsParams::default()).unwrap();
    assert!(fit.g_est.is_acyclic());
}

#[test]
fn notears_rejects_bad_params() {
    let sim = notears_instance(15);
    let bad = NoTearsParams {
        prune_threshold: -1.0,
        ..NoTearsParams::default()
    };
    assert!(notears_linear(&sim.data, &bad).is_err());
}

#[test]
fn baselines_score_as_documented() {
    let sim = notears_instance(16);
    let empty = empty_baseline(&sim.data);
    let ev = evaluate::<f64>(&sim.graph, &empty.g_est).unwrap();
    assert_eq!(ev.metrics.tpr, 0.0);
    assert_eq!(ev.metrics.fpr, 0.0);
    let ev = evaluate::<f64>(&Dag::empty(6), &empty.g_est).unwrap();
    assert_eq!(dos_single(&ev.metrics, &ScenarioPair::standard()).unwrap().value, 1.0);
    let a = fully_random_baseline(&sim.data, 0.3, &mut rng(1)).unwrap();
    let b = fully_random_baseline(&sim.data, 0.3, &mut rng(1)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_learner_returns_a_dag() {
    for seed in 0..4 {
        let sim: Simulation<f64> = SimConfig {
            graph: GraphSpec::matched(10, GraphKind::Sf, 0.4),
            relu_fraction: 0.7,
            w_lower: W_LOWER,
            w_upper: 4.0,
            n: 250,
        }
        .simulate(&mut rng(100 + seed))
        .unwrap();
        for ds in [sim.data.clone(), standardize(&sim.data).unwrap()] {
            assert!(var_sortnregress(&ds).unwrap().g_est.is_acyclic());
            assert!(r2_sortnregress(&ds).unwrap().g_est.is_acyclic());
            match notears_linear(&ds, &NoTearsParams::default()) {
                Ok(fit) => assert!(fit.g_est.is_acyclic()),
                Err(e) => assert!(matches!(e, causalbench::Error::CyclicResult)),
            }
        }
    }
}
