//! End-to-end witness search on random instances: every bundle passes the
//! exhaustive certification, the two-agent EF[1,1] extraction always
//! succeeds, and the scanned vertex set is sufficient — optima seen at
//! random weight points are already present at some scanned vertex.

mod common;

use catfair_core::fairness;
use catfair_core::model::{build_slot_graph, Allocation};
use catfair_core::oracle;
use catfair_core::perturb::{compute_k, CostMode};
use catfair_core::search::{
    self, derive_ef11, find_witness, two_agent_sweep, SearchMode, SearchOptions,
};
use common::{random_normalized, random_simplex_point, GenConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn bundles_pass_exhaustive_certification() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let cfg = GenConfig::default();
    let mut cases = 0;
    while cases < 25 {
        let norm = random_normalized(&mut rng, &cfg);
        if oracle::feasible_count(&norm) > num_bigint::BigUint::from(10_000u32) {
            continue;
        }
        cases += 1;
        let bundle = find_witness(&norm, &SearchOptions::default()).unwrap();
        let n = norm.agents();
        assert!(bundle.realloc.len() <= n * (n - 1));
        assert!(bundle.stats.max_free_items <= n * (n - 1));
        let report = oracle::check_theorem1(&norm, &bundle, 100_000).unwrap();
        assert!(
            report.passed(),
            "certification failed: {:?}",
            report
                .verdicts
                .iter()
                .filter(|c| !c.passed)
                .collect::<Vec<_>>()
        );
        assert_eq!(report.theorem1_witnesses.len(), 1);
    }
}

#[test]
fn two_agent_sweep_yields_po_ef11() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let cfg = GenConfig {
        agents: (2, 2),
        ..GenConfig::default()
    };
    let mut cases = 0;
    while cases < 40 {
        let norm = random_normalized(&mut rng, &cfg);
        if oracle::feasible_count(&norm) > num_bigint::BigUint::from(10_000u32) {
            continue;
        }
        cases += 1;
        let opts = SearchOptions {
            mode: SearchMode::Sweep2,
            ..SearchOptions::default()
        };
        let bundle = two_agent_sweep(&norm, &opts).unwrap();
        let ef11 = derive_ef11(&norm, &bundle).unwrap();
        assert!(fairness::is_ef11(&norm, &ef11), "EF[1,1] violated");
        assert!(
            fairness::is_pareto_optimal_bruteforce(&norm, &ef11, 100_000).unwrap(),
            "EF[1,1] allocation not Pareto-optimal"
        );
    }
}

/// Vertex sufficiency: the set of optima at any random weight point is a
/// subset of the optima found at some scanned arrangement point.
#[test]
fn scanned_vertices_capture_all_optima() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let cfg = GenConfig {
        items: (1, 5),
        ..GenConfig::default()
    };
    let mut cases = 0;
    while cases < 10 {
        let norm = random_normalized(&mut rng, &cfg);
        if oracle::feasible_count(&norm) > num_bigint::BigUint::from(500u32) {
            continue;
        }
        cases += 1;
        let graph = build_slot_graph(&norm);
        let k = compute_k(&norm);
        let n = norm.agents();
        let hps = search::enumerate_cycle_hyperplanes(&graph, 1_000_000).unwrap();
        let rows = search::witness_rows(&norm, &graph, &k, &hps, &CostMode::Lex);
        let points = search::scan_points(&rows, n);
        let mut vertex_optima: Vec<Vec<Allocation>> = Vec::new();
        for t in &points {
            let eval = search::eval_point(&norm, &graph, &k, t, &CostMode::Lex).unwrap();
            let mut optima = eval.optima;
            optima.sort();
            vertex_optima.push(optima);
        }
        for _ in 0..30 {
            let t = random_simplex_point(&mut rng, n, 60);
            let t_lex: Vec<catfair_core::arith::LexCost> = t
                .iter()
                .map(|x| catfair_core::arith::LexCost::from_base(x.clone()))
                .collect();
            let eval = search::eval_point(&norm, &graph, &k, &t_lex, &CostMode::Lex).unwrap();
            let mut optima = eval.optima;
            optima.sort();
            let captured = vertex_optima
                .iter()
                .any(|vs| optima.iter().all(|a| vs.contains(a)));
            assert!(
                captured,
                "optima at a random weight point not present at any scanned vertex"
            );
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let cfg = GenConfig::default();
    let mut cases = 0;
    while cases < 10 {
        let norm = random_normalized(&mut rng, &cfg);
        if oracle::feasible_count(&norm) > num_bigint::BigUint::from(10_000u32) {
            continue;
        }
        cases += 1;
        let a = find_witness(&norm, &SearchOptions::default()).unwrap();
        let b = find_witness(&norm, &SearchOptions::default()).unwrap();
        assert_eq!(a.t_star.t(), b.t_star.t());
        assert_eq!(a.per_agent, b.per_agent);
        assert_eq!(a.realloc, b.realloc);
        assert_eq!(a.common, b.common);
    }
}

/// Explicit-ε arrangement search also succeeds and certifies (tiny sizes).
#[test]
fn explicit_mode_witness_on_tiny_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let cfg = GenConfig {
        agents: (2, 2),
        items: (1, 3),
        categories: (1, 1),
        ..GenConfig::default()
    };
    let mut cases = 0;
    while cases < 8 {
        let norm = random_normalized(&mut rng, &cfg);
        let graph = build_slot_graph(&norm);
        if graph.edge_count() > 12 {
            continue;
        }
        cases += 1;
        let spec = catfair_core::perturb::epsilon_explicit(
            &norm,
            catfair_core::perturb::default_alpha(&norm),
        )
        .unwrap();
        let opts = SearchOptions {
            cost_mode: CostMode::Explicit(spec),
            ..SearchOptions::default()
        };
        let bundle = find_witness(&norm, &opts).unwrap();
        let report = oracle::check_theorem1(&norm, &bundle, 100_000).unwrap();
        assert!(report.passed());
    }
}
