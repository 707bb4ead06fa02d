//! Cross-mode agreement for the three applications at moderate sizes:
//! every supported execution mode must produce the plain-function answer,
//! and the hybrid split must stay faithful to its two-phase semantics.

use sfe_core::apps::{
    garbled_rows, Database, DatabaseConfig, DbQuery, Millionaires, Mode, RoadNetwork,
};
use sfe_core::circuit::build::{gen_dijkstra_full, gen_dijkstra_sensitive};
use sfe_core::oram::StoreKind;

#[test]
fn comparison_modes_agree_at_kilobit_width() {
    for seed in [301u64, 302, 303] {
        let game = Millionaires::random(1024, seed).unwrap();
        let want = game.expected();
        for mode in [Mode::Naive, Mode::Sgx, Mode::Gc] {
            let got = game.run(mode, 80, seed).unwrap();
            assert_eq!(got.alice_larger, want, "seed {seed} mode {mode}");
        }
    }
}

#[test]
fn lookup_modes_agree_on_random_read_workloads() {
    for seed in [410u64, 411] {
        let cfg = DatabaseConfig::random_reads(64, 16, 4, StoreKind::Tree, seed);
        let db = Database::new(cfg).unwrap();
        let want = db.expected(Mode::Naive);
        for mode in Mode::all() {
            let got = db.run(mode, 80, seed + 7).unwrap();
            assert_eq!(got.results, want, "seed {seed} mode {mode}");
        }
    }
}

#[test]
fn lookup_modes_agree_on_mixed_read_write_workloads() {
    let queries = vec![
        DbQuery::select(3),
        DbQuery::set(3, 5_000_000_000),
        DbQuery::select(3),
        DbQuery::set(60, 17),
        DbQuery::select(60),
        DbQuery::select(0),
    ];
    let cfg = DatabaseConfig { entry_count: 64, queries, store: StoreKind::Tree, seed: 5 };
    let db = Database::new(cfg).unwrap();
    let want = db.expected(Mode::Sgx);
    for mode in [Mode::Naive, Mode::Sgx, Mode::Gc] {
        let got = db.run(mode, 80, 99).unwrap();
        assert_eq!(got.results, want, "mode {mode}");
    }
}

#[test]
fn routing_modes_agree_at_moderate_size() {
    use sfe_core::apps::DijkstraConfig;
    for seed in [21u64, 22] {
        let cfg = DijkstraConfig { nonsensitive: 12, entrances: 3, sensitive: 6, seed };
        let net = RoadNetwork::generate(cfg).unwrap();
        let (want_cost, want_route, optima) = net.expected();
        for mode in Mode::all() {
            let got = net.run(mode, 80, seed + 50).unwrap();
            assert_eq!(got.cost, want_cost, "seed {seed} mode {mode}");
            if optima == 1 {
                assert_eq!(got.route, want_route, "seed {seed} mode {mode}");
            }
        }
    }
}

#[test]
fn hybrid_routing_matches_the_reference_at_survey_scale() {
    use sfe_core::apps::DijkstraConfig;
    let cfg = DijkstraConfig { nonsensitive: 20, entrances: 12, sensitive: 20, seed: 8 };
    let net = RoadNetwork::generate(cfg).unwrap();
    let (want_cost, want_route, optima) = net.expected();
    for mode in [Mode::Sgx, Mode::Hybrid] {
        let got = net.run(mode, 80, 31).unwrap();
        assert_eq!(got.cost, want_cost, "mode {mode}");
        if optima == 1 {
            assert_eq!(got.route, want_route, "mode {mode}");
        }
    }
}

#[test]
fn hybrid_circuit_is_much_smaller_than_the_monolithic_one() {
    // The gap opens with the ordinary network: the district circuit's size
    // is independent of it, the monolithic circuit pays for every node.
    use sfe_core::apps::DijkstraConfig;
    let cfg = DijkstraConfig { nonsensitive: 50, entrances: 12, sensitive: 20, seed: 8 };
    let net = RoadNetwork::generate(cfg).unwrap();
    let district = garbled_rows(&gen_dijkstra_sensitive(&net.region_spec()));
    let whole = garbled_rows(&gen_dijkstra_full(&net.full_spec()));
    assert!(
        district * 2 < whole,
        "district circuit ({district} rows) should be far below the whole graph ({whole} rows)"
    );
}
