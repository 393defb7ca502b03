mod common;

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slopp::model::{validate, Instance};
use slopp::oracle::{brute_force_optimal, OracleLimits};
use slopp::search::{solve, Branching, Incumbent, SearchConfig};

fn family(seed: u64, n: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            if k % 2 == 0 {
                common::tight_instance(&mut rng, "t", 4, 8)
            } else {
                let items = rng.gen_range(1..=4);
                common::random_instance(&mut rng, "r", items, 8, 6)
            }
        })
        .collect()
}

fn agree(config: &SearchConfig, seed: u64, n: usize) {
    for inst in family(seed, n) {
        let oracle = brute_force_optimal(&inst, OracleLimits::default()).unwrap();
        let (best, stats) = solve(&inst, config, |_: &Incumbent| {});
        assert!(stats.proved_optimal, "{inst:?}");
        assert_eq!(best.objective, oracle.objective, "{inst:?}");
        assert!(validate(&inst, &best).is_empty());
    }
}

fn config() -> SearchConfig {
    SearchConfig {
        time_limit: Duration::from_secs(60),
        ..SearchConfig::default()
    }
}

#[test]
fn default_search_matches_oracle() {
    agree(&config(), 1, 400);
}

#[test]
fn without_item_symmetry() {
    let c = SearchConfig {
        item_symmetry: false,
        ..config()
    };
    agree(&c, 2, 200);
}

#[test]
fn random_class_branching() {
    let c = SearchConfig {
        branching: Branching::RandomClass,
        seed: 9,
        ..config()
    };
    agree(&c, 3, 200);
}

#[test]
fn several_workers() {
    let c = SearchConfig { workers: 3, ..config() };
    agree(&c, 4, 200);
}
