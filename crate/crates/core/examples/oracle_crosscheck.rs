//! Compares the search against exhaustive enumeration on tiny instances.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slopp::oracle::{brute_force_optimal, OracleLimits};
use slopp::{solve, Container, Instance, ItemClass, SearchConfig};

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0));
    let config = SearchConfig {
        time_limit: Duration::from_secs(10),
        ..SearchConfig::default()
    };
    let (mut agree, mut oracle_nodes, mut search_nodes) = (0, 0, 0);
    let cases = 200;
    for n in 0..cases {
        let container = Container::new(std::array::from_fn(|_| rng.gen_range(2..=8))).unwrap();
        let mut left = rng.gen_range(2..=4);
        let mut classes = Vec::new();
        while left > 0 {
            let count = rng.gen_range(1..=left);
            left -= count;
            let dims = std::array::from_fn(|u| rng.gen_range(1..=container.dims()[u]));
            let mut up: [bool; 3] = std::array::from_fn(|_| rng.gen_bool(0.5));
            up[rng.gen_range(0..3)] = true;
            classes.push(ItemClass::new(dims, up, count));
        }
        let instance = Instance::new(format!("tiny_{n}"), container, classes).unwrap();

        let oracle = brute_force_optimal(&instance, OracleLimits::default()).expect("within oracle limits");
        let (best, stats) = solve(&instance, &config, |_: &_| {});
        oracle_nodes += oracle.nodes;
        search_nodes += stats.nodes_explored;
        if best.objective == oracle.objective && stats.proved_optimal {
            agree += 1;
        } else {
            println!(
                "{}: search {} oracle {}",
                instance.name(),
                best.objective,
                oracle.objective
            );
        }
    }
    println!("{agree}/{cases} agree; oracle visited {oracle_nodes} nodes, search {search_nodes}");
}
