//! Streams improving solutions of a random mid-size instance as CSV.
//!
//! ```text
//! cargo run --release --example anytime_progress -- [seed] [millis] [workers]
//! ```

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slopp::io::{write_progress_csv, ProgressRecord};
use slopp::model::volume_utilization;
use slopp::search::Incumbent;
use slopp::{solve, Container, Instance, ItemClass, SearchConfig};

fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = (0..rng.gen_range(3..=6))
        .map(|_| {
            let dims = std::array::from_fn(|_| rng.gen_range(8..=40));
            let mut up = [false; 3];
            up[rng.gen_range(0..3)] = true;
            ItemClass::new(dims, up, rng.gen_range(3..=12))
        })
        .collect();
    Instance::new(
        format!("random_{seed}"),
        Container::new([120, 80, 70]).unwrap(),
        classes,
    )
    .unwrap()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>());
    let seed = args.next().transpose()?.unwrap_or(1);
    let millis = args.next().transpose()?.unwrap_or(2000);
    let workers = args.next().transpose()?.unwrap_or(1) as usize;

    let instance = random_instance(seed);
    let config = SearchConfig {
        time_limit: Duration::from_millis(millis),
        workers,
        seed,
        ..SearchConfig::default()
    };
    let mut rows = Vec::new();
    let (_, stats) = solve(&instance, &config, |inc: &Incumbent| {
        rows.push(ProgressRecord {
            elapsed: inc.found_at.as_secs_f64(),
            objective: inc.solution.objective,
            left_boxes: inc.solution.left_boxes(),
            volume_utilization: volume_utilization(&instance, &inc.solution),
        })
    });
    print!("{}", write_progress_csv(&rows)?);
    eprintln!(
        "{}: {} items, payload {}, proved optimal: {}",
        instance.name(),
        instance.num_items(),
        instance.payload_volume(),
        stats.proved_optimal
    );
    Ok(())
}
