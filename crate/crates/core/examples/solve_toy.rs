//! Solves a small hand-written instance and prints the packing.

use std::time::Duration;

use slopp::model::{oriented_size, volume_utilization};
use slopp::{solve, Container, Instance, ItemClass, SearchConfig};

fn main() {
    // a 10x6x4 crate; the tall boxes may only stand on their 2x3 base
    let instance = Instance::new(
        "toy",
        Container::new([10, 6, 4]).unwrap(),
        vec![
            ItemClass::new([5, 3, 2], [true, true, true], 6),
            ItemClass::new([2, 3, 4], [false, false, true], 4),
            ItemClass::new([1, 1, 1], [true, true, true], 6),
        ],
    )
    .unwrap();

    let config = SearchConfig {
        time_limit: Duration::from_secs(5),
        ..SearchConfig::default()
    };
    let (best, stats) = solve(&instance, &config, |_: &_| {});

    println!(
        "leftover {} of {} (VU {:.2}%), {} boxes left, optimal: {}",
        best.objective,
        instance.payload_volume(),
        100.0 * volume_utilization(&instance, &best),
        best.left_boxes(),
        stats.proved_optimal
    );
    let mut placed = best.canonicalize(&instance).placed;
    placed.sort_by_key(|p| p.item_index);
    for p in placed {
        let size = oriented_size(instance.class(p.class_index), p.rotation);
        println!(
            "item {:>2} class {} at {:?} size {:?} rotation {}",
            p.item_index, p.class_index, p.pos, size, p.rotation
        );
    }
    println!(
        "{} nodes, {} propagator calls, {:.3}s",
        stats.nodes_explored,
        stats.propagations,
        stats.wall_time.as_secs_f64()
    );
}
