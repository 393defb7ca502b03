#![allow(dead_code)]

use proptest::prelude::*;
use rand::Rng;
use slopp::model::{Container, Instance, ItemClass, Length, Triple};

/// Random instance with at most `max_items` items over 1..=3 classes, every
/// length in `1..=max_len`.
pub fn random_instance(rng: &mut impl Rng, name: &str, max_items: usize, max_len: Length, max_box: Length) -> Instance {
    let container: Triple = std::array::from_fn(|_| rng.gen_range(1..=max_len));
    let num_classes = rng.gen_range(1..=3.min(max_items));
    let mut left = max_items;
    let mut classes = Vec::new();
    for k in 0..num_classes {
        let reserve = num_classes - k - 1;
        let count = rng.gen_range(1..=(left - reserve).max(1));
        left -= count;
        let mut flags: [bool; 3] = std::array::from_fn(|_| rng.gen_bool(0.6));
        if !flags.iter().any(|&f| f) {
            flags[rng.gen_range(0..3)] = true;
        }
        classes.push(ItemClass::new(
            std::array::from_fn(|_| rng.gen_range(1..=max_box)),
            flags,
            count,
        ));
    }
    Instance::new(name, Container::new(container).unwrap(), classes).unwrap()
}

pub fn arb_class(max_box: Length, max_count: usize) -> impl Strategy<Value = ItemClass> {
    (
        prop::array::uniform3(1..=max_box),
        prop::array::uniform3(any::<bool>()),
        1..=max_count,
        0..3usize,
    )
        .prop_map(|(dims, mut flags, count, forced)| {
            if !flags.iter().any(|&f| f) {
                flags[forced] = true;
            }
            ItemClass::new(dims, flags, count)
        })
}

/// Small instances, at most four items in total, sized for the oracle.
pub fn arb_small_instance() -> impl Strategy<Value = Instance> {
    (
        prop::array::uniform3(1..=6 as Length),
        prop::collection::vec(arb_class(4, 2), 1..=3),
    )
        .prop_filter("at most four items", |(_, cs)| {
            cs.iter().map(|c| c.count).sum::<usize>() <= 4
        })
        .prop_map(|(dims, classes)| Instance::new("p", Container::new(dims).unwrap(), classes).unwrap())
}

pub fn arb_instance(
    max_len: Length,
    max_box: Length,
    max_classes: usize,
    max_count: usize,
) -> impl Strategy<Value = Instance> {
    (
        prop::array::uniform3(1..=max_len),
        prop::collection::vec(arb_class(max_box, max_count), 1..=max_classes),
    )
        .prop_map(|(dims, classes)| Instance::new("p", Container::new(dims).unwrap(), classes).unwrap())
}

/// Instance with 2..=`max_items` items whose sides run up to 90% of the
/// matching container side, so that packings compete for space.
pub fn tight_instance(rng: &mut impl Rng, name: &str, max_items: usize, max_len: Length) -> Instance {
    let items = rng.gen_range(2..=max_items);
    let container: Triple = std::array::from_fn(|_| rng.gen_range(2..=max_len));
    let num_classes = rng.gen_range(1..=3.min(items));
    let mut left = items;
    let mut classes = Vec::new();
    for k in 0..num_classes {
        let count = if k + 1 == num_classes {
            left
        } else {
            rng.gen_range(1..=left - (num_classes - k - 1))
        };
        left -= count;
        let mut flags: [bool; 3] = std::array::from_fn(|_| rng.gen_bool(0.6));
        if !flags.iter().any(|&f| f) {
            flags[rng.gen_range(0..3)] = true;
        }
        let dims: Triple =
            std::array::from_fn(|u| rng.gen_range(1..=((container[u] as f64 * 0.9).ceil() as Length).max(1)));
        classes.push(ItemClass::new(dims, flags, count));
    }
    Instance::new(name, Container::new(container).unwrap(), classes).unwrap()
}
