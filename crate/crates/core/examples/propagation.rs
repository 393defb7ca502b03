//! Shows position bounds at the root and after one decision.

use slopp::model::Rotation;
use slopp::propagate::{propagate_fixpoint, DomainStore, Problem};
use slopp::{Container, Instance, ItemClass};

fn show(title: &str, store: &DomainStore) {
    println!("{title}");
    for (i, d) in store.items().iter().enumerate() {
        println!(
            "  item {i}: {:?} lo {:?} hi {:?} rotations {}",
            d.status,
            d.lo,
            d.hi,
            d.rotations.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
        );
    }
}

fn main() {
    let instance = Instance::new(
        "bounds",
        Container::new([10, 5, 4]).unwrap(),
        vec![
            ItemClass::new([6, 3, 2], [false, false, true], 1),
            ItemClass::new([4, 4, 4], [true, true, true], 2),
        ],
    )
    .unwrap();
    let problem = Problem::new(&instance, true);
    let mut count = 0;

    let mut store = DomainStore::root(&problem);
    show("before propagation", &store);
    propagate_fixpoint(&mut store, &problem, &mut count);
    show("root fixpoint", &store);

    // lay the slab on top of the others; the cubes need the full height
    store.pack(&problem, 0, Rotation::IDENTITY, [0, 0, 2]);
    store.mark_packed(&problem, 1);
    let outcome = propagate_fixpoint(&mut store, &problem, &mut count);
    show(&format!("slab at (0,0,2), cube 1 packed: {outcome:?}"), &store);
    println!("{count} propagator calls");
}
