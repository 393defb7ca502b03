//! Writes a solution to JSON, corrupts it in a few ways and shows what the
//! checker reports for each.

use std::time::Duration;

use slopp::io::{read_solution_json, write_solution_json};
use slopp::{solve, Container, Instance, ItemClass, SearchConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let instance = Instance::new(
        "demo",
        Container::new([6, 4, 3]).unwrap(),
        vec![
            ItemClass::new([3, 2, 3], [true, true, true], 3),
            ItemClass::new([2, 2, 1], [true, true, false], 5),
        ],
    )?;
    let config = SearchConfig {
        time_limit: Duration::from_secs(2),
        ..SearchConfig::default()
    };
    let (best, stats) = solve(&instance, &config, |_: &_| {});
    let text = write_solution_json(&instance, &best, &stats)?;
    println!("{text}");

    let clean: serde_json::Value = serde_json::from_str(&text)?;
    let mut overlap = clean.clone();
    overlap["placements"][1]["pos"] = overlap["placements"][0]["pos"].clone();
    let mut outside = clean.clone();
    outside["placements"][0]["pos"][0] = serde_json::json!(5);
    let mut objective = clean.clone();
    objective["objective"] = serde_json::json!(1);

    for (label, doc) in [
        ("clean", clean),
        ("overlap", overlap),
        ("outside", outside),
        ("objective", objective),
    ] {
        let problems = read_solution_json(&doc.to_string())?.check(&instance);
        println!("-- {label}: {} problem(s)", problems.len());
        for p in problems {
            println!("   {p}");
        }
    }
    Ok(())
}
