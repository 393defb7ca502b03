//! Prints the shape of every case in a thpack file.
//!
//! ```text
//! cargo run --example parse_suite -- data/thpack/thpack8.txt
//! ```
//!
//! Without an argument a two-case sample is parsed instead.

use slopp::io::{parse_thpack, read_thpack_file};

const SAMPLE: &str = "\
2
1 2502505
587 233 220
3
1 108 0 76 0 30 1 40
2 110 0 43 1 25 1 33
3 92 1 81 1 55 1 39
2 2502506
587 233 220
2
1 91 1 54 1 45 1 25
2 105 1 77 1 72 1 20
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = match std::env::args().nth(1) {
        Some(path) => read_thpack_file(path)?,
        None => parse_thpack(SAMPLE, "sample")?,
    };
    println!("{}: {} cases", suite.name, suite.instances.len());
    println!(
        "{:<14} {:>7} {:>6} {:>20} {:>8}",
        "case", "classes", "items", "container (WxLxH)", "payload"
    );
    for inst in &suite.instances {
        let [w, l, h] = inst.container().dims();
        let ratio = 100.0 * inst.payload_volume() as f64 / inst.container().volume() as f64;
        println!(
            "{:<14} {:>7} {:>6} {:>20} {:>7.2}%",
            inst.name(),
            inst.num_classes(),
            inst.num_items(),
            format!("{w}x{l}x{h}"),
            ratio
        );
    }
    Ok(())
}
