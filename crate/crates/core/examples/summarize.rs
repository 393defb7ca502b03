//! Builds a per-suite results table from run reports.
//!
//! Pass report files written by `slopp run --report`, or run without
//! arguments to see the table for a few made-up reports.

use slopp::cli::{format_summary, read_reports, summarize, RunReport};

fn made_up() -> Vec<RunReport> {
    [
        ("thpack1_001", 84.1, 12, 2.35),
        ("thpack1_002", 79.6, 20, 4.12),
        ("thpack2_001", 81.0, 15, 3.01),
    ]
    .into_iter()
    .map(|(name, vu, left, m3)| RunReport {
        instance: name.to_string(),
        vu_percent: vu,
        left_boxes: left,
        leftover_cm3: (m3 * 1e6) as u64,
        leftover_m3: m3,
        proved_optimal: false,
        wall_time_s: 60.0,
        incumbents: 40,
    })
    .collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let paths: Vec<_> = std::env::args().skip(1).map(std::path::PathBuf::from).collect();
    let reports = if paths.is_empty() {
        made_up()
    } else {
        read_reports(&paths)?
    };
    print!("{}", format_summary(&summarize(&reports)));
    Ok(())
}
