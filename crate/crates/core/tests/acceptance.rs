//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. A positional argument restricts the run
//! to criteria whose name contains it.
//!
//! Criteria 1, 2 and 4 read the OR-Library `thpack1.txt` .. `thpack8.txt`
//! files from `SLOPP_THPACK_DIR`, or `data/thpack/` at the workspace root.

mod common;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slopp::cli::{cmd_check, CheckArgs};
use slopp::io::{read_solution_json, read_thpack_file, write_solution_json, write_thpack, ThpackSuite};
use slopp::model::{validate, Instance};
use slopp::oracle::{brute_force_optimal, OracleLimits};
use slopp::propagate::{propagate_fixpoint, DomainStore, ItemDomain, Outcome, Problem, Status};
use slopp::search::{solve, Incumbent, SearchConfig};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn data_dir() -> PathBuf {
    std::env::var_os("SLOPP_THPACK_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/thpack"))
}

fn load_suite(n: usize) -> Result<ThpackSuite, String> {
    let path = data_dir().join(format!("thpack{n}.txt"));
    if !path.exists() {
        return Err(format!(
            "data not found: {} (set SLOPP_THPACK_DIR to the OR-Library thpack files)",
            path.display()
        ));
    }
    read_thpack_file(&path).map_err(|e| e.to_string())
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

const THPACK_CLASSES: [(usize, usize, usize); 7] = [
    (3, 69, 476),
    (5, 81, 266),
    (8, 80, 232),
    (10, 75, 233),
    (12, 84, 218),
    (15, 85, 203),
    (20, 90, 172),
];

/// Classes, items, container as printed (length, width, height).
const THPACK8: [(usize, usize, [i64; 3]); 15] = [
    (7, 100, [3000, 2000, 1000]),
    (8, 200, [3000, 2000, 1000]),
    (8, 200, [4000, 2400, 1300]),
    (7, 100, [3000, 2000, 1100]),
    (6, 120, [3000, 2000, 900]),
    (8, 200, [3500, 2400, 1000]),
    (8, 200, [3500, 2400, 1300]),
    (6, 130, [3200, 2000, 1200]),
    (8, 200, [5000, 2400, 1400]),
    (8, 250, [5000, 2400, 1600]),
    (6, 100, [3000, 2400, 1000]),
    (6, 120, [3200, 2400, 1000]),
    (7, 120, [3500, 2000, 1200]),
    (6, 120, [3500, 2200, 1100]),
    (10, 150, [6000, 2800, 1400]),
];

/// Cases fully packed by every method, with their volume utilization in %.
const FULL_PACKS: [(usize, f64); 8] = [
    (1, 62.50),
    (3, 53.43),
    (4, 54.96),
    (5, 77.19),
    (8, 59.42),
    (9, 61.89),
    (11, 62.16),
    (14, 62.81),
];

fn parser_fidelity() -> Verdict {
    let started = Instant::now();
    let mut total = 0;
    for (s, &(classes, lo, hi)) in THPACK_CLASSES.iter().enumerate() {
        let suite = load_suite(s + 1)?;
        ensure(!suite.instances.is_empty(), || format!("thpack{} is empty", s + 1))?;
        for inst in &suite.instances {
            ensure(inst.num_classes() == classes, || {
                format!("{}: {} classes, expected {classes}", inst.name(), inst.num_classes())
            })?;
        }
        let items = suite.instances.iter().map(Instance::num_items);
        let (min, max) = (items.clone().min().unwrap(), items.max().unwrap());
        ensure((min, max) == (lo, hi), || {
            format!("thpack{}: items {min}-{max}, expected {lo}-{hi}", s + 1)
        })?;
        total += suite.instances.len();
    }
    let suite = load_suite(8)?;
    ensure(suite.instances.len() == THPACK8.len(), || {
        format!(
            "thpack8 holds {} cases, expected {}",
            suite.instances.len(),
            THPACK8.len()
        )
    })?;
    for (inst, &(classes, items, [l, w, h])) in suite.instances.iter().zip(&THPACK8) {
        let d = inst.container().dims();
        ensure(
            inst.num_classes() == classes && inst.num_items() == items && [d[1], d[0], d[2]] == [l, w, h],
            || {
                format!(
                    "{}: {} classes, {} items, {}x{}x{}; expected {classes}, {items}, {l}x{w}x{h}",
                    inst.name(),
                    inst.num_classes(),
                    inst.num_items(),
                    d[1],
                    d[0],
                    d[2]
                )
            },
        )?;
        let one_up = inst
            .classes()
            .iter()
            .all(|c| c.vertical_ok.iter().filter(|&&f| f).count() == 1);
        ensure(one_up, || {
            format!("{}: a class has more than one vertical side", inst.name())
        })?;
    }
    total += suite.instances.len();
    ensure(started.elapsed() < Duration::from_secs(1), || {
        format!("took {:?}", started.elapsed())
    })?;
    Ok(format!("{total} cases in 8 suites match, {:?}", started.elapsed()))
}

fn payload_ratio() -> Verdict {
    let suite = load_suite(8)?;
    let mut worst: f64 = 0.0;
    for &(case, expected) in &FULL_PACKS {
        let inst = suite.case(case).ok_or_else(|| format!("thpack8 has no case {case}"))?;
        let vu = 100.0 * inst.payload_volume() as f64 / inst.container().volume() as f64;
        ensure((vu - expected).abs() <= 0.01, || {
            format!("case {case}: {vu:.4}% vs {expected:.2}%")
        })?;
        worst = worst.max((vu - expected).abs());
    }
    Ok(format!("{} cases within 0.01 pp (worst {worst:.4})", FULL_PACKS.len()))
}

fn oracle_family() -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..100)
        .map(|n| common::tight_instance(&mut rng, &format!("rand_{n:03}"), 4, 8))
        .collect()
}

fn oracle_equivalence() -> Verdict {
    let started = Instant::now();
    let config = SearchConfig {
        time_limit: Duration::from_secs(30),
        ..SearchConfig::default()
    };
    let (mut tight, mut nodes) = (0, 0);
    for inst in oracle_family() {
        let oracle =
            brute_force_optimal(&inst, OracleLimits::default()).map_err(|e| format!("{}: {e}", inst.name()))?;
        tight += usize::from(oracle.objective > 0);
        nodes += oracle.nodes;
        let (best, stats) = solve(&inst, &config, |_: &Incumbent| {});
        ensure(stats.proved_optimal, || {
            format!("{}: optimality not proved", inst.name())
        })?;
        ensure(best.objective == oracle.objective, || {
            format!(
                "{}: search {} vs oracle {}",
                inst.name(),
                best.objective,
                oracle.objective
            )
        })?;
    }
    let took = started.elapsed();
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    Ok(format!(
        "100/100 objectives equal and proved ({tight} with boxes left over, {nodes} oracle nodes), {took:.1?}"
    ))
}

fn full_pack() -> Verdict {
    let suite = load_suite(8)?;
    let inst = suite.case(4).ok_or("thpack8 has no case 4")?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(4);
    let config = SearchConfig {
        time_limit: Duration::from_secs(600),
        workers,
        emit_all: false,
        ..SearchConfig::default()
    };
    let (best, stats) = solve(inst, &config, |_: &Incumbent| {});
    ensure(validate(inst, &best).is_empty(), || "final solution invalid".into())?;
    let vu = 100.0 * best.packed_volume(inst) as f64 / inst.container().volume() as f64;
    ensure(best.left_boxes() == 0 && (vu - 54.96).abs() <= 0.01, || {
        format!(
            "{} boxes left, VU {vu:.2}% after {:.1?}",
            best.left_boxes(),
            stats.wall_time
        )
    })?;
    Ok(format!(
        "LB 0, VU {vu:.2}% in {:.1?} on {workers} worker(s)",
        stats.wall_time
    ))
}

fn anytime_invariants() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let limit = Duration::from_millis(500);
    let grace = Duration::from_millis(250);
    let mut incumbents = 0;
    for n in 0..50 {
        let items = rng.gen_range(18..=22);
        let inst = common::random_instance(&mut rng, &format!("mid_{n:02}"), items, 30, 12);
        let config = SearchConfig {
            time_limit: limit,
            workers: 1 + n % 2,
            seed: n as u64,
            ..SearchConfig::default()
        };
        let mut seen: Vec<Incumbent> = Vec::new();
        let t = Instant::now();
        let (best, _) = solve(&inst, &config, |inc: &Incumbent| seen.push(inc.clone()));
        let took = t.elapsed();
        ensure(took <= limit + grace, || {
            format!("{}: returned after {took:?}", inst.name())
        })?;
        ensure(
            seen.windows(2)
                .all(|w| w[1].solution.objective < w[0].solution.objective),
            || format!("{}: objectives not strictly decreasing", inst.name()),
        )?;
        ensure(seen.last().map(|i| &i.solution) == Some(&best), || {
            format!("{}: final solution is not the last incumbent", inst.name())
        })?;
        for inc in &seen {
            let v = validate(&inst, &inc.solution);
            ensure(v.is_empty(), || format!("{}: {}", inst.name(), v[0]))?;
            ensure(
                inc.solution.packed_volume(&inst) + inc.solution.objective == inst.payload_volume(),
                || format!("{}: packed + objective != payload", inst.name()),
            )?;
        }
        incumbents += seen.len();
    }
    Ok(format!("50 runs, {incumbents} incumbents, {:.1?}", started.elapsed()))
}

fn live(store: &DomainStore) -> Vec<Option<ItemDomain>> {
    store
        .items()
        .iter()
        .map(|d| (d.status != Status::Excluded).then_some(*d))
        .collect()
}

fn propagation_soundness() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for inst in oracle_family() {
        let name = inst.name().to_string();
        let problem = Problem::new(&inst, true);
        let mut root = DomainStore::root(&problem);
        let mut count = 0;
        ensure(
            propagate_fixpoint(&mut root, &problem, &mut count) == Outcome::Stable,
            || format!("{name}: root fails"),
        )?;

        let witness = brute_force_optimal(&inst, OracleLimits::default())
            .map_err(|e| format!("{name}: {e}"))?
            .witness
            .canonicalize(&inst);
        for p in &witness.placed {
            let d = root.item(p.item_index);
            let kept = d.status != Status::Excluded
                && d.rotations.contains(p.rotation)
                && (0..3).all(|u| d.lo[u] <= p.pos[u] && p.pos[u] <= d.hi[u]);
            ensure(kept, || {
                format!("{name}: root pruned item {} at {:?}", p.item_index, p.pos)
            })?;
        }

        let mut again = root.clone();
        propagate_fixpoint(&mut again, &problem, &mut count);
        ensure(live(&again) == live(&root), || {
            format!("{name}: fixpoint not idempotent")
        })?;

        let Some(i) = (0..problem.num_items()).find(|&i| root.item(i).status != Status::Excluded) else {
            continue;
        };
        let axis = rng.gen_range(0..3);
        let d = *root.item(i);
        let hi = rng.gen_range(d.lo[axis]..=d.hi[axis]);
        let mut narrow = DomainStore::root(&problem);
        narrow.restrict(i, axis, d.lo[axis], hi);
        if propagate_fixpoint(&mut narrow, &problem, &mut count) == Outcome::Stable {
            for k in 0..problem.num_items() {
                let (a, b) = (narrow.item(k), root.item(k));
                let tighter = (b.status == Status::Undecided || a.status == b.status)
                    && a.rotations.is_subset(b.rotations)
                    && (0..3).all(|u| a.lo[u] >= b.lo[u] && a.hi[u] <= b.hi[u]);
                ensure(tighter, || format!("{name}: narrowing item {i} widened item {k}"))?;
            }
        }
    }
    let took = started.elapsed();
    ensure(took < Duration::from_secs(300), || format!("took {took:?}"))?;
    Ok(format!(
        "100 instances: witnesses kept, idempotent, monotone, {took:.1?}"
    ))
}

fn check_problems(
    dir: &std::path::Path,
    suite: &std::path::Path,
    name: &str,
    doc: &serde_json::Value,
) -> Result<Vec<String>, String> {
    let path = dir.join(name);
    std::fs::write(&path, doc.to_string()).map_err(|e| e.to_string())?;
    cmd_check(&CheckArgs {
        suite: suite.to_path_buf(),
        index: 1,
        solution: path,
    })
    .map_err(|e| e.to_string())
}

fn round_trip_and_check() -> Verdict {
    let started = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let config = SearchConfig {
        time_limit: Duration::from_millis(300),
        ..SearchConfig::default()
    };
    let mut rejected = [0usize; 3];
    for n in 0..20 {
        let items = rng.gen_range(2..=10);
        let generated = common::random_instance(&mut rng, "x", items, 12, 6);
        let stem = format!("rt{n:02}");
        let inst = Instance::new(
            format!("{stem}_001"),
            *generated.container(),
            generated.classes().to_vec(),
        )
        .unwrap();
        let suite_path = dir.path().join(format!("{stem}.txt"));
        let suite = ThpackSuite {
            name: stem.clone(),
            instances: vec![inst.clone()],
            seeds: vec![None],
        };
        std::fs::write(&suite_path, write_thpack(&suite)).map_err(|e| e.to_string())?;

        let (best, stats) = solve(&inst, &config, |_: &Incumbent| {});
        let text = write_solution_json(&inst, &best, &stats).map_err(|e| e.to_string())?;
        let doc = read_solution_json(&text).map_err(|e| e.to_string())?;
        ensure(serde_json::to_string_pretty(&doc).unwrap() == text, || {
            format!("{stem}: JSON does not round-trip")
        })?;
        ensure(doc.solution().canonicalize(&inst) == best.canonicalize(&inst), || {
            format!("{stem}: solution changed in transit")
        })?;

        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        let clean = check_problems(dir.path(), &suite_path, "ok.json", &value)?;
        ensure(clean.is_empty(), || {
            format!("{stem}: check rejected solver output: {}", clean[0])
        })?;

        let placed = value["placements"].as_array().unwrap().len();
        if placed >= 2 {
            let mut v = value.clone();
            v["placements"][1]["pos"] = v["placements"][0]["pos"].clone();
            v["placements"][1]["size"] = v["placements"][0]["size"].clone();
            v["placements"][1]["rotation"] = v["placements"][0]["rotation"].clone();
            v["placements"][1]["class"] = v["placements"][0]["class"].clone();
            let p = check_problems(dir.path(), &suite_path, "overlap.json", &v)?;
            ensure(p.iter().any(|l| l.starts_with("non-overlap:")), || {
                format!("{stem}: overlap accepted")
            })?;
            rejected[0] += 1;
        }
        if placed >= 1 {
            let mut v = value.clone();
            v["placements"][0]["pos"][0] = serde_json::json!(inst.container().dims()[0]);
            let p = check_problems(dir.path(), &suite_path, "outside.json", &v)?;
            ensure(p.iter().any(|l| l.starts_with("containment:")), || {
                format!("{stem}: out-of-bounds accepted")
            })?;
            rejected[1] += 1;
        }
        let mut v = value.clone();
        v["objective"] = serde_json::json!(best.objective + 1 + n as u64);
        let p = check_problems(dir.path(), &suite_path, "objective.json", &v)?;
        ensure(p.iter().any(|l| l.starts_with("objective:")), || {
            format!("{stem}: objective tamper accepted")
        })?;
        rejected[2] += 1;
    }
    ensure(rejected.iter().all(|&r| r > 0), || {
        format!("corruption classes not exercised: {rejected:?}")
    })?;
    Ok(format!(
        "20 solutions round-trip and pass check; rejected {} overlaps, {} out-of-bounds, {} objective tampers, {:.1?}",
        rejected[0],
        rejected[1],
        rejected[2],
        started.elapsed()
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1 parser fidelity", parser_fidelity),
        ("2 payload ratio", payload_ratio),
        ("3 oracle equivalence", oracle_equivalence),
        ("4 full pack thpack8 case 4", full_pack),
        ("5 anytime invariants", anytime_invariants),
        ("6 propagation soundness", propagation_soundness),
        ("7 round trip and check", round_trip_and_check),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let verdict = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {name}: {reason}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
