//! Reader for the OR-Library `thpack` container-loading format and writers for
//! instance JSON, solution JSON and anytime-progress CSV.
//!
//! A `thpack` file starts with the number of cases `P`. Each case is
//!
//! ```text
//! p [seed]
//! L W H
//! n
//! 1 l vl w vw h vh c
//! ...
//! n l vl w vw h vh c
//! ```
//!
//! Tokens may be separated by any run of blanks or newlines. Dimensions are
//! read in file order (length, width, height) and stored with width on axis 0,
//! length on axis 1 and height on axis 2. Each vertical flag belongs to the
//! dimension it follows.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{
    self, oriented_size, Container, Instance, ItemClass, Length, Placement, Rotation, Solution, SolveStats, Triple,
    Violation, Volume,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}{}: {message}", instance.map(|i| format!(", instance {i}")).unwrap_or_default())]
pub struct ParseError {
    pub line: usize,
    pub instance: Option<usize>,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("refusing to serialize an invalid solution: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidSolution(Vec<Violation>),
    #[error("solution document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThpackSuite {
    pub name: String,
    pub instances: Vec<Instance>,
    pub seeds: Vec<Option<u64>>,
}

impl ThpackSuite {
    /// Case `index`, counted from 1 as in the file.
    pub fn case(&self, index: usize) -> Option<&Instance> {
        index.checked_sub(1).and_then(|i| self.instances.get(i))
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
}

struct Cursor<'a> {
    tokens: &'a [Token<'a>],
    pos: usize,
    instance: Option<usize>,
    eof_line: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, line: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line,
            instance: self.instance,
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        match self.tokens.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => Err(self.err(self.eof_line, format!("unexpected end of input, expected {what}"))),
        }
    }

    fn int(&mut self, what: &str) -> Result<(i64, usize), ParseError> {
        let t = self.next(what)?;
        t.text
            .parse::<i64>()
            .map(|v| (v, t.line))
            .map_err(|_| self.err(t.line, format!("malformed token {:?}, expected {what}", t.text)))
    }

    fn count(&mut self, what: &str) -> Result<(usize, usize), ParseError> {
        let (v, line) = self.int(what)?;
        usize::try_from(v)
            .map(|v| (v, line))
            .map_err(|_| self.err(line, format!("{what} must not be negative, got {v}")))
    }

    fn dim(&mut self, what: &str) -> Result<Length, ParseError> {
        let (v, line) = self.int(what)?;
        if v < 1 {
            return Err(self.err(line, format!("non-positive dimension {v} for {what}")));
        }
        Ok(v)
    }

    fn flag(&mut self, what: &str) -> Result<bool, ParseError> {
        let (v, line) = self.int(what)?;
        match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(self.err(line, format!("vertical flag {what} must be 0 or 1, got {v}"))),
        }
    }
}

struct RawCase {
    seed: Option<u64>,
    container: Triple,
    classes: Vec<ItemClass>,
}

fn parse_case_body(cur: &mut Cursor<'_>, with_seed: bool) -> Result<RawCase, ParseError> {
    let seed = if with_seed {
        let t = cur.next("seed")?;
        Some(
            t.text
                .parse::<u64>()
                .map_err(|_| cur.err(t.line, format!("malformed seed {:?}", t.text)))?,
        )
    } else {
        None
    };
    let length = cur.dim("container length")?;
    let width = cur.dim("container width")?;
    let height = cur.dim("container height")?;
    let (n, n_line) = cur.count("class count")?;
    if n == 0 {
        return Err(cur.err(n_line, "case declares zero item classes"));
    }
    let mut classes = Vec::with_capacity(n);
    for ordinal in 1..=n {
        let (label, line) = cur.int("class index")?;
        if label != ordinal as i64 {
            return Err(cur.err(line, format!("expected class {ordinal} of {n}, found {label}")));
        }
        let l = cur.dim("item length")?;
        let vl = cur.flag("vl")?;
        let w = cur.dim("item width")?;
        let vw = cur.flag("vw")?;
        let h = cur.dim("item height")?;
        let vh = cur.flag("vh")?;
        let (c, c_line) = cur.count("item count")?;
        if c == 0 {
            return Err(cur.err(c_line, format!("class {ordinal} has item count 0")));
        }
        if !(vl || vw || vh) {
            return Err(cur.err(line, format!("class {ordinal} has all vertical flags 0")));
        }
        classes.push(ItemClass::new([w, l, h], [vw, vl, vh], c));
    }
    Ok(RawCase {
        seed,
        container: [width, length, height],
        classes,
    })
}

/// Parses a whole `thpack` suite. Instances are named `<suite>_<NNN>` with a
/// 1-based, zero-padded case index.
pub fn parse_thpack(text: &str, suite_name: &str) -> Result<ThpackSuite, ParseError> {
    if let Some((n, line)) = text.lines().enumerate().find(|(_, l)| !l.is_ascii()) {
        return Err(ParseError {
            line: n + 1,
            instance: None,
            message: format!("non-ASCII input {:?}", line.trim()),
        });
    }
    let tokens: Vec<Token<'_>> = text
        .lines()
        .enumerate()
        .flat_map(|(n, l)| l.split_ascii_whitespace().map(move |t| Token { text: t, line: n + 1 }))
        .collect();
    let mut cur = Cursor {
        tokens: &tokens,
        pos: 0,
        instance: None,
        eof_line: text.lines().count().max(1),
    };
    let (cases, _) = cur.count("number of cases")?;
    let mut suite = ThpackSuite {
        name: suite_name.to_string(),
        instances: Vec::with_capacity(cases),
        seeds: Vec::with_capacity(cases),
    };

    for p in 1..=cases {
        cur.instance = Some(p);
        let (index, index_line) = cur.int("case index")?;
        if index != p as i64 {
            return Err(cur.err(index_line, format!("expected case index {p}, found {index}")));
        }
        let raw = parse_case(&mut cur, p, cases, index_line)?;
        let name = format!("{suite_name}_{p:03}");
        let container = Container::new(raw.container).map_err(|e| cur.err(index_line, e.to_string()))?;
        let instance = Instance::new(name, container, raw.classes).map_err(|e| cur.err(index_line, e.to_string()))?;
        suite.instances.push(instance);
        suite.seeds.push(raw.seed);
    }
    cur.instance = None;
    if let Some(t) = tokens.get(cur.pos) {
        return Err(cur.err(t.line, format!("trailing token {:?} after {cases} cases", t.text)));
    }
    Ok(suite)
}

/// The seed is optional, so a case header is either `p` or `p seed`. The line
/// layout decides when the header stands on its own line; otherwise both
/// readings are tried and the one that lands on the next case header (or the
/// end of input) wins.
fn parse_case(cur: &mut Cursor<'_>, p: usize, cases: usize, index_line: usize) -> Result<RawCase, ParseError> {
    let on_header_line = cur.tokens[cur.pos..]
        .iter()
        .take_while(|t| t.line == index_line)
        .count();
    match on_header_line {
        0 => return parse_case_body(cur, false),
        1 => return parse_case_body(cur, true),
        _ => {}
    }
    let start = cur.pos;
    let lands = |tokens: &[Token<'_>], at: usize| match tokens.get(at) {
        None => p == cases,
        Some(t) => p < cases && t.text.parse::<usize>().ok() == Some(p + 1),
    };
    let without = parse_case_body(cur, false).map(|raw| (raw, cur.pos));
    cur.pos = start;
    let with = parse_case_body(cur, true).map(|raw| (raw, cur.pos));
    let chosen = match (without, with) {
        (Ok((raw, end)), _) if lands(cur.tokens, end) => Ok((raw, end)),
        (_, Ok((raw, end))) if lands(cur.tokens, end) => Ok((raw, end)),
        (Ok(found), _) => Ok(found),
        (Err(e), _) => Err(e),
    };
    chosen.map(|(raw, end)| {
        cur.pos = end;
        raw
    })
}

pub fn read_thpack_file(path: impl AsRef<Path>) -> Result<ThpackSuite, FormatError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::File {
        path: path.display().to_string(),
        source,
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("suite");
    Ok(parse_thpack(&text, name)?)
}

/// Writes a suite back in `thpack` layout, inverting the axis reordering done
/// by [`parse_thpack`].
pub fn write_thpack(suite: &ThpackSuite) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", suite.instances.len());
    for (n, inst) in suite.instances.iter().enumerate() {
        match suite.seeds.get(n).copied().flatten() {
            Some(seed) => {
                let _ = writeln!(out, "{} {seed}", n + 1);
            }
            None => {
                let _ = writeln!(out, "{}", n + 1);
            }
        }
        let [w, l, h] = inst.container().dims();
        let _ = writeln!(out, "{l} {w} {h}");
        let _ = writeln!(out, "{}", inst.num_classes());
        for (k, c) in inst.classes().iter().enumerate() {
            let [w, l, h] = c.dims;
            let [vw, vl, vh] = c.vertical_ok.map(u8::from);
            let _ = writeln!(out, "{} {l} {vl} {w} {vw} {h} {vh} {}", k + 1, c.count);
        }
    }
    out
}

pub fn write_instance_json(instance: &Instance) -> String {
    serde_json::to_string_pretty(instance).expect("instance serializes")
}

pub fn read_instance_json(text: &str) -> Result<Instance, FormatError> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub item: usize,
    pub class: usize,
    pub rotation: Rotation,
    pub pos: Triple,
    pub size: Triple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub nodes_explored: u64,
    pub propagations: u64,
    pub solutions_found: u64,
    pub wall_time_s: f64,
    pub proved_optimal: bool,
}

impl From<&SolveStats> for StatsRecord {
    fn from(s: &SolveStats) -> Self {
        Self {
            nodes_explored: s.nodes_explored,
            propagations: s.propagations,
            solutions_found: s.solutions_found,
            wall_time_s: s.wall_time.as_secs_f64(),
            proved_optimal: s.proved_optimal,
        }
    }
}

/// On-disk form of a solution. Field order is fixed by declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub instance: String,
    pub container: Triple,
    pub placements: Vec<PlacementRecord>,
    pub unpacked: Vec<usize>,
    pub objective: Volume,
    pub left_boxes: usize,
    pub volume_utilization: f64,
    pub stats: StatsRecord,
}

impl SolutionDoc {
    pub fn solution(&self) -> Solution {
        Solution {
            placed: self
                .placements
                .iter()
                .map(|r| Placement {
                    item_index: r.item,
                    class_index: r.class,
                    rotation: r.rotation,
                    pos: r.pos,
                })
                .collect(),
            unpacked_counts: self.unpacked.clone(),
            objective: self.objective,
        }
    }

    /// Everything wrong with this document relative to `instance`: packing
    /// violations first, then derived fields that disagree with a fresh
    /// recomputation. Empty iff the document is consistent.
    pub fn check(&self, instance: &Instance) -> Vec<String> {
        let solution = self.solution();
        let mut out: Vec<String> = model::validate(instance, &solution)
            .iter()
            .map(ToString::to_string)
            .collect();
        if self.instance != instance.name() {
            out.push(format!(
                "consistency: document is for {:?}, instance is {:?}",
                self.instance,
                instance.name()
            ));
        }
        if self.container != instance.container().dims() {
            out.push(format!(
                "consistency: container {:?} differs from instance {:?}",
                self.container,
                instance.container().dims()
            ));
        }
        for r in &self.placements {
            if let Some(class) = instance.classes().get(r.class) {
                let size = oriented_size(class, r.rotation);
                if size != r.size {
                    out.push(format!(
                        "consistency: item {} size {:?} does not match rotation {} ({:?})",
                        r.item, r.size, r.rotation, size
                    ));
                }
            }
        }
        if self.unpacked.len() == instance.num_classes() {
            let left = solution.left_boxes();
            if left != self.left_boxes {
                out.push(format!(
                    "consistency: left_boxes stored {}, recomputed {left}",
                    self.left_boxes
                ));
            }
            let vu = model::volume_utilization(instance, &solution);
            if vu != self.volume_utilization {
                out.push(format!(
                    "consistency: volume_utilization stored {}, recomputed {vu}",
                    self.volume_utilization
                ));
            }
        }
        out
    }
}

pub fn solution_doc(instance: &Instance, solution: &Solution, stats: &SolveStats) -> Result<SolutionDoc, FormatError> {
    let violations = model::validate(instance, solution);
    if !violations.is_empty() {
        return Err(FormatError::InvalidSolution(violations));
    }
    let mut placed = solution.placed.clone();
    placed.sort_by_key(|p| p.item_index);
    Ok(SolutionDoc {
        instance: instance.name().to_string(),
        container: instance.container().dims(),
        placements: placed
            .iter()
            .map(|p| PlacementRecord {
                item: p.item_index,
                class: p.class_index,
                rotation: p.rotation,
                pos: p.pos,
                size: oriented_size(instance.class(p.class_index), p.rotation),
            })
            .collect(),
        unpacked: solution.unpacked_counts.clone(),
        objective: solution.objective,
        left_boxes: solution.left_boxes(),
        volume_utilization: model::volume_utilization(instance, solution),
        stats: stats.into(),
    })
}

/// Serializes a valid solution; an invalid one is refused.
pub fn write_solution_json(
    instance: &Instance,
    solution: &Solution,
    stats: &SolveStats,
) -> Result<String, FormatError> {
    let doc = solution_doc(instance, solution, stats)?;
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn read_solution_json(text: &str) -> Result<SolutionDoc, FormatError> {
    Ok(serde_json::from_str(text)?)
}

/// One point of an anytime run: the incumbent found `elapsed` seconds in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressRecord {
    pub elapsed: f64,
    pub objective: Volume,
    pub left_boxes: usize,
    pub volume_utilization: f64,
}

pub const PROGRESS_HEADER: [&str; 4] = ["elapsed_s", "objective_cm3", "left_boxes", "volume_utilization"];

pub fn write_progress_csv(records: &[ProgressRecord]) -> Result<String, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PROGRESS_HEADER)?;
    for r in records {
        w.write_record([
            format!("{:.3}", r.elapsed),
            r.objective.to_string(),
            r.left_boxes.to_string(),
            format!("{:.4}", r.volume_utilization),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| FormatError::Document(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Rotation;

    const TRIVIAL: &str = "1\n1\n10 10 10\n1\n1 2 1 3 1 4 1 5\n";

    #[test]
    fn parses_trivial_file() {
        let suite = parse_thpack(TRIVIAL, "toy").unwrap();
        assert_eq!(suite.instances.len(), 1);
        let inst = &suite.instances[0];
        assert_eq!(inst.name(), "toy_001");
        assert_eq!(inst.container().dims(), [10, 10, 10]);
        assert_eq!(inst.num_classes(), 1);
        assert_eq!(inst.class(0).count, 5);
        assert_eq!(inst.class(0).dims, [3, 2, 4]);
        assert_eq!(model::allowed_rotations(inst.class(0)).len(), 6);
        assert_eq!(suite.seeds, vec![None]);
    }

    #[test]
    fn reorders_container_and_flags() {
        let text = "1\n1 777\n30 20 10\n1\n1 5 0 6 0 7 1 2\n";
        let suite = parse_thpack(text, "s").unwrap();
        let inst = &suite.instances[0];
        assert_eq!(suite.seeds, vec![Some(777)]);
        assert_eq!(inst.container().dims(), [20, 30, 10]);
        assert_eq!(inst.class(0).dims, [6, 5, 7]);
        assert_eq!(inst.class(0).vertical_ok, [false, false, true]);
    }

    #[test]
    fn accepts_crlf_and_squashed_layout() {
        let crlf = TRIVIAL.replace('\n', "\r\n");
        assert_eq!(
            parse_thpack(&crlf, "toy").unwrap(),
            parse_thpack(TRIVIAL, "toy").unwrap()
        );
        let squashed = "2 1 10 10 10 1 1 2 1 3 1 4 1 5 2 99 5 5 5 1 1 1 1 1 1 1 1 3";
        let suite = parse_thpack(squashed, "toy").unwrap();
        assert_eq!(suite.seeds, vec![None, Some(99)]);
        assert_eq!(suite.instances[1].container().dims(), [5, 5, 5]);
        assert_eq!(suite.instances[1].class(0).count, 3);
    }

    #[test]
    fn rejects_bad_input() {
        let cases = [
            ("1\n1\n10 10 10\n1\n1 2 1 3 1 4 1\n", 5, "end of input"),
            ("1\n1\n10 10 10\n1\n1 2 0 3 0 4 0 5\n", 5, "all vertical flags 0"),
            ("1\n1\n10 0 10\n1\n1 2 1 3 1 4 1 5\n", 3, "non-positive"),
            ("1\n1\n10 10 10\n1\n1 2 1 x 1 4 1 5\n", 5, "malformed"),
            ("1\n1\n10 10 10\n2\n1 2 1 3 1 4 1 5\n", 5, "end of input"),
            ("1\n1\n10 10 10\n1\n1 2 2 3 1 4 1 5\n", 5, "0 or 1"),
        ];
        for (text, line, needle) in cases {
            let err = parse_thpack(text, "bad").unwrap_err();
            assert_eq!(err.line, line, "{text:?}: {err}");
            assert_eq!(err.instance, Some(1));
            assert!(err.message.contains(needle), "{err}");
        }
        assert!(parse_thpack("1\n1\n1 1 1\n1\n1 1 1 1 1 1 1 1\nextra", "bad").is_err());
        assert!(parse_thpack("1\n1\n1 1 1\n1\n1 1 1 1 1 1 1 1\n\u{e9}", "bad").is_err());
    }

    #[test]
    fn progress_csv_layout() {
        assert_eq!(
            write_progress_csv(&[]).unwrap(),
            "elapsed_s,objective_cm3,left_boxes,volume_utilization\n"
        );
        let out = write_progress_csv(&[ProgressRecord {
            elapsed: 10.0,
            objective: 120,
            left_boxes: 5,
            volume_utilization: 0.5,
        }])
        .unwrap();
        assert_eq!(out.lines().count(), 2);
        assert_eq!(out.lines().nth(1), Some("10.000,120,5,0.5000"));
    }

    #[test]
    fn solution_json_empty_and_single() {
        let inst = Instance::new(
            "cube",
            Container::new([1, 1, 1]).unwrap(),
            vec![ItemClass::new([1, 1, 1], [true; 3], 1)],
        )
        .unwrap();
        let stats = SolveStats::default();
        let empty = read_solution_json(&write_solution_json(&inst, &Solution::empty(&inst), &stats).unwrap()).unwrap();
        assert!(empty.placements.is_empty());
        assert_eq!(empty.objective, 1);
        assert!(empty.check(&inst).is_empty());

        let one = Solution::from_placements(
            &inst,
            vec![Placement {
                item_index: 0,
                class_index: 0,
                rotation: Rotation::IDENTITY,
                pos: [0, 0, 0],
            }],
        );
        let doc = read_solution_json(&write_solution_json(&inst, &one, &stats).unwrap()).unwrap();
        assert_eq!(doc.placements.len(), 1);
        assert_eq!(doc.placements[0].pos, [0, 0, 0]);
        assert_eq!(doc.placements[0].size, [1, 1, 1]);
        assert_eq!(doc.solution(), one);
    }

    #[test]
    fn refuses_invalid_solution() {
        let inst = Instance::new(
            "cube",
            Container::new([1, 1, 1]).unwrap(),
            vec![ItemClass::new([1, 1, 1], [true; 3], 1)],
        )
        .unwrap();
        let bad = Solution::from_placements(
            &inst,
            vec![Placement {
                item_index: 0,
                class_index: 0,
                rotation: Rotation::IDENTITY,
                pos: [1, 0, 0],
            }],
        );
        assert!(matches!(
            write_solution_json(&inst, &bad, &SolveStats::default()),
            Err(FormatError::InvalidSolution(_))
        ));
    }
}
