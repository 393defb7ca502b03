//! Anytime depth-first branch-and-bound over the domain store.
//!
//! Every node of the tree is itself a feasible packing (its fixed items), so
//! each improvement is reported as soon as it is reached. A node is pruned
//! when its volume bound cannot beat the incumbent.
//!
//! Branching picks one item and generates one child per (rotation, position)
//! choice, followed by a child that leaves the item out. Positions are
//! restricted to normal coordinates along each axis (sums of the lengths of
//! other items), which loses no packing: any packing can be pushed towards
//! the origin until every coordinate is such a sum. Candidates come lowest
//! first in (z, y, x) order and are generated lazily.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{lex_key, Instance, Length, Solution, SolveStats, Triple, Volume};
use crate::propagate::{propagate_incremental, DomainStore, Outcome, Problem, Status};

/// Variable selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branching {
    /// Largest item volume first, ties by lowest item index.
    #[default]
    LargestVolume,
    /// Uniformly random class among those with undecided items, lowest
    /// undecided item of that class.
    RandomClass,
}

impl std::str::FromStr for Branching {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "largest-volume" => Ok(Self::LargestVolume),
            "random-class" => Ok(Self::RandomClass),
            other => Err(format!("unknown branching strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub time_limit: Duration,
    pub workers: usize,
    pub seed: u64,
    /// Report every incumbent as it is found, rather than only the final one.
    pub emit_all: bool,
    pub branching: Branching,
    /// Order identical items (same class) by position.
    pub item_symmetry: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(10),
            workers: 1,
            seed: 0,
            emit_all: true,
            branching: Branching::default(),
            item_symmetry: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incumbent {
    pub solution: Solution,
    pub found_at: Duration,
}

/// Leftover volume no completion of `store` can go below: the free space can
/// absorb at most its own volume of the undecided items.
pub fn lower_bound(store: &DomainStore, instance: &Instance, packed_volume: Volume) -> Volume {
    let free = instance.container().volume().saturating_sub(packed_volume);
    let undecided: Volume = store
        .items()
        .iter()
        .zip(instance.item_classes())
        .filter(|(d, _)| d.status == Status::Undecided)
        .map(|(_, k)| instance.class(k).volume())
        .sum();
    instance
        .payload_volume()
        .saturating_sub(packed_volume)
        .saturating_sub(free.min(undecided))
}

fn node_bound(store: &DomainStore, problem: &Problem) -> Volume {
    let instance = problem.instance();
    let packed = store.packed_volume(problem);
    let free = instance.container().volume().saturating_sub(packed);
    instance
        .payload_volume()
        .saturating_sub(packed)
        .saturating_sub(free.min(store.undecided_volume(problem)))
}

/// Item to branch on: a packed item still needing a position, else an
/// undecided item chosen by the strategy. `None` when fully assigned.
fn select_item(store: &DomainStore, problem: &Problem, branching: Branching, rng: &mut ChaCha8Rng) -> Option<usize> {
    let items = store.items();
    if let Some(i) = items.iter().position(|d| d.status == Status::Packed && !d.is_fixed()) {
        return Some(i);
    }
    let undecided = (0..items.len()).filter(|&i| items[i].status == Status::Undecided);
    match branching {
        Branching::LargestVolume => undecided.min_by_key(|&i| (std::cmp::Reverse(problem.item_volume(i)), i)),
        Branching::RandomClass => {
            let mut firsts: Vec<usize> = Vec::new();
            for i in undecided {
                if firsts
                    .last()
                    .is_none_or(|&f| problem.class_of(f) != problem.class_of(i))
                {
                    firsts.push(i);
                }
            }
            (!firsts.is_empty()).then(|| firsts[rng.gen_range(0..firsts.len())])
        }
    }
}

/// Feasible positions for one oriented shape, in increasing (z, y, x) order.
struct PositionCursor {
    rotation: crate::model::Rotation,
    size: Triple,
    axes: [(usize, usize); 3],
    at: [usize; 3],
    done: bool,
}

impl PositionCursor {
    fn new(
        problem: &Problem,
        class: usize,
        lo: Triple,
        hi: Triple,
        rotation: crate::model::Rotation,
        size: Triple,
    ) -> Self {
        let dims = problem.instance().container().dims();
        let axes: [(usize, usize); 3] = std::array::from_fn(|u| {
            let list = problem.normal_positions(class, u);
            let top = hi[u].min(dims[u] - size[u]);
            let start = list.partition_point(|&x| x < lo[u]);
            let end = list.partition_point(|&x| x <= top);
            (start, end.max(start))
        });
        let done = axes.iter().any(|&(s, e)| s >= e);
        Self {
            rotation,
            size,
            at: [axes[0].0, axes[1].0, axes[2].0],
            axes,
            done,
        }
    }

    /// Next position clear of every box in `boxes` and strictly after
    /// `floor` in (z, y, x) order.
    fn next(
        &mut self,
        problem: &Problem,
        class: usize,
        boxes: &[(Triple, Triple)],
        floor: Option<Triple>,
        deadline: Instant,
    ) -> Option<Triple> {
        let lists: [&[Length]; 3] = std::array::from_fn(|u| problem.normal_positions(class, u));
        let mut steps = 0u32;
        while !self.done {
            steps = steps.wrapping_add(1);
            if steps.is_multiple_of(4096) && Instant::now() >= deadline {
                return None;
            }
            if self.at[0] >= self.axes[0].1 {
                self.at[0] = self.axes[0].0;
                self.at[1] += 1;
            }
            if self.at[1] >= self.axes[1].1 {
                self.at[1] = self.axes[1].0;
                self.at[2] += 1;
            }
            if self.at[2] >= self.axes[2].1 {
                self.done = true;
                break;
            }
            let pos = [lists[0][self.at[0]], lists[1][self.at[1]], lists[2][self.at[2]]];
            if let Some(f) = floor {
                if lex_key(pos) <= lex_key(f) {
                    self.at[0] += 1;
                    continue;
                }
            }
            let blocker = boxes
                .iter()
                .find(|(bp, bs)| (0..3).all(|u| pos[u] < bp[u] + bs[u] && bp[u] < pos[u] + self.size[u]));
            match blocker {
                Some((bp, bs)) => {
                    let past = bp[0] + bs[0];
                    let (start, end) = self.axes[0];
                    self.at[0] = start + lists[0][start..end].partition_point(|&x| x < past);
                }
                None => {
                    self.at[0] += 1;
                    return Some(pos);
                }
            }
        }
        None
    }
}

/// Lazily generated children of a stable, unassigned store.
pub struct Children<'p> {
    problem: &'p Problem,
    parent: DomainStore,
    item: usize,
    class: usize,
    boxes: Vec<(Triple, Triple)>,
    floor: Option<Triple>,
    cursors: Vec<PositionCursor>,
    heads: Vec<Option<Triple>>,
    started: bool,
    exclude_pending: bool,
    deadline: Instant,
    pub propagations: u64,
}

impl<'p> Children<'p> {
    pub fn new(problem: &'p Problem, parent: DomainStore, item: usize, deadline: Instant) -> Self {
        let class = problem.class_of(item);
        let d = *parent.item(item);
        let cursors = problem
            .shapes(class)
            .iter()
            .filter(|(r, _)| d.rotations.contains(*r))
            .map(|&(r, s)| PositionCursor::new(problem, class, d.lo, d.hi, r, s))
            .collect::<Vec<_>>();
        let boxes = parent
            .fixed_boxes(problem)
            .into_iter()
            .map(|(p, s)| (p.pos, s))
            .collect();
        let floor = if problem.item_symmetry() && item > 0 && problem.class_of(item - 1) == class {
            parent.placement(problem, item - 1).map(|p| p.pos)
        } else {
            None
        };
        Self {
            heads: vec![None; cursors.len()],
            exclude_pending: d.status == Status::Undecided,
            problem,
            parent,
            item,
            class,
            boxes,
            floor,
            cursors,
            started: false,
            deadline,
            propagations: 0,
        }
    }

    fn next_choice(&mut self) -> Option<(usize, Triple)> {
        if !self.started {
            self.started = true;
            for c in 0..self.cursors.len() {
                self.heads[c] = self.cursors[c].next(self.problem, self.class, &self.boxes, self.floor, self.deadline);
            }
        }
        let best = (0..self.cursors.len())
            .filter_map(|c| self.heads[c].map(|p| (lex_key(p), c, p)))
            .min()?;
        let (_, c, pos) = best;
        self.heads[c] = self.cursors[c].next(self.problem, self.class, &self.boxes, self.floor, self.deadline);
        Some((c, pos))
    }
}

impl Iterator for Children<'_> {
    type Item = DomainStore;

    fn next(&mut self) -> Option<DomainStore> {
        while let Some((c, pos)) = self.next_choice() {
            let mut child = self.parent.clone();
            child.pack(self.problem, self.item, self.cursors[c].rotation, pos);
            if !child.is_failed()
                && propagate_incremental(&mut child, self.problem, &mut self.propagations) == Outcome::Stable
            {
                return Some(child);
            }
        }
        if std::mem::take(&mut self.exclude_pending) {
            let mut child = self.parent.clone();
            child.exclude(self.problem, self.item);
            if propagate_incremental(&mut child, self.problem, &mut self.propagations) == Outcome::Stable {
                return Some(child);
            }
        }
        None
    }
}

/// All children of a stable store, packing choices first, exclusion last.
/// Empty when the store is fully assigned.
pub fn branch(store: &DomainStore, problem: &Problem, branching: Branching, rng: &mut ChaCha8Rng) -> Vec<DomainStore> {
    match select_item(store, problem, branching, rng) {
        None => Vec::new(),
        Some(item) => Children::new(problem, store.clone(), item, far_future()).collect(),
    }
}

fn far_future() -> Instant {
    Instant::now() + Duration::from_secs(365 * 24 * 3600)
}

struct Best {
    solution: Solution,
    sequence: Vec<Incumbent>,
}

struct Shared<'a> {
    problem: &'a Problem,
    config: &'a SearchConfig,
    start: Instant,
    deadline: Instant,
    root_bound: Volume,
    best_objective: AtomicU64,
    best: Mutex<Best>,
    sink: Mutex<&'a mut (dyn FnMut(&Incumbent) + Send)>,
    timed_out: AtomicBool,
    stop: AtomicBool,
    nodes: AtomicU64,
    propagations: AtomicU64,
    frontier: Mutex<Vec<Children<'a>>>,
}

impl<'a> Shared<'a> {
    fn offer(&self, store: &DomainStore) {
        let objective = self.problem.instance().payload_volume()
            - store
                .fixed_boxes(self.problem)
                .iter()
                .map(|(p, _)| self.problem.item_volume(p.item_index))
                .sum::<Volume>();
        if objective >= self.best_objective.load(Ordering::Acquire) {
            return;
        }
        let mut best = self.best.lock().unwrap();
        if objective >= best.solution.objective {
            return;
        }
        let solution = store.solution(self.problem);
        debug_assert_eq!(solution.objective, objective);
        let incumbent = Incumbent {
            solution: solution.clone(),
            found_at: self.start.elapsed(),
        };
        best.solution = solution;
        self.best_objective.store(objective, Ordering::Release);
        if self.config.emit_all {
            (self.sink.lock().unwrap())(&incumbent);
        }
        best.sequence.push(incumbent);
        if objective <= self.root_bound {
            self.stop.store(true, Ordering::Release);
        }
    }

    fn halted(&self) -> bool {
        if self.stop.load(Ordering::Acquire) {
            return true;
        }
        if Instant::now() >= self.deadline {
            self.timed_out.store(true, Ordering::Release);
            return true;
        }
        false
    }

    /// Records a freshly reached node; `false` when it needs no expansion.
    fn visit(&self, store: &DomainStore) -> bool {
        self.nodes.fetch_add(1, Ordering::Relaxed);
        self.offer(store);
        node_bound(store, self.problem) < self.best_objective.load(Ordering::Acquire) && !store.is_assigned()
    }

    fn expand(&self, store: DomainStore, rng: &mut ChaCha8Rng) -> Option<Children<'a>> {
        let item = select_item(&store, self.problem, self.config.branching, rng)?;
        Some(Children::new(self.problem, store, item, self.deadline))
    }

    fn dfs(&self, root: DomainStore, rng: &mut ChaCha8Rng) {
        if !self.visit(&root) {
            return;
        }
        let mut stack: Vec<Children<'a>> = Vec::new();
        stack.extend(self.expand(root, rng));
        let mut propagations = 0u64;
        while let Some(top) = stack.last_mut() {
            if self.halted() {
                break;
            }
            match top.next() {
                Some(child) => {
                    if self.visit(&child) {
                        if let Some(c) = self.expand(child, rng) {
                            stack.push(c);
                        }
                    }
                }
                None => {
                    propagations += top.propagations;
                    stack.pop();
                }
            }
        }
        propagations += stack.iter().map(|c| c.propagations).sum::<u64>();
        self.propagations.fetch_add(propagations, Ordering::Relaxed);
    }

    /// Pops the next subtree from the shared frontier, expanding the top
    /// `split_depth` levels there so workers get disjoint subtrees.
    fn take_work(&self, split_depth: usize, rng: &mut ChaCha8Rng) -> Option<DomainStore> {
        let mut frontier = self.frontier.lock().unwrap();
        loop {
            if self.halted() {
                return None;
            }
            let depth = frontier.len();
            let top = frontier.last_mut()?;
            match top.next() {
                None => {
                    let done = frontier.pop().unwrap();
                    self.propagations.fetch_add(done.propagations, Ordering::Relaxed);
                }
                Some(child) if depth < split_depth => {
                    if self.visit(&child) {
                        if let Some(c) = self.expand(child, rng) {
                            frontier.push(c);
                        }
                    }
                }
                Some(child) => return Some(child),
            }
        }
    }
}

/// Minimizes leftover volume under a wall-clock budget. Always returns a
/// feasible solution (at worst the empty packing); `stats.proved_optimal`
/// is set when the search finished or met the root bound.
pub fn solve<F>(instance: &Instance, config: &SearchConfig, mut sink: F) -> (Solution, SolveStats)
where
    F: FnMut(&Incumbent) + Send,
{
    let start = Instant::now();
    let problem = Problem::new(instance, config.item_symmetry);
    let empty = Solution::empty(instance);
    let mut root = DomainStore::root(&problem);
    let mut root_props = 0u64;
    let root_outcome = propagate_incremental(&mut root, &problem, &mut root_props);
    debug_assert_eq!(root_outcome, Outcome::Stable);

    let first = Incumbent {
        solution: empty.clone(),
        found_at: start.elapsed(),
    };
    if config.emit_all {
        sink(&first);
    }
    let sink_ref: &mut (dyn FnMut(&Incumbent) + Send) = &mut sink;
    let shared = Shared {
        problem: &problem,
        config,
        start,
        deadline: start + config.time_limit,
        root_bound: node_bound(&root, &problem),
        best_objective: AtomicU64::new(empty.objective),
        best: Mutex::new(Best {
            solution: empty,
            sequence: vec![first],
        }),
        sink: Mutex::new(sink_ref),
        timed_out: AtomicBool::new(false),
        stop: AtomicBool::new(false),
        nodes: AtomicU64::new(0),
        propagations: AtomicU64::new(root_props),
        frontier: Mutex::new(Vec::new()),
    };
    if shared.best_objective.load(Ordering::Acquire) <= shared.root_bound {
        shared.stop.store(true, Ordering::Release);
    }

    let workers = config.workers.max(1);
    if workers == 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        shared.dfs(root, &mut rng);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        if shared.visit(&root) {
            if let Some(c) = shared.expand(root, &mut rng) {
                shared.frontier.lock().unwrap().push(c);
            }
        }
        let split_depth = 3;
        std::thread::scope(|scope| {
            for w in 0..workers {
                let shared = &shared;
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(w as u64 + 1));
                    while let Some(subtree) = shared.take_work(split_depth, &mut rng) {
                        shared.dfs(subtree, &mut rng);
                    }
                });
            }
        });
        for c in shared.frontier.lock().unwrap().drain(..) {
            shared.propagations.fetch_add(c.propagations, Ordering::Relaxed);
        }
    }

    let timed_out = shared.timed_out.load(Ordering::Acquire);
    let stopped = shared.stop.load(Ordering::Acquire);
    let nodes = shared.nodes.load(Ordering::Relaxed);
    let propagations = shared.propagations.load(Ordering::Relaxed);
    let best = shared.best.into_inner().unwrap();
    let sink = shared.sink.into_inner().unwrap();
    if !config.emit_all {
        if let Some(last) = best.sequence.last() {
            sink(last);
        }
    }
    let stats = SolveStats {
        nodes_explored: nodes,
        propagations,
        solutions_found: best.sequence.len() as u64,
        wall_time: start.elapsed(),
        proved_optimal: stopped || !timed_out,
    };
    (best.solution, stats)
}
