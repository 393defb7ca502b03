//! Interval domain store and the propagators that keep it consistent with
//! the packing constraints: containment, pairwise non-strict non-overlap,
//! the per-class cardinality ledger and (optionally) the ordering of
//! identical items.
//!
//! Positions are stored per container axis, i.e. the domain of item `i` on
//! axis `u` bounds the coordinate of its lower corner along `u` after
//! rotation. Reasoning is on interval endpoints only.

use std::collections::VecDeque;

use crate::model::{allowed_rotations, oriented_size, Instance, Length, Placement, Rotation, Solution, Triple, Volume};

/// Subset of the six rotations, as a bit mask over [`Rotation::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RotationSet(u8);

impl RotationSet {
    pub fn of(rotations: &[Rotation]) -> Self {
        Self(rotations.iter().fold(0, |m, r| m | 1 << r.index()))
    }

    pub fn single(r: Rotation) -> Self {
        Self(1 << r.index())
    }

    pub fn contains(&self, r: Rotation) -> bool {
        self.0 & (1 << r.index()) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(&self, other: RotationSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn remove(&mut self, r: Rotation) {
        self.0 &= !(1 << r.index());
    }

    pub fn iter(self) -> impl Iterator<Item = Rotation> {
        Rotation::ALL.into_iter().filter(move |r| self.contains(*r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Undecided,
    Packed,
    Excluded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ItemDomain {
    pub lo: Triple,
    pub hi: Triple,
    pub rotations: RotationSet,
    pub status: Status,
}

impl ItemDomain {
    /// Packed with a single rotation and a single position.
    pub fn is_fixed(&self) -> bool {
        self.status == Status::Packed && self.rotations.len() == 1 && self.lo == self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ClassLedger {
    pub packed: usize,
    pub excluded: usize,
    pub undecided: usize,
}

/// Class assignment of every item. `Increasing` over the class labels
/// together with the per-class cardinalities admits exactly one vector: the
/// sorted one with `count` copies of each class.
pub fn resolve_classes(instance: &Instance) -> Vec<usize> {
    instance.item_classes()
}

/// Instance plus everything the propagators and the search precompute from
/// it. Immutable; shared by all stores of one solve.
#[derive(Debug, Clone)]
pub struct Problem {
    instance: Instance,
    item_class: Vec<usize>,
    offsets: Vec<usize>,
    rotations: Vec<Vec<(Rotation, Triple)>>,
    shapes: Vec<Vec<(Rotation, Triple)>>,
    normal: Vec<[Vec<Length>; 3]>,
    item_symmetry: bool,
}

impl Problem {
    pub fn new(instance: &Instance, item_symmetry: bool) -> Self {
        let rotations: Vec<Vec<(Rotation, Triple)>> = instance
            .classes()
            .iter()
            .map(|c| {
                allowed_rotations(c)
                    .into_iter()
                    .map(|r| (r, oriented_size(c, r)))
                    .collect()
            })
            .collect();
        let shapes = rotations
            .iter()
            .map(|rs| {
                let mut seen: Vec<(Rotation, Triple)> = Vec::new();
                for &(r, s) in rs {
                    if !seen.iter().any(|&(_, t)| t == s) {
                        seen.push((r, s));
                    }
                }
                seen
            })
            .collect();
        let normal = normal_positions(instance, &rotations);
        Self {
            item_class: resolve_classes(instance),
            offsets: instance.class_offsets(),
            instance: instance.clone(),
            rotations,
            shapes,
            normal,
            item_symmetry,
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn num_items(&self) -> usize {
        self.item_class.len()
    }

    pub fn class_of(&self, item: usize) -> usize {
        self.item_class[item]
    }

    pub fn item_symmetry(&self) -> bool {
        self.item_symmetry
    }

    pub fn item_volume(&self, item: usize) -> Volume {
        self.instance.class(self.item_class[item]).volume()
    }

    /// Allowed rotations of a class with their oriented sizes.
    pub fn rotations(&self, class: usize) -> &[(Rotation, Triple)] {
        &self.rotations[class]
    }

    /// One rotation per distinct oriented size, lowest rotation first.
    pub fn shapes(&self, class: usize) -> &[(Rotation, Triple)] {
        &self.shapes[class]
    }

    /// Sorted candidate coordinates for items of `class` along `axis`.
    pub fn normal_positions(&self, class: usize, axis: usize) -> &[Length] {
        &self.normal[class][axis]
    }

    pub fn size_of(&self, item: usize, r: Rotation) -> Triple {
        oriented_size(self.instance.class(self.item_class[item]), r)
    }

    /// Same-class neighbours `(prev, next)` of an item, if any.
    fn class_neighbours(&self, item: usize) -> (Option<usize>, Option<usize>) {
        let k = self.item_class[item];
        let prev = (item > self.offsets[k]).then(|| item - 1);
        let next = (item + 1 < self.offsets[k + 1]).then_some(item + 1);
        (prev, next)
    }
}

/// Coordinates an item of each class can take in a packing pushed towards the
/// origin on every axis. Such a coordinate is the total length of a chain of
/// other items, so it is a subset sum of their possible lengths on that axis.
fn normal_positions(instance: &Instance, rotations: &[Vec<(Rotation, Triple)>]) -> Vec<[Vec<Length>; 3]> {
    let dims = instance.container().dims();
    let lengths: Vec<[Vec<Length>; 3]> = rotations
        .iter()
        .map(|rs| {
            std::array::from_fn(|u| {
                let mut ls: Vec<Length> = rs.iter().map(|(_, s)| s[u]).collect();
                ls.sort_unstable();
                ls.dedup();
                ls
            })
        })
        .collect();
    (0..instance.num_classes())
        .map(|k| {
            std::array::from_fn(|u| {
                let Some(&shortest) = lengths[k][u].first() else {
                    return Vec::new();
                };
                let cap = dims[u] - shortest;
                if cap < 0 {
                    return Vec::new();
                }
                let mut reach = vec![false; cap as usize + 1];
                reach[0] = true;
                for (j, class) in instance.classes().iter().enumerate() {
                    let copies = class.count - usize::from(j == k);
                    for _ in 0..copies {
                        let mut grew = false;
                        for x in (0..=cap as usize).rev() {
                            if reach[x] {
                                continue;
                            }
                            if lengths[j][u].iter().any(|&l| l as usize <= x && reach[x - l as usize]) {
                                reach[x] = true;
                                grew = true;
                            }
                        }
                        if !grew {
                            break;
                        }
                    }
                }
                reach
                    .iter()
                    .enumerate()
                    .filter(|(_, &r)| r)
                    .map(|(x, _)| x as Length)
                    .collect()
            })
        })
        .collect()
}

fn ledger_slot(l: &mut ClassLedger, s: Status) -> &mut usize {
    match s {
        Status::Undecided => &mut l.undecided,
        Status::Packed => &mut l.packed,
        Status::Excluded => &mut l.excluded,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainStore {
    items: Vec<ItemDomain>,
    ledger: Vec<ClassLedger>,
    failed: bool,
    dirty: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Stable,
    Failed,
}

impl DomainStore {
    /// Every item undecided, positions anywhere in the container, every
    /// allowed rotation. Not yet propagated.
    pub fn root(problem: &Problem) -> Self {
        let dims = problem.instance.container().dims();
        let items = (0..problem.num_items())
            .map(|i| ItemDomain {
                lo: [0; 3],
                hi: dims,
                rotations: RotationSet::of(
                    &problem
                        .rotations(problem.class_of(i))
                        .iter()
                        .map(|&(r, _)| r)
                        .collect::<Vec<_>>(),
                ),
                status: Status::Undecided,
            })
            .collect();
        let ledger = problem
            .instance
            .classes()
            .iter()
            .map(|c| ClassLedger {
                undecided: c.count,
                ..ClassLedger::default()
            })
            .collect();
        Self {
            items,
            ledger,
            failed: false,
            dirty: (0..problem.num_items()).collect(),
        }
    }

    pub fn items(&self) -> &[ItemDomain] {
        &self.items
    }

    pub fn item(&self, i: usize) -> &ItemDomain {
        &self.items[i]
    }

    pub fn ledger(&self) -> &[ClassLedger] {
        &self.ledger
    }

    pub fn is_failed(&self) -> bool {
        self.failed
    }

    /// No undecided items and every packed item fixed.
    pub fn is_assigned(&self) -> bool {
        self.items.iter().all(|d| d.status == Status::Excluded || d.is_fixed())
    }

    fn set_status(&mut self, problem: &Problem, i: usize, status: Status) {
        let k = problem.class_of(i);
        let old = self.items[i].status;
        if old == status {
            return;
        }
        *ledger_slot(&mut self.ledger[k], old) -= 1;
        *ledger_slot(&mut self.ledger[k], status) += 1;
        self.items[i].status = status;
        self.dirty.push(i);
    }

    /// Decides that item `i` goes into the container, position still open.
    pub fn mark_packed(&mut self, problem: &Problem, i: usize) {
        match self.items[i].status {
            Status::Excluded => self.failed = true,
            _ => self.set_status(problem, i, Status::Packed),
        }
    }

    /// Packs item `i` with a fixed rotation and position.
    pub fn pack(&mut self, problem: &Problem, i: usize, rotation: Rotation, pos: Triple) {
        let d = self.items[i];
        if d.status == Status::Excluded
            || !d.rotations.contains(rotation)
            || (0..3).any(|u| pos[u] < d.lo[u] || pos[u] > d.hi[u])
        {
            self.failed = true;
            return;
        }
        self.items[i].lo = pos;
        self.items[i].hi = pos;
        self.items[i].rotations = RotationSet::single(rotation);
        self.set_status(problem, i, Status::Packed);
        self.dirty.push(i);
    }

    /// Leaves item `i` out of the container.
    pub fn exclude(&mut self, problem: &Problem, i: usize) {
        match self.items[i].status {
            Status::Packed => self.failed = true,
            _ => self.set_status(problem, i, Status::Excluded),
        }
    }

    /// Restricts the position domain of item `i` on `axis`.
    pub fn restrict(&mut self, i: usize, axis: usize, lo: Length, hi: Length) {
        let d = &mut self.items[i];
        d.lo[axis] = d.lo[axis].max(lo);
        d.hi[axis] = d.hi[axis].min(hi);
        self.dirty.push(i);
    }

    /// Fixed placement of a packed item, if it is fixed.
    pub fn placement(&self, problem: &Problem, i: usize) -> Option<Placement> {
        let d = &self.items[i];
        d.is_fixed().then(|| Placement {
            item_index: i,
            class_index: problem.class_of(i),
            rotation: d.rotations.iter().next().unwrap(),
            pos: d.lo,
        })
    }

    /// Fixed packed items as placements with their oriented sizes.
    pub fn fixed_boxes(&self, problem: &Problem) -> Vec<(Placement, Triple)> {
        (0..self.items.len())
            .filter_map(|i| self.placement(problem, i))
            .map(|p| (p, problem.size_of(p.item_index, p.rotation)))
            .collect()
    }

    /// The feasible solution made of the fixed packed items.
    pub fn solution(&self, problem: &Problem) -> Solution {
        let placed = (0..self.items.len())
            .filter_map(|i| self.placement(problem, i))
            .collect();
        Solution::from_placements(&problem.instance, placed)
    }

    /// Volume of items with status packed, fixed or not.
    pub fn packed_volume(&self, problem: &Problem) -> Volume {
        self.ledger
            .iter()
            .zip(problem.instance.classes())
            .map(|(l, c)| l.packed as Volume * c.volume())
            .sum()
    }

    pub fn undecided_volume(&self, problem: &Problem) -> Volume {
        self.ledger
            .iter()
            .zip(problem.instance.classes())
            .map(|(l, c)| l.undecided as Volume * c.volume())
            .sum()
    }

    fn min_sizes(&self, problem: &Problem, i: usize) -> Triple {
        let mut out = [Length::MAX; 3];
        for r in self.items[i].rotations.iter() {
            let s = problem.size_of(i, r);
            for u in 0..3 {
                out[u] = out[u].min(s[u]);
            }
        }
        out
    }

    /// Marks the store failed when a packed item has an empty domain, and
    /// excludes an undecided item whose domain emptied.
    fn on_empty(&mut self, problem: &Problem, i: usize) {
        match self.items[i].status {
            Status::Packed => self.failed = true,
            Status::Undecided => self.set_status(problem, i, Status::Excluded),
            Status::Excluded => {}
        }
    }
}

/// Keeps item `i` inside the container: drops rotations that no longer fit
/// from the current lower bounds and caps the upper bounds by the smallest
/// remaining extent on each axis.
pub fn prune_containment(store: &mut DomainStore, problem: &Problem, i: usize) -> bool {
    if store.items[i].status == Status::Excluded {
        return false;
    }
    let dims = problem.instance.container().dims();
    let before = store.items[i];
    let mut d = before;
    for u in 0..3 {
        d.lo[u] = d.lo[u].max(0);
    }
    for r in before.rotations.iter() {
        let s = problem.size_of(i, r);
        if (0..3).any(|u| d.lo[u] + s[u] > dims[u]) {
            d.rotations.remove(r);
        }
    }
    store.items[i].lo = d.lo;
    store.items[i].rotations = d.rotations;
    if d.rotations.is_empty() {
        store.on_empty(problem, i);
        return true;
    }
    let min = store.min_sizes(problem, i);
    for u in 0..3 {
        d.hi[u] = d.hi[u].min(dims[u] - min[u]);
    }
    store.items[i].hi = d.hi;
    if (0..3).any(|u| d.lo[u] > d.hi[u]) {
        store.on_empty(problem, i);
        return true;
    }
    store.items[i] != before
}

/// Two-box reasoning for a pair of packed items: if their compulsory parts
/// intersect on two axes, they must be separated on the third, and the
/// bounds there are tightened accordingly.
pub fn prune_nonoverlap(store: &mut DomainStore, problem: &Problem, i: usize, j: usize) -> bool {
    debug_assert_ne!(i, j);
    let (a, b) = (store.items[i], store.items[j]);
    if a.status != Status::Packed || b.status != Status::Packed {
        return false;
    }
    let sa = store.min_sizes(problem, i);
    let sb = store.min_sizes(problem, j);
    if sa.contains(&0) || sb.contains(&0) {
        return false;
    }
    let forced = |u: usize| a.hi[u].max(b.hi[u]) < (a.lo[u] + sa[u]).min(b.lo[u] + sb[u]);
    let free: Vec<usize> = (0..3).filter(|&u| !forced(u)).collect();
    match free.as_slice() {
        [] => {
            store.failed = true;
            true
        }
        &[v] => {
            let a_first = a.lo[v] + sa[v] <= b.hi[v];
            let b_first = b.lo[v] + sb[v] <= a.hi[v];
            let (first, second, s_first) = match (a_first, b_first) {
                (false, false) => {
                    store.failed = true;
                    return true;
                }
                (true, true) => return false,
                (true, false) => (i, j, sa[v]),
                (false, true) => (j, i, sb[v]),
            };
            let lo_second = store.items[first].lo[v] + s_first;
            let hi_first = store.items[second].hi[v] - s_first;
            let mut changed = false;
            if store.items[second].lo[v] < lo_second {
                store.items[second].lo[v] = lo_second;
                changed = true;
            }
            if store.items[first].hi[v] > hi_first {
                store.items[first].hi[v] = hi_first;
                changed = true;
            }
            for k in [first, second] {
                if store.items[k].lo[v] > store.items[k].hi[v] {
                    store.failed = true;
                }
            }
            changed
        }
        _ => false,
    }
}

/// Ordering of identical items: for same-class neighbours `i < j`, `j`
/// packed implies `i` packed, and two packed neighbours are strictly
/// ordered by (z, y, x) position.
pub fn prune_item_order(store: &mut DomainStore, problem: &Problem, i: usize, j: usize) -> bool {
    let (si, sj) = (store.items[i].status, store.items[j].status);
    match (si, sj) {
        (Status::Excluded, Status::Packed) => {
            store.failed = true;
            true
        }
        (Status::Excluded, Status::Undecided) => {
            store.set_status(problem, j, Status::Excluded);
            true
        }
        (Status::Undecided, Status::Packed) => {
            store.set_status(problem, i, Status::Packed);
            true
        }
        (Status::Packed, Status::Packed) => lex_less(store, i, j),
        _ => false,
    }
}

/// Bounds propagation of `key(pos_i) < key(pos_j)` with key order z, y, x.
fn lex_less(store: &mut DomainStore, i: usize, j: usize) -> bool {
    let mut changed = false;
    for (depth, u) in [2usize, 1, 0].into_iter().enumerate() {
        let strict = Length::from(depth == 2);
        let (a, b) = (store.items[i], store.items[j]);
        let lo_b = b.lo[u].max(a.lo[u] + strict);
        let hi_a = a.hi[u].min(b.hi[u] - strict);
        if lo_b != b.lo[u] || hi_a != a.hi[u] {
            store.items[j].lo[u] = lo_b;
            store.items[i].hi[u] = hi_a;
            changed = true;
        }
        if lo_b > store.items[j].hi[u] || store.items[i].lo[u] > hi_a {
            store.failed = true;
            return true;
        }
        let (a, b) = (store.items[i], store.items[j]);
        let tied = a.lo[u] == a.hi[u] && b.lo[u] == b.hi[u] && a.lo[u] == b.lo[u];
        if !tied {
            break;
        }
    }
    changed
}

fn check_ledger(store: &mut DomainStore, problem: &Problem) {
    for (k, class) in problem.instance.classes().iter().enumerate() {
        let l = store.ledger[k];
        if l.packed + l.excluded + l.undecided != class.count {
            store.failed = true;
        }
    }
}

/// Runs every propagator over every item until nothing changes or the store
/// fails. Each propagator call adds one to `propagations`.
pub fn propagate_fixpoint(store: &mut DomainStore, problem: &Problem, propagations: &mut u64) -> Outcome {
    store.dirty.clear();
    let n = store.items.len();
    loop {
        if store.failed {
            break;
        }
        let mut changed = false;
        for i in 0..n {
            if store.items[i].status == Status::Excluded {
                continue;
            }
            *propagations += 1;
            changed |= prune_containment(store, problem, i);
            if store.failed {
                break;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if store.failed {
                    break;
                }
                if store.items[i].status == Status::Packed && store.items[j].status == Status::Packed {
                    *propagations += 1;
                    changed |= prune_nonoverlap(store, problem, i, j);
                }
            }
        }
        if problem.item_symmetry && !store.failed {
            for i in 0..n {
                if let (_, Some(j)) = problem.class_neighbours(i) {
                    *propagations += 1;
                    changed |= prune_item_order(store, problem, i, j);
                    if store.failed {
                        break;
                    }
                }
            }
        }
        *propagations += 1;
        check_ledger(store, problem);
        if !changed {
            break;
        }
    }
    store.dirty.clear();
    if store.failed {
        Outcome::Failed
    } else {
        Outcome::Stable
    }
}

/// Worklist variant of [`propagate_fixpoint`]: starts from the items touched
/// since the last propagation and only revisits items whose domains changed.
/// Reaches the same fixpoint when the store was stable before those changes.
pub fn propagate_incremental(store: &mut DomainStore, problem: &Problem, propagations: &mut u64) -> Outcome {
    let n = store.items.len();
    let mut queued = vec![false; n];
    let mut queue = VecDeque::new();
    for i in std::mem::take(&mut store.dirty) {
        if !std::mem::replace(&mut queued[i], true) {
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        queued[i] = false;
        if store.failed {
            break;
        }
        let mut touched: Vec<usize> = Vec::new();
        if store.items[i].status != Status::Excluded {
            *propagations += 1;
            if prune_containment(store, problem, i) {
                touched.push(i);
            }
        }
        if store.items[i].status == Status::Packed {
            for j in 0..n {
                if j == i || store.items[j].status != Status::Packed {
                    continue;
                }
                *propagations += 1;
                let before = (store.items[i], store.items[j]);
                prune_nonoverlap(store, problem, i, j);
                if store.items[i] != before.0 {
                    touched.push(i);
                }
                if store.items[j] != before.1 {
                    touched.push(j);
                }
                if store.failed {
                    break;
                }
            }
        }
        if problem.item_symmetry && !store.failed {
            let (prev, next) = problem.class_neighbours(i);
            for (a, b) in [prev.map(|p| (p, i)), next.map(|nx| (i, nx))].into_iter().flatten() {
                *propagations += 1;
                let before = (store.items[a], store.items[b]);
                prune_item_order(store, problem, a, b);
                if store.items[a] != before.0 {
                    touched.push(a);
                }
                if store.items[b] != before.1 {
                    touched.push(b);
                }
            }
        }
        touched.append(&mut store.dirty);
        for t in touched {
            if !std::mem::replace(&mut queued[t], true) {
                queue.push_back(t);
            }
        }
    }
    *propagations += 1;
    check_ledger(store, problem);
    store.dirty.clear();
    if store.failed {
        Outcome::Failed
    } else {
        Outcome::Stable
    }
}
