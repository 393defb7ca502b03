//! Instances, rotations, placements and solutions, plus the geometric and
//! objective arithmetic shared by the propagators, the search and the oracle.
//!
//! Axis 2 is always the vertical (height) axis. Lengths are integers in the
//! instance's native unit and volumes are exact integers.

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Length along one axis, in the instance's native unit (cm for thpack files).
pub type Length = i64;
/// Exact volume in cubed native units.
pub type Volume = u64;
/// One value per axis; index 2 is the vertical axis.
pub type Triple = [Length; 3];

/// Index of the vertical axis.
pub const VERTICAL: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("container dimension {axis} is {value}, must be at least 1")]
    ContainerDim { axis: usize, value: Length },
    #[error("class {class}: dimension {axis} is {value}, must be at least 1")]
    ClassDim { class: usize, axis: usize, value: Length },
    #[error("class {class}: no dimension may be placed vertically")]
    NoVerticalAxis { class: usize },
    #[error("class {class}: item count must be at least 1")]
    EmptyClass { class: usize },
    #[error("instance has no item classes")]
    NoClasses,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Triple", into = "Triple")]
pub struct Container {
    dims: Triple,
}

impl Container {
    pub fn new(dims: Triple) -> Result<Self, ModelError> {
        for (axis, &value) in dims.iter().enumerate() {
            if value < 1 {
                return Err(ModelError::ContainerDim { axis, value });
            }
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> Triple {
        self.dims
    }

    pub fn volume(&self) -> Volume {
        box_volume(self.dims)
    }
}

impl TryFrom<Triple> for Container {
    type Error = ModelError;

    fn try_from(dims: Triple) -> Result<Self, Self::Error> {
        Container::new(dims)
    }
}

impl From<Container> for Triple {
    fn from(c: Container) -> Self {
        c.dims
    }
}

/// A group of identical items. `dims` are the intrinsic dimensions and
/// `vertical_ok[d]` says whether intrinsic dimension `d` may stand upright.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ItemClass {
    pub dims: Triple,
    pub vertical_ok: [bool; 3],
    pub count: usize,
}

impl ItemClass {
    pub fn new(dims: Triple, vertical_ok: [bool; 3], count: usize) -> Self {
        Self {
            dims,
            vertical_ok,
            count,
        }
    }

    pub fn volume(&self) -> Volume {
        box_volume(self.dims)
    }

    fn check(&self, class: usize) -> Result<(), ModelError> {
        for (axis, &value) in self.dims.iter().enumerate() {
            if value < 1 {
                return Err(ModelError::ClassDim { class, axis, value });
            }
        }
        if !self.vertical_ok.iter().any(|&v| v) {
            return Err(ModelError::NoVerticalAxis { class });
        }
        if self.count == 0 {
            return Err(ModelError::EmptyClass { class });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc")]
pub struct Instance {
    name: String,
    container: Container,
    classes: Vec<ItemClass>,
}

impl Instance {
    pub fn new(name: impl Into<String>, container: Container, classes: Vec<ItemClass>) -> Result<Self, ModelError> {
        if classes.is_empty() {
            return Err(ModelError::NoClasses);
        }
        for (k, class) in classes.iter().enumerate() {
            class.check(k)?;
        }
        Ok(Self {
            name: name.into(),
            container,
            classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn container(&self) -> &Container {
        &self.container
    }

    pub fn classes(&self) -> &[ItemClass] {
        &self.classes
    }

    pub fn class(&self, k: usize) -> &ItemClass {
        &self.classes[k]
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Total number of items `N`.
    pub fn num_items(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    /// Volume of every item of every class.
    pub fn payload_volume(&self) -> Volume {
        self.classes.iter().map(|c| c.count as Volume * c.volume()).sum()
    }

    /// Class label of every item; items are grouped by class in class order.
    pub fn item_classes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.num_items());
        for (k, class) in self.classes.iter().enumerate() {
            out.extend(std::iter::repeat_n(k, class.count));
        }
        out
    }

    /// First item index of each class, plus `N` as a sentinel.
    pub fn class_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.classes.len() + 1);
        let mut acc = 0;
        for class in &self.classes {
            offsets.push(acc);
            acc += class.count;
        }
        offsets.push(acc);
        offsets
    }
}

#[derive(Deserialize)]
struct InstanceDoc {
    name: String,
    container: Container,
    classes: Vec<ItemClass>,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = ModelError;

    fn try_from(doc: InstanceDoc) -> Result<Self, Self::Error> {
        Instance::new(doc.name, doc.container, doc.classes)
    }
}

/// Axis permutation: `perm[u]` is the intrinsic dimension lying along
/// container axis `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "[u8; 3]", into = "[u8; 3]")]
pub struct Rotation {
    perm: [u8; 3],
}

impl Rotation {
    /// All six permutations in lexicographic order.
    pub const ALL: [Rotation; 6] = [
        Rotation { perm: [0, 1, 2] },
        Rotation { perm: [0, 2, 1] },
        Rotation { perm: [1, 0, 2] },
        Rotation { perm: [1, 2, 0] },
        Rotation { perm: [2, 0, 1] },
        Rotation { perm: [2, 1, 0] },
    ];

    pub const IDENTITY: Rotation = Rotation::ALL[0];

    pub fn new(perm: [u8; 3]) -> Option<Self> {
        let mut seen = [false; 3];
        for &p in &perm {
            if p > 2 || seen[p as usize] {
                return None;
            }
            seen[p as usize] = true;
        }
        Some(Self { perm })
    }

    pub fn perm(&self) -> [u8; 3] {
        self.perm
    }

    /// Intrinsic dimension lying along container axis `u`.
    pub fn dim_on(&self, u: usize) -> usize {
        self.perm[u] as usize
    }

    /// Position of this rotation in [`Rotation::ALL`].
    pub fn index(&self) -> usize {
        Rotation::ALL.iter().position(|r| r == self).unwrap()
    }
}

impl TryFrom<[u8; 3]> for Rotation {
    type Error = String;

    fn try_from(perm: [u8; 3]) -> Result<Self, Self::Error> {
        Rotation::new(perm).ok_or_else(|| format!("{perm:?} is not a permutation of 0, 1, 2"))
    }
}

impl From<Rotation> for [u8; 3] {
    fn from(r: Rotation) -> Self {
        r.perm
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.perm[0], self.perm[1], self.perm[2])
    }
}

/// One packed item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Placement {
    pub item_index: usize,
    pub class_index: usize,
    pub rotation: Rotation,
    pub pos: Triple,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub placed: Vec<Placement>,
    pub unpacked_counts: Vec<usize>,
    pub objective: Volume,
}

impl Solution {
    /// Nothing packed; the objective is the full payload volume.
    pub fn empty(instance: &Instance) -> Self {
        Self::from_placements(instance, Vec::new())
    }

    /// Builds a solution from its placements, deriving the unpacked counts and
    /// the objective. Placements naming an unknown class are kept as-is and
    /// left for [`validate`] to report.
    pub fn from_placements(instance: &Instance, placed: Vec<Placement>) -> Self {
        let mut unpacked: Vec<usize> = instance.classes().iter().map(|c| c.count).collect();
        for p in &placed {
            if let Some(slot) = unpacked.get_mut(p.class_index) {
                *slot = slot.saturating_sub(1);
            }
        }
        let objective = unpacked
            .iter()
            .zip(instance.classes())
            .map(|(&n, c)| n as Volume * c.volume())
            .sum();
        Self {
            placed,
            unpacked_counts: unpacked,
            objective,
        }
    }

    /// Number of items left out ("left boxes").
    pub fn left_boxes(&self) -> usize {
        self.unpacked_counts.iter().sum()
    }

    pub fn packed_volume(&self, instance: &Instance) -> Volume {
        self.placed
            .iter()
            .filter_map(|p| instance.classes().get(p.class_index))
            .map(ItemClass::volume)
            .sum()
    }

    /// Relabels items so that, within every class, the packed items take the
    /// lowest indices in increasing (z, y, x) position order. The result is
    /// the same packing in the form the item-symmetry rule admits.
    pub fn canonicalize(&self, instance: &Instance) -> Solution {
        let offsets = instance.class_offsets();
        let mut by_class: Vec<Vec<Placement>> = vec![Vec::new(); instance.num_classes()];
        for p in &self.placed {
            by_class[p.class_index].push(*p);
        }
        let mut placed = Vec::with_capacity(self.placed.len());
        for (k, mut group) in by_class.into_iter().enumerate() {
            group.sort_by_key(|p| lex_key(p.pos));
            for (n, mut p) in group.into_iter().enumerate() {
                p.item_index = offsets[k] + n;
                placed.push(p);
            }
        }
        Solution::from_placements(instance, placed)
    }
}

/// Ordering key used for position tie-breaking and item symmetry: height
/// first, then depth, then width.
pub fn lex_key(pos: Triple) -> (Length, Length, Length) {
    (pos[2], pos[1], pos[0])
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes_explored: u64,
    pub propagations: u64,
    pub solutions_found: u64,
    #[serde(with = "duration_secs")]
    pub wall_time: Duration,
    pub proved_optimal: bool,
}

mod duration_secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

pub fn box_volume(dims: Triple) -> Volume {
    dims.iter().map(|&d| d.max(0) as Volume).product()
}

/// Rotations that keep a vertically admissible dimension on axis 2, in
/// lexicographic permutation order.
pub fn allowed_rotations(class: &ItemClass) -> Vec<Rotation> {
    Rotation::ALL
        .into_iter()
        .filter(|r| class.vertical_ok[r.dim_on(VERTICAL)])
        .collect()
}

pub fn is_allowed(class: &ItemClass, rotation: Rotation) -> bool {
    class.vertical_ok[rotation.dim_on(VERTICAL)]
}

pub fn oriented_size(class: &ItemClass, rotation: Rotation) -> Triple {
    let d = class.dims;
    [d[rotation.dim_on(0)], d[rotation.dim_on(1)], d[rotation.dim_on(2)]]
}

/// Non-strict box intersection: boxes touching on a face do not overlap and a
/// box with a zero-length side overlaps nothing.
pub fn overlap(a: &Placement, b: &Placement, sizes_a: Triple, sizes_b: Triple) -> bool {
    boxes_overlap(a.pos, sizes_a, b.pos, sizes_b)
}

pub fn boxes_overlap(pos_a: Triple, size_a: Triple, pos_b: Triple, size_b: Triple) -> bool {
    if size_a.contains(&0) || size_b.contains(&0) {
        return false;
    }
    (0..3).all(|u| pos_a[u] + size_a[u] > pos_b[u] && pos_b[u] + size_b[u] > pos_a[u])
}

pub fn contains(container: &Container, pos: Triple, sizes: Triple) -> bool {
    let dims = container.dims();
    (0..3).all(|u| pos[u] >= 0 && pos[u] + sizes[u] <= dims[u])
}

/// Volume of the items left out of `solution`.
pub fn leftover_volume(instance: &Instance, solution: &Solution) -> Volume {
    solution
        .unpacked_counts
        .iter()
        .zip(instance.classes())
        .map(|(&n, c)| n as Volume * c.volume())
        .sum()
}

/// Packed volume over container volume, in `[0, 1]`.
pub fn volume_utilization(instance: &Instance, solution: &Solution) -> f64 {
    solution.packed_volume(instance) as f64 / instance.container().volume() as f64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownClass {
        item: usize,
        class: usize,
    },
    ItemOutOfRange {
        item: usize,
    },
    ClassMismatch {
        item: usize,
        class: usize,
        expected: usize,
    },
    DuplicateItem {
        item: usize,
    },
    IllegalRotation {
        item: usize,
        rotation: Rotation,
    },
    OutOfBounds {
        item: usize,
    },
    Overlap {
        a: usize,
        b: usize,
    },
    Cardinality {
        class: usize,
        placed: usize,
        unpacked: usize,
        count: usize,
    },
    UnpackedLength {
        found: usize,
        expected: usize,
    },
    Objective {
        stored: Volume,
        actual: Volume,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownClass { item, class } => {
                write!(f, "class: item {item} names unknown class {class}")
            }
            Violation::ItemOutOfRange { item } => write!(f, "item: index {item} out of range"),
            Violation::ClassMismatch { item, class, expected } => {
                write!(f, "class: item {item} labelled {class}, belongs to class {expected}")
            }
            Violation::DuplicateItem { item } => write!(f, "item: {item} placed more than once"),
            Violation::IllegalRotation { item, rotation } => {
                write!(
                    f,
                    "rotation: item {item} rotation {rotation} puts a non-vertical side upright"
                )
            }
            Violation::OutOfBounds { item } => {
                write!(f, "containment: item {item} exceeds the container")
            }
            Violation::Overlap { a, b } => write!(f, "non-overlap: items {a} and {b} intersect"),
            Violation::Cardinality {
                class,
                placed,
                unpacked,
                count,
            } => write!(
                f,
                "cardinality: class {class} has {placed} placed + {unpacked} unpacked, expected {count}"
            ),
            Violation::UnpackedLength { found, expected } => {
                write!(f, "cardinality: {found} unpacked counts for {expected} classes")
            }
            Violation::Objective { stored, actual } => {
                write!(f, "objective: stored {stored}, recomputed {actual}")
            }
        }
    }
}

/// Checks every packing constraint on a candidate solution. The result is
/// empty iff the solution is feasible and its objective is exact.
pub fn validate(instance: &Instance, solution: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let item_classes = instance.item_classes();
    let mut seen = vec![false; item_classes.len()];
    let mut sized: Vec<(usize, Placement, Triple)> = Vec::with_capacity(solution.placed.len());

    for p in &solution.placed {
        let Some(class) = instance.classes().get(p.class_index) else {
            out.push(Violation::UnknownClass {
                item: p.item_index,
                class: p.class_index,
            });
            continue;
        };
        match item_classes.get(p.item_index) {
            None => out.push(Violation::ItemOutOfRange { item: p.item_index }),
            Some(&expected) if expected != p.class_index => out.push(Violation::ClassMismatch {
                item: p.item_index,
                class: p.class_index,
                expected,
            }),
            Some(_) => {
                if std::mem::replace(&mut seen[p.item_index], true) {
                    out.push(Violation::DuplicateItem { item: p.item_index });
                }
            }
        }
        if !is_allowed(class, p.rotation) {
            out.push(Violation::IllegalRotation {
                item: p.item_index,
                rotation: p.rotation,
            });
        }
        let size = oriented_size(class, p.rotation);
        if !contains(instance.container(), p.pos, size) {
            out.push(Violation::OutOfBounds { item: p.item_index });
        }
        sized.push((p.item_index, *p, size));
    }

    for (n, (ia, a, sa)) in sized.iter().enumerate() {
        for (ib, b, sb) in &sized[n + 1..] {
            if overlap(a, b, *sa, *sb) {
                out.push(Violation::Overlap { a: *ia, b: *ib });
            }
        }
    }

    if solution.unpacked_counts.len() != instance.num_classes() {
        out.push(Violation::UnpackedLength {
            found: solution.unpacked_counts.len(),
            expected: instance.num_classes(),
        });
    } else {
        let mut placed = vec![0usize; instance.num_classes()];
        for p in &solution.placed {
            if p.class_index < placed.len() {
                placed[p.class_index] += 1;
            }
        }
        for (k, class) in instance.classes().iter().enumerate() {
            if placed[k] + solution.unpacked_counts[k] != class.count {
                out.push(Violation::Cardinality {
                    class: k,
                    placed: placed[k],
                    unpacked: solution.unpacked_counts[k],
                    count: class.count,
                });
            }
        }
        let actual = leftover_volume(instance, solution);
        if actual != solution.objective {
            out.push(Violation::Objective {
                stored: solution.objective,
                actual,
            });
        }
    }
    out
}
