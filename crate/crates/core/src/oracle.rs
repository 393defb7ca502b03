//! Exhaustive reference solver for desk-size instances.
//!
//! Every subset of items, every legal rotation and every integer position is
//! tried, and each partial packing is checked against the constraints
//! directly. It shares nothing with the propagators or the search beyond the
//! instance types, so the two can be checked against each other.

use crate::model::{Instance, Length, Placement, Rotation, Solution, Triple, Volume};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_items: usize,
    pub max_axis: Length,
    /// Upper bound on the number of partial packings visited.
    pub max_nodes: u64,
}

impl Default for OracleLimits {
    fn default() -> Self {
        Self {
            max_items: 4,
            max_axis: 8,
            max_nodes: 500_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("{items} items exceed the oracle limit of {limit}")]
    TooManyItems { items: usize, limit: usize },
    #[error("container axis {axis} has length {length}, oracle limit is {limit}")]
    AxisTooLong { axis: usize, length: Length, limit: Length },
    #[error("search exceeded {limit} nodes")]
    NodeBudget { limit: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub objective: Volume,
    pub witness: Solution,
    pub nodes: u64,
}

struct Candidate {
    rotation: Rotation,
    pos: Triple,
    size: Triple,
}

struct Enumerator {
    item_class: Vec<usize>,
    volumes: Vec<Volume>,
    options: Vec<Vec<Candidate>>,
    limit: u64,
    nodes: u64,
    best: Volume,
    best_choice: Vec<Option<usize>>,
    choice: Vec<Option<usize>>,
}

fn separated(pa: Triple, sa: Triple, pb: Triple, sb: Triple) -> bool {
    // zero-length boxes are placeable anywhere
    if sa.iter().chain(sb.iter()).any(|&s| s == 0) {
        return true;
    }
    (0..3).any(|u| pa[u] + sa[u] <= pb[u] || pb[u] + sb[u] <= pa[u])
}

impl Enumerator {
    fn run(&mut self, item: usize, excluded: Volume) -> Result<(), OracleError> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(OracleError::NodeBudget { limit: self.limit });
        }
        if excluded >= self.best {
            return Ok(());
        }
        if item == self.item_class.len() {
            self.best = excluded;
            self.best_choice = self.choice.clone();
            return Ok(());
        }
        let k = self.item_class[item];
        // identical items: choose option indices in increasing order, and
        // once one copy is left out, leave out the later copies as well
        let prev = (item > 0 && self.item_class[item - 1] == k).then(|| self.choice[item - 1]);
        let start = match prev {
            Some(None) => None,
            Some(Some(o)) => Some(o + 1),
            None => Some(0),
        };
        if let Some(start) = start {
            for o in start..self.options[k].len() {
                let cand = &self.options[k][o];
                let clear = (0..item).all(|j| match self.choice[j] {
                    None => true,
                    Some(oj) => {
                        let other = &self.options[self.item_class[j]][oj];
                        separated(cand.pos, cand.size, other.pos, other.size)
                    }
                });
                if clear {
                    self.choice[item] = Some(o);
                    self.run(item + 1, excluded)?;
                    self.choice[item] = None;
                    if self.best == 0 {
                        return Ok(());
                    }
                }
            }
        }
        self.choice[item] = None;
        self.run(item + 1, excluded + self.volumes[item])
    }
}

/// Minimum leftover volume and one packing achieving it.
pub fn brute_force_optimal(instance: &Instance, limits: OracleLimits) -> Result<OracleResult, OracleError> {
    let n = instance.num_items();
    if n > limits.max_items {
        return Err(OracleError::TooManyItems {
            items: n,
            limit: limits.max_items,
        });
    }
    let dims = instance.container().dims();
    for (axis, &length) in dims.iter().enumerate() {
        if length > limits.max_axis {
            return Err(OracleError::AxisTooLong {
                axis,
                length,
                limit: limits.max_axis,
            });
        }
    }

    let options: Vec<Vec<Candidate>> = instance
        .classes()
        .iter()
        .map(|class| {
            let mut out = Vec::new();
            for rotation in Rotation::ALL {
                let perm = rotation.perm();
                if !class.vertical_ok[perm[2] as usize] {
                    continue;
                }
                let size: Triple = std::array::from_fn(|u| class.dims[perm[u] as usize]);
                if (0..3).any(|u| size[u] > dims[u]) {
                    continue;
                }
                for z in 0..=dims[2] - size[2] {
                    for y in 0..=dims[1] - size[1] {
                        for x in 0..=dims[0] - size[0] {
                            out.push(Candidate {
                                rotation,
                                pos: [x, y, z],
                                size,
                            });
                        }
                    }
                }
            }
            out
        })
        .collect();

    let item_class = instance.item_classes();
    let volumes = item_class
        .iter()
        .map(|&k| instance.class(k).dims.iter().map(|&d| d as Volume).product())
        .collect();
    let mut e = Enumerator {
        volumes,
        options,
        limit: limits.max_nodes,
        nodes: 0,
        best: Volume::MAX,
        best_choice: vec![None; n],
        choice: vec![None; n],
        item_class,
    };
    e.run(0, 0)?;

    let placed = e
        .best_choice
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            c.map(|o| {
                let k = e.item_class[i];
                let opt = &e.options[k][o];
                Placement {
                    item_index: i,
                    class_index: k,
                    rotation: opt.rotation,
                    pos: opt.pos,
                }
            })
        })
        .collect();
    Ok(OracleResult {
        objective: e.best,
        witness: Solution::from_placements(instance, placed),
        nodes: e.nodes,
    })
}
