//! Anytime exact solver for packing weakly heterogeneous boxes into a single
//! container with orthogonal rotations, minimizing the leftover payload
//! volume.
//!
//! The pieces:
//!
//! - [`model`]: instances, rotations, placements, solutions and validation.
//! - [`io`]: OR-Library `thpack` reader, solution JSON and progress CSV.
//! - [`propagate`]: interval domain store and the packing propagators.
//! - [`search`]: anytime branch-and-bound over the domain store.
//! - [`oracle`]: exhaustive reference solver for tiny instances.
//! - [`cli`]: the `run`, `check`, `summarize` and `bench` commands.
//!
//! ```
//! use std::time::Duration;
//! use slopp::{solve, Container, Instance, ItemClass, SearchConfig};
//!
//! let instance = Instance::new(
//!     "crate",
//!     Container::new([10, 6, 4])?,
//!     vec![ItemClass::new([5, 3, 2], [true, true, true], 12)],
//! )?;
//! let config = SearchConfig { time_limit: Duration::from_secs(5), ..SearchConfig::default() };
//! let (best, stats) = solve(&instance, &config, |inc| println!("{}", inc.solution.objective));
//! assert_eq!(best.objective, 120);
//! assert!(stats.proved_optimal);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod cli;
pub mod io;
pub mod model;
pub mod oracle;
pub mod propagate;
pub mod search;

pub use model::{Container, Instance, ItemClass, Placement, Rotation, Solution, SolveStats};
pub use search::{solve, SearchConfig};
