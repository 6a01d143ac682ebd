//! Discretised antipodal grasshopper problem on the sphere.
//!
//! The sphere is sampled by an icosahedral geodesic grid whose points come in
//! antipodal pairs. A colouring picks exactly one member of every pair. For a
//! jumping angle `theta`, the success probability of a colouring is the chance
//! that a grasshopper starting uniformly on the coloured set lands on it again
//! after a hop of central angle `theta`, with the exact hop replaced by a
//! smoothed 4-point cosine kernel of width tied to the grid resolution.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: geodesic grid, antipode pairing, hemisphere split, central angles.
//! * [`kernel`]: the smoothed delta kernel and the per-angle neighbour band index.
//! * [`objective`]: success probabilities with O(1) flip deltas.
//! * [`colouring`]: colourings, initialisations and the binarisation pass.
//! * [`solvers`]: greedy best-flip search and simulated annealing.
//! * [`formats`]: the `GRIDv1` and `COLv1` text formats.

pub mod colouring;
pub mod error;
pub mod formats;
pub mod grid;
pub mod kernel;
pub mod objective;
pub mod solvers;
mod sum;

pub use colouring::{binarize, Colouring, FractionalColouring};
pub use error::{Error, Result};
pub use grid::{build_grid, central_angle, Resolution, SphereGrid};
pub use kernel::{build_index, kernel_phi, KernelIndex};
pub use objective::{
    bell_correlation, hemisphere_reference, point_probability, total_probability, ObjectiveState,
};
pub use solvers::{
    default_schedule, greedy, multi_start, simulated_annealing, Algorithm, AnnealSchedule,
    RunRecord,
};
