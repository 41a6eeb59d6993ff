//! Multi-stage allocation of data files onto capacity-limited parallel disks.
//!
//! Each stage relates its active files by precedence and concurrency. Files
//! processed together should sit on different disks, since two related
//! files on one disk force head movement between them. The crate builds the
//! integrated relation, places files by community spreading, improves and
//! certifies allocations, and reconfigures an existing allocation for the
//! next stage under a relocation budget.

pub mod allocator;
pub mod experiment;
pub mod io;
pub mod model;
mod parallel;
pub mod relation;
pub mod restructuring;
mod search;

pub use allocator::{
    check_allocation_feasible, check_placements, evaluate_objective, exact_solve, heuristic_solve, local_search,
    spread_allocate, ExactOptions, SolveError, StageProblem,
};
pub use model::{Allocation, DiskId, FileId, Instance, RelocationPlan, Trajectory};
pub use parallel::Parallelism;
pub use relation::{detect_communities, integrate_relations, split_oversized_component, condense_files};
pub use restructuring::{
    aligned_relocation_diff, plan_trajectory, relocation_diff, restructure_one_stage, RestructureMode,
    RestructuringProblem, TrajectoryStrategy,
};
