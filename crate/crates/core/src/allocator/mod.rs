//! Allocation of a stage's files onto disks: spread placement over
//! communities, objective evaluation, local search and the exhaustive
//! solver.

mod exact;
mod local_search;
mod objective;

pub use exact::{exact_solve, ExactOptions, ExactSolution, DEFAULT_EXACT_CAP};
pub use local_search::{local_search, LocalSearchOutcome};
pub use objective::{evaluate_objective, ObjectiveReport, ObjectiveTerm, EPS};
pub(crate) use objective::Evaluator;

use crate::model::{Allocation, CostModel, DiskId, DiskSpec, FileId, Instance, Stage};
use crate::relation::{detect_communities, integrate_relations, Community, Condensation, IntegratedRelation};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("no stage with index {0}")]
    UnknownStage(u32),
    #[error("allocation does not match the stage's active files (missing {missing:?}, unexpected {unexpected:?})")]
    Coverage {
        missing: Vec<FileId>,
        unexpected: Vec<FileId>,
    },
    #[error("allocation uses unknown disk {0}")]
    UnknownDisk(DiskId),
    #[error("ordered_distance cost model needs a per-disk ordering")]
    OrderingRequired,
    #[error("ordering of disk {0} is not a permutation of its files")]
    InvalidOrdering(DiskId),
    #[error("infeasible: file {file} fits on no disk")]
    Infeasible { file: FileId },
    #[error("allocation is infeasible for the stage: {0}")]
    InfeasibleInput(String),
    #[error("{files} active files exceed the exhaustive-search cap of {cap}; use the heuristic solver")]
    TooLarge { files: usize, cap: usize },
}

/// Everything a solver needs about one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageProblem {
    pub stage: Stage,
    /// Sizes of the active files.
    pub sizes: BTreeMap<FileId, u64>,
    pub disks: Vec<DiskSpec>,
    pub relation: IntegratedRelation,
    pub cost_model: CostModel,
}

impl StageProblem {
    pub fn new(stage: Stage, sizes: &BTreeMap<FileId, u64>, disks: &[DiskSpec], cost_model: CostModel) -> Self {
        let relation = integrate_relations(&stage);
        let sizes = stage
            .active_files
            .iter()
            .map(|f| (*f, sizes.get(f).copied().unwrap_or(0)))
            .collect();
        let mut disks = disks.to_vec();
        disks.sort_by_key(|d| d.id);
        StageProblem {
            stage,
            sizes,
            disks,
            relation,
            cost_model,
        }
    }

    pub fn from_instance(instance: &Instance, stage_index: u32) -> Result<Self, SolveError> {
        let stage = instance
            .stage(stage_index)
            .ok_or(SolveError::UnknownStage(stage_index))?;
        Ok(StageProblem::new(
            stage.clone(),
            &instance.sizes(),
            &instance.disks,
            instance.cost_model,
        ))
    }

    pub fn from_condensation(condensed: &Condensation, disks: &[DiskSpec], cost_model: CostModel) -> Self {
        StageProblem::new(condensed.stage.clone(), &condensed.sizes, disks, cost_model)
    }

    pub fn active(&self) -> &BTreeSet<FileId> {
        &self.stage.active_files
    }

    pub fn gamma(&self) -> usize {
        self.disks.len()
    }

    pub fn capacity(&self, disk: DiskId) -> Option<u64> {
        self.disks.iter().find(|d| d.id == disk).map(|d| d.capacity)
    }

    pub fn communities(&self) -> Vec<Community> {
        detect_communities(&self.relation, self.active(), self.gamma())
    }

    pub(crate) fn check_coverage(&self, alloc: &Allocation) -> Result<(), SolveError> {
        let files = alloc.files();
        if &files != self.active() {
            return Err(SolveError::Coverage {
                missing: self.active().difference(&files).copied().collect(),
                unexpected: files.difference(self.active()).copied().collect(),
            });
        }
        if let Some(d) = alloc
            .assignment
            .values()
            .find(|d| self.capacity(**d).is_none())
        {
            return Err(SolveError::UnknownDisk(*d));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("file {0} is active but unassigned")]
    Missing(FileId),
    #[error("file {0} is assigned but not active")]
    Unexpected(FileId),
    #[error("file {file} assigned to several disks {disks:?}")]
    Duplicate { file: FileId, disks: Vec<DiskId> },
    #[error("file {file} assigned to unknown disk {disk}")]
    UnknownDisk { file: FileId, disk: DiskId },
    #[error("disk {disk} holds {load} tracks but has capacity {capacity}")]
    OverCapacity { disk: DiskId, load: u64, capacity: u64 },
    #[error("ordering of disk {0} does not match its assigned files")]
    Ordering(DiskId),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks raw `(file, disk)` placements, which may assign a file twice.
pub fn check_placements(pairs: &[(FileId, DiskId)], problem: &StageProblem) -> FeasibilityReport {
    let mut violations = Vec::new();
    let mut by_file: BTreeMap<FileId, Vec<DiskId>> = BTreeMap::new();
    for &(f, d) in pairs {
        by_file.entry(f).or_default().push(d);
    }
    for f in problem.active() {
        if !by_file.contains_key(f) {
            violations.push(Violation::Missing(*f));
        }
    }
    let mut loads: BTreeMap<DiskId, u64> = BTreeMap::new();
    for (&f, disks) in &by_file {
        if !problem.active().contains(&f) {
            violations.push(Violation::Unexpected(f));
            continue;
        }
        if disks.len() > 1 {
            violations.push(Violation::Duplicate {
                file: f,
                disks: disks.clone(),
            });
        }
        for &d in disks {
            if problem.capacity(d).is_none() {
                violations.push(Violation::UnknownDisk { file: f, disk: d });
            } else {
                *loads.entry(d).or_insert(0) += problem.sizes[&f];
            }
        }
    }
    for (d, load) in loads {
        let capacity = problem.capacity(d).unwrap_or(0);
        if load > capacity {
            violations.push(Violation::OverCapacity {
                disk: d,
                load,
                capacity,
            });
        }
    }
    FeasibilityReport { violations }
}

/// Partition and per-disk capacity check, plus ordering consistency when an
/// ordering is attached.
pub fn check_allocation_feasible(alloc: &Allocation, problem: &StageProblem) -> FeasibilityReport {
    let mut pairs: Vec<(FileId, DiskId)> = alloc.assignment.iter().map(|(&f, &d)| (f, d)).collect();
    let mut ordering_issues = Vec::new();
    if let Some(ordering) = &alloc.ordering {
        for (&d, seq) in ordering {
            for &f in seq {
                match alloc.assignment.get(&f) {
                    Some(&assigned) if assigned == d => {}
                    // Listed on a second disk: surfaces as a duplicate.
                    Some(_) => pairs.push((f, d)),
                    None => ordering_issues.push(Violation::Ordering(d)),
                }
            }
        }
        for d in alloc.bins().keys() {
            let listed: BTreeSet<FileId> = ordering.get(d).into_iter().flatten().copied().collect();
            let assigned: BTreeSet<FileId> = alloc.bins()[d].iter().copied().collect();
            if listed != assigned && !ordering_issues.contains(&Violation::Ordering(*d)) {
                ordering_issues.push(Violation::Ordering(*d));
            }
        }
    }
    let mut report = check_placements(&pairs, problem);
    report.violations.extend(ordering_issues);
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadOutcome {
    pub allocation: Allocation,
    /// Some member had to share a disk with another member of its community.
    pub degraded: bool,
}

/// Places each community's members (ascending id) on distinct disks, picking
/// the disk with the largest residual capacity. Ties go to the file's disk in
/// `previous`, then to the lowest disk id. A member that fits on no unused
/// disk goes to the first disk with room and the result is flagged degraded.
pub fn spread_allocate(
    communities: &[Community],
    problem: &StageProblem,
    previous: Option<&Allocation>,
) -> Result<SpreadOutcome, SolveError> {
    let mut residual: BTreeMap<DiskId, u64> =
        problem.disks.iter().map(|d| (d.id, d.capacity)).collect();
    let mut assignment = BTreeMap::new();
    let mut degraded = false;
    for community in communities {
        let mut used: BTreeSet<DiskId> = BTreeSet::new();
        for &file in &community.members {
            let size = problem.sizes[&file];
            let preferred = previous.and_then(|p| p.disk_of(file));
            let spread_choice = residual
                .iter()
                .filter(|(d, &r)| !used.contains(*d) && r >= size)
                .max_by_key(|(&d, &r)| (r, Some(d) == preferred, std::cmp::Reverse(d)))
                .map(|(&d, _)| d);
            let disk = match spread_choice {
                Some(d) => d,
                None => {
                    degraded = true;
                    residual
                        .iter()
                        .find(|(_, &r)| r >= size)
                        .map(|(&d, _)| d)
                        .ok_or(SolveError::Infeasible { file })?
                }
            };
            *residual.get_mut(&disk).expect("known disk") -= size;
            used.insert(disk);
            assignment.insert(file, disk);
        }
    }
    let mut allocation = Allocation::new(assignment);
    if problem.cost_model == CostModel::OrderedDistance {
        allocation = allocation.with_default_ordering();
    }
    Ok(SpreadOutcome {
        allocation,
        degraded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicSolution {
    pub allocation: Allocation,
    pub objective: f64,
    pub degraded: bool,
    pub local_search: Option<LocalSearchOutcome>,
}

/// Communities, spread placement, then optionally local search.
pub fn heuristic_solve(problem: &StageProblem, improve: bool) -> Result<HeuristicSolution, SolveError> {
    let spread = spread_allocate(&problem.communities(), problem, None)?;
    if improve {
        let ls = local_search(&spread.allocation, problem, None)?;
        Ok(HeuristicSolution {
            allocation: ls.allocation.clone(),
            objective: ls.objective,
            degraded: spread.degraded,
            local_search: Some(ls),
        })
    } else {
        let objective = evaluate_objective(&spread.allocation, problem)?.value;
        Ok(HeuristicSolution {
            allocation: spread.allocation,
            objective,
            degraded: spread.degraded,
            local_search: None,
        })
    }
}
