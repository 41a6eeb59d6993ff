use super::{
    aligned_relocation_diff, reference_optimum, relocation_diff, restructure_one_stage, RestructureError,
    RestructureMode, RestructuringProblem,
};
use crate::allocator::{
    evaluate_objective, exact_solve, heuristic_solve, ExactOptions, StageProblem, DEFAULT_EXACT_CAP,
};
use crate::model::{
    Accounting, Allocation, DiskId, FileId, Instance, ReferenceOptimum, RelocationMove, RelocationPlan, Trajectory,
    TrajectoryStage, Transition,
};
use crate::parallel::Parallelism;
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStrategy {
    /// Every stage solved from scratch.
    IndependentOptimal,
    /// First stage solved, later stages restructured from their predecessor.
    SequentialRestructured,
    /// The recorded restructured trajectory of the bundled worked example.
    Replay,
}

/// How a stage is solved from scratch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageSolver {
    /// Exhaustive search within the cap, heuristic above it.
    #[default]
    Auto,
    Exact,
    /// Spread placement followed by local search.
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryOptions {
    pub solver: StageSolver,
    pub restructure: RestructureMode,
    pub exact_cap: usize,
    pub parallelism: Parallelism,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            solver: StageSolver::Auto,
            restructure: RestructureMode::Exact,
            exact_cap: DEFAULT_EXACT_CAP,
            parallelism: Parallelism::default(),
        }
    }
}

struct Solved {
    allocation: Allocation,
    objective: f64,
    degraded: bool,
}

fn solve_fresh(problem: &StageProblem, options: &TrajectoryOptions) -> Result<Solved, RestructureError> {
    let exact = match options.solver {
        StageSolver::Exact => true,
        StageSolver::Heuristic => false,
        StageSolver::Auto => problem.active().len() <= options.exact_cap,
    };
    if exact {
        let sol = exact_solve(
            problem,
            ExactOptions {
                cap: options.exact_cap,
                parallelism: options.parallelism,
            },
        )?;
        Ok(Solved {
            allocation: sol.allocation,
            objective: sol.objective,
            degraded: false,
        })
    } else {
        let sol = heuristic_solve(problem, true)?;
        Ok(Solved {
            allocation: sol.allocation,
            objective: sol.objective,
            degraded: sol.degraded,
        })
    }
}

fn stage_record(
    index: u32,
    allocation: Allocation,
    objective: f64,
    mut reference: ReferenceOptimum,
    degraded: bool,
) -> TrajectoryStage {
    if !reference.certified && objective < reference.value {
        reference.value = objective;
    }
    TrajectoryStage {
        index,
        allocation,
        objective,
        proximity: (objective - reference.value).max(0.0),
        reference,
        degraded,
    }
}

/// Files present in both allocations.
fn common(a: &Allocation, b: &Allocation) -> BTreeSet<FileId> {
    a.files().intersection(&b.files()).copied().collect()
}

/// Places files entering the stage without charge: on their last-known disk
/// when it has room, otherwise on the disk with the largest residual capacity.
fn seed_entering(
    carried: &Allocation,
    problem: &StageProblem,
    last_known: &BTreeMap<FileId, DiskId>,
) -> Result<Allocation, RestructureError> {
    let mut residual: BTreeMap<DiskId, u64> = problem.disks.iter().map(|d| (d.id, d.capacity)).collect();
    for (f, d) in &carried.assignment {
        if let Some(r) = residual.get_mut(d) {
            *r = r.saturating_sub(problem.sizes[f]);
        }
    }
    let mut assignment = carried.assignment.clone();
    for &file in problem.active() {
        if assignment.contains_key(&file) {
            continue;
        }
        let size = problem.sizes[&file];
        let home = last_known
            .get(&file)
            .filter(|d| residual.get(d).is_some_and(|&r| r >= size))
            .copied();
        let disk = home
            .or_else(|| {
                residual
                    .iter()
                    .filter(|(_, &r)| r >= size)
                    .max_by_key(|(&d, &r)| (r, std::cmp::Reverse(d)))
                    .map(|(&d, _)| d)
            })
            .ok_or(crate::allocator::SolveError::Infeasible { file })?;
        *residual.get_mut(&disk).expect("known disk") -= size;
        assignment.insert(file, disk);
    }
    Ok(Allocation::new(assignment))
}

/// Plans a trajectory over every stage of the instance.
///
/// `budgets` holds one modification budget per transition and is read only
/// by the sequential strategy. Transitions between independently solved
/// stages use aligned accounting, since each solve picks its own disk
/// labels; restructured transitions use labeled accounting. Files outside a
/// stage keep their last disk and are never charged.
pub fn plan_trajectory(
    instance: &Instance,
    strategy: TrajectoryStrategy,
    budgets: &[f64],
    options: &TrajectoryOptions,
) -> Result<Trajectory, RestructureError> {
    match strategy {
        TrajectoryStrategy::IndependentOptimal => independent(instance, options),
        TrajectoryStrategy::SequentialRestructured => {
            let expected = instance.stages.len().saturating_sub(1);
            if budgets.len() != expected {
                return Err(RestructureError::BudgetCount {
                    expected,
                    got: budgets.len(),
                });
            }
            sequential(instance, budgets, options)
        }
        TrajectoryStrategy::Replay => Ok(recorded_trajectories(instance)?.restructured),
    }
}

fn independent(instance: &Instance, options: &TrajectoryOptions) -> Result<Trajectory, RestructureError> {
    let disks = instance.disk_ids();
    let mut stages: Vec<TrajectoryStage> = Vec::new();
    let mut transitions = Vec::new();
    for stage in &instance.stages {
        let problem = StageProblem::from_instance(instance, stage.index)?;
        let solved = solve_fresh(&problem, options)?;
        let (reference, _) = reference_optimum(&problem, options.exact_cap, options.parallelism)?;
        if let Some(prev) = stages.last() {
            let shared = common(&prev.allocation, &solved.allocation);
            let diff = aligned_relocation_diff(
                &prev.allocation.restricted_to(&shared),
                &solved.allocation.restricted_to(&shared),
                &disks,
                instance.relocation_unit_cost,
            )?;
            transitions.push(Transition {
                from_stage: prev.index,
                to_stage: stage.index,
                accounting: Accounting::Aligned,
                plan: diff.plan,
            });
        }
        stages.push(stage_record(
            stage.index,
            solved.allocation,
            solved.objective,
            reference,
            solved.degraded,
        ));
    }
    Ok(Trajectory::new("independent", stages, transitions))
}

fn sequential(instance: &Instance, budgets: &[f64], options: &TrajectoryOptions) -> Result<Trajectory, RestructureError> {
    let mut stages: Vec<TrajectoryStage> = Vec::new();
    let mut transitions = Vec::new();
    let mut last_known: BTreeMap<FileId, DiskId> = BTreeMap::new();
    for (j, stage) in instance.stages.iter().enumerate() {
        let problem = StageProblem::from_instance(instance, stage.index)?;
        let (reference, _) = reference_optimum(&problem, options.exact_cap, options.parallelism)?;
        let record = match stages.last() {
            None => {
                let solved = solve_fresh(&problem, options)?;
                stage_record(stage.index, solved.allocation, solved.objective, reference, solved.degraded)
            }
            Some(prev) => {
                let carried = prev.allocation.restricted_to(problem.active());
                let start = seed_entering(&carried, &problem, &last_known)?;
                let restructuring = RestructuringProblem {
                    previous: start.clone(),
                    target: problem,
                    budget: budgets[j - 1],
                    unit_cost: instance.relocation_unit_cost,
                    reference,
                };
                let out = restructure_one_stage(&restructuring, options.restructure, options.parallelism)?;
                let shared = common(&prev.allocation, &out.allocation);
                let plan = relocation_diff(
                    &prev.allocation.restricted_to(&shared),
                    &out.allocation.restricted_to(&shared),
                    instance.relocation_unit_cost,
                )?;
                transitions.push(Transition {
                    from_stage: prev.index,
                    to_stage: stage.index,
                    accounting: Accounting::Labeled,
                    plan,
                });
                stage_record(stage.index, out.allocation, out.objective, out.reference, false)
            }
        };
        last_known.extend(record.allocation.assignment.iter().map(|(&f, &d)| (f, d)));
        stages.push(record);
    }
    Ok(Trajectory::new("sequential", stages, transitions))
}

/// The two recorded trajectories of the bundled worked example.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordedTrajectories {
    /// Independently optimized stage solutions.
    pub optimal: Trajectory,
    /// Restructured solutions reached by the recorded moves.
    pub restructured: Trajectory,
}

const RECORDED_OPTIMAL: [&[(u32, &[u32])]; 3] = [
    &[(1, &[1, 4, 6]), (2, &[2, 5, 7]), (3, &[3, 8])],
    &[(1, &[1, 2, 7]), (2, &[3, 4, 8]), (3, &[5, 6])],
    &[(1, &[2, 3, 7]), (2, &[1, 5, 8]), (3, &[4, 6])],
];

/// Moves (file, from, to) applied to the first stage solution.
const RECORDED_MOVES: [&[(u32, u32, u32)]; 2] = [&[(1, 1, 2), (5, 2, 1)], &[(3, 3, 2), (2, 2, 3)]];

/// Replays the recorded trajectories. Only the bundled worked example has
/// them.
pub fn recorded_trajectories(instance: &Instance) -> Result<RecordedTrajectories, RestructureError> {
    if *instance != crate::io::worked_example() {
        return Err(RestructureError::ReplayUnavailable);
    }
    let unit = instance.relocation_unit_cost;
    let disks = instance.disk_ids();
    let references = instance
        .stages
        .iter()
        .map(|s| {
            let p = StageProblem::from_instance(instance, s.index)?;
            let (r, _) = reference_optimum(&p, DEFAULT_EXACT_CAP, Parallelism::default())?;
            Ok((p, r))
        })
        .collect::<Result<Vec<_>, RestructureError>>()?;

    let record = |i: usize, alloc: Allocation| -> Result<TrajectoryStage, RestructureError> {
        let (problem, reference) = &references[i];
        let objective = evaluate_objective(&alloc, problem)?.value;
        Ok(stage_record(problem.stage.index, alloc, objective, *reference, false))
    };

    let mut opt_stages = Vec::new();
    let mut opt_transitions = Vec::new();
    for (i, bins) in RECORDED_OPTIMAL.iter().enumerate() {
        let alloc = Allocation::from_bins(bins);
        if let Some(prev) = opt_stages.last() {
            let prev: &TrajectoryStage = prev;
            let diff = aligned_relocation_diff(&prev.allocation, &alloc, &disks, unit)?;
            opt_transitions.push(Transition {
                from_stage: prev.index,
                to_stage: references[i].0.stage.index,
                accounting: Accounting::Aligned,
                plan: diff.plan,
            });
        }
        opt_stages.push(record(i, alloc)?);
    }

    let mut restr_stages = vec![record(0, Allocation::from_bins(RECORDED_OPTIMAL[0]))?];
    let mut restr_transitions = Vec::new();
    for (i, moves) in RECORDED_MOVES.iter().enumerate() {
        let plan = RelocationPlan::new(
            moves
                .iter()
                .map(|&(f, from, to)| RelocationMove {
                    file: FileId(f),
                    from: DiskId(from),
                    to: DiskId(to),
                })
                .collect(),
            unit,
        );
        let prev = restr_stages.last().expect("first stage recorded");
        let next = plan
            .apply(&prev.allocation)
            .expect("recorded moves match the recorded allocations");
        restr_transitions.push(Transition {
            from_stage: prev.index,
            to_stage: references[i + 1].0.stage.index,
            accounting: Accounting::Labeled,
            plan,
        });
        restr_stages.push(record(i + 1, next)?);
    }

    Ok(RecordedTrajectories {
        optimal: Trajectory::new("recorded optimal", opt_stages, opt_transitions),
        restructured: Trajectory::new("recorded restructured", restr_stages, restr_transitions),
    })
}
