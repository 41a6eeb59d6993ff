//! Reconfiguration of allocations: relocation plans between allocations,
//! budget-constrained one-stage restructuring, and multistage trajectories.

mod matching;
mod trajectory;

pub use trajectory::{
    plan_trajectory, recorded_trajectories, RecordedTrajectories, StageSolver, TrajectoryOptions,
    TrajectoryStrategy,
};

use crate::allocator::{
    check_allocation_feasible, evaluate_objective, exact_solve, heuristic_solve, Evaluator, ExactOptions,
    SolveError, StageProblem, EPS,
};
use crate::model::{Allocation, DiskId, FileId, RelocationMove, RelocationPlan, ReferenceOptimum};
use crate::parallel::Parallelism;
use crate::search::{budgeted_space_size, Space};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Largest budgeted neighborhood the exact restructurer will enumerate.
pub const MAX_EXACT_NEIGHBORHOOD: u128 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RestructureError {
    #[error("allocations cover different files (only in source {only_from:?}, only in target {only_to:?})")]
    FileSetMismatch {
        only_from: Vec<FileId>,
        only_to: Vec<FileId>,
    },
    #[error("previous allocation infeasible for stage: {0}")]
    PreviousInfeasible(String),
    #[error("budget must be finite and non-negative, got {0}")]
    Budget(f64),
    #[error("exact restructuring would enumerate {0} allocations; use greedy mode")]
    TooLarge(u128),
    #[error("expected {expected} transition budgets, got {got}")]
    BudgetCount { expected: usize, got: usize },
    #[error("recorded replay is only available for the bundled worked example")]
    ReplayUnavailable,
    #[error(transparent)]
    Solve(#[from] SolveError),
}

fn check_same_files(from: &Allocation, to: &Allocation) -> Result<(), RestructureError> {
    let (a, b) = (from.files(), to.files());
    if a != b {
        return Err(RestructureError::FileSetMismatch {
            only_from: a.difference(&b).copied().collect(),
            only_to: b.difference(&a).copied().collect(),
        });
    }
    Ok(())
}

/// One move per file whose disk differs, ascending by file.
pub fn relocation_diff(
    from: &Allocation,
    to: &Allocation,
    unit_cost: f64,
) -> Result<RelocationPlan, RestructureError> {
    check_same_files(from, to)?;
    let moves = from
        .assignment
        .iter()
        .filter_map(|(&file, &src)| {
            let dst = to.assignment[&file];
            (src != dst).then_some(RelocationMove {
                file,
                from: src,
                to: dst,
            })
        })
        .collect();
    Ok(RelocationPlan::new(moves, unit_cost))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDiff {
    pub plan: RelocationPlan,
    /// Target disk label to the source label it is matched with.
    pub relabeling: BTreeMap<DiskId, DiskId>,
    /// Target allocation under the matched labels.
    pub relabeled: Allocation,
}

/// Relocation plan after renaming the target's disks to keep as many files
/// in place as possible. The plan length is the transfer distance between
/// the two partitions, independent of how either side labels its disks.
/// Among equally good renamings the lexicographically smallest relabeled
/// assignment wins. Capacities are not consulted.
pub fn aligned_relocation_diff(
    from: &Allocation,
    to: &Allocation,
    disks: &[DiskId],
    unit_cost: f64,
) -> Result<AlignedDiff, RestructureError> {
    check_same_files(from, to)?;
    let labels: Vec<DiskId> = disks
        .iter()
        .chain(from.assignment.values())
        .chain(to.assignment.values())
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<DiskId, usize> = labels.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let g = labels.len();
    // overlap[t][s]: files on target disk t that sit on source disk s.
    let mut overlap = vec![vec![0i64; g]; g];
    for (f, dt) in &to.assignment {
        overlap[index[dt]][index[&from.assignment[f]]] += 1;
    }
    let (best, _) = matching::max_weight_matching(&overlap);

    // Fix target disks in order of their smallest file, each to the lowest
    // source label that still admits an optimal completion.
    let mut order: Vec<usize> = (0..g).collect();
    let bins = to.bins();
    order.sort_by_key(|&t| (bins.get(&labels[t]).map(|b| b[0]).is_none(), bins.get(&labels[t]).map(|b| b[0]), t));
    let mut fixed: Vec<Option<usize>> = vec![None; g];
    let mut taken = vec![false; g];
    let mut fixed_sum = 0;
    for &t in &order {
        for s in 0..g {
            if taken[s] {
                continue;
            }
            fixed[t] = Some(s);
            taken[s] = true;
            let rows: Vec<usize> = (0..g).filter(|&r| fixed[r].is_none()).collect();
            let cols: Vec<usize> = (0..g).filter(|&c| !taken[c]).collect();
            let sub: Vec<Vec<i64>> = rows
                .iter()
                .map(|&r| cols.iter().map(|&c| overlap[r][c]).collect())
                .collect();
            let (rest, _) = matching::max_weight_matching(&sub);
            if fixed_sum + overlap[t][s] + rest == best {
                fixed_sum += overlap[t][s];
                break;
            }
            fixed[t] = None;
            taken[s] = false;
        }
    }
    let relabeling: BTreeMap<DiskId, DiskId> = (0..g)
        .map(|t| (labels[t], labels[fixed[t].expect("perfect matching exists")]))
        .collect();
    let relabeled = to.relabeled(&relabeling);
    let plan = relocation_diff(from, &relabeled, unit_cost)?;
    Ok(AlignedDiff {
        plan,
        relabeling,
        relabeled,
    })
}

/// Number of moves a budget pays for. A zero unit cost makes moves free.
pub fn move_allowance(budget: f64, unit_cost: f64, files: usize) -> usize {
    if unit_cost <= 0.0 {
        return files;
    }
    let moves = (budget / unit_cost + EPS).floor();
    if moves >= files as f64 {
        files
    } else {
        moves.max(0.0) as usize
    }
}

/// Reference optimum for a stage: certified by exhaustive search when the
/// stage has at most `cap` active files, otherwise the heuristic result.
pub fn reference_optimum(
    problem: &StageProblem,
    cap: usize,
    parallelism: Parallelism,
) -> Result<(ReferenceOptimum, Allocation), SolveError> {
    if problem.active().len() <= cap {
        let sol = exact_solve(problem, ExactOptions { cap, parallelism })?;
        Ok((
            ReferenceOptimum {
                value: sol.objective,
                certified: true,
            },
            sol.allocation,
        ))
    } else {
        let sol = heuristic_solve(problem, true)?;
        Ok((
            ReferenceOptimum {
                value: sol.objective,
                certified: false,
            },
            sol.allocation,
        ))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestructuringProblem {
    pub previous: Allocation,
    pub target: StageProblem,
    pub budget: f64,
    pub unit_cost: f64,
    pub reference: ReferenceOptimum,
}

impl RestructuringProblem {
    /// Builds the problem with a reference optimum from [`reference_optimum`].
    pub fn new(
        previous: Allocation,
        target: StageProblem,
        budget: f64,
        unit_cost: f64,
        exact_cap: usize,
        parallelism: Parallelism,
    ) -> Result<Self, RestructureError> {
        let (reference, _) = reference_optimum(&target, exact_cap, parallelism)?;
        Ok(RestructuringProblem {
            previous,
            target,
            budget,
            unit_cost,
            reference,
        })
    }

    pub fn allowance(&self) -> usize {
        move_allowance(self.budget, self.unit_cost, self.target.active().len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RestructureMode {
    #[default]
    Exact,
    Greedy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestructureOutcome {
    pub allocation: Allocation,
    pub objective: f64,
    /// Objective minus reference optimum, never negative.
    pub proximity: f64,
    pub plan: RelocationPlan,
    pub reference: ReferenceOptimum,
}

/// Modifies the previous allocation within the budget to get as close as
/// possible to the stage optimum. Exact mode enumerates every allocation
/// reachable within the move allowance and prefers smaller objective, then
/// fewer moves, then the lexicographically smaller assignment. Greedy mode
/// repeatedly applies the best improving move or swap that stays within the
/// allowance.
pub fn restructure_one_stage(
    problem: &RestructuringProblem,
    mode: RestructureMode,
    parallelism: Parallelism,
) -> Result<RestructureOutcome, RestructureError> {
    if !problem.budget.is_finite() || problem.budget < 0.0 {
        return Err(RestructureError::Budget(problem.budget));
    }
    let target = &problem.target;
    let report = check_allocation_feasible(&problem.previous, target);
    if !report.feasible() {
        let msg = report
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(RestructureError::PreviousInfeasible(msg));
    }
    let eval = Evaluator::new(target);
    let start = eval.encode(&problem.previous).expect("feasibility checked");
    let allowance = problem.allowance();

    let (assign, psi) = match mode {
        RestructureMode::Exact => {
            let size = budgeted_space_size(eval.n(), eval.gamma(), allowance);
            if size > MAX_EXACT_NEIGHBORHOOD {
                return Err(RestructureError::TooLarge(size));
            }
            let space = Space {
                eval: &eval,
                previous: Some((&start, allowance)),
                symmetry: false,
            };
            let found = space
                .solve(parallelism)
                .expect("the unmodified allocation is always within budget");
            (found.assign, found.psi)
        }
        RestructureMode::Greedy => greedy(&eval, &start, allowance),
    };

    let allocation = if assign == start {
        problem.previous.clone()
    } else {
        eval.decode(&assign)
    };
    let objective = evaluate_objective(&allocation, target)
        .map(|r| r.value)
        .unwrap_or(psi);
    let mut reference = problem.reference;
    if !reference.certified && objective < reference.value {
        reference.value = objective;
    }
    let proximity = (objective - reference.value).max(0.0);
    let plan = relocation_diff(&problem.previous, &allocation, problem.unit_cost)?;
    Ok(RestructureOutcome {
        allocation,
        objective,
        proximity,
        plan,
        reference,
    })
}

fn greedy(eval: &Evaluator, start: &[usize], allowance: usize) -> (Vec<usize>, f64) {
    let n = eval.n();
    let mut assign = start.to_vec();
    let mut loads = eval.loads(&assign);
    let mut current = eval.psi(&assign);
    let moved = |a: &[usize]| a.iter().zip(start).filter(|(x, y)| x != y).count();
    for _ in 0..(10 * n * n).max(1) {
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut consider = |candidate: Vec<usize>| {
            if moved(&candidate) > allowance {
                return;
            }
            let psi = eval.psi(&candidate);
            if psi < current - EPS && best.as_ref().is_none_or(|(b, _)| psi < *b - EPS) {
                best = Some((psi, candidate));
            }
        };
        for k in 0..n {
            for (d, load) in loads.iter().enumerate() {
                if d != assign[k] && load + eval.sizes[k] <= eval.capacities[d] {
                    let mut c = assign.clone();
                    c[k] = d;
                    consider(c);
                }
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let (da, db) = (assign[a], assign[b]);
                let (sa, sb) = (eval.sizes[a], eval.sizes[b]);
                if da != db
                    && loads[da] - sa + sb <= eval.capacities[da]
                    && loads[db] - sb + sa <= eval.capacities[db]
                {
                    let mut c = assign.clone();
                    c.swap(a, b);
                    consider(c);
                }
            }
        }
        match best {
            Some((psi, next)) => {
                assign = next;
                loads = eval.loads(&assign);
                current = psi;
            }
            None => break,
        }
    }
    (assign, current)
}
