use super::{check_allocation_feasible, Evaluator, SolveError, StageProblem, EPS};
use crate::model::Allocation;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOutcome {
    pub allocation: Allocation,
    pub objective: f64,
    pub improvements: usize,
    /// Neighbors evaluated.
    pub scans: usize,
    pub cap_hit: bool,
}

/// First-improvement descent over single-file moves (files ascending, target
/// disks ascending) followed by pairwise swaps (pairs ascending). Stops at a
/// local optimum or after `cap` neighbor evaluations, default `10 n^2`.
pub fn local_search(
    alloc: &Allocation,
    problem: &StageProblem,
    cap: Option<usize>,
) -> Result<LocalSearchOutcome, SolveError> {
    let report = check_allocation_feasible(alloc, problem);
    if !report.feasible() {
        let msg = report
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(SolveError::InfeasibleInput(msg));
    }
    let eval = Evaluator::new(problem);
    let n = eval.n();
    let cap = cap.unwrap_or(10 * n * n);
    let mut assign = eval.encode(alloc).expect("coverage checked");
    let mut loads = eval.loads(&assign);
    let mut current = eval.psi(&assign);
    let mut scans = 0;
    let mut improvements = 0;
    let mut cap_hit = false;

    'descent: loop {
        // single-file moves
        for k in 0..n {
            let from = assign[k];
            for d in 0..eval.gamma() {
                if d == from || loads[d] + eval.sizes[k] > eval.capacities[d] {
                    continue;
                }
                if scans >= cap {
                    cap_hit = true;
                    break 'descent;
                }
                scans += 1;
                assign[k] = d;
                let psi = eval.psi(&assign);
                if psi < current - EPS {
                    loads[from] -= eval.sizes[k];
                    loads[d] += eval.sizes[k];
                    current = psi;
                    improvements += 1;
                    continue 'descent;
                }
                assign[k] = from;
            }
        }
        // swaps
        for a in 0..n {
            for b in a + 1..n {
                let (da, db) = (assign[a], assign[b]);
                if da == db {
                    continue;
                }
                let (sa, sb) = (eval.sizes[a], eval.sizes[b]);
                if loads[da] - sa + sb > eval.capacities[da] || loads[db] - sb + sa > eval.capacities[db] {
                    continue;
                }
                if scans >= cap {
                    cap_hit = true;
                    break 'descent;
                }
                scans += 1;
                assign.swap(a, b);
                let psi = eval.psi(&assign);
                if psi < current - EPS {
                    loads[da] = loads[da] - sa + sb;
                    loads[db] = loads[db] - sb + sa;
                    current = psi;
                    improvements += 1;
                    continue 'descent;
                }
                assign.swap(a, b);
            }
        }
        break;
    }

    // Keep the caller's allocation (and ordering) when nothing improved.
    let allocation = if improvements == 0 {
        alloc.clone()
    } else {
        eval.decode(&assign)
    };
    Ok(LocalSearchOutcome {
        objective: if improvements == 0 {
            super::evaluate_objective(alloc, problem).map(|r| r.value).unwrap_or(current)
        } else {
            current
        },
        allocation,
        improvements,
        scans,
        cap_hit,
    })
}
