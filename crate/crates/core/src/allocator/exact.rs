use super::{Evaluator, SolveError, StageProblem};
use crate::model::Allocation;
use crate::parallel::Parallelism;
use crate::search::Space;

pub const DEFAULT_EXACT_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    /// Largest number of active files accepted.
    pub cap: usize,
    pub parallelism: Parallelism,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            cap: DEFAULT_EXACT_CAP,
            parallelism: Parallelism::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    pub allocation: Allocation,
    /// Certified minimum objective.
    pub objective: f64,
    pub nodes: u64,
}

/// Enumerates every capacity-feasible assignment and returns the one with
/// minimum objective; ties go to the lexicographically smallest assignment
/// (disk of file 1, then file 2, ...).
pub fn exact_solve(problem: &StageProblem, options: ExactOptions) -> Result<ExactSolution, SolveError> {
    let n = problem.active().len();
    if n > options.cap {
        return Err(SolveError::TooLarge {
            files: n,
            cap: options.cap,
        });
    }
    let eval = Evaluator::new(problem);
    let space = Space {
        eval: &eval,
        previous: None,
        symmetry: true,
    };
    let found = space.solve(options.parallelism).ok_or_else(|| SolveError::Infeasible {
        file: *problem.active().iter().next_back().expect("files exist when nothing fits"),
    })?;
    Ok(ExactSolution {
        allocation: eval.decode(&found.assign),
        objective: found.psi,
        nodes: found.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::evaluate_objective;
    use crate::model::{CostModel, DiskId, DiskSpec, FileId, Stage};

    fn problem(caps: &[u64], stage: Stage) -> StageProblem {
        let sizes = stage.active_files.iter().map(|f| (*f, 1)).collect();
        let disks: Vec<DiskSpec> = caps
            .iter()
            .enumerate()
            .map(|(i, &c)| DiskSpec { id: DiskId(i as u32 + 1), capacity: c })
            .collect();
        StageProblem::new(stage, &sizes, &disks, CostModel::Uniform)
    }

    #[test]
    fn capacity_forces_separation() {
        let p = problem(&[1, 1], Stage::new(1, 1..=2).with_concurrency(&[(1, 2)]));
        let sol = exact_solve(&p, ExactOptions::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert_ne!(sol.allocation.disk_of(FileId(1)), sol.allocation.disk_of(FileId(2)));
    }

    #[test]
    fn triangle_on_two_disks_costs_one() {
        let p = problem(&[3, 3], Stage::new(1, 1..=3).with_concurrency(&[(1, 2), (2, 3), (1, 3)]));
        let sol = exact_solve(&p, ExactOptions::default()).unwrap();
        assert_eq!(sol.objective, 1.0);
        // First optimal vector in lexicographic order is [1, 1, 2].
        assert_eq!(sol.allocation, Allocation::from_bins(&[(1, &[1, 2]), (2, &[3])]));
        assert_eq!(evaluate_objective(&sol.allocation, &p).unwrap().value, 1.0);
    }

    #[test]
    fn cap_rejects_large_stages() {
        let p = problem(&[20], Stage::new(1, 1..=13));
        assert_eq!(
            exact_solve(&p, ExactOptions::default()),
            Err(SolveError::TooLarge { files: 13, cap: 12 })
        );
    }

    #[test]
    fn empty_stage_solves_trivially() {
        let p = problem(&[1], Stage::new(1, []));
        let sol = exact_solve(&p, ExactOptions::default()).unwrap();
        assert!(sol.allocation.assignment.is_empty());
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn modes_agree() {
        let p = problem(
            &[3, 3, 2],
            Stage::new(1, 1..=8).with_concurrency(&[(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 1), (1, 5)]),
        );
        let seq = exact_solve(&p, ExactOptions { cap: 12, parallelism: Parallelism::Sequential }).unwrap();
        let par = exact_solve(&p, ExactOptions { cap: 12, parallelism: Parallelism::Parallel }).unwrap();
        assert_eq!(seq.allocation, par.allocation);
        assert_eq!(seq.objective, par.objective);
    }
}
