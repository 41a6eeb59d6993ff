//! Seeded sweeps comparing the heuristic against the exhaustive oracle.

use crate::allocator::{exact_solve, heuristic_solve, ExactOptions, SolveError, StageProblem};
use crate::io::{generate_instance, GeneratorParams};
use crate::parallel::{map_ordered, Parallelism};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub stage: u32,
    pub heuristic: f64,
    pub oracle: f64,
}

/// Generates one instance per seed from `template` and solves every stage
/// both ways. Rows come back in seed order regardless of `parallelism`.
pub fn heuristic_gap_sweep(
    template: &GeneratorParams,
    seeds: &[u64],
    options: ExactOptions,
) -> Result<Vec<SweepRow>, SolveError> {
    let per_seed = map_ordered(seeds, options.parallelism, |&seed| -> Result<Vec<SweepRow>, SolveError> {
        let params = GeneratorParams {
            seed,
            ..template.clone()
        };
        let instance = generate_instance(&params)
            .ok()
            .and_then(|doc| doc.to_instance().ok())
            .ok_or_else(|| SolveError::InfeasibleInput(format!("generator rejected seed {seed}")))?;
        let inner = ExactOptions {
            parallelism: Parallelism::Sequential,
            ..options
        };
        instance
            .stages
            .iter()
            .map(|s| {
                let problem = StageProblem::from_instance(&instance, s.index)?;
                let heuristic = heuristic_solve(&problem, false)?.objective;
                let oracle = exact_solve(&problem, inner)?.objective;
                Ok(SweepRow {
                    seed,
                    stage: s.index,
                    heuristic,
                    oracle,
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in per_seed {
        rows.extend(r?);
    }
    Ok(rows)
}
