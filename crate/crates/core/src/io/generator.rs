use super::document::{InstanceDocument, PhiDocument, StageDocument};
use crate::model::{CostModel, DiskId, DiskSpec, FileId, FileSpec, ProblemClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    pub n_files: u32,
    pub gamma: u32,
    pub n_stages: u32,
    /// Probability that a pair of files is related in a stage.
    pub edge_density: f64,
    /// Inclusive file size range.
    pub size_range: (u64, u64),
    /// Total capacity over total file size, at least 1.
    pub capacity_slack: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        GeneratorParams {
            n_files: 8,
            gamma: 3,
            n_stages: 3,
            edge_density: 0.25,
            size_range: (1, 1),
            capacity_slack: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerateError {
    #[error("{0} must be positive")]
    NotPositive(&'static str),
    #[error("edge density must lie in [0, 1], got {0}")]
    Density(f64),
    #[error("capacity slack must be at least 1.0, got {0}")]
    Slack(f64),
    #[error("size range [{0}, {1}] is empty or starts at zero")]
    SizeRange(u64, u64),
    #[error("infeasible: a file of size {size} exceeds the largest disk capacity {capacity}")]
    Infeasible { size: u64, capacity: u64 },
}

/// Random instance: every file is active in every stage, each unordered
/// pair is related with probability `edge_density`, as a concurrency edge or
/// as a precedence arc of random direction with equal odds. Total capacity
/// is `ceil(slack * total size)`, dealt to the disks one track at a time.
pub fn generate_instance(params: &GeneratorParams) -> Result<InstanceDocument, GenerateError> {
    let GeneratorParams {
        n_files,
        gamma,
        n_stages,
        edge_density,
        size_range: (lo, hi),
        capacity_slack,
        seed,
    } = *params;
    if n_files == 0 {
        return Err(GenerateError::NotPositive("n_files"));
    }
    if gamma == 0 {
        return Err(GenerateError::NotPositive("gamma"));
    }
    if n_stages == 0 {
        return Err(GenerateError::NotPositive("n_stages"));
    }
    if !(0.0..=1.0).contains(&edge_density) {
        return Err(GenerateError::Density(edge_density));
    }
    if !capacity_slack.is_finite() || capacity_slack < 1.0 {
        return Err(GenerateError::Slack(capacity_slack));
    }
    if lo == 0 || lo > hi {
        return Err(GenerateError::SizeRange(lo, hi));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let files: Vec<FileSpec> = (1..=n_files)
        .map(|i| FileSpec {
            id: FileId(i),
            size: rng.random_range(lo..=hi),
        })
        .collect();
    let total: u64 = files.iter().map(|f| f.size).sum();
    let capacity_total = (capacity_slack * total as f64 - 1e-9).ceil().max(total as f64) as u64;
    let (base, extra) = (capacity_total / gamma as u64, capacity_total % gamma as u64);
    let disks: Vec<DiskSpec> = (0..gamma as u64)
        .map(|i| DiskSpec {
            id: DiskId(i as u32 + 1),
            capacity: base + u64::from(i < extra),
        })
        .collect();
    let largest_file = files.iter().map(|f| f.size).max().unwrap_or(0);
    let largest_disk = disks.iter().map(|d| d.capacity).max().unwrap_or(0);
    if largest_file > largest_disk {
        return Err(GenerateError::Infeasible {
            size: largest_file,
            capacity: largest_disk,
        });
    }

    let stages = (1..=n_stages)
        .map(|index| {
            let mut precedence = Vec::new();
            let mut concurrency = Vec::new();
            for a in 1..=n_files {
                for b in a + 1..=n_files {
                    if !rng.random_bool(edge_density) {
                        continue;
                    }
                    if rng.random_bool(0.5) {
                        concurrency.push([a, b]);
                    } else if rng.random_bool(0.5) {
                        precedence.push([a, b]);
                    } else {
                        precedence.push([b, a]);
                    }
                }
            }
            precedence.sort_unstable();
            StageDocument {
                index,
                active_files: (1..=n_files).collect(),
                precedence,
                concurrency,
                phi: PhiDocument::Uniform,
                e3_override: None,
            }
        })
        .collect();

    Ok(InstanceDocument {
        files,
        disks,
        stages,
        cost_model: CostModel::Uniform,
        relocation_unit_cost: 1.0,
        problem_class: ProblemClass {
            alpha: 1,
            beta: 1,
            gamma,
        },
        task_digraphs: None,
    })
}
