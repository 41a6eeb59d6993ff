//! Head-movement objective.
//!
//! [`evaluate_objective`] is the reference evaluation and produces the list of
//! contributing pairs. [`Evaluator`] is the indexed form used inside search
//! loops; it assumes ascending-id order on each disk and is cross-checked
//! against the reference in tests.

use super::{SolveError, StageProblem};
use crate::model::{Allocation, CostModel, DiskId, FileId, Phi};
use std::collections::BTreeMap;

/// Tolerance for comparing objective values.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveTerm {
    pub first: FileId,
    pub second: FileId,
    pub disk: DiskId,
    /// Movement probability phi.
    pub weight: f64,
    /// Head-movement cost p.
    pub cost: f64,
}

impl ObjectiveTerm {
    pub fn contribution(&self) -> f64 {
        self.weight * self.cost
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObjectiveReport {
    pub value: f64,
    pub terms: Vec<ObjectiveTerm>,
}

fn midpoints(
    alloc: &Allocation,
    disk: DiskId,
    sizes: &BTreeMap<FileId, u64>,
) -> Result<BTreeMap<FileId, f64>, SolveError> {
    let seq = alloc
        .ordering
        .as_ref()
        .ok_or(SolveError::OrderingRequired)?
        .get(&disk)
        .cloned()
        .unwrap_or_default();
    let mut on_disk: Vec<FileId> = alloc
        .assignment
        .iter()
        .filter(|(_, &d)| d == disk)
        .map(|(&f, _)| f)
        .collect();
    let mut sorted_seq = seq.clone();
    sorted_seq.sort();
    on_disk.sort();
    if sorted_seq != on_disk {
        return Err(SolveError::InvalidOrdering(disk));
    }
    let mut offset = 0.0;
    let mut mids = BTreeMap::new();
    for f in seq {
        let size = sizes.get(&f).copied().unwrap_or(0) as f64;
        mids.insert(f, offset + size / 2.0);
        offset += size;
    }
    Ok(mids)
}

/// Objective of `alloc` on the problem's stage. With uniform phi each
/// same-disk joint-processing pair counts once; with explicit phi every
/// ordered same-disk pair contributes `phi * p`.
pub fn evaluate_objective(
    alloc: &Allocation,
    problem: &StageProblem,
) -> Result<ObjectiveReport, SolveError> {
    problem.check_coverage(alloc)?;
    let mut mids: BTreeMap<FileId, f64> = BTreeMap::new();
    if problem.cost_model == CostModel::OrderedDistance {
        let disks: std::collections::BTreeSet<DiskId> = alloc.assignment.values().copied().collect();
        for d in disks {
            mids.extend(midpoints(alloc, d, &problem.sizes)?);
        }
    }
    let cost = |a: FileId, b: FileId| match problem.cost_model {
        CostModel::Uniform => 1.0,
        CostModel::OrderedDistance => (mids[&a] - mids[&b]).abs(),
    };

    let mut terms = Vec::new();
    match &problem.stage.phi {
        Phi::Uniform => {
            for &(a, b) in &problem.relation.edges {
                let da = alloc.assignment[&a];
                if da == alloc.assignment[&b] {
                    terms.push(ObjectiveTerm {
                        first: a,
                        second: b,
                        disk: da,
                        weight: 1.0,
                        cost: cost(a, b),
                    });
                }
            }
        }
        Phi::Explicit(entries) => {
            for (&(a, b), &w) in entries {
                if a == b || w == 0.0 {
                    continue;
                }
                let (Some(&da), Some(&db)) = (alloc.assignment.get(&a), alloc.assignment.get(&b))
                else {
                    continue;
                };
                if da == db {
                    terms.push(ObjectiveTerm {
                        first: a,
                        second: b,
                        disk: da,
                        weight: w,
                        cost: cost(a, b),
                    });
                }
            }
        }
    }
    let value = terms.iter().map(ObjectiveTerm::contribution).fold(0.0, |acc, x| acc + x);
    Ok(ObjectiveReport { value, terms })
}

/// Dense view of a stage for repeated evaluation. Files and disks are
/// indexed in ascending id order.
#[derive(Debug, Clone)]
pub(crate) struct Evaluator {
    pub files: Vec<FileId>,
    pub disks: Vec<DiskId>,
    pub sizes: Vec<u64>,
    pub capacities: Vec<u64>,
    /// For file `k`, weighted partners `j < k`.
    pub lower: Vec<Vec<(usize, f64)>>,
    pub ordered: bool,
}

impl Evaluator {
    pub fn new(problem: &StageProblem) -> Self {
        let files: Vec<FileId> = problem.stage.active_files.iter().copied().collect();
        let index: BTreeMap<FileId, usize> =
            files.iter().enumerate().map(|(i, &f)| (f, i)).collect();
        let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        match &problem.stage.phi {
            Phi::Uniform => {
                for (a, b) in &problem.relation.edges {
                    if let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) {
                        weights.insert((i.min(j), i.max(j)), 1.0);
                    }
                }
            }
            Phi::Explicit(entries) => {
                for ((a, b), &w) in entries {
                    if let (Some(&i), Some(&j)) = (index.get(a), index.get(b)) {
                        if i != j && w != 0.0 {
                            *weights.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
                        }
                    }
                }
            }
        }
        let mut lower = vec![Vec::new(); files.len()];
        for ((i, j), w) in weights {
            lower[j].push((i, w));
        }
        Evaluator {
            sizes: files.iter().map(|f| problem.sizes[f]).collect(),
            files,
            disks: problem.disks.iter().map(|d| d.id).collect(),
            capacities: problem.disks.iter().map(|d| d.capacity).collect(),
            lower,
            ordered: problem.cost_model == CostModel::OrderedDistance,
        }
    }

    pub fn n(&self) -> usize {
        self.files.len()
    }

    pub fn gamma(&self) -> usize {
        self.disks.len()
    }

    /// Objective of a full assignment given as disk indices per file index.
    pub fn psi(&self, assign: &[usize]) -> f64 {
        let mut offsets = vec![0u64; self.gamma()];
        let mut mids = vec![0.0; self.n()];
        let mut total = 0.0;
        for k in 0..self.n() {
            let d = assign[k];
            mids[k] = offsets[d] as f64 + self.sizes[k] as f64 / 2.0;
            offsets[d] += self.sizes[k];
            total += self.delta(k, d, assign, &mids);
        }
        total
    }

    /// Contribution of pairs `(j, k)`, `j < k`, when `k` joins disk `d`.
    /// `mids[k]` must already be set in ordered mode.
    #[inline]
    pub fn delta(&self, k: usize, d: usize, assign: &[usize], mids: &[f64]) -> f64 {
        let mut sum = 0.0;
        for &(j, w) in &self.lower[k] {
            if assign[j] == d {
                sum += if self.ordered {
                    w * (mids[k] - mids[j]).abs()
                } else {
                    w
                };
            }
        }
        sum
    }

    pub fn loads(&self, assign: &[usize]) -> Vec<u64> {
        let mut loads = vec![0u64; self.gamma()];
        for (k, &d) in assign.iter().enumerate() {
            loads[d] += self.sizes[k];
        }
        loads
    }

    pub fn encode(&self, alloc: &Allocation) -> Option<Vec<usize>> {
        let disk_index: BTreeMap<DiskId, usize> =
            self.disks.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        self.files
            .iter()
            .map(|f| alloc.assignment.get(f).and_then(|d| disk_index.get(d).copied()))
            .collect()
    }

    pub fn decode(&self, assign: &[usize]) -> Allocation {
        let alloc = Allocation::new(
            self.files
                .iter()
                .zip(assign)
                .map(|(&f, &d)| (f, self.disks[d]))
                .collect(),
        );
        if self.ordered {
            alloc.with_default_ordering()
        } else {
            alloc
        }
    }
}
