//! Domain types shared by every solver: files, disks, stages, instances,
//! allocations, relocation plans and trajectories.
//!
//! Every collection that could introduce an arbitrary choice is kept in
//! ascending identifier order (`BTreeMap`/`BTreeSet`), which gives the crate
//! its global tie-breaking rule: ascending `FileId`, then ascending `DiskId`.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FileId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiskId(pub u32);

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for DiskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A pair of files. Directed for precedence arcs, `(min, max)` for symmetric
/// relations.
pub type Pair = (FileId, FileId);

/// Normalizes a symmetric pair to `(min, max)`.
pub fn unordered(a: FileId, b: FileId) -> Pair {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileSpec {
    pub id: FileId,
    /// Required tracks.
    pub size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiskSpec {
    pub id: DiskId,
    /// Free tracks.
    pub capacity: u64,
}

/// Head-movement cost model between two files sharing a disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// Every same-disk move costs 1.0.
    #[default]
    Uniform,
    /// Files laid out contiguously in disk order; cost is the distance in
    /// tracks between file midpoints.
    OrderedDistance,
}

/// Movement probabilities between files of a stage.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Phi {
    /// Equal probabilities: every joint-processing pair weighs 1.0.
    #[default]
    Uniform,
    /// Ordered-pair probabilities; absent entries are zero.
    Explicit(BTreeMap<Pair, f64>),
}

/// One time stage: the files under processing and their relations.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub index: u32,
    pub active_files: BTreeSet<FileId>,
    /// Precedence arcs `from -> to`.
    pub precedence: BTreeSet<Pair>,
    /// Concurrency edges, stored as `(min, max)`.
    pub concurrency: BTreeSet<Pair>,
    pub phi: Phi,
    /// Integrated relation supplied directly, bypassing the closure of
    /// precedence and concurrency.
    pub e3_override: Option<BTreeSet<Pair>>,
}

impl Stage {
    pub fn new(index: u32, active: impl IntoIterator<Item = u32>) -> Self {
        Stage {
            index,
            active_files: active.into_iter().map(FileId).collect(),
            precedence: BTreeSet::new(),
            concurrency: BTreeSet::new(),
            phi: Phi::Uniform,
            e3_override: None,
        }
    }

    pub fn with_precedence(mut self, arcs: &[(u32, u32)]) -> Self {
        self.precedence
            .extend(arcs.iter().map(|&(a, b)| (FileId(a), FileId(b))));
        self
    }

    pub fn with_concurrency(mut self, edges: &[(u32, u32)]) -> Self {
        self.concurrency
            .extend(edges.iter().map(|&(a, b)| unordered(FileId(a), FileId(b))));
        self
    }

    pub fn with_e3_override(mut self, edges: &[(u32, u32)]) -> Self {
        self.e3_override = Some(
            edges
                .iter()
                .map(|&(a, b)| unordered(FileId(a), FileId(b)))
                .collect(),
        );
        self
    }

    pub fn with_phi(mut self, phi: Phi) -> Self {
        self.phi = phi;
        self
    }

    fn validate(&self) -> Result<(), ModelError> {
        let stage = self.index;
        let check_endpoint = |f: FileId| {
            if self.active_files.contains(&f) {
                Ok(())
            } else {
                Err(ModelError::DanglingFile { stage, file: f })
            }
        };
        let relations: [(&'static str, Box<dyn Iterator<Item = &Pair>>); 3] = [
            ("precedence", Box::new(self.precedence.iter())),
            ("concurrency", Box::new(self.concurrency.iter())),
            ("e3_override", Box::new(self.e3_override.iter().flatten())),
        ];
        for (relation, pairs) in relations {
            for &(a, b) in pairs {
                check_endpoint(a)?;
                check_endpoint(b)?;
                if a == b {
                    return Err(ModelError::Reflexive {
                        stage,
                        relation,
                        file: a,
                    });
                }
            }
        }
        if let Phi::Explicit(entries) = &self.phi {
            for (&(a, b), &value) in entries {
                check_endpoint(a)?;
                check_endpoint(b)?;
                if !value.is_finite() || value < 0.0 {
                    return Err(ModelError::InvalidPhi {
                        stage,
                        from: a,
                        to: b,
                        reason: "entries must be finite and non-negative",
                    });
                }
                if a == b && value != 0.0 {
                    return Err(ModelError::InvalidPhi {
                        stage,
                        from: a,
                        to: b,
                        reason: "diagonal must be zero",
                    });
                }
            }
        }
        Ok(())
    }

    fn canonicalize(&mut self) {
        let concurrency = std::mem::take(&mut self.concurrency);
        self.concurrency = concurrency
            .into_iter()
            .map(|(a, b)| unordered(a, b))
            .collect();
        if let Some(edges) = self.e3_override.take() {
            self.e3_override = Some(edges.into_iter().map(|(a, b)| unordered(a, b)).collect());
        }
        if let Phi::Explicit(entries) = &mut self.phi {
            entries.retain(|_, v| *v != 0.0);
        }
    }
}

/// Reads a signed precedence table: `1` at row `i1`, column `i2` is the arc
/// `i1 -> i2`; `-1` marks the mirrored cell of an arc and yields the same arc.
/// Diagonal cells are ignored. Rows and columns follow `files`.
pub fn precedence_from_table(files: &[u32], table: &[&[i8]]) -> BTreeSet<Pair> {
    let mut arcs = BTreeSet::new();
    for (r, row) in table.iter().enumerate() {
        for (c, &cell) in row.iter().enumerate() {
            if r == c {
                continue;
            }
            match cell {
                1 => arcs.insert((FileId(files[r]), FileId(files[c]))),
                -1 => arcs.insert((FileId(files[c]), FileId(files[r]))),
                _ => false,
            };
        }
    }
    arcs
}

/// Reads a symmetric 0/1 table into unordered edges.
pub fn edges_from_table(files: &[u32], table: &[&[i8]]) -> BTreeSet<Pair> {
    let mut edges = BTreeSet::new();
    for (r, row) in table.iter().enumerate() {
        for (c, &cell) in row.iter().enumerate() {
            if r != c && cell != 0 {
                edges.insert(unordered(FileId(files[r]), FileId(files[c])));
            }
        }
    }
    edges
}

/// Computer-hierarchy descriptor: processors, operation memories, disks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemClass {
    pub alpha: u32,
    pub beta: u32,
    pub gamma: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub files: Vec<FileSpec>,
    pub disks: Vec<DiskSpec>,
    pub stages: Vec<Stage>,
    pub cost_model: CostModel,
    pub relocation_unit_cost: f64,
    pub problem_class: ProblemClass,
    /// Carried through untouched.
    pub task_digraphs: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate file id {0}")]
    DuplicateFile(FileId),
    #[error("duplicate disk id {0}")]
    DuplicateDisk(DiskId),
    #[error("file {0} has zero size")]
    ZeroSize(FileId),
    #[error("disk {0} has zero capacity")]
    ZeroCapacity(DiskId),
    #[error("instance has no disks")]
    NoDisks,
    #[error("instance has no stages")]
    NoStages,
    #[error("stage indices must be strictly increasing ({previous} then {next})")]
    StageOrder { previous: u32, next: u32 },
    #[error("stage {stage}: dangling file id {file}")]
    DanglingFile { stage: u32, file: FileId },
    #[error("stage {stage}: irreflexive relation violated in {relation} at file {file}")]
    Reflexive {
        stage: u32,
        relation: &'static str,
        file: FileId,
    },
    #[error("stage {stage}: invalid phi entry ({from}, {to}): {reason}")]
    InvalidPhi {
        stage: u32,
        from: FileId,
        to: FileId,
        reason: &'static str,
    },
    #[error("global capacity exceeded: files need {required} tracks, disks offer {available}")]
    GlobalCapacity { required: u64, available: u64 },
    #[error("stage {stage}: active files need {required} tracks, disks offer {available}")]
    StageCapacity {
        stage: u32,
        required: u64,
        available: u64,
    },
    #[error("file {file} (size {size}) does not fit on any disk")]
    OversizedFile { file: FileId, size: u64 },
    #[error("unsupported problem class <{alpha}|{beta}|{gamma}>: only one processor and one memory are supported")]
    UnsupportedClass { alpha: u32, beta: u32, gamma: u32 },
    #[error("problem class gamma {gamma} does not match {disks} disks")]
    GammaMismatch { gamma: u32, disks: usize },
    #[error("relocation unit cost must be finite and non-negative, got {0}")]
    UnitCost(f64),
}

impl Instance {
    /// Checks every invariant and returns the canonical form (files and
    /// disks sorted by id). Idempotent.
    pub fn validate(mut self) -> Result<Instance, ModelError> {
        self.files.sort_by_key(|f| f.id);
        self.disks.sort_by_key(|d| d.id);
        for w in self.files.windows(2) {
            if w[0].id == w[1].id {
                return Err(ModelError::DuplicateFile(w[0].id));
            }
        }
        for w in self.disks.windows(2) {
            if w[0].id == w[1].id {
                return Err(ModelError::DuplicateDisk(w[0].id));
            }
        }
        if let Some(f) = self.files.iter().find(|f| f.size == 0) {
            return Err(ModelError::ZeroSize(f.id));
        }
        if let Some(d) = self.disks.iter().find(|d| d.capacity == 0) {
            return Err(ModelError::ZeroCapacity(d.id));
        }
        if self.disks.is_empty() {
            return Err(ModelError::NoDisks);
        }
        if self.stages.is_empty() {
            return Err(ModelError::NoStages);
        }
        let ProblemClass { alpha, beta, gamma } = self.problem_class;
        if alpha != 1 || beta != 1 {
            return Err(ModelError::UnsupportedClass { alpha, beta, gamma });
        }
        if gamma as usize != self.disks.len() {
            return Err(ModelError::GammaMismatch {
                gamma,
                disks: self.disks.len(),
            });
        }
        if !self.relocation_unit_cost.is_finite() || self.relocation_unit_cost < 0.0 {
            return Err(ModelError::UnitCost(self.relocation_unit_cost));
        }

        let available: u64 = self.disks.iter().map(|d| d.capacity).sum();
        let required: u64 = self.files.iter().map(|f| f.size).sum();
        if required > available {
            return Err(ModelError::GlobalCapacity {
                required,
                available,
            });
        }
        let largest = self.disks.iter().map(|d| d.capacity).max().unwrap_or(0);
        if let Some(f) = self.files.iter().find(|f| f.size > largest) {
            return Err(ModelError::OversizedFile {
                file: f.id,
                size: f.size,
            });
        }

        let sizes = self.sizes();
        for w in self.stages.windows(2) {
            if w[0].index >= w[1].index {
                return Err(ModelError::StageOrder {
                    previous: w[0].index,
                    next: w[1].index,
                });
            }
        }
        for stage in &mut self.stages {
            stage.canonicalize();
            if let Some(&f) = stage.active_files.iter().find(|f| !sizes.contains_key(f)) {
                return Err(ModelError::DanglingFile {
                    stage: stage.index,
                    file: f,
                });
            }
            stage.validate()?;
            let required: u64 = stage.active_files.iter().map(|f| sizes[f]).sum();
            if required > available {
                return Err(ModelError::StageCapacity {
                    stage: stage.index,
                    required,
                    available,
                });
            }
        }
        Ok(self)
    }

    pub fn sizes(&self) -> BTreeMap<FileId, u64> {
        self.files.iter().map(|f| (f.id, f.size)).collect()
    }

    pub fn stage(&self, index: u32) -> Option<&Stage> {
        self.stages.iter().find(|s| s.index == index)
    }

    pub fn gamma(&self) -> usize {
        self.disks.len()
    }

    pub fn disk_ids(&self) -> Vec<DiskId> {
        self.disks.iter().map(|d| d.id).collect()
    }
}

/// Placement of a stage's active files on disks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Allocation {
    pub assignment: BTreeMap<FileId, DiskId>,
    /// Optional linear order of the files on each disk.
    pub ordering: Option<BTreeMap<DiskId, Vec<FileId>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("file {file} assigned to both disk {first} and disk {second}")]
pub struct DuplicateAssignment {
    pub file: FileId,
    pub first: DiskId,
    pub second: DiskId,
}

impl Allocation {
    pub fn new(assignment: BTreeMap<FileId, DiskId>) -> Self {
        Allocation {
            assignment,
            ordering: None,
        }
    }

    /// Builds an allocation from `(disk, files)` groups.
    pub fn from_bins(bins: &[(u32, &[u32])]) -> Self {
        let assignment = bins
            .iter()
            .flat_map(|&(d, files)| files.iter().map(move |&f| (FileId(f), DiskId(d))))
            .collect();
        Allocation::new(assignment)
    }

    pub fn try_from_pairs(pairs: &[(FileId, DiskId)]) -> Result<Self, DuplicateAssignment> {
        let mut assignment = BTreeMap::new();
        for &(file, disk) in pairs {
            if let Some(first) = assignment.insert(file, disk) {
                return Err(DuplicateAssignment {
                    file,
                    first,
                    second: disk,
                });
            }
        }
        Ok(Allocation::new(assignment))
    }

    pub fn disk_of(&self, file: FileId) -> Option<DiskId> {
        self.assignment.get(&file).copied()
    }

    pub fn files(&self) -> BTreeSet<FileId> {
        self.assignment.keys().copied().collect()
    }

    /// Files per disk in ascending order. Only disks holding files appear.
    pub fn bins(&self) -> BTreeMap<DiskId, Vec<FileId>> {
        let mut bins: BTreeMap<DiskId, Vec<FileId>> = BTreeMap::new();
        for (&f, &d) in &self.assignment {
            bins.entry(d).or_default().push(f);
        }
        bins
    }

    pub fn loads(&self, sizes: &BTreeMap<FileId, u64>) -> BTreeMap<DiskId, u64> {
        let mut loads = BTreeMap::new();
        for (f, d) in &self.assignment {
            *loads.entry(*d).or_insert(0) += sizes.get(f).copied().unwrap_or(0);
        }
        loads
    }

    /// Per-disk sequence: the explicit ordering when present, else ascending
    /// file id.
    pub fn sequence(&self, disk: DiskId) -> Vec<FileId> {
        match self.ordering.as_ref().and_then(|o| o.get(&disk)) {
            Some(seq) => seq.clone(),
            None => self
                .assignment
                .iter()
                .filter(|(_, &d)| d == disk)
                .map(|(&f, _)| f)
                .collect(),
        }
    }

    /// Attaches ascending-id ordering on every occupied disk.
    pub fn with_default_ordering(mut self) -> Self {
        self.ordering = Some(self.bins());
        self
    }

    pub fn restricted_to(&self, files: &BTreeSet<FileId>) -> Allocation {
        let assignment = self
            .assignment
            .iter()
            .filter(|(f, _)| files.contains(f))
            .map(|(&f, &d)| (f, d))
            .collect();
        let ordering = self.ordering.as_ref().map(|o| {
            o.iter()
                .map(|(&d, seq)| {
                    let kept = seq.iter().copied().filter(|f| files.contains(f)).collect();
                    (d, kept)
                })
                .filter(|(_, seq): &(DiskId, Vec<FileId>)| !seq.is_empty())
                .collect()
        });
        Allocation {
            assignment,
            ordering,
        }
    }

    /// Same partition with disk labels renamed through `relabel`.
    pub fn relabeled(&self, relabel: &BTreeMap<DiskId, DiskId>) -> Allocation {
        let map = |d: DiskId| relabel.get(&d).copied().unwrap_or(d);
        Allocation {
            assignment: self.assignment.iter().map(|(&f, &d)| (f, map(d))).collect(),
            ordering: self
                .ordering
                .as_ref()
                .map(|o| o.iter().map(|(&d, seq)| (map(d), seq.clone())).collect()),
        }
    }

    /// Whether both allocations induce the same partition of files.
    pub fn same_partition(&self, other: &Allocation) -> bool {
        if self.files() != other.files() {
            return false;
        }
        let mut a: Vec<Vec<FileId>> = self.bins().into_values().collect();
        let mut b: Vec<Vec<FileId>> = other.bins().into_values().collect();
        a.sort();
        b.sort();
        a == b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelocationMove {
    pub file: FileId,
    pub from: DiskId,
    pub to: DiskId,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelocationPlan {
    pub moves: Vec<RelocationMove>,
    /// Modification cost h.
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("file {0} is not in the allocation")]
    UnknownFile(FileId),
    #[error("file {file} is on disk {actual}, plan expects disk {expected}")]
    WrongSource {
        file: FileId,
        expected: DiskId,
        actual: DiskId,
    },
    #[error("file {0} moves more than once")]
    RepeatedFile(FileId),
    #[error("file {0} moves onto its own disk")]
    NullMove(FileId),
}

impl RelocationPlan {
    pub fn new(moves: Vec<RelocationMove>, unit_cost: f64) -> Self {
        let total_cost = moves.len() as f64 * unit_cost;
        RelocationPlan { moves, total_cost }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// Applies the moves to `alloc`. Ordering is dropped because moved files
    /// have no defined position.
    pub fn apply(&self, alloc: &Allocation) -> Result<Allocation, PlanError> {
        let mut seen = BTreeSet::new();
        let mut assignment = alloc.assignment.clone();
        for mv in &self.moves {
            if !seen.insert(mv.file) {
                return Err(PlanError::RepeatedFile(mv.file));
            }
            if mv.from == mv.to {
                return Err(PlanError::NullMove(mv.file));
            }
            let slot = assignment
                .get_mut(&mv.file)
                .ok_or(PlanError::UnknownFile(mv.file))?;
            if *slot != mv.from {
                return Err(PlanError::WrongSource {
                    file: mv.file,
                    expected: mv.from,
                    actual: *slot,
                });
            }
            *slot = mv.to;
        }
        Ok(Allocation::new(assignment))
    }
}

/// Best known objective for a stage, used as the proximity baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub value: f64,
    /// True when the value comes from exhaustive enumeration.
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Accounting {
    /// Moves compare disk labels directly.
    Labeled,
    /// Disk labels of the target are first matched to the source to
    /// minimize moves.
    Aligned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStage {
    pub index: u32,
    pub allocation: Allocation,
    pub objective: f64,
    pub reference: ReferenceOptimum,
    /// Proximity rho: objective minus reference optimum.
    pub proximity: f64,
    pub degraded: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from_stage: u32,
    pub to_stage: u32,
    pub accounting: Accounting,
    pub plan: RelocationPlan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub name: String,
    pub stages: Vec<TrajectoryStage>,
    pub transitions: Vec<Transition>,
    pub total_modification_cost: f64,
}

impl Trajectory {
    pub fn new(name: impl Into<String>, stages: Vec<TrajectoryStage>, transitions: Vec<Transition>) -> Self {
        let total_modification_cost = transitions.iter().map(|t| t.plan.total_cost).fold(0.0, |acc, x| acc + x);
        Trajectory {
            name: name.into(),
            stages,
            transitions,
            total_modification_cost,
        }
    }
}
