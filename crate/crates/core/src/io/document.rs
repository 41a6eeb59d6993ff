//! JSON documents for instances and solutions.

use crate::model::{
    Accounting, Allocation, CostModel, DiskId, DiskSpec, DuplicateAssignment, FileId, FileSpec, Instance,
    ModelError, Phi, ProblemClass, RelocationMove, Stage, Trajectory, TrajectoryStage,
};
use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed document: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("invalid instance at `{path}`: {source}")]
    Invalid { path: String, source: ModelError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub files: Vec<FileSpec>,
    pub disks: Vec<DiskSpec>,
    pub stages: Vec<StageDocument>,
    #[serde(default)]
    pub cost_model: CostModel,
    #[serde(default = "default_unit_cost")]
    pub relocation_unit_cost: f64,
    pub problem_class: ProblemClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_digraphs: Option<serde_json::Value>,
}

fn default_unit_cost() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageDocument {
    pub index: u32,
    pub active_files: Vec<u32>,
    #[serde(default)]
    pub precedence: Vec<[u32; 2]>,
    #[serde(default)]
    pub concurrency: Vec<[u32; 2]>,
    #[serde(default)]
    pub phi: PhiDocument,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e3_override: Option<Vec<[u32; 2]>>,
}

/// `"uniform"` or a square matrix whose rows and columns follow
/// `active_files`.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PhiDocument {
    #[default]
    Uniform,
    Matrix(Vec<Vec<f64>>),
}

impl Serialize for PhiDocument {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PhiDocument::Uniform => s.serialize_str("uniform"),
            PhiDocument::Matrix(rows) => rows.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for PhiDocument {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Token(String),
            Matrix(Vec<Vec<f64>>),
        }
        match Raw::deserialize(d)? {
            Raw::Token(t) if t == "uniform" => Ok(PhiDocument::Uniform),
            Raw::Token(t) => Err(de::Error::custom(format!("unknown phi token `{t}`, expected \"uniform\" or a matrix"))),
            Raw::Matrix(m) => Ok(PhiDocument::Matrix(m)),
        }
    }
}

fn pairs(list: &[[u32; 2]]) -> BTreeSet<(FileId, FileId)> {
    list.iter().map(|&[a, b]| (FileId(a), FileId(b))).collect()
}

fn unpairs(set: &BTreeSet<(FileId, FileId)>) -> Vec<[u32; 2]> {
    set.iter().map(|&(a, b)| [a.0, b.0]).collect()
}

impl StageDocument {
    fn to_stage(&self, position: usize) -> Result<Stage, DocumentError> {
        let mut stage = Stage::new(self.index, self.active_files.iter().copied());
        stage.precedence = pairs(&self.precedence);
        stage.concurrency = pairs(&self.concurrency);
        stage.e3_override = self.e3_override.as_deref().map(pairs);
        if let PhiDocument::Matrix(rows) = &self.phi {
            let n = self.active_files.len();
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(DocumentError::Syntax(de::Error::custom(format!(
                    "stages[{position}].phi: expected a {n}x{n} matrix over active_files"
                ))));
            }
            let mut entries = BTreeMap::new();
            for (i, row) in rows.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    entries.insert((FileId(self.active_files[i]), FileId(self.active_files[j])), v);
                }
            }
            stage.phi = Phi::Explicit(entries);
        }
        Ok(stage)
    }

    fn from_stage(stage: &Stage) -> Self {
        let active: Vec<u32> = stage.active_files.iter().map(|f| f.0).collect();
        let phi = match &stage.phi {
            Phi::Uniform => PhiDocument::Uniform,
            Phi::Explicit(entries) => PhiDocument::Matrix(
                active
                    .iter()
                    .map(|&a| {
                        active
                            .iter()
                            .map(|&b| entries.get(&(FileId(a), FileId(b))).copied().unwrap_or(0.0))
                            .collect()
                    })
                    .collect(),
            ),
        };
        StageDocument {
            index: stage.index,
            active_files: active,
            precedence: unpairs(&stage.precedence),
            concurrency: unpairs(&stage.concurrency),
            phi,
            e3_override: stage.e3_override.as_ref().map(unpairs),
        }
    }
}

impl InstanceDocument {
    /// Converts and validates.
    pub fn to_instance(&self) -> Result<Instance, DocumentError> {
        let stages = self
            .stages
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_stage(i))
            .collect::<Result<Vec<_>, _>>()?;
        let raw = Instance {
            files: self.files.clone(),
            disks: self.disks.clone(),
            stages,
            cost_model: self.cost_model,
            relocation_unit_cost: self.relocation_unit_cost,
            problem_class: self.problem_class,
            task_digraphs: self.task_digraphs.clone(),
        };
        raw.validate().map_err(|source| DocumentError::Invalid {
            path: self.error_path(&source),
            source,
        })
    }

    pub fn from_instance(instance: &Instance) -> Self {
        InstanceDocument {
            files: instance.files.clone(),
            disks: instance.disks.clone(),
            stages: instance.stages.iter().map(StageDocument::from_stage).collect(),
            cost_model: instance.cost_model,
            relocation_unit_cost: instance.relocation_unit_cost,
            problem_class: instance.problem_class,
            task_digraphs: instance.task_digraphs.clone(),
        }
    }

    fn stage_path(&self, index: u32) -> String {
        match self.stages.iter().position(|s| s.index == index) {
            Some(i) => format!("stages[{i}]"),
            None => "stages".to_string(),
        }
    }

    /// Field path in this document that a validation error refers to.
    fn error_path(&self, err: &ModelError) -> String {
        let file_pos = |f: FileId| self.files.iter().position(|s| s.id == f);
        let disk_pos = |d: DiskId| self.disks.iter().position(|s| s.id == d);
        match err {
            ModelError::DuplicateFile(_) | ModelError::GlobalCapacity { .. } => "files".into(),
            ModelError::ZeroSize(f) | ModelError::OversizedFile { file: f, .. } => match file_pos(*f) {
                Some(i) => format!("files[{i}].size"),
                None => "files".into(),
            },
            ModelError::DuplicateDisk(_) | ModelError::NoDisks => "disks".into(),
            ModelError::ZeroCapacity(d) => match disk_pos(*d) {
                Some(i) => format!("disks[{i}].capacity"),
                None => "disks".into(),
            },
            ModelError::NoStages => "stages".into(),
            ModelError::StageOrder { next, .. } => format!("{}.index", self.stage_path(*next)),
            ModelError::DanglingFile { stage, .. } => self.stage_path(*stage),
            ModelError::Reflexive { stage, relation, .. } => format!("{}.{relation}", self.stage_path(*stage)),
            ModelError::InvalidPhi { stage, .. } => format!("{}.phi", self.stage_path(*stage)),
            ModelError::StageCapacity { stage, .. } => format!("{}.active_files", self.stage_path(*stage)),
            ModelError::UnsupportedClass { .. } => "problem_class".into(),
            ModelError::GammaMismatch { .. } => "problem_class.gamma".into(),
            ModelError::UnitCost(_) => "relocation_unit_cost".into(),
        }
    }
}

pub fn parse_instance_str(text: &str) -> Result<Instance, DocumentError> {
    let doc: InstanceDocument = serde_json::from_str(text)?;
    doc.to_instance()
}

pub fn parse_instance(path: &Path) -> Result<Instance, DocumentError> {
    let text = std::fs::read_to_string(path).map_err(|source| DocumentError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_instance_str(&text)
}

pub fn emit_instance(instance: &Instance) -> String {
    let mut text = serde_json::to_string_pretty(&InstanceDocument::from_instance(instance)).expect("serializable");
    text.push('\n');
    text
}

/// File-to-disk placements in document order. Repeated files are kept so
/// that checks can report them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Placements(pub Vec<(FileId, DiskId)>);

impl Serialize for Placements {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter().map(|(f, d)| (f.0.to_string(), d.0)))
    }
}

impl<'de> Deserialize<'de> for Placements {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Placements;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from file id to disk id")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Placements, A::Error> {
                let mut out = Vec::new();
                while let Some((file, disk)) = map.next_entry::<String, u32>()? {
                    let file: u32 = file
                        .parse()
                        .map_err(|_| de::Error::custom(format!("file id `{file}` is not a positive integer")))?;
                    out.push((FileId(file), DiskId(disk)));
                }
                Ok(Placements(out))
            }
        }
        d.deserialize_map(V)
    }
}

impl From<&Allocation> for Placements {
    fn from(a: &Allocation) -> Self {
        Placements(a.assignment.iter().map(|(&f, &d)| (f, d)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSolution {
    pub stage: u32,
    pub assignment: Placements,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering: Option<BTreeMap<DiskId, Vec<FileId>>>,
    pub objective: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degraded: Option<bool>,
}

impl StageSolution {
    pub fn allocation(&self) -> Result<Allocation, DuplicateAssignment> {
        let mut alloc = Allocation::try_from_pairs(&self.assignment.0)?;
        alloc.ordering = self.ordering.clone();
        Ok(alloc)
    }

    pub fn plain(stage: u32, allocation: &Allocation, objective: f64) -> Self {
        StageSolution {
            stage,
            assignment: allocation.into(),
            ordering: allocation.ordering.clone(),
            objective,
            reference_objective: None,
            certified: None,
            rho: None,
            degraded: None,
        }
    }

    pub fn from_record(record: &TrajectoryStage) -> Self {
        StageSolution {
            reference_objective: Some(record.reference.value),
            certified: Some(record.reference.certified),
            rho: Some(record.proximity),
            degraded: Some(record.degraded),
            ..StageSolution::plain(record.index, &record.allocation, record.objective)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionSolution {
    pub from_stage: u32,
    pub to_stage: u32,
    pub accounting: Accounting,
    pub moves: Vec<RelocationMove>,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub stages: Vec<StageSolution>,
    #[serde(default)]
    pub transitions: Vec<TransitionSolution>,
    #[serde(default)]
    pub total_modification_cost: f64,
}

impl SolutionDocument {
    pub fn single(stage: StageSolution) -> Self {
        SolutionDocument {
            name: None,
            stages: vec![stage],
            transitions: Vec::new(),
            total_modification_cost: 0.0,
        }
    }

    pub fn from_trajectory(t: &Trajectory) -> Self {
        SolutionDocument {
            name: Some(t.name.clone()),
            stages: t.stages.iter().map(StageSolution::from_record).collect(),
            transitions: t
                .transitions
                .iter()
                .map(|tr| TransitionSolution {
                    from_stage: tr.from_stage,
                    to_stage: tr.to_stage,
                    accounting: tr.accounting,
                    moves: tr.plan.moves.clone(),
                    h: tr.plan.total_cost,
                })
                .collect(),
            total_modification_cost: t.total_modification_cost,
        }
    }

    /// The stage entry with the given index, or the only entry when `index`
    /// is `None`.
    pub fn stage(&self, index: Option<u32>) -> Option<&StageSolution> {
        match index {
            Some(j) => self.stages.iter().find(|s| s.stage == j),
            None if self.stages.len() == 1 => self.stages.first(),
            None => None,
        }
    }
}

pub fn parse_solution_str(text: &str) -> Result<SolutionDocument, DocumentError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_solution(path: &Path) -> Result<SolutionDocument, DocumentError> {
    let text = std::fs::read_to_string(path).map_err(|source| DocumentError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_solution_str(&text)
}

pub fn emit_solution(doc: &SolutionDocument) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("serializable");
    text.push('\n');
    text
}
