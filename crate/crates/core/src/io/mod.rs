//! Documents, instance generation, reports and the bundled worked example.

pub mod document;
pub mod generator;
pub mod report;

pub use document::{
    emit_instance, emit_solution, parse_instance, parse_instance_str, parse_solution, parse_solution_str,
    DocumentError, InstanceDocument, PhiDocument, Placements, SolutionDocument, StageDocument, StageSolution,
    TransitionSolution,
};
pub use generator::{generate_instance, GenerateError, GeneratorParams};
pub use report::{emit_report, relations_dump};

use crate::model::Instance;

/// Text of the bundled eight-file, three-disk, three-stage example.
pub const WORKED_EXAMPLE_JSON: &str = include_str!("../../fixtures/worked_example.json");

/// The bundled example, validated.
pub fn worked_example() -> Instance {
    parse_instance_str(WORKED_EXAMPLE_JSON).expect("bundled example is valid")
}
