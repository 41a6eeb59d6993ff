//! Plain-text reports. Numbers carry one decimal place.

use super::document::{SolutionDocument, StageSolution};
use crate::allocator::{evaluate_objective, StageProblem};
use crate::model::{DiskId, FileId, Instance, Pair};
use crate::relation::integrate_relations;
use std::collections::BTreeMap;
use std::fmt::Write;

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn stage_block(out: &mut String, stage: &StageSolution, instance: Option<&Instance>) {
    let _ = writeln!(out, "stage {}", stage.stage);
    let mut bins: BTreeMap<DiskId, Vec<FileId>> = BTreeMap::new();
    for &(f, d) in &stage.assignment.0 {
        bins.entry(d).or_default().push(f);
    }
    for (disk, mut files) in bins {
        files.sort();
        let _ = writeln!(out, "  disk {disk}: {}", join(files));
    }
    let _ = writeln!(out, "  psi {:.1}", stage.objective);
    let problem = instance.and_then(|i| StageProblem::from_instance(i, stage.stage).ok());
    let terms = match (problem, stage.allocation()) {
        (Some(p), Ok(alloc)) => evaluate_objective(&alloc, &p).ok().map(|r| r.terms),
        _ => None,
    };
    if let Some(terms) = terms {
        if terms.is_empty() {
            let _ = writeln!(out, "  pairs: none");
        } else {
            let listed = terms
                .iter()
                .map(|t| format!("({},{}) {:.1}", t.first, t.second, t.contribution()));
            let _ = writeln!(out, "  pairs: {}", listed.collect::<Vec<_>>().join(", "));
        }
    }
    if let Some(reference) = stage.reference_objective {
        let label = match stage.certified {
            Some(false) => "uncertified",
            _ => "certified",
        };
        let _ = writeln!(out, "  reference {reference:.1} ({label})");
    }
    if let Some(rho) = stage.rho {
        let _ = writeln!(out, "  rho {rho:.1}");
    }
    if stage.degraded == Some(true) {
        let _ = writeln!(out, "  degraded");
    }
}

/// Report for a solution document. Contributing objective pairs are listed
/// when the instance is supplied.
pub fn emit_report(doc: &SolutionDocument, instance: Option<&Instance>) -> String {
    let mut out = String::new();
    if let Some(name) = &doc.name {
        let _ = writeln!(out, "trajectory {name}");
    }
    for stage in &doc.stages {
        stage_block(&mut out, stage, instance);
    }
    for t in &doc.transitions {
        let accounting = match t.accounting {
            crate::model::Accounting::Labeled => "labeled",
            crate::model::Accounting::Aligned => "aligned",
        };
        let _ = writeln!(out, "transition {} -> {} ({accounting})", t.from_stage, t.to_stage);
        for m in &t.moves {
            let _ = writeln!(out, "  move file {}: disk {} -> disk {}", m.file, m.from, m.to);
        }
        let _ = writeln!(out, "  h {:.1}", t.h);
    }
    if !doc.transitions.is_empty() || doc.name.is_some() {
        let _ = writeln!(out, "total modification cost {:.1}", doc.total_modification_cost);
    }
    out
}

fn arcs(pairs: &std::collections::BTreeSet<Pair>, sep: &str) -> String {
    if pairs.is_empty() {
        return "none".into();
    }
    join(pairs.iter().map(|(a, b)| format!("{a}{sep}{b}")))
}

/// Precedence, concurrency and integrated relation of every stage.
pub fn relations_dump(instance: &Instance) -> String {
    let mut out = String::new();
    for stage in &instance.stages {
        let e3 = integrate_relations(stage);
        let _ = writeln!(out, "stage {}", stage.index);
        let _ = writeln!(out, "  E1: {}", arcs(&stage.precedence, "->"));
        let _ = writeln!(out, "  E2: {}", arcs(&stage.concurrency, "-"));
        let tag = if stage.e3_override.is_some() { " (given)" } else { "" };
        let _ = writeln!(out, "  E3{tag}: {}", arcs(&e3.edges, "-"));
    }
    out
}
