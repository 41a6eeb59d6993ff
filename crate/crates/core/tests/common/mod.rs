//! Brute-force reference implementations, written without the library's
//! search code.

#![allow(dead_code)]

use diskalloc::model::{Allocation, DiskId, FileId, Instance, Stage};
use std::collections::BTreeSet;

/// Symmetric closure of precedence and concurrency, or the given relation.
pub fn naive_e3(stage: &Stage) -> BTreeSet<(u32, u32)> {
    let mut out = BTreeSet::new();
    let pairs: Vec<(FileId, FileId)> = match &stage.e3_override {
        Some(e) => e.iter().copied().collect(),
        None => stage.precedence.iter().chain(stage.concurrency.iter()).copied().collect(),
    };
    for (a, b) in pairs {
        out.insert((a.0.min(b.0), a.0.max(b.0)));
    }
    out
}

/// A stage flattened to indices: files ascending, disks ascending.
pub struct Flat {
    pub files: Vec<u32>,
    pub sizes: Vec<u64>,
    pub disks: Vec<u32>,
    pub caps: Vec<u64>,
    pub edges: Vec<(usize, usize)>,
}

impl Flat {
    pub fn new(instance: &Instance, stage_index: u32) -> Flat {
        let stage = instance.stages.iter().find(|s| s.index == stage_index).unwrap();
        let files: Vec<u32> = stage.active_files.iter().map(|f| f.0).collect();
        let pos = |f: u32| files.iter().position(|&x| x == f).unwrap();
        let sizes = files
            .iter()
            .map(|&f| instance.files.iter().find(|s| s.id.0 == f).unwrap().size)
            .collect();
        let edges = naive_e3(stage).into_iter().map(|(a, b)| (pos(a), pos(b))).collect();
        Flat {
            sizes,
            disks: instance.disks.iter().map(|d| d.id.0).collect(),
            caps: instance.disks.iter().map(|d| d.capacity).collect(),
            edges,
            files,
        }
    }

    pub fn psi(&self, assign: &[usize]) -> f64 {
        self.edges.iter().filter(|&&(a, b)| assign[a] == assign[b]).count() as f64
    }

    pub fn feasible(&self, assign: &[usize]) -> bool {
        let mut load = vec![0; self.caps.len()];
        for (k, &d) in assign.iter().enumerate() {
            load[d] += self.sizes[k];
        }
        load.iter().zip(&self.caps).all(|(l, c)| l <= c)
    }

    /// Every assignment vector, lexicographic order.
    pub fn all(&self) -> Vec<Vec<usize>> {
        let n = self.files.len();
        let g = self.caps.len();
        let total = g.pow(n as u32);
        (0..total)
            .map(|mut code| {
                let mut v = vec![0; n];
                for k in (0..n).rev() {
                    v[k] = code % g;
                    code /= g;
                }
                v
            })
            .collect()
    }

    pub fn encode(&self, alloc: &Allocation) -> Vec<usize> {
        self.files
            .iter()
            .map(|&f| {
                let d = alloc.disk_of(FileId(f)).unwrap();
                self.disks.iter().position(|&x| x == d.0).unwrap()
            })
            .collect()
    }

    pub fn decode(&self, assign: &[usize]) -> Allocation {
        Allocation::new(
            self.files
                .iter()
                .zip(assign)
                .map(|(&f, &d)| (FileId(f), DiskId(self.disks[d])))
                .collect(),
        )
    }

    /// Minimum objective over all feasible assignments, first in lex order.
    pub fn optimum(&self) -> (f64, Vec<usize>) {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for a in self.all() {
            if !self.feasible(&a) {
                continue;
            }
            let p = self.psi(&a);
            if best.as_ref().is_none_or(|(b, _)| p < *b) {
                best = Some((p, a));
            }
        }
        best.unwrap()
    }

    /// Best assignment within `allowance` moves of `start`, by objective,
    /// then moves, then lex order.
    pub fn restructure(&self, start: &[usize], allowance: usize) -> (f64, usize, Vec<usize>) {
        let mut best: Option<(f64, usize, Vec<usize>)> = None;
        for a in self.all() {
            let moves = a.iter().zip(start).filter(|(x, y)| x != y).count();
            if moves > allowance || !self.feasible(&a) {
                continue;
            }
            let p = self.psi(&a);
            if best.as_ref().is_none_or(|(bp, bm, _)| p < *bp || (p == *bp && moves < *bm)) {
                best = Some((p, moves, a));
            }
        }
        best.unwrap()
    }
}

/// Connected components by repeated flooding.
pub fn naive_components(files: &[u32], edges: &BTreeSet<(u32, u32)>) -> Vec<Vec<u32>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &f in files {
        if seen.contains(&f) {
            continue;
        }
        let mut comp = BTreeSet::from([f]);
        loop {
            let grow: Vec<u32> = edges
                .iter()
                .filter_map(|&(a, b)| match (comp.contains(&a), comp.contains(&b)) {
                    (true, false) => Some(b),
                    (false, true) => Some(a),
                    _ => None,
                })
                .collect();
            if grow.is_empty() {
                break;
            }
            comp.extend(grow);
        }
        seen.extend(comp.iter().copied());
        out.push(comp.into_iter().collect());
    }
    out
}
