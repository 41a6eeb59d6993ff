//! Exhaustive depth-first enumeration of assignments shared by the exact
//! solver and exact restructuring.
//!
//! Files are assigned in ascending index order and disks are tried in
//! ascending index order, so leaves are visited in lexicographic order of the
//! assignment vector. The search returns the lexicographically first
//! assignment minimizing `(objective, moves)`. Work is split into ordered
//! prefixes that can be explored concurrently; the reduction keeps the
//! earliest prefix among equal keys, so the answer does not depend on the
//! execution mode.

use crate::allocator::{Evaluator, EPS};
use crate::parallel::{map_ordered, Parallelism};
use std::sync::atomic::{AtomicU64, Ordering};

/// Prefixes generated before fanning out.
const TARGET_PREFIXES: usize = 256;

#[derive(Debug, Clone)]
pub(crate) struct Space<'a> {
    pub eval: &'a Evaluator,
    /// Budgeted mode: the starting assignment and the move allowance.
    pub previous: Option<(&'a [usize], usize)>,
    /// Only try the first of several empty disks of equal capacity.
    pub symmetry: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Found {
    pub assign: Vec<usize>,
    pub psi: f64,
    pub moves: usize,
    pub nodes: u64,
}

#[derive(Debug, Clone)]
struct Node {
    depth: usize,
    assign: Vec<usize>,
    loads: Vec<u64>,
    mids: Vec<f64>,
    psi: f64,
    moves: usize,
}

fn better(psi: f64, moves: usize, than: &Found) -> bool {
    psi < than.psi - EPS || (psi <= than.psi + EPS && moves < than.moves)
}

impl Space<'_> {
    fn root(&self) -> Node {
        let n = self.eval.n();
        Node {
            depth: 0,
            assign: vec![usize::MAX; n],
            loads: vec![0; self.eval.gamma()],
            mids: vec![0.0; n],
            psi: 0.0,
            moves: 0,
        }
    }

    /// Disks file `node.depth` may take, ascending.
    fn choices(&self, node: &Node) -> Vec<usize> {
        let k = node.depth;
        let eval = self.eval;
        (0..eval.gamma())
            .filter(|&d| node.loads[d] + eval.sizes[k] <= eval.capacities[d])
            .filter(|&d| match self.previous {
                Some((prev, allowance)) => d == prev[k] || node.moves < allowance,
                None => true,
            })
            .filter(|&d| {
                !self.symmetry
                    || node.loads[d] != 0
                    || !(0..d).any(|e| node.loads[e] == 0 && eval.capacities[e] == eval.capacities[d])
            })
            .collect()
    }

    fn push(&self, node: &mut Node, d: usize) -> (f64, usize) {
        let k = node.depth;
        let saved = (node.psi, node.moves);
        node.assign[k] = d;
        node.mids[k] = node.loads[d] as f64 + self.eval.sizes[k] as f64 / 2.0;
        node.loads[d] += self.eval.sizes[k];
        node.psi += self.eval.delta(k, d, &node.assign, &node.mids);
        if let Some((prev, _)) = self.previous {
            if prev[k] != d {
                node.moves += 1;
            }
        }
        node.depth += 1;
        saved
    }

    fn pop(&self, node: &mut Node, saved: (f64, usize)) {
        node.depth -= 1;
        let k = node.depth;
        let d = node.assign[k];
        node.loads[d] -= self.eval.sizes[k];
        node.assign[k] = usize::MAX;
        (node.psi, node.moves) = saved;
    }

    fn prefixes(&self) -> Vec<Node> {
        let mut frontier = vec![self.root()];
        let n = self.eval.n();
        let mut depth = 0;
        while depth < n && frontier.len() < TARGET_PREFIXES {
            let mut next = Vec::new();
            for node in &frontier {
                for d in self.choices(node) {
                    let mut child = node.clone();
                    self.push(&mut child, d);
                    next.push(child);
                }
            }
            frontier = next;
            depth += 1;
        }
        frontier
    }

    fn dfs(&self, node: &mut Node, best: &mut Option<Found>, shared: &AtomicU64, nodes: &mut u64) {
        *nodes += 1;
        if node.psi > f64::from_bits(shared.load(Ordering::Relaxed)) + EPS {
            return;
        }
        if let Some(b) = best.as_ref() {
            if node.psi > b.psi + EPS || (node.psi >= b.psi - EPS && node.moves >= b.moves) {
                return;
            }
        }
        if node.depth == self.eval.n() {
            if best.as_ref().is_none_or(|b| better(node.psi, node.moves, b)) {
                *best = Some(Found {
                    assign: node.assign.clone(),
                    psi: node.psi,
                    moves: node.moves,
                    nodes: 0,
                });
                shared.fetch_min(node.psi.to_bits(), Ordering::Relaxed);
            }
            return;
        }
        for d in self.choices(node) {
            let saved = self.push(node, d);
            self.dfs(node, best, shared, nodes);
            self.pop(node, saved);
        }
    }

    /// Lexicographically first assignment minimizing `(psi, moves)`, or
    /// `None` when no capacity-feasible assignment exists.
    pub fn solve(&self, mode: Parallelism) -> Option<Found> {
        let prefixes = self.prefixes();
        // Non-negative f64 values order like their bit patterns.
        let shared = AtomicU64::new(f64::INFINITY.to_bits());
        let results = map_ordered(&prefixes, mode, |prefix| {
            let mut node = prefix.clone();
            let mut best = None;
            let mut nodes = 0;
            self.dfs(&mut node, &mut best, &shared, &mut nodes);
            (best, nodes)
        });
        let mut overall: Option<Found> = None;
        let mut total_nodes = 0;
        for (found, nodes) in results {
            total_nodes += nodes;
            if let Some(f) = found {
                if overall.as_ref().is_none_or(|b| better(f.psi, f.moves, b)) {
                    overall = Some(f);
                }
            }
        }
        overall.map(|mut f| {
            f.nodes = total_nodes;
            f
        })
    }
}

/// Number of assignments within `allowance` moves of a start assignment:
/// `sum_{m <= allowance} C(n, m) (gamma - 1)^m`, saturating.
pub(crate) fn budgeted_space_size(n: usize, gamma: usize, allowance: usize) -> u128 {
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    let mut power: u128 = 1;
    for m in 0..=allowance.min(n) {
        if m > 0 {
            binom = binom.saturating_mul((n - m + 1) as u128) / m as u128;
            power = power.saturating_mul(gamma.saturating_sub(1) as u128);
        }
        total = total.saturating_add(binom.saturating_mul(power));
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budgeted_size_matches_direct_count() {
        // n = 8, gamma = 3, two moves: 1 + 8*2 + 28*4.
        assert_eq!(budgeted_space_size(8, 3, 2), 129);
        assert_eq!(budgeted_space_size(4, 3, 4), 81);
        assert_eq!(budgeted_space_size(5, 1, 3), 1);
    }
}
