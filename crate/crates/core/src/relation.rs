//! Integrated joint-processing relation, community detection and file
//! condensation.

use crate::model::{unordered, FileId, Pair, Phi, Stage};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Symmetric, irreflexive relation over a stage's active files.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntegratedRelation {
    /// Edges stored as `(min, max)`.
    pub edges: BTreeSet<Pair>,
}

impl IntegratedRelation {
    pub fn from_edges(edges: impl IntoIterator<Item = Pair>) -> Self {
        IntegratedRelation {
            edges: edges
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(a, b)| unordered(a, b))
                .collect(),
        }
    }

    pub fn contains(&self, a: FileId, b: FileId) -> bool {
        self.edges.contains(&unordered(a, b))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn adjacency(&self) -> BTreeMap<FileId, BTreeSet<FileId>> {
        let mut adj: BTreeMap<FileId, BTreeSet<FileId>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        }
        adj
    }
}

/// Symmetric closure of precedence and concurrency over the active files, or
/// the stage's override when one is supplied.
pub fn integrate_relations(stage: &Stage) -> IntegratedRelation {
    if let Some(edges) = &stage.e3_override {
        return IntegratedRelation::from_edges(edges.iter().copied());
    }
    let active = &stage.active_files;
    IntegratedRelation::from_edges(
        stage
            .precedence
            .iter()
            .chain(stage.concurrency.iter())
            .copied()
            .filter(|(a, b)| active.contains(a) && active.contains(b)),
    )
}

/// Group of interconnected files that should sit on distinct disks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Community {
    /// Ascending.
    pub members: Vec<FileId>,
}

impl Community {
    fn new(mut members: Vec<FileId>) -> Self {
        members.sort();
        Community { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

fn components(
    vertices: &BTreeSet<FileId>,
    adj: &BTreeMap<FileId, BTreeSet<FileId>>,
) -> Vec<BTreeSet<FileId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in vertices {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in adj.get(&v).into_iter().flatten() {
                if vertices.contains(&w) && seen.insert(w) {
                    comp.insert(w);
                    queue.push_back(w);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Connected components of the relation over `active`, each split to at most
/// `gamma` members, ordered by smallest member. Isolated files are
/// singletons.
pub fn detect_communities(
    rel: &IntegratedRelation,
    active: &BTreeSet<FileId>,
    gamma: usize,
) -> Vec<Community> {
    let gamma = gamma.max(1);
    let adj = rel.adjacency();
    let mut out = Vec::new();
    for comp in components(active, &adj) {
        if comp.len() <= gamma {
            out.push(Community::new(comp.into_iter().collect()));
        } else {
            out.extend(split_oversized_component(&comp, rel, gamma));
        }
    }
    out.sort_by_key(|c| c.members[0]);
    out
}

/// Splits a component into pieces of at most `gamma` files by min-degree
/// peeling: seed at the minimum-degree vertex, then grow along the frontier
/// preferring vertices with the most edges into the piece, then lower degree,
/// then lower id. Whatever remains is re-split by connectivity.
pub fn split_oversized_component(
    component: &BTreeSet<FileId>,
    rel: &IntegratedRelation,
    gamma: usize,
) -> Vec<Community> {
    let gamma = gamma.max(1);
    let adj = rel.adjacency();
    let empty = BTreeSet::new();
    let neighbors = |v: FileId| adj.get(&v).unwrap_or(&empty);

    let mut pieces = Vec::new();
    let mut work = vec![component.clone()];
    while let Some(part) = work.pop() {
        if part.len() <= gamma {
            pieces.push(Community::new(part.into_iter().collect()));
            continue;
        }
        let degree = |v: FileId| neighbors(v).iter().filter(|w| part.contains(w)).count();
        let seed = *part
            .iter()
            .min_by_key(|&&v| (degree(v), v))
            .expect("non-empty part");
        let mut piece = BTreeSet::from([seed]);
        while piece.len() < gamma {
            let frontier = part
                .iter()
                .copied()
                .filter(|v| !piece.contains(v))
                .filter(|v| neighbors(*v).iter().any(|w| piece.contains(w)));
            let next = frontier.min_by_key(|&v| {
                let inward = neighbors(v).iter().filter(|w| piece.contains(w)).count();
                (std::cmp::Reverse(inward), degree(v), v)
            });
            match next {
                Some(v) => {
                    piece.insert(v);
                }
                None => break,
            }
        }
        let rest: BTreeSet<FileId> = part.difference(&piece).copied().collect();
        pieces.push(Community::new(piece.into_iter().collect()));
        let mut rest_parts = components(&rest, &adj);
        // pop() takes from the back; keep ascending processing order.
        rest_parts.reverse();
        work.extend(rest_parts);
    }
    pieces.sort_by_key(|c| c.members[0]);
    pieces
}

/// A stage after merging small interconnected files.
#[derive(Debug, Clone, PartialEq)]
pub struct Condensation {
    pub stage: Stage,
    pub sizes: BTreeMap<FileId, u64>,
    /// Representative id to its original members, in layout order. Only
    /// merged nodes appear.
    pub merges: BTreeMap<FileId, Vec<FileId>>,
}

impl Condensation {
    /// Expands an allocation of the condensed stage back to original files.
    /// Members follow their representative's disk and stay contiguous in
    /// any ordering.
    pub fn expand(&self, alloc: &crate::model::Allocation) -> crate::model::Allocation {
        let members = |f: FileId| -> Vec<FileId> {
            self.merges.get(&f).cloned().unwrap_or_else(|| vec![f])
        };
        let assignment = alloc
            .assignment
            .iter()
            .flat_map(|(&f, &d)| members(f).into_iter().map(move |m| (m, d)))
            .collect();
        let ordering = alloc.ordering.as_ref().map(|o| {
            o.iter()
                .map(|(&d, seq)| (d, seq.iter().flat_map(|&f| members(f)).collect()))
                .collect()
        });
        crate::model::Allocation {
            assignment,
            ordering,
        }
    }
}

/// Repeatedly merges the adjacent pair with the smallest combined size not
/// exceeding `threshold` (ties by pair order). The merged node keeps the
/// smaller id and inherits relations, summed size and summed phi.
pub fn condense_files(
    stage: &Stage,
    sizes: &BTreeMap<FileId, u64>,
    threshold: u64,
) -> Condensation {
    let mut stage = stage.clone();
    let mut sizes: BTreeMap<FileId, u64> = stage
        .active_files
        .iter()
        .map(|f| (*f, sizes.get(f).copied().unwrap_or(0)))
        .collect();
    let mut merges: BTreeMap<FileId, Vec<FileId>> = BTreeMap::new();

    loop {
        let rel = integrate_relations(&stage);
        let best = rel
            .edges
            .iter()
            .map(|&(a, b)| (sizes[&a] + sizes[&b], a, b))
            .filter(|&(s, _, _)| s <= threshold)
            .min();
        let Some((combined, keep, gone)) = best else {
            break;
        };
        let rename = |f: FileId| if f == gone { keep } else { f };
        stage.active_files.remove(&gone);
        stage.precedence = stage
            .precedence
            .iter()
            .map(|&(a, b)| (rename(a), rename(b)))
            .filter(|(a, b)| a != b)
            .collect();
        stage.concurrency = stage
            .concurrency
            .iter()
            .map(|&(a, b)| unordered(rename(a), rename(b)))
            .filter(|(a, b)| a != b)
            .collect();
        if let Some(edges) = &stage.e3_override {
            stage.e3_override = Some(
                edges
                    .iter()
                    .map(|&(a, b)| unordered(rename(a), rename(b)))
                    .filter(|(a, b)| a != b)
                    .collect(),
            );
        }
        if let Phi::Explicit(entries) = &stage.phi {
            let mut merged: BTreeMap<Pair, f64> = BTreeMap::new();
            for (&(a, b), &v) in entries {
                let (a, b) = (rename(a), rename(b));
                if a != b {
                    *merged.entry((a, b)).or_insert(0.0) += v;
                }
            }
            stage.phi = Phi::Explicit(merged);
        }
        sizes.remove(&gone);
        sizes.insert(keep, combined);
        let mut group = merges.remove(&keep).unwrap_or_else(|| vec![keep]);
        group.extend(merges.remove(&gone).unwrap_or_else(|| vec![gone]));
        merges.insert(keep, group);
    }

    Condensation {
        stage,
        sizes,
        merges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<FileId> {
        v.iter().copied().map(FileId).collect()
    }

    fn rel(edges: &[(u32, u32)]) -> IntegratedRelation {
        IntegratedRelation::from_edges(edges.iter().map(|&(a, b)| (FileId(a), FileId(b))))
    }

    fn set(range: impl IntoIterator<Item = u32>) -> BTreeSet<FileId> {
        range.into_iter().map(FileId).collect()
    }

    #[test]
    fn empty_relations_give_empty_closure() {
        assert!(integrate_relations(&Stage::new(1, 1..=4)).is_empty());
    }

    #[test]
    fn closure_drops_inactive_endpoints() {
        let mut stage = Stage::new(1, 1..=3).with_precedence(&[(1, 2)]);
        stage.precedence.insert((FileId(2), FileId(9)));
        assert_eq!(integrate_relations(&stage), rel(&[(1, 2)]));
    }

    #[test]
    fn path_of_five_peels_from_lowest_end() {
        let r = rel(&[(1, 2), (2, 3), (3, 4), (4, 5)]);
        let pieces = split_oversized_component(&set(1..=5), &r, 3);
        assert_eq!(pieces, vec![Community::new(ids(&[1, 2, 3])), Community::new(ids(&[4, 5]))]);
    }

    #[test]
    fn small_clique_is_one_community() {
        let r = rel(&[(1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        let comms = detect_communities(&r, &set(1..=4), 4);
        assert_eq!(comms, vec![Community::new(ids(&[1, 2, 3, 4]))]);
    }

    #[test]
    fn six_cycle_splits_into_arcs() {
        let r = rel(&[(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1)]);
        let comms = detect_communities(&r, &set(1..=6), 3);
        assert_eq!(comms, vec![Community::new(ids(&[1, 2, 3])), Community::new(ids(&[4, 5, 6]))]);
    }

    #[test]
    fn star_split_keeps_sizes_bounded() {
        // Removing the hub's piece leaves isolated leaves.
        let r = rel(&[(1, 2), (1, 3), (1, 4), (1, 5), (1, 6)]);
        let comms = detect_communities(&r, &set(1..=6), 2);
        assert!(comms.iter().all(|c| c.len() <= 2));
        let covered: BTreeSet<FileId> = comms.iter().flat_map(|c| c.members.clone()).collect();
        assert_eq!(covered, set(1..=6));
    }

    #[test]
    fn condense_threshold_zero_is_identity() {
        let stage = Stage::new(1, 1..=3).with_concurrency(&[(1, 2)]);
        let sizes = (1..=3).map(|i| (FileId(i), 1)).collect();
        let c = condense_files(&stage, &sizes, 0);
        assert_eq!(c.stage, stage);
        assert!(c.merges.is_empty());
    }

    #[test]
    fn condense_merges_adjacent_pair() {
        let stage = Stage::new(1, 1..=4)
            .with_concurrency(&[(1, 2), (2, 3)])
            .with_precedence(&[(1, 4)]);
        let sizes = (1..=4).map(|i| (FileId(i), 1)).collect();
        let c = condense_files(&stage, &sizes, 2);
        assert_eq!(c.stage.active_files, set([1, 3, 4]));
        assert_eq!(c.sizes[&FileId(1)], 2);
        assert_eq!(c.merges[&FileId(1)], ids(&[1, 2]));
        // {1,2} inherits 4 from file 1 and 3 from file 2.
        let r = integrate_relations(&c.stage);
        assert_eq!(r, rel(&[(1, 3), (1, 4)]));
    }

    #[test]
    fn condense_without_edges_is_identity() {
        let stage = Stage::new(1, 1..=3);
        let sizes = (1..=3).map(|i| (FileId(i), 1)).collect();
        let c = condense_files(&stage, &sizes, 100);
        assert_eq!(c.stage, stage);
    }
}
