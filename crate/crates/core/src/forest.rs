//! Randomized hierarchical clustering trees over class signatures, and
//! the budgeted best-first search that turns them into a reduced search
//! space for Bernoulli-model detection.
//!
//! Construction: each tree picks `J` random member signatures as pivots,
//! assigns every member to its Hamming-nearest pivot (lowest pivot
//! position on ties), and recurses per nonempty cluster until fewer than
//! `J` members remain, which form a leaf. `W` such trees are built over
//! the identical signature set with independent randomness.
//!
//! Search: a query descends every tree greedily (always into the child
//! with the nearest pivot), pushing the siblings it passed over into one
//! priority queue shared across trees, ordered by ascending pivot
//! distance. While the candidate budget is unmet and the queue is
//! nonempty, the closest pending node is popped and descended in turn.
//! Collected leaf members are deduplicated across trees, ordered by
//! ascending distance to the query, and truncated to the budget.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::detectors::{bernoulli_score, BernoulliParams, BernoulliScoring};
use crate::netsim::{BinaryObservation, ClassIndex};

/// One node of a clustering tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TreeNode {
    /// Fewer than `J` members; holds their class indices directly.
    Leaf { members: Vec<ClassIndex> },
    /// One child per nonempty cluster, in pivot order.
    Internal { children: Vec<ChildNode> },
}

/// A child cluster together with the pivot class whose signature acts as
/// the cluster centroid during search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChildNode {
    pub pivot: ClassIndex,
    pub node: TreeNode,
}

/// `W` clustering trees over one signature table.
#[derive(Clone, Debug)]
pub struct ClusterForest {
    trees: Vec<TreeNode>,
    branching: usize,
    signatures: Vec<BinaryObservation>,
}

/// Distance-evaluation counters for one search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Query-to-pivot distances computed while ranking children.
    pub pivot_evals: u64,
    /// Query-to-member distances computed when collecting leaf members
    /// (one per unique candidate examined).
    pub candidate_evals: u64,
}

impl SearchStats {
    pub fn total(&self) -> u64 {
        self.pivot_evals + self.candidate_evals
    }
}

/// [`SearchStats`] plus the scoring work of [`detect_lsl_with_stats`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LslStats {
    pub search: SearchStats,
    /// Candidates scored under the Bernoulli model (one weighted-distance
    /// evaluation each).
    pub scored_candidates: u64,
}

impl LslStats {
    /// All length-`N` vector evaluations the detection performed.
    pub fn total_distance_evals(&self) -> u64 {
        self.search.total() + self.scored_candidates
    }
}

/// Builds one clustering tree over `signatures` (class `c` is entry `c`).
///
/// Panics if `j < 2`, `signatures` is empty, or lengths differ — all
/// caller bugs.
pub fn build_tree<R: Rng + ?Sized>(
    signatures: &[BinaryObservation],
    j: usize,
    rng: &mut R,
) -> TreeNode {
    assert!(j >= 2, "branching factor must be at least 2");
    assert!(!signatures.is_empty(), "cannot build a tree over zero signatures");
    let n = signatures[0].len();
    assert!(
        signatures.iter().all(|s| s.len() == n),
        "signatures of unequal length"
    );
    let members: Vec<ClassIndex> = (0..signatures.len()).map(ClassIndex).collect();
    build_subtree(signatures, members, j, rng)
}

fn build_subtree<R: Rng + ?Sized>(
    signatures: &[BinaryObservation],
    members: Vec<ClassIndex>,
    j: usize,
    rng: &mut R,
) -> TreeNode {
    if members.len() < j {
        return TreeNode::Leaf { members };
    }

    // J distinct random members become pivots; every member (pivots
    // included — each sits at distance 0 from itself) joins the cluster
    // of its nearest pivot, lowest pivot position on ties.
    let pivot_positions = rand::seq::index::sample(rng, members.len(), j);
    let pivots: Vec<ClassIndex> = pivot_positions.iter().map(|p| members[p]).collect();

    let mut clusters: Vec<Vec<ClassIndex>> = vec![Vec::new(); j];
    for &member in &members {
        let sig = &signatures[member.0];
        let mut best = 0;
        let mut best_dist = u32::MAX;
        for (idx, pivot) in pivots.iter().enumerate() {
            let d = sig.hamming(&signatures[pivot.0]);
            if d < best_dist {
                best_dist = d;
                best = idx;
            }
        }
        clusters[best].push(member);
    }

    // All members in one cluster (identical pivot signatures): peel the
    // pivot off as a leaf so the recursion strictly shrinks.
    if clusters.iter().any(|c| c.len() == members.len()) {
        let pivot = pivots[0];
        let rest: Vec<ClassIndex> =
            members.into_iter().filter(|&m| m != pivot).collect();
        return TreeNode::Internal {
            children: vec![
                ChildNode { pivot, node: TreeNode::Leaf { members: vec![pivot] } },
                ChildNode { pivot, node: build_subtree(signatures, rest, j, rng) },
            ],
        };
    }

    let children: Vec<ChildNode> = pivots
        .into_iter()
        .zip(clusters)
        .filter(|(_, cluster)| !cluster.is_empty())
        .map(|(pivot, cluster)| ChildNode {
            pivot,
            node: build_subtree(signatures, cluster, j, rng),
        })
        .collect();
    TreeNode::Internal { children }
}

/// Builds `w` independent trees over the same signature table.
pub fn build_forest<R: Rng + ?Sized>(
    signatures: &[BinaryObservation],
    j: usize,
    w: usize,
    rng: &mut R,
) -> ClusterForest {
    assert!(w >= 1, "need at least one tree");
    let trees = (0..w).map(|_| build_tree(signatures, j, rng)).collect();
    ClusterForest { trees, branching: j, signatures: signatures.to_vec() }
}

/// Pending node in the shared search queue; min-ordered by pivot
/// distance, FIFO among equal distances via the insertion sequence.
struct QueueEntry<'a> {
    dist: u32,
    seq: u64,
    node: &'a TreeNode,
}

impl PartialEq for QueueEntry<'_> {
    fn eq(&self, other: &Self) -> bool {
        (self.dist, self.seq) == (other.dist, other.seq)
    }
}
impl Eq for QueueEntry<'_> {}
impl PartialOrd for QueueEntry<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueEntry<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the std max-heap pops the smallest (dist, seq).
        (other.dist, other.seq).cmp(&(self.dist, self.seq))
    }
}

impl ClusterForest {
    /// Greedy descent from `start` to one leaf: at every internal node
    /// follow the child with the Hamming-nearest pivot (lowest position
    /// on ties — the same rule used during construction, so a query equal
    /// to a member's signature retraces that member's assignment path)
    /// and push the remaining children onto the shared queue. The leaf's
    /// unseen members are collected with their query distances.
    #[allow(clippy::too_many_arguments)] // shared search state, not a config surface
    fn descend<'a>(
        &'a self,
        r: &BinaryObservation,
        start: &'a TreeNode,
        queue: &mut BinaryHeap<QueueEntry<'a>>,
        seq: &mut u64,
        results: &mut Vec<(u32, ClassIndex)>,
        seen: &mut [bool],
        stats: &mut SearchStats,
    ) {
        let mut node = start;
        loop {
            match node {
                TreeNode::Leaf { members } => {
                    for &c in members {
                        if !seen[c.0] {
                            seen[c.0] = true;
                            stats.candidate_evals += 1;
                            results.push((r.hamming(&self.signatures[c.0]), c));
                        }
                    }
                    return;
                }
                TreeNode::Internal { children } => {
                    let mut best = 0;
                    let mut best_dist = u32::MAX;
                    let dists: Vec<u32> = children
                        .iter()
                        .map(|child| {
                            stats.pivot_evals += 1;
                            r.hamming(&self.signatures[child.pivot.0])
                        })
                        .collect();
                    for (idx, &d) in dists.iter().enumerate() {
                        if d < best_dist {
                            best_dist = d;
                            best = idx;
                        }
                    }
                    for (idx, child) in children.iter().enumerate() {
                        if idx != best {
                            queue.push(QueueEntry {
                                dist: dists[idx],
                                seq: *seq,
                                node: &child.node,
                            });
                            *seq += 1;
                        }
                    }
                    node = &children[best].node;
                }
            }
        }
    }

    pub fn num_classes(&self) -> usize {
        self.signatures.len()
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn signature(&self, c: ClassIndex) -> &BinaryObservation {
        &self.signatures[c.0]
    }

    /// Collects up to `budget` candidate classes for `r`, ordered by
    /// ascending Hamming distance (class index on ties).
    ///
    /// Panics unless `1 ≤ budget ≤` the class count.
    pub fn search(&self, r: &BinaryObservation, budget: usize) -> Vec<ClassIndex> {
        self.search_with_stats(r, budget).0
    }

    /// [`ClusterForest::search`] plus distance-evaluation counts.
    pub fn search_with_stats(
        &self,
        r: &BinaryObservation,
        budget: usize,
    ) -> (Vec<ClassIndex>, SearchStats) {
        assert!(
            budget >= 1 && budget <= self.signatures.len(),
            "budget {budget} outside 1..={}",
            self.signatures.len()
        );
        let mut stats = SearchStats::default();
        let mut seen = vec![false; self.signatures.len()];
        let mut results: Vec<(u32, ClassIndex)> = Vec::with_capacity(budget);
        let mut queue: BinaryHeap<QueueEntry<'_>> = BinaryHeap::new();
        let mut seq = 0u64;

        // The budget is rechecked between leaf visits, so the collected
        // count can overshoot it by at most one leaf's membership.
        for tree in &self.trees {
            if results.len() >= budget {
                break;
            }
            self.descend(r, tree, &mut queue, &mut seq, &mut results, &mut seen, &mut stats);
        }
        while results.len() < budget {
            match queue.pop() {
                Some(entry) => self.descend(
                    r,
                    entry.node,
                    &mut queue,
                    &mut seq,
                    &mut results,
                    &mut seen,
                    &mut stats,
                ),
                None => break,
            }
        }

        results.sort_unstable_by_key(|&(d, c)| (d, c.0));
        results.truncate(budget);
        (results.into_iter().map(|(_, c)| c).collect(), stats)
    }
}

/// Bernoulli-model detection restricted to the forest's reduced search
/// space: scores only the classes [`ClusterForest::search`] returns.
/// Ties go to the lowest class index, so with `budget` equal to the
/// class count the decision matches [`crate::detectors::detect_bernoulli`]
/// exactly.
pub fn detect_lsl(
    r: &BinaryObservation,
    forest: &ClusterForest,
    params: &BernoulliParams,
    budget: usize,
) -> ClassIndex {
    detect_lsl_with_stats(r, forest, params, budget).0
}

/// [`detect_lsl`] plus distance-evaluation counts.
pub fn detect_lsl_with_stats(
    r: &BinaryObservation,
    forest: &ClusterForest,
    params: &BernoulliParams,
    budget: usize,
) -> (ClassIndex, LslStats) {
    assert_eq!(
        forest.num_classes(),
        params.num_classes(),
        "forest and parameters cover different class sets"
    );
    let (candidates, search) = forest.search_with_stats(r, budget);
    let mut best = (f64::INFINITY, usize::MAX);
    for &c in &candidates {
        let score = bernoulli_score(r, params, c, BernoulliScoring::WeightedDisagreement);
        if score < best.0 || (score == best.0 && c.0 < best.1) {
            best = (score, c.0);
        }
    }
    let stats = LslStats { search, scored_candidates: candidates.len() as u64 };
    (ClassIndex(best.1), stats)
}

/// Closed-form operation-count estimates `(search_ops, build_ops)` for
/// one query and one forest build:
///
/// ```text
/// search_ops = N · L_max · (K · log_J m + 1)
/// build_ops  = m^K · N · J · W · K · log_J m
/// ```
///
/// These are scaling estimates without hidden constants; measured
/// distance-evaluation counts stay within a small constant of
/// `search_ops / N` (see the instrumentation tests).
pub fn complexity_estimate(
    n: usize,
    l_max: usize,
    j: usize,
    k: usize,
    m: usize,
    w: usize,
) -> (f64, f64) {
    assert!(
        n > 0 && l_max > 0 && j > 1 && k > 0 && m > 1 && w > 0,
        "complexity estimate needs positive dimensions and j, m ≥ 2"
    );
    let depth = k as f64 * (m as f64).ln() / (j as f64).ln();
    let search_ops = n as f64 * l_max as f64 * (depth + 1.0);
    let build_ops =
        (m as f64).powi(k as i32) * n as f64 * j as f64 * w as f64 * depth;
    (search_ops, build_ops)
}
