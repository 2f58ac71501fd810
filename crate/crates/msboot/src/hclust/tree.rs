//! Average-linkage agglomeration and canonical cluster identities.

use super::DistanceMatrix;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

/// A merge operand: an original item or the result of an earlier merge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum Node {
    Leaf(usize),
    Internal(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: Node,
    pub right: Node,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_labels: Vec<String>,
    /// Average linkage on a metric matrix produces nondecreasing heights;
    /// inversions are recorded here rather than treated as fatal.
    pub monotone_heights: bool,
}

/// A cluster as a sorted set of leaf indices; set equality defines identity
/// regardless of how or when the cluster was formed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClusterId(Vec<usize>);

impl ClusterId {
    pub fn new(mut leaves: Vec<usize>) -> Result<ClusterId> {
        leaves.sort_unstable();
        let before = leaves.len();
        leaves.dedup();
        if leaves.len() != before {
            return Err(Error::domain("cluster has repeated leaves"));
        }
        if leaves.len() < 2 {
            return Err(Error::domain(
                "a cluster needs at least 2 leaves; singletons are trivial",
            ));
        }
        Ok(ClusterId(leaves))
    }

    pub fn leaves(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, leaf: usize) -> bool {
        self.0.binary_search(&leaf).is_ok()
    }
}

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, leaf) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{leaf}")?;
        }
        Ok(())
    }
}

/// UPGMA: repeatedly merge the closest pair, averaging distances over all
/// original item pairs. Ties go to the pair whose (smallest, second) member
/// labels are lexicographically least.
pub fn average_linkage(d: &DistanceMatrix) -> Result<Dendrogram> {
    let labels = (1..=d.p()).map(|i| i.to_string()).collect::<Vec<_>>();
    average_linkage_labeled(d, &labels)
}

pub fn average_linkage_labeled(d: &DistanceMatrix, labels: &[String]) -> Result<Dendrogram> {
    if labels.len() != d.p() {
        return Err(Error::domain(format!(
            "{} labels for {} items",
            labels.len(),
            d.p()
        )));
    }
    let (merges, _, monotone_heights) = upgma_core(d)?;
    Ok(Dendrogram {
        merges,
        leaf_labels: labels.to_vec(),
        monotone_heights,
    })
}

struct Slot {
    node: Node,
    size: usize,
    members: Vec<usize>,
}

/// Shared agglomeration core; also returns each merge's member set.
pub(crate) fn upgma_core(d: &DistanceMatrix) -> Result<(Vec<Merge>, Vec<Vec<usize>>, bool)> {
    let p = d.p();
    if p < 3 {
        return Err(Error::domain(format!(
            "agglomeration needs at least 3 items, got {p}"
        )));
    }
    // Slot i always holds the cluster whose minimal member label is i, so a
    // low-to-high scan visits candidate pairs in tie-break order.
    let mut slots: Vec<Option<Slot>> = (0..p)
        .map(|i| {
            Some(Slot {
                node: Node::Leaf(i),
                size: 1,
                members: vec![i],
            })
        })
        .collect();
    let mut dist = vec![0.0f64; p * p];
    for i in 0..p {
        for j in 0..p {
            dist[i * p + j] = d.get(i, j);
        }
    }
    let mut merges = Vec::with_capacity(p - 1);
    let mut member_sets = Vec::with_capacity(p - 1);
    let mut monotone = true;
    let mut last_height = f64::NEG_INFINITY;
    for step in 0..p - 1 {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..p {
            if slots[i].is_none() {
                continue;
            }
            for j in i + 1..p {
                if slots[j].is_none() {
                    continue;
                }
                let dij = dist[i * p + j];
                if best.map(|(_, _, b)| dij < b).unwrap_or(true) {
                    best = Some((i, j, dij));
                }
            }
        }
        let (a, b, height) = best.expect("at least two active clusters");
        if height < last_height {
            monotone = false;
        }
        last_height = height;
        let left = slots[a].as_ref().unwrap();
        let right = slots[b].as_ref().unwrap();
        let size_a = left.size;
        let size_b = right.size;
        let mut members = Vec::with_capacity(size_a + size_b);
        members.extend_from_slice(&left.members);
        members.extend_from_slice(&right.members);
        members.sort_unstable();
        merges.push(Merge {
            left: left.node,
            right: right.node,
            height,
        });
        member_sets.push(members.clone());
        // Unweighted average over original pairs: sizes weight the update.
        let total = (size_a + size_b) as f64;
        for k in 0..p {
            if k == a || k == b || slots[k].is_none() {
                continue;
            }
            let merged = (size_a as f64 * dist[a * p + k] + size_b as f64 * dist[b * p + k]) / total;
            dist[a * p + k] = merged;
            dist[k * p + a] = merged;
        }
        slots[a] = Some(Slot {
            node: Node::Internal(step),
            size: size_a + size_b,
            members,
        });
        slots[b] = None;
    }
    Ok((merges, member_sets, monotone))
}

/// All nontrivial clusters the dendrogram exhibits — every merge except the
/// root — ordered bottom-to-top by merge height.
pub fn clusters_of(dend: &Dendrogram) -> Result<Vec<ClusterId>> {
    let sets = merge_member_sets(dend);
    sets.into_iter()
        .take(dend.merges.len().saturating_sub(1))
        .map(ClusterId::new)
        .collect()
}

/// Leaf-index set created by each merge, in merge order.
pub(crate) fn merge_member_sets(dend: &Dendrogram) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = Vec::with_capacity(dend.merges.len());
    for merge in &dend.merges {
        let mut members = Vec::new();
        for node in [merge.left, merge.right] {
            match node {
                Node::Leaf(i) => members.push(i),
                Node::Internal(k) => members.extend_from_slice(&sets[k]),
            }
        }
        members.sort_unstable();
        sets.push(members);
    }
    sets
}

/// Newick-like serialization: leaves keep their labels, and each internal
/// node may carry a bracketed annotation looked up by its leaf set.
pub fn newick_annotated(dend: &Dendrogram, annotations: &HashMap<ClusterId, String>) -> String {
    fn escape(label: &str) -> String {
        if label
            .chars()
            .any(|c| c.is_whitespace() || "(),;:[]'".contains(c))
        {
            format!("'{}'", label.replace('\'', "''"))
        } else {
            label.to_string()
        }
    }
    fn render(
        dend: &Dendrogram,
        sets: &[Vec<usize>],
        annotations: &HashMap<ClusterId, String>,
        node: Node,
        out: &mut String,
    ) {
        match node {
            Node::Leaf(i) => out.push_str(&escape(&dend.leaf_labels[i])),
            Node::Internal(k) => {
                out.push('(');
                render(dend, sets, annotations, dend.merges[k].left, out);
                out.push(',');
                render(dend, sets, annotations, dend.merges[k].right, out);
                out.push(')');
                if let Ok(id) = ClusterId::new(sets[k].clone()) {
                    if let Some(ann) = annotations.get(&id) {
                        out.push('[');
                        out.push_str(ann);
                        out.push(']');
                    }
                }
            }
        }
    }
    let sets = merge_member_sets(dend);
    let mut out = String::new();
    if let Some(root) = dend.merges.len().checked_sub(1) {
        render(dend, &sets, annotations, Node::Internal(root), &mut out);
    }
    out.push(';');
    out
}

#[cfg(test)]
mod tests {
    use super::super::Metric;
    use super::*;

    fn dmat(p: usize, tri: Vec<f64>) -> DistanceMatrix {
        DistanceMatrix::from_lower_triangle(p, Metric::EuclidSqMean, tri).unwrap()
    }

    #[test]
    fn three_leaves_merge_by_hand_arithmetic() {
        // d12=1, d13=4, d23=5.
        let d = dmat(3, vec![1.0, 4.0, 5.0]);
        let dend = average_linkage(&d).unwrap();
        assert_eq!(dend.merges.len(), 2);
        assert_eq!(dend.merges[0].left, Node::Leaf(0));
        assert_eq!(dend.merges[0].right, Node::Leaf(1));
        assert!((dend.merges[0].height - 1.0).abs() < 1e-15);
        assert_eq!(dend.merges[1].left, Node::Internal(0));
        assert_eq!(dend.merges[1].right, Node::Leaf(2));
        assert!((dend.merges[1].height - 4.5).abs() < 1e-15);
        assert!(dend.monotone_heights);
    }

    #[test]
    fn equal_distances_break_ties_toward_small_labels() {
        // Every candidate pair is tied at 2, so the scan order decides:
        // {0,1} first, then ({0,1},{2}) beats ({2},{3}) lexicographically.
        let d = dmat(4, vec![2.0; 6]);
        let dend = average_linkage(&d).unwrap();
        assert_eq!(dend.merges[0].left, Node::Leaf(0));
        assert_eq!(dend.merges[0].right, Node::Leaf(1));
        assert_eq!(dend.merges[1].left, Node::Internal(0));
        assert_eq!(dend.merges[1].right, Node::Leaf(2));
        assert_eq!(dend.merges[2].left, Node::Internal(1));
        assert_eq!(dend.merges[2].right, Node::Leaf(3));
    }

    #[test]
    fn population_distances_prefer_the_true_clusters() {
        // Column means (a,a,0) and (a,0,a) mixed evenly give expected
        // squared distances d12 = d13 = a²/2 + 2 and d23 = a² + 2.
        let a: f64 = 1.0;
        let d12 = a * a / 2.0 + 2.0;
        let d23 = a * a + 2.0;
        let d = dmat(3, vec![d12, d12, d23]);
        let dend = average_linkage(&d).unwrap();
        assert_eq!(dend.merges[0].left, Node::Leaf(0));
        assert_eq!(dend.merges[0].right, Node::Leaf(1));
        assert!((dend.merges[0].height - 2.5).abs() < 1e-15);
    }

    #[test]
    fn clusters_exclude_the_root_and_follow_height_order() {
        let d = dmat(4, vec![1.0, 6.0, 6.0, 6.0, 6.0, 2.0]);
        let dend = average_linkage(&d).unwrap();
        let clusters = clusters_of(&dend).unwrap();
        assert_eq!(clusters.len(), 2);
        assert_eq!(clusters[0].leaves(), &[0, 1]);
        assert_eq!(clusters[1].leaves(), &[2, 3]);
    }

    #[test]
    fn cluster_identity_is_a_set() {
        let a = ClusterId::new(vec![3, 1, 2]).unwrap();
        let b = ClusterId::new(vec![1, 2, 3]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "1,2,3");
        assert!(ClusterId::new(vec![1]).is_err());
        assert!(ClusterId::new(vec![1, 1]).is_err());
    }

    #[test]
    fn newick_includes_labels_and_annotations() {
        let d = dmat(3, vec![1.0, 4.0, 5.0]);
        let labels = vec!["alpha".to_string(), "be ta".to_string(), "c".to_string()];
        let dend = average_linkage_labeled(&d, &labels).unwrap();
        let mut ann = HashMap::new();
        ann.insert(
            ClusterId::new(vec![0, 1]).unwrap(),
            "si=79.9,au=94.3,bp=67.5".to_string(),
        );
        let text = newick_annotated(&dend, &ann);
        assert_eq!(text, "((alpha,'be ta')[si=79.9,au=94.3,bp=67.5],c);");
    }
}
