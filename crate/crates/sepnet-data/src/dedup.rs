//! Duplicate detection and cross-split leakage audit.
//!
//! Exact duplicates are grouped by content hash; near-duplicates by the
//! transitive closure of "perceptual hashes within a Hamming threshold",
//! computed with a union-find over all pairs. A cluster whose members sit in
//! more than one assigned split is a leak: the same picture would be seen
//! both during training and during evaluation, inflating every metric
//! downstream.
//!
//! Clusters are reported as sorted path lists (clusters ordered by first
//! member), so the report is identical no matter how the manifest happens to
//! be ordered.

use std::collections::HashMap;

use crate::dhash::hamming;
use crate::manifest::{DatasetManifest, Split};

pub const DEFAULT_HAMMING_THRESHOLD: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leak {
    /// Paths of the whole offending cluster, sorted.
    pub paths: Vec<String>,
    /// The distinct splits the cluster touches, in train/val/test order.
    pub splits: Vec<Split>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DedupReport {
    /// Byte-identical file groups (size ≥ 2).
    pub exact_clusters: Vec<Vec<String>>,
    /// Perceptually-linked groups (size ≥ 2), a superset of the exact ones.
    pub near_clusters: Vec<Vec<String>>,
    pub leaks: Vec<Leak>,
}

impl DedupReport {
    pub fn has_leaks(&self) -> bool {
        !self.leaks.is_empty()
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> UnionFind {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Scans a manifest for duplicate clusters and cross-split leaks.
pub fn dedup_scan(manifest: &DatasetManifest, hamming_threshold: u32) -> DedupReport {
    let entries = &manifest.entries;
    let n = entries.len();

    let mut by_content: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, entry) in entries.iter().enumerate() {
        by_content
            .entry(entry.content_hash.as_str())
            .or_default()
            .push(i);
    }
    let exact_clusters = canonical_clusters(
        manifest,
        by_content.values().filter(|v| v.len() >= 2).cloned(),
    );

    // Identical bytes imply an identical perceptual hash, so seeding the
    // union-find with the exact groups is redundant — but it keeps the leak
    // definition visibly covering both cluster kinds.
    let mut uf = UnionFind::new(n);
    for group in by_content.values() {
        for pair in group.windows(2) {
            uf.union(pair[0], pair[1]);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if hamming(entries[i].phash, entries[j].phash) <= hamming_threshold {
                uf.union(i, j);
            }
        }
    }
    let mut components: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        let root = uf.find(i);
        components.entry(root).or_default().push(i);
    }
    let member_groups: Vec<Vec<usize>> = components
        .into_values()
        .filter(|v| v.len() >= 2)
        .collect();
    let near_clusters = canonical_clusters(manifest, member_groups.iter().cloned());

    let mut leaks = Vec::new();
    for group in &member_groups {
        let mut splits: Vec<Split> = Split::ALL
            .into_iter()
            .filter(|s| group.iter().any(|&i| entries[i].split == Some(*s)))
            .collect();
        if splits.len() >= 2 {
            let mut paths: Vec<String> = group.iter().map(|&i| entries[i].path.clone()).collect();
            paths.sort();
            splits.sort();
            leaks.push(Leak { paths, splits });
        }
    }
    leaks.sort_by(|a, b| a.paths.cmp(&b.paths));

    DedupReport {
        exact_clusters,
        near_clusters,
        leaks,
    }
}

fn canonical_clusters(
    manifest: &DatasetManifest,
    groups: impl Iterator<Item = Vec<usize>>,
) -> Vec<Vec<String>> {
    let mut clusters: Vec<Vec<String>> = groups
        .map(|group| {
            let mut paths: Vec<String> = group
                .iter()
                .map(|&i| manifest.entries[i].path.clone())
                .collect();
            paths.sort();
            paths
        })
        .collect();
    clusters.sort();
    clusters
}
