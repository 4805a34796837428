//! Clustering of cited-reference spelling variants and merging of each
//! cluster into one canonical entry.
//!
//! Variants are blocked by reference publication year; inside a block,
//! clusters are the connected components of the pairwise match graph
//! (normalised Levenshtein similarity over a comparison key, gated on
//! volume/page/DOI equality). Blocking keeps the all-pairs comparison
//! tractable and matches the behaviour merging is meant to reproduce:
//! variants of the same work never disagree on the year.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::ingest::CitedRefVariant;

/// Clustering parameters. Defaults: threshold 0.75, volume and page gates
/// on, DOI gate off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    /// Minimum similarity in [0, 1]; the comparison is inclusive (`>=`).
    pub threshold: f64,
    pub require_volume: bool,
    pub require_page: bool,
    pub require_doi: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            threshold: 0.75,
            require_volume: true,
            require_page: true,
            require_doi: false,
        }
    }
}

/// A cluster of variants collapsed into one canonical cited reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedCR {
    /// Raw string of the member with the largest total count (ties broken
    /// by the lexicographically smallest raw string).
    pub canonical_raw: String,
    /// Shared reference publication year of all members.
    pub rpy: Option<i32>,
    pub member_count: usize,
    /// Total occurrences across all members; equals the sum of
    /// `counts_by_year`.
    pub n_cr: u64,
    pub counts_by_year: BTreeMap<i32, u64>,
}

/// The string two variants are compared on: author and source, uppercased,
/// with all whitespace removed. Volume, page and DOI never appear here
/// because they are parsed into separate fields; they participate through
/// the equality gates instead.
///
/// Centralised so the normalisation can be swapped without touching the
/// clustering itself.
pub fn comparison_key(v: &CitedRefVariant) -> String {
    v.author
        .chars()
        .chain(v.source.chars())
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_uppercase)
        .collect()
}

/// Two-row dynamic-programming edit distance over chars.
fn levenshtein(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur: Vec<usize> = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            cur[j + 1] = (prev[j + 1] + 1).min(cur[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn key_similarity(a: &[char], b: &[char]) -> f64 {
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max_len as f64
}

/// Normalised similarity `1 - d / max(|key a|, |key b|)` in [0, 1].
/// Symmetric, 1 for identical keys, 0 for empty versus non-empty.
pub fn similarity(a: &CitedRefVariant, b: &CitedRefVariant) -> f64 {
    let ka: Vec<char> = comparison_key(a).chars().collect();
    let kb: Vec<char> = comparison_key(b).chars().collect();
    key_similarity(&ka, &kb)
}

/// A field gate disqualifies only when both sides carry a value and the
/// values differ; absence is compatible with anything, so abbreviated book
/// references can still merge with their fuller variants.
fn gates_ok(a: &CitedRefVariant, b: &CitedRefVariant, cfg: &ClusterConfig) -> bool {
    fn gate(enabled: bool, x: &Option<String>, y: &Option<String>) -> bool {
        if !enabled {
            return true;
        }
        match (x, y) {
            (Some(x), Some(y)) => x == y,
            _ => true,
        }
    }
    gate(cfg.require_volume, &a.volume, &b.volume)
        && gate(cfg.require_page, &a.page, &b.page)
        && gate(cfg.require_doi, &a.doi, &b.doi)
}

/// Decide whether two same-year variants belong to the same cluster.
pub fn pair_matches(a: &CitedRefVariant, b: &CitedRefVariant, cfg: &ClusterConfig) -> bool {
    debug_assert_eq!(a.rpy, b.rpy, "pair_matches compares within an RPY block");
    gates_ok(a, b, cfg) && similarity(a, b) >= cfg.threshold
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            x = std::mem::replace(&mut self.parent[x], root);
        }
        root
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
    }
}

/// Partition `variants` into clusters of indices.
///
/// Variants are blocked by `rpy`; within a block the clusters are the
/// connected components of the [`pair_matches`] graph. The partition is a
/// function of the variant set only — input order changes neither the
/// components nor which variants share one.
pub fn cluster(variants: &[CitedRefVariant], cfg: &ClusterConfig) -> Vec<Vec<usize>> {
    let mut blocks: BTreeMap<Option<i32>, Vec<usize>> = BTreeMap::new();
    for (i, v) in variants.iter().enumerate() {
        blocks.entry(v.rpy).or_default().push(i);
    }
    let blocks: Vec<Vec<usize>> = blocks.into_values().collect();
    blocks
        .par_iter()
        .map(|idxs| cluster_block(variants, idxs, cfg))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn cluster_block(
    variants: &[CitedRefVariant],
    idxs: &[usize],
    cfg: &ClusterConfig,
) -> Vec<Vec<usize>> {
    let keys: Vec<Vec<char>> = idxs
        .iter()
        .map(|&i| comparison_key(&variants[i]).chars().collect())
        .collect();
    let mut uf = UnionFind::new(idxs.len());
    for x in 0..idxs.len() {
        for y in x + 1..idxs.len() {
            if uf.find(x) == uf.find(y) {
                continue;
            }
            let (a, b) = (&variants[idxs[x]], &variants[idxs[y]]);
            if gates_ok(a, b, cfg) && key_similarity(&keys[x], &keys[y]) >= cfg.threshold {
                uf.union(x, y);
            }
        }
    }
    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (x, &idx) in idxs.iter().enumerate() {
        let root = uf.find(x);
        components.entry(root).or_default().push(idx);
    }
    let mut clusters: Vec<Vec<usize>> = components.into_values().collect();
    clusters.sort_unstable_by_key(|c| c[0]);
    clusters
}

/// Collapse each cluster into one [`MergedCR`].
///
/// Counts are summed element-wise, so no occurrence is created or lost:
/// the sum of `n_cr` over the output equals the sum of `total_count` over
/// the input.
pub fn merge(variants: &[CitedRefVariant], clusters: &[Vec<usize>]) -> Vec<MergedCR> {
    clusters
        .iter()
        .map(|members| {
            debug_assert!(!members.is_empty());
            let canonical = members
                .iter()
                .map(|&i| &variants[i])
                .max_by(|a, b| {
                    a.total_count
                        .cmp(&b.total_count)
                        .then_with(|| b.raw.cmp(&a.raw))
                })
                .expect("cluster has at least one member");
            let mut counts_by_year = BTreeMap::new();
            let mut n_cr = 0;
            for &i in members {
                debug_assert_eq!(variants[i].rpy, canonical.rpy, "cluster spans two RPYs");
                for (&year, &count) in &variants[i].counts_by_year {
                    *counts_by_year.entry(year).or_insert(0) += count;
                }
                n_cr += variants[i].total_count;
            }
            MergedCR {
                canonical_raw: canonical.raw.clone(),
                rpy: canonical.rpy,
                member_count: members.len(),
                n_cr,
                counts_by_year,
            }
        })
        .collect()
}
