//! Genie hierarchical clustering: single linkage on the minimum spanning
//! tree, except that while the Gini index of the cluster sizes exceeds a
//! threshold, every merge must involve a smallest cluster. Small groups of
//! isolated points (outliers) are therefore absorbed instead of being kept
//! as clusters of their own.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Points;
use crate::error::{Error, Result};

/// Default inequality threshold.
pub const DEFAULT_GINI_THRESHOLD: f64 = 0.3;

/// Euclidean minimum spanning tree by Prim's algorithm, `O(n^2)` time and
/// `O(n)` memory. Edges `(weight, a, b)` in insertion order.
fn minimum_spanning_tree(points: &Points<'_>) -> Vec<(f64, usize, usize)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let x = points.row(current);
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let d: f64 = points.row(j).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            if d < best[j] {
                best[j] = d;
                parent[j] = current;
            }
            if best[j] < next_d {
                next_d = best[j];
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push((libm::sqrt(next_d), parent[next], next));
        current = next;
    }
    edges
}

struct DisjointSets {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> (usize, usize, usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if self.size[a] < self.size[b] || (self.size[a] == self.size[b] && b < a) {
            core::mem::swap(&mut a, &mut b);
        }
        let (sa, sb) = (self.size[a], self.size[b]);
        self.parent[b] = a;
        self.size[a] += sb;
        (sa, sb, sa + sb)
    }
}

/// Multiset of cluster sizes with an `O(#distinct sizes)` Gini index.
struct SizeHistogram {
    counts: BTreeMap<usize, usize>,
    clusters: usize,
    total: usize,
}

impl SizeHistogram {
    fn remove(&mut self, s: usize) {
        if let Some(c) = self.counts.get_mut(&s) {
            *c -= 1;
            if *c == 0 {
                self.counts.remove(&s);
            }
        }
    }

    fn smallest(&self) -> usize {
        *self.counts.keys().next().unwrap_or(&0)
    }

    /// `sum_{i<j} |c_i - c_j| / ((k - 1) sum_i c_i)`.
    fn gini(&self) -> f64 {
        let k = self.clusters;
        if k <= 1 {
            return 0.0;
        }
        // With sizes sorted ascending, sum_{i<j} |c_i - c_j| = sum_i (2i - k + 1) c_(i), i from 0.
        let mut rank = 0usize;
        let mut acc = 0.0;
        for (&s, &c) in &self.counts {
            // ranks rank..rank+c share size s
            let first = rank as f64;
            let last = (rank + c - 1) as f64;
            let rank_sum = (first + last) * c as f64 / 2.0;
            acc += (2.0 * rank_sum - (k as f64 - 1.0) * c as f64) * s as f64;
            rank += c;
        }
        acc / ((k as f64 - 1.0) * self.total as f64)
    }
}

/// Partition of the rows into `k` clusters, labels `0..k` in order of first
/// appearance.
pub fn genie_partition(points: Points<'_>, k: usize, gini_threshold: f64) -> Result<Vec<usize>> {
    let n = points.len();
    if k == 0 || n < k {
        return Err(Error::invalid("need 1 <= K <= n"));
    }
    if !(0.0..=1.0).contains(&gini_threshold) {
        return Err(Error::invalid("Gini threshold must lie in [0, 1]"));
    }
    points.check_finite()?;
    let mut edges = minimum_spanning_tree(&points);
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used = vec![false; edges.len()];
    let mut sets = DisjointSets::new(n);
    let mut hist = SizeHistogram { counts: BTreeMap::new(), clusters: n, total: n };
    hist.counts.insert(1, n);
    let mut first_free = 0;
    for _ in 0..n - k {
        while used[first_free] {
            first_free += 1;
        }
        let pick = if hist.gini() > gini_threshold {
            let smallest = hist.smallest();
            (first_free..edges.len())
                .find(|&e| {
                    !used[e] && {
                        let (_, a, b) = edges[e];
                        let (ra, rb) = (sets.find(a), sets.find(b));
                        sets.size[ra] == smallest || sets.size[rb] == smallest
                    }
                })
                .unwrap_or(first_free)
        } else {
            first_free
        };
        used[pick] = true;
        let (_, a, b) = edges[pick];
        let (sa, sb, merged) = sets.union(a, b);
        hist.remove(sa);
        hist.remove(sb);
        *hist.counts.entry(merged).or_default() += 1;
        hist.clusters -= 1;
    }
    let mut label_of_root = BTreeMap::new();
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let r = sets.find(i);
        let next = label_of_root.len();
        labels.push(*label_of_root.entry(r).or_insert(next));
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_of_sizes() {
        let mut counts = BTreeMap::new();
        counts.insert(5, 4);
        let h = SizeHistogram { counts, clusters: 4, total: 20 };
        assert_eq!(h.gini(), 0.0);
        let mut counts = BTreeMap::new();
        counts.insert(1, 1);
        counts.insert(3, 1);
        // |1 - 3| / (1 * 4)
        let h = SizeHistogram { counts, clusters: 2, total: 4 };
        assert!((h.gini() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_blobs_with_an_outlier() {
        let mut data = Vec::new();
        for i in 0..10 {
            data.extend_from_slice(&[0.1 * i as f64, 0.0]);
            data.extend_from_slice(&[10.0 + 0.1 * i as f64, 0.0]);
        }
        data.extend_from_slice(&[5.0, 30.0]);
        let p = Points::new(&data, 2).unwrap();
        let labels = genie_partition(p, 2, DEFAULT_GINI_THRESHOLD).unwrap();
        for i in 0..10 {
            assert_eq!(labels[2 * i], labels[0]);
            assert_eq!(labels[2 * i + 1], labels[1]);
        }
        assert_ne!(labels[0], labels[1]);
        // Pure single linkage (threshold 1) keeps the outlier apart.
        let single = genie_partition(p, 2, 1.0).unwrap();
        assert_eq!(single.iter().filter(|&&l| l == single[20]).count(), 1);
    }

    #[test]
    fn k_equals_n_is_identity_partition() {
        let data = [0.0, 1.0, 3.0];
        let p = Points::new(&data, 1).unwrap();
        assert_eq!(genie_partition(p, 3, 0.3).unwrap(), vec![0, 1, 2]);
        assert!(genie_partition(p, 4, 0.3).is_err());
    }
}
