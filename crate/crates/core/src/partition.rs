//! Order-of-appearance partitions and their summary statistics.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Allocation sequence `c_1..c_n` with labels numbered by first appearance.
///
/// Labels are exposed 1-based; internally they are stored 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Partition {
    labels: Vec<u32>,
    sizes: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionStats {
    pub n: usize,
    pub k: usize,
    pub sizes: Vec<u64>,
    /// `r -> K_{n,r}`.
    pub size_histogram: BTreeMap<u64, usize>,
}

impl Partition {
    /// An empty partition, to be extended with [`Partition::push`].
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a partition from 1-based labels that are already canonical.
    pub fn from_labels(labels: &[u32]) -> Result<Self> {
        let mut p = Self::new();
        for (i, &c) in labels.iter().enumerate() {
            if c == 0 || c as usize > p.k() + 1 {
                return Err(domain(format!("label {c} at position {} is not in order of appearance", i + 1)));
            }
            p.push(c as usize - 1);
        }
        Ok(p)
    }

    /// Relabels arbitrary tokens by order of first appearance.
    pub fn canonicalize<T: Eq + Hash>(raw: impl IntoIterator<Item = T>) -> Result<Self> {
        let mut seen: HashMap<T, usize> = HashMap::new();
        let mut p = Self::new();
        for token in raw {
            let next = seen.len();
            let j = *seen.entry(token).or_insert(next);
            p.push(j);
        }
        if p.is_empty() {
            return Err(domain("cannot canonicalize an empty sequence"));
        }
        Ok(p)
    }

    /// Appends an item to cluster `j` (0-based); `j == k()` opens a new one.
    ///
    /// # Panics
    /// If `j > k()`.
    pub fn push(&mut self, j: usize) {
        assert!(j <= self.sizes.len(), "cluster index {j} skips a label");
        if j == self.sizes.len() {
            self.sizes.push(0);
        }
        self.sizes[j] += 1;
        self.labels.push(j as u32);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of clusters `K_n`.
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    /// 1-based label of item `i` (0-based).
    pub fn label(&self, i: usize) -> u32 {
        self.labels[i] + 1
    }

    /// 0-based cluster of item `i`.
    pub fn cluster(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    /// 1-based labels.
    pub fn labels(&self) -> Vec<u32> {
        self.labels.iter().map(|&c| c + 1).collect()
    }

    pub(crate) fn raw_labels(&self) -> &[u32] {
        &self.labels
    }

    /// Cluster sizes `m_{n,j}` in order of appearance.
    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn stats(&self) -> PartitionStats {
        let mut size_histogram = BTreeMap::new();
        for &m in &self.sizes {
            *size_histogram.entry(m).or_insert(0) += 1;
        }
        PartitionStats {
            n: self.len(),
            k: self.k(),
            sizes: self.sizes.clone(),
            size_histogram,
        }
    }

    /// The first `m` items.
    pub fn restrict(&self, m: usize) -> Result<Self> {
        if m < 1 || m > self.len() {
            return Err(domain(format!("restriction length {m} outside 1..={}", self.len())));
        }
        let mut p = Self::new();
        for &c in &self.labels[..m] {
            p.push(c as usize);
        }
        Ok(p)
    }

    /// Size of every cluster after each prefix: entry `j` holds
    /// `(n', m_{n',j})` for `n' = 1..n`.
    pub fn size_trajectories(&self) -> Vec<Vec<(usize, u64)>> {
        let n = self.len();
        let mut out: Vec<Vec<(usize, u64)>> = vec![Vec::with_capacity(n); self.k()];
        let mut current = vec![0u64; self.k()];
        for (i, &c) in self.labels.iter().enumerate() {
            current[c as usize] += 1;
            for (j, traj) in out.iter_mut().enumerate() {
                traj.push((i + 1, current[j]));
            }
        }
        out
    }

    /// `K_{n'}` for every prefix length `n' = 1..n`.
    pub fn cluster_count_trajectory(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len());
        let mut k = 0;
        for &c in &self.labels {
            k = k.max(c as usize + 1);
            out.push(k);
        }
        out
    }

    /// Trajectory of a single cluster (0-based), one entry per prefix length.
    pub fn cluster_trajectory(&self, j: usize) -> Vec<u64> {
        let mut m = 0;
        self.labels
            .iter()
            .map(|&c| {
                if c as usize == j {
                    m += 1;
                }
                m
            })
            .collect()
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.labels().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<u32>::deserialize(d)?;
        Partition::from_labels(&labels).map_err(serde::de::Error::custom)
    }
}

/// Relabels arbitrary tokens by order of first appearance.
pub fn canonicalize<T: Eq + Hash>(raw: impl IntoIterator<Item = T>) -> Result<Partition> {
    Partition::canonicalize(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(labels: &[u32]) -> Partition {
        Partition::from_labels(labels).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(["b", "a", "b"]).unwrap().labels(), vec![1, 2, 1]);
        assert_eq!(canonicalize([7, 7, 7]).unwrap().labels(), vec![1, 1, 1]);
        assert_eq!(canonicalize(["x", "y", "z", "y"]).unwrap().labels(), vec![1, 2, 3, 2]);
        assert!(canonicalize(Vec::<String>::new()).is_err());
    }

    #[test]
    fn from_labels_rejects_non_canonical() {
        assert!(Partition::from_labels(&[2, 1]).is_err());
        assert!(Partition::from_labels(&[1, 3]).is_err());
        assert!(Partition::from_labels(&[0]).is_err());
    }

    #[test]
    fn stats_examples() {
        let s = p(&[1, 2, 1]).stats();
        assert_eq!((s.n, s.k, s.sizes.clone()), (3, 2, vec![2, 1]));
        assert_eq!(s.size_histogram, BTreeMap::from([(1, 1), (2, 1)]));
        let s = p(&[1, 1, 1, 1]).stats();
        assert_eq!((s.k, s.sizes.clone()), (1, vec![4]));
        assert_eq!(s.size_histogram, BTreeMap::from([(4, 1)]));
        let s = p(&[1, 2, 3]).stats();
        assert_eq!(s.size_histogram, BTreeMap::from([(1, 3)]));
    }

    #[test]
    fn restrict_examples() {
        assert_eq!(p(&[1, 2, 1, 3]).restrict(2).unwrap().labels(), vec![1, 2]);
        assert_eq!(p(&[1, 1, 2]).restrict(3).unwrap().labels(), vec![1, 1, 2]);
        assert_eq!(p(&[1, 2, 2, 1]).restrict(3).unwrap().labels(), vec![1, 2, 2]);
        assert!(p(&[1, 2]).restrict(0).is_err());
        assert!(p(&[1, 2]).restrict(3).is_err());
    }

    #[test]
    fn trajectories_examples() {
        let t = p(&[1, 2, 1]).size_trajectories();
        let sizes: Vec<Vec<u64>> = t.iter().map(|v| v.iter().map(|x| x.1).collect()).collect();
        assert_eq!(sizes, vec![vec![1, 1, 2], vec![0, 1, 1]]);
        let t = p(&[1, 1]).size_trajectories();
        assert_eq!(t, vec![vec![(1, 1), (2, 2)]]);
        let t = p(&[1, 2, 3]).size_trajectories();
        assert!(t.iter().all(|v| v.last().unwrap().1 == 1));
        assert_eq!(p(&[1, 2, 1]).cluster_trajectory(0), vec![1, 1, 2]);
        assert_eq!(p(&[1, 2, 1, 3]).cluster_count_trajectory(), vec![1, 2, 2, 3]);
    }

    #[test]
    fn serde_round_trip() {
        let a = p(&[1, 2, 1, 3]);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(json, "[1,2,1,3]");
        let b: Partition = serde_json::from_str(&json).unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<Partition>("[2,1]").is_err());
    }
}
