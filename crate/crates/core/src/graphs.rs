//! Multigraph obtained by reading a partition two items at a time: items
//! `2i-1` and `2i` form an undirected edge between their clusters.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::partition::Partition;

/// Undirected multigraph on vertices `1..=vertex_count`; self-loops and
/// parallel edges allowed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Multigraph {
    /// 1-based endpoints.
    pub edges: Vec<(u32, u32)>,
    pub vertex_count: usize,
    /// Set when the partition had odd length and its last item was dropped.
    pub dropped_last: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeStats {
    /// Degree of vertex `j+1`; a self-loop adds 2.
    pub degrees: Vec<u64>,
    /// `r -> number of vertices of degree r`.
    pub histogram: BTreeMap<u64, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphSummary {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub self_loops: usize,
    pub dropped_last: bool,
    pub degree_histogram: BTreeMap<u64, usize>,
}

pub fn partition_to_multigraph(p: &Partition) -> Result<Multigraph> {
    if p.len() < 2 {
        return Err(domain("a multigraph needs at least two items"));
    }
    let used = p.len() - p.len() % 2;
    let edges: Vec<(u32, u32)> = (0..used).step_by(2).map(|i| (p.label(i), p.label(i + 1))).collect();
    let vertex_count = edges.iter().map(|&(u, v)| u.max(v)).max().unwrap_or(0) as usize;
    Ok(Multigraph {
        edges,
        vertex_count,
        dropped_last: used < p.len(),
    })
}

pub fn degree_stats(g: &Multigraph) -> DegreeStats {
    let mut degrees = vec![0u64; g.vertex_count];
    for &(u, v) in &g.edges {
        degrees[u as usize - 1] += 1;
        degrees[v as usize - 1] += 1;
    }
    let mut histogram = BTreeMap::new();
    for &d in &degrees {
        *histogram.entry(d).or_insert(0) += 1;
    }
    DegreeStats { degrees, histogram }
}

impl Multigraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// One `u v` line per edge.
    pub fn edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 8);
        for &(u, v) in &self.edges {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            vertex_count: self.vertex_count,
            edge_count: self.edges.len(),
            self_loops: self.edges.iter().filter(|(u, v)| u == v).count(),
            dropped_last: self.dropped_last,
            degree_histogram: degree_stats(self).histogram,
        }
    }
}
