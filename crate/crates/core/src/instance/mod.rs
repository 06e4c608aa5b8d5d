//! Instance data model: a directed graph whose arcs are either tolled or
//! toll-free, plus the commodities routed over it.

mod grid;
mod io;

pub use grid::{generate_grid, GeneratorConfig};
pub(crate) use io::number as json_number;
pub use io::{parse, serialize};

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{NppError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub tail: usize,
    pub head: usize,
    pub cost: f64,
    pub tolled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Commodity {
    pub origin: usize,
    pub destination: usize,
    pub demand: f64,
}

/// A validated network pricing instance. Arc ids are positions in `arcs`,
/// commodity ids are positions in `commodities`, and the tolled arcs are
/// indexed in the order they appear in `arcs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    node_count: usize,
    arcs: Vec<Arc>,
    commodities: Vec<Commodity>,
    tolled: Vec<usize>,
    toll_index: Vec<Option<usize>>,
}

impl Instance {
    /// Builds and validates an instance.
    pub fn new(node_count: usize, arcs: Vec<Arc>, commodities: Vec<Commodity>) -> Result<Self> {
        let tolled: Vec<usize> = (0..arcs.len()).filter(|&a| arcs[a].tolled).collect();
        let mut toll_index = vec![None; arcs.len()];
        for (i, &a) in tolled.iter().enumerate() {
            toll_index[a] = Some(i);
        }
        let inst = Instance { node_count, arcs, commodities, tolled, toll_index };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(NppError::Validation(msg));
        for (id, arc) in self.arcs.iter().enumerate() {
            if arc.tail >= self.node_count || arc.head >= self.node_count {
                return bad(format!(
                    "arc {id} ({} -> {}) references a node outside 0..{}",
                    arc.tail, arc.head, self.node_count
                ));
            }
            if arc.tail == arc.head {
                return bad(format!("arc {id} is a self-loop on node {}", arc.tail));
            }
            if !arc.cost.is_finite() || arc.cost < 0.0 {
                return bad(format!("arc {id} has cost {} (must be finite and >= 0)", arc.cost));
            }
        }
        if !self.arcs.is_empty() && self.tolled.len() == self.arcs.len() {
            return bad("every arc is tolled; at least one toll-free arc is required".into());
        }
        for (k, com) in self.commodities.iter().enumerate() {
            if com.origin >= self.node_count || com.destination >= self.node_count {
                return bad(format!("commodity {k} references a node outside 0..{}", self.node_count));
            }
            if com.origin == com.destination {
                return bad(format!("commodity {k} has identical origin and destination"));
            }
            if !com.demand.is_finite() || com.demand <= 0.0 {
                return bad(format!("commodity {k} has demand {} (must be > 0)", com.demand));
            }
            if self.toll_free_distance(k).is_none() {
                return bad(format!("commodity {k} has no toll-free path"));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn commodities(&self) -> &[Commodity] {
        &self.commodities
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn num_commodities(&self) -> usize {
        self.commodities.len()
    }

    /// Number of tolled arcs.
    pub fn num_tolled(&self) -> usize {
        self.tolled.len()
    }

    /// Arc ids of the tolled arcs, in toll-index order.
    pub fn tolled_arcs(&self) -> &[usize] {
        &self.tolled
    }

    /// Position of arc `a` among the tolled arcs, if it is tolled.
    pub fn toll_index(&self, a: usize) -> Option<usize> {
        self.toll_index[a]
    }

    pub fn has_unit_demands(&self) -> bool {
        self.commodities.iter().all(|c| c.demand == 1.0)
    }

    /// Finite stand-in for an infinite toll: exceeds the cost of any simple
    /// toll-free detour, so no follower ever pays it.
    pub fn toll_cap(&self) -> f64 {
        self.arcs.iter().filter(|a| !a.tolled).map(|a| a.cost).sum::<f64>() + 1.0
    }

    /// Shortest origin-destination cost for commodity `k` using only
    /// toll-free arcs.
    pub fn toll_free_distance(&self, k: usize) -> Option<f64> {
        let c = &self.commodities[k];
        let d = self.distances(c.origin, |_, a| if a.tolled { None } else { Some(a.cost) });
        d[c.destination]
    }

    /// Dijkstra distances from `source` where `weight` returns the length of
    /// an arc or `None` to drop it. Weights must be nonnegative.
    pub fn distances(&self, source: usize, weight: impl Fn(usize, &Arc) -> Option<f64>) -> Vec<Option<f64>> {
        let mut out_arcs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.node_count];
        for (id, arc) in self.arcs.iter().enumerate() {
            if let Some(w) = weight(id, arc) {
                out_arcs[arc.tail].push((arc.head, w));
            }
        }
        let mut dist: Vec<Option<f64>> = vec![None; self.node_count];
        let mut heap = BinaryHeap::new();
        dist[source] = Some(0.0);
        heap.push(HeapItem(0.0, source));
        while let Some(HeapItem(d, v)) = heap.pop() {
            if dist[v].is_some_and(|best| d > best) {
                continue;
            }
            for &(u, w) in &out_arcs[v] {
                let nd = d + w;
                if dist[u].is_none_or(|cur| nd < cur) {
                    dist[u] = Some(nd);
                    heap.push(HeapItem(nd, u));
                }
            }
        }
        dist
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.partial_cmp(&self.0).unwrap_or(Ordering::Equal).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
