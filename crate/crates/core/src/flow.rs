//! Maximum flow by shortest augmenting paths (Edmonds–Karp).
//!
//! Capacities are any exact ordered additive type; the core-membership
//! oracle uses `BigInt` after clearing denominators. The number of
//! augmentations is bounded by `O(V·E)` regardless of capacity size.

use std::collections::VecDeque;
use std::ops::{Add, Sub};

use num_traits::Zero;

pub trait Capacity: Clone + Ord + Zero + Add<Output = Self> + Sub<Output = Self> {}

impl<T> Capacity for T where T: Clone + Ord + Zero + Add<Output = T> + Sub<Output = T> {}

#[derive(Debug, Clone)]
struct Edge<C> {
    to: usize,
    rev: usize,
    cap: C,
    initial: C,
}

/// Handle to an edge added with [`FlowNetwork::add_edge`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeId {
    from: usize,
    slot: usize,
}

#[derive(Debug, Clone)]
pub struct FlowNetwork<C> {
    graph: Vec<Vec<Edge<C>>>,
}

impl<C: Capacity> FlowNetwork<C> {
    pub fn new(nodes: usize) -> Self {
        Self {
            graph: vec![Vec::new(); nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.len()
    }

    pub fn add_edge(&mut self, from: usize, to: usize, cap: C) -> EdgeId {
        let slot = self.graph[from].len();
        let rev_slot = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge {
            to,
            rev: rev_slot,
            cap: cap.clone(),
            initial: cap,
        });
        self.graph[to].push(Edge {
            to: from,
            rev: slot,
            cap: C::zero(),
            initial: C::zero(),
        });
        EdgeId { from, slot }
    }

    /// Flow currently pushed through an edge.
    pub fn flow(&self, id: EdgeId) -> C {
        let edge = &self.graph[id.from][id.slot];
        edge.initial.clone() - edge.cap.clone()
    }

    /// Pushes the maximum flow from `source` to `sink` and returns its value.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> C {
        let mut total = C::zero();
        if source == sink {
            return total;
        }
        let n = self.graph.len();
        loop {
            // BFS for a shortest augmenting path; parent holds (node, edge slot)
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
            let mut seen = vec![false; n];
            seen[source] = true;
            let mut queue = VecDeque::from([source]);
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for (slot, e) in self.graph[u].iter().enumerate() {
                    if !seen[e.to] && e.cap > C::zero() {
                        seen[e.to] = true;
                        parent[e.to] = Some((u, slot));
                        queue.push_back(e.to);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }

            let mut bottleneck: Option<C> = None;
            let mut v = sink;
            while let Some((u, slot)) = parent[v] {
                let cap = self.graph[u][slot].cap.clone();
                bottleneck = Some(match bottleneck {
                    Some(b) if b <= cap => b,
                    _ => cap,
                });
                v = u;
            }
            let push = bottleneck.expect("path has at least one edge");

            let mut v = sink;
            while let Some((u, slot)) = parent[v] {
                let rev = self.graph[u][slot].rev;
                let fwd = self.graph[u][slot].cap.clone();
                self.graph[u][slot].cap = fwd - push.clone();
                let back = self.graph[v][rev].cap.clone();
                self.graph[v][rev].cap = back + push.clone();
                v = u;
            }
            total = total + push;
        }
    }
}
