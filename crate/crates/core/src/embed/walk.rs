use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{ExtendedKG, NeighborLists, NodeId};
use crate::seed;

/// Second-order random walk parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkParams {
    /// `p`: unnormalized weight `1/p` for stepping back to the previous node.
    pub return_bias: f64,
    /// `q`: unnormalized weight `1/q` for moving away from the previous node.
    pub inout_bias: f64,
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            return_bias: 1.0,
            inout_bias: 1.0,
            walk_length: 40,
            walks_per_node: 10,
            seed: 0,
        }
    }
}

impl WalkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.return_bias > 0.0 && self.return_bias.is_finite()) {
            return Err(Error::param("n2v.p", "must be positive"));
        }
        if !(self.inout_bias > 0.0 && self.inout_bias.is_finite()) {
            return Err(Error::param("n2v.q", "must be positive"));
        }
        if self.walk_length < 2 {
            return Err(Error::param("n2v.walk_length", "must be at least 2"));
        }
        if self.walks_per_node < 1 {
            return Err(Error::param("n2v.walks_per_node", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WalkCorpus {
    pub walks: Vec<Vec<NodeId>>,
}

impl WalkCorpus {
    pub fn token_count(&self) -> usize {
        self.walks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }
}

/// Unnormalized transition weights out of `current`. Without a previous node
/// the step is first-order (all weights 1).
pub fn transition_weights(
    lists: &NeighborLists,
    previous: Option<usize>,
    current: usize,
    params: &WalkParams,
) -> Vec<(usize, f64)> {
    lists
        .neighbors(current)
        .iter()
        .map(|&x| {
            let w = match previous {
                None => 1.0,
                Some(prev) if x == prev => 1.0 / params.return_bias,
                Some(prev) if lists.has_edge(prev, x) => 1.0,
                Some(_) => 1.0 / params.inout_bias,
            };
            (x, w)
        })
        .collect()
}

/// Sample the next node of a walk; `None` when `current` has no neighbors.
pub fn next_step<R: Rng>(
    lists: &NeighborLists,
    previous: Option<usize>,
    current: usize,
    params: &WalkParams,
    rng: &mut R,
) -> Option<usize> {
    let nbrs = lists.neighbors(current);
    if nbrs.is_empty() {
        return None;
    }
    let weights = transition_weights(lists, previous, current, params);
    let total: f64 = weights.iter().map(|&(_, w)| w).sum();
    let mut u = rng.random::<f64>() * total;
    for &(x, w) in &weights {
        if u < w {
            return Some(x);
        }
        u -= w;
    }
    weights.last().map(|&(x, _)| x)
}

/// `walks_per_node` biased walks from every node, round-major. Each walk has
/// its own stream derived from `(seed, node, round)`, so the corpus does not
/// depend on generation order.
pub fn walks_on(lists: &NeighborLists, params: &WalkParams) -> Result<WalkCorpus> {
    params.validate()?;
    let n = lists.node_count();
    if n == 0 {
        return Err(Error::EmptyInput("walk graph has no nodes"));
    }
    let mut walks = Vec::with_capacity(n * params.walks_per_node);
    for round in 0..params.walks_per_node {
        for start in 0..n {
            if lists.degree(start) == 0 {
                walks.push(vec![NodeId(start)]);
                continue;
            }
            let mut rng = seed::rng(seed::derive_seed_indexed(
                params.seed,
                start as u64,
                round as u64,
            ));
            let mut walk = Vec::with_capacity(params.walk_length);
            walk.push(NodeId(start));
            let mut previous = None;
            let mut current = start;
            while walk.len() < params.walk_length {
                let Some(next) = next_step(lists, previous, current, params, &mut rng) else {
                    break;
                };
                walk.push(NodeId(next));
                previous = Some(current);
                current = next;
            }
            walks.push(walk);
        }
    }
    Ok(WalkCorpus { walks })
}

pub fn node2vec_walks(graph: &ExtendedKG, params: &WalkParams) -> Result<WalkCorpus> {
    walks_on(&graph.neighbor_lists(), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    fn lists(n: usize, edges: &[(usize, usize)]) -> NeighborLists {
        let set: BTreeSet<_> = edges.iter().map(|&(a, b)| (NodeId(a), NodeId(b))).collect();
        NeighborLists::from_edges(n, &set)
    }

    #[test]
    fn return_probability_on_a_path() {
        // a=0, b=1, c=2; at b having come from a.
        let g = lists(3, &[(0, 1), (1, 2)]);
        let params = WalkParams {
            return_bias: 0.25,
            inout_bias: 4.0,
            ..WalkParams::default()
        };
        let w = transition_weights(&g, Some(0), 1, &params);
        assert_eq!(w, vec![(0, 4.0), (2, 0.25)]);
        let p_return: f64 = w[0].1 / (w[0].1 + w[1].1);
        assert!((p_return - 0.941_176_470_588).abs() < 1e-9);
    }

    #[test]
    fn uniform_on_triangle_when_unbiased() {
        let g = lists(3, &[(0, 1), (1, 2), (0, 2)]);
        let params = WalkParams::default();
        let mut rng = seed::rng(11);
        let mut counts = [0usize; 3];
        let steps = 100_000;
        for _ in 0..steps {
            counts[next_step(&g, Some(0), 1, &params, &mut rng).unwrap()] += 1;
        }
        assert_eq!(counts[1], 0);
        let l1 = (counts[0] as f64 / steps as f64 - 0.5).abs()
            + (counts[2] as f64 / steps as f64 - 0.5).abs();
        assert!(l1 < 0.02, "L1 {l1}");
    }

    #[test]
    fn isolated_node_walks_are_singletons() {
        let g = lists(3, &[(0, 1)]);
        let corpus = walks_on(&g, &WalkParams { walks_per_node: 2, ..WalkParams::default() }).unwrap();
        assert_eq!(corpus.walks.len(), 6);
        let singles: Vec<_> = corpus.walks.iter().filter(|w| w.len() == 1).collect();
        assert_eq!(singles.len(), 2);
        assert!(singles.iter().all(|w| w[0] == NodeId(2)));
    }

    #[test]
    fn walks_follow_edges_and_are_deterministic() {
        let g = lists(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)]);
        let params = WalkParams { return_bias: 0.5, inout_bias: 2.0, walk_length: 15, walks_per_node: 3, seed: 4 };
        let a = walks_on(&g, &params).unwrap();
        for w in &a.walks {
            assert_eq!(w.len(), 15);
            for pair in w.windows(2) {
                assert!(g.has_edge(pair[0].0, pair[1].0));
            }
        }
        assert_eq!(a, walks_on(&g, &params).unwrap());
    }

    #[test]
    fn invalid_params_rejected() {
        let g = lists(2, &[(0, 1)]);
        for bad in [
            WalkParams { return_bias: 0.0, ..WalkParams::default() },
            WalkParams { inout_bias: -1.0, ..WalkParams::default() },
            WalkParams { walk_length: 1, ..WalkParams::default() },
            WalkParams { walks_per_node: 0, ..WalkParams::default() },
        ] {
            assert!(walks_on(&g, &bad).is_err());
        }
    }
}
