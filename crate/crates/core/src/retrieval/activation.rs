//! Spreading activation over a fetched subgraph.
//!
//! Seeds are processed one after another in subgraph order. Each seed is set
//! to 1 and starts its own breadth-first pass with a fresh visited set; on
//! popping a node, every outgoing arc adds `weight * value[node]` to its
//! target, saturating at 1. Values persist across seed passes, so the result
//! depends on seed order.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::graph::EntityId;

use super::Subgraph;

/// Final activation value per subgraph entity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActivationState {
    pub values: BTreeMap<EntityId, f64>,
}

impl ActivationState {
    pub fn value(&self, e: EntityId) -> f64 {
        self.values.get(&e).copied().unwrap_or(0.0)
    }

    /// Entities whose value strictly exceeds `threshold`.
    pub fn above(&self, threshold: f64) -> BTreeSet<EntityId> {
        self.values
            .iter()
            .filter(|(_, &v)| v > threshold)
            .map(|(&e, _)| e)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Activation {
    pub activated: BTreeSet<EntityId>,
    pub state: ActivationState,
}

pub fn spread_activation(subgraph: &Subgraph, tau_a: f64) -> Activation {
    let mut values: BTreeMap<EntityId, f64> =
        subgraph.entities().iter().map(|&e| (e, 0.0)).collect();

    for seed in subgraph.seeds() {
        values.insert(seed.entity, 1.0);
        let mut visited: HashSet<EntityId> = HashSet::new();
        let mut queue = VecDeque::from([seed.entity]);
        while let Some(node) = queue.pop_front() {
            if !visited.insert(node) {
                continue;
            }
            for arc in subgraph.arcs_from(node) {
                let source_value = values[&node];
                let target = values.entry(arc.target).or_insert(0.0);
                *target = (*target + arc.weight * source_value).min(1.0);
                if !visited.contains(&arc.target) {
                    queue.push_back(arc.target);
                }
            }
        }
    }

    let state = ActivationState { values };
    Activation {
        activated: state.above(tau_a),
        state,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: u32) -> EntityId {
        EntityId(i)
    }

    #[test]
    fn no_arcs_activates_only_seeds() {
        let g = Subgraph::from_arcs([e(0), e(1), e(2)], &[e(0), e(2)], &[]);
        let a = spread_activation(&g, 0.5);
        assert_eq!(a.activated, [e(0), e(2)].into_iter().collect());
        assert_eq!(a.state.value(e(1)), 0.0);
    }

    #[test]
    fn chain_hand_trace() {
        // s -> a (0.8) -> b (0.8)
        let g = Subgraph::from_arcs([], &[e(0)], &[(e(0), e(1), 0.8), (e(1), e(2), 0.8)]);
        let a = spread_activation(&g, 0.5);
        assert_eq!(a.state.value(e(0)), 1.0);
        assert!((a.state.value(e(1)) - 0.8).abs() < 1e-12);
        assert!((a.state.value(e(2)) - 0.64).abs() < 1e-12);
        assert_eq!(a.activated.len(), 3);
    }

    #[test]
    fn seed_passes_accumulate_in_order() {
        // s1 -> x (0.3), s2 -> x (0.3), x -> y (0.5)
        let arcs = [(e(0), e(2), 0.3), (e(1), e(2), 0.3), (e(2), e(3), 0.5)];
        let g = Subgraph::from_arcs([], &[e(0), e(1)], &arcs);
        let a = spread_activation(&g, 0.5);
        assert!((a.state.value(e(2)) - 0.6).abs() < 1e-12);
        assert!(a.activated.contains(&e(2)));
        // y got 0.3 * 0.5 in s1's pass and 0.6 * 0.5 in s2's pass.
        assert!((a.state.value(e(3)) - (0.15 + 0.3)).abs() < 1e-12);
    }

    #[test]
    fn saturates_at_one() {
        let arcs = [(e(0), e(1), 0.8), (e(0), e(2), 1.0), (e(2), e(1), 0.7)];
        let g = Subgraph::from_arcs([], &[e(0)], &arcs);
        let a = spread_activation(&g, 0.5);
        assert_eq!(a.state.value(e(1)), 1.0);
    }

    #[test]
    fn seeds_end_at_one_even_when_revisited() {
        let arcs = [(e(0), e(1), 0.9), (e(1), e(0), 0.9)];
        let g = Subgraph::from_arcs([], &[e(0), e(1)], &arcs);
        let a = spread_activation(&g, 0.99);
        assert_eq!(a.state.value(e(0)), 1.0);
        assert_eq!(a.state.value(e(1)), 1.0);
        assert_eq!(a.activated.len(), 2);
    }

    #[test]
    fn empty_subgraph() {
        let a = spread_activation(&Subgraph::default(), 0.5);
        assert!(a.activated.is_empty());
    }
}
