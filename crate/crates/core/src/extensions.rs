//! Rolling window for instances above network capacity, and
//! multi-container solving.
//!
//! The window Ω holds at most `capacity` unpacked boxes, ranked by how many
//! boxes still sit on top of them and then by side access. The network only
//! sees Ω; a box outside Ω that blocks a member keeps that member's states
//! invalid until it is packed itself.

use crate::error::{Result, TapError};
use crate::instance::{ProblemInstance, Solution};
use crate::placement::Strategy;
use crate::policy::{run_episode, Choice, Policy, RolloutTrace};
use crate::precedence::PrecedenceGraph;

/// `(removal_count, side_accessible)` of an unpacked box.
pub fn priority(graph: &PrecedenceGraph, idx: usize) -> (usize, bool) {
    graph.priority(idx)
}

fn rank_key(graph: &PrecedenceGraph, idx: usize) -> (usize, bool, u32) {
    let (removal, side) = graph.priority(idx);
    (removal, !side, graph.id(idx))
}

/// Slot assignment of the rolling window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Omega {
    slots: Vec<Option<usize>>,
}

impl Omega {
    pub fn new(graph: &PrecedenceGraph, capacity: usize) -> Self {
        let mut ranked: Vec<usize> = graph.unpacked().collect();
        ranked.sort_by_key(|&i| rank_key(graph, i));
        ranked.truncate(capacity);
        ranked.sort_unstable();
        Self { slots: ranked.into_iter().map(Some).collect() }
    }

    pub fn slots(&self) -> &[Option<usize>] {
        &self.slots
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.slots.iter().flatten().copied()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.slots.contains(&Some(idx))
    }

    /// Number of unpacked members.
    pub fn live(&self, graph: &PrecedenceGraph) -> usize {
        self.members().filter(|&b| !graph.is_packed(b)).count()
    }

    /// Replaces packed members with the best-ranked outside boxes.
    pub fn refill(&mut self, graph: &PrecedenceGraph) {
        let mut outside: Vec<usize> = graph.unpacked().filter(|&b| !self.contains(b)).collect();
        outside.sort_by_key(|&i| std::cmp::Reverse(rank_key(graph, i)));
        for slot in &mut self.slots {
            if slot.is_some_and(|b| graph.is_packed(b)) {
                *slot = outside.pop();
            }
        }
        // Members whose blockers are all outside can stall the window; swap
        // the worst member for an accessible outsider if that happens.
        let stalled = !self.members().any(|b| !graph.is_packed(b) && graph.top_free(b));
        if stalled {
            if let Some(pos) = outside.iter().rposition(|&b| graph.top_free(b)) {
                let worst = self
                    .slots
                    .iter()
                    .enumerate()
                    .filter_map(|(s, b)| b.map(|b| (s, b)))
                    .max_by_key(|&(_, b)| rank_key(graph, b));
                if let Some((s, _)) = worst {
                    self.slots[s] = Some(outside.remove(pos));
                }
            }
        }
    }
}

/// Solves an instance of any size by running the policy over the window.
pub fn rolling_solve(policy: &Policy, inst: &ProblemInstance, strategy: Strategy, choice: Choice<'_>) -> Result<(Solution, RolloutTrace)> {
    let ep = run_episode(policy, inst, strategy, choice, true)?;
    Ok((ep.solution, ep.trace))
}

/// Policy rollout over `k >= 2` containers; each box goes to its assigned container.
pub fn solve_multi(policy: &Policy, inst: &ProblemInstance, strategy: Strategy, choice: Choice<'_>) -> Result<(Solution, RolloutTrace)> {
    if inst.container_count < 2 {
        return Err(TapError::Contract(format!("multi-container solve needs k >= 2, got {}", inst.container_count)));
    }
    let ep = run_episode(policy, inst, strategy, choice, true)?;
    Ok((ep.solution, ep.trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixture_f1;

    #[test]
    fn f1_priorities() {
        let g = PrecedenceGraph::extract(&fixture_f1()).unwrap();
        assert_eq!(priority(&g, 0), (0, false));
        assert_eq!(priority(&g, 1), (1, false));
        assert_eq!(priority(&g, 2), (0, false));
    }

    #[test]
    fn window_takes_best_ranked_and_refills() {
        let g0 = PrecedenceGraph::extract(&fixture_f1()).unwrap();
        let mut w = Omega::new(&g0, 2);
        assert_eq!(w.slots(), &[Some(0), Some(2)]);
        let mut g = g0.clone();
        g.remove_box(2).unwrap();
        w.refill(&g);
        assert_eq!(w.slots(), &[Some(0), Some(1)]);
        g.remove_box(0).unwrap();
        w.refill(&g);
        assert_eq!(w.slots(), &[None, Some(1)]);
        assert_eq!(w.live(&g), 1);
    }
}
