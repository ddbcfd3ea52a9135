//! Packing sessions and the baseline sequence generators.
//!
//! A [`Session`] owns the precedence graph, the target containers and the
//! steps taken so far. Every solver (random, greedy, exhaustive, the policy
//! network) drives one.

use rand::Rng;

use crate::container::ContainerState;
use crate::error::{Result, TapError};
use crate::geom::{Extent, Orientation};
use crate::instance::{PlacedBox, ProblemInstance, Solution, SolutionReward, FORMAT_VERSION};
use crate::placement::{select_placement, PlacementRequest, Strategy};
use crate::precedence::{PrecedenceGraph, StateRef};
use crate::reward::{reward, RewardBreakdown};

#[derive(Clone, Debug)]
pub struct Session<'a> {
    inst: &'a ProblemInstance,
    pub graph: PrecedenceGraph,
    pub containers: Vec<ContainerState>,
    pub steps: Vec<PlacedBox>,
    pub strategy: Strategy,
}

impl<'a> Session<'a> {
    pub fn new(inst: &'a ProblemInstance, strategy: Strategy) -> Result<Self> {
        let graph = PrecedenceGraph::extract(inst)?;
        let containers = (0..inst.container_count)
            .map(|k| ContainerState::new(k, inst.target_width, inst.target_depth))
            .collect();
        Ok(Self { inst, graph, containers, steps: Vec::new(), strategy })
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.inst
    }

    pub fn is_done(&self) -> bool {
        self.graph.unpacked_count() == 0
    }

    pub fn oriented(&self, s: StateRef) -> Extent {
        s.orientation.apply(self.inst.dims_mode, self.inst.boxes[s.box_idx].dims)
    }

    /// Oriented footprint fits the target container.
    pub fn fits(&self, s: StateRef) -> bool {
        let d = self.oriented(s);
        d.w <= self.inst.target_width && d.d <= self.inst.target_depth
    }

    /// Valid states whose footprint fits the target.
    pub fn feasible_states(&self) -> Vec<StateRef> {
        self.graph.valid_states().into_iter().filter(|&s| self.fits(s)).collect()
    }

    fn headroom(&self) -> u32 {
        self.graph.unpacked().map(|i| self.inst.boxes[i].dims.max_side()).max().unwrap_or(0)
    }

    /// Where `s` would go if committed now.
    pub fn plan(&self, s: StateRef) -> Result<PlacedBox> {
        if !self.graph.is_valid(s.box_idx, s.orientation) {
            return Err(TapError::Feasibility(format!(
                "state ({}, {}) is not transportable",
                self.graph.id(s.box_idx),
                s.orientation.0
            )));
        }
        let spec = &self.inst.boxes[s.box_idx];
        let container = &self.containers[spec.target_idx as usize];
        let dims = self.oriented(s);
        let req = PlacementRequest { box_id: spec.id, orientation: s.orientation, dims, headroom: self.headroom() };
        let c = select_placement(self.strategy, container, &req)?;
        Ok(PlacedBox {
            box_id: spec.id,
            orientation: s.orientation,
            position: c.position(),
            dims,
            container_idx: spec.target_idx,
        })
    }

    pub fn commit(&mut self, s: StateRef) -> Result<PlacedBox> {
        let placed = self.plan(s)?;
        self.graph.remove_box(s.box_idx)?;
        let placed = self.containers[placed.container_idx as usize].push(placed)?;
        self.steps.push(placed);
        Ok(placed)
    }

    fn container_reward(&self, c: &ContainerState) -> Result<RewardBreakdown> {
        reward(&c.placed, c.width(), c.depth())
    }

    /// Aggregate reward if `extra` were added to its container.
    pub fn reward_with(&self, extra: &PlacedBox) -> Result<RewardBreakdown> {
        let mut parts = Vec::with_capacity(self.containers.len());
        for c in &self.containers {
            if c.index == extra.container_idx {
                let mut placed = c.placed.clone();
                placed.push(*extra);
                parts.push(reward(&placed, c.width(), c.depth())?);
            } else {
                parts.push(self.container_reward(c)?);
            }
        }
        Ok(RewardBreakdown::aggregate(&parts))
    }

    pub fn reward(&self) -> Result<SolutionReward> {
        let per_container = self.containers.iter().map(|c| self.container_reward(c)).collect::<Result<Vec<_>>>()?;
        let aggregate = RewardBreakdown::aggregate(&per_container);
        Ok(SolutionReward { per_container, aggregate })
    }

    pub fn into_solution(self) -> Result<Solution> {
        let reward = self.reward()?;
        Ok(Solution { version: FORMAT_VERSION, steps: self.steps, reward })
    }

    fn stuck(&self) -> TapError {
        TapError::Infeasible(format!("{} boxes left but none can be moved into the target", self.graph.unpacked_count()))
    }
}

/// Picks uniformly among the currently transportable states.
pub fn solve_random<R: Rng + ?Sized>(inst: &ProblemInstance, strategy: Strategy, rng: &mut R) -> Result<Solution> {
    let mut s = Session::new(inst, strategy)?;
    while !s.is_done() {
        let states = s.feasible_states();
        if states.is_empty() {
            return Err(s.stuck());
        }
        let pick = states[rng.random_range(0..states.len())];
        s.commit(pick)?;
    }
    s.into_solution()
}

/// Commits the state with the best partial reward at every step.
///
/// Ties go to the lowest box id, then the lower orientation index.
pub fn solve_greedy(inst: &ProblemInstance, strategy: Strategy) -> Result<Solution> {
    let mut s = Session::new(inst, strategy)?;
    while !s.is_done() {
        let mut states = s.feasible_states();
        if states.is_empty() {
            return Err(s.stuck());
        }
        states.sort_by_key(|st| (s.graph.id(st.box_idx), st.orientation));
        let mut best: Option<(f64, StateRef)> = None;
        for st in states {
            let r = s.reward_with(&s.plan(st)?)?.reward;
            if best.is_none_or(|(b, _)| r > b) {
                best = Some((r, st));
            }
        }
        s.commit(best.expect("non-empty").1)?;
    }
    s.into_solution()
}

/// Largest instance [`solve_exhaustive`] accepts.
pub const EXHAUSTIVE_LIMIT: usize = 6;

/// Best solution over every feasible state sequence. Small instances only.
pub fn solve_exhaustive(inst: &ProblemInstance, strategy: Strategy) -> Result<Solution> {
    if inst.len() > EXHAUSTIVE_LIMIT {
        return Err(TapError::Contract(format!("exhaustive search limited to {EXHAUSTIVE_LIMIT} boxes")));
    }
    fn walk(s: &Session<'_>, best: &mut Option<Solution>) -> Result<()> {
        if s.is_done() {
            let sol = s.clone().into_solution()?;
            if best.as_ref().is_none_or(|b| sol.reward.aggregate.reward > b.reward.aggregate.reward) {
                *best = Some(sol);
            }
            return Ok(());
        }
        for st in s.feasible_states() {
            let mut next = s.clone();
            next.commit(st)?;
            walk(&next, best)?;
        }
        Ok(())
    }
    let s = Session::new(inst, strategy)?;
    let mut best = None;
    walk(&s, &mut best)?;
    best.ok_or_else(|| s.stuck())
}

/// Replays an explicit state sequence, given as `(box id, orientation)`.
pub fn solve_sequence(inst: &ProblemInstance, strategy: Strategy, seq: &[(u32, Orientation)]) -> Result<Solution> {
    let mut s = Session::new(inst, strategy)?;
    for &(id, orientation) in seq {
        let box_idx = inst.index_of(id).ok_or_else(|| TapError::Contract(format!("unknown box {id}")))?;
        s.commit(StateRef { box_idx, orientation })?;
    }
    s.into_solution()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Mode, Point};
    use crate::instance::{fixture_f1, validate_solution, BoxSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lone_box() -> ProblemInstance {
        let mut inst = fixture_f1();
        inst.boxes.truncate(1);
        inst.initial_placements.truncate(1);
        inst.boxes[0].dims = Extent::new2(2, 3);
        inst.initial_placements[0].dims = Extent::new2(2, 3);
        // walls on both sides: no rotation possible
        inst.init_width = 2;
        inst
    }

    #[test]
    fn random_on_f1_is_seeded() {
        let inst = fixture_f1();
        let a = solve_random(&inst, Strategy::Lb, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = solve_random(&inst, Strategy::Lb, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert!(validate_solution(&inst, &a).is_empty());
        // frozen regression: recorded once from this implementation, replay-checked above
        assert_eq!(a.order(), vec![0, 2, 1]);
    }

    #[test]
    fn lone_box_goes_left_unrotated() {
        let inst = lone_box();
        let sol = solve_random(&inst, Strategy::Lb, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(sol.steps.len(), 1);
        assert_eq!(sol.steps[0].orientation, Orientation::IDENTITY);
        assert_eq!(sol.steps[0].position.x, 0);
        let g = solve_greedy(&inst, Strategy::Lb).unwrap();
        assert_eq!(g.steps[0].orientation, Orientation::IDENTITY);
        assert_eq!(g.steps[0].position, Point::new2(0, 0));
    }

    #[test]
    fn greedy_on_f1() {
        let inst = fixture_f1();
        let g = solve_greedy(&inst, Strategy::Lb).unwrap();
        assert!(validate_solution(&inst, &g).is_empty());
        assert_eq!(g, solve_greedy(&inst, Strategy::Lb).unwrap());
        let best = solve_exhaustive(&inst, Strategy::Lb).unwrap();
        assert!(g.reward.aggregate.reward <= best.reward.aggregate.reward + 1e-12);
        // mean of the random baseline over many seeds stays at or below greedy here
        let mean: f64 = (0..200)
            .map(|s| {
                solve_random(&inst, Strategy::Lb, &mut ChaCha8Rng::seed_from_u64(s)).unwrap().reward.aggregate.reward
            })
            .sum::<f64>()
            / 200.0;
        assert!(g.reward.aggregate.reward >= mean);
    }

    #[test]
    fn single_order_instances_agree() {
        // a tower of three identical boxes against both walls: only one order exists
        let mut inst = fixture_f1();
        inst.init_width = 2;
        inst.boxes = (0..3).map(|id| BoxSpec { id, dims: Extent::new2(2, 1), target_idx: 0 }).collect();
        inst.initial_placements = (0..3)
            .map(|id| PlacedBox {
                box_id: id,
                orientation: Orientation::IDENTITY,
                position: Point::new2(0, id),
                dims: Extent::new2(2, 1),
                container_idx: 0,
            })
            .collect();
        let g = solve_greedy(&inst, Strategy::Lb).unwrap();
        let r = solve_random(&inst, Strategy::Lb, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(g.order(), vec![2, 1, 0]);
        assert_eq!(r.order(), g.order());
    }

    #[test]
    fn sequence_replay_rejects_blocked_state() {
        let inst = fixture_f1();
        assert!(solve_sequence(&inst, Strategy::Lb, &[(1, Orientation::IDENTITY)]).is_err());
        let sol = solve_sequence(
            &inst,
            Strategy::Lb,
            &[(2, Orientation::IDENTITY), (1, Orientation::IDENTITY), (0, Orientation(1))],
        )
        .unwrap();
        assert!(validate_solution(&inst, &sol).is_empty());
        assert_eq!(inst.dims_mode, Mode::Two);
    }
}
