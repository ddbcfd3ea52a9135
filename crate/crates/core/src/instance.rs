//! Problem instances, solutions and their JSON schema.
//!
//! Format version 1. Every coordinate and extent is an integer. In 2D the
//! `d`/`z` components and the `*_depth` fields are omitted.
//!
//! A box's `dims` describe it as it sits in the initial pile, so initial
//! placements always carry orientation 0. Solution steps carry the
//! orientation applied during transport.
//!
//! ```json
//! {
//!   "version": 1,
//!   "dims_mode": 2,
//!   "init_width": 4,
//!   "target_width": 5,
//!   "container_count": 1,
//!   "boxes": [{"id": 0, "dims": {"w": 2, "h": 2}}],
//!   "initial_placements": [
//!     {"box_id": 0, "orientation": 0, "position": {"x": 0, "y": 0}, "dims": {"w": 2, "h": 2}}
//!   ]
//! }
//! ```

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, TapError};
use crate::geom::{Cuboid, Extent, Mode, Orientation, Point, SideAxis};
use crate::reward::RewardBreakdown;

pub const FORMAT_VERSION: u32 = 1;

fn one() -> u32 {
    1
}
fn is_one(v: &u32) -> bool {
    *v == 1
}
fn is_zero(v: &u32) -> bool {
    *v == 0
}
fn version() -> u32 {
    FORMAT_VERSION
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub id: u32,
    pub dims: Extent,
    /// Index of the target container this box must end up in.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub target_idx: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacedBox {
    pub box_id: u32,
    pub orientation: Orientation,
    pub position: Point,
    /// Extents after applying `orientation`.
    pub dims: Extent,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub container_idx: u32,
}

impl PlacedBox {
    pub fn cuboid(&self) -> Cuboid {
        Cuboid::new(self.position, self.dims)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemInstance {
    #[serde(default = "version")]
    pub version: u32,
    pub dims_mode: Mode,
    pub init_width: u32,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub init_depth: u32,
    pub target_width: u32,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub target_depth: u32,
    #[serde(default = "one")]
    pub container_count: u32,
    pub boxes: Vec<BoxSpec>,
    pub initial_placements: Vec<PlacedBox>,
}

impl ProblemInstance {
    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.boxes.iter().position(|b| b.id == id)
    }

    /// Initial placement of each box, ordered like `boxes`.
    ///
    /// Panics if the instance has not been validated.
    pub fn placements_by_index(&self) -> Vec<PlacedBox> {
        let by_id: HashMap<u32, &PlacedBox> = self.initial_placements.iter().map(|p| (p.box_id, p)).collect();
        self.boxes.iter().map(|b| *by_id[&b.id]).collect()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let inst: ProblemInstance = serde_json::from_str(s)?;
        if inst.version != FORMAT_VERSION {
            return Err(TapError::Format(format!("instance version {}", inst.version)));
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

/// Reward of one solution: one breakdown per target container plus the aggregate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReward {
    pub per_container: Vec<RewardBreakdown>,
    pub aggregate: RewardBreakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    #[serde(default = "version")]
    pub version: u32,
    /// Transport sequence; each entry is the final resting place of one box.
    pub steps: Vec<PlacedBox>,
    pub reward: SolutionReward,
}

impl Solution {
    pub fn from_json(s: &str) -> Result<Self> {
        let sol: Solution = serde_json::from_str(s)?;
        if sol.version != FORMAT_VERSION {
            return Err(TapError::Format(format!("solution version {}", sol.version)));
        }
        Ok(sol)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn order(&self) -> Vec<u32> {
        self.steps.iter().map(|s| s.box_id).collect()
    }
}

/// Checks every structural invariant of `inst`; returns one message per violation.
pub fn validate_instance(inst: &ProblemInstance) -> Vec<String> {
    let mut out = Vec::new();
    let mode = inst.dims_mode;
    if inst.version != FORMAT_VERSION {
        out.push(format!("version {} unsupported", inst.version));
    }
    if inst.init_width == 0 || inst.target_width == 0 || inst.init_depth == 0 || inst.target_depth == 0 {
        out.push("container extent<1".to_string());
    }
    if mode == Mode::Two && (inst.init_depth != 1 || inst.target_depth != 1) {
        out.push("2D containers must have depth 1".to_string());
    }
    if inst.container_count == 0 {
        out.push("container_count<1".to_string());
    }

    let mut ids = HashSet::new();
    for b in &inst.boxes {
        if !ids.insert(b.id) {
            out.push(format!("duplicate id: {}", b.id));
        }
        if b.dims.w == 0 || b.dims.h == 0 || b.dims.d == 0 {
            out.push(format!("extent<1: {}", b.id));
        }
        if mode == Mode::Two && b.dims.d != 1 {
            out.push(format!("2D box with depth: {}", b.id));
        }
        if b.target_idx >= inst.container_count {
            out.push(format!("target_idx out of range: {}", b.id));
        }
    }

    let spec: HashMap<u32, &BoxSpec> = inst.boxes.iter().map(|b| (b.id, b)).collect();
    let mut seen = HashSet::new();
    for p in &inst.initial_placements {
        let Some(b) = spec.get(&p.box_id) else {
            out.push(format!("unknown box: {}", p.box_id));
            continue;
        };
        if !seen.insert(p.box_id) {
            out.push(format!("placed twice: {}", p.box_id));
        }
        if p.orientation != Orientation::IDENTITY || p.dims != b.dims {
            out.push(format!("dims mismatch: {}", p.box_id));
        }
        let c = p.cuboid();
        if c.right() > inst.init_width || c.front() > inst.init_depth {
            out.push(format!("out of bounds: {}", p.box_id));
        }
        if mode == Mode::Two && p.position.z != 0 {
            out.push(format!("2D placement with z: {}", p.box_id));
        }
    }
    for b in &inst.boxes {
        if !seen.contains(&b.id) {
            out.push(format!("missing placement: {}", b.id));
        }
    }
    for (i, a) in inst.initial_placements.iter().enumerate() {
        for b in &inst.initial_placements[i + 1..] {
            if a.cuboid().intersects(&b.cuboid()) {
                out.push(format!("overlap: {},{}", a.box_id, b.box_id));
            }
        }
    }
    out
}

/// Geometric accessibility of `o` among the boxes still in the initial pile.
///
/// Works directly on cells and positions, independently of the precedence
/// graph, so it can serve as an oracle for it.
pub(crate) fn pile_access(inst: &ProblemInstance, remaining: &[PlacedBox], o: &PlacedBox) -> (bool, [bool; 2], [bool; 2]) {
    let oc = o.cuboid();
    let top_free = !remaining.iter().any(|r| {
        let rc = r.cuboid();
        r.box_id != o.box_id && rc.overlaps_footprint(&oc) && rc.bottom() >= oc.top()
    });
    // a side column is free if no remaining box has a cell in it at or above o's bottom
    let column_free = |x: i64, z_lo: i64, z_hi: i64, x_axis: bool| -> bool {
        let (lim, lo, hi) = if x_axis {
            (inst.init_width as i64, z_lo, z_hi)
        } else {
            (inst.init_depth as i64, z_lo, z_hi)
        };
        if x < 0 || x >= lim {
            return false;
        }
        !remaining.iter().any(|r| {
            if r.box_id == o.box_id {
                return false;
            }
            let rc = r.cuboid();
            let (a_lo, a_hi, b_lo, b_hi) = if x_axis {
                (rc.left() as i64, rc.right() as i64, rc.back() as i64, rc.front() as i64)
            } else {
                (rc.back() as i64, rc.front() as i64, rc.left() as i64, rc.right() as i64)
            };
            a_lo <= x && x < a_hi && b_lo < hi && lo < b_hi && rc.top() > oc.bottom()
        })
    };
    let x_sides = [
        column_free(oc.left() as i64 - 1, oc.back() as i64, oc.front() as i64, true),
        column_free(oc.right() as i64, oc.back() as i64, oc.front() as i64, true),
    ];
    let z_sides = [
        column_free(oc.back() as i64 - 1, oc.left() as i64, oc.right() as i64, false),
        column_free(oc.front() as i64, oc.left() as i64, oc.right() as i64, false),
    ];
    (top_free, x_sides, z_sides)
}

/// Replays `sol` against `inst` and reports every violated rule.
///
/// Checks: each box moved exactly once; top access and (for rotated states)
/// side access in the remaining pile at the time of the move; oriented
/// extents; target container assignment; in-bounds footprint; the box rests
/// exactly where gravity puts it; no overlap in the target.
pub fn validate_solution(inst: &ProblemInstance, sol: &Solution) -> Vec<String> {
    let mut out = Vec::new();
    let mode = inst.dims_mode;
    let mut remaining = inst.initial_placements.clone();
    let spec: HashMap<u32, &BoxSpec> = inst.boxes.iter().map(|b| (b.id, b)).collect();
    let mut packed: Vec<Vec<PlacedBox>> = vec![Vec::new(); inst.container_count as usize];

    for (t, step) in sol.steps.iter().enumerate() {
        let Some(pos) = remaining.iter().position(|p| p.box_id == step.box_id) else {
            out.push(format!("step {t}: box {} not in pile", step.box_id));
            continue;
        };
        let origin = remaining[pos];
        let (top, xs, zs) = pile_access(inst, &remaining, &origin);
        if !top {
            out.push(format!("step {t}: box {} is top-blocked", step.box_id));
        }
        match step.orientation.side_requirement(mode) {
            None => {}
            Some(SideAxis::X) if xs[0] || xs[1] => {}
            Some(SideAxis::Z) if zs[0] || zs[1] => {}
            Some(_) => out.push(format!("step {t}: box {} rotated without side access", step.box_id)),
        }
        remaining.remove(pos);

        let b = spec[&step.box_id];
        if !step.orientation.is_valid(mode) || step.orientation.apply(mode, b.dims) != step.dims {
            out.push(format!("step {t}: dims mismatch for box {}", step.box_id));
            continue;
        }
        if step.container_idx != b.target_idx || step.container_idx >= inst.container_count {
            out.push(format!("step {t}: box {} in wrong container", step.box_id));
            continue;
        }
        let c = step.cuboid();
        if c.right() > inst.target_width || c.front() > inst.target_depth {
            out.push(format!("step {t}: box {} out of bounds", step.box_id));
            continue;
        }
        let bin = &mut packed[step.container_idx as usize];
        let rest = bin
            .iter()
            .filter(|p| p.cuboid().overlaps_footprint(&c))
            .map(|p| p.cuboid().top())
            .max()
            .unwrap_or(0);
        if rest != c.bottom() {
            out.push(format!("step {t}: box {} at y={} but rests at y={rest}", step.box_id, c.bottom()));
        }
        if bin.iter().any(|p| p.cuboid().intersects(&c)) {
            out.push(format!("step {t}: box {} overlaps", step.box_id));
        }
        bin.push(*step);
    }
    for p in &remaining {
        out.push(format!("box {} never moved", p.box_id));
    }
    out
}

/// Fixture used across the test-suite: a 2D pile of width 4.
///
/// ```text
///  y=2  . . C C
///  y=1  A A C C
///  y=0  A A B B
/// ```
pub fn fixture_f1() -> ProblemInstance {
    let boxes = vec![
        BoxSpec { id: 0, dims: Extent::new2(2, 2), target_idx: 0 },
        BoxSpec { id: 1, dims: Extent::new2(2, 1), target_idx: 0 },
        BoxSpec { id: 2, dims: Extent::new2(2, 2), target_idx: 0 },
    ];
    let at = |id: u32, x: u32, y: u32, dims: Extent| PlacedBox {
        box_id: id,
        orientation: Orientation::IDENTITY,
        position: Point::new2(x, y),
        dims,
        container_idx: 0,
    };
    ProblemInstance {
        version: FORMAT_VERSION,
        dims_mode: Mode::Two,
        init_width: 4,
        init_depth: 1,
        target_width: 5,
        target_depth: 1,
        container_count: 1,
        initial_placements: vec![
            at(0, 0, 0, boxes[0].dims),
            at(1, 2, 0, boxes[1].dims),
            at(2, 2, 1, boxes[2].dims),
        ],
        boxes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(inst: &ProblemInstance) -> Vec<Vec<Option<u32>>> {
        // brute-force occupancy grid
        let h = inst.initial_placements.iter().map(|p| p.cuboid().top()).max().unwrap_or(0);
        let mut g = vec![vec![None; inst.init_width as usize]; h as usize];
        for p in &inst.initial_placements {
            let c = p.cuboid();
            for y in c.bottom()..c.top() {
                for x in c.left()..c.right() {
                    assert!(g[y as usize][x as usize].is_none(), "cell ({x},{y}) doubly occupied");
                    g[y as usize][x as usize] = Some(p.box_id);
                }
            }
        }
        g
    }

    #[test]
    fn f1_is_valid() {
        let f1 = fixture_f1();
        assert!(validate_instance(&f1).is_empty());
        let g = cells(&f1);
        assert_eq!(g[0], vec![Some(0), Some(0), Some(1), Some(1)]);
        assert_eq!(g[2], vec![None, None, Some(2), Some(2)]);
    }

    #[test]
    fn overlap_is_reported() {
        let mut f1 = fixture_f1();
        f1.initial_placements[2].position.y = 0;
        assert_eq!(validate_instance(&f1), vec!["overlap: 1,2".to_string()]);
    }

    #[test]
    fn zero_extent_is_reported() {
        let mut f1 = fixture_f1();
        f1.boxes[1].dims.h = 0;
        f1.initial_placements[1].dims.h = 0;
        assert_eq!(validate_instance(&f1), vec!["extent<1: 1".to_string()]);
    }

    #[test]
    fn missing_and_duplicate_placements() {
        let mut f1 = fixture_f1();
        f1.initial_placements.pop();
        assert_eq!(validate_instance(&f1), vec!["missing placement: 2".to_string()]);
        let mut f1 = fixture_f1();
        f1.boxes[2].id = 1;
        assert!(validate_instance(&f1).iter().any(|v| v.starts_with("duplicate id")));
    }

    #[test]
    fn instance_json_round_trip() {
        let f1 = fixture_f1();
        let s = f1.to_json();
        assert!(!s.contains("\"d\""));
        assert_eq!(ProblemInstance::from_json(&s).unwrap(), f1);
    }
}
