//! Precedence graph extraction and maintenance.
//!
//! Three edge kinds are tracked per box `O`:
//!
//! * top block (TB): `R` sits somewhere in the upward shadow of `O`;
//! * left/right access block (LAB/RAB): `R` occupies the column next to the
//!   corresponding face of `O`, at or above `O`'s bottom. A container wall is
//!   recorded as a self-loop.
//!
//! In 3D the back/front faces are tracked the same way. Tilting about the
//! z axis needs a free x face, tilting about the x axis a free z face.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Result, TapError};
use crate::geom::{Cuboid, Mode, Orientation, SideAxis};
use crate::instance::{validate_instance, ProblemInstance};

/// Blockers of the two opposite faces along one horizontal axis.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SideBlockers {
    /// Left (x) or back (z) face.
    pub neg: BTreeSet<usize>,
    /// Right (x) or front (z) face.
    pub pos: BTreeSet<usize>,
}

impl SideBlockers {
    pub fn accessible(&self) -> bool {
        self.neg.is_empty() || self.pos.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Node {
    pub tb: BTreeSet<usize>,
    pub x: SideBlockers,
    pub z: SideBlockers,
}

impl Node {
    pub fn side(&self, axis: SideAxis) -> &SideBlockers {
        match axis {
            SideAxis::X => &self.x,
            SideAxis::Z => &self.z,
        }
    }
}

/// An oriented state: box index (position in `ProblemInstance::boxes`) plus orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateRef {
    pub box_idx: usize,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrecedenceGraph {
    mode: Mode,
    ids: Vec<u32>,
    nodes: Vec<Node>,
    packed: Vec<bool>,
}

/// Column next to one face of `o`, tested against `r`: any cell of `r` in
/// that column at or above `o`'s bottom.
fn blocks_face(o: &Cuboid, r: &Cuboid, axis: SideAxis, positive: bool) -> bool {
    if r.top() <= o.bottom() {
        return false;
    }
    match axis {
        SideAxis::X => {
            let col = if positive { o.right() as i64 } else { o.left() as i64 - 1 };
            (r.left() as i64) <= col
                && col < r.right() as i64
                && r.back() < o.front()
                && o.back() < r.front()
        }
        SideAxis::Z => {
            let row = if positive { o.front() as i64 } else { o.back() as i64 - 1 };
            (r.back() as i64) <= row
                && row < r.front() as i64
                && r.left() < o.right()
                && o.left() < r.right()
        }
    }
}

impl PrecedenceGraph {
    /// Builds the graph from the initial pile of a valid instance.
    pub fn extract(inst: &ProblemInstance) -> Result<Self> {
        let violations = validate_instance(inst);
        if !violations.is_empty() {
            return Err(TapError::Validation(violations));
        }
        let placed = inst.placements_by_index();
        let cubes: Vec<Cuboid> = placed.iter().map(|p| p.cuboid()).collect();
        let n = cubes.len();
        let mut nodes = vec![Node::default(); n];
        for (i, o) in cubes.iter().enumerate() {
            let node = &mut nodes[i];
            for (j, r) in cubes.iter().enumerate() {
                if i == j {
                    continue;
                }
                if r.overlaps_footprint(o) && r.bottom() >= o.top() {
                    node.tb.insert(j);
                }
                for (axis, side) in [(SideAxis::X, &mut node.x), (SideAxis::Z, &mut node.z)] {
                    if blocks_face(o, r, axis, false) {
                        side.neg.insert(j);
                    }
                    if blocks_face(o, r, axis, true) {
                        side.pos.insert(j);
                    }
                }
            }
            if o.left() == 0 {
                node.x.neg.insert(i);
            }
            if o.right() == inst.init_width {
                node.x.pos.insert(i);
            }
            if o.back() == 0 {
                node.z.neg.insert(i);
            }
            if o.front() == inst.init_depth {
                node.z.pos.insert(i);
            }
            // one open face is enough to rotate, so the opposite face's edges are dropped
            for side in [&mut node.x, &mut node.z] {
                if side.neg.is_empty() {
                    side.pos.clear();
                } else if side.pos.is_empty() {
                    side.neg.clear();
                }
            }
        }
        Ok(Self {
            mode: inst.dims_mode,
            ids: inst.boxes.iter().map(|b| b.id).collect(),
            nodes,
            packed: vec![false; n],
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, idx: usize) -> &Node {
        &self.nodes[idx]
    }

    pub fn id(&self, idx: usize) -> u32 {
        self.ids[idx]
    }

    pub fn is_packed(&self, idx: usize) -> bool {
        self.packed[idx]
    }

    pub fn unpacked(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.packed[i])
    }

    pub fn unpacked_count(&self) -> usize {
        self.packed.iter().filter(|p| !**p).count()
    }

    pub fn top_free(&self, idx: usize) -> bool {
        !self.packed[idx] && self.nodes[idx].tb.is_empty()
    }

    /// Whether the oriented state `(idx, o)` can be transported right now.
    pub fn is_valid(&self, idx: usize, o: Orientation) -> bool {
        if !self.top_free(idx) {
            return false;
        }
        match o.side_requirement(self.mode) {
            None => true,
            Some(axis) => self.nodes[idx].side(axis).accessible(),
        }
    }

    pub fn valid_states(&self) -> Vec<StateRef> {
        let mut out = Vec::new();
        for idx in self.unpacked() {
            for o in Orientation::all(self.mode) {
                if self.is_valid(idx, o) {
                    out.push(StateRef { box_idx: idx, orientation: o });
                }
            }
        }
        out
    }

    /// Marks `idx` as packed and deletes it from every blocker set.
    pub fn remove_box(&mut self, idx: usize) -> Result<()> {
        if idx >= self.len() {
            return Err(TapError::Contract(format!("box index {idx} out of range")));
        }
        if self.packed[idx] {
            return Err(TapError::Feasibility(format!("box {} already packed", self.ids[idx])));
        }
        if !self.nodes[idx].tb.is_empty() {
            return Err(TapError::Feasibility(format!(
                "box {} is blocked from the top by {:?}",
                self.ids[idx],
                self.nodes[idx].tb.iter().map(|&j| self.ids[j]).collect::<Vec<_>>()
            )));
        }
        self.packed[idx] = true;
        for (j, node) in self.nodes.iter_mut().enumerate() {
            if j == idx {
                continue;
            }
            node.tb.remove(&idx);
            for side in [&mut node.x, &mut node.z] {
                side.neg.remove(&idx);
                side.pos.remove(&idx);
            }
        }
        Ok(())
    }

    /// `(removal_count, side_accessible)` used to rank boxes for the rolling window.
    pub fn priority(&self, idx: usize) -> (usize, bool) {
        let node = &self.nodes[idx];
        let side = match self.mode {
            Mode::Two => node.x.accessible(),
            Mode::Three => node.x.accessible() || node.z.accessible(),
        };
        (node.tb.len(), side)
    }

    /// Binary blocker masks, one bit per box, with boxes compacted into
    /// `capacity` slots. Fails if more than `capacity` boxes are unpacked.
    pub fn encode_dynamic(&self, capacity: usize) -> Result<DynamicEncoding> {
        let unpacked = self.unpacked_count();
        if unpacked > capacity {
            return Err(TapError::Capacity { boxes: unpacked, capacity });
        }
        let slots: Vec<Option<usize>> = if self.len() <= capacity {
            (0..self.len()).map(Some).collect()
        } else {
            self.unpacked().map(Some).collect()
        };
        Ok(self.encode_slots(&slots, capacity))
    }

    /// Blocker masks for an explicit slot assignment. `slots[s]` is the box
    /// held by slot `s`; blockers outside the slot set have no bit.
    pub fn encode_slots(&self, slots: &[Option<usize>], capacity: usize) -> DynamicEncoding {
        assert!(slots.len() <= capacity, "more slots than capacity");
        let k = self.mode.orientation_count();
        let mut slot_of = vec![None; self.len()];
        for (s, b) in slots.iter().enumerate() {
            if let Some(b) = b {
                slot_of[*b] = Some(s);
            }
        }
        let mut enc = DynamicEncoding::zeros(capacity, k);
        for (s, b) in slots.iter().enumerate() {
            let Some(b) = *b else { continue };
            if self.packed[b] {
                continue;
            }
            enc.live[s] = true;
            let node = &self.nodes[b];
            for o in Orientation::all(self.mode) {
                let side = node.side(o.side_requirement(self.mode).unwrap_or(SideAxis::X));
                let state = s * k + o.0 as usize;
                for (ch, set) in [(0, &node.tb), (1, &side.neg), (2, &side.pos)] {
                    for &j in set {
                        if let Some(bit) = slot_of[j] {
                            enc.set(state, ch, bit);
                        }
                    }
                }
            }
        }
        enc
    }

    /// Edge list in DOT syntax, for inspection.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph precedence {\n");
        for (i, node) in self.nodes.iter().enumerate() {
            if self.packed[i] {
                continue;
            }
            let _ = writeln!(s, "  {};", self.ids[i]);
            let mut edge = |from: usize, label: &str| {
                let _ = writeln!(s, "  {} -> {} [label={label}];", self.ids[from], self.ids[i]);
            };
            node.tb.iter().for_each(|&j| edge(j, "TB"));
            node.x.neg.iter().for_each(|&j| edge(j, "LAB"));
            node.x.pos.iter().for_each(|&j| edge(j, "RAB"));
            if self.mode == Mode::Three {
                node.z.neg.iter().for_each(|&j| edge(j, "BAB"));
                node.z.pos.iter().for_each(|&j| edge(j, "FAB"));
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Per-state binary blocker codes fed to the encoder.
///
/// State `s` of slot `b` with orientation `o` is `b * k + o`. Each state has
/// three channels (TB, negative side, positive side) of `capacity` bits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DynamicEncoding {
    pub capacity: usize,
    pub orientations: usize,
    /// Slot holds an unpacked box.
    pub live: Vec<bool>,
    bits: Vec<bool>,
}

impl DynamicEncoding {
    pub fn zeros(capacity: usize, orientations: usize) -> Self {
        Self {
            capacity,
            orientations,
            live: vec![false; capacity],
            bits: vec![false; capacity * orientations * 3 * capacity],
        }
    }

    pub fn state_count(&self) -> usize {
        self.capacity * self.orientations
    }

    fn set(&mut self, state: usize, channel: usize, bit: usize) {
        self.bits[(state * 3 + channel) * self.capacity + bit] = true;
    }

    pub fn bit(&self, state: usize, channel: usize, bit: usize) -> bool {
        self.bits[(state * 3 + channel) * self.capacity + bit]
    }

    /// The `3 * capacity` bits of one state, channel-major.
    pub fn state_bits(&self, state: usize) -> &[bool] {
        let w = 3 * self.capacity;
        &self.bits[state * w..(state + 1) * w]
    }

    /// One channel as an integer (bit `j` = slot `j`). Requires capacity <= 128.
    pub fn mask(&self, state: usize, channel: usize) -> u128 {
        assert!(self.capacity <= 128);
        (0..self.capacity)
            .filter(|&j| self.bit(state, channel, j))
            .fold(0u128, |acc, j| acc | (1u128 << j))
    }
}
