//! Position selection for a chosen oriented box.
//!
//! * LB tries the bottom-left corner of every empty maximal space (EMS) and
//!   keeps the one with the best packing reward.
//! * MUL tries every bottom corner of every EMS, scored the same way.
//! * MACS tries the MUL corners and keeps the one leaving the largest single
//!   empty region.
//!
//! Ties go to the lower `y`, then lower `x`, then lower `z`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::container::{ContainerState, EmptySpace, HeightMap};
use crate::error::{Result, TapError};
use crate::geom::{Extent, Orientation, Point};
use crate::instance::PlacedBox;
use crate::reward::reward;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Lb,
    Mul,
    Macs,
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lb" => Ok(Self::Lb),
            "mul" => Ok(Self::Mul),
            "macs" => Ok(Self::Macs),
            _ => Err(format!("unknown placement {s:?} (lb|mul|macs)")),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(match self {
            Strategy::Lb => "lb",
            Strategy::Mul => "mul",
            Strategy::Macs => "macs",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlacementCandidate {
    pub x: u32,
    pub z: u32,
    /// Resting height from the drop.
    pub y: u32,
    pub source: EmptySpace,
    pub score: f64,
}

impl PlacementCandidate {
    pub fn position(&self) -> Point {
        Point::new3(self.x, self.y, self.z)
    }
}

fn spaces_for(hm: &HeightMap, dims: Extent) -> Result<Vec<EmptySpace>> {
    if dims.w > hm.width() || dims.d > hm.depth() {
        return Err(TapError::Infeasible(format!(
            "{}x{} footprint does not fit a {}x{} container",
            dims.w,
            dims.d,
            hm.width(),
            hm.depth()
        )));
    }
    // any ceiling above the skyline yields the same footprints
    let spaces = hm.compute_ems(hm.max() + dims.h.max(1))?;
    Ok(spaces.into_iter().filter(|s| s.ext.w >= dims.w && s.ext.d >= dims.d).collect())
}

fn collect(hm: &HeightMap, dims: Extent, corners: impl Iterator<Item = (u32, u32, EmptySpace)>) -> Result<Vec<PlacementCandidate>> {
    let mut out: Vec<PlacementCandidate> = Vec::new();
    for (x, z, source) in corners {
        if out.iter().any(|c| c.x == x && c.z == z) {
            continue;
        }
        let y = hm.drop_height(x, z, dims)?;
        out.push(PlacementCandidate { x, z, y, source, score: 0.0 });
    }
    if out.is_empty() {
        return Err(TapError::Infeasible("no empty space fits the box".into()));
    }
    Ok(out)
}

/// Bottom-left corner of every EMS wide enough for `dims`.
pub fn candidates_lb(state: &ContainerState, dims: Extent) -> Result<Vec<PlacementCandidate>> {
    let hm = &state.heights;
    let spaces = spaces_for(hm, dims)?;
    collect(hm, dims, spaces.into_iter().map(|s| (s.pos.x, s.pos.z, s)))
}

/// Every bottom corner of every EMS wide enough for `dims`.
pub fn candidates_mul(state: &ContainerState, dims: Extent) -> Result<Vec<PlacementCandidate>> {
    let hm = &state.heights;
    let spaces = spaces_for(hm, dims)?;
    let corners = spaces.into_iter().flat_map(move |s| {
        let xs = [s.pos.x, s.pos.x + s.ext.w - dims.w];
        let zs = [s.pos.z, s.pos.z + s.ext.d - dims.d];
        xs.into_iter().flat_map(move |x| zs.into_iter().map(move |z| (x, z, s)))
    });
    collect(hm, dims, corners)
}

/// Usable empty space left above a height map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConvexSpace {
    /// Volume of the largest single EMS.
    pub largest: u64,
    /// Sum over all EMS, used only to break ties.
    pub total: u64,
}

pub fn accessible_convex_space(hm: &HeightMap, ceiling: u32) -> Result<ConvexSpace> {
    let spaces = hm.compute_ems(ceiling)?;
    Ok(ConvexSpace {
        largest: spaces.iter().map(EmptySpace::volume).max().unwrap_or(0),
        total: spaces.iter().map(EmptySpace::volume).sum(),
    })
}

fn better(a: &PlacementCandidate, b: &PlacementCandidate) -> bool {
    match a.score.partial_cmp(&b.score).unwrap_or(Ordering::Equal) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => (a.y, a.x, a.z) < (b.y, b.x, b.z),
    }
}

/// What the strategy needs to know about the box being placed.
#[derive(Clone, Copy, Debug)]
pub struct PlacementRequest {
    pub box_id: u32,
    pub orientation: Orientation,
    pub dims: Extent,
    /// Largest side over this box and every box still to be packed; sets
    /// the evaluation ceiling for MACS.
    pub headroom: u32,
}

/// Picks a position for the box in `state`.
pub fn select_placement(strategy: Strategy, state: &ContainerState, req: &PlacementRequest) -> Result<PlacementCandidate> {
    let dims = req.dims;
    let mut cands = match strategy {
        Strategy::Lb => candidates_lb(state, dims)?,
        Strategy::Mul | Strategy::Macs => candidates_mul(state, dims)?,
    };
    let hm = &state.heights;
    let mut tie_total = vec![0u64; cands.len()];
    let mut placed = state.placed.clone();
    for (i, c) in cands.iter_mut().enumerate() {
        match strategy {
            Strategy::Lb | Strategy::Mul => {
                placed.push(PlacedBox {
                    box_id: req.box_id,
                    orientation: req.orientation,
                    position: c.position(),
                    dims,
                    container_idx: state.index,
                });
                c.score = reward(&placed, hm.width(), hm.depth())?.reward;
                placed.pop();
            }
            Strategy::Macs => {
                let ceiling = hm.max() + req.headroom.max(dims.h);
                let after = hm.place(c.x, c.z, dims)?;
                let space = accessible_convex_space(&after, ceiling)?;
                c.score = space.largest as f64;
                tie_total[i] = space.total;
            }
        }
    }
    let mut best = 0;
    for i in 1..cands.len() {
        let (a, b) = (&cands[i], &cands[best]);
        let wins = if strategy == Strategy::Macs && a.score == b.score && tie_total[i] != tie_total[best] {
            tie_total[i] > tie_total[best]
        } else {
            better(a, b)
        };
        if wins {
            best = i;
        }
    }
    Ok(cands[best])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point;

    fn ledge() -> ContainerState {
        // a 2x2 box in the left corner: heights [2, 2, 0, 0, 0]
        let mut st = ContainerState::new(0, 5, 1);
        st.push(PlacedBox {
            box_id: 9,
            orientation: Orientation::IDENTITY,
            position: Point::new2(0, 0),
            dims: Extent::new2(2, 2),
            container_idx: 0,
        })
        .unwrap();
        st
    }

    fn xs(c: &[PlacementCandidate]) -> Vec<(u32, u32)> {
        let mut v: Vec<_> = c.iter().map(|c| (c.x, c.y)).collect();
        v.sort();
        v
    }

    fn req(dims: Extent) -> PlacementRequest {
        PlacementRequest { box_id: 0, orientation: Orientation::IDENTITY, dims, headroom: dims.max_side() }
    }

    #[test]
    fn lb_candidates() {
        let st = ledge();
        assert_eq!(xs(&candidates_lb(&st, Extent::new2(2, 1)).unwrap()), vec![(0, 2), (2, 0)]);
        let flat = ContainerState::new(0, 5, 1);
        assert_eq!(xs(&candidates_lb(&flat, Extent::new2(2, 1)).unwrap()), vec![(0, 0)]);
        assert!(matches!(candidates_lb(&flat, Extent::new2(6, 1)), Err(TapError::Infeasible(_))));
    }

    #[test]
    fn mul_candidates() {
        let st = ledge();
        assert_eq!(xs(&candidates_mul(&st, Extent::new2(2, 1)).unwrap()), vec![(0, 2), (2, 0), (3, 0)]);
        let exact = ContainerState::new(0, 2, 1);
        assert_eq!(candidates_mul(&exact, Extent::new2(2, 1)).unwrap().len(), 1);
        let flat3 = ContainerState::new(0, 2, 2);
        assert_eq!(candidates_mul(&flat3, Extent::new3(1, 1, 1)).unwrap().len(), 4);
    }

    #[test]
    fn convex_space_examples() {
        let hm = HeightMap::from_heights(vec![2, 2, 0, 0, 0]);
        assert_eq!(accessible_convex_space(&hm, 4).unwrap().largest, 12);
        assert_eq!(accessible_convex_space(&HeightMap::new(5, 1), 6).unwrap().largest, 30);
        assert_eq!(accessible_convex_space(&HeightMap::from_heights(vec![1, 0, 1]), 2).unwrap().largest, 3);
    }

    #[test]
    fn lb_fills_the_pit() {
        let c = select_placement(Strategy::Lb, &ledge(), &req(Extent::new2(3, 2))).unwrap();
        assert_eq!((c.x, c.y), (2, 0));
        assert_eq!(c.score, 1.0);
    }

    #[test]
    fn empty_container_ties_go_left() {
        let flat = ContainerState::new(0, 5, 1);
        for s in [Strategy::Lb, Strategy::Mul, Strategy::Macs] {
            let c = select_placement(s, &flat, &req(Extent::new2(2, 3))).unwrap();
            assert_eq!((c.x, c.y), (0, 0), "{s}");
        }
    }

    #[test]
    fn macs_keeps_the_largest_region() {
        // ceiling = 2 + 2 = 4. Candidates x=0 (stack on the ledge), 2 and 3.
        // x=0 leaves [2,5)x[0,4) = 12 cells; x=2 and x=3 leave at most 10.
        let st = ledge();
        let c = select_placement(Strategy::Macs, &st, &req(Extent::new2(2, 2))).unwrap();
        assert_eq!((c.x, c.y), (0, 2));
        assert_eq!(c.score, 12.0);
        for x in [2, 3] {
            let after = st.heights.place(x, 0, Extent::new2(2, 2)).unwrap();
            assert_eq!(accessible_convex_space(&after, 4).unwrap().largest, 10);
        }
    }

    #[test]
    fn lb_subset_of_mul() {
        let st = ledge();
        for w in 1..=3 {
            let lb = xs(&candidates_lb(&st, Extent::new2(w, 1)).unwrap());
            let mul = xs(&candidates_mul(&st, Extent::new2(w, 1)).unwrap());
            assert!(lb.iter().all(|c| mul.contains(c)));
        }
    }
}
