//! Integer-grid geometry shared by every other module.
//!
//! All boxes live on a unit grid with half-open extents `[x, x + w)`. The
//! vertical axis is `y` and gravity points towards `-y`. A 2D problem is the
//! special case of a 3D one with depth 1, so geometry is written once over
//! three axes and the 2D/3D distinction only matters for orientations and
//! serialization.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TapError};

/// Problem dimensionality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Mode {
    Two,
    Three,
}

impl Mode {
    /// Number of oriented states per box: 2 in 2D, 6 in 3D.
    pub fn orientation_count(self) -> usize {
        match self {
            Mode::Two => 2,
            Mode::Three => 6,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Mode::Two => 2,
            Mode::Three => 3,
        }
    }
}

impl TryFrom<u8> for Mode {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            other => Err(format!("dims_mode must be 2 or 3, got {other}")),
        }
    }
}

impl From<Mode> for u8 {
    fn from(m: Mode) -> u8 {
        m.as_u8()
    }
}

fn is_one(v: &u32) -> bool {
    *v == 1
}

fn one() -> u32 {
    1
}

fn is_zero(v: &u32) -> bool {
    *v == 0
}

/// Box extents in grid cells along x (width), y (height) and z (depth).
///
/// In 2D the depth is always 1 and is omitted from JSON.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Extent {
    pub w: u32,
    pub h: u32,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub d: u32,
}

impl Extent {
    pub const fn new2(w: u32, h: u32) -> Self {
        Self { w, h, d: 1 }
    }

    pub const fn new3(w: u32, h: u32, d: u32) -> Self {
        Self { w, h, d }
    }

    pub fn volume(&self) -> u64 {
        self.w as u64 * self.h as u64 * self.d as u64
    }

    pub fn footprint(&self) -> u64 {
        self.w as u64 * self.d as u64
    }

    pub fn max_side(&self) -> u32 {
        self.w.max(self.h).max(self.d)
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.w, self.h, self.d]
    }

    pub fn from_array(a: [u32; 3]) -> Self {
        Self { w: a[0], h: a[1], d: a[2] }
    }
}

/// Min-corner grid coordinates. `z` is 0 in 2D and omitted from JSON.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x: u32,
    pub y: u32,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub z: u32,
}

impl Point {
    pub const fn new2(x: u32, y: u32) -> Self {
        Self { x, y, z: 0 }
    }

    pub const fn new3(x: u32, y: u32, z: u32) -> Self {
        Self { x, y, z }
    }

    pub fn as_array(&self) -> [u32; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [u32; 3]) -> Self {
        Self { x: a[0], y: a[1], z: a[2] }
    }
}

/// Horizontal side axis used to grip a box before rotating it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SideAxis {
    /// Left/right faces (normal along x).
    X,
    /// Back/front faces (normal along z).
    Z,
}

/// Orientation index of a box.
///
/// 2D: `0` identity, `1` swaps width and height.
///
/// 3D, as axis permutations of `(w, h, d)` mapped to `(x, y, z)` extents:
///
/// | idx | extents     | access                  |
/// |-----|-------------|-------------------------|
/// | 0   | `(w, h, d)` | top only                |
/// | 1   | `(d, h, w)` | top only (turn about y) |
/// | 2   | `(h, w, d)` | x side (tilt about z)   |
/// | 3   | `(d, w, h)` | x side (tilt, then turn)|
/// | 4   | `(w, d, h)` | z side (tilt about x)   |
/// | 5   | `(h, d, w)` | z side (tilt, then turn)|
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Orientation(pub u8);

// Source axis for each destination axis (x, y, z).
const PERM_3D: [[usize; 3]; 6] = [
    [0, 1, 2],
    [2, 1, 0],
    [1, 0, 2],
    [2, 0, 1],
    [0, 2, 1],
    [1, 2, 0],
];

impl Orientation {
    pub const IDENTITY: Orientation = Orientation(0);

    fn perm(self, mode: Mode) -> [usize; 3] {
        match mode {
            Mode::Two => {
                if self.0 == 0 {
                    PERM_3D[0]
                } else {
                    PERM_3D[2]
                }
            }
            Mode::Three => PERM_3D[self.0 as usize],
        }
    }

    pub fn is_valid(self, mode: Mode) -> bool {
        (self.0 as usize) < mode.orientation_count()
    }

    /// Oriented extents of `dims`.
    pub fn apply(self, mode: Mode, dims: Extent) -> Extent {
        let src = dims.as_array();
        let p = self.perm(mode);
        Extent::from_array([src[p[0]], src[p[1]], src[p[2]]])
    }

    /// The orientation that undoes `self`.
    pub fn inverse(self, mode: Mode) -> Orientation {
        let p = self.perm(mode);
        let mut inv = [0usize; 3];
        for (dst, &src) in p.iter().enumerate() {
            inv[src] = dst;
        }
        let count = mode.orientation_count();
        (0..count)
            .map(|i| Orientation(i as u8))
            .find(|o| o.perm(mode) == inv)
            .expect("orientation table is closed under inversion")
    }

    /// Side faces that must be reachable to realize this orientation, or
    /// `None` for states that only need top access.
    pub fn side_requirement(self, mode: Mode) -> Option<SideAxis> {
        match (mode, self.0) {
            (_, 0) => None,
            (Mode::Two, _) => Some(SideAxis::X),
            (Mode::Three, 1) => None,
            (Mode::Three, 2 | 3) => Some(SideAxis::X),
            (Mode::Three, _) => Some(SideAxis::Z),
        }
    }

    pub fn all(mode: Mode) -> impl Iterator<Item = Orientation> {
        (0..mode.orientation_count() as u8).map(Orientation)
    }
}

/// True iff the half-open intervals `[a_lo, a_hi)` and `[b_lo, b_hi)` share a cell.
pub fn overlap_interval(a_lo: i64, a_hi: i64, b_lo: i64, b_hi: i64) -> Result<bool> {
    if a_lo >= a_hi || b_lo >= b_hi {
        return Err(TapError::Contract(format!(
            "degenerate interval [{a_lo},{a_hi}) or [{b_lo},{b_hi})"
        )));
    }
    Ok(a_lo < b_hi && b_lo < a_hi)
}

#[inline]
pub(crate) fn spans_overlap(a_lo: u32, a_len: u32, b_lo: u32, b_len: u32) -> bool {
    a_lo < b_lo + b_len && b_lo < a_lo + a_len
}

/// An axis-aligned cuboid on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cuboid {
    pub pos: Point,
    pub ext: Extent,
}

impl Cuboid {
    pub fn new(pos: Point, ext: Extent) -> Self {
        Self { pos, ext }
    }

    pub fn left(&self) -> u32 {
        self.pos.x
    }
    pub fn right(&self) -> u32 {
        self.pos.x + self.ext.w
    }
    pub fn bottom(&self) -> u32 {
        self.pos.y
    }
    pub fn top(&self) -> u32 {
        self.pos.y + self.ext.h
    }
    pub fn back(&self) -> u32 {
        self.pos.z
    }
    pub fn front(&self) -> u32 {
        self.pos.z + self.ext.d
    }

    /// Footprints intersect in the horizontal plane.
    pub fn overlaps_footprint(&self, other: &Cuboid) -> bool {
        spans_overlap(self.pos.x, self.ext.w, other.pos.x, other.ext.w)
            && spans_overlap(self.pos.z, self.ext.d, other.pos.z, other.ext.d)
    }

    pub fn intersects(&self, other: &Cuboid) -> bool {
        self.overlaps_footprint(other) && spans_overlap(self.pos.y, self.ext.h, other.pos.y, other.ext.h)
    }

    pub fn contains_cell(&self, x: u32, y: u32, z: u32) -> bool {
        x >= self.left()
            && x < self.right()
            && y >= self.bottom()
            && y < self.top()
            && z >= self.back()
            && z < self.front()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_interval_examples() {
        assert!(!overlap_interval(0, 2, 2, 4).unwrap());
        assert!(overlap_interval(0, 3, 2, 4).unwrap());
        assert!(overlap_interval(1, 2, 0, 5).unwrap());
        assert!(overlap_interval(2, 2, 0, 5).is_err());
        assert!(overlap_interval(0, 1, 3, 1).is_err());
    }

    #[test]
    fn orientation_round_trip() {
        let dims = Extent::new3(2, 3, 5);
        for mode in [Mode::Two, Mode::Three] {
            let dims = if mode == Mode::Two { Extent::new2(2, 3) } else { dims };
            for o in Orientation::all(mode) {
                let back = o.inverse(mode).apply(mode, o.apply(mode, dims));
                assert_eq!(back, dims, "{mode:?} {o:?}");
            }
        }
    }

    #[test]
    fn orientations_enumerate_all_permutations() {
        let dims = Extent::new3(2, 3, 5);
        let mut seen: Vec<Extent> = Orientation::all(Mode::Three).map(|o| o.apply(Mode::Three, dims)).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 6);
        assert_eq!(Orientation(0).apply(Mode::Three, dims), dims);
        // the second state keeps the vertical extent
        assert_eq!(Orientation(1).apply(Mode::Three, dims).h, 3);
        assert_eq!(Orientation(1).apply(Mode::Two, Extent::new2(2, 3)), Extent::new2(3, 2));
    }

    #[test]
    fn side_requirements() {
        assert_eq!(Orientation(0).side_requirement(Mode::Two), None);
        assert_eq!(Orientation(1).side_requirement(Mode::Two), Some(SideAxis::X));
        let needs: Vec<_> = Orientation::all(Mode::Three).map(|o| o.side_requirement(Mode::Three)).collect();
        assert_eq!(needs.iter().filter(|n| n.is_none()).count(), 2);
        assert_eq!(needs[0], None);
        assert_eq!(needs[1], None);
    }

    #[test]
    fn extent_json_omits_unit_depth() {
        let s = serde_json::to_string(&Extent::new2(2, 3)).unwrap();
        assert_eq!(s, r#"{"w":2,"h":3}"#);
        let e: Extent = serde_json::from_str(&s).unwrap();
        assert_eq!(e.d, 1);
    }
}
