//! Target container simulation on a height map.
//!
//! Free space is everything above the skyline; boxes are dropped from the top
//! and come to rest on the highest cell under their footprint. Overhang voids
//! are never available again, so the height map is the complete state.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TapError};
use crate::geom::{Extent, Point};
use crate::instance::PlacedBox;

/// Per-column heights, `width * depth` entries indexed by `z * width + x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HeightMap {
    width: u32,
    depth: u32,
    heights: Vec<u32>,
}

/// A maximal empty box above the skyline, clipped at the evaluation ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EmptySpace {
    pub pos: Point,
    pub ext: Extent,
}

impl EmptySpace {
    pub fn volume(&self) -> u64 {
        self.ext.volume()
    }
}

/// Input encoding of a height map for the policy network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeightRepr {
    Raw,
    ZeroMin,
    Gradient,
}

impl std::str::FromStr for HeightRepr {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "raw" => Ok(Self::Raw),
            "zero-min" => Ok(Self::ZeroMin),
            "gradient" => Ok(Self::Gradient),
            _ => Err(format!("unknown height-map mode {s:?} (raw|zero-min|gradient)")),
        }
    }
}

impl HeightMap {
    pub fn new(width: u32, depth: u32) -> Self {
        Self { width, depth, heights: vec![0; (width * depth) as usize] }
    }

    /// 2D map from explicit heights.
    pub fn from_heights(heights: Vec<u32>) -> Self {
        Self { width: heights.len() as u32, depth: 1, heights }
    }

    /// 3D map from rows of constant z (`rows[z][x]`).
    pub fn from_rows(rows: &[Vec<u32>]) -> Self {
        let depth = rows.len() as u32;
        let width = rows.first().map_or(0, |r| r.len() as u32);
        Self { width, depth, heights: rows.concat() }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn heights(&self) -> &[u32] {
        &self.heights
    }

    #[inline]
    pub fn at(&self, x: u32, z: u32) -> u32 {
        self.heights[(z * self.width + x) as usize]
    }

    pub fn max(&self) -> u32 {
        self.heights.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> u32 {
        self.heights.iter().copied().min().unwrap_or(0)
    }

    fn check_footprint(&self, x: u32, z: u32, ext: Extent) -> Result<()> {
        if ext.w == 0 || ext.d == 0 || x + ext.w > self.width || z + ext.d > self.depth {
            return Err(TapError::Bounds(format!(
                "footprint x=[{x},{}) z=[{z},{}) in {}x{} container",
                x + ext.w,
                z + ext.d,
                self.width,
                self.depth
            )));
        }
        Ok(())
    }

    fn footprint_max(&self, x: u32, z: u32, w: u32, d: u32) -> u32 {
        let mut m = 0;
        for zz in z..z + d {
            let row = (zz * self.width) as usize;
            for v in &self.heights[row + x as usize..row + (x + w) as usize] {
                m = m.max(*v);
            }
        }
        m
    }

    /// Resting height of a box dropped with its min corner at `(x, z)`.
    pub fn drop_height(&self, x: u32, z: u32, ext: Extent) -> Result<u32> {
        self.check_footprint(x, z, ext)?;
        Ok(self.footprint_max(x, z, ext.w, ext.d))
    }

    /// Drops the box and raises its footprint; returns the resting height.
    pub fn place_mut(&mut self, x: u32, z: u32, ext: Extent) -> Result<u32> {
        let y = self.drop_height(x, z, ext)?;
        let top = y + ext.h;
        for zz in z..z + ext.d {
            let row = (zz * self.width) as usize;
            for v in &mut self.heights[row + x as usize..row + (x + ext.w) as usize] {
                *v = top;
            }
        }
        Ok(y)
    }

    pub fn place(&self, x: u32, z: u32, ext: Extent) -> Result<HeightMap> {
        let mut next = self.clone();
        next.place_mut(x, z, ext)?;
        Ok(next)
    }

    /// All maximal empty boxes of `{(x, y, z) : heights(x, z) <= y < ceiling}`,
    /// sorted by min corner.
    ///
    /// Every such box reaches the ceiling, and its bottom equals the highest
    /// column under its footprint.
    pub fn compute_ems(&self, ceiling: u32) -> Result<Vec<EmptySpace>> {
        if ceiling < self.max() {
            return Err(TapError::Contract(format!("ceiling {ceiling} below max height {}", self.max())));
        }
        let (w, d) = (self.width as usize, self.depth as usize);
        let mut levels: Vec<u32> = self.heights.iter().copied().filter(|&h| h < ceiling).collect();
        levels.sort_unstable();
        levels.dedup();

        let mut out = Vec::new();
        let mut free = vec![false; w * d];
        let mut col_free = vec![false; d];
        for &level in &levels {
            for (f, h) in free.iter_mut().zip(&self.heights) {
                *f = *h <= level;
            }
            let is_free = |x: usize, z: usize| free[z * w + x];
            for x0 in 0..w {
                col_free.iter_mut().for_each(|c| *c = true);
                for x1 in x0 + 1..=w {
                    let mut any = false;
                    for (z, c) in col_free.iter_mut().enumerate() {
                        *c = *c && is_free(x1 - 1, z);
                        any |= *c;
                    }
                    if !any {
                        break;
                    }
                    let mut z = 0;
                    while z < d {
                        if !col_free[z] {
                            z += 1;
                            continue;
                        }
                        let z0 = z;
                        while z < d && col_free[z] {
                            z += 1;
                        }
                        let z1 = z;
                        let grow_left = x0 > 0 && (z0..z1).all(|zz| is_free(x0 - 1, zz));
                        let grow_right = x1 < w && (z0..z1).all(|zz| is_free(x1, zz));
                        if grow_left || grow_right {
                            continue;
                        }
                        let (xw, zd) = ((x1 - x0) as u32, (z1 - z0) as u32);
                        if self.footprint_max(x0 as u32, z0 as u32, xw, zd) != level {
                            continue;
                        }
                        out.push(EmptySpace {
                            pos: Point::new3(x0 as u32, level, z0 as u32),
                            ext: Extent::new3(xw, ceiling - level, zd),
                        });
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Height-map features for the policy.
    ///
    /// * raw: heights verbatim;
    /// * zero-min: heights minus the minimum;
    /// * gradient: differences to the previous column along x (first column
    ///   0); in 3D followed by the differences along z (first row 0).
    pub fn represent(&self, repr: HeightRepr) -> Vec<i64> {
        let (w, d) = (self.width as usize, self.depth as usize);
        let h = |x: usize, z: usize| self.heights[z * w + x] as i64;
        match repr {
            HeightRepr::Raw => self.heights.iter().map(|&v| v as i64).collect(),
            HeightRepr::ZeroMin => {
                let m = self.min() as i64;
                self.heights.iter().map(|&v| v as i64 - m).collect()
            }
            HeightRepr::Gradient => {
                let mut out = Vec::with_capacity(if d > 1 { 2 * w * d } else { w });
                for z in 0..d {
                    for x in 0..w {
                        out.push(if x == 0 { 0 } else { h(x, z) - h(x - 1, z) });
                    }
                }
                if d > 1 {
                    for z in 0..d {
                        for x in 0..w {
                            out.push(if z == 0 { 0 } else { h(x, z) - h(x, z - 1) });
                        }
                    }
                }
                out
            }
        }
    }

    /// Length of [`HeightMap::represent`] output for a container of this shape.
    pub fn repr_len(width: u32, depth: u32, repr: HeightRepr) -> usize {
        let cells = (width * depth) as usize;
        match repr {
            HeightRepr::Gradient if depth > 1 => 2 * cells,
            _ => cells,
        }
    }
}

/// One target container: height map plus the boxes placed so far.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContainerState {
    pub index: u32,
    pub heights: HeightMap,
    pub placed: Vec<PlacedBox>,
}

impl ContainerState {
    pub fn new(index: u32, width: u32, depth: u32) -> Self {
        Self { index, heights: HeightMap::new(width, depth), placed: Vec::new() }
    }

    pub fn width(&self) -> u32 {
        self.heights.width()
    }

    pub fn depth(&self) -> u32 {
        self.heights.depth()
    }

    /// Drops the box at `(x, z)` and records it.
    pub fn push(&mut self, mut placed: PlacedBox) -> Result<PlacedBox> {
        let y = self.heights.place_mut(placed.position.x, placed.position.z, placed.dims)?;
        placed.position.y = y;
        placed.container_idx = self.index;
        self.placed.push(placed);
        Ok(placed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x: u32, y: u32, w: u32, h: u32) -> EmptySpace {
        EmptySpace { pos: Point::new2(x, y), ext: Extent::new2(w, h) }
    }

    #[test]
    fn drop_examples() {
        let hm = HeightMap::from_heights(vec![2, 2, 0, 0, 0]);
        assert_eq!(hm.drop_height(1, 0, Extent::new2(2, 1)).unwrap(), 2);
        assert_eq!(hm.drop_height(2, 0, Extent::new2(3, 1)).unwrap(), 0);
        let flat = HeightMap::new(5, 1);
        for x in 0..5 {
            for w in 1..=5 - x {
                assert_eq!(flat.drop_height(x, 0, Extent::new2(w, 3)).unwrap(), 0);
            }
        }
        assert!(matches!(hm.drop_height(4, 0, Extent::new2(2, 1)), Err(TapError::Bounds(_))));
    }

    #[test]
    fn place_examples() {
        let hm = HeightMap::from_heights(vec![2, 2, 0, 0, 0]);
        assert_eq!(hm.place(2, 0, Extent::new2(2, 1)).unwrap().heights(), &[2, 2, 1, 1, 0]);
        assert_eq!(hm.place(0, 0, Extent::new2(5, 3)).unwrap().heights(), &[5, 5, 5, 5, 5]);
        let hm3 = HeightMap::new(2, 2).place(0, 0, Extent::new3(1, 4, 1)).unwrap();
        assert_eq!(hm3.heights(), &[4, 0, 0, 0]);
        assert_eq!(hm3.at(0, 0), 4);
    }

    #[test]
    fn ems_examples() {
        let hm = HeightMap::from_heights(vec![2, 2, 0, 0, 0]);
        assert_eq!(hm.compute_ems(4).unwrap(), vec![rect(0, 2, 5, 2), rect(2, 0, 3, 4)]);
        let hm = HeightMap::from_heights(vec![1, 0, 1]);
        assert_eq!(hm.compute_ems(2).unwrap(), vec![rect(0, 1, 3, 1), rect(1, 0, 1, 2)]);
        let flat = HeightMap::from_heights(vec![3, 3, 3]);
        assert_eq!(flat.compute_ems(7).unwrap(), vec![rect(0, 3, 3, 4)]);
        assert!(hm.compute_ems(0).is_err());
    }

    #[test]
    fn full_columns_yield_no_space() {
        let hm = HeightMap::from_heights(vec![4, 4]);
        assert!(hm.compute_ems(4).unwrap().is_empty());
    }

    #[test]
    fn represent_examples() {
        let hm = HeightMap::from_heights(vec![1, 3, 3, 0, 2]);
        assert_eq!(hm.represent(HeightRepr::ZeroMin), vec![1, 3, 3, 0, 2]);
        assert_eq!(hm.represent(HeightRepr::Gradient), vec![0, 2, 0, -3, 2]);
        assert_eq!(hm.represent(HeightRepr::Raw), vec![1, 3, 3, 0, 2]);
        assert_eq!(HeightMap::from_heights(vec![5, 5, 5]).represent(HeightRepr::ZeroMin), vec![0, 0, 0]);
        let hm3 = HeightMap::from_rows(&[vec![1, 2], vec![4, 0]]);
        assert_eq!(hm3.represent(HeightRepr::Gradient), vec![0, 1, 0, -4, 0, 0, 3, -2]);
        assert_eq!(HeightMap::repr_len(2, 2, HeightRepr::Gradient), 8);
    }

    #[test]
    fn place_then_drop_returns_new_top() {
        let mut hm = HeightMap::from_heights(vec![0, 3, 1, 0]);
        let ext = Extent::new2(2, 2);
        let y = hm.place_mut(1, 0, ext).unwrap();
        assert_eq!(y, 3);
        assert_eq!(hm.drop_height(1, 0, ext).unwrap(), 5);
    }
}
