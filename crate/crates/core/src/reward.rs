//! Packing quality: compactness `C`, pyramidality `P`, stability `S` and
//! their mean `R = (C + P + S) / 3`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, TapError};
use crate::instance::PlacedBox;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    #[serde(rename = "C")]
    pub compactness: f64,
    #[serde(rename = "P")]
    pub pyramidality: f64,
    #[serde(rename = "S")]
    pub stability: f64,
    #[serde(rename = "R")]
    pub reward: f64,
    /// Total packed area (2D) or volume (3D).
    pub a_packed: u64,
    /// `width * depth * max top`.
    pub a_rect: u64,
    /// Boxes plus every cell below them.
    pub a_proj: u64,
    pub n_stable: u32,
    pub n_packed: u32,
    /// Set when no box was packed and all ratios default to 1.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub vacuous: bool,
}

impl RewardBreakdown {
    fn from_counts(a_packed: u64, a_rect: u64, a_proj: u64, n_stable: u32, n_packed: u32) -> Self {
        if n_packed == 0 {
            return Self {
                compactness: 1.0,
                pyramidality: 1.0,
                stability: 1.0,
                reward: 1.0,
                a_packed,
                a_rect,
                a_proj,
                n_stable,
                n_packed,
                vacuous: true,
            };
        }
        let c = a_packed as f64 / a_rect as f64;
        let p = a_packed as f64 / a_proj as f64;
        let s = n_stable as f64 / n_packed as f64;
        Self {
            compactness: c,
            pyramidality: p,
            stability: s,
            reward: (c + p + s) / 3.0,
            a_packed,
            a_rect,
            a_proj,
            n_stable,
            n_packed,
            vacuous: false,
        }
    }

    /// Reward of several containers: counts are summed before forming ratios.
    pub fn aggregate(parts: &[RewardBreakdown]) -> Self {
        let sum = |f: fn(&RewardBreakdown) -> u64| parts.iter().map(f).sum::<u64>();
        Self::from_counts(
            sum(|r| r.a_packed),
            sum(|r| r.a_rect),
            sum(|r| r.a_proj),
            parts.iter().map(|r| r.n_stable).sum(),
            parts.iter().map(|r| r.n_packed).sum(),
        )
    }
}

fn max_top(placed: &[PlacedBox]) -> u64 {
    placed.iter().map(|p| p.cuboid().top() as u64).max().unwrap_or(0)
}

fn packed_volume(placed: &[PlacedBox]) -> u64 {
    placed.iter().map(|p| p.dims.volume()).sum()
}

fn projected_volume(placed: &[PlacedBox], width: u32, depth: u32) -> u64 {
    let mut col = vec![0u32; (width * depth) as usize];
    for p in placed {
        let c = p.cuboid();
        for z in c.back()..c.front() {
            for x in c.left()..c.right() {
                let v = &mut col[(z * width + x) as usize];
                *v = (*v).max(c.top());
            }
        }
    }
    col.iter().map(|&v| v as u64).sum()
}

/// Compactness: packed area over `width * depth * max top`. Empty input is 1.
pub fn compactness(placed: &[PlacedBox], width: u32, depth: u32) -> f64 {
    if placed.is_empty() {
        return 1.0;
    }
    packed_volume(placed) as f64 / (width as u64 * depth as u64 * max_top(placed)) as f64
}

/// Pyramidality: packed area over the area of the boxes projected to the floor.
pub fn pyramidality(placed: &[PlacedBox], width: u32, depth: u32) -> f64 {
    if placed.is_empty() {
        return 1.0;
    }
    packed_volume(placed) as f64 / projected_volume(placed, width, depth) as f64
}

/// Whether `b` rests stably on the boxes in `others`.
///
/// Boxes on the floor are stable. Otherwise the cells where `b`'s bottom
/// touches a supporter's top are collected and `b` is stable iff its center
/// lies strictly inside their span (2D) or convex hull (3D). A box touching
/// nothing above the floor is an error.
pub fn is_stable(b: &PlacedBox, others: &[PlacedBox]) -> Result<bool> {
    let bc = b.cuboid();
    if bc.bottom() == 0 {
        return Ok(true);
    }
    let (w, d) = (bc.ext.w as usize, bc.ext.d as usize);
    let mut contact = vec![false; w * d];
    let mut any = false;
    for o in others {
        let oc = o.cuboid();
        if o == b || oc.top() != bc.bottom() || !oc.overlaps_footprint(&bc) {
            continue;
        }
        for z in oc.back().max(bc.back())..oc.front().min(bc.front()) {
            for x in oc.left().max(bc.left())..oc.right().min(bc.right()) {
                contact[((z - bc.back()) as usize) * w + (x - bc.left()) as usize] = true;
                any = true;
            }
        }
    }
    if !any {
        return Err(TapError::Contract(format!(
            "box {} floats at y={} with no support",
            b.box_id,
            bc.bottom()
        )));
    }
    // doubled coordinates keep the center integral
    let cx = 2 * bc.left() as i64 + bc.ext.w as i64;
    let cz = 2 * bc.back() as i64 + bc.ext.d as i64;
    if d == 1 {
        let xs = (0..w).filter(|&i| contact[i]);
        let lo = 2 * (bc.left() as i64 + xs.clone().min().unwrap() as i64);
        let hi = 2 * (bc.left() as i64 + xs.max().unwrap() as i64 + 1);
        return Ok(lo < cx && cx < hi);
    }
    let mut pts = Vec::new();
    for z in 0..d {
        for x in 0..w {
            if contact[z * w + x] {
                let (px, pz) = (2 * (bc.left() as i64 + x as i64), 2 * (bc.back() as i64 + z as i64));
                pts.extend([(px, pz), (px + 2, pz), (px, pz + 2), (px + 2, pz + 2)]);
            }
        }
    }
    Ok(strictly_inside_hull(&convex_hull(pts), (cx, cz)))
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Counter-clockwise hull without collinear points (monotone chain).
pub(crate) fn convex_hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn strictly_inside_hull(hull: &[(i64, i64)], p: (i64, i64)) -> bool {
    if hull.len() < 3 {
        return false;
    }
    (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) > 0)
}

/// Fraction of boxes that pass [`is_stable`]; 1 for an empty list.
pub fn stability(placed: &[PlacedBox]) -> Result<f64> {
    if placed.is_empty() {
        return Ok(1.0);
    }
    Ok(count_stable(placed)? as f64 / placed.len() as f64)
}

fn count_stable(placed: &[PlacedBox]) -> Result<u32> {
    let mut n = 0;
    for b in placed {
        if is_stable(b, placed)? {
            n += 1;
        }
    }
    Ok(n)
}

/// Full breakdown of one container.
pub fn reward(placed: &[PlacedBox], width: u32, depth: u32) -> Result<RewardBreakdown> {
    let a_packed = packed_volume(placed);
    let a_rect = width as u64 * depth as u64 * max_top(placed);
    let a_proj = projected_volume(placed, width, depth);
    let n_stable = count_stable(placed)?;
    Ok(RewardBreakdown::from_counts(a_packed, a_rect, a_proj, n_stable, placed.len() as u32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Extent, Orientation, Point};

    fn b2(id: u32, x: u32, y: u32, w: u32, h: u32) -> PlacedBox {
        PlacedBox {
            box_id: id,
            orientation: Orientation::IDENTITY,
            position: Point::new2(x, y),
            dims: Extent::new2(w, h),
            container_idx: 0,
        }
    }

    #[test]
    fn compactness_examples() {
        let placed = [b2(0, 0, 0, 5, 1), b2(1, 0, 1, 3, 2)];
        assert!((compactness(&placed, 5, 1) - 11.0 / 15.0).abs() < 1e-12);
        assert_eq!(compactness(&[b2(0, 0, 0, 5, 2)], 5, 1), 1.0);
        assert!((compactness(&[b2(0, 0, 0, 1, 1), b2(1, 0, 1, 1, 1)], 5, 1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn pyramidality_examples() {
        let placed = [b2(0, 0, 0, 5, 1), b2(1, 0, 1, 3, 2)];
        assert_eq!(pyramidality(&placed, 5, 1), 1.0);
        assert_eq!(pyramidality(&[b2(0, 1, 0, 2, 3)], 5, 1), 1.0);
        let bridge = [b2(0, 0, 0, 1, 1), b2(1, 2, 0, 1, 1), b2(2, 0, 1, 3, 1)];
        assert!((pyramidality(&bridge, 4, 1) - 5.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn stability_examples() {
        let base = b2(0, 0, 0, 2, 1);
        let plank = b2(1, 0, 1, 5, 1);
        assert!(!is_stable(&plank, &[base]).unwrap());
        assert!(is_stable(&base, &[]).unwrap());
        let pillar = b2(0, 1, 0, 1, 1);
        let top = b2(1, 0, 1, 3, 1);
        assert!(is_stable(&top, &[pillar]).unwrap());
        // center exactly on the edge of the support is unstable
        let half = b2(1, 0, 1, 2, 1);
        assert!(!is_stable(&half, &[b2(0, 0, 0, 1, 1)]).unwrap());
        assert!(matches!(is_stable(&b2(1, 0, 3, 1, 1), &[base]), Err(TapError::Contract(_))));
    }

    #[test]
    fn stability_fraction() {
        assert_eq!(stability(&[b2(0, 0, 0, 1, 1), b2(1, 2, 0, 3, 1)]).unwrap(), 1.0);
        assert_eq!(stability(&[b2(0, 0, 0, 2, 1), b2(1, 0, 1, 5, 1)]).unwrap(), 0.5);
    }

    #[test]
    fn reward_examples() {
        let r = reward(&[b2(0, 0, 0, 5, 1), b2(1, 0, 1, 3, 2)], 5, 1).unwrap();
        assert!((r.reward - (11.0 / 15.0 + 2.0) / 3.0).abs() < 1e-12);
        assert!((r.reward - 0.9111).abs() < 1e-4);
        assert_eq!((r.a_packed, r.a_rect, r.a_proj), (11, 15, 11));
        let full = reward(&[b2(0, 0, 0, 3, 2), b2(1, 3, 0, 2, 2), b2(2, 0, 2, 5, 1)], 5, 1).unwrap();
        assert_eq!(full.reward, 1.0);
        let empty = reward(&[], 5, 1).unwrap();
        assert!(empty.vacuous && empty.reward == 1.0);
    }

    #[test]
    fn aggregate_ignores_empty_containers() {
        let r0 = reward(&[b2(0, 0, 0, 5, 1), b2(1, 0, 1, 3, 2)], 5, 1).unwrap();
        let r1 = reward(&[], 5, 1).unwrap();
        let agg = RewardBreakdown::aggregate(&[r0, r1]);
        assert_eq!(agg.reward, r0.reward);
        assert!(RewardBreakdown::aggregate(&[r1, r1]).vacuous);
    }

    #[test]
    fn hull_of_square() {
        let h = convex_hull(vec![(0, 0), (2, 0), (0, 2), (2, 2), (1, 1)]);
        assert_eq!(h.len(), 4);
        assert!(strictly_inside_hull(&h, (1, 1)));
        assert!(!strictly_inside_hull(&h, (2, 1)));
    }

    #[test]
    fn three_d_corner_support_is_unstable() {
        let base = PlacedBox {
            box_id: 0,
            orientation: Orientation::IDENTITY,
            position: Point::new3(0, 0, 0),
            dims: Extent::new3(1, 1, 1),
            container_idx: 0,
        };
        let mut top = base;
        top.box_id = 1;
        top.position.y = 1;
        top.dims = Extent::new3(2, 1, 2);
        assert!(!is_stable(&top, &[base]).unwrap());
        let mut wide = base;
        wide.dims = Extent::new3(2, 1, 2);
        assert!(is_stable(&top, &[wide]).unwrap());
    }
}
