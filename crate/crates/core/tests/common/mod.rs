//! Brute-force oracles shared by the property and acceptance tests.
#![allow(dead_code)]

use rand::Rng;
use tap_core::container::{EmptySpace, HeightMap};
use tap_core::geom::{Extent, Orientation, Point};
use tap_core::instance::PlacedBox;

fn footprint_max(hm: &HeightMap, x0: u32, x1: u32, z0: u32, z1: u32) -> u32 {
    let mut m = 0;
    for z in z0..z1 {
        for x in x0..x1 {
            m = m.max(hm.at(x, z));
        }
    }
    m
}

/// Every maximal empty box of the free space below `ceiling`, by enumeration.
pub fn brute_ems(hm: &HeightMap, ceiling: u32) -> Vec<EmptySpace> {
    let (w, d) = (hm.width(), hm.depth());
    let free = |x0: u32, x1: u32, z0: u32, z1: u32, y0: u32| footprint_max(hm, x0, x1, z0, z1) <= y0;
    let mut out = Vec::new();
    for x0 in 0..w {
        for x1 in x0 + 1..=w {
            for z0 in 0..d {
                for z1 in z0 + 1..=d {
                    for y0 in 0..ceiling {
                        for y1 in y0 + 1..=ceiling {
                            if !free(x0, x1, z0, z1, y0) {
                                continue;
                            }
                            let extendable = y1 < ceiling
                                || (y0 > 0 && free(x0, x1, z0, z1, y0 - 1))
                                || (x0 > 0 && free(x0 - 1, x1, z0, z1, y0))
                                || (x1 < w && free(x0, x1 + 1, z0, z1, y0))
                                || (z0 > 0 && free(x0, x1, z0 - 1, z1, y0))
                                || (z1 < d && free(x0, x1, z0, z1 + 1, y0));
                            if !extendable {
                                out.push(EmptySpace {
                                    pos: Point::new3(x0, y0, z0),
                                    ext: Extent::new3(x1 - x0, y1 - y0, z1 - z0),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out.sort();
    out
}

pub fn random_height_map<R: Rng>(rng: &mut R, w: u32, d: u32, max: u32) -> HeightMap {
    let rows: Vec<Vec<u32>> = (0..d).map(|_| (0..w).map(|_| rng.random_range(0..=max)).collect()).collect();
    HeightMap::from_rows(&rows)
}

/// Whether `p` lies strictly inside the convex hull of `pts`: no line
/// through `p` has every point on one closed side.
fn strictly_inside(pts: &[(i64, i64)], p: (i64, i64)) -> bool {
    let rel: Vec<(i64, i64)> = pts.iter().map(|&(x, z)| (x - p.0, z - p.1)).collect();
    if rel.iter().all(|&v| v == (0, 0)) {
        return false;
    }
    for &(a, b) in &rel {
        if (a, b) == (0, 0) {
            continue;
        }
        for u in [(-b, a), (b, -a)] {
            if rel.iter().all(|&(x, z)| u.0 * x + u.1 * z <= 0) {
                return false;
            }
        }
    }
    true
}

/// Center-in-hull stability; `None` when the box floats.
pub fn brute_stable(b: &PlacedBox, others: &[PlacedBox]) -> Option<bool> {
    let (x0, y0, z0) = (b.position.x, b.position.y, b.position.z);
    if y0 == 0 {
        return Some(true);
    }
    let mut corners = Vec::new();
    for z in z0..z0 + b.dims.d {
        for x in x0..x0 + b.dims.w {
            let touched = others.iter().any(|o| {
                o.position.y + o.dims.h == y0
                    && (o.position.x..o.position.x + o.dims.w).contains(&x)
                    && (o.position.z..o.position.z + o.dims.d).contains(&z)
            });
            if touched {
                let (px, pz) = (2 * x as i64, 2 * z as i64);
                corners.extend([(px, pz), (px + 2, pz), (px, pz + 2), (px + 2, pz + 2)]);
            }
        }
    }
    if corners.is_empty() {
        return None;
    }
    let center = (2 * x0 as i64 + b.dims.w as i64, 2 * z0 as i64 + b.dims.d as i64);
    Some(strictly_inside(&corners, center))
}

fn placed(id: u32, x: u32, y: u32, z: u32, dims: Extent) -> PlacedBox {
    PlacedBox { box_id: id, orientation: Orientation::IDENTITY, position: Point::new3(x, y, z), dims, container_idx: 0 }
}

/// A box resting at height 1..=3 over a random mix of supporters and distractors.
pub fn random_support_case<R: Rng>(rng: &mut R, three_d: bool) -> (PlacedBox, Vec<PlacedBox>) {
    let span = 8;
    let side = |rng: &mut R| rng.random_range(1..=4u32);
    let (w, d) = (side(rng), if three_d { side(rng) } else { 1 });
    let (x, z) = (rng.random_range(0..=span - w), if three_d { rng.random_range(0..=span - d) } else { 0 });
    let bottom = rng.random_range(1..=3);
    let b = placed(0, x, bottom, z, Extent::new3(w, 2, d));
    let mut others = Vec::new();
    for id in 1..=rng.random_range(1..=5u32) {
        let (ow, od) = (side(rng), if three_d { side(rng) } else { 1 });
        let (ox, oz) = (rng.random_range(0..=span - ow), if three_d { rng.random_range(0..=span - od) } else { 0 });
        let top = if rng.random_bool(0.7) { bottom } else { rng.random_range(1..=5) };
        let h = rng.random_range(1..=top);
        others.push(placed(id, ox, top - h, oz, Extent::new3(ow, h, od)));
    }
    (b, others)
}
