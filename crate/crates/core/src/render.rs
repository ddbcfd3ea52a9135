//! SVG pictures of piles and packing sequences.
//!
//! 2D boxes are drawn as rectangles with the floor at the bottom; 3D boxes as
//! isometric cuboids (x to the lower right, z to the lower left, y up).
//! Colors depend only on the box id.

use std::fmt::Write as _;
use std::path::Path;

use crate::datasets::write_atomic;
use crate::error::Result;
use crate::geom::Mode;
use crate::instance::{PlacedBox, ProblemInstance, Solution};

/// Pixels per unit.
pub const SCALE: f64 = 40.0;
const PAD: f64 = 20.0;
const GAP: f64 = 30.0;

pub fn color(id: u32) -> String {
    let hue = (id as u64 * 137) % 360;
    format!("hsl({hue},55%,62%)")
}

fn top(boxes: &[PlacedBox]) -> u32 {
    boxes.iter().map(|b| b.position.y + b.dims.h).max().unwrap_or(0)
}

struct Canvas {
    body: String,
    width: f64,
    height: f64,
}

impl Canvas {
    fn finish(self, title: &str) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n<title>{title}</title>\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.width, self.height, self.width, self.height, self.body
        )
    }
}

/// One 2D region of `width x height` units with its left edge at `x0` pixels.
fn draw_2d(out: &mut String, x0: f64, width: u32, height: u32, boxes: &[PlacedBox]) {
    let base = PAD + height as f64 * SCALE;
    let _ = writeln!(
        out,
        "<rect class=\"region\" x=\"{x0:.1}\" y=\"{PAD:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>",
        width as f64 * SCALE,
        height as f64 * SCALE
    );
    for b in boxes {
        let x = x0 + b.position.x as f64 * SCALE;
        let y = base - (b.position.y + b.dims.h) as f64 * SCALE;
        let (w, h) = (b.dims.w as f64 * SCALE, b.dims.h as f64 * SCALE);
        let _ = writeln!(
            out,
            "<rect class=\"box\" data-id=\"{}\" x=\"{x:.1}\" y=\"{y:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"{}\" stroke=\"black\"/>",
            b.box_id,
            color(b.box_id)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\" dominant-baseline=\"middle\">{}</text>",
            x + w / 2.0,
            y + h / 2.0,
            b.box_id
        );
    }
}

const COS30: f64 = 0.866_025_403_784_438_6;

/// Isometric projection relative to an origin in pixels.
fn iso(o: (f64, f64), x: f64, y: f64, z: f64) -> (f64, f64) {
    (o.0 + (x - z) * COS30 * SCALE, o.1 + (x + z) * 0.5 * SCALE - y * SCALE)
}

fn poly(out: &mut String, pts: &[(f64, f64)], fill: &str, extra: &str) {
    let p: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
    let _ = writeln!(out, "<polygon{extra} points=\"{}\" fill=\"{fill}\" stroke=\"black\" stroke-width=\"0.8\"/>", p.join(" "));
}

/// Size in pixels of an isometric region, and the origin offset within it.
fn iso_extent(width: u32, depth: u32, height: u32) -> (f64, f64, f64) {
    let w = (width + depth) as f64 * COS30 * SCALE;
    let h = (width + depth) as f64 * 0.5 * SCALE + height as f64 * SCALE;
    (w, h, depth as f64 * COS30 * SCALE)
}

fn draw_3d(out: &mut String, x0: f64, width: u32, depth: u32, height: u32, boxes: &[PlacedBox]) {
    let o = (x0 + iso_extent(width, depth, height).2, PAD + height as f64 * SCALE);
    let (w, d) = (width as f64, depth as f64);
    let floor = [iso(o, 0.0, 0.0, 0.0), iso(o, w, 0.0, 0.0), iso(o, w, 0.0, d), iso(o, 0.0, 0.0, d)];
    poly(out, &floor, "#f4f4f4", " class=\"region\"");
    // far boxes first
    let mut order: Vec<&PlacedBox> = boxes.iter().collect();
    order.sort_by_key(|b| (b.position.x + b.position.z + b.position.y, b.position.y, b.box_id));
    for b in order {
        let (x, y, z) = (b.position.x as f64, b.position.y as f64, b.position.z as f64);
        let (x1, y1, z1) = (x + b.dims.w as f64, y + b.dims.h as f64, z + b.dims.d as f64);
        let fill = color(b.box_id);
        let tag = format!(" class=\"box\" data-id=\"{}\"", b.box_id);
        poly(out, &[iso(o, x, y1, z), iso(o, x1, y1, z), iso(o, x1, y1, z1), iso(o, x, y1, z1)], &fill, &tag);
        poly(out, &[iso(o, x1, y, z), iso(o, x1, y, z1), iso(o, x1, y1, z1), iso(o, x1, y1, z)], &fill, " opacity=\"0.85\"");
        poly(out, &[iso(o, x, y, z1), iso(o, x1, y, z1), iso(o, x1, y1, z1), iso(o, x, y1, z1)], &fill, " opacity=\"0.7\"");
    }
}

/// Draws several regions side by side.
fn render_regions(mode: Mode, regions: &[(u32, u32, &[PlacedBox])], title: &str) -> String {
    let height = regions.iter().map(|r| top(r.2)).max().unwrap_or(0).max(1);
    let mut body = String::new();
    let mut x = PAD;
    for &(w, d, boxes) in regions {
        match mode {
            Mode::Two => {
                draw_2d(&mut body, x, w, height, boxes);
                x += w as f64 * SCALE + GAP;
            }
            Mode::Three => {
                draw_3d(&mut body, x, w, d, height, boxes);
                x += iso_extent(w, d, height).0 + GAP;
            }
        }
    }
    let total_h = match mode {
        Mode::Two => height as f64 * SCALE,
        Mode::Three => regions.iter().map(|r| iso_extent(r.0, r.1, height).1).fold(0.0, f64::max),
    };
    Canvas { body, width: x - GAP + PAD, height: total_h + 2.0 * PAD }.finish(title)
}

/// The initial pile.
pub fn render_pile(inst: &ProblemInstance) -> String {
    let placed = inst.placements_by_index();
    render_regions(inst.dims_mode, &[(inst.init_width, inst.init_depth, &placed)], "initial pile")
}

/// Target containers after each step: frame `t` shows the first `t` boxes.
pub fn render_frames(inst: &ProblemInstance, sol: &Solution) -> Vec<String> {
    (0..=sol.steps.len())
        .map(|t| {
            let per: Vec<Vec<PlacedBox>> = (0..inst.container_count)
                .map(|c| sol.steps[..t].iter().filter(|s| s.container_idx == c).cloned().collect())
                .collect();
            let regions: Vec<(u32, u32, &[PlacedBox])> = per.iter().map(|b| (inst.target_width, inst.target_depth, b.as_slice())).collect();
            render_regions(inst.dims_mode, &regions, &format!("step {t}"))
        })
        .collect()
}

/// Writes `pile.svg` and, with a solution, `frame_000.svg` onwards into `dir`.
pub fn write_svgs(dir: &Path, inst: &ProblemInstance, sol: Option<&Solution>) -> Result<usize> {
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("pile.svg"), render_pile(inst).as_bytes())?;
    let mut n = 1;
    if let Some(sol) = sol {
        for (t, svg) in render_frames(inst, sol).iter().enumerate() {
            write_atomic(&dir.join(format!("frame_{t:03}.svg")), svg.as_bytes())?;
            n += 1;
        }
    }
    Ok(n)
}
