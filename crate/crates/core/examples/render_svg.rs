//! Renders a pile and the greedy packing sequence as SVG frames.
//!
//! cargo run --example render_svg -- [out_dir]

use std::path::PathBuf;

use tap_core::datasets::{generate_one, DatasetKind, GenConfig};
use tap_core::placement::Strategy;
use tap_core::render::write_svgs;
use tap_core::solvers::solve_greedy;

fn main() -> tap_core::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("tap-frames"));
    let cfg = GenConfig { seed: 5, ..GenConfig::new(DatasetKind::Ppsg, tap_core::geom::Mode::Two) };
    let inst = generate_one(&cfg, 0)?.instance;
    let sol = solve_greedy(&inst, Strategy::Lb)?;
    let n = write_svgs(&out, &inst, Some(&sol))?;
    println!("wrote {n} SVG files to {} (R = {:.3})", out.display(), sol.reward.aggregate.reward);
    Ok(())
}
