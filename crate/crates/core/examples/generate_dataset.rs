//! Writes RAND and PPSG datasets, reloads them and replays the PPSG witnesses.
//!
//! cargo run --release --example generate_dataset -- [out_dir]

use std::path::PathBuf;

use tap_core::datasets::{generate, load_dataset, write_dataset, DatasetKind, GenConfig};
use tap_core::geom::Mode;
use tap_core::instance::validate_solution;

fn main() -> tap_core::Result<()> {
    let out: PathBuf = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("tap-datasets"));
    for kind in [DatasetKind::Rand, DatasetKind::Ppsg] {
        let cfg = GenConfig { count: 200, seed: 7, ..GenConfig::new(kind, Mode::Two) };
        let items = generate(&cfg)?;
        let dir = out.join(format!("{kind:?}").to_lowercase());
        let m = write_dataset(&dir, &cfg, &items)?;
        println!("{kind:?} -> {} ({} instances, checksum {}..)", dir.display(), m.count, &m.checksum[..12]);
        let ds = load_dataset(&dir)?;
        let mut perfect = 0;
        for (inst, w) in ds.instances.iter().zip(&ds.witnesses) {
            assert!(validate_solution(inst, w).is_empty());
            perfect += (w.reward.aggregate.reward == 1.0) as usize;
        }
        if kind == DatasetKind::Ppsg {
            println!("  {perfect}/{} witnesses replay to R = 1", ds.instances.len());
        }
    }
    Ok(())
}
