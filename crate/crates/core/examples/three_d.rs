//! 3D transport-and-pack: six orientations, side access along x and z.
//!
//! cargo run --release --example three_d

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tap_core::datasets::{generate, DatasetKind, GenConfig};
use tap_core::geom::Mode;
use tap_core::placement::Strategy;
use tap_core::render::write_svgs;
use tap_core::solvers::{solve_greedy, solve_random};
use tap_core::training::Metrics;

fn main() -> tap_core::Result<()> {
    for kind in [DatasetKind::Rand, DatasetKind::Ppsg] {
        let cfg = GenConfig { count: 100, seed: 3, ..GenConfig::new(kind, Mode::Three) };
        let set = generate(&cfg)?;
        for strategy in [Strategy::Lb, Strategy::Macs] {
            let mut greedy = Vec::new();
            let mut random = Vec::new();
            for (i, g) in set.iter().enumerate() {
                greedy.push(solve_greedy(&g.instance, strategy)?.reward.aggregate);
                random.push(solve_random(&g.instance, strategy, &mut ChaCha8Rng::seed_from_u64(i as u64))?.reward.aggregate);
            }
            let (g, r) = (Metrics::from_rewards(&greedy), Metrics::from_rewards(&random));
            println!("{kind:?} {strategy:<5} greedy R {:.3} (C {:.3} P {:.3} S {:.3})  random R {:.3}", g.r, g.c, g.p, g.s, r.r);
        }
    }
    let cfg = GenConfig { seed: 3, ..GenConfig::new(DatasetKind::Ppsg, Mode::Three) };
    let g = &generate(&cfg)?[0];
    let dir = std::env::temp_dir().join("tap-3d");
    write_svgs(&dir, &g.instance, g.witness.as_ref())?;
    println!("isometric frames of a perfect packing in {}", dir.display());
    Ok(())
}
