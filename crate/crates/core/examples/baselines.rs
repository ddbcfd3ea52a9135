//! Random and Greedy sequencing on a RAND set, under every placement strategy.
//!
//! cargo run --release --example baselines -- [count]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tap_core::datasets::{generate, GenConfig};
use tap_core::placement::Strategy;
use tap_core::solvers::{solve_greedy, solve_random};

fn main() -> tap_core::Result<()> {
    let count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let cfg = GenConfig { seed: 2024, count, ..GenConfig::default() };
    let set: Vec<_> = generate(&cfg)?.into_iter().map(|g| g.instance).collect();
    println!("{count} RAND instances, n={}, W={}", cfg.n, cfg.target_width);
    println!("{:<8} {:<6} {:>6} {:>6} {:>6} {:>6}", "method", "place", "C", "P", "S", "R");
    for strategy in [Strategy::Lb, Strategy::Mul, Strategy::Macs] {
        for method in ["random", "greedy"] {
            let rs: Vec<_> = set
                .par_iter()
                .enumerate()
                .map(|(i, inst)| match method {
                    "random" => solve_random(inst, strategy, &mut ChaCha8Rng::seed_from_u64(i as u64)),
                    _ => solve_greedy(inst, strategy),
                })
                .collect::<tap_core::Result<_>>()?;
            let mean = |f: fn(&tap_core::reward::RewardBreakdown) -> f64| {
                rs.iter().map(|s: &tap_core::instance::Solution| f(&s.reward.aggregate)).sum::<f64>() / rs.len() as f64
            };
            println!(
                "{method:<8} {strategy:<6} {:>6.3} {:>6.3} {:>6.3} {:>6.3}",
                mean(|r| r.compactness),
                mean(|r| r.pyramidality),
                mean(|r| r.stability),
                mean(|r| r.reward)
            );
        }
    }
    Ok(())
}
