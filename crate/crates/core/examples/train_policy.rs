//! Trains a small policy, saves it and compares it with the baselines.
//!
//! cargo run --release --example train_policy -- [epochs]

use tap_core::datasets::{generate, GenConfig};
use tap_core::placement::Strategy;
use tap_core::policy::{Policy, PolicyConfig};
use tap_core::training::{curve_csv, evaluate, train, Method, TrainConfig};

fn main() -> tap_core::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let gen = |seed, count| -> tap_core::Result<Vec<_>> {
        let cfg = GenConfig { seed, count, ..GenConfig::default() };
        Ok(generate(&cfg)?.into_iter().map(|g| g.instance).collect())
    };
    let (train_set, valid) = (gen(1, 4000)?, gen(2, 500)?);
    let policy = PolicyConfig { static_dim: 16, dynamic_dim: 16, height_dim: 16, hidden: 32, critic_hidden: 32, ..PolicyConfig::default() };
    let cfg = TrainConfig { batch_size: 64, epochs, lr_actor: 2e-3, lr_critic: 2e-3, entropy_coef: 0.01, policy, ..TrainConfig::default() };
    let out = train(&cfg, &train_set, &valid, |e| println!("epoch {:>3}  valid R {:.4}  sampled R {:.4}", e.epoch, e.metrics.r, e.train_reward))?;

    let dir = std::env::temp_dir().join("tap-policy");
    std::fs::create_dir_all(&dir)?;
    out.best.save(&dir.join("best.json"))?;
    std::fs::write(dir.join("curve.csv"), curve_csv(&out.curve))?;
    let reloaded = Policy::load(&dir.join("best.json"))?;

    for (name, method) in [("random", Method::Random), ("greedy", Method::Greedy), ("policy", Method::Net)] {
        let m = evaluate(method, Some(&reloaded), &valid, Strategy::Lb, 0, false)?.metrics;
        println!("{name:<7} C {:.3} P {:.3} S {:.3} R {:.3}", m.c, m.p, m.s, m.r);
    }
    println!("checkpoint and curve in {}", dir.display());
    Ok(())
}
