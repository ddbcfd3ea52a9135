//! A capacity-10 policy solving 20-box piles through the rolling window.
//!
//! cargo run --release --example rolling

use tap_core::datasets::{generate, GenConfig};
use tap_core::placement::Strategy;
use tap_core::policy::PolicyConfig;
use tap_core::training::{evaluate_policy, train, TrainConfig};

fn main() -> tap_core::Result<()> {
    let gen = |n, seed, count| -> tap_core::Result<Vec<_>> {
        let cfg = GenConfig { n, seed, count, ..GenConfig::default() };
        Ok(generate(&cfg)?.into_iter().map(|g| g.instance).collect())
    };
    let policy = PolicyConfig { static_dim: 16, dynamic_dim: 16, height_dim: 16, hidden: 32, critic_hidden: 32, ..PolicyConfig::default() };
    let cfg = TrainConfig { batch_size: 64, epochs: 5, lr_actor: 2e-3, lr_critic: 2e-3, entropy_coef: 0.01, policy, ..TrainConfig::default() };
    let out = train(&cfg, &gen(10, 1, 4000)?, &[], |e| println!("epoch {} sampled R {:.3}", e.epoch, e.train_reward))?;
    let small = evaluate_policy(&out.last, &gen(10, 2, 300)?, Strategy::Lb, false)?;
    let large = evaluate_policy(&out.last, &gen(20, 3, 300)?, Strategy::Lb, true)?;
    println!("10 boxes: R {:.3}", small.metrics.r);
    println!("20 boxes (rolling): R {:.3}", large.metrics.r);
    Ok(())
}
