//! Two target containers: each box carries the index of its destination.
//!
//! cargo run --release --example multi_container

use tap_core::datasets::{generate, GenConfig};
use tap_core::extensions::solve_multi;
use tap_core::placement::Strategy;
use tap_core::policy::{Choice, PolicyConfig};
use tap_core::solvers::solve_greedy;
use tap_core::training::{train, Metrics, TrainConfig};

fn main() -> tap_core::Result<()> {
    let gen = |seed, count| -> tap_core::Result<Vec<_>> {
        let cfg = GenConfig { n: 20, container_count: 2, seed, count, ..GenConfig::default() };
        Ok(generate(&cfg)?.into_iter().map(|g| g.instance).collect())
    };
    let (train_set, test) = (gen(1, 2000)?, gen(2, 200)?);
    let greedy: Vec<_> = test.iter().map(|i| solve_greedy(i, Strategy::Lb).map(|s| s.reward.aggregate)).collect::<tap_core::Result<_>>()?;
    println!("greedy R {:.3}", Metrics::from_rewards(&greedy).r);

    let policy = PolicyConfig { capacity: 20, container_count: 2, static_dim: 16, dynamic_dim: 16, height_dim: 16, hidden: 32, critic_hidden: 32, ..PolicyConfig::default() };
    let cfg = TrainConfig { batch_size: 64, epochs: 3, lr_actor: 1e-3, lr_critic: 1e-3, entropy_coef: 0.02, policy, ..TrainConfig::default() };
    let out = train(&cfg, &train_set, &[], |e| println!("epoch {} sampled R {:.3}", e.epoch, e.train_reward))?;
    let net: Vec<_> = test.iter().map(|i| solve_multi(&out.last, i, Strategy::Lb, Choice::Argmax).map(|s| s.0.reward.aggregate)).collect::<tap_core::Result<_>>()?;
    println!("policy R {:.3} after {} epochs", Metrics::from_rewards(&net).r, cfg.epochs);
    Ok(())
}
