//! Policy-gradient training and evaluation.
//!
//! Each batch samples one rollout per instance. The actor term is
//! `-(R - b) * sum_t log pi(y_t)` with `b` the critic's estimate (or an
//! exponential moving average of past rewards), the critic term is
//! `(V - R)^2`, both averaged over the batch. Episodes run in parallel, but
//! each draws from its own seeded stream and gradients are summed in batch
//! order, so a run is reproducible regardless of thread count.
//!
//! The training curve CSV has the columns
//! `epoch,C,P,S,R,train_R,value_err,grad_norm`, where C/P/S/R are argmax
//! means on the validation split (or the sampled training means when there
//! is none).

use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datasets::{load_dataset, write_atomic};
use crate::error::{Result, TapError};
use crate::instance::{ProblemInstance, Solution};
use crate::placement::Strategy;
use crate::policy::params::{add_grads, clip_global_norm, Adam};
use crate::policy::{run_episode, Choice, Policy, PolicyConfig, Tensor};
use crate::reward::RewardBreakdown;
use crate::solvers::{solve_greedy, solve_random};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    #[default]
    Critic,
    Ema,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub clip_norm: f64,
    pub entropy_coef: f64,
    pub baseline: Baseline,
    /// Weight of the old value in the moving-average baseline.
    pub ema_decay: f64,
    pub placement: Strategy,
    pub seed: u64,
    /// Network shape; also carries the height-map mode and capacity.
    pub policy: PolicyConfig,
    /// Validate every this many epochs.
    pub eval_every: usize,
    /// Dataset directories and output directory, used by [`train_from_config`].
    pub train_data: Option<PathBuf>,
    pub valid_data: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            epochs: 10,
            lr_actor: 1e-4,
            lr_critic: 1e-4,
            clip_norm: 2.0,
            entropy_coef: 0.0,
            baseline: Baseline::Critic,
            ema_decay: 0.9,
            placement: Strategy::Lb,
            seed: 0,
            policy: PolicyConfig::default(),
            eval_every: 1,
            train_data: None,
            valid_data: None,
            out_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn check(&self) -> Result<()> {
        let positive = self.batch_size > 0
            && self.epochs > 0
            && self.eval_every > 0
            && self.lr_actor > 0.0
            && self.lr_critic > 0.0
            && self.clip_norm > 0.0;
        if !positive {
            return Err(TapError::Validation(vec!["batch size, epochs, learning rates and clip must be positive".into()]));
        }
        if !(0.0..1.0).contains(&self.ema_decay) || self.entropy_coef < 0.0 || !self.entropy_coef.is_finite() {
            return Err(TapError::Validation(vec!["ema_decay must be in [0, 1) and entropy_coef >= 0".into()]));
        }
        self.policy.check()
    }
}

/// Mean reward terms over a set of solutions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub count: usize,
}

impl Metrics {
    pub fn from_rewards<'a>(rs: impl IntoIterator<Item = &'a RewardBreakdown>) -> Self {
        let mut m = Metrics::default();
        for r in rs {
            m.c += r.compactness;
            m.p += r.pyramidality;
            m.s += r.stability;
            m.r += r.reward;
            m.count += 1;
        }
        if m.count > 0 {
            let n = m.count as f64;
            m.c /= n;
            m.p /= n;
            m.s /= n;
            m.r /= n;
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub metrics: Metrics,
    pub train_reward: f64,
    /// Mean `|V - R|` over the epoch's sampled episodes.
    pub value_err: f64,
    /// Mean global gradient norm before clipping.
    pub grad_norm: f64,
}

pub fn curve_csv(curve: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,C,P,S,R,train_R,value_err,grad_norm\n");
    for e in curve {
        let m = &e.metrics;
        s += &format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            e.epoch, m.c, m.p, m.s, m.r, e.train_reward, e.value_err, e.grad_norm
        );
    }
    s
}

pub struct TrainOutcome {
    pub best: Policy,
    pub best_epoch: usize,
    pub last: Policy,
    pub curve: Vec<EpochRecord>,
}

struct EpisodeResult {
    grads: Vec<Tensor>,
    reward: RewardBreakdown,
    value: f64,
    loss: f64,
}

fn episode_rng(seed: u64, epoch: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((epoch as u64) << 32) | index as u64);
    rng
}

fn train_episode(policy: &Policy, cfg: &TrainConfig, inst: &ProblemInstance, rng: &mut ChaCha8Rng, baseline: Option<f64>) -> Result<EpisodeResult> {
    let mut ep = run_episode(policy, inst, cfg.placement, Choice::Sample(rng), false)?;
    let r = ep.trace.reward;
    let v = ep.trace.value;
    let b = baseline.unwrap_or(v);
    let inv = 1.0 / cfg.batch_size as f64;
    let t = &mut ep.tape;
    let mut loss = t.scale(ep.log_prob, -(r - b) * inv);
    if cfg.baseline == Baseline::Critic {
        let d = t.add_scalar(ep.value, -r);
        let sq = t.square(d);
        let sq = t.scale(sq, inv);
        loss = t.add(loss, sq);
    }
    if cfg.entropy_coef > 0.0 {
        let e = t.scale(ep.entropy, -cfg.entropy_coef * inv);
        loss = t.add(loss, e);
    }
    let value = t.value(loss).data[0];
    let grads = t.backward(loss);
    Ok(EpisodeResult { grads, reward: ep.solution.reward.aggregate, value: v, loss: value })
}

/// Trains a fresh policy. `valid` may be empty.
pub fn train(cfg: &TrainConfig, train_set: &[ProblemInstance], valid: &[ProblemInstance], mut on_epoch: impl FnMut(&EpochRecord)) -> Result<TrainOutcome> {
    cfg.check()?;
    let cap = cfg.policy.capacity;
    if let Some(i) = train_set.iter().chain(valid).find(|i| i.len() > cap) {
        return Err(TapError::Capacity { boxes: i.len(), capacity: cap });
    }
    if train_set.is_empty() {
        return Err(TapError::Validation(vec!["empty training set".into()]));
    }
    let mut policy = Policy::new(cfg.policy.clone(), cfg.seed)?;
    let mut adam = Adam::new(&policy.params);
    let critic: Vec<bool> = (0..policy.params.len()).map(|i| policy.is_critic_param(i)).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(u64::MAX);
    let mut ema: Option<f64> = None;
    let mut curve = Vec::new();
    let mut best: Option<(f64, usize, Policy)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut rewards, mut value_err, mut norm_sum, mut batches) = (Vec::new(), 0.0, 0.0, 0);
        for (bi, batch) in order.chunks(cfg.batch_size).enumerate() {
            let base = if cfg.baseline == Baseline::Ema { Some(ema.unwrap_or(0.0)) } else { None };
            let results: Vec<Result<EpisodeResult>> = batch
                .par_iter()
                .map(|&i| {
                    let mut rng = episode_rng(cfg.seed, epoch, i);
                    train_episode(&policy, cfg, &train_set[i], &mut rng, base)
                })
                .collect();
            let mut grads: Vec<Tensor> = policy.params.tensors().iter().map(|t| Tensor::zeros(t.rows, t.cols)).collect();
            let mut batch_r = 0.0;
            let mut loss = 0.0;
            for res in results {
                let res = res?;
                add_grads(&mut grads, &res.grads);
                batch_r += res.reward.reward;
                value_err += (res.value - res.reward.reward).abs();
                loss += res.loss;
                rewards.push(res.reward);
            }
            if !loss.is_finite() || !grads.iter().all(Tensor::is_finite) {
                return Err(nonfinite(cfg, epoch, bi, batch, train_set, loss));
            }
            norm_sum += clip_global_norm(&mut grads, cfg.clip_norm);
            batches += 1;
            adam.step(&mut policy.params, &grads, |i| if critic[i] { cfg.lr_critic } else { cfg.lr_actor });
            if !policy.params.is_finite() {
                return Err(nonfinite(cfg, epoch, bi, batch, train_set, loss));
            }
            let mean_r = batch_r / batch.len() as f64;
            ema = Some(match ema {
                None => mean_r,
                Some(e) => cfg.ema_decay * e + (1.0 - cfg.ema_decay) * mean_r,
            });
        }
        let train_m = Metrics::from_rewards(&rewards);
        let evaluate_now = epoch % cfg.eval_every == 0 || epoch == cfg.epochs;
        let metrics = if valid.is_empty() {
            train_m
        } else if evaluate_now {
            evaluate_policy(&policy, valid, cfg.placement, false)?.metrics
        } else {
            curve.last().map(|e: &EpochRecord| e.metrics).unwrap_or_default()
        };
        let rec = EpochRecord {
            epoch,
            metrics,
            train_reward: train_m.r,
            value_err: value_err / rewards.len() as f64,
            grad_norm: norm_sum / batches.max(1) as f64,
        };
        log::info!("epoch {epoch}: R {:.4} train R {:.4} |V-R| {:.4}", metrics.r, train_m.r, rec.value_err);
        on_epoch(&rec);
        curve.push(rec);
        if evaluate_now && best.as_ref().is_none_or(|(r, _, _)| metrics.r > *r) {
            best = Some((metrics.r, epoch, policy.clone()));
        }
    }
    let (_, best_epoch, best) = best.expect("at least one epoch is evaluated");
    Ok(TrainOutcome { best, best_epoch, last: policy, curve })
}

fn nonfinite(cfg: &TrainConfig, epoch: usize, batch_idx: usize, batch: &[usize], set: &[ProblemInstance], loss: f64) -> TapError {
    let mut msg = format!("non-finite loss or gradient at epoch {epoch}, batch {batch_idx} (loss {loss}, instances {batch:?})");
    if let Some(dir) = &cfg.out_dir {
        let dump: Vec<&ProblemInstance> = batch.iter().map(|&i| &set[i]).collect();
        let path = dir.join("nonfinite_batch.json");
        if let Ok(json) = serde_json::to_string(&dump) {
            if write_atomic(&path, json.as_bytes()).is_ok() {
                msg += &format!("; batch written to {}", path.display());
            }
        }
    }
    TapError::NonFinite(msg)
}

/// Loads the datasets named in `cfg`, trains, and writes `best.json`,
/// `last.json` and `curve.csv` into `cfg.out_dir`.
pub fn train_from_config(cfg: &TrainConfig) -> Result<TrainOutcome> {
    let train_dir = cfg.train_data.as_ref().ok_or_else(|| TapError::Validation(vec!["train_data is required".into()]))?;
    let out = cfg.out_dir.as_ref().ok_or_else(|| TapError::Validation(vec!["out_dir is required".into()]))?;
    std::fs::create_dir_all(out)?;
    let train_set = load_dataset(train_dir)?.instances;
    let valid = match &cfg.valid_data {
        Some(d) => load_dataset(d)?.instances,
        None => Vec::new(),
    };
    let outcome = train(cfg, &train_set, &valid, |_| {})?;
    outcome.best.save(&out.join("best.json"))?;
    outcome.last.save(&out.join("last.json"))?;
    write_atomic(&out.join("curve.csv"), curve_csv(&outcome.curve).as_bytes())?;
    Ok(outcome)
}

/// Solver used by [`evaluate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Random,
    Greedy,
    Net,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" => Ok(Self::Random),
            "greedy" => Ok(Self::Greedy),
            "net" => Ok(Self::Net),
            _ => Err(format!("unknown method {s:?} (random|greedy|net)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metrics: Metrics,
    /// Mean wall time per instance in milliseconds.
    pub t_ms: f64,
    pub solutions: Vec<Solution>,
}

impl EvalReport {
    pub fn csv(&self) -> String {
        let m = &self.metrics;
        format!("C,P,S,R,t_ms,count\n{:.6},{:.6},{:.6},{:.6},{:.4},{}\n", m.c, m.p, m.s, m.r, self.t_ms, m.count)
    }
}

fn report(results: Vec<Result<(Solution, f64)>>) -> Result<EvalReport> {
    let results: Vec<(Solution, f64)> = results.into_iter().collect::<Result<_>>()?;
    let n = results.len().max(1) as f64;
    let t_ms = results.iter().map(|r| r.1).sum::<f64>() / n;
    let solutions: Vec<Solution> = results.into_iter().map(|r| r.0).collect();
    let metrics = Metrics::from_rewards(solutions.iter().map(|s| &s.reward.aggregate));
    Ok(EvalReport { metrics, t_ms, solutions })
}

fn timed(f: impl FnOnce() -> Result<Solution>) -> Result<(Solution, f64)> {
    let t = Instant::now();
    let s = f()?;
    Ok((s, t.elapsed().as_secs_f64() * 1e3))
}

/// Argmax evaluation of a policy. Instances above capacity need `rolling`.
pub fn evaluate_policy(policy: &Policy, set: &[ProblemInstance], strategy: Strategy, rolling: bool) -> Result<EvalReport> {
    let cap = policy.config.capacity;
    if !rolling {
        if let Some(i) = set.iter().find(|i| i.len() > cap) {
            return Err(TapError::Contract(format!(
                "instance has {} boxes but the network capacity is {cap}; use rolling mode",
                i.len()
            )));
        }
    }
    report(
        set.par_iter()
            .map(|inst| timed(|| Ok(run_episode(policy, inst, strategy, Choice::Argmax, rolling)?.solution)))
            .collect(),
    )
}

/// Evaluates a baseline or a policy; random runs draw instance `i` from stream `i` of `seed`.
pub fn evaluate(method: Method, policy: Option<&Policy>, set: &[ProblemInstance], strategy: Strategy, seed: u64, rolling: bool) -> Result<EvalReport> {
    match method {
        Method::Net => {
            let p = policy.ok_or_else(|| TapError::Contract("net evaluation needs a model".into()))?;
            evaluate_policy(p, set, strategy, rolling)
        }
        Method::Greedy => report(set.par_iter().map(|inst| timed(|| solve_greedy(inst, strategy))).collect()),
        Method::Random => report(
            set.par_iter()
                .enumerate()
                .map(|(i, inst)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    timed(|| solve_random(inst, strategy, &mut rng))
                })
                .collect(),
        ),
    }
}

/// Mean `|V - R|` of the critic under argmax rollouts.
pub fn value_error(policy: &Policy, set: &[ProblemInstance], strategy: Strategy) -> Result<f64> {
    let errs: Vec<f64> = set
        .par_iter()
        .map(|inst| {
            let ep = run_episode(policy, inst, strategy, Choice::Argmax, false)?;
            Ok((ep.trace.value - ep.trace.reward).abs())
        })
        .collect::<Result<_>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate, DatasetKind, GenConfig};
    use crate::geom::Mode;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            batch_size: 8,
            epochs: 2,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            seed: 9,
            policy: PolicyConfig { capacity: 4, static_dim: 8, dynamic_dim: 8, height_dim: 8, hidden: 8, critic_hidden: 8, ..PolicyConfig::default() },
            ..TrainConfig::default()
        }
    }

    fn tiny_set(count: usize) -> Vec<ProblemInstance> {
        let g = GenConfig { n: 4, count, seed: 1, ..GenConfig::new(DatasetKind::Rand, Mode::Two) };
        generate(&g).unwrap().into_iter().map(|g| g.instance).collect()
    }

    #[test]
    fn actor_loss_leaves_critic_untouched() {
        let cfg = tiny_cfg();
        let policy = Policy::new(cfg.policy.clone(), 1).unwrap();
        let inst = &tiny_set(1)[0];
        let mut rng = episode_rng(0, 0, 0);
        let res = train_episode(&policy, &TrainConfig { baseline: Baseline::Ema, ..cfg }, inst, &mut rng, Some(0.3)).unwrap();
        for (i, g) in res.grads.iter().enumerate() {
            let zero = g.data.iter().all(|&x| x == 0.0);
            assert_eq!(zero, policy.is_critic_param(i), "{}", policy.params.names()[i]);
        }
    }

    #[test]
    fn seeded_runs_match() {
        let set = tiny_set(24);
        let cfg = tiny_cfg();
        let a = train(&cfg, &set[..16], &set[16..], |_| {}).unwrap();
        let b = train(&cfg, &set[..16], &set[16..], |_| {}).unwrap();
        assert_eq!(a.curve, b.curve);
        assert_eq!(a.last.params, b.last.params);
        assert_eq!(curve_csv(&a.curve).lines().count(), 3);
    }

    #[test]
    fn oversize_instances_are_rejected() {
        let set = tiny_set(2);
        let mut cfg = tiny_cfg();
        cfg.policy.capacity = 3;
        assert!(matches!(train(&cfg, &set, &[], |_| {}), Err(TapError::Capacity { .. })));
        let p = Policy::new(cfg.policy, 0).unwrap();
        assert!(matches!(evaluate_policy(&p, &set, Strategy::Lb, false), Err(TapError::Contract(_))));
        assert_eq!(evaluate_policy(&p, &set, Strategy::Lb, true).unwrap().metrics.count, 2);
    }

    #[test]
    fn random_evaluation_is_seeded() {
        let set = tiny_set(6);
        let a = evaluate(Method::Random, None, &set, Strategy::Lb, 4, false).unwrap();
        let b = evaluate(Method::Random, None, &set, Strategy::Lb, 4, false).unwrap();
        assert_eq!(a.solutions, b.solutions);
    }
}
