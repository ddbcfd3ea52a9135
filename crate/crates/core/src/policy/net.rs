//! Forward pass and episode execution.

use rand::{Rng, RngCore};

use super::tape::{NodeId, Tape, Tensor};
use super::{DecoderInput, DynamicInput, Policy};
use crate::container::HeightMap;
use crate::error::{Result, TapError};
use crate::extensions::Omega;
use crate::geom::{Mode, Orientation};
use crate::instance::{ProblemInstance, Solution};
use crate::placement::Strategy;
use crate::precedence::StateRef;
use crate::solvers::Session;

/// How the next state is chosen from the pointer distribution.
pub enum Choice<'a> {
    Sample(&'a mut dyn RngCore),
    Argmax,
    /// Replays a fixed sequence (used to re-evaluate log-probabilities).
    Forced(&'a [StateRef]),
}

/// One decoding step as seen by the network.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    /// States presented to the network, in encoder row order.
    pub states: Vec<StateRef>,
    pub valid: Vec<bool>,
    pub probs: Vec<f64>,
    pub chosen: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RolloutTrace {
    pub steps: Vec<TraceStep>,
    pub log_probs: Vec<f64>,
    pub reward: f64,
    /// Critic estimate of `reward` from the initial encoding.
    pub value: f64,
}

impl RolloutTrace {
    pub fn chosen(&self) -> Vec<StateRef> {
        self.steps.iter().map(|s| s.states[s.chosen]).collect()
    }
}

/// A finished episode together with the tape that produced it.
pub struct Episode<'p> {
    pub tape: Tape<'p>,
    pub solution: Solution,
    pub trace: RolloutTrace,
    /// Sum of the chosen states' log-probabilities.
    pub log_prob: NodeId,
    /// Sum of per-step pointer entropies.
    pub entropy: NodeId,
    /// Critic output; its input is detached from the encoder.
    pub value: NodeId,
}

/// Builds the network's operations on a tape.
pub struct Net<'p> {
    pub tape: Tape<'p>,
    policy: &'p Policy,
}

impl<'p> Net<'p> {
    pub fn new(policy: &'p Policy) -> Self {
        Self { tape: Tape::new(&policy.params), policy }
    }

    fn linear(&mut self, x: NodeId, w: usize, b: usize) -> NodeId {
        let w = self.tape.param(w);
        let b = self.tape.param(b);
        let y = self.tape.matmul(x, w);
        self.tape.add(y, b)
    }

    /// Static embedding of per-state features (one row per state).
    pub fn static_embed(&mut self, feats: Tensor) -> NodeId {
        let l = &self.policy.layout;
        let (w, b) = (l.static_w, l.static_b);
        let x = self.tape.input(feats);
        self.linear(x, w, b)
    }

    /// Embedding of the `3 * capacity` blocker bits of each state.
    pub fn dynamic_embed(&mut self, bits: Tensor) -> NodeId {
        let l = &self.policy.layout;
        let (w1, b1, w2, b2) = (l.dyn_w1, l.dyn_b1, l.dyn_w2, l.dyn_b2);
        let x = self.tape.input(bits);
        let h = self.linear(x, w1, b1);
        let h = self.tape.relu(h);
        self.linear(h, w2, b2)
    }

    pub fn encode(&mut self, feats: Tensor, bits: Tensor) -> NodeId {
        let s = self.static_embed(feats);
        let d = self.dynamic_embed(bits);
        self.tape.concat_cols(&[s, d])
    }

    /// Critic estimate from the mean encoding, which enters as a constant.
    pub fn critic(&mut self, e: NodeId) -> NodeId {
        let v = self.tape.value(e);
        let mut mean = Tensor::zeros(1, v.cols);
        for r in 0..v.rows {
            for c in 0..v.cols {
                mean.data[c] += v.data[r * v.cols + c] / v.rows as f64;
            }
        }
        let l = &self.policy.layout;
        let (w1, b1, w2, b2) = (l.critic_w1, l.critic_b1, l.critic_w2, l.critic_b2);
        let x = self.tape.input(mean);
        let h = self.linear(x, w1, b1);
        let h = self.tape.relu(h);
        self.linear(h, w2, b2)
    }

    pub fn height_embed(&mut self, hm: &HeightMap) -> NodeId {
        let cfg = &self.policy.config;
        if cfg.decoder_input == DecoderInput::ShapeOnly {
            return self.tape.input(Tensor::zeros(1, cfg.height_dim));
        }
        let scale = 1.0 / cfg.target_width as f64;
        let feats = hm.represent(cfg.height_repr).into_iter().map(|v| v as f64 * scale).collect();
        let l = &self.policy.layout;
        let (w, b) = (l.height_w, l.height_b);
        let x = self.tape.input(Tensor::row(feats));
        let h = self.linear(x, w, b);
        self.tape.relu(h)
    }

    /// One decoder step. `prev` is the previous choice's static embedding
    /// (`1 x static_dim`). Returns log-probabilities over the rows of `e`
    /// (`-inf` where `mask` is false) and the new hidden state.
    pub fn decode_step(&mut self, e: NodeId, prev: NodeId, heights: &[NodeId], hidden: NodeId, mask: &[bool]) -> Result<(NodeId, NodeId)> {
        if !mask.iter().any(|&m| m) {
            return Err(TapError::Infeasible("every state is masked".into()));
        }
        let cfg = &self.policy.config;
        let h = cfg.hidden;
        let l = self.policy.layout.clone();
        let prev = if cfg.decoder_input == DecoderInput::HeightOnly {
            self.tape.input(Tensor::zeros(1, cfg.static_dim))
        } else {
            prev
        };
        let mut parts = vec![prev];
        parts.extend_from_slice(heights);
        let x = self.tape.concat_cols(&parts);

        // GRU cell
        let gx = self.linear(x, l.gru_wx, l.gru_bx);
        let gh = self.linear(hidden, l.gru_wh, l.gru_bh);
        let (xz, xr, xn) = (self.tape.slice_cols(gx, 0, h), self.tape.slice_cols(gx, h, h), self.tape.slice_cols(gx, 2 * h, h));
        let (hz, hr, hn) = (self.tape.slice_cols(gh, 0, h), self.tape.slice_cols(gh, h, h), self.tape.slice_cols(gh, 2 * h, h));
        let z = self.tape.add(xz, hz);
        let z = self.tape.sigmoid(z);
        let r = self.tape.add(xr, hr);
        let r = self.tape.sigmoid(r);
        let rn = self.tape.mul(r, hn);
        let n = self.tape.add(xn, rn);
        let n = self.tape.tanh(n);
        let diff = self.tape.sub(hidden, n);
        let zd = self.tape.mul(z, diff);
        let hidden = self.tape.add(n, zd);

        // attention over all presented states
        let rows = self.tape.value(e).rows;
        let u = self.score(e, hidden, l.att_we, l.att_wh, l.att_b, l.att_v);
        let la = self.tape.log_softmax(u, &vec![true; rows]);
        let pa = self.tape.exp(la);
        let pt = self.tape.transpose(pa);
        let ctx = self.tape.matmul(pt, e);

        // pointer over valid states
        let q = self.score(e, ctx, l.ptr_we, l.ptr_wc, l.ptr_b, l.ptr_v);
        Ok((self.tape.log_softmax(q, mask), hidden))
    }

    /// `v^T tanh(W_e e_i + W_q q + b)` for every row `e_i`.
    fn score(&mut self, e: NodeId, q: NodeId, we: usize, wq: usize, b: usize, v: usize) -> NodeId {
        let we = self.tape.param(we);
        let wq = self.tape.param(wq);
        let b = self.tape.param(b);
        let v = self.tape.param(v);
        let a = self.tape.matmul(e, we);
        let c = self.tape.matmul(q, wq);
        let a = self.tape.add(a, c);
        let a = self.tape.add(a, b);
        let a = self.tape.tanh(a);
        self.tape.matmul(a, v)
    }
}

fn check_compatible(policy: &Policy, inst: &ProblemInstance) -> Result<()> {
    let c = &policy.config;
    if inst.dims_mode != c.dims_mode
        || inst.container_count != c.container_count
        || inst.target_width != c.target_width
        || inst.target_depth != c.target_depth
    {
        return Err(TapError::Contract(format!(
            "instance ({}D, {} containers, {}x{}) does not match the network ({}D, {} containers, {}x{})",
            inst.dims_mode.as_u8(),
            inst.container_count,
            inst.target_width,
            inst.target_depth,
            c.dims_mode.as_u8(),
            c.container_count,
            c.target_width,
            c.target_depth
        )));
    }
    Ok(())
}

/// Per-state static features of every box: row `b * k + o`.
fn static_features(policy: &Policy, inst: &ProblemInstance) -> Tensor {
    let c = &policy.config;
    let k = c.orientations();
    let f = c.static_features();
    let scale = 1.0 / c.target_width as f64;
    let mut t = Tensor::zeros(inst.len() * k, f);
    for (b, spec) in inst.boxes.iter().enumerate() {
        for o in 0..k {
            let d = Orientation(o as u8).apply(c.dims_mode, spec.dims);
            let row = &mut t.data[(b * k + o) * f..(b * k + o + 1) * f];
            row[0] = d.w as f64 * scale;
            row[1] = d.h as f64 * scale;
            let mut off = 2;
            if c.dims_mode == Mode::Three {
                row[2] = d.d as f64 * scale;
                off = 3;
            }
            if c.container_count > 1 {
                row[off + spec.target_idx as usize] = 1.0;
            }
        }
    }
    t
}

/// Runs the policy on `inst`. With `rolling`, instances above capacity are
/// solved through a priority window; otherwise they are rejected.
pub fn run_episode<'p>(
    policy: &'p Policy,
    inst: &ProblemInstance,
    strategy: Strategy,
    mut choice: Choice<'_>,
    rolling: bool,
) -> Result<Episode<'p>> {
    check_compatible(policy, inst)?;
    let cfg = &policy.config;
    let cap = cfg.capacity;
    if !rolling && inst.len() > cap {
        return Err(TapError::Capacity { boxes: inst.len(), capacity: cap });
    }
    let k = cfg.orientations();
    let mut session = Session::new(inst, strategy)?;
    let initial_graph = session.graph.clone();
    let mut omega = Omega::new(&session.graph, cap);

    let mut net = Net::new(policy);
    let s_all = net.static_embed(static_features(policy, inst));
    let start = net.tape.param(policy.layout.start);
    let mut hidden = net.tape.input(Tensor::zeros(1, cfg.hidden));
    let mut prev = start;
    let mut log_prob = net.tape.input(Tensor::scalar(0.0));
    let mut entropy = net.tape.input(Tensor::scalar(0.0));
    let mut value = None;
    let mut trace = RolloutTrace { steps: Vec::new(), log_probs: Vec::new(), reward: 0.0, value: 0.0 };

    for t in 0..inst.len() {
        let slots = omega.slots().to_vec();
        let enc = match cfg.dynamic {
            DynamicInput::Dynamic => Some(session.graph.encode_slots(&slots, cap)),
            DynamicInput::Initial => Some(initial_graph.encode_slots(&slots, cap)),
            DynamicInput::None => None,
        };
        let mut states = Vec::new();
        let mut rows = Vec::new();
        let mut bits = Vec::new();
        for (s, slot) in slots.iter().enumerate() {
            let Some(b) = *slot else { continue };
            if session.graph.is_packed(b) {
                continue;
            }
            for o in 0..k {
                states.push(StateRef { box_idx: b, orientation: Orientation(o as u8) });
                rows.push(b * k + o);
                match &enc {
                    Some(enc) => bits.extend(enc.state_bits(s * k + o).iter().map(|&x| if x { 1.0 } else { 0.0 })),
                    None => bits.extend(std::iter::repeat_n(0.0, 3 * cap)),
                }
            }
        }
        let valid: Vec<bool> = states.iter().map(|&st| session.graph.is_valid(st.box_idx, st.orientation) && session.fits(st)).collect();

        let sg = net.tape.gather_rows(s_all, &rows);
        let dy = net.dynamic_embed(Tensor::from_vec(states.len(), 3 * cap, bits));
        let e = net.tape.concat_cols(&[sg, dy]);
        if t == 0 {
            value = Some(net.critic(e));
        }
        let heights: Vec<NodeId> = session.containers.iter().map(|c| c.heights.clone()).collect::<Vec<_>>().iter().map(|h| net.height_embed(h)).collect();
        let (lp, h) = net.decode_step(e, prev, &heights, hidden, &valid)?;
        hidden = h;

        let probs: Vec<f64> = net.tape.value(lp).data.iter().map(|l| l.exp()).collect();
        let pick = match &mut choice {
            Choice::Argmax => {
                let mut best = None;
                for (i, &p) in probs.iter().enumerate() {
                    if valid[i] && best.is_none_or(|(_, bp)| p > bp) {
                        best = Some((i, p));
                    }
                }
                best.expect("some state is valid").0
            }
            Choice::Sample(rng) => {
                let mut u: f64 = rng.random();
                let mut pick = None;
                for (i, &p) in probs.iter().enumerate() {
                    if !valid[i] {
                        continue;
                    }
                    pick = Some(i);
                    if u < p {
                        break;
                    }
                    u -= p;
                }
                pick.expect("some state is valid")
            }
            Choice::Forced(seq) => {
                let want = *seq.get(t).ok_or_else(|| TapError::Contract("forced sequence too short".into()))?;
                match states.iter().position(|&s| s == want) {
                    Some(i) if valid[i] => i,
                    _ => return Err(TapError::Contract(format!("forced state {want:?} is not selectable at step {t}"))),
                }
            }
        };

        let chosen_lp = net.tape.pick(lp, pick);
        trace.log_probs.push(net.tape.value(chosen_lp).data[0]);
        log_prob = net.tape.add(log_prob, chosen_lp);
        let ent = net.tape.entropy(lp, &valid);
        entropy = net.tape.add(entropy, ent);

        let st = states[pick];
        session.commit(st)?;
        prev = net.tape.gather_rows(s_all, &[st.box_idx * k + st.orientation.0 as usize]);
        omega.refill(&session.graph);
        trace.steps.push(TraceStep { states, valid, probs, chosen: pick });
    }

    let value = match value {
        Some(v) => v,
        None => {
            let e = net.tape.input(Tensor::zeros(1, cfg.encoding_dim()));
            net.critic(e)
        }
    };
    let solution = session.into_solution()?;
    trace.reward = solution.reward.aggregate.reward;
    trace.value = net.tape.value(value).data[0];
    Ok(Episode { tape: net.tape, solution, trace, log_prob, entropy, value })
}

/// Solves `inst` (at most `capacity` boxes) with the policy.
pub fn rollout(policy: &Policy, inst: &ProblemInstance, strategy: Strategy, choice: Choice<'_>) -> Result<(Solution, RolloutTrace)> {
    let ep = run_episode(policy, inst, strategy, choice, false)?;
    Ok((ep.solution, ep.trace))
}

#[cfg(test)]
mod tests {
    use super::super::PolicyConfig;
    use super::*;
    use crate::instance::{fixture_f1, validate_solution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(capacity: usize, seed: u64) -> Policy {
        let cfg = PolicyConfig {
            capacity,
            static_dim: 8,
            dynamic_dim: 8,
            height_dim: 8,
            hidden: 8,
            critic_hidden: 8,
            ..PolicyConfig::default()
        };
        Policy::new(cfg, seed).unwrap()
    }

    #[test]
    fn episode_gradients_match_finite_differences() {
        use super::super::tape::tests::{numeric, rel_err};
        // larger weights and an instance with several choices per step keep
        // every gradient well above finite-difference noise
        let mut base = small(6, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for i in 0..base.params.len() {
            for x in &mut base.params.tensor_mut(i).data {
                *x = rng.random_range(-1.5..1.5);
            }
        }
        let mut g = crate::datasets::GenConfig::new(crate::datasets::DatasetKind::Rand, Mode::Two);
        g.n = 6;
        g.seed = 4;
        let inst = crate::datasets::generate_one(&g, 0).unwrap().instance;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (_, trace) = rollout(&base, &inst, Strategy::Lb, Choice::Sample(&mut rng)).unwrap();
        let seq = trace.chosen();
        // actor terms, and the critic term whose input is detached
        let loss = |p: &Policy, critic: bool| {
            let mut ep = run_episode(p, &inst, Strategy::Lb, Choice::Forced(&seq), false).unwrap();
            let t = &mut ep.tape;
            let tot = if critic {
                let d = t.add_scalar(ep.value, -0.7);
                t.square(d)
            } else {
                let ent = t.scale(ep.entropy, 0.3);
                t.add(ep.log_prob, ent)
            };
            let v = t.value(tot).data[0];
            (v, t.backward(tot))
        };
        for critic in [false, true] {
            let (_, analytic) = loss(&base, critic);
            let fd = numeric(&base.params, &|ps| {
                let mut p = base.clone();
                p.params = ps.clone();
                loss(&p, critic).0
            });
            for (i, (a, f)) in analytic.iter().zip(&fd).enumerate() {
                let name = &base.params.names()[i];
                if critic && !base.is_critic_param(i) {
                    assert!(a.data.iter().all(|&x| x == 0.0), "{name} gets critic gradient");
                } else if !critic && base.is_critic_param(i) {
                    assert!(a.data.iter().all(|&x| x == 0.0) && f.data.iter().all(|&x| x == 0.0), "{name}");
                } else {
                    assert!(rel_err(a, f) < 1e-4, "{name}: {:?} vs {:?}", a.data, f.data);
                }
            }
        }
    }

    #[test]
    fn f1_first_step_support() {
        let p = small(4, 1);
        let (sol, trace) = rollout(&p, &fixture_f1(), Strategy::Lb, Choice::Argmax).unwrap();
        let first = &trace.steps[0];
        let support: Vec<(usize, u8)> = first
            .states
            .iter()
            .zip(&first.probs)
            .filter(|(_, &pr)| pr > 0.0)
            .map(|(s, _)| (s.box_idx, s.orientation.0))
            .collect();
        assert_eq!(support, vec![(0, 0), (2, 0)]);
        assert!((first.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(validate_solution(&fixture_f1(), &sol).is_empty());
    }

    #[test]
    fn argmax_is_deterministic() {
        let p = small(4, 2);
        let a = rollout(&p, &fixture_f1(), Strategy::Lb, Choice::Argmax).unwrap();
        let b = rollout(&p, &fixture_f1(), Strategy::Lb, Choice::Argmax).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn forced_replay_matches_sampled_log_probs() {
        let p = small(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, t1) = rollout(&p, &fixture_f1(), Strategy::Lb, Choice::Sample(&mut rng)).unwrap();
        let seq = t1.chosen();
        let (_, t2) = rollout(&p, &fixture_f1(), Strategy::Lb, Choice::Forced(&seq)).unwrap();
        assert_eq!(t1.log_probs, t2.log_probs);
    }

    #[test]
    fn capacity_is_enforced() {
        let p = small(2, 0);
        assert!(matches!(rollout(&p, &fixture_f1(), Strategy::Lb, Choice::Argmax), Err(TapError::Capacity { .. })));
    }

    #[test]
    fn identical_states_embed_identically() {
        let p = small(3, 4);
        let mut net = Net::new(&p);
        let feats = Tensor::from_vec(2, 2, vec![0.4, 0.2, 0.4, 0.2]);
        let e = net.encode(feats.clone(), Tensor::zeros(2, 9));
        let v = net.tape.value(e).clone();
        assert_eq!(v.data[..16], v.data[16..]);
        // one mask bit changes only its own row
        let mut bits = Tensor::zeros(2, 9);
        bits.data[9 + 4] = 1.0;
        let e2 = net.encode(feats, bits);
        let v2 = net.tape.value(e2);
        assert_eq!(v.data[..16], v2.data[..16]);
        assert_ne!(v.data[16..], v2.data[16..]);
    }

    #[test]
    fn single_valid_state_gets_all_mass() {
        let p = small(3, 5);
        let mut net = Net::new(&p);
        let e = net.encode(Tensor::from_vec(3, 2, vec![0.2, 0.4, 0.6, 0.2, 0.4, 0.4]), Tensor::zeros(3, 9));
        let prev = net.tape.param(p.layout.start);
        let hm = net.height_embed(&HeightMap::new(5, 1));
        let hidden = net.tape.input(Tensor::zeros(1, 8));
        let (lp, _) = net.decode_step(e, prev, &[hm], hidden, &[false, true, false]).unwrap();
        let probs: Vec<f64> = net.tape.value(lp).data.iter().map(|l| l.exp()).collect();
        assert_eq!(probs, vec![0.0, 1.0, 0.0]);
        assert!(net.decode_step(e, prev, &[hm], hidden, &[false; 3]).is_err());
    }

    #[test]
    fn critic_ignores_state_order() {
        let p = small(3, 6);
        let mut net = Net::new(&p);
        let a = net.encode(Tensor::from_vec(2, 2, vec![0.2, 0.4, 0.6, 0.8]), Tensor::zeros(2, 9));
        let b = net.encode(Tensor::from_vec(2, 2, vec![0.6, 0.8, 0.2, 0.4]), Tensor::zeros(2, 9));
        let va = net.critic(a);
        let vb = net.critic(b);
        assert!((net.tape.value(va).data[0] - net.tape.value(vb).data[0]).abs() < 1e-12);
    }
}
