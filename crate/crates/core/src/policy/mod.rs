//! The box-selection network.
//!
//! Each oriented state `i` gets an encoding `e_i = [s_i; d_i]`: `s_i` embeds
//! the oriented dims (divided by the target width, plus a container one-hot
//! when there are several containers) and `d_i` embeds the three blocker
//! masks of the state. A GRU decoder consumes the previous choice's static
//! embedding and one embedding per container height map, attends over the
//! encodings and points at the next state. A small critic predicts the final
//! reward from the mean encoding.
//!
//! Checkpoints are JSON:
//!
//! ```json
//! {"format": "tap-policy", "version": 1, "config": {...},
//!  "tensors": [{"name": "static.w", "rows": 2, "cols": 64, "data": [...]}]}
//! ```
//!
//! Floats are written with round-trip precision, so a reload is bit-exact.

pub mod net;
pub mod params;
pub mod tape;

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::container::{HeightMap, HeightRepr};
use crate::error::{Result, TapError};
use crate::geom::Mode;

pub use net::{rollout, run_episode, Choice, Episode, Net, RolloutTrace, TraceStep};
pub use params::ParamSet;
pub use tape::{NodeId, Tape, Tensor};

/// What the encoder sees of the blocker masks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DynamicInput {
    /// Current masks, updated after every step.
    #[default]
    Dynamic,
    /// Masks of the initial pile, never updated.
    Initial,
    /// All zeros.
    None,
}

impl std::str::FromStr for DynamicInput {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dynamic" => Ok(Self::Dynamic),
            "initial" => Ok(Self::Initial),
            "none" => Ok(Self::None),
            _ => Err(format!("unknown mask input {s:?} (dynamic|initial|none)")),
        }
    }
}

/// Which inputs the decoder receives besides its hidden state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderInput {
    #[default]
    Both,
    ShapeOnly,
    HeightOnly,
}

impl std::str::FromStr for DecoderInput {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "both" => Ok(Self::Both),
            "shape-only" => Ok(Self::ShapeOnly),
            "height-only" => Ok(Self::HeightOnly),
            _ => Err(format!("unknown decoder input {s:?} (both|shape-only|height-only)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyConfig {
    pub dims_mode: Mode,
    /// Boxes the network can see at once.
    pub capacity: usize,
    pub container_count: u32,
    pub target_width: u32,
    pub target_depth: u32,
    pub static_dim: usize,
    pub dynamic_dim: usize,
    pub height_dim: usize,
    pub hidden: usize,
    pub critic_hidden: usize,
    pub height_repr: HeightRepr,
    pub dynamic: DynamicInput,
    pub decoder_input: DecoderInput,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            dims_mode: Mode::Two,
            capacity: 10,
            container_count: 1,
            target_width: 5,
            target_depth: 1,
            static_dim: 64,
            dynamic_dim: 64,
            height_dim: 64,
            hidden: 128,
            critic_hidden: 128,
            height_repr: HeightRepr::Gradient,
            dynamic: DynamicInput::Dynamic,
            decoder_input: DecoderInput::Both,
        }
    }
}

impl PolicyConfig {
    pub fn orientations(&self) -> usize {
        self.dims_mode.orientation_count()
    }

    pub fn static_features(&self) -> usize {
        let dims = if self.dims_mode == Mode::Three { 3 } else { 2 };
        dims + if self.container_count > 1 { self.container_count as usize } else { 0 }
    }

    pub fn encoding_dim(&self) -> usize {
        self.static_dim + self.dynamic_dim
    }

    pub fn height_len(&self) -> usize {
        HeightMap::repr_len(self.target_width, self.target_depth, self.height_repr)
    }

    pub fn decoder_in(&self) -> usize {
        self.static_dim + self.container_count as usize * self.height_dim
    }

    pub fn check(&self) -> Result<()> {
        let dims = [self.capacity, self.static_dim, self.dynamic_dim, self.height_dim, self.hidden, self.critic_hidden];
        if dims.contains(&0) || self.container_count == 0 || self.target_width == 0 || self.target_depth == 0 {
            return Err(TapError::Contract("policy sizes must be positive".into()));
        }
        if self.dims_mode == Mode::Two && self.target_depth != 1 {
            return Err(TapError::Contract("2D policy needs target depth 1".into()));
        }
        Ok(())
    }
}

/// Parameter indices, resolved once.
#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Layout {
    pub static_w: usize,
    pub static_b: usize,
    pub dyn_w1: usize,
    pub dyn_b1: usize,
    pub dyn_w2: usize,
    pub dyn_b2: usize,
    pub height_w: usize,
    pub height_b: usize,
    pub start: usize,
    pub gru_wx: usize,
    pub gru_wh: usize,
    pub gru_bx: usize,
    pub gru_bh: usize,
    pub att_we: usize,
    pub att_wh: usize,
    pub att_b: usize,
    pub att_v: usize,
    pub ptr_we: usize,
    pub ptr_wc: usize,
    pub ptr_b: usize,
    pub ptr_v: usize,
    pub critic_w1: usize,
    pub critic_b1: usize,
    pub critic_w2: usize,
    pub critic_b2: usize,
}

const NAMES: [&str; 25] = [
    "static.w", "static.b", "dyn.w1", "dyn.b1", "dyn.w2", "dyn.b2", "height.w", "height.b", "start", "gru.wx",
    "gru.wh", "gru.bx", "gru.bh", "att.we", "att.wh", "att.b", "att.v", "ptr.we", "ptr.wc", "ptr.b", "ptr.v",
    "critic.w1", "critic.b1", "critic.w2", "critic.b2",
];

impl Layout {
    fn resolve(p: &ParamSet) -> Result<Self> {
        let i = |n: &str| p.index_of(n).ok_or_else(|| TapError::Format(format!("checkpoint lacks tensor {n}")));
        Ok(Self {
            static_w: i("static.w")?,
            static_b: i("static.b")?,
            dyn_w1: i("dyn.w1")?,
            dyn_b1: i("dyn.b1")?,
            dyn_w2: i("dyn.w2")?,
            dyn_b2: i("dyn.b2")?,
            height_w: i("height.w")?,
            height_b: i("height.b")?,
            start: i("start")?,
            gru_wx: i("gru.wx")?,
            gru_wh: i("gru.wh")?,
            gru_bx: i("gru.bx")?,
            gru_bh: i("gru.bh")?,
            att_we: i("att.we")?,
            att_wh: i("att.wh")?,
            att_b: i("att.b")?,
            att_v: i("att.v")?,
            ptr_we: i("ptr.we")?,
            ptr_wc: i("ptr.wc")?,
            ptr_b: i("ptr.b")?,
            ptr_v: i("ptr.v")?,
            critic_w1: i("critic.w1")?,
            critic_b1: i("critic.b1")?,
            critic_w2: i("critic.w2")?,
            critic_b2: i("critic.b2")?,
        })
    }
}

fn shapes(c: &PolicyConfig) -> [(usize, usize); 25] {
    let (ds, dd, dh, h, d) = (c.static_dim, c.dynamic_dim, c.height_dim, c.hidden, c.encoding_dim());
    [
        (c.static_features(), ds),
        (1, ds),
        (3 * c.capacity, dd),
        (1, dd),
        (dd, dd),
        (1, dd),
        (c.height_len(), dh),
        (1, dh),
        (1, ds),
        (c.decoder_in(), 3 * h),
        (h, 3 * h),
        (1, 3 * h),
        (1, 3 * h),
        (d, h),
        (h, h),
        (1, h),
        (h, 1),
        (d, h),
        (d, h),
        (1, h),
        (h, 1),
        (d, c.critic_hidden),
        (1, c.critic_hidden),
        (c.critic_hidden, 1),
        (1, 1),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub config: PolicyConfig,
    pub params: ParamSet,
    pub(crate) layout: Layout,
}

impl Policy {
    /// Fresh parameters drawn from `seed`. Biases start at zero.
    pub fn new(config: PolicyConfig, seed: u64) -> Result<Self> {
        config.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::default();
        for (name, (r, c)) in NAMES.iter().zip(shapes(&config)) {
            let leaf = name.rsplit('.').next().unwrap_or(name);
            if name.contains('.') && leaf.starts_with('b') {
                params.push_zeros(name, r, c);
            } else {
                params.push_random(name, r, c, &mut rng);
            }
        }
        let layout = Layout::resolve(&params)?;
        Ok(Self { config, params, layout })
    }

    pub fn from_params(config: PolicyConfig, params: ParamSet) -> Result<Self> {
        config.check()?;
        let layout = Layout::resolve(&params)?;
        for (name, (r, c)) in NAMES.iter().zip(shapes(&config)) {
            let t = params.tensor(params.index_of(name).expect("resolved"));
            if (t.rows, t.cols) != (r, c) {
                return Err(TapError::Format(format!("tensor {name} is {}x{}, config needs {r}x{c}", t.rows, t.cols)));
            }
        }
        Ok(Self { config, params, layout })
    }

    /// Parameters trained by the critic loss only.
    pub fn is_critic_param(&self, i: usize) -> bool {
        self.params.names()[i].starts_with("critic.")
    }

    pub fn to_json(&self) -> String {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            tensors: self
                .params
                .names()
                .iter()
                .zip(self.params.tensors())
                .map(|(n, t)| NamedTensor { name: n.clone(), rows: t.rows, cols: t.cols, data: t.data.clone() })
                .collect(),
        };
        serde_json::to_string(&ck).expect("checkpoint serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(s)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(TapError::Format(format!("checkpoint {} v{}", ck.format, ck.version)));
        }
        let mut params = ParamSet::default();
        for t in ck.tensors {
            if t.rows * t.cols != t.data.len() {
                return Err(TapError::Format(format!("tensor {} has wrong element count", t.name)));
            }
            params.push(&t.name, Tensor::from_vec(t.rows, t.cols, t.data));
        }
        Self::from_params(ck.config, params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::datasets::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

const CHECKPOINT_FORMAT: &str = "tap-policy";
const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    config: PolicyConfig,
    tensors: Vec<NamedTensor>,
}
