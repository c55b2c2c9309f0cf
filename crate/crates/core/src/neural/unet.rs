//! Configurable 1D encoder-decoder network on the differentiation tape.

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamId};

use super::tape::{Tape, Var};

/// Architecture configuration. The fingerprint of this struct binds saved
/// weights to the architecture that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnetConfig {
    /// Encoder/decoder levels; input length must divide 2^depth.
    pub depth: usize,
    /// Channels at the first level; level i uses base_channels << i.
    pub base_channels: usize,
    /// Odd convolution kernel length.
    pub kernel: usize,
    /// Add an identity skip across the second bottleneck convolution.
    pub residual_bottleneck: bool,
    /// Gate decoder channels with a squeeze-excite style block.
    pub channel_attention: bool,
    /// Weight initialization seed.
    pub seed: u64,
}

impl Default for UnetConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            base_channels: 8,
            kernel: 3,
            residual_bottleneck: true,
            channel_attention: false,
            seed: 0,
        }
    }
}

impl UnetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::InvalidParams("depth must be >= 1".into()));
        }
        if self.base_channels < 2 {
            return Err(Error::InvalidParams("base_channels must be >= 2".into()));
        }
        if self.kernel % 2 == 0 || self.kernel < 1 {
            return Err(Error::InvalidParams("kernel must be odd".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        let d = h.finalize();
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn tensor_specs(&self) -> Vec<(String, [usize; 3])> {
        fn conv(specs: &mut Vec<(String, [usize; 3])>, name: String, cin: usize, cout: usize, k: usize) {
            specs.push((format!("{name}.w"), [k, cin, cout]));
            specs.push((format!("{name}.b"), [1, 1, cout]));
        }
        let k = self.kernel;
        let mut specs = Vec::new();
        let mut cin = 1;
        for i in 0..self.depth {
            let c = self.base_channels << i;
            conv(&mut specs, format!("enc{i}.conv1"), cin, c, k);
            conv(&mut specs, format!("enc{i}.conv2"), c, c, k);
            cin = c;
        }
        let cb = self.base_channels << self.depth;
        conv(&mut specs, "bottleneck.conv1".into(), cin, cb, k);
        conv(&mut specs, "bottleneck.conv2".into(), cb, cb, k);
        let mut din = cb;
        for i in (0..self.depth).rev() {
            let c = self.base_channels << i;
            conv(&mut specs, format!("dec{i}.up"), din, c, k);
            conv(&mut specs, format!("dec{i}.merge"), 2 * c, c, k);
            if self.channel_attention {
                let mid = (c / 2).max(1);
                specs.push((format!("dec{i}.gate.fc1.w"), [c, mid, 1]));
                specs.push((format!("dec{i}.gate.fc1.b"), [1, 1, mid]));
                specs.push((format!("dec{i}.gate.fc2.w"), [mid, c, 1]));
                specs.push((format!("dec{i}.gate.fc2.b"), [1, 1, c]));
            }
            din = c;
        }
        conv(&mut specs, "head".into(), self.base_channels, 1, 1);
        specs
    }

    /// Analytic learnable-parameter count.
    pub fn param_count(&self) -> usize {
        self.tensor_specs()
            .iter()
            .map(|(_, d)| d[0] * d[1] * d[2])
            .sum()
    }
}

/// One named weight tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: [usize; 3],
    pub data: Vec<f64>,
}

/// Flat, ordered parameter store bound to an architecture fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub tensors: Vec<NamedTensor>,
    pub fingerprint: String,
}

impl ModelParams {
    pub fn n_params(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }
}

/// Seeded Glorot-uniform initialization; biases start at zero.
pub fn init_params(cfg: &UnetConfig) -> Result<ModelParams> {
    cfg.validate()?;
    let tensors = cfg
        .tensor_specs()
        .into_iter()
        .enumerate()
        .map(|(i, (name, dims))| {
            let n = dims[0] * dims[1] * dims[2];
            let data = if name.ends_with(".b") {
                vec![0.0; n]
            } else {
                // conv (K,Cin,Cout): fans K*Cin / K*Cout; dense (Cin,Cout,1)
                let (fan_in, fan_out) = if name.contains("gate") {
                    (dims[0], dims[1])
                } else {
                    (dims[0] * dims[1], dims[0] * dims[2])
                };
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut rng = stream_rng(cfg.seed, StreamId::Init, i as u64);
                (0..n).map(|_| rng.random_range(-a..a)).collect()
            };
            NamedTensor { name, dims, data }
        })
        .collect();
    Ok(ModelParams {
        tensors,
        fingerprint: cfg.fingerprint(),
    })
}

/// Forward graph handle: the tape plus the output node and parameter order.
pub struct UnetGraph {
    pub tape: Tape,
    pub output: Var,
}

fn check_compat(params: &ModelParams, cfg: &UnetConfig, l: usize, c: usize) -> Result<()> {
    cfg.validate()?;
    let expect = cfg.fingerprint();
    if params.fingerprint != expect {
        return Err(Error::ConfigFingerprintMismatch {
            expected: expect,
            found: params.fingerprint.clone(),
        });
    }
    if c != 1 {
        return Err(Error::ShapeMismatch(format!(
            "network expects 1 input channel, got {c}"
        )));
    }
    if l == 0 || l % (1 << cfg.depth) != 0 {
        return Err(Error::ShapeMismatch(format!(
            "input length {l} not divisible by 2^{}",
            cfg.depth
        )));
    }
    Ok(())
}

/// Records the full forward pass of the network over `input` (B, L, 1)
/// on a fresh tape. Internally the tape works in (B, C, L) layout; for a
/// single channel the flat data is identical, so no transpose happens.
pub fn build_forward(
    params: &ModelParams,
    cfg: &UnetConfig,
    batch_dims: [usize; 3],
    input: Vec<f64>,
) -> Result<UnetGraph> {
    let [bs, l, c] = batch_dims;
    check_compat(params, cfg, l, c)?;
    let mut tape = Tape::new();
    let mut next_param = 0usize;
    let mut bind = |tape: &mut Tape| -> Var {
        let t = &params.tensors[next_param];
        let v = tape.param(next_param, t.dims, t.data.clone());
        next_param += 1;
        v
    };

    let x0 = tape.input([bs, 1, l], input);
    let mut x = x0;
    let mut skips = Vec::with_capacity(cfg.depth);
    for _ in 0..cfg.depth {
        let (w1, b1) = (bind(&mut tape), bind(&mut tape));
        let (w2, b2) = (bind(&mut tape), bind(&mut tape));
        let a = tape.conv1d(x, w1, b1)?;
        let a = tape.relu(a);
        let s = tape.conv1d(a, w2, b2)?;
        let s = tape.relu(s);
        skips.push(s);
        x = tape.max_pool2(s)?;
    }

    let (wb1, bb1) = (bind(&mut tape), bind(&mut tape));
    let (wb2, bb2) = (bind(&mut tape), bind(&mut tape));
    let t = tape.conv1d(x, wb1, bb1)?;
    let t = tape.relu(t);
    let u = tape.conv1d(t, wb2, bb2)?;
    // identity spans the second convolution, where channel counts match
    let u = if cfg.residual_bottleneck {
        tape.add(u, t)?
    } else {
        u
    };
    x = tape.relu(u);

    for i in (0..cfg.depth).rev() {
        let (wu, bu) = (bind(&mut tape), bind(&mut tape));
        let (wm, bm) = (bind(&mut tape), bind(&mut tape));
        let up = tape.upsample2(x);
        let a = tape.conv1d(up, wu, bu)?;
        let cat = tape.concat_c(a, skips[i])?;
        let m = tape.conv1d(cat, wm, bm)?;
        let mut y = tape.relu(m);
        if cfg.channel_attention {
            let (w1, b1) = (bind(&mut tape), bind(&mut tape));
            let (w2, b2) = (bind(&mut tape), bind(&mut tape));
            let gap = tape.global_avg_pool(y);
            let h = tape.dense(gap, w1, b1)?;
            let h = tape.relu(h);
            let gl = tape.dense(h, w2, b2)?;
            let gate = tape.sigmoid(gl);
            y = tape.mul_gate(y, gate)?;
        }
        x = y;
    }

    let (wh, bh) = (bind(&mut tape), bind(&mut tape));
    let output = tape.conv1d(x, wh, bh)?;
    Ok(UnetGraph { tape, output })
}

/// One inference pass: (B, L, 1) in, (B, L, 1) out.
pub fn unet_forward(
    params: &ModelParams,
    cfg: &UnetConfig,
    batch_dims: [usize; 3],
    input: Vec<f64>,
) -> Result<Vec<f64>> {
    let g = build_forward(params, cfg, batch_dims, input)?;
    Ok(g.tape.value(g.output).to_vec())
}
