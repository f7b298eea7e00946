//! Channel-token transformer encoder with an MLP regression head.
//!
//! ```text
//! features (B, C·f) ─ per-channel Linear → LayerNorm → ReLU → Dropout (+ positional)
//!   → [x = LN(x + Drop(MHA(x))); x = LN(x + Drop(FF(x)))] × n_layers
//!   → mean over tokens → MLP (ReLU) → Linear → outputs (B, n_out)
//! ```

use ndarray::{s, Array2, Axis};

use super::config::RegressorConfig;
use super::layers::{
    dropout_mask, normal_init, relu, relu_backward, AttentionCache, LayerNorm, LayerNormCache,
    Linear, MultiHeadAttention,
};
use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::quantum::RandomSource;

#[derive(Debug, Clone, Copy)]
struct EncoderLayer {
    attn: MultiHeadAttention,
    norm1: LayerNorm,
    ff1: Linear,
    ff2: Linear,
    norm2: LayerNorm,
}

struct LayerTape {
    input: Array2<f64>,
    attn: AttentionCache,
    norm1: LayerNormCache,
    x1: Array2<f64>,
    /// ReLU output of the first feedforward Linear, before dropout.
    hidden: Array2<f64>,
    hidden_dropped: Array2<f64>,
    norm2: LayerNormCache,
    masks: [Option<Array2<f64>>; 3],
}

/// Intermediate values kept from a forward pass for backpropagation.
pub(crate) struct Tape {
    input: Array2<f64>,
    proj_norm: LayerNormCache,
    activated: Array2<f64>,
    mask: Option<Array2<f64>>,
    layers: Vec<LayerTape>,
    /// Inputs of each head layer; entry `i + 1` is the ReLU output of layer `i`.
    head_inputs: Vec<Array2<f64>>,
}

#[derive(Debug, Clone)]
pub(crate) struct Transformer {
    channels: usize,
    per_channel: usize,
    dropout: f64,
    proj: Vec<Linear>,
    proj_norm: LayerNorm,
    pos: ParamId,
    layers: Vec<EncoderLayer>,
    head: Vec<Linear>,
    pub params: ParamStore,
}

impl Transformer {
    pub fn new(cfg: &RegressorConfig, rng: &mut RandomSource) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d_model;
        let f = cfg.feature_set.per_channel();
        let mut p = ParamStore::new();
        let proj = (0..cfg.channels)
            .map(|c| Linear::new(&mut p, &format!("embed.proj{c}"), f, d, rng))
            .collect();
        let proj_norm = LayerNorm::new(&mut p, "embed.norm", d);
        let pos = p.add("embed.position", normal_init((cfg.channels, d), 0.02, rng));
        let layers = (0..cfg.n_layers)
            .map(|l| {
                let name = format!("encoder{l}");
                EncoderLayer {
                    attn: MultiHeadAttention::new(&mut p, &format!("{name}.attn"), d, cfg.n_heads, rng),
                    norm1: LayerNorm::new(&mut p, &format!("{name}.norm1"), d),
                    ff1: Linear::new(&mut p, &format!("{name}.ff1"), d, cfg.d_ff, rng),
                    ff2: Linear::new(&mut p, &format!("{name}.ff2"), cfg.d_ff, d, rng),
                    norm2: LayerNorm::new(&mut p, &format!("{name}.norm2"), d),
                }
            })
            .collect();
        let mut widths = vec![d];
        widths.extend(&cfg.mlp_head);
        widths.push(cfg.outputs);
        let head = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Linear::new(&mut p, &format!("head{i}"), w[0], w[1], rng))
            .collect();
        Ok(Self {
            channels: cfg.channels,
            per_channel: f,
            dropout: cfg.dropout,
            proj,
            proj_norm,
            pos,
            layers,
            head,
            params: p,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.channels * self.per_channel
    }

    /// Forward pass. Dropout is active only when `rng` is given.
    pub fn forward(&self, x: &Array2<f64>, mut rng: Option<&mut RandomSource>) -> Result<(Array2<f64>, Tape)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let p = &self.params;
        let (batch, tokens, f) = (x.nrows(), self.channels, self.per_channel);
        let d = p.get(self.pos).ncols();

        let mut h = Array2::zeros((batch * tokens, d));
        for (c, lin) in self.proj.iter().enumerate() {
            let yc = lin.forward(p, &x.slice(s![.., c * f..(c + 1) * f]));
            h.slice_mut(s![c..;tokens, ..]).assign(&yc);
        }
        let (hn, proj_norm) = self.proj_norm.forward(p, &h);
        let activated = relu(&hn);
        let (mut z, mask) = self.drop(activated.clone(), rng.as_deref_mut());
        let pos = p.get(self.pos);
        for c in 0..tokens {
            let mut rows = z.slice_mut(s![c..;tokens, ..]);
            rows += &pos.row(c);
        }

        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (att, attn) = layer.attn.forward(p, &z, tokens);
            let (att, m_att) = self.drop(att, rng.as_deref_mut());
            let (x1, norm1) = layer.norm1.forward(p, &(&z + &att));
            let hidden = relu(&layer.ff1.forward(p, &x1.view()));
            let (hidden_dropped, m_hidden) = self.drop(hidden.clone(), rng.as_deref_mut());
            let ff = layer.ff2.forward(p, &hidden_dropped.view());
            let (ff, m_ff) = self.drop(ff, rng.as_deref_mut());
            let (x2, norm2) = layer.norm2.forward(p, &(&x1 + &ff));
            layers.push(LayerTape {
                input: std::mem::replace(&mut z, x2),
                attn,
                norm1,
                x1,
                hidden,
                hidden_dropped,
                norm2,
                masks: [m_att, m_hidden, m_ff],
            });
        }

        let pooled = z
            .into_shape_with_order((batch, tokens, d))
            .expect("contiguous activations")
            .mean_axis(Axis(1))
            .expect("at least one token");
        let mut head_inputs = Vec::with_capacity(self.head.len());
        let mut a = pooled;
        for (i, lin) in self.head.iter().enumerate() {
            let y = lin.forward(p, &a.view());
            head_inputs.push(a);
            a = if i + 1 < self.head.len() { relu(&y) } else { y };
        }
        Ok((
            a,
            Tape {
                input: x.clone(),
                proj_norm,
                activated,
                mask,
                layers,
                head_inputs,
            },
        ))
    }

    /// Inverted dropout when training, identity otherwise.
    fn drop(&self, a: Array2<f64>, rng: Option<&mut RandomSource>) -> (Array2<f64>, Option<Array2<f64>>) {
        match rng {
            Some(rng) if self.dropout > 0.0 => {
                let m = dropout_mask(a.dim(), self.dropout, rng);
                (a * &m, Some(m))
            }
            _ => (a, None),
        }
    }

    /// Eval-mode prediction in standardized units.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.forward(x, None).map(|(y, _)| y)
    }

    /// Gradients of a scalar loss given `dL/d(output)`.
    pub fn backward(&self, tape: &Tape, dout: &Array2<f64>) -> ParamStore {
        let p = &self.params;
        let mut g = p.zeros_like();
        let tokens = self.channels;
        let f = self.per_channel;

        let mut d = dout.clone();
        for (i, lin) in self.head.iter().enumerate().rev() {
            if i + 1 < self.head.len() {
                d = relu_backward(&tape.head_inputs[i + 1], &d);
            }
            d = lin.backward(p, &mut g, &tape.head_inputs[i].view(), &d);
        }

        // mean-pool backward
        let batch = d.nrows();
        let dm = d.ncols();
        let mut dz = Array2::zeros((batch * tokens, dm));
        let scaled = d / tokens as f64;
        for c in 0..tokens {
            dz.slice_mut(s![c..;tokens, ..]).assign(&scaled);
        }

        for (layer, lt) in self.layers.iter().zip(&tape.layers).rev() {
            let masked = |d: &Array2<f64>, m: &Option<Array2<f64>>| match m {
                Some(m) => d * m,
                None => d.clone(),
            };
            let [m_att, m_hidden, m_ff] = &lt.masks;
            let dr2 = layer.norm2.backward(p, &mut g, &lt.norm2, &dz);
            let dh = layer.ff2.backward(p, &mut g, &lt.hidden_dropped.view(), &masked(&dr2, m_ff));
            let dh = relu_backward(&lt.hidden, &masked(&dh, m_hidden));
            let mut dx1 = layer.ff1.backward(p, &mut g, &lt.x1.view(), &dh);
            dx1 += &dr2;
            let dr1 = layer.norm1.backward(p, &mut g, &lt.norm1, &dx1);
            let mut din = layer.attn.backward(p, &mut g, &lt.input, &lt.attn, &masked(&dr1, m_att), tokens);
            din += &dr1;
            dz = din;
        }

        {
            let gp = g.get_mut(self.pos);
            for c in 0..tokens {
                let mut row = gp.row_mut(c);
                row += &dz.slice(s![c..;tokens, ..]).sum_axis(Axis(0));
            }
        }
        if let Some(m) = &tape.mask {
            dz *= m;
        }
        let dz = relu_backward(&tape.activated, &dz);
        let dh = self.proj_norm.backward(p, &mut g, &tape.proj_norm, &dz);
        for (c, lin) in self.proj.iter().enumerate() {
            let dyc = dh.slice(s![c..;tokens, ..]).to_owned();
            lin.backward(p, &mut g, &tape.input.slice(s![.., c * f..(c + 1) * f]), &dyc);
        }
        g
    }

    /// Mean squared error over all entries and its parameter gradient.
    pub fn loss_and_grad(
        &self,
        x: &Array2<f64>,
        y: &Array2<f64>,
        rng: Option<&mut RandomSource>,
    ) -> Result<(f64, ParamStore)> {
        let (pred, tape) = self.forward(x, rng)?;
        if pred.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                expected: pred.ncols(),
                got: y.ncols(),
            });
        }
        let diff = &pred - y;
        let n = diff.len() as f64;
        let loss = diff.iter().map(|v| v * v).sum::<f64>() / n;
        let dout = diff * (2.0 / n);
        Ok((loss, self.backward(&tape, &dout)))
    }

    pub fn loss(&self, x: &Array2<f64>, y: &Array2<f64>) -> Result<f64> {
        let pred = self.predict(x)?;
        let diff = &pred - y;
        Ok(diff.iter().map(|v| v * v).sum::<f64>() / diff.len() as f64)
    }

    pub fn position_id(&self) -> ParamId {
        self.pos
    }
}
