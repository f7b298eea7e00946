//! Building blocks with explicit forward caches and backward passes.
//!
//! Activations are row-major `(rows, features)` matrices; for token sequences
//! row `b·T + t` holds token `t` of sample `b`.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::params::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::quantum::RandomSource;

pub(crate) const LAYER_NORM_EPS: f64 = 1e-5;

/// `y = x·W + b` with `W: (in, out)` and `b: (1, out)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Linear {
    pub w: ParamId,
    pub b: ParamId,
}

impl Linear {
    /// Uniform `±1/√in` initialization for weights and bias.
    pub fn new(p: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut RandomSource) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let w = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-bound..bound));
        let b = Array2::from_shape_simple_fn((1, fan_out), || rng.random_range(-bound..bound));
        Self {
            w: p.add(format!("{name}.weight"), w),
            b: p.add(format!("{name}.bias"), b),
        }
    }

    pub fn forward(&self, p: &ParamStore, x: &ArrayView2<f64>) -> Array2<f64> {
        let mut y = x.dot(p.get(self.w));
        y += &p.get(self.b).row(0);
        y
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward(
        &self,
        p: &ParamStore,
        g: &mut ParamStore,
        x: &ArrayView2<f64>,
        dy: &Array2<f64>,
    ) -> Array2<f64> {
        general_mat_mul(1.0, &x.t(), dy, 1.0, g.get_mut(self.w));
        let mut gb = g.get_mut(self.b).row_mut(0);
        gb += &dy.sum_axis(Axis(0));
        dy.dot(&p.get(self.w).t())
    }
}

/// Layer normalization over the feature axis with learned scale and shift.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LayerNorm {
    pub gamma: ParamId,
    pub beta: ParamId,
}

pub(crate) struct LayerNormCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn new(p: &mut ParamStore, name: &str, dim: usize) -> Self {
        Self {
            gamma: p.add(format!("{name}.weight"), Array2::ones((1, dim))),
            beta: p.add(format!("{name}.bias"), Array2::zeros((1, dim))),
        }
    }

    pub fn forward(&self, p: &ParamStore, x: &Array2<f64>) -> (Array2<f64>, LayerNormCache) {
        let d = x.ncols() as f64;
        let mut xhat = x.clone();
        let mut inv_std = Array1::zeros(x.nrows());
        for (mut row, is) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
            let mean = row.sum() / d;
            row.mapv_inplace(|v| v - mean);
            let var = row.iter().map(|v| v * v).sum::<f64>() / d;
            *is = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            row.mapv_inplace(|v| v * *is);
        }
        let mut y = &xhat * &p.get(self.gamma).row(0);
        y += &p.get(self.beta).row(0);
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(
        &self,
        p: &ParamStore,
        g: &mut ParamStore,
        cache: &LayerNormCache,
        dy: &Array2<f64>,
    ) -> Array2<f64> {
        let mut gg = g.get_mut(self.gamma).row_mut(0);
        gg += &(dy * &cache.xhat).sum_axis(Axis(0));
        let mut gb = g.get_mut(self.beta).row_mut(0);
        gb += &dy.sum_axis(Axis(0));

        let d = dy.ncols() as f64;
        let mut dx = dy * &p.get(self.gamma).row(0);
        for ((mut row, xh), is) in dx
            .rows_mut()
            .into_iter()
            .zip(cache.xhat.rows())
            .zip(cache.inv_std.iter())
        {
            let sum = row.sum();
            let dot = row.dot(&xh);
            Zip::from(&mut row)
                .and(&xh)
                .for_each(|v, &x| *v = is / d * (d * *v - sum - x * dot));
        }
        dx
    }
}

pub(crate) fn relu(x: &Array2<f64>) -> Array2<f64> {
    x.mapv(|v| v.max(0.0))
}

/// Gradient through ReLU given its output.
pub(crate) fn relu_backward(y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
    let mut dx = dy.clone();
    Zip::from(&mut dx).and(y).for_each(|d, &v| {
        if v <= 0.0 {
            *d = 0.0;
        }
    });
    dx
}

/// Inverted-dropout mask with entries `0` or `1/(1−p)`.
pub(crate) fn dropout_mask(shape: (usize, usize), p: f64, rng: &mut RandomSource) -> Array2<f64> {
    let keep = 1.0 / (1.0 - p);
    Array2::from_shape_simple_fn(shape, || if rng.random::<f64>() < p { 0.0 } else { keep })
}

pub(crate) fn normal_init(shape: (usize, usize), std: f64, rng: &mut RandomSource) -> Array2<f64> {
    let dist = Normal::new(0.0, std).expect("positive std");
    Array2::from_shape_simple_fn(shape, || dist.sample(rng))
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Scaled dot-product attention `softmax(QKᵀ/√d_k)·V`.
pub fn attention(q: &Array2<f64>, k: &Array2<f64>, v: &Array2<f64>, d_k: usize) -> Result<Array2<f64>> {
    if q.ncols() != k.ncols() || q.ncols() != d_k {
        return Err(Error::DimensionMismatch {
            expected: d_k,
            got: if q.ncols() != d_k { q.ncols() } else { k.ncols() },
        });
    }
    if k.nrows() != v.nrows() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            got: v.nrows(),
        });
    }
    let scores = q.dot(&k.t()) / (d_k as f64).sqrt();
    Ok(softmax_rows(&scores).dot(v))
}

/// Multi-head self-attention over sequences of `tokens` rows per sample.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MultiHeadAttention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub heads: usize,
}

pub(crate) struct AttentionCache {
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// Attention weights per (sample, head), `tokens × tokens` each.
    probs: Vec<Array2<f64>>,
    ctx: Array2<f64>,
}

impl MultiHeadAttention {
    pub fn new(p: &mut ParamStore, name: &str, d_model: usize, heads: usize, rng: &mut RandomSource) -> Self {
        Self {
            q: Linear::new(p, &format!("{name}.q"), d_model, d_model, rng),
            k: Linear::new(p, &format!("{name}.k"), d_model, d_model, rng),
            v: Linear::new(p, &format!("{name}.v"), d_model, d_model, rng),
            o: Linear::new(p, &format!("{name}.o"), d_model, d_model, rng),
            heads,
        }
    }

    pub fn forward(&self, p: &ParamStore, x: &Array2<f64>, tokens: usize) -> (Array2<f64>, AttentionCache) {
        let xv = x.view();
        let q = self.q.forward(p, &xv);
        let k = self.k.forward(p, &xv);
        let v = self.v.forward(p, &xv);
        let d_model = x.ncols();
        let dk = d_model / self.heads;
        let scale = 1.0 / (dk as f64).sqrt();
        let batch = x.nrows() / tokens;
        let mut ctx = Array2::zeros(x.raw_dim());
        let mut probs = Vec::with_capacity(batch * self.heads);
        for b in 0..batch {
            let rows = b * tokens..(b + 1) * tokens;
            for h in 0..self.heads {
                let cols = h * dk..(h + 1) * dk;
                let qb = q.slice(s![rows.clone(), cols.clone()]);
                let kb = k.slice(s![rows.clone(), cols.clone()]);
                let vb = v.slice(s![rows.clone(), cols.clone()]);
                let pr = softmax_rows(&(qb.dot(&kb.t()) * scale));
                ctx.slice_mut(s![rows.clone(), cols]).assign(&pr.dot(&vb));
                probs.push(pr);
            }
        }
        let out = self.o.forward(p, &ctx.view());
        (out, AttentionCache { q, k, v, probs, ctx })
    }

    pub fn backward(
        &self,
        p: &ParamStore,
        g: &mut ParamStore,
        x: &Array2<f64>,
        cache: &AttentionCache,
        dy: &Array2<f64>,
        tokens: usize,
    ) -> Array2<f64> {
        let dctx = self.o.backward(p, g, &cache.ctx.view(), dy);
        let d_model = x.ncols();
        let dk = d_model / self.heads;
        let scale = 1.0 / (dk as f64).sqrt();
        let batch = x.nrows() / tokens;
        let mut dq = Array2::zeros(x.raw_dim());
        let mut dkm = Array2::zeros(x.raw_dim());
        let mut dv = Array2::zeros(x.raw_dim());
        for b in 0..batch {
            let rows = b * tokens..(b + 1) * tokens;
            for h in 0..self.heads {
                let cols = h * dk..(h + 1) * dk;
                let pr = &cache.probs[b * self.heads + h];
                let qb = cache.q.slice(s![rows.clone(), cols.clone()]);
                let kb = cache.k.slice(s![rows.clone(), cols.clone()]);
                let vb = cache.v.slice(s![rows.clone(), cols.clone()]);
                let dc = dctx.slice(s![rows.clone(), cols.clone()]);

                let dp = dc.dot(&vb.t());
                dv.slice_mut(s![rows.clone(), cols.clone()]).assign(&pr.t().dot(&dc));
                // softmax Jacobian, row by row
                let mut ds = pr * &dp;
                for (mut row, prow) in ds.rows_mut().into_iter().zip(pr.rows()) {
                    let total = row.sum();
                    Zip::from(&mut row).and(&prow).for_each(|d, &pv| *d -= pv * total);
                }
                ds.mapv_inplace(|v| v * scale);
                dq.slice_mut(s![rows.clone(), cols.clone()]).assign(&ds.dot(&kb));
                dkm.slice_mut(s![rows.clone(), cols]).assign(&ds.t().dot(&qb));
            }
        }
        let xv = x.view();
        let mut dx = self.q.backward(p, g, &xv, &dq);
        dx += &self.k.backward(p, g, &xv, &dkm);
        dx += &self.v.backward(p, g, &xv, &dv);
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::seeded_rng;
    use ndarray::array;

    #[test]
    fn single_token_returns_value_row() {
        let q = array![[0.3, -1.2]];
        let k = array![[2.0, 0.5]];
        let v = array![[7.0, -3.0, 1.0]];
        assert_eq!(attention(&q, &k, &v, 2).unwrap(), v);
    }

    #[test]
    fn saturated_match_selects_row() {
        let q = array![[1000.0, 0.0]];
        let k = array![[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        let v = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let out = attention(&q, &k, &v, 2).unwrap();
        assert!((out[(0, 0)] - 1.0).abs() < 1e-12 && (out[(0, 1)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_scores_average_values() {
        let q = Array2::zeros((2, 3));
        let k = array![[1.0, 2.0, 3.0], [-1.0, 0.5, 2.0], [0.0, 0.0, 1.0]];
        let v = array![[1.0], [2.0], [6.0]];
        let out = attention(&q, &k, &v, 3).unwrap();
        assert!(out.iter().all(|x| (x - 3.0).abs() < 1e-12));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Array2::zeros((2, 3));
        let b = Array2::zeros((2, 4));
        assert!(attention(&a, &b, &a, 3).is_err());
        assert!(attention(&a, &a, &Array2::zeros((5, 3)), 3).is_err());
    }

    #[test]
    fn softmax_rows_are_distributions() {
        let mut rng = seeded_rng(2);
        let x = normal_init((20, 7), 30.0, &mut rng);
        let p = softmax_rows(&x);
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn layer_norm_output_is_normalized() {
        let mut rng = seeded_rng(4);
        let mut p = ParamStore::new();
        let ln = LayerNorm::new(&mut p, "ln", 16);
        let x = normal_init((5, 16), 3.0, &mut rng);
        let (y, _) = ln.forward(&p, &x);
        for row in y.rows() {
            assert!(row.mean().unwrap().abs() < 1e-12);
            let var = row.iter().map(|v| v * v).sum::<f64>() / 16.0;
            assert!((var - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn dropout_mask_scales_kept_units() {
        let mut rng = seeded_rng(9);
        let m = dropout_mask((200, 50), 0.1, &mut rng);
        let kept = m.iter().filter(|v| **v > 0.0).count() as f64 / 10_000.0;
        assert!((kept - 0.9).abs() < 0.02);
        assert!(m.iter().all(|v| *v == 0.0 || (*v - 1.0 / 0.9).abs() < 1e-15));
    }
}
