//! Finite-difference verification of backpropagated gradients.

use ndarray::Array2;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::transformer::Transformer;
use crate::error::{Error, Result};
use crate::quantum::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckOptions {
    /// Number of randomly chosen scalar parameters to probe.
    pub samples: usize,
    /// Central-difference step.
    pub step: f64,
    /// Lower bound on the relative-error denominator.
    pub floor: f64,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            samples: 256,
            step: 1e-5,
            floor: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_relative_error: f64,
    /// Flat index of the worst parameter.
    pub worst_index: usize,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub indices: Vec<usize>,
}

/// Compares the backpropagated MSE gradient with central differences on a
/// random subset of parameters (eval mode, no dropout).
pub(crate) fn grad_check(
    net: &Transformer,
    x: &Array2<f64>,
    y: &Array2<f64>,
    opts: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let total = net.params.numel();
    if opts.samples == 0 || opts.samples > total {
        return Err(Error::OutOfRange(format!(
            "cannot probe {} of {total} parameters",
            opts.samples
        )));
    }
    let (_, grads) = net.loss_and_grad(x, y, None)?;
    let mut rng = seeded_rng(opts.seed);
    let mut indices = sample(&mut rng, total, opts.samples).into_vec();
    indices.sort_unstable();

    let numeric = finite_differences(net, x, y, &indices, opts.step)?;
    let analytic: Vec<f64> = indices.iter().map(|&i| grads.scalar(i)).collect();
    let (mut worst, mut worst_index) = (0.0, indices[0]);
    for ((a, n), &i) in analytic.iter().zip(&numeric).zip(&indices) {
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(opts.floor);
        if rel > worst {
            worst = rel;
            worst_index = i;
        }
    }
    Ok(GradCheckReport {
        checked: indices.len(),
        max_relative_error: worst,
        worst_index,
        analytic,
        numeric,
        indices,
    })
}

/// Central differences of the eval-mode loss for the given flat indices.
pub(crate) fn finite_differences(
    net: &Transformer,
    x: &Array2<f64>,
    y: &Array2<f64>,
    indices: &[usize],
    step: f64,
) -> Result<Vec<f64>> {
    let mut probe = net.clone();
    indices
        .iter()
        .map(|&i| {
            let orig = probe.params.scalar(i);
            probe.params.set_scalar(i, orig + step);
            let up = probe.loss(x, y)?;
            probe.params.set_scalar(i, orig - step);
            let down = probe.loss(x, y)?;
            probe.params.set_scalar(i, orig);
            Ok((up - down) / (2.0 * step))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureSet;
    use crate::nn::config::RegressorConfig;
    use crate::nn::layers::normal_init;

    fn setup() -> (Transformer, Array2<f64>, Array2<f64>) {
        let cfg = RegressorConfig::toy(3, FeatureSet::F10, 2);
        let mut rng = seeded_rng(11);
        let net = Transformer::new(&cfg, &mut rng).unwrap();
        let x = normal_init((6, 30), 1.0, &mut rng);
        let y = normal_init((6, 2), 1.0, &mut rng);
        (net, x, y)
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let (net, x, y) = setup();
        assert!(net.params.numel() >= 200);
        let report = grad_check(&net, &x, &y, &GradCheckOptions::default()).unwrap();
        assert!(report.checked >= 200);
        assert!(
            report.max_relative_error < 1e-5,
            "worst {} at {}",
            report.max_relative_error,
            report.worst_index
        );
    }

    #[test]
    fn finite_difference_error_is_second_order() {
        let (net, x, y) = setup();
        let (_, grads) = net.loss_and_grad(&x, &y, None).unwrap();
        let mut rng = seeded_rng(5);
        let idx = sample(&mut rng, net.params.numel(), 64).into_vec();
        let exact: Vec<f64> = idx.iter().map(|&i| grads.scalar(i)).collect();
        let err = |h| -> Vec<f64> {
            let fd = finite_differences(&net, &x, &y, &idx, h).unwrap();
            fd.iter().zip(&exact).map(|(a, b)| (a - b).abs()).collect()
        };
        let (coarse, fine) = (err(2e-3), err(1e-3));
        // per-parameter ratios; the median ignores the odd ReLU kink inside the stencil
        let mut ratios: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| c / f).collect();
        ratios.sort_by(f64::total_cmp);
        let median = ratios[ratios.len() / 2];
        assert!((3.5..4.5).contains(&median), "median ratio {median}");
    }

    #[test]
    fn dropout_paths_backpropagate_exactly() {
        let mut cfg = RegressorConfig::toy(3, FeatureSet::F10, 2);
        cfg.dropout = 0.3;
        let mut rng = seeded_rng(12);
        let mut net = Transformer::new(&cfg, &mut rng).unwrap();
        let x = normal_init((6, 30), 1.0, &mut rng);
        let y = normal_init((6, 2), 1.0, &mut rng);
        // same seed on every call, so every evaluation sees the same masks
        let train_loss = |n: &Transformer| n.loss_and_grad(&x, &y, Some(&mut seeded_rng(77))).unwrap();
        let (_, grads) = train_loss(&net);
        let (_, eval_grads) = net.loss_and_grad(&x, &y, None).unwrap();
        assert_ne!(grads, eval_grads);

        let idx = sample(&mut seeded_rng(3), net.params.numel(), 100).into_vec();
        let h = 1e-5;
        for i in idx {
            let orig = net.params.scalar(i);
            net.params.set_scalar(i, orig + h);
            let up = train_loss(&net).0;
            net.params.set_scalar(i, orig - h);
            let down = train_loss(&net).0;
            net.params.set_scalar(i, orig);
            let (a, n) = (grads.scalar(i), (up - down) / (2.0 * h));
            assert!((a - n).abs() / a.abs().max(n.abs()).max(1e-6) < 1e-5, "param {i}: {a} vs {n}");
        }
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let (net, x, _) = setup();
        let y = net.predict(&x).unwrap();
        let (loss, grads) = net.loss_and_grad(&x, &y, None).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads.norm(), 0.0);
    }
}
