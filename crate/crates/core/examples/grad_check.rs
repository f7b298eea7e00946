//! Backpropagation of the transformer regressor against central finite
//! differences on a d_model = 16 network.

use lindblad_learn::features::FeatureSet;
use lindblad_learn::nn::{GradCheckOptions, RegressorConfig, RegressorModel};
use lindblad_learn::quantum::seeded_rng;
use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lindblad_learn::Result<()> {
    let cfg = RegressorConfig::toy(3, FeatureSet::F10, 2);
    let model = RegressorModel::init(cfg.clone(), vec!["a".into(), "b".into()])?;

    let mut rng = seeded_rng(4);
    let mut normal = |shape| Array2::from_shape_simple_fn(shape, || StandardNormal.sample(&mut rng));
    let x = normal((8, cfg.input_dim()));
    let y = normal((8, cfg.outputs));

    let report = model.grad_check(&x, &y, &GradCheckOptions::default())?;
    println!("{} parameters, {} probed", model.params().numel(), report.checked);
    println!("max relative error {:.2e} at flat index {}", report.max_relative_error, report.worst_index);
    for ((i, a), n) in report.indices.iter().zip(&report.analytic).zip(&report.numeric).take(5) {
        println!("  [{i:>5}] backprop {a:+.10e}  numeric {n:+.10e}");
    }
    Ok(())
}
