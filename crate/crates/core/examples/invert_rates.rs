//! Analytic recovery of rates from simulated observables: one decay channel
//! from ⟨σ_z⟩, gain plus loss from all three Pauli expectations, and the
//! qubit and cavity rates of the Jaynes-Cummings model.

use lindblad_learn::bernstein::BernsteinRate;
use lindblad_learn::dataset::simulate_sample;
use lindblad_learn::inversion::{invert_jc, invert_theorem1, invert_theorem2, InversionConfig, JcParams};
use lindblad_learn::models::{jc_rates_from_targets, ModelId, ModelSpec};

fn report(label: &str, est: &lindblad_learn::inversion::RateEstimate, truth: &BernsteinRate) {
    let err = est.max_relative_error(|t| truth.eval(t).unwrap_or(f64::NAN));
    println!(
        "{label:<12} {:>3}/{} valid points, max relative error {}",
        est.valid_count(),
        est.len(),
        err.map_or("n/a".into(), |e| format!("{e:.2e}"))
    );
}

fn main() -> lindblad_learn::Result<()> {
    let cfg = InversionConfig::default();

    let rec = simulate_sample(&ModelSpec::new(ModelId::SqTd), 0, 21)?;
    let coeffs: Vec<f64> = rec.target_values();
    let truth = BernsteinRate::new(coeffs, rec.model.time_span())?;
    report("sq-td", &invert_theorem1(rec.series("sz")?, &rec.times, &cfg)?, &truth);

    let rec = simulate_sample(&ModelSpec::new(ModelId::SqConstTwo), 0, 5)?;
    let span = rec.model.time_span();
    let est = invert_theorem2(rec.series("sx")?, rec.series("sy")?, rec.series("sz")?, &rec.times, &cfg)?;
    report("gamma_plus", &est.gamma_plus, &BernsteinRate::constant(rec.targets["gamma_plus"], span)?);
    report("gamma_minus", &est.gamma_minus, &BernsteinRate::constant(rec.targets["gamma_minus"], span)?);

    // JC: σ_y crosses zero during Rabi oscillations, so mask more aggressively
    let jc_cfg = InversionConfig {
        min_denominator: 0.1,
        ..cfg
    };
    let mut spec = ModelSpec::new(ModelId::Jc);
    spec.fock_dim = 14;
    spec.photon_range = (1, 5);
    let rec = simulate_sample(&spec, 0, 4)?;
    let (kappa, gamma) = jc_rates_from_targets(&rec.target_values(), span)?;
    let est = invert_jc(&rec.to_trajectory(), JcParams::from_map(&rec.params)?, &jc_cfg)?;
    report("jc gamma", &est.gamma, &gamma);
    report("jc kappa", &est.kappa, &kappa);
    Ok(())
}
