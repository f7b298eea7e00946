//! Runge-Kutta integration against exact propagation with exp(𝓛Δt) for
//! the two-qubit models, where rates are constant.

use lindblad_learn::models::{instantiate, ModelId, ModelSpec};
use lindblad_learn::quantum::seeded_rng;
use lindblad_learn::sim::{evolve, superoperator_propagate, EvolveOptions};

fn main() -> lindblad_learn::Result<()> {
    for id in [ModelId::Heisenberg, ModelId::Ising] {
        let spec = ModelSpec::new(id);
        let obs = spec.observables();
        for seed in 0..3 {
            let inst = instantiate(&spec, &mut seeded_rng(seed))?;
            let rk4 = evolve(&inst.system, &inst.rho0, &spec.grid, &obs, EvolveOptions::default())?;
            let exact = superoperator_propagate(&inst.system, &inst.rho0, &spec.grid, &obs)?;
            let diff = obs
                .iter()
                .flat_map(|o| {
                    let a = &rk4.series[&o.name];
                    let b = &exact.series[&o.name];
                    a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect::<Vec<_>>()
                })
                .fold(0.0, f64::max);
            println!("{id:<11} seed {seed}: max observable difference {diff:.2e}");
        }
    }
    Ok(())
}
