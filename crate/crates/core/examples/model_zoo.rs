//! Samples one instance of every model and checks that the evolved state
//! stays a valid density matrix.

use lindblad_learn::models::{instantiate, ModelId, ModelSpec};
use lindblad_learn::quantum::seeded_rng;
use lindblad_learn::sim::{evolve, EvolveOptions};

fn main() -> lindblad_learn::Result<()> {
    for id in ModelId::ALL {
        let spec = ModelSpec::new(id);
        let inst = instantiate(&spec, &mut seeded_rng(1))?;
        let opts = EvolveOptions {
            record_states: true,
            ..EvolveOptions::default()
        };
        let traj = evolve(&inst.system, &inst.rho0, &spec.grid, &spec.observables(), opts)?;

        let (mut trace, mut herm, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
        for rho in traj.states.as_deref().unwrap_or_default() {
            trace = trace.max((rho.trace().re - 1.0).abs());
            herm = herm.max(rho.hermiticity_defect());
            min_eig = min_eig.min(rho.hermitian_eigenvalues()[0]);
        }
        println!("{id:<13} dim {:>2}  targets {:?}", spec.dim(), inst.targets.to_map());
        println!("{:13} |tr-1| {trace:.1e}  hermiticity {herm:.1e}  min eigenvalue {min_eig:.1e}", "");
    }
    Ok(())
}
