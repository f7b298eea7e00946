//! Amplitude damping of a single qubit, compared with the closed form
//! ⟨σ_z(t)⟩ = 2e^{−γt} − 1 for a qubit that starts excited.

use lindblad_learn::bernstein::BernsteinRate;
use lindblad_learn::quantum::{pauli, DensityMatrix, Pauli, PureState};
use lindblad_learn::sim::{evolve, EvolveOptions, JumpChannel, LindbladSystem, Observable, TimeGrid};

fn main() -> lindblad_learn::Result<()> {
    let gamma = 0.7;
    let grid = TimeGrid::new(0.0, 10.0, 100)?;
    let decay = JumpChannel::new(pauli(Pauli::Minus), BernsteinRate::constant(gamma, grid.span())?);
    let sys = LindbladSystem::new(pauli(Pauli::Z), vec![decay])?;
    let excited = DensityMatrix::from_pure(&PureState::basis(2, 0)?);

    let traj = evolve(
        &sys,
        &excited,
        &grid,
        &[Observable::new("sz", pauli(Pauli::Z))],
        EvolveOptions::default(),
    )?;

    let mut worst = 0.0f64;
    println!("{:>8} {:>14} {:>14}", "t", "<sz>", "exact");
    for (k, (t, z)) in traj.times.iter().zip(traj.series("sz")?).enumerate() {
        let exact = 2.0 * (-gamma * t).exp() - 1.0;
        worst = worst.max((z - exact).abs());
        if k % 10 == 0 {
            println!("{t:8.3} {z:14.10} {exact:14.10}");
        }
    }
    println!("max |error| = {worst:.2e}");
    Ok(())
}
