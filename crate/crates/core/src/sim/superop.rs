//! Vectorized Liouvillian and matrix-exponential propagation. Only valid for
//! constant rates; serves as an independent cross-check of the RK4 path.

use indexmap::IndexMap;
use num_complex::Complex64 as C64;

use super::{LindbladSystem, Observable, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::quantum::{kron, trace_of_product, ComplexMatrix, DensityMatrix};

/// Liouvillian acting on column-stacked `vec(ρ)`, using
/// `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
pub fn liouvillian(sys: &LindbladSystem) -> Result<ComplexMatrix> {
    if !sys.is_time_independent() {
        return Err(Error::OutOfRange(
            "superoperator propagation requires constant rates".into(),
        ));
    }
    let d = sys.dim();
    let id = ComplexMatrix::identity(d);
    let h = sys.hamiltonian();
    let mi = C64::new(0.0, -1.0);
    let mut l = (&kron(&id, h) - &kron(&h.transpose(), &id)).scale(mi);
    for ch in sys.channels() {
        let gamma = ch.rate.coeffs()[0];
        let op = &ch.op;
        let k = &op.adjoint() * op;
        let jump = kron(&op.conj(), op);
        let anti = &kron(&id, &k) + &kron(&k.transpose(), &id);
        let diss = &jump - &anti.scale_real(0.5);
        l += &diss.scale_real(gamma);
    }
    Ok(l)
}

/// Propagates `ρ₀` with `exp(𝓛·Δt)` between grid points.
pub fn superoperator_propagate(
    sys: &LindbladSystem,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observables: &[Observable],
) -> Result<Trajectory> {
    let d = sys.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho0.dim(),
        });
    }
    let step = liouvillian(sys)?
        .to_nalgebra()
        .scale(grid.dt())
        .exp();
    let step = ComplexMatrix::from_nalgebra(&step);

    let mut vec_rho = stack_columns(rho0.matrix());
    let mut series: IndexMap<String, Vec<f64>> = observables
        .iter()
        .map(|o| (o.name.clone(), Vec::with_capacity(grid.points)))
        .collect();
    for k in 0..grid.points {
        if k > 0 {
            vec_rho = step.apply(&vec_rho)?;
        }
        let rho = unstack_columns(&vec_rho, d);
        for (obs, values) in observables.iter().zip(series.values_mut()) {
            values.push(trace_of_product(&obs.op, &rho).re);
        }
    }
    Ok(Trajectory {
        times: grid.times(),
        series,
        states: None,
    })
}

fn stack_columns(m: &ComplexMatrix) -> Vec<C64> {
    let d = m.rows();
    (0..d * d).map(|idx| m[(idx % d, idx / d)]).collect()
}

fn unstack_columns(v: &[C64], d: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    for (idx, z) in v.iter().enumerate() {
        m[(idx % d, idx / d)] = *z;
    }
    m
}
