use indexmap::IndexMap;
use num_complex::Complex64 as C64;

use super::generator::Generator;
use super::{LindbladSystem, Observable, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::quantum::{trace_of_product, ComplexMatrix, DensityMatrix, OBSERVABLE_HERMITIAN_TOL};

/// RK4 steps per recorded interval unless overridden.
pub const DEFAULT_SUBSTEPS: usize = 10;

/// Renormalize the trace when it drifts further than this.
const TRACE_RENORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub substeps: usize,
    /// Keep `ρ(t)` at every recorded time in [`Trajectory::states`].
    pub record_states: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            substeps: DEFAULT_SUBSTEPS,
            record_states: false,
        }
    }
}

/// Integrates the master equation with classical fixed-step RK4 and records
/// the expectation of every observable on `grid`.
///
/// Rates are evaluated at the stage times `t`, `t + h/2`, `t + h`. After each
/// recorded interval the state is re-Hermitized and, if needed, trace
/// renormalized.
pub fn evolve(
    sys: &LindbladSystem,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    observables: &[Observable],
    opts: EvolveOptions,
) -> Result<Trajectory> {
    let d = sys.dim();
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho0.dim(),
        });
    }
    if opts.substeps == 0 {
        return Err(Error::OutOfRange("substeps must be at least 1".into()));
    }
    for obs in observables {
        if obs.op.rows() != d || obs.op.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: obs.op.rows(),
            });
        }
        let defect = obs.op.hermiticity_defect();
        if defect > OBSERVABLE_HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: defect });
        }
    }
    for ch in sys.channels() {
        // both ends of the grid must be inside every rate's span
        ch.rate.eval(grid.start)?;
        ch.rate.eval(grid.end)?;
    }

    let mut gen = Generator::new(sys);
    let n = d * d;
    let zero = C64::new(0.0, 0.0);
    let mut rho = rho0.matrix().clone();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut stage = vec![zero; n];

    let mut series: IndexMap<String, Vec<f64>> = observables
        .iter()
        .map(|o| (o.name.clone(), Vec::with_capacity(grid.points)))
        .collect();
    let mut states = opts.record_states.then(|| Vec::with_capacity(grid.points));

    let record = |rho: &ComplexMatrix,
                  series: &mut IndexMap<String, Vec<f64>>,
                  states: &mut Option<Vec<ComplexMatrix>>| {
        for (obs, values) in observables.iter().zip(series.values_mut()) {
            values.push(trace_of_product(&obs.op, rho).re);
        }
        if let Some(s) = states {
            s.push(rho.clone());
        }
    };
    record(&rho, &mut series, &mut states);

    for k in 1..grid.points {
        let t_left = grid.time(k - 1);
        let t_right = grid.time(k);
        let h = (t_right - t_left) / opts.substeps as f64;
        for s in 0..opts.substeps {
            let t = t_left + s as f64 * h;
            let r0 = gen.rates(t)?;
            let r_mid = gen.rates(t + 0.5 * h)?;
            let r1 = gen.rates(t + h)?;
            let y = rho.as_slice();

            gen.apply(y, &r0, &mut k1);
            axpy_into(&mut stage, y, &k1, 0.5 * h);
            gen.apply(&stage, &r_mid, &mut k2);
            axpy_into(&mut stage, y, &k2, 0.5 * h);
            gen.apply(&stage, &r_mid, &mut k3);
            axpy_into(&mut stage, y, &k3, h);
            gen.apply(&stage, &r1, &mut k4);

            let w = h / 6.0;
            for (i, y) in rho.as_mut_slice().iter_mut().enumerate() {
                *y += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * w;
            }
        }
        if !rho.is_finite() {
            return Err(Error::SimulationFailure {
                time: t_right,
                reason: "non-finite density matrix entry".into(),
            });
        }
        rho = rho.hermitian_part();
        let tr = rho.trace().re;
        if (tr - 1.0).abs() > TRACE_RENORM_TOL {
            if !(tr > 0.0) {
                return Err(Error::SimulationFailure {
                    time: t_right,
                    reason: format!("trace collapsed to {tr}"),
                });
            }
            rho = rho.scale_real(1.0 / tr);
        }
        record(&rho, &mut series, &mut states);
    }

    Ok(Trajectory {
        times: grid.times(),
        series,
        states,
    })
}

/// `dst = y + a·k`.
fn axpy_into(dst: &mut [C64], y: &[C64], k: &[C64], a: f64) {
    for ((d, y), k) in dst.iter_mut().zip(y).zip(k) {
        *d = y + k * a;
    }
}
