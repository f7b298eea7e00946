use num_complex::Complex64 as C64;

use super::LindbladSystem;
use crate::error::{Error, Result};
use crate::quantum::ComplexMatrix;

/// `−i[H,ρ] + Σ_i γ_i(t) (L_i ρ L_i† − ½{L_i†L_i, ρ})`, by dense products.
pub fn lindblad_rhs(sys: &LindbladSystem, rho: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let d = sys.dim();
    if rho.rows() != d || rho.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho.rows(),
        });
    }
    let mut out = sys
        .hamiltonian()
        .commutator(rho)?
        .scale(C64::new(0.0, -1.0));
    for ch in sys.channels() {
        let gamma = ch.rate.eval(t)?;
        if gamma == 0.0 {
            continue;
        }
        let l = &ch.op;
        let ld = l.adjoint();
        let jump = &(l * rho) * &ld;
        let k = &ld * l;
        let anti = k.anticommutator(rho)?;
        let diss = &jump - &anti.scale_real(0.5);
        out += &diss.scale_real(gamma);
    }
    Ok(out)
}

/// Operator stored as its nonzero entries.
#[derive(Debug, Clone)]
struct SparseOp {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    entries.push((i, j, v));
                }
            }
        }
        Self { entries }
    }

    /// `out += coef · (self · x)`, all `d × d` row-major.
    fn add_left(&self, x: &[C64], out: &mut [C64], d: usize, coef: C64) {
        for &(i, k, v) in &self.entries {
            let a = coef * v;
            let src = &x[k * d..(k + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += a * s;
            }
        }
    }

    /// `out += coef · (x · self)`.
    fn add_right(&self, x: &[C64], out: &mut [C64], d: usize, coef: C64) {
        for &(k, j, v) in &self.entries {
            let a = coef * v;
            for i in 0..d {
                out[i * d + j] += a * x[i * d + k];
            }
        }
    }
}

struct CompiledChannel {
    l: SparseOp,
    l_dag: SparseOp,
    k: SparseOp,
}

/// Precompiled generator that applies the same right-hand side as
/// [`lindblad_rhs`] using only the nonzero operator entries.
pub(super) struct Generator<'a> {
    sys: &'a LindbladSystem,
    dim: usize,
    h: SparseOp,
    channels: Vec<CompiledChannel>,
    scratch: Vec<C64>,
}

impl<'a> Generator<'a> {
    pub(super) fn new(sys: &'a LindbladSystem) -> Self {
        let channels = sys
            .channels()
            .iter()
            .map(|ch| {
                let ld = ch.op.adjoint();
                let k = &ld * &ch.op;
                CompiledChannel {
                    l: SparseOp::from_dense(&ch.op),
                    l_dag: SparseOp::from_dense(&ld),
                    k: SparseOp::from_dense(&k),
                }
            })
            .collect();
        let dim = sys.dim();
        Self {
            sys,
            dim,
            h: SparseOp::from_dense(sys.hamiltonian()),
            channels,
            scratch: vec![C64::new(0.0, 0.0); dim * dim],
        }
    }

    /// Rates at time `t`, one per channel.
    pub(super) fn rates(&self, t: f64) -> Result<Vec<f64>> {
        self.sys.channels().iter().map(|c| c.rate.eval(t)).collect()
    }

    /// Writes the generator applied to `rho` into `out`.
    pub(super) fn apply(&mut self, rho: &[C64], rates: &[f64], out: &mut [C64]) {
        let d = self.dim;
        out.fill(C64::new(0.0, 0.0));
        let mi = C64::new(0.0, -1.0);
        self.h.add_left(rho, out, d, mi);
        self.h.add_right(rho, out, d, -mi);
        for (ch, &gamma) in self.channels.iter().zip(rates) {
            if gamma == 0.0 {
                continue;
            }
            let g = C64::new(gamma, 0.0);
            self.scratch.fill(C64::new(0.0, 0.0));
            ch.l.add_left(rho, &mut self.scratch, d, C64::new(1.0, 0.0));
            ch.l_dag.add_right(&self.scratch, out, d, g);
            let half = C64::new(-0.5 * gamma, 0.0);
            ch.k.add_left(rho, out, d, half);
            ch.k.add_right(rho, out, d, half);
        }
    }
}
