//! The seven benchmark systems: Hamiltonians, jump channels, initial states,
//! recorded observables and parameter-sampling ranges.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bernstein::{sample_rate, uniform_open, BernsteinRate};
use crate::error::{Error, Result};
use crate::quantum::{
    haar_random_pure, kron, ladder, pauli, ComplexMatrix, DensityMatrix, Ladder, Pauli, PureState,
    RandomSource,
};
use crate::sim::{JumpChannel, LindbladSystem, Observable, TimeGrid};

/// Default Fock truncation for the cavity mode (`|0⟩ … |20⟩`).
pub const DEFAULT_FOCK_DIM: usize = 21;
/// Recorded points per trajectory.
pub const GRID_POINTS: usize = 100;

/// Auxiliary JC observable `i(a − a†)σ_z`.
pub const JC_AUX_P_SZ: &str = "p_sz";
/// Auxiliary JC observable `i(aσ_+ − a†σ_−)`.
pub const JC_AUX_EXCHANGE: &str = "exchange";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelId {
    #[serde(rename = "sq-const")]
    SqConst,
    #[serde(rename = "sq-const-two")]
    SqConstTwo,
    #[serde(rename = "sq-td")]
    SqTd,
    #[serde(rename = "sq-td-two")]
    SqTdTwo,
    #[serde(rename = "heisenberg")]
    Heisenberg,
    #[serde(rename = "ising")]
    Ising,
    #[serde(rename = "jc")]
    Jc,
}

impl ModelId {
    pub const ALL: [ModelId; 7] = [
        ModelId::SqConst,
        ModelId::SqConstTwo,
        ModelId::SqTd,
        ModelId::SqTdTwo,
        ModelId::Heisenberg,
        ModelId::Ising,
        ModelId::Jc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::SqConst => "sq-const",
            ModelId::SqConstTwo => "sq-const-two",
            ModelId::SqTd => "sq-td",
            ModelId::SqTdTwo => "sq-td-two",
            ModelId::Heisenberg => "heisenberg",
            ModelId::Ising => "ising",
            ModelId::Jc => "jc",
        }
    }

    pub fn observable_names(self) -> &'static [&'static str] {
        match self {
            ModelId::SqConst | ModelId::SqTd => &["sz"],
            ModelId::SqConstTwo | ModelId::SqTdTwo => &["sx", "sy", "sz"],
            ModelId::Heisenberg | ModelId::Ising => &["sx1", "sy1", "sz1", "sx2", "sy2", "sz2"],
            ModelId::Jc => &["sx", "sy", "sz", "n_phot", "x_sz"],
        }
    }

    pub fn target_names(self) -> Vec<String> {
        fn coeffs(prefix: &str) -> Vec<String> {
            (0..3).map(|j| format!("{prefix}_{j}")).collect()
        }
        match self {
            ModelId::SqConst => vec!["gamma_minus".into()],
            ModelId::SqConstTwo => vec!["gamma_plus".into(), "gamma_minus".into()],
            ModelId::SqTd => coeffs("gamma_minus"),
            ModelId::SqTdTwo => [coeffs("gamma_plus"), coeffs("gamma_minus")].concat(),
            ModelId::Heisenberg | ModelId::Ising => vec![
                "gamma_plus_1".into(),
                "gamma_minus_1".into(),
                "gamma_plus_2".into(),
                "gamma_minus_2".into(),
            ],
            ModelId::Jc => [coeffs("kappa"), coeffs("gamma")].concat(),
        }
    }

    pub fn target_count(self) -> usize {
        self.target_names().len()
    }

    pub fn time_span(self) -> [f64; 2] {
        match self {
            ModelId::Heisenberg | ModelId::Ising => [0.0, 1.0],
            _ => [0.0, 10.0],
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::UnknownModel(s.to_string()))
    }
}

/// Initial qubit state for the JC model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JcQubitInit {
    #[default]
    Haar,
    Ground,
}

/// Open interval `(lo, hi)` for uniform sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

const fn range(lo: f64, hi: f64) -> Range {
    Range { lo, hi }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: ModelId,
    pub grid: TimeGrid,
    /// Rate range for constant channels and Bernstein coefficients.
    pub rate_range: Range,
    /// `J` for Heisenberg/Ising.
    pub coupling_range: Range,
    /// `h` for Ising.
    pub field_range: Range,
    /// `ω_c`, `ω_q` for JC.
    pub frequency_range: Range,
    /// `g` for JC.
    pub jc_coupling_range: Range,
    /// Initial photon number, inclusive.
    pub photon_range: (usize, usize),
    pub fock_dim: usize,
    pub jc_qubit_init: JcQubitInit,
}

impl ModelSpec {
    pub fn new(id: ModelId) -> Self {
        let [t0, t1] = id.time_span();
        let rate_range = match id {
            ModelId::SqConst | ModelId::SqConstTwo => range(0.0, 2.0),
            ModelId::Jc => range(0.01, 0.2),
            _ => range(0.1, 2.0),
        };
        let coupling_range = match id {
            ModelId::Ising => range(0.1, 2.0),
            _ => range(0.0, 2.0),
        };
        Self {
            id,
            grid: TimeGrid::new(t0, t1, GRID_POINTS).expect("static grid"),
            rate_range,
            coupling_range,
            field_range: range(0.1, 2.0),
            frequency_range: range(0.8, 1.2),
            jc_coupling_range: range(0.01, 0.1),
            photon_range: (1, 10),
            fock_dim: DEFAULT_FOCK_DIM,
            jc_qubit_init: JcQubitInit::Haar,
        }
    }

    pub fn dim(&self) -> usize {
        match self.id {
            ModelId::Heisenberg | ModelId::Ising => 4,
            ModelId::Jc => 2 * self.fock_dim,
            _ => 2,
        }
    }

    pub fn target_names(&self) -> Vec<String> {
        self.id.target_names()
    }

    /// Observables recorded for this model, in series order.
    pub fn observables(&self) -> Vec<Observable> {
        let (x, y, z) = (pauli(Pauli::X), pauli(Pauli::Y), pauli(Pauli::Z));
        match self.id {
            ModelId::SqConst | ModelId::SqTd => vec![Observable::new("sz", z)],
            ModelId::SqConstTwo | ModelId::SqTdTwo => vec![
                Observable::new("sx", x),
                Observable::new("sy", y),
                Observable::new("sz", z),
            ],
            ModelId::Heisenberg | ModelId::Ising => {
                let mut obs = Vec::with_capacity(6);
                for site in 0..2 {
                    for (name, op) in [("sx", &x), ("sy", &y), ("sz", &z)] {
                        obs.push(Observable::new(
                            format!("{name}{}", site + 1),
                            on_site(op, site),
                        ));
                    }
                }
                obs
            }
            ModelId::Jc => jc_observables(self.fock_dim).expect("fock_dim validated"),
        }
    }

    /// JC cross terms needed to close the Heisenberg equations; empty for
    /// every other model.
    pub fn auxiliary_observables(&self) -> Vec<Observable> {
        match self.id {
            ModelId::Jc => jc_auxiliary_observables(self.fock_dim).expect("fock_dim validated"),
            _ => Vec::new(),
        }
    }
}

/// Regression targets with their names.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
}

impl TargetVector {
    pub fn to_map(&self) -> IndexMap<String, f64> {
        self.names
            .iter()
            .cloned()
            .zip(self.values.iter().copied())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One sampled realization of a model.
#[derive(Debug, Clone)]
pub struct Instance {
    pub system: LindbladSystem,
    pub rho0: DensityMatrix,
    pub targets: TargetVector,
    /// Sampled physics parameters (`J`, `h`, `omega_c`, `omega_q`, `g`, `n`).
    pub params: IndexMap<String, f64>,
}

/// Embeds a single-qubit operator on `site` (0 or 1) of a two-qubit register.
pub fn on_site(op: &ComplexMatrix, site: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(2);
    if site == 0 {
        kron(op, &id)
    } else {
        kron(&id, op)
    }
}

pub fn heisenberg_hamiltonian(j: f64) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(4, 4);
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        h += &kron(&pauli(p), &pauli(p));
    }
    h.scale_real(j)
}

pub fn ising_hamiltonian(j: f64, field: f64) -> ComplexMatrix {
    let zz = kron(&pauli(Pauli::Z), &pauli(Pauli::Z)).scale_real(j);
    let x = pauli(Pauli::X);
    let xs = (&on_site(&x, 0) + &on_site(&x, 1)).scale_real(field);
    &zz + &xs
}

/// Qubit ⊗ cavity operators for the JC model.
struct JcOps {
    sx: ComplexMatrix,
    sy: ComplexMatrix,
    sz: ComplexMatrix,
    sp: ComplexMatrix,
    sm: ComplexMatrix,
    a: ComplexMatrix,
    ad: ComplexMatrix,
    n: ComplexMatrix,
}

impl JcOps {
    fn new(fock_dim: usize) -> Result<Self> {
        let idf = ComplexMatrix::identity(fock_dim);
        let id2 = ComplexMatrix::identity(2);
        let q = |p| kron(&pauli(p), &idf);
        let f = |l| -> Result<ComplexMatrix> { Ok(kron(&id2, &ladder(fock_dim, l)?)) };
        Ok(Self {
            sx: q(Pauli::X),
            sy: q(Pauli::Y),
            sz: q(Pauli::Z),
            sp: q(Pauli::Plus),
            sm: q(Pauli::Minus),
            a: f(Ladder::Lower)?,
            ad: f(Ladder::Raise)?,
            n: f(Ladder::Number)?,
        })
    }
}

/// `ω_c a†a + (ω_q/2)σ_z + g(σ_+a + σ_−a†)` on qubit ⊗ cavity.
pub fn jc_hamiltonian(omega_c: f64, omega_q: f64, g: f64, fock_dim: usize) -> Result<ComplexMatrix> {
    let ops = JcOps::new(fock_dim)?;
    let exchange = &(&ops.sp * &ops.a) + &(&ops.sm * &ops.ad);
    Ok(&(&ops.n.scale_real(omega_c) + &ops.sz.scale_real(0.5 * omega_q))
        + &exchange.scale_real(g))
}

/// `a†a + σ_+σ_−`, conserved by the JC Hamiltonian.
pub fn jc_excitation_number(fock_dim: usize) -> Result<ComplexMatrix> {
    let ops = JcOps::new(fock_dim)?;
    Ok(&ops.n + &(&ops.sp * &ops.sm))
}

/// Photon quadrature `X = (a + a†)/√2`.
pub fn photon_quadrature(fock_dim: usize) -> Result<ComplexMatrix> {
    let a = ladder(fock_dim, Ladder::Lower)?;
    Ok((&a + &a.adjoint()).scale_real(std::f64::consts::FRAC_1_SQRT_2))
}

fn jc_observables(fock_dim: usize) -> Result<Vec<Observable>> {
    let ops = JcOps::new(fock_dim)?;
    let x_sz = kron(&pauli(Pauli::Z), &photon_quadrature(fock_dim)?);
    Ok(vec![
        Observable::new("sx", ops.sx),
        Observable::new("sy", ops.sy),
        Observable::new("sz", ops.sz),
        Observable::new("n_phot", ops.n),
        Observable::new("x_sz", x_sz),
    ])
}

fn jc_auxiliary_observables(fock_dim: usize) -> Result<Vec<Observable>> {
    let ops = JcOps::new(fock_dim)?;
    let i = C64::new(0.0, 1.0);
    let p_sz = (&(&ops.a - &ops.ad) * &ops.sz).scale(i);
    let exchange = (&(&ops.a * &ops.sp) - &(&ops.ad * &ops.sm)).scale(i);
    Ok(vec![
        Observable::new(JC_AUX_P_SZ, p_sz),
        Observable::new(JC_AUX_EXCHANGE, exchange),
    ])
}

/// Samples one realization of `spec`.
pub fn instantiate(spec: &ModelSpec, rng: &mut RandomSource) -> Result<Instance> {
    let span = spec.grid.span();
    let rr = spec.rate_range;
    let constant = |rng: &mut RandomSource| -> Result<BernsteinRate> {
        BernsteinRate::constant(uniform_open(rr.lo, rr.hi, rng), span)
    };
    let quadratic = |rng: &mut RandomSource| sample_rate(2, rr.lo, rr.hi, span, rng);
    let (sz, sp, sm) = (pauli(Pauli::Z), pauli(Pauli::Plus), pauli(Pauli::Minus));
    let excited = || DensityMatrix::from_pure(&PureState::basis(2, 0).expect("dim 2"));
    let haar = |rng: &mut RandomSource, d| -> Result<DensityMatrix> {
        Ok(DensityMatrix::from_pure(&haar_random_pure(d, rng)?))
    };
    let mut params = IndexMap::new();

    let (system, rho0, values) = match spec.id {
        ModelId::SqConst => {
            let gm = constant(rng)?;
            let v = vec![gm.coeffs()[0]];
            let sys = LindbladSystem::new(sz, vec![JumpChannel::new(sm, gm)])?;
            (sys, excited(), v)
        }
        ModelId::SqConstTwo => {
            let gp = constant(rng)?;
            let gm = constant(rng)?;
            let v = vec![gp.coeffs()[0], gm.coeffs()[0]];
            let sys = LindbladSystem::new(
                sz,
                vec![JumpChannel::new(sm, gm), JumpChannel::new(sp, gp)],
            )?;
            (sys, haar(rng, 2)?, v)
        }
        ModelId::SqTd => {
            let gm = quadratic(rng)?;
            let v = gm.coeffs().to_vec();
            let sys = LindbladSystem::new(sz, vec![JumpChannel::new(sm, gm)])?;
            (sys, excited(), v)
        }
        ModelId::SqTdTwo => {
            let gp = quadratic(rng)?;
            let gm = quadratic(rng)?;
            let v = gp.coeffs().iter().chain(gm.coeffs()).copied().collect();
            let sys = LindbladSystem::new(
                sz,
                vec![JumpChannel::new(sm, gm), JumpChannel::new(sp, gp)],
            )?;
            (sys, haar(rng, 2)?, v)
        }
        ModelId::Heisenberg | ModelId::Ising => {
            let h = if spec.id == ModelId::Heisenberg {
                let j = uniform_open(spec.coupling_range.lo, spec.coupling_range.hi, rng);
                params.insert("J".to_string(), j);
                heisenberg_hamiltonian(j)
            } else {
                let j = uniform_open(spec.coupling_range.lo, spec.coupling_range.hi, rng);
                let field = uniform_open(spec.field_range.lo, spec.field_range.hi, rng);
                params.insert("J".to_string(), j);
                params.insert("h".to_string(), field);
                ising_hamiltonian(j, field)
            };
            let mut channels = Vec::with_capacity(4);
            let mut v = Vec::with_capacity(4);
            for site in 0..2 {
                let gp = constant(rng)?;
                let gm = constant(rng)?;
                v.push(gp.coeffs()[0]);
                v.push(gm.coeffs()[0]);
                channels.push(JumpChannel::new(on_site(&sp, site), gp));
                channels.push(JumpChannel::new(on_site(&sm, site), gm));
            }
            let rho0 = haar(rng, 2)?.tensor(&haar(rng, 2)?);
            (LindbladSystem::new(h, channels)?, rho0, v)
        }
        ModelId::Jc => {
            let fr = spec.frequency_range;
            let omega_c = uniform_open(fr.lo, fr.hi, rng);
            let omega_q = uniform_open(fr.lo, fr.hi, rng);
            let g = uniform_open(spec.jc_coupling_range.lo, spec.jc_coupling_range.hi, rng);
            let kappa = quadratic(rng)?;
            let gamma = quadratic(rng)?;
            let (n_lo, n_hi) = spec.photon_range;
            let n = rng.random_range(n_lo..=n_hi);
            if n + 2 >= spec.fock_dim {
                return Err(Error::InvalidDimension(format!(
                    "Fock truncation {} too small for initial photon number {n}",
                    spec.fock_dim
                )));
            }
            let qubit = match spec.jc_qubit_init {
                JcQubitInit::Haar => haar_random_pure(2, rng)?,
                JcQubitInit::Ground => PureState::basis(2, 1)?,
            };
            let fock = PureState::basis(spec.fock_dim, n)?;
            let rho0 = DensityMatrix::from_pure(&qubit.tensor(&fock));

            params.insert("omega_c".to_string(), omega_c);
            params.insert("omega_q".to_string(), omega_q);
            params.insert("g".to_string(), g);
            params.insert("n".to_string(), n as f64);

            let ops = JcOps::new(spec.fock_dim)?;
            let v = kappa.coeffs().iter().chain(gamma.coeffs()).copied().collect();
            let sys = LindbladSystem::new(
                jc_hamiltonian(omega_c, omega_q, g, spec.fock_dim)?,
                vec![JumpChannel::new(ops.a, kappa), JumpChannel::new(ops.sm, gamma)],
            )?;
            (sys, rho0, v)
        }
    };

    Ok(Instance {
        system,
        rho0,
        targets: TargetVector {
            names: spec.target_names(),
            values,
        },
        params,
    })
}

/// Rebuilds the JC rates `(κ, γ)` from a target vector in `kappa_0..2, gamma_0..2` order.
pub fn jc_rates_from_targets(values: &[f64], span: [f64; 2]) -> Result<(BernsteinRate, BernsteinRate)> {
    if values.len() != 6 {
        return Err(Error::DimensionMismatch {
            expected: 6,
            got: values.len(),
        });
    }
    Ok((
        BernsteinRate::new(values[..3].to_vec(), span)?,
        BernsteinRate::new(values[3..].to_vec(), span)?,
    ))
}
