//! Lindblad master-equation integration with time-dependent rates.

mod evolve;
mod generator;
mod superop;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::bernstein::BernsteinRate;
use crate::error::{Error, Result};
use crate::quantum::{ComplexMatrix, OBSERVABLE_HERMITIAN_TOL};

pub use evolve::{evolve, EvolveOptions, DEFAULT_SUBSTEPS};
pub use generator::lindblad_rhs;
pub use superop::{liouvillian, superoperator_propagate};

/// Jump operator `L` with its non-negative rate `γ(t)`.
#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub op: ComplexMatrix,
    pub rate: BernsteinRate,
}

impl JumpChannel {
    pub fn new(op: ComplexMatrix, rate: BernsteinRate) -> Self {
        Self { op, rate }
    }
}

/// Hamiltonian (ħ = 1) plus dissipative channels.
#[derive(Debug, Clone)]
pub struct LindbladSystem {
    hamiltonian: ComplexMatrix,
    channels: Vec<JumpChannel>,
}

impl LindbladSystem {
    pub fn new(hamiltonian: ComplexMatrix, channels: Vec<JumpChannel>) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(Error::InvalidDimension(format!(
                "Hamiltonian is {}x{}",
                hamiltonian.rows(),
                hamiltonian.cols()
            )));
        }
        let defect = hamiltonian.hermiticity_defect();
        if defect > OBSERVABLE_HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: defect });
        }
        let dim = hamiltonian.rows();
        for ch in &channels {
            if ch.op.rows() != dim || ch.op.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: ch.op.rows(),
                });
            }
        }
        Ok(Self {
            hamiltonian,
            channels,
        })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[JumpChannel] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [JumpChannel] {
        &mut self.channels
    }

    pub fn is_time_independent(&self) -> bool {
        self.channels.iter().all(|c| c.rate.is_constant())
    }
}

/// Named Hermitian observable recorded along a trajectory.
#[derive(Debug, Clone)]
pub struct Observable {
    pub name: String,
    pub op: ComplexMatrix,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: ComplexMatrix) -> Self {
        Self {
            name: name.into(),
            op,
        }
    }
}

/// Uniform time grid `t_0 … t_{M−1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InsufficientData(format!(
                "time grid needs at least 2 points, got {points}"
            )));
        }
        if !(end > start) {
            return Err(Error::OutOfRange(format!("empty time span [{start}, {end}]")));
        }
        Ok(Self { start, end, points })
    }

    pub fn dt(&self) -> f64 {
        (self.end - self.start) / (self.points - 1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.end
        } else {
            self.start + k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.time(k)).collect()
    }

    pub fn span(&self) -> [f64; 2] {
        [self.start, self.end]
    }
}

/// Observable time series on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub series: IndexMap<String, Vec<f64>>,
    /// Density matrices at the recorded times, when requested.
    pub states: Option<Vec<ComplexMatrix>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn series(&self, name: &str) -> Result<&[f64]> {
        self.series
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingSeries(name.to_string()))
    }

    pub fn dt(&self) -> f64 {
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }
}
