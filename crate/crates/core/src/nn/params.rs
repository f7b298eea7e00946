//! Flat, ordered storage of named parameter tensors.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a tensor in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub(crate) usize);

/// Named 2-D tensors in registration order. Gradients and optimizer moments
/// use stores of the same layout, built with [`ParamStore::zeros_like`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Array2<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Array2<f64>) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| Array2::zeros(t.raw_dim())).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Array2<f64> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Array2<f64> {
        &mut self.tensors[id.0]
    }

    /// Number of tensors.
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalars.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Array2<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.tensors
    }

    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            t.mapv_inplace(|v| v * factor);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn locate(&self, mut flat: usize) -> (usize, usize) {
        for (i, t) in self.tensors.iter().enumerate() {
            if flat < t.len() {
                return (i, flat);
            }
            flat -= t.len();
        }
        panic!("flat parameter index out of range");
    }

    /// Scalar at a flat index over all tensors in order (row-major within each).
    pub fn scalar(&self, flat: usize) -> f64 {
        let (i, j) = self.locate(flat);
        let cols = self.tensors[i].ncols();
        self.tensors[i][(j / cols, j % cols)]
    }

    pub fn set_scalar(&mut self, flat: usize, value: f64) {
        let (i, j) = self.locate(flat);
        let cols = self.tensors[i].ncols();
        self.tensors[i][(j / cols, j % cols)] = value;
    }

    pub(crate) fn to_records(&self) -> Vec<TensorRecord> {
        self.names
            .iter()
            .zip(&self.tensors)
            .map(|(name, t)| TensorRecord {
                name: name.clone(),
                shape: [t.nrows(), t.ncols()],
                data: t.iter().copied().collect(),
            })
            .collect()
    }

    /// Overwrites values from checkpoint records, checking names and shapes.
    pub(crate) fn load_records(&mut self, records: &[TensorRecord]) -> Result<()> {
        if records.len() != self.len() {
            return Err(Error::Schema(format!(
                "checkpoint has {} tensors, model expects {}",
                records.len(),
                self.len()
            )));
        }
        for ((name, t), rec) in self.names.iter().zip(&mut self.tensors).zip(records) {
            if &rec.name != name || rec.shape != [t.nrows(), t.ncols()] {
                return Err(Error::Schema(format!(
                    "tensor `{}` {:?} does not match expected `{name}` {:?}",
                    rec.name,
                    rec.shape,
                    t.shape()
                )));
            }
            *t = Array2::from_shape_vec((rec.shape[0], rec.shape[1]), rec.data.clone())
                .map_err(|e| Error::Schema(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TensorRecord {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn flat_indexing_walks_tensors_in_order() {
        let mut p = ParamStore::new();
        p.add("a", array![[1.0, 2.0], [3.0, 4.0]]);
        p.add("b", array![[5.0, 6.0, 7.0]]);
        assert_eq!(p.numel(), 7);
        let flat: Vec<f64> = (0..7).map(|i| p.scalar(i)).collect();
        assert_eq!(flat, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        p.set_scalar(5, -1.0);
        assert_eq!(p.get(ParamId(1))[(0, 1)], -1.0);
        assert!((p.norm() - (1.0f64 + 4.0 + 9.0 + 16.0 + 25.0 + 1.0 + 49.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn records_round_trip_and_validate() {
        let mut p = ParamStore::new();
        p.add("w", array![[0.1, 0.2], [0.3, 0.4]]);
        let recs = p.to_records();
        let mut q = p.zeros_like();
        q.load_records(&recs).unwrap();
        assert_eq!(p, q);
        let mut bad = recs.clone();
        bad[0].shape = [1, 4];
        assert!(q.load_records(&bad).is_err());
    }
}
