//! The synthesized artifact: one θ-gate threshold per aggregate state.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmurfError};
use crate::stochastic::AffineMap;

/// Largest supported aggregate state count `N^M`.
pub const MAX_AGGREGATE_STATES: usize = 4096;

/// `N^M`, or an error when it overflows or exceeds [`MAX_AGGREGATE_STATES`].
pub fn aggregate_states(n_states: usize, arity: usize) -> Result<usize> {
    if n_states < 2 {
        return Err(SmurfError::Config(format!(
            "state count N = {n_states} must be at least 2"
        )));
    }
    if arity < 1 {
        return Err(SmurfError::Config(format!(
            "arity M = {arity} must be at least 1"
        )));
    }
    let total = u32::try_from(arity)
        .ok()
        .and_then(|m| n_states.checked_pow(m))
        .filter(|&t| t <= MAX_AGGREGATE_STATES);
    total.ok_or_else(|| {
        SmurfError::Config(format!(
            "N^M = {n_states}^{arity} exceeds the limit of {MAX_AGGREGATE_STATES} θ-gates; \
             lower N or M"
        ))
    })
}

/// Diagnostics of the QP solve that produced a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSummary {
    pub iterations: usize,
    pub phi: f64,
    pub residual: f64,
    #[serde(default)]
    pub regularization: f64,
}

/// Provenance carried alongside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TableMeta {
    pub target_name: String,
    pub expression: Option<String>,
    pub input_maps: Vec<AffineMap>,
    pub output_map: AffineMap,
    pub grid_resolution: Option<usize>,
    pub solver: Option<SolverSummary>,
    pub master_seed: u64,
}

impl TableMeta {
    pub fn unnamed(arity: usize) -> Self {
        Self {
            target_name: "custom".to_owned(),
            expression: None,
            input_maps: vec![AffineMap::UNIT; arity],
            output_map: AffineMap::UNIT,
            grid_resolution: None,
            solver: None,
            master_seed: 0,
        }
    }
}

/// `N^M` thresholds in flat codeword order (digit 1 least significant).
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    n_states: usize,
    arity: usize,
    weights: Vec<f64>,
    pub meta: TableMeta,
}

impl WeightTable {
    pub fn new(n_states: usize, arity: usize, weights: Vec<f64>) -> Result<Self> {
        Self::with_meta(n_states, arity, weights, TableMeta::unnamed(arity))
    }

    pub fn with_meta(
        n_states: usize,
        arity: usize,
        weights: Vec<f64>,
        meta: TableMeta,
    ) -> Result<Self> {
        let expected = aggregate_states(n_states, arity)?;
        if weights.len() != expected {
            return Err(SmurfError::DimensionMismatch {
                expected,
                got: weights.len(),
            });
        }
        if let Some((t, &w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(0.0..=1.0).contains(*w))
        {
            return Err(SmurfError::Config(format!(
                "weight w_{t} = {w} outside [0, 1]"
            )));
        }
        if meta.input_maps.len() != arity {
            return Err(SmurfError::DimensionMismatch {
                expected: arity,
                got: meta.input_maps.len(),
            });
        }
        Ok(Self {
            n_states,
            arity,
            weights,
            meta,
        })
    }

    /// Every threshold equal to `value`.
    pub fn constant(n_states: usize, arity: usize, value: f64) -> Result<Self> {
        let len = aggregate_states(n_states, arity)?;
        Self::new(n_states, arity, vec![value; len])
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, t: usize) -> f64 {
        self.weights[t]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregate_limits() {
        assert_eq!(aggregate_states(4, 2).unwrap(), 16);
        assert_eq!(aggregate_states(16, 3).unwrap(), 4096);
        assert!(aggregate_states(17, 3).is_err());
        assert!(aggregate_states(1, 3).is_err());
        assert!(aggregate_states(4, 0).is_err());
        assert!(aggregate_states(2, 200).is_err());
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(WeightTable::new(4, 2, vec![0.5; 15]).is_err());
        let mut w = vec![0.5; 16];
        w[3] = 1.5;
        assert!(WeightTable::new(4, 2, w).is_err());
        assert!(WeightTable::constant(3, 2, 0.25).is_ok());
    }
}
