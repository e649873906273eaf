//! JSON coefficient files.
//!
//! Floats are written in the shortest form that parses back to the same
//! `f64`, so write → read → write is byte-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmurfError};
use crate::stochastic::AffineMap;
use crate::table::{aggregate_states, SolverSummary, TableMeta, WeightTable};

pub const FORMAT_VERSION: u32 = 1;
pub const CODEWORD_ORDER: &str = "digit1-least-significant";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientFile {
    format_version: u32,
    target_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expression: Option<String>,
    #[serde(rename = "N")]
    n_states: usize,
    #[serde(rename = "M")]
    arity: usize,
    codeword_order: String,
    weights: Vec<f64>,
    input_maps: Vec<AffineMap>,
    output_map: AffineMap,
    #[serde(default)]
    grid_resolution: Option<usize>,
    #[serde(default)]
    solver: Option<SolverSummary>,
    #[serde(default)]
    master_seed: u64,
}

fn invalid(msg: impl Into<String>) -> SmurfError {
    SmurfError::CoefficientFile(msg.into())
}

/// Serializes `table` to the coefficient-file text.
pub fn write_table(table: &WeightTable) -> Result<String> {
    let meta = &table.meta;
    let file = CoefficientFile {
        format_version: FORMAT_VERSION,
        target_name: meta.target_name.clone(),
        expression: meta.expression.clone(),
        n_states: table.n_states(),
        arity: table.arity(),
        codeword_order: CODEWORD_ORDER.to_owned(),
        weights: table.weights().to_vec(),
        input_maps: meta.input_maps.clone(),
        output_map: meta.output_map,
        grid_resolution: meta.grid_resolution,
        solver: meta.solver.clone(),
        master_seed: meta.master_seed,
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    Ok(text)
}

/// Parses and validates coefficient-file text.
pub fn read_table(text: &str) -> Result<WeightTable> {
    let file: CoefficientFile = serde_json::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(invalid(format!(
            "format_version {} is not supported (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    if file.codeword_order != CODEWORD_ORDER {
        return Err(invalid(format!(
            "codeword_order `{}` is not supported (expected `{CODEWORD_ORDER}`)",
            file.codeword_order
        )));
    }
    let expected = aggregate_states(file.n_states, file.arity)?;
    if file.weights.len() != expected {
        return Err(invalid(format!(
            "{} weights for N={} M={} (expected {expected})",
            file.weights.len(),
            file.n_states,
            file.arity
        )));
    }
    if let Some((t, w)) = file
        .weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(0.0..=1.0).contains(*w))
    {
        return Err(invalid(format!("weight w_{t} = {w} outside [0, 1]")));
    }
    if file.input_maps.len() != file.arity {
        return Err(invalid(format!(
            "{} input maps for M={}",
            file.input_maps.len(),
            file.arity
        )));
    }
    for map in file.input_maps.iter().chain([&file.output_map]) {
        AffineMap::new(map.lo, map.hi).map_err(|e| invalid(e.to_string()))?;
    }
    let meta = TableMeta {
        target_name: file.target_name,
        expression: file.expression,
        input_maps: file.input_maps,
        output_map: file.output_map,
        grid_resolution: file.grid_resolution,
        solver: file.solver,
        master_seed: file.master_seed,
    };
    WeightTable::with_meta(file.n_states, file.arity, file.weights, meta)
}

pub fn save_table(path: impl AsRef<Path>, table: &WeightTable) -> Result<()> {
    fs::write(path, write_table(table)?)?;
    Ok(())
}

pub fn load_table(path: impl AsRef<Path>) -> Result<WeightTable> {
    read_table(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> WeightTable {
        let mut meta = TableMeta::unnamed(2);
        meta.target_name = "euclidean2".into();
        meta.expression = Some("sqrt(x1^2 + x2^2)".into());
        meta.output_map = AffineMap::new(0.0, std::f64::consts::SQRT_2).unwrap();
        meta.grid_resolution = Some(33);
        meta.solver = Some(SolverSummary {
            iterations: 7,
            phi: -0.123456789012345,
            residual: 3.2e-17,
            regularization: 1e-12,
        });
        meta.master_seed = u64::MAX;
        let w = (0..16).map(|k| (k as f64 / 15.0).powf(1.7)).collect();
        WeightTable::with_meta(4, 2, w, meta).unwrap()
    }

    #[test]
    fn round_trip_is_identical() {
        let table = sample();
        let text = write_table(&table).unwrap();
        let back = read_table(&text).unwrap();
        assert_eq!(back, table);
        assert_eq!(write_table(&back).unwrap(), text);
        assert!(text.contains("\"codeword_order\": \"digit1-least-significant\""));
        assert!(text.contains("\"N\": 4"));
    }

    #[test]
    fn rejects_tampered_files() {
        let text = write_table(&sample()).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["weights"][3] = 1.5.into();
        assert!(read_table(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["format_version"] = 2.into();
        assert!(read_table(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["weights"].as_array_mut().unwrap().pop();
        assert!(read_table(&v.to_string()).is_err());

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["codeword_order"] = "digit1-most-significant".into();
        assert!(read_table(&v.to_string()).is_err());

        assert!(read_table("{").is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_weights_round_trip(w in proptest::collection::vec(0.0f64..=1.0, 9)) {
            let table = WeightTable::new(3, 2, w).unwrap();
            let text = write_table(&table).unwrap();
            let back = read_table(&text).unwrap();
            prop_assert_eq!(back.weights(), table.weights());
            prop_assert_eq!(write_table(&back).unwrap(), text);
        }
    }
}
