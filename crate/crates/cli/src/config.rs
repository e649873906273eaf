//! Run configuration: a JSON file whose fields mirror the command-line
//! flags. Flags override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use smurf_core::{aggregate_states, AffineMap, OutputBox, QpMethod, RngKind};

use crate::CliError;

/// `4` or `[3, 4, 8]`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(usize),
    Many(Vec<usize>),
}

impl OneOrMany {
    pub fn into_vec(self) -> Vec<usize> {
        match self {
            Self::One(n) => vec![n],
            Self::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub target: Option<String>,
    pub expr: Option<String>,
    pub arity: Option<usize>,
    pub n_states: Option<OneOrMany>,
    pub lengths: Option<Vec<usize>>,
    pub burn_in: Option<usize>,
    pub initial_state: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<usize>,
    pub grid_points: Option<usize>,
    pub rng: Option<RngKind>,
    pub qp: Option<String>,
    /// One `[lo, hi]` per input, or a single box applied to every input.
    pub input_box: Option<Vec<[f64; 2]>>,
    /// `[lo, hi]` or the string `"auto"`.
    pub output_box: Option<serde_json::Value>,
    pub coeffs: Option<Vec<PathBuf>>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `flags` replace those in `self`.
    pub fn overridden_by(self, flags: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: flags.$f.or(self.$f)),* } };
        }
        pick!(
            target,
            expr,
            arity,
            n_states,
            lengths,
            burn_in,
            initial_state,
            seed,
            grid,
            grid_points,
            rng,
            qp,
            input_box,
            output_box,
            coeffs,
            out
        )
    }

    pub fn n_states_list(&self) -> Result<Vec<usize>, CliError> {
        let list = self
            .n_states
            .clone()
            .map(OneOrMany::into_vec)
            .ok_or_else(|| CliError::Config("missing --n-states".into()))?;
        if list.is_empty() {
            return Err(CliError::Config(
                "--n-states needs at least one value".into(),
            ));
        }
        Ok(list)
    }

    pub fn single_n_states(&self) -> Result<usize, CliError> {
        match self.n_states_list()?.as_slice() {
            [n] => Ok(*n),
            many => Err(CliError::Config(format!(
                "expected a single --n-states value, got {many:?}"
            ))),
        }
    }

    pub fn lengths(&self) -> Result<Vec<usize>, CliError> {
        let lengths = self.lengths.clone().unwrap_or_else(|| vec![64]);
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(CliError::Config(
                "--lengths must be a non-empty list of positive integers".into(),
            ));
        }
        Ok(lengths)
    }

    pub fn qp_method(&self) -> Result<QpMethod, CliError> {
        match self.qp.as_deref() {
            None | Some("active-set") => Ok(QpMethod::ActiveSet),
            Some("projected-gradient") => Ok(QpMethod::ProjectedGradient),
            Some(other) => Err(CliError::Config(format!(
                "unknown --qp `{other}` (expected active-set or projected-gradient)"
            ))),
        }
    }

    /// Input boxes expanded to `arity` maps, if any were given.
    pub fn input_maps(&self, arity: usize) -> Result<Option<Vec<AffineMap>>, CliError> {
        let Some(boxes) = &self.input_box else {
            return Ok(None);
        };
        let maps = boxes
            .iter()
            .map(|[lo, hi]| AffineMap::new(*lo, *hi))
            .collect::<Result<Vec<_>, _>>()?;
        match maps.len() {
            1 => Ok(Some(vec![maps[0]; arity])),
            n if n == arity => Ok(Some(maps)),
            n => Err(CliError::Config(format!(
                "{n} input boxes given for a {arity}-input target"
            ))),
        }
    }

    pub fn output(&self) -> Result<Option<OutputBox>, CliError> {
        match &self.output_box {
            None => Ok(None),
            Some(serde_json::Value::String(s)) if s == "auto" => Ok(Some(OutputBox::Auto)),
            Some(v) => {
                let pair: [f64; 2] = serde_json::from_value(v.clone()).map_err(|_| {
                    CliError::Config(format!("output box must be [lo, hi] or \"auto\", got {v}"))
                })?;
                Ok(Some(OutputBox::Explicit(AffineMap::new(pair[0], pair[1])?)))
            }
        }
    }

    pub fn rng_kind(&self) -> RngKind {
        self.rng.unwrap_or_default()
    }
}

/// Rejects `N < 2`, `M < 1` and `N^M` beyond the gate limit.
pub fn check_dimensions(n_states: usize, arity: usize) -> Result<(), CliError> {
    aggregate_states(n_states, arity)?;
    Ok(())
}

/// `lo,hi` from the command line.
pub fn parse_box(text: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if let [lo, hi] = parts.as_slice() {
        let lo: f64 = lo.parse().map_err(|_| format!("bad number `{lo}`"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad number `{hi}`"))?;
        if lo < hi {
            return Ok([lo, hi]);
        }
    }
    Err(format!("expected `lo,hi` with lo < hi, got `{text}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig = serde_json::from_str(
            r#"{"target": "euclidean2", "n_states": [3, 4], "lengths": [16, 64], "seed": 7,
                "output_box": "auto", "input_box": [[-1, 1]]}"#,
        )
        .unwrap();
        let flags = RunConfig {
            seed: Some(9),
            n_states: Some(OneOrMany::One(8)),
            ..RunConfig::default()
        };
        let merged = file.overridden_by(flags);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.single_n_states().unwrap(), 8);
        assert_eq!(merged.lengths().unwrap(), vec![16, 64]);
        assert_eq!(merged.target.as_deref(), Some("euclidean2"));
        assert_eq!(merged.output().unwrap(), Some(OutputBox::Auto));
        assert_eq!(merged.input_maps(2).unwrap().unwrap().len(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
        let c = RunConfig {
            lengths: Some(vec![]),
            ..RunConfig::default()
        };
        assert!(c.lengths().is_err());
        assert!(check_dimensions(1, 2).is_err());
        assert!(check_dimensions(4, 0).is_err());
        assert!(check_dimensions(17, 3).is_err());
        assert!(parse_box("3,1").is_err());
        assert_eq!(parse_box("-2, 3").unwrap(), [-2.0, 3.0]);
    }
}
