//! Target functions: builtins, parsed expressions and range normalization.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, SmurfError};
use crate::expr::{cas, parse_expression, sigmoid};
use crate::stochastic::AffineMap;
use crate::table::TableMeta;

/// A real function of `M` real arguments.
pub type Evaluator = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The un-normalized function together with the boxes that map it onto
/// `[0, 1]^M -> [0, 1]`.
#[derive(Clone)]
pub struct RawForm {
    pub eval: Evaluator,
    pub input_maps: Vec<AffineMap>,
    pub output_map: AffineMap,
}

/// How the output range is chosen in [`normalize_target`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputBox {
    Explicit(AffineMap),
    /// Min/max over a dense sample grid, padded by `AUTO_PADDING`.
    Auto,
}

pub const AUTO_PADDING: f64 = 1e-9;

/// A function to be synthesized, evaluated in normalized units on `[0, 1]^M`.
#[derive(Clone)]
pub struct TargetFunction {
    name: String,
    arity: usize,
    expression: Option<String>,
    eval: Evaluator,
    raw: Option<RawForm>,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("expression", &self.expression)
            .field("input_maps", &self.input_maps())
            .field("output_map", &self.output_map())
            .finish()
    }
}

impl TargetFunction {
    /// A target already expressed on `[0, 1]^arity`.
    pub fn new<F>(name: impl Into<String>, arity: usize, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if arity == 0 {
            return Err(SmurfError::Config("target arity must be at least 1".into()));
        }
        Ok(Self {
            name: name.into(),
            arity,
            expression: None,
            eval: Arc::new(f),
            raw: None,
        })
    }

    /// `T ≡ value`.
    pub fn constant(arity: usize, value: f64) -> Result<Self> {
        let mut t = Self::new(format!("constant({value})"), arity, move |_| value)?;
        t.expression = Some(format!("{value}"));
        Ok(t)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_expression(mut self, text: impl Into<String>) -> Self {
        self.expression = Some(text.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn expression(&self) -> Option<&str> {
        self.expression.as_deref()
    }

    pub fn raw(&self) -> Option<&RawForm> {
        self.raw.as_ref()
    }

    pub fn input_maps(&self) -> Vec<AffineMap> {
        match &self.raw {
            Some(raw) => raw.input_maps.clone(),
            None => vec![AffineMap::UNIT; self.arity],
        }
    }

    pub fn output_map(&self) -> AffineMap {
        self.raw.as_ref().map_or(AffineMap::UNIT, |r| r.output_map)
    }

    /// Normalized value at `point ∈ [0, 1]^M`; non-finite results are errors.
    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.arity {
            return Err(SmurfError::DimensionMismatch {
                expected: self.arity,
                got: point.len(),
            });
        }
        let v = (self.eval)(point);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SmurfError::TargetEvaluation {
                point: point.to_vec(),
                reason: format!("`{}` evaluated to {v}", self.name),
            })
        }
    }

    /// Normalized value without arity or finiteness checks.
    #[inline]
    pub fn eval_unchecked(&self, point: &[f64]) -> f64 {
        (self.eval)(point)
    }

    /// Value of the raw form at raw coordinates `x` (the normalized
    /// evaluator when there is no raw form).
    pub fn eval_raw(&self, x: &[f64]) -> f64 {
        match &self.raw {
            Some(raw) => (raw.eval)(x),
            None => (self.eval)(x),
        }
    }
}

/// Points per axis for the automatic output-box scan.
pub fn auto_grid_points(arity: usize) -> usize {
    match arity {
        0..=3 => 129,
        m => ((129f64.powi(3)).powf(1.0 / m as f64).floor() as usize).max(2),
    }
}

/// Uniform grid with `points` nodes per axis over `[0, 1]^arity`,
/// endpoints included; axis 0 varies fastest.
pub fn uniform_grid(arity: usize, points: usize) -> Vec<Vec<f64>> {
    let count = points.pow(arity as u32);
    let step = if points > 1 {
        1.0 / (points - 1) as f64
    } else {
        0.0
    };
    (0..count)
        .map(|mut k| {
            (0..arity)
                .map(|_| {
                    let i = k % points;
                    k /= points;
                    if points > 1 && i == points - 1 {
                        1.0
                    } else {
                        i as f64 * step
                    }
                })
                .collect()
        })
        .collect()
}

/// Range of `raw` over the box given by `input_maps`, sampled on a uniform
/// grid of `points` per axis.
pub fn sampled_range(
    raw: &(dyn Fn(&[f64]) -> f64 + Send + Sync),
    input_maps: &[AffineMap],
    points: usize,
) -> Result<(f64, f64)> {
    uniform_grid(input_maps.len(), points)
        .into_par_iter()
        .map(|p| {
            let x: Vec<f64> = p
                .iter()
                .zip(input_maps)
                .map(|(&u, m)| m.from_unit_unchecked(u))
                .collect();
            let v = raw(&x);
            if v.is_finite() {
                Ok((v, v))
            } else {
                Err(SmurfError::TargetEvaluation {
                    point: x,
                    reason: format!("raw value {v}"),
                })
            }
        })
        .try_reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| Ok((a.0.min(b.0), a.1.max(b.1))),
        )
}

/// Wraps `raw` (defined on the product of `input_maps` domains) as a target
/// on `[0, 1]^M` whose values are `output_map.forward(raw(...))`.
pub fn normalize_target(
    name: impl Into<String>,
    raw: Evaluator,
    input_maps: Vec<AffineMap>,
    output: OutputBox,
) -> Result<TargetFunction> {
    let name = name.into();
    let arity = input_maps.len();
    if arity == 0 {
        return Err(SmurfError::Config("target arity must be at least 1".into()));
    }
    let (lo, hi) = sampled_range(raw.as_ref(), &input_maps, auto_grid_points(arity))?;
    let output_map = match output {
        OutputBox::Explicit(map) => {
            let slack = 1e-12 * map.width();
            if lo < map.lo - slack || hi > map.hi + slack {
                return Err(SmurfError::Config(format!(
                    "`{name}` takes values in [{lo}, {hi}], outside the output box [{}, {}]",
                    map.lo, map.hi
                )));
            }
            map
        }
        OutputBox::Auto => {
            let (lo, hi) = (lo - AUTO_PADDING, hi + AUTO_PADDING);
            AffineMap::new(lo, hi)?
        }
    };
    let maps = input_maps.clone();
    let inner = Arc::clone(&raw);
    let eval: Evaluator = Arc::new(move |p: &[f64]| {
        let x: Vec<f64> = p
            .iter()
            .zip(&maps)
            .map(|(&u, m)| m.from_unit_unchecked(u))
            .collect();
        output_map.to_unit_unchecked(inner(&x))
    });
    Ok(TargetFunction {
        name,
        arity,
        expression: None,
        eval,
        raw: Some(RawForm {
            eval: raw,
            input_maps,
            output_map,
        }),
    })
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 9] = [
    "euclidean2",
    "euclidean2_scaled",
    "euclidean2_raw",
    "ht_kernel",
    "ht_kernel_raw",
    "softmax2_c1",
    "softmax3_c1",
    "tanh_act",
    "swish_act",
];

struct BuiltinSpec {
    arity: usize,
    expression: &'static str,
    raw: fn(&[f64]) -> f64,
    input_box: (f64, f64),
    /// `None` registers the function literally on `[0, 1]^M`.
    output: Option<OutputBox>,
}

fn euclid(x: &[f64]) -> f64 {
    x[0].hypot(x[1])
}

fn ht(x: &[f64]) -> f64 {
    x[0].sin() * cas(x[1])
}

fn softmax2(x: &[f64]) -> f64 {
    1.0 / (1.0 + (x[1] - x[0]).exp())
}

fn softmax3(x: &[f64]) -> f64 {
    1.0 / (1.0 + (x[1] - x[0]).exp() + (x[2] - x[0]).exp())
}

fn tanh1(x: &[f64]) -> f64 {
    x[0].tanh()
}

fn swish1(x: &[f64]) -> f64 {
    x[0] * sigmoid(x[0])
}

fn spec(name: &str) -> Result<BuiltinSpec> {
    let sqrt2 = std::f64::consts::SQRT_2;
    let unit = (0.0, 1.0);
    let s = match name {
        "euclidean2" | "euclidean2_scaled" => BuiltinSpec {
            arity: 2,
            expression: "sqrt(x1^2 + x2^2)",
            raw: euclid,
            input_box: unit,
            output: Some(OutputBox::Explicit(AffineMap { lo: 0.0, hi: sqrt2 })),
        },
        "euclidean2_raw" => BuiltinSpec {
            arity: 2,
            expression: "sqrt(x1^2 + x2^2)",
            raw: euclid,
            input_box: unit,
            output: None,
        },
        "ht_kernel" => BuiltinSpec {
            arity: 2,
            expression: "sin(x1) * cas(x2)",
            raw: ht,
            input_box: unit,
            output: Some(OutputBox::Explicit(AffineMap {
                lo: 0.0,
                hi: 1f64.sin() * sqrt2,
            })),
        },
        "ht_kernel_raw" => BuiltinSpec {
            arity: 2,
            expression: "sin(x1) * cas(x2)",
            raw: ht,
            input_box: unit,
            output: None,
        },
        "softmax2_c1" => BuiltinSpec {
            arity: 2,
            expression: "exp(x1) / (exp(x1) + exp(x2))",
            raw: softmax2,
            input_box: unit,
            output: None,
        },
        "softmax3_c1" => BuiltinSpec {
            arity: 3,
            expression: "exp(x1) / (exp(x1) + exp(x2) + exp(x3))",
            raw: softmax3,
            input_box: unit,
            output: None,
        },
        "tanh_act" => BuiltinSpec {
            arity: 1,
            expression: "tanh(x1)",
            raw: tanh1,
            input_box: (-4.0, 4.0),
            output: Some(OutputBox::Auto),
        },
        "swish_act" => BuiltinSpec {
            arity: 1,
            expression: "x1 * sigmoid(x1)",
            raw: swish1,
            input_box: (-4.0, 6.0),
            output: Some(OutputBox::Auto),
        },
        _ => return Err(SmurfError::UnknownTarget(name.to_owned())),
    };
    Ok(s)
}

/// A registered target with its default boxes.
pub fn builtin(name: &str) -> Result<TargetFunction> {
    builtin_with_boxes(name, None, None)
}

/// A registered target with its input and/or output boxes replaced.
/// Overriding either box on a literal builtin gives it a raw form.
pub fn builtin_with_boxes(
    name: &str,
    input_maps: Option<Vec<AffineMap>>,
    output: Option<OutputBox>,
) -> Result<TargetFunction> {
    let s = spec(name)?;
    let raw = s.raw;
    let target = match (input_maps, output.or(s.output)) {
        (None, None) => TargetFunction::new(name, s.arity, raw)?,
        (maps, out) => {
            let maps = match maps {
                Some(m) => m,
                None => vec![AffineMap::new(s.input_box.0, s.input_box.1)?; s.arity],
            };
            if maps.len() != s.arity {
                return Err(SmurfError::DimensionMismatch {
                    expected: s.arity,
                    got: maps.len(),
                });
            }
            let out = out.unwrap_or(OutputBox::Explicit(AffineMap::UNIT));
            normalize_target(name, Arc::new(raw), maps, out)?
        }
    };
    Ok(target.with_expression(s.expression))
}

/// A target from expression text. `arity` defaults to the highest variable
/// index used; input boxes default to `[0, 1]` and the function is taken
/// literally unless an output box is given.
pub fn from_expression(
    text: &str,
    arity: Option<usize>,
    input_maps: Option<Vec<AffineMap>>,
    output: Option<OutputBox>,
) -> Result<TargetFunction> {
    let expr = parse_expression(text)?;
    let used = expr.arity();
    let arity = match (arity, &input_maps) {
        (Some(m), _) => m,
        (None, Some(maps)) => maps.len(),
        (None, None) => used.max(1),
    };
    if arity == 0 || used > arity {
        return Err(SmurfError::Config(format!(
            "expression uses x{used} but the arity is {arity}"
        )));
    }
    let name = "expr";
    let f = move |x: &[f64]| expr.eval(x);
    let target = if input_maps.is_none() && output.is_none() {
        TargetFunction::new(name, arity, f)?
    } else {
        let maps = input_maps.unwrap_or_else(|| vec![AffineMap::UNIT; arity]);
        if maps.len() != arity {
            return Err(SmurfError::DimensionMismatch {
                expected: arity,
                got: maps.len(),
            });
        }
        normalize_target(
            name,
            Arc::new(f),
            maps,
            output.unwrap_or(OutputBox::Explicit(AffineMap::UNIT)),
        )?
    };
    Ok(target.with_expression(text.trim()))
}

/// The target a table was synthesized for, rebuilt from its metadata
/// (builtin name or expression text plus the recorded boxes).
pub fn target_from_meta(meta: &TableMeta, arity: usize) -> Result<TargetFunction> {
    let literal = if BUILTIN_NAMES.contains(&meta.target_name.as_str()) {
        builtin(&meta.target_name)?
    } else if let Some(text) = &meta.expression {
        from_expression(text, Some(arity), None, None)?.with_name(meta.target_name.clone())
    } else {
        return Err(SmurfError::UnknownTarget(format!(
            "{} (no expression recorded; pass the target explicitly)",
            meta.target_name
        )));
    };
    if literal.arity() != arity {
        return Err(SmurfError::DimensionMismatch {
            expected: arity,
            got: literal.arity(),
        });
    }
    if literal.input_maps() == meta.input_maps && literal.output_map() == meta.output_map {
        return Ok(literal);
    }
    let maps = Some(meta.input_maps.clone());
    let out = Some(OutputBox::Explicit(meta.output_map));
    let rebuilt = if BUILTIN_NAMES.contains(&meta.target_name.as_str()) {
        builtin_with_boxes(&meta.target_name, maps, out)?
    } else {
        let text = meta.expression.as_deref().unwrap_or_default();
        from_expression(text, Some(arity), maps, out)?.with_name(meta.target_name.clone())
    };
    Ok(rebuilt)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn max_diff(a: &TargetFunction, b: &TargetFunction, points: usize) -> f64 {
        uniform_grid(a.arity(), points)
            .iter()
            .map(|p| (a.eval(p).unwrap() - b.eval(p).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn catalog_values() {
        let e = builtin("euclidean2_raw").unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((e.eval(&[1.0, 1.0]).unwrap() - SQRT2).abs() < 1e-15);
        let n = builtin("euclidean2").unwrap();
        assert!((n.eval(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((n.eval_raw(&[1.0, 1.0]) - SQRT2).abs() < 1e-15);
        let s = builtin("softmax3_c1").unwrap();
        for a in [0.0, 0.3, 1.0] {
            assert!((s.eval(&[a, a, a]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        }
        let s2 = builtin("softmax2_c1").unwrap();
        assert!((s2.eval(&[0.0, 1.0]).unwrap() - 1.0 / (1.0 + 1f64.exp())).abs() < 1e-15);
        assert!(matches!(builtin("nope"), Err(SmurfError::UnknownTarget(_))));
    }

    #[test]
    fn builtins_finite_and_normalized() {
        for name in BUILTIN_NAMES {
            let t = builtin(name).unwrap();
            for p in uniform_grid(t.arity(), 17) {
                let v = t.eval(&p).unwrap();
                if t.raw().is_some() {
                    assert!((0.0..=1.0).contains(&v), "{name} {p:?} {v}");
                }
            }
        }
    }

    #[test]
    fn expressions_match_builtins() {
        let ht = builtin("ht_kernel_raw").unwrap();
        let parsed = from_expression("sin(x1)*cas(x2)", None, None, None).unwrap();
        assert!(max_diff(&ht, &parsed, 33) < 1e-12);
        let eu = builtin("euclidean2_raw").unwrap();
        let parsed = from_expression("sqrt(x1^2 + x2^2)", None, None, None).unwrap();
        assert!(max_diff(&eu, &parsed, 33) < 1e-12);
        let id = from_expression("x1", None, None, None).unwrap();
        assert_eq!(id.eval(&[0.37]).unwrap(), 0.37);
    }

    #[test]
    fn auto_box_for_tanh() {
        let t = builtin("tanh_act").unwrap();
        let out = t.output_map();
        assert!((out.hi - 4f64.tanh()).abs() < 2e-9);
        assert!((out.lo + 4f64.tanh()).abs() < 2e-9);
        assert!((out.hi - 0.99933).abs() < 1e-5);
        assert_eq!(t.input_maps()[0], AffineMap { lo: -4.0, hi: 4.0 });
        // auto box is padded: values stay strictly inside (0, 1)
        let v = t.eval(&[1.0]).unwrap();
        assert!(v < 1.0 && v > 1.0 - 1e-8);
    }

    #[test]
    fn explicit_boxes() {
        let id = Arc::new(|x: &[f64]| x[0]);
        let t = normalize_target(
            "id",
            id.clone(),
            vec![AffineMap::new(-2.0, 3.0).unwrap()],
            OutputBox::Explicit(AffineMap::new(-2.0, 3.0).unwrap()),
        )
        .unwrap();
        for p in [0.0, 0.25, 0.5, 1.0] {
            assert!((t.eval(&[p]).unwrap() - p).abs() < 1e-15);
        }
        let t = normalize_target(
            "id",
            id.clone(),
            vec![AffineMap::new(-2.0, 3.0).unwrap()],
            OutputBox::Explicit(AffineMap::new(-2.0, 4.0).unwrap()),
        )
        .unwrap();
        assert_eq!(t.eval(&[0.0]).unwrap(), 0.0);
        assert!((t.eval(&[1.0]).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        // box narrower than the range
        assert!(normalize_target(
            "id",
            id,
            vec![AffineMap::new(-2.0, 3.0).unwrap()],
            OutputBox::Explicit(AffineMap::UNIT),
        )
        .is_err());
    }

    #[test]
    fn extrema_touch_endpoints_only_when_box_is_tight() {
        let sq = Arc::new(|x: &[f64]| x[0] * x[0]);
        let dom = vec![AffineMap::new(0.0, 2.0).unwrap()];
        let tight = normalize_target(
            "sq",
            sq.clone(),
            dom.clone(),
            OutputBox::Explicit(AffineMap::new(0.0, 4.0).unwrap()),
        )
        .unwrap();
        assert_eq!(tight.eval(&[0.0]).unwrap(), 0.0);
        assert_eq!(tight.eval(&[1.0]).unwrap(), 1.0);
        let loose = normalize_target(
            "sq",
            sq,
            dom,
            OutputBox::Explicit(AffineMap::new(-1.0, 5.0).unwrap()),
        )
        .unwrap();
        assert!(loose.eval(&[0.0]).unwrap() > 0.0);
        assert!(loose.eval(&[1.0]).unwrap() < 1.0);
    }

    #[test]
    fn non_finite_values_are_errors() {
        let t = from_expression("log(x1)", None, None, None).unwrap();
        assert!(matches!(
            t.eval(&[0.0]),
            Err(SmurfError::TargetEvaluation { .. })
        ));
        assert!(from_expression("1 / x1", None, None, Some(OutputBox::Auto)).is_err());
        assert!(from_expression("x3", Some(2), None, None).is_err());
    }

    #[test]
    fn targets_rebuild_from_metadata() {
        let swish = builtin("swish_act").unwrap();
        let mut meta = TableMeta::unnamed(1);
        meta.target_name = "swish_act".into();
        meta.input_maps = swish.input_maps();
        meta.output_map = swish.output_map();
        let back = target_from_meta(&meta, 1).unwrap();
        assert_eq!(back.eval(&[0.3]).unwrap(), swish.eval(&[0.3]).unwrap());

        meta.input_maps = vec![AffineMap::new(-2.0, 2.0).unwrap()];
        meta.output_map = AffineMap::new(-1.0, 2.0).unwrap();
        let narrowed = target_from_meta(&meta, 1).unwrap();
        let x = -2.0 + 4.0 * 0.3;
        assert!((narrowed.eval(&[0.3]).unwrap() - (swish1(&[x]) + 1.0) / 3.0).abs() < 1e-15);

        let mut meta = TableMeta::unnamed(2);
        meta.target_name = "expr".into();
        meta.expression = Some("x1 * x2".into());
        assert_eq!(
            target_from_meta(&meta, 2)
                .unwrap()
                .eval(&[0.5, 0.5])
                .unwrap(),
            0.25
        );
        meta.expression = None;
        assert!(target_from_meta(&meta, 2).is_err());
    }

    #[test]
    fn grid_layout() {
        let g = uniform_grid(2, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[1], vec![0.5, 0.0]);
        assert_eq!(g[8], vec![1.0, 1.0]);
        assert_eq!(uniform_grid(1, 1), vec![vec![0.0]]);
    }
}
