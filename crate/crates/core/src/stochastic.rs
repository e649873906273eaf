//! Stochastic numbers: probabilities, bitstreams, θ-gates and the elementary
//! AND/MUX arithmetic, plus affine maps between function ranges and `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SmurfError};
use crate::rng::RngSource;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Self = Self(0.0);
    pub const ONE: Self = Self(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(SmurfError::InvalidProbability(value))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

impl TryFrom<f64> for Probability {
    type Error = SmurfError;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

/// A finite stochastic bitstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    bits: Vec<bool>,
}

impl Bitstream {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(SmurfError::EmptyBitstream);
        }
        Ok(Self { bits })
    }

    /// Builds a stream from `0`/`1` integers; anything nonzero is a one.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        Self::new(bits.iter().map(|&b| b != 0).collect())
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Fraction of ones, i.e. what a binary counter divided by `L` reports.
    pub fn mean(&self) -> Probability {
        Probability(self.count_ones() as f64 / self.len() as f64)
    }
}

/// Comparator against a uniform draw: emits 1 iff `draw < threshold`.
#[derive(Debug, Clone)]
pub struct ThetaGate {
    threshold: Probability,
    source: RngSource,
}

impl ThetaGate {
    pub fn new(threshold: Probability, source: RngSource) -> Self {
        Self { threshold, source }
    }

    pub fn threshold(&self) -> Probability {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: Probability) {
        self.threshold = threshold;
    }

    pub fn source(&self) -> &RngSource {
        &self.source
    }

    /// Consumes exactly one draw.
    #[inline]
    pub fn sample(&mut self) -> bool {
        compare(self.source.next_draw(), self.threshold.0)
    }

    /// Sample at clock cycle `cycle` without advancing the source.
    #[inline]
    pub fn sample_at(&self, cycle: u64) -> bool {
        compare(self.source.draw_at(cycle), self.threshold.0)
    }
}

#[inline]
pub(crate) fn compare(draw: f64, threshold: f64) -> bool {
    draw < threshold
}

/// `length` θ-gate samples at `threshold`: the SNG of a single input.
pub fn generate_bitstream(
    threshold: Probability,
    source: RngSource,
    length: usize,
) -> Result<Bitstream> {
    if length == 0 {
        return Err(SmurfError::EmptyBitstream);
    }
    let mut gate = ThetaGate::new(threshold, source);
    Bitstream::new((0..length).map(|_| gate.sample()).collect())
}

fn check_lengths(a: &Bitstream, b: &Bitstream) -> Result<()> {
    if a.len() != b.len() {
        return Err(SmurfError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Bitwise AND. For independent inputs the mean estimates `P_x * P_y`.
pub fn sc_multiply(x: &Bitstream, y: &Bitstream) -> Result<Bitstream> {
    check_lengths(x, y)?;
    Ok(Bitstream {
        bits: x.bits.iter().zip(&y.bits).map(|(&a, &b)| a & b).collect(),
    })
}

/// MUX selecting `x` where `s` is 1 and `y` otherwise. With `P_s = 1/2` the
/// mean estimates `(P_x + P_y) / 2`.
pub fn sc_scaled_add(x: &Bitstream, y: &Bitstream, s: &Bitstream) -> Result<Bitstream> {
    check_lengths(x, y)?;
    check_lengths(x, s)?;
    Ok(Bitstream {
        bits: x
            .bits
            .iter()
            .zip(&y.bits)
            .zip(&s.bits)
            .map(|((&a, &b), &sel)| if sel { a } else { b })
            .collect(),
    })
}

/// Bijective affine map between `[lo, hi]` and `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub lo: f64,
    pub hi: f64,
}

impl AffineMap {
    pub const UNIT: Self = Self { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(SmurfError::InvalidMap { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// `(x - lo) / (hi - lo)`; values outside the domain are rejected.
    pub fn to_unit(&self, x: f64) -> Result<Probability> {
        if !(self.lo..=self.hi).contains(&x) {
            return Err(SmurfError::OutOfDomain {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(Probability(((x - self.lo) / self.width()).clamp(0.0, 1.0)))
    }

    /// Forward map without the domain check.
    #[inline]
    pub fn to_unit_unchecked(&self, x: f64) -> f64 {
        (x - self.lo) / self.width()
    }

    /// `lo + p (hi - lo)`.
    #[inline]
    pub fn from_unit(&self, p: Probability) -> f64 {
        self.from_unit_unchecked(p.0)
    }

    #[inline]
    pub fn from_unit_unchecked(&self, p: f64) -> f64 {
        if p == 1.0 {
            self.hi
        } else {
            self.lo + p * self.width()
        }
    }

    pub fn is_identity(&self) -> bool {
        self.lo == 0.0 && self.hi == 1.0
    }
}

impl Default for AffineMap {
    fn default() -> Self {
        Self::UNIT
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngKind;
    use proptest::prelude::*;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn binomial_bound(p: f64, n: usize, k: f64) -> f64 {
        k * (p * (1.0 - p) / n as f64).sqrt()
    }

    #[test]
    fn probability_range() {
        assert!(Probability::new(-0.01).is_err());
        assert!(Probability::new(1.01).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::new(1.0).unwrap(), Probability::ONE);
    }

    #[test]
    fn sng_worked_example() {
        // draw 0.65 against threshold 0.7 emits a one
        assert!(compare(0.65, 0.7));
        assert!(!compare(0.75, 0.7));
    }

    #[test]
    fn degenerate_thresholds() {
        let mut zero = ThetaGate::new(Probability::ZERO, RngSource::new(1));
        let mut one = ThetaGate::new(Probability::ONE, RngSource::new(1));
        for _ in 0..10_000 {
            assert!(!zero.sample());
            assert!(one.sample());
        }
        assert!(!compare(0.0, 0.0));
        assert!(compare(1.0 - f64::EPSILON, 1.0));
    }

    #[test]
    fn sample_consumes_one_draw() {
        let mut g = ThetaGate::new(p(0.3), RngSource::new(5));
        g.sample();
        g.sample();
        assert_eq!(g.source().position(), 2);
    }

    #[test]
    fn zero_length_rejected() {
        assert!(matches!(
            generate_bitstream(p(0.5), RngSource::new(1), 0),
            Err(SmurfError::EmptyBitstream)
        ));
    }

    #[test]
    fn short_stream_mean_within_bound() {
        let bs = generate_bitstream(p(0.5), RngSource::new(11), 64).unwrap();
        assert!((bs.mean().value() - 0.5).abs() <= 0.25);
    }

    #[test]
    fn all_ones_at_threshold_one() {
        let bs = generate_bitstream(Probability::ONE, RngSource::new(3), 333).unwrap();
        assert_eq!(bs.count_ones(), 333);
    }

    #[test]
    fn fixed_seed_pattern_reproducible() {
        let a = generate_bitstream(p(0.7), RngSource::new(77), 16).unwrap();
        let b = generate_bitstream(p(0.7), RngSource::new(77), 16).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn counter_mean() {
        assert_eq!(
            Bitstream::from_bits(&[1, 1, 1, 1]).unwrap().mean().value(),
            1.0
        );
        assert_eq!(
            Bitstream::from_bits(&[1, 0, 1, 0]).unwrap().mean().value(),
            0.5
        );
    }

    #[test]
    fn calibration_over_thresholds() {
        let n = 1_000_000;
        for (k, t) in (1..=9).map(|i| i as f64 / 10.0).enumerate() {
            let bs = generate_bitstream(p(t), RngSource::new(1000 + k as u64), n).unwrap();
            let err = (bs.mean().value() - t).abs();
            assert!(err <= binomial_bound(t, n, 4.0), "threshold {t}: err {err}");
        }
        let bs = generate_bitstream(p(0.25), RngSource::new(9), n).unwrap();
        assert!((bs.mean().value() - 0.25).abs() <= 0.002);
    }

    #[test]
    fn and_gate_identities() {
        let y = generate_bitstream(p(0.4), RngSource::new(2), 100).unwrap();
        let ones = Bitstream::new(vec![true; 100]).unwrap();
        let zeros = Bitstream::new(vec![false; 100]).unwrap();
        assert_eq!(sc_multiply(&ones, &y).unwrap(), y);
        assert_eq!(sc_multiply(&zeros, &y).unwrap(), zeros);
        let short = Bitstream::new(vec![true; 99]).unwrap();
        assert!(matches!(
            sc_multiply(&short, &y),
            Err(SmurfError::LengthMismatch(99, 100))
        ));
    }

    #[test]
    fn and_gate_product_of_halves() {
        let n = 1_000_000;
        let x = generate_bitstream(
            p(0.5),
            RngSource::stream(RngKind::IndependentStream, 1, 0),
            n,
        )
        .unwrap();
        let y = generate_bitstream(
            p(0.5),
            RngSource::stream(RngKind::IndependentStream, 1, 1),
            n,
        )
        .unwrap();
        let z = sc_multiply(&x, &y).unwrap();
        assert!((z.mean().value() - 0.25).abs() <= 0.002);
    }

    #[test]
    fn and_gate_random_pairs() {
        let n = 100_000;
        let mut pick = RngSource::new(123);
        for k in 0..200u64 {
            let (px, py) = (pick.next_draw(), pick.next_draw());
            let x = generate_bitstream(
                p(px),
                RngSource::stream(RngKind::IndependentStream, k, 0),
                n,
            )
            .unwrap();
            let y = generate_bitstream(
                p(py),
                RngSource::stream(RngKind::IndependentStream, k, 1),
                n,
            )
            .unwrap();
            let m = sc_multiply(&x, &y).unwrap().mean().value();
            let target = px * py;
            assert!(
                (m - target).abs() <= binomial_bound(target, n, 5.0) + 1e-12,
                "pair {k}: {m} vs {target}"
            );
        }
    }

    #[test]
    fn mux_identities() {
        let x = generate_bitstream(p(0.3), RngSource::new(4), 500).unwrap();
        let y = generate_bitstream(p(0.8), RngSource::new(5), 500).unwrap();
        let s = generate_bitstream(p(0.5), RngSource::new(6), 500).unwrap();
        let same = sc_scaled_add(&x, &x, &s).unwrap();
        assert_eq!(same.mean(), x.mean());
        let all = Bitstream::new(vec![true; 500]).unwrap();
        assert_eq!(sc_scaled_add(&x, &y, &all).unwrap(), x);
    }

    #[test]
    fn mux_half_sum() {
        let n = 1_000_000;
        let x = Bitstream::new(vec![true; n]).unwrap();
        let y = Bitstream::new(vec![false; n]).unwrap();
        let s = generate_bitstream(p(0.5), RngSource::new(8), n).unwrap();
        let z = sc_scaled_add(&x, &y, &s).unwrap();
        assert!((z.mean().value() - 0.5).abs() <= 0.002);
    }

    #[test]
    fn figure_three_mapping() {
        let input = AffineMap::new(-2.0, 3.0).unwrap();
        let output = AffineMap::new(-2.0, 4.0).unwrap();
        assert_eq!(input.to_unit(-2.0).unwrap().value(), 0.0);
        assert_eq!(input.to_unit(3.0).unwrap().value(), 1.0);
        assert_eq!(output.from_unit(p(0.5)), 1.0);
        assert!(matches!(
            input.to_unit(3.5),
            Err(SmurfError::OutOfDomain { .. })
        ));
        assert!(AffineMap::new(1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn affine_round_trip(lo in -10.0f64..10.0, width in 1e-3f64..10.0, t in 0.0f64..=1.0) {
            let m = AffineMap::new(lo, lo + width).unwrap();
            let x = lo + t * width;
            let x = x.min(m.hi);
            let back = m.from_unit(m.to_unit(x).unwrap());
            prop_assert!((back - x).abs() <= 1e-12);
        }
    }
}
