//! Random-number sources feeding the θ-gates.
//!
//! Every source is counter based: draw `n` is a pure function of the source
//! key and `n`, so a gate can be sampled at an arbitrary clock cycle without
//! stepping through the cycles it skipped. The underlying mixer is SplitMix64
//! (Steele, Lea and Flood), whose `n`-th output for seed `s` is
//! `mix(s + (n + 1) * 0x9E3779B97F4A7C15)`; its period is 2^64.

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_GAMMA: u64 = 0xD1B5_4A32_D192_ED03;
const UNIT_53: f64 = 1.0 / (1u64 << 53) as f64;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a sub-seed for stream `index` of `master`.
///
/// Used for per-gate streams and for per-task seeds in parallel sweeps.
#[inline]
pub fn split_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index.wrapping_add(1).wrapping_mul(STREAM_GAMMA)))
}

#[inline]
fn splitmix_at(key: u64, n: u64) -> u64 {
    mix64(key.wrapping_add(n.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

#[inline]
fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * UNIT_53
}

/// How a family of gates obtains its random numbers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RngKind {
    /// Each gate owns a generator keyed by a split of the master seed.
    #[default]
    #[serde(alias = "independent")]
    IndependentStream,
    /// One master sequence; gate `k` sees it delayed by `k` draws.
    #[serde(alias = "lagged")]
    SharedLagged,
    /// Base-2 radical inverse (first Sobol dimension) with a per-gate
    /// digital shift derived from the master seed.
    #[serde(alias = "lowdisc")]
    LowDiscrepancy,
}

impl std::str::FromStr for RngKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" | "independent-stream" => Ok(Self::IndependentStream),
            "lagged" | "shared-lagged" => Ok(Self::SharedLagged),
            "lowdisc" | "low-discrepancy" => Ok(Self::LowDiscrepancy),
            other => Err(format!(
                "unknown rng kind `{other}` (expected independent, lagged or lowdisc)"
            )),
        }
    }
}

impl std::fmt::Display for RngKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::IndependentStream => "independent",
            Self::SharedLagged => "lagged",
            Self::LowDiscrepancy => "lowdisc",
        })
    }
}

/// A uniform source on `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngSource {
    kind: RngKind,
    master_seed: u64,
    lag: u64,
    key: u64,
    counter: u64,
}

impl RngSource {
    /// An independent-stream source seeded directly with `seed`.
    pub fn new(seed: u64) -> Self {
        Self::stream(RngKind::IndependentStream, seed, 0)
    }

    /// Source for gate `index` of a family sharing `master_seed`.
    ///
    /// For [`RngKind::SharedLagged`] the gate index is the lag.
    pub fn stream(kind: RngKind, master_seed: u64, index: u64) -> Self {
        match kind {
            RngKind::IndependentStream => Self {
                kind,
                master_seed,
                lag: 0,
                key: split_seed(master_seed, index),
                counter: 0,
            },
            RngKind::SharedLagged => Self::lagged(master_seed, index),
            RngKind::LowDiscrepancy => Self {
                kind,
                master_seed,
                lag: 0,
                key: split_seed(master_seed, index) >> 11,
                counter: 0,
            },
        }
    }

    /// The shared master sequence delayed by `lag` draws.
    pub fn lagged(master_seed: u64, lag: u64) -> Self {
        Self {
            kind: RngKind::SharedLagged,
            master_seed,
            lag,
            key: master_seed,
            counter: 0,
        }
    }

    pub fn kind(&self) -> RngKind {
        self.kind
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn lag(&self) -> u64 {
        self.lag
    }

    /// Number of draws taken through [`RngSource::next_draw`].
    pub fn position(&self) -> u64 {
        self.counter
    }

    /// The draw this source emits at clock index `n`, without advancing.
    #[inline]
    pub fn draw_at(&self, n: u64) -> f64 {
        match self.kind {
            RngKind::IndependentStream => to_unit(splitmix_at(self.key, n)),
            // Indices before the start wrap to the tail of the period, which
            // is still part of the same master sequence.
            RngKind::SharedLagged => to_unit(splitmix_at(self.key, n.wrapping_sub(self.lag))),
            RngKind::LowDiscrepancy => {
                let radical = n.reverse_bits() >> 11;
                (radical ^ self.key) as f64 * UNIT_53
            }
        }
    }

    /// Next draw in `[0, 1)`.
    #[inline]
    pub fn next_draw(&mut self) -> f64 {
        let u = self.draw_at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        u
    }

    /// Raw 64-bit output at the current position (independent and lagged kinds).
    pub fn next_u64(&mut self) -> u64 {
        let n = self.counter;
        self.counter = self.counter.wrapping_add(1);
        match self.kind {
            RngKind::SharedLagged => splitmix_at(self.key, n.wrapping_sub(self.lag)),
            _ => splitmix_at(self.key, n),
        }
    }
}
