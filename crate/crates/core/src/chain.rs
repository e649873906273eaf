//! The saturating N-state chain FSM and its stationary distribution.
//!
//! With input probability `p` the chain moves right with probability `p` and
//! left with `1 - p`, saturating at both ends. Detailed balance gives
//! `P_{i+1} = P_i * p / (1 - p)`, so `P_i ∝ p^i (1 - p)^(N-1-i)`. The
//! polynomial form is used throughout so that `p` near 1 never overflows the
//! transit ratio.

use crate::error::{Result, SmurfError};
use crate::stochastic::Probability;

/// A chain of `n_states` states with a current position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainFsm {
    n_states: usize,
    state: usize,
}

impl ChainFsm {
    pub fn new(n_states: usize) -> Result<Self> {
        Self::with_state(n_states, 0)
    }

    pub fn with_state(n_states: usize, state: usize) -> Result<Self> {
        if n_states < 2 {
            return Err(SmurfError::InvalidStateCount(n_states));
        }
        if state >= n_states {
            return Err(SmurfError::DigitOutOfRange {
                digit: state,
                position: 0,
                radix: n_states,
            });
        }
        Ok(Self { n_states, state })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn reset(&mut self, state: usize) {
        self.state = state.min(self.n_states - 1);
    }

    /// One clock: right on 1, left on 0, saturating.
    #[inline]
    pub fn step(&mut self, bit: bool) -> usize {
        if bit {
            if self.state + 1 < self.n_states {
                self.state += 1;
            }
        } else if self.state > 0 {
            self.state -= 1;
        }
        self.state
    }

    /// Functional form of [`ChainFsm::step`].
    pub fn stepped(mut self, bit: bool) -> Self {
        self.step(bit);
        self
    }
}

/// Stationary probabilities of one chain, indexed by state.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyVector(Vec<f64>);

impl SteadyVector {
    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl std::ops::Index<usize> for SteadyVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Writes the stationary distribution for input probability `p` into `out`
/// (length `N`). `p` may be 0 or 1; `0^0` is taken as 1, which yields the
/// point masses on the end states.
#[inline]
pub fn steady_probs_into(p: f64, out: &mut [f64]) {
    let n = out.len();
    let q = 1.0 - p;
    let mut total = 0.0;
    for (i, slot) in out.iter_mut().enumerate() {
        let v = p.powi(i as i32) * q.powi((n - 1 - i) as i32);
        *slot = v;
        total += v;
    }
    for slot in out.iter_mut() {
        *slot /= total;
    }
}

/// Closed-form stationary distribution of an `n_states` chain.
pub fn chain_steady_probs(n_states: usize, px: Probability) -> Result<SteadyVector> {
    if n_states < 2 {
        return Err(SmurfError::InvalidStateCount(n_states));
    }
    let mut out = vec![0.0; n_states];
    steady_probs_into(px.value(), &mut out);
    Ok(SteadyVector(out))
}

const ORACLE_TOL: f64 = 1e-13;
const ORACLE_MAX_ITER: usize = 1_000_000;

/// Stationary distribution by power iteration on the explicit transition
/// matrix. Independent of the closed form; used to check it.
pub fn steady_probs_oracle(n_states: usize, px: Probability) -> Result<SteadyVector> {
    if n_states < 2 {
        return Err(SmurfError::InvalidStateCount(n_states));
    }
    let p = px.value();
    if p <= 0.0 || p >= 1.0 {
        return Err(SmurfError::Config(format!(
            "power iteration needs 0 < Px < 1, got {p}"
        )));
    }
    let n = n_states;
    // Row-stochastic transition matrix, dense on purpose.
    let mut t = vec![vec![0.0; n]; n];
    for (i, row) in t.iter_mut().enumerate() {
        row[(i + 1).min(n - 1)] += p;
        row[i.saturating_sub(1)] += 1.0 - p;
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..ORACLE_MAX_ITER {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in t.iter().enumerate() {
            for (j, &tij) in row.iter().enumerate() {
                next[j] += pi[i] * tij;
            }
        }
        let sum: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= sum);
        let delta = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if delta < ORACLE_TOL {
            return Ok(SteadyVector(pi));
        }
    }
    Err(SmurfError::NoConvergence(ORACLE_MAX_ITER))
}

/// Output probability of the classic chain whose upper `N/2` states emit 1.
pub fn tanh_fsm_output(n_states: usize, px: Probability) -> Result<Probability> {
    if n_states < 2 {
        return Err(SmurfError::InvalidStateCount(n_states));
    }
    if !n_states.is_multiple_of(2) {
        return Err(SmurfError::OddStateCount(n_states));
    }
    let steady = chain_steady_probs(n_states, px)?;
    let half = n_states / 2;
    let upper: f64 = steady.0[half..].iter().sum();
    Probability::new(upper.clamp(0.0, 1.0))
}
