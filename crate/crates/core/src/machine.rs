//! The multivariate generator: `M` chains whose concatenated states form a
//! universal-radix codeword selecting one of `N^M` θ-gates.
//!
//! Each chain is independent, so the joint stationary distribution is the
//! outer product of the per-chain vectors, and the infinite-length output is
//! `P_y = Σ_t P_s(t) w_t`.

use crate::chain::{steady_probs_into, ChainFsm};
use crate::error::{Result, SmurfError};
use crate::rng::{RngKind, RngSource};
use crate::stochastic::{compare, Probability, ThetaGate};
use crate::table::WeightTable;

/// Flat index `Σ_j digits[j] * N^j` (digit 1, i.e. `digits[0]`, least significant).
pub fn codeword_index(digits: &[usize], n_states: usize) -> Result<usize> {
    let mut index = 0usize;
    let mut scale = 1usize;
    for (position, &digit) in digits.iter().enumerate() {
        if digit >= n_states {
            return Err(SmurfError::DigitOutOfRange {
                digit,
                position,
                radix: n_states,
            });
        }
        index += digit * scale;
        scale *= n_states;
    }
    Ok(index)
}

/// Mixed-radix variant: chain `j` has `radices[j]` states.
pub fn codeword_index_mixed(digits: &[usize], radices: &[usize]) -> Result<usize> {
    if digits.len() != radices.len() {
        return Err(SmurfError::DimensionMismatch {
            expected: radices.len(),
            got: digits.len(),
        });
    }
    let mut index = 0usize;
    let mut scale = 1usize;
    for (position, (&digit, &radix)) in digits.iter().zip(radices).enumerate() {
        if digit >= radix {
            return Err(SmurfError::DigitOutOfRange {
                digit,
                position,
                radix,
            });
        }
        index += digit * scale;
        scale *= radix;
    }
    Ok(index)
}

/// Inverse of [`codeword_index`].
pub fn codeword_digits(mut index: usize, n_states: usize, arity: usize) -> Vec<usize> {
    (0..arity)
        .map(|_| {
            let d = index % n_states;
            index /= n_states;
            d
        })
        .collect()
}

/// Outer product of per-chain vectors laid out in codeword order.
///
/// `factors[0]` varies fastest.
pub fn tensor_product_into(factors: &[&[f64]], out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    let mut scratch = Vec::with_capacity(factors.iter().map(|f| f.len()).product());
    for factor in factors.iter().rev() {
        scratch.clear();
        for &prefix in out.iter() {
            scratch.extend(factor.iter().map(|&v| prefix * v));
        }
        std::mem::swap(out, &mut scratch);
    }
}

fn probability_values(pxs: &[Probability]) -> Vec<f64> {
    pxs.iter().map(|p| p.value()).collect()
}

/// Joint stationary distribution of `pxs.len()` chains of `n_states` states each.
pub fn joint_steady_probs(n_states: usize, pxs: &[Probability]) -> Result<Vec<f64>> {
    let radices = vec![n_states; pxs.len()];
    joint_steady_probs_mixed(&radices, pxs)
}

/// Joint stationary distribution with a per-chain state count.
pub fn joint_steady_probs_mixed(radices: &[usize], pxs: &[Probability]) -> Result<Vec<f64>> {
    if radices.len() != pxs.len() {
        return Err(SmurfError::DimensionMismatch {
            expected: radices.len(),
            got: pxs.len(),
        });
    }
    if let Some(&n) = radices.iter().find(|&&n| n < 2) {
        return Err(SmurfError::InvalidStateCount(n));
    }
    let per_chain: Vec<Vec<f64>> = radices
        .iter()
        .zip(probability_values(pxs))
        .map(|(&n, p)| {
            let mut v = vec![0.0; n];
            steady_probs_into(p, &mut v);
            v
        })
        .collect();
    let refs: Vec<&[f64]> = per_chain.iter().map(Vec::as_slice).collect();
    let mut out = Vec::new();
    tensor_product_into(&refs, &mut out);
    Ok(out)
}

/// Analytic (infinite bitstream) output probability of a table.
pub fn smurf_expected_output(table: &WeightTable, pxs: &[Probability]) -> Result<Probability> {
    if pxs.len() != table.arity() {
        return Err(SmurfError::DimensionMismatch {
            expected: table.arity(),
            got: pxs.len(),
        });
    }
    let joint = joint_steady_probs(table.n_states(), pxs)?;
    let y: f64 = joint.iter().zip(table.weights()).map(|(p, w)| p * w).sum();
    Probability::new(y.clamp(0.0, 1.0))
}

/// Runtime knobs of a machine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachineConfig {
    pub rng: RngKind,
    pub master_seed: u64,
    /// Unrecorded cycles before output bits are counted.
    pub burn_in: usize,
    /// State every chain is reset to.
    pub initial_state: usize,
}

impl Default for MachineConfig {
    fn default() -> Self {
        Self {
            rng: RngKind::IndependentStream,
            master_seed: 0,
            burn_in: 0,
            initial_state: 0,
        }
    }
}

/// Cycle-accurate simulator of the generator.
#[derive(Debug, Clone)]
pub struct SmurfMachine {
    chains: Vec<ChainFsm>,
    table: WeightTable,
    input_sources: Vec<RngSource>,
    output_gates: Vec<ThetaGate>,
    config: MachineConfig,
    cycle: u64,
}

impl SmurfMachine {
    pub fn new(table: WeightTable, config: MachineConfig) -> Result<Self> {
        let n = table.n_states();
        if config.initial_state >= n {
            return Err(SmurfError::Config(format!(
                "initial state {} outside [0, {})",
                config.initial_state, n
            )));
        }
        let chains = (0..table.arity())
            .map(|_| ChainFsm::with_state(n, config.initial_state))
            .collect::<Result<Vec<_>>>()?;
        let mut machine = Self {
            chains,
            input_sources: Vec::new(),
            output_gates: Vec::new(),
            table,
            config,
            cycle: 0,
        };
        machine.reseed(config.master_seed);
        Ok(machine)
    }

    /// Rebuilds every gate's source from `seed`; input gates take stream
    /// indices `0..M`, output gates `M..M + N^M`.
    pub fn reseed(&mut self, seed: u64) {
        self.config.master_seed = seed;
        let kind = self.config.rng;
        let m = self.table.arity() as u64;
        self.input_sources = (0..m).map(|j| RngSource::stream(kind, seed, j)).collect();
        self.output_gates = self
            .table
            .weights()
            .iter()
            .enumerate()
            .map(|(t, &w)| {
                ThetaGate::new(
                    Probability::new(w).expect("table weights are validated"),
                    RngSource::stream(kind, seed, m + t as u64),
                )
            })
            .collect();
    }

    /// Puts every chain back at the initial state and the clock at zero.
    pub fn reset(&mut self) {
        let s = self.config.initial_state;
        self.chains.iter_mut().for_each(|c| c.reset(s));
        self.cycle = 0;
    }

    pub fn table(&self) -> &WeightTable {
        &self.table
    }

    pub fn config(&self) -> &MachineConfig {
        &self.config
    }

    pub fn chains(&self) -> &[ChainFsm] {
        &self.chains
    }

    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn gate_count(&self) -> usize {
        self.output_gates.len()
    }

    /// Current flat codeword.
    pub fn codeword(&self) -> usize {
        let n = self.table.n_states();
        self.chains
            .iter()
            .rev()
            .fold(0, |acc, c| acc * n + c.state())
    }

    /// One clock: draw the M input bits, step every chain, and emit the bit
    /// of the θ-gate selected by the updated codeword. Returns `(t, bit)`.
    #[inline]
    pub fn step_traced(&mut self, pxs: &[f64]) -> (usize, bool) {
        let n = self.table.n_states();
        let cycle = self.cycle;
        let mut t = 0usize;
        let mut scale = 1usize;
        for ((chain, source), &p) in self.chains.iter_mut().zip(&self.input_sources).zip(pxs) {
            let state = chain.step(compare(source.draw_at(cycle), p));
            t += state * scale;
            scale *= n;
        }
        let bit = self.output_gates[t].sample_at(cycle);
        self.cycle += 1;
        (t, bit)
    }

    /// One output bit for inputs `pxs`.
    pub fn step(&mut self, pxs: &[Probability]) -> Result<bool> {
        self.check_arity(pxs)?;
        Ok(self.step_traced(&probability_values(pxs)).1)
    }

    fn check_arity(&self, pxs: &[Probability]) -> Result<()> {
        if pxs.len() != self.table.arity() {
            return Err(SmurfError::DimensionMismatch {
                expected: self.table.arity(),
                got: pxs.len(),
            });
        }
        Ok(())
    }

    /// Resets, reseeds with `seed`, runs the configured burn-in and then
    /// `length` recorded cycles. Returns the output bitstream mean.
    pub fn run(&mut self, pxs: &[Probability], length: usize, seed: u64) -> Result<Probability> {
        let ones = self.run_counting(pxs, length, seed, |_| {})?;
        Probability::new(ones as f64 / length as f64)
    }

    /// Like [`SmurfMachine::run`] but reports every recorded codeword to
    /// `visit` and returns the number of ones.
    pub fn run_counting<F: FnMut(usize)>(
        &mut self,
        pxs: &[Probability],
        length: usize,
        seed: u64,
        mut visit: F,
    ) -> Result<usize> {
        self.check_arity(pxs)?;
        if length == 0 {
            return Err(SmurfError::EmptyBitstream);
        }
        let values = probability_values(pxs);
        self.reseed(seed);
        self.reset();
        for _ in 0..self.config.burn_in {
            self.step_traced(&values);
        }
        let mut ones = 0usize;
        for _ in 0..length {
            let (t, bit) = self.step_traced(&values);
            visit(t);
            ones += bit as usize;
        }
        Ok(ones)
    }
}

/// Convenience wrapper: build a machine for `table` and run it once.
pub fn smurf_run(
    table: &WeightTable,
    pxs: &[Probability],
    length: usize,
    config: MachineConfig,
) -> Result<Probability> {
    let mut machine = SmurfMachine::new(table.clone(), config)?;
    machine.run(pxs, length, config.master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::chain_steady_probs;
    use proptest::prelude::*;

    pub(crate) const TABLE_I: [f64; 16] = [
        0.0, 0.6083, 0.0474, 0.6911, 0.6083, 0.3749, 0.4527, 0.8372, 0.0474, 0.4527, 0.0159,
        0.5946, 0.6911, 0.8372, 0.5946, 0.9846,
    ];

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn codeword_examples() {
        // digits are [i_1, i_2]
        assert_eq!(codeword_index(&[0, 0], 4).unwrap(), 0);
        assert_eq!(codeword_index(&[3, 3], 4).unwrap(), 15);
        assert_eq!(codeword_index(&[2, 1], 4).unwrap(), 6);
        assert!(codeword_index(&[4, 0], 4).is_err());
        assert_eq!(codeword_index_mixed(&[1, 2], &[2, 3]).unwrap(), 5);
        assert!(codeword_index_mixed(&[1, 3], &[2, 3]).is_err());
    }

    #[test]
    fn codeword_bijective() {
        for t in 0..64 {
            let d = codeword_digits(t, 4, 3);
            assert_eq!(codeword_index(&d, 4).unwrap(), t);
        }
    }

    #[test]
    fn joint_examples() {
        let uniform = joint_steady_probs(4, &[p(0.5), p(0.5)]).unwrap();
        assert!(uniform.iter().all(|&x| (x - 1.0 / 16.0).abs() < 1e-15));
        let corner = joint_steady_probs(4, &[p(0.0), p(0.0)]).unwrap();
        assert_eq!(corner[0], 1.0);
        assert!(corner[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn joint_mixed_radix_layout() {
        let j = joint_steady_probs_mixed(&[2, 3], &[p(0.3), p(0.6)]).unwrap();
        let a = chain_steady_probs(2, p(0.3)).unwrap();
        let b = chain_steady_probs(3, p(0.6)).unwrap();
        for i2 in 0..3 {
            for i1 in 0..2 {
                let t = codeword_index_mixed(&[i1, i2], &[2, 3]).unwrap();
                assert!((j[t] - a[i1] * b[i2]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn expected_output_examples() {
        let flat = WeightTable::constant(4, 2, 0.37).unwrap();
        let y = smurf_expected_output(&flat, &[p(0.1), p(0.8)]).unwrap();
        assert!((y.value() - 0.37).abs() < 1e-15);

        let identity = WeightTable::new(2, 1, vec![0.0, 1.0]).unwrap();
        for x in [0.0, 0.25, 0.6, 1.0] {
            let y = smurf_expected_output(&identity, &[p(x)]).unwrap().value();
            assert!((y - x).abs() < 1e-15);
        }

        let table = WeightTable::new(4, 2, TABLE_I.to_vec()).unwrap();
        let y = smurf_expected_output(&table, &[p(0.5), p(0.5)])
            .unwrap()
            .value();
        assert!((y - 0.489_875).abs() < 1e-12);
        assert!(smurf_expected_output(&table, &[p(0.5)]).is_err());
    }

    #[test]
    fn saturated_tables_emit_constant_bits() {
        for (w, expect) in [(1.0, true), (0.0, false)] {
            let table = WeightTable::constant(4, 2, w).unwrap();
            let mut m = SmurfMachine::new(table, MachineConfig::default()).unwrap();
            for _ in 0..2000 {
                assert_eq!(m.step(&[p(0.3), p(0.9)]).unwrap(), expect);
            }
        }
    }

    #[test]
    fn table_one_converges_at_center() {
        let table = WeightTable::new(4, 2, TABLE_I.to_vec()).unwrap();
        let cfg = MachineConfig {
            master_seed: 17,
            burn_in: 1000,
            ..Default::default()
        };
        let y = smurf_run(&table, &[p(0.5), p(0.5)], 1_000_000, cfg)
            .unwrap()
            .value();
        assert!((y - 0.489_875).abs() <= 0.002, "{y}");
    }

    #[test]
    fn short_run_with_flat_table() {
        let table = WeightTable::constant(4, 2, 0.5).unwrap();
        let cfg = MachineConfig {
            master_seed: 3,
            ..Default::default()
        };
        let y = smurf_run(&table, &[p(0.2), p(0.7)], 64, cfg)
            .unwrap()
            .value();
        assert!((y - 0.5).abs() <= 4.0 * (0.25f64 / 64.0).sqrt());
        assert!(smurf_run(&table, &[p(0.2), p(0.7)], 0, cfg).is_err());
    }

    #[test]
    fn run_is_deterministic() {
        let table = WeightTable::new(4, 2, TABLE_I.to_vec()).unwrap();
        for kind in [
            RngKind::IndependentStream,
            RngKind::SharedLagged,
            RngKind::LowDiscrepancy,
        ] {
            let cfg = MachineConfig {
                rng: kind,
                master_seed: 99,
                burn_in: 10,
                initial_state: 1,
            };
            let a = smurf_run(&table, &[p(0.3), p(0.6)], 5000, cfg).unwrap();
            let b = smurf_run(&table, &[p(0.3), p(0.6)], 5000, cfg).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn machine_shape() {
        let table = WeightTable::constant(3, 3, 0.5).unwrap();
        let m = SmurfMachine::new(table.clone(), MachineConfig::default()).unwrap();
        assert_eq!(m.chains().len(), 3);
        assert_eq!(m.gate_count(), 27);
        let bad = MachineConfig {
            initial_state: 3,
            ..Default::default()
        };
        assert!(SmurfMachine::new(table, bad).is_err());
    }

    #[test]
    fn codeword_matches_chain_states() {
        let table = WeightTable::constant(4, 3, 0.5).unwrap();
        let mut m = SmurfMachine::new(table, MachineConfig::default()).unwrap();
        for _ in 0..100 {
            let (t, _) = m.step_traced(&[0.4, 0.5, 0.6]);
            let digits: Vec<usize> = m.chains().iter().map(|c| c.state()).collect();
            assert_eq!(t, codeword_index(&digits, 4).unwrap());
            assert_eq!(t, m.codeword());
        }
    }

    #[test]
    fn codeword_occupancy() {
        let table = WeightTable::constant(3, 2, 0.5).unwrap();
        let cfg = MachineConfig {
            master_seed: 4242,
            burn_in: 1000,
            ..Default::default()
        };
        let mut m = SmurfMachine::new(table, cfg).unwrap();
        let pxs = [p(0.35), p(0.7)];
        let length = 1_000_000;
        let mut counts = [0usize; 9];
        m.run_counting(&pxs, length, 4242, |t| counts[t] += 1)
            .unwrap();
        let joint = joint_steady_probs(3, &pxs).unwrap();
        for (t, (&c, &pi)) in counts.iter().zip(&joint).enumerate() {
            let f = c as f64 / length as f64;
            let bound = 5.0 * (pi * (1.0 - pi) / length as f64).sqrt();
            assert!((f - pi).abs() <= bound, "t={t}: {f} vs {pi}");
        }
    }

    proptest! {
        #[test]
        fn joint_normalized_and_separable(
            n in 2usize..=8,
            pxs in proptest::collection::vec(0.0f64..=1.0, 1..=3),
        ) {
            let probs: Vec<Probability> = pxs.iter().map(|&x| p(x)).collect();
            let joint = joint_steady_probs(n, &probs).unwrap();
            let sum: f64 = joint.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-10);
            let singles: Vec<_> = pxs.iter().map(|&x| chain_steady_probs(n, p(x)).unwrap()).collect();
            for (t, &v) in joint.iter().enumerate() {
                let digits = codeword_digits(t, n, pxs.len());
                let outer: f64 = digits.iter().zip(&singles).map(|(&d, s)| s[d]).product();
                prop_assert!((v - outer).abs() < 1e-12);
            }
        }

        #[test]
        fn expectation_bounded_and_monotone(
            weights in proptest::collection::vec(0.0f64..=1.0, 9),
            x1 in 0.0f64..=1.0,
            x2 in 0.0f64..=1.0,
            bump_at in 0usize..9,
            bump in 0.0f64..=1.0,
        ) {
            let table = WeightTable::new(3, 2, weights.clone()).unwrap();
            let y = smurf_expected_output(&table, &[p(x1), p(x2)]).unwrap().value();
            let lo = weights.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(y >= lo - 1e-15 && y <= hi + 1e-15);
            let mut raised = weights;
            raised[bump_at] = raised[bump_at].max(bump);
            let table = WeightTable::new(3, 2, raised).unwrap();
            let y2 = smurf_expected_output(&table, &[p(x1), p(x2)]).unwrap().value();
            prop_assert!(y2 >= y - 1e-15);
        }
    }
}
