//! Bit-level simulation and coefficient synthesis for SMURF generators:
//! `M` saturating chain FSMs whose joint state selects one of `N^M` θ-gates.
//!
//! ```
//! use smurf_core::{builtin, smurf_expected_output, synthesize, Probability, SynthesisOptions};
//!
//! let target = builtin("euclidean2").unwrap();
//! let table = synthesize(&target, 4, &SynthesisOptions::default()).unwrap();
//! let p = [Probability::new(0.3).unwrap(), Probability::new(0.4).unwrap()];
//! let y = smurf_expected_output(&table, &p).unwrap().value();
//! assert!((y - target.eval(&[0.3, 0.4]).unwrap()).abs() < 0.05);
//! ```

pub mod chain;
pub mod coeff;
pub mod error;
pub mod eval;
pub mod expr;
pub mod function;
pub mod machine;
pub mod qp;
pub mod quadrature;
pub mod rng;
pub mod stochastic;
pub mod synthesis;
pub mod table;

pub use chain::{chain_steady_probs, steady_probs_oracle, tanh_fsm_output, ChainFsm, SteadyVector};
pub use coeff::{load_table, read_table, save_table, write_table};
pub use error::{Result, SmurfError};
pub use eval::{evaluate, sweep, EvalOptions, EvalReport, LengthSummary, PointRecord, SweepRow};
pub use expr::{parse_expression, Expr};
pub use function::{
    builtin, builtin_with_boxes, from_expression, normalize_target, target_from_meta, OutputBox,
    TargetFunction, BUILTIN_NAMES,
};
pub use machine::{
    codeword_digits, codeword_index, joint_steady_probs, smurf_expected_output, smurf_run,
    MachineConfig, SmurfMachine,
};
pub use qp::{QpMethod, QpOptions};
pub use quadrature::{GaussLegendre, QuadratureGrid};
pub use rng::{split_seed, RngKind, RngSource};
pub use stochastic::{
    generate_bitstream, sc_multiply, sc_scaled_add, AffineMap, Bitstream, Probability, ThetaGate,
};
pub use synthesis::{
    assemble_c, assemble_h, solve_weights, synthesize, SynthesisOptions, SynthesisProblem,
};
pub use table::{aggregate_states, SolverSummary, TableMeta, WeightTable, MAX_AGGREGATE_STATES};
