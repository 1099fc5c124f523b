//! Decision-tree reconstruction for boolean functions.
//!
//! Given membership queries to `f: {-1,+1}^n -> {-1,+1}` that is close to a
//! small decision tree, [`Reconstructor`] answers queries consistently with
//! one fixed shallow tree close to `f`. On top of it sit a tolerant tester
//! ([`tolerant_test`]) and a proper learner driven by distance estimates
//! ([`learn`]). [`bruteforce`] holds exact oracles for desk-scale checks.
//!
//! ```
//! use dtrecon::{Constants, Dictator, Mode, Point, Reconstructor};
//!
//! let f = Dictator::new(32, 4).unwrap();
//! let constants = Constants { c_d: 1e-3, c_p: 10.0, c_tau: 100.0, c_leaf: 0.1, ..Constants::default() };
//! let r = Reconstructor::new(&f, 2, 0.3, 0.1, constants, 7, Mode::Local).unwrap();
//! let z = Point::from_signs(&[dtrecon::Sign::Plus; 32]);
//! assert_eq!(r.answer(&z).unwrap(), z.get(4));
//! ```

pub mod boolfn;
pub mod bruteforce;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod learner;
pub mod params;
pub mod reconstructor;
pub mod tape;
pub mod tester;
pub mod trees;

pub use boolfn::{
    exact_distance, random_tree_instance, restrict, sampled_distance, BooleanFunction, Constant, CorruptedOracle,
    CountingOracle, Dictator, Majority, Parity, Point, Restriction, Sign,
};
pub use bruteforce::{exact_opt, exact_topdown_tree, TruthTable};
pub use error::{Error, Result};
pub use estimators::{estimate_scores, NoiseRate, ScoreVector};
pub use learner::{build_dt, estimate_distance, learn, DistanceEstimator, TesterBackend};
pub use params::{Constants, Params};
pub use reconstructor::{Mode, QueryStats, Reconstructor};
pub use tape::{Purpose, RandomTape};
pub use tester::{tolerant_test, TestOutcome, Verdict};
pub use trees::{DecisionTree, PartialTree};
