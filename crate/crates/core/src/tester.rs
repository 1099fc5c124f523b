//! Tolerant testing through reconstruction: compare `f` with a freshly
//! reconstructed tree on uniform points and reject when they disagree on
//! more than a `kappa * eps` fraction.

use std::fmt;

use rand_chacha::ChaCha8Rng;

use crate::boolfn::{BooleanFunction, CountingOracle, Point};
use crate::error::{invalid, Result};
use crate::params::{Constants, Params};
use crate::reconstructor::{Mode, Reconstructor};
use crate::tape::{Purpose, RandomTape};

pub const DEFAULT_KAPPA: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Accept => 0,
            Verdict::Reject => 1,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub verdict: Verdict,
    /// Fraction of the `samples` points where `f` and the reconstruction
    /// disagree.
    pub mismatch: f64,
    pub samples: u64,
    pub threshold: f64,
    /// Depth cap of the reconstruction; rejection speaks about trees of
    /// depth at most this.
    pub depth: usize,
    /// All oracle queries: the reconstructor's plus one per sample.
    pub queries: u64,
    pub max_queries_per_answer: u64,
}

pub fn tolerant_test<F: BooleanFunction>(
    f: &F,
    s: usize,
    eps: f64,
    delta: f64,
    kappa: f64,
    constants: Constants,
    seed: u64,
) -> Result<TestOutcome> {
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(invalid(format!("reject multiplier kappa = {kappa} must exceed 1")));
    }
    let params = Params::new(f.n(), s, eps, delta, constants)?;
    let counted = CountingOracle::new(f);
    let rec = Reconstructor::with_params(&counted, params, seed, Mode::Local)?;
    let m = params.tester_samples();
    let mut rng: ChaCha8Rng = RandomTape::new(seed).stream_for_key(b"tester", Purpose::Probe);
    let mut x = Point::zeros(f.n());
    let mut wrong = 0u64;
    for _ in 0..m {
        x.randomize(&mut rng);
        if rec.answer(&x)? != f.eval(&x) {
            wrong += 1;
        }
    }
    let mismatch = wrong as f64 / m as f64;
    let threshold = kappa * eps;
    let stats = rec.query_stats();
    Ok(TestOutcome {
        verdict: if mismatch > threshold { Verdict::Reject } else { Verdict::Accept },
        mismatch,
        samples: m,
        threshold,
        depth: params.depth(),
        queries: counted.queries() + m,
        max_queries_per_answer: stats.max_per_answer,
    })
}

/// The same contract for the class of constant functions, which the
/// reconstructor cannot express: the mismatch is the sampled minority mass
/// of `f`, compared against `kappa * eps`.
pub fn tolerant_constant_test<F: BooleanFunction>(
    f: &F,
    eps: f64,
    delta: f64,
    kappa: f64,
    c_m: f64,
    seed: u64,
) -> Result<TestOutcome> {
    if !(kappa > 1.0 && kappa.is_finite()) {
        return Err(invalid(format!("reject multiplier kappa = {kappa} must exceed 1")));
    }
    if !(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("eps and delta must lie in (0, 1)"));
    }
    let m = (c_m * (1.0 / delta).ln() / (eps * eps)).ceil() as u64;
    let mut rng: ChaCha8Rng = RandomTape::new(seed).stream_for_key(b"constant-tester", Purpose::Probe);
    let mut x = Point::zeros(f.n());
    let mut plus = 0u64;
    for _ in 0..m {
        x.randomize(&mut rng);
        plus += f.eval(&x).bit() as u64;
    }
    let mismatch = plus.min(m - plus) as f64 / m as f64;
    let threshold = kappa * eps;
    Ok(TestOutcome {
        verdict: if mismatch > threshold { Verdict::Reject } else { Verdict::Accept },
        mismatch,
        samples: m,
        threshold,
        depth: 0,
        queries: m,
        max_queries_per_answer: 0,
    })
}
