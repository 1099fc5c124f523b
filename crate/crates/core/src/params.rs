//! Parameter ledger: the size/error/failure inputs plus every tunable
//! constant standing behind an asymptotic bound, and the values derived
//! from them.

use std::fmt;

use crate::error::{invalid, Result};
use crate::estimators::{score_sample_count_ln, NoiseRate};

/// Multiplicative constants for every derived parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// Depth: `d = min(n, ceil(c_d (log2 s)^3 / eps^3))`.
    pub c_d: f64,
    /// Noise rate: `p = min(1/2, c_p eps / max(1, log2 s))`.
    pub c_p: f64,
    /// Score accuracy: `tau = min(1/2, c_tau eps^3 / max(1, log2 s)^3)`.
    pub c_tau: f64,
    /// Score samples: `q = ceil(c_q (ln 2n + ln 1/delta') / tau'^2)`.
    pub c_q: f64,
    /// Leaf samples: `q_leaf = ceil(c_leaf (32/eps^2) ln(2^{d+2}/delta))`.
    pub c_leaf: f64,
    /// Tester sample count: `m = ceil(c_m ln(1/delta) / eps^2)`.
    pub c_m: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c_d: 1.0,
            c_p: 1.0,
            c_tau: 1.0,
            c_q: 2.0,
            c_leaf: 1.0,
            c_m: 2.0,
        }
    }
}

impl Constants {
    pub const NAMES: [&'static str; 6] = ["c_d", "c_p", "c_tau", "c_q", "c_leaf", "c_m"];

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid(format!("constant {name} = {value} must be positive and finite")));
        }
        let slot = match name {
            "c_d" => &mut self.c_d,
            "c_p" => &mut self.c_p,
            "c_tau" => &mut self.c_tau,
            "c_q" => &mut self.c_q,
            "c_leaf" => &mut self.c_leaf,
            "c_m" => &mut self.c_m,
            other => {
                return Err(invalid(format!(
                    "unknown constant '{other}' (expected one of {})",
                    Self::NAMES.join(", ")
                )))
            }
        };
        *slot = value;
        Ok(())
    }

    /// Parses a `name=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (name, value) = spec
            .split_once('=')
            .ok_or_else(|| invalid(format!("constant override '{spec}' is not name=value")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| invalid(format!("constant override '{spec}' has a non-numeric value")))?;
        self.set(name.trim(), value)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in Self::NAMES.iter().zip([
            self.c_d, self.c_p, self.c_tau, self.c_q, self.c_leaf, self.c_m,
        ]) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("constant {name} = {v} must be positive and finite")));
            }
        }
        Ok(())
    }
}

/// Validated inputs and derived values for one reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Params {
    pub n: usize,
    pub s: usize,
    pub eps: f64,
    pub delta: f64,
    pub constants: Constants,
    depth: usize,
    noise: NoiseRate,
    tau: f64,
}

impl Params {
    pub fn new(n: usize, s: usize, eps: f64, delta: f64, constants: Constants) -> Result<Self> {
        if n == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if s < 2 {
            return Err(invalid(format!("size parameter s = {s} must be at least 2")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("error parameter eps = {eps} outside (0, 1)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("failure probability delta = {delta} outside (0, 1)")));
        }
        constants.validate()?;
        let log_s = (s as f64).log2().max(1.0);
        let raw_depth = (constants.c_d * log_s.powi(3) / eps.powi(3)).ceil();
        let depth = if raw_depth >= n as f64 { n } else { raw_depth.max(1.0) as usize };
        let p = (constants.c_p * eps / log_s).min(0.5);
        let noise = NoiseRate::new(p)?;
        let tau = (constants.c_tau * eps.powi(3) / log_s.powi(3)).min(0.5);
        if !(tau > 0.0) {
            return Err(invalid("score accuracy underflows to zero"));
        }
        Ok(Params {
            n,
            s,
            eps,
            delta,
            constants,
            depth,
            noise,
            tau,
        })
    }

    /// Depth cap `d` of the reconstructed tree.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn noise(&self) -> NoiseRate {
        self.noise
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Per-node score accuracy, `tau / 2`.
    pub fn score_accuracy(&self) -> f64 {
        self.tau / 2.0
    }

    /// `ln(1 / delta')` with `delta' = delta / 2^{d+1}`, the failure
    /// budget of each estimate.
    pub fn ln_inv_node_failure(&self) -> f64 {
        (1.0 / self.delta).ln() + (self.depth as f64 + 1.0) * std::f64::consts::LN_2
    }

    /// Samples per score estimation; each costs two queries.
    pub fn score_samples(&self) -> u64 {
        score_sample_count_ln(
            self.n,
            self.score_accuracy(),
            self.ln_inv_node_failure(),
            self.constants.c_q,
        )
    }

    /// Samples per leaf estimation, one query each.
    pub fn leaf_samples(&self) -> u64 {
        let ln_term = (self.depth as f64 + 2.0) * std::f64::consts::LN_2 + (1.0 / self.delta).ln();
        (self.constants.c_leaf * 32.0 / (self.eps * self.eps) * ln_term).ceil() as u64
    }

    /// Hard cap on queries made while answering one input:
    /// `d * 2q + q_leaf`.
    pub fn per_answer_budget(&self) -> u64 {
        (self.depth as u64)
            .saturating_mul(2)
            .saturating_mul(self.score_samples())
            .saturating_add(self.leaf_samples())
    }

    /// Uniform points drawn by the tolerant tester.
    pub fn tester_samples(&self) -> u64 {
        (self.constants.c_m * (1.0 / self.delta).ln() / (self.eps * self.eps)).ceil() as u64
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "n={} s={} eps={} delta={} d={} p={} tau={} q={} q_leaf={}",
            self.n,
            self.s,
            self.eps,
            self.delta,
            self.depth,
            self.noise.value(),
            self.tau,
            self.score_samples(),
            self.leaf_samples()
        )
    }
}
