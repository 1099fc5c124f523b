//! Proper learning from distance estimation.
//!
//! [`build_dt`] chooses, at every node, the root variable and the split of
//! the leaf budget minimizing the mean of the two estimated subtree
//! distances, then recurses on the chosen halves. Distances come from a
//! [`DistanceEstimator`]: either exact optimization over the truth table or
//! a threshold search over tolerant-test verdicts.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rayon::prelude::*;

use crate::boolfn::{restrict, BooleanFunction, Point, Restriction, Sign};
use crate::bruteforce::{exact_opt, OptTable, TruthTable, OPT_MAX_N};
use crate::error::{check_scale, invalid, Result};
use crate::params::Constants;
use crate::tape::{path_key, Purpose, RandomTape};
use crate::tester::{tolerant_constant_test, tolerant_test, Verdict, DEFAULT_KAPPA};
use crate::trees::DecisionTree;

/// Settings for distance estimation through the tolerant tester.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TesterBackend {
    pub kappa: f64,
    /// Soundness constant `c` of the tester.
    pub c: f64,
    pub delta: f64,
    pub constants: Constants,
    pub seed: u64,
    /// Accuracy of sampled leaf means.
    pub mean_accuracy: f64,
}

impl Default for TesterBackend {
    fn default() -> Self {
        TesterBackend {
            kappa: DEFAULT_KAPPA,
            c: DEFAULT_KAPPA,
            delta: 0.1,
            constants: Constants::default(),
            seed: 0,
            mean_accuracy: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceEstimator {
    Exact,
    Tester(TesterBackend),
}

impl DistanceEstimator {
    /// The constant `c` in `eta <= opt <= c * eta + gamma`.
    pub fn soundness(&self) -> f64 {
        match self {
            DistanceEstimator::Exact => 1.0,
            DistanceEstimator::Tester(b) => b.c,
        }
    }
}

/// Threshold levels `k * gamma / c` below 1.
fn levels(gamma: f64, c: f64) -> impl Iterator<Item = f64> {
    (1..).map(move |k| k as f64 * gamma / c).take_while(|&e| e < 1.0)
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("granularity gamma = {gamma} outside (0, 1)")));
    }
    Ok(())
}

fn tester_estimate<G: BooleanFunction>(
    b: &TesterBackend,
    g: &G,
    s: usize,
    gamma: f64,
    key: &[u8],
    calls: &AtomicU64,
) -> Result<f64> {
    let tape = RandomTape::new(b.seed);
    let mut eta = 0.0;
    for (k, eps) in levels(gamma, b.c).enumerate() {
        let mut level_key = key.to_vec();
        level_key.extend_from_slice(&(k as u64).to_le_bytes());
        let seed: u64 = tape.stream_for_key(&level_key, Purpose::Probe).random();
        calls.fetch_add(1, Ordering::Relaxed);
        let out = if s == 1 {
            tolerant_constant_test(g, eps, b.delta, b.kappa, b.constants.c_m, seed)?
        } else {
            tolerant_test(g, s, eps, b.delta, b.kappa, b.constants, seed)?
        };
        if out.verdict == Verdict::Reject {
            eta = eps;
        }
    }
    Ok(eta)
}

/// An estimate `eta` of `opt_s(g)`. The exact backend returns `opt_s(g)`
/// itself and needs `n <= 12`.
pub fn estimate_distance<G: BooleanFunction>(e: &DistanceEstimator, g: &G, s: usize, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if s == 0 {
        return Err(invalid("tree size must be at least 1"));
    }
    match e {
        DistanceEstimator::Exact => {
            check_scale("n", g.n(), OPT_MAX_N)?;
            Ok(exact_opt(&TruthTable::from_function(g)?, s)?.0)
        }
        DistanceEstimator::Tester(b) => tester_estimate(b, g, s, gamma, b"root", &AtomicU64::new(0)),
    }
}

/// One split decision of [`build_dt`].
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRecord {
    pub path: Restriction,
    pub size: usize,
    pub var: usize,
    pub s0: usize,
    pub s1: usize,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct BuildReport {
    pub tree: DecisionTree,
    pub splits: Vec<SplitRecord>,
    pub tester_calls: u64,
}

struct Builder<'a, F> {
    f: &'a F,
    estimator: &'a DistanceEstimator,
    gamma: f64,
    table: Option<OptTable>,
    calls: AtomicU64,
    splits: Vec<SplitRecord>,
}

impl<F: BooleanFunction> Builder<'_, F> {
    fn eta(&self, path: &Restriction, s: usize) -> Result<f64> {
        match (self.estimator, &self.table) {
            (DistanceEstimator::Exact, Some(t)) => t.best_distance(path, s),
            (DistanceEstimator::Tester(b), _) => {
                let mut key = path_key(path);
                key.extend_from_slice(&(s as u64).to_le_bytes());
                tester_estimate(b, &restrict(self.f, path)?, s, self.gamma, &key, &self.calls)
            }
            (DistanceEstimator::Exact, None) => unreachable!("exact backend always has a table"),
        }
    }

    fn mean_sign(&self, path: &Restriction) -> Result<Sign> {
        match (self.estimator, &self.table) {
            (DistanceEstimator::Exact, Some(t)) => t.majority(path),
            (DistanceEstimator::Tester(b), _) => {
                let sub = restrict(self.f, path)?;
                let q = (8.0 * (2.0 / b.delta).ln() / (b.mean_accuracy * b.mean_accuracy)).ceil() as u64;
                let mut rng = RandomTape::new(b.seed).stream(path, Purpose::Leaf);
                let mut x = Point::zeros(sub.n());
                let mut sum = 0i64;
                for _ in 0..q {
                    x.randomize(&mut rng);
                    sum += sub.eval(&x).value() as i64;
                }
                Ok(Sign::of_mean(sum as f64))
            }
            (DistanceEstimator::Exact, None) => unreachable!("exact backend always has a table"),
        }
    }

    fn build(&mut self, path: &mut Restriction, s: usize, d: usize) -> Result<DecisionTree> {
        let n = self.f.n();
        let free: Vec<usize> = (0..n).filter(|&i| !path.contains(i)).collect();
        if s == 1 || d == 0 || free.is_empty() {
            return Ok(DecisionTree::leaf(n, self.mean_sign(path)?));
        }
        let grid: Vec<(usize, usize)> = free
            .iter()
            .flat_map(|&i| (1..s).map(move |s0| (i, s0)))
            .collect();
        let errors = {
            let this = &*self;
            let path = &*path;
            grid.par_iter()
                .map(|&(i, s0)| {
                    let lo = this.eta(&path.with(i, Sign::Minus)?, s0)?;
                    let hi = this.eta(&path.with(i, Sign::Plus)?, s - s0)?;
                    Ok(0.5 * (lo + hi))
                })
                .collect::<Result<Vec<f64>>>()?
        };
        let mut best = 0;
        for (k, &e) in errors.iter().enumerate() {
            if e < errors[best] {
                best = k;
            }
        }
        let (var, s0) = grid[best];
        self.splits.push(SplitRecord {
            path: path.clone(),
            size: s,
            var,
            s0,
            s1: s - s0,
            error: errors[best],
        });
        path.push(var, Sign::Minus)?;
        let left = self.build(path, s0, d - 1);
        path.pop();
        let left = left?;
        path.push(var, Sign::Plus)?;
        let right = self.build(path, s - s0, d - 1);
        path.pop();
        Ok(DecisionTree::split(var, left, right?))
    }
}

/// A tree with at most `s` leaves and depth at most `d`.
pub fn build_dt<F: BooleanFunction>(f: &F, s: usize, d: usize, gamma: f64, e: &DistanceEstimator) -> Result<DecisionTree> {
    Ok(build_dt_report(f, s, d, gamma, e)?.tree)
}

pub fn build_dt_report<F: BooleanFunction>(
    f: &F,
    s: usize,
    d: usize,
    gamma: f64,
    e: &DistanceEstimator,
) -> Result<BuildReport> {
    if s == 0 {
        return Err(invalid("tree size must be at least 1"));
    }
    check_gamma(gamma)?;
    let table = match e {
        DistanceEstimator::Exact => {
            check_scale("n", f.n(), OPT_MAX_N)?;
            Some(OptTable::new(&TruthTable::from_function(f)?, s)?)
        }
        DistanceEstimator::Tester(_) => None,
    };
    let mut b = Builder {
        f,
        estimator: e,
        gamma,
        table,
        calls: AtomicU64::new(0),
        splits: Vec::new(),
    };
    let tree = b.build(&mut Restriction::new(), s, d)?;
    Ok(BuildReport {
        tree,
        splits: b.splits,
        tester_calls: b.calls.into_inner(),
    })
}

/// `d = max(0, ceil(log2(s / eps)) - 1)`.
pub fn learn_depth(s: usize, eps: f64) -> usize {
    ((s as f64 / eps).log2().ceil() - 1.0).max(0.0) as usize
}

/// `gamma = eps/2 * (eps/s)^max(1, log2 c)`.
pub fn learn_gamma(s: usize, eps: f64, c: f64) -> f64 {
    eps / 2.0 * (eps / s as f64).powf(c.log2().max(1.0))
}

#[derive(Debug, Clone)]
pub struct LearnReport {
    pub tree: DecisionTree,
    pub depth: usize,
    pub gamma: f64,
    pub splits: Vec<SplitRecord>,
    pub tester_calls: u64,
    /// `2 c n s^2 / gamma`, the tester-call allowance.
    pub call_budget: f64,
}

pub fn learn<F: BooleanFunction>(g: &F, s: usize, eps: f64, e: &DistanceEstimator) -> Result<LearnReport> {
    if s == 0 {
        return Err(invalid("tree size must be at least 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("accuracy eps = {eps} outside (0, 1)")));
    }
    let c = e.soundness();
    let depth = learn_depth(s, eps);
    let gamma = learn_gamma(s, eps, c);
    let e = match *e {
        DistanceEstimator::Tester(b) => DistanceEstimator::Tester(TesterBackend {
            mean_accuracy: eps,
            ..b
        }),
        DistanceEstimator::Exact => DistanceEstimator::Exact,
    };
    let report = build_dt_report(g, s, depth, gamma, &e)?;
    Ok(LearnReport {
        tree: report.tree,
        depth,
        gamma,
        splits: report.splits,
        tester_calls: report.tester_calls,
        call_budget: 2.0 * c * g.n() as f64 * (s * s) as f64 / gamma,
    })
}
