//! Lazy reconstruction: answers queries consistently with a single depth-`d`
//! decision tree close to `f`, growing only the paths the queries touch.
//!
//! At each unresolved node the scores of the subfunction are estimated and
//! the node is split on the free variable with the highest estimate; at an
//! unlabeled leaf the mean of the subfunction is estimated from uniform
//! completions of the free coordinates.
//!
//! In [`Mode::Local`] every estimate is drawn from a stream addressed by the
//! node path, so answers depend only on the seed and never on query order,
//! and [`Reconstructor::answer`] may be called from several threads. In
//! [`Mode::Plain`] a single generator is consumed in query order; answers
//! are serialized on an internal lock.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boolfn::{restrict, BooleanFunction, CountingOracle, Point, Restriction, Sign};
use crate::error::{invalid, Result};
use crate::estimators::estimate_scores_ln;
use crate::params::{Constants, Params};
use crate::tape::{Purpose, RandomTape};
use crate::trees::{DecisionTree, NodeId, PartialTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Plain,
    Local,
}

/// Oracle query counters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QueryStats {
    pub total: u64,
    pub max_per_answer: u64,
    pub answers: u64,
}

pub struct Reconstructor<F> {
    oracle: CountingOracle<F>,
    params: Params,
    tree: PartialTree,
    mode: Mode,
    tape: RandomTape,
    plain_rng: Mutex<ChaCha8Rng>,
    max_per_answer: AtomicU64,
    answers: AtomicU64,
}

impl<F: BooleanFunction> Reconstructor<F> {
    pub fn new(f: F, s: usize, eps: f64, delta: f64, constants: Constants, seed: u64, mode: Mode) -> Result<Self> {
        let params = Params::new(f.n(), s, eps, delta, constants)?;
        Self::with_params(f, params, seed, mode)
    }

    pub fn with_params(f: F, params: Params, seed: u64, mode: Mode) -> Result<Self> {
        if params.n != f.n() {
            return Err(invalid(format!(
                "parameters are for n = {} but the oracle has n = {}",
                params.n,
                f.n()
            )));
        }
        Ok(Reconstructor {
            tree: PartialTree::new(f.n(), params.depth()),
            oracle: CountingOracle::new(f),
            params,
            mode,
            tape: RandomTape::new(seed),
            plain_rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            max_per_answer: AtomicU64::new(0),
            answers: AtomicU64::new(0),
        })
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn tape(&self) -> &RandomTape {
        &self.tape
    }

    pub fn oracle(&self) -> &F {
        self.oracle.inner()
    }

    pub fn partial_tree(&self) -> &PartialTree {
        &self.tree
    }

    /// The value at `z` of the reconstructed tree.
    pub fn answer(&self, z: &Point) -> Result<Sign> {
        if z.n() != self.params.n {
            return Err(invalid(format!(
                "point has dimension {} but the reconstructor expects {}",
                z.n(),
                self.params.n
            )));
        }
        let mut guard = match self.mode {
            Mode::Plain => Some(self.plain_rng.lock().unwrap_or_else(|e| e.into_inner())),
            Mode::Local => None,
        };
        let counter = CountingOracle::new(&self.oracle);
        let mut path = Restriction::new();
        let mut node: NodeId = PartialTree::ROOT;
        let label = loop {
            if self.tree.is_leaf_position(node) {
                if let Some(l) = self.tree.label(node) {
                    break l;
                }
                let mean = match guard.as_deref_mut() {
                    Some(rng) => self.leaf_mean(&counter, &path, rng),
                    None => self.leaf_mean(&counter, &path, &mut self.tape.stream(&path, Purpose::Leaf)),
                };
                break self.tree.resolve_label(node, Sign::of_mean(mean))?;
            }
            let var = match self.tree.variable(node) {
                Some(v) => v,
                None => {
                    let v = match guard.as_deref_mut() {
                        Some(rng) => self.split_variable(&counter, &path, rng)?,
                        None => self.split_variable(&counter, &path, &mut self.tape.stream(&path, Purpose::Score))?,
                    };
                    self.tree.resolve_variable(node, v)?
                }
            };
            let branch = z.get(var);
            path.push(var, branch)?;
            node = self.tree.child_or_insert(node, branch)?;
        };
        let used = counter.queries();
        assert!(
            used <= self.params.per_answer_budget(),
            "answer used {used} queries, budget {}",
            self.params.per_answer_budget()
        );
        self.max_per_answer.fetch_max(used, Ordering::Relaxed);
        self.answers.fetch_add(1, Ordering::Relaxed);
        Ok(label)
    }

    fn split_variable<G, R>(&self, f: &G, path: &Restriction, rng: &mut R) -> Result<usize>
    where
        G: BooleanFunction,
        R: Rng + ?Sized,
    {
        let sub = restrict(f, path)?;
        let scores = estimate_scores_ln(
            &sub,
            self.params.noise(),
            self.params.score_accuracy(),
            self.params.ln_inv_node_failure(),
            self.params.constants.c_q,
            rng,
        )?;
        scores
            .argmax_where(|i| !path.contains(i))
            .ok_or_else(|| invalid("no free variable left to split on"))
    }

    fn leaf_mean<G, R>(&self, f: &G, path: &Restriction, rng: &mut R) -> f64
    where
        G: BooleanFunction,
        R: Rng + ?Sized,
    {
        let q = self.params.leaf_samples();
        let mut x = Point::zeros(self.params.n);
        let mut sum = 0i64;
        for _ in 0..q {
            x.randomize(rng);
            path.apply(&mut x);
            sum += f.eval(&x).value() as i64;
        }
        sum as f64 / q as f64
    }

    /// The tree as currently built, with unexplored positions as `+1` leaves.
    pub fn materialize(&self) -> DecisionTree {
        self.tree.snapshot()
    }

    pub fn query_stats(&self) -> QueryStats {
        QueryStats {
            total: self.oracle.queries(),
            max_per_answer: self.max_per_answer.load(Ordering::Relaxed),
            answers: self.answers.load(Ordering::Relaxed),
        }
    }
}
