//! Noise-sensitivity machinery: `p`-noisy copies, the two-query unbiased
//! score estimator and its batched mean.
//!
//! A `p`-noisy copy `y` of `x` rerandomizes each coordinate independently
//! with probability `p`, so each coordinate flips with probability `p/2`.
//! The single-sample estimate for coordinate `i` is
//!
//! ```text
//! eta_i = 1[f(x) != f(y)] * (1 - 1[x_i = y_i] / (1 - p/2))
//! ```
//!
//! whose expectation is `Score_i(f, p) = NS_p(f) - E_b[NS_p(f_{x_i=b})]`.

use rand::Rng;

use crate::boolfn::{BooleanFunction, Point};
use crate::error::{check_scale, invalid, Result};

/// Constant in the Hoeffding sample count for score estimation.
pub const DEFAULT_C_Q: f64 = 2.0;

/// Largest dimension accepted by [`conditional_ns_identity_check`].
pub const IDENTITY_CHECK_MAX_N: usize = 10;

const NOISE_PRECISION_BITS: u32 = 48;

/// A noise rate `p` in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRate {
    p: f64,
    /// `p` rounded to a multiple of `2^-48`, used to draw Bernoulli words.
    fixed: u64,
}

impl NoiseRate {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(invalid(format!("noise rate {p} outside (0, 1)")));
        }
        let fixed = (p * (1u64 << NOISE_PRECISION_BITS) as f64).round() as u64;
        Ok(NoiseRate { p, fixed })
    }

    pub fn value(self) -> f64 {
        self.p
    }

    /// Probability that a coordinate of a noisy copy differs from the
    /// original.
    pub fn flip_probability(self) -> f64 {
        self.p / 2.0
    }

    /// `1 / (1 - p/2)`, the reweighting factor of the unbiased estimator.
    pub fn agreement_weight(self) -> f64 {
        1.0 / (1.0 - self.p / 2.0)
    }

    /// A word whose bits are independent Bernoulli(p), to 48-bit precision.
    fn bernoulli_word<R: Rng + ?Sized>(self, rng: &mut R) -> u64 {
        if self.fixed == 0 {
            return 0;
        }
        if self.fixed >= 1u64 << NOISE_PRECISION_BITS {
            return u64::MAX;
        }
        // Build the binary expansion LSB first: OR halves-in a one bit,
        // AND halves-in a zero bit.
        let tz = self.fixed.trailing_zeros();
        let bits = self.fixed >> tz;
        let mut w = 0u64;
        for j in 0..NOISE_PRECISION_BITS - tz {
            let r = rng.next_u64();
            if (bits >> j) & 1 == 1 {
                w |= r;
            } else {
                w &= r;
            }
        }
        w
    }
}

/// Per-coordinate score values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn zeros(n: usize) -> Self {
        ScoreVector(vec![0.0; n])
    }

    pub fn new(values: Vec<f64>) -> Self {
        ScoreVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Index of the largest value among coordinates accepted by `allowed`,
    /// lowest index on ties.
    pub fn argmax_where(&self, mut allowed: impl FnMut(usize) -> bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.0.iter().enumerate() {
            if !allowed(i) {
                continue;
            }
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Rerandomizes each coordinate of `x` independently with probability `p`.
pub fn noisy_copy<R: Rng + ?Sized>(x: &Point, p: NoiseRate, rng: &mut R) -> Point {
    let mut y = x.clone();
    noisy_copy_into(x, p, rng, &mut y);
    y
}

fn noisy_copy_into<R: Rng + ?Sized>(x: &Point, p: NoiseRate, rng: &mut R, y: &mut Point) {
    let n = x.n();
    let words = y.words_mut();
    for (out, &w) in words.iter_mut().zip(x.words()) {
        let mask = p.bernoulli_word(rng);
        let fresh = rng.next_u64();
        *out = (w & !mask) | (fresh & mask);
    }
    let r = n % 64;
    if r != 0 {
        let last = words.len() - 1;
        words[last] &= (1u64 << r) - 1;
    }
}

/// One run of the two-query estimator: returns `eta_1..eta_n`.
pub fn unbiased_score_sample<F, R>(f: &F, p: NoiseRate, rng: &mut R) -> ScoreVector
where
    F: BooleanFunction + ?Sized,
    R: Rng + ?Sized,
{
    let x = Point::random(f.n(), rng);
    let y = noisy_copy(&x, p, rng);
    score_sample_from_pair(f.eval(&x) != f.eval(&y), &x, &y, p)
}

/// The estimate vector for an already-drawn pair `(x, y)`.
pub fn score_sample_from_pair(values_differ: bool, x: &Point, y: &Point, p: NoiseRate) -> ScoreVector {
    if !values_differ {
        return ScoreVector::zeros(x.n());
    }
    let c = p.agreement_weight();
    ScoreVector(
        (0..x.n())
            .map(|i| if x.get(i) == y.get(i) { 1.0 - c } else { 1.0 })
            .collect(),
    )
}

/// `q = ceil(c_q * (ln(2n) + ln(1/delta)) / tau^2)`.
pub fn score_sample_count(n: usize, tau: f64, delta: f64, c_q: f64) -> u64 {
    score_sample_count_ln(n, tau, (1.0 / delta).ln(), c_q)
}

/// [`score_sample_count`] with the failure budget given as `ln(1/delta)`,
/// for budgets too small to represent directly.
pub fn score_sample_count_ln(n: usize, tau: f64, ln_inv_delta: f64, c_q: f64) -> u64 {
    (c_q * ((2.0 * n as f64).ln() + ln_inv_delta) / (tau * tau)).ceil() as u64
}

/// The mean of `q` unbiased samples, `q` from [`score_sample_count`] with
/// [`DEFAULT_C_Q`]. Makes exactly `2q` queries.
pub fn estimate_scores<F, R>(f: &F, p: NoiseRate, tau: f64, delta: f64, rng: &mut R) -> Result<ScoreVector>
where
    F: BooleanFunction + ?Sized,
    R: Rng + ?Sized,
{
    estimate_scores_with(f, p, tau, delta, DEFAULT_C_Q, rng)
}

pub fn estimate_scores_with<F, R>(
    f: &F,
    p: NoiseRate,
    tau: f64,
    delta: f64,
    c_q: f64,
    rng: &mut R,
) -> Result<ScoreVector>
where
    F: BooleanFunction + ?Sized,
    R: Rng + ?Sized,
{
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("accuracy {tau} outside (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("failure probability {delta} outside (0, 1)")));
    }
    estimate_scores_ln(f, p, tau, (1.0 / delta).ln(), c_q, rng)
}

/// [`estimate_scores_with`] taking `ln(1/delta)`.
pub fn estimate_scores_ln<F, R>(
    f: &F,
    p: NoiseRate,
    tau: f64,
    ln_inv_delta: f64,
    c_q: f64,
    rng: &mut R,
) -> Result<ScoreVector>
where
    F: BooleanFunction + ?Sized,
    R: Rng + ?Sized,
{
    if !(tau > 0.0 && tau < 1.0) {
        return Err(invalid(format!("accuracy {tau} outside (0, 1)")));
    }
    if !(ln_inv_delta > 0.0) {
        return Err(invalid("failure budget must be below 1"));
    }
    if !(c_q > 0.0 && c_q.is_finite()) {
        return Err(invalid(format!("sample constant {c_q} must be positive")));
    }
    let q = score_sample_count_ln(f.n(), tau, ln_inv_delta, c_q);
    Ok(mean_of_samples(f, p, q, rng))
}

/// Mean of `q` estimator runs, accumulated with integer counters: the sum
/// over samples of `eta_i` is `K - c * (K - D_i)` where `K` counts pairs
/// with `f(x) != f(y)` and `D_i` those among them with `x_i != y_i`.
pub(crate) fn mean_of_samples<F, R>(f: &F, p: NoiseRate, q: u64, rng: &mut R) -> ScoreVector
where
    F: BooleanFunction + ?Sized,
    R: Rng + ?Sized,
{
    let n = f.n();
    let mut x = Point::zeros(n);
    let mut y = Point::zeros(n);
    let mut disagree = 0u64;
    let mut differs = BitCounter::new(n);
    for _ in 0..q {
        x.randomize(rng);
        noisy_copy_into(&x, p, rng, &mut y);
        if f.eval(&x) == f.eval(&y) {
            continue;
        }
        disagree += 1;
        differs.add_xor(x.words(), y.words());
    }
    let differs = differs.finish();
    let c = p.agreement_weight();
    let k = disagree as f64;
    ScoreVector(
        differs
            .iter()
            .map(|&d| (k - c * (k - d as f64)) / q as f64)
            .collect(),
    )
}

const COUNTER_PLANES: usize = 8;

/// Per-bit counters over many words, kept bit-sliced: plane `b` of word `k`
/// holds bit `b` of the running count for each of its 64 positions.
struct BitCounter {
    n: usize,
    planes: Vec<u64>,
    pending: u32,
    counts: Vec<u64>,
}

impl BitCounter {
    fn new(n: usize) -> Self {
        BitCounter {
            n,
            planes: vec![0; n.div_ceil(64) * COUNTER_PLANES],
            pending: 0,
            counts: vec![0; n],
        }
    }

    fn add_xor(&mut self, a: &[u64], b: &[u64]) {
        for (k, (x, y)) in a.iter().zip(b).enumerate() {
            let mut carry = x ^ y;
            for plane in &mut self.planes[k * COUNTER_PLANES..(k + 1) * COUNTER_PLANES] {
                if carry == 0 {
                    break;
                }
                let next = *plane & carry;
                *plane ^= carry;
                carry = next;
            }
        }
        self.pending += 1;
        if self.pending == (1 << COUNTER_PLANES) - 1 {
            self.flush();
        }
    }

    fn flush(&mut self) {
        for (k, chunk) in self.planes.chunks_mut(COUNTER_PLANES).enumerate() {
            for (b, plane) in chunk.iter_mut().enumerate() {
                let mut w = *plane;
                while w != 0 {
                    self.counts[k * 64 + w.trailing_zeros() as usize] += 1 << b;
                    w &= w - 1;
                }
                *plane = 0;
            }
        }
        self.pending = 0;
    }

    fn finish(mut self) -> Vec<u64> {
        self.flush();
        debug_assert_eq!(self.counts.len(), self.n);
        self.counts
    }
}

fn tabulate<F: BooleanFunction + ?Sized>(f: &F) -> Vec<bool> {
    (0..1u64 << f.n())
        .map(|idx| f.eval(&Point::from_index(f.n(), idx)).bit())
        .collect()
}

/// Channel weight `Pr[y | x]` indexed by Hamming distance.
pub(crate) fn channel_weights(n: usize, p: f64) -> Vec<f64> {
    let flip = p / 2.0;
    (0..=n)
        .map(|h| flip.powi(h as i32) * (1.0 - flip).powi((n - h) as i32))
        .collect()
}

/// For each coordinate `i`, both sides of
/// `E_b[NS_p(f_{x_i=b})] = Pr[f(x) != f(y) and x_i = y_i] / (1 - p/2)`,
/// each computed by enumerating all `(x, y)` pairs with exact channel
/// weights. Requires `n <= 10`.
pub fn conditional_ns_identity_check<F>(f: &F, p: NoiseRate) -> Result<Vec<(f64, f64)>>
where
    F: BooleanFunction + ?Sized,
{
    let n = f.n();
    check_scale("n", n, IDENTITY_CHECK_MAX_N)?;
    let table = tabulate(f);
    let size = 1usize << n;
    let weights = channel_weights(n, p.value());
    let per_x = 1.0 / size as f64;

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let bit = 1usize << i;
        // Left side: the restriction f_{x_i=b} as an n-variable function in
        // which coordinate i is dead.
        let mut lhs = 0.0;
        for b in [false, true] {
            let g = |z: usize| table[if b { z | bit } else { z & !bit }];
            let mut ns = 0.0;
            for x in 0..size {
                for y in 0..size {
                    if g(x) != g(y) {
                        ns += per_x * weights[(x ^ y).count_ones() as usize];
                    }
                }
            }
            lhs += 0.5 * ns;
        }
        let mut joint = 0.0;
        for x in 0..size {
            for y in 0..size {
                if (x ^ y) & bit == 0 && table[x] != table[y] {
                    joint += per_x * weights[(x ^ y).count_ones() as usize];
                }
            }
        }
        out.push((lhs, joint * p.agreement_weight()));
    }
    Ok(out)
}
