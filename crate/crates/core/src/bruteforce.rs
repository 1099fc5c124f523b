//! Exact, exhaustive counterparts of the randomized algorithms: truth
//! tables, the Walsh-Hadamard spectrum, exact noise sensitivity and scores,
//! the distance to the best size-`s` tree, and the canonical top-down tree
//! built from exact scores.

use rand::Rng;

use crate::boolfn::{BooleanFunction, Point, Restriction, Sign};
use crate::error::{check_scale, invalid, Result};
use crate::estimators::{channel_weights, NoiseRate};
use crate::trees::DecisionTree;

pub const TRUTH_TABLE_MAX_N: usize = 24;
pub const OPT_MAX_N: usize = 12;
pub const OPT_MAX_S: usize = 16;
pub const TOPDOWN_MAX_N: usize = 16;
pub const ENUMERATION_MAX_N: usize = 8;

/// All `2^n` values of a function; index bit `i` is coordinate `i`
/// (`1 <-> +1`). `n = 0` denotes a constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthTable {
    n: usize,
    values: Vec<bool>,
}

impl TruthTable {
    pub fn from_values(n: usize, values: Vec<bool>) -> Result<Self> {
        check_scale("n", n, TRUTH_TABLE_MAX_N)?;
        if values.len() != 1 << n {
            return Err(invalid(format!(
                "truth table of {} entries for n = {n}",
                values.len()
            )));
        }
        Ok(TruthTable { n, values })
    }

    pub fn from_function<F: BooleanFunction + ?Sized>(f: &F) -> Result<Self> {
        let n = f.n();
        check_scale("n", n, TRUTH_TABLE_MAX_N)?;
        let values = (0..1u64 << n)
            .map(|idx| f.eval(&Point::from_index(n, idx)).bit())
            .collect();
        Ok(TruthTable { n, values })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        check_scale("n", n, TRUTH_TABLE_MAX_N)?;
        Ok(TruthTable {
            n,
            values: (0..1usize << n).map(|_| rng.random()).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Sign {
        Sign::from_bit(self.values[index])
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn plus_count(&self) -> usize {
        self.values.iter().filter(|&&b| b).count()
    }

    /// `E[f]`.
    pub fn mean(&self) -> f64 {
        (2.0 * self.plus_count() as f64 - self.len() as f64) / self.len() as f64
    }

    /// `sign(E[f])` with `sign(0) = +1`.
    pub fn majority(&self) -> Sign {
        Sign::from_bit(2 * self.plus_count() >= self.len())
    }

    /// The subfunction with `x_var` fixed, on the remaining `n - 1`
    /// variables (higher indices shift down by one).
    pub fn restrict_var(&self, var: usize, value: Sign) -> TruthTable {
        assert!(var < self.n);
        let low = (1usize << var) - 1;
        let fixed = if value.bit() { 1usize << var } else { 0 };
        let values = (0..1usize << (self.n - 1))
            .map(|z| self.values[((z & !low) << 1) | fixed | (z & low)])
            .collect();
        TruthTable {
            n: self.n - 1,
            values,
        }
    }

    /// The subfunction `f_r` kept as an `n`-variable table with the
    /// restricted coordinates dead.
    pub fn restricted(&self, r: &Restriction) -> Result<TruthTable> {
        r.validate(self.n)?;
        let (mask, vals) = r.assignments().iter().fold((0, 0), |(m, v), &(var, s)| {
            (m | 1usize << var, v | (s.bit() as usize) << var)
        });
        let values = (0..self.len())
            .map(|z| self.values[(z & !mask) | vals])
            .collect();
        Ok(TruthTable { n: self.n, values })
    }
}

impl BooleanFunction for TruthTable {
    fn n(&self) -> usize {
        self.n
    }

    fn eval(&self, x: &Point) -> Sign {
        Sign::from_bit(self.values[x.index() as usize])
    }
}

/// Fourier coefficients `f^(S)` indexed by subset bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coefficients: Vec<f64>,
}

impl FourierSpectrum {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, subset: usize) -> f64 {
        self.coefficients[subset]
    }

    /// `sum_S f^(S)^2`.
    pub fn total_weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    /// Inverse transform back to `{-1,+1}` values. Fails if the spectrum is
    /// not that of a boolean function (to within `1e-6`).
    pub fn inverse(&self) -> Result<TruthTable> {
        let mut v = self.coefficients.clone();
        orient(&mut v);
        butterfly(&mut v);
        let values = v
            .iter()
            .map(|&y| {
                if (y - 1.0).abs() < 1e-6 {
                    Ok(true)
                } else if (y + 1.0).abs() < 1e-6 {
                    Ok(false)
                } else {
                    Err(invalid(format!("spectrum inverts to non-boolean value {y}")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        TruthTable::from_values(self.n, values)
    }
}

fn butterfly(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (a, b) = block.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (s, d) = (*x + *y, *x - *y);
                *x = s;
                *y = d;
            }
        }
        h *= 2;
    }
}

/// The butterfly computes characters with bit 1 read as `-1`; stored bit 1
/// is `+1`, so odd-size subsets change sign.
fn orient(v: &mut [f64]) {
    for (subset, c) in v.iter_mut().enumerate() {
        if subset.count_ones() % 2 == 1 {
            *c = -*c;
        }
    }
}

/// Fast Walsh-Hadamard transform: `f^(S) = E_x[f(x) prod_{i in S} x_i]`.
pub fn wht(t: &TruthTable) -> FourierSpectrum {
    let mut v: Vec<f64> = t
        .values
        .iter()
        .map(|&b| if b { 1.0 } else { -1.0 })
        .collect();
    butterfly(&mut v);
    let scale = 1.0 / v.len() as f64;
    v.iter_mut().for_each(|c| *c *= scale);
    orient(&mut v);
    FourierSpectrum {
        n: t.n,
        coefficients: v,
    }
}

fn ns_from_spectrum(spec: &FourierSpectrum, p: f64) -> f64 {
    let keep: Vec<f64> = (0..=spec.n).map(|k| (1.0 - p).powi(k as i32)).collect();
    0.5 * spec
        .coefficients
        .iter()
        .enumerate()
        .map(|(s, c)| (1.0 - keep[s.count_ones() as usize]) * c * c)
        .sum::<f64>()
}

/// `NS_p(f) = 1/2 sum_S (1 - (1-p)^|S|) f^(S)^2`.
pub fn exact_ns(t: &TruthTable, p: NoiseRate) -> f64 {
    ns_from_spectrum(&wht(t), p.value())
}

/// `Score_i(f,p) = NS_p(f) - E_b[NS_p(f_{x_i=b})]` via two restricted
/// noise sensitivities.
pub fn exact_score(t: &TruthTable, p: NoiseRate, i: usize) -> Result<f64> {
    if i >= t.n {
        return Err(invalid(format!("variable x{} out of range for n = {}", i + 1, t.n)));
    }
    let minus = exact_ns(&t.restrict_var(i, Sign::Minus), p);
    let plus = exact_ns(&t.restrict_var(i, Sign::Plus), p);
    Ok(exact_ns(t, p) - 0.5 * (minus + plus))
}

/// All scores from one spectrum:
/// `Score_i = 1/2 sum_{S containing i} p (1-p)^{|S|-1} f^(S)^2`.
pub fn fourier_scores(t: &TruthTable, p: NoiseRate) -> Vec<f64> {
    let spec = wht(t);
    let p = p.value();
    let weight: Vec<f64> = (0..=t.n)
        .map(|k| if k == 0 { 0.0 } else { 0.5 * p * (1.0 - p).powi(k as i32 - 1) })
        .collect();
    let mut scores = vec![0.0; t.n];
    for (s, c) in spec.coefficients.iter().enumerate() {
        if s == 0 || *c == 0.0 {
            continue;
        }
        let w = weight[s.count_ones() as usize] * c * c;
        let mut bits = s;
        while bits != 0 {
            scores[bits.trailing_zeros() as usize] += w;
            bits &= bits - 1;
        }
    }
    scores
}

/// Exact expectation of the two-query estimator, by enumerating every
/// `(x, y)` pair with its channel weight. `n <= 8`.
pub fn enumerated_estimator_mean(t: &TruthTable, p: NoiseRate) -> Result<Vec<f64>> {
    let n = t.n;
    check_scale("n", n, ENUMERATION_MAX_N)?;
    let size = 1usize << n;
    let weights = channel_weights(n, p.value());
    let c = p.agreement_weight();
    let per_x = 1.0 / size as f64;
    let mut mean = vec![0.0; n];
    for x in 0..size {
        for y in 0..size {
            if t.values[x] == t.values[y] {
                continue;
            }
            let diff = x ^ y;
            let w = per_x * weights[diff.count_ones() as usize];
            for (i, m) in mean.iter_mut().enumerate() {
                let eta = if diff >> i & 1 == 0 { 1.0 - c } else { 1.0 };
                *m += w * eta;
            }
        }
    }
    Ok(mean)
}

/// Minimum-mismatch table over all subcubes: `best(r, k)` is the fewest
/// points of subcube `r` on which any tree with at most `k` leaves can
/// disagree with `f`.
///
/// Subcubes are indexed in base 3, digit `i` being 0 (free), 1 (`x_i=-1`)
/// or 2 (`x_i=+1`).
#[derive(Debug, Clone)]
pub struct OptTable {
    n: usize,
    max_size: usize,
    pow3: Vec<usize>,
    plus: Vec<u32>,
    best: Vec<u32>,
}

impl OptTable {
    pub fn new(t: &TruthTable, max_size: usize) -> Result<Self> {
        let n = t.n;
        check_scale("n", n, OPT_MAX_N)?;
        check_scale("s", max_size, OPT_MAX_S)?;
        if max_size == 0 {
            return Err(invalid("tree size must be at least 1"));
        }
        let pow3: Vec<usize> = (0..=n).map(|i| 3usize.pow(i as u32)).collect();
        let states = pow3[n];
        let row = max_size + 1;
        let mut plus = vec![0u32; states];
        let mut best = vec![0u32; states * row];
        let mut free = Vec::with_capacity(n);
        for idx in (0..states).rev() {
            free.clear();
            let mut point = 0usize;
            let mut rest = idx;
            for i in 0..n {
                match rest % 3 {
                    0 => free.push(i),
                    2 => point |= 1 << i,
                    _ => {}
                }
                rest /= 3;
            }
            let size = 1u32 << free.len();
            plus[idx] = match free.first() {
                None => t.values[point] as u32,
                Some(&i) => plus[idx + pow3[i]] + plus[idx + 2 * pow3[i]],
            };
            let base = idx * row;
            best[base + 1] = plus[idx].min(size - plus[idx]);
            for k in 2..=max_size {
                let mut b = best[base + k - 1];
                for &i in &free {
                    let lo = (idx + pow3[i]) * row;
                    let hi = (idx + 2 * pow3[i]) * row;
                    for k0 in 1..k {
                        b = b.min(best[lo + k0] + best[hi + k - k0]);
                    }
                }
                best[base + k] = b;
            }
        }
        Ok(OptTable {
            n,
            max_size,
            pow3,
            plus,
            best,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn state_of(&self, r: &Restriction) -> Result<usize> {
        r.validate(self.n)?;
        Ok(r.assignments()
            .iter()
            .map(|&(var, s)| self.pow3[var] * (1 + s.bit() as usize))
            .sum())
    }

    fn free_count(&self, mut idx: usize) -> usize {
        (0..self.n)
            .filter(|_| {
                let d = idx % 3;
                idx /= 3;
                d == 0
            })
            .count()
    }

    fn check_size(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.max_size {
            return Err(invalid(format!(
                "size {k} outside 1..={} for this table",
                self.max_size
            )));
        }
        Ok(())
    }

    /// Fewest mismatching points within subcube `r` for trees of at most
    /// `k` leaves.
    pub fn best_mismatches(&self, r: &Restriction, k: usize) -> Result<u32> {
        self.check_size(k)?;
        Ok(self.best[self.state_of(r)? * (self.max_size + 1) + k])
    }

    /// `opt_k(f_r)` as a fraction of the subcube.
    pub fn best_distance(&self, r: &Restriction, k: usize) -> Result<f64> {
        let m = self.best_mismatches(r, k)?;
        Ok(m as f64 / (1u64 << (self.n - r.len())) as f64)
    }

    /// `sign(E[f_r])`, `sign(0) = +1`.
    pub fn majority(&self, r: &Restriction) -> Result<Sign> {
        let idx = self.state_of(r)?;
        let size = 1u64 << self.free_count(idx);
        Ok(Sign::from_bit(2 * self.plus[idx] as u64 >= size))
    }

    /// One optimal tree for subcube `r` with at most `k` leaves.
    pub fn witness(&self, r: &Restriction, k: usize) -> Result<DecisionTree> {
        self.check_size(k)?;
        Ok(self.witness_at(self.state_of(r)?, k))
    }

    fn witness_at(&self, idx: usize, k: usize) -> DecisionTree {
        let row = self.max_size + 1;
        let base = idx * row;
        let mut k = k;
        while k > 1 && self.best[base + k] == self.best[base + k - 1] {
            k -= 1;
        }
        if k == 1 {
            let size = 1u64 << self.free_count(idx);
            return DecisionTree::leaf(self.n, Sign::from_bit(2 * self.plus[idx] as u64 >= size));
        }
        let target = self.best[base + k];
        let mut rest = idx;
        for i in 0..self.n {
            let digit = rest % 3;
            rest /= 3;
            if digit != 0 {
                continue;
            }
            let lo = idx + self.pow3[i];
            let hi = idx + 2 * self.pow3[i];
            for k0 in 1..k {
                if self.best[lo * row + k0] + self.best[hi * row + k - k0] == target {
                    return DecisionTree::split(i, self.witness_at(lo, k0), self.witness_at(hi, k - k0));
                }
            }
        }
        unreachable!("optimal value {target} has no witness split");
    }
}

/// Distance from `f` to the closest tree with at most `s` leaves, and one
/// such tree. `n <= 12`, `s <= 16`.
pub fn exact_opt(t: &TruthTable, s: usize) -> Result<(f64, DecisionTree)> {
    let table = OptTable::new(t, s)?;
    let root = Restriction::new();
    Ok((table.best_distance(&root, s)?, table.witness(&root, s)?))
}

/// Complete depth-`d` tree querying, at every node `v`, the free variable
/// maximizing the exact `Score_i(f_v, p)` (lowest index among values within
/// `1e-12` of the maximum); leaves are labeled `sign(E[f_leaf])`.
pub fn exact_topdown_tree(t: &TruthTable, d: usize, p: NoiseRate) -> Result<DecisionTree> {
    check_scale("n", t.n, TOPDOWN_MAX_N)?;
    if d > t.n {
        return Err(invalid(format!("depth {d} exceeds n = {}", t.n)));
    }
    let vars: Vec<usize> = (0..t.n).collect();
    Ok(topdown(t, &vars, d, p, t.n))
}

fn topdown(t: &TruthTable, vars: &[usize], d: usize, p: NoiseRate, n: usize) -> DecisionTree {
    if d == 0 || t.n == 0 {
        return DecisionTree::leaf(n, t.majority());
    }
    let scores = fourier_scores(t, p);
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let local = scores
        .iter()
        .position(|&s| s >= max - 1e-12)
        .expect("at least one free variable");
    let rest: Vec<usize> = vars
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != local)
        .map(|(_, &v)| v)
        .collect();
    let left = topdown(&t.restrict_var(local, Sign::Minus), &rest, d - 1, p, n);
    let right = topdown(&t.restrict_var(local, Sign::Plus), &rest, d - 1, p, n);
    DecisionTree::split(vars[local], left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::{exact_distance, random_tree_instance, Constant, Dictator, Parity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table<F: BooleanFunction>(f: F) -> TruthTable {
        TruthTable::from_function(&f).unwrap()
    }

    fn half() -> NoiseRate {
        NoiseRate::new(0.5).unwrap()
    }

    #[test]
    fn spectra_of_characters() {
        let c = wht(&table(Constant::new(3, Sign::Plus).unwrap()));
        assert_eq!(c.coefficient(0), 1.0);
        assert!(c.coefficients()[1..].iter().all(|&x| x == 0.0));
        let d = wht(&table(Dictator::new(3, 0).unwrap()));
        assert_eq!(d.coefficient(0b001), 1.0);
        let p = wht(&table(Parity::new(3, vec![0, 1]).unwrap()));
        assert_eq!(p.coefficient(0b011), 1.0);
        assert_eq!(p.total_weight(), 1.0);
    }

    #[test]
    fn inverse_recovers_table_and_parseval_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [0, 1, 5, 10] {
            let t = TruthTable::random(n, &mut rng).unwrap();
            let s = wht(&t);
            assert!((s.total_weight() - 1.0).abs() < 1e-9);
            assert_eq!(s.inverse().unwrap(), t);
        }
    }

    #[test]
    fn noise_sensitivity_examples() {
        for p in [0.1, 0.5, 0.9] {
            let p = NoiseRate::new(p).unwrap();
            assert_eq!(exact_ns(&table(Constant::new(4, Sign::Minus).unwrap()), p), 0.0);
        }
        let d = exact_ns(&table(Dictator::new(4, 0).unwrap()), half());
        assert!((d - 0.25).abs() < 1e-12);
        let par = exact_ns(&table(Parity::new(4, vec![0, 1]).unwrap()), half());
        assert!((par - 0.375).abs() < 1e-12);
    }

    #[test]
    fn score_examples() {
        let d = table(Dictator::new(2, 0).unwrap());
        assert!((exact_score(&d, half(), 0).unwrap() - 0.25).abs() < 1e-12);
        assert!(exact_score(&d, half(), 1).unwrap().abs() < 1e-12);
        let par = table(Parity::new(2, vec![0, 1]).unwrap());
        assert!((exact_score(&par, half(), 0).unwrap() - 0.125).abs() < 1e-12);
        let c = table(Constant::new(3, Sign::Plus).unwrap());
        assert!((0..3).all(|i| exact_score(&c, half(), i).unwrap() == 0.0));
        assert!(exact_score(&c, half(), 3).is_err());
    }

    #[test]
    fn fourier_and_restriction_routes_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let t = TruthTable::random(7, &mut rng).unwrap();
            for p in [0.1, 0.5, 0.9] {
                let p = NoiseRate::new(p).unwrap();
                let f = fourier_scores(&t, p);
                for (i, fi) in f.iter().enumerate() {
                    let e = exact_score(&t, p, i).unwrap();
                    assert!((fi - e).abs() < 1e-12, "{fi} vs {e}");
                    assert!(e >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn enumerated_mean_dictator() {
        let t = table(Dictator::new(2, 0).unwrap());
        let m = enumerated_estimator_mean(&t, half()).unwrap();
        assert!((m[0] - 0.25).abs() < 1e-12);
        assert!(m[1].abs() < 1e-12);
    }

    #[test]
    fn restrict_var_shifts_indices() {
        let t = table(Dictator::new(3, 2).unwrap());
        let r = t.restrict_var(0, Sign::Plus);
        assert_eq!(r, table(Dictator::new(2, 1).unwrap()));
        let dead = t.restricted(&Restriction::from_assignments(&[(2, Sign::Minus)]).unwrap()).unwrap();
        assert_eq!(dead, table(Constant::new(3, Sign::Minus).unwrap()));
    }

    #[test]
    fn opt_of_realizable_tree_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for s in [2, 4, 8] {
            let tree = random_tree_instance(8, s, &mut rng).unwrap();
            let t = table(tree);
            let (d, witness) = exact_opt(&t, s).unwrap();
            assert_eq!(d, 0.0);
            assert!(witness.size() <= s);
            assert_eq!(exact_distance(&witness, &t).unwrap(), 0.0);
        }
    }

    #[test]
    fn opt_one_is_minority_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let t = TruthTable::random(8, &mut rng).unwrap();
            let plus = t.plus_count() as f64 / 256.0;
            let (d, w) = exact_opt(&t, 1).unwrap();
            assert_eq!(d, plus.min(1.0 - plus));
            assert_eq!(w.size(), 1);
        }
    }

    #[test]
    fn opt_monotone_and_witness_matches_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = TruthTable::random(6, &mut rng).unwrap();
        let table = OptTable::new(&t, 10).unwrap();
        let root = Restriction::new();
        let mut last = f64::INFINITY;
        for k in 1..=10 {
            let d = table.best_distance(&root, k).unwrap();
            assert!(d <= last);
            last = d;
            let w = table.witness(&root, k).unwrap();
            assert!(w.size() <= k);
            assert_eq!(exact_distance(&w, &t).unwrap(), d);
        }
    }

    #[test]
    fn opt_scale_limits() {
        let t = TruthTable::random(13, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(exact_opt(&t, 2).is_err());
        let t = TruthTable::random(4, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(exact_opt(&t, 17).is_err());
        assert!(exact_opt(&t, 0).is_err());
    }

    #[test]
    fn topdown_examples() {
        let d = table(Dictator::new(4, 0).unwrap());
        let tree = exact_topdown_tree(&d, 1, half()).unwrap();
        assert_eq!(tree.serialize(), "(x1 L -1 L +1)");
        let c = table(Constant::new(4, Sign::Minus).unwrap());
        let tree = exact_topdown_tree(&c, 3, half()).unwrap();
        assert!(tree.leaves().all(|(_, s)| s == Sign::Minus));
        assert_eq!(tree.size(), 8);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_tree_instance(10, 8, &mut rng).unwrap();
        let t = table(&f);
        let tree = exact_topdown_tree(&t, 10, half()).unwrap();
        assert_eq!(exact_distance(&tree, &f).unwrap(), 0.0);
        assert!(exact_topdown_tree(&t, 11, half()).is_err());
    }
}
