use std::sync::atomic::{AtomicU64, Ordering};

use super::point::{word_count, MAX_DIMENSION};
use super::{BooleanFunction, Point, Sign};
use crate::error::{invalid, Result};

fn check_n(n: usize) -> Result<()> {
    if !(1..=MAX_DIMENSION).contains(&n) {
        return Err(invalid(format!("dimension {n} outside 1..={MAX_DIMENSION}")));
    }
    Ok(())
}

fn variable_mask(n: usize, vars: &[usize]) -> Result<Vec<u64>> {
    check_n(n)?;
    let mut mask = vec![0u64; word_count(n)];
    for &v in vars {
        if v >= n {
            return Err(invalid(format!("variable x{} out of range for n = {n}", v + 1)));
        }
        let bit = 1u64 << (v % 64);
        if mask[v / 64] & bit != 0 {
            return Err(invalid(format!("variable x{} listed twice", v + 1)));
        }
        mask[v / 64] |= bit;
    }
    Ok(mask)
}

fn count_plus(x: &Point, mask: &[u64]) -> u32 {
    x.words()
        .iter()
        .zip(mask)
        .map(|(w, m)| (w & m).count_ones())
        .sum()
}

#[derive(Debug, Clone)]
pub struct Constant {
    n: usize,
    value: Sign,
}

impl Constant {
    pub fn new(n: usize, value: Sign) -> Result<Self> {
        check_n(n)?;
        Ok(Constant { n, value })
    }
}

impl BooleanFunction for Constant {
    fn n(&self) -> usize {
        self.n
    }
    fn eval(&self, _x: &Point) -> Sign {
        self.value
    }
}

/// `f(x) = x_var`.
#[derive(Debug, Clone)]
pub struct Dictator {
    n: usize,
    var: usize,
}

impl Dictator {
    pub fn new(n: usize, var: usize) -> Result<Self> {
        check_n(n)?;
        if var >= n {
            return Err(invalid(format!("variable x{} out of range for n = {n}", var + 1)));
        }
        Ok(Dictator { n, var })
    }
}

impl BooleanFunction for Dictator {
    fn n(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &Point) -> Sign {
        x.get(self.var)
    }
}

/// Product of the listed coordinates.
#[derive(Debug, Clone)]
pub struct Parity {
    n: usize,
    k: u32,
    mask: Vec<u64>,
}

impl Parity {
    pub fn new(n: usize, vars: Vec<usize>) -> Result<Self> {
        let mask = variable_mask(n, &vars)?;
        Ok(Parity {
            n,
            k: vars.len() as u32,
            mask,
        })
    }
}

impl BooleanFunction for Parity {
    fn n(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &Point) -> Sign {
        let minus = self.k - count_plus(x, &self.mask);
        Sign::from_bit(minus.is_multiple_of(2))
    }
}

/// Sign of the sum of the listed coordinates, ties to `+1`.
#[derive(Debug, Clone)]
pub struct Majority {
    n: usize,
    k: u32,
    mask: Vec<u64>,
}

impl Majority {
    pub fn new(n: usize, vars: Vec<usize>) -> Result<Self> {
        if vars.is_empty() {
            return Err(invalid("majority needs at least one variable"));
        }
        let mask = variable_mask(n, &vars)?;
        Ok(Majority {
            n,
            k: vars.len() as u32,
            mask,
        })
    }
}

impl BooleanFunction for Majority {
    fn n(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &Point) -> Sign {
        Sign::from_bit(2 * count_plus(x, &self.mask) >= self.k)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `base` with its output flipped on a pseudorandom set of points of
/// density `rate`. Membership of `x` is a fixed function of `(seed, x)`.
#[derive(Debug, Clone)]
pub struct CorruptedOracle<F> {
    base: F,
    rate: f64,
    seed: u64,
    threshold: u64,
}

impl<F: BooleanFunction> CorruptedOracle<F> {
    pub fn new(base: F, rate: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(invalid(format!("corruption rate {rate} outside [0, 1]")));
        }
        // A point is corrupted iff its 64-bit hash is below `threshold`;
        // rate 1 is handled separately since 2^64 does not fit.
        let threshold = (rate * 18_446_744_073_709_551_616.0).min(u64::MAX as f64) as u64;
        Ok(CorruptedOracle {
            base,
            rate,
            seed,
            threshold,
        })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn base(&self) -> &F {
        &self.base
    }

    pub fn is_corrupted(&self, x: &Point) -> bool {
        if self.rate >= 1.0 {
            return true;
        }
        let mut h = splitmix64(self.seed ^ (x.n() as u64).rotate_left(32));
        for &w in x.words() {
            h = splitmix64(h ^ w);
        }
        h < self.threshold
    }
}

impl<F: BooleanFunction> BooleanFunction for CorruptedOracle<F> {
    fn n(&self) -> usize {
        self.base.n()
    }
    fn eval(&self, x: &Point) -> Sign {
        let v = self.base.eval(x);
        if self.is_corrupted(x) {
            -v
        } else {
            v
        }
    }
}

/// Transparent wrapper counting every query. The counter is atomic, so
/// concurrent callers' counts sum correctly.
#[derive(Debug)]
pub struct CountingOracle<F> {
    inner: F,
    count: AtomicU64,
}

impl<F: BooleanFunction> CountingOracle<F> {
    pub fn new(inner: F) -> Self {
        CountingOracle {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn queries(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) -> u64 {
        self.count.swap(0, Ordering::Relaxed)
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }

    pub fn into_inner(self) -> F {
        self.inner
    }
}

impl<F: BooleanFunction> BooleanFunction for CountingOracle<F> {
    fn n(&self) -> usize {
        self.inner.n()
    }
    fn eval(&self, x: &Point) -> Sign {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolfn::exact_mismatches;

    #[test]
    fn constant_and_dictator() {
        let c = Constant::new(4, Sign::Plus).unwrap();
        let d = Dictator::new(4, 2).unwrap();
        for idx in 0..16 {
            let x = Point::from_index(4, idx);
            assert_eq!(c.eval(&x), Sign::Plus);
            assert_eq!(d.eval(&x), x.get(2));
        }
        assert!(Dictator::new(4, 4).is_err());
        assert!(Constant::new(0, Sign::Plus).is_err());
    }

    #[test]
    fn parity_and_majority_truth_tables() {
        let p = Parity::new(3, vec![0, 2]).unwrap();
        let m = Majority::new(3, vec![0, 1, 2]).unwrap();
        for idx in 0..8 {
            let x = Point::from_index(3, idx);
            let prod = x.get(0).value() * x.get(2).value();
            assert_eq!(p.eval(&x).value(), prod);
            let sum: i32 = (0..3).map(|i| x.get(i).value()).sum();
            assert_eq!(m.eval(&x), Sign::from_i32(sum));
        }
        assert!(Parity::new(3, vec![1, 1]).is_err());
    }

    #[test]
    fn zero_corruption_is_identity() {
        let base = Dictator::new(10, 0).unwrap();
        let f = CorruptedOracle::new(base.clone(), 0.0, 99).unwrap();
        assert_eq!(exact_mismatches(&f, &base).unwrap(), 0);
        let all = CorruptedOracle::new(base.clone(), 1.0, 99).unwrap();
        assert_eq!(exact_mismatches(&all, &base).unwrap(), 1 << 10);
        assert!(CorruptedOracle::new(base, 1.5, 0).is_err());
    }

    #[test]
    fn corruption_rate_within_binomial_window() {
        let n = 16;
        let total = (1u64 << n) as f64;
        for (k, &rho) in [0.01, 0.05, 0.2, 0.5].iter().enumerate() {
            let base = Parity::new(n, vec![0, 1]).unwrap();
            let f = CorruptedOracle::new(base.clone(), rho, 1234 + k as u64).unwrap();
            let d = exact_mismatches(&f, &base).unwrap() as f64 / total;
            let window = 3.0 * (rho * (1.0 - rho) / total).sqrt();
            assert!((d - rho).abs() <= window, "rho {rho}: measured {d}");
        }
    }

    #[test]
    fn counting_is_transparent() {
        let f = CountingOracle::new(Dictator::new(5, 1).unwrap());
        for idx in 0..32 {
            let x = Point::from_index(5, idx);
            assert_eq!(f.eval(&x), x.get(1));
        }
        assert_eq!(f.queries(), 32);
        assert_eq!(f.reset(), 32);
        assert_eq!(f.queries(), 0);
    }

    #[test]
    fn counting_across_threads() {
        let f = CountingOracle::new(Constant::new(8, Sign::Minus).unwrap());
        std::thread::scope(|s| {
            for t in 0..4 {
                let f = &f;
                s.spawn(move || {
                    for idx in 0..250 {
                        f.eval(&Point::from_index(8, (idx + t) % 256));
                    }
                });
            }
        });
        assert_eq!(f.queries(), 1000);
    }
}
