//! Boolean-function oracles over `{-1,+1}^n` and the primitives every
//! algorithm queries through.

mod generate;
mod oracles;
mod point;

pub use generate::random_tree_instance;
pub use oracles::{Constant, CorruptedOracle, CountingOracle, Dictator, Majority, Parity};
pub use point::{Point, Sign, MAX_DIMENSION};

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{check_scale, invalid, Result};

/// Largest dimension for which distances are computed by enumeration.
pub const EXACT_DISTANCE_MAX_N: usize = 24;

/// Membership-query access to `f: {-1,+1}^n -> {-1,+1}`.
///
/// Implementations must be deterministic and safe to query from several
/// threads at once.
pub trait BooleanFunction: Send + Sync {
    fn n(&self) -> usize;

    /// Evaluates `f(x)`. Callers guarantee `x.n() == self.n()`; use
    /// [`BooleanFunction::query`] for a checked call.
    fn eval(&self, x: &Point) -> Sign;

    fn query(&self, x: &Point) -> Result<Sign> {
        if x.n() != self.n() {
            return Err(invalid(format!(
                "point has dimension {} but oracle expects {}",
                x.n(),
                self.n()
            )));
        }
        Ok(self.eval(x))
    }
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for &T {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn eval(&self, x: &Point) -> Sign {
        (**self).eval(x)
    }
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for Box<T> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn eval(&self, x: &Point) -> Sign {
        (**self).eval(x)
    }
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for Arc<T> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn eval(&self, x: &Point) -> Sign {
        (**self).eval(x)
    }
}

/// An ordered, duplicate-free list of fixed coordinates: the root-to-node
/// path defining a subfunction `f_v`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Restriction {
    assignments: Vec<(usize, Sign)>,
}

impl Restriction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_assignments(assignments: &[(usize, Sign)]) -> Result<Self> {
        let mut r = Self::new();
        for &(var, value) in assignments {
            r.push(var, value)?;
        }
        Ok(r)
    }

    pub fn push(&mut self, var: usize, value: Sign) -> Result<()> {
        if self.contains(var) {
            return Err(invalid(format!("variable x{} restricted twice", var + 1)));
        }
        self.assignments.push((var, value));
        Ok(())
    }

    /// Removes and returns the last assignment.
    pub fn pop(&mut self) -> Option<(usize, Sign)> {
        self.assignments.pop()
    }

    /// Copy extended by one assignment.
    pub fn with(&self, var: usize, value: Sign) -> Result<Self> {
        let mut r = self.clone();
        r.push(var, value)?;
        Ok(r)
    }

    pub fn contains(&self, var: usize) -> bool {
        self.value_of(var).is_some()
    }

    pub fn value_of(&self, var: usize) -> Option<Sign> {
        self.assignments
            .iter()
            .find(|(v, _)| *v == var)
            .map(|&(_, s)| s)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn assignments(&self) -> &[(usize, Sign)] {
        &self.assignments
    }

    pub fn apply(&self, x: &mut Point) {
        for &(var, value) in &self.assignments {
            x.set(var, value);
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.len() > n {
            return Err(invalid("restriction longer than the dimension"));
        }
        match self.assignments.iter().find(|(v, _)| *v >= n) {
            Some((v, _)) => Err(invalid(format!(
                "restricted variable x{} out of range for n = {n}",
                v + 1
            ))),
            None => Ok(()),
        }
    }
}

/// `f` with some coordinates forced; the dimension is unchanged and the
/// restricted coordinates of the input are ignored.
#[derive(Debug, Clone)]
pub struct Restricted<F> {
    inner: F,
    restriction: Restriction,
}

impl<F: BooleanFunction> Restricted<F> {
    pub fn restriction(&self) -> &Restriction {
        &self.restriction
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: BooleanFunction> BooleanFunction for Restricted<F> {
    fn n(&self) -> usize {
        self.inner.n()
    }

    fn eval(&self, x: &Point) -> Sign {
        if self.restriction.is_empty() {
            return self.inner.eval(x);
        }
        let mut y = x.clone();
        self.restriction.apply(&mut y);
        self.inner.eval(&y)
    }
}

pub fn restrict<F: BooleanFunction>(f: F, r: &Restriction) -> Result<Restricted<F>> {
    r.validate(f.n())?;
    Ok(Restricted {
        inner: f,
        restriction: r.clone(),
    })
}

/// Number of points where `f` and `g` differ, by enumeration.
pub fn exact_mismatches<F, G>(f: &F, g: &G) -> Result<u64>
where
    F: BooleanFunction + ?Sized,
    G: BooleanFunction + ?Sized,
{
    exact_mismatches_with_limit(f, g, EXACT_DISTANCE_MAX_N)
}

pub fn exact_mismatches_with_limit<F, G>(f: &F, g: &G, max_n: usize) -> Result<u64>
where
    F: BooleanFunction + ?Sized,
    G: BooleanFunction + ?Sized,
{
    let n = f.n();
    if n != g.n() {
        return Err(invalid(format!("dimension mismatch: {} vs {}", n, g.n())));
    }
    check_scale("n", n, max_n.min(63))?;
    let total = 1u64 << n;
    const CHUNK: u64 = 1 << 12;
    let chunks = total.div_ceil(CHUNK);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            (lo..hi)
                .filter(|&idx| {
                    let x = Point::from_index(n, idx);
                    f.eval(&x) != g.eval(&x)
                })
                .count() as u64
        })
        .sum())
}

/// `Pr_x[f(x) != g(x)]` under the uniform distribution, computed exactly
/// for `n <= 24`.
pub fn exact_distance<F, G>(f: &F, g: &G) -> Result<f64>
where
    F: BooleanFunction + ?Sized,
    G: BooleanFunction + ?Sized,
{
    let n = f.n();
    let m = exact_mismatches(f, g)?;
    Ok(m as f64 / (1u64 << n) as f64)
}

/// Mismatch fraction over `m` uniform points.
pub fn sampled_distance<F, G, R>(f: &F, g: &G, m: usize, rng: &mut R) -> Result<f64>
where
    F: BooleanFunction + ?Sized,
    G: BooleanFunction + ?Sized,
    R: Rng + ?Sized,
{
    if m == 0 {
        return Err(invalid("sample count must be at least 1"));
    }
    let n = f.n();
    if n != g.n() {
        return Err(invalid(format!("dimension mismatch: {} vs {}", n, g.n())));
    }
    let mut x = Point::zeros(n);
    let mut differ = 0usize;
    for _ in 0..m {
        x.randomize(rng);
        if f.eval(&x) != g.eval(&x) {
            differ += 1;
        }
    }
    Ok(differ as f64 / m as f64)
}

/// Sign of `E[f]` over all points, `sign(0) = +1`. Exhaustive.
pub fn exact_majority_sign<F: BooleanFunction + ?Sized>(f: &F) -> Result<Sign> {
    let neg = Constant::new(f.n(), Sign::Minus)?;
    let plus_count = exact_mismatches(f, &neg)?;
    let total = 1u64 << f.n();
    Ok(if 2 * plus_count >= total {
        Sign::Plus
    } else {
        Sign::Minus
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn query_checks_dimension() {
        let f = Constant::new(3, Sign::Plus).unwrap();
        assert!(f.query(&Point::zeros(4)).is_err());
        assert_eq!(f.query(&Point::zeros(3)).unwrap(), Sign::Plus);
    }

    #[test]
    fn dictator_projection() {
        let f = Dictator::new(3, 0).unwrap();
        let x = Point::from_signs(&[Sign::Plus, Sign::Minus, Sign::Minus]);
        assert_eq!(f.query(&x).unwrap(), Sign::Plus);
    }

    #[test]
    fn restriction_kills_dictator() {
        let f = Dictator::new(3, 0).unwrap();
        let r = Restriction::from_assignments(&[(0, Sign::Plus)]).unwrap();
        let g = restrict(&f, &r).unwrap();
        let one = Constant::new(3, Sign::Plus).unwrap();
        assert_eq!(exact_distance(&g, &one).unwrap(), 0.0);
    }

    #[test]
    fn restricted_parity_is_negated_dictator() {
        let f = Parity::new(2, vec![0, 1]).unwrap();
        let r = Restriction::from_assignments(&[(0, Sign::Minus)]).unwrap();
        let g = restrict(&f, &r).unwrap();
        for idx in 0..4 {
            let x = Point::from_index(2, idx);
            assert_eq!(g.eval(&x), -x.get(1));
        }
    }

    #[test]
    fn empty_restriction_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = Majority::new(20, vec![1, 4, 9]).unwrap();
        let g = restrict(&f, &Restriction::new()).unwrap();
        for _ in 0..100 {
            let x = Point::random(20, &mut rng);
            assert_eq!(f.eval(&x), g.eval(&x));
        }
    }

    #[test]
    fn restrict_rejects_bad_indices() {
        let f = Dictator::new(3, 0).unwrap();
        let r = Restriction::from_assignments(&[(5, Sign::Plus)]).unwrap();
        assert!(restrict(&f, &r).is_err());
        assert!(Restriction::from_assignments(&[(1, Sign::Plus), (1, Sign::Minus)]).is_err());
    }

    #[test]
    fn restrict_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = Parity::new(12, vec![0, 3, 5, 7]).unwrap();
        let a = Restriction::from_assignments(&[(3, Sign::Minus)]).unwrap();
        let b = Restriction::from_assignments(&[(7, Sign::Plus)]).unwrap();
        let ab = Restriction::from_assignments(&[(3, Sign::Minus), (7, Sign::Plus)]).unwrap();
        let nested = restrict(restrict(&f, &a).unwrap(), &b).unwrap();
        let flat = restrict(&f, &ab).unwrap();
        for _ in 0..100 {
            let x = Point::random(12, &mut rng);
            assert_eq!(nested.eval(&x), flat.eval(&x));
        }
    }

    #[test]
    fn distances_of_small_functions() {
        let x1 = Dictator::new(2, 0).unwrap();
        let par = Parity::new(2, vec![0, 1]).unwrap();
        assert_eq!(exact_distance(&x1, &x1).unwrap(), 0.0);
        assert_eq!(exact_distance(&x1, &par).unwrap(), 0.5);
        let plus = Constant::new(2, Sign::Plus).unwrap();
        let minus = Constant::new(2, Sign::Minus).unwrap();
        assert_eq!(exact_distance(&plus, &minus).unwrap(), 1.0);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sampled_distance(&x1, &x1, 50, &mut rng).unwrap(), 0.0);
        assert_eq!(sampled_distance(&plus, &minus, 50, &mut rng).unwrap(), 1.0);
        assert!(sampled_distance(&plus, &minus, 0, &mut rng).is_err());
    }

    #[test]
    fn exact_distance_scale_limit() {
        let f = Constant::new(30, Sign::Plus).unwrap();
        assert!(matches!(
            exact_distance(&f, &f),
            Err(crate::Error::UnsupportedScale { .. })
        ));
    }

    #[test]
    fn sampled_distance_dictator_vs_parity() {
        let f = Dictator::new(10, 0).unwrap();
        let g = Parity::new(10, vec![0, 1]).unwrap();
        let mut within = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = sampled_distance(&f, &g, 100_000, &mut rng).unwrap();
            if (d - 0.5).abs() <= 0.01 {
                within += 1;
            }
        }
        assert!(within >= 99, "{within}/100 within 0.01");
    }

    #[test]
    fn sampled_distance_is_unbiased() {
        let f = Majority::new(6, vec![0, 1, 2]).unwrap();
        let g = Parity::new(6, vec![1, 2]).unwrap();
        let exact = exact_distance(&f, &g).unwrap();
        let runs = 1000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mean: f64 = (0..runs)
            .map(|_| sampled_distance(&f, &g, 100, &mut rng).unwrap())
            .sum::<f64>()
            / runs as f64;
        let se = (exact * (1.0 - exact) / (100.0 * runs as f64)).sqrt();
        assert!((mean - exact).abs() <= 3.0 * se, "mean {mean} exact {exact}");
    }
}
