use std::fmt;
use std::ops::{Mul, Neg};

use rand::Rng;

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 1 << 20;

/// A value in `{-1,+1}`. Stored as a bit: `1 <-> +1`, `0 <-> -1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> i32 {
        match self {
            Sign::Minus => -1,
            Sign::Plus => 1,
        }
    }

    pub fn bit(self) -> bool {
        self == Sign::Plus
    }

    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    /// `+1` for positive input, `-1` otherwise.
    pub fn from_i32(v: i32) -> Self {
        Sign::from_bit(v > 0)
    }

    /// Rounds a mean to a sign with `sign(0) = +1`.
    pub fn of_mean(mean: f64) -> Self {
        Sign::from_bit(mean >= 0.0)
    }
}

impl Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        Sign::from_bit(!self.bit())
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        Sign::from_bit(self == rhs)
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.bit() { "+1" } else { "-1" })
    }
}

/// An assignment in `{-1,+1}^n`, bit-packed little-endian into `u64` words.
/// Bits at positions `>= n` are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point {
    n: usize,
    words: Vec<u64>,
}

pub(crate) fn word_count(n: usize) -> usize {
    n.div_ceil(64)
}

pub(crate) fn last_word_mask(n: usize) -> u64 {
    match n % 64 {
        0 => u64::MAX,
        r => (1u64 << r) - 1,
    }
}

impl Point {
    /// The all-`-1` point.
    ///
    /// Panics unless `1 <= n <= MAX_DIMENSION`.
    pub fn zeros(n: usize) -> Self {
        assert!(
            (1..=MAX_DIMENSION).contains(&n),
            "dimension {n} outside 1..={MAX_DIMENSION}"
        );
        Point {
            n,
            words: vec![0; word_count(n)],
        }
    }

    pub fn from_signs(signs: &[Sign]) -> Self {
        let mut p = Point::zeros(signs.len());
        for (i, &s) in signs.iter().enumerate() {
            p.set(i, s);
        }
        p
    }

    /// Point whose coordinate `i` is `+1` iff bit `i` of `index` is set.
    /// Requires `n <= 64`.
    pub fn from_index(n: usize, index: u64) -> Self {
        assert!(n <= 64, "from_index needs n <= 64");
        let mut p = Point::zeros(n);
        p.words[0] = index & last_word_mask(n);
        p
    }

    /// Inverse of [`Point::from_index`].
    pub fn index(&self) -> u64 {
        assert!(self.n <= 64, "index needs n <= 64");
        self.words[0]
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut p = Point::zeros(n);
        p.randomize(rng);
        p
    }

    /// Overwrites every coordinate with a fresh uniform sign.
    pub fn randomize<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for w in &mut self.words {
            *w = rng.next_u64();
        }
        let last = self.words.len() - 1;
        self.words[last] &= last_word_mask(self.n);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize) -> Sign {
        debug_assert!(i < self.n);
        Sign::from_bit((self.words[i / 64] >> (i % 64)) & 1 == 1)
    }

    pub fn set(&mut self, i: usize, s: Sign) {
        debug_assert!(i < self.n);
        let bit = 1u64 << (i % 64);
        if s.bit() {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.words[i / 64] ^= 1u64 << (i % 64);
    }

    pub fn to_signs(&self) -> Vec<Sign> {
        (0..self.n).map(|i| self.get(i)).collect()
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    /// Number of `+1` coordinates.
    pub fn count_plus(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sign_arithmetic() {
        assert_eq!(Sign::Plus * Sign::Minus, Sign::Minus);
        assert_eq!(Sign::Minus * Sign::Minus, Sign::Plus);
        assert_eq!(-Sign::Plus, Sign::Minus);
        assert_eq!(Sign::of_mean(0.0), Sign::Plus);
        assert_eq!(Sign::of_mean(-1e-9), Sign::Minus);
    }

    #[test]
    fn index_round_trip() {
        let p = Point::from_index(5, 0b10110);
        assert_eq!(p.get(0), Sign::Minus);
        assert_eq!(p.get(1), Sign::Plus);
        assert_eq!(p.index(), 0b10110);
        assert_eq!(Point::from_index(3, 0xff).index(), 0b111);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..300)) {
            let signs: Vec<Sign> = bits.iter().map(|&b| Sign::from_bit(b)).collect();
            let p = Point::from_signs(&signs);
            prop_assert_eq!(p.to_signs(), signs.clone());
            prop_assert_eq!(Point::from_signs(&p.to_signs()), p.clone());
            let tail = p.words().last().unwrap() & !last_word_mask(p.n());
            prop_assert_eq!(tail, 0);
        }
    }
}
