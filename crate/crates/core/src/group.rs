//! The ambient group `F_p^n`.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Default ceiling on `p^n` for anything that allocates a dense array
/// indexed by group elements.
pub const DEFAULT_ORDER_CAP: u64 = 1 << 28;

/// A group element, encoded as `Σ x_i p^{n-1-i}`.
///
/// Coordinate 0 is the most significant digit, so comparing two points as
/// integers compares their digit sequences lexicographically. For `p = 2`
/// the encoding is the bit mask with coordinate `i` at bit `n-1-i`.
pub type Point = u64;

/// The group `F_p^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct GroupSpec {
    p: u32,
    n: u32,
    order: u64,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    p: u32,
    n: u32,
}

impl TryFrom<RawSpec> for GroupSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        GroupSpec::new(raw.p, raw.n)
    }
}

impl From<GroupSpec> for RawSpec {
    fn from(g: GroupSpec) -> Self {
        RawSpec { p: g.p, n: g.n }
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl GroupSpec {
    pub fn new(p: u32, n: u32) -> Result<Self> {
        Self::with_cap(p, n, DEFAULT_ORDER_CAP)
    }

    pub fn binary(n: u32) -> Result<Self> {
        Self::new(2, n)
    }

    /// Builds `F_p^n`, refusing groups whose order exceeds `cap`.
    pub fn with_cap(p: u32, n: u32, cap: u64) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        let mut order: u64 = 1;
        for _ in 0..n {
            order = match order.checked_mul(p as u64) {
                Some(o) if o <= cap => o,
                _ => return Err(Error::TooLarge { p, n, cap }),
            };
        }
        if order > cap {
            return Err(Error::TooLarge { p, n, cap });
        }
        Ok(GroupSpec { p, n, order })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    /// `p^n`.
    #[inline]
    pub fn order(&self) -> u64 {
        self.order
    }

    #[inline]
    pub fn is_binary(&self) -> bool {
        self.p == 2
    }

    /// Number of projective points (1-dimensional subspaces).
    pub fn projective_points(&self) -> u64 {
        (self.order - 1) / (self.p as u64 - 1)
    }

    #[inline]
    pub fn contains(&self, x: Point) -> bool {
        x < self.order
    }

    pub fn check(&self, x: Point) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::NotInGroup {
                element: x,
                p: self.p,
                n: self.n,
            })
        }
    }

    pub fn same_as(&self, other: &GroupSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::AmbientMismatch {
                left_p: self.p,
                left_n: self.n,
                right_p: other.p,
                right_n: other.n,
            })
        }
    }

    /// `p^k` as u64 (k ≤ n).
    #[inline]
    pub fn pow(&self, k: u32) -> u64 {
        (self.p as u64).pow(k)
    }

    #[inline]
    pub fn add(&self, x: Point, y: Point) -> Point {
        if self.p == 2 {
            return x ^ y;
        }
        let p = self.p as u64;
        let (mut a, mut b, mut m, mut r) = (x, y, 1u64, 0u64);
        for _ in 0..self.n {
            r += ((a % p + b % p) % p) * m;
            a /= p;
            b /= p;
            m *= p;
        }
        r
    }

    #[inline]
    pub fn neg(&self, x: Point) -> Point {
        if self.p == 2 {
            return x;
        }
        let p = self.p as u64;
        let (mut a, mut m, mut r) = (x, 1u64, 0u64);
        for _ in 0..self.n {
            r += ((p - a % p) % p) * m;
            a /= p;
            m *= p;
        }
        r
    }

    #[inline]
    pub fn sub(&self, x: Point, y: Point) -> Point {
        if self.p == 2 {
            return x ^ y;
        }
        self.add(x, self.neg(y))
    }

    /// `c · x` for a scalar `c` (reduced mod p).
    #[inline]
    pub fn scale(&self, c: u32, x: Point) -> Point {
        let c = (c % self.p) as u64;
        if self.p == 2 {
            return if c == 0 { 0 } else { x };
        }
        let p = self.p as u64;
        let (mut a, mut m, mut r) = (x, 1u64, 0u64);
        for _ in 0..self.n {
            r += ((a % p) * c % p) * m;
            a /= p;
            m *= p;
        }
        r
    }

    /// Standard bilinear form `Σ x_i y_i mod p`.
    #[inline]
    pub fn dot(&self, x: Point, y: Point) -> u32 {
        if self.p == 2 {
            return (x & y).count_ones() & 1;
        }
        let p = self.p as u64;
        let (mut a, mut b, mut s) = (x, y, 0u64);
        for _ in 0..self.n {
            s += (a % p) * (b % p);
            a /= p;
            b /= p;
        }
        (s % p) as u32
    }

    /// Digit of `x` at coordinate `i` (0 = most significant).
    #[inline]
    pub fn digit(&self, x: Point, i: u32) -> u32 {
        if self.p == 2 {
            return ((x >> (self.n - 1 - i)) & 1) as u32;
        }
        ((x / self.pow(self.n - 1 - i)) % self.p as u64) as u32
    }

    pub fn digits(&self, x: Point) -> Vec<u8> {
        (0..self.n).map(|i| self.digit(x, i) as u8).collect()
    }

    pub fn from_digits(&self, digits: &[u8]) -> Result<Point> {
        if digits.len() != self.n as usize {
            return Err(Error::range(
                "digit vector",
                format!("length {} but n = {}", digits.len(), self.n),
            ));
        }
        let mut x = 0u64;
        for &d in digits {
            if d as u32 >= self.p {
                return Err(Error::range(
                    "digit",
                    format!("{d} is not a residue mod {}", self.p),
                ));
            }
            x = x * self.p as u64 + d as u64;
        }
        Ok(x)
    }

    /// First nonzero coordinate of `x` and its digit.
    pub fn leading(&self, x: Point) -> Option<(u32, u32)> {
        if x == 0 {
            return None;
        }
        if self.p == 2 {
            let col = self.n - 1 - (63 - x.leading_zeros());
            return Some((col, 1));
        }
        (0..self.n)
            .map(|i| (i, self.digit(x, i)))
            .find(|&(_, d)| d != 0)
    }

    /// Canonical generator of the line through `x`: leading digit scaled to 1.
    pub fn projective_rep(&self, x: Point) -> Option<Point> {
        let (_, lead) = self.leading(x)?;
        Some(self.scale(inv_mod(lead, self.p), x))
    }

    /// Iterator over every element, in increasing order.
    pub fn elements(&self) -> std::ops::Range<Point> {
        0..self.order
    }
}

/// Multiplicative inverse of `a` modulo the prime `p` (a ≠ 0 mod p).
pub fn inv_mod(a: u32, p: u32) -> u32 {
    let a = a % p;
    debug_assert!(a != 0);
    let (mut base, mut e, mut acc) = (a as u64, p as u64 - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p as u64;
        }
        base = base * base % p as u64;
        e >>= 1;
    }
    acc as u32
}

/// `𝓛(a)`: the least integer `m ≥ 1` with `2^m · a ≥ 1`.
pub fn ell(a: f64) -> Result<u32> {
    if !a.is_finite() || a <= 0.0 {
        return Err(Error::range("ell argument", format!("{a} is not positive")));
    }
    let mut m = 1u32;
    let mut scaled = 2.0 * a;
    while scaled < 1.0 {
        m += 1;
        scaled *= 2.0;
    }
    Ok(m)
}

/// [`ell`] on an exact rational.
pub fn ell_rational(a: &Rational) -> Result<u32> {
    if *a.numer() == 0 {
        return Err(Error::range("ell argument", "0 is not positive"));
    }
    let (num, den) = (*a.numer(), *a.denom());
    let mut m = 1u32;
    let mut scaled = num.saturating_mul(2);
    while scaled < den {
        m += 1;
        scaled = scaled.saturating_mul(2);
    }
    Ok(m)
}

/// `a` paired with `𝓛(a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lvalue {
    pub a: f64,
    pub m: u32,
}

impl Lvalue {
    pub fn new(a: f64) -> Result<Self> {
        Ok(Lvalue { a, m: ell(a)? })
    }
}

/// Gaussian binomial `[n choose k]_p`: the number of `k`-dimensional
/// subspaces of `F_p^n`.
pub fn gaussian_binomial(n: u32, k: u32, p: u32) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let q = BigUint::from(p);
    let one = BigUint::from(1u32);
    let mut num = BigUint::from(1u32);
    let mut den = BigUint::from(1u32);
    for i in 0..k {
        num *= q.pow(n - i) - &one;
        den *= q.pow(i + 1) - &one;
    }
    num / den
}

/// [`gaussian_binomial`] as `u128`, or `None` when it does not fit.
pub fn gaussian_binomial_u128(n: u32, k: u32, p: u32) -> Option<u128> {
    u128::try_from(gaussian_binomial(n, k, p)).ok()
}
