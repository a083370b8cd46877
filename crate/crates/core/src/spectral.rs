//! Exact convolution counts through character transforms.
//!
//! `conv_counts(A, B)[x] = #{(a, b) ∈ A × B : b − a = x}`, so that
//! `μ_A∘μ_B(x) = |G| · counts[x] / (|A||B|)` with
//! `f∘g(x) = (1/|G|) Σ_y f(y) g(x + y)`. Over `F_2` this is also the sum
//! count. `sum_counts` is the `a + b = x` variant used for sumsets.
//!
//! For `p = 2` the transform path is an exact integer Walsh–Hadamard
//! transform. For odd `p` it is a complex per-axis DFT whose output is
//! rounded and validated; if validation fails the direct count is used.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::group::GroupSpec;
use crate::rational::Rational;
use crate::set::GroupSet;
use crate::subspace::Subspace;

/// Groups of at least this order use the transform path.
pub const FAST_PATH_ORDER: u64 = 1 << 12;

/// Dense convolution counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvCounts {
    spec: GroupSpec,
    counts: Vec<u64>,
    card_a: u64,
    card_b: u64,
}

impl ConvCounts {
    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn card_a(&self) -> u64 {
        self.card_a
    }

    pub fn card_b(&self) -> u64 {
        self.card_b
    }

    /// `μ_A∘μ_B(x)` as an exact rational.
    pub fn mu_value(&self, x: u64) -> Result<Rational> {
        if self.card_a == 0 || self.card_b == 0 {
            return Err(Error::EmptySet("convolution operand"));
        }
        Ok(Rational::new(
            self.spec.order() as u128 * self.counts[x as usize] as u128,
            self.card_a as u128 * self.card_b as u128,
        ))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Difference,
    Sum,
}

fn counts_direct(a: &GroupSet, b: &GroupSet, kind: Kind) -> Vec<u64> {
    let sp = a.spec();
    let mut counts = vec![0u64; sp.order() as usize];
    let bs = b.points();
    for x in a.iter() {
        if sp.is_binary() {
            for &y in &bs {
                counts[(x ^ y) as usize] += 1;
            }
        } else {
            for &y in &bs {
                let z = match kind {
                    Kind::Difference => sp.sub(y, x),
                    Kind::Sum => sp.add(x, y),
                };
                counts[z as usize] += 1;
            }
        }
    }
    counts
}

trait Butterfly: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> {}
impl Butterfly for i64 {}
impl Butterfly for i128 {}
impl Butterfly for f64 {}

/// In-place unnormalised Walsh–Hadamard transform.
fn fwht<T: Butterfly>(v: &mut [T]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (s, t) = (*x, *y);
                *x = s + t;
                *y = s - t;
            }
        }
        h *= 2;
    }
}

fn binary_counts<T>(a: &GroupSet, b: &GroupSet, zero: T, one: T, to_u64: impl Fn(T) -> Option<u64>) -> Vec<u64>
where
    T: Butterfly + std::ops::Mul<Output = T> + std::ops::Div<Output = T> + From<i64>,
{
    let n = a.spec().order() as usize;
    let indicator = |s: &GroupSet| {
        let mut v = vec![zero; n];
        for x in s.iter() {
            v[x as usize] = one;
        }
        v
    };
    let mut fa = indicator(a);
    let mut fb = indicator(b);
    fwht(&mut fa);
    fwht(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * *y;
    }
    fwht(&mut fa);
    let scale = T::from(n as i64);
    fa.into_iter()
        .map(|v| to_u64(v / scale).expect("Walsh–Hadamard counts are nonnegative integers"))
        .collect()
}

/// Per-axis DFT with `ω = e^{−2πi/p}` (`sign = −1`) or its conjugate.
fn dft_axes(spec: GroupSpec, v: &mut [Complex64], sign: f64) {
    let p = spec.p() as usize;
    let roots: Vec<Complex64> = (0..p)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * std::f64::consts::PI * k as f64 / p as f64))
        .collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); p];
    let mut stride = 1usize;
    for _ in 0..spec.n() {
        let span = stride * p;
        for base in (0..v.len()).step_by(span) {
            for off in 0..stride {
                for (k, slot) in buf.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for j in 0..p {
                        acc += v[base + off + j * stride] * roots[(j * k) % p];
                    }
                    *slot = acc;
                }
                for (k, &val) in buf.iter().enumerate() {
                    v[base + off + k * stride] = val;
                }
            }
        }
        stride = span;
    }
}

fn general_counts(a: &GroupSet, b: &GroupSet, kind: Kind) -> Option<Vec<u64>> {
    let sp = a.spec();
    let n = sp.order() as usize;
    let indicator = |s: &GroupSet| {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for x in s.iter() {
            v[x as usize] = Complex64::new(1.0, 0.0);
        }
        v
    };
    let mut fa = indicator(a);
    let mut fb = indicator(b);
    dft_axes(sp, &mut fa, -1.0);
    dft_axes(sp, &mut fb, -1.0);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = match kind {
            Kind::Difference => x.conj() * y,
            Kind::Sum => *x * y,
        };
    }
    dft_axes(sp, &mut fa, 1.0);
    let mut out = Vec::with_capacity(n);
    let mut total = 0u64;
    for v in fa {
        let v = v / n as f64;
        let r = v.re.round();
        if (v.re - r).abs() >= 0.25 || v.im.abs() >= 0.25 || r < 0.0 {
            return None;
        }
        out.push(r as u64);
        total += r as u64;
    }
    (total == a.card() * b.card()).then_some(out)
}

fn counts_transform(a: &GroupSet, b: &GroupSet, kind: Kind) -> Vec<u64> {
    let sp = a.spec();
    if sp.is_binary() {
        if sp.n() <= 20 {
            return binary_counts::<i64>(a, b, 0, 1, |v| u64::try_from(v).ok());
        }
        return binary_counts::<i128>(a, b, 0, 1, |v| u64::try_from(v).ok());
    }
    general_counts(a, b, kind).unwrap_or_else(|| counts_direct(a, b, kind))
}

fn build(a: &GroupSet, b: &GroupSet, kind: Kind, path: Option<bool>) -> Result<ConvCounts> {
    a.spec().same_as(&b.spec())?;
    let sp = a.spec();
    let fast = path.unwrap_or(sp.order() >= FAST_PATH_ORDER);
    let counts = if fast {
        counts_transform(a, b, kind)
    } else {
        counts_direct(a, b, kind)
    };
    Ok(ConvCounts {
        spec: sp,
        counts,
        card_a: a.card(),
        card_b: b.card(),
    })
}

/// Difference counts `#{(a, b) : b − a = x}`, path chosen by group size.
pub fn conv_counts(a: &GroupSet, b: &GroupSet) -> Result<ConvCounts> {
    build(a, b, Kind::Difference, None)
}

/// [`conv_counts`] forced through the double loop.
pub fn conv_counts_direct(a: &GroupSet, b: &GroupSet) -> Result<ConvCounts> {
    build(a, b, Kind::Difference, Some(false))
}

/// [`conv_counts`] forced through the transform.
pub fn conv_counts_transform(a: &GroupSet, b: &GroupSet) -> Result<ConvCounts> {
    build(a, b, Kind::Difference, Some(true))
}

/// Sum counts `#{(a, b) : a + b = x}`.
pub fn sum_counts(a: &GroupSet, b: &GroupSet) -> Result<ConvCounts> {
    build(a, b, Kind::Sum, None)
}

/// [`sum_counts`] forced through the double loop.
pub fn sum_counts_direct(a: &GroupSet, b: &GroupSet) -> Result<ConvCounts> {
    build(a, b, Kind::Sum, Some(false))
}

/// `2 |G|³ cnt ≥ |A|² |V|²`, i.e. `μ_A∘μ_A(v) ≥ ½ μ(V)²`, in integers.
///
/// Both sides stay below `2^128` whenever `|G| ≤ 2^31`.
#[inline]
pub fn is_popular(order: u64, card_a: u64, dim_size: u64, cnt: u64) -> bool {
    let g = order as u128;
    let lhs = 2u128.saturating_mul(g * g).saturating_mul(g).saturating_mul(cnt as u128);
    let rhs = (card_a as u128 * card_a as u128).saturating_mul(dim_size as u128 * dim_size as u128);
    lhs >= rhs
}

/// `D = {v ∈ V : μ_A∘μ_A(v) ≥ ½ μ(V)²}` from precomputed `A∘A` counts.
pub fn popular_from_counts(cc: &ConvCounts, v: &Subspace) -> Result<GroupSet> {
    cc.spec.same_as(&v.spec())?;
    if cc.card_a == 0 {
        return Err(Error::EmptySet("A"));
    }
    let order = cc.spec.order();
    let size = v.size();
    GroupSet::from_points(
        cc.spec,
        v.elements()
            .into_iter()
            .filter(|&x| is_popular(order, cc.card_a, size, cc.counts[x as usize])),
    )
}

/// `D = {v ∈ V : μ_A∘μ_A(v) ≥ ½ μ(V)²}`, decided in exact integers.
pub fn popular_difference_set(a: &GroupSet, v: &Subspace) -> Result<GroupSet> {
    if a.is_empty() {
        return Err(Error::EmptySet("A"));
    }
    popular_from_counts(&conv_counts(a, a)?, v)
}

/// `⟨μ_A∘μ_A, μ_C⟩ = E_x[μ_A∘μ_A(x) μ_C(x)] = |G| Σ_{x∈C} cnt(x) / (|A|² |C|)`.
pub fn inner_product_mu(a: &GroupSet, c: &GroupSet) -> Result<Rational> {
    a.spec().same_as(&c.spec())?;
    if a.is_empty() {
        return Err(Error::EmptySet("A"));
    }
    if c.is_empty() {
        return Err(Error::EmptySet("C"));
    }
    let cc = conv_counts(a, a)?;
    let mass: u128 = c.iter().map(|x| cc.counts[x as usize] as u128).sum();
    Ok(Rational::new(
        a.spec().order() as u128 * mass,
        a.card() as u128 * a.card() as u128 * c.card() as u128,
    ))
}

/// Character transform of a real function on `F_p^n`.
///
/// `F(k) = Σ_x f(x) ω^{k·x}` with `ω = e^{−2πi/p}` (for `p = 2`, the
/// Walsh–Hadamard transform). The inverse divides by `p^n`, and
/// `F(f * g) = F(f) F(g)` for the sum convolution `(f * g)(x) = Σ_y f(y) g(x − y)`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    spec: GroupSpec,
    coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    /// Pointwise product, the transform of the sum convolution.
    pub fn multiply(&self, other: &Spectrum) -> Result<Spectrum> {
        self.spec.same_as(&other.spec)?;
        Ok(Spectrum {
            spec: self.spec,
            coefficients: self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a * b).collect(),
        })
    }

    /// Real part of the inverse transform.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.coefficients.len() as f64;
        if self.spec.is_binary() {
            let mut v: Vec<f64> = self.coefficients.iter().map(|c| c.re).collect();
            fwht(&mut v);
            return v.into_iter().map(|x| x / n).collect();
        }
        let mut v = self.coefficients.clone();
        dft_axes(self.spec, &mut v, 1.0);
        v.into_iter().map(|c| c.re / n).collect()
    }
}

pub fn transform(spec: GroupSpec, f: &[f64]) -> Result<Spectrum> {
    if f.len() as u64 != spec.order() {
        return Err(Error::range(
            "transform input",
            format!("length {} but p^n = {}", f.len(), spec.order()),
        ));
    }
    let coefficients = if spec.is_binary() {
        let mut v = f.to_vec();
        fwht(&mut v);
        v.into_iter().map(|x| Complex64::new(x, 0.0)).collect()
    } else {
        let mut v: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        dft_axes(spec, &mut v, -1.0);
        v
    };
    Ok(Spectrum { spec, coefficients })
}

/// Walsh coefficients `Â(f) = Σ_{x∈A} (−1)^{f·x}` of an `F_2^n` set, exactly.
pub fn walsh_coefficients(a: &GroupSet) -> Vec<i64> {
    debug_assert!(a.spec().is_binary());
    let mut v = vec![0i64; a.spec().order() as usize];
    for x in a.iter() {
        v[x as usize] = 1;
    }
    fwht(&mut v);
    v
}
