//! Dense subsets of `F_p^n`, exact densities, sumsets, sum-free and
//! solution-free predicates, and the explicit constructions.

use std::fmt;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::coloring::{Coloring, ColoringDomain};
use crate::error::{Error, Result};
use crate::group::{inv_mod, GroupSpec, Point};
use crate::rational::Rational;
use crate::spectral;
use crate::subspace::{Coset, Subspace};

/// Subset of `F_p^n` stored as a bitset over element indices.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroupSet {
    spec: GroupSpec,
    words: Vec<u64>,
    card: u64,
}

impl fmt::Debug for GroupSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupSet(F_{}^{}, {:?})", self.spec.p(), self.spec.n(), self.points())
    }
}

fn word_count(order: u64) -> usize {
    order.div_ceil(64) as usize
}

/// Masks of bits whose index has bit `k` clear, for `k = 0..6`.
const SWAP_MASKS: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0F0F_0F0F_0F0F_0F0F,
    0x00FF_00FF_00FF_00FF,
    0x0000_FFFF_0000_FFFF,
    0x0000_0000_FFFF_FFFF,
];

/// Permutes the bits of `w` by `i ↦ i XOR t` (`t < 64`).
#[inline]
fn xor_permute(mut w: u64, t: u64) -> u64 {
    for (k, &m) in SWAP_MASKS.iter().enumerate() {
        if t >> k & 1 == 1 {
            let s = 1u32 << k;
            w = ((w & m) << s) | ((w >> s) & m);
        }
    }
    w
}

impl GroupSet {
    pub fn empty(spec: GroupSpec) -> Self {
        GroupSet {
            spec,
            words: vec![0; word_count(spec.order())],
            card: 0,
        }
    }

    pub fn full(spec: GroupSpec) -> Self {
        GroupSet::from_predicate(spec, |_| true)
    }

    pub fn from_predicate(spec: GroupSpec, mut f: impl FnMut(Point) -> bool) -> Self {
        let mut s = GroupSet::empty(spec);
        for x in spec.elements() {
            if f(x) {
                s.words[(x >> 6) as usize] |= 1 << (x & 63);
            }
        }
        s.recount();
        s
    }

    pub fn from_points(spec: GroupSpec, pts: impl IntoIterator<Item = Point>) -> Result<Self> {
        let mut s = GroupSet::empty(spec);
        for x in pts {
            spec.check(x)?;
            s.words[(x >> 6) as usize] |= 1 << (x & 63);
        }
        s.recount();
        Ok(s)
    }

    /// Bitset words, element `x` at bit `x % 64` of word `x / 64`.
    pub fn from_words(spec: GroupSpec, words: Vec<u64>) -> Result<Self> {
        let need = word_count(spec.order());
        if words.len() != need {
            return Err(Error::Format(format!(
                "mask length mismatch: {} words for {} elements",
                words.len(),
                spec.order()
            )));
        }
        let tail = spec.order() % 64;
        if tail != 0 && words[need - 1] >> tail != 0 {
            return Err(Error::Format("mask has stray bits beyond the group order".into()));
        }
        let mut s = GroupSet {
            spec,
            words,
            card: 0,
        };
        s.recount();
        Ok(s)
    }

    pub fn from_subspace(v: &Subspace) -> Self {
        GroupSet::from_points(v.spec(), v.elements()).expect("subspace elements lie in the group")
    }

    pub fn from_coset(c: &Coset) -> Self {
        GroupSet::from_points(c.base().spec(), c.elements()).expect("coset elements lie in the group")
    }

    fn recount(&mut self) {
        self.card = self.words.iter().map(|w| w.count_ones() as u64).sum();
    }

    #[inline]
    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    /// `|A|`.
    #[inline]
    pub fn card(&self) -> u64 {
        self.card
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.card == 0
    }

    #[inline]
    pub fn contains(&self, x: Point) -> bool {
        x < self.spec.order() && self.words[(x >> 6) as usize] >> (x & 63) & 1 == 1
    }

    pub fn insert(&mut self, x: Point) -> Result<bool> {
        self.spec.check(x)?;
        let w = &mut self.words[(x >> 6) as usize];
        let fresh = *w >> (x & 63) & 1 == 0;
        *w |= 1 << (x & 63);
        self.card += fresh as u64;
        Ok(fresh)
    }

    pub fn remove(&mut self, x: Point) -> bool {
        if !self.contains(x) {
            return false;
        }
        self.words[(x >> 6) as usize] &= !(1 << (x & 63));
        self.card -= 1;
        true
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = Point> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let base = (i as u64) << 6;
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(base + b)
            })
        })
    }

    /// Members `≥ start` in increasing order.
    pub fn iter_from(&self, start: Point) -> impl Iterator<Item = Point> + '_ {
        let first = (start >> 6) as usize;
        self.words.iter().enumerate().skip(first).flat_map(move |(i, &w)| {
            let base = (i as u64) << 6;
            let mut w = if i == first && start & 63 != 0 { w & (!0u64 << (start & 63)) } else { w };
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(base + b)
            })
        })
    }

    pub fn points(&self) -> Vec<Point> {
        self.iter().collect()
    }

    fn zip_words(&self, other: &GroupSet, f: impl Fn(u64, u64) -> u64) -> Result<GroupSet> {
        self.spec.same_as(&other.spec)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let mut s = GroupSet {
            spec: self.spec,
            words,
            card: 0,
        };
        s.recount();
        Ok(s)
    }

    pub fn union(&self, other: &GroupSet) -> Result<GroupSet> {
        self.zip_words(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &GroupSet) -> Result<GroupSet> {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &GroupSet) -> Result<GroupSet> {
        self.zip_words(other, |a, b| a & !b)
    }

    pub fn is_subset(&self, other: &GroupSet) -> bool {
        self.spec == other.spec && self.words.iter().zip(&other.words).all(|(&a, &b)| a & !b == 0)
    }

    pub fn complement(&self) -> GroupSet {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let tail = self.spec.order() % 64;
        if tail != 0 {
            let last = words.len() - 1;
            words[last] &= (1u64 << tail) - 1;
        }
        GroupSet {
            spec: self.spec,
            words,
            card: self.spec.order() - self.card,
        }
    }

    /// `A + t`.
    pub fn translate(&self, t: Point) -> GroupSet {
        if self.spec.is_binary() {
            let hi = (t >> 6) as usize;
            let lo = t & 63;
            let mut words = vec![0u64; self.words.len()];
            for (i, &w) in self.words.iter().enumerate() {
                if w != 0 {
                    words[i ^ hi] = xor_permute(w, lo);
                }
            }
            return GroupSet {
                spec: self.spec,
                words,
                card: self.card,
            };
        }
        let sp = self.spec;
        GroupSet::from_points(sp, self.iter().map(|x| sp.add(x, t))).expect("translate stays in group")
    }

    /// `−A`.
    pub fn negate(&self) -> GroupSet {
        if self.spec.is_binary() {
            return self.clone();
        }
        let sp = self.spec;
        GroupSet::from_points(sp, self.iter().map(|x| sp.neg(x))).expect("negation stays in group")
    }

    /// `|A ∩ V|`.
    pub fn count_in_subspace(&self, v: &Subspace) -> u64 {
        if v.dim() == v.spec().n() {
            return self.card;
        }
        if (self.card as u128) < v.size() as u128 {
            return self.iter().filter(|&x| v.contains(x)).count() as u64;
        }
        v.elements().into_iter().filter(|&x| self.contains(x)).count() as u64
    }

    /// `|A ∩ U|`.
    pub fn count_in_coset(&self, u: &Coset) -> u64 {
        if (self.card as u128) < u.size() as u128 {
            return self.iter().filter(|&x| u.contains(x)).count() as u64;
        }
        u.elements().into_iter().filter(|&x| self.contains(x)).count() as u64
    }

    /// `μ(A) = |A| / p^n`.
    pub fn mu(&self) -> Rational {
        Rational::new(self.card as u128, self.spec.order() as u128)
    }

    /// `|A ∩ X| / |X|`.
    pub fn density(&self, x: &GroupSet) -> Result<Rational> {
        self.spec.same_as(&x.spec)?;
        if x.is_empty() {
            return Err(Error::EmptySet("density reference set"));
        }
        let inter = self.intersection(x)?.card;
        Ok(Rational::new(inter as u128, x.card as u128))
    }

    /// `μ_V(A) = |A ∩ V| / |V|`.
    pub fn density_in(&self, v: &Subspace) -> Result<Rational> {
        self.spec.same_as(&v.spec())?;
        Ok(Rational::new(self.count_in_subspace(v) as u128, v.size() as u128))
    }

    /// `μ_U(A)` for a coset `U`.
    pub fn density_in_coset(&self, u: &Coset) -> Result<Rational> {
        self.spec.same_as(&u.base().spec())?;
        Ok(Rational::new(self.count_in_coset(u) as u128, u.size() as u128))
    }

    /// Counts `|A ∩ (g + V)|` for every coset, indexed by the digits of the
    /// canonical representative at the non-pivot columns.
    pub fn coset_counts(&self, v: &Subspace) -> Vec<u64> {
        let sp = self.spec;
        let free: Vec<u32> = (0..sp.n()).filter(|c| !v.pivots().contains(c)).collect();
        let mut counts = vec![0u64; sp.pow(free.len() as u32) as usize];
        for x in self.iter() {
            let rep = v.reduce(x);
            counts[quotient_index(sp, &free, rep) as usize] += 1;
        }
        counts
    }

    /// `μ*_V(A) = max_g |(g + V) ∩ A| / |V|`.
    pub fn maximal_density(&self, v: &Subspace) -> Result<MaxDensityResult> {
        self.spec.same_as(&v.spec())?;
        let sp = self.spec;
        let counts = self.coset_counts(v);
        let (best, &count) = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("at least one coset");
        let free: Vec<u32> = (0..sp.n()).filter(|c| !v.pivots().contains(c)).collect();
        let shift = if count == 0 { 0 } else { quotient_point(sp, &free, best as u64) };
        Ok(MaxDensityResult {
            value: Rational::new(count as u128, v.size() as u128),
            count,
            argmax_shift: shift,
        })
    }

    /// `A + B`. Uses the transform path for large groups.
    pub fn sumset(&self, other: &GroupSet) -> Result<GroupSet> {
        self.spec.same_as(&other.spec)?;
        let sp = self.spec;
        if self.is_empty() || other.is_empty() {
            return Ok(GroupSet::empty(sp));
        }
        if sp.order() >= spectral::FAST_PATH_ORDER {
            let counts = spectral::sum_counts(self, other)?;
            return Ok(GroupSet::from_predicate(sp, |x| counts.counts()[x as usize] > 0));
        }
        Ok(self.sumset_direct(other))
    }

    /// `A + B` by the double loop.
    pub fn sumset_direct(&self, other: &GroupSet) -> GroupSet {
        let sp = self.spec;
        let mut out = GroupSet::empty(sp);
        if sp.is_binary() {
            for a in self.iter() {
                let t = other.translate(a);
                for (o, w) in out.words.iter_mut().zip(&t.words) {
                    *o |= w;
                }
            }
            out.recount();
            return out;
        }
        for a in self.iter() {
            for b in other.iter() {
                let s = sp.add(a, b);
                out.words[(s >> 6) as usize] |= 1 << (s & 63);
            }
        }
        out.recount();
        out
    }

    /// `a · A` for a unit `a`.
    pub fn dilate(&self, a: u32) -> Result<GroupSet> {
        let sp = self.spec;
        if a.is_multiple_of(sp.p()) {
            return Err(Error::range("dilation factor", format!("{a} ≡ 0 mod {}", sp.p())));
        }
        GroupSet::from_points(sp, self.iter().map(|x| sp.scale(a, x)))
    }

    /// A triple `(x, y, x + y)` inside `A`, with `x ≠ y` when `p = 2`.
    pub fn sum_free_witness(&self) -> Option<(Point, Point, Point)> {
        let sp = self.spec;
        let pts = self.points();
        for (i, &x) in pts.iter().enumerate() {
            let rest = if sp.is_binary() { &pts[i + 1..] } else { &pts[i..] };
            for &y in rest {
                let z = sp.add(x, y);
                if self.contains(z) {
                    return Some((x, y, z));
                }
            }
        }
        None
    }

    pub fn is_sum_free(&self) -> bool {
        self.sum_free_witness().is_none()
    }

    /// Some `(x, y, z)` in `A` with `a(x − y) = b z`.
    pub fn solution_witness(&self, a: u32, b: u32) -> Option<(Point, Point, Point)> {
        let sp = self.spec;
        let binv = inv_mod(b % sp.p(), sp.p());
        for x in self.iter() {
            for y in self.iter() {
                let z = sp.scale(a * binv % sp.p(), sp.sub(x, y));
                if self.contains(z) {
                    return Some((x, y, z));
                }
            }
        }
        None
    }

    /// The first `(a, b) ∈ [1, p−1]²` (lexicographically) such that no
    /// `x, y, z ∈ A` satisfy `a(x − y) = b z`, if any.
    ///
    /// Only the ratio `c = a/b` matters, so each `c` is tested once against
    /// the difference set `A − A`.
    pub fn is_solution_free(&self) -> Option<(u32, u32)> {
        let sp = self.spec;
        let p = sp.p();
        if self.is_empty() {
            return Some((1, 1));
        }
        let diffs = self.sumset(&self.negate()).expect("same ambient");
        let ok: Vec<bool> = (0..p)
            .map(|c| {
                // z = c (x − y) ∈ A  ⇔  c⁻¹ z ∈ A − A.
                c != 0 && {
                    let cinv = inv_mod(c, p);
                    !self.iter().any(|z| diffs.contains(sp.scale(cinv, z)))
                }
            })
            .collect();
        for a in 1..p {
            for b in 1..p {
                if ok[(a * inv_mod(b, p) % p) as usize] {
                    return Some((a, b));
                }
            }
        }
        None
    }
}

fn quotient_index(sp: GroupSpec, free: &[u32], rep: Point) -> u64 {
    let p = sp.p() as u64;
    free.iter().fold(0u64, |acc, &c| acc * p + sp.digit(rep, c) as u64)
}

fn quotient_point(sp: GroupSpec, free: &[u32], idx: u64) -> Point {
    let p = sp.p() as u64;
    let mut idx = idx;
    let mut x = 0u64;
    for &c in free.iter().rev() {
        x += (idx % p) * sp.pow(sp.n() - 1 - c);
        idx /= p;
    }
    x
}

/// `μ*_V(S)` with the lexicographically least attaining coset representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxDensityResult {
    pub value: Rational,
    /// `|(g + V) ∩ S|` at the maximiser.
    pub count: u64,
    pub argmax_shift: Point,
}

/// A Hamming ball `{x : wt(x) ≤ w}` in `F_2^n`.
#[derive(Clone, Debug)]
pub struct NiveauSet {
    pub set: GroupSet,
    pub w: u32,
    /// `C_α` with `P(X < −C_α) = α` for standard normal `X`.
    pub c_alpha: f64,
}

/// `C_α = −Φ⁻¹(α)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::range("alpha", format!("{alpha} not in (0, 1)")));
    }
    let normal = Normal::standard();
    Ok(-normal.inverse_cdf(alpha))
}

/// Hamming ball of the smallest radius whose density reaches `alpha`.
pub fn niveau_set(n: u32, alpha: &Rational) -> Result<NiveauSet> {
    let half = Rational::new(1, 2);
    if *alpha.numer() == 0 || *alpha >= half {
        return Err(Error::range("alpha", "niveau sets need 0 < alpha < 1/2"));
    }
    let spec = GroupSpec::binary(n)?;
    let order = spec.order() as u128;
    let mut ball = 0u128;
    let mut binom = 1u128;
    let mut w = 0u32;
    loop {
        ball += binom;
        if ball * alpha.denom() >= *alpha.numer() * order {
            break;
        }
        binom = binom * (n - w) as u128 / (w + 1) as u128;
        w += 1;
    }
    let set = GroupSet::from_predicate(spec, |x| x.count_ones() <= w);
    Ok(NiveauSet {
        set,
        w,
        c_alpha: c_alpha(crate::rational::to_f64(alpha))?,
    })
}

/// Documented constant: the cover below has at most `3 · ln(p) · n` classes.
pub const DYADIC_COVER_CONSTANT: f64 = 3.0;

/// Residue intervals `I ⊆ [1, p−1]` with `(I + I) ∩ I = ∅` mod `p`,
/// covering `[1, p−1]`: dyadic blocks of `[1, (p−1)/2]` and their negatives.
pub fn dyadic_intervals(p: u32) -> Vec<Vec<u32>> {
    if p == 2 {
        return vec![vec![1]];
    }
    let half = (p - 1) / 2;
    let mut out = Vec::new();
    let mut lo = 1u32;
    while lo <= half {
        let hi = (2 * lo - 1).min(half);
        out.push((lo..=hi).collect());
        out.push((lo..=hi).map(|v| p - v).collect());
        lo *= 2;
    }
    out
}

/// Sum-free sets covering `F_p^n \ {0}`: for each coordinate `i` and each
/// interval `I` from [`dyadic_intervals`], the class `{x : x_i ∈ I}`.
/// Every class is re-verified before it is returned.
pub fn dyadic_sumfree_cover(p: u32, n: u32) -> Result<Vec<GroupSet>> {
    let spec = GroupSpec::new(p, n)?;
    let mut out = Vec::new();
    for i in 0..n {
        for interval in dyadic_intervals(p) {
            let class = GroupSet::from_predicate(spec, |x| interval.contains(&spec.digit(x, i)));
            if let Some((x, y, z)) = class.sum_free_witness() {
                return Err(Error::Certificate(format!(
                    "cover class for coordinate {i} is not sum-free: {x} + {y} = {z}"
                )));
            }
            out.push(class);
        }
    }
    let mut union = GroupSet::empty(spec);
    for c in &out {
        union = union.union(c)?;
    }
    if union.card() + 1 != spec.order() || union.contains(0) {
        return Err(Error::Certificate("dyadic classes do not cover the nonzero points".into()));
    }
    Ok(out)
}

/// 2-coloring of `F_3^n \ {0}`: color 1 when the first nonzero digit is 1,
/// color 2 when it is 2. Hence `C(v) ≠ C(2v)` for every `v ≠ 0`.
pub fn anti_doubling_coloring(n: u32) -> Result<Coloring> {
    let spec = GroupSpec::new(3, n)?;
    Coloring::from_fn(spec, 2, ColoringDomain::Points, |x| {
        spec.leading(x).map(|(_, d)| d as u8).unwrap_or(1)
    })
}
