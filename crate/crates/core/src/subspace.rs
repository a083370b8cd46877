//! Linear subspaces of `F_p^n` in reduced row echelon form, their cosets,
//! enumeration, uniform sampling and induced coordinates.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{inv_mod, GroupSpec, Point};

/// A subspace stored by its RREF basis.
///
/// Rows are ordered by strictly increasing pivot column (coordinate 0
/// first), every pivot entry is 1 and every pivot column is zero in the
/// other rows. Equal subspaces therefore have identical `basis` vectors,
/// which makes `Eq`/`Hash` structural.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    spec: GroupSpec,
    basis: Vec<Point>,
    pivots: Vec<u32>,
}

impl Subspace {
    /// `{0}`.
    pub fn zero(spec: GroupSpec) -> Self {
        Subspace {
            spec,
            basis: Vec::new(),
            pivots: Vec::new(),
        }
    }

    /// The whole group.
    pub fn whole(spec: GroupSpec) -> Self {
        let basis = (0..spec.n()).map(|i| spec.pow(spec.n() - 1 - i)).collect();
        Subspace {
            spec,
            basis,
            pivots: (0..spec.n()).collect(),
        }
    }

    /// Canonical span of `vs`.
    pub fn span(spec: GroupSpec, vs: &[Point]) -> Result<Self> {
        for &v in vs {
            spec.check(v)?;
        }
        Ok(if spec.is_binary() {
            rref_binary(spec, vs)
        } else {
            rref_general(spec, vs)
        })
    }

    /// Wraps rows already known to be in RREF.
    pub(crate) fn from_rref(spec: GroupSpec, basis: Vec<Point>) -> Self {
        let pivots = basis
            .iter()
            .map(|&r| spec.leading(r).expect("nonzero RREF row").0)
            .collect();
        let s = Subspace {
            spec,
            basis,
            pivots,
        };
        debug_assert!(s.is_rref());
        s
    }

    fn is_rref(&self) -> bool {
        let sp = &self.spec;
        self.pivots.windows(2).all(|w| w[0] < w[1])
            && self.basis.iter().enumerate().all(|(i, &r)| {
                sp.leading(r) == Some((self.pivots[i], 1))
                    && self
                        .pivots
                        .iter()
                        .enumerate()
                        .all(|(j, &c)| j == i || sp.digit(r, c) == 0)
            })
    }

    #[inline]
    pub fn spec(&self) -> GroupSpec {
        self.spec
    }

    #[inline]
    pub fn dim(&self) -> u32 {
        self.basis.len() as u32
    }

    #[inline]
    pub fn codim(&self) -> u32 {
        self.spec.n() - self.dim()
    }

    /// RREF rows; this is the canonical encoding.
    #[inline]
    pub fn basis(&self) -> &[Point] {
        &self.basis
    }

    #[inline]
    pub fn pivots(&self) -> &[u32] {
        &self.pivots
    }

    /// `p^dim`.
    #[inline]
    pub fn size(&self) -> u64 {
        self.spec.pow(self.dim())
    }

    /// Bit mask of the pivot positions (`p = 2` only).
    pub fn pivot_mask(&self) -> u64 {
        debug_assert!(self.spec.is_binary());
        self.basis.iter().map(|&r| 1u64 << (63 - r.leading_zeros())).fold(0, |a, b| a | b)
    }

    /// Lexicographically least element of `x + self`.
    #[inline]
    pub fn reduce(&self, x: Point) -> Point {
        let sp = &self.spec;
        if sp.is_binary() {
            let mut x = x;
            for &r in &self.basis {
                let lead = 1u64 << (63 - r.leading_zeros());
                if x & lead != 0 {
                    x ^= r;
                }
            }
            return x;
        }
        let mut x = x;
        for (i, &r) in self.basis.iter().enumerate() {
            let t = sp.digit(x, self.pivots[i]);
            if t != 0 {
                x = sp.sub(x, sp.scale(t, r));
            }
        }
        x
    }

    #[inline]
    pub fn contains(&self, x: Point) -> bool {
        self.spec.contains(x) && self.reduce(x) == 0
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        self.spec == other.spec && other.basis.iter().all(|&b| self.contains(b))
    }

    /// Every element, in increasing order of coefficient vector.
    pub fn elements(&self) -> Vec<Point> {
        let sp = &self.spec;
        let mut out = Vec::with_capacity(self.size() as usize);
        out.push(0);
        // Build by appending multiples of each row, last row varying fastest.
        for &r in self.basis.iter().rev() {
            let len = out.len();
            let mut multiple = r;
            for _ in 1..sp.p() {
                for j in 0..len {
                    out.push(sp.add(out[j], multiple));
                }
                multiple = sp.add(multiple, r);
            }
        }
        out
    }

    /// `self + other`.
    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.spec.same_as(&other.spec)?;
        let mut vs = self.basis.clone();
        vs.extend_from_slice(&other.basis);
        Subspace::span(self.spec, &vs)
    }

    /// `span(self ∪ {x})`.
    pub fn extend(&self, x: Point) -> Result<Subspace> {
        let mut vs = self.basis.clone();
        vs.push(x);
        Subspace::span(self.spec, &vs)
    }

    /// `{f : f·v = 0 for all v ∈ self}` under the standard bilinear form.
    pub fn annihilator(&self) -> Subspace {
        let sp = self.spec;
        let n = sp.n();
        let p = sp.p();
        let mut out = Vec::with_capacity((n - self.dim()) as usize);
        let mut is_pivot = vec![false; n as usize];
        for &c in &self.pivots {
            is_pivot[c as usize] = true;
        }
        for f in 0..n {
            if is_pivot[f as usize] {
                continue;
            }
            let mut x = sp.pow(n - 1 - f);
            for (i, &r) in self.basis.iter().enumerate() {
                let entry = sp.digit(r, f);
                if entry != 0 {
                    let val = (p - entry) % p;
                    x = sp.add(x, sp.scale(val, sp.pow(n - 1 - self.pivots[i])));
                }
            }
            out.push(x);
        }
        Subspace::span(sp, &out).expect("annihilator rows lie in the group")
    }

    /// `self ∩ other`, computed as the annihilator of `ann(self) + ann(other)`.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.spec.same_as(&other.spec)?;
        let both = self.annihilator().sum(&other.annihilator())?;
        Ok(both.annihilator())
    }

    /// Coordinates identifying `self` with `F_p^{dim}`.
    pub fn induced_coordinates(&self) -> InducedCoordinates {
        InducedCoordinates::new(self.clone())
    }

    /// Lexicographic comparison of canonical encodings.
    pub fn cmp_encoding(&self, other: &Subspace) -> Ordering {
        self.basis.cmp(&other.basis)
    }
}

fn rref_binary(spec: GroupSpec, vs: &[Point]) -> Subspace {
    let mut rows: Vec<Point> = Vec::new();
    for &v in vs {
        let mut x = v;
        for &r in &rows {
            let lead = 1u64 << (63 - r.leading_zeros());
            if x & lead != 0 {
                x ^= r;
            }
        }
        if x != 0 {
            let pos = rows.partition_point(|&r| r.leading_zeros() < x.leading_zeros());
            rows.insert(pos, x);
        }
    }
    for i in (0..rows.len()).rev() {
        let lead = 1u64 << (63 - rows[i].leading_zeros());
        for j in 0..i {
            if rows[j] & lead != 0 {
                rows[j] ^= rows[i];
            }
        }
    }
    Subspace::from_rref(spec, rows)
}

fn rref_general(spec: GroupSpec, vs: &[Point]) -> Subspace {
    let p = spec.p();
    let n = spec.n() as usize;
    let mut m: Vec<Vec<u32>> = vs
        .iter()
        .map(|&v| spec.digits(v).into_iter().map(u32::from).collect())
        .collect();
    let mut rank = 0usize;
    for col in 0..n {
        let Some(piv) = (rank..m.len()).find(|&i| m[i][col] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = inv_mod(m[rank][col], p);
        for x in m[rank].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..m.len() {
            if i != rank && m[i][col] != 0 {
                let f = m[i][col];
                for c in 0..n {
                    m[i][c] = (m[i][c] + (p - f) * m[rank][c]) % p;
                }
            }
        }
        rank += 1;
    }
    m.truncate(rank);
    let basis = m
        .iter()
        .map(|row| row.iter().fold(0u64, |acc, &d| acc * p as u64 + d as u64))
        .collect();
    Subspace::from_rref(spec, basis)
}

/// A coset `rep + base` with `rep` the lexicographically least element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Coset {
    base: Subspace,
    rep: Point,
}

impl Coset {
    pub fn new(base: Subspace, x: Point) -> Result<Self> {
        base.spec().check(x)?;
        let rep = base.reduce(x);
        Ok(Coset { base, rep })
    }

    pub fn base(&self) -> &Subspace {
        &self.base
    }

    pub fn rep(&self) -> Point {
        self.rep
    }

    pub fn contains(&self, x: Point) -> bool {
        self.base.spec().contains(x) && self.base.reduce(x) == self.rep
    }

    pub fn size(&self) -> u64 {
        self.base.size()
    }

    pub fn elements(&self) -> Vec<Point> {
        let sp = self.base.spec();
        self.base
            .elements()
            .into_iter()
            .map(|v| sp.add(self.rep, v))
            .collect()
    }
}

/// Group isomorphism between a subspace `V` and `F_p^{dim V}`.
///
/// `forward` reads the digits of `x ∈ V` at the pivot columns, which are
/// exactly its coefficients in the RREF basis; `backward` recombines them.
/// Both maps preserve the lexicographic order.
#[derive(Clone, Debug)]
pub struct InducedCoordinates {
    subspace: Subspace,
    induced: GroupSpec,
}

impl InducedCoordinates {
    pub fn new(subspace: Subspace) -> Self {
        let sp = subspace.spec();
        let induced = GroupSpec::with_cap(sp.p(), subspace.dim(), u64::MAX)
            .expect("subgroup of a valid group");
        InducedCoordinates { subspace, induced }
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    /// `F_p^{dim V}`.
    pub fn induced_spec(&self) -> GroupSpec {
        self.induced
    }

    /// Coordinates of `x`, or `None` when `x ∉ V`.
    pub fn forward(&self, x: Point) -> Option<Point> {
        if !self.subspace.contains(x) {
            return None;
        }
        Some(self.forward_unchecked(x))
    }

    /// Coordinates of `x`, assuming `x ∈ V`.
    #[inline]
    pub fn forward_unchecked(&self, x: Point) -> Point {
        let sp = self.subspace.spec();
        let p = sp.p() as u64;
        let mut y = 0u64;
        if sp.is_binary() {
            let n = sp.n();
            for &c in self.subspace.pivots() {
                y = (y << 1) | ((x >> (n - 1 - c)) & 1);
            }
            return y;
        }
        for &c in self.subspace.pivots() {
            y = y * p + sp.digit(x, c) as u64;
        }
        y
    }

    /// Element of `V` with coordinates `y`.
    pub fn backward(&self, y: Point) -> Point {
        let sp = self.subspace.spec();
        let m = self.induced.n();
        let mut x = 0u64;
        for (i, &r) in self.subspace.basis().iter().enumerate() {
            let c = self.induced.digit(y, i as u32);
            if c != 0 {
                x = sp.add(x, sp.scale(c, r));
            }
        }
        debug_assert!(m == self.subspace.dim());
        x
    }

    /// Image of a subspace of `F_p^{dim V}` inside the ambient group.
    ///
    /// RREF form is preserved by `backward`, so no re-canonicalisation is
    /// needed.
    pub fn lift_subspace(&self, w: &Subspace) -> Subspace {
        let rows = w.basis().iter().map(|&r| self.backward(r)).collect();
        Subspace::from_rref(self.subspace.spec(), rows)
    }

    /// Image of an ambient subspace contained in `V`.
    pub fn restrict_subspace(&self, w: &Subspace) -> Result<Subspace> {
        let rows: Option<Vec<Point>> = w.basis().iter().map(|&r| self.forward(r)).collect();
        let rows = rows.ok_or_else(|| Error::Precondition("subspace is not inside V".into()))?;
        Subspace::span(self.induced, &rows)
    }
}

/// Lending enumerator over the RREF bases of all `k`-dimensional subspaces
/// of `F_p^m`. Order: pivot column sets lexicographically, then free
/// entries as a base-`p` counter with the last slot varying fastest.
pub struct RrefEnumerator {
    spec: GroupSpec,
    k: usize,
    pivots: Vec<u32>,
    slots: Vec<(usize, u32)>,
    counter: Vec<u32>,
    rows: Vec<Point>,
    state: EnumState,
}

#[derive(PartialEq, Eq)]
enum EnumState {
    Fresh,
    Running,
    Done,
}

impl RrefEnumerator {
    pub fn new(spec: GroupSpec, k: u32) -> Result<Self> {
        if k > spec.n() {
            return Err(Error::range(
                "subspace dimension",
                format!("k = {k} exceeds dim {}", spec.n()),
            ));
        }
        Ok(RrefEnumerator {
            spec,
            k: k as usize,
            pivots: (0..k).collect(),
            slots: Vec::new(),
            counter: Vec::new(),
            rows: vec![0; k as usize],
            state: EnumState::Fresh,
        })
    }

    fn rebuild_slots(&mut self) {
        self.slots.clear();
        let m = self.spec.n();
        for (i, &c) in self.pivots.iter().enumerate() {
            for col in c + 1..m {
                if !self.pivots.contains(&col) {
                    self.slots.push((i, col));
                }
            }
        }
        self.counter.clear();
        self.counter.resize(self.slots.len(), 0);
    }

    fn build_rows(&mut self) {
        let sp = self.spec;
        let m = sp.n();
        for (i, &c) in self.pivots.iter().enumerate() {
            self.rows[i] = sp.pow(m - 1 - c);
        }
        for (s, &(row, col)) in self.slots.iter().enumerate() {
            let d = self.counter[s];
            if d != 0 {
                self.rows[row] += d as u64 * sp.pow(m - 1 - col);
            }
        }
    }

    fn next_pivots(&mut self) -> bool {
        let m = self.spec.n();
        let k = self.k;
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.pivots[i] < m - (k - i) as u32 {
                self.pivots[i] += 1;
                for j in i + 1..k {
                    self.pivots[j] = self.pivots[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }

    /// Advances and returns the next RREF basis.
    pub fn next_rows(&mut self) -> Option<&[Point]> {
        match self.state {
            EnumState::Done => return None,
            EnumState::Fresh => {
                self.state = EnumState::Running;
                self.rebuild_slots();
            }
            EnumState::Running => {
                let p = self.spec.p();
                let mut carried = true;
                for d in self.counter.iter_mut().rev() {
                    *d += 1;
                    if *d < p {
                        carried = false;
                        break;
                    }
                    *d = 0;
                }
                if carried {
                    if self.k == 0 || !self.next_pivots() {
                        self.state = EnumState::Done;
                        return None;
                    }
                    self.rebuild_slots();
                }
            }
        }
        self.build_rows();
        Some(&self.rows)
    }
}

/// Iterator over every `k`-dimensional subspace of `V`, each exactly once.
pub struct SubspaceIter {
    inner: RrefEnumerator,
    coords: InducedCoordinates,
}

impl Iterator for SubspaceIter {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        let induced = self.inner.spec;
        let rows = self.inner.next_rows()?.to_vec();
        let w = Subspace::from_rref(induced, rows);
        Some(self.coords.lift_subspace(&w))
    }
}

/// All `k`-dimensional subspaces of `v`; the count is `[dim v choose k]_p`.
pub fn enumerate_subspaces(v: &Subspace, k: u32) -> Result<SubspaceIter> {
    let coords = v.induced_coordinates();
    let inner = RrefEnumerator::new(coords.induced_spec(), k)?;
    Ok(SubspaceIter { inner, coords })
}

/// Uniformly random `d`-dimensional subspace of `F_p^n`.
///
/// Draws `d` uniform vectors and retries until they are independent; every
/// ordered basis is equally likely, so every subspace is.
pub fn sample_uniform_subspace<R: Rng + ?Sized>(
    spec: GroupSpec,
    d: u32,
    rng: &mut R,
) -> Result<Subspace> {
    if d > spec.n() {
        return Err(Error::range(
            "subspace dimension",
            format!("d = {d} exceeds n = {}", spec.n()),
        ));
    }
    let mut vs = Vec::with_capacity(d as usize);
    loop {
        vs.clear();
        for _ in 0..d {
            vs.push(rng.random_range(0..spec.order()));
        }
        let s = Subspace::span(spec, &vs)?;
        if s.dim() == d {
            return Ok(s);
        }
    }
}

/// [`sample_uniform_subspace`] with a fresh seeded generator.
pub fn sample_uniform_subspace_seeded(spec: GroupSpec, d: u32, seed: u64) -> Result<Subspace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_uniform_subspace(spec, d, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::gaussian_binomial;
    use num_bigint::BigUint;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn f2(n: u32) -> GroupSpec {
        GroupSpec::binary(n).unwrap()
    }

    #[test]
    fn span_examples() {
        let g = f2(3);
        let z = Subspace::span(g, &[]).unwrap();
        assert_eq!(z.dim(), 0);
        assert!(z.contains(0));
        let s = Subspace::span(g, &[0b100, 0b010, 0b110]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.basis(), &[0b100, 0b010]);
        assert!(Subspace::span(g, &[0b1000]).is_err());

        let g3 = GroupSpec::new(3, 2).unwrap();
        let v = Subspace::span(g3, &[g3.from_digits(&[1, 2]).unwrap(), g3.from_digits(&[2, 1]).unwrap()])
            .unwrap();
        // (2,1) = 2·(1,2): rank 1 over F_3.
        assert_eq!(v.dim(), 1);
        let w = Subspace::span(g3, &[g3.from_digits(&[1, 2]).unwrap(), g3.from_digits(&[1, 1]).unwrap()])
            .unwrap();
        assert_eq!(w.dim(), 2);
        assert_eq!(w, Subspace::whole(g3));
    }

    /// Rank by brute force: log_p of the number of distinct linear combinations.
    fn brute_rank(spec: GroupSpec, vs: &[Point]) -> u32 {
        let mut seen: HashSet<Point> = HashSet::from([0]);
        for &v in vs {
            let cur: Vec<Point> = seen.iter().copied().collect();
            for x in cur {
                let mut m = v;
                for _ in 1..spec.p() {
                    seen.insert(spec.add(x, m));
                    m = spec.add(m, v);
                }
            }
        }
        let mut d = 0;
        while spec.pow(d) < seen.len() as u64 {
            d += 1;
        }
        d
    }

    #[test]
    fn span_over_f3_has_full_rank_per_hand_elimination() {
        // (1,2),(2,1) over F_3: det = 1·1 − 2·2 = −3 ≡ 0, so rank 1 …
        let g3 = GroupSpec::new(3, 2).unwrap();
        let a = g3.from_digits(&[1, 2]).unwrap();
        let b = g3.from_digits(&[2, 1]).unwrap();
        assert_eq!(brute_rank(g3, &[a, b]), 1);
        assert_eq!(Subspace::span(g3, &[a, b]).unwrap().dim(), 1);
        // … while (1,2),(2,2) has det = 2 − 4 = −2 ≡ 1: full rank.
        let c = g3.from_digits(&[2, 2]).unwrap();
        assert_eq!(brute_rank(g3, &[a, c]), 2);
        assert_eq!(Subspace::span(g3, &[a, c]).unwrap().dim(), 2);
    }

    #[test]
    fn intersections() {
        let g = f2(4);
        let v = Subspace::span(g, &[0b1000, 0b0100, 0b0010]).unwrap();
        assert_eq!(v.intersect(&v).unwrap(), v);
        let h1 = Subspace::whole(g).intersect(&v).unwrap();
        assert_eq!(h1, v);
        let h2 = Subspace::span(g, &[0b1000, 0b0100, 0b0001]).unwrap();
        let i = v.intersect(&h2).unwrap();
        assert_eq!(i.dim(), 2);
        assert_eq!(i, Subspace::span(g, &[0b1000, 0b0100]).unwrap());
        let other = Subspace::whole(f2(3));
        assert!(v.intersect(&other).is_err());
    }

    #[test]
    fn codim_complement_meets_every_d_space() {
        // dim V' = n + 1 − d forces dim(V' ∩ V) ≥ 1 for every d-space V.
        for n in 2..=5u32 {
            for d in 1..=n {
                let g = f2(n);
                let vprime = Subspace::span(g, &(0..n + 1 - d).map(|i| 1u64 << i).collect::<Vec<_>>())
                    .unwrap();
                for w in enumerate_subspaces(&Subspace::whole(g), d).unwrap() {
                    assert!(vprime.intersect(&w).unwrap().dim() >= 1);
                }
            }
        }
    }

    #[test]
    fn enumeration_counts_match_gaussian_binomials() {
        for p in [2u32, 3] {
            for n in 0..=6u32 {
                if p == 3 && n > 5 {
                    continue;
                }
                let g = GroupSpec::new(p, n).unwrap();
                let whole = Subspace::whole(g);
                for k in 0..=n {
                    let all: Vec<Subspace> = enumerate_subspaces(&whole, k).unwrap().collect();
                    assert_eq!(
                        BigUint::from(all.len()),
                        gaussian_binomial(n, k, p),
                        "p={p} n={n} k={k}"
                    );
                    let uniq: HashSet<&Subspace> = all.iter().collect();
                    assert_eq!(uniq.len(), all.len());
                    assert!(all.iter().all(|s| s.dim() == k && s.is_rref()));
                }
            }
        }
        assert!(enumerate_subspaces(&Subspace::whole(f2(3)), 4).is_err());
    }

    #[test]
    fn enumeration_small_examples() {
        let whole = Subspace::whole(f2(3));
        assert_eq!(enumerate_subspaces(&whole, 1).unwrap().count(), 7);
        assert_eq!(enumerate_subspaces(&whole, 2).unwrap().count(), 7);
        let zero: Vec<_> = enumerate_subspaces(&whole, 0).unwrap().collect();
        assert_eq!(zero, vec![Subspace::zero(f2(3))]);
    }

    #[test]
    fn enumeration_inside_proper_subspace() {
        let g = f2(5);
        let v = Subspace::span(g, &[0b10011, 0b01010, 0b00111]).unwrap();
        let subs: Vec<Subspace> = enumerate_subspaces(&v, 2).unwrap().collect();
        assert_eq!(subs.len(), 7);
        assert!(subs.iter().all(|w| v.contains_subspace(w)));
    }

    #[test]
    fn induced_coordinates_examples() {
        let g = f2(3);
        let whole = Subspace::whole(g).induced_coordinates();
        for x in 0..8 {
            assert_eq!(whole.forward(x), Some(x));
        }
        let v = Subspace::span(g, &[0b110, 0b011]).unwrap();
        let c = v.induced_coordinates();
        // RREF basis is {101, 011}.
        assert_eq!(c.forward(0b101), Some(0b10));
        assert_eq!(c.forward(0b110), Some(0b11));
        assert_eq!(c.forward(0b001), None);
    }

    #[test]
    fn induced_coordinates_round_trip_dim5_in_f2_10() {
        let g = f2(10);
        let v = sample_uniform_subspace_seeded(g, 5, 7).unwrap();
        let c = v.induced_coordinates();
        let mut seen = HashSet::new();
        for x in v.elements() {
            let y = c.forward(x).unwrap();
            assert!(y < 32);
            assert!(seen.insert(y));
            assert_eq!(c.backward(y), x);
        }
        for x in v.elements() {
            for y in v.elements().into_iter().step_by(3) {
                assert_eq!(
                    c.forward(g.add(x, y)).unwrap(),
                    c.induced_spec().add(c.forward(x).unwrap(), c.forward(y).unwrap())
                );
            }
        }
    }

    #[test]
    fn induced_coordinates_over_f3_preserve_addition() {
        let g = GroupSpec::new(3, 4).unwrap();
        let v = sample_uniform_subspace_seeded(g, 2, 3).unwrap();
        let c = v.induced_coordinates();
        let els = v.elements();
        assert_eq!(els.len(), 9);
        for &x in &els {
            for &y in &els {
                let fx = c.forward(x).unwrap();
                let fy = c.forward(y).unwrap();
                assert_eq!(c.forward(g.add(x, y)).unwrap(), c.induced_spec().add(fx, fy));
            }
            assert_eq!(c.backward(c.forward(x).unwrap()), x);
        }
    }

    #[test]
    fn coset_rep_is_least_element() {
        let g = GroupSpec::new(3, 3).unwrap();
        let v = Subspace::span(g, &[g.from_digits(&[1, 1, 0]).unwrap()]).unwrap();
        for x in 0..g.order() {
            let c = Coset::new(v.clone(), x).unwrap();
            let els = c.elements();
            assert_eq!(c.rep(), *els.iter().min().unwrap());
            assert!(els.iter().all(|&y| c.contains(y)));
            assert!(els.contains(&x));
        }
    }

    #[test]
    fn sampler_edge_cases() {
        let g = f2(5);
        assert_eq!(sample_uniform_subspace_seeded(g, 5, 1).unwrap(), Subspace::whole(g));
        assert_eq!(sample_uniform_subspace_seeded(g, 0, 1).unwrap(), Subspace::zero(g));
        assert!(sample_uniform_subspace_seeded(g, 6, 1).is_err());
    }

    #[test]
    fn annihilator_dimension_and_orthogonality() {
        let g = GroupSpec::new(5, 3).unwrap();
        let v = Subspace::span(g, &[g.from_digits(&[1, 2, 3]).unwrap()]).unwrap();
        let a = v.annihilator();
        assert_eq!(a.dim(), 2);
        for f in a.elements() {
            for x in v.elements() {
                assert_eq!(g.dot(f, x), 0);
            }
        }
        assert_eq!(a.annihilator(), v);
    }

    proptest! {
        #[test]
        fn span_is_canonical(n in 1u32..9, seeds in proptest::collection::vec(any::<u64>(), 1..6), mix in any::<u64>()) {
            let g = f2(n);
            let vs: Vec<Point> = seeds.iter().map(|s| s % g.order()).collect();
            let a = Subspace::span(g, &vs).unwrap();
            // Another generating set: basis plus random combinations, shuffled.
            let mut other: Vec<Point> = a.basis().to_vec();
            let els = a.elements();
            other.push(els[(mix % els.len() as u64) as usize]);
            other.push(els[((mix >> 17) % els.len() as u64) as usize]);
            other.reverse();
            let b = Subspace::span(g, &other).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(Subspace::span(g, a.basis()).unwrap(), a.clone());
            prop_assert_eq!(a.dim(), brute_rank(g, &vs));
        }

        #[test]
        fn span_is_canonical_f3(seeds in proptest::collection::vec(0u64..243, 1..5)) {
            let g = GroupSpec::new(3, 5).unwrap();
            let a = Subspace::span(g, &seeds).unwrap();
            let mut shuffled: Vec<Point> = a.elements().into_iter().rev().collect();
            shuffled.truncate(4);
            shuffled.extend(a.basis().iter().map(|&b| g.scale(2, b)));
            prop_assert_eq!(Subspace::span(g, &shuffled).unwrap(), a.clone());
            prop_assert_eq!(a.dim(), brute_rank(g, &seeds));
        }

        #[test]
        fn intersection_dimension_formula(n in 2u32..8, s1 in any::<u64>(), s2 in any::<u64>(), d1 in 0u32..8, d2 in 0u32..8) {
            let g = f2(n);
            let v = sample_uniform_subspace_seeded(g, d1 % (n + 1), s1).unwrap();
            let w = sample_uniform_subspace_seeded(g, d2 % (n + 1), s2).unwrap();
            let i = v.intersect(&w).unwrap();
            let brute: Vec<Point> = v.elements().into_iter().filter(|&x| w.contains(x)).collect();
            prop_assert_eq!(i.size(), brute.len() as u64);
            prop_assert!(i.dim() + n >= v.dim() + w.dim());
            prop_assert_eq!(v.sum(&w).unwrap().dim() + i.dim(), v.dim() + w.dim());
        }
    }
}
