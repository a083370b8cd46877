//! Geometric Ramsey numbers `R_{F_p}(d_1, …, d_r)`, the coloring/sum-free
//! correspondence, bound calculators and the multicolor avoidance pipeline.
//!
//! A coloring is valid for `dims = (d_1, …, d_r)` when no `d_i`-dimensional
//! subspace has all of its nonzero points in color `i`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::coloring::{domain_points, Coloring, ColoringDomain};
use crate::error::{Error, Result};
use crate::group::{gaussian_binomial, GroupSpec, Point};
use crate::increment::{run_dichotomy, DichotomyParams, DichotomyReport, Status};
use crate::rational::{serde_str, Rational};
use crate::search::{find_subspace_avoiding, verify_avoids, Meter, Outcome, SearchBudget};
use crate::set::GroupSet;
use crate::subspace::{enumerate_subspaces, Subspace};

/// A subspace all of whose nonzero points have one color.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub color: u8,
    pub dim: u32,
    pub space: Subspace,
}

/// Re-checks a witness point by point.
pub fn verify_witness(c: &Coloring, w: &Witness) -> bool {
    w.space.dim() == w.dim && w.space.elements().into_iter().filter(|&x| x != 0).all(|x| c.color(x) == Some(w.color))
}

/// A `d`-dimensional subspace monochromatic in color `color`, or a proof
/// that none exists.
pub fn mono_witness(c: &Coloring, color: u8, d: u32, budget: &SearchBudget) -> Result<Outcome<Witness>> {
    let spec = c.spec();
    if d > spec.n() {
        return Err(Error::range("dimension", format!("d = {d} exceeds n = {}", spec.n())));
    }
    let others = GroupSet::from_predicate(spec, |x| x != 0 && c.color(x) != Some(color));
    let out = find_subspace_avoiding(&others, &Subspace::whole(spec), d, budget)?;
    Ok(out.map(|space| Witness { color, dim: d, space }))
}

/// First monochromatic violation of `dims`, found by enumerating every
/// subspace of each relevant dimension. Independent of the search code.
pub fn coloring_violation(c: &Coloring, dims: &[u32]) -> Result<Option<Witness>> {
    if dims.len() != c.r() as usize {
        return Err(Error::Precondition(format!(
            "{} dimensions given for a {}-coloring",
            dims.len(),
            c.r()
        )));
    }
    let spec = c.spec();
    let whole = Subspace::whole(spec);
    for (i, &d) in dims.iter().enumerate() {
        if d > spec.n() {
            continue;
        }
        let color = i as u8 + 1;
        for w in enumerate_subspaces(&whole, d)? {
            if w.elements().into_iter().filter(|&x| x != 0).all(|x| c.color(x) == Some(color)) {
                return Ok(Some(Witness { color, dim: d, space: w }));
            }
        }
    }
    Ok(None)
}

/// Symmetry breaking used by [`search_coloring`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Symmetry {
    None,
    /// Lex-leader constraints for coordinate permutations (all of them when
    /// `n ≤ 6`, adjacent swaps otherwise), scalings and transvections.
    Generators,
    /// Lex-leader constraints for every element of `GL(n, p)`; only
    /// accepted when the group has at most [`FULL_GROUP_LIMIT`] elements.
    FullGroup,
}

pub const FULL_GROUP_LIMIT: u64 = 200_000;

/// Colorings are searched over at most this many domain points.
pub const MAX_DOMAIN_POINTS: usize = 128;

#[derive(Clone, Debug)]
pub struct RamseyOptions {
    pub domain: ColoringDomain,
    pub symmetry: Symmetry,
    pub budget: SearchBudget,
}

impl Default for RamseyOptions {
    fn default() -> Self {
        RamseyOptions {
            domain: ColoringDomain::Projective,
            symmetry: Symmetry::Generators,
            budget: SearchBudget::default(),
        }
    }
}

/// Result of one coloring search together with its node count.
#[derive(Clone, Debug)]
pub struct ColoringSearch {
    pub outcome: Outcome<Coloring>,
    pub nodes: u64,
}

/// Applies the linear map with column images `cols` to `x`.
fn apply(spec: GroupSpec, cols: &[Point], x: Point) -> Point {
    let mut y = 0;
    for (i, &c) in cols.iter().enumerate() {
        let d = spec.digit(x, i as u32);
        if d != 0 {
            y = spec.add(y, spec.scale(d, c));
        }
    }
    y
}

fn unit(spec: GroupSpec, i: u32) -> Point {
    spec.pow(spec.n() - 1 - i)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Linear maps (as column images) used for lex-leader pruning.
fn symmetry_maps(spec: GroupSpec, level: Symmetry) -> Result<Vec<Vec<Point>>> {
    let n = spec.n();
    let p = spec.p();
    let mut maps = Vec::new();
    match level {
        Symmetry::None => {}
        Symmetry::Generators => {
            if n <= 6 {
                for perm in permutations(n as usize) {
                    maps.push(perm.iter().map(|&j| unit(spec, j as u32)).collect());
                }
            } else {
                for i in 0..n - 1 {
                    let mut cols: Vec<Point> = (0..n).map(|j| unit(spec, j)).collect();
                    cols.swap(i as usize, i as usize + 1);
                    maps.push(cols);
                }
            }
            for i in 0..n {
                for c in 2..p {
                    let mut cols: Vec<Point> = (0..n).map(|j| unit(spec, j)).collect();
                    cols[i as usize] = spec.scale(c, cols[i as usize]);
                    maps.push(cols);
                }
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for c in 1..p {
                        let mut cols: Vec<Point> = (0..n).map(|k| unit(spec, k)).collect();
                        cols[i as usize] = spec.add(cols[i as usize], spec.scale(c, unit(spec, j)));
                        maps.push(cols);
                    }
                }
            }
        }
        Symmetry::FullGroup => {
            let mut size = 1u64;
            for i in 0..n {
                size = size.saturating_mul(spec.order() - spec.pow(i));
            }
            if size > FULL_GROUP_LIMIT {
                return Err(Error::range(
                    "symmetry group",
                    format!("|GL({n}, {p})| = {size} exceeds {FULL_GROUP_LIMIT}"),
                ));
            }
            let mut cols: Vec<Point> = Vec::new();
            fn rec(spec: GroupSpec, cols: &mut Vec<Point>, maps: &mut Vec<Vec<Point>>) {
                if cols.len() == spec.n() as usize {
                    maps.push(cols.clone());
                    return;
                }
                let span = Subspace::span(spec, cols).expect("columns lie in the group");
                for x in 1..spec.order() {
                    if !span.contains(x) {
                        cols.push(x);
                        rec(spec, cols, maps);
                        cols.pop();
                    }
                }
            }
            rec(spec, &mut cols, &mut maps);
        }
    }
    Ok(maps)
}

struct ColoringDfs<'a> {
    spec: GroupSpec,
    dims: &'a [u32],
    pts: Vec<Point>,
    /// Domain index of each group element (through its projective class).
    index: Vec<u16>,
    perms: Vec<Vec<u16>>,
    colors: Vec<u8>,
    masks: Vec<u128>,
    meter: Meter,
    exhausted: bool,
}

impl ColoringDfs<'_> {
    /// Whether some `d`-space through `pts[k]` has every nonzero point in
    /// `mask` (which includes bit `k`).
    fn closes_mono(&self, k: usize, d: u32, mask: u128) -> bool {
        let spec = self.spec;
        let x = self.pts[k];
        let elems: Vec<Point> = (0..spec.p()).map(|c| spec.scale(c, x)).collect();
        // With the points domain the multiples of x carry their own colors.
        let line_mono = elems[1..].iter().all(|&z| {
            let i = self.index[z as usize];
            i != u16::MAX && mask >> i & 1 == 1
        });
        line_mono && self.extend_mono(&elems, d - 1, 0, k, mask)
    }

    fn extend_mono(&self, elems: &[Point], left: u32, from: usize, k: usize, mask: u128) -> bool {
        if left == 0 {
            return true;
        }
        let spec = self.spec;
        let inside = |z: Point| {
            let i = self.index[z as usize];
            i != u16::MAX && mask >> i & 1 == 1
        };
        for j in from..k {
            if mask >> j & 1 == 0 {
                continue;
            }
            let y = self.pts[j];
            if elems.contains(&y) {
                continue;
            }
            let mut next = Vec::with_capacity(elems.len() * spec.p() as usize);
            let mut ok = true;
            'outer: for c in 0..spec.p() {
                let cy = spec.scale(c, y);
                for &e in elems {
                    let z = spec.add(e, cy);
                    if c != 0 && !inside(z) {
                        ok = false;
                        break 'outer;
                    }
                    next.push(z);
                }
            }
            if ok && self.extend_mono(&next, left - 1, j + 1, k, mask) {
                return true;
            }
        }
        false
    }

    /// Lex-leader test on the assigned prefix `0..=k`.
    fn is_lex_leader(&self, k: usize) -> bool {
        for perm in &self.perms {
            for j in 0..=k {
                let s = perm[j] as usize;
                if s > k {
                    break;
                }
                let (a, b) = (self.colors[j], self.colors[s]);
                if b < a {
                    return false;
                }
                if b > a {
                    break;
                }
            }
        }
        true
    }

    fn run(&mut self, k: usize) -> bool {
        if k == self.pts.len() {
            return true;
        }
        for c in 1..=self.dims.len() as u8 {
            if !self.meter.tick() {
                self.exhausted = true;
                return false;
            }
            let mask = self.masks[c as usize - 1] | 1u128 << k;
            if self.closes_mono(k, self.dims[c as usize - 1], mask) {
                continue;
            }
            self.colors[k] = c;
            if self.is_lex_leader(k) {
                self.masks[c as usize - 1] = mask;
                if self.run(k + 1) {
                    return true;
                }
                self.masks[c as usize - 1] &= !(1u128 << k);
                if self.exhausted {
                    return false;
                }
            }
            self.colors[k] = 0;
        }
        false
    }
}

/// Searches for a coloring of the domain of `spec` valid for `dims`.
///
/// Points are assigned in increasing order; a color is refused at a point
/// when it would complete a monochromatic subspace whose largest point is
/// the current one. Every found coloring is re-verified by
/// [`coloring_violation`].
pub fn search_coloring(spec: GroupSpec, dims: &[u32], opts: &RamseyOptions) -> Result<ColoringSearch> {
    if dims.is_empty() || dims.len() > u8::MAX as usize {
        return Err(Error::range("color count", format!("{} colors", dims.len())));
    }
    if dims.contains(&0) {
        return Err(Error::range("dimension", "every d_i must be at least 1"));
    }
    let pts = domain_points(spec, opts.domain);
    if pts.len() > MAX_DOMAIN_POINTS {
        return Err(Error::range(
            "coloring domain",
            format!("{} points exceeds {MAX_DOMAIN_POINTS}", pts.len()),
        ));
    }
    let mut index = vec![u16::MAX; spec.order() as usize];
    for (i, &x) in pts.iter().enumerate() {
        index[x as usize] = i as u16;
    }
    if opts.domain == ColoringDomain::Projective {
        for z in 1..spec.order() {
            index[z as usize] = index[spec.projective_rep(z).expect("nonzero") as usize];
        }
    }
    let perms = symmetry_maps(spec, opts.symmetry)?
        .into_iter()
        .map(|cols| pts.iter().map(|&x| index[apply(spec, &cols, x) as usize]).collect::<Vec<u16>>())
        .filter(|perm| perm.iter().enumerate().any(|(i, &j)| i != j as usize))
        .collect();
    let mut dfs = ColoringDfs {
        spec,
        dims,
        index,
        perms,
        colors: vec![0; pts.len()],
        masks: vec![0; dims.len()],
        pts,
        meter: Meter::new(&opts.budget),
        exhausted: false,
    };
    let found = dfs.run(0);
    let nodes = dfs.meter.nodes();
    let outcome = if found {
        let mut it = dfs.colors.iter();
        let c = Coloring::from_fn(spec, dims.len() as u8, opts.domain, |_| *it.next().expect("one color per point"))?;
        if let Some(w) = coloring_violation(&c, dims)? {
            return Err(Error::Certificate(format!(
                "search produced a coloring with a monochromatic {}-space in color {}",
                w.dim, w.color
            )));
        }
        Outcome::Found(c)
    } else if dfs.exhausted {
        Outcome::Exhausted { nodes }
    } else {
        Outcome::NoneExists(format!(
            "exhaustive search over F_{}^{} with dims {:?}: {} nodes, no valid coloring",
            spec.p(),
            spec.n(),
            dims,
            nodes
        ))
    };
    Ok(ColoringSearch { outcome, nodes })
}

/// Enumerates all `r^N` colorings and returns the first valid one.
/// Only for cross-checking; refuses more than `2^20` colorings.
pub fn naive_search(spec: GroupSpec, dims: &[u32], domain: ColoringDomain) -> Result<Option<Coloring>> {
    let pts = domain_points(spec, domain);
    let r = dims.len() as u64;
    let total = (r as f64).powi(pts.len() as i32);
    if total > (1u64 << 20) as f64 {
        return Err(Error::range("naive search", format!("{total} colorings")));
    }
    for code in 0..total as u64 {
        let mut v = code;
        let list: Vec<u8> = (0..pts.len())
            .map(|_| {
                let c = (v % r) as u8 + 1;
                v /= r;
                c
            })
            .collect();
        let c = Coloring::from_list(spec, r as u8, domain, &list)?;
        if coloring_violation(&c, dims)?.is_none() {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Record of the search at the first `n` with no valid coloring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnsatRecord {
    pub n: u32,
    pub nodes: u64,
    pub summary: String,
    /// Agreement with [`naive_search`], when that was small enough to run.
    pub naive_agrees: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RamseyResult {
    pub p: u32,
    pub dims: Vec<u32>,
    /// Certified lower bound: a valid coloring of dimension `lo − 1` exists.
    pub lo: u32,
    /// Exact value when an exhaustive search failed at `n = lo`.
    pub exact: Option<u32>,
    /// Valid colorings for `n = 1, …, lo − 1`.
    #[serde(skip)]
    pub witnesses: Vec<Coloring>,
    pub unsat: Option<UnsatRecord>,
    /// Why the search stopped without an exact value.
    pub note: Option<String>,
}

/// Computes `R_{F_p}(dims)` by searching `n = 1, 2, …, n_max`.
pub fn ramsey_value(p: u32, dims: &[u32], n_max: u32, opts: &RamseyOptions) -> Result<RamseyResult> {
    let mut res = RamseyResult {
        p,
        dims: dims.to_vec(),
        lo: 1,
        exact: None,
        witnesses: Vec::new(),
        unsat: None,
        note: None,
    };
    for n in 1..=n_max {
        let spec = GroupSpec::new(p, n)?;
        if domain_points(spec, opts.domain).len() > MAX_DOMAIN_POINTS {
            res.note = Some(format!("n = {n} exceeds the searchable domain size"));
            return Ok(res);
        }
        let search = search_coloring(spec, dims, opts)?;
        match search.outcome {
            Outcome::Found(c) => {
                res.witnesses.push(c);
                res.lo = n + 1;
            }
            Outcome::NoneExists(summary) => {
                let naive_agrees = match naive_search(spec, dims, opts.domain) {
                    Ok(found) => Some(found.is_none()),
                    Err(_) => None,
                };
                if naive_agrees == Some(false) {
                    return Err(Error::Certificate(format!("pruned search and naive enumeration disagree at n = {n}")));
                }
                res.exact = Some(n);
                res.unsat = Some(UnsatRecord {
                    n,
                    nodes: search.nodes,
                    summary,
                    naive_agrees,
                });
                return Ok(res);
            }
            Outcome::Exhausted { nodes } => {
                res.note = Some(format!("budget exhausted at n = {n} after {nodes} nodes"));
                return Ok(res);
            }
        }
    }
    res.note = Some(format!("no exhaustive refutation up to n_max = {n_max}"));
    Ok(res)
}

/// One checked clause of the coloring/sum-free correspondence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BridgeRecord {
    pub clauses: Vec<Clause>,
}

impl BridgeRecord {
    pub fn all_hold(&self) -> bool {
        self.clauses.iter().all(|c| c.holds)
    }

    pub fn first_violation(&self) -> Option<&Clause> {
        self.clauses.iter().find(|c| !c.holds)
    }
}

fn exact_budget() -> SearchBudget {
    SearchBudget {
        node_limit: u64::MAX,
        ..Default::default()
    }
}

fn no_d_space_in(t: &GroupSet, d: u32) -> Result<(bool, String)> {
    let spec = t.spec();
    if d > spec.n() {
        return Ok((true, format!("d = {d} exceeds n")));
    }
    let out = find_subspace_avoiding(&t.complement(), &Subspace::whole(spec), d, &exact_budget())?;
    Ok(match out {
        Outcome::Found(w) => (false, format!("contains the {d}-space spanned by {:?}", w.basis())),
        Outcome::NoneExists(_) => (true, format!("no {d}-space")),
        Outcome::Exhausted { .. } => unreachable!("unbounded budget"),
    })
}

fn sum_free_clause(s: &GroupSet) -> Clause {
    let w = s.sum_free_witness();
    Clause {
        name: "sum-free",
        holds: w.is_none(),
        detail: match w {
            Some((x, y, z)) => format!("{x} + {y} = {z} with all three in S"),
            None => "no x + y = z in S with x != y".into(),
        },
    }
}

/// Coloring → set over `F_2^n`: `S` is color class 1 (the class avoiding
/// 2-spaces) of a coloring valid for `dims = (2, d)`.
pub fn coloring_to_sumfree(c: &Coloring, d: u32) -> Result<(GroupSet, BridgeRecord)> {
    let spec = c.spec();
    if !spec.is_binary() || c.r() != 2 {
        return Err(Error::Precondition("the correspondence needs a 2-coloring over F_2^n".into()));
    }
    let s = GroupSet::from_points(spec, c.class(1))?;
    let mut clauses = Vec::new();
    let violation = coloring_violation(c, &[2, d])?;
    clauses.push(Clause {
        name: "coloring valid for (2, d)",
        holds: violation.is_none(),
        detail: match &violation {
            Some(w) => format!("color {} has the monochromatic {}-space {:?}", w.color, w.dim, w.space.basis()),
            None => "no monochromatic subspaces".into(),
        },
    });
    clauses.push(sum_free_clause(&s));
    let (holds, detail) = no_d_space_in(&s.sumset(&s)?, d)?;
    clauses.push(Clause {
        name: "S+S contains no d-space",
        holds,
        detail,
    });
    let (holds, detail) = no_d_space_in(&s.complement(), d)?;
    clauses.push(Clause {
        name: "complement contains no d-space",
        holds,
        detail,
    });
    // μ(S) ≥ 2^{−d}  ⇔  |S| · 2^d ≥ 2^n.
    clauses.push(Clause {
        name: "density at least 2^-d",
        holds: (s.card() as u128) << d >= spec.order() as u128,
        detail: format!("|S| = {} in a group of order {}", s.card(), spec.order()),
    });
    Ok((s, BridgeRecord { clauses }))
}

/// Set → coloring over `F_2^n`: for sum-free `S` whose complement has no
/// `d`-space, color `S` with 1 and everything else with 2.
pub fn sumfree_to_coloring(s: &GroupSet, d: u32) -> Result<(Option<Coloring>, BridgeRecord)> {
    let spec = s.spec();
    if !spec.is_binary() {
        return Err(Error::Precondition("the correspondence needs F_2^n".into()));
    }
    let mut clauses = vec![Clause {
        name: "0 not in S",
        holds: !s.contains(0),
        detail: String::new(),
    }];
    clauses.push(sum_free_clause(s));
    let (holds, detail) = no_d_space_in(&s.complement(), d)?;
    clauses.push(Clause {
        name: "complement contains no d-space",
        holds,
        detail,
    });
    if !clauses.iter().all(|c| c.holds) {
        return Ok((None, BridgeRecord { clauses }));
    }
    let c = Coloring::from_fn(spec, 2, ColoringDomain::Projective, |x| if s.contains(x) { 1 } else { 2 })?;
    let violation = coloring_violation(&c, &[2, d])?;
    clauses.push(Clause {
        name: "coloring valid for (2, d)",
        holds: violation.is_none(),
        detail: String::new(),
    });
    let ok = violation.is_none();
    Ok((ok.then_some(c), BridgeRecord { clauses }))
}

/// `log2` of a positive big integer.
fn log2_big(b: &BigUint) -> f64 {
    let bits = b.bits();
    if bits <= 64 {
        return (b.to_u64().expect("fits") as f64).log2();
    }
    let top = (b >> (bits - 64)).to_u64().expect("fits");
    (top as f64).log2() + (bits - 64) as f64
}

/// Grid resolution for the blue probability: `q = 2^{−j/64}`.
pub const UNION_BOUND_GRID: u32 = 64;

/// Safety margin on `log2(expected bad subspaces)`.
const UNION_BOUND_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnionBound {
    pub d: u32,
    /// `R_{F_2}(2, d) > n`.
    pub n: u32,
    /// Blue probability certifying `n`.
    pub q: f64,
    /// `log2` of the expected number of monochromatic subspaces at `q`.
    pub log2_expectation: f64,
    /// Whether the inequality was also checked in exact rational arithmetic.
    pub exact_checked: bool,
}

fn log2_sum(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// Best `(q, log2 E)` over the grid for fixed `n`, where
/// `E = [n,2]_2 q³ + [n,d]_2 (1 − q)^{2^d − 1}`.
fn best_q(n: u32, d: u32) -> (f64, f64) {
    let twos = gaussian_binomial(n, 2, 2);
    let ds = gaussian_binomial(n, d, 2);
    let l2 = if twos.bits() == 0 { f64::NEG_INFINITY } else { log2_big(&twos) };
    let ld = if ds.bits() == 0 { f64::NEG_INFINITY } else { log2_big(&ds) };
    let m = ((1u128 << d) - 1) as f64;
    let mut best = (1.0, f64::INFINITY);
    let steps = UNION_BOUND_GRID * (2 * n + 8);
    for j in 1..=steps {
        let q = (-(j as f64) / UNION_BOUND_GRID as f64).exp2();
        let blue = l2 + 3.0 * q.log2();
        let red = ld + m * (-q).ln_1p() / std::f64::consts::LN_2;
        let e = log2_sum(blue, red);
        if e < best.1 {
            best = (q, e);
        }
    }
    best
}

/// Exact check of `[n,2] q³ + [n,d] (1−q)^{2^d−1} < 1` for the dyadic `q`.
fn exact_union_check(n: u32, d: u32, q: f64) -> Option<bool> {
    let q = BigRational::from_float(q)?;
    let one = BigRational::one();
    let twos = BigRational::from_integer(gaussian_binomial(n, 2, 2).into());
    let ds = BigRational::from_integer(gaussian_binomial(n, d, 2).into());
    let red = num_traits::pow(&one - &q, (1usize << d) - 1);
    let e = twos * &q * &q * &q + ds * red;
    Some(e < one)
}

/// Largest `n` for which a random 2-coloring with blue probability `q`
/// (some `q` on the grid) has, in expectation, fewer than one blue 2-space
/// plus red `d`-space. Certifies `R_{F_2}(2, d) > n`.
pub fn union_bound_lower(d: u32) -> Result<UnionBound> {
    if !(2..=100).contains(&d) {
        return Err(Error::range("d", format!("{d} not in [2, 100]")));
    }
    let mut best: Option<UnionBound> = None;
    let mut n = 1;
    loop {
        let (q, e) = best_q(n, d);
        if e >= -UNION_BOUND_MARGIN {
            break;
        }
        best = Some(UnionBound {
            d,
            n,
            q,
            log2_expectation: e,
            exact_checked: false,
        });
        n += 1;
    }
    let mut best = best.ok_or_else(|| Error::Certificate(format!("no n certified for d = {d}")))?;
    if d <= 6 {
        match exact_union_check(best.n, d, best.q) {
            Some(true) => best.exact_checked = true,
            _ => {
                return Err(Error::Certificate(format!(
                    "exact recheck of the union bound failed at n = {}, d = {d}",
                    best.n
                )))
            }
        }
    }
    Ok(best)
}

/// The four upper-bound shapes for `R_{F_2}(2, d)`, for comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTable {
    pub d: u32,
    #[serde(with = "serde_str")]
    pub c: Rational,
    /// `(d / c) · 2^d`.
    pub density_increment: f64,
    /// `(d + 1) · 2^d`.
    pub linear_times_exponential: f64,
    /// `1.566^d`.
    pub exponential: f64,
    /// `d^7` with unit constant.
    pub polynomial: f64,
}

pub fn bound_table(d: u32, c: Rational) -> Result<BoundTable> {
    if *c.numer() == 0 {
        return Err(Error::range("c", "must be positive"));
    }
    let df = d as f64;
    Ok(BoundTable {
        d,
        c,
        density_increment: df * *c.denom() as f64 / *c.numer() as f64 * df.exp2(),
        linear_times_exponential: (df + 1.0) * df.exp2(),
        exponential: 1.566f64.powf(df),
        polynomial: df.powi(7),
    })
}

/// Full certificate chain of a pipeline run.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    /// `(a_i, b_i)`: `A_i` has no solution of `a(x − y) = bz`.
    pub scalars: Vec<(u32, u32)>,
    #[serde(with = "serde_str")]
    pub alpha: Rational,
    pub dichotomy: DichotomyReport,
    pub s_card: u64,
    pub v_size: u64,
    #[serde(with = "serde_str")]
    pub mu_v_s: Rational,
    pub subspace: Subspace,
}

/// Finds a `d`-dimensional subspace disjoint from every `A_i`.
///
/// Each `A_i` is dilated to `A_i' = a_i A_i`, the dichotomy engine runs
/// with `α = γ = 1/(10 r p^d)`, and on its final space `V` the bad set is
/// `S = ∪ S_i` with `S_i = A_i' ∩ V` for sparse indices and
/// `S_i = V \ (A_i' − A_i')` for expanding ones. A `d`-space inside
/// `V \ S` is then disjoint from every `A_i`, which is re-checked directly.
pub fn multicolor_pipeline(sets: &[GroupSet], d: u32, p: u32, budget: &SearchBudget) -> Result<PipelineReport> {
    let Some(first) = sets.first() else {
        return Err(Error::EmptySet("list of sets"));
    };
    let spec = first.spec();
    if spec.p() != p {
        return Err(Error::Precondition(format!("sets live in F_{}^{} but p = {p}", spec.p(), spec.n())));
    }
    let mut scalars = Vec::new();
    let mut dilated = Vec::new();
    for (i, a) in sets.iter().enumerate() {
        spec.same_as(&a.spec())?;
        if a.contains(0) {
            return Err(Error::Precondition(format!("0 lies in A_{i}")));
        }
        let pair = if p == 2 {
            if let Some((x, y, z)) = a.sum_free_witness() {
                return Err(Error::Precondition(format!("A_{i} is not sum-free: {x} + {y} = {z}")));
            }
            (1, 1)
        } else {
            a.is_solution_free()
                .ok_or_else(|| Error::Precondition(format!("A_{i} is not solution-free for any a, b")))?
        };
        scalars.push(pair);
        dilated.push(a.dilate(pair.0)?);
    }
    let r = sets.len() as u128;
    let pd = (p as u128).pow(d);
    let alpha = Rational::new(1, 10 * r * pd);
    let params = DichotomyParams::new(p, alpha, alpha)?;
    let dichotomy = run_dichotomy(&dilated, &params)?;
    let v = dichotomy.final_space.clone();
    let v_set = GroupSet::from_subspace(&v);
    let mut s = GroupSet::empty(spec);
    for (a, status) in dilated.iter().zip(&dichotomy.statuses) {
        let part = match status {
            Status::Sparse | Status::SparseAndExpanding => a.intersection(&v_set)?,
            Status::Expanding => {
                let diff = a.sumset(&a.negate())?;
                v_set.difference(&diff)?
            }
            Status::Failing => unreachable!("run_dichotomy certifies every index"),
        };
        s = s.union(&part)?;
    }
    if s.contains(0) {
        return Err(Error::Certificate("0 lies in the bad set S".into()));
    }
    let v_size = v.size();
    // μ_V(S) ≤ 1/(10 p^d).
    if 10 * pd * s.card() as u128 > v_size as u128 {
        return Err(Error::Certificate(format!(
            "mu_V(S) = {}/{} exceeds 1/(10 p^d)",
            s.card(),
            v_size
        )));
    }
    let w = match find_subspace_avoiding(&s, &v, d, budget)? {
        Outcome::Found(w) => w,
        Outcome::NoneExists(why) => return Err(Error::Certificate(format!("no {d}-space avoids S: {why}"))),
        Outcome::Exhausted { nodes } => {
            return Err(Error::Certificate(format!("subspace search exhausted after {nodes} nodes")))
        }
    };
    if !v.contains_subspace(&w) || !verify_avoids(&w, &s) {
        return Err(Error::Certificate("returned subspace is not inside V \\ S".into()));
    }
    for (i, a) in sets.iter().enumerate() {
        if let Some(x) = w.elements().into_iter().find(|&x| a.contains(x)) {
            return Err(Error::Certificate(format!("final subspace meets A_{i} at {x}")));
        }
    }
    Ok(PipelineReport {
        scalars,
        alpha,
        s_card: s.card(),
        v_size,
        mu_v_s: Rational::new(s.card() as u128, v_size as u128),
        dichotomy,
        subspace: w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::anti_doubling_coloring;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f2(n: u32) -> GroupSpec {
        GroupSpec::binary(n).unwrap()
    }

    fn unlimited() -> SearchBudget {
        exact_budget()
    }

    #[test]
    fn all_red_has_full_witness() {
        let g = f2(4);
        let c = Coloring::from_fn(g, 2, ColoringDomain::Projective, |_| 1).unwrap();
        let w = mono_witness(&c, 1, 4, &unlimited()).unwrap().found().unwrap();
        assert_eq!(w.space, Subspace::whole(g));
        assert!(verify_witness(&c, &w));
        assert!(mono_witness(&c, 2, 1, &unlimited()).unwrap().is_none_exists());
    }

    #[test]
    fn anti_doubling_has_no_monochromatic_line() {
        for n in 1..=4 {
            let c = anti_doubling_coloring(n).unwrap();
            for color in 1..=2 {
                for d in 1..=n {
                    assert!(mono_witness(&c, color, d, &unlimited()).unwrap().is_none_exists());
                }
            }
        }
    }

    #[test]
    fn every_fano_two_coloring_has_a_monochromatic_line() {
        let g = f2(3);
        for code in 0..128u32 {
            let c = Coloring::from_fn(g, 2, ColoringDomain::Projective, |x| (code >> (x - 1) & 1) as u8 + 1).unwrap();
            let found = (1..=2).any(|col| mono_witness(&c, col, 2, &unlimited()).unwrap().is_found());
            assert!(found, "coloring {code:07b}");
            assert!(coloring_violation(&c, &[2, 2]).unwrap().is_some());
        }
    }

    #[test]
    fn small_searches() {
        let opts = RamseyOptions::default();
        let c = search_coloring(f2(2), &[2, 2], &opts).unwrap().outcome.found().unwrap();
        assert!(coloring_violation(&c, &[2, 2]).unwrap().is_none());
        assert!(search_coloring(f2(3), &[2, 2], &opts).unwrap().outcome.is_none_exists());
        for d in 1..=4 {
            for n in 1..=4 {
                let out = search_coloring(f2(n), &[d], &opts).unwrap().outcome;
                assert_eq!(out.is_found(), n < d, "n = {n}, d = {d}");
            }
        }
    }

    #[test]
    fn pruning_agrees_with_naive_enumeration() {
        for n in 1..=4 {
            for dims in [[2u32, 2], [2, 3], [3, 2], [3, 3], [2, 4]] {
                let naive = naive_search(f2(n), &dims, ColoringDomain::Projective).unwrap().is_some();
                for symmetry in [Symmetry::None, Symmetry::Generators, Symmetry::FullGroup] {
                    let opts = RamseyOptions {
                        symmetry,
                        ..Default::default()
                    };
                    let out = search_coloring(f2(n), &dims, &opts).unwrap().outcome;
                    assert_eq!(out.is_found(), naive, "n = {n}, dims = {dims:?}, {symmetry:?}");
                }
            }
        }
    }

    #[test]
    fn odd_characteristic_searches_agree_with_naive() {
        let g = GroupSpec::new(3, 2).unwrap();
        for domain in [ColoringDomain::Projective, ColoringDomain::Points] {
            for dims in [[2u32, 2], [1, 2]] {
                let naive = naive_search(g, &dims, domain).unwrap().is_some();
                let opts = RamseyOptions {
                    domain,
                    ..Default::default()
                };
                assert_eq!(search_coloring(g, &dims, &opts).unwrap().outcome.is_found(), naive);
            }
        }
        // With the points domain, anti-doubling shows (2, 2) is satisfiable even at n = 2.
        let opts = RamseyOptions {
            domain: ColoringDomain::Points,
            ..Default::default()
        };
        assert!(search_coloring(g, &[2, 2], &opts).unwrap().outcome.is_found());
    }

    #[test]
    fn ramsey_values() {
        let opts = RamseyOptions::default();
        let r = ramsey_value(2, &[2, 2], 4, &opts).unwrap();
        assert_eq!(r.exact, Some(3));
        assert_eq!(r.lo, 3);
        assert_eq!(r.unsat.as_ref().unwrap().naive_agrees, Some(true));
        for d in 1..=4 {
            assert_eq!(ramsey_value(2, &[d], 6, &opts).unwrap().exact, Some(d));
        }
        let r = ramsey_value(2, &[2, 3], 4, &opts).unwrap();
        assert!(r.lo >= 4);
        let w = &r.witnesses[2];
        assert_eq!(w.spec().n(), 3);
        assert!(coloring_violation(w, &[2, 3]).unwrap().is_none());
    }

    #[test]
    fn exhausted_budget_gives_interval() {
        let opts = RamseyOptions {
            budget: SearchBudget::with_nodes(3),
            ..Default::default()
        };
        let r = ramsey_value(2, &[2, 2], 4, &opts).unwrap();
        assert_eq!(r.exact, None);
        assert!(r.note.unwrap().contains("exhausted"));
    }

    #[test]
    fn bridge_on_the_n2_witness() {
        let g = f2(2);
        let c = Coloring::from_fn(g, 2, ColoringDomain::Projective, |x| if x == 3 { 1 } else { 2 }).unwrap();
        let (s, rec) = coloring_to_sumfree(&c, 2).unwrap();
        assert_eq!(s.points(), vec![3]);
        assert!(rec.all_hold(), "{rec:?}");
        assert_eq!(s.mu(), Rational::new(1, 4));
    }

    #[test]
    fn bridge_rejects_non_sum_free() {
        let g = f2(3);
        let s = GroupSet::from_points(g, [1, 2, 3]).unwrap();
        let (c, rec) = sumfree_to_coloring(&s, 2).unwrap();
        assert!(c.is_none());
        assert_eq!(rec.first_violation().unwrap().name, "sum-free");
    }

    #[test]
    fn bridge_round_trips_on_random_valid_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut done = 0;
        while done < 100 {
            let n = rng.random_range(2..=4);
            let d = rng.random_range(2..=n);
            let g = f2(n);
            let s = GroupSet::from_predicate(g, |x| x != 0 && rng.random_bool(0.5));
            let (c, rec) = sumfree_to_coloring(&s, d).unwrap();
            // Oracle for validity: the pair of direct checks.
            let valid = s.is_sum_free() && no_d_space_in(&s.complement(), d).unwrap().0;
            assert_eq!(c.is_some(), valid);
            let Some(c) = c else { continue };
            assert!(rec.all_hold());
            let (back, rec2) = coloring_to_sumfree(&c, d).unwrap();
            assert_eq!(back, s);
            assert!(rec2.all_hold(), "{rec2:?}");
            done += 1;
        }
    }

    #[test]
    fn union_bound_small_cases() {
        let b = union_bound_lower(2).unwrap();
        assert!(b.n >= 1 && b.n < 3, "R(2,2) = 3 caps the certified n at 2");
        assert!(b.exact_checked);
        let mut prev = 0;
        for d in 2..=30 {
            let b = union_bound_lower(d).unwrap();
            assert!(b.n >= prev);
            prev = b.n;
        }
    }

    #[test]
    fn union_bound_n_is_maximal() {
        // Oracle: a fine independent scan in q at n + 1 finds nothing below 1.
        for d in [3u32, 5, 8] {
            let b = union_bound_lower(d).unwrap();
            let n = b.n + 1;
            let twos = gaussian_binomial(n, 2, 2).to_f64().unwrap();
            let ds = gaussian_binomial(n, d, 2).to_f64().unwrap();
            let m = ((1u64 << d) - 1) as i32;
            for k in 1..20_000 {
                let q = k as f64 / 20_000.0;
                assert!(twos * q.powi(3) + ds * (1.0 - q).powi(m) > 0.999);
            }
        }
    }

    #[test]
    fn bound_table_values() {
        let t = bound_table(10, Rational::from_integer(1)).unwrap();
        assert_eq!(t.density_increment, 10240.0);
        assert_eq!(t.linear_times_exponential, 11264.0);
        // 1.566^10 = 88.70…
        assert!((t.exponential - 88.5).abs() < 0.5);
        assert_eq!(t.polynomial, 1e7);
    }

    #[test]
    fn pipeline_single_point() {
        let g = f2(6);
        let a = GroupSet::from_points(g, [0b101100]).unwrap();
        let rep = multicolor_pipeline(std::slice::from_ref(&a), 1, 2, &SearchBudget::default()).unwrap();
        assert_eq!(rep.subspace.dim(), 1);
        assert!(!a.contains(rep.subspace.basis()[0]));
    }

    #[test]
    fn pipeline_two_planted_sets() {
        let n = 10;
        let g = f2(n);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let a = GroupSet::from_predicate(g, |x| x >> (n - 1) == 1 && rng.random_bool(0.5));
        let b = GroupSet::from_predicate(g, |x| x & 1 == 1 && rng.random_bool(0.5));
        let rep = multicolor_pipeline(&[a.clone(), b.clone()], 1, 2, &SearchBudget::default()).unwrap();
        let x = rep.subspace.basis()[0];
        assert!(!a.contains(x) && !b.contains(x));
        assert!(rep.mu_v_s * Rational::from_integer(20) <= Rational::from_integer(1));
    }

    #[test]
    fn pipeline_over_f3() {
        let g = GroupSpec::new(3, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = GroupSet::from_predicate(g, |x| g.digit(x, 0) == 1 && rng.random_bool(0.7));
        assert!(a.is_solution_free().is_some());
        let rep = multicolor_pipeline(std::slice::from_ref(&a), 1, 3, &SearchBudget::default()).unwrap();
        assert_eq!(rep.scalars, vec![a.is_solution_free().unwrap()]);
        for x in rep.subspace.elements() {
            assert!(!a.contains(x));
        }
    }

    #[test]
    fn pipeline_rejects_bad_inputs() {
        let g = f2(4);
        let with_zero = GroupSet::from_points(g, [0, 1]).unwrap();
        assert!(matches!(
            multicolor_pipeline(&[with_zero], 1, 2, &SearchBudget::default()),
            Err(Error::Precondition(_))
        ));
        let not_free = GroupSet::from_points(g, [1, 2, 3]).unwrap();
        assert!(multicolor_pipeline(&[not_free], 1, 2, &SearchBudget::default()).is_err());
    }
}
