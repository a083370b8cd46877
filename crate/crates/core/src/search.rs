//! Subspace finders: a `d`-space avoiding a set, the largest subspace
//! inside a set, and the sharpness construction.
//!
//! Two exact strategies are used. The bottom-up search builds an RREF
//! basis from its last row upwards: a new row must have its leading digit
//! 1, its leading column left of every chosen pivot, and zeros at those
//! pivots, so each subspace is generated exactly once. Alongside it keeps
//! `G_j = {z : z + W_j ⊆ T}`, which makes the admissibility test a lookup.
//! The top-down search enumerates `c`-dimensional families of linear forms
//! `F` and tests whether `ker F` avoids the bad set; it is used when
//! `[m choose c]_p · |S|` is small.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{gaussian_binomial_u128, GroupSpec, Point};
use crate::set::GroupSet;
use crate::subspace::{sample_uniform_subspace, RrefEnumerator, Subspace};

/// Limits for exact searches. Exceeding one yields [`Outcome::Exhausted`].
#[derive(Clone, Debug)]
pub struct SearchBudget {
    pub node_limit: u64,
    pub time_limit: Option<Duration>,
    /// Try uniformly random subspaces before the exhaustive search.
    pub randomized_first: bool,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            node_limit: 2_000_000_000,
            time_limit: None,
            randomized_first: true,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn with_nodes(node_limit: u64) -> Self {
        SearchBudget {
            node_limit,
            ..Default::default()
        }
    }
}

/// Result of a budgeted search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome<T> {
    Found(T),
    /// Nonexistence, proved by exhaustive search or by a direct argument.
    NoneExists(String),
    /// The budget ran out first; nothing is claimed.
    Exhausted { nodes: u64 },
}

impl<T> Outcome<T> {
    pub fn found(self) -> Option<T> {
        match self {
            Outcome::Found(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, Outcome::Found(_))
    }

    pub fn is_none_exists(&self) -> bool {
        matches!(self, Outcome::NoneExists(_))
    }

    pub fn is_exhausted(&self) -> bool {
        matches!(self, Outcome::Exhausted { .. })
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Outcome<U> {
        match self {
            Outcome::Found(t) => Outcome::Found(f(t)),
            Outcome::NoneExists(r) => Outcome::NoneExists(r),
            Outcome::Exhausted { nodes } => Outcome::Exhausted { nodes },
        }
    }
}

/// Node and time accounting shared by the searches.
pub(crate) struct Meter {
    nodes: u64,
    limit: u64,
    deadline: Option<Instant>,
}

impl Meter {
    pub(crate) fn new(budget: &SearchBudget) -> Self {
        Meter {
            nodes: 0,
            limit: budget.node_limit,
            deadline: budget.time_limit.map(|t| Instant::now() + t),
        }
    }

    /// Counts one node; false once a limit is hit.
    #[inline]
    pub(crate) fn tick(&mut self) -> bool {
        self.nodes += 1;
        if self.nodes > self.limit {
            return false;
        }
        if self.nodes & 0xFFF == 0 {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return false;
                }
            }
        }
        true
    }

    pub(crate) fn nodes(&self) -> u64 {
        self.nodes
    }
}

/// Above this estimated work the top-down scan is not attempted.
const TOPDOWN_AVOID_LIMIT: u128 = 1 << 20;
const TOPDOWN_MAX_LIMIT: u128 = 1 << 27;

/// Independent check: `W ∩ S = ∅`, element by element.
pub fn verify_avoids(w: &Subspace, s: &GroupSet) -> bool {
    w.spec() == s.spec() && w.elements().into_iter().all(|x| !s.contains(x))
}

/// Independent check: `W ⊆ T`, element by element.
pub fn verify_contained(w: &Subspace, t: &GroupSet) -> bool {
    w.spec() == t.spec() && w.elements().into_iter().all(|x| t.contains(x))
}

enum Step {
    Continue,
    Stop,
}

/// Bottom-up canonical search over subspaces of `spec` inside `good`.
struct Dfs<'a> {
    spec: GroupSpec,
    meter: &'a mut Meter,
    /// Find mode stops at this depth; max mode stops there too (known upper bound).
    target: u32,
    /// Max mode keeps going after partial successes.
    maximise: bool,
    best: Vec<Point>,
    exhausted: bool,
}

impl Dfs<'_> {
    fn extend(&self, g: &GroupSet, y: Point) -> GroupSet {
        let sp = self.spec;
        if sp.is_binary() {
            return g.intersection(&g.translate(y)).expect("same ambient");
        }
        // z ∈ G' iff z + c·y ∈ G for every c.
        let mut out = g.clone();
        for c in 1..sp.p() {
            let shift = sp.neg(sp.scale(c, y));
            out = out.intersection(&g.translate(shift)).expect("same ambient");
        }
        out
    }

    fn candidates(&self, g: &GroupSet, pivots: &[u32], min_pivot: u32) -> Vec<Point> {
        let sp = self.spec;
        let m = sp.n();
        if min_pivot == 0 {
            return Vec::new();
        }
        let lower = sp.pow(m - min_pivot);
        if sp.is_binary() {
            let mask = pivots.iter().fold(0u64, |acc, &c| acc | 1 << (m - 1 - c));
            return g.iter_from(lower).filter(|&y| y & mask == 0).collect();
        }
        g.iter_from(lower)
            .filter(|&y| {
                sp.leading(y).map(|(_, d)| d) == Some(1)
                    && pivots.iter().all(|&c| sp.digit(y, c) == 0)
                    && (2..sp.p()).all(|c| g.contains(sp.scale(c, y)))
            })
            .collect()
    }

    fn run(&mut self, g: &GroupSet, rows: &mut Vec<Point>, pivots: &mut Vec<u32>, min_pivot: u32) -> Step {
        let j = rows.len() as u32;
        if j > self.best.len() as u32 {
            self.best = rows.clone();
        }
        if j >= self.target {
            return Step::Stop;
        }
        let cands = self.candidates(g, pivots, min_pivot);
        // Extending by k more rows needs (p^k − 1)/(p − 1) normalised
        // candidates and k free pivot columns.
        let p = self.spec.p() as u128;
        let mut reach = 0u32;
        while reach < min_pivot && (p.pow(reach + 1) - 1) / (p - 1) <= cands.len() as u128 {
            reach += 1;
        }
        let need = if self.maximise {
            self.best.len() as u32 + 1
        } else {
            self.target
        };
        if j + reach < need {
            return Step::Continue;
        }
        for &y in &cands {
            if !self.meter.tick() {
                self.exhausted = true;
                return Step::Stop;
            }
            let g2 = self.extend(g, y);
            let lead = self.spec.leading(y).expect("nonzero candidate").0;
            rows.push(y);
            pivots.push(lead);
            let step = self.run(&g2, rows, pivots, lead);
            rows.pop();
            pivots.pop();
            if let Step::Stop = step {
                return Step::Stop;
            }
            if self.maximise && j + reach <= self.best.len() as u32 {
                return Step::Continue;
            }
        }
        Step::Continue
    }
}

/// Bottom-up search for a `d`-space inside `good` (which contains 0).
fn dfs_find(good: &GroupSet, d: u32, meter: &mut Meter) -> Outcome<Subspace> {
    let spec = good.spec();
    let mut dfs = Dfs {
        spec,
        meter,
        target: d,
        maximise: false,
        best: Vec::new(),
        exhausted: false,
    };
    dfs.run(good, &mut Vec::new(), &mut Vec::new(), spec.n());
    if dfs.best.len() as u32 >= d {
        let w = Subspace::span(spec, &dfs.best).expect("rows lie in the group");
        return Outcome::Found(w);
    }
    if dfs.exhausted {
        return Outcome::Exhausted {
            nodes: dfs.meter.nodes(),
        };
    }
    Outcome::NoneExists(format!("exhaustive search: no {d}-dimensional subspace"))
}

/// Top-down scan: some `W = ker F` with `dim F = c` and `W ∩ bad = ∅`.
fn topdown_find(spec: GroupSpec, bad: &[Point], c: u32, meter: &mut Meter) -> Outcome<Subspace> {
    let mut e = RrefEnumerator::new(spec, c).expect("c ≤ m");
    while let Some(rows) = e.next_rows() {
        if !meter.tick() {
            return Outcome::Exhausted { nodes: meter.nodes() };
        }
        if bad.iter().all(|&s| rows.iter().any(|&f| spec.dot(f, s) != 0)) {
            let f = Subspace::from_rref(spec, rows.to_vec());
            return Outcome::Found(f.annihilator());
        }
    }
    Outcome::NoneExists(format!("no subspace of codimension {c} avoids the set"))
}

fn topdown_cost(m: u32, c: u32, p: u32, bad: usize) -> u128 {
    gaussian_binomial_u128(m, c, p)
        .unwrap_or(u128::MAX)
        .saturating_mul(bad.max(1) as u128)
}

/// A `d`-dimensional `W ≤ V` with `W ∩ S = ∅`.
///
/// When `μ_V(S) < p^{−d}` and `0 ∉ S` one always exists and the exact
/// search finds it. With `randomized_first` a few uniform samples are tried
/// first; an empty `S` returns the canonically first `d`-space of `V`.
pub fn find_subspace_avoiding(
    s: &GroupSet,
    v: &Subspace,
    d: u32,
    budget: &SearchBudget,
) -> Result<Outcome<Subspace>> {
    s.spec().same_as(&v.spec())?;
    if d > v.dim() {
        return Err(Error::range(
            "subspace dimension",
            format!("d = {d} exceeds dim V = {}", v.dim()),
        ));
    }
    if s.contains(0) {
        return Ok(Outcome::NoneExists("0 ∈ S, so every subspace meets S".into()));
    }
    let coords = v.induced_coordinates();
    let ind = coords.induced_spec();
    let bad = GroupSet::from_points(
        ind,
        s.iter().filter(|&x| v.contains(x)).map(|x| coords.forward_unchecked(x)),
    )?;
    if d == 0 || bad.is_empty() {
        let mut e = RrefEnumerator::new(ind, d)?;
        let rows = e.next_rows().expect("d ≤ m").to_vec();
        return Ok(Outcome::Found(coords.lift_subspace(&Subspace::from_rref(ind, rows))));
    }
    let mut meter = Meter::new(budget);
    if budget.randomized_first {
        let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
        for _ in 0..32 {
            if !meter.tick() {
                return Ok(Outcome::Exhausted { nodes: meter.nodes() });
            }
            let w = sample_uniform_subspace(ind, d, &mut rng)?;
            if w.elements().into_iter().all(|x| !bad.contains(x)) {
                return Ok(Outcome::Found(coords.lift_subspace(&w)));
            }
        }
    }
    let m = ind.n();
    let out = if topdown_cost(m, m - d, ind.p(), bad.card() as usize) <= TOPDOWN_AVOID_LIMIT {
        topdown_find(ind, &bad.points(), m - d, &mut meter)
    } else {
        dfs_find(&bad.complement(), d, &mut meter)
    };
    Ok(out.map(|w| coords.lift_subspace(&w)))
}

/// The largest subspace contained in `T`, or `NoneExists` when `0 ∉ T`.
pub fn max_subspace_in(t: &GroupSet, budget: &SearchBudget) -> Result<Outcome<(u32, Subspace)>> {
    let spec = t.spec();
    if !t.contains(0) {
        return Ok(Outcome::NoneExists("0 ∉ T".into()));
    }
    let bad = t.complement();
    let n = spec.n();
    if bad.is_empty() {
        return Ok(Outcome::Found((n, Subspace::whole(spec))));
    }
    let mut meter = Meter::new(budget);
    let bad_pts = bad.points();
    // Top-down: the first codimension with an avoiding kernel is optimal.
    let mut c = 1;
    while c <= n && topdown_cost(n, c, spec.p(), bad_pts.len()) <= TOPDOWN_MAX_LIMIT {
        match topdown_find(spec, &bad_pts, c, &mut meter) {
            Outcome::Found(w) => return Ok(Outcome::Found((n - c, w))),
            Outcome::Exhausted { nodes } => return Ok(Outcome::Exhausted { nodes }),
            Outcome::NoneExists(_) => c += 1,
        }
    }
    // Every codimension below c failed, so the answer is at most n − c.
    let hi = n - c;
    let mut dfs = Dfs {
        spec,
        meter: &mut meter,
        target: hi,
        maximise: true,
        best: Vec::new(),
        exhausted: false,
    };
    dfs.run(t, &mut Vec::new(), &mut Vec::new(), n);
    if dfs.exhausted {
        return Ok(Outcome::Exhausted {
            nodes: dfs.meter.nodes(),
        });
    }
    let w = Subspace::span(spec, &dfs.best)?;
    Ok(Outcome::Found((w.dim(), w)))
}

/// `S = V' \ {0}` with `dim V' = n + 1 − d`: every `d`-space meets `V'`
/// nontrivially, so no `d`-space avoids `S`, although `|S| = 2^{n+1−d} − 1`.
pub fn sharpness_witness(n: u32, d: u32) -> Result<GroupSet> {
    if d < 1 || d > n {
        return Err(Error::range("d", format!("need 1 ≤ d ≤ n, got d = {d}, n = {n}")));
    }
    let spec = GroupSpec::binary(n)?;
    let k = n + 1 - d;
    GroupSet::from_points(spec, 1..(1u64 << k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::enumerate_subspaces;
    use rand::{Rng, SeedableRng};

    fn f2(n: u32) -> GroupSpec {
        GroupSpec::binary(n).unwrap()
    }

    /// Oracle: scan every d-subspace of V.
    fn exists_avoiding(s: &GroupSet, v: &Subspace, d: u32) -> bool {
        enumerate_subspaces(v, d).unwrap().any(|w| verify_avoids(&w, s))
    }

    fn max_dim_oracle(t: &GroupSet) -> Option<u32> {
        let whole = Subspace::whole(t.spec());
        (0..=t.spec().n())
            .rev()
            .find(|&d| enumerate_subspaces(&whole, d).unwrap().any(|w| verify_contained(&w, t)))
    }

    #[test]
    fn empty_set_returns_canonical_first() {
        let g = f2(4);
        let w = find_subspace_avoiding(&GroupSet::empty(g), &Subspace::whole(g), 2, &SearchBudget::default())
            .unwrap()
            .found()
            .unwrap();
        assert_eq!(w, enumerate_subspaces(&Subspace::whole(g), 2).unwrap().next().unwrap());
    }

    #[test]
    fn zero_in_set_is_immediate_none() {
        let g = f2(3);
        let s = GroupSet::from_points(g, [0]).unwrap();
        let out = find_subspace_avoiding(&s, &Subspace::whole(g), 1, &SearchBudget::default()).unwrap();
        assert!(out.is_none_exists());
    }

    #[test]
    fn sharpness_witness_has_no_avoiding_space() {
        for n in 1..=6 {
            for d in 1..=n {
                let s = sharpness_witness(n, d).unwrap();
                assert_eq!(s.card(), (1u64 << (n + 1 - d)) - 1);
                let out = find_subspace_avoiding(&s, &Subspace::whole(f2(n)), d, &SearchBudget::default())
                    .unwrap();
                assert!(out.is_none_exists(), "n={n} d={d}: {out:?}");
            }
        }
        assert_eq!(sharpness_witness(4, 4).unwrap().card(), 1);
        assert!(sharpness_witness(3, 0).is_err());
        assert!(sharpness_witness(3, 4).is_err());
    }

    #[test]
    fn dfs_agrees_with_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for p in [2u32, 3] {
            for n in 2..=5u32 {
                if p == 3 && n > 4 {
                    continue;
                }
                let g = GroupSpec::new(p, n).unwrap();
                let whole = Subspace::whole(g);
                for _ in 0..25 {
                    let density = rng.random_range(0.05..0.6);
                    let s = GroupSet::from_predicate(g, |x| x != 0 && rng.random_bool(density));
                    for d in 1..=n.min(3) {
                        let mut meter = Meter::new(&SearchBudget::default());
                        let via_dfs = dfs_find(&s.complement(), d, &mut meter);
                        let expected = exists_avoiding(&s, &whole, d);
                        assert_eq!(via_dfs.is_found(), expected, "p={p} n={n} d={d} S={s:?}");
                        if let Outcome::Found(w) = via_dfs {
                            assert!(verify_avoids(&w, &s) && w.dim() == d);
                        }
                        let mut meter = Meter::new(&SearchBudget::default());
                        let bad = s.points();
                        assert_eq!(topdown_find(g, &bad, n - d, &mut meter).is_found(), expected);
                    }
                }
            }
        }
    }

    #[test]
    fn bose_burton_regime_always_succeeds() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for n in 2..=6u32 {
            let g = f2(n);
            for d in 1..=n.min(3) {
                let bound = ((1u64 << n) - 1) / ((1u64 << d) - 1);
                let max_size = if ((1u64 << n) - 1).is_multiple_of((1u64 << d) - 1) { bound - 1 } else { bound };
                for _ in 0..30 {
                    let size = rng.random_range(0..=max_size);
                    let mut pts: Vec<Point> = (1..g.order()).collect();
                    for i in 0..size as usize {
                        let j = rng.random_range(i..pts.len());
                        pts.swap(i, j);
                    }
                    let s = GroupSet::from_points(g, pts[..size as usize].iter().copied()).unwrap();
                    let w = find_subspace_avoiding(&s, &Subspace::whole(g), d, &SearchBudget::default())
                        .unwrap()
                        .found()
                        .expect("guaranteed regime");
                    assert!(verify_avoids(&w, &s));
                }
            }
        }
    }

    #[test]
    fn avoiding_inside_a_proper_subspace() {
        let g = f2(6);
        let v = Subspace::span(g, &[0b110000, 0b001100, 0b000011, 0b101010]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let s = GroupSet::from_predicate(g, |x| x != 0 && rng.random_bool(0.3));
            for d in 1..=3 {
                let budget = SearchBudget {
                    randomized_first: false,
                    ..Default::default()
                };
                let out = find_subspace_avoiding(&s, &v, d, &budget).unwrap();
                assert_eq!(out.is_found(), exists_avoiding(&s, &v, d));
                if let Outcome::Found(w) = out {
                    assert!(v.contains_subspace(&w) && verify_avoids(&w, &s));
                }
            }
        }
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let g = f2(10);
        let s = sharpness_witness(10, 5).unwrap();
        let budget = SearchBudget {
            node_limit: 10,
            randomized_first: false,
            ..Default::default()
        };
        let mut meter = Meter::new(&budget);
        assert!(dfs_find(&s.complement(), 5, &mut meter).is_exhausted());
        let out = find_subspace_avoiding(&s, &Subspace::whole(g), 5, &budget).unwrap();
        assert!(out.is_exhausted());
    }

    #[test]
    fn max_subspace_examples() {
        let g = f2(5);
        let zero = GroupSet::from_points(g, [0]).unwrap();
        assert_eq!(max_subspace_in(&zero, &SearchBudget::default()).unwrap().found().unwrap().0, 0);
        let v = Subspace::span(g, &[0b10001, 0b01010, 0b00110]).unwrap();
        let (d, w) = max_subspace_in(&GroupSet::from_subspace(&v), &SearchBudget::default())
            .unwrap()
            .found()
            .unwrap();
        assert_eq!((d, w), (3, v));
        assert!(max_subspace_in(&GroupSet::empty(g), &SearchBudget::default())
            .unwrap()
            .is_none_exists());
    }

    #[test]
    fn max_subspace_matches_oracle_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for p in [2u32, 3] {
            for n in 1..=5u32 {
                if p == 3 && n > 3 {
                    continue;
                }
                let g = GroupSpec::new(p, n).unwrap();
                for _ in 0..30 {
                    let density = rng.random_range(0.3..0.95);
                    let t = GroupSet::from_predicate(g, |x| x == 0 || rng.random_bool(density));
                    let (d, w) = max_subspace_in(&t, &SearchBudget::default()).unwrap().found().unwrap();
                    assert!(verify_contained(&w, &t) && w.dim() == d);
                    assert_eq!(Some(d), max_dim_oracle(&t));
                }
            }
        }
    }

    #[test]
    fn max_subspace_branch_and_bound_matches_oracle() {
        // Force the bottom-up phase by making the top-down scan too costly.
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..10 {
            let g = f2(5);
            let t = GroupSet::from_predicate(g, |x| x == 0 || rng.random_bool(0.7));
            let mut meter = Meter::new(&SearchBudget::default());
            let mut dfs = Dfs {
                spec: g,
                meter: &mut meter,
                target: 5,
                maximise: true,
                best: Vec::new(),
                exhausted: false,
            };
            dfs.run(&t, &mut Vec::new(), &mut Vec::new(), 5);
            assert_eq!(Some(dfs.best.len() as u32), max_dim_oracle(&t));
        }
    }

    #[test]
    fn max_subspace_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let g = f2(6);
        for _ in 0..20 {
            let t = GroupSet::from_predicate(g, |x| x == 0 || rng.random_bool(0.6));
            let bigger = t.union(&GroupSet::from_predicate(g, |_| rng.random_bool(0.3))).unwrap();
            let a = max_subspace_in(&t, &SearchBudget::default()).unwrap().found().unwrap().0;
            let b = max_subspace_in(&bigger, &SearchBudget::default()).unwrap().found().unwrap().0;
            assert!(a <= b);
        }
    }
}
