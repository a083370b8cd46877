//! The extremal function `f(n, α)`: the largest `d` such that `A + A`
//! contains a `d`-dimensional subspace for every `A ⊆ F_2^n` with
//! `μ(A) ≥ α`; its parallelepiped generalisation; and the Hamming-ball
//! upper-bound experiment.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupSpec, Point};
use crate::rational::{serde_str, Rational};
use crate::search::{max_subspace_in, Meter, Outcome, SearchBudget};
use crate::set::{niveau_set, GroupSet};
use crate::subspace::{enumerate_subspaces, Subspace};

/// Largest `n` accepted by exact mode without `force`.
pub const EXACT_CAP: u32 = 4;

/// Largest number of sets exact mode will enumerate, even when forced.
pub const EXACT_ENUMERATION_LIMIT: u128 = 1 << 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FMode {
    Exact { force: bool },
    Sampled { trials: u32, seed: u64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct FTableEntry {
    pub n: u32,
    #[serde(with = "serde_str")]
    pub alpha: Rational,
    pub mode: &'static str,
    pub value: u32,
    /// Sampled mode only bounds `f` from above.
    pub upper_bound_only: bool,
    /// A set attaining `value`.
    pub witness: GroupSet,
}

/// Least `k ≥ 1` with `k / 2^n ≥ α`.
fn min_size(n: u32, alpha: &Rational) -> u64 {
    let order = 1u128 << n;
    let k = (alpha.numer() * order).div_ceil(*alpha.denom());
    k.max(1) as u64
}

fn binomial(n: u64, k: u64) -> u128 {
    let mut b = 1u128;
    for i in 0..k {
        b = b.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    b
}

/// `A + A` as a bitmask, for `n ≤ 6`.
fn sumset_mask(a: u64) -> u64 {
    let mut out = 0u64;
    let mut x = a;
    while x != 0 {
        let i = x.trailing_zeros() as u64;
        x &= x - 1;
        let mut y = a;
        while y != 0 {
            let j = y.trailing_zeros() as u64;
            y &= y - 1;
            out |= 1 << (i ^ j);
        }
    }
    out
}

/// Subspace bitmasks with their dimensions, largest dimension first.
fn subspace_masks(spec: GroupSpec) -> Result<Vec<(u64, u32)>> {
    let whole = Subspace::whole(spec);
    let mut out = Vec::new();
    for d in (0..=spec.n()).rev() {
        for w in enumerate_subspaces(&whole, d)? {
            let mask = w.elements().into_iter().fold(0u64, |m, x| m | 1 << x);
            out.push((mask, d));
        }
    }
    Ok(out)
}

fn max_dim_mask(table: &[(u64, u32)], t: u64) -> u32 {
    table.iter().find(|(m, _)| m & !t == 0).map(|&(_, d)| d).expect("{0} lies in A + A")
}

fn check_alpha(alpha: &Rational) -> Result<()> {
    if *alpha.numer() == 0 || *alpha > Rational::from_integer(1) {
        return Err(Error::range("alpha", format!("{alpha} not in (0, 1]")));
    }
    Ok(())
}

/// `f(n, α)` by exhaustive minimisation, or an upper bound from random sets.
///
/// `A ⊆ A'` implies `A + A ⊆ A' + A'`, so the minimum over `μ(A) ≥ α` is
/// attained by a set of the least admissible size `k`; exact mode
/// enumerates exactly the `k`-subsets. The witness is the attaining set
/// with the least bitmask.
pub fn f_exact(n: u32, alpha: Rational, mode: FMode) -> Result<FTableEntry> {
    check_alpha(&alpha)?;
    let spec = GroupSpec::binary(n)?;
    let k = min_size(n, &alpha);
    match mode {
        FMode::Exact { force } => {
            if n > EXACT_CAP && !force {
                return Err(Error::range(
                    "n",
                    format!("exact mode is limited to n ≤ {EXACT_CAP}; pass force to go beyond"),
                ));
            }
            let count = binomial(spec.order(), k);
            if n > 6 || count > EXACT_ENUMERATION_LIMIT {
                return Err(Error::range("exact enumeration", format!("{count} sets of size {k}")));
            }
            let table = subspace_masks(spec)?;
            let full = if n == 6 { u64::MAX } else { (1u64 << spec.order()) - 1 };
            let mut best = (u32::MAX, 0u64);
            // Gosper's hack over k-subsets in increasing mask order.
            let mut a: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
            loop {
                let v = max_dim_mask(&table, sumset_mask(a));
                if v < best.0 {
                    best = (v, a);
                }
                if a == full || k == 0 {
                    break;
                }
                let c = a & a.wrapping_neg();
                let r = a.wrapping_add(c);
                if r == 0 || r & !full != 0 {
                    break;
                }
                a = (((r ^ a) >> 2) / c) | r;
                if a & !full != 0 {
                    break;
                }
            }
            let witness = GroupSet::from_words(spec, vec![best.1])?;
            Ok(FTableEntry {
                n,
                alpha,
                mode: "exact",
                value: best.0,
                upper_bound_only: false,
                witness,
            })
        }
        FMode::Sampled { trials, seed } => {
            if trials == 0 {
                return Err(Error::range("trials", "must be at least 1"));
            }
            let results: Vec<(u32, u32, GroupSet)> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(t as u64));
                    let pts = sample(&mut rng, spec.order() as usize, k as usize);
                    let a = GroupSet::from_points(spec, pts.into_iter().map(|x| x as Point))?;
                    let sum = a.sumset(&a)?;
                    match max_subspace_in(&sum, &SearchBudget::default())? {
                        Outcome::Found((d, _)) => Ok((d, t, a)),
                        other => Err(Error::Certificate(format!("max subspace search failed: {other:?}"))),
                    }
                })
                .collect::<Result<_>>()?;
            let (value, _, witness) = results
                .into_iter()
                .min_by_key(|(d, t, _)| (*d, *t))
                .expect("at least one trial");
            Ok(FTableEntry {
                n,
                alpha,
                mode: "sampled",
                value,
                upper_bound_only: true,
                witness,
            })
        }
    }
}

/// Re-verifies a table entry: the witness has density at least `α` and
/// the largest subspace in `W + W` has dimension `value`.
pub fn verify_entry(e: &FTableEntry) -> Result<bool> {
    let w = &e.witness;
    if w.mu() < e.alpha {
        return Ok(false);
    }
    let sum = w.sumset(w)?;
    Ok(match max_subspace_in(&sum, &SearchBudget::default())? {
        Outcome::Found((d, _)) => d == e.value,
        _ => false,
    })
}

/// Outcome of a parallelepiped check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum FkOutcome {
    /// Every tuple extends; `tuples` were checked.
    Holds { tuples: u64 },
    /// No `a ∈ A \ V` has the whole parallelepiped of this tuple in `A`.
    Fails { tuple: Vec<Point> },
    Exhausted { nodes: u64 },
}

/// Whether every `(v_1, …, v_k) ∈ V^k` has some `a ∈ A \ V` with
/// `a + Σ_{i ∈ I} v_i ∈ A` for all `I ⊆ [k]`. Tuples are enumerated lazily
/// and each stops at the first good `a`.
pub fn fk_check(a: &GroupSet, v: &Subspace, k: u32, budget: &SearchBudget) -> Result<FkOutcome> {
    let spec = a.spec();
    spec.same_as(&v.spec())?;
    if k == 0 || k > 16 {
        return Err(Error::range("k", format!("{k} not in [1, 16]")));
    }
    let outside: Vec<Point> = a.iter().filter(|&x| !v.contains(x)).collect();
    let elems = v.elements();
    let mut meter = Meter::new(budget);
    let mut idx = vec![0usize; k as usize];
    let mut sums = vec![0 as Point; 1 << k];
    let mut tuples = 0u64;
    loop {
        let tuple: Vec<Point> = idx.iter().map(|&i| elems[i]).collect();
        for mask in 1usize..1 << k {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = spec.add(sums[mask & (mask - 1)], tuple[low]);
        }
        let mut ok = false;
        for &x in &outside {
            if !meter.tick() {
                return Ok(FkOutcome::Exhausted { nodes: meter.nodes() });
            }
            if sums.iter().all(|&s| a.contains(spec.add(x, s))) {
                ok = true;
                break;
            }
        }
        if !ok {
            return Ok(FkOutcome::Fails { tuple });
        }
        tuples += 1;
        // Odometer over V^k.
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(FkOutcome::Holds { tuples });
            }
            idx[pos] += 1;
            if idx[pos] < elems.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// One row of the Hamming-ball experiment.
#[derive(Clone, Debug, Serialize)]
pub struct NiveauRow {
    pub n: u32,
    #[serde(with = "serde_str")]
    pub alpha: Rational,
    pub w: u32,
    #[serde(with = "serde_str")]
    pub density: Rational,
    /// Dimension of the largest subspace inside `A + A`.
    pub max_dim: u32,
    /// `n − max_dim`.
    pub gap: u32,
    pub c_alpha_sqrt_n: f64,
}

/// Builds the Hamming ball of density `≥ α`, computes the largest subspace
/// in `A + A` exactly and reports the gap against `C_α √n`.
pub fn niveau_experiment(n: u32, alpha: Rational, budget: &SearchBudget) -> Result<Outcome<NiveauRow>> {
    let ns = niveau_set(n, &alpha)?;
    let sum = ns.set.sumset(&ns.set)?;
    Ok(max_subspace_in(&sum, budget)?.map(|(d, _)| NiveauRow {
        n,
        alpha,
        w: ns.w,
        density: ns.set.mu(),
        max_dim: d,
        gap: n - d,
        c_alpha_sqrt_n: ns.c_alpha * (n as f64).sqrt(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::popular_difference_set;
    use rand::{Rng, SeedableRng};

    fn exact(n: u32, a: Rational) -> FTableEntry {
        f_exact(n, a, FMode::Exact { force: false }).unwrap()
    }

    /// Oracle: minimise over every nonempty subset, with `max_subspace_in`.
    fn brute_f(n: u32, alpha: Rational) -> u32 {
        let g = GroupSpec::binary(n).unwrap();
        let mut best = u32::MAX;
        for mask in 1u64..1 << (1 << n) {
            let a = GroupSet::from_words(g, vec![mask]).unwrap();
            if a.mu() < alpha {
                continue;
            }
            let sum = a.sumset_direct(&a);
            let d = max_subspace_in(&sum, &SearchBudget::default()).unwrap().found().unwrap().0;
            best = best.min(d);
        }
        best
    }

    #[test]
    fn full_density_gives_n() {
        for n in 0..=4 {
            assert_eq!(exact(n, Rational::from_integer(1)).value, n);
        }
    }

    #[test]
    fn matches_brute_force_for_small_n() {
        for n in 1..=3 {
            for k in 1..=(1u128 << n) {
                let alpha = Rational::new(k, 1 << n);
                assert_eq!(exact(n, alpha).value, brute_f(n, alpha), "n = {n}, alpha = {alpha}");
            }
        }
    }

    #[test]
    fn f_3_half_and_witness() {
        let e = exact(3, Rational::new(1, 2));
        assert!(verify_entry(&e).unwrap());
        assert!(e.witness.card() >= 4);
        assert!(e.value <= 3);
    }

    #[test]
    fn monotone_in_alpha_at_n4() {
        let mut prev = 0;
        for k in 1..=16u128 {
            let e = exact(4, Rational::new(k, 16));
            assert!(e.value >= prev);
            assert!(verify_entry(&e).unwrap());
            prev = e.value;
        }
    }

    #[test]
    fn exact_cap_is_enforced() {
        assert!(f_exact(5, Rational::new(1, 2), FMode::Exact { force: false }).is_err());
        let e = f_exact(5, Rational::new(3, 32), FMode::Exact { force: true }).unwrap();
        assert!(verify_entry(&e).unwrap());
    }

    #[test]
    fn sampled_bounds_exact_from_above() {
        for k in [4u128, 8, 12] {
            let alpha = Rational::new(k, 16);
            let s = f_exact(4, alpha, FMode::Sampled { trials: 50, seed: 1 }).unwrap();
            assert!(s.upper_bound_only);
            assert!(s.value >= exact(4, alpha).value);
            assert!(verify_entry(&s).unwrap());
        }
    }

    #[test]
    fn sandwich_with_popular_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..50 {
            let n = rng.random_range(3..=7);
            let g = GroupSpec::binary(n).unwrap();
            let a = GroupSet::from_predicate(g, |_| rng.random_bool(0.3));
            if a.is_empty() {
                continue;
            }
            let d = popular_difference_set(&a, &Subspace::whole(g)).unwrap();
            let sum = a.sumset(&a).unwrap();
            assert!(d.is_subset(&sum));
            let budget = SearchBudget::default();
            let big = max_subspace_in(&sum, &budget).unwrap().found().unwrap().0;
            if let Some((small, _)) = max_subspace_in(&d, &budget).unwrap().found() {
                assert!(big >= small);
            }
        }
    }

    #[test]
    fn fk_trivial_cases() {
        let g = GroupSpec::binary(4).unwrap();
        let v = Subspace::span(g, &[1, 2]).unwrap();
        for k in 1..=3 {
            let out = fk_check(&GroupSet::full(g), &v, k, &SearchBudget::default()).unwrap();
            assert_eq!(out, FkOutcome::Holds { tuples: 4u64.pow(k) });
            let out = fk_check(&GroupSet::from_subspace(&v), &v, k, &SearchBudget::default()).unwrap();
            assert!(matches!(out, FkOutcome::Fails { .. }));
        }
    }

    #[test]
    fn fk_one_matches_difference_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..200 {
            let n = rng.random_range(2..=8);
            let g = GroupSpec::binary(n).unwrap();
            let a = GroupSet::from_predicate(g, |_| rng.random_bool(0.6));
            let d = rng.random_range(0..=n.min(3));
            let v = crate::subspace::sample_uniform_subspace(g, d, &mut rng).unwrap();
            let out = fk_check(&a, &v, 1, &SearchBudget::default()).unwrap();
            // Direct double loop: V ⊆ (A \ V) − (A \ V).
            let off: Vec<Point> = a.iter().filter(|&x| !v.contains(x)).collect();
            let expected = v.elements().into_iter().all(|y| off.iter().any(|&x| off.contains(&(x ^ y))));
            assert_eq!(matches!(out, FkOutcome::Holds { .. }), expected);
        }
    }

    #[test]
    fn fk_budget() {
        let g = GroupSpec::binary(6).unwrap();
        let v = Subspace::span(g, &[1, 2, 4]).unwrap();
        let out = fk_check(&GroupSet::full(g), &v, 3, &SearchBudget::with_nodes(10)).unwrap();
        assert!(matches!(out, FkOutcome::Exhausted { .. }));
    }

    #[test]
    fn niveau_rows() {
        let budget = SearchBudget::default();
        let row = niveau_experiment(12, Rational::new(1, 5), &budget).unwrap().found().unwrap();
        assert!(row.max_dim <= 11);
        assert!(row.density >= Rational::new(1, 5));
        assert_eq!(row.gap, 12 - row.max_dim);
        let near_half = niveau_experiment(9, Rational::new(49, 100), &budget).unwrap().found().unwrap();
        assert!(near_half.gap <= 1);
    }
}
