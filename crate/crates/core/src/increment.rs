//! The sparsity/expansion dichotomy engine.
//!
//! For sets `A_1, …, A_r ⊆ F_p^n` the engine looks for a subspace `V` on
//! which every index is either sparse (`μ_V(A_i) < α`) or expanding
//! (`μ_V(D_i) > 1 − γ`, with `D_i = {v ∈ V : μ_{A_i}∘μ_{A_i}(v) ≥ ½ μ(V)²}`).
//! While some index has `μ*_V(A_i) ≥ α` and is not expanding, an
//! increment step moves to a coset `U = t + V'` with
//! `μ_U(A_i) ≥ (1 + c) μ*_V(A_i)`.
//!
//! The increment coset is found by an exhaustive scan over subspaces of
//! increasing codimension inside `V` (in the induced coordinates of `V`)
//! and every step is re-verified by direct counting.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{ell_rational, gaussian_binomial_u128, GroupSpec, Point};
use crate::rational::{serde_str, Rational};
use crate::set::GroupSet;
use crate::spectral::{self, ConvCounts};
use crate::subspace::{Coset, InducedCoordinates, RrefEnumerator, Subspace};

/// Engine parameters. `c_inc` is the increment factor: `1/128` or `1/16`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DichotomyParams {
    #[serde(with = "serde_str")]
    pub alpha: Rational,
    #[serde(with = "serde_str")]
    pub gamma: Rational,
    #[serde(with = "serde_str")]
    pub c_inc: Rational,
    pub max_step_codim: u32,
    /// Largest number of candidate subspaces scanned at one codimension.
    pub scan_limit: u64,
    pub p: u32,
}

impl DichotomyParams {
    pub fn new(p: u32, alpha: Rational, gamma: Rational) -> Result<Self> {
        let params = DichotomyParams {
            alpha,
            gamma,
            c_inc: Rational::new(1, 128),
            max_step_codim: 6,
            scan_limit: 100_000_000,
            p,
        };
        params.validate()?;
        Ok(params)
    }

    /// Selects `c_inc = 1/factor`; `factor` must be 128 or 16.
    pub fn with_factor(mut self, factor: u32) -> Result<Self> {
        self.c_inc = Rational::new(1, factor as u128);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let one = Rational::from_integer(1);
        for (name, v) in [("alpha", &self.alpha), ("gamma", &self.gamma)] {
            if *v.numer() == 0 || *v >= one {
                return Err(Error::range(name, format!("{v} is not in (0, 1)")));
            }
        }
        if self.c_inc != Rational::new(1, 128) && self.c_inc != Rational::new(1, 16) {
            return Err(Error::range("increment factor", format!("{} is not 1/128 or 1/16", self.c_inc)));
        }
        if self.max_step_codim == 0 {
            return Err(Error::range("max_step_codim", "must be at least 1"));
        }
        Ok(())
    }

    /// Per-index step bound `⌈1/c⌉ · 𝓛(α)`.
    pub fn per_index_bound(&self) -> Result<u32> {
        let inv = self.c_inc.denom().div_ceil(*self.c_inc.numer());
        Ok(inv as u32 * ell_rational(&self.alpha)?)
    }
}

/// Status of one index on a subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    Sparse,
    Expanding,
    SparseAndExpanding,
    /// Neither sparse nor expanding.
    Failing,
}

impl Status {
    pub fn holds(self) -> bool {
        self != Status::Failing
    }
}

/// Exact quantities behind one index's status.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IndexCheck {
    pub status: Status,
    #[serde(with = "serde_str")]
    pub mu_v: Rational,
    #[serde(with = "serde_str")]
    pub mu_star: Rational,
    #[serde(with = "serde_str")]
    pub mu_d: Rational,
    /// `μ*_V(A_i) ≥ α` and not expanding: the engine must increment here.
    pub needs_increment: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DichotomyCheck {
    pub indices: Vec<IndexCheck>,
    /// Least index that needs an increment.
    pub first_failing: Option<usize>,
}

impl DichotomyCheck {
    pub fn statuses(&self) -> Vec<Status> {
        self.indices.iter().map(|c| c.status).collect()
    }
}

fn ge_rational(lhs_num: u128, lhs_den: u128, r: &Rational) -> bool {
    // lhs_num / lhs_den ≥ r
    lhs_num.saturating_mul(*r.denom()) >= r.numer().saturating_mul(lhs_den)
}

fn check_index(a: &GroupSet, cc: Option<&ConvCounts>, v: &Subspace, params: &DichotomyParams) -> Result<IndexCheck> {
    let size = v.size() as u128;
    let in_v = a.count_in_subspace(v) as u128;
    let star = a.maximal_density(v)?;
    let d_card = match cc {
        Some(cc) if !a.is_empty() => spectral::popular_from_counts(cc, v)?.card() as u128,
        _ => 0,
    };
    let sparse = !ge_rational(in_v, size, &params.alpha);
    // μ_V(D) > 1 − γ  ⇔  |D| · den > (den − num) · |V|.
    let (gn, gd) = (*params.gamma.numer(), *params.gamma.denom());
    let expanding = d_card * gd > (gd - gn) * size;
    let status = match (sparse, expanding) {
        (true, true) => Status::SparseAndExpanding,
        (true, false) => Status::Sparse,
        (false, true) => Status::Expanding,
        (false, false) => Status::Failing,
    };
    let needs_increment = ge_rational(star.count as u128, size, &params.alpha) && !expanding;
    Ok(IndexCheck {
        status,
        mu_v: Rational::new(in_v, size),
        mu_star: star.value,
        mu_d: Rational::new(d_card, size),
        needs_increment,
    })
}

fn self_counts(sets: &[GroupSet]) -> Result<Vec<Option<ConvCounts>>> {
    sets.iter()
        .map(|a| {
            if a.is_empty() {
                Ok(None)
            } else {
                spectral::conv_counts(a, a).map(Some)
            }
        })
        .collect()
}

fn check_cached(
    sets: &[GroupSet],
    counts: &[Option<ConvCounts>],
    v: &Subspace,
    params: &DichotomyParams,
) -> Result<DichotomyCheck> {
    let mut indices = Vec::with_capacity(sets.len());
    for (a, cc) in sets.iter().zip(counts) {
        a.spec().same_as(&v.spec())?;
        indices.push(check_index(a, cc.as_ref(), v, params)?);
    }
    let first_failing = indices.iter().position(|c| c.needs_increment);
    Ok(DichotomyCheck { indices, first_failing })
}

/// Exact status of every index on `V`.
pub fn check_dichotomy(sets: &[GroupSet], v: &Subspace, params: &DichotomyParams) -> Result<DichotomyCheck> {
    check_cached(sets, &self_counts(sets)?, v, params)
}

/// One increment step.
#[derive(Clone, Debug, Serialize)]
pub struct IncrementStep {
    /// `U = t + V'` with `V' ≤ V`.
    pub coset: CosetReport,
    pub codim_added: u32,
    /// The maximal-density shift `g` of `A` relative to `V`.
    pub shift: Point,
    #[serde(with = "serde_str")]
    pub mu_star_before: Rational,
    #[serde(with = "serde_str")]
    pub mu_u: Rational,
    /// `⟨μ_{A'}∘μ_{A'}, μ_C⟩` in the induced group of `V`.
    #[serde(with = "serde_str")]
    pub inner_product: Rational,
    #[serde(skip)]
    pub(crate) coset_value: Coset,
}

impl IncrementStep {
    pub fn coset_value(&self) -> &Coset {
        &self.coset_value
    }
}

/// Serialisable view of a coset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CosetReport {
    pub rep: Point,
    pub basis: Vec<Point>,
    pub dim: u32,
}

impl From<&Coset> for CosetReport {
    fn from(c: &Coset) -> Self {
        CosetReport {
            rep: c.rep(),
            basis: c.base().basis().to_vec(),
            dim: c.base().dim(),
        }
    }
}

/// Best coset found by the scan, in induced coordinates.
struct ScanHit {
    w: Subspace,
}

/// Scans codimension-`k` subspaces `W = ker F` of the induced group for
/// one with a coset attaining the increment; returns the one with least
/// RREF encoding.
fn scan_codim(
    ind: GroupSpec,
    a: &GroupSet,
    walsh: Option<&[i64]>,
    k: u32,
    params: &DichotomyParams,
) -> Option<ScanHit> {
    let (cn, cd) = (*params.c_inc.numer(), *params.c_inc.denom());
    let target = (cd + cn) * a.card() as u128;
    let mut best: Option<Subspace> = None;
    let mut consider = |rows: &[Point]| {
        let w = Subspace::from_rref(ind, rows.to_vec()).annihilator();
        if best.as_ref().is_none_or(|b| w.cmp_encoding(b).is_lt()) {
            best = Some(w);
        }
    };
    let mut e = RrefEnumerator::new(ind, k).expect("k ≤ m");
    let pts = a.points();
    let p = ind.p() as usize;
    let mut vals = vec![0i64; 1 << k];
    let mut labels = vec![0u64; p.pow(k)];
    while let Some(rows) = e.next_rows() {
        let max_scaled: u128 = if let Some(walsh) = walsh {
            // 2^k · N_t is the Walsh–Hadamard transform of Â over span F.
            for (s, slot) in vals.iter_mut().enumerate() {
                let mut f = 0u64;
                for (i, &r) in rows.iter().enumerate() {
                    if s >> i & 1 == 1 {
                        f ^= r;
                    }
                }
                *slot = walsh[f as usize];
            }
            let mut h = 1;
            while h < vals.len() {
                for b in (0..vals.len()).step_by(2 * h) {
                    for i in b..b + h {
                        let (x, y) = (vals[i], vals[i + h]);
                        vals[i] = x + y;
                        vals[i + h] = x - y;
                    }
                }
                h *= 2;
            }
            vals.iter().copied().max().unwrap_or(0).max(0) as u128
        } else {
            labels.iter_mut().for_each(|c| *c = 0);
            for &x in &pts {
                let mut lab = 0usize;
                for &f in rows.iter() {
                    lab = lab * p + ind.dot(f, x) as usize;
                }
                labels[lab] += 1;
            }
            *labels.iter().max().unwrap_or(&0) as u128 * (p as u128).pow(k)
        };
        if max_scaled * cd >= target {
            consider(rows);
        }
    }
    best.map(|w| ScanHit { w })
}

/// Escalating search for an increment coset of `a` (a subset of the
/// induced group) relative to the whole induced group.
fn find_increment(ind: GroupSpec, a: &GroupSet, params: &DichotomyParams) -> Result<(Subspace, Point)> {
    let walsh = ind.is_binary().then(|| spectral::walsh_coefficients(a));
    let m = ind.n();
    let (cn, cd) = (*params.c_inc.numer(), *params.c_inc.denom());
    let mut searched = 0;
    for k in 1..=params.max_step_codim.min(m) {
        let count = gaussian_binomial_u128(m, k, ind.p()).unwrap_or(u128::MAX);
        if count > params.scan_limit as u128 {
            break;
        }
        searched = k;
        if let Some(hit) = scan_codim(ind, a, walsh.as_deref(), k, params) {
            let w = hit.w;
            // Least coset representative among attaining cosets of W.
            let mut counts = std::collections::BTreeMap::new();
            for x in a.iter() {
                *counts.entry(w.reduce(x)).or_insert(0u128) += 1;
            }
            let pk = ind.pow(k) as u128;
            let rep = counts
                .iter()
                .find(|(_, &c)| c * pk * cd >= (cd + cn) * a.card() as u128)
                .map(|(&r, _)| r)
                .expect("scan reported an attaining coset");
            return Ok((w, rep));
        }
    }
    Err(Error::IncrementNotFound { max_codim: searched })
}

/// `A' = (A − g) ∩ V` in the induced coordinates of `V`.
fn restrict(a: &GroupSet, coords: &InducedCoordinates, g: Point) -> Result<GroupSet> {
    let sp = a.spec();
    let v = coords.subspace();
    GroupSet::from_points(
        coords.induced_spec(),
        a.iter()
            .map(|x| sp.sub(x, g))
            .filter(|&y| v.contains(y))
            .map(|y| coords.forward_unchecked(y)),
    )
}

fn increment_step_cached(
    a: &GroupSet,
    cc: Option<&ConvCounts>,
    v: &Subspace,
    params: &DichotomyParams,
) -> Result<IncrementStep> {
    a.spec().same_as(&v.spec())?;
    let sp = a.spec();
    let check = check_index(a, cc, v, params)?;
    if !check.needs_increment {
        return Err(Error::Precondition(format!(
            "index does not fail: mu* = {}, mu_V(D) = {}",
            check.mu_star, check.mu_d
        )));
    }
    let star = a.maximal_density(v)?;
    let g = star.argmax_shift;
    let coords = v.induced_coordinates();
    let ind = coords.induced_spec();
    let a1 = restrict(a, &coords, g)?;
    debug_assert_eq!(a1.card(), star.count);

    // D' = {v : μ_{A'}∘μ_{A'}(v) ≥ 1/2} in the induced group; C = V \ D'.
    let cc1 = spectral::conv_counts(&a1, &a1)?;
    let order = ind.order() as u128;
    let sq = (a1.card() as u128).pow(2);
    let c_set = GroupSet::from_predicate(ind, |x| 2 * order * (cc1.counts()[x as usize] as u128) < sq);
    if c_set.is_empty() {
        return Err(Error::HypothesisViolated {
            value: "C = V \\ D' is empty".into(),
        });
    }
    let mass: u128 = c_set.iter().map(|x| cc1.counts()[x as usize] as u128).sum();
    let inner = Rational::new(order * mass, sq * c_set.card() as u128);
    if 2 * order * mass > sq * c_set.card() as u128 {
        return Err(Error::HypothesisViolated {
            value: crate::rational::format_rational(&inner),
        });
    }

    let (w, rep) = find_increment(ind, &a1, params)?;
    let v_prime = coords.lift_subspace(&w);
    let t = sp.add(g, coords.backward(rep));
    let coset = Coset::new(v_prime, t)?;

    // Direct re-verification: |A ∩ U| · Q · |V| ≥ (Q + P) · |A'| · |U|.
    let hits = a.count_in_coset(&coset) as u128;
    let (cn, cd) = (*params.c_inc.numer(), *params.c_inc.denom());
    if hits * cd * (v.size() as u128) < (cd + cn) * star.count as u128 * coset.size() as u128 {
        return Err(Error::Certificate(format!(
            "increment coset has density {}/{} below (1 + c) mu*",
            hits,
            coset.size()
        )));
    }
    Ok(IncrementStep {
        coset: CosetReport::from(&coset),
        codim_added: w.codim(),
        shift: g,
        mu_star_before: star.value,
        mu_u: Rational::new(hits, coset.size() as u128),
        inner_product: inner,
        coset_value: coset,
    })
}

/// One increment step for a failing index: a coset `U = t + V'`, `V' ≤ V`,
/// with `μ_U(A) ≥ (1 + c_inc) μ*_V(A)`, of least codimension, then least
/// subspace encoding, then least representative.
pub fn increment_step(a: &GroupSet, v: &Subspace, params: &DichotomyParams) -> Result<IncrementStep> {
    let cc = if a.is_empty() {
        None
    } else {
        Some(spectral::conv_counts(a, a)?)
    };
    increment_step_cached(a, cc.as_ref(), v, params)
}

/// One row of the run trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub index: usize,
    pub coset: CosetReport,
    #[serde(with = "serde_str")]
    pub mu_star_before: Rational,
    #[serde(with = "serde_str")]
    pub mu_u: Rational,
    #[serde(with = "serde_str")]
    pub mu_star_after: Rational,
    pub codim_added: u32,
    pub codim_total: u32,
}

impl TraceRow {
    pub const CSV_HEADER: &'static str =
        "step,index,coset_rep,coset_dim,mu_star_before,mu_u,mu_star_after,codim_added,codim_total";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.step,
            self.index,
            self.coset.rep,
            self.coset.dim,
            crate::rational::format_rational(&self.mu_star_before),
            crate::rational::format_rational(&self.mu_u),
            crate::rational::format_rational(&self.mu_star_after),
            self.codim_added,
            self.codim_total
        )
    }
}

/// Full record of a dichotomy run.
#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub final_space: Subspace,
    pub statuses: Vec<Status>,
    pub final_check: DichotomyCheck,
    pub trace: Vec<TraceRow>,
    pub achieved_codim: u32,
    /// `r · 𝓛(α)^5 · 𝓛(γ)^2`; reported for comparison, not enforced.
    pub codim_budget: u128,
    pub steps_per_index: Vec<u32>,
    pub per_index_bound: u32,
    pub halted_within: bool,
    pub params: DichotomyParams,
}

/// Runs the increment iteration from `V_0 = F_p^n` until no index fails.
pub fn run_dichotomy(sets: &[GroupSet], params: &DichotomyParams) -> Result<DichotomyReport> {
    params.validate()?;
    let Some(first) = sets.first() else {
        return Err(Error::EmptySet("list of sets"));
    };
    let spec = first.spec();
    for a in sets {
        spec.same_as(&a.spec())?;
    }
    if spec.p() != params.p {
        return Err(Error::Precondition(format!(
            "parameters are for p = {} but the sets live in F_{}^{}",
            params.p,
            spec.p(),
            spec.n()
        )));
    }
    let r = sets.len();
    let counts = self_counts(sets)?;
    let bound = params.per_index_bound()?;
    let mut v = Subspace::whole(spec);
    let mut trace: Vec<TraceRow> = Vec::new();
    let mut steps = vec![0u32; r];
    let mut prev: Option<DichotomyCheck> = None;
    let (cn, cd) = (*params.c_inc.numer(), *params.c_inc.denom());
    let fail = |step: usize, cause: Error, trace: &[TraceRow]| Error::Dichotomy {
        step,
        cause: Box::new(cause),
        trace: trace.to_vec(),
    };
    let mut t = 0usize;
    loop {
        let check = check_cached(sets, &counts, &v, params).map_err(|e| fail(t, e, &trace))?;
        if let Some(prev) = &prev {
            for (j, (old, new)) in prev.indices.iter().zip(&check.indices).enumerate() {
                if new.mu_star < old.mu_star {
                    let e = Error::Certificate(format!("mu* of index {j} decreased"));
                    return Err(fail(t, e, &trace));
                }
            }
            let last = trace.last_mut().expect("a step was taken");
            last.mu_star_after = check.indices[last.index].mu_star;
            if (cd + cn) * *last.mu_star_before.numer() * *last.mu_star_after.denom()
                > cd * *last.mu_star_after.numer() * *last.mu_star_before.denom()
            {
                let e = Error::Certificate(format!("index {} grew by less than 1 + c", last.index));
                return Err(fail(t, e, &trace));
            }
        }
        let Some(i) = check.first_failing else {
            prev = Some(check);
            break;
        };
        if steps[i] >= bound {
            let e = Error::Certificate(format!("index {i} exceeded {bound} increment steps"));
            return Err(fail(t, e, &trace));
        }
        let step = increment_step_cached(&sets[i], counts[i].as_ref(), &v, params).map_err(|e| fail(t, e, &trace))?;
        steps[i] += 1;
        let new_v = step.coset_value.base().clone();
        trace.push(TraceRow {
            step: t,
            index: i,
            coset: step.coset.clone(),
            mu_star_before: step.mu_star_before,
            mu_u: step.mu_u,
            mu_star_after: step.mu_u,
            codim_added: step.codim_added,
            codim_total: new_v.codim(),
        });
        v = new_v;
        prev = Some(check);
        t += 1;
    }
    // Re-certify from scratch with freshly computed convolutions.
    let final_check = check_dichotomy(sets, &v, params).map_err(|e| fail(t, e, &trace))?;
    if let Some(bad) = final_check.indices.iter().position(|c| !c.status.holds()) {
        let e = Error::Certificate(format!("index {bad} is neither sparse nor expanding on the final space"));
        return Err(fail(t, e, &trace));
    }
    debug_assert_eq!(Some(&final_check), prev.as_ref());
    let la = ell_rational(&params.alpha)? as u128;
    let lg = ell_rational(&params.gamma)? as u128;
    Ok(DichotomyReport {
        statuses: final_check.statuses(),
        achieved_codim: v.codim(),
        final_space: v,
        final_check,
        trace,
        codim_budget: r as u128 * la.pow(5) * lg.pow(2),
        halted_within: steps.iter().all(|&s| s <= bound),
        steps_per_index: steps,
        per_index_bound: bound,
        params: params.clone(),
    })
}
