//! Budget planning: how many burn-in steps and averaging steps are needed for
//! a target absolute mean error `epsilon`, and which integrability margin
//! `delta` minimizes the total `N = n + n0` in the spectral gap regime.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BurninRule, ChainParams, FunctionClass};
use crate::error::{domain, Error, Result};

pub mod tables;

pub use tables::{reproduce_tables, CellCheck, PublishedRow, TableRow, PUBLISHED};

/// Relative bracket width at which [`required_n`] stops bisecting.
pub const REQUIRED_N_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;
const MAX_DOUBLINGS: usize = 2048;

/// Number of log-spaced points in the coarse `delta` scan.
pub const DELTA_GRID_POINTS: usize = 240;
/// Lower end of the `delta` scan.
pub const DELTA_GRID_MIN: f64 = 1e-16;
/// Width (in `ln delta`) at which golden-section refinement stops.
pub const DELTA_REL_TOL: f64 = 1e-6;

/// Which theorem the plan is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum Regime {
    Theorem1 {
        alpha: f64,
        big_m: f64,
    },
    Theorem2 {
        #[serde(default)]
        burnin: BurninRule,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub epsilon: f64,
    pub gap: f64,
    pub dratio: f64,
    pub f: FunctionClass,
    #[serde(flatten)]
    pub regime: Regime,
}

impl PlanRequest {
    pub fn theorem2(epsilon: f64, gap: f64, dratio: f64, f: FunctionClass) -> Result<Self> {
        let req = Self {
            epsilon,
            gap,
            dratio,
            f,
            regime: Regime::Theorem2 {
                burnin: BurninRule::Theorem,
            },
        };
        req.validate()?;
        Ok(req)
    }

    pub fn theorem1(epsilon: f64, gap: f64, alpha: f64, big_m: f64, dratio: f64, f: FunctionClass) -> Result<Self> {
        let req = Self {
            epsilon,
            gap,
            dratio,
            f,
            regime: Regime::Theorem1 { alpha, big_m },
        };
        req.validate()?;
        Ok(req)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || self.epsilon.is_infinite() {
            return Err(domain(format!("epsilon must be finite and > 0, got {}", self.epsilon)));
        }
        self.f.validate()?;
        self.chain_params().map(|_| ())
    }

    /// The chain constants implied by the request. A request states
    /// constants, not reversibility, so `gap >= 1 - alpha` is not enforced.
    pub fn chain_params(&self) -> Result<ChainParams> {
        let base = ChainParams::spectral(self.gap, self.dratio)?;
        match self.regime {
            Regime::Theorem1 { alpha, big_m } => base.with_uniform_ergodicity(alpha, big_m, false),
            Regime::Theorem2 { .. } => Ok(base),
        }
    }

    fn burnin_rule(&self) -> Result<BurninRule> {
        match self.regime {
            Regime::Theorem2 { burnin } => Ok(burnin),
            Regime::Theorem1 { .. } => Err(Error::Regime(
                "delta budgets are defined for the spectral gap regime only".into(),
            )),
        }
    }

    /// Largest admissible `delta` (exclusive): `min(1, p - 1)`.
    pub fn delta_limit(&self) -> f64 {
        (self.f.p - 1.0).min(1.0)
    }
}

/// A complete sampling plan. `delta` is `None` for Theorem 1 plans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub delta: Option<f64>,
    pub n0: f64,
    pub n: f64,
    pub total: f64,
    pub epsilon: f64,
}

impl Budget {
    /// Integer `(n, n0)` to hand to a simulator, or `None` when either
    /// count does not fit in a `u64`.
    pub fn rounded(&self) -> Option<(u64, u64)> {
        const LIMIT: f64 = u64::MAX as f64;
        let (n, n0) = (self.n.ceil(), self.n0.ceil());
        (n < LIMIT && n0 < LIMIT).then_some((n as u64, n0 as u64))
    }
}

/// Smallest real `n >= 1` with `bound(n) <= epsilon`, for a bound that is
/// nonincreasing on `[1, inf)` and tends to zero.
///
/// Brackets geometrically from `start`, then bisects in `ln n` until the
/// bracket is relatively narrower than [`REQUIRED_N_TOL`]. The returned value
/// is the feasible end of the bracket.
pub fn required_n<F>(epsilon: f64, start: f64, bound: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(epsilon > 0.0) {
        return Err(domain(format!("epsilon must be > 0, got {epsilon}")));
    }
    if bound(1.0)? <= epsilon {
        return Ok(1.0);
    }
    let mut lo = 1.0;
    let mut hi = start.max(1.0);
    let mut doublings = 0;
    while bound(hi)? > epsilon {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if !hi.is_finite() || doublings > MAX_DOUBLINGS {
            return Err(Error::Numerical {
                msg: "bound never drops below epsilon".into(),
                lo,
                hi,
            });
        }
    }
    for _ in 0..MAX_BISECTIONS {
        if hi / lo - 1.0 <= REQUIRED_N_TOL {
            return Ok(hi);
        }
        // Not sqrt(lo * hi): the product overflows once n passes ~1e154.
        let mid = lo * (hi / lo).sqrt();
        // sqrt can land on an endpoint once the bracket is a few ulps wide.
        if mid <= lo || mid >= hi {
            return Ok(hi);
        }
        if bound(mid)? <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Numerical {
        msg: format!("bisection did not converge in {MAX_BISECTIONS} steps"),
        lo,
        hi,
    })
}

/// Closed-form heuristic for `delta`:
///
/// `sqrt((p-1)/p) * ( ln(64 dratio) / ((16/eps)^(p/(p-1)) ln(16/eps)) )^(1/2)`.
///
/// Evaluated in log space; `(16/eps)^(p/(p-1))` overflows for `p` near 1.
pub fn delta_hat(p: f64, epsilon: f64, dratio: f64) -> Result<f64> {
    if !(p > 1.0 && p < 2.0) {
        return Err(domain(format!("p must lie in (1, 2), got {p}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(domain(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    if !(dratio > 0.0) || dratio.is_infinite() {
        return Err(domain(format!("dratio must be finite and > 0, got {dratio}")));
    }
    let log_start = (64.0 * dratio).ln();
    if log_start <= 0.0 {
        return Err(domain(format!("ln(64 dratio) must be positive, got dratio = {dratio}")));
    }
    let l = (16.0 / epsilon).ln();
    let ln_inner = log_start.ln() - p / (p - 1.0) * l - l.ln();
    Ok(((p - 1.0) / p).sqrt() * (0.5 * ln_inner).exp())
}

/// Budget for a fixed `delta` in the spectral gap regime.
pub fn budget_for_delta(delta: f64, req: &PlanRequest) -> Result<Budget> {
    req.validate()?;
    let rule = req.burnin_rule()?;
    let limit = req.delta_limit();
    if !(delta > 0.0 && delta < limit) {
        return Err(domain(format!(
            "delta must lie in (0, {limit}) for p = {}, got {delta}",
            req.f.p
        )));
    }
    let n0 = bounds::thm2_burnin_with(rule, delta, req.gap, req.dratio)?;
    let n = required_n(req.epsilon, 1.0 / req.gap, |n| {
        Ok(bounds::thm2_bound(n, delta, req.gap, &req.f)?.total)
    })?;
    Ok(Budget {
        delta: Some(delta),
        n0,
        n,
        total: n + n0,
        epsilon: req.epsilon,
    })
}

/// The `delta` minimizing `N(delta) = n(delta) + n0(delta)`.
///
/// Scans [`DELTA_GRID_POINTS`] log-spaced values over
/// `[1e-16, min(1, p-1) (1 - 1e-9)]`, then refines around the best grid point
/// by golden-section search in `ln delta`. The result is never worse than the
/// budget at the heuristic `delta_hat` when that is defined.
pub fn delta_star(req: &PlanRequest) -> Result<Budget> {
    req.validate()?;
    req.burnin_rule()?;
    let upper = req.delta_limit() * (1.0 - 1e-9);
    let (ln_lo, ln_hi) = (DELTA_GRID_MIN.ln(), upper.ln());
    if !(ln_hi > ln_lo) {
        return Err(domain(format!("empty delta range for p = {}", req.f.p)));
    }
    let step = (ln_hi - ln_lo) / (DELTA_GRID_POINTS - 1) as f64;
    let grid_delta = |i: usize| {
        if i + 1 == DELTA_GRID_POINTS {
            upper
        } else {
            (ln_lo + step * i as f64).exp()
        }
    };
    let scan = (0..DELTA_GRID_POINTS)
        .into_par_iter()
        .map(|i| feasible(budget_for_delta(grid_delta(i), req)))
        .collect::<Result<Vec<_>>>()?;
    let (best_i, mut best) = scan
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.map(|b| (i, b)))
        .min_by(|a, b| a.1.total.total_cmp(&b.1.total))
        .ok_or_else(|| Error::Numerical {
            msg: "no delta in the scan gives a finite sample size".into(),
            lo: DELTA_GRID_MIN,
            hi: upper,
        })?;

    let a = grid_delta(best_i.saturating_sub(1)).ln();
    let b = grid_delta((best_i + 1).min(DELTA_GRID_POINTS - 1)).ln();
    let refined = golden_section(a, b, DELTA_REL_TOL, |t| {
        Ok(feasible(budget_for_delta(t.exp(), req))?.map_or(f64::INFINITY, |b| b.total))
    })?;
    if let Some(candidate) = feasible(budget_for_delta(refined.exp(), req))? {
        if candidate.total < best.total {
            best = candidate;
        }
    }

    if req.f.p < 2.0 && req.epsilon <= 1.0 && req.dratio > 0.0 {
        if let Ok(h) = delta_hat(req.f.p, req.epsilon, req.dratio) {
            if h > 0.0 && h < req.delta_limit() {
                if let Some(at_hat) = feasible(budget_for_delta(h, req))? {
                    if at_hat.total < best.total {
                        best = at_hat;
                    }
                }
            }
        }
    }
    Ok(best)
}

/// `None` when `n` overflows, which makes that `delta` infeasible rather than
/// fatal for the search.
fn feasible(budget: Result<Budget>) -> Result<Option<Budget>> {
    match budget {
        Ok(b) => Ok(Some(b)),
        Err(Error::Numerical { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Minimizes a unimodal `g` on `[a, b]` to bracket width `tol`.
fn golden_section<G>(mut a: f64, mut b: f64, tol: f64, g: G) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c)?, g(d)?);
    while (b - a).abs() > tol {
        if gc <= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c)?;
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d)?;
        }
    }
    Ok(if gc <= gd { c } else { d })
}

/// Burn-in and sample size from the uniformly ergodic bound.
pub fn plan_theorem1(req: &PlanRequest) -> Result<Budget> {
    req.validate()?;
    let chain = req.chain_params()?;
    if !matches!(req.regime, Regime::Theorem1 { .. }) {
        return Err(Error::Regime("plan_theorem1 needs a theorem1 request".into()));
    }
    let n0 = bounds::thm1_burnin(&chain)?;
    let n = required_n(req.epsilon, 1.0 / req.gap, |n| {
        Ok(bounds::thm1_bound(n, &chain, &req.f)?.total)
    })?;
    Ok(Budget {
        delta: None,
        n0,
        n,
        total: n + n0,
        epsilon: req.epsilon,
    })
}

/// Dispatches on the request regime: Theorem 1 plans directly; Theorem 2 uses
/// `delta` when given and `delta_hat` otherwise.
pub fn plan(req: &PlanRequest, delta: Option<f64>) -> Result<Budget> {
    match req.regime {
        Regime::Theorem1 { .. } => plan_theorem1(req),
        Regime::Theorem2 { .. } => {
            let delta = match delta {
                Some(d) => d,
                None if req.dratio == 0.0 => {
                    return Err(domain("delta_hat is undefined for dratio = 0; pass an explicit delta"))
                }
                None => delta_hat(req.f.p, req.epsilon, req.dratio)?,
            };
            budget_for_delta(delta, req)
        }
    }
}
