//! Closed-form absolute-mean-error bounds for `S_{n,n0}(f)` and the
//! interpolation algebra they are assembled from.
//!
//! Everything here is a pure function of its arguments. Sample sizes and
//! burn-in lengths are taken as reals so the planner can optimize over them
//! smoothly; callers round up when a concrete chain has to be run.
//!
//! Two families of bounds are provided:
//!
//! * the uniformly ergodic regime (`thm1_*`, [`aux_bounds_uniform`],
//!   [`refined_uniform_bound`], [`eq9_bound`]), which needs `(alpha, M)`;
//! * the spectral gap regime (`thm2_*`, [`aux_bounds_gap`],
//!   [`refined_gap_bound`], [`eq10_bound`]), which needs only `gap` and an
//!   integrability margin `delta`.
//!
//! The "refined" evaluators return the Riesz–Thorin combination
//! `C · M1^(1-theta) · M2^theta`. The `eq9_bound` / `eq10_bound` evaluators
//! return the expanded two-term form obtained after splitting `M2^theta` with
//! `(x + y)^r <= x^r + y^r`; they dominate the refined value and are in turn
//! dominated by the theorem bounds once the burn-in recipe is met.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Coefficients above this are combined with their decay factor in log space.
const LOG_SPACE_COEF: f64 = 1e15;
/// Bases above this are exponentiated in log space.
const LOG_SPACE_BASE: f64 = 1e300;
/// Slack for the `gap >= 1 - alpha` consistency check.
const GAP_SLACK: f64 = 1e-12;

/// Uniform ergodicity constants: `||K^n(x, .) - pi||_tv <= alpha^n * M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformErgodicity {
    pub alpha: f64,
    pub big_m: f64,
}

/// Convergence constants of a chain together with the start penalty
/// `dratio = ||d nu / d pi - 1||_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub gap: f64,
    pub dratio: f64,
    #[serde(default)]
    pub uniform: Option<UniformErgodicity>,
    #[serde(default)]
    pub reversible: bool,
}

impl ChainParams {
    /// Spectral-gap-only description (no uniform ergodicity constants).
    pub fn spectral(gap: f64, dratio: f64) -> Result<Self> {
        if !(gap > 0.0 && gap <= 1.0) {
            return Err(domain(format!("spectral gap must lie in (0, 1], got {gap}")));
        }
        if !(dratio >= 0.0) || dratio.is_infinite() {
            return Err(domain(format!("dratio must be finite and >= 0, got {dratio}")));
        }
        Ok(Self {
            gap,
            dratio,
            uniform: None,
            reversible: false,
        })
    }

    /// Reversible, uniformly ergodic description.
    pub fn uniform(gap: f64, alpha: f64, big_m: f64, dratio: f64) -> Result<Self> {
        Self::spectral(gap, dratio)?.with_uniform_ergodicity(alpha, big_m, true)
    }

    pub fn with_uniform_ergodicity(mut self, alpha: f64, big_m: f64, reversible: bool) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(domain(format!("alpha must lie in [0, 1), got {alpha}")));
        }
        if !(big_m > 0.0) || big_m.is_infinite() {
            return Err(domain(format!("M must be finite and > 0, got {big_m}")));
        }
        if reversible && self.gap < 1.0 - alpha - GAP_SLACK {
            return Err(domain(format!(
                "reversible uniformly ergodic chain needs gap >= 1 - alpha, got gap {} < {}",
                self.gap,
                1.0 - alpha
            )));
        }
        self.uniform = Some(UniformErgodicity { alpha, big_m });
        self.reversible = reversible;
        Ok(self)
    }

    /// Re-checks every invariant, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        let base = Self::spectral(self.gap, self.dratio)?;
        if let Some(u) = self.uniform {
            base.with_uniform_ergodicity(u.alpha, u.big_m, self.reversible)?;
        }
        Ok(())
    }

    fn uniform_constants(&self) -> Result<UniformErgodicity> {
        let u = self
            .uniform
            .ok_or_else(|| Error::Regime("uniform ergodicity constants (alpha, M) are required".into()))?;
        Ok(u)
    }
}

/// Integrability data of the target functional: `p` and `||f||_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionClass {
    pub p: f64,
    pub norm_p: f64,
}

impl FunctionClass {
    pub fn new(p: f64, norm_p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(domain(format!("p must lie in (1, 2], got {p}")));
        }
        if !(norm_p >= 0.0) || norm_p.is_infinite() {
            return Err(domain(format!("||f||_p must be finite and >= 0, got {norm_p}")));
        }
        Ok(Self { p, norm_p })
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.p, self.norm_p).map(|_| ())
    }
}

/// A bound split into its leading and higher-order summands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub leading: f64,
    pub higher_order: f64,
    pub total: f64,
}

impl BoundBreakdown {
    pub fn new(leading: f64, higher_order: f64) -> Self {
        Self {
            leading,
            higher_order,
            total: leading + higher_order,
        }
    }
}

/// Interpolated exponents `(p, q)` and the parameter `theta` producing them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
}

/// Auxiliary `L_1` and `L_2` error bounds that get interpolated.
///
/// `m2_terms` holds the two summands of `m2` (averaging term, start term).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxBounds {
    pub m1: f64,
    pub m2: f64,
    pub m2_terms: [f64; 2],
}

impl AuxBounds {
    fn new(m1: f64, averaging: f64, start: f64) -> Self {
        Self {
            m1,
            m2: averaging + start,
            m2_terms: [averaging, start],
        }
    }
}

/// Output of [`interpolated_eq_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolatedBound {
    pub q: f64,
    pub theta: f64,
    pub bound: f64,
}

/// Which burn-in threshold to use in the spectral gap regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BurninRule {
    /// `ln(64 dratio / delta) / (delta * gap)`.
    #[default]
    Theorem,
    /// `(1 + delta) / (2 delta) * ln(32 (1 + delta) dratio / delta) / ln(1 / (1 - gap))`.
    ProofForm,
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `coef * base^exponent` for `coef, base >= 0`, switching to log space for
/// very large coefficients or bases.
fn scaled_pow(coef: f64, base: f64, exponent: f64) -> f64 {
    if coef == 0.0 {
        return 0.0;
    }
    if exponent == 0.0 {
        return coef;
    }
    if coef <= LOG_SPACE_COEF && base <= LOG_SPACE_BASE {
        let v = coef * base.powf(exponent);
        if v.is_finite() && (v > 0.0 || base == 0.0) {
            return v;
        }
    }
    (coef.ln() + xlny(exponent, base)).exp()
}

fn check_n(n: f64) -> Result<()> {
    if !(n > 0.0) || n.is_infinite() {
        return Err(domain(format!("n must be finite and > 0, got {n}")));
    }
    Ok(())
}

fn check_n0(n0: f64) -> Result<()> {
    if !(n0 >= 0.0) || n0.is_infinite() {
        return Err(domain(format!("n0 must be finite and >= 0, got {n0}")));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

fn check_gap(gap: f64) -> Result<()> {
    if !(gap > 0.0 && gap <= 1.0) {
        return Err(domain(format!("gap must lie in (0, 1], got {gap}")));
    }
    Ok(())
}

fn check_dratio(dratio: f64) -> Result<()> {
    if !(dratio >= 0.0) || dratio.is_infinite() {
        return Err(domain(format!("dratio must be finite and >= 0, got {dratio}")));
    }
    Ok(())
}

/// Uniformly ergodic, reversible chains:
/// `4 ||f||_p / (n gap)^(1-1/p) + 4 ||f||_p / (n (1-alpha))^(2-2/p)`.
pub fn thm1_bound(n: f64, chain: &ChainParams, f: &FunctionClass) -> Result<BoundBreakdown> {
    let u = chain.uniform_constants()?;
    f.validate()?;
    check_n(n)?;
    let r = 1.0 - 1.0 / f.p;
    let leading = 4.0 * f.norm_p * (n * chain.gap).powf(-r);
    let higher = 4.0 * f.norm_p * (n * (1.0 - u.alpha)).powf(-2.0 * r);
    Ok(BoundBreakdown::new(leading, higher))
}

/// Burn-in recipe for [`thm1_bound`]: `max(0, ln(2 M dratio) / (1 - alpha))`.
pub fn thm1_burnin(chain: &ChainParams) -> Result<f64> {
    let u = chain.uniform_constants()?;
    if chain.dratio == 0.0 {
        return Ok(0.0);
    }
    Ok(((2.0 * u.big_m * chain.dratio).ln() / (1.0 - u.alpha)).max(0.0))
}

/// Spectral gap regime, `delta in (0, 1]`, `p in (1 + delta, 2]`:
/// `8 ||f||_p / (n gap)^(1-(1+delta)/p) + 8 ||f||_p / (n gap)^(2-2(1+delta)/p)`.
pub fn thm2_bound(n: f64, delta: f64, gap: f64, f: &FunctionClass) -> Result<BoundBreakdown> {
    check_delta(delta)?;
    check_gap(gap)?;
    check_n(n)?;
    f.validate()?;
    if f.p <= 1.0 + delta {
        return Err(domain(format!(
            "p must exceed 1 + delta, got p = {} and delta = {delta}",
            f.p
        )));
    }
    let r = 1.0 - (1.0 + delta) / f.p;
    let ng = n * gap;
    let leading = 8.0 * f.norm_p * ng.powf(-r);
    let higher = 8.0 * f.norm_p * ng.powf(-2.0 * r);
    Ok(BoundBreakdown::new(leading, higher))
}

/// Burn-in for [`thm2_bound`] using the default [`BurninRule::Theorem`].
pub fn thm2_burnin(delta: f64, gap: f64, dratio: f64) -> Result<f64> {
    thm2_burnin_with(BurninRule::Theorem, delta, gap, dratio)
}

pub fn thm2_burnin_with(rule: BurninRule, delta: f64, gap: f64, dratio: f64) -> Result<f64> {
    check_delta(delta)?;
    check_gap(gap)?;
    check_dratio(dratio)?;
    if dratio == 0.0 {
        return Ok(0.0);
    }
    let n0 = match rule {
        BurninRule::Theorem => (64.0 * dratio / delta).ln() / (delta * gap),
        BurninRule::ProofForm => {
            let arg = (32.0 * (1.0 + delta) / delta * dratio).ln();
            if gap >= 1.0 {
                // (1 - gap)^n0 vanishes for every n0 >= 1 but not at n0 = 0.
                if arg > 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (1.0 + delta) / (2.0 * delta) * arg / (1.0 / (1.0 - gap)).ln()
            }
        }
    };
    Ok(n0.max(0.0))
}

/// `L_1` (`m1`) and `L_2` (`m2`) error bounds for uniformly ergodic chains:
///
/// `m1 = 2 + 4 alpha^n0 M dratio`,
/// `m2 = sqrt(2) / (n gap)^(1/2) + 2 M^(1/2) dratio^(1/2) alpha^(n0/2) / (n (1 - alpha))`.
pub fn aux_bounds_uniform(n: f64, n0: f64, chain: &ChainParams) -> Result<AuxBounds> {
    let u = chain.uniform_constants()?;
    check_n(n)?;
    check_n0(n0)?;
    let m1 = 2.0 + scaled_pow(4.0 * u.big_m * chain.dratio, u.alpha, n0);
    let averaging = 2f64.sqrt() / (n * chain.gap).sqrt();
    let start = scaled_pow(2.0 * (u.big_m * chain.dratio).sqrt(), u.alpha, n0 / 2.0) / (n * (1.0 - u.alpha));
    Ok(AuxBounds::new(m1, averaging, start))
}

/// `L_{p1} -> L_1` (`m1`) and `L_{p2} -> L_2` (`m2`) error bounds for chains
/// with a spectral gap, `p1 in [1, 2]`, `p2 in (2, 4]`.
pub fn aux_bounds_gap(n: f64, n0: f64, gap: f64, dratio: f64, p1: f64, p2: f64) -> Result<AuxBounds> {
    check_n(n)?;
    check_n0(n0)?;
    check_gap(gap)?;
    check_dratio(dratio)?;
    if !(1.0..=2.0).contains(&p1) {
        return Err(domain(format!("p1 must lie in [1, 2], got {p1}")));
    }
    if !(p2 > 2.0 && p2 <= 4.0) {
        return Err(domain(format!("p2 must lie in (2, 4], got {p2}")));
    }
    let contraction = 1.0 - gap;
    let m1 = 2.0 + scaled_pow(4.0 * dratio, contraction, 2.0 * n0 * (p1 - 1.0) / p1);
    let averaging = 2f64.sqrt() / (n * gap).sqrt();
    let coef = 8.0 * p2.sqrt() / (p2 - 2.0).sqrt() * dratio.sqrt();
    let start = scaled_pow(coef, contraction, n0 * (p2 - 2.0) / p2) / (n * gap);
    Ok(AuxBounds::new(m1, averaging, start))
}

fn check_interpolation_range(p1: f64, p2: f64, p: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&p1) || !(p2 > 2.0 && p2 <= 4.0) {
        return Err(domain(format!("need 1 <= p1 <= 2 < p2 <= 4, got p1 = {p1}, p2 = {p2}")));
    }
    if !(p >= p1 && p <= p2) {
        return Err(domain(format!("p must lie in [{p1}, {p2}], got {p}")));
    }
    Ok(())
}

/// Output exponent `q = 1 + p2 (p - p1) / (p2 (p + p1) - 2 p p1)` reached by
/// interpolating `L_{p1} -> L_1` and `L_{p2} -> L_2`.
pub fn interpolation_q(p1: f64, p2: f64, p: f64) -> Result<f64> {
    check_interpolation_range(p1, p2, p)?;
    Ok(1.0 + p2 * (p - p1) / (p2 * (p + p1) - 2.0 * p * p1))
}

/// `sup_{||f||_p <= 1} e_q <= 2 M1^(1-theta) M2^theta` with
/// `theta = p2 / (p2 - p1) * (1 - p1 / p)`.
pub fn interpolated_eq_bound(p1: f64, p2: f64, p: f64, m1: f64, m2: f64) -> Result<InterpolatedBound> {
    let q = interpolation_q(p1, p2, p)?;
    if !(m1 >= 0.0) || !(m2 >= 0.0) {
        return Err(domain(format!("M1 and M2 must be >= 0, got {m1}, {m2}")));
    }
    let theta = p2 / (p2 - p1) * (1.0 - p1 / p);
    let bound = 2.0 * m1.powf(1.0 - theta) * m2.powf(theta);
    Ok(InterpolatedBound { q, theta, bound })
}

fn check_p_uniform(p: f64) -> Result<()> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(domain(format!("p must lie in (1, 2], got {p}")));
    }
    Ok(())
}

/// `sup_{||f||_p <= 1} e_p <= M1^(2/p-1) M2^(2-2/p)` in the uniformly ergodic
/// regime, with `(M1, M2)` from [`aux_bounds_uniform`].
pub fn refined_uniform_bound(n: f64, n0: f64, chain: &ChainParams, p: f64) -> Result<f64> {
    check_p_uniform(p)?;
    let aux = aux_bounds_uniform(n, n0, chain)?;
    let theta = 2.0 - 2.0 / p;
    Ok(aux.m1.powf(1.0 - theta) * aux.m2.powf(theta))
}

/// Expanded form of [`refined_uniform_bound`]:
///
/// `2^(2/p-1) (1 + 2 alpha^n0 M dratio)^(2/p-1)
///   * ( 2^(1-1/p) / (n gap)^(1-1/p) + (4 M dratio alpha^n0 / (n^2 (1-alpha)^2))^(1-1/p) )`.
pub fn eq9_bound(n: f64, n0: f64, chain: &ChainParams, p: f64) -> Result<BoundBreakdown> {
    check_p_uniform(p)?;
    let u = chain.uniform_constants()?;
    check_n(n)?;
    check_n0(n0)?;
    let r = 1.0 - 1.0 / p;
    let start = scaled_pow(u.big_m * chain.dratio, u.alpha, n0);
    let factor = (2.0 * (1.0 + 2.0 * start)).powf(2.0 / p - 1.0);
    let leading = factor * 2f64.powf(r) * (n * chain.gap).powf(-r);
    let inner = 4.0 * start / (n * (1.0 - u.alpha)).powi(2);
    let higher = factor * inner.powf(r);
    Ok(BoundBreakdown::new(leading, higher))
}

fn check_gap_regime_p(delta: f64, p: f64) -> Result<()> {
    check_delta(delta)?;
    if !(p >= 1.0 + delta && p <= 2.0) {
        return Err(domain(format!(
            "p must lie in [1 + delta, 2] = [{}, 2], got {p}",
            1.0 + delta
        )));
    }
    Ok(())
}

/// Spectral gap regime: `2 M1^(1-theta) M2^theta` with `p1 = 1 + delta`,
/// `p2 = 2 (1 + delta)` and `(M1, M2)` from [`aux_bounds_gap`].
pub fn refined_gap_bound(n: f64, n0: f64, gap: f64, dratio: f64, delta: f64, p: f64) -> Result<f64> {
    check_gap_regime_p(delta, p)?;
    let p1 = 1.0 + delta;
    let p2 = 2.0 * p1;
    let aux = aux_bounds_gap(n, n0, gap, dratio, p1, p2)?;
    Ok(interpolated_eq_bound(p1, p2, p, aux.m1, aux.m2)?.bound)
}

/// Expanded form of [`refined_gap_bound`]:
///
/// `2 (2 + 4 (1-gap)^(2 n0 delta/(1+delta)) dratio)^(2(1+delta)/p - 1)
///   * ( 2^r / (n gap)^r + (64 (1+delta)/delta dratio (1-gap)^(2 n0 delta/(1+delta)))^r / (n^2 gap^2)^r )`
/// with `r = 1 - (1+delta)/p`.
pub fn eq10_bound(n: f64, n0: f64, gap: f64, dratio: f64, delta: f64, p: f64) -> Result<BoundBreakdown> {
    check_gap_regime_p(delta, p)?;
    check_n(n)?;
    check_n0(n0)?;
    check_gap(gap)?;
    check_dratio(dratio)?;
    let r = 1.0 - (1.0 + delta) / p;
    let decay_exp = 2.0 * n0 * delta / (1.0 + delta);
    let m1 = 2.0 + scaled_pow(4.0 * dratio, 1.0 - gap, decay_exp);
    let factor = 2.0 * m1.powf(2.0 * (1.0 + delta) / p - 1.0);
    let ng = n * gap;
    let leading = factor * 2f64.powf(r) * ng.powf(-r);
    let inner = scaled_pow(64.0 * (1.0 + delta) / delta * dratio, 1.0 - gap, decay_exp) / (ng * ng);
    let higher = factor * inner.powf(r);
    Ok(BoundBreakdown::new(leading, higher))
}

/// Harmonic interpolation of exponent pairs:
/// `1/p = (1-theta)/p1 + theta/p2`, `1/q = (1-theta)/q1 + theta/q2`.
/// Infinite exponents are passed as `f64::INFINITY`.
pub fn riesz_thorin_exponents(p1: f64, q1: f64, p2: f64, q2: f64, theta: f64) -> Result<ExponentPair> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(domain(format!("theta must lie in [0, 1], got {theta}")));
    }
    for (name, v) in [("p1", p1), ("q1", q1), ("p2", p2), ("q2", q2)] {
        if !(v >= 1.0) {
            return Err(domain(format!("{name} must be >= 1, got {v}")));
        }
    }
    let blend = |a: f64, b: f64| {
        if theta == 0.0 {
            a
        } else if theta == 1.0 {
            b
        } else {
            1.0 / ((1.0 - theta) / a + theta / b)
        }
    };
    Ok(ExponentPair {
        p: blend(p1, p2),
        q: blend(q1, q2),
        theta,
    })
}

/// Constant in front of `M1^(1-theta) M2^theta`: 1 when `p_k <= q_k` at both
/// endpoints, 2 otherwise.
pub fn riesz_thorin_constant(p1: f64, q1: f64, p2: f64, q2: f64) -> f64 {
    if p1 <= q1 && p2 <= q2 {
        1.0
    } else {
        2.0
    }
}

/// Recovers `theta` from an interpolated `p` and its endpoints (`p1 != p2`).
pub fn theta_from_exponent(p1: f64, p2: f64, p: f64) -> Result<f64> {
    let (a, b) = (1.0 / p1, 1.0 / p2);
    if a == b {
        return Err(domain("endpoints coincide; theta is not identifiable"));
    }
    Ok((a - 1.0 / p) / (a - b))
}
