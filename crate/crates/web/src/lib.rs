//! Browser demo. Each export takes a JSON object and returns a JSON string,
//! so the same functions run natively under `cargo test` and in the page
//! built by `wasm-pack build --target web`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::wasm_bindgen;

use lpbound::bounds::{thm1_bound, thm2_bound, ChainParams, FunctionClass};
use lpbound::chains::singular_f;
use lpbound::chains::zoo::{self, ZooChain};
use lpbound::estimator::{rate_regression, replicate, RateFit};
use lpbound::planner::{self, Budget, PlanRequest};
use lpbound::rng::SeedStream;
use lpbound::validate::rate_window;

/// Work cap for one rate demo call, in chain steps.
pub const RATE_DEMO_STEPS: f64 = 5e7;

fn parse<'a, T: Deserialize<'a>>(input: &'a str) -> Result<T, String> {
    serde_json::from_str(input).map_err(|e| format!("bad input: {e}"))
}

fn render<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || points < 2 {
        return Err(format!(
            "need 0 < lo < hi and at least 2 points, got [{lo}, {hi}] x {points}"
        ));
    }
    let step = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| lo * (step * i as f64).exp()).collect())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveInput {
    p: f64,
    #[serde(default = "one")]
    norm: f64,
    gap: f64,
    delta: f64,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default = "one")]
    big_m: f64,
    n_min: f64,
    n_max: f64,
    #[serde(default = "default_points")]
    points: usize,
}

fn one() -> f64 {
    1.0
}

fn default_points() -> usize {
    60
}

#[derive(Debug, Serialize)]
struct CurveOutput {
    n: Vec<f64>,
    theorem2: Vec<f64>,
    theorem2_leading: Vec<f64>,
    theorem1: Option<Vec<f64>>,
}

/// Both bounds as functions of `n` over a log grid. `theorem1` is present
/// only when `alpha` is given.
#[wasm_bindgen]
pub fn bound_curve(input: &str) -> Result<String, String> {
    let c: CurveInput = parse(input)?;
    let f = FunctionClass::new(c.p, c.norm).map_err(|e| e.to_string())?;
    let n = log_grid(c.n_min, c.n_max, c.points)?;
    let mut theorem2 = Vec::with_capacity(n.len());
    let mut theorem2_leading = Vec::with_capacity(n.len());
    for &x in &n {
        let b = thm2_bound(x, c.delta, c.gap, &f).map_err(|e| e.to_string())?;
        theorem2.push(b.total);
        theorem2_leading.push(b.leading);
    }
    let theorem1 = match c.alpha {
        Some(alpha) => {
            let chain = ChainParams::spectral(c.gap, 0.0)
                .and_then(|ch| ch.with_uniform_ergodicity(alpha, c.big_m, false))
                .map_err(|e| e.to_string())?;
            Some(
                n.iter()
                    .map(|&x| thm1_bound(x, &chain, &f).map(|b| b.total))
                    .collect::<lpbound::Result<Vec<_>>>()
                    .map_err(|e| e.to_string())?,
            )
        }
        None => None,
    };
    render(&CurveOutput {
        n,
        theorem2,
        theorem2_leading,
        theorem1,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BudgetInput {
    p: f64,
    #[serde(default = "one")]
    norm: f64,
    eps: f64,
    gap: f64,
    dratio: f64,
    #[serde(default = "default_points")]
    points: usize,
}

#[derive(Debug, Serialize)]
struct BudgetOutput {
    delta: Vec<f64>,
    /// `None` where the bound cannot reach `eps` in floating point.
    total: Vec<Option<f64>>,
    delta_star: Budget,
    delta_hat: Option<Budget>,
}

/// Total sample size `N(delta)` over a log grid of `delta`, with the
/// optimum and the heuristic choice marked.
#[wasm_bindgen]
pub fn budget_curve(input: &str) -> Result<String, String> {
    let b: BudgetInput = parse(input)?;
    let f = FunctionClass::new(b.p, b.norm).map_err(|e| e.to_string())?;
    let req = PlanRequest::theorem2(b.eps, b.gap, b.dratio, f).map_err(|e| e.to_string())?;
    let hi = req.delta_limit() * (1.0 - 1e-6);
    let delta = log_grid(hi * 1e-8, hi, b.points)?;
    let total = delta
        .iter()
        .map(|&d| planner::budget_for_delta(d, &req).ok().map(|x| x.total))
        .collect();
    let delta_star = planner::delta_star(&req).map_err(|e| e.to_string())?;
    let delta_hat = planner::delta_hat(b.p, b.eps, b.dratio)
        .ok()
        .and_then(|d| planner::budget_for_delta(d, &req).ok());
    render(&BudgetOutput {
        delta,
        total,
        delta_star,
        delta_hat,
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateInput {
    gamma: f64,
    #[serde(default = "default_rate_p")]
    p: f64,
    reps: usize,
    seed: u64,
    grid: Vec<usize>,
}

fn default_rate_p() -> f64 {
    1.5
}

#[derive(Debug, Serialize)]
struct RatePoint {
    n: usize,
    e1_hat: f64,
    uncertainty: f64,
}

#[derive(Debug, Serialize)]
struct RateOutput {
    points: Vec<RatePoint>,
    fit: RateFit,
    window: (f64, f64),
    in_window: bool,
}

/// Estimated `e_1` of i.i.d. uniform sampling for `f(x) = x^-gamma` on a
/// grid of `n`, with the fitted log-log slope and its predicted window.
#[wasm_bindgen]
pub fn rate_demo(input: &str) -> Result<String, String> {
    let r: RateInput = parse(input)?;
    let steps = r.reps as f64 * r.grid.iter().map(|&n| n as f64).sum::<f64>();
    if steps > RATE_DEMO_STEPS {
        return Err(format!(
            "{steps:.3e} steps requested, the demo allows {RATE_DEMO_STEPS:.0e}"
        ));
    }
    let sampler = match zoo::load("iid-uniform").map_err(|e| e.to_string())? {
        ZooChain::Continuous { sampler, .. } => sampler,
        ZooChain::Finite { .. } => unreachable!("iid-uniform is continuous"),
    };
    let g = singular_f(r.gamma).map_err(|e| e.to_string())?;
    if g.norm_p(r.p, &sampler.target).is_err() {
        return Err(format!("x^-{} is not in L_{}", r.gamma, r.p));
    }
    let mean = g.mean(&sampler.target);
    let stream = SeedStream::new(r.seed);
    let mut points = Vec::with_capacity(r.grid.len());
    for (i, &n) in r.grid.iter().enumerate() {
        let est = replicate(&sampler, &|x| g.eval(x), mean, n, 0, r.reps, stream.child(i as u64))
            .map_err(|e| e.to_string())?
            .estimate();
        points.push(RatePoint {
            n,
            e1_hat: est.e1_hat,
            uncertainty: est.uncertainty,
        });
    }
    let fit = rate_regression(&points.iter().map(|q| (q.n as f64, q.e1_hat)).collect::<Vec<_>>())
        .map_err(|e| e.to_string())?;
    let window = rate_window(g.tail_index(&sampler.target), r.p);
    render(&RateOutput {
        in_window: window.0 <= fit.slope && fit.slope <= window.1,
        points,
        fit,
        window,
    })
}
