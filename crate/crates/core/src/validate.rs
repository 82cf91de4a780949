//! Empirical checks of the error bounds on chains with exact constants.
//!
//! * bound dominance: `e1_hat + 4 * uncertainty <= bound` on a grid of `n`,
//!   for the uniformly ergodic bound with `p in {1.5, 2}` and the spectral
//!   gap bound with `delta in {0.1, 0.5}` on admissible `p`;
//! * rate: the log-log slope of `e1_hat` against `n` must lie in
//!   `[1/kappa - 1 - 0.05, 1/p - 1 + 0.05]`, where `kappa` is the tail index
//!   of `f` under `pi` capped at 2, with `r^2 >= 0.98`.

use serde::{Deserialize, Serialize};

use crate::bounds::{thm1_bound, thm1_burnin, thm2_bound, thm2_burnin, ChainParams, FunctionClass};
use crate::chains::zoo::ZooChain;
use crate::chains::{
    singular_f, spectral_gap_exact, uniform_ergodicity_constants, FiniteChain, FiniteSampler, IndependenceSampler,
    InitialDistribution, Sampler, SingularFunction, StateFunction,
};
use crate::error::{domain, Result};
use crate::estimator::{rate_regression, replicate, RateFit};
use crate::report::RunRecord;
use crate::rng::SeedStream;

pub const DOMINANCE_MARGIN: f64 = 4.0;
pub const DOMINANCE_P: [f64; 2] = [1.5, 2.0];
pub const DOMINANCE_DELTAS: [f64; 2] = [0.1, 0.5];
pub const DOMINANCE_GRID: [usize; 4] = [10, 100, 1_000, 10_000];
pub const RATE_GRID: [usize; 4] = [100, 1_000, 10_000, 100_000];
pub const RATE_SLACK: f64 = 0.05;
pub const RATE_MIN_R2: f64 = 0.98;
pub const DEFAULT_REPLICATIONS: usize = 10_000;
/// `gamma` for `f(x) = x^(-gamma)` on continuous chains.
pub const DEFAULT_DOMINANCE_GAMMA: f64 = 0.6;
pub const DEFAULT_RATE_GAMMA: f64 = 0.65;
pub const DEFAULT_RATE_P: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    BoundDominance,
    Rate,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateOptions {
    pub suite: Suite,
    pub seed: u64,
    pub replications: usize,
    pub dominance_grid: Vec<usize>,
    pub rate_grid: Vec<usize>,
    /// Singular exponent for continuous chains; suite default when absent.
    pub gamma: Option<f64>,
    /// `p` of the rate check; 2 is used for bounded `f`.
    pub p: f64,
    /// Which regimes the dominance suite exercises.
    pub theorem1: bool,
    pub deltas: Vec<f64>,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            suite: Suite::All,
            seed: 0,
            replications: DEFAULT_REPLICATIONS,
            dominance_grid: DOMINANCE_GRID.to_vec(),
            rate_grid: RATE_GRID.to_vec(),
            gamma: None,
            p: DEFAULT_RATE_P,
            theorem1: true,
            deltas: DOMINANCE_DELTAS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCheck {
    pub p: f64,
    pub tail_index: f64,
    pub window: (f64, f64),
    pub fit: RateFit,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub chain: String,
    pub records: Vec<RunRecord>,
    pub rate: Option<RateCheck>,
    /// One line per failed invariant.
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// What the suites need to know about a chain and its test function.
struct Subject<S: Sampler, F> {
    sampler: S,
    f: F,
    mean: f64,
    params: ChainParams,
    /// `||f||_p` for the requested `p`, `None` where `f` is not in `L_p`.
    norm: Box<dyn Fn(f64) -> Option<f64>>,
    tail_index: f64,
}

fn finite_subject<'a>(
    chain: &'a FiniteChain,
    nu: &InitialDistribution,
) -> Result<Subject<FiniteSampler<'a>, impl Fn(usize) -> f64 + Sync>> {
    let gap = spectral_gap_exact(chain)?;
    let u = uniform_ergodicity_constants(chain)?;
    let params =
        ChainParams::spectral(gap, nu.dratio)?.with_uniform_ergodicity(u.alpha, u.big_m, chain.is_reversible())?;
    let f = StateFunction::indicator(chain.size() - 1, chain.size());
    let mean = f.mean(chain)?;
    let f_values = f.clone();
    let chain_for_norm = chain.clone();
    Ok(Subject {
        sampler: FiniteSampler::new(chain, nu),
        f: move |x: usize| f_values.eval(x),
        mean,
        params,
        norm: Box::new(move |p| f.norm_p(p, &chain_for_norm).ok()),
        tail_index: f64::INFINITY,
    })
}

fn continuous_subject(
    sampler: IndependenceSampler,
    g: SingularFunction,
) -> Result<Subject<IndependenceSampler, impl Fn(f64) -> f64 + Sync>> {
    let target = sampler.target;
    Ok(Subject {
        sampler,
        f: move |x: f64| g.eval(x),
        mean: g.mean(&target),
        params: sampler.params()?,
        norm: Box::new(move |p| g.norm_p(p, &target).ok()),
        tail_index: g.tail_index(&target),
    })
}

/// Runs the suites selected in `opts` on a zoo member or loaded chain.
pub fn validate_chain(chain: &ZooChain, opts: &ValidateOptions) -> Result<ValidationReport> {
    if opts.replications < 2 {
        return Err(domain("need at least 2 replications"));
    }
    let mut report = ValidationReport {
        chain: chain.name().to_string(),
        records: Vec::new(),
        rate: None,
        failures: Vec::new(),
    };
    let master = SeedStream::new(opts.seed);
    let run_dominance = matches!(opts.suite, Suite::BoundDominance | Suite::All);
    let run_rate = matches!(opts.suite, Suite::Rate | Suite::All);
    match chain {
        ZooChain::Finite { chain, nu, .. } => {
            if run_dominance {
                let subject = finite_subject(chain, nu)?;
                dominance(&subject, opts, master.child(1), &mut report)?;
            }
            if run_rate {
                let stationary = InitialDistribution::stationary(chain);
                let subject = finite_subject(chain, &stationary)?;
                rate(&subject, 2.0, opts, master.child(2), &mut report)?;
            }
        }
        ZooChain::Continuous { sampler, .. } => {
            if run_dominance {
                let g = singular_f(opts.gamma.unwrap_or(DEFAULT_DOMINANCE_GAMMA))?;
                let subject = continuous_subject(*sampler, g)?;
                dominance(&subject, opts, master.child(1), &mut report)?;
            }
            if run_rate {
                let g = singular_f(opts.gamma.unwrap_or(DEFAULT_RATE_GAMMA))?;
                let subject = continuous_subject(*sampler, g)?;
                rate(&subject, opts.p, opts, master.child(2), &mut report)?;
            }
        }
    }
    Ok(report)
}

fn burnin_steps(n0: f64) -> Result<usize> {
    if !n0.is_finite() || n0 > 1e9 {
        return Err(domain(format!("burn-in {n0} is too long to simulate")));
    }
    Ok(n0.ceil() as usize)
}

/// Estimates `e1` on `grid` at burn-in `n0`; one replication set per `n`.
fn estimates<S: Sampler, F: Fn(S::State) -> f64 + Sync>(
    subject: &Subject<S, F>,
    grid: &[usize],
    n0: usize,
    replications: usize,
    stream: SeedStream,
) -> Result<Vec<(usize, u64, crate::estimator::ErrorEstimate)>> {
    grid.iter()
        .map(|&n| {
            let seeds = stream.child(n as u64);
            let reps = replicate(&subject.sampler, &subject.f, subject.mean, n, n0, replications, seeds)?;
            Ok((n, seeds.key(), reps.estimate()))
        })
        .collect()
}

fn dominance<S: Sampler, F: Fn(S::State) -> f64 + Sync>(
    subject: &Subject<S, F>,
    opts: &ValidateOptions,
    stream: SeedStream,
    report: &mut ValidationReport,
) -> Result<()> {
    let params = &subject.params;
    let mut push =
        |label: String, n: usize, n0: usize, seed: u64, est: &crate::estimator::ErrorEstimate, bound: f64| {
            let pass = est.e1_hat + DOMINANCE_MARGIN * est.uncertainty <= bound;
            if !pass {
                report.failures.push(format!(
                    "{label}: e1_hat + 4*uncertainty <= bound violated at n={n}: {} + 4*{} > {bound}",
                    est.e1_hat, est.uncertainty
                ));
            }
            report.records.push(RunRecord {
                check: label,
                n,
                n0,
                replications: est.replications,
                e1_hat: est.e1_hat,
                uncertainty: est.uncertainty,
                bound_total: Some(bound),
                seed,
                pass: Some(pass),
            });
        };

    if opts.theorem1 && params.uniform.is_some() && params.reversible {
        let n0 = burnin_steps(thm1_burnin(params)?)?;
        let runs = estimates(subject, &opts.dominance_grid, n0, opts.replications, stream.child(100))?;
        for p in DOMINANCE_P {
            let Some(norm) = (subject.norm)(p) else { continue };
            let f = FunctionClass::new(p, norm)?;
            for (n, seed, est) in &runs {
                let bound = thm1_bound(*n as f64, params, &f)?.total;
                push(format!("theorem1-p{p}"), *n, n0, *seed, est, bound);
            }
        }
    }
    for (i, &delta) in opts.deltas.iter().enumerate() {
        let admissible: Vec<(f64, f64)> = DOMINANCE_P
            .iter()
            .filter(|&&p| p > 1.0 + delta)
            .filter_map(|&p| (subject.norm)(p).map(|v| (p, v)))
            .collect();
        if admissible.is_empty() {
            continue;
        }
        let n0 = burnin_steps(thm2_burnin(delta, params.gap, params.dratio)?)?;
        let runs = estimates(
            subject,
            &opts.dominance_grid,
            n0,
            opts.replications,
            stream.child(200 + i as u64),
        )?;
        for (p, norm) in admissible {
            let f = FunctionClass::new(p, norm)?;
            for (n, seed, est) in &runs {
                let bound = thm2_bound(*n as f64, delta, params.gap, &f)?.total;
                push(format!("theorem2-d{delta}-p{p}"), *n, n0, *seed, est, bound);
            }
        }
    }
    Ok(())
}

/// `[1/kappa_eff - 1 - 0.05, 1/p - 1 + 0.05]` with `kappa_eff = min(kappa, 2)`.
pub fn rate_window(tail_index: f64, p: f64) -> (f64, f64) {
    let kappa = tail_index.min(2.0);
    (1.0 / kappa - 1.0 - RATE_SLACK, 1.0 / p - 1.0 + RATE_SLACK)
}

fn rate<S: Sampler, F: Fn(S::State) -> f64 + Sync>(
    subject: &Subject<S, F>,
    p: f64,
    opts: &ValidateOptions,
    stream: SeedStream,
    report: &mut ValidationReport,
) -> Result<()> {
    if (subject.norm)(p).is_none() {
        return Err(domain(format!(
            "f is not in L_p for p = {p}: its tail index is {}",
            subject.tail_index
        )));
    }
    let n0 = if subject.params.dratio == 0.0 {
        0
    } else {
        burnin_steps(thm1_burnin(&subject.params)?)?
    };
    let runs = estimates(subject, &opts.rate_grid, n0, opts.replications, stream)?;
    let mut points = Vec::with_capacity(runs.len());
    for (n, seed, est) in &runs {
        points.push((*n as f64, est.e1_hat));
        report.records.push(RunRecord {
            check: "rate".into(),
            n: *n,
            n0,
            replications: est.replications,
            e1_hat: est.e1_hat,
            uncertainty: est.uncertainty,
            bound_total: None,
            seed: *seed,
            pass: None,
        });
    }
    let fit = rate_regression(&points)?;
    let window = rate_window(subject.tail_index, p);
    let in_window = window.0 <= fit.slope && fit.slope <= window.1;
    let pass = in_window && fit.r_squared >= RATE_MIN_R2;
    if !in_window {
        report.failures.push(format!(
            "rate: slope {} outside [{}, {}]",
            fit.slope, window.0, window.1
        ));
    }
    if fit.r_squared < RATE_MIN_R2 {
        report
            .failures
            .push(format!("rate: r^2 = {} < {RATE_MIN_R2}", fit.r_squared));
    }
    report.rate = Some(RateCheck {
        p,
        tail_index: subject.tail_index,
        window,
        fit,
        pass,
    });
    Ok(())
}
