use std::io::Write;

use serde::{Deserialize, Serialize};

use lpbound::bounds::{
    eq10_bound, eq9_bound, thm1_bound, thm1_burnin, thm2_bound, thm2_burnin, BoundBreakdown, ChainParams, FunctionClass,
};
use lpbound::chains::zoo::{self, ZooChain};
use lpbound::chains::{sample_path, singular_f, FiniteSampler, StateFunction};
use lpbound::estimator::replicate;
use lpbound::planner::{self, reproduce_tables, PlanRequest, Regime};
use lpbound::report::{sci, to_csv, to_json, BoundRecord, RunRecord};
use lpbound::rng::SeedStream;
use lpbound::validate::{validate_chain, ValidateOptions, DEFAULT_DOMINANCE_GAMMA};

use crate::config::{Format, RegimeArg, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;

const DEFAULT_REPS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Bound,
    Plan,
    Optimize,
    Tables,
    Simulate,
    Validate,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Bound => "bound",
            Kind::Plan => "plan",
            Kind::Optimize => "optimize",
            Kind::Tables => "tables",
            Kind::Simulate => "simulate",
            Kind::Validate => "validate",
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<lpbound::Error> for Failure {
    fn from(e: lpbound::Error) -> Self {
        Failure {
            code: EXIT_DOMAIN,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn need<T: Clone>(value: &Option<T>, flag: &str) -> Result<T, Failure> {
    value
        .clone()
        .ok_or_else(|| usage(format!("missing required flag --{flag}")))
}

/// JSON output: the resolved configuration next to the result, so feeding
/// `config` back through `--config` reproduces the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<T> {
    pub command: String,
    pub config: RunConfig,
    pub result: T,
}

fn emit<T: Serialize>(kind: Kind, config: &RunConfig, result: &T, csv: impl FnOnce() -> String) -> Result<(), Failure> {
    let text = match config.output_format.unwrap_or(Format::Csv) {
        Format::Csv => csv(),
        Format::Json => to_json(&Envelope {
            command: kind.name().to_string(),
            config: config.clone(),
            result,
        }),
    };
    let written = match &config.output_path {
        Some(path) => {
            std::fs::write(path, text.as_bytes()).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write output: {e}")),
    };
    written.map_err(|message| Failure {
        code: EXIT_DOMAIN,
        message,
    })
}

pub fn dispatch(kind: Kind, config: &RunConfig) -> Result<u8, Failure> {
    match kind {
        Kind::Bound => bound(config),
        Kind::Plan | Kind::Optimize => plan(kind, config),
        Kind::Tables => tables(config),
        Kind::Simulate => simulate(config),
        Kind::Validate => validate(config),
    }
}

fn bound(config: &RunConfig) -> Result<u8, Failure> {
    let regime = need(&config.regime, "regime")?;
    let n = need(&config.n, "n")?;
    let p = need(&config.p, "p")?;
    let gap = need(&config.gap, "gap")?;
    let norm = config.norm.unwrap_or(1.0);
    let dratio = config.dratio.unwrap_or(0.0);
    let big_m = config.big_m.unwrap_or(1.0);
    let f = FunctionClass::new(p, norm)?;
    let uniform_chain = || -> Result<ChainParams, Failure> {
        let alpha = need(&config.alpha, "alpha")?;
        Ok(ChainParams::spectral(gap, dratio)?.with_uniform_ergodicity(alpha, big_m, false)?)
    };
    let scale = |b: BoundBreakdown| BoundBreakdown::new(norm * b.leading, norm * b.higher_order);

    let mut record = BoundRecord {
        regime: String::new(),
        n,
        n0: None,
        p,
        norm_p: norm,
        gap,
        alpha: None,
        big_m: None,
        dratio,
        delta: None,
        bound: BoundBreakdown::new(0.0, 0.0),
    };
    match regime {
        RegimeArg::Theorem1 => {
            let chain = uniform_chain()?;
            record.bound = thm1_bound(n, &chain, &f)?;
            record.regime = "theorem1".into();
            record.alpha = config.alpha;
            record.big_m = Some(big_m);
        }
        RegimeArg::Theorem2 => {
            let delta = need(&config.delta, "delta")?;
            record.bound = thm2_bound(n, delta, gap, &f)?;
            record.regime = "theorem2".into();
            record.delta = Some(delta);
        }
        RegimeArg::Eq9 => {
            let chain = uniform_chain()?;
            let n0 = match config.n0 {
                Some(n0) => n0,
                None => thm1_burnin(&chain)?,
            };
            record.bound = scale(eq9_bound(n, n0, &chain, p)?);
            record.regime = "eq9".into();
            record.n0 = Some(n0);
            record.alpha = config.alpha;
            record.big_m = Some(big_m);
        }
        RegimeArg::Eq10 => {
            let delta = need(&config.delta, "delta")?;
            let n0 = match config.n0 {
                Some(n0) => n0,
                None => thm2_burnin(delta, gap, dratio)?,
            };
            record.bound = scale(eq10_bound(n, n0, gap, dratio, delta, p)?);
            record.regime = "eq10".into();
            record.n0 = Some(n0);
            record.delta = Some(delta);
        }
    }
    eprintln!(
        "{}: leading {:.6e} + higher order {:.6e} = {:.6e}",
        record.regime, record.bound.leading, record.bound.higher_order, record.bound.total
    );
    emit(Kind::Bound, config, &record, || to_csv(std::slice::from_ref(&record)))?;
    Ok(EXIT_OK)
}

fn plan(kind: Kind, config: &RunConfig) -> Result<u8, Failure> {
    let eps = need(&config.eps, "eps")?;
    let p = need(&config.p, "p")?;
    let gap = need(&config.gap, "gap")?;
    let norm = config.norm.unwrap_or(1.0);
    let dratio = config.dratio.unwrap_or(0.0);
    let f = FunctionClass::new(p, norm)?;
    let budget = match config.regime.unwrap_or(RegimeArg::Theorem2) {
        RegimeArg::Theorem1 => {
            if config.delta.is_some() {
                return Err(usage("--delta applies to the theorem2 regime only"));
            }
            let alpha = need(&config.alpha, "alpha")?;
            let req = PlanRequest::theorem1(eps, gap, alpha, config.big_m.unwrap_or(1.0), dratio, f)?;
            planner::plan_theorem1(&req)?
        }
        RegimeArg::Theorem2 => {
            let req = PlanRequest {
                epsilon: eps,
                gap,
                dratio,
                f,
                regime: Regime::Theorem2 {
                    burnin: config.burnin.map(Into::into).unwrap_or_default(),
                },
            };
            req.validate()?;
            match (kind, config.delta) {
                (Kind::Optimize, Some(_)) => return Err(usage("optimize chooses delta itself; use plan to fix it")),
                (Kind::Optimize, None) => planner::delta_star(&req)?,
                (_, Some(delta)) => planner::budget_for_delta(delta, &req)?,
                (_, None) if dratio == 0.0 => {
                    eprintln!("note: the heuristic delta needs dratio > 0; using the optimal delta");
                    planner::delta_star(&req)?
                }
                (_, None) => planner::plan(&req, None)?,
            }
        }
        other => {
            return Err(usage(format!(
                "--regime {} is a bound, not a planning regime; use theorem1 or theorem2",
                if other == RegimeArg::Eq9 { "eq9" } else { "eq10" }
            )))
        }
    };
    let integers = match budget.rounded() {
        Some((n, n0)) => format!("integer n = {n}, n0 = {n0}"),
        None => "too large for 64-bit step counts".into(),
    };
    eprintln!(
        "delta {}, n0 {:.6e}, n {:.6e}, total {:.6e} ({integers})",
        budget.delta.map(sci).unwrap_or_else(|| "n/a".into()),
        budget.n0,
        budget.n,
        budget.total
    );
    emit(kind, config, &budget, || to_csv(&[budget]))?;
    Ok(EXIT_OK)
}

fn tables(config: &RunConfig) -> Result<u8, Failure> {
    let rows = reproduce_tables()?;
    for row in &rows {
        for c in &row.checks {
            if c.flagged {
                eprintln!(
                    "flagged: table {} p={} eps={} {}: published {} is inconsistent with the computed minimum; computed {}",
                    row.table, row.p, row.epsilon, c.column, sci(c.published), sci(c.computed)
                );
            } else if !c.pass {
                eprintln!(
                    "mismatch: table {} p={} eps={} {}: computed {}, published {}, rel dev {:.3}",
                    row.table,
                    row.p,
                    row.epsilon,
                    c.column,
                    sci(c.computed),
                    sci(c.published),
                    c.rel_dev
                );
            }
        }
    }
    emit(Kind::Tables, config, &rows, || to_csv(&rows))?;
    Ok(EXIT_OK)
}

fn integer(value: f64, flag: &str) -> Result<usize, Failure> {
    if value < 0.0 || value.fract() != 0.0 || value > 1e12 {
        return Err(Failure::from(lpbound::Error::Domain(format!(
            "--{flag} must be a nonnegative integer, got {value}"
        ))));
    }
    Ok(value as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulateResult {
    Estimate(RunRecord),
    Trajectory(Vec<f64>),
}

struct TrajectoryCsv<'a> {
    states: &'a [f64],
    discrete: bool,
}

impl TrajectoryCsv<'_> {
    fn render(&self) -> String {
        let mut out = String::from("step,state\n");
        for (i, x) in self.states.iter().enumerate() {
            let value = if self.discrete { format!("{x}") } else { sci(*x) };
            out.push_str(&format!("{},{value}\n", i + 1));
        }
        out
    }
}

fn simulate(config: &RunConfig) -> Result<u8, Failure> {
    let name = need(&config.chain, "chain")?;
    let n = integer(need(&config.n, "n")?, "n")?;
    let n0 = integer(config.n0.unwrap_or(0.0), "n0")?;
    let reps = config.reps.unwrap_or(DEFAULT_REPS);
    let seed = config.master_seed.unwrap_or(0);
    let chain = zoo::load(&name)?;

    if config.trajectory.unwrap_or(false) {
        let (states, discrete) = match &chain {
            ZooChain::Finite { chain, nu, .. } => (
                sample_path(&FiniteSampler::new(chain, nu), n + n0, seed)?
                    .into_iter()
                    .map(|s| s as f64)
                    .collect::<Vec<_>>(),
                true,
            ),
            ZooChain::Continuous { sampler, .. } => (sample_path(sampler, n + n0, seed)?, false),
        };
        let csv = TrajectoryCsv {
            states: &states,
            discrete,
        }
        .render();
        emit(
            Kind::Simulate,
            config,
            &SimulateResult::Trajectory(states.clone()),
            || csv,
        )?;
        return Ok(EXIT_OK);
    }

    let stream = SeedStream::new(seed);
    let reps = match &chain {
        ZooChain::Finite { chain, nu, .. } => {
            let f = match &config.f {
                Some(values) => StateFunction::new(values.clone()),
                None => StateFunction::indicator(chain.size() - 1, chain.size()),
            };
            let mean = f.mean(chain)?;
            replicate(
                &FiniteSampler::new(chain, nu),
                &|x| f.eval(x),
                mean,
                n,
                n0,
                reps,
                stream,
            )?
        }
        ZooChain::Continuous { sampler, .. } => {
            if config.f.is_some() {
                return Err(usage("--f applies to finite chains; use --gamma for continuous ones"));
            }
            let g = singular_f(config.gamma.unwrap_or(DEFAULT_DOMINANCE_GAMMA))?;
            let mean = g.mean(&sampler.target);
            replicate(sampler, &|x| g.eval(x), mean, n, n0, reps, stream)?
        }
    };
    let est = reps.estimate();
    let record = RunRecord {
        check: "simulate".into(),
        n,
        n0,
        replications: est.replications,
        e1_hat: est.e1_hat,
        uncertainty: est.uncertainty,
        bound_total: None,
        seed,
        pass: None,
    };
    eprintln!(
        "e1_hat {:.6e} +- {:.2e} over {} replications",
        est.e1_hat, est.uncertainty, est.replications
    );
    let result = SimulateResult::Estimate(record.clone());
    emit(Kind::Simulate, config, &result, || to_csv(&[record]))?;
    Ok(EXIT_OK)
}

fn validate(config: &RunConfig) -> Result<u8, Failure> {
    let name = need(&config.chain, "chain")?;
    let chain = zoo::load(&name)?;
    let defaults = ValidateOptions::default();
    let opts = ValidateOptions {
        suite: config.suite.map(Into::into).unwrap_or(defaults.suite),
        seed: config.master_seed.unwrap_or(0),
        replications: config.reps.unwrap_or(defaults.replications),
        dominance_grid: config.grid.clone().unwrap_or(defaults.dominance_grid),
        rate_grid: config.rate_grid.clone().unwrap_or(defaults.rate_grid),
        gamma: config.gamma,
        p: config.p.unwrap_or(defaults.p),
        ..defaults
    };
    let report = validate_chain(&chain, &opts)?;
    if let Some(rate) = &report.rate {
        eprintln!(
            "rate: slope {:.4} (window [{:.4}, {:.4}]), r^2 {:.5}",
            rate.fit.slope, rate.window.0, rate.window.1, rate.fit.r_squared
        );
    }
    for failure in &report.failures {
        eprintln!("failed: {failure}");
    }
    emit(Kind::Validate, config, &report, || to_csv(&report.records))?;
    if report.passed() {
        eprintln!("validate: all {} checks passed", report.records.len());
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_VALIDATION)
    }
}
