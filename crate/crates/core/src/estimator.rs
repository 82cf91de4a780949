//! Monte Carlo estimation of `e_p(S_{n,n0}, f) = (E |S_{n,n0}(f) - E_pi f|^p)^(1/p)`.
//!
//! Replications run in parallel but each one draws from its own counter-based
//! stream and results are reduced in index order, so estimates are
//! bit-identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chains::{FiniteChain, InitialDistribution, Sampler, StateFunction};
use crate::error::{domain, Error, Result};
use crate::rng::SeedStream;

/// Block count for the median-of-means spread.
pub const MOM_BLOCKS: usize = 20;
/// Largest number of paths [`exact_e1_small`] will enumerate.
pub const PATH_BUDGET: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub e1_hat: f64,
    pub uncertainty: f64,
    pub replications: usize,
    pub n: usize,
    pub n0: usize,
}

/// Fitted `ln e1 = intercept + slope ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
}

/// Signed errors `S^(r) - E_pi f` of independent replications.
#[derive(Debug, Clone, PartialEq)]
pub struct Replications {
    pub n: usize,
    pub n0: usize,
    pub errors: Vec<f64>,
}

impl Replications {
    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }

    /// Mean absolute error.
    pub fn e1(&self) -> f64 {
        self.errors.iter().map(|e| e.abs()).sum::<f64>() / self.len() as f64
    }

    /// `((1/R) sum |err|^p)^(1/p)`.
    pub fn ep(&self, p: f64) -> Result<f64> {
        if !(1.0..=2.0).contains(&p) {
            return Err(domain(format!("p must lie in [1, 2], got {p}")));
        }
        if p == 1.0 {
            return Ok(self.e1());
        }
        let m = self.errors.iter().map(|e| e.abs().powf(p)).sum::<f64>() / self.len() as f64;
        Ok(m.powf(1.0 / p))
    }

    /// Half the interquartile range of block means of `|err|`.
    pub fn uncertainty(&self) -> f64 {
        let abs: Vec<f64> = self.errors.iter().map(|e| e.abs()).collect();
        mom_spread(&abs, MOM_BLOCKS)
    }

    pub fn estimate(&self) -> ErrorEstimate {
        ErrorEstimate {
            e1_hat: self.e1(),
            uncertainty: self.uncertainty(),
            replications: self.len(),
            n: self.n,
            n0: self.n0,
        }
    }
}

/// Half the interquartile range of the means of `blocks` contiguous blocks.
pub fn mom_spread(values: &[f64], blocks: usize) -> f64 {
    let blocks = blocks.min(values.len()).max(1);
    let mut means: Vec<f64> = (0..blocks)
        .map(|b| {
            let lo = b * values.len() / blocks;
            let hi = (b + 1) * values.len() / blocks;
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    (quantile(&means, 0.75) - quantile(&means, 0.25)) / 2.0
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let (i, frac) = (h.floor() as usize, h - h.floor());
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + frac * (next - sorted[i]),
        None => sorted[i],
    }
}

/// `S_{n,n0}(f) = (1/n) sum_{j=1}^n f(X_{j+n0})` over a stored trajectory
/// `X_1, X_2, ...`.
pub fn sample_mean<S: Copy>(trajectory: &[S], f: impl Fn(S) -> f64, n: usize, n0: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if trajectory.len() < n + n0 {
        return Err(Error::Length {
            needed: n + n0,
            available: trajectory.len(),
        });
    }
    Ok(trajectory[n0..n0 + n].iter().map(|&x| f(x)).sum::<f64>() / n as f64)
}

/// Runs `replications` independent chains from `stream` and records
/// `S_{n,n0}(f) - mean` for each.
pub fn replicate<S, F>(
    sampler: &S,
    f: &F,
    mean: f64,
    n: usize,
    n0: usize,
    replications: usize,
    stream: SeedStream,
) -> Result<Replications>
where
    S: Sampler,
    F: Fn(S::State) -> f64 + Sync,
{
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    if replications < 2 {
        return Err(domain(format!("need at least 2 replications, got {replications}")));
    }
    let errors = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream.rng(r as u64);
            let mut x = sampler.start(&mut rng);
            for _ in 0..n0 {
                x = sampler.step(x, &mut rng);
            }
            let mut sum = f(x);
            for _ in 1..n {
                x = sampler.step(x, &mut rng);
                sum += f(x);
            }
            sum / n as f64 - mean
        })
        .collect();
    Ok(Replications { n, n0, errors })
}

/// Monte Carlo estimate of `e_1(S_{n,n0}, f)`.
pub fn estimate_e1<S, F>(
    sampler: &S,
    f: &F,
    mean: f64,
    n: usize,
    n0: usize,
    replications: usize,
    seed: u64,
) -> Result<ErrorEstimate>
where
    S: Sampler,
    F: Fn(S::State) -> f64 + Sync,
{
    Ok(replicate(sampler, f, mean, n, n0, replications, SeedStream::new(seed))?.estimate())
}

/// Monte Carlo estimate of `e_p(S_{n,n0}, f)` for `p in [1, 2]`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_ep<S, F>(
    sampler: &S,
    f: &F,
    mean: f64,
    n: usize,
    n0: usize,
    replications: usize,
    seed: u64,
    p: f64,
) -> Result<f64>
where
    S: Sampler,
    F: Fn(S::State) -> f64 + Sync,
{
    replicate(sampler, f, mean, n, n0, replications, SeedStream::new(seed))?.ep(p)
}

/// Exact `e_1` by summing over every path of the `n` averaged states; the
/// burn-in is integrated out as `nu K^n0`.
pub fn exact_e1_small(
    chain: &FiniteChain,
    nu: &InitialDistribution,
    f: &StateFunction,
    n: usize,
    n0: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(domain("n must be >= 1"));
    }
    let s = chain.size();
    let paths = (s as f64).powi((n + n0) as i32);
    if paths > PATH_BUDGET {
        return Err(Error::Size {
            paths,
            budget: PATH_BUDGET,
        });
    }
    let mean = f.mean(chain)?;
    let k = chain.transition();
    let mut dist = nu.nu.clone();
    for _ in 0..n0 {
        dist = (0..s).map(|j| (0..s).map(|i| dist[i] * k[(i, j)]).sum()).collect();
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        k: &nalgebra::DMatrix<f64>,
        f: &StateFunction,
        state: usize,
        remaining: usize,
        sum: f64,
        prob: f64,
        n: usize,
        mean: f64,
    ) -> f64 {
        if prob == 0.0 {
            return 0.0;
        }
        if remaining == 0 {
            return prob * (sum / n as f64 - mean).abs();
        }
        (0..k.ncols())
            .map(|y| walk(k, f, y, remaining - 1, sum + f.eval(y), prob * k[(state, y)], n, mean))
            .sum()
    }

    Ok((0..s).map(|x| walk(k, f, x, n - 1, f.eval(x), dist[x], n, mean)).sum())
}

/// Least-squares line through `(ln n, ln e1)`.
pub fn rate_regression(points: &[(f64, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(domain(format!("need at least 4 points, got {}", points.len())));
    }
    if let Some(&(n, e)) = points.iter().find(|(n, e)| !(*n > 0.0 && *e > 0.0)) {
        return Err(domain(format!("log-log fit needs positive values, got ({n}, {e})")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(domain("all n values coincide"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: points.to_vec(),
    })
}
