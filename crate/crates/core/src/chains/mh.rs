use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FiniteChain, Sampler};
use crate::bounds::ChainParams;
use crate::error::{domain, Result};

/// Target density `(k + 1) x^k` on `(0, 1]`. `k = 0` is the uniform law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerDensity {
    pub k: f64,
}

impl PowerDensity {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(domain(format!("density exponent must be finite, got {k}")));
        }
        if k < 0.0 {
            return Err(domain(format!(
                "target density (k+1) x^k with k = {k} is unbounded near 0"
            )));
        }
        Ok(Self { k })
    }

    pub fn uniform() -> Self {
        Self { k: 0.0 }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (self.k + 1.0) * x.powf(self.k)
    }

    /// `sup pdf`, i.e. `beta` against the uniform proposal.
    pub fn sup(&self) -> f64 {
        self.k + 1.0
    }

    /// Mass of `[a, b]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        b.powf(self.k + 1.0) - a.powf(self.k + 1.0)
    }

    /// Exact draw via the inverse CDF, `u in (0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        u.powf(1.0 / (self.k + 1.0))
    }
}

/// Initial law of the continuous chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ContinuousStart {
    Stationary,
    /// Uniform on `[lo, hi] ⊆ [0, 1]`.
    Uniform {
        lo: f64,
        hi: f64,
    },
}

impl ContinuousStart {
    /// `||d nu / d pi - 1||_inf` against `target`.
    pub fn dratio(&self, target: &PowerDensity) -> Result<f64> {
        match *self {
            ContinuousStart::Stationary => Ok(0.0),
            ContinuousStart::Uniform { lo, hi } => {
                if !(0.0 <= lo && lo < hi && hi <= 1.0) {
                    return Err(domain(format!("need 0 <= lo < hi <= 1, got [{lo}, {hi}]")));
                }
                if target.pdf(lo) == 0.0 {
                    return Err(domain(
                        "start density is not bounded relative to the target at its left end",
                    ));
                }
                // nu/pi is monotone in x, so the extremes sit at the endpoints.
                let ratio = |x: f64| (1.0 / ((hi - lo) * target.pdf(x)) - 1.0).abs();
                let mut d = ratio(lo).max(ratio(hi));
                if lo > 0.0 || hi < 1.0 {
                    d = d.max(1.0);
                }
                Ok(d)
            }
        }
    }

    fn sample(&self, target: &PowerDensity, u: f64) -> f64 {
        match *self {
            ContinuousStart::Stationary => target.quantile(u),
            ContinuousStart::Uniform { lo, hi } => (lo + (hi - lo) * u).max(f64::MIN_POSITIVE),
        }
    }
}

/// Independence Metropolis–Hastings on `(0, 1]` with uniform proposals.
///
/// With `beta = sup target / proposal`, the chain is uniformly ergodic with
/// `alpha = 1 - 1/beta`, `M = 1`, and has spectral gap `1/beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceSampler {
    pub target: PowerDensity,
    pub start: ContinuousStart,
}

pub fn indep_mh_sampler(target: PowerDensity, start: ContinuousStart) -> Result<IndependenceSampler> {
    let target = PowerDensity::new(target.k)?;
    start.dratio(&target)?;
    Ok(IndependenceSampler { target, start })
}

/// Uniform draw on `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

impl IndependenceSampler {
    pub fn beta(&self) -> f64 {
        self.target.sup()
    }

    pub fn params(&self) -> Result<ChainParams> {
        let beta = self.beta();
        ChainParams::uniform(1.0 / beta, 1.0 - 1.0 / beta, 1.0, self.start.dratio(&self.target)?)
    }

    /// Empirical acceptance rate over `steps` steps.
    pub fn acceptance_rate<R: Rng + ?Sized>(&self, steps: usize, rng: &mut R) -> f64 {
        let mut x = self.start(rng);
        let mut accepted = 0usize;
        for _ in 0..steps {
            let (y, acc) = self.propose(x, rng);
            accepted += acc as usize;
            x = y;
        }
        accepted as f64 / steps as f64
    }

    fn propose<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> (f64, bool) {
        let y = open_unit(rng);
        if self.target.k == 0.0 {
            return (y, true);
        }
        let u = rng.random::<f64>();
        // pi(y)/pi(x) = (y/x)^k; the uniform proposal cancels.
        if u < (y / x).powf(self.target.k) {
            (y, true)
        } else {
            (x, false)
        }
    }

    /// The same sampler on `cells` equal-width bins: an independence chain
    /// with bin masses as target and uniform proposal over bins.
    pub fn finite_surrogate(&self, cells: usize) -> Result<FiniteChain> {
        if cells == 0 || cells > super::MAX_STATES {
            return Err(domain(format!("cells must lie in 1..={}", super::MAX_STATES)));
        }
        let h = 1.0 / cells as f64;
        let pi: Vec<f64> = (0..cells)
            .map(|i| self.target.mass(i as f64 * h, (i + 1) as f64 * h))
            .collect();
        let rows = (0..cells)
            .map(|i| {
                let mut row: Vec<f64> = (0..cells)
                    .map(|j| if i == j { 0.0 } else { h * (pi[j] / pi[i]).min(1.0) })
                    .collect();
                row[i] = 1.0 - row.iter().sum::<f64>();
                row
            })
            .collect();
        FiniteChain::with_stationary(rows, pi, true)
    }
}

impl Sampler for IndependenceSampler {
    type State = f64;

    fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.start.sample(&self.target, open_unit(rng))
    }

    fn step<R: Rng + ?Sized>(&self, state: f64, rng: &mut R) -> f64 {
        self.propose(state, rng).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::{spectral_gap_exact, uniform_ergodicity_constants};
    use crate::rng::SeedStream;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_target_is_iid() {
        let s = indep_mh_sampler(PowerDensity::uniform(), ContinuousStart::Stationary).unwrap();
        let p = s.params().unwrap();
        assert_eq!(p.uniform.unwrap().alpha, 0.0);
        assert_eq!(p.gap, 1.0);
        let mut rng = SeedStream::new(3).rng(0);
        assert_eq!(s.acceptance_rate(10_000, &mut rng), 1.0);
    }

    #[test]
    fn linear_target_constants() {
        let s = indep_mh_sampler(PowerDensity::new(1.0).unwrap(), ContinuousStart::Stationary).unwrap();
        assert_eq!(s.beta(), 2.0);
        let p = s.params().unwrap();
        assert_eq!(p.uniform.unwrap().alpha, 0.5);
        assert_eq!(p.uniform.unwrap().big_m, 1.0);
        assert!(p.gap >= 1.0 - p.uniform.unwrap().alpha);
        // Mean acceptance under stationarity: E min(1, y/x) = 2/3.
        let mut rng = SeedStream::new(9).rng(0);
        let rate = s.acceptance_rate(200_000, &mut rng);
        assert!((rate - 2.0 / 3.0).abs() < 0.01, "{rate}");
    }

    #[test]
    fn unbounded_target_is_rejected() {
        assert!(PowerDensity::new(-0.5).is_err());
    }

    #[test]
    fn uniform_start_penalty() {
        let t = PowerDensity::new(1.0).unwrap();
        let d = ContinuousStart::Uniform { lo: 0.5, hi: 1.0 }.dratio(&t).unwrap();
        assert_relative_eq!(d, 1.0, max_relative = 1e-15);
        assert!(ContinuousStart::Uniform { lo: 0.0, hi: 1.0 }.dratio(&t).is_err());
        let d = ContinuousStart::Uniform { lo: 0.0, hi: 1.0 }
            .dratio(&PowerDensity::uniform())
            .unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn stationary_start_matches_target_mean() {
        let s = indep_mh_sampler(PowerDensity::new(1.0).unwrap(), ContinuousStart::Stationary).unwrap();
        let mut rng = SeedStream::new(4).rng(0);
        let n = 200_000;
        let mut x = s.start(&mut rng);
        let mut sum = 0.0;
        for _ in 0..n {
            x = s.step(x, &mut rng);
            sum += x;
        }
        assert!((sum / n as f64 - 2.0 / 3.0).abs() < 0.01);
    }

    #[test]
    fn surrogate_constants_track_the_continuous_chain() {
        let s = indep_mh_sampler(PowerDensity::new(1.0).unwrap(), ContinuousStart::Stationary).unwrap();
        for cells in [8usize, 32, 64] {
            let c = s.finite_surrogate(cells).unwrap();
            let expected_alpha = (cells as f64 - 1.0) / (2.0 * cells as f64 - 1.0);
            let u = uniform_ergodicity_constants(&c).unwrap();
            assert_relative_eq!(u.alpha, expected_alpha, epsilon = 1e-10);
            assert!(u.alpha <= 0.5);
            assert!(spectral_gap_exact(&c).unwrap() >= 1.0 - u.alpha - 1e-12);
        }
    }
}
