use serde::{Deserialize, Serialize};

use super::{FiniteChain, PowerDensity};
use crate::error::{domain, Error, Result};

/// `f(x) = x^(-gamma)` on `(0, 1]`.
///
/// Under `pi = (k+1) x^k dx`, `f(X)` has tail index `(k+1)/gamma`: `||f||_p`
/// is finite iff `gamma p < k + 1` and the variance is infinite iff
/// `2 gamma >= k + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularFunction {
    pub gamma: f64,
}

pub fn singular_f(gamma: f64) -> Result<SingularFunction> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(domain(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    Ok(SingularFunction { gamma })
}

impl SingularFunction {
    pub fn eval(&self, x: f64) -> f64 {
        x.powf(-self.gamma)
    }

    /// `E_pi f = (k+1) / (k+1-gamma)`.
    pub fn mean(&self, target: &PowerDensity) -> f64 {
        let a = target.k + 1.0;
        a / (a - self.gamma)
    }

    /// `||f||_p^p = (k+1) / (k+1-gamma p)`.
    pub fn moment(&self, p: f64, target: &PowerDensity) -> Result<f64> {
        let a = target.k + 1.0;
        if self.gamma * p >= a {
            return Err(Error::Divergent {
                p,
                limit: a / self.gamma,
            });
        }
        Ok(a / (a - self.gamma * p))
    }

    pub fn norm_p(&self, p: f64, target: &PowerDensity) -> Result<f64> {
        Ok(self.moment(p, target)?.powf(1.0 / p))
    }

    pub fn tail_index(&self, target: &PowerDensity) -> f64 {
        (target.k + 1.0) / self.gamma
    }

    pub fn has_finite_variance(&self, target: &PowerDensity) -> bool {
        2.0 * self.gamma < target.k + 1.0
    }
}

/// A function on the states of a finite chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFunction {
    pub values: Vec<f64>,
}

impl StateFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn indicator(state: usize, size: usize) -> Self {
        let mut values = vec![0.0; size];
        values[state] = 1.0;
        Self { values }
    }

    pub fn eval(&self, state: usize) -> f64 {
        self.values[state]
    }

    fn check(&self, chain: &FiniteChain) -> Result<()> {
        if self.values.len() != chain.size() {
            return Err(domain(format!(
                "function has {} values, chain has {} states",
                self.values.len(),
                chain.size()
            )));
        }
        Ok(())
    }

    pub fn mean(&self, chain: &FiniteChain) -> Result<f64> {
        self.check(chain)?;
        Ok(self.values.iter().zip(chain.stationary()).map(|(f, p)| f * p).sum())
    }

    pub fn norm_p(&self, p: f64, chain: &FiniteChain) -> Result<f64> {
        self.check(chain)?;
        let m: f64 = self
            .values
            .iter()
            .zip(chain.stationary())
            .map(|(f, w)| f.abs().powf(p) * w)
            .sum();
        Ok(m.powf(1.0 / p))
    }
}
