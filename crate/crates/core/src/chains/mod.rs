//! Concrete chains whose convergence constants are known exactly.
//!
//! Finite reversible chains give exact spectral gaps and certified uniform
//! ergodicity constants. The independence Metropolis–Hastings sampler on
//! `(0, 1]` carries the singular test functions whose stationary variance is
//! infinite, which no finite chain can.

use rand::Rng;

use crate::error::{domain, Result};
use crate::rng::SeedStream;

mod finite;
mod mh;
mod singular;
pub mod zoo;

pub use finite::{
    simulate_trajectory, spectral_gap_exact, uniform_ergodicity_constants, ChainDocument, FiniteChain, FiniteSampler,
    InitialDistribution, MAX_STATES, TV_HORIZON,
};
pub use mh::{indep_mh_sampler, ContinuousStart, IndependenceSampler, PowerDensity};
pub use singular::{singular_f, SingularFunction, StateFunction};

/// One step of a Markov chain and a draw from its initial distribution.
///
/// Implementations are immutable descriptions; all randomness comes from the
/// generator passed in, so one sampler can serve many replications.
pub trait Sampler: Sync {
    type State: Copy + Send;

    fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn step<R: Rng + ?Sized>(&self, state: Self::State, rng: &mut R) -> Self::State;
}

/// `X_1, ..., X_length` drawn from the first stream of `seed`.
pub fn sample_path<S: Sampler>(sampler: &S, length: usize, seed: u64) -> Result<Vec<S::State>> {
    if length == 0 {
        return Err(domain("trajectory length must be >= 1"));
    }
    let mut rng = SeedStream::new(seed).rng(0);
    let mut x = sampler.start(&mut rng);
    let mut out = Vec::with_capacity(length);
    out.push(x);
    for _ in 1..length {
        x = sampler.step(x, &mut rng);
        out.push(x);
    }
    Ok(out)
}

/// First index whose cumulative mass exceeds `u`.
pub(crate) fn sample_index(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}
