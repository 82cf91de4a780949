use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_index, sample_path, Sampler};
use crate::bounds::UniformErgodicity;
use crate::error::{domain, Error, Result};

pub const MAX_STATES: usize = 1000;
pub const ROW_SUM_TOL: f64 = 1e-12;
pub const STATIONARY_TOL: f64 = 1e-10;
pub const DETAILED_BALANCE_TOL: f64 = 1e-10;
/// Horizon over which the uniform ergodicity constant `M` is certified.
pub const TV_HORIZON: usize = 200;
/// Second eigenvalue moduli below this are treated as an exact i.i.d. chain.
const IID_SLEM: f64 = 1e-12;
/// Moduli this close to 1 mean a periodic or reducible chain.
const UNIT_MODULUS_TOL: f64 = 1e-10;

/// A row-stochastic matrix with its (unique) stationary distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    transition: DMatrix<f64>,
    stationary: Vec<f64>,
    reversible: bool,
    row_cdf: Vec<Vec<f64>>,
}

/// JSON chain description: `{"matrix": [[...]], "nu": [...], "reversible": true}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainDocument {
    pub matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub nu: Option<Vec<f64>>,
    #[serde(default)]
    pub reversible: bool,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidChain(msg.into())
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let s = rows.len();
    if s == 0 {
        return Err(invalid("matrix must have at least one state"));
    }
    if s > MAX_STATES {
        return Err(invalid(format!("at most {MAX_STATES} states are supported, got {s}")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != s {
            return Err(invalid(format!(
                "square matrix required: row {i} has {} entries, expected {s}",
                row.len()
            )));
        }
        if let Some(j) = row.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid(format!("entries nonnegative: entry ({i}, {j}) = {}", row[j])));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(invalid(format!("rows sum to 1: row {i} sums to {sum}")));
        }
    }
    Ok(s)
}

fn solve_stationary(k: &DMatrix<f64>) -> Result<Vec<f64>> {
    let s = k.nrows();
    let mut a = k.transpose() - DMatrix::<f64>::identity(s, s);
    for j in 0..s {
        a[(s - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(s);
    b[s - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| invalid("stationary distribution is not unique (reducible chain)"))?;
    let mut pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}

impl FiniteChain {
    /// Validates `rows` and solves for the stationary distribution.
    pub fn new(rows: Vec<Vec<f64>>, reversible: bool) -> Result<Self> {
        let s = check_rows(&rows)?;
        let transition = DMatrix::from_fn(s, s, |i, j| rows[i][j]);
        let stationary = solve_stationary(&transition)?;
        Self::assemble(transition, stationary, reversible)
    }

    /// Like [`FiniteChain::new`] when the stationary distribution is known.
    pub fn with_stationary(rows: Vec<Vec<f64>>, stationary: Vec<f64>, reversible: bool) -> Result<Self> {
        let s = check_rows(&rows)?;
        if stationary.len() != s {
            return Err(invalid("stationary vector length must match the matrix"));
        }
        let transition = DMatrix::from_fn(s, s, |i, j| rows[i][j]);
        Self::assemble(transition, stationary, reversible)
    }

    pub fn from_document(doc: &ChainDocument) -> Result<(Self, InitialDistribution)> {
        let chain = Self::new(doc.matrix.clone(), doc.reversible)?;
        let nu = match &doc.nu {
            Some(nu) => InitialDistribution::new(nu.clone(), &chain)?,
            None => InitialDistribution::stationary(&chain),
        };
        Ok((chain, nu))
    }

    fn assemble(transition: DMatrix<f64>, stationary: Vec<f64>, reversible: bool) -> Result<Self> {
        let s = transition.nrows();
        if stationary.iter().any(|v| !(v.is_finite() && *v >= 0.0))
            || (stationary.iter().sum::<f64>() - 1.0).abs() > ROW_SUM_TOL
        {
            return Err(invalid("stationary: must be a probability vector"));
        }
        for j in 0..s {
            let flow: f64 = (0..s).map(|i| stationary[i] * transition[(i, j)]).sum();
            if (flow - stationary[j]).abs() > STATIONARY_TOL {
                return Err(invalid(format!(
                    "stationary: (pi K)_{j} = {flow} differs from pi_{j} = {}",
                    stationary[j]
                )));
            }
        }
        if reversible {
            for i in 0..s {
                for j in (i + 1)..s {
                    let fwd = stationary[i] * transition[(i, j)];
                    let bwd = stationary[j] * transition[(j, i)];
                    if (fwd - bwd).abs() > DETAILED_BALANCE_TOL {
                        return Err(invalid(format!(
                            "detailed balance: pi_{i} K_{i}{j} = {fwd} but pi_{j} K_{j}{i} = {bwd}"
                        )));
                    }
                }
            }
        }
        let row_cdf = (0..s)
            .map(|i| {
                let mut acc = 0.0;
                (0..s)
                    .map(|j| {
                        acc += transition[(i, j)];
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            transition,
            stationary,
            reversible,
            row_cdf,
        })
    }

    pub fn size(&self) -> usize {
        self.transition.nrows()
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    /// `K^n` by repeated multiplication.
    pub fn power(&self, n: usize) -> DMatrix<f64> {
        let s = self.size();
        let mut acc = DMatrix::<f64>::identity(s, s);
        for _ in 0..n {
            acc = &acc * &self.transition;
        }
        acc
    }

    /// Largest total variation distance to `pi` over start states, `max_x ||K^n(x, .) - pi||_tv`,
    /// from a precomputed power `K^n`.
    pub fn tv_from_power(&self, power: &DMatrix<f64>) -> f64 {
        (0..self.size())
            .map(|x| {
                0.5 * (0..self.size())
                    .map(|y| (power[(x, y)] - self.stationary[y]).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of `D^(1/2) K D^(-1/2)`, `D = diag(pi)`, sorted descending.
    fn symmetrized_spectrum(&self) -> Result<Vec<f64>> {
        if !self.reversible {
            return Err(Error::Regime(
                "spectral gap via eigenvalues needs a reversible chain".into(),
            ));
        }
        if self.stationary.iter().any(|&v| v <= 0.0) {
            return Err(domain("stationary distribution has zero mass on some state"));
        }
        let s = self.size();
        let root: Vec<f64> = self.stationary.iter().map(|v| v.sqrt()).collect();
        let sym = DMatrix::from_fn(s, s, |i, j| {
            let a = root[i] * self.transition[(i, j)] / root[j];
            let b = root[j] * self.transition[(j, i)] / root[i];
            0.5 * (a + b)
        });
        let mut eig: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        Ok(eig)
    }

    /// Second largest eigenvalue modulus (0 for a single state).
    fn slem(&self) -> Result<f64> {
        let eig = self.symmetrized_spectrum()?;
        // eig[0] is the Perron root.
        Ok(eig.iter().skip(1).map(|v| v.abs()).fold(0.0, f64::max))
    }
}

/// `gap(P) = 1 - max{|lambda| : lambda != 1}` for a reversible chain.
/// A SLEM below rounding level is read as exactly 0, as in
/// [`uniform_ergodicity_constants`].
pub fn spectral_gap_exact(chain: &FiniteChain) -> Result<f64> {
    let slem = chain.slem()?;
    if slem < IID_SLEM {
        return Ok(1.0);
    }
    Ok((1.0 - slem).clamp(0.0, 1.0))
}

/// `alpha = 1 - gap` and the smallest `M` with
/// `max_x ||K^n(x, .) - pi||_tv <= alpha^n M` for `n = 1..=200`.
///
/// `M` is computed from powers of the centered matrix `(K - 1 pi^T) / alpha`,
/// which stay well scaled where `K^n - 1 pi^T` itself would drown in rounding.
pub fn uniform_ergodicity_constants(chain: &FiniteChain) -> Result<UniformErgodicity> {
    let slem = chain.slem()?;
    if slem >= 1.0 - UNIT_MODULUS_TOL {
        return Err(domain(
            "periodic or reducible chain: a non-Perron eigenvalue has modulus 1",
        ));
    }
    if slem < IID_SLEM {
        return Ok(UniformErgodicity { alpha: 0.0, big_m: 1.0 });
    }
    let alpha = slem;
    let s = chain.size();
    let pi = chain.stationary();
    let step = DMatrix::from_fn(s, s, |i, j| (chain.transition[(i, j)] - pi[j]) / alpha);
    let mut scaled = step.clone();
    let mut big_m: f64 = 0.0;
    for n in 1..=TV_HORIZON {
        if n > 1 {
            scaled = &scaled * &step;
        }
        let ratio = (0..s)
            .map(|x| 0.5 * (0..s).map(|y| scaled[(x, y)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        big_m = big_m.max(ratio);
    }
    if !(big_m > 0.0) {
        big_m = 1.0;
    }
    Ok(UniformErgodicity { alpha, big_m })
}

/// Initial distribution of a finite chain and its penalty
/// `dratio = max_i |nu_i / pi_i - 1|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDistribution {
    pub nu: Vec<f64>,
    pub dratio: f64,
}

impl InitialDistribution {
    pub fn new(nu: Vec<f64>, chain: &FiniteChain) -> Result<Self> {
        if nu.len() != chain.size() {
            return Err(invalid(format!(
                "nu has {} entries, chain has {} states",
                nu.len(),
                chain.size()
            )));
        }
        if nu.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("nu entries nonnegative"));
        }
        let sum: f64 = nu.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(invalid(format!("nu sums to 1: got {sum}")));
        }
        let mut dratio: f64 = 0.0;
        for (i, (&v, &p)) in nu.iter().zip(chain.stationary()).enumerate() {
            if p == 0.0 {
                if v > 0.0 {
                    return Err(invalid(format!(
                        "nu is not absolutely continuous w.r.t. pi at state {i}"
                    )));
                }
                continue;
            }
            dratio = dratio.max((v / p - 1.0).abs());
        }
        Ok(Self { nu, dratio })
    }

    pub fn stationary(chain: &FiniteChain) -> Self {
        Self {
            nu: chain.stationary().to_vec(),
            dratio: 0.0,
        }
    }

    pub fn point_mass(state: usize, chain: &FiniteChain) -> Result<Self> {
        let mut nu = vec![0.0; chain.size()];
        *nu.get_mut(state)
            .ok_or_else(|| invalid(format!("state {state} out of range")))? = 1.0;
        Self::new(nu, chain)
    }
}

/// Draws `X_1 ~ nu, X_{k+1} ~ K(X_k, .)` by inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct FiniteSampler<'a> {
    chain: &'a FiniteChain,
    nu_cdf: Vec<f64>,
}

impl<'a> FiniteSampler<'a> {
    pub fn new(chain: &'a FiniteChain, nu: &InitialDistribution) -> Self {
        let mut acc = 0.0;
        let nu_cdf = nu
            .nu
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        Self { chain, nu_cdf }
    }
}

impl Sampler for FiniteSampler<'_> {
    type State = usize;

    fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.nu_cdf, rng.random())
    }

    fn step<R: Rng + ?Sized>(&self, state: usize, rng: &mut R) -> usize {
        sample_index(&self.chain.row_cdf[state], rng.random())
    }
}

/// A trajectory `X_1, ..., X_length`, reproducible from `seed`.
pub fn simulate_trajectory(
    chain: &FiniteChain,
    nu: &InitialDistribution,
    length: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    sample_path(&FiniteSampler::new(chain, nu), length, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::zoo;
    use approx::assert_relative_eq;

    fn two_state() -> FiniteChain {
        FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], true).unwrap()
    }

    #[test]
    fn two_state_gap_and_stationary() {
        let c = two_state();
        assert_relative_eq!(c.stationary()[0], 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(c.stationary()[1], 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(spectral_gap_exact(&c).unwrap(), 0.3, max_relative = 1e-13);
    }

    #[test]
    fn iid_chain_has_unit_gap() {
        let pi = vec![0.2, 0.3, 0.5];
        let c = FiniteChain::new(vec![pi.clone(), pi.clone(), pi], true).unwrap();
        assert_relative_eq!(spectral_gap_exact(&c).unwrap(), 1.0, epsilon = 1e-12);
        let u = uniform_ergodicity_constants(&c).unwrap();
        assert_eq!((u.alpha, u.big_m), (0.0, 1.0));
        let sym = FiniteChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]], true).unwrap();
        let u = uniform_ergodicity_constants(&sym).unwrap();
        assert_eq!((u.alpha, u.big_m), (0.0, 1.0));
    }

    #[test]
    fn lazy_cycle_gap_matches_circulant_spectrum() {
        for s in [4usize, 5, 8, 12] {
            let c = zoo::lazy_cycle(s).unwrap();
            let second = (1.0 + (2.0 * std::f64::consts::PI / s as f64).cos()) / 2.0;
            assert_relative_eq!(spectral_gap_exact(&c).unwrap(), 1.0 - second, epsilon = 1e-12);
        }
        assert_relative_eq!(
            spectral_gap_exact(&zoo::lazy_cycle(4).unwrap()).unwrap(),
            0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn two_state_ergodicity_constants() {
        let c = two_state();
        let u = uniform_ergodicity_constants(&c).unwrap();
        assert_relative_eq!(u.alpha, 0.7, max_relative = 1e-13);
        // TV_n from state 2 is (2/3) 0.7^n; from state 1 it is (1/3) 0.7^n.
        assert_relative_eq!(u.big_m, 2.0 / 3.0, max_relative = 1e-10);
        let p1 = c.power(1);
        assert_relative_eq!((p1[(0, 0)] - 2.0 / 3.0f64).abs(), 7.0 / 30.0, max_relative = 1e-13);
        assert!(u.big_m >= (7.0 / 30.0) / 0.7);
    }

    #[test]
    fn periodic_chain_is_rejected() {
        let c = FiniteChain::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], true).unwrap();
        assert!(matches!(uniform_ergodicity_constants(&c), Err(Error::Domain(_))));
        assert_eq!(spectral_gap_exact(&c).unwrap(), 0.0);
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let err = FiniteChain::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], true).unwrap_err();
        assert!(err.to_string().contains("not unique"));
    }

    #[test]
    fn non_reversible_spectral_gap_is_a_regime_error() {
        let c = FiniteChain::new(
            vec![vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8], vec![0.8, 0.1, 0.1]],
            false,
        )
        .unwrap();
        assert!(matches!(spectral_gap_exact(&c), Err(Error::Regime(_))));
        let err = FiniteChain::new(
            c.transition().row_iter().map(|r| r.iter().copied().collect()).collect(),
            true,
        )
        .unwrap_err();
        assert!(err.to_string().contains("detailed balance"));
    }

    #[test]
    fn validation_names_violated_invariant() {
        let err = FiniteChain::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]], true).unwrap_err();
        assert!(err.to_string().contains("rows sum to 1"));
        let err = FiniteChain::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]], true).unwrap_err();
        assert!(err.to_string().contains("entries nonnegative"));
        let err = FiniteChain::new(vec![vec![1.0, 0.0]], true).unwrap_err();
        assert!(err.to_string().contains("square"));
    }

    #[test]
    fn detailed_balance_survives_powers() {
        let c = zoo::three_state().unwrap();
        let pi = c.stationary();
        for n in [2, 3] {
            let k = c.power(n);
            for i in 0..3 {
                for j in 0..3 {
                    assert_relative_eq!(pi[i] * k[(i, j)], pi[j] * k[(j, i)], epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn initial_distribution_ratio() {
        let c = two_state();
        assert_relative_eq!(
            InitialDistribution::point_mass(1, &c).unwrap().dratio,
            2.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            InitialDistribution::point_mass(0, &c).unwrap().dratio,
            1.0,
            max_relative = 1e-13
        );
        assert_eq!(InitialDistribution::stationary(&c).dratio, 0.0);
        assert!(InitialDistribution::new(vec![0.5, 0.6], &c).is_err());
    }

    #[test]
    fn trajectories_are_seeded() {
        let c = two_state();
        let nu = InitialDistribution::stationary(&c);
        let a = simulate_trajectory(&c, &nu, 500, 11).unwrap();
        let b = simulate_trajectory(&c, &nu, 500, 11).unwrap();
        let other = simulate_trajectory(&c, &nu, 500, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
        assert!(simulate_trajectory(&c, &nu, 0, 1).is_err());
    }

    #[test]
    fn empirical_frequencies_match_stationary() {
        let c = two_state();
        let nu = InitialDistribution::stationary(&c);
        let len = 1_000_000;
        let traj = simulate_trajectory(&c, &nu, len, 2024).unwrap();
        let freq = traj.iter().filter(|&&x| x == 1).count() as f64 / len as f64;
        // Asymptotic variance of the indicator: pi(1-pi)(1+lambda)/(1-lambda).
        let se = ((1.0 / 3.0) * (2.0 / 3.0) * (1.7 / 0.3) / len as f64).sqrt();
        assert!((freq - 1.0 / 3.0).abs() < 3.0 * se, "freq {freq}, se {se}");
    }

    #[test]
    fn iid_chain_draws_from_pi_after_start() {
        let pi = vec![0.25, 0.75];
        let c = FiniteChain::new(vec![pi.clone(), pi], true).unwrap();
        let nu = InitialDistribution::point_mass(0, &c).unwrap();
        let traj = simulate_trajectory(&c, &nu, 200_000, 5).unwrap();
        assert_eq!(traj[0], 0);
        let freq = traj[1..].iter().filter(|&&x| x == 1).count() as f64 / (traj.len() - 1) as f64;
        assert!((freq - 0.75).abs() < 3.0 * (0.75 * 0.25 / 2e5f64).sqrt() + 1e-9);
    }

    #[test]
    fn document_round_trip() {
        let doc: ChainDocument =
            serde_json::from_str(r#"{"matrix": [[0.9, 0.1], [0.2, 0.8]], "nu": [0, 1], "reversible": true}"#).unwrap();
        let (c, nu) = FiniteChain::from_document(&doc).unwrap();
        assert_eq!(c.size(), 2);
        assert_relative_eq!(nu.dratio, 2.0, max_relative = 1e-13);
        assert!(serde_json::from_str::<ChainDocument>(r#"{"matrix": [[1]], "extra": 1}"#).is_err());
    }
}
