//! Named chains: `two-state`, `three-state`, `lazy-cycle-<s>`, `iid-uniform`,
//! `indep-mh-2x`, plus JSON files in [`ChainDocument`] form.

use std::path::Path;

use super::{
    indep_mh_sampler, ChainDocument, ContinuousStart, FiniteChain, IndependenceSampler, InitialDistribution,
    PowerDensity,
};
use crate::error::{Error, Result};

pub const NAMES: [&str; 5] = [
    "two-state",
    "three-state",
    "lazy-cycle-<s>",
    "iid-uniform",
    "indep-mh-2x",
];

/// Cells used when a continuous member is checked through its finite surrogate.
pub const SURROGATE_CELLS: usize = 64;

#[derive(Debug, Clone)]
pub enum ZooChain {
    Finite {
        name: String,
        chain: FiniteChain,
        nu: InitialDistribution,
    },
    Continuous {
        name: String,
        sampler: IndependenceSampler,
    },
}

impl ZooChain {
    pub fn name(&self) -> &str {
        match self {
            ZooChain::Finite { name, .. } | ZooChain::Continuous { name, .. } => name,
        }
    }
}

pub fn two_state() -> Result<FiniteChain> {
    FiniteChain::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]], true)
}

/// Birth–death chain on three states with `pi = (0.25, 0.5, 0.25)`.
pub fn three_state() -> Result<FiniteChain> {
    FiniteChain::new(
        vec![vec![0.6, 0.4, 0.0], vec![0.2, 0.6, 0.2], vec![0.0, 0.4, 0.6]],
        true,
    )
}

/// Lazy walk on the cycle `Z_s`: hold 1/2, move to either neighbour w.p. 1/4.
pub fn lazy_cycle(s: usize) -> Result<FiniteChain> {
    if s < 3 {
        return Err(Error::InvalidChain(format!("lazy cycle needs s >= 3, got {s}")));
    }
    let rows = (0..s)
        .map(|i| {
            let mut row = vec![0.0; s];
            row[i] = 0.5;
            row[(i + 1) % s] += 0.25;
            row[(i + s - 1) % s] += 0.25;
            row
        })
        .collect();
    FiniteChain::with_stationary(rows, vec![1.0 / s as f64; s], true)
}

/// Resolves a zoo name or, failing that, a path to a JSON chain document.
pub fn load(spec: &str) -> Result<ZooChain> {
    let finite = |chain: FiniteChain, start: usize| -> Result<ZooChain> {
        let nu = InitialDistribution::point_mass(start, &chain)?;
        Ok(ZooChain::Finite {
            name: spec.to_string(),
            chain,
            nu,
        })
    };
    match spec {
        "two-state" => return finite(two_state()?, 1),
        "three-state" => return finite(three_state()?, 0),
        "iid-uniform" => {
            return Ok(ZooChain::Continuous {
                name: spec.to_string(),
                sampler: indep_mh_sampler(PowerDensity::uniform(), ContinuousStart::Stationary)?,
            })
        }
        "indep-mh-2x" => {
            return Ok(ZooChain::Continuous {
                name: spec.to_string(),
                sampler: indep_mh_sampler(PowerDensity::new(1.0)?, ContinuousStart::Uniform { lo: 0.5, hi: 1.0 })?,
            })
        }
        _ => {}
    }
    if let Some(s) = spec.strip_prefix("lazy-cycle-") {
        let s: usize = s
            .parse()
            .map_err(|_| Error::InvalidChain(format!("bad cycle size in {spec:?}")))?;
        return finite(lazy_cycle(s)?, 0);
    }
    let path = Path::new(spec);
    if path.exists() {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::InvalidChain(format!("cannot read {spec}: {e}")))?;
        let doc: ChainDocument =
            serde_json::from_str(&text).map_err(|e| Error::InvalidChain(format!("cannot parse {spec}: {e}")))?;
        let (chain, nu) = FiniteChain::from_document(&doc)?;
        return Ok(ZooChain::Finite {
            name: spec.to_string(),
            chain,
            nu,
        });
    }
    Err(Error::InvalidChain(format!(
        "unknown chain {spec:?}; expected one of {NAMES:?} or a JSON file"
    )))
}
