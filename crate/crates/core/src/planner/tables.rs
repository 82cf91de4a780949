use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{budget_for_delta, delta_hat, delta_star, PlanRequest};
use crate::bounds::FunctionClass;
use crate::error::Result;

/// Common parameters of both published tables.
pub const TABLE_GAP: f64 = 0.01;
pub const TABLE_DRATIO: f64 = 1e30;
pub const TABLE_NORM: f64 = 1.0;

/// Relative tolerance for `delta*` and all `N` cells.
pub const REL_TOL: f64 = 0.02;
/// Significant figures that must agree for `delta_hat`.
pub const DELTA_HAT_SIG_FIGS: i32 = 3;

/// One published row: `(delta*, N(delta*), delta_hat, N(delta_hat))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PublishedRow {
    pub table: u8,
    pub p: f64,
    pub epsilon: f64,
    pub delta_star: f64,
    pub n_star: f64,
    pub delta_hat: f64,
    pub n_hat: f64,
}

pub const PUBLISHED: [PublishedRow; 6] = [
    PublishedRow {
        table: 1,
        p: 1.1,
        epsilon: 0.1,
        delta_star: 5.01e-11,
        n_star: 9.83e22,
        delta_hat: 8.64e-13,
        n_hat: 9.83e22,
    },
    PublishedRow {
        table: 1,
        p: 1.3,
        epsilon: 0.1,
        delta_star: 8.39e-5,
        n_star: 1.88e10,
        delta_hat: 3.06e-5,
        n_hat: 1.89e10,
    },
    PublishedRow {
        table: 1,
        p: 1.5,
        epsilon: 0.1,
        delta_star: 2.31e-3,
        n_star: 5.99e7,
        delta_hat: 1.08e-3,
        n_hat: 6.21e7,
    },
    PublishedRow {
        table: 2,
        p: 1.3,
        epsilon: 0.01,
        delta_star: 4.90e-7,
        n_star: 3.82e14,
        delta_hat: 1.73e-7,
        n_hat: 3.82e14,
    },
    PublishedRow {
        table: 2,
        p: 1.3,
        epsilon: 0.2,
        delta_star: 3.92e-4,
        n_star: 1.01e9,
        delta_hat: 1.48e-4,
        n_hat: 1.04e9,
    },
    PublishedRow {
        table: 2,
        p: 1.3,
        epsilon: 0.5,
        delta_star: 2.85e-3,
        n_star: 2.66e7,
        delta_hat: 1.21e-3,
        n_hat: 2.89e6,
    },
];

/// Comparison of one computed cell against its published value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCheck {
    pub column: String,
    pub computed: f64,
    pub published: f64,
    pub rel_dev: f64,
    pub pass: bool,
    /// Published value is internally inconsistent; reported, not scored.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: u8,
    pub p: f64,
    pub epsilon: f64,
    pub delta_star: f64,
    pub n_star: f64,
    pub delta_hat: f64,
    pub n_hat: f64,
    pub checks: Vec<CellCheck>,
}

impl TableRow {
    /// All scored (non-flagged) cells agree with the published values.
    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.flagged || c.pass)
    }
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let e = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(digits - 1 - e);
    (x * scale).round() / scale
}

fn rel_dev(computed: f64, published: f64) -> f64 {
    (computed - published).abs() / published.abs()
}

fn within(column: &str, computed: f64, published: f64) -> CellCheck {
    let dev = rel_dev(computed, published);
    CellCheck {
        column: column.to_string(),
        computed,
        published,
        rel_dev: dev,
        pass: dev <= REL_TOL,
        flagged: false,
    }
}

fn compute_row(row: &PublishedRow) -> Result<TableRow> {
    let f = FunctionClass::new(row.p, TABLE_NORM)?;
    let req = PlanRequest::theorem2(row.epsilon, TABLE_GAP, TABLE_DRATIO, f)?;
    let star = delta_star(&req)?;
    let hat = delta_hat(row.p, row.epsilon, TABLE_DRATIO)?;
    let at_hat = budget_for_delta(hat, &req)?;
    let star_delta = star.delta.expect("theorem2 budgets carry delta");

    let hat_rounded = round_sig(hat, DELTA_HAT_SIG_FIGS);
    let mut checks = vec![
        within("delta_star", star_delta, row.delta_star),
        within("n_star", star.total, row.n_star),
        CellCheck {
            column: "delta_hat".into(),
            computed: hat,
            published: row.delta_hat,
            rel_dev: rel_dev(hat, row.delta_hat),
            pass: rel_dev(hat_rounded, row.delta_hat) <= 1e-9,
            flagged: false,
        },
        within("n_hat", at_hat.total, row.n_hat),
    ];
    // delta* minimizes N, so a published N(delta_hat) clearly below N(delta*)
    // cannot be right.
    if row.n_hat < row.n_star * (1.0 - REL_TOL) {
        checks[3].flagged = true;
    }
    Ok(TableRow {
        table: row.table,
        p: row.p,
        epsilon: row.epsilon,
        delta_star: star_delta,
        n_star: star.total,
        delta_hat: hat,
        n_hat: at_hat.total,
        checks,
    })
}

/// Recomputes every row of the two published tables and compares each cell.
pub fn reproduce_tables() -> Result<Vec<TableRow>> {
    PUBLISHED.par_iter().map(compute_row).collect()
}
