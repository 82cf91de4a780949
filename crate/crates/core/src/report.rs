//! CSV and JSON rendering of budgets, table rows and simulation records.
//!
//! CSV numbers use scientific notation with 6 significant digits; JSON keeps
//! full `f64` precision so records round-trip exactly.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundBreakdown;
use crate::planner::tables::TableRow;
use crate::planner::Budget;

/// `x` in scientific notation with 6 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn opt_sci(x: Option<f64>) -> String {
    x.map(sci).unwrap_or_default()
}

/// A record type with a fixed CSV layout.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Header line plus one line per record, `\n`-terminated.
pub fn to_csv<T: CsvRecord>(rows: &[T]) -> String {
    let mut out = T::header().join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.fields().join(","));
        out.push('\n');
    }
    out
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

/// One Monte Carlo run: an `e_1` estimate and, optionally, the bound it is
/// checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub check: String,
    pub n: usize,
    pub n0: usize,
    pub replications: usize,
    pub e1_hat: f64,
    pub uncertainty: f64,
    pub bound_total: Option<f64>,
    pub seed: u64,
    pub pass: Option<bool>,
}

impl CsvRecord for RunRecord {
    fn header() -> &'static [&'static str] {
        &[
            "check",
            "n",
            "n0",
            "R",
            "e1_hat",
            "uncertainty",
            "bound_total",
            "seed",
            "pass",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.check.clone(),
            self.n.to_string(),
            self.n0.to_string(),
            self.replications.to_string(),
            sci(self.e1_hat),
            sci(self.uncertainty),
            opt_sci(self.bound_total),
            self.seed.to_string(),
            self.pass.map(|p| p.to_string()).unwrap_or_default(),
        ]
    }
}

impl CsvRecord for Budget {
    fn header() -> &'static [&'static str] {
        &["delta", "n0", "n", "total", "epsilon"]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            opt_sci(self.delta),
            sci(self.n0),
            sci(self.n),
            sci(self.total),
            sci(self.epsilon),
        ]
    }
}

/// A bound evaluation with its inputs echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRecord {
    pub regime: String,
    pub n: f64,
    pub n0: Option<f64>,
    pub p: f64,
    pub norm_p: f64,
    pub gap: f64,
    pub alpha: Option<f64>,
    pub big_m: Option<f64>,
    pub dratio: f64,
    pub delta: Option<f64>,
    pub bound: BoundBreakdown,
}

impl CsvRecord for BoundRecord {
    fn header() -> &'static [&'static str] {
        &[
            "regime",
            "n",
            "n0",
            "p",
            "norm_p",
            "gap",
            "alpha",
            "big_m",
            "dratio",
            "delta",
            "leading",
            "higher_order",
            "total",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.regime.clone(),
            sci(self.n),
            opt_sci(self.n0),
            sci(self.p),
            sci(self.norm_p),
            sci(self.gap),
            opt_sci(self.alpha),
            opt_sci(self.big_m),
            sci(self.dratio),
            opt_sci(self.delta),
            sci(self.bound.leading),
            sci(self.bound.higher_order),
            sci(self.bound.total),
        ]
    }
}

/// Table rows flattened to one line per row. `max_rel_dev` ignores flagged
/// cells, which are listed in `flagged` as `column:published`.
impl CsvRecord for TableRow {
    fn header() -> &'static [&'static str] {
        &[
            "table",
            "p",
            "epsilon",
            "delta_star",
            "n_delta_star",
            "delta_hat",
            "n_delta_hat",
            "max_rel_dev",
            "pass",
            "flagged",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let max_dev = self
            .checks
            .iter()
            .filter(|c| !c.flagged)
            .map(|c| c.rel_dev)
            .fold(0.0, f64::max);
        let flagged: Vec<String> = self
            .checks
            .iter()
            .filter(|c| c.flagged)
            .map(|c| format!("{}:{}", c.column, sci(c.published)))
            .collect();
        vec![
            self.table.to_string(),
            sci(self.p),
            sci(self.epsilon),
            sci(self.delta_star),
            sci(self.n_star),
            sci(self.delta_hat),
            sci(self.n_hat),
            sci(max_dev),
            self.passes().to_string(),
            flagged.join(";"),
        ]
    }
}
