//! Named constants feeding the recursions, each with where its value came
//! from.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trees::descendant_counts;
use crate::error::{Error, Result};
use crate::greens::boxsolve::asymptotic_constant;
use crate::greens::GreenTable;
use crate::lattice::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Closed form taken from the argument itself.
    PaperSymbolic,
    /// Computed or fitted here; a working value, not a proof.
    NumericDefault,
    UserSupplied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub value: f64,
    pub provenance: Provenance,
    pub note: String,
}

/// `3 / (1 - e^{-1})`.
pub fn b_constant() -> f64 {
    3.0 / (1.0 - (-1.0f64).exp())
}

/// Names every recursion reads.
pub const REQUIRED: [&str; 5] = ["B", "c0", "c1", "c2", "g0"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantsLedger {
    pub entries: BTreeMap<String, Constant>,
}

impl ConstantsLedger {
    pub fn get(&self, name: &str) -> Result<f64> {
        self.entries
            .get(name)
            .map(|c| c.value)
            .ok_or_else(|| Error::Config(format!("constant `{name}` has no ledger entry")))
    }

    pub fn entry(&self, name: &str) -> Option<&Constant> {
        self.entries.get(name)
    }

    pub fn set(&mut self, name: &str, value: f64, provenance: Provenance, note: impl Into<String>) {
        self.entries.insert(name.to_string(), Constant { value, provenance, note: note.into() });
    }

    /// Checks that every required constant is present and that `B` has its
    /// exact value.
    pub fn validate(&self) -> Result<()> {
        for name in REQUIRED {
            let v = self.get(name)?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!("constant `{name}` = {v} must be finite and non-negative")));
            }
        }
        if self.get("B")? != b_constant() {
            return Err(Error::Config("B is fixed to 3/(1 - 1/e) and cannot be overridden".into()));
        }
        if self.get("c0")? < 1.0 {
            return Err(Error::Config("c0 must be at least 1".into()));
        }
        if self.get("g0")? <= 0.0 {
            return Err(Error::Config("g0 must be positive".into()));
        }
        Ok(())
    }

    /// `c0 = c1 = c2 = 1` with exact `B` and the quadrature value of `g(0)`.
    pub fn unit(d: usize) -> Result<Self> {
        let mut l = ConstantsLedger::default();
        l.set("B", b_constant(), Provenance::PaperSymbolic, "3/(1 - e^-1)");
        l.set("g0", green_at_origin(d)?, Provenance::NumericDefault, "g(0) by Bessel quadrature");
        for c in ["c0", "c1", "c2"] {
            l.set(c, 1.0, Provenance::UserSupplied, "unit ledger");
        }
        Ok(l)
    }

    /// Working values for dimension `d` and scales `L0`, `l0`.
    ///
    /// * `c0`: the smallest value with `|H1||H2| ≤ c0 l0^{2(d-1)}` at every
    ///   level, from exact descendant counts.
    /// * `c2 = 1 + 1/(2 log (3L0)^d)`, from `E[max_K φ] ≤ A + g(0)/A` with
    ///   `A = (2 g(0) log|K|)^{1/2}`.
    /// * `c1 = (2g(0))^{1/2} c_cap c_green 3^{d-2} c_sep^{2-d}` where
    ///   `cap(box of side s) ≤ c_cap s^{d-2}`, `g(x) ≤ c_green |x|^{2-d}` and
    ///   points of the two subtrees are `c_sep L_{n+1}` apart.
    pub fn defaults(d: usize, big_l0: u64, l0: u64) -> Result<Self> {
        if d < 3 || big_l0 == 0 || l0 < 3 {
            return Err(Error::InvalidArgument(format!("need d ≥ 3, L0 ≥ 1, l0 ≥ 3 (got {d}, {big_l0}, {l0})")));
        }
        let table = GreenTable::new(d, 1e-11)?;
        let g0 = table.get(&Point::origin(d))?;
        let mut l = ConstantsLedger::default();
        l.set("B", b_constant(), Provenance::PaperSymbolic, "3/(1 - e^-1)");
        l.set("g0", g0, Provenance::NumericDefault, "g(0) by Bessel quadrature");

        let log_scale = 2.0 * (d as f64 - 1.0) * (l0 as f64).ln();
        let mut log_h = f64::NEG_INFINITY;
        for level in 1..=4 {
            let c = descendant_counts(d, big_l0, l0, level)?;
            log_h = log_h.max(super::ln_big(&c.h1) + super::ln_big(&c.h2));
        }
        let c0 = (log_h - log_scale).exp().max(1.0);
        l.set("c0", c0, Provenance::NumericDefault, "max over levels 1..4 of |H1||H2| / l0^(2(d-1)), at least 1");

        let c2 = 1.0 + 1.0 / (2.0 * d as f64 * (3.0 * big_l0 as f64).ln());
        l.set("c2", c2, Provenance::PaperSymbolic, "1 + 1/(2 log (3L0)^d) from the elementary max bound");

        let c_cap = capacity_constant(&table)?;
        l.set("c_cap", c_cap, Provenance::NumericDefault, "max over small cubes of |K| / min_y Σ_x g(x - y), per s^(d-2)");
        let c_green = green_decay_constant(&table)?;
        l.set("c_green", c_green, Provenance::NumericDefault, "max of g(x)|x|^(d-2) near the origin and the continuum constant");
        let c_sep = 0.5 - 3.0 / l0 as f64 - 0.5 / (l0 * big_l0) as f64;
        l.set("c_sep", c_sep, Provenance::PaperSymbolic, "1/2 - 3/l0 - 1/(2 l0 L0), l-infinity separation of the two subtrees");
        let df = d as f64;
        let c1 = (2.0 * g0).sqrt() * c_cap * c_green * 3f64.powf(df - 2.0) * c_sep.powf(2.0 - df);
        l.set("c1", c1, Provenance::NumericDefault, "(2 g0)^(1/2) c_cap c_green 3^(d-2) c_sep^(2-d)");
        Ok(l)
    }

    /// Overrides from a JSON object `{"name": value, ...}`; overridden entries
    /// become user-supplied.
    pub fn merge_json(&mut self, text: &str) -> Result<()> {
        let map: BTreeMap<String, f64> = serde_json::from_str(text)?;
        for (k, v) in map {
            self.set(&k, v, Provenance::UserSupplied, "ledger file");
        }
        self.validate()
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        self.merge_json(&text)
    }
}

fn green_at_origin(d: usize) -> Result<f64> {
    GreenTable::new(d, 1e-11)?.get(&Point::origin(d))
}

/// Non-decreasing sequences of length `d` over `0..s`, with the number of
/// distinct permutations of each.
fn sorted_tuples(d: usize, s: i64) -> Vec<(Vec<i64>, f64)> {
    fn rec(d: usize, s: i64, start: i64, cur: &mut Vec<i64>, out: &mut Vec<(Vec<i64>, f64)>) {
        if cur.len() == d {
            let mut w = (1..=d).map(|k| k as f64).product::<f64>();
            let mut run = 1;
            for i in 1..=d {
                if i < d && cur[i] == cur[i - 1] {
                    run += 1;
                } else {
                    w /= (1..=run).map(|k| k as f64).product::<f64>();
                    run = 1;
                }
            }
            out.push((cur.clone(), w));
            return;
        }
        for v in start..s {
            cur.push(v);
            rec(d, s, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, s, 0, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
}

const TUPLE_CAP: f64 = 3000.0;

/// `cap(K) ≤ |K| / min_y Σ_{x∈K} g(x - y)`, evaluated at a corner `y` of
/// the cube `[0, s)^d` and divided by `s^{d-2}`.
fn capacity_constant(table: &GreenTable) -> Result<f64> {
    let d = table.dim();
    let mut best: f64 = 0.0;
    for s in 1..=8i64 {
        if binomial(s as usize + d - 1, d) > TUPLE_CAP {
            break;
        }
        let mut sum = 0.0;
        for (t, w) in sorted_tuples(d, s) {
            sum += w * table.get(&Point::new(t))?;
        }
        let size = (s as f64).powi(d as i32);
        best = best.max(size / sum / (s as f64).powf(d as f64 - 2.0));
    }
    Ok(best)
}

fn green_decay_constant(table: &GreenTable) -> Result<f64> {
    let d = table.dim();
    let mut best = asymptotic_constant(d);
    for s in 2..=4i64 {
        if binomial(s as usize + d - 1, d) > TUPLE_CAP {
            break;
        }
        for (t, _) in sorted_tuples(d, s) {
            let r2: i64 = t.iter().map(|v| v * v).sum();
            if r2 == 0 {
                continue;
            }
            let g = table.get(&Point::new(t))?;
            best = best.max(g * (r2 as f64).powf((d as f64 - 2.0) / 2.0));
        }
    }
    Ok(best)
}
