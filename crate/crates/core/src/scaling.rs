//! Deterministic scaling functions `g(δ)` that factor a random modulus
//! envelope as `h(ω, δ) <= θ(ω) g(δ)`.
//!
//! The table is fitted empirically: per lag, the `q`-quantile of the
//! replications' envelopes, monotonized and normalized so that `g(1) = 1`.
//! Each replication's `θ` then absorbs whatever the quantile cut off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modulus::ModulusProfile;
use crate::stats;

pub const DEFAULT_QUANTILE: f64 = 0.95;

/// Tabulated nondecreasing `g` on grid lags with `g[0] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct ScalingTable {
    g: Vec<f64>,
    normalized: bool,
    degenerate: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    m: usize,
    g: Vec<f64>,
    normalized: bool,
    degenerate: bool,
}

impl TryFrom<RawTable> for ScalingTable {
    type Error = Error;

    fn try_from(raw: RawTable) -> Result<Self> {
        if raw.g.len() != raw.m + 1 {
            return Err(Error::InvalidParameter(format!(
                "scaling table needs m + 1 = {} entries, got {}",
                raw.m + 1,
                raw.g.len()
            )));
        }
        let t = ScalingTable::from_values(raw.g)?;
        if raw.normalized && !t.normalized {
            return Err(Error::InvalidParameter("table flagged normalized but g[m] != 1".into()));
        }
        if raw.degenerate != t.degenerate {
            return Err(Error::InvalidParameter("degenerate flag disagrees with values".into()));
        }
        Ok(ScalingTable { normalized: raw.normalized, ..t })
    }
}

impl From<ScalingTable> for RawTable {
    fn from(t: ScalingTable) -> Self {
        RawTable { m: t.m(), g: t.g, normalized: t.normalized, degenerate: t.degenerate }
    }
}

impl ScalingTable {
    /// Validates raw values. The normalized flag is set when `g[m] == 1`,
    /// the degenerate flag when every entry is zero.
    pub fn from_values(g: Vec<f64>) -> Result<Self> {
        if g.len() < 2 {
            return Err(Error::InvalidParameter("scaling table needs at least 2 entries".into()));
        }
        if g[0] != 0.0 {
            return Err(Error::InvalidParameter("g[0] must be 0".into()));
        }
        if g.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("g must be finite and nonnegative".into()));
        }
        if g.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("g must be nondecreasing".into()));
        }
        let normalized = g[g.len() - 1] == 1.0;
        let degenerate = g.iter().all(|&v| v == 0.0);
        Ok(ScalingTable { g, normalized, degenerate })
    }

    /// `g(δ) = δ` on the grid; handy as a reference table.
    pub fn linear(m: usize) -> Self {
        let mut g: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
        g[m] = 1.0;
        ScalingTable::from_values(g).expect("linear table is valid")
    }

    pub fn m(&self) -> usize {
        self.g.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.g
    }

    pub fn at(&self, k: usize) -> f64 {
        self.g[k]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// Fits `g` from per-replication envelopes at quantile `q ∈ (0, 1]`.
pub fn fit_scaling(envelopes: &[ModulusProfile], q: f64) -> Result<ScalingTable> {
    let first = envelopes.first().ok_or(Error::Empty("fit_scaling needs at least one envelope"))?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("quantile must be in (0, 1], got {q}")));
    }
    let m = first.m();
    if let Some(bad) = envelopes.iter().find(|e| e.m() != m) {
        return Err(Error::ResolutionMismatch { left: m, right: bad.m() });
    }
    let mut g = vec![0.0; m + 1];
    let mut column = Vec::with_capacity(envelopes.len());
    for (k, slot) in g.iter_mut().enumerate().skip(1) {
        column.clear();
        column.extend(envelopes.iter().map(|e| e.at(k)));
        *slot = stats::quantile(&column, q);
    }
    for k in 1..=m {
        g[k] = g[k].max(g[k - 1]);
    }
    let top = g[m];
    if top == 0.0 {
        return Ok(ScalingTable { g, normalized: false, degenerate: true });
    }
    for v in g.iter_mut() {
        *v /= top;
    }
    g[m] = 1.0;
    // Division by the top entry keeps monotonicity; the guard covers ties
    // that round across each other.
    for k in 1..=m {
        g[k] = g[k].max(g[k - 1]);
    }
    Ok(ScalingTable { g, normalized: true, degenerate: false })
}

/// Smallest `θ` with `envelope[k] <= θ g[k]` at every lag (`0/0 = 0`).
pub fn domination_coefficient(envelope: &ModulusProfile, g: &ScalingTable) -> Result<f64> {
    if envelope.m() != g.m() {
        return Err(Error::ResolutionMismatch { left: envelope.m(), right: g.m() });
    }
    let pairs: Vec<(f64, f64)> = (1..=g.m()).map(|k| (envelope.at(k), g.at(k))).collect();
    stats::dominating_ratio(&pairs).ok_or_else(|| {
        let lag = (1..=g.m()).find(|&k| envelope.at(k) > 0.0 && g.at(k) == 0.0).unwrap_or(0);
        Error::NotDominated { lag, value: envelope.at(lag) }
    })
}

/// Entrywise `√g`.
pub fn sqrt_scale(g: &ScalingTable) -> ScalingTable {
    ScalingTable { g: g.g.iter().map(|v| v.sqrt()).collect(), normalized: g.normalized, degenerate: g.degenerate }
}

/// Entrywise `max(g1, g2)`.
pub fn merge_max(g1: &ScalingTable, g2: &ScalingTable) -> Result<ScalingTable> {
    if g1.m() != g2.m() {
        return Err(Error::ResolutionMismatch { left: g1.m(), right: g2.m() });
    }
    ScalingTable::from_values(g1.g.iter().zip(&g2.g).map(|(a, b)| a.max(*b)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridPath;
    use crate::modulus::modulus_profile;

    fn table(v: &[f64]) -> ScalingTable {
        ScalingTable::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_envelopes_give_degenerate_table() {
        let t = fit_scaling(&[ModulusProfile::zeros(4), ModulusProfile::zeros(4)], 0.9).unwrap();
        assert!(t.is_degenerate());
        assert!(!t.is_normalized());
        assert!(t.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_linear_envelope() {
        let env = modulus_profile(&GridPath::from_fn(4, |t| t).unwrap());
        let t = fit_scaling(&[env], 1.0).unwrap();
        assert_eq!(t.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(t.is_normalized());
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_scaling(&[], 0.5).is_err());
        assert!(fit_scaling(&[ModulusProfile::zeros(3)], 0.0).is_err());
        assert!(fit_scaling(&[ModulusProfile::zeros(3)], 1.5).is_err());
        assert!(fit_scaling(&[ModulusProfile::zeros(3), ModulusProfile::zeros(4)], 0.5).is_err());
    }

    #[test]
    fn domination_examples() {
        let g = table(&[0.0, 0.25, 0.5, 1.0]);
        let same = ModulusProfile::from_values(g.values().to_vec()).unwrap();
        assert_eq!(domination_coefficient(&same, &g).unwrap(), 1.0);
        assert_eq!(domination_coefficient(&ModulusProfile::zeros(3), &g).unwrap(), 0.0);
        let twice = ModulusProfile::from_values(g.values().iter().map(|v| 2.0 * v).collect()).unwrap();
        assert_eq!(domination_coefficient(&twice, &g).unwrap(), 2.0);
    }

    #[test]
    fn domination_failure() {
        let g = table(&[0.0, 0.0, 1.0]);
        let env = ModulusProfile::from_values(vec![0.0, 0.1, 0.2]).unwrap();
        assert_eq!(domination_coefficient(&env, &g), Err(Error::NotDominated { lag: 1, value: 0.1 }));
        let zero_g = table(&[0.0, 0.0, 0.0]);
        assert_eq!(domination_coefficient(&ModulusProfile::zeros(2), &zero_g).unwrap(), 0.0);
    }

    #[test]
    fn sqrt_and_merge() {
        assert_eq!(sqrt_scale(&table(&[0.0, 0.25, 1.0])).values(), &[0.0, 0.5, 1.0]);
        let z = table(&[0.0, 0.0, 0.0]);
        assert_eq!(sqrt_scale(&z), z);
        let g = table(&[0.0, 0.3, 1.0]);
        assert_eq!(merge_max(&g, &g).unwrap(), g);
        assert_eq!(merge_max(&g, &z).unwrap(), g);
        assert!(merge_max(&g, &ScalingTable::linear(3)).is_err());
    }

    #[test]
    fn json_roundtrip_and_validation() {
        let g = table(&[0.0, 0.5, 1.0]);
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"m":2,"g":[0.0,0.5,1.0],"normalized":true,"degenerate":false}"#);
        assert_eq!(serde_json::from_str::<ScalingTable>(&s).unwrap(), g);
        assert!(serde_json::from_str::<ScalingTable>(
            r#"{"m":2,"g":[0.0,0.5,0.4],"normalized":false,"degenerate":false}"#
        )
        .is_err());
    }
}
