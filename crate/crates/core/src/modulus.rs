//! Modulus of continuity `Δ(f, δ)` on grid lags `δ = k/m`, and pointwise
//! envelopes over families of profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridPath;

/// `Δ(f, k/m)` for every lag `k = 0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProfile", into = "RawProfile")]
pub struct ModulusProfile {
    delta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    m: usize,
    delta: Vec<f64>,
}

impl TryFrom<RawProfile> for ModulusProfile {
    type Error = Error;

    fn try_from(raw: RawProfile) -> Result<Self> {
        if raw.m == 0 || raw.delta.len() != raw.m + 1 {
            return Err(Error::InvalidParameter(format!(
                "profile needs m + 1 = {} entries, got {}",
                raw.m + 1,
                raw.delta.len()
            )));
        }
        ModulusProfile::from_values(raw.delta)
    }
}

impl From<ModulusProfile> for RawProfile {
    fn from(p: ModulusProfile) -> Self {
        RawProfile { m: p.m(), delta: p.delta }
    }
}

impl ModulusProfile {
    /// Validates a tabulated profile: starts at 0, nondecreasing, finite.
    pub fn from_values(delta: Vec<f64>) -> Result<Self> {
        if delta.len() < 2 {
            return Err(Error::InvalidParameter("profile needs at least 2 entries".into()));
        }
        if delta[0] != 0.0 {
            return Err(Error::InvalidParameter("profile entry 0 must be 0".into()));
        }
        if delta.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("profile entries must be finite and >= 0".into()));
        }
        if delta.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("profile must be nondecreasing".into()));
        }
        Ok(ModulusProfile { delta })
    }

    pub fn zeros(m: usize) -> Self {
        ModulusProfile { delta: vec![0.0; m + 1] }
    }

    pub fn m(&self) -> usize {
        self.delta.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.delta
    }

    pub fn at(&self, k: usize) -> f64 {
        self.delta[k]
    }

    pub fn is_zero(&self) -> bool {
        self.delta.iter().all(|&v| v == 0.0)
    }
}

/// Largest oscillation over node pairs exactly `k` apart.
fn lag_oscillation(v: &[f64], k: usize) -> f64 {
    v.iter().zip(&v[k..]).fold(0.0_f64, |acc, (a, b)| acc.max((b - a).abs()))
}

/// `Δ(f, k/m)`: the max of `|f_j - f_i|` over node pairs with `0 < j - i <= k`.
pub fn modulus_of_continuity(f: &GridPath, k: usize) -> Result<f64> {
    let m = f.m();
    if k > m {
        return Err(Error::LagOutOfRange { lag: k, m });
    }
    let v = f.values();
    Ok((1..=k).fold(0.0_f64, |acc, lag| acc.max(lag_oscillation(v, lag))))
}

/// Tabulates `Δ(f, k/m)` for all lags in one `O(m²)` sweep.
pub fn modulus_profile(f: &GridPath) -> ModulusProfile {
    let v = f.values();
    let m = f.m();
    let mut delta = Vec::with_capacity(m + 1);
    delta.push(0.0);
    let mut running = 0.0_f64;
    for k in 1..=m {
        running = running.max(lag_oscillation(v, k));
        delta.push(running);
    }
    ModulusProfile { delta }
}

/// Pointwise maximum of profiles: the smallest `h` dominating every input.
pub fn envelope<'a>(profiles: impl IntoIterator<Item = &'a ModulusProfile>) -> Result<ModulusProfile> {
    let mut iter = profiles.into_iter();
    let first = iter.next().ok_or(Error::Empty("envelope needs at least one profile"))?;
    let mut delta = first.delta.clone();
    for p in iter {
        if p.m() != first.m() {
            return Err(Error::ResolutionMismatch { left: first.m(), right: p.m() });
        }
        for (d, &x) in delta.iter_mut().zip(&p.delta) {
            *d = d.max(x);
        }
    }
    Ok(ModulusProfile { delta })
}
