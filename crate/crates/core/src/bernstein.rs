//! Uniform integrability and moment convergence for unbounded functionals.
//!
//! Integrals against `μ_n` are empirical means over the replications of an
//! ensemble. The truncation `V_N = clamp(V, -N, N)` splits the moment gap
//! `κ = |∫V dμ_n - ∫V dμ|` into a truncation error on each side plus the
//! gap of the bounded functional.

use serde::{Deserialize, Serialize};

use crate::coupling::Ensemble;
use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::stats;

/// A sup-norm-continuous functional `V` on grid paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionalConfig", into = "FunctionalConfig")]
pub enum Functional {
    /// `||x||_∞^p`.
    SupNormPower(f64),
    /// `max_t x(t)`.
    MaxValue,
    /// `x(t)` by linear interpolation.
    EvalAt(f64),
    /// `Σ w_i V_i(x)`.
    Custom(Vec<(f64, Functional)>),
    /// `clamp(V(x), -cap, cap)`.
    Clamped(Box<Functional>, f64),
}

/// JSON form, e.g. `{"kind": "sup_norm_power", "p": 2}` or
/// `{"kind": "custom", "terms": [{"weight": 1, "functional": {"kind": "max_value"}}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalConfig {
    SupNormPower { p: f64 },
    MaxValue {},
    EvalAt { t: f64 },
    Custom { terms: Vec<WeightedTerm> },
    Clamped { functional: Box<FunctionalConfig>, cap: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedTerm {
    pub weight: f64,
    pub functional: FunctionalConfig,
}

impl TryFrom<FunctionalConfig> for Functional {
    type Error = Error;

    fn try_from(c: FunctionalConfig) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match c {
            FunctionalConfig::SupNormPower { p } if p >= 1.0 && p.is_finite() => Ok(Functional::SupNormPower(p)),
            FunctionalConfig::SupNormPower { p } => bad(format!("sup_norm_power needs p >= 1, got {p}")),
            FunctionalConfig::MaxValue {} => Ok(Functional::MaxValue),
            FunctionalConfig::EvalAt { t } if (0.0..=1.0).contains(&t) => Ok(Functional::EvalAt(t)),
            FunctionalConfig::EvalAt { t } => bad(format!("eval_at needs t in [0, 1], got {t}")),
            FunctionalConfig::Custom { terms } => {
                if terms.is_empty() {
                    return bad("custom functional needs at least one term".into());
                }
                let terms = terms
                    .into_iter()
                    .map(|t| {
                        if !t.weight.is_finite() {
                            return Err(Error::InvalidParameter("term weights must be finite".into()));
                        }
                        Ok((t.weight, Functional::try_from(t.functional)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Functional::Custom(terms))
            }
            FunctionalConfig::Clamped { functional, cap } => {
                truncate_functional(&Functional::try_from(*functional)?, cap)
            }
        }
    }
}

impl From<Functional> for FunctionalConfig {
    fn from(f: Functional) -> Self {
        match f {
            Functional::SupNormPower(p) => FunctionalConfig::SupNormPower { p },
            Functional::MaxValue => FunctionalConfig::MaxValue {},
            Functional::EvalAt(t) => FunctionalConfig::EvalAt { t },
            Functional::Custom(terms) => FunctionalConfig::Custom {
                terms: terms.into_iter().map(|(weight, f)| WeightedTerm { weight, functional: f.into() }).collect(),
            },
            Functional::Clamped(f, cap) => FunctionalConfig::Clamped { functional: Box::new((*f).into()), cap },
        }
    }
}

impl Functional {
    pub fn eval(&self, x: &GridPath) -> f64 {
        match self {
            Functional::SupNormPower(p) => x.sup_norm().powf(*p),
            Functional::MaxValue => x.max_value(),
            Functional::EvalAt(t) => x.eval_at(*t),
            Functional::Custom(terms) => terms.iter().map(|(w, f)| w * f.eval(x)).sum(),
            Functional::Clamped(f, cap) => f.eval(x).clamp(-cap, *cap),
        }
    }

    /// `V(η_n^(r))` for every replication, `n` 1-based.
    pub fn values_at(&self, e: &Ensemble, n: usize) -> Vec<f64> {
        e.members_at(n).into_iter().map(|p| self.eval(p)).collect()
    }

    /// `V(η^(r))` for every replication.
    pub fn limit_values(&self, e: &Ensemble) -> Vec<f64> {
        e.limits().iter().map(|p| self.eval(p)).collect()
    }
}

/// The truncation `V_N = clamp(V, -N, N)`.
pub fn truncate_functional(v: &Functional, n_cap: f64) -> Result<Functional> {
    if n_cap.is_nan() || n_cap <= 0.0 {
        return Err(Error::InvalidParameter(format!("truncation cap must be positive, got {n_cap}")));
    }
    Ok(Functional::Clamped(Box::new(v.clone()), n_cap))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum UiVerdict {
    Decaying,
    NotDecaying,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UiCurve {
    pub caps: Vec<f64>,
    /// `sup_n mean_r |V| 1{|V| > N}` per cap.
    pub tail_mass: Vec<f64>,
    pub verdict: UiVerdict,
}

fn tail_mass(values: &[f64], cap: f64) -> f64 {
    let tail: Vec<f64> = values.iter().map(|v| v.abs()).filter(|a| *a > cap).collect();
    stats::ordered_sum(&tail) / values.len() as f64
}

/// Empirical `sup_n ∫_{|V| > N} |V| dμ_n` for each cap `N`.
pub fn uniform_integrability_curve(e: &Ensemble, v: &Functional, caps: &[f64]) -> Result<UiCurve> {
    if caps.is_empty() {
        return Err(Error::Empty("uniform_integrability_curve needs caps"));
    }
    if caps.iter().any(|c| !(c.is_finite() && *c > 0.0)) || caps.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("caps must be positive and strictly increasing".into()));
    }
    let per_n: Vec<Vec<f64>> = (1..=e.n_seq()).map(|n| v.values_at(e, n)).collect();
    let tail: Vec<f64> = caps.iter().map(|&cap| stats::max_of(per_n.iter().map(|vals| tail_mass(vals, cap)))).collect();
    let verdict = match tail.iter().find(|t| **t > 0.0) {
        None => UiVerdict::Decaying,
        Some(&first) if tail[tail.len() - 1] <= 0.1 * first => UiVerdict::Decaying,
        _ => UiVerdict::NotDecaying,
    };
    Ok(UiCurve { caps: caps.to_vec(), tail_mass: tail, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MomentVerdict {
    Convergent,
    NotConvergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// `I_n = mean_r V(η_n^(r))`, `n = 1..=N`.
    pub means: Vec<f64>,
    pub limit_mean: f64,
    pub external_reference: bool,
    pub final_gap: f64,
    /// `3 σ_N / √R`.
    pub mc_band: f64,
    pub abs_tol: f64,
    pub verdict: MomentVerdict,
}

pub const DEFAULT_ABS_TOL: f64 = 1e-9;

/// Compares `I_N` against `∫ V dμ`, taken from the limits or from `reference`.
pub fn moment_convergence_check(e: &Ensemble, v: &Functional, reference: Option<f64>, abs_tol: f64) -> MomentReport {
    let per_n: Vec<Vec<f64>> = (1..=e.n_seq()).map(|n| v.values_at(e, n)).collect();
    let means: Vec<f64> = per_n.iter().map(|vals| stats::mean(vals)).collect();
    let limit_mean = reference.unwrap_or_else(|| stats::mean(&v.limit_values(e)));
    let last = &per_n[per_n.len() - 1];
    let mc_band = 3.0 * stats::sample_std(last) / (e.reps() as f64).sqrt();
    let final_gap = (means[means.len() - 1] - limit_mean).abs();
    let verdict =
        if final_gap <= abs_tol.max(mc_band) { MomentVerdict::Convergent } else { MomentVerdict::NotConvergent };
    MomentReport { means, limit_mean, external_reference: reference.is_some(), final_gap, mc_band, abs_tol, verdict }
}

/// Empirical terms of `κ <= κ₁ + κ₂ + κ₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaDecomposition {
    pub kappa: f64,
    /// `|I_n(V) - I_n(V_N)|`
    pub kappa1: f64,
    /// `|I_n(V_N) - I(V_N)|`
    pub kappa2: f64,
    /// `|I(V) - I(V_N)|`
    pub kappa3: f64,
}

pub fn kappa_decomposition(e: &Ensemble, v: &Functional, n: usize, n_cap: f64) -> Result<KappaDecomposition> {
    if n == 0 || n > e.n_seq() {
        return Err(Error::InvalidParameter(format!("index n = {n} outside 1..={}", e.n_seq())));
    }
    let vn = truncate_functional(v, n_cap)?;
    let i_n = stats::mean(&v.values_at(e, n));
    let i_n_trunc = stats::mean(&vn.values_at(e, n));
    let i_lim = stats::mean(&v.limit_values(e));
    let i_lim_trunc = stats::mean(&vn.limit_values(e));
    Ok(KappaDecomposition {
        kappa: (i_n - i_lim).abs(),
        kappa1: (i_n - i_n_trunc).abs(),
        kappa2: (i_n_trunc - i_lim_trunc).abs(),
        kappa3: (i_lim - i_lim_trunc).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{generate_ensemble, Generator, GeneratorKind};

    #[test]
    fn truncation_examples() {
        let v = Functional::MaxValue;
        let low = GridPath::new(vec![0.0, 0.5, 0.2]).unwrap();
        let high = GridPath::new(vec![0.0, 7.0, 0.2]).unwrap();
        let v1 = truncate_functional(&v, 1.0).unwrap();
        assert_eq!(v1.eval(&low), 0.5);
        assert_eq!(v1.eval(&high), 1.0);
        let neg = GridPath::new(vec![-9.0, -8.0]).unwrap();
        assert_eq!(v1.eval(&neg), -1.0);
        assert!(truncate_functional(&v, 0.0).is_err());
    }

    #[test]
    fn constant_ensemble_ui_curve() {
        let lim = GridPath::new(vec![0.0, 5.0, 1.0]).unwrap();
        let e = Ensemble::new(vec![lim.clone(), lim.clone()], vec![vec![lim.clone(); 3], vec![lim; 3]], "c").unwrap();
        let c = uniform_integrability_curve(&e, &Functional::MaxValue, &[1.0, 10.0]).unwrap();
        assert_eq!(c.tail_mass, vec![5.0, 0.0]);
        assert_eq!(c.verdict, UiVerdict::Decaying);
        assert!(uniform_integrability_curve(&e, &Functional::MaxValue, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn bounded_functional_has_zero_tail() {
        let e = generate_ensemble(&Generator::new(GeneratorKind::SmoothDecay), 16, 4, 5, 2).unwrap();
        let v = truncate_functional(&Functional::SupNormPower(2.0), 1.0).unwrap();
        let c = uniform_integrability_curve(&e, &v, &[2.0, 4.0]).unwrap();
        assert!(c.tail_mass.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn constant_ensemble_moments() {
        let e = generate_ensemble(&Generator::new(GeneratorKind::Constant), 16, 4, 5, 2).unwrap();
        let r = moment_convergence_check(&e, &Functional::MaxValue, None, DEFAULT_ABS_TOL);
        assert!(r.means.iter().all(|&m| m == r.limit_mean));
        assert_eq!(r.verdict, MomentVerdict::Convergent);
        let k = kappa_decomposition(&e, &Functional::MaxValue, 2, 0.3).unwrap();
        assert_eq!(k.kappa, 0.0);
        assert_eq!(k.kappa2, 0.0);
        assert_eq!(k.kappa1, k.kappa3);
    }

    #[test]
    fn eval_at_moment_is_linear() {
        let m = 8;
        let lim = GridPath::from_fn(m, |t| t * t).unwrap();
        let w = GridPath::from_fn(m, |t| 1.0 + t).unwrap();
        let members: Vec<GridPath> = (1..=4).map(|n| lim.add_scaled(1.0 / n as f64, &w).unwrap()).collect();
        let e = Ensemble::new(vec![lim], vec![members], "lin").unwrap();
        let r = moment_convergence_check(&e, &Functional::EvalAt(0.5), None, DEFAULT_ABS_TOL);
        for (i, mean) in r.means.iter().enumerate() {
            let expect = 1.5 / (i + 1) as f64;
            assert!((mean - r.limit_mean - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn kappa_inactive_truncation() {
        let e = generate_ensemble(&Generator::new(GeneratorKind::SmoothDecay), 16, 4, 5, 3).unwrap();
        let v = truncate_functional(&Functional::EvalAt(0.3), 0.5).unwrap();
        let k = kappa_decomposition(&e, &v, 4, 1.0).unwrap();
        assert_eq!(k.kappa1, 0.0);
        assert_eq!(k.kappa3, 0.0);
        assert_eq!(k.kappa, k.kappa2);
        assert!(kappa_decomposition(&e, &v, 5, 1.0).is_err());
    }

    #[test]
    fn functional_json() {
        let f: Functional = serde_json::from_str(r#"{"kind":"sup_norm_power","p":2}"#).unwrap();
        assert_eq!(f, Functional::SupNormPower(2.0));
        let f: Functional = serde_json::from_str(r#"{"kind":"eval_at","t":0.5}"#).unwrap();
        assert_eq!(f, Functional::EvalAt(0.5));
        let f: Functional = serde_json::from_str(
            r#"{"kind":"custom","terms":[{"weight":2,"functional":{"kind":"max_value"}},{"weight":-1,"functional":{"kind":"eval_at","t":0}}]}"#,
        )
        .unwrap();
        let x = GridPath::new(vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(f.eval(&x), 5.0);
        assert!(serde_json::from_str::<Functional>(r#"{"kind":"eval_at","t":2}"#).is_err());
        assert!(serde_json::from_str::<Functional>(r#"{"kind":"max_value","p":1}"#).is_err());
        assert!(serde_json::from_str::<Functional>(r#"{"kind":"nope"}"#).is_err());
        let c = truncate_functional(&Functional::MaxValue, 2.0).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"kind":"clamped","functional":{"kind":"max_value"},"cap":2.0}"#);
        assert_eq!(serde_json::from_str::<Functional>(&s).unwrap(), c);
    }
}
