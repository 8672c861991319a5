//! Young-Orlicz functions and empirical Luxemburg norms.
//!
//! Expectations are sample means, so `||X||_Φ = inf{c > 0 : mean Φ(|x_s|/c) <= 1}`.
//! The Δ₂ and "weaker than" checks are limit statements; the built-in
//! families are settled in closed form and tabulated functions are probed on
//! a geometric grid, with the ratio traces returned as witnesses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats;

/// A convex nondecreasing `Φ: [0, ∞) → [0, ∞)` with `Φ(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "YoungConfig", into = "YoungConfig")]
pub enum YoungFunction {
    /// `u^p`, `p >= 1`.
    Power(f64),
    /// `exp(u²/2) - 1`.
    ExpSquare,
    /// Piecewise-linear through `(0, 0)` and the knots, extended past the
    /// last knot with the last slope.
    Tabulated(Vec<(f64, f64)>),
}

/// JSON form: `{"family": "power"|"exp_square"|"tabulated", "p": .., "knots": [[u, phi], ..]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct YoungConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 2]>>,
}

impl TryFrom<YoungConfig> for YoungFunction {
    type Error = Error;

    fn try_from(c: YoungConfig) -> Result<Self> {
        match (c.family.as_str(), c.p, c.knots) {
            ("power", Some(p), None) => YoungFunction::power(p),
            ("exp_square", None, None) => Ok(YoungFunction::ExpSquare),
            ("tabulated", None, Some(k)) => YoungFunction::tabulated(k.into_iter().map(|[u, v]| (u, v)).collect()),
            (fam, _, _) => Err(Error::InvalidParameter(format!(
                "bad Young function config for family {fam:?}: power needs only p, tabulated only knots"
            ))),
        }
    }
}

impl From<YoungFunction> for YoungConfig {
    fn from(y: YoungFunction) -> Self {
        match y {
            YoungFunction::Power(p) => YoungConfig { family: "power".into(), p: Some(p), knots: None },
            YoungFunction::ExpSquare => YoungConfig { family: "exp_square".into(), p: None, knots: None },
            YoungFunction::Tabulated(k) => YoungConfig {
                family: "tabulated".into(),
                p: None,
                knots: Some(k.into_iter().map(|(u, v)| [u, v]).collect()),
            },
        }
    }
}

impl YoungFunction {
    pub fn power(p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("power exponent must be >= 1, got {p}")));
        }
        Ok(YoungFunction::Power(p))
    }

    /// Validates knots: `u` strictly increasing and positive, values
    /// nonnegative, slopes (starting from the origin) nondecreasing.
    pub fn tabulated(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::InvalidParameter("tabulated Young function needs knots".into()));
        }
        let mut prev = (0.0, 0.0);
        let mut prev_slope = 0.0;
        for &(u, v) in &knots {
            if !(u.is_finite() && v.is_finite()) || u <= prev.0 || v < prev.1 {
                return Err(Error::InvalidParameter(format!(
                    "knot ({u}, {v}) must be finite with u increasing and values nondecreasing"
                )));
            }
            let slope = (v - prev.1) / (u - prev.0);
            if slope < prev_slope {
                return Err(Error::InvalidParameter(format!("knot ({u}, {v}) breaks convexity")));
            }
            prev = (u, v);
            prev_slope = slope;
        }
        Ok(YoungFunction::Tabulated(knots))
    }

    pub fn eval(&self, u: f64) -> f64 {
        let u = u.abs();
        match self {
            YoungFunction::Power(p) => u.powf(*p),
            YoungFunction::ExpSquare => (0.5 * u * u).exp_m1(),
            YoungFunction::Tabulated(knots) => {
                let mut prev = (0.0, 0.0);
                for &(ku, kv) in knots {
                    if u <= ku {
                        return prev.1 + (kv - prev.1) * (u - prev.0) / (ku - prev.0);
                    }
                    prev = (ku, kv);
                }
                prev.1 + self.last_slope() * (u - prev.0)
            }
        }
    }

    /// `ln Φ(u)`, accurate where `Φ(u)` itself overflows.
    pub fn ln_eval(&self, u: f64) -> f64 {
        let u = u.abs();
        match self {
            YoungFunction::Power(p) => p * u.ln(),
            YoungFunction::ExpSquare => {
                let x = 0.5 * u * u;
                if x > 30.0 {
                    x + (-(-x).exp()).ln_1p()
                } else {
                    x.exp_m1().ln()
                }
            }
            YoungFunction::Tabulated(_) => self.eval(u).ln(),
        }
    }

    fn last_slope(&self) -> f64 {
        match self {
            YoungFunction::Tabulated(knots) => {
                let n = knots.len();
                let (u1, v1) = knots[n - 1];
                let (u0, v0) = if n >= 2 { knots[n - 2] } else { (0.0, 0.0) };
                (v1 - v0) / (u1 - u0)
            }
            _ => f64::NAN,
        }
    }

    /// Some `u` with `Φ(u) = y`, for `y > 0`; `None` if `Φ` never reaches it.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        match self {
            YoungFunction::Power(p) => Some(y.powf(1.0 / p)),
            YoungFunction::ExpSquare => Some((2.0 * y.ln_1p()).sqrt()),
            YoungFunction::Tabulated(knots) => {
                let mut prev = (0.0, 0.0);
                for &(ku, kv) in knots {
                    if y <= kv && kv > prev.1 {
                        return Some(prev.0 + (ku - prev.0) * (y - prev.1) / (kv - prev.1));
                    }
                    prev = (ku, kv);
                }
                let s = self.last_slope();
                (s > 0.0).then(|| prev.0 + (y - prev.1) / s)
            }
        }
    }

    fn is_degenerate(&self) -> bool {
        matches!(self, YoungFunction::Tabulated(k) if k.iter().all(|&(_, v)| v == 0.0))
    }
}

fn mean_phi(abs_sorted: &[f64], phi: &YoungFunction, c: f64) -> f64 {
    let total: f64 = abs_sorted.iter().map(|&x| phi.eval(x / c)).sum();
    total / abs_sorted.len() as f64
}

/// Empirical Luxemburg norm `inf{c > 0 : mean Φ(|x_s|/c) <= 1}`.
///
/// The bracket starts at `[max|x| / Φ⁻¹(n), max|x| / Φ⁻¹(1)]` and bisection
/// runs until the midpoint no longer separates the endpoints, which is well
/// inside `1e-10` of the initial bracket width. The feasible endpoint is
/// returned.
pub fn luxemburg_norm(samples: &[f64], phi: &YoungFunction) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("luxemburg_norm needs samples"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    let abs: Vec<f64> = stats::sorted(&samples.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let top = abs[abs.len() - 1];
    if top == 0.0 {
        return Ok(0.0);
    }
    if phi.is_degenerate() {
        return Err(Error::DegenerateYoung);
    }
    let feasible = |c: f64| mean_phi(&abs, phi, c) <= 1.0;
    let mut hi = top / phi.inverse(1.0).ok_or(Error::DegenerateYoung)?;
    let mut guard = 0;
    while !feasible(hi) {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::DegenerateYoung);
        }
    }
    let mut lo = phi.inverse(abs.len() as f64).map_or(hi * 0.5, |u| top / u).min(hi);
    while feasible(lo) && lo > 0.0 {
        lo *= 0.5;
    }
    if lo == 0.0 {
        return Ok(hi);
    }
    for _ in 0..2000 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// The factor `c` with `mean Φ(c |x_s|) = 1`, i.e. `1 / ||x||_Φ`.
pub fn normalize_sup_rv(values: &[f64], phi: &YoungFunction) -> Result<f64> {
    let norm = luxemburg_norm(values, phi)?;
    if norm == 0.0 {
        return Err(Error::InvalidParameter("cannot normalize an all-zero sample".into()));
    }
    Ok(1.0 / norm)
}

/// `10^(-2) .. 10^6`, eight probes per decade.
pub fn default_probe_grid() -> Vec<f64> {
    (0..=64).map(|i| 10f64.powf(-2.0 + i as f64 / 8.0)).collect()
}

pub const DEFAULT_V_SET: [f64; 4] = [0.5, 1.0, 2.0, 10.0];

fn check_probe_grid(probes: &[f64]) -> Result<()> {
    if probes.len() < 4
        || probes.iter().any(|u| !(u.is_finite() && *u > 0.0))
        || probes.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::InvalidParameter("probe grid must be positive and increasing".into()));
    }
    if probes[probes.len() - 1] / probes[0] < 1e6 {
        return Err(Error::InvalidParameter("probe grid must span at least 6 decades".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ProbeVerdict {
    Pass,
    Fail,
}

/// One probe: `u` and `log10` of the probed ratio (`None` when it is 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioProbe {
    pub u: f64,
    pub log10_ratio: Option<f64>,
}

fn probe(u: f64, ln_ratio: f64) -> RatioProbe {
    RatioProbe { u, log10_ratio: (ln_ratio > f64::NEG_INFINITY).then(|| ln_ratio / std::f64::consts::LN_10) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delta2Report {
    pub verdict: ProbeVerdict,
    /// Closed-form `sup Φ(2u)/Φ(u)` when known.
    pub ratio: Option<f64>,
    pub closed_form: bool,
    /// `Φ(2u)/Φ(u)` along the probe grid.
    pub witness: Vec<RatioProbe>,
}

/// Δ₂ condition `Φ(2u) <= C Φ(u)` for large `u`.
pub fn delta2_check(phi: &YoungFunction, probes: &[f64]) -> Result<Delta2Report> {
    check_probe_grid(probes)?;
    let witness: Vec<RatioProbe> = probes
        .iter()
        .filter(|&&u| phi.eval(u) > 0.0)
        .map(|&u| probe(u, phi.ln_eval(2.0 * u) - phi.ln_eval(u)))
        .collect();
    match phi {
        YoungFunction::Power(p) => {
            Ok(Delta2Report { verdict: ProbeVerdict::Pass, ratio: Some(2f64.powf(*p)), closed_form: true, witness })
        }
        YoungFunction::ExpSquare => {
            Ok(Delta2Report { verdict: ProbeVerdict::Fail, ratio: None, closed_form: true, witness })
        }
        YoungFunction::Tabulated(_) => {
            if witness.len() < 4 {
                return Ok(Delta2Report { verdict: ProbeVerdict::Fail, ratio: None, closed_form: false, witness });
            }
            let logs: Vec<f64> = witness.iter().map(|w| w.log10_ratio.unwrap_or(f64::NEG_INFINITY)).collect();
            let mid = logs[logs.len() / 2];
            let top = stats::max_of(logs[logs.len() - 3..].iter().copied());
            let pass = top <= mid + 2f64.log10();
            Ok(Delta2Report {
                verdict: if pass { ProbeVerdict::Pass } else { ProbeVerdict::Fail },
                ratio: pass.then(|| 10f64.powf(stats::max_of(logs.iter().copied()))),
                closed_form: false,
                witness,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakerTrace {
    pub v: f64,
    pub pass: bool,
    pub ratios: Vec<RatioProbe>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakerReport {
    pub verdict: ProbeVerdict,
    pub offending_v: Option<f64>,
    pub traces: Vec<WeakerTrace>,
}

/// `Ψ << Φ`: `Ψ(uv)/Φ(u) → 0` as `u → ∞` for every `v` in `v_set`.
///
/// Per `v`, the ratio must be nonincreasing over the last quarter of the
/// probes and end at most `0.01` times its value at the middle probe.
pub fn weaker_than(psi: &YoungFunction, phi: &YoungFunction, v_set: &[f64], probes: &[f64]) -> Result<WeakerReport> {
    check_probe_grid(probes)?;
    if v_set.is_empty() || v_set.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidParameter("v_set must be nonempty and positive".into()));
    }
    let traces: Vec<WeakerTrace> = v_set
        .iter()
        .map(|&v| {
            let logs: Vec<(f64, f64)> =
                probes.iter().map(|&u| (u, psi.ln_eval(u * v) - phi.ln_eval(u))).filter(|(_, l)| !l.is_nan()).collect();
            let pass = if logs.len() < 4 {
                false
            } else {
                let tail = &logs[logs.len() - logs.len() / 4 - 1..];
                let decreasing = tail.windows(2).all(|w| w[1].1 <= w[0].1);
                let mid = logs[logs.len() / 2].1;
                let last = logs[logs.len() - 1].1;
                decreasing && last <= mid + 0.01f64.ln()
            };
            WeakerTrace { v, pass, ratios: logs.iter().map(|&(u, l)| probe(u, l)).collect() }
        })
        .collect();
    let offending_v = traces.iter().find(|t| !t.pass).map(|t| t.v);
    Ok(WeakerReport {
        verdict: if offending_v.is_none() { ProbeVerdict::Pass } else { ProbeVerdict::Fail },
        offending_v,
        traces,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    pub exceedance: f64,
}

/// Luxemburg norm of the domination factors plus tail and stability data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaOrliczReport {
    pub phi: YoungFunction,
    pub sample_size: usize,
    pub luxemburg_norm: f64,
    /// Empirical `P(θ > t)` on a log grid between the smallest positive and
    /// the largest sample.
    pub tail: Vec<TailPoint>,
    pub half_sample_norm: Option<f64>,
    /// First-half norm over full-sample norm; near 1 suggests `θ ∈ L(Φ)`.
    pub stability_ratio: Option<f64>,
}

pub fn theta_orlicz_report(theta: &[f64], phi: &YoungFunction) -> Result<ThetaOrliczReport> {
    let norm = luxemburg_norm(theta, phi)?;
    let positive: Vec<f64> = theta.iter().map(|t| t.abs()).filter(|t| *t > 0.0).collect();
    let tail = if positive.is_empty() {
        Vec::new()
    } else {
        let lo = stats::sorted(&positive)[0];
        let hi = stats::max_of(positive.iter().copied());
        let points = if hi > lo { 16 } else { 1 };
        (0..points)
            .map(|i| {
                let t = if points == 1 { lo } else { lo * (hi / lo).powf(i as f64 / (points - 1) as f64) };
                let count = theta.iter().filter(|x| x.abs() > t).count();
                TailPoint { t, exceedance: count as f64 / theta.len() as f64 }
            })
            .collect()
    };
    let half = theta.len() / 2;
    let half_sample_norm = if half >= 1 { Some(luxemburg_norm(&theta[..half], phi)?) } else { None };
    let stability_ratio = match half_sample_norm {
        Some(h) if norm > 0.0 => Some(h / norm),
        _ => None,
    };
    Ok(ThetaOrliczReport {
        phi: phi.clone(),
        sample_size: theta.len(),
        luxemburg_norm: norm,
        tail,
        half_sample_norm,
        stability_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p_mean(x: &[f64], p: f64) -> f64 {
        (x.iter().map(|v| v.abs().powf(p)).sum::<f64>() / x.len() as f64).powf(1.0 / p)
    }

    #[test]
    fn zero_samples() {
        for phi in [YoungFunction::Power(2.0), YoungFunction::ExpSquare] {
            assert_eq!(luxemburg_norm(&[0.0, 0.0], &phi).unwrap(), 0.0);
        }
        assert!(luxemburg_norm(&[], &YoungFunction::ExpSquare).is_err());
    }

    #[test]
    fn power_matches_p_mean() {
        let x = [0.3, -1.7, 2.2, 0.01, 5.0];
        for p in [1.0, 2.0, 3.0, 7.5] {
            let l = luxemburg_norm(&x, &YoungFunction::Power(p)).unwrap();
            let want = p_mean(&x, p);
            assert!((l - want).abs() <= 1e-9 * want, "p={p}: {l} vs {want}");
        }
    }

    #[test]
    fn exp_square_four_ones() {
        // exp(1/(2c²)) - 1 = 1  ⇒  c = 1/√(2 ln 2)
        let l = luxemburg_norm(&[1.0; 4], &YoungFunction::ExpSquare).unwrap();
        assert!((l - 0.849_321_800_288_019).abs() < 1e-12, "{l}");
    }

    #[test]
    fn normalization_examples() {
        let c = normalize_sup_rv(&[2.0, 2.0], &YoungFunction::Power(1.0)).unwrap();
        assert!((c - 0.5).abs() < 1e-12);
        let c = normalize_sup_rv(&[1.0, 3.0], &YoungFunction::Power(2.0)).unwrap();
        assert!((c - 1.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!(normalize_sup_rv(&[0.0], &YoungFunction::Power(2.0)).is_err());
    }

    #[test]
    fn tabulated_validation_and_eval() {
        assert!(YoungFunction::tabulated(vec![(1.0, 2.0), (2.0, 3.0)]).is_err()); // concave
        assert!(YoungFunction::tabulated(vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
        assert!(YoungFunction::tabulated(vec![]).is_err());
        let t = YoungFunction::tabulated(vec![(1.0, 0.5), (2.0, 2.0)]).unwrap();
        assert_eq!(t.eval(0.5), 0.25);
        assert_eq!(t.eval(1.5), 1.25);
        assert_eq!(t.eval(3.0), 3.5);
        assert_eq!(t.inverse(1.25), Some(1.5));
        assert_eq!(t.inverse(3.5), Some(3.0));
        let flat = YoungFunction::tabulated(vec![(1.0, 0.0)]).unwrap();
        assert_eq!(luxemburg_norm(&[1.0], &flat), Err(Error::DegenerateYoung));
    }

    #[test]
    fn config_json() {
        let y: YoungFunction = serde_json::from_str(r#"{"family":"power","p":2}"#).unwrap();
        assert_eq!(y, YoungFunction::Power(2.0));
        let y: YoungFunction = serde_json::from_str(r#"{"family":"exp_square"}"#).unwrap();
        assert_eq!(y, YoungFunction::ExpSquare);
        let y: YoungFunction = serde_json::from_str(r#"{"family":"tabulated","knots":[[1,1],[2,3]]}"#).unwrap();
        assert_eq!(serde_json::to_string(&y).unwrap(), r#"{"family":"tabulated","knots":[[1.0,1.0],[2.0,3.0]]}"#);
        assert!(serde_json::from_str::<YoungFunction>(r#"{"family":"power"}"#).is_err());
        assert!(serde_json::from_str::<YoungFunction>(r#"{"family":"power","p":0.5}"#).is_err());
        assert!(serde_json::from_str::<YoungFunction>(r#"{"family":"exp_square","p":2}"#).is_err());
        assert!(serde_json::from_str::<YoungFunction>(r#"{"family":"power","p":2,"q":1}"#).is_err());
    }

    #[test]
    fn ln_eval_agrees_where_finite() {
        for u in [0.1, 1.0, 5.0, 9.0] {
            let y = YoungFunction::ExpSquare;
            assert!((y.ln_eval(u) - y.eval(u).ln()).abs() < 1e-12);
        }
        assert!(YoungFunction::ExpSquare.ln_eval(1e6).is_finite());
    }

    #[test]
    fn delta2_canon() {
        let grid = default_probe_grid();
        let r = delta2_check(&YoungFunction::Power(2.0), &grid).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Pass);
        assert_eq!(r.ratio, Some(4.0));
        assert_eq!(delta2_check(&YoungFunction::ExpSquare, &grid).unwrap().verdict, ProbeVerdict::Fail);
        let lin_tail = YoungFunction::tabulated(vec![(1.0, 0.5), (2.0, 2.0), (3.0, 4.0)]).unwrap();
        let r = delta2_check(&lin_tail, &grid).unwrap();
        assert_eq!(r.verdict, ProbeVerdict::Pass);
        assert!(delta2_check(&lin_tail, &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn weaker_canon() {
        let grid = default_probe_grid();
        let p2 = YoungFunction::Power(2.0);
        let p3 = YoungFunction::Power(3.0);
        assert_eq!(weaker_than(&p2, &p3, &DEFAULT_V_SET, &grid).unwrap().verdict, ProbeVerdict::Pass);
        let rev = weaker_than(&p3, &p2, &DEFAULT_V_SET, &grid).unwrap();
        assert_eq!(rev.verdict, ProbeVerdict::Fail);
        assert_eq!(rev.offending_v, Some(0.5));
        for p in [1.0, 2.0, 5.0] {
            let r = weaker_than(&YoungFunction::Power(p), &YoungFunction::ExpSquare, &DEFAULT_V_SET, &grid).unwrap();
            assert_eq!(r.verdict, ProbeVerdict::Pass, "p={p}");
        }
        assert_eq!(
            weaker_than(&YoungFunction::ExpSquare, &p2, &DEFAULT_V_SET, &grid).unwrap().verdict,
            ProbeVerdict::Fail
        );
    }

    #[test]
    fn theta_report_basics() {
        let r = theta_orlicz_report(&[1.0; 10], &YoungFunction::Power(2.0)).unwrap();
        assert!((r.luxemburg_norm - 1.0).abs() < 1e-12);
        assert_eq!(r.stability_ratio.map(|s| (s - 1.0).abs() < 1e-12), Some(true));
        let z = theta_orlicz_report(&[0.0; 5], &YoungFunction::Power(2.0)).unwrap();
        assert_eq!(z.luxemburg_norm, 0.0);
        assert!(z.tail.is_empty());
        assert_eq!(z.stability_ratio, None);
    }
}
