//! The modified Hölder space `H^o(√g)`.
//!
//! Norm: `||f|| = max_t |f(t)| + sup_k Δ(f, k/m) / √g[k]`, with `0/0 = 0`.
//! A path whose modulus is positive at a lag where `g` vanishes is not in
//! the space; that outcome is returned as a value so batch diagnostics keep
//! going.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::coupling::Ensemble;
use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::modulus::{modulus_profile, ModulusProfile};
use crate::scaling::ScalingTable;
use crate::stats;

pub const DEFAULT_TAIL_FRACTION: f64 = 0.1;
pub const DEFAULT_DECAY_FACTOR: f64 = 0.5;
pub const DEFAULT_CONVERGENCE_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderNormBreakdown {
    pub sup_part: f64,
    pub holder_part: f64,
    pub total: f64,
    /// Lag attaining `holder_part`; 0 when it is zero.
    pub argmax_k: usize,
}

/// Either a finite norm or the first lag that rules membership out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HolderNorm {
    Member(HolderNormBreakdown),
    NotInSpace { lag: usize, modulus: f64 },
}

impl HolderNorm {
    pub fn breakdown(&self) -> Option<&HolderNormBreakdown> {
        match self {
            HolderNorm::Member(b) => Some(b),
            HolderNorm::NotInSpace { .. } => None,
        }
    }

    /// Total norm, `+∞` outside the space.
    pub fn total(&self) -> f64 {
        self.breakdown().map_or(f64::INFINITY, |b| b.total)
    }

    pub fn is_member(&self) -> bool {
        matches!(self, HolderNorm::Member(_))
    }

    /// Converts non-membership into [`Error::NotInSpace`].
    pub fn into_result(self) -> Result<HolderNormBreakdown> {
        match self {
            HolderNorm::Member(b) => Ok(b),
            HolderNorm::NotInSpace { lag, modulus } => Err(Error::NotInSpace { lag, value: modulus }),
        }
    }
}

fn check_m(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::ResolutionMismatch { left: a, right: b });
    }
    Ok(())
}

/// Norm of a path whose modulus profile is already known.
pub fn holder_norm_from_profile(sup_part: f64, profile: &ModulusProfile, g: &ScalingTable) -> Result<HolderNorm> {
    check_m(profile.m(), g.m())?;
    let mut holder_part = 0.0_f64;
    let mut argmax_k = 0;
    for k in 1..=g.m() {
        let d = profile.at(k);
        if d == 0.0 {
            continue;
        }
        let gk = g.at(k);
        if gk == 0.0 {
            return Ok(HolderNorm::NotInSpace { lag: k, modulus: d });
        }
        let ratio = d / gk.sqrt();
        if ratio > holder_part {
            holder_part = ratio;
            argmax_k = k;
        }
    }
    Ok(HolderNorm::Member(HolderNormBreakdown { sup_part, holder_part, total: sup_part + holder_part, argmax_k }))
}

/// `||f||` in `H^o(√g)`, split into its sup and Hölder parts.
pub fn holder_norm(f: &GridPath, g: &ScalingTable) -> Result<HolderNorm> {
    check_m(f.m(), g.m())?;
    holder_norm_from_profile(f.sup_norm(), &modulus_profile(f), g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Finite-grid proxy for `Δ(f, δ) / √g(δ) → 0` as `δ → 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LittleOReport {
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Always `"empirical"`: a grid cannot certify a limit.
    pub label: &'static str,
    pub tail_lags: usize,
    pub tail_max: Option<f64>,
    pub holder_part: Option<f64>,
    pub decay_factor: f64,
    /// `Δ(f, k/m)/√g[k]` for `k = 1..=m`; `None` where `g[k] = 0`.
    pub ratios: Vec<Option<f64>>,
}

/// Compares the ratio curve on the smallest `tail_fraction` of lags with
/// `g > 0` against `decay_factor` times its global maximum.
pub fn little_o_check(f: &GridPath, g: &ScalingTable, tail_fraction: f64, decay_factor: f64) -> Result<LittleOReport> {
    check_m(f.m(), g.m())?;
    little_o_from_profile(f.is_zero(), &modulus_profile(f), g, tail_fraction, decay_factor)
}

pub(crate) fn little_o_from_profile(
    f_is_zero: bool,
    profile: &ModulusProfile,
    g: &ScalingTable,
    tail_fraction: f64,
    decay_factor: f64,
) -> Result<LittleOReport> {
    check_m(profile.m(), g.m())?;
    if !(tail_fraction > 0.0 && tail_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("tail fraction must be in (0, 1), got {tail_fraction}")));
    }
    if decay_factor.is_nan() || decay_factor <= 0.0 {
        return Err(Error::InvalidParameter("decay factor must be positive".into()));
    }
    let m = g.m();
    let ratios: Vec<Option<f64>> = (1..=m)
        .map(|k| {
            let (d, gk) = (profile.at(k), g.at(k));
            if gk > 0.0 {
                Some(d / gk.sqrt())
            } else if d == 0.0 {
                Some(0.0)
            } else {
                None
            }
        })
        .collect();
    let fail = |reason: String| LittleOReport {
        verdict: Verdict::Fail,
        reason: Some(reason),
        label: "empirical",
        tail_lags: 0,
        tail_max: None,
        holder_part: None,
        decay_factor,
        ratios: ratios.clone(),
    };
    if g.is_degenerate() && !f_is_zero {
        return Ok(fail("degenerate scaling table with a nonzero path".into()));
    }
    if let Some(k) = (1..=m).find(|&k| profile.at(k) > 0.0 && g.at(k) == 0.0) {
        return Ok(fail(format!("not in the space: modulus > 0 at lag {k} where g = 0")));
    }
    let support: Vec<usize> = (1..=m).filter(|&k| g.at(k) > 0.0).collect();
    let holder_part = stats::max_of(ratios.iter().flatten().copied()).max(0.0);
    if support.is_empty() {
        return Ok(LittleOReport {
            verdict: Verdict::Pass,
            reason: None,
            label: "empirical",
            tail_lags: 0,
            tail_max: Some(0.0),
            holder_part: Some(holder_part),
            decay_factor,
            ratios,
        });
    }
    let tail_lags = ((tail_fraction * support.len() as f64).ceil() as usize).max(1);
    let tail_max = stats::max_of(support[..tail_lags].iter().map(|&k| ratios[k - 1].unwrap_or(0.0))).max(0.0);
    let verdict = if tail_max <= decay_factor * holder_part { Verdict::Pass } else { Verdict::Fail };
    Ok(LittleOReport {
        verdict,
        reason: (verdict == Verdict::Fail)
            .then(|| format!("tail ratio {tail_max} exceeds {decay_factor} x {holder_part}")),
        label: "empirical",
        tail_lags,
        tail_max: Some(tail_max),
        holder_part: Some(holder_part),
        decay_factor,
        ratios,
    })
}

/// Covering of the grid-restricted unit ball of `H^o(√g)` by sup-norm
/// `eps`-balls.
///
/// Members of the unit ball satisfy `Δ(f, k*/m) <= √g[k*] <= eps/3`, so each
/// lies within `2 eps / 3` of the piecewise-linear interpolant of its values
/// on the sub-grid of step `k*`, rounded to a lattice of spacing `eps/3` in
/// `[-1, 1]`. The bound counts those interpolants: `levels^nodes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringBound {
    pub eps: f64,
    pub m: usize,
    /// Sub-grid step `k*`.
    pub step: usize,
    pub nodes: u32,
    pub levels: u64,
}

impl CoveringBound {
    pub fn exact(&self) -> BigUint {
        BigUint::from(self.levels).pow(self.nodes)
    }

    pub fn log10(&self) -> f64 {
        self.nodes as f64 * (self.levels as f64).log10()
    }

    /// Grid indices of the sub-grid nodes.
    pub fn node_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.m).step_by(self.step).collect();
        idx.push(self.m);
        idx
    }

    /// The ball centre assigned to `f`.
    pub fn center_for(&self, f: &GridPath) -> Result<GridPath> {
        check_m(f.m(), self.m)?;
        let spacing = self.eps / 3.0;
        let last = (self.levels - 1) as f64;
        let nodes = self.node_indices();
        let q: Vec<f64> = nodes
            .iter()
            .map(|&i| {
                let j = ((f.values()[i] + 1.0) / spacing).round().clamp(0.0, last);
                -1.0 + j * spacing
            })
            .collect();
        let mut v = vec![0.0; self.m + 1];
        for (w, pair) in nodes.windows(2).enumerate() {
            let (a, b) = (pair[0], pair[1]);
            for (i, slot) in v.iter_mut().enumerate().take(b + 1).skip(a) {
                let lam = (i - a) as f64 / (b - a) as f64;
                *slot = q[w] + lam * (q[w + 1] - q[w]);
            }
        }
        GridPath::new(v)
    }
}

/// Upper bound on the sup-norm `eps`-covering number of the unit ball.
pub fn covering_number_bound(g: &ScalingTable, eps: f64) -> Result<CoveringBound> {
    if !g.is_normalized() {
        return Err(Error::InvalidParameter("covering bound needs a normalized scaling table".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let target = eps / 3.0;
    let m = g.m();
    let step = (1..=m).rev().find(|&k| g.at(k).sqrt() <= target).ok_or(Error::CoveringTooCoarse { target })?;
    let nodes = (m.div_ceil(step) + 1) as u32;
    let levels = (2.0 / target).floor() as u64 + 1;
    Ok(CoveringBound { eps, m, step, nodes, levels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConvergenceVerdict {
    Convergent,
    NotConvergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCurveEntry {
    pub n: usize,
    /// Mean over replications in the space; `None` if there are none.
    pub mean_norm: Option<f64>,
    pub max_norm: Option<f64>,
    pub non_members: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormCurve {
    pub per_n: Vec<NormCurveEntry>,
    pub verdict: ConvergenceVerdict,
}

impl NormCurve {
    pub(crate) fn from_norms(norms: &[Vec<HolderNorm>], convergence_ratio: f64) -> NormCurve {
        let n_seq = norms.first().map_or(0, |row| row.len());
        let per_n: Vec<NormCurveEntry> = (0..n_seq)
            .map(|n| {
                let finite: Vec<f64> = norms.iter().filter_map(|row| row[n].breakdown().map(|b| b.total)).collect();
                NormCurveEntry {
                    n: n + 1,
                    mean_norm: (!finite.is_empty()).then(|| stats::mean(&finite)),
                    max_norm: (!finite.is_empty()).then(|| stats::max_of(finite.iter().copied())),
                    non_members: norms.len() - finite.len(),
                }
            })
            .collect();
        let verdict = match (per_n.first().and_then(|e| e.mean_norm), per_n.last().and_then(|e| e.mean_norm)) {
            (Some(first), Some(last)) if last <= convergence_ratio * first => ConvergenceVerdict::Convergent,
            _ => ConvergenceVerdict::NotConvergent,
        };
        NormCurve { per_n, verdict }
    }
}

/// Per-replication, per-`n` norms `||η_n - η||` in `H^o(√g)`.
pub fn difference_norms(e: &Ensemble, g: &ScalingTable) -> Result<Vec<Vec<HolderNorm>>> {
    check_m(e.m(), g.m())?;
    Ok(crate::par_map(e.reps(), |r| {
        let lim = e.limit(r);
        e.members_of(r)
            .iter()
            .map(|p| {
                let d = p.subtract(lim).expect("ensemble shares m");
                holder_norm(&d, g).expect("resolution checked")
            })
            .collect()
    }))
}

/// Mean and max of `||η_n - η||_{H^o(√g)}` over replications for each `n`.
pub fn norm_convergence_curve(e: &Ensemble, g: &ScalingTable, convergence_ratio: f64) -> Result<NormCurve> {
    Ok(NormCurve::from_norms(&difference_norms(e, g)?, convergence_ratio))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{generate_ensemble, Generator, GeneratorKind};
    use crate::modulus::envelope;
    use crate::scaling::fit_scaling;

    fn table(v: &[f64]) -> ScalingTable {
        ScalingTable::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn zero_path_norm() {
        let b = holder_norm(&GridPath::zeros(4), &ScalingTable::linear(4)).unwrap().into_result().unwrap();
        assert_eq!((b.sup_part, b.holder_part, b.total, b.argmax_k), (0.0, 0.0, 0.0, 0));
    }

    #[test]
    fn g_shaped_path_has_norm_two() {
        // f(t) = t on m=4 has Δ(f, k/4) = k/4 = g[k] for g linear.
        let f = GridPath::from_fn(4, |t| t).unwrap();
        let b = holder_norm(&f, &ScalingTable::linear(4)).unwrap().into_result().unwrap();
        assert_eq!(b.sup_part, 1.0);
        assert_eq!(b.holder_part, 1.0);
        assert_eq!(b.total, 2.0);
        assert_eq!(b.argmax_k, 4);
    }

    #[test]
    fn non_membership_is_a_value() {
        let g = table(&[0.0, 0.0, 1.0]);
        let f = GridPath::new(vec![0.0, 1.0, 0.0]).unwrap();
        let n = holder_norm(&f, &g).unwrap();
        assert_eq!(n, HolderNorm::NotInSpace { lag: 1, modulus: 1.0 });
        assert_eq!(n.total(), f64::INFINITY);
        assert!(n.into_result().is_err());
        assert!(holder_norm(&GridPath::zeros(3), &g).is_err());
    }

    #[test]
    fn little_o_cases() {
        let g = ScalingTable::linear(40);
        let zero = little_o_check(&GridPath::zeros(40), &g, 0.1, 0.5).unwrap();
        assert_eq!(zero.verdict, Verdict::Pass);
        assert!(zero.ratios.iter().all(|r| *r == Some(0.0)));

        // Δ(f,·) = g exactly, ratios are √g[k].
        let f = GridPath::from_fn(40, |t| t).unwrap();
        let rep = little_o_check(&f, &g, 0.1, 0.5).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.tail_lags, 4);
        assert!((rep.tail_max.unwrap() - 0.1f64.sqrt()).abs() < 1e-12);
        assert!((rep.holder_part.unwrap() - 1.0).abs() < 1e-12);

        // A path as rough at the finest lag as at the coarsest fails.
        let zig = GridPath::new((0..=40).map(|i| (i % 2) as f64).collect()).unwrap();
        assert_eq!(little_o_check(&zig, &g, 0.1, 0.5).unwrap().verdict, Verdict::Fail);

        let degenerate = table(&vec![0.0; 41]);
        let rep = little_o_check(&f, &degenerate, 0.1, 0.5).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.reason.is_some());
        assert!(little_o_check(&f, &g, 1.0, 0.5).is_err());
    }

    #[test]
    fn covering_examples() {
        let b = covering_number_bound(&ScalingTable::linear(8), 3.0).unwrap();
        assert_eq!((b.step, b.nodes, b.levels), (8, 2, 3));
        assert_eq!(b.exact(), BigUint::from(9u32));
        assert!(matches!(covering_number_bound(&ScalingTable::linear(16), 0.6), Err(Error::CoveringTooCoarse { .. })));
        let b = covering_number_bound(&ScalingTable::linear(1024), 0.6).unwrap();
        assert_eq!(b.step, 40);
        assert_eq!(b.nodes, 27);
        assert_eq!(b.levels, 11);
        assert_eq!(b.node_indices().len(), 27);
        assert!((b.log10() - 27.0 * 11f64.log10()).abs() < 1e-12);
        let unnormalized = table(&[0.0, 0.1, 0.5]);
        assert!(covering_number_bound(&unnormalized, 0.5).is_err());
    }

    #[test]
    fn curve_for_constant_and_scaled_perturbation() {
        let e = generate_ensemble(&Generator::new(GeneratorKind::Constant), 32, 6, 3, 4).unwrap();
        let curve = norm_convergence_curve(&e, &ScalingTable::linear(32), 0.1).unwrap();
        assert_eq!(curve.verdict, ConvergenceVerdict::Convergent);
        assert!(curve.per_n.iter().all(|p| p.mean_norm == Some(0.0) && p.non_members == 0));

        // η_n = η + w/n with a fixed w: norms are ||w||/n.
        let m = 32;
        let w = GridPath::from_fn(m, |t| (7.0 * t).sin() + t * t).unwrap();
        let lim = GridPath::from_fn(m, |t| (3.0 * t).cos()).unwrap();
        let members: Vec<GridPath> = (1..=16).map(|n| lim.add_scaled(1.0 / n as f64, &w).unwrap()).collect();
        let e = Ensemble::new(vec![lim.clone()], vec![members], "scaled").unwrap();
        let envs: Vec<ModulusProfile> =
            (1..=16).map(|n| modulus_profile(&e.member(0, n).subtract(&lim).unwrap())).collect();
        let g = fit_scaling(&[envelope(&envs).unwrap()], 1.0).unwrap();
        let base = holder_norm(&w, &g).unwrap().total();
        let curve = norm_convergence_curve(&e, &g, 0.1).unwrap();
        for p in &curve.per_n {
            let expect = base / p.n as f64;
            assert!((p.mean_norm.unwrap() - expect).abs() <= 1e-12 * base, "n={}", p.n);
        }
        assert_eq!(curve.verdict, ConvergenceVerdict::Convergent);
    }
}
