//! End-to-end strengthening run: uniform deviations, their domination,
//! modulus envelopes, the fitted scaling table, Hölder-norm convergence,
//! little-o checks, θ tails and weak-convergence surrogates, folded into a
//! single [`ConvergenceReport`].

use serde::{Deserialize, Serialize};

use crate::coupling::{dominate_sequence, uniform_deviations, DominationRecord, Ensemble, EnsembleManifest};
use crate::error::{Error, Result};
use crate::holder::{
    holder_norm_from_profile, little_o_from_profile, ConvergenceVerdict, HolderNorm, NormCurve, Verdict,
    DEFAULT_CONVERGENCE_RATIO, DEFAULT_DECAY_FACTOR, DEFAULT_TAIL_FRACTION,
};
use crate::modulus::{envelope, modulus_profile, ModulusProfile};
use crate::orlicz::{theta_orlicz_report, ThetaOrliczReport, YoungFunction};
use crate::scaling::{domination_coefficient, fit_scaling, sqrt_scale, ScalingTable, DEFAULT_QUANTILE};
use crate::weak::{BlDictionary, NormMode, DEFAULT_LANDMARKS};

/// Tunables of the strengthening run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineOptions {
    pub quantile: f64,
    pub phi: YoungFunction,
    pub tail_fraction: f64,
    pub decay_factor: f64,
    pub convergence_ratio: f64,
    /// Required `ε_N / ε_1` for the deterministic rate to count as decaying.
    pub eps_decay_ratio: f64,
    pub landmarks: usize,
    pub landmark_seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            quantile: DEFAULT_QUANTILE,
            phi: YoungFunction::Power(2.0),
            tail_fraction: DEFAULT_TAIL_FRACTION,
            decay_factor: DEFAULT_DECAY_FACTOR,
            convergence_ratio: DEFAULT_CONVERGENCE_RATIO,
            eps_decay_ratio: 0.5,
            landmarks: DEFAULT_LANDMARKS,
            landmark_seed: 0,
        }
    }
}

impl PipelineOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} out of range: {v}")));
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return bad("quantile (0, 1]", self.quantile);
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return bad("tail_fraction (0, 1]", self.tail_fraction);
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return bad("decay_factor (0, 1]", self.decay_factor);
        }
        if !(self.convergence_ratio > 0.0 && self.convergence_ratio < 1.0) {
            return bad("convergence_ratio (0, 1)", self.convergence_ratio);
        }
        if !(self.eps_decay_ratio > 0.0 && self.eps_decay_ratio <= 1.0) {
            return bad("eps_decay_ratio (0, 1]", self.eps_decay_ratio);
        }
        if self.landmarks == 0 {
            return Err(Error::InvalidParameter("landmarks must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OverallVerdict {
    Strengthened,
    NotStrengthened,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LittleOSummary {
    pub n: usize,
    pub pass: usize,
    pub fail: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlPoint {
    pub n: usize,
    pub sup: f64,
    /// `None` when the Hölder distance is undefined (degenerate `g`).
    pub holder: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub ensemble: EnsembleManifest,
    pub options: PipelineOptions,
    pub domination: DominationRecord,
    pub eps_decaying: bool,
    pub scaling: ScalingTable,
    pub sqrt_scaling: ScalingTable,
    /// Per-replication `θ_r`; `None` where `g` fails to dominate the envelope.
    pub theta: Vec<Option<f64>>,
    pub theta_orlicz: Option<ThetaOrliczReport>,
    pub norm_curve: NormCurve,
    pub little_o_label: &'static str,
    pub little_o: Vec<LittleOSummary>,
    pub weak_label: &'static str,
    pub bounded_lipschitz: Vec<BlPoint>,
    pub verdict: OverallVerdict,
    pub reasons: Vec<String>,
}

/// Indices `1, 2, 4, ...` up to `N`, always ending in `N`.
fn probe_indices(n_seq: usize) -> Vec<usize> {
    let mut v = Vec::new();
    let mut n = 1;
    while n < n_seq {
        v.push(n);
        n *= 2;
    }
    v.push(n_seq);
    v
}

/// Modulus profiles and sup norms of `η_n^(r) - η^(r)`.
pub fn difference_profiles(e: &Ensemble) -> Vec<Vec<(f64, ModulusProfile)>> {
    crate::par_map(e.reps(), |r| {
        let lim = e.limit(r);
        e.members_of(r)
            .iter()
            .map(|p| {
                let d = p.subtract(lim).expect("ensemble shares m");
                (d.sup_norm(), modulus_profile(&d))
            })
            .collect()
    })
}

/// Per-replication envelopes `h_r(δ) = max_n Δ(η_n^(r) - η^(r), δ)`.
pub fn replication_envelopes(profiles: &[Vec<(f64, ModulusProfile)>]) -> Vec<ModulusProfile> {
    profiles.iter().map(|row| envelope(row.iter().map(|(_, p)| p)).expect("rows are nonempty")).collect()
}

/// Hölder-norm curve and little-o tallies of an ensemble against a given `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub scaling: ScalingTable,
    pub norm_curve: NormCurve,
    pub little_o_label: &'static str,
    pub little_o: Vec<LittleOSummary>,
}

impl HolderReport {
    pub fn non_members(&self) -> usize {
        self.norm_curve.per_n.iter().map(|p| p.non_members).sum()
    }
}

fn holder_report_from_profiles(
    profiles: &[Vec<(f64, ModulusProfile)>],
    g: &ScalingTable,
    opts: &PipelineOptions,
) -> Result<HolderReport> {
    let norms: Vec<Vec<HolderNorm>> = profiles
        .iter()
        .map(|row| row.iter().map(|(sup, p)| holder_norm_from_profile(*sup, p, g)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let norm_curve = NormCurve::from_norms(&norms, opts.convergence_ratio);

    let n_seq = profiles.first().map_or(0, Vec::len);
    let mut little_o: Vec<LittleOSummary> = (1..=n_seq).map(|n| LittleOSummary { n, pass: 0, fail: 0 }).collect();
    for row in profiles {
        for (n, (sup, p)) in row.iter().enumerate() {
            let rep = little_o_from_profile(*sup == 0.0, p, g, opts.tail_fraction, opts.decay_factor)?;
            match rep.verdict {
                Verdict::Pass => little_o[n].pass += 1,
                Verdict::Fail => little_o[n].fail += 1,
            }
        }
    }
    Ok(HolderReport { scaling: g.clone(), norm_curve, little_o_label: "empirical", little_o })
}

pub fn holder_report(e: &Ensemble, g: &ScalingTable, opts: &PipelineOptions) -> Result<HolderReport> {
    opts.validate()?;
    if g.m() != e.m() {
        return Err(Error::ResolutionMismatch { left: e.m(), right: g.m() });
    }
    holder_report_from_profiles(&difference_profiles(e), g, opts)
}

pub fn run_strengthen(e: &Ensemble, opts: &PipelineOptions) -> Result<ConvergenceReport> {
    opts.validate()?;
    let zeta = uniform_deviations(e);
    let domination = dominate_sequence(&zeta, opts.quantile)?;
    let all_zero = zeta.iter().flatten().all(|&z| z == 0.0);
    let eps = &domination.eps;
    let eps_decaying = all_zero || eps[eps.len() - 1] <= opts.eps_decay_ratio * eps[0];

    let profiles = difference_profiles(e);
    let envelopes = replication_envelopes(&profiles);
    let g = fit_scaling(&envelopes, opts.quantile)?;
    let theta: Vec<Option<f64>> = envelopes.iter().map(|env| domination_coefficient(env, &g).ok()).collect();
    let finite_theta: Vec<f64> = theta.iter().flatten().copied().collect();
    let theta_orlicz =
        if finite_theta.is_empty() { None } else { Some(theta_orlicz_report(&finite_theta, &opts.phi)?) };

    let HolderReport { norm_curve, little_o, .. } = holder_report_from_profiles(&profiles, &g, opts)?;

    let dict = BlDictionary::from_samples(e.limits(), opts.landmarks, opts.landmark_seed)?;
    let holder_mode = NormMode::Holder(g.clone());
    let bounded_lipschitz = probe_indices(e.n_seq())
        .into_iter()
        .map(|n| {
            let members: Vec<_> = e.members_at(n).into_iter().cloned().collect();
            Ok(BlPoint {
                n,
                sup: dict.distance(e.limits(), &members, &NormMode::Sup)?,
                holder: match dict.distance(e.limits(), &members, &holder_mode) {
                    Ok(d) => Some(d),
                    Err(Error::DegenerateScaling) => None,
                    Err(err) => return Err(err),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reasons = Vec::new();
    if e.distributional_only {
        reasons.push("ensemble is distributional only (no pathwise coupling)".to_string());
    }
    if !eps_decaying {
        reasons.push(format!(
            "deterministic rate does not decay: eps_N / eps_1 = {} > {}",
            eps[eps.len() - 1] / eps[0],
            opts.eps_decay_ratio
        ));
    }
    if norm_curve.verdict != ConvergenceVerdict::Convergent {
        reasons.push("Hölder-norm curve does not fall below the convergence ratio".to_string());
    }
    let non_members: usize = norm_curve.per_n.iter().map(|p| p.non_members).sum();
    if non_members > 0 {
        reasons.push(format!("{non_members} differences are not in the Hölder space"));
    }
    let little_o_fails: usize = little_o.iter().map(|s| s.fail).sum();
    if little_o_fails > 0 {
        reasons.push(format!("{little_o_fails} differences fail the little-o check"));
    }
    let verdict = if reasons.is_empty() { OverallVerdict::Strengthened } else { OverallVerdict::NotStrengthened };

    Ok(ConvergenceReport {
        ensemble: e.manifest(),
        options: opts.clone(),
        domination,
        eps_decaying,
        sqrt_scaling: sqrt_scale(&g),
        scaling: g,
        theta,
        theta_orlicz,
        norm_curve,
        little_o_label: "empirical",
        little_o,
        weak_label: "empirical",
        bounded_lipschitz,
        verdict,
        reasons,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{generate_ensemble, Generator, GeneratorKind};
    use crate::grid::GridPath;

    #[test]
    fn probe_indices_cover_ends() {
        assert_eq!(probe_indices(1), vec![1]);
        assert_eq!(probe_indices(8), vec![1, 2, 4, 8]);
        assert_eq!(probe_indices(10), vec![1, 2, 4, 8, 10]);
    }

    #[test]
    fn constant_ensemble_is_strengthened() {
        let e = generate_ensemble(&Generator::new(GeneratorKind::Constant), 32, 8, 6, 1).unwrap();
        let r = run_strengthen(&e, &PipelineOptions::default()).unwrap();
        assert_eq!(r.verdict, OverallVerdict::Strengthened, "{:?}", r.reasons);
        assert!(r.scaling.is_degenerate());
        assert!(r.norm_curve.per_n.iter().all(|p| p.mean_norm == Some(0.0)));
    }

    #[test]
    fn non_converging_ensemble_is_flagged() {
        let m = 32;
        let reps: Vec<(GridPath, Vec<GridPath>)> = (0..5)
            .map(|r| {
                let lim = GridPath::from_fn(m, |t| (t * (r + 1) as f64).sin()).unwrap();
                let w = GridPath::from_fn(m, |t| (9.0 * t + r as f64).cos()).unwrap();
                let members = vec![lim.add(&w).unwrap(); 8];
                (lim, members)
            })
            .collect();
        let (limits, members): (Vec<_>, Vec<_>) = reps.into_iter().unzip();
        let e = Ensemble::new(limits, members, "fixed-offset").unwrap();
        let r = run_strengthen(&e, &PipelineOptions::default()).unwrap();
        assert_eq!(r.verdict, OverallVerdict::NotStrengthened);
        assert!(!r.eps_decaying);
        assert!(r.reasons.iter().any(|s| s.contains("does not decay")));
    }

    #[test]
    fn holder_report_flags_non_members() {
        let e = generate_ensemble(&Generator::new(GeneratorKind::SmoothDecay), 16, 4, 3, 2).unwrap();
        let flat = ScalingTable::from_values(vec![0.0; 17]).unwrap();
        let r = holder_report(&e, &flat, &PipelineOptions::default()).unwrap();
        assert_eq!(r.non_members(), 12);
        assert!(r.little_o.iter().all(|s| s.pass == 0));
        let bad = ScalingTable::linear(8);
        assert!(matches!(holder_report(&e, &bad, &PipelineOptions::default()), Err(Error::ResolutionMismatch { .. })));
        let opts = PipelineOptions { quantile: 0.0, ..PipelineOptions::default() };
        assert!(run_strengthen(&e, &opts).is_err());
    }
}
