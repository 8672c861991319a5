//! Sample-level surrogates for weak convergence: bounded test functionals
//! and an empirical bounded-Lipschitz discrepancy in either the sup norm or
//! a Hölder norm. Neither certifies convergence of measures; both are
//! labelled "empirical" in their reports.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::bernstein::{moment_convergence_check, truncate_functional, Functional, MomentReport, MomentVerdict};
use crate::coupling::{replication_rng, Ensemble};
use crate::error::{Error, Result};
use crate::grid::GridPath;
use crate::holder::holder_norm;
use crate::scaling::ScalingTable;
use crate::stats;

pub const DEFAULT_LANDMARKS: usize = 32;

/// Bounded continuous test functionals `clamp(F, -B, B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionalSuite {
    members: Vec<Functional>,
}

impl TestFunctionalSuite {
    pub fn new(members: Vec<(Functional, f64)>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Empty("test functional suite needs members"));
        }
        Ok(TestFunctionalSuite {
            members: members.into_iter().map(|(f, b)| truncate_functional(&f, b)).collect::<Result<_>>()?,
        })
    }

    /// Clamped max, clamped value at `t = 1/2`, clamped sup norm.
    pub fn standard(bound: f64) -> Result<Self> {
        TestFunctionalSuite::new(vec![
            (Functional::MaxValue, bound),
            (Functional::EvalAt(0.5), bound),
            (Functional::SupNormPower(1.0), bound),
        ])
    }

    pub fn members(&self) -> &[Functional] {
        &self.members
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionalTrace {
    pub functional: Functional,
    pub report: MomentReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunctionalReport {
    pub label: &'static str,
    pub per_functional: Vec<TestFunctionalTrace>,
    pub verdict: MomentVerdict,
}

/// Per-functional `∫F dμ_n → ∫F dμ` checks with the `3σ/√R` band.
pub fn test_functional_convergence(e: &Ensemble, suite: &TestFunctionalSuite, abs_tol: f64) -> TestFunctionalReport {
    let per_functional: Vec<TestFunctionalTrace> = suite
        .members
        .iter()
        .map(|f| TestFunctionalTrace { functional: f.clone(), report: moment_convergence_check(e, f, None, abs_tol) })
        .collect();
    let verdict = if per_functional.iter().all(|t| t.report.verdict == MomentVerdict::Convergent) {
        MomentVerdict::Convergent
    } else {
        MomentVerdict::NotConvergent
    };
    TestFunctionalReport { label: "empirical", per_functional, verdict }
}

/// Which norm the landmark distances use.
#[derive(Debug, Clone, PartialEq)]
pub enum NormMode {
    Sup,
    Holder(ScalingTable),
}

/// Landmarks `ℓ_j` defining the functionals `F_j(x) = min(d(x, ℓ_j), 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlDictionary {
    landmarks: Vec<GridPath>,
}

impl BlDictionary {
    /// Draws up to `count` distinct landmarks from `samples`, deterministically in `seed`.
    pub fn from_samples(samples: &[GridPath], count: usize, seed: u64) -> Result<Self> {
        if samples.is_empty() || count == 0 {
            return Err(Error::Empty("bounded-Lipschitz dictionary needs samples"));
        }
        let landmarks = if count >= samples.len() {
            samples.to_vec()
        } else {
            let mut rng = replication_rng(seed, 0);
            let mut idx = index::sample(&mut rng, samples.len(), count).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| samples[i].clone()).collect()
        };
        Ok(BlDictionary { landmarks })
    }

    pub fn landmarks(&self) -> &[GridPath] {
        &self.landmarks
    }

    fn feature_means(&self, samples: &[GridPath], mode: &NormMode) -> Result<Vec<f64>> {
        self.landmarks
            .iter()
            .map(|l| {
                let vals = samples.iter().map(|x| clamped_distance(x, l, mode)).collect::<Result<Vec<f64>>>()?;
                Ok(stats::mean(&vals))
            })
            .collect()
    }

    /// `max_j |mean_a F_j - mean_b F_j|`.
    pub fn distance(&self, a: &[GridPath], b: &[GridPath], mode: &NormMode) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Empty("bounded-Lipschitz distance needs samples on both sides"));
        }
        let m = self.landmarks[0].m();
        if let Some(p) = a.iter().chain(b).find(|p| p.m() != m) {
            return Err(Error::ResolutionMismatch { left: m, right: p.m() });
        }
        let fa = self.feature_means(a, mode)?;
        let fb = self.feature_means(b, mode)?;
        Ok(stats::max_of(fa.iter().zip(&fb).map(|(x, y)| (x - y).abs())).max(0.0))
    }
}

fn clamped_distance(x: &GridPath, l: &GridPath, mode: &NormMode) -> Result<f64> {
    let d = x.subtract(l)?;
    let dist = match mode {
        NormMode::Sup => d.sup_norm(),
        NormMode::Holder(g) => {
            if g.is_degenerate() && !d.is_zero() {
                return Err(Error::DegenerateScaling);
            }
            holder_norm(&d, g)?.total()
        }
    };
    Ok(dist.min(1.0))
}

/// Empirical bounded-Lipschitz discrepancy with landmarks drawn from `samples_a`.
pub fn bounded_lipschitz_distance(
    samples_a: &[GridPath],
    samples_b: &[GridPath],
    mode: &NormMode,
    landmarks: usize,
    seed: u64,
) -> Result<f64> {
    BlDictionary::from_samples(samples_a, landmarks, seed)?.distance(samples_a, samples_b, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{generate_ensemble, Generator, GeneratorKind};

    #[test]
    fn identical_samples_have_zero_distance() {
        let e = generate_ensemble(&Generator::new(GeneratorKind::RoughDecay), 16, 2, 6, 1).unwrap();
        let d = bounded_lipschitz_distance(e.limits(), e.limits(), &NormMode::Sup, 4, 9).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn two_point_case() {
        let x = GridPath::from_fn(8, |t| t).unwrap();
        let y = x.add_scaled(0.3, &GridPath::from_fn(8, |_| 1.0).unwrap()).unwrap();
        let d = bounded_lipschitz_distance(std::slice::from_ref(&x), std::slice::from_ref(&y), &NormMode::Sup, 32, 0)
            .unwrap();
        assert!((d - 0.3).abs() < 1e-15);
        let far = x.add_scaled(5.0, &GridPath::from_fn(8, |_| 1.0).unwrap()).unwrap();
        assert_eq!(bounded_lipschitz_distance(&[x], &[far], &NormMode::Sup, 32, 0).unwrap(), 1.0);
    }

    #[test]
    fn holder_mode_degenerate_g() {
        let x = GridPath::from_fn(4, |t| t).unwrap();
        let y = GridPath::zeros(4);
        let g = ScalingTable::from_values(vec![0.0; 5]).unwrap();
        assert_eq!(
            bounded_lipschitz_distance(&[x], std::slice::from_ref(&y), &NormMode::Holder(g.clone()), 4, 0),
            Err(Error::DegenerateScaling)
        );
        assert_eq!(
            bounded_lipschitz_distance(std::slice::from_ref(&y), std::slice::from_ref(&y), &NormMode::Holder(g), 4, 0)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn constant_ensemble_passes_suite() {
        let e = generate_ensemble(&Generator::new(GeneratorKind::Constant), 16, 3, 8, 5).unwrap();
        let r = test_functional_convergence(&e, &TestFunctionalSuite::standard(1.0).unwrap(), 1e-9);
        assert_eq!(r.verdict, MomentVerdict::Convergent);
        // a bound below every value saturates
        let sat = TestFunctionalSuite::new(vec![(Functional::SupNormPower(1.0), 1e-9)]).unwrap();
        let r = test_functional_convergence(&e, &sat, 1e-9);
        assert_eq!(r.verdict, MomentVerdict::Convergent);
        assert!(TestFunctionalSuite::new(vec![]).is_err());
    }
}
