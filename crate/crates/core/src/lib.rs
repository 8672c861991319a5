//! Strengthening uniform convergence of coupled path ensembles.
//!
//! Given replicated sequences `η_n → η` converging uniformly on `[0, 1]`,
//! this crate fits a deterministic scaling function `g` from the observed
//! moduli of continuity and verifies convergence in the stronger modified
//! Hölder norm
//!
//! ```text
//! ||f|| = max_t |f(t)| + sup_δ Δ(f, δ) / √g(δ)
//! ```
//!
//! whose unit ball is compact in `C[0, 1]`. Around that pipeline sit the
//! supporting diagnostics: Orlicz/Luxemburg tail reports for the random
//! domination factor, uniform-integrability and moment-convergence checks
//! for unbounded functionals, and weak-convergence surrogates.
//!
//! Everything works on [`GridPath`]s, piecewise-linear paths on a uniform
//! grid, where sup norms and moduli are exact.

pub mod bernstein;
pub mod coupling;
pub mod error;
pub mod grid;
pub mod holder;
pub mod modulus;
pub mod orlicz;
pub mod pipeline;
pub mod scaling;
pub mod stats;
pub mod weak;

pub use coupling::{
    dominate_sequence, generate_ensemble, uniform_deviations, DominationRecord, Ensemble, Generator, GeneratorKind,
};
pub use error::{Error, Result};
pub use grid::GridPath;
pub use holder::{holder_norm, HolderNorm, HolderNormBreakdown};
pub use modulus::{envelope, modulus_of_continuity, modulus_profile, ModulusProfile};
pub use orlicz::{luxemburg_norm, YoungFunction};
pub use pipeline::{holder_report, run_strengthen, ConvergenceReport, OverallVerdict, PipelineOptions};
pub use scaling::{domination_coefficient, fit_scaling, merge_max, sqrt_scale, ScalingTable};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Output order is index order either way.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
