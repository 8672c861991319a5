//! Independent numerical oracles: the reflection-principle mean of the
//! Brownian maximum, the sampled covering check, and Luxemburg norms of
//! known closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use holder_embed::bernstein::Functional;
use holder_embed::coupling::brownian_midpoint;
use holder_embed::holder::covering_number_bound;
use holder_embed::{
    generate_ensemble, holder_norm, luxemburg_norm, stats, Generator, GeneratorKind, GridPath, ScalingTable,
    YoungFunction,
};

/// `∫_0^L f` by composite Simpson with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(lo) + inner + f(hi)) * h / 3.0
}

#[test]
fn reflection_principle_mean_of_maximum() {
    // E max_{[0,1]} W = ∫ P(max > a) da with P(max > a) = 2 (1 - Φ(a)).
    // statrs evaluates the normal tail to about 1e-11.
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mean = simpson(|a| 2.0 * normal.sf(a), 0.0, 40.0, 40_000);
    assert!((mean - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-9, "{mean}");
}

/// `E max(0, S_1, ..., S_n) / √n` for the simple ±1 walk, from the lattice
/// reflection identity `P(max >= a) = P(S_n >= a) + P(S_n > a)`.
fn exact_walk_max_mean(n: usize) -> f64 {
    use statrs::function::gamma::ln_gamma;
    // pmf of S_n = 2j - n
    let pmf: Vec<f64> = (0..=n)
        .map(|j| {
            (ln_gamma(n as f64 + 1.0)
                - ln_gamma(j as f64 + 1.0)
                - ln_gamma((n - j) as f64 + 1.0)
                - n as f64 * std::f64::consts::LN_2)
                .exp()
        })
        .collect();
    let prob_ge =
        |a: i64| -> f64 { pmf.iter().enumerate().filter(|(j, _)| 2 * *j as i64 - n as i64 >= a).map(|(_, p)| p).sum() };
    let total: f64 = (1..=n as i64).map(|a| prob_ge(a) + prob_ge(a + 1)).sum();
    total / (n as f64).sqrt()
}

#[test]
fn walk_maximum_matches_exact_lattice_mean() {
    let exact = exact_walk_max_mean(1024);
    assert!((exact - 0.78245).abs() < 1e-5, "{exact}");
    let e = generate_ensemble(&Generator::new(GeneratorKind::Donsker), 1024, 1, 20_000, 123).unwrap();
    let maxima = Functional::MaxValue.values_at(&e, 1);
    let z = (stats::mean(&maxima) - exact) / (stats::sample_std(&maxima) / (maxima.len() as f64).sqrt());
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn sampled_unit_ball_lies_within_eps_of_its_centre() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = 256;
    let g = ScalingTable::from_values((0..=m).map(|k| (k as f64 / m as f64).powf(0.8)).collect()).unwrap();
    for eps in [0.4, 0.6, 1.0, 3.0] {
        let bound = covering_number_bound(&g, eps).unwrap();
        for _ in 0..200 {
            let raw = if rng.random::<bool>() {
                brownian_midpoint(m, &mut rng)
            } else {
                let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(1.0..40.0));
                GridPath::from_fn(m, |t| (a + b * t).sin()).unwrap()
            };
            let n = holder_norm(&raw, &g).unwrap().total();
            let f = raw.scale(rng.random_range(0.0..1.0) / n);
            let c = bound.center_for(&f).unwrap();
            let dist = f.subtract(&c).unwrap().sup_norm();
            assert!(dist <= eps, "eps {eps}: distance {dist}");
        }
    }
}

#[test]
fn luxemburg_closed_forms() {
    // Power(p) on equal samples a: ||a||_p = a.
    for p in [1.0, 2.0, 7.5] {
        let got = luxemburg_norm(&[2.5; 7], &YoungFunction::power(p).unwrap()).unwrap();
        assert!((got - 2.5).abs() < 1e-12, "{got}");
    }
    // ExpSquare, Φ(u) = exp(u²/2) - 1, on samples all equal to a: Φ(a/λ) = 1, so λ = a / √(2 ln 2).
    let got = luxemburg_norm(&[1.0; 4], &YoungFunction::ExpSquare).unwrap();
    let want = 1.0 / (2.0 * std::f64::consts::LN_2).sqrt();
    assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
    // One nonzero sample a among n: Φ(a/λ) = n.
    let got = luxemburg_norm(&[0.0, 0.0, 3.0, 0.0], &YoungFunction::ExpSquare).unwrap();
    let want = 3.0 / (2.0 * 5f64.ln()).sqrt();
    assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
}
