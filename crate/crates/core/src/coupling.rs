//! Coupled ensembles `{η^(r), η_1^(r), ..., η_N^(r)}` living on one sample
//! space, their uniform deviations `ζ_n = sup_t |η_n(t) - η(t)|`, and the
//! factorization `ζ_n <= τ ε_n` into a deterministic rate and a random
//! per-replication constant.
//!
//! Generators build the couplings directly. `DONSKER` ensembles are the
//! exception: their members and limit are independent, so they are only
//! meaningful for distributional diagnostics and are tagged as such.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{parse_csv_paths, write_csv_paths, GridPath};
use crate::stats;

/// Lower bound for `ε_n` so that `ζ / ε` stays defined.
pub const EPS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GeneratorKind {
    SmoothDecay,
    RoughDecay,
    Donsker,
    Constant,
}

impl GeneratorKind {
    pub fn tag(self) -> &'static str {
        match self {
            GeneratorKind::SmoothDecay => "SMOOTH_DECAY",
            GeneratorKind::RoughDecay => "ROUGH_DECAY",
            GeneratorKind::Donsker => "DONSKER",
            GeneratorKind::Constant => "CONSTANT",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "SMOOTH_DECAY" => Ok(GeneratorKind::SmoothDecay),
            "ROUGH_DECAY" => Ok(GeneratorKind::RoughDecay),
            "DONSKER" => Ok(GeneratorKind::Donsker),
            "CONSTANT" => Ok(GeneratorKind::Constant),
            _ => Err(Error::InvalidParameter(format!("unknown generator kind {s:?}"))),
        }
    }
}

/// Generator descriptor.
///
/// Decaying kinds perturb the limit by `n^(-decay) w_n` with `w_n` of unit
/// sup norm. `DONSKER` member `n` is the rescaled walk of `n * block` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub kind: GeneratorKind,
    pub decay: f64,
    /// Steps per member index for `DONSKER`; `None` means `max(1, m / N)`.
    pub block: Option<usize>,
}

impl Generator {
    /// Defaults to the `n^(-1/2)` rate.
    pub fn new(kind: GeneratorKind) -> Self {
        Generator { kind, decay: 0.5, block: None }
    }

    pub fn with_decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }

    pub fn with_block(mut self, block: usize) -> Self {
        self.block = Some(block);
        self
    }

    fn tag(&self) -> String {
        match self.kind {
            GeneratorKind::SmoothDecay | GeneratorKind::RoughDecay => {
                format!("{}(decay={:?})", self.kind, self.decay)
            }
            GeneratorKind::Donsker => match self.block {
                Some(b) => format!("DONSKER(block={b})"),
                None => "DONSKER".to_string(),
            },
            GeneratorKind::Constant => "CONSTANT".to_string(),
        }
    }
}

/// Replicated coupled sequences on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    limits: Vec<GridPath>,
    members: Vec<Vec<GridPath>>,
    pub seed: u64,
    pub generator_tag: String,
    pub distributional_only: bool,
}

impl Ensemble {
    /// Assembles an ensemble from `R` limits and `R x N` members.
    pub fn new(limits: Vec<GridPath>, members: Vec<Vec<GridPath>>, generator_tag: impl Into<String>) -> Result<Self> {
        let first = limits.first().ok_or(Error::Empty("ensemble needs at least one replication"))?;
        let m = first.m();
        if members.len() != limits.len() {
            return Err(Error::InvalidParameter(format!("{} limits but {} member rows", limits.len(), members.len())));
        }
        let n = members[0].len();
        if n == 0 {
            return Err(Error::Empty("ensemble needs at least one member per replication"));
        }
        for (r, row) in members.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "replication {r} has {} members, expected {n}",
                    row.len()
                )));
            }
        }
        for p in limits.iter().chain(members.iter().flatten()) {
            if p.m() != m {
                return Err(Error::ResolutionMismatch { left: m, right: p.m() });
            }
        }
        Ok(Ensemble { limits, members, seed: 0, generator_tag: generator_tag.into(), distributional_only: false })
    }

    pub fn m(&self) -> usize {
        self.limits[0].m()
    }

    /// Sequence length `N`.
    pub fn n_seq(&self) -> usize {
        self.members[0].len()
    }

    /// Replication count `R`.
    pub fn reps(&self) -> usize {
        self.limits.len()
    }

    pub fn limit(&self, r: usize) -> &GridPath {
        &self.limits[r]
    }

    pub fn limits(&self) -> &[GridPath] {
        &self.limits
    }

    /// Member `n` (1-based, as in `η_n`) of replication `r`.
    pub fn member(&self, r: usize, n: usize) -> &GridPath {
        &self.members[r][n - 1]
    }

    /// All members of replication `r`, `n = 1..=N` in order.
    pub fn members_of(&self, r: usize) -> &[GridPath] {
        &self.members[r]
    }

    /// Members at index `n` (1-based) across all replications.
    pub fn members_at(&self, n: usize) -> Vec<&GridPath> {
        self.members.iter().map(|row| &row[n - 1]).collect()
    }

    /// Reorders replications; used to check permutation invariance.
    pub fn permuted(&self, order: &[usize]) -> Result<Ensemble> {
        let mut seen = vec![false; self.reps()];
        for &r in order {
            if r >= self.reps() || std::mem::replace(&mut seen[r], true) {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
        }
        if order.len() != self.reps() {
            return Err(Error::InvalidParameter("not a permutation".into()));
        }
        Ok(Ensemble {
            limits: order.iter().map(|&r| self.limits[r].clone()).collect(),
            members: order.iter().map(|&r| self.members[r].clone()).collect(),
            ..self.clone()
        })
    }

    pub fn manifest(&self) -> EnsembleManifest {
        EnsembleManifest {
            format: MANIFEST_FORMAT.to_string(),
            m: self.m(),
            n_seq: self.n_seq(),
            reps: self.reps(),
            seed: self.seed,
            generator_tag: self.generator_tag.clone(),
            distributional_only: self.distributional_only,
            limits_csv: None,
            members_csv: None,
        }
    }

    /// Writes `<stem>.json` plus `<stem>_limits.csv` and `<stem>_members.csv`
    /// next to it. Returns the manifest as written.
    pub fn write_files(&self, manifest_path: &Path) -> Result<EnsembleManifest> {
        let stem = manifest_path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::InvalidParameter("manifest path needs a file name".into()))?;
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new(""));
        let limits_name = format!("{stem}_limits.csv");
        let members_name = format!("{stem}_members.csv");
        std::fs::write(dir.join(&limits_name), write_csv_paths(&self.limits))?;
        let flat: Vec<GridPath> = self.members.iter().flatten().cloned().collect();
        std::fs::write(dir.join(&members_name), write_csv_paths(&flat))?;
        let manifest =
            EnsembleManifest { limits_csv: Some(limits_name), members_csv: Some(members_name), ..self.manifest() };
        std::fs::write(manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(manifest)
    }

    /// Reads an ensemble written by [`Ensemble::write_files`] (or by hand in
    /// the same layout). CSV paths in the manifest are relative to it.
    pub fn read_files(manifest_path: &Path) -> Result<Ensemble> {
        let text = std::fs::read_to_string(manifest_path)?;
        let manifest: EnsembleManifest = serde_json::from_str(&text)?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(Error::Parse(format!("unsupported ensemble format {:?}", manifest.format)));
        }
        let dir = manifest_path.parent().unwrap_or_else(|| Path::new(""));
        let resolve = |name: &Option<String>, what: &str| -> Result<PathBuf> {
            name.as_ref().map(|n| dir.join(n)).ok_or_else(|| Error::Parse(format!("manifest is missing {what}")))
        };
        let limits = parse_csv_paths(&std::fs::read_to_string(resolve(&manifest.limits_csv, "limits_csv")?)?)?;
        let flat = parse_csv_paths(&std::fs::read_to_string(resolve(&manifest.members_csv, "members_csv")?)?)?;
        if limits.len() != manifest.reps || flat.len() != manifest.reps * manifest.n_seq {
            return Err(Error::Parse(format!(
                "expected {} limit rows and {} member rows, found {} and {}",
                manifest.reps,
                manifest.reps * manifest.n_seq,
                limits.len(),
                flat.len()
            )));
        }
        let mut members = Vec::with_capacity(manifest.reps);
        let mut it = flat.into_iter();
        for _ in 0..manifest.reps {
            members.push(it.by_ref().take(manifest.n_seq).collect());
        }
        let mut e = Ensemble::new(limits, members, manifest.generator_tag)?;
        if e.m() != manifest.m {
            return Err(Error::Parse(format!("manifest m = {} but paths have m = {}", manifest.m, e.m())));
        }
        e.seed = manifest.seed;
        e.distributional_only = manifest.distributional_only;
        Ok(e)
    }
}

pub const MANIFEST_FORMAT: &str = "holder-embed-ensemble/1";

/// On-disk description of an ensemble.
///
/// `limits_csv` holds `R` rows, one limit path per replication.
/// `members_csv` holds `R * N` rows in replication-major order: row
/// `r * N + (n - 1)` is `η_n^(r)`. Both use the `t0,...,tm` header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleManifest {
    pub format: String,
    pub m: usize,
    pub n_seq: usize,
    pub reps: usize,
    pub seed: u64,
    pub generator_tag: String,
    pub distributional_only: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub members_csv: Option<String>,
}

/// Per-replication RNG: the seed picks the key, the replication the stream.
pub fn replication_rng(seed: u64, r: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng
}

/// Brownian path on the grid by midpoint displacement: `B(1) ~ N(0, 1)`,
/// then each interval's interior node is filled from the exact Brownian
/// bridge law, so the result is exact in distribution for any `m`.
pub fn brownian_midpoint(m: usize, rng: &mut impl Rng) -> GridPath {
    let mut v = vec![0.0; m + 1];
    v[m] = rng.sample::<f64, _>(StandardNormal);
    let mut stack = vec![(0usize, m)];
    while let Some((a, b)) = stack.pop() {
        if b - a < 2 {
            continue;
        }
        let c = (a + b) / 2;
        let (left, right, span) = ((c - a) as f64, (b - c) as f64, (b - a) as f64);
        let mean = v[a] + (v[b] - v[a]) * left / span;
        let sd = (left * right / (span * m as f64)).sqrt();
        v[c] = mean + sd * rng.sample::<f64, _>(StandardNormal);
        stack.push((c, b));
        stack.push((a, c));
    }
    GridPath::new(v).expect("finite normal draws")
}

fn unit_sup(p: GridPath) -> GridPath {
    let s = p.sup_norm();
    if s > 0.0 {
        p.scale(1.0 / s)
    } else {
        GridPath::from_fn(p.m(), |_| 1.0).expect("constant path")
    }
}

/// A few Gaussian bumps, rescaled to unit sup norm.
fn smooth_bumps(m: usize, rng: &mut impl Rng) -> GridPath {
    let bumps: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            let amp = rng.random_range(-1.0..1.0);
            let centre = rng.random::<f64>();
            let width = rng.random_range(0.1..0.4);
            (amp, centre, width)
        })
        .collect();
    let p = GridPath::from_fn(m, |t| bumps.iter().map(|&(a, c, w)| a * (-0.5 * ((t - c) / w).powi(2)).exp()).sum())
        .expect("finite bumps");
    unit_sup(p)
}

/// Piecewise-linear rescaled walk `S_{⌊xS⌋}/√S` sampled on the grid.
fn walk_path(m: usize, partial: &[f64], steps: usize) -> GridPath {
    let scale = 1.0 / (steps as f64).sqrt();
    let v = (0..=m)
        .map(|i| {
            let num = i * steps;
            let j = num / m;
            let rem = num % m;
            if rem == 0 {
                partial[j] * scale
            } else {
                let frac = rem as f64 / m as f64;
                (partial[j] + frac * (partial[j + 1] - partial[j])) * scale
            }
        })
        .collect();
    GridPath::new(v).expect("finite walk")
}

fn generate_replication(gen: &Generator, m: usize, n_seq: usize, seed: u64, r: usize) -> (GridPath, Vec<GridPath>) {
    let mut rng = replication_rng(seed, r);
    let limit = brownian_midpoint(m, &mut rng);
    let members = match gen.kind {
        GeneratorKind::Constant => vec![limit.clone(); n_seq],
        GeneratorKind::SmoothDecay | GeneratorKind::RoughDecay => (1..=n_seq)
            .map(|n| {
                let w = if gen.kind == GeneratorKind::SmoothDecay {
                    smooth_bumps(m, &mut rng)
                } else {
                    unit_sup(brownian_midpoint(m, &mut rng))
                };
                let a = (n as f64).powf(-gen.decay);
                limit.add_scaled(a, &w).expect("same grid")
            })
            .collect(),
        GeneratorKind::Donsker => {
            let block = gen.block.unwrap_or((m / n_seq).max(1));
            let total = block * n_seq;
            let mut partial = Vec::with_capacity(total + 1);
            partial.push(0.0);
            let mut s = 0.0;
            let mut bits = 0u64;
            for i in 0..total {
                if i % 64 == 0 {
                    bits = rng.random();
                }
                s += if bits & 1 == 1 { 1.0 } else { -1.0 };
                bits >>= 1;
                partial.push(s);
            }
            (1..=n_seq).map(|n| walk_path(m, &partial, n * block)).collect()
        }
    };
    (limit, members)
}

/// Builds a coupled ensemble; bitwise reproducible for a given
/// `(generator, m, n_seq, reps, seed)` regardless of thread count.
pub fn generate_ensemble(gen: &Generator, m: usize, n_seq: usize, reps: usize, seed: u64) -> Result<Ensemble> {
    if m == 0 || n_seq == 0 || reps == 0 {
        return Err(Error::InvalidParameter("m, n_seq and reps must be positive".into()));
    }
    if !gen.decay.is_finite() || gen.decay < 0.0 {
        return Err(Error::InvalidParameter(format!("decay must be finite and >= 0, got {}", gen.decay)));
    }
    if gen.block == Some(0) {
        return Err(Error::InvalidParameter("block must be positive".into()));
    }
    let reps_data = crate::par_map(reps, |r| generate_replication(gen, m, n_seq, seed, r));
    let (limits, members): (Vec<_>, Vec<_>) = reps_data.into_iter().unzip();
    let mut e = Ensemble::new(limits, members, gen.tag())?;
    e.seed = seed;
    e.distributional_only = gen.kind == GeneratorKind::Donsker;
    Ok(e)
}

/// `ζ[r][n-1] = sup_t |η_n^(r)(t) - η^(r)(t)|`.
pub fn uniform_deviations(e: &Ensemble) -> Vec<Vec<f64>> {
    (0..e.reps())
        .map(|r| {
            let lim = e.limit(r);
            e.members_of(r).iter().map(|p| p.subtract(lim).expect("ensemble shares m").sup_norm()).collect()
        })
        .collect()
}

/// Witness of `ζ[r][n] <= τ[r] ε[n]` with `ε` nonincreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationRecord {
    pub eps: Vec<f64>,
    pub tau: Vec<f64>,
    pub zeta: Vec<Vec<f64>>,
}

impl DominationRecord {
    /// True when the witness inequality holds at every entry.
    pub fn holds(&self) -> bool {
        self.zeta.iter().zip(&self.tau).all(|(row, &t)| row.iter().zip(&self.eps).all(|(&z, &e)| z <= t * e))
            && self.eps.windows(2).all(|w| w[1] <= w[0])
    }
}

/// `ε_n`: running max from the right of the per-`n` `q`-quantiles of `ζ`,
/// floored at [`EPS_FLOOR`]; `τ_r`: the smallest factor dominating row `r`.
pub fn dominate_sequence(zeta: &[Vec<f64>], q: f64) -> Result<DominationRecord> {
    let first = zeta.first().ok_or(Error::Empty("dominate_sequence needs at least one row"))?;
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidParameter(format!("quantile must be in (0, 1], got {q}")));
    }
    let n_seq = first.len();
    if n_seq == 0 {
        return Err(Error::Empty("dominate_sequence needs at least one column"));
    }
    for row in zeta {
        if row.len() != n_seq {
            return Err(Error::InvalidParameter("ragged deviation matrix".into()));
        }
        if row.iter().any(|z| !z.is_finite() || *z < 0.0) {
            return Err(Error::InvalidParameter("deviations must be finite and nonnegative".into()));
        }
    }
    let mut eps: Vec<f64> = (0..n_seq)
        .map(|n| {
            let col: Vec<f64> = zeta.iter().map(|row| row[n]).collect();
            stats::quantile(&col, q)
        })
        .collect();
    for n in (0..n_seq.saturating_sub(1)).rev() {
        eps[n] = eps[n].max(eps[n + 1]);
    }
    for e in eps.iter_mut() {
        *e = e.max(EPS_FLOOR);
    }
    let tau = zeta
        .iter()
        .map(|row| {
            let pairs: Vec<(f64, f64)> = row.iter().copied().zip(eps.iter().copied()).collect();
            stats::dominating_ratio(&pairs).expect("eps is positive")
        })
        .collect();
    Ok(DominationRecord { eps, tau, zeta: zeta.to_vec() })
}
