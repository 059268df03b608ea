//! Sample-based estimation of the rate–error curve from one long realization.
//!
//! For a threshold `τ` the estimator pairs the fraction of samples with
//! `|x_i| ≥ τ` with the relative error left after keeping exactly those
//! samples. Atoms of the declared law get extra points where samples sitting
//! exactly on the atom are kept by independent Bernoulli(α) draws.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{k_schedule, PowerProfile, SampleWindow};
use crate::error::{check_p, Error, Result};
use crate::process::{derive_seed, stream_rng, ProcessSource, SourceSpec};
use crate::scalar::Scalar;

const ATOM_STREAM: u64 = 0x6174_6f6d;
const TRACE_STREAM: u64 = 0x7472_6163;

fn check_tau(tau: f64) -> Result<()> {
    if tau >= 0.0 && !tau.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(
            "tau",
            format!("must be nonnegative, got {tau}"),
        ))
    }
}

/// Fraction of samples with `|x_i| ≥ τ`.
pub fn empirical_tail<T: Scalar>(x: &SampleWindow<T>, tau: T) -> Result<f64> {
    check_tau(tau.to_f64_lossy())?;
    let hits = x.values().iter().filter(|v| v.abs() >= tau).count();
    Ok(hits as f64 / x.len() as f64)
}

/// Share of `Σ|x_i|^p` carried by the samples with `|x_i| ≥ τ`.
pub fn empirical_vp<T: Scalar>(x: &SampleWindow<T>, tau: T, p: T) -> Result<T> {
    check_tau(tau.to_f64_lossy())?;
    check_p(p.to_f64_lossy())?;
    let (mut inside, mut total) = (T::zero(), T::zero());
    for v in x.values() {
        let w = v.abs().powf(p);
        total = total + w;
        if v.abs() >= tau {
            inside = inside + w;
        }
    }
    if total <= T::zero() {
        return Err(Error::Degenerate(
            "p-power mass of an all-zero window".into(),
        ));
    }
    Ok(inside / total)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::invalid(
            "alpha",
            format!("must lie in [0, 1], got {alpha}"),
        ))
    }
}

/// Samples strictly beyond `τ` plus a Bernoulli(α) thinning of the samples
/// with `|x_i| = τ`, and the relative error `σ̃_p` after keeping that many
/// terms (at least one).
pub fn atom_randomized_count<T: Scalar>(
    x: &SampleWindow<T>,
    tau: T,
    alpha: f64,
    p: T,
    seed: u64,
) -> Result<(usize, T)> {
    check_tau(tau.to_f64_lossy())?;
    check_alpha(alpha)?;
    let profile = PowerProfile::new(x, p)?;
    let on_atom = profile.count_at_least(tau) - profile.count_above(tau);
    let count = profile.count_above(tau) + thinned(on_atom, &[alpha], seed)[0];
    Ok((count, profile.sigma_rel(count.max(1))?))
}

/// For each α, how many of `on_atom` coins come up below α. The same
/// uniforms are shared by every α so the counts are monotone in α.
fn thinned(on_atom: usize, alphas: &[f64], seed: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed);
    let mut counts = vec![0; alphas.len()];
    for _ in 0..on_atom {
        let u: f64 = rng.random();
        for (c, a) in counts.iter_mut().zip(alphas) {
            if u < *a {
                *c += 1;
            }
        }
    }
    counts
}

/// One point of an estimated curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub tau: f64,
    pub r_hat: f64,
    pub d_hat: f64,
    /// Bernoulli weight for atom-interpolated records; `None` for plain thresholds.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    /// Explicit thresholds; when absent a grid of `tau_count` levels is used.
    pub taus: Option<Vec<f64>>,
    pub tau_count: usize,
    /// Interpolation weights emitted at every atom of the declared law.
    pub alpha_grid: Vec<f64>,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            taus: None,
            tau_count: 30,
            alpha_grid: vec![0.25, 0.5, 0.75],
        }
    }
}

/// An estimated curve and the provenance needed to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub records: Vec<EstimateRecord>,
    pub n: usize,
    pub p: f64,
    pub chain_spec: String,
    pub seed: u64,
    pub alpha_grid: Vec<f64>,
}

impl EstimateSeries {
    /// `(r_hat, d_hat)` pairs sorted by rate.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self.records.iter().map(|r| (r.r_hat, r.d_hat)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        pts
    }

    /// Piecewise-linear reading of `d_hat` at rate `r`, clamped at the ends.
    pub fn interpolate(&self, r: f64) -> Option<f64> {
        interpolate_sorted(&self.points(), r)
    }

    /// Record whose rate is closest to `r`.
    pub fn nearest(&self, r: f64) -> Option<&EstimateRecord> {
        self.records
            .iter()
            .min_by(|a, b| (a.r_hat - r).abs().total_cmp(&(b.r_hat - r).abs()))
    }
}

/// Linear interpolation through points sorted by abscissa; clamps outside
/// the covered range and skips zero-width steps.
pub(crate) fn interpolate_sorted(pts: &[(f64, f64)], r: f64) -> Option<f64> {
    let (first, last) = (pts.first()?, pts.last()?);
    if r <= first.0 {
        return Some(first.1);
    }
    for w in pts.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if r <= x1 && x1 > x0 {
            let t = (r - x0) / (x1 - x0);
            return Some(y0 + t * (y1 - y0));
        }
    }
    Some(last.1)
}

/// Thresholds at equi-spaced tail levels `i/(count+1)` of the realization's
/// own magnitudes.
pub fn empirical_tau_grid(profile: &PowerProfile<f64>, count: usize) -> Vec<f64> {
    let asc = profile.ascending_magnitudes();
    let n = asc.len();
    let mut grid: Vec<f64> = (1..=count)
        .map(|i| {
            let level = i as f64 / (count + 1) as f64;
            let idx = ((1.0 - level) * n as f64).floor() as usize;
            asc[idx.min(n - 1)]
        })
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn d_hat(profile: &PowerProfile<f64>, count: usize) -> Result<f64> {
    if count == 0 {
        Ok(1.0)
    } else {
        profile.sigma_rel(count)
    }
}

/// Curve records of a fixed window: one per threshold, plus `alphas` records
/// at each of `atoms`. Sorted by `τ`, then by decreasing α (plain records
/// count as α = 1), which makes `r_hat` nonincreasing along the sequence.
pub fn curve_from_window(
    x: &SampleWindow<f64>,
    p: f64,
    taus: &[f64],
    atoms: &[f64],
    alphas: &[f64],
    seed: u64,
) -> Result<Vec<EstimateRecord>> {
    check_p(p)?;
    for &t in taus.iter().chain(atoms) {
        check_tau(t)?;
    }
    if taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("taus", "must be strictly increasing"));
    }
    for &a in alphas {
        check_alpha(a)?;
    }
    let profile = PowerProfile::new(x, p)?;
    if profile.total_power() <= 0.0 {
        return Err(Error::Degenerate("realization is identically zero".into()));
    }
    let n = x.len() as f64;
    let mut records = Vec::with_capacity(taus.len() + atoms.len() * alphas.len());
    for &tau in taus {
        let count = profile.count_at_least(tau);
        records.push(EstimateRecord {
            tau,
            r_hat: count as f64 / n,
            d_hat: d_hat(&profile, count)?,
            alpha: None,
        });
    }
    for (i, &tau) in atoms.iter().enumerate() {
        let above = profile.count_above(tau);
        let on_atom = profile.count_at_least(tau) - above;
        let thinned = thinned(on_atom, alphas, derive_seed(seed, ATOM_STREAM + i as u64));
        for (&alpha, extra) in alphas.iter().zip(thinned) {
            let count = above + extra;
            records.push(EstimateRecord {
                tau,
                r_hat: count as f64 / n,
                d_hat: d_hat(&profile, count)?,
                alpha: Some(alpha),
            });
        }
    }
    records.sort_by(|a, b| {
        a.tau
            .total_cmp(&b.tau)
            .then(b.alpha.unwrap_or(1.0).total_cmp(&a.alpha.unwrap_or(1.0)))
    });
    Ok(records)
}

/// Draws `n` samples from `src` and estimates its curve.
///
/// Thresholds come from `options.taus`, else from the declared law's tail
/// grid, else from the realization's magnitude quantiles.
pub fn estimate_curve(
    src: &mut ProcessSource,
    n: usize,
    p: f64,
    options: &EstimateOptions,
) -> Result<EstimateSeries> {
    check_p(p)?;
    if n == 0 {
        return Err(Error::invalid("n", "sample count must be at least 1"));
    }
    let x = src.window(n)?;
    let law = src.declared_law().cloned();
    let taus = match (&options.taus, &law) {
        (Some(t), _) => t.clone(),
        (None, Some(law)) => crate::dist::tau_grid(law, options.tau_count)?,
        (None, None) => {
            if options.tau_count < 2 {
                return Err(Error::invalid("tau_count", "must be at least 2"));
            }
            empirical_tau_grid(&PowerProfile::new(&x, p)?, options.tau_count)
        }
    };
    let atoms: Vec<f64> = law
        .map(|l| l.atoms().iter().map(|a| a.location).collect())
        .unwrap_or_default();
    let records = curve_from_window(&x, p, &taus, &atoms, &options.alpha_grid, src.seed())?;
    Ok(EstimateSeries {
        records,
        n,
        p,
        chain_spec: src.spec().to_string(),
        seed: src.seed(),
        alpha_grid: options.alpha_grid.clone(),
    })
}

/// `σ̃_p(k_n, X^n)` along one growing realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub seed: u64,
    pub active_component: Option<usize>,
    pub n_list: Vec<usize>,
    pub values: Vec<f64>,
}

impl Trace {
    pub fn last(&self) -> f64 {
        *self.values.last().expect("traces are never empty")
    }
}

/// Seeds used by [`convergence_trace`] for stream `i` under `master_seed`.
pub fn trace_seed(master_seed: u64, i: usize) -> u64 {
    derive_seed(master_seed, TRACE_STREAM + i as u64)
}

/// One trace per seed, evaluated at each `n` of `n_list` with `k = k_schedule(r, n)`.
/// Streams run in parallel; the result is ordered by stream index.
pub fn convergence_trace(
    spec: &SourceSpec,
    r: f64,
    p: f64,
    n_list: &[usize],
    n_seeds: usize,
    master_seed: u64,
) -> Result<Vec<Trace>> {
    check_p(p)?;
    k_schedule(r, 1)?;
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "n_list",
            "must be positive and strictly increasing",
        ));
    }
    if n_seeds == 0 {
        return Err(Error::invalid("n_seeds", "must be at least 1"));
    }
    let max_n = *n_list.last().expect("nonempty");
    (0..n_seeds)
        .into_par_iter()
        .map(|i| {
            let seed = trace_seed(master_seed, i);
            let mut src = ProcessSource::new(spec.clone(), seed)?;
            let x = src.window(max_n)?;
            let values = n_list
                .iter()
                .map(|&n| {
                    let profile = PowerProfile::new(&x.prefix(n)?, p)?;
                    profile.sigma_rel(k_schedule(r, n)?)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Trace {
                seed,
                active_component: src.active_component(),
                n_list: n_list.to_vec(),
                values,
            })
        })
        .collect()
}
