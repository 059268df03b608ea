//! Monte Carlo harnesses: typical-set probabilities, the critical number of
//! terms, the 0–1 phase transition in the rate, the weak limit of mixtures,
//! and figure bundles.
//!
//! Trial `i` of a harness run always uses the realization of seed
//! `trial_seed(seed, i)`, so every `k` (or `r`) evaluated in one run sees the
//! same realizations and the estimated probability is exactly monotone in `k`.

mod figures;

pub use figures::{
    figure_bundle, write_bundle, FigureBundle, FigureId, FigureOptions, NamedSeries, FIG3_POWERS,
    FIG_FILTER_LENGTHS, FIG_T_DEGREES,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{check_unit_distortion, k_schedule, PowerProfile};
use crate::dist::Law;
use crate::error::{check_p, Error, Result};
use crate::fp::{classify, fp_value, Compressibility};
use crate::process::{derive_seed, ProcessSource, SourceSpec};

const TRIAL_STREAM: u64 = 0x7472_6961_6c00_0000;

pub fn trial_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, TRIAL_STREAM + i as u64)
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        Err(Error::invalid("trials", "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        Err(Error::invalid("n", "window length must be at least 1"))
    } else {
        Ok(())
    }
}

/// For each trial, the smallest `k` with `σ̃_p(k, X^n) ≤ d`, sorted.
///
/// The typical-set indicator of one realization is nondecreasing in `k`, so
/// the fraction of trials in the set at `k` is the fraction of these
/// thresholds that are `≤ k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalCounts {
    sorted: Vec<usize>,
    n: usize,
}

impl CriticalCounts {
    pub fn sample(
        spec: &SourceSpec,
        n: usize,
        d: f64,
        p: f64,
        trials: usize,
        seed: u64,
    ) -> Result<Self> {
        check_n(n)?;
        check_p(p)?;
        check_trials(trials)?;
        check_unit_distortion(d)?;
        let mut sorted = (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut src = ProcessSource::new(spec.clone(), trial_seed(seed, i))?;
                PowerProfile::new(&src.window(n)?, p)?.min_k_within(d)
            })
            .collect::<Result<Vec<_>>>()?;
        sorted.sort_unstable();
        Ok(Self { sorted, n })
    }

    pub fn trials(&self) -> usize {
        self.sorted.len()
    }

    /// Number of trials whose window lies in the typical set at `k`.
    pub fn typical_count(&self, k: usize) -> usize {
        self.sorted.partition_point(|&c| c <= k)
    }

    pub fn probability(&self, k: usize) -> f64 {
        self.typical_count(k) as f64 / self.trials() as f64
    }

    /// Smallest `k ∈ 1..=n` reaching a typical fraction of at least `1 − epsilon`.
    pub fn kappa(&self, epsilon: f64) -> usize {
        let needed = (1.0 - epsilon) * self.trials() as f64 - 1e-9;
        if needed <= 0.0 {
            return 1;
        }
        let idx = (needed.ceil() as usize).clamp(1, self.trials()) - 1;
        self.sorted[idx].clamp(1, self.n)
    }
}

/// Fraction of `trials` independent length-`n` windows with `σ̃_p(k, x) ≤ d`.
pub fn estimate_typical_probability(
    spec: &SourceSpec,
    n: usize,
    k: usize,
    d: f64,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::invalid("k", format!("must lie in 1..={n}, got {k}")));
    }
    Ok(CriticalCounts::sample(spec, n, d, p, trials, seed)?.probability(k))
}

/// Estimated critical number of terms: the smallest `k` whose typical
/// probability estimate is at least `1 − epsilon`.
pub fn kappa_estimate(
    spec: &SourceSpec,
    n: usize,
    d: f64,
    epsilon: f64,
    p: f64,
    trials: usize,
    seed: u64,
) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    Ok(CriticalCounts::sample(spec, n, d, p, trials, seed)?.kappa(epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub r: f64,
    pub k: usize,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseResult {
    pub chain_spec: String,
    pub grid: Vec<PhasePoint>,
    pub n: usize,
    pub trials: usize,
    pub d: f64,
    pub p: f64,
    pub seed: u64,
}

impl PhaseResult {
    pub fn at(&self, r: f64) -> Option<f64> {
        self.grid
            .iter()
            .find(|pt| pt.r == r)
            .map(|pt| pt.probability)
    }
}

/// Typical probability at `k = k_schedule(r, n)` for each `r` of the grid.
pub fn phase_transition(
    spec: &SourceSpec,
    d_o: f64,
    r_grid: &[f64],
    n: usize,
    trials: usize,
    p: f64,
    seed: u64,
) -> Result<PhaseResult> {
    if r_grid.is_empty() {
        return Err(Error::invalid("r_grid", "must not be empty"));
    }
    if let Some(r) = r_grid.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::invalid(
            "r_grid",
            format!("rates must lie in (0, 1), got {r}"),
        ));
    }
    let counts = CriticalCounts::sample(spec, n, d_o, p, trials, seed)?;
    let grid = r_grid
        .iter()
        .map(|&r| {
            let k = k_schedule(r, n)?;
            Ok(PhasePoint {
                r,
                k,
                probability: counts.probability(k),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseResult {
        chain_spec: spec.to_string(),
        grid,
        n,
        trials,
        d: d_o,
        p,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureLimit {
    pub estimate: f64,
    pub predicted: f64,
}

/// Mass of the components whose own typical sets become certain: every
/// compressible component, and every other one with `f_{p}(r) ≤ d`.
pub fn predicted_mixture_limit(components: &[(f64, Law)], r: f64, d: f64, p: f64) -> Result<f64> {
    let mut total = 0.0;
    for (w, law) in components {
        let counts = match classify(law, p)? {
            Compressibility::Compressible { .. } => true,
            Compressibility::NonCompressible { .. } => fp_value(law, p, r)? <= d,
        };
        if counts {
            total += w;
        }
    }
    Ok(total)
}

/// Monte Carlo typical probability of the i.i.d. mixture next to its predicted limit.
pub fn mixture_weak_limit(
    components: &[(f64, Law)],
    r: f64,
    d: f64,
    p: f64,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<MixtureLimit> {
    let spec = SourceSpec::mixture(
        components
            .iter()
            .map(|(w, law)| (*w, SourceSpec::iid(law.clone())))
            .collect(),
    )?;
    let predicted = predicted_mixture_limit(components, r, d, p)?;
    check_n(n)?;
    let k = k_schedule(r, n)?;
    let estimate = estimate_typical_probability(&spec, n, k, d, p, trials, seed)?;
    Ok(MixtureLimit {
        estimate,
        predicted,
    })
}
