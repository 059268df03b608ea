//! Data bundles for the five standard figures.
//!
//! - `fig1`, `fig2`: Gaussian and Student's t (q ∈ {1.2, 2.1, 3, 7, 10}) at p = 1 and p = 2.
//! - `fig3`: one Gaussian realization at p ∈ {0.2, 0.5, 0.8, 1.5, 2}.
//! - `fig4`: Student's t (q = 2.1) input at p = 2 and its moving sums of length
//!   M ∈ {5, 10, 15, 20, 50, 100, 300}.
//! - `fig5`: the same with Gaussian input.
//!
//! All curves of one bundle are driven by the same seed, so the filtered
//! curves share their innovations with the input curve.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::Law;
use crate::error::{Error, Result};
use crate::estimation::{estimate_curve, EstimateOptions, EstimateSeries};
use crate::fp::{curve_rates, fp_curve, RateErrorCurve};
use crate::io::{curve_csv, series_csv, to_json, write_atomic};
use crate::process::{ProcessSource, SourceSpec, Stage};

pub const FIG_T_DEGREES: [f64; 5] = [1.2, 2.1, 3.0, 7.0, 10.0];
pub const FIG3_POWERS: [f64; 5] = [0.2, 0.5, 0.8, 1.5, 2.0];
pub const FIG_FILTER_LENGTHS: [usize; 7] = [5, 10, 15, 20, 50, 100, 300];

const OVERLAY_TAUS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl FigureId {
    pub const ALL: [FigureId; 5] = [Self::Fig1, Self::Fig2, Self::Fig3, Self::Fig4, Self::Fig5];
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self {
            Self::Fig1 => 1,
            Self::Fig2 => 2,
            Self::Fig3 => 3,
            Self::Fig4 => 4,
            Self::Fig5 => 5,
        };
        write!(f, "fig{i}")
    }
}

impl FromStr for FigureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.to_string() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::parse(s, "unknown figure id (fig1..fig5)"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    /// Realization length per curve.
    pub n: usize,
    /// Threshold grid size per estimated curve.
    pub tau_count: usize,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            n: 100_000,
            tau_count: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedSeries {
    pub name: String,
    pub series: EstimateSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureBundle {
    pub id: FigureId,
    pub seed: u64,
    pub options: FigureOptions,
    pub curves: Vec<NamedSeries>,
    /// Closed-form counterparts, keyed by the name of the estimated curve.
    pub overlays: Vec<(String, RateErrorCurve)>,
}

impl FigureBundle {
    pub fn curve(&self, name: &str) -> Option<&EstimateSeries> {
        self.curves
            .iter()
            .find(|c| c.name == name)
            .map(|c| &c.series)
    }
}

struct Job {
    name: String,
    spec: SourceSpec,
    p: f64,
    overlay: Option<Law>,
}

fn iid_job(name: String, law: Law, p: f64) -> Job {
    Job {
        name,
        spec: SourceSpec::iid(law.clone()),
        p,
        overlay: Some(law),
    }
}

fn lti_jobs(input: Law) -> Result<Vec<Job>> {
    let mut jobs = vec![iid_job("input".into(), input.clone(), 2.0)];
    for m in FIG_FILTER_LENGTHS {
        jobs.push(Job {
            name: format!("lti_m{m}"),
            spec: SourceSpec::iid(input.clone()).then(Stage::lti(vec![1.0; m])?),
            p: 2.0,
            overlay: None,
        });
    }
    Ok(jobs)
}

fn jobs(id: FigureId) -> Result<Vec<Job>> {
    let gaussian = Law::gaussian(1.0)?;
    Ok(match id {
        FigureId::Fig1 | FigureId::Fig2 => {
            let p = if id == FigureId::Fig1 { 1.0 } else { 2.0 };
            let mut jobs = vec![iid_job("gaussian".into(), gaussian, p)];
            for q in FIG_T_DEGREES {
                jobs.push(iid_job(format!("student_t_q{q}"), Law::student_t(q)?, p));
            }
            jobs
        }
        FigureId::Fig3 => FIG3_POWERS
            .iter()
            .map(|&p| iid_job(format!("gaussian_p{p}"), gaussian.clone(), p))
            .collect(),
        FigureId::Fig4 => lti_jobs(Law::student_t(2.1)?)?,
        FigureId::Fig5 => lti_jobs(gaussian)?,
    })
}

/// Estimates every curve of figure `id` (in parallel) plus the closed-form overlays.
pub fn figure_bundle(id: FigureId, seed: u64, options: &FigureOptions) -> Result<FigureBundle> {
    if options.n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let estimate = EstimateOptions {
        tau_count: options.tau_count,
        ..EstimateOptions::default()
    };
    let jobs = jobs(id)?;
    let curves = jobs
        .par_iter()
        .map(|job| {
            let mut src = ProcessSource::new(job.spec.clone(), seed)?;
            Ok(NamedSeries {
                name: job.name.clone(),
                series: estimate_curve(&mut src, options.n, job.p, &estimate)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let overlays = jobs
        .iter()
        .filter_map(|job| job.overlay.as_ref().map(|law| (job, law)))
        .map(|(job, law)| {
            let rates = curve_rates(law, OVERLAY_TAUS, &[])?;
            Ok((job.name.clone(), fp_curve(law, job.p, &rates)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FigureBundle {
        id,
        seed,
        options: options.clone(),
        curves,
        overlays,
    })
}

#[derive(Serialize)]
struct CurveEntry<'a> {
    name: &'a str,
    file: String,
    chain_spec: &'a str,
    p: f64,
    n: usize,
    seed: u64,
    alpha_grid: &'a [f64],
}

#[derive(Serialize)]
struct OverlayEntry<'a> {
    name: &'a str,
    file: String,
    dist_spec: &'a str,
    p: f64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    figure: String,
    seed: u64,
    n: usize,
    tau_count: usize,
    version: &'static str,
    curves: Vec<CurveEntry<'a>>,
    closed_form: Vec<OverlayEntry<'a>>,
}

/// Writes `<out>/<id>/` with one `<curve>.csv` per estimated curve,
/// `closed_form/<curve>.csv` overlays and `manifest.json`.
pub fn write_bundle(bundle: &FigureBundle, out: &Path) -> Result<PathBuf> {
    let dir = out.join(bundle.id.to_string());
    let closed = dir.join("closed_form");
    std::fs::create_dir_all(&closed)?;
    let mut manifest = Manifest {
        figure: bundle.id.to_string(),
        seed: bundle.seed,
        n: bundle.options.n,
        tau_count: bundle.options.tau_count,
        version: env!("CARGO_PKG_VERSION"),
        curves: Vec::new(),
        closed_form: Vec::new(),
    };
    for c in &bundle.curves {
        let file = format!("{}.csv", c.name);
        write_atomic(&dir.join(&file), series_csv(&c.series).as_bytes())?;
        manifest.curves.push(CurveEntry {
            name: &c.name,
            file,
            chain_spec: &c.series.chain_spec,
            p: c.series.p,
            n: c.series.n,
            seed: c.series.seed,
            alpha_grid: &c.series.alpha_grid,
        });
    }
    for (name, curve) in &bundle.overlays {
        let file = format!("closed_form/{name}.csv");
        write_atomic(&dir.join(&file), curve_csv(curve).as_bytes())?;
        manifest.closed_form.push(OverlayEntry {
            name,
            file,
            dist_spec: &curve.dist_spec,
            p: curve.p,
        });
    }
    write_atomic(&dir.join("manifest.json"), to_json(&manifest)?.as_bytes())?;
    Ok(dir)
}
