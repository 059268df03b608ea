//! The closed-form rate vs. approximation-error function `f_{p,μ}(r)`.
//!
//! For a law `μ` with finite p-moment, a rate `r` is resolved against the
//! closed tail `μ(B_τ)`:
//!
//! - if some `τ` has `μ(B_τ) = r`, then `f(r) = (1 − v_p(B_τ))^{1/p}`;
//! - otherwise `r` falls inside the jump of an atom `±τ_o`, i.e.
//!   `r = μ(C_{τ_o}) + α·μ({±τ_o})` with `α ∈ [0, 1)`, and
//!   `f(r) = (1 − v_p(C_{τ_o}) − α·v_p({±τ_o}))^{1/p}`.
//!
//! Laws with an infinite p-moment are compressible and have `f ≡ 0`.

use serde::{Deserialize, Serialize};

use crate::dist::{vp_view, Law, VpView};
use crate::error::{check_p, Error, Result};

/// Rates closer than this to a step edge are treated as that edge.
const RATE_TOLERANCE: f64 = 1e-12;
const INVERSE_TOLERANCE: f64 = 1e-12;

/// How a rate is realized by the tail function of a law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateResolution {
    /// `μ(B_τ) = r`.
    Continuous { tau: f64 },
    /// `r = μ(C_τ) + alpha·μ({±τ})`, with `μ({±τ}) > 0` and `alpha ∈ [0, 1)`.
    Atomic { tau: f64, alpha: f64 },
}

/// Outcome of the p-moment test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Compressibility {
    /// `∫|x|^p dμ = ∞`: the error function vanishes identically.
    Compressible {
        p: f64,
    },
    NonCompressible {
        p: f64,
        p_moment: f64,
    },
}

impl Compressibility {
    pub fn is_compressible(&self) -> bool {
        matches!(self, Compressibility::Compressible { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Compressibility::Compressible { .. } => "Compressible",
            Compressibility::NonCompressible { .. } => "NonCompressible",
        }
    }
}

pub fn classify(law: &Law, p: f64) -> Result<Compressibility> {
    let m = law.p_moment(p)?;
    Ok(if m.is_finite() {
        Compressibility::NonCompressible { p, p_moment: m }
    } else {
        Compressibility::Compressible { p }
    })
}

fn check_rate(r: f64) -> Result<()> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid("r", format!("must lie in (0, 1], got {r}")))
    }
}

/// Resolves `r` to a threshold, or to an atom plus interpolation weight.
///
/// Step edges are mapped as follows: the top `μ(B_{τ_o})` of an atom's jump
/// is `Continuous(τ_o)`, the bottom `μ(C_{τ_o})` is `Atomic(τ_o, 0)`.
pub fn resolve_rate(law: &Law, r: f64) -> Result<RateResolution> {
    check_rate(r)?;
    if r == 1.0 {
        return Ok(RateResolution::Continuous { tau: 0.0 });
    }
    for atom in law.atoms() {
        let top = law.tail_closed(atom.location);
        let bottom = law.tail_open(atom.location);
        if (r - top).abs() <= RATE_TOLERANCE {
            return Ok(RateResolution::Continuous { tau: atom.location });
        }
        if (r - bottom).abs() <= RATE_TOLERANCE {
            return Ok(RateResolution::Atomic {
                tau: atom.location,
                alpha: 0.0,
            });
        }
        if r > bottom && r < top {
            let alpha = ((r - bottom) / atom.mass).clamp(0.0, 1.0);
            return Ok(RateResolution::Atomic {
                tau: atom.location,
                alpha,
            });
        }
    }
    let (lo, hi) = law.tail_bracket(r)?;
    let gap = law.tail_closed(lo) - law.tail_closed(hi);
    if gap > 1e-9 {
        return Err(Error::NonConvergence(format!(
            "tail of {law} jumps by {gap:e} near tau = {hi} without a declared atom"
        )));
    }
    Ok(RateResolution::Continuous { tau: hi })
}

/// Value of the error function at one rate, with its resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpEvaluation {
    pub rate: f64,
    pub value: f64,
    pub resolution: Option<RateResolution>,
    /// The rate lies below what the tail function resolves in `f64`; the value
    /// is the one at the largest reachable threshold.
    pub clamped: bool,
}

/// Full evaluation of `f_{p,μ}(r)`.
pub fn fp_evaluate(law: &Law, p: f64, r: f64) -> Result<FpEvaluation> {
    check_p(p)?;
    check_rate(r)?;
    let vp = match vp_view(law, p) {
        Ok(v) => v,
        Err(Error::Compressible { .. }) => {
            return Ok(FpEvaluation {
                rate: r,
                value: 0.0,
                resolution: None,
                clamped: false,
            })
        }
        Err(e) => return Err(e),
    };
    let resolution = resolve_rate(law, r)?;
    let value = value_at(&vp, resolution);
    let clamped = match resolution {
        RateResolution::Continuous { tau } => {
            (law.tail_closed(tau) - r).abs() > RATE_TOLERANCE + 1e-6 * r
        }
        RateResolution::Atomic { .. } => false,
    };
    Ok(FpEvaluation {
        rate: r,
        value,
        resolution: Some(resolution),
        clamped,
    })
}

fn value_at(vp: &VpView, resolution: RateResolution) -> f64 {
    let p = vp.p();
    // 1 − v_p(B_τ) and 1 − v_p(C_τ) − α v_p({±τ}) written as head moments,
    // which avoids cancellation at small thresholds.
    let remaining = match resolution {
        RateResolution::Continuous { tau } => vp.vp_head(tau),
        RateResolution::Atomic { tau, alpha } => vp.vp_head(tau) + (1.0 - alpha) * vp.vp_atom(tau),
    };
    remaining.clamp(0.0, 1.0).powf(p.recip())
}

/// `f_{p,μ}(r)` for `r ∈ (0, 1]`.
pub fn fp_value(law: &Law, p: f64, r: f64) -> Result<f64> {
    Ok(fp_evaluate(law, p, r)?.value)
}

/// Pointwise evaluation of `f_{p,μ}` on an ordered set of rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateErrorCurve {
    pub p: f64,
    pub dist_spec: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub r: f64,
    pub d: f64,
}

impl RateErrorCurve {
    /// Linear interpolation of `d` at rate `r` (clamped to the end points).
    pub fn interpolate(&self, r: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.points.iter().map(|c| (c.r, c.d)).collect();
        crate::estimation::interpolate_sorted(&pts, r)
    }
}

pub fn fp_curve(law: &Law, p: f64, rates: &[f64]) -> Result<RateErrorCurve> {
    check_p(p)?;
    if rates.is_empty() {
        return Err(Error::invalid("rates", "must not be empty"));
    }
    if rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("rates", "must be strictly increasing"));
    }
    let points = rates
        .iter()
        .map(|&r| {
            Ok(CurvePoint {
                r,
                d: fp_value(law, p, r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateErrorCurve {
        p,
        dist_spec: law.to_string(),
        points,
    })
}

/// Rates at which the curve of `law` is worth drawing: closed tails at a
/// threshold grid, both ends of every atom's jump, and the given interior
/// interpolation weights inside each jump.
pub fn curve_rates(law: &Law, tau_count: usize, alphas: &[f64]) -> Result<Vec<f64>> {
    let mut rates: Vec<f64> = crate::dist::tau_grid(law, tau_count)?
        .into_iter()
        .map(|t| law.tail_closed(t))
        .collect();
    rates.push(1.0);
    for atom in law.atoms() {
        let bottom = law.tail_open(atom.location);
        rates.push(law.tail_closed(atom.location));
        rates.push(bottom);
        for &a in alphas {
            if a > 0.0 && a < 1.0 {
                rates.push(bottom + a * atom.mass);
            }
        }
    }
    rates.retain(|&r| r > 0.0 && r <= 1.0);
    rates.sort_by(f64::total_cmp);
    rates.dedup_by(|a, b| (*a - *b).abs() <= RATE_TOLERANCE);
    Ok(rates)
}

/// The unique rate with `f_{p,μ}(r) = target`, by bisection on
/// `(0, 1 − μ({0}))` where the curve is strictly decreasing.
pub fn fp_inverse(law: &Law, p: f64, target: f64) -> Result<f64> {
    check_p(p)?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::invalid(
            "d",
            format!("target error must lie in (0, 1), got {target}"),
        ));
    }
    if classify(law, p)?.is_compressible() {
        return Err(Error::Compressible {
            law: law.to_string(),
            p,
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0 - law.zero_mass());
    while hi - lo > INVERSE_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fp_value(law, p, mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
