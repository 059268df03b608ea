//! Rate vs. best k-term ℓp approximation error for discrete-time random processes.
//!
//! The crate is organised bottom-up:
//!
//! - [`approx`]: exact best k-term errors and the typicality event on a finite window.
//! - [`dist`]: one-dimensional symmetric laws with tail masses, atoms and p-moments,
//!   plus the reweighted law `v_p`.
//! - [`fp`]: the closed-form rate/error function, its inverse and the
//!   compressibility verdict.
//! - [`process`]: seeded, restartable sample streams (i.i.d., LTI codings, AWGN,
//!   block codings, conditioned sources, mixtures of ergodic components).
//! - [`estimation`]: the plug-in estimator of the rate/error curve from one realization.
//! - [`experiments`]: Monte Carlo harnesses for typicality, the 0–1 phase transition,
//!   mixture limits, and figure bundles.
//!
//! Window-level computations are generic over the floating point type through
//! [`Scalar`]; distributions and sources work in `f64`.

pub mod approx;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod fp;
pub mod io;
pub mod process;
pub mod scalar;

pub use approx::{
    in_typical_set, k_schedule, order_by_magnitude, sigma_p, sigma_rel, OrderedMagnitudes,
    PowerProfile, SampleWindow,
};
pub use dist::{tau_grid, vp_view, Atom, Law, VpView};
pub use error::{Error, Result};
pub use estimation::{EstimateOptions, EstimateRecord, EstimateSeries, Trace};
pub use fp::{
    classify, fp_curve, fp_inverse, fp_value, resolve_rate, Compressibility, RateErrorCurve,
    RateResolution,
};
pub use process::{ProcessSource, SourceSpec};
pub use scalar::Scalar;

/// Double precision sample window, the default used by sources and harnesses.
pub type SampleWindow64 = SampleWindow<f64>;
/// Single precision sample window.
pub type SampleWindow32 = SampleWindow<f32>;
/// Double precision magnitude ordering.
pub type OrderedMagnitudes64 = OrderedMagnitudes<f64>;
/// Double precision power profile.
pub type PowerProfile64 = PowerProfile<f64>;
