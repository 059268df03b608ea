//! Best k-term ℓp approximation errors on finite sample windows.
//!
//! For a window `x` of length `n`, the best k-term approximation keeps the `k`
//! largest magnitudes and drops the rest, so
//! `σ_p(k, x) = (Σ_{i>k} |x_(i)|^p)^{1/p}` over the nonincreasing magnitude
//! ordering `|x_(1)| ≥ … ≥ |x_(n)|`.
//!
//! All tail power sums are accumulated from the smallest magnitude upward.
//! [`PowerProfile`] stores those running sums once so that repeated queries over
//! `k` (typicality sweeps, threshold estimators) share one arithmetic path and
//! agree bit for bit with [`sigma_p`].

use crate::error::{check_p, Error, Result};
use crate::scalar::Scalar;

/// A finite realization `x^n = (x_1, …, x_n)` ordered by time.
///
/// Nonempty and finite by construction; the length never changes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow<T> {
    values: Vec<T>,
}

impl<T: Scalar> SampleWindow<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("window", "must contain at least one sample"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "window",
                format!("entry {i} is not finite ({})", values[i]),
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Leading sub-window of length `n`.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(Error::invalid(
                "n",
                format!("prefix length must lie in 1..={}, got {n}", self.len()),
            ));
        }
        Ok(Self {
            values: self.values[..n].to_vec(),
        })
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Nonincreasing magnitude ordering of a window.
///
/// `permutation[i]` is the zero-based original index of the `i`-th largest
/// magnitude. Ties keep the smaller original index first, so the permutation is
/// deterministic; error values never depend on it.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedMagnitudes<T> {
    pub magnitudes: Vec<T>,
    pub permutation: Vec<usize>,
}

pub fn order_by_magnitude<T: Scalar>(x: &SampleWindow<T>) -> OrderedMagnitudes<T> {
    let values = x.values();
    let mut permutation: Vec<usize> = (0..values.len()).collect();
    // Stable sort; magnitudes are finite so the comparison is total.
    permutation.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .expect("finite magnitudes")
    });
    let magnitudes = permutation.iter().map(|&i| values[i].abs()).collect();
    OrderedMagnitudes {
        magnitudes,
        permutation,
    }
}

/// Running power sums of a window's magnitudes, smallest first.
///
/// `ascending_sums[j]` is the sum of the `j` smallest values of `|x_i|^p`,
/// accumulated in increasing order, so `σ_p(k, x)^p = ascending_sums[n - k]`
/// and `‖x‖_p^p = ascending_sums[n]`.
#[derive(Debug, Clone)]
pub struct PowerProfile<T> {
    p: T,
    /// Magnitudes in nondecreasing order.
    ascending: Vec<T>,
    ascending_sums: Vec<T>,
}

impl<T: Scalar> PowerProfile<T> {
    pub fn new(x: &SampleWindow<T>, p: T) -> Result<Self> {
        check_p(p.to_f64_lossy())?;
        let mut ascending = order_by_magnitude(x).magnitudes;
        ascending.reverse();
        let mut ascending_sums = Vec::with_capacity(ascending.len() + 1);
        let mut acc = T::zero();
        ascending_sums.push(acc);
        for &m in &ascending {
            acc = acc + m.powf(p);
            ascending_sums.push(acc);
        }
        Ok(Self {
            p,
            ascending,
            ascending_sums,
        })
    }

    pub fn len(&self) -> usize {
        self.ascending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ascending.is_empty()
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// Magnitudes sorted in nondecreasing order.
    pub fn ascending_magnitudes(&self) -> &[T] {
        &self.ascending
    }

    /// `Σ |x_i|^p` over the whole window.
    pub fn total_power(&self) -> T {
        self.ascending_sums[self.len()]
    }

    /// `σ_p(k, x)^p`, the power sum of everything but the `k` largest.
    pub fn residual_power(&self, k: usize) -> Result<T> {
        self.check_k(k)?;
        Ok(self.ascending_sums[self.len() - k])
    }

    pub fn sigma_p(&self, k: usize) -> Result<T> {
        Ok(self.residual_power(k)?.powf(self.p.recip()))
    }

    pub fn norm(&self) -> T {
        self.total_power().powf(self.p.recip())
    }

    pub fn sigma_rel(&self, k: usize) -> Result<T> {
        let norm = self.norm();
        if norm <= T::zero() {
            return Err(Error::Degenerate(
                "relative error of an all-zero window is undefined".into(),
            ));
        }
        Ok(self.sigma_p(k)? / norm)
    }

    /// Number of samples with `|x_i| ≥ tau`.
    pub fn count_at_least(&self, tau: T) -> usize {
        self.len() - self.ascending.partition_point(|&m| m < tau)
    }

    /// Number of samples with `|x_i| > tau`.
    pub fn count_above(&self, tau: T) -> usize {
        self.len() - self.ascending.partition_point(|&m| m <= tau)
    }

    /// Smallest `k` with `σ̃_p(k, x) ≤ d`, found by scanning the monotone profile.
    pub fn min_k_within(&self, d: T) -> Result<usize> {
        let norm = self.norm();
        if norm <= T::zero() {
            return Err(Error::Degenerate(
                "relative error of an all-zero window is undefined".into(),
            ));
        }
        let inv_p = self.p.recip();
        // ascending_sums is nondecreasing, so the admissible j = n - k form a prefix.
        let admissible = self
            .ascending_sums
            .partition_point(|&s| s.powf(inv_p) / norm <= d);
        let j = admissible.saturating_sub(1).min(self.len() - 1);
        Ok(self.len() - j)
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.len() {
            return Err(Error::invalid(
                "k",
                format!("must lie in 1..={}, got {k}", self.len()),
            ));
        }
        Ok(())
    }
}

/// Best k-term ℓp approximation error `σ_p(k, x)`.
pub fn sigma_p<T: Scalar>(k: usize, x: &SampleWindow<T>, p: T) -> Result<T> {
    PowerProfile::new(x, p)?.sigma_p(k)
}

/// Relative error `σ_p(k, x) / ‖x‖_p`, in `[0, 1]`.
///
/// Fails with [`Error::Degenerate`] on an all-zero window.
pub fn sigma_rel<T: Scalar>(k: usize, x: &SampleWindow<T>, p: T) -> Result<T> {
    PowerProfile::new(x, p)?.sigma_rel(k)
}

/// Membership of `x` in the set `{σ̃_p(k, x) ≤ d}`.
pub fn in_typical_set<T: Scalar>(x: &SampleWindow<T>, k: usize, d: T, p: T) -> Result<bool> {
    check_unit_distortion(d.to_f64_lossy())?;
    Ok(sigma_rel(k, x, p)? <= d)
}

pub(crate) fn check_unit_distortion(d: f64) -> Result<()> {
    if (0.0..=1.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::invalid("d", format!("must lie in [0, 1], got {d}")))
    }
}

/// Number of kept terms for rate `r` at window length `n`.
///
/// `max(1, round(r·n))` clamped to `n`, rounding half away from zero, so that
/// `k_n / n → r`.
pub fn k_schedule(r: f64, n: usize) -> Result<usize> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid("r", format!("must lie in (0, 1], got {r}")));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let k = (r * n as f64).round() as usize;
    Ok(k.clamp(1, n))
}
