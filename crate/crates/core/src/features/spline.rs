//! Clamped B-spline bases.
//!
//! The knot vector repeats each boundary `degree + 1` times. The full basis
//! has `degree + 1 + #interior` functions summing to one everywhere on the
//! boundary interval; the first function is dropped so the basis can sit
//! next to an intercept, leaving `degree + #interior` columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Basis configuration. Give either `df` (interior knots at quantiles of the
/// data) or `interior_knots`; both may be given when consistent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineSpec {
    pub degree: usize,
    pub df: Option<usize>,
    pub interior_knots: Option<Vec<f64>>,
    /// Boundary knots; the data range when absent.
    pub boundary: Option<(f64, f64)>,
    /// Clamp out-of-boundary values instead of rejecting them.
    pub clamp: bool,
}

impl SplineSpec {
    pub fn with_df(df: usize) -> Self {
        SplineSpec {
            degree: 3,
            df: Some(df),
            interior_knots: None,
            boundary: None,
            clamp: false,
        }
    }

    pub fn with_knots(knots: Vec<f64>) -> Self {
        SplineSpec {
            degree: 3,
            df: None,
            interior_knots: Some(knots),
            boundary: None,
            clamp: false,
        }
    }

    /// Resolve knots against training values, producing a reusable basis.
    pub fn freeze(&self, x: &[f64]) -> Result<FrozenSpline> {
        let degree = self.degree;
        if degree == 0 {
            return Err(Error::Config("spline degree must be at least 1".into()));
        }
        let boundary = match self.boundary {
            Some(b) => b,
            None => {
                if x.is_empty() {
                    return Err(Error::Config("cannot infer spline boundary from no data".into()));
                }
                let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        };
        if !(boundary.0 < boundary.1) {
            return Err(Error::Config(format!(
                "degenerate spline boundary [{}, {}]",
                boundary.0, boundary.1
            )));
        }
        let interior = match (&self.interior_knots, self.df) {
            (Some(k), Some(df)) => {
                if df != degree + k.len() {
                    return Err(Error::Config(format!(
                        "df = {df} inconsistent with degree {degree} and {} interior knots",
                        k.len()
                    )));
                }
                k.clone()
            }
            (Some(k), None) => k.clone(),
            (None, Some(df)) => {
                if df < degree {
                    return Err(Error::Config(format!("df = {df} is below the degree {degree}")));
                }
                let n = df - degree;
                let mut sorted: Vec<f64> = x.to_vec();
                sorted.sort_by(f64::total_cmp);
                (1..=n)
                    .map(|i| quantile_sorted(&sorted, i as f64 / (n + 1) as f64))
                    .collect()
            }
            (None, None) => return Err(Error::Config("spline needs df or interior knots".into())),
        };
        if interior.windows(2).any(|w| w[0] > w[1])
            || interior.iter().any(|&k| k <= boundary.0 || k >= boundary.1)
        {
            return Err(Error::Config(format!(
                "interior knots {interior:?} must be sorted and inside ({}, {})",
                boundary.0, boundary.1
            )));
        }
        Ok(FrozenSpline {
            degree,
            interior_knots: interior,
            boundary,
            clamp: self.clamp,
        })
    }
}

/// Type-7 (linear interpolation) sample quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// A basis with fixed knots, serialized alongside fitted models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenSpline {
    pub degree: usize,
    pub interior_knots: Vec<f64>,
    pub boundary: (f64, f64),
    pub clamp: bool,
}

impl FrozenSpline {
    /// Number of functions in the full basis.
    pub fn num_full(&self) -> usize {
        self.degree + 1 + self.interior_knots.len()
    }

    /// Number of emitted columns (full basis minus the first function).
    pub fn num_columns(&self) -> usize {
        self.num_full() - 1
    }

    fn knot_vector(&self) -> Vec<f64> {
        let p = self.degree;
        let mut t = Vec::with_capacity(self.num_full() + p + 1);
        t.extend(std::iter::repeat_n(self.boundary.0, p + 1));
        t.extend_from_slice(&self.interior_knots);
        t.extend(std::iter::repeat_n(self.boundary.1, p + 1));
        t
    }

    /// Bring `x` inside the boundary. Returns the value to evaluate and
    /// whether it was clamped; errors when out of range and clamping is off.
    pub fn admit(&self, x: f64) -> Result<(f64, bool)> {
        let (lo, hi) = self.boundary;
        if !x.is_finite() {
            return Err(Error::Data(format!("non-finite spline input {x}")));
        }
        if x >= lo && x <= hi {
            return Ok((x, false));
        }
        if self.clamp {
            Ok((x.clamp(lo, hi), true))
        } else {
            Err(Error::Data(format!("value {x} outside spline boundary [{lo}, {hi}]")))
        }
    }

    /// All `num_full()` basis functions at `x`, which must lie inside the boundary.
    pub fn full_basis(&self, x: f64) -> Vec<f64> {
        let p = self.degree;
        let t = self.knot_vector();
        let n = self.num_full();
        // Knot span: largest s in [p, n-1] with t[s] <= x (last span includes hi).
        let mut span = p;
        while span < n - 1 && x >= t[span + 1] {
            span += 1;
        }
        // Cox-de Boor triangle for the p+1 non-zero functions on this span.
        let mut local = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        local[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom == 0.0 { 0.0 } else { local[r] / denom };
                local[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            local[j] = saved;
        }
        let mut out = vec![0.0; n];
        out[span - p..=span].copy_from_slice(&local);
        out
    }

    /// Emitted columns at `x` (first function dropped), honoring the clamp rule.
    pub fn columns(&self, x: f64) -> Result<Vec<f64>> {
        let (x, _) = self.admit(x)?;
        let mut full = self.full_basis(x);
        full.remove(0);
        Ok(full)
    }
}
