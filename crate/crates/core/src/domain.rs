//! Drive outcomes, their point values, and probability vectors over them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of drive outcome categories.
pub const NUM_OUTCOMES: usize = 5;

/// Tolerance on the simplex sum and on negative entries.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// How a drive ended, from the possessing team's point of view.
///
/// The declaration order is the canonical ordering used everywhere
/// (probability vector layout, tie-breaking, serialized columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DriveOutcome {
    #[serde(rename = "TD")]
    Touchdown,
    #[serde(rename = "FG")]
    FieldGoal,
    #[serde(rename = "NO_SCORE")]
    NoScore,
    #[serde(rename = "OPP_SAFETY")]
    OppSafety,
    #[serde(rename = "OPP_TD")]
    OppTouchdown,
}

impl DriveOutcome {
    pub const ALL: [DriveOutcome; NUM_OUTCOMES] = [
        DriveOutcome::Touchdown,
        DriveOutcome::FieldGoal,
        DriveOutcome::NoScore,
        DriveOutcome::OppSafety,
        DriveOutcome::OppTouchdown,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(k: usize) -> Option<Self> {
        Self::ALL.get(k).copied()
    }

    /// Net points credited to the possessing team.
    pub fn points(self) -> i32 {
        match self {
            DriveOutcome::Touchdown => 7,
            DriveOutcome::FieldGoal => 3,
            DriveOutcome::NoScore => 0,
            DriveOutcome::OppSafety => -2,
            DriveOutcome::OppTouchdown => -7,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DriveOutcome::Touchdown => "TD",
            DriveOutcome::FieldGoal => "FG",
            DriveOutcome::NoScore => "NO_SCORE",
            DriveOutcome::OppSafety => "OPP_SAFETY",
            DriveOutcome::OppTouchdown => "OPP_TD",
        }
    }
}

impl fmt::Display for DriveOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for DriveOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|o| o.label() == s)
            .ok_or_else(|| Error::Data(format!("invalid outcome label `{s}`")))
    }
}

/// Net points of an outcome.
pub fn points_of_outcome(outcome: DriveOutcome) -> i32 {
    outcome.points()
}

/// Point values in canonical order, as reals.
pub const POINTS: [f64; NUM_OUTCOMES] = [7.0, 3.0, 0.0, -2.0, -7.0];

/// A probability distribution over the five drive outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 5]", into = "[f64; 5]")]
pub struct ProbVector([f64; NUM_OUTCOMES]);

impl ProbVector {
    pub fn new(p: [f64; NUM_OUTCOMES]) -> Result<Self> {
        validate_simplex(&p)?;
        Ok(ProbVector(p))
    }

    pub fn uniform() -> Self {
        ProbVector([0.2; NUM_OUTCOMES])
    }

    pub fn one_hot(outcome: DriveOutcome) -> Self {
        let mut p = [0.0; NUM_OUTCOMES];
        p[outcome.index()] = 1.0;
        ProbVector(p)
    }

    /// Softmax of raw logits, max-shifted for stability.
    pub fn softmax(logits: &[f64; NUM_OUTCOMES]) -> Self {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut p = [0.0; NUM_OUTCOMES];
        let mut total = 0.0;
        for (pk, &z) in p.iter_mut().zip(logits) {
            *pk = (z - max).exp();
            total += *pk;
        }
        for pk in p.iter_mut() {
            *pk /= total;
        }
        ProbVector(p)
    }

    /// Empirical distribution of a count vector. Panics if all counts are zero.
    pub fn from_counts(counts: &[usize; NUM_OUTCOMES]) -> Self {
        let total: usize = counts.iter().sum();
        assert!(total > 0, "empty count vector");
        let mut p = [0.0; NUM_OUTCOMES];
        for (pk, &c) in p.iter_mut().zip(counts) {
            *pk = c as f64 / total as f64;
        }
        ProbVector(p)
    }

    /// Arithmetic mean of several vectors. Panics on an empty slice.
    pub fn mean(vectors: &[ProbVector]) -> Self {
        assert!(!vectors.is_empty(), "mean of no probability vectors");
        let mut p = [0.0; NUM_OUTCOMES];
        for v in vectors {
            for (acc, x) in p.iter_mut().zip(v.0) {
                *acc += x;
            }
        }
        let n = vectors.len() as f64;
        for acc in p.iter_mut() {
            *acc /= n;
        }
        ProbVector(p)
    }

    pub fn as_array(&self) -> &[f64; NUM_OUTCOMES] {
        &self.0
    }

    pub fn get(&self, outcome: DriveOutcome) -> f64 {
        self.0[outcome.index()]
    }

    /// Expected net points, `sum_k pts(k) * p_k`.
    pub fn expected_points(&self) -> f64 {
        self.0.iter().zip(POINTS).map(|(p, pts)| p * pts).sum()
    }

    /// Inverse-CDF draw for a uniform `u` in `[0, 1)`, walking outcomes in
    /// canonical order. Never returns a zero-probability outcome.
    pub fn sample(&self, u: f64) -> DriveOutcome {
        let mut cum = 0.0;
        let mut last = DriveOutcome::NoScore;
        for (k, &p) in self.0.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            last = DriveOutcome::ALL[k];
            cum += p;
            if u < cum {
                return last;
            }
        }
        last
    }

    /// Total variation distance to another vector.
    pub fn total_variation(&self, other: &ProbVector) -> f64 {
        0.5 * self.0.iter().zip(other.0).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }
}

impl TryFrom<[f64; 5]> for ProbVector {
    type Error = Error;

    fn try_from(p: [f64; 5]) -> Result<Self> {
        ProbVector::new(p)
    }
}

impl From<ProbVector> for [f64; 5] {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

fn validate_simplex(p: &[f64; NUM_OUTCOMES]) -> Result<()> {
    let bad = |reason: &str| Error::InvalidProbabilities {
        values: *p,
        reason: reason.to_string(),
    };
    if p.iter().any(|x| !x.is_finite()) {
        return Err(bad("non-finite entry"));
    }
    if p.iter().any(|&x| !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&x)) {
        return Err(bad("entry outside [0, 1]"));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(bad("entries do not sum to 1"));
    }
    Ok(())
}

/// Expected points of a raw probability array, rejecting non-simplex input.
pub fn ep_from_probs(p: &[f64; NUM_OUTCOMES]) -> Result<f64> {
    Ok(ProbVector::new(*p)?.expected_points())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn inverse_cdf_sampling() {
        let p = ProbVector::new([0.5, 0.0, 0.3, 0.2, 0.0]).unwrap();
        assert_eq!(p.sample(0.0), DriveOutcome::Touchdown);
        assert_eq!(p.sample(0.4999), DriveOutcome::Touchdown);
        assert_eq!(p.sample(0.5), DriveOutcome::NoScore);
        assert_eq!(p.sample(0.81), DriveOutcome::OppSafety);
        assert_eq!(p.sample(0.999_999_999_999), DriveOutcome::OppSafety);
        assert_eq!(ProbVector::one_hot(DriveOutcome::OppTouchdown).sample(0.3), DriveOutcome::OppTouchdown);
    }

    #[test]
    fn points_map() {
        assert_eq!(points_of_outcome(DriveOutcome::Touchdown), 7);
        assert_eq!(points_of_outcome(DriveOutcome::FieldGoal), 3);
        assert_eq!(points_of_outcome(DriveOutcome::NoScore), 0);
        assert_eq!(points_of_outcome(DriveOutcome::OppSafety), -2);
        assert_eq!(points_of_outcome(DriveOutcome::OppTouchdown), -7);
        for o in DriveOutcome::ALL {
            assert_eq!(POINTS[o.index()], o.points() as f64);
        }
    }

    #[test]
    fn ordering_is_canonical() {
        for (k, o) in DriveOutcome::ALL.iter().enumerate() {
            assert_eq!(o.index(), k);
            assert_eq!(DriveOutcome::from_index(k), Some(*o));
        }
        assert!(DriveOutcome::Touchdown < DriveOutcome::OppTouchdown);
        assert_eq!(DriveOutcome::from_index(5), None);
    }

    #[test]
    fn labels_round_trip() {
        for o in DriveOutcome::ALL {
            assert_eq!(o.label().parse::<DriveOutcome>().unwrap(), o);
            let json = serde_json::to_string(&o).unwrap();
            assert_eq!(json, format!("\"{}\"", o.label()));
        }
        assert!("touchdown".parse::<DriveOutcome>().is_err());
    }

    #[test]
    fn ep_examples() {
        assert_eq!(ep_from_probs(&[1.0, 0.0, 0.0, 0.0, 0.0]).unwrap(), 7.0);
        assert!((ep_from_probs(&[0.2; 5]).unwrap() - 0.2).abs() < 1e-12);
        // 7*.3 + 3*.2 + 0*.4 - 2*.05 - 7*.05
        let oracle = 2.1 + 0.6 + 0.0 - 0.1 - 0.35;
        assert!((ep_from_probs(&[0.3, 0.2, 0.4, 0.05, 0.05]).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 2.25).abs() < 1e-12);
    }

    #[test]
    fn ep_rejects_non_simplex() {
        assert!(ep_from_probs(&[0.5, 0.5, 0.5, 0.0, 0.0]).is_err());
        assert!(ep_from_probs(&[1.2, -0.2, 0.0, 0.0, 0.0]).is_err());
        assert!(ep_from_probs(&[f64::NAN, 0.0, 0.0, 0.0, 1.0]).is_err());
        assert!(serde_json::from_str::<ProbVector>("[0.5,0.5,0.5,0,0]").is_err());
    }

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let p = ProbVector::softmax(&[0.0; 5]);
        for x in p.as_array() {
            assert!((x - 0.2).abs() < 1e-15);
        }
    }

    fn simplex() -> impl Strategy<Value = ProbVector> {
        proptest::array::uniform5(0.0f64..1.0).prop_filter_map("non-degenerate", |raw| {
            let s: f64 = raw.iter().sum();
            (s > 1e-6).then(|| {
                let mut p = raw;
                p.iter_mut().for_each(|x| *x /= s);
                ProbVector::new(p).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn ep_is_linear_and_bounded(p in simplex(), q in simplex(), a in 0.0f64..=1.0) {
            let mut mix = [0.0; 5];
            for k in 0..5 {
                mix[k] = a * p.as_array()[k] + (1.0 - a) * q.as_array()[k];
            }
            let lhs = ep_from_probs(&mix).unwrap();
            let rhs = a * p.expected_points() + (1.0 - a) * q.expected_points();
            prop_assert!((lhs - rhs).abs() < 1e-12);
            prop_assert!((-7.0..=7.0).contains(&p.expected_points()));
        }
    }
}
