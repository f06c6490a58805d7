use log::warn;
use serde::{Deserialize, Serialize};

use super::spline::{FrozenSpline, SplineSpec};
use super::Feature;
use crate::error::{Error, Result};
use crate::ingest::{GameState, PlayDataset};

/// Dense row-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub names: Vec<String>,
    pub nrows: usize,
    pub values: Vec<f64>,
}

impl DesignMatrix {
    pub fn ncols(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.ncols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some((0..self.nrows).map(|i| self.row(i)[j]).collect())
    }

    /// Build from explicit rows (mostly for tests and toy models).
    pub fn from_rows(names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = names.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != p {
                return Err(Error::Data(format!("design row {i} has {} values, expected {p}", r.len())));
            }
            values.extend_from_slice(r);
        }
        let m = DesignMatrix {
            names,
            nrows: rows.len(),
            values,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for n in &self.names {
            if !seen.insert(n) {
                return Err(Error::Data(format!("duplicate design column `{n}`")));
            }
        }
        if let Some(pos) = self.values.iter().position(|v| !v.is_finite()) {
            let p = self.ncols().max(1);
            return Err(Error::Data(format!(
                "non-finite design entry at row {}, column `{}`",
                pos / p,
                self.names[pos % p]
            )));
        }
        Ok(())
    }
}

/// Knots and factor levels frozen at training time for the
/// spline-and-interaction logit design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplineRecipe {
    pub yardline: FrozenSpline,
    pub half_seconds: FrozenSpline,
    /// Sorted era levels seen in training; the first is the reference.
    pub era_levels: Vec<i32>,
}

/// How a game state becomes a regression row. Serialized next to every
/// fitted logit model so prediction reuses the training-time recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureRecipe {
    /// Intercept followed by the raw covariates.
    Linear { features: Vec<Feature> },
    /// Intercept; down x yardline spline; down x half-seconds spline;
    /// log yards-to-go; late-half-without-timeouts; era dummies; spread and
    /// spread x yardline; six score-differential/clock indicators.
    Spline(SplineRecipe),
}

const SCORE_BUCKETS: [&str; 6] = [
    "I(sd<=-11)",
    "I(sd>=11)",
    "I(sd<=-4)*late",
    "I(-3<=sd<=0)*late",
    "I(1<=sd<=3)*late",
    "I(4<=sd<=10)*late",
];

/// Under-two-minutes flag: at most 120 seconds left in the half.
pub(crate) fn under_two_minutes(x: &GameState) -> bool {
    x.half_seconds_remaining <= 120.0
}

impl SplineRecipe {
    /// Freeze knots (yardline: df 5 at quantiles; half seconds: one knot at
    /// 30) and era levels from training states.
    pub fn fit<'a>(states: impl IntoIterator<Item = &'a GameState>) -> Result<Self> {
        let states: Vec<&GameState> = states.into_iter().collect();
        if states.is_empty() {
            return Err(Error::Data("cannot fit a feature recipe on no rows".into()));
        }
        let yard: Vec<f64> = states.iter().map(|s| s.yardline_100 as f64).collect();
        let half: Vec<f64> = states.iter().map(|s| s.half_seconds_remaining).collect();
        let mut yardline = SplineSpec::with_df(5).freeze(&yard)?;
        let mut half_seconds = SplineSpec::with_knots(vec![30.0]).freeze(&half)?;
        yardline.clamp = true;
        half_seconds.clamp = true;
        let mut era_levels: Vec<i32> = states.iter().map(|s| s.era).collect();
        era_levels.sort_unstable();
        era_levels.dedup();
        Ok(SplineRecipe {
            yardline,
            half_seconds,
            era_levels,
        })
    }

    pub fn num_columns(&self) -> usize {
        1 + 4 * self.yardline.num_columns()
            + 4 * self.half_seconds.num_columns()
            + 1
            + 1
            + (self.era_levels.len() - 1)
            + 2
            + SCORE_BUCKETS.len()
    }

    fn column_names(&self) -> Vec<String> {
        let mut names = vec!["(intercept)".to_string()];
        for d in 1..=4 {
            for b in 1..=self.yardline.num_columns() {
                names.push(format!("down{d}:bs(yardline_100){b}"));
            }
            for b in 1..=self.half_seconds.num_columns() {
                names.push(format!("down{d}:bs(half_seconds_remaining){b}"));
            }
        }
        names.push("log(ydstogo)".into());
        names.push("utm:I(posteam_timeouts_remaining==0)".into());
        for level in &self.era_levels[1..] {
            names.push(format!("era{level}"));
        }
        names.push("posteam_spread".into());
        names.push("posteam_spread:yardline_100".into());
        names.extend(SCORE_BUCKETS.iter().map(|s| s.to_string()));
        names
    }

    /// Returns whether any spline input had to be clamped.
    fn write_row(&self, x: &GameState, out: &mut Vec<f64>) -> Result<bool> {
        if !(1..=4).contains(&x.down) {
            return Err(Error::Data(format!("down {} outside 1..=4", x.down)));
        }
        if x.ydstogo <= 0 {
            return Err(Error::Data(format!("ydstogo {} must be positive (log term)", x.ydstogo)));
        }
        let era_pos = self
            .era_levels
            .iter()
            .position(|&e| e == x.era)
            .ok_or_else(|| Error::RecipeMismatch(format!("era level {} not seen in training", x.era)))?;
        let (yv, yc) = self.yardline.admit(x.yardline_100 as f64)?;
        let (hv, hc) = self.half_seconds.admit(x.half_seconds_remaining)?;
        let mut yb = self.yardline.full_basis(yv);
        yb.remove(0);
        let mut hb = self.half_seconds.full_basis(hv);
        hb.remove(0);

        out.push(1.0);
        for d in 1..=4 {
            let on = if x.down == d { 1.0 } else { 0.0 };
            out.extend(yb.iter().map(|b| on * b));
            out.extend(hb.iter().map(|b| on * b));
        }
        out.push((x.ydstogo as f64).ln());
        let utm = under_two_minutes(x) && x.posteam_timeouts_remaining == 0;
        out.push(indicator(utm));
        for j in 1..self.era_levels.len() {
            out.push(indicator(era_pos == j));
        }
        out.push(x.posteam_spread);
        out.push(x.posteam_spread * x.yardline_100 as f64);
        let sd = x.score_differential;
        let late = x.game_seconds_remaining <= 900.0;
        out.push(indicator(sd <= -11));
        out.push(indicator(sd >= 11));
        out.push(indicator(sd <= -4 && late));
        out.push(indicator((-3..=0).contains(&sd) && late));
        out.push(indicator((1..=3).contains(&sd) && late));
        out.push(indicator((4..=10).contains(&sd) && late));
        Ok(yc || hc)
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl FeatureRecipe {
    pub fn num_columns(&self) -> usize {
        match self {
            FeatureRecipe::Linear { features } => 1 + features.len(),
            FeatureRecipe::Spline(r) => r.num_columns(),
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        match self {
            FeatureRecipe::Linear { features } => std::iter::once("(intercept)".to_string())
                .chain(features.iter().map(|f| f.name().to_string()))
                .collect(),
            FeatureRecipe::Spline(r) => r.column_names(),
        }
    }

    /// Append the design row for `x`; returns whether clamping occurred.
    pub fn write_row(&self, x: &GameState, out: &mut Vec<f64>) -> Result<bool> {
        match self {
            FeatureRecipe::Linear { features } => {
                out.push(1.0);
                out.extend(features.iter().map(|f| f.value(x)));
                Ok(false)
            }
            FeatureRecipe::Spline(r) => r.write_row(x, out),
        }
    }

    pub fn row(&self, x: &GameState) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.num_columns());
        self.write_row(x, &mut out)?;
        Ok(out)
    }

    pub fn design<'a>(&self, states: impl IntoIterator<Item = &'a GameState>) -> Result<DesignMatrix> {
        let mut values = Vec::new();
        let mut nrows = 0;
        let mut clamped = 0usize;
        for (i, x) in states.into_iter().enumerate() {
            let c = self
                .write_row(x, &mut values)
                .map_err(|e| match e {
                    Error::RecipeMismatch(_) => e,
                    other => Error::Data(format!("design row {i}: {other}")),
                })?;
            clamped += c as usize;
            nrows += 1;
        }
        if clamped > 0 {
            warn!("{clamped} row(s) had spline inputs clamped to the training boundary");
        }
        let m = DesignMatrix {
            names: self.column_names(),
            nrows,
            values,
        };
        m.validate()?;
        Ok(m)
    }
}

/// Fit the spline recipe on a dataset and build its design matrix.
pub fn build_mlr_design(ds: &PlayDataset) -> Result<(FeatureRecipe, DesignMatrix)> {
    let recipe = FeatureRecipe::Spline(SplineRecipe::fit(ds.plays().iter().map(|p| &p.state))?);
    let design = recipe.design(ds.plays().iter().map(|p| &p.state))?;
    Ok((recipe, design))
}
