//! Covariates and regression design matrices.

mod design;
mod spline;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::GameState;

pub use design::{build_mlr_design, DesignMatrix, FeatureRecipe, SplineRecipe};
pub use spline::{quantile_sorted, FrozenSpline, SplineSpec};

/// A numeric game-state covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    #[serde(rename = "yardline_100")]
    Yardline100,
    Down,
    Ydstogo,
    HalfSecondsRemaining,
    GameSecondsRemaining,
    Era,
    PosteamTimeoutsRemaining,
    DefteamTimeoutsRemaining,
    ScoreDifferential,
    PosteamSpread,
}

impl Feature {
    pub const ALL: [Feature; 10] = [
        Feature::Yardline100,
        Feature::Down,
        Feature::Ydstogo,
        Feature::HalfSecondsRemaining,
        Feature::GameSecondsRemaining,
        Feature::Era,
        Feature::PosteamTimeoutsRemaining,
        Feature::DefteamTimeoutsRemaining,
        Feature::ScoreDifferential,
        Feature::PosteamSpread,
    ];

    /// The covariates of the boosted-tree outcome models: everything except
    /// game seconds remaining.
    pub fn outcome_model_set() -> Vec<Feature> {
        vec![
            Feature::Yardline100,
            Feature::Down,
            Feature::Ydstogo,
            Feature::HalfSecondsRemaining,
            Feature::Era,
            Feature::PosteamTimeoutsRemaining,
            Feature::DefteamTimeoutsRemaining,
            Feature::ScoreDifferential,
            Feature::PosteamSpread,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::Yardline100 => "yardline_100",
            Feature::Down => "down",
            Feature::Ydstogo => "ydstogo",
            Feature::HalfSecondsRemaining => "half_seconds_remaining",
            Feature::GameSecondsRemaining => "game_seconds_remaining",
            Feature::Era => "era",
            Feature::PosteamTimeoutsRemaining => "posteam_timeouts_remaining",
            Feature::DefteamTimeoutsRemaining => "defteam_timeouts_remaining",
            Feature::ScoreDifferential => "score_differential",
            Feature::PosteamSpread => "posteam_spread",
        }
    }

    pub fn value(self, x: &GameState) -> f64 {
        match self {
            Feature::Yardline100 => x.yardline_100 as f64,
            Feature::Down => x.down as f64,
            Feature::Ydstogo => x.ydstogo as f64,
            Feature::HalfSecondsRemaining => x.half_seconds_remaining,
            Feature::GameSecondsRemaining => x.game_seconds_remaining,
            Feature::Era => x.era as f64,
            Feature::PosteamTimeoutsRemaining => x.posteam_timeouts_remaining as f64,
            Feature::DefteamTimeoutsRemaining => x.defteam_timeouts_remaining as f64,
            Feature::ScoreDifferential => x.score_differential as f64,
            Feature::PosteamSpread => x.posteam_spread,
        }
    }

    /// Overwrite this covariate in `x`. Integer covariates are rounded.
    pub fn set(self, x: &mut GameState, v: f64) {
        let i = v.round() as i32;
        match self {
            Feature::Yardline100 => x.yardline_100 = i,
            Feature::Down => x.down = i,
            Feature::Ydstogo => x.ydstogo = i,
            Feature::HalfSecondsRemaining => x.half_seconds_remaining = v,
            Feature::GameSecondsRemaining => x.game_seconds_remaining = v,
            Feature::Era => x.era = i,
            Feature::PosteamTimeoutsRemaining => x.posteam_timeouts_remaining = i,
            Feature::DefteamTimeoutsRemaining => x.defteam_timeouts_remaining = i,
            Feature::ScoreDifferential => x.score_differential = i,
            Feature::PosteamSpread => x.posteam_spread = v,
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Feature::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature `{s}`")))
    }
}
