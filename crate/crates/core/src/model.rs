//! Fitted outcome models and the fitter settings that produce them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DriveOutcome, ProbVector};
use crate::error::{Error, Result};
use crate::features::{Feature, FeatureRecipe, SplineRecipe};
use crate::gbdt::{fit_gbdt_rows, GbdtModel, GbdtParams};
use crate::ingest::{GameState, PlayDataset};
use crate::mlr::{MlrConfig, MlrModel};
use crate::rng::{derive_seed, Purpose};

/// Any fitted map from game state to drive-outcome probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeModel {
    Mlr(MlrModel),
    Gbdt(GbdtModel),
    /// Mean of members fit on one-play-per-drive subsamples.
    Averaged { members: Vec<OutcomeModel> },
}

impl OutcomeModel {
    pub fn predict_probs(&self, x: &GameState) -> Result<ProbVector> {
        match self {
            OutcomeModel::Mlr(m) => m.predict_probs(x),
            OutcomeModel::Gbdt(m) => m.predict_probs(x),
            OutcomeModel::Averaged { members } => {
                let ps = members.iter().map(|m| m.predict_probs(x)).collect::<Result<Vec<_>>>()?;
                if ps.is_empty() {
                    return Err(Error::Config("averaged model has no members".into()));
                }
                Ok(ProbVector::mean(&ps))
            }
        }
    }

    /// Probabilities at every play of `ds`, in row order. A failure names
    /// the offending play.
    pub fn predict_dataset(&self, ds: &PlayDataset) -> Result<Vec<ProbVector>> {
        ds.plays()
            .par_iter()
            .map(|p| {
                self.predict_probs(&p.state).map_err(|e| Error::Prediction {
                    play: format!("{}/{}", p.drive_id, p.play_index_in_drive),
                    source: Box::new(e),
                })
            })
            .collect()
    }

    pub fn expected_points(&self, x: &GameState) -> Result<f64> {
        Ok(self.predict_probs(x)?.expected_points())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Which logit design to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecipeKind {
    /// The spline-and-interaction design; knots frozen on the training rows.
    Spline,
    /// Intercept plus raw covariates.
    Linear { features: Vec<Feature> },
}

/// A learner and its hyperparameters, independent of how rows are weighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitterSpec {
    Mlr {
        recipe: RecipeKind,
        #[serde(default)]
        config: MlrConfig,
    },
    Gbdt {
        #[serde(default)]
        params: GbdtParams,
        #[serde(default = "Feature::outcome_model_set")]
        features: Vec<Feature>,
    },
}

impl FitterSpec {
    pub fn spline_mlr() -> Self {
        FitterSpec::Mlr {
            recipe: RecipeKind::Spline,
            config: MlrConfig::default(),
        }
    }

    pub fn linear_mlr(features: Vec<Feature>) -> Self {
        FitterSpec::Mlr {
            recipe: RecipeKind::Linear { features },
            config: MlrConfig::default(),
        }
    }

    pub fn gbdt(params: GbdtParams) -> Self {
        FitterSpec::Gbdt {
            params,
            features: Feature::outcome_model_set(),
        }
    }

    /// Fit on explicit rows. Zero-weight rows have no influence at all: the
    /// spline knots are frozen from positive-weight rows only and both
    /// learners drop zero-weight rows before fitting. `seed` feeds any
    /// randomness inside the learner.
    pub fn fit_rows(
        &self,
        states: &[&GameState],
        outcomes: &[DriveOutcome],
        weights: &[f64],
        seed: u64,
    ) -> Result<OutcomeModel> {
        match self {
            FitterSpec::Mlr { recipe, config } => {
                let recipe = match recipe {
                    RecipeKind::Linear { features } => FeatureRecipe::Linear {
                        features: features.clone(),
                    },
                    RecipeKind::Spline => FeatureRecipe::Spline(SplineRecipe::fit(
                        states.iter().zip(weights).filter(|(_, &w)| w > 0.0).map(|(s, _)| *s),
                    )?),
                };
                Ok(OutcomeModel::Mlr(MlrModel::fit(recipe, states, outcomes, weights, config)?))
            }
            FitterSpec::Gbdt { params, features } => {
                let params = GbdtParams {
                    seed: derive_seed(params.seed, Purpose::Gbdt, &[seed]),
                    ..params.clone()
                };
                Ok(OutcomeModel::Gbdt(fit_gbdt_rows(states, outcomes, weights, features, &params)?))
            }
        }
    }

    /// Fit on a dataset's plays with its current weights.
    pub fn fit(&self, ds: &PlayDataset, seed: u64) -> Result<OutcomeModel> {
        let states: Vec<&GameState> = ds.plays().iter().map(|p| &p.state).collect();
        let y: Vec<DriveOutcome> = ds.plays().iter().map(|p| p.outcome_drive).collect();
        self.fit_rows(&states, &y, ds.weights(), seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::test_support::{dataset, state};

    #[test]
    fn averaged_predicts_member_mean() {
        let ds = dataset(&[1, 2, 3, 1, 2, 3, 1]);
        let a = FitterSpec::linear_mlr(vec![Feature::Yardline100]).fit(&ds, 0).unwrap();
        let b = FitterSpec::gbdt(GbdtParams {
            num_rounds: 2,
            ..Default::default()
        })
        .fit(&ds, 0)
        .unwrap();
        let avg = OutcomeModel::Averaged {
            members: vec![a.clone(), b.clone()],
        };
        let x = state(40);
        let (pa, pb, pm) = (
            a.predict_probs(&x).unwrap(),
            b.predict_probs(&x).unwrap(),
            avg.predict_probs(&x).unwrap(),
        );
        for k in 0..5 {
            let want = (pa.as_array()[k] + pb.as_array()[k]) / 2.0;
            assert!((pm.as_array()[k] - want).abs() < 1e-15);
        }
    }

    #[test]
    fn json_round_trip() {
        let ds = dataset(&[1, 2, 3, 1, 2, 3, 1]);
        let m = FitterSpec::gbdt(GbdtParams {
            num_rounds: 3,
            ..Default::default()
        })
        .fit(&ds, 4)
        .unwrap();
        assert_eq!(OutcomeModel::from_json(&m.to_json().unwrap()).unwrap(), m);
    }

    #[test]
    fn fitter_spec_from_toml() {
        let spec: FitterSpec = toml::from_str(
            r#"
            kind = "gbdt"
            features = ["yardline_100", "posteam_spread"]
            [params]
            num_rounds = 7
            "#,
        )
        .unwrap();
        match spec {
            FitterSpec::Gbdt { params, features } => {
                assert_eq!(params.num_rounds, 7);
                assert_eq!(features, vec![Feature::Yardline100, Feature::PosteamSpread]);
            }
            other => panic!("{other:?}"),
        }
        let spec: FitterSpec = toml::from_str(r#"kind = "mlr"
recipe = { kind = "spline" }"#)
        .unwrap();
        assert_eq!(spec, FitterSpec::spline_mlr());
    }
}
