//! Gradient-boosted decision trees.
//!
//! Two objectives are supported: weighted multiclass softmax over the five
//! drive outcomes (one tree per class per round) and weighted squared error
//! on drive points, the latter optionally with per-feature monotone
//! constraints. Row weights multiply every gradient and hessian
//! contribution; rows of weight zero are dropped before training, so they
//! cannot influence the model in any way.

mod tree;
mod tune;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{DriveOutcome, ProbVector, NUM_OUTCOMES};
use crate::error::{Error, Result};
use crate::features::Feature;
use crate::ingest::{GameState, PlayDataset};
use crate::rng::{stream, Purpose};

pub use tree::{best_split, grow_tree, leaf_weight, structure_score, Columns, GrowParams, Node, SplitCandidate, Tree};
pub use tune::{default_grid, tune_grid, TuneResult, TuneRow};

/// Version tag written into every model dump.
pub const FORMAT_VERSION: u32 = 1;

/// Floor applied to class rates before taking base logits.
const RATE_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    MulticlassSoftmax,
    SquaredError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub num_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub row_subsample: f64,
    pub col_subsample: f64,
    pub l2_leaf_penalty: f64,
    /// Feature name to direction: -1 decreasing, 1 increasing.
    pub monotone_constraints: BTreeMap<String, i8>,
    pub objective: Objective,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            num_rounds: 100,
            max_depth: 4,
            learning_rate: 0.1,
            min_child_weight: 1.0,
            row_subsample: 1.0,
            col_subsample: 1.0,
            l2_leaf_penalty: 1.0,
            monotone_constraints: BTreeMap::new(),
            objective: Objective::MulticlassSoftmax,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.max_depth == 0 {
            return bad("max_depth must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(self.min_child_weight >= 0.0) {
            return bad(format!("min_child_weight must be >= 0, got {}", self.min_child_weight));
        }
        for (name, v) in [("row_subsample", self.row_subsample), ("col_subsample", self.col_subsample)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("{name} must lie in (0, 1], got {v}"));
            }
        }
        if !(self.l2_leaf_penalty >= 0.0 && self.l2_leaf_penalty.is_finite()) {
            return bad(format!("l2_leaf_penalty must be >= 0, got {}", self.l2_leaf_penalty));
        }
        if self.objective == Objective::MulticlassSoftmax && self.monotone_constraints.values().any(|&c| c != 0) {
            return bad("monotone constraints require the squared_error objective".into());
        }
        Ok(())
    }

    /// Per-feature constraint directions aligned with `features`.
    fn constraint_vector(&self, features: &[Feature]) -> Result<Vec<i8>> {
        let mut out = vec![0i8; features.len()];
        for (name, &dir) in &self.monotone_constraints {
            if !matches!(dir, -1..=1) {
                return Err(Error::Config(format!("constraint on `{name}` must be -1, 0 or 1, got {dir}")));
            }
            let f: Feature = name.parse()?;
            let Some(j) = features.iter().position(|&g| g == f) else {
                return Err(Error::Config(format!("constraint on `{name}`, which is not a model feature")));
            };
            out[j] = dir;
        }
        Ok(out)
    }
}

/// Constraints for the points regression: EP falls with distance to goal,
/// yards to go, spread and defensive timeouts, and rises with offensive
/// timeouts.
pub fn default_monotone_constraints() -> BTreeMap<String, i8> {
    [
        (Feature::Yardline100, -1),
        (Feature::Ydstogo, -1),
        (Feature::PosteamSpread, -1),
        (Feature::DefteamTimeoutsRemaining, -1),
        (Feature::PosteamTimeoutsRemaining, 1),
    ]
    .into_iter()
    .map(|(f, d)| (f.name().to_string(), d))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub format_version: u32,
    pub objective: Objective,
    pub features: Vec<Feature>,
    /// Per-class logits (multiclass) or the single global mean (regression).
    pub base_score: Vec<f64>,
    /// `trees[round][class]`.
    pub trees: Vec<Vec<Tree>>,
    pub params: GbdtParams,
}

impl GbdtModel {
    pub fn num_rounds(&self) -> usize {
        self.trees.len()
    }

    pub fn feature_row(&self, x: &GameState) -> Vec<f64> {
        self.features.iter().map(|f| f.value(x)).collect()
    }

    /// Raw scores using the first `rounds` rounds.
    pub fn raw_scores(&self, row: &[f64], rounds: usize) -> Vec<f64> {
        let mut s = self.base_score.clone();
        for round in self.trees.iter().take(rounds) {
            for (v, t) in s.iter_mut().zip(round) {
                *v += t.predict(row);
            }
        }
        s
    }

    fn expect(&self, objective: Objective) -> Result<()> {
        if self.objective != objective {
            return Err(Error::ObjectiveMismatch(format!(
                "model objective is {:?}, call requires {objective:?}",
                self.objective
            )));
        }
        Ok(())
    }

    pub fn predict_probs(&self, x: &GameState) -> Result<ProbVector> {
        self.predict_probs_at(x, self.num_rounds())
    }

    /// Class probabilities from the first `rounds` rounds only.
    pub fn predict_probs_at(&self, x: &GameState, rounds: usize) -> Result<ProbVector> {
        self.expect(Objective::MulticlassSoftmax)?;
        let s = self.raw_scores(&self.feature_row(x), rounds);
        let mut z = [0.0; NUM_OUTCOMES];
        z.copy_from_slice(&s);
        Ok(ProbVector::softmax(&z))
    }

    pub fn predict_value(&self, x: &GameState) -> Result<f64> {
        self.expect(Objective::SquaredError)?;
        let v = self.raw_scores(&self.feature_row(x), self.num_rounds())[0];
        if !v.is_finite() {
            return Err(Error::Data(format!("non-finite regression prediction {v}")));
        }
        Ok(v)
    }

    /// The same model cut back to its first `rounds` rounds.
    pub fn truncated(&self, rounds: usize) -> GbdtModel {
        let mut m = self.clone();
        m.trees.truncate(rounds);
        m.params.num_rounds = m.trees.len();
        m
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: GbdtModel = serde_json::from_str(s)?;
        if m.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported tree dump version {} (expected {FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }
}

enum Target<'a> {
    Classes(&'a [DriveOutcome]),
    Values(&'a [f64]),
}

fn check_features(features: &[Feature]) -> Result<()> {
    if features.is_empty() {
        return Err(Error::Config("boosted trees need at least one feature".into()));
    }
    for (i, f) in features.iter().enumerate() {
        if features[..i].contains(f) {
            return Err(Error::Config(format!("feature `{f}` listed twice")));
        }
    }
    Ok(())
}

fn fit_rows(
    states: &[&GameState],
    target: Target<'_>,
    weights: &[f64],
    features: &[Feature],
    params: &GbdtParams,
) -> Result<GbdtModel> {
    params.validate()?;
    check_features(features)?;
    let monotone = params.constraint_vector(features)?;
    let n_all = states.len();
    let target_len = match target {
        Target::Classes(y) => y.len(),
        Target::Values(y) => y.len(),
    };
    if target_len != n_all || weights.len() != n_all {
        return Err(Error::Data(format!(
            "{n_all} rows but {target_len} targets and {} weights",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
        return Err(Error::Data("weights must be finite and non-negative".into()));
    }
    let keep: Vec<usize> = (0..n_all).filter(|&i| weights[i] > 0.0).collect();
    if keep.is_empty() {
        return Err(Error::Data("cannot fit boosted trees on an empty dataset".into()));
    }
    let n = keep.len();
    let w: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();
    let total: f64 = w.iter().sum();
    let cols = Columns::new(
        features
            .iter()
            .map(|f| keep.iter().map(|&i| f.value(states[i])).collect())
            .collect(),
    );

    let (objective, k, base_score, labels, values) = match target {
        Target::Classes(y) => {
            let labels: Vec<usize> = keep.iter().map(|&i| y[i].index()).collect();
            let mut mass = [0.0; NUM_OUTCOMES];
            for (&c, &wi) in labels.iter().zip(&w) {
                mass[c] += wi;
            }
            if mass.iter().filter(|&&m| m > 0.0).count() < 2 {
                return Err(Error::Data("multiclass training data contains a single outcome class".into()));
            }
            let base = mass.iter().map(|m| (m / total).max(RATE_FLOOR).ln()).collect();
            (Objective::MulticlassSoftmax, NUM_OUTCOMES, base, labels, Vec::new())
        }
        Target::Values(y) => {
            let vals: Vec<f64> = keep.iter().map(|&i| y[i]).collect();
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data("regression target must be finite".into()));
            }
            let mean = vals.iter().zip(&w).map(|(v, wi)| v * wi).sum::<f64>() / total;
            (Objective::SquaredError, 1, vec![mean], Vec::new(), vals)
        }
    };
    if objective != params.objective {
        return Err(Error::ObjectiveMismatch(format!(
            "params request {:?} but the fit is {objective:?}",
            params.objective
        )));
    }

    let grow = GrowParams {
        max_depth: params.max_depth,
        min_child_weight: params.min_child_weight,
        l2: params.l2_leaf_penalty,
        learning_rate: params.learning_rate,
    };
    let nfeat = features.len();
    let ncols_per_tree = ((params.col_subsample * nfeat as f64).round() as usize).clamp(1, nfeat);
    let mut scores: Vec<f64> = (0..n).flat_map(|_| base_score.iter().copied()).collect();
    let mut trees = Vec::with_capacity(params.num_rounds);
    let mut grad = vec![0.0; n * k];
    let mut hess = vec![0.0; n * k];

    for r in 0..params.num_rounds {
        let mut rng = stream(params.seed, Purpose::Gbdt, &[r as u64]);
        let active: Vec<bool> = if params.row_subsample < 1.0 {
            (0..n).map(|_| rng.gen::<f64>() < params.row_subsample).collect()
        } else {
            vec![true; n]
        };
        let tree_features: Vec<Vec<usize>> = (0..k)
            .map(|_| {
                let mut f: Vec<usize> = if ncols_per_tree < nfeat {
                    rand::seq::index::sample(&mut rng, nfeat, ncols_per_tree).into_vec()
                } else {
                    (0..nfeat).collect()
                };
                f.sort_unstable();
                f
            })
            .collect();

        // Gradients laid out class-major: grad[c * n + i].
        match objective {
            Objective::MulticlassSoftmax => {
                for i in 0..n {
                    let z = &scores[i * k..(i + 1) * k];
                    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
                    let sum: f64 = e.iter().sum();
                    for c in 0..k {
                        let p = e[c] / sum;
                        let y = if labels[i] == c { 1.0 } else { 0.0 };
                        grad[c * n + i] = w[i] * (p - y);
                        hess[c * n + i] = w[i] * (2.0 * p * (1.0 - p)).max(1e-16);
                    }
                }
            }
            Objective::SquaredError => {
                for i in 0..n {
                    grad[i] = w[i] * (scores[i] - values[i]);
                    hess[i] = w[i];
                }
            }
        }

        let round: Vec<Tree> = (0..k)
            .map(|c| {
                grow_tree(
                    &cols,
                    &grad[c * n..(c + 1) * n],
                    &hess[c * n..(c + 1) * n],
                    &active,
                    &tree_features[c],
                    &monotone,
                    grow,
                )
            })
            .collect();
        for i in 0..n {
            let row = cols.row(i);
            for (c, t) in round.iter().enumerate() {
                scores[i * k + c] += t.predict(&row);
            }
        }
        trees.push(round);
    }

    Ok(GbdtModel {
        format_version: FORMAT_VERSION,
        objective,
        features: features.to_vec(),
        base_score,
        trees,
        params: params.clone(),
    })
}

/// Multiclass fit on explicit rows.
pub fn fit_gbdt_rows(
    states: &[&GameState],
    outcomes: &[DriveOutcome],
    weights: &[f64],
    features: &[Feature],
    params: &GbdtParams,
) -> Result<GbdtModel> {
    fit_rows(states, Target::Classes(outcomes), weights, features, params)
}

/// Multiclass softmax fit on a dataset's plays, using its play weights.
pub fn fit_gbdt(ds: &PlayDataset, features: &[Feature], params: &GbdtParams) -> Result<GbdtModel> {
    let states: Vec<&GameState> = ds.plays().iter().map(|p| &p.state).collect();
    let y: Vec<DriveOutcome> = ds.plays().iter().map(|p| p.outcome_drive).collect();
    fit_gbdt_rows(&states, &y, ds.weights(), features, params)
}

/// Squared-error fit on explicit rows and targets.
pub fn fit_gbdt_regression_rows(
    states: &[&GameState],
    target: &[f64],
    weights: &[f64],
    features: &[Feature],
    params: &GbdtParams,
) -> Result<GbdtModel> {
    fit_rows(states, Target::Values(target), weights, features, params)
}

/// Monotone squared-error regression of drive points on the outcome-model
/// features. An empty constraint map is replaced by
/// [`default_monotone_constraints`].
pub fn fit_gbdt_regression_monotone(ds: &PlayDataset, params: &GbdtParams) -> Result<GbdtModel> {
    if params.objective != Objective::SquaredError {
        return Err(Error::ObjectiveMismatch("monotone regression needs objective = squared_error".into()));
    }
    let mut params = params.clone();
    if params.monotone_constraints.is_empty() {
        params.monotone_constraints = default_monotone_constraints();
    }
    let states: Vec<&GameState> = ds.plays().iter().map(|p| &p.state).collect();
    let y: Vec<f64> = ds.plays().iter().map(|p| p.outcome_drive.points() as f64).collect();
    fit_gbdt_regression_rows(&states, &y, ds.weights(), &Feature::outcome_model_set(), &params)
}

/// Weighted mean multiclass logloss (natural log, probabilities floored at
/// 1e-15) of `model` after `rounds` rounds.
pub fn weighted_logloss(model: &GbdtModel, ds: &PlayDataset, rounds: usize) -> Result<f64> {
    let mut num = 0.0;
    for (p, &w) in ds.plays().iter().zip(ds.weights()) {
        let probs = model.predict_probs_at(&p.state, rounds)?;
        num -= w * probs.get(p.outcome_drive).max(1e-15).ln();
    }
    Ok(num / ds.total_weight())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::test_support::{dataset, state};
    use crate::ingest::WeightingScheme;

    fn league(n_drives: usize, seed: u64) -> PlayDataset {
        // Single-play drives with outcome depending on yardline and spread.
        let mut rng = stream(seed, Purpose::Synth, &[]);
        let lengths = vec![1; n_drives];
        let ds = dataset(&lengths);
        let plays: Vec<_> = ds
            .plays()
            .iter()
            .map(|p| {
                let mut p = p.clone();
                p.state.yardline_100 = rng.gen_range(1..=99);
                p.state.posteam_spread = rng.gen_range(-10..=10) as f64;
                let u: f64 = rng.gen();
                let td = 0.6 - 0.005 * p.state.yardline_100 as f64 - 0.01 * p.state.posteam_spread;
                p.outcome_drive = if u < td {
                    DriveOutcome::Touchdown
                } else if u < td + 0.15 {
                    DriveOutcome::FieldGoal
                } else if u < 0.97 {
                    DriveOutcome::NoScore
                } else {
                    DriveOutcome::OppTouchdown
                };
                p
            })
            .collect();
        PlayDataset::from_plays(plays).unwrap()
    }

    fn feats() -> Vec<Feature> {
        vec![Feature::Yardline100, Feature::PosteamSpread, Feature::Down]
    }

    #[test]
    fn zero_rounds_predicts_weighted_base_rates() {
        let ds = dataset(&[3, 1, 2, 4, 1]);
        let params = GbdtParams {
            num_rounds: 0,
            ..Default::default()
        };
        let m = fit_gbdt(&ds, &feats(), &params).unwrap();
        let mut rates = [0.0; 5];
        for (p, w) in ds.plays().iter().zip(ds.weights()) {
            rates[p.outcome_drive.index()] += w / ds.total_weight();
        }
        for y in [1, 50, 99] {
            let p = m.predict_probs(&state(y)).unwrap();
            for k in 0..5 {
                assert!((p.as_array()[k] - rates[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn training_logloss_non_increasing() {
        let ds = league(400, 1);
        let params = GbdtParams {
            num_rounds: 40,
            learning_rate: 0.3,
            max_depth: 3,
            ..Default::default()
        };
        let m = fit_gbdt(&ds, &feats(), &params).unwrap();
        let trace: Vec<f64> = (0..=40).map(|r| weighted_logloss(&m, &ds, r).unwrap()).collect();
        for w in trace.windows(2) {
            assert!(w[1] <= w[0], "{trace:?}");
        }
        assert!(trace[40] < trace[0] - 0.01);
    }

    #[test]
    fn unit_and_inverse_weights_agree_on_single_play_drives() {
        let ds = league(200, 2);
        let params = GbdtParams {
            num_rounds: 5,
            ..Default::default()
        };
        let a = fit_gbdt(&ds.with_weights(WeightingScheme::Unit), &feats(), &params).unwrap();
        let b = fit_gbdt(&ds.with_weights(WeightingScheme::InverseDriveLength), &feats(), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_with_subsampling() {
        let ds = league(300, 3);
        let params = GbdtParams {
            num_rounds: 6,
            row_subsample: 0.7,
            col_subsample: 0.5,
            seed: 11,
            ..Default::default()
        };
        let a = fit_gbdt(&ds, &feats(), &params).unwrap();
        let b = fit_gbdt(&ds, &feats(), &params).unwrap();
        assert_eq!(a, b);
        let c = fit_gbdt(&ds, &feats(), &GbdtParams { seed: 12, ..params }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_weight_rows_are_inert() {
        let ds = league(200, 4);
        let params = GbdtParams {
            num_rounds: 5,
            ..Default::default()
        };
        let states: Vec<&GameState> = ds.plays().iter().map(|p| &p.state).collect();
        let y: Vec<DriveOutcome> = ds.plays().iter().map(|p| p.outcome_drive).collect();
        let mut w = ds.weights().to_vec();
        let a = fit_gbdt_rows(&states[..100], &y[..100], &w[..100], &feats(), &params).unwrap();
        for v in &mut w[100..] {
            *v = 0.0;
        }
        let b = fit_gbdt_rows(&states, &y, &w, &feats(), &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn errors() {
        let one_class = dataset(&[1, 1, 1]).filter_plays(|p| p.outcome_drive == DriveOutcome::Touchdown).0;
        assert!(matches!(
            fit_gbdt(&one_class, &feats(), &GbdtParams::default()),
            Err(Error::Data(_))
        ));
        assert!(fit_gbdt(&PlayDataset::empty(), &feats(), &GbdtParams::default()).is_err());
        let constrained = GbdtParams {
            monotone_constraints: default_monotone_constraints(),
            ..Default::default()
        };
        assert!(matches!(
            fit_gbdt(&dataset(&[1, 1, 1]), &feats(), &constrained),
            Err(Error::Config(_))
        ));
        let unknown = GbdtParams {
            objective: Objective::SquaredError,
            monotone_constraints: [("speed".to_string(), -1)].into(),
            ..Default::default()
        };
        assert!(matches!(
            fit_gbdt_regression_monotone(&dataset(&[1, 1, 1]), &unknown),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn objective_mismatch_on_predict() {
        let ds = league(50, 5);
        let m = fit_gbdt(&ds, &feats(), &GbdtParams { num_rounds: 1, ..Default::default() }).unwrap();
        assert!(matches!(m.predict_value(&state(20)), Err(Error::ObjectiveMismatch(_))));
    }

    #[test]
    fn single_tree_prediction_is_base_plus_leaf() {
        let ds = league(300, 6);
        let params = GbdtParams {
            num_rounds: 1,
            max_depth: 2,
            objective: Objective::SquaredError,
            ..Default::default()
        };
        let m = fit_gbdt_regression_monotone(&ds, &params).unwrap();
        let x = state(80);
        let row = m.feature_row(&x);
        // Trace the route by hand.
        let t = &m.trees[0][0];
        let mut i = 0;
        let leaf = loop {
            match &t.nodes[i] {
                Node::Leaf { value } => break *value,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[*feature] < *threshold { *left } else { *right }
                }
            }
        };
        assert_eq!(m.predict_value(&x).unwrap(), m.base_score[0] + leaf);
    }

    #[test]
    fn constant_target_gives_constant_prediction() {
        let ds = dataset(&[2, 3, 1, 4]).filter_plays(|p| p.outcome_drive != DriveOutcome::Touchdown).0;
        let mut plays = ds.plays().to_vec();
        for p in &mut plays {
            p.outcome_drive = DriveOutcome::FieldGoal;
        }
        let ds = PlayDataset::from_plays(plays).unwrap();
        let params = GbdtParams {
            objective: Objective::SquaredError,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let m = fit_gbdt_regression_monotone(&ds, &params).unwrap();
        for y in [1, 40, 99] {
            assert_eq!(m.predict_value(&state(y)).unwrap(), 3.0);
        }
    }

    #[test]
    fn monotone_probe() {
        let ds = league(800, 7);
        let params = GbdtParams {
            num_rounds: 30,
            max_depth: 4,
            objective: Objective::SquaredError,
            min_child_weight: 0.0,
            ..Default::default()
        };
        let m = fit_gbdt_regression_monotone(&ds, &params).unwrap();
        let sweep: Vec<f64> = (1..=99)
            .map(|y| m.predict_value(&state(y)).unwrap())
            .collect();
        assert!(sweep.windows(2).all(|w| w[1] <= w[0]));
        assert!(sweep[0] > sweep[98], "model learned nothing");
        let to: Vec<f64> = (0..=3)
            .map(|t| {
                let mut x = state(50);
                x.posteam_timeouts_remaining = t;
                m.predict_value(&x).unwrap()
            })
            .collect();
        assert!(to.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let ds = league(300, 8);
        let m = fit_gbdt(&ds, &feats(), &GbdtParams { num_rounds: 4, ..Default::default() }).unwrap();
        let back = GbdtModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m, back);
        for y in 1..=99 {
            let a = m.predict_probs(&state(y)).unwrap();
            let b = back.predict_probs(&state(y)).unwrap();
            assert_eq!(a.as_array().map(f64::to_bits), b.as_array().map(f64::to_bits));
        }
        let mut bumped: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        bumped["format_version"] = 99.into();
        assert!(GbdtModel::from_json(&bumped.to_string()).is_err());
    }

    #[test]
    fn probabilities_sum_to_one() {
        let ds = league(300, 9);
        let m = fit_gbdt(&ds, &feats(), &GbdtParams { num_rounds: 10, ..Default::default() }).unwrap();
        let mut rng = stream(9, Purpose::Synth, &[1]);
        for _ in 0..1000 {
            let mut x = state(rng.gen_range(1..=99));
            x.posteam_spread = rng.gen_range(-15.0..15.0);
            x.down = rng.gen_range(1..=4);
            let s: f64 = m.predict_probs(&x).unwrap().as_array().iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
