//! Training strategies for clustered plays.
//!
//! Every strategy delegates the actual learning to a [`FitterSpec`] and
//! only decides which rows the learner sees and with what weights.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::DriveOutcome;
use crate::error::{Error, Result};
use crate::ingest::{GameState, PlayDataset, WeightingScheme};
use crate::model::{FitterSpec, OutcomeModel};
use crate::rng::{derive_seed, stream, Purpose};

/// Fit with every play weighted 1.
pub fn fit_unweighted(train: &PlayDataset, fitter: &FitterSpec, seed: u64) -> Result<OutcomeModel> {
    fitter.fit(&train.with_weights(WeightingScheme::Unit), seed)
}

/// Fit with each play weighted by the inverse length of its drive.
pub fn fit_weighted(train: &PlayDataset, fitter: &FitterSpec, seed: u64) -> Result<OutcomeModel> {
    fitter.fit(&train.with_weights(WeightingScheme::InverseDriveLength), seed)
}

/// Plays chosen for member `m` of an averaged-subsample fit.
pub fn subsample_plays(train: &PlayDataset, seed: u64, m: usize) -> Vec<usize> {
    train.one_play_per_drive(&mut stream(seed, Purpose::Subsample, &[m as u64]))
}

/// Fit `m` members, each on one uniformly drawn play per drive, and average
/// their predictions.
pub fn fit_averaged_subsample(train: &PlayDataset, m: usize, fitter: &FitterSpec, seed: u64) -> Result<OutcomeModel> {
    if m == 0 {
        return Err(Error::Config("averaged subsample needs at least one member".into()));
    }
    let members = (0..m)
        .into_par_iter()
        .map(|i| {
            let rows = subsample_plays(train, seed, i);
            let states: Vec<&GameState> = rows.iter().map(|&r| &train.plays()[r].state).collect();
            let y: Vec<DriveOutcome> = rows.iter().map(|&r| train.plays()[r].outcome_drive).collect();
            fitter
                .fit_rows(&states, &y, &vec![1.0; rows.len()], derive_seed(seed, Purpose::Subsample, &[i as u64, 1]))
                .map_err(|e| Error::Member {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeModel::Averaged { members })
}

fn default_m_synth() -> usize {
    20_000
}

/// Settings of a catalytic-prior fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalyticConfig {
    /// Minimum number of synthetic rows; whole drives are added until it is
    /// reached.
    #[serde(default = "default_m_synth")]
    pub m_synth: usize,
    /// Total synthetic weight as a multiple of the total observed weight.
    pub phi: f64,
    pub prior: FitterSpec,
    pub target: FitterSpec,
    /// Weights of the observed rows.
    #[serde(default)]
    pub weighting: WeightingScheme,
    /// Draw one outcome per synthetic drive (from the prior at its first
    /// play) instead of one per synthetic play.
    #[serde(default)]
    pub drive_shared_outcomes: bool,
    #[serde(default)]
    pub seed: u64,
}

impl CatalyticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return Err(Error::Config(format!("phi must be a finite value >= 0, got {}", self.phi)));
        }
        if self.m_synth < 1 {
            return Err(Error::Config("m_synth must be at least 1".into()));
        }
        Ok(())
    }
}

/// Imputed rows. States are copies of observed plays.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticRows {
    pub states: Vec<GameState>,
    pub outcomes: Vec<DriveOutcome>,
    /// Observed play each synthetic row copies.
    pub source_play: Vec<usize>,
    /// Synthetic drive each row belongs to.
    pub synthetic_drive: Vec<usize>,
}

impl SyntheticRows {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Resample observed drives whole until at least `cfg.m_synth` rows exist,
/// then draw outcomes from `prior`.
pub fn synthesize(train: &PlayDataset, prior: &OutcomeModel, cfg: &CatalyticConfig) -> Result<SyntheticRows> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("cannot synthesize rows from an empty dataset".into()));
    }
    let mut rng = stream(cfg.seed, Purpose::Catalytic, &[1]);
    let mut source_play = Vec::with_capacity(cfg.m_synth);
    let mut synthetic_drive = Vec::with_capacity(cfg.m_synth);
    let mut d = 0;
    while source_play.len() < cfg.m_synth {
        let span = &train.drives()[rng.gen_range(0..train.num_drives())];
        source_play.extend(span.rows());
        synthetic_drive.extend(std::iter::repeat_n(d, span.len));
        d += 1;
    }
    let states: Vec<GameState> = source_play.iter().map(|&i| train.plays()[i].state.clone()).collect();

    let draw = |counter: u64, x: &GameState| -> Result<DriveOutcome> {
        let u: f64 = stream(cfg.seed, Purpose::Catalytic, &[2, counter]).gen();
        Ok(prior.predict_probs(x)?.sample(u))
    };
    let outcomes: Vec<DriveOutcome> = if cfg.drive_shared_outcomes {
        let mut firsts = vec![0usize];
        firsts.extend((1..states.len()).filter(|&r| synthetic_drive[r] != synthetic_drive[r - 1]));
        let per_drive = firsts
            .par_iter()
            .map(|&r| draw(synthetic_drive[r] as u64, &states[r]))
            .collect::<Result<Vec<_>>>()?;
        synthetic_drive.iter().map(|&d| per_drive[d]).collect()
    } else {
        states
            .par_iter()
            .enumerate()
            .map(|(r, x)| draw(r as u64, x))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(SyntheticRows {
        states,
        outcomes,
        source_play,
        synthetic_drive,
    })
}

/// Weight of each of `n_synthetic` rows so that together they carry `phi`
/// times the observed weight `observed_weight`.
pub fn synthetic_row_weight(phi: f64, observed_weight: f64, n_synthetic: usize) -> f64 {
    phi * observed_weight / n_synthetic as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalyticReport {
    pub phi: f64,
    pub m_synth: usize,
    pub n_observed: usize,
    pub n_synthetic: usize,
    pub n_synthetic_drives: usize,
    pub observed_weight: f64,
    /// Weight of each synthetic row, `phi * W / n_synthetic`.
    pub synthetic_row_weight: f64,
    pub synthetic_weight: f64,
    /// `synthetic_weight / observed_weight`; equals `phi` up to rounding.
    pub weight_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct CatalyticFit {
    pub model: OutcomeModel,
    pub prior: OutcomeModel,
    pub report: CatalyticReport,
}

/// Fit `cfg.target` on the observed plays plus prior-imputed synthetic
/// plays carrying a `phi` share of the observed weight.
pub fn catalytic_fit(train: &PlayDataset, cfg: &CatalyticConfig) -> Result<CatalyticFit> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Data("catalytic fit needs a non-empty training set".into()));
    }
    let observed = train.with_weights(cfg.weighting);
    let prior = cfg
        .prior
        .fit(&observed, derive_seed(cfg.seed, Purpose::Catalytic, &[0]))?;
    let synth = synthesize(&observed, &prior, cfg)?;

    let big_w = observed.total_weight();
    let n_syn = synth.len();
    let row_w = synthetic_row_weight(cfg.phi, big_w, n_syn);

    let mut states: Vec<&GameState> = observed.plays().iter().map(|p| &p.state).collect();
    let mut y: Vec<DriveOutcome> = observed.plays().iter().map(|p| p.outcome_drive).collect();
    let mut w: Vec<f64> = observed.weights().to_vec();
    states.extend(synth.states.iter());
    y.extend(&synth.outcomes);
    w.extend(std::iter::repeat_n(row_w, n_syn));

    let model = cfg.target.fit_rows(&states, &y, &w, cfg.seed)?;
    let synthetic_weight: f64 = w[observed.num_plays()..].iter().sum();
    let report = CatalyticReport {
        phi: cfg.phi,
        m_synth: cfg.m_synth,
        n_observed: observed.num_plays(),
        n_synthetic: n_syn,
        n_synthetic_drives: synth.synthetic_drive.last().map_or(0, |d| d + 1),
        observed_weight: big_w,
        synthetic_row_weight: row_w,
        synthetic_weight,
        weight_ratio: synthetic_weight / big_w,
    };
    log::info!(
        "catalytic fit: {} observed rows, {} synthetic rows at weight {:.3e} (ratio {:.6})",
        report.n_observed,
        report.n_synthetic,
        row_w,
        report.weight_ratio
    );
    Ok(CatalyticFit { model, prior, report })
}

/// A complete training strategy, as named in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainerSpec {
    Unweighted { fitter: FitterSpec },
    Weighted { fitter: FitterSpec },
    AveragedSubsample { fitter: FitterSpec, m: usize },
    Catalytic(CatalyticConfig),
}

impl TrainerSpec {
    pub fn fit(&self, train: &PlayDataset, seed: u64) -> Result<OutcomeModel> {
        match self {
            TrainerSpec::Unweighted { fitter } => fit_unweighted(train, fitter, seed),
            TrainerSpec::Weighted { fitter } => fit_weighted(train, fitter, seed),
            TrainerSpec::AveragedSubsample { fitter, m } => fit_averaged_subsample(train, *m, fitter, seed),
            TrainerSpec::Catalytic(cfg) => {
                let cfg = CatalyticConfig { seed, ..cfg.clone() };
                Ok(catalytic_fit(train, &cfg)?.model)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Feature;
    use crate::gbdt::GbdtParams;
    use crate::ingest::test_support::{dataset, state};

    fn gbdt(rounds: usize) -> FitterSpec {
        FitterSpec::Gbdt {
            params: GbdtParams {
                num_rounds: rounds,
                min_child_weight: 0.1,
                ..Default::default()
            },
            features: vec![Feature::Yardline100, Feature::Down],
        }
    }

    fn varied(lengths: &[usize]) -> PlayDataset {
        let ds = dataset(lengths);
        let plays = ds
            .plays()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut p = p.clone();
                p.state.yardline_100 = 1 + (i as i32 * 29) % 99;
                p
            })
            .collect();
        PlayDataset::from_plays(plays).unwrap()
    }

    fn probs(m: &OutcomeModel) -> Vec<[f64; 5]> {
        (1..=99).map(|y| *m.predict_probs(&state(y)).unwrap().as_array()).collect()
    }

    #[test]
    fn unweighted_equals_weighted_on_single_play_drives() {
        let ds = varied(&[1; 40]);
        let a = fit_unweighted(&ds, &gbdt(3), 1).unwrap();
        let b = fit_weighted(&ds, &gbdt(3), 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn averaged_single_member_and_mean() {
        let ds = varied(&[3, 1, 4, 1, 5, 2, 6, 3, 2, 1, 4, 2]);
        let fitter = FitterSpec::linear_mlr(vec![Feature::Yardline100]);
        let one = fit_averaged_subsample(&ds, 1, &fitter, 3).unwrap();
        let OutcomeModel::Averaged { members } = &one else { panic!() };
        assert_eq!(probs(&one), probs(&members[0]));
        let three = fit_averaged_subsample(&ds, 3, &fitter, 3).unwrap();
        let OutcomeModel::Averaged { members } = &three else { panic!() };
        let got = probs(&three);
        let parts: Vec<_> = members.iter().map(probs).collect();
        for (i, g) in got.iter().enumerate() {
            for k in 0..5 {
                let mean = (parts[0][i][k] + parts[1][i][k] + parts[2][i][k]) / 3.0;
                assert!((g[k] - mean).abs() < 1e-12);
            }
        }
        assert!(fit_averaged_subsample(&ds, 0, &fitter, 3).is_err());
    }

    #[test]
    fn subsample_inclusion_rate() {
        let ds = dataset(&[4, 1, 10]);
        let m = 1000;
        let mut hits = 0;
        for i in 0..m {
            let rows = subsample_plays(&ds, 9, i);
            assert_eq!(rows.len(), 3);
            assert_eq!(rows[1], 4);
            hits += (rows[0] == 2) as usize;
        }
        let p = 0.25;
        let se = (p * (1.0 - p) / m as f64).sqrt();
        assert!((hits as f64 / m as f64 - p).abs() < 3.0 * se, "{hits}");
    }

    fn cat(phi: f64) -> CatalyticConfig {
        CatalyticConfig {
            m_synth: 500,
            phi,
            prior: FitterSpec::linear_mlr(vec![]),
            target: gbdt(4),
            weighting: WeightingScheme::InverseDriveLength,
            drive_shared_outcomes: false,
            seed: 5,
        }
    }

    #[test]
    fn phi_zero_matches_plain_fit() {
        let ds = varied(&[3, 1, 4, 1, 5, 2, 6, 3, 2, 1, 4, 2]);
        let fit = catalytic_fit(&ds, &cat(0.0)).unwrap();
        let plain = fit_weighted(&ds, &gbdt(4), 5).unwrap();
        assert_eq!(fit.model, plain);
        assert_eq!(fit.report.synthetic_weight, 0.0);
    }

    #[test]
    fn synthetic_weights() {
        let ds = varied(&[3, 1, 4, 1, 5, 2, 6, 3, 2, 1, 4, 2]);
        for phi in [0.25, 1.0, 4.0] {
            let r = catalytic_fit(&ds, &cat(phi)).unwrap().report;
            assert!(r.n_synthetic >= 500 && r.n_synthetic < 506);
            assert!((r.weight_ratio - phi).abs() < 1e-9);
            assert!((r.observed_weight - 12.0).abs() < 1e-12);
            assert_eq!(r.synthetic_row_weight, synthetic_row_weight(phi, r.observed_weight, r.n_synthetic));
        }
        assert_eq!(synthetic_row_weight(1.0, 100.0, 500), 0.2);
    }

    #[test]
    fn synthetic_rows_copy_observed_states_and_replay() {
        let ds = varied(&[3, 1, 4, 1, 5, 2, 6, 3, 2, 1, 4, 2]);
        let cfg = cat(1.0);
        let prior = FitterSpec::linear_mlr(vec![]).fit(&ds, 0).unwrap();
        let s = synthesize(&ds, &prior, &cfg).unwrap();
        for (x, &src) in s.states.iter().zip(&s.source_play) {
            assert_eq!(*x, ds.plays()[src].state);
        }
        // Whole drives, in play order.
        for w in s.source_play.windows(2).zip(s.synthetic_drive.windows(2)) {
            if w.1[0] == w.1[1] {
                assert_eq!(w.0[1], w.0[0] + 1);
            }
        }
        // Seed replay: row r's outcome is the prior draw from stream (seed, r).
        for r in [0, 17, s.len() - 1] {
            let u: f64 = stream(cfg.seed, Purpose::Catalytic, &[2, r as u64]).gen();
            assert_eq!(s.outcomes[r], prior.predict_probs(&s.states[r]).unwrap().sample(u));
        }
        assert_eq!(synthesize(&ds, &prior, &cfg).unwrap(), s);
        // Per-play draws disagree inside some drive; shared draws never do.
        let disagree = |s: &SyntheticRows| {
            (1..s.len()).any(|r| s.synthetic_drive[r] == s.synthetic_drive[r - 1] && s.outcomes[r] != s.outcomes[r - 1])
        };
        assert!(disagree(&s));
        let shared = synthesize(
            &ds,
            &prior,
            &CatalyticConfig {
                drive_shared_outcomes: true,
                ..cfg
            },
        )
        .unwrap();
        assert!(!disagree(&shared));
    }

    #[test]
    fn config_errors() {
        let ds = varied(&[2, 2]);
        assert!(matches!(catalytic_fit(&ds, &cat(-1.0)), Err(Error::Config(_))));
        let mut c = cat(1.0);
        c.m_synth = 0;
        assert!(matches!(catalytic_fit(&ds, &c), Err(Error::Config(_))));
    }

    #[test]
    fn trainer_spec_toml() {
        let t: TrainerSpec = toml::from_str(
            r#"
            kind = "catalytic"
            phi = 2.0
            prior = { kind = "mlr", recipe = { kind = "linear", features = ["posteam_spread"] } }
            target = { kind = "gbdt" }
            "#,
        )
        .unwrap();
        let TrainerSpec::Catalytic(c) = t else { panic!() };
        assert_eq!(c.m_synth, 20_000);
        assert_eq!(c.weighting, WeightingScheme::InverseDriveLength);
        assert!(!c.drive_shared_outcomes);
    }
}
