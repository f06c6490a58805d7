//! A synthetic league whose outcome model is known exactly.
//!
//! Each drive draws its first-play state, then its outcome from
//! [`true_probs`] at that state, then its length (optionally depending on
//! the outcome), and finally its remaining plays with the offense moving
//! toward the goal line and the clock running down. All plays of a drive
//! share the outcome.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DriveOutcome, ProbVector, NUM_OUTCOMES};
use crate::error::{Error, Result};
use crate::ingest::{EraRule, GameState, PlayDataset, PlayRecord, PlayType, WeightingScheme};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_drives: usize,
    pub seed: u64,
    /// Per-outcome logits are `intercept + yardline_coef * yardline_100 +
    /// spread_coef * posteam_spread`, in canonical outcome order.
    pub intercept: [f64; NUM_OUTCOMES],
    pub yardline_coef: [f64; NUM_OUTCOMES],
    pub spread_coef: [f64; NUM_OUTCOMES],
    /// Drive lengths are uniform on `1..=max_drive_length`.
    pub max_drive_length: usize,
    /// In `[0, 1)`. Drives that do not score have lengths uniform on
    /// `1..=round(max_drive_length * (1 - coupling))` instead, so scoring
    /// drives are longer on average. Zero decouples length from outcome.
    pub length_coupling: f64,
    /// Spreads are drawn uniformly from `spread_min, spread_min + step, ...,
    /// spread_max`.
    pub spread_min: f64,
    pub spread_max: f64,
    pub spread_step: f64,
    pub n_teams: usize,
    pub first_season: i32,
    pub last_season: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // Spread slopes proportional to minus the outcome points make the
        // true EP decrease in the spread.
        SynthConfig {
            n_drives: 2000,
            seed: 0,
            intercept: [1.2, 0.2, 0.0, -5.0, -3.5],
            yardline_coef: [-0.035, -0.02, 0.0, 0.02, 0.01],
            spread_coef: [-0.14, -0.06, 0.0, 0.04, 0.14],
            max_drive_length: 10,
            length_coupling: 0.0,
            spread_min: -10.0,
            spread_max: 10.0,
            spread_step: 0.5,
            n_teams: 32,
            first_season: 2010,
            last_season: 2022,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_drives == 0 {
            return bad("n_drives must be at least 1".into());
        }
        if self.max_drive_length == 0 {
            return bad("max_drive_length must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.length_coupling) {
            return bad(format!("length_coupling must lie in [0, 1), got {}", self.length_coupling));
        }
        if !(self.spread_step > 0.0 && self.spread_min <= self.spread_max) {
            return bad("spread grid needs spread_min <= spread_max and spread_step > 0".into());
        }
        if self.n_teams == 0 || self.first_season > self.last_season {
            return bad("need at least one team and first_season <= last_season".into());
        }
        let coefs = self.intercept.iter().chain(&self.yardline_coef).chain(&self.spread_coef);
        if coefs.into_iter().any(|c| !c.is_finite()) {
            return bad("true-model coefficients must be finite".into());
        }
        Ok(())
    }

    fn short_length(&self) -> usize {
        ((self.max_drive_length as f64 * (1.0 - self.length_coupling)).round() as usize).max(1)
    }

    fn spread_grid(&self) -> Vec<f64> {
        let n = ((self.spread_max - self.spread_min) / self.spread_step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.spread_min + i as f64 * self.spread_step).collect()
    }
}

/// The true outcome distribution at `x`.
pub fn true_probs(cfg: &SynthConfig, x: &GameState) -> ProbVector {
    let mut z = [0.0; NUM_OUTCOMES];
    for k in 0..NUM_OUTCOMES {
        z[k] = cfg.intercept[k] + cfg.yardline_coef[k] * x.yardline_100 as f64 + cfg.spread_coef[k] * x.posteam_spread;
    }
    ProbVector::softmax(&z)
}

fn is_scoring(o: DriveOutcome) -> bool {
    matches!(o, DriveOutcome::Touchdown | DriveOutcome::FieldGoal)
}

fn generate_drive(cfg: &SynthConfig, grid: &[f64], d: usize) -> Vec<PlayRecord> {
    let mut rng = stream(cfg.seed, Purpose::Synth, &[d as u64]);
    let team = rng.gen_range(0..cfg.n_teams);
    let season = rng.gen_range(cfg.first_season..=cfg.last_season);
    let spread = grid[rng.gen_range(0..grid.len())];
    let first_half = rng.gen_bool(0.5);
    let mut half_seconds = rng.gen_range(120..=1800) as f64;
    let pos_to = rng.gen_range(0..=3);
    let def_to = rng.gen_range(0..=3);
    let score_differential = rng.gen_range(-17..=17);
    let mut yardline: i32 = rng.gen_range(1..=99);

    let mut state = GameState {
        yardline_100: yardline,
        down: 1,
        ydstogo: 10,
        half_seconds_remaining: half_seconds,
        game_seconds_remaining: half_seconds + if first_half { 1800.0 } else { 0.0 },
        era: EraRule::era_of_season(season),
        posteam_timeouts_remaining: pos_to,
        defteam_timeouts_remaining: def_to,
        score_differential,
        posteam_spread: spread,
    };
    let outcome = true_probs(cfg, &state).sample(rng.gen());
    let max_len = if is_scoring(outcome) {
        cfg.max_drive_length
    } else {
        cfg.short_length()
    };
    let n = rng.gen_range(1..=max_len);

    let drive_id = format!("{:x}-{d}", cfg.seed);
    let mut plays = Vec::with_capacity(n);
    for j in 1..=n {
        if j > 1 {
            yardline = (yardline - rng.gen_range(0..=8)).max(1);
            half_seconds = (half_seconds - rng.gen_range(5..=40) as f64).max(0.0);
            state.yardline_100 = yardline;
            state.down = 1 + ((j - 1) % 4) as i32;
            state.ydstogo = if state.down == 1 { 10 } else { rng.gen_range(1..=15) };
            state.half_seconds_remaining = half_seconds;
            state.game_seconds_remaining = half_seconds + if first_half { 1800.0 } else { 0.0 };
        }
        let u: f64 = rng.gen();
        let play_type = if u < 0.55 {
            PlayType::Pass
        } else if u < 0.95 {
            PlayType::Run
        } else {
            PlayType::Other
        };
        plays.push(PlayRecord {
            drive_id: drive_id.clone(),
            play_index_in_drive: j as u32,
            state: state.clone(),
            posteam_id: format!("T{team:02}"),
            passer_or_rusher_id: Some(format!("T{team:02}-P{}", rng.gen_range(0..3))),
            play_type,
            outcome_drive: outcome,
            season,
        });
    }
    plays
}

/// Generate `cfg.n_drives` drives, each from its own random stream.
pub fn generate_league(cfg: &SynthConfig) -> Result<PlayDataset> {
    cfg.validate()?;
    let grid = cfg.spread_grid();
    let drives: Vec<Vec<PlayRecord>> = (0..cfg.n_drives)
        .into_par_iter()
        .map(|d| generate_drive(cfg, &grid, d))
        .collect();
    Ok(PlayDataset::from_drives(drives, WeightingScheme::default()))
}

/// True outcome distribution at the first play of every drive.
pub fn drive_truths(cfg: &SynthConfig, ds: &PlayDataset) -> Vec<ProbVector> {
    (0..ds.num_drives()).map(|d| true_probs(cfg, &ds.drive_plays(d)[0].state)).collect()
}
