//! Play-by-play records grouped into drives.
//!
//! A [`PlayDataset`] stores plays drive-by-drive: the plays of one drive
//! occupy a contiguous row range, in play order. Per-play weights live
//! alongside and are always consistent with a [`WeightingScheme`].

mod config;
mod csv_io;
mod results;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::domain::DriveOutcome;
use crate::error::{Error, Result};
use crate::rng::{self, Purpose};

pub use config::{EraRule, IngestConfig};
pub use csv_io::{parse_play_csv, read_play_csv, write_play_csv, REQUIRED_COLUMNS};
pub use results::map_drive_result;

/// Game-state covariates of a single play.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    /// Yards from the opponent's end zone, 1..=99.
    pub yardline_100: i32,
    pub down: i32,
    pub ydstogo: i32,
    pub half_seconds_remaining: f64,
    pub game_seconds_remaining: f64,
    pub era: i32,
    pub posteam_timeouts_remaining: i32,
    pub defteam_timeouts_remaining: i32,
    /// Possessing team's score minus the opponent's.
    pub score_differential: i32,
    /// Pre-game point spread relative to the possessing team (negative = favored).
    pub posteam_spread: f64,
}

impl GameState {
    pub fn with_spread(&self, spread: f64) -> GameState {
        GameState {
            posteam_spread: spread,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlayType {
    Pass,
    Run,
    Other,
}

impl PlayType {
    pub fn label(self) -> &'static str {
        match self {
            PlayType::Pass => "pass",
            PlayType::Run => "run",
            PlayType::Other => "other",
        }
    }

    pub fn is_pass_or_run(self) -> bool {
        matches!(self, PlayType::Pass | PlayType::Run)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayRecord {
    pub drive_id: String,
    pub play_index_in_drive: u32,
    pub state: GameState,
    pub posteam_id: String,
    pub passer_or_rusher_id: Option<String>,
    pub play_type: PlayType,
    pub outcome_drive: DriveOutcome,
    pub season: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightingScheme {
    /// Every play weighs 1.
    Unit,
    /// Every play of a drive with `n` plays weighs `1/n`.
    #[default]
    InverseDriveLength,
}

/// Row range of one drive inside a [`PlayDataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveSpan {
    pub drive_id: String,
    pub start: usize,
    pub len: usize,
}

impl DriveSpan {
    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlayDataset {
    plays: Vec<PlayRecord>,
    drives: Vec<DriveSpan>,
    weights: Vec<f64>,
    scheme: WeightingScheme,
}

impl PlayDataset {
    /// Group plays into drives and validate drive invariants.
    ///
    /// Drives keep the order in which their first play appears; plays inside
    /// a drive are ordered by `play_index_in_drive`, which must run 1..=N.
    pub fn from_plays(plays: Vec<PlayRecord>) -> Result<Self> {
        let mut order: Vec<String> = Vec::new();
        let mut groups: HashMap<String, Vec<PlayRecord>> = HashMap::new();
        for play in plays {
            let entry = groups.entry(play.drive_id.clone()).or_insert_with(|| {
                order.push(play.drive_id.clone());
                Vec::new()
            });
            entry.push(play);
        }
        let mut grouped = Vec::with_capacity(order.len());
        for id in order {
            let mut drive = groups.remove(&id).expect("grouped drive");
            drive.sort_by_key(|p| p.play_index_in_drive);
            validate_drive(&id, &drive)?;
            grouped.push(drive);
        }
        Ok(Self::from_drives(grouped, WeightingScheme::default()))
    }

    /// Assemble from already validated, ordered drives.
    pub(crate) fn from_drives(drives: Vec<Vec<PlayRecord>>, scheme: WeightingScheme) -> Self {
        let mut plays = Vec::with_capacity(drives.iter().map(Vec::len).sum());
        let mut spans = Vec::with_capacity(drives.len());
        for drive in drives {
            if drive.is_empty() {
                continue;
            }
            spans.push(DriveSpan {
                drive_id: drive[0].drive_id.clone(),
                start: plays.len(),
                len: drive.len(),
            });
            plays.extend(drive);
        }
        let mut ds = PlayDataset {
            plays,
            drives: spans,
            weights: Vec::new(),
            scheme,
        };
        ds.weights = ds.weights_for(scheme);
        ds
    }

    pub fn empty() -> Self {
        Self::from_drives(Vec::new(), WeightingScheme::default())
    }

    pub fn plays(&self) -> &[PlayRecord] {
        &self.plays
    }

    pub fn drives(&self) -> &[DriveSpan] {
        &self.drives
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> WeightingScheme {
        self.scheme
    }

    pub fn num_plays(&self) -> usize {
        self.plays.len()
    }

    pub fn num_drives(&self) -> usize {
        self.drives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plays.is_empty()
    }

    pub fn drive_plays(&self, drive: usize) -> &[PlayRecord] {
        &self.plays[self.drives[drive].rows()]
    }

    /// Index of the drive owning each play.
    pub fn drive_of_play(&self) -> Vec<usize> {
        let mut out = vec![0; self.plays.len()];
        for (d, span) in self.drives.iter().enumerate() {
            out[span.rows()].iter_mut().for_each(|x| *x = d);
        }
        out
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    fn weights_for(&self, scheme: WeightingScheme) -> Vec<f64> {
        let mut w = vec![1.0; self.plays.len()];
        if scheme == WeightingScheme::InverseDriveLength {
            for span in &self.drives {
                let wi = 1.0 / span.len as f64;
                w[span.rows()].iter_mut().for_each(|x| *x = wi);
            }
        }
        w
    }

    /// Return a copy whose weights follow `scheme`.
    pub fn with_weights(&self, scheme: WeightingScheme) -> PlayDataset {
        let mut out = self.clone();
        out.weights = out.weights_for(scheme);
        out.scheme = scheme;
        out
    }

    /// Dataset made of the given drives, in the given order.
    pub fn select_drives(&self, drive_indices: &[usize]) -> PlayDataset {
        let drives = drive_indices
            .iter()
            .map(|&d| self.drive_plays(d).to_vec())
            .collect();
        Self::from_drives(drives, self.scheme)
    }

    /// One uniformly drawn play index per drive, in drive order.
    pub fn one_play_per_drive(&self, rng: &mut impl rand::Rng) -> Vec<usize> {
        self.drives
            .iter()
            .map(|span| span.start + rng.gen_range(0..span.len))
            .collect()
    }

    /// Keep plays satisfying `keep`, renumbering plays inside each drive.
    /// Drives left without plays are dropped and counted in the return value.
    pub fn filter_plays(&self, mut keep: impl FnMut(&PlayRecord) -> bool) -> (PlayDataset, usize) {
        let mut dropped = 0;
        let mut drives = Vec::with_capacity(self.drives.len());
        for d in 0..self.drives.len() {
            let mut kept: Vec<PlayRecord> = self.drive_plays(d).iter().filter(|p| keep(p)).cloned().collect();
            if kept.is_empty() {
                dropped += 1;
                continue;
            }
            for (j, p) in kept.iter_mut().enumerate() {
                p.play_index_in_drive = j as u32 + 1;
            }
            drives.push(kept);
        }
        (Self::from_drives(drives, self.scheme), dropped)
    }

    /// Concatenate datasets; drive ids must stay unique.
    pub fn concat(parts: &[&PlayDataset]) -> Result<PlayDataset> {
        let mut seen = std::collections::HashSet::new();
        let mut drives = Vec::new();
        let scheme = parts.first().map(|p| p.scheme).unwrap_or_default();
        for part in parts {
            for d in 0..part.num_drives() {
                let id = &part.drives[d].drive_id;
                if !seen.insert(id.clone()) {
                    return Err(Error::Integrity {
                        drive_id: id.clone(),
                        message: "appears in more than one dataset".into(),
                    });
                }
                drives.push(part.drive_plays(d).to_vec());
            }
        }
        Ok(Self::from_drives(drives, scheme))
    }
}

fn validate_drive(id: &str, drive: &[PlayRecord]) -> Result<()> {
    let outcome = drive[0].outcome_drive;
    if let Some(other) = drive.iter().find(|p| p.outcome_drive != outcome) {
        return Err(Error::Integrity {
            drive_id: id.to_string(),
            message: format!("has inconsistent outcomes {} and {}", outcome, other.outcome_drive),
        });
    }
    for (j, p) in drive.iter().enumerate() {
        if p.play_index_in_drive as usize != j + 1 {
            return Err(Error::Integrity {
                drive_id: id.to_string(),
                message: format!(
                    "play indices are not contiguous from 1 (found {} at position {})",
                    p.play_index_in_drive,
                    j + 1
                ),
            });
        }
    }
    Ok(())
}

/// Set play weights according to `scheme`. Idempotent.
pub fn compute_play_weights(ds: &PlayDataset, scheme: WeightingScheme) -> PlayDataset {
    ds.with_weights(scheme)
}

/// Number of test drives for a split: `floor(n * fraction)`.
///
/// A tiny epsilon absorbs representation error so that e.g. `100 * 0.29`
/// yields 29 rather than 28.
pub fn test_drive_count(n_drives: usize, test_fraction: f64) -> usize {
    ((n_drives as f64) * test_fraction + 1e-9).floor() as usize
}

/// Randomly partition whole drives into (train, test).
pub fn split_by_drives(ds: &PlayDataset, test_fraction: f64, seed: u64) -> Result<(PlayDataset, PlayDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    if ds.num_drives() < 2 {
        return Err(Error::Data(format!(
            "cannot split a dataset with {} drive(s)",
            ds.num_drives()
        )));
    }
    let n_test = test_drive_count(ds.num_drives(), test_fraction);
    let mut idx: Vec<usize> = (0..ds.num_drives()).collect();
    idx.shuffle(&mut rng::stream(seed, Purpose::Split, &[]));
    let mut test: Vec<usize> = idx[..n_test].to_vec();
    let mut train: Vec<usize> = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((ds.select_drives(&train), ds.select_drives(&test)))
}
