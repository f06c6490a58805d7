//! Bootstrap ensembles and prediction sets.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DriveOutcome, ProbVector, NUM_OUTCOMES};
use crate::error::{Error, Result};
use crate::ingest::{GameState, PlayDataset, PlayRecord};
use crate::manifest::data_hash;
use crate::model::OutcomeModel;
use crate::rng::{derive_seed, stream, Purpose};
use crate::trainers::TrainerSpec;

/// Slack on the cumulative-mass stopping rule, absorbing rounding in
/// probabilities that sum to one.
const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BootstrapScheme {
    /// Resample plays with replacement.
    IidPlays,
    /// Resample whole drives with replacement.
    ClusterDrives,
}

/// Plays drawn with replacement. Drawn plays are regrouped under their
/// original drive (in original order) so the result is still a valid
/// dataset; drive weights are recomputed for the regrouped drives.
pub fn resample_iid(ds: &PlayDataset, seed: u64) -> PlayDataset {
    let n = ds.num_plays();
    let mut rng = stream(seed, Purpose::Bootstrap, &[0]);
    let mut draws: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    draws.sort_unstable();
    let drive_of = ds.drive_of_play();
    let mut drives: Vec<Vec<PlayRecord>> = Vec::new();
    let mut current = usize::MAX;
    for i in draws {
        if drive_of[i] != current {
            current = drive_of[i];
            drives.push(Vec::new());
        }
        let group = drives.last_mut().expect("group");
        let mut p = ds.plays()[i].clone();
        p.play_index_in_drive = group.len() as u32 + 1;
        group.push(p);
    }
    PlayDataset::from_drives(drives, ds.scheme())
}

/// Drives drawn with replacement, each copy kept whole under a fresh id
/// `<original>#<draw>`.
pub fn resample_cluster(ds: &PlayDataset, seed: u64) -> PlayDataset {
    let n = ds.num_drives();
    let mut rng = stream(seed, Purpose::Bootstrap, &[1]);
    let drives = (0..n)
        .map(|k| {
            let d = rng.gen_range(0..n);
            ds.drive_plays(d)
                .iter()
                .map(|p| PlayRecord {
                    drive_id: format!("{}#{k}", p.drive_id),
                    ..p.clone()
                })
                .collect()
        })
        .collect();
    PlayDataset::from_drives(drives, ds.scheme())
}

pub fn resample(ds: &PlayDataset, scheme: BootstrapScheme, seed: u64) -> PlayDataset {
    match scheme {
        BootstrapScheme::IidPlays => resample_iid(ds, seed),
        BootstrapScheme::ClusterDrives => resample_cluster(ds, seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapEnsemble {
    pub members: Vec<OutcomeModel>,
    pub scheme: BootstrapScheme,
    pub seed: u64,
    pub trainer: TrainerSpec,
}

/// Fit `b` members, member `i` on resample `(seed, i)` with its own
/// trainer stream. Members are fit in parallel; the result does not
/// depend on scheduling.
pub fn fit_bootstrap_ensemble(
    train: &PlayDataset,
    b: usize,
    scheme: BootstrapScheme,
    trainer: &TrainerSpec,
    seed: u64,
) -> Result<BootstrapEnsemble> {
    if b == 0 {
        return Err(Error::Config("bootstrap needs B >= 1".into()));
    }
    if train.is_empty() {
        return Err(Error::Data("cannot bootstrap an empty dataset".into()));
    }
    let members = (0..b)
        .into_par_iter()
        .map(|i| {
            let sample = resample(train, scheme, derive_seed(seed, Purpose::Bootstrap, &[i as u64]));
            trainer
                .fit(&sample, derive_seed(seed, Purpose::Bootstrap, &[i as u64, 1]))
                .map_err(|e| Error::Member {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapEnsemble {
        members,
        scheme,
        seed,
        trainer: trainer.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub scheme: BootstrapScheme,
    pub b: usize,
    pub seed: u64,
    pub trainer: TrainerSpec,
    pub data_hash: String,
    pub members: Vec<String>,
}

impl BootstrapEnsemble {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member predictions at one state.
    pub fn member_probs(&self, x: &GameState) -> Result<Vec<ProbVector>> {
        self.members.iter().map(|m| m.predict_probs(x)).collect()
    }

    /// Write `manifest.json` plus one `member_NNNN.json` per member.
    pub fn save(&self, dir: &Path, train: &PlayDataset) -> Result<EnsembleManifest> {
        std::fs::create_dir_all(dir)?;
        let names: Vec<String> = (0..self.len()).map(|i| format!("member_{i:04}.json")).collect();
        for (m, name) in self.members.iter().zip(&names) {
            m.save(&dir.join(name))?;
        }
        let manifest = EnsembleManifest {
            scheme: self.scheme,
            b: self.len(),
            seed: self.seed,
            trainer: self.trainer.clone(),
            data_hash: data_hash(train)?,
            members: names,
        };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }

    pub fn load(dir: &Path) -> Result<(Self, EnsembleManifest)> {
        let manifest: EnsembleManifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
        if manifest.members.len() != manifest.b {
            return Err(Error::Config(format!(
                "ensemble manifest lists {} members but B = {}",
                manifest.members.len(),
                manifest.b
            )));
        }
        let members = manifest
            .members
            .iter()
            .map(|name| OutcomeModel::load(&dir.join(name)))
            .collect::<Result<Vec<_>>>()?;
        Ok((
            BootstrapEnsemble {
                members,
                scheme: manifest.scheme,
                seed: manifest.seed,
                trainer: manifest.trainer.clone(),
            },
            manifest,
        ))
    }
}

/// Outcomes in the order they were admitted to the set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub outcomes: Vec<DriveOutcome>,
    pub alpha: f64,
}

impl PredictionSet {
    pub fn contains(&self, o: DriveOutcome) -> bool {
        self.outcomes.contains(&o)
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Smallest set of outcomes holding probability mass at least `alpha`:
/// outcomes by descending probability, ties in canonical order, shortest
/// prefix reaching the target.
pub fn prediction_set_single(p: &ProbVector, alpha: f64) -> Result<PredictionSet> {
    check_alpha(alpha)?;
    let probs = p.as_array();
    let mut order: Vec<usize> = (0..NUM_OUTCOMES).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let mut outcomes = Vec::with_capacity(NUM_OUTCOMES);
    let mut mass = 0.0;
    for k in order {
        outcomes.push(DriveOutcome::ALL[k]);
        mass += probs[k];
        if mass >= alpha - MASS_SLACK {
            break;
        }
    }
    Ok(PredictionSet { outcomes, alpha })
}

/// One outcome draw per member from that member's probabilities, the draw
/// for member `b` at play `key` coming from its own counter-based stream.
pub fn draw_member_outcomes(member_probs: &[ProbVector], seed: u64, key: u64) -> Vec<DriveOutcome> {
    member_probs
        .iter()
        .enumerate()
        .map(|(b, p)| p.sample(stream(seed, Purpose::BootDraw, &[key, b as u64]).gen()))
        .collect()
}

/// Prediction set from the empirical distribution of drawn outcomes.
pub fn prediction_set_from_draws(draws: &[DriveOutcome], alpha: f64) -> Result<PredictionSet> {
    if draws.is_empty() {
        return Err(Error::Config("bootstrap prediction set needs at least one member".into()));
    }
    let mut counts = [0usize; NUM_OUTCOMES];
    for d in draws {
        counts[d.index()] += 1;
    }
    prediction_set_single(&ProbVector::from_counts(&counts), alpha)
}

/// Bootstrap prediction set at `x`, using draw key 0.
pub fn prediction_set_boot(ens: &BootstrapEnsemble, x: &GameState, alpha: f64, seed: u64) -> Result<PredictionSet> {
    let probs = ens.member_probs(x)?;
    prediction_set_from_draws(&draw_member_outcomes(&probs, seed, 0), alpha)
}

/// Number of times each original drive id was drawn into a cluster
/// resample.
pub fn drive_multiplicity(resampled: &PlayDataset) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for span in resampled.drives() {
        let orig = span.drive_id.rsplit_once('#').map_or(span.drive_id.as_str(), |(a, _)| a);
        *out.entry(orig.to_string()).or_insert(0) += 1;
    }
    out
}
