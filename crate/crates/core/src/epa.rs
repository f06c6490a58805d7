//! Expected points added and its per-entity aggregation.
//!
//! A play's EPA is the EP of the next state in the same drive minus the EP
//! of its own state; for the last play of a drive the realized drive points
//! stand in for the next EP. Summed over a drive, EPA therefore telescopes
//! to realized points minus the EP of the first state.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{GameState, PlayDataset, PlayRecord};
use crate::model::OutcomeModel;
use crate::uncertainty::BootstrapEnsemble;

/// EP at `x`, optionally with the point spread replaced first.
pub fn ep_of_state(model: &OutcomeModel, x: &GameState, spread_override: Option<f64>) -> Result<f64> {
    match spread_override {
        Some(s) => model.expected_points(&x.with_spread(s)),
        None => model.expected_points(x),
    }
}

/// EPA of `play`, given the following play of its drive (or `None` when
/// `play` ends the drive).
pub fn epa_of_play(
    model: &OutcomeModel,
    play: &PlayRecord,
    next: Option<&PlayRecord>,
    spread_override: Option<f64>,
) -> Result<f64> {
    let start = ep_of_state(model, &play.state, spread_override)?;
    let end = match next {
        None => play.outcome_drive.points() as f64,
        Some(n) => {
            if n.drive_id != play.drive_id {
                return Err(Error::Data(format!(
                    "next play belongs to drive `{}`, not `{}`",
                    n.drive_id, play.drive_id
                )));
            }
            ep_of_state(model, &n.state, spread_override)?
        }
    };
    Ok(end - start)
}

/// EPA of every play of `ds`, in row order.
pub fn play_epas(model: &OutcomeModel, ds: &PlayDataset, spread_override: Option<f64>) -> Result<Vec<f64>> {
    let ep: Vec<f64> = ds
        .plays()
        .par_iter()
        .map(|p| ep_of_state(model, &p.state, spread_override))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; ds.num_plays()];
    for span in ds.drives() {
        let rows = span.rows();
        let last = rows.end - 1;
        for i in rows {
            let end = if i == last {
                ds.plays()[i].outcome_drive.points() as f64
            } else {
                ep[i + 1]
            };
            out[i] = end - ep[i];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entity {
    /// The offense, `posteam`.
    Team,
    PasserOrRusher,
}

impl Entity {
    fn key(self, p: &PlayRecord) -> Option<&str> {
        match self {
            Entity::Team => Some(p.posteam_id.as_str()),
            Entity::PasserOrRusher => p.passer_or_rusher_id.as_deref().filter(|s| !s.is_empty()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpaRow {
    pub entity_id: String,
    pub season: i32,
    pub n_plays: usize,
    pub epa_per_play: f64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpaTable {
    pub rows: Vec<EpaRow>,
}

/// Qualifying plays (pass or run, matching `season` when given) grouped by
/// (entity, season), keeping groups with at least `min_plays` plays.
fn qualifying_groups(
    ds: &PlayDataset,
    entity: Entity,
    season: Option<i32>,
    min_plays: usize,
) -> BTreeMap<(String, i32), Vec<usize>> {
    let mut groups: BTreeMap<(String, i32), Vec<usize>> = BTreeMap::new();
    for (i, p) in ds.plays().iter().enumerate() {
        if !p.play_type.is_pass_or_run() || season.is_some_and(|s| s != p.season) {
            continue;
        }
        if let Some(k) = entity.key(p) {
            groups.entry((k.to_string(), p.season)).or_default().push(i);
        }
    }
    groups.retain(|_, rows| rows.len() >= min_plays);
    groups
}

fn group_mean(epa: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&i| epa[i]).sum::<f64>() / rows.len() as f64
}

/// Mean EPA per play by entity and season, with the spread set to 0.
pub fn aggregate_epa(
    ds: &PlayDataset,
    model: &OutcomeModel,
    entity: Entity,
    season: Option<i32>,
    min_plays: usize,
) -> Result<EpaTable> {
    let epa = play_epas(model, ds, Some(0.0))?;
    let rows = qualifying_groups(ds, entity, season, min_plays)
        .into_iter()
        .map(|((entity_id, season), rows)| EpaRow {
            entity_id,
            season,
            n_plays: rows.len(),
            epa_per_play: group_mean(&epa, &rows),
            ci_lo: None,
            ci_hi: None,
        })
        .collect();
    Ok(EpaTable { rows })
}

/// 1-based nearest-rank indices bounding a central `level` interval over
/// `b` sorted values: `ceil(q * b)` for `q = (1 - level) / 2` and
/// `1 - (1 - level) / 2`.
pub fn nearest_rank_bounds(b: usize, level: f64) -> (usize, usize) {
    let tail = (1.0 - level) / 2.0;
    // The epsilon keeps exact products such as 0.975 * 100 from rounding up.
    let rank = |q: f64| ((q * b as f64 - 1e-9).ceil() as usize).clamp(1, b);
    (rank(tail), rank(1.0 - tail))
}

/// Point estimates from `full_model`, percentile intervals over the
/// per-member entity means of the ensemble.
pub fn epa_confidence_intervals(
    ds: &PlayDataset,
    full_model: &OutcomeModel,
    ens: &BootstrapEnsemble,
    entity: Entity,
    season: Option<i32>,
    min_plays: usize,
    level: f64,
) -> Result<EpaTable> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!("confidence level must lie in (0, 1), got {level}")));
    }
    if ens.is_empty() {
        return Err(Error::Config("confidence intervals need a non-empty ensemble".into()));
    }
    let groups = qualifying_groups(ds, entity, season, min_plays);
    let point = play_epas(full_model, ds, Some(0.0))?;
    let member_epas: Vec<Vec<f64>> = ens
        .members
        .par_iter()
        .map(|m| play_epas(m, ds, Some(0.0)))
        .collect::<Result<_>>()?;
    let (lo_rank, hi_rank) = nearest_rank_bounds(ens.len(), level);
    let rows = groups
        .into_iter()
        .map(|((entity_id, season), rows)| {
            let mut means: Vec<f64> = member_epas.iter().map(|e| group_mean(e, &rows)).collect();
            means.sort_by(f64::total_cmp);
            EpaRow {
                entity_id,
                season,
                n_plays: rows.len(),
                epa_per_play: group_mean(&point, &rows),
                ci_lo: Some(means[lo_rank - 1]),
                ci_hi: Some(means[hi_rank - 1]),
            }
        })
        .collect();
    Ok(EpaTable { rows })
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

impl EpaTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["entity_id", "season", "n_plays", "epa_per_play", "ci_lo", "ci_hi"])?;
        for r in &self.rows {
            w.write_record([
                r.entity_id.clone(),
                r.season.to_string(),
                r.n_plays.to_string(),
                r.epa_per_play.to_string(),
                opt(r.ci_lo),
                opt(r.ci_hi),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long format for interval plots: `entity,estimate,lo,hi`, entities
    /// labelled `<id> <season>`, sorted by estimate.
    pub fn write_plot_data<W: Write>(&self, writer: W) -> Result<()> {
        let mut rows: Vec<&EpaRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.epa_per_play.total_cmp(&a.epa_per_play));
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["entity", "estimate", "lo", "hi"])?;
        for r in rows {
            w.write_record([
                format!("{} {}", r.entity_id, r.season),
                r.epa_per_play.to_string(),
                opt(r.ci_lo),
                opt(r.ci_hi),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
