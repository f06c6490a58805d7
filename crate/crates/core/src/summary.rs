//! Play share and scoring by team quality.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::ingest::PlayDataset;

/// Spread threshold separating favored and underdog offenses.
pub const QUALITY_THRESHOLD: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TeamQuality {
    /// Spread strictly below minus the threshold.
    Good,
    Middle,
    /// Spread strictly above the threshold.
    Bad,
}

impl TeamQuality {
    pub fn of_spread(spread: f64) -> Self {
        if spread < -QUALITY_THRESHOLD {
            TeamQuality::Good
        } else if spread > QUALITY_THRESHOLD {
            TeamQuality::Bad
        } else {
            TeamQuality::Middle
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TeamQuality::Good => "good",
            TeamQuality::Middle => "middle",
            TeamQuality::Bad => "bad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub group: String,
    pub n_plays: usize,
    pub play_share: f64,
    pub n_drives: usize,
    pub drive_share: f64,
    pub points_per_drive: f64,
}

fn summarize<K: Ord + Clone>(ds: &PlayDataset, key: impl Fn(f64) -> K, label: impl Fn(&K) -> String) -> Vec<GroupSummary> {
    // (plays, drives, points)
    let mut acc: BTreeMap<K, (usize, usize, f64)> = BTreeMap::new();
    for d in 0..ds.num_drives() {
        let plays = ds.drive_plays(d);
        let e = acc.entry(key(plays[0].state.posteam_spread)).or_default();
        e.0 += plays.len();
        e.1 += 1;
        e.2 += plays[0].outcome_drive.points() as f64;
    }
    let (np, nd) = (ds.num_plays() as f64, ds.num_drives() as f64);
    acc.into_iter()
        .map(|(k, (p, d, pts))| GroupSummary {
            group: label(&k),
            n_plays: p,
            play_share: p as f64 / np,
            n_drives: d,
            drive_share: d as f64 / nd,
            points_per_drive: pts / d as f64,
        })
        .collect()
}

/// One row per team-quality group, in good, middle, bad order.
pub fn quality_summary(ds: &PlayDataset) -> Vec<GroupSummary> {
    summarize(ds, TeamQuality::of_spread, |q| q.label().to_string())
}

/// One row per spread value rounded to the nearest integer, ascending.
pub fn spread_profile(ds: &PlayDataset) -> Vec<GroupSummary> {
    summarize(ds, |s| s.round() as i64, |s| s.to_string())
}

pub fn write_summary_csv<W: Write>(rows: &[GroupSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
