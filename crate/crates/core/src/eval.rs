//! Test-set evaluation on one-play-per-drive subsamples.
//!
//! Each metric is computed on `M_test` subsamples that hold exactly one
//! uniformly drawn play per test drive, then averaged. The reported
//! standard error is the sample standard deviation of the per-subsample
//! values over `sqrt(M_test)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ProbVector, POINTS};
use crate::error::{Error, Result};
use crate::ingest::PlayDataset;
use crate::model::OutcomeModel;
use crate::rng::{stream, Purpose};
use crate::uncertainty::{
    draw_member_outcomes, prediction_set_from_draws, prediction_set_single, BootstrapEnsemble,
};

/// Probability floor applied before taking logs.
pub const LOG_FLOOR: f64 = 1e-15;

/// Plays selected by one test subsample, one per drive in drive order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsampleIndicator {
    pub m: usize,
    pub selected: Vec<usize>,
}

pub fn draw_test_subsamples(test: &PlayDataset, m_test: usize, seed: u64) -> Result<Vec<SubsampleIndicator>> {
    if m_test == 0 {
        return Err(Error::Config("M_test must be at least 1".into()));
    }
    if test.num_drives() == 0 {
        return Err(Error::Data("test set has no drives".into()));
    }
    Ok((0..m_test)
        .map(|m| SubsampleIndicator {
            m,
            selected: test.one_play_per_drive(&mut stream(seed, Purpose::TestSubsample, &[m as u64])),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    /// Absent when `M_test` is 1.
    pub se: Option<f64>,
    pub m_test: usize,
    pub per_subsample: Vec<f64>,
}

impl MetricReport {
    pub fn from_values(metric: &str, values: Vec<f64>) -> Self {
        let m = values.len();
        let mean = values.iter().sum::<f64>() / m as f64;
        let se = (m > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        });
        MetricReport {
            metric: metric.to_string(),
            value: mean,
            se,
            m_test: m,
            per_subsample: values,
        }
    }
}

fn check_shape(n_plays: usize, test: &PlayDataset, subs: &[SubsampleIndicator]) -> Result<()> {
    if n_plays != test.num_plays() {
        return Err(Error::Data(format!(
            "{n_plays} predictions for {} test plays",
            test.num_plays()
        )));
    }
    if subs.is_empty() {
        return Err(Error::Config("no test subsamples".into()));
    }
    for s in subs {
        if s.selected.len() != test.num_drives() {
            return Err(Error::Data(format!(
                "subsample {} selects {} plays for {} drives",
                s.m,
                s.selected.len(),
                test.num_drives()
            )));
        }
    }
    Ok(())
}

/// Mean over subsamples of a per-play score averaged over the selection.
fn per_subsample(subs: &[SubsampleIndicator], score: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
    subs.par_iter()
        .map(|s| s.selected.iter().map(|&i| score(i)).sum::<f64>() / s.selected.len() as f64)
        .collect()
}

pub fn rmse_from_probs(probs: &[ProbVector], test: &PlayDataset, subs: &[SubsampleIndicator]) -> Result<MetricReport> {
    check_shape(probs.len(), test, subs)?;
    let plays = test.plays();
    let sq = per_subsample(subs, |i| {
        let ep: f64 = probs[i].as_array().iter().zip(POINTS).map(|(p, v)| p * v).sum();
        (ep - plays[i].outcome_drive.points() as f64).powi(2)
    });
    Ok(MetricReport::from_values("rmse", sq.into_iter().map(f64::sqrt).collect()))
}

pub fn logloss_from_probs(probs: &[ProbVector], test: &PlayDataset, subs: &[SubsampleIndicator]) -> Result<MetricReport> {
    check_shape(probs.len(), test, subs)?;
    let plays = test.plays();
    let v = per_subsample(subs, |i| -probs[i].get(plays[i].outcome_drive).max(LOG_FLOOR).ln());
    Ok(MetricReport::from_values("logloss", v))
}

pub fn coverage_single_from_probs(
    probs: &[ProbVector],
    test: &PlayDataset,
    subs: &[SubsampleIndicator],
    alpha: f64,
) -> Result<MetricReport> {
    check_shape(probs.len(), test, subs)?;
    let plays = test.plays();
    let covered: Vec<bool> = probs
        .iter()
        .zip(plays)
        .map(|(p, play)| Ok(prediction_set_single(p, alpha)?.contains(play.outcome_drive)))
        .collect::<Result<_>>()?;
    let v = per_subsample(subs, |i| covered[i] as u8 as f64);
    Ok(MetricReport::from_values("coverage", v))
}

/// `member_probs[b][i]` is member `b`'s prediction at test play `i`. The
/// outcome draws for play `i` are keyed by its row, so a play selected by
/// several subsamples reuses the same draws.
pub fn coverage_boot_from_probs(
    member_probs: &[Vec<ProbVector>],
    test: &PlayDataset,
    subs: &[SubsampleIndicator],
    alpha: f64,
    seed: u64,
) -> Result<MetricReport> {
    if member_probs.is_empty() {
        return Err(Error::Config("bootstrap coverage needs at least one member".into()));
    }
    for mp in member_probs {
        check_shape(mp.len(), test, subs)?;
    }
    let plays = test.plays();
    let covered: Vec<bool> = (0..plays.len())
        .into_par_iter()
        .map(|i| {
            let at: Vec<ProbVector> = member_probs.iter().map(|mp| mp[i]).collect();
            let set = prediction_set_from_draws(&draw_member_outcomes(&at, seed, i as u64), alpha)?;
            Ok(set.contains(plays[i].outcome_drive))
        })
        .collect::<Result<_>>()?;
    let v = per_subsample(subs, |i| covered[i] as u8 as f64);
    Ok(MetricReport::from_values("bootcovg", v))
}

pub fn rmse(model: &OutcomeModel, test: &PlayDataset, subs: &[SubsampleIndicator]) -> Result<MetricReport> {
    rmse_from_probs(&model.predict_dataset(test)?, test, subs)
}

pub fn logloss(model: &OutcomeModel, test: &PlayDataset, subs: &[SubsampleIndicator]) -> Result<MetricReport> {
    logloss_from_probs(&model.predict_dataset(test)?, test, subs)
}

pub fn coverage_single(
    model: &OutcomeModel,
    test: &PlayDataset,
    subs: &[SubsampleIndicator],
    alpha: f64,
) -> Result<MetricReport> {
    coverage_single_from_probs(&model.predict_dataset(test)?, test, subs, alpha)
}

pub fn ensemble_probs(ens: &BootstrapEnsemble, test: &PlayDataset) -> Result<Vec<Vec<ProbVector>>> {
    ens.members.iter().map(|m| m.predict_dataset(test)).collect()
}

pub fn coverage_boot(
    ens: &BootstrapEnsemble,
    test: &PlayDataset,
    subs: &[SubsampleIndicator],
    alpha: f64,
    seed: u64,
) -> Result<MetricReport> {
    coverage_boot_from_probs(&ensemble_probs(ens, test)?, test, subs, alpha, seed)
}

/// rmse, logloss and single-model coverage of one model.
pub fn evaluate_model(
    model: &OutcomeModel,
    test: &PlayDataset,
    subs: &[SubsampleIndicator],
    alpha: f64,
) -> Result<Vec<MetricReport>> {
    let probs = model.predict_dataset(test)?;
    Ok(vec![
        rmse_from_probs(&probs, test, subs)?,
        logloss_from_probs(&probs, test, subs)?,
        coverage_single_from_probs(&probs, test, subs, alpha)?,
    ])
}

/// `metric,value,se,M_test` rows; a missing SE is written as an empty field.
pub fn write_reports_csv<W: Write>(reports: &[MetricReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["metric", "value", "se", "M_test"])?;
    for r in reports {
        w.write_record([
            r.metric.clone(),
            r.value.to_string(),
            r.se.map_or(String::new(), |s| s.to_string()),
            r.m_test.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format `metric,m,value`.
pub fn write_per_subsample_csv<W: Write>(reports: &[MetricReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["metric", "m", "value"])?;
    for r in reports {
        for (m, v) in r.per_subsample.iter().enumerate() {
            w.write_record([r.metric.clone(), m.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}
