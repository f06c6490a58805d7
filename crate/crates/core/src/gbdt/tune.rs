//! Hyperparameter selection on a drive-preserving half split.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_gbdt, weighted_logloss, GbdtParams};
use crate::error::{Error, Result};
use crate::features::Feature;
use crate::ingest::{split_by_drives, PlayDataset};
use crate::rng::{derive_seed, Purpose};

/// Validation score of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub index: usize,
    pub params: GbdtParams,
    pub validation_logloss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: GbdtParams,
    pub table: Vec<TuneRow>,
}

/// `max_depth` {3, 4, 5} x `learning_rate` {0.05, 0.1} x `num_rounds`
/// {100, 300}.
pub fn default_grid() -> Vec<GbdtParams> {
    let mut grid = Vec::new();
    for max_depth in [3, 4, 5] {
        for learning_rate in [0.05, 0.1] {
            for num_rounds in [100, 300] {
                grid.push(GbdtParams {
                    max_depth,
                    learning_rate,
                    num_rounds,
                    ..GbdtParams::default()
                });
            }
        }
    }
    grid
}

/// Fit every grid point on one half of the drives and score weighted
/// logloss on the other half. Points that differ only in `num_rounds` share
/// one fit, scored at each requested round count. Ties go to the earlier
/// grid point.
pub fn tune_grid(train: &PlayDataset, grid: &[GbdtParams], features: &[Feature], seed: u64) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::Config("tuning grid is empty".into()));
    }
    let (fit_half, valid_half) = split_by_drives(train, 0.5, derive_seed(seed, Purpose::Tune, &[]))?;

    // Group grid points by everything except the round count.
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in grid.iter().enumerate() {
        let key = serde_json::to_string(&GbdtParams {
            num_rounds: 0,
            ..p.clone()
        })?;
        groups.entry(key).or_default().push(i);
    }
    let groups: Vec<Vec<usize>> = groups.into_values().collect();

    let scored: Vec<Vec<(usize, f64)>> = groups
        .par_iter()
        .map(|members| -> Result<Vec<(usize, f64)>> {
            let rounds = members.iter().map(|&i| grid[i].num_rounds).max().unwrap_or(0);
            let params = GbdtParams {
                num_rounds: rounds,
                ..grid[members[0]].clone()
            };
            let model = fit_gbdt(&fit_half, features, &params)?;
            members
                .iter()
                .map(|&i| Ok((i, weighted_logloss(&model, &valid_half, grid[i].num_rounds)?)))
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut losses = vec![f64::NAN; grid.len()];
    for (i, l) in scored.into_iter().flatten() {
        losses[i] = l;
    }
    let mut best = 0;
    for i in 1..grid.len() {
        if losses[i] < losses[best] {
            best = i;
        }
    }
    log::info!("tuning selected grid point {best} (validation logloss {:.6})", losses[best]);
    Ok(TuneResult {
        best: grid[best].clone(),
        table: grid
            .iter()
            .zip(losses)
            .enumerate()
            .map(|(index, (params, validation_logloss))| TuneRow {
                index,
                params: params.clone(),
                validation_logloss,
            })
            .collect(),
    })
}
