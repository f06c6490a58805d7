//! Brute-force reference implementations of the evaluation metrics and
//! small hand-built datasets to run them on.

#![allow(dead_code)]

use drive_ep::eval::SubsampleIndicator;
use drive_ep::ingest::{GameState, PlayDataset, PlayRecord, PlayType};
use drive_ep::rng::{stream, Purpose};
use drive_ep::{DriveOutcome, ProbVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub const PTS: [f64; 5] = [7.0, 3.0, 0.0, -2.0, -7.0];

pub fn outcome_index(o: DriveOutcome) -> usize {
    DriveOutcome::ALL.iter().position(|&a| a == o).unwrap()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn rmse(probs: &[ProbVector], ds: &PlayDataset, subs: &[SubsampleIndicator]) -> Vec<f64> {
    let mut out = Vec::new();
    for s in subs {
        let mut sq = Vec::new();
        for &i in &s.selected {
            let p = probs[i].as_array();
            let mut ep = 0.0;
            for k in 0..5 {
                ep += PTS[k] * p[k];
            }
            let y = PTS[outcome_index(ds.plays()[i].outcome_drive)];
            sq.push((ep - y) * (ep - y));
        }
        out.push(mean(&sq).sqrt());
    }
    out
}

pub fn logloss(probs: &[ProbVector], ds: &PlayDataset, subs: &[SubsampleIndicator]) -> Vec<f64> {
    let mut out = Vec::new();
    for s in subs {
        let mut ll = Vec::new();
        for &i in &s.selected {
            let p = probs[i].as_array()[outcome_index(ds.plays()[i].outcome_drive)];
            ll.push(-(if p < 1e-15 { 1e-15 } else { p }).ln());
        }
        out.push(mean(&ll));
    }
    out
}

/// Smallest subset with mass >= alpha (1e-12 slack), by enumerating all 32
/// subsets. Among the smallest, the largest mass wins; remaining ties go to
/// the subset whose sorted index list is lexicographically first.
pub fn brute_force_set(p: &[f64; 5], alpha: f64) -> Vec<usize> {
    let mut best: Option<(usize, f64, Vec<usize>)> = None;
    for mask in 1u32..32 {
        let idx: Vec<usize> = (0..5).filter(|k| mask >> k & 1 == 1).collect();
        let mass: f64 = idx.iter().map(|&k| p[k]).sum();
        if mass < alpha - 1e-12 {
            continue;
        }
        let better = match &best {
            None => true,
            Some((n, m, b)) => {
                idx.len() < *n
                    || (idx.len() == *n && mass > m + 1e-12)
                    || (idx.len() == *n && (mass - m).abs() <= 1e-12 && idx < *b)
            }
        };
        if better {
            best = Some((idx.len(), mass, idx));
        }
    }
    best.unwrap().2
}

pub fn coverage_single(probs: &[ProbVector], ds: &PlayDataset, subs: &[SubsampleIndicator], alpha: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for s in subs {
        let mut hits = 0.0;
        for &i in &s.selected {
            let set = brute_force_set(probs[i].as_array(), alpha);
            if set.contains(&outcome_index(ds.plays()[i].outcome_drive)) {
                hits += 1.0;
            }
        }
        out.push(hits / s.selected.len() as f64);
    }
    out
}

/// Inverse-CDF draw in canonical order, skipping zero-probability outcomes.
fn draw(p: &[f64; 5], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 2;
    for k in 0..5 {
        if p[k] > 0.0 {
            acc += p[k];
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// `member_probs[b][i]`; member `b`'s draw at play `i` uses the stream
/// keyed by `(i, b)`.
pub fn coverage_boot(
    member_probs: &[Vec<ProbVector>],
    ds: &PlayDataset,
    subs: &[SubsampleIndicator],
    alpha: f64,
    seed: u64,
) -> Vec<f64> {
    let b_count = member_probs.len();
    let mut out = Vec::new();
    for s in subs {
        let mut hits = 0.0;
        for &i in &s.selected {
            let mut freq = [0.0; 5];
            for b in 0..b_count {
                let u: f64 = stream(seed, Purpose::BootDraw, &[i as u64, b as u64]).gen();
                freq[draw(member_probs[b][i].as_array(), u)] += 1.0 / b_count as f64;
            }
            if brute_force_set(&freq, alpha).contains(&outcome_index(ds.plays()[i].outcome_drive)) {
                hits += 1.0;
            }
        }
        out.push(hits / s.selected.len() as f64);
    }
    out
}

pub fn state(yardline: i32, spread: f64) -> GameState {
    GameState {
        yardline_100: yardline,
        down: 1,
        ydstogo: 10,
        half_seconds_remaining: 900.0,
        game_seconds_remaining: 2700.0,
        era: 2,
        posteam_timeouts_remaining: 3,
        defteam_timeouts_remaining: 3,
        score_differential: 0,
        posteam_spread: spread,
    }
}

/// A random dataset of at most `max_plays` plays in drives of 1..=6 plays.
pub fn small_dataset(seed: u64, max_plays: usize) -> PlayDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plays = Vec::new();
    let mut d = 0;
    loop {
        let len = rng.gen_range(1..=6);
        if plays.len() + len > max_plays {
            break;
        }
        let outcome = DriveOutcome::ALL[rng.gen_range(0..5)];
        for j in 1..=len {
            plays.push(PlayRecord {
                drive_id: format!("h{d}"),
                play_index_in_drive: j as u32,
                state: state(rng.gen_range(1..=99), rng.gen_range(-10..=10) as f64),
                posteam_id: "A".into(),
                passer_or_rusher_id: None,
                play_type: PlayType::Pass,
                outcome_drive: outcome,
                season: 2020,
            });
        }
        d += 1;
    }
    PlayDataset::from_plays(plays).unwrap()
}

/// Random probability vectors, including exact ties and zeros.
pub fn random_probs(rng: &mut impl Rng, n: usize) -> Vec<ProbVector> {
    (0..n)
        .map(|_| {
            let raw: [f64; 5] = match rng.gen_range(0..4) {
                0 => [0.2; 5],
                1 => [0.5, 0.0, 0.25, 0.0, 0.25],
                _ => std::array::from_fn(|_| rng.gen::<f64>().powi(2)),
            };
            let s: f64 = raw.iter().sum();
            ProbVector::new(raw.map(|v| v / s)).unwrap()
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Largest absolute gap between the library metrics and the reference
/// implementations on one random hand-built case (at most 100 plays, B and
/// M_test at most 5), over means and per-subsample values.
pub fn oracle_discrepancy(seed: u64) -> f64 {
    use drive_ep::eval;

    let ds = small_dataset(seed, 100);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let probs = random_probs(&mut rng, ds.num_plays());
    let b = rng.gen_range(1..=5);
    let members: Vec<Vec<ProbVector>> = (0..b).map(|_| random_probs(&mut rng, ds.num_plays())).collect();
    let m_test = rng.gen_range(1..=5);
    let alpha = [0.5, 0.6, 0.8, 0.9, 0.95, 1.0][rng.gen_range(0..6)];
    let subs = eval::draw_test_subsamples(&ds, m_test, seed).unwrap();

    let pairs = [
        (eval::rmse_from_probs(&probs, &ds, &subs).unwrap(), rmse(&probs, &ds, &subs)),
        (eval::logloss_from_probs(&probs, &ds, &subs).unwrap(), logloss(&probs, &ds, &subs)),
        (
            eval::coverage_single_from_probs(&probs, &ds, &subs, alpha).unwrap(),
            coverage_single(&probs, &ds, &subs, alpha),
        ),
        (
            eval::coverage_boot_from_probs(&members, &ds, &subs, alpha, seed).unwrap(),
            coverage_boot(&members, &ds, &subs, alpha, seed),
        ),
    ];
    pairs
        .iter()
        .map(|(report, want)| max_abs_diff(&report.per_subsample, want).max((report.value - mean(want)).abs()))
        .fold(0.0, f64::max)
}
