//! Per-user chronological train/valid/test splitting and training subsampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{CheckIn, CheckInLog};

/// Per-user chronological partition of a check-in log. All three parts share
/// the parent log's index space.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: CheckInLog,
    pub valid: CheckInLog,
    pub test: CheckInLog,
}

fn ceil_frac(frac: f64, count: usize) -> usize {
    // guard against 0.7 * 10 style representation noise
    ((frac * count as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Sorts each user's check-ins by (timestamp, poi, input order) and assigns
/// the first ceil(train_frac * c) to train, the next ceil(valid_frac * c) to
/// valid, and the remainder to test. Users with too few check-ins get empty
/// later parts (warned, not an error).
pub fn chronological_split(log: &CheckInLog, train_frac: f64, valid_frac: f64) -> DatasetSplit {
    assert!(train_frac > 0.0 && valid_frac >= 0.0 && train_frac + valid_frac < 1.0);

    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    let mut short_users = 0usize;

    for positions in log.by_user() {
        if positions.is_empty() {
            continue;
        }
        let mut ordered = positions;
        ordered.sort_by_key(|&i| {
            let c = &log.checkins[i];
            (c.timestamp, c.poi, i)
        });
        let c = ordered.len();
        let n_train = ceil_frac(train_frac, c).min(c);
        let n_valid = ceil_frac(valid_frac, c).min(c - n_train);
        if n_valid == 0 || n_train + n_valid == c {
            short_users += 1;
        }
        for (rank, &i) in ordered.iter().enumerate() {
            let ci = log.checkins[i];
            if rank < n_train {
                train.push((i, ci));
            } else if rank < n_train + n_valid {
                valid.push((i, ci));
            } else {
                test.push((i, ci));
            }
        }
    }
    if short_users > 0 {
        log::warn!("{short_users} users had too few check-ins to fill all split parts");
    }

    // keep input order within each part
    let order = |v: &mut Vec<(usize, CheckIn)>| v.sort_by_key(|&(i, _)| i);
    for part in [&mut train, &mut valid, &mut test] {
        order(part);
    }
    DatasetSplit {
        train: log.with_checkins(train.into_iter().map(|(_, c)| c).collect()),
        valid: log.with_checkins(valid.into_iter().map(|(_, c)| c).collect()),
        test: log.with_checkins(test.into_iter().map(|(_, c)| c).collect()),
    }
}

/// Retains ceil(fraction * c) training check-ins per user, chosen uniformly
/// at random with the given seed; valid and test are untouched. Deterministic
/// for a fixed seed.
pub fn subsample_training(split: &DatasetSplit, fraction: f64, seed: u64) -> DatasetSplit {
    assert!(fraction > 0.0 && fraction <= 1.0);
    if fraction >= 1.0 {
        return split.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::with_capacity(split.train.len());
    for positions in split.train.by_user() {
        let c = positions.len();
        if c == 0 {
            continue;
        }
        let k = ceil_frac(fraction, c).clamp(1, c);
        let mut chosen = rand::seq::index::sample(&mut rng, c, k).into_vec();
        chosen.sort_unstable();
        for idx in chosen {
            kept.push(positions[idx]);
        }
    }
    kept.sort_unstable();
    let checkins = kept.iter().map(|&i| split.train.checkins[i]).collect();
    DatasetSplit {
        train: split.train.with_checkins(checkins),
        valid: split.valid.clone(),
        test: split.test.clone(),
    }
}
