//! Training check-in overlap between user pairs, used to drop friendship
//! links that may postdate the training period.

use crate::data::{DatasetSplit, FriendshipEdgeList, UserIdx};

fn train_end(split: &DatasetSplit, user: UserIdx) -> Option<i64> {
    split
        .train
        .checkins
        .iter()
        .filter(|c| c.user == user)
        .map(|c| c.timestamp)
        .max()
}

fn count_before(split: &DatasetSplit, user: UserIdx, cutoff: i64) -> (usize, usize) {
    let mut before = 0;
    let mut total = 0;
    for log in [&split.train, &split.valid, &split.test] {
        for c in &log.checkins {
            if c.user == user {
                total += 1;
                if c.timestamp <= cutoff {
                    before += 1;
                }
            }
        }
    }
    (before, total)
}

/// Fraction of the two users' combined check-ins that fall inside their
/// common training window. The window ends at the earlier of the two users'
/// training period ends; counts before that cutoff are divided by the users'
/// total check-in counts. Returns 0 if either user has no training check-ins.
pub fn training_overlap(u1: UserIdx, u2: UserIdx, split: &DatasetSplit) -> f64 {
    let (Some(end1), Some(end2)) = (train_end(split, u1), train_end(split, u2)) else {
        return 0.0;
    };
    let cutoff = end1.min(end2);
    let (b1, t1) = count_before(split, u1, cutoff);
    let (b2, t2) = count_before(split, u2, cutoff);
    if t1 + t2 == 0 {
        return 0.0;
    }
    (b1 + b2) as f64 / (t1 + t2) as f64
}

/// Keeps an edge iff its endpoints' training overlap reaches `threshold`.
/// A threshold of 0 keeps every edge.
pub fn filter_friendships_by_overlap(
    edges: &FriendshipEdgeList,
    split: &DatasetSplit,
    threshold: f64,
) -> FriendshipEdgeList {
    assert!((0.0..=1.0).contains(&threshold));
    if threshold <= 0.0 {
        return edges.clone();
    }
    FriendshipEdgeList::new(
        edges
            .edges()
            .iter()
            .filter(|&&(a, b)| training_overlap(a, b, split) >= threshold)
            .copied(),
    )
}
