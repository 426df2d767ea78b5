//! Top-N evaluation: Precision@N, Recall@N, nDCG@N averaged over users,
//! plus the paired t-test used for significance reporting.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::{CheckInLog, InteractionMatrix, PoiIdx, UserIdx};
use crate::error::{Error, Result};
use crate::recommend::Recommendation;

/// Fraction of the top-N that is relevant; short lists count their missing
/// tail as misses.
pub fn precision_at_n(rec: &Recommendation, relevant: &HashSet<PoiIdx>, n: usize) -> f64 {
    assert!(n > 0);
    let tp = rec
        .ranked
        .iter()
        .take(n)
        .filter(|&&(p, _)| relevant.contains(&p))
        .count();
    tp as f64 / n as f64
}

/// Fraction of the relevant set found in the top-N.
pub fn recall_at_n(rec: &Recommendation, relevant: &HashSet<PoiIdx>, n: usize) -> f64 {
    assert!(!relevant.is_empty());
    let tp = rec
        .ranked
        .iter()
        .take(n)
        .filter(|&&(p, _)| relevant.contains(&p))
        .count();
    tp as f64 / relevant.len() as f64
}

/// Binary-relevance nDCG: DCG over the top-N divided by the DCG of an ideal
/// ranking with min(|relevant|, N) hits at the top.
pub fn ndcg_at_n(rec: &Recommendation, relevant: &HashSet<PoiIdx>, n: usize) -> f64 {
    assert!(!relevant.is_empty());
    let mut dcg = 0.0;
    for (i, &(p, _)) in rec.ranked.iter().take(n).enumerate() {
        if relevant.contains(&p) {
            // rel_i is binary, so 2^rel - 1 is 1 at a hit
            dcg += 1.0 / ((i + 2) as f64).log2();
        }
    }
    let ideal_hits = relevant.len().min(n);
    let idcg: f64 = (0..ideal_hits).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Anything that can produce a ranked list for a user.
pub trait Recommender: Sync {
    fn recommend(&self, user: UserIdx, n: usize) -> Recommendation;
}

impl<F> Recommender for F
where
    F: Fn(UserIdx, usize) -> Recommendation + Sync,
{
    fn recommend(&self, user: UserIdx, n: usize) -> Recommendation {
        self(user, n)
    }
}

/// Per-user metric vectors for one N.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerUserMetrics {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub ndcg: Vec<f64>,
}

/// Mean metrics per N plus the per-user vectors backing them. Users are
/// listed in ascending index order; vectors across compared systems align
/// when evaluated on the same split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub ns: Vec<usize>,
    pub users: Vec<UserIdx>,
    pub skipped_users: usize,
    pub per_n: BTreeMap<usize, PerUserMetrics>,
    pub config_fingerprint: String,
}

impl MetricsReport {
    pub fn mean_precision(&self, n: usize) -> f64 {
        mean(&self.per_n[&n].precision)
    }

    pub fn mean_recall(&self, n: usize) -> f64 {
        mean(&self.per_n[&n].recall)
    }

    pub fn mean_ndcg(&self, n: usize) -> f64 {
        mean(&self.per_n[&n].ndcg)
    }

    /// Human-readable metric table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "users evaluated: {} (skipped {})\n",
            self.users.len(),
            self.skipped_users
        ));
        out.push_str("metric        ");
        for n in &self.ns {
            out.push_str(&format!("@{n:<10}"));
        }
        out.push('\n');
        for (name, f) in [
            ("precision", Self::mean_precision as fn(&Self, usize) -> f64),
            ("recall", Self::mean_recall),
            ("ndcg", Self::mean_ndcg),
        ] {
            out.push_str(&format!("{name:<14}"));
            for &n in &self.ns {
                out.push_str(&format!("{:<11.5}", f(self, n)));
            }
            out.push('\n');
        }
        out
    }

    /// Machine-readable key-value lines: metric, N, value, user count, hash.
    pub fn machine_lines(&self) -> String {
        let mut out = String::new();
        for &n in &self.ns {
            for (name, v) in [
                ("precision", self.mean_precision(n)),
                ("recall", self.mean_recall(n)),
                ("ndcg", self.mean_ndcg(n)),
            ] {
                out.push_str(&format!(
                    "{name}\t{n}\t{v:.8}\t{}\t{}\n",
                    self.users.len(),
                    self.config_fingerprint
                ));
            }
        }
        out
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Evaluates a recommender against a held-out part of the split (the test
/// log, or the validation log during model selection). The relevant set per
/// user is the distinct held-out POIs the user did not visit in training;
/// users with an empty relevant set are skipped and counted.
pub fn evaluate(
    system: &dyn Recommender,
    heldout: &CheckInLog,
    train_matrix: &InteractionMatrix,
    ns: &[usize],
    config_fingerprint: &str,
) -> Result<MetricsReport> {
    assert!(!ns.is_empty());
    let max_n = *ns.iter().max().unwrap();

    let mut test_pois: Vec<HashSet<PoiIdx>> = vec![HashSet::new(); heldout.num_users()];
    for c in &heldout.checkins {
        test_pois[c.user as usize].insert(c.poi);
    }

    let relevant_sets: Vec<Option<HashSet<PoiIdx>>> = (0..heldout.num_users())
        .map(|u| {
            let visited = train_matrix.visited_mask(u as UserIdx);
            let relevant: HashSet<PoiIdx> = test_pois[u]
                .iter()
                .copied()
                .filter(|&p| !visited[p as usize])
                .collect();
            (!relevant.is_empty()).then_some(relevant)
        })
        .collect();

    type UserRows = Vec<(UserIdx, Vec<(f64, f64, f64)>)>;
    let evaluated: UserRows = relevant_sets
        .par_iter()
        .enumerate()
        .filter_map(|(u, relevant)| {
            let relevant = relevant.as_ref()?;
            let rec = system.recommend(u as UserIdx, max_n);
            let rows = ns
                .iter()
                .map(|&n| {
                    (
                        precision_at_n(&rec, relevant, n),
                        recall_at_n(&rec, relevant, n),
                        ndcg_at_n(&rec, relevant, n),
                    )
                })
                .collect();
            Some((u as UserIdx, rows))
        })
        .collect();

    let mut evaluated = evaluated;
    evaluated.sort_unstable_by_key(|&(u, _)| u);
    if evaluated.is_empty() {
        return Err(Error::NoEvaluableUsers);
    }
    let skipped = relevant_sets.iter().filter(|r| r.is_none()).count();

    let mut report = MetricsReport {
        ns: ns.to_vec(),
        users: evaluated.iter().map(|&(u, _)| u).collect(),
        skipped_users: skipped,
        per_n: BTreeMap::new(),
        config_fingerprint: config_fingerprint.to_string(),
    };
    for (i, &n) in ns.iter().enumerate() {
        let mut pm = PerUserMetrics::default();
        for (_, rows) in &evaluated {
            let (p, r, g) = rows[i];
            pm.precision.push(p);
            pm.recall.push(r);
            pm.ndcg.push(g);
        }
        report.per_n.insert(n, pm);
    }
    Ok(report)
}

/// Two-sided paired t-test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
    /// Set when the differences have zero variance and a nonzero mean, where
    /// the statistic is unbounded.
    pub degenerate: bool,
}

/// Paired t-test over two equal-length per-user metric vectors.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> TTest {
    assert_eq!(a.len(), b.len(), "paired vectors must align");
    assert!(a.len() >= 2, "need at least two pairs");
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean_d = mean(&diffs);
    let var = diffs.iter().map(|d| (d - mean_d).powi(2)).sum::<f64>() / (n - 1.0);
    let df = n - 1.0;
    if var == 0.0 {
        return if mean_d == 0.0 {
            TTest {
                t: 0.0,
                p: 1.0,
                df,
                degenerate: false,
            }
        } else {
            TTest {
                t: if mean_d > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY },
                p: 0.0,
                df,
                degenerate: true,
            }
        };
    }
    let t = mean_d / (var / n).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    TTest {
        t,
        p,
        df,
        degenerate: false,
    }
}
