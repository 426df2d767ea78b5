//! Social influence scoring: visit profiles, user similarity, the fused
//! explicit/implicit friendship graph, personalized PageRank over it, and
//! the per-user social score rows.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::data::{FriendshipEdgeList, InteractionMatrix, PoiIdx, UserIdx};

/// Row-normalized visit frequencies of one user; weights sum to 1 over the
/// user's visited POIs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileVector {
    pub user: UserIdx,
    /// (poi, weight) sorted by POI index, every weight in (0, 1].
    pub weights: Vec<(PoiIdx, f64)>,
}

impl ProfileVector {
    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt()
    }
}

/// w_{u,l} = freq(u,l) / sum_j freq(u,j). None if the user has no check-ins.
pub fn build_profile(user: UserIdx, r: &InteractionMatrix) -> Option<ProfileVector> {
    let row = r.row(user);
    if row.is_empty() {
        return None;
    }
    let total: u64 = row.iter().map(|&(_, c)| c as u64).sum();
    let weights = row
        .iter()
        .map(|&(p, c)| (p, c as f64 / total as f64))
        .collect();
    Some(ProfileVector { user, weights })
}

/// Cosine of two sparse profile vectors; 0 when supports are disjoint or
/// either norm is zero.
pub fn cosine(a: &ProfileVector, b: &ProfileVector) -> f64 {
    let mut dot = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.weights.len() && j < b.weights.len() {
        let (pa, wa) = a.weights[i];
        let (pb, wb) = b.weights[j];
        match pa.cmp(&pb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += wa * wb;
                i += 1;
                j += 1;
            }
        }
    }
    if dot == 0.0 {
        return 0.0;
    }
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        (dot / denom).clamp(0.0, 1.0)
    }
}

/// Profile cosine similarity of two users; 0 if either has no check-ins.
pub fn profile_similarity(u1: UserIdx, u2: UserIdx, r: &InteractionMatrix) -> f64 {
    match (build_profile(u1, r), build_profile(u2, r)) {
        (Some(a), Some(b)) => cosine(&a, &b),
        _ => 0.0,
    }
}

/// Mean profile similarity over all friendship pairs.
pub fn average_friend_similarity(r: &InteractionMatrix, edges: &FriendshipEdgeList) -> f64 {
    assert!(!edges.is_empty());
    let profiles = build_all_profiles(r);
    let total: f64 = edges
        .edges()
        .par_iter()
        .map(|&(a, b)| match (&profiles[a as usize], &profiles[b as usize]) {
            (Some(pa), Some(pb)) => cosine(pa, pb),
            _ => 0.0,
        })
        .sum();
    total / edges.len() as f64
}

pub fn build_all_profiles(r: &InteractionMatrix) -> Vec<Option<ProfileVector>> {
    (0..r.m() as UserIdx).map(|u| build_profile(u, r)).collect()
}

/// Weighted user-user graph fusing explicit friendships and implicit
/// (shared-visit) similarity edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialGraph {
    pub beta: f64,
    /// Out-edges per user, sorted by target index; weights nonnegative and,
    /// for any user with at least one edge, summing to 1.
    rows: Vec<Vec<(UserIdx, f64)>>,
}

impl SocialGraph {
    pub fn num_users(&self) -> usize {
        self.rows.len()
    }

    pub fn out_edges(&self, user: UserIdx) -> &[(UserIdx, f64)] {
        &self.rows[user as usize]
    }

    pub fn num_edges(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn from_rows(beta: f64, rows: Vec<Vec<(UserIdx, f64)>>) -> Self {
        SocialGraph { beta, rows }
    }
}

/// Edge weights for one user: explicit friends carry (1 - beta), implicit
/// friends share beta proportionally to similarity, and a user appearing in
/// both gets the sum of the two terms. When only one kind of neighbor
/// exists, its term is renormalized so the row still sums to 1.
pub fn fuse_edge_weights(
    friends: &[UserIdx],
    implicit: &[(UserIdx, f64)],
    beta: f64,
) -> Vec<(UserIdx, f64)> {
    debug_assert!((0.0..=1.0).contains(&beta));
    let sim_sum: f64 = implicit.iter().map(|&(_, s)| s).sum();
    let have_friends = !friends.is_empty();
    let have_implicit = !implicit.is_empty() && sim_sum > 0.0;

    let mut weights: HashMap<UserIdx, f64> = HashMap::new();
    match (have_friends, have_implicit) {
        (true, true) => {
            let friend_share = (1.0 - beta) / friends.len() as f64;
            for &f in friends {
                *weights.entry(f).or_insert(0.0) += friend_share;
            }
            for &(u, s) in implicit {
                *weights.entry(u).or_insert(0.0) += beta * s / sim_sum;
            }
        }
        (true, false) => {
            let share = 1.0 / friends.len() as f64;
            for &f in friends {
                weights.insert(f, share);
            }
        }
        (false, true) => {
            for &(u, s) in implicit {
                weights.insert(u, s / sim_sum);
            }
        }
        (false, false) => {}
    }
    let mut row: Vec<(UserIdx, f64)> = weights.into_iter().collect();
    row.sort_unstable_by_key(|&(u, _)| u);
    row
}

/// Builds the fused graph from training interactions and friendship edges.
/// Implicit neighbors are users sharing at least `min_common_pois` visited
/// POIs, weighted by profile cosine similarity.
pub fn build_social_graph(
    r: &InteractionMatrix,
    edges: &FriendshipEdgeList,
    beta: f64,
    min_common_pois: u32,
) -> SocialGraph {
    assert!((0.0..=1.0).contains(&beta));
    let profiles = build_all_profiles(r);
    let adjacency = edges.adjacency(r.m());
    let visitors = r.poi_visitors();

    let rows: Vec<Vec<(UserIdx, f64)>> = (0..r.m())
        .into_par_iter()
        .map(|u| {
            let u = u as UserIdx;
            let mut common: HashMap<UserIdx, u32> = HashMap::new();
            for &(poi, _) in r.row(u) {
                for &other in &visitors[poi as usize] {
                    if other != u {
                        *common.entry(other).or_insert(0) += 1;
                    }
                }
            }
            let me = profiles[u as usize].as_ref();
            let mut implicit: Vec<(UserIdx, f64)> = common
                .into_iter()
                .filter(|&(_, c)| c >= min_common_pois)
                .filter_map(|(other, _)| {
                    let sim = match (me, profiles[other as usize].as_ref()) {
                        (Some(a), Some(b)) => cosine(a, b),
                        _ => 0.0,
                    };
                    (sim > 0.0).then_some((other, sim))
                })
                .collect();
            implicit.sort_unstable_by_key(|&(other, _)| other);
            fuse_edge_weights(&adjacency[u as usize], &implicit, beta)
        })
        .collect();
    SocialGraph { beta, rows }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PprConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PprConfig {
    fn default() -> Self {
        PprConfig {
            damping: 0.85,
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Proximity of every user to the source, as the stationary distribution of
/// a random walk with restart at the source.
#[derive(Debug, Clone, PartialEq)]
pub struct PprVector {
    pub source: UserIdx,
    pub scores: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Power iteration on pi = (1 - damping) e_src + damping P^T pi. Rows with
/// no out-edges teleport their mass back to the source. Stops when the L1
/// change drops below `tol`, else returns the last iterate unconverged.
pub fn personalized_pagerank(graph: &SocialGraph, source: UserIdx, cfg: &PprConfig) -> PprVector {
    assert!(cfg.damping > 0.0 && cfg.damping < 1.0);
    let n = graph.num_users();
    let src = source as usize;
    let mut scores = vec![0.0; n];
    scores[src] = 1.0;
    let mut next = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..cfg.max_iter {
        iterations += 1;
        next.iter_mut().for_each(|x| *x = 0.0);
        let mut dangling = 0.0;
        for (u, row) in graph.rows.iter().enumerate() {
            let mass = scores[u];
            if mass == 0.0 {
                continue;
            }
            if row.is_empty() {
                dangling += mass;
                continue;
            }
            for &(v, p) in row {
                next[v as usize] += cfg.damping * mass * p;
            }
        }
        next[src] += cfg.damping * dangling + (1.0 - cfg.damping);

        let diff: f64 = scores
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut scores, &mut next);
        if diff < cfg.tol {
            converged = true;
            break;
        }
    }
    PprVector {
        source,
        scores,
        converged,
        iterations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialScoreConfig {
    pub ppr: PprConfig,
    /// Keep only this many highest-ranked users per source before
    /// projecting onto POIs; None disables truncation.
    pub top_t: Option<usize>,
}

impl Default for SocialScoreConfig {
    fn default() -> Self {
        SocialScoreConfig {
            ppr: PprConfig::default(),
            top_t: Some(1000),
        }
    }
}

/// Social preference of one user for candidate POIs outside their own
/// training visits.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialScoreRow {
    pub user: UserIdx,
    /// (poi, score) sorted by POI index; POIs with no contribution absent.
    pub scores: Vec<(PoiIdx, f64)>,
    pub ppr_converged: bool,
}

/// Reusable state for scoring many users against one graph.
pub struct SocialScorer<'a> {
    graph: &'a SocialGraph,
    profiles: Vec<Option<ProfileVector>>,
    cfg: SocialScoreConfig,
}

impl<'a> SocialScorer<'a> {
    pub fn new(graph: &'a SocialGraph, r: &InteractionMatrix, cfg: SocialScoreConfig) -> Self {
        SocialScorer {
            graph,
            profiles: build_all_profiles(r),
            cfg,
        }
    }

    /// Accumulates pi_{u'} * w_{u',l} over users u' != u and their visited
    /// POIs l, keeping only candidates the source has not visited.
    pub fn score_row(&self, user: UserIdx, visited: &[bool]) -> SocialScoreRow {
        let ppr = personalized_pagerank(self.graph, user, &self.cfg.ppr);

        let mut contributors: Vec<(UserIdx, f64)> = ppr
            .scores
            .iter()
            .enumerate()
            .filter(|&(u, &pi)| u != user as usize && pi > 0.0)
            .map(|(u, &pi)| (u as UserIdx, pi))
            .collect();
        if let Some(t) = self.cfg.top_t {
            if contributors.len() > t {
                contributors.sort_unstable_by(|a, b| {
                    b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0))
                });
                contributors.truncate(t);
                contributors.sort_unstable_by_key(|&(u, _)| u);
            }
        }

        let mut scores: HashMap<PoiIdx, f64> = HashMap::new();
        for &(other, pi) in &contributors {
            let Some(profile) = self.profiles[other as usize].as_ref() else {
                continue;
            };
            for &(poi, w) in &profile.weights {
                if !visited[poi as usize] {
                    *scores.entry(poi).or_insert(0.0) += pi * w;
                }
            }
        }
        let mut scores: Vec<(PoiIdx, f64)> = scores.into_iter().collect();
        scores.sort_unstable_by_key(|&(p, _)| p);
        SocialScoreRow {
            user,
            scores,
            ppr_converged: ppr.converged,
        }
    }
}

/// One-shot form of `SocialScorer::score_row`.
pub fn social_scores(
    user: UserIdx,
    graph: &SocialGraph,
    r: &InteractionMatrix,
    cfg: SocialScoreConfig,
) -> SocialScoreRow {
    let scorer = SocialScorer::new(graph, r, cfg);
    scorer.score_row(user, &r.visited_mask(user))
}
