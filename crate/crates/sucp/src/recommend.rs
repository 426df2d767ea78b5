//! Score fusion, top-N ranking, and the popularity baseline.

use crate::data::{InteractionMatrix, PoiIdx, UserIdx};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    NoSocial,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoSocial => "no_social",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Variant::Full),
            "no_social" | "nosocial" | "no-social" => Ok(Variant::NoSocial),
            other => Err(format!("unknown variant {other:?} (expected full or no_social)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Additive smoothing applied to each factor before the product, so a
    /// single zero factor does not collapse the whole ranking.
    pub epsilon: f64,
    pub variant: Variant,
}

impl Default for FusionConfig {
    fn default() -> Self {
        FusionConfig {
            epsilon: 1e-9,
            variant: Variant::Full,
        }
    }
}

/// Product fusion of the social, temporal-center, and preference scores.
/// The no-social variant drops the social factor entirely.
pub fn fuse_scores(social: f64, tc: f64, z: f64, cfg: &FusionConfig) -> f64 {
    debug_assert!(social >= 0.0 && tc >= 0.0 && z >= 0.0);
    let e = cfg.epsilon;
    match cfg.variant {
        Variant::Full => (social + e) * (tc + e) * (z + e),
        Variant::NoSocial => (tc + e) * (z + e),
    }
}

/// Ranked recommendation list for one user. Never contains a POI the user
/// visited in training.
#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub user: UserIdx,
    /// (poi, score) with scores nonincreasing; ties broken by POI index.
    pub ranked: Vec<(PoiIdx, f64)>,
    /// True when fewer than the requested N candidates existed.
    pub truncated: bool,
}

/// Sorts candidates by score descending (ties by POI index ascending) and
/// keeps the top N.
pub fn recommend_top_n(
    user: UserIdx,
    mut scores: Vec<(PoiIdx, f64)>,
    n: usize,
) -> Recommendation {
    scores.sort_unstable_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let truncated = scores.len() < n;
    scores.truncate(n);
    Recommendation {
        user,
        ranked: scores,
        truncated,
    }
}

/// Non-personalized baseline: POIs ranked by total training visits, the
/// user's own visited POIs excluded.
pub fn top_popular(r: &InteractionMatrix, user: UserIdx, n: usize) -> Recommendation {
    let totals = r.poi_totals();
    let visited = r.visited_mask(user);
    let candidates: Vec<(PoiIdx, f64)> = totals
        .iter()
        .enumerate()
        .filter(|&(p, &t)| t > 0 && !visited[p])
        .map(|(p, &t)| (p as PoiIdx, t as f64))
        .collect();
    recommend_top_n(user, candidates, n)
}
