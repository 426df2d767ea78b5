//! Check-in corpus: ingestion, preprocessing filters, chronological splits,
//! friendship edges, and the sparse user-POI interaction matrix.

mod ingest;
mod overlap;
mod split;

pub use ingest::{ingest, parse_timestamp, IngestStats};
pub use overlap::{filter_friendships_by_overlap, training_overlap};
pub use split::{chronological_split, subsample_training, DatasetSplit};

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geo::GeoPoint;

pub type UserIdx = u32;
pub type PoiIdx = u32;

/// One timestamped visit of a user to a POI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckIn {
    pub user: UserIdx,
    pub poi: PoiIdx,
    pub lat: f64,
    pub lon: f64,
    /// UTC seconds since epoch, strictly positive.
    pub timestamp: i64,
}

/// A check-in record as read from disk, before index assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCheckIn {
    pub user_id: String,
    pub poi_id: String,
    pub lat: f64,
    pub lon: f64,
    pub timestamp: i64,
}

/// Check-in corpus with dense user/POI indices.
///
/// Indices are assigned in order of first appearance and are bijective over
/// the users and POIs present. Splits derived from a log share its index
/// space, so a split part may contain users or POIs with no check-ins in
/// that part.
#[derive(Debug, Clone, Default)]
pub struct CheckInLog {
    pub checkins: Vec<CheckIn>,
    user_ids: Vec<String>,
    poi_ids: Vec<String>,
    user_index: HashMap<String, UserIdx>,
    poi_index: HashMap<String, PoiIdx>,
}

impl CheckInLog {
    pub fn from_raw(raw: &[RawCheckIn]) -> Self {
        let mut log = CheckInLog::default();
        for r in raw {
            let user = log.intern_user(&r.user_id);
            let poi = log.intern_poi(&r.poi_id);
            log.checkins.push(CheckIn {
                user,
                poi,
                lat: r.lat,
                lon: r.lon,
                timestamp: r.timestamp,
            });
        }
        log
    }

    /// Rebuilds a log from explicit index tables, e.g. when loading cached
    /// splits. Check-in indices must fall inside the tables.
    pub fn from_parts(
        user_ids: Vec<String>,
        poi_ids: Vec<String>,
        checkins: Vec<CheckIn>,
    ) -> Result<Self> {
        for c in &checkins {
            if c.user as usize >= user_ids.len() || c.poi as usize >= poi_ids.len() {
                return Err(Error::DimensionMismatch(
                    "check-in index outside id tables".into(),
                ));
            }
        }
        let user_index = user_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as UserIdx))
            .collect();
        let poi_index = poi_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as PoiIdx))
            .collect();
        Ok(CheckInLog {
            checkins,
            user_ids,
            poi_ids,
            user_index,
            poi_index,
        })
    }

    fn intern_user(&mut self, id: &str) -> UserIdx {
        if let Some(&idx) = self.user_index.get(id) {
            return idx;
        }
        let idx = self.user_ids.len() as UserIdx;
        self.user_ids.push(id.to_string());
        self.user_index.insert(id.to_string(), idx);
        idx
    }

    fn intern_poi(&mut self, id: &str) -> PoiIdx {
        if let Some(&idx) = self.poi_index.get(id) {
            return idx;
        }
        let idx = self.poi_ids.len() as PoiIdx;
        self.poi_ids.push(id.to_string());
        self.poi_index.insert(id.to_string(), idx);
        idx
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_pois(&self) -> usize {
        self.poi_ids.len()
    }

    pub fn len(&self) -> usize {
        self.checkins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.checkins.is_empty()
    }

    pub fn user_id(&self, idx: UserIdx) -> &str {
        &self.user_ids[idx as usize]
    }

    pub fn poi_id(&self, idx: PoiIdx) -> &str {
        &self.poi_ids[idx as usize]
    }

    pub fn user_idx(&self, id: &str) -> Option<UserIdx> {
        self.user_index.get(id).copied()
    }

    pub fn poi_idx(&self, id: &str) -> Option<PoiIdx> {
        self.poi_index.get(id).copied()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn poi_ids(&self) -> &[String] {
        &self.poi_ids
    }

    /// New log with the same index space, keeping only selected check-ins.
    pub fn filtered(&self, mut keep: impl FnMut(&CheckIn) -> bool) -> CheckInLog {
        CheckInLog {
            checkins: self.checkins.iter().filter(|c| keep(c)).copied().collect(),
            user_ids: self.user_ids.clone(),
            poi_ids: self.poi_ids.clone(),
            user_index: self.user_index.clone(),
            poi_index: self.poi_index.clone(),
        }
    }

    /// Same index space, replacing the check-in list.
    pub(crate) fn with_checkins(&self, checkins: Vec<CheckIn>) -> CheckInLog {
        CheckInLog {
            checkins,
            user_ids: self.user_ids.clone(),
            poi_ids: self.poi_ids.clone(),
            user_index: self.user_index.clone(),
            poi_index: self.poi_index.clone(),
        }
    }

    /// Check-in positions grouped by user, in input order.
    pub fn by_user(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_users()];
        for (i, c) in self.checkins.iter().enumerate() {
            groups[c.user as usize].push(i);
        }
        groups
    }

    /// Coordinates per POI, taken from its first check-in.
    pub fn poi_coords(&self) -> Vec<GeoPoint> {
        let mut coords = vec![
            GeoPoint {
                lat: f64::NAN,
                lon: f64::NAN
            };
            self.num_pois()
        ];
        let mut seen = vec![false; self.num_pois()];
        for c in &self.checkins {
            let p = c.poi as usize;
            if !seen[p] {
                seen[p] = true;
                coords[p] = GeoPoint {
                    lat: c.lat,
                    lon: c.lon,
                };
            }
        }
        coords
    }
}

/// Undirected friendship edges over user indices; no self-loops, no duplicates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FriendshipEdgeList {
    edges: Vec<(UserIdx, UserIdx)>,
}

impl FriendshipEdgeList {
    /// Normalizes to (min, max) pairs, dropping self-loops and duplicates.
    pub fn new(pairs: impl IntoIterator<Item = (UserIdx, UserIdx)>) -> Self {
        let mut edges: Vec<(UserIdx, UserIdx)> = pairs
            .into_iter()
            .filter(|&(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        edges.sort_unstable();
        edges.dedup();
        FriendshipEdgeList { edges }
    }

    pub fn edges(&self) -> &[(UserIdx, UserIdx)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Neighbor lists indexed by user, sorted ascending.
    pub fn adjacency(&self, num_users: usize) -> Vec<Vec<UserIdx>> {
        let mut adj = vec![Vec::new(); num_users];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }
}

/// Sparse user-POI check-in frequency matrix. Absent entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    rows: Vec<Vec<(PoiIdx, u32)>>,
    num_pois: usize,
    nnz: usize,
}

impl InteractionMatrix {
    /// Builds from per-user rows of (poi, count) pairs. Rows are sorted and
    /// zero counts dropped; `num_pois` must exceed every POI index.
    pub fn from_rows(rows: Vec<Vec<(PoiIdx, u32)>>, num_pois: usize) -> Self {
        let mut nnz = 0;
        let rows: Vec<Vec<(PoiIdx, u32)>> = rows
            .into_iter()
            .map(|mut row| {
                row.retain(|&(_, c)| c > 0);
                row.sort_unstable_by_key(|&(p, _)| p);
                debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
                debug_assert!(row.iter().all(|&(p, _)| (p as usize) < num_pois));
                nnz += row.len();
                row
            })
            .collect();
        InteractionMatrix {
            rows,
            num_pois,
            nnz,
        }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.num_pois
    }

    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// (poi, count) pairs for one user, sorted by POI index; counts all positive.
    pub fn row(&self, user: UserIdx) -> &[(PoiIdx, u32)] {
        &self.rows[user as usize]
    }

    pub fn count(&self, user: UserIdx, poi: PoiIdx) -> u32 {
        let row = &self.rows[user as usize];
        match row.binary_search_by_key(&poi, |&(p, _)| p) {
            Ok(i) => row[i].1,
            Err(_) => 0,
        }
    }

    pub fn user_total(&self, user: UserIdx) -> u64 {
        self.rows[user as usize].iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn total(&self) -> u64 {
        (0..self.m()).map(|u| self.user_total(u as UserIdx)).sum()
    }

    pub fn sparsity(&self) -> f64 {
        let cells = self.m() as f64 * self.n() as f64;
        if cells == 0.0 {
            0.0
        } else {
            1.0 - self.nnz as f64 / cells
        }
    }

    /// Total check-in count per POI across all users.
    pub fn poi_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.num_pois];
        for row in &self.rows {
            for &(p, c) in row {
                totals[p as usize] += c as u64;
            }
        }
        totals
    }

    /// Visitors per POI, ascending user index.
    pub fn poi_visitors(&self) -> Vec<Vec<UserIdx>> {
        let mut visitors = vec![Vec::new(); self.num_pois];
        for (u, row) in self.rows.iter().enumerate() {
            for &(p, _) in row {
                visitors[p as usize].push(u as UserIdx);
            }
        }
        visitors
    }

    /// True at `poi` if the user has visited it.
    pub fn visited_mask(&self, user: UserIdx) -> Vec<bool> {
        let mut mask = vec![false; self.num_pois];
        for &(p, _) in self.row(user) {
            mask[p as usize] = true;
        }
        mask
    }
}

/// r_{u,l} = number of check-ins of user u at POI l.
pub fn build_interaction_matrix(log: &CheckInLog) -> InteractionMatrix {
    let mut maps: Vec<HashMap<PoiIdx, u32>> = vec![HashMap::new(); log.num_users()];
    for c in &log.checkins {
        *maps[c.user as usize].entry(c.poi).or_insert(0) += 1;
    }
    let mut nnz = 0;
    let rows = maps
        .into_iter()
        .map(|m| {
            let mut row: Vec<(PoiIdx, u32)> = m.into_iter().collect();
            row.sort_unstable_by_key(|&(p, _)| p);
            nnz += row.len();
            row
        })
        .collect();
    InteractionMatrix {
        rows,
        num_pois: log.num_pois(),
        nnz,
    }
}

/// Iteratively removes users below `min_user_checkins` and POIs below
/// `min_poi_checkins` until both thresholds hold, then reindexes densely.
/// Edges with a removed endpoint are dropped.
pub fn preprocess(
    log: &CheckInLog,
    edges: &FriendshipEdgeList,
    min_user_checkins: u32,
    min_poi_checkins: u32,
) -> Result<(CheckInLog, FriendshipEdgeList)> {
    assert!(min_user_checkins >= 1 && min_poi_checkins >= 1);

    let mut user_ok = vec![true; log.num_users()];
    let mut poi_ok = vec![true; log.num_pois()];
    loop {
        let mut user_counts = vec![0u32; log.num_users()];
        let mut poi_counts = vec![0u32; log.num_pois()];
        for c in &log.checkins {
            if user_ok[c.user as usize] && poi_ok[c.poi as usize] {
                user_counts[c.user as usize] += 1;
                poi_counts[c.poi as usize] += 1;
            }
        }
        let mut changed = false;
        for (u, ok) in user_ok.iter_mut().enumerate() {
            if *ok && user_counts[u] < min_user_checkins {
                *ok = false;
                changed = true;
            }
        }
        for (p, ok) in poi_ok.iter_mut().enumerate() {
            if *ok && poi_counts[p] < min_poi_checkins {
                *ok = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut out = CheckInLog::default();
    for c in &log.checkins {
        if user_ok[c.user as usize] && poi_ok[c.poi as usize] {
            let user = out.intern_user(log.user_id(c.user));
            let poi = out.intern_poi(log.poi_id(c.poi));
            out.checkins.push(CheckIn {
                user,
                poi,
                lat: c.lat,
                lon: c.lon,
                timestamp: c.timestamp,
            });
        }
    }
    if out.checkins.is_empty() {
        return Err(Error::EmptyAfterPreprocess {
            min_user: min_user_checkins,
            min_poi: min_poi_checkins,
        });
    }

    let remapped = edges.edges().iter().filter_map(|&(a, b)| {
        let a2 = out.user_idx(log.user_id(a))?;
        let b2 = out.user_idx(log.user_id(b))?;
        Some((a2, b2))
    });
    let out_edges = FriendshipEdgeList::new(remapped);
    Ok((out, out_edges))
}
