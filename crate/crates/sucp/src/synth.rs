//! Synthetic check-in corpus generator for tests, benchmarks, and demo runs.
//!
//! Users come in friend cliques; sibling cliques share one city POI pool,
//! so a POI being popular in the city does not reveal whether the user's
//! friends visited it. Test-period check-ins are planted at POIs the user's
//! friends favored during training, plus one popular hub POI near the
//! boundary of the global top-10, so a social signal and a popularity
//! signal both exist with known strength.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{CheckInLog, FriendshipEdgeList, RawCheckIn};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_groups: usize,
    pub group_size: usize,
    /// POIs in each group's private pool.
    pub pois_per_group: usize,
    /// Distinct pool POIs each user visits during training.
    pub train_pool_pois: usize,
    /// Training check-ins spread over those POIs (with repeats).
    pub train_pool_visits: usize,
    /// Globally shared hub POIs with a popularity ladder.
    pub hub_count: usize,
    /// Hub visits per user during training.
    pub hub_visits_per_user: usize,
    /// Validation check-ins (repeats of own pool POIs).
    pub valid_visits: usize,
    /// Test check-ins planted at friends' training POIs.
    pub planted_tests: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_groups: 40,
            group_size: 5,
            pois_per_group: 32,
            train_pool_pois: 7,
            train_pool_visits: 21,
            hub_count: 80,
            hub_visits_per_user: 6,
            valid_visits: 3,
            planted_tests: 5,
            seed: 20210601,
        }
    }
}

impl SynthConfig {
    pub fn num_users(&self) -> usize {
        self.num_groups * self.group_size
    }

    pub fn checkins_per_user(&self) -> usize {
        self.train_pool_visits + self.hub_visits_per_user + self.valid_visits + self.test_len()
    }

    fn train_len(&self) -> usize {
        self.train_pool_visits + self.hub_visits_per_user
    }

    fn test_len(&self) -> usize {
        self.planted_tests + 1
    }

    /// train_frac / valid_frac values that carve exactly at the generated
    /// segment boundaries.
    pub fn exact_fracs(&self) -> (f64, f64) {
        let c = self.checkins_per_user() as f64;
        (self.train_len() as f64 / c, self.valid_visits as f64 / c)
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub checkins: Vec<RawCheckIn>,
    pub friendships: Vec<(String, String)>,
}

impl SynthData {
    pub fn into_log(&self) -> (CheckInLog, FriendshipEdgeList) {
        let log = CheckInLog::from_raw(&self.checkins);
        let edges = FriendshipEdgeList::new(self.friendships.iter().filter_map(|(a, b)| {
            Some((log.user_idx(a)?, log.user_idx(b)?))
        }));
        (log, edges)
    }

    pub fn write_files(&self, checkins_path: &Path, friendships_path: &Path) -> Result<()> {
        let mut out = String::new();
        for c in &self.checkins {
            let _ = writeln!(
                out,
                "{}\t{}\t{:.6}\t{:.6}\t{}",
                c.user_id, c.poi_id, c.lat, c.lon, c.timestamp
            );
        }
        std::fs::write(checkins_path, out).map_err(|e| Error::io(checkins_path, e))?;
        let mut out = String::new();
        for (a, b) in &self.friendships {
            let _ = writeln!(out, "{a}\t{b}");
        }
        std::fs::write(friendships_path, out).map_err(|e| Error::io(friendships_path, e))?;
        Ok(())
    }
}

/// Repeat counts for the pool POIs of one user: front-loaded so the first
/// POI dominates the visit profile, summing to `total`.
fn visit_counts(pois: usize, total: usize) -> Vec<usize> {
    assert!(total >= pois);
    let mut counts = vec![1usize; pois];
    let mut left = total - pois;
    let mut i = 0;
    while left > 0 {
        counts[i % pois] += 1;
        left -= 1;
        i += 1;
    }
    counts.sort_unstable_by(|a, b| b.cmp(a));
    counts
}

pub fn generate(cfg: &SynthConfig) -> SynthData {
    assert!(cfg.group_size >= 2, "cliques need at least two users");
    assert!(cfg.train_pool_pois <= cfg.pois_per_group);
    assert!(cfg.hub_visits_per_user < cfg.hub_count);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let num_users = cfg.num_users();

    // sibling cliques (2g, 2g+1) share city g; hubs downtown at the origin
    let num_cities = cfg.num_groups.div_ceil(2);
    let city_center = |c: usize| {
        let row = (c / 8) as f64;
        let col = (c % 8) as f64;
        (10.0 + row * 6.0, -40.0 + col * 9.0)
    };
    let hub_coord = |h: usize| (0.0, 0.5 * h as f64);

    let pool_id = |c: usize, p: usize| format!("c{c:03}p{p:02}");
    let hub_id = |h: usize| format!("hub{h:02}");
    let user_id = |u: usize| format!("u{u:04}");
    let group_of = |u: usize| u / cfg.group_size;
    let city_of = |g: usize| g / 2;

    // fixed coordinates per POI
    let mut pool_coords = vec![vec![(0.0, 0.0); cfg.pois_per_group]; num_cities];
    for (c, row) in pool_coords.iter_mut().enumerate() {
        let (lat, lon) = city_center(c);
        for (p, slot) in row.iter_mut().enumerate() {
            *slot = (
                lat + rng.gen_range(-0.01..0.01) + 0.002 * (p % 5) as f64,
                lon + rng.gen_range(-0.01..0.01) + 0.002 * (p / 5) as f64,
            );
        }
    }

    // pass 1: training choices
    let mut train_pools: Vec<Vec<(usize, usize)>> = Vec::with_capacity(num_users); // (pool poi, repeats)
    let mut train_hubs: Vec<Vec<usize>> = Vec::with_capacity(num_users);
    let mut hub_train_counts = vec![0usize; cfg.hub_count];
    // equal draw weights: the realized popularity ranking is meaningful on
    // the full data but reshuffles once training is subsampled
    let hub_weights: Vec<f64> = vec![1.0; cfg.hub_count];
    for _u in 0..num_users {
        let mut pois: Vec<usize> = (0..cfg.pois_per_group).collect();
        pois.shuffle(&mut rng);
        pois.truncate(cfg.train_pool_pois);
        let counts = visit_counts(cfg.train_pool_pois, cfg.train_pool_visits);
        train_pools.push(pois.iter().copied().zip(counts).collect());

        let mut hubs = Vec::new();
        while hubs.len() < cfg.hub_visits_per_user {
            let total: f64 = hub_weights.iter().sum();
            let mut pick = rng.gen_range(0.0..total);
            let mut h = 0;
            for (i, w) in hub_weights.iter().enumerate() {
                if pick < *w {
                    h = i;
                    break;
                }
                pick -= w;
            }
            if !hubs.contains(&h) {
                hubs.push(h);
            }
        }
        for &h in &hubs {
            hub_train_counts[h] += 1;
        }
        train_hubs.push(hubs);
    }

    // hubs at the boundary of the global top-10 carry the popularity signal
    // for test check-ins: always recommended by a frequency ranker on the
    // full data, reshuffled out of the top list once training is thinned
    let mut hub_rank: Vec<usize> = (0..cfg.hub_count).collect();
    hub_rank.sort_unstable_by(|&a, &b| hub_train_counts[b].cmp(&hub_train_counts[a]).then(a.cmp(&b)));
    let boundary_count = hub_train_counts[hub_rank[10.min(cfg.hub_count - 1)]];
    let mut top_hubs: Vec<usize> = hub_rank[..10.min(cfg.hub_count)]
        .iter()
        .copied()
        .filter(|&h| hub_train_counts[h] > boundary_count)
        .rev() // closest to the boundary first
        .take(6)
        .collect();
    for &h in &hub_rank {
        if top_hubs.len() > cfg.hub_visits_per_user {
            break;
        }
        if !top_hubs.contains(&h) {
            top_hubs.push(h);
        }
    }

    // pass 2: plant test POIs from friends' training pools
    let mut checkins = Vec::with_capacity(num_users * cfg.checkins_per_user());
    let base_ts: i64 = 1_600_000_000;
    let step: i64 = 13 * 3600;

    for u in 0..num_users {
        let g = group_of(u);
        let city = city_of(g);
        let own_pool: Vec<usize> = train_pools[u].iter().map(|&(p, _)| p).collect();

        // friends are the own clique; the sibling clique shares the city
        // pool and supplies equally popular decoys
        let group_start = g * cfg.group_size;
        let sibling = g ^ 1;
        let mut friend_visitors = vec![0i64; cfg.pois_per_group];
        let mut sibling_visitors = vec![0i64; cfg.pois_per_group];
        for (v, pool) in train_pools
            .iter()
            .enumerate()
            .take(group_start + cfg.group_size)
            .skip(group_start)
        {
            if v == u {
                continue;
            }
            for &(p, _) in pool {
                friend_visitors[p] += 1;
            }
        }
        if sibling < cfg.num_groups {
            let sib_start = sibling * cfg.group_size;
            for pool in train_pools.iter().take(sib_start + cfg.group_size).skip(sib_start) {
                for &(p, _) in pool {
                    sibling_visitors[p] += 1;
                }
            }
        }
        let mut plant_candidates: Vec<usize> = (0..cfg.pois_per_group)
            .filter(|&p| friend_visitors[p] > 0 && !own_pool.contains(&p))
            .collect();
        plant_candidates.sort_unstable_by(|&a, &b| {
            let score = |p: usize| 2 * friend_visitors[p] - sibling_visitors[p];
            score(b).cmp(&score(a)).then(a.cmp(&b))
        });
        let mut plants: Vec<usize> = plant_candidates
            .iter()
            .copied()
            .take(cfg.planted_tests)
            .collect();
        // fallback: any unvisited pool POI keeps the test set full
        let mut fallback: Vec<usize> = (0..cfg.pois_per_group)
            .filter(|&p| !own_pool.contains(&p) && !plants.contains(&p))
            .collect();
        fallback.shuffle(&mut rng);
        while plants.len() < cfg.planted_tests {
            plants.push(fallback.pop().expect("pool large enough for test plants"));
        }

        let hub_choices: Vec<usize> = top_hubs
            .iter()
            .copied()
            .filter(|h| !train_hubs[u].contains(h))
            .collect();
        let test_hub = hub_choices[rng.gen_range(0..hub_choices.len())];

        // emit: pool training visits, hub training visits, valid repeats,
        // then the test segment, all on a strictly increasing clock
        let mut seq = 0i64;
        let mut push = |poi_id: String, lat: f64, lon: f64, checkins: &mut Vec<RawCheckIn>| {
            checkins.push(RawCheckIn {
                user_id: user_id(u),
                poi_id,
                lat,
                lon,
                timestamp: base_ts + u as i64 * 37 + seq * step,
            });
            seq += 1;
        };

        let mut train_visits = Vec::new();
        for &(p, reps) in &train_pools[u] {
            for _ in 0..reps {
                train_visits.push(p);
            }
        }
        train_visits.shuffle(&mut rng);
        for p in train_visits {
            let (lat, lon) = pool_coords[city][p];
            push(pool_id(city, p), lat, lon, &mut checkins);
        }
        for &h in &train_hubs[u] {
            let (lat, lon) = hub_coord(h);
            push(hub_id(h), lat, lon, &mut checkins);
        }
        // valid: revisit the most-visited own POI
        let favorite = train_pools[u][0].0;
        for _ in 0..cfg.valid_visits {
            let (lat, lon) = pool_coords[city][favorite];
            push(pool_id(city, favorite), lat, lon, &mut checkins);
        }
        for &p in &plants {
            let (lat, lon) = pool_coords[city][p];
            push(pool_id(city, p), lat, lon, &mut checkins);
        }
        let (lat, lon) = hub_coord(test_hub);
        push(hub_id(test_hub), lat, lon, &mut checkins);
    }

    // friendship cliques per group
    let mut friendships = Vec::new();
    for g in 0..cfg.num_groups {
        let start = g * cfg.group_size;
        for i in start..start + cfg.group_size {
            for j in (i + 1)..start + cfg.group_size {
                friendships.push((user_id(i), user_id(j)));
            }
        }
    }

    SynthData {
        checkins,
        friendships,
    }
}
