//! End-to-end orchestration: prepare (ingest, filter, split), train (factor
//! models, activity centers, social graph), score, and evaluate, with
//! fingerprint-keyed caching of the expensive intermediates.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{EvalSplit, RunConfig};
use crate::data::{
    build_interaction_matrix, chronological_split, filter_friendships_by_overlap, ingest,
    subsample_training, CheckIn, CheckInLog, DatasetSplit, FriendshipEdgeList, InteractionMatrix,
    PoiIdx, UserIdx,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricsReport, Recommender};
use crate::geo::{
    find_all_activity_centers, haversine, temporal_center_score, ActivityCenter,
    ActivityCenterSet, GeoPoint,
};
use crate::mf::{
    aggregate_temporal, preference_score, split_temporal, train_mf, FactorModel, MfConfig,
    PreferenceMatrix,
};
use crate::recommend::{fuse_scores, recommend_top_n, top_popular, Recommendation, Variant};
use crate::social::{build_social_graph, SocialGraph, SocialScorer};

/// Prepared dataset: chronological split, surviving friendship edges, and
/// the training interaction matrix.
pub struct PreparedData {
    pub split: DatasetSplit,
    pub edges: FriendshipEdgeList,
    pub train_matrix: InteractionMatrix,
    pub manifest: String,
}

/// Everything needed to score candidates for any user.
pub struct ModelBundle {
    pub static_model: FactorModel,
    pub rhat: PreferenceMatrix,
    pub centers: Vec<ActivityCenterSet>,
    pub graph: SocialGraph,
    pub filtered_edges: FriendshipEdgeList,
}

fn atomic_write(path: &Path, content: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn checkin_lines(log: &CheckInLog) -> String {
    let mut out = String::new();
    for c in &log.checkins {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            log.user_id(c.user),
            log.poi_id(c.poi),
            c.lat,
            c.lon,
            c.timestamp
        );
    }
    out
}

fn parse_cached_checkins(path: &Path, log_template: &CheckInLog) -> Result<Vec<CheckIn>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut checkins = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = || Error::CacheCorrupt {
            path: path.to_path_buf(),
            msg: format!("line {}", lineno + 1),
        };
        if fields.len() != 5 {
            return Err(bad());
        }
        let user = log_template.user_idx(fields[0]).ok_or_else(bad)?;
        let poi = log_template.poi_idx(fields[1]).ok_or_else(bad)?;
        checkins.push(CheckIn {
            user,
            poi,
            lat: fields[2].parse().map_err(|_| bad())?,
            lon: fields[3].parse().map_err(|_| bad())?,
            timestamp: fields[4].parse().map_err(|_| bad())?,
        });
    }
    Ok(checkins)
}

fn build_manifest(cfg: &RunConfig, split: &DatasetSplit, edges: &FriendshipEdgeList) -> String {
    let train_matrix = build_interaction_matrix(&split.train);
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv(
        "data.checkins",
        cfg.checkins_path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
    );
    kv(
        "data.friendships",
        cfg.friendships_path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
    );
    kv("data.min_user_checkins", cfg.min_user_checkins.to_string());
    kv("data.min_poi_checkins", cfg.min_poi_checkins.to_string());
    kv("split.train_frac", cfg.train_frac.to_string());
    kv("split.valid_frac", cfg.valid_frac.to_string());
    kv("split.train_fraction", cfg.train_fraction.to_string());
    kv("seed", cfg.seed.to_string());
    kv("counts.users", split.train.num_users().to_string());
    kv("counts.pois", split.train.num_pois().to_string());
    kv("counts.train_checkins", split.train.len().to_string());
    kv("counts.valid_checkins", split.valid.len().to_string());
    kv("counts.test_checkins", split.test.len().to_string());
    kv("counts.edges", edges.len().to_string());
    kv("train.sparsity", format!("{:.6}", train_matrix.sparsity()));
    kv("fingerprint.data", cfg.data_fingerprint());
    out
}

fn prepared_dir(cfg: &RunConfig) -> PathBuf {
    cfg.cache_dir.join(format!("prepared-{}", cfg.data_fingerprint()))
}

fn save_prepared(cfg: &RunConfig, prepared: &PreparedData) -> Result<()> {
    let dir = prepared_dir(cfg);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    atomic_write(
        &dir.join("users.txt"),
        prepared.split.train.user_ids().join("\n").as_bytes(),
    )?;
    atomic_write(
        &dir.join("pois.txt"),
        prepared.split.train.poi_ids().join("\n").as_bytes(),
    )?;
    atomic_write(&dir.join("train.tsv"), checkin_lines(&prepared.split.train).as_bytes())?;
    atomic_write(&dir.join("valid.tsv"), checkin_lines(&prepared.split.valid).as_bytes())?;
    atomic_write(&dir.join("test.tsv"), checkin_lines(&prepared.split.test).as_bytes())?;
    let mut edges = String::new();
    for &(a, b) in prepared.edges.edges() {
        let _ = writeln!(
            edges,
            "{}\t{}",
            prepared.split.train.user_id(a),
            prepared.split.train.user_id(b)
        );
    }
    atomic_write(&dir.join("edges.tsv"), edges.as_bytes())?;
    // manifest last: its presence marks the cache entry complete
    atomic_write(&dir.join("manifest.txt"), prepared.manifest.as_bytes())?;
    Ok(())
}

fn load_prepared(cfg: &RunConfig) -> Result<Option<PreparedData>> {
    let dir = prepared_dir(cfg);
    let manifest_path = dir.join("manifest.txt");
    if !manifest_path.exists() {
        return Ok(None);
    }
    let manifest = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let read_ids = |name: &str| -> Result<Vec<String>> {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(text.lines().map(str::to_string).collect())
    };
    let user_ids = read_ids("users.txt")?;
    let poi_ids = read_ids("pois.txt")?;
    let template = CheckInLog::from_parts(user_ids.clone(), poi_ids.clone(), Vec::new())?;
    let mut parts = Vec::new();
    for name in ["train.tsv", "valid.tsv", "test.tsv"] {
        let checkins = parse_cached_checkins(&dir.join(name), &template)?;
        parts.push(CheckInLog::from_parts(
            user_ids.clone(),
            poi_ids.clone(),
            checkins,
        )?);
    }
    let test = parts.pop().unwrap();
    let valid = parts.pop().unwrap();
    let train = parts.pop().unwrap();

    let edges_path = dir.join("edges.tsv");
    let text = fs::read_to_string(&edges_path).map_err(|e| Error::io(&edges_path, e))?;
    let mut pairs = Vec::new();
    for line in text.lines() {
        let (a, b) = line.split_once('\t').ok_or_else(|| Error::CacheCorrupt {
            path: edges_path.clone(),
            msg: "bad edge line".into(),
        })?;
        let (Some(a), Some(b)) = (template.user_idx(a), template.user_idx(b)) else {
            return Err(Error::CacheCorrupt {
                path: edges_path.clone(),
                msg: "edge user missing from id table".into(),
            });
        };
        pairs.push((a, b));
    }
    let edges = FriendshipEdgeList::new(pairs);
    let train_matrix = build_interaction_matrix(&train);
    log::info!("prepare: cache hit at {}", dir.display());
    Ok(Some(PreparedData {
        split: DatasetSplit { train, valid, test },
        edges,
        train_matrix,
        manifest,
    }))
}

/// Ingest, preprocess, split, and (optionally) subsample, without touching
/// the cache.
pub fn prepare_uncached(cfg: &RunConfig) -> Result<PreparedData> {
    let checkins_path = cfg
        .checkins_path
        .as_ref()
        .ok_or_else(|| Error::Config("data.checkins is required".into()))?;
    let friendships_path = cfg
        .friendships_path
        .as_ref()
        .ok_or_else(|| Error::Config("data.friendships is required".into()))?;
    let (log, edges, stats) = ingest(checkins_path, friendships_path)?;
    log::info!(
        "ingested {} check-ins ({} skipped), {} edges",
        log.len(),
        stats.checkin_rows_skipped,
        edges.len()
    );
    let (log, edges) = crate::data::preprocess(
        &log,
        &edges,
        cfg.min_user_checkins,
        cfg.min_poi_checkins,
    )?;
    log::info!(
        "preprocessed to {} users, {} POIs, {} check-ins, {} edges",
        log.num_users(),
        log.num_pois(),
        log.len(),
        edges.len()
    );
    let mut split = chronological_split(&log, cfg.train_frac, cfg.valid_frac);
    if cfg.train_fraction < 1.0 {
        split = subsample_training(&split, cfg.train_fraction, cfg.seed);
        log::info!(
            "subsampled training to {} check-ins ({}%)",
            split.train.len(),
            cfg.train_fraction * 100.0
        );
    }
    let manifest = build_manifest(cfg, &split, &edges);
    let train_matrix = build_interaction_matrix(&split.train);
    Ok(PreparedData {
        split,
        edges,
        train_matrix,
        manifest,
    })
}

/// Cached prepare: reuses the artifact keyed by the data fingerprint when
/// present, otherwise computes and stores it.
pub fn prepare(cfg: &RunConfig) -> Result<PreparedData> {
    if let Some(prepared) = load_prepared(cfg)? {
        return Ok(prepared);
    }
    let prepared = prepare_uncached(cfg)?;
    save_prepared(cfg, &prepared)?;
    Ok(prepared)
}

// --- factor model cache ------------------------------------------------

fn write_factors(path: &Path, seed: u64, fp: &str, models: &[(String, &FactorModel)]) -> Result<()> {
    let mut buf = Vec::new();
    let first = models.first().expect("at least one model").1;
    buf.extend_from_slice(b"SUCPMF1\n");
    buf.extend_from_slice(
        format!(
            "k={} m={} n={} models={} seed={} fp={}\n",
            first.k,
            first.num_users,
            first.num_pois,
            models.len(),
            seed,
            fp
        )
        .as_bytes(),
    );
    for (name, model) in models {
        buf.extend_from_slice(
            format!("name={} epochs={}\n", name, model.epoch_losses.len()).as_bytes(),
        );
        for &x in &model.epoch_losses {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for &x in &model.user_factors {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for &x in &model.poi_factors {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    atomic_write(path, &buf)
}

fn read_factors(path: &Path) -> Result<Vec<(String, FactorModel)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let corrupt = |msg: &str| Error::CacheCorrupt {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    let mut line = String::new();
    reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    if line != "SUCPMF1\n" {
        return Err(corrupt("bad magic"));
    }
    line.clear();
    reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    let mut header = HashMap::new();
    for part in line.trim().split(' ') {
        if let Some((k, v)) = part.split_once('=') {
            header.insert(k.to_string(), v.to_string());
        }
    }
    let get = |k: &str| -> Result<usize> {
        header
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| corrupt(&format!("missing header field {k}")))
    };
    let (k, m, n, count) = (get("k")?, get("m")?, get("n")?, get("models")?);

    fn read_f64s(
        reader: &mut impl Read,
        path: &Path,
        len: usize,
    ) -> Result<Vec<f64>> {
        let mut bytes = vec![0u8; len * 8];
        reader
            .read_exact(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    let mut models = Vec::with_capacity(count);
    for _ in 0..count {
        let mut meta = String::new();
        reader.read_line(&mut meta).map_err(|e| Error::io(path, e))?;
        let mut name = String::new();
        let mut epochs = 0usize;
        for part in meta.trim().split(' ') {
            if let Some(v) = part.strip_prefix("name=") {
                name = v.to_string();
            } else if let Some(v) = part.strip_prefix("epochs=") {
                epochs = v.parse().map_err(|_| corrupt("bad epochs"))?;
            }
        }
        let epoch_losses = read_f64s(&mut reader, path, epochs)?;
        let user_factors = read_f64s(&mut reader, path, m * k)?;
        let poi_factors = read_f64s(&mut reader, path, n * k)?;
        models.push((
            name,
            FactorModel {
                k,
                num_users: m,
                num_pois: n,
                user_factors,
                poi_factors,
                epoch_losses,
            },
        ));
    }
    Ok(models)
}

fn train_factor_models(
    cfg: &RunConfig,
    prepared: &PreparedData,
) -> Result<(FactorModel, PreferenceMatrix)> {
    let path = cfg.cache_dir.join(format!("mf-{}.bin", cfg.mf_fingerprint()));
    if path.exists() {
        match read_factors(&path) {
            Ok(mut models) if !models.is_empty() => {
                log::info!("train: factor cache hit at {}", path.display());
                let static_model = models.remove(0).1;
                let temporal = models.into_iter().map(|(_, m)| m).collect::<Vec<_>>();
                let rhat = aggregate_temporal(temporal)?;
                return Ok((static_model, rhat));
            }
            Ok(_) => {}
            Err(e) => log::warn!("ignoring unreadable factor cache: {e}"),
        }
    }

    let slices = split_temporal(&prepared.split.train, &cfg.geo.states);
    let mut jobs: Vec<(String, &InteractionMatrix, MfConfig)> = vec![(
        "static".to_string(),
        &prepared.train_matrix,
        MfConfig {
            seed: cfg.mf.seed,
            ..cfg.mf.clone()
        },
    )];
    for (i, matrix) in slices.matrices.iter().enumerate() {
        if matrix.nnz() == 0 {
            log::warn!(
                "temporal slice {:?} has no check-ins; skipping its model",
                cfg.geo.states.label(i)
            );
            continue;
        }
        jobs.push((
            cfg.geo.states.label(i),
            matrix,
            MfConfig {
                seed: cfg.mf.seed.wrapping_add(1 + i as u64),
                ..cfg.mf.clone()
            },
        ));
    }
    let trained: Result<Vec<(String, FactorModel)>> = jobs
        .par_iter()
        .map(|(name, matrix, mf_cfg)| {
            train_mf(matrix, mf_cfg)
                .map(|m| (name.clone(), m))
                .map_err(|e| match e {
                    Error::MfDiverged { epoch, .. } => Error::MfDiverged {
                        context: name.clone(),
                        epoch,
                    },
                    other => other,
                })
        })
        .collect();
    let trained = trained?;
    fs::create_dir_all(&cfg.cache_dir).map_err(|e| Error::io(&cfg.cache_dir, e))?;
    let refs: Vec<(String, &FactorModel)> = trained
        .iter()
        .map(|(name, m)| (name.clone(), m))
        .collect();
    write_factors(&path, cfg.mf.seed, &cfg.mf_fingerprint(), &refs)?;

    let mut iter = trained.into_iter();
    let static_model = iter.next().expect("static model present").1;
    let temporal: Vec<FactorModel> = iter.map(|(_, m)| m).collect();
    let rhat = aggregate_temporal(if temporal.is_empty() {
        vec![static_model.clone()]
    } else {
        temporal
    })?;
    Ok((static_model, rhat))
}

// --- activity center cache ----------------------------------------------

fn centers_to_lines(centers: &[ActivityCenterSet]) -> String {
    let mut out = String::new();
    for set in centers {
        for (state, poi) in set.top_poi.iter().enumerate() {
            if let Some(p) = poi {
                let _ = writeln!(out, "T\t{}\t{}\t{}", set.user, state, p);
            }
        }
        for c in &set.centers {
            let members: Vec<String> = c.members.iter().map(|p| p.to_string()).collect();
            let _ = writeln!(
                out,
                "C\t{}\t{}\t{}\t{}\t{}\t{}",
                set.user,
                c.state,
                c.centroid.lat,
                c.centroid.lon,
                c.freq,
                members.join(",")
            );
        }
    }
    out
}

fn centers_from_lines(text: &str, num_users: usize, num_states: usize) -> Option<Vec<ActivityCenterSet>> {
    let mut sets: Vec<ActivityCenterSet> = (0..num_users)
        .map(|u| ActivityCenterSet {
            user: u as UserIdx,
            centers: Vec::new(),
            top_poi: vec![None; num_states],
        })
        .collect();
    for line in text.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        match fields.first() {
            Some(&"T") if fields.len() == 4 => {
                let user: usize = fields[1].parse().ok()?;
                let state: usize = fields[2].parse().ok()?;
                let poi: PoiIdx = fields[3].parse().ok()?;
                *sets.get_mut(user)?.top_poi.get_mut(state)? = Some(poi);
            }
            Some(&"C") if fields.len() == 7 => {
                let user: usize = fields[1].parse().ok()?;
                let members: Vec<PoiIdx> = if fields[6].is_empty() {
                    Vec::new()
                } else {
                    fields[6]
                        .split(',')
                        .map(|s| s.parse().ok())
                        .collect::<Option<_>>()?
                };
                sets.get_mut(user)?.centers.push(ActivityCenter {
                    state: fields[2].parse().ok()?,
                    centroid: GeoPoint {
                        lat: fields[3].parse().ok()?,
                        lon: fields[4].parse().ok()?,
                    },
                    members,
                    freq: fields[5].parse().ok()?,
                });
            }
            _ => return None,
        }
    }
    Some(sets)
}

fn compute_centers(cfg: &RunConfig, prepared: &PreparedData) -> Result<Vec<ActivityCenterSet>> {
    let path = cfg
        .cache_dir
        .join(format!("centers-{}.tsv", cfg.geo_fingerprint()));
    let num_users = prepared.split.train.num_users();
    let num_states = cfg.geo.states.count();
    if path.exists() {
        if let Ok(text) = fs::read_to_string(&path) {
            if let Some(sets) = centers_from_lines(&text, num_users, num_states) {
                log::info!("train: center cache hit at {}", path.display());
                return Ok(sets);
            }
            log::warn!("ignoring unreadable center cache at {}", path.display());
        }
    }
    let centers = find_all_activity_centers(&prepared.split.train, &cfg.geo);
    fs::create_dir_all(&cfg.cache_dir).map_err(|e| Error::io(&cfg.cache_dir, e))?;
    atomic_write(&path, centers_to_lines(&centers).as_bytes())?;
    Ok(centers)
}

/// Trains or loads every model artifact: static and temporal factors, the
/// activity centers, and the overlap-filtered social graph.
pub fn train(cfg: &RunConfig, prepared: &PreparedData) -> Result<ModelBundle> {
    let (static_model, rhat) = train_factor_models(cfg, prepared)?;
    let centers = compute_centers(cfg, prepared)?;
    let filtered_edges =
        filter_friendships_by_overlap(&prepared.edges, &prepared.split, cfg.overlap_threshold);
    if cfg.overlap_threshold > 0.0 {
        log::info!(
            "overlap filter at {} kept {} of {} edges",
            cfg.overlap_threshold,
            filtered_edges.len(),
            prepared.edges.len()
        );
    }
    let graph = if cfg.variant == Variant::NoSocial {
        log::info!("variant no_social: skipping social graph construction");
        SocialGraph::from_rows(cfg.beta, vec![Vec::new(); prepared.split.train.num_users()])
    } else {
        build_social_graph(
            &prepared.train_matrix,
            &filtered_edges,
            cfg.beta,
            cfg.min_common_pois,
        )
    };
    Ok(ModelBundle {
        static_model,
        rhat,
        centers,
        graph,
        filtered_edges,
    })
}

/// Scores candidates (training POIs the user has not visited) with the
/// fused social, center, and preference signals.
pub struct SucpRecommender<'a> {
    train_matrix: &'a InteractionMatrix,
    bundle: &'a ModelBundle,
    poi_coords: Vec<GeoPoint>,
    candidates: Vec<PoiIdx>,
    social: Option<SocialScorer<'a>>,
    cfg: &'a RunConfig,
    variant: Variant,
}

impl<'a> SucpRecommender<'a> {
    pub fn new(
        cfg: &'a RunConfig,
        prepared: &'a PreparedData,
        bundle: &'a ModelBundle,
        variant: Variant,
    ) -> Self {
        let totals = prepared.train_matrix.poi_totals();
        let candidates = totals
            .iter()
            .enumerate()
            .filter(|&(_, &t)| t > 0)
            .map(|(p, _)| p as PoiIdx)
            .collect();
        let social = match variant {
            Variant::Full => Some(SocialScorer::new(
                &bundle.graph,
                &prepared.train_matrix,
                cfg.social_score_config(),
            )),
            Variant::NoSocial => None,
        };
        SucpRecommender {
            train_matrix: &prepared.train_matrix,
            bundle,
            poi_coords: prepared.split.train.poi_coords(),
            candidates,
            social,
            cfg,
            variant,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Raw social score row for one user, for inspection dumps.
    pub fn social_row(&self, user: UserIdx) -> Vec<(PoiIdx, f64)> {
        match &self.social {
            Some(s) => {
                s.score_row(user, &self.train_matrix.visited_mask(user))
                    .scores
            }
            None => Vec::new(),
        }
    }
}

impl Recommender for SucpRecommender<'_> {
    fn recommend(&self, user: UserIdx, n: usize) -> Recommendation {
        let visited = self.train_matrix.visited_mask(user);
        let social_row: HashMap<PoiIdx, f64> = match &self.social {
            Some(s) => s.score_row(user, &visited).scores.into_iter().collect(),
            None => HashMap::new(),
        };
        let centers = &self.bundle.centers[user as usize];
        let fusion = self.cfg.fusion_config();
        let fusion = crate::recommend::FusionConfig {
            variant: self.variant,
            ..fusion
        };
        let mut scores = Vec::with_capacity(self.candidates.len());
        for &l in &self.candidates {
            if visited[l as usize] {
                continue;
            }
            let s = social_row.get(&l).copied().unwrap_or(0.0);
            let tc = temporal_center_score(self.poi_coords[l as usize], centers, &self.cfg.geo);
            let z = preference_score(user, l, &self.bundle.static_model, &self.bundle.rhat);
            scores.push((l, fuse_scores(s, tc, z, &fusion)));
        }
        recommend_top_n(user, scores, n)
    }
}

/// Popularity baseline over the same candidate rule.
pub struct TopPopRecommender<'a> {
    pub train_matrix: &'a InteractionMatrix,
}

impl Recommender for TopPopRecommender<'_> {
    fn recommend(&self, user: UserIdx, n: usize) -> Recommendation {
        top_popular(self.train_matrix, user, n)
    }
}

fn heldout_log<'a>(cfg: &RunConfig, prepared: &'a PreparedData) -> &'a CheckInLog {
    match cfg.eval_split {
        EvalSplit::Valid => &prepared.split.valid,
        EvalSplit::Test => &prepared.split.test,
    }
}

/// Evaluates one fusion variant against the configured held-out split.
pub fn evaluate_variant(
    cfg: &RunConfig,
    prepared: &PreparedData,
    bundle: &ModelBundle,
    variant: Variant,
) -> Result<MetricsReport> {
    if variant == Variant::Full && cfg.variant == Variant::NoSocial {
        return Err(Error::Config(
            "bundle was trained with variant no_social; retrain with variant full".into(),
        ));
    }
    let recommender = SucpRecommender::new(cfg, prepared, bundle, variant);
    let fingerprint = format!("{}:{}", cfg.fingerprint(), variant.as_str());
    evaluate(
        &recommender,
        heldout_log(cfg, prepared),
        &prepared.train_matrix,
        &cfg.n_values,
        &fingerprint,
    )
}

pub fn evaluate_top_popular(cfg: &RunConfig, prepared: &PreparedData) -> Result<MetricsReport> {
    let recommender = TopPopRecommender {
        train_matrix: &prepared.train_matrix,
    };
    let fingerprint = format!("{}:top_popular", cfg.fingerprint());
    evaluate(
        &recommender,
        heldout_log(cfg, prepared),
        &prepared.train_matrix,
        &cfg.n_values,
        &fingerprint,
    )
}

/// Ranked lists in the export format: `user rank poi score`, one line per
/// recommended POI.
pub fn recommendation_lines(log: &CheckInLog, recs: &[Recommendation]) -> String {
    let mut out = String::new();
    for rec in recs {
        for (rank, &(poi, score)) in rec.ranked.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{:.8}",
                log.user_id(rec.user),
                rank + 1,
                log.poi_id(poi),
                score
            );
        }
    }
    out
}

/// Social score rows in the export format: `user poi score`.
pub fn social_score_lines(log: &CheckInLog, recommender: &SucpRecommender, users: &[UserIdx]) -> String {
    let mut out = String::new();
    for &u in users {
        for (poi, score) in recommender.social_row(u) {
            let _ = writeln!(out, "{}\t{}\t{:.10}", log.user_id(u), log.poi_id(poi), score);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceStats {
    pub count: usize,
    pub mean_km: f64,
    pub median_km: f64,
    pub p90_km: f64,
    pub max_km: f64,
}

/// Average friend similarity plus the distance distribution between the
/// primary activity centers of befriended users.
#[derive(Debug, Clone, PartialEq)]
pub struct SocialAnalysis {
    pub edges: usize,
    pub average_friend_similarity: f64,
    pub center_distances: Option<DistanceStats>,
}

impl SocialAnalysis {
    pub fn lines(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "edges = {}", self.edges);
        let _ = writeln!(
            out,
            "average_friend_similarity = {:.6}",
            self.average_friend_similarity
        );
        if let Some(d) = &self.center_distances {
            let _ = writeln!(out, "center_distance.pairs = {}", d.count);
            let _ = writeln!(out, "center_distance.mean_km = {:.3}", d.mean_km);
            let _ = writeln!(out, "center_distance.median_km = {:.3}", d.median_km);
            let _ = writeln!(out, "center_distance.p90_km = {:.3}", d.p90_km);
            let _ = writeln!(out, "center_distance.max_km = {:.3}", d.max_km);
        }
        out
    }
}

pub fn analyze_social(prepared: &PreparedData, bundle: &ModelBundle) -> Result<SocialAnalysis> {
    if prepared.edges.is_empty() {
        return Err(Error::Config("no friendship edges to analyze".into()));
    }
    let avg = crate::social::average_friend_similarity(&prepared.train_matrix, &prepared.edges);
    let mut dists: Vec<f64> = prepared
        .edges
        .edges()
        .iter()
        .filter_map(|&(a, b)| {
            let ca = bundle.centers[a as usize].primary_centroid()?;
            let cb = bundle.centers[b as usize].primary_centroid()?;
            Some(haversine(ca, cb))
        })
        .collect();
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let center_distances = if dists.is_empty() {
        None
    } else {
        let count = dists.len();
        Some(DistanceStats {
            count,
            mean_km: dists.iter().sum::<f64>() / count as f64,
            median_km: dists[count / 2],
            p90_km: dists[(count * 9 / 10).min(count - 1)],
            max_km: dists[count - 1],
        })
    };
    Ok(SocialAnalysis {
        edges: prepared.edges.len(),
        average_friend_similarity: avg,
        center_distances,
    })
}
