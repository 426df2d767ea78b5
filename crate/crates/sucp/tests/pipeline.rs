//! Pipeline integration: caching behavior, experiment grids, variant
//! equivalences, and export formats.

use sucp::config::RunConfig;
use sucp::data::{CheckInLog, DatasetSplit};
use sucp::eval::Recommender;
use sucp::experiment::{run_experiment, Axis};
use sucp::geo::TemporalStates;
use sucp::pipeline::{
    self, evaluate_variant, prepare, prepare_uncached, recommendation_lines, social_score_lines,
    train, SucpRecommender,
};
use sucp::recommend::Variant;
use sucp::synth::{generate, SynthConfig};

fn synth_config(dir: &std::path::Path, groups: usize) -> (RunConfig, SynthConfig) {
    let synth = SynthConfig {
        num_groups: groups,
        ..SynthConfig::default()
    };
    let data = generate(&synth);
    data.write_files(&dir.join("checkins.tsv"), &dir.join("friendships.tsv"))
        .unwrap();
    let mut cfg = RunConfig::default();
    cfg.checkins_path = Some(dir.join("checkins.tsv"));
    cfg.friendships_path = Some(dir.join("friendships.tsv"));
    cfg.cache_dir = dir.join("cache");
    cfg.min_user_checkins = 1;
    cfg.min_poi_checkins = 1;
    let (tf, vf) = synth.exact_fracs();
    cfg.train_frac = tf;
    cfg.valid_frac = vf;
    cfg.mf.k = 4;
    cfg.mf.epochs = 8;
    (cfg, synth)
}

#[test]
fn prepare_cache_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 6);

    let fresh = prepare_uncached(&cfg).unwrap();
    let first = prepare(&cfg).unwrap(); // computes and stores
    let second = prepare(&cfg).unwrap(); // loads from cache
    for (a, b) in [(&fresh, &first), (&first, &second)] {
        assert_eq!(a.split.train.checkins, b.split.train.checkins);
        assert_eq!(a.split.valid.checkins, b.split.valid.checkins);
        assert_eq!(a.split.test.checkins, b.split.test.checkins);
        assert_eq!(a.edges, b.edges);
        assert_eq!(a.train_matrix, b.train_matrix);
    }
    assert!(cfg
        .cache_dir
        .join(format!("prepared-{}", cfg.data_fingerprint()))
        .join("manifest.txt")
        .exists());
}

#[test]
fn changed_threshold_invalidates_prepare_cache() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 6);
    let mut cfg2 = cfg.clone();
    cfg2.min_user_checkins = 2;
    assert_ne!(cfg.data_fingerprint(), cfg2.data_fingerprint());
    prepare(&cfg).unwrap();
    assert!(!cfg
        .cache_dir
        .join(format!("prepared-{}", cfg2.data_fingerprint()))
        .exists());
}

#[test]
fn training_is_reproducible_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 6);
    let prepared = prepare(&cfg).unwrap();
    let a = train(&cfg, &prepared).unwrap();
    let mf_path = cfg.cache_dir.join(format!("mf-{}.bin", cfg.mf_fingerprint()));
    assert!(mf_path.exists());
    let b = train(&cfg, &prepared).unwrap(); // cache hit
    assert_eq!(a.static_model.user_factors, b.static_model.user_factors);
    assert_eq!(a.static_model.poi_factors, b.static_model.poi_factors);
    assert_eq!(a.centers, b.centers);

    // a beta change must not invalidate the factor cache
    let mut cfg_beta = cfg.clone();
    cfg_beta.beta = 0.2;
    assert_eq!(cfg.mf_fingerprint(), cfg_beta.mf_fingerprint());
    let c = train(&cfg_beta, &prepared).unwrap();
    assert_eq!(a.static_model.user_factors, c.static_model.user_factors);
    assert_ne!(a.graph, c.graph);
}

#[test]
fn beta_axis_produces_one_report_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 6);
    let grid = run_experiment(&cfg, Axis::Beta, &[0.0, 0.5, 1.0]).unwrap();
    assert_eq!(grid.cells.len(), 3);
    for cell in &grid.cells {
        let report = cell.report.as_ref().unwrap();
        assert!(!report.users.is_empty());
    }
    let lines = grid.lines();
    assert_eq!(lines.lines().count(), 3 * 2 * 3); // values x Ns x metrics
    assert!(lines.contains("beta\t0.5\trecall\t10"));
}

#[test]
fn full_train_fraction_cell_equals_plain_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 6);
    let grid = run_experiment(&cfg, Axis::TrainFraction, &[1.0]).unwrap();
    let cell = grid.cells[0].report.as_ref().unwrap();

    let prepared = prepare(&cfg).unwrap();
    let bundle = train(&cfg, &prepared).unwrap();
    let direct = evaluate_variant(&cfg, &prepared, &bundle, cfg.variant).unwrap();
    assert_eq!(cell.users, direct.users);
    for n in [10usize, 20] {
        assert_eq!(cell.mean_precision(n), direct.mean_precision(n));
        assert_eq!(cell.mean_recall(n), direct.mean_recall(n));
        assert_eq!(cell.mean_ndcg(n), direct.mean_ndcg(n));
    }
}

#[test]
fn overlap_threshold_prunes_training_edges() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 6);
    let prepared = prepare(&cfg).unwrap();
    let loose = train(&cfg, &prepared).unwrap();
    let mut strict_cfg = cfg.clone();
    strict_cfg.overlap_threshold = 0.8;
    let strict = train(&strict_cfg, &prepared).unwrap();
    assert!(
        strict.filtered_edges.len() < loose.filtered_edges.len(),
        "strict {} vs loose {}",
        strict.filtered_edges.len(),
        loose.filtered_edges.len()
    );

    let grid = run_experiment(&cfg, Axis::OverlapThreshold, &[0.0, 0.8]).unwrap();
    assert!(grid.cells.iter().all(|c| c.report.is_ok()));
}

#[test]
fn invalid_axis_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 6);
    assert!(run_experiment(&cfg, Axis::Beta, &[]).is_err());
    assert!(run_experiment(&cfg, Axis::Beta, &[0.5, 0.5]).is_err());
    assert!(run_experiment(&cfg, Axis::Beta, &[0.7, 0.3]).is_err());
}

/// Two users with swapped tastes: each has exactly one candidate, which is
/// exactly their test POI, so every metric at N=1 is 1.
fn oracle_fixture(dir: &std::path::Path) -> RunConfig {
    let rows = "a\tp1\t10.0\t10.0\t100\n\
                a\tp1\t10.0\t10.0\t200\n\
                a\tp1\t10.0\t10.0\t300\n\
                a\tp2\t10.0\t10.1\t400\n\
                b\tp2\t10.0\t10.1\t150\n\
                b\tp2\t10.0\t10.1\t250\n\
                b\tp2\t10.0\t10.1\t350\n\
                b\tp1\t10.0\t10.0\t450\n";
    std::fs::write(dir.join("checkins.tsv"), rows).unwrap();
    std::fs::write(dir.join("friendships.tsv"), "a\tb\n").unwrap();
    let mut cfg = RunConfig::default();
    cfg.checkins_path = Some(dir.join("checkins.tsv"));
    cfg.friendships_path = Some(dir.join("friendships.tsv"));
    cfg.cache_dir = dir.join("cache");
    cfg.min_user_checkins = 1;
    cfg.min_poi_checkins = 1;
    cfg.train_frac = 0.5;
    cfg.valid_frac = 0.2;
    cfg.geo.states = TemporalStates::All;
    cfg.mf.k = 2;
    cfg.mf.epochs = 10;
    cfg.n_values = vec![1];
    cfg
}

#[test]
fn oracle_fixture_scores_all_ones() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = oracle_fixture(dir.path());
    let prepared = prepare(&cfg).unwrap();
    let bundle = train(&cfg, &prepared).unwrap();
    for variant in [Variant::Full, Variant::NoSocial] {
        let report = evaluate_variant(&cfg, &prepared, &bundle, variant).unwrap();
        assert_eq!(report.users.len(), 2);
        assert_eq!(report.mean_precision(1), 1.0);
        assert_eq!(report.mean_recall(1), 1.0);
        assert_eq!(report.mean_ndcg(1), 1.0);
    }
}

#[test]
fn validation_split_evaluation_for_model_selection() {
    // three users with cyclic tastes: each has one fresh valid POI and one
    // fresh test POI, both visited by someone else in training
    let dir = tempfile::tempdir().unwrap();
    let rows = "a\tp1\t10.0\t10.0\t100\n\
                a\tp1\t10.0\t10.0\t200\n\
                a\tp2\t10.0\t10.05\t300\n\
                a\tp3\t20.0\t40.0\t400\n\
                b\tp2\t10.0\t10.05\t110\n\
                b\tp2\t10.0\t10.05\t210\n\
                b\tp3\t20.0\t40.0\t310\n\
                b\tp1\t10.0\t10.0\t410\n\
                c\tp3\t20.0\t40.0\t120\n\
                c\tp3\t20.0\t40.0\t220\n\
                c\tp1\t10.0\t10.0\t320\n\
                c\tp2\t10.0\t10.05\t420\n";
    std::fs::write(dir.path().join("checkins.tsv"), rows).unwrap();
    std::fs::write(dir.path().join("friendships.tsv"), "").unwrap();
    let mut cfg = RunConfig::default();
    cfg.checkins_path = Some(dir.path().join("checkins.tsv"));
    cfg.friendships_path = Some(dir.path().join("friendships.tsv"));
    cfg.cache_dir = dir.path().join("cache");
    cfg.min_user_checkins = 1;
    cfg.min_poi_checkins = 1;
    cfg.train_frac = 0.5;
    cfg.valid_frac = 0.25;
    cfg.geo.states = TemporalStates::All;
    cfg.mf.k = 2;
    cfg.mf.epochs = 10;
    cfg.n_values = vec![1];

    let prepared = prepare(&cfg).unwrap();
    let bundle = train(&cfg, &prepared).unwrap();
    let on_test = evaluate_variant(&cfg, &prepared, &bundle, Variant::Full).unwrap();
    cfg.eval_split = "valid".parse().unwrap();
    let on_valid = evaluate_variant(&cfg, &prepared, &bundle, Variant::Full).unwrap();
    assert_eq!(on_test.users.len(), 3);
    assert_eq!(on_valid.users.len(), 3);
    assert_ne!(on_test.config_fingerprint, on_valid.config_fingerprint);
    // relevant sets come from different parts, so the scores differ
    assert_ne!(on_test.mean_recall(1), on_valid.mean_recall(1));
}

#[test]
fn variants_agree_when_social_graph_is_empty() {
    // no friendships and disjoint visits: the social factor is zero
    // everywhere, so epsilon smoothing must leave the ranking equal to the
    // no-social one
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = oracle_fixture(dir.path());
    std::fs::write(dir.path().join("friendships.tsv"), "").unwrap();
    cfg.min_common_pois = 99; // disable implicit edges too
    let prepared = prepare(&cfg).unwrap();
    let bundle = train(&cfg, &prepared).unwrap();
    assert_eq!(bundle.graph.num_edges(), 0);
    let full = SucpRecommender::new(&cfg, &prepared, &bundle, Variant::Full);
    let ablated = SucpRecommender::new(&cfg, &prepared, &bundle, Variant::NoSocial);
    for u in 0..2 {
        let a: Vec<_> = full.recommend(u, 5).ranked.iter().map(|&(p, _)| p).collect();
        let b: Vec<_> = ablated.recommend(u, 5).ranked.iter().map(|&(p, _)| p).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn export_formats_have_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = oracle_fixture(dir.path());
    let prepared = prepare(&cfg).unwrap();
    let bundle = train(&cfg, &prepared).unwrap();
    let recommender = SucpRecommender::new(&cfg, &prepared, &bundle, Variant::Full);

    let recs: Vec<_> = (0..2).map(|u| recommender.recommend(u, 3)).collect();
    let lines = recommendation_lines(&prepared.split.train, &recs);
    // `user rank poi score` per line
    let first = lines.lines().next().unwrap();
    let fields: Vec<&str> = first.split('\t').collect();
    assert_eq!(fields.len(), 4);
    assert_eq!(fields[0], "a");
    assert_eq!(fields[1], "1");
    assert_eq!(fields[2], "p2");
    assert!(fields[3].parse::<f64>().unwrap() > 0.0);

    let social = social_score_lines(&prepared.split.train, &recommender, &[0, 1]);
    for line in social.lines() {
        let fields: Vec<&str> = line.split('\t').collect();
        assert_eq!(fields.len(), 3);
        assert!(fields[2].parse::<f64>().unwrap() >= 0.0);
    }
    // user a's social row points at the friend's POI
    assert!(social.lines().any(|l| l.starts_with("a\tp2")));
}

#[test]
fn analysis_reports_similarity_and_center_distances() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 6);
    let prepared = prepare(&cfg).unwrap();
    let bundle = train(&cfg, &prepared).unwrap();
    let analysis = pipeline::analyze_social(&prepared, &bundle).unwrap();
    assert!(analysis.average_friend_similarity > 0.0);
    assert!(analysis.average_friend_similarity <= 1.0);
    let dist = analysis.center_distances.as_ref().unwrap();
    assert_eq!(dist.count, prepared.edges.len());
    // clique members share a city, so friend centers are close
    assert!(dist.median_km < 50.0, "median {}", dist.median_km);
    let text = analysis.lines();
    assert!(text.contains("average_friend_similarity"));
    assert!(text.contains("center_distance.mean_km"));
}

#[test]
fn manifest_records_counts_and_fingerprint() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, synth) = synth_config(dir.path(), 6);
    let prepared = prepare(&cfg).unwrap();
    let expect_users = synth.num_users().to_string();
    let mut saw_users = false;
    let mut saw_fp = false;
    for line in prepared.manifest.lines() {
        if line == format!("counts.users = {expect_users}") {
            saw_users = true;
        }
        if line == format!("fingerprint.data = {}", cfg.data_fingerprint()) {
            saw_fp = true;
        }
    }
    assert!(saw_users && saw_fp, "manifest:\n{}", prepared.manifest);
}

#[test]
fn per_cell_failures_are_recorded_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let (mut cfg, _) = synth_config(dir.path(), 6);
    // an absurd learning rate diverges; the grid should still complete
    cfg.mf.learning_rate = 1e6;
    let grid = run_experiment(&cfg, Axis::Beta, &[0.5]).unwrap();
    assert_eq!(grid.cells.len(), 1);
    let err = grid.cells[0].report.as_ref().unwrap_err();
    assert!(err.contains("diverged"), "error was: {err}");
    assert!(grid.lines().contains("error"));
}

#[test]
fn split_parts_partition_and_respect_time() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, synth) = synth_config(dir.path(), 6);
    let prepared = prepare(&cfg).unwrap();
    let DatasetSplit { train, valid, test } = &prepared.split;
    assert_eq!(
        train.len() + valid.len() + test.len(),
        synth.num_users() * synth.checkins_per_user()
    );
    for u in 0..train.num_users() as u32 {
        let max_t = part_max(train, u);
        let min_v = part_min(valid, u);
        let min_s = part_min(test, u);
        if let (Some(a), Some(b)) = (max_t, min_v) {
            assert!(a <= b);
        }
        if let (Some(a), Some(b)) = (max_t, min_s) {
            assert!(a <= b);
        }
    }
}

fn part_max(log: &CheckInLog, user: u32) -> Option<i64> {
    log.checkins
        .iter()
        .filter(|c| c.user == user)
        .map(|c| c.timestamp)
        .max()
}

fn part_min(log: &CheckInLog, user: u32) -> Option<i64> {
    log.checkins
        .iter()
        .filter(|c| c.user == user)
        .map(|c| c.timestamp)
        .min()
}

#[test]
fn social_rows_can_be_dumped_for_every_user() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, synth) = synth_config(dir.path(), 4);
    let prepared = prepare(&cfg).unwrap();
    let bundle = train(&cfg, &prepared).unwrap();
    let recommender = SucpRecommender::new(&cfg, &prepared, &bundle, Variant::Full);
    let users: Vec<u32> = (0..synth.num_users() as u32).collect();
    let dump = social_score_lines(&prepared.split.train, &recommender, &users);
    assert!(dump.lines().count() > synth.num_users());
}

#[test]
fn recommend_excludes_visited_and_orders_scores() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, _) = synth_config(dir.path(), 4);
    let prepared = prepare(&cfg).unwrap();
    let bundle = train(&cfg, &prepared).unwrap();
    let recommender = SucpRecommender::new(&cfg, &prepared, &bundle, Variant::Full);
    for u in 0..prepared.split.train.num_users() as u32 {
        let rec = recommender.recommend(u, 10);
        let visited = prepared.train_matrix.visited_mask(u);
        for w in rec.ranked.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
        for &(p, _) in &rec.ranked {
            assert!(!visited[p as usize], "user {u} got visited poi {p}");
        }
    }
}
