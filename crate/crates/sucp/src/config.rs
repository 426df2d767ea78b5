//! Run configuration: plain `key = value` text with dotted section keys,
//! defaults for everything except dataset paths, and content hashes used to
//! key cached artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geo::{GeoConfig, HourRange, TemporalStates};
use crate::mf::MfConfig;
use crate::recommend::{FusionConfig, Variant};
use crate::social::{PprConfig, SocialScoreConfig};

/// Which held-out part metrics are computed against. Validation is for
/// model selection (e.g. picking the social mixing weight); test is for
/// reported results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Valid,
    Test,
}

impl EvalSplit {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalSplit::Valid => "valid",
            EvalSplit::Test => "test",
        }
    }
}

impl std::str::FromStr for EvalSplit {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "valid" | "validation" => Ok(EvalSplit::Valid),
            "test" => Ok(EvalSplit::Test),
            other => Err(format!("unknown eval split {other:?} (expected valid or test)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub checkins_path: Option<PathBuf>,
    pub friendships_path: Option<PathBuf>,
    pub min_user_checkins: u32,
    pub min_poi_checkins: u32,
    pub train_frac: f64,
    pub valid_frac: f64,
    /// Fraction of each user's training check-ins retained (sparsity runs).
    pub train_fraction: f64,
    pub beta: f64,
    pub overlap_threshold: f64,
    pub min_common_pois: u32,
    pub ppr_damping: f64,
    pub ppr_tol: f64,
    pub ppr_max_iter: usize,
    /// 0 disables truncation.
    pub ppr_top_t: usize,
    pub geo: GeoConfig,
    pub mf: MfConfig,
    pub fusion_epsilon: f64,
    pub variant: Variant,
    pub n_values: Vec<usize>,
    pub eval_split: EvalSplit,
    pub seed: u64,
    pub cache_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            checkins_path: None,
            friendships_path: None,
            min_user_checkins: 15,
            min_poi_checkins: 10,
            train_frac: 0.7,
            valid_frac: 0.1,
            train_fraction: 1.0,
            beta: 0.7,
            overlap_threshold: 0.0,
            min_common_pois: 1,
            ppr_damping: 0.85,
            ppr_tol: 1e-8,
            ppr_max_iter: 100,
            ppr_top_t: 1000,
            geo: GeoConfig::default(),
            mf: MfConfig {
                seed: 42,
                ..MfConfig::default()
            },
            fusion_epsilon: 1e-9,
            variant: Variant::Full,
            n_values: vec![10, 20],
            eval_split: EvalSplit::Test,
            seed: 42,
            cache_dir: PathBuf::from(".sucp-cache"),
        }
    }
}

fn parse_states(value: &str) -> Result<TemporalStates> {
    match value {
        "all" => Ok(TemporalStates::All),
        "weekday_weekend" => Ok(TemporalStates::WeekdayWeekend),
        other if other.starts_with("hours:") => {
            // hours:work=8-18,off=0-8,evening=18-24
            let mut ranges = Vec::new();
            for part in other["hours:".len()..].split(',') {
                let (label, span) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("bad hour state {part:?}")))?;
                let (start, end) = span
                    .split_once('-')
                    .ok_or_else(|| Error::Config(format!("bad hour span {span:?}")))?;
                ranges.push(HourRange {
                    label: label.trim().to_string(),
                    start: start.trim().parse().map_err(|_| {
                        Error::Config(format!("bad hour {start:?} in {part:?}"))
                    })?,
                    end: end.trim().parse().map_err(|_| {
                        Error::Config(format!("bad hour {end:?} in {part:?}"))
                    })?,
                });
            }
            let states = TemporalStates::HourRanges(ranges);
            states.validate()?;
            Ok(states)
        }
        other => Err(Error::Config(format!(
            "unknown geo.states {other:?} (expected all, weekday_weekend, or hours:...)"
        ))),
    }
}

fn states_to_string(states: &TemporalStates) -> String {
    match states {
        TemporalStates::All => "all".into(),
        TemporalStates::WeekdayWeekend => "weekday_weekend".into(),
        TemporalStates::HourRanges(ranges) => {
            let body: Vec<String> = ranges
                .iter()
                .map(|r| format!("{}={}-{}", r.label, r.start, r.end))
                .collect();
            format!("hours:{}", body.join(","))
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: "expected `key = value`".into(),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one dotted key. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
        }
        match key {
            "data.checkins" => self.checkins_path = Some(PathBuf::from(value)),
            "data.friendships" => self.friendships_path = Some(PathBuf::from(value)),
            "data.min_user_checkins" => self.min_user_checkins = num(key, value)?,
            "data.min_poi_checkins" => self.min_poi_checkins = num(key, value)?,
            "split.train_frac" => self.train_frac = num(key, value)?,
            "split.valid_frac" => self.valid_frac = num(key, value)?,
            "split.train_fraction" => self.train_fraction = num(key, value)?,
            "social.beta" => self.beta = num(key, value)?,
            "social.overlap_threshold" => self.overlap_threshold = num(key, value)?,
            "social.min_common_pois" => self.min_common_pois = num(key, value)?,
            "social.ppr_damping" => self.ppr_damping = num(key, value)?,
            "social.ppr_tol" => self.ppr_tol = num(key, value)?,
            "social.ppr_max_iter" => self.ppr_max_iter = num(key, value)?,
            "social.ppr_top_t" => self.ppr_top_t = num(key, value)?,
            "geo.d_km" => self.geo.d_km = num(key, value)?,
            "geo.epsilon_km" => self.geo.epsilon_km = num(key, value)?,
            "geo.states" => self.geo.states = parse_states(value)?,
            "geo.single_center" => self.geo.single_center = num(key, value)?,
            "mf.k" => self.mf.k = num(key, value)?,
            "mf.learning_rate" => self.mf.learning_rate = num(key, value)?,
            "mf.reg_lambda" => self.mf.reg_lambda = num(key, value)?,
            "mf.epochs" => self.mf.epochs = num(key, value)?,
            "mf.init_scale" => self.mf.init_scale = num(key, value)?,
            "fusion.epsilon" => self.fusion_epsilon = num(key, value)?,
            "fusion.variant" => {
                self.variant = value.parse().map_err(Error::Config)?;
            }
            "eval.split" => {
                self.eval_split = value.parse().map_err(Error::Config)?;
            }
            "eval.n_values" => {
                let ns: Result<Vec<usize>> = value
                    .split(',')
                    .map(|s| num::<usize>(key, s.trim()))
                    .collect();
                self.n_values = ns?;
            }
            "seed" => {
                self.seed = num(key, value)?;
                self.mf.seed = self.seed;
            }
            "cache_dir" => self.cache_dir = PathBuf::from(value),
            other => {
                return Err(Error::Config(format!("unknown config key {other:?}")));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.train_frac > 0.0 && self.valid_frac >= 0.0)
            || self.train_frac + self.valid_frac >= 1.0
        {
            return Err(Error::Config(
                "split fractions must satisfy train_frac + valid_frac < 1".into(),
            ));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::Config("split.train_fraction must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::Config("social.beta must be in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap_threshold) {
            return Err(Error::Config("social.overlap_threshold must be in [0, 1]".into()));
        }
        if !(self.ppr_damping > 0.0 && self.ppr_damping < 1.0) {
            return Err(Error::Config("social.ppr_damping must be in (0, 1)".into()));
        }
        if self.ppr_tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || self.ppr_max_iter == 0 {
            return Err(Error::Config("ppr tolerance and max_iter must be positive".into()));
        }
        if self.min_user_checkins < 1 || self.min_poi_checkins < 1 {
            return Err(Error::Config("preprocess thresholds must be >= 1".into()));
        }
        if self.fusion_epsilon < 0.0 {
            return Err(Error::Config("fusion.epsilon must be nonnegative".into()));
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n == 0) {
            return Err(Error::Config("eval.n_values must be positive".into()));
        }
        self.geo.validate()?;
        self.mf.validate()?;
        Ok(())
    }

    pub fn ppr_config(&self) -> PprConfig {
        PprConfig {
            damping: self.ppr_damping,
            tol: self.ppr_tol,
            max_iter: self.ppr_max_iter,
        }
    }

    pub fn social_score_config(&self) -> SocialScoreConfig {
        SocialScoreConfig {
            ppr: self.ppr_config(),
            top_t: (self.ppr_top_t > 0).then_some(self.ppr_top_t),
        }
    }

    pub fn fusion_config(&self) -> FusionConfig {
        FusionConfig {
            epsilon: self.fusion_epsilon,
            variant: self.variant,
        }
    }

    /// All keys and values in sorted order; the canonical form behind
    /// `fingerprint`.
    pub fn canonical(&self) -> String {
        let mut kv = BTreeMap::new();
        kv.insert(
            "data.checkins",
            self.checkins_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        kv.insert(
            "data.friendships",
            self.friendships_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        kv.insert("data.min_user_checkins", self.min_user_checkins.to_string());
        kv.insert("data.min_poi_checkins", self.min_poi_checkins.to_string());
        kv.insert("split.train_frac", format!("{}", self.train_frac));
        kv.insert("split.valid_frac", format!("{}", self.valid_frac));
        kv.insert("split.train_fraction", format!("{}", self.train_fraction));
        kv.insert("social.beta", format!("{}", self.beta));
        kv.insert("social.overlap_threshold", format!("{}", self.overlap_threshold));
        kv.insert("social.min_common_pois", self.min_common_pois.to_string());
        kv.insert("social.ppr_damping", format!("{}", self.ppr_damping));
        kv.insert("social.ppr_tol", format!("{}", self.ppr_tol));
        kv.insert("social.ppr_max_iter", self.ppr_max_iter.to_string());
        kv.insert("social.ppr_top_t", self.ppr_top_t.to_string());
        kv.insert("geo.d_km", format!("{}", self.geo.d_km));
        kv.insert("geo.epsilon_km", format!("{}", self.geo.epsilon_km));
        kv.insert("geo.states", states_to_string(&self.geo.states));
        kv.insert("geo.single_center", self.geo.single_center.to_string());
        kv.insert("mf.k", self.mf.k.to_string());
        kv.insert("mf.learning_rate", format!("{}", self.mf.learning_rate));
        kv.insert("mf.reg_lambda", format!("{}", self.mf.reg_lambda));
        kv.insert("mf.epochs", self.mf.epochs.to_string());
        kv.insert("mf.init_scale", format!("{}", self.mf.init_scale));
        kv.insert("fusion.epsilon", format!("{}", self.fusion_epsilon));
        kv.insert("fusion.variant", self.variant.as_str().to_string());
        kv.insert("eval.split", self.eval_split.as_str().to_string());
        kv.insert(
            "eval.n_values",
            self.n_values
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        kv.insert("seed", self.seed.to_string());
        let mut out = String::new();
        for (k, v) in kv {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn fingerprint(&self) -> String {
        hash16(&self.canonical())
    }

    /// Hash of everything that shapes the prepared dataset.
    pub fn data_fingerprint(&self) -> String {
        let s = format!(
            "{}|{}|{}|{}|{}|{}|{}|{}",
            self.checkins_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            self.friendships_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            self.min_user_checkins,
            self.min_poi_checkins,
            self.train_frac,
            self.valid_frac,
            self.train_fraction,
            self.seed,
        );
        hash16(&s)
    }

    /// Hash of the factorization inputs: data plus MF hyperparameters and
    /// the temporal state layout.
    pub fn mf_fingerprint(&self) -> String {
        let s = format!(
            "{}|{}|{}|{}|{}|{}|{}",
            self.data_fingerprint(),
            self.mf.k,
            self.mf.learning_rate,
            self.mf.reg_lambda,
            self.mf.epochs,
            self.mf.init_scale,
            states_to_string(&self.geo.states),
        );
        hash16(&s)
    }

    /// Hash of the activity-center inputs.
    pub fn geo_fingerprint(&self) -> String {
        let s = format!(
            "{}|{}|{}|{}|{}",
            self.data_fingerprint(),
            self.geo.d_km,
            self.geo.epsilon_km,
            states_to_string(&self.geo.states),
            self.geo.single_center,
        );
        hash16(&s)
    }
}

pub fn hash16(input: &str) -> String {
    let digest = Sha256::digest(input.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
