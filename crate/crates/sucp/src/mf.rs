//! Matrix factorization of the check-in frequency matrix: one static model
//! plus one model per temporal slice, fused into the preference score.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{CheckInLog, InteractionMatrix, PoiIdx, UserIdx};
use crate::error::{Error, Result};
use crate::geo::TemporalStates;

#[derive(Debug, Clone, PartialEq)]
pub struct MfConfig {
    pub k: usize,
    pub learning_rate: f64,
    pub reg_lambda: f64,
    pub epochs: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for MfConfig {
    fn default() -> Self {
        MfConfig {
            k: 30,
            learning_rate: 0.005,
            reg_lambda: 0.02,
            epochs: 50,
            seed: 42,
            init_scale: 0.1,
        }
    }
}

impl MfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.epochs < 1 {
            return Err(Error::Config("mf: k and epochs must be >= 1".into()));
        }
        let positive = |x: f64| x.partial_cmp(&0.0) == Some(std::cmp::Ordering::Greater);
        if !positive(self.learning_rate) || !positive(self.init_scale) || self.reg_lambda < 0.0 {
            return Err(Error::Config(
                "mf: learning_rate and init_scale must be positive, reg_lambda nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Latent user/POI factors of rank `k`, row-major per user and per POI.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    pub k: usize,
    pub num_users: usize,
    pub num_pois: usize,
    pub user_factors: Vec<f64>,
    pub poi_factors: Vec<f64>,
    pub epoch_losses: Vec<f64>,
}

impl FactorModel {
    pub fn user_row(&self, u: UserIdx) -> &[f64] {
        let i = u as usize * self.k;
        &self.user_factors[i..i + self.k]
    }

    pub fn poi_row(&self, l: PoiIdx) -> &[f64] {
        let i = l as usize * self.k;
        &self.poi_factors[i..i + self.k]
    }

    pub fn predict(&self, u: UserIdx, l: PoiIdx) -> f64 {
        dot(self.user_row(u), self.poi_row(l))
    }

    pub fn final_loss(&self) -> f64 {
        *self.epoch_losses.last().unwrap_or(&f64::NAN)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn observed_entries(m: &InteractionMatrix) -> Vec<(UserIdx, PoiIdx, f64)> {
    let mut entries = Vec::with_capacity(m.nnz());
    for u in 0..m.m() as UserIdx {
        for &(l, c) in m.row(u) {
            entries.push((u, l, c as f64));
        }
    }
    entries
}

/// Squared error over observed entries plus the L2 regularizer.
pub fn mf_loss(
    m: &InteractionMatrix,
    user_factors: &[f64],
    poi_factors: &[f64],
    k: usize,
    reg_lambda: f64,
) -> f64 {
    let mut loss = 0.0;
    for u in 0..m.m() as UserIdx {
        let urow = &user_factors[u as usize * k..(u as usize + 1) * k];
        for &(l, c) in m.row(u) {
            let e = c as f64 - dot(urow, &poi_factors[l as usize * k..(l as usize + 1) * k]);
            loss += e * e;
        }
    }
    let reg: f64 = user_factors.iter().map(|x| x * x).sum::<f64>()
        + poi_factors.iter().map(|x| x * x).sum::<f64>();
    loss + reg_lambda * reg
}

/// Full-batch analytic gradient of `mf_loss` with respect to both factor
/// matrices.
pub struct MfGradient {
    pub user: Vec<f64>,
    pub poi: Vec<f64>,
}

pub fn mf_gradient(
    m: &InteractionMatrix,
    user_factors: &[f64],
    poi_factors: &[f64],
    k: usize,
    reg_lambda: f64,
) -> MfGradient {
    assert_eq!(user_factors.len(), m.m() * k);
    assert_eq!(poi_factors.len(), m.n() * k);
    let mut gu: Vec<f64> = user_factors.iter().map(|x| 2.0 * reg_lambda * x).collect();
    let mut gp: Vec<f64> = poi_factors.iter().map(|x| 2.0 * reg_lambda * x).collect();
    for u in 0..m.m() {
        let ui = u * k;
        for &(l, c) in m.row(u as UserIdx) {
            let li = l as usize * k;
            let e = c as f64 - dot(&user_factors[ui..ui + k], &poi_factors[li..li + k]);
            for j in 0..k {
                gu[ui + j] += -2.0 * e * poi_factors[li + j];
                gp[li + j] += -2.0 * e * user_factors[ui + j];
            }
        }
    }
    MfGradient { user: gu, poi: gp }
}

/// SGD over observed entries with per-sample L2 shrinkage. Deterministic for
/// a fixed seed; per-epoch objective values are recorded on the model.
pub fn train_mf(m: &InteractionMatrix, cfg: &MfConfig) -> Result<FactorModel> {
    cfg.validate()?;
    let entries = observed_entries(m);
    assert!(!entries.is_empty(), "matrix must have at least one entry");

    let k = cfg.k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut user_factors: Vec<f64> = (0..m.m() * k)
        .map(|_| rng.gen_range(0.0..cfg.init_scale))
        .collect();
    let mut poi_factors: Vec<f64> = (0..m.n() * k)
        .map(|_| rng.gen_range(0.0..cfg.init_scale))
        .collect();

    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut scratch = vec![0.0; k];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (u, l, r) = entries[i];
            let ui = u as usize * k;
            let li = l as usize * k;
            let e = r - dot(&user_factors[ui..ui + k], &poi_factors[li..li + k]);
            scratch.copy_from_slice(&user_factors[ui..ui + k]);
            for j in 0..k {
                user_factors[ui + j] += cfg.learning_rate
                    * (e * poi_factors[li + j] - cfg.reg_lambda * user_factors[ui + j]);
                poi_factors[li + j] +=
                    cfg.learning_rate * (e * scratch[j] - cfg.reg_lambda * poi_factors[li + j]);
            }
        }
        let loss = mf_loss(m, &user_factors, &poi_factors, k, cfg.reg_lambda);
        if !loss.is_finite() {
            return Err(Error::MfDiverged {
                context: "train_mf".into(),
                epoch,
            });
        }
        epoch_losses.push(loss);
    }
    Ok(FactorModel {
        k,
        num_users: m.m(),
        num_pois: m.n(),
        user_factors,
        poi_factors,
        epoch_losses,
    })
}

/// The check-in matrix sliced by temporal state; every check-in lands in
/// exactly one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalSlices {
    pub states: Vec<usize>,
    pub matrices: Vec<InteractionMatrix>,
}

pub fn split_temporal(train: &CheckInLog, states: &TemporalStates) -> TemporalSlices {
    let num_states = states.count();
    let mut counts: Vec<std::collections::HashMap<(UserIdx, PoiIdx), u32>> =
        vec![Default::default(); num_states];
    for c in &train.checkins {
        let s = states.assign(c.timestamp);
        *counts[s].entry((c.user, c.poi)).or_insert(0) += 1;
    }
    let matrices = counts
        .into_iter()
        .map(|map| {
            let mut rows = vec![Vec::new(); train.num_users()];
            for ((u, p), c) in map {
                rows[u as usize].push((p, c));
            }
            InteractionMatrix::from_rows(rows, train.num_pois())
        })
        .collect();
    TemporalSlices {
        states: (0..num_states).collect(),
        matrices,
    }
}

/// Aggregated temporal preference: the sum of per-state predictions,
/// clamped below at zero. Entries are computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    models: Vec<FactorModel>,
    num_users: usize,
    num_pois: usize,
}

impl PreferenceMatrix {
    pub fn m(&self) -> usize {
        self.num_users
    }

    pub fn n(&self) -> usize {
        self.num_pois
    }

    pub fn models(&self) -> &[FactorModel] {
        &self.models
    }

    pub fn score(&self, u: UserIdx, l: PoiIdx) -> f64 {
        let raw: f64 = self.models.iter().map(|m| m.predict(u, l)).sum();
        raw.max(0.0)
    }
}

pub fn aggregate_temporal(models: Vec<FactorModel>) -> Result<PreferenceMatrix> {
    assert!(!models.is_empty());
    let (m, n) = (models[0].num_users, models[0].num_pois);
    for model in &models {
        if model.num_users != m || model.num_pois != n {
            return Err(Error::DimensionMismatch(format!(
                "temporal models disagree on shape: {}x{} vs {}x{}",
                model.num_users, model.num_pois, m, n
            )));
        }
    }
    Ok(PreferenceMatrix {
        models,
        num_users: m,
        num_pois: n,
    })
}

/// Z_{u,l}: aggregated temporal preference times the clamped static
/// prediction.
pub fn preference_score(
    u: UserIdx,
    l: PoiIdx,
    static_model: &FactorModel,
    rhat: &PreferenceMatrix,
) -> f64 {
    rhat.score(u, l) * static_model.predict(u, l).max(0.0)
}
