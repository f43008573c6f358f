//! Training objectives as plain numerics: the temporally weighted object
//! loss, the transition regularizer, BCE with a threshold margin, and the
//! combined relation objective. Nothing here trains a model; values and
//! per-token weights are computed for an external trainer or for scoring.
//!
//! Natural logarithms throughout.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::LossError;
use crate::graph::FrameGraph;

/// How the probability-change threshold applies to predicted transitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateMode {
    /// Only steps with `|p(t+1) - p(t)| > tau` contribute to `T_pred`.
    #[default]
    Literal,
    /// Every step contributes.
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub beta: f64,
    pub lambda: f64,
    /// Relations need `|T_real|_1 > delta`.
    pub delta: f64,
    pub tau: f64,
    pub epsilon: f64,
    pub gamma_pos: f64,
    pub gamma_neg: f64,
    pub eta: f64,
    pub gate: GateMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            beta: 0.5,
            lambda: 0.03,
            delta: 0.0,
            tau: 0.2,
            epsilon: 1e-9,
            gamma_pos: 0.9,
            gamma_neg: 0.5,
            eta: 0.5,
            gate: GateMode::Literal,
        }
    }
}

fn invalid(msg: impl Into<String>) -> LossError {
    LossError::InvalidArgument(msg.into())
}

/// `w(t) = beta [1 + cos(pi (t-(n+1)) / (T-(n+1)))] + (1 - beta)` for `n+1 <= t <= T`.
pub fn cosine_weight(t: usize, n: usize, horizon: usize, beta: f64) -> Result<f64, LossError> {
    if t < n + 1 || t > horizon {
        return Err(invalid(format!("t={t} outside [{}, {horizon}]", n + 1)));
    }
    let span = (horizon - (n + 1)) as f64;
    let arg = if span == 0.0 {
        0.0
    } else {
        PI * (t - (n + 1)) as f64 / span
    };
    Ok(beta * (1.0 + arg.cos()) + (1.0 - beta))
}

/// Weights for each future graph `n+1..=T`.
pub fn cosine_weights(n: usize, horizon: usize, beta: f64) -> Result<Vec<f64>, LossError> {
    if horizon < n + 1 {
        return Err(invalid(format!("horizon {horizon} leaves no future graph after n={n}")));
    }
    (n + 1..=horizon).map(|t| cosine_weight(t, n, horizon, beta)).collect()
}

/// `sum_t w(t) sum_i l_{t,i} / sum_t w(t) K_t`, one row of token losses per future graph.
pub fn goa_weighted_loss(token_losses: &[Vec<f64>], n: usize, horizon: usize, beta: f64) -> Result<f64, LossError> {
    if token_losses.is_empty() {
        return Err(invalid("no future graphs"));
    }
    let weights = cosine_weights(n, horizon, beta)?;
    if weights.len() != token_losses.len() {
        return Err(invalid(format!(
            "{} token-loss rows for {} future graphs",
            token_losses.len(),
            weights.len()
        )));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (w, row) in weights.iter().zip(token_losses) {
        num += w * row.iter().sum::<f64>();
        den += w * row.len() as f64;
    }
    if den <= 0.0 {
        return Err(invalid("no tokens"));
    }
    Ok(num / den)
}

/// Per-token weights an external trainer can apply directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenWeights {
    pub n: usize,
    pub horizon: usize,
    pub beta: f64,
    pub graphs: Vec<GraphWeights>,
    /// `sum_t w(t) K_t`.
    pub normalizer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphWeights {
    pub t: usize,
    pub weight: f64,
    pub tokens: Vec<f64>,
}

impl TokenWeights {
    /// Flattened per-token weights in graph order.
    pub fn flat(&self) -> Vec<f64> {
        self.graphs.iter().flat_map(|g| g.tokens.iter().copied()).collect()
    }

    /// Applies the weights to token losses shaped like the export.
    pub fn apply(&self, token_losses: &[Vec<f64>]) -> Result<f64, LossError> {
        if token_losses.len() != self.graphs.len() {
            return Err(invalid("token-loss rows do not match the exported graphs"));
        }
        let mut num = 0.0;
        for (g, row) in self.graphs.iter().zip(token_losses) {
            if row.len() != g.tokens.len() {
                return Err(invalid(format!("graph t={} expects {} tokens", g.t, g.tokens.len())));
            }
            num += g.tokens.iter().zip(row).map(|(w, l)| w * l).sum::<f64>();
        }
        Ok(num / self.normalizer)
    }
}

pub fn export_token_weights(
    n: usize,
    horizon: usize,
    beta: f64,
    token_counts: &[usize],
) -> Result<TokenWeights, LossError> {
    let weights = cosine_weights(n, horizon, beta)?;
    if weights.len() != token_counts.len() {
        return Err(invalid(format!(
            "{} token counts for {} future graphs",
            token_counts.len(),
            weights.len()
        )));
    }
    let graphs: Vec<GraphWeights> = weights
        .iter()
        .zip(token_counts)
        .enumerate()
        .map(|(i, (&w, &k))| GraphWeights {
            t: n + 1 + i,
            weight: w,
            tokens: vec![w; k],
        })
        .collect();
    let normalizer = graphs.iter().map(|g| g.weight * g.tokens.len() as f64).sum();
    Ok(TokenWeights {
        n,
        horizon,
        beta,
        graphs,
        normalizer,
    })
}

pub type Matrix2 = [[f64; 2]; 2];

/// Ground-truth presence and predicted probability of one relation over
/// consecutive future graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationTrack {
    pub relation: String,
    pub truth: Vec<u8>,
    pub prob: Vec<f64>,
}

impl RelationTrack {
    pub fn new(relation: impl Into<String>, truth: Vec<u8>, prob: Vec<f64>) -> Self {
        RelationTrack {
            relation: relation.into(),
            truth,
            prob,
        }
    }

    fn validate(&self) -> Result<(), LossError> {
        if self.truth.len() != self.prob.len() {
            return Err(invalid(format!("track `{}`: sequences are not aligned", self.relation)));
        }
        if self.truth.len() < 2 {
            return Err(invalid(format!("track `{}`: needs at least two steps", self.relation)));
        }
        if self.truth.iter().any(|&y| y > 1) {
            return Err(invalid(format!("track `{}`: labels must be 0 or 1", self.relation)));
        }
        if self.prob.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(invalid(format!("track `{}`: probabilities outside [0, 1]", self.relation)));
        }
        Ok(())
    }
}

fn gated(cfg_tau: f64, gate: GateMode, a: f64, b: f64) -> bool {
    match gate {
        GateMode::Disabled => true,
        GateMode::Literal => cfg_tau <= 0.0 || (b - a).abs() > cfg_tau,
    }
}

fn states(p: f64) -> [f64; 2] {
    [1.0 - p, p]
}

/// Raw `(T_real, T_pred)` of a track.
pub fn transition_matrices(track: &RelationTrack, tau: f64, gate: GateMode) -> Result<(Matrix2, Matrix2), LossError> {
    track.validate()?;
    let mut real = [[0.0; 2]; 2];
    let mut pred = [[0.0; 2]; 2];
    for t in 0..track.truth.len() - 1 {
        real[track.truth[t] as usize][track.truth[t + 1] as usize] += 1.0;
        let (a, b) = (track.prob[t], track.prob[t + 1]);
        if gated(tau, gate, a, b) {
            let (qa, qb) = (states(a), states(b));
            for i in 0..2 {
                for j in 0..2 {
                    pred[i][j] += qa[i] * qb[j];
                }
            }
        }
    }
    Ok((real, pred))
}

fn mass(m: &Matrix2) -> f64 {
    m.iter().flatten().sum()
}

/// `M / (|M|_1 + eps)`.
pub fn normalize(m: &Matrix2, eps: f64) -> Matrix2 {
    let s = mass(m) + eps;
    m.map(|row| row.map(|v| v / s))
}

/// `(KL(P||Q) + KL(Q||P)) / 2` over the four cells, each clamped to at least `eps`.
pub fn symmetric_kl(p: &Matrix2, q: &Matrix2, eps: f64) -> f64 {
    let mut total = 0.0;
    for (a, b) in p.iter().flatten().zip(q.iter().flatten()) {
        let (a, b) = (a.max(eps), b.max(eps));
        total += a * (a / b).ln() + b * (b / a).ln();
    }
    total / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionLoss {
    pub value: f64,
    /// Per-track symmetric KL; `None` where the count gate excluded the track.
    pub per_track: Vec<Option<f64>>,
    pub valid_relations: usize,
    /// Set when no track passes the count gate (value is then 0).
    pub no_valid_relations: bool,
}

pub fn transition_loss(tracks: &[RelationTrack], cfg: &LossConfig) -> Result<TransitionLoss, LossError> {
    if tracks.is_empty() {
        return Err(invalid("no relation tracks"));
    }
    let mut per_track = Vec::with_capacity(tracks.len());
    for track in tracks {
        let (real, pred) = transition_matrices(track, cfg.tau, cfg.gate)?;
        if mass(&real) > cfg.delta {
            let kl = symmetric_kl(&normalize(&pred, cfg.epsilon), &normalize(&real, cfg.epsilon), cfg.epsilon);
            per_track.push(Some(kl));
        } else {
            per_track.push(None);
        }
    }
    let valid: Vec<f64> = per_track.iter().flatten().copied().collect();
    let value = if valid.is_empty() {
        0.0
    } else {
        valid.iter().sum::<f64>() / valid.len() as f64
    };
    Ok(TransitionLoss {
        value,
        valid_relations: valid.len(),
        no_valid_relations: valid.is_empty(),
        per_track,
    })
}

/// Analytic `d transition_loss / d prob` for every track, with the gate
/// pattern held fixed. Clamped cells contribute no gradient.
pub fn transition_loss_grad(tracks: &[RelationTrack], cfg: &LossConfig) -> Result<Vec<Vec<f64>>, LossError> {
    let loss = transition_loss(tracks, cfg)?;
    let scale = if loss.valid_relations == 0 {
        0.0
    } else {
        1.0 / loss.valid_relations as f64
    };
    let eps = cfg.epsilon;
    let mut grads = Vec::with_capacity(tracks.len());
    for (track, kl) in tracks.iter().zip(&loss.per_track) {
        let len = track.prob.len();
        let mut g = vec![0.0; len];
        if kl.is_none() {
            grads.push(g);
            continue;
        }
        let (real, pred) = transition_matrices(track, cfg.tau, cfg.gate)?;
        let dr = normalize(&real, eps);
        let s = mass(&pred) + eps;
        let dp = normalize(&pred, eps);
        // dL/dD_pred per cell.
        let mut d_cell = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let (a, b) = (dp[i][j], dr[i][j]);
                if a > eps {
                    let b = b.max(eps);
                    d_cell[i][j] = 0.5 * ((a / b).ln() + 1.0 - b / a);
                }
            }
        }
        // Chain through D = T / (|T|_1 + eps).
        let dot: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| d_cell[i][j] * pred[i][j]).sum();
        let mut d_t = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                d_t[i][j] = d_cell[i][j] / s - dot / (s * s);
            }
        }
        let dq = [-1.0, 1.0];
        for t in 0..len - 1 {
            let (a, b) = (track.prob[t], track.prob[t + 1]);
            if !gated(cfg.tau, cfg.gate, a, b) {
                continue;
            }
            let (qa, qb) = (states(a), states(b));
            for i in 0..2 {
                for j in 0..2 {
                    g[t] += d_t[i][j] * dq[i] * qb[j];
                    g[t + 1] += d_t[i][j] * qa[i] * dq[j];
                }
            }
        }
        grads.push(g.into_iter().map(|v| v * scale).collect());
    }
    Ok(grads)
}

fn check_pair(p: &[f64], y: &[f64]) -> Result<(), LossError> {
    if p.len() != y.len() {
        return Err(invalid(format!("{} probabilities for {} labels", p.len(), y.len())));
    }
    if p.is_empty() {
        return Err(invalid("empty relation vector"));
    }
    if p.iter().chain(y).any(|v| !(0.0..=1.0).contains(v)) {
        return Err(invalid("values must lie in [0, 1]"));
    }
    Ok(())
}

/// Mean binary cross-entropy with `p` clamped to `[eps, 1 - eps]`.
pub fn bce(p: &[f64], y: &[f64], eps: f64) -> Result<f64, LossError> {
    check_pair(p, y)?;
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = p.clamp(eps, 1.0 - eps);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / p.len() as f64)
}

pub fn bce_grad(p: &[f64], y: &[f64], eps: f64) -> Result<Vec<f64>, LossError> {
    check_pair(p, y)?;
    let n = p.len() as f64;
    Ok(p.iter()
        .zip(y)
        .map(|(&p, &y)| {
            if p < eps || p > 1.0 - eps {
                0.0
            } else {
                (-(y / p) + (1.0 - y) / (1.0 - p)) / n
            }
        })
        .collect())
}

/// `mean[y max(0, gamma_pos - p) + (1 - y) max(0, p - gamma_neg)]`.
pub fn threshold_margin_loss(p: &[f64], y: &[f64], gamma_pos: f64, gamma_neg: f64) -> Result<f64, LossError> {
    check_pair(p, y)?;
    let total: f64 = p
        .iter()
        .zip(y)
        .map(|(&p, &y)| y * (gamma_pos - p).max(0.0) + (1.0 - y) * (p - gamma_neg).max(0.0))
        .sum();
    Ok(total / p.len() as f64)
}

/// Subgradient of the margin loss (zero exactly at a kink).
pub fn threshold_margin_grad(p: &[f64], y: &[f64], gamma_pos: f64, gamma_neg: f64) -> Result<Vec<f64>, LossError> {
    check_pair(p, y)?;
    let n = p.len() as f64;
    Ok(p.iter()
        .zip(y)
        .map(|(&p, &y)| {
            let pos = if p < gamma_pos { -y } else { 0.0 };
            let neg = if p > gamma_neg { 1.0 - y } else { 0.0 };
            (pos + neg) / n
        })
        .collect())
}

/// `bce + eta * threshold_margin_loss`.
pub fn sgg_relation_loss(p: &[f64], y: &[f64], cfg: &LossConfig) -> Result<f64, LossError> {
    Ok(bce(p, y, cfg.epsilon)? + cfg.eta * threshold_margin_loss(p, y, cfg.gamma_pos, cfg.gamma_neg)?)
}

/// `ce + bce + lambda * trans`.
pub fn oora_total_loss(ce: f64, bce_val: f64, trans: f64, lambda: f64) -> f64 {
    ce + bce_val + lambda * trans
}

/// Transition consistency of hard predictions against ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionScore {
    pub aggregate: f64,
    pub no_valid_relations: bool,
    pub per_relation: Vec<RelationScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationScore {
    pub object: String,
    pub relation: String,
    pub score: Option<f64>,
}

fn presence(frame: Option<&FrameGraph>, object: &str, relation: &str) -> bool {
    frame
        .and_then(|f| f.object(object))
        .is_some_and(|o| o.all_relations().any(|r| r == relation))
}

/// Builds one 0/1 track per (object, relation) seen in either side over the
/// ground-truth frame ids and scores it with [`transition_loss`].
/// Lower is smoother relative to the ground truth.
pub fn score_transition_consistency(
    prediction: &[FrameGraph],
    truth: &[FrameGraph],
    cfg: &LossConfig,
) -> Result<TransitionScore, LossError> {
    if truth.len() < 2 {
        return Err(invalid("transition scoring needs at least two ground-truth frames"));
    }
    let pairs: BTreeSet<(String, String)> = truth
        .iter()
        .chain(prediction)
        .flat_map(|f| {
            f.objects
                .iter()
                .flat_map(|o| o.all_relations().map(move |r| (o.object.clone(), r.to_string())))
        })
        .collect();
    if pairs.is_empty() {
        return Ok(TransitionScore {
            aggregate: 0.0,
            no_valid_relations: true,
            per_relation: Vec::new(),
        });
    }
    let tracks: Vec<RelationTrack> = pairs
        .iter()
        .map(|(o, r)| {
            let truth_seq = truth.iter().map(|f| presence(Some(f), o, r) as u8).collect();
            let pred_seq = truth
                .iter()
                .map(|gt| {
                    let p = prediction.iter().find(|f| f.frame_id == gt.frame_id);
                    if presence(p, o, r) {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            RelationTrack::new(format!("{o}/{r}"), truth_seq, pred_seq)
        })
        .collect();
    let loss = transition_loss(&tracks, cfg)?;
    Ok(TransitionScore {
        aggregate: loss.value,
        no_valid_relations: loss.no_valid_relations,
        per_relation: pairs
            .into_iter()
            .zip(loss.per_track)
            .map(|((object, relation), score)| RelationScore { object, relation, score })
            .collect(),
    })
}
