//! REINFORCE with an exponential-moving-average baseline.
//!
//! One step: the policy proposes `Beta(α, β)` for the current curvature
//! summary, a ratio `g` is drawn, the caller's reward is observed, the
//! parameters move along `(R - b)·∇ log π(g)` and the baseline is updated
//! as `b ← λ·b + (1 - λ)·R`. The advantage uses the baseline from before
//! the step.
//!
//! Surrogate rewards are small (Chamfer distances around 1e-3), which leaves
//! plain ascent nearly frozen at the usual learning rates. By default the
//! advantage is therefore divided by a running RMS of past advantages, an
//! EMA with the baseline's decay and a bias correction. Turning
//! `normalize_advantage` off gives the unscaled update.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::beta::{beta_log_prob, beta_log_prob_grad, sample_beta};
use super::network::BetaPolicy;
use super::summary::{featurize_curvature, CurvatureSummary};
use crate::cfps::{cfps_from_ranking, CfpsResult, CombineMode};
use crate::cloud::PointCloud;
use crate::curvature::CurvatureField;
use crate::error::{Error, Result};
use crate::fps::{fps_full_ranking, FpsRanking};
use crate::metrics::{chamfer_distance, curvature_retention};

pub const DEFAULT_DECAY: f64 = 0.99;
pub const DEFAULT_LEARNING_RATE: f64 = 2e-2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub baseline: f64,
    pub decay: f64,
    pub step: u64,
    pub learning_rate: f64,
    pub rng_seed: u64,
    /// EMA of squared advantages, uncorrected.
    #[serde(default)]
    pub advantage_sq: f64,
    #[serde(default = "enabled")]
    pub normalize_advantage: bool,
}

fn enabled() -> bool {
    true
}

/// Floor on the advantage scale, so a run of identical rewards cannot blow
/// the step up.
const MIN_ADVANTAGE_SCALE: f64 = 1e-8;

impl TrainState {
    pub fn new(learning_rate: f64, rng_seed: u64) -> Self {
        Self {
            baseline: 0.0,
            decay: DEFAULT_DECAY,
            step: 0,
            learning_rate,
            rng_seed,
            advantage_sq: 0.0,
            normalize_advantage: true,
        }
    }

    /// Multiplier applied to a fresh advantage `a` before the ascent step,
    /// folding `a` into the running second moment first.
    fn advantage_scale(&self, a: f64) -> (f64, f64) {
        let sq = self.decay * self.advantage_sq + (1.0 - self.decay) * a * a;
        if !self.normalize_advantage {
            return (1.0, sq);
        }
        let correction = 1.0 - self.decay.powf((self.step + 1) as f64);
        let rms = (sq / correction).sqrt();
        (1.0 / rms.max(MIN_ADVANTAGE_SCALE), sq)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "baseline decay must lie in (0, 1), got {}",
                self.decay
            )));
        }
        if !self.baseline.is_finite()
            || !self.learning_rate.is_finite()
            || !self.advantage_sq.is_finite()
        {
            return Err(Error::InvalidArgument("non-finite training state".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    pub alpha: f64,
    pub beta: f64,
    pub log_prob: f64,
    pub advantage: f64,
    /// Advantage after scaling, the factor actually applied.
    pub scaled_advantage: f64,
    /// Norm of the applied ascent direction `A·∇ log π`.
    pub grad_norm: f64,
}

/// `∇_φ log π(g | s)` together with the forward outputs.
pub fn log_prob_gradient(
    policy: &BetaPolicy,
    s: &CurvatureSummary,
    g: f64,
) -> Result<(f64, f64, f64, Vec<f64>)> {
    let pass = policy.forward_features(&s.features())?;
    let log_prob = beta_log_prob(pass.alpha, pass.beta, g)?;
    let (da, db) = beta_log_prob_grad(pass.alpha, pass.beta, g)?;
    let grad = policy.backward(&pass, da, db);
    Ok((pass.alpha, pass.beta, log_prob, grad))
}

/// One REINFORCE ascent step. Nothing is modified when an error is
/// returned.
pub fn reinforce_update(
    policy: &mut BetaPolicy,
    state: &mut TrainState,
    s: &CurvatureSummary,
    g: f64,
    reward: f64,
) -> Result<UpdateStats> {
    state.validate()?;
    if !reward.is_finite() {
        return Err(Error::Diverged(format!("non-finite reward {reward}")));
    }
    let (alpha, beta, log_prob, grad) = log_prob_gradient(policy, s, g)?;
    let advantage = reward - state.baseline;
    if grad.iter().any(|v| !v.is_finite()) || !log_prob.is_finite() {
        return Err(Error::Diverged(format!(
            "non-finite gradient at alpha={alpha}, beta={beta}, g={g}, advantage={advantage}"
        )));
    }
    let (factor, advantage_sq) = state.advantage_scale(advantage);
    let scaled_advantage = advantage * factor;
    let scale = state.learning_rate * scaled_advantage;
    for (p, d) in policy.params_mut().iter_mut().zip(&grad) {
        *p += scale * d;
    }
    state.baseline = state.decay * state.baseline + (1.0 - state.decay) * reward;
    state.advantage_sq = advantage_sq;
    state.step += 1;
    let grad_norm = scaled_advantage.abs() * grad.iter().map(|d| d * d).sum::<f64>().sqrt();
    Ok(UpdateStats {
        alpha,
        beta,
        log_prob,
        advantage,
        scaled_advantage,
        grad_norm,
    })
}

/// Inputs available to a reward function after one sampling step.
pub struct RewardInput<'a> {
    pub cloud: &'a PointCloud,
    pub curv: &'a CurvatureField,
    pub result: &'a CfpsResult,
}

/// Scalar feedback for a sampled exchange ratio; larger is better.
pub trait Reward {
    fn reward(&mut self, input: &RewardInput<'_>) -> Result<f64>;
}

/// Negative Chamfer distance of the sample to its cloud, minus a weighted
/// curvature-retention shortfall.
#[derive(Debug, Clone, Copy)]
pub struct SurrogateReward {
    pub weight: f64,
}

impl Reward for SurrogateReward {
    fn reward(&mut self, input: &RewardInput<'_>) -> Result<f64> {
        surrogate_reward(input.cloud, input.result, input.curv, self.weight)
    }
}

pub fn surrogate_reward(
    cloud: &PointCloud,
    result: &CfpsResult,
    curv: &CurvatureField,
    weight: f64,
) -> Result<f64> {
    if !(weight >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "reward weight must be non-negative, got {weight}"
        )));
    }
    let sample = cloud.gather(&result.selection)?;
    let chamfer = chamfer_distance(&sample, cloud);
    let retention = curvature_retention(curv, &result.selection)?;
    Ok(-(chamfer + weight * (1.0 - retention)))
}

/// Stationary bandit reward `-(g - peak)²`, independent of the cloud.
#[derive(Debug, Clone, Copy)]
pub struct PeakReward {
    pub peak: f64,
}

impl PeakReward {
    pub fn at(&self, g: f64) -> f64 {
        -(g - self.peak).powi(2)
    }
}

impl Reward for PeakReward {
    fn reward(&mut self, input: &RewardInput<'_>) -> Result<f64> {
        Ok(self.at(input.result.g_used))
    }
}

/// Per-step record for the JSON-lines training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub alpha: f64,
    pub beta: f64,
    pub g: f64,
    pub reward: f64,
    pub baseline: f64,
    pub grad_norm: f64,
}

/// Sample a ratio, score it with `reward_of`, update. Shared by every
/// training loop.
pub fn policy_step<R, F>(
    policy: &mut BetaPolicy,
    state: &mut TrainState,
    rng: &mut R,
    summary: &CurvatureSummary,
    reward_of: F,
) -> Result<StepRecord>
where
    R: Rng + ?Sized,
    F: FnOnce(f64) -> Result<f64>,
{
    let (alpha, beta) = policy.forward(summary)?;
    let g = sample_beta(alpha, beta, rng);
    let reward = reward_of(g)?;
    let stats = reinforce_update(policy, state, summary, g, reward)?;
    Ok(StepRecord {
        step: state.step,
        alpha: stats.alpha,
        beta: stats.beta,
        g,
        reward,
        baseline: state.baseline,
        grad_norm: stats.grad_norm,
    })
}

/// A training cloud with everything that does not depend on the policy
/// computed once.
#[derive(Debug, Clone)]
pub struct PreparedCloud {
    pub cloud: PointCloud,
    pub curv: CurvatureField,
    pub ranking: FpsRanking,
    pub summary: CurvatureSummary,
}

impl PreparedCloud {
    pub fn new(cloud: PointCloud, curv: CurvatureField, seed_index: usize) -> Result<Self> {
        let ranking = fps_full_ranking(&cloud, seed_index)?;
        let summary = featurize_curvature(&curv);
        Ok(Self {
            cloud,
            curv,
            ranking,
            summary,
        })
    }
}

/// One CFPS training step on a prepared cloud with core size `k`.
pub fn train_step<R: Rng + ?Sized>(
    policy: &mut BetaPolicy,
    state: &mut TrainState,
    rng: &mut R,
    item: &PreparedCloud,
    k: usize,
    mode: CombineMode,
    reward: &mut dyn Reward,
) -> Result<StepRecord> {
    policy_step(policy, state, rng, &item.summary, |g| {
        let result = cfps_from_ranking(&item.ranking, &item.curv, k, g, mode)?;
        reward.reward(&RewardInput {
            cloud: &item.cloud,
            curv: &item.curv,
            result: &result,
        })
    })
}
