//! Learned exchange ratio: a Beta-distribution policy over `g ∈ (0, 1)`
//! conditioned on a curvature summary, trained by REINFORCE.

pub mod beta;
pub mod checkpoint;
pub mod network;
pub mod special;
pub mod summary;
pub mod train;

pub use beta::{beta_log_prob, beta_log_prob_grad, beta_mean, beta_variance, sample_beta};
pub use checkpoint::Checkpoint;
pub use network::BetaPolicy;
pub use summary::{featurize_curvature, CurvatureSummary};
pub use train::{
    policy_step, reinforce_update, surrogate_reward, train_step, PeakReward, PreparedCloud, Reward,
    RewardInput, StepRecord, SurrogateReward, TrainState,
};
