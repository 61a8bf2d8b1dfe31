//! Proximal policy optimisation with generalised advantage estimation,
//! baseline policies and evaluation statistics.

mod baseline;
mod net;
mod rollout;
mod train;
mod update;

pub use baseline::{
    bootstrap_ci, evaluate_policy, greedy_drainage_action, make_baseline, paired_difference, Agent, BaselineKind,
    EvalSummary, BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED,
};
pub use net::{log_softmax, softmax, Net, PolicySpec, Representation, ValueSpec};
pub use rollout::{collect_rollouts, compute_gae, Environment, RolloutWorker, Trajectory};
pub use train::{
    config_hash, format_training_log, init_networks, train, train_with, Checkpoint, IterationLog, TrainOutcome,
    CHECKPOINT_VERSION,
};
pub use update::{
    clipped_objective, normalize_advantages, policy_objective_and_grad, ppo_update, value_loss_and_grad, Batch,
    PpoConfig, UpdateStats,
};
