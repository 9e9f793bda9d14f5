//! Actor / critic / classifier learner and the shared rollout machinery the
//! baselines reuse.

mod config;
mod gae;
mod model;
mod policy;
mod rollout;
mod train;
mod update;

pub use config::{build_mlp, default_classifier, CriticTarget, LearnerConfig};
pub use gae::{advantages_from_deltas, clip_bound, clipped_objective, clipped_objective_grad, compute_gae, temporal_differences};
pub use model::{Algorithm, HybridModel, ModelShape, Observation};
pub use policy::{
    log_squash_jacobian, power_density, squash_power, ActorLayout, PolicyDistribution, PolicySample, LOG_STD_MAX,
    LOG_STD_MIN, SQUASH_LIMIT,
};
pub use rollout::{collect_trajectories, run_greedy_episode, ActionMode, GreedyStep, Runner, StepRecord, Trajectory};
pub use train::{evaluate, train, EpisodeMetrics, EvalReport, TrainOutput};
pub use update::{advantages_and_targets, classifier_step, update_iteration, IterationDiagnostics};
