//! Maximum-entropy inverse reinforcement learning on the fixation MDP.

pub mod evaluate;
pub mod likelihood;
pub mod mdp;
pub mod oracle;
pub mod replay;
pub mod soft_vi;
pub mod svf;
pub mod train;

pub use likelihood::{log_likelihood, trajectory_log_prob, transition_prob};
pub use mdp::{build_mdp, ActionModel, FixationMdp};
pub use oracle::{enumerate_trajectories, TrajectoryDistribution};
pub use soft_vi::{soft_value_iteration, soft_value_iteration_infinite, Policy, SoftSolution};
pub use svf::{
    discounted_empirical_svf, discounted_expected_svf, empirical_svf, expected_svf, maxent_gradient, sample_trajectory,
    Demonstrations,
};
pub use replay::{replay, Decision};
pub use train::{decision_loss, replay_scenes, train, train_replayed, EpochRecord, TrainOutcome, ReplayedSet, TrainConfig, TrainingHistory};
pub use evaluate::{frame_argmax_agreement, mean_policy_kld, mean_sequence_nll, next_state_distribution};
