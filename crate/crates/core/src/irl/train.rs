use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, SceneSequence};
use crate::fovea::FoveaConfig;
use crate::grid::GridSpec;
use crate::irl::likelihood::transition_prob;
use crate::irl::mdp::{build_mdp, ActionModel, FixationMdp};
use crate::irl::replay::{replay, Decision};
use crate::irl::soft_vi::{soft_value_iteration, Policy};
use crate::irl::svf::discounted_expected_svf;
use crate::matrix::Matrix;
use crate::observe::Observer;
use crate::reward_net::{
    adam_step, backward, forward, init_params, AdamConfig, AdamState, LrSchedule, NetConfig, RewardNetParams,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_sequences: usize,
    pub frames_per_sequence: usize,
    pub vi_tolerance: f64,
    pub max_vi_sweeps: usize,
    pub seed: u64,
    pub gamma: f64,
    pub action_model: ActionModel,
    pub features: FeatureConfig,
    pub fovea: FoveaConfig,
    pub schedule: LrSchedule,
    /// `input_dim` is replaced by the width the feature toggles produce.
    pub net: NetConfig,
    pub adam: AdamConfig,
    /// States demonstrated fewer times than this get no reward gradient; 0 disables.
    pub min_state_visits: usize,
    /// Record wall-clock seconds per epoch; off keeps the history reproducible.
    pub record_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 36,
            batch_sequences: 20,
            frames_per_sequence: 6,
            vi_tolerance: 1e-6,
            max_vi_sweeps: 1000,
            seed: 0,
            gamma: 0.98,
            action_model: ActionModel::PatchTarget,
            features: FeatureConfig::default(),
            fovea: FoveaConfig::default(),
            schedule: LrSchedule::default(),
            net: NetConfig::default(),
            adam: AdamConfig::default(),
            min_state_visits: 0,
            record_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_sequences == 0 || self.frames_per_sequence == 0 || self.max_vi_sweeps == 0 {
            return Err(Error::InvalidArgument("training counts must be positive".into()));
        }
        if !(self.vi_tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("value-iteration tolerance {}", self.vi_tolerance)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!("discount {}", self.gamma)));
        }
        self.features.validate()?;
        self.fovea.validate()?;
        self.schedule.validate()?;
        let mut net = self.net.clone();
        net.input_dim = net.input_dim.max(1);
        net.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u32,
    /// Mean negative log-likelihood per demonstrated sequence.
    pub nll: f64,
    /// Mean gradient norm over the epoch's batches.
    pub grad_norm: f64,
    pub lr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainingHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,nll,grad_norm,lr,seconds\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{},{}\n", e.epoch, e.nll, e.grad_norm, e.lr, e.seconds));
        }
        out
    }
}

/// Negative log-probability of one decision and its gradient with respect to
/// the per-state reward.
///
/// With `V_0` and `Q_0` from a solve over `decision.horizon` steps, the loss is
/// `V_0(s) - Q_0(s, a)`; its gradient is the discounted visitation from `s`
/// minus that of the path forced through the chosen successor.
pub fn decision_loss(mdp: &FixationMdp, r: &[f64], from: usize, to: usize, horizon: usize) -> Result<(f64, Vec<f64>)> {
    let sol = soft_value_iteration(mdp, r, horizon)?;
    let p = transition_prob(mdp, &sol.policy, 0, from, to);
    if !(p > 0.0) {
        return Err(Error::ImpossibleDemo { step: 0 });
    }
    let s_count = mdp.num_states();
    let mut d_from = vec![0.0; s_count];
    d_from[from] = 1.0;
    let mut grad = discounted_expected_svf(mdp, &sol.policy, &d_from, horizon + 1)?;
    grad[from] -= 1.0;
    if horizon >= 1 {
        let tail = Policy {
            steps: sol.policy.steps[1..].to_vec(),
        };
        let mut d_to = vec![0.0; s_count];
        d_to[to] = 1.0;
        let forced = if tail.steps.is_empty() {
            d_to
        } else {
            discounted_expected_svf(mdp, &tail, &d_to, horizon)?
        };
        grad.iter_mut().zip(&forced).for_each(|(g, f)| *g -= mdp.gamma * f);
    }
    Ok((-p.ln(), grad))
}

/// Demonstrations replayed into decisions, grouped by sequence.
#[derive(Debug, Clone)]
pub struct ReplayedSet {
    pub sequences: Vec<Vec<Decision>>,
    pub input_dim: usize,
}

pub fn replay_scenes(obs: &Observer, scenes: &[SceneSequence]) -> Result<ReplayedSet> {
    let mut sequences = Vec::new();
    let mut input_dim = None;
    for scene in scenes {
        scene.validate()?;
        let d = obs.input_dim(scene);
        if *input_dim.get_or_insert(d) != d {
            return Err(Error::ShapeMismatch(format!("scene {} has a different feature width", scene.video_id)));
        }
        for seq in &scene.fixations {
            let ds = replay(obs, scene, seq)?;
            if !ds.is_empty() {
                sequences.push(ds);
            }
        }
    }
    match input_dim {
        Some(input_dim) if !sequences.is_empty() => Ok(ReplayedSet { sequences, input_dim }),
        _ => Err(Error::Empty("no demonstrated decisions in the training scenes".into())),
    }
}

fn visit_mask(set: &ReplayedSet, s_count: usize, min_visits: usize) -> Option<Vec<bool>> {
    if min_visits == 0 {
        return None;
    }
    let mut counts = vec![0usize; s_count];
    for d in set.sequences.iter().flatten() {
        counts[d.to] += 1;
    }
    Some(counts.iter().map(|&c| c >= min_visits).collect())
}

/// Trained parameters with the optimizer state they were left in.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: RewardNetParams,
    pub history: TrainingHistory,
    pub optimizer: AdamState,
}

pub fn train(scenes: &[SceneSequence], grid: &GridSpec, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if scenes.is_empty() {
        return Err(Error::Empty("no training scenes".into()));
    }
    let obs = Observer::new(grid.clone(), cfg.features, cfg.fovea)?;
    let mdp = build_mdp(grid, cfg.action_model, cfg.gamma, cfg.frames_per_sequence)?;
    let set = replay_scenes(&obs, scenes)?;
    let mut net = cfg.net.clone();
    net.input_dim = set.input_dim;
    let mut params = init_params(&net, cfg.seed)?;
    let mut optimizer = AdamState::for_params(cfg.adam, &params);
    let history = train_replayed(&set, &mdp, &mut params, &mut optimizer, cfg)?;
    Ok(TrainOutcome {
        params,
        history,
        optimizer,
    })
}

/// Runs the epoch loop on already replayed demonstrations, updating `params` in place.
pub fn train_replayed(
    set: &ReplayedSet,
    mdp: &FixationMdp,
    params: &mut RewardNetParams,
    adam: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<TrainingHistory> {
    if params.config.input_dim != set.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "network input {} vs feature width {}",
            params.config.input_dim, set.input_dim
        )));
    }
    let s_count = mdp.num_states();
    let mask = visit_mask(set, s_count, cfg.min_state_visits);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x5eed));
    let mut order: Vec<usize> = (0..set.sequences.len()).collect();
    let mut history = TrainingHistory::default();
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        let lr = cfg.schedule.lr_at_epoch(epoch)?;
        order.shuffle(&mut rng);
        let mut nll_sum = 0.0;
        let mut norm_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_sequences) {
            // Normalization statistics span every patch row of the minibatch.
            let decisions: Vec<&Decision> = batch.iter().flat_map(|&i| set.sequences[i].iter()).collect();
            let x = Matrix::vstack(decisions.iter().map(|d| &d.features))?;
            let (r, cache) = forward(params, &x, true)?;
            let mut grad_r = vec![0.0; r.len()];
            let scale = 1.0 / batch.len() as f64;
            let mut batch_nll = 0.0;
            for (k, d) in decisions.iter().enumerate() {
                let span = k * s_count..(k + 1) * s_count;
                let (nll, g) = decision_loss(mdp, &r[span.clone()], d.from, d.to, d.horizon)?;
                batch_nll += nll;
                for (i, (dst, gv)) in grad_r[span].iter_mut().zip(g).enumerate() {
                    let keep = mask.as_ref().map_or(true, |m| m[i]);
                    *dst = if keep { gv * scale } else { 0.0 };
                }
            }
            if !batch_nll.is_finite() {
                return Err(Error::Diverged(format!("non-finite loss in epoch {epoch}")));
            }
            let grads = backward(params, &cache, &grad_r)?;
            norm_sum += grads.norm();
            params.update_running_stats(&cache)?;
            adam_step(params, &grads, adam, lr)?;
            if !params.is_finite() {
                return Err(Error::Diverged(format!("non-finite parameters after epoch {epoch} update")));
            }
            nll_sum += batch_nll;
            batches += 1;
        }
        history.epochs.push(EpochRecord {
            epoch,
            nll: nll_sum / set.sequences.len() as f64,
            grad_norm: norm_sum / batches.max(1) as f64,
            lr,
            seconds: if cfg.record_time { started.elapsed().as_secs_f64() } else { 0.0 },
        });
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::irl::oracle::enumerate_trajectories;
    use crate::irl::mdp::build_mdp;

    #[test]
    fn decision_loss_matches_finite_differences() {
        for model in [ActionModel::PatchTarget, ActionModel::SevenMacro] {
            let g = build_grid(3, 3, 1, 1).unwrap();
            let mdp = build_mdp(&g, model, 0.9, 3).unwrap();
            let r: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin()).collect();
            let (from, to, h) = (4, 1, 3);
            let (_, grad) = decision_loss(&mdp, &r, from, to, h).unwrap();
            for s in 0..9 {
                let mut up = r.clone();
                up[s] += 1e-5;
                let mut down = r.clone();
                down[s] -= 1e-5;
                let fd = (decision_loss(&mdp, &up, from, to, h).unwrap().0 - decision_loss(&mdp, &down, from, to, h).unwrap().0) / 2e-5;
                assert!((fd - grad[s]).abs() < 1e-7, "{model:?} state {s}: {fd} vs {}", grad[s]);
            }
        }
    }

    #[test]
    fn patch_target_gradient_is_discounted_softmax_residual() {
        let g = build_grid(2, 3, 1, 1).unwrap();
        let mdp = build_mdp(&g, ActionModel::PatchTarget, 0.98, 3).unwrap();
        let r = [0.2, -0.4, 1.1, 0.0, 0.5, -1.0];
        let (nll, grad) = decision_loss(&mdp, &r, 0, 2, 4).unwrap();
        let z: f64 = r.iter().map(|x| (0.98 * x).exp()).sum();
        let pi: Vec<f64> = r.iter().map(|x| (0.98 * x).exp() / z).collect();
        assert!((nll + pi[2].ln()).abs() < 1e-12);
        for s in 0..6 {
            let expect = 0.98 * (pi[s] - if s == 2 { 1.0 } else { 0.0 });
            assert!((grad[s] - expect).abs() < 1e-12);
        }
        // the one-decision loss is the enumerated conditional probability
        let d = enumerate_trajectories(&mdp, &r, 0, 1).unwrap();
        assert!((nll + d.prob_of(&[0, 2]).ln()).abs() < 1e-12);
    }
}
