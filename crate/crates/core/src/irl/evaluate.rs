//! Held-out scores for a reward model on replayed demonstrations.

use crate::error::{Error, Result};
use crate::features::SceneSequence;
use crate::irl::mdp::FixationMdp;
use crate::irl::replay::replay;
use crate::irl::soft_vi::soft_value_iteration;
use crate::irl::train::ReplayedSet;
use crate::observe::Observer;
use crate::reward_net::RewardModel;

/// Distribution over the next state after one step of the solved policy.
pub fn next_state_distribution(mdp: &FixationMdp, r: &[f64], from: usize, horizon: usize) -> Result<Vec<f64>> {
    let sol = soft_value_iteration(mdp, r, horizon)?;
    let pi = sol.policy.at(0);
    let mut p = vec![0.0; mdp.num_states()];
    for (a, &n) in mdp.successors(from).iter().enumerate() {
        p[n as usize] += pi.get(from, a);
    }
    Ok(p)
}

/// Mean negative log-likelihood per demonstrated sequence.
pub fn mean_sequence_nll<M: RewardModel + ?Sized>(model: &M, mdp: &FixationMdp, set: &ReplayedSet) -> Result<f64> {
    let mut total = 0.0;
    for d in set.sequences.iter().flatten() {
        let r = model.rewards(&d.features)?;
        let p = next_state_distribution(mdp, &r, d.from, d.horizon)?[d.to];
        if !(p > 0.0) {
            return Err(Error::ImpossibleDemo { step: 0 });
        }
        total -= p.ln();
    }
    Ok(total / set.sequences.len() as f64)
}

/// `KL(truth || learned)` over next-state distributions, averaged over the
/// demonstrated pre-decision states.
pub fn mean_policy_kld<A, B>(truth: &A, learned: &B, mdp: &FixationMdp, set: &ReplayedSet) -> Result<f64>
where
    A: RewardModel + ?Sized,
    B: RewardModel + ?Sized,
{
    let mut total = 0.0;
    let mut n = 0usize;
    for d in set.sequences.iter().flatten() {
        let p = next_state_distribution(mdp, &truth.rewards(&d.features)?, d.from, d.horizon)?;
        let q = next_state_distribution(mdp, &learned.rewards(&d.features)?, d.from, d.horizon)?;
        total += p
            .iter()
            .zip(&q)
            .filter(|(pi, _)| **pi > 0.0)
            .map(|(pi, qi)| pi * (pi / qi).ln())
            .sum::<f64>();
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("no decisions to score".into()));
    }
    Ok(total / n as f64)
}

/// Frames on which the learned reward peaks at a state where the true reward
/// is maximal. Rewards are read at the state before the first decision of
/// each frame in the scene's first demonstration. Returns (matches, frames).
pub fn frame_argmax_agreement<A, B>(truth: &A, learned: &B, obs: &Observer, scenes: &[SceneSequence]) -> Result<(usize, usize)>
where
    A: RewardModel + ?Sized,
    B: RewardModel + ?Sized,
{
    let mut hits = 0;
    let mut frames = 0;
    for scene in scenes {
        let Some(seq) = scene.fixations.first() else { continue };
        let mut seen = vec![false; scene.len()];
        for d in replay(obs, scene, seq)? {
            if std::mem::replace(&mut seen[d.frame], true) {
                continue;
            }
            let t = truth.rewards(&d.features)?;
            let l = learned.rewards(&d.features)?;
            let t_max = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let tol = 1e-9 * t_max.abs().max(1.0);
            let best = (0..l.len()).fold(0, |b, i| if l[i] > l[b] { i } else { b });
            hits += usize::from(t[best] >= t_max - tol);
            frames += 1;
        }
    }
    Ok((hits, frames))
}
