use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::irl::mdp::FixationMdp;
use crate::irl::soft_vi::{soft_value_iteration, Policy};
use crate::irl::svf::Demonstrations;

/// Probability of moving from `s` to `s_next` at decision `t`, summed over actions.
pub fn transition_prob(mdp: &FixationMdp, policy: &Policy, t: usize, s: usize, s_next: usize) -> f64 {
    let pi = policy.at(t).row(s);
    if mdp.is_patch_target() {
        return pi[s_next];
    }
    mdp.successors(s)
        .iter()
        .zip(pi)
        .filter(|(&n, _)| n as usize == s_next)
        .map(|(_, p)| p)
        .sum()
}

/// Log-probability of one state sequence under a policy solved for its length.
pub fn trajectory_log_prob(mdp: &FixationMdp, policy: &Policy, states: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (t, w) in states.windows(2).enumerate() {
        let p = transition_prob(mdp, policy, t, w[0], w[1]);
        if !(p > 0.0) {
            return Err(Error::ImpossibleDemo { step: t });
        }
        total += p.ln();
    }
    Ok(total)
}

/// Mean over demonstrations of `sum_t log P(s_{t+1} | s_t)`; each trajectory is
/// scored under soft value iteration with one decision per observed transition,
/// truncated to `horizon` states.
pub fn log_likelihood(demos: &Demonstrations, r: &[f64], mdp: &FixationMdp, horizon: usize) -> Result<f64> {
    if demos.trajectories.is_empty() {
        return Err(Error::Empty("demonstration set".into()));
    }
    let mut policies: HashMap<usize, Policy> = HashMap::new();
    let mut total = 0.0;
    for traj in &demos.trajectories {
        let states = &traj[..traj.len().min(horizon.max(1))];
        let decisions = states.len() - 1;
        if decisions == 0 {
            continue;
        }
        if !policies.contains_key(&decisions) {
            let sol = soft_value_iteration(mdp, r, decisions)?;
            policies.insert(decisions, sol.policy);
        }
        total += trajectory_log_prob(mdp, &policies[&decisions], states)?;
    }
    Ok(total / demos.trajectories.len() as f64)
}
