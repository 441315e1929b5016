//! Exhaustive enumeration of the maximum-entropy trajectory distribution.

use crate::error::{Error, Result};
use crate::irl::mdp::FixationMdp;
use crate::irl::soft_vi::logsumexp;

pub const MAX_ENUMERATED: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDistribution {
    /// Visited states `s_0..=s_length` per action sequence, in lexicographic action order.
    pub trajectories: Vec<Vec<usize>>,
    pub probs: Vec<f64>,
    /// Expected visit counts over `s_0..=s_length`.
    pub visitation: Vec<f64>,
}

impl TrajectoryDistribution {
    /// Probability of a state sequence, summed over the action sequences producing it.
    pub fn prob_of(&self, states: &[usize]) -> f64 {
        self.trajectories
            .iter()
            .zip(&self.probs)
            .filter(|(t, _)| t.as_slice() == states)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Enumerates every action sequence of `length` decisions from `start`, with
/// `p ~ exp(sum_t gamma^t r(s_t))`.
pub fn enumerate_trajectories(mdp: &FixationMdp, r: &[f64], start: usize, length: usize) -> Result<TrajectoryDistribution> {
    let s_count = mdp.num_states();
    if r.len() != s_count || start >= s_count {
        return Err(Error::ShapeMismatch(format!("{} rewards / start {start} for {s_count} states", r.len())));
    }
    let a_count = mdp.num_actions();
    let total = (a_count as u128).checked_pow(length as u32).unwrap_or(u128::MAX);
    if total > MAX_ENUMERATED {
        return Err(Error::StateSpaceTooLarge(total));
    }
    let mut trajectories = Vec::with_capacity(total as usize);
    let mut returns = Vec::with_capacity(total as usize);
    let mut actions = vec![0usize; length];
    loop {
        let mut s = start;
        let mut states = Vec::with_capacity(length + 1);
        states.push(s);
        let mut ret = r[s];
        let mut w = 1.0;
        for &a in &actions {
            s = mdp.next(s, a);
            w *= mdp.gamma;
            ret += w * r[s];
            states.push(s);
        }
        trajectories.push(states);
        returns.push(ret);
        // odometer increment, last action fastest
        let mut i = length;
        loop {
            if i == 0 {
                let z = logsumexp(returns.iter().copied());
                let probs: Vec<f64> = returns.iter().map(|x| (x - z).exp()).collect();
                let mut visitation = vec![0.0; s_count];
                for (t, p) in trajectories.iter().zip(&probs) {
                    for &s in t {
                        visitation[s] += p;
                    }
                }
                return Ok(TrajectoryDistribution {
                    trajectories,
                    probs,
                    visitation,
                });
            }
            i -= 1;
            actions[i] += 1;
            if actions[i] < a_count {
                break;
            }
            actions[i] = 0;
        }
    }
}
