//! State-visitation frequencies and the maximum-entropy gradient.

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{point_to_patch, FixationSequence, GridSpec};
use crate::irl::mdp::FixationMdp;
use crate::irl::soft_vi::Policy;

/// Demonstrated state sequences on the patch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstrations {
    pub trajectories: Vec<Vec<usize>>,
}

impl Demonstrations {
    pub fn new(trajectories: Vec<Vec<usize>>, num_states: usize) -> Result<Self> {
        if trajectories.is_empty() || trajectories.iter().any(|t| t.is_empty()) {
            return Err(Error::Empty("demonstration set".into()));
        }
        if let Some(s) = trajectories.iter().flatten().find(|&&s| s >= num_states) {
            return Err(Error::OutOfBounds(format!("demonstrated state {s} with {num_states} states")));
        }
        Ok(Self { trajectories })
    }

    /// Maps fixation points to patch states, one trajectory per sequence.
    pub fn from_sequences(grid: &GridSpec, seqs: &[FixationSequence]) -> Result<Self> {
        let trajectories = seqs
            .iter()
            .map(|seq| {
                seq.points
                    .iter()
                    .map(|p| point_to_patch(grid, p).map(|q| grid.state(q)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(trajectories, grid.num_states())
    }
}

fn check_start(start: &[f64], s_count: usize) -> Result<()> {
    if start.len() != s_count {
        return Err(Error::ShapeMismatch(format!("start distribution over {} states, MDP has {s_count}", start.len())));
    }
    let total: f64 = start.iter().sum();
    if start.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("start distribution sums to {total}")));
    }
    Ok(())
}

/// `D_{t+1}(s') = sum_{s,a} D_t(s) pi_t(a|s) [next(s,a) = s']`.
pub fn propagate(mdp: &FixationMdp, pi: &crate::matrix::Matrix, d: &[f64]) -> Vec<f64> {
    let s_count = mdp.num_states();
    let mut out = vec![0.0; s_count];
    if mdp.is_patch_target() {
        for (s, &ds) in d.iter().enumerate() {
            if ds == 0.0 {
                continue;
            }
            out.iter_mut().zip(pi.row(s)).for_each(|(o, p)| *o += ds * p);
        }
    } else {
        for (s, &ds) in d.iter().enumerate() {
            if ds == 0.0 {
                continue;
            }
            for (&n, p) in mdp.successors(s).iter().zip(pi.row(s)) {
                out[n as usize] += ds * p;
            }
        }
    }
    out
}

fn svf_weighted(mdp: &FixationMdp, policy: &Policy, start: &[f64], horizon: usize, discount: f64) -> Result<Vec<f64>> {
    check_start(start, mdp.num_states())?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon counts at least the start state".into()));
    }
    if policy.steps.is_empty() && horizon > 1 {
        return Err(Error::InvalidArgument("empty policy".into()));
    }
    let mut d = start.to_vec();
    let mut mu = d.clone();
    let mut w = 1.0;
    for t in 0..horizon - 1 {
        d = propagate(mdp, policy.at(t), &d);
        w *= discount;
        mu.iter_mut().zip(&d).for_each(|(m, x)| *m += w * x);
    }
    Ok(mu)
}

/// Expected visits over `horizon` states (the start plus `horizon - 1` decisions).
pub fn expected_svf(mdp: &FixationMdp, policy: &Policy, start: &[f64], horizon: usize) -> Result<Vec<f64>> {
    svf_weighted(mdp, policy, start, horizon, 1.0)
}

/// As [`expected_svf`], with the `t`-th state weighted by `gamma^t`.
pub fn discounted_expected_svf(mdp: &FixationMdp, policy: &Policy, start: &[f64], horizon: usize) -> Result<Vec<f64>> {
    svf_weighted(mdp, policy, start, horizon, mdp.gamma)
}

fn empirical_weighted(demos: &Demonstrations, num_states: usize, horizon: usize, discount: f64) -> Result<Vec<f64>> {
    if demos.trajectories.is_empty() {
        return Err(Error::Empty("demonstration set".into()));
    }
    let mut mu = vec![0.0; num_states];
    for traj in &demos.trajectories {
        let mut w = 1.0;
        for &s in traj.iter().take(horizon) {
            if s >= num_states {
                return Err(Error::OutOfBounds(format!("demonstrated state {s} with {num_states} states")));
            }
            mu[s] += w;
            w *= discount;
        }
    }
    let n = demos.trajectories.len() as f64;
    mu.iter_mut().for_each(|m| *m /= n);
    Ok(mu)
}

/// Mean per-state visit counts over the first `horizon` states of each trajectory.
pub fn empirical_svf(demos: &Demonstrations, num_states: usize, horizon: usize) -> Result<Vec<f64>> {
    empirical_weighted(demos, num_states, horizon, 1.0)
}

pub fn discounted_empirical_svf(demos: &Demonstrations, num_states: usize, horizon: usize, gamma: f64) -> Result<Vec<f64>> {
    empirical_weighted(demos, num_states, horizon, gamma)
}

/// Gradient of the negative log-likelihood with respect to per-state reward: `mu - mu_D`.
pub fn maxent_gradient(mu_demo: &[f64], mu: &[f64]) -> Result<Vec<f64>> {
    if mu_demo.len() != mu.len() {
        return Err(Error::ShapeMismatch(format!("SVF lengths {} and {}", mu_demo.len(), mu.len())));
    }
    Ok(mu.iter().zip(mu_demo).map(|(a, b)| a - b).collect())
}

/// Samples an index from a discrete distribution by inverse CDF.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Draws a state sequence of `decisions + 1` states from `start` under `policy`.
pub fn sample_trajectory<R: Rng + ?Sized>(
    mdp: &FixationMdp,
    policy: &Policy,
    start: usize,
    decisions: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut traj = Vec::with_capacity(decisions + 1);
    traj.push(start);
    let mut s = start;
    for t in 0..decisions {
        let a = sample_index(policy.at(t).row(s), rng);
        s = mdp.next(s, a);
        traj.push(s);
    }
    traj
}
