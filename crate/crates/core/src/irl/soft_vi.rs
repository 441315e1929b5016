//! Soft (logsumexp) value iteration.
//!
//! The finite-horizon solver discounts by absolute time: the terminal value is
//! `V_h(s) = gamma^h r(s)` and `Q_t(s, a) = gamma^t r(s) + V_{t+1}(next(s, a))`.
//! The resulting policy reproduces the trajectory distribution
//! `p(xi) ~ exp(sum_t gamma^t r(s_t))` exactly for any discount.

use crate::error::{Error, Result};
use crate::irl::mdp::FixationMdp;
use crate::matrix::Matrix;

/// Per-step stochastic policies; `steps[t]` is `S x A`.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub steps: Vec<Matrix>,
}

impl Policy {
    pub fn horizon(&self) -> usize {
        self.steps.len()
    }

    /// The policy used at decision `t`; a stationary policy repeats its only step.
    pub fn at(&self, t: usize) -> &Matrix {
        &self.steps[t.min(self.steps.len() - 1)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SoftSolution {
    /// `values[t]` for `t = 0..=horizon`.
    pub values: Vec<Vec<f64>>,
    /// `q[t]` for decisions `t = 0..horizon`, each `S x A`.
    pub q: Vec<Matrix>,
    pub policy: Policy,
}

#[inline]
pub(crate) fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn check_reward(mdp: &FixationMdp, r: &[f64]) -> Result<()> {
    if r.len() != mdp.num_states() {
        return Err(Error::ShapeMismatch(format!("{} rewards for {} states", r.len(), mdp.num_states())));
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reward vector".into()));
    }
    Ok(())
}

/// One backup: `Q(s, a) = offset(s) + v_next(next(s, a))`, then logsumexp and softmax.
fn backup(mdp: &FixationMdp, offset: &[f64], v_next: &[f64]) -> (Vec<f64>, Matrix, Matrix) {
    let (s_count, a_count) = (mdp.num_states(), mdp.num_actions());
    let mut q = Matrix::zeros(s_count, a_count);
    let mut pi = Matrix::zeros(s_count, a_count);
    let mut v = vec![0.0; s_count];
    if mdp.is_patch_target() {
        // every row shares the continuation values; only the offset differs
        let lse = logsumexp(v_next.iter().copied());
        let probs: Vec<f64> = v_next.iter().map(|x| (x - lse).exp()).collect();
        for s in 0..s_count {
            q.row_mut(s).iter_mut().zip(v_next).for_each(|(qa, vn)| *qa = offset[s] + vn);
            pi.row_mut(s).copy_from_slice(&probs);
            v[s] = offset[s] + lse;
        }
    } else {
        for s in 0..s_count {
            let qr = q.row_mut(s);
            for (qa, &n) in qr.iter_mut().zip(mdp.successors(s)) {
                *qa = offset[s] + v_next[n as usize];
            }
            let lse = logsumexp(qr.iter().copied());
            v[s] = lse;
            let qr = q.row(s).to_vec();
            pi.row_mut(s).iter_mut().zip(&qr).for_each(|(p, qa)| *p = (qa - lse).exp());
        }
    }
    (v, q, pi)
}

/// Finite-horizon soft value iteration over `horizon` decisions.
pub fn soft_value_iteration(mdp: &FixationMdp, r: &[f64], horizon: usize) -> Result<SoftSolution> {
    check_reward(mdp, r)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must cover at least one decision".into()));
    }
    let g = mdp.gamma;
    let mut values = vec![Vec::new(); horizon + 1];
    let mut q = vec![Matrix::zeros(0, 0); horizon];
    let mut steps = vec![Matrix::zeros(0, 0); horizon];
    let gh = g.powi(horizon as i32);
    values[horizon] = r.iter().map(|x| gh * x).collect();
    for t in (0..horizon).rev() {
        let gt = g.powi(t as i32);
        let offset: Vec<f64> = r.iter().map(|x| gt * x).collect();
        let (v, qt, pi) = backup(mdp, &offset, &values[t + 1]);
        values[t] = v;
        q[t] = qt;
        steps[t] = pi;
    }
    if values.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("soft values".into()));
    }
    Ok(SoftSolution {
        values,
        q,
        policy: Policy { steps },
    })
}

/// Stationary soft value iteration `V(s) = logsumexp_a [r(s) + gamma V(next(s, a))]`,
/// iterated until the sup-norm change drops below `tol`.
pub fn soft_value_iteration_infinite(mdp: &FixationMdp, r: &[f64], tol: f64, max_sweeps: usize) -> Result<SoftSolution> {
    check_reward(mdp, r)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol}")));
    }
    let mut v = vec![0.0; mdp.num_states()];
    let mut delta = f64::INFINITY;
    for _ in 0..max_sweeps {
        let scaled: Vec<f64> = v.iter().map(|x| mdp.gamma * x).collect();
        let (nv, q, pi) = backup(mdp, r, &scaled);
        delta = nv.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !delta.is_finite() {
            break;
        }
        v = nv;
        if delta < tol {
            return Ok(SoftSolution {
                values: vec![v],
                q: vec![q],
                policy: Policy { steps: vec![pi] },
            });
        }
    }
    Err(Error::NoConvergence { sweeps: max_sweeps, delta })
}
