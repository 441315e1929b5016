//! Scanpath generation, policy-derived saliency and ground-truth attention maps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SceneSequence;
use crate::fovea::blur_plane;
use crate::grid::{FixationPoint, PatchIndex};
use crate::irl::mdp::FixationMdp;
use crate::irl::soft_vi::soft_value_iteration;
use crate::irl::svf::{expected_svf, sample_index};
use crate::observe::Observer;
use crate::reward_net::RewardModel;
use crate::saliency::SaliencyMap;

/// Inhibition of return: previously fixated patches of the current frame are
/// down-weighted by `decay` before renormalizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IoRConfig {
    pub decay: f64,
    /// Only the most recent `memory` fixations of the frame are inhibited; `None` means all.
    pub memory: Option<usize>,
}

impl Default for IoRConfig {
    fn default() -> Self {
        Self { decay: 0.1, memory: None }
    }
}

impl IoRConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(Error::InvalidArgument(format!("IoR decay {} outside [0, 1]", self.decay)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RolloutMode {
    #[default]
    Sample,
    Argmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanpathStep {
    pub frame_index: usize,
    /// 0 for the initial fixation, then 1.. for decisions within the frame.
    pub step: usize,
    pub patch: PatchIndex,
    /// Probability of the chosen patch after inhibition of return.
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scanpath {
    pub steps: Vec<ScanpathStep>,
    pub seed: u64,
    pub mode: RolloutMode,
}

impl Scanpath {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame_index,step,row,col,prob\n");
        for s in &self.steps {
            out.push_str(&format!("{},{},{},{},{}\n", s.frame_index, s.step, s.patch.row, s.patch.col, s.prob));
        }
        out
    }
}

/// Distribution over destination states for the first decision of a solve.
fn destination_probs(mdp: &FixationMdp, pi_row: &[f64], s: usize) -> Vec<f64> {
    if mdp.is_patch_target() {
        return pi_row.to_vec();
    }
    let mut out = vec![0.0; mdp.num_states()];
    for (&n, p) in mdp.successors(s).iter().zip(pi_row) {
        out[n as usize] += p;
    }
    out
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Applies inhibition of return to a destination distribution.
pub fn inhibit(probs: &[f64], visited: &[usize], ior: &IoRConfig) -> Vec<f64> {
    let mut out = probs.to_vec();
    let recent = match ior.memory {
        Some(m) => &visited[visited.len().saturating_sub(m)..],
        None => visited,
    };
    for &s in recent {
        out[s] = probs[s] * ior.decay;
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 {
        out.iter_mut().for_each(|p| *p /= total);
        out
    } else {
        probs.to_vec()
    }
}

/// Generates a scanpath starting from the center patch of the first frame,
/// with `k_per_frame[t]` decisions in frame `t`.
#[allow(clippy::too_many_arguments)]
pub fn rollout<M: RewardModel + ?Sized>(
    model: &M,
    scene: &SceneSequence,
    obs: &Observer,
    mdp: &FixationMdp,
    k_per_frame: &[usize],
    ior: &IoRConfig,
    seed: u64,
    mode: RolloutMode,
) -> Result<Scanpath> {
    ior.validate()?;
    if k_per_frame.len() != scene.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} fixation counts for {} frames",
            k_per_frame.len(),
            scene.len()
        )));
    }
    if k_per_frame.iter().all(|&k| k == 0) {
        return Err(Error::InvalidArgument("no fixations requested in any frame".into()));
    }
    if mdp.num_states() != obs.grid.num_states() {
        return Err(Error::ShapeMismatch("MDP and grid state counts differ".into()));
    }
    let cols = obs.columns(scene)?;
    if model.input_dim() != obs.input_dim(scene) {
        return Err(Error::ShapeMismatch(format!(
            "model expects {} features, scene provides {}",
            model.input_dim(),
            obs.input_dim(scene)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = obs.grid.center_patch();
    let mut state = obs.start(scene, 0, &obs.point_at(center, 0)?)?;
    let mut current = obs.grid.state(center);
    let mut steps = vec![ScanpathStep {
        frame_index: 0,
        step: 0,
        patch: center,
        prob: 1.0,
    }];
    let mut last_frame = 0;
    let mut visited: Vec<usize> = vec![current];
    for (t, &k) in k_per_frame.iter().enumerate() {
        for i in 0..k {
            let new_frame = t != last_frame;
            if new_frame {
                visited.clear();
            }
            let phi = obs.phi(&state, &cols[t])?;
            let r = model.rewards(&phi)?;
            let sol = soft_value_iteration(mdp, &r, k - i)?;
            let raw = destination_probs(mdp, sol.policy.steps[0].row(current), current);
            let probs = inhibit(&raw, &visited, ior);
            let next = match mode {
                RolloutMode::Sample => sample_index(&probs, &mut rng),
                RolloutMode::Argmax => argmax(&probs),
            };
            let patch = obs.grid.patch(next);
            state = obs.fixate(&state, scene, t, patch, new_frame)?;
            last_frame = t;
            current = next;
            visited.push(next);
            steps.push(ScanpathStep {
                frame_index: t,
                step: i + 1,
                patch,
                prob: probs[next],
            });
        }
    }
    Ok(Scanpath { steps, seed, mode })
}

/// Per-frame expected visitation over `horizon` decisions, normalized over
/// patches. After each frame the state advances by the most probable fixation.
pub fn policy_patch_maps<M: RewardModel + ?Sized>(
    model: &M,
    scene: &SceneSequence,
    obs: &Observer,
    mdp: &FixationMdp,
    horizon: usize,
) -> Result<Vec<Vec<f64>>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("saliency horizon must be positive".into()));
    }
    let cols = obs.columns(scene)?;
    if model.input_dim() != obs.input_dim(scene) {
        return Err(Error::ShapeMismatch(format!(
            "model expects {} features, scene provides {}",
            model.input_dim(),
            obs.input_dim(scene)
        )));
    }
    let s_count = obs.grid.num_states();
    let center = obs.grid.center_patch();
    let mut state = obs.start(scene, 0, &obs.point_at(center, 0)?)?;
    let mut current = obs.grid.state(center);
    let mut maps = Vec::with_capacity(scene.len());
    for (t, c) in cols.iter().enumerate() {
        let phi = obs.phi(&state, c)?;
        let r = model.rewards(&phi)?;
        let sol = soft_value_iteration(mdp, &r, horizon)?;
        let mut start = vec![0.0; s_count];
        start[current] = 1.0;
        let mut mu = expected_svf(mdp, &sol.policy, &start, horizon + 1)?;
        mu[current] -= 1.0;
        mu.iter_mut().for_each(|m| *m = m.max(0.0) / horizon as f64);
        maps.push(mu);
        let next = argmax(&destination_probs(mdp, sol.policy.steps[0].row(current), current));
        state = obs.fixate(&state, scene, t, obs.grid.patch(next), t > 0)?;
        current = next;
    }
    Ok(maps)
}

/// Paints a per-patch distribution onto pixels, smooths it and renormalizes.
pub fn paint_patch_map(obs: &Observer, per_patch: &[f64], sigma_smooth: f64) -> Result<SaliencyMap> {
    let g = &obs.grid;
    let mut px = g.paint(per_patch);
    // spread each patch's mass evenly over its pixels
    for y in 0..g.frame_h {
        for x in 0..g.frame_w {
            px[y * g.frame_w + x] /= g.patch_area(PatchIndex::new(g.pixel_row(y), g.pixel_col(x))) as f64;
        }
    }
    blur_plane(&mut px, g.frame_h, g.frame_w, sigma_smooth);
    SaliencyMap::from_weights(g.frame_h, g.frame_w, px)
}

pub fn policy_saliency<M: RewardModel + ?Sized>(
    model: &M,
    scene: &SceneSequence,
    obs: &Observer,
    mdp: &FixationMdp,
    horizon: usize,
    sigma_smooth: f64,
) -> Result<Vec<SaliencyMap>> {
    policy_patch_maps(model, scene, obs, mdp, horizon)?
        .iter()
        .map(|m| paint_patch_map(obs, m, sigma_smooth))
        .collect()
}

pub const DEFAULT_SIGMA_SMOOTH: f64 = 12.0;

/// Ground-truth attention map: duration-weighted deltas (uniform if any
/// duration is zero), Gaussian smoothed and normalized.
pub fn fixations_to_map(fixations: &[FixationPoint], frame: (usize, usize), sigma_smooth: f64) -> Result<SaliencyMap> {
    if fixations.is_empty() {
        return Err(Error::Empty("no fixations for attention map".into()));
    }
    let (h, w) = frame;
    let weighted = fixations.iter().all(|p| p.duration > 0.0);
    let mut px = vec![0.0; h * w];
    for p in fixations {
        if !(p.x >= 0.0 && p.y >= 0.0 && p.x < w as f64 && p.y < h as f64) {
            return Err(Error::OutOfBounds(format!("fixation ({}, {}) outside {h}x{w}", p.x, p.y)));
        }
        px[p.y.floor() as usize * w + p.x.floor() as usize] += if weighted { p.duration } else { 1.0 };
    }
    blur_plane(&mut px, h, w, sigma_smooth);
    SaliencyMap::from_weights(h, w, px)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, d: f64) -> FixationPoint {
        FixationPoint {
            x,
            y,
            duration: d,
            frame_index: 0,
        }
    }

    #[test]
    fn single_fixation_delta() {
        let m = fixations_to_map(&[pt(3.0, 2.0, 100.0)], (5, 7), 0.0).unwrap();
        assert_eq!(m.at(2, 3), 1.0);
        assert_eq!(m.data.iter().filter(|&&v| v > 0.0).count(), 1);
    }

    fn mass_near(m: &SaliencyMap, cx: usize, cy: usize, r: usize) -> f64 {
        let mut acc = 0.0;
        for y in cy.saturating_sub(r)..(cy + r + 1).min(m.height) {
            for x in cx.saturating_sub(r)..(cx + r + 1).min(m.width) {
                acc += m.at(y, x);
            }
        }
        acc
    }

    #[test]
    fn equal_and_weighted_modes() {
        let frame = (100, 200);
        let m = fixations_to_map(&[pt(50.0, 50.0, 200.0), pt(150.0, 50.0, 200.0)], frame, 4.0).unwrap();
        assert!((mass_near(&m, 50, 50, 40) - 0.5).abs() < 1e-6);
        assert!((mass_near(&m, 150, 50, 40) - 0.5).abs() < 1e-6);
        let m = fixations_to_map(&[pt(50.0, 50.0, 100.0), pt(150.0, 50.0, 300.0)], frame, 4.0).unwrap();
        assert!((mass_near(&m, 50, 50, 40) - 0.25).abs() < 1e-6);
        assert!((mass_near(&m, 150, 50, 40) - 0.75).abs() < 1e-6);
    }

    #[test]
    fn permutation_invariant_and_normalized() {
        let a = [pt(10.0, 5.0, 120.0), pt(3.0, 9.0, 80.0), pt(17.0, 1.0, 300.0)];
        let b = [a[2], a[0], a[1]];
        let ma = fixations_to_map(&a, (12, 20), 2.0).unwrap();
        let mb = fixations_to_map(&b, (12, 20), 2.0).unwrap();
        assert_eq!(ma, mb);
        assert!((ma.data.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(fixations_to_map(&[], (12, 20), 2.0).is_err());
    }

    #[test]
    fn inhibition() {
        let p = [0.5, 0.3, 0.2];
        assert_eq!(inhibit(&p, &[0], &IoRConfig { decay: 1.0, memory: None }), p.to_vec());
        let q = inhibit(&p, &[0], &IoRConfig { decay: 0.0, memory: None });
        assert_eq!(q, vec![0.0, 0.6, 0.4]);
        let q = inhibit(&p, &[0, 1], &IoRConfig { decay: 0.0, memory: Some(1) });
        assert!((q[1]).abs() < 1e-15 && (q[0] - 0.5 / 0.7).abs() < 1e-12);
        // everything inhibited: fall back to the raw distribution
        assert_eq!(inhibit(&[1.0, 0.0], &[0], &IoRConfig { decay: 0.0, memory: None }), vec![1.0, 0.0]);
    }
}
