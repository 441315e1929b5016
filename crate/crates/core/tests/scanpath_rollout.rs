use medirl_core::features::{FeatureConfig, SceneSequence};
use medirl_core::fovea::FoveaConfig;
use medirl_core::grid::{build_grid, GridSpec};
use medirl_core::irl::{build_mdp, next_state_distribution, ActionModel, FixationMdp};
use medirl_core::observe::Observer;
use medirl_core::reward_net::{init_params, NetConfig, RewardModel};
use medirl_core::scanpath::{policy_patch_maps, policy_saliency, rollout, IoRConfig, RolloutMode};
use medirl_core::synth::{synth_scene, SynthParams};
use medirl_core::{Matrix, Result};

/// Reward fixed per patch, ignoring the features.
struct PatchReward {
    dim: usize,
    values: Vec<f64>,
}

impl RewardModel for PatchReward {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn rewards(&self, _features: &Matrix) -> Result<Vec<f64>> {
        Ok(self.values.clone())
    }
}

struct Fixture {
    grid: GridSpec,
    obs: Observer,
    scene: SceneSequence,
    mdp: FixationMdp,
}

fn fixture(frames: usize) -> Fixture {
    let grid = build_grid(24, 32, 6, 8).unwrap();
    let obs = Observer::new(grid.clone(), FeatureConfig::default(), FoveaConfig::default()).unwrap();
    let scene = synth_scene(
        11,
        &grid,
        &SynthParams {
            frames,
            ..Default::default()
        },
    )
    .unwrap();
    let mdp = build_mdp(&grid, ActionModel::PatchTarget, 0.98, 6).unwrap();
    Fixture { grid, obs, scene, mdp }
}

fn ramp(f: &Fixture) -> PatchReward {
    let n = f.grid.num_states();
    PatchReward {
        dim: f.obs.input_dim(&f.scene),
        values: (0..n).map(|i| ((i * 7) % n) as f64 / n as f64 * 3.0).collect(),
    }
}

#[test]
fn no_decay_follows_the_raw_policy() {
    let f = fixture(3);
    let model = ramp(&f);
    let k = [3, 2, 4];
    let ior = IoRConfig { decay: 1.0, memory: None };
    let path = rollout(&model, &f.scene, &f.obs, &f.mdp, &k, &ior, 5, RolloutMode::Sample).unwrap();
    assert_eq!(path.steps.len(), 1 + 9);
    for w in path.steps.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let remaining = k[cur.frame_index] - (cur.step - 1);
        let raw = next_state_distribution(&f.mdp, &model.values, f.grid.state(prev.patch), remaining).unwrap();
        assert!((cur.prob - raw[f.grid.state(cur.patch)]).abs() < 1e-12);
    }
}

#[test]
fn full_inhibition_never_revisits_within_a_frame() {
    let f = fixture(2);
    // a single dominant patch would otherwise be chosen every time
    let mut model = ramp(&f);
    model.values[5] = 50.0;
    let ior = IoRConfig { decay: 0.0, memory: None };
    let path = rollout(&model, &f.scene, &f.obs, &f.mdp, &[6, 6], &ior, 0, RolloutMode::Argmax).unwrap();
    for t in 0..2 {
        let mut seen: Vec<_> = path.steps.iter().filter(|s| s.frame_index == t && s.step > 0).map(|s| s.patch).collect();
        let n = seen.len();
        seen.sort_by_key(|p| (p.row, p.col));
        seen.dedup();
        assert_eq!(seen.len(), n, "frame {t}");
    }
    let no_ior = IoRConfig { decay: 1.0, memory: None };
    let greedy = rollout(&model, &f.scene, &f.obs, &f.mdp, &[6, 6], &no_ior, 0, RolloutMode::Argmax).unwrap();
    assert!(greedy.steps[1..].iter().all(|s| f.grid.state(s.patch) == 5));
}

#[test]
fn seeded_and_argmax_rollouts_repeat() {
    let f = fixture(3);
    let params = init_params(
        &NetConfig {
            input_dim: f.obs.input_dim(&f.scene),
            ..Default::default()
        },
        2,
    )
    .unwrap();
    let ior = IoRConfig::default();
    let run = |seed, mode| rollout(&params, &f.scene, &f.obs, &f.mdp, &[2, 3, 2], &ior, seed, mode).unwrap();
    assert_eq!(run(9, RolloutMode::Sample), run(9, RolloutMode::Sample));
    let (a, b) = (run(1, RolloutMode::Argmax), run(2, RolloutMode::Argmax));
    assert_eq!(a.steps, b.steps);
}

#[test]
fn saliency_contracts() {
    let f = fixture(2);
    let n = f.grid.num_states();
    let dim = f.obs.input_dim(&f.scene);
    let flat = PatchReward { dim, values: vec![1.5; n] };
    for m in policy_patch_maps(&flat, &f.scene, &f.obs, &f.mdp, 2).unwrap() {
        assert!(m.iter().all(|&v| (v - 1.0 / n as f64).abs() < 1e-12));
    }

    let mut peak = PatchReward { dim, values: vec![0.0; n] };
    peak.values[9] = 100.0;
    for m in policy_patch_maps(&peak, &f.scene, &f.obs, &f.mdp, 1).unwrap() {
        assert!(m[9] > 0.95);
    }

    let model = ramp(&f);
    let shifted = PatchReward {
        dim,
        values: model.values.iter().map(|v| v - 4.0).collect(),
    };
    let a = policy_saliency(&model, &f.scene, &f.obs, &f.mdp, 3, 2.0).unwrap();
    let b = policy_saliency(&shifted, &f.scene, &f.obs, &f.mdp, 3, 2.0).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((x.data.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(x.data.iter().zip(&y.data).all(|(p, q)| (p - q).abs() < 1e-12));
    }
}
