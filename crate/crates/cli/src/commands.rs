use std::fs;
use std::path::{Path, PathBuf};

use medirl_core::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use medirl_core::features::{FeatureConfig, FeatureToggles, SceneSequence};
use medirl_core::ften::{write_atomic, write_tensor};
use medirl_core::grid::GridSpec;
use medirl_core::fovea::FoveaConfig;
use medirl_core::irl::{build_mdp, train, TrainConfig, TrainingHistory};
use medirl_core::manifest::{list_scenes, load_scene, save_scene};
use medirl_core::metrics::{binarize_gt, cc, f_beta, kld, pool_negatives, sauc, FrameMetrics, MetricReport, Pixel};
use medirl_core::observe::Observer;
use medirl_core::prep::{frame_attention_maps, gate_scene, GateCounts};
use medirl_core::scanpath::{policy_saliency, rollout};
use medirl_core::synth::{planted_reward, sample_experts, synth_scene, LinearReward, PlantedWeights};
use medirl_core::{Error, Result};
use serde::Serialize;

use crate::config::{GridDims, Predictor, RunConfig, SynthConfig};

pub const SCENES_DIR: &str = "scenes";
pub const CHECKPOINT_DIR: &str = "checkpoint";

/// Derives independent per-item seeds from the run seed.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("serializable") + "\n"))
}

/// The ground-truth reward written next to synthetic scenes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RewardFile {
    pub columns: Vec<String>,
    pub planted: PlantedWeights,
    pub reward: LinearReward,
}

/// Generation settings saved beside the data; paths are left out so the
/// record depends only on the settings.
#[derive(Serialize)]
struct SynthRecord<'a> {
    seed: u64,
    grid: GridDims,
    synth: &'a SynthConfig,
    features: FeatureConfig,
    fovea: FoveaConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub scenes: Vec<PathBuf>,
    pub fixations: usize,
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary> {
    cfg.validate()?;
    if cfg.synth.scenes == 0 {
        return Err(Error::InvalidArgument("zero scenes requested".into()));
    }
    let grid = cfg.grid.build()?;
    // experts always see the full feature set the planted reward is defined on
    let features = FeatureConfig {
        toggles: FeatureToggles::default(),
        ..cfg.train.features
    };
    let obs = Observer::new(grid.clone(), features, cfg.train.fovea)?;
    let mdp = build_mdp(&grid, cfg.train.action_model, cfg.train.gamma, cfg.synth.experts.fixations_per_frame.1)?;
    let root = cfg.out.join(SCENES_DIR);
    let mut summary = SynthSummary {
        scenes: Vec::new(),
        fixations: 0,
    };
    let mut reward_file = None;
    for i in 0..cfg.synth.scenes {
        let mut scene = synth_scene(derive_seed(cfg.seed, 1, i as u64), &grid, &cfg.synth.scene)?;
        let reward = planted_reward(&obs, &scene, cfg.synth.planted)?;
        scene.fixations = sample_experts(&scene, &obs, &mdp, &reward, &cfg.synth.experts, derive_seed(cfg.seed, 2, i as u64))?;
        summary.fixations += scene.fixations.iter().map(|s| s.points.len()).sum::<usize>();
        let dir = root.join(format!("scene_{i:03}"));
        save_scene(&dir, &scene)?;
        summary.scenes.push(dir);
        reward_file.get_or_insert_with(|| {
            let f = &scene.frames[0];
            RewardFile {
                columns: features.columns(f.pixel.channels(), f.region.channels()),
                planted: cfg.synth.planted,
                reward,
            }
        });
    }
    write_json(&cfg.out.join("reward.json"), &reward_file)?;
    let record = SynthRecord {
        seed: cfg.seed,
        grid: cfg.grid,
        synth: &cfg.synth,
        features,
        fovea: cfg.train.fovea,
    };
    write_json(&cfg.out.join("synth_config.json"), &record)?;
    Ok(summary)
}

/// Scene directories of a dataset: `data/scenes/*` if present, else `data/*`.
pub fn dataset_dirs(data: &Path) -> Result<Vec<PathBuf>> {
    let nested = data.join(SCENES_DIR);
    let root = if nested.is_dir() { nested } else { data.to_path_buf() };
    let dirs = list_scenes(&root)?;
    if dirs.is_empty() {
        return Err(Error::Empty(format!("no scene manifests under {}", root.display())));
    }
    Ok(dirs)
}

fn load_dataset(data: &Path, grid: &GridSpec) -> Result<Vec<(String, SceneSequence)>> {
    let mut out = Vec::new();
    for dir in dataset_dirs(data)? {
        let scene = load_scene(&dir)?;
        if scene.frames[0].dims() != (grid.frame_h, grid.frame_w) {
            return Err(Error::ShapeMismatch(format!(
                "{}: frames are {:?}, grid expects {}x{}",
                dir.display(),
                scene.frames[0].dims(),
                grid.frame_h,
                grid.frame_w
            )));
        }
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.push((name, scene));
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub gates: GateCounts,
    pub history: TrainingHistory,
    pub checkpoint: PathBuf,
}

pub fn cmd_train(cfg: &RunConfig) -> Result<TrainSummary> {
    cfg.validate()?;
    let data = cfg.require_data()?;
    let grid = cfg.grid.build()?;
    let scenes = load_dataset(data, &grid)?;
    let mut gates = GateCounts::default();
    let mut windows = Vec::new();
    for (_, scene) in &scenes {
        windows.extend(gate_scene(scene, cfg.eval.sigma_smooth, &mut gates)?);
    }
    if windows.is_empty() {
        return Err(Error::Empty(format!(
            "no training data after gates: {} scenes, {} frames, {} important frames, {} windows, {} sequences kept, {} dropped",
            gates.scenes, gates.frames, gates.important_frames, gates.windows, gates.sequences_kept, gates.sequences_dropped
        )));
    }
    let train_cfg = TrainConfig {
        seed: cfg.seed,
        ..cfg.train.clone()
    };
    let outcome = train(&windows, &grid, &train_cfg)?;
    fs::create_dir_all(&cfg.out).map_err(io(&cfg.out))?;
    let checkpoint = cfg.out.join(CHECKPOINT_DIR);
    save_checkpoint(&checkpoint, &outcome.params, Some(&outcome.optimizer), &grid, &train_cfg, train_cfg.epochs)?;
    write_text(&cfg.out.join("history.csv"), &outcome.history.to_csv())?;
    write_json(&cfg.out.join("gates.json"), &gates)?;
    Ok(TrainSummary {
        gates,
        history: outcome.history,
        checkpoint,
    })
}

struct Loaded {
    checkpoint: Checkpoint,
    obs: Observer,
    scenes: Vec<(String, SceneSequence)>,
}

/// Loads the checkpoint and dataset and checks they fit each other before any work.
fn load_for_inference(cfg: &RunConfig) -> Result<Loaded> {
    cfg.validate()?;
    let data = cfg.require_data()?;
    let checkpoint = load_checkpoint(cfg.require_checkpoint()?)?;
    let grid = checkpoint.meta.grid.clone();
    let t = &checkpoint.meta.train;
    let obs = Observer::new(grid.clone(), t.features, t.fovea)?;
    let scenes = load_dataset(data, &grid)?;
    for (name, scene) in &scenes {
        if obs.input_dim(scene) != checkpoint.params.config.input_dim {
            return Err(Error::ShapeMismatch(format!(
                "scene {name} yields {} features, checkpoint expects {}",
                obs.input_dim(scene),
                checkpoint.params.config.input_dim
            )));
        }
    }
    Ok(Loaded { checkpoint, obs, scenes })
}

fn pixel_of(x: f64, y: f64) -> Pixel {
    (y.floor() as usize, x.floor() as usize)
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<MetricReport> {
    let Loaded { checkpoint, obs, scenes } = load_for_inference(cfg)?;
    let t = &checkpoint.meta.train;
    let mdp = build_mdp(&obs.grid, t.action_model, t.gamma, cfg.eval.horizon)?;
    let pools: Vec<(String, Vec<Pixel>)> = scenes
        .iter()
        .map(|(_, s)| {
            let px = s.fixations.iter().flat_map(|q| q.points.iter().map(|p| pixel_of(p.x, p.y))).collect();
            (s.video_id.clone(), px)
        })
        .collect();
    let mut frames = Vec::new();
    for (si, (_, scene)) in scenes.iter().enumerate() {
        let gt = frame_attention_maps(scene, cfg.eval.sigma_smooth)?;
        let pred = match cfg.eval.predictor {
            Predictor::Model => policy_saliency(&checkpoint.params, scene, &obs, &mdp, cfg.eval.horizon, cfg.eval.sigma_smooth)?,
            Predictor::GroundTruth => gt.clone(),
        };
        for (f, (p, g)) in pred.iter().zip(&gt).enumerate() {
            let positives: Vec<Pixel> = scene
                .fixations
                .iter()
                .flat_map(|s| s.in_frames(f, f + 1))
                .map(|p| pixel_of(p.x, p.y))
                .collect();
            if positives.is_empty() {
                continue;
            }
            let count = cfg.eval.negatives_per_positive * positives.len();
            let negatives = pool_negatives(&pools, &scene.video_id, count, derive_seed(cfg.seed, si as u64, f as u64));
            if negatives.is_empty() {
                return Err(Error::Empty("s-AUC needs fixations from at least two videos".into()));
            }
            frames.push(FrameMetrics {
                video_id: scene.video_id.clone(),
                frame_index: f,
                kld: kld(p, g)?,
                cc: cc(p, g)?,
                sauc: sauc(p, &positives, &negatives)?,
                f_beta: f_beta(p, &binarize_gt(g), cfg.eval.f_threshold, 1.0)?,
            });
        }
    }
    if frames.is_empty() {
        return Err(Error::Empty("no fixated frames to evaluate".into()));
    }
    let report = MetricReport::new(frames, cfg.seed, cfg.eval.f_threshold);
    fs::create_dir_all(&cfg.out).map_err(io(&cfg.out))?;
    write_text(&cfg.out.join("report.csv"), &report.to_csv())?;
    write_text(&cfg.out.join("report.json"), &(report.to_json() + "\n"))?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct RolloutSummary {
    pub scenes: usize,
    pub fixations: usize,
}

pub fn cmd_rollout(cfg: &RunConfig) -> Result<RolloutSummary> {
    let Loaded { checkpoint, obs, scenes } = load_for_inference(cfg)?;
    let t = &checkpoint.meta.train;
    let k = cfg.rollout.fixations_per_frame;
    let mdp = build_mdp(&obs.grid, t.action_model, t.gamma, k)?;
    let root = cfg.out.join("rollout");
    let mut fixations = 0;
    for (si, (name, scene)) in scenes.iter().enumerate() {
        let path = rollout(
            &checkpoint.params,
            scene,
            &obs,
            &mdp,
            &vec![k; scene.len()],
            &cfg.ior,
            derive_seed(cfg.seed, 3, si as u64),
            cfg.rollout.mode,
        )?;
        let maps = policy_saliency(&checkpoint.params, scene, &obs, &mdp, cfg.rollout.horizon, cfg.eval.sigma_smooth)?;
        let dir = root.join(name);
        write_text(&dir.join("scanpath.csv"), &path.to_csv())?;
        for (f, m) in maps.iter().enumerate() {
            write_tensor(dir.join(format!("saliency_{f:03}.ften")), &m.to_tensor())?;
            if cfg.rollout.pgm {
                write_atomic(&dir.join(format!("saliency_{f:03}.pgm")), &m.to_pgm())?;
            }
        }
        fixations += path.steps.len();
    }
    Ok(RolloutSummary {
        scenes: scenes.len(),
        fixations,
    })
}
