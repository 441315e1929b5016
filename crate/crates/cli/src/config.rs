//! Run configuration: a JSON file with command-line overrides on top.

use std::fs;
use std::path::{Path, PathBuf};

use medirl_core::grid::{build_grid, GridSpec};
use medirl_core::irl::TrainConfig;
use medirl_core::metrics::{DEFAULT_F_THRESHOLD, NEGATIVES_PER_POSITIVE};
use medirl_core::scanpath::{IoRConfig, RolloutMode, DEFAULT_SIGMA_SMOOTH};
use medirl_core::synth::{ExpertParams, PlantedWeights, SynthParams};
use medirl_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridDims {
    pub frame_h: usize,
    pub frame_w: usize,
    pub patch_h: usize,
    pub patch_w: usize,
}

impl Default for GridDims {
    fn default() -> Self {
        Self {
            frame_h: 144,
            frame_w: 272,
            patch_h: 24,
            patch_w: 34,
        }
    }
}

impl GridDims {
    pub fn build(&self) -> Result<GridSpec> {
        build_grid(self.frame_h, self.frame_w, self.patch_h, self.patch_w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub scenes: usize,
    pub scene: SynthParams,
    pub planted: PlantedWeights,
    pub experts: ExpertParams,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            scenes: 10,
            // long enough to hold a six-frame window after the centered first frame
            scene: SynthParams {
                frames: 12,
                ..SynthParams::default()
            },
            planted: PlantedWeights::default(),
            experts: ExpertParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    pub fixations_per_frame: usize,
    pub mode: RolloutMode,
    /// Saliency-map horizon in decisions.
    pub horizon: usize,
    pub pgm: bool,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            fixations_per_frame: 3,
            mode: RolloutMode::Sample,
            horizon: 3,
            pgm: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predictor {
    /// Saliency from the trained policy.
    #[default]
    Model,
    /// The ground-truth maps themselves, as a metric sanity check.
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub sigma_smooth: f64,
    pub f_threshold: f64,
    pub horizon: usize,
    pub negatives_per_positive: usize,
    pub predictor: Predictor,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            sigma_smooth: DEFAULT_SIGMA_SMOOTH,
            f_threshold: DEFAULT_F_THRESHOLD,
            horizon: 3,
            negatives_per_positive: NEGATIVES_PER_POSITIVE,
            predictor: Predictor::Model,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seeds every randomized step; training uses it in place of `train.seed`.
    pub seed: u64,
    pub out: PathBuf,
    /// Dataset directory: scene folders, or a folder holding `scenes/`.
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub grid: GridDims,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub ior: IoRConfig,
    pub rollout: RolloutConfig,
    pub eval: EvalConfig,
    /// Feature groups to disable, by letter.
    pub toggle_off: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out: PathBuf::from("out"),
            data: None,
            checkpoint: None,
            grid: GridDims::default(),
            synth: SynthConfig::default(),
            train: TrainConfig::default(),
            ior: IoRConfig::default(),
            rollout: RolloutConfig::default(),
            eval: EvalConfig::default(),
            toggle_off: Vec::new(),
        }
    }
}

/// Command-line values that replace configuration fields when present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub epochs: Option<u32>,
    pub scenes: Option<usize>,
    pub frames: Option<usize>,
    pub toggle_off: Vec<String>,
}

impl RunConfig {
    pub fn from_json(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Manifest {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Loads `path` (or defaults), applies overrides, folds the seed and
    /// toggles into the training settings, and validates the result.
    pub fn resolve(path: Option<&Path>, o: &Overrides) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => Self::from_json(p)?,
            None => Self::default(),
        };
        if let Some(v) = o.seed {
            cfg.seed = v;
        }
        if let Some(v) = &o.out {
            cfg.out = v.clone();
        }
        if let Some(v) = &o.data {
            cfg.data = Some(v.clone());
        }
        if let Some(v) = &o.checkpoint {
            cfg.checkpoint = Some(v.clone());
        }
        if let Some(v) = o.epochs {
            cfg.train.epochs = v;
        }
        if let Some(v) = o.scenes {
            cfg.synth.scenes = v;
        }
        if let Some(v) = o.frames {
            cfg.synth.scene.frames = v;
        }
        cfg.toggle_off.extend(o.toggle_off.iter().cloned());
        cfg.train.seed = cfg.seed;
        for code in &cfg.toggle_off {
            cfg.train.features.toggles.disable(code)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.build()?;
        self.synth.scene.validate()?;
        let e = &self.synth.experts;
        if e.drivers == 0 || e.fixations_per_frame.0 == 0 || e.fixations_per_frame.1 < e.fixations_per_frame.0 {
            return Err(Error::InvalidArgument(format!("expert parameters {e:?}")));
        }
        if !(e.duration_ms.0 >= 0.0 && e.duration_ms.1 >= e.duration_ms.0 && e.duration_ms.1.is_finite()) {
            return Err(Error::InvalidArgument(format!("fixation durations {:?}", e.duration_ms)));
        }
        let w = &self.synth.planted;
        if !w.brake.is_finite() || !w.lead.is_finite() {
            return Err(Error::InvalidArgument("planted weights must be finite".into()));
        }
        self.train.validate()?;
        self.ior.validate()?;
        if self.rollout.fixations_per_frame == 0 || self.rollout.horizon == 0 || self.eval.horizon == 0 {
            return Err(Error::InvalidArgument("rollout and evaluation counts must be positive".into()));
        }
        let ev = &self.eval;
        if !(ev.f_threshold > 0.0 && ev.f_threshold < 1.0) {
            return Err(Error::InvalidArgument(format!("F-score threshold {}", ev.f_threshold)));
        }
        if !(ev.sigma_smooth >= 0.0 && ev.sigma_smooth.is_finite()) || ev.negatives_per_positive == 0 {
            return Err(Error::InvalidArgument("evaluation smoothing and negative count".into()));
        }
        Ok(())
    }

    pub fn require_data(&self) -> Result<&Path> {
        let p = self
            .data
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("no dataset given (--data)".into()))?;
        if !p.is_dir() {
            return Err(Error::Io {
                path: p.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
            });
        }
        Ok(p)
    }

    pub fn require_checkpoint(&self) -> Result<&Path> {
        let p = self
            .checkpoint
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument("no checkpoint given (--checkpoint)".into()))?;
        let meta = p.join(medirl_core::checkpoint::CHECKPOINT_FILE);
        if !meta.is_file() {
            return Err(Error::Io {
                path: meta,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "checkpoint not found"),
            });
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"seed": 3, "train": {"epochs": 5}, "toggle_off": ["Y"]}"#).unwrap();
        let o = Overrides {
            seed: Some(9),
            epochs: Some(2),
            toggle_off: vec!["M".into()],
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Some(&path), &o).unwrap();
        assert_eq!((cfg.seed, cfg.train.seed, cfg.train.epochs), (9, 9, 2));
        let t = cfg.train.features.toggles;
        assert!(!t.region && !t.lead && t.pixel);
    }

    #[test]
    fn rejects_bad_values() {
        let o = |toggle: &str| Overrides {
            toggle_off: vec![toggle.into()],
            ..Default::default()
        };
        assert!(RunConfig::resolve(None, &o("Z")).is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"grid": {"patch_h": 0}}"#).unwrap();
        assert!(RunConfig::resolve(Some(&path), &Overrides::default()).is_err());
        fs::write(&path, r#"{"unknown_field": 1}"#).unwrap();
        let err = RunConfig::resolve(Some(&path), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("run.json"), "{err}");
    }

    #[test]
    fn default_round_trips_through_json() {
        let cfg = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
