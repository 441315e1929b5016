//! Turns scenes and fixation histories into per-patch feature matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{frame_columns, join_context, FeatureConfig, FrameColumns, SceneSequence};
use crate::fovea::{fixate, start_state, FoveaConfig, FoveatedState};
use crate::grid::{patch_center, FixationPoint, GridSpec, PatchIndex};
use crate::matrix::Matrix;

/// The grid, feature fusion and fovea settings shared by training and inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observer {
    pub grid: GridSpec,
    pub features: FeatureConfig,
    pub fovea: FoveaConfig,
}

impl Observer {
    pub fn new(grid: GridSpec, features: FeatureConfig, fovea: FoveaConfig) -> Result<Self> {
        features.validate()?;
        fovea.validate()?;
        Ok(Self { grid, features, fovea })
    }

    pub fn check_scene(&self, scene: &SceneSequence) -> Result<()> {
        let dims = scene.frames.first().map(|f| f.dims()).ok_or_else(|| Error::Empty(format!("scene {}", scene.video_id)))?;
        if dims != (self.grid.frame_h, self.grid.frame_w) {
            return Err(Error::ShapeMismatch(format!(
                "scene {} frames are {}x{}, grid expects {}x{}",
                scene.video_id, dims.0, dims.1, self.grid.frame_h, self.grid.frame_w
            )));
        }
        Ok(())
    }

    /// Width of the feature rows produced for a scene.
    pub fn input_dim(&self, scene: &SceneSequence) -> usize {
        let f = &scene.frames[0];
        self.features.columns(f.pixel.channels(), f.region.channels()).len()
    }

    pub fn columns(&self, scene: &SceneSequence) -> Result<Vec<FrameColumns>> {
        self.check_scene(scene)?;
        scene
            .frames
            .iter()
            .zip(&scene.speeds)
            .map(|(f, v)| frame_columns(f, &self.grid, scene.task, *v, &self.features))
            .collect()
    }

    pub fn phi(&self, state: &FoveatedState, cols: &FrameColumns) -> Result<Matrix> {
        let m = join_context(state, cols, &self.grid, &self.features)?;
        if !m.is_finite() {
            return Err(Error::NonFinite("patch features".into()));
        }
        Ok(m)
    }

    pub fn start(&self, scene: &SceneSequence, frame: usize, first: &FixationPoint) -> Result<FoveatedState> {
        start_state(&self.grid, &scene.frames[frame].pixel, first, &self.fovea)
    }

    pub fn fixate(&self, state: &FoveatedState, scene: &SceneSequence, frame: usize, patch: PatchIndex, new_frame: bool) -> Result<FoveatedState> {
        fixate(state, &scene.frames[frame].pixel, patch, new_frame, &self.grid, &self.fovea)
    }

    /// A zero-duration fixation at the center of `patch`.
    pub fn point_at(&self, patch: PatchIndex, frame: usize) -> Result<FixationPoint> {
        let (x, y) = patch_center(&self.grid, patch)?;
        Ok(FixationPoint {
            x: x as f64,
            y: y as f64,
            duration: 0.0,
            frame_index: frame,
        })
    }
}
