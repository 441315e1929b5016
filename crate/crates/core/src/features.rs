//! Per-frame scene features and their fusion into per-patch feature rows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fovea::FoveatedState;
use crate::grid::{FixationSequence, GridSpec};
use crate::matrix::Matrix;
use crate::tensor::Tensor;

/// Half-open pixel box `[row0, row1) x [col0, col1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeadBox {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
}

impl LeadBox {
    pub fn contains(&self, y: usize, x: usize) -> bool {
        y >= self.row0 && y < self.row1 && x >= self.col0 && x < self.col1
    }

    pub fn is_empty(&self) -> bool {
        self.row1 <= self.row0 || self.col1 <= self.col0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    /// Pixel-level features `X`, `[h, w, d_x]`.
    pub pixel: Tensor,
    /// Region features `Y` painted over object boxes, `[h, w, d_y]`.
    pub region: Tensor,
    /// Lane map `G` in `[0, 1]`.
    pub lane: Tensor,
    pub lead_box: Option<LeadBox>,
    /// Brake-light features `U` in `[0, 1]`.
    pub brake: Tensor,
    /// Normalized inverse depth `D` in `[0, 1]`.
    pub depth: Tensor,
    /// Optional driving-irrelevant object mask, used by sequence filtering.
    pub irrelevant: Option<Tensor>,
}

impl FrameFeatures {
    pub fn dims(&self) -> (usize, usize) {
        let s = self.pixel.shape();
        (s[0], s[1])
    }

    pub fn validate(&self) -> Result<()> {
        let (h, w, _) = self.pixel.dims3()?;
        let (rh, rw, _) = self.region.dims3()?;
        if (rh, rw) != (h, w) {
            return Err(Error::ShapeMismatch(format!("Y is {rh}x{rw}, X is {h}x{w}")));
        }
        for (name, t) in [("G", &self.lane), ("U", &self.brake), ("D", &self.depth)] {
            if t.dims3()? != (h, w, 1) {
                return Err(Error::ShapeMismatch(format!("{name} has shape {:?}, expected [{h}, {w}, 1]", t.shape())));
            }
        }
        if let Some(m) = &self.irrelevant {
            if m.dims3()? != (h, w, 1) {
                return Err(Error::ShapeMismatch(format!("irrelevant mask has shape {:?}", m.shape())));
            }
        }
        for (name, t) in [
            ("X", &self.pixel),
            ("Y", &self.region),
            ("G", &self.lane),
            ("U", &self.brake),
            ("D", &self.depth),
        ] {
            t.ensure_finite(name)?;
        }
        for (name, t) in [("G", &self.lane), ("U", &self.brake), ("D", &self.depth)] {
            if t.data().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::Validation(format!("{name} outside [0, 1]")));
            }
        }
        if let Some(b) = self.lead_box {
            if b.is_empty() || b.row1 > h || b.col1 > w {
                return Err(Error::Validation(format!("lead box {b:?} outside {h}x{w} frame")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskLabel {
    LaneKeeping,
    MergingIn,
    Braking,
}

impl TaskLabel {
    /// One-hot order: lane-keeping, merging-in, braking.
    pub fn one_hot(self) -> [f64; 3] {
        match self {
            TaskLabel::LaneKeeping => [1.0, 0.0, 0.0],
            TaskLabel::MergingIn => [0.0, 1.0, 0.0],
            TaskLabel::Braking => [0.0, 0.0, 1.0],
        }
    }
}

/// Driving task from the lane-change flag `c` and traffic-signal presence.
pub fn classify_task(lane_change: bool, signal: bool) -> TaskLabel {
    match (lane_change, signal) {
        (true, _) => TaskLabel::MergingIn,
        (false, false) => TaskLabel::LaneKeeping,
        (false, true) => TaskLabel::Braking,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    /// Ego speed in mph.
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSequence {
    pub video_id: String,
    pub task: TaskLabel,
    pub frames: Vec<FrameFeatures>,
    pub speeds: Vec<VehicleState>,
    pub fixations: Vec<FixationSequence>,
}

impl SceneSequence {
    pub fn validate(&self) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::Empty(format!("scene {} has no frames", self.video_id)));
        }
        if self.speeds.len() != self.frames.len() {
            return Err(Error::Validation(format!(
                "scene {}: {} speeds for {} frames",
                self.video_id,
                self.speeds.len(),
                self.frames.len()
            )));
        }
        let dims = self.frames[0].dims();
        let (dx, dy) = (self.frames[0].pixel.channels(), self.frames[0].region.channels());
        for (i, f) in self.frames.iter().enumerate() {
            f.validate()?;
            if f.dims() != dims || f.pixel.channels() != dx || f.region.channels() != dy {
                return Err(Error::ShapeMismatch(format!("scene {}: frame {i} differs in shape", self.video_id)));
            }
        }
        if let Some(v) = self.speeds.iter().find(|v| !(v.speed >= 0.0) || !v.speed.is_finite()) {
            return Err(Error::Validation(format!("scene {}: invalid speed {}", self.video_id, v.speed)));
        }
        for seq in &self.fixations {
            seq.validate()?;
            for p in &seq.points {
                if p.frame_index >= self.frames.len() {
                    return Err(Error::Validation(format!(
                        "scene {}: fixation frame {} beyond {} frames",
                        self.video_id,
                        p.frame_index,
                        self.frames.len()
                    )));
                }
                if !(p.x >= 0.0 && p.y >= 0.0 && p.x < dims.1 as f64 && p.y < dims.0 as f64) {
                    return Err(Error::Validation(format!("scene {}: fixation ({}, {}) out of frame", self.video_id, p.x, p.y)));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// The frames `[start, end)` with fixations re-indexed to the window.
    pub fn window(&self, start: usize, end: usize) -> SceneSequence {
        let fixations = self
            .fixations
            .iter()
            .filter_map(|s| {
                let points: Vec<_> = s
                    .in_frames(start, end)
                    .into_iter()
                    .map(|mut p| {
                        p.frame_index -= start;
                        p
                    })
                    .collect();
                (!points.is_empty()).then(|| FixationSequence {
                    driver_id: s.driver_id.clone(),
                    video_id: s.video_id.clone(),
                    points,
                })
            })
            .collect();
        SceneSequence {
            video_id: format!("{}[{start}..{end}]", self.video_id),
            task: self.task,
            frames: self.frames[start..end].to_vec(),
            speeds: self.speeds[start..end].to_vec(),
            fixations,
        }
    }
}

/// Feature groups that can be switched off for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureToggles {
    /// Pixel features, seen through the foveated context.
    pub pixel: bool,
    /// Region features (depth amplified when `depth` is on).
    pub region: bool,
    pub lane: bool,
    /// Lead-vehicle box indicator and brake-light features.
    pub lead: bool,
    pub depth: bool,
    pub task: bool,
    pub speed: bool,
}

impl Default for FeatureToggles {
    fn default() -> Self {
        Self {
            pixel: true,
            region: true,
            lane: true,
            lead: true,
            depth: true,
            task: true,
            speed: true,
        }
    }
}

impl FeatureToggles {
    pub fn validate(&self) -> Result<()> {
        if self.pixel || self.region || self.lane || self.lead || self.task || self.speed {
            Ok(())
        } else {
            Err(Error::InvalidArgument("all feature groups disabled".into()))
        }
    }

    /// Disables a group by its single-letter code (`X Y G M D Q v`).
    pub fn disable(&mut self, code: &str) -> Result<()> {
        match code {
            "X" => self.pixel = false,
            "Y" => self.region = false,
            "G" => self.lane = false,
            "M" | "U" => self.lead = false,
            "D" => self.depth = false,
            "Q" => self.task = false,
            "v" | "V" => self.speed = false,
            other => return Err(Error::InvalidArgument(format!("unknown feature group {other:?}"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Depth amplification factor.
    pub lambda: f64,
    /// Speed that maps to 1.0, in mph.
    pub max_speed: f64,
    pub toggles: FeatureToggles,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            lambda: 1.2,
            max_speed: 100.0,
            toggles: FeatureToggles::default(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("lambda {}", self.lambda)));
        }
        if !(self.max_speed > 0.0) || !self.max_speed.is_finite() {
            return Err(Error::InvalidArgument(format!("max_speed {}", self.max_speed)));
        }
        self.toggles.validate()
    }

    /// Column names of the assembled feature matrix for the given channel counts.
    pub fn columns(&self, pixel_channels: usize, region_channels: usize) -> Vec<String> {
        let t = &self.toggles;
        let mut cols = Vec::new();
        if t.pixel {
            cols.extend((0..pixel_channels).map(|c| format!("o{c}")));
        }
        if t.region {
            cols.extend((0..region_channels).map(|c| format!("z{c}")));
        }
        if t.lane {
            cols.push("g".into());
        }
        if t.lead {
            cols.push("u".into());
            cols.push("m".into());
        }
        if t.task {
            cols.extend(["task_lane_keeping", "task_merging_in", "task_braking"].map(String::from));
        }
        if t.speed {
            cols.push("speed".into());
        }
        cols
    }
}

/// `Z = Y * (lambda * D) + Y`, with the single-channel `D` broadcast over `Y`'s channels.
pub fn amplify_depth(region: &Tensor, depth: &Tensor, lambda: f64) -> Result<Tensor> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda {lambda}")));
    }
    let (h, w, c) = region.dims3()?;
    if depth.dims3()? != (h, w, 1) {
        return Err(Error::ShapeMismatch(format!("D {:?} vs Y {:?}", depth.shape(), region.shape())));
    }
    region.ensure_finite("Y")?;
    depth.ensure_finite("D")?;
    let mut out = region.clone();
    let d = depth.data();
    for (i, px) in out.data_mut().chunks_exact_mut(c).enumerate() {
        let gain = (lambda * d[i] as f64 + 1.0) as f32;
        for v in px {
            *v *= gain;
        }
    }
    Ok(out)
}

/// Mean of each channel over each patch: an `n*m x c` matrix.
pub fn pool_patches(map: &Tensor, grid: &GridSpec) -> Result<Matrix> {
    let (h, w, c) = map.dims3()?;
    if (h, w) != (grid.frame_h, grid.frame_w) {
        return Err(Error::ShapeMismatch(format!("map {h}x{w} vs grid frame {}x{}", grid.frame_h, grid.frame_w)));
    }
    let mut out = Matrix::zeros(grid.num_states(), c);
    let col_of: Vec<usize> = (0..w).map(|x| grid.pixel_col(x)).collect();
    let data = map.data();
    for y in 0..h {
        let base = grid.pixel_row(y) * grid.cols;
        for x in 0..w {
            let row = out.row_mut(base + col_of[x]);
            let px = &data[(y * w + x) * c..(y * w + x + 1) * c];
            for (acc, v) in row.iter_mut().zip(px) {
                *acc += *v as f64;
            }
        }
    }
    for s in 0..grid.num_states() {
        let area = grid.patch_area(grid.patch(s)) as f64;
        out.row_mut(s).iter_mut().for_each(|v| *v /= area);
    }
    Ok(out)
}

/// Fraction of each patch covered by the box.
pub fn box_coverage(b: Option<LeadBox>, grid: &GridSpec) -> Vec<f64> {
    let mut out = vec![0.0; grid.num_states()];
    let Some(b) = b else { return out };
    for (s, v) in out.iter_mut().enumerate() {
        let (y0, y1, x0, x1) = grid.extent(grid.patch(s));
        let oy = y1.min(b.row1).saturating_sub(y0.max(b.row0));
        let ox = x1.min(b.col1).saturating_sub(x0.max(b.col0));
        *v = (oy * ox) as f64 / ((y1 - y0) * (x1 - x0)) as f64;
    }
    out
}

/// Frame-level per-patch columns that do not depend on the fixation history.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameColumns {
    /// Columns after the foveated-context block, in final order.
    pub matrix: Matrix,
}

pub fn frame_columns(f: &FrameFeatures, grid: &GridSpec, task: TaskLabel, v: VehicleState, cfg: &FeatureConfig) -> Result<FrameColumns> {
    let t = &cfg.toggles;
    let s_count = grid.num_states();
    let mut blocks: Vec<Matrix> = Vec::new();
    if t.region {
        let z = if t.depth {
            amplify_depth(&f.region, &f.depth, cfg.lambda)?
        } else {
            f.region.clone()
        };
        blocks.push(pool_patches(&z, grid)?);
    }
    if t.lane {
        blocks.push(pool_patches(&f.lane, grid)?);
    }
    if t.lead {
        let u = pool_patches(&f.brake, grid)?;
        let m = box_coverage(f.lead_box, grid);
        let mut um = Matrix::zeros(s_count, 2);
        for s in 0..s_count {
            um.row_mut(s).copy_from_slice(&[u.get(s, 0), m[s]]);
        }
        blocks.push(um);
    }
    if t.task {
        let oh = task.one_hot();
        let mut q = Matrix::zeros(s_count, 3);
        for s in 0..s_count {
            q.row_mut(s).copy_from_slice(&oh);
        }
        blocks.push(q);
    }
    if t.speed {
        let sp = (v.speed / cfg.max_speed).clamp(0.0, 1.0);
        blocks.push(Matrix::from_vec(s_count, 1, vec![sp; s_count])?);
    }
    Ok(FrameColumns {
        matrix: hstack(s_count, &blocks),
    })
}

fn hstack(rows: usize, blocks: &[Matrix]) -> Matrix {
    let cols: usize = blocks.iter().map(|b| b.cols).sum();
    let mut out = Matrix::zeros(rows, cols);
    for r in 0..rows {
        let mut off = 0;
        let dst = out.row_mut(r);
        for b in blocks {
            dst[off..off + b.cols].copy_from_slice(b.row(r));
            off += b.cols;
        }
    }
    out
}

/// Per-patch feature rows combining the foveated context with frame features.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchFeatures {
    pub columns: Vec<String>,
    pub matrix: Matrix,
}

impl PatchFeatures {
    pub fn dim(&self) -> usize {
        self.matrix.cols
    }
}

/// Joins pooled foveated context (if enabled) with precomputed frame columns.
pub fn join_context(state: &FoveatedState, frame: &FrameColumns, grid: &GridSpec, cfg: &FeatureConfig) -> Result<Matrix> {
    if cfg.toggles.pixel {
        let o = pool_patches(&state.context, grid)?;
        Ok(hstack(grid.num_states(), &[o, frame.matrix.clone()]))
    } else {
        Ok(frame.matrix.clone())
    }
}

pub fn assemble_patch_features(
    f: &FrameFeatures,
    state: &FoveatedState,
    grid: &GridSpec,
    task: TaskLabel,
    v: VehicleState,
    cfg: &FeatureConfig,
) -> Result<PatchFeatures> {
    cfg.validate()?;
    if f.dims() != (grid.frame_h, grid.frame_w) {
        return Err(Error::ShapeMismatch(format!(
            "frame {:?} vs grid {}x{}",
            f.dims(),
            grid.frame_h,
            grid.frame_w
        )));
    }
    if state.context.channels() != f.pixel.channels() {
        return Err(Error::ShapeMismatch("foveated context channels differ from X".into()));
    }
    let frame = frame_columns(f, grid, task, v, cfg)?;
    let matrix = join_context(state, &frame, grid, cfg)?;
    let columns = cfg.columns(f.pixel.channels(), f.region.channels());
    debug_assert_eq!(columns.len(), matrix.cols);
    if !matrix.is_finite() {
        return Err(Error::NonFinite("assembled patch features".into()));
    }
    Ok(PatchFeatures { columns, matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fovea::init_state;
    use crate::grid::build_grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_frame(rng: &mut ChaCha8Rng, h: usize, w: usize) -> FrameFeatures {
        let mut m = |c: usize, lo: f32, hi: f32| {
            Tensor::new(vec![h, w, c], (0..h * w * c).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
        };
        FrameFeatures {
            pixel: m(2, -1.0, 1.0),
            region: m(2, 0.0, 1.0),
            lane: m(1, 0.0, 1.0),
            lead_box: Some(LeadBox { row0: 1, col0: 2, row1: 4, col1: 7 }),
            brake: m(1, 0.0, 1.0),
            depth: m(1, 0.0, 1.0),
            irrelevant: None,
        }
    }

    #[test]
    fn depth_amplification_cases() {
        let y0 = Tensor::zeros(vec![2, 3, 2]);
        let d = Tensor::filled(vec![2, 3, 1], 0.7);
        assert_eq!(amplify_depth(&y0, &d, 1.2).unwrap(), y0);
        let y = Tensor::filled(vec![2, 3, 2], 0.4);
        assert_eq!(amplify_depth(&y, &Tensor::zeros(vec![2, 3, 1]), 1.2).unwrap(), y);
        let ones = Tensor::filled(vec![2, 3, 2], 1.0);
        let z = amplify_depth(&ones, &Tensor::filled(vec![2, 3, 1], 1.0), 1.2).unwrap();
        assert!(z.data().iter().all(|&v| (v - 2.2).abs() < 1e-6));
        assert!(amplify_depth(&ones, &Tensor::zeros(vec![2, 2, 1]), 1.2).is_err());
        assert!(amplify_depth(&ones, &d, -1.0).is_err());
        let mut bad = d.clone();
        bad.set(0, 0, 0, f32::INFINITY);
        assert!(amplify_depth(&ones, &bad, 1.2).is_err());
    }

    #[test]
    fn task_table() {
        assert_eq!(classify_task(false, false), TaskLabel::LaneKeeping);
        assert_eq!(classify_task(true, false), TaskLabel::MergingIn);
        assert_eq!(classify_task(true, true), TaskLabel::MergingIn);
        assert_eq!(classify_task(false, true), TaskLabel::Braking);
    }

    #[test]
    fn full_feature_width_is_eleven() {
        let g = build_grid(6, 8, 3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_frame(&mut rng, 6, 8);
        let st = init_state(f.pixel.clone()).unwrap();
        let pf = assemble_patch_features(&f, &st, &g, TaskLabel::Braking, VehicleState { speed: 50.0 }, &FeatureConfig::default()).unwrap();
        assert_eq!(pf.dim(), 11);
        assert_eq!(pf.matrix.rows, 4);
        for r in 0..4 {
            assert_eq!(&pf.matrix.row(r)[7..10], &[0.0, 0.0, 1.0]);
            assert_eq!(pf.matrix.get(r, 10), 0.5);
        }
    }

    #[test]
    fn only_task_and_speed_gives_identical_rows() {
        let g = build_grid(6, 8, 3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_frame(&mut rng, 6, 8);
        let st = init_state(f.pixel.clone()).unwrap();
        let cfg = FeatureConfig {
            toggles: FeatureToggles {
                pixel: false,
                region: false,
                lane: false,
                lead: false,
                depth: false,
                task: true,
                speed: true,
            },
            ..Default::default()
        };
        let pf = assemble_patch_features(&f, &st, &g, TaskLabel::MergingIn, VehicleState { speed: 250.0 }, &cfg).unwrap();
        assert_eq!(pf.dim(), 4);
        for r in 1..pf.matrix.rows {
            assert_eq!(pf.matrix.row(r), pf.matrix.row(0));
        }
        assert_eq!(pf.matrix.get(0, 3), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = build_grid(6, 8, 3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = random_frame(&mut rng, 6, 8);
        let st = init_state(f.pixel.clone()).unwrap();
        let none = FeatureConfig {
            toggles: FeatureToggles {
                pixel: false,
                region: false,
                lane: false,
                lead: false,
                depth: true,
                task: false,
                speed: false,
            },
            ..Default::default()
        };
        let v = VehicleState { speed: 10.0 };
        assert!(assemble_patch_features(&f, &st, &g, TaskLabel::Braking, v, &none).is_err());
        let other = build_grid(12, 8, 3, 4).unwrap();
        assert!(assemble_patch_features(&f, &st, &other, TaskLabel::Braking, v, &FeatureConfig::default()).is_err());
    }

    #[test]
    fn coverage_fractions() {
        let g = build_grid(6, 8, 3, 4).unwrap();
        let c = box_coverage(Some(LeadBox { row0: 0, col0: 2, row1: 3, col1: 4 }), &g);
        assert_eq!(c, vec![0.5, 0.0, 0.0, 0.0]);
        assert_eq!(box_coverage(None, &g), vec![0.0; 4]);
    }

    #[test]
    fn toggles_shrink_width() {
        let full = FeatureConfig::default().columns(2, 2).len();
        for code in ["X", "Y", "G", "M", "Q", "v"] {
            let mut t = FeatureToggles::default();
            t.disable(code).unwrap();
            let cfg = FeatureConfig { toggles: t, ..Default::default() };
            assert!(cfg.columns(2, 2).len() < full, "{code}");
        }
        assert!(FeatureToggles::default().disable("W").is_err());
    }

    proptest! {
        #[test]
        fn amplification_is_monotone_in_depth(y in 0.0f32..5.0, d1 in 0.0f32..1.0, d2 in 0.0f32..1.0, lambda in 0.0f64..3.0) {
            let yt = Tensor::filled(vec![1, 1, 1], y);
            let z1 = amplify_depth(&yt, &Tensor::filled(vec![1, 1, 1], d1.min(d2)), lambda).unwrap();
            let z2 = amplify_depth(&yt, &Tensor::filled(vec![1, 1, 1], d1.max(d2)), lambda).unwrap();
            prop_assert!(z1.data()[0] <= z2.data()[0]);
            let z3 = amplify_depth(&Tensor::filled(vec![1, 1, 1], 2.0 * y), &Tensor::filled(vec![1, 1, 1], d1), lambda).unwrap();
            let z4 = amplify_depth(&yt, &Tensor::filled(vec![1, 1, 1], d1), lambda).unwrap();
            prop_assert!((z3.data()[0] - 2.0 * z4.data()[0]).abs() <= 1e-5 * (1.0 + z3.data()[0].abs()));
        }

        #[test]
        fn assembled_rows_are_finite(seed in 0u64..500) {
            let g = build_grid(9, 12, 3, 4).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_frame(&mut rng, 9, 12);
            let st = init_state(f.pixel.clone()).unwrap();
            let pf = assemble_patch_features(&f, &st, &g, TaskLabel::LaneKeeping, VehicleState { speed: 33.0 }, &FeatureConfig::default()).unwrap();
            prop_assert_eq!(pf.matrix.rows, 9);
            prop_assert!(pf.matrix.is_finite());
        }
    }
}
