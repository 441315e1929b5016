//! Deterministic synthetic driving scenes and planted-reward experts.
//!
//! Each scene has two converging lane lines, a lead vehicle that approaches
//! while drifting sideways, brake lamps that light up from an onset frame,
//! and static distractor blobs marked as driving-irrelevant.
//! Randomness comes from a ChaCha8 generator seeded with the scene seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{classify_task, FrameFeatures, LeadBox, SceneSequence, VehicleState};
use crate::grid::{FixationPoint, FixationSequence, GridSpec};
use crate::irl::mdp::FixationMdp;
use crate::matrix::Matrix;
use crate::observe::Observer;
use crate::reward_net::RewardModel;
use crate::scanpath::{rollout, IoRConfig, RolloutMode};
use crate::tensor::Tensor;

/// Geometry is given as fractions of the frame so one parameter set serves any grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub frames: usize,
    /// First frame with lit brake lamps; drawn per scene when absent.
    pub brake_onset: Option<usize>,
    pub num_distractors: usize,
    /// Initial vehicle height and width as fractions of the frame.
    pub vehicle_size: (f64, f64),
    /// Per-frame growth factor of the vehicle box.
    pub approach_rate: f64,
    /// Lateral drift per frame as a fraction of the frame width.
    pub lateral_speed: f64,
    /// Lamp height and width as fractions of the vehicle box.
    pub lamp_size: (f64, f64),
    /// Spread of the brake-light response around each lamp, as a fraction of
    /// the box height; 0 keeps the lamps sharp.
    pub lamp_glow: f64,
    /// Distractor height and width as fractions of the frame.
    pub distractor_size: (f64, f64),
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            frames: 6,
            brake_onset: None,
            num_distractors: 3,
            vehicle_size: (0.17, 0.14),
            approach_rate: 1.08,
            lateral_speed: 0.12,
            lamp_size: (0.35, 0.25),
            lamp_glow: 0.5,
            distractor_size: (0.12, 0.08),
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        let ok = self.frames >= 1
            && frac(self.vehicle_size.0)
            && frac(self.vehicle_size.1)
            && frac(self.lamp_size.0)
            && frac(self.lamp_size.1)
            && frac(self.distractor_size.0)
            && frac(self.distractor_size.1)
            && self.approach_rate > 0.0
            && self.lateral_speed >= 0.0
            && self.lamp_glow >= 0.0
            && self.lamp_glow.is_finite()
            && self.lateral_speed.is_finite()
            && self.approach_rate.is_finite();
        if !ok {
            return Err(Error::InvalidArgument(format!("degenerate synthetic scene parameters {self:?}")));
        }
        if let Some(o) = self.brake_onset {
            if o >= self.frames {
                return Err(Error::InvalidArgument(format!("brake onset {o} beyond {} frames", self.frames)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Rect {
    y0: usize,
    y1: usize,
    x0: usize,
    x1: usize,
}

impl Rect {
    /// Clipped to the frame; at least one pixel.
    fn centered(cy: f64, cx: f64, hh: f64, hw: f64, h: usize, w: usize) -> Rect {
        let clip = |v: f64, n: usize| (v.round().max(0.0) as usize).min(n);
        let mut r = Rect {
            y0: clip(cy - hh, h),
            y1: clip(cy + hh, h),
            x0: clip(cx - hw, w),
            x1: clip(cx + hw, w),
        };
        if r.y1 <= r.y0 {
            r.y0 = r.y0.min(h - 1);
            r.y1 = r.y0 + 1;
        }
        if r.x1 <= r.x0 {
            r.x0 = r.x0.min(w - 1);
            r.x1 = r.x0 + 1;
        }
        r
    }

    /// Gaussian falloff around the rectangle, combined by maximum.
    fn glow(&self, t: &mut Tensor, sigma: f64, level: f64) {
        let (h, w, _) = t.dims3().expect("map tensor");
        let gap = |v: usize, lo: usize, hi: usize| {
            if v < lo {
                (lo - v) as f64
            } else if v >= hi {
                (v + 1 - hi) as f64
            } else {
                0.0
            }
        };
        for y in 0..h {
            let dy = gap(y, self.y0, self.y1);
            for x in 0..w {
                let dx = gap(x, self.x0, self.x1);
                let v = (level * (-(dy * dy + dx * dx) / (2.0 * sigma * sigma)).exp()) as f32;
                if v > t.at(y, x, 0) {
                    t.set(y, x, 0, v);
                }
            }
        }
    }

    fn fill(&self, t: &mut Tensor, c: usize, v: f32) {
        for y in self.y0..self.y1 {
            for x in self.x0..self.x1 {
                t.set(y, x, c, v);
            }
        }
    }
}

/// Generates one scene; fixations are left empty.
pub fn synth_scene(seed: u64, grid: &GridSpec, params: &SynthParams) -> Result<SceneSequence> {
    params.validate()?;
    let (h, w) = (grid.frame_h, grid.frame_w);
    let (hf, wf) = (h as f64, w as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_count = params.frames;

    let onset = params.brake_onset.unwrap_or_else(|| rng.gen_range(0..t_count));
    let lane_change = rng.gen_bool(0.3);
    let task = classify_task(lane_change, true);
    let lead_value: f32 = rng.gen_range(0.6..1.0);
    let lamp_left: f64 = rng.gen_range(0.5..1.0);
    let mut lamp_right: f64 = rng.gen_range(0.5..1.0);
    if (lamp_left - lamp_right).abs() < 0.15 {
        lamp_right = if lamp_left > 0.75 { lamp_left - 0.25 } else { lamp_left + 0.25 };
    }
    let base_speed: f64 = rng.gen_range(25.0..65.0);
    let mut cx = rng.gen_range(0.3..0.7) * wf;
    let mut vx = params.lateral_speed * wf * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let cy0 = rng.gen_range(0.45..0.55) * hf;

    let distractors: Vec<(Rect, f32)> = (0..params.num_distractors)
        .map(|_| {
            let dh = params.distractor_size.0 * hf / 2.0;
            let dw = params.distractor_size.1 * wf / 2.0;
            let cy = rng.gen_range(dh..hf - dh);
            // keep distractors off the central band where the vehicle drives
            let side = rng.gen_bool(0.5);
            let cxd = if side {
                rng.gen_range(dw..(0.25 * wf).max(dw + 1.0))
            } else {
                rng.gen_range((0.75 * wf).min(wf - dw - 1.0)..wf - dw)
            };
            (Rect::centered(cy, cxd, dh, dw, h, w), rng.gen_range(0.5f32..1.0))
        })
        .collect();

    let horizon_y = 0.35 * hf;
    let mut lane = Tensor::map(h, w, 1);
    for y in 0..h {
        let yf = y as f64 + 0.5;
        if yf < horizon_y {
            continue;
        }
        let f = (yf - horizon_y) / (hf - horizon_y);
        for xl in [0.5 * wf - f * 0.32 * wf, 0.5 * wf + f * 0.32 * wf] {
            for x in 0..w {
                if (x as f64 + 0.5 - xl).abs() <= 1.5 {
                    lane.set(y, x, 0, 1.0);
                }
            }
        }
    }

    let mut frames = Vec::with_capacity(t_count);
    let mut speeds = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let scale = params.approach_rate.powi(t as i32);
        let bh = params.vehicle_size.0 * hf * scale / 2.0;
        let bw = params.vehicle_size.1 * wf * scale / 2.0;
        let cy = cy0 + 0.02 * hf * t as f64;
        if t > 0 {
            cx += vx;
            if cx < 0.15 * wf || cx > 0.85 * wf {
                vx = -vx;
                cx += 2.0 * vx;
            }
        }
        let b = Rect::centered(cy, cx, bh, bw, h, w);
        let lead_box = LeadBox {
            row0: b.y0,
            col0: b.x0,
            row1: b.y1,
            col1: b.x1,
        };
        let vehicle_depth = (0.25 + 0.1 * t as f64).min(1.0) as f32;

        let mut pixel = Tensor::map(h, w, 2);
        let mut region = Tensor::map(h, w, 2);
        let mut depth = Tensor::map(h, w, 1);
        let mut brake = Tensor::map(h, w, 1);
        let mut irrelevant = Tensor::map(h, w, 1);
        for y in 0..h {
            let yf = y as f64 + 0.5;
            let d = if yf < horizon_y { 0.05 } else { 0.05 + 0.75 * (yf - horizon_y) / (hf - horizon_y) };
            for x in 0..w {
                depth.set(y, x, 0, d as f32);
                pixel.set(y, x, 0, 0.5 * lane.at(y, x, 0));
            }
        }
        for (r, v) in &distractors {
            r.fill(&mut pixel, 1, *v);
            r.fill(&mut region, 1, *v);
            r.fill(&mut irrelevant, 0, 1.0);
        }
        b.fill(&mut pixel, 0, 1.0);
        b.fill(&mut region, 0, lead_value);
        b.fill(&mut depth, 0, vehicle_depth);
        if t >= onset {
            let lh = params.lamp_size.0 * (b.y1 - b.y0) as f64;
            let lw = params.lamp_size.1 * (b.x1 - b.x0) as f64;
            let ly = b.y1 as f64 - lh / 2.0 - 0.1 * (b.y1 - b.y0) as f64;
            let left = Rect::centered(ly, b.x0 as f64 + lw / 2.0, lh / 2.0, lw / 2.0, h, w);
            let right = Rect::centered(ly, b.x1 as f64 - lw / 2.0, lh / 2.0, lw / 2.0, h, w);
            let sigma = params.lamp_glow * (b.y1 - b.y0) as f64;
            for (lamp, level) in [(left, lamp_left), (right, lamp_right)] {
                lamp.fill(&mut brake, 0, level as f32);
                if sigma > 0.0 {
                    lamp.glow(&mut brake, sigma, level);
                }
            }
        }
        frames.push(FrameFeatures {
            pixel,
            region,
            lane: lane.clone(),
            lead_box: Some(lead_box),
            brake,
            depth,
            irrelevant: Some(irrelevant),
        });
        let v = if t >= onset { base_speed - 5.0 * (t - onset + 1) as f64 } else { base_speed };
        speeds.push(VehicleState { speed: v.max(0.0) });
    }
    let scene = SceneSequence {
        video_id: format!("synth-{seed}"),
        task,
        frames,
        speeds,
        fixations: Vec::new(),
    };
    scene.validate()?;
    Ok(scene)
}

/// A reward linear in the feature columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearReward {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearReward {
    /// Weights assigned by column name; unnamed columns get zero.
    pub fn from_named(columns: &[String], named: &[(&str, f64)]) -> Result<Self> {
        let mut weights = vec![0.0; columns.len()];
        for (name, w) in named {
            let i = columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::InvalidArgument(format!("no feature column {name:?}")))?;
            weights[i] = *w;
        }
        Ok(Self { weights, bias: 0.0 })
    }
}

impl RewardModel for LinearReward {
    fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn rewards(&self, features: &Matrix) -> Result<Vec<f64>> {
        if features.cols != self.weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature columns for {} weights",
                features.cols,
                self.weights.len()
            )));
        }
        Ok((0..features.rows)
            .map(|s| self.bias + features.row(s).iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    }
}

/// Planted reward weights on the brake-light and depth-amplified lead-vehicle columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedWeights {
    pub brake: f64,
    pub lead: f64,
}

impl Default for PlantedWeights {
    fn default() -> Self {
        Self { brake: 4.0, lead: 4.0 }
    }
}

pub fn planted_reward(obs: &Observer, scene: &SceneSequence, w: PlantedWeights) -> Result<LinearReward> {
    let f = &scene.frames[0];
    let cols = obs.features.columns(f.pixel.channels(), f.region.channels());
    LinearReward::from_named(&cols, &[("u", w.brake), ("z0", w.lead)])
}

/// How synthetic experts are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExpertParams {
    pub drivers: usize,
    /// Inclusive range of decisions per frame.
    pub fixations_per_frame: (usize, usize),
    /// Inclusive range of fixation durations in milliseconds.
    pub duration_ms: (f64, f64),
}

impl Default for ExpertParams {
    fn default() -> Self {
        Self {
            drivers: 5,
            fixations_per_frame: (2, 4),
            duration_ms: (200.0, 400.0),
        }
    }
}

/// Samples expert scanpaths from the maximum-entropy policy of `reward`,
/// without inhibition of return. Fixations sit at patch centers.
pub fn sample_experts<M: RewardModel + ?Sized>(
    scene: &SceneSequence,
    obs: &Observer,
    mdp: &FixationMdp,
    reward: &M,
    params: &ExpertParams,
    seed: u64,
) -> Result<Vec<FixationSequence>> {
    let (k_lo, k_hi) = params.fixations_per_frame;
    if params.drivers == 0 || k_lo == 0 || k_hi < k_lo {
        return Err(Error::InvalidArgument(format!("expert parameters {params:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let no_ior = IoRConfig { decay: 1.0, memory: None };
    let mut out = Vec::with_capacity(params.drivers);
    for d in 0..params.drivers {
        let k: Vec<usize> = (0..scene.len()).map(|_| rng.gen_range(k_lo..=k_hi)).collect();
        let path = rollout(reward, scene, obs, mdp, &k, &no_ior, rng.gen(), RolloutMode::Sample)?;
        let points = path
            .steps
            .iter()
            .map(|s| {
                let mut p = obs.point_at(s.patch, s.frame_index)?;
                p.duration = rng.gen_range(params.duration_ms.0..=params.duration_ms.1).round();
                Ok(p)
            })
            .collect::<Result<Vec<FixationPoint>>>()?;
        out.push(FixationSequence::new(format!("driver-{d}"), scene.video_id.clone(), points)?);
    }
    Ok(out)
}
