//! Training-data gates and raw gaze cleaning.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::SceneSequence;
use crate::grid::{FixationPoint, FixationSequence};
use crate::metrics::kld;
use crate::saliency::SaliencyMap;
use crate::scanpath::fixations_to_map;
use crate::tensor::Tensor;

/// Minimum KLD from the video-average map for a frame to count as important.
pub const IMPORTANT_KLD: f64 = 0.89;
pub const WINDOW_FRAMES: usize = 6;
/// Sequences focusing on irrelevant objects more than this are dropped.
pub const MAX_IRRELEVANT_FRACTION: f64 = 0.40;
/// Features missing at this fraction or more are not interpolated.
pub const MAX_MISSING_FRACTION: f64 = 0.20;
/// Sequences with more abnormal samples than this are dropped.
pub const MAX_ABNORMAL_FRACTION: f64 = 0.40;
pub const OUTLIER_SIGMAS: f64 = 3.0;

/// Per-frame KLD against the mean of all frame maps.
pub fn frame_kld_to_average(gt_maps: &[SaliencyMap]) -> Result<Vec<f64>> {
    let first = gt_maps.first().ok_or_else(|| Error::Empty("no frame maps".into()))?;
    let mut avg = vec![0.0; first.len()];
    for m in gt_maps {
        if (m.height, m.width) != (first.height, first.width) {
            return Err(Error::ShapeMismatch("frame maps differ in size".into()));
        }
        avg.iter_mut().zip(&m.data).for_each(|(a, v)| *a += v);
    }
    let avg = SaliencyMap::from_weights(first.height, first.width, avg)?;
    gt_maps.iter().map(|m| kld(&avg, m)).collect()
}

/// Six-frame windows whose frames all differ from the video average by at
/// least [`IMPORTANT_KLD`]. Runs of qualifying frames are cut from the left;
/// leftovers shorter than a window are discarded.
pub fn important_frames(gt_maps: &[SaliencyMap]) -> Result<Vec<Range<usize>>> {
    if gt_maps.len() < WINDOW_FRAMES {
        return Err(Error::InvalidArgument(format!(
            "{} frames, at least {WINDOW_FRAMES} needed",
            gt_maps.len()
        )));
    }
    let marked: Vec<bool> = frame_kld_to_average(gt_maps)?.iter().map(|&k| k >= IMPORTANT_KLD).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < marked.len() {
        if !marked[i] {
            i += 1;
            continue;
        }
        let run_end = (i..marked.len()).find(|&j| !marked[j]).unwrap_or(marked.len());
        let mut start = i;
        while start + WINDOW_FRAMES <= run_end {
            out.push(start..start + WINDOW_FRAMES);
            start += WINDOW_FRAMES;
        }
        i = run_end;
    }
    Ok(out)
}

/// Keeps a sequence unless more than `max_fraction` of its fixations land on
/// irrelevant pixels (mask value `> 0.5`). `masks` holds one map per frame.
pub fn filter_irrelevant(seq: &FixationSequence, masks: &[Tensor], max_fraction: f64) -> Result<bool> {
    seq.validate()?;
    let mut hits = 0usize;
    for p in &seq.points {
        let mask = masks.get(p.frame_index).ok_or_else(|| {
            Error::OutOfBounds(format!("fixation in frame {} with {} masks", p.frame_index, masks.len()))
        })?;
        let (h, w, _) = mask.dims3()?;
        if !(p.x >= 0.0 && p.y >= 0.0 && (p.x as usize) < w && (p.y as usize) < h) {
            return Err(Error::OutOfBounds(format!("fixation ({}, {}) in a {h}x{w} mask", p.x, p.y)));
        }
        if mask.at(p.y as usize, p.x as usize, 0) > 0.5 {
            hits += 1;
        }
    }
    Ok(hits as f64 <= max_fraction * seq.points.len() as f64)
}

/// Ground-truth attention per frame from every driver's fixations; frames
/// nobody looked at get a uniform map.
pub fn frame_attention_maps(scene: &SceneSequence, sigma_smooth: f64) -> Result<Vec<SaliencyMap>> {
    let dims = scene.frames.first().map(|f| f.dims()).ok_or_else(|| Error::Empty("scene without frames".into()))?;
    (0..scene.len())
        .map(|t| {
            let pts: Vec<FixationPoint> = scene.fixations.iter().flat_map(|s| s.in_frames(t, t + 1)).collect();
            if pts.is_empty() {
                Ok(SaliencyMap::uniform(dims.0, dims.1))
            } else {
                fixations_to_map(&pts, dims, sigma_smooth)
            }
        })
        .collect()
}

/// What the training-data gates let through.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCounts {
    pub scenes: usize,
    pub frames: usize,
    pub important_frames: usize,
    pub windows: usize,
    pub sequences_kept: usize,
    pub sequences_dropped: usize,
    pub windows_kept: usize,
}

/// Cuts a scene into important six-frame windows and drops sequences that
/// dwell on irrelevant objects. Windows left without sequences are discarded.
pub fn gate_scene(scene: &SceneSequence, sigma_smooth: f64, counts: &mut GateCounts) -> Result<Vec<SceneSequence>> {
    scene.validate()?;
    counts.scenes += 1;
    counts.frames += scene.len();
    if scene.len() < WINDOW_FRAMES {
        return Ok(Vec::new());
    }
    let maps = frame_attention_maps(scene, sigma_smooth)?;
    counts.important_frames += frame_kld_to_average(&maps)?.iter().filter(|&&k| k >= IMPORTANT_KLD).count();
    let (h, w) = scene.frames[0].dims();
    let mut out = Vec::new();
    for range in important_frames(&maps)? {
        counts.windows += 1;
        let mut win = scene.window(range.start, range.end);
        let masks: Vec<Tensor> = win
            .frames
            .iter()
            .map(|f| f.irrelevant.clone().unwrap_or_else(|| Tensor::map(h, w, 1)))
            .collect();
        let mut kept = Vec::with_capacity(win.fixations.len());
        for seq in win.fixations.drain(..) {
            if filter_irrelevant(&seq, &masks, MAX_IRRELEVANT_FRACTION)? {
                counts.sequences_kept += 1;
                kept.push(seq);
            } else {
                counts.sequences_dropped += 1;
            }
        }
        if !kept.is_empty() {
            win.fixations = kept;
            counts.windows_kept += 1;
            out.push(win);
        }
    }
    Ok(out)
}

/// One eye-tracker sample. `None` marks a missing value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGazeRecord {
    pub timestamp_ms: f64,
    pub pupil_size: Option<f64>,
    pub gaze_x: Option<f64>,
    pub gaze_y: Option<f64>,
    pub fixation_duration: Option<f64>,
}

pub const GAZE_FEATURES: [&str; 4] = ["pupil_size", "gaze_x", "gaze_y", "fixation_duration"];

impl RawGazeRecord {
    fn feature(&self, k: usize) -> Option<f64> {
        [self.pupil_size, self.gaze_x, self.gaze_y, self.fixation_duration][k]
    }

    fn feature_mut(&mut self, k: usize) -> &mut Option<f64> {
        match k {
            0 => &mut self.pupil_size,
            1 => &mut self.gaze_x,
            2 => &mut self.gaze_y,
            _ => &mut self.fixation_duration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub name: String,
    pub missing: usize,
    pub interpolated: bool,
    /// Too many gaps to interpolate; values are left missing.
    pub flagged: bool,
    pub mean: f64,
    pub std: f64,
    /// Sample indices outside `mean +- 3 std`.
    pub abnormal: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeReport {
    pub samples: usize,
    pub features: Vec<FeatureReport>,
    /// Samples with at least one abnormal feature.
    pub abnormal_samples: usize,
    pub dropped: bool,
}

/// Fills short gaps by linear interpolation in time, with the nearest value
/// at either end. Returns `None` if every value is missing.
fn interpolate(times: &[f64], values: &mut [Option<f64>]) -> Option<()> {
    let valid: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_some()).collect();
    let (&first, &last) = (valid.first()?, valid.last()?);
    for i in 0..values.len() {
        if values[i].is_some() {
            continue;
        }
        values[i] = if i < first {
            values[first]
        } else if i > last {
            values[last]
        } else {
            let hi = valid[valid.partition_point(|&v| v < i)];
            let lo = valid[valid.partition_point(|&v| v < i) - 1];
            let (a, b) = (values[lo]?, values[hi]?);
            let span = times[hi] - times[lo];
            let f = if span > 0.0 {
                (times[i] - times[lo]) / span
            } else {
                (i - lo) as f64 / (hi - lo) as f64
            };
            Some(a + f * (b - a))
        };
    }
    Some(())
}

/// Population mean and standard deviation of the nonzero values.
fn nonzero_stats(values: &[Option<f64>]) -> (f64, f64) {
    let v: Vec<f64> = values.iter().flatten().copied().filter(|&x| x != 0.0).collect();
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Interpolates sparse gaps, marks outliers, and decides whether the whole
/// sequence is usable. A dropped sequence comes back with no records.
pub fn preprocess_gaze(records: &[RawGazeRecord]) -> Result<(Vec<RawGazeRecord>, GazeReport)> {
    if records.is_empty() {
        return Err(Error::Empty("gaze records".into()));
    }
    if records.iter().any(|r| !r.timestamp_ms.is_finite()) || records.windows(2).any(|w| w[1].timestamp_ms < w[0].timestamp_ms) {
        return Err(Error::Validation("gaze timestamps must be finite and nondecreasing".into()));
    }
    let n = records.len();
    let times: Vec<f64> = records.iter().map(|r| r.timestamp_ms).collect();
    let mut clean = records.to_vec();
    let mut features = Vec::with_capacity(GAZE_FEATURES.len());
    let mut abnormal_sample = vec![false; n];
    for (k, name) in GAZE_FEATURES.iter().enumerate() {
        let mut values: Vec<Option<f64>> = records.iter().map(|r| r.feature(k)).collect();
        let missing = values.iter().filter(|v| v.is_none()).count();
        if missing == n {
            return Err(Error::Validation(format!("gaze feature {name} is missing in every sample")));
        }
        let flagged = missing as f64 >= MAX_MISSING_FRACTION * n as f64;
        let interpolated = missing > 0 && !flagged;
        if interpolated {
            interpolate(&times, &mut values);
        }
        let (mean, std) = nonzero_stats(&values);
        let (lo, hi) = (mean - OUTLIER_SIGMAS * std, mean + OUTLIER_SIGMAS * std);
        let abnormal: Vec<usize> = (0..n)
            .filter(|&i| matches!(values[i], Some(v) if v != 0.0 && (v < lo || v > hi)))
            .collect();
        for &i in &abnormal {
            abnormal_sample[i] = true;
        }
        for (r, v) in clean.iter_mut().zip(&values) {
            *r.feature_mut(k) = *v;
        }
        features.push(FeatureReport {
            name: name.to_string(),
            missing,
            interpolated,
            flagged,
            mean,
            std,
            abnormal,
        });
    }
    let abnormal_samples = abnormal_sample.iter().filter(|&&a| a).count();
    let dropped = abnormal_samples as f64 > MAX_ABNORMAL_FRACTION * n as f64;
    if dropped {
        clean.clear();
    }
    Ok((
        clean,
        GazeReport {
            samples: n,
            features,
            abnormal_samples,
            dropped,
        },
    ))
}
