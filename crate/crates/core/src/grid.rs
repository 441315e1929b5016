//! Frame discretization: the patch grid that defines the fixation MDP's states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n x m` partition of a `frame_h x frame_w` frame into patches.
///
/// The last row and column absorb any remainder pixels, so every pixel belongs
/// to exactly one patch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub frame_h: usize,
    pub frame_w: usize,
    pub patch_h: usize,
    pub patch_w: usize,
    pub rows: usize,
    pub cols: usize,
    pub row_heights: Vec<usize>,
    pub col_widths: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchIndex {
    pub row: usize,
    pub col: usize,
}

impl PatchIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// A fixation in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationPoint {
    pub x: f64,
    pub y: f64,
    /// Milliseconds, `>= 0`.
    pub duration: f64,
    pub frame_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationSequence {
    pub driver_id: String,
    pub video_id: String,
    pub points: Vec<FixationPoint>,
}

impl FixationSequence {
    pub fn new(driver_id: impl Into<String>, video_id: impl Into<String>, points: Vec<FixationPoint>) -> Result<Self> {
        let seq = Self {
            driver_id: driver_id.into(),
            video_id: video_id.into(),
            points,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::Empty(format!("fixation sequence of driver {}", self.driver_id)));
        }
        if self.points.windows(2).any(|w| w[1].frame_index < w[0].frame_index) {
            return Err(Error::Validation(format!(
                "frame_index decreases in sequence of driver {}",
                self.driver_id
            )));
        }
        if let Some(p) = self.points.iter().find(|p| !(p.duration >= 0.0) || !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Validation(format!("invalid fixation {p:?}")));
        }
        Ok(())
    }

    /// Points whose frame index lies in `[start, end)`.
    pub fn in_frames(&self, start: usize, end: usize) -> Vec<FixationPoint> {
        self.points
            .iter()
            .filter(|p| p.frame_index >= start && p.frame_index < end)
            .copied()
            .collect()
    }
}

/// Direction labels for a fixation shift.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionLabel {
    Left,
    Right,
    Up,
    Down,
    FocusInward,
    FocusOutward,
    Stay,
}

impl ActionLabel {
    pub const ALL: [ActionLabel; 7] = [
        ActionLabel::Left,
        ActionLabel::Right,
        ActionLabel::Up,
        ActionLabel::Down,
        ActionLabel::FocusInward,
        ActionLabel::FocusOutward,
        ActionLabel::Stay,
    ];
}

impl GridSpec {
    /// The 144x256 frame with 12x17 patches used throughout the original setup.
    pub fn paper_default() -> Self {
        build_grid(144, 256, 12, 17).expect("valid constants")
    }

    pub fn num_states(&self) -> usize {
        self.rows * self.cols
    }

    pub fn state(&self, p: PatchIndex) -> usize {
        p.row * self.cols + p.col
    }

    pub fn patch(&self, state: usize) -> PatchIndex {
        PatchIndex::new(state / self.cols, state % self.cols)
    }

    pub fn contains(&self, p: PatchIndex) -> bool {
        p.row < self.rows && p.col < self.cols
    }

    pub fn check(&self, p: PatchIndex) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfBounds(format!(
                "patch ({}, {}) outside {}x{} grid",
                p.row, p.col, self.rows, self.cols
            )))
        }
    }

    /// First pixel row of patch row `r`.
    pub fn row_start(&self, r: usize) -> usize {
        r * self.patch_h
    }

    pub fn col_start(&self, c: usize) -> usize {
        c * self.patch_w
    }

    /// Half-open pixel extent `(y0, y1, x0, x1)` of a patch.
    pub fn extent(&self, p: PatchIndex) -> (usize, usize, usize, usize) {
        let y0 = self.row_start(p.row);
        let x0 = self.col_start(p.col);
        (y0, y0 + self.row_heights[p.row], x0, x0 + self.col_widths[p.col])
    }

    /// Patch index of each pixel row.
    pub fn pixel_row(&self, y: usize) -> usize {
        (y / self.patch_h).min(self.rows - 1)
    }

    pub fn pixel_col(&self, x: usize) -> usize {
        (x / self.patch_w).min(self.cols - 1)
    }

    pub fn frame_center(&self) -> (f64, f64) {
        (self.frame_w as f64 / 2.0, self.frame_h as f64 / 2.0)
    }

    /// The patch containing the frame center.
    pub fn center_patch(&self) -> PatchIndex {
        PatchIndex::new(self.pixel_row(self.frame_h / 2), self.pixel_col(self.frame_w / 2))
    }

    /// Expands a per-patch vector (length `n*m`) to a per-pixel plane.
    pub fn paint(&self, per_patch: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.frame_h * self.frame_w];
        for y in 0..self.frame_h {
            let r = self.pixel_row(y);
            for x in 0..self.frame_w {
                out[y * self.frame_w + x] = per_patch[r * self.cols + self.pixel_col(x)];
            }
        }
        out
    }

    pub fn patch_area(&self, p: PatchIndex) -> usize {
        self.row_heights[p.row] * self.col_widths[p.col]
    }
}

pub fn build_grid(frame_h: usize, frame_w: usize, patch_h: usize, patch_w: usize) -> Result<GridSpec> {
    if frame_h == 0 || frame_w == 0 || patch_h == 0 || patch_w == 0 {
        return Err(Error::InvalidArgument(format!(
            "grid dimensions must be positive: frame {frame_h}x{frame_w}, patch {patch_h}x{patch_w}"
        )));
    }
    if patch_h > frame_h || patch_w > frame_w {
        return Err(Error::InvalidArgument(format!(
            "patch {patch_h}x{patch_w} larger than frame {frame_h}x{frame_w}"
        )));
    }
    let rows = frame_h / patch_h;
    let cols = frame_w / patch_w;
    let mut row_heights = vec![patch_h; rows];
    row_heights[rows - 1] += frame_h - rows * patch_h;
    let mut col_widths = vec![patch_w; cols];
    col_widths[cols - 1] += frame_w - cols * patch_w;
    Ok(GridSpec {
        frame_h,
        frame_w,
        patch_h,
        patch_w,
        rows,
        cols,
        row_heights,
        col_widths,
    })
}

pub fn point_to_patch(grid: &GridSpec, p: &FixationPoint) -> Result<PatchIndex> {
    if !(p.x >= 0.0 && p.y >= 0.0 && p.x < grid.frame_w as f64 && p.y < grid.frame_h as f64) {
        return Err(Error::OutOfBounds(format!(
            "fixation ({}, {}) outside {}x{} frame",
            p.x, p.y, grid.frame_w, grid.frame_h
        )));
    }
    Ok(PatchIndex::new(
        grid.pixel_row(p.y.floor() as usize),
        grid.pixel_col(p.x.floor() as usize),
    ))
}

/// Integer pixel center `(x, y)` of a patch, rounding down.
pub fn patch_center(grid: &GridSpec, s: PatchIndex) -> Result<(usize, usize)> {
    grid.check(s)?;
    let (y0, _, x0, _) = grid.extent(s);
    Ok((x0 + grid.col_widths[s.col] / 2, y0 + grid.row_heights[s.row] / 2))
}

fn center_distance(grid: &GridSpec, s: PatchIndex) -> f64 {
    let (x, y) = patch_center(grid, s).expect("checked by caller");
    let (cx, cy) = grid.frame_center();
    ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt()
}

pub fn classify_action(from: PatchIndex, to: PatchIndex, grid: &GridSpec) -> Result<ActionLabel> {
    grid.check(from)?;
    grid.check(to)?;
    use std::cmp::Ordering::*;
    Ok(match (to.row.cmp(&from.row), to.col.cmp(&from.col)) {
        (Equal, Equal) => ActionLabel::Stay,
        (Equal, Less) => ActionLabel::Left,
        (Equal, Greater) => ActionLabel::Right,
        (Less, Equal) => ActionLabel::Up,
        (Greater, Equal) => ActionLabel::Down,
        _ => {
            // ties go outward
            if center_distance(grid, to) < center_distance(grid, from) {
                ActionLabel::FocusInward
            } else {
                ActionLabel::FocusOutward
            }
        }
    })
}
