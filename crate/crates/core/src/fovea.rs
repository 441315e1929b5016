//! Foveated state: a sharp fixated region over a blurred periphery, accumulated
//! across fixations and frames by masked overwrite.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{patch_center, FixationPoint, GridSpec, PatchIndex};
use crate::tensor::Tensor;

/// Half-sample symmetric reflection of `i` into `[0, n)`, valid for any offset.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let j = i.rem_euclid(period) as usize;
    if j >= n {
        2 * n - 1 - j
    } else {
        j
    }
}

/// Normalized 1-D Gaussian weights for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-r..=r)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable Gaussian blur of one `h x w` plane in place.
pub fn blur_plane(plane: &mut [f64], h: usize, w: usize, sigma: f64) {
    if sigma <= 0.0 || plane.is_empty() {
        return;
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; plane.len()];
    for y in 0..h {
        let row = &plane[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                acc += kv * row[reflect(x as isize + j as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    for x in 0..w {
        for y in 0..h {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                acc += kv * tmp[reflect(y as isize + j as isize - r, h) * w + x];
            }
            plane[y * w + x] = acc;
        }
    }
}

/// Per-channel Gaussian blur with reflect padding; `sigma == 0` is the identity.
pub fn gaussian_blur(h_map: &Tensor, sigma: f64) -> Result<Tensor> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("blur sigma {sigma}")));
    }
    h_map.ensure_finite("blur input")?;
    let (h, w, c) = h_map.dims3()?;
    if sigma == 0.0 {
        return Ok(h_map.clone());
    }
    let mut out = h_map.clone();
    for ch in 0..c {
        let mut plane = h_map.channel_plane(ch)?;
        blur_plane(&mut plane, h, w, sigma);
        out.set_channel_plane(ch, &plane)?;
    }
    Ok(out)
}

/// Reference distance used to scale peripheral blur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlurDistance {
    /// Euclidean distance from the fixation to the frame center.
    #[default]
    FrameCenter,
    /// Distance from the fixation to the nearest frame border.
    NearestBorder,
}

pub const DEFAULT_SIGMA_MAX: f64 = 64.0;

/// `sigma = min(2 d, sigma_max)` for the configured distance `d`.
pub fn peripheral_sigma(p: &FixationPoint, frame: (usize, usize), sigma_max: f64, mode: BlurDistance) -> f64 {
    let (h, w) = (frame.0 as f64, frame.1 as f64);
    let d = match mode {
        BlurDistance::FrameCenter => ((p.x - w / 2.0).powi(2) + (p.y - h / 2.0).powi(2)).sqrt(),
        BlurDistance::NearestBorder => p.x.min(w - p.x).min(p.y).min(h - p.y).max(0.0),
    };
    (2.0 * d).min(sigma_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    #[default]
    Patch,
    Circular,
}

/// Binary fovea mask, either at patch resolution or pixel resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct FoveaMask {
    pub fixation: PatchIndex,
    pub resolution: (usize, usize),
    pub pixel_level: bool,
    pub values: Vec<u8>,
}

impl FoveaMask {
    /// An arbitrary pixel-resolution mask; values must be 0 or 1.
    pub fn from_pixels(fixation: PatchIndex, h: usize, w: usize, values: Vec<u8>) -> Result<Self> {
        if values.len() != h * w || values.iter().any(|&v| v > 1) {
            return Err(Error::InvalidArgument("mask must be h*w values in {0,1}".into()));
        }
        Ok(Self {
            fixation,
            resolution: (h, w),
            pixel_level: true,
            values,
        })
    }

    pub fn ones(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1).count()
    }

    /// The mask at pixel resolution, replicating patch entries over each block.
    pub fn to_pixels(&self, grid: &GridSpec) -> Result<Vec<u8>> {
        if self.pixel_level {
            if self.resolution != (grid.frame_h, grid.frame_w) {
                return Err(Error::ShapeMismatch(format!(
                    "mask {:?} vs frame {}x{}",
                    self.resolution, grid.frame_h, grid.frame_w
                )));
            }
            return Ok(self.values.clone());
        }
        if self.resolution != (grid.rows, grid.cols) {
            return Err(Error::ShapeMismatch(format!(
                "patch mask {:?} vs grid {}x{}",
                self.resolution, grid.rows, grid.cols
            )));
        }
        let per_patch: Vec<f64> = self.values.iter().map(|&v| v as f64).collect();
        Ok(grid.paint(&per_patch).into_iter().map(|v| v as u8).collect())
    }
}

pub fn make_fovea_mask(grid: &GridSpec, s: PatchIndex, mode: MaskMode, radius: f64) -> Result<FoveaMask> {
    grid.check(s)?;
    match mode {
        MaskMode::Patch => {
            let mut values = vec![0u8; grid.num_states()];
            values[grid.state(s)] = 1;
            Ok(FoveaMask {
                fixation: s,
                resolution: (grid.rows, grid.cols),
                pixel_level: false,
                values,
            })
        }
        MaskMode::Circular => {
            if !(radius > 0.0) {
                return Err(Error::InvalidArgument(format!("circular mask radius {radius}")));
            }
            let (cx, cy) = patch_center(grid, s)?;
            let r2 = radius * radius;
            let mut values = vec![0u8; grid.frame_h * grid.frame_w];
            for y in 0..grid.frame_h {
                for x in 0..grid.frame_w {
                    let d2 = (x as f64 - cx as f64).powi(2) + (y as f64 - cy as f64).powi(2);
                    values[y * grid.frame_w + x] = (d2 <= r2) as u8;
                }
            }
            FoveaMask::from_pixels(s, grid.frame_h, grid.frame_w, values)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Visit {
    /// 1-based frame counter of the state when the fixation was applied.
    pub frame: usize,
    pub patch: PatchIndex,
}

/// Accumulated spatial-cue context after `k` fixations of frame `t` (1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct FoveatedState {
    pub context: Tensor,
    pub k: usize,
    pub t: usize,
    pub history: Vec<Visit>,
}

impl FoveatedState {
    /// Fixations applied within the current frame.
    pub fn current_frame_visits(&self) -> impl Iterator<Item = PatchIndex> + '_ {
        self.history.iter().filter(move |v| v.frame == self.t).map(|v| v.patch)
    }

    pub fn last_fixation(&self) -> Option<PatchIndex> {
        self.history.last().map(|v| v.patch)
    }
}

pub fn init_state(low_res: Tensor) -> Result<FoveatedState> {
    low_res.ensure_finite("initial low-resolution context")?;
    low_res.dims3()?;
    Ok(FoveatedState {
        context: low_res,
        k: 0,
        t: 1,
        history: Vec::new(),
    })
}

fn blend(context: &Tensor, high_res: &Tensor, mask: &FoveaMask, grid: &GridSpec) -> Result<Tensor> {
    if context.shape() != high_res.shape() {
        return Err(Error::ShapeMismatch(format!(
            "context {:?} vs high-resolution map {:?}",
            context.shape(),
            high_res.shape()
        )));
    }
    let (h, w, c) = context.dims3()?;
    if (h, w) != (grid.frame_h, grid.frame_w) {
        return Err(Error::ShapeMismatch(format!("map {h}x{w} vs frame {}x{}", grid.frame_h, grid.frame_w)));
    }
    let e = mask.to_pixels(grid)?;
    let mut out = context.clone();
    let (src, dst) = (high_res.data(), out.data_mut());
    for (i, &m) in e.iter().enumerate() {
        if m == 1 {
            dst[i * c..(i + 1) * c].copy_from_slice(&src[i * c..(i + 1) * c]);
        }
    }
    Ok(out)
}

/// `O_{k+1} = E * H + (1 - E) * O_k` within the current frame.
pub fn update_within_frame(state: &FoveatedState, high_res: &Tensor, mask: &FoveaMask, grid: &GridSpec) -> Result<FoveatedState> {
    let context = blend(&state.context, high_res, mask, grid)?;
    let mut history = state.history.clone();
    history.push(Visit {
        frame: state.t,
        patch: mask.fixation,
    });
    Ok(FoveatedState {
        context,
        k: state.k + 1,
        t: state.t,
        history,
    })
}

/// Carries the end-of-frame context into the next frame, blending in the next
/// frame's sharp content under the first new fixation.
pub fn advance_frame(state: &FoveatedState, high_res_next: &Tensor, first: &FoveaMask, grid: &GridSpec) -> Result<FoveatedState> {
    let context = blend(&state.context, high_res_next, first, grid)?;
    let mut history = state.history.clone();
    history.push(Visit {
        frame: state.t + 1,
        patch: first.fixation,
    });
    Ok(FoveatedState {
        context,
        k: 1,
        t: state.t + 1,
        history,
    })
}

/// How fixations are turned into masks and peripheral blur.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FoveaConfig {
    pub mask_mode: MaskMode,
    /// Circular-mode radius in pixels.
    pub radius: f64,
    pub sigma_max: f64,
    pub blur_distance: BlurDistance,
}

impl Default for FoveaConfig {
    fn default() -> Self {
        Self {
            mask_mode: MaskMode::Patch,
            radius: 12.0,
            sigma_max: DEFAULT_SIGMA_MAX,
            blur_distance: BlurDistance::FrameCenter,
        }
    }
}

impl FoveaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !(self.sigma_max >= 0.0) || !self.sigma_max.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "fovea radius {} / sigma_max {}",
                self.radius, self.sigma_max
            )));
        }
        Ok(())
    }

    pub fn mask(&self, grid: &GridSpec, s: PatchIndex) -> Result<FoveaMask> {
        make_fovea_mask(grid, s, self.mask_mode, self.radius)
    }
}

/// `O_{0,1} = L` with `L` the first frame blurred for the first fixation, then
/// that fixation applied.
pub fn start_state(grid: &GridSpec, first_frame: &Tensor, first: &FixationPoint, cfg: &FoveaConfig) -> Result<FoveatedState> {
    let sigma = peripheral_sigma(first, (grid.frame_h, grid.frame_w), cfg.sigma_max, cfg.blur_distance);
    let low = gaussian_blur(first_frame, sigma)?;
    let patch = crate::grid::point_to_patch(grid, first)?;
    update_within_frame(&init_state(low)?, first_frame, &cfg.mask(grid, patch)?, grid)
}

/// Applies a fixation, either within the current frame or as the first of a new one.
pub fn fixate(
    state: &FoveatedState,
    frame: &Tensor,
    patch: PatchIndex,
    new_frame: bool,
    grid: &GridSpec,
    cfg: &FoveaConfig,
) -> Result<FoveatedState> {
    let mask = cfg.mask(grid, patch)?;
    if new_frame {
        advance_frame(state, frame, &mask, grid)
    } else {
        update_within_frame(state, frame, &mask, grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_map(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> Tensor {
        let data = (0..h * w * c).map(|_| rng.gen_range(-3.0..3.0)).collect();
        Tensor::new(vec![h, w, c], data).unwrap()
    }

    #[test]
    fn blur_identity_and_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_map(&mut rng, 9, 11, 2);
        assert_eq!(gaussian_blur(&m, 0.0).unwrap(), m);
        let c = Tensor::filled(vec![7, 5, 3], 2.5);
        for sigma in [0.5, 2.0, 40.0] {
            let b = gaussian_blur(&c, sigma).unwrap();
            assert!(b.data().iter().all(|v| (v - 2.5).abs() < 1e-5));
        }
    }

    #[test]
    fn blur_impulse_matches_dense_kernel() {
        // dense 2-D oracle: exp(-(dx^2+dy^2)/(2 s^2)) over the (2r+1)^2 window, normalized
        let (n, sigma) = (25usize, 2.0f64);
        let mut m = Tensor::map(n, n, 1);
        m.set(12, 12, 0, 1.0);
        let b = gaussian_blur(&m, sigma).unwrap();
        let r = (3.0 * sigma).ceil() as i64;
        let mut total = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                total += (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            }
        }
        for y in 0..n as i64 {
            for x in 0..n as i64 {
                let (dy, dx) = (y - 12, x - 12);
                let expect = if dy.abs() <= r && dx.abs() <= r {
                    (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp() / total
                } else {
                    0.0
                };
                let got = b.at(y as usize, x as usize, 0) as f64;
                assert!((got - expect).abs() < 1e-7, "({y},{x}) {got} vs {expect}");
            }
        }
    }

    #[test]
    fn blur_preserves_channel_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &sigma in &[0.7, 3.0, 25.0, 64.0] {
            let m = random_map(&mut rng, 13, 17, 2);
            let b = gaussian_blur(&m, sigma).unwrap();
            for c in 0..2 {
                let a: f64 = m.channel_plane(c).unwrap().iter().sum();
                let z: f64 = b.channel_plane(c).unwrap().iter().sum();
                let scale = m.channel_plane(c).unwrap().iter().map(|v| v.abs()).sum::<f64>();
                assert!((a - z).abs() <= 1e-6 * scale, "sigma {sigma}: {a} vs {z}");
            }
        }
    }

    #[test]
    fn blur_rejects_bad_input() {
        let mut m = Tensor::map(3, 3, 1);
        assert!(gaussian_blur(&m, -1.0).is_err());
        m.set(0, 0, 0, f32::NAN);
        assert!(gaussian_blur(&m, 1.0).is_err());
    }

    #[test]
    fn sigma_from_distance() {
        let fp = |x, y| FixationPoint { x, y, duration: 0.0, frame_index: 0 };
        let f = (144, 256);
        assert_eq!(peripheral_sigma(&fp(128.0, 72.0), f, 64.0, BlurDistance::FrameCenter), 0.0);
        // sqrt(128^2 + 72^2) = 146.86 -> 2d = 293.7, capped
        assert_eq!(peripheral_sigma(&fp(0.0, 0.0), f, 64.0, BlurDistance::FrameCenter), 64.0);
        let d = (128f64.powi(2) + 72f64.powi(2)).sqrt();
        assert!((peripheral_sigma(&fp(0.0, 0.0), f, 1e9, BlurDistance::FrameCenter) - 2.0 * d).abs() < 1e-12);
        let a = peripheral_sigma(&fp(100.0, 60.0), f, 1e9, BlurDistance::FrameCenter);
        let b = peripheral_sigma(&fp(156.0, 84.0), f, 1e9, BlurDistance::FrameCenter);
        assert!((a - b).abs() < 1e-12);
        assert_eq!(peripheral_sigma(&fp(10.0, 50.0), f, 1e9, BlurDistance::NearestBorder), 20.0);
    }

    #[test]
    fn patch_mask_has_single_one() {
        let g = GridSpec::paper_default();
        let m = make_fovea_mask(&g, PatchIndex::new(4, 9), MaskMode::Patch, 0.0).unwrap();
        assert_eq!(m.ones(), 1);
        assert_eq!(m.values.len(), 180);
        let px = m.to_pixels(&g).unwrap();
        assert_eq!(px.iter().filter(|&&v| v == 1).count(), 12 * 17);
        assert!(make_fovea_mask(&g, PatchIndex::new(12, 0), MaskMode::Patch, 0.0).is_err());
    }

    #[test]
    fn circular_mask_counts_lattice_points() {
        let g = build_grid(144, 256, 144, 256).unwrap();
        let m = make_fovea_mask(&g, PatchIndex::new(0, 0), MaskMode::Circular, 12.0).unwrap();
        // brute-force lattice count in a disc of radius 12
        let mut count = 0;
        for dy in -12i32..=12 {
            for dx in -12i32..=12 {
                if dx * dx + dy * dy <= 144 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 441);
        assert_eq!(m.ones(), count);
        let all = make_fovea_mask(&g, PatchIndex::new(0, 0), MaskMode::Circular, 400.0).unwrap();
        assert_eq!(all.ones(), 144 * 256);
        assert!(make_fovea_mask(&g, PatchIndex::new(0, 0), MaskMode::Circular, 0.0).is_err());
    }

    #[test]
    fn init_and_update_identities() {
        let g = build_grid(6, 8, 3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let low = random_map(&mut rng, 6, 8, 2);
        let high = random_map(&mut rng, 6, 8, 2);
        let s = init_state(low.clone()).unwrap();
        assert_eq!(s.context, low);
        assert_eq!((s.k, s.t), (0, 1));
        assert!(s.history.is_empty());

        let fix = PatchIndex::new(0, 1);
        let ones = FoveaMask::from_pixels(fix, 6, 8, vec![1; 48]).unwrap();
        let zeros = FoveaMask::from_pixels(fix, 6, 8, vec![0; 48]).unwrap();
        assert_eq!(update_within_frame(&s, &high, &ones, &g).unwrap().context, high);
        assert_eq!(update_within_frame(&s, &high, &zeros, &g).unwrap().context, low);

        let e = make_fovea_mask(&g, fix, MaskMode::Patch, 0.0).unwrap();
        let once = update_within_frame(&s, &high, &e, &g).unwrap();
        let twice = update_within_frame(&once, &high, &e, &g).unwrap();
        assert_eq!(once.context, twice.context);
        assert_eq!(twice.k, 2);
        assert_eq!(twice.history.len(), 2);

        let next = random_map(&mut rng, 6, 8, 2);
        let adv = advance_frame(&twice, &next, &ones, &g).unwrap();
        assert_eq!(adv.context, next);
        assert_eq!((adv.k, adv.t), (1, 2));
        let carry = advance_frame(&twice, &next, &zeros, &g).unwrap();
        assert_eq!(carry.context, twice.context);
        let same = advance_frame(&twice, &twice.context, &e, &g).unwrap();
        assert_eq!(same.context, twice.context);
        assert_eq!(same.history.len(), 3);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let g = build_grid(6, 8, 3, 4).unwrap();
        let s = init_state(Tensor::map(6, 8, 2)).unwrap();
        let e = make_fovea_mask(&g, PatchIndex::new(0, 0), MaskMode::Patch, 0.0).unwrap();
        assert!(update_within_frame(&s, &Tensor::map(6, 8, 3), &e, &g).is_err());
        let other = build_grid(6, 8, 2, 2).unwrap();
        assert!(update_within_frame(&s, &Tensor::map(6, 8, 2), &e, &other).is_err());
    }
}
