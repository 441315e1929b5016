//! Per-patch reward network: shared-weight dense layers (1x1 convolutions over
//! the patch grid) with rectifier activations, optional batch normalization
//! after each activation, and a scalar linear head.

mod adam;
mod schedule;

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};
pub use schedule::LrSchedule;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub normalization: bool,
    /// Weight on the old running statistic when blending in a batch.
    pub norm_momentum: f64,
    pub norm_eps: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            input_dim: 11,
            hidden: vec![52, 34, 20, 20],
            normalization: true,
            norm_momentum: 0.9,
            norm_eps: 1e-5,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArgument(format!(
                "network widths must be positive: input {}, hidden {:?}",
                self.input_dim, self.hidden
            )));
        }
        if !(0.0..1.0).contains(&self.norm_momentum) || !(self.norm_eps > 0.0) {
            return Err(Error::InvalidArgument("normalization momentum/eps".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        let weight = (0..inputs * outputs).map(|_| rng.gen_range(-bound..=bound)).collect();
        Self {
            inputs,
            outputs,
            weight,
            bias: vec![0.0; outputs],
        }
    }

    fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.rows, self.outputs);
        for s in 0..x.rows {
            let xr = x.row(s);
            let or = out.row_mut(s);
            for (o, acc) in or.iter_mut().enumerate() {
                let w = &self.weight[o * self.inputs..(o + 1) * self.inputs];
                *acc = self.bias[o] + w.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Norm {
    pub scale: Vec<f64>,
    pub shift: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl Norm {
    fn new(width: usize) -> Self {
        Self {
            scale: vec![1.0; width],
            shift: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardNetParams {
    pub config: NetConfig,
    pub hidden: Vec<Dense>,
    /// One per hidden layer when normalization is enabled, else empty.
    pub norms: Vec<Norm>,
    pub head: Dense,
    /// Bumped on every parameter update; caches record it to detect staleness.
    pub generation: u64,
}

pub fn init_params(config: &NetConfig, seed: u64) -> Result<RewardNetParams> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hidden = Vec::with_capacity(config.hidden.len());
    let mut fan_in = config.input_dim;
    for &w in &config.hidden {
        hidden.push(Dense::init(fan_in, w, &mut rng));
        fan_in = w;
    }
    let head = Dense::init(fan_in, 1, &mut rng);
    let norms = if config.normalization {
        config.hidden.iter().map(|&w| Norm::new(w)).collect()
    } else {
        Vec::new()
    };
    Ok(RewardNetParams {
        config: config.clone(),
        hidden,
        norms,
        head,
        generation: 0,
    })
}

impl RewardNetParams {
    /// Trainable parameter tensors in canonical order: per hidden layer
    /// weight, bias, then (if normalized) scale, shift; finally head weight, bias.
    pub fn trainable(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for (i, l) in self.hidden.iter().enumerate() {
            out.push(&l.weight);
            out.push(&l.bias);
            if let Some(n) = self.norms.get(i) {
                out.push(&n.scale);
                out.push(&n.shift);
            }
        }
        out.push(&self.head.weight);
        out.push(&self.head.bias);
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        let mut norms = self.norms.iter_mut();
        for l in self.hidden.iter_mut() {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
            if let Some(n) = norms.next() {
                out.push(&mut n.scale);
                out.push(&mut n.shift);
            }
        }
        out.push(&mut self.head.weight);
        out.push(&mut self.head.bias);
        out
    }

    /// Names matching [`Self::trainable`], used for checkpoints.
    pub fn trainable_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for i in 0..self.hidden.len() {
            out.push(format!("layer{i}.weight"));
            out.push(format!("layer{i}.bias"));
            if self.config.normalization {
                out.push(format!("norm{i}.scale"));
                out.push(format!("norm{i}.shift"));
            }
        }
        out.push("head.weight".into());
        out.push("head.bias".into());
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.trainable().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.trainable().iter().all(|t| t.iter().all(|v| v.is_finite()))
            && self
                .norms
                .iter()
                .all(|n| n.running_mean.iter().chain(&n.running_var).all(|v| v.is_finite()))
    }

    /// Folds the batch statistics recorded in a train-mode cache into the running averages.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) -> Result<()> {
        if !cache.train_mode || self.norms.is_empty() {
            return Ok(());
        }
        if cache.generation != self.generation {
            return Err(Error::StaleCache("running-stat update from an older forward pass".into()));
        }
        let m = self.config.norm_momentum;
        let rows = cache.rows as f64;
        let unbias = if cache.rows > 1 { rows / (rows - 1.0) } else { 1.0 };
        for (norm, lc) in self.norms.iter_mut().zip(&cache.layers) {
            let (Some(mean), Some(var)) = (&lc.batch_mean, &lc.batch_var) else { continue };
            for j in 0..norm.scale.len() {
                norm.running_mean[j] = m * norm.running_mean[j] + (1.0 - m) * mean[j];
                norm.running_var[j] = m * norm.running_var[j] + (1.0 - m) * var[j] * unbias;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct LayerCache {
    pre: Matrix,
    xhat: Option<Matrix>,
    inv_std: Option<Vec<f64>>,
    batch_mean: Option<Vec<f64>>,
    batch_var: Option<Vec<f64>>,
    out: Matrix,
}

/// Intermediates of one forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    generation: u64,
    train_mode: bool,
    rows: usize,
    input: Matrix,
    layers: Vec<LayerCache>,
}

impl ForwardCache {
    pub fn rows(&self) -> usize {
        self.rows
    }
}

/// Evaluates rewards for each row of `features`. In train mode normalization
/// uses statistics of this batch of rows; otherwise the running averages.
pub fn forward(params: &RewardNetParams, features: &Matrix, train_mode: bool) -> Result<(Vec<f64>, ForwardCache)> {
    if features.cols != params.config.input_dim {
        return Err(Error::ShapeMismatch(format!(
            "feature width {} vs network input {}",
            features.cols, params.config.input_dim
        )));
    }
    if features.rows == 0 {
        return Err(Error::Empty("no feature rows".into()));
    }
    if !features.is_finite() {
        return Err(Error::NonFinite("reward network input".into()));
    }
    let eps = params.config.norm_eps;
    let rows = features.rows;
    let mut layers = Vec::with_capacity(params.hidden.len());
    let mut x = features.clone();
    for (i, dense) in params.hidden.iter().enumerate() {
        let pre = dense.apply(&x);
        let mut act = pre.clone();
        act.data.iter_mut().for_each(|v| *v = v.max(0.0));
        let width = dense.outputs;
        let mut lc = LayerCache {
            pre,
            xhat: None,
            inv_std: None,
            batch_mean: None,
            batch_var: None,
            out: Matrix::zeros(0, 0),
        };
        if let Some(norm) = params.norms.get(i) {
            let (mean, var) = if train_mode {
                let mut mean = vec![0.0; width];
                for s in 0..rows {
                    for (m, v) in mean.iter_mut().zip(act.row(s)) {
                        *m += v;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= rows as f64);
                let mut var = vec![0.0; width];
                for s in 0..rows {
                    for ((q, v), m) in var.iter_mut().zip(act.row(s)).zip(&mean) {
                        *q += (v - m) * (v - m);
                    }
                }
                var.iter_mut().for_each(|q| *q /= rows as f64);
                (mean, var)
            } else {
                (norm.running_mean.clone(), norm.running_var.clone())
            };
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
            let mut xhat = act;
            let mut out = Matrix::zeros(rows, width);
            for s in 0..rows {
                let xr = xhat.row_mut(s);
                for j in 0..width {
                    xr[j] = (xr[j] - mean[j]) * inv_std[j];
                }
                let or = out.row_mut(s);
                for j in 0..width {
                    or[j] = norm.scale[j] * xr[j] + norm.shift[j];
                }
            }
            lc.xhat = Some(xhat);
            lc.inv_std = Some(inv_std);
            if train_mode {
                lc.batch_mean = Some(mean);
                lc.batch_var = Some(var);
            }
            lc.out = out;
        } else {
            lc.out = act;
        }
        if !lc.out.is_finite() {
            return Err(Error::NonFinite(format!("activations of hidden layer {i}")));
        }
        x = lc.out.clone();
        layers.push(lc);
    }
    let r: Vec<f64> = params.head.apply(&x).data;
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("reward output".into()));
    }
    Ok((
        r,
        ForwardCache {
            generation: params.generation,
            train_mode,
            rows,
            input: features.clone(),
            layers,
        },
    ))
}

/// Gradients with the same layout as [`RewardNetParams::trainable`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &RewardNetParams) -> Self {
        Self {
            tensors: params.trainable().iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, k: f64) {
        self.tensors.iter_mut().flatten().for_each(|g| *g *= k);
    }
}

/// Exact gradient of `sum_s grad_r[s] * r[s]` with respect to every trainable parameter.
pub fn backward(params: &RewardNetParams, cache: &ForwardCache, grad_r: &[f64]) -> Result<Gradients> {
    if cache.generation != params.generation {
        return Err(Error::StaleCache(format!(
            "cache from generation {}, parameters at {}",
            cache.generation, params.generation
        )));
    }
    if cache.layers.len() != params.hidden.len() || cache.input.cols != params.config.input_dim {
        return Err(Error::StaleCache("cache does not match network topology".into()));
    }
    if grad_r.len() != cache.rows {
        return Err(Error::ShapeMismatch(format!("{} reward gradients for {} rows", grad_r.len(), cache.rows)));
    }
    let rows = cache.rows;
    let mut per_layer: Vec<(Vec<f64>, Vec<f64>, Option<(Vec<f64>, Vec<f64>)>)> = Vec::new();

    // head
    let last = cache.layers.last().map(|l| &l.out).unwrap_or(&cache.input);
    let hw = &params.head.weight;
    let mut head_w = vec![0.0; hw.len()];
    let head_b = vec![grad_r.iter().sum::<f64>()];
    let mut g = Matrix::zeros(rows, hw.len());
    for s in 0..rows {
        let gr = grad_r[s];
        for (j, (dw, x)) in head_w.iter_mut().zip(last.row(s)).enumerate() {
            *dw += gr * x;
            g.row_mut(s)[j] = gr * hw[j];
        }
    }

    for i in (0..params.hidden.len()).rev() {
        let lc = &cache.layers[i];
        let dense = &params.hidden[i];
        let width = dense.outputs;
        let mut norm_grads = None;
        // gradient w.r.t. the rectifier output
        let dact = if let Some(norm) = params.norms.get(i) {
            let xhat = lc.xhat.as_ref().expect("normalized layer caches xhat");
            let inv_std = lc.inv_std.as_ref().expect("normalized layer caches inv_std");
            let mut dscale = vec![0.0; width];
            let mut dshift = vec![0.0; width];
            for s in 0..rows {
                for j in 0..width {
                    dscale[j] += g.get(s, j) * xhat.get(s, j);
                    dshift[j] += g.get(s, j);
                }
            }
            let mut dact = Matrix::zeros(rows, width);
            if cache.train_mode {
                // d xhat = g * scale; d act = inv_std * (dxhat - mean(dxhat) - xhat * mean(dxhat * xhat))
                let n = rows as f64;
                let mut sum_dx = vec![0.0; width];
                let mut sum_dx_x = vec![0.0; width];
                for s in 0..rows {
                    for j in 0..width {
                        let dx = g.get(s, j) * norm.scale[j];
                        sum_dx[j] += dx;
                        sum_dx_x[j] += dx * xhat.get(s, j);
                    }
                }
                for s in 0..rows {
                    for j in 0..width {
                        let dx = g.get(s, j) * norm.scale[j];
                        dact.row_mut(s)[j] = inv_std[j] * (dx - sum_dx[j] / n - xhat.get(s, j) * sum_dx_x[j] / n);
                    }
                }
            } else {
                for s in 0..rows {
                    for j in 0..width {
                        dact.row_mut(s)[j] = g.get(s, j) * norm.scale[j] * inv_std[j];
                    }
                }
            }
            norm_grads = Some((dscale, dshift));
            dact
        } else {
            g
        };
        let mut dpre = dact;
        for (d, p) in dpre.data.iter_mut().zip(&lc.pre.data) {
            if *p <= 0.0 {
                *d = 0.0;
            }
        }
        let x_in = if i == 0 { &cache.input } else { &cache.layers[i - 1].out };
        let mut dw = vec![0.0; dense.weight.len()];
        let mut db = vec![0.0; width];
        let mut g_prev = Matrix::zeros(rows, dense.inputs);
        for s in 0..rows {
            let xr = x_in.row(s);
            let dr = dpre.row(s);
            for o in 0..width {
                let d = dr[o];
                if d == 0.0 {
                    continue;
                }
                db[o] += d;
                let wrow = &dense.weight[o * dense.inputs..(o + 1) * dense.inputs];
                let dwrow = &mut dw[o * dense.inputs..(o + 1) * dense.inputs];
                for k in 0..dense.inputs {
                    dwrow[k] += d * xr[k];
                }
                let gp = g_prev.row_mut(s);
                for k in 0..dense.inputs {
                    gp[k] += d * wrow[k];
                }
            }
        }
        per_layer.push((dw, db, norm_grads));
        g = g_prev;
    }

    per_layer.reverse();
    let mut tensors = Vec::new();
    for (dw, db, ng) in per_layer {
        tensors.push(dw);
        tensors.push(db);
        if let Some((ds, dh)) = ng {
            tensors.push(ds);
            tensors.push(dh);
        }
    }
    tensors.push(head_w);
    tensors.push(head_b);
    Ok(Gradients { tensors })
}

/// Maps per-patch feature rows to per-patch rewards.
pub trait RewardModel {
    fn input_dim(&self) -> usize;
    fn rewards(&self, features: &Matrix) -> Result<Vec<f64>>;
}

impl RewardModel for RewardNetParams {
    fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    /// Evaluation-mode forward pass.
    fn rewards(&self, features: &Matrix) -> Result<Vec<f64>> {
        forward(self, features, false).map(|(r, _)| r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(normalization: bool) -> NetConfig {
        NetConfig {
            input_dim: 3,
            hidden: vec![5, 4],
            normalization,
            ..Default::default()
        }
    }

    fn features(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let cfg = NetConfig::default();
        let a = init_params(&cfg, 11).unwrap();
        assert_eq!(a, init_params(&cfg, 11).unwrap());
        assert_ne!(a, init_params(&cfg, 12).unwrap());
        for l in a.hidden.iter().chain(std::iter::once(&a.head)) {
            let bound = (6.0 / (l.inputs + l.outputs) as f64).sqrt();
            assert!(l.weight.iter().all(|w| w.abs() <= bound));
            assert!(l.bias.iter().all(|&b| b == 0.0));
        }
        assert!(a.norms.iter().all(|n| n.scale.iter().all(|&s| s == 1.0) && n.shift.iter().all(|&s| s == 0.0)));
    }

    #[test]
    fn parameter_count_arithmetic() {
        let cfg = NetConfig {
            input_dim: 3,
            hidden: vec![2],
            normalization: true,
            ..Default::default()
        };
        let p = init_params(&cfg, 0).unwrap();
        assert_eq!(p.parameter_count(), (3 * 2 + 2) + (2 + 1) + (2 + 2));
        let cfg = NetConfig { normalization: false, ..cfg };
        assert_eq!(init_params(&cfg, 0).unwrap().parameter_count(), 11);
    }

    #[test]
    fn zero_network_gives_zero_reward() {
        let mut p = init_params(&small_config(false), 3).unwrap();
        for t in p.trainable_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
        let (r, _) = forward(&p, &features(7, 3, 1), false).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hand_computed_single_layer() {
        let cfg = NetConfig {
            input_dim: 2,
            hidden: vec![2],
            normalization: false,
            ..Default::default()
        };
        let mut p = init_params(&cfg, 0).unwrap();
        p.hidden[0].weight = vec![1.0, 0.0, 0.0, 1.0];
        p.head.weight = vec![1.0, 1.0];
        let (r, _) = forward(&p, &Matrix::from_vec(1, 2, vec![1.0, 2.0]).unwrap(), false).unwrap();
        assert_eq!(r, vec![3.0]);
    }

    #[test]
    fn rows_are_independent_without_normalization() {
        let p = init_params(&small_config(false), 5).unwrap();
        let x = features(6, 3, 2);
        let (r, _) = forward(&p, &x, true).unwrap();
        let perm = [3, 0, 5, 1, 4, 2];
        let mut xp = Matrix::zeros(6, 3);
        for (i, &j) in perm.iter().enumerate() {
            xp.row_mut(i).copy_from_slice(x.row(j));
        }
        let (rp, _) = forward(&p, &xp, true).unwrap();
        for (i, &j) in perm.iter().enumerate() {
            assert_eq!(rp[i], r[j]);
        }
    }

    #[test]
    fn shape_and_cache_errors() {
        let mut p = init_params(&small_config(true), 5).unwrap();
        assert!(forward(&p, &features(4, 2, 0), false).is_err());
        let (_, cache) = forward(&p, &features(4, 3, 0), true).unwrap();
        assert!(backward(&p, &cache, &[1.0; 3]).is_err());
        p.generation += 1;
        assert!(matches!(backward(&p, &cache, &[1.0; 4]), Err(Error::StaleCache(_))));
    }

    #[test]
    fn backward_is_linear_in_upstream_gradient() {
        let p = init_params(&small_config(true), 8).unwrap();
        let x = features(9, 3, 4);
        let (_, cache) = forward(&p, &x, true).unwrap();
        let zero = backward(&p, &cache, &[0.0; 9]).unwrap();
        assert_eq!(zero.norm(), 0.0);
        let g1: Vec<f64> = (0..9).map(|i| (i as f64 - 4.0) * 0.3).collect();
        let g2: Vec<f64> = g1.iter().map(|v| 2.0 * v).collect();
        let a = backward(&p, &cache, &g1).unwrap();
        let b = backward(&p, &cache, &g2).unwrap();
        for (x, y) in a.tensors.iter().flatten().zip(b.tensors.iter().flatten()) {
            assert!((2.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }

    #[test]
    fn eval_forward_is_pure() {
        let p = init_params(&small_config(true), 8).unwrap();
        let before = p.clone();
        let x = features(5, 3, 1);
        let (r1, _) = forward(&p, &x, false).unwrap();
        let (r2, _) = forward(&p, &x, false).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(p, before);
    }

    #[test]
    fn running_stats_track_batches() {
        let mut p = init_params(&small_config(true), 8).unwrap();
        let x = features(64, 3, 1);
        for _ in 0..200 {
            let (_, cache) = forward(&p, &x, true).unwrap();
            p.update_running_stats(&cache).unwrap();
        }
        let (rt, _) = forward(&p, &x, true).unwrap();
        let (re, _) = forward(&p, &x, false).unwrap();
        // running variance is the unbiased estimate, so eval differs slightly from train
        for (a, b) in rt.iter().zip(&re) {
            assert!((a - b).abs() < 0.05 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    fn finite_difference_error(normalization: bool, seed: u64) -> f64 {
        let mut p = init_params(&small_config(normalization), seed).unwrap();
        for n in p.norms.iter_mut() {
            n.scale.iter_mut().enumerate().for_each(|(j, s)| *s = 0.7 + 0.1 * j as f64);
            n.shift.iter_mut().enumerate().for_each(|(j, s)| *s = 0.05 * j as f64);
        }
        // A unit dead on every row has an exactly-zero analytic gradient that the
        // relative-error metric cannot score; keep deeper layers excitatory.
        for (i, l) in p.hidden.iter_mut().enumerate() {
            l.bias.iter_mut().enumerate().for_each(|(j, b)| *b = 0.3 + 0.02 * j as f64);
            if i > 0 {
                l.weight.iter_mut().for_each(|w| *w = w.abs());
            }
        }
        // positive biases and enough rows keep every rectifier active somewhere
        let x = features(16, 3, seed + 100);
        let grad_r: Vec<f64> = (0..16).map(|i| (1.3 * i as f64 + 0.4).sin()).collect();
        let objective = |p: &RewardNetParams| -> f64 {
            let (r, _) = forward(p, &x, true).unwrap();
            r.iter().zip(&grad_r).map(|(a, b)| a * b).sum()
        };
        let (_, cache) = forward(&p, &x, true).unwrap();
        let analytic = backward(&p, &cache, &grad_r).unwrap();
        assert!(p.parameter_count() <= 500);
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        let shapes: Vec<usize> = p.trainable().iter().map(|t| t.len()).collect();
        for (ti, &n) in shapes.iter().enumerate() {
            for k in 0..n {
                let orig = p.trainable()[ti][k];
                p.trainable_mut()[ti][k] = orig + h;
                let up = objective(&p);
                p.trainable_mut()[ti][k] = orig - h;
                let down = objective(&p);
                p.trainable_mut()[ti][k] = orig;
                let numeric = (up - down) / (2.0 * h);
                let a = analytic.tensors[ti][k];
                worst = worst.max((a - numeric).abs() / (a.abs() + numeric.abs() + 1e-12));
            }
        }
        worst
    }

    #[test]
    fn gradients_match_central_differences() {
        for seed in 0..4 {
            let e = finite_difference_error(false, seed);
            assert!(e < 1e-4, "seed {seed}: {e}");
            let e = finite_difference_error(true, seed);
            assert!(e < 1e-3, "normalized, seed {seed}: {e}");
        }
    }
}
