//! Saliency evaluation metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saliency::SaliencyMap;

/// Guards logs and divisions in [`kld`].
pub const KLD_EPS: f64 = 2.2e-16;
/// F-score binarization threshold as a fraction of the prediction maximum.
pub const DEFAULT_F_THRESHOLD: f64 = 0.5;
/// Negatives drawn per positive fixation by [`pool_negatives`].
pub const NEGATIVES_PER_POSITIVE: usize = 10;

/// A pixel as `(row, col)`.
pub type Pixel = (usize, usize);

fn same_dims(a: &SaliencyMap, b: &SaliencyMap) -> Result<()> {
    if (a.height, a.width) != (b.height, b.width) {
        return Err(Error::ShapeMismatch(format!(
            "maps {}x{} and {}x{}",
            a.height, a.width, b.height, b.width
        )));
    }
    Ok(())
}

/// `KL(gt || pred)` in the saliency-benchmark form `sum gt * ln(gt / (pred + eps) + eps)`.
pub fn kld(pred: &SaliencyMap, gt: &SaliencyMap) -> Result<f64> {
    same_dims(pred, gt)?;
    pred.check_normalized()?;
    gt.check_normalized()?;
    Ok(gt
        .data
        .iter()
        .zip(&pred.data)
        .map(|(&g, &p)| g * (g / (p + KLD_EPS) + KLD_EPS).ln())
        .sum())
}

/// Pearson correlation over pixels.
pub fn cc(pred: &SaliencyMap, gt: &SaliencyMap) -> Result<f64> {
    same_dims(pred, gt)?;
    if pred.is_empty() {
        return Err(Error::Empty("saliency map".into()));
    }
    let n = pred.len() as f64;
    let mp = pred.data.iter().sum::<f64>() / n;
    let mg = gt.data.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&p, &g) in pred.data.iter().zip(&gt.data) {
        let (dp, dg) = (p - mp, g - mg);
        sxy += dp * dg;
        sxx += dp * dp;
        syy += dg * dg;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ConstantMap);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

fn values_at(map: &SaliencyMap, pixels: &[Pixel]) -> Result<Vec<f64>> {
    pixels
        .iter()
        .map(|&(y, x)| {
            if y < map.height && x < map.width {
                Ok(map.at(y, x))
            } else {
                Err(Error::OutOfBounds(format!("pixel ({y}, {x}) in a {}x{} map", map.height, map.width)))
            }
        })
        .collect()
}

/// Shuffled AUC: the probability that a positive fixation scores above a
/// negative one, with ties counted half.
pub fn sauc(pred: &SaliencyMap, positives: &[Pixel], negatives: &[Pixel]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Empty("s-AUC needs positive and negative fixations".into()));
    }
    let pos = values_at(pred, positives)?;
    let mut neg = values_at(pred, negatives)?;
    neg.sort_by(f64::total_cmp);
    let mut score = 0.0;
    for p in pos {
        let below = neg.partition_point(|&v| v < p);
        let not_above = neg.partition_point(|&v| v <= p);
        score += below as f64 + 0.5 * (not_above - below) as f64;
    }
    Ok(score / (positives.len() as f64 * neg.len() as f64))
}

/// Fixations from every video except `exclude`, subsampled to `count` with a seeded shuffle.
pub fn pool_negatives(pools: &[(String, Vec<Pixel>)], exclude: &str, count: usize, seed: u64) -> Vec<Pixel> {
    let mut all: Vec<Pixel> = pools
        .iter()
        .filter(|(video, _)| video != exclude)
        .flat_map(|(_, px)| px.iter().copied())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    all.truncate(count);
    all
}

/// Binarizes `pred` at `threshold * max(pred)` and scores it against `gt`.
pub fn f_beta(pred: &SaliencyMap, gt: &[bool], threshold: f64, beta2: f64) -> Result<f64> {
    if gt.len() != pred.len() {
        return Err(Error::ShapeMismatch(format!("{} mask pixels for a {}-pixel map", gt.len(), pred.len())));
    }
    if !(threshold > 0.0 && threshold < 1.0) || !(beta2 > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold}, beta^2 {beta2}")));
    }
    if !gt.iter().any(|&g| g) {
        return Err(Error::Empty("ground-truth mask has no positive pixels".into()));
    }
    let cut = threshold * pred.max();
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    for (&p, &g) in pred.data.iter().zip(gt) {
        match (p >= cut, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            _ => {}
        }
    }
    let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let recall = tp as f64 / (tp + fneg) as f64;
    if precision + recall == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + beta2) * precision * recall / (beta2 * precision + recall))
}

/// Ground-truth pixels at or above half the map's maximum.
pub fn binarize_gt(gt: &SaliencyMap) -> Vec<bool> {
    let cut = 0.5 * gt.max();
    gt.data.iter().map(|&v| v >= cut).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub video_id: String,
    pub frame_index: usize,
    pub kld: f64,
    pub cc: f64,
    pub sauc: f64,
    pub f_beta: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub kld: f64,
    pub cc: f64,
    pub sauc: f64,
    pub f_beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub frames: Vec<FrameMetrics>,
    /// Means over `frames`.
    pub aggregate: MetricAggregate,
    pub frames_evaluated: usize,
    pub seed: u64,
    pub f_threshold: f64,
}

impl MetricReport {
    pub fn new(frames: Vec<FrameMetrics>, seed: u64, f_threshold: f64) -> Self {
        let n = frames.len().max(1) as f64;
        let mean = |f: fn(&FrameMetrics) -> f64| frames.iter().map(f).sum::<f64>() / n;
        let aggregate = MetricAggregate {
            kld: mean(|m| m.kld),
            cc: mean(|m| m.cc),
            sauc: mean(|m| m.sauc),
            f_beta: mean(|m| m.f_beta),
        };
        Self {
            frames_evaluated: frames.len(),
            frames,
            aggregate,
            seed,
            f_threshold,
        }
    }

    /// Per-frame rows followed by a `mean` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("video_id,frame_index,kld,cc,sauc,f_beta\n");
        for m in &self.frames {
            out.push_str(&format!("{},{},{},{},{},{}\n", m.video_id, m.frame_index, m.kld, m.cc, m.sauc, m.f_beta));
        }
        let a = &self.aggregate;
        out.push_str(&format!("mean,,{},{},{},{}\n", a.kld, a.cc, a.sauc, a.f_beta));
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(h: usize, w: usize, v: &[f64]) -> SaliencyMap {
        SaliencyMap::from_weights(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn kld_examples() {
        let p = map(2, 2, &[0.1, 0.2, 0.3, 0.4]);
        assert!(kld(&p, &p).unwrap().abs() < 1e-9);
        let mut delta = vec![0.0; 16];
        delta[5] = 1.0;
        let v = kld(&SaliencyMap::uniform(4, 4), &map(4, 4, &delta)).unwrap();
        assert!((v - 2.772588722239781).abs() < 1e-9);
        assert!(kld(&p, &SaliencyMap::uniform(2, 3)).is_err());
        let raw = SaliencyMap {
            height: 1,
            width: 2,
            data: vec![0.7, 0.7],
        };
        assert!(kld(&raw, &raw).is_err());
    }

    #[test]
    fn cc_examples() {
        let g = map(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        assert!((cc(&g, &g).unwrap() - 1.0).abs() < 1e-12);
        let scaled = map(2, 2, &g.data.iter().map(|v| 2.5 * v + 0.3).collect::<Vec<_>>());
        assert!((cc(&scaled, &g).unwrap() - 1.0).abs() < 1e-9);
        let complement = map(2, 2, &g.data.iter().map(|v| g.max() - v).collect::<Vec<_>>());
        assert!((cc(&complement, &g).unwrap() + 1.0).abs() < 1e-9);
        assert!(matches!(cc(&SaliencyMap::uniform(2, 2), &g), Err(Error::ConstantMap)));
    }

    #[test]
    fn sauc_examples() {
        let p = map(1, 4, &[0.9, 0.8, 0.7, 0.1]);
        assert_eq!(sauc(&p, &[(0, 0), (0, 1)], &[(0, 2), (0, 3)]).unwrap(), 1.0);
        let p = map(1, 4, &[0.9, 0.4, 0.7, 0.1]);
        assert_eq!(sauc(&p, &[(0, 0), (0, 1)], &[(0, 2), (0, 3)]).unwrap(), 0.75);
        let u = SaliencyMap::uniform(3, 3);
        assert_eq!(sauc(&u, &[(0, 0), (2, 2)], &[(1, 1), (0, 2), (2, 0)]).unwrap(), 0.5);
        assert!(sauc(&u, &[], &[(0, 0)]).is_err());
        assert!(sauc(&u, &[(3, 0)], &[(0, 0)]).is_err());
    }

    #[test]
    fn f_beta_examples() {
        let p = map(1, 4, &[0.4, 0.4, 0.1, 0.1]);
        assert_eq!(f_beta(&p, &[true, true, false, false], 0.5, 1.0).unwrap(), 1.0);
        assert_eq!(f_beta(&p, &[false, false, true, true], 0.5, 1.0).unwrap(), 0.0);
        // precision 1/2, recall 1
        let v = f_beta(&p, &[true, false, false, false], 0.5, 1.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
        assert!(f_beta(&p, &[false; 4], 0.5, 1.0).is_err());
        assert!(f_beta(&p, &[true; 4], 1.0, 1.0).is_err());
    }

    #[test]
    fn negatives_skip_own_video_and_are_seeded() {
        let pools = vec![
            ("a".to_string(), vec![(0, 0); 5]),
            ("b".to_string(), (0..30).map(|i| (1, i)).collect()),
            ("c".to_string(), (0..30).map(|i| (2, i)).collect()),
        ];
        let n = pool_negatives(&pools, "a", 20, 4);
        assert_eq!(n.len(), 20);
        assert!(n.iter().all(|p| p.0 != 0));
        assert_eq!(n, pool_negatives(&pools, "a", 20, 4));
        assert_ne!(n, pool_negatives(&pools, "a", 20, 5));
        assert_eq!(pool_negatives(&pools, "b", 1000, 0).len(), 35);
    }

    #[test]
    fn report_serializes() {
        let f = |i, k| FrameMetrics {
            video_id: "v".into(),
            frame_index: i,
            kld: k,
            cc: 0.5,
            sauc: 0.75,
            f_beta: 1.0,
        };
        let r = MetricReport::new(vec![f(0, 1.0), f(1, 2.0)], 3, 0.5);
        assert_eq!(r.aggregate.kld, 1.5);
        assert!(r.to_csv().ends_with("mean,,1.5,0.5,0.75,1\n"));
        let back: MetricReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    fn weights(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..1.0, n).prop_filter("positive mass", |v| v.iter().sum::<f64>() > 1e-6)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn kld_nonnegative_and_sauc_bounded(a in weights(12), b in weights(12), split in 1usize..11) {
            let p = map(3, 4, &a);
            let g = map(3, 4, &b);
            prop_assert!(kld(&p, &g).unwrap() >= -1e-12);
            let px: Vec<Pixel> = (0..12).map(|i| (i / 4, i % 4)).collect();
            let s = sauc(&p, &px[..split], &px[split..]).unwrap();
            prop_assert!((0.0..=1.0).contains(&s));
        }
    }

    proptest! {
        #[test]
        fn cc_symmetric_and_affine_invariant(a in weights(9), b in weights(9), scale in 0.1f64..10.0, shift in 0.0f64..5.0) {
            let p = map(3, 3, &a);
            let g = map(3, 3, &b);
            if let (Ok(x), Ok(y)) = (cc(&p, &g), cc(&g, &p)) {
                prop_assert!((x - y).abs() < 1e-12);
                let moved = map(3, 3, &a.iter().map(|v| scale * v + shift).collect::<Vec<_>>());
                prop_assert!((cc(&moved, &g).unwrap() - x).abs() < 1e-9);
            }
        }

        #[test]
        fn sauc_invariant_to_monotone_transforms(a in weights(12), split in 1usize..11) {
            let p = map(3, 4, &a);
            let cubed = map(3, 4, &a.iter().map(|v| v.powi(3) + 0.01).collect::<Vec<_>>());
            let px: Vec<Pixel> = (0..12).map(|i| (i / 4, i % 4)).collect();
            prop_assert_eq!(sauc(&p, &px[..split], &px[split..]).unwrap(), sauc(&cubed, &px[..split], &px[split..]).unwrap());
        }
    }
}
