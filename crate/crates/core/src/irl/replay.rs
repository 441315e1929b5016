//! Replays demonstrations through the foveated state to recover the feature
//! matrix seen before every fixation decision.

use crate::error::{Error, Result};
use crate::features::SceneSequence;
use crate::grid::{point_to_patch, FixationSequence};
use crate::matrix::Matrix;
use crate::observe::Observer;

/// One demonstrated fixation choice.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    /// `S x d` features observed before the choice.
    pub features: Matrix,
    pub from: usize,
    pub to: usize,
    /// Decisions left in this frame, counting this one.
    pub horizon: usize,
    pub frame: usize,
}

/// The first fixation initializes the state; each later fixation is a
/// decision made from its predecessor. A decision that opens a new frame sees
/// that frame's features with the previous frame's accumulated context.
pub fn replay(obs: &Observer, scene: &SceneSequence, seq: &FixationSequence) -> Result<Vec<Decision>> {
    seq.validate()?;
    let cols = obs.columns(scene)?;
    let points = &seq.points;
    if let Some(p) = points.iter().find(|p| p.frame_index >= scene.len()) {
        return Err(Error::Validation(format!(
            "driver {}: fixation in frame {} of a {}-frame scene",
            seq.driver_id,
            p.frame_index,
            scene.len()
        )));
    }
    let grid = &obs.grid;
    let patches = points
        .iter()
        .map(|p| point_to_patch(grid, p))
        .collect::<Result<Vec<_>>>()?;
    let first = &points[0];
    let mut state = obs.start(scene, first.frame_index, first)?;
    let mut frame = first.frame_index;
    let mut out = Vec::with_capacity(points.len().saturating_sub(1));
    for j in 1..points.len() {
        let f = points[j].frame_index;
        let horizon = points[j..].iter().take_while(|p| p.frame_index == f).count();
        let features = obs.phi(&state, &cols[f])?;
        out.push(Decision {
            features,
            from: grid.state(patches[j - 1]),
            to: grid.state(patches[j]),
            horizon,
            frame: f,
        });
        state = obs.fixate(&state, scene, f, patches[j], f != frame)?;
        frame = f;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureConfig;
    use crate::fovea::FoveaConfig;
    use crate::grid::{build_grid, FixationPoint, PatchIndex};
    use crate::synth::{synth_scene, SynthParams};

    #[test]
    fn decisions_follow_fixations() {
        let g = build_grid(72, 136, 12, 17).unwrap();
        let scene = synth_scene(4, &g, &SynthParams::default()).unwrap();
        let obs = Observer::new(g.clone(), FeatureConfig::default(), FoveaConfig::default()).unwrap();
        let at = |r, c, f| {
            let mut p = obs.point_at(PatchIndex::new(r, c), f).unwrap();
            p.duration = 250.0;
            p
        };
        let pts: Vec<FixationPoint> = vec![at(3, 4, 0), at(2, 2, 0), at(2, 3, 0), at(4, 4, 1), at(1, 1, 3)];
        let seq = FixationSequence::new("d", "v", pts).unwrap();
        let ds = replay(&obs, &scene, &seq).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.iter().map(|d| d.horizon).collect::<Vec<_>>(), vec![2, 1, 1, 1]);
        assert_eq!(ds.iter().map(|d| d.frame).collect::<Vec<_>>(), vec![0, 0, 1, 3]);
        assert_eq!(ds[0].from, g.state(PatchIndex::new(3, 4)));
        assert_eq!(ds[3].to, g.state(PatchIndex::new(1, 1)));
        assert!(ds.iter().all(|d| d.features.rows == 48 && d.features.cols == 11));
        // frame-level columns of a new-frame decision come from the new frame
        let cols = obs.columns(&scene).unwrap();
        assert_eq!(ds[2].features.row(0)[2..], cols[1].matrix.row(0)[..]);
    }
}
