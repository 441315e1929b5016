use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ActionLabel, GridSpec, PatchIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionModel {
    /// One action per destination patch; `next(s, a) = a`.
    #[default]
    PatchTarget,
    /// Single-patch moves labelled by [`ActionLabel`], saturating at borders.
    SevenMacro,
}

/// Deterministic fixation MDP over the patch grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FixationMdp {
    pub rows: usize,
    pub cols: usize,
    pub action_model: ActionModel,
    pub gamma: f64,
    /// Default number of decisions per solve.
    pub horizon: usize,
    num_actions: usize,
    next: Vec<u32>,
}

fn step_toward(from: usize, to: usize) -> isize {
    (to as isize - from as isize).signum()
}

fn macro_next(p: PatchIndex, label: ActionLabel, center: PatchIndex, rows: usize, cols: usize) -> PatchIndex {
    let (dr, dc): (isize, isize) = match label {
        ActionLabel::Left => (0, -1),
        ActionLabel::Right => (0, 1),
        ActionLabel::Up => (-1, 0),
        ActionLabel::Down => (1, 0),
        ActionLabel::Stay => (0, 0),
        ActionLabel::FocusInward => (step_toward(p.row, center.row), step_toward(p.col, center.col)),
        ActionLabel::FocusOutward => (-step_toward(p.row, center.row), -step_toward(p.col, center.col)),
    };
    let r = (p.row as isize + dr).clamp(0, rows as isize - 1) as usize;
    let c = (p.col as isize + dc).clamp(0, cols as isize - 1) as usize;
    PatchIndex::new(r, c)
}

pub fn build_mdp(grid: &GridSpec, action_model: ActionModel, gamma: f64, horizon: usize) -> Result<FixationMdp> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("discount {gamma} outside (0, 1]")));
    }
    let s_count = grid.num_states();
    let (num_actions, next) = match action_model {
        ActionModel::PatchTarget => {
            let mut next = Vec::with_capacity(s_count * s_count);
            for _ in 0..s_count {
                next.extend(0..s_count as u32);
            }
            (s_count, next)
        }
        ActionModel::SevenMacro => {
            let center = grid.center_patch();
            let mut next = Vec::with_capacity(s_count * 7);
            for s in 0..s_count {
                let p = grid.patch(s);
                for label in ActionLabel::ALL {
                    let q = macro_next(p, label, center, grid.rows, grid.cols);
                    next.push(grid.state(q) as u32);
                }
            }
            (7, next)
        }
    };
    Ok(FixationMdp {
        rows: grid.rows,
        cols: grid.cols,
        action_model,
        gamma,
        horizon,
        num_actions,
        next,
    })
}

impl FixationMdp {
    pub fn num_states(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn next(&self, s: usize, a: usize) -> usize {
        self.next[s * self.num_actions + a] as usize
    }

    /// Successors of `s`, indexed by action.
    #[inline]
    pub fn successors(&self, s: usize) -> &[u32] {
        &self.next[s * self.num_actions..(s + 1) * self.num_actions]
    }

    /// Whether every state reaches every state in one step with a distinct action.
    pub fn is_patch_target(&self) -> bool {
        self.action_model == ActionModel::PatchTarget
    }
}
