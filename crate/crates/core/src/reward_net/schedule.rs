use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear warmup, a plateau, then step decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrSchedule {
    pub lr_init: f64,
    pub lr_peak: f64,
    /// Epoch at which the warmup reaches `lr_peak`.
    pub warmup_epochs: u32,
    pub decay_start_epoch: u32,
    pub decay_factor: f64,
    pub decay_every: u32,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            lr_init: 1.5e-4,
            lr_peak: 5e-4,
            warmup_epochs: 10,
            decay_start_epoch: 11,
            decay_factor: 0.25,
            decay_every: 3,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr_init > 0.0
            && self.lr_peak > 0.0
            && self.decay_factor > 0.0
            && self.warmup_epochs >= 1
            && self.decay_every >= 1
            && self.warmup_epochs < self.decay_start_epoch;
        if ok && self.lr_init.is_finite() && self.lr_peak.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("learning-rate schedule {self:?}")))
        }
    }

    /// Epochs are 1-based.
    pub fn lr_at_epoch(&self, epoch: u32) -> Result<f64> {
        self.validate()?;
        if epoch < 1 {
            return Err(Error::InvalidArgument("epoch numbering starts at 1".into()));
        }
        if epoch <= self.warmup_epochs {
            if self.warmup_epochs == 1 {
                return Ok(self.lr_peak);
            }
            let f = (epoch - 1) as f64 / (self.warmup_epochs - 1) as f64;
            return Ok(self.lr_init * (1.0 - f) + self.lr_peak * f);
        }
        if epoch < self.decay_start_epoch {
            return Ok(self.lr_peak);
        }
        let periods = (epoch - self.decay_start_epoch) / self.decay_every;
        Ok(self.lr_peak * self.decay_factor.powi(periods as i32))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_epochs() {
        let s = LrSchedule::default();
        assert_eq!(s.lr_at_epoch(1).unwrap(), 1.5e-4);
        assert_eq!(s.lr_at_epoch(10).unwrap(), 5e-4);
        for e in 11..=13 {
            assert_eq!(s.lr_at_epoch(e).unwrap(), 5e-4);
        }
        assert_eq!(s.lr_at_epoch(14).unwrap(), 1.25e-4);
        assert_eq!(s.lr_at_epoch(17).unwrap(), 5e-4 * 0.25 * 0.25);
        assert!(s.lr_at_epoch(0).is_err());
    }

    #[test]
    fn warmup_is_increasing_and_decay_nonincreasing() {
        let s = LrSchedule::default();
        let lrs: Vec<f64> = (1..=60).map(|e| s.lr_at_epoch(e).unwrap()).collect();
        assert!(lrs[..10].windows(2).all(|w| w[0] < w[1]));
        assert!(lrs[9..].windows(2).all(|w| w[0] >= w[1]));
        assert!(lrs.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn rejects_bad_schedule() {
        let s = LrSchedule {
            warmup_epochs: 11,
            ..Default::default()
        };
        assert!(s.lr_at_epoch(1).is_err());
    }
}
