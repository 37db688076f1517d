//! Two-point zero-noise extrapolation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationKind {
    #[default]
    None,
    Linear,
    Exponential,
}

fn default_scales() -> Vec<u32> {
    vec![1, 3]
}

fn default_floor() -> f64 {
    1e-4
}

fn default_ratio() -> f64 {
    2500.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtrapolationPolicy {
    #[serde(default)]
    pub kind: ExtrapolationKind,
    /// Noise scale factors; each CNOT is repeated this many times.
    #[serde(default = "default_scales")]
    pub scale_points: Vec<u32>,
    #[serde(default = "default_floor")]
    pub min_high_noise_mag: f64,
    #[serde(default = "default_ratio")]
    pub max_ratio: f64,
}

impl Default for ExtrapolationPolicy {
    fn default() -> Self {
        ExtrapolationPolicy {
            kind: ExtrapolationKind::None,
            scale_points: default_scales(),
            min_high_noise_mag: default_floor(),
            max_ratio: default_ratio(),
        }
    }
}

impl ExtrapolationPolicy {
    pub fn with_kind(kind: ExtrapolationKind) -> ExtrapolationPolicy {
        ExtrapolationPolicy {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scale_points;
        if s.first() != Some(&1) {
            return Err(Error::Invalid("scale points must start at 1".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid(
                "scale points must be strictly increasing".into(),
            ));
        }
        if s.iter().any(|k| k % 2 == 0) {
            return Err(Error::Invalid(
                "scale points must be odd fold factors".into(),
            ));
        }
        if self.kind != ExtrapolationKind::None && s.len() != 2 {
            return Err(Error::Invalid(
                "extrapolation uses exactly two scale points".into(),
            ));
        }
        Ok(())
    }

    /// Scale points that need measuring.
    pub fn active_scales(&self) -> &[u32] {
        match self.kind {
            ExtrapolationKind::None => &self.scale_points[..1],
            _ => &self.scale_points,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardFailure {
    SignFlip,
    NotDecaying,
    BelowFloor,
    RatioTooLarge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardStatus {
    NotApplicable,
    Passed,
    Fallback(GuardFailure),
}

/// Tally of guard outcomes across extrapolated terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardReport {
    pub passed: u64,
    pub sign_flip: u64,
    pub not_decaying: u64,
    pub below_floor: u64,
    pub ratio_too_large: u64,
}

impl GuardReport {
    pub fn record(&mut self, s: GuardStatus) {
        match s {
            GuardStatus::NotApplicable => {}
            GuardStatus::Passed => self.passed += 1,
            GuardStatus::Fallback(GuardFailure::SignFlip) => self.sign_flip += 1,
            GuardStatus::Fallback(GuardFailure::NotDecaying) => self.not_decaying += 1,
            GuardStatus::Fallback(GuardFailure::BelowFloor) => self.below_floor += 1,
            GuardStatus::Fallback(GuardFailure::RatioTooLarge) => self.ratio_too_large += 1,
        }
    }

    pub fn merge(&mut self, o: &GuardReport) {
        self.passed += o.passed;
        self.sign_flip += o.sign_flip;
        self.not_decaying += o.not_decaying;
        self.below_floor += o.below_floor;
        self.ratio_too_large += o.ratio_too_large;
    }

    pub fn fallbacks(&self) -> u64 {
        self.sign_flip + self.not_decaying + self.below_floor + self.ratio_too_large
    }
}

/// Zero-noise estimate from one value per active scale point.
pub fn extrapolate(values: &[f64], policy: &ExtrapolationPolicy) -> Result<(f64, GuardStatus)> {
    let scales = policy.active_scales();
    if values.len() != scales.len() {
        return Err(Error::Invalid(format!(
            "{} values for {} scale points",
            values.len(),
            scales.len()
        )));
    }
    match policy.kind {
        ExtrapolationKind::None => Ok((values[0], GuardStatus::NotApplicable)),
        ExtrapolationKind::Linear => {
            let (s1, s2) = (scales[0] as f64, scales[1] as f64);
            let (e1, e2) = (values[0], values[1]);
            Ok(((s2 * e1 - s1 * e2) / (s2 - s1), GuardStatus::NotApplicable))
        }
        ExtrapolationKind::Exponential => {
            let (s1, s2) = (scales[0] as f64, scales[1] as f64);
            let (e1, e2) = (values[0], values[1]);
            let fail = |g| Ok((e1, GuardStatus::Fallback(g)));
            if !(e1 * e2 > 0.0) {
                return fail(GuardFailure::SignFlip);
            }
            if e2.abs() >= e1.abs() {
                return fail(GuardFailure::NotDecaying);
            }
            if e2.abs() < policy.min_high_noise_mag {
                return fail(GuardFailure::BelowFloor);
            }
            let ratio = e1 / e2;
            if ratio.abs() > policy.max_ratio {
                return fail(GuardFailure::RatioTooLarge);
            }
            Ok((e1 * ratio.powf(s1 / (s2 - s1)), GuardStatus::Passed))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let lin = ExtrapolationPolicy::with_kind(ExtrapolationKind::Linear);
        assert!((extrapolate(&[0.9, 0.7], &lin).unwrap().0 - 1.0).abs() < 1e-12);
        let exp = ExtrapolationPolicy::with_kind(ExtrapolationKind::Exponential);
        let (v, s) = extrapolate(&[0.9, 0.729], &exp).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        assert_eq!(s, GuardStatus::Passed);
    }

    #[test]
    fn guards_fall_back_to_the_low_noise_value() {
        let exp = ExtrapolationPolicy::with_kind(ExtrapolationKind::Exponential);
        let cases = [
            ([0.001, -0.0005], GuardFailure::SignFlip),
            ([0.5, 0.6], GuardFailure::NotDecaying),
            ([0.001, 0.00005], GuardFailure::BelowFloor),
            ([0.9, 0.0002], GuardFailure::RatioTooLarge),
        ];
        for (vals, g) in cases {
            assert_eq!(
                extrapolate(&vals, &exp).unwrap(),
                (vals[0], GuardStatus::Fallback(g))
            );
        }
    }

    #[test]
    fn policy_validation() {
        let mut p = ExtrapolationPolicy::with_kind(ExtrapolationKind::Linear);
        assert!(p.validate().is_ok());
        p.scale_points = vec![3, 5];
        assert!(p.validate().is_err());
        p.scale_points = vec![1, 3, 5];
        assert!(p.validate().is_err());
        p.scale_points = vec![1, 1];
        assert!(p.validate().is_err());
    }
}
