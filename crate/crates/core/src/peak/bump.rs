use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patch::norm;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BumpKind {
    /// `exp(1 - 1/(1 - t^2))` for `t = |x - c| / r < 1`.
    SmoothExponential,
    /// `(1 + cos(pi t)) / 2`.
    Cosine,
    /// Equal to 1 for `|x - c| <= inner_radius`, smooth transition to 0 at `r`.
    Plateau { inner_radius: f64 },
}

/// Compactly supported radial profile `amplitude * phi(|x - center| / r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    #[serde(flatten)]
    pub kind: BumpKind,
    pub support_radius: f64,
    pub center: Vec<f64>,
    #[serde(default = "unit_amplitude")]
    pub amplitude: Complex64,
}

fn unit_amplitude() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// `C^infinity` step: 0 for `s <= 0`, 1 for `s >= 1`.
pub(crate) fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / s).exp();
    let b = (-1.0 / (1.0 - s)).exp();
    a / (a + b)
}

impl BumpFunction {
    pub fn new(kind: BumpKind, support_radius: f64, center: Vec<f64>) -> Result<Self> {
        let b = Self {
            kind,
            support_radius,
            center,
            amplitude: unit_amplitude(),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.support_radius > 0.0) || !self.support_radius.is_finite() {
            return Err(Error::InvalidInput(format!(
                "bump support radius must be positive, got {}",
                self.support_radius
            )));
        }
        if self.center.is_empty() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("bump center must be a finite point".into()));
        }
        if let BumpKind::Plateau { inner_radius } = self.kind {
            if !(0.0..self.support_radius).contains(&inner_radius) {
                return Err(Error::InvalidInput(format!(
                    "plateau radius {inner_radius} must lie in [0, {})",
                    self.support_radius
                )));
            }
        }
        Ok(())
    }

    /// Default bump: smooth exponential, centered at the origin.
    pub fn smooth(d: usize, radius: f64) -> Result<Self> {
        Self::new(BumpKind::SmoothExponential, radius, vec![0.0; d])
    }

    pub fn cosine(d: usize, radius: f64) -> Result<Self> {
        Self::new(BumpKind::Cosine, radius, vec![0.0; d])
    }

    pub fn plateau(d: usize, inner_radius: f64, radius: f64) -> Result<Self> {
        Self::new(BumpKind::Plateau { inner_radius }, radius, vec![0.0; d])
    }

    pub fn with_amplitude(mut self, amplitude: Complex64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `sup |f|`.
    pub fn sup_norm(&self) -> f64 {
        self.amplitude.norm()
    }

    /// Whether the closed support lies in the closed ball of radius `r` about 0.
    pub fn fits_in(&self, r: f64) -> bool {
        norm(&self.center) + self.support_radius <= r * (1.0 + 1e-12)
    }

    /// Radial profile as a function of the distance to the center.
    pub fn profile(&self, dist: f64) -> f64 {
        let r = self.support_radius;
        if dist >= r {
            return 0.0;
        }
        let t = dist / r;
        match self.kind {
            BumpKind::SmoothExponential => (1.0 - 1.0 / (1.0 - t * t)).exp(),
            BumpKind::Cosine => 0.5 * (1.0 + (std::f64::consts::PI * t).cos()),
            BumpKind::Plateau { inner_radius } => smooth_step((r - dist) / (r - inner_radius)),
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.amplitude * self.profile(self.distance(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_hit_one_at_center_and_vanish_outside() {
        for b in [
            BumpFunction::smooth(1, 0.25).unwrap(),
            BumpFunction::cosine(1, 0.25).unwrap(),
            BumpFunction::plateau(1, 0.1, 0.25).unwrap(),
        ] {
            assert!((b.eval(&[0.0]).re - 1.0).abs() < 1e-15);
            assert_eq!(b.eval(&[0.25]).re, 0.0);
            assert_eq!(b.eval(&[-0.3]).re, 0.0);
            assert!(b.eval(&[0.2]).re > 0.0);
            assert!(b.eval(&[0.2]).re < 1.0);
        }
    }

    #[test]
    fn plateau_is_flat_inside() {
        let b = BumpFunction::plateau(2, 0.1, 0.2).unwrap();
        assert_eq!(b.eval(&[0.06, 0.08]).re, 1.0);
        assert_eq!(b.eval(&[0.12, 0.16]).re, 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(BumpFunction::smooth(1, 0.0).is_err());
        assert!(BumpFunction::plateau(1, 0.3, 0.2).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let b = BumpFunction::plateau(2, 0.1, 0.2)
            .unwrap()
            .with_amplitude(Complex64::new(0.0, 1.0));
        let s = serde_json::to_string(&b).unwrap();
        let back: BumpFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(b, back);
    }
}
