use std::cell::Cell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bump::BumpFunction;
use super::constants::{ball_lattice, PeakConstants};
use super::minimizer::{local_min, pairing_on_patch};
use super::normalization::{
    dominating_integral, g_closed_form, g_quadrature, unit_factor,
};
use crate::domain::{complex_to_real, ComplexPoint, DomainModel};
use crate::error::{Error, Result};
use crate::patch::{norm, pullback_unchecked, PatchModel};
use crate::quad::{integrate_box, QuadSettings};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySettings {
    pub abs_tol: f64,
    pub max_cells: usize,
    /// Nodes per axis of the normalization table over `[-varrho, varrho]^d`.
    pub table_steps: usize,
    /// Number of table nodes re-checked by the quadrature route.
    pub spot_checks: usize,
}

impl Default for FamilySettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            max_cells: 20_000,
            table_steps: 0,
            spot_checks: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotCheck {
    pub x: Vec<f64>,
    pub closed_form: f64,
    pub quadrature: f64,
    pub rel_err: f64,
}

/// `G(x)` tabulated on a lattice of the working ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationTable {
    pub nodes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub spot_checks: Vec<SpotCheck>,
    pub max_rel_err: f64,
    /// `max |f(x)| / G(x)` over the nodes.
    pub f_over_g_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HValue {
    pub value: Complex64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// Smallest `Re(delta^2 + G(gamma(x), z))` seen at a quadrature node.
    pub min_re_denominator: f64,
    /// Minimizer of `Re G(gamma(.), z)` around which the cells were split.
    pub center: Vec<f64>,
}

pub struct PeakFamily<'a> {
    pub patch: &'a dyn PatchModel,
    pub domain: &'a DomainModel,
    pub constants: PeakConstants,
    pub bump: BumpFunction,
    pub table: NormalizationTable,
    pub quad: QuadSettings,
    unit: f64,
}

impl<'a> PeakFamily<'a> {
    pub fn new(
        patch: &'a dyn PatchModel,
        domain: &'a DomainModel,
        constants: PeakConstants,
        bump: BumpFunction,
        settings: &FamilySettings,
    ) -> Result<Self> {
        bump.validate()?;
        let d = patch.dim();
        if bump.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bump.dim(),
            });
        }
        let varrho = constants.varrho;
        if !bump.fits_in(varrho) {
            return Err(Error::InvalidInput(format!(
                "bump support (center norm {} + radius {}) exceeds varrho = {varrho}",
                norm(&bump.center),
                bump.support_radius
            )));
        }
        let steps = if settings.table_steps > 0 {
            settings.table_steps
        } else {
            match d {
                1 => 101,
                2 => 21,
                _ => 11,
            }
        };
        let mut nodes = ball_lattice(d, varrho, steps);
        nodes.push(bump.center.clone());
        let mut values = Vec::with_capacity(nodes.len());
        for x in &nodes {
            let m = pullback_unchecked(patch, domain, x) * 0.5;
            let g = g_closed_form(&m).map_err(|e| match e {
                Error::SingularForm { min_eigenvalue, .. } => Error::SingularForm {
                    point: x.clone(),
                    min_eigenvalue,
                },
                e => e,
            })?;
            values.push(g);
        }
        let k = settings.spot_checks.min(nodes.len());
        let mut spot_checks = Vec::with_capacity(k);
        for i in 0..k {
            let idx = if k == 1 { 0 } else { i * (nodes.len() - 1) / (k - 1) };
            let x = &nodes[idx];
            let m = pullback_unchecked(patch, domain, x) * 0.5;
            let q = g_quadrature(&m)?;
            spot_checks.push(SpotCheck {
                x: x.clone(),
                closed_form: values[idx],
                quadrature: q,
                rel_err: (q / values[idx] - 1.0).abs(),
            });
        }
        let f_over_g_sup = nodes
            .iter()
            .zip(&values)
            .map(|(x, g)| bump.eval(x).norm() / g)
            .fold(0.0, f64::max);
        let table = NormalizationTable {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            max_rel_err: spot_checks.iter().map(|s| s.rel_err).fold(0.0, f64::max),
            nodes,
            values,
            spot_checks,
            f_over_g_sup,
        };
        Ok(Self {
            patch,
            domain,
            constants,
            bump,
            table,
            quad: QuadSettings {
                order: None,
                abs_tol: settings.abs_tol,
                max_cells: settings.max_cells,
            },
            unit: unit_factor(d),
        })
    }

    pub fn dim(&self) -> usize {
        self.patch.dim()
    }

    /// `G(x)` by the closed form, without checks.
    pub fn g_at(&self, x: &[f64]) -> f64 {
        let m = pullback_unchecked(self.patch, self.domain, x) * 0.5;
        m.determinant().powf(-0.5) * self.unit
    }

    /// `||f/G||_inf * int (1 + C|v|^2/2)^{-d} dv`.
    pub fn dominating_bound(&self) -> f64 {
        self.table.f_over_g_sup * dominating_integral(self.constants.c_gamma, self.dim())
    }

    /// `h_delta(z) = int_{B(0; varrho)} delta^d f(x) / G(x) / (delta^2 + G(gamma(x), z))^d dx`.
    pub fn eval_h(&self, delta: f64, z: &ComplexPoint) -> Result<HValue> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        if z.ambient_n() != self.patch.ambient_n() {
            return Err(Error::DimensionMismatch {
                expected: self.patch.ambient_n(),
                got: z.ambient_n(),
            });
        }
        let zr = complex_to_real(z.coords());
        let rho = self.domain.rho_at(&zr);
        if rho > self.domain.boundary_tolerance(&zr) {
            return Err(Error::OutsideDomain { rho });
        }
        let d = self.dim();
        let varrho = self.constants.varrho;
        let center = local_min(self.patch, self.domain, z, varrho)?.y;

        let breakpoints: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                let lo = (self.bump.center[a] - self.bump.support_radius).max(-varrho);
                let hi = (self.bump.center[a] + self.bump.support_radius).min(varrho);
                let mut bp = vec![lo, hi];
                let mut w = delta;
                while w < hi - lo {
                    for p in [center[a] - w, center[a] + w] {
                        if p > lo && p < hi {
                            bp.push(p);
                        }
                    }
                    w *= 4.0;
                }
                if center[a] > lo && center[a] < hi {
                    bp.push(center[a]);
                }
                bp.sort_by(f64::total_cmp);
                bp.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
                bp
            })
            .collect();

        let min_den = Cell::new(f64::INFINITY);
        let zc = z.coords();
        let dd = delta.powi(d as i32);
        let integrand = |x: &[f64]| -> Complex64 {
            if self.bump.distance(x) >= self.bump.support_radius {
                return Complex64::new(0.0, 0.0);
            }
            let f = self.bump.eval(x);
            if f == Complex64::new(0.0, 0.0) {
                return f;
            }
            let den = delta * delta + pairing_on_patch(self.patch, self.domain, x, zc);
            if den.re < min_den.get() {
                min_den.set(den.re);
            }
            f * dd / (self.g_at(x) * den.powi(d as i32))
        };
        let res = integrate_box(&integrand, &breakpoints, &self.quad)?;
        Ok(HValue {
            value: res.value,
            error_estimate: res.error_estimate,
            evaluations: res.evaluations,
            min_re_denominator: min_den.get(),
            center,
        })
    }
}

/// Free-function form of [`PeakFamily::eval_h`].
pub fn eval_h(family: &PeakFamily<'_>, delta: f64, z: &ComplexPoint) -> Result<HValue> {
    family.eval_h(delta, z)
}
