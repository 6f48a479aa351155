use std::cell::RefCell;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::domain::{sorted_eigen, DomainModel};
use crate::error::{Error, Result};
use crate::patch::{pullback_form, PatchModel};
use crate::quad::{integrate_box, integrate_real_1d, QuadSettings};

/// Radial cutoff: the integrand is dropped where it falls below this value.
pub const RADIAL_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMethod {
    ClosedForm,
    Quadrature,
}

/// `int_{R^d} (1 + |u|^2)^{-d} du * 2^{d/2} = 2^{d/2} pi^{d/2} Gamma(d/2) / Gamma(d)`.
pub fn unit_factor(d: usize) -> f64 {
    let df = d as f64;
    (2.0 * PI).powf(0.5 * df) * gamma(0.5 * df) / gamma(df)
}

/// `int (1 + c|v|^2 / 2)^{-d} dv` over `R^d`.
pub fn dominating_integral(c: f64, d: usize) -> f64 {
    c.powf(-0.5 * d as f64) * unit_factor(d)
}

fn check_form(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() || m.nrows() == 0 || m.nrows() > 3 {
        return Err(Error::InvalidInput(format!(
            "normalization needs a square form of size 1..=3, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let lmin = sorted_eigen(m).0[0];
    if !(lmin > 0.0) {
        return Err(Error::SingularForm {
            point: Vec::new(),
            min_eigenvalue: lmin,
        });
    }
    Ok(())
}

/// `G = det(M)^{-1/2} 2^{d/2} pi^{d/2} Gamma(d/2) / Gamma(d)`.
pub fn g_closed_form(m: &DMatrix<f64>) -> Result<f64> {
    check_form(m)?;
    Ok(m.determinant().powf(-0.5) * unit_factor(m.nrows()))
}

/// `int_0^inf (1 + a r^2)^{-d} r^{d-1} dr` by adaptive quadrature on
/// geometric panels up to the cutoff radius, plus the leading-order tail.
fn radial_integral(a: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    let cutoff = ((RADIAL_CUTOFF.powf(-1.0 / df) - 1.0) / a).sqrt();
    let s = a.powf(-0.5);
    let mut bp = vec![0.0];
    let mut t = s / 8.0;
    while t < cutoff {
        bp.push(t);
        t *= 2.0;
    }
    bp.push(cutoff);
    let settings = QuadSettings::with_tol(1e-13 * s.powi(d as i32));
    let body = integrate_real_1d(
        |r| (1.0 + a * r * r).powi(-(d as i32)) * r.powi(d as i32 - 1),
        bp,
        &settings,
    )?;
    let tail = a.powi(-(d as i32)) * cutoff.powf(-df) / df;
    Ok(body + tail)
}

/// Same integral as [`g_closed_form`], in polar coordinates: for each unit
/// direction `theta` the radial integral with `a = theta^T M theta / 2`,
/// then an adaptive integral over the sphere.
pub fn g_quadrature(m: &DMatrix<f64>) -> Result<f64> {
    check_form(m)?;
    let d = m.nrows();
    let q = |u: &[f64]| -> f64 {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += u[i] * m[(i, j)] * u[j];
            }
        }
        0.5 * acc
    };
    if d == 1 {
        return Ok(radial_integral(q(&[1.0]), 1)? + radial_integral(q(&[-1.0]), 1)?);
    }
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let radial = |u: &[f64]| -> f64 {
        match radial_integral(q(u), d) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };
    let scale = m.determinant().powf(-0.5);
    let settings = QuadSettings::with_tol(1e-10 * scale);
    let res = if d == 2 {
        let f = |t: &[f64]| Complex64::new(radial(&[t[0].cos(), t[0].sin()]), 0.0);
        let bp: Vec<f64> = (0..=4).map(|k| 0.5 * PI * k as f64).collect();
        integrate_box(&f, &[bp], &settings)?
    } else {
        let f = |t: &[f64]| {
            let (st, ct) = t[0].sin_cos();
            let (sp, cp) = t[1].sin_cos();
            Complex64::new(radial(&[st * cp, st * sp, ct]) * st, 0.0)
        };
        let bt = vec![0.0, 0.5 * PI, PI];
        let bphi: Vec<f64> = (0..=4).map(|k| 0.5 * PI * k as f64).collect();
        integrate_box(&f, &[bt, bphi], &settings)?
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(res.value.re)
}

pub fn g_from_form(m: &DMatrix<f64>, method: NormalizationMethod) -> Result<f64> {
    match method {
        NormalizationMethod::ClosedForm => g_closed_form(m),
        NormalizationMethod::Quadrature => g_quadrature(m),
    }
}

/// `G(x)` for the pullback form `M(x)` of the patch.
pub fn normalization(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    x: &[f64],
    method: NormalizationMethod,
) -> Result<f64> {
    let form = pullback_form(patch, domain, x)?;
    g_from_form(&form.m, method).map_err(|e| match e {
        Error::SingularForm { min_eigenvalue, .. } => Error::SingularForm {
            point: x.to_vec(),
            min_eigenvalue,
        },
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_value() {
        let m = DMatrix::from_element(1, 1, 1.0);
        let exact = 2.0f64.sqrt() * PI;
        assert!((g_closed_form(&m).unwrap() - exact).abs() < 1e-12);
        assert!((g_quadrature(&m).unwrap() / exact - 1.0).abs() < 1e-8);
    }

    #[test]
    fn two_and_three_dimensional_agreement() {
        let m2 = DMatrix::from_row_slice(2, 2, &[2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0]);
        let exact = 2.0 * PI * 3.0f64.sqrt();
        assert!((g_closed_form(&m2).unwrap() / exact - 1.0).abs() < 1e-12);
        assert!((g_quadrature(&m2).unwrap() / exact - 1.0).abs() < 1e-7);
        let m3 = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 0.5]);
        let a = g_closed_form(&m3).unwrap();
        let b = g_quadrature(&m3).unwrap();
        assert!((a / b - 1.0).abs() < 1e-7, "{a} vs {b}");
    }

    #[test]
    fn singular_form_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(g_closed_form(&m), Err(Error::SingularForm { .. })));
        assert!(matches!(g_quadrature(&m), Err(Error::SingularForm { .. })));
    }

    #[test]
    fn dominating_integral_one_dimensional() {
        let c: f64 = 0.41;
        let exact = PI * (2.0 / c).sqrt();
        assert!((dominating_integral(c, 1) - exact).abs() < 1e-12);
    }
}
