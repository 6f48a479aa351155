use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::{complex_to_real, sorted_eigen, ComplexPoint, DomainModel, WirtingerJet};
use crate::error::{Error, Result};
use crate::grid::cartesian;
use crate::patch::{norm, real_jacobian, PatchModel};

/// Gradient norm below which the descent polish stops.
pub const GRADIENT_TOL: f64 = 1e-13;
/// Coarse values within this relative gap of the best count as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizerResult {
    pub y: Vec<f64>,
    pub value: f64,
    pub interior: bool,
    pub gradient_norm: f64,
    /// Radius of the searched closed ball, `2r`.
    pub search_radius: f64,
}

/// `G(gamma(x), z)`.
pub fn pairing_on_patch(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    x: &[f64],
    z: &[Complex64],
) -> Complex64 {
    domain.pairing_at(&patch.eval(x), z)
}

/// Gradient in `x` of `Re G(gamma(x), z)`, built from the real gradient and
/// Hessian of `rho` and the real Jacobian of the patch.
pub fn pairing_gradient(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    x: &[f64],
    z: &[Complex64],
) -> Vec<f64> {
    let g = patch.eval(x);
    let gr = complex_to_real(&g);
    let drho = domain.holo_gradient_at(&gr);
    let jr = real_jacobian(patch, x);
    let hj = domain.hessian_at(&gr) * &jr;
    let jc = patch.jacobian(x);
    (0..patch.dim())
        .map(|mu| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..g.len() {
                let d_drho = 0.5 * Complex64::new(hj[(2 * j, mu)], -hj[(2 * j + 1, mu)]);
                acc += d_drho * (g[j] - z[j]) + drho[j] * jc[(j, mu)];
            }
            acc.re
        })
        .collect()
}

fn coarse_points(d: usize, radius: f64) -> Vec<Vec<f64>> {
    let per_axis: usize = match d {
        1 => 401,
        2 => 41,
        _ => 17,
    };
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| radius * (2.0 * i as f64 / (per_axis - 1) as f64 - 1.0))
        .collect();
    let axes = vec![axis; d];
    cartesian(&axes)
        .into_iter()
        .filter(|p| norm(p) <= radius)
        .collect()
}

fn project(x: &mut [f64], radius: f64) {
    let n = norm(x);
    if n > radius {
        x.iter_mut().for_each(|v| *v *= radius / n);
    }
}

/// Global minimizer of `x -> Re G(gamma(x), z)` over the closed ball of
/// radius `2r`: coarse lattice scan, tie-break by smallest norm then
/// lexicographic order, then damped Newton polish with projection.
pub fn local_min(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    z: &ComplexPoint,
    r: f64,
) -> Result<MinimizerResult> {
    if z.ambient_n() != patch.ambient_n() {
        return Err(Error::DimensionMismatch {
            expected: patch.ambient_n(),
            got: z.ambient_n(),
        });
    }
    if !(r > 0.0) || !(2.0 * r <= patch.radius()) {
        return Err(Error::InvalidInput(format!(
            "search radius 2r = {} must lie in (0, R = {}]",
            2.0 * r,
            patch.radius()
        )));
    }
    let zc = z.coords();
    let radius = 2.0 * r;
    let f = |x: &[f64]| pairing_on_patch(patch, domain, x, zc).re;

    let pts = coarse_points(patch.dim(), radius);
    let vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = TIE_TOL * (1.0 + best.abs());
    let start = pts
        .iter()
        .zip(&vals)
        .filter(|(_, v)| **v <= best + gap)
        .map(|(p, _)| p)
        .min_by(|a, b| {
            norm(a)
                .total_cmp(&norm(b))
                .then_with(|| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
        })
        .expect("coarse lattice is non-empty")
        .clone();

    let (y, value) = polish(patch, domain, zc, start, radius);
    let gradient_norm = norm(&pairing_gradient(patch, domain, &y, zc));
    Ok(MinimizerResult {
        interior: norm(&y) < radius * (1.0 - 1e-9),
        y,
        value,
        gradient_norm,
        search_radius: radius,
    })
}

fn fd_hessian(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    z: &[Complex64],
    y: &[f64],
) -> DMatrix<f64> {
    let d = y.len();
    let h = 1e-6 * (1.0 + norm(y));
    let mut m = DMatrix::zeros(d, d);
    for b in 0..d {
        let mut p = y.to_vec();
        let mut q = y.to_vec();
        p[b] += h;
        q[b] -= h;
        let gp = pairing_gradient(patch, domain, &p, z);
        let gq = pairing_gradient(patch, domain, &q, z);
        for a in 0..d {
            m[(a, b)] = (gp[a] - gq[a]) / (2.0 * h);
        }
    }
    0.5 * (&m + m.transpose())
}

fn polish(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    z: &[Complex64],
    mut y: Vec<f64>,
    radius: f64,
) -> (Vec<f64>, f64) {
    let f = |x: &[f64]| pairing_on_patch(patch, domain, x, z).re;
    let mut fy = f(&y);
    for _ in 0..100 {
        let g = pairing_gradient(patch, domain, &y, z);
        if norm(&g) <= GRADIENT_TOL {
            break;
        }
        let hess = fd_hessian(patch, domain, z, &y);
        let (eig, _) = sorted_eigen(&hess);
        let lmax = eig.last().copied().unwrap_or(0.0).abs();
        let shift = if eig[0] > 1e-10 * (1.0 + lmax) {
            0.0
        } else {
            -eig[0] + 1e-6 * (1.0 + lmax)
        };
        let shifted = hess + DMatrix::identity(y.len(), y.len()) * shift;
        let gv = DVector::from_column_slice(&g);
        let step = match shifted.cholesky() {
            Some(ch) => -ch.solve(&gv),
            None => -gv.clone(),
        };
        let slope = gv.dot(&step);
        let mut alpha = 1.0;
        let mut moved = false;
        for _ in 0..40 {
            let mut cand: Vec<f64> = y.iter().zip(step.iter()).map(|(a, s)| a + alpha * s).collect();
            project(&mut cand, radius);
            let fc = f(&cand);
            if fc < fy + 1e-4 * alpha * slope.min(0.0) && fc < fy {
                let dx = norm(&y.iter().zip(&cand).map(|(a, b)| a - b).collect::<Vec<_>>());
                y = cand;
                fy = fc;
                moved = dx > 1e-15 * (1.0 + radius);
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (y, fy)
}

/// Size of the second-order critical-point expression at an interior
/// minimizer `y` of `Re G(gamma(.), z)`, computed from the Wirtinger
/// second derivatives of `rho`:
/// `max_mu |Re sum_jk [rho_jk dgamma_k + rho_jkbar conj(dgamma_k)] (gamma_j - z_j)|`.
pub fn critical_residual(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    z: &ComplexPoint,
    minimizer: &MinimizerResult,
) -> Result<f64> {
    if !minimizer.interior {
        return Err(Error::MinimizerNotInterior {
            norm: norm(&minimizer.y),
            radius: minimizer.search_radius,
        });
    }
    let y = &minimizer.y;
    let g = patch.eval(y);
    let gr = complex_to_real(&g);
    let jet = WirtingerJet::from_real(&domain.gradient_at(&gr), &domain.hessian_at(&gr));
    let jc = patch.jacobian(y);
    let zc = z.coords();
    let n = g.len();
    Ok((0..patch.dim())
        .map(|mu| {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let diff = g[j] - zc[j];
                for k in 0..n {
                    acc += (jet.second_holo[(j, k)] * jc[(k, mu)]
                        + jet.second_mixed[(j, k)] * jc[(k, mu)].conj())
                        * diff;
                }
            }
            acc.re.abs()
        })
        .fold(0.0, f64::max))
}
