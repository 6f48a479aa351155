//! Parametrized boundary patches `gamma : B_d(0; R) -> bd Omega` and the
//! pullback of the real Hessian of `rho` to patch parameters.

use nalgebra::{DMatrix, SVD};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{complex_to_real, sorted_eigen, DomainModel};
use crate::error::{Error, Result};
use crate::grid::ParamGrid;

/// Complex-tangency residuals above this fail the patch audit.
pub const TANGENCY_TOL: f64 = 1e-9;
/// Immersion requires `sigma_min > IMMERSION_REL_TOL * sigma_max`.
pub const IMMERSION_REL_TOL: f64 = 1e-8;
/// Symmetry and semi-definiteness tolerances for the pullback form.
pub const SYMMETRY_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-9;

/// Evaluator contract for a smooth patch of the boundary.
pub trait PatchModel: Send + Sync {
    fn name(&self) -> &str;
    /// Parameter dimension `d`.
    fn dim(&self) -> usize;
    fn ambient_n(&self) -> usize;
    /// Radius `R` of the parameter ball.
    fn radius(&self) -> f64;
    fn eval(&self, x: &[f64]) -> Vec<Complex64>;
    /// `n x d` matrix of `d gamma_j / d x_mu`.
    fn jacobian(&self, x: &[f64]) -> DMatrix<Complex64>;
    /// For each `j`, the `d x d` matrix of `d^2 gamma_j / d x_mu d x_nu`.
    fn second(&self, x: &[f64]) -> Vec<DMatrix<Complex64>>;
}

/// The `2n x d` real Jacobian (rows interleave real and imaginary parts).
pub fn real_jacobian(patch: &dyn PatchModel, x: &[f64]) -> DMatrix<f64> {
    let jc = patch.jacobian(x);
    let (n, d) = jc.shape();
    DMatrix::from_fn(2 * n, d, |r, c| {
        let v = jc[(r / 2, c)];
        if r % 2 == 0 {
            v.re
        } else {
            v.im
        }
    })
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn check_in_ball(patch: &dyn PatchModel, x: &[f64]) -> Result<()> {
    if x.len() != patch.dim() {
        return Err(Error::DimensionMismatch {
            expected: patch.dim(),
            got: x.len(),
        });
    }
    if !(norm(x) < patch.radius()) {
        return Err(Error::OutsideParameterBall {
            point: x.to_vec(),
            radius: patch.radius(),
        });
    }
    Ok(())
}

fn check_compatible(patch: &dyn PatchModel, domain: &DomainModel) -> Result<()> {
    if patch.ambient_n() != domain.ambient_n() {
        return Err(Error::DimensionMismatch {
            expected: domain.ambient_n(),
            got: patch.ambient_n(),
        });
    }
    Ok(())
}

/// `max_mu |sum_j d_j rho(gamma(x)) d gamma_j / d x_mu|`.
pub fn tangency_residual(patch: &dyn PatchModel, domain: &DomainModel, x: &[f64]) -> f64 {
    let g = complex_to_real(&patch.eval(x));
    let drho = domain.holo_gradient_at(&g);
    let jac = patch.jacobian(x);
    (0..patch.dim())
        .map(|mu| {
            drho.iter()
                .enumerate()
                .map(|(j, d)| d * jac[(j, mu)])
                .sum::<Complex64>()
                .norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug)]
pub struct PullbackForm {
    /// `H = dgamma^T (Hess rho)(gamma(x)) dgamma`
    pub h: DMatrix<f64>,
    /// `M = H / 2`
    pub m: DMatrix<f64>,
    pub at_x: Vec<f64>,
}

impl PullbackForm {
    /// Ascending eigenvalues of `H`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigen(&self.h).0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn asymmetry(&self) -> f64 {
        (&self.h - self.h.transpose()).abs().max()
    }
}

/// Pullback without the parameter-ball and boundary checks.
pub(crate) fn pullback_unchecked(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    x: &[f64],
) -> DMatrix<f64> {
    let g = complex_to_real(&patch.eval(x));
    let hess = domain.hessian_at(&g);
    let jr = real_jacobian(patch, x);
    jr.transpose() * (hess * &jr)
}

pub fn pullback_form(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    x: &[f64],
) -> Result<PullbackForm> {
    check_compatible(patch, domain)?;
    check_in_ball(patch, x)?;
    domain.check_on_boundary(&complex_to_real(&patch.eval(x)))?;
    let h = pullback_unchecked(patch, domain, x);
    let m = &h * 0.5;
    Ok(PullbackForm {
        h,
        m,
        at_x: x.to_vec(),
    })
}

/// `det H(x)`, computed on the same path as [`pullback_form`].
pub fn pullback_det(patch: &dyn PatchModel, domain: &DomainModel, x: &[f64]) -> Result<f64> {
    Ok(pullback_form(patch, domain, x)?.h.determinant())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchAudit {
    pub patch: String,
    pub domain: String,
    pub samples: usize,
    pub max_boundary_residual: f64,
    pub boundary_passed: bool,
    pub min_singular_value: f64,
    pub min_relative_singular_value: f64,
    pub immersion_passed: bool,
    pub max_tangency_residual: f64,
    pub tangency_witness: Vec<f64>,
    pub tangency_tolerance: f64,
    pub tangency_passed: bool,
    pub passed: bool,
    pub failures: Vec<String>,
}

struct AuditSample {
    boundary_residual: f64,
    boundary_ok: bool,
    sigma_min: f64,
    sigma_rel: f64,
    tangency: f64,
}

/// Audits boundary membership, immersion and complex tangency over the grid
/// nodes. Failures are recorded, not raised.
pub fn patch_audit(patch: &dyn PatchModel, domain: &DomainModel, grid: &ParamGrid) -> PatchAudit {
    let mut failures = Vec::new();
    if let Err(e) = check_compatible(patch, domain) {
        failures.push(e.to_string());
    }
    if let Err(e) = grid.validate() {
        failures.push(e.to_string());
    }
    if grid.dim() != patch.dim() {
        failures.push(format!(
            "grid dimension {} differs from patch dimension {}",
            grid.dim(),
            patch.dim()
        ));
    }
    if !failures.is_empty() {
        return PatchAudit {
            patch: patch.name().into(),
            domain: domain.name().into(),
            samples: 0,
            max_boundary_residual: f64::NAN,
            boundary_passed: false,
            min_singular_value: f64::NAN,
            min_relative_singular_value: f64::NAN,
            immersion_passed: false,
            max_tangency_residual: f64::NAN,
            tangency_witness: Vec::new(),
            tangency_tolerance: TANGENCY_TOL,
            tangency_passed: false,
            passed: false,
            failures,
        };
    }

    let nodes = grid.nodes();
    let outside: Vec<&Vec<f64>> = nodes
        .iter()
        .filter(|x| norm(x) >= patch.radius())
        .collect();
    if !outside.is_empty() {
        failures.push(format!(
            "{} grid nodes lie outside the parameter ball of radius {} (first: {:?})",
            outside.len(),
            patch.radius(),
            outside[0]
        ));
    }
    let inside: Vec<&Vec<f64>> = nodes.iter().filter(|x| norm(x) < patch.radius()).collect();

    let samples: Vec<AuditSample> = inside
        .par_iter()
        .map(|x| {
            let g = complex_to_real(&patch.eval(x));
            let boundary_residual = domain.rho_at(&g).abs();
            let boundary_ok = boundary_residual <= domain.boundary_tolerance(&g);
            let sv = SVD::new(real_jacobian(patch, x), false, false).singular_values;
            let smax = sv.max();
            let smin = sv.min();
            AuditSample {
                boundary_residual,
                boundary_ok,
                sigma_min: smin,
                sigma_rel: if smax > 0.0 { smin / smax } else { 0.0 },
                tangency: tangency_residual(patch, domain, x),
            }
        })
        .collect();

    let mut max_res = 0.0f64;
    let mut boundary_passed = true;
    let mut min_sv = f64::INFINITY;
    let mut min_rel = f64::INFINITY;
    let mut max_tan = 0.0f64;
    let mut witness = Vec::new();
    for (x, s) in inside.iter().zip(&samples) {
        max_res = max_res.max(s.boundary_residual);
        boundary_passed &= s.boundary_ok;
        min_sv = min_sv.min(s.sigma_min);
        min_rel = min_rel.min(s.sigma_rel);
        if s.tangency > max_tan || witness.is_empty() {
            max_tan = max_tan.max(s.tangency);
            witness = x.to_vec();
        }
    }
    if !boundary_passed {
        failures.push(format!(
            "patch leaves the boundary: max |rho(gamma(x))| = {max_res:e}"
        ));
    }
    let immersion_passed = min_rel > IMMERSION_REL_TOL;
    if !immersion_passed {
        failures.push(format!(
            "patch is not immersed: min sigma_min/sigma_max = {min_rel:e}"
        ));
    }
    let tangency_passed = max_tan <= TANGENCY_TOL;
    if !tangency_passed {
        failures.push(format!(
            "patch is not complex-tangential: tangency residual {max_tan:e} at x = {witness:?}"
        ));
    }
    PatchAudit {
        patch: patch.name().into(),
        domain: domain.name().into(),
        samples: samples.len(),
        max_boundary_residual: max_res,
        boundary_passed,
        min_singular_value: min_sv,
        min_relative_singular_value: min_rel,
        immersion_passed,
        max_tangency_residual: max_tan,
        tangency_witness: witness,
        tangency_tolerance: TANGENCY_TOL,
        tangency_passed,
        passed: failures.is_empty(),
        failures,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracySample {
    pub x: Vec<f64>,
    pub min_eigenvalue: f64,
    pub nondegenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyMap {
    pub patch: String,
    pub tolerance: f64,
    pub samples: Vec<NondegeneracySample>,
    pub all_nondegenerate: bool,
    pub degenerate_points: Vec<Vec<f64>>,
}

/// Labels each grid node nondegenerate iff `lambda_min(H(x)) > tol`.
pub fn nondegeneracy_map(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    grid: &ParamGrid,
    tol: f64,
) -> Result<NondegeneracyMap> {
    check_compatible(patch, domain)?;
    grid.validate()?;
    let nodes = grid.nodes();
    for x in &nodes {
        check_in_ball(patch, x)?;
    }
    let samples: Vec<NondegeneracySample> = nodes
        .par_iter()
        .map(|x| {
            let h = pullback_unchecked(patch, domain, x);
            let lmin = sorted_eigen(&h).0[0];
            NondegeneracySample {
                x: x.clone(),
                min_eigenvalue: lmin,
                nondegenerate: lmin > tol,
            }
        })
        .collect();
    let degenerate_points: Vec<Vec<f64>> = samples
        .iter()
        .filter(|s| !s.nondegenerate)
        .map(|s| s.x.clone())
        .collect();
    Ok(NondegeneracyMap {
        patch: patch.name().into(),
        tolerance: tol,
        all_nondegenerate: degenerate_points.is_empty(),
        samples,
        degenerate_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_domain, make_patch, PatchSpec};

    fn setup(spec: PatchSpec) -> (DomainModel, Box<dyn PatchModel>) {
        let p = make_patch(&spec).unwrap();
        let d = make_domain(&p.domain_spec()).unwrap();
        (d, p.into_model())
    }

    #[test]
    fn hopf_tangency_and_form() {
        let (d, p) = setup(PatchSpec::hopf());
        for t in [-2.0, -0.3, 0.0, 1.1] {
            assert!(tangency_residual(p.as_ref(), &d, &[t]) <= 1e-12);
            let f = pullback_form(p.as_ref(), &d, &[t]).unwrap();
            assert!((f.h[(0, 0)] - 2.0).abs() < 1e-14);
            assert_eq!(f.m[(0, 0)], f.h[(0, 0)] / 2.0);
            assert!((pullback_det(p.as_ref(), &d, &[t]).unwrap() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn egg_curve_form_closed_form() {
        let (d, p) = setup(PatchSpec::egg_curve());
        for u in [-0.7f64, -0.2, 0.05, 0.4, 0.85] {
            assert!(tangency_residual(p.as_ref(), &d, &[u]) <= 1e-12);
            let h = pullback_form(p.as_ref(), &d, &[u]).unwrap().h[(0, 0)];
            let expect = 12.0 * u * u + 8.0 * u.powi(6) / (1.0 - u.powi(4));
            assert!((h - expect).abs() <= 1e-12 * expect.max(1.0), "u={u}: {h} vs {expect}");
        }
        assert_eq!(pullback_det(p.as_ref(), &d, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn torus_form_is_constant() {
        let (d, p) = setup(PatchSpec::torus3());
        for x in [[0.0, 0.0], [0.4, -1.2], [1.5, 0.7]] {
            let f = pullback_form(p.as_ref(), &d, &x).unwrap();
            let expect = DMatrix::from_row_slice(2, 2, &[4.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0]);
            assert!((&f.h - expect).abs().max() < 1e-14);
            assert!((f.h.determinant() - 4.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn nontangential_circle_residual_is_one() {
        let (d, p) = setup(PatchSpec::nontangential_circle());
        for t in [-1.0, 0.0, 2.5] {
            assert!((tangency_residual(p.as_ref(), &d, &[t]) - 1.0).abs() < 1e-14);
        }
        let grid = ParamGrid::new(vec![-3.0], vec![3.0], vec![61]).unwrap();
        let audit = patch_audit(p.as_ref(), &d, &grid);
        assert!(!audit.tangency_passed);
        assert!(audit.boundary_passed && audit.immersion_passed);
        assert!(!audit.passed);
    }

    #[test]
    fn pullback_rejects_outside_ball() {
        let (d, p) = setup(PatchSpec::egg_curve());
        assert!(matches!(
            pullback_form(p.as_ref(), &d, &[0.95]),
            Err(Error::OutsideParameterBall { .. })
        ));
    }

    #[test]
    fn egg_nondegeneracy_cluster() {
        let (d, p) = setup(PatchSpec::egg_curve());
        let grid = ParamGrid::new(vec![-0.5], vec![0.5], vec![1001]).unwrap();
        let map = nondegeneracy_map(p.as_ref(), &d, &grid, 1e-6).unwrap();
        let bound = (1e-6f64 / 12.0).sqrt();
        for s in &map.samples {
            assert_eq!(s.nondegenerate, s.x[0].abs() > bound * 1.01, "u = {}", s.x[0]);
        }
        assert_eq!(map.degenerate_points.len(), 1);
        assert!(map.degenerate_points[0][0].abs() < 1e-12);
    }

    #[test]
    fn real_circle_nondegenerate() {
        let (d, p) = setup(PatchSpec::real_circle());
        let grid = ParamGrid::new(vec![-3.0], vec![3.0], vec![37]).unwrap();
        let map = nondegeneracy_map(p.as_ref(), &d, &grid, 1e-6).unwrap();
        assert!(map.all_nondegenerate);
        for s in &map.samples {
            assert!((s.min_eigenvalue - 2.0).abs() < 1e-13);
        }
    }
}
