//! Convex domains in C^n given by real polynomial defining functions, and the
//! first/second-order boundary geometry derived from them.
//!
//! Real coordinates are interleaved as `(x_1, y_1, ..., x_n, y_n)` with
//! `z_j = x_j + i y_j`. Wirtinger derivatives follow
//! `d/dz_j = (d/dx_j - i d/dy_j) / 2` and `d/dzbar_j = (d/dx_j + i d/dy_j) / 2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Monomial, Polynomial};

/// Relative factor for the boundary-membership test `|rho(p)| <= 1e-9 (1 + |p|^deg)`.
pub const BOUNDARY_REL_TOL: f64 = 1e-9;
/// Bisection stops once `|rho| <= BISECTION_TOL`.
pub const BISECTION_TOL: f64 = 1e-12;
/// Lower bound accepted for the smallest eigenvalue of the restricted second fundamental form.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealPoint(Vec<f64>);

impl RealPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 4 || coords.len() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "a real point needs 2n >= 4 coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self(coords))
    }

    pub fn ambient_n(&self) -> usize {
        self.0.len() / 2
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_complex(&self) -> ComplexPoint {
        ComplexPoint(
            self.0
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint(Vec<Complex64>);

impl ComplexPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a complex point needs n >= 2 coordinates, got {}",
                coords.len()
            )));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn ambient_n(&self) -> usize {
        self.0.len()
    }

    pub fn to_real(&self) -> RealPoint {
        RealPoint(self.0.iter().flat_map(|c| [c.re, c.im]).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

pub(crate) fn complex_to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// A real polynomial in the `2n` real coordinates of C^n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefiningFunction {
    ambient_n: usize,
    poly: Polynomial,
}

impl DefiningFunction {
    pub fn new(ambient_n: usize, monomials: Vec<Monomial>) -> Result<Self> {
        if ambient_n < 2 {
            return Err(Error::InvalidInput(format!(
                "ambient complex dimension must be >= 2, got {ambient_n}"
            )));
        }
        Ok(Self {
            ambient_n,
            poly: Polynomial::from_terms(2 * ambient_n, monomials)?,
        })
    }

    pub fn from_polynomial(ambient_n: usize, poly: Polynomial) -> Result<Self> {
        if poly.nvars() != 2 * ambient_n {
            return Err(Error::DimensionMismatch {
                expected: 2 * ambient_n,
                got: poly.nvars(),
            });
        }
        Ok(Self { ambient_n, poly })
    }

    pub fn ambient_n(&self) -> usize {
        self.ambient_n
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn degree(&self) -> u32 {
        self.poly.degree()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }

    pub fn derivative(&self, var: usize) -> Self {
        Self {
            ambient_n: self.ambient_n,
            poly: self.poly.derivative(var),
        }
    }
}

/// Complex first and second Wirtinger derivatives of `rho` at a point.
#[derive(Clone, Debug)]
pub struct WirtingerJet {
    /// `d rho / d z_j`
    pub first: Vec<Complex64>,
    /// `d^2 rho / d z_j d z_k` (complex symmetric)
    pub second_holo: DMatrix<Complex64>,
    /// `d^2 rho / d z_j d zbar_k` (Hermitian)
    pub second_mixed: DMatrix<Complex64>,
}

impl WirtingerJet {
    pub fn from_real(gradient: &DVector<f64>, hessian: &DMatrix<f64>) -> Self {
        let n = gradient.len() / 2;
        let first = (0..n)
            .map(|j| 0.5 * Complex64::new(gradient[2 * j], -gradient[2 * j + 1]))
            .collect();
        let mut second_holo = DMatrix::zeros(n, n);
        let mut second_mixed = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let xx = hessian[(2 * j, 2 * k)];
                let yy = hessian[(2 * j + 1, 2 * k + 1)];
                let xy = hessian[(2 * j, 2 * k + 1)];
                let yx = hessian[(2 * j + 1, 2 * k)];
                second_holo[(j, k)] = 0.25 * Complex64::new(xx - yy, -(xy + yx));
                second_mixed[(j, k)] = 0.25 * Complex64::new(xx + yy, xy - yx);
            }
        }
        Self {
            first,
            second_holo,
            second_mixed,
        }
    }
}

/// Serializable description of a domain (the domain file format).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDescription {
    pub name: String,
    pub ambient_n: usize,
    /// Each row is the `2n` exponents followed by the coefficient.
    pub monomials: Vec<Vec<f64>>,
    pub interior_witness: Vec<f64>,
    pub bounding_radius: f64,
}

#[derive(Clone, Debug)]
pub struct DomainModel {
    name: String,
    rho: DefiningFunction,
    interior_witness: RealPoint,
    bounding_radius: f64,
    grad: Vec<Polynomial>,
    hess: Vec<Vec<Polynomial>>,
}

impl DomainModel {
    pub fn new(
        name: impl Into<String>,
        rho: DefiningFunction,
        interior_witness: RealPoint,
        bounding_radius: f64,
    ) -> Result<Self> {
        let n = rho.ambient_n();
        if interior_witness.ambient_n() != n {
            return Err(Error::DimensionMismatch {
                expected: 2 * n,
                got: interior_witness.coords().len(),
            });
        }
        if !(bounding_radius > 0.0 && bounding_radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "bounding radius must be positive, got {bounding_radius}"
            )));
        }
        let w = rho.eval(interior_witness.coords());
        if w >= 0.0 {
            return Err(Error::InvalidInput(format!(
                "interior witness has rho = {w} >= 0"
            )));
        }
        let grad: Vec<Polynomial> = (0..2 * n).map(|a| rho.poly.derivative(a)).collect();
        let hess = grad
            .iter()
            .map(|g| (0..2 * n).map(|b| g.derivative(b)).collect())
            .collect();
        Ok(Self {
            name: name.into(),
            rho,
            interior_witness,
            bounding_radius,
            grad,
            hess,
        })
    }

    pub fn from_description(desc: &DomainDescription) -> Result<Self> {
        let nvars = 2 * desc.ambient_n;
        let mut monomials = Vec::with_capacity(desc.monomials.len());
        for row in &desc.monomials {
            if row.len() != nvars + 1 {
                return Err(Error::InvalidInput(format!(
                    "monomial row must have {} entries (exponents + coefficient), got {}",
                    nvars + 1,
                    row.len()
                )));
            }
            let mut exps = Vec::with_capacity(nvars);
            for &e in &row[..nvars] {
                if e < 0.0 || e.fract() != 0.0 || e > u32::MAX as f64 {
                    return Err(Error::InvalidInput(format!(
                        "exponent {e} is not a non-negative integer"
                    )));
                }
                exps.push(e as u32);
            }
            monomials.push(Monomial::new(exps, row[nvars]));
        }
        let rho = DefiningFunction::new(desc.ambient_n, monomials)?;
        Self::new(
            desc.name.clone(),
            rho,
            RealPoint::new(desc.interior_witness.clone())?,
            desc.bounding_radius,
        )
    }

    pub fn to_description(&self) -> DomainDescription {
        DomainDescription {
            name: self.name.clone(),
            ambient_n: self.ambient_n(),
            monomials: self
                .rho
                .polynomial()
                .terms()
                .iter()
                .map(|t| {
                    let mut row: Vec<f64> = t.exponents.iter().map(|&e| e as f64).collect();
                    row.push(t.coeff);
                    row
                })
                .collect(),
            interior_witness: self.interior_witness.coords().to_vec(),
            bounding_radius: self.bounding_radius,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_n(&self) -> usize {
        self.rho.ambient_n()
    }

    pub fn rho(&self) -> &DefiningFunction {
        &self.rho
    }

    pub fn interior_witness(&self) -> &RealPoint {
        &self.interior_witness
    }

    pub fn bounding_radius(&self) -> f64 {
        self.bounding_radius
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != 2 * self.ambient_n() {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.ambient_n(),
                got: len,
            });
        }
        Ok(())
    }

    pub(crate) fn rho_at(&self, x: &[f64]) -> f64 {
        self.rho.eval(x)
    }

    pub(crate) fn gradient_at(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.grad.len(), self.grad.iter().map(|g| g.eval(x)))
    }

    pub(crate) fn hessian_at(&self, x: &[f64]) -> DMatrix<f64> {
        let m = self.hess.len();
        let mut h = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in a..m {
                let v = self.hess[a][b].eval(x);
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        h
    }

    /// `d rho / d z_j` at a real point.
    pub(crate) fn holo_gradient_at(&self, x: &[f64]) -> Vec<Complex64> {
        (0..self.ambient_n())
            .map(|j| {
                0.5 * Complex64::new(self.grad[2 * j].eval(x), -self.grad[2 * j + 1].eval(x))
            })
            .collect()
    }

    /// `G(zeta, z) = sum_j d_j rho(zeta) (zeta_j - z_j)` without the boundary check.
    pub(crate) fn pairing_at(&self, zeta: &[Complex64], z: &[Complex64]) -> Complex64 {
        let zr = complex_to_real(zeta);
        self.holo_gradient_at(&zr)
            .iter()
            .zip(zeta.iter().zip(z))
            .map(|(d, (a, b))| d * (a - b))
            .sum()
    }

    pub fn gradient(&self, p: &RealPoint) -> Result<DVector<f64>> {
        self.check_dim(p.coords().len())?;
        Ok(self.gradient_at(p.coords()))
    }

    pub fn hessian(&self, p: &RealPoint) -> Result<DMatrix<f64>> {
        self.check_dim(p.coords().len())?;
        Ok(self.hessian_at(p.coords()))
    }

    pub fn wirtinger_jet(&self, p: &RealPoint) -> Result<WirtingerJet> {
        self.check_dim(p.coords().len())?;
        Ok(WirtingerJet::from_real(
            &self.gradient_at(p.coords()),
            &self.hessian_at(p.coords()),
        ))
    }

    pub fn boundary_tolerance(&self, p: &[f64]) -> f64 {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        BOUNDARY_REL_TOL * (1.0 + norm.powi(self.rho.degree() as i32))
    }

    pub fn check_on_boundary(&self, p: &[f64]) -> Result<()> {
        let residual = self.rho_at(p).abs();
        let tolerance = self.boundary_tolerance(p);
        if residual > tolerance {
            return Err(Error::NotOnBoundary {
                residual,
                tolerance,
            });
        }
        Ok(())
    }

    /// Boundary point along the ray from the interior witness in direction `dir`,
    /// or `None` if the ray does not leave the domain within the search range.
    pub fn boundary_along_ray(&self, dir: &[f64]) -> Option<RealPoint> {
        let w = self.interior_witness.coords();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let u: Vec<f64> = dir.iter().map(|v| v / norm).collect();
        let at = |t: f64| -> Vec<f64> { w.iter().zip(&u).map(|(a, b)| a + t * b).collect() };
        let mut hi = 2.0 * self.bounding_radius + self.interior_witness.norm();
        let mut expansions = 0;
        while self.rho_at(&at(hi)) <= 0.0 {
            expansions += 1;
            if expansions > 4 {
                return None;
            }
            hi *= 2.0;
        }
        let mut lo = 0.0;
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let r = self.rho_at(&at(mid));
            if r.abs() <= BISECTION_TOL {
                break;
            }
            if r < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(RealPoint(at(mid)))
    }

    /// Seeded boundary sampler: Gaussian directions, ray shooting from the
    /// interior witness, bisection on `rho`. Entry `i` is `None` when ray `i`
    /// never left the domain.
    pub fn sample_boundary(&self, count: usize, seed: u64) -> Vec<Option<RealPoint>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 2 * self.ambient_n();
        let dirs: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        dirs.par_iter().map(|d| self.boundary_along_ray(d)).collect()
    }
}

/// Evaluates `rho(z)`.
pub fn eval_defining(domain: &DomainModel, z: &RealPoint) -> Result<f64> {
    domain.check_dim(z.coords().len())?;
    Ok(domain.rho_at(z.coords()))
}

#[derive(Clone, Debug)]
pub struct BoundaryFrame {
    pub point: RealPoint,
    pub gradient: DVector<f64>,
    pub hessian: DMatrix<f64>,
    /// Columns form an orthonormal basis of `T_p(bd Omega)`.
    pub tangent_basis: DMatrix<f64>,
    /// `T^T H T` in the tangent basis.
    pub restricted_form: DMatrix<f64>,
}

/// Orthonormal basis of the hyperplane orthogonal to `normal`, built by
/// Gram-Schmidt on the standard basis with the most normal-aligned axis dropped.
fn orthonormal_complement(normal: &DVector<f64>) -> DMatrix<f64> {
    let m = normal.len();
    let unit = normal.normalize();
    let skip = unit.iamax();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
    for i in (0..m).filter(|&i| i != skip) {
        let mut v = DVector::zeros(m);
        v[i] = 1.0;
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            v -= &unit * unit.dot(&v);
            for c in &cols {
                v -= c * c.dot(&v);
            }
        }
        cols.push(v.normalize());
    }
    DMatrix::from_columns(&cols)
}

pub fn boundary_frame(domain: &DomainModel, p: &RealPoint) -> Result<BoundaryFrame> {
    domain.check_dim(p.coords().len())?;
    domain.check_on_boundary(p.coords())?;
    let gradient = domain.gradient_at(p.coords());
    let norm = gradient.norm();
    if norm <= 1e-12 {
        return Err(Error::VanishingGradient { norm });
    }
    let hessian = domain.hessian_at(p.coords());
    let tangent_basis = orthonormal_complement(&gradient);
    let mut restricted_form = tangent_basis.transpose() * &hessian * &tangent_basis;
    // exact symmetrization; the product is symmetric up to rounding
    restricted_form = (&restricted_form + restricted_form.transpose()) * 0.5;
    Ok(BoundaryFrame {
        point: p.clone(),
        gradient,
        hessian,
        tangent_basis,
        restricted_form,
    })
}

#[derive(Clone, Debug)]
pub struct NullSpaceResult {
    pub dimension: usize,
    /// Orthonormal ambient vectors spanning the null space.
    pub basis: Vec<DVector<f64>>,
    /// Full spectrum of the restricted form, ascending.
    pub eigenvalues: Vec<f64>,
    pub tolerance: f64,
}

impl NullSpaceResult {
    /// Distance of the unit vector along `v` from the null space.
    pub fn distance_from(&self, v: &DVector<f64>) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        let u = v / n;
        let mut r = u.clone();
        for b in &self.basis {
            r -= b * b.dot(&u);
        }
        r.norm()
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
pub(crate) fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &idx.iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Null space of the second fundamental form. `tol = None` uses
/// `1e-8 * lambda_max`.
pub fn null_space(frame: &BoundaryFrame, tol: Option<f64>) -> Result<NullSpaceResult> {
    let (eigenvalues, vectors) = sorted_eigen(&frame.restricted_form);
    let scale = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tolerance = tol.unwrap_or((1e-8 * scale).max(f64::MIN_POSITIVE));
    if let Some(&lo) = eigenvalues.first() {
        if lo < -tolerance {
            return Err(Error::NotConvex {
                eigenvalue: lo,
                tolerance,
            });
        }
    }
    let basis: Vec<DVector<f64>> = eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < tolerance)
        .map(|(i, _)| &frame.tangent_basis * vectors.column(i))
        .collect();
    Ok(NullSpaceResult {
        dimension: basis.len(),
        basis,
        eigenvalues,
        tolerance,
    })
}

/// The peak pairing `G(zeta, z) = sum_j d_j rho(zeta) (zeta_j - z_j)`.
pub fn peak_pairing(domain: &DomainModel, zeta: &ComplexPoint, z: &ComplexPoint) -> Result<Complex64> {
    let n = domain.ambient_n();
    if zeta.ambient_n() != n || z.ambient_n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if zeta.ambient_n() != n {
                zeta.ambient_n()
            } else {
                z.ambient_n()
            },
        });
    }
    domain.check_on_boundary(&complex_to_real(zeta.coords()))?;
    Ok(domain.pairing_at(zeta.coords(), z.coords()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityAudit {
    pub domain: String,
    pub seed: u64,
    pub samples_requested: usize,
    pub boundary_points: usize,
    pub rays_failed: usize,
    pub min_restricted_eigenvalue: f64,
    pub min_eigenvalue_witness: Vec<f64>,
    pub eigenvalue_tolerance: f64,
    pub min_gradient_norm: f64,
    pub midpoint_pairs: usize,
    /// Largest `rho((zeta + xi) / 2)` over sampled boundary pairs; must be negative.
    pub max_midpoint_rho: f64,
    pub passed: bool,
    pub failures: Vec<String>,
}

struct SampleStats {
    min_eig: f64,
    grad_norm: f64,
}

/// Sampling audit of convexity, non-degenerate gradient and the absence of
/// boundary line segments. Failures are recorded, not raised.
pub fn convexity_audit(domain: &DomainModel, sample_count: usize, seed: u64) -> ConvexityAudit {
    let samples = domain.sample_boundary(sample_count, seed);
    let points: Vec<&RealPoint> = samples.iter().flatten().collect();
    let rays_failed = samples.len() - points.len();

    let stats: Vec<std::result::Result<SampleStats, String>> = points
        .par_iter()
        .map(|p| {
            let frame = boundary_frame(domain, p).map_err(|e| e.to_string())?;
            let (eigs, _) = sorted_eigen(&frame.restricted_form);
            Ok(SampleStats {
                min_eig: eigs.first().copied().unwrap_or(f64::INFINITY),
                grad_norm: frame.gradient.norm(),
            })
        })
        .collect();

    let mut failures = Vec::new();
    if rays_failed > 0 {
        failures.push(format!(
            "{rays_failed} sampling rays did not leave the domain (unbounded or bounding radius too small)"
        ));
    }
    let mut min_eig = f64::INFINITY;
    let mut witness = Vec::new();
    let mut min_grad = f64::INFINITY;
    // reduction in sample index order
    for (p, s) in points.iter().zip(&stats) {
        match s {
            Ok(s) => {
                if s.min_eig < min_eig {
                    min_eig = s.min_eig;
                    witness = p.coords().to_vec();
                }
                min_grad = min_grad.min(s.grad_norm);
            }
            Err(e) => failures.push(format!("frame at {:?}: {e}", p.coords())),
        }
    }
    if min_eig < -PSD_TOL {
        failures.push(format!(
            "restricted second fundamental form has eigenvalue {min_eig:e} < -{PSD_TOL:e} at {witness:?}"
        ));
    }
    if !(min_grad > 1e-12) {
        failures.push(format!("gradient norm {min_grad:e} vanishes"));
    }

    let m = points.len();
    let mids: Vec<f64> = (0..if m > 1 { m } else { 0 })
        .into_par_iter()
        .map(|i| {
            let a = points[i].coords();
            let b = points[(i + 1) % m].coords();
            let mid: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect();
            domain.rho_at(&mid)
        })
        .collect();
    let max_mid = mids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !mids.is_empty() && !(max_mid < 0.0) {
        failures.push(format!(
            "midpoint of a boundary pair has rho = {max_mid:e} >= 0 (possible boundary segment)"
        ));
    }
    if points.is_empty() {
        failures.push("no boundary points sampled".into());
    }

    ConvexityAudit {
        domain: domain.name().to_string(),
        seed,
        samples_requested: sample_count,
        boundary_points: points.len(),
        rays_failed,
        min_restricted_eigenvalue: min_eig,
        min_eigenvalue_witness: witness,
        eigenvalue_tolerance: PSD_TOL,
        min_gradient_norm: min_grad,
        midpoint_pairs: mids.len(),
        max_midpoint_rho: max_mid,
        passed: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_domain, DomainSpec};

    fn ball() -> DomainModel {
        make_domain(&DomainSpec::Ball { n: 2 }).unwrap()
    }

    fn egg() -> DomainModel {
        make_domain(&DomainSpec::Egg { m: 2 }).unwrap()
    }

    fn rp(v: &[f64]) -> RealPoint {
        RealPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(eval_defining(&ball(), &rp(&[0.0; 4])).unwrap(), -1.0);
        assert_eq!(eval_defining(&egg(), &rp(&[1.0, 0.0, 0.0, 0.0])).unwrap(), 0.0);
        let s = 2f64.powf(-0.25);
        let v = eval_defining(&egg(), &rp(&[0.0, 0.0, s, 0.0])).unwrap();
        assert!((v + 0.5).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_wrong_dimension() {
        let p = rp(&[0.0; 6]);
        assert!(matches!(
            eval_defining(&ball(), &p),
            Err(Error::DimensionMismatch { expected: 4, got: 6 })
        ));
    }

    #[test]
    fn ball_frame() {
        let f = boundary_frame(&ball(), &rp(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(f.gradient.as_slice(), &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.hessian, DMatrix::identity(4, 4) * 2.0);
        assert!((&f.restricted_form - DMatrix::identity(3, 3) * 2.0).norm() < 1e-14);
        let ns = null_space(&f, None).unwrap();
        assert_eq!(ns.dimension, 0);
    }

    #[test]
    fn egg_frame_at_degenerate_point() {
        let f = boundary_frame(&egg(), &rp(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(
            f.hessian,
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 0.0, 0.0]))
        );
        assert_eq!(
            f.restricted_form,
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0, 0.0]))
        );
        let ns = null_space(&f, None).unwrap();
        assert_eq!(ns.dimension, 2);
        let ex2 = DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0]);
        let ey2 = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]);
        assert!(ns.distance_from(&ex2) < 1e-12);
        assert!(ns.distance_from(&ey2) < 1e-12);
    }

    #[test]
    fn egg_frame_off_degenerate_locus() {
        let s: f64 = 0.5;
        let p = rp(&[(1.0 - s.powi(4)).sqrt(), 0.0, s, 0.0]);
        let f = boundary_frame(&egg(), &p).unwrap();
        let expected = [2.0, 2.0, 12.0 * s * s, 4.0 * s * s];
        for (i, e) in expected.iter().enumerate() {
            assert!((f.hessian[(i, i)] - e).abs() < 1e-14);
        }
        assert_eq!(null_space(&f, None).unwrap().dimension, 0);
    }

    #[test]
    fn frame_rejects_interior_point() {
        let err = boundary_frame(&ball(), &rp(&[0.5, 0.0, 0.0, 0.0]));
        assert!(matches!(err, Err(Error::NotOnBoundary { .. })));
    }

    #[test]
    fn frame_rejects_vanishing_gradient() {
        // rho = -(|z|^2 - 1)^2 vanishes to second order on the sphere
        let base = ball().rho().polynomial().clone();
        let sq = base.mul(&base);
        let rho = DefiningFunction::from_polynomial(2, sq.mul(&Polynomial::constant(4, -1.0))).unwrap();
        let d = DomainModel::new("negsq", rho, rp(&[0.0; 4]), 2.0).unwrap();
        let err = boundary_frame(&d, &rp(&[1.0, 0.0, 0.0, 0.0]));
        assert!(matches!(err, Err(Error::VanishingGradient { .. })));
    }

    #[test]
    fn null_space_rejects_indefinite_form() {
        let f = BoundaryFrame {
            point: rp(&[1.0, 0.0, 0.0, 0.0]),
            gradient: DVector::from_vec(vec![2.0, 0.0, 0.0, 0.0]),
            hessian: DMatrix::identity(4, 4),
            tangent_basis: DMatrix::identity(4, 3),
            restricted_form: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, -2.0])),
        };
        assert!(matches!(null_space(&f, None), Err(Error::NotConvex { .. })));
    }

    #[test]
    fn pairing_examples() {
        let c = |re: &[f64]| rp(re).to_complex();
        let zeta = c(&[0.6, 0.0, 0.0, 0.8]);
        let g = peak_pairing(&ball(), &zeta, &c(&[0.0; 4])).unwrap();
        assert!((g - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(peak_pairing(&ball(), &zeta, &zeta).unwrap(), Complex64::new(0.0, 0.0));
        let g = peak_pairing(&egg(), &c(&[1.0, 0.0, 0.0, 0.0]), &c(&[0.0; 4])).unwrap();
        assert_eq!(g, Complex64::new(1.0, 0.0));
        let bad = peak_pairing(&ball(), &c(&[0.5, 0.0, 0.0, 0.0]), &c(&[0.0; 4]));
        assert!(matches!(bad, Err(Error::NotOnBoundary { .. })));
    }

    #[test]
    fn description_round_trip() {
        let d = egg();
        let back = DomainModel::from_description(&d.to_description()).unwrap();
        assert_eq!(back.rho(), d.rho());
        assert_eq!(back.name(), d.name());
    }

    #[test]
    fn description_rejects_fractional_exponent() {
        let mut desc = ball().to_description();
        desc.monomials[0][0] = 1.5;
        assert!(DomainModel::from_description(&desc).is_err());
    }
}
