//! Reference domains and complex-tangential patches with closed-form data.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::domain::{DefiningFunction, DomainModel, RealPoint};
use crate::error::{Error, Result};
use crate::patch::PatchModel;
use crate::poly::Polynomial;

/// Largest admissible `|u|` on the egg curve.
pub const EGG_CURVE_LIMIT: f64 = 0.9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "catalog", rename_all = "snake_case")]
pub enum DomainSpec {
    /// `rho = |z|^2 - 1` in C^n.
    Ball { n: usize },
    /// `rho = |z_1|^2 + |z_2|^{2m} - 1` in C^2.
    Egg { m: u32 },
}

impl DomainSpec {
    pub fn label(&self) -> String {
        match self {
            DomainSpec::Ball { n } => format!("ball({n})"),
            DomainSpec::Egg { m } => format!("egg({m})"),
        }
    }
}

fn abs_sq(nvars: usize, j: usize) -> Polynomial {
    Polynomial::var_power(nvars, 2 * j, 2, 1.0).add(&Polynomial::var_power(nvars, 2 * j + 1, 2, 1.0))
}

pub fn make_domain(spec: &DomainSpec) -> Result<DomainModel> {
    match *spec {
        DomainSpec::Ball { n } => {
            if n < 2 {
                return Err(Error::UnsupportedCatalog(format!("ball({n}): need n >= 2")));
            }
            let nvars = 2 * n;
            let mut p = Polynomial::constant(nvars, -1.0);
            for j in 0..n {
                p = p.add(&abs_sq(nvars, j));
            }
            DomainModel::new(
                spec.label(),
                DefiningFunction::from_polynomial(n, p)?,
                RealPoint::new(vec![0.0; nvars])?,
                1.0,
            )
        }
        DomainSpec::Egg { m } => {
            if m < 2 {
                return Err(Error::UnsupportedCatalog(format!("egg({m}): need m >= 2")));
            }
            let p = abs_sq(4, 0)
                .add(&abs_sq(4, 1).pow(m))
                .add(&Polynomial::constant(4, -1.0));
            DomainModel::new(
                spec.label(),
                DefiningFunction::from_polynomial(2, p)?,
                RealPoint::new(vec![0.0; 4])?,
                1.5,
            )
        }
    }
}

/// `rho = x_1^2 + y_1^2 + x_2^2 - y_2^2 - 1`: an indefinite, unbounded
/// negative control for the convexity audit.
pub fn hyperboloid_control() -> DomainModel {
    let p = abs_sq(4, 0)
        .add(&Polynomial::var_power(4, 2, 2, 1.0))
        .add(&Polynomial::var_power(4, 3, 2, -1.0))
        .add(&Polynomial::constant(4, -1.0));
    DomainModel::new(
        "hyperboloid",
        DefiningFunction::from_polynomial(2, p).expect("arity"),
        RealPoint::new(vec![0.0; 4]).expect("arity"),
        2.0,
    )
    .expect("origin is interior")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PatchSpec {
    /// `t -> (e^{it}, e^{-it}) / sqrt 2` on ball(2)
    Hopf { radius: f64 },
    /// `t -> (cos t, sin t)` on ball(2)
    RealCircle { radius: f64 },
    /// `x -> (sqrt(1 - u^4), u)` with `u = center + x` on egg(2)
    EggCurve { center: f64, radius: f64 },
    /// `(s, t) -> (e^{is}, e^{it}, e^{-i(s+t)}) / sqrt 3` on ball(3)
    Torus3 { radius: f64 },
    /// `t -> (e^{it}, 0)` on ball(2); fails the tangency audit
    NontangentialCircle { radius: f64 },
}

impl PatchSpec {
    pub fn hopf() -> Self {
        PatchSpec::Hopf { radius: PI }
    }

    pub fn real_circle() -> Self {
        PatchSpec::RealCircle { radius: PI }
    }

    pub fn egg_curve() -> Self {
        PatchSpec::EggCurve {
            center: 0.0,
            radius: EGG_CURVE_LIMIT,
        }
    }

    /// The egg curve restricted to `u in (0.1, 0.5)`, recentered at `u = 0.3`.
    pub fn egg_subpatch() -> Self {
        PatchSpec::EggCurve {
            center: 0.3,
            radius: 0.2,
        }
    }

    pub fn torus3() -> Self {
        PatchSpec::Torus3 { radius: PI }
    }

    pub fn nontangential_circle() -> Self {
        PatchSpec::NontangentialCircle { radius: PI }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PatchSpec::Hopf { .. } => "hopf",
            PatchSpec::RealCircle { .. } => "real_circle",
            PatchSpec::EggCurve { .. } => "egg_curve",
            PatchSpec::Torus3 { .. } => "torus3",
            PatchSpec::NontangentialCircle { .. } => "nontangential_circle",
        }
    }

    pub fn domain_spec(&self) -> DomainSpec {
        match self {
            PatchSpec::EggCurve { .. } => DomainSpec::Egg { m: 2 },
            PatchSpec::Torus3 { .. } => DomainSpec::Ball { n: 3 },
            _ => DomainSpec::Ball { n: 2 },
        }
    }

    /// Validated patch model for this spec.
    pub fn build(&self) -> Result<Box<dyn PatchModel>> {
        Ok(make_patch(self)?.into_model())
    }

    pub fn radius(&self) -> f64 {
        match *self {
            PatchSpec::Hopf { radius }
            | PatchSpec::RealCircle { radius }
            | PatchSpec::EggCurve { radius, .. }
            | PatchSpec::Torus3 { radius }
            | PatchSpec::NontangentialCircle { radius } => radius,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CatalogPatch {
    spec: PatchSpec,
}

pub fn make_patch(spec: &PatchSpec) -> Result<CatalogPatch> {
    let r = spec.radius();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::UnsupportedCatalog(format!(
            "{}: radius must be positive, got {r}",
            spec.name()
        )));
    }
    match *spec {
        PatchSpec::EggCurve { center, radius } => {
            if center.abs() + radius > EGG_CURVE_LIMIT + 1e-12 {
                return Err(Error::UnsupportedCatalog(format!(
                    "egg_curve: |center| + radius = {} exceeds {EGG_CURVE_LIMIT}",
                    center.abs() + radius
                )));
            }
        }
        _ => {
            if r > PI + 1e-12 {
                return Err(Error::UnsupportedCatalog(format!(
                    "{}: radius {r} exceeds pi (patch would not be an imbedding)",
                    spec.name()
                )));
            }
        }
    }
    Ok(CatalogPatch { spec: spec.clone() })
}

fn cis(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, t)
}

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl CatalogPatch {
    pub fn spec(&self) -> &PatchSpec {
        &self.spec
    }

    pub fn domain_spec(&self) -> DomainSpec {
        self.spec.domain_spec()
    }

    pub fn into_model(self) -> Box<dyn PatchModel> {
        Box::new(self)
    }
}

impl PatchModel for CatalogPatch {
    fn name(&self) -> &str {
        self.spec.name()
    }

    fn dim(&self) -> usize {
        match self.spec {
            PatchSpec::Torus3 { .. } => 2,
            _ => 1,
        }
    }

    fn ambient_n(&self) -> usize {
        match self.spec {
            PatchSpec::Torus3 { .. } => 3,
            _ => 2,
        }
    }

    fn radius(&self) -> f64 {
        self.spec.radius()
    }

    fn eval(&self, x: &[f64]) -> Vec<Complex64> {
        match self.spec {
            PatchSpec::Hopf { .. } => vec![cis(x[0]) * FRAC_1_SQRT_2, cis(-x[0]) * FRAC_1_SQRT_2],
            PatchSpec::RealCircle { .. } => {
                vec![Complex64::new(x[0].cos(), 0.0), Complex64::new(x[0].sin(), 0.0)]
            }
            PatchSpec::EggCurve { center, .. } => {
                let u = center + x[0];
                vec![
                    Complex64::new((1.0 - u.powi(4)).sqrt(), 0.0),
                    Complex64::new(u, 0.0),
                ]
            }
            PatchSpec::Torus3 { .. } => {
                let c = 1.0 / 3f64.sqrt();
                vec![cis(x[0]) * c, cis(x[1]) * c, cis(-x[0] - x[1]) * c]
            }
            PatchSpec::NontangentialCircle { .. } => vec![cis(x[0]), ZERO],
        }
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<Complex64> {
        match self.spec {
            PatchSpec::Hopf { .. } => DMatrix::from_column_slice(
                2,
                1,
                &[I * cis(x[0]) * FRAC_1_SQRT_2, -I * cis(-x[0]) * FRAC_1_SQRT_2],
            ),
            PatchSpec::RealCircle { .. } => DMatrix::from_column_slice(
                2,
                1,
                &[Complex64::new(-x[0].sin(), 0.0), Complex64::new(x[0].cos(), 0.0)],
            ),
            PatchSpec::EggCurve { center, .. } => {
                let u = center + x[0];
                let a = (1.0 - u.powi(4)).sqrt();
                DMatrix::from_column_slice(
                    2,
                    1,
                    &[Complex64::new(-2.0 * u.powi(3) / a, 0.0), Complex64::new(1.0, 0.0)],
                )
            }
            PatchSpec::Torus3 { .. } => {
                let c = 1.0 / 3f64.sqrt();
                let w = -I * cis(-x[0] - x[1]) * c;
                DMatrix::from_row_slice(
                    3,
                    2,
                    &[I * cis(x[0]) * c, ZERO, ZERO, I * cis(x[1]) * c, w, w],
                )
            }
            PatchSpec::NontangentialCircle { .. } => {
                DMatrix::from_column_slice(2, 1, &[I * cis(x[0]), ZERO])
            }
        }
    }

    fn second(&self, x: &[f64]) -> Vec<DMatrix<Complex64>> {
        let s1 = |v: Complex64| DMatrix::from_element(1, 1, v);
        match self.spec {
            PatchSpec::Hopf { .. } => vec![
                s1(-cis(x[0]) * FRAC_1_SQRT_2),
                s1(-cis(-x[0]) * FRAC_1_SQRT_2),
            ],
            PatchSpec::RealCircle { .. } => vec![
                s1(Complex64::new(-x[0].cos(), 0.0)),
                s1(Complex64::new(-x[0].sin(), 0.0)),
            ],
            PatchSpec::EggCurve { center, .. } => {
                let u = center + x[0];
                let a = (1.0 - u.powi(4)).sqrt();
                let d2 = -6.0 * u * u / a - 4.0 * u.powi(6) / a.powi(3);
                vec![s1(Complex64::new(d2, 0.0)), s1(ZERO)]
            }
            PatchSpec::Torus3 { .. } => {
                let c = 1.0 / 3f64.sqrt();
                let w = -cis(-x[0] - x[1]) * c;
                vec![
                    DMatrix::from_row_slice(2, 2, &[-cis(x[0]) * c, ZERO, ZERO, ZERO]),
                    DMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, -cis(x[1]) * c]),
                    DMatrix::from_element(2, 2, w),
                ]
            }
            PatchSpec::NontangentialCircle { .. } => vec![s1(-cis(x[0])), s1(ZERO)],
        }
    }
}

/// A listed catalog item with its closed-form reference quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub kind: String,
    pub builder: Value,
    pub reference: Value,
    pub notes: String,
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    let sqrt2pi = 2f64.sqrt() * PI;
    let domain = |spec: DomainSpec, reference: Value, notes: &str| CatalogEntry {
        name: spec.label(),
        kind: "domain".into(),
        builder: serde_json::to_value(&spec).expect("serializable"),
        reference,
        notes: notes.into(),
    };
    let patch = |spec: PatchSpec, reference: Value, notes: &str| CatalogEntry {
        name: spec.name().into(),
        kind: "patch".into(),
        builder: serde_json::to_value(&spec).expect("serializable"),
        reference,
        notes: notes.into(),
    };
    vec![
        domain(
            DomainSpec::Ball { n: 2 },
            json!({"min_restricted_eigenvalue": 2.0}),
            "strictly convex; constant curvature",
        ),
        domain(
            DomainSpec::Ball { n: 3 },
            json!({"min_restricted_eigenvalue": 2.0}),
            "strictly convex; hosts torus3",
        ),
        domain(
            DomainSpec::Egg { m: 2 },
            json!({"degenerate_locus": "z2 = 0", "null_space_dim_at_(1,0)": 2}),
            "weakly convex; curvature of |z2|^4 vanishes exactly on z2 = 0",
        ),
        patch(
            PatchSpec::hopf(),
            json!({"tangency_residual": 0.0, "H": 2.0, "G": sqrt2pi}),
            "H = 2|gamma'|^2 with |gamma'| = 1",
        ),
        patch(
            PatchSpec::real_circle(),
            json!({"tangency_residual": 0.0, "H": 2.0, "G": sqrt2pi}),
            "real great circle; sum conj(gamma_j) gamma_j' = 0",
        ),
        patch(
            PatchSpec::egg_curve(),
            json!({"tangency_residual": 0.0, "H(u)": "12u^2 + 8u^6/(1-u^4)", "H(0)": 0.0}),
            "rho(sigma(u)) = 0 identically; degenerate at u = 0",
        ),
        patch(
            PatchSpec::egg_subpatch(),
            json!({"tangency_residual": 0.0, "u_range": [0.1, 0.5]}),
            "nondegenerate sub-patch of the egg curve",
        ),
        patch(
            PatchSpec::torus3(),
            json!({"tangency_residual": 0.0, "H": [[4.0/3.0, 2.0/3.0], [2.0/3.0, 4.0/3.0]],
                   "det_H": 4.0/3.0, "G": 2.0 * PI * 3f64.sqrt()}),
            "H constant; det M = 1/3",
        ),
        patch(
            PatchSpec::nontangential_circle(),
            json!({"tangency_residual": 1.0}),
            "negative control: fails only the tangency audit",
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::tangency_residual;

    #[test]
    fn rejects_unsupported_parameters() {
        assert!(make_domain(&DomainSpec::Ball { n: 1 }).is_err());
        assert!(make_domain(&DomainSpec::Egg { m: 1 }).is_err());
        assert!(make_patch(&PatchSpec::EggCurve { center: 0.5, radius: 0.5 }).is_err());
        assert!(make_patch(&PatchSpec::Hopf { radius: 4.0 }).is_err());
        assert!(make_patch(&PatchSpec::Torus3 { radius: -1.0 }).is_err());
    }

    #[test]
    fn egg_polynomial_shape() {
        let d = make_domain(&DomainSpec::Egg { m: 3 }).unwrap();
        assert_eq!(d.rho().degree(), 6);
        // |z2|^6 at z2 = (1, 1): 8
        assert_eq!(d.rho().eval(&[0.0, 0.0, 1.0, 1.0]), 7.0);
    }

    #[test]
    fn egg_curve_is_exactly_on_boundary() {
        let d = make_domain(&DomainSpec::Egg { m: 2 }).unwrap();
        let p = make_patch(&PatchSpec::egg_curve()).unwrap();
        for k in -9..=9 {
            let u = 0.09 * k as f64;
            let g = crate::domain::complex_to_real(&p.eval(&[u]));
            assert!(d.rho().eval(&g).abs() < 1e-15);
            assert!(tangency_residual(&p, &d, &[u]) < 1e-12);
        }
    }

    #[test]
    fn second_derivatives_match_finite_differences() {
        for spec in [
            PatchSpec::hopf(),
            PatchSpec::real_circle(),
            PatchSpec::egg_curve(),
            PatchSpec::torus3(),
            PatchSpec::nontangential_circle(),
        ] {
            let p = make_patch(&spec).unwrap();
            let x: Vec<f64> = (0..p.dim()).map(|i| 0.31 - 0.17 * i as f64).collect();
            let h = 1e-5;
            let jac = p.jacobian(&x);
            let sec = p.second(&x);
            for mu in 0..p.dim() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[mu] += h;
                xm[mu] -= h;
                let (gp, gm) = (p.eval(&xp), p.eval(&xm));
                let (jp, jm) = (p.jacobian(&xp), p.jacobian(&xm));
                for j in 0..p.ambient_n() {
                    let fd = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd - jac[(j, mu)]).norm() < 1e-8, "{} jac", spec.name());
                    for nu in 0..p.dim() {
                        let fd2 = (jp[(j, nu)] - jm[(j, nu)]) / (2.0 * h);
                        assert!((fd2 - sec[j][(mu, nu)]).norm() < 1e-8, "{} second", spec.name());
                    }
                }
            }
        }
    }

    #[test]
    fn entries_serialize_to_builder_formats() {
        for e in catalog_entries() {
            match e.kind.as_str() {
                "domain" => {
                    let spec: DomainSpec = serde_json::from_value(e.builder.clone()).unwrap();
                    let d = make_domain(&spec).unwrap();
                    let desc = serde_json::to_string(&d.to_description()).unwrap();
                    assert!(desc.contains("monomials"));
                }
                _ => {
                    let spec: PatchSpec = serde_json::from_value(e.builder.clone()).unwrap();
                    make_patch(&spec).unwrap();
                }
            }
        }
    }
}
