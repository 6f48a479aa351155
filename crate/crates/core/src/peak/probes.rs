use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bump::{BumpFunction, BumpKind};
use super::constants::ball_lattice;
use super::family::PeakFamily;
use super::minimizer::pairing_on_patch;
use crate::domain::{ComplexPoint, DomainModel, RealPoint};
use crate::error::{Error, Result};
use crate::patch::{check_in_ball, pullback_form, PatchModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyLimitRow {
    pub delta: f64,
    pub probe: f64,
    pub target: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyLimitTable {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// `<v|M(x)|v> / 2`
    pub target: f64,
    pub rows: Vec<KeyLimitRow>,
    /// Errors strictly decrease as delta decreases (or are all zero).
    pub decreasing: bool,
}

fn strictly_decreasing(seq: &[f64]) -> bool {
    seq.windows(2).all(|w| w[1] < w[0])
}

/// Tabulates `delta^{-2} Re G(gamma(x + delta v), gamma(x))` against
/// `<v|M(x)|v> / 2`.
pub fn keylimit_probe(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    x: &[f64],
    v: &[f64],
    deltas: &[f64],
) -> Result<KeyLimitTable> {
    if v.len() != patch.dim() {
        return Err(Error::DimensionMismatch {
            expected: patch.dim(),
            got: v.len(),
        });
    }
    let form = pullback_form(patch, domain, x)?;
    let mut target = 0.0;
    for a in 0..v.len() {
        for b in 0..v.len() {
            target += v[a] * form.m[(a, b)] * v[b];
        }
    }
    target *= 0.5;
    let gx = patch.eval(x);
    let mut rows = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if !(delta > 0.0) {
            return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        let xs: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + delta * b).collect();
        check_in_ball(patch, &xs)?;
        let probe = pairing_on_patch(patch, domain, &xs, &gx).re / (delta * delta);
        rows.push(KeyLimitRow {
            delta,
            probe,
            target,
            error: (probe - target).abs(),
        });
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.delta.total_cmp(&a.delta));
    let errs: Vec<f64> = sorted.iter().map(|r| r.error).collect();
    let decreasing = errs.iter().all(|e| *e == 0.0) || strictly_decreasing(&errs);
    Ok(KeyLimitTable {
        x: x.to_vec(),
        v: v.to_vec(),
        target,
        rows,
        decreasing,
    })
}

/// Discrete mean-value test of holomorphy: for each coordinate `j`, the
/// average of `h_delta` over `samples` points of the circle
/// `z + radius e^{i theta} e_j` minus `h_delta(z)`. Returns the largest defect.
pub fn mean_value_defect(
    family: &PeakFamily<'_>,
    delta: f64,
    z: &ComplexPoint,
    radius: f64,
    samples: usize,
) -> Result<f64> {
    let center = family.eval_h(delta, z)?.value;
    let mut worst = 0.0f64;
    for j in 0..z.ambient_n() {
        let vals: Vec<Result<Complex64>> = (0..samples)
            .into_par_iter()
            .map(|k| {
                let th = 2.0 * PI * k as f64 / samples as f64;
                let mut c = z.coords().to_vec();
                c[j] += Complex64::from_polar(radius, th);
                Ok(family.eval_h(delta, &ComplexPoint::new(c)?)?.value)
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for v in vals {
            acc += v?;
        }
        worst = worst.max((acc / samples as f64 - center).norm());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    On,
    Off,
    Sample,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub delta: f64,
    pub z_id: String,
    pub kind: ProbeKind,
    pub re: f64,
    pub im: f64,
    pub abs: f64,
    pub bound: f64,
    /// `|h - f(s)|` on the patch, `|h|` off it, absent for plain samples.
    pub err_vs_target: Option<f64>,
    pub quad_error: f64,
    pub min_re_denominator: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceCheck {
    pub z_id: String,
    pub values: Vec<f64>,
    pub strictly_decreasing: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitAudit {
    /// Deltas in decreasing order.
    pub deltas: Vec<f64>,
    pub rows: Vec<AuditRow>,
    pub bound: f64,
    pub sup_abs: f64,
    pub bound_passed: bool,
    pub off_patch: Vec<SequenceCheck>,
    pub off_patch_passed: bool,
    pub on_patch: Vec<SequenceCheck>,
    pub on_patch_passed: bool,
    pub min_re_denominator: f64,
    /// Off-patch probes closer than `1e-2` to the patch image.
    pub off_patch_too_close: Vec<String>,
    pub passed: bool,
}

impl LimitAudit {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("delta,z_id,kind,re_h,im_h,abs_h,bound,err_vs_target\n");
        for r in &self.rows {
            let kind = match r.kind {
                ProbeKind::On => "on",
                ProbeKind::Off => "off",
                ProbeKind::Sample => "sample",
            };
            let err = r.err_vs_target.map(|e| format!("{e:.12e}")).unwrap_or_default();
            s.push_str(&format!(
                "{:.6e},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{}\n",
                r.delta, r.z_id, kind, r.re, r.im, r.abs, r.bound, err
            ));
        }
        s
    }
}

fn distance_to_patch(family: &PeakFamily<'_>, z: &ComplexPoint) -> f64 {
    let per_axis = match family.dim() {
        1 => 201,
        2 => 31,
        _ => 11,
    };
    ball_lattice(family.dim(), family.constants.varrho, per_axis)
        .iter()
        .map(|x| {
            family
                .patch
                .eval(x)
                .iter()
                .zip(z.coords())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Evaluates `h_delta` at on-patch points `gamma(s)`, off-patch points and
/// plain samples of the closed domain, and checks the three limit properties:
/// boundedness by the dominating bound (+1e-3), strictly decreasing `|h|`
/// off the patch, strictly decreasing `|h(gamma(s)) - f(s)|` on it.
pub fn limit_audit(
    family: &PeakFamily<'_>,
    deltas: &[f64],
    z_on: &[Vec<f64>],
    z_off: &[ComplexPoint],
    z_samples: &[ComplexPoint],
) -> Result<LimitAudit> {
    let mut ds = deltas.to_vec();
    ds.sort_by(|a, b| b.total_cmp(a));
    let bound = family.dominating_bound();

    let mut probes: Vec<(String, ProbeKind, ComplexPoint, Option<Complex64>)> = Vec::new();
    for (i, s) in z_on.iter().enumerate() {
        check_in_ball(family.patch, s)?;
        let z = ComplexPoint::new(family.patch.eval(s))?;
        probes.push((format!("on{i}"), ProbeKind::On, z, Some(family.bump.eval(s))));
    }
    let mut off_patch_too_close = Vec::new();
    for (i, z) in z_off.iter().enumerate() {
        let id = format!("off{i}");
        if distance_to_patch(family, z) < 1e-2 {
            off_patch_too_close.push(id.clone());
        }
        probes.push((id, ProbeKind::Off, z.clone(), Some(Complex64::new(0.0, 0.0))));
    }
    for (i, z) in z_samples.iter().enumerate() {
        probes.push((format!("s{i}"), ProbeKind::Sample, z.clone(), None));
    }

    let jobs: Vec<(usize, f64)> = (0..probes.len())
        .flat_map(|p| ds.iter().map(move |&d| (p, d)))
        .collect();
    let results: Vec<Result<AuditRow>> = jobs
        .par_iter()
        .map(|&(p, delta)| {
            let (id, kind, z, target) = &probes[p];
            let h = family.eval_h(delta, z)?;
            Ok(AuditRow {
                delta,
                z_id: id.clone(),
                kind: *kind,
                re: h.value.re,
                im: h.value.im,
                abs: h.value.norm(),
                bound,
                err_vs_target: target.map(|t| (h.value - t).norm()),
                quad_error: h.error_estimate,
                min_re_denominator: h.min_re_denominator,
            })
        })
        .collect();
    let rows: Vec<AuditRow> = results.into_iter().collect::<Result<_>>()?;

    let sequences = |kind: ProbeKind| -> Vec<SequenceCheck> {
        probes
            .iter()
            .filter(|p| p.1 == kind)
            .map(|(id, ..)| {
                let values: Vec<f64> = rows
                    .iter()
                    .filter(|r| &r.z_id == id)
                    .map(|r| r.err_vs_target.unwrap_or(r.abs))
                    .collect();
                SequenceCheck {
                    z_id: id.clone(),
                    strictly_decreasing: strictly_decreasing(&values),
                    values,
                }
            })
            .collect()
    };
    let off_patch = sequences(ProbeKind::Off);
    let on_patch = sequences(ProbeKind::On);
    let sup_abs = rows.iter().map(|r| r.abs).fold(0.0, f64::max);
    let bound_passed = sup_abs <= bound + 1e-3;
    let off_patch_passed = off_patch.iter().all(|c| c.strictly_decreasing);
    let on_patch_passed = on_patch.iter().all(|c| c.strictly_decreasing);
    Ok(LimitAudit {
        deltas: ds,
        min_re_denominator: rows
            .iter()
            .map(|r| r.min_re_denominator)
            .fold(f64::INFINITY, f64::min),
        bound,
        sup_abs,
        passed: bound_passed
            && off_patch_passed
            && on_patch_passed
            && off_patch_too_close.is_empty(),
        bound_passed,
        off_patch,
        off_patch_passed,
        on_patch,
        on_patch_passed,
        off_patch_too_close,
        rows,
    })
}

/// Seeded points of the closed domain: boundary samples scaled toward the
/// interior witness by a uniform factor in `[0, 1]`, every fourth kept on
/// the boundary.
pub fn closed_domain_samples(domain: &DomainModel, count: usize, seed: u64) -> Result<Vec<ComplexPoint>> {
    let w0 = domain.interior_witness().coords().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut out = Vec::with_capacity(count);
    for (i, b) in domain
        .sample_boundary(count, seed)
        .into_iter()
        .flatten()
        .enumerate()
    {
        let t: f64 = if i % 4 == 0 { 1.0 } else { rng.random::<f64>() };
        let p: Vec<f64> = w0
            .iter()
            .zip(b.coords())
            .map(|(w, v)| w + t * (v - w))
            .collect();
        out.push(RealPoint::new(p)?.to_complex());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkingCompact {
    pub nu: u64,
    /// Radius of the closed ball `D_nu`.
    pub radius: f64,
    /// Radius of `D_{nu+1}`.
    pub next_radius: f64,
    /// Equal to 1 on `D_{nu+1}`, supported in `D_nu`.
    pub bump: BumpFunction,
}

fn compact_radius(k: f64, varrho: f64, nu: u64) -> f64 {
    k + k.min(0.9 * (varrho - k)) / nu as f64
}

/// Nested closed balls `D_nu` of radius `K + min(K, 0.9 (varrho - K)) / nu`
/// around the origin of `R^d`, decreasing to the ball of radius `K`, each
/// strictly inside `B(0; varrho)`, with a plateau bump between consecutive
/// members.
pub fn shrinking_compacts(support_radius: f64, nu: u64, varrho: f64, d: usize) -> Result<ShrinkingCompact> {
    if !(support_radius > 0.0) || !(support_radius < varrho) {
        return Err(Error::InvalidInput(format!(
            "support radius {support_radius} must lie in (0, varrho = {varrho})"
        )));
    }
    if nu == 0 {
        return Err(Error::InvalidInput("nu starts at 1".into()));
    }
    let radius = compact_radius(support_radius, varrho, nu);
    let next_radius = compact_radius(support_radius, varrho, nu + 1);
    let bump = BumpFunction::new(
        BumpKind::Plateau {
            inner_radius: next_radius,
        },
        radius,
        vec![0.0; d],
    )?;
    Ok(ShrinkingCompact {
        nu,
        radius,
        next_radius,
        bump,
    })
}
