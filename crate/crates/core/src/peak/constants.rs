use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::minimizer::{local_min, pairing_on_patch};
use crate::domain::{complex_to_real, sorted_eigen, ComplexPoint, DomainModel};
use crate::error::{Error, Result};
use crate::grid::cartesian;
use crate::patch::{norm, pullback_unchecked, PatchModel};

/// Constants of the peak construction for one patch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakConstants {
    pub c_gamma: f64,
    pub delta_gamma: f64,
    pub c_star: f64,
    pub eps_star: f64,
    pub varrho: f64,
    pub c_prime: f64,
    pub patch_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityTrial {
    pub radius: f64,
    pub min_ratio: f64,
    pub lambda_min_m: f64,
    pub threshold: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityEstimate {
    pub c_gamma: f64,
    pub delta_gamma: f64,
    pub sampled_min_ratio: f64,
    pub lambda_min_m: f64,
    pub pair_samples: usize,
    pub seed: u64,
    pub trials: Vec<PositivityTrial>,
}

pub(crate) fn sample_in_ball(rng: &mut ChaCha8Rng, d: usize, radius: f64) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut *rng)).collect();
        let n = norm(&g);
        if n == 0.0 {
            continue;
        }
        let t: f64 = rng.random::<f64>().powf(1.0 / d as f64);
        return g.into_iter().map(|v| v * radius * t / n).collect();
    }
}

/// Lattice points of `[-radius, radius]^d` inside the closed ball, shrunk
/// by a relative `1e-12` so they stay in the open ball.
pub(crate) fn ball_lattice(d: usize, radius: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let r = radius * (1.0 - 1e-12);
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| r * (2.0 * i as f64 / (per_axis - 1) as f64 - 1.0))
        .collect();
    cartesian(&vec![axis; d])
        .into_iter()
        .filter(|p| norm(p) <= r)
        .collect()
}

fn re_pairing_on_patch(patch: &dyn PatchModel, domain: &DomainModel, x: &[f64], y: &[f64]) -> f64 {
    pairing_on_patch(patch, domain, x, &patch.eval(y)).re
}

/// Sampled `min Re G(gamma(x), gamma(y)) / |x - y|^2` over pairs in the
/// ball of the given radius (all lattice pairs plus seeded random pairs),
/// together with the sampled `min lambda_min(M)`.
pub fn min_positivity_ratio(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    radius: f64,
    pair_samples: usize,
    seed: u64,
) -> (f64, f64) {
    let d = patch.dim();
    let per_axis = match d {
        1 => 33,
        2 => 7,
        _ => 5,
    };
    let lattice = ball_lattice(d, radius, per_axis);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for a in &lattice {
        for b in &lattice {
            pairs.push((a.clone(), b.clone()));
        }
    }
    for _ in 0..pair_samples {
        let x = sample_in_ball(&mut rng, d, radius);
        let y = sample_in_ball(&mut rng, d, radius);
        pairs.push((x, y));
    }
    let mut min_ratio = f64::INFINITY;
    for (x, y) in &pairs {
        let dist2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
        if dist2.sqrt() <= 1e-9 * radius {
            continue;
        }
        min_ratio = min_ratio.min(re_pairing_on_patch(patch, domain, x, y) / dist2);
    }
    let mut lmin = f64::INFINITY;
    for x in lattice.iter().chain(pairs.iter().take(200).map(|p| &p.0)) {
        let h = pullback_unchecked(patch, domain, x);
        lmin = lmin.min(0.5 * sorted_eigen(&h).0[0]);
    }
    (min_ratio, lmin)
}

/// Halving search from `min(1/2, R/2)`: accept the first radius whose
/// sampled ratio exceeds `0.25 * lambda_min(M)`; `C = 0.9 * ratio`.
pub fn positivity_constants(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    pair_samples: usize,
    seed: u64,
) -> Result<PositivityEstimate> {
    let mut radius = (0.5f64).min(0.5 * patch.radius());
    let mut trials = Vec::new();
    for _ in 0..20 {
        let (min_ratio, lambda_min_m) =
            min_positivity_ratio(patch, domain, radius, pair_samples, seed);
        let threshold = 0.25 * lambda_min_m;
        let accepted = lambda_min_m > 0.0 && min_ratio > threshold;
        trials.push(PositivityTrial {
            radius,
            min_ratio,
            lambda_min_m,
            threshold,
            accepted,
        });
        if accepted {
            return Ok(PositivityEstimate {
                c_gamma: 0.9 * min_ratio,
                delta_gamma: radius,
                sampled_min_ratio: min_ratio,
                lambda_min_m,
                pair_samples,
                seed,
                trials,
            });
        }
        radius *= 0.5;
    }
    Err(Error::NoPositiveRadius)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarrhoChoice {
    pub varrho: f64,
    pub eps_star: f64,
    pub c_star: f64,
    /// `c(eps)` at each candidate radius, largest first.
    pub second_order_profile: Vec<(f64, f64)>,
    pub reference_radius: f64,
    pub tube_samples_used: usize,
}

/// Seeded points of the closed domain near `gamma[B(0; radius)]`: pulled
/// toward the interior witness and pushed sideways, kept only if `rho <= 0`.
pub fn tube_samples(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    radius: f64,
    count: usize,
    seed: u64,
) -> Vec<ComplexPoint> {
    let d = patch.dim();
    let n = patch.ambient_n();
    let w0 = domain.interior_witness().to_complex();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let s = sample_in_ball(&mut rng, d, radius * (1.0 - 1e-9));
        let g = patch.eval(&s);
        let eps: f64 = rng.random_range(1e-3..0.1);
        let eta: f64 = rng.random_range(0.0..0.05);
        let dir: Vec<Complex64> = (0..n)
            .map(|_| {
                Complex64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let dn = dir.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let base: Vec<Complex64> = g
            .iter()
            .zip(w0.coords())
            .map(|(gj, wj)| wj + (gj - wj) * (1.0 - eps))
            .collect();
        let pushed: Vec<Complex64> = base
            .iter()
            .zip(&dir)
            .map(|(b, v)| b + v * (eta / dn))
            .collect();
        let z = if domain.rho_at(&complex_to_real(&pushed)) <= 0.0 {
            pushed
        } else {
            base
        };
        out.push(ComplexPoint::new(z).expect("n >= 2"));
    }
    out
}

fn displacements(d: usize, eps: f64, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    if d == 1 {
        (1..=20)
            .flat_map(|k| {
                let t = eps * k as f64 / 20.0;
                [vec![t], vec![-t]]
            })
            .collect()
    } else {
        (0..40)
            .map(|_| sample_in_ball(rng, d, eps))
            .filter(|x| norm(x) > 1e-3 * eps)
            .collect()
    }
}

/// Sampled second-order constant
/// `sup |Re sum_j [d_j rho(gamma(y+x)) - d_j rho(gamma(y))](gamma_j(y) - z_j)| / (|x|^2 |gamma(y) - z|)`
/// over `|x| <= eps`, at the interior minimizers `y` of the tube samples.
fn second_order_constant(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    anchors: &[(Vec<f64>, Vec<Complex64>)],
    eps: f64,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = displacements(patch.dim(), eps, &mut rng);
    let mut sup = 0.0f64;
    for (y, z) in anchors {
        let gy = patch.eval(y);
        let base = domain.holo_gradient_at(&complex_to_real(&gy));
        let diff: Vec<Complex64> = gy.iter().zip(z).map(|(a, b)| a - b).collect();
        let dist = diff.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for x in &xs {
            let yx: Vec<f64> = y.iter().zip(x).map(|(a, b)| a + b).collect();
            if norm(&yx) >= patch.radius() {
                continue;
            }
            let moved = domain.holo_gradient_at(&complex_to_real(&patch.eval(&yx)));
            let num: Complex64 = moved
                .iter()
                .zip(&base)
                .zip(&diff)
                .map(|((m, b), v)| (m - b) * v)
                .sum();
            let x2: f64 = x.iter().map(|v| v * v).sum();
            sup = sup.max(num.re.abs() / (x2 * dist));
        }
    }
    sup
}

/// `varrho = min{1/2, delta_gamma/2, eps_star/3, R/8}`. `eps_star` is the
/// largest of `R, R/2, ..., R/64` at which the sampled second-order constant
/// stays within twice its value at `R/64`.
pub fn choose_varrho(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    positivity: &PositivityEstimate,
    z_samples: usize,
    seed: u64,
) -> Result<VarrhoChoice> {
    let big_r = patch.radius();
    let r0 = 0.5f64.min(0.5 * positivity.delta_gamma).min(big_r / 8.0);
    let mut anchors = Vec::new();
    for z in tube_samples(patch, domain, 2.0 * r0, z_samples, seed) {
        let m = local_min(patch, domain, &z, r0)?;
        if !m.interior {
            continue;
        }
        let gy = patch.eval(&m.y);
        let dist: f64 = gy
            .iter()
            .zip(z.coords())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if dist > 1e-12 {
            anchors.push((m.y, z.coords().to_vec()));
        }
    }
    let reference_radius = big_r / 64.0;
    let c_ref = second_order_constant(patch, domain, &anchors, reference_radius, seed ^ 0x5eed);
    let mut profile = Vec::new();
    let mut eps_star = reference_radius;
    let mut c_star = c_ref;
    let mut found = false;
    for k in 0..=6 {
        let eps = big_r / (1u64 << k) as f64;
        let c = second_order_constant(patch, domain, &anchors, eps, seed ^ 0x5eed);
        profile.push((eps, c));
        if !found && c <= 2.0 * c_ref + 1e-12 {
            eps_star = eps;
            c_star = c;
            found = true;
        }
    }
    let varrho = 0.5f64
        .min(0.5 * positivity.delta_gamma)
        .min(eps_star / 3.0)
        .min(big_r / 8.0);
    Ok(VarrhoChoice {
        varrho,
        eps_star,
        c_star,
        second_order_profile: profile,
        reference_radius,
        tube_samples_used: anchors.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationEstimate {
    pub c_prime: f64,
    pub off_patch_samples: usize,
    /// True when no sample was classified off-patch and all samples were used.
    pub fallback: bool,
}

/// `c' = 0.9 * min Re G(gamma(x), z) / Re G(gamma(x), gamma(0))` over
/// `x` in `B(0; varrho)` and sampled `z` whose minimizer is not interior.
pub fn separation_constant(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    varrho: f64,
    z_samples: usize,
    seed: u64,
) -> Result<SeparationEstimate> {
    let w0 = domain.interior_witness().coords().to_vec();
    let mut zs: Vec<ComplexPoint> = Vec::new();
    for b in domain.sample_boundary(z_samples, seed).into_iter().flatten() {
        for t in [1.0, 0.9, 0.5] {
            let p: Vec<f64> = w0
                .iter()
                .zip(b.coords())
                .map(|(w, v)| w + t * (v - w))
                .collect();
            zs.push(crate::domain::RealPoint::new(p)?.to_complex());
        }
    }
    let mut off = Vec::new();
    for z in &zs {
        if !local_min(patch, domain, z, varrho)?.interior {
            off.push(z.clone());
        }
    }
    let fallback = off.is_empty();
    let used = if fallback { zs } else { off };
    let per_axis = match patch.dim() {
        1 => 41,
        2 => 11,
        _ => 7,
    };
    let g0 = patch.eval(&vec![0.0; patch.dim()]);
    let xs: Vec<Vec<f64>> = ball_lattice(patch.dim(), varrho, per_axis)
        .into_iter()
        .filter(|x| norm(x) >= varrho / 20.0)
        .collect();
    let mut min_ratio = f64::INFINITY;
    for z in &used {
        for x in &xs {
            let den = pairing_on_patch(patch, domain, x, &g0).re;
            if den <= 0.0 {
                continue;
            }
            min_ratio = min_ratio.min(pairing_on_patch(patch, domain, x, z.coords()).re / den);
        }
    }
    Ok(SeparationEstimate {
        c_prime: 0.9 * min_ratio,
        off_patch_samples: used.len(),
        fallback,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantSettings {
    pub pair_samples: usize,
    pub z_samples: usize,
    pub seed: u64,
}

impl Default for ConstantSettings {
    fn default() -> Self {
        Self {
            pair_samples: 2000,
            z_samples: 24,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub constants: PeakConstants,
    pub positivity: PositivityEstimate,
    pub varrho_choice: VarrhoChoice,
    pub separation: SeparationEstimate,
}

pub fn estimate_constants(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    settings: &ConstantSettings,
) -> Result<ConstantsReport> {
    let positivity = positivity_constants(patch, domain, settings.pair_samples, settings.seed)?;
    let varrho_choice = choose_varrho(patch, domain, &positivity, settings.z_samples, settings.seed)?;
    let separation = separation_constant(
        patch,
        domain,
        varrho_choice.varrho,
        settings.z_samples,
        settings.seed,
    )?;
    Ok(ConstantsReport {
        constants: PeakConstants {
            c_gamma: positivity.c_gamma,
            delta_gamma: positivity.delta_gamma,
            c_star: varrho_choice.c_star,
            eps_star: varrho_choice.eps_star,
            varrho: varrho_choice.varrho,
            c_prime: separation.c_prime,
            patch_radius: patch.radius(),
        },
        positivity,
        varrho_choice,
        separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_domain, PatchSpec};

    fn setup(spec: PatchSpec) -> (DomainModel, Box<dyn PatchModel>) {
        (make_domain(&spec.domain_spec()).unwrap(), spec.build().unwrap())
    }

    #[test]
    fn hopf_positivity_matches_closed_form() {
        let (dom, p) = setup(PatchSpec::hopf());
        let est = positivity_constants(p.as_ref(), &dom, 500, 1).unwrap();
        assert_eq!(est.delta_gamma, 0.5);
        let exact = 1.0 - 1.0f64.cos();
        assert!((est.sampled_min_ratio - exact).abs() < 1e-9);
        assert!((est.c_gamma - 0.9 * exact).abs() < 1e-9);
        let (r1, _) = min_positivity_ratio(p.as_ref(), &dom, 1.0, 500, 1);
        assert!((r1 - (1.0 - 2.0f64.cos()) / 4.0).abs() < 1e-9);
    }

    #[test]
    fn small_radius_ratio_tends_to_half_lambda() {
        let (dom, p) = setup(PatchSpec::torus3());
        let (r, lmin) = min_positivity_ratio(p.as_ref(), &dom, 1e-3, 200, 3);
        assert!((lmin - 1.0 / 3.0).abs() < 1e-9);
        assert!((r - 0.5 * lmin).abs() < 1e-4, "{r}");
    }

    #[test]
    fn hopf_varrho_and_constants() {
        let (dom, p) = setup(PatchSpec::hopf());
        let rep = estimate_constants(p.as_ref(), &dom, &ConstantSettings::default()).unwrap();
        let c = &rep.constants;
        assert_eq!(c.varrho, 0.25);
        assert!(c.eps_star / 3.0 >= 0.25);
        assert!(c.c_star > 0.0 && c.c_prime > 0.0);
        assert!(c.varrho <= 0.5 * c.delta_gamma);
    }

    #[test]
    fn egg_subpatch_is_capped_by_radius() {
        let (dom, p) = setup(PatchSpec::egg_subpatch());
        let rep = estimate_constants(p.as_ref(), &dom, &ConstantSettings::default()).unwrap();
        assert!(rep.constants.varrho <= 0.025 + 1e-15);
        assert!(rep.constants.c_gamma > 0.0);
    }
}
