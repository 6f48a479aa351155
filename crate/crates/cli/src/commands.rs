use anyhow::Context;
use peakset::catalog::catalog_entries;
use peakset::peak::{
    closed_domain_samples, estimate_constants, limit_audit, normalization, BumpFunction,
    ConstantSettings, NormalizationMethod, PeakFamily,
};
use peakset::{
    convexity_audit, nondegeneracy_map, patch_audit, refine_transitions, stratify, ComplexPoint,
    RealPoint,
};
use serde_json::json;

use crate::config::Resolved;
use crate::output::OutDir;

/// Result of a command that ran to completion.
pub enum Outcome {
    Pass,
    Violation(Vec<String>),
}

impl Outcome {
    fn from_failures(failures: Vec<String>) -> Self {
        if failures.is_empty() {
            Outcome::Pass
        } else {
            Outcome::Violation(failures)
        }
    }
}

pub fn check(r: &Resolved, out: &mut OutDir) -> anyhow::Result<Outcome> {
    let convexity = convexity_audit(&r.domain, r.config.convexity_samples, r.config.seed);
    let audit = patch_audit(r.patch.as_ref(), &r.domain, &r.grid);
    let mut failures: Vec<String> = convexity
        .failures
        .iter()
        .map(|f| format!("convexity: {f}"))
        .collect();
    failures.extend(audit.failures.iter().map(|f| format!("patch: {f}")));
    println!(
        "convexity {}: {} boundary points, min restricted eigenvalue {:.6e}",
        if convexity.passed { "passed" } else { "FAILED" },
        convexity.boundary_points,
        convexity.min_restricted_eigenvalue
    );
    println!(
        "patch {}: max tangency residual {:.6e}, max boundary residual {:.3e}, min relative singular value {:.3e}",
        if audit.passed { "passed" } else { "FAILED" },
        audit.max_tangency_residual,
        audit.max_boundary_residual,
        audit.min_relative_singular_value
    );
    out.json(
        "check.json",
        &json!({
            "passed": failures.is_empty(),
            "convexity": convexity,
            "patch": audit,
        }),
    )?;
    Ok(Outcome::from_failures(failures))
}

pub fn stratify_cmd(r: &Resolved, out: &mut OutDir) -> anyhow::Result<Outcome> {
    let audit = patch_audit(r.patch.as_ref(), &r.domain, &r.grid);
    if !audit.passed {
        out.json("stratify.json", &json!({ "passed": false, "patch_audit": audit }))?;
        return Ok(Outcome::Violation(audit.failures));
    }
    let report = stratify(r.patch.as_ref(), &r.domain, &r.grid, r.config.tolerances.rank)?;
    let refined = refine_transitions(
        &report,
        r.patch.as_ref(),
        &r.domain,
        r.config.stratify.refine_levels,
    );
    let counts = refined.component_counts();
    for (rank, n) in &counts {
        println!("rank {rank}: {n} component(s)");
    }
    println!(
        "{} cells after refinement ({} transition), tol_rank {:.3e}",
        refined.cells.len(),
        refined.transition_count(),
        refined.tol_rank
    );
    out.json(
        "stratify.json",
        &json!({
            "passed": true,
            "component_counts": counts,
            "coarse_component_counts": report.component_counts(),
            "tol_rank": refined.tol_rank,
            "report": refined,
        }),
    )?;
    out.csv("strata.csv", &refined.to_csv())?;
    Ok(Outcome::Pass)
}

pub fn peak(r: &Resolved, out: &mut OutDir) -> anyhow::Result<Outcome> {
    let cfg = &r.config.peak;
    let patch = r.patch.as_ref();
    let d = patch.dim();

    let audit = patch_audit(patch, &r.domain, &r.grid);
    if !audit.passed {
        out.json("peak.json", &json!({ "passed": false, "patch_audit": audit }))?;
        return Ok(Outcome::Violation(audit.failures));
    }
    let tol = r.config.tolerances.nondegeneracy;
    let nondeg = nondegeneracy_map(patch, &r.domain, &r.grid, tol)?;
    // Cell witnesses catch degenerate points that fall between grid nodes.
    let cells = stratify(patch, &r.domain, &r.grid, Some(tol))?;
    let mut degenerate: Vec<Vec<f64>> = nondeg.degenerate_points.clone();
    for cell in cells.cells.iter().filter(|c| c.label < d) {
        let seen = degenerate.iter().any(|p| {
            p.iter().zip(&cell.witness).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= 1e-9
        });
        if !seen {
            degenerate.push(cell.witness.clone());
        }
    }
    degenerate.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if !degenerate.is_empty() {
        for x in &degenerate {
            println!("degenerate pullback form at x = {x:?}");
        }
        let failures = vec![format!(
            "pullback form degenerate (lambda_min <= {tol:e}) at {} point(s): {degenerate:?}",
            degenerate.len()
        )];
        out.json(
            "peak.json",
            &json!({
                "passed": false,
                "degenerate_points": degenerate,
                "tolerance": tol,
            }),
        )?;
        return Ok(Outcome::Violation(failures));
    }

    let settings = ConstantSettings {
        pair_samples: cfg.pair_samples,
        z_samples: cfg.z_samples,
        seed: r.config.seed,
    };
    let report = estimate_constants(patch, &r.domain, &settings)?;
    let c = report.constants.clone();
    println!(
        "C_gamma {:.6}, delta_gamma {}, eps_star {:.6}, c_star {:.6}, c_prime {:.6}, varrho {}",
        c.c_gamma, c.delta_gamma, c.eps_star, c.c_star, c.c_prime, c.varrho
    );
    out.json("constants.json", &report)?;

    let bump = match &cfg.bump {
        Some(b) => b.clone(),
        None => BumpFunction::smooth(d, c.varrho)?,
    };
    let family = PeakFamily::new(patch, &r.domain, c.clone(), bump, &cfg.family)?;
    let origin = vec![0.0; d];
    let g_closed = normalization(patch, &r.domain, &origin, NormalizationMethod::ClosedForm)?;
    let g_quad = normalization(patch, &r.domain, &origin, NormalizationMethod::Quadrature)?;
    println!("G(0) = {g_closed:.9} (quadrature {g_quad:.9})");
    let t = &family.table;
    out.json(
        "g_cache.json",
        &json!({
            "g_origin_closed_form": g_closed,
            "g_origin_quadrature": g_quad,
            "nodes": t.nodes.len(),
            "min": t.min,
            "max": t.max,
            "max_spot_check_rel_err": t.max_rel_err,
            "spot_checks": t.spot_checks,
            "f_over_g_sup": t.f_over_g_sup,
            "dominating_bound": family.dominating_bound(),
            "bump": family.bump,
        }),
    )?;
    let mut g_csv = String::new();
    for a in 0..d {
        g_csv.push_str(&format!("x{a},"));
    }
    g_csv.push_str("g\n");
    for (x, g) in t.nodes.iter().zip(&t.values) {
        for v in x {
            g_csv.push_str(&format!("{v:.12e},"));
        }
        g_csv.push_str(&format!("{g:.12e}\n"));
    }
    out.csv("g_cache.csv", &g_csv)?;

    let z_on = cfg.z_on.clone().unwrap_or_else(|| vec![origin.clone()]);
    let z_off: Vec<ComplexPoint> = match &cfg.z_off {
        Some(list) => list
            .iter()
            .map(|v| Ok(RealPoint::new(v.clone())?.to_complex()))
            .collect::<peakset::Result<_>>()?,
        None => vec![r.domain.interior_witness().to_complex()],
    };
    let samples = closed_domain_samples(&r.domain, cfg.audit_samples, r.config.seed)?;
    let audit = limit_audit(&family, &cfg.deltas, &z_on, &z_off, &samples)
        .context("running the limit audit")?;
    out.csv("limit_audit.csv", &audit.to_csv())?;
    out.json("limit_audit.json", &audit)?;

    let mut failures = Vec::new();
    if t.max_rel_err > 1e-6 {
        failures.push(format!(
            "normalization cache disagrees with quadrature: rel err {:.3e}",
            t.max_rel_err
        ));
    }
    if !audit.bound_passed {
        failures.push(format!(
            "sup |h| = {:.6e} exceeds bound {:.6e} + 1e-3",
            audit.sup_abs, audit.bound
        ));
    }
    for s in audit.off_patch.iter().chain(&audit.on_patch) {
        if !s.strictly_decreasing {
            failures.push(format!("{}: sequence {:?} not strictly decreasing", s.z_id, s.values));
        }
    }
    if !audit.off_patch_too_close.is_empty() {
        failures.push(format!(
            "off-patch probes closer than 1e-2 to the patch: {:?}",
            audit.off_patch_too_close
        ));
    }
    println!(
        "limit audit: sup |h| {:.6} (bound {:.6}); off-patch {}; on-patch {}",
        audit.sup_abs,
        audit.bound,
        if audit.off_patch_passed { "decreasing" } else { "VIOLATED" },
        if audit.on_patch_passed { "decreasing" } else { "VIOLATED" }
    );
    out.json(
        "peak.json",
        &json!({
            "passed": failures.is_empty(),
            "failures": failures,
            "constants": c,
        }),
    )?;
    Ok(Outcome::from_failures(failures))
}

pub fn catalog(out: Option<&mut OutDir>) -> anyhow::Result<Outcome> {
    let entries = catalog_entries();
    println!("{}", serde_json::to_string_pretty(&entries)?);
    if let Some(out) = out {
        out.json("catalog.json", &entries)?;
    }
    Ok(Outcome::Pass)
}
