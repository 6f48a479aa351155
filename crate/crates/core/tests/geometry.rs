use peakset::catalog::hyperboloid_control;
use peakset::{
    boundary_frame, convexity_audit, make_domain, null_space, patch_audit, DomainSpec, ParamGrid,
    PatchSpec, RealPoint,
};

#[test]
fn restricted_form_degenerates_only_where_expected() {
    let ball = make_domain(&DomainSpec::Ball { n: 2 }).unwrap();
    let p = RealPoint::new(vec![0.6, 0.0, 0.0, 0.8]).unwrap();
    let ns = null_space(&boundary_frame(&ball, &p).unwrap(), None).unwrap();
    assert_eq!(ns.dimension, 0);

    let egg = make_domain(&DomainSpec::Egg { m: 2 }).unwrap();
    let p = RealPoint::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
    let frame = boundary_frame(&egg, &p).unwrap();
    let ns = null_space(&frame, None).unwrap();
    assert_eq!(ns.dimension, 2);
    for v in &ns.basis {
        assert!(frame.gradient.dot(v).abs() < 1e-12);
        assert!(v[2].hypot(v[3]) > 1.0 - 1e-12);
    }
}

#[test]
fn off_boundary_frames_are_rejected() {
    let ball = make_domain(&DomainSpec::Ball { n: 2 }).unwrap();
    let p = RealPoint::new(vec![0.5, 0.0, 0.0, 0.0]).unwrap();
    assert!(boundary_frame(&ball, &p).is_err());
}

#[test]
fn convexity_audit_separates_controls() {
    let egg = make_domain(&DomainSpec::Egg { m: 3 }).unwrap();
    assert!(convexity_audit(&egg, 500, 1).passed);
    assert!(!convexity_audit(&hyperboloid_control(), 500, 1).passed);
}

#[test]
fn patch_audit_flags_the_nontangential_circle() {
    for (spec, ok) in [
        (PatchSpec::hopf(), true),
        (PatchSpec::egg_curve(), true),
        (PatchSpec::nontangential_circle(), false),
    ] {
        let dom = make_domain(&spec.domain_spec()).unwrap();
        let p = spec.build().unwrap();
        let r = 0.9 * p.radius();
        let grid = ParamGrid::cube(1, -r, r, 50);
        let audit = patch_audit(p.as_ref(), &dom, &grid);
        assert!(audit.boundary_passed && audit.immersion_passed);
        assert_eq!(audit.passed, ok, "{}", spec.name());
    }
}
