//! Boundary geometry of convex domains in C^n given by polynomial defining
//! functions, rank stratification of complex-tangential boundary patches,
//! and the holomorphic peak family `h_delta` concentrating on such a patch.
//!
//! Points of C^n are handled in interleaved real coordinates
//! `(x_1, y_1, ..., x_n, y_n)` with `z_j = x_j + i y_j`.

pub mod catalog;
pub mod domain;
pub mod error;
pub mod grid;
pub mod patch;
pub mod peak;
pub mod poly;
pub mod quad;
pub mod strata;

pub use catalog::{make_domain, make_patch, DomainSpec, PatchSpec};
pub use domain::{
    boundary_frame, convexity_audit, eval_defining, null_space, peak_pairing, BoundaryFrame,
    ComplexPoint, ConvexityAudit, DefiningFunction, DomainModel, NullSpaceResult, RealPoint,
    WirtingerJet,
};
pub use error::{Error, Result};
pub use grid::ParamGrid;
pub use patch::{
    nondegeneracy_map, patch_audit, pullback_det, pullback_form, tangency_residual, PatchAudit,
    PatchModel, PullbackForm,
};
pub use strata::{refine_transitions, stratify, StratificationReport};
