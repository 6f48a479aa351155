//! The holomorphic peak family `h_delta` attached to a nondegenerate
//! complex-tangential patch, its constants, and numerical probes of its
//! limit behaviour.

mod bump;
mod constants;
mod family;
mod minimizer;
mod normalization;
mod probes;

pub use bump::{BumpFunction, BumpKind};
pub use constants::{
    choose_varrho, estimate_constants, min_positivity_ratio, positivity_constants,
    separation_constant, ConstantSettings, ConstantsReport, PeakConstants, PositivityEstimate,
    PositivityTrial, SeparationEstimate, VarrhoChoice,
};
pub use family::{eval_h, FamilySettings, HValue, NormalizationTable, PeakFamily, SpotCheck};
pub use minimizer::{
    critical_residual, local_min, pairing_gradient, pairing_on_patch, MinimizerResult,
};
pub use normalization::{
    dominating_integral, g_closed_form, g_from_form, g_quadrature, normalization, unit_factor,
    NormalizationMethod,
};
pub use probes::{
    closed_domain_samples, keylimit_probe, limit_audit, mean_value_defect, shrinking_compacts,
    AuditRow, KeyLimitRow, KeyLimitTable, LimitAudit, ProbeKind, SequenceCheck, ShrinkingCompact,
};

pub use constants::tube_samples;
