//! Finite-horizon diagnostics. Each returns a [`DiagnosticVerdict`] whose
//! certificates can be re-checked independently.

mod chaos;
mod dcrit;
mod density;
mod kitai;
mod series;
mod transitivity;
mod verdict;

pub use chaos::{chaos_backward_summability, fhc_necessary_series, SeriesClaims};
pub use dcrit::{check_d_criterion, D_TOL};
pub use density::{lower_density, IntSet};
pub use kitai::{check_fhc_criterion, check_kitai, CriterionData, SRule, Sample};
pub use series::{audit_decay, audit_series, DecayAudit, SeriesAudit, SeriesState, TailClaim, FLOAT_SLACK};
pub use transitivity::{check_targets, mixing_cofiniteness, transitivity_witness, HitCheck};
pub use verdict::{Certificate, DiagnosticVerdict, VerdictState};
