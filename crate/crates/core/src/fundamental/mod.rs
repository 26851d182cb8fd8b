//! Fundamental systems of solutions that isolate each zero of the limit polynomial.

mod builder;
mod circles;
mod evgrafov;
mod poles;
mod principal;
mod provenance;

pub use builder::{
    build_fundamental_system, build_fundamental_system_with_rates, CircleAccount, FundamentalMember, FundamentalSystem,
    MemberOrigin,
};
pub use circles::{group_circles, CircleGroup, RateInfo, RateSource};
pub use evgrafov::{evgrafov_step, EvgrafovOutcome};
pub use poles::{kill_poles, prescribe_poles, KillPolesResult, PrescribedPole};
pub use principal::{extract_principal_parts, PrincipalPart};
pub use provenance::{provenance_jsonl, Branch, ProvenanceRecord};

pub(crate) use poles::rank_tolerance_ln;
pub(crate) use principal::{fit_principal, radius_above_noise};
