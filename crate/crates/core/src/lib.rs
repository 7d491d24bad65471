//! Random dynamical systems generated by two Allee maps.
//!
//! * [`maps`]: the sigmoid and rational unimodal families, custom maps, and
//!   their fixed points, critical points and axiom checks.
//! * [`rds`]: the switching and perturbed-switching systems, trajectories and
//!   outcome classification.
//! * [`certify`]: numeric checks of the hypotheses of the extinction and
//!   trichotomy results, with witnesses.
//! * [`montecarlo`]: absorption probabilities, first-passage times and the
//!   `T(p)` sweep.

pub mod certify;
pub mod config;
pub mod error;
pub mod maps;
pub mod montecarlo;
pub mod numeric;
pub mod rds;

pub use certify::{
    certify, check_contraction_band, check_t4_extra, classify_ordering, search_composition, theorem2_sets, theorem5_u,
    CertificateReport, CompositionWitness, OrderingClass, OrderingKind, Theorem, Theorem2Report, Verdict,
};
pub use config::SystemConfigFile;
pub use error::{Error, Result};
pub use maps::{
    features, find_critical_point, find_fixed_points, validate_allee, MapFamily, MapFeatures, MapSpec, Monotonicity,
    ValidationReport,
};
pub use montecarlo::{
    estimate_absorption, estimate_hitting_time, sweep_config, sweep_t_of_p, verify_extinction_theorem, EstimateResult,
    HorizonPolicy, SweepResult,
};
pub use rds::{
    clamp, classify_outcome, simulate, Classifier, MapChoice, NoiseLaw, Outcome, OutcomeKind, PerturbationSpec,
    RdsConfig, Trajectory,
};
