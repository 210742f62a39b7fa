//! Optimistic qualitative expected utility for possibilistic case-based
//! reasoning.
//!
//! A partner's history of negotiations yields, through case-based reasoning,
//! a possibility distribution over outcomes. Aggregating it with the
//! negotiator's utility by max-min gives the optimistic qualitative utility
//! `QU⁺ = max min(π, u)` and the predicted outcomes. [`estimator`] computes
//! both by descending over the finite Pareto frontiers of the distribution's
//! α-cuts, in time linear in the number of attributes. [`oracle`] does the
//! same by brute force on a lattice and serves as the reference.

pub mod bench;
pub mod error;
pub mod estimator;
pub mod fixtures;
pub mod model;
pub mod oracle;
pub mod possibility;
pub mod similarity;

pub use error::{Error, Result};
pub use estimator::{estimate, frontier_score, rank_partners, EstimateResult, Estimator, Partner};
pub use model::{
    utility_at, validate_case_base, CaseBase, CaseBaseDocument, EstimatorConfig, Polarities,
    Polarity, Query, SimilarityFamily, UtilityModel,
};
pub use possibility::{CutGeometry, FrontierPoint, Hypercuboid, PossibilityModel};
