//! Simulation studies: covariate and response generators, per-replicate
//! metrics, the study driver and the overfitting demonstration.

pub mod covariates;
pub mod metrics;
pub mod overfit;
pub mod response;
pub mod study;

pub use covariates::{decompose, gen_covariate, CovariateRecipe, TargetSet};
pub use metrics::{agreement_classify, Agreement};
pub use overfit::{overfit_demo, write_overfit_csv, OrderRule, OverfitRow};
pub use response::{gen_response, GenKind, ResponseGenerator};
pub use study::{run_simulation, SimConfig, SimulationReport, Study};
