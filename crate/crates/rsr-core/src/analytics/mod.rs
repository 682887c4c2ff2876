//! Posterior summaries, closed-form and quadrature oracles, and the
//! theorem-verification suite.

pub mod oracles;
pub mod summary;
pub mod theorems;

pub use oracles::{
    conditional_sigma_mean, ns_posterior_sigma_mean, quadrature_beta_density, quadrature_moments, tail_report,
    ClosedFormNs, MarginalPosterior, QuadMoments, TailReport,
};
pub use summary::{quantile, quantile_sorted, summarize, summarize_series, CoefSummary, PosteriorSummary};
pub use theorems::{run_verification, VerificationReport, VerifyConfig};
