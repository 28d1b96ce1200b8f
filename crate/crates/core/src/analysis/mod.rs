//! Bound machinery, inequality checks and the `r → 0` convergence study.

mod bounds;
mod lemmas;
mod study;

pub use bounds::{
    apriori, apriori_inputs, g6_from, g_functionals, lambda_r, lambda_y, m_eta_y, rho_delay_prop, rho_eta_b_sigma,
    AprioriBounds, AprioriInputs, AprioriReport, DelayPropInputs, FNorms, GInputs, GValues,
};
pub use lemmas::{
    delayed_norm_row, delayed_tensor_norms, endpoint_inequality, lemma_yyr_check, DelayedNormRow, DelayedNormStudy,
    EndpointCheck, LemmaReport,
};
pub use study::{
    adjacent_inversions, convergence_study, fit_outcome, fit_rate, FitOutcome, RateFit, SeedSummary, StudyConfig,
    StudyOutput, StudyRow, EXACT_TOL,
};
