//! Generalization bounds evaluated from information measures, losses'
//! tail constants and measured distortions.

mod cgf;
mod evaluate;
mod montecarlo;
mod report;

pub use cgf::CgfBound;
pub use evaluate::{
    bits_to_nats, bound_countable, bound_disintegrated, bound_generic_cgf, bound_gme, bound_individual_sample,
    bound_linreg, bound_quantized_rate_distortion, bound_rate_distortion, composite_lipschitz, gen_lower_bound_generic,
    gme_constant, gme_exact_gen_error, gme_lambda_sq, linreg_exact_gen_error, linreg_terms, quantized_rate_term, GmeMi,
    LinRegTerm,
};
pub use montecarlo::{gme_gen_error_mc, linreg_gen_error_mc};
pub use report::{BoundConstants, BoundFamily, BoundReport, GenErrorEstimate, MiSource, RateDistortionTerms};
