//! Bayesian inference for GARCH(1,1) by independence Metropolis-Hastings
//! with an adaptively fitted multivariate Student's t proposal.
//!
//! The chain runs in log coordinates `z = (ln ω, ln α, ln β [, ln a])`. The
//! prior is flat on the positive natural parameters, so the target in `z`
//! carries the Jacobian `Σ z_i`. During burn-in the proposal is refitted to
//! the accumulated history every `adapt_interval` steps; it is frozen for the
//! retained samples so they come from a fixed Markov kernel.

mod diagnostics;
mod export;
mod optimize;
mod proposal;
mod sampler;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use diagnostics::{acf, integrated_autocorr_time, AcfDiagnostics, WINDOW_FACTOR};
pub use export::format_with_uncertainty;
pub use proposal::{adapt_proposal, StudentTProposal, JITTER};
pub use sampler::{
    mh_step, run_chain, run_chains, ChainState, ChainSummary, Evaluation, FnTarget, LogTarget,
    ParamSummary, PosteriorChain, StepOutcome,
};

use crate::data::ReturnSeries;
use crate::error::{Error, Result};
use crate::garch::{log_likelihood_unchecked, ErrorLaw, GarchParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    #[serde(rename = "garch-n")]
    GarchN,
    #[serde(rename = "garch-re")]
    GarchRe,
}

impl Model {
    pub fn dim(self) -> usize {
        self.param_names().len()
    }

    /// Natural-space parameter order used everywhere in this module.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Model::GarchN => &["omega", "alpha", "beta"],
            Model::GarchRe => &["omega", "alpha", "beta", "a"],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Model::GarchN => "garch-n",
            Model::GarchRe => "garch-re",
        }
    }

    /// Builds parameters from a natural-space vector in [`Model::param_names`] order.
    pub fn params(self, natural: &[f64]) -> GarchParams {
        let law = match self {
            Model::GarchN => ErrorLaw::Normal,
            Model::GarchRe => ErrorLaw::Rational { a: natural[3] },
        };
        GarchParams {
            omega: natural[0],
            alpha: natural[1],
            beta: natural[2],
            law,
        }
    }

    pub fn natural(self, params: &GarchParams) -> Vec<f64> {
        let mut v = vec![params.omega, params.alpha, params.beta];
        if let (Model::GarchRe, ErrorLaw::Rational { a }) = (self, params.law) {
            v.push(a);
        }
        v
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "garch-n" => Ok(Model::GarchN),
            "garch-re" => Ok(Model::GarchRe),
            other => Err(Error::Validation(format!(
                "unknown model {other:?} (expected garch-n or garch-re)"
            ))),
        }
    }
}

/// Flat prior on an open interval of the natural parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatPrior {
    pub lower: f64,
    pub upper: f64,
}

impl FlatPrior {
    pub const POSITIVE: FlatPrior = FlatPrior {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn contains(&self, v: f64) -> bool {
        v > self.lower && v < self.upper
    }
}

/// One flat prior per natural parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    pub params: Vec<FlatPrior>,
}

impl Prior {
    pub fn flat_positive(model: Model) -> Self {
        Self {
            params: vec![FlatPrior::POSITIVE; model.dim()],
        }
    }

    /// 0 inside the support, −∞ outside. Improper, so only differences matter.
    pub fn log_density(&self, natural: &[f64]) -> f64 {
        if natural.len() == self.params.len()
            && natural.iter().zip(&self.params).all(|(v, p)| p.contains(*v))
        {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub samples: usize,
    pub adapt_interval: usize,
    /// Degrees of freedom of the proposal.
    pub nu: f64,
    pub seed: u64,
    /// `None` means flat on the positive reals for every parameter.
    pub prior: Option<Prior>,
    /// `σ_1²`; `None` uses the sample variance of the returns.
    pub init_variance: Option<f64>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            burn_in: 6000,
            samples: 50_000,
            adapt_interval: 500,
            nu: 10.0,
            seed: 0,
            prior: None,
            init_variance: None,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.adapt_interval == 0 || self.burn_in < self.adapt_interval {
            return Err(Error::Validation(format!(
                "burn-in ({}) must be at least the adaptation interval ({}), which must be positive",
                self.burn_in, self.adapt_interval
            )));
        }
        if self.samples == 0 {
            return Err(Error::Validation("sample count must be positive".into()));
        }
        if !(self.nu.is_finite() && self.nu > 2.0) {
            return Err(Error::Validation(format!(
                "proposal degrees of freedom must be > 2, got {}",
                self.nu
            )));
        }
        if let Some(v) = self.init_variance {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("initial variance must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Log-likelihood plus log-prior in natural coordinates; −∞ outside the
/// prior support or when the likelihood is not finite.
pub fn log_posterior(params: &GarchParams, returns: &ReturnSeries, prior: &Prior, init_variance: f64) -> f64 {
    let model = match params.law {
        ErrorLaw::Normal => Model::GarchN,
        ErrorLaw::Rational { .. } => Model::GarchRe,
    };
    let lp = prior.log_density(&model.natural(params));
    if lp == f64::NEG_INFINITY || returns.is_empty() || !(init_variance > 0.0) {
        return f64::NEG_INFINITY;
    }
    match log_likelihood_unchecked(params, returns.values(), init_variance) {
        Ok(ll) => ll + lp,
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Posterior of a GARCH model in log coordinates.
#[derive(Debug, Clone)]
pub struct GarchPosterior {
    model: Model,
    returns: Vec<f64>,
    init_variance: f64,
    prior: Prior,
}

impl GarchPosterior {
    pub fn new(model: Model, returns: &ReturnSeries, prior: Prior, init_variance: f64) -> Result<Self> {
        if prior.params.len() != model.dim() {
            return Err(Error::Validation(format!(
                "prior has {} entries, model {} needs {}",
                prior.params.len(),
                model,
                model.dim()
            )));
        }
        Ok(Self {
            model,
            returns: returns.values().to_vec(),
            init_variance,
            prior,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn init_variance(&self) -> f64 {
        self.init_variance
    }

    pub fn log_likelihood(&self, natural: &[f64]) -> f64 {
        log_likelihood_unchecked(&self.model.params(natural), &self.returns, self.init_variance)
            .unwrap_or(f64::NEG_INFINITY)
    }
}

impl LogTarget for GarchPosterior {
    fn evaluate(&self, z: &[f64]) -> Evaluation {
        let natural: Vec<f64> = z.iter().map(|v| v.exp()).collect();
        let lp = self.prior.log_density(&natural);
        if lp == f64::NEG_INFINITY {
            return Evaluation::REJECT;
        }
        let ll = self.log_likelihood(&natural);
        if !ll.is_finite() {
            return Evaluation::REJECT;
        }
        Evaluation {
            log_density: ll + lp + z.iter().sum::<f64>(),
            log_likelihood: ll,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn returns() -> ReturnSeries {
        ReturnSeries::from_values(vec![0.01, -0.02, 0.015, -0.005, 0.03, -0.01]).unwrap()
    }

    #[test]
    fn flat_prior_offset_is_constant() {
        let prior = Prior::flat_positive(Model::GarchRe);
        let r = returns();
        for p in [
            GarchParams::rational(1e-5, 0.1, 0.8, 1.5),
            GarchParams::rational(3e-4, 0.3, 0.2, 0.9),
            GarchParams::rational(2e-6, 0.05, 0.94, 2.5),
        ] {
            let lpost = log_posterior(&p, &r, &prior, 2e-4);
            let ll = crate::garch::log_likelihood(&p, &r, 2e-4).unwrap();
            assert_eq!(lpost - ll, 0.0);
        }
    }

    #[test]
    fn outside_support_is_negative_infinity() {
        let prior = Prior::flat_positive(Model::GarchN);
        let p = GarchParams::normal(-1e-5, 0.1, 0.8);
        assert_eq!(log_posterior(&p, &returns(), &prior, 2e-4), f64::NEG_INFINITY);
        let p = GarchParams::normal(1e-5, 0.0, 0.8);
        assert_eq!(log_posterior(&p, &returns(), &prior, 2e-4), f64::NEG_INFINITY);
    }

    #[test]
    fn bounded_prior() {
        let mut prior = Prior::flat_positive(Model::GarchRe);
        prior.params[3] = FlatPrior { lower: 0.0, upper: 2.0 };
        let p = GarchParams::rational(1e-5, 0.1, 0.8, 2.5);
        assert_eq!(log_posterior(&p, &returns(), &prior, 2e-4), f64::NEG_INFINITY);
    }

    #[test]
    fn log_target_includes_jacobian() {
        let post = GarchPosterior::new(Model::GarchN, &returns(), Prior::flat_positive(Model::GarchN), 2e-4).unwrap();
        let natural = [1e-5, 0.1, 0.8];
        let z: Vec<f64> = natural.iter().map(|v: &f64| v.ln()).collect();
        let e = post.evaluate(&z);
        let ll = post.log_likelihood(&natural);
        assert_eq!(e.log_likelihood, ll);
        assert!((e.log_density - ll - z.iter().sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::default().validate().is_ok());
        let bad = ChainConfig { burn_in: 100, adapt_interval: 500, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ChainConfig { samples: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ChainConfig { nu: 2.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn model_names_round_trip() {
        for m in [Model::GarchN, Model::GarchRe] {
            assert_eq!(m.label().parse::<Model>().unwrap(), m);
        }
        assert!("garch-t".parse::<Model>().is_err());
    }
}
