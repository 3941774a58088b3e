//! GARCH(1,1) conditional variance and likelihood.

use std::f64::consts::PI;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::{read_dated_values, write_comments, ReturnSeries};
use crate::error::{Error, Result};
use crate::rational::{log_denominator, RationalDensity};

/// Distribution of the standardized error `ε_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "lowercase")]
pub enum ErrorLaw {
    Normal,
    Rational { a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub law: ErrorLaw,
}

impl GarchParams {
    pub fn normal(omega: f64, alpha: f64, beta: f64) -> Self {
        Self {
            omega,
            alpha,
            beta,
            law: ErrorLaw::Normal,
        }
    }

    pub fn rational(omega: f64, alpha: f64, beta: f64, a: f64) -> Self {
        Self {
            omega,
            alpha,
            beta,
            law: ErrorLaw::Rational { a },
        }
    }

    /// `ω / (1 − α − β)` when `α + β < 1`.
    pub fn unconditional_variance(&self) -> Option<f64> {
        let p = self.alpha + self.beta;
        (p < 1.0).then(|| self.omega / (1.0 - p))
    }

    /// Rejects anything that cannot produce a positive variance path:
    /// `ω > 0`, `α, β ≥ 0`, and `a > 0` for the rational law.
    ///
    /// This is looser than [`check_constraints`], which demands strict
    /// positivity of `α` and `β`; the degenerate `α = β = 0` case is a valid
    /// i.i.d. model and is accepted here.
    pub fn validate(&self) -> Result<()> {
        if !(self.omega.is_finite() && self.omega > 0.0) {
            return Err(Error::Domain(format!("omega must be > 0, got {}", self.omega)));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Domain(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::Domain(format!("beta must be >= 0, got {}", self.beta)));
        }
        if let ErrorLaw::Rational { a } = self.law {
            RationalDensity::new(a)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub valid: bool,
    pub violations: Vec<String>,
    /// `α + β ≥ 1`: the process is not covariance stationary.
    pub stationarity_warning: bool,
}

/// Positivity check on `ω, α, β` (and `a`). Stationarity is only a warning.
pub fn check_constraints(params: &GarchParams) -> ConstraintCheck {
    let mut violations = Vec::new();
    for (name, v) in [
        ("omega", params.omega),
        ("alpha", params.alpha),
        ("beta", params.beta),
    ] {
        if !(v.is_finite() && v > 0.0) {
            violations.push(format!("{name} = {v} is not > 0"));
        }
    }
    if let ErrorLaw::Rational { a } = params.law {
        if !(a.is_finite() && a > 0.0) {
            violations.push(format!("a = {a} is not > 0"));
        }
    }
    ConstraintCheck {
        valid: violations.is_empty(),
        violations,
        stationarity_warning: params.alpha + params.beta >= 1.0,
    }
}

/// Conditional variances aligned with a return series.
#[derive(Debug, Clone, PartialEq)]
pub struct VolSeries {
    dates: Vec<NaiveDate>,
    variances: Vec<f64>,
}

impl VolSeries {
    pub fn new(dates: Vec<NaiveDate>, variances: Vec<f64>) -> Result<Self> {
        if dates.len() != variances.len() {
            return Err(Error::Validation(format!(
                "{} dates for {} variances",
                dates.len(),
                variances.len()
            )));
        }
        if let Some(i) = variances.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Numerical {
                index: i,
                message: format!("variance {} is not positive and finite", variances[i]),
            });
        }
        Ok(Self { dates, variances })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.dates.iter().copied().zip(self.variances.iter().copied())
    }

    /// Reads `date,variance` rows.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let (dates, variances) = read_dated_values(reader, "variance")?.into_iter().unzip();
        Self::new(dates, variances)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, comments: &[String]) -> std::io::Result<()> {
        write_comments(&mut w, comments)?;
        writeln!(w, "date,variance")?;
        for (d, v) in self.iter() {
            writeln!(w, "{},{}", d.format("%Y-%m-%d"), v)?;
        }
        Ok(())
    }
}

/// Population variance of the returns, the default `σ_1²`.
pub fn default_init_variance(returns: &[f64]) -> f64 {
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n
}

fn check_init(init_variance: f64) -> Result<()> {
    if !(init_variance.is_finite() && init_variance > 0.0) {
        return Err(Error::Domain(format!(
            "initial variance must be > 0, got {init_variance}"
        )));
    }
    Ok(())
}

/// `σ_1² = init`, `σ_t² = ω + α y_{t−1}² + β σ_{t−1}²`.
pub fn volatility_recursion(
    params: &GarchParams,
    returns: &ReturnSeries,
    init_variance: f64,
) -> Result<VolSeries> {
    params.validate()?;
    check_init(init_variance)?;
    if returns.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let y = returns.values();
    let mut out = Vec::with_capacity(y.len());
    let mut s2 = init_variance;
    out.push(s2);
    for t in 1..y.len() {
        s2 = params.omega + params.alpha * y[t - 1] * y[t - 1] + params.beta * s2;
        out.push(s2);
    }
    VolSeries::new(returns.dates().to_vec(), out)
}

/// Conditional log-likelihood given `σ_1²`.
pub fn log_likelihood(params: &GarchParams, returns: &ReturnSeries, init_variance: f64) -> Result<f64> {
    params.validate()?;
    check_init(init_variance)?;
    if returns.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    log_likelihood_unchecked(params, returns.values(), init_variance)
}

/// Likelihood kernel without parameter validation; used in the sampler's
/// inner loop.
pub(crate) fn log_likelihood_unchecked(params: &GarchParams, y: &[f64], init_variance: f64) -> Result<f64> {
    let (omega, alpha, beta) = (params.omega, params.alpha, params.beta);
    let mut s2 = init_variance;
    let mut total = 0.0;
    match params.law {
        ErrorLaw::Normal => {
            let c = -0.5 * (2.0 * PI).ln();
            for (t, &yt) in y.iter().enumerate() {
                if t > 0 {
                    let yp = y[t - 1];
                    s2 = omega + alpha * yp * yp + beta * s2;
                }
                total += c - 0.5 * s2.ln() - 0.5 * yt * yt / s2;
            }
        }
        ErrorLaw::Rational { a } => {
            let c = a.ln() - PI.ln();
            for (t, &yt) in y.iter().enumerate() {
                if t > 0 {
                    let yp = y[t - 1];
                    s2 = omega + alpha * yp * yp + beta * s2;
                }
                let z = yt / s2.sqrt();
                total += c - log_denominator(z, a) - 0.5 * s2.ln();
            }
        }
    }
    if !total.is_finite() {
        // Locate the first offending term for the report.
        let index = first_non_finite(params, y, init_variance);
        return Err(Error::Numerical {
            index,
            message: "log-likelihood term is not finite".into(),
        });
    }
    Ok(total)
}

fn first_non_finite(params: &GarchParams, y: &[f64], init_variance: f64) -> usize {
    let mut s2 = init_variance;
    for t in 0..y.len() {
        if t > 0 {
            s2 = params.omega + params.alpha * y[t - 1] * y[t - 1] + params.beta * s2;
        }
        if !(s2.is_finite() && s2 > 0.0) {
            return t;
        }
    }
    y.len().saturating_sub(1)
}
