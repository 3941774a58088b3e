use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::diagnostics::integrated_autocorr_time;
use super::optimize::{hessian, nelder_mead};
use super::proposal::{adapt_proposal, StudentTProposal};
use super::{ChainConfig, GarchPosterior, Model, Prior};
use crate::data::ReturnSeries;
use crate::error::{Error, Result};
use crate::garch::{default_init_variance, volatility_recursion, VolSeries};

/// Minimum number of returns `run_chain` accepts.
pub const MIN_RETURNS: usize = 30;
const MIN_ACCEPTANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub log_density: f64,
    /// Carried along so the chain can report `ln L(θ)` per sample without
    /// re-evaluating it.
    pub log_likelihood: f64,
}

impl Evaluation {
    pub const REJECT: Evaluation = Evaluation {
        log_density: f64::NEG_INFINITY,
        log_likelihood: f64::NEG_INFINITY,
    };
}

pub trait LogTarget {
    fn evaluate(&self, x: &[f64]) -> Evaluation;
}

/// Adapts a plain log-density closure; its log-likelihood is the density.
pub struct FnTarget<F>(pub F);

impl<F: Fn(&[f64]) -> f64> LogTarget for FnTarget<F> {
    fn evaluate(&self, x: &[f64]) -> Evaluation {
        let v = (self.0)(x);
        Evaluation {
            log_density: v,
            log_likelihood: v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub eval: Evaluation,
}

impl ChainState {
    pub fn new<T: LogTarget + ?Sized>(position: Vec<f64>, target: &T) -> Self {
        let eval = target.evaluate(&position);
        Self { position, eval }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub accepted: bool,
    pub acceptance_probability: f64,
}

/// One independence Metropolis-Hastings update.
///
/// Accepts `θ′ ~ q` with probability `min{1, π(θ′) q(θ) / (π(θ) q(θ′))}`;
/// the state is left untouched on rejection.
pub fn mh_step<T: LogTarget + ?Sized, R: Rng + ?Sized>(
    state: &mut ChainState,
    proposal: &StudentTProposal,
    target: &T,
    rng: &mut R,
) -> StepOutcome {
    let candidate = proposal.sample(rng);
    let u: f64 = rng.random();
    let eval = target.evaluate(&candidate);
    if eval.log_density.is_nan() || eval.log_density == f64::NEG_INFINITY {
        return StepOutcome {
            accepted: false,
            acceptance_probability: 0.0,
        };
    }
    let log_ratio = eval.log_density - state.eval.log_density + proposal.log_density(&state.position)
        - proposal.log_density(&candidate);
    let acceptance_probability = if log_ratio >= 0.0 { 1.0 } else { log_ratio.exp() };
    let accepted = log_ratio >= 0.0 || u.ln() < log_ratio;
    if accepted {
        state.position = candidate;
        state.eval = eval;
    }
    StepOutcome {
        accepted,
        acceptance_probability,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub tau_int: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub model: Model,
    pub seed: u64,
    pub burn_in: usize,
    pub samples: usize,
    pub adapt_interval: usize,
    pub nu: f64,
    pub init_variance: f64,
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    /// `ln L(θ̄)` at the posterior mean.
    pub log_likelihood_at_mean: f64,
    /// Monte Carlo average of `ln L(θ)`.
    pub mean_log_likelihood: f64,
    pub max_log_likelihood: f64,
    pub parameters: Vec<ParamSummary>,
}

#[derive(Debug, Clone)]
pub struct PosteriorChain {
    summary: ChainSummary,
    dim: usize,
    /// Row-major retained samples in log coordinates.
    transformed: Vec<f64>,
    log_target: Vec<f64>,
    log_likelihood: Vec<f64>,
    proposal: StudentTProposal,
}

impl PosteriorChain {
    pub fn model(&self) -> Model {
        self.summary.model
    }

    pub fn summary(&self) -> &ChainSummary {
        &self.summary
    }

    pub fn len(&self) -> usize {
        self.log_target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_target.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.summary.acceptance_rate
    }

    /// The frozen proposal used for the retained samples.
    pub fn proposal(&self) -> &StudentTProposal {
        &self.proposal
    }

    pub fn transformed_row(&self, i: usize) -> &[f64] {
        &self.transformed[i * self.dim..(i + 1) * self.dim]
    }

    pub fn natural_row(&self, i: usize) -> Vec<f64> {
        self.transformed_row(i).iter().map(|v| v.exp()).collect()
    }

    pub fn natural_column(&self, j: usize) -> Vec<f64> {
        (0..self.len()).map(|i| self.transformed[i * self.dim + j].exp()).collect()
    }

    /// Log target density in log coordinates (includes the Jacobian).
    pub fn log_target_trace(&self) -> &[f64] {
        &self.log_target
    }

    /// `ln L(θ)` per retained sample. With the flat prior this is also the
    /// natural-space log posterior up to a constant.
    pub fn log_likelihood_trace(&self) -> &[f64] {
        &self.log_likelihood
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        self.summary.parameters.iter().map(|p| p.mean).collect()
    }

    /// The retained sample with the highest natural-space log posterior.
    pub fn modal_sample(&self) -> Vec<f64> {
        let best = self
            .log_likelihood
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map_or(0, |(i, _)| i);
        self.natural_row(best)
    }

    /// Conditional variances at the posterior mean parameters.
    pub fn variances_at_mean(&self, returns: &ReturnSeries) -> Result<VolSeries> {
        let params = self.model().params(&self.posterior_mean());
        volatility_recursion(&params, returns, self.summary.init_variance)
    }

    /// `σ̄_t²`: the posterior average of the conditional variance path over
    /// every `thin`-th retained sample.
    pub fn posterior_mean_variances(&self, returns: &ReturnSeries, thin: usize) -> Result<VolSeries> {
        let thin = thin.max(1);
        let mut acc = vec![0.0; returns.len()];
        let mut count = 0usize;
        for i in (0..self.len()).step_by(thin) {
            let params = self.model().params(&self.natural_row(i));
            let v = volatility_recursion(&params, returns, self.summary.init_variance)?;
            for (a, s) in acc.iter_mut().zip(v.variances()) {
                *a += s;
            }
            count += 1;
        }
        acc.iter_mut().for_each(|a| *a /= count as f64);
        VolSeries::new(returns.dates().to_vec(), acc)
    }
}

/// Mode of the log-coordinate target and a Laplace-approximation proposal
/// around it.
fn initial_proposal(target: &GarchPosterior, nu: f64) -> Result<(Vec<f64>, StudentTProposal)> {
    let v = target.init_variance();
    let mut start = vec![(0.05 * v).ln(), 0.05f64.ln(), 0.9f64.ln()];
    if target.model() == Model::GarchRe {
        start.push(1.5f64.ln());
    }
    let neg = |z: &[f64]| {
        let d = target.evaluate(z).log_density;
        if d.is_finite() {
            -d
        } else {
            f64::INFINITY
        }
    };
    let (mut mode, mut best) = nelder_mead(neg, &start, 0.5, 4000, 1e-12);
    // restart once from the result to escape a collapsed simplex
    let (m2, b2) = nelder_mead(neg, &mode, 0.1, 4000, 1e-12);
    if b2 <= best {
        mode = m2;
        best = b2;
    }
    if !best.is_finite() {
        return Err(Error::Numerical {
            index: 0,
            message: "posterior is not finite anywhere near the starting point".into(),
        });
    }
    let d = mode.len();
    let h = hessian(neg, &mode, 1e-3);
    let cov = h
        .clone()
        .try_inverse()
        .filter(|c| c.clone().cholesky().is_some() && c.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| {
            DMatrix::from_fn(d, d, |i, j| {
                if i != j {
                    0.0
                } else if h[(i, i)] > 0.0 && h[(i, i)].is_finite() {
                    1.0 / h[(i, i)]
                } else {
                    0.25
                }
            })
        });
    let proposal = StudentTProposal::new(mode.clone(), cov * ((nu - 2.0) / nu), nu)?;
    Ok((mode, proposal))
}

/// Runs one chain: mode search, adaptive burn-in, then `samples` updates
/// under the frozen proposal.
pub fn run_chain(model: Model, returns: &ReturnSeries, config: &ChainConfig) -> Result<PosteriorChain> {
    config.validate()?;
    if returns.len() < MIN_RETURNS {
        return Err(Error::InsufficientData {
            needed: MIN_RETURNS,
            got: returns.len(),
        });
    }
    let init_variance = config
        .init_variance
        .unwrap_or_else(|| default_init_variance(returns.values()));
    let prior = config.prior.clone().unwrap_or_else(|| Prior::flat_positive(model));
    let target = GarchPosterior::new(model, returns, prior, init_variance)?;
    let dim = model.dim();

    let (mode, mut proposal) = initial_proposal(&target, config.nu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = ChainState::new(mode, &target);

    let mut history = Vec::with_capacity(config.burn_in);
    let mut burn_accepted = 0usize;
    for step in 1..=config.burn_in {
        if mh_step(&mut state, &proposal, &target, &mut rng).accepted {
            burn_accepted += 1;
        }
        history.push(state.position.clone());
        if step % config.adapt_interval == 0 {
            match adapt_proposal(&history, config.nu) {
                Ok(p) => proposal = p,
                Err(e) => log::warn!("proposal adaptation skipped at step {step}: {e}"),
            }
        }
    }
    drop(history);

    let mut transformed = Vec::with_capacity(config.samples * dim);
    let mut log_target = Vec::with_capacity(config.samples);
    let mut log_likelihood = Vec::with_capacity(config.samples);
    let mut accepted = 0usize;
    for _ in 0..config.samples {
        if mh_step(&mut state, &proposal, &target, &mut rng).accepted {
            accepted += 1;
        }
        transformed.extend_from_slice(&state.position);
        log_target.push(state.eval.log_density);
        log_likelihood.push(state.eval.log_likelihood);
    }
    let acceptance_rate = accepted as f64 / config.samples as f64;
    if acceptance_rate < MIN_ACCEPTANCE {
        return Err(Error::AdaptationFailure {
            rate: acceptance_rate,
        });
    }

    let mut chain = PosteriorChain {
        summary: ChainSummary {
            model,
            seed: config.seed,
            burn_in: config.burn_in,
            samples: config.samples,
            adapt_interval: config.adapt_interval,
            nu: config.nu,
            init_variance,
            acceptance_rate,
            burn_in_acceptance_rate: burn_accepted as f64 / config.burn_in as f64,
            log_likelihood_at_mean: f64::NAN,
            mean_log_likelihood: log_likelihood.iter().sum::<f64>() / log_likelihood.len() as f64,
            max_log_likelihood: log_likelihood.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            parameters: Vec::new(),
        },
        dim,
        transformed,
        log_target,
        log_likelihood,
        proposal,
    };
    let mut parameters = Vec::with_capacity(dim);
    for (j, name) in model.param_names().iter().enumerate() {
        let col = chain.natural_column(j);
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let sd = if col.len() > 1 {
            (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let tau_int = match integrated_autocorr_time(&col) {
            Ok(d) => d.tau_int,
            Err(Error::UndefinedAcf) | Err(Error::InsufficientData { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        parameters.push(ParamSummary {
            name: name.to_string(),
            mean,
            sd,
            tau_int,
        });
    }
    let mean: Vec<f64> = parameters.iter().map(|p| p.mean).collect();
    chain.summary.parameters = parameters;
    chain.summary.log_likelihood_at_mean = target.log_likelihood(&mean);
    Ok(chain)
}

/// Independent chains with seeds `config.seed, config.seed + 1, …`, run in
/// parallel.
pub fn run_chains(
    model: Model,
    returns: &ReturnSeries,
    config: &ChainConfig,
    count: usize,
) -> Vec<Result<PosteriorChain>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let cfg = ChainConfig {
                seed: config.seed.wrapping_add(i),
                ..config.clone()
            };
            run_chain(model, returns, &cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};
    use crate::garch::GarchParams;
    use crate::mcmc::log_posterior;

    fn unit_t(nu: f64) -> StudentTProposal {
        StudentTProposal::new(vec![0.0], DMatrix::identity(1, 1), nu).unwrap()
    }

    #[test]
    fn balanced_ratio_always_accepts() {
        let p = unit_t(5.0);
        // target equal to the proposal: π(θ′)q(θ) = π(θ)q(θ′)
        let q = p.clone();
        let target = FnTarget(move |x: &[f64]| q.log_density(x));
        let mut state = ChainState::new(vec![0.3], &target);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let out = mh_step(&mut state, &p, &target, &mut rng);
            assert!(out.accepted);
            assert!((out.acceptance_probability - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn outside_support_always_rejected() {
        let p = unit_t(5.0);
        let target = FnTarget(|x: &[f64]| if x[0] > 100.0 { 0.0 } else { f64::NEG_INFINITY });
        let mut state = ChainState {
            position: vec![200.0],
            eval: Evaluation { log_density: 0.0, log_likelihood: 0.0 },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let out = mh_step(&mut state, &p, &target, &mut rng);
            assert!(!out.accepted);
            assert_eq!(out.acceptance_probability, 0.0);
        }
        assert_eq!(state.position, vec![200.0]);
    }

    #[test]
    fn standard_normal_target_moments() {
        let p = unit_t(10.0);
        let target = FnTarget(|x: &[f64]| -0.5 * x[0] * x[0]);
        let mut state = ChainState::new(vec![0.0], &target);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                mh_step(&mut state, &p, &target, &mut rng);
                state.position[0]
            })
            .collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn short_series_rejected() {
        let r = ReturnSeries::from_values(vec![0.01; 10]).unwrap();
        assert!(matches!(
            run_chain(Model::GarchN, &r, &ChainConfig::default()),
            Err(Error::InsufficientData { needed: 30, got: 10 })
        ));
    }

    fn garch_n_returns(n: usize, seed: u64) -> ReturnSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (omega, alpha, beta) = (1e-5, 0.1, 0.85);
        let mut s2: f64 = omega / (1.0 - alpha - beta);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            let v = s2.sqrt() * e;
            y.push(v);
            s2 = omega + alpha * v * v + beta * s2;
        }
        ReturnSeries::from_values(y).unwrap()
    }

    #[test]
    fn deterministic_under_seed() {
        let r = garch_n_returns(300, 4);
        let cfg = ChainConfig {
            burn_in: 1000,
            samples: 2000,
            adapt_interval: 250,
            seed: 9,
            ..Default::default()
        };
        let a = run_chain(Model::GarchN, &r, &cfg).unwrap();
        let b = run_chain(Model::GarchN, &r, &cfg).unwrap();
        assert_eq!(a.transformed, b.transformed);
        assert_eq!(a.log_likelihood, b.log_likelihood);
        assert_eq!(a.summary, b.summary);
    }

    #[test]
    fn summary_matches_natural_columns() {
        let r = garch_n_returns(300, 5);
        let cfg = ChainConfig {
            burn_in: 1000,
            samples: 3000,
            adapt_interval: 250,
            seed: 1,
            ..Default::default()
        };
        let c = run_chain(Model::GarchN, &r, &cfg).unwrap();
        assert!((0.0..=1.0).contains(&c.acceptance_rate()));
        for j in 0..3 {
            let col = c.natural_column(j);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            assert_eq!(m, c.summary().parameters[j].mean);
        }
        assert!(c.summary().mean_log_likelihood <= c.summary().max_log_likelihood);
    }

    #[test]
    fn parallel_chains_match_sequential() {
        let r = garch_n_returns(200, 6);
        let cfg = ChainConfig {
            burn_in: 500,
            samples: 1000,
            adapt_interval: 250,
            seed: 20,
            ..Default::default()
        };
        let many = run_chains(Model::GarchN, &r, &cfg, 3);
        for (i, c) in many.into_iter().enumerate() {
            let single = run_chain(
                Model::GarchN,
                &r,
                &ChainConfig { seed: 20 + i as u64, ..cfg.clone() },
            )
            .unwrap();
            assert_eq!(c.unwrap().log_likelihood, single.log_likelihood);
        }
    }

    /// Batch-means standard error of the mean.
    fn batch_se(xs: &[f64], batches: usize) -> f64 {
        let b = xs.len() / batches;
        let means: Vec<f64> = xs.chunks_exact(b).map(|c| c.iter().sum::<f64>() / b as f64).collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let v = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
        (v / means.len() as f64).sqrt()
    }

    #[test]
    fn frozen_proposal_keeps_correlated_normal_invariant() {
        // target N(μ, Σ) with Σ = [[1, 0.8], [0.8, 2]]; proposal deliberately mismatched
        let (mu, s11, s12, s22) = ([1.0, -2.0], 1.0, 0.8, 2.0);
        let det = s11 * s22 - s12 * s12;
        let target = FnTarget(move |x: &[f64]| {
            let (a, b) = (x[0] - mu[0], x[1] - mu[1]);
            -0.5 * (s22 * a * a - 2.0 * s12 * a * b + s11 * b * b) / det
        });
        let proposal = StudentTProposal::new(vec![0.5, -1.5], DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 2.5]), 10.0).unwrap();
        let mut state = ChainState::new(vec![0.0, 0.0], &target);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 200_000;
        let (mut xs, mut ys, mut xx, mut xy, mut yy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            mh_step(&mut state, &proposal, &target, &mut rng);
            let (a, b) = (state.position[0], state.position[1]);
            xs.push(a);
            ys.push(b);
            xx.push((a - mu[0]).powi(2));
            xy.push((a - mu[0]) * (b - mu[1]));
            yy.push((b - mu[1]).powi(2));
        }
        for (series, want) in [(&xs, mu[0]), (&ys, mu[1]), (&xx, s11), (&xy, s12), (&yy, s22)] {
            let m = series.iter().sum::<f64>() / n as f64;
            let se = batch_se(series, 100);
            assert!((m - want).abs() < 3.0 * se, "{m} vs {want} (se {se})");
        }
    }

    #[test]
    fn modal_sample_matches_grid_argmax() {
        let r = garch_n_returns(100, 8);
        let init = crate::garch::default_init_variance(r.values());
        let prior = Prior::flat_positive(Model::GarchN);
        let axis = |lo: f64, hi: f64| -> Vec<f64> { (0..20).map(|i| lo + (hi - lo) * i as f64 / 19.0).collect() };
        let (om, al, be) = (axis(1e-6, 8e-5), axis(0.005, 0.5), axis(0.3, 0.99));
        let mut best = (f64::NEG_INFINITY, [0usize; 3]);
        for (i, o) in om.iter().enumerate() {
            for (j, a) in al.iter().enumerate() {
                for (k, b) in be.iter().enumerate() {
                    let lp = log_posterior(&GarchParams::normal(*o, *a, *b), &r, &prior, init);
                    if lp > best.0 {
                        best = (lp, [i, j, k]);
                    }
                }
            }
        }
        let chain = run_chain(Model::GarchN, &r, &ChainConfig { seed: 3, ..Default::default() }).unwrap();
        let modal = chain.modal_sample();
        for (d, grid) in [&om, &al, &be].iter().enumerate() {
            let cell = grid[1] - grid[0];
            let g = grid[best.1[d]];
            assert!((modal[d] - g).abs() <= cell, "axis {d}: modal {} grid {g} cell {cell}", modal[d]);
        }
    }
}
