//! Multivariate Student's t proposal and its adaptation from chain history.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Diagonal floor added to a near-singular scale matrix.
pub const JITTER: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct StudentTProposal {
    location: DVector<f64>,
    scale: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    nu: f64,
    chi2: ChiSquared<f64>,
    log_norm: f64,
}

impl StudentTProposal {
    /// `scale` must be symmetric positive definite and `nu > 2`.
    pub fn new(location: Vec<f64>, scale: DMatrix<f64>, nu: f64) -> Result<Self> {
        let d = location.len();
        if d == 0 || scale.nrows() != d || scale.ncols() != d {
            return Err(Error::Validation(format!(
                "scale must be {d}x{d}, got {}x{}",
                scale.nrows(),
                scale.ncols()
            )));
        }
        if !(nu.is_finite() && nu > 2.0) {
            return Err(Error::Domain(format!("degrees of freedom must be > 2, got {nu}")));
        }
        let chol = Cholesky::new(scale.clone())
            .ok_or_else(|| Error::Domain("proposal scale is not positive definite".into()))?;
        let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
        let df = d as f64;
        let log_norm = ln_gamma(0.5 * (nu + df))
            - ln_gamma(0.5 * nu)
            - 0.5 * df * (nu * std::f64::consts::PI).ln()
            - log_det_half;
        let chi2 = ChiSquared::new(nu).map_err(|e| Error::Domain(e.to_string()))?;
        Ok(Self {
            location: DVector::from_vec(location),
            scale,
            chol,
            nu,
            chi2,
            log_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.location.len()
    }

    pub fn location(&self) -> &[f64] {
        self.location.as_slice()
    }

    pub fn scale(&self) -> &DMatrix<f64> {
        &self.scale
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `ν / (ν − 2)` times the scale matrix.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.scale * (self.nu / (self.nu - 2.0))
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let diff = DVector::from_column_slice(x) - &self.location;
        let w = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        let m = w.norm_squared();
        self.log_norm - 0.5 * (self.nu + self.dim() as f64) * (m / self.nu).ln_1p()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| StandardNormal.sample(rng));
        let w: f64 = self.chi2.sample(rng);
        let x = &self.location + self.chol.l() * z * (self.nu / w).sqrt();
        x.data.into()
    }
}

/// Fits a proposal to `history`: location is the sample mean and the scale is
/// the sample covariance times `(ν − 2)/ν`, so the proposal covariance equals
/// the sample covariance. A near-singular scale gets [`JITTER`] added to its
/// diagonal (repeatedly, growing tenfold, until it factors).
pub fn adapt_proposal(history: &[Vec<f64>], nu: f64) -> Result<StudentTProposal> {
    let d = history.first().map_or(0, Vec::len);
    if d == 0 || history.len() < d + 2 {
        return Err(Error::InsufficientHistory {
            needed: d.max(1) + 2,
            got: history.len(),
        });
    }
    if !(nu.is_finite() && nu > 2.0) {
        return Err(Error::Domain(format!("degrees of freedom must be > 2, got {nu}")));
    }
    let n = history.len() as f64;
    let mut mean = vec![0.0; d];
    for row in history {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for row in history {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in 0..=i {
                cov[(i, j)] += di * (row[j] - mean[j]);
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov[(i, j)] / (n - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let mut scale = cov * ((nu - 2.0) / nu);
    let singular = |s: &DMatrix<f64>| {
        (0..d).any(|i| s[(i, i)] < JITTER) || Cholesky::new(s.clone()).is_none()
    };
    let mut jitter = JITTER;
    while singular(&scale) {
        for i in 0..d {
            scale[(i, i)] += jitter;
        }
        jitter *= 10.0;
        if jitter > 1e6 {
            return Err(Error::Domain("history covariance cannot be regularized".into()));
        }
    }
    StudentTProposal::new(mean, scale, nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_rows_hit_the_jitter_floor() {
        let history = vec![vec![0.5, -1.0, 2.0]; 10];
        let p = adapt_proposal(&history, 10.0).unwrap();
        assert_eq!(p.location(), &[0.5, -1.0, 2.0]);
        for i in 0..3 {
            assert_eq!(p.scale()[(i, i)], JITTER);
        }
    }

    #[test]
    fn too_few_rows() {
        let history = vec![vec![0.0, 1.0]; 3];
        assert!(matches!(
            adapt_proposal(&history, 10.0),
            Err(Error::InsufficientHistory { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn rejects_small_nu() {
        let s = DMatrix::identity(2, 2);
        assert!(StudentTProposal::new(vec![0.0, 0.0], s, 2.0).is_err());
    }

    #[test]
    fn recovers_gaussian_covariance() {
        let mu = [1.0, -2.0];
        // Σ = [[2, 0.6], [0.6, 0.5]]
        let l = [[2f64.sqrt(), 0.0], [0.6 / 2f64.sqrt(), (0.5 - 0.18f64).sqrt()]];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let history: Vec<Vec<f64>> = (0..10_000)
            .map(|_| {
                let z0: f64 = StandardNormal.sample(&mut rng);
                let z1: f64 = StandardNormal.sample(&mut rng);
                vec![mu[0] + l[0][0] * z0, mu[1] + l[1][0] * z0 + l[1][1] * z1]
            })
            .collect();
        let p = adapt_proposal(&history, 10.0).unwrap();
        let cov = p.covariance();
        let want = [[2.0, 0.6], [0.6, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(((cov[(i, j)] - want[i][j]) / want[i][j]).abs() < 0.1);
            }
        }
    }

    #[test]
    fn large_nu_approaches_the_normal() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let p = StudentTProposal::new(vec![0.0, 0.0], s.clone(), 1e6).unwrap();
        let det = s.determinant();
        let normal_at_mode = -(2.0 * std::f64::consts::PI).ln() - 0.5 * det.ln();
        let ratio = (p.log_density(&[0.0, 0.0]) - normal_at_mode).exp();
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn one_dimensional_density_matches_closed_form() {
        // standard t with ν = 5 at x = 1.3
        let p = StudentTProposal::new(vec![0.0], DMatrix::identity(1, 1), 5.0).unwrap();
        let nu: f64 = 5.0;
        let x: f64 = 1.3;
        let want = ln_gamma(3.0) - ln_gamma(2.5) - 0.5 * (nu * std::f64::consts::PI).ln()
            - 3.0 * (1.0 + x * x / nu).ln();
        assert!((p.log_density(&[x]) - want).abs() < 1e-12);
    }
}
