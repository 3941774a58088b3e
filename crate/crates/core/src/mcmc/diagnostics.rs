//! Autocorrelation and integrated autocorrelation time.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

/// Window rule constant: the smallest `W` with `W ≥ C · τ_int(W)`.
pub const WINDOW_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfDiagnostics {
    /// `acf[0] = 1` through `acf[window]`.
    pub acf: Vec<f64>,
    pub tau_int: f64,
    pub window: usize,
}

/// Biased autocovariance at every lag `0..n`, via zero-padded FFT.
fn autocovariance(series: &[f64]) -> Result<Vec<f64>> {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let scale = series.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(size)
        .collect();
    let c0 = buf[..n].iter().map(|c| c.re * c.re).sum::<f64>() / n as f64;
    if !c0.is_finite() || c0 <= (1e-14 * scale).powi(2) {
        return Err(Error::UndefinedAcf);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let norm = (size * n) as f64;
    let mut out: Vec<f64> = buf[..n].iter().map(|c| c.re / norm).collect();
    out[0] = c0;
    Ok(out)
}

/// Autocorrelation for lags `0..=max_lag` using the `1/N`-normalized
/// autocovariance.
pub fn acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if series.len() <= max_lag {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            got: series.len(),
        });
    }
    let cov = autocovariance(series)?;
    let c0 = cov[0];
    Ok(cov[..=max_lag].iter().map(|c| c / c0).collect())
}

/// `τ_int = 1 + 2 Σ_{t=1}^{W} ACF(t)` with the smallest `W ≥ 5 τ_int(W)`.
/// When no lag satisfies the rule the full series is used.
pub fn integrated_autocorr_time(series: &[f64]) -> Result<AcfDiagnostics> {
    if series.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: series.len(),
        });
    }
    let cov = autocovariance(series)?;
    let c0 = cov[0];
    let mut tau = 1.0;
    let mut window = cov.len() - 1;
    for (w, c) in cov.iter().enumerate().skip(1) {
        tau += 2.0 * c / c0;
        if w as f64 >= WINDOW_FACTOR * tau {
            window = w;
            break;
        }
    }
    let acf: Vec<f64> = cov[..=window].iter().map(|c| c / c0).collect();
    let tau_int = 1.0 + 2.0 * acf[1..].iter().sum::<f64>();
    Ok(AcfDiagnostics {
        acf,
        tau_int,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn ar1(phi: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = phi * x + e;
                x
            })
            .collect()
    }

    #[test]
    fn lag_zero_is_one() {
        let a = acf(&[1.0, 3.0, 2.0, 5.0], 0).unwrap();
        assert_eq!(a, vec![1.0]);
    }

    #[test]
    fn matches_direct_sum() {
        let xs = ar1(0.3, 257, 1);
        let got = acf(&xs, 6).unwrap();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let c = |k: usize| (0..xs.len() - k).map(|i| (xs[i] - m) * (xs[i + k] - m)).sum::<f64>() / n;
        for (k, g) in got.iter().enumerate() {
            assert!((g - c(k) / c(0)).abs() < 1e-12);
        }
    }

    #[test]
    fn alternating_series() {
        let xs: Vec<f64> = (0..10_000).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let a = acf(&xs, 1).unwrap();
        assert!((a[1] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn ar1_acf_is_geometric() {
        let xs = ar1(0.5, 100_000, 7);
        let a = acf(&xs, 5).unwrap();
        for (k, v) in a.iter().enumerate() {
            assert!((v - 0.5f64.powi(k as i32)).abs() < 0.01, "lag {k}: {v}");
        }
    }

    #[test]
    fn zero_variance_is_undefined() {
        assert!(matches!(acf(&[0.1; 50], 3), Err(Error::UndefinedAcf)));
        assert!(matches!(integrated_autocorr_time(&[2.0; 50]), Err(Error::UndefinedAcf)));
    }

    #[test]
    fn too_short_for_lag() {
        assert!(matches!(acf(&[1.0, 2.0], 2), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn iid_tau_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let d = integrated_autocorr_time(&xs).unwrap();
        assert!((d.tau_int - 1.0).abs() < 0.05, "tau {}", d.tau_int);
        assert_eq!(d.acf[0], 1.0);
        assert!(d.window as f64 >= WINDOW_FACTOR * d.tau_int);
    }

    #[test]
    fn ar1_tau_is_three() {
        let xs = ar1(0.5, 100_000, 9);
        let d = integrated_autocorr_time(&xs).unwrap();
        assert!((d.tau_int - 3.0).abs() < 0.3, "tau {}", d.tau_int);
    }

    #[test]
    fn sticky_chain_reports_large_tau() {
        // long runs of a held value with tiny moves between runs
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut xs = Vec::with_capacity(50_000);
        let mut level = 1.0;
        for i in 0..50_000 {
            if i % 400 == 0 {
                let e: f64 = StandardNormal.sample(&mut rng);
                level = 1.0 + 1e-9 * e;
            }
            xs.push(level);
        }
        let d = integrated_autocorr_time(&xs).unwrap();
        assert!(d.tau_int > 50.0, "tau {}", d.tau_int);
    }
}
