//! Rational (Padé (0,4)) error distribution with unit variance:
//!
//! ```text
//! f(x; a) = a / (π (1 + (a² − 2) x² + x⁴)),   a > 0
//! ```
//!
//! The denominator factors as `(x² − 1)² + a² x²`, which is strictly positive
//! for `a > 0`. Tails decay like `a / (π x⁴)`, so the variance is finite (and
//! equal to one for every `a`) while the fourth moment diverges.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, Open01};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_kronrod_15, integrate, integrate_to_infinity};

/// Knots are tabulated on `[0, TAIL_START]`; beyond it the tail is closed
/// analytically.
pub const TAIL_START: f64 = 50.0;
const KNOT_STEP: f64 = 0.01;
const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalDensity {
    a: f64,
}

impl RationalDensity {
    pub fn new(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Domain(format!("shape parameter a must be > 0, got {a}")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// True when the density peaks at the origin (`a ≥ √2`). Below that the
    /// maxima sit at `x² = (2 − a²) / 2`.
    pub fn is_unimodal(&self) -> bool {
        self.a >= SQRT_2
    }

    pub fn modes(&self) -> Vec<f64> {
        if self.is_unimodal() {
            vec![0.0]
        } else {
            let x = ((2.0 - self.a * self.a) / 2.0).sqrt();
            vec![-x, x]
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let a = self.a;
        let x2 = x * x;
        a / (PI * (1.0 + (a * a - 2.0) * x2 + x2 * x2))
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        self.a.ln() - PI.ln() - log_denominator(x, self.a)
    }

    /// `P(X > x)` for `x ≥ TAIL_START` from the asymptotic expansion
    /// `1/D(x) = x⁻⁴ (1 − c x⁻² + (c² − 1) x⁻⁴ + …)` with `c = a² − 2`.
    fn upper_tail(&self, x: f64) -> f64 {
        let c = self.a * self.a - 2.0;
        let x3 = x * x * x;
        let x2 = x * x;
        self.a / PI * (1.0 / (3.0 * x3) - c / (5.0 * x3 * x2) + (c * c - 1.0) / (7.0 * x3 * x2 * x2))
    }

    /// Cumulative distribution by direct quadrature from the origin.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Err(Error::Domain("cdf of NaN".into()));
        }
        let ax = x.abs();
        let upper = if ax >= TAIL_START {
            self.upper_tail(ax)
        } else {
            0.5 - integrate(|t| self.pdf(t), 0.0, ax, QUAD_TOL)?
        };
        Ok(if x >= 0.0 { 1.0 - upper } else { upper })
    }

    /// `∫ f` over the real line.
    pub fn total_mass(&self) -> Result<f64> {
        Ok(2.0 * integrate_to_infinity(|x| self.pdf(x), 0.0, 1e-12)?)
    }

    /// `∫ x² f` over the real line; one for every valid `a`.
    pub fn variance(&self) -> Result<f64> {
        Ok(2.0 * integrate_to_infinity(|x| x * x * self.pdf(x), 0.0, 1e-12)?)
    }

    pub fn cdf_table(&self) -> CdfTable {
        CdfTable::new(*self)
    }
}

/// `ln((x² − 1)² + a² x²)`, the cancellation-free form of the denominator.
#[inline]
pub(crate) fn log_denominator(x: f64, a: f64) -> f64 {
    let x2 = x * x;
    let d = x2 - 1.0;
    (d * d + a * a * x2).ln()
}

fn density(a: f64) -> Result<RationalDensity> {
    let d = RationalDensity::new(a)?;
    if !d.is_unimodal() {
        log::warn!("a = {a} < sqrt(2): the rational density is bimodal");
    }
    Ok(d)
}

pub fn pdf(x: f64, a: f64) -> Result<f64> {
    Ok(RationalDensity::new(a)?.pdf(x))
}

pub fn log_pdf(x: f64, a: f64) -> Result<f64> {
    Ok(RationalDensity::new(a)?.log_pdf(x))
}

pub fn cdf(x: f64, a: f64) -> Result<f64> {
    if x == f64::INFINITY {
        RationalDensity::new(a)?;
        return Ok(1.0);
    }
    if x == f64::NEG_INFINITY {
        RationalDensity::new(a)?;
        return Ok(0.0);
    }
    RationalDensity::new(a)?.cdf(x)
}

/// `count` i.i.d. draws by inverse-CDF sampling.
pub fn sample<R: Rng + ?Sized>(count: usize, a: f64, rng: &mut R) -> Result<Vec<f64>> {
    let d = density(a)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    let table = d.cdf_table();
    Ok((0..count).map(|_| table.sample(rng)).collect())
}

/// Numerically integrated second moment.
pub fn variance_check(a: f64) -> Result<f64> {
    RationalDensity::new(a)?.variance()
}

/// Cumulative probabilities on a symmetric knot grid out to `|x| = 50`.
///
/// Only the non-negative half is stored; `F(−x) = 1 − F(x)`.
#[derive(Debug, Clone)]
pub struct CdfTable {
    density: RationalDensity,
    /// `F(i · KNOT_STEP)`, starting at exactly one half.
    knots: Vec<f64>,
    tail_mass: f64,
}

impl CdfTable {
    pub fn new(density: RationalDensity) -> Self {
        let n = (TAIL_START / KNOT_STEP).round() as usize;
        let f = |x: f64| density.pdf(x);
        let mut knots = Vec::with_capacity(n + 1);
        let mut acc = 0.5;
        knots.push(acc);
        for i in 0..n {
            let (v, _) = gauss_kronrod_15(&f, i as f64 * KNOT_STEP, (i + 1) as f64 * KNOT_STEP);
            acc += v;
            knots.push(acc);
        }
        let tail_mass = density.upper_tail(TAIL_START);
        Self {
            density,
            knots,
            tail_mass,
        }
    }

    pub fn density(&self) -> RationalDensity {
        self.density
    }

    /// Knot abscissae and cumulative values, `x ≥ 0` half.
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as f64 * KNOT_STEP, p))
    }

    fn upper(&self, ax: f64) -> f64 {
        if ax >= TAIL_START {
            return self.density.upper_tail(ax);
        }
        let i = ((ax / KNOT_STEP) as usize).min(self.knots.len() - 2);
        1.0 - self.cdf_near_knot(i, ax)
    }

    fn cdf_near_knot(&self, i: usize, x: f64) -> f64 {
        let x0 = i as f64 * KNOT_STEP;
        self.knots[i] + gauss_kronrod_15(&|t| self.density.pdf(t), x0, x).0
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return if x > 0.0 { 1.0 } else { 0.0 };
        }
        let u = self.upper(x.abs());
        if x >= 0.0 {
            1.0 - u
        } else {
            u
        }
    }

    /// Smallest `x ≥ 0` with `P(X > x) = q`, for `q ∈ (0, 1/2]`.
    fn upper_quantile(&self, q: f64) -> f64 {
        if q >= 0.5 {
            return 0.0;
        }
        if q <= self.tail_mass {
            // Newton on the analytic tail, started from the leading term.
            let mut x = (self.density.a / (3.0 * PI * q)).cbrt().max(TAIL_START);
            for _ in 0..50 {
                let step = (self.density.upper_tail(x) - q) / self.density.pdf(x);
                x += step;
                if step.abs() <= 1e-14 * x {
                    break;
                }
            }
            return x.max(TAIL_START);
        }
        let p = 1.0 - q;
        // knots[i] ≤ p < knots[i + 1]
        let i = self.knots.partition_point(|&k| k <= p).saturating_sub(1);
        let i = i.min(self.knots.len() - 2);
        let (mut lo, mut hi) = (i as f64 * KNOT_STEP, (i + 1) as f64 * KNOT_STEP);
        let mut x = lo + (p - self.knots[i]) / self.density.pdf(lo).max(1e-300);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        for _ in 0..100 {
            let g = self.cdf_near_knot(i, x) - p;
            if g > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let mut next = x - g / self.density.pdf(x);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x) {
                return next;
            }
            x = next;
        }
        x
    }

    pub fn quantile(&self, u: f64) -> f64 {
        if u < 0.5 {
            -self.upper_quantile(u)
        } else {
            self.upper_quantile(1.0 - u)
        }
    }
}

impl Distribution<f64> for CdfTable {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        self.quantile(u)
    }
}
