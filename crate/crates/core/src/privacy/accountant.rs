//! Log-moment accountant for the subsampled Gaussian mechanism.
//!
//! One mechanism invocation samples each record with probability `q` and adds
//! Gaussian noise with multiplier `sigma`. Its privacy loss is summarized by
//! the log moments
//!
//! ```text
//! alpha(lambda) = ln max(E1, E2)
//!   E1 = E_{z ~ mu0} [ (mu0(z) / mu(z))^lambda ]
//!   E2 = E_{z ~ mu}  [ (mu(z)  / mu0(z))^lambda ]
//!   mu0 = N(0, sigma^2),  mu1 = N(1, sigma^2),  mu = (1-q) mu0 + q mu1
//! ```
//!
//! composed linearly over steps and converted to an (epsilon, delta) bound by
//! minimizing `(T * alpha(lambda) + ln(1/delta)) / lambda` over integer
//! orders. Both expectations are evaluated by numerical integration over
//! `z in [-20 sigma, 20 sigma + 1]`; the tails beyond contribute a vanishing
//! share of the mass for every configuration this crate calibrates. All
//! integrand arithmetic happens in log space because the raw moments overflow
//! f64 for small sigma.
//!
//! Two independent evaluation routes are provided: an adaptive Simpson rule
//! ([`log_moment`]) used everywhere, and a brute-force fixed-grid Simpson rule
//! ([`log_moment_grid`]) kept as a cross-check with no shared integration
//! code.

use crate::error::{Error, Result};

/// Largest moment order examined when converting moments to epsilon.
pub const LAMBDA_MAX: u32 = 64;

/// Sigma search bracket used by [`calibrate_sigma`].
pub const SIGMA_BRACKET: (f64, f64) = (0.3, 500.0);

/// Relative tolerance of the adaptive integration.
const INTEGRATION_REL_TOL: f64 = 1e-10;

/// Panels the integration interval is pre-split into; the maximum of the
/// log-integrand is located by scanning the same panel grid.
const SCAN_POINTS: usize = 257;

const MAX_RECURSION_DEPTH: u32 = 50;

/// Per-step log moments for orders `1..=lambda_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMomentTable {
    pub orders: Vec<u32>,
    pub values: Vec<f64>,
}

impl LogMomentTable {
    /// Compute alpha(lambda) for every order up to `lambda_max`.
    pub fn compute(q: f64, sigma: f64, lambda_max: u32) -> Result<Self> {
        let mut orders = Vec::with_capacity(lambda_max as usize);
        let mut values = Vec::with_capacity(lambda_max as usize);
        for lambda in 1..=lambda_max {
            orders.push(lambda);
            values.push(log_moment(q, sigma, lambda)?);
        }
        Ok(LogMomentTable { orders, values })
    }
}

fn check_q_sigma(q: f64, sigma: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::invalid_input(format!("sampling rate q={q} outside (0, 1]")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid_input(format!("noise multiplier sigma={sigma} must be > 0")));
    }
    Ok(())
}

/// ln(exp(a) + exp(b)) without overflow.
fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// The integration interval `[-20 sigma, 20 sigma + 1]`.
fn integration_bounds(sigma: f64) -> (f64, f64) {
    (-20.0 * sigma, 20.0 * sigma + 1.0)
}

/// Log-density of mu0 and the log ratio ln(mu(z)/mu0(z)).
struct Integrand {
    sigma: f64,
    ln_q: f64,
    ln_1mq: f64,
    q_is_one: bool,
    ln_norm: f64,
}

impl Integrand {
    fn new(q: f64, sigma: f64) -> Self {
        Integrand {
            sigma,
            ln_q: q.ln(),
            ln_1mq: if q < 1.0 { (1.0 - q).ln() } else { f64::NEG_INFINITY },
            q_is_one: q >= 1.0,
            ln_norm: -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln(),
        }
    }

    fn log_mu0(&self, z: f64) -> f64 {
        self.ln_norm - z * z / (2.0 * self.sigma * self.sigma)
    }

    fn log_ratio(&self, z: f64) -> f64 {
        let s = (2.0 * z - 1.0) / (2.0 * self.sigma * self.sigma);
        if self.q_is_one {
            s
        } else {
            log_add_exp(self.ln_1mq, self.ln_q + s)
        }
    }

    /// Log-integrand of E1: mu0 * (mu0/mu)^lambda.
    fn log_f1(&self, z: f64, lambda: f64) -> f64 {
        self.log_mu0(z) - lambda * self.log_ratio(z)
    }

    /// Log-integrand of E2: mu * (mu/mu0)^lambda.
    fn log_f2(&self, z: f64, lambda: f64) -> f64 {
        self.log_mu0(z) + (lambda + 1.0) * self.log_ratio(z)
    }
}

/// ln of the integral of `exp(log_f)` over `[a, b]`, adaptive Simpson.
fn log_integral_adaptive(
    log_f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    diagnostics: &str,
) -> Result<f64> {
    // Scan a uniform grid to locate the max of the log-integrand; shifting by
    // it keeps exp() in range. The integrand's features are no narrower than
    // sigma, which the grid resolves.
    let step = (b - a) / (SCAN_POINTS - 1) as f64;
    let mut shift = f64::NEG_INFINITY;
    let mut scan = [0.0f64; SCAN_POINTS];
    for (i, value) in scan.iter_mut().enumerate() {
        *value = log_f(a + step * i as f64);
        shift = shift.max(*value);
    }
    if !shift.is_finite() {
        return Err(Error::Numeric(format!(
            "log-moment integrand is not finite ({diagnostics})"
        )));
    }

    let g = |z: f64| (log_f(z) - shift).exp();

    // Coarse trapezoid estimate sets the absolute tolerance.
    let mut coarse = 0.0;
    for i in 0..SCAN_POINTS - 1 {
        coarse += ((scan[i] - shift).exp() + (scan[i + 1] - shift).exp()) * 0.5 * step;
    }
    let tol = (coarse * INTEGRATION_REL_TOL).max(f64::MIN_POSITIVE);

    // Adapt each scan panel independently.
    let mut total = 0.0;
    let panel_tol = tol / (SCAN_POINTS - 1) as f64;
    for i in 0..SCAN_POINTS - 1 {
        let (pa, pb) = (a + step * i as f64, a + step * (i + 1) as f64);
        let (fa, fb) = ((scan[i] - shift).exp(), (scan[i + 1] - shift).exp());
        let fm = g((pa + pb) / 2.0);
        let whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
        total += adaptive_simpson(&g, pa, pb, fa, fm, fb, whole, panel_tol, 0, diagnostics)?;
    }
    if total <= 0.0 {
        return Err(Error::Numeric(format!(
            "log-moment integral collapsed to zero ({diagnostics})"
        )));
    }
    Ok(shift + total.ln())
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson(
    g: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    diagnostics: &str,
) -> Result<f64> {
    let m = (a + b) / 2.0;
    let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_RECURSION_DEPTH {
        return Err(Error::Numeric(format!(
            "adaptive integration failed to converge on [{a}, {b}] ({diagnostics})"
        )));
    }
    Ok(
        adaptive_simpson(g, a, m, fa, flm, fm, left, tol / 2.0, depth + 1, diagnostics)?
            + adaptive_simpson(g, m, b, fm, frm, fb, right, tol / 2.0, depth + 1, diagnostics)?,
    )
}

/// alpha(lambda) for one step of the subsampled Gaussian mechanism.
pub fn log_moment(q: f64, sigma: f64, lambda: u32) -> Result<f64> {
    check_q_sigma(q, sigma)?;
    if lambda == 0 {
        return Err(Error::invalid_input("lambda must be >= 1"));
    }
    let integrand = Integrand::new(q, sigma);
    let (a, b) = integration_bounds(sigma);
    let lam = f64::from(lambda);
    let diag = format!("q={q}, sigma={sigma}, lambda={lambda}");
    let log_e1 = log_integral_adaptive(&|z| integrand.log_f1(z, lam), a, b, &diag)?;
    let log_e2 = log_integral_adaptive(&|z| integrand.log_f2(z, lam), a, b, &diag)?;
    Ok(log_e1.max(log_e2).max(0.0))
}

/// Brute-force fixed-grid Simpson evaluation of alpha(lambda).
///
/// Independent of [`log_moment`]: it carries its own density math and its own
/// two-pass (max, then sum) log-space summation. `points` must be odd and
/// >= 3; 1_000_001 reproduces the documented cross-check resolution.
pub fn log_moment_grid(q: f64, sigma: f64, lambda: u32, points: usize) -> Result<f64> {
    check_q_sigma(q, sigma)?;
    if lambda == 0 {
        return Err(Error::invalid_input("lambda must be >= 1"));
    }
    if points < 3 || points % 2 == 0 {
        return Err(Error::invalid_input("grid size must be odd and >= 3"));
    }
    let lam = f64::from(lambda);
    let lo = -20.0 * sigma;
    let hi = 20.0 * sigma + 1.0;
    let h = (hi - lo) / (points - 1) as f64;
    let two_sigma_sq = 2.0 * sigma * sigma;
    let ln_gauss_norm = -(sigma * (2.0 * std::f64::consts::PI).sqrt()).ln();

    // log mu0(z) and log mu(z) from first principles.
    let log_densities = |z: f64| -> (f64, f64) {
        let lm0 = ln_gauss_norm - z * z / two_sigma_sq;
        let lm1 = ln_gauss_norm - (z - 1.0) * (z - 1.0) / two_sigma_sq;
        let lmix = if q >= 1.0 {
            lm1
        } else {
            let a = (1.0 - q).ln() + lm0;
            let b = q.ln() + lm1;
            let (hi_t, lo_t) = if a >= b { (a, b) } else { (b, a) };
            hi_t + (lo_t - hi_t).exp().ln_1p()
        };
        (lm0, lmix)
    };
    let log_f1 = |z: f64| {
        let (lm0, lmix) = log_densities(z);
        (lam + 1.0) * lm0 - lam * lmix
    };
    let log_f2 = |z: f64| {
        let (lm0, lmix) = log_densities(z);
        (lam + 1.0) * lmix - lam * lm0
    };

    let log_simpson = |log_f: &dyn Fn(f64) -> f64| -> f64 {
        let mut max = f64::NEG_INFINITY;
        for i in 0..points {
            max = max.max(log_f(lo + h * i as f64));
        }
        let mut sum = 0.0;
        for i in 0..points {
            let weight = if i == 0 || i == points - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            sum += weight * (log_f(lo + h * i as f64) - max).exp();
        }
        max + (sum * h / 3.0).ln()
    };

    Ok(log_simpson(&log_f1).max(log_simpson(&log_f2)).max(0.0))
}

/// Tightest (epsilon, delta) bound after `steps` mechanism invocations.
///
/// `epsilon = min over lambda in 1..=64 of (T alpha(lambda) + ln(1/delta)) / lambda`.
/// With `steps == 0` this degenerates to `ln(1/delta) / 64`, the formula's
/// floor.
pub fn epsilon_for(sigma: f64, q: f64, steps: u64, delta: f64) -> Result<f64> {
    epsilon_for_orders(sigma, q, steps, delta, LAMBDA_MAX)
}

/// [`epsilon_for`] with a configurable largest order.
pub fn epsilon_for_orders(
    sigma: f64,
    q: f64,
    steps: u64,
    delta: f64,
    lambda_max: u32,
) -> Result<f64> {
    check_q_sigma(q, sigma)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid_input(format!("delta={delta} outside (0, 1)")));
    }
    if lambda_max == 0 {
        return Err(Error::invalid_input("lambda_max must be >= 1"));
    }
    let ln_inv_delta = (1.0 / delta).ln();
    let mut best = f64::INFINITY;
    for lambda in 1..=lambda_max {
        let alpha = if steps == 0 {
            0.0
        } else {
            log_moment(q, sigma, lambda)?
        };
        let eps = (steps as f64 * alpha + ln_inv_delta) / f64::from(lambda);
        best = best.min(eps);
    }
    Ok(best)
}

/// Smallest noise multiplier in [`SIGMA_BRACKET`] whose achieved epsilon lies
/// in `[0.999 * target, target]`.
pub fn calibrate_sigma(epsilon_target: f64, q: f64, steps: u64, delta: f64) -> Result<f64> {
    calibrate_sigma_orders(epsilon_target, q, steps, delta, LAMBDA_MAX)
}

/// [`calibrate_sigma`] with a configurable largest order.
pub fn calibrate_sigma_orders(
    epsilon_target: f64,
    q: f64,
    steps: u64,
    delta: f64,
    lambda_max: u32,
) -> Result<f64> {
    if !(epsilon_target > 0.0) {
        return Err(Error::invalid_input("epsilon target must be > 0"));
    }
    let (mut lo, mut hi) = SIGMA_BRACKET;
    let eps_at = |sigma: f64| epsilon_for_orders(sigma, q, steps, delta, lambda_max);

    let eps_lo = eps_at(lo)?;
    let mut eps_hi = eps_at(hi)?;
    if eps_hi > epsilon_target {
        // Even the largest bracketed noise cannot reach the target.
        return Err(Error::Calibration {
            target: epsilon_target,
            feasible_min: eps_hi,
            feasible_max: eps_lo,
        });
    }
    if eps_lo <= epsilon_target {
        // The whole bracket already meets the budget; the left edge is the
        // smallest sigma we may return.
        return Ok(lo);
    }

    for _ in 0..200 {
        if eps_hi >= 0.999 * epsilon_target {
            return Ok(hi);
        }
        let mid = 0.5 * (lo + hi);
        let eps_mid = eps_at(mid)?;
        if eps_mid <= epsilon_target {
            hi = mid;
            eps_hi = eps_mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::Numeric(format!(
        "sigma bisection did not settle for epsilon={epsilon_target}, q={q}, T={steps}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Closed form at q = 1: both moments reduce to the Gaussian moment
    /// exp(lambda (lambda + 1) / (2 sigma^2)).
    fn closed_form_q1(sigma: f64, lambda: u32) -> f64 {
        let lam = f64::from(lambda);
        lam * (lam + 1.0) / (2.0 * sigma * sigma)
    }

    #[test]
    fn matches_closed_form_at_full_sampling() {
        for sigma in [0.5, 1.0, 2.0, 4.0, 8.0] {
            for lambda in [1, 2, 4] {
                let got = log_moment(1.0, sigma, lambda).unwrap();
                let want = closed_form_q1(sigma, lambda);
                assert!(
                    (got - want).abs() <= 1e-8 * want.max(1.0),
                    "sigma={sigma} lambda={lambda}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn vanishing_sampling_rate_has_no_privacy_loss() {
        for lambda in [1, 16, 64] {
            let alpha = log_moment(1e-9, 1.0, lambda).unwrap();
            assert!(alpha >= 0.0);
            assert!(alpha < 1e-6, "lambda={lambda}: alpha={alpha}");
        }
    }

    #[test]
    fn grid_route_agrees_with_closed_form() {
        let got = log_moment_grid(1.0, 2.0, 3, 100_001).unwrap();
        let want = closed_form_q1(2.0, 3);
        assert!((got - want).abs() < 1e-8 * want);
    }

    #[test]
    fn adaptive_and_grid_routes_agree() {
        // Spot check here; the dense 50-point grid lives in the acceptance suite.
        for lambda in [1, 4, 16, 32] {
            let adaptive = log_moment(0.01, 4.0, lambda).unwrap();
            let grid = log_moment_grid(0.01, 4.0, lambda, 1_000_001).unwrap();
            assert!(
                (adaptive - grid).abs() < 1e-6,
                "lambda={lambda}: adaptive {adaptive} vs grid {grid}"
            );
        }
    }

    #[test]
    fn zero_steps_hits_the_formula_floor() {
        let delta = 1e-5;
        let eps = epsilon_for(1.0, 0.1, 0, delta).unwrap();
        let floor = (1.0 / delta).ln() / f64::from(LAMBDA_MAX);
        assert!((eps - floor).abs() < 1e-12);
    }

    #[test]
    fn epsilon_monotone_in_sigma_and_steps() {
        let deltas = 1e-5;
        let sigmas = [0.8, 1.5, 3.0, 6.0];
        let mut prev = f64::INFINITY;
        for sigma in sigmas {
            let eps = epsilon_for(sigma, 0.05, 500, deltas).unwrap();
            assert!(eps <= prev, "epsilon must not increase with sigma");
            prev = eps;
        }
        let mut prev = 0.0;
        for steps in [0u64, 10, 100, 1000, 10000] {
            let eps = epsilon_for(2.0, 0.05, steps, deltas).unwrap();
            assert!(eps >= prev, "epsilon must not decrease with steps");
            prev = eps;
        }
    }

    #[test]
    fn epsilon_monotone_in_sampling_rate() {
        let mut prev = 0.0;
        for q in [0.01, 0.05, 0.2, 0.5, 1.0] {
            let eps = epsilon_for(2.0, q, 200, 1e-5).unwrap();
            assert!(eps >= prev, "epsilon must not decrease with q");
            prev = eps;
        }
    }

    #[test]
    fn calibration_round_trip_meets_budget() {
        for target in [0.5, 2.0, 8.0] {
            let sigma = calibrate_sigma(target, 0.1, 400, 1e-5).unwrap();
            let achieved = epsilon_for(sigma, 0.1, 400, 1e-5).unwrap();
            assert!(achieved <= target, "achieved {achieved} > target {target}");
            assert!(achieved >= 0.999 * target, "achieved {achieved} below band");
        }
    }

    #[test]
    fn unreachable_target_names_feasible_range() {
        // Below the ln(1/delta)/lambda_max floor nothing is reachable.
        let floor = (1e5f64).ln() / f64::from(LAMBDA_MAX);
        let err = calibrate_sigma(floor * 0.5, 0.1, 400, 1e-5).unwrap_err();
        match err {
            Error::Calibration { target, feasible_min, .. } => {
                assert!(target < feasible_min);
            }
            other => panic!("expected calibration error, got {other:?}"),
        }
    }

    #[test]
    fn larger_silos_need_less_noise() {
        // Sentence-count ladder scaled to a tenth, smallest to largest.
        let sizes = [16u64, 21, 43, 141, 175, 666, 1085, 1137, 1269, 4221];
        let lot = 8.0;
        let mut prev = f64::INFINITY;
        for n in sizes {
            let q = (lot / n as f64).min(1.0);
            let steps = 20 * (n as f64 / lot).ceil() as u64;
            let sigma = calibrate_sigma(2.0, q, steps, 1e-5).unwrap();
            assert!(
                sigma < prev,
                "sigma must strictly decrease with silo size: n={n} sigma={sigma} prev={prev}"
            );
            prev = sigma;
        }
    }

    #[test]
    fn moment_table_is_finite_and_nonnegative() {
        let table = LogMomentTable::compute(0.02, 1.2, 32).unwrap();
        assert_eq!(table.orders.len(), 32);
        for (lambda, alpha) in table.orders.iter().zip(&table.values) {
            assert!(alpha.is_finite(), "lambda={lambda}");
            assert!(*alpha >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(log_moment(0.0, 1.0, 1).is_err());
        assert!(log_moment(1.1, 1.0, 1).is_err());
        assert!(log_moment(0.5, 0.0, 1).is_err());
        assert!(log_moment(0.5, 1.0, 0).is_err());
        assert!(epsilon_for(1.0, 0.5, 10, 0.0).is_err());
        assert!(epsilon_for(1.0, 0.5, 10, 1.0).is_err());
        assert!(log_moment_grid(0.5, 1.0, 1, 4).is_err());
    }
}
