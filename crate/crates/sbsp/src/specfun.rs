//! Log-domain special functions shared by the model code.
//!
//! Everything downstream (posterior updates, marginal likelihoods,
//! predictive laws) is assembled from three primitives:
//!
//! * `ln Γ(x)` on the positive axis,
//! * `ln B(a, b)` for positive arguments,
//! * the trait-exhaustion mass `ψ_r(x, y)`.
//!
//! `ψ_r(x, y)` is the expected number of first-time triggers per unit of
//! process mass between day `r·x` and day `r·(x + y)`:
//!
//! ```text
//! ψ_r(x, y) = Γ(1-α) · [ Γ(r(x+y)+1)/Γ(r(x+y)+1-α) - Γ(rx+1)/Γ(rx+1-α) ]
//! ```
//!
//! The naive beta-function form `α·[B(rx+1, -α) - B(r(x+y)+1, -α)]` would
//! require Γ at a negative argument; the gamma-ratio form above is
//! algebraically identical (via `Γ(-α) = Γ(1-α)/(-α)`) and keeps every
//! Γ evaluation on the positive axis. Each ratio's log is evaluated by
//! [`log_gamma_ratio`], which pairs the Stirling expansions of numerator
//! and denominator, and the difference of ratios goes through `exp_m1`,
//! so narrow windows (`y` much smaller than `x`) keep full precision.
//!
//! All probability arithmetic in downstream modules stays in log space;
//! exponentiation happens only at documented points (CDF accumulation,
//! ψ evaluation, report output).

use crate::error::{Error, Result};

/// Lanczos coefficients for g = 7, n = 9 (Godfrey's tabulation). Relative
/// error of the reconstructed Γ is below 1e-13 over the positive axis.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Natural log of the gamma function for `x > 0`.
///
/// Uses the Lanczos approximation for `x >= 0.5` and the reflection
/// formula `Γ(x)Γ(1-x) = π / sin(πx)` below that, so Γ is never evaluated
/// at a non-positive argument.
pub fn log_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "log_gamma requires x > 0, got {x}");
    if x < 0.5 {
        // Reflection: ln Γ(x) = ln π - ln sin(πx) - ln Γ(1 - x).
        return LN_PI - (std::f64::consts::PI * x).sin().ln() - log_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &coeff) in LANCZOS.iter().enumerate().skip(1) {
        acc += coeff / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_TWO_PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Natural log of the beta function `B(a, b)` for `a, b > 0`.
pub fn log_beta(a: f64, b: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0, "log_beta requires positive arguments");
    log_gamma(a) + log_gamma(b) - log_gamma(a + b)
}

/// `B_{2n} / (2n(2n-1))`: coefficients of the Stirling series for `ln Γ`.
const STIRLING: [f64; 4] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
];

/// Natural log of `Γ(t) / Γ(t - alpha)` for `t > alpha`, `alpha ∈ (0, 1)`.
///
/// Differencing two large `ln Γ` values loses absolute precision of order
/// `eps · t · ln t`, which dominates the ratio's small log when `alpha` is
/// small or `t` is large. This evaluation instead shifts `t` above 20 with
/// the recurrence `Γ(t+1) = t·Γ(t)` and pairs the Stirling expansions of
/// numerator and denominator term by term, so every intermediate is of the
/// same order as the result and the absolute error stays near machine
/// epsilon.
pub fn log_gamma_ratio(t: f64, alpha: f64) -> f64 {
    debug_assert!(
        t > alpha && alpha > 0.0 && alpha < 1.0,
        "log_gamma_ratio requires t > alpha and alpha in (0, 1), got t={t}, alpha={alpha}"
    );
    let mut shift = 0.0;
    let mut t = t;
    while t < 20.0 {
        // ln(Γ(t)/Γ(t-α)) = ln(Γ(t+1)/Γ(t+1-α)) + ln((t-α)/t)
        shift += (-alpha / t).ln_1p();
        t += 1.0;
    }
    // Paired Stirling terms: the (t - 1/2)·ln t pieces combine into
    // α·ln t - (t - α - 1/2)·ln(1 - α/t), both of order α.
    let l = (-alpha / t).ln_1p();
    let mut tail = 0.0;
    let mut tp = t;
    let mut sp = t - alpha;
    for coeff in STIRLING {
        tail += coeff * (1.0 / tp - 1.0 / sp);
        tp *= t * t;
        sp *= (t - alpha) * (t - alpha);
    }
    alpha * t.ln() - (t - alpha - 0.5) * l - alpha + tail + shift
}

/// `ln C(k + size - 1, k)`: the (real-`size`) negative-binomial
/// combinatorial coefficient, `Γ(k+size) / (Γ(size) · k!)` in log form.
pub(crate) fn ln_nb_coeff(k: u64, size: f64) -> f64 {
    debug_assert!(size > 0.0);
    let kf = k as f64;
    log_gamma(kf + size) - log_gamma(size) - log_gamma(kf + 1.0)
}

/// Arguments of the exhaustion mass `ψ_r(x, y)`, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiArgs {
    pub alpha: f64,
    pub r: f64,
    pub x: f64,
    pub y: f64,
}

impl PsiArgs {
    /// Validates `alpha ∈ (0, 1)`, `r > 0`, `x >= 0`, `y >= 0`.
    pub fn new(alpha: f64, r: f64, x: f64, y: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!(
                "psi: alpha must lie in (0, 1), got {alpha}"
            )));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("psi: r must be positive, got {r}")));
        }
        if !(x >= 0.0 && x.is_finite()) || !(y >= 0.0 && y.is_finite()) {
            return Err(Error::invalid(format!(
                "psi: x and y must be finite and non-negative, got x={x}, y={y}"
            )));
        }
        Ok(PsiArgs { alpha, r, x, y })
    }
}

/// Exhaustion mass `ψ_r(x, y)` in the gamma-ratio form.
///
/// Strictly increasing in `y`, strictly decreasing in `x` (for `y > 0`),
/// exactly `0` when `y = 0`, and additive over abutting windows:
/// `ψ_r(x, y) + ψ_r(x + y, z) = ψ_r(x, y + z)`.
pub fn psi(args: &PsiArgs) -> f64 {
    psi_unchecked(args.alpha, args.r, args.x, args.y)
}

/// Checked convenience wrapper over [`psi`].
pub fn psi_checked(alpha: f64, r: f64, x: f64, y: f64) -> Result<f64> {
    PsiArgs::new(alpha, r, x, y).map(|a| psi(&a))
}

pub(crate) fn psi_unchecked(alpha: f64, r: f64, x: f64, y: f64) -> f64 {
    if y == 0.0 {
        return 0.0;
    }
    // ln of Γ(z+1)/Γ(z+1-α), an increasing function of z >= 0.
    let lo = log_gamma_ratio(r * x + 1.0, alpha);
    let hi = log_gamma_ratio(r * (x + y) + 1.0, alpha);
    // ψ = Γ(1-α) · e^lo · (e^{hi-lo} - 1), with exp_m1 guarding the
    // cancellation when the window is narrow relative to its start.
    (log_gamma(1.0 - alpha) + lo).exp() * (hi - lo).exp_m1()
}

/// Truncated-geometric first-trigger mass on `{0, 1, ..., d}`.
///
/// `y = 0` encodes "never triggered within the `d`-day window" and carries
/// the complementary mass `(1-θ)^d`; `y ∈ {1..d}` has mass `(1-θ)^{y-1}·θ`;
/// anything beyond `d` has mass zero. The masses sum to one for every
/// `θ ∈ [0, 1]`.
pub fn trunc_geom_pmf(theta: f64, y: u32, d: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::invalid(format!(
            "trunc_geom_pmf: theta must lie in [0, 1], got {theta}"
        )));
    }
    if d == 0 {
        return Err(Error::invalid("trunc_geom_pmf: window length d must be >= 1"));
    }
    Ok(if y == 0 {
        (1.0 - theta).powi(d as i32)
    } else if y <= d {
        (1.0 - theta).powi(y as i32 - 1) * theta
    } else {
        0.0
    })
}
