//! Closed-form predictive laws for a follow-up window.
//!
//! Given a fitted posterior over a `d0`-day pilot, these functions answer,
//! without any forward simulation:
//!
//! * how many never-before-seen users will first trigger within the next
//!   `d1` days ([`unseen_users_law`], a negative binomial);
//! * at what rate new users arrive on each individual future day
//!   ([`per_day_rate`], conditionally Poisson given the global scale);
//! * how many new users will trigger exactly `j` times in the window
//!   ([`retrigger_class_law`], one negative binomial per class `j`);
//! * how much future activity the already-seen users will generate
//!   ([`observed_future_sum_law`]);
//! * the combined total-trigger point estimate ([`total_triggers_estimate`]).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Model;
use crate::error::{Error, Result};
use crate::posterior::{BetaBucket, PosteriorState};
use crate::sample::{draw_beta, draw_negbin};
use crate::specfun::{ln_nb_coeff, log_beta};

/// Negative binomial with real `size` and success probability `p`:
/// `pmf(k) = C(k+size-1, k) p^k (1-p)^size`, mean `size*p/(1-p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinLaw {
    pub size: f64,
    pub p: f64,
}

impl NegBinLaw {
    pub fn mean(&self) -> f64 {
        self.size * self.p / (1.0 - self.p)
    }

    pub fn variance(&self) -> f64 {
        self.size * self.p / ((1.0 - self.p) * (1.0 - self.p))
    }

    /// Log probability mass at `k`.
    pub fn ln_pmf(&self, k: u64) -> f64 {
        if self.p <= 0.0 {
            return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
        }
        ln_nb_coeff(k, self.size) + k as f64 * self.p.ln() + self.size * (1.0 - self.p).ln()
    }

    /// Upper tail probability `P(X >= k)`, by direct summation.
    pub fn sf(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        let mut cdf = 0.0;
        let mut pmf = (self.size * (1.0 - self.p).ln()).exp();
        for i in 0..k {
            cdf += pmf;
            pmf *= self.p * (i as f64 + self.size) / (i as f64 + 1.0);
        }
        (1.0 - cdf).max(0.0)
    }

    /// Equal-tailed interval: the smallest `lo` with `CDF(lo) > (1-level)/2`
    /// and the smallest `hi` with `CDF(hi) >= 1 - (1-level)/2`, so that
    /// `[lo, hi]` carries probability at least `level`.
    pub fn interval(&self, level: f64) -> Result<(u64, u64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!(
                "interval level must lie in (0, 1), got {level}"
            )));
        }
        if self.p <= 0.0 {
            return Ok((0, 0));
        }
        let tail = (1.0 - level) / 2.0;
        // pmf recursion in linear space from the log-space anchor at zero.
        let mut pmf = (self.size * (1.0 - self.p).ln()).exp();
        let mut cdf = pmf;
        let mut k = 0u64;
        let mut lo: Option<u64> = if cdf > tail { Some(0) } else { None };
        let cap = (self.mean() + 12.0 * self.variance().sqrt() + 1e6) as u64;
        while cdf < 1.0 - tail {
            if k > cap {
                return Err(Error::numeric(format!(
                    "interval summation did not converge (size={}, p={})",
                    self.size, self.p
                )));
            }
            pmf *= self.p * (k as f64 + self.size) / (k as f64 + 1.0);
            k += 1;
            cdf += pmf;
            if lo.is_none() && cdf > tail {
                lo = Some(k);
            }
        }
        Ok((lo.unwrap_or(k), k))
    }

    /// One draw via the gamma-Poisson mixture.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        draw_negbin(rng, self.size, self.p)
    }
}

/// Law of the number of unseen users first triggering within the next `d1`
/// days: negative binomial with size `n + c + 1` and success probability
/// `psi_r(d0, d1) / (beta + psi_r(0, d0 + d1))`.
pub fn unseen_users_law(post: &PosteriorState, d1: u32) -> NegBinLaw {
    let increment = post.hyper.psi(post.d0 as f64, d1 as f64);
    // beta + psi(0, d0 + d1) = gamma_rate + increment by window additivity.
    NegBinLaw {
        size: post.gamma_shape,
        p: increment / (post.gamma_rate + increment),
    }
}

/// Posterior expected number of unseen users over the next `d1` days.
pub fn expected_unseen(post: &PosteriorState, d1: u32) -> f64 {
    unseen_users_law(post, d1).mean()
}

/// Equal-tailed credible interval for the unseen-user count.
pub fn unseen_interval(post: &PosteriorState, d1: u32, level: f64) -> Result<(u64, u64)> {
    unseen_users_law(post, d1).interval(level)
}

/// Conditional Poisson rate of first-time triggers on absolute day `day`
/// (`day > d0`), given a draw `scale` of the transformed largest jump.
///
/// The rate is `scale * psi_r(day - 1, 1)`; for the unit-dispersion models
/// this is exactly `alpha * scale * B(1 - alpha, day)`, and summing it over
/// `day = d0+1 ..= d0+d1` telescopes to `scale * psi_r(d0, d1)`, the
/// conditional mean behind [`unseen_users_law`].
pub fn per_day_rate(post: &PosteriorState, day: u32, scale: f64) -> Result<f64> {
    if day <= post.d0 {
        return Err(Error::invalid(format!(
            "per-day rate is defined for future days only (day {day} <= d0 {})",
            post.d0
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!(
            "scale draw must be positive and finite, got {scale}"
        )));
    }
    Ok(scale * post.hyper.psi(day as f64 - 1.0, 1.0))
}

/// Law of the number of unseen users that trigger exactly `j` times within
/// the `d1`-day window, together with its intensity weight `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetriggerClassLaw {
    pub j: u64,
    pub rho: f64,
    pub law: NegBinLaw,
}

/// Per-class law for unseen users under negative-binomial daily counts:
/// `rho_j = C(j + r*d1 - 1, j) * alpha * B(r(d0+d1) + 1, j - alpha)` and the
/// count is NegBin(size `n + c + 1`, `p = rho_j / (beta + psi_r(0, d0) + rho_j)`).
///
/// The coefficient's `r*d1 - 1` reflects that `d1` days of NegBin(`r`)
/// counts compound to a NegBin(`r*d1`) total.
pub fn retrigger_class_law(post: &PosteriorState, d1: u32, j: u64) -> Result<RetriggerClassLaw> {
    if post.model != Model::Nb {
        return Err(Error::invalid(
            "re-trigger class laws require the negative-binomial model",
        ));
    }
    if d1 == 0 || j == 0 {
        return Err(Error::invalid(format!(
            "re-trigger class laws need d1 >= 1 and j >= 1, got d1={d1}, j={j}"
        )));
    }
    let rho = ln_rho(post, d1, j).exp();
    Ok(RetriggerClassLaw {
        j,
        rho,
        law: NegBinLaw {
            size: post.gamma_shape,
            p: rho / (post.gamma_rate + rho),
        },
    })
}

fn ln_rho(post: &PosteriorState, d1: u32, j: u64) -> f64 {
    let h = &post.hyper;
    let (d0, d1) = (post.d0 as f64, d1 as f64);
    ln_nb_coeff(j, h.r * d1)
        + h.alpha.ln()
        + log_beta(h.r * (d0 + d1) + 1.0, j as f64 - h.alpha)
}

/// Distribution of the total follow-up activity of already-seen users:
/// a sum of independent NegBin(`r*d1`, theta) counts, one per user, with
/// theta drawn from that user's beta posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedFutureLaw {
    pub mean: f64,
    r: f64,
    d1: u32,
    buckets: Vec<BetaBucket>,
}

impl ObservedFutureLaw {
    /// One draw of the summed future trigger count.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        if self.d1 == 0 {
            return 0;
        }
        let size = self.r * self.d1 as f64;
        let mut total = 0u64;
        for bucket in &self.buckets {
            for _ in 0..bucket.mult {
                let theta = draw_beta(rng, bucket.a, bucket.b);
                if theta < 1.0 {
                    total += draw_negbin(rng, size, theta);
                } else {
                    // Zero posterior mass in theory; guard the degenerate draw.
                    total += u32::MAX as u64;
                }
            }
        }
        total
    }
}

/// Future activity of observed users over `d1` days. The mean is
/// `sum_n r*d1*(m_n - alpha)/(r*d0) = (d1/d0)(T - N*alpha)`.
pub fn observed_future_sum_law(post: &PosteriorState, d1: u32) -> Result<ObservedFutureLaw> {
    if post.model != Model::Nb {
        return Err(Error::invalid(
            "observed-user activity forecasting requires the negative-binomial model",
        ));
    }
    if post.n_users > 0 && post.user_betas.is_empty() {
        return Err(Error::data(
            "observed-user activity forecasting requires per-user totals, not aggregate counts",
        ));
    }
    let rd1 = post.hyper.r * d1 as f64;
    let mean: f64 = post
        .user_betas
        .iter()
        .map(|b| b.mult as f64 * rd1 * b.a / (b.b - 1.0))
        .sum();
    Ok(ObservedFutureLaw {
        mean,
        r: post.hyper.r,
        d1,
        buckets: post.user_betas.clone(),
    })
}

/// Point estimate of total follow-up triggers: expected triggers from
/// unseen users (summed over re-trigger classes `j`, truncated when the
/// increment falls below `tail_tol` of the running sum) plus the mean
/// future activity of observed users.
pub fn total_triggers_estimate(post: &PosteriorState, d1: u32, tail_tol: f64) -> Result<f64> {
    if post.model != Model::Nb {
        return Err(Error::invalid(
            "total-trigger estimation requires the negative-binomial model",
        ));
    }
    if !(tail_tol > 0.0) {
        return Err(Error::invalid(format!(
            "tail tolerance must be positive, got {tail_tol}"
        )));
    }
    if d1 == 0 {
        return Ok(0.0);
    }
    // E[sum_j j * U_j] = size * sum_j j * rho_j / gamma_rate: the odds
    // p_j/(1-p_j) reduce to rho_j / gamma_rate.
    let mut acc = 0.0;
    let mut j = 1u64;
    loop {
        let term = j as f64 * ln_rho(post, d1, j).exp();
        acc += term;
        if (j >= 8 && term < tail_tol * acc) || term == 0.0 {
            break;
        }
        j += 1;
        if j > 10_000_000 {
            return Err(Error::numeric(
                "re-trigger class sum did not converge within 1e7 terms",
            ));
        }
    }
    let unseen_part = post.gamma_shape * acc / post.gamma_rate;
    let observed_part = observed_future_sum_law(post, d1)?.mean;
    Ok(unseen_part + observed_part)
}

/// New-user block of a forecast report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewUsersBlock {
    pub mean: f64,
    pub lo: u64,
    pub hi: u64,
    pub size: f64,
    pub p: f64,
}

/// Total-trigger block of a forecast report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalTriggersBlock {
    pub mean: f64,
}

/// Machine-readable forecast summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport {
    #[serde(rename = "D0")]
    pub d0: u32,
    #[serde(rename = "N")]
    pub n_users: u64,
    #[serde(rename = "D1")]
    pub d1: u32,
    pub new_users: NewUsersBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_triggers: Option<TotalTriggersBlock>,
    pub level: f64,
}

/// Assembles the forecast report: new-user law with an equal-tailed
/// interval, plus the total-trigger estimate when the posterior carries
/// per-user totals under the negative-binomial model.
pub fn forecast_report(post: &PosteriorState, d1: u32, level: f64) -> Result<ForecastReport> {
    let law = unseen_users_law(post, d1);
    let (lo, hi) = law.interval(level)?;
    let total_triggers = if post.model == Model::Nb
        && (post.n_users == 0 || !post.user_betas.is_empty())
    {
        Some(TotalTriggersBlock {
            mean: total_triggers_estimate(post, d1, 1e-10)?,
        })
    } else {
        None
    };
    Ok(ForecastReport {
        d0: post.d0,
        n_users: post.n_users,
        d1,
        new_users: NewUsersBlock {
            mean: law.mean(),
            lo,
            hi,
            size: law.size,
            p: law.p,
        },
        total_triggers,
        level,
    })
}
