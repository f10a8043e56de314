//! Hyperparameters and posterior state.
//!
//! The generative model couples a global scale with per-user activity
//! propensities. Conditional on the data over a `d0`-day window, the
//! posterior factorizes into
//!
//! * a gamma law for the transformed global scale `delta^{-alpha}`, with
//!   shape `n + c + 1` and rate `beta + psi_r(0, d0)`, and
//! * one beta law per observed user for that user's activity propensity.
//!
//! [`PosteriorState`] stores both pieces; per-user beta laws are collapsed
//! into buckets with multiplicities since users sharing a sufficient
//! statistic share a posterior.

use serde::{Deserialize, Serialize};

use crate::dataio::{Model, SufficientStats};
use crate::error::{Error, Result};
use crate::sample::{draw_gamma, rng_for};
use crate::specfun::psi_unchecked;

/// Model hyperparameters.
///
/// `alpha` in (0, 1) controls heavy-tailedness of user propensities, `c > 0`
/// and `beta > 0` parameterize the prior on the global scale, and `r > 0` is
/// the daily dispersion (necessarily 1 for the Bernoulli and
/// truncated-geometric models).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub alpha: f64,
    pub c: f64,
    pub beta: f64,
    pub r: f64,
}

impl HyperParams {
    /// Validates ranges: `alpha` in (0, 1), `c`, `beta`, `r` positive and finite.
    pub fn new(alpha: f64, c: f64, beta: f64, r: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        for (name, v) in [("c", c), ("beta", beta), ("r", r)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(HyperParams { alpha, c, beta, r })
    }

    /// Convenience constructor with `r = 1` for the two binary-per-day models.
    pub fn with_unit_dispersion(alpha: f64, c: f64, beta: f64) -> Result<Self> {
        HyperParams::new(alpha, c, beta, 1.0)
    }

    /// Checks model-specific constraints: `r` must equal 1 unless daily
    /// counts are negative-binomial.
    pub fn validate_for(&self, model: Model) -> Result<()> {
        if model != Model::Nb && self.r != 1.0 {
            return Err(Error::invalid(format!(
                "model '{model}' requires r = 1, got r = {}",
                self.r
            )));
        }
        Ok(())
    }

    /// Exhaustion mass `psi_r(x, y)` under these hyperparameters.
    pub(crate) fn psi(&self, x: f64, y: f64) -> f64 {
        psi_unchecked(self.alpha, self.r, x, y)
    }
}

/// One collapsed per-user beta posterior: `mult` users share `Beta(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaBucket {
    pub a: f64,
    pub b: f64,
    pub mult: u64,
}

/// Full posterior over the global scale and per-user propensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    pub model: Model,
    pub hyper: HyperParams,
    pub d0: u32,
    pub n_users: u64,
    /// Shape of the gamma law for `delta^{-alpha}`.
    pub gamma_shape: f64,
    /// Rate of the gamma law for `delta^{-alpha}`.
    pub gamma_rate: f64,
    /// Collapsed per-user beta posteriors. Empty when built from aggregate
    /// counts only.
    pub user_betas: Vec<BetaBucket>,
    /// Total observed triggers, when known.
    pub total_triggers: Option<u64>,
}

/// Builds the posterior from sufficient statistics.
pub fn build_posterior(stats: &SufficientStats, hyper: &HyperParams) -> Result<PosteriorState> {
    hyper.validate_for(stats.model)?;
    if stats.n_users > 0 && stats.d0 == 0 {
        return Err(Error::data("users observed over an empty window"));
    }
    if stats.n_users_check() != stats.n_users {
        return Err(Error::data(format!(
            "histogram holds {} users but n_users is {}",
            stats.n_users_check(),
            stats.n_users
        )));
    }
    let d0 = stats.d0 as f64;
    let mut user_betas = Vec::with_capacity(stats.per_user.len());
    for (&stat, &mult) in &stats.per_user {
        let (a, b) = match stats.model {
            Model::Be => {
                if stat == 0 || stat > stats.d0 as u64 {
                    return Err(Error::data(format!(
                        "active-day count {stat} outside 1..={}",
                        stats.d0
                    )));
                }
                (stat as f64 - hyper.alpha, d0 - stat as f64 + 1.0)
            }
            Model::Tg => {
                if stat == 0 || stat > stats.d0 as u64 {
                    return Err(Error::data(format!(
                        "first-trigger day {stat} outside 1..={}",
                        stats.d0
                    )));
                }
                (1.0 - hyper.alpha, stat as f64)
            }
            Model::Nb => {
                if stat == 0 {
                    return Err(Error::data("per-user total of zero triggers"));
                }
                (stat as f64 - hyper.alpha, hyper.r * d0 + 1.0)
            }
        };
        user_betas.push(BetaBucket { a, b, mult });
    }
    Ok(PosteriorState {
        model: stats.model,
        hyper: *hyper,
        d0: stats.d0,
        n_users: stats.n_users,
        gamma_shape: stats.n_users as f64 + hyper.c + 1.0,
        gamma_rate: hyper.beta + hyper.psi(0.0, d0),
        user_betas,
        total_triggers: stats.total_triggers,
    })
}

impl PosteriorState {
    /// Posterior from aggregate counts alone: the global-scale gamma law is
    /// exact, but per-user beta laws are unavailable.
    pub fn from_counts(model: Model, hyper: &HyperParams, d0: u32, n_users: u64) -> Result<Self> {
        hyper.validate_for(model)?;
        if n_users > 0 && d0 == 0 {
            return Err(Error::data("users observed over an empty window"));
        }
        Ok(PosteriorState {
            model,
            hyper: *hyper,
            d0,
            n_users,
            gamma_shape: n_users as f64 + hyper.c + 1.0,
            gamma_rate: hyper.beta + hyper.psi(0.0, d0 as f64),
            user_betas: Vec::new(),
            total_triggers: None,
        })
    }

    /// Posterior mean of `delta^{-alpha}`.
    pub fn mean_scale(&self) -> f64 {
        self.gamma_shape / self.gamma_rate
    }

    /// Draws of `delta^{-alpha}`, one independent stream per draw.
    pub fn sample_scale(&self, n_draws: usize, seed: u64) -> Vec<f64> {
        (0..n_draws)
            .map(|i| {
                let mut rng = rng_for(seed, i as u64);
                draw_gamma(&mut rng, self.gamma_shape, self.gamma_rate)
            })
            .collect()
    }

    /// Observed total triggers, either stored or recovered from the
    /// negative-binomial beta buckets (`sum (a + alpha) * mult`).
    pub fn observed_total(&self) -> Option<u64> {
        if self.total_triggers.is_some() {
            return self.total_triggers;
        }
        if self.model == Model::Nb && !self.user_betas.is_empty() {
            let t: f64 = self
                .user_betas
                .iter()
                .map(|b| (b.a + self.hyper.alpha) * b.mult as f64)
                .sum();
            return Some(t.round() as u64);
        }
        None
    }
}
