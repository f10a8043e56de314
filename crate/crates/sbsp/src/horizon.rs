//! Days-to-target estimation: how long until the audience reaches a given
//! number of distinct users.
//!
//! Three complementary answers are provided:
//!
//! * [`point_estimate_dm`]: the first follow-up day on which the expected
//!   audience size reaches the target;
//! * [`sample_dm`] with [`posterior_interval_dm`]: exact posterior draws of
//!   the day the target is hit, summarized by quantiles, with explicit
//!   censoring when a draw never reaches the target inside the simulation
//!   horizon;
//! * [`global_band`] with [`invert_band`]: a joint credible band for the
//!   whole audience-growth trajectory, sliced at the target level.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forecast::unseen_users_law;
use crate::posterior::PosteriorState;
use crate::sample::{draw_gamma, draw_poisson, rng_for, DiscreteCdf};
use crate::specfun::log_gamma;

/// Upper simulation horizon, counted in follow-up days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchHorizon {
    /// Three times the point estimate of the target day.
    Auto,
    /// A fixed number of follow-up days.
    Fixed(u32),
}

/// Settings for the sampling-based day-to-target procedures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonConfig {
    /// Target number of distinct users M.
    pub target_users: u64,
    pub horizon: SearchHorizon,
    /// Posterior draws for [`sample_dm`] (default 1000).
    pub draws: usize,
    /// Trajectories for [`global_band`] (default 1000).
    pub trajectories: usize,
    /// Fraction of lowest-density trajectories discarded when forming the
    /// band (default 0.05).
    pub epsilon: f64,
    pub seed: u64,
}

impl HorizonConfig {
    pub fn new(target_users: u64) -> Self {
        HorizonConfig {
            target_users,
            horizon: SearchHorizon::Auto,
            draws: 1000,
            trajectories: 1000,
            epsilon: 0.05,
            seed: 0,
        }
    }

    fn validate(&self, post: &PosteriorState) -> Result<()> {
        if self.target_users <= post.n_users {
            return Err(Error::invalid(format!(
                "target of {} users already met by the {} observed",
                self.target_users, post.n_users
            )));
        }
        if self.draws < 100 || self.trajectories < 100 {
            return Err(Error::invalid(
                "at least 100 draws and 100 trajectories are required",
            ));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::invalid(format!(
                "trim fraction must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if let SearchHorizon::Fixed(d) = self.horizon {
            if d == 0 {
                return Err(Error::invalid("fixed horizon must be >= 1 day"));
            }
        }
        Ok(())
    }
}

const DAY_CAP: u64 = 10_000_000;

fn expected_reaches(post: &PosteriorState, d: u64, need: f64) -> f64 {
    let scale = post.mean_scale();
    scale * post.hyper.psi(post.d0 as f64, d as f64) - need
}

/// First follow-up day on which the expected number of distinct users
/// reaches `target`. Returns 0 when the target is already met.
///
/// The search doubles the horizon until the expectation crosses the target
/// and then bisects; it fails with a saturation error if the target is not
/// expected within ten million days.
pub fn point_estimate_dm(post: &PosteriorState, target: u64) -> Result<u32> {
    if target <= post.n_users {
        return Ok(0);
    }
    let need = (target - post.n_users) as f64;
    let mut hi = 1u64;
    while expected_reaches(post, hi, need) < 0.0 {
        if hi >= DAY_CAP {
            return Err(Error::saturation(format!(
                "expected audience does not reach {target} users within {DAY_CAP} days"
            )));
        }
        hi = (hi * 2).min(DAY_CAP);
    }
    let mut lo = hi / 2; // expectation is below the target here (or lo = 0)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if expected_reaches(post, mid, need) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi as u32)
}

fn resolve_horizon(post: &PosteriorState, cfg: &HorizonConfig) -> Result<u32> {
    match cfg.horizon {
        SearchHorizon::Fixed(d) => Ok(d),
        SearchHorizon::Auto => {
            let point = point_estimate_dm(post, cfg.target_users)?;
            Ok(point.saturating_mul(3).max(3))
        }
    }
}

/// Posterior draws of the day a user target is reached.
#[derive(Debug, Clone, PartialEq)]
pub struct DmSamples {
    /// End of the observation window; draws count days after it.
    pub d0: u32,
    /// Simulation horizon in follow-up days.
    pub d_up: u32,
    pub target_users: u64,
    pub n_users: u64,
    /// Per-draw day (absolute, in `d0+1 ..= d0+d_up`) the target was hit;
    /// `None` when the target was not reached within the horizon.
    pub draws: Vec<Option<u32>>,
}

impl DmSamples {
    pub fn censor_fraction(&self) -> f64 {
        let censored = self.draws.iter().filter(|d| d.is_none()).count();
        censored as f64 / self.draws.len() as f64
    }
}

/// Draws from the posterior distribution of the target day.
///
/// Each draw samples the total number of new users over the horizon from
/// its posterior predictive law and then scatters them over days with
/// probabilities proportional to the per-day arrival mass; the draw's
/// value is the day of the `(M - N)`-th arrival.
pub fn sample_dm(post: &PosteriorState, cfg: &HorizonConfig) -> Result<DmSamples> {
    cfg.validate(post)?;
    let d_up = resolve_horizon(post, cfg)?;
    let need = cfg.target_users - post.n_users;
    let law = unseen_users_law(post, d_up);
    let weights: Vec<f64> = (1..=d_up)
        .map(|y| post.hyper.psi((post.d0 + y - 1) as f64, 1.0))
        .collect();
    let day_cdf = DiscreteCdf::new(&weights);

    let mut draws = Vec::with_capacity(cfg.draws);
    for k in 0..cfg.draws {
        let mut rng = rng_for(cfg.seed, k as u64);
        let total = law.sample(&mut rng);
        if total < need {
            draws.push(None);
            continue;
        }
        let mut per_day = vec![0u64; d_up as usize];
        for _ in 0..total {
            per_day[day_cdf.sample(&mut rng)] += 1;
        }
        let mut acc = 0u64;
        let mut hit = None;
        for (i, &n) in per_day.iter().enumerate() {
            acc += n;
            if acc >= need {
                hit = Some(post.d0 + i as u32 + 1);
                break;
            }
        }
        draws.push(hit);
    }
    Ok(DmSamples {
        d0: post.d0,
        d_up,
        target_users: cfg.target_users,
        n_users: post.n_users,
        draws,
    })
}

/// Equal-tailed credible interval for the target day, in absolute days.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DmInterval {
    pub lo: u32,
    pub hi: u32,
    /// True when censoring makes the upper endpoint a lower bound only.
    pub hi_open: bool,
    pub censor_fraction: f64,
}

/// Summarizes [`DmSamples`] by nearest-rank quantiles over the uncensored
/// draws. When the censored fraction exceeds the upper tail mass, the
/// upper endpoint is reported as the simulation horizon and flagged open.
pub fn posterior_interval_dm(samples: &DmSamples, level: f64) -> Result<DmInterval> {
    if !(0.0 < level && level < 1.0) {
        return Err(Error::invalid(format!(
            "interval level must lie in (0, 1), got {level}"
        )));
    }
    if samples.draws.is_empty() {
        return Err(Error::invalid("no draws to summarize"));
    }
    let censor_fraction = samples.censor_fraction();
    let horizon_end = samples.d0 + samples.d_up;
    let mut kept: Vec<u32> = samples.draws.iter().flatten().copied().collect();
    if kept.is_empty() {
        return Ok(DmInterval {
            lo: horizon_end,
            hi: horizon_end,
            hi_open: true,
            censor_fraction,
        });
    }
    kept.sort_unstable();
    let k = kept.len();
    let tail = (1.0 - level) / 2.0;
    let rank = |q: f64| -> usize {
        let r = (q * k as f64).ceil() as usize;
        r.clamp(1, k) - 1
    };
    let lo = kept[rank(tail)];
    let (hi, hi_open) = if censor_fraction > tail {
        (horizon_end, true)
    } else {
        (kept[rank(1.0 - tail)], false)
    };
    Ok(DmInterval {
        lo,
        hi,
        hi_open,
        censor_fraction,
    })
}

/// Joint credible band for the cumulative distinct-user trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBand {
    /// Users already observed; trajectories start from this count.
    pub n_base: u64,
    /// Absolute days `d0+1 ..= d0+d_up`.
    pub days: Vec<u32>,
    pub lo: Vec<u64>,
    pub hi: Vec<u64>,
}

/// Builds a joint band by simulating audience trajectories and keeping the
/// highest-density share.
///
/// Each trajectory draws the latent scale from its gamma posterior and
/// per-day new-user counts from Poisson laws with the matching arrival
/// masses. Trajectories are ranked by their joint log density (ties broken
/// by draw index) and the lowest `epsilon` fraction is discarded; the band
/// is the pointwise envelope of the survivors' cumulative counts.
pub fn global_band(post: &PosteriorState, cfg: &HorizonConfig) -> Result<CredibleBand> {
    cfg.validate(post)?;
    let d_up = resolve_horizon(post, cfg)?;
    let masses: Vec<f64> = (1..=d_up)
        .map(|y| post.hyper.psi((post.d0 + y - 1) as f64, 1.0))
        .collect();
    let shape = post.gamma_shape;
    let rate = post.gamma_rate;
    let ln_gamma_norm = shape * rate.ln() - log_gamma(shape);

    let q = cfg.trajectories;
    let mut scored: Vec<(f64, usize, Vec<u64>)> = Vec::with_capacity(q);
    for idx in 0..q {
        let mut rng = rng_for(cfg.seed, idx as u64);
        let w = draw_gamma(&mut rng, shape, rate);
        let mut score = ln_gamma_norm + (shape - 1.0) * w.ln() - rate * w;
        let mut counts = Vec::with_capacity(d_up as usize);
        for &mass in &masses {
            let lambda = w * mass;
            let k = draw_poisson(&mut rng, lambda);
            score += k as f64 * lambda.ln() - lambda - log_gamma(k as f64 + 1.0);
            counts.push(k);
        }
        scored.push((score, idx, counts));
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("trajectory scores are comparable")
            .then(a.1.cmp(&b.1))
    });
    let keep = (((1.0 - cfg.epsilon) * q as f64).ceil() as usize).clamp(1, q);
    scored.truncate(keep);

    let days: Vec<u32> = (1..=d_up).map(|y| post.d0 + y).collect();
    let mut lo = vec![u64::MAX; d_up as usize];
    let mut hi = vec![0u64; d_up as usize];
    for (_, _, counts) in &scored {
        let mut acc = post.n_users;
        for (i, &k) in counts.iter().enumerate() {
            acc += k;
            lo[i] = lo[i].min(acc);
            hi[i] = hi[i].max(acc);
        }
    }
    Ok(CredibleBand {
        n_base: post.n_users,
        days,
        lo,
        hi,
    })
}

/// Day range obtained by slicing a credible band at a target user count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BandInterval {
    pub lo_day: u32,
    pub hi_day: u32,
    /// True when even the band's upper envelope never reaches the target.
    pub lo_open: bool,
    /// True when the band's lower envelope never reaches the target.
    pub hi_open: bool,
}

/// Slices a band horizontally at `target` users: the earliest day the
/// upper envelope reaches the target and the earliest day the lower
/// envelope does. Endpoints that never reach the target are reported as
/// the last banded day and flagged open.
pub fn invert_band(band: &CredibleBand, target: u64) -> BandInterval {
    let window_end = band.days.first().map_or(0, |d| d - 1);
    if target <= band.n_base {
        return BandInterval {
            lo_day: window_end,
            hi_day: window_end,
            lo_open: false,
            hi_open: false,
        };
    }
    let last = *band.days.last().expect("band covers at least one day");
    let first_at = |vals: &[u64]| -> Option<u32> {
        vals.iter()
            .position(|&v| v >= target)
            .map(|i| band.days[i])
    };
    let lo_hit = first_at(&band.hi);
    let hi_hit = first_at(&band.lo);
    BandInterval {
        lo_day: lo_hit.unwrap_or(last),
        hi_day: hi_hit.unwrap_or(last),
        lo_open: lo_hit.is_none(),
        hi_open: hi_hit.is_none(),
    }
}
