//! Synthetic data generators.
//!
//! [`simulate_be`], [`simulate_tg`], and [`simulate_nb`] draw pilot panels
//! from the three engagement models by running their exact day-by-day
//! predictive laws, so the output follows the same joint distribution the
//! inference code assumes. [`simulate_followup`] extends an inferred
//! posterior into future days. [`simulate_dg2`] and [`simulate_zipf`]
//! generate data from laws outside the model family, for stress testing.

use rand::Rng;

use crate::dataio::{ActivityPanel, FirstTriggerSeries, Model, UserActivity};
use crate::error::{Error, Result};
use crate::posterior::{HyperParams, PosteriorState};
use crate::sample::{draw_beta, draw_negbin, draw_trunc_poisson, rng_for, DiscreteCdf};
use crate::specfun::{ln_nb_coeff, log_beta};

/// Largest per-day trigger count a simulator will emit. The count laws are
/// heavy tailed, so draws beyond this point are clamped.
const COUNT_CAP: u64 = 10_000_000;

fn user_id(index: usize) -> String {
    format!("u{:06}", index + 1)
}

fn panel_from_counts(d0: u32, counts: Vec<Vec<u32>>) -> ActivityPanel {
    let users = counts
        .into_iter()
        .enumerate()
        .map(|(i, counts)| UserActivity {
            id: user_id(i),
            counts,
        })
        .collect();
    ActivityPanel { d0, users }
}

/// One simulated day of the binary-engagement process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeStep {
    /// Day just simulated (1-based).
    pub day: u32,
    /// Indices of previously seen users active on this day.
    pub triggered: Vec<u64>,
    /// Users appearing for the first time on this day.
    pub new_users: u64,
}

/// Incremental simulator for the binary-engagement model.
///
/// Each day, every seen user triggers with its posterior-predictive
/// probability and a fresh batch of new users arrives with the matching
/// predictive count law, so a full run is an exact draw from the model.
#[derive(Debug, Clone)]
pub struct BeProcess {
    hyper: HyperParams,
    day: u32,
    active_days: Vec<u32>,
}

impl BeProcess {
    pub fn new(hyper: &HyperParams) -> Result<Self> {
        hyper.validate_for(Model::Be)?;
        Ok(BeProcess {
            hyper: *hyper,
            day: 0,
            active_days: Vec::new(),
        })
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn n_users(&self) -> u64 {
        self.active_days.len() as u64
    }

    /// Advances the process by one day.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> BeStep {
        let t = self.day + 1;
        let h = &self.hyper;
        let mut triggered = Vec::new();
        for (i, m) in self.active_days.iter_mut().enumerate() {
            let p = (*m as f64 - h.alpha) / (t as f64 - h.alpha);
            if rng.gen::<f64>() < p {
                *m += 1;
                triggered.push(i as u64);
            }
        }
        let size = self.active_days.len() as f64 + h.c + 1.0;
        let p_new = h.psi((t - 1) as f64, 1.0) / (h.beta + h.psi(0.0, t as f64));
        let new_users = draw_negbin(rng, size, p_new);
        for _ in 0..new_users {
            self.active_days.push(1);
        }
        self.day = t;
        BeStep {
            day: t,
            triggered,
            new_users,
        }
    }
}

/// Draws a pilot panel from the binary-engagement model.
pub fn simulate_be(hyper: &HyperParams, days: u32, seed: u64) -> Result<ActivityPanel> {
    if days == 0 {
        return Err(Error::invalid("simulation needs at least one day"));
    }
    let mut process = BeProcess::new(hyper)?;
    let mut rng = rng_for(seed, 0);
    let mut counts: Vec<Vec<u32>> = Vec::new();
    for day in 1..=days {
        let step = process.step(&mut rng);
        for &i in &step.triggered {
            counts[i as usize][day as usize - 1] = 1;
        }
        for _ in 0..step.new_users {
            let mut row = vec![0u32; days as usize];
            row[day as usize - 1] = 1;
            counts.push(row);
        }
    }
    Ok(panel_from_counts(days, counts))
}

/// Arrival days (1-based, unsorted) for a first-trigger window.
fn draw_tg_arrivals<R: Rng + ?Sized>(rng: &mut R, hyper: &HyperParams, days: u32) -> Vec<u32> {
    let window_mass = hyper.psi(0.0, days as f64);
    let p = window_mass / (hyper.beta + window_mass);
    let total = draw_negbin(rng, hyper.c + 1.0, p);
    let weights: Vec<f64> = (1..=days)
        .map(|y| hyper.psi((y - 1) as f64, 1.0))
        .collect();
    let cdf = DiscreteCdf::new(&weights);
    (0..total).map(|_| cdf.sample(rng) as u32 + 1).collect()
}

/// Draws daily first-trigger counts from the first-trigger model.
pub fn simulate_tg(hyper: &HyperParams, days: u32, seed: u64) -> Result<FirstTriggerSeries> {
    if days == 0 {
        return Err(Error::invalid("simulation needs at least one day"));
    }
    hyper.validate_for(Model::Tg)?;
    let mut rng = rng_for(seed, 0);
    let mut new_users_per_day = vec![0u64; days as usize];
    for day in draw_tg_arrivals(&mut rng, hyper, days) {
        new_users_per_day[day as usize - 1] += 1;
    }
    Ok(FirstTriggerSeries {
        new_users_per_day,
        total_triggers_per_day: None,
    })
}

/// Draws the trigger count of a user whose first positive count occurs on
/// the given absolute day. The law has mass proportional to
/// `C(a+r-1, a) * B(a - alpha, r*day + 1)` over counts `a >= 1`.
fn draw_arrival_count<R: Rng + ?Sized>(rng: &mut R, hyper: &HyperParams, day: u32) -> u64 {
    let normalizer = hyper.psi((day - 1) as f64, 1.0) / hyper.alpha;
    let target = rng.gen::<f64>() * normalizer;
    let b = hyper.r * day as f64 + 1.0;
    let mut mass = (ln_nb_coeff(1, hyper.r) + log_beta(1.0 - hyper.alpha, b)).exp();
    let mut acc = mass;
    let mut a = 1u64;
    while acc < target && a < COUNT_CAP {
        // mass(a+1)/mass(a) from the coefficient and beta-function
        // recurrences, so each lattice step is constant work.
        let af = a as f64;
        mass *= (af + hyper.r) / (af + 1.0) * (af - hyper.alpha) / (af - hyper.alpha + b);
        acc += mass;
        a += 1;
    }
    a
}

/// Draws a pilot panel from the dispersed-count model.
pub fn simulate_nb(hyper: &HyperParams, days: u32, seed: u64) -> Result<ActivityPanel> {
    if days == 0 {
        return Err(Error::invalid("simulation needs at least one day"));
    }
    hyper.validate_for(Model::Nb)?;
    let mut rng = rng_for(seed, 0);
    let mut counts: Vec<Vec<u32>> = Vec::new();
    let mut totals: Vec<u64> = Vec::new();
    for t in 1..=days {
        let prior_days = (t - 1) as f64;
        for (row, m) in counts.iter_mut().zip(totals.iter_mut()) {
            let theta = draw_beta(&mut rng, *m as f64 - hyper.alpha, hyper.r * prior_days + 1.0);
            let k = draw_negbin(&mut rng, hyper.r, theta).min(COUNT_CAP);
            row[t as usize - 1] = k as u32;
            *m += k;
        }
        let size = counts.len() as f64 + hyper.c + 1.0;
        let p_new = hyper.psi(prior_days, 1.0) / (hyper.beta + hyper.psi(0.0, t as f64));
        let arrivals = draw_negbin(&mut rng, size, p_new);
        for _ in 0..arrivals {
            let a = draw_arrival_count(&mut rng, hyper, t);
            let mut row = vec![0u32; days as usize];
            row[t as usize - 1] = a as u32;
            counts.push(row);
            totals.push(a);
        }
    }
    Ok(panel_from_counts(days, counts))
}

/// A user first seen during a follow-up simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewArrival {
    /// Follow-up day (1-based) of the first trigger.
    pub day: u32,
    /// Counts over the whole follow-up window.
    pub counts: Vec<u32>,
}

/// Follow-up activity simulated from a posterior.
///
/// Seen users are kept even when they never trigger again, because their
/// silence carries information; convert with [`FollowupPanel::to_panel`]
/// when only active users are wanted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FollowupPanel {
    pub d1: u32,
    /// One row per previously seen user, in posterior bucket order.
    pub seen_counts: Vec<Vec<u32>>,
    pub new_users: Vec<NewArrival>,
}

impl FollowupPanel {
    pub fn n_new(&self) -> u64 {
        self.new_users.len() as u64
    }

    pub fn total_triggers(&self) -> u64 {
        let seen: u64 = self
            .seen_counts
            .iter()
            .flat_map(|row| row.iter())
            .map(|&k| k as u64)
            .sum();
        let new: u64 = self
            .new_users
            .iter()
            .flat_map(|a| a.counts.iter())
            .map(|&k| k as u64)
            .sum();
        seen + new
    }

    /// Reshapes the follow-up window as a stand-alone panel of its active
    /// users.
    pub fn to_panel(&self) -> ActivityPanel {
        let mut users = Vec::new();
        for (i, row) in self.seen_counts.iter().enumerate() {
            if row.iter().any(|&k| k > 0) {
                users.push(UserActivity {
                    id: format!("s{:06}", i + 1),
                    counts: row.clone(),
                });
            }
        }
        for (i, arrival) in self.new_users.iter().enumerate() {
            users.push(UserActivity {
                id: format!("n{:06}", i + 1),
                counts: arrival.counts.clone(),
            });
        }
        ActivityPanel {
            d0: self.d1,
            users,
        }
    }
}

/// Simulates follow-up days from a fitted posterior.
///
/// Each seen user draws one engagement parameter from its posterior and
/// then generates conditionally independent days; new users arrive by the
/// sequential predictive law continued past the observation window. Under
/// the first-trigger model, seen users generate nothing further.
pub fn simulate_followup(post: &PosteriorState, d1: u32, seed: u64) -> Result<FollowupPanel> {
    if d1 == 0 {
        return Err(Error::invalid("follow-up simulation needs at least one day"));
    }
    if post.model != Model::Tg && post.n_users > 0 && post.user_betas.is_empty() {
        return Err(Error::data(
            "follow-up simulation requires per-user statistics, not aggregate counts",
        ));
    }
    let h = &post.hyper;
    let mut rng = rng_for(seed, 0);

    let mut seen_counts = Vec::with_capacity(post.n_users as usize);
    for bucket in &post.user_betas {
        for _ in 0..bucket.mult {
            let mut row = vec![0u32; d1 as usize];
            match post.model {
                Model::Tg => {}
                Model::Be => {
                    let theta = draw_beta(&mut rng, bucket.a, bucket.b);
                    for cell in row.iter_mut() {
                        if rng.gen::<f64>() < theta {
                            *cell = 1;
                        }
                    }
                }
                Model::Nb => {
                    let theta = draw_beta(&mut rng, bucket.a, bucket.b);
                    for cell in row.iter_mut() {
                        *cell = draw_negbin(&mut rng, h.r, theta).min(COUNT_CAP) as u32;
                    }
                }
            }
            seen_counts.push(row);
        }
    }
    if post.model == Model::Tg {
        seen_counts = vec![vec![0u32; d1 as usize]; post.n_users as usize];
    }

    let mut new_users = Vec::new();
    let mut n_total = post.n_users;
    for t in 1..=d1 {
        let day_abs = post.d0 + t;
        let size = n_total as f64 + h.c + 1.0;
        let p_new =
            h.psi((day_abs - 1) as f64, 1.0) / (h.beta + h.psi(0.0, day_abs as f64));
        let arrivals = draw_negbin(&mut rng, size, p_new);
        for _ in 0..arrivals {
            let mut counts = vec![0u32; d1 as usize];
            match post.model {
                Model::Tg => {
                    counts[t as usize - 1] = 1;
                }
                Model::Be => {
                    counts[t as usize - 1] = 1;
                    let theta = draw_beta(&mut rng, 1.0 - h.alpha, day_abs as f64);
                    for cell in counts.iter_mut().skip(t as usize) {
                        if rng.gen::<f64>() < theta {
                            *cell = 1;
                        }
                    }
                }
                Model::Nb => {
                    let a = draw_arrival_count(&mut rng, h, day_abs);
                    counts[t as usize - 1] = a as u32;
                    let theta = draw_beta(
                        &mut rng,
                        a as f64 - h.alpha,
                        h.r * day_abs as f64 + 1.0,
                    );
                    for cell in counts.iter_mut().skip(t as usize) {
                        *cell = draw_negbin(&mut rng, h.r, theta).min(COUNT_CAP) as u32;
                    }
                }
            }
            new_users.push(NewArrival { day: t, counts });
        }
        n_total += arrivals;
    }

    Ok(FollowupPanel {
        d1,
        seen_counts,
        new_users,
    })
}

/// Draws a panel whose first triggers follow the first-trigger model but
/// whose later activity follows a dampened per-user Bernoulli law the
/// model family does not cover.
pub fn simulate_dg2(hyper: &HyperParams, days: u32, seed: u64) -> Result<ActivityPanel> {
    if days == 0 {
        return Err(Error::invalid("simulation needs at least one day"));
    }
    hyper.validate_for(Model::Tg)?;
    let mut rng = rng_for(seed, 0);
    let arrivals = draw_tg_arrivals(&mut rng, hyper, days);
    let mut counts = Vec::with_capacity(arrivals.len());
    for first_day in arrivals {
        let eps = 0.5 * rng.gen::<f64>();
        let p = eps * (1.0 - hyper.alpha) / (1.0 - hyper.alpha + first_day as f64);
        let mut row = vec![0u32; days as usize];
        row[first_day as usize - 1] = 1;
        for cell in row.iter_mut().skip(first_day as usize) {
            if rng.gen::<f64>() < p {
                *cell = 1;
            }
        }
        counts.push(row);
    }
    Ok(panel_from_counts(days, counts))
}

/// Settings for the power-law stress generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZipfConfig {
    /// Decay exponent of the per-user trigger probabilities.
    pub tau: f64,
    /// Size of the latent population.
    pub n_users: u64,
    pub days: u32,
}

/// Draws a panel from a power-law population: user `n` triggers each day
/// with probability `n^-tau`, and trigger-day counts grow with the user's
/// running average via a zero-truncated Poisson.
pub fn simulate_zipf(cfg: &ZipfConfig, seed: u64) -> Result<ActivityPanel> {
    if !(cfg.tau >= 0.0 && cfg.tau.is_finite()) {
        return Err(Error::invalid(format!("decay exponent {} invalid", cfg.tau)));
    }
    if cfg.n_users == 0 || cfg.days == 0 {
        return Err(Error::invalid("population and window must be nonempty"));
    }
    let mut rng = rng_for(seed, 0);
    let mut counts: Vec<Vec<u32>> = Vec::new();
    for n in 1..=cfg.n_users {
        let theta = (n as f64).powf(-cfg.tau);
        let mut row = vec![0u32; cfg.days as usize];
        let mut m = 0u64;
        for d in 1..=cfg.days {
            if rng.gen::<f64>() < theta {
                let rate = 1.0 + m as f64 / d as f64;
                let k = draw_trunc_poisson(&mut rng, rate).min(COUNT_CAP);
                row[d as usize - 1] = k as u32;
                m += k;
            }
        }
        if m > 0 {
            counts.push(row);
        }
    }
    Ok(panel_from_counts(cfg.days, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::stats_from_panel;
    use crate::posterior::build_posterior;

    fn hyper_be() -> HyperParams {
        HyperParams::with_unit_dispersion(0.5, 1.0, 1.0).unwrap()
    }

    #[test]
    fn be_first_day_arrival_law() {
        // Day 1 arrivals follow a negative binomial with size c+1 = 2 and
        // success probability 1/2, so the mean is 2.
        let hyper = hyper_be();
        let mut total = 0u64;
        let reps = 4000;
        for rep in 0..reps {
            let mut process = BeProcess::new(&hyper).unwrap();
            let mut rng = rng_for(0x5bb5_0050, rep);
            let step = process.step(&mut rng);
            assert_eq!(step.day, 1);
            assert!(step.triggered.is_empty());
            total += step.new_users;
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 2.0).abs() < 0.12, "day-1 arrival mean {mean}");
    }

    #[test]
    fn be_seen_user_trigger_probability() {
        // A user active on day 1 triggers on day 2 with probability
        // (1 - alpha) / (2 - alpha) = 1/3.
        let hyper = hyper_be();
        let mut active = 0u64;
        let mut seen = 0u64;
        for rep in 0..3000 {
            let mut process = BeProcess::new(&hyper).unwrap();
            let mut rng = rng_for(0x5bb5_0051, rep);
            let first = process.step(&mut rng);
            let users_day1 = first.new_users;
            let second = process.step(&mut rng);
            seen += users_day1;
            active += second
                .triggered
                .iter()
                .filter(|&&i| i < users_day1)
                .count() as u64;
        }
        let rate = active as f64 / seen as f64;
        assert!((rate - 1.0 / 3.0).abs() < 0.025, "day-2 trigger rate {rate}");
    }

    #[test]
    fn be_panel_is_valid_and_deterministic() {
        let hyper = hyper_be();
        let a = simulate_be(&hyper, 6, 9).unwrap();
        let b = simulate_be(&hyper, 6, 9).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert!(a
            .users
            .iter()
            .all(|u| u.counts.iter().all(|&k| k <= 1)));
        let c = simulate_be(&hyper, 6, 10).unwrap();
        assert_ne!(a, c, "different seeds should differ");
    }

    #[test]
    fn tg_first_day_share() {
        // Over a two-day window at alpha = 1/2, a user's first trigger
        // lands on day 1 with probability 3/5.
        let hyper = HyperParams::with_unit_dispersion(0.5, 3.0, 1.0).unwrap();
        let mut day1 = 0u64;
        let mut total = 0u64;
        for rep in 0..3000 {
            let series = simulate_tg(&hyper, 2, 0x5bb5_0052 + rep).unwrap();
            day1 += series.new_users_per_day[0];
            total += series.n_users();
        }
        let share = day1 as f64 / total as f64;
        assert!((share - 0.6).abs() < 0.02, "day-1 share {share}");
    }

    #[test]
    fn nb_first_day_count_law() {
        // At r = 1, alpha = 1/2, a day-1 arrival has count 1 with
        // probability 2/3 and count 2 with probability 2/15.
        let hyper = HyperParams::new(0.5, 2.0, 1.0, 1.0).unwrap();
        let mut freq = [0u64; 3];
        let mut total = 0u64;
        let mut rng = rng_for(0x5bb5_0053, 0);
        for _ in 0..20_000 {
            let a = draw_arrival_count(&mut rng, &hyper, 1);
            total += 1;
            if a <= 2 {
                freq[a as usize] += 1;
            }
        }
        let p1 = freq[1] as f64 / total as f64;
        let p2 = freq[2] as f64 / total as f64;
        assert!((p1 - 2.0 / 3.0).abs() < 0.015, "P(count=1) {p1}");
        assert!((p2 - 2.0 / 15.0).abs() < 0.012, "P(count=2) {p2}");
        assert!((p1 / p2 - 5.0).abs() < 0.5, "ratio {}", p1 / p2);
    }

    #[test]
    fn nb_panel_counts_and_determinism() {
        let hyper = HyperParams::new(0.6, 2.0, 1.5, 2.0).unwrap();
        let a = simulate_nb(&hyper, 5, 77).unwrap();
        let b = simulate_nb(&hyper, 5, 77).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        // Dispersed counts should exceed 1 somewhere in a panel this size.
        assert!(a
            .users
            .iter()
            .any(|u| u.counts.iter().any(|&k| k > 1)));
    }

    #[test]
    fn followup_shapes_and_tg_silence() {
        let text = "user_id,day,count\na,1,1\na,3,1\nb,2,1\n";
        let panel = crate::dataio::parse_long_csv(text, Some(3)).unwrap().panel;
        let hyper = HyperParams::with_unit_dispersion(0.4, 2.0, 1.0).unwrap();

        let (stats, _) = stats_from_panel(&panel, Model::Tg).unwrap();
        let post = build_posterior(&stats, &hyper).unwrap();
        let fup = simulate_followup(&post, 4, 3).unwrap();
        assert_eq!(fup.seen_counts.len(), 2);
        assert!(fup.seen_counts.iter().all(|row| row.iter().all(|&k| k == 0)));
        for arrival in &fup.new_users {
            assert!(arrival.day >= 1 && arrival.day <= 4);
            assert_eq!(arrival.counts[arrival.day as usize - 1], 1);
        }

        let (stats, _) = stats_from_panel(&panel, Model::Be).unwrap();
        let post = build_posterior(&stats, &hyper).unwrap();
        let a = simulate_followup(&post, 4, 5).unwrap();
        let b = simulate_followup(&post, 4, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seen_counts.len(), 2);
        assert!(a.seen_counts.iter().all(|row| row.len() == 4));

        let converted = a.to_panel();
        converted.validate().unwrap();
        assert!(converted.n_users() as usize <= 2 + a.new_users.len());
    }

    #[test]
    fn followup_seen_activity_matches_posterior_mean() {
        // One user active 2 of 3 days at alpha = 1/2 has posterior
        // Beta(1.5, 2), so over 7 follow-up days the expected number of
        // active days is 7 * 3/7 = 3.
        let text = "user_id,day,count\na,1,1\na,2,1\n";
        let panel = crate::dataio::parse_long_csv(text, Some(3)).unwrap().panel;
        let hyper = HyperParams::with_unit_dispersion(0.5, 1.0, 1.0).unwrap();
        let (stats, _) = stats_from_panel(&panel, Model::Be).unwrap();
        let post = build_posterior(&stats, &hyper).unwrap();
        let mut total = 0u64;
        let reps = 2000;
        for rep in 0..reps {
            let fup = simulate_followup(&post, 7, 0x5bb5_0054 + rep).unwrap();
            total += fup.seen_counts[0].iter().map(|&k| k as u64).sum::<u64>();
        }
        let mean = total as f64 / reps as f64;
        assert!((mean - 3.0).abs() < 0.15, "follow-up active days {mean}");
    }

    #[test]
    fn followup_requires_user_detail_for_count_models() {
        let hyper = HyperParams::with_unit_dispersion(0.4, 2.0, 1.0).unwrap();
        let post = PosteriorState::from_counts(Model::Be, &hyper, 5, 10).unwrap();
        assert!(simulate_followup(&post, 3, 0).is_err());
        let post = PosteriorState::from_counts(Model::Tg, &hyper, 5, 10).unwrap();
        assert!(simulate_followup(&post, 3, 0).is_ok());
    }

    #[test]
    fn dg2_post_trigger_rate() {
        // Day-1 arrivals retrigger at expected rate
        // E[eps] * (1-alpha) / (2-alpha) = 1/12 at alpha = 1/2.
        let hyper = HyperParams::with_unit_dispersion(0.5, 30.0, 1.0).unwrap();
        let mut active = 0u64;
        let mut cells = 0u64;
        for rep in 0..400 {
            let panel = simulate_dg2(&hyper, 10, 0x5bb5_0055 + rep).unwrap();
            panel.validate().unwrap();
            for user in &panel.users {
                if user.first_trigger_day() == Some(1) {
                    active += user.counts[1..].iter().filter(|&&k| k > 0).count() as u64;
                    cells += 9;
                }
            }
        }
        let rate = active as f64 / cells as f64;
        assert!(
            (rate - 1.0 / 12.0).abs() < 0.01,
            "post-trigger rate {rate} should be near {}",
            1.0 / 12.0
        );
    }

    #[test]
    fn zipf_head_user_triggers_daily() {
        let cfg = ZipfConfig {
            tau: 0.8,
            n_users: 50,
            days: 6,
        };
        let panel = simulate_zipf(&cfg, 21).unwrap();
        panel.validate().unwrap();
        let head = panel.users.iter().find(|u| u.id == "u000001").unwrap();
        assert!(
            head.counts.iter().all(|&k| k >= 1),
            "rank-1 user has trigger probability 1"
        );
        assert_eq!(panel, simulate_zipf(&cfg, 21).unwrap());
    }

    #[test]
    fn zipf_day_one_counts_are_unit_rate_truncated_poisson() {
        // With no history the trigger-day count law is a zero-truncated
        // Poisson with rate 1: P(count = 1) is about 0.582.
        let cfg = ZipfConfig {
            tau: 0.3,
            n_users: 200,
            days: 1,
        };
        let mut ones = 0u64;
        let mut total = 0u64;
        for rep in 0..100 {
            let panel = simulate_zipf(&cfg, 0x5bb5_0056 + rep).unwrap();
            for user in &panel.users {
                total += 1;
                if user.counts[0] == 1 {
                    ones += 1;
                }
            }
        }
        let p1 = ones as f64 / total as f64;
        assert!((p1 - 0.582).abs() < 0.015, "unit-rate truncated mass {p1}");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let hyper = hyper_be();
        assert!(simulate_be(&hyper, 0, 0).is_err());
        assert!(simulate_tg(&hyper, 0, 0).is_err());
        let nb = HyperParams::new(0.5, 1.0, 1.0, 2.0).unwrap();
        assert!(simulate_nb(&nb, 0, 0).is_err());
        assert!(simulate_be(&nb, 3, 0).is_err(), "dispersion needs the count model");
        let bad = ZipfConfig {
            tau: -1.0,
            n_users: 5,
            days: 3,
        };
        assert!(simulate_zipf(&bad, 0).is_err());
    }
}
