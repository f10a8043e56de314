//! Nonparametric reference estimators of unseen-user counts, plus the
//! capped relative-accuracy score used to compare estimators.
//!
//! Both estimators work from the frequency spectrum of a pilot panel: how
//! many users were active on exactly `j` of the observed days.

use std::collections::BTreeMap;

use crate::dataio::ActivityPanel;
use crate::error::{Error, Result};

/// Frequency-of-frequencies summary of a pilot panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySpectrum {
    /// Days in the observation window.
    pub d0: u32,
    /// `f[j]` = number of users active on exactly `j` days.
    pub f: BTreeMap<u32, u64>,
}

impl FrequencySpectrum {
    pub fn from_panel(panel: &ActivityPanel) -> Self {
        let mut f = BTreeMap::new();
        for user in &panel.users {
            let j = user.active_days();
            if j > 0 {
                *f.entry(j).or_insert(0u64) += 1;
            }
        }
        FrequencySpectrum { d0: panel.d0, f }
    }

    /// Number of users observed at least once.
    pub fn n_observed(&self) -> u64 {
        self.f.values().sum()
    }
}

/// Predicts how many unseen users will appear over `d1` further days by
/// extrapolating the frequency spectrum.
///
/// For extrapolation factors `t = d1/d0` up to one this is the alternating
/// series `sum_j -(-t)^j f_j`; beyond one, each term is damped by a
/// binomial tail probability to keep the series stable. The estimate is
/// clamped at zero.
pub fn good_toulmin(spectrum: &FrequencySpectrum, d1: u32) -> f64 {
    if spectrum.f.is_empty() || d1 == 0 {
        return 0.0;
    }
    let t = d1 as f64 / spectrum.d0 as f64;
    let estimate: f64 = if t <= 1.0 {
        spectrum
            .f
            .iter()
            .map(|(&j, &fj)| -(-t).powi(j as i32) * fj as f64)
            .sum()
    } else {
        let k = (0.5 * (spectrum.d0 as f64 * t * t / (t - 1.0)).log2()).ceil() as i32;
        let k = k.max(1) as u32;
        let theta = 2.0 / (t + 2.0);
        // P(L >= j) for L ~ Binomial(k, theta), via suffix sums of the pmf.
        let mut pmf = Vec::with_capacity(k as usize + 1);
        let mut p = (1.0 - theta).powi(k as i32);
        pmf.push(p);
        for j in 0..k {
            p *= (k - j) as f64 / (j + 1) as f64 * (theta / (1.0 - theta));
            pmf.push(p);
        }
        let mut tail = vec![0.0; k as usize + 2];
        for j in (0..=k as usize).rev() {
            tail[j] = tail[j + 1] + pmf[j];
        }
        spectrum
            .f
            .iter()
            .take_while(|(&j, _)| j <= k)
            .map(|(&j, &fj)| -(-t).powi(j as i32) * tail[j as usize] * fj as f64)
            .sum()
    };
    estimate.max(0.0)
}

fn falling(x: i128, k: u32) -> Option<i128> {
    let mut acc = 1i128;
    for step in 0..k as i128 {
        acc = acc.checked_mul(x - step)?;
    }
    Some(acc)
}

/// Predicts the number of unseen users by the order-`k` jackknife.
///
/// The estimator is the k-th finite difference of the expected richness
/// under day removal; it reduces to `S + f_1 (n-1)/n` at order one. The
/// spectrum coefficients are evaluated in exact integer arithmetic before
/// a single final division, and the estimate is clamped at zero. The order
/// must satisfy `1 <= k <= min(5, d0 - 1)`.
pub fn jackknife(spectrum: &FrequencySpectrum, k: u32) -> Result<f64> {
    let n = spectrum.d0;
    if k == 0 || k > 5 || k + 1 > n {
        return Err(Error::invalid(format!(
            "jackknife order {k} out of range for a {n}-day window"
        )));
    }
    if spectrum.f.is_empty() {
        return Ok(0.0);
    }
    let n_i = n as i128;
    let mut binom = vec![1i128; k as usize + 1];
    for j in 1..=k as usize {
        binom[j] = binom[j - 1] * (k as usize - j + 1) as i128 / j as i128;
    }
    let mut unseen = 0.0;
    for (&i, &fi) in spectrum.f.range(1..=k) {
        let mut numer = 0i128;
        for j in i..=k {
            // (n - j)^k, assembled multiplicatively to stay in integers.
            let mut power = 1i128;
            for _ in 0..k {
                power = power.checked_mul(n_i - j as i128).ok_or_else(|| {
                    Error::numeric("jackknife coefficient overflow; window too long")
                })?;
            }
            let sign = if j % 2 == 0 { 1 } else { -1 };
            let term = binom[j as usize]
                .checked_mul(power)
                .and_then(|v| v.checked_mul(falling(j as i128, i)?))
                .and_then(|v| v.checked_mul(sign))
                .ok_or_else(|| {
                    Error::numeric("jackknife coefficient overflow; window too long")
                })?;
            numer = numer.checked_add(term).ok_or_else(|| {
                Error::numeric("jackknife coefficient overflow; window too long")
            })?;
        }
        let mut denom = 1i128;
        for step in 1..=k as i128 {
            denom *= step;
        }
        let denom = denom.checked_mul(falling(n_i, i).expect("n >= k + 1")).ok_or_else(
            || Error::numeric("jackknife coefficient overflow; window too long"),
        )?;
        let coef = -(numer as f64) / denom as f64;
        unseen += coef * fi as f64;
    }
    Ok(unseen.max(0.0))
}

/// Relative accuracy of an estimate against a known truth, capped to
/// `[0, 1]`: exact estimates score 1, estimates off by the whole truth or
/// more score 0. Returns `None` when the truth is zero, where relative
/// error is undefined.
pub fn accuracy(truth: u64, estimate: f64) -> Option<f64> {
    if truth == 0 {
        return None;
    }
    let rel = (truth as f64 - estimate).abs() / truth as f64;
    Some(1.0 - rel.min(1.0))
}
