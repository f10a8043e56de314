//! Shared helpers for integration tests: adaptive quadrature, a
//! numerical-integration oracle for the log marginal likelihood, and a
//! chi-square tail probability.
#![allow(dead_code)]

use sbsp::{ActivityPanel, HyperParams, Model};

fn simpson_segment<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_segment(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_segment(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson integration of `f` over `[a, b]` with a relative
/// tolerance anchored to a coarse first pass.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let n = 256;
    let h = (b - a) / n as f64;
    let mut coarse = 0.0;
    for i in 0..n {
        coarse += 0.5 * h * (f(a + i as f64 * h) + f(a + (i + 1) as f64 * h));
    }
    let tol = rel_tol * coarse.abs().max(1e-300);
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_segment(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Log marginal likelihood of a panel computed by brute-force numerical
/// integration, sharing no special-function code with the library.
///
/// The latent scale is integrated against its prior density (itself
/// normalized numerically), each user contributes a numerically integrated
/// engagement-parameter likelihood, and the no-show mass is integrated from
/// its intensity form. Valid for `alpha <= 0.8` where the substitution
/// `theta = s^8` removes the endpoint singularity.
pub fn oracle_log_marginal(panel: &ActivityPanel, model: Model, hyper: &HyperParams) -> f64 {
    let alpha = hyper.alpha;
    assert!(alpha <= 0.8, "oracle substitution needs alpha <= 0.8");
    let c = hyper.c;
    let beta = hyper.beta;
    let r = if model == Model::Nb { hyper.r } else { 1.0 };
    let d0 = panel.d0 as f64;
    let rd0 = r * d0;

    let psi = alpha
        * integrate(
            |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                let theta = s.powi(8);
                // 1 - (1-theta)^{r d0} without cancellation at tiny theta.
                let survival_gap = -(rd0 * (-theta).ln_1p()).exp_m1();
                8.0 * survival_gap * s.powf(-8.0 * alpha - 1.0)
            },
            0.0,
            1.0,
            1e-11,
        );

    let mut sum_ln_users = 0.0;
    for user in &panel.users {
        // Raw likelihood of this user's history as a function of its
        // engagement parameter: coeff * theta^power1 * (1-theta)^power0.
        let (ln_coeff, power1, power0) = match model {
            Model::Be => {
                let m = user.active_days() as f64;
                (0.0, m, d0 - m)
            }
            Model::Tg => {
                let first = user.first_trigger_day().expect("active user") as f64;
                (0.0, 1.0, first - 1.0)
            }
            Model::Nb => {
                let mut ln_coeff = 0.0;
                let mut total = 0.0;
                for &a in &user.counts {
                    total += a as f64;
                    for i in 1..=a as u64 {
                        ln_coeff += ((r + i as f64 - 1.0) / i as f64).ln();
                    }
                }
                (ln_coeff, total, rd0)
            }
        };
        let quad = integrate(
            |s: f64| {
                if s <= 0.0 {
                    return 0.0;
                }
                let theta = s.powi(8);
                8.0 * s.powf(8.0 * (power1 - alpha) - 1.0) * (1.0 - theta).powf(power0)
            },
            0.0,
            1.0,
            1e-11,
        );
        sum_ln_users += ln_coeff + (alpha * quad).ln();
    }

    let n = panel.n_users() as f64;
    let k = n + c;
    let lambda = beta + psi;
    let w_hi = (k + 80.0) / lambda;
    let q1 = integrate(|w: f64| w.powf(k) * (-lambda * w).exp(), 0.0, w_hi, 1e-11);
    let q2 = integrate(|t: f64| t.powf(c) * (-t).exp(), 0.0, c + 80.0, 1e-11);

    sum_ln_users + (c + 1.0) * beta.ln() + q1.ln() - q2.ln()
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    for n in 1..500 {
        term *= x / (a + n as f64);
        sum += term;
        if term.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - sbsp::log_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    // Lentz's continued fraction for the upper regularized gamma.
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h * (-x + a * x.ln() - sbsp::log_gamma(a)).exp()
}

/// Upper tail probability of a chi-square law with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    let a = df as f64 / 2.0;
    let x = x / 2.0;
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - gamma_p_series(a, x)).clamp(0.0, 1.0)
    } else {
        gamma_q_cf(a, x).clamp(0.0, 1.0)
    }
}

/// Pearson goodness-of-fit p-value of observed counts against expected
/// counts (already on the same total). Bins with expected mass below
/// `min_expected` are merged into their right neighbor (the last bin
/// absorbs leftovers on its left).
pub fn chi_square_p_value(observed: &[f64], expected: &[f64], min_expected: f64) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let mut obs_m = Vec::new();
    let mut exp_m = Vec::new();
    let mut o_acc = 0.0;
    let mut e_acc = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        o_acc += o;
        e_acc += e;
        if e_acc >= min_expected {
            obs_m.push(o_acc);
            exp_m.push(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 {
        if let (Some(o_last), Some(e_last)) = (obs_m.last_mut(), exp_m.last_mut()) {
            *o_last += o_acc;
            *e_last += e_acc;
        }
    }
    assert!(obs_m.len() >= 2, "need at least two merged bins");
    let x2: f64 = obs_m
        .iter()
        .zip(&exp_m)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    chi_square_sf(x2, obs_m.len() as u32 - 1)
}

/// Median of a sample (averages the middle pair for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
