//! Hyperparameter estimation.
//!
//! Two fitting routes are provided, both driven by a derivative-free
//! differential-evolution optimizer:
//!
//! * [`fit_mml`] maximizes the exact log marginal likelihood of a per-user
//!   pilot panel (empirical Bayes);
//! * [`fit_curve`] needs only the daily new-user counts: it matches the
//!   model's expected cumulative new-user trajectory, anchored at an early
//!   day `d0`, to the observed trajectory by least squares.
//!
//! The scale-like parameters `c`, `beta`, and `r` are optimized on a log
//! scale; `alpha` is optimized directly on its bounded interval.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{FirstTriggerSeries, Model, SufficientStats};
use crate::error::{Error, Result};
use crate::forecast::expected_unseen;
use crate::marglik::log_marginal;
use crate::posterior::{HyperParams, PosteriorState};

/// Differential-evolution settings (`DE/rand/1/bin`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    /// Population size (default 32).
    pub population: usize,
    /// Generation cap (default 300).
    pub max_gens: usize,
    /// Mutation factor F (default 0.7).
    pub mutation: f64,
    /// Crossover rate CR (default 0.9).
    pub crossover: f64,
    /// Convergence tolerance on the population's objective spread
    /// (default 1e-8).
    pub tol: f64,
    pub seed: u64,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            population: 32,
            max_gens: 300,
            mutation: 0.7,
            crossover: 0.9,
            tol: 1e-8,
            seed: 0,
        }
    }
}

/// Outcome of a differential-evolution run.
#[derive(Debug, Clone, PartialEq)]
pub struct DeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub generations: usize,
    pub evaluations: u64,
    /// True when the objective spread fell below the tolerance before the
    /// generation cap.
    pub converged: bool,
}

/// Minimizes `objective` over a box with `DE/rand/1/bin`.
///
/// The population is initialized uniformly in the box from the seed;
/// mutation uses three distinct random members, binomial crossover forces
/// at least one mutated coordinate, candidates are clipped to the box, and
/// a member is replaced only on strict improvement. The run is
/// deterministic given the seed.
pub fn differential_evolution<F: FnMut(&[f64]) -> f64>(
    mut objective: F,
    bounds: &[(f64, f64)],
    cfg: &DeConfig,
) -> Result<DeResult> {
    if bounds.is_empty() {
        return Err(Error::invalid("optimizer needs at least one dimension"));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!(
                "optimizer bounds must be finite with low < high, got ({lo}, {hi})"
            )));
        }
    }
    if cfg.population < 5 {
        return Err(Error::invalid("population must be at least 5"));
    }
    if !(cfg.mutation > 0.0 && cfg.mutation <= 2.0) || !(0.0..=1.0).contains(&cfg.crossover) {
        return Err(Error::invalid(format!(
            "mutation factor {} or crossover rate {} out of range",
            cfg.mutation, cfg.crossover
        )));
    }

    let dim = bounds.len();
    let np = cfg.population;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut evaluations = 0u64;
    let mut eval = |x: &[f64], evals: &mut u64| -> f64 {
        *evals += 1;
        let v = objective(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| lo + rng.gen::<f64>() * (hi - lo))
                .collect()
        })
        .collect();
    let mut fitness: Vec<f64> = pop.iter().map(|x| eval(x, &mut evaluations)).collect();
    let bad = fitness.iter().filter(|f| !f.is_finite()).count();
    if 2 * bad > np {
        return Err(Error::numeric(format!(
            "objective is not finite at {bad} of {np} initial points"
        )));
    }

    let mut generations = 0;
    let mut converged = false;
    for gen in 1..=cfg.max_gens {
        generations = gen;
        let mut next_pop = pop.clone();
        let mut next_fit = fitness.clone();
        for i in 0..np {
            // Three mutually distinct members, all different from i.
            let pick = |rng: &mut ChaCha8Rng, taken: &[usize]| loop {
                let k = rng.gen_range(0..np);
                if k != i && !taken.contains(&k) {
                    return k;
                }
            };
            let a = pick(&mut rng, &[]);
            let b = pick(&mut rng, &[a]);
            let c = pick(&mut rng, &[a, b]);
            let j_rand = rng.gen_range(0..dim);
            let mut trial = pop[i].clone();
            for d in 0..dim {
                if d == j_rand || rng.gen::<f64>() < cfg.crossover {
                    let v = pop[a][d] + cfg.mutation * (pop[b][d] - pop[c][d]);
                    trial[d] = v.clamp(bounds[d].0, bounds[d].1);
                }
            }
            let f_trial = eval(&trial, &mut evaluations);
            if f_trial < fitness[i] {
                next_pop[i] = trial;
                next_fit[i] = f_trial;
            }
        }
        pop = next_pop;
        fitness = next_fit;

        let finite: Vec<f64> = fitness.iter().copied().filter(|f| f.is_finite()).collect();
        if finite.len() == np {
            let spread = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - finite.iter().cloned().fold(f64::INFINITY, f64::min);
            if spread < cfg.tol {
                converged = true;
                break;
            }
        }
    }

    let best = (0..np)
        .min_by(|&i, &j| fitness[i].partial_cmp(&fitness[j]).expect("fitness comparable"))
        .expect("population nonempty");
    Ok(DeResult {
        x: pop[best].clone(),
        value: fitness[best],
        generations,
        evaluations,
        converged,
    })
}

/// Search box for each hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBounds {
    pub alpha: (f64, f64),
    pub c: (f64, f64),
    pub beta: (f64, f64),
    pub r: (f64, f64),
}

impl Default for FitBounds {
    fn default() -> Self {
        FitBounds {
            alpha: (0.01, 0.99),
            c: (1e-2, 1e6),
            beta: (1e-3, 1e4),
            r: (1e-2, 1e3),
        }
    }
}

impl FitBounds {
    fn validate(&self) -> Result<()> {
        let pairs = [
            ("alpha", self.alpha),
            ("c", self.c),
            ("beta", self.beta),
            ("r", self.r),
        ];
        for (name, (lo, hi)) in pairs {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::invalid(format!("bad {name} bounds ({lo}, {hi})")));
            }
        }
        if !(self.alpha.0 > 0.0 && self.alpha.1 < 1.0) {
            return Err(Error::invalid("alpha bounds must lie strictly inside (0, 1)"));
        }
        if self.c.0 <= 0.0 || self.beta.0 <= 0.0 || self.r.0 <= 0.0 {
            return Err(Error::invalid("c, beta, r bounds must be positive"));
        }
        Ok(())
    }
}

/// Settings shared by both fitting routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub bounds: FitBounds,
    /// Anchor day for curve fitting: the pilot prefix whose statistics
    /// seed the trajectory (default 1).
    pub anchor_day: u32,
    pub de: DeConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            bounds: FitBounds::default(),
            anchor_day: 1,
            de: DeConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn with_seed(seed: u64) -> Self {
        let mut cfg = FitConfig::default();
        cfg.de.seed = seed;
        cfg
    }
}

/// How a parameter set was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Mml,
    Curve,
}

impl fmt::Display for FitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitMethod::Mml => "mml",
            FitMethod::Curve => "curve",
        })
    }
}

/// Fitted hyperparameters plus fit diagnostics.
///
/// `objective_value` is the log marginal likelihood for [`fit_mml`] and the
/// residual sum of squares for [`fit_curve`]. Serialization flattens to
/// `{model, alpha, c, beta, r, objective, method, seed}`; the diagnostics
/// fields are not part of the wire format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ParamsWire", try_from = "ParamsWire")]
pub struct FittedParams {
    pub model: Model,
    pub hyper: HyperParams,
    pub objective_value: f64,
    pub method: FitMethod,
    pub evaluations: u64,
    pub converged: bool,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct ParamsWire {
    model: Model,
    alpha: f64,
    c: f64,
    beta: f64,
    r: f64,
    objective: f64,
    method: FitMethod,
    seed: u64,
}

impl From<FittedParams> for ParamsWire {
    fn from(p: FittedParams) -> Self {
        ParamsWire {
            model: p.model,
            alpha: p.hyper.alpha,
            c: p.hyper.c,
            beta: p.hyper.beta,
            r: p.hyper.r,
            objective: p.objective_value,
            method: p.method,
            seed: p.seed,
        }
    }
}

impl TryFrom<ParamsWire> for FittedParams {
    type Error = Error;

    fn try_from(w: ParamsWire) -> Result<Self> {
        let hyper = HyperParams::new(w.alpha, w.c, w.beta, w.r)?;
        hyper.validate_for(w.model)?;
        Ok(FittedParams {
            model: w.model,
            hyper,
            objective_value: w.objective,
            method: w.method,
            evaluations: 0,
            converged: true,
            seed: w.seed,
        })
    }
}

fn hyper_bounds(bounds: &FitBounds, with_r: bool) -> Vec<(f64, f64)> {
    let mut b = vec![
        bounds.alpha,
        (bounds.c.0.ln(), bounds.c.1.ln()),
        (bounds.beta.0.ln(), bounds.beta.1.ln()),
    ];
    if with_r {
        b.push((bounds.r.0.ln(), bounds.r.1.ln()));
    }
    b
}

fn decode_hyper(x: &[f64]) -> HyperParams {
    HyperParams {
        alpha: x[0],
        c: x[1].exp(),
        beta: x[2].exp(),
        r: if x.len() > 3 { x[3].exp() } else { 1.0 },
    }
}

/// Fits hyperparameters by maximizing the log marginal likelihood.
///
/// For the unit-dispersion models the search is over `(alpha, c, beta)`;
/// the negative-binomial model adds `r`.
pub fn fit_mml(stats: &SufficientStats, cfg: &FitConfig) -> Result<FittedParams> {
    if stats.n_users == 0 {
        return Err(Error::invalid(
            "marginal-likelihood fitting needs at least one observed user",
        ));
    }
    cfg.bounds.validate()?;
    let with_r = stats.model == Model::Nb;
    let bounds = hyper_bounds(&cfg.bounds, with_r);
    let objective = |x: &[f64]| -> f64 {
        match log_marginal(stats, &decode_hyper(x)) {
            Ok(r) => -r.log_value,
            Err(_) => f64::INFINITY,
        }
    };
    let de = differential_evolution(objective, &bounds, &cfg.de)?;
    Ok(FittedParams {
        model: stats.model,
        hyper: decode_hyper(&de.x),
        objective_value: -de.value,
        method: FitMethod::Mml,
        evaluations: de.evaluations,
        converged: de.converged,
        seed: cfg.de.seed,
    })
}

/// Cumulative new-user targets from day `anchor` onward: the users observed
/// up to the anchor, and the cumulative arrivals for each later day.
pub(crate) fn curve_targets(series: &FirstTriggerSeries, anchor: u32) -> (u64, Vec<u64>) {
    let n_anchor = series.n_users_through(anchor);
    let mut cumulative = Vec::new();
    let mut acc = 0u64;
    for &n in series.new_users_per_day.iter().skip(anchor as usize) {
        acc += n;
        cumulative.push(acc);
    }
    (n_anchor, cumulative)
}

/// Fits hyperparameters to the observed cumulative new-user trajectory via
/// least squares.
///
/// For each candidate parameter set, the posterior is built from the counts
/// through `cfg.anchor_day` alone, and its expected new-user trajectory is
/// compared with the realized one. The unit-dispersion models fix `r = 1`;
/// the negative-binomial model fits `r` because the trajectory depends on
/// it through the exhaustion mass.
pub fn fit_curve(
    series: &FirstTriggerSeries,
    model: Model,
    cfg: &FitConfig,
) -> Result<FittedParams> {
    let anchor = cfg.anchor_day;
    if anchor == 0 {
        return Err(Error::invalid("anchor day must be >= 1"));
    }
    if series.d0() < anchor + 2 {
        return Err(Error::invalid(format!(
            "curve fitting needs at least two days after the anchor (window {}, anchor {anchor})",
            series.d0()
        )));
    }
    if series.n_users() == 0 {
        return Err(Error::invalid("curve fitting needs a nonzero user series"));
    }
    cfg.bounds.validate()?;
    let (n_anchor, targets) = curve_targets(series, anchor);
    let with_r = model == Model::Nb;
    let bounds = hyper_bounds(&cfg.bounds, with_r);
    let objective = |x: &[f64]| -> f64 {
        let hyper = decode_hyper(x);
        let post = match PosteriorState::from_counts(model, &hyper, anchor, n_anchor) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        targets
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let e = expected_unseen(&post, i as u32 + 1) - u as f64;
                e * e
            })
            .sum()
    };
    let de = differential_evolution(objective, &bounds, &cfg.de)?;
    Ok(FittedParams {
        model,
        hyper: decode_hyper(&de.x),
        objective_value: de.value,
        method: FitMethod::Curve,
        evaluations: de.evaluations,
        converged: de.converged,
        seed: cfg.de.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{parse_long_csv, stats_from_panel};
    use std::cell::Cell;

    #[test]
    fn sphere_is_minimized() {
        let cfg = DeConfig {
            seed: 7,
            ..DeConfig::default()
        };
        let r = differential_evolution(
            |x| x.iter().map(|v| v * v).sum(),
            &[(-5.0, 5.0); 4],
            &cfg,
        )
        .unwrap();
        assert!(r.value < 1e-4, "sphere minimum {} too large", r.value);
        assert!(r.converged);
        assert!(r.generations <= 300);
    }

    #[test]
    fn absolute_value_locates_kink() {
        let cfg = DeConfig {
            seed: 11,
            ..DeConfig::default()
        };
        let r = differential_evolution(|x| (x[0] - 2.0).abs(), &[(0.0, 5.0)], &cfg).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn fixed_seed_is_bitwise_reproducible() {
        let cfg = DeConfig {
            seed: 3,
            max_gens: 40,
            ..DeConfig::default()
        };
        let f = |x: &[f64]| (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2);
        let a = differential_evolution(f, &[(-4.0, 4.0); 2], &cfg).unwrap();
        let b = differential_evolution(f, &[(-4.0, 4.0); 2], &cfg).unwrap();
        assert_eq!(a.x[0].to_bits(), b.x[0].to_bits());
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn mostly_non_finite_start_is_an_error() {
        let cfg = DeConfig::default();
        let calls = Cell::new(0u32);
        // 20 of the 32 initial evaluations return NaN: reject.
        let r = differential_evolution(
            |_| {
                let k = calls.get();
                calls.set(k + 1);
                if k < 20 {
                    f64::NAN
                } else {
                    1.0
                }
            },
            &[(0.0, 1.0)],
            &cfg,
        );
        assert!(r.is_err());

        // 12 of 32 (under half) is tolerated.
        let calls = Cell::new(0u32);
        let r = differential_evolution(
            |x| {
                let k = calls.get();
                calls.set(k + 1);
                if k < 12 {
                    f64::NAN
                } else {
                    x[0] * x[0]
                }
            },
            &[(-1.0, 1.0)],
            &cfg,
        );
        assert!(r.unwrap().value < 1e-4);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let f = |x: &[f64]| x[0];
        assert!(differential_evolution(f, &[], &DeConfig::default()).is_err());
        assert!(differential_evolution(f, &[(1.0, 0.0)], &DeConfig::default()).is_err());
        let cfg = DeConfig {
            population: 3,
            ..DeConfig::default()
        };
        assert!(differential_evolution(f, &[(0.0, 1.0)], &cfg).is_err());
    }

    fn small_stats(model: Model) -> SufficientStats {
        let text = "user_id,day,count\n\
            a,1,1\na,2,1\na,5,2\n\
            b,2,1\n\
            c,1,1\nc,3,1\nc,4,1\nc,5,1\n\
            d,4,2\n";
        let panel = parse_long_csv(text, Some(5)).unwrap().panel;
        stats_from_panel(&panel, model).unwrap().0
    }

    #[test]
    fn mml_beats_random_box_points() {
        let stats = small_stats(Model::Be);
        let mut cfg = FitConfig::with_seed(5);
        cfg.de.max_gens = 60;
        cfg.de.population = 16;
        let fitted = fit_mml(&stats, &cfg).unwrap();
        assert_eq!(fitted.method, FitMethod::Mml);

        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let b = FitBounds::default();
        for _ in 0..100 {
            let hyper = HyperParams::new(
                rng.gen_range(b.alpha.0..b.alpha.1),
                (rng.gen_range(b.c.0.ln()..b.c.1.ln())).exp(),
                (rng.gen_range(b.beta.0.ln()..b.beta.1.ln())).exp(),
                1.0,
            )
            .unwrap();
            let ll = log_marginal(&stats, &hyper).unwrap().log_value;
            assert!(
                fitted.objective_value >= ll,
                "random point {ll} beats fit {}",
                fitted.objective_value
            );
        }
    }

    #[test]
    fn mml_requires_users_and_is_permutation_invariant() {
        let mut stats = small_stats(Model::Tg);
        stats.per_user.clear();
        stats.n_users = 0;
        assert!(fit_mml(&stats, &FitConfig::default()).is_err());

        let a = "user_id,day,count\nx,1,1\nx,2,1\ny,3,1\nz,1,1\n";
        let b = "user_id,day,count\nz,1,1\ny,3,1\nx,2,1\nx,1,1\n";
        let mut cfg = FitConfig::with_seed(17);
        cfg.de.max_gens = 25;
        cfg.de.population = 12;
        for model in [Model::Be, Model::Tg] {
            let sa = stats_from_panel(&parse_long_csv(a, Some(3)).unwrap().panel, model)
                .unwrap()
                .0;
            let sb = stats_from_panel(&parse_long_csv(b, Some(3)).unwrap().panel, model)
                .unwrap()
                .0;
            let fa = fit_mml(&sa, &cfg).unwrap();
            let fb = fit_mml(&sb, &cfg).unwrap();
            assert_eq!(fa.hyper.alpha.to_bits(), fb.hyper.alpha.to_bits());
            assert_eq!(fa.objective_value.to_bits(), fb.objective_value.to_bits());
        }
    }

    #[test]
    fn curve_targets_bookkeeping() {
        let series = FirstTriggerSeries {
            new_users_per_day: vec![10, 4, 3],
            total_triggers_per_day: None,
        };
        let (n1, t) = curve_targets(&series, 1);
        assert_eq!(n1, 10);
        assert_eq!(t, vec![4, 7]);
    }

    #[test]
    fn curve_fit_recovers_exact_trajectory() {
        // Targets generated from the model's own expected trajectory at
        // known parameters, then rounded to integers.
        let truth = HyperParams::with_unit_dispersion(0.5, 100.0, 1.0).unwrap();
        let anchor = 1u32;
        let n_anchor = 60u64;
        let post = PosteriorState::from_counts(Model::Tg, &truth, anchor, n_anchor).unwrap();
        let d0 = 12u32;
        let mut new_users = vec![n_anchor];
        let mut prev = 0u64;
        for d in 1..d0 {
            let cum = expected_unseen(&post, d).round() as u64;
            new_users.push(cum - prev);
            prev = cum;
        }
        let series = FirstTriggerSeries {
            new_users_per_day: new_users,
            total_triggers_per_day: None,
        };

        let cfg = FitConfig::with_seed(23);
        let fitted = fit_curve(&series, Model::Tg, &cfg).unwrap();
        assert_eq!(fitted.method, FitMethod::Curve);

        let (n1, targets) = curve_targets(&series, anchor);
        let truth_obj: f64 = {
            let post = PosteriorState::from_counts(Model::Tg, &truth, anchor, n1).unwrap();
            targets
                .iter()
                .enumerate()
                .map(|(i, &u)| {
                    let e = expected_unseen(&post, i as u32 + 1) - u as f64;
                    e * e
                })
                .sum()
        };
        // The optimizer must do at least as well as the generating
        // parameters, up to tolerance.
        assert!(
            fitted.objective_value <= truth_obj + 1e-6,
            "fit objective {} worse than truth {}",
            fitted.objective_value,
            truth_obj
        );
    }

    #[test]
    fn curve_fit_degenerate_and_invalid_inputs() {
        let flat = FirstTriggerSeries {
            new_users_per_day: vec![50, 0, 0, 0, 0],
            total_triggers_per_day: None,
        };
        let mut cfg = FitConfig::with_seed(31);
        cfg.de.max_gens = 80;
        let fitted = fit_curve(&flat, Model::Tg, &cfg).unwrap();
        let post = PosteriorState::from_counts(Model::Tg, &fitted.hyper, 1, 50).unwrap();
        assert!(
            expected_unseen(&post, 4) < 0.5,
            "flat series should force a near-zero forecast"
        );

        let short = FirstTriggerSeries {
            new_users_per_day: vec![5, 3],
            total_triggers_per_day: None,
        };
        assert!(fit_curve(&short, Model::Tg, &FitConfig::default()).is_err());

        let empty = FirstTriggerSeries {
            new_users_per_day: vec![0, 0, 0, 0],
            total_triggers_per_day: None,
        };
        assert!(fit_curve(&empty, Model::Be, &FitConfig::default()).is_err());
    }

    #[test]
    fn params_json_roundtrip() {
        let p = FittedParams {
            model: Model::Nb,
            hyper: HyperParams::new(0.4, 12.0, 0.7, 3.0).unwrap(),
            objective_value: -123.5,
            method: FitMethod::Mml,
            evaluations: 960,
            converged: true,
            seed: 42,
        };
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.starts_with("{\"model\":\"nb\",\"alpha\":0.4,\"c\":12.0,"));
        assert!(json.contains("\"objective\":-123.5"));
        assert!(json.contains("\"method\":\"mml\""));
        let back: FittedParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back.hyper, p.hyper);
        assert_eq!(back.model, p.model);
        // A wire record with out-of-domain values is rejected.
        let bad = json.replace("0.4", "1.4");
        assert!(serde_json::from_str::<FittedParams>(&bad).is_err());
    }
}
