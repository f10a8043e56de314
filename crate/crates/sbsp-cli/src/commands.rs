//! Implementations of the single-run subcommands.

use std::fs;
use std::path::Path;

use serde::Serialize;

use sbsp::{
    build_posterior, fit_curve, fit_mml, forecast_report, global_band, invert_band,
    parse_aggregate_csv, parse_long_csv, point_estimate_dm, posterior_interval_dm, sample_dm,
    series_from_panel, series_to_aggregate_csv, simulate_be, simulate_nb, simulate_tg,
    simulate_zipf, stats_from_panel, tg_stats_from_series, Error, FitConfig, FitMethod,
    FittedParams, HorizonConfig, HyperParams, Model, PosteriorState, Result, SearchHorizon,
    ZipfConfig,
};

use crate::{
    DUpArg, DaysToArgs, FitArgs, GeneratorArg, HorizonMethodArg, PredictArgs, SimulateArgs,
};

/// Input CSV shape, decided by the header line.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum InputKind {
    /// Per-user rows `user_id,day,count`.
    Long,
    /// Daily aggregates `day,new_users[,total_triggers]`.
    Aggregate,
}

pub fn detect_format(text: &str) -> Result<InputKind> {
    let header = text.lines().next().unwrap_or("").trim();
    match header {
        "user_id,day,count" => Ok(InputKind::Long),
        "day,new_users" | "day,new_users,total_triggers" => Ok(InputKind::Aggregate),
        other => Err(Error::Parse {
            line: 1,
            message: format!(
                "unrecognized header '{other}', expected 'user_id,day,count' or \
                 'day,new_users[,total_triggers]'"
            ),
        }),
    }
}

pub(crate) fn write_output(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, content).map_err(Error::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

pub fn fit(args: &FitArgs, seed: u64) -> Result<()> {
    let text = fs::read_to_string(&args.input)?;
    let model = Model::from(args.model);
    let cfg = FitConfig::with_seed(seed);
    let fitted = match (detect_format(&text)?, FitMethod::from(args.fit)) {
        (InputKind::Long, FitMethod::Mml) => {
            let panel = parse_long_csv(&text, None)?.panel;
            let (stats, _) = stats_from_panel(&panel, model)?;
            fit_mml(&stats, &cfg)?
        }
        (InputKind::Long, FitMethod::Curve) => {
            let panel = parse_long_csv(&text, None)?.panel;
            fit_curve(&series_from_panel(&panel), model, &cfg)?
        }
        (InputKind::Aggregate, FitMethod::Mml) => {
            return Err(Error::Data(
                "marginal likelihood requires per-user data".into(),
            ));
        }
        (InputKind::Aggregate, FitMethod::Curve) => {
            fit_curve(&parse_aggregate_csv(&text)?, model, &cfg)?
        }
    };
    write_output(args.output.as_deref(), &to_json_line(&fitted)?)
}

/// Builds the posterior for `params` from whichever CSV shape `text` holds.
///
/// Aggregate input carries first-trigger data only, so it supports only the
/// `tg` model; the per-user models need long input.
pub fn posterior_from_input(
    text: &str,
    model: Model,
    hyper: &HyperParams,
) -> Result<PosteriorState> {
    match detect_format(text)? {
        InputKind::Long => {
            let panel = parse_long_csv(text, None)?.panel;
            let (stats, _) = stats_from_panel(&panel, model)?;
            build_posterior(&stats, hyper)
        }
        InputKind::Aggregate => {
            if model != Model::Tg {
                return Err(Error::Data(format!(
                    "aggregate input carries only first-trigger data; {} parameters need \
                     per-user rows",
                    model.name()
                )));
            }
            let series = parse_aggregate_csv(text)?;
            build_posterior(&tg_stats_from_series(&series), hyper)
        }
    }
}

fn load_params(path: &Path) -> Result<FittedParams> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let params = load_params(&args.params)?;
    let text = fs::read_to_string(&args.input)?;
    let post = posterior_from_input(&text, params.model, &params.hyper)?;
    let report = forecast_report(&post, args.d1, args.level)?;
    write_output(args.output.as_deref(), &to_json_line(&report)?)
}

/// Report of the posterior-sampling route, in follow-up days.
#[derive(Serialize)]
struct PosteriorDaysReport {
    #[serde(rename = "M")]
    target: u64,
    method: &'static str,
    #[serde(rename = "D0")]
    d0: u32,
    #[serde(rename = "N")]
    n_users: u64,
    point: u32,
    lo: u32,
    hi: u32,
    /// True when censoring leaves `hi` a lower bound only.
    hi_open: bool,
    censor_fraction: f64,
    #[serde(rename = "D_up")]
    d_up: u32,
    #[serde(rename = "K")]
    draws: usize,
    level: f64,
}

/// Report of the band-inversion route, in follow-up days.
#[derive(Serialize)]
struct InversionDaysReport {
    #[serde(rename = "M")]
    target: u64,
    method: &'static str,
    #[serde(rename = "D0")]
    d0: u32,
    #[serde(rename = "N")]
    n_users: u64,
    point: u32,
    lo: u32,
    hi: u32,
    /// True when even the band's upper envelope never reaches the target.
    lo_open: bool,
    /// True when the band's lower envelope never reaches the target.
    hi_open: bool,
    #[serde(rename = "D_up")]
    d_up: u32,
    #[serde(rename = "Q")]
    trajectories: usize,
    epsilon: f64,
}

#[derive(Serialize)]
struct SaturationReport {
    error: &'static str,
    message: String,
}

pub fn days_to(args: &DaysToArgs, seed: u64) -> Result<()> {
    let params = load_params(&args.params)?;
    let text = fs::read_to_string(&args.input)?;
    let post = posterior_from_input(&text, params.model, &params.hyper)?;

    if args.target <= post.n_users {
        let json = match args.method {
            HorizonMethodArg::Posterior => to_json_line(&PosteriorDaysReport {
                target: args.target,
                method: "posterior",
                d0: post.d0,
                n_users: post.n_users,
                point: 0,
                lo: 0,
                hi: 0,
                hi_open: false,
                censor_fraction: 0.0,
                d_up: 0,
                draws: args.draws,
                level: args.level,
            })?,
            HorizonMethodArg::Inversion => to_json_line(&InversionDaysReport {
                target: args.target,
                method: "inversion",
                d0: post.d0,
                n_users: post.n_users,
                point: 0,
                lo: 0,
                hi: 0,
                lo_open: false,
                hi_open: false,
                d_up: 0,
                trajectories: args.draws,
                epsilon: args.epsilon,
            })?,
        };
        return write_output(args.output.as_deref(), &json);
    }

    let outcome = days_to_report(args, seed, &post);
    if let Err(Error::Saturation(message)) = &outcome {
        let report = SaturationReport {
            error: "saturation",
            message: message.clone(),
        };
        print!("{}", to_json_line(&report)?);
    }
    write_output(args.output.as_deref(), &outcome?)
}

fn days_to_report(args: &DaysToArgs, seed: u64, post: &PosteriorState) -> Result<String> {
    let point = point_estimate_dm(post, args.target)?;
    let mut cfg = HorizonConfig::new(args.target);
    cfg.seed = seed;
    cfg.epsilon = args.epsilon;
    cfg.horizon = match args.d_up {
        DUpArg::Auto => SearchHorizon::Auto,
        DUpArg::Fixed(d) => SearchHorizon::Fixed(d),
    };
    match args.method {
        HorizonMethodArg::Posterior => {
            cfg.draws = args.draws;
            let samples = sample_dm(post, &cfg)?;
            let interval = posterior_interval_dm(&samples, args.level)?;
            to_json_line(&PosteriorDaysReport {
                target: args.target,
                method: "posterior",
                d0: post.d0,
                n_users: post.n_users,
                point,
                lo: interval.lo - post.d0,
                hi: interval.hi - post.d0,
                hi_open: interval.hi_open,
                censor_fraction: interval.censor_fraction,
                d_up: samples.d_up,
                draws: args.draws,
                level: args.level,
            })
        }
        HorizonMethodArg::Inversion => {
            cfg.trajectories = args.draws;
            let band = global_band(post, &cfg)?;
            let interval = invert_band(&band, args.target);
            to_json_line(&InversionDaysReport {
                target: args.target,
                method: "inversion",
                d0: post.d0,
                n_users: post.n_users,
                point,
                lo: interval.lo_day - post.d0,
                hi: interval.hi_day - post.d0,
                lo_open: interval.lo_open,
                hi_open: interval.hi_open,
                d_up: band.days.len() as u32,
                trajectories: args.draws,
                epsilon: args.epsilon,
            })
        }
    }
}

pub fn simulate(args: &SimulateArgs, seed: u64) -> Result<()> {
    if matches!(args.model, GeneratorArg::Be | GeneratorArg::Tg) && args.r != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "--r applies only to the nb model (got {})",
            args.r
        )));
    }
    let csv = match args.model {
        GeneratorArg::Be => {
            let hyper = HyperParams::with_unit_dispersion(args.alpha, args.c, args.beta)?;
            sbsp::panel_to_long_csv(&simulate_be(&hyper, args.days, seed)?)
        }
        GeneratorArg::Tg => {
            let hyper = HyperParams::with_unit_dispersion(args.alpha, args.c, args.beta)?;
            series_to_aggregate_csv(&simulate_tg(&hyper, args.days, seed)?)
        }
        GeneratorArg::Nb => {
            let hyper = HyperParams::new(args.alpha, args.c, args.beta, args.r)?;
            sbsp::panel_to_long_csv(&simulate_nb(&hyper, args.days, seed)?)
        }
        GeneratorArg::Zipf => {
            let cfg = ZipfConfig {
                tau: args.tau,
                n_users: args.n_users,
                days: args.days,
            };
            sbsp::panel_to_long_csv(&simulate_zipf(&cfg, seed)?)
        }
    };
    write_output(args.output.as_deref(), &csv)
}
