//! Benchmark suites: simulate pilots, score estimators, emit a long CSV.
//!
//! Replicates run on a small worker pool; each replicate derives its own
//! seed from the global one, and rows are emitted in replicate order no
//! matter which worker finished first, so output is reproducible for a
//! fixed seed and thread count is a pure throughput knob.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use sbsp::{
    accuracy, build_posterior, expected_unseen, fit_curve, fit_mml, good_toulmin, jackknife,
    series_from_panel, simulate_be, simulate_nb, simulate_tg, simulate_zipf, stats_from_panel,
    tg_stats_from_series, Error, FirstTriggerSeries, FitConfig, FrequencySpectrum, HyperParams,
    Model, PosteriorState, Result, ZipfConfig,
};

use crate::{BenchmarkArgs, SuiteArg};

pub fn run(args: &BenchmarkArgs, seed: u64) -> Result<()> {
    let methods = resolve_methods(args)?;
    let threads = args.threads.unwrap_or_else(|| {
        thread::available_parallelism().map_or(1, |n| n.get())
    });
    let csv = match args.suite {
        SuiteArg::Zipf => zipf_suite(args, seed, &methods, threads),
        SuiteArg::Model => model_suite(args, seed, &methods, threads),
    };
    crate::commands::write_output(args.output.as_deref(), &csv)
}

fn resolve_methods(args: &BenchmarkArgs) -> Result<Vec<String>> {
    let (allowed, default): (&[&str], &[&str]) = match args.suite {
        SuiteArg::Zipf => (&["sbsp", "gt", "j1", "j4"], &["sbsp", "gt", "j1", "j4"]),
        SuiteArg::Model => (&["mml", "curve"], &["mml", "curve"]),
    };
    let methods: Vec<String> = match &args.methods {
        Some(m) => m.clone(),
        None => default.iter().map(|s| s.to_string()).collect(),
    };
    if methods.is_empty() {
        return Err(Error::InvalidArgument("no methods selected".into()));
    }
    for m in &methods {
        if !allowed.contains(&m.as_str()) {
            return Err(Error::InvalidArgument(format!(
                "unknown method '{m}' for this suite, expected one of {allowed:?}"
            )));
        }
    }
    Ok(methods)
}

/// Stateless seed derivation, one independent lane per replicate.
fn derived_seed(base: u64, lane: u64) -> u64 {
    let mut z = base ^ lane.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `jobs` closures over a worker pool and returns their outputs in
/// job order.
fn run_jobs<F>(jobs: usize, threads: usize, job: F) -> Vec<String>
where
    F: Fn(usize) -> String + Sync,
{
    let results: Vec<Mutex<Option<String>>> = (0..jobs).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, jobs.max(1));
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs {
                    break;
                }
                let out = job(i);
                *results[i].lock().expect("result slot") = Some(out);
            });
        }
    });
    results
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("job ran"))
        .collect()
}

/// One scored estimate: the CSV tail `estimate,v,status`.
fn score(truth: u64, estimate: Result<f64>) -> String {
    match estimate {
        Ok(est) => {
            let v = if truth > 0 {
                accuracy(truth, est).expect("positive truth")
            } else {
                f64::NAN
            };
            format!("{est:.4},{v:.4},ok")
        }
        Err(err) => {
            let msg = err.to_string().replace(',', ";");
            format!("NaN,NaN,error: {msg}")
        }
    }
}

fn zipf_suite(args: &BenchmarkArgs, seed: u64, methods: &[String], threads: usize) -> String {
    let (d0, d1) = (args.d0, args.d1);
    let cells: Vec<(usize, f64)> = args
        .taus
        .iter()
        .enumerate()
        .flat_map(|(ti, &tau)| (0..args.reps).map(move |_| (ti, tau)))
        .collect();

    let rows = run_jobs(cells.len(), threads, |i| {
        let (ti, tau) = cells[i];
        let rep = i - ti * args.reps;
        let cell_seed = derived_seed(seed, i as u64);
        let cfg = ZipfConfig {
            tau,
            n_users: args.n_users,
            days: d0 + d1,
        };
        let prepared = simulate_zipf(&cfg, cell_seed).and_then(|panel| {
            let restricted = panel.restrict(d0)?;
            let truth = panel.n_users() - restricted.n_users();
            let spectrum = FrequencySpectrum::from_panel(&restricted);
            Ok((restricted, truth, spectrum))
        });
        let mut out = String::new();
        for (mi, method) in methods.iter().enumerate() {
            let tail = match &prepared {
                Ok((restricted, truth, spectrum)) => {
                    let estimate = match method.as_str() {
                        "gt" => Ok(good_toulmin(spectrum, d1)),
                        "j1" => jackknife(spectrum, 1),
                        "j4" => jackknife(spectrum, 4),
                        _ => {
                            let fit_seed = derived_seed(cell_seed, 1 + mi as u64);
                            stats_from_panel(restricted, Model::Be)
                                .and_then(|(stats, _)| {
                                    let cfg = FitConfig::with_seed(fit_seed);
                                    let fit = fit_mml(&stats, &cfg)?;
                                    build_posterior(&stats, &fit.hyper)
                                })
                                .map(|post| expected_unseen(&post, d1))
                        }
                    };
                    score(*truth, estimate)
                }
                Err(err) => {
                    let msg = err.to_string().replace(',', ";");
                    format!("NaN,NaN,error: {msg}")
                }
            };
            out.push_str(&format!("{rep},{tau},{method},{d0},{d1},"));
            match &prepared {
                Ok((_, truth, _)) => out.push_str(&truth.to_string()),
                Err(_) => out.push_str("NaN"),
            }
            out.push_str(&format!(",{tail}\n"));
        }
        out
    });

    let mut csv = String::from("replicate,tau,method,d0,d1,true_u,estimate,v,status\n");
    csv.extend(rows);
    csv
}

/// Generators of the well-specified suite, with the priors they draw from.
fn model_generators() -> Vec<(Model, HyperParams)> {
    vec![
        (
            Model::Be,
            HyperParams::with_unit_dispersion(0.5, 2.0, 1.0).expect("valid prior"),
        ),
        (
            Model::Tg,
            HyperParams::with_unit_dispersion(0.5, 2.0, 1.0).expect("valid prior"),
        ),
        (
            Model::Nb,
            HyperParams::new(0.5, 2.0, 1.0, 2.0).expect("valid prior"),
        ),
    ]
}

fn truncate_series(series: &FirstTriggerSeries, d0: u32) -> FirstTriggerSeries {
    FirstTriggerSeries {
        new_users_per_day: series.new_users_per_day[..d0 as usize].to_vec(),
        total_triggers_per_day: series
            .total_triggers_per_day
            .as_ref()
            .map(|t| t[..d0 as usize].to_vec()),
    }
}

/// Pilot view of one simulated replicate: enough to run either fit route.
struct ModelCell {
    truth: u64,
    series: FirstTriggerSeries,
    stats: sbsp::SufficientStats,
}

fn model_cell(model: Model, hyper: &HyperParams, d0: u32, d1: u32, seed: u64) -> Result<ModelCell> {
    match model {
        Model::Tg => {
            let series = simulate_tg(hyper, d0 + d1, seed)?;
            let truth = series.n_users() - series.n_users_through(d0);
            let truncated = truncate_series(&series, d0);
            let stats = tg_stats_from_series(&truncated);
            Ok(ModelCell {
                truth,
                series: truncated,
                stats,
            })
        }
        Model::Be | Model::Nb => {
            let simulate: fn(&HyperParams, u32, u64) -> Result<sbsp::ActivityPanel> =
                if model == Model::Be {
                    simulate_be
                } else {
                    simulate_nb
                };
            let panel = simulate(hyper, d0 + d1, seed)?;
            let restricted = panel.restrict(d0)?;
            let truth = panel.n_users() - restricted.n_users();
            let (stats, _) = stats_from_panel(&restricted, model)?;
            Ok(ModelCell {
                truth,
                series: series_from_panel(&restricted),
                stats,
            })
        }
    }
}

fn model_suite(args: &BenchmarkArgs, seed: u64, methods: &[String], threads: usize) -> String {
    let (d0, d1) = (args.d0, args.d1);
    let generators = model_generators();
    let jobs = generators.len() * args.reps;

    let rows = run_jobs(jobs, threads, |i| {
        let (gi, rep) = (i / args.reps, i % args.reps);
        let (model, hyper) = &generators[gi];
        let cell_seed = derived_seed(seed, i as u64);
        let prepared = model_cell(*model, hyper, d0, d1, cell_seed);
        let mut out = String::new();
        for (mi, method) in methods.iter().enumerate() {
            let tail = match &prepared {
                Ok(cell) => {
                    let cfg = FitConfig::with_seed(derived_seed(cell_seed, 1 + mi as u64));
                    let estimate = match method.as_str() {
                        "mml" => fit_mml(&cell.stats, &cfg)
                            .and_then(|fit| build_posterior(&cell.stats, &fit.hyper))
                            .map(|post| expected_unseen(&post, d1)),
                        _ => fit_curve(&cell.series, *model, &cfg)
                            .and_then(|fit| {
                                PosteriorState::from_counts(
                                    *model,
                                    &fit.hyper,
                                    d0,
                                    cell.series.n_users(),
                                )
                            })
                            .map(|post| expected_unseen(&post, d1)),
                    };
                    score(cell.truth, estimate)
                }
                Err(err) => {
                    let msg = err.to_string().replace(',', ";");
                    format!("NaN,NaN,error: {msg}")
                }
            };
            out.push_str(&format!("{rep},{},{method},{d0},{d1},", model.name()));
            match &prepared {
                Ok(cell) => out.push_str(&cell.truth.to_string()),
                Err(_) => out.push_str("NaN"),
            }
            out.push_str(&format!(",{tail}\n"));
        }
        out
    });

    let mut csv = String::from("replicate,model,method,d0,d1,true_u,estimate,v,status\n");
    csv.extend(rows);
    csv
}
