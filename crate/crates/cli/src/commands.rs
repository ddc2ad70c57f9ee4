//! One function per subcommand, each producing a report and plot data.

use std::path::Path;

use ergo_core::coupling::{coupling_bound_curve, operator_v_spectral, simple_coupling_tail, vaserstein_batch};
use ergo_core::deviations::{
    ld_tail_exact, rate_function_table, CgfEvaluator, LdTailOptions, LegendreOptions,
};
use ergo_core::ergodicity::{contraction_report, convergence_envelope, invariant_measure, InvariantMethod};
use ergo_core::limits::{
    asymptotic_variance, finite_n_variance, lln_clt_experiment, ExperimentMode, DEFAULT_VARIANCE_TOLERANCE,
};
use ergo_core::poisson::{
    solve_dirichlet_potential, solve_whole, solve_whole_potential, BoundaryProblem, MonteCarloOptions,
    PoissonSolution, SolveMethod,
};
use ergo_core::{Distribution, Observable, SeedSpec};
use serde_json::{json, Value};

use crate::model::{parse_model_str, Model};
use crate::report::{matrix, num, nums, SeedRecord};
use crate::{
    AnalyzeArgs, CliError, Command, CoupleArgs, LdpArgs, LimitsArgs, Method, Mode, Output, PlotData,
    PoissonArgs, Report,
};

pub fn run(command: &Command) -> Result<Output, CliError> {
    match command {
        Command::Analyze(a) => analyze(a),
        Command::Couple(a) => couple(a),
        Command::Limits(a) => limits(a),
        Command::Ldp(a) => ldp(a),
        Command::Poisson(a) => poisson(a),
    }
}

fn load(name: &str, path: &Path) -> Result<(Model, Report), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Parse { line: 0, message: "model file is not UTF-8".into() })?;
    let model = parse_model_str(&text)?;
    Ok((model, Report::new(name, &path.display().to_string(), &bytes)))
}

fn analyze(a: &AnalyzeArgs) -> Result<Output, CliError> {
    let (model, mut report) = load("analyze", &a.model)?;
    report.arg("n_max", a.n_max);
    report.arg("n0", a.n0);
    let chain = &model.chain;

    let c = contraction_report(chain, a.n0)?;
    report.put("kappa_n0", num(c.kappa_n0));
    report.put("kappa", num(c.kappa));
    report.put("kappa0", num(c.kappa0));
    let pairwise: Vec<Vec<f64>> = c.pairwise.row_iter().map(|r| r.iter().copied().collect()).collect();
    report.put("pairwise_kappa", matrix(&pairwise));

    let inv = invariant_measure(chain, InvariantMethod::LinearSolve)?;
    report.put("invariant", nums(inv.measure.weights()));
    report.put("invariant_defect", num(inv.defect));
    if let Some(w) = &inv.warning {
        report.warn(w);
    }
    match invariant_measure(chain, InvariantMethod::Cesaro) {
        Ok(ces) => {
            let gap: f64 = ces.measure.weights().iter().zip(inv.measure.weights()).map(|(x, y)| (x - y).abs()).sum();
            report.put("cesaro_gap", num(gap));
        }
        Err(e) => report.warn(format!("Cesaro averages: {e}")),
    }

    let env = convergence_envelope(chain, a.n_max)?;
    if env.vacuous {
        report.warn(ergo_core::Warning::VacuousBound);
    }
    report.put("worst_tv", nums(&env.worst_tv));
    report.put("envelope_bound", nums(&env.bound));
    report.put("envelope_holds", env.holds());

    let rv = operator_v_spectral(chain);
    report.put("r_v", num(rv.radius));
    report.put("r_v_norm", num(rv.norm));
    report.put("r_v_converged", rv.converged);
    if !rv.converged {
        report.warn(ergo_core::Warning::NoConvergence { iterations: rv.iterations });
    }

    let mut plot = PlotData::new(&["n", "worst_tv", "kappa_bound", "r_v_power"]);
    for n in 0..=a.n_max {
        plot.rows.push(vec![n as f64, env.worst_tv[n], env.bound[n], rv.radius.powi(n as i32)]);
    }
    Ok(Output { report, plot })
}

fn couple(a: &CoupleArgs) -> Result<Output, CliError> {
    let (model, mut report) = load("couple", &a.model)?;
    let vaserstein = a.vaserstein;
    report.arg("from", a.from.as_str());
    report.arg("to", a.to.as_str());
    report.arg("kind", if vaserstein { "vaserstein" } else { "simple" });
    report.arg("n_max", a.n_max);
    let chain = &model.chain;

    if !vaserstein {
        let x1 = model.state(&a.from)?;
        let x2 = model.state(&a.to)?;
        let t = simple_coupling_tail(chain, x1, x2, a.n_max)?;
        if t.vacuous {
            report.warn(ergo_core::Warning::VacuousBound);
        }
        report.put("kappa0", num(t.kappa0));
        report.put("tail", nums(&t.tail));
        report.put("bound", nums(&t.bound));
        report.put("bound_holds", t.holds());
        let mut plot = PlotData::new(&["n", "tail", "bound"]);
        for n in 0..=a.n_max {
            plot.rows.push(vec![n as f64, t.tail[n], t.bound[n]]);
        }
        return Ok(Output { report, plot });
    }

    report.arg("paths", a.paths);
    report.arg("seed", a.seed);
    let mu1: Distribution = model.law(&a.from)?;
    let mu2: Distribution = model.law(&a.to)?;
    let bound = coupling_bound_curve(chain, &mu1, &mu2, a.n_max)?;
    let seed = SeedSpec::new(a.seed, 0);
    let sim = vaserstein_batch(chain, &mu1, &mu2, a.n_max, a.paths, seed)?;
    report.seed = Some(SeedRecord { master_seed: a.seed, stream_id: 0, substreams: a.paths as u64 });
    let m = a.paths.max(1) as f64;
    let dominated = bound.iter().zip(&sim.decoupled).all(|(b, f)| {
        let p = b.clamp(0.0, 1.0);
        *f - 3.0 * (p * (1.0 - p) / m).sqrt() <= *b + 1e-12
    });
    let rv = operator_v_spectral(chain);
    report.put("bound", nums(&bound));
    report.put("decoupled_frequency", nums(&sim.decoupled));
    report.put("bound_dominates", dominated);
    report.put("violations", sim.violations);
    report.put("r_v", num(rv.radius));
    let mut plot = PlotData::new(&["n", "bound", "decoupled_frequency"]);
    for n in 0..=a.n_max {
        plot.rows.push(vec![n as f64, bound[n], sim.decoupled[n]]);
    }
    Ok(Output { report, plot })
}

fn initial(model: &Model, init: &Option<String>) -> Result<Distribution, CliError> {
    match init {
        Some(name) => model.law(name),
        None => Ok(Distribution::point(model.chain.len(), 0)),
    }
}

fn limits(a: &LimitsArgs) -> Result<Output, CliError> {
    let (model, mut report) = load("limits", &a.model)?;
    let mode = match a.mode {
        Mode::Mean => ExperimentMode::Mean,
        Mode::Clt => ExperimentMode::Clt,
    };
    report.arg("observable", a.observable.as_str());
    report.arg("mode", if mode == ExperimentMode::Mean { "mean" } else { "clt" });
    report.arg("n", a.n);
    report.arg("replicas", a.replicas);
    report.arg("seed", a.seed);
    if let Some(i) = &a.init {
        report.arg("init", i.as_str());
    }
    let chain = &model.chain;
    let f = model.observable(&a.observable)?;
    let init = initial(&model, &a.init)?;

    let var = asymptotic_variance(chain, &f, DEFAULT_VARIANCE_TOLERANCE)?;
    report.put("stationary_mean", num(var.stationary_mean));
    report.put("sigma2", num(var.sigma2));
    report.put("sigma2_truncation_lag", var.truncation_n);
    report.put("sigma2_tail_bound", num(var.tail_bound));
    report.put("finite_n_variance", num(finite_n_variance(chain, &f, a.n)?));

    let exp = lln_clt_experiment(chain, &f, a.n, a.replicas, mode, &init, SeedSpec::new(a.seed, 0))?;
    report.seed = Some(SeedRecord { master_seed: a.seed, stream_id: 0, substreams: a.replicas as u64 });
    let m = exp.samples.len() as f64;
    let mean = exp.samples.iter().sum::<f64>() / m;
    let var_s = exp.samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
    report.put("sample_mean", num(mean));
    report.put("sample_variance", num(var_s));
    let key = if mode == ExperimentMode::Mean { "max_deviation" } else { "ks_distance" };
    report.put(key, num(exp.statistic));

    let mut plot = PlotData::new(&["replica", "value"]);
    for (i, s) in exp.samples.iter().enumerate() {
        plot.rows.push(vec![i as f64, *s]);
    }
    Ok(Output { report, plot })
}

fn ldp(a: &LdpArgs) -> Result<Output, CliError> {
    let (model, mut report) = load("ldp", &a.model)?;
    report.arg("observable", a.observable.as_str());
    report.arg("beta_min", num(a.beta_min));
    report.arg("beta_max", num(a.beta_max));
    report.arg("grid", a.grid);
    let chain = &model.chain;
    let f = model.observable(&a.observable)?;
    let eval = CgfEvaluator::new(chain, &f)?;

    let step = 1e-3;
    let (hp, h0, hm) = (eval.h(step), eval.h(0.0), eval.h(-step));
    report.put("h_at_zero", num(h0));
    report.put("h_prime_at_zero", num((hp - hm) / (2.0 * step)));
    report.put("h_second_at_zero", num((hp - 2.0 * h0 + hm) / (step * step)));

    let table = rate_function_table(&eval, a.beta_min, a.beta_max, a.grid)?;
    report.put("beta", nums(&table.beta_grid));
    report.put("h", nums(&table.h_values));
    report.put("alpha", nums(&table.alpha_grid));
    report.put("rate", nums(&table.l_values));
    report.put("min_second_difference", num(table.min_second_difference()));

    if let (Some(eps), Some(n)) = (a.epsilon, a.n) {
        report.arg("epsilon", num(eps));
        report.arg("n", n);
        let x = match &a.init {
            Some(label) => {
                report.arg("init", label.as_str());
                model.state(label)?
            }
            None => 0,
        };
        let opts = LdTailOptions {
            legendre: LegendreOptions {
                beta_min: a.beta_min,
                beta_max: a.beta_max,
                points: a.grid,
                ..Default::default()
            },
            ..Default::default()
        };
        let t = ld_tail_exact(chain, &f, eps, n, x, &opts)?;
        report.put(
            "tail",
            json!({
                "probability": num(t.probability),
                "log_tail_rate": num(t.log_tail_rate),
                "l": num(t.l),
                "l_tilde": num(t.l_tilde),
                "bound": num(t.bound),
                "finite_n_slack": num(t.finite_n_slack),
                "table_cells": t.table_cells as u64,
                "holds": t.holds(),
            }),
        );
    }

    let mut plot = PlotData::new(&["beta", "h"]);
    for (b, h) in table.beta_grid.iter().zip(&table.h_values) {
        plot.rows.push(vec![*b, *h]);
    }
    Ok(Output { report, plot })
}

fn poisson(a: &PoissonArgs) -> Result<Output, CliError> {
    let (model, mut report) = load("poisson", &a.model)?;
    report.arg("observable", a.observable.as_str());
    let chain = &model.chain;
    let f = model.observable(&a.observable)?;
    let potential = a.potential.as_deref().map(|p| model.potential(p)).transpose()?;
    if let Some(p) = &a.potential {
        report.arg("potential", p.as_str());
    }
    let method_name = match a.method {
        Method::Linear => "linear",
        Method::Series => "series",
        Method::Mc => "mc",
    };
    report.arg("method", method_name);

    let solution: PoissonSolution = match &a.boundary {
        Some(name) => {
            report.arg("boundary", name.as_str());
            let boundary = model.boundary(name)?;
            let g = match &a.boundary_data {
                Some(d) => {
                    report.arg("boundary_data", d.as_str());
                    model.observable(d)?
                }
                None => Observable::zeros(chain.len()),
            };
            let method = match a.method {
                Method::Linear => SolveMethod::Linear,
                Method::Series => SolveMethod::Series,
                Method::Mc => {
                    report.arg("paths", a.paths);
                    report.arg("seed", a.seed);
                    report.seed = Some(SeedRecord { master_seed: a.seed, stream_id: 0, substreams: a.paths as u64 });
                    SolveMethod::MonteCarlo(MonteCarloOptions { paths: a.paths, seed: SeedSpec::new(a.seed, 0) })
                }
            };
            let problem = BoundaryProblem::new(chain, &boundary, f, g, potential)?;
            solve_dirichlet_potential(&problem, method)?
        }
        None => {
            report.arg("whole", true);
            if a.method == Method::Mc {
                return Err(CliError::Usage("--method mc needs a boundary".into()));
            }
            match &potential {
                Some(c) => solve_whole_potential(chain, c, &f)?,
                None => solve_whole(chain, &f)?,
            }
        }
    };

    report.put("u", nums(solution.values.values()));
    report.put("residual", num(solution.residual));
    report.put("solver", solution.method.name());
    if let Some(se) = &solution.std_errors {
        report.put("std_errors", nums(se));
    }
    let wp = &solution.wellposedness;
    let opt = |x: Option<f64>| x.map(num).unwrap_or(Value::Null);
    report.wellposed("spectral_radius", opt(wp.spectral_radius));
    report.wellposed("log_spectral_radius", opt(wp.log_spectral_radius));
    report.wellposed("hitting_probability", opt(wp.hitting_probability));
    report.wellposed("series_terms", wp.series_terms.map(Value::from).unwrap_or(Value::Null));
    report.wellposed("cross_check", opt(wp.cross_check));
    report.wellposed("horizon_cap", wp.horizon_cap.map(Value::from).unwrap_or(Value::Null));
    for w in &solution.warnings {
        report.warn(w);
    }

    let mut plot = PlotData::new(&["state", "u"]);
    for (i, u) in solution.values.values().iter().enumerate() {
        plot.rows.push(vec![i as f64, *u]);
    }
    Ok(Output { report, plot })
}
