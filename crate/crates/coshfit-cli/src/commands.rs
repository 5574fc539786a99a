//! One function per subcommand. Each builds a [`Report`] and says whether
//! every fit it ran converged; the caller turns that into the exit code.

use anyhow::{ensure, Context};
use serde_json::{json, Value};

use coshfit::{
    builtin, fit_linear, fit_location, fit_quantiles, kappa, ks_test, ks_test_fixed_scale,
    load_csv, monotonicity_audit, parametric_bootstrap, residuals, BootstrapReport, DistKind,
    DistSpec, FitResult, LossSpec, NamedDataset, RegressionData, ResampleScheme, SmrqParams,
    BUILTIN_NAMES,
};

use crate::report::{num, Report};
use crate::{
    BootstrapArgs, DistArgs, FigureArg, FitArgs, GofArgs, KindArg, LossArg, PlotdataArgs,
    QuantileArgs, ReproArgs, SchemeArg,
};

pub struct Outcome {
    pub report: Report,
    /// false sends exit code 2 after the report is printed
    pub all_converged: bool,
}

impl Outcome {
    fn clean(report: Report) -> Self {
        Outcome { report, all_converged: true }
    }
}

/// Ordered JSON object; insertion order is preserved in output.
fn obj(entries: Vec<(&str, Value)>) -> Value {
    Value::Object(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

fn kind_label(kind: KindArg) -> &'static str {
    match kind {
        KindArg::Cosh => "cosh",
        KindArg::Cauchy => "cauchy",
        KindArg::Gaussian => "gaussian",
        KindArg::Skewed => "skewed",
    }
}

fn dist_kind(kind: KindArg) -> DistKind {
    match kind {
        KindArg::Cosh => DistKind::Cosh,
        KindArg::Cauchy => DistKind::Cauchy,
        KindArg::Gaussian => DistKind::Gaussian,
        KindArg::Skewed => DistKind::SkewedCosh,
    }
}

fn loss_label(loss: LossArg) -> &'static str {
    match loss {
        LossArg::L2 => "l2",
        LossArg::Logcosh => "logcosh",
        LossArg::Huber => "huber",
        LossArg::Cauchy => "cauchy",
        LossArg::Rank => "rank",
    }
}

fn loss_spec(loss: LossArg, delta: Option<f64>) -> anyhow::Result<LossSpec> {
    if loss != LossArg::Huber {
        ensure!(delta.is_none(), "--delta only applies to the huber loss");
    }
    Ok(match loss {
        LossArg::L2 => LossSpec::L2,
        LossArg::Logcosh => LossSpec::LogCosh,
        LossArg::Huber => LossSpec::huber(delta.context("--loss huber requires --delta")?)?,
        LossArg::Cauchy => LossSpec::CauchyLoss,
        LossArg::Rank => LossSpec::Rank,
    })
}

/// Builtin name or CSV path; CSV needs --response to name the y column.
fn load_dataset(data: &str, response: Option<&str>) -> anyhow::Result<NamedDataset> {
    if BUILTIN_NAMES.contains(&data) {
        ensure!(
            response.is_none(),
            "--response only applies to CSV input; '{data}' is a builtin dataset"
        );
        Ok(builtin(data)?)
    } else {
        let response =
            response.context("--response <COLUMN> is required when --data is a CSV path")?;
        Ok(load_csv(data, response)?)
    }
}

struct FittedModel {
    fit: FitResult,
    names: Vec<String>,
    resid: Vec<f64>,
}

/// Location fit when the dataset has no predictors, regression otherwise.
fn fit_model(ds: &NamedDataset, spec: &LossSpec) -> anyhow::Result<FittedModel> {
    match &ds.x {
        None => {
            let fit = fit_location(&ds.y, spec)?;
            let resid = ds.y.iter().map(|y| y - fit.beta[0]).collect();
            Ok(FittedModel { fit, names: vec!["theta".to_string()], resid })
        }
        Some(x) => {
            let rd = RegressionData::new(ds.y.clone(), x.clone())?;
            let fit = fit_linear(&rd, spec)?;
            let resid = residuals(&rd, &fit);
            let mut names = vec!["intercept".to_string()];
            names.extend(ds.column_names.iter().skip(1).cloned());
            Ok(FittedModel { fit, names, resid })
        }
    }
}

fn coefficient_rows(names: &[String], beta: &[f64]) -> Value {
    Value::Array(
        names
            .iter()
            .zip(beta)
            .map(|(n, b)| json!({"coefficient": n, "estimate": num(*b)}))
            .collect(),
    )
}

fn fit_summary(model: &FittedModel) -> Value {
    obj(vec![
        ("coefficients", coefficient_rows(&model.names, &model.fit.beta)),
        ("objective", num(model.fit.objective)),
        ("converged", json!(model.fit.converged)),
        ("iterations", json!(model.fit.iterations)),
        ("gradient_norm", num(model.fit.gradient_norm)),
    ])
}

pub fn dist(a: &DistArgs) -> anyhow::Result<Outcome> {
    let any_action =
        a.at.is_some() || a.inv.is_some() || a.sample.is_some() || a.moments || a.kappa;
    ensure!(
        any_action,
        "nothing to compute: pass at least one of --at, --inv, --sample, --moments, --kappa"
    );
    if a.kappa {
        ensure!(a.tau.is_some(), "--kappa requires --tau");
    }
    if a.sample.is_some() {
        ensure!(a.seed.is_some(), "--sample requires --seed so draws are reproducible");
    } else {
        ensure!(a.seed.is_none(), "--seed only applies to --sample");
    }
    match a.kind {
        KindArg::Skewed => ensure!(a.tau.is_some(), "--kind skewed requires --tau"),
        _ => ensure!(
            a.tau.is_none() || a.kappa,
            "--tau only applies to --kind skewed or --kappa"
        ),
    }

    let spec = match a.kind {
        KindArg::Cosh => DistSpec::cosh(a.theta, a.sigma)?,
        KindArg::Cauchy => DistSpec::cauchy(a.theta, a.sigma)?,
        KindArg::Gaussian => DistSpec::gaussian(a.theta, a.sigma)?,
        KindArg::Skewed => {
            DistSpec::skewed_cosh(a.theta, a.sigma, a.tau.expect("checked above"))?
        }
    };

    let mut inputs = vec![
        ("kind", json!(kind_label(a.kind))),
        ("theta", num(a.theta)),
        ("sigma", num(a.sigma)),
    ];
    if let Some(tau) = a.tau {
        inputs.push(("tau", num(tau)));
    }
    if let Some(seed) = a.seed {
        inputs.push(("seed", json!(seed)));
    }

    let mut results = Vec::new();
    if let Some(x) = a.at {
        results.push((
            "at",
            obj(vec![("x", num(x)), ("pdf", num(spec.pdf(x))), ("cdf", num(spec.cdf(x)))]),
        ));
    }
    if let Some(u) = a.inv {
        results.push(("quantile", obj(vec![("u", num(u)), ("value", num(spec.inv_cdf(u)?))])));
    }
    if let Some(n) = a.sample {
        let seed = a.seed.expect("checked above");
        let values = spec.sample(n, seed);
        results.push((
            "sample",
            obj(vec![
                ("n", json!(n)),
                ("seed", json!(seed)),
                ("values", Value::Array(values.iter().map(|v| num(*v)).collect())),
            ]),
        ));
    }
    if a.moments {
        let m = spec.moments();
        results.push((
            "moments",
            obj(vec![
                ("mean", m.mean.map(num).unwrap_or(Value::Null)),
                ("variance", m.variance.map(num).unwrap_or(Value::Null)),
            ]),
        ));
    }
    if a.kappa {
        let tau = a.tau.expect("checked above");
        results.push(("kappa", obj(vec![("tau", num(tau)), ("value", num(kappa(tau)?))])));
    }

    Ok(Outcome::clean(Report::new("dist", obj(inputs), obj(results))))
}

pub fn fit(a: &FitArgs) -> anyhow::Result<Outcome> {
    let ds = load_dataset(&a.data, a.response.as_deref())?;
    let spec = loss_spec(a.loss, a.delta)?;
    let model = fit_model(&ds, &spec)?;

    let mut inputs = vec![
        ("data", json!(ds.name)),
        ("loss", json!(loss_label(a.loss))),
    ];
    if let Some(d) = a.delta {
        inputs.push(("delta", num(d)));
    }
    let converged = model.fit.converged;
    let report = Report::new("fit", obj(inputs), fit_summary(&model));
    Ok(Outcome { report, all_converged: converged })
}

pub fn quantile(a: &QuantileArgs) -> anyhow::Result<Outcome> {
    let ds = load_dataset(&a.data, a.response.as_deref())?;
    let rd = match &ds.x {
        None => RegressionData::location(ds.y.clone())?,
        Some(x) => RegressionData::new(ds.y.clone(), x.clone())?,
    };
    let params = SmrqParams { c: a.c, h: a.h, s: a.s, v: a.v };
    let qf = fit_quantiles(&rd, &a.taus, params)?;

    let mut names = vec!["intercept".to_string()];
    if ds.x.is_some() {
        names.extend(ds.column_names.iter().skip(1).cloned());
    }

    let rows: Vec<Value> = qf
        .taus
        .iter()
        .zip(&qf.fits)
        .map(|(tau, fr)| {
            let mut row = vec![("tau", num(*tau))];
            for (name, b) in names.iter().zip(&fr.beta) {
                row.push((name.as_str(), num(*b)));
            }
            row.push(("converged", json!(fr.converged)));
            obj(row)
        })
        .collect();

    let mut results = vec![("fits", Value::Array(rows))];
    if a.audit {
        let audit = monotonicity_audit(&qf, &rd)?;
        let fractions: Vec<Value> = audit
            .taus
            .iter()
            .zip(&audit.below_fraction)
            .map(|(tau, f)| json!({"tau": num(*tau), "below_fraction": num(*f)}))
            .collect();
        results.push((
            "audit",
            obj(vec![
                ("below", Value::Array(fractions)),
                ("violations", json!(audit.violations)),
            ]),
        ));
    }

    let inputs = obj(vec![
        ("data", json!(ds.name)),
        ("taus", Value::Array(a.taus.iter().map(|t| num(*t)).collect())),
        ("c", num(a.c)),
        ("h", num(a.h)),
        ("s", num(a.s)),
        ("v", num(a.v)),
        ("audit", json!(a.audit)),
    ]);
    let all_converged = qf.fits.iter().all(|f| f.converged);
    Ok(Outcome { report: Report::new("quantile", inputs, obj(results)), all_converged })
}

/// Per-coefficient bootstrap summary table.
fn bootstrap_rows(names: &[&str], rep: &BootstrapReport) -> Value {
    Value::Array(
        names
            .iter()
            .enumerate()
            .map(|(j, name)| {
                json!({
                    "parameter": name,
                    "point": num(rep.point[j]),
                    "se": num(rep.se[j]),
                    "ci_lower": num(rep.ci_lower[j]),
                    "ci_upper": num(rep.ci_upper[j]),
                })
            })
            .collect(),
    )
}

pub fn bootstrap(a: &BootstrapArgs) -> anyhow::Result<Outcome> {
    if a.parametric {
        ensure!(
            a.data.is_none() && a.response.is_none() && a.loss.is_none() && a.delta.is_none()
                && a.scheme.is_none(),
            "--parametric draws from a Cosh law; data-resampling flags do not apply"
        );
        let theta = a.theta.context("--parametric requires --theta")?;
        let sigma = a.sigma.context("--parametric requires --sigma")?;
        let n = a.n.context("--parametric requires --n")?;
        let rep = parametric_bootstrap(theta, sigma, n, a.reps, a.alpha, a.seed)?;

        let inputs = obj(vec![
            ("mode", json!("parametric")),
            ("theta", num(theta)),
            ("sigma", num(sigma)),
            ("n", json!(n)),
            ("reps", json!(a.reps)),
            ("alpha", num(a.alpha)),
            ("seed", json!(a.seed)),
        ]);
        // n * Var(theta-hat) is the calibration statistic: it should sit
        // near the analytic value 2 sigma^2 for the Cosh MLE
        let n_var = n as f64 * rep.se[0] * rep.se[0];
        let results = obj(vec![
            ("parameters", bootstrap_rows(&["theta", "sigma"], &rep)),
            ("n_times_variance", num(n_var)),
            ("analytic_n_times_variance", num(2.0 * sigma * sigma)),
            ("replicates", json!(rep.replicates)),
            ("failed", json!(rep.failed)),
        ]);
        return Ok(Outcome::clean(Report::new("bootstrap", inputs, results)));
    }

    ensure!(
        a.theta.is_none() && a.sigma.is_none() && a.n.is_none(),
        "--theta, --sigma, and --n only apply with --parametric"
    );
    let data = a.data.as_deref().context("pass either --parametric or --data")?;
    let loss = a.loss.context("--data mode requires --loss")?;
    let ds = load_dataset(data, a.response.as_deref())?;
    let spec = loss_spec(loss, a.delta)?;
    let (rd, names) = match &ds.x {
        None => (RegressionData::location(ds.y.clone())?, vec!["theta".to_string()]),
        Some(x) => {
            let mut names = vec!["intercept".to_string()];
            names.extend(ds.column_names.iter().skip(1).cloned());
            (RegressionData::new(ds.y.clone(), x.clone())?, names)
        }
    };
    let scheme = match a.scheme.unwrap_or(SchemeArg::Cases) {
        SchemeArg::Cases => ResampleScheme::Cases,
        SchemeArg::Residuals => ResampleScheme::Residuals,
    };
    let rep = coshfit::bootstrap_se_scheme(&rd, &spec, a.reps, a.alpha, a.seed, scheme)?;

    let mut inputs = vec![
        ("mode", json!("data")),
        ("data", json!(ds.name)),
        ("loss", json!(loss_label(loss))),
    ];
    if let Some(d) = a.delta {
        inputs.push(("delta", num(d)));
    }
    inputs.push((
        "scheme",
        json!(match scheme {
            ResampleScheme::Cases => "cases",
            ResampleScheme::Residuals => "residuals",
        }),
    ));
    inputs.push(("reps", json!(a.reps)));
    inputs.push(("alpha", num(a.alpha)));
    inputs.push(("seed", json!(a.seed)));

    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let results = obj(vec![
        ("coefficients", bootstrap_rows(&name_refs, &rep)),
        ("replicates", json!(rep.replicates)),
        ("failed", json!(rep.failed)),
    ]);
    Ok(Outcome::clean(Report::new("bootstrap", obj(inputs), results)))
}

fn gof_row(report: &coshfit::GofReport, n: usize) -> Value {
    obj(vec![
        ("family", json!(report.dist.to_string())),
        ("statistic_d", num(report.statistic_d)),
        ("sqrt_n_d", num((n as f64).sqrt() * report.statistic_d)),
        ("p_value", num(report.p_value)),
        ("reject_at_5_percent", json!(report.p_value < 0.05)),
        ("fitted_theta", num(report.fitted.params().theta())),
        ("fitted_sigma", num(report.fitted.params().sigma())),
    ])
}

pub fn gof(a: &GofArgs) -> anyhow::Result<Outcome> {
    ensure!(a.dist != KindArg::Skewed, "--dist must be one of gaussian, cauchy, cosh");
    let ds = load_dataset(&a.data, a.response.as_deref())?;
    let spec = loss_spec(a.fit_loss, a.delta)?;
    let model = fit_model(&ds, &spec)?;
    let kind = dist_kind(a.dist);
    let gof = match a.scale {
        Some(sigma) => ks_test_fixed_scale(&model.resid, kind, sigma)?,
        None => ks_test(&model.resid, kind)?,
    };

    let mut inputs = vec![
        ("data", json!(ds.name)),
        ("fit_loss", json!(loss_label(a.fit_loss))),
        ("dist", json!(kind_label(a.dist))),
    ];
    if let Some(d) = a.delta {
        inputs.push(("delta", num(d)));
    }
    inputs.push((
        "scale",
        a.scale.map(num).unwrap_or_else(|| json!("fitted")),
    ));

    let results = obj(vec![
        ("residual_fit", fit_summary(&model)),
        ("test", gof_row(&gof, model.resid.len())),
    ]);
    let converged = model.fit.converged;
    Ok(Outcome { report: Report::new("gof", obj(inputs), results), all_converged: converged })
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

type Series = (String, Vec<(f64, f64)>);

fn curve(label: &str, xs: &[f64], mut f: impl FnMut(f64) -> anyhow::Result<f64>) -> anyhow::Result<Series> {
    let mut pts = Vec::with_capacity(xs.len());
    for &x in xs {
        pts.push((x, f(x)?));
    }
    Ok((label.to_string(), pts))
}

fn figure_series(a: &PlotdataArgs, taus: &[f64]) -> anyhow::Result<Vec<Series>> {
    let huber = LossSpec::huber(1.345)?;
    match a.figure {
        FigureArg::LossCurves => {
            let xs = linspace(-5.0, 5.0, a.points);
            Ok(vec![
                curve("l1", &xs, |x| Ok(x.abs()))?,
                curve("l2", &xs, |x| Ok(LossSpec::L2.rho(x)?))?,
                curve("logcosh", &xs, |x| Ok(LossSpec::LogCosh.rho(x)?))?,
                curve("huber(1.345)", &xs, |x| Ok(huber.rho(x)?))?,
                curve("cauchy", &xs, |x| Ok(LossSpec::CauchyLoss.rho(x)?))?,
            ])
        }
        FigureArg::PsiCurves => {
            let xs = linspace(-5.0, 5.0, a.points);
            Ok(vec![
                curve("l1", &xs, |x| Ok(x.signum()))?,
                curve("l2", &xs, |x| Ok(LossSpec::L2.psi(x)?))?,
                curve("logcosh", &xs, |x| Ok(LossSpec::LogCosh.psi(x)?))?,
                curve("huber(1.345)", &xs, |x| Ok(huber.psi(x)?))?,
                curve("cauchy", &xs, |x| Ok(LossSpec::CauchyLoss.psi(x)?))?,
            ])
        }
        FigureArg::Pdfs => {
            let xs = linspace(-6.0, 6.0, a.points);
            let cosh = DistSpec::cosh(0.0, 1.0)?;
            let gauss = DistSpec::gaussian(0.0, 1.0)?;
            let cauchy = DistSpec::cauchy(0.0, 1.0)?;
            let skew = DistSpec::skewed_cosh(0.0, 1.0, 0.25)?;
            Ok(vec![
                curve("cosh", &xs, |x| Ok(cosh.pdf(x)))?,
                curve("gaussian", &xs, |x| Ok(gauss.pdf(x)))?,
                curve("cauchy", &xs, |x| Ok(cauchy.pdf(x)))?,
                curve("skewed(0.25)", &xs, |x| Ok(skew.pdf(x)))?,
            ])
        }
        FigureArg::Check => {
            let xs = linspace(-3.0, 3.0, a.points);
            taus.iter()
                .map(|&tau| {
                    let spec = LossSpec::check(tau)?;
                    curve(&format!("tau={tau:.2}"), &xs, |x| Ok(spec.rho(x)?))
                })
                .collect()
        }
        FigureArg::Smrq => {
            let xs = linspace(-3.0, 3.0, a.points);
            taus.iter()
                .map(|&tau| {
                    let spec = LossSpec::smrq(tau)?;
                    curve(&format!("tau={tau:.2}"), &xs, |x| Ok(spec.rho(x)?))
                })
                .collect()
        }
        FigureArg::Qq => {
            let gauss = DistSpec::gaussian(0.0, 1.0)?;
            let cosh = DistSpec::cosh(0.0, 1.0)?;
            let mut pts = Vec::with_capacity(a.points);
            for i in 1..=a.points {
                let u = (i as f64 - 0.5) / a.points as f64;
                pts.push((gauss.inv_cdf(u)?, cosh.inv_cdf(u)?));
            }
            Ok(vec![("cosh-vs-gaussian".to_string(), pts)])
        }
    }
}

pub fn plotdata(a: &PlotdataArgs) -> anyhow::Result<Outcome> {
    ensure!(a.points >= 2, "--points must be at least 2");
    let default_taus = [0.1, 0.25, 0.5, 0.75, 0.9];
    let taus: Vec<f64> = match &a.taus {
        Some(t) => t.clone(),
        None => default_taus.to_vec(),
    };
    let needs_taus = matches!(a.figure, FigureArg::Check | FigureArg::Smrq);
    if needs_taus {
        ensure!(!taus.is_empty(), "--taus must list at least one quantile level");
    } else {
        ensure!(a.taus.is_none(), "--taus only applies to the check and smrq figures");
    }

    let series = figure_series(a, &taus)?;
    let mut text = String::from("x,value,series\n");
    let mut rows = 0usize;
    for (label, pts) in &series {
        for (x, v) in pts {
            text.push_str(&format!("{x},{v},{label}\n"));
            rows += 1;
        }
    }
    std::fs::write(&a.out, text)
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", a.out.display()))?;

    let figure = match a.figure {
        FigureArg::LossCurves => "loss-curves",
        FigureArg::PsiCurves => "psi-curves",
        FigureArg::Pdfs => "pdfs",
        FigureArg::Check => "check",
        FigureArg::Smrq => "smrq",
        FigureArg::Qq => "qq",
    };
    let mut inputs = vec![("figure", json!(figure)), ("points", json!(a.points))];
    if needs_taus {
        inputs.push(("taus", Value::Array(taus.iter().map(|t| num(*t)).collect())));
    }
    let results = obj(vec![
        ("out", json!(a.out.display().to_string())),
        (
            "series",
            Value::Array(series.iter().map(|(label, _)| json!(label)).collect()),
        ),
        ("rows", json!(rows)),
    ]);
    Ok(Outcome::clean(Report::new("plotdata", obj(inputs), results)))
}

pub fn repro(a: &ReproArgs) -> anyhow::Result<Outcome> {
    let mut all_converged = true;

    // sampling calibration: mean of the joint MLE and n*Var(theta-hat)
    // against the analytic 2 sigma^2, for four (theta, sigma) laws
    let calibration_rows = [(0.0, 1.0), (0.0, 3.0), (5.0, 2.0), (5.0, 3.0)];
    let n = 100usize;
    let mut calibration = Vec::new();
    for (i, &(theta, sigma)) in calibration_rows.iter().enumerate() {
        let rep = parametric_bootstrap(theta, sigma, n, a.reps, 0.05, a.seed + i as u64)?;
        let n_var = n as f64 * rep.se[0] * rep.se[0];
        calibration.push(obj(vec![
            ("theta", num(theta)),
            ("sigma", num(sigma)),
            ("mean_theta_hat", num(rep.point[0])),
            ("mean_sigma_hat", num(rep.point[1])),
            ("n_times_variance", num(n_var)),
            ("analytic_n_times_variance", num(2.0 * sigma * sigma)),
            ("failed", json!(rep.failed)),
        ]));
    }

    // 25-point location benchmark: estimate and bootstrap se per loss
    let loc = builtin("location25")?;
    let loc_rd = RegressionData::location(loc.y.clone())?;
    let location_losses: [(&str, LossSpec); 3] = [
        ("l2", LossSpec::L2),
        ("logcosh", LossSpec::LogCosh),
        ("cauchy", LossSpec::CauchyLoss),
    ];
    let mut location_table = Vec::new();
    for (label, spec) in &location_losses {
        let fit = fit_location(&loc.y, spec)?;
        all_converged &= fit.converged;
        let boot = coshfit::bootstrap_se(&loc_rd, spec, a.boot_reps, 0.05, 7)?;
        location_table.push(obj(vec![
            ("loss", json!(label)),
            ("estimate", num(fit.beta[0])),
            ("se", num(boot.se[0])),
            ("ci_lower", num(boot.ci_lower[0])),
            ("ci_upper", num(boot.ci_upper[0])),
            ("converged", json!(fit.converged)),
        ]));
    }

    // yearly-calls line: slope and intercept per loss
    let tel = builtin("telephone")?;
    let tel_rd = RegressionData::from_dataset(&tel)?;
    let line_losses: [(&str, LossSpec); 4] = [
        ("l2", LossSpec::L2),
        ("logcosh", LossSpec::LogCosh),
        ("huber(0.1)", LossSpec::huber(0.1)?),
        ("rank", LossSpec::Rank),
    ];
    let mut line_table = Vec::new();
    for (label, spec) in &line_losses {
        let fit = fit_linear(&tel_rd, spec)?;
        all_converged &= fit.converged;
        line_table.push(obj(vec![
            ("loss", json!(label)),
            ("slope", num(fit.beta[1])),
            ("intercept", num(fit.beta[0])),
            ("converged", json!(fit.converged)),
        ]));
    }

    // scale-correction factors: quadrature kappa against the closed forms
    let pi = std::f64::consts::PI;
    let root2 = std::f64::consts::SQRT_2;
    let kappa_rows = [
        (0.0, pi * root2),
        (0.25, pi * (4.0 - 2.0 * root2).sqrt()),
        (0.5, pi),
        (0.75, pi * (4.0 - 2.0 * root2).sqrt()),
        (1.0, pi * root2),
    ];
    let mut kappa_table = Vec::new();
    let mut kappa_max_diff = 0.0f64;
    for &(tau, closed) in &kappa_rows {
        let value = kappa(tau)?;
        kappa_max_diff = kappa_max_diff.max((value - closed).abs());
        kappa_table.push(obj(vec![
            ("tau", num(tau)),
            ("kappa", num(value)),
            ("closed_form", num(closed)),
        ]));
    }

    // residual goodness of fit: least-squares residuals from the yearly
    // line, each family tested at fixed scale 1 so the tails decide
    let l2 = fit_linear(&tel_rd, &LossSpec::L2)?;
    all_converged &= l2.converged;
    let resid = residuals(&tel_rd, &l2);
    let mut gof_table = Vec::new();
    for kind in [DistKind::Gaussian, DistKind::Cosh, DistKind::Cauchy] {
        let test = ks_test_fixed_scale(&resid, kind, 1.0)?;
        gof_table.push(gof_row(&test, resid.len()));
    }

    let inputs = obj(vec![
        ("reps", json!(a.reps)),
        ("boot_reps", json!(a.boot_reps)),
        ("seed", json!(a.seed)),
        ("n", json!(n)),
        ("alpha", num(0.05)),
        ("location_se_seed", json!(7)),
        ("huber_delta", num(0.1)),
        ("gof_scale", num(1.0)),
    ]);
    let results = obj(vec![
        ("calibration", Value::Array(calibration)),
        ("location_table", Value::Array(location_table)),
        ("line_table", Value::Array(line_table)),
        ("kappa_table", Value::Array(kappa_table)),
        ("kappa_max_abs_diff", num(kappa_max_diff)),
        ("gof", Value::Array(gof_table)),
    ]);
    Ok(Outcome { report: Report::new("repro", inputs, results), all_converged })
}
