//! End-to-end tests of the coshfit binary: exit codes, the JSON report
//! schema, determinism, and agreement with direct library calls.

use std::path::Path;
use std::process::{Command, Output};

fn coshfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coshfit")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path).expect("json report written");
    serde_json::from_str(&text).expect("valid json")
}

/// Runs a command with `--json` into a temp file and returns the report.
fn json_report(args: &[&str]) -> (Output, serde_json::Value) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let mut full: Vec<&str> = args.to_vec();
    let path_str = path.to_str().unwrap().to_string();
    full.push("--json");
    full.push(&path_str);
    let out = coshfit(&full);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = read_json(&path);
    (out, report)
}

fn as_f64(v: &serde_json::Value) -> f64 {
    v.as_f64().expect("numeric field")
}

#[test]
fn no_args_is_a_usage_error() {
    let out = coshfit(&[]);
    assert_eq!(code(&out), 1);
    let text = format!("{}{}", stdout(&out), stderr(&out));
    assert!(text.contains("Usage"), "help text shown: {text}");
}

#[test]
fn help_and_version_are_successes() {
    assert_eq!(code(&coshfit(&["--help"])), 0);
    assert_eq!(code(&coshfit(&["--version"])), 0);
    assert_eq!(code(&coshfit(&["fit", "--help"])), 0);
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = coshfit(&["dist", "--bogus"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn report_schema_has_exactly_the_documented_fields() {
    let (_, report) = json_report(&["dist", "--kind", "cosh", "--at", "0"]);
    let map = report.as_object().unwrap();
    let keys: Vec<&String> = map.keys().collect();
    assert_eq!(keys, ["command", "inputs", "results", "schema_version"]);
    assert_eq!(report["schema_version"], "1");
    assert_eq!(report["command"], "dist");
}

#[test]
fn dist_reports_density_and_cdf() {
    let (out, report) = json_report(&["dist", "--kind", "cosh", "--at", "0"]);
    let pdf = as_f64(&report["results"]["at"]["pdf"]);
    let cdf = as_f64(&report["results"]["at"]["cdf"]);
    assert!((pdf - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    assert_eq!(cdf, 0.5);
    assert!(stdout(&out).contains("pdf = 0.3183098861837907"));
}

#[test]
fn dist_kappa_matches_the_closed_form() {
    let (_, report) =
        json_report(&["dist", "--kind", "skewed", "--tau", "0.25", "--kappa"]);
    let value = as_f64(&report["results"]["kappa"]["value"]);
    let closed = std::f64::consts::PI * (4.0 - 2.0 * std::f64::consts::SQRT_2).sqrt();
    assert!((value - closed).abs() < 1e-8, "kappa {value} vs {closed}");
}

#[test]
fn dist_moments_can_be_undefined() {
    let (out, report) = json_report(&["dist", "--kind", "cauchy", "--moments"]);
    assert!(report["results"]["moments"]["mean"].is_null());
    assert!(stdout(&out).contains("mean = undefined"));

    let (_, report) = json_report(&["dist", "--kind", "cosh", "--sigma", "2", "--moments"]);
    let var = as_f64(&report["results"]["moments"]["variance"]);
    let expected = std::f64::consts::PI.powi(2); // pi^2 sigma^2 / 4 at sigma 2
    assert!((var - expected).abs() < 1e-12);
}

#[test]
fn dist_flag_combinations_are_validated() {
    // skewed needs tau
    assert_eq!(code(&coshfit(&["dist", "--kind", "skewed", "--at", "0"])), 1);
    // no action requested
    assert_eq!(code(&coshfit(&["dist", "--kind", "cosh"])), 1);
    // sampling without a seed
    assert_eq!(code(&coshfit(&["dist", "--kind", "cosh", "--sample", "5"])), 1);
    // tau on a symmetric family without --kappa
    assert_eq!(code(&coshfit(&["dist", "--kind", "cosh", "--tau", "0.3", "--at", "0"])), 1);
}

#[test]
fn dist_sampling_is_seeded_and_matches_the_library() {
    let args = ["dist", "--kind", "cosh", "--sample", "8", "--seed", "3"];
    let one = coshfit(&args);
    let two = coshfit(&args);
    assert_eq!(stdout(&one), stdout(&two));

    let (_, report) = json_report(&args);
    let values: Vec<f64> =
        report["results"]["sample"]["values"].as_array().unwrap().iter().map(as_f64).collect();
    let direct = coshfit::DistSpec::cosh(0.0, 1.0).unwrap().sample(8, 3);
    assert_eq!(values, direct);
}

#[test]
fn fit_agrees_with_the_library_exactly() {
    let (_, report) = json_report(&["fit", "--data", "telephone", "--loss", "logcosh"]);
    let rows = report["results"]["coefficients"].as_array().unwrap();
    let cli_beta: Vec<f64> = rows.iter().map(|r| as_f64(&r["estimate"])).collect();

    let ds = coshfit::builtin("telephone").unwrap();
    let rd = coshfit::RegressionData::from_dataset(&ds).unwrap();
    let direct = coshfit::fit_linear(&rd, &coshfit::LossSpec::LogCosh).unwrap();
    assert_eq!(cli_beta, direct.beta);
    assert_eq!(report["results"]["converged"], true);
    assert_eq!(rows[0]["coefficient"], "intercept");
    assert_eq!(rows[1]["coefficient"], "year");
}

#[test]
fn fit_loads_a_response_only_csv_as_a_location_problem() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("y_only.csv");
    std::fs::write(&csv, "y\n-1\n0\n1\n").unwrap();
    let (_, report) = json_report(&[
        "fit",
        "--data",
        csv.to_str().unwrap(),
        "--response",
        "y",
        "--loss",
        "logcosh",
    ]);
    let rows = report["results"]["coefficients"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["coefficient"], "theta");
    // symmetric data, symmetric loss: the estimate sits at zero
    assert!(as_f64(&rows[0]["estimate"]).abs() < 1e-9);
}

#[test]
fn fit_validates_loss_flags() {
    // huber without its threshold
    assert_eq!(code(&coshfit(&["fit", "--data", "telephone", "--loss", "huber"])), 1);
    // a threshold on a loss that has none
    let out = coshfit(&["fit", "--data", "telephone", "--loss", "l2", "--delta", "1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("huber"));
    // builtin datasets have a fixed response
    let out = coshfit(&["fit", "--data", "telephone", "--response", "calls", "--loss", "l2"]);
    assert_eq!(code(&out), 1);
    // unknown dataset or missing file
    assert_eq!(code(&coshfit(&["fit", "--data", "no_such.csv", "--response", "y", "--loss", "l2"])), 1);
}

#[test]
fn quantile_rejects_non_increasing_taus() {
    let out = coshfit(&["quantile", "--data", "telephone", "--taus", "0.9,0.1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("increasing"));
}

#[test]
fn quantile_audit_is_self_consistent() {
    let (_, report) = json_report(&[
        "quantile",
        "--data",
        "telephone",
        "--taus",
        "0.25,0.5,0.75",
        "--audit",
    ]);
    let fits = report["results"]["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 3);
    let below = report["results"]["audit"]["below"].as_array().unwrap();
    let fractions: Vec<f64> = below.iter().map(|r| as_f64(&r["below_fraction"])).collect();
    let decreases = fractions.windows(2).filter(|w| w[1] < w[0]).count() as u64;
    assert_eq!(report["results"]["audit"]["violations"], decreases);
}

#[test]
fn bootstrap_validates_its_two_modes() {
    // zero replicates
    let out = coshfit(&[
        "bootstrap", "--data", "location25", "--loss", "logcosh", "--reps", "0", "--seed", "1",
    ]);
    assert_eq!(code(&out), 1);
    // parametric flags mixed with data flags
    let out = coshfit(&[
        "bootstrap", "--parametric", "--theta", "0", "--sigma", "1", "--n", "50", "--data",
        "location25", "--reps", "10", "--seed", "1",
    ]);
    assert_eq!(code(&out), 1);
    // neither mode selected
    assert_eq!(code(&coshfit(&["bootstrap", "--reps", "10", "--seed", "1"])), 1);
    // parametric-only flags without --parametric
    let out = coshfit(&[
        "bootstrap", "--theta", "0", "--data", "location25", "--loss", "l2", "--reps", "10",
        "--seed", "1",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bootstrap_is_deterministic_and_matches_the_library() {
    let args = [
        "bootstrap", "--parametric", "--theta", "0", "--sigma", "1", "--n", "40", "--reps",
        "150", "--seed", "42",
    ];
    let one = coshfit(&args);
    let two = coshfit(&args);
    assert_eq!(code(&one), 0);
    assert_eq!(stdout(&one), stdout(&two));

    let (_, report) = json_report(&args);
    let rep = coshfit::parametric_bootstrap(0.0, 1.0, 40, 150, 0.05, 42).unwrap();
    let rows = report["results"]["parameters"].as_array().unwrap();
    assert_eq!(as_f64(&rows[0]["point"]), rep.point[0]);
    assert_eq!(as_f64(&rows[0]["se"]), rep.se[0]);
    assert_eq!(as_f64(&rows[1]["point"]), rep.point[1]);
    assert_eq!(report["results"]["failed"], 0);
}

#[test]
fn bootstrap_data_mode_reports_each_coefficient() {
    let (_, report) = json_report(&[
        "bootstrap", "--data", "location25", "--loss", "logcosh", "--reps", "200", "--seed",
        "7", "--scheme", "cases",
    ]);
    let rows = report["results"]["coefficients"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["parameter"], "theta");
    let se = as_f64(&rows[0]["se"]);
    assert!(se > 0.0 && se < 1.0, "plausible location se, got {se}");
    assert!(as_f64(&rows[0]["ci_lower"]) < as_f64(&rows[0]["ci_upper"]));
}

#[test]
fn gof_fixed_scale_separates_the_families() {
    let (_, gauss) = json_report(&[
        "gof", "--data", "telephone", "--dist", "gaussian", "--scale", "1",
    ]);
    assert_eq!(gauss["results"]["test"]["reject_at_5_percent"], true);
    assert!(as_f64(&gauss["results"]["test"]["p_value"]) < 0.05);

    let (_, cosh) = json_report(&[
        "gof", "--data", "telephone", "--dist", "cosh", "--scale", "1",
    ]);
    assert_eq!(cosh["results"]["test"]["reject_at_5_percent"], false);
    assert!(as_f64(&cosh["results"]["test"]["p_value"]) > 0.05);
}

#[test]
fn gof_free_scale_fits_both_parameters() {
    let (_, report) = json_report(&["gof", "--data", "telephone", "--dist", "cosh"]);
    let sigma = as_f64(&report["results"]["test"]["fitted_sigma"]);
    assert!(sigma > 0.0 && sigma != 1.0, "scale was estimated, got {sigma}");
    let d = as_f64(&report["results"]["test"]["statistic_d"]);
    assert!(d > 0.0 && d < 1.0);
}

#[test]
fn plotdata_writes_one_row_per_point_per_series() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("check.csv");
    let (_, report) = json_report(&[
        "plotdata", "--figure", "check", "--taus", "0.1,0.5,0.9", "--points", "51", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(report["results"]["rows"], 3 * 51);
    let text = std::fs::read_to_string(&out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,value,series");
    assert_eq!(lines.len(), 1 + 3 * 51);
    assert!(text.contains("tau=0.10") && text.contains("tau=0.90"));
}

#[test]
fn plotdata_quantile_pairs_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("qq.csv");
    let (_, report) = json_report(&[
        "plotdata", "--figure", "qq", "--points", "99", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(report["results"]["rows"], 99);
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut prev = f64::NEG_INFINITY;
    for line in text.lines().skip(1) {
        let mut parts = line.split(',');
        let x: f64 = parts.next().unwrap().parse().unwrap();
        let v: f64 = parts.next().unwrap().parse().unwrap();
        assert!(x > prev, "theoretical quantiles increase");
        prev = x;
        assert!(v.is_finite());
        assert_eq!(parts.next().unwrap(), "cosh-vs-gaussian");
    }
}

#[test]
fn plotdata_validates_figure_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("x.csv");
    let out_str = out_path.to_str().unwrap();
    // taus on a figure that has none
    let out = coshfit(&[
        "plotdata", "--figure", "pdfs", "--taus", "0.5", "--out", out_str,
    ]);
    assert_eq!(code(&out), 1);
    // unparseable tau list
    let out = coshfit(&["plotdata", "--figure", "check", "--taus", "", "--out", out_str]);
    assert_eq!(code(&out), 1);
    // unwritable output path
    let out = coshfit(&[
        "plotdata", "--figure", "pdfs", "--out", "/no/such/dir/x.csv",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn repro_emits_every_table() {
    let (_, report) = json_report(&["repro", "--reps", "60", "--boot-reps", "40", "--seed", "1"]);
    let results = &report["results"];
    assert_eq!(results["calibration"].as_array().unwrap().len(), 4);
    assert_eq!(results["location_table"].as_array().unwrap().len(), 3);
    assert_eq!(results["line_table"].as_array().unwrap().len(), 4);
    assert_eq!(results["kappa_table"].as_array().unwrap().len(), 5);
    assert!(as_f64(&results["kappa_max_abs_diff"]) < 1e-8);

    // the goodness-of-fit pattern does not depend on the replicate counts
    let gof = results["gof"].as_array().unwrap();
    assert_eq!(gof[0]["family"], "gaussian");
    assert_eq!(gof[0]["reject_at_5_percent"], true);
    assert_eq!(gof[1]["family"], "cosh");
    assert_eq!(gof[1]["reject_at_5_percent"], false);
    assert_eq!(gof[2]["family"], "cauchy");
    assert_eq!(gof[2]["reject_at_5_percent"], false);

    // every reported fit converged
    for row in results["location_table"].as_array().unwrap() {
        assert_eq!(row["converged"], true);
    }
    for row in results["line_table"].as_array().unwrap() {
        assert_eq!(row["converged"], true);
    }
}

#[test]
fn json_reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, _) in [(&a, 0), (&b, 1)] {
        let out = coshfit(&[
            "bootstrap", "--data", "telephone", "--loss", "l2", "--reps", "120", "--seed",
            "9", "--scheme", "residuals", "--json", path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}
