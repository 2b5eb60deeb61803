//! End-to-end checks of the command-line interface: the subcommands are
//! thin adapters (their outputs diff cleanly against direct library calls),
//! emitted files round-trip through the documented schemas, and reruns with
//! the same seed reproduce the same artifacts.

use std::fs;
use std::path::Path;

use mixclt::cli::parse_and_dispatch;
use mixclt::lattice::{mu_v_formulas, LatticePotential};
use mixclt::mcstat::McReport;
use mixclt::paths::{simulate_srw, simulate_vol_model};
use mixclt::powervar::{power_variation_series, VolModelSpec};

fn run(args: &[&str]) -> i32 {
    parse_and_dispatch(std::iter::once("mixclt").chain(args.iter().copied()))
}

fn report_without_runtime(path: &Path) -> String {
    let mut report: McReport =
        serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    report.runtime_seconds = 0.0;
    report.to_json_pretty()
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(run(&[]), 1);
    assert_eq!(run(&["frobnicate"]), 1);
}

#[test]
fn dobrushin_report_matches_direct_computation() {
    let dir = tempfile::tempdir().unwrap();
    let pot_file = dir.path().join("v.txt");
    fs::write(&pot_file, "0 1\n-1 1\n").unwrap();
    let out = dir.path().join("r.json");
    assert_eq!(
        run(&["dobrushin", "--potential", pot_file.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]),
        0
    );
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(json["mu_v"], 2.0);

    let pot = LatticePotential::new(0, vec![-1.0, 1.0]).unwrap();
    let direct = mu_v_formulas(&pot).unwrap();
    assert_eq!(json["mu_v_formulas"]["direct"].as_f64().unwrap(), direct.direct);
    assert_eq!(json["c_v_sq"].as_f64().unwrap(), 2.0);

    // Malformed potential file: single-line diagnostic, exit 1.
    fs::write(&pot_file, "0 3\n-1 1\n").unwrap();
    assert_eq!(
        run(&["dobrushin", "--potential", pot_file.to_str().unwrap(), "--out", out.to_str().unwrap(), "--quiet"]),
        1
    );
}

#[test]
fn simulate_srw_csv_diffs_against_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("walk.csv");
    assert_eq!(
        run(&["simulate", "srw", "--n", "64", "--seed", "9", "--out", out.to_str().unwrap(), "--quiet"]),
        0
    );
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value"));
    let walk = simulate_srw(64, 9).unwrap();
    for (k, line) in lines.enumerate() {
        assert_eq!(line, format!("{k},{}", walk.positions()[k]));
    }
}

#[test]
fn volmodel_csv_feeds_powervar() {
    let dir = tempfile::tempdir().unwrap();
    let spec_file = dir.path().join("model.toml");
    fs::write(
        &spec_file,
        "[model]\nfamily = \"log_ou\"\nkappa = 2.0\nnu = 0.3\nsigma0 = 1.0\n",
    )
    .unwrap();
    let path_file = dir.path().join("paths.csv");
    assert_eq!(
        run(&[
            "simulate", "volmodel", "--n", "256", "--seed", "21",
            "--spec", spec_file.to_str().unwrap(),
            "--out", path_file.to_str().unwrap(), "--quiet",
        ]),
        0
    );
    let series_file = dir.path().join("series.csv");
    assert_eq!(
        run(&[
            "powervar", "--path", path_file.to_str().unwrap(),
            "--p", "4", "--delta", "0.015625",
            "--out", series_file.to_str().unwrap(), "--quiet",
        ]),
        0
    );
    let text = fs::read_to_string(&series_file).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,v_pd,u_pd"));

    // Same seed, same model: the CLI output matches the direct computation.
    let model = VolModelSpec::log_ou(1.0, 2.0, 0.3);
    let paths = simulate_vol_model(&model, 256, 21).unwrap();
    let series = power_variation_series(&paths.m, &paths.a_increments, 4.0, 0.015625).unwrap();
    let last = lines.last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|f| f.parse().unwrap()).collect();
    assert!((fields[1] - series.v_pd.last().unwrap()).abs() < 1e-9);
    assert!((fields[2] - series.u_pd.last().unwrap()).abs() < 1e-9);

    // A two-column path has no clock; the error names the expected format.
    let plain = dir.path().join("plain.csv");
    fs::write(&plain, "t,value\n0,0\n1,1\n").unwrap();
    assert_eq!(
        run(&[
            "powervar", "--path", plain.to_str().unwrap(),
            "--p", "4", "--delta", "0.5",
            "--out", series_file.to_str().unwrap(), "--quiet",
        ]),
        1
    );
}

#[test]
fn scheme_series_csv_has_drift_column_when_drifted() {
    let dir = tempfile::tempdir().unwrap();
    let spec_file = dir.path().join("model.toml");
    fs::write(
        &spec_file,
        "[model]\nfamily = \"constant\"\nsigma0 = 1.0\nmu_drift = 0.5\nbeta = 0.3\n",
    )
    .unwrap();
    let out = dir.path().join("series.csv");
    assert_eq!(
        run(&[
            "scheme", "--spec", spec_file.to_str().unwrap(),
            "--n", "128", "--reps", "1",
            "--out", out.to_str().unwrap(), "--quiet",
        ]),
        0
    );
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,x_n,bracket,v_n,y_n\n"));
    assert_eq!(text.lines().count(), 130);
}

#[test]
fn limitlaw_draws_are_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        assert_eq!(
            run(&[
                "limitlaw", "sample", "--law", "mixture", "--t", "1", "--c", "2",
                "--n", "500", "--seed", "77", "--out", out.to_str().unwrap(), "--quiet",
            ]),
            0
        );
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("value\n"));
    assert_eq!(text.lines().count(), 501);
}

#[test]
fn verify_reports_are_reproducible_and_honor_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "experiment = \"realized_var_clt\"\nreplications = 300\nsteps = 128\nks_threshold = 0.2\n",
    )
    .unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    for out in [&r1, &r2] {
        assert_eq!(
            run(&[
                "verify", "--config", config.to_str().unwrap(),
                "--seed", "5", "--out", out.to_str().unwrap(), "--quiet",
            ]),
            0
        );
    }
    // Byte-identical up to the wall-clock field.
    assert_eq!(report_without_runtime(&r1), report_without_runtime(&r2));

    let report: McReport = serde_json::from_str(&fs::read_to_string(&r1).unwrap()).unwrap();
    assert_eq!(report.experiment, "realized_var_clt");
    assert_eq!(report.config_echo.replications, 300);
    assert_eq!(report.config_echo.steps, 128);
    assert_eq!(report.config_echo.master_seed, 5);
    assert!(report.passed);

    // Flag overrides win over the file.
    let r3 = dir.path().join("r3.json");
    assert_eq!(
        run(&[
            "verify", "--config", config.to_str().unwrap(),
            "--seed", "5", "--reps", "150", "--n", "64",
            "--out", r3.to_str().unwrap(), "--quiet",
        ]),
        0
    );
    let report: McReport = serde_json::from_str(&fs::read_to_string(&r3).unwrap()).unwrap();
    assert_eq!(report.config_echo.replications, 150);
    assert_eq!(report.config_echo.steps, 64);
}

#[test]
fn verify_emits_cdf_pairs_for_plotting() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let cdf = dir.path().join("cdf.csv");
    assert_eq!(
        run(&[
            "verify", "--experiment", "realized_var_clt",
            "--reps", "200", "--n", "64", "--ks-threshold", "0.2",
            "--seed", "5", "--out", out.to_str().unwrap(),
            "--cdf-out", cdf.to_str().unwrap(), "--quiet",
        ]),
        0
    );
    let text = fs::read_to_string(&cdf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value,sample_cdf,reference_cdf"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|f| f.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 200);
    // Sorted values, empirical CDF climbing to one, reference in [0, 1].
    for pair in rows.windows(2) {
        assert!(pair[1][0] >= pair[0][0]);
        assert!(pair[1][1] > pair[0][1]);
    }
    assert!((rows.last().unwrap()[1] - 1.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r[2])));

    // Experiments without a law comparison cannot emit CDF pairs.
    assert_eq!(
        run(&[
            "verify", "--experiment", "cross_bracket_decay",
            "--reps", "50", "--n", "64",
            "--seed", "5", "--out", out.to_str().unwrap(),
            "--cdf-out", cdf.to_str().unwrap(), "--quiet",
        ]),
        1
    );
}

#[test]
fn verify_failure_still_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    // An impossible distance bar forces a verification failure.
    assert_eq!(
        run(&[
            "verify", "--experiment", "realized_var_clt",
            "--reps", "300", "--n", "128", "--ks-threshold", "0.0001",
            "--seed", "5", "--out", out.to_str().unwrap(), "--quiet",
        ]),
        2
    );
    let report: McReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(!report.passed);

    // Unknown experiment: validation error.
    assert_eq!(
        run(&["verify", "--experiment", "bogus", "--out", out.to_str().unwrap(), "--quiet"]),
        1
    );
}
