use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn evtdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evtdyn"))
        .args(args)
        .env_remove("EVTDYN_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn data_rows(csv: &str) -> Vec<&str> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--system",
        "bernoulli",
        "--q",
        "3",
        "--n",
        "1000",
        "--seed",
        "7",
    ];
    let a = evtdyn(&args);
    let b = evtdyn(&args);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(data_rows(&text).len(), 1000);
    for key in ["# system=bernoulli", "# q=3", "# seed=7", "# burn_in=1000"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn noisy_simulation_depends_only_on_the_seed() {
    let run = |seed: &str| {
        evtdyn(&[
            "simulate", "--system", "cat", "--noise", "additive", "--eps", "0.01", "--n", "50",
            "--seed", seed,
        ])
        .stdout
    };
    assert_eq!(run("3"), run("3"));
    assert_ne!(run("3"), run("4"));
}

#[test]
fn diverging_henon_orbit_exits_3() {
    let out = evtdyn(&[
        "simulate", "--system", "henon", "--a", "1.4", "--b", "0.3", "--x0", "10,10",
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("step"), "{}", stderr(&out));
}

#[test]
fn lorenz_orbit_has_three_coordinates() {
    let out = evtdyn(&[
        "simulate", "--system", "lorenz", "--dt", "0.01", "--n", "100000",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 100_000);
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,x1,x2,x3");
    assert!(rows.iter().all(|r| r.split(',').count() == 4));
}

#[test]
fn bernoulli_block_maxima_are_gumbel() {
    let out = evtdyn(&[
        "bm-fit",
        "--system",
        "bernoulli",
        "--q",
        "3",
        "--obs",
        "g1",
        "--zeta",
        "0.7371",
        "--s",
        "1e6",
        "--n",
        "1000",
        "--method",
        "lmom",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["provenance"]["zeta"], "0.7371");
    let xi = v["result"]["xi"].as_f64().unwrap();
    assert!(xi.abs() < 0.1, "xi = {xi}");
    assert!(stderr(&out).contains("xi="));
}

#[test]
fn fitting_a_saved_orbit_matches_fitting_the_system() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = dir.path().join("orbit.csv");
    let sim = evtdyn(&[
        "simulate",
        "--system",
        "cat",
        "--n",
        "200000",
        "--out",
        path_str(&orbit),
    ]);
    assert_eq!(code(&sim), 0);
    let fit = [
        "--obs", "g2", "--zeta", "0.3,0.6", "--n", "500", "--method", "mle",
    ];
    let direct = evtdyn(&[&["bm-fit", "--system", "cat", "--s", "200000"], &fit[..]].concat());
    let file = evtdyn(&[&["bm-fit", "--input", path_str(&orbit)], &fit[..]].concat());
    assert_eq!(code(&direct), 0);
    assert_eq!(code(&file), 0, "{}", stderr(&file));
    assert_eq!(json(&direct)["result"], json(&file)["result"]);
    // the file keeps its phase space, so distances wrap on the torus
    assert_eq!(json(&file)["provenance"]["space"], "torus2");
}

#[test]
fn external_series_fits_a_threshold_model() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("temps.csv");
    let mut text = String::from("temperature\n");
    for i in 0..20_000u64 {
        let u = ((i.wrapping_mul(2_654_435_761) % 1_000_003) as f64 + 0.5) / 1_000_003.0;
        text.push_str(&format!("{}\n", 10.0 - u.ln()));
    }
    std::fs::write(&path, text).unwrap();
    let out = evtdyn(&[
        "pot-fit",
        "--input",
        path_str(&path),
        "--obs",
        "g1",
        "--zeta",
        "10.0",
        "--p",
        "0.98",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["result"]["method"], "mle");
    assert!(v["result"]["threshold"].as_f64().is_some());
    let raw = evtdyn(&["pot-fit", "--input", path_str(&path), "--p", "0.98"]);
    assert_eq!(code(&raw), 0);
    // exponential excesses above the raw threshold
    let xi = json(&raw)["result"]["xi"].as_f64().unwrap();
    assert!(xi.abs() < 0.15, "xi = {xi}");
}

#[test]
fn malformed_csv_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "# note\nx\n1.0\n2.0\nthree\n4.0\n").unwrap();
    let out = evtdyn(&["bm-fit", "--input", path_str(&path), "--n", "2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 5"), "{}", stderr(&out));

    std::fs::write(&path, "1,2\n3\n").unwrap();
    let out = evtdyn(&["bm-fit", "--input", path_str(&path), "--columns", "1"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn rejected_fit_exits_5_only_when_required() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("clustered.csv");
    // every bin maximum is either near 0.5 or near 10: no GEV law fits
    let mut text = String::new();
    for i in 0..20_000u64 {
        let u = (i.wrapping_mul(2_654_435_761) % 1000) as f64 / 1000.0;
        let v = if i % 10 == 0 {
            10.0 * ((i / 10) % 2) as f64 + 0.5 * u
        } else {
            0.1 * u
        };
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(&path, text).unwrap();
    let args = [
        "bm-fit",
        "--input",
        path_str(&path),
        "--n",
        "10",
        "--method",
        "mle",
    ];
    let lenient = evtdyn(&args);
    assert_eq!(code(&lenient), 0);
    assert_eq!(json(&lenient)["result"]["gof"]["pass"], false);
    let strict = evtdyn(&[&args[..], &["--require-gof"]].concat());
    assert_eq!(code(&strict), 5);
    // the fit is still written
    assert!(json(&strict)["result"]["xi"].is_number());
}

#[test]
fn fit_failure_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    std::fs::write(&path, "1\n".repeat(5000)).unwrap();
    let out = evtdyn(&["bm-fit", "--input", path_str(&path), "--n", "10"]);
    assert_eq!(code(&out), 4, "{}", stderr(&out));
}

#[test]
fn configuration_errors_exit_6() {
    // stochastic run without a seed
    assert_eq!(
        code(&evtdyn(&["simulate", "--system", "cantor", "--n", "5"])),
        6
    );
    assert_eq!(code(&evtdyn(&["tipping", "--u-grid", "0:0.1:0.2"])), 6);
    // unknown flag and invalid value
    assert_eq!(
        code(&evtdyn(&["simulate", "--system", "cat", "--bogus", "1"])),
        6
    );
    assert_eq!(
        code(&evtdyn(&["simulate", "--system", "lsv", "--b", "2"])),
        6
    );
    // both sources
    let out = evtdyn(&[
        "bm-fit", "--system", "cat", "--input", "x.csv", "--zeta", "0.1,0.2",
    ]);
    assert_eq!(code(&out), 6);
}

#[test]
fn config_file_is_merged_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\nsystem = bernoulli\nn = 40\nseed = 7\n").unwrap();
    let from_file = evtdyn(&["simulate", "--config", path_str(&cfg)]);
    assert_eq!(code(&from_file), 0, "{}", stderr(&from_file));
    assert_eq!(data_rows(&stdout(&from_file)).len(), 40);
    let overridden = evtdyn(&["simulate", "--config", path_str(&cfg), "--n", "12"]);
    assert_eq!(data_rows(&stdout(&overridden)).len(), 12);

    std::fs::write(&cfg, "system = bernoulli\nwidth = 3\n").unwrap();
    let unknown = evtdyn(&["simulate", "--config", path_str(&cfg)]);
    assert_eq!(code(&unknown), 6);
    assert!(stderr(&unknown).contains("width"), "{}", stderr(&unknown));
}

#[test]
fn extremal_index_at_a_periodic_point() {
    let out = evtdyn(&[
        "ei",
        "--system",
        "bernoulli",
        "--q",
        "3",
        "--zeta",
        "0.5",
        "--p",
        "0.999",
        "--s",
        "1e6",
        "--estimator",
        "sueveges",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let theta = json(&out)["result"]["theta"].as_f64().unwrap();
    assert!((theta - 2.0 / 3.0).abs() < 0.1, "theta = {theta}");
}

#[test]
fn grid_commands_write_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let out = evtdyn(&[
        "recurrence",
        "--system",
        "henon",
        "--columns",
        "1",
        "--s",
        "20000",
        "--zetas",
        "5",
        "--seed",
        "1",
        "--json",
        path_str(&summary),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(data_rows(&text).len(), 5);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 5);

    let out = evtdyn(&[
        "tipping",
        "--u-grid",
        "0.05,0.1",
        "--ensemble",
        "10",
        "--steps",
        "2e4",
        "--block",
        "100",
        "--seed",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text
        .lines()
        .any(|l| l.starts_with("u,") && l.contains("u_c")));
    assert_eq!(data_rows(&text).len(), 2);
}

#[test]
fn thread_count_does_not_change_results() {
    let args = [
        "stability-map",
        "--k",
        "6",
        "--grid",
        "3",
        "--s",
        "2e4",
        "--exceedances",
        "200",
    ];
    let one = evtdyn(&[&args[..], &["--threads", "1"]].concat());
    let two = evtdyn(&[&args[..], &["--threads", "2"]].concat());
    assert_eq!(code(&one), 0, "{}", stderr(&one));
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(data_rows(&stdout(&one)).len(), 9);
}

#[test]
fn dimension_of_the_cantor_set() {
    let out = evtdyn(&[
        "dimension",
        "--system",
        "cantor",
        "--zetas",
        "5",
        "--routes",
        "xi_g3",
        "--alpha",
        "3",
        "--s",
        "2e5",
        "--seed",
        "11",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let d1 = json(&out)["result"]["d1"].as_f64().unwrap();
    assert!((d1 - 0.6309).abs() < 0.1, "d1 = {d1}");
}

#[test]
fn help_lists_every_command() {
    let out = evtdyn(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for c in [
        "simulate",
        "bm-fit",
        "pot-fit",
        "ei",
        "recurrence",
        "dimension",
        "lyapunov",
        "stability-map",
        "tipping",
        "noise-study",
    ] {
        assert!(text.contains(c), "missing {c}");
    }
}
