//! Commands, ingestion and the experiment harness.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command as Process;

use clap::Parser;
use sphcard::estimation::sigma2_mm1;
use sphcard::specfun::surface_area;
use sphcard::SphereSample;
use sphcard_cli::commands::{gof_config, run, Cli, Command};
use sphcard_cli::error::{CliError, EXIT_DEGENERATE, EXIT_USAGE};
use sphcard_cli::experiment::{clopper_pearson, run_experiment, ExperimentSpec};
use sphcard_cli::ingest::{load_from_reader, orbital_to_normal, IngestFormat, IngestSpec};
use sphcard_cli::io::{read_sample_binary, write_sample_binary};

fn cli(args: &[&str]) -> Cli {
    let mut full = vec!["sphcard"];
    full.extend_from_slice(args);
    Cli::try_parse_from(full).unwrap()
}

fn run_ok(args: &[&str]) -> Vec<u8> {
    run(&cli(args)).unwrap()
}

fn temp_file(name: &str, bytes: &[u8]) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("sphcard-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::File::create(&path).unwrap().write_all(bytes).unwrap();
    path
}

fn ingest(text: &str, spec: &IngestSpec) -> Result<sphcard_cli::ingest::Ingested, CliError> {
    load_from_reader(text.as_bytes(), spec)
}

fn parse_csv_sample(bytes: &[u8]) -> SphereSample {
    ingest(std::str::from_utf8(bytes).unwrap(), &IngestSpec::new(IngestFormat::VectorsCsv))
        .unwrap()
        .sample
}

#[test]
fn orbital_normal_examples() {
    let v = orbital_to_normal(0.0, 1.3).unwrap();
    assert_eq!(v.as_slice(), &[0.0, -0.0, 1.0]);
    let v = orbital_to_normal(PI / 2.0, 0.0).unwrap();
    assert!(v.as_slice()[0].abs() < 1e-16 && (v.as_slice()[1] + 1.0).abs() < 1e-16);
    let v = orbital_to_normal(PI, PI / 2.0).unwrap();
    assert!(v.as_slice()[0].abs() < 1e-15 && v.as_slice()[1].abs() < 1e-15 && v.as_slice()[2] == -1.0);
    assert!(orbital_to_normal(-0.1, 0.0).is_err());
    assert!(orbital_to_normal(0.1, 2.0 * PI).is_err());
}

#[test]
fn ingestion_examples() {
    let exact = "0,0,1\n1,0,0\n0,-1,0\n";
    let got = ingest(exact, &IngestSpec::new(IngestFormat::VectorsCsv)).unwrap();
    assert_eq!((got.sample.n(), got.dropped.len(), got.renormalized), (3, 0, 0));

    let off = "x1,x2,x3\n0,0,1.0000004\n0,0,1.1\n";
    let got = ingest(off, &IngestSpec::new(IngestFormat::VectorsCsv)).unwrap();
    assert_eq!((got.sample.n(), got.renormalized), (1, 1));
    assert_eq!(got.sample.row(0), &[0.0, 0.0, 1.0]);
    assert_eq!(got.dropped[0].row, 1);

    let angles = format!("theta\n{}\n", PI / 2.0);
    let got = ingest(&angles, &IngestSpec::new(IngestFormat::AnglesCsvD1)).unwrap();
    assert!(got.sample.row(0)[0].abs() < 1e-16 && got.sample.row(0)[1] == 1.0);

    let mut deg = IngestSpec::new(IngestFormat::LatlonCsvD2);
    deg.degrees = true;
    let got = ingest("longitude,colatitude\n90,90\n", &deg).unwrap();
    let x = got.sample.row(0);
    assert!(x[0].abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15 && x[2].abs() < 1e-15);
}

#[test]
fn orbital_ingestion() {
    let spec = IngestSpec::new(IngestFormat::OrbitalElementsCsv);
    let text = "name,i,Omega\nC/1 A,90,0\nC/2-B fragment,10,20\n";
    let got = ingest(text, &spec).unwrap();
    assert_eq!(got.sample.n(), 2);
    assert!((got.sample.row(0)[1] + 1.0).abs() < 1e-15);

    let mut excl = spec.clone();
    excl.exclude = Some(regex::Regex::new("fragment").unwrap());
    let got = ingest(text, &excl).unwrap();
    assert_eq!((got.sample.n(), got.dropped.len()), (1, 1));

    match ingest("name,i,Omega\nA,10,20\nB,190,20\n", &spec) {
        Err(CliError::Row { row, .. }) => assert_eq!(row, 1),
        other => panic!("expected a row error, got {other:?}"),
    }
    let err = ingest("name,inclination,node_long\nA,10,20\n", &spec).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_USAGE);
}

#[test]
fn sample_round_trips_exactly() {
    for (d, k) in [(1, 3), (2, 2), (4, 1)] {
        let args = ["sample", "--d", &d.to_string(), "--k", &k.to_string(), "--rho", "0.6", "--n", "300", "--seed", "9"];
        let bytes = run_ok(&args);
        assert_eq!(bytes, run_ok(&args));
        let s = parse_csv_sample(&bytes);
        assert_eq!(s.n(), 300);
        let mut bin = Vec::new();
        write_sample_binary(&s, &mut bin).unwrap();
        assert_eq!(&bin[..4], b"SPHC");
        assert_eq!(read_sample_binary(&bin[..]).unwrap(), s);
        let mut again = Vec::new();
        sphcard_cli::io::write_sample_csv(&s, &mut again).unwrap();
        assert_eq!(again, bytes);
    }
}

#[test]
fn binary_samples_read_back_through_the_cli() {
    let bytes = run_ok(&["sample", "--d", "2", "--k", "1", "--rho", "0.5", "--n", "50", "--format", "binary"]);
    let path = temp_file("bin.sphc", &bytes);
    let fit = run_ok(&["fit", "--input", path.to_str().unwrap(), "--format", "binary", "--k", "1", "--estimator", "mm1"]);
    assert!(std::str::from_utf8(&fit).unwrap().contains("\"estimator\": \"mm1\""));
}

#[test]
fn empty_sample_has_a_header() {
    let out = run_ok(&["sample", "--d", "2", "--k", "1", "--rho", "0.5", "--n", "0"]);
    assert_eq!(std::str::from_utf8(&out).unwrap(), "x1,x2,x3\n");
}

#[test]
fn uniform_density_is_constant() {
    for d in [1, 2] {
        let out = run_ok(&["density", "--d", &d.to_string(), "--k", "3", "--rho", "0", "--grid", "5"]);
        let text = std::str::from_utf8(&out).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().ends_with("density"));
        for line in lines {
            let f: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert_eq!(f, 1.0 / surface_area(d));
        }
    }
}

#[test]
fn mm1_fit_is_within_three_standard_errors() {
    let n = 10_000;
    let bytes = run_ok(&["sample", "--d", "2", "--k", "1", "--rho", "0.5", "--n", &n.to_string(), "--seed", "21"]);
    let path = temp_file("mm1.csv", &bytes);
    let out = run_ok(&["fit", "--input", path.to_str().unwrap(), "--k", "1", "--estimator", "mm1"]);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let rho = v["params"]["rho"].as_f64().unwrap();
    let sd = (sigma2_mm1(2, 0.5).1 / n as f64).sqrt();
    assert!((rho - 0.5).abs() < 3.0 * sd, "rho_hat = {rho}");
}

#[test]
fn ml_fit_converges_on_axial_data() {
    // Normals concentrated around both poles of a tilted axis.
    let bytes = run_ok(&["sample", "--d", "2", "--k", "2", "--rho", "0.47", "--n", "700", "--mu", "0.08,-0.0067,0.996772"]);
    let path = temp_file("axial.csv", &bytes);
    let out = run_ok(&["fit", "--input", path.to_str().unwrap(), "--k", "2", "--estimator", "ml"]);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(v["converged"], serde_json::Value::Bool(true));
}

#[test]
fn fit_usage_errors() {
    let path = temp_file("u.csv", b"0,0,1\n1,0,0\n");
    let p = path.to_str().unwrap();
    for args in [
        vec!["fit", "--input", p, "--k", "2", "--estimator", "mm1"],
        vec!["fit", "--input", p, "--k", "1", "--estimator", "mm2"],
        vec!["fit", "--input", p, "--k", "1", "--estimator", "gm"],
    ] {
        assert_eq!(run(&cli(&args)).unwrap_err().exit_code(), EXIT_USAGE);
    }
}

#[test]
fn process_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sphcard");
    let degenerate = temp_file("deg.csv", b"1,0,0\n-1,0,0\n");
    let status = Process::new(bin)
        .args(["fit", "--input", degenerate.to_str().unwrap(), "--k", "1", "--estimator", "mm1"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_DEGENERATE));
    let status = Process::new(bin).args(["fit", "--nope"]).output().unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
    let status = Process::new(bin).args(["are", "--d", "2", "--k", "1", "--steps", "2"]).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    assert!(String::from_utf8(status.stdout).unwrap().starts_with("rho,ARE_MM_mu,ARE_MM_rho,ARE_GM_rho\n"));
}

#[test]
fn gof_profiles_and_simple_null() {
    let bytes = run_ok(&["sample", "--d", "2", "--k", "1", "--rho", "0", "--n", "100", "--seed", "4"]);
    let path = temp_file("g.csv", &bytes);
    let p = path.to_str().unwrap();
    let Command::Gof(a) = cli(&["gof", "--input", p, "--k", "1"]).command else { unreachable!() };
    let cfg = gof_config(&a).unwrap();
    assert_eq!((cfg.k_dirs, cfg.b, cfg.estimator), (50, 100, sphcard::estimation::EstimatorKind::Mm1));
    let Command::Gof(a) = cli(&["gof", "--input", p, "--k", "3", "--profile", "application"]).command else {
        unreachable!()
    };
    let cfg = gof_config(&a).unwrap();
    assert_eq!((cfg.k_dirs, cfg.b, cfg.estimator), (10_000, 10_000, sphcard::estimation::EstimatorKind::Ml));

    let null = r#"{"d":2,"k":1,"mu":[0,0,1],"rho":0}"#;
    let args = ["gof", "--input", p, "--k", "1", "--B", "19", "--simple-null", null, "--seed", "3"];
    let out = run_ok(&args);
    assert_eq!(out, run_ok(&args));
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert!(v["fitted"].is_null());
    assert_eq!(v["null_params"]["rho"].as_f64(), Some(0.0));
    assert_eq!(v["B_effective"].as_u64(), Some(19));
}

#[test]
fn gof_reports_percentile_regions() {
    let bytes = run_ok(&["sample", "--d", "2", "--k", "1", "--rho", "0.7", "--n", "200", "--seed", "8"]);
    let path = temp_file("ci.csv", &bytes);
    let out = run_ok(&["gof", "--input", path.to_str().unwrap(), "--k", "1", "--B", "39", "--ci-alpha", "0.1"]);
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let ci = &v["ci"]["ci_rho"];
    let (lo, hi) = (ci[0].as_f64().unwrap(), ci[1].as_f64().unwrap());
    assert!(lo < hi && lo < 0.7 + 0.2 && hi > 0.7 - 0.2);
    assert!(v["ci"]["cap_mu"].as_f64().unwrap() > 0.0);
}

#[test]
fn are_curves_coincide_on_the_circle() {
    let k1 = run_ok(&["are", "--d", "1", "--k", "1"]);
    let k2 = run_ok(&["are", "--d", "1", "--k", "2"]);
    let parse = |b: &[u8]| -> Vec<Vec<f64>> {
        std::str::from_utf8(b)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
            .collect()
    };
    for (a, b) in parse(&k1).iter().zip(parse(&k2).iter()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn projection_curves_are_deterministic() {
    let bytes = run_ok(&["sample", "--d", "2", "--k", "2", "--rho", "0.5", "--n", "120", "--seed", "2"]);
    let path = temp_file("proj.csv", &bytes);
    let args = ["project", "--input", path.to_str().unwrap(), "--k", "2", "--directions", "2", "--points", "11"];
    let out = run_ok(&args);
    assert_eq!(out, run_ok(&args));
    let text = std::str::from_utf8(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "direction,gamma1,gamma2,gamma3,x,ecdf,cdf");
    assert_eq!(text.lines().count(), 1 + 2 * 11);
    let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!((last[5], last[6]), (1.0, 1.0));
}

#[test]
fn clopper_pearson_examples() {
    let (lo, hi) = clopper_pearson(0, 10, 0.95);
    assert_eq!(lo, 0.0);
    assert!((hi - (1.0 - 0.025f64.powf(0.1))).abs() < 1e-10);
    let (lo, hi) = clopper_pearson(10, 10, 0.95);
    assert!((lo - 0.025f64.powf(0.1)).abs() < 1e-10 && hi == 1.0);
}

fn spec(text: &str) -> ExperimentSpec {
    serde_json::from_str(text).unwrap()
}

#[test]
fn experiment_validation() {
    let bad = spec(r#"{"kind":"power_table","grid":[{"k":1,"d":1,"rho":0.5,"n":20}],"M":2,"B":19,"seed":1}"#);
    assert_eq!(run_experiment(&bad).unwrap_err().exit_code(), EXIT_USAGE);
    let bad = spec(r#"{"kind":"size_table","grid":[{"k":1,"d":1,"rho":0.5,"n":20}],"M":2,"B":5,"seed":1}"#);
    assert_eq!(run_experiment(&bad).unwrap_err().exit_code(), EXIT_USAGE);
}

#[test]
fn experiments_are_reproducible() {
    let s = spec(
        r#"{"kind":"power_table","grid":[{"k":2,"k0":1,"d":1,"rho":0.5,"n":40}],"M":6,"B":19,"seed":5,
            "statistics":[{"weight":"cvm","lambda":"empirical_pn"},{"weight":"ad","lambda":"unif"}]}"#,
    );
    let a = run_experiment(&s).unwrap();
    assert_eq!(a, run_experiment(&s).unwrap());
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("kind,k,k0,d,rho,n,weight,lambda,estimator,M,M_effective,rejections,rejection_pct"));

    let path = temp_file("exp.json", serde_json::to_string(&s).unwrap().as_bytes());
    assert_eq!(run_ok(&["experiment", "--spec", path.to_str().unwrap()]), text.as_bytes());
}

#[test]
fn asymptotics_skips_infeasible_estimators() {
    let s = spec(r#"{"kind":"asymptotics","grid":[{"k":3,"d":2,"rho":0.5,"n":200}],"M":20,"seed":2,"estimators":["mm","ml"]}"#);
    let text = String::from_utf8(run_experiment(&s).unwrap()).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[1].ends_with("no moment estimator for k = 3"));
    assert!(rows[3].split(',').nth(7).unwrap() == "20");
}
