use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use uqd_cli::{MleReport, QueryReport, ReportEnvelope};

fn uqd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uqd"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run uqd")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = uqd(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn error_of(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str::<Value>(text.trim()).unwrap_or_else(|_| panic!("not JSON: {text}"))["error"].clone()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

fn curve_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn disagreement_ensemble_report() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e.csv", "1,0\n0,1\n");
    let env: ReportEnvelope<QueryReport> =
        serde_json::from_str(&ok(dir.path(), &["entropy", "--ensemble", "e.csv"])).unwrap();
    let r = &env.reports[0].uncertainty;
    assert_eq!((r.total, r.aleatoric, r.epistemic), (1.0, 0.0, 1.0));
    assert_eq!(env.schema_version, 1);
    assert_eq!(env.subcommand, "entropy");
    assert_eq!(env.config["ensemble"], "e.csv");
}

#[test]
fn weighted_ensemble_with_header() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e.csv", "weight,p0,p1\n0.75,1,0\n0.25,0,1\n");
    let env: ReportEnvelope<QueryReport> =
        serde_json::from_str(&ok(dir.path(), &["entropy", "--ensemble", "e.csv"])).unwrap();
    let h = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
    assert!((env.reports[0].uncertainty.total - h).abs() < 1e-15);
}

#[test]
fn negative_lengthscale_is_a_validation_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "simgen",
            "--scenario",
            "fig7",
            "--n",
            "5",
            "--seed",
            "1",
            "--out",
            "t.csv",
        ],
    );
    let out = uqd(
        dir.path(),
        &[
            "gp",
            "--train",
            "t.csv",
            "--noise-variance",
            "0.1",
            "--lengthscale",
            "-1",
            "--grid=0:1:3",
            "--curves",
            "c.csv",
            "--report",
            "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out)["kind"], "InvalidParameter");
    assert!(!dir.path().join("c.csv").exists());
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn sampler_divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "train.csv",
        &(0..30).fold("x,y,f1\n".to_string(), |acc, i| {
            let x = i as f64 / 10.0 - 1.5;
            acc + &format!("{x},{},{x}\n", 0.9 * x)
        }),
    );
    write(dir.path(), "q.csv", "x,f1\n0,0\n");
    write(
        dir.path(),
        "bne.toml",
        "noise_variance = 0.01\n[sampler]\nn_samples = 100\nadapt = false\n[sampler.proposal_scales]\nbeta = 50.0\ndelta = 50.0\nwarp = 50.0\n",
    );
    let out = uqd(
        dir.path(),
        &[
            "bne",
            "--config",
            "bne.toml",
            "--train",
            "train.csv",
            "--query",
            "q.csv",
            "--report",
            "r.json",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(error_of(&out)["kind"], "SamplerDiverged");
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn schema_errors_name_the_column_and_row() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "no_y.csv", "x,z\n1,2\n");
    let out = uqd(
        dir.path(),
        &["gp", "--train", "no_y.csv", "--noise-variance", "0.1", "--grid=0:1:3"],
    );
    assert_eq!(out.status.code(), Some(2));
    let e = error_of(&out);
    assert_eq!(
        (e["kind"].as_str(), e["column"].as_str()),
        (Some("SchemaMismatch"), Some("y"))
    );

    write(dir.path(), "nan.csv", "x,y\n0,1\n1,2\n2,NaN\n");
    let e = error_of(&uqd(
        dir.path(),
        &["gp", "--train", "nan.csv", "--noise-variance", "0.1", "--grid=0:1:3"],
    ));
    assert_eq!(
        (e["kind"].as_str(), e["row"].as_u64()),
        (Some("NonFiniteValue"), Some(3))
    );
}

#[test]
fn unknown_config_keys_are_rejected_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "simgen",
            "--scenario",
            "fig7",
            "--n",
            "8",
            "--seed",
            "2",
            "--out",
            "t.csv",
        ],
    );
    write(
        dir.path(),
        "bad.toml",
        "train = \"t.csv\"\nnoise_variance = 0.1\nnoise = 3\n",
    );
    let out = uqd(dir.path(), &["gp", "--config", "bad.toml", "--grid=0:1:3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(error_of(&out)["message"].as_str().unwrap().contains("noise"));

    write(
        dir.path(),
        "good.toml",
        "train = \"t.csv\"\nnoise_variance = 0.1\nlengthscale = 0.7\ngrid = { lo = 0.0, hi = 1.0, n = 3 }\n",
    );
    let env: ReportEnvelope<QueryReport> = serde_json::from_str(&ok(
        dir.path(),
        &["gp", "--config", "good.toml", "--noise-variance", "0.3"],
    ))
    .unwrap();
    assert_eq!(env.config["noise_variance"], 0.3);
    assert_eq!(env.config["lengthscale"], 0.7);
    assert_eq!(env.reports.len(), 3);
    assert!(env.reports.iter().all(|r| r.uncertainty.aleatoric == 0.3));
}

#[test]
fn fig7_band_narrows_with_more_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut widths = Vec::new();
    for n in ["5", "20"] {
        let data = format!("fig7_{n}.csv");
        let curves = format!("c_{n}.csv");
        ok(
            d,
            &["simgen", "--scenario", "fig7", "--n", n, "--seed", "42", "--out", &data],
        );
        ok(
            d,
            &[
                "gp",
                "--train",
                &data,
                "--noise-variance",
                "0.04",
                "--lengthscale",
                "0.8",
                "--center-y",
                "--grid=-3:3:61",
                "--curves",
                &curves,
                "--report",
                "r.json",
            ],
        );
        let rows = curve_rows(&d.join(&curves));
        for r in &rows {
            assert_eq!(r[2] - r[3], r[4], "total = aleatoric + epistemic per row");
        }
        widths.push(rows.iter().map(|r| r[2]).sum::<f64>() / rows.len() as f64);
    }
    assert!(widths[1] < widths[0], "{widths:?}");
}

#[test]
fn empty_grid_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["simgen", "--scenario", "fig7", "--n", "4", "--out", "t.csv"],
    );
    ok(
        dir.path(),
        &[
            "gp",
            "--train",
            "t.csv",
            "--noise-variance",
            "0.1",
            "--grid=0:1:0",
            "--curves",
            "c.csv",
            "--report",
            "r.json",
        ],
    );
    assert_eq!(
        std::fs::read_to_string(dir.path().join("c.csv")).unwrap(),
        "x,mu,total,aleatoric,epistemic\n"
    );
}

#[test]
fn mle_wald_interval() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "b.csv", "s\n1\n1\n1\n1\n1\n1\n1\n0\n0\n0\n");
    let env: ReportEnvelope<MleReport> =
        serde_json::from_str(&ok(dir.path(), &["mle", "--data", "b.csv", "--family", "bernoulli"])).unwrap();
    let r = &env.reports[0];
    assert!((r.theta_hat[0] - 0.7).abs() < 1e-15);
    assert_eq!(r.aic + 2.0 * r.loglik_at_max, 2.0);
    let ci = &r.confidence.intervals[0];
    assert!((ci.lower - 0.4160).abs() < 1e-4 && (ci.upper - 0.9840).abs() < 1e-4);

    write(dir.path(), "ones.csv", "s\n1\n1\n1\n");
    let out = uqd(dir.path(), &["mle", "--data", "ones.csv", "--family", "bernoulli"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_of(&out)["kind"], "DegenerateData");
}

#[test]
fn bootstrap_curves_have_classification_columns() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "simgen",
            "--scenario",
            "fig3b",
            "--n",
            "150",
            "--seed",
            "7",
            "--out",
            "d.csv",
        ],
    );
    let head = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert!(head.starts_with("x1,x2,label\n"));
    write(dir.path(), "q.csv", "x1,x2\n0,0\n0,3.5\n");
    ok(
        dir.path(),
        &[
            "entropy",
            "--train",
            "d.csv",
            "--query",
            "q.csv",
            "--members",
            "15",
            "--curves",
            "c.csv",
            "--report",
            "r.json",
        ],
    );
    let text = std::fs::read_to_string(dir.path().join("c.csv")).unwrap();
    assert!(text.starts_with("x1,x2,total,aleatoric,epistemic\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn bne_report_has_six_fields_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "simgen",
            "--scenario",
            "bump",
            "--n",
            "40",
            "--seed",
            "5",
            "--out",
            "b.csv",
        ],
    );
    let body = std::fs::read_to_string(d.join("b.csv")).unwrap();
    let train: String = std::iter::once("x,y,f1\n".to_string())
        .chain(
            body.lines()
                .skip(1)
                .map(|l| format!("{l},{}\n", l.split(',').next().unwrap())),
        )
        .collect();
    write(d, "train.csv", &train);
    write(d, "q.csv", "x,f1\n-1,-1\n1.2,1.2\n");
    write(
        d,
        "bne.toml",
        "noise_variance = 0.09\n[sampler]\nn_samples = 200\nseed = 4\n",
    );
    let text = ok(
        d,
        &[
            "bne",
            "--config",
            "bne.toml",
            "--train",
            "train.csv",
            "--query",
            "q.csv",
        ],
    );
    let env: ReportEnvelope<QueryReport> = serde_json::from_str(&text).unwrap();
    assert_eq!(env.reports.len(), 2);
    for r in &env.reports {
        let u = &r.uncertainty;
        assert_eq!(u.breakdown_residual(), Some(0.0));
        assert_eq!(u.total - u.aleatoric - u.epistemic, 0.0);
    }
    let sampler = env.diagnostics.sampler.as_ref().unwrap();
    assert_eq!(sampler.len(), 3);
    assert!(sampler
        .iter()
        .all(|s| s.draws == 200 && s.acceptance_rate.unwrap() > 0.01));
    // the envelope round-trips losslessly
    let again: ReportEnvelope<QueryReport> = serde_json::from_str(&env.to_json()).unwrap();
    assert_eq!(again, env);
    assert_eq!(env.to_json(), text);
}

#[test]
fn timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "e.csv", "0.5,0.5\n");
    let plain: Value = serde_json::from_str(&ok(dir.path(), &["entropy", "--ensemble", "e.csv"])).unwrap();
    assert!(plain["diagnostics"].get("runtime_ms").is_none());
    let timed: Value = serde_json::from_str(&ok(dir.path(), &["entropy", "--ensemble", "e.csv", "--timings"])).unwrap();
    assert!(timed["diagnostics"]["runtime_ms"].is_number());
}
