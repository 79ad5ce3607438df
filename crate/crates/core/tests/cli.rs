use std::process::{Command, Output};

use qec_chi::channels::{ChannelModel, ChiMatrix};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qec-chi"))
        .args(args)
        .env("QEC_CHI_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["chi", "--channel", "bogus"][..],
        &["chi", "--channel", "rz", "--strengths", "0.1,x"],
        &["chi", "--channel", "identity", "--strengths", "0.1"],
        &["chi", "--channel", "rz", "--level", "logical", "--code", "shor9"],
        &["metrics", "--channel", "adc", "--strengths", "1.5"],
        &["frobnicate"],
        &["chi", "--channel", "rz", "--no-such-flag"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn chi_json_round_trips() {
    let v = json(&["chi", "--channel", "rh", "--strengths", "0.1,0.2", "--format", "json"]);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["command"], "chi");
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    for r in results {
        let s = r["strength"].as_f64().unwrap();
        let chi: ChiMatrix = serde_json::from_value(r["chi"].clone()).unwrap();
        let want = ChannelModel::rh(s).chi().unwrap();
        assert!((chi.entries() - want.entries()).max_abs() == 0.0);
    }
}

#[test]
fn malformed_chi_json_is_rejected() {
    let bad = serde_json::json!({"re": [[1.0, 0.0], [0.0, 1.0]], "im": [[0.0, 0.0], [0.0, 0.0]]});
    assert!(serde_json::from_value::<ChiMatrix>(bad).is_err());
}

#[test]
fn output_is_deterministic() {
    let args = ["metrics", "--channel", "pol", "--strengths", "0.001,0.01", "--format", "json"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn csv_headers() {
    let cases = [
        (
            vec!["metrics", "--channel", "adc", "--strengths", "0.01", "--format", "csv"],
            "strength,avg_error_rate,error_rate_std,avg_trace_distance,trace_distance_std,diamond",
        ),
        (vec!["chi", "--channel", "rz", "--strengths", "0.1", "--format", "csv"], "strength,row,col,re,im"),
        (
            vec!["approx", "--channel", "adc", "--strengths", "0.01", "--approx", "pcw", "--format", "csv"],
            "strength,variant,member_id,weight,hs_distance,honest,honesty_margin",
        ),
    ];
    for (args, header) in cases {
        let out = run(&args);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().next(), Some(header));
    }
}

#[test]
fn bitflip_threshold_is_one_half() {
    let v = json(&[
        "threshold", "--channel", "flip", "--code", "bitflip3", "--domain", "0.0001,0.9", "--metric", "error_rate",
        "--format", "json",
    ]);
    let t = v["results"][0]["threshold_strength"].as_f64().unwrap();
    assert!((t - 0.5).abs() < 1e-6, "{t}");
}

#[test]
fn logical_metrics_match_library() {
    let v = json(&[
        "metrics", "--channel", "rz", "--strengths", "0.01", "--level", "logical", "--code", "steane7", "--format", "json",
    ]);
    let code = qec_chi::qec::build_code("steane7").unwrap();
    let chi = qec_chi::qec::logical_chi(&code, &ChannelModel::rz(0.01).chi().unwrap()).unwrap();
    let r = qec_chi::metrics::avg_error_rate_chi(&chi).mean;
    let got = v["results"][0]["metrics"]["avg_error_rate"]["mean"].as_f64().unwrap();
    assert!((got - r).abs() <= 1e-12 * r.abs().max(1e-300), "{got} vs {r}");
}

#[test]
fn out_file_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.json");
    let out_s = out.to_str().unwrap();
    let direct = run(&["metrics", "--channel", "dc", "--strengths", "0.03", "--format", "json"]);
    assert!(run(&["metrics", "--channel", "dc", "--strengths", "0.03", "--format", "json", "--out", out_s])
        .status
        .success());
    assert_eq!(std::fs::read(&out).unwrap(), direct.stdout);

    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"command": "metrics", "channel": "dc", "strengths": [0.03], "format": "json"}"#,
    )
    .unwrap();
    let via_config = run(&["metrics", "--config", cfg.to_str().unwrap()]);
    assert!(via_config.status.success(), "{}", String::from_utf8_lossy(&via_config.stderr));
    assert_eq!(via_config.stdout, direct.stdout);

    std::fs::write(&cfg, r#"{"channel": "dc", "bogus_key": 1}"#).unwrap();
    assert_eq!(run(&["metrics", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn custom_code_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rep.json");
    std::fs::write(
        &path,
        r#"{"name": "rep3", "stabilizer_generators": ["ZZI", "IZZ"], "logical_x": "XXX", "logical_z": "ZII"}"#,
    )
    .unwrap();
    let from_file = json(&[
        "chi", "--channel", "flip", "--strengths", "0.1", "--level", "logical", "--code", path.to_str().unwrap(),
        "--format", "json",
    ]);
    let builtin = json(&[
        "chi", "--channel", "flip", "--strengths", "0.1", "--level", "logical", "--code", "bitflip3", "--format",
        "json",
    ]);
    assert_eq!(from_file["results"], builtin["results"]);
}
