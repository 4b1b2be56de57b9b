//! End-to-end tests of the `sae` binary: golden values against the
//! library, error paths with exit status 1, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn sae(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sae"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to launch binary")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout not UTF-8")
}

fn stderr_str(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr not UTF-8")
}

/// Balanced hand dataset: ψ̂_PR = ψ̂_FH = 7/3, B = 0.7, θ̂ = 0.7·Y.
const HAND_CSV: &str = "id,y,D,kappa_e,x1\n\
                        a,2,1,0,1\n\
                        b,-2,1,0,1\n\
                        c,1,1,0,1\n\
                        d,-1,1,0,1\n";

#[test]
fn fit_reproduces_hand_values_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("areas.csv"), HAND_CSV).unwrap();
    let out = sae(&["fit", "areas.csv", "--method", "pr"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));

    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,theta_hat,B,psi_hat"));
    let expected_theta = [1.4, -1.4, 0.7, -0.7];
    for (row, want_theta) in lines.zip(expected_theta) {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 4);
        let theta: f64 = fields[1].parse().unwrap();
        let b: f64 = fields[2].parse().unwrap();
        let psi: f64 = fields[3].parse().unwrap();
        assert!((theta - want_theta).abs() < 1e-12, "theta {theta}");
        assert!((b - 0.7).abs() < 1e-12, "B {b}");
        assert!((psi - 7.0 / 3.0).abs() < 1e-12, "psi {psi}");
        // Shortest round-trip serialization: re-printing the parsed value
        // reproduces the exact field text.
        for field in &fields[1..] {
            assert_eq!(&field.parse::<f64>().unwrap().to_string(), field);
        }
    }
}

#[test]
fn fit_names_the_offending_row_on_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("bad.csv"),
        "id,y,D,kappa_e,x1\na,1.0,1,0,1\nb,oops,1,0,1\n",
    )
    .unwrap();
    let out = sae(&["fit", "bad.csv"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.starts_with("error:"), "stderr was: {err}");
    assert!(err.contains("row 2"), "stderr was: {err}");
    assert!(err.contains("oops"), "stderr was: {err}");
}

#[test]
fn mspe_robust_equals_normal_without_sampling_kurtosis() {
    let dir = tempfile::tempdir().unwrap();
    // Unbalanced D, all kappa_e = 0.
    std::fs::write(
        dir.path().join("areas.csv"),
        "id,y,D,kappa_e,x1\na,2.4,1.0,0,1\nb,-1.7,0.5,0,1\nc,0.9,2.0,0,1\n\
         d,-0.4,1.5,0,1\ne,1.1,0.8,0,1\nf,-2.0,1.2,0,1\n",
    )
    .unwrap();
    let out = sae(&["mspe", "areas.csv", "--method", "pr"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("id,theta_hat,B,psi_hat,mspe_naive,mspe_normal,mspe_robust")
    );
    let mut rows = 0;
    for row in lines {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 7);
        assert_eq!(fields[5], fields[6], "row {row}");
        rows += 1;
    }
    assert_eq!(rows, 6);
}

#[test]
fn mspe_rejects_kappa_v_for_the_pr_method() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("areas.csv"), HAND_CSV).unwrap();
    let out = sae(
        &["mspe", "areas.csv", "--method", "pr", "--kappa-v", "1.0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.starts_with("error:"), "stderr was: {err}");
    assert!(err.contains("Prasad-Rao"), "stderr was: {err}");
}

#[test]
fn kurtosis_reports_the_jackknife_chain() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("areas.csv"), HAND_CSV).unwrap();
    let out = sae(&["kurtosis", "areas.csv"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let get = |key: &str| -> String {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key},")))
            .unwrap_or_else(|| panic!("missing key {key} in: {text}"))
            .to_string()
    };
    let psi: f64 = get("psi_hat_fh").parse().unwrap();
    let v_wj: f64 = get("v_wj").parse().unwrap();
    let kappa: f64 = get("kappa_v").parse().unwrap();
    assert!((psi - 7.0 / 3.0).abs() < 1e-9, "psi {psi}");
    assert!((v_wj - 3.0).abs() < 1e-9, "v_wj {v_wj}");
    assert!((kappa - (-92.0 / 49.0)).abs() < 1e-9, "kappa {kappa}");
    assert_eq!(get("unstable"), "false");
}

#[test]
fn unit_kurtosis_reproduces_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("units.csv"),
        "area_id,y,pi\na,0,0.5\na,2,0.5\n",
    )
    .unwrap();
    let out = sae(&["unit-kurtosis", "units.csv"], dir.path());
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("area_id,y_bar,n_hat,v,mu4,kappa_e"));
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(fields[0], "a");
    assert_eq!(fields[1].parse::<f64>().unwrap(), 1.0);
    assert_eq!(fields[2].parse::<f64>().unwrap(), 4.0);
    assert_eq!(fields[3].parse::<f64>().unwrap(), 0.25);
    assert_eq!(fields[4].parse::<f64>().unwrap(), 0.109375);
    assert_eq!(fields[5].parse::<f64>().unwrap(), -1.25);
}

#[test]
fn simulate_is_byte_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate",
        "--m",
        "10",
        "--design",
        "balanced:1",
        "--psi",
        "1",
        "--dist-v",
        "shifted-exponential",
        "--dist-e",
        "double-exponential",
        "--reps",
        "50",
        "--method",
        "fh",
        "--seed",
        "3",
        "-o",
        "study.csv",
    ];
    let mut outputs = Vec::new();
    for threads in ["1", "4", "1"] {
        let out = Command::new(env!("CARGO_BIN_EXE_sae"))
            .args(args)
            .current_dir(dir.path())
            .env("SAE_THREADS", threads)
            .output()
            .expect("failed to launch binary");
        assert!(out.status.success(), "stderr: {}", stderr_str(&out));
        let csv = std::fs::read(dir.path().join("study.csv")).unwrap();
        outputs.push((out.stdout, csv));
    }
    assert_eq!(outputs[0], outputs[1], "thread count changed the results");
    assert_eq!(outputs[0], outputs[2], "rerun changed the results");
}

#[test]
fn simulate_rejects_indivisible_unbalanced_m() {
    let dir = tempfile::tempdir().unwrap();
    let out = sae(
        &[
            "simulate", "--m", "7", "--design", "type2", "--psi", "1", "--dist-v", "normal",
            "--dist-e", "normal", "--reps", "10", "--method", "pr", "--seed", "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_str(&out);
    assert!(err.starts_with("error:"), "stderr was: {err}");
    assert!(err.contains("divisible"), "stderr was: {err}");
}

#[test]
fn simulate_reproduces_the_reference_cell() {
    // Balanced normal/normal PR cell: naive RB ≈ −6.6% at seed 42.
    let dir = tempfile::tempdir().unwrap();
    let out = sae(
        &[
            "simulate",
            "--m",
            "60",
            "--design",
            "balanced:1",
            "--psi",
            "1",
            "--dist-v",
            "normal",
            "--dist-e",
            "normal",
            "--reps",
            "10000",
            "--method",
            "pr",
            "--seed",
            "42",
            "-o",
            "study.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "stderr: {}", stderr_str(&out));
    let csv = std::fs::read_to_string(dir.path().join("study.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("group,D,estimator,rb_pct,rrmse_pct,mc_se_rb")
    );
    let naive: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&naive[..3], &["G1", "1", "naive"]);
    let rb: f64 = naive[3].parse().unwrap();
    assert!((rb - -6.64).abs() < 1.5, "naive RB {rb}");
}
