use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use approx::assert_abs_diff_eq;
use serde_json::Value;

fn maxrand(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maxrand"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_lines(out: &Output) -> Vec<Value> {
    stdout(out)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Parses CSV output into rows of (header, value) lookups.
fn csv_column(text: &str, column: &str) -> Vec<String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header
        .iter()
        .position(|h| *h == column)
        .expect("column present");
    lines
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').nth(idx).unwrap().to_string())
        .collect()
}

#[test]
fn baseline_binary_task() {
    let out = maxrand(&[
        "baseline", "--n", "100", "--m", "2", "--t", "10", "--format", "json",
    ]);
    let row = &json_lines(&out)[0];
    assert_abs_diff_eq!(
        row["expected_max"].as_f64().unwrap(),
        0.575,
        epsilon = 0.005
    );
    assert_eq!(row["expected_standard"].as_f64().unwrap(), 0.5);
}

#[test]
fn baseline_csv_has_twelve_significant_digits() {
    let text = stdout(&maxrand(&[
        "baseline", "--n", "100", "--m", "2", "--t", "10",
    ]));
    assert_eq!(
        text,
        "n,labels,t,expected_standard,expected_max,min_accuracy_beating_max\n\
         100,2,10,0.5,0.576779806682,0.58\n"
    );
}

#[test]
fn baseline_per_example_labels() {
    // enumeration over the three examples' joint outcomes gives 0.6707962936171125
    let out = maxrand(&["baseline", "--labels", "2;3;4", "--t", "5", "--json"]);
    let row = &json_lines(&out)[0];
    assert_abs_diff_eq!(
        row["expected_max"].as_f64().unwrap(),
        0.6707962936171125,
        epsilon = 1e-11
    );
    assert_eq!(row["n"], 3);
}

#[test]
fn pvalue_two_examples() {
    let out = maxrand(&[
        "pvalue", "--n", "2", "--m", "2", "--t", "2", "--acc", "1.0", "--json",
    ]);
    let row = &json_lines(&out)[0];
    assert_eq!(row["p_standard"].as_f64().unwrap(), 0.25);
    assert_eq!(row["p_max"].as_f64().unwrap(), 0.4375);
}

#[test]
fn pvalue_agrees_with_simulated_tail() {
    let p = maxrand(&[
        "pvalue", "--n", "100", "--m", "2", "--t", "200", "--acc", "0.6", "--json",
    ]);
    let p_max = json_lines(&p)[0]["p_max"].as_f64().unwrap();
    let sim = maxrand(&[
        "simulate", "--n", "100", "--m", "2", "--t", "200", "--acc", "0.6", "--trials", "50000",
        "--seed", "11", "--json",
    ]);
    let row = &json_lines(&sim)[0];
    let est = row["tail_estimate"].as_f64().unwrap();
    let se = row["tail_std_error"].as_f64().unwrap();
    assert!(
        (est - p_max).abs() <= 4.0 * se,
        "{est} vs {p_max} (se {se})"
    );
    assert!(row["z"].as_f64().unwrap().abs() <= 4.0);
}

#[test]
fn threshold_reports_both_solvers() {
    let out = maxrand(&[
        "threshold",
        "--n",
        "100",
        "--m",
        "2",
        "--t",
        "10",
        "--alpha",
        "0.05",
        "--json",
    ]);
    let row = &json_lines(&out)[0];
    assert_eq!(row["min_accuracy_beating_max"].as_f64().unwrap(), 0.58);
    assert_eq!(row["min_accuracy_at_significance"].as_f64().unwrap(), 0.64);
}

#[test]
fn threshold_unattainable_is_spelled_out() {
    let text = stdout(&maxrand(&[
        "threshold",
        "--n",
        "5",
        "--m",
        "2",
        "--t",
        "1000",
        "--alpha",
        "1e-9",
    ]));
    assert_eq!(
        csv_column(&text, "min_accuracy_at_significance"),
        vec!["unattainable"]
    );
    let out = maxrand(&[
        "threshold",
        "--n",
        "5",
        "--m",
        "2",
        "--t",
        "1000",
        "--alpha",
        "1e-9",
        "--json",
    ]);
    assert!(json_lines(&out)[0]["min_accuracy_at_significance"].is_null());
}

#[test]
fn grid_is_monotone_in_t_and_reduces_at_one() {
    let out = maxrand(&[
        "grid",
        "--n",
        "10,100,1000",
        "--t",
        "log:1:1000:7",
        "--p",
        "0.3",
        "--json",
    ]);
    let rows = json_lines(&out);
    assert_eq!(rows.len(), 21);
    for chunk in rows.chunks(7) {
        assert_eq!(chunk[0]["t"], 1);
        assert_abs_diff_eq!(
            chunk[0]["expected_max"].as_f64().unwrap(),
            0.3,
            epsilon = 1e-12
        );
        for w in chunk.windows(2) {
            assert!(w[1]["expected_max"].as_f64() >= w[0]["expected_max"].as_f64());
        }
    }
}

#[test]
fn grid_p_value_column() {
    let text = stdout(&maxrand(&[
        "grid",
        "--n",
        "100",
        "--t",
        "1,10",
        "--m",
        "2",
        "--quantity",
        "p-value",
        "--acc",
        "0.6",
    ]));
    assert_eq!(text.lines().next().unwrap(), "n,t,expected_standard,p_max");
    let p = csv_column(&text, "p_max");
    assert_eq!(p, vec!["0.0284439668205", "0.250660665914"]);
}

#[test]
fn curve_from_per_prompt_accuracies() {
    let dir = tempdir();
    let path = dir.join("curve.csv");
    fs::write(
        &path,
        "id,model,dataset,n,labels,t,observed_max_accuracy,per_prompt_accuracies\n\
         x,m,d,10,2,2,0.4,0.2;0.4\n",
    )
    .unwrap();
    let text = stdout(&maxrand(&["curve", path.to_str().unwrap()]));
    let values = csv_column(&text, "empirical_expected_max");
    assert_eq!(values, vec!["0.3", "0.35"]);
}

#[test]
fn audit_fixture_summary_and_evaluation() {
    let dir = tempdir();
    let summary = dir.join("summary.csv");
    let eval = dir.join("eval.json");
    let out = maxrand(&[
        "audit",
        &fixture("cohort50.csv"),
        "--eval-heldout",
        "--summary-out",
        summary.to_str().unwrap(),
        "--eval-out",
        eval.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let verdicts = json_lines(&out);
    assert_eq!(verdicts.len(), 50);
    let summary_text = fs::read_to_string(&summary).unwrap();
    assert!(summary_text.lines().next().unwrap().contains("\"scope\""));
    let first: Value = serde_json::from_str(summary_text.lines().next().unwrap()).unwrap();
    assert_eq!(
        (
            first["below_both"].as_u64(),
            first["flip"].as_u64(),
            first["above_both"].as_u64()
        ),
        (Some(4), Some(13), Some(33))
    );
    assert!(fs::read_to_string(&eval).unwrap().contains("auroc"));
}

#[test]
fn audit_jsonl_categories_in_order() {
    let text = stdout(&maxrand(&["audit", &fixture("prompts.jsonl")]));
    assert_eq!(
        csv_column(&text, "category"),
        vec!["below_both", "flip", "above_both", "flip"]
    );
}

#[test]
fn usage_errors_exit_two() {
    // non-integral count
    let out = maxrand(&["pvalue", "--n", "100", "--m", "2", "--acc", "0.555"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    // conflicting label schemes
    assert_eq!(
        maxrand(&["baseline", "--n", "5", "--m", "2", "--p", "0.5"])
            .status
            .code(),
        Some(2)
    );
    // n disagrees with per-example labels
    assert_eq!(
        maxrand(&["baseline", "--n", "4", "--labels", "2;3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        maxrand(&["baseline", "--n", "5", "--m", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        maxrand(&["simulate", "--n", "5", "--m", "2", "--trials", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(maxrand(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bad_records_report_every_row_and_write_nothing() {
    let dir = tempdir();
    let input = dir.join("bad.csv");
    let out_path = dir.join("out.csv");
    fs::write(
        &input,
        "id,model,dataset,n,labels,t,observed_max_accuracy\n\
         a,m,d,10,2,3,0.55\n\
         b,m,d,10,2,3,0.5\n\
         c,m,d,0,2,3,0.5\n",
    )
    .unwrap();
    let out = maxrand(&[
        "audit",
        input.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 1"), "{err}");
    assert!(err.contains("row 3"), "{err}");
    assert!(!out_path.exists());
}

#[test]
fn out_flag_writes_file_only() {
    let dir = tempdir();
    let path = dir.join("b.json");
    let out = maxrand(&[
        "baseline",
        "--n",
        "10",
        "--m",
        "3",
        "--json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(stdout(&out).is_empty());
    let row: Value = serde_json::from_str(fs::read_to_string(&path).unwrap().trim()).unwrap();
    assert_eq!(row["n"], 10);
}

fn tempdir() -> PathBuf {
    use std::sync::atomic::{AtomicUsize, Ordering};
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!(
        "maxrand-cli-{}-{}",
        std::process::id(),
        NEXT.fetch_add(1, Ordering::Relaxed)
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn feasibility_errors_exit_three() {
    let labels = vec!["2"; 20_001].join(";");
    let out = maxrand(&["baseline", "--labels", &labels, "--t", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}
