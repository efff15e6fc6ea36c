use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qvote(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qvote"))
        .args(args)
        .current_dir(dir)
        .env_remove("QVOTE_SEED")
        .output()
        .unwrap()
}

fn data_lines(csv: &str) -> Vec<&str> {
    csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn run_example_writes_tally_two() {
    let dir = tempfile::tempdir().unwrap();
    let args = "run --voters 3 --votes 101 --n 16 --m 3 --copies 30 --lambda 0.9 --seed 7 --out r.json";
    let out = qvote(&args.split(' ').collect::<Vec<_>>(), dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("r.json")).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["tally"], 2);
    assert_eq!(doc["seed"], 7);
    assert_eq!(doc["status"], "completed");
    assert_eq!(doc["config"]["copies"], 30);
    // serde_json's map is ordered, so re-serializing only round-trips if keys were sorted
    assert_eq!(serde_json::to_string_pretty(&doc).unwrap() + "\n", text);
}

#[test]
fn qba_example_has_fifty_rows() {
    let dir = tempfile::tempdir().unwrap();
    let args = "experiment qba --copies 1:50 --lambda 0.9 --gamma 0 --trials 500 --seed 1 --csv q.csv";
    let out = qvote(&args.split(' ').collect::<Vec<_>>(), dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("q.csv")).unwrap();
    assert!(csv.starts_with("# ") && csv.lines().next().unwrap().contains("seed=1"));
    let rows = data_lines(&csv);
    assert_eq!(rows.len(), 50);
    assert!(rows[0].starts_with("1,500,") && rows[49].starts_with("50,500,"));
}

#[test]
fn csqbc_example_has_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = qvote(&["experiment", "csqbc", "--n", "4,8,12,16", "--trials", "1000", "--seed", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().nth(1), Some("n,m,trials,success_rate,stderr"));
    let ns: Vec<&str> = data_lines(&csv).iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["4", "8", "12", "16"]);
}

#[test]
fn output_does_not_depend_on_jobs_or_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["experiment", "csqbc", "--n", "4,8,12", "--trials", "300", "--seed", "5"],
        &["experiment", "qba", "--copies", "1,5,9", "--trials", "300", "--seed", "5", "--source", "statevector"],
        &["experiment", "cheat", "--mode", "voter", "--n", "4,8", "--trials", "200", "--seed", "5"],
        &["run", "--voters", "5", "--seed", "5", "--n", "8"],
    ];
    for args in cases {
        let runs: Vec<Vec<u8>> = ["1", "4", "4"]
            .iter()
            .map(|j| {
                let mut a = args.to_vec();
                a.extend(["--jobs", j]);
                qvote(&a, dir.path()).stdout
            })
            .collect();
        assert!(!runs[0].is_empty());
        assert_eq!(runs[0], runs[1], "{args:?}");
        assert_eq!(runs[1], runs[2], "{args:?}");
    }
}

#[test]
fn transcript_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.jsonl", "b.jsonl"] {
        let out = qvote(&["run", "--voters", "4", "--seed", "11", "--out", "r.json", "--transcript", name], dir.path());
        assert_eq!(out.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, fs::read(dir.path().join("b.jsonl")).unwrap());
}

#[test]
fn env_seed_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["experiment", "csqbc", "--n", "4", "--trials", "50", "--seed", "1"];
    let out = Command::new(env!("CARGO_BIN_EXE_qvote"))
        .args(args)
        .current_dir(dir.path())
        .env("QVOTE_SEED", "9")
        .output()
        .unwrap();
    let with_env = String::from_utf8(out.stdout).unwrap();
    assert!(with_env.lines().next().unwrap().contains("seed=9"));
    let mut direct = args.to_vec();
    direct[7] = "9";
    assert_eq!(with_env.as_bytes(), qvote(&direct, dir.path()).stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_qvote"))
        .args(args)
        .env("QVOTE_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| qvote(args, dir.path()).status.code();

    let unknown = qvote(&["run", "--voters", "3", "--bogus"], dir.path());
    assert_eq!(unknown.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("Usage"));
    assert_eq!(code(&["nonsense"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));

    assert_eq!(code(&["run", "--voters", "1"]), Some(1));
    assert_eq!(code(&["run", "--voters", "3", "--votes", "12"]), Some(1));
    assert_eq!(code(&["run", "--voters", "3", "--n", "7"]), Some(1));
    assert_eq!(code(&["run", "--voters", "3", "--lambda", "1.5"]), Some(1));
    assert_eq!(code(&["experiment", "cheat", "--trials", "0"]), Some(1));
    assert_eq!(code(&["experiment", "qba", "--gamma", "4"]), Some(1));
    assert_eq!(code(&["experiment", "qba", "--copies", "5:1"]), Some(1));

    // a probe sequence is caught by the bus check with high probability
    assert_eq!(code(&["run", "--voters", "3", "--seed", "1", "--probing-miner", "1"]), Some(2));
}

#[test]
fn aborted_run_still_writes_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = qvote(&["run", "--voters", "3", "--seed", "2", "--copies", "1", "--gamma", "leader", "--out", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(doc["status"], "aborted");
    assert_eq!(doc["abort"]["reason"], "consensus_detectable");
    assert!(doc["tally"].is_null());
}

#[test]
fn lying_share_is_flagged_in_audit() {
    let dir = tempfile::tempdir().unwrap();
    let out = qvote(&["run", "--voters", "4", "--votes", "1100", "--seed", "3", "--lie", "0:1:5"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cheating: Vec<&Value> = doc["audit"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["verdict"] != "honest")
        .collect();
    assert_eq!(cheating.len(), 1);
    assert_eq!((cheating[0]["i"].as_u64(), cheating[0]["j"].as_u64()), (Some(0), Some(1)));
}

#[test]
fn fidelity_default_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let out = qvote(&["experiment", "fidelity"], dir.path());
    let csv = String::from_utf8(out.stdout).unwrap();
    let rows = data_lines(&csv);
    assert_eq!(rows.len(), 21);
    assert!(rows[0].starts_with("0,1,"));
    assert!(rows[20].starts_with("0.2,"));
}
