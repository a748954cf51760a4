use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn l1sc(dir: &Path, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_l1sc"));
    cmd.args(args).arg("--out").arg(dir);
    if !args.contains(&"--threads") {
        cmd.args(["--threads", "2"]);
    }
    cmd.output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = l1sc(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("l1sc-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Writes a small synthetic dataset and returns its path.
fn synth(dir: &Path) -> String {
    let path = dir.join("data.csv");
    ok(dir, &["synth", "--set", "synth_per_class=20", "--output", path.to_str().unwrap()]);
    path.to_str().unwrap().to_owned()
}

fn data_rows(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(str::to_owned)
        .collect()
}

const QUICK: [&str; 4] = ["--repetitions", "2", "--set", "restarts=2"];

#[test]
fn usage_errors_exit_with_two() {
    let dir = scratch("usage");
    let data = synth(&dir);
    let cases: [&[&str]; 7] = [
        &["fit", "--dataset", &data, "--method", "l1sc", "--d", "0"],
        &["sweep-samples", "--dataset", &data, "--sizes", ""],
        &["sweep-noise", "--dataset", &data, "--percents", "-1"],
        &["noise", "--dataset", &data, "--percent=-5"],
        &["eval", "--dataset", &data, "--noise", "abc"],
        &["eval", "--dataset", &data, "--set", "colour=red"],
        &["eval", "--dataset", &data, "--threads", "0"],
    ];
    for args in cases {
        let out = l1sc(&dir, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error["));
    }
}

#[test]
fn missing_dataset_is_a_runtime_error() {
    let dir = scratch("missing");
    let out = l1sc(&dir, &["eval", "--dataset", "/nonexistent/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_configs_give_identical_files() {
    let a = scratch("repeat-a");
    let b = scratch("repeat-b");
    let data = synth(&a);
    for dir in [&a, &b] {
        let mut args = vec!["sweep-noise", "--dataset", &data, "--method", "l1sc,lda", "--d", "2", "--percents", "0,5"];
        args.extend(QUICK);
        ok(dir, &args);
        ok(dir, &["fit", "--dataset", &data, "--method", "l1sc", "--d", "3"]);
    }
    for name in ["sweep_noise.csv", "projection.bin", "fit.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn sweep_row_counts() {
    let dir = scratch("rows");
    let data = synth(&dir);
    let mut args = vec!["sweep-samples", "--dataset", &data, "--method", "l1sc,l2sc,lda", "--d", "2", "--sizes", "4,6,8,10,12"];
    args.extend(QUICK);
    ok(&dir, &args);
    let rows = data_rows(&dir.join("sweep_samples.csv"));
    assert_eq!(rows.len(), 15);
    assert!(rows[0].starts_with("l1sc,4,") && rows[14].starts_with("lda,12,"), "{rows:?}");

    let mut args = vec!["sweep-samples", "--dataset", &data, "--method", "lda", "--d", "2", "--sizes", "5"];
    args.extend(QUICK);
    ok(&dir, &args);
    assert_eq!(data_rows(&dir.join("sweep_samples.csv")).len(), 1);

    let mut args = vec!["sweep-noise", "--dataset", &data, "--method", "l1sc,l2sc", "--d", "2"];
    args.extend(QUICK);
    ok(&dir, &args);
    let text = std::fs::read_to_string(dir.join("sweep_noise.csv")).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# seed=0")));
    assert!(text.lines().any(|l| l.starts_with("# config_sha256=")));
    assert_eq!(data_rows(&dir.join("sweep_noise.csv")).len(), 10);
}

#[test]
fn zero_noise_row_equals_clean_evaluation() {
    let dir = scratch("zero");
    let data = synth(&dir);
    let mut args = vec!["sweep-noise", "--dataset", &data, "--method", "l1sc", "--d", "2", "--percents", "0,4"];
    args.extend(QUICK);
    ok(&dir, &args);
    let zero = data_rows(&dir.join("sweep_noise.csv"))[0].clone();
    let mut args = vec!["eval", "--dataset", &data, "--method", "l1sc", "--d", "2"];
    args.extend(QUICK);
    ok(&dir, &args);
    let mean = data_rows(&dir.join("eval.csv")).into_iter().find(|r| r.contains(",mean,")).unwrap();
    let f: Vec<&str> = mean.split(',').collect();
    // method,d,train_per_class,noise_percent,row,seed,oa,std_oa,macro_f1
    assert_eq!(zero, format!("l1sc,0,{},{},{}", f[6], f[7], f[8]));
}

#[test]
fn saved_config_reproduces_the_run() {
    let dir = scratch("config");
    let data = synth(&dir);
    let mut args = vec!["eval", "--dataset", &data, "--method", "lda", "--d", "2", "--set", "svm_lambda=0.01"];
    args.extend(QUICK);
    ok(&dir, &args);
    let first = std::fs::read_to_string(dir.join("eval.csv")).unwrap();
    let replay = scratch("config-replay");
    std::fs::copy(dir.join("config.txt"), replay.join("saved.txt")).unwrap();
    let saved = replay.join("saved.txt");
    ok(&replay, &["eval", "--config", saved.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(replay.join("eval.csv")).unwrap(), first);
}

#[test]
fn fit_then_transform() {
    let dir = scratch("transform");
    let data = synth(&dir);
    ok(&dir, &["fit", "--dataset", &data, "--method", "l2sc", "--d", "3"]);
    let out = dir.join("y.csv");
    ok(&dir, &["transform", "--dataset", &data, "--projection", dir.join("projection.bin").to_str().unwrap(), "--output", out.to_str().unwrap()]);
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 60);
    assert!(rows.iter().all(|r| r.split(',').count() == 4));
    let fit: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["output_dim"], 3);
}
