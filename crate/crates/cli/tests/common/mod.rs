#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

pub fn wabc(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wabc")).current_dir(cwd).args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

/// Name and contents of every file directly inside `dir`.
pub fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("readable dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable file"))
        })
        .collect()
}

/// Small, fast invocations of every command, each writing under `out`.
pub fn quick_invocations(out: &str) -> Vec<Vec<String>> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        s(&["gen", "--problem", "3-med", "--n", "30", "--sigma", "0.05", "--seed", "4", "-o", &format!("{out}/gen")]),
        s(&[
            "fit", "--method", "wabc", "--degree", "2", "--n-abc", "20", "--n-updates", "3", "--n-delta", "20",
            "--seed", "2", "--no-timing", "-o", &format!("{out}/wabc"), "data/train.csv",
        ]),
        s(&["fit", "--method", "aao", "--degree", "2", "--no-timing", "-o", &format!("{out}/aao"), "data/train.csv"]),
        s(&["eval", "--model", "data/model.json", "--truth", "data/truth.csv", "--seed", "5", "--method", "wabc"]),
        s(&[
            "bench", "--problems", "schaffer", "--n", "12", "--trials", "5", "--n-abc", "10", "--n-updates", "2",
            "--n-delta", "10", "--degree", "2", "--no-timing", "--seed", "9", "-o", &format!("{out}/bench"),
        ]),
        s(&["bias-scan", "--model", "gaussian", "--n", "10", "--trials", "2", "--n-abc", "50", "--seed", "3", "-o", &format!("{out}/bias")]),
        s(&["accept-scan", "--model", "uniform", "--n", "2", "--proposals", "20000", "--seed", "3", "-o", &format!("{out}/accept")]),
    ]
}

/// Writes `data/train.csv`, `data/truth.csv` and `data/model.json` under `root`.
pub fn seed_inputs(root: &Path) {
    let out = wabc(root, &["gen", "--problem", "3-med", "--n", "30", "--sigma", "0.05", "--seed", "1", "-o", "data"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = wabc(root, &["fit", "--method", "aao", "--degree", "2", "--no-timing", "-o", "fitted", "data/train.csv"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::copy(root.join("fitted/model.json"), root.join("data/model.json")).expect("copy model");
}
