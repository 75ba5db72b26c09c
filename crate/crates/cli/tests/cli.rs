mod common;

use common::{code, files, quick_invocations, seed_inputs, wabc};
use tempfile::tempdir;

#[test]
fn every_command_is_deterministic_under_its_seed() {
    let root = tempdir().unwrap();
    seed_inputs(root.path());
    for (a, b) in quick_invocations("a").into_iter().zip(quick_invocations("b")) {
        let args_a: Vec<&str> = a.iter().map(String::as_str).collect();
        let args_b: Vec<&str> = b.iter().map(String::as_str).collect();
        let (oa, ob) = (wabc(root.path(), &args_a), wabc(root.path(), &args_b));
        assert_eq!(code(&oa), 0, "{a:?}: {}", String::from_utf8_lossy(&oa.stderr));
        assert_eq!(code(&ob), 0);
        assert_eq!(oa.stdout, ob.stdout, "{}", a[0]);
        let out_dir = |args: &[String]| args.iter().position(|x| x == "-o").map(|i| root.path().join(&args[i + 1]));
        let (Some(dir_a), Some(dir_b)) = (out_dir(&a), out_dir(&b)) else {
            continue;
        };
        let (fa, fb) = (files(&dir_a), files(&dir_b));
        assert!(fa.contains_key("manifest.json"));
        // manifests differ only through the output path they record
        for (name, bytes) in &fa {
            if name != "manifest.json" {
                assert_eq!(Some(bytes), fb.get(name), "{} {name}", a[0]);
            }
        }
    }
}

#[test]
fn gen_writes_the_dataset_and_noiseless_training_copy() {
    let root = tempdir().unwrap();
    let out = wabc(root.path(), &["gen", "--problem", "3-med", "--n", "100", "--sigma", "0.1", "--seed", "7", "-o", "out"]);
    assert_eq!(code(&out), 0);
    let f = files(&root.path().join("out"));
    for name in ["train.csv", "truth.csv", "meta.json", "manifest.json"] {
        assert!(f.contains_key(name), "{name}");
    }
    assert_ne!(f["train.csv"], f["truth.csv"]);
    let meta: serde_json::Value = serde_json::from_slice(&f["meta.json"]).unwrap();
    assert_eq!(meta["problem"], "3-med");
    assert_eq!(meta["count"], 100);

    let out = wabc(root.path(), &["gen", "--problem", "viennet2", "--n", "40", "--sigma", "0", "-o", "clean"]);
    assert_eq!(code(&out), 0);
    let f = files(&root.path().join("clean"));
    assert_eq!(f["train.csv"], f["truth.csv"]);
}

#[test]
fn manifest_hashes_match_the_files() {
    let root = tempdir().unwrap();
    let out = wabc(root.path(), &["gen", "--problem", "schaffer", "--n", "10", "-o", "g"]);
    assert_eq!(code(&out), 0);
    let f = files(&root.path().join("g"));
    let manifest: serde_json::Value = serde_json::from_slice(&f["manifest.json"]).unwrap();
    let listed = manifest["files"].as_array().unwrap();
    assert_eq!(listed.len(), 3);
    for entry in listed {
        let name = entry["name"].as_str().unwrap();
        assert_eq!(entry["sha256"].as_str().unwrap(), wabc_cli::artifacts::sha256_hex(&f[name]));
    }
    assert_eq!(manifest["settings"]["problem"], "schaffer");
    assert_eq!(manifest["seeds"]["root"], 0);
}

#[test]
fn eval_of_a_model_against_its_own_surface_has_zero_gd() {
    let root = tempdir().unwrap();
    seed_inputs(root.path());
    let model = std::fs::read_to_string(root.path().join("data/model.json")).unwrap();
    let model = wabc::BezierModel::from_json(&model).unwrap();
    let mut rng = wabc::SeedStream::new(5).label("eval").rng();
    let own = wabc::metrics::surface_sample_for_metrics(&model, 1000, &mut rng).unwrap();
    own.write_csv(root.path().join("own.csv")).unwrap();
    let out = wabc(root.path(), &["eval", "--model", "data/model.json", "--truth", "own.csv", "--seed", "5"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some(wabc::metrics::ResultRow::HEADER));
    let row = wabc::metrics::ResultRow::from_csv_line(lines.next().unwrap()).unwrap();
    assert_eq!(row.gd, 0.0);
    assert_eq!(row.n, 1000);

    // labels come from meta.json next to the truth file
    let out = wabc(root.path(), &["eval", "--model", "data/model.json", "--truth", "data/truth.csv", "--append", "r.csv"]);
    assert_eq!(code(&out), 0);
    let out = wabc(root.path(), &["eval", "--model", "data/model.json", "--truth", "data/truth.csv", "--append", "r.csv"]);
    assert_eq!(code(&out), 0);
    let table = std::fs::read_to_string(root.path().join("r.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 3);
    let row = wabc::metrics::ResultRow::from_csv_line(rows[1]).unwrap();
    assert_eq!((row.problem.as_str(), row.dim, row.n, row.sigma), ("3-med", 3, 30, 0.05));
    assert_eq!(rows[1], rows[2]);
}

#[test]
fn exit_codes_follow_the_error_class() {
    let root = tempdir().unwrap();
    let p = root.path();
    assert_eq!(code(&wabc(p, &["--help"])), 0);
    assert_eq!(code(&wabc(p, &["gen", "--no-such-flag"])), 1);
    assert_eq!(code(&wabc(p, &["gen", "--problem", "zdt1"])), 1);
    assert_eq!(code(&wabc(p, &["gen", "--problem", "schaffer", "--sigma", "-1"])), 1);
    assert_eq!(code(&wabc(p, &["fit", "missing.csv"])), 2);
    std::fs::write(p.join("bad.csv"), "f1,f2\n1.0,abc\n").unwrap();
    assert_eq!(code(&wabc(p, &["fit", "bad.csv"])), 2);
    std::fs::write(p.join("ok.csv"), "f1,f2\n1.0,0.0\n0.0,1.0\n0.5,0.5\n0.2,0.7\n").unwrap();
    assert_eq!(code(&wabc(p, &["fit", "--dim", "3", "ok.csv"])), 2);
    assert_eq!(code(&wabc(p, &["fit", "--n-abc", "1", "ok.csv"])), 1);
    assert_eq!(code(&wabc(p, &["eval", "--model", "nope.json", "--truth", "ok.csv"])), 2);
    // an output path below a regular file cannot be created
    assert_eq!(code(&wabc(p, &["gen", "--problem", "schaffer", "--n", "5", "-o", "ok.csv/sub"])), 3);
}

#[test]
fn config_files_are_overridden_by_flags() {
    let root = tempdir().unwrap();
    let p = root.path();
    std::fs::write(p.join("c.toml"), "problem = \"schaffer\"\nn = 12\nsigma = 0.2\n").unwrap();
    assert_eq!(code(&wabc(p, &["gen", "--config", "c.toml", "--n", "7", "-o", "g"])), 0);
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("g/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["settings"]["n"], 7);
    assert_eq!(manifest["settings"]["sigma"], 0.2);
    assert_eq!(manifest["settings"]["problem"], "schaffer");
    let truth = std::fs::read_to_string(p.join("g/truth.csv")).unwrap();
    assert_eq!(truth.lines().count(), 8);

    std::fs::write(p.join("c.json"), r#"{"problem": "viennet2", "n": 5, "out": "j"}"#).unwrap();
    assert_eq!(code(&wabc(p, &["gen", "--config", "c.json"])), 0);
    assert!(p.join("j/train.csv").exists());

    std::fs::write(p.join("typo.toml"), "problm = \"schaffer\"\n").unwrap();
    assert_eq!(code(&wabc(p, &["gen", "--config", "typo.toml"])), 1);
    assert_eq!(code(&wabc(p, &["gen", "--config", "absent.toml"])), 2);
}

#[test]
fn bench_reports_every_cell_with_p_values() {
    let root = tempdir().unwrap();
    let args = [
        "bench", "--problems", "schaffer,3-med", "--n", "12", "--sigma", "0,0.1", "--trials", "5", "--n-abc", "10",
        "--n-updates", "2", "--n-delta", "10", "--degree", "2", "--no-timing", "-o",
    ];
    let run = |out: &str, jobs: &str| {
        let mut a = args.to_vec();
        a.extend([out, "--jobs", jobs]);
        let o = wabc(root.path(), &a);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        files(&root.path().join(out))
    };
    let serial = run("s", "1");
    let parallel = run("p", "3");
    for name in ["results.csv", "summary.csv", "significance.csv", "failures.csv"] {
        assert_eq!(serial[name], parallel[name], "{name}");
    }
    let results = String::from_utf8(serial["results.csv"].clone()).unwrap();
    assert_eq!(results.lines().count(), 1 + 4 * 2 * 5);
    let significance = String::from_utf8(serial["significance.csv"].clone()).unwrap();
    let rows: Vec<&str> = significance.lines().skip(1).collect();
    assert_eq!(rows.len(), 4 * 2);
    for r in rows {
        let p: f64 = r.split(',').nth(10).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
}

#[test]
fn scans_emit_two_column_curves_and_a_summary() {
    let root = tempdir().unwrap();
    let p = root.path();
    let o = wabc(p, &["accept-scan", "--n", "2", "--proposals", "200000", "-o", "a"]);
    assert_eq!(code(&o), 0);
    let curve = std::fs::read_to_string(p.join("a/accept.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("log_delta,log_rate"));
    assert!(curve.lines().skip(1).all(|l| l.split(',').count() == 2));
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["predicted_slope"], 2.0);
    assert!(summary["pass"].is_boolean());

    let o = wabc(p, &["bias-scan", "--n", "20", "--trials", "2", "--n-abc", "100", "-o", "b"]);
    assert_eq!(code(&o), 0);
    let curve = std::fs::read_to_string(p.join("b/bias.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("log_delta,log_bias"));
    assert_eq!(curve.lines().count(), 14);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("b/summary.json")).unwrap()).unwrap();
    assert!(summary["slope_mid"].is_number());

    // a budget too small to fill the narrow cells is flagged, not fatal
    let o = wabc(p, &["bias-scan", "--n", "20", "--trials", "1", "--max-proposals", "5000", "-o", "c"]);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("c/summary.json")).unwrap()).unwrap();
    assert!(!summary["missing"].as_array().unwrap().is_empty());
}
