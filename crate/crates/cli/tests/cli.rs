use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ambiview_core::ambiguity::read_sorted_pairs;
use ambiview_core::baselines::read_summary_csv;
use ambiview_core::classify::SweepResult;
use ambiview_core::policy::read_episodes_jsonl;

const SMALL: &str = r#"
schema_version = 1
seed = 5

[world]
n_blobs = 96
descriptor_dim = 8
codebook_dirs = 128
codebook_inplane = 8
coarse_dirs = 64
descent_steps = 4

[sweep]
thresholds = [0.0, 0.5, 1.0]
caps = [0.5, 1.0]
trials = 2
eval_samples = 20

[simulate]
episodes = 12

[simulate.reachable]
kind = "trajectory"
circles = 3
steps = 8

[compare]
robustness_noise = [0.0, 1.0]
"#;

fn ambiview(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ambiview"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(cmd: &str, manifest: &Path, out: &Path, threads: &str) {
    let o = ambiview(&[
        cmd,
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        threads,
    ]);
    assert!(
        o.status.success(),
        "{cmd} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn write_manifest(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("m.toml");
    fs::write(&p, text).unwrap();
    p
}

fn assert_same_files(a: &Path, b: &Path) {
    let mut names: Vec<_> = fs::read_dir(a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mut other: Vec<_> = fs::read_dir(b)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    other.sort();
    assert_eq!(names, other);
    for n in names {
        assert_eq!(
            fs::read(a.join(&n)).unwrap(),
            fs::read(b.join(&n)).unwrap(),
            "{n:?} differs"
        );
    }
}

#[test]
fn rank_writes_tables_and_reruns_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), SMALL);
    let first = tmp.path().join("first");
    run_ok("rank", &m, &first, "1");
    for class in 0..2 {
        let rows = read_sorted_pairs(&first.join(format!("pairs_class{class}.csv"))).unwrap();
        assert_eq!(rows.len(), 64);
        assert!(first.join(format!("ambiguity_class{class}.json")).exists());
    }
    let second = tmp.path().join("second");
    run_ok("rank", &first.join("manifest.resolved.toml"), &second, "3");
    assert_same_files(&first, &second);
}

#[test]
fn sweep_rows_and_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    run_ok("sweep", &m, &out, "2");
    let r = SweepResult::read_csv(&out.join("sweep.csv")).unwrap();
    assert_eq!(r.rows.len(), 3 * 2);
    for row in r.rows.iter().filter(|r| r.threshold == 0.0) {
        assert!(row.empty_train);
        assert!(row.accuracy.is_none());
    }
    assert!(r.rows.iter().filter(|r| r.threshold > 0.0).all(|r| !r.empty_train));
}

#[test]
fn simulate_pairs_policies_on_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    run_ok("simulate", &m, &out, "2");
    let nb = read_episodes_jsonl(&out.join("episodes_next_best.jsonl")).unwrap();
    let rnd = read_episodes_jsonl(&out.join("episodes_random.jsonl")).unwrap();
    assert_eq!(nb.len(), 12);
    assert_eq!(rnd.len(), 12);
    for (a, b) in nb.iter().zip(&rnd) {
        assert_eq!(a.start, b.start);
        assert_eq!(a.true_class, b.true_class);
        let n = a.noise_seeds.len().min(b.noise_seeds.len());
        assert_eq!(a.noise_seeds[..n], b.noise_seeds[..n]);
        assert_eq!(a.ambiguities[0], b.ambiguities[0]);
    }
    let csv = fs::read_to_string(out.join("success.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("policy,k,success_fraction"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.iter().filter(|l| l.starts_with("next_best,")).count(), 4);
    assert_eq!(rows.iter().filter(|l| l.starts_with("random,")).count(), 4);
    assert!(!csv.contains('\r'));
}

#[test]
fn compare_reports_primary_self_correlation() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    run_ok("compare", &m, &out, "1");
    let summary = read_summary_csv(&out.join("metric_summary.csv")).unwrap();
    assert_eq!(summary.len(), 4);
    let primary = summary.iter().find(|r| r.metric == "primary").unwrap();
    assert_eq!(primary.spearman, 1.0);
    assert!(summary.iter().all(|r| r.n_pairs == 64));
    assert!(summary.iter().all(|r| (-1.0..=1.0).contains(&r.spearman)));
    let plot = fs::read_to_string(out.join("metric_mse.csv")).unwrap();
    assert_eq!(plot.lines().count(), 65);
    let robust = fs::read_to_string(out.join("robustness.csv")).unwrap();
    assert_eq!(robust.lines().nth(1), Some("0.0,1.0"));
}

#[test]
fn seed_override_is_materialized() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    let o = ambiview(&[
        "rank",
        "--manifest",
        m.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "11",
    ]);
    assert!(o.status.success());
    let resolved = fs::read_to_string(out.join("manifest.resolved.toml")).unwrap();
    assert!(resolved.contains("seed = 11"));
}

#[test]
fn corrupt_manifest_exits_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    for bad in [
        "schema_version = 1\n[world]\nn_blobs = \"many\"\n",
        "schema_version = 1\nbogus = 3\n",
        "schema_version = 9\n",
        "schema_version = 1\n[simulate]\nthreshold = 1.5\n",
        "this is not toml",
    ] {
        let m = write_manifest(tmp.path(), bad);
        let out = tmp.path().join("never");
        let o = ambiview(&["rank", "--manifest", m.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert!(!out.exists(), "{bad}");
        assert!(!o.stderr.is_empty());
    }
    let o = ambiview(&["rank", "--manifest", "/nonexistent/m.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ambiview(&["rank", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let m = write_manifest(tmp.path(), SMALL);
    let file = tmp.path().join("plain");
    fs::write(&file, "x").unwrap();
    let out = file.join("sub");
    let o = ambiview(&["rank", "--manifest", m.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn manifest_command_prints_parseable_defaults() {
    let o = ambiview(&["manifest"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(ambiview::Manifest::parse(&text).unwrap(), ambiview::Manifest::default());
}
