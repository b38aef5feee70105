use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const TINY: &[&str] = &[
    "--override",
    "hidden=16",
    "--override",
    "rollout_len=48",
    "--override",
    "minibatches=4",
    "--override",
    "epochs=2",
    "--override",
    "workers=4",
    "--override",
    "total_env_steps=240",
    "--override",
    "log_every=80",
];

fn axcomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_axcomp")).args(args).env_remove("AXCOMP_OUT").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = axcomp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn train_tiny(out: &Path, seeds: &str) {
    let mut args =
        vec!["train", "--task", "block_fit", "--t", "80", "--seeds", seeds, "--quiet", "--out", out.to_str().unwrap()];
    args.extend_from_slice(TINY);
    ok(&args);
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn records(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn train_writes_one_run_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    train_tiny(&run, "1,2,3");
    assert!(run.join("manifest.toml").exists());
    for seed in 1..=3 {
        let d = run.join(format!("seed_{seed}"));
        for f in ["metrics.csv", "latest.ckpt", "best.ckpt", "outcome.json"] {
            assert!(d.join(f).exists(), "seed {seed} missing {f}");
        }
        let csv = fs::read_to_string(d.join("metrics.csv")).unwrap();
        assert!(csv.starts_with("step,config_id,success_rate,mean_return,policy_loss,value_loss,entropy,clip_range\n"));
        assert!(csv.lines().any(|l| l.starts_with("240,mean,")));
    }
}

#[test]
fn replaying_a_manifest_reproduces_every_byte() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    train_tiny(&a, "4");
    ok(&["train", "--manifest", s(&a.join("manifest.toml")), "--out", s(&b), "--quiet"]);
    for f in ["metrics.csv", "latest.ckpt", "best.ckpt"] {
        assert_eq!(fs::read(a.join("seed_4").join(f)).unwrap(), fs::read(b.join("seed_4").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn interrupted_run_resumes_from_latest() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    train_tiny(&run, "1");
    let seed = run.join("seed_1");
    let full = fs::read_to_string(seed.join("metrics.csv")).unwrap();
    // Pretend the process died right after the first log point.
    fs::remove_file(seed.join("outcome.json")).unwrap();
    let first: String = full.lines().take_while(|l| !l.starts_with("160,")).map(|l| format!("{l}\n")).collect();
    let mut extra = first.clone();
    extra.push_str(full.lines().find(|l| l.starts_with("160,")).unwrap());
    extra.push('\n');
    fs::write(seed.join("metrics.csv"), &extra).unwrap();
    let mut args = vec!["train", "--task", "block_fit", "--t", "80", "--seeds", "1", "--quiet", "--out", s(&run)];
    args.extend_from_slice(TINY);
    // latest.ckpt is at step 240, so nothing new is trained but rows past it are kept.
    ok(&args);
    assert!(seed.join("outcome.json").exists());

    // Rewind the checkpoint to step 80: the stale row at 160 is dropped and training continues.
    let mut ckpt = axcomp_rl::Checkpoint::load(&seed.join("latest.ckpt")).unwrap();
    let best = axcomp_rl::Checkpoint::load(&seed.join("best.ckpt")).unwrap();
    assert!(best.state.env_steps <= ckpt.state.env_steps);
    ckpt.state.env_steps = 80;
    ckpt.save(&seed.join("latest.ckpt")).unwrap();
    fs::remove_file(seed.join("outcome.json")).unwrap();
    ok(&args);
    let resumed = fs::read_to_string(seed.join("metrics.csv")).unwrap();
    assert!(resumed.starts_with(&first));
    let steps: Vec<u64> = resumed.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(steps.windows(2).all(|w| w[0] <= w[1]), "{steps:?}");
    assert_eq!(steps.last(), Some(&240));
    assert_eq!(resumed.lines().filter(|l| l.contains(",mean,")).count(), 3);
}

#[test]
fn a_different_run_cannot_reuse_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    train_tiny(&run, "1");
    let out = axcomp(&["train", "--task", "block_fit", "--t", "10", "--out", s(&run)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("different run"));
}

#[test]
fn usage_errors_exit_with_code_two() {
    let cases: [&[&str]; 4] = [
        &["train", "--task", "block_fit", "--action-space", "three_exp"],
        &["train", "--task", "block_stack"],
        &["eval", "--checkpoint", "x.ckpt", "--episodes", "0"],
        &["demo", "--policy", "scripted_fit", "--checkpoint", "x.ckpt"],
    ];
    for args in cases {
        let out = axcomp(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn bad_overrides_fail_before_writing_anything() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let out = axcomp(&["train", "--task", "block_fit", "--out", s(&run), "--override", "epochs=-1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!run.exists());
}

#[test]
fn eval_writes_one_row_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    train_tiny(&run, "1");
    let ckpt = run.join("seed_1").join("latest.ckpt");
    let table = dir.path().join("eval.csv");
    let stdout = ok(&["eval", "--checkpoint", s(&ckpt), "--episodes", "2", "--out", s(&table)]);
    assert!(stdout.contains("test_large"));
    let text = fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("config_id,config,split,episodes,success_rate,mean_return"));
    assert_eq!(lines.count(), 8 + 5 + 4);

    // Same seed, same table.
    let again = dir.path().join("again.csv");
    ok(&["eval", "--checkpoint", s(&ckpt), "--episodes", "2", "--out", s(&again)]);
    assert_eq!(fs::read(&table).unwrap(), fs::read(&again).unwrap());

    // Only the requested sets.
    ok(&["eval", "--checkpoint", s(&ckpt), "--episodes", "1", "--config-set", "test_small", "--out", s(&table)]);
    assert_eq!(fs::read_to_string(&table).unwrap().lines().count(), 1 + 5);
}

#[test]
fn eval_rejects_mismatched_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    train_tiny(&run, "1");
    let ckpt = run.join("seed_1").join("latest.ckpt");
    let out = axcomp(&["eval", "--checkpoint", s(&ckpt), "--task", "block_push"]);
    assert_eq!(out.status.code(), Some(1));

    // An extra wall grows the catalog, so the network no longer fits.
    let cfg =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/block_fit/train_0.toml")).unwrap();
    let wider = format!("{cfg}\n[[walls]]\np0 = [2.0, 0.0]\np1 = [3.0, 0.0]\n");
    let path = dir.path().join("wider.toml");
    fs::write(&path, wider).unwrap();
    let out =
        axcomp(&["eval", "--checkpoint", s(&ckpt), "--config-set", s(&path), "--out", s(&dir.path().join("e.csv"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not fit"));
}

#[test]
fn scripted_demo_succeeds_with_one_selection_per_period() {
    let dir = tempfile::tempdir().unwrap();
    for (policy, t) in [("scripted_fit", 10usize), ("scripted_fit", 25), ("scripted_push", 10)] {
        let dump = dir.path().join(format!("{policy}_{t}.jsonl"));
        ok(&["demo", "--policy", policy, "--t", &t.to_string(), "--out", s(&dump)]);
        let recs = records(&dump);
        assert_eq!(recs[0]["kind"], "header");
        let last = recs.last().unwrap();
        assert_eq!(last["kind"], "episode");
        assert_eq!(last["termination"], "success", "{policy} T={t}");
        let selections: Vec<&Value> = recs.iter().filter(|r| r["kind"] == "selection").collect();
        let physics = recs.iter().filter(|r| r["kind"] == "physics").count();
        assert_eq!(selections.len(), last["steps"].as_u64().unwrap() as usize);
        assert_eq!(physics, selections.len() * t);
        for (k, sel) in selections.iter().enumerate() {
            assert_eq!(sel["physics_step"].as_u64().unwrap() as usize, k * t);
            assert_eq!(sel["controllers"].as_array().unwrap().len(), 3);
        }
        // Every physics record carries the per-priority breakdown.
        let p = recs.iter().find(|r| r["kind"] == "physics").unwrap();
        assert!(p["translational"].is_array() && p["robot"].is_array());
    }
}

#[test]
fn checkpoint_demo_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    train_tiny(&run, "1");
    let ckpt = run.join("seed_1").join("best.ckpt");
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    ok(&["demo", "--checkpoint", s(&ckpt), "--seed", "7", "--out", s(&a)]);
    ok(&["demo", "--checkpoint", s(&ckpt), "--seed", "7", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let recs = records(&a);
    let physics = recs.iter().filter(|r| r["kind"] == "physics").count();
    let selections = recs.iter().filter(|r| r["kind"] == "selection").count();
    assert_eq!(physics, selections * 80);
}

#[test]
fn output_root_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_axcomp"))
        .args(["demo", "--policy", "scripted_fit", "--seed", "2"])
        .env("AXCOMP_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let expected: PathBuf = dir.path().join("demo_scripted_fit_seed2.jsonl");
    assert!(expected.exists());
}
