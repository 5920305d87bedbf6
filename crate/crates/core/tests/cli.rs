use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bohmfield"));
    c.env_remove("BOHMFIELD_OUT");
    c
}

fn files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .map(|r| r.map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

#[test]
fn lists_presets() {
    let out = bin().arg("list-presets").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig1", "born", "qft-free", "qft-interacting", "nonrel", "collapse"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn fig1_preset_writes_crossings_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1");
    let status = bin().args(["check", "--preset", "fig1", "--out"]).arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert_eq!(files(&out), ["crossings.tsv", "events.tsv", "manifest.toml", "summary.tsv", "trajectory.tsv"]);
    let crossings = std::fs::read_to_string(out.join("crossings.tsv")).unwrap();
    let signs: Vec<&str> = crossings.lines().skip(1).map(|l| l.split('\t').nth(2).unwrap()).collect();
    assert_eq!(signs, ["1", "-1", "1"]);
    // every data file is listed once in the manifest
    let manifest: toml::Value = toml::from_str(&std::fs::read_to_string(out.join("manifest.toml")).unwrap()).unwrap();
    let listed: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert_eq!(listed.len(), 4);
    for f in files(&out).iter().filter(|f| *f != "manifest.toml") {
        assert_eq!(listed.iter().filter(|l| *l == f).count(), 1);
    }
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("born.toml");
    let text = bohmfield::scenario::preset("born").unwrap().replace("samples = 10000", "samples = 300");
    std::fs::write(&cfg, text).unwrap();
    for sub in ["a", "b"] {
        let status = bin().args(["run", "--seed", "9", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join(sub)).output().unwrap().status;
        assert_eq!(status.code(), Some(0));
    }
    for f in ["samples.tsv", "summary.tsv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    // a different seed changes the samples
    let status = bin().args(["run", "--seed", "10", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("c")).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert_ne!(std::fs::read(dir.path().join("a/samples.tsv")).unwrap(), std::fs::read(dir.path().join("c/samples.tsv")).unwrap());
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "name = \"bad\"\n[scenario]\nkind = \"trajectory\"\ntau_span = \"long\"\n").unwrap();
    let out = dir.path().join("out");
    let status = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn coarse_grid_is_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("coarse.toml");
    std::fs::write(&cfg, bohmfield::scenario::preset("fig1").unwrap().replace("grid_points = 64", "grid_points = 2")).unwrap();
    let out = dir.path().join("out");
    let status = bin().args(["check", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn failed_check_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("wrong.toml");
    std::fs::write(&cfg, bohmfield::scenario::preset("fig1").unwrap().replace("slice = 49.2", "slice = 30.0")).unwrap();
    let run = |check: bool| {
        let mut c = bin();
        c.args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o"));
        if check {
            c.arg("--check");
        }
        c.output().unwrap().status.code()
    };
    assert_eq!(run(false), Some(0));
    assert_eq!(run(true), Some(4));
}

#[test]
fn node_hit_exits_3() {
    // equal and opposite modes give a standing wave with exact nodes at t = 0
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("node.toml");
    std::fs::write(
        &cfg,
        "[scenario]\nkind = \"trajectory\"\nstart = [0.0, 1.5707963267948966]\ntau_span = 1.0\n\
         [scenario.wave]\nmass = 1.0\ndimension = 1\ncell = 6.283185307179586\n\
         modes = [{ k = [1.0], re = 1.0 }, { k = [-1.0], re = 1.0 }]\n",
    )
    .unwrap();
    let status = bin().args(["run", "--config"]).arg(&cfg).arg("--out").arg(dir.path().join("o")).output().unwrap().status;
    assert_eq!(status.code(), Some(3));
}

#[test]
fn environment_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let status = bin().args(["run", "--preset", "qft-free"]).env("BOHMFIELD_OUT", &target).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert!(target.join("manifest.toml").exists());
}

#[test]
fn missing_source_exits_2() {
    assert_eq!(bin().arg("run").output().unwrap().status.code(), Some(2));
    assert_eq!(bin().args(["run", "--preset", "nope"]).output().unwrap().status.code(), Some(2));
}
