use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn aniso(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aniso"))
        .args(args)
        .output()
        .expect("spawn aniso")
}

fn ok(args: &[&str]) {
    let out = aniso(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(args: &[&str]) -> i32 {
    aniso(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest_header(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap_or_default().to_string();
    assert!(first.starts_with("# manifest: "), "{}: {first}", path.display());
    first
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn lattice(dir: &Path) -> PathBuf {
    let mut csv = String::from("x,y\n");
    for i in 0..20 {
        for j in 0..20 {
            csv.push_str(&format!("{},{}\n", (i as f64 + 0.5) / 20.0, (j as f64 + 0.5) / 20.0));
        }
    }
    let p = dir.join("lattice.csv");
    fs::write(&p, csv).unwrap();
    p
}

#[test]
fn pipeline_from_simulation_to_tests() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let pat = d.join("p.csv");
    ok(&["simulate", "--model", "poisson", "--params", r#"{"lambda":150}"#, "--seed", "3", "--out", s(&pat)]);
    assert!(d.join("p.window.json").exists());
    assert!(d.join("p.meta.json").exists());
    manifest_header(&pat);

    let g = d.join("g.csv");
    ok(&["nn", "--input", s(&pat), "--stat", "gglobal", "--r", "0.2", "--steps", "5", "--out", s(&g)]);
    let k = d.join("k.csv");
    ok(&["k2", "--input", s(&pat), "--stat", "kcone", "--angle", "0,1.5707963", "--r", "0.2", "--out", s(&k)]);
    let pcf = d.join("pcf.csv");
    ok(&["k2", "--input", s(&pat), "--stat", "pcfiso", "--r", "0.25", "--steps", "10", "--out", s(&pcf)]);
    let sp = d.join("spec.csv");
    let rt = d.join("rtheta.csv");
    ok(&["spectral", "--input", s(&pat), "--pmax", "8", "--out", s(&sp), "--rtheta", s(&rt)]);
    let ros = d.join("ros.csv");
    ok(&["wavelet", "--input", s(&pat), "--method", "rosenberg", "--scales", "5,10,20", "--out", s(&ros)]);
    let fry = d.join("fry.json");
    ok(&["fry-ellipse", "--input", s(&pat), "--levels", "3,4,5", "--out", s(&fry)]);
    let rep = d.join("guan.json");
    ok(&["test", "--input", s(&pat), "--method", "guan", "--lag-length", "0.1", "--report", s(&rep)]);

    for f in [&g, &k, &pcf, &sp, &ros] {
        let header = manifest_header(f);
        let name = header["# manifest: ".len()..].split_whitespace().next().unwrap();
        assert!(d.join(name).exists(), "missing {name}");
    }
    for f in [&fry, &rep] {
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(f).unwrap()).unwrap();
        let name = v["manifest"].as_str().unwrap();
        assert!(d.join(name).exists(), "missing {name}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    let p = report["report"]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
}

#[test]
fn outputs_and_manifests_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut trees = Vec::new();
    // Manifests record input paths, so every run uses the same directory.
    let sub = d.join("run");
    for threads in ["1", "1", "2"] {
        let _ = fs::remove_dir_all(&sub);
        fs::create_dir(&sub).unwrap();
        let pat = sub.join("p.csv");
        let sim = ["--threads", threads, "simulate", "--model", "strauss"];
        ok(&[&sim[..], &["--params", r#"{"beta":100,"gamma":0.2,"r":0.08}"#, "--seed", "9", "--out", s(&pat)]].concat());
        let rep = sub.join("wong.json");
        ok(&["--threads", threads, "test", "--input", s(&pat), "--method", "wong", "--r", "0.2", "--sims", "19", "--seed", "4", "--report", s(&rep)]);
        trees.push(tree(&sub));
    }
    assert_eq!(trees[0], trees[1]);
    assert_eq!(trees[0], trees[2]);
}

#[test]
fn exit_codes_distinguish_validation_from_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = d.join("x.csv");
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["simulate", "--model", "nonesuch", "--out", s(&out)]), 2);
    assert_eq!(code(&["nn", "--input", s(&d.join("missing.csv")), "--stat", "gglobal", "--r", "0.2", "--out", s(&out)]), 2);
    let lat = lattice(d);
    let win = r#"{"lo":[0,0],"hi":[1,1]}"#;
    assert_eq!(code(&["nn", "--input", s(&lat), "--window", win, "--stat", "gglobal", "--eps=-1", "--r", "0.2", "--out", s(&out)]), 2);
    assert_eq!(code(&["--threads", "0", "nn", "--input", s(&lat), "--window", win, "--stat", "gglobal", "--r", "0.2", "--out", s(&out)]), 2);
    // A lattice at its own spacing gives a degenerate contrast covariance.
    let rep = d.join("r.json");
    assert_eq!(code(&["test", "--input", s(&lat), "--window", win, "--method", "guan", "--lag-length", "0.05", "--report", s(&rep)]), 3);
}

#[test]
fn figure_reproduction_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut trees = Vec::new();
    for (run, threads) in [("a", None), ("b", Some("1")), ("c", Some("2"))] {
        let out = d.join(run);
        let mut args = Vec::new();
        if let Some(t) = threads {
            args.extend(["--threads", t]);
        }
        args.extend(["reproduce-figures", "--seed", "1", "--out", s(&out)]);
        ok(&args);
        trees.push(tree(&out));
    }
    assert!(trees[0].contains_key(Path::new("manifest.json")));
    assert!(trees[0].len() > 10);
    assert_eq!(trees[0], trees[1]);
    assert_eq!(trees[0], trees[2]);
}
