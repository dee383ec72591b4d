use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn robmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robmix")).args(args).env_remove("ROBMIX_SEED").output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = robmix(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(p: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(p).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn generate_contaminates_the_requested_share() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    ok(&[
        "generate",
        "--scenario",
        "a",
        "--delta",
        "0.1",
        "--nk",
        "200,200,200",
        "--preset",
        "paper3",
        "--seed",
        "7",
        "--out",
        s(&out),
    ]);
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 600);
    for k in 0..3 {
        let flagged = rows.iter().filter(|r| r[5] == k.to_string() && r[6] == "1").count();
        assert_eq!(flagged, 20);
    }
    assert!(dir.path().join("x.manifest.json").exists());

    let clean = dir.path().join("clean.csv");
    ok(&["generate", "--delta", "0", "--nk", "50,50,50", "--preset", "paper3", "--out", s(&clean)]);
    assert!(csv_rows(&clean).iter().all(|r| r[6] == "0"));
}

#[test]
fn usage_and_io_errors_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(robmix(&["generate", "--nk", "10", "--preset", "paper3"]).status.code(), Some(2));
    let x = dir.path().join("x.csv");
    assert_eq!(
        robmix(&["generate", "--delta", "0.7", "--nk", "10,10,10", "--preset", "paper3", "--out", s(&x)]).status.code(),
        Some(2)
    );
    ok(&["generate", "--nk", "30,30,30", "--preset", "paper3", "--out", s(&x)]);
    let o = dir.path().join("fit");
    assert_eq!(robmix(&["fit", "--in", s(&x), "--k", "0", "--out-dir", s(&o)]).status.code(), Some(2));
    let missing = dir.path().join("nope.csv");
    assert_eq!(robmix(&["fit", "--in", s(&missing), "--k", "2", "--out-dir", s(&o)]).status.code(), Some(4));
    let grid = dir.path().join("bad.toml");
    fs::write(&grid, "scenarios = [\"a\"]\ndeltas = [0.1]\nseeds = [1]\nbogus = 1\n").unwrap();
    let res = dir.path().join("res.csv");
    assert_eq!(robmix(&["benchmark", "--grid", s(&grid), "--out", s(&res)]).status.code(), Some(2));
    assert!(!res.exists());
}

#[test]
fn fit_and_select_on_clean_data() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    ok(&["generate", "--nk", "300,300,300", "--preset", "paper3", "--seed", "3", "--out", s(&x)]);
    let fit_dir = dir.path().join("fit");
    let stdout = ok(&["fit", "--in", s(&x), "--k", "3", "--seed", "1", "--out-dir", s(&fit_dir)]);
    let ari: f64 = stdout.rsplit("= ").next().unwrap().trim().parse().unwrap();
    assert!(ari > 0.95, "{stdout}");
    assert_eq!(csv_rows(&fit_dir.join("assignments.csv")).len(), 900);
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(fit_dir.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["K"], 3);

    let sel_dir = dir.path().join("sel");
    ok(&["select", "--in", s(&x), "--k-range", "1:5", "--criterion", "icl", "--seed", "1", "--out-dir", s(&sel_dir)]);
    let crit = csv_rows(&sel_dir.join("criteria.csv"));
    assert_eq!(crit.len(), 5);
    let chosen: Vec<&Vec<String>> = crit.iter().filter(|r| r[6] == "1" || r[6] == "true").collect();
    assert_eq!(chosen.len(), 1);
    assert_eq!(chosen[0][0], "3");
}

#[test]
fn seed_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("c.csv"));
    ok(&["generate", "--nk", "20,20,20", "--preset", "paper3", "--seed", "99", "--out", s(&a)]);
    let env = |out: &Path, seed: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_robmix"))
            .args(["generate", "--nk", "20,20,20", "--preset", "paper3", "--out", s(out)])
            .env("ROBMIX_SEED", seed)
            .output()
            .unwrap();
        assert!(o.status.success());
    };
    env(&b, "99");
    env(&c, "100");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn benchmark_grids() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("g.toml");
    fs::write(&grid, "scenarios = [\"a\", \"b\"]\ndeltas = [0.0, 0.05]\nseeds = [1, 2, 3]\nnk = [100, 100, 100]\nmethods = [\"robust\"]\n").unwrap();
    let res = dir.path().join("res.csv");
    ok(&["benchmark", "--grid", s(&grid), "--out", s(&res)]);
    let text = fs::read_to_string(&res).unwrap();
    assert!(text.starts_with("method,scenario,delta,seed,ari,mse_mu,mse_sigma,khat,converged\n"));
    assert_eq!(text.lines().count(), 13);

    let vgrid = dir.path().join("v.toml");
    fs::write(&vgrid, "kind = \"variance\"\nscenarios = [\"a\"]\ndeltas = [0.05]\nseeds = [1, 2]\nnk = [2000]\n")
        .unwrap();
    let vres = dir.path().join("v.csv");
    ok(&["benchmark", "--grid", s(&vgrid), "--out", s(&vres)]);
    let rows = csv_rows(&vres);
    assert_eq!(rows.len(), 4);
    let mean = |m: &str| {
        let v: Vec<f64> = rows.iter().filter(|r| r[0] == m).map(|r| r[6].parse::<f64>().unwrap()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean("naive") >= 10.0 * mean("robust"), "{} vs {}", mean("naive"), mean("robust"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    ok(&[
        "generate",
        "--scenario",
        "c",
        "--delta",
        "0.1",
        "--nk",
        "80,80,80",
        "--preset",
        "paper3",
        "--seed",
        "5",
        "--out",
        s(&x),
    ]);
    let fit_dir = dir.path().join("fit");
    ok(&["fit", "--in", s(&x), "--k", "3", "--out-dir", s(&fit_dir)]);
    let sel_dir = dir.path().join("sel");
    ok(&["select", "--in", s(&x), "--k-range", "2:4", "--out-dir", s(&sel_dir)]);
    let grid = dir.path().join("g.toml");
    fs::write(&grid, "scenarios = [\"d\"]\ndeltas = [0.1]\nseeds = [4]\nnk = [60, 60, 60]\n").unwrap();
    let res = dir.path().join("res.csv");
    ok(&["benchmark", "--grid", s(&grid), "--out", s(&res)]);

    let outputs = [
        (dir.path().join("x.manifest.json"), vec![x.clone()]),
        (
            fit_dir.join("manifest.json"),
            vec![fit_dir.join("model.json"), fit_dir.join("assignments.csv"), fit_dir.join("criteria.csv")],
        ),
        (
            sel_dir.join("manifest.json"),
            vec![sel_dir.join("model.json"), sel_dir.join("assignments.csv"), sel_dir.join("criteria.csv")],
        ),
        (dir.path().join("res.manifest.json"), vec![res.clone()]),
    ];
    for (manifest, files) in outputs {
        let before: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
        for f in &files {
            fs::remove_file(f).unwrap();
        }
        ok(&["rerun", s(&manifest)]);
        for (f, b) in files.iter().zip(before) {
            assert_eq!(fs::read(f).unwrap(), b, "{}", f.display());
        }
    }
}
