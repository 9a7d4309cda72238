use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lsnet_core::{init_params, problem_by_name, save_checkpoint};

fn lsnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsnet")).args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn oscillator_config(iterations: u64) -> String {
    format!(
        r#"version = 1
seed = 5

[problem]
name = "oscillator"

[network]
layer_widths = [4, 6]

[discretization]
method = "pinn"
nodes = 40

[training]
batch_size = 4
iterations = {iterations}
lr_initial = 1e-3
lr_final = 1e-4
cadence = 5

[validation]
size = 4

[output]
dir = "run"
"#
    )
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn train(dir: &Path, iterations: u64) -> PathBuf {
    let config = write_config(dir, &oscillator_config(iterations));
    let out = lsnet(&["train", "--quiet", "--config", config.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
}

fn rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn missing_config_names_the_path() {
    let out = lsnet(&["train", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("/nonexistent/run.toml"), "{}", stderr(&out));
}

#[test]
fn config_errors_exit_with_two_and_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &oscillator_config(3).replace("cadence = 5", "cadence = 5\nspeed = 1"));
    let out = lsnet(&["train", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("speed") && err.contains("line"), "{err}");
}

#[test]
fn zero_iterations_write_the_initial_checkpoint_only() {
    let dir = tempfile::tempdir().unwrap();
    let last = train(dir.path(), 0);
    let run = dir.path().join("run");
    assert_eq!(last, run.join("ckpt_000000.lsnet"));
    let mut files: Vec<String> =
        fs::read_dir(&run).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    files.sort();
    assert_eq!(files, ["ckpt_000000.lsnet", "history.csv"]);
    assert_eq!(fs::read_to_string(run.join("history.csv")).unwrap().lines().count(), 1);
}

#[test]
fn train_solve_evaluate_report() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = train(dir.path(), 20);
    let run = dir.path().join("run");
    assert_eq!(ckpt, run.join("ckpt_000020.lsnet"));
    let history = run.join("history.csv");
    assert_eq!(header(&history), "iter,train_loss,val_loss,lr");
    assert_eq!(rows(&history).len(), 5);

    let ck = ckpt.to_str().unwrap();
    let solve_a = dir.path().join("a.csv");
    let solve_b = dir.path().join("b.csv");
    for out in [&solve_a, &solve_b] {
        let o = lsnet(&[
            "solve",
            "--checkpoint",
            ck,
            "--problem",
            "oscillator",
            "--param",
            "1,0.25",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(fs::read(&solve_a).unwrap(), fs::read(&solve_b).unwrap());
    assert_eq!(header(&solve_a), "t,value,d1,d2");
    let sol = rows(&solve_a);
    assert_eq!(sol.len(), 1001);
    // Initial conditions hold for every basis through the cut-off and the lift.
    assert_eq!(sol[0][1..3], [0.0, -50.0]);

    let grid = dir.path().join("grid");
    let o = lsnet(&[
        "evaluate",
        "--checkpoint",
        ck,
        "--problem",
        "oscillator",
        "--grid",
        "4",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["value", "d1", "d2"] {
        let file = grid.join(format!("error_{name}.csv"));
        assert_eq!(header(&file), "p1,p2,error_pct");
        let r = rows(&file);
        assert_eq!(r.len(), 16);
        assert!(r.iter().all(|row| row[2] >= 0.0));
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(grid.join("grid.json")).unwrap()).unwrap();
    let axis: Vec<f64> = meta["axes"][0]["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let expect: Vec<f64> = (0..4).map(|i| 10f64.powf(-1.5 + 3.0 * (i as f64 + 0.5) / 4.0)).collect();
    for (a, e) in axis.iter().zip(&expect) {
        assert!((a / e - 1.0).abs() < 1e-13);
    }
    assert_eq!(rows(&grid.join("error_value.csv"))[1][1], axis[1]);

    let samples = dir.path().join("samples.csv");
    let o = lsnet(&[
        "evaluate",
        "--checkpoint",
        ck,
        "--problem",
        "oscillator",
        "--samples",
        "7",
        "--seed",
        "2",
        "--out",
        samples.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(header(&samples), "p1,p2,value_pct,d1_pct,d2_pct");
    assert_eq!(rows(&samples).len(), 7);

    let report = dir.path().join("report.csv");
    let config = dir.path().join("run.toml");
    let o = lsnet(&["report", "--config", config.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(header(&report), "iter,train_loss,val_loss,lr,train_loss_smoothed");
    let text = fs::read_to_string(&history).unwrap();
    for (h, r) in text.lines().zip(fs::read_to_string(&report).unwrap().lines()) {
        assert!(r.starts_with(h));
    }
    let o = lsnet(&[
        "report",
        "--history",
        history.to_str().unwrap(),
        "--downsample",
        "2",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(rows(&report).len(), 3);
}

#[test]
fn evaluate_needs_a_seed_for_samples() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = train(dir.path(), 0);
    let out = lsnet(&[
        "evaluate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--problem",
        "oscillator",
        "--samples",
        "3",
        "--out",
        "x.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn checkpoint_and_problem_must_agree() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = train(dir.path(), 0);
    let out = lsnet(&[
        "solve",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--problem",
        "helmholtz1d",
        "--param",
        "1,1,1",
        "--out",
        dir.path().join("x.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("dimension mismatch"), "{}", stderr(&out));
}

#[test]
fn malformed_history_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let history = dir.path().join("history.csv");
    fs::write(&history, "iter,train_loss,val_loss,lr\n0,1,1,1\n10,1,oops,1\n").unwrap();
    let out =
        lsnet(&["report", "--history", history.to_str().unwrap(), "--out", dir.path().join("r.csv").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

fn saved_checkpoint(dir: &Path, problem: &str, widths: &[usize]) -> PathBuf {
    let problem = problem_by_name(problem).unwrap();
    let params = init_params(problem.architecture(Some(widths.to_vec())), 4).unwrap();
    let path = dir.join("net.lsnet");
    save_checkpoint(&path, &params).unwrap();
    path
}

#[test]
fn transmission_boundary_values_are_the_lift() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = saved_checkpoint(dir.path(), "transmission2d", &[6, 10]);
    let config = oscillator_config(0)
        .replace("\"oscillator\"", "\"transmission2d\"")
        .replace("layer_widths = [4, 6]", "layer_widths = [6, 10]")
        .replace("method = \"pinn\"\nnodes = 40", "method = \"dfr2d\"\ntests = [4, 4]\nnodes = [20, 20]");
    let config = write_config(dir.path(), &config);
    let out = dir.path().join("t.csv");
    let o = lsnet(&[
        "solve",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--param",
        "2,5,1,9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(header(&out), "x,y,value,dx,dy");
    let r = rows(&out);
    assert_eq!(r.len(), 101 * 101);
    let boundary: Vec<_> = r.iter().filter(|row| row[0].abs() == 1.0 || row[1].abs() == 1.0).collect();
    assert_eq!(boundary.len(), 400);
    for row in boundary {
        assert_eq!(row[2], (FRAC_PI_2 * row[0]).cos(), "at ({}, {})", row[0], row[1]);
    }
}

#[test]
fn transmission_samples_report_both_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = saved_checkpoint(dir.path(), "transmission2d", &[6, 10]);
    let config = oscillator_config(0)
        .replace("\"oscillator\"", "\"transmission2d\"")
        .replace("layer_widths = [4, 6]", "layer_widths = [6, 10]")
        .replace("method = \"pinn\"\nnodes = 40", "method = \"dfr2d\"\ntests = [4, 4]\nnodes = [20, 20]");
    let config = write_config(dir.path(), &config);
    let out = dir.path().join("s.csv");
    let o = lsnet(&[
        "evaluate",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--samples",
        "5",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(header(&out), "p1,p2,p3,p4,lower_pct,upper_pct");
    for row in rows(&out) {
        assert!(row[4] <= row[5]);
    }
}

#[test]
fn helmholtz_solution_columns() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = saved_checkpoint(dir.path(), "helmholtz1d", &[5, 6]);
    let out = dir.path().join("h.csv");
    let o = lsnet(&[
        "solve",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--problem",
        "helmholtz1d",
        "--param",
        "0.5,3,6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(header(&out), "x,re,im,re_dx,im_dx");
    let r = rows(&out);
    assert_eq!(r.len(), 1001);
    // The interface is a kink of the regularity factor; only the value is defined there.
    assert!(r[500][3].is_nan() && r[500][1].is_finite());
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            lsnet_cli::RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 3);
}
