use std::path::Path;
use std::process::{Command, Output};

use x3d_forge::arch::ArchSpec;
use x3d_forge::expansion::{ExpansionSettings, Trajectory};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_x3d-forge"))
        .args(args)
        .env_remove("X3D_FORGE_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn instantiate_m_has_16_frames_at_224() {
    let o = run(&["instantiate", "--preset", "X3D-M"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let spec = ArchSpec::from_toml(&stdout(&o)).unwrap();
    assert_eq!((spec.input.frames, spec.input.resolution), (16, 224));
    assert!(stderr(&o).contains("depths [3, 5, 11, 7]"));
}

#[test]
fn instantiate_writes_file_and_partial_factors_default_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("spec.toml");
    let o = run(&["instantiate", "--factors", "gamma_b=2.25", "-o", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let spec = ArchSpec::from_toml(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(spec.input.frames, 1);
    assert_eq!(spec.input.resolution, 112);
    assert!(stdout(&o).contains("stage widths [24, 48, 96, 192]"));

    let x2d = run(&["instantiate", "--preset", "X2D"]);
    let base = ArchSpec::from_toml(&stdout(&x2d)).unwrap();
    assert_eq!(base.stage_widths(), spec.stage_widths());
    assert!(spec.bottleneck_widths()[0] > base.bottleneck_widths()[0]);
}

#[test]
fn unknown_preset_exits_2() {
    let o = run(&["instantiate", "--preset", "X9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown preset"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(run(&["instantiate"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["cost", "--spec", "/nonexistent/spec.toml"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn cost_s_and_m_lcr() {
    let o = run(&["cost", "--preset", "X3D-S", "--format", "csv"]);
    assert!(o.status.success());
    let total = stdout(&o).lines().last().unwrap().to_string();
    let fields: Vec<f64> = total.split(',').skip(2).map(|v| v.parse().unwrap()).collect();
    assert!((fields[0] / 1.96e9 - 1.0).abs() < 0.02, "{total}");
    assert!((fields[1] / 3.76e6 - 1.0).abs() < 0.02, "{total}");

    let o = run(&["cost", "--preset", "X3D-M", "--strategy", "lcr", "--clips", "10"]);
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("inference")).unwrap();
    assert!(line.contains("views 30"), "{line}");
    let per_view: f64 = line.split_whitespace().nth(4).unwrap().parse().unwrap();
    assert!((per_view / 6.2e9 - 1.0).abs() < 0.02, "{line}");
}

#[test]
fn cost_from_spec_and_single_center_view() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("x2d.toml");
    assert!(run(&["instantiate", "--preset", "X2D", "-o", path_str(&spec)]).status.success());
    let o = run(&["cost", "--spec", path_str(&spec), "--strategy", "center", "--clips", "1", "--format", "toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: toml::Value = toml::from_str(&stdout(&o)).unwrap();
    let flops = v["flops_madds"].as_integer().unwrap();
    assert_eq!(v["inference"]["total"].as_integer().unwrap(), flops);
    assert!((flops as f64 / 20.67e6 - 1.0).abs() < 0.01);
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p
}

const S_RUN: &str = r#"
start = "X2D"
regime = "S"

[criterion]
variant = "analytic"

[output]
trajectory = "traj.csv"
spec = "final.toml"
curve = "curve.csv"
"#;

#[test]
fn expand_to_small_regime_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), S_RUN);
    let o = run(&["expand", "--config", path_str(&cfg), "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = std::fs::read(dir.path().join("traj.csv")).unwrap();
    let spec = ArchSpec::from_toml(&std::fs::read_to_string(dir.path().join("final.toml")).unwrap()).unwrap();
    let cost = x3d_forge::cost::count_flops(&spec).unwrap();
    assert!(cost <= 2_000_000_000, "{cost}");

    let o = run(&["expand", "--config", path_str(&cfg), "--threads", "1", "--quiet"]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.path().join("traj.csv")).unwrap(), first);

    let t = Trajectory::from_csv(first.as_slice(), ExpansionSettings::default(), "x").unwrap();
    let curve = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(curve.lines().filter(|l| l.contains(",chosen,")).count(), t.steps.len());
}

#[test]
fn expand_with_zero_steps_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "regime = \"XS\"\n[settings]\nmax_steps = 0\n");
    let o = run(&["expand", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nothing to expand"));
}

#[test]
fn expand_reports_infeasible_axes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "target_gflops = 0.1\n[settings]\nenabled_axes = [\"fast\"]\n");
    let o = run(&["expand", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no axis could be expanded"), "{}", stderr(&o));
}

#[test]
fn contract_and_curve_from_saved_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "target_gflops = 0.7\n[output]\ntrajectory = \"traj.csv\"\n",
    );
    assert!(run(&["expand", "--config", path_str(&cfg), "-q"]).status.success());
    let traj = dir.path().join("traj.csv");
    let out = dir.path().join("xs.toml");
    let o = run(&["contract", "--trajectory", path_str(&traj), "--regime", "XS", "-o", path_str(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let spec = ArchSpec::from_toml(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(x3d_forge::cost::count_flops(&spec).unwrap() <= 600_000_000);

    let o = run(&["curve", "--trajectory", path_str(&traj)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("step,axis,kind,knob,flops,params,score"));
    assert!(text.lines().any(|l| l.contains(",candidate,")));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(run(&["curve", "--trajectory", path_str(&empty)]).status.code(), Some(2));
}

#[test]
fn eval_analytic_and_replay() {
    let o = run(&["eval", "--factors", "gamma_b=2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "analytic 0.000000");

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("table.csv"),
        "gamma_tau,gamma_t,gamma_s,gamma_w,gamma_b,gamma_d,score\n1,1,1,1,2,1,0.75\n",
    )
    .unwrap();
    let crit = dir.path().join("crit.toml");
    std::fs::write(&crit, "variant = \"replay\"\ntable = \"table.csv\"\n").unwrap();
    let o = run(&["eval", "--factors", "gamma_b=2", "--criterion", path_str(&crit)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).trim().ends_with("0.750000"));
    let o = run(&["eval", "--preset", "X3D-S", "--criterion", path_str(&crit)]);
    assert_eq!(o.status.code(), Some(2));
}
