use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const ODE: &str = "\
[grid]
d = 1
n = 16
box_length = 10
[operator]
a = 1
b = 1
s = 0.5
[problem]
p = 3
ic = constant amp=1
[solver]
t_end = 1
[experiment]
mode = simulate
";

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fujita-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("FUJITA_LAB_THREADS")
        .output()
        .unwrap()
}

fn with_config(text: &str, args: &[&str]) -> (tempfile::TempDir, Output) {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.ini"), text).unwrap();
    let mut all = args.to_vec();
    all.extend(["--config", "run.ini", "--out", "out"]);
    let out = lab(dir.path(), &all);
    (dir, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn exponents_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["exponents", "--d", "1", "--s", "0.3", "--p", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("p_crit          2.5"), "{text}");
    assert!(text.contains("d,s,p,p_F,p_crit,p_c_s,k,q,rho,beta_nonlinear"));
    let bad = lab(dir.path(), &["exponents", "--d", "1", "--s", "1.2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_writes_series_with_summary() {
    // p = 3: the ODE lifespan is 1/2.
    let (dir, out) = with_config(ODE, &["simulate"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let series = fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
    let lines: Vec<&str> = series.lines().collect();
    assert_eq!(lines[0], "t,l1,l2,linf,mass");
    assert_eq!(lines[lines.len() - 2], "status,t_star,t_max_estimate");
    let summary: Vec<&str> = lines[lines.len() - 1].split(',').collect();
    assert_eq!(summary[0], "BlowUp");
    let t_star: f64 = summary[1].parse().unwrap();
    assert!((t_star - 0.5).abs() < 0.01);
    assert!(dir.path().join("out/runs.csv").exists());

    let again = lab(dir.path(), &["simulate", "--config", "run.ini", "--out", "again"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(series, fs::read_to_string(dir.path().join("again/series.csv")).unwrap());
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let (_d, out) = with_config(&ODE.replace("s = 0.5", "s = 1.2"), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 8: s must lie in (0,1)"), "{}", stderr(&out));

    let (_d, out) = with_config(&ODE.replace("mode = simulate", "mode = nonexistence"), &["nonexistence"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("[forcing]"), "{}", stderr(&out));

    let (_d, out) = with_config(&ODE.replace("mode = simulate", "mode = sweep\nsweep ="), &["sweep"]);
    assert_eq!(out.status.code(), Some(2));

    let (_d, out) = with_config(&ODE.replace("t_end = 1", "t_end = 1\ntend = 2"), &["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown key 'tend'"));
}

#[test]
fn indeterminate_run_exits_3() {
    let text = ODE.replace("t_end = 1", "t_end = 1\nmax_steps = 3");
    let (_d, out) = with_config(&text, &["simulate"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn unexpected_classification_exits_1() {
    let text = ODE.replace("ic = constant amp=1", "ic = constant amp=1\nexpect = global");
    let (_d, out) = with_config(&text, &["simulate"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("expected Global"));
}

#[test]
fn sweep_writes_table_in_submission_order() {
    let text = ODE.replace("mode = simulate", "mode = sweep\nsweep = 4, 3");
    let (dir, out) = with_config(&text, &["sweep", "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let ps: Vec<&str> = table.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ps, ["4.0000000000000000e0", "3.0000000000000000e0"]);
}

#[test]
fn thread_variable_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fujita-lab"))
        .args(["verify", "--cases", "2", "--threads", "1"])
        .current_dir(dir.path())
        .env("FUJITA_LAB_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("FUJITA_LAB_THREADS"));
}

#[test]
fn verify_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(dir.path(), &["verify", "--cases", "10", "--seed", "7", "--out", "v"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let table = fs::read_to_string(dir.path().join("v/verify.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn capacity_and_decay_subcommands() {
    let cap = ODE
        .replace("p = 3", "p = 1.5")
        .replace("mode = simulate", "mode = capacity\nradii = 16, 32, 64, 128");
    let (dir, out) = with_config(&cap, &["capacity"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(dir.path().join("out/capacity.csv")).unwrap().lines().count(), 5);

    let decay = ODE
        .replace("n = 16", "n = 4096")
        .replace("box_length = 10", "box_length = 2000")
        .replace("ic = constant amp=1", "ic = gaussian amp=1 width=4")
        .replace("mode = simulate", "mode = decay\nt_min = 10\nt_max = 300\nt_count = 8");
    let (dir, out) = with_config(&decay, &["decay"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows = fs::read_to_string(dir.path().join("out/decay.csv")).unwrap();
    assert!(rows.starts_with("q,r,t_start,t_end,fitted_slope,theory_slope,rel_error,c_fit\n"));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "ini") {
            let text = fs::read_to_string(&path).unwrap();
            if let Err(e) = fujita_core::harness::parse_config(&text) {
                panic!("{}: {e}", path.display());
            }
            seen += 1;
        }
    }
    assert!(seen >= 8);
}
