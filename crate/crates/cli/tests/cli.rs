use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mevlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mevlab"))
        .args(args)
        .env_remove("MEVLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn simulate_then_fit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.csv");
    let args = ["simulate", "--model", "logistic", "--alpha", "0.5", "--n", "1000", "--dim", "2", "--seed", "7"];
    let o = mevlab(&[&args[..], &["--out", p(&d)]].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&d).unwrap();
    assert!(text.starts_with("# mevlab simulate "));
    assert!(text.lines().next().unwrap().contains("seed=7"));
    let lines = data_lines(&text);
    assert_eq!(lines[0], "y1,y2");
    assert_eq!(lines.len(), 1001);

    // identical on rerun
    let d2 = dir.path().join("d2.csv");
    mevlab(&[&args[..], &["--out", p(&d2)]].concat());
    assert_eq!(text, fs::read_to_string(&d2).unwrap());

    let o = mevlab(&["fit", "--estimator", "thr4", "--threshold-prob", "0.95", "--margins", "known-frechet", "--in", p(&d)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("alpha_hat=")).expect("alpha_hat line");
    let a: f64 = line["alpha_hat=".len()..].parse().unwrap();
    assert!((a - 0.5).abs() < 0.15, "{a}");
    assert_eq!(out, stdout(&mevlab(&["fit", "--estimator", "thr4", "--p", "0.95", "--margins", "known-frechet", "--in", p(&d)])));
}

#[test]
fn csv_numbers_round_trip() {
    let o = mevlab(&["simulate", "--alpha", "0.3", "--n", "50", "--seed", "1"]);
    for line in data_lines(&stdout(&o)).iter().skip(1) {
        for f in line.split(',') {
            let v: f64 = f.parse().unwrap();
            assert_eq!(v.to_string(), f);
        }
    }
}

#[test]
fn are_table_anchor() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("are.csv");
    let o = mevlab(&["are", "--alphas", "0.1:0.9:0.1", "--p", "0.95", "--L", "100", "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines = data_lines(&text);
    assert_eq!(lines[0], "estimator,alpha,L_or_p,root_are_percent,method,mc_stderr");
    let cell = lines.iter().find(|l| l.starts_with("max1,0.1,")).expect("max1 row");
    let v: f64 = cell.split(',').nth(3).unwrap().parse().unwrap();
    assert!((v - 42.6).abs() <= 1.5, "{v}");
    assert!(lines.iter().any(|l| l.starts_with("thr4,0.5,p=0.95,100,")));
}

#[test]
fn usage_errors_exit_2() {
    // missing seed
    assert_eq!(mevlab(&["simulate", "--alpha", "0.5", "--n", "10"]).status.code(), Some(2));
    // unknown subcommand and bad value
    assert_eq!(mevlab(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(mevlab(&["simulate", "--alpha", "1.5", "--n", "10", "--seed", "1"]).status.code(), Some(2));
    // Monte Carlo efficiency rows without a seed
    let o = mevlab(&["are", "--alphas", "0.5", "--p", "0.95", "--block-method", "monte-carlo"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    // missing input file
    let o = mevlab(&["fit", "--estimator", "thr4", "--p", "0.95", "--in", "/nonexistent/x.csv"]);
    assert_eq!(o.status.code(), Some(2));
    // period outside [1, 500]
    let o = mevlab(&["return-levels", "--alpha", "0.5", "--periods", "600", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimation_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("tiny.csv");
    fs::write(&d, "y1,y2\n1,2\n3,4\n5,6\n").unwrap();
    let o = mevlab(&["fit", "--estimator", "thr4", "--p", "0.5", "--margins", "known-frechet", "--in", p(&d)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sim.cfg");
    fs::write(&cfg, "# simulation defaults\nmodel = opclayton\nalpha = 0.4\nn = 20\ndim = 3\nseed = 5\n").unwrap();
    let o = mevlab(&["simulate", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().next().unwrap().contains("model=opclayton"));
    assert_eq!(data_lines(&text).len(), 21);
    assert_eq!(data_lines(&text)[0], "y1,y2,y3");

    let o = mevlab(&["simulate", "--config", p(&cfg), "--n", "7"]);
    assert_eq!(data_lines(&stdout(&o)).len(), 8);

    fs::write(&cfg, "alpha = 0.4\nbogus = 1\n").unwrap();
    let o = mevlab(&["simulate", "--config", p(&cfg), "--n", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

#[test]
fn study_is_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let reps = dir.path().join(format!("reps-{name}"));
        let o = mevlab(&[
            "study", "--model", "logistic", "--alpha", "0.5", "--n", "1000", "--replicates", "4",
            "--estimators", "thr4,thr1", "--p", "0.95", "--margins", "known-frechet", "--seed", "3",
            "--threads", threads, "--out", p(&out), "--replicates-out", p(&reps),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let strip = |s: String| data_lines(&s).join("\n");
        (strip(fs::read_to_string(out).unwrap()), strip(fs::read_to_string(reps).unwrap()))
    };
    let (s1, r1) = run("1", "a.csv");
    let (s2, r2) = run("3", "b.csv");
    assert_eq!(s1, s2);
    assert_eq!(r1, r2);
    let lines: Vec<&str> = s1.lines().collect();
    assert_eq!(lines[0], "estimator,alpha_true,D,tuning,bias,se,rmse,n_ok");
    assert!(lines[1].starts_with("thr4,0.5,2,p=0.95,"));
    let reps: Vec<&str> = r1.lines().collect();
    assert_eq!(reps[0], "estimator,alpha_true,D,tuning,replicate,alpha_hat,status");
    assert_eq!(reps.len(), 9);
}

#[test]
fn json_output() {
    let o = mevlab(&["--format", "json", "simulate", "--alpha", "0.5", "--n", "3", "--seed", "2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "simulate");
    assert_eq!(v["config"]["seed"], 2);
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn return_levels_single_curve() {
    let o = mevlab(&["return-levels", "--alpha", "0.5", "--periods", "1,5", "--mc-size", "60000", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let lines = data_lines(&text);
    assert_eq!(lines[0], "period,prob,level,mc_stderr");
    let level = |l: &str| l.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!(lines[1].starts_with("1,0.01,"));
    assert!(level(lines[2]) > level(lines[1]));
    // too few draws for the 5-year level
    let o = mevlab(&["return-levels", "--alpha", "0.5", "--periods", "5", "--mc-size", "1000", "--seed", "9"]);
    assert_eq!(o.status.code(), Some(2));
}
