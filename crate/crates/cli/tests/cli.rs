use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_assoc-totient");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("assoc-totient-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["const", "zeta"]).status.code(), Some(0));
    assert_eq!(run(&["const", "riemann"]).status.code(), Some(3));
    assert_eq!(run(&["const", "dirichlet:q=5,index=1.2"]).status.code(), Some(3));
    assert_eq!(run(&["const", "gl2:source=delta,chi=q=5,index=1"]).status.code(), Some(2));
    assert_eq!(run(&["phi", "gl2:source=delta", "10007"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "zeta", "--xmax", "5", "--checkpoints", "7"]).status.code(), Some(4));
    assert_eq!(run(&["const", "zeta", "--tol=-1"]).status.code(), Some(4));
    assert_eq!(run(&["scan", "zeta"]).status.code(), Some(4));
    assert_eq!(run(&["scan", "zeta", "--xmax", "1.5"]).status.code(), Some(3));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["dump", "zeta", "--nmax", "1e9", "--memory-cap", "1M"]).status.code(), Some(4));
}

#[test]
fn help_documents_everything() {
    let help = stdout(&run(&["--help"]));
    for word in [
        "const",
        "phi",
        "scan",
        "series",
        "dump",
        "selftest",
        "--threads",
        "--memory-cap",
        "--format",
        "--out",
        "--allow-ramanujan-violations",
        "Exit codes",
    ] {
        assert!(help.contains(word), "help lacks {word}");
    }
}

#[test]
fn constant_and_phi_examples() {
    let o = stdout(&run(&["const", "zeta"]));
    assert!(o.contains("value_re: 3.03963550927013"), "{o}");
    let o = stdout(&run(&["const", "dirichlet:q=4,index=1"]));
    assert!(o.contains("value_re: 5.458720318519"), "{o}");
    let o = stdout(&run(&["phi", "zeta", "12"]));
    assert!(o.contains("phi_re: 4.0000000000000000e0") && o.contains("divisor_sum_re: 4.0000000000000000e0"), "{o}");
    let o = stdout(&run(&["--format", "csv", "phi", "zeta", "1"]));
    assert_eq!(o.lines().count(), 2);
    assert!(o.lines().nth(1).unwrap().starts_with("zeta,1,1.0000000000000000e0,"));
    let o = stdout(&run(&["--format", "json", "const", "zeta", "--tol", "0.5"]));
    let v: serde_json::Value = serde_json::from_str(&o).unwrap();
    assert_eq!(v["method"], "euler-product");
    assert!(v["tail_bound"].as_f64().unwrap() <= 0.5);
}

#[test]
fn scan_small_range() {
    let o = run(&["scan", "zeta", "--xmax", "10", "--checkpoints", "10"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("10,3.2000000000000000e1,"), "{row}");
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("smoothed-sum identity"), "{err}");
}

#[test]
fn scan_formats() {
    let json = stdout(&run(&["--format", "json", "scan", "zeta", "--xmax", "1e5"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["schema"], 1);
    assert!(v["fit"]["slope"].as_f64().unwrap() < 0.0);
    let plot = stdout(&run(&["--format", "plot-data", "scan", "zeta", "--xmax", "1e5"]));
    assert!(plot.starts_with("# sqrt_log_x log_abs_R\n"));
    assert_eq!(plot.lines().count() - 1, v["fit"]["used"].as_u64().unwrap() as usize);
}

#[test]
fn out_file_and_config() {
    let out = scratch("scan.csv");
    let conf = scratch("run.conf");
    std::fs::write(&conf, format!("xmax = 1e4\nthreads = 2\nout = {}\n", out.display())).unwrap();
    let o = run(&["--config", conf.to_str().unwrap(), "scan", "zeta"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let from_file = std::fs::read_to_string(&out).unwrap();
    assert_eq!(from_file.lines().last().unwrap().split(',').next(), Some("10000"));

    // Flags win over the config file.
    let o = run(&["--config", conf.to_str().unwrap(), "--out", "/dev/stdout", "scan", "zeta", "--xmax", "100"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().last().unwrap().split(',').next(), Some("100"));

    std::fs::write(&conf, "xmax = 1e4\nwarp = 9\n").unwrap();
    assert_eq!(run(&["--config", conf.to_str().unwrap(), "scan", "zeta"]).status.code(), Some(3));
}

#[test]
fn series_examples() {
    let o = run(&["--format", "json", "series", "zeta", "--nmax", "1000"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let h = v["h_table"].as_array().unwrap();
    assert_eq!(h[0]["h_re"].as_f64(), Some(1.0));
    assert!(h[1..].iter().all(|e| e["h_re"].as_f64() == Some(0.0)));
    let o = run(&["--format", "json", "series", "zeta", "--nmax", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["partial_re"].as_f64(), Some(1.0));

    let gap = |n: &str| {
        let o = run(&["--format", "json", "series", "gl2:source=delta,chi=q=5,index=1", "--nmax", n]);
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        (v["gap"].as_f64().unwrap(), v["ratio_gap"].as_f64().unwrap())
    };
    let (a_small, r_small) = gap("1000");
    let (a_large, r_large) = gap("10000");
    assert!(a_large < a_small && r_large < r_small);
}

#[test]
fn dump_tables() {
    let o = stdout(&run(&["dump", "zeta", "--nmax", "6", "--what", "phi"]));
    let phi: Vec<f64> = o
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f[0].parse::<f64>().unwrap() * f[1].parse::<f64>().unwrap()
        })
        .collect();
    let rounded: Vec<i64> = phi.iter().map(|v| v.round() as i64).collect();
    assert_eq!(rounded, vec![1, 1, 2, 2, 4, 2]);
    let o = stdout(&run(&["dump", "dirichlet:q=4,index=1", "--nmax", "5", "--what", "coeff"]));
    let re: Vec<String> = o.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect();
    assert_eq!(re[0], "1.0000000000000000e0");
    assert_eq!(re[2], "-1.0000000000000000e0");
    let o = stdout(&run(&["--format", "json", "dump", "zeta", "--nmax", "3", "--what", "h"]));
    let v: serde_json::Value = serde_json::from_str(&o).unwrap();
    assert_eq!(v["values"].as_array().unwrap().len(), 3);
}

#[test]
fn selftest_names_broken_file() {
    let bad = scratch("broken_eigenvalues.txt");
    std::fs::write(&bad, "2,0.5\n3,not-a-number\n").unwrap();
    let o = run(&["selftest", "--quick", "--eigenvalues", bad.to_str().unwrap()]);
    let table = stdout(&o);
    let row = table.lines().find(|l| l.trim_start().starts_with("9b")).unwrap();
    assert!(row.contains("FAIL") && row.contains("broken_eigenvalues.txt"), "{row}");
    assert_eq!(o.status.code(), Some(1));
}
