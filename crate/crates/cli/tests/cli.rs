use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_symbiosim"));
    c.env_remove("SYMBIOSIM_SEED");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out-dir").arg(out).output().unwrap()
}

fn stdout_paths(o: &Output) -> Vec<PathBuf> {
    String::from_utf8_lossy(&o.stdout)
        .lines()
        .map(PathBuf::from)
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SURVIVAL_ZERO: &[&str] = &[
    "survival", "--lambda", "0", "--mu", "0.5", "--trials", "100", "--tmax", "50", "--seed", "7",
];

#[test]
fn pure_death_survival_row_is_zero() {
    let d = tempfile::tempdir().unwrap();
    let o = run(SURVIVAL_ZERO, d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&stdout_paths(&o)[0]).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "variant,d,lambda,mu,epsilon,t_max,trials,successes,estimate,ci_lo,ci_hi,seed"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[8], "0");
    assert_eq!(row[11], "7");
}

#[test]
fn reruns_are_byte_identical_and_never_overwrite() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "survival", "--lambda", "1.5,2.5", "--mu", "0.5", "--trials", "200", "--tmax", "5",
        "--seed", "11",
    ];
    let a = run(&args, d.path());
    let mut with_workers = args.to_vec();
    with_workers.extend(["--parallelism", "3"]);
    let b = run(&with_workers, d.path());
    let (pa, pb) = (&stdout_paths(&a)[0], &stdout_paths(&b)[0]);
    assert_ne!(pa, pb);
    assert!(pb.to_string_lossy().ends_with("-r1.csv"));
    assert_eq!(fs::read(pa).unwrap(), fs::read(pb).unwrap());
}

#[test]
fn every_output_is_in_exactly_one_manifest_record() {
    let d = tempfile::tempdir().unwrap();
    run(SURVIVAL_ZERO, d.path());
    run(SURVIVAL_ZERO, d.path());
    run(
        &["meanfield", "--mu", "0.3", "--lambda-grid", "0.9:1.0:0.05"],
        d.path(),
    );
    let manifest = fs::read_to_string(d.path().join("manifest.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = manifest
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), 3);
    let mut outputs: Vec<String> = records
        .iter()
        .flat_map(|r| {
            r["outputs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|p| p.as_str().unwrap().to_string())
        })
        .collect();
    let n = outputs.len();
    outputs.sort();
    outputs.dedup();
    assert_eq!(outputs.len(), n);
    for entry in fs::read_dir(d.path()).unwrap() {
        let p = entry.unwrap().path();
        if p.file_name().unwrap() != "manifest.jsonl" {
            assert!(
                outputs.contains(&p.display().to_string()),
                "{} not in a manifest",
                p.display()
            );
        }
    }
    assert_eq!(records[0]["seed"], 7);
    assert_eq!(records[0]["hash"], records[1]["hash"]);
    assert!(records[0]["params"]["trials"] == "100");
}

#[test]
fn seeds_are_mandatory_but_may_come_from_the_environment() {
    let d = tempfile::tempdir().unwrap();
    let args = [
        "survival", "--lambda", "0", "--mu", "0.5", "--trials", "5", "--tmax", "1",
    ];
    let o = run(&args, d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
    let o = bin()
        .args(args)
        .arg("--out-dir")
        .arg(d.path())
        .env("SYMBIOSIM_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(fs::read_to_string(&stdout_paths(&o)[0])
        .unwrap()
        .trim_end()
        .ends_with(",9"));
}

#[test]
fn missing_parameters_are_listed() {
    let d = tempfile::tempdir().unwrap();
    let o = run(&["survival", "--lambda", "1"], d.path());
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(
        e.contains("mu") && e.contains("trials") && e.contains("tmax"),
        "{e}"
    );
}

#[test]
fn config_files_are_checked_and_overridden_by_flags() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("run.cfg");
    fs::write(
        &cfg,
        "lambda = 0\nmu = 0.5\ntrials = 10\ntmax = 3\nseed = 4\nspeed = 2\n",
    )
    .unwrap();
    let o = run(&["survival", "--config", cfg.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("speed"));
    fs::write(
        &cfg,
        "lambda = 0\nmu = 0.5\ntrials = 10\ntmax = 3\nseed = 4\n",
    )
    .unwrap();
    let o = run(
        &[
            "survival",
            "--config",
            cfg.to_str().unwrap(),
            "--trials",
            "12",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&stdout_paths(&o)[0]).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap().split(',').nth(6), Some("12"));
}

#[test]
fn rho_a_table_and_plot() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "meanfield",
            "--mu",
            "0.3,0.4,0.5,0.6,0.8",
            "--lambda-grid",
            "0.8:1.2:0.005",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let paths = stdout_paths(&o);
    let table = fs::read_to_string(&paths[0]).unwrap();
    assert_eq!(table.lines().count(), 1 + 5 * 81);
    let jumps = fs::read_to_string(&paths[1]).unwrap();
    let mus: Vec<&str> = jumps
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(mus, vec!["0.3", "0.4"]);
    let o = run(
        &[
            "plot",
            "--input",
            paths[0].to_str().unwrap(),
            "--x",
            "lambda",
            "--y",
            "rho_A",
            "--group",
            "mu",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout_paths(&o);
    let dat = fs::read_to_string(
        out.iter()
            .find(|p| p.extension().unwrap() == "dat")
            .unwrap(),
    )
    .unwrap();
    assert_eq!(dat.matches("# mu=").count(), 5);
    let svg = fs::read_to_string(
        out.iter()
            .find(|p| p.extension().unwrap() == "svg")
            .unwrap(),
    )
    .unwrap();
    assert_eq!(svg.matches("<polyline").count(), 5);
}

#[test]
fn plot_edge_cases() {
    let d = tempfile::tempdir().unwrap();
    let empty = d.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = run(&["plot", "--input", empty.to_str().unwrap()], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    let two = d.path().join("two.csv");
    fs::write(&two, "t,n\n0,1\n1,2\n2,4\n").unwrap();
    let o = run(
        &["plot", "--input", two.to_str().unwrap(), "--format", "svg"],
        d.path(),
    );
    let svg = fs::read_to_string(&stdout_paths(&o)[0]).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    let o = run(
        &["plot", "--input", two.to_str().unwrap(), "--y", "missing"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing"));
}

#[test]
fn numerical_failures_exit_with_three() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "decay", "--lambda", "4", "--t-grid", "1:4:1", "--trials", "20", "--side", "41",
            "--seed", "1",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = run(
        &["pde", "--lambda", "2", "--mu", "0.5", "--dt", "1"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        &[
            "pde", "--lambda", "2", "--mu", "0.5", "--length", "40", "--dx", "0.2",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn pde_front_and_evolution() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &["pde", "--lambda", "2", "--mu", "0.5", "--dx", "0.2"],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // outputs: equilibrium, speed report, positions
    let speed = fs::read_to_string(&stdout_paths(&o)[1]).unwrap();
    let v: f64 = speed
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .nth(4)
        .unwrap()
        .parse()
        .unwrap();
    assert!((v / 2f64.sqrt() - 1.0).abs() < 0.05, "speed {v}");
    let o = run(
        &[
            "pde",
            "--lambda",
            "2",
            "--mu",
            "0.5",
            "--mode",
            "evolve",
            "--length",
            "20",
            "--dx",
            "0.5",
            "--t-end",
            "5",
            "--snapshot-dt",
            "1",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let snaps = fs::read_to_string(stdout_paths(&o).last().unwrap()).unwrap();
    assert_eq!(snaps.lines().next(), Some("t,x,qA,qB"));
    assert_eq!(snaps.lines().count(), 1 + 6 * 41);
}

#[test]
fn logged_events_feed_slab_counts() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "survival",
            "--lambda",
            "3",
            "--mu",
            "0.2",
            "--trials",
            "4",
            "--tmax",
            "4",
            "--seed",
            "5",
            "--log-events",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = stdout_paths(&o)
        .into_iter()
        .find(|p| p.extension().unwrap() == "log")
        .unwrap();
    assert!(fs::read_to_string(&log)
        .unwrap()
        .starts_with("# symbiosim-events v1"));
    let o = run(
        &[
            "slab",
            "--log",
            log.to_str().unwrap(),
            "--lo",
            "0",
            "--hi",
            "28",
            "--t0",
            "0",
            "--t1",
            "0",
            "--species",
            "AB",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(&stdout_paths(&o)[0]).unwrap();
    assert!(csv.lines().nth(1).unwrap().ends_with(",1"), "{csv}");
}

#[test]
fn bounds_report_with_checks() {
    let d = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "bounds",
            "--lambda-c1",
            "3.3,3.9",
            "--block-trials",
            "100",
            "--perc-trials",
            "20",
            "--seed",
            "2",
        ],
        d.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let paths = stdout_paths(&o);
    assert_eq!(paths.len(), 4);
    let budget = fs::read_to_string(&paths[1]).unwrap();
    assert!(budget.lines().nth(1).unwrap().ends_with(",true"));
    let o = run(&["bounds", "--block-trials", "10"], d.path());
    assert_eq!(o.status.code(), Some(2));
}
