use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dilemma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dilemma"))
        .args(args)
        .env_remove("DILEMMA_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn help_lists_strategies_and_bit_order() {
    for args in [&["--help"][..], &["best-response", "--help"], &["qlearn", "--help"]] {
        let text = stdout(&dilemma(args));
        for token in ["ALLC", "REPEAT", "TFT", "WSLS", "GRIM", "AGRIM", "AWSLS", "ATFT", "AREPEAT", "ALLD"] {
            assert!(text.contains(token), "{args:?} lacks {token}");
        }
        assert!(text.contains("CC,CD,DC,DD"));
    }
}

#[test]
fn best_response_against_wsls() {
    let o = dilemma(&["best-response", "--opp", "WSLS", "--gamma", "0.9", "--payoffs", "4,0,6,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("best response  WSLS (1001)"));
    assert!(text.contains("qCCC=40 qCCD=33.3 qCDC=33.3 qCDD=40 qDCC=39.3 qDCD=37 qDDC=37 qDDD=39.3"));
}

#[test]
fn unconditional_cooperators_are_exploited() {
    let text = stdout(&dilemma(&["best-response", "--opp", "ALLC", "--gamma", "0.9"]));
    assert!(text.contains("best response  All-D (0000)"));
}

#[test]
fn tft_by_bits_in_the_defection_region() {
    let text = stdout(&dilemma(&["best-response", "--opp", "1010", "--gamma", "0.1"]));
    assert!(text.contains("best response  All-D (0000)"));
    assert!(text.contains("region 6"));
}

#[test]
fn exit_codes() {
    assert_eq!(dilemma(&["best-response", "--opp", "NOPE", "--gamma", "0.5"]).status.code(), Some(2));
    assert_eq!(dilemma(&["best-response", "--opp", "TFT", "--gamma", "1.0"]).status.code(), Some(2));
    assert_eq!(dilemma(&["scan", "--payoffs", "3,0,6,1"]).status.code(), Some(2));
    let boundary = dilemma(&["best-response", "--opp", "GRIM", "--gamma", "0.4", "--strict"]);
    assert_eq!(boundary.status.code(), Some(3));
    assert!(dilemma(&["best-response", "--opp", "GRIM", "--gamma", "0.4"]).status.success());

    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let target = blocker.join("table.csv");
    let o = dilemma(&["scan", "--table1", "--out", target.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn table_reproduction() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let o = dilemma(&["scan", "--payoffs", "4,0,6,1", "--table1", "--gamma", "0.9", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = fs::read_to_string(&path).unwrap();
    let yes: Vec<&str> = csv
        .lines()
        .skip(1)
        .filter(|l| l.contains(",Yes,"))
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(yes, ["7", "8", "16"]);
}

#[test]
fn scan_reports_onsets() {
    let text = stdout(&dilemma(&["scan", "--gamma-grid", "0.05:0.95:0.05"]));
    assert!(text.contains("onset Grim: 0.400000"));
    assert!(text.contains("onset WSLS: 0.666666") || text.contains("onset WSLS: 0.666667"));
    let text = stdout(&dilemma(&["scan", "--payoffs", "3,0,5,2"]));
    let rows = text.lines().skip(1).filter(|l| !l.starts_with("onset"));
    for row in rows {
        let equilibria = row.split(',').nth(1).unwrap();
        assert!(!equilibria.split(';').any(|s| s == "WSLS"), "{row}");
    }
    assert!(!text.contains("onset WSLS"));
}

#[test]
fn qlearn_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = dilemma(&[
        "qlearn", "--opp", "WSLS", "--gamma", "0.2", "--realizations", "20", "--steps", "20000",
        "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("learned policy (greedy on mean Q)  All-D (0000)"));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert!(trace.starts_with("t,qCCC,qCCD,qCDC,qCDD,qDCC,qDCD,qDDC,qDDD\n"));
    assert_eq!(trace.lines().count(), 1 + 201);
    let tally = fs::read_to_string(out.join("tally.csv")).unwrap();
    assert!(tally.starts_with("strategy_bits,count\n"));
}

#[test]
fn seed_comes_from_the_environment() {
    let run = |seed: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_dilemma"));
        cmd.args(["qlearn", "--opp", "GRIM", "--gamma", "0.9", "--realizations", "8", "--steps", "3000", "--noise", "0.1"]);
        match seed {
            Some(s) => cmd.env("DILEMMA_SEED", s),
            None => cmd.env_remove("DILEMMA_SEED"),
        };
        stdout(&cmd.output().unwrap())
    };
    let a = run(Some("17"));
    assert!(a.contains("seed 17"));
    assert_eq!(a, run(Some("17")));
    assert_ne!(a, run(None));
}

#[test]
fn alternating_phases() {
    let text = stdout(&dilemma(&[
        "qlearn", "--opp", "ALLD", "--gamma", "0.2", "--realizations", "8", "--steps", "20000", "--phases", "2",
    ]));
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().all(|l| l.contains("learned All-D")));
}

fn read_dir_sorted(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn quick_reproduce_is_deterministic_and_complete() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = dilemma(&["reproduce", "--quick", "--seed", "3", "--out", d.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let names = read_dir_sorted(&a);
    assert_eq!(names.len(), 8);
    assert_eq!(names, read_dir_sorted(&b));
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let manifest = fs::read_to_string(a.join("manifest.csv")).unwrap();
    let mut listed: Vec<String> = manifest.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    listed.push("manifest.csv".into());
    listed.sort();
    assert_eq!(listed, names);
}
