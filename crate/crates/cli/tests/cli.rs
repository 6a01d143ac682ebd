use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command as Process, Output};

use clap::Parser;
use grasshopper::formats::{load_colouring, load_grid};
use grasshopper::{build_index, total_probability, Algorithm};
use grasshopper_cli::cli::{Cli, Command};
use grasshopper_cli::commands::colouring_path;
use grasshopper_cli::results::ResultsTable;
use grasshopper_cli::{cmd_solve, cmd_sweep, cmd_verify};

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_grasshopper"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn grasshopper")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn parse(args: &[&str]) -> Command {
    let mut full = vec!["grasshopper"];
    full.extend_from_slice(args);
    Cli::try_parse_from(full).unwrap().command
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn build_grid_file(dir: &Path, depth: u32) -> PathBuf {
    let path = dir.join(format!("d{depth}.grid"));
    let out = run(&["build-grid", "--depth", &depth.to_string(), "--out", p(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn build_grid_writes_header_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = build_grid_file(dir.path(), 5);
    let first = fs::read(&a).unwrap();
    assert!(first.starts_with(b"GRIDv1 depth=5 n2=10242\n"));
    let b = dir.path().join("again.grid");
    assert_eq!(code(&run(&["build-grid", "--depth", "5", "--out", p(&b)])), 0);
    assert_eq!(first, fs::read(&b).unwrap());
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("g.grid");
    assert_eq!(code(&run(&["build-grid", "--depth", "9", "--out", p(&target)])), 1);
    assert_eq!(code(&run(&["solve", "--depth", "2"])), 1);
    assert_eq!(code(&run(&["solve", "--depth", "2", "--theta-frac", "1.5"])), 1);
    assert_eq!(code(&run(&["no-such-command"])), 1);

    let grid = build_grid_file(dir.path(), 2);
    let text = fs::read_to_string(&grid).unwrap();
    let broken = dir.path().join("broken.grid");
    fs::write(&broken, text.replacen("e-1 ", "e-1? ", 1)).unwrap();
    let out = run(&["solve", "--grid", p(&broken), "--theta-frac", "0.4", "--algo", "greedy",
        "--out", p(dir.path())]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));

    let missing = dir.path().join("missing.grid");
    assert_eq!(
        code(&run(&["solve", "--grid", p(&missing), "--theta-frac", "0.4", "--out", p(dir.path())])),
        2
    );

    let bad_threads = bin()
        .env("GRASSHOPPER_THREADS", "zero")
        .args(["build-grid", "--depth", "1", "--out", p(&target)])
        .output()
        .unwrap();
    assert_eq!(code(&bad_threads), 1);
}

#[test]
fn degenerate_angle_with_greedy_does_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--depth", "3", "--theta-frac", "0.5", "--algo", "greedy",
        "--out", p(dir.path())]);
    assert_eq!(code(&out), 0);
    let table = ResultsTable::load(&dir.path().join("results.csv")).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert!((table.rows[0].p - 0.5).abs() < 1e-6);
    assert_eq!(table.rows[0].accepted, 0);
}

#[test]
fn solve_from_file_starts_at_the_saved_colouring() {
    let dir = tempfile::tempdir().unwrap();
    let out = p(dir.path());
    let Command::Solve(args) = parse(&["solve", "--depth", "3", "--theta-c", "5", "--algo",
        "greedy", "--init", "hemisphere", "--out", out])
    else {
        unreachable!()
    };
    let first = cmd_solve(&args).unwrap();
    let saved = first.best_record().colouring.clone().unwrap();

    let init = format!("file:{}", saved.display());
    let Command::Solve(args) = parse(&["solve", "--depth", "3", "--theta-c", "5", "--algo",
        "greedy", "--init", &init, "--out", out])
    else {
        unreachable!()
    };
    let second = cmd_solve(&args).unwrap();
    let rec = second.best_record();
    assert_eq!(rec.initial_p.to_bits(), first.best_record().final_p.to_bits());
    assert_eq!(rec.flips, 0);
    let table = ResultsTable::load(&second.results).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(table.rows.iter().any(|r| r.init == "file"));
}

#[test]
fn sweep_beats_hemisphere_on_each_angle() {
    let dir = tempfile::tempdir().unwrap();
    let Command::Sweep(args) = parse(&["sweep", "--depth", "4", "--theta-c", "5,7,9", "--algo",
        "sa", "--alpha", "0.9999", "--seed", "3", "--out", p(dir.path())])
    else {
        unreachable!()
    };
    let outcome = cmd_sweep(&args).unwrap();
    assert_eq!(outcome.solved.len(), 3);
    let table = ResultsTable::load(&outcome.results).unwrap();
    assert_eq!(table.rows.len(), 3);
    for row in &table.rows {
        assert!(row.p > 1.0 - row.theta / PI, "{row:?}");
        assert!(row.p_minus_hem > 0.0 && row.p_over_hem > 1.0);
    }
}

#[test]
fn chained_sweep_seeds_each_angle_and_resumes_without_work() {
    let dir = tempfile::tempdir().unwrap();
    let argv = ["sweep", "--depth", "3", "--theta-frac", "0.2,0.3,0.4", "--algo", "greedy",
        "--chain", "--init", "hemisphere", "--out", p(dir.path())];
    let Command::Sweep(args) = parse(&argv) else { unreachable!() };
    let outcome = cmd_sweep(&args).unwrap();
    assert_eq!(outcome.solved.len(), 3);
    assert_eq!(outcome.records.len(), 3);

    let grid = grasshopper::build_grid(3).unwrap();
    for k in 1..3 {
        let prev = load_colouring(outcome.records[k - 1].colouring.as_ref().unwrap()).unwrap();
        let index = build_index(&grid, outcome.solved[k]).unwrap();
        let expected = total_probability(&grid, &index, &prev.colouring).unwrap();
        assert!((outcome.records[k].initial_p - expected).abs() < 1e-12);
    }
    let table = ResultsTable::load(&outcome.results).unwrap();
    assert_eq!(table.rows[0].init, "hemisphere");
    assert!(table.rows[1..].iter().all(|r| r.init == "chain"));

    let before = fs::read(&outcome.results).unwrap();
    let again = cmd_sweep(&args).unwrap();
    assert!(again.solved.is_empty());
    assert_eq!(again.skipped.len(), 3);
    assert!(again.records.is_empty());
    assert_eq!(before, fs::read(&outcome.results).unwrap());
}

#[test]
fn empty_sweep_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", "--depth", "2", "--out", p(dir.path())]);
    assert_eq!(code(&out), 1);
}

#[test]
fn sweep_with_one_failing_angle_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let theta = 0.3 * PI;
    // A directory where the colouring should go makes the write fail.
    fs::create_dir(colouring_path(dir.path(), theta, Algorithm::Greedy, "random", 0)).unwrap();
    let out = run(&["sweep", "--depth", "2", "--theta-frac", "0.2,0.3,0.4", "--algo", "greedy",
        "--out", p(dir.path())]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let table = ResultsTable::load(&dir.path().join("results.csv")).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(table.rows.iter().all(|r| r.theta != theta));
}

#[test]
fn index_cache_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    fs::create_dir(&cache).unwrap();
    let mut ps = Vec::new();
    for round in 0..3 {
        let out = dir.path().join(format!("r{round}"));
        fs::create_dir(&out).unwrap();
        let mut argv = vec!["solve", "--depth", "3", "--theta-c", "6", "--algo", "sa",
            "--steps", "20000", "--seed", "11", "--out", p(&out)];
        if round > 0 {
            argv.extend(["--cache-index", p(&cache)]);
        }
        let Command::Solve(args) = parse(&argv) else { unreachable!() };
        ps.push(cmd_solve(&args).unwrap().best_record().final_p.to_bits());
    }
    assert!(fs::read_dir(&cache).unwrap().count() >= 1);
    assert_eq!(ps[0], ps[1]);
    assert_eq!(ps[0], ps[2]);
}

#[test]
fn event_log_follows_the_acceptance_law() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.csv");
    let out = run(&["solve", "--depth", "2", "--theta-c", "5", "--algo", "sa", "--t0", "0.05",
        "--alpha", "0.999", "--steps", "5000", "--seed", "4", "--log-events", p(&log),
        "--out", p(dir.path())]);
    assert_eq!(code(&out), 0);
    let mut reader = csv::Reader::from_path(&log).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["step", "temperature", "pair", "delta", "accepted", "draw"]
    );
    let mut rows = 0;
    let mut prev_t: Option<f64> = None;
    let (mut uphill_rejected, mut downhill_accepted) = (0, 0);
    for rec in reader.records() {
        let rec = rec.unwrap();
        let t: f64 = rec[1].parse().unwrap();
        let delta: f64 = rec[3].parse().unwrap();
        let accepted = &rec[4] == "1";
        let draw: f64 = rec[5].parse().unwrap();
        let prob = if delta >= 0.0 { 1.0 } else { (delta / t).exp() };
        assert_eq!(accepted, prob > draw, "row {rows}");
        if let Some(prev) = prev_t {
            assert!((t - prev * 0.999).abs() <= 1e-15 * prev);
        }
        if delta < 0.0 && accepted {
            downhill_accepted += 1;
        }
        if delta > 0.0 && !accepted {
            uphill_rejected += 1;
        }
        prev_t = Some(t);
        rows += 1;
    }
    assert_eq!(rows, 5000);
    assert_eq!(uphill_rejected, 0);
    assert!(downhill_accepted > 0);
}

#[test]
fn verify_reproduces_the_logged_probability() {
    let dir = tempfile::tempdir().unwrap();
    let grid = build_grid_file(dir.path(), 3);
    let Command::Solve(args) = parse(&["solve", "--grid", p(&grid), "--theta-c", "5", "--algo",
        "sa", "--steps", "30000", "--out", p(dir.path())])
    else {
        unreachable!()
    };
    let solved = cmd_solve(&args).unwrap();
    let logged = ResultsTable::load(&solved.results).unwrap().rows[0].p;
    let col = solved.best_record().colouring.clone().unwrap();

    let points = dir.path().join("points.csv");
    let Command::Verify(args) = parse(&["verify", "--grid", p(&grid), "--colouring", p(&col),
        "--out", p(&points)])
    else {
        unreachable!()
    };
    let report = cmd_verify(&args).unwrap();
    assert!((report.p - logged).abs() < 1e-8);
    assert!(report.antisymmetry_residual().abs() < 1e-10);
    assert!(report.antipodal);

    let mut reader = csv::Reader::from_path(&points).unwrap();
    assert_eq!(
        reader.headers().unwrap().iter().collect::<Vec<_>>(),
        ["index", "x", "y", "z", "lon", "lat", "coloured", "p_i"]
    );
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 642);
    let coloured = rows.iter().filter(|r| &r[6] == "1").count();
    assert_eq!(coloured, 321);

    let out = run(&["verify", "--grid", p(&grid), "--colouring", p(&col)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("antipodal: ok"));
}

#[test]
fn verify_rejects_corrupt_or_mismatched_colourings() {
    let dir = tempfile::tempdir().unwrap();
    let grid2 = build_grid_file(dir.path(), 2);
    let grid3 = build_grid_file(dir.path(), 3);
    let out = run(&["solve", "--grid", p(&grid2), "--theta-c", "5", "--algo", "greedy",
        "--out", p(dir.path())]);
    assert_eq!(code(&out), 0);
    let col = colouring_path(dir.path(), 2.0 * PI / 5.0, Algorithm::Greedy, "random", 0);
    assert!(col.exists());

    let text = fs::read_to_string(&col).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines[1] = format!("2{}", &lines[1][1..]);
    let corrupt = dir.path().join("corrupt.col");
    fs::write(&corrupt, lines.join("\n") + "\n").unwrap();
    let out = run(&["verify", "--grid", p(&grid2), "--colouring", p(&corrupt)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = run(&["verify", "--grid", p(&grid3), "--colouring", p(&col)]);
    assert_eq!(code(&out), 1);

    let out = run(&["verify", "--grid", p(&grid2), "--colouring", p(&col)]);
    assert_eq!(code(&out), 0);
}

#[test]
fn hemisphere_probability_at_quarter_pi_on_depth_six() {
    let dir = tempfile::tempdir().unwrap();
    let grid = build_grid_file(dir.path(), 6);
    let g = load_grid(&grid).unwrap();
    let col = dir.path().join("hem.col");
    grasshopper::formats::save_colouring(
        &col,
        &grasshopper::formats::ColouringFile {
            depth: 6,
            theta: PI / 4.0,
            colouring: grasshopper::colouring::init_hemisphere(&g),
        },
    )
    .unwrap();
    let Command::Verify(args) = parse(&["verify", "--grid", p(&grid), "--colouring", p(&col)])
    else {
        unreachable!()
    };
    let report = cmd_verify(&args).unwrap();
    assert!((report.p / 0.75 - 1.0).abs() <= 0.0025, "P = {}", report.p);
}
