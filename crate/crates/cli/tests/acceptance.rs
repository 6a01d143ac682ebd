//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p grasshopper-cli --test acceptance`.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use grasshopper::colouring::{init_hemisphere, init_random};
use grasshopper::formats::{self, ColouringFile};
use grasshopper::solvers::{greedy_observed, SolverObserver};
use grasshopper::{
    binarize, build_grid, build_index, default_schedule, hemisphere_reference, multi_start,
    total_probability, Algorithm, Colouring, FractionalColouring, ObjectiveState,
};
use grasshopper_cli::cli::{Cli, Command};
use grasshopper_cli::results::ResultsTable;
use grasshopper_cli::{cmd_solve, cmd_verify};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn hemisphere_law() -> Outcome {
    let grid = build_grid(6).map_err(|e| e.to_string())?;
    let c = init_hemisphere(&grid);
    let mut worst = (0.0f64, 0.0f64);
    let mut slowest = 0.0f64;
    for k in 1..=15 {
        let theta = 0.1 * k as f64;
        let start = Instant::now();
        let index = build_index(&grid, theta).map_err(|e| e.to_string())?;
        let p = total_probability(&grid, &index, &c).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let reference = hemisphere_reference(theta).unwrap();
        let dev = (p - reference) / reference;
        if dev.abs() > worst.0.abs() {
            worst = (dev, theta);
        }
        ensure(dev.abs() <= 0.0025, || {
            format!("theta {theta:.1}: P = {p:.6}, 1 - theta/pi = {reference:.6}, deviation {:.3}%", 100.0 * dev)
        })?;
    }
    ensure(slowest <= 300.0, || format!("slowest angle took {slowest:.1} s"))?;
    Ok(format!(
        "depth 6, theta 0.1..1.5: max |dev| {:.3}% at theta {:.1}, slowest angle {:.1} s",
        100.0 * worst.0.abs(),
        worst.1,
        slowest
    ))
}

fn antisymmetry() -> Outcome {
    let grid = build_grid(4).unwrap();
    let mut worst = 0.0f64;
    for frac in [0.2, 0.3, 0.4] {
        let theta = frac * PI;
        let a = build_index(&grid, theta).unwrap();
        let b = build_index(&grid, PI - theta).unwrap();
        for seed in 0..20 {
            let c = init_random(&grid, 1000 + seed);
            let r = total_probability(&grid, &a, &c).unwrap()
                + total_probability(&grid, &b, &c).unwrap()
                - 1.0;
            worst = worst.max(r.abs());
        }
    }
    ensure(worst <= 1e-10, || format!("max |P(t) + P(pi - t) - 1| = {worst:e}"))?;
    Ok(format!("depth 4, 60 cases: max residual {worst:e}"))
}

fn half_pi_degeneracy() -> Outcome {
    let grid = build_grid(4).unwrap();
    let index = build_index(&grid, PI / 2.0).unwrap();
    let (mut p_dev, mut delta_max) = (0.0f64, 0.0f64);
    for seed in 0..20 {
        let state = ObjectiveState::new(&grid, &index, &init_random(&grid, 2000 + seed)).unwrap();
        p_dev = p_dev.max((state.recompute_total() - 0.5).abs());
        for p in 0..grid.n_pairs() {
            delta_max = delta_max.max(state.flip_delta(p).abs());
        }
    }
    ensure(p_dev <= 1e-10 && delta_max <= 1e-10, || {
        format!("max |P - 0.5| = {p_dev:e}, max |flip delta| = {delta_max:e}")
    })?;
    Ok(format!("depth 4, 20 colourings: max |P - 0.5| {p_dev:e}, max |delta| {delta_max:e}"))
}

/// Success probability straight from the definition, no cached sums.
fn direct_probability(grid: &grasshopper::SphereGrid, index: &grasshopper::KernelIndex, c: &Colouring) -> f64 {
    let x = c.expand(grid);
    let n2 = grid.n_points();
    let mut total = 0.0;
    for i in 0..n2 {
        if x[i] == 0.0 {
            continue;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            let w = index.weight(i, j);
            num += xj * w;
            den += w;
        }
        total += num / den;
    }
    total / grid.n_pairs() as f64
}

fn incremental_oracle() -> Outcome {
    let grid = build_grid(2).unwrap();
    let mut worst = 0.0f64;
    let mut checks = 0;
    for theta in [2.0 * PI / 5.0, 2.0 * PI / 7.0, 0.9 * PI] {
        let index = build_index(&grid, theta).unwrap();
        for seed in 0..10 {
            let c = init_random(&grid, 3000 + seed);
            let base = direct_probability(&grid, &index, &c);
            let state = ObjectiveState::new(&grid, &index, &c).unwrap();
            for p in 0..grid.n_pairs() {
                let mut flipped = c.clone();
                flipped.flip(p);
                let truth = direct_probability(&grid, &index, &flipped) - base;
                worst = worst.max((state.flip_delta(p) - truth).abs());
                checks += 1;
            }
        }
    }
    ensure(worst <= 1e-10, || format!("max |delta - recomputed| = {worst:e}"))?;
    Ok(format!("depth 2, {checks} flips: max error {worst:e}"))
}

struct Trace(Vec<f64>);

impl SolverObserver for Trace {
    fn greedy_flip(&mut self, _pair: usize, _delta: f64, total: f64) {
        self.0.push(total);
    }
}

fn greedy_monotone() -> Outcome {
    let grid = build_grid(4).unwrap();
    let index = build_index(&grid, 2.0 * PI / 5.0).unwrap();
    let mut finals = Vec::new();
    for seed in 0..5 {
        let mut trace = Trace(Vec::new());
        let (_, rec) = greedy_observed(&grid, &index, &init_random(&grid, seed), &mut trace).unwrap();
        let mut last = rec.initial_p;
        for &t in &trace.0 {
            ensure(t >= last, || format!("seed {seed}: total fell from {last} to {t}"))?;
            last = t;
        }
        ensure(rec.final_p > 0.6, || format!("seed {seed}: final P = {}", rec.final_p))?;
        finals.push(rec.final_p);
    }
    let lo = finals.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("depth 4, theta 2pi/5, 5 seeds: traces non-decreasing, min final P {lo:.5}"))
}

fn annealing_regression() -> Outcome {
    let grid = build_grid(6).unwrap();
    let theta = 2.0 * PI / 7.9;
    let index = build_index(&grid, theta).unwrap();
    let inits: Vec<Colouring> = (0..5).map(|r| init_random(&grid, r)).collect();
    let start = Instant::now();
    let schedule = default_schedule(&grid);
    let runs = multi_start(&grid, &index, &inits, Algorithm::Anneal, Some(&schedule)).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let best = runs.best_run().1.final_p;
    let all: Vec<String> = runs.runs.iter().map(|(_, r)| format!("{:.4}", r.final_p)).collect();
    ensure((best - 0.750).abs() <= 0.01 && elapsed <= 7200.0, || {
        format!("best P = {best:.5} (runs {}), {elapsed:.0} s", all.join(", "))
    })?;
    Ok(format!(
        "depth 6, theta 2pi/7.9, 5 runs [{}]: best P {best:.5}, {elapsed:.1} s",
        all.join(", ")
    ))
}

fn binarisation() -> Outcome {
    let grid = build_grid(3).unwrap();
    let index = build_index(&grid, 2.0 * PI / 5.0).unwrap();
    let mut min_gain = f64::INFINITY;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let values = (0..grid.n_pairs()).map(|_| rng.gen::<f64>()).collect();
        let frac = FractionalColouring::new(values).unwrap();
        let before = ObjectiveState::from_fractional(&grid, &index, &frac).unwrap().total();
        let after = total_probability(&grid, &index, &binarize(&grid, &index, &frac).unwrap()).unwrap();
        ensure(after >= before - 1e-10, || format!("seed {seed}: {before} -> {after}"))?;
        min_gain = min_gain.min(after - before);
    }
    Ok(format!("depth 3, 50 fractional colourings: min gain {min_gain:e}"))
}

fn grid_integrity() -> Outcome {
    for depth in 0..=5u32 {
        let grid = build_grid(depth).unwrap();
        let n2 = grid.n_points();
        ensure(n2 == 2 + 10 * 4usize.pow(depth), || format!("depth {depth}: {n2} points"))?;
        for i in 0..n2 {
            let a = grid.antipode_of(i);
            let (p, q) = (grid.point(i), grid.point(a));
            let gap = (0..3).map(|k| (p[k] + q[k]).abs()).fold(0.0, f64::max);
            ensure(a != i && grid.antipode_of(a) == i && gap <= 1e-9, || {
                format!("depth {depth}: point {i} antipode {a}, gap {gap:e}")
            })?;
        }
    }
    Ok("depths 0-5: point counts and antipodal involution hold".into())
}

fn persistence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let grid = build_grid(4).unwrap();
    let grid_path = dir.path().join("d4.grid");
    formats::save_grid(&grid_path, &grid).unwrap();
    let back = formats::load_grid(&grid_path).unwrap();
    let bits_equal = back
        .points()
        .iter()
        .zip(grid.points())
        .all(|(a, b)| (0..3).all(|k| a[k].to_bits() == b[k].to_bits()))
        && back.antipode() == grid.antipode();
    ensure(bits_equal, || "grid round trip changed coordinates".into())?;

    let file = ColouringFile {
        depth: 4,
        theta: 2.0 * PI / 7.9,
        colouring: init_random(&grid, 77),
    };
    let col_path = dir.path().join("c.col");
    formats::save_colouring(&col_path, &file).unwrap();
    let col_back = formats::load_colouring(&col_path).unwrap();
    ensure(col_back == file && col_back.theta.to_bits() == file.theta.to_bits(), || {
        "colouring round trip differs".into()
    })?;

    let out = dir.path().to_str().unwrap();
    let gp = grid_path.to_str().unwrap();
    let cli = Cli::try_parse_from([
        "grasshopper", "solve", "--grid", gp, "--theta-c", "7.9", "--algo", "sa", "--alpha",
        "0.9999", "--out", out,
    ])
    .map_err(|e| e.to_string())?;
    let Command::Solve(args) = cli.command else { unreachable!() };
    let solved = cmd_solve(&args).map_err(|e| e.to_string())?;
    let logged = ResultsTable::load(&solved.results).map_err(|e| e.to_string())?.rows[0].p;
    let col = solved.best_record().colouring.clone().unwrap();
    let cli = Cli::try_parse_from([
        "grasshopper", "verify", "--grid", gp, "--colouring", col.to_str().unwrap(),
    ])
    .map_err(|e| e.to_string())?;
    let Command::Verify(args) = cli.command else { unreachable!() };
    let report = cmd_verify(&args).map_err(|e| e.to_string())?;
    let diff = (report.p - logged).abs();
    ensure(diff <= 1e-8, || format!("verify P {} vs logged {logged}", report.p))?;
    Ok(format!("grid and colouring bit-identical; verify matches logged P to {diff:e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("hemisphere law", hemisphere_law),
        ("antisymmetry", antisymmetry),
        ("half-pi degeneracy", half_pi_degeneracy),
        ("incremental delta oracle", incremental_oracle),
        ("greedy monotonicity", greedy_monotone),
        ("annealing regression", annealing_regression),
        ("binarisation monotonicity", binarisation),
        ("grid integrity", grid_integrity),
        ("persistence round trip", persistence),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
