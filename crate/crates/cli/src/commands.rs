//! The `build-grid`, `solve`, `sweep` and `verify` subcommands.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use grasshopper::colouring::{init_from_colouring, init_hemisphere, init_random};
use grasshopper::formats::{self, format_f64, ColouringFile};
use grasshopper::solvers::{
    best_position, simulated_annealing_observed, slow_schedule, AnnealEvent, MultiStart,
    SolverObserver,
};
use grasshopper::{
    build_grid, default_schedule, multi_start, Algorithm, AnnealSchedule, Colouring,
    KernelIndex, ObjectiveState, RunRecord, SphereGrid,
};

use crate::cli::{
    BuildGridArgs, GridSource, InitMode, SchedulePreset, SolveArgs, SolverArgs, SweepArgs,
    ThetaArgs, VerifyArgs,
};
use crate::error::{CliError, CliResult};
use crate::results::{ResultsRow, ResultsTable, RunKey};

pub const RESULTS_FILE: &str = "results.csv";

#[derive(Clone, Debug)]
pub struct BuildGridSummary {
    pub n_points: usize,
    pub resolution: f64,
}

pub fn cmd_build_grid(args: &BuildGridArgs) -> CliResult<BuildGridSummary> {
    let grid = build_grid(args.depth)?;
    formats::save_grid(&args.out, &grid)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out.display())))?;
    let summary = BuildGridSummary {
        n_points: grid.n_points(),
        resolution: grid.resolution().radians(),
    };
    println!("2N = {}", summary.n_points);
    println!("h = {}", format_f64(summary.resolution));
    Ok(summary)
}

fn load_grid_source(source: &GridSource) -> CliResult<SphereGrid> {
    match (&source.grid, source.depth) {
        (Some(path), _) => formats::load_grid(path)
            .map_err(|e| CliError::Io(format!("cannot load grid {}: {e}", path.display()))),
        (None, Some(depth)) => Ok(build_grid(depth)?),
        (None, None) => Err(CliError::Usage("one of --grid or --depth is required".into())),
    }
}

fn resolve_thetas(args: &ThetaArgs) -> CliResult<Vec<f64>> {
    args.specs().into_iter().map(|s| s.resolve()).collect()
}

fn schedule_for(grid: &SphereGrid, solver: &SolverArgs) -> CliResult<AnnealSchedule> {
    let preset = match solver.schedule {
        SchedulePreset::Default => default_schedule(grid),
        SchedulePreset::Slow => slow_schedule(grid),
    };
    Ok(AnnealSchedule::new(
        solver.t0.unwrap_or(preset.t0),
        solver.alpha.unwrap_or(preset.alpha),
        solver.steps.unwrap_or(preset.steps),
        solver.seed,
    )?)
}

fn run_seeds(solver: &SolverArgs) -> CliResult<Vec<u64>> {
    if solver.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    Ok((0..solver.runs as u64).map(|r| solver.seed.wrapping_add(r)).collect())
}

/// Initial colourings for every run and the label recorded for them.
fn initial_colourings(
    grid: &SphereGrid,
    solver: &SolverArgs,
    prior: Option<&Colouring>,
) -> CliResult<(String, Vec<Colouring>)> {
    if let Some(prior) = prior {
        let c = init_from_colouring(grid, prior)?;
        return Ok(("chain".into(), vec![c; solver.runs]));
    }
    let init_seed = solver.init_seed.unwrap_or(solver.seed);
    let inits = match &solver.init {
        InitMode::Hemisphere => vec![init_hemisphere(grid); solver.runs],
        InitMode::Random => (0..solver.runs as u64)
            .map(|r| init_random(grid, init_seed.wrapping_add(r)))
            .collect(),
        InitMode::File(path) => {
            let file = formats::load_colouring(path)
                .map_err(|e| CliError::Io(format!("cannot load colouring {}: {e}", path.display())))?;
            vec![init_from_colouring(grid, &file.colouring)?; solver.runs]
        }
    };
    Ok((solver.init.label().to_string(), inits))
}

/// Streams annealing steps as `step,temperature,pair,delta,accepted,draw`.
struct EventLog {
    out: BufWriter<File>,
    error: Option<std::io::Error>,
}

impl EventLog {
    fn create(path: &Path) -> CliResult<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "step,temperature,pair,delta,accepted,draw")?;
        Ok(EventLog { out, error: None })
    }

    fn finish(mut self) -> CliResult<()> {
        if let Some(e) = self.error.take() {
            return Err(e.into());
        }
        self.out.flush()?;
        Ok(())
    }
}

impl SolverObserver for EventLog {
    fn anneal_step(&mut self, e: &AnnealEvent) {
        if self.error.is_some() {
            return;
        }
        if let Err(err) = writeln!(
            self.out,
            "{},{},{},{},{},{}",
            e.step,
            format_f64(e.temperature),
            e.pair,
            format_f64(e.delta),
            u8::from(e.accepted),
            format_f64(e.draw)
        ) {
            self.error = Some(err);
        }
    }
}

fn event_log_path(base: &Path, run: usize, runs: usize, theta: Option<f64>) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    if let Some(theta) = theta {
        name.push(format!(".t{theta:.12}"));
    }
    if runs > 1 {
        name.push(format!(".run{run}"));
    }
    PathBuf::from(name)
}

fn run_angle(
    grid: &SphereGrid,
    index: &KernelIndex,
    algorithm: Algorithm,
    inits: &[Colouring],
    schedule: &AnnealSchedule,
    log: Option<(&Path, Option<f64>)>,
) -> CliResult<MultiStart> {
    match (algorithm, log) {
        (Algorithm::Anneal, Some((base, theta))) => {
            let mut runs = Vec::with_capacity(inits.len());
            for (r, c) in inits.iter().enumerate() {
                let mut events = EventLog::create(&event_log_path(base, r, inits.len(), theta))?;
                let s = schedule.with_seed(schedule.seed.wrapping_add(r as u64));
                runs.push(simulated_annealing_observed(grid, index, c, &s, &mut events)?);
                events.finish()?;
            }
            let best = best_position(runs.iter().map(|(_, rec)| rec.final_p));
            Ok(MultiStart { runs, best })
        }
        (Algorithm::Greedy, Some(_)) => {
            log::warn!("--log-events only records annealing steps; greedy runs are not logged");
            Ok(multi_start(grid, index, inits, algorithm, None)?)
        }
        (_, None) => Ok(multi_start(grid, index, inits, algorithm, Some(schedule))?),
    }
}

pub fn colouring_path(out: &Path, theta: f64, algorithm: Algorithm, init: &str, seed: u64) -> PathBuf {
    out.join(format!("colouring_t{theta:.12}_{algorithm}_{init}_s{seed}.col"))
}

/// Writes every run's colouring and appends its row to the table.
fn persist_runs(
    out: &Path,
    grid: &SphereGrid,
    theta: f64,
    init: &str,
    seeds: &[u64],
    runs: &mut MultiStart,
    table: &mut ResultsTable,
) -> CliResult<()> {
    for ((colouring, record), &seed) in runs.runs.iter_mut().zip(seeds) {
        let path = colouring_path(out, theta, record.algorithm, init, seed);
        let file = ColouringFile {
            depth: grid.depth(),
            theta,
            colouring: colouring.clone(),
        };
        formats::save_colouring(&path, &file)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        record.seed = Some(seed);
        record.colouring = Some(path);
        let key = RunKey::new(theta, record.algorithm, init, seed);
        table.rows.retain(|r| r.key() != key);
        table.rows.push(ResultsRow::new(
            theta,
            record.algorithm,
            seed,
            init,
            record.final_p,
            record.steps,
            record.flips,
            record.wall_time_secs,
        ));
    }
    Ok(())
}

fn report_runs(theta: f64, runs: &MultiStart) {
    for (r, (_, rec)) in runs.runs.iter().enumerate() {
        println!(
            "run {r}: theta = {} {} P {} -> {} ({} flips, {:.2} s){}",
            format_f64(theta),
            rec.algorithm,
            format_f64(rec.initial_p),
            format_f64(rec.final_p),
            rec.flips,
            rec.wall_time_secs,
            if rec.hit_iteration_cap { " [iteration cap]" } else { "" }
        );
    }
    if runs.runs.len() > 1 {
        let ps: Vec<f64> = runs.runs.iter().map(|(_, r)| r.final_p).collect();
        let lo = ps.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!("spread over {} runs: {}", ps.len(), format_f64(hi - lo));
    }
    println!("P = {}", format_f64(runs.best_run().1.final_p));
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub theta: f64,
    pub records: Vec<RunRecord>,
    pub best: usize,
    pub results: PathBuf,
}

impl SolveOutcome {
    pub fn best_record(&self) -> &RunRecord {
        &self.records[self.best]
    }
}

pub fn cmd_solve(args: &SolveArgs) -> CliResult<SolveOutcome> {
    let thetas = resolve_thetas(&args.theta)?;
    let [theta] = thetas[..] else {
        return Err(CliError::Usage(format!(
            "solve needs exactly one jumping angle, got {}",
            thetas.len()
        )));
    };
    let solver = &args.solver;
    let seeds = run_seeds(solver)?;
    let grid = load_grid_source(&args.grid)?;
    let schedule = schedule_for(&grid, solver)?;
    let (init, inits) = initial_colourings(&grid, solver, None)?;
    fs::create_dir_all(&solver.out)?;

    let index = KernelIndex::load_or_build(&grid, theta, solver.cache_index.as_deref())?;
    let algorithm = solver.algo.into();
    let log = solver.log_events.as_deref().map(|p| (p, None));
    let mut runs = run_angle(&grid, &index, algorithm, &inits, &schedule, log)?;

    let results = solver.out.join(RESULTS_FILE);
    let mut table = ResultsTable::load(&results)?;
    persist_runs(&solver.out, &grid, theta, &init, &seeds, &mut runs, &mut table)?;
    table.save(&results)?;
    report_runs(theta, &runs);

    Ok(SolveOutcome {
        theta,
        best: runs.best,
        records: runs.runs.into_iter().map(|(_, r)| r).collect(),
        results,
    })
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    /// Angles that ran the solver.
    pub solved: Vec<f64>,
    /// Angles whose rows were already present.
    pub skipped: Vec<f64>,
    pub failed: Vec<(f64, String)>,
    /// Records of every run executed, in angle order.
    pub records: Vec<RunRecord>,
    pub results: PathBuf,
}

/// Best colouring of an angle whose runs are all recorded, if any.
fn completed_angle(
    table: &ResultsTable,
    out: &Path,
    theta: f64,
    algorithm: Algorithm,
    init: &str,
    seeds: &[u64],
) -> Option<PathBuf> {
    let mut best: Option<(f64, PathBuf)> = None;
    for &seed in seeds {
        let row = table.find(&RunKey::new(theta, algorithm, init, seed))?;
        let path = colouring_path(out, theta, algorithm, init, seed);
        if !path.exists() {
            return None;
        }
        if best.as_ref().is_none_or(|(p, _)| row.p > *p) {
            best = Some((row.p, path));
        }
    }
    best.map(|(_, path)| path)
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<SweepOutcome> {
    let thetas = resolve_thetas(&args.theta)?;
    if thetas.is_empty() {
        return Err(CliError::Usage("sweep needs at least one jumping angle".into()));
    }
    let solver = &args.solver;
    let seeds = run_seeds(solver)?;
    let grid = load_grid_source(&args.grid)?;
    let schedule = schedule_for(&grid, solver)?;
    let algorithm: Algorithm = solver.algo.into();
    fs::create_dir_all(&solver.out)?;
    let results = solver.out.join(RESULTS_FILE);
    let mut table = ResultsTable::load(&results)?;
    let mut outcome = SweepOutcome {
        results: results.clone(),
        ..Default::default()
    };
    let mut previous: Option<Colouring> = None;

    for &theta in &thetas {
        let chained = args.chain && previous.is_some();
        let label = if chained { "chain" } else { solver.init.label() };
        if let Some(path) = completed_angle(&table, &solver.out, theta, algorithm, label, &seeds) {
            println!("theta = {}: already done, skipping", format_f64(theta));
            if args.chain {
                previous = Some(formats::load_colouring(&path)?.colouring);
            }
            outcome.skipped.push(theta);
            continue;
        }

        let attempt = (|| -> CliResult<MultiStart> {
            let prior = if chained { previous.as_ref() } else { None };
            let (init, inits) = initial_colourings(&grid, solver, prior)?;
            let index = KernelIndex::load_or_build(&grid, theta, solver.cache_index.as_deref())?;
            let log = solver.log_events.as_deref().map(|p| (p, Some(theta)));
            let mut runs = run_angle(&grid, &index, algorithm, &inits, &schedule, log)?;
            persist_runs(&solver.out, &grid, theta, &init, &seeds, &mut runs, &mut table)?;
            table.save(&results)?;
            report_runs(theta, &runs);
            Ok(runs)
        })();

        match attempt {
            Ok(runs) => {
                previous = Some(runs.best_run().0.clone());
                outcome.records.extend(runs.runs.into_iter().map(|(_, r)| r));
                outcome.solved.push(theta);
            }
            Err(e) => {
                log::error!("theta = {theta}: {e}");
                eprintln!("theta = {}: failed: {e}", format_f64(theta));
                outcome.failed.push((theta, e.to_string()));
            }
        }
    }

    println!(
        "sweep: {} solved, {} skipped, {} failed",
        outcome.solved.len(),
        outcome.skipped.len(),
        outcome.failed.len()
    );
    if !outcome.failed.is_empty() {
        let list: Vec<String> = outcome.failed.iter().map(|(t, e)| format!("{t}: {e}")).collect();
        return Err(CliError::Partial(format!(
            "{} of {} angles failed: {}",
            outcome.failed.len(),
            thetas.len(),
            list.join("; ")
        )));
    }
    Ok(outcome)
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub theta: f64,
    pub p: f64,
    /// Success probability of the same colouring at `pi - theta`.
    pub p_reflected: f64,
    pub antipodal: bool,
    pub point_probabilities: Vec<f64>,
}

impl VerifyReport {
    /// `P(theta) + P(pi - theta) - 1`.
    pub fn antisymmetry_residual(&self) -> f64 {
        self.p + self.p_reflected - 1.0
    }
}

/// Longitude in `[-180, 180)` and latitude in `[-90, 90]`, degrees.
pub fn lon_lat(p: &[f64; 3]) -> (f64, f64) {
    let mut lon = p[1].atan2(p[0]).to_degrees();
    if lon >= 180.0 {
        lon -= 360.0;
    }
    let lat = p[2].clamp(-1.0, 1.0).asin().to_degrees();
    (lon, lat)
}

fn write_point_csv(path: &Path, grid: &SphereGrid, full: &[f64], probabilities: &[f64]) -> CliResult<()> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        w.write_record(["index", "x", "y", "z", "lon", "lat", "coloured", "p_i"])?;
        for (i, p) in grid.points().iter().enumerate() {
            let (lon, lat) = lon_lat(p);
            w.write_record([
                i.to_string(),
                format_f64(p[0]),
                format_f64(p[1]),
                format_f64(p[2]),
                format_f64(lon),
                format_f64(lat),
                (full[i] as u8).to_string(),
                format_f64(probabilities[i]),
            ])?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<VerifyReport> {
    // Anything wrong with the inputs is a usage error here, including parse
    // failures, so a corrupt colouring exits with 1 and a diagnostic.
    let usage = |what: &Path, e: grasshopper::Error| {
        CliError::Usage(format!("{}: {e}", what.display()))
    };
    let grid = formats::load_grid(&args.grid).map_err(|e| usage(&args.grid, e))?;
    let file = formats::load_colouring(&args.colouring).map_err(|e| usage(&args.colouring, e))?;
    if file.depth != grid.depth() || file.colouring.len() != grid.n_pairs() {
        return Err(CliError::Usage(format!(
            "colouring is for depth {} with {} pairs, grid has depth {} with {} pairs",
            file.depth,
            file.colouring.len(),
            grid.depth(),
            grid.n_pairs()
        )));
    }
    let theta = match resolve_thetas(&args.theta)?[..] {
        [] => file.theta,
        [t] => t,
        _ => return Err(CliError::Usage("verify takes at most one jumping angle".into())),
    };
    if !(0.0..=PI).contains(&theta) {
        return Err(CliError::Usage(format!("stored angle {theta} outside [0, pi]")));
    }

    let cache = args.cache_index.as_deref();
    let index = KernelIndex::load_or_build(&grid, theta, cache)?;
    let state = ObjectiveState::new(&grid, &index, &file.colouring)?;
    let p = state.recompute_total();
    let probabilities = state.point_probabilities();

    let reflected_index = KernelIndex::load_or_build(&grid, PI - theta, cache)?;
    let p_reflected = ObjectiveState::new(&grid, &reflected_index, &file.colouring)?.recompute_total();

    let full = file.colouring.expand(&grid);
    let antipodal = grid
        .upper()
        .iter()
        .zip(grid.lower())
        .all(|(&u, &l)| full[u as usize] + full[l as usize] == 1.0)
        && full.iter().sum::<f64>() == grid.n_pairs() as f64;

    if let Some(out) = &args.out {
        write_point_csv(out, &grid, &full, &probabilities)?;
    }

    let report = VerifyReport {
        theta,
        p,
        p_reflected,
        antipodal,
        point_probabilities: probabilities,
    };
    println!("theta = {}", format_f64(theta));
    println!("P = {}", format_f64(report.p));
    println!("P(pi - theta) = {}", format_f64(report.p_reflected));
    println!("P + P(pi - theta) - 1 = {:e}", report.antisymmetry_residual());
    println!("antipodal: {}", if antipodal { "ok" } else { "VIOLATED" });
    Ok(report)
}
