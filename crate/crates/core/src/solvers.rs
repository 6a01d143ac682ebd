//! Greedy best-flip search and simulated annealing over pair flips.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::colouring::Colouring;
use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::kernel::KernelIndex;
use crate::objective::ObjectiveState;

/// Greedy stops once no flip improves the total by more than this.
pub const GREEDY_STOP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Greedy,
    #[serde(rename = "sa")]
    Anneal,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Greedy => "greedy",
            Algorithm::Anneal => "sa",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "sa" | "anneal" => Ok(Algorithm::Anneal),
            other => Err(Error::Config(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Exponential cooling: `T_{k+1} = alpha T_k` for `steps` steps from `t0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub t0: f64,
    pub alpha: f64,
    pub steps: u64,
    pub seed: u64,
}

impl AnnealSchedule {
    pub fn new(t0: f64, alpha: f64, steps: u64, seed: u64) -> Result<Self> {
        let schedule = AnnealSchedule {
            t0,
            alpha,
            steps,
            seed,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::Config(format!("initial temperature {} must be positive", self.t0)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("cooling factor {} outside (0, 1)", self.alpha)));
        }
        if self.steps == 0 {
            return Err(Error::Config("annealing needs at least one step".into()));
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        AnnealSchedule { seed, ..self }
    }
}

/// `T0 = 0.4`, `alpha = 0.99999`, `150 N` steps, seed 0.
pub fn default_schedule(grid: &SphereGrid) -> AnnealSchedule {
    AnnealSchedule {
        t0: 0.4,
        alpha: 0.99999,
        steps: 150 * grid.n_pairs() as u64,
        seed: 0,
    }
}

/// Slower cooling used for hard transition angles: `T0 = 0.2`,
/// `alpha = 0.999995`, `150 N` steps.
pub fn slow_schedule(grid: &SphereGrid) -> AnnealSchedule {
    AnnealSchedule {
        t0: 0.2,
        alpha: 0.999995,
        ..default_schedule(grid)
    }
}

/// Outcome of one solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub theta: f64,
    pub algorithm: Algorithm,
    pub schedule: Option<AnnealSchedule>,
    pub seed: Option<u64>,
    pub initial_p: f64,
    pub final_p: f64,
    /// Accepted flips.
    pub flips: u64,
    /// Greedy iterations or annealing steps.
    pub steps: u64,
    pub wall_time_secs: f64,
    /// Greedy stopped at its `10 N` iteration cap instead of converging.
    pub hit_iteration_cap: bool,
    pub colouring: Option<PathBuf>,
}

/// One annealing step as seen by an observer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealEvent {
    pub step: u64,
    pub temperature: f64,
    pub pair: usize,
    pub delta: f64,
    /// The uniform draw `p` compared against the acceptance probability.
    pub draw: f64,
    pub accepted: bool,
}

/// Hooks into solver progress. All methods default to no-ops.
pub trait SolverObserver {
    /// Called after every greedy flip with the new total.
    fn greedy_flip(&mut self, _pair: usize, _delta: f64, _total: f64) {}

    fn anneal_step(&mut self, _event: &AnnealEvent) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl SolverObserver for NoObserver {}

fn require_binary(c: &Colouring, grid: &SphereGrid) -> Result<()> {
    if c.len() != grid.n_pairs() {
        return Err(Error::Shape {
            what: "colouring pairs",
            expected: grid.n_pairs(),
            found: c.len(),
        });
    }
    Ok(())
}

/// Best-improvement local search: flip the pair with the largest positive
/// delta (lowest index on ties) until no delta exceeds [`GREEDY_STOP`].
pub fn greedy(grid: &SphereGrid, index: &KernelIndex, c: &Colouring) -> Result<(Colouring, RunRecord)> {
    greedy_observed(grid, index, c, &mut NoObserver)
}

pub fn greedy_observed(
    grid: &SphereGrid,
    index: &KernelIndex,
    c: &Colouring,
    observer: &mut dyn SolverObserver,
) -> Result<(Colouring, RunRecord)> {
    require_binary(c, grid)?;
    let start = Instant::now();
    let mut state = ObjectiveState::new(grid, index, c)?;
    let initial_p = state.total();
    let n = grid.n_pairs();
    let cap = 10 * n as u64;
    let mut flips = 0u64;
    let mut hit_cap = false;

    loop {
        let mut best: Option<(usize, f64)> = None;
        for p in 0..n {
            let d = state.flip_delta(p);
            if d > GREEDY_STOP && best.is_none_or(|(_, bd)| d > bd) {
                best = Some((p, d));
            }
        }
        let Some((p, _)) = best else { break };
        if flips == cap {
            hit_cap = true;
            log::warn!("greedy hit its iteration cap of {cap} flips at theta {}", index.theta());
            break;
        }
        let delta = state.apply_flip(p);
        flips += 1;
        observer.greedy_flip(p, delta, state.total());
    }

    state.resync();
    let record = RunRecord {
        theta: index.theta(),
        algorithm: Algorithm::Greedy,
        schedule: None,
        seed: None,
        initial_p,
        final_p: state.total(),
        flips,
        steps: flips,
        wall_time_secs: start.elapsed().as_secs_f64(),
        hit_iteration_cap: hit_cap,
        colouring: None,
    };
    Ok((state.colouring().expect("binary state"), record))
}

/// Metropolis acceptance probability `min(1, exp(delta / T))`.
#[inline]
pub fn acceptance_probability(delta: f64, temperature: f64) -> f64 {
    if delta >= 0.0 {
        1.0
    } else {
        (delta / temperature).exp().min(1.0)
    }
}

/// Simulated annealing with single-pair moves and exponential cooling.
///
/// Each step draws a pair uniformly and `p` from `U[0, 1)`, flips iff the
/// acceptance probability exceeds `p`, and then cools, rejected steps
/// included. Draws come from `ChaCha8Rng::seed_from_u64(schedule.seed)`.
pub fn simulated_annealing(
    grid: &SphereGrid,
    index: &KernelIndex,
    c: &Colouring,
    schedule: &AnnealSchedule,
) -> Result<(Colouring, RunRecord)> {
    simulated_annealing_observed(grid, index, c, schedule, &mut NoObserver)
}

pub fn simulated_annealing_observed(
    grid: &SphereGrid,
    index: &KernelIndex,
    c: &Colouring,
    schedule: &AnnealSchedule,
    observer: &mut dyn SolverObserver,
) -> Result<(Colouring, RunRecord)> {
    require_binary(c, grid)?;
    schedule.validate()?;
    let start = Instant::now();
    let mut state = ObjectiveState::new(grid, index, c)?;
    let initial_p = state.total();
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    let n = grid.n_pairs();
    let mut temperature = schedule.t0;
    let mut flips = 0u64;

    for step in 0..schedule.steps {
        let pair = rng.gen_range(0..n);
        let draw: f64 = rng.gen();
        let delta = state.flip_delta(pair);
        let accepted = acceptance_probability(delta, temperature) > draw;
        if accepted {
            state.apply_flip(pair);
            flips += 1;
        }
        observer.anneal_step(&AnnealEvent {
            step,
            temperature,
            pair,
            delta,
            draw,
            accepted,
        });
        temperature *= schedule.alpha;
    }

    state.resync();
    let record = RunRecord {
        theta: index.theta(),
        algorithm: Algorithm::Anneal,
        schedule: Some(*schedule),
        seed: Some(schedule.seed),
        initial_p,
        final_p: state.total(),
        flips,
        steps: schedule.steps,
        wall_time_secs: start.elapsed().as_secs_f64(),
        hit_iteration_cap: false,
        colouring: None,
    };
    Ok((state.colouring().expect("binary state"), record))
}

/// All runs of a multi-start search and the position of the best one.
#[derive(Clone, Debug)]
pub struct MultiStart {
    pub runs: Vec<(Colouring, RunRecord)>,
    pub best: usize,
}

impl MultiStart {
    pub fn best_run(&self) -> &(Colouring, RunRecord) {
        &self.runs[self.best]
    }
}

/// Runs the solver once per initial colouring and keeps every run.
///
/// Annealing run `r` uses seed `schedule.seed + r`. Runs execute in parallel;
/// the best run is the one with the highest final probability, first on ties.
pub fn multi_start(
    grid: &SphereGrid,
    index: &KernelIndex,
    inits: &[Colouring],
    algorithm: Algorithm,
    schedule: Option<&AnnealSchedule>,
) -> Result<MultiStart> {
    if inits.is_empty() {
        return Err(Error::Config("multi-start needs at least one initial colouring".into()));
    }
    for c in inits {
        require_binary(c, grid)?;
    }
    let schedule = match (algorithm, schedule) {
        (Algorithm::Anneal, Some(s)) => Some(*s),
        (Algorithm::Anneal, None) => Some(default_schedule(grid)),
        (Algorithm::Greedy, _) => None,
    };
    let runs = inits
        .par_iter()
        .enumerate()
        .map(|(r, c)| match schedule {
            Some(s) => simulated_annealing(grid, index, c, &s.with_seed(s.seed.wrapping_add(r as u64))),
            None => greedy(grid, index, c),
        })
        .collect::<Result<Vec<_>>>()?;
    let best = best_position(runs.iter().map(|(_, rec)| rec.final_p));
    Ok(MultiStart { runs, best })
}

/// Position of the largest value, first on ties.
pub fn best_position(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}
