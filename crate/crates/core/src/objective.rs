//! Success probabilities and incremental flip updates.
//!
//! With `x` the full length-`2N` colour vector (`x[upper[p]] = s_p`,
//! `x[lower[p]] = 1 - s_p`), the per-point probability is `P_i = A_i / D_i`
//! with numerator `A_i = sum_j x_j w_ij`, and the total is
//! `P = (1/N) sum_i x_i P_i`.
//!
//! `N P = x^T M x` with the symmetric banded matrix
//! `M_ij = w_ij (1/D_i + 1/D_j) / 2`. Changing pair `p` by `d` moves `x` by
//! `d (e_u - e_l)`, so
//!
//! ```text
//! N dP = d (A_u/D_u + R_u - A_l/D_l - R_l) + d^2 (M_uu + M_ll - 2 M_ul)
//! ```
//!
//! where `R_k = sum_j x_j w_kj / D_j`. Caching `A` and `R` makes every delta
//! O(1) and every applied change O(deg(u) + deg(l)).

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::colouring::{Colouring, FractionalColouring};
use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::kernel::KernelIndex;
use crate::sum::{compensated_sum, CompensatedSum};

/// `1 - theta / pi`, the success probability of a hemisphere colouring.
pub fn hemisphere_reference(theta: f64) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("jumping angle {theta} outside [0, pi]")));
    }
    Ok(1.0 - theta / PI)
}

/// Bell correlation `C = 1 - 2P` of a success probability.
pub fn bell_correlation(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
    1.0 - 2.0 * p
}

/// Total success probability of a binary colouring, from scratch.
pub fn total_probability(grid: &SphereGrid, index: &KernelIndex, c: &Colouring) -> Result<f64> {
    Ok(ObjectiveState::new(grid, index, c)?.total())
}

/// `P_i` of point `i` under the state's colouring.
pub fn point_probability(state: &ObjectiveState<'_>, i: usize) -> f64 {
    state.point_probability(i)
}

/// Cached numerators and totals for one colouring on one band index.
#[derive(Clone, Debug)]
pub struct ObjectiveState<'a> {
    grid: &'a SphereGrid,
    index: &'a KernelIndex,
    /// Full colour vector over all `2N` points.
    spins: Vec<f64>,
    /// `A_i = sum_j x_j w_ij`.
    numerator: Vec<f64>,
    /// `R_i = sum_j x_j w_ij / D_j`.
    reverse: Vec<f64>,
    /// `M_uu + M_ll - 2 M_ul` per pair.
    curvature: Vec<f64>,
    total: f64,
}

fn check_pairs(grid: &SphereGrid, found: usize) -> Result<()> {
    if found != grid.n_pairs() {
        return Err(Error::Shape {
            what: "colouring pairs",
            expected: grid.n_pairs(),
            found,
        });
    }
    Ok(())
}

impl<'a> ObjectiveState<'a> {
    pub fn new(grid: &'a SphereGrid, index: &'a KernelIndex, c: &Colouring) -> Result<Self> {
        check_pairs(grid, c.len())?;
        let values: Vec<f64> = c.iter().map(|b| if b { 1.0 } else { 0.0 }).collect();
        Self::from_pair_values(grid, index, &values)
    }

    pub fn from_fractional(
        grid: &'a SphereGrid,
        index: &'a KernelIndex,
        c: &FractionalColouring,
    ) -> Result<Self> {
        check_pairs(grid, c.len())?;
        Self::from_pair_values(grid, index, c.values())
    }

    fn from_pair_values(grid: &'a SphereGrid, index: &'a KernelIndex, values: &[f64]) -> Result<Self> {
        index.check_grid(grid)?;
        let mut spins = vec![0.0; grid.n_points()];
        for (p, &s) in values.iter().enumerate() {
            spins[grid.upper()[p] as usize] = s;
            spins[grid.lower()[p] as usize] = 1.0 - s;
        }
        let curvature = (0..grid.n_pairs())
            .map(|p| {
                let (u, l) = (grid.upper()[p] as usize, grid.lower()[p] as usize);
                let (du, dl) = (index.denominator(u), index.denominator(l));
                let m_ul = 0.5 * index.weight(u, l) * (1.0 / du + 1.0 / dl);
                index.weight(u, u) / du + index.weight(l, l) / dl - 2.0 * m_ul
            })
            .collect();
        let mut state = ObjectiveState {
            grid,
            index,
            spins,
            numerator: Vec::new(),
            reverse: Vec::new(),
            curvature,
            total: 0.0,
        };
        state.resync();
        Ok(state)
    }

    /// Recomputes all cached sums from the colour vector.
    pub fn resync(&mut self) {
        let index = self.index;
        let spins = &self.spins;
        let (numerator, reverse): (Vec<f64>, Vec<f64>) = (0..spins.len())
            .into_par_iter()
            .map(|i| {
                let (mut a, mut r) = (0.0, 0.0);
                for (j, w) in index.neighbors(i) {
                    a += spins[j] * w;
                    r += spins[j] * w / index.denominator(j);
                }
                (a, r)
            })
            .unzip();
        self.numerator = numerator;
        self.reverse = reverse;
        self.total = self.scratch_total_from(&self.numerator);
    }

    fn scratch_total_from(&self, numerator: &[f64]) -> f64 {
        let terms = self
            .spins
            .iter()
            .zip(numerator)
            .enumerate()
            .map(|(i, (&x, &a))| x * a / self.index.denominator(i));
        compensated_sum(terms) / self.grid.n_pairs() as f64
    }

    /// Total recomputed from the colour vector without touching the caches.
    pub fn recompute_total(&self) -> f64 {
        let index = self.index;
        let spins = &self.spins;
        let numerator: Vec<f64> = (0..spins.len())
            .into_par_iter()
            .map(|i| index.neighbors(i).map(|(j, w)| spins[j] * w).sum())
            .collect();
        self.scratch_total_from(&numerator)
    }

    pub fn grid(&self) -> &'a SphereGrid {
        self.grid
    }

    pub fn index(&self) -> &'a KernelIndex {
        self.index
    }

    /// Current total success probability.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn numerator(&self, i: usize) -> f64 {
        self.numerator[i]
    }

    /// Colour of point `i` in the full vector.
    pub fn spin(&self, i: usize) -> f64 {
        self.spins[i]
    }

    /// `s_p`, the colour of the upper member of pair `p`.
    pub fn pair_value(&self, p: usize) -> f64 {
        self.spins[self.grid.upper()[p] as usize]
    }

    pub fn point_probability(&self, i: usize) -> f64 {
        self.numerator[i] / self.index.denominator(i)
    }

    pub fn point_probabilities(&self) -> Vec<f64> {
        (0..self.spins.len()).map(|i| self.point_probability(i)).collect()
    }

    /// The current colouring if every pair is binary.
    pub fn colouring(&self) -> Option<Colouring> {
        (0..self.grid.n_pairs())
            .map(|p| match self.pair_value(p) {
                1.0 => Some(true),
                0.0 => Some(false),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()
            .map(Colouring::from_bits)
    }

    pub fn fractional(&self) -> FractionalColouring {
        FractionalColouring::new((0..self.grid.n_pairs()).map(|p| self.pair_value(p)).collect())
            .expect("state values stay in [0, 1]")
    }

    /// Change of the total if `s_p` moved by `d`.
    #[inline]
    fn shift_delta_by(&self, p: usize, d: f64) -> f64 {
        let (u, l) = (self.grid.upper()[p] as usize, self.grid.lower()[p] as usize);
        let gu = self.numerator[u] / self.index.denominator(u) + self.reverse[u];
        let gl = self.numerator[l] / self.index.denominator(l) + self.reverse[l];
        (d * (gu - gl) + d * d * self.curvature[p]) / self.grid.n_pairs() as f64
    }

    /// Change of the total if pair `p` were flipped. Does not mutate.
    #[inline]
    pub fn flip_delta(&self, p: usize) -> f64 {
        let s = self.pair_value(p);
        self.shift_delta_by(p, 1.0 - 2.0 * s)
    }

    /// Change of the total if `s_p` were set to `value`.
    pub fn shift_delta(&self, p: usize, value: f64) -> f64 {
        self.shift_delta_by(p, value - self.pair_value(p))
    }

    /// Flips pair `p` and returns the change of the total.
    pub fn apply_flip(&mut self, p: usize) -> f64 {
        let s = self.pair_value(p);
        self.set_pair(p, 1.0 - s)
    }

    /// Sets `s_p` to `value` in `[0, 1]` and returns the change of the total.
    pub fn set_pair(&mut self, p: usize, value: f64) -> f64 {
        assert!((0.0..=1.0).contains(&value), "pair value {value} outside [0, 1]");
        let d = value - self.pair_value(p);
        let delta = self.shift_delta_by(p, d);
        let (u, l) = (self.grid.upper()[p] as usize, self.grid.lower()[p] as usize);
        for (point, sign) in [(u, d), (l, -d)] {
            let inv_d = 1.0 / self.index.denominator(point);
            let (idx, w) = self.index.row(point);
            for (&j, &w) in idx.iter().zip(w) {
                let j = j as usize;
                self.numerator[j] += sign * w;
                self.reverse[j] += sign * w * inv_d;
            }
        }
        self.spins[u] = value;
        self.spins[l] = 1.0 - value;
        self.total += delta;
        delta
    }

    /// Sum of the colour vector; `N` for every antipodal colouring.
    pub fn coloured_mass(&self) -> f64 {
        let mut acc = CompensatedSum::default();
        for &x in &self.spins {
            acc.add(x);
        }
        acc.value()
    }
}
