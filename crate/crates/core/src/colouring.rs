//! Antipodal colourings.
//!
//! A colouring assigns one value per antipodal pair: `s_p = 1` colours the
//! upper member of pair `p`, `s_p = 0` the lower one. Random colourings draw
//! from `ChaCha8Rng` seeded with `seed_from_u64`, so a seed fixes the
//! colouring on every platform.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::SphereGrid;
use crate::kernel::KernelIndex;
use crate::objective::ObjectiveState;

/// Binary antipodal colouring, one bit per pair.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Colouring {
    bits: Vec<bool>,
}

impl fmt::Debug for Colouring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Colouring({})", self)
    }
}

impl fmt::Display for Colouring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Colouring {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Colouring { bits }
    }

    /// `s = 1`: the whole upper hemisphere coloured.
    pub fn hemisphere(pairs: usize) -> Self {
        Colouring {
            bits: vec![true; pairs],
        }
    }

    /// I.i.d. fair bits from `ChaCha8Rng::seed_from_u64(seed)`.
    pub fn random(pairs: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Colouring {
            bits: (0..pairs).map(|_| rng.gen::<bool>()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, p: usize) -> bool {
        self.bits[p]
    }

    pub fn flip(&mut self, p: usize) {
        self.bits[p] = !self.bits[p];
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().copied()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of pairs whose upper member is coloured.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Full colour vector over all `2N` grid points.
    pub fn expand(&self, grid: &SphereGrid) -> Vec<f64> {
        let mut full = vec![0.0; grid.n_points()];
        for (p, &b) in self.bits.iter().enumerate() {
            full[grid.upper()[p] as usize] = if b { 1.0 } else { 0.0 };
            full[grid.lower()[p] as usize] = if b { 0.0 } else { 1.0 };
        }
        full
    }
}

pub fn init_hemisphere(grid: &SphereGrid) -> Colouring {
    Colouring::hemisphere(grid.n_pairs())
}

pub fn init_random(grid: &SphereGrid, seed: u64) -> Colouring {
    Colouring::random(grid.n_pairs(), seed)
}

/// Starts from a colouring found earlier, e.g. at another jumping angle.
pub fn init_from_colouring(grid: &SphereGrid, prior: &Colouring) -> Result<Colouring> {
    if prior.len() != grid.n_pairs() {
        return Err(Error::Shape {
            what: "prior colouring pairs",
            expected: grid.n_pairs(),
            found: prior.len(),
        });
    }
    Ok(prior.clone())
}

/// Colouring with the unit of colour per pair split continuously,
/// `s_p` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalColouring {
    values: Vec<f64>,
}

impl FractionalColouring {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(p) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Domain(format!(
                "fractional value {} of pair {p} outside [0, 1]",
                values[p]
            )));
        }
        Ok(FractionalColouring { values })
    }

    pub fn uniform(pairs: usize, value: f64) -> Self {
        Self::new(vec![value; pairs]).expect("uniform value in [0, 1]")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

impl From<&Colouring> for FractionalColouring {
    fn from(c: &Colouring) -> Self {
        FractionalColouring {
            values: c.iter().map(|b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Rounds a fractional colouring to a binary one without lowering the success
/// probability.
///
/// Visits pairs in ascending order. Each non-binary pair moves all of its
/// colour to the member that gains more: with the rest of the colouring held
/// fixed and the members uncorrelated, the total is linear in the split, so
/// one of the two binary completions is at least as good as the current
/// split. The comparison evaluates both completions exactly, which under the
/// per-row normalisation amounts to comparing `P_i + sum_j x_j w_ij / D_j` of
/// the two members. Ties go to the upper member.
///
/// Requires `theta <= pi - 2h` so that antipodal members carry no weight.
pub fn binarize(grid: &SphereGrid, index: &KernelIndex, c: &FractionalColouring) -> Result<Colouring> {
    let h = index.resolution();
    let theta = index.theta();
    if theta > std::f64::consts::PI - 2.0 * h {
        return Err(Error::Precondition(format!(
            "binarisation needs theta <= pi - 2h = {}, got {theta}",
            std::f64::consts::PI - 2.0 * h
        )));
    }
    let mut state = ObjectiveState::from_fractional(grid, index, c)?;
    for p in 0..grid.n_pairs() {
        let v = state.pair_value(p);
        if v == 0.0 || v == 1.0 {
            continue;
        }
        let to_upper = state.shift_delta(p, 1.0);
        let to_lower = state.shift_delta(p, 0.0);
        state.set_pair(p, if to_upper >= to_lower { 1.0 } else { 0.0 });
    }
    Ok(state
        .colouring()
        .expect("every pair is binary after one pass"))
}
