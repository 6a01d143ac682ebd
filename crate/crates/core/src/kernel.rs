//! Smoothed delta kernel and the per-angle neighbour band.
//!
//! For a jumping angle `theta` every point `i` correlates with the points `j`
//! whose central angle lies within `2h` of `theta`, with weight
//! `w_ij = phi((angle(i, j) - theta) / h)`. The band is stored in compressed
//! rows; `D_i` is the row sum.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{central_angle, dot, SphereGrid};

/// The 4-point cosine kernel, `(1 + cos(pi u / 2)) / 4` on `|u| < 2` and zero
/// elsewhere.
pub fn kernel_phi(u: f64) -> Result<f64> {
    if u.is_nan() {
        return Err(Error::Domain("kernel argument is NaN".into()));
    }
    Ok(phi(u))
}

#[inline]
fn phi(u: f64) -> f64 {
    if u.abs() >= 2.0 {
        0.0
    } else {
        0.25 * (1.0 + (0.5 * PI * u).cos())
    }
}

/// Kernel of half-support `2h`, evaluated on angular offsets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel {
    h: f64,
}

impl Kernel {
    pub fn new(h: f64) -> Self {
        assert!(h > 0.0, "kernel width must be positive");
        Kernel { h }
    }

    pub fn width(&self) -> f64 {
        self.h
    }

    /// Weight for a pair separated by `angle` when the jump is `theta`.
    #[inline]
    pub fn weight(&self, angle: f64, theta: f64) -> f64 {
        phi((angle - theta) / self.h)
    }
}

/// Neighbour bands and row sums for one jumping angle on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelIndex {
    theta: f64,
    h: f64,
    depth: u32,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
    denominators: Vec<f64>,
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::Domain(format!("jumping angle {theta} outside [0, pi]")));
    }
    Ok(())
}

/// Scans the full point set for the band of point `i`.
fn scan_row(grid: &SphereGrid, kernel: Kernel, theta: f64, i: usize) -> Vec<(u32, f64)> {
    let reach = 2.0 * kernel.width();
    // Cheap prefilter on the dot product; the exact test uses the angle.
    let margin = 1e-9;
    let dot_hi = (theta - reach).max(0.0).cos() + margin;
    let dot_lo = (theta + reach).min(PI).cos() - margin;
    let p = grid.point(i);
    let mut row = Vec::new();
    for (j, q) in grid.points().iter().enumerate() {
        let c = dot(p, q);
        if c < dot_lo || c > dot_hi {
            continue;
        }
        let w = kernel.weight(central_angle(p, q), theta);
        if w > 0.0 {
            row.push((j as u32, w));
        }
    }
    row
}

/// Builds the band index of `grid` at jumping angle `theta`.
///
/// Rows of upper points come from a full scan over the grid; rows of lower
/// points are their antipodal images, which is exact because lower points are
/// exact negations of upper points.
pub fn build_index(grid: &SphereGrid, theta: f64) -> Result<KernelIndex> {
    check_theta(theta)?;
    let h = grid.resolution().radians();
    let kernel = Kernel::new(h);
    let upper_rows: Vec<Vec<(u32, f64)>> = grid
        .upper()
        .par_iter()
        .map(|&u| scan_row(grid, kernel, theta, u as usize))
        .collect();

    let n = grid.n_points();
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (p, row) in upper_rows.into_iter().enumerate() {
        let mut mirrored: Vec<(u32, f64)> = row
            .iter()
            .map(|&(j, w)| (grid.antipode()[j as usize], w))
            .collect();
        mirrored.sort_unstable_by_key(|&(j, _)| j);
        rows[grid.lower()[p] as usize] = mirrored;
        rows[grid.upper()[p] as usize] = row;
    }

    let total: usize = rows.iter().map(Vec::len).sum();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut neighbors = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut denominators = Vec::with_capacity(n);
    offsets.push(0);
    for (i, row) in rows.into_iter().enumerate() {
        let mut d = 0.0;
        for (j, w) in row {
            neighbors.push(j);
            weights.push(w);
            d += w;
        }
        if d.is_nan() || d <= 0.0 {
            return Err(Error::Precondition(format!(
                "point {i} has an empty correlation band at theta {theta}"
            )));
        }
        denominators.push(d);
        offsets.push(neighbors.len());
    }

    Ok(KernelIndex {
        theta,
        h,
        depth: grid.depth(),
        offsets,
        neighbors,
        weights,
        denominators,
    })
}

impl KernelIndex {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Kernel width `h` of the grid the index was built on.
    pub fn resolution(&self) -> f64 {
        self.h
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn n_points(&self) -> usize {
        self.denominators.len()
    }

    /// Number of stored `(i, j)` entries.
    pub fn n_entries(&self) -> usize {
        self.neighbors.len()
    }

    /// Neighbour indices and weights of point `i`, sorted by index.
    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.neighbors[a..b], &self.weights[a..b])
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (idx, w) = self.row(i);
        idx.iter().zip(w).map(|(&j, &w)| (j as usize, w))
    }

    /// `w_ij`, zero when `j` is outside the band of `i`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let (idx, w) = self.row(i);
        match idx.binary_search(&(j as u32)) {
            Ok(k) => w[k],
            Err(_) => 0.0,
        }
    }

    #[inline]
    pub fn denominator(&self, i: usize) -> f64 {
        self.denominators[i]
    }

    pub fn denominators(&self) -> &[f64] {
        &self.denominators
    }

    /// Errors unless the index was built for this grid.
    pub fn check_grid(&self, grid: &SphereGrid) -> Result<()> {
        if self.n_points() != grid.n_points() {
            return Err(Error::Shape {
                what: "kernel index points",
                expected: grid.n_points(),
                found: self.n_points(),
            });
        }
        if self.depth != grid.depth() {
            return Err(Error::Shape {
                what: "kernel index depth",
                expected: grid.depth() as usize,
                found: self.depth as usize,
            });
        }
        Ok(())
    }
}

// Binary cache. Layout, all little endian: magic, depth u32, theta f64 bits,
// h f64 bits, point count u64, entry count u64, offsets, neighbours, weights,
// denominators.

const CACHE_MAGIC: &[u8; 8] = b"GHKIDX01";

fn cache_path(dir: &Path, depth: u32, theta: f64) -> PathBuf {
    dir.join(format!("index-d{depth}-t{:016x}.bin", theta.to_bits()))
}

impl KernelIndex {
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(CACHE_MAGIC)?;
        out.write_all(&self.depth.to_le_bytes())?;
        out.write_all(&self.theta.to_bits().to_le_bytes())?;
        out.write_all(&self.h.to_bits().to_le_bytes())?;
        out.write_all(&(self.n_points() as u64).to_le_bytes())?;
        out.write_all(&(self.n_entries() as u64).to_le_bytes())?;
        for &o in &self.offsets {
            out.write_all(&(o as u64).to_le_bytes())?;
        }
        for &j in &self.neighbors {
            out.write_all(&j.to_le_bytes())?;
        }
        for &w in self.weights.iter().chain(&self.denominators) {
            out.write_all(&w.to_bits().to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::parse(0, "not a kernel index cache file"));
        }
        let depth = read_u32(&mut input)?;
        let theta = f64::from_bits(read_u64(&mut input)?);
        let h = f64::from_bits(read_u64(&mut input)?);
        let n = read_u64(&mut input)? as usize;
        let entries = read_u64(&mut input)? as usize;
        let offsets = (0..=n)
            .map(|_| read_u64(&mut input).map(|o| o as usize))
            .collect::<Result<Vec<_>>>()?;
        let neighbors = (0..entries)
            .map(|_| read_u32(&mut input))
            .collect::<Result<Vec<_>>>()?;
        let weights = (0..entries)
            .map(|_| read_u64(&mut input).map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        let denominators = (0..n)
            .map(|_| read_u64(&mut input).map(f64::from_bits))
            .collect::<Result<Vec<_>>>()?;
        if offsets.last() != Some(&entries) || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::parse(0, "inconsistent row offsets in index cache"));
        }
        Ok(KernelIndex {
            theta,
            h,
            depth,
            offsets,
            neighbors,
            weights,
            denominators,
        })
    }

    /// Loads the index for `(grid.depth(), theta)` from `cache_dir`, building
    /// and storing it on a miss. Unreadable or mismatched cache entries are
    /// rebuilt.
    pub fn load_or_build(grid: &SphereGrid, theta: f64, cache_dir: Option<&Path>) -> Result<Self> {
        let Some(dir) = cache_dir else {
            return build_index(grid, theta);
        };
        check_theta(theta)?;
        let path = cache_path(dir, grid.depth(), theta);
        if path.exists() {
            match Self::read_cache(&path) {
                Ok(index)
                    if index.check_grid(grid).is_ok()
                        && index.theta.to_bits() == theta.to_bits()
                        && index.h.to_bits() == grid.resolution().radians().to_bits() =>
                {
                    return Ok(index)
                }
                Ok(_) => log::warn!("stale index cache {}, rebuilding", path.display()),
                Err(e) => log::warn!("unreadable index cache {}: {e}", path.display()),
            }
        }
        let index = build_index(grid, theta)?;
        fs::create_dir_all(dir)?;
        let tmp = path.with_extension("tmp");
        index.write_cache(&tmp)?;
        fs::rename(&tmp, &path)?;
        Ok(index)
    }
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}
