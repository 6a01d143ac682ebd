//! Text formats for grids (`GRIDv1`) and colourings (`COLv1`).
//!
//! ```text
//! GRIDv1 depth=<k> n2=<2N>
//! <x> <y> <z> <antipode index>        (2N lines)
//!
//! COLv1 depth=<k> n=<N> theta=<theta>
//! <N characters in {0,1}>
//! ```
//!
//! Floats are written with 17 significant digits, which round-trips every
//! `f64` exactly.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::colouring::Colouring;
use crate::error::{Error, Result};
use crate::grid::{point_count, SphereGrid};

/// `f64` with 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::parse(line, format!("invalid number `{s}`")))
}

/// Parses `name=value` header fields after the magic word.
fn header_fields<'a>(line: &'a str, magic: &str, names: &[&str]) -> Result<Vec<&'a str>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(magic) {
        return Err(Error::parse(1, format!("expected `{magic}` header")));
    }
    let mut values = Vec::with_capacity(names.len());
    for name in names {
        let field = parts
            .next()
            .ok_or_else(|| Error::parse(1, format!("missing `{name}=` field")))?;
        let value = field
            .strip_prefix(name)
            .and_then(|rest| rest.strip_prefix('='))
            .ok_or_else(|| Error::parse(1, format!("expected `{name}=`, found `{field}`")))?;
        values.push(value);
    }
    if let Some(extra) = parts.next() {
        return Err(Error::parse(1, format!("unexpected header field `{extra}`")));
    }
    Ok(values)
}

fn next_line(lines: &mut impl Iterator<Item = std::io::Result<String>>, line: usize) -> Result<String> {
    lines
        .next()
        .ok_or_else(|| Error::parse(line, "unexpected end of file"))?
        .map_err(Error::from)
}

/// Writes to `path` through a temporary file and a rename.
fn write_atomic(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        write(&mut out)?;
        out.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_grid(out: &mut impl Write, grid: &SphereGrid) -> Result<()> {
    writeln!(out, "GRIDv1 depth={} n2={}", grid.depth(), grid.n_points())?;
    for (p, a) in grid.points().iter().zip(grid.antipode()) {
        writeln!(
            out,
            "{} {} {} {}",
            format_f64(p[0]),
            format_f64(p[1]),
            format_f64(p[2]),
            a
        )?;
    }
    Ok(())
}

pub fn read_grid(input: impl BufRead) -> Result<SphereGrid> {
    let mut lines = input.lines();
    let header = next_line(&mut lines, 1)?;
    let fields = header_fields(&header, "GRIDv1", &["depth", "n2"])?;
    let depth: u32 = fields[0]
        .parse()
        .map_err(|_| Error::parse(1, format!("invalid depth `{}`", fields[0])))?;
    let n2: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(1, format!("invalid point count `{}`", fields[1])))?;
    if depth > crate::grid::MAX_DEPTH || n2 != point_count(depth) {
        return Err(Error::parse(1, format!("point count {n2} does not match depth {depth}")));
    }
    let mut points = Vec::with_capacity(n2);
    let mut antipode = Vec::with_capacity(n2);
    for k in 0..n2 {
        let line_no = k + 2;
        let line = next_line(&mut lines, line_no)?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::parse(line_no, format!("expected 4 columns, found {}", cols.len())));
        }
        points.push([
            parse_f64(cols[0], line_no)?,
            parse_f64(cols[1], line_no)?,
            parse_f64(cols[2], line_no)?,
        ]);
        antipode.push(
            cols[3]
                .parse::<u32>()
                .map_err(|_| Error::parse(line_no, format!("invalid index `{}`", cols[3])))?,
        );
    }
    if let Some(extra) = lines.find(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty())) {
        extra?;
        return Err(Error::parse(n2 + 2, "trailing data after grid points"));
    }
    SphereGrid::from_parts(depth, points, antipode)
}

pub fn save_grid(path: &Path, grid: &SphereGrid) -> Result<()> {
    write_atomic(path, |out| write_grid(out, grid))
}

pub fn load_grid(path: &Path) -> Result<SphereGrid> {
    read_grid(BufReader::new(File::open(path)?))
}

/// A persisted colouring together with the grid depth and jumping angle it
/// was computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct ColouringFile {
    pub depth: u32,
    pub theta: f64,
    pub colouring: Colouring,
}

pub fn write_colouring(out: &mut impl Write, file: &ColouringFile) -> Result<()> {
    writeln!(
        out,
        "COLv1 depth={} n={} theta={}",
        file.depth,
        file.colouring.len(),
        format_f64(file.theta)
    )?;
    writeln!(out, "{}", file.colouring)?;
    Ok(())
}

pub fn read_colouring(input: impl BufRead) -> Result<ColouringFile> {
    let mut lines = input.lines();
    let header = next_line(&mut lines, 1)?;
    let fields = header_fields(&header, "COLv1", &["depth", "n", "theta"])?;
    let depth: u32 = fields[0]
        .parse()
        .map_err(|_| Error::parse(1, format!("invalid depth `{}`", fields[0])))?;
    let n: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(1, format!("invalid pair count `{}`", fields[1])))?;
    let theta = parse_f64(fields[2], 1)?;
    if depth > crate::grid::MAX_DEPTH || 2 * n != point_count(depth) {
        return Err(Error::parse(1, format!("pair count {n} does not match depth {depth}")));
    }
    let body = next_line(&mut lines, 2)?;
    let body = body.trim_end_matches('\r');
    if body.len() != n {
        return Err(Error::parse(2, format!("expected {n} colour characters, found {}", body.len())));
    }
    let bits = body
        .chars()
        .enumerate()
        .map(|(k, ch)| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::parse(2, format!("invalid colour `{other}` at column {}", k + 1))),
        })
        .collect::<Result<Vec<bool>>>()?;
    if let Some(extra) = lines.find(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty())) {
        extra?;
        return Err(Error::parse(3, "trailing data after colouring"));
    }
    Ok(ColouringFile {
        depth,
        theta,
        colouring: Colouring::from_bits(bits),
    })
}

pub fn save_colouring(path: &Path, file: &ColouringFile) -> Result<()> {
    write_atomic(path, |out| write_colouring(out, file))
}

pub fn load_colouring(path: &Path) -> Result<ColouringFile> {
    read_colouring(BufReader::new(File::open(path)?))
}
