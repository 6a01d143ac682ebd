//! Results table shared with the plotting tools.
//!
//! One CSV row per solver run, header included, floats at 17 significant
//! digits. The reference columns are pure functions of `(theta, p)`.

use std::collections::HashSet;
use std::fs::{self, File};
use std::path::Path;

use grasshopper::formats::format_f64;
use grasshopper::{bell_correlation, Algorithm};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::CliResult;
use crate::theta::c_value;

fn float17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_f64(*v))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsRow {
    #[serde(serialize_with = "float17")]
    pub theta: f64,
    #[serde(serialize_with = "float17")]
    pub c: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub init: String,
    #[serde(serialize_with = "float17")]
    pub p: f64,
    #[serde(serialize_with = "float17")]
    pub p_hem: f64,
    #[serde(serialize_with = "float17")]
    pub p_minus_hem: f64,
    #[serde(serialize_with = "float17")]
    pub p_over_hem: f64,
    #[serde(serialize_with = "float17")]
    pub bell_c: f64,
    pub steps: u64,
    pub accepted: u64,
    #[serde(serialize_with = "float17")]
    pub wall_time_s: f64,
}

/// Identity of a run for resuming sweeps.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RunKey {
    theta_bits: u64,
    algorithm: Algorithm,
    init: String,
    seed: u64,
}

impl RunKey {
    pub fn new(theta: f64, algorithm: Algorithm, init: &str, seed: u64) -> Self {
        RunKey {
            theta_bits: theta.to_bits(),
            algorithm,
            init: init.to_string(),
            seed,
        }
    }
}

impl ResultsRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        theta: f64,
        algorithm: Algorithm,
        seed: u64,
        init: &str,
        p: f64,
        steps: u64,
        accepted: u64,
        wall_time_s: f64,
    ) -> Self {
        let p_hem = 1.0 - theta / std::f64::consts::PI;
        ResultsRow {
            theta,
            c: c_value(theta),
            algorithm,
            seed,
            init: init.to_string(),
            p,
            p_hem,
            p_minus_hem: p - p_hem,
            p_over_hem: p / p_hem,
            bell_c: bell_correlation(p),
            steps,
            accepted,
            wall_time_s,
        }
    }

    pub fn key(&self) -> RunKey {
        RunKey::new(self.theta, self.algorithm, &self.init, self.seed)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<ResultsRow>,
}

impl ResultsTable {
    /// Reads `path`, or an empty table if it does not exist.
    pub fn load(path: &Path) -> CliResult<Self> {
        if !path.exists() {
            return Ok(Self::default());
        }
        let mut reader = csv::Reader::from_reader(File::open(path)?);
        let rows = reader.deserialize().collect::<Result<Vec<ResultsRow>, _>>()?;
        Ok(ResultsTable { rows })
    }

    /// Writes the whole table through a temporary file and a rename.
    pub fn save(&self, path: &Path) -> CliResult<()> {
        let tmp = path.with_extension("csv.tmp");
        {
            let mut writer = csv::Writer::from_path(&tmp)?;
            if self.rows.is_empty() {
                writer.write_record([
                    "theta", "c", "algorithm", "seed", "init", "p", "p_hem", "p_minus_hem",
                    "p_over_hem", "bell_c", "steps", "accepted", "wall_time_s",
                ])?;
            }
            for row in &self.rows {
                writer.serialize(row)?;
            }
            writer.flush()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn keys(&self) -> HashSet<RunKey> {
        self.rows.iter().map(ResultsRow::key).collect()
    }

    pub fn find(&self, key: &RunKey) -> Option<&ResultsRow> {
        self.rows.iter().find(|r| &r.key() == key)
    }
}
