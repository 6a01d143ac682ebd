//! Jumping angles given as radians, as a fraction of pi, or as `c` with
//! `theta = 2 pi / c`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThetaSpec {
    Radians(f64),
    FractionOfPi(f64),
    CValue(f64),
}

impl ThetaSpec {
    /// The angle in radians, checked to lie in `[0, pi]`.
    pub fn resolve(self) -> CliResult<f64> {
        let theta = match self {
            ThetaSpec::Radians(t) => t,
            ThetaSpec::FractionOfPi(f) => f * PI,
            ThetaSpec::CValue(c) => {
                if c.is_nan() || c < 2.0 {
                    return Err(CliError::Usage(format!(
                        "c = {c} gives an angle outside [0, pi]; c must be at least 2"
                    )));
                }
                2.0 * PI / c
            }
        };
        if !(0.0..=PI).contains(&theta) {
            return Err(CliError::Usage(format!("{self} resolves outside [0, pi]")));
        }
        Ok(theta)
    }
}

impl fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaSpec::Radians(t) => write!(f, "theta = {t} rad"),
            ThetaSpec::FractionOfPi(x) => write!(f, "theta = {x} pi"),
            ThetaSpec::CValue(c) => write!(f, "theta = 2 pi / {c}"),
        }
    }
}

/// `c = 2 pi / theta`; infinite at `theta = 0`.
pub fn c_value(theta: f64) -> f64 {
    2.0 * PI / theta
}
