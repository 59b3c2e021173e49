use std::f64::consts::PI;
use std::fmt;

use super::fadle::tau;
use crate::error::{invalid, Result};

/// Largest integrability exponent allowed at a given opening angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PMax {
    /// Every `p > 1` is admissible.
    Unbounded,
    /// Admissible iff `p < value`.
    Finite(f64),
    /// No `p > 1` is admissible.
    None,
}

impl PMax {
    pub fn value(self) -> Option<f64> {
        match self {
            PMax::Finite(v) => Some(v),
            _ => Option::None,
        }
    }
}

impl fmt::Display for PMax {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PMax::Unbounded => f.write_str("unbounded"),
            PMax::Finite(v) => write!(f, "{v:.16e}"),
            PMax::None => f.write_str("none"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityVerdict {
    pub omega: f64,
    pub p: f64,
    pub tau: f64,
    pub admissible: bool,
    pub p_max: PMax,
}

impl AdmissibilityVerdict {
    /// `omega * (3 - 2/p)`, the quantity compared against tau.
    pub fn lhs(&self) -> f64 {
        self.omega * (3.0 - 2.0 / self.p)
    }
}

pub fn p_max(omega: f64, tau: f64) -> PMax {
    if omega <= tau / 3.0 {
        PMax::Unbounded
    } else if omega < tau {
        PMax::Finite(2.0 * omega / (3.0 * omega - tau))
    } else {
        PMax::None
    }
}

/// Verdict against an explicit tau; used by scans and tests that inject tau.
pub fn check_admissible_with_tau(omega: f64, p: f64, tau: f64) -> Result<AdmissibilityVerdict> {
    if !(omega > 0.0 && omega <= 2.0 * PI) {
        return Err(invalid(format!(
            "opening angle {omega} must lie in (0, 2pi]"
        )));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!(
            "integrability exponent {p} must lie in (1, inf)"
        )));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(invalid(format!("tau {tau} must be positive")));
    }
    Ok(AdmissibilityVerdict {
        omega,
        p,
        tau,
        admissible: omega * (3.0 - 2.0 / p) < tau,
        p_max: p_max(omega, tau),
    })
}

pub fn check_admissible(omega: f64, p: f64) -> Result<AdmissibilityVerdict> {
    check_admissible_with_tau(omega, p, tau())
}
