//! Solver for `(L1nu + L2) V + k rho^2 (P1 + P2nu) V = F` on the strip
//! `(0, T) x (0, omega)`, truncated with `V = 0` at `t = T`.
//!
//! The principal part `(d/dt - nu)^2 - A` does not depend on `rho` or `k`,
//! so it is factored once and the perturbation is handled by fixed-point
//! iteration. A direct solve of the full operator serves as a cross-check.

mod assembly;
mod config;
mod rho0;

use std::fmt::Write as _;

pub use assembly::{
    apply_P1, apply_P2nu, assemble_full, assemble_principal, compatibility_residual, mixed_norm,
    nearest_pencil_root, strip_to_unknowns, unknowns_to_strip, PrincipalSystem,
};
pub use config::{Fault, SolverConfig, MIN_NT, MIN_T};
pub use rho0::{estimate_rho0, Rho0Estimate, PROBE_ITERATIONS, RHO0_THRESHOLD};

use assembly::apply_perturbation;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::transforms::{rhs_transform, strip_to_polar, PolarField, StripField};

/// Unknown count above which the oracle switches from dense to banded LU.
pub const DENSE_ORACLE_CAP: usize = 3000;
/// Largest `nt * n` accepted by the oracle.
pub const ORACLE_SIZE_CAP: usize = 20_000;
/// Consecutive non-contracting iterations tolerated before giving up.
pub const DIVERGENCE_STREAK: usize = 3;
/// Relative update below which growth is not counted towards divergence.
pub const ROUNDOFF_UPDATE: f64 = 1e-8;
/// Ratio above which a roundoff-sized update counts as stagnation.
pub const STALL_RATIO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `|V^{m+1} - V^m| / |V^m - V^{m-1}|` in the mixed norm, from the
    /// second iteration on.
    pub contraction_ratios: Vec<f64>,
    /// `|V^{m+1} - V^m| / |V^{m+1}|` per iteration.
    pub relative_updates: Vec<f64>,
    /// `|L^{-1}(F - A V)| / |V|` in the mixed norm, where `L` is the
    /// principal part and `A` the full operator.
    pub final_residual: f64,
    /// `max |F - A V| / max |F|`.
    pub raw_residual: f64,
    pub compatibility_residual: f64,
    pub admissible: bool,
    pub converged: bool,
    /// Stopped at the roundoff floor above `tol` rather than below it.
    pub stalled: bool,
}

impl SolveReport {
    /// Columns `iteration,ratio,residual`; the ratio of the first iteration
    /// is left empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,ratio,residual\n");
        for (m, upd) in self.relative_updates.iter().enumerate() {
            let ratio = if m == 0 {
                String::new()
            } else {
                format!("{:.16e}", self.contraction_ratios[m - 1])
            };
            let _ = writeln!(s, "{},{},{:.16e}", m + 1, ratio, upd);
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub v: PolarField,
    pub strip: StripField,
    pub report: SolveReport,
}

fn check_polar_grid(g: &PolarField, config: &SolverConfig) -> Result<()> {
    let r = config.r_nodes();
    let th = config.theta_nodes();
    let close = |a: &[f64], b: &[f64]| {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
    };
    if !close(g.r_nodes(), &r) || !close(g.theta_nodes(), &th) {
        return Err(Error::GridMismatch(format!(
            "right-hand side is {} x {}; configuration grid is {} x {}",
            g.shape().0,
            g.shape().1,
            r.len(),
            th.len()
        )));
    }
    Ok(())
}

fn strip_rhs(g: &PolarField, config: &SolverConfig) -> Result<Vec<f64>> {
    check_polar_grid(g, config)?;
    let f = rhs_transform(g, &config.cone(), &config.exponents())?;
    strip_to_unknowns(&f, config)
}

fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn require_admissible(config: &SolverConfig, sys: &PrincipalSystem) -> Result<()> {
    if sys.admissible {
        return Ok(());
    }
    let v = crate::corner_spectra::check_admissible(config.omega(), config.p())?;
    Err(Error::Inadmissible {
        omega: v.omega,
        p: v.p,
        lhs: v.lhs(),
        tau: v.tau,
    })
}

/// Fixed-point solve of the truncated strip problem for the polar data `g`
/// given on the grid `r = rho e^{-t}` of `config`.
pub fn solve_full(g: &PolarField, config: &SolverConfig) -> Result<Solution> {
    let sys = assemble_principal(config)?;
    require_admissible(config, &sys)?;
    let f = strip_rhs(g, config)?;
    let ops = &sys.ops;
    let scale = config.k() * config.rho() * config.rho();
    let mut v = vec![0.0; f.len()];
    let mut ratios = Vec::new();
    let mut updates = Vec::new();
    let mut prev_diff: Option<f64> = None;
    let mut converged = false;
    let mut stalled = false;
    let mut streak = 0;
    for _ in 0..config.max_iter {
        let next = if scale == 0.0 {
            sys.solve(&f)
        } else {
            let p = apply_perturbation(&v, config, ops);
            let rhs: Vec<f64> = f.iter().zip(&p).map(|(a, b)| a - scale * b).collect();
            sys.solve(&rhs)
        };
        let diff: Vec<f64> = next.iter().zip(&v).map(|(a, b)| a - b).collect();
        let d = mixed_norm(&diff, config, ops);
        let nv = mixed_norm(&next, config, ops);
        let rel = if nv == 0.0 { 0.0 } else { d / nv };
        if let Some(dp) = prev_diff {
            let ratio = if dp == 0.0 { 0.0 } else { d / dp };
            ratios.push(ratio);
            // growth among roundoff-sized updates is noise, not divergence
            streak = if ratio >= 1.0 && rel > ROUNDOFF_UPDATE {
                streak + 1
            } else {
                0
            };
            stalled = rel < ROUNDOFF_UPDATE && rel >= config.tol && ratio >= STALL_RATIO;
        }
        updates.push(rel);
        v = next;
        prev_diff = Some(d);
        if scale == 0.0 || rel < config.tol || stalled {
            converged = true;
            break;
        }
        if streak >= DIVERGENCE_STREAK || !rel.is_finite() {
            return Err(Error::Divergence { ratios });
        }
    }
    if !converged {
        return Err(Error::IterationLimit {
            max_iter: config.max_iter,
            ratios,
        });
    }

    let full = assemble_full(config)?;
    let av = full.matvec(&v);
    let res: Vec<f64> = f.iter().zip(&av).map(|(a, b)| a - b).collect();
    let nv = mixed_norm(&v, config, ops);
    let final_residual = if nv == 0.0 {
        mixed_norm(&sys.solve(&res), config, ops)
    } else {
        mixed_norm(&sys.solve(&res), config, ops) / nv
    };
    let fmax = max_abs(&f);
    let raw_residual = if fmax == 0.0 {
        max_abs(&res)
    } else {
        max_abs(&res) / fmax
    };
    let strip = unknowns_to_strip(&v, config);
    let compat = compatibility_residual(&strip, config)?;
    let polar = strip_to_polar(&strip, &config.cone(), &config.exponents())?;
    Ok(Solution {
        v: polar,
        strip,
        report: SolveReport {
            iterations: updates.len(),
            contraction_ratios: ratios,
            relative_updates: updates,
            final_residual,
            raw_residual,
            compatibility_residual: compat,
            admissible: sys.admissible,
            converged,
            stalled,
        },
    })
}

/// Direct solve of the full operator, without iteration.
pub fn oracle_direct_solve(g: &PolarField, config: &SolverConfig) -> Result<PolarField> {
    let size = config.nt() * config.grid().n();
    if size > ORACLE_SIZE_CAP {
        return Err(Error::SizeCap {
            unknowns: size,
            cap: ORACLE_SIZE_CAP,
        });
    }
    let f = strip_rhs(g, config)?;
    let full = assemble_full(config)?;
    let x = if f.len() <= DENSE_ORACLE_CAP {
        let dense = DMatrix::from_fn(f.len(), f.len(), |i, j| full.get(i, j));
        let lu = dense.lu();
        let sol = lu
            .solve(&DVector::from_column_slice(&f))
            .ok_or(Error::Singular { row: 0, pivot: 0.0 })?;
        sol.as_slice().to_vec()
    } else {
        full.lu()?.solve(&f)
    };
    let strip = unknowns_to_strip(&x, config);
    strip_to_polar(&strip, &config.cone(), &config.exponents())
}
