//! Manufactured solutions, convergence studies and the consistency suite.

mod manufactured;
mod suite;

pub use manufactured::{make_manufactured, ManufacturedCase, MIN_ALPHA};
pub use suite::{bump, consistency_suite, SuiteCheck, SuiteOptions, SuiteReport, Verdict};

use std::fmt::Write as _;

use crate::error::{invalid, Result};
use crate::strip_solver::{solve_full, SolverConfig};
use crate::weighted_analysis::lp_gamma_norm;

/// Formal order of the finite-difference discretization.
pub const STENCIL_ORDER: f64 = 2.0;
/// Allowed distance between fitted and formal order.
pub const ORDER_TOLERANCE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    pub nt: usize,
    pub n_theta: usize,
    pub h_t: f64,
    pub h_theta: f64,
    pub error: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub levels: Vec<ConvergenceLevel>,
    /// `log2(e_k / e_{k+1}) / log2(h_k / h_{k+1})` for consecutive levels.
    pub orders: Vec<f64>,
    /// Least-squares slope of `log e` against `log h_t`.
    pub fitted_order: f64,
    /// Errors decrease strictly along the ladder. A non-monotone study is
    /// flagged rather than rejected: truncation error can dominate on fine
    /// grids.
    pub monotone: bool,
}

impl ConvergenceStudy {
    pub fn matches_stencil_order(&self) -> bool {
        (self.fitted_order - STENCIL_ORDER).abs() <= ORDER_TOLERANCE
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,nt,n_theta,h_t,h_theta,error,iterations\n");
        for (k, l) in self.levels.iter().enumerate() {
            let _ = writeln!(
                s,
                "{k},{},{},{:.16e},{:.16e},{:.16e},{}",
                l.nt, l.n_theta, l.h_t, l.h_theta, l.error, l.iterations
            );
        }
        s
    }
}

/// Relative `L^p` error of [`solve_full`] against the closed form on each
/// configuration of `ladder` (coarsest first).
pub fn convergence_study(
    case: &ManufacturedCase,
    ladder: &[SolverConfig],
) -> Result<ConvergenceStudy> {
    if ladder.len() < 3 {
        return Err(invalid(format!(
            "convergence study needs at least 3 levels, got {}",
            ladder.len()
        )));
    }
    if ladder.windows(2).any(|w| w[1].h_t() >= w[0].h_t()) {
        return Err(invalid("ladder must refine the t step at every level"));
    }
    let mut levels = Vec::with_capacity(ladder.len());
    for cfg in ladder {
        let g = case.sample_g(cfg)?;
        let exact = case.sample_v(cfg)?;
        let sol = solve_full(&g, cfg)?;
        let p = cfg.p();
        let err = lp_gamma_norm(&sol.v.combine(1.0, &exact, -1.0)?, 0.0, p)?
            / lp_gamma_norm(&exact, 0.0, p)?;
        levels.push(ConvergenceLevel {
            nt: cfg.nt(),
            n_theta: cfg.grid().n(),
            h_t: cfg.h_t(),
            h_theta: cfg.grid().h(),
            error: err,
            iterations: sol.report.iterations,
        });
    }
    let orders = levels
        .windows(2)
        .map(|w| (w[0].error / w[1].error).ln() / (w[0].h_t / w[1].h_t).ln())
        .collect();
    let xs: Vec<f64> = levels.iter().map(|l| l.h_t.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.error.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let monotone = levels.windows(2).all(|w| w[1].error < w[0].error);
    Ok(ConvergenceStudy {
        levels,
        orders,
        fitted_order: sxy / sxx,
        monotone,
    })
}

/// Grids `(nt, n) = (41, 16), (81, 32), (161, 64)` on a strip of length
/// `t_max`, each halving the steps of the previous one.
pub fn standard_ladder(
    case: &ManufacturedCase,
    p: f64,
    t_max: f64,
    tol: f64,
) -> Result<Vec<SolverConfig>> {
    [(41, 16), (81, 32), (161, 64)]
        .iter()
        .map(|&(nt, n)| {
            SolverConfig::new(case.cone.omega, case.cone.rho, p, case.k, t_max, nt, n)?
                .with_tol(tol)
        })
        .collect()
}
