//! Numerical estimate of the radius below which the fixed-point iteration
//! contracts.
//!
//! The estimate depends on the grid, `T` and the probe data; it is a
//! surrogate for the existence statement, not a bound.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::assembly::{apply_perturbation, assemble_principal, index, mixed_norm, PrincipalSystem};
use super::config::SolverConfig;
use crate::error::{invalid, Error, Result};

pub const RHO0_THRESHOLD: f64 = 0.9;
/// Fixed-point steps per probe solve.
pub const PROBE_ITERATIONS: usize = 12;
const SMALLEST_PROBE: f64 = 1e-3;
const BISECTION_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Rho0Estimate {
    pub rho0: f64,
    /// The ratio stayed below the threshold all the way to `rho_max`.
    pub unsaturated: bool,
    /// `(rho, max contraction ratio)` for every tested radius, by increasing rho.
    pub probes: Vec<(f64, f64)>,
    /// Whether the measured ratios are nondecreasing in rho.
    pub monotone: bool,
}

/// Strip data `(0, F2)` used for every probe; independent of `rho`.
fn probe_data(config: &SolverConfig) -> Vec<Vec<f64>> {
    let n = config.grid().n();
    let om = config.omega();
    let tm = config.t_max();
    let t = config.t_nodes();
    let th = config.grid().nodes();
    let shapes: [&dyn Fn(f64, f64) -> f64; 3] = [
        &|t, s| t * (-t).exp() * (PI * s / om).sin(),
        &|t, s| (-(t - 2.0).powi(2)).exp() * (2.0 * PI * s / om).sin().powi(2),
        &|t, s| (-0.5 * t).exp() * (PI * t / tm).sin() * (3.0 * PI * s / om).sin(),
    ];
    shapes
        .iter()
        .map(|f| {
            let mut x = vec![0.0; config.unknowns()];
            for ii in 0..config.nt() - 2 {
                for (j, &s) in th.iter().enumerate() {
                    x[index(ii, j, 1, n)] = f(t[ii + 1], s);
                }
            }
            x
        })
        .collect()
}

/// Largest update ratio over a fixed number of iterations at coupling
/// `scale`. Successive updates of the iteration satisfy
/// `e_m = -scale L^{-1} P e_{m-1}` with `e_0 = L^{-1} F`, so they are
/// propagated directly and renormalized, which keeps the ratios free of
/// cancellation once the iteration itself would have converged.
fn probe_ratio(sys: &PrincipalSystem, config: &SolverConfig, f: &[f64], scale: f64) -> f64 {
    let ops = &sys.ops;
    let mut e = sys.solve(f);
    let mut norm = mixed_norm(&e, config, ops);
    let mut worst = 0.0_f64;
    for _ in 1..PROBE_ITERATIONS {
        if norm == 0.0 || !norm.is_finite() {
            break;
        }
        e.iter_mut().for_each(|x| *x /= norm);
        let p = apply_perturbation(&e, config, ops);
        let rhs: Vec<f64> = p.iter().map(|b| -scale * b).collect();
        e = sys.solve(&rhs);
        norm = mixed_norm(&e, config, ops);
        worst = worst.max(norm);
    }
    worst
}

/// Bisection for the largest `rho` in `(0, rho_max]` whose contraction
/// ratio, maximized over iterations and probe data, stays below
/// [`RHO0_THRESHOLD`]. The `rho` of `template` is ignored.
pub fn estimate_rho0(template: &SolverConfig, rho_max: f64) -> Result<Rho0Estimate> {
    if !(rho_max > 0.0 && rho_max.is_finite()) {
        return Err(invalid(format!("rho_max = {rho_max} must be positive")));
    }
    let sys = assemble_principal(template)?;
    let data = probe_data(template);
    let k = template.k();
    let ratio = |rho: f64| -> f64 {
        let scale = k * rho * rho;
        data.par_iter()
            .map(|f| probe_ratio(&sys, template, f, scale))
            .reduce(|| 0.0, f64::max)
    };

    let mut probes = Vec::new();
    let top = ratio(rho_max);
    probes.push((rho_max, top));
    if top < RHO0_THRESHOLD {
        return Ok(finish(rho_max, true, probes));
    }
    let mut lo = rho_max * SMALLEST_PROBE;
    let bottom = ratio(lo);
    probes.push((lo, bottom));
    if bottom >= RHO0_THRESHOLD {
        return Err(Error::NumericalRegime {
            rho: lo,
            ratio: bottom,
            threshold: RHO0_THRESHOLD,
        });
    }
    let mut hi = rho_max;
    while hi / lo - 1.0 > BISECTION_RTOL {
        let mid = (lo * hi).sqrt();
        let r = ratio(mid);
        probes.push((mid, r));
        if r < RHO0_THRESHOLD {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(finish(lo, false, probes))
}

fn finish(rho0: f64, unsaturated: bool, mut probes: Vec<(f64, f64)>) -> Rho0Estimate {
    probes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = probes.windows(2).all(|w| w[1].1 >= w[0].1 * (1.0 - 1e-9));
    Rho0Estimate {
        rho0,
        unsaturated,
        probes,
        monotone,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template(k: f64) -> SolverConfig {
        SolverConfig::new(PI / 2.0, 1.0, 2.0, k, 8.0, 41, 12).unwrap()
    }

    #[test]
    fn zero_coupling_is_unsaturated() {
        let e = estimate_rho0(&template(0.0), 50.0).unwrap();
        assert!(e.unsaturated);
        assert_eq!(e.rho0, 50.0);
    }

    #[test]
    fn ratio_scales_with_rho_squared() {
        let c = template(1.0);
        let sys = assemble_principal(&c).unwrap();
        let f = &probe_data(&c)[0];
        let r1 = probe_ratio(&sys, &c, f, 0.04);
        let r2 = probe_ratio(&sys, &c, f, 0.16);
        assert!(((r2 / r1) - 4.0).abs() < 1e-6, "{}", r2 / r1);
    }

    #[test]
    fn halving_coupling_scales_rho0_by_sqrt2() {
        let a = estimate_rho0(&template(1.0), 50.0).unwrap();
        let b = estimate_rho0(&template(0.5), 50.0).unwrap();
        assert!(!a.unsaturated && a.monotone && b.monotone);
        let q = b.rho0 / a.rho0;
        assert!((q - 2f64.sqrt()).abs() < 0.1 * 2f64.sqrt(), "{q}");
    }

    #[test]
    fn tiny_rho_max_is_unsaturated_and_huge_coupling_fails() {
        assert!(estimate_rho0(&template(1.0), 0.5).unwrap().unsaturated);
        assert!(matches!(
            estimate_rho0(&template(1e9), 50.0),
            Err(Error::NumericalRegime { .. })
        ));
        assert!(estimate_rho0(&template(1.0), 0.0).is_err());
    }
}
