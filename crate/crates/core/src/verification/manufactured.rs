use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::strip_solver::SolverConfig;
use crate::transforms::{ConeDomain, PolarField};

pub const MIN_ALPHA: f64 = 4.0;

/// `v = q(r) eta(theta)` with `q = r^alpha (r - rho)^3` and
/// `eta = 1 - cos(2 pi theta / omega)`.
///
/// The cubic factor makes `q`, `q'` and `q''` vanish at `r = rho`, so `v`
/// is zero on the arc together with its second radial derivative, and both
/// strip components vanish at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub alpha: f64,
    pub cone: ConeDomain,
    pub k: f64,
}

/// `q` as `sum c_m r^{e_m}`.
fn monomials(alpha: f64, rho: f64) -> [(f64, f64); 4] {
    [
        (1.0, alpha + 3.0),
        (-3.0 * rho, alpha + 2.0),
        (3.0 * rho * rho, alpha + 1.0),
        (-rho * rho * rho, alpha),
    ]
}

pub fn make_manufactured(alpha: f64, cone: ConeDomain, k: f64) -> Result<ManufacturedCase> {
    if !(alpha >= MIN_ALPHA && alpha.is_finite()) {
        return Err(invalid(format!(
            "radial exponent alpha = {alpha} must be at least {MIN_ALPHA}"
        )));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(invalid(format!("coupling k = {k} must be nonnegative")));
    }
    let cone = ConeDomain::new(cone.omega, cone.rho)?;
    Ok(ManufacturedCase { alpha, cone, k })
}

impl ManufacturedCase {
    /// `d^i q / dr^i`
    pub fn q(&self, r: f64, i: usize) -> f64 {
        monomials(self.alpha, self.cone.rho)
            .iter()
            .map(|&(c, e)| {
                let falling: f64 = (0..i).map(|m| e - m as f64).product();
                c * falling * r.powf(e - i as f64)
            })
            .sum()
    }

    /// `d^j eta / dtheta^j`
    pub fn eta(&self, theta: f64, j: usize) -> f64 {
        let c = 2.0 * PI / self.cone.omega;
        let x = c * theta;
        let cj = c.powi(j as i32);
        match j % 4 {
            0 if j == 0 => 1.0 - x.cos(),
            0 => -cj * x.cos(),
            1 => cj * x.sin(),
            2 => cj * x.cos(),
            _ => -cj * x.sin(),
        }
    }

    /// `d^{i+j} v / dr^i dtheta^j`
    pub fn derivative(&self, r: f64, theta: f64, i: usize, j: usize) -> f64 {
        self.q(r, i) * self.eta(theta, j)
    }

    pub fn v(&self, r: f64, theta: f64) -> f64 {
        self.derivative(r, theta, 0, 0)
    }

    pub fn lambda1(&self, r: f64, theta: f64) -> f64 {
        let d = |i, j| self.derivative(r, theta, i, j);
        d(2, 0) + d(1, 0) / r + d(0, 2) / (r * r)
    }

    pub fn lambda2(&self, r: f64, theta: f64) -> f64 {
        let d = |i, j| self.derivative(r, theta, i, j);
        let (r2, r3, r4) = (r * r, r * r * r, r * r * r * r);
        d(4, 0) + 2.0 * d(2, 2) / r2 + d(0, 4) / r4 + 2.0 * d(3, 0) / r
            - 2.0 * d(1, 2) / r3
            - d(2, 0) / r2
            + 4.0 * d(0, 2) / r4
            + d(1, 0) / r3
    }

    /// `Lambda2 v - k Lambda1 v`
    pub fn g(&self, r: f64, theta: f64) -> f64 {
        self.lambda2(r, theta) - self.k * self.lambda1(r, theta)
    }

    /// Largest violation of the six boundary conditions over `samples`
    /// points per edge.
    pub fn boundary_defect(&self, samples: usize) -> f64 {
        let (om, rho) = (self.cone.omega, self.cone.rho);
        let mut worst = 0.0_f64;
        for s in 0..=samples {
            let x = s as f64 / samples.max(1) as f64;
            let r = rho * x;
            let th = om * x;
            for v in [
                self.derivative(r, 0.0, 0, 0),
                self.derivative(r, om, 0, 0),
                self.derivative(r, 0.0, 0, 1),
                self.derivative(r, om, 0, 1),
                self.derivative(rho, th, 0, 0),
                self.derivative(rho, th, 2, 0),
            ] {
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    fn check_config(&self, config: &SolverConfig) -> Result<()> {
        let same = (config.omega() - self.cone.omega).abs() <= 1e-14 * self.cone.omega
            && (config.rho() - self.cone.rho).abs() <= 1e-14 * self.cone.rho
            && (config.k() - self.k).abs() <= 1e-14 * (1.0 + self.k);
        if !same {
            return Err(invalid(
                "solver configuration does not match the manufactured case (omega, rho, k)",
            ));
        }
        Ok(())
    }

    /// `v` on the polar grid of `config`.
    pub fn sample_v(&self, config: &SolverConfig) -> Result<PolarField> {
        self.check_config(config)?;
        PolarField::from_fn(&config.r_nodes(), &config.theta_nodes(), |r, t| {
            self.v(r, t)
        })
    }

    /// Closed-form data `g` on the polar grid of `config`.
    pub fn sample_g(&self, config: &SolverConfig) -> Result<PolarField> {
        self.check_config(config)?;
        PolarField::from_fn(&config.r_nodes(), &config.theta_nodes(), |r, t| {
            self.g(r, t)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{apply_lambda1, apply_lambda2};
    use crate::weighted_analysis::lp_gamma_norm;

    fn case(alpha: f64, k: f64) -> ManufacturedCase {
        make_manufactured(alpha, ConeDomain::new(PI / 2.0, 1.3).unwrap(), k).unwrap()
    }

    #[test]
    fn small_alpha_rejected() {
        let cone = ConeDomain::new(1.0, 1.0).unwrap();
        assert!(make_manufactured(3.9, cone, 1.0).is_err());
        assert!(make_manufactured(4.0, cone, -1.0).is_err());
    }

    #[test]
    fn boundary_conditions_hold() {
        for alpha in [4.0, 4.5, 6.0] {
            assert!(case(alpha, 1.0).boundary_defect(200) < 1e-12);
        }
        let c = case(4.0, 1.0);
        assert!(c.q(1.3, 1).abs() < 1e-12);
        assert!(c.q(1.3, 3).abs() > 1.0);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = case(4.5, 1.0);
        let (r, t, h) = (0.7, 0.4, 1e-5);
        for i in 0..4 {
            for j in 0..4 - i {
                let dr = (c.derivative(r + h, t, i, j) - c.derivative(r - h, t, i, j)) / (2.0 * h);
                let dt = (c.derivative(r, t + h, i, j) - c.derivative(r, t - h, i, j)) / (2.0 * h);
                let er = c.derivative(r, t, i + 1, j);
                let et = c.derivative(r, t, i, j + 1);
                assert!((dr - er).abs() < 1e-6 * (1.0 + er.abs()), "({i},{j}) r");
                assert!((dt - et).abs() < 1e-6 * (1.0 + et.abs()), "({i},{j}) theta");
            }
        }
    }

    #[test]
    fn closed_form_g_matches_stencils() {
        let c = case(4.0, 2.0);
        let err = |nt: usize, n: usize| {
            let cfg = SolverConfig::new(PI / 2.0, 1.3, 2.0, 2.0, 5.0, nt, n).unwrap();
            let v = c.sample_v(&cfg).unwrap();
            let num = apply_lambda2(&v)
                .unwrap()
                .combine(1.0, &apply_lambda1(&v).unwrap(), -2.0)
                .unwrap();
            let exact = c.sample_g(&cfg).unwrap();
            let d = num.combine(1.0, &exact, -1.0).unwrap();
            lp_gamma_norm(&d, 0.0, 2.0).unwrap() / lp_gamma_norm(&exact, 0.0, 2.0).unwrap()
        };
        // one-sided stencils at the arc are pre-asymptotic on coarser grids
        let (a, b) = (err(161, 67), err(321, 135));
        assert!((a / b).log2() > 1.7, "{a} {b}");
    }

    #[test]
    fn mismatched_config_rejected() {
        let c = case(4.0, 1.0);
        let cfg = SolverConfig::new(PI / 2.0, 1.0, 2.0, 1.0, 5.0, 41, 16).unwrap();
        assert!(c.sample_g(&cfg).is_err());
    }
}
