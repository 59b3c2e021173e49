use crate::error::{invalid, Result};
use crate::theta_operators::ThetaGrid;
use crate::transforms::{polar_r_nodes, ConeDomain, Exponents};

pub const MIN_T: f64 = 4.0;
pub const MIN_NT: usize = 32;

/// Deliberate defects used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Scales the weight `nu` in the first strip equation by 1.1.
    PerturbedStencil,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    t_max: f64,
    nt: usize,
    grid: ThetaGrid,
    k: f64,
    rho: f64,
    p: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub fault: Fault,
}

impl SolverConfig {
    /// `nt` counts all t nodes including `t = 0` and `t = T`; `n_theta`
    /// counts interior angular nodes.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega: f64,
        rho: f64,
        p: f64,
        k: f64,
        t_max: f64,
        nt: usize,
        n_theta: usize,
    ) -> Result<Self> {
        let grid = ThetaGrid::new(omega, n_theta)?;
        ConeDomain::new(omega, rho)?;
        Exponents::new(p)?;
        if !(t_max >= MIN_T && t_max.is_finite()) {
            return Err(invalid(format!(
                "truncation length T = {t_max} must be at least {MIN_T}"
            )));
        }
        if nt < MIN_NT {
            return Err(invalid(format!("nt = {nt} must be at least {MIN_NT}")));
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(invalid(format!("coupling k = {k} must be nonnegative")));
        }
        Ok(Self {
            t_max,
            nt,
            grid,
            k,
            rho,
            p,
            tol: 1e-10,
            max_iter: 200,
            fault: Fault::None,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(invalid(format!("tolerance {tol} must be positive")));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Result<Self> {
        if max_iter == 0 {
            return Err(invalid("max_iter must be at least 1"));
        }
        self.max_iter = max_iter;
        Ok(self)
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = fault;
        self
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        let mut c = Self::new(
            self.omega(),
            self.rho,
            self.p,
            k,
            self.t_max,
            self.nt,
            self.grid.n(),
        )?;
        c.tol = self.tol;
        c.max_iter = self.max_iter;
        c.fault = self.fault;
        Ok(c)
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        ConeDomain::new(self.omega(), rho)?;
        Ok(Self {
            rho,
            ..self.clone()
        })
    }

    /// Same step sizes, truncation length scaled by `fraction`.
    pub fn truncated(&self, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid(format!(
                "ladder fraction {fraction} must lie in (0, 1]"
            )));
        }
        let steps = ((self.nt - 1) as f64 * fraction).round() as usize;
        let t_max = steps as f64 * self.h_t();
        let mut c = Self::new(
            self.omega(),
            self.rho,
            self.p,
            self.k,
            t_max,
            steps + 1,
            self.grid.n(),
        )?;
        c.tol = self.tol;
        c.max_iter = self.max_iter;
        c.fault = self.fault;
        Ok(c)
    }

    pub fn omega(&self) -> f64 {
        self.grid.omega()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn h_t(&self) -> f64 {
        self.t_max / (self.nt - 1) as f64
    }

    pub fn cone(&self) -> ConeDomain {
        ConeDomain {
            omega: self.omega(),
            rho: self.rho,
        }
    }

    pub fn exponents(&self) -> Exponents {
        Exponents::new(self.p).expect("validated at construction")
    }

    pub fn nu(&self) -> f64 {
        self.exponents().nu
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        let h = self.h_t();
        (0..self.nt)
            .map(|i| {
                if i + 1 == self.nt {
                    self.t_max
                } else {
                    i as f64 * h
                }
            })
            .collect()
    }

    /// Angular nodes including both edges.
    pub fn theta_nodes(&self) -> Vec<f64> {
        self.grid.full_nodes()
    }

    /// Ascending radial nodes `rho e^{-t}`.
    pub fn r_nodes(&self) -> Vec<f64> {
        polar_r_nodes(&self.t_nodes(), self.rho)
    }

    /// Number of unknowns of the strip system.
    pub fn unknowns(&self) -> usize {
        2 * self.grid.n() * (self.nt - 2)
    }
}
