//! Polar operators and the changes of variables cone -> strip -> weighted strip.
//!
//! With `r = rho e^{-t}` and `w = v / r`, the strip unknowns are
//!
//! ```text
//! V1 = r^{-(nu+1)} v
//! V2 = r^{-(nu+1)} (r^2 v_rr - r v_r + v)
//! ```
//!
//! so that `V2 = (d/dt - nu)^2 V1`. Polar grids never contain the vertex:
//! the innermost node is `rho e^{-T}`.

mod fields;
mod io;

use std::f64::consts::PI;

pub use fields::{PolarField, StripField, DEFAULT_ACCURACY};
pub use io::{read_polar_csv, read_strip_csv, write_polar_csv, write_strip_csv};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeDomain {
    pub omega: f64,
    pub rho: f64,
}

impl ConeDomain {
    pub fn new(omega: f64, rho: f64) -> Result<Self> {
        if !(omega > 0.0 && omega <= 2.0 * PI) {
            return Err(invalid(format!(
                "opening angle {omega} must lie in (0, 2pi]"
            )));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(invalid(format!("cone radius {rho} must be positive")));
        }
        Ok(Self { omega, rho })
    }
}

pub fn nu_of(p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!(
            "integrability exponent {p} must lie in (1, inf)"
        )));
    }
    Ok(3.0 - 2.0 / p)
}

/// Integrability `p`, strip weight `nu = 3 - 2/p` and the regularity weights
/// `[-4 + 1/p, -3 + 1/p, -2 + 1/p, 2 - 1/p, 3 - 1/p]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub p: f64,
    pub nu: f64,
    pub gamma: [f64; 5],
}

impl Exponents {
    pub fn new(p: f64) -> Result<Self> {
        let nu = nu_of(p)?;
        let q = 1.0 / p;
        Ok(Self {
            p,
            nu,
            gamma: [-4.0 + q, -3.0 + q, -2.0 + q, 2.0 - q, 3.0 - q],
        })
    }

    /// Weight of the target space `W^{4,p}_{3-1/p}`.
    pub fn uniform_gamma(&self) -> f64 {
        3.0 - 1.0 / self.p
    }
}

fn require_off_vertex(v: &PolarField) -> Result<()> {
    match v.r_nodes().first() {
        Some(&r) if r > 0.0 => Ok(()),
        Some(_) => Err(Error::VertexOnGrid),
        None => Err(Error::GridMismatch("empty radial grid".into())),
    }
}

/// `v_rr + v_r / r + v_tt / r^2`
pub fn apply_lambda1_with(v: &PolarField, accuracy: usize) -> Result<PolarField> {
    require_off_vertex(v)?;
    let rr = v.derivative(2, 0, accuracy)?;
    let r1 = v.derivative(1, 0, accuracy)?;
    let tt = v.derivative(0, 2, accuracy)?;
    let nt = v.theta_nodes().len();
    let mut out = v.zeros_like();
    let r = v.r_nodes();
    for (k, o) in out.values_mut().iter_mut().enumerate() {
        let x = r[k / nt];
        *o = rr.values()[k] + r1.values()[k] / x + tt.values()[k] / (x * x);
    }
    Ok(out)
}

pub fn apply_lambda1(v: &PolarField) -> Result<PolarField> {
    apply_lambda1_with(v, DEFAULT_ACCURACY)
}

/// Bilaplacian in polar form, term by term:
/// `v_rrrr + 2 v_rrtt / r^2 + v_tttt / r^4 + 2 v_rrr / r - 2 v_rtt / r^3
///  - v_rr / r^2 + 4 v_tt / r^4 + v_r / r^3`.
pub fn apply_lambda2_with(v: &PolarField, accuracy: usize) -> Result<PolarField> {
    require_off_vertex(v)?;
    let d = |i, j| v.derivative(i, j, accuracy);
    let (r4, r2t2, t4, r3, r1t2, r2, t2, r1) = (
        d(4, 0)?,
        d(2, 2)?,
        d(0, 4)?,
        d(3, 0)?,
        d(1, 2)?,
        d(2, 0)?,
        d(0, 2)?,
        d(1, 0)?,
    );
    let nt = v.theta_nodes().len();
    let r = v.r_nodes();
    let mut out = v.zeros_like();
    for (k, o) in out.values_mut().iter_mut().enumerate() {
        let x = r[k / nt];
        let (x2, x3, x4) = (x * x, x * x * x, x * x * x * x);
        *o = r4.values()[k]
            + 2.0 * r2t2.values()[k] / x2
            + t4.values()[k] / x4
            + 2.0 * r3.values()[k] / x
            - 2.0 * r1t2.values()[k] / x3
            - r2.values()[k] / x2
            + 4.0 * t2.values()[k] / x4
            + r1.values()[k] / x3;
    }
    Ok(out)
}

pub fn apply_lambda2(v: &PolarField) -> Result<PolarField> {
    apply_lambda2_with(v, DEFAULT_ACCURACY)
}

fn strip_t_nodes(v: &PolarField, cone: &ConeDomain) -> Result<Vec<f64>> {
    require_off_vertex(v)?;
    let r = v.r_nodes();
    if *r.last().unwrap() > cone.rho * (1.0 + 1e-12) {
        return Err(Error::GridMismatch(format!(
            "radial grid extends to {} beyond rho = {}",
            r.last().unwrap(),
            cone.rho
        )));
    }
    check_theta(v.theta_nodes(), cone)?;
    // ascending t is descending r; t = 0 exactly at r = rho
    Ok(r.iter()
        .rev()
        .map(|&x| {
            let t = (cone.rho / x).ln();
            if t.abs() < 1e-13 {
                0.0
            } else {
                t
            }
        })
        .collect())
}

fn check_theta(theta: &[f64], cone: &ConeDomain) -> Result<()> {
    let ok = theta.first().is_some_and(|&a| a >= -1e-12)
        && theta
            .last()
            .is_some_and(|&b| b <= cone.omega * (1.0 + 1e-12));
    if !ok {
        return Err(Error::GridMismatch(format!(
            "theta grid leaves [0, {}]",
            cone.omega
        )));
    }
    Ok(())
}

/// Radial nodes `rho e^{-t}` in ascending order.
pub fn polar_r_nodes(t_nodes: &[f64], rho: f64) -> Vec<f64> {
    t_nodes.iter().rev().map(|t| rho * (-t).exp()).collect()
}

/// Row of a strip field matching radial row `i` of a polar field on `nr` rows.
fn flip(i: usize, nr: usize) -> usize {
    nr - 1 - i
}

pub fn polar_to_strip_with(
    v: &PolarField,
    cone: &ConeDomain,
    exp: &Exponents,
    accuracy: usize,
) -> Result<StripField> {
    let t = strip_t_nodes(v, cone)?;
    let (nr, nth) = v.shape();
    let r1 = v.derivative(1, 0, accuracy)?;
    let r2 = v.derivative(2, 0, accuracy)?;
    let mut s = StripField::zeros(&t, v.theta_nodes())?;
    for i in 0..nr {
        let x = v.r_nodes()[i];
        let w = x.powf(-(exp.nu + 1.0));
        let row = flip(i, nr);
        for j in 0..nth {
            let k = i * nth + j;
            let val = v.values()[k];
            s.v1_mut()[row * nth + j] = w * val;
            s.v2_mut()[row * nth + j] = w * (x * x * r2.values()[k] - x * r1.values()[k] + val);
        }
    }
    Ok(s)
}

pub fn polar_to_strip(v: &PolarField, cone: &ConeDomain, exp: &Exponents) -> Result<StripField> {
    polar_to_strip_with(v, cone, exp, DEFAULT_ACCURACY)
}

pub fn strip_to_polar(s: &StripField, cone: &ConeDomain, exp: &Exponents) -> Result<PolarField> {
    let t = s.t_nodes();
    if t[0] < 0.0 {
        return Err(Error::GridMismatch("strip grid starts below t = 0".into()));
    }
    check_theta(s.theta_nodes(), cone)?;
    let r = polar_r_nodes(t, cone.rho);
    let (nt, nth) = s.shape();
    let mut values = vec![0.0; nt * nth];
    for (i, &x) in r.iter().enumerate() {
        let w = x.powf(exp.nu + 1.0);
        let row = flip(i, nt);
        for j in 0..nth {
            values[i * nth + j] = w * s.v1()[row * nth + j];
        }
    }
    PolarField::new(r, s.theta_nodes().to_vec(), values)
}

/// Strip right-hand side `(0, r^{3-nu} g)` at `r = rho e^{-t}`.
pub fn rhs_transform(g: &PolarField, cone: &ConeDomain, exp: &Exponents) -> Result<StripField> {
    let t = strip_t_nodes(g, cone)?;
    let norm = crate::weighted_analysis::lp_gamma_norm(g, 1.0 / exp.p, exp.p)?;
    if !norm.is_finite() {
        return Err(Error::NonFiniteRhs { norm });
    }
    let (nr, nth) = g.shape();
    let mut s = StripField::zeros(&t, g.theta_nodes())?;
    for i in 0..nr {
        let x = g.r_nodes()[i];
        let w = x.powf(3.0 - exp.nu);
        let row = flip(i, nr);
        for j in 0..nth {
            s.v2_mut()[row * nth + j] = w * g.values()[i * nth + j];
        }
    }
    Ok(s)
}
