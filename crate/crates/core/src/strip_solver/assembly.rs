//! Discrete strip operators.
//!
//! Unknowns are the values of `(V1, V2)` on interior t nodes `1..nt-1` and
//! interior angular nodes, interleaved so that both components of a node
//! sit next to each other:
//!
//! ```text
//! index(i, j, c) = ((i - 1) * n + j) * 2 + c
//! ```
//!
//! Each row couples to its t neighbours `2n` entries away and to angular
//! neighbours at most five entries away, giving bandwidths `kl = ku = 2n + 1`.

use num_complex::Complex64;

use super::config::{Fault, SolverConfig};
use crate::banded::{BandLu, BandMatrix};
use crate::corner_spectra::{check_admissible, find_pencil_roots, ComplexRect};
use crate::error::{Error, Result};
use crate::theta_operators::{build_theta_operators, ThetaOperators, ThetaPair};
use crate::transforms::StripField;

#[inline]
pub(crate) fn index(ii: usize, j: usize, c: usize, n: usize) -> usize {
    (ii * n + j) * 2 + c
}

/// Coefficients of `(d/dt - nu)^2` on `V_{i-1}, V_i, V_{i+1}`.
pub(crate) fn shifted_second_difference(h: f64, nu: f64) -> [f64; 3] {
    let ih2 = 1.0 / (h * h);
    [ih2 + nu / h, -2.0 * ih2 + nu * nu, ih2 - nu / h]
}

fn add_t_stencil(
    a: &mut BandMatrix,
    row: usize,
    ii: usize,
    j: usize,
    c: usize,
    n: usize,
    m: usize,
    w: [f64; 3],
) {
    if ii > 0 {
        a.add(row, index(ii - 1, j, c, n), w[0]);
    }
    a.add(row, index(ii, j, c, n), w[1]);
    if ii + 1 < m {
        a.add(row, index(ii + 1, j, c, n), w[2]);
    }
}

/// Factored `(d/dt - nu)^2 - A` with `V = 0` at both ends of the strip.
#[derive(Debug, Clone)]
pub struct PrincipalSystem {
    pub matrix: BandMatrix,
    /// Whether `(omega, p)` passes the admissibility test. Inadmissible
    /// systems are still assembled so that resonance can be observed.
    pub admissible: bool,
    pub warning: Option<String>,
    pub ops: ThetaOperators,
    lu: BandLu,
}

impl PrincipalSystem {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.lu.solve(rhs)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }
}

fn principal_matrix(config: &SolverConfig, ops: &ThetaOperators) -> BandMatrix {
    let n = config.grid().n();
    let m = config.nt() - 2;
    let nu = config.nu();
    let h = config.h_t();
    let nu1 = match config.fault {
        Fault::None => nu,
        Fault::PerturbedStencil => 1.1 * nu,
    };
    let w1 = shifted_second_difference(h, nu1);
    let w2 = shifted_second_difference(h, nu);
    let mut a = BandMatrix::square(2 * n * m, 2 * n + 1, 2 * n + 1);
    for ii in 0..m {
        for j in 0..n {
            let r1 = index(ii, j, 0, n);
            add_t_stencil(&mut a, r1, ii, j, 0, n, m, w1);
            a.add(r1, index(ii, j, 1, n), -1.0);

            let r2 = index(ii, j, 1, n);
            add_t_stencil(&mut a, r2, ii, j, 1, n, m, w2);
            for jj in ops.m4.row_span(j) {
                a.add(r2, index(ii, jj, 0, n), ops.m4.get(j, jj));
            }
            for jj in ops.minus.row_span(j) {
                a.add(r2, index(ii, jj, 1, n), 2.0 * ops.minus.get(j, jj));
            }
        }
    }
    a
}

pub fn assemble_principal(config: &SolverConfig) -> Result<PrincipalSystem> {
    let verdict = check_admissible(config.omega(), config.p())?;
    let warning = (!verdict.admissible).then(|| {
        format!(
            "(omega, p) = ({}, {}) is not admissible (omega*(3 - 2/p) = {:.6} >= tau = {:.6}); the principal system may be nearly singular",
            verdict.omega,
            verdict.p,
            verdict.lhs(),
            verdict.tau
        )
    });
    let ops = build_theta_operators(config.grid())?;
    let matrix = principal_matrix(config, &ops);
    let lu = match matrix.lu() {
        Ok(lu) => lu,
        Err(Error::Singular { row, pivot }) => {
            return Err(Error::Resonance {
                row,
                pivot,
                nearest_root: nearest_pencil_root(config.omega(), config.nu()),
            })
        }
        Err(e) => return Err(e),
    };
    Ok(PrincipalSystem {
        matrix,
        admissible: verdict.admissible,
        warning,
        ops,
        lu,
    })
}

/// Pencil root closest to the critical line `Re lambda = nu`.
pub fn nearest_pencil_root(omega: f64, nu: f64) -> Option<Complex64> {
    let window = ComplexRect::new(0.0517, nu + 3.013, -0.371, 12.137).ok()?;
    let roots = find_pencil_roots(omega, &window).ok()?;
    roots
        .into_iter()
        .map(|r| r.lambda)
        .min_by(|a, b| (a - nu).norm().total_cmp(&(b - nu).norm()))
}

/// `(P1 + P2nu) V` on the unknown vector, without the factor `k rho^2`.
pub(crate) fn apply_perturbation(
    x: &[f64],
    config: &SolverConfig,
    ops: &ThetaOperators,
) -> Vec<f64> {
    let n = config.grid().n();
    let m = config.nt() - 2;
    let nu = config.nu();
    let h = config.h_t();
    let t = config.t_nodes();
    let mut out = vec![0.0; x.len()];
    let mut v1 = vec![0.0; n];
    for ii in 0..m {
        for j in 0..n {
            v1[j] = x[index(ii, j, 0, n)];
        }
        let pv = ops.plus.matvec(&v1);
        let decay = (-2.0 * t[ii + 1]).exp();
        for j in 0..n {
            let prev = if ii > 0 {
                x[index(ii - 1, j, 0, n)]
            } else {
                0.0
            };
            let next = if ii + 1 < m {
                x[index(ii + 1, j, 0, n)]
            } else {
                0.0
            };
            let dt = (next - prev) / (2.0 * h);
            let a0 = pv[j] + x[index(ii, j, 1, n)];
            out[index(ii, j, 1, n)] = decay * (-a0 + 2.0 * (dt - nu * v1[j]));
        }
    }
    out
}

/// Principal part plus `k rho^2 (P1 + P2nu)` with the t-dependent factors
/// written into the matrix.
pub fn assemble_full(config: &SolverConfig) -> Result<BandMatrix> {
    let ops = build_theta_operators(config.grid())?;
    let mut a = principal_matrix(config, &ops);
    let n = config.grid().n();
    let m = config.nt() - 2;
    let nu = config.nu();
    let h = config.h_t();
    let t = config.t_nodes();
    let scale = config.k() * config.rho() * config.rho();
    if scale == 0.0 {
        return Ok(a);
    }
    for ii in 0..m {
        let c = scale * (-2.0 * t[ii + 1]).exp();
        for j in 0..n {
            let row = index(ii, j, 1, n);
            for jj in ops.plus.row_span(j) {
                a.add(row, index(ii, jj, 0, n), -c * ops.plus.get(j, jj));
            }
            a.add(row, index(ii, j, 1, n), -c);
            a.add(row, index(ii, j, 0, n), -2.0 * nu * c);
            if ii > 0 {
                a.add(row, index(ii - 1, j, 0, n), -c / h);
            }
            if ii + 1 < m {
                a.add(row, index(ii + 1, j, 0, n), c / h);
            }
        }
    }
    Ok(a)
}

fn check_strip(v: &StripField, config: &SolverConfig) -> Result<()> {
    let (nt, nth) = v.shape();
    if nt != config.nt() || nth != config.grid().n() + 2 {
        return Err(Error::GridMismatch(format!(
            "strip field is {nt} x {nth}, configuration expects {} x {}",
            config.nt(),
            config.grid().n() + 2
        )));
    }
    let t = config.t_nodes();
    let same = v
        .t_nodes()
        .iter()
        .zip(&t)
        .all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    if !same {
        return Err(Error::GridMismatch(
            "strip t nodes differ from the configuration".into(),
        ));
    }
    Ok(())
}

/// Interior values of a strip field as an unknown vector.
pub fn strip_to_unknowns(v: &StripField, config: &SolverConfig) -> Result<Vec<f64>> {
    check_strip(v, config)?;
    let n = config.grid().n();
    let m = config.nt() - 2;
    let w = n + 2;
    let mut x = vec![0.0; 2 * n * m];
    for ii in 0..m {
        for j in 0..n {
            let k = (ii + 1) * w + j + 1;
            x[index(ii, j, 0, n)] = v.v1()[k];
            x[index(ii, j, 1, n)] = v.v2()[k];
        }
    }
    Ok(x)
}

/// Strip field on the full grid with zero boundary values.
pub fn unknowns_to_strip(x: &[f64], config: &SolverConfig) -> StripField {
    let n = config.grid().n();
    let m = config.nt() - 2;
    let w = n + 2;
    let mut s = StripField::zeros(&config.t_nodes(), &config.theta_nodes())
        .expect("config grids are valid");
    for ii in 0..m {
        for j in 0..n {
            let k = (ii + 1) * w + j + 1;
            s.v1_mut()[k] = x[index(ii, j, 0, n)];
            s.v2_mut()[k] = x[index(ii, j, 1, n)];
        }
    }
    s
}

/// `max_t ||V(t)||_X` over interior t nodes.
pub fn mixed_norm(x: &[f64], config: &SolverConfig, ops: &ThetaOperators) -> f64 {
    let n = config.grid().n();
    let p = config.p();
    x.chunks(2 * n)
        .map(|node| {
            let pair = ThetaPair {
                psi1: node.iter().step_by(2).copied().collect(),
                psi2: node.iter().skip(1).step_by(2).copied().collect(),
            };
            ops.x_norm(&pair, p).expect("pair built on the config grid")
        })
        .fold(0.0, f64::max)
}

/// `-e^{-2t} A0 V` at every t node of `v`.
#[allow(non_snake_case)]
pub fn apply_P1(v: &StripField, config: &SolverConfig) -> Result<StripField> {
    check_strip(v, config)?;
    let ops = build_theta_operators(config.grid())?;
    let n = config.grid().n();
    let w = n + 2;
    let mut out = StripField::zeros(v.t_nodes(), v.theta_nodes())?;
    for (i, &t) in v.t_nodes().iter().enumerate() {
        let row = i * w;
        let pair = ThetaPair {
            psi1: v.v1()[row + 1..row + 1 + n].to_vec(),
            psi2: v.v2()[row + 1..row + 1 + n].to_vec(),
        };
        let a0 = ops.apply_A0(&pair)?;
        let decay = (-2.0 * t).exp();
        for j in 0..n {
            out.v2_mut()[row + 1 + j] = -decay * a0.psi2[j];
        }
    }
    Ok(out)
}

/// Second-order `d/dt` along each angular column; one-sided at both ends.
fn t_derivative(f: &[f64], nt: usize, w: usize, h: f64) -> Vec<f64> {
    let mut d = vec![0.0; f.len()];
    for j in 0..w {
        let at = |i: usize| f[i * w + j];
        d[j] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
        for i in 1..nt - 1 {
            d[i * w + j] = (at(i + 1) - at(i - 1)) / (2.0 * h);
        }
        let e = nt - 1;
        d[e * w + j] = (3.0 * at(e) - 4.0 * at(e - 1) + at(e - 2)) / (2.0 * h);
    }
    d
}

/// `2 e^{-2t} (d/dt - nu) V1` in the second component.
#[allow(non_snake_case)]
pub fn apply_P2nu(v: &StripField, config: &SolverConfig) -> Result<StripField> {
    check_strip(v, config)?;
    let (nt, w) = v.shape();
    let nu = config.nu();
    let dt = t_derivative(v.v1(), nt, w, config.h_t());
    let mut out = StripField::zeros(v.t_nodes(), v.theta_nodes())?;
    for (i, &t) in v.t_nodes().iter().enumerate() {
        let decay = (-2.0 * t).exp();
        for j in 0..w {
            let k = i * w + j;
            out.v2_mut()[k] = 2.0 * decay * (dt[k] - nu * v.v1()[k]);
        }
    }
    Ok(out)
}

/// `||V2 - (d/dt - nu)^2 V1||_p / ||V2||_p` with fourth-order five-point
/// t stencils, over t nodes `2..nt-2` and interior angular nodes.
pub fn compatibility_residual(v: &StripField, config: &SolverConfig) -> Result<f64> {
    check_strip(v, config)?;
    let (nt, w) = v.shape();
    let h = config.h_t();
    let nu = config.nu();
    let p = config.p();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 2..nt - 2 {
        for j in 1..w - 1 {
            let f = |k: usize| v.v1()[k * w + j];
            let d2 = (-f(i - 2) + 16.0 * f(i - 1) - 30.0 * f(i) + 16.0 * f(i + 1) - f(i + 2))
                / (12.0 * h * h);
            let d1 = (f(i - 2) - 8.0 * f(i - 1) + 8.0 * f(i + 1) - f(i + 2)) / (12.0 * h);
            let lhs = d2 - 2.0 * nu * d1 + nu * nu * f(i);
            let v2 = v.v2()[i * w + j];
            num += (v2 - lhs).abs().powf(p);
            den += v2.abs().powf(p);
        }
    }
    Ok(if den == 0.0 {
        0.0
    } else {
        (num / den).powf(1.0 / p)
    })
}
