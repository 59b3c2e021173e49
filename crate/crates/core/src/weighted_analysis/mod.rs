//! Weighted Lebesgue norms `L^p_gamma` on the cone and the regularity table.
//!
//! Radial integrals are trapezoid sums in `s = ln r` (uniform in the strip
//! variable), so `dr = r ds` and the weight `r^{p gamma}` stays smooth.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corner_spectra::check_admissible;
use crate::error::{invalid, Error, Result};
use crate::strip_solver::{solve_full, SolverConfig, MIN_NT, MIN_T};
use crate::transforms::{Exponents, PolarField, DEFAULT_ACCURACY};

/// Allowed growth of a norm from one ladder level to the next.
pub const LADDER_GROWTH: f64 = 0.05;

fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[k + 1] - x[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

/// `(int int |f|^p r^{p gamma} dr dtheta)^{1/p}`.
pub fn lp_gamma_norm(field: &PolarField, gamma: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(invalid(format!(
            "norm exponent {p} must be finite and at least 1"
        )));
    }
    let r = field.r_nodes();
    let (nr, nt) = field.shape();
    if nr < 2 || nt < 2 {
        return Ok(0.0);
    }
    let wt = trapezoid_weights(field.theta_nodes());
    // a grid that reaches the vertex is integrated in r itself
    let (wr, jac): (Vec<f64>, Vec<f64>) = if r[0] > 0.0 {
        let s: Vec<f64> = r.iter().map(|x| x.ln()).collect();
        (trapezoid_weights(&s), r.to_vec())
    } else {
        (trapezoid_weights(r), vec![1.0; nr])
    };
    let mut acc = 0.0;
    for i in 0..nr {
        let wi = wr[i] * jac[i] * r[i].powf(p * gamma);
        let row: f64 = (0..nt).map(|j| wt[j] * field.at(i, j).abs().powf(p)).sum();
        if row != 0.0 {
            acc += wi * row;
        }
    }
    Ok(acc.powf(1.0 / p))
}

/// Which statement a table entry witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryKind {
    /// Derivative against its own weight from the `gamma_0..gamma_4` ladder.
    Assigned,
    /// Derivative against the uniform weight `3 - 1/p` of `W^{4,p}_{3-1/p}`.
    Uniform,
    /// The two weighted spaces singled out as not embedded in `L^p`.
    NonEmbedded,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Assigned => "assigned",
            EntryKind::Uniform => "uniform",
            EntryKind::NonEmbedded => "non_embedded",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormEntry {
    pub kind: EntryKind,
    /// Radial derivative order.
    pub i: usize,
    /// Angular derivative order.
    pub j: usize,
    pub gamma: f64,
    pub p: f64,
    /// One value per ladder level.
    pub values: Vec<f64>,
    /// `None` without a ladder.
    pub bounded_under_refinement: Option<bool>,
}

impl NormEntry {
    pub fn finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub entries: Vec<NormEntry>,
    /// Stable uniform-weight entries; `None` without a ladder.
    pub final_membership: Option<bool>,
    pub levels: usize,
}

impl NormReport {
    pub fn all_stable(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.finite() && e.bounded_under_refinement == Some(true))
    }

    /// `i,j,gamma,p,level,value,stable`
    pub fn to_csv(&self) -> String {
        let mut s = String::from("i,j,gamma,p,level,value,stable\n");
        for e in &self.entries {
            let stable = match e.bounded_under_refinement {
                Some(b) => b.to_string(),
                None => "unknown".into(),
            };
            for (level, v) in e.values.iter().enumerate() {
                let _ = writeln!(
                    s,
                    "{},{},{:.16e},{:.16e},{},{:.16e},{}",
                    e.i, e.j, e.gamma, e.p, level, v, stable
                );
            }
        }
        s
    }
}

/// Assigned weight of `d^{i+j} v / dr^i dtheta^j`: it depends on the
/// radial order only.
pub fn assigned_gamma(exp: &Exponents, i: usize) -> f64 {
    exp.gamma[i.min(4)]
}

/// `true` when each value grows by at most `LADDER_GROWTH` over the previous.
pub fn ladder_stable(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
        && values
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + LADDER_GROWTH) + f64::MIN_POSITIVE)
}

fn multi_indices() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for order in 0..=4 {
        for i in (0..=order).rev() {
            out.push((i, order - i));
        }
    }
    out
}

/// Norm table over a ladder of fields (coarsest vertex cutoff first).
/// Each level is differentiated on its own grid.
pub fn regularity_table(levels: &[PolarField], exp: &Exponents) -> Result<NormReport> {
    regularity_table_with(levels, exp, DEFAULT_ACCURACY)
}

pub fn regularity_table_with(
    levels: &[PolarField],
    exp: &Exponents,
    accuracy: usize,
) -> Result<NormReport> {
    if levels.is_empty() {
        return Err(invalid("regularity table needs at least one field"));
    }
    let idx = multi_indices();
    let uniform = exp.uniform_gamma();
    let mut specs: Vec<(EntryKind, usize, usize, f64)> = Vec::new();
    for &(i, j) in &idx {
        specs.push((EntryKind::Assigned, i, j, assigned_gamma(exp, i)));
    }
    for &(i, j) in &idx {
        specs.push((EntryKind::Uniform, i, j, uniform));
    }
    specs.push((EntryKind::NonEmbedded, 3, 0, 2.0 - 1.0 / exp.p));
    specs.push((EntryKind::NonEmbedded, 3, 1, 2.0 - 1.0 / exp.p));
    specs.push((EntryKind::NonEmbedded, 4, 0, 3.0 - 1.0 / exp.p));

    // derivative fields per level, shared across entries
    let derivs: Vec<Vec<PolarField>> = levels
        .par_iter()
        .map(|v| {
            idx.iter()
                .map(|&(i, j)| v.derivative(i, j, accuracy))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let slot = |i: usize, j: usize| idx.iter().position(|&m| m == (i, j)).unwrap();

    let ladder = levels.len() > 1;
    let entries = specs
        .par_iter()
        .map(|&(kind, i, j, gamma)| {
            let values = derivs
                .iter()
                .map(|d| lp_gamma_norm(&d[slot(i, j)], gamma, exp.p))
                .collect::<Result<Vec<_>>>()?;
            let bounded_under_refinement = ladder.then(|| ladder_stable(&values));
            Ok(NormEntry {
                kind,
                i,
                j,
                gamma,
                p: exp.p,
                values,
                bounded_under_refinement,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let final_membership = ladder.then(|| {
        entries
            .iter()
            .filter(|e| e.kind == EntryKind::Uniform)
            .all(|e| e.finite() && e.bounded_under_refinement == Some(true))
    });
    Ok(NormReport {
        entries,
        final_membership,
        levels: levels.len(),
    })
}

/// Fractions of the truncation length used for solution ladders.
pub const SOLUTION_LADDER: [f64; 3] = [0.5, 0.75, 1.0];

/// Solves on three vertex cutoffs `T/2, 3T/4, T` (same step sizes), and
/// tabulates the weighted norms of the computed solutions. `g` lives on the
/// polar grid of `config`; shorter levels use its outer rows.
pub fn solution_regularity_check(g: &PolarField, config: &SolverConfig) -> Result<NormReport> {
    let verdict = check_admissible(config.omega(), config.p())?;
    if !verdict.admissible {
        return Err(Error::Inadmissible {
            omega: verdict.omega,
            p: verdict.p,
            lhs: verdict.lhs(),
            tau: verdict.tau,
        });
    }
    config.truncated(SOLUTION_LADDER[0]).map_err(|e| {
        invalid(format!(
            "the solution ladder starts at T/2 and needs T >= {} and nt >= {} ({e})",
            2.0 * MIN_T,
            2 * MIN_NT - 1
        ))
    })?;
    let nr = g.shape().0;
    let levels = SOLUTION_LADDER
        .par_iter()
        .map(|&f| {
            let cfg = config.truncated(f)?;
            let rows = cfg.nt();
            if rows > nr {
                return Err(Error::GridMismatch(format!(
                    "rhs has {nr} radial rows, ladder needs {rows}"
                )));
            }
            let g_level = g.select_rows(nr - rows..nr);
            Ok(solve_full(&g_level, &cfg)?.v)
        })
        .collect::<Result<Vec<_>>>()?;
    regularity_table(&levels, &config.exponents())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::polar_r_nodes;
    use std::f64::consts::PI;

    fn grid(nt: usize, t_max: f64, nth: usize, omega: f64, rho: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..nt)
            .map(|k| k as f64 * t_max / (nt - 1) as f64)
            .collect();
        let th: Vec<f64> = (0..nth)
            .map(|k| k as f64 * omega / (nth - 1) as f64)
            .collect();
        (polar_r_nodes(&t, rho), th)
    }

    #[test]
    fn closed_form_norms() {
        let (r, th) = grid(2001, 40.0, 5, 1.3, 2.0);
        let one = PolarField::from_fn(&r, &th, |_, _| 1.0).unwrap();
        let n = lp_gamma_norm(&one, 0.0, 2.0).unwrap();
        assert!((n - (2.0f64 * 1.3).sqrt()).abs() < 1e-4, "{n}");

        let (r, th) = grid(2001, 40.0, 3, PI, 1.0);
        let rr = PolarField::from_fn(&r, &th, |r, _| r).unwrap();
        let n = lp_gamma_norm(&rr, 0.5, 2.0).unwrap();
        assert!((n - (PI / 4.0).sqrt()).abs() < 1e-3, "{n}");

        let zero = one.zeros_like();
        assert_eq!(lp_gamma_norm(&zero, -3.5, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        let exact = (1.0f64 / 7.0).sqrt() * (PI / 2.0).sqrt();
        let err = |nt: usize| {
            let (r, th) = grid(nt, 30.0, nt, PI, 1.0);
            let f = PolarField::from_fn(&r, &th, |r, t| r.powi(3) * t.sin()).unwrap();
            (lp_gamma_norm(&f, 0.0, 2.0).unwrap() - exact).abs()
        };
        let order = (err(101) / err(201)).log2();
        assert!((order - 2.0).abs() < 0.3, "{order}");
    }

    /// `int_0^rho r^{p(gamma+s)} dr` is finite iff `p(gamma+s) > -1`; on a
    /// ladder of vertex cutoffs this shows up as stability.
    #[test]
    fn exponent_bookkeeping_matches_closed_form() {
        let omega = 1.0;
        for &p in &[1.5, 2.0, 3.0] {
            let exp = Exponents::new(p).unwrap();
            for s in 0..=5 {
                for &gamma in &exp.gamma {
                    let x = p * (gamma + s as f64);
                    if (x + 1.0).abs() < 0.4 {
                        // borderline powers need cutoffs far beyond desk scale
                        continue;
                    }
                    let values: Vec<f64> = [8.0, 12.0, 16.0]
                        .iter()
                        .map(|&t| {
                            let (r, th) = grid((t * 40.0) as usize + 1, t, 5, omega, 1.0);
                            let v = PolarField::from_fn(&r, &th, |r, _| r.powi(s)).unwrap();
                            lp_gamma_norm(&v, gamma, p).unwrap()
                        })
                        .collect();
                    assert_eq!(
                        ladder_stable(&values),
                        x > -1.0,
                        "p={p} s={s} gamma={gamma}: {values:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn zero_field_table() {
        let exp = Exponents::new(2.0).unwrap();
        let levels: Vec<PolarField> = [8.0, 12.0, 16.0]
            .iter()
            .map(|&t| {
                let (r, th) = grid((t * 10.0) as usize + 1, t, 17, 1.0, 1.0);
                PolarField::from_fn(&r, &th, |_, _| 0.0).unwrap()
            })
            .collect();
        let rep = regularity_table(&levels, &exp).unwrap();
        assert_eq!(rep.entries.len(), 33);
        assert!(rep
            .entries
            .iter()
            .all(|e| e.values.iter().all(|&v| v == 0.0)));
        assert_eq!(rep.final_membership, Some(true));
    }

    #[test]
    fn quadratic_field_fails_membership() {
        let omega = 1.0;
        let exp = Exponents::new(2.0).unwrap();
        let levels: Vec<PolarField> = [8.0, 12.0, 16.0]
            .iter()
            .map(|&t| {
                let (r, th) = grid((t * 20.0) as usize + 1, t, 33, omega, 1.0);
                PolarField::from_fn(&r, &th, |r, t| r * r * (1.0 - (2.0 * PI * t / omega).cos()))
                    .unwrap()
            })
            .collect();
        let rep = regularity_table(&levels, &exp).unwrap();
        let e00 = rep
            .entries
            .iter()
            .find(|e| e.kind == EntryKind::Assigned && e.i == 0 && e.j == 0)
            .unwrap();
        assert_eq!(e00.gamma, -3.5);
        assert_eq!(e00.bounded_under_refinement, Some(false));
    }

    #[test]
    fn single_level_has_no_verdict() {
        let exp = Exponents::new(2.0).unwrap();
        let (r, th) = grid(81, 8.0, 17, 1.0, 1.0);
        let v = PolarField::from_fn(&r, &th, |r, t| r.powi(5) * t.sin()).unwrap();
        let rep = regularity_table(&[v], &exp).unwrap();
        assert_eq!(rep.final_membership, None);
        assert!(rep
            .entries
            .iter()
            .all(|e| e.bounded_under_refinement.is_none()));
        assert!(regularity_table(&[], &exp).is_err());
    }

    #[test]
    fn csv_layout() {
        let exp = Exponents::new(2.0).unwrap();
        let (r, th) = grid(41, 4.0, 9, 1.0, 1.0);
        let v = PolarField::from_fn(&r, &th, |r, _| r.powi(5)).unwrap();
        let csv = regularity_table(&[v.clone(), v], &exp).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("i,j,gamma,p,level,value,stable"));
        assert_eq!(lines.count(), 33 * 2);
    }
}
