//! Angular operators on `(0, omega)` with clamped ends.
//!
//! Unknowns live on the `n` interior nodes of a uniform grid. The clamped
//! second difference `D2_ext` maps them onto all `n + 2` nodes with the
//! ghost value `u_{-1} = u_1` (zero slope), so its end rows read `2 u_1 / h^2`.
//! Fourth-order blocks are products of a full-node and an interior
//! operator, which keeps them square and banded:
//!
//! | operator          | shape         | (kl, ku) |
//! |-------------------|---------------|----------|
//! | `d2`              | n x n         | (1, 1)   |
//! | `d2_ext`          | (n+2) x n     | (2, 0)   |
//! | `plus`, `minus`   | n x n         | (1, 1)   |
//! | `m4 = (D2 + 1)^2` | n x n         | (2, 2)   |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::banded::BandMatrix;
use crate::error::{invalid, Error, Result};

/// Seed used for norm-estimation samples unless the caller overrides it.
pub const A0_SAMPLE_SEED: u64 = 0x0A0A_2024;
pub const MIN_THETA_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    omega: f64,
    n: usize,
}

impl ThetaGrid {
    pub fn new(omega: f64, n: usize) -> Result<Self> {
        if !(omega > 0.0 && omega <= 2.0 * std::f64::consts::PI) {
            return Err(invalid(format!(
                "opening angle {omega} must lie in (0, 2pi]"
            )));
        }
        if n < MIN_THETA_NODES {
            return Err(invalid(format!(
                "theta grid needs at least {MIN_THETA_NODES} interior nodes, got {n}"
            )));
        }
        Ok(Self { omega, n })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.omega / (self.n + 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|k| k as f64 * self.h()).collect()
    }

    /// Interior nodes plus both ends.
    pub fn full_nodes(&self) -> Vec<f64> {
        (0..self.n + 2).map(|k| k as f64 * self.h()).collect()
    }

    /// Trapezoid weights on the full node set.
    pub fn full_weights(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n + 2)
            .map(|k| {
                if k == 0 || k == self.n + 1 {
                    0.5 * h
                } else {
                    h
                }
            })
            .collect()
    }

    /// Discrete `L^p` norm of interior values, with zero end values.
    pub fn lp_interior(&self, f: &[f64], p: f64) -> f64 {
        let h = self.h();
        (f.iter().map(|v| v.abs().powf(p)).sum::<f64>() * h).powf(1.0 / p)
    }

    /// Discrete `L^p` norm of values on all `n + 2` nodes.
    pub fn lp_full(&self, f: &[f64], p: f64) -> f64 {
        self.full_weights()
            .iter()
            .zip(f)
            .map(|(w, v)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// `(psi1, psi2)` on the interior nodes: `psi1` stands for the clamped
/// `W^{2,p}` component, `psi2` for the `L^p` component.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPair {
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
}

impl ThetaPair {
    pub fn zeros(n: usize) -> Self {
        Self {
            psi1: vec![0.0; n],
            psi2: vec![0.0; n],
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            psi1: self.psi1.iter().map(|x| c * x).collect(),
            psi2: self.psi2.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &ThetaPair) -> Self {
        Self {
            psi1: self
                .psi1
                .iter()
                .zip(&other.psi1)
                .map(|(a, b)| a + b)
                .collect(),
            psi2: self
                .psi2
                .iter()
                .zip(&other.psi2)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ThetaOperators {
    pub grid: ThetaGrid,
    /// Dirichlet second difference on interior nodes.
    pub d2: BandMatrix,
    /// Clamped second difference onto all nodes.
    pub d2_ext: BandMatrix,
    /// `d2 + I`
    pub plus: BandMatrix,
    /// `d2 - I`
    pub minus: BandMatrix,
    /// Clamped `(D2 + 1)^2`.
    pub m4: BandMatrix,
}

pub fn build_theta_operators(grid: &ThetaGrid) -> Result<ThetaOperators> {
    let n = grid.n();
    if n < MIN_THETA_NODES {
        return Err(invalid("theta grid too small for the clamped stencil"));
    }
    let ih2 = 1.0 / (grid.h() * grid.h());

    let mut d2 = BandMatrix::square(n, 1, 1);
    for i in 0..n {
        d2.set(i, i, -2.0 * ih2);
        if i > 0 {
            d2.set(i, i - 1, ih2);
        }
        if i + 1 < n {
            d2.set(i, i + 1, ih2);
        }
    }

    // row k of d2_ext is full node k; column m is interior node m + 1
    let mut d2_ext = BandMatrix::zeros(n + 2, n, 2, 0);
    d2_ext.set(0, 0, 2.0 * ih2);
    d2_ext.set(n + 1, n - 1, 2.0 * ih2);
    for k in 1..=n {
        let m = k - 1;
        d2_ext.set(k, m, -2.0 * ih2);
        if m > 0 {
            d2_ext.set(k, m - 1, ih2);
        }
        if m + 1 < n {
            d2_ext.set(k, m + 1, ih2);
        }
    }

    // interior second difference acting on all n + 2 nodes
    let mut d2_int = BandMatrix::zeros(n, n + 2, 0, 2);
    let mut restrict = BandMatrix::zeros(n, n + 2, 0, 2);
    let mut embed = BandMatrix::zeros(n + 2, n, 2, 0);
    for i in 0..n {
        d2_int.set(i, i, ih2);
        d2_int.set(i, i + 1, -2.0 * ih2);
        d2_int.set(i, i + 2, ih2);
        restrict.set(i, i + 1, 1.0);
        embed.set(i + 1, i, 1.0);
    }
    let m_int = sum(&d2_int, &restrict);
    let m_ext = sum(&d2_ext, &embed);
    let m4 = m_int.compose(&m_ext);

    let mut plus = d2.clone();
    let mut minus = d2.clone();
    for i in 0..n {
        plus.add(i, i, 1.0);
        minus.add(i, i, -1.0);
    }
    Ok(ThetaOperators {
        grid: grid.clone(),
        d2,
        d2_ext,
        plus,
        minus,
        m4,
    })
}

fn sum(a: &BandMatrix, b: &BandMatrix) -> BandMatrix {
    let kl = a.lower_bandwidth().max(b.lower_bandwidth());
    let ku = a.upper_bandwidth().max(b.upper_bandwidth());
    let mut out = BandMatrix::zeros(a.rows(), a.cols(), kl, ku);
    for i in 0..a.rows() {
        for j in a.row_span(i) {
            out.add(i, j, a.get(i, j));
        }
        for j in b.row_span(i) {
            out.add(i, j, b.get(i, j));
        }
    }
    out
}

impl ThetaOperators {
    fn check(&self, pair: &ThetaPair) -> Result<()> {
        let n = self.grid.n();
        if pair.psi1.len() != n || pair.psi2.len() != n {
            return Err(Error::GridMismatch(format!(
                "pair of lengths ({}, {}) on a grid with {n} interior nodes",
                pair.psi1.len(),
                pair.psi2.len()
            )));
        }
        Ok(())
    }

    /// `(psi2, -(D2 + 1)^2 psi1 - 2 (D2 - 1) psi2)`
    #[allow(non_snake_case)]
    pub fn apply_A(&self, pair: &ThetaPair) -> Result<ThetaPair> {
        self.check(pair)?;
        let a = self.m4.matvec(&pair.psi1);
        let b = self.minus.matvec(&pair.psi2);
        Ok(ThetaPair {
            psi1: pair.psi2.clone(),
            psi2: a.iter().zip(&b).map(|(x, y)| -x - 2.0 * y).collect(),
        })
    }

    /// `(0, (D2 + 1) psi1 + psi2)`
    #[allow(non_snake_case)]
    pub fn apply_A0(&self, pair: &ThetaPair) -> Result<ThetaPair> {
        self.check(pair)?;
        let a = self.plus.matvec(&pair.psi1);
        Ok(ThetaPair {
            psi1: vec![0.0; self.grid.n()],
            psi2: a.iter().zip(&pair.psi2).map(|(x, y)| x + y).collect(),
        })
    }

    /// `||psi1||_p + ||D2_ext psi1||_p + ||psi2||_p`.
    pub fn x_norm(&self, pair: &ThetaPair, p: f64) -> Result<f64> {
        self.check(pair)?;
        let g = &self.grid;
        Ok(g.lp_interior(&pair.psi1, p)
            + g.lp_full(&self.d2_ext.matvec(&pair.psi1), p)
            + g.lp_interior(&pair.psi2, p))
    }

    /// `psi` on all `n + 2` nodes with zero ends.
    pub fn extend(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(psi.len() + 2);
        out.push(0.0);
        out.extend_from_slice(psi);
        out.push(0.0);
        out
    }
}

/// Result of [`estimate_A0_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A0NormEstimate {
    /// `max ||A0 x||_X / ||x||_X` over the sample set.
    pub value: f64,
    /// `max(value - 1, 0)`
    pub epsilon: f64,
    pub n: usize,
    pub h: f64,
    pub samples: usize,
}

/// Smooth clamped profile `sum_m c_m (1 - cos(2 pi m theta / omega))`.
fn clamped_profile(nodes: &[f64], omega: f64, coeffs: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .map(|&t| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| {
                    c * (1.0 - (2.0 * std::f64::consts::PI * (m + 1) as f64 * t / omega).cos())
                })
                .sum()
        })
        .collect()
}

fn smooth_profile(nodes: &[f64], omega: f64, coeffs: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .map(|&t| {
            coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| c * (std::f64::consts::PI * (m + 1) as f64 * t / omega).sin())
                .sum()
        })
        .collect()
}

/// Random smooth pairs: a third have `psi1 = 0`, a third `psi2 = 0`.
pub fn random_pairs(grid: &ThetaGrid, count: usize, seed: u64) -> Vec<ThetaPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = grid.nodes();
    let modes = 6.min(grid.n() / 4).max(1);
    (0..count)
        .map(|s| {
            let mut c1: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut c2: Vec<f64> = (0..modes).map(|_| rng.random_range(-1.0..1.0)).collect();
            match s % 3 {
                0 => c1.iter_mut().for_each(|c| *c = 0.0),
                1 => c2.iter_mut().for_each(|c| *c = 0.0),
                _ => {}
            }
            ThetaPair {
                psi1: clamped_profile(&nodes, grid.omega(), &c1),
                psi2: smooth_profile(&nodes, grid.omega(), &c2),
            }
        })
        .collect()
}

#[allow(non_snake_case)]
pub fn estimate_A0_norm(grid: &ThetaGrid, p: f64, samples: usize) -> Result<A0NormEstimate> {
    estimate_A0_norm_seeded(grid, p, samples, A0_SAMPLE_SEED)
}

#[allow(non_snake_case)]
pub fn estimate_A0_norm_seeded(
    grid: &ThetaGrid,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<A0NormEstimate> {
    if samples < 100 {
        return Err(invalid(format!(
            "norm estimate needs at least 100 samples, got {samples}"
        )));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(invalid(format!(
            "integrability exponent {p} must lie in (1, inf)"
        )));
    }
    let ops = build_theta_operators(grid)?;
    let mut best: f64 = 0.0;
    for pair in random_pairs(grid, samples, seed) {
        let nx = ops.x_norm(&pair, p)?;
        if nx == 0.0 {
            continue;
        }
        let unit = pair.scale(1.0 / nx);
        best = best.max(ops.x_norm(&ops.apply_A0(&unit)?, p)?);
    }
    Ok(A0NormEstimate {
        value: best,
        epsilon: (best - 1.0).max(0.0),
        n: grid.n(),
        h: grid.h(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(ThetaGrid::new(1.0, 7).is_err());
        assert!(ThetaGrid::new(0.0, 16).is_err());
        let g = ThetaGrid::new(2.0, 9).unwrap();
        assert!((g.h() - 0.2).abs() < 1e-15);
        assert!(g.nodes().iter().all(|&t| t > 0.0 && t < 2.0));
    }

    #[test]
    fn clamped_fourth_difference_rows() {
        let g = ThetaGrid::new(1.0, 10).unwrap();
        let ops = build_theta_operators(&g).unwrap();
        let h4 = g.h().powi(4);
        let d2 = |i: usize, j: usize| ops.d2.get(i, j);
        // m4 = d4 + 2 d2 + I with clamped first row [7, -4, 1] / h^4
        let d4 = |i, j| ops.m4.get(i, j) - 2.0 * d2(i, j) - if i == j { 1.0 } else { 0.0 };
        assert!((d4(0, 0) * h4 - 7.0).abs() < 1e-9);
        assert!((d4(0, 1) * h4 + 4.0).abs() < 1e-9);
        assert!((d4(0, 2) * h4 - 1.0).abs() < 1e-9);
        assert!((d4(4, 4) * h4 - 6.0).abs() < 1e-9);
        assert!((d4(9, 9) * h4 - 7.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_operators() {
        let g = ThetaGrid::new(1.3, 20).unwrap();
        let ops = build_theta_operators(&g).unwrap();
        for m in [&ops.d2, &ops.m4, &ops.plus, &ops.minus] {
            let scale = m.max_abs();
            for i in 0..20 {
                for j in 0..20 {
                    assert!((m.get(i, j) - m.get(j, i)).abs() < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn sine_is_nearly_annihilated_inside() {
        let g = ThetaGrid::new(PI, 200).unwrap();
        let ops = build_theta_operators(&g).unwrap();
        let s: Vec<f64> = g.nodes().iter().map(|t| t.sin()).collect();
        let r = ops.plus.matvec(&s);
        let interior = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(interior < g.h() * g.h(), "{interior}");
        // the clamped closure sees the slope of sin at the ends
        let ext = ops.d2_ext.matvec(&s);
        assert!(ext[0].abs() > 1.0 / g.h());
        assert_eq!(ops.m4.matvec(&vec![0.0; 200]), vec![0.0; 200]);
    }

    #[test]
    fn a_and_a0_slices() {
        let g = ThetaGrid::new(1.0, 16).unwrap();
        let ops = build_theta_operators(&g).unwrap();
        let pairs = random_pairs(&g, 3, 5);
        let psi2 = pairs[0].psi2.clone();
        let only2 = ThetaPair {
            psi1: vec![0.0; 16],
            psi2: psi2.clone(),
        };
        let a = ops.apply_A(&only2).unwrap();
        assert_eq!(a.psi1, psi2);
        let expect: Vec<f64> = ops
            .d2
            .matvec(&psi2)
            .iter()
            .zip(&psi2)
            .map(|(d, x)| -2.0 * d + 2.0 * x)
            .collect();
        for (x, y) in a.psi2.iter().zip(&expect) {
            assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
        }
        assert_eq!(ops.apply_A0(&only2).unwrap().psi2, psi2);

        let psi1 = pairs[1].psi1.clone();
        let cancel = ThetaPair {
            psi1: psi1.clone(),
            psi2: ops.plus.matvec(&psi1).iter().map(|x| -x).collect(),
        };
        let z = ops.apply_A0(&cancel).unwrap();
        assert!(z.psi2.iter().all(|v| v.abs() < 1e-9));
        assert!(ops.apply_A(&ThetaPair::zeros(15)).is_err());
    }

    #[test]
    fn x_norm_basic() {
        let g = ThetaGrid::new(1.0, 16).unwrap();
        let ops = build_theta_operators(&g).unwrap();
        assert_eq!(ops.x_norm(&ThetaPair::zeros(16), 2.0).unwrap(), 0.0);
        let pairs = random_pairs(&g, 100, 9);
        for w in pairs.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let lhs = ops.x_norm(&a.add(b), 2.5).unwrap();
            let rhs = ops.x_norm(a, 2.5).unwrap() + ops.x_norm(b, 2.5).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }

    #[test]
    fn a0_estimate_is_bounded() {
        for n in [16, 32, 64] {
            let g = ThetaGrid::new(PI / 2.0, n).unwrap();
            let e = estimate_A0_norm(&g, 2.0, 200).unwrap();
            assert!(e.value <= 1.0 + 1e-12, "{e:?}");
            assert!(e.value > 0.999, "the psi1 = 0 slice has ratio one: {e:?}");
        }
        assert!(estimate_A0_norm(&ThetaGrid::new(1.0, 16).unwrap(), 2.0, 99).is_err());
    }

    proptest! {
        #[test]
        fn operators_are_linear(seed in 0u64..1000, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = ThetaGrid::new(1.7, 12).unwrap();
            let ops = build_theta_operators(&g).unwrap();
            let ps = random_pairs(&g, 3, seed);
            let (x, y) = (&ps[1], &ps[2]);
            let mix = x.scale(a).add(&y.scale(b));
            for f in [ThetaOperators::apply_A, ThetaOperators::apply_A0] {
                let lhs = f(&ops, &mix).unwrap();
                let rhs = f(&ops, x).unwrap().scale(a).add(&f(&ops, y).unwrap().scale(b));
                let scale = ops.x_norm(&lhs, 2.0).unwrap().max(1.0);
                let diff = ops.x_norm(&lhs.add(&rhs.scale(-1.0)), 2.0).unwrap();
                prop_assert!(diff < 1e-9 * scale);
            }
            let nx = ops.x_norm(x, 3.0).unwrap();
            prop_assert!((ops.x_norm(&x.scale(a), 3.0).unwrap() - a.abs() * nx).abs() < 1e-12 * nx.max(1.0));
        }
    }
}
