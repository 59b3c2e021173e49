use crate::error::{Error, Result};
use crate::stencil::{DiffOperator, MAX_DERIVATIVE_ORDER};

/// Default formal accuracy of derivative stencils.
pub const DEFAULT_ACCURACY: usize = 2;

// signed Stirling numbers of the first kind: r^i d^i/dr^i = sum_k S[i][k] (r d/dr)^k
const STIRLING: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 1.0, 0.0, 0.0],
    [0.0, 2.0, -3.0, 1.0, 0.0],
    [0.0, -6.0, 11.0, -6.0, 1.0],
];

fn check_increasing(name: &str, nodes: &[f64]) -> Result<()> {
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(Error::GridMismatch(format!("{name} nodes must be finite")));
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridMismatch(format!(
            "{name} nodes must be strictly increasing"
        )));
    }
    Ok(())
}

/// Scalar field on an `(r, theta)` tensor grid, stored r-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    r_nodes: Vec<f64>,
    theta_nodes: Vec<f64>,
    values: Vec<f64>,
}

impl PolarField {
    pub fn new(r_nodes: Vec<f64>, theta_nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_increasing("r", &r_nodes)?;
        check_increasing("theta", &theta_nodes)?;
        if r_nodes.first().is_some_and(|&r| r < 0.0) {
            return Err(Error::GridMismatch("r nodes must be nonnegative".into()));
        }
        if values.len() != r_nodes.len() * theta_nodes.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                r_nodes.len(),
                theta_nodes.len()
            )));
        }
        Ok(Self {
            r_nodes,
            theta_nodes,
            values,
        })
    }

    pub fn from_fn(
        r_nodes: &[f64],
        theta_nodes: &[f64],
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let values = r_nodes
            .iter()
            .flat_map(|&r| theta_nodes.iter().map(move |&t| (r, t)))
            .map(|(r, t)| f(r, t))
            .collect();
        Self::new(r_nodes.to_vec(), theta_nodes.to_vec(), values)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn r_nodes(&self) -> &[f64] {
        &self.r_nodes
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.r_nodes.len(), self.theta_nodes.len())
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.theta_nodes.len() + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &PolarField) -> bool {
        self.r_nodes == other.r_nodes && self.theta_nodes == other.theta_nodes
    }

    pub fn map(&self, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let nt = self.theta_nodes.len();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.r_nodes[k / nt], self.theta_nodes[k % nt], v))
            .collect();
        Self {
            values,
            ..self.clone()
        }
    }

    /// `a * self + b * other` on a shared grid.
    pub fn combine(&self, a: f64, other: &PolarField, b: f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    /// Keeps the r rows with indices in `rows` (ascending).
    pub fn select_rows(&self, rows: std::ops::Range<usize>) -> Self {
        let nt = self.theta_nodes.len();
        Self {
            r_nodes: self.r_nodes[rows.clone()].to_vec(),
            theta_nodes: self.theta_nodes.clone(),
            values: self.values[rows.start * nt..rows.end * nt].to_vec(),
        }
    }

    /// `d^(i+j) v / dr^i dtheta^j` with stencils of formal order `accuracy`.
    /// Radial derivatives are taken in `s = ln r`, where a geometric grid
    /// is uniform, and converted back with Stirling numbers.
    pub fn derivative(&self, i: usize, j: usize, accuracy: usize) -> Result<PolarField> {
        if i + j > MAX_DERIVATIVE_ORDER {
            return Err(Error::DerivativeOrder { order: i + j });
        }
        let (nr, nt) = self.shape();
        let mut f = self.values.clone();
        if j > 0 {
            let d = DiffOperator::new(&self.theta_nodes, j, accuracy)?;
            let mut out = vec![0.0; f.len()];
            for row in 0..nr {
                d.apply_strided(&f, row * nt, 1, &mut out);
            }
            f = out;
        }
        if i > 0 {
            if self.r_nodes[0] <= 0.0 {
                return Err(Error::VertexOnGrid);
            }
            let s: Vec<f64> = self.r_nodes.iter().map(|r| r.ln()).collect();
            let mut acc = vec![0.0; f.len()];
            let mut buf = vec![0.0; f.len()];
            for k in 1..=i {
                let c = STIRLING[i][k];
                if c == 0.0 {
                    continue;
                }
                let d = DiffOperator::new(&s, k, accuracy)?;
                for col in 0..nt {
                    d.apply_strided(&f, col, nt, &mut buf);
                }
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += c * b;
                }
            }
            for row in 0..nr {
                let ri = self.r_nodes[row].powi(i as i32);
                for v in &mut acc[row * nt..(row + 1) * nt] {
                    *v /= ri;
                }
            }
            f = acc;
        }
        Ok(Self {
            values: f,
            ..self.clone()
        })
    }
}

/// Two-component field on a `(t, theta)` tensor grid, stored t-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StripField {
    t_nodes: Vec<f64>,
    theta_nodes: Vec<f64>,
    v1: Vec<f64>,
    v2: Vec<f64>,
}

impl StripField {
    pub fn new(
        t_nodes: Vec<f64>,
        theta_nodes: Vec<f64>,
        v1: Vec<f64>,
        v2: Vec<f64>,
    ) -> Result<Self> {
        check_increasing("t", &t_nodes)?;
        check_increasing("theta", &theta_nodes)?;
        let n = t_nodes.len() * theta_nodes.len();
        if v1.len() != n || v2.len() != n {
            return Err(Error::GridMismatch(format!(
                "components of length {} and {} for a {}x{} grid",
                v1.len(),
                v2.len(),
                t_nodes.len(),
                theta_nodes.len()
            )));
        }
        Ok(Self {
            t_nodes,
            theta_nodes,
            v1,
            v2,
        })
    }

    pub fn zeros(t_nodes: &[f64], theta_nodes: &[f64]) -> Result<Self> {
        let n = t_nodes.len() * theta_nodes.len();
        Self::new(
            t_nodes.to_vec(),
            theta_nodes.to_vec(),
            vec![0.0; n],
            vec![0.0; n],
        )
    }

    pub fn from_fns(
        t_nodes: &[f64],
        theta_nodes: &[f64],
        f1: impl Fn(f64, f64) -> f64,
        f2: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let pts: Vec<(f64, f64)> = t_nodes
            .iter()
            .flat_map(|&t| theta_nodes.iter().map(move |&th| (t, th)))
            .collect();
        Self::new(
            t_nodes.to_vec(),
            theta_nodes.to_vec(),
            pts.iter().map(|&(t, th)| f1(t, th)).collect(),
            pts.iter().map(|&(t, th)| f2(t, th)).collect(),
        )
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_nodes
    }

    pub fn theta_nodes(&self) -> &[f64] {
        &self.theta_nodes
    }

    pub fn v1(&self) -> &[f64] {
        &self.v1
    }

    pub fn v2(&self) -> &[f64] {
        &self.v2
    }

    pub fn v1_mut(&mut self) -> &mut [f64] {
        &mut self.v1
    }

    pub fn v2_mut(&mut self) -> &mut [f64] {
        &mut self.v2
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.t_nodes.len(), self.theta_nodes.len())
    }

    pub fn same_grid(&self, other: &StripField) -> bool {
        self.t_nodes == other.t_nodes && self.theta_nodes == other.theta_nodes
    }

    pub fn max_abs(&self) -> f64 {
        self.v1
            .iter()
            .chain(&self.v2)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `a * self + b * other` on a shared grid.
    pub fn combine(&self, a: f64, other: &StripField, b: f64) -> Result<Self> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect();
        Ok(Self {
            v1: mix(&self.v1, &other.v1),
            v2: mix(&self.v2, &other.v2),
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> (Vec<f64>, Vec<f64>) {
        let r: Vec<f64> = (0..n)
            .map(|k| (-(k as f64) * 6.0 / (n - 1) as f64).exp())
            .rev()
            .collect();
        let th: Vec<f64> = (0..n).map(|k| k as f64 * 1.5 / (n - 1) as f64).collect();
        (r, th)
    }

    #[test]
    fn radial_derivatives_of_monomials() {
        let (r, th) = grid(200);
        let v = PolarField::from_fn(&r, &th, |r, t| r.powi(3) * t.cos()).unwrap();
        for (i, exact) in [
            (
                1usize,
                Box::new(|r: f64| 3.0 * r * r) as Box<dyn Fn(f64) -> f64>,
            ),
            (2, Box::new(|r: f64| 6.0 * r)),
            (3, Box::new(|_| 6.0)),
            (4, Box::new(|_| 0.0)),
        ] {
            let d = v.derivative(i, 0, 4).unwrap();
            for (a, &rr) in r.iter().enumerate() {
                let e = exact(rr) * th[7].cos();
                // the Stirling combination cancels terms of size r^(3-i)
                let scale = 1.0 + 100.0 * rr.powi(3 - i as i32);
                assert!(
                    (d.at(a, 7) - e).abs() < 1e-3 * scale,
                    "i={i} r={rr} {} vs {e}",
                    d.at(a, 7)
                );
            }
        }
    }

    #[test]
    fn order_five_rejected() {
        let (r, th) = grid(10);
        let v = PolarField::from_fn(&r, &th, |_, _| 1.0).unwrap();
        assert!(matches!(
            v.derivative(3, 2, 2),
            Err(Error::DerivativeOrder { order: 5 })
        ));
    }

    #[test]
    fn grid_validation() {
        assert!(PolarField::new(vec![0.2, 0.1], vec![0.0, 1.0], vec![0.0; 4]).is_err());
        assert!(PolarField::new(vec![0.1, 0.2], vec![0.0, 1.0], vec![0.0; 3]).is_err());
        assert!(
            StripField::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0; 4], vec![0.0; 3]).is_err()
        );
    }
}
