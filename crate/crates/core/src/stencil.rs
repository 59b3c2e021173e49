//! Finite-difference weights on arbitrary node sets (Fornberg's recursion)
//! and whole-array differentiation with centered interiors and one-sided
//! closures at the ends.

use crate::error::{invalid, Error, Result};

/// Highest derivative order any field query may request.
pub const MAX_DERIVATIVE_ORDER: usize = 4;

/// Weights `w` such that `f^(m)(z) ~ sum_k w[k] f(x[k])`.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    // c[j][k]: weight of node j for derivative k
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Window `[start, start + width)` used at node `i` for an `order`-th
/// derivative with formal accuracy `accuracy`.
fn window(i: usize, len: usize, order: usize, accuracy: usize) -> (usize, usize) {
    // centered symmetric stencils need an odd width
    let centered = if order % 2 == 0 {
        order + accuracy - 1
    } else {
        order + accuracy
    };
    let half = centered / 2;
    if i >= half && i + half < len {
        return (i - half, centered);
    }
    let width = (order + accuracy).min(len);
    let start = if i < half { 0 } else { len - width };
    (start, width)
}

/// Precomputed differentiation rows for one node set.
#[derive(Debug, Clone)]
pub struct DiffOperator {
    rows: Vec<(usize, Vec<f64>)>,
}

impl DiffOperator {
    pub fn new(nodes: &[f64], order: usize, accuracy: usize) -> Result<Self> {
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::DerivativeOrder { order });
        }
        if accuracy < 1 {
            return Err(invalid("stencil accuracy must be at least 1"));
        }
        if order == 0 {
            return Ok(Self {
                rows: (0..nodes.len()).map(|i| (i, vec![1.0])).collect(),
            });
        }
        if nodes.len() < order + accuracy {
            return Err(invalid(format!(
                "{} nodes cannot carry an order-{order} derivative at accuracy {accuracy}",
                nodes.len()
            )));
        }
        let rows = (0..nodes.len())
            .map(|i| {
                let (start, width) = window(i, nodes.len(), order, accuracy);
                let w = fornberg_weights(nodes[i], &nodes[start..start + width], order);
                (start, w)
            })
            .collect();
        Ok(Self { rows })
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(start, w)| w.iter().zip(&f[*start..]).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Applies along a strided line inside a larger buffer.
    pub fn apply_strided(&self, f: &[f64], offset: usize, stride: usize, out: &mut [f64]) {
        for (k, (start, w)) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for (m, wm) in w.iter().enumerate() {
                acc += wm * f[offset + (start + m) * stride];
            }
            out[offset + k * stride] = acc;
        }
    }
}
