//! Argument-principle machinery on axis-aligned rectangles.

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Closed rectangle `[re_min, re_max] x [im_min, im_max]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl ComplexRect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max]
            .iter()
            .all(|v| v.is_finite());
        if !ok || re_max <= re_min || im_max <= im_min {
            return Err(invalid(format!(
                "rectangle [{re_min}, {re_max}] x [{im_min}, {im_max}] has no area"
            )));
        }
        Ok(Self {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re > self.re_min && z.re < self.re_max && z.im > self.im_min && z.im < self.im_max
    }

    /// Distance from `z` to the rectangle boundary.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        let dx = if z.re < self.re_min {
            self.re_min - z.re
        } else if z.re > self.re_max {
            z.re - self.re_max
        } else {
            0.0
        };
        let dy = if z.im < self.im_min {
            self.im_min - z.im
        } else if z.im > self.im_max {
            z.im - self.im_max
        } else {
            0.0
        };
        if dx > 0.0 || dy > 0.0 {
            return dx.hypot(dy);
        }
        (z.re - self.re_min)
            .min(self.re_max - z.re)
            .min(z.im - self.im_min)
            .min(self.im_max - z.im)
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * ((self.re_max - self.re_min) + (self.im_max - self.im_min))
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    /// Splits across the longer side at fraction `at` of its length.
    pub fn split(&self, at: f64) -> (ComplexRect, ComplexRect) {
        let w = self.re_max - self.re_min;
        let h = self.im_max - self.im_min;
        if w >= h {
            let m = self.re_min + at * w;
            (
                ComplexRect { re_max: m, ..*self },
                ComplexRect { re_min: m, ..*self },
            )
        } else {
            let m = self.im_min + at * h;
            (
                ComplexRect { im_max: m, ..*self },
                ComplexRect { im_min: m, ..*self },
            )
        }
    }

    /// Boundary nodes, counter-clockwise, with trapezoid weights `dz`.
    /// Each edge receives a share of `points` proportional to its length.
    pub fn boundary_nodes(&self, points: usize) -> Vec<(Complex64, Complex64)> {
        let c = self.corners();
        let per = self.perimeter();
        let mut out = Vec::with_capacity(points + 4);
        for e in 0..4 {
            let a = c[e];
            let b = c[(e + 1) % 4];
            let len = (b - a).norm();
            let m = ((points as f64 * len / per).ceil() as usize).max(8);
            let dz = (b - a) / m as f64;
            for k in 0..=m {
                let w = if k == 0 || k == m { 0.5 } else { 1.0 };
                out.push((a + dz * k as f64, dz * w));
            }
        }
        out
    }
}

/// `(1/2 pi i) * contour integral of z^power f'(z)/f(z) dz` by the composite
/// trapezoid rule over the rectangle boundary. `log_deriv` returns `f'/f`.
pub fn contour_moment<F>(
    rect: &ComplexRect,
    points: usize,
    power: u32,
    mut log_deriv: F,
) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut acc = Complex64::new(0.0, 0.0);
    for (z, dz) in rect.boundary_nodes(points) {
        acc += z.powu(power) * log_deriv(z)? * dz;
    }
    Ok(acc / Complex64::new(0.0, 2.0 * std::f64::consts::PI))
}

/// Winding number of `f` around the rectangle by accumulating the phase
/// increments between consecutive boundary samples. Independent of `f'`.
pub fn phase_winding<F>(rect: &ComplexRect, points: usize, mut f: F) -> Result<i64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let nodes = rect.boundary_nodes(points);
    let mut total = 0.0;
    let mut prev = f(nodes[0].0)?;
    for (z, _) in nodes.iter().skip(1) {
        let cur = f(*z)?;
        total += (cur / prev).arg();
        prev = cur;
    }
    let first = f(nodes[0].0)?;
    total += (first / prev).arg();
    Ok((total / (2.0 * std::f64::consts::PI)).round() as i64)
}
