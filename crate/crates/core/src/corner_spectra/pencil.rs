//! Clamped-wedge pencil `phi'''' + 2(l^2+1) phi'' + (l^2-1)^2 phi = 0`,
//! `phi(0) = phi'(0) = phi(w) = phi'(w) = 0`.

use num_complex::Complex64;

use super::contour::{contour_moment, ComplexRect};
use crate::error::{invalid, Error, Result};

/// Relative determinant residual accepted for a refined root.
pub const PENCIL_ROOT_TOLERANCE: f64 = 1e-8;
/// Minimum distance between a located root and the window boundary.
pub const CONTOUR_CLEARANCE: f64 = 1e-6;
/// Relative distance within which a root near the contour is blamed for a
/// quadrature that fails to converge.
const STALL_CLEARANCE: f64 = 1e-3;

const DEGENERATE_RADIUS: f64 = 1e-12;
const MIN_CONTOUR_POINTS: usize = 1024;
const MAX_CONTOUR_POINTS: usize = 1 << 17;
const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PencilRoot {
    pub lambda: Complex64,
    pub omega: f64,
    /// `|D(lambda)|` divided by the product of the column norms of the
    /// boundary matrix.
    pub determinant_residual: f64,
    /// Algebraic multiplicity as a zero of `D`.
    pub multiplicity: usize,
}

type Mat4 = [[Complex64; 4]; 4];

fn det4(mut m: Mat4) -> Complex64 {
    let mut det = Complex64::new(1.0, 0.0);
    for k in 0..4 {
        let p = (k..4)
            .max_by(|&a, &b| m[a][k].norm().total_cmp(&m[b][k].norm()))
            .unwrap();
        if m[p][k].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if p != k {
            m.swap(p, k);
            det = -det;
        }
        let piv = m[k][k];
        det *= piv;
        for i in k + 1..4 {
            let l = m[i][k] / piv;
            for j in k + 1..4 {
                let u = m[k][j];
                m[i][j] -= l * u;
            }
        }
    }
    det
}

/// Boundary matrix: rows `phi(0), phi'(0), phi(w), phi'(w)`, columns
/// `cos(a t), sin(a t), cos(b t), sin(b t)` with `a = l - 1`, `b = l + 1`.
/// The second matrix holds the lambda-derivatives of the columns.
fn boundary_matrix(lambda: Complex64, omega: f64) -> (Mat4, Mat4) {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut m = [[zero; 4]; 4];
    let mut dm = [[zero; 4]; 4];
    for (c, s) in [(0usize, -1.0), (2usize, 1.0)] {
        let a = lambda + s;
        let (sa, ca) = ((a * omega).sin(), (a * omega).cos());
        // cos(a t)
        m[0][c] = one;
        m[1][c] = zero;
        m[2][c] = ca;
        m[3][c] = -a * sa;
        dm[2][c] = -sa * omega;
        dm[3][c] = -sa - a * ca * omega;
        // sin(a t)
        m[0][c + 1] = zero;
        m[1][c + 1] = a;
        m[2][c + 1] = sa;
        m[3][c + 1] = a * ca;
        dm[1][c + 1] = one;
        dm[2][c + 1] = ca * omega;
        dm[3][c + 1] = ca - a * sa * omega;
    }
    (m, dm)
}

struct Eval {
    d: Complex64,
    dd: Complex64,
    scale: f64,
}

fn evaluate(lambda: Complex64, omega: f64) -> Eval {
    let (m, dm) = boundary_matrix(lambda, omega);
    let d = det4(m);
    // Jacobi: dD = sum over columns of det with that column differentiated
    let mut dd = Complex64::new(0.0, 0.0);
    for c in 0..4 {
        let mut mc = m;
        for r in 0..4 {
            mc[r][c] = dm[r][c];
        }
        dd += det4(mc);
    }
    let scale = (0..4)
        .map(|c| (0..4).map(|r| m[r][c].norm_sqr()).sum::<f64>().sqrt())
        .product();
    Eval { d, dd, scale }
}

fn check_omega(omega: f64) -> Result<()> {
    if !(omega > 0.0 && omega <= 2.0 * std::f64::consts::PI) {
        return Err(invalid(format!(
            "opening angle {omega} must lie in (0, 2pi]"
        )));
    }
    Ok(())
}

fn is_degenerate(lambda: Complex64) -> bool {
    [-1.0, 0.0, 1.0]
        .iter()
        .any(|&c| (lambda - c).norm() < DEGENERATE_RADIUS)
}

/// Determinant of the clamped boundary matrix. Zero at the corner exponents.
pub fn wedge_pencil_determinant(lambda: Complex64, omega: f64) -> Result<Complex64> {
    check_omega(omega)?;
    if is_degenerate(lambda) {
        return Err(Error::DegeneratePencil { lambda });
    }
    Ok(evaluate(lambda, omega).d)
}

/// `dD/dlambda`.
pub fn wedge_pencil_derivative(lambda: Complex64, omega: f64) -> Result<Complex64> {
    check_omega(omega)?;
    if is_degenerate(lambda) {
        return Err(Error::DegeneratePencil { lambda });
    }
    Ok(evaluate(lambda, omega).dd)
}

/// `|D|` relative to the Hadamard bound of the boundary matrix.
pub fn relative_residual(lambda: Complex64, omega: f64) -> f64 {
    let e = evaluate(lambda, omega);
    e.d.norm() / e.scale.max(f64::MIN_POSITIVE)
}

fn log_derivative(omega: f64) -> impl Fn(Complex64) -> Result<Complex64> {
    move |z| {
        let e = evaluate(z, omega);
        if e.d.norm() == 0.0 {
            return Err(Error::ContourTooClose {
                near: z,
                distance: 0.0,
            });
        }
        Ok(e.dd / e.d)
    }
}

struct Moments {
    count: usize,
    m1: Complex64,
}

/// Zero count and first moment, doubling the node count until the
/// count integral is stable and close to an integer.
fn moments(rect: &ComplexRect, omega: f64) -> Result<Moments> {
    let ld = log_derivative(omega);
    let mut points = MIN_CONTOUR_POINTS;
    let mut prev = contour_moment(rect, points, 0, &ld)?;
    loop {
        points *= 2;
        let cur = contour_moment(rect, points, 0, &ld)?;
        let near_int = (cur.re - cur.re.round()).abs() < 1e-3 && cur.im.abs() < 1e-3;
        if (cur - prev).norm() < 1e-4 && near_int {
            let m1 = contour_moment(rect, points, 1, &ld)?;
            return Ok(Moments {
                count: cur.re.round().max(0.0) as usize,
                m1,
            });
        }
        if points >= MAX_CONTOUR_POINTS {
            return Err(Error::NonIntegralCount { value: cur.re });
        }
        prev = cur;
    }
}

fn newton(seed: Complex64, omega: f64, multiplicity: usize) -> Option<Complex64> {
    let mut z = seed;
    for _ in 0..80 {
        let e = evaluate(z, omega);
        if e.dd.norm() == 0.0 {
            return None;
        }
        let step = e.d / e.dd * multiplicity as f64;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        if step.norm() < 1e-14 * z.norm().max(1.0) {
            break;
        }
    }
    (relative_residual(z, omega) < PENCIL_ROOT_TOLERANCE).then_some(z)
}

/// Zero count in a small box around `z` inside `rect`.
fn cluster_count(z: Complex64, rect: &ComplexRect, size: f64, omega: f64) -> Option<usize> {
    let d = rect.boundary_distance(z);
    let half = (1e-2 * size).min(0.5 * d);
    if !rect.contains(z) || half <= 0.0 {
        return None;
    }
    let small = ComplexRect::new(z.re - half, z.re + half, z.im - half, z.im + half).ok()?;
    moments(&small, omega).ok().map(|m| m.count)
}

struct Census {
    roots: Vec<PencilRoot>,
    degenerate: usize,
}

fn isolate(
    rect: ComplexRect,
    mom: Moments,
    omega: f64,
    depth: usize,
    out: &mut Census,
) -> Result<()> {
    if mom.count == 0 {
        return Ok(());
    }
    let m = mom.count as f64;
    let mean = mom.m1 / m;
    let size = (rect.re_max - rect.re_min).max(rect.im_max - rect.im_min);
    if (mean - 1.0).norm() < 1e-4 * size.max(1.0)
        && cluster_count(1.0.into(), &rect, size, omega) == Some(mom.count)
    {
        out.degenerate += mom.count;
        return Ok(());
    }
    if let Some(z) = newton(mean, omega, mom.count) {
        let inside =
            (rect.contains(z) || rect.boundary_distance(z) < 1e-9) && (z - 1.0).norm() > 1e-6;
        if inside && (mom.count == 1 || cluster_count(z, &rect, size, omega) == Some(mom.count)) {
            out.roots.push(PencilRoot {
                lambda: z,
                omega,
                determinant_residual: relative_residual(z, omega),
                multiplicity: mom.count,
            });
            return Ok(());
        }
    }
    if depth >= MAX_DEPTH {
        return Err(Error::NewtonNonConvergence {
            seed: mean,
            iterations: depth,
            residual: relative_residual(mean, omega),
        });
    }
    for at in [0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65] {
        let (a, b) = rect.split(at);
        let (ma, mb) = match (moments(&a, omega), moments(&b, omega)) {
            (Ok(ma), Ok(mb)) => (ma, mb),
            _ => continue,
        };
        if ma.count + mb.count != mom.count {
            continue;
        }
        isolate(a, ma, omega, depth + 1, out)?;
        isolate(b, mb, omega, depth + 1, out)?;
        return Ok(());
    }
    Err(Error::NonIntegralCount { value: m })
}

/// All zeros of `D(.; omega)` inside `window`, excluding the degenerate
/// point `lambda = 1`, sorted by real part then imaginary part.
pub fn find_pencil_roots(omega: f64, window: &ComplexRect) -> Result<Vec<PencilRoot>> {
    check_omega(omega)?;
    if window.re_min <= 0.0 {
        return Err(invalid("pencil window must lie in Re lambda > 0"));
    }
    let total = match moments(window, omega) {
        Ok(m) => m,
        Err(Error::NonIntegralCount { value }) => {
            return Err(
                near_boundary_error(window, omega).unwrap_or(Error::NonIntegralCount { value })
            )
        }
        Err(e) => return Err(e),
    };
    let expected = total.count;
    let mut census = Census {
        roots: Vec::new(),
        degenerate: 0,
    };
    isolate(*window, total, omega, 0, &mut census)?;
    for r in &census.roots {
        let d = window.boundary_distance(r.lambda);
        if d < CONTOUR_CLEARANCE {
            return Err(Error::ContourTooClose {
                near: r.lambda,
                distance: d,
            });
        }
    }
    let found: usize =
        census.roots.iter().map(|r| r.multiplicity).sum::<usize>() + census.degenerate;
    if found != expected {
        return Err(Error::CensusMismatch {
            contour: expected as i64,
            found,
        });
    }
    let mut roots = census.roots;
    roots.sort_by(|a, b| {
        a.lambda
            .re
            .total_cmp(&b.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    Ok(roots)
}

/// Newton from the boundary node of smallest relative residual; reports the
/// root if it lands close enough to the contour to stall the quadrature.
fn near_boundary_error(window: &ComplexRect, omega: f64) -> Option<Error> {
    let (z0, _) = window
        .boundary_nodes(4 * MIN_CONTOUR_POINTS)
        .into_iter()
        .map(|(z, _)| (z, relative_residual(z, omega)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let z = newton(z0, omega, 1).or_else(|| newton(z0, omega, 2))?;
    let distance = window.boundary_distance(z);
    let size = (window.re_max - window.re_min).max(window.im_max - window.im_min);
    (distance < STALL_CLEARANCE * size.max(1.0))
        .then_some(Error::ContourTooClose { near: z, distance })
}

/// Zero count of `D` in `window` by the argument principle, including any
/// degenerate zero at `lambda = 1`.
pub fn pencil_zero_count(omega: f64, window: &ComplexRect) -> Result<usize> {
    check_omega(omega)?;
    Ok(moments(window, omega)?.count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn closed_form(l: Complex64, w: f64) -> Complex64 {
        let s = (l * w).sin();
        -4.0 * (s * s - l * l * w.sin().powi(2))
    }

    /// End values `[phi(w), phi'(w)]` of the pencil ODE for initial data
    /// `(phi, phi', phi'', phi''') = (0, 0, 1, 0)` and `(0, 0, 0, 1)`, by RK4.
    fn shooting(l: Complex64, w: f64) -> Complex64 {
        let l2 = l * l;
        let c2 = 2.0 * (l2 + 1.0);
        let c0 = (l2 - 1.0) * (l2 - 1.0);
        let rhs = |y: [Complex64; 4]| [y[1], y[2], y[3], -c2 * y[2] - c0 * y[0]];
        let end = |init: [Complex64; 4]| {
            let steps = 4000;
            let h = w / steps as f64;
            let mut y = init;
            let add = |a: [Complex64; 4], b: [Complex64; 4], s: f64| {
                [
                    a[0] + b[0] * s,
                    a[1] + b[1] * s,
                    a[2] + b[2] * s,
                    a[3] + b[3] * s,
                ]
            };
            for _ in 0..steps {
                let k1 = rhs(y);
                let k2 = rhs(add(y, k1, h / 2.0));
                let k3 = rhs(add(y, k2, h / 2.0));
                let k4 = rhs(add(y, k3, h));
                for i in 0..4 {
                    y[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
                }
            }
            (y[0], y[1])
        };
        let o = Complex64::new(0.0, 0.0);
        let i = Complex64::new(1.0, 0.0);
        let (a0, a1) = end([o, o, i, o]);
        let (b0, b1) = end([o, o, o, i]);
        a0 * b1 - a1 * b0
    }

    #[test]
    fn matches_closed_form() {
        for (re, im, w) in [
            (0.3, 0.2, 1.0),
            (2.7, 1.1, PI / 2.0),
            (4.0, -3.0, 5.5),
            (0.5, 0.0, 2.0 * PI),
        ] {
            let l = Complex64::new(re, im);
            let d = wedge_pencil_determinant(l, w).unwrap();
            let e = closed_form(l, w);
            assert!((d - e).norm() < 1e-10 * e.norm().max(1.0), "{d} vs {e}");
        }
    }

    #[test]
    fn agrees_with_shooting_oracle() {
        let mut k = 0;
        for a in 0..10 {
            for b in 0..5 {
                let l = Complex64::new(0.15 + 0.7 * a as f64, -2.0 + 1.1 * b as f64);
                let w = 0.6 + 0.11 * (a + b) as f64;
                let d = wedge_pencil_determinant(l, w).unwrap();
                let l2 = l * l;
                let s = shooting(l, w) * 16.0 * l2 * (l2 - 1.0);
                assert!(
                    (d - s).norm() < 1e-6 * d.norm(),
                    "lambda {l}, omega {w}: {d} vs {s}"
                );
                k += 1;
            }
        }
        assert_eq!(k, 50);
    }

    #[test]
    fn even_in_lambda() {
        for (re, im) in [(0.4, 0.9), (3.0, -2.0), (1.7, 0.0)] {
            let l = Complex64::new(re, im);
            let a = wedge_pencil_determinant(l, 2.1).unwrap();
            let b = wedge_pencil_determinant(-l, 2.1).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn jacobi_derivative_matches_difference_quotient() {
        let l = Complex64::new(1.3, 0.7);
        let h = 1e-6;
        let fd = (wedge_pencil_determinant(l + h, 1.9).unwrap()
            - wedge_pencil_determinant(l - h, 1.9).unwrap())
            / (2.0 * h);
        let d = wedge_pencil_derivative(l, 1.9).unwrap();
        assert!((fd - d).norm() < 1e-6 * d.norm());
    }

    #[test]
    fn degenerate_points_are_rejected() {
        for l in [0.0, 1.0, -1.0] {
            assert!(matches!(
                wedge_pencil_determinant(Complex64::new(l, 0.0), 1.0),
                Err(Error::DegeneratePencil { .. })
            ));
        }
    }

    #[test]
    fn right_angle_census() {
        let window = ComplexRect::new(0.5, 12.0, -12.0, 12.0).unwrap();
        let roots = find_pencil_roots(PI / 2.0, &window).unwrap();
        assert!(!roots.is_empty());
        let first = roots[0].lambda;
        assert!(
            (first.re - 2.7396).abs() < 1e-3 && (first.im.abs() - 1.1190).abs() < 1e-3,
            "{first}"
        );
        for r in &roots {
            assert!(r.determinant_residual < PENCIL_ROOT_TOLERANCE);
            assert!((r.lambda - 1.0).norm() > 1e-3);
        }
        let total: usize = roots.iter().map(|r| r.multiplicity).sum();
        // lambda = 1 accounts for the extra zero of the determinant
        assert_eq!(pencil_zero_count(PI / 2.0, &window).unwrap(), total + 1);
        // conjugate pairs
        for r in &roots {
            assert!(roots
                .iter()
                .any(|s| (s.lambda - r.lambda.conj()).norm() < 1e-6));
        }
    }

    #[test]
    fn root_free_window_is_empty() {
        let window = ComplexRect::new(5.0, 5.01, 5.0, 5.01).unwrap();
        assert!(find_pencil_roots(PI / 2.0, &window).unwrap().is_empty());
    }

    #[test]
    fn flat_plate_has_double_integer_roots() {
        // omega = pi: D = -4 sin^2(pi lambda)
        let window = ComplexRect::new(1.5, 3.5, -0.5, 0.5).unwrap();
        let roots = find_pencil_roots(PI, &window).unwrap();
        assert_eq!(roots.len(), 2);
        for (r, k) in roots.iter().zip([2.0, 3.0]) {
            assert_eq!(r.multiplicity, 2);
            assert!((r.lambda - k).norm() < 1e-6);
        }
    }

    #[test]
    fn window_through_root_is_refused() {
        let omega = PI / 2.0;
        let root = find_pencil_roots(omega, &ComplexRect::new(0.5, 12.0, -12.0, 12.0).unwrap())
            .unwrap()[0]
            .lambda;
        let through =
            ComplexRect::new(root.re, root.re + 2.0, root.im - 1.0, root.im + 1.0).unwrap();
        assert!(matches!(
            find_pencil_roots(omega, &through),
            Err(Error::ContourTooClose { .. })
        ));
    }
}
