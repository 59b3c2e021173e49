//! Complex roots of `sinh z + z = 0` and `sinh z - z = 0` in `Re z > 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::contour::{contour_moment, ComplexRect};
use crate::error::{invalid, Error, Result};

/// Census rectangle used to validate root sets: real part in
/// `[CENSUS_RE_MIN, 10]`, imaginary part in `[CENSUS_IM_MIN, 20]`. The small
/// offsets keep the contour away from the multiple zero at `z = 0`.
pub const CENSUS_RE_MIN: f64 = 0.5;
pub const CENSUS_IM_MIN: f64 = 0.5;
pub const CENSUS_RE_MAX: f64 = 10.0;
pub const CENSUS_IM_MAX: f64 = 20.0;
/// Trapezoid nodes on the census contour.
pub const CENSUS_POINTS: usize = 4096;

const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// `sinh z + z = 0`
    Plus,
    /// `sinh z - z = 0`
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    /// `sinh z +/- z`
    pub fn eval(self, z: Complex64) -> Complex64 {
        z.sinh() + z * self.sign()
    }

    pub fn derivative(self, z: Complex64) -> Complex64 {
        z.cosh() + self.sign()
    }

    /// Asymptotic seed for the `k`-th root (k >= 1). Roots of `sin w = -/+ w`
    /// sit near `(2k -/+ 1/2) pi + i ln((4k -/+ 1) pi)` and map to `z = i conj(w)`.
    pub fn seed(self, k: usize) -> Complex64 {
        let k = k as f64;
        let (re_w, im_w) = match self {
            Branch::Minus => ((2.0 * k + 0.5) * PI, ((4.0 * k + 1.0) * PI).ln()),
            Branch::Plus => ((2.0 * k - 0.5) * PI, ((4.0 * k - 1.0) * PI).ln()),
        };
        Complex64::new(im_w, re_w)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" | "+" => Ok(Branch::Plus),
            "minus" | "-" => Ok(Branch::Minus),
            other => Err(invalid(format!(
                "unknown branch '{other}' (expected plus or minus)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadleRoot {
    pub value: Complex64,
    pub branch: Branch,
    /// 1-based ordinal by increasing |Im|.
    pub index: usize,
}

impl FadleRoot {
    pub fn residual(&self) -> f64 {
        self.branch.eval(self.value).norm()
    }
}

fn newton(branch: Branch, seed: Complex64, tolerance: f64) -> Result<Complex64> {
    let mut z = seed;
    for _ in 0..NEWTON_MAX_ITER {
        let f = branch.eval(z);
        let step = f / branch.derivative(z);
        z -= step;
        if step.norm() <= 1e-15 * z.norm().max(1.0) && branch.eval(z).norm() < tolerance {
            return Ok(z);
        }
    }
    let residual = branch.eval(z).norm();
    if residual < tolerance {
        return Ok(z);
    }
    Err(Error::NewtonNonConvergence {
        seed,
        iterations: NEWTON_MAX_ITER,
        residual,
    })
}

fn refine_branch(branch: Branch, seeds: usize, tolerance: f64) -> Result<Vec<Complex64>> {
    let mut roots: Vec<Complex64> = Vec::with_capacity(seeds);
    for k in 1..=seeds {
        let z = newton(branch, branch.seed(k), tolerance)?;
        if z.re <= 0.0 {
            continue;
        }
        // conjugate images are the same root for our purposes
        let z = Complex64::new(z.re, z.im.abs());
        if roots.iter().all(|r| (r - z).norm() > 1e-8) {
            roots.push(z);
        }
    }
    roots.sort_by(|a, b| a.im.abs().total_cmp(&b.im.abs()));
    Ok(roots)
}

/// Number of zeros of `sinh z +/- z` inside `rect`, by the argument principle.
pub fn census_count(branch: Branch, rect: &ComplexRect, points: usize) -> Result<f64> {
    let m = contour_moment(rect, points, 0, |z| {
        Ok(branch.derivative(z) / branch.eval(z))
    })?;
    Ok(m.re)
}

/// The `count` roots of smallest |Im| with `Re z > 0` (upper half plane
/// representatives), validated against an argument-principle census.
pub fn find_fadle_roots(branch: Branch, count: usize, tolerance: f64) -> Result<Vec<FadleRoot>> {
    if count == 0 {
        return Err(invalid("root count must be at least 1"));
    }
    if !(tolerance > 0.0 && tolerance <= 1e-6) {
        return Err(invalid(format!(
            "root tolerance {tolerance} must lie in (0, 1e-6]"
        )));
    }
    // enough seeds to cover the census box as well as the request
    let seeds = (count + 2).max(4);
    let roots = refine_branch(branch, seeds, tolerance)?;
    if roots.len() < count {
        return Err(Error::CensusMismatch {
            contour: count as i64,
            found: roots.len(),
        });
    }

    let top = roots[count - 1].im;
    let next = roots.get(count).map(|z| z.im).unwrap_or(top + 2.0);
    let im_max = CENSUS_IM_MAX.max(0.5 * (top + next));
    let re_max = roots.iter().fold(CENSUS_RE_MAX, |m, z| m.max(z.re + 1.0));
    let rect = ComplexRect::new(CENSUS_RE_MIN, re_max, CENSUS_IM_MIN, im_max)?;
    let scale = (rect.perimeter() / 60.0).ceil().max(1.0) as usize;
    let value = census_count(branch, &rect, CENSUS_POINTS * scale)?;
    let contour = value.round();
    if (value - contour).abs() > 0.05 {
        return Err(Error::NonIntegralCount { value });
    }
    let found = roots.iter().filter(|z| rect.contains(**z)).count();
    if contour as i64 != found as i64 {
        return Err(Error::CensusMismatch {
            contour: contour as i64,
            found,
        });
    }

    Ok(roots
        .into_iter()
        .take(count)
        .enumerate()
        .map(|(i, value)| FadleRoot {
            value,
            branch,
            index: i + 1,
        })
        .collect())
}

/// `min |Im z|` over the supplied roots.
pub fn compute_tau(roots: &[FadleRoot]) -> Result<f64> {
    roots
        .iter()
        .map(|r| r.value.im.abs())
        .min_by(f64::total_cmp)
        .ok_or_else(|| invalid("cannot take tau of an empty root set"))
}

/// Roots per branch used for the process-wide tau.
pub const TAU_CENSUS_ROOTS: usize = 5;

/// Fadle constant, computed once from a 5 + 5 root census and cached.
pub fn tau() -> f64 {
    static TAU: OnceLock<f64> = OnceLock::new();
    *TAU.get_or_init(|| {
        let mut roots = find_fadle_roots(Branch::Plus, TAU_CENSUS_ROOTS, 1e-12)
            .expect("plus-branch census is well conditioned");
        roots.extend(
            find_fadle_roots(Branch::Minus, TAU_CENSUS_ROOTS, 1e-12)
                .expect("minus-branch census is well conditioned"),
        );
        compute_tau(&roots).expect("non-empty")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // high-precision values (50-digit Newton) for the first roots
    const PLUS_1: (f64, f64) = (2.250_728_611_601_860_5, 4.212_392_230_490_660_6);
    const MINUS_1: (f64, f64) = (2.768_678_282_987_321_5, 7.497_676_277_776_385_5);

    #[test]
    fn first_plus_root_sets_tau() {
        let r = find_fadle_roots(Branch::Plus, 1, 1e-10).unwrap();
        assert!((r[0].value.re - PLUS_1.0).abs() < 1e-10);
        assert!((r[0].value.im - PLUS_1.1).abs() < 1e-10);
        assert!((r[0].value.im - 4.21239).abs() < 1e-4);
        assert!(r[0].residual() < 1e-10);
    }

    #[test]
    fn first_minus_root() {
        let r = find_fadle_roots(Branch::Minus, 1, 1e-10).unwrap();
        assert!((r[0].value - Complex64::new(MINUS_1.0, MINUS_1.1)).norm() < 1e-10);
    }

    #[test]
    fn tau_from_census() {
        assert!((tau() - 4.21239).abs() < 1e-4);
        assert!((tau() - PLUS_1.1).abs() < 1e-10);
    }

    #[test]
    fn census_box_holds_five_roots() {
        let rect =
            ComplexRect::new(CENSUS_RE_MIN, CENSUS_RE_MAX, CENSUS_IM_MIN, CENSUS_IM_MAX).unwrap();
        let plus = census_count(Branch::Plus, &rect, CENSUS_POINTS).unwrap();
        let minus = census_count(Branch::Minus, &rect, CENSUS_POINTS).unwrap();
        assert!((plus - 3.0).abs() < 1e-3, "{plus}");
        assert!((minus - 2.0).abs() < 1e-3, "{minus}");
    }

    #[test]
    fn roots_are_sorted_and_satisfy_equation() {
        for branch in [Branch::Plus, Branch::Minus] {
            let roots = find_fadle_roots(branch, 12, 1e-9).unwrap();
            assert_eq!(roots.len(), 12);
            for (i, r) in roots.iter().enumerate() {
                assert!(r.value.re > 0.0);
                assert!(r.residual() < 1e-9);
                assert_eq!(r.index, i + 1);
                assert!(r.value.norm() > 1.0, "z = 0 must never be returned");
            }
            assert!(roots.windows(2).all(|w| w[0].value.im < w[1].value.im));
        }
    }

    #[test]
    fn argument_errors() {
        assert!(find_fadle_roots(Branch::Plus, 0, 1e-10).is_err());
        assert!(find_fadle_roots(Branch::Plus, 1, 1e-3).is_err());
        assert!(compute_tau(&[]).is_err());
    }

    #[test]
    fn tau_singleton_and_injected() {
        let root = |im: f64| FadleRoot {
            value: Complex64::new(2.2507, im),
            branch: Branch::Plus,
            index: 1,
        };
        assert_eq!(compute_tau(&[root(4.2124)]).unwrap(), 4.2124);
        assert_eq!(
            compute_tau(&[root(4.2124), root(3.0), root(7.5)]).unwrap(),
            3.0
        );
    }

    proptest! {
        #[test]
        fn tau_is_permutation_invariant_and_monotone(
            ims in proptest::collection::vec(0.1f64..50.0, 1..12),
            extra in 0.1f64..50.0,
            rot in 0usize..12,
        ) {
            let roots: Vec<FadleRoot> = ims.iter().map(|&im| FadleRoot {
                value: Complex64::new(1.0, im), branch: Branch::Minus, index: 1,
            }).collect();
            let mut rotated = roots.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            let t = compute_tau(&roots).unwrap();
            prop_assert_eq!(t, compute_tau(&rotated).unwrap());
            let mut grown = roots.clone();
            grown.push(FadleRoot { value: Complex64::new(1.0, extra), branch: Branch::Plus, index: 1 });
            prop_assert!(compute_tau(&grown).unwrap() <= t);
        }
    }
}
