use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use conelab::corner_spectra::{
    check_admissible, compute_tau, find_fadle_roots, find_pencil_roots, p_max, tau, Branch,
    ComplexRect, PMax,
};
use conelab::Error;

fn sinh_plus_minus(z: Complex64, sign: f64) -> Complex64 {
    let e = z.exp();
    (e - 1.0 / e) * 0.5 + z * sign
}

#[test]
fn fadle_roots_solve_their_equation() {
    for (branch, sign) in [(Branch::Plus, 1.0), (Branch::Minus, -1.0)] {
        for r in find_fadle_roots(branch, 6, 1e-12).unwrap() {
            let f = sinh_plus_minus(r.value, sign);
            assert!(
                f.norm() < 1e-10 * r.value.norm().exp(),
                "{branch:?} {}",
                r.value
            );
        }
    }
}

#[test]
fn tau_comes_from_the_plus_branch() {
    let plus = find_fadle_roots(Branch::Plus, 3, 1e-12).unwrap();
    let minus = find_fadle_roots(Branch::Minus, 3, 1e-12).unwrap();
    let t = compute_tau(&[plus.clone(), minus.clone()].concat()).unwrap();
    assert_eq!(t, compute_tau(&plus).unwrap());
    assert!(compute_tau(&minus).unwrap() > t + 3.0);
    assert!((t - tau()).abs() < 1e-12);
    assert!((t - 4.21239).abs() < 1e-4);
}

#[test]
fn half_plane_pencil_has_double_integer_roots() {
    let window = ComplexRect::new(1.5, 4.5, -0.5, 0.5).unwrap();
    let roots = find_pencil_roots(PI, &window).unwrap();
    let found: Vec<(f64, usize)> = roots
        .iter()
        .map(|r| (r.lambda.re, r.multiplicity))
        .collect();
    assert_eq!(found.len(), 3, "{found:?}");
    for (k, (re, m)) in found.iter().enumerate() {
        assert!((re - (k + 2) as f64).abs() < 1e-6, "{found:?}");
        assert_eq!(*m, 2);
    }
}

#[test]
fn crack_pencil_has_half_integer_roots() {
    let window = ComplexRect::new(0.75, 2.25, -0.5, 0.5).unwrap();
    let roots = find_pencil_roots(2.0 * PI, &window).unwrap();
    let mut re: Vec<f64> = roots.iter().map(|r| r.lambda.re).collect();
    re.sort_by(f64::total_cmp);
    assert_eq!(re.len(), 2, "{re:?}");
    assert!(
        (re[0] - 1.5).abs() < 1e-6 && (re[1] - 2.0).abs() < 1e-6,
        "{re:?}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pencil_roots_satisfy_the_wedge_relation(omega in 0.3..1.9 * PI) {
        let roots = [4.0, 4.1]
            .iter()
            .find_map(|&re_max| {
                let window = ComplexRect::new(0.05, re_max, -3.0, 3.0).unwrap();
                match find_pencil_roots(omega, &window) {
                    Err(Error::ContourTooClose { .. }) => None,
                    other => Some(other.unwrap()),
                }
            })
            .unwrap();
        for r in roots {
            let l = r.lambda;
            let s = (l * omega).sin();
            let t = l * omega.sin();
            let defect = ((s - t) * (s + t)).norm() / (1.0 + s.norm_sqr() + t.norm_sqr());
            prop_assert!(defect < 1e-8, "omega {omega} lambda {l} defect {defect}");
        }
    }

    #[test]
    fn admissible_exactly_below_p_max(omega in 0.05..2.0 * PI, p in 1.001..50.0) {
        let t = tau();
        let v = check_admissible(omega, p).unwrap();
        let expected = match p_max(omega, t) {
            PMax::Unbounded => true,
            PMax::Finite(m) => p < m,
            PMax::None => false,
        };
        prop_assert_eq!(v.admissible, expected);
        prop_assert_eq!(v.admissible, omega * (3.0 - 2.0 / p) < t);
    }
}
