//! Fadle roots, tau, the admissible `(omega, p)` region and the clamped-wedge
//! pencil whose roots are the corner exponents.

mod admissibility;
mod contour;
mod fadle;
mod pencil;

use std::fmt::Write as _;

pub use admissibility::{
    check_admissible, check_admissible_with_tau, p_max, AdmissibilityVerdict, PMax,
};
pub use contour::{contour_moment, phase_winding, ComplexRect};
pub use fadle::{
    census_count, compute_tau, find_fadle_roots, tau, Branch, FadleRoot, CENSUS_IM_MAX,
    CENSUS_IM_MIN, CENSUS_POINTS, CENSUS_RE_MAX, CENSUS_RE_MIN, TAU_CENSUS_ROOTS,
};
pub use pencil::{
    find_pencil_roots, pencil_zero_count, relative_residual, wedge_pencil_derivative,
    wedge_pencil_determinant, PencilRoot, CONTOUR_CLEARANCE, PENCIL_ROOT_TOLERANCE,
};

/// `branch,index,re,im,residual`
pub fn roots_csv(roots: &[FadleRoot]) -> String {
    let mut s = String::from("branch,index,re,im,residual\n");
    for r in roots {
        let _ = writeln!(
            s,
            "{},{},{:.16e},{:.16e},{:.3e}",
            r.branch,
            r.index,
            r.value.re,
            r.value.im,
            r.residual()
        );
    }
    s
}

/// `omega,p,nu,tau,admissible,p_max`
pub fn admissibility_csv(verdicts: &[AdmissibilityVerdict]) -> String {
    let mut s = String::from("omega,p,nu,tau,admissible,p_max\n");
    for v in verdicts {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            v.omega,
            v.p,
            3.0 - 2.0 / v.p,
            v.tau,
            v.admissible,
            v.p_max
        );
    }
    s
}

/// Cartesian scan over `omegas x ps`, omega-major.
pub fn admissibility_scan(omegas: &[f64], ps: &[f64]) -> crate::Result<Vec<AdmissibilityVerdict>> {
    if omegas.is_empty() || ps.is_empty() {
        return Err(crate::Error::InvalidArgument(
            "admissibility scan needs non-empty ranges".into(),
        ));
    }
    let t = tau();
    let mut out = Vec::with_capacity(omegas.len() * ps.len());
    for &w in omegas {
        for &p in ps {
            out.push(check_admissible_with_tau(w, p, t)?);
        }
    }
    Ok(out)
}
