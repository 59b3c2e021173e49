use std::f64::consts::PI;

use conelab::strip_solver::{estimate_rho0, solve_full, SolverConfig};
use conelab::transforms::{
    read_polar_csv, read_strip_csv, write_polar_csv, write_strip_csv, PolarField,
};
use conelab::verification::{bump, convergence_study, make_manufactured, standard_ladder};

fn bump_data(cfg: &SolverConfig) -> PolarField {
    let omega = cfg.omega();
    PolarField::from_fn(&cfg.r_nodes(), &cfg.theta_nodes(), |r, th| {
        bump(r, 0.3, 0.8) * (PI * th / omega).sin().powi(2)
    })
    .unwrap()
}

#[test]
fn vertex_cutoff_barely_moves_the_solution_away_from_the_vertex() {
    let long = SolverConfig::new(PI / 2.0, 1.0, 2.0, 1.0, 8.0, 161, 16).unwrap();
    let short = long.truncated(0.75).unwrap();
    let a = solve_full(&bump_data(&long), &long).unwrap().v;
    let b = solve_full(&bump_data(&short), &short).unwrap().v;
    let (nr_a, _) = a.shape();
    let (nr_b, nth) = b.shape();
    let offset = nr_a - nr_b;
    let mut worst = 0.0_f64;
    for i in 0..nr_b {
        if b.r_nodes()[i] < 0.1 {
            continue;
        }
        assert!((a.r_nodes()[i + offset] - b.r_nodes()[i]).abs() < 1e-12);
        for j in 0..nth {
            worst = worst.max((a.at(i + offset, j) - b.at(i, j)).abs());
        }
    }
    assert!(worst < 1e-8 * a.max_abs(), "{worst:e}");
}

#[test]
fn manufactured_ladder_on_a_narrow_cone() {
    let cfg = SolverConfig::new(PI / 3.0, 0.8, 3.0, 2.0, 8.0, 41, 16).unwrap();
    let case = make_manufactured(4.5, cfg.cone(), 2.0).unwrap();
    let ladder = standard_ladder(&case, 3.0, 8.0, 1e-10).unwrap();
    let study = convergence_study(&case, &ladder).unwrap();
    assert!(study.monotone);
    assert!(study.matches_stencil_order(), "{}", study.fitted_order);
    assert!(study.to_csv().lines().count() == 4);
}

#[test]
fn solution_files_round_trip() {
    let cfg = SolverConfig::new(PI / 2.0, 1.0, 2.0, 1.0, 6.0, 41, 12).unwrap();
    let s = solve_full(&bump_data(&cfg), &cfg).unwrap();
    let polar = read_polar_csv(&write_polar_csv(&s.v)).unwrap();
    let strip = read_strip_csv(&write_strip_csv(&s.strip)).unwrap();
    assert_eq!(polar, s.v);
    assert_eq!(strip, s.strip);
}

#[test]
fn rho0_probes_grow_with_rho() {
    let cfg = SolverConfig::new(PI / 2.0, 1.0, 2.0, 1.0, 6.0, 41, 12).unwrap();
    let est = estimate_rho0(&cfg, 50.0).unwrap();
    assert!(est.monotone && !est.unsaturated);
    let mut probes = est.probes.clone();
    probes.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(probes.windows(2).all(|w| w[1].1 >= w[0].1));
    // a solve just inside rho0 converges
    let inside = cfg.with_rho(0.9 * est.rho0).unwrap();
    assert!(
        solve_full(&bump_data(&inside), &inside)
            .unwrap()
            .report
            .converged
    );
}
