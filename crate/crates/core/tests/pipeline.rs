use std::path::Path;

use lsrbf::experiments::{
    emit_csv, parse_csv, reports_to_csv, run_single, run_sweep, NRange, PdeConfig, SweepConfig, SweepDomain,
};
use lsrbf::geometry::{Domain2D, FourierCurve, Interval, Shape2D};
use lsrbf::kernels::RbfKernel;
use lsrbf::lssolver::Factorization;
use lsrbf::pde::{runge_poisson_2d, solve_poisson, CollocationNodes};
use lsrbf::scaling::ScalingPolicy;
use lsrbf::{Error, lssolver::SolverConfig};

fn runge(n_range: NRange) -> SweepConfig {
    let iv = Interval::new(-1.0, 1.0, 1.5).unwrap();
    SweepConfig::new("runge", SweepDomain::Interval(iv), 1e-10, ScalingPolicy::LinearOptimal { extension: 1.5, tau: 1e-10 }, n_range)
}

#[test]
fn repeated_sweeps_give_identical_csv() {
    let config = runge(NRange::new(5, 60, 5).unwrap());
    let a = reports_to_csv(&run_sweep(&config).unwrap());
    let b = reports_to_csv(&run_sweep(&config).unwrap());
    assert_eq!(a, b);
    assert_eq!(parse_csv(&a).unwrap(), run_sweep(&config).unwrap());
}

#[test]
fn csv_io_errors_carry_the_path() {
    let reports = run_sweep(&runge(NRange::single(5))).unwrap();
    let path = Path::new("/nonexistent/dir/out.csv");
    match emit_csv(&reports, path) {
        Err(Error::Io { path: p, .. }) => assert_eq!(p, path),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn qr_and_svd_sweeps_agree() {
    let svd = run_single(&runge(NRange::single(30)), 30).unwrap();
    let mut config = runge(NRange::single(30));
    config.factorization = Factorization::PivotedQr;
    let qr = run_single(&config, 30).unwrap();
    assert!(qr.err_l2 < 100.0 * svd.err_l2.max(1e-10), "qr {} svd {}", qr.err_l2, svd.err_l2);
}

#[test]
fn every_kernel_converges_on_runge() {
    for kernel in RbfKernel::ALL {
        let mut config = runge(NRange::new(10, 40, 30).unwrap());
        config.kernel = kernel;
        config.scaling = ScalingPolicy::Linear { c: 0.3 };
        let reports = run_sweep(&config).unwrap();
        assert!(reports[1].err_l2 < reports[0].err_l2, "{kernel}");
        assert!(reports[1].err_l2 < 1e-3, "{kernel}: {}", reports[1].err_l2);
    }
}

#[test]
fn failing_sample_source_is_reported() {
    // The pole function is singular at 1.2, which lies inside [-1.5, 1.5].
    let iv = Interval::new(-1.5, 1.2, 1.6).unwrap();
    let config = SweepConfig::new("pole", SweepDomain::Interval(iv), 1e-10, ScalingPolicy::Linear { c: 0.2 }, NRange::single(10));
    assert!(matches!(run_sweep(&config), Err(Error::SampleEvaluation { .. })));
}

#[test]
fn poisson_on_a_parametric_domain() {
    let curve = FourierCurve::symmetric(vec![0.0, 1.0], vec![0.0, 0.7]).unwrap();
    let domain = Domain2D::new(Shape2D::Parametric(curve), [1.2, 0.9]).unwrap();
    let problem = runge_poisson_2d(domain.clone()).with_validation_count(3000);
    let nodes = CollocationNodes::planar(&domain, &domain.bounding_box(), 600, 3.0, 8.0).unwrap();
    let eps = 0.25 * (nodes.centers.len() as f64).sqrt();
    let (_, report) =
        solve_poisson(&problem, &nodes.centers, &nodes.interior, &nodes.boundary, eps, &SolverConfig::new(1e-13)).unwrap();
    let report = report.unwrap();
    assert!(report.max_error < 1e-2, "{}", report.max_error);
}

#[test]
fn pde_settings_for_the_disk() {
    let map = lsrbf::experiments::parse_config(
        "problem = runge2d\nc = 0.19\nbounding = 1.25\ncenter_region = disk\nn_min = 600\nn_max = 600\ngamma = 3\nboundary_factor = 12\ntau = 1e-14\n",
    )
    .unwrap();
    let reports = PdeConfig::from_settings(&map).unwrap().run_sweep().unwrap();
    assert!(reports[0].err_max < 5e-3, "{}", reports[0].err_max);
    assert!(reports[0].m_boundary > 100);
}
