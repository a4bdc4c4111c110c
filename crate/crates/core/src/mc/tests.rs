use super::experiments::segment_distance;
use super::*;
use crate::loewner::Driver;
use crate::vertex::Divisor;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn constant_field(tau: f64) -> McObservable {
    McObservable::vertex(&Divisor::new(vec![], tau, -tau).unwrap()).unwrap()
}

#[test]
fn config_validation() {
    let ok = McConfig::new(2.0, 100, 1e-2, vec![0.1, 0.3], 1);
    assert!(ok.validate().is_ok());
    assert_eq!(ok.sample_steps().unwrap(), vec![10, 30]);
    assert!(McConfig::new(2.0, 99, 1e-2, vec![0.1], 1).validate().is_err());
    assert!(McConfig::new(2.0, 100, 0.03, vec![0.1], 1).validate().is_err());
    assert!(McConfig::new(2.0, 100, 1e-2, vec![0.3, 0.1], 1).validate().is_err());
    assert!(McConfig::new(-1.0, 100, 1e-2, vec![0.1], 1).validate().is_err());
}

#[test]
fn reports_do_not_depend_on_worker_count() {
    let mut cfg = McConfig::new(4.0, 120, 1e-2, vec![0.1, 0.2], 11);
    let obs = McObservable::LswPoisson { z: c(0.1, 0.4) };
    cfg.threads = Some(1);
    let a = martingale_test(&cfg, &obs).unwrap().to_json().unwrap();
    cfg.threads = Some(3);
    let b = martingale_test(&cfg, &obs).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    assert!(a.contains("\"schema\": 1"));
    let mut csv = Vec::new();
    martingale_test(&cfg, &obs).unwrap().write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("time,mean_re,mean_im,stderr,z_re,z_im\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn deterministic_ensemble_equals_the_pathwise_value() {
    let cfg = McConfig::new(0.0, 100, 1e-3, vec![0.0, 0.2, 0.5], 3);
    let obs = McObservable::Sle0 { z: c(0.0, 0.5), component: Sle0Component::Schwarzian };
    let rep = martingale_test(&cfg, &obs).unwrap();
    let p = cfg.params().unwrap();
    let single = run_path(&obs, &p, &cfg.driver(0).unwrap(), &cfg.sample_steps().unwrap(), cfg.exit_radius).unwrap();
    for (row, v) in rep.rows.iter().zip(&single.values) {
        assert!((c(row.mean_re, row.mean_im) - v).norm() <= 1e-14 * v.norm());
        assert_eq!(row.stderr, 0.0);
    }
    assert_eq!((rep.rows[0].mean_re, rep.rows[0].mean_im), (rep.m0_re, rep.m0_im));
    assert!(rep.pass);
}

#[test]
fn insufficient_data_when_everything_is_swallowed() {
    let cfg = McConfig::new(0.0, 100, 1e-3, vec![0.5], 3);
    let obs = McObservable::LswPoisson { z: c(0.99, 0.0) };
    assert!(matches!(martingale_test(&cfg, &obs), Err(Error::InsufficientData(_))));
}

#[test]
fn constant_field_small_ensemble_passes() {
    let cfg = McConfig::new(3.0, 400, 1e-2, vec![0.1, 0.5], 5);
    let rep = martingale_test(&cfg, &constant_field(0.7)).unwrap();
    assert!((rep.m0_re - 1.0).abs() < 1e-15 && rep.m0_im.abs() < 1e-15);
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.metadata.stop_count, 0);
}

#[test]
fn zero_divisor_is_trivially_neutral() {
    let cfg = McConfig::new(4.0, 100, 1e-2, vec![0.5], 5);
    let r = neutrality_negative_test(&cfg, &Divisor::empty()).unwrap();
    assert!(!r.drift_detected);
    assert!(r.report.pass);
    assert_eq!(r.report.rows[0].stderr, 0.0);
}

#[test]
fn exponent_fit_degenerate_control() {
    // σ = 0 for h = 0 below κ = 4: boundary points are never swallowed
    let cfg = McConfig::new(2.0, 100, 1e-2, vec![0.2, 0.4, 0.6], 9);
    let fit = exponent_fit(0.0, 2.0, &cfg).unwrap();
    assert_eq!(fit.slope, 0.0);
    assert_eq!(fit.predicted_slope, 0.0);
    assert!(fit.warning.is_none());
    assert!(exponent_fit(0.0, 2.0, &McConfig::new(2.0, 100, 1e-2, vec![0.2], 9)).is_err());
}

#[test]
fn segment_distances() {
    let (a, b) = (c(-1.0, 0.0), c(-0.5, 0.0));
    assert_eq!(segment_distance(c(-0.7, -1.0), c(-0.7, 1.0), a, b), 0.0);
    assert!((segment_distance(c(0.0, 0.0), c(0.0, 1.0), a, b) - 0.5).abs() < 1e-15);
    assert!((segment_distance(c(-0.8, 0.3), c(-0.6, 0.3), a, b) - 0.3).abs() < 1e-15);
    assert!((segment_distance(c(-0.8, 0.3), c(-0.8, 0.3), a, b) - 0.3).abs() < 1e-15);
}

#[test]
fn restriction_is_mirror_symmetric() {
    let u = Complex64::from_polar(1.0, 2.5);
    for path in 0..4 {
        let d = Driver::brownian(8.0 / 3.0, 1e-2, 100, 21, path).unwrap();
        let direct = experiments::trace_avoids(&d, 0.5 * u, u, 0.05);
        let mirrored = experiments::trace_avoids(&d.mirrored(), 0.5 * u.conj(), u.conj(), 0.05);
        assert_eq!(direct, mirrored);
    }
    let cfg = McConfig::new(8.0 / 3.0, 100, 1e-2, vec![0.2], 2);
    let near = restriction_experiment(0.999, PI_, &cfg).unwrap();
    assert!(near.p_formula > 0.99 && near.p_mc > 0.95);
    assert!(restriction_experiment(0.5, PI_, &McConfig::new(2.0, 100, 1e-2, vec![0.2], 2)).is_err());
}

const PI_: f64 = std::f64::consts::PI;

#[test]
fn ito_residuals_on_short_paths() {
    let p = SleCftParams::from_kappa(4.0).unwrap();
    let empty = Driver::from_samples(1e-4, vec![0.0]).unwrap();
    for obs in [
        ItoObservable::ConstantVertex { tau: 0.7 },
        ItoObservable::SsPhiHat { z: c(0.3, 0.0) },
        ItoObservable::ChiralN { z: c(0.0, 0.4) },
    ] {
        assert_eq!(ito_residual_path(&obs, &p, &empty).unwrap().residual, 0.0);
    }
    let d = Driver::brownian(4.0, 1e-4, 2000, 4, 0).unwrap();
    let r = ito_residual_path(&ItoObservable::ConstantVertex { tau: 0.7 }, &p, &d).unwrap();
    assert!(r.residual < 1e-12, "{r:?}");
    let r = ito_residual_path(&ItoObservable::ChiralN { z: c(0.0, 0.4) }, &p, &d).unwrap();
    assert!(r.residual < 0.05, "{r:?}");
}

#[test]
fn hadamard_with_the_origin() {
    let p = SleCftParams::from_kappa(4.0).unwrap();
    let d = Driver::brownian(4.0, 1e-4, 1000, 8, 0).unwrap();
    let h = hadamard_path(c(0.0, 0.5), c(0.0, 0.0), &p, &d).unwrap();
    assert!(h.covariation.is_none());
    assert!(h.rate_residual < 1e-3, "{h:?}");
    assert!(hadamard_path(c(0.2, 0.0), c(0.2, 0.0), &p, &d).is_err());
}

#[test]
fn residual_summary() {
    let s = ResidualSummary::of(&[3.0, 1.0, 2.0, 10.0]);
    assert_eq!((s.median, s.mean, s.max), (2.5, 4.0, 10.0));
    assert_eq!(ResidualSummary::of(&[1.0, 5.0, 2.0]).median, 2.0);
}
