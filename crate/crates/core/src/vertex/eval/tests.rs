use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::loewner::Driver;
use crate::vertex::{eval_along_path, Node, PathEvaluator};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn params(kappa: f64) -> SleCftParams {
    SleCftParams::from_kappa(kappa).unwrap()
}

fn close(x: Complex64, y: Complex64, tol: f64) -> bool {
    (x - y).norm() <= tol * y.norm().max(1.0)
}

#[test]
fn trivial_values() {
    let p = params(3.0);
    let v = eval_rooted(&Divisor::empty(), &p, &Chart::identity(&[])).unwrap();
    assert_eq!(v.value(), c(1.0, 0.0));
    let zero = Divisor::single(c(0.2, 0.3), 0.0, 0.0, 0.0, 0.0).unwrap();
    let v = eval_hatted(&zero, &p, &Chart::identity(&[c(0.2, 0.3)])).unwrap();
    assert!(close(v.value(), c(1.0, 0.0), 1e-15));
}

#[test]
fn one_leg_identity_chart() {
    for kappa in [2.0, 8.0 / 3.0, 4.0, 6.0] {
        let p = params(kappa);
        let z = c(0.4, -0.3);
        let v = eval_rooted(&Divisor::one_leg(z, &p).unwrap(), &p, &Chart::identity(&[z])).unwrap();
        assert!(close(v.value(), (-p.h12 * z.ln()).exp(), 1e-13));
    }
}

#[test]
fn nonchiral_two_point() {
    let p = params(3.0);
    let (z1, z2, al) = (c(0.3, 0.4), c(-0.5, 0.1), 0.7);
    let got = nonchiral_pair(al, z1, z2, &p).unwrap().value();
    let q = ((1.0 - z1.norm_sqr()) * (1.0 - z2.norm_sqr())).powf(al * al);
    let r = ((1.0 - z1 * z2.conj()) / (z1 - z2)).norm().powf(2.0 * al * al);
    let e = c(0.0, al * p.b);
    let want = q * r * z1.conj().powc(e) * z1.powc(-e) * z2.conj().powc(e) * z2.powc(-e);
    assert!(close(got, want, 1e-12), "{got} {want}");
}

#[test]
fn hatted_examples_identity_chart() {
    let p = params(8.0 / 3.0);
    let (z, z0, al) = (c(-0.2, 0.5), c(0.3, -0.4), 0.6);
    let i = c(0.0, 1.0);
    let got = chiral_dipole_hatted(al, z, z0, &p).unwrap().value();
    let want = ((z - z0).ln() * (al * al)
        + (1.0 - z).ln() * (-i * al * p.a)
        + (1.0 - z0).ln() * (i * al * p.a)
        + z.ln() * (i * al * (p.a / 2.0 - p.b))
        - z0.ln() * (i * al * (p.a / 2.0 - p.b)))
        .exp();
    assert!(close(got, want, 1e-12), "{got} {want}");
    let got = nonchiral_one_point_hatted(al, z, &p).unwrap().value();
    let want = (1.0 - z.norm_sqr()).powf(al * al)
        * (2.0 * al * p.a * (1.0 - z).arg() + al * (-p.a + 2.0 * p.b) * z.arg()).exp();
    assert!(close(got, c(want, 0.0), 1e-12), "{got} {want}");
}

#[test]
fn neutrality_required_except_formally() {
    let p = params(4.0);
    let z = c(0.3, 0.0);
    let d = Divisor::single(z, 1.0, 0.0, 0.0, 0.0).unwrap();
    let ch = Chart::identity(&[z]);
    assert!(matches!(eval_rooted(&d, &p, &ch), Err(Error::Charge(_))));
    assert!(matches!(eval_hatted(&d, &p, &ch), Err(Error::Charge(_))));
    let v = eval_formal(&d, &p, &ch, true).unwrap();
    assert!(!v.neutral && v.value.is_finite());
}

#[test]
fn coincident_images_rejected() {
    let p = params(4.0);
    let d = Divisor::new(
        vec![
            Node { z: c(0.1, 0.1), sigma: 1.0, sigma_star: 0.0 },
            Node { z: c(0.2, 0.1), sigma: -1.0, sigma_star: 0.0 },
        ],
        0.0,
        0.0,
    )
    .unwrap();
    let mut ch = Chart::identity(&[c(0.1, 0.1), c(0.2, 0.1)]);
    ch.nodes[1].w = ch.nodes[0].w;
    assert!(matches!(eval_rooted(&d, &p, &ch), Err(Error::Singularity(_))));
}

/// Direct product of principal powers, written out factor by factor.
fn oracle_product(d: &Divisor, p: &SleCftParams, zs: &[Complex64]) -> Complex64 {
    let pw = |x: Complex64, e: f64| if e == 0.0 { c(1.0, 0.0) } else { x.powf(e) };
    let mut v = c(1.0, 0.0);
    for (n, &z) in d.nodes.iter().zip(zs) {
        let (s, ss) = (n.sigma, n.sigma_star);
        let nu = (p.b + d.tau) * s;
        let nus = (p.b + d.tau_star) * ss;
        v *= pw(z, nu) * pw(z.conj(), nus) * (1.0 - z.norm_sqr()).powf(s * ss);
    }
    for j in 0..zs.len() {
        for k in j + 1..zs.len() {
            let (nj, nk) = (&d.nodes[j], &d.nodes[k]);
            let diff = pair_sign(zs[j], zs[k]) * (zs[j] - zs[k]);
            v *= pw(diff, nj.sigma * nk.sigma)
                * pw(diff.conj(), nj.sigma_star * nk.sigma_star)
                * pw(1.0 - zs[j] * zs[k].conj(), nj.sigma * nk.sigma_star)
                * pw(1.0 - zs[j].conj() * zs[k], nj.sigma_star * nk.sigma);
        }
    }
    v
}

#[test]
fn star_product_matches_expanded_formula() {
    let p = params(3.0);
    let d1 = Divisor::new(
        vec![
            Node { z: c(0.2, 0.3), sigma: 0.4, sigma_star: -0.3 },
            Node { z: c(-0.4, 0.2), sigma: -0.2, sigma_star: 0.5 },
        ],
        0.1,
        -0.5,
    )
    .unwrap();
    let d2 = Divisor::single(c(0.1, -0.6), 0.3, 0.2, -0.35, -0.15).unwrap();
    let d = d1.star(&d2);
    let zs = d.node_positions();
    let got = eval_rooted(&d, &p, &Chart::identity(&zs)).unwrap().value();
    assert!(close(got, oracle_product(&d, &p, &zs), 1e-12));
}

#[test]
fn conjugation_and_reality() {
    let p = params(5.0);
    let d = Divisor::new(
        vec![
            Node { z: c(0.2, 0.3), sigma: 0.4, sigma_star: -0.3 },
            Node { z: c(0.4, -0.2), sigma: -0.2, sigma_star: 0.5 },
        ],
        0.1,
        -0.5,
    )
    .unwrap();
    let ch = Chart::identity(&d.node_positions());
    let v = eval_hatted(&d, &p, &ch).unwrap().value();
    let vc = eval_hatted(&d.conjugate(), &p, &ch).unwrap().value();
    assert!(close(vc, v.conj(), 1e-12));
    let real = Divisor::new(
        vec![
            Node { z: c(0.2, 0.3), sigma: 0.4, sigma_star: 0.4 },
            Node { z: c(-0.4, -0.5), sigma: -0.7, sigma_star: -0.7 },
        ],
        0.3,
        0.3,
    )
    .unwrap();
    let arg = eval_hatted(&real, &p, &Chart::identity(&real.node_positions())).unwrap().value.arg;
    assert!((arg / (2.0 * PI) - (arg / (2.0 * PI)).round()).abs() < 1e-9);
}

/// Generator `∂_s + (κ/2)∂_φ²` of the chart dynamics at t = 0, applied to the
/// hatted correlator and divided by its value.
fn relative_drift(d: &ComplexDivisor, p: &SleCftParams) -> Complex64 {
    let zs = d.node_positions();
    let n = zs.len();
    let chart_at = |s: f64, phi: f64| -> Chart {
        let rot = c(0.0, -phi);
        let nodes: Vec<NodeChart> = zs
            .iter()
            .map(|&z| {
                let vz = z * (1.0 + z) / (1.0 - z);
                let vp = (1.0 + 2.0 * z - z * z) / ((1.0 - z) * (1.0 - z));
                let g = z + s * vz;
                // continuous logs: ln z plus small increments
                NodeChart {
                    w: g * rot.exp(),
                    log_w: z.ln() + (g / z).ln() + rot,
                    log_w_prime: (1.0 + s * vp).ln() + rot,
                }
            })
            .collect();
        let mut pair_logs = Vec::new();
        for j in 0..n {
            for k in j + 1..n {
                let base = zs[j] - zs[k];
                let now = nodes[j].w - nodes[k].w;
                pair_logs.push(base.ln() + (now * (-rot).exp() / base).ln() + rot);
            }
        }
        Chart { nodes, log_wq_prime: c(s, -phi), pair_logs }
    };
    let m = |s: f64, phi: f64| log_correlator(d, p, &chart_at(s, phi), true).unwrap().exp();
    let h = 1e-4;
    let m0 = m(0.0, 0.0);
    let ds = (m(h, 0.0) - m(-h, 0.0)) / (2.0 * h);
    let hp = 1e-3;
    let dpp = (m(0.0, hp) - 2.0 * m0 + m(0.0, -hp)) / (hp * hp);
    (ds + p.kappa / 2.0 * dpp) / m0
}

#[test]
fn neutral_correlators_have_zero_drift() {
    for kappa in [2.0, 8.0 / 3.0, 4.0, 6.0] {
        let p = params(kappa);
        let cases = [
            Divisor::one_leg(c(0.3, 0.2), &p).unwrap(),
            Divisor::single(c(0.3, 0.0), 1.0, 0.0, -0.5, -0.5).unwrap(),
            Divisor::single(c(-0.2, 0.5), -p.a, -p.a, p.a, p.a).unwrap(),
            Divisor::new(
                vec![
                    Node { z: c(0.2, 0.3), sigma: 0.4, sigma_star: -0.3 },
                    Node { z: c(-0.4, -0.2), sigma: -0.2, sigma_star: 0.5 },
                ],
                0.1,
                -0.5,
            )
            .unwrap(),
        ];
        for d in &cases {
            let drift = relative_drift(&d.into(), &p);
            assert!(drift.norm() < 2e-5, "κ={kappa} {d}: {drift}");
        }
        let nc = ComplexDivisor::nonchiral(0.6, c(0.1, 0.4)).star(&ComplexDivisor::nonchiral(-0.3, c(-0.5, 0.1)));
        assert!(relative_drift(&nc, &p).norm() < 2e-5);
        let dip = ComplexDivisor::chiral_dipole(0.8, c(0.3, 0.3), c(-0.1, -0.5));
        assert!(relative_drift(&dip, &p).norm() < 2e-5);
    }
}

#[test]
fn non_neutral_correlator_has_drift() {
    let p = params(4.0);
    let d = Divisor::single(c(0.3, 0.0), 1.0, 0.0, 0.0, 0.0).unwrap();
    let drift = relative_drift(&(&d).into(), &p);
    assert!(drift.norm() > 0.5, "{drift}");
}

#[test]
fn constant_field_along_path() {
    let p = params(3.0);
    let tau = 0.7;
    let d = Divisor::new(vec![], tau, -tau).unwrap();
    let drv = Driver::brownian(3.0, 1e-3, 500, 2, 0).unwrap();
    let series = eval_along_path(&d, &p, &drv, 10).unwrap();
    assert_eq!(series.times.len(), 51);
    for (t, v) in series.times.iter().zip(&series.values) {
        let k = (t / 1e-3).round() as usize;
        let want = c(tau * tau * t, tau * p.a * drv.theta[k]);
        assert!((v.value.log() - want).norm() < 1e-12);
    }
}

#[test]
fn real_field_is_poisson_ratio_at_kappa_two() {
    let p = params(2.0);
    let z = c(0.1, 0.4);
    let d = Divisor::single(z, -p.a, -p.a, p.a, p.a).unwrap();
    let drv = Driver::brownian(2.0, 1e-3, 400, 5, 1).unwrap();
    let mut ev = PathEvaluator::new(&d, &p).unwrap();
    while ev.step(&drv).unwrap() {
        let w = ev.tracker().w_interior(0).unwrap().w;
        let poisson = (1.0 - w.norm_sqr()) / (1.0 - w).norm_sqr();
        let v = ev.current().unwrap().value();
        assert!((v - poisson).norm() < 1e-12 * poisson);
    }
}

#[test]
fn path_starts_at_identity_chart() {
    let p = params(6.0);
    let d = Divisor::new(
        vec![
            Node { z: c(0.2, 0.3), sigma: 0.4, sigma_star: -0.3 },
            Node { z: c(-0.4, -0.2), sigma: -0.2, sigma_star: 0.5 },
        ],
        0.1,
        -0.5,
    )
    .unwrap();
    let ev = PathEvaluator::new(&d, &p).unwrap();
    let want = eval_hatted(&d, &p, &Chart::identity(&d.node_positions())).unwrap();
    assert_eq!(ev.current().unwrap(), want);
}

#[test]
fn swallowed_node_truncates_series() {
    let p = params(4.0);
    let d = Divisor::single(c(0.9, 0.0), 1.0, 0.0, -0.5, -0.5).unwrap();
    let drv = Driver::constant(0.0, 1e-3, 200).unwrap();
    let s = eval_along_path(&d, &p, &drv, 1).unwrap();
    let tau = s.swallow_time.unwrap();
    assert!(tau < 0.2);
    assert!(*s.times.last().unwrap() < tau);
}

proptest! {
    #[test]
    fn permutation_symmetry(s1 in -1.0f64..1.0, s2 in -1.0f64..1.0, s3 in -1.0f64..1.0, tau in -1.0f64..1.0) {
        let p = params(3.0);
        let nodes = vec![
            Node { z: c(0.2, 0.3), sigma: s1, sigma_star: s2 },
            Node { z: c(-0.4, 0.1), sigma: s3, sigma_star: -s1 },
            Node { z: c(0.1, -0.6), sigma: s2, sigma_star: 0.3 },
        ];
        let rest: f64 = nodes.iter().map(|n| n.sigma + n.sigma_star).sum();
        let d = Divisor::new(nodes.clone(), tau, -rest - tau).unwrap();
        let mut rev = nodes;
        rev.reverse();
        let r = Divisor::new(rev, tau, -rest - tau).unwrap();
        let v1 = eval_hatted(&d, &p, &Chart::identity(&d.node_positions())).unwrap().value();
        let v2 = eval_hatted(&r, &p, &Chart::identity(&r.node_positions())).unwrap().value();
        prop_assert!(close(v1, v2, 1e-11));
    }
}
