//! The hatted Virasoro field `T̂`, its n-point recursion and BPZ-Cardy residuals.

use std::collections::HashMap;

use num_complex::Complex64;

use super::expr::{self, add, constant, div, mul, powi, sub, sum, var, Differentiator, E};
use crate::error::{Error, Result};
use crate::params::SleCftParams;

fn check_point(z: Complex64) -> Result<()> {
    if z.norm() == 0.0 || (z - 1.0).norm() == 0.0 || !z.is_finite() {
        return Err(Error::Singularity(format!("point {z} is singular (0 or 1)")));
    }
    Ok(())
}

/// `E T̂(z) = h12/(z(1−z)²) + h0half/z²` in the identity chart.
pub fn t_hat_1pt(z: Complex64, p: &SleCftParams) -> Result<Complex64> {
    check_point(z)?;
    let om = 1.0 - z;
    Ok(p.h12 / (z * om * om) + p.h0half / (z * z))
}

/// `(R, R', R'')` of the one-point function with coefficients `(λ, h0)`.
pub fn t_hat_1pt_derivs(z: Complex64, lambda: f64, h0: f64) -> (Complex64, Complex64, Complex64) {
    let om = 1.0 - z;
    let (zi, oi) = (1.0 / z, 1.0 / om);
    let r = lambda * zi * oi * oi + h0 * zi * zi;
    let r1 = lambda * (-zi * zi * oi * oi + 2.0 * zi * oi * oi * oi) - 2.0 * h0 * zi * zi * zi;
    let r2 = lambda * (2.0 * zi.powi(3) * oi * oi - 4.0 * zi * zi * oi.powi(3) + 6.0 * zi * oi.powi(4))
        + 6.0 * h0 * zi.powi(4);
    (r, r1, r2)
}

/// Residual of the second-order equation for the one-point function with
/// arbitrary coefficients `(λ, h0)`; vanishes at `λ = h12`, `h0 = h0half`.
pub fn bpz_residual_virasoro_with(z: Complex64, p: &SleCftParams, lambda: f64, h0: f64) -> Result<Complex64> {
    check_point(z)?;
    let (r, r1, r2) = t_hat_1pt_derivs(z, lambda, h0);
    let om = 1.0 - z;
    let lhs = (z * z * r2 + 5.0 * z * r1 + 4.0 * r) / (p.a * p.a);
    let rhs = z * (1.0 + z) / om * r1 + 2.0 * (1.0 + 2.0 * z - z * z) / (om * om) * r + p.c / om.powi(4);
    Ok(lhs - rhs)
}

pub fn bpz_residual_virasoro(z: Complex64, p: &SleCftParams) -> Result<Complex64> {
    bpz_residual_virasoro_with(z, p, p.h12, p.h0half)
}

/// Boundary scalar operator `(κ/2)R'' + cot(θ/2)R' − (h/2)csc²(θ/2)R` at `θ`,
/// derivatives by central differences with step `1e-4`.
pub fn bpz_residual_boundary_scalar(r: impl Fn(f64) -> f64, h: f64, p: &SleCftParams, theta: f64) -> Result<f64> {
    bpz_residual_boundary_rooted(r, h, 0.0, p, theta)
}

/// As [`bpz_residual_boundary_scalar`] plus the root term `q_rate·R`, where
/// `q_rate = ĥ_q + ĥ_q*` is the exponential rate carried by the root.
pub fn bpz_residual_boundary_rooted(
    r: impl Fn(f64) -> f64,
    h: f64,
    q_rate: f64,
    p: &SleCftParams,
    theta: f64,
) -> Result<f64> {
    let s = (theta / 2.0).sin();
    if s.abs() < 1e-8 {
        return Err(Error::Singularity(format!("operator is singular at θ = {theta}")));
    }
    let step = 1e-4;
    let (rm, r0, rp) = (r(theta - step), r(theta), r(theta + step));
    let d1 = (rp - rm) / (2.0 * step);
    let d2 = (rp - 2.0 * r0 + rm) / (step * step);
    let cot = (theta / 2.0).cos() / s;
    Ok(p.kappa / 2.0 * d2 + cot * d1 - h / 2.0 / (s * s) * r0 + q_rate * r0)
}

/// Builder for the recursion `R(z, z⃗)` with exactly differentiated lower orders.
pub struct THatRecursion {
    params: SleCftParams,
    diff: Differentiator,
    built: HashMap<Vec<usize>, E>,
}

pub const MAX_EXTRA_POINTS: usize = 4;

impl THatRecursion {
    pub fn new(p: &SleCftParams) -> Self {
        THatRecursion { params: *p, diff: Differentiator::new(), built: HashMap::new() }
    }

    /// Expression for `R(x_{v0}; x_{v1}, …)` in the variables listed.
    pub fn build(&mut self, vars: &[usize]) -> E {
        if vars.is_empty() {
            return constant(1.0);
        }
        if let Some(e) = self.built.get(vars) {
            return e.clone();
        }
        let p = self.params;
        let z = var(vars[0]);
        let rest = &vars[1..];
        let n = rest.len() as f64;
        let one = constant(1.0);
        let lower = self.build(rest);
        let opz = add(&one, &z);
        let omz = sub(&one, &z);
        let ratio = div(&opz, &omz);
        let two_z2 = mul(&constant(2.0), &powi(&z, 2));
        let coeff = sum([
            mul(&constant(2.0 * n), &ratio),
            div(&mul(&constant(2.0 * p.lambda()), &z), &powi(&omz, 2)),
            constant(p.mu()),
        ]);
        let mut first = mul(&coeff, &lower);
        let mut second = constant(0.0);
        let mut third = constant(0.0);
        for (j, &vj) in rest.iter().enumerate() {
            let zj = var(vj);
            let dj = self.diff.d(&lower, vj);
            first = add(&first, &mul(&ratio, &mul(&zj, &dj)));
            let zmzj = sub(&z, &zj);
            let a = div(&mul(&zj, &add(&z, &zj)), &zmzj);
            let quad = sub(&add(&powi(&z, 2), &mul(&constant(2.0), &mul(&z, &zj))), &powi(&zj, 2));
            let b = div(&mul(&constant(2.0), &quad), &powi(&zmzj, 2));
            second = add(&second, &add(&mul(&a, &dj), &mul(&b, &lower)));
            let without: Vec<usize> = rest.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &v)| v).collect();
            let rj = self.build(&without);
            third = add(&third, &div(&rj, &powi(&zmzj, 4)));
        }
        let e = add(&div(&add(&first, &second), &two_z2), &mul(&constant(p.c / 2.0), &third));
        self.built.insert(vars.to_vec(), e.clone());
        e
    }
}

/// `R(z, z_1, …, z_n)` from the recursion, `n ≤ 4`; `points[0]` is `z`.
pub fn t_hat_npoint(points: &[Complex64], p: &SleCftParams) -> Result<Complex64> {
    if points.is_empty() || points.len() > MAX_EXTRA_POINTS + 1 {
        return Err(Error::Config(format!("between 1 and {} points supported", MAX_EXTRA_POINTS + 1)));
    }
    for (i, &z) in points.iter().enumerate() {
        check_point(z)?;
        if points[..i].contains(&z) {
            return Err(Error::Singularity(format!("coincident points {z}")));
        }
    }
    let mut rec = THatRecursion::new(p);
    let vars: Vec<usize> = (0..points.len()).collect();
    let e = rec.build(&vars);
    Ok(expr::eval(&e, points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn params(kappa: f64) -> SleCftParams {
        SleCftParams::from_kappa(kappa).unwrap()
    }

    fn random_points(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Complex64::from_polar(rng.random_range(0.2..1.5), rng.random_range(0.3..6.0))).collect()
    }

    #[test]
    fn one_point_values() {
        let p = params(8.0 / 3.0);
        let v = t_hat_1pt(Complex64::new(-1.0, 0.0), &p).unwrap();
        assert!((v.re + 10.0 / 96.0).abs() < 1e-14 && v.im == 0.0);
        let p6 = params(6.0);
        let z = Complex64::new(0.3, 0.7);
        assert!((t_hat_1pt(z, &p6).unwrap() - p6.h0half / (z * z)).norm() < 1e-15);
        assert!(t_hat_1pt(Complex64::new(1.0, 0.0), &p).is_err());
        assert!(t_hat_1pt(Complex64::new(0.0, 0.0), &p).is_err());
    }

    #[test]
    fn derivatives_match_differences() {
        let (l, h0) = (0.37, -0.12);
        let z = Complex64::new(0.4, -0.6);
        let h = 1e-5;
        let f = |z: Complex64| t_hat_1pt_derivs(z, l, h0);
        let (_, r1, r2) = f(z);
        assert!(((f(z + h).0 - f(z - h).0) / (2.0 * h) - r1).norm() < 1e-7);
        assert!(((f(z + h).1 - f(z - h).1) / (2.0 * h) - r2).norm() < 1e-6);
    }

    #[test]
    fn virasoro_identity_holds() {
        for kappa in [2.0, 8.0 / 3.0, 4.0, 6.0] {
            let p = params(kappa);
            for z in random_points(100, kappa.to_bits()) {
                assert!(bpz_residual_virasoro(z, &p).unwrap().norm() < 1e-9);
            }
        }
        assert!(bpz_residual_virasoro(Complex64::new(0.3, 0.2), &params(2.0)).unwrap().norm() < 1e-10);
        assert!(bpz_residual_virasoro(Complex64::new(-0.5, 0.0), &params(6.0)).unwrap().norm() < 1e-10);
        let p = params(3.0);
        let r = bpz_residual_virasoro_with(Complex64::new(0.3, 0.2), &p, p.h12 + 0.01, p.h0half).unwrap();
        assert!(r.norm() > 1e-3);
    }

    #[test]
    fn boundary_scalar_residuals() {
        let p = params(6.0);
        assert_eq!(bpz_residual_boundary_scalar(|_| 0.0, 0.3, &p, 1.0).unwrap(), 0.0);
        assert!(bpz_residual_boundary_scalar(|_| 1.0, 0.0, &p, 1.0).unwrap().abs() < 1e-9);
        assert!(bpz_residual_boundary_scalar(|_| 1.0, 0.5, &p, 1.0).unwrap().abs() > 0.1);
        assert!(bpz_residual_boundary_scalar(|_| 1.0, 0.5, &p, 0.0).is_err());
        for kappa in [2.0, 8.0 / 3.0, 4.0, 6.0] {
            let p = params(kappa);
            let m = -4.0 / kappa;
            for th in [0.5, 1.5, 3.0, 4.5] {
                let r = bpz_residual_boundary_scalar(|t| (t / 2.0).sin().powf(m), 1.0, &p, th).unwrap();
                assert!(r.abs() < 1e-4, "{kappa} {th} {r}");
            }
        }
    }

    /// The recursion for one extra point written out term by term.
    fn oracle_two_point(z: Complex64, z1: Complex64, p: &SleCftParams) -> Complex64 {
        let (r1, d1, _) = t_hat_1pt_derivs(z1, p.h12, p.h0half);
        let ratio = (1.0 + z) / (1.0 - z);
        let a = 2.0 * ratio + 2.0 * p.lambda() * z / ((1.0 - z) * (1.0 - z)) + p.mu();
        let first = a * r1 + ratio * z1 * d1;
        let second =
            z1 * (z + z1) / (z - z1) * d1 + 2.0 * (z * z + 2.0 * z * z1 - z1 * z1) / ((z - z1) * (z - z1)) * r1;
        (first + second) / (2.0 * z * z) + p.c / 2.0 / (z - z1).powi(4)
    }

    #[test]
    fn recursion_base_case() {
        for kappa in [2.0, 8.0 / 3.0, 4.0, 6.0] {
            let p = params(kappa);
            for z in random_points(100, 7 + kappa.to_bits()) {
                let a = t_hat_npoint(&[z], &p).unwrap();
                let b = t_hat_1pt(z, &p).unwrap();
                assert!((a - b).norm() < 1e-12 * b.norm().max(1.0));
            }
        }
    }

    #[test]
    fn recursion_matches_term_by_term_oracle() {
        let p = params(8.0 / 3.0);
        let (z, z1) = (Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0));
        let a = t_hat_npoint(&[z, z1], &p).unwrap();
        let b = oracle_two_point(z, z1, &p);
        assert!((a - b).norm() < 1e-12 * b.norm());
    }

    #[test]
    fn recursion_is_symmetric() {
        let p = params(8.0 / 3.0);
        let pts = random_points(4, 99);
        let r12 = t_hat_npoint(&pts[..2], &p).unwrap();
        let r21 = t_hat_npoint(&[pts[1], pts[0]], &p).unwrap();
        assert!((r12 - r21).norm() < 1e-12 * r12.norm().max(1.0), "{r12} {r21}");
        let r3 = t_hat_npoint(&pts[..3], &p).unwrap();
        for perm in [[1, 0, 2], [2, 1, 0], [0, 2, 1]] {
            let q: Vec<_> = perm.iter().map(|&i| pts[i]).collect();
            let v = t_hat_npoint(&q, &p).unwrap();
            assert!((v - r3).norm() < 1e-10 * r3.norm().max(1.0), "{v} {r3}");
        }
    }

    #[test]
    fn recursion_limits() {
        let p = params(2.0);
        let pts = random_points(5, 3);
        assert!(t_hat_npoint(&pts, &p).unwrap().is_finite());
        assert!(t_hat_npoint(&random_points(6, 3), &p).is_err());
        assert!(t_hat_npoint(&[pts[0], pts[0]], &p).is_err());
    }

    #[test]
    fn rotation_covariance() {
        let p = params(8.0 / 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let xi = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let z = Complex64::from_polar(rng.random_range(0.2..0.9), rng.random_range(0.0..std::f64::consts::TAU));
            // R_ξ(z): one-point function with the marked point at ξ
            let direct = p.h12 * xi / (z * (xi - z) * (xi - z)) + p.h0half / (z * z);
            let via = t_hat_1pt(z / xi, &p).unwrap() / (xi * xi);
            assert!((direct - via).norm() < 1e-12 * via.norm());
        }
    }
}
