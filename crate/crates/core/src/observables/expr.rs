//! Rational expression trees with exact partial derivatives.

use std::collections::HashMap;
use std::rc::Rc;

use num_complex::Complex64;

#[derive(Debug)]
pub enum Expr {
    Const(Complex64),
    Var(usize),
    Add(E, E),
    Mul(E, E),
    Div(E, E),
    Powi(E, i32),
}

pub type E = Rc<Expr>;

fn as_const(e: &E) -> Option<Complex64> {
    match **e {
        Expr::Const(c) => Some(c),
        _ => None,
    }
}

pub fn constant(c: impl Into<Complex64>) -> E {
    Rc::new(Expr::Const(c.into()))
}

pub fn var(i: usize) -> E {
    Rc::new(Expr::Var(i))
}

pub fn add(a: &E, b: &E) -> E {
    match (as_const(a), as_const(b)) {
        (Some(x), Some(y)) => constant(x + y),
        (Some(x), _) if x == Complex64::new(0.0, 0.0) => b.clone(),
        (_, Some(y)) if y == Complex64::new(0.0, 0.0) => a.clone(),
        _ => Rc::new(Expr::Add(a.clone(), b.clone())),
    }
}

pub fn sub(a: &E, b: &E) -> E {
    add(a, &mul(&constant(-1.0), b))
}

pub fn mul(a: &E, b: &E) -> E {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    match (as_const(a), as_const(b)) {
        (Some(x), Some(y)) => constant(x * y),
        (Some(x), _) | (_, Some(x)) if x == zero => constant(zero),
        (Some(x), _) if x == one => b.clone(),
        (_, Some(y)) if y == one => a.clone(),
        _ => Rc::new(Expr::Mul(a.clone(), b.clone())),
    }
}

pub fn div(a: &E, b: &E) -> E {
    match (as_const(a), as_const(b)) {
        (Some(x), Some(y)) => constant(x / y),
        (Some(x), _) if x == Complex64::new(0.0, 0.0) => a.clone(),
        (_, Some(y)) if y == Complex64::new(1.0, 0.0) => a.clone(),
        _ => Rc::new(Expr::Div(a.clone(), b.clone())),
    }
}

pub fn powi(a: &E, k: i32) -> E {
    match (k, as_const(a)) {
        (0, _) => constant(1.0),
        (1, _) => a.clone(),
        (_, Some(x)) => constant(x.powi(k)),
        _ => Rc::new(Expr::Powi(a.clone(), k)),
    }
}

pub fn sum(terms: impl IntoIterator<Item = E>) -> E {
    terms.into_iter().fold(constant(0.0), |acc, t| add(&acc, &t))
}

/// Memoized differentiation over a shared expression DAG.
#[derive(Default)]
pub struct Differentiator {
    memo: HashMap<(usize, usize), E>,
    keep: Vec<E>,
}

impl Differentiator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn d(&mut self, e: &E, v: usize) -> E {
        let key = (Rc::as_ptr(e) as usize, v);
        if let Some(r) = self.memo.get(&key) {
            return r.clone();
        }
        let r = match &**e {
            Expr::Const(_) => constant(0.0),
            Expr::Var(i) => constant(if *i == v { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(&self.d(a, v), &self.d(b, v)),
            Expr::Mul(a, b) => {
                let (da, db) = (self.d(a, v), self.d(b, v));
                add(&mul(&da, b), &mul(a, &db))
            }
            Expr::Div(a, b) => {
                let (da, db) = (self.d(a, v), self.d(b, v));
                div(&sub(&mul(&da, b), &mul(a, &db)), &powi(b, 2))
            }
            Expr::Powi(a, k) => mul(&mul(&constant(*k as f64), &powi(a, k - 1)), &self.d(a, v)),
        };
        // keep `e` alive through the memo so pointer keys stay unique
        self.memo.insert(key, r.clone());
        self.keep.push(e.clone());
        r
    }
}

/// Evaluates a DAG with per-node caching.
pub fn eval(e: &E, vars: &[Complex64]) -> Complex64 {
    fn go(e: &E, vars: &[Complex64], cache: &mut HashMap<usize, Complex64>) -> Complex64 {
        let key = Rc::as_ptr(e) as usize;
        if let Some(v) = cache.get(&key) {
            return *v;
        }
        let v = match &**e {
            Expr::Const(c) => *c,
            Expr::Var(i) => vars[*i],
            Expr::Add(a, b) => go(a, vars, cache) + go(b, vars, cache),
            Expr::Mul(a, b) => go(a, vars, cache) * go(b, vars, cache),
            Expr::Div(a, b) => go(a, vars, cache) / go(b, vars, cache),
            Expr::Powi(a, k) => go(a, vars, cache).powi(*k),
        };
        cache.insert(key, v);
        v
    }
    go(e, vars, &mut HashMap::new())
}

/// Number of distinct nodes in the DAG.
pub fn node_count(e: &E) -> usize {
    fn go(e: &E, seen: &mut std::collections::HashSet<usize>) {
        if !seen.insert(Rc::as_ptr(e) as usize) {
            return;
        }
        match &**e {
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                go(a, seen);
                go(b, seen);
            }
            Expr::Powi(a, _) => go(a, seen),
            _ => {}
        }
    }
    let mut seen = std::collections::HashSet::new();
    go(e, &mut seen);
    seen.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn derivative_of_rational_function() {
        // f = x²y/(1 − x) + y³
        let (x, y) = (var(0), var(1));
        let f = add(&div(&mul(&powi(&x, 2), &y), &sub(&constant(1.0), &x)), &powi(&y, 3));
        let mut d = Differentiator::new();
        let fx = d.d(&f, 0);
        let fxy = d.d(&fx, 1);
        let pt = [c(0.3, 0.2), c(-0.4, 0.5)];
        let (xv, yv) = (pt[0], pt[1]);
        let want_fx = yv * (2.0 * xv - xv * xv) / ((1.0 - xv) * (1.0 - xv));
        assert!((eval(&fx, &pt) - want_fx).norm() < 1e-14);
        let want_fxy = (2.0 * xv - xv * xv) / ((1.0 - xv) * (1.0 - xv));
        assert!((eval(&fxy, &pt) - want_fxy).norm() < 1e-14);
        assert!((eval(&d.d(&f, 1), &pt) - (xv * xv / (1.0 - xv) + 3.0 * yv * yv)).norm() < 1e-14);
    }

    #[test]
    fn constant_folding() {
        let e = mul(&constant(0.0), &var(0));
        assert_eq!(node_count(&e), 1);
        let e = add(&constant(2.0), &constant(3.0));
        assert_eq!(eval(&e, &[]), c(5.0, 0.0));
        assert_eq!(node_count(&powi(&var(0), 1)), 1);
    }
}
