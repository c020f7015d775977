//! Benchmark objectives for real-valued micro-level search.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};

/// An objective over a box domain `[lo, hi]^n`.
#[derive(Debug, Clone, Copy)]
pub struct TestFunction {
    pub name: &'static str,
    pub domain: (f64, f64),
    pub f: fn(&[f64]) -> f64,
    /// Global minimum for dimension `n`.
    pub f_min: fn(usize) -> f64,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

fn zero(_: usize) -> f64 {
    0.0
}

pub fn weighted_sphere(x: &[f64]) -> f64 {
    x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum()
}

pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64 + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
}

pub fn ackley(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (a, b, c) = (20.0, 0.2, 2.0 * PI);
    let sq = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let cs = x.iter().map(|v| (c * v).cos()).sum::<f64>() / n;
    -a * (-b * sq).exp() - cs.exp() + a + E
}

pub fn griewangk(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
    let prod: f64 = x.iter().enumerate().map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos()).product();
    sum - prod + 1.0
}

pub fn schwefel(x: &[f64]) -> f64 {
    x.iter().map(|v| -v * v.abs().sqrt().sin()).sum()
}

pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn abs_sum_product(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum::<f64>() + x.iter().map(|v| v.abs()).product::<f64>()
}

pub fn cumulative_sphere(x: &[f64]) -> f64 {
    let mut prefix = 0.0;
    x.iter()
        .map(|v| {
            prefix += v * v;
            prefix
        })
        .sum()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
}

pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2).map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2)).sum()
}

/// `f1` to `f10` in order.
pub fn test_functions() -> Vec<TestFunction> {
    let t = |name, domain, f, f_min| TestFunction { name, domain, f, f_min };
    vec![
        t("f1", (-5.0, 5.0), weighted_sphere as fn(&[f64]) -> f64, zero as fn(usize) -> f64),
        t("f2", (-5.0, 5.0), rastrigin, zero),
        t("f3", (-32.0, 32.0), ackley, zero),
        t("f4", (-500.0, 500.0), griewangk, zero),
        t("f5", (-500.0, 500.0), schwefel, |n| -418.9829 * n as f64),
        t("f6", (-100.0, 100.0), sphere, zero),
        t("f7", (-10.0, 10.0), abs_sum_product, zero),
        t("f8", (-100.0, 100.0), cumulative_sphere, zero),
        t("f9", (-100.0, 100.0), max_abs, zero),
        t("f10", (-30.0, 30.0), rosenbrock, zero),
    ]
}

/// Looks up `f1` .. `f10`; `griewangk` is an alias of `f4`.
pub fn test_function(name: &str) -> Result<TestFunction> {
    let key = if name == "griewangk" { "f4" } else { name };
    test_functions()
        .into_iter()
        .find(|f| f.name == key)
        .ok_or_else(|| Error::UnknownProblem(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minima() {
        let n = 5;
        let z = vec![0.0; n];
        for f in test_functions() {
            match f.name {
                "f5" => {
                    let x = vec![420.968_746; n];
                    assert!((f.eval(&x) - (f.f_min)(n)).abs() < 1e-3);
                }
                "f10" => assert_eq!(f.eval(&vec![1.0; n]), 0.0),
                _ => assert!(f.eval(&z).abs() < 1e-12, "{}", f.name),
            }
        }
    }

    #[test]
    fn griewangk_alias() {
        assert_eq!(test_function("griewangk").unwrap().name, "f4");
        assert!(test_function("f11").is_err());
        assert!(griewangk(&[0.0; 5]).abs() < 1e-12);
        assert!(griewangk(&[PI; 1]) > 1.0);
    }

    #[test]
    fn hand_values() {
        assert_eq!(weighted_sphere(&[1.0, 1.0]), 3.0);
        assert_eq!(cumulative_sphere(&[1.0, 2.0]), 6.0);
        assert_eq!(abs_sum_product(&[-2.0, 3.0]), 11.0);
        assert_eq!(max_abs(&[-7.0, 3.0]), 7.0);
        assert!((rastrigin(&[0.5]) - 20.25).abs() < 1e-12);
    }
}
