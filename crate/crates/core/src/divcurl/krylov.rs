//! Jacobi-preconditioned Krylov solvers for singular, consistent systems whose
//! null space is the constant vector. Right-hand sides, residuals and
//! preconditioned directions are projected onto mean-zero vectors.

use super::assemble::SparseOperator;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cg")]
    ConjugateGradient,
    #[serde(rename = "bicgstab")]
    BiCgStab,
}

#[derive(Debug, Clone)]
pub struct KrylovOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final true relative residual `|b - Ax| / |b|`.
    pub residual: f64,
    pub history: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn project(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

struct Jacobi(Vec<f64>);

impl Jacobi {
    fn new(op: &SparseOperator) -> Self {
        Jacobi(
            op.diagonal()
                .into_iter()
                .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        )
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.0) {
            *z = r * d;
        }
        project(z);
    }
}

fn true_residual(op: &SparseOperator, b: &[f64], x: &[f64], r: &mut [f64]) -> f64 {
    op.apply(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    project(r);
    norm(r)
}

/// Solves `A x = b` to relative residual `tol` within `maxiter` iterations.
pub fn solve(op: &SparseOperator, b: &[f64], method: Method, tol: f64, maxiter: usize) -> KrylovOutcome {
    let n = op.dim();
    let mut rhs = b.to_vec();
    project(&mut rhs);
    let b_norm = norm(&rhs);
    if b_norm == 0.0 {
        return KrylovOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            history: vec![0.0],
            converged: true,
        };
    }
    let pre = Jacobi::new(op);
    let mut x = vec![0.0; n];
    let mut history = vec![1.0];
    let mut iterations = 0;
    let mut r = vec![0.0; n];
    // Restart from the true residual whenever the recurrence claims convergence
    // but the true residual disagrees.
    while iterations < maxiter {
        let budget = maxiter - iterations;
        let used = match method {
            Method::ConjugateGradient => cg_cycle(op, &pre, &rhs, &mut x, b_norm, tol, budget, &mut history),
            Method::BiCgStab => bicgstab_cycle(op, &pre, &rhs, &mut x, b_norm, tol, budget, &mut history),
        };
        iterations += used;
        project(&mut x);
        let res = true_residual(op, &rhs, &x, &mut r) / b_norm;
        if res <= tol {
            return KrylovOutcome {
                x,
                iterations,
                residual: res,
                history,
                converged: true,
            };
        }
        if used == 0 {
            break;
        }
    }
    let residual = true_residual(op, &rhs, &x, &mut r) / b_norm;
    KrylovOutcome {
        x,
        iterations,
        residual,
        history,
        converged: residual <= tol,
    }
}

#[allow(clippy::too_many_arguments)]
fn cg_cycle(
    op: &SparseOperator,
    pre: &Jacobi,
    b: &[f64],
    x: &mut [f64],
    b_norm: f64,
    tol: f64,
    budget: usize,
    history: &mut Vec<f64>,
) -> usize {
    let n = b.len();
    let mut r = vec![0.0; n];
    true_residual(op, b, x, &mut r);
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 0..budget {
        if norm(&r) <= tol * b_norm {
            return it;
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return it.max(1);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        project(&mut r);
        history.push(norm(&r) / b_norm);
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    budget
}

#[allow(clippy::too_many_arguments)]
fn bicgstab_cycle(
    op: &SparseOperator,
    pre: &Jacobi,
    b: &[f64],
    x: &mut [f64],
    b_norm: f64,
    tol: f64,
    budget: usize,
    history: &mut Vec<f64>,
) -> usize {
    let n = b.len();
    let mut r = vec![0.0; n];
    true_residual(op, b, x, &mut r);
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    for it in 0..budget {
        if norm(&r) <= tol * b_norm {
            return it;
        }
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return it.max(1);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        pre.apply(&p, &mut p_hat);
        op.apply(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            return it.max(1);
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= tol * b_norm {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            history.push(norm(&s) / b_norm);
            return it + 1;
        }
        pre.apply(&s, &mut s_hat);
        op.apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 || !tt.is_finite() {
            return it.max(1);
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        project(&mut r);
        history.push(norm(&r) / b_norm);
        if omega == 0.0 {
            return it + 1;
        }
    }
    budget
}
