//! Shared test fixtures: a manufactured div-curl problem and an independent
//! dense oracle for the discrete Neumann problem.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use sgeuler::grid::{gradient, partial, tensor, GridSpec, Mat3, ScalarField, TensorField, VectorField};
use std::f64::consts::PI;

pub fn unit(n: usize) -> GridSpec {
    GridSpec::unit_cube(n).unwrap()
}

/// Smooth, non-symmetric coefficient whose symmetric part is uniformly positive definite.
pub fn manufactured_coefficient(x: [f64; 3]) -> Mat3 {
    [
        [2.0 + 0.3 * (PI * x[0]).sin(), 0.2 * x[1], 0.1],
        [0.1 * x[2], 1.5 + 0.2 * x[1] * x[2], 0.15 * (PI * x[2]).cos()],
        [0.05, -0.1 * x[0], 1.2 + 0.25 * x[0] * x[0]],
    ]
}

pub fn manufactured_velocity(x: [f64; 3]) -> [f64; 3] {
    let g = 1.0 + 0.5 * x[2] * x[2];
    [
        PI * (PI * x[0]).sin() * (PI * x[1]).cos() * g,
        -PI * (PI * x[0]).cos() * (PI * x[1]).sin() * g,
        0.0,
    ]
}

pub fn manufactured_potential(x: [f64; 3]) -> f64 {
    (PI * x[0]).cos() * (PI * x[1]).cos() * (PI * x[2]).cos()
}

fn manufactured_potential_gradient(x: [f64; 3]) -> [f64; 3] {
    let (s, c): (Vec<f64>, Vec<f64>) = x.iter().map(|&v| ((PI * v).sin(), (PI * v).cos())).unzip();
    [
        -PI * s[0] * c[1] * c[2],
        -PI * c[0] * s[1] * c[2],
        -PI * c[0] * c[1] * s[2],
    ]
}

/// `(A, f)` with `f = A u* - ∇q*`, so `u*` is divergence free, tangential, and
/// `A u* = f + ∇q*`.
pub fn manufactured_problem(g: GridSpec) -> (TensorField, VectorField) {
    let a = TensorField::from_fn(g, false, manufactured_coefficient).unwrap();
    let f = VectorField::from_fn(g, |x| {
        let au = tensor::mul_vec(&manufactured_coefficient(x), &manufactured_velocity(x));
        let gq = manufactured_potential_gradient(x);
        [au[0] - gq[0], au[1] - gq[1], au[2] - gq[2]]
    });
    (a, f)
}

pub fn l2_error(a: &VectorField, b: &VectorField) -> f64 {
    let vol = a.spec().cell_volume();
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (0..3).map(|c| (x[c] - y[c]).powi(2)).sum::<f64>())
        .sum::<f64>()
        .sqrt()
        * vol.sqrt()
}

fn average(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|r| std::array::from_fn(|c| 0.5 * (a[r][c] + b[r][c])))
}

/// Net outward face flux of `M (∇q + f)` per cell divided by `h`, written directly
/// from the flux definition: normal derivative by a two-point difference, tangential
/// derivatives averaged from the cell-centred partials, `M` and `f` averaged.
fn flux_residual(m: &TensorField, f: &VectorField, q: &ScalarField) -> Vec<f64> {
    let g = *m.spec();
    let h = g.spacing();
    let dims = g.dims();
    let partials: Vec<ScalarField> = (0..3).map(|a| partial(q, a)).collect();
    let mut out = vec![0.0; g.len()];
    for axis in 0..3 {
        for left in 0..g.len() {
            if g.coords(left)[axis] + 1 >= dims[axis] {
                continue;
            }
            let right = left + g.stride(axis);
            let mut grad = [0.0; 3];
            for e in 0..3 {
                grad[e] = if e == axis {
                    (q.values()[right] - q.values()[left]) / h[axis]
                } else {
                    0.5 * (partials[e].values()[left] + partials[e].values()[right])
                };
                grad[e] += 0.5 * (f.values()[left][e] + f.values()[right][e]);
            }
            let mf = average(&m.values()[left], &m.values()[right]);
            let flux: f64 = (0..3).map(|e| mf[axis][e] * grad[e]).sum::<f64>() / h[axis];
            // `flux` leaves `left` through its high face and enters `right`.
            out[left] += flux;
            out[right] -= flux;
        }
    }
    out
}

/// Dense direct solve of the discrete Neumann problem for `q` with the mean-zero
/// constraint imposed by a Lagrange multiplier; returns `(q, u)`.
pub fn dense_oracle(m: &TensorField, f: &VectorField) -> (ScalarField, VectorField) {
    let g = *m.spec();
    let n = g.len();
    let zero_f = VectorField::zeros(g);
    let zero_q = ScalarField::zeros(g);
    // Operator: outward flux of M∇q. Equation: outward flux of M(∇q + f) = 0.
    let b = flux_residual(m, f, &zero_q);
    let mut k = DMatrix::<f64>::zeros(n + 1, n + 1);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = flux_residual(m, &zero_f, &ScalarField::new(g, e.clone()).unwrap());
        e[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            k[(i, j)] = v;
        }
        k[(n, j)] = 1.0;
        k[(j, n)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(n + 1);
    for i in 0..n {
        rhs[i] = -b[i];
    }
    let sol = k.lu().solve(&rhs).expect("bordered system is nonsingular");
    let q = ScalarField::new(g, sol.iter().take(n).copied().collect()).unwrap();
    let grad = gradient(&q);
    let u = VectorField::new(
        g,
        m.values()
            .iter()
            .zip(f.values())
            .zip(grad.values())
            .map(|((mm, fv), gq)| tensor::mul_vec(mm, &[fv[0] + gq[0], fv[1] + gq[1], fv[2] + gq[2]]))
            .collect(),
    )
    .unwrap();
    (q, u)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_vec_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| tensor::norm(&[x[0] - y[0], x[1] - y[1], x[2] - y[2]]))
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
