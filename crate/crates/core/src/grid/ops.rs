//! Finite-difference differential operators on cell-centred fields.
//!
//! First and second derivatives are second order everywhere: centred in the
//! interior, one-sided at the two boundary layers. Third derivatives (only
//! used by the Sobolev diagnostics) use centred stencils shifted inward near
//! faces.

use super::{tensor, GridError, GridSpec, ScalarField, TensorField, VectorField};

/// A 1-D stencil: offsets (in cells, relative to the evaluation cell) and weights.
pub(crate) type Stencil<const N: usize> = [(isize, f64); N];

/// Second-order first derivative along an axis with `n` cells at position `pos`.
pub(crate) fn first_derivative_stencil(pos: usize, n: usize, h: f64) -> Stencil<3> {
    let w = 0.5 / h;
    if pos == 0 {
        [(0, -3.0 * w), (1, 4.0 * w), (2, -w)]
    } else if pos == n - 1 {
        [(0, 3.0 * w), (-1, -4.0 * w), (-2, w)]
    } else {
        [(-1, -w), (0, 0.0), (1, w)]
    }
}

/// Second-order second derivative; the boundary form is exact on cubics.
pub(crate) fn second_derivative_stencil(pos: usize, n: usize, h: f64) -> Stencil<4> {
    let w = 1.0 / (h * h);
    if pos == 0 {
        [(0, 2.0 * w), (1, -5.0 * w), (2, 4.0 * w), (3, -w)]
    } else if pos == n - 1 {
        [(0, 2.0 * w), (-1, -5.0 * w), (-2, 4.0 * w), (-3, -w)]
    } else {
        [(-1, w), (0, -2.0 * w), (1, w), (0, 0.0)]
    }
}

/// Centred stencil of derivative order 1..=3 whose centre is clamped inward.
fn shifted_centred_stencil(order: usize, pos: usize, n: usize, h: f64) -> Vec<(isize, f64)> {
    let reach = if order == 3 { 2 } else { 1 };
    let c = pos.clamp(reach, n - 1 - reach) as isize - pos as isize;
    match order {
        1 => vec![(c - 1, -0.5 / h), (c + 1, 0.5 / h)],
        2 => {
            let w = 1.0 / (h * h);
            vec![(c - 1, w), (c, -2.0 * w), (c + 1, w)]
        }
        3 => {
            let w = 0.5 / (h * h * h);
            vec![(c - 2, -w), (c - 1, 2.0 * w), (c + 1, -2.0 * w), (c + 2, w)]
        }
        _ => vec![(0, 1.0)],
    }
}

fn apply_along<I>(values: &[f64], spec: &GridSpec, axis: usize, stencil: impl Fn(usize, usize, f64) -> I) -> Vec<f64>
where
    I: IntoIterator<Item = (isize, f64)>,
{
    let n = spec.dims()[axis];
    let h = spec.spacing()[axis];
    let stride = spec.stride(axis) as isize;
    (0..spec.len())
        .map(|idx| {
            let pos = spec.coords(idx)[axis];
            stencil(pos, n, h)
                .into_iter()
                .map(|(off, w)| w * values[(idx as isize + off * stride) as usize])
                .sum()
        })
        .collect()
}

fn d1(values: &[f64], spec: &GridSpec, axis: usize) -> Vec<f64> {
    apply_along(values, spec, axis, first_derivative_stencil)
}

fn d2(values: &[f64], spec: &GridSpec, axis: usize) -> Vec<f64> {
    apply_along(values, spec, axis, second_derivative_stencil)
}

/// `∂s/∂x_axis`.
pub fn partial(s: &ScalarField, axis: usize) -> ScalarField {
    ScalarField::from_raw(*s.spec(), d1(s.values(), s.spec(), axis))
}

/// `∂²s/∂x_axis²`.
pub fn second_partial(s: &ScalarField, axis: usize) -> ScalarField {
    ScalarField::from_raw(*s.spec(), d2(s.values(), s.spec(), axis))
}

pub fn gradient(s: &ScalarField) -> VectorField {
    let spec = s.spec();
    let [gx, gy, gz] = [0, 1, 2].map(|a| d1(s.values(), spec, a));
    VectorField::from_raw(
        *spec,
        (0..spec.len()).map(|i| [gx[i], gy[i], gz[i]]).collect(),
    )
}

/// Symmetric Hessian; each mixed partial is computed once and mirrored.
pub fn hessian(s: &ScalarField) -> TensorField {
    let spec = s.spec();
    let v = s.values();
    let dxx = d2(v, spec, 0);
    let dyy = d2(v, spec, 1);
    let dzz = d2(v, spec, 2);
    let dx = d1(v, spec, 0);
    let dy = d1(v, spec, 1);
    let dxy = d1(&dy, spec, 0);
    let dxz = d1(&dx, spec, 2);
    let dyz = d1(&dy, spec, 2);
    let values = (0..spec.len())
        .map(|i| {
            [
                [dxx[i], dxy[i], dxz[i]],
                [dxy[i], dyy[i], dyz[i]],
                [dxz[i], dyz[i], dzz[i]],
            ]
        })
        .collect();
    TensorField::from_raw(*spec, values, true)
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let spec = v.spec();
    let mut out = vec![0.0; spec.len()];
    for axis in 0..3 {
        let comp: Vec<f64> = v.values().iter().map(|x| x[axis]).collect();
        for (o, d) in out.iter_mut().zip(d1(&comp, spec, axis)) {
            *o += d;
        }
    }
    ScalarField::from_raw(*spec, out)
}

pub fn curl(v: &VectorField) -> VectorField {
    let spec = v.spec();
    let comp = |a: usize| -> Vec<f64> { v.values().iter().map(|x| x[a]).collect() };
    let (vx, vy, vz) = (comp(0), comp(1), comp(2));
    let dz_dy = d1(&vz, spec, 1);
    let dy_dz = d1(&vy, spec, 2);
    let dx_dz = d1(&vx, spec, 2);
    let dz_dx = d1(&vz, spec, 0);
    let dy_dx = d1(&vy, spec, 0);
    let dx_dy = d1(&vx, spec, 1);
    let values = (0..spec.len())
        .map(|i| [dz_dy[i] - dy_dz[i], dx_dz[i] - dz_dx[i], dy_dx[i] - dx_dy[i]])
        .collect();
    VectorField::from_raw(*spec, values)
}

/// Pointwise Frobenius norm of the third-derivative tensor `D³s`.
pub fn third_derivative_magnitudes(s: &ScalarField) -> Result<Vec<f64>, GridError> {
    let spec = s.spec();
    let needed = 5;
    if spec.dims().iter().any(|&n| n < needed) {
        return Err(GridError::GridTooSmallForOrder {
            order: 3,
            needed,
            dims: spec.dims(),
        });
    }
    // Multi-indices (a, b, c) with a + b + c = 3 and their multiplicity 3!/(a!b!c!).
    const MULTI: [([usize; 3], f64); 10] = [
        ([3, 0, 0], 1.0),
        ([0, 3, 0], 1.0),
        ([0, 0, 3], 1.0),
        ([2, 1, 0], 3.0),
        ([2, 0, 1], 3.0),
        ([1, 2, 0], 3.0),
        ([0, 2, 1], 3.0),
        ([1, 0, 2], 3.0),
        ([0, 1, 2], 3.0),
        ([1, 1, 1], 6.0),
    ];
    let mut acc = vec![0.0; spec.len()];
    for (orders, mult) in MULTI {
        let mut d = s.values().to_vec();
        for (axis, &order) in orders.iter().enumerate() {
            if order > 0 {
                d = apply_along(&d, spec, axis, |pos, n, h| {
                    shifted_centred_stencil(order, pos, n, h)
                });
            }
        }
        for (a, x) in acc.iter_mut().zip(d) {
            *a += mult * x * x;
        }
    }
    Ok(acc.into_iter().map(f64::sqrt).collect())
}

/// Pointwise Frobenius norm of the Jacobian of a vector field.
pub(crate) fn jacobian_magnitudes(v: &VectorField) -> Vec<f64> {
    let spec = v.spec();
    let mut acc = vec![0.0; spec.len()];
    for c in 0..3 {
        let g = gradient(&v.component(c));
        for (a, x) in acc.iter_mut().zip(g.values()) {
            *a += tensor::dot(x, x);
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}

/// Pointwise Frobenius norm of the second-derivative tensor of a vector field.
pub(crate) fn vector_hessian_magnitudes(v: &VectorField) -> Vec<f64> {
    let spec = v.spec();
    let mut acc = vec![0.0; spec.len()];
    for c in 0..3 {
        let h = hessian(&v.component(c));
        for (a, m) in acc.iter_mut().zip(h.values()) {
            *a += tensor::frobenius(m).powi(2);
        }
    }
    acc.into_iter().map(f64::sqrt).collect()
}
