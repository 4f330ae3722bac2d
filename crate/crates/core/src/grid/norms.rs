//! Cell-volume weighted discrete Lebesgue and Sobolev norms.

use super::ops::{
    gradient, hessian, jacobian_magnitudes, third_derivative_magnitudes, vector_hessian_magnitudes,
};
use super::{tensor, GridError, GridSpec, ScalarField, TensorField, VectorField};

/// Pointwise magnitudes: `|s|`, Euclidean length, or Frobenius norm.
pub trait Magnitudes {
    fn grid(&self) -> &GridSpec;
    fn magnitudes(&self) -> Vec<f64>;
}

impl Magnitudes for ScalarField {
    fn grid(&self) -> &GridSpec {
        self.spec()
    }
    fn magnitudes(&self) -> Vec<f64> {
        self.values().iter().map(|v| v.abs()).collect()
    }
}

impl Magnitudes for VectorField {
    fn grid(&self) -> &GridSpec {
        self.spec()
    }
    fn magnitudes(&self) -> Vec<f64> {
        self.values().iter().map(tensor::norm).collect()
    }
}

impl Magnitudes for TensorField {
    fn grid(&self) -> &GridSpec {
        self.spec()
    }
    fn magnitudes(&self) -> Vec<f64> {
        self.values().iter().map(tensor::frobenius).collect()
    }
}

pub(crate) fn lp_of(mags: &[f64], cell_volume: f64, p: f64) -> f64 {
    assert!(p >= 1.0, "Lebesgue exponent must be >= 1, got {p}");
    if p.is_infinite() {
        return mags.iter().copied().fold(0.0, f64::max);
    }
    // Scale by the maximum so large p does not overflow.
    let peak = mags.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let sum: f64 = mags.iter().map(|m| (m / peak).powf(p)).sum();
    peak * (sum * cell_volume).powf(1.0 / p)
}

/// Discrete `L^p` norm (`p = f64::INFINITY` gives the maximum magnitude).
///
/// Panics if `p < 1` or `p` is NaN.
pub fn lp_norm<F: Magnitudes>(field: &F, p: f64) -> f64 {
    lp_of(&field.magnitudes(), field.grid().cell_volume(), p)
}

/// Sum of `L^p` norms of the derivatives of `s` of orders `1..=m`, i.e. the
/// discrete `W^{m-1,p}` norm of `∇s`.
pub fn sobolev_norm(s: &ScalarField, m: usize, p: f64) -> Result<f64, GridError> {
    if !(1..=3).contains(&m) {
        return Err(GridError::UnsupportedOrder(m));
    }
    if !(p >= 1.0) {
        return Err(GridError::BadExponent(p));
    }
    let spec = s.spec();
    let needed = m + 2;
    if spec.dims().iter().any(|&n| n < needed) {
        return Err(GridError::GridTooSmallForOrder {
            order: m,
            needed,
            dims: spec.dims(),
        });
    }
    let vol = spec.cell_volume();
    let mut total = lp_norm(&gradient(s), p);
    if m >= 2 {
        total += lp_norm(&hessian(s), p);
    }
    if m >= 3 {
        total += lp_of(&third_derivative_magnitudes(s)?, vol, p);
    }
    Ok(total)
}

/// Discrete `W^{order,p}` norm of a vector field: `L^p` norms of the field and
/// its derivatives up to `order` (at most 2), summed.
pub fn vector_sobolev_norm(v: &VectorField, order: usize, p: f64) -> Result<f64, GridError> {
    if order > 2 {
        return Err(GridError::UnsupportedOrder(order));
    }
    if !(p >= 1.0) {
        return Err(GridError::BadExponent(p));
    }
    let vol = v.spec().cell_volume();
    let mut total = lp_norm(v, p);
    if order >= 1 {
        total += lp_of(&jacobian_magnitudes(v), vol, p);
    }
    if order >= 2 {
        total += lp_of(&vector_hessian_magnitudes(v), vol, p);
    }
    Ok(total)
}
