//! Structured box grids with cell-centred scalar, vector and tensor fields.
//!
//! Cells are indexed `(i, j, k)` with `i` running fastest. Every field stores
//! one value per cell centre; the centre of cell `(i, j, k)` sits at
//! `origin + (i + 1/2, j + 1/2, k + 1/2) * spacing`.

mod eigen;
mod norms;
pub(crate) mod ops;
pub mod tensor;

pub use eigen::{min_hessian_eigenvalue, symmetric_eigenvalues};
pub use norms::{lp_norm, sobolev_norm, vector_sobolev_norm, Magnitudes};
pub use ops::{
    curl, divergence, gradient, hessian, partial, second_partial, third_derivative_magnitudes,
};
pub use tensor::Mat3;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Smallest number of cells per axis; third-derivative stencils need four points.
pub const MIN_CELLS_PER_AXIS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid needs at least {min} cells per axis, got {dims:?}")]
    TooFewCells { dims: [usize; 3], min: usize },
    #[error("extent along axis {axis} must be positive and finite, got {value}")]
    BadExtent { axis: usize, value: f64 },
    #[error("origin must be finite, got {0:?}")]
    BadOrigin([f64; 3]),
    #[error("field has {got} values but the grid has {expected} cells")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at cell {cell}")]
    NonFinite { cell: usize },
    #[error("tensor field is not flagged symmetric")]
    NotSymmetric,
    #[error("tensor at cell {cell} is flagged symmetric but differs from its transpose")]
    AsymmetricEntry { cell: usize },
    #[error("derivative order {0} is not supported here")]
    UnsupportedOrder(usize),
    #[error("order {order} derivatives need at least {needed} cells per axis, got {dims:?}")]
    GridTooSmallForOrder {
        order: usize,
        needed: usize,
        dims: [usize; 3],
    },
    #[error("Lebesgue exponent must be >= 1 or infinity, got {0}")]
    BadExponent(f64),
}

/// Geometry of an axis-aligned box discretised into `dims` cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dims: [usize; 3],
    origin: [f64; 3],
    extents: [f64; 3],
}

impl GridSpec {
    pub fn new(dims: [usize; 3], origin: [f64; 3], extents: [f64; 3]) -> Result<Self, GridError> {
        if dims.iter().any(|&n| n < MIN_CELLS_PER_AXIS) {
            return Err(GridError::TooFewCells {
                dims,
                min: MIN_CELLS_PER_AXIS,
            });
        }
        for (axis, &value) in extents.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(GridError::BadExtent { axis, value });
            }
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(GridError::BadOrigin(origin));
        }
        Ok(Self {
            dims,
            origin,
            extents,
        })
    }

    /// `n^3` cells on `[0, 1]^3`.
    pub fn unit_cube(n: usize) -> Result<Self, GridError> {
        Self::new([n; 3], [0.0; 3], [1.0; 3])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn extents(&self) -> [f64; 3] {
        self.extents
    }

    pub fn spacing(&self) -> [f64; 3] {
        [
            self.extents[0] / self.dims[0] as f64,
            self.extents[1] / self.dims[1] as f64,
            self.extents[2] / self.dims[2] as f64,
        ]
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Distance in the flat value array between neighbours along `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.dims[0],
            _ => self.dims[0] * self.dims[1],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [i, rest % self.dims[1], rest / self.dims[1]]
    }

    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 3] {
        let c = self.coords(idx);
        let h = self.spacing();
        [
            self.origin[0] + (c[0] as f64 + 0.5) * h[0],
            self.origin[1] + (c[1] as f64 + 0.5) * h[1],
            self.origin[2] + (c[2] as f64 + 0.5) * h[2],
        ]
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h[0] * h[1] * h[2]
    }

    pub fn volume(&self) -> f64 {
        self.extents[0] * self.extents[1] * self.extents[2]
    }

    /// `max |y|` over the closed box, attained at a corner.
    pub fn max_point_norm(&self) -> f64 {
        (0..3)
            .map(|a| {
                let lo = self.origin[a].abs();
                let hi = (self.origin[a] + self.extents[a]).abs();
                lo.max(hi).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// True when the cell is at least `layers` cells away from every face.
    pub fn is_interior(&self, idx: usize, layers: usize) -> bool {
        let c = self.coords(idx);
        (0..3).all(|a| c[a] >= layers && c[a] + layers < self.dims[a])
    }
}

fn check_len(spec: &GridSpec, got: usize) -> Result<(), GridError> {
    if got != spec.len() {
        return Err(GridError::LengthMismatch {
            expected: spec.len(),
            got,
        });
    }
    Ok(())
}

/// One number per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self, GridError> {
        check_len(&spec, values.len())?;
        if let Some(cell) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { cell });
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.len()],
        }
    }

    /// Samples `f` at every cell centre. Panics if `f` returns a non-finite value.
    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values: Vec<f64> = (0..spec.len()).map(|idx| f(spec.center(idx))).collect();
        Self::new(spec, values).expect("sampled scalar field must be finite")
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        Self::from_raw(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    /// Copy with the (cell-volume weighted) mean removed.
    pub fn mean_free(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }
}

/// One 3-vector per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    spec: GridSpec,
    values: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn new(spec: GridSpec, values: Vec<[f64; 3]>) -> Result<Self, GridError> {
        check_len(&spec, values.len())?;
        if let Some(cell) = values
            .iter()
            .position(|v| v.iter().any(|c| !c.is_finite()))
        {
            return Err(GridError::NonFinite { cell });
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![[0.0; 3]; spec.len()],
        }
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let values = (0..spec.len()).map(|idx| f(spec.center(idx))).collect();
        Self::new(spec, values).expect("sampled vector field must be finite")
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<[f64; 3]>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    /// Builds a field from its three scalar components.
    pub fn from_components(x: &ScalarField, y: &ScalarField, z: &ScalarField) -> Self {
        let values = x
            .values()
            .iter()
            .zip(y.values())
            .zip(z.values())
            .map(|((&a, &b), &c)| [a, b, c])
            .collect();
        Self::from_raw(x.spec, values)
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        ScalarField::from_raw(self.spec, self.values.iter().map(|v| v[axis]).collect())
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    pub fn map(&self, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        Self::from_raw(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn axpby(&self, a: f64, other: &VectorField, b: f64) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        Self::from_raw(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| std::array::from_fn(|c| a * x[c] + b * y[c]))
                .collect(),
        )
    }

    /// Largest Euclidean length over cells.
    pub fn max_magnitude(&self) -> f64 {
        self.values
            .iter()
            .map(tensor::norm)
            .fold(0.0, f64::max)
    }
}

/// One 3x3 matrix per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    spec: GridSpec,
    values: Vec<Mat3>,
    symmetric: bool,
}

impl TensorField {
    /// Validates finiteness and, when `symmetric` is set, exact symmetry of every entry.
    pub fn new(spec: GridSpec, values: Vec<Mat3>, symmetric: bool) -> Result<Self, GridError> {
        check_len(&spec, values.len())?;
        for (cell, m) in values.iter().enumerate() {
            if m.iter().flatten().any(|c| !c.is_finite()) {
                return Err(GridError::NonFinite { cell });
            }
            if symmetric && !tensor::is_symmetric(m) {
                return Err(GridError::AsymmetricEntry { cell });
            }
        }
        Ok(Self {
            spec,
            values,
            symmetric,
        })
    }

    /// The same matrix in every cell.
    pub fn uniform(spec: GridSpec, m: Mat3) -> Result<Self, GridError> {
        Self::new(spec, vec![m; spec.len()], tensor::is_symmetric(&m))
    }

    pub fn from_fn(spec: GridSpec, symmetric: bool, f: impl Fn([f64; 3]) -> Mat3) -> Result<Self, GridError> {
        let values = (0..spec.len()).map(|idx| f(spec.center(idx))).collect();
        Self::new(spec, values, symmetric)
    }

    pub(crate) fn from_raw(spec: GridSpec, values: Vec<Mat3>, symmetric: bool) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self {
            spec,
            values,
            symmetric,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Mat3] {
        &self.values
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Per-cell product `T(x) v(x)`.
    pub fn apply(&self, v: &VectorField) -> VectorField {
        debug_assert_eq!(self.spec, *v.spec());
        VectorField::from_raw(
            self.spec,
            self.values
                .iter()
                .zip(v.values())
                .map(|(m, x)| tensor::mul_vec(m, x))
                .collect(),
        )
    }
}
