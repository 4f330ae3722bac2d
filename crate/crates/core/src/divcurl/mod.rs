//! Variable-coefficient div-curl solver.
//!
//! The system `∇∧(A u) = ∇∧f`, `∇·u = 0`, `u·n = 0` on a simply connected box
//! is reduced to a scalar Neumann problem through the ansatz `A u = f + ∇q`:
//! with `M = A⁻¹`, `q` solves `-∇·(M ∇q) = ∇·(M f)` with zero normal flux
//! `M(∇q + f)·n = 0`, and `u = M(f + ∇q)`. The potential `q` is fixed by
//! requiring zero mean.

mod assemble;
pub mod krylov;

pub use assemble::SparseOperator;
pub use krylov::Method;

use crate::grid::{
    self, curl, gradient, lp_norm, symmetric_eigenvalues, tensor, vector_sobolev_norm, GridError,
    ScalarField, TensorField, VectorField,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative determinant threshold for per-cell inversion.
pub const SINGULAR_DET_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivCurlError {
    #[error("coefficient and source live on different grids")]
    GridMismatch,
    #[error("coefficient is not uniformly elliptic: symmetric-part eigenvalue {eigenvalue} at cell {cell}")]
    NotElliptic { cell: usize, eigenvalue: f64 },
    #[error("coefficient is singular at cell {cell} (det = {det})")]
    Singular { cell: usize, det: f64 },
    #[error("Krylov solver stalled after {iterations} iterations at relative residual {residual}")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Coefficient `A` and curl source potential `f` of one div-curl solve.
#[derive(Debug, Clone)]
pub struct DivCurlData {
    coefficient: TensorField,
    source: VectorField,
    ellipticity: f64,
}

impl DivCurlData {
    /// Validates that the symmetric part of `A` is positive definite in every cell.
    pub fn new(coefficient: TensorField, source: VectorField) -> Result<Self, DivCurlError> {
        if coefficient.spec() != source.spec() {
            return Err(DivCurlError::GridMismatch);
        }
        let mut ellipticity = f64::INFINITY;
        for (cell, m) in coefficient.values().iter().enumerate() {
            let lam = symmetric_eigenvalues(&tensor::sym_part(m))[0];
            if !(lam > 0.0) {
                return Err(DivCurlError::NotElliptic {
                    cell,
                    eigenvalue: lam,
                });
            }
            ellipticity = ellipticity.min(lam);
        }
        Ok(Self {
            coefficient,
            source,
            ellipticity,
        })
    }

    pub fn coefficient(&self) -> &TensorField {
        &self.coefficient
    }

    pub fn source(&self) -> &VectorField {
        &self.source
    }

    /// Smallest eigenvalue of the symmetric part of `A` over all cells.
    pub fn ellipticity(&self) -> f64 {
        self.ellipticity
    }

    pub fn is_symmetric(&self) -> bool {
        self.coefficient.is_symmetric()
    }
}

/// Per-cell adjugate inverse; symmetric input gives symmetric output.
pub fn invert_3x3(t: &TensorField) -> Result<TensorField, DivCurlError> {
    let mut out = Vec::with_capacity(t.values().len());
    for (cell, m) in t.values().iter().enumerate() {
        match tensor::inverse(m, SINGULAR_DET_TOL) {
            Some(inv) => out.push(inv),
            None => {
                return Err(DivCurlError::Singular {
                    cell,
                    det: tensor::det(m),
                })
            }
        }
    }
    Ok(TensorField::new(*t.spec(), out, t.is_symmetric())?)
}

/// The scalar Neumann problem for `q`.
#[derive(Debug, Clone)]
pub struct DarcyProblem {
    operator: SparseOperator,
    rhs: ScalarField,
    inverse: TensorField,
    source: VectorField,
}

impl DarcyProblem {
    pub fn operator(&self) -> &SparseOperator {
        &self.operator
    }

    pub fn rhs(&self) -> &ScalarField {
        &self.rhs
    }

    /// `M = A⁻¹`.
    pub fn inverse(&self) -> &TensorField {
        &self.inverse
    }

    pub fn source(&self) -> &VectorField {
        &self.source
    }

    /// Volume integral of the right-hand side. Zero flux on every boundary face
    /// makes this vanish up to rounding.
    pub fn compatibility_defect(&self) -> f64 {
        self.rhs.values().iter().sum::<f64>() * self.rhs.spec().cell_volume()
    }

    /// Conjugate gradients when the assembled operator is symmetric, BiCGStab otherwise.
    pub fn preferred_method(&self) -> Method {
        if self.operator.is_symmetric() {
            Method::ConjugateGradient
        } else {
            Method::BiCgStab
        }
    }

    /// Discrete face-flux divergence of `M(∇q + f)` per cell, i.e. `b - L q`.
    pub fn flux_divergence(&self, q: &ScalarField) -> ScalarField {
        let mut lq = vec![0.0; q.values().len()];
        self.operator.apply(q.values(), &mut lq);
        ScalarField::from_raw(
            *q.spec(),
            self.rhs
                .values()
                .iter()
                .zip(lq)
                .map(|(b, l)| b - l)
                .collect(),
        )
    }
}

pub fn reduce_to_darcy(d: &DivCurlData) -> Result<DarcyProblem, DivCurlError> {
    let inverse = invert_3x3(&d.coefficient)?;
    let (operator, rhs) = assemble::assemble(&inverse, &d.source);
    Ok(DarcyProblem {
        operator,
        rhs: ScalarField::from_raw(*d.source.spec(), rhs),
        inverse,
        source: d.source.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative residual target.
    pub tol: f64,
    /// `None` means ten times the number of cells.
    pub maxiter: Option<usize>,
    /// Force a method instead of choosing from the operator symmetry.
    pub method: Option<Method>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            maxiter: None,
            method: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Ratios `‖u‖_{W^{1,p}} / ‖F‖_{L^p}` and `‖Au‖_{W^{1,p}} / ‖F‖_{L^p}` with `F = ∇∧f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateRatios {
    pub velocity: f64,
    pub flux: f64,
}

#[derive(Debug, Clone)]
pub struct DarcySolution {
    pub q: ScalarField,
    pub u: VectorField,
    pub iterations: usize,
    pub residual: f64,
    pub method: Method,
    /// `None` when the curl source vanishes.
    pub estimates: Option<EstimateRatios>,
}

impl DarcySolution {
    pub fn u_max(&self) -> f64 {
        self.u.max_magnitude()
    }
}

pub fn solve_darcy(p: &DarcyProblem, opts: &SolverOptions) -> Result<DarcySolution, DivCurlError> {
    let n = p.rhs.values().len();
    let maxiter = opts.maxiter.unwrap_or(10 * n);
    let method = opts.method.unwrap_or_else(|| p.preferred_method());
    let out = krylov::solve(&p.operator, p.rhs.values(), method, opts.tol, maxiter);
    if !out.converged {
        return Err(DivCurlError::NoConvergence {
            iterations: out.iterations,
            residual: out.residual,
            history: out.history,
        });
    }
    let q = ScalarField::from_raw(*p.rhs.spec(), out.x).mean_free();
    let u = recover_velocity(p, &q);
    Ok(DarcySolution {
        q,
        u,
        iterations: out.iterations,
        residual: out.residual,
        method,
        estimates: None,
    })
}

/// `u = M(f + ∇q)` per cell.
pub fn recover_velocity(p: &DarcyProblem, q: &ScalarField) -> VectorField {
    let grad = gradient(q);
    let values = p
        .inverse
        .values()
        .iter()
        .zip(p.source.values())
        .zip(grad.values())
        .map(|((m, f), g)| tensor::mul_vec(m, &[f[0] + g[0], f[1] + g[1], f[2] + g[2]]))
        .collect();
    VectorField::from_raw(*q.spec(), values)
}

/// Empirical counterparts of the velocity and flux stability estimates.
/// Returns `None` when `‖∇∧f‖_{L^p}` vanishes relative to `‖f‖_{L^p}/h`.
pub fn verify_estimate(u: &VectorField, d: &DivCurlData, p: f64) -> Result<Option<EstimateRatios>, DivCurlError> {
    let forcing = curl(&d.source);
    let f_norm = lp_norm(&forcing, p);
    let h_min = u.spec().spacing().into_iter().fold(f64::INFINITY, f64::min);
    let scale = lp_norm(&d.source, p) / h_min;
    if f_norm == 0.0 || f_norm <= 1e-10 * scale {
        return Ok(None);
    }
    let au = d.coefficient.apply(u);
    Ok(Some(EstimateRatios {
        velocity: vector_sobolev_norm(u, 1, p)? / f_norm,
        flux: vector_sobolev_norm(&au, 1, p)? / f_norm,
    }))
}

/// Reduce, solve, recover and evaluate the estimate ratios at exponent `p`.
pub fn solve_div_curl(d: &DivCurlData, opts: &SolverOptions, p: f64) -> Result<DarcySolution, DivCurlError> {
    let problem = reduce_to_darcy(d)?;
    let mut sol = solve_darcy(&problem, opts)?;
    sol.estimates = verify_estimate(&sol.u, d, p)?;
    Ok(sol)
}

/// Largest `|A u - f - ∇q|` over cells.
pub fn ansatz_defect(d: &DivCurlData, sol: &DarcySolution) -> f64 {
    let grad = grid::gradient(&sol.q);
    d.coefficient
        .values()
        .iter()
        .zip(sol.u.values())
        .zip(d.source.values().iter().zip(grad.values()))
        .map(|((a, u), (f, g))| {
            let au = tensor::mul_vec(a, u);
            tensor::norm(&[au[0] - f[0] - g[0], au[1] - f[1] - g[1], au[2] - f[2] - g[2]])
        })
        .fold(0.0, f64::max)
}
