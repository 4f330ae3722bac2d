//! Variable Coriolis parameter `f(x) > 0`.
//!
//! With `K_f⁻¹ = diag(f, f, 1)` the velocity solve uses the coefficient
//! `A = D²P - K_f⁻¹(∇P ⊗ ∇f)/f²`, which is non-symmetric wherever `∇f ≠ 0`,
//! and the curl source `K_f⁻¹ J(∇P - x)`. The potential update is the same as
//! in the constant-rotation scheme.

use crate::divcurl::{self, DarcySolution, DivCurlData};
use crate::grid::{gradient, symmetric_eigenvalues, tensor, GridError, GridSpec, ScalarField, TensorField, VectorField};
use crate::stepper::{
    advance, forcing, run_collecting, run_with_solver, GeopotentialState, RunOutcome, SchemeConfig, StepOptions,
    StepperError, Trajectory,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoriolisError {
    #[error("Coriolis parameter must be positive; found {value} at cell {cell}")]
    NonPositive { cell: usize, value: f64 },
    #[error(
        "rotation-gradient term {perturbation} is not dominated by half the Hessian eigenvalue {half_lambda} at cell {cell}"
    )]
    PerturbationTooLarge {
        cell: usize,
        perturbation: f64,
        half_lambda: f64,
    },
    #[error("Coriolis field lives on a different grid than the state")]
    GridMismatch,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Stepper(#[from] StepperError),
}

impl From<divcurl::DivCurlError> for CoriolisError {
    fn from(e: divcurl::DivCurlError) -> Self {
        CoriolisError::Stepper(e.into())
    }
}

/// Grid samples of `f` with their gradient and minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct CoriolisField {
    f: ScalarField,
    grad: VectorField,
    f_min: f64,
}

impl CoriolisField {
    pub fn from_field(f: ScalarField) -> Result<Self, CoriolisError> {
        let (cell, f_min) = f
            .values()
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if !(f_min > 0.0) {
            return Err(CoriolisError::NonPositive { cell, value: f_min });
        }
        let grad = gradient(&f);
        Ok(Self { f, grad, f_min })
    }

    pub fn constant(spec: GridSpec, f0: f64) -> Result<Self, CoriolisError> {
        Self::from_field(ScalarField::new(spec, vec![f0; spec.len()])?)
    }

    /// `f(x) = 1 + δ x₃`.
    pub fn linear_x3(spec: GridSpec, delta: f64) -> Result<Self, CoriolisError> {
        Self::from_field(ScalarField::new(
            spec,
            (0..spec.len()).map(|i| 1.0 + delta * spec.center(i)[2]).collect(),
        )?)
    }

    pub fn values(&self) -> &ScalarField {
        &self.f
    }

    pub fn gradient(&self) -> &VectorField {
        &self.grad
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    fn check_grid(&self, s: &GeopotentialState) -> Result<(), CoriolisError> {
        if self.f.spec() == s.spec() {
            Ok(())
        } else {
            Err(CoriolisError::GridMismatch)
        }
    }
}

/// `diag(f, f, 1)` per cell.
pub fn kf_inverse(c: &CoriolisField) -> TensorField {
    TensorField::new(
        *c.f.spec(),
        c.f.values().iter().map(|&f| tensor::diag([f, f, 1.0])).collect(),
        true,
    )
    .expect("positive finite Coriolis samples give a finite tensor field")
}

/// `D²P - K_f⁻¹(∇P ⊗ ∇f)/f²`, provided the rank-one term has spectral norm below
/// half the smallest Hessian eigenvalue in every cell. Flagged symmetric only
/// when the rank-one term vanishes everywhere.
pub fn assemble_coriolis_coefficient(s: &GeopotentialState, c: &CoriolisField) -> Result<TensorField, CoriolisError> {
    c.check_grid(s)?;
    let mut symmetric = true;
    let mut values = Vec::with_capacity(s.spec().len());
    for (cell, ((h, g), (&f, gf))) in s
        .hessian()
        .values()
        .iter()
        .zip(s.gradient().values())
        .zip(c.f.values().iter().zip(c.grad.values()))
        .enumerate()
    {
        let kg = [f * g[0], f * g[1], g[2]];
        let perturbation = tensor::norm(&kg) * tensor::norm(gf) / (f * f);
        let half_lambda = 0.5 * symmetric_eigenvalues(h)[0];
        if !(perturbation < half_lambda) {
            return Err(CoriolisError::PerturbationTooLarge {
                cell,
                perturbation,
                half_lambda,
            });
        }
        if perturbation == 0.0 {
            values.push(*h);
        } else {
            symmetric = false;
            values.push(tensor::add(h, &tensor::scale(&tensor::outer(&kg, gf), -1.0 / (f * f))));
        }
    }
    Ok(TensorField::new(*s.spec(), values, symmetric)?)
}

/// `K_f⁻¹ J(∇P - x)` per cell.
pub fn coriolis_forcing(s: &GeopotentialState, c: &CoriolisField) -> VectorField {
    let base = forcing(s);
    let values = base
        .values()
        .iter()
        .zip(c.f.values())
        .map(|(v, &f)| [f * v[0], f * v[1], v[2]])
        .collect();
    VectorField::new(*s.spec(), values).expect("finite parameter and state give a finite forcing")
}

pub fn solve_coriolis_velocity(
    s: &GeopotentialState,
    c: &CoriolisField,
    opts: &StepOptions,
) -> Result<DarcySolution, CoriolisError> {
    if !(s.lambda_min() > 0.0) {
        return Err(StepperError::LostConvexity {
            cell: s.lambda_argmin(),
            lambda_min: s.lambda_min(),
        }
        .into());
    }
    let a = assemble_coriolis_coefficient(s, c)?;
    let data = DivCurlData::new(a, coriolis_forcing(s, c))?;
    Ok(divcurl::solve_div_curl(&data, &opts.solver, opts.p)?)
}

/// One variable-rotation step; the input state is untouched on error.
pub fn step_coriolis(
    s: &GeopotentialState,
    c: &CoriolisField,
    epsilon: f64,
    opts: &StepOptions,
) -> Result<(GeopotentialState, DarcySolution), CoriolisError> {
    let sol = solve_coriolis_velocity(s, c, opts)?;
    Ok((advance(s, &sol, epsilon)?, sol))
}

fn solver_for<'a>(
    c: &'a CoriolisField,
    opts: StepOptions,
) -> impl Fn(&GeopotentialState) -> Result<DarcySolution, StepperError> + 'a {
    move |s| {
        solve_coriolis_velocity(s, c, &opts).map_err(|e| match e {
            CoriolisError::Stepper(e) => e,
            other => StepperError::BadParameter(other.to_string()),
        })
    }
}

pub fn run_coriolis_with_observer(
    s0: GeopotentialState,
    c: &CoriolisField,
    cfg: &SchemeConfig,
    observer: impl FnMut(&GeopotentialState, Option<&DarcySolution>),
) -> Result<RunOutcome, CoriolisError> {
    c.check_grid(&s0)?;
    Ok(run_with_solver(s0, cfg, solver_for(c, cfg.options), observer)?)
}

pub fn run_coriolis(s0: GeopotentialState, c: &CoriolisField, cfg: &SchemeConfig) -> Result<Trajectory, CoriolisError> {
    c.check_grid(&s0)?;
    Ok(run_collecting(s0, cfg, solver_for(c, cfg.options))?)
}
