//! Forward Euler transport of the generalised geopotential.
//!
//! Each step solves the div-curl system with `A = D²P_j` and `f = J(∇P_j - x)`
//! and then updates the potential itself, `P_{j+1} = P_j - ε q_j`, so the
//! transported field `∇P` is a discrete gradient at every step.

mod constants;
mod presets;

pub use constants::{compute_constants, growth_bound_check, holder_surrogate, tau_star, BoundCheck, SchemeConstants};
pub use presets::{bump_eigenvalue_drop, Preset};

use crate::divcurl::{self, DarcySolution, DivCurlData, DivCurlError, SolverOptions};
use crate::grid::{gradient, hessian, min_hessian_eigenvalue, tensor, GridError, GridSpec, ScalarField, TensorField, VectorField};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepperError {
    #[error("initial potential is not uniformly convex: Hessian eigenvalue {eigenvalue} at cell {cell}")]
    NotConvex { cell: usize, eigenvalue: f64 },
    #[error("step refused: smallest Hessian eigenvalue {lambda_min} at cell {cell} is not positive")]
    LostConvexity { cell: usize, lambda_min: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error(transparent)]
    Solver(#[from] DivCurlError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Mean-zero potential with its gradient, Hessian and convexity modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct GeopotentialState {
    potential: ScalarField,
    grad: VectorField,
    hess: TensorField,
    lambda_min: f64,
    lambda_argmin: usize,
    lambda0: f64,
    time: f64,
    step: usize,
}

impl GeopotentialState {
    fn build(p: ScalarField, lambda0: Option<f64>, time: f64, step: usize) -> Result<Self, StepperError> {
        let potential = p.mean_free();
        let grad = gradient(&potential);
        let hess = hessian(&potential);
        let (lambda_min, lambda_argmin) = min_hessian_eigenvalue(&hess)?;
        Ok(Self {
            potential,
            grad,
            hess,
            lambda_min,
            lambda_argmin,
            lambda0: lambda0.unwrap_or(lambda_min),
            time,
            step,
        })
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    pub fn gradient(&self) -> &VectorField {
        &self.grad
    }

    pub fn hessian(&self) -> &TensorField {
        &self.hess
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    /// Cell index where `lambda_min` is attained.
    pub fn lambda_argmin(&self) -> usize {
        self.lambda_argmin
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn spec(&self) -> &GridSpec {
        self.potential.spec()
    }
}

/// Builds the initial state from sampled values; `λ₀` is the measured modulus.
pub fn init_state(p0: ScalarField) -> Result<GeopotentialState, StepperError> {
    let s = GeopotentialState::build(p0, None, 0.0, 0)?;
    if !(s.lambda_min > 0.0) {
        return Err(StepperError::NotConvex {
            cell: s.lambda_argmin,
            eigenvalue: s.lambda_min,
        });
    }
    Ok(s)
}

pub fn init_preset(preset: &Preset, spec: &GridSpec) -> Result<GeopotentialState, StepperError> {
    init_state(preset.potential(spec)?)
}

/// Per-solve settings shared by every step of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOptions {
    pub solver: SolverOptions,
    /// Exponent for the estimate ratios.
    pub p: f64,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            p: 4.0,
        }
    }
}

impl StepOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            solver: SolverOptions::with_tol(tol),
            ..Self::default()
        }
    }
}

/// `J(∇P - x)` per cell.
pub fn forcing(s: &GeopotentialState) -> VectorField {
    let spec = *s.spec();
    VectorField::new(
        spec,
        s.grad
            .values()
            .iter()
            .enumerate()
            .map(|(idx, g)| {
                let x = spec.center(idx);
                tensor::rotate(&[g[0] - x[0], g[1] - x[1], g[2] - x[2]])
            })
            .collect(),
    )
    .expect("forcing is finite for a finite state")
}

fn ensure_convex(s: &GeopotentialState) -> Result<(), StepperError> {
    if s.lambda_min > 0.0 {
        Ok(())
    } else {
        Err(StepperError::LostConvexity {
            cell: s.lambda_argmin,
            lambda_min: s.lambda_min,
        })
    }
}

/// The div-curl data of the base scheme for state `s`.
pub fn velocity_problem(s: &GeopotentialState) -> Result<DivCurlData, StepperError> {
    ensure_convex(s)?;
    Ok(DivCurlData::new(s.hess.clone(), forcing(s))?)
}

/// Velocity solve for state `s` without advancing it.
pub fn solve_velocity(s: &GeopotentialState, opts: &StepOptions) -> Result<DarcySolution, StepperError> {
    let data = velocity_problem(s)?;
    Ok(divcurl::solve_div_curl(&data, &opts.solver, opts.p)?)
}

/// `P_{j+1} = P_j - ε q_j`, mean re-normalised, caches rebuilt, time advanced by `ε`.
pub fn advance(s: &GeopotentialState, sol: &DarcySolution, epsilon: f64) -> Result<GeopotentialState, StepperError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(StepperError::BadParameter(format!("time step must be positive, got {epsilon}")));
    }
    let next = s.potential.axpby(1.0, &sol.q, -epsilon);
    GeopotentialState::build(next, Some(s.lambda0), s.time + epsilon, s.step + 1)
}

/// One forward Euler step. On error the input state is untouched.
pub fn step(
    s: &GeopotentialState,
    epsilon: f64,
    opts: &StepOptions,
) -> Result<(GeopotentialState, DarcySolution), StepperError> {
    let sol = solve_velocity(s, opts)?;
    Ok((advance(s, &sol, epsilon)?, sol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HaltReason {
    Completed,
    /// `λ_min` fell below `λ₀/2` at the start of `step`.
    ConvexityFloor { step: usize, lambda_min: f64 },
    SolverFailure { step: usize, message: String },
}

impl HaltReason {
    pub fn is_completed(&self) -> bool {
        matches!(self, HaltReason::Completed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub epsilon: f64,
    pub steps: usize,
    pub options: StepOptions,
    /// Stop when `λ_min < λ₀/2`.
    pub halt_below_half_lambda0: bool,
}

impl SchemeConfig {
    pub fn new(epsilon: f64, steps: usize) -> Self {
        Self {
            epsilon,
            steps,
            options: StepOptions::default(),
            halt_below_half_lambda0: true,
        }
    }

    /// `N = ⌈τ/dt⌉` steps of size `ε = τ/N`.
    pub fn from_horizon(horizon: f64, max_dt: f64) -> Result<Self, StepperError> {
        if !(horizon > 0.0 && max_dt > 0.0 && horizon.is_finite() && max_dt.is_finite()) {
            return Err(StepperError::BadParameter("horizon and time step must be positive".into()));
        }
        let steps = steps_for(horizon, max_dt);
        Ok(Self::new(horizon / steps as f64, steps))
    }

    pub fn horizon(&self) -> f64 {
        self.epsilon * self.steps as f64
    }

    fn validate(&self) -> Result<(), StepperError> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(StepperError::BadParameter(format!(
                "time step must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `⌈τ/dt⌉`, at least one. A quotient within rounding of an integer is not
/// rounded up, so `τ = 1, dt = 0.01` gives 100 steps.
pub fn steps_for(horizon: f64, max_dt: f64) -> usize {
    ((horizon / max_dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

/// Final state and halt reason of a streamed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_state: GeopotentialState,
    pub halt: HaltReason,
}

/// Runs the scheme, calling `observer` once per visited state with the velocity
/// solved for that state. The last state is also solved so its velocity can be
/// reported; `None` is passed if that solve fails or the run halted on it.
pub fn run_with_observer(
    s0: GeopotentialState,
    cfg: &SchemeConfig,
    observer: impl FnMut(&GeopotentialState, Option<&DarcySolution>),
) -> Result<RunOutcome, StepperError> {
    let opts = cfg.options;
    run_with_solver(s0, cfg, |s| solve_velocity(s, &opts), observer)
}

/// The run loop with a caller-supplied velocity solve, shared by scheme variants.
pub fn run_with_solver(
    s0: GeopotentialState,
    cfg: &SchemeConfig,
    solve: impl Fn(&GeopotentialState) -> Result<DarcySolution, StepperError>,
    mut observer: impl FnMut(&GeopotentialState, Option<&DarcySolution>),
) -> Result<RunOutcome, StepperError> {
    cfg.validate()?;
    let below_floor = |s: &GeopotentialState| cfg.halt_below_half_lambda0 && s.lambda_min < 0.5 * s.lambda0;
    let mut state = s0;
    for j in 0..cfg.steps {
        if below_floor(&state) {
            observer(&state, None);
            return Ok(RunOutcome {
                halt: HaltReason::ConvexityFloor {
                    step: j,
                    lambda_min: state.lambda_min,
                },
                final_state: state,
            });
        }
        let sol = match solve(&state) {
            Ok(sol) => sol,
            Err(e) => {
                observer(&state, None);
                return Ok(RunOutcome {
                    halt: HaltReason::SolverFailure {
                        step: j,
                        message: e.to_string(),
                    },
                    final_state: state,
                });
            }
        };
        observer(&state, Some(&sol));
        state = advance(&state, &sol, cfg.epsilon)?;
    }
    let halt = if below_floor(&state) {
        observer(&state, None);
        HaltReason::ConvexityFloor {
            step: cfg.steps,
            lambda_min: state.lambda_min,
        }
    } else {
        let sol = solve(&state).ok();
        observer(&state, sol.as_ref());
        HaltReason::Completed
    };
    Ok(RunOutcome {
        final_state: state,
        halt,
    })
}

/// Solver statistics of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub iterations: usize,
    pub residual: f64,
    pub u_max: f64,
    pub estimates: Option<divcurl::EstimateRatios>,
}

impl From<&DarcySolution> for StepSummary {
    fn from(s: &DarcySolution) -> Self {
        Self {
            iterations: s.iterations,
            residual: s.residual,
            u_max: s.u_max(),
            estimates: s.estimates,
        }
    }
}

/// Every visited state, one summary per state (`None` where no velocity was solved).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<GeopotentialState>,
    pub summaries: Vec<Option<StepSummary>>,
    pub halt: HaltReason,
    pub epsilon: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &GeopotentialState {
        self.states.last().expect("a trajectory holds at least its initial state")
    }
}

pub fn run(s0: GeopotentialState, cfg: &SchemeConfig) -> Result<Trajectory, StepperError> {
    let opts = cfg.options;
    run_collecting(s0, cfg, |s| solve_velocity(s, &opts))
}

/// [`run_with_solver`] that stores every state.
pub fn run_collecting(
    s0: GeopotentialState,
    cfg: &SchemeConfig,
    solve: impl Fn(&GeopotentialState) -> Result<DarcySolution, StepperError>,
) -> Result<Trajectory, StepperError> {
    let mut states = Vec::with_capacity(cfg.steps + 1);
    let mut summaries = Vec::with_capacity(cfg.steps + 1);
    let outcome = run_with_solver(s0, cfg, solve, |s, sol| {
        states.push(s.clone());
        summaries.push(sol.map(StepSummary::from));
    })?;
    Ok(Trajectory {
        states,
        summaries,
        halt: outcome.halt,
        epsilon: cfg.epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tensor::diag;

    fn unit(n: usize) -> GridSpec {
        GridSpec::unit_cube(n).unwrap()
    }

    #[test]
    fn presets_have_expected_modulus() {
        let s = init_preset(&Preset::Identity, &unit(6)).unwrap();
        assert!((s.lambda0() - 1.0).abs() < 1e-12);
        assert!(s.potential().mean().abs() < 1e-14);
        let s = init_preset(&Preset::Quadratic(diag([2.0, 1.0, 0.5])), &unit(6)).unwrap();
        assert!((s.lambda0() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn non_convex_input_is_rejected_with_location() {
        let g = unit(6);
        let p = ScalarField::from_fn(g, |x| 0.5 * (x[0] * x[0] - x[1] * x[1] + x[2] * x[2]));
        match init_state(p) {
            Err(StepperError::NotConvex { eigenvalue, .. }) => assert!((eigenvalue + 1.0).abs() < 1e-10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identity_is_a_fixed_point() {
        let s = init_preset(&Preset::Identity, &unit(6)).unwrap();
        let (next, sol) = step(&s, 0.1, &StepOptions::default()).unwrap();
        assert!(sol.u_max() < 1e-9);
        let d = next
            .potential()
            .values()
            .iter()
            .zip(s.potential().values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-12);
        assert_eq!(next.step_index(), 1);
        assert!((next.time() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn horizon_splits_into_whole_steps() {
        let cfg = SchemeConfig::from_horizon(1.0, 0.03).unwrap();
        assert_eq!(cfg.steps, 34);
        assert!((cfg.horizon() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn run_visits_every_state_and_completes() {
        let s = init_preset(&Preset::Tilt([0.1, 0.0, 0.0]), &unit(5)).unwrap();
        let traj = run(s, &SchemeConfig::new(0.05, 4)).unwrap();
        assert_eq!(traj.states.len(), 5);
        assert!(traj.summaries.iter().all(|s| s.is_some()));
        assert!(traj.halt.is_completed());
        assert!((traj.final_state().time() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn constants_for_identity() {
        let s = init_preset(&Preset::Identity, &unit(8)).unwrap();
        let c = compute_constants(&s, 4.0, 1.0, 1.0).unwrap();
        assert!((c.kappa - (c.omega + 2.0) / 3.0).abs() < 1e-14);
        let expected = (1.0 / (6.0 * (c.kappa + c.grad_norm0))).ln_1p() / 3.0;
        assert!((c.tau_star - expected).abs() < 1e-15);
        assert!(c.tau_star > 0.0);
        // Constant Hessian: the Hölder quotient vanishes.
        assert!((c.m_star - (3f64.sqrt() + 1.0 / 6.0)).abs() < 1e-12);
        let c2 = compute_constants(&s, 4.0, 2.0, 1.0).unwrap();
        assert!(c2.tau_star < c.tau_star);
        assert!(compute_constants(&s, 3.0, 1.0, 1.0).is_err());
    }
}
