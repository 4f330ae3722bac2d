use super::StepperError;
use crate::grid::{symmetric_eigenvalues, tensor, GridSpec, Mat3, ScalarField};
use std::f64::consts::PI;

/// Built-in uniformly convex initial geopotentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `½|x|²`.
    Identity,
    /// `½|x|² + a·x`.
    Tilt([f64; 3]),
    /// `½ xᵀQx` with `Q` symmetric positive definite.
    Quadratic(Mat3),
    /// `½|x|² + δ Π_i sin(kπ(x_i - o_i)/L_i)`; requires `3|δ|k²π²/min L² < 1`.
    Bump { delta: f64, k: f64 },
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Identity => "identity",
            Preset::Tilt(_) => "tilt",
            Preset::Quadratic(_) => "quadratic",
            Preset::Bump { .. } => "bump",
        }
    }

    /// Checks parameter ranges that guarantee a uniformly convex potential.
    pub fn validate(&self, spec: &GridSpec) -> Result<(), StepperError> {
        match *self {
            Preset::Identity => Ok(()),
            Preset::Tilt(a) => {
                if a.iter().all(|v| v.is_finite()) {
                    Ok(())
                } else {
                    Err(StepperError::BadParameter("tilt vector must be finite".into()))
                }
            }
            Preset::Quadratic(q) => {
                if !tensor::is_symmetric(&q) || q.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(StepperError::BadParameter("Q must be finite and symmetric".into()));
                }
                let lam = symmetric_eigenvalues(&q)[0];
                if lam > 0.0 {
                    Ok(())
                } else {
                    Err(StepperError::BadParameter(format!(
                        "Q must be positive definite (smallest eigenvalue {lam})"
                    )))
                }
            }
            Preset::Bump { delta, k } => {
                if !(k > 0.0 && k.is_finite() && delta.is_finite()) {
                    return Err(StepperError::BadParameter("bump needs finite delta and k > 0".into()));
                }
                let l_min = spec.extents().into_iter().fold(f64::INFINITY, f64::min);
                let drop = bump_eigenvalue_drop(delta, k, l_min);
                if drop < 1.0 {
                    Ok(())
                } else {
                    Err(StepperError::BadParameter(format!(
                        "bump is not convex: 3|delta|(k pi / L)^2 = {drop} must be < 1"
                    )))
                }
            }
        }
    }

    /// Samples the potential at cell centres (not yet mean-normalised).
    pub fn potential(&self, spec: &GridSpec) -> Result<ScalarField, StepperError> {
        self.validate(spec)?;
        let half_sq = |x: [f64; 3]| 0.5 * tensor::dot(&x, &x);
        let field = match *self {
            Preset::Identity => ScalarField::from_fn(*spec, half_sq),
            Preset::Tilt(a) => ScalarField::from_fn(*spec, |x| half_sq(x) + tensor::dot(&a, &x)),
            Preset::Quadratic(q) => {
                ScalarField::from_fn(*spec, |x| 0.5 * tensor::dot(&x, &tensor::mul_vec(&q, &x)))
            }
            Preset::Bump { delta, k } => {
                let o = spec.origin();
                let l = spec.extents();
                ScalarField::from_fn(*spec, |x| {
                    let prod: f64 = (0..3).map(|i| (k * PI * (x[i] - o[i]) / l[i]).sin()).product();
                    half_sq(x) + delta * prod
                })
            }
        };
        Ok(field)
    }
}

/// Upper bound on how far the bump lowers the smallest Hessian eigenvalue below 1.
pub fn bump_eigenvalue_drop(delta: f64, k: f64, l_min: f64) -> f64 {
    3.0 * delta.abs() * (k * PI / l_min).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tensor::diag;

    #[test]
    fn validation() {
        let g = GridSpec::unit_cube(4).unwrap();
        assert!(Preset::Quadratic(diag([1.0, 0.0, 1.0])).validate(&g).is_err());
        assert!(Preset::Quadratic([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            .validate(&g)
            .is_err());
        assert!(Preset::Bump { delta: 0.01, k: 1.0 }.validate(&g).is_ok());
        assert!(Preset::Bump { delta: 0.04, k: 1.0 }.validate(&g).is_err());
        assert!(Preset::Bump { delta: 0.01, k: 0.0 }.validate(&g).is_err());
    }

    #[test]
    fn tilt_samples_closed_form() {
        let g = GridSpec::unit_cube(4).unwrap();
        let p = Preset::Tilt([1.0, 2.0, 3.0]).potential(&g).unwrap();
        let x = g.center(5);
        let expected = 0.5 * tensor::dot(&x, &x) + x[0] + 2.0 * x[1] + 3.0 * x[2];
        assert_eq!(p.values()[5], expected);
    }
}
