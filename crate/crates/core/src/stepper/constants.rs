use super::{GeopotentialState, StepperError};
use crate::grid::{sobolev_norm, tensor, vector_sobolev_norm, TensorField, VectorField};
use serde::{Deserialize, Serialize};

/// Parameters of the existence-time estimate, evaluated on the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConstants {
    pub lambda0: f64,
    /// Discrete `W^{3,p}` norm of `x ↦ Jx`.
    pub omega: f64,
    /// `C^{1,α}` surrogate of `D²P₀` plus `λ₀/6`.
    pub m_star: f64,
    pub c_star: f64,
    pub c_m: f64,
    /// `(ω + 2c*|Ω|^{1/p}) / (1 + 2c*)`.
    pub kappa: f64,
    /// Discrete `W^{3,p}` norm of `∇P₀`.
    pub grad_norm0: f64,
    /// Guaranteed existence horizon for the configured `c*`, `C_M`.
    pub tau_star: f64,
    pub p: f64,
    /// Hölder exponent `1 - 3/p` of the Morrey embedding.
    pub alpha: f64,
}

/// `τ* = ln(1 + λ₀ / (6 C_M (κ + n₀))) / (1 + 2c*)`.
pub fn tau_star(lambda0: f64, kappa: f64, grad_norm0: f64, c_star: f64, c_m: f64) -> f64 {
    (lambda0 / (6.0 * c_m * (kappa + grad_norm0))).ln_1p() / (1.0 + 2.0 * c_star)
}

/// Largest Frobenius norm plus largest axis-neighbour Hölder quotient at exponent `alpha`.
pub fn holder_surrogate(t: &TensorField, alpha: f64) -> f64 {
    let spec = t.spec();
    let h = spec.spacing();
    let dims = spec.dims();
    let vals = t.values();
    let sup = vals.iter().map(tensor::frobenius).fold(0.0, f64::max);
    let mut quotient: f64 = 0.0;
    for (idx, m) in vals.iter().enumerate() {
        let c = spec.coords(idx);
        for d in 0..3 {
            if c[d] + 1 < dims[d] {
                let diff = tensor::add(m, &tensor::scale(&vals[idx + spec.stride(d)], -1.0));
                quotient = quotient.max(tensor::frobenius(&diff) / h[d].powf(alpha));
            }
        }
    }
    sup + quotient
}

pub fn compute_constants(
    s: &GeopotentialState,
    p: f64,
    c_star: f64,
    c_m: f64,
) -> Result<SchemeConstants, StepperError> {
    if !(p > 3.0 && p.is_finite()) {
        return Err(StepperError::BadParameter(format!("p must exceed 3, got {p}")));
    }
    if !(c_star > 0.0 && c_m > 0.0 && c_star.is_finite() && c_m.is_finite()) {
        return Err(StepperError::BadParameter("c* and C_M must be positive".into()));
    }
    let spec = *s.potential().spec();
    let rotation = VectorField::from_fn(spec, |x| tensor::rotate(&x));
    // Jx is linear, so derivatives beyond the first vanish and order 2 already
    // equals the full third-order norm.
    let omega = vector_sobolev_norm(&rotation, 2, p)?;
    let kappa = (omega + 2.0 * c_star * spec.volume().powf(1.0 / p)) / (1.0 + 2.0 * c_star);
    let grad_norm0 = sobolev_norm(s.potential(), 3, p)?;
    let lambda0 = s.lambda0();
    let alpha = 1.0 - 3.0 / p;
    let m_star = holder_surrogate(s.hessian(), alpha) + lambda0 / 6.0;
    Ok(SchemeConstants {
        lambda0,
        omega,
        m_star,
        c_star,
        c_m,
        kappa,
        grad_norm0,
        tau_star: tau_star(lambda0, kappa, grad_norm0, c_star, c_m),
        p,
        alpha,
    })
}

/// Outcome of one a-priori bound comparison; `margin = bound - measured`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
}

impl BoundCheck {
    pub fn new(measured: f64, bound: f64) -> Self {
        Self {
            holds: measured <= bound,
            measured,
            bound,
            margin: bound - measured,
        }
    }
}

/// Compares `norms[j] = ‖∇P_j‖_{W^{3,p}}` with
/// `(κ + ‖∇P₀‖)(1 + (1 + 2c*)ε)^j - κ`.
pub fn growth_bound_check(norms: &[f64], constants: &SchemeConstants, epsilon: f64) -> Vec<BoundCheck> {
    let rate = 1.0 + (1.0 + 2.0 * constants.c_star) * epsilon;
    norms
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let bound = (constants.kappa + constants.grad_norm0) * rate.powi(j as i32) - constants.kappa;
            // Relative slack absorbs the rounding of (κ + n₀) - κ at j = 0.
            BoundCheck::new(n, bound * (1.0 + 1e-12))
        })
        .collect()
}
