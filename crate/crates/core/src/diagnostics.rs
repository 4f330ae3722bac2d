//! Functionals of a geopotential state: energy, the pushforward measure of the
//! normalised volume under `∇P`, norm growth envelopes and per-step records.

use crate::grid::{curl, lp_norm, sobolev_norm, GridError, VectorField};
use crate::stepper::{BoundCheck, GeopotentialState, SchemeConstants, StepSummary};
use serde::{Deserialize, Serialize};

/// Midpoint rule for `½∫((x₁-T₁)² + (x₂-T₂)² - 2x₃T₃) dx` with `T = ∇P`.
pub fn energy(s: &GeopotentialState) -> f64 {
    let spec = s.spec();
    let sum: f64 = s
        .gradient()
        .values()
        .iter()
        .enumerate()
        .map(|(idx, t)| {
            let x = spec.center(idx);
            (x[0] - t[0]).powi(2) + (x[1] - t[1]).powi(2) - 2.0 * x[2] * t[2]
        })
        .sum();
    0.5 * sum * spec.cell_volume()
}

/// Componentwise bounding box of a vector field's values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl SupportBox {
    pub fn of(v: &VectorField) -> Self {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for x in v.values() {
            for c in 0..3 {
                min[c] = min[c].min(x[c]);
                max[c] = max[c].max(x[c]);
            }
        }
        Self { min, max }
    }
}

/// The pushforward of the normalised volume measure under `∇P`, binned on a
/// regular grid spanning the bounding box of the values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushforwardHistogram {
    pub bins: [usize; 3],
    pub support: SupportBox,
    /// Bin masses, first axis fastest.
    pub masses: Vec<f64>,
}

impl PushforwardHistogram {
    /// `bins[axis] + 1` equally spaced edges; a degenerate axis has all edges equal.
    pub fn edges(&self, axis: usize) -> Vec<f64> {
        let (lo, hi) = (self.support.min[axis], self.support.max[axis]);
        let n = self.bins[axis];
        (0..=n)
            .map(|i| if i == n { hi } else { lo + (hi - lo) * i as f64 / n as f64 })
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mass(&self, i: usize, j: usize, k: usize) -> f64 {
        self.masses[i + self.bins[0] * (j + self.bins[1] * k)]
    }
}

fn bin_of(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    (((v - lo) / (hi - lo) * n as f64) as usize).min(n - 1)
}

/// Panics if any bin count is zero.
pub fn pushforward_histogram(s: &GeopotentialState, bins: [usize; 3]) -> PushforwardHistogram {
    assert!(bins.iter().all(|&b| b > 0), "histogram needs at least one bin per axis");
    let grad = s.gradient();
    let support = SupportBox::of(grad);
    let mut masses = vec![0.0; bins[0] * bins[1] * bins[2]];
    let weight = 1.0 / grad.values().len() as f64;
    for t in grad.values() {
        let b: [usize; 3] = std::array::from_fn(|c| bin_of(t[c], support.min[c], support.max[c], bins[c]));
        masses[b[0] + bins[0] * (b[1] + bins[1] * b[2])] += weight;
    }
    PushforwardHistogram {
        bins,
        support,
        masses,
    }
}

/// Largest `|∇∧∇P|` over cells at least one layer from the boundary.
pub fn curl_residual(s: &GeopotentialState) -> f64 {
    let spec = *s.spec();
    curl(s.gradient())
        .values()
        .iter()
        .enumerate()
        .filter(|(idx, _)| spec.is_interior(*idx, 1))
        .map(|(_, c)| crate::grid::tensor::norm(c))
        .fold(0.0, f64::max)
}

/// `(n₀ + m)e^t - m`, the sup-norm envelope of `∇P` over time.
pub fn support_envelope(linf0: f64, m: f64, t: f64) -> f64 {
    (linf0 + m) * t.exp() - m
}

/// Checks `linf[j] ≤ (linf[0] + m)e^{times[j]} - m` at every entry.
pub fn support_bound_check_norms(linf: &[f64], times: &[f64], m: f64) -> Vec<BoundCheck> {
    let Some(&linf0) = linf.first() else {
        return Vec::new();
    };
    linf.iter()
        .zip(times)
        .map(|(&n, &t)| {
            // Relative slack absorbs the rounding of (n₀ + m) - m at t = 0.
            BoundCheck::new(n, support_envelope(linf0, m, t) * (1.0 + 1e-12))
        })
        .collect()
}

/// Sup-norm envelope check along a sequence of states, with `m = max_{y∈Ω̄}|y|`.
pub fn support_bound_check(states: &[GeopotentialState]) -> Vec<BoundCheck> {
    let Some(first) = states.first() else {
        return Vec::new();
    };
    let linf: Vec<f64> = states.iter().map(|s| s.gradient().max_magnitude()).collect();
    let times: Vec<f64> = states.iter().map(|s| s.time()).collect();
    support_bound_check_norms(&linf, &times, first.spec().max_point_norm())
}

/// All per-step diagnostics of one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub l2_grad: f64,
    pub lp_grad: f64,
    pub linf_grad: f64,
    /// Discrete `W^{3,p}` norm of `∇P`.
    pub w3p_grad: f64,
    pub lambda_min: f64,
    pub lambda_argmin: [usize; 3],
    pub curl_residual: f64,
    pub support: SupportBox,
    /// Solver statistics; `None` when no velocity was solved for this state.
    pub solve: Option<StepSummary>,
}

impl DiagnosticsRecord {
    pub fn estimate_ratios(&self) -> (Option<f64>, Option<f64>) {
        match self.solve.and_then(|s| s.estimates) {
            Some(e) => (Some(e.velocity), Some(e.flux)),
            None => (None, None),
        }
    }
}

/// Needs at least five cells per axis for the third-order norm.
pub fn emit_record(
    s: &GeopotentialState,
    solve: Option<StepSummary>,
    constants: &SchemeConstants,
) -> Result<DiagnosticsRecord, GridError> {
    let grad = s.gradient();
    Ok(DiagnosticsRecord {
        step: s.step_index(),
        time: s.time(),
        energy: energy(s),
        l2_grad: lp_norm(grad, 2.0),
        lp_grad: lp_norm(grad, constants.p),
        linf_grad: grad.max_magnitude(),
        w3p_grad: sobolev_norm(s.potential(), 3, constants.p)?,
        lambda_min: s.lambda_min(),
        lambda_argmin: s.spec().coords(s.lambda_argmin()),
        curl_residual: curl_residual(s),
        support: SupportBox::of(grad),
        solve,
    })
}
