//! Momentum-space Schrödinger checks for the closed-form propagators.
//!
//! Under `p1 = p0` every propagator is `δ(p1 - p0) · exp(-i E Δ / ħ)`, so
//! the equation `iħ ∂_t K = (p²/2m0) K + ∫ W K` reduces to an identity for
//! the phase. The integral over the intermediate momentum is resolved by the
//! delta, leaving `W` at zero momentum transfer.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::ab_model::{propagator_limit, PhysParams};
use crate::error::{Error, Result};
use crate::perturbation::{closed_form_propagator, potential_eval, AtomicMeasure};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagatorKind {
    /// Ring with the flux potential `V = α θ̇`.
    AbBoundState,
    /// Free particle on the ring.
    Circle,
    /// `V(θ̇) = ∫ e^{βθ̇} dm(β)`.
    ExponentialClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpec {
    pub kind: PropagatorKind,
    pub params: PhysParams,
    pub measure: Option<AtomicMeasure>,
}

impl EnergySpec {
    pub fn ab(params: PhysParams) -> Self {
        Self {
            kind: PropagatorKind::AbBoundState,
            params,
            measure: None,
        }
    }

    pub fn circle(params: PhysParams) -> Self {
        Self {
            kind: PropagatorKind::Circle,
            params,
            measure: None,
        }
    }

    pub fn exponential(params: PhysParams, measure: AtomicMeasure) -> Self {
        Self {
            kind: PropagatorKind::ExponentialClass,
            params,
            measure: Some(measure),
        }
    }

    fn measure(&self) -> Result<&AtomicMeasure> {
        self.measure
            .as_ref()
            .ok_or_else(|| Error::Domain("exponential-class spec needs a measure".into()))
    }

    /// `V(θ̇)` for this kind.
    pub fn potential(&self, theta_dot: f64) -> Result<Complex64> {
        Ok(match self.kind {
            PropagatorKind::AbBoundState => Complex64::new(self.params.alpha() * theta_dot, 0.0),
            PropagatorKind::Circle => Complex64::new(0.0, 0.0),
            PropagatorKind::ExponentialClass => potential_eval(self.measure()?, theta_dot)?,
        })
    }

    /// Energy in the exponent of the propagator at `p1 = p0`, read off the
    /// closed forms: `p0(p0 + 2α/R)/(2m0)`, `p0²/(2m0)`, and
    /// `p0²/(2m0) + V(p0/(m0R))`.
    pub fn energy(&self) -> Result<Complex64> {
        let p = &self.params;
        let free = p.p0 * p.p0 / (2.0 * p.m0);
        Ok(match self.kind {
            PropagatorKind::AbBoundState => {
                Complex64::new(p.p0 * (p.p0 + 2.0 * p.alpha() / p.radius) / (2.0 * p.m0), 0.0)
            }
            PropagatorKind::Circle => Complex64::new(free, 0.0),
            PropagatorKind::ExponentialClass => {
                free + potential_eval(self.measure()?, p.p0 / (p.m0 * p.radius))?
            }
        })
    }

    /// Phase of the propagator at final time `t`, computed by the
    /// closed-form propagator of this kind. `t` need not satisfy the
    /// parameter constraints on `a`.
    pub fn phase_at(&self, t: f64) -> Result<Complex64> {
        let p = PhysParams { t, ..self.params };
        Ok(match self.kind {
            PropagatorKind::AbBoundState => propagator_limit(&p).phase,
            PropagatorKind::Circle => propagator_limit(&PhysParams { phi: 0.0, ..p }).phase,
            PropagatorKind::ExponentialClass => closed_form_propagator(&p, self.measure()?)?.phase,
        })
    }

    fn require_conservation(&self) -> Result<()> {
        let p = &self.params;
        if p.p1 != p.p0 {
            return Err(Error::Precondition {
                msg: format!("momentum not conserved: p1 = {} but p0 = {}", p.p1, p.p0),
                leftover: winding_residual_term(p, 0),
            });
        }
        Ok(())
    }
}

/// `W(dp) = (1/2π) ∫_0^{2π} e^{-i dp θ/ħ} dθ · V(p_at/(m0R))`.
pub fn w_kernel(spec: &EnergySpec, dp: f64, p_at: f64) -> Result<Complex64> {
    let p = &spec.params;
    let v = spec.potential(p_at / (p.m0 * p.radius))?;
    if dp == 0.0 {
        return Ok(v);
    }
    let z = -2.0 * PI * I * dp / p.hbar;
    Ok((z.exp() - 1.0) / z * v)
}

/// `|E - p0²/(2m0) - W(0)|` with `p1 = p0`.
pub fn residual_analytic(spec: &EnergySpec) -> Result<f64> {
    spec.require_conservation()?;
    let p = &spec.params;
    let lhs = spec.energy()?;
    let rhs = p.p0 * p.p0 / (2.0 * p.m0) + w_kernel(spec, 0.0, p.p0)?;
    Ok((lhs - rhs).norm())
}

/// Base times of the residual stencil, as fractions of `t - t0`.
const STENCIL: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];

/// Maximum over five times `τ` in `(t0, t]` of
/// `|iħ (K(τ+h) - K(τ-h))/(2h) - [p0²/(2m0) + W(0)] K(τ)|`, `K` the phase.
pub fn residual_fd(spec: &EnergySpec, dt_fd: f64) -> Result<f64> {
    spec.require_conservation()?;
    let p = &spec.params;
    if !(dt_fd > 0.0) || dt_fd >= 0.2 * p.delta() {
        return Err(Error::Domain(format!(
            "step must lie in (0, {}), got {dt_fd}",
            0.2 * p.delta()
        )));
    }
    let energy = p.p0 * p.p0 / (2.0 * p.m0) + w_kernel(spec, 0.0, p.p0)?;
    let mut worst: f64 = 0.0;
    for frac in STENCIL {
        let tau = p.t0 + frac * p.delta();
        let deriv = (spec.phase_at(tau + dt_fd)? - spec.phase_at(tau - dt_fd)?) / (2.0 * dt_fd);
        let r = I * p.hbar * deriv - energy * spec.phase_at(tau)?;
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// `(i l/(m0R) + i p0/(2m0ħ)) (p0 - p1)`: the part of the winding
/// propagator's time derivative with no counterpart on the right-hand side.
pub fn winding_residual_term(params: &PhysParams, l: i64) -> Complex64 {
    let coef = l as f64 / (params.m0 * params.radius) + params.p0 / (2.0 * params.m0 * params.hbar);
    I * coef * (params.p0 - params.p1)
}
