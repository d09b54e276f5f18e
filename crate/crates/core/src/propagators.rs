//! Closed-form AB propagators, the winding comb, and the Poisson summation
//! identity behind it.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::ab_model::{propagator_limit, PhysParams};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `Σ_l exp(i l x)` for `|l| <= l_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingComb {
    /// `x = Δ (p0 - p1) / (m0 R)`.
    pub argument: f64,
    pub l0: i64,
    pub l_max: u32,
}

impl WindingComb {
    /// Direct sum over `l0 - l_max ..= l0 + l_max`.
    pub fn partial_sum(&self) -> Complex64 {
        let m = self.l_max as i64;
        (self.l0 - m..=self.l0 + m).map(|l| (I * l as f64 * self.argument).exp()).sum()
    }

    /// Dirichlet kernel `sin((L + 1/2)x) / sin(x/2)` times the `l0` phase,
    /// `2L + 1` when `x` is a multiple of `2π`.
    pub fn dirichlet(&self) -> Complex64 {
        let shift = (I * self.l0 as f64 * self.argument).exp();
        // reduce to (-π, π]; the sign changes of numerator and denominator cancel
        let x = self.argument - 2.0 * PI * (self.argument / (2.0 * PI)).round();
        if x == 0.0 {
            return shift * (2.0 * self.l_max as f64 + 1.0);
        }
        shift * ((self.l_max as f64 + 0.5) * x).sin() / (0.5 * x).sin()
    }
}

/// A propagator of the form `δ(delta_arg) · phase`, optionally times a
/// winding comb.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorValue {
    pub delta_arg: f64,
    pub phase: Complex64,
    pub comb: Option<WindingComb>,
}

impl PropagatorValue {
    /// Phase times the truncated comb (or the bare phase).
    pub fn weighted_phase(&self) -> Complex64 {
        match self.comb {
            Some(c) => self.phase * c.partial_sum(),
            None => self.phase,
        }
    }
}

/// `δ(p1 - p0) exp[-i p0 (p1 + 2α/R) Δ / (2ħm0)]`.
pub fn propagator_no_winding(params: &PhysParams) -> Result<PropagatorValue> {
    params.validate()?;
    Ok(propagator_limit(params))
}

/// Propagator summed over winding sectors:
/// `exp{-i p0/(2ħm0)[(p1 + 2α/R)Δ + (p1 - p0)(Δ + 2a)]} Σ_l exp(i l Δ(p0 - p1)/(m0R))`.
pub fn propagator_winding(params: &PhysParams, l_max: u32) -> Result<PropagatorValue> {
    params.validate()?;
    Ok(PropagatorValue {
        delta_arg: params.p1 - params.p0,
        phase: params.classical_phase(),
        comb: Some(WindingComb {
            argument: params.delta() * (params.p0 - params.p1) / (params.m0 * params.radius),
            l0: 0,
            l_max,
        }),
    })
}

/// Free particle on the ring: `δ(p1 - p0) exp(-i p0² Δ / (2m0ħ))`.
pub fn propagator_circle(params: &PhysParams) -> Result<PropagatorValue> {
    propagator_no_winding(&PhysParams { phi: 0.0, ..*params })
}

/// Exponent of the no-winding phase written through the flux,
/// `p0 (p1 - eφ/(πħcR)) Δ / (2m0ħ)`.
pub fn flux_form_exponent(params: &PhysParams) -> f64 {
    let shift = params.e * params.phi / (std::f64::consts::PI * params.hbar * params.c * params.radius);
    params.p0 * (params.p1 - shift) * params.delta() / (2.0 * params.m0 * params.hbar)
}

/// The flux-dependent factor `exp(-i p0 α Δ / (ħ m0 R))` of the no-winding phase.
pub fn flux_phase(params: &PhysParams) -> Complex64 {
    (-I * params.p0 * params.alpha() * params.delta() / (params.hbar * params.m0 * params.radius)).exp()
}

fn check_comb_args(period: f64, sigma: f64) -> Result<()> {
    if !(period > 0.0) || !(sigma > 0.0) {
        return Err(Error::Domain(format!(
            "period and width must be positive, got T = {period}, sigma = {sigma}"
        )));
    }
    Ok(())
}

/// `Σ_{|l| <= L} G_σ(x - l T)` with `G_σ` the normalized Gaussian.
pub fn poisson_comb_lhs(x: f64, period: f64, sigma: f64, l_max: u32) -> Result<f64> {
    check_comb_args(period, sigma)?;
    let norm = 1.0 / (sigma * (2.0 * PI).sqrt());
    let m = l_max as i64;
    Ok((-m..=m)
        .map(|l| {
            let u = (x - l as f64 * period) / sigma;
            norm * (-0.5 * u * u).exp()
        })
        .sum())
}

/// `(1/T) Σ_{|k| <= K} cos(2πkx/T) exp(-2π²k²σ²/T²)`.
pub fn poisson_comb_rhs(x: f64, period: f64, sigma: f64, k_max: u32) -> Result<f64> {
    check_comb_args(period, sigma)?;
    let mut acc = 1.0;
    for k in 1..=k_max {
        let k = k as f64;
        acc += 2.0 * (2.0 * PI * k * x / period).cos() * (-2.0 * (PI * k * sigma / period).powi(2)).exp();
    }
    Ok(acc / period)
}

/// Truncations `(L, K)` whose dropped tails are below `tol` relative to the
/// leading term, for `|x| <= T/2`.
pub fn poisson_truncations(period: f64, sigma: f64, tol: f64) -> Result<(u32, u32)> {
    check_comb_args(period, sigma)?;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let lt = (1.0 / tol).ln();
    let l = (1.0 + sigma * (2.0 * lt).sqrt() / period).ceil() + 1.0;
    let k = (period * (0.5 * lt).sqrt() / (PI * sigma)).ceil() + 1.0;
    Ok((l as u32, k as u32))
}

/// Flux periodicity of the no-winding phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxPeriod {
    /// Period in `α`: `2πħ m0 R / (|p0| Δ)`.
    pub alpha_period: f64,
    /// Period in `φ`: `alpha_period · 2πħc / |e|`.
    pub phi_period: f64,
    /// Flux quantum `2πħc / |e|`.
    pub london: f64,
}

pub fn ab_period_check(params: &PhysParams) -> Result<FluxPeriod> {
    params.validate()?;
    if params.p0 == 0.0 {
        return Err(Error::Degenerate("p0 = 0: the phase does not depend on the flux".into()));
    }
    let london = 2.0 * PI * params.hbar * params.c / params.e.abs();
    let alpha_period = 2.0 * PI * params.hbar * params.m0 * params.radius / (params.p0.abs() * params.delta());
    Ok(FluxPeriod {
        alpha_period,
        phi_period: alpha_period * london,
        london,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comb_closed_form_matches_sum() {
        for x in [0.0, 0.3, -1.7, 2.0 * PI, 4.0 * PI + 1e-9, 5.0] {
            for l_max in [0, 1, 7, 40] {
                for l0 in [0, 3] {
                    let c = WindingComb { argument: x, l0, l_max };
                    let (a, b) = (c.partial_sum(), c.dirichlet());
                    assert!((a - b).norm() < 1e-9 * (2.0 * l_max as f64 + 1.0), "{x} {l_max}: {a} {b}");
                }
            }
        }
    }

    #[test]
    fn winding_reduces_on_shell() {
        let p = PhysParams { phi: 0.7, p0: 1.4, p1: 1.4, ..Default::default() };
        let nw = propagator_no_winding(&p).unwrap();
        let w = propagator_winding(&p, 5).unwrap();
        assert!((nw.phase - w.phase).norm() < 1e-15);
        let comb = w.comb.unwrap();
        assert_eq!(comb.argument, 0.0);
        assert!((comb.partial_sum().re - 11.0).abs() < 1e-12);
    }

    #[test]
    fn no_winding_phase_is_flux_periodic() {
        let p = PhysParams { phi: 0.3, p0: 1.7, ..Default::default() };
        let period = ab_period_check(&p).unwrap();
        let q = PhysParams { phi: p.phi + period.phi_period, ..p };
        let a = propagator_no_winding(&p).unwrap().phase;
        let b = propagator_no_winding(&q).unwrap().phase;
        assert!((a - b).norm() < 1e-12);
        let r = p.with_alpha(p.alpha() + period.alpha_period);
        assert!((propagator_no_winding(&r).unwrap().phase - a).norm() < 1e-12);
        let half = PhysParams { phi: p.phi + 0.5 * period.phi_period, ..p };
        assert!((propagator_no_winding(&half).unwrap().phase + a).norm() < 1e-12);
    }

    #[test]
    fn degenerate_period() {
        let p = PhysParams { p0: 0.0, ..Default::default() };
        assert!(matches!(ab_period_check(&p), Err(Error::Degenerate(_))));
    }

    #[test]
    fn poisson_identity() {
        let (t, s) = (2.0 * PI, 0.4);
        let (l, k) = poisson_truncations(t, s, 1e-16).unwrap();
        for x in [0.0, 0.3, 1.0, -2.5, PI] {
            let a = poisson_comb_lhs(x, t, s, l).unwrap();
            let b = poisson_comb_rhs(x, t, s, k).unwrap();
            assert!((a - b).abs() < 1e-12, "{x}: {a} {b}");
        }
        assert!(poisson_comb_lhs(0.0, 0.0, s, 3).is_err());
        assert!(poisson_comb_rhs(0.0, 1.0, -1.0, 3).is_err());
    }
    #[test]
    fn flux_form_and_examples() {
        let p = PhysParams { phi: 0.0, p0: 2.0, p1: 2.0, ..Default::default() }.with_alpha(0.5);
        let v = propagator_no_winding(&p).unwrap();
        assert!((v.phase - (-I * 3.0).exp()).norm() < 1e-15);
        let q = PhysParams { phi: 1.3, e: 0.8, c: 1.7, p0: 0.9, p1: 0.9, ..Default::default() };
        let direct = q.p0 * (q.p1 + 2.0 * q.alpha() / q.radius) * q.delta() / (2.0 * q.m0 * q.hbar);
        assert!((flux_form_exponent(&q) - direct).abs() < 1e-14);
        let free = propagator_circle(&q).unwrap().phase;
        assert!((propagator_no_winding(&q).unwrap().phase - free * flux_phase(&q)).norm() < 1e-14);
        assert_eq!(flux_phase(&PhysParams::default()), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn comb_special_arguments() {
        let at_pi = WindingComb { argument: PI, l0: 0, l_max: 4 };
        assert!((at_pi.dirichlet().re - 1.0).abs() < 1e-12);
        let a = WindingComb { argument: 0.0, l0: 0, l_max: 6 };
        let b = WindingComb { argument: 2.0 * PI, ..a };
        assert!((a.partial_sum() - b.partial_sum()).norm() < 1e-12);
    }
}
