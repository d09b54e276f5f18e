//! Potentials exponential in the angular velocity, `V(x) = ∫ e^{βx} dm(β)`,
//! over finite atomic complex measures, and the perturbation series of
//! their propagator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ab_model::PhysParams;
use crate::error::{Error, Result};
use crate::lattice::{indicator, inner_product, l2_norm, GridFunction};
use crate::propagators::PropagatorValue;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const EXP_LIMIT: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub beta: f64,
    pub weight: Complex64,
}

/// Flat record form of an atom, as stored in measure files and JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub beta: f64,
    pub weight_re: f64,
    pub weight_im: f64,
}

impl From<Atom> for AtomRecord {
    fn from(a: Atom) -> Self {
        Self {
            beta: a.beta,
            weight_re: a.weight.re,
            weight_im: a.weight.im,
        }
    }
}

impl From<AtomRecord> for Atom {
    fn from(r: AtomRecord) -> Self {
        Self {
            beta: r.beta,
            weight: Complex64::new(r.weight_re, r.weight_im),
        }
    }
}

/// Finite weighted sum of point masses `Σ w_j δ_{β_j}`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
    pub name: Option<String>,
}

impl AtomicMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    /// `weight · δ_beta`.
    pub fn point(beta: f64, weight: Complex64) -> Self {
        Self {
            atoms: vec![Atom { beta, weight }],
            name: None,
        }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, Complex64)>) -> Self {
        Self {
            atoms: atoms.into_iter().map(|(beta, weight)| Atom { beta, weight }).collect(),
            name: None,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.atoms.iter().all(|a| a.weight.im == 0.0)
    }

    /// `Σ |w_j| exp(C |β_j|)`.
    pub fn moment(&self, c: f64) -> Result<f64> {
        let m: f64 = self.atoms.iter().map(|a| a.weight.norm() * (c * a.beta.abs()).exp()).sum();
        if !m.is_finite() {
            return Err(Error::Range(format!("moment at C = {c} is not finite")));
        }
        Ok(m)
    }

    pub fn records(&self) -> Vec<AtomRecord> {
        self.atoms.iter().copied().map(AtomRecord::from).collect()
    }

    pub fn from_records(records: &[AtomRecord]) -> Self {
        Self {
            atoms: records.iter().copied().map(Atom::from).collect(),
            name: None,
        }
    }

    /// Parses one atom per line, `beta weight_re weight_im`. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut atoms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(format!(
                    "expected `beta weight_re weight_im`, found {} fields",
                    fields.len()
                )));
            }
            let mut vals = [0.0; 3];
            for (v, f) in vals.iter_mut().zip(&fields) {
                *v = f
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("bad number `{f}`: {e}")))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("non-finite value `{f}`")));
                }
            }
            atoms.push(Atom {
                beta: vals[0],
                weight: Complex64::new(vals[1], vals[2]),
            });
        }
        Ok(Self { atoms, name: None })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# beta weight_re weight_im\n");
        for a in &self.atoms {
            out.push_str(&format!("{:e} {:e} {:e}\n", a.beta, a.weight.re, a.weight.im));
        }
        out
    }
}

/// `V(x) = Σ w_j exp(β_j x)`.
pub fn potential_eval(m: &AtomicMeasure, x: f64) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, a) in m.atoms.iter().enumerate() {
        let arg = a.beta * x;
        if arg.abs() > EXP_LIMIT {
            return Err(Error::Range(format!(
                "atom {j} (beta = {}) overflows at x = {x}",
                a.beta
            )));
        }
        acc += a.weight * arg.exp();
    }
    Ok(acc)
}

/// `V̂ = V(p1 / (m0 R))`.
pub fn potential_at_final_momentum(params: &PhysParams, m: &AtomicMeasure) -> Result<Complex64> {
    potential_eval(m, params.p1 / (params.m0 * params.radius))
}

fn window_integral(params: &PhysParams, phi: &GridFunction) -> Result<Complex64> {
    if phi.components() != 2 {
        return Err(Error::Dimension("test function must have two components".into()));
    }
    let w = indicator(phi.grid(), 2, params.t0, params.t, 1)?;
    inner_product(phi, &w)
}

/// `G_n = exp(p1/(m0R) Σβ_j) · exp((E/Δ) ∫_{t0}^{t} φ_p · Σ β_j (t - s_j))`.
pub fn g_n_eval(params: &PhysParams, phi: &GridFunction, s_list: &[f64], beta_list: &[f64]) -> Result<Complex64> {
    if s_list.len() != beta_list.len() {
        return Err(Error::Dimension(format!(
            "{} times but {} betas",
            s_list.len(),
            beta_list.len()
        )));
    }
    if let Some(s) = s_list.iter().find(|&&s| !(s >= params.t0 && s <= params.t)) {
        return Err(Error::Domain(format!("time {s} outside [{}, {}]", params.t0, params.t)));
    }
    if s_list.is_empty() {
        return Ok(ONE);
    }
    let integral = window_integral(params, phi)?;
    let sum_beta: f64 = beta_list.iter().sum();
    let weighted: f64 = s_list.iter().zip(beta_list).map(|(s, b)| b * (params.t - s)).sum();
    let first = params.p1 / (params.m0 * params.radius) * sum_beta;
    Ok((first + params.e_coef() / params.delta() * integral * weighted).exp())
}

/// `C = |p1|/(m0R) + E sqrt(Δ) ‖φ_p 1_[t0,t)‖`.
pub fn g_n_bound_constant(params: &PhysParams, phi: &GridFunction) -> Result<f64> {
    if phi.components() != 2 {
        return Err(Error::Dimension("test function must have two components".into()));
    }
    let w = indicator(phi.grid(), 2, params.t0, params.t, 1)?;
    let norm = l2_norm(&phi.mul(&w)?);
    Ok(params.p1.abs() / (params.m0 * params.radius) + params.e_coef() * params.delta().sqrt() * norm)
}

/// `Π_j exp(C |β_j|)` with `C` from [`g_n_bound_constant`].
pub fn g_n_bound(params: &PhysParams, phi: &GridFunction, beta_list: &[f64]) -> Result<f64> {
    let c = g_n_bound_constant(params, phi)?;
    Ok((c * beta_list.iter().map(|b| b.abs()).sum::<f64>()).exp())
}

/// Truncation data for a partial sum of `exp(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesReport {
    pub x: Complex64,
    pub order: usize,
    /// `|x|^{N+1}/(N+1)! · e^{|x|}`.
    pub remainder_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPropagator {
    pub value: PropagatorValue,
    pub report: SeriesReport,
}

/// `Σ_{n <= N} x^n / n!`.
pub fn exp_partial_sum(x: Complex64, order: usize) -> Complex64 {
    let mut term = ONE;
    let mut acc = ONE;
    for n in 1..=order {
        term *= x / n as f64;
        acc += term;
    }
    acc
}

/// All partial sums `N = 0..=order`.
pub fn exp_partial_sums(x: Complex64, order: usize) -> Vec<Complex64> {
    let mut term = ONE;
    let mut acc = ONE;
    let mut out = Vec::with_capacity(order + 1);
    out.push(acc);
    for n in 1..=order {
        term *= x / n as f64;
        acc += term;
        out.push(acc);
    }
    out
}

pub fn remainder_bound(abs_x: f64, order: usize) -> f64 {
    let mut t = 1.0;
    for k in 1..=order + 1 {
        t *= abs_x / k as f64;
    }
    t * abs_x.exp()
}

/// Free phase `exp(-i p0² Δ / (2 m0 ħ))`.
pub fn free_phase(params: &PhysParams) -> Complex64 {
    (-I * params.p0 * params.p0 * params.delta() / (2.0 * params.m0 * params.hbar)).exp()
}

/// Expansion variable `x = (-i/ħ) Δ V̂`.
pub fn series_variable(params: &PhysParams, m: &AtomicMeasure) -> Result<Complex64> {
    Ok(-I * params.delta() / params.hbar * potential_at_final_momentum(params, m)?)
}

pub fn series_propagator(params: &PhysParams, m: &AtomicMeasure, order: usize) -> Result<SeriesPropagator> {
    let x = series_variable(params, m)?;
    Ok(SeriesPropagator {
        value: PropagatorValue {
            delta_arg: params.p1 - params.p0,
            phase: free_phase(params) * exp_partial_sum(x, order),
            comb: None,
        },
        report: SeriesReport {
            x,
            order,
            remainder_bound: remainder_bound(x.norm(), order),
        },
    })
}

/// `δ(p1 - p0) exp{-(i/ħ) Δ [p0²/(2m0) + V̂]}`.
pub fn closed_form_propagator(params: &PhysParams, m: &AtomicMeasure) -> Result<PropagatorValue> {
    let v = potential_at_final_momentum(params, m)?;
    Ok(PropagatorValue {
        delta_arg: params.p1 - params.p0,
        phase: free_phase(params) * (-I * params.delta() / params.hbar * v).exp(),
        comb: None,
    })
}

/// `exp(Δ · moment(C) / ħ)`. Dominates every normalized partial sum as soon
/// as `C >= |p1|/(m0R)` (and, with a test function, `C` from
/// [`g_n_bound_constant`]).
pub fn series_global_bound(params: &PhysParams, m: &AtomicMeasure, c: f64) -> Result<f64> {
    if !(c >= 0.0) {
        return Err(Error::Domain(format!("C must be nonnegative, got {c}")));
    }
    Ok((params.delta() * m.moment(c)? / params.hbar).exp())
}

/// `Y = ∫dm(β) e^{βp1/(m0R)} ∫_{t0}^{t} e^{κβ(t-s)} ds` with
/// `κ = (E/Δ) ∫ φ_p`: the time-and-measure integral of `G_1`. Since `G_n`
/// factorizes over its arguments, the n-th term of the series is `Yⁿ`.
pub fn smeared_potential(params: &PhysParams, m: &AtomicMeasure, phi: &GridFunction) -> Result<Complex64> {
    let kappa = params.e_coef() / params.delta() * window_integral(params, phi)?;
    let dl = params.delta();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, a) in m.atoms.iter().enumerate() {
        let lead = a.beta * params.p1 / (params.m0 * params.radius);
        let z = kappa * a.beta * dl;
        if lead.abs() > EXP_LIMIT || z.re.abs() > EXP_LIMIT {
            return Err(Error::Range(format!("atom {j} (beta = {}) overflows", a.beta)));
        }
        // (e^z - 1)/z · Δ, with the series near z = 0
        let h = if z.norm() < 1e-5 {
            dl * (ONE + z / 2.0 + z * z / 6.0)
        } else {
            dl * (z.exp() - ONE) / z
        };
        acc += a.weight * lead.exp() * h;
    }
    Ok(acc)
}

/// Partial sum `Σ_{n <= N} (-i/ħ)ⁿ/n! Yⁿ` of `T I_V(φ) / T I_0(φ)`.
pub fn series_with_test_function(
    params: &PhysParams,
    m: &AtomicMeasure,
    phi: &GridFunction,
    order: usize,
) -> Result<Complex64> {
    let y = smeared_potential(params, m, phi)?;
    Ok(exp_partial_sum(-I / params.hbar * y, order))
}

/// Parameters of the measure `g δ_{bα}` that reproduces the bound-state
/// flux potential when `α = k/n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ABReduction {
    pub k: i64,
    pub n: i64,
    pub coupling: f64,
    pub b: f64,
    pub big_b: f64,
}

impl ABReduction {
    pub fn alpha_frac(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Flux effects are visible iff `k/n` is not an integer.
    pub fn detectable(&self) -> bool {
        self.k % self.n != 0
    }
}

pub fn make_ab_reduction(params: &PhysParams, k: i64, n: i64) -> Result<ABReduction> {
    if k == 0 || n == 0 {
        return Err(Error::Domain(format!("k and n must be nonzero, got k = {k}, n = {n}")));
    }
    if params.p1 == 0.0 {
        return Err(Error::Degenerate("B is undefined for p1 = 0".into()));
    }
    let big_b = k as f64 * params.hbar * params.p1 / (n as f64 * params.c * params.m0 * params.radius);
    Ok(ABReduction {
        k,
        n,
        coupling: 1.0,
        b: 1.0 + 1.0 / big_b,
        big_b,
    })
}

/// `g - (g b k/n) θ̇`.
pub fn first_order_potential(red: &ABReduction, theta_dot: f64) -> f64 {
    red.coupling - red.coupling * red.b * red.alpha_frac() * theta_dot
}

/// Split of the first-order potential at `θ̇ = p1/(m0R)` into a part linear
/// in `θ̇` and a constant, `(linear_coefficient, constant)`. The constant is
/// `g - g c/ħ`.
pub fn first_order_matching(red: &ABReduction, params: &PhysParams) -> (f64, f64) {
    let td = params.p1 / (params.m0 * params.radius);
    let constant = red.coupling * (1.0 - params.c / params.hbar);
    ((first_order_potential(red, td) - constant) / td, constant)
}

/// Sign of the exponent in `g exp(± b (k/n) θ̇)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentSign {
    /// `exp(+bαθ̇)`, the form that enters the propagator.
    Plus,
    /// `Σ (-1)^j/j! (bαθ̇)^j`, the alternating expansion.
    Minus,
}

impl ExponentSign {
    fn factor(self) -> f64 {
        match self {
            ExponentSign::Plus => 1.0,
            ExponentSign::Minus => -1.0,
        }
    }
}

/// The measure `g δ_{± b k/n}`.
pub fn reduction_measure(red: &ABReduction, sign: ExponentSign) -> AtomicMeasure {
    AtomicMeasure::point(sign.factor() * red.b * red.alpha_frac(), Complex64::new(red.coupling, 0.0))
        .with_name("ab-reduction")
}

/// Order-`J` partial sum `g Σ_{j <= J} (±b k/n θ̇)^j / j!`.
pub fn potential_series(red: &ABReduction, theta_dot: f64, order: usize, sign: ExponentSign) -> f64 {
    let x = sign.factor() * red.b * red.alpha_frac() * theta_dot;
    red.coupling * exp_partial_sum(Complex64::new(x, 0.0), order).re
}

/// `g exp(b k ħ θ̇ / (n c))`.
pub fn potential_scaled_flux(red: &ABReduction, params: &PhysParams, theta_dot: f64) -> f64 {
    red.coupling * (red.b * red.alpha_frac() * params.hbar / params.c * theta_dot).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TimeGrid;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn potential_examples() {
        let one = AtomicMeasure::point(0.0, c(1.0));
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(potential_eval(&one, x).unwrap(), c(1.0));
        }
        let ch = AtomicMeasure::from_atoms([(1.0, c(0.5)), (-1.0, c(0.5))]);
        assert!((potential_eval(&ch, 0.7).unwrap().re - 0.7f64.cosh()).abs() < 1e-15);
        let err = potential_eval(&AtomicMeasure::from_atoms([(0.0, c(1.0)), (800.0, c(1.0))]), 1.0).unwrap_err();
        assert!(err.to_string().contains("atom 1"));
    }

    #[test]
    fn measure_text_round_trip() {
        let m = AtomicMeasure::from_atoms([(0.5, Complex64::new(1.0, -0.25)), (-2.0, c(3.0))]);
        assert_eq!(AtomicMeasure::parse(&m.to_text()).unwrap(), m);
        let text = "# header\n\n0 1 0\n1.5 2 x\n";
        match AtomicMeasure::parse(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(AtomicMeasure::parse("1 2"), Err(Error::Parse { line: 1, .. })));
        assert!(AtomicMeasure::parse("# nothing\n").unwrap().is_empty());
    }

    #[test]
    fn g_n_examples() {
        let p = PhysParams { p1: 0.8, ..Default::default() };
        let g = TimeGrid::new(p.t0, p.t, 10).unwrap();
        let phi = GridFunction::from_real_fn(g, 2, |_, s| 1.0 + s);
        assert_eq!(g_n_eval(&p, &phi, &[], &[]).unwrap(), ONE);
        let betas = [0.5, -1.25];
        let lead = (p.p1 * (0.5 - 1.25) / (p.m0 * p.radius)).exp();
        let at_t = g_n_eval(&p, &phi, &[p.t, p.t], &betas).unwrap();
        assert!((at_t.re - lead).abs() < 1e-15 && at_t.im == 0.0);
        let flat = GridFunction::from_real_fn(g, 2, |j, _| if j == 0 { 2.0 } else { 0.0 });
        let v = g_n_eval(&p, &flat, &[0.1, 0.6], &betas).unwrap();
        assert!((v.re - lead).abs() < 1e-15);
        assert!(matches!(g_n_eval(&p, &phi, &[0.1], &betas), Err(Error::Dimension(_))));
        assert!(g_n_eval(&p, &phi, &[1.5], &[1.0]).is_err());

        assert_eq!(g_n_bound(&p, &phi, &[]).unwrap(), 1.0);
        let b0 = g_n_bound(&p, &flat, &betas).unwrap();
        assert!((b0 - (p.p1 * 1.75).exp()).abs() < 1e-13);
    }

    #[test]
    fn series_example_from_unit_potential() {
        let p = PhysParams::default();
        let m = AtomicMeasure::point(0.0, c(1.0));
        let s = series_propagator(&p, &m, 3).unwrap();
        let normalized = s.value.phase / free_phase(&p);
        assert!((normalized - Complex64::new(0.5, -5.0 / 6.0)).norm() < 1e-15);
        let err = (normalized - (-I).exp()).norm();
        assert!((err - 0.0411).abs() < 1e-3, "{err}");
        assert!((s.report.remainder_bound - std::f64::consts::E / 24.0).abs() < 1e-15);
        assert!(err <= s.report.remainder_bound);

        let exact = closed_form_propagator(&p, &m).unwrap();
        let s20 = series_propagator(&p, &m, 20).unwrap();
        assert!((s20.value.phase - exact.phase).norm() < 1e-15);
    }

    #[test]
    fn empty_measure_is_free_particle() {
        let p = PhysParams { p0: 1.3, p1: 1.3, ..Default::default() };
        let m = AtomicMeasure::empty();
        let s = series_propagator(&p, &m, 0).unwrap();
        assert_eq!(s.value.phase, free_phase(&p));
        assert_eq!(closed_form_propagator(&p, &m).unwrap().phase, free_phase(&p));
        assert_eq!(series_global_bound(&p, &m, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn global_bound_examples() {
        let p = PhysParams::default();
        let m = AtomicMeasure::point(0.0, c(1.0));
        for cc in [0.0, 1.0, 7.0] {
            assert!((series_global_bound(&p, &m, cc).unwrap() - std::f64::consts::E).abs() < 1e-15);
        }
        assert!(series_global_bound(&p, &m, -1.0).is_err());
    }

    #[test]
    fn reduction_examples() {
        let p = PhysParams { p1: 2.0, ..Default::default() };
        let r = make_ab_reduction(&p, 1, 3).unwrap();
        assert!((r.big_b - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.b - 2.5).abs() < 1e-15);
        assert!(r.detectable());
        assert!(make_ab_reduction(&p, 1, 2).unwrap().detectable());
        assert!(!make_ab_reduction(&p, 4, 2).unwrap().detectable());
        assert!(!make_ab_reduction(&p, -6, 3).unwrap().detectable());
        assert!(matches!(
            make_ab_reduction(&PhysParams { p1: 0.0, ..p }, 1, 3),
            Err(Error::Degenerate(_))
        ));
        assert!(make_ab_reduction(&p, 1, 0).is_err());

        assert_eq!(first_order_potential(&r, 0.0), r.coupling);
        let (lin, constant) = first_order_matching(&r, &p);
        assert!((lin + 1.0 / 3.0).abs() < 1e-14);
        assert!((constant - 0.0).abs() < 1e-15);
    }

    #[test]
    fn expansion_signs() {
        let p = PhysParams { p1: 0.7, ..Default::default() };
        let r = make_ab_reduction(&p, 1, 3).unwrap();
        for td in [-0.4, 0.1, 0.3] {
            for sign in [ExponentSign::Plus, ExponentSign::Minus] {
                let m = reduction_measure(&r, sign);
                let exact = potential_eval(&m, td).unwrap().re;
                assert!((potential_series(&r, td, 10, sign) - exact).abs() < 1e-7);
            }
            let lin = potential_series(&r, td, 1, ExponentSign::Minus);
            assert!((lin - first_order_potential(&r, td)).abs() < 1e-15);
            let plus = potential_eval(&reduction_measure(&r, ExponentSign::Plus), td).unwrap().re;
            assert!((potential_scaled_flux(&r, &p, td) - plus).abs() < 1e-15);
        }
    }

    #[test]
    fn smeared_potential_without_test_function() {
        let p = PhysParams { p1: 0.5, t: 2.0, a: 0.5, ..Default::default() };
        let g = TimeGrid::new(p.t0, p.t, 8).unwrap();
        let m = AtomicMeasure::from_atoms([(0.4, c(0.3)), (-1.0, Complex64::new(0.2, 0.1))]);
        let y = smeared_potential(&p, &m, &GridFunction::zeros(g, 2)).unwrap();
        let v = potential_at_final_momentum(&p, &m).unwrap();
        assert!((y - v * p.delta()).norm() < 1e-15);
        let s = series_with_test_function(&p, &m, &GridFunction::zeros(g, 2), 30).unwrap();
        let closed = closed_form_propagator(&p, &m).unwrap().phase / free_phase(&p);
        assert!((s - closed).norm() < 1e-14);
    }
}
