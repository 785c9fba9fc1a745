//! Synthesis of a two-maxima carpet from a single curvature coefficient `B > 2`.
//!
//! Pipeline: `A` from the maximum of `rho(x) = B(x - 1/2)^2 + H(x)`, then the
//! positive root `V`, then `U` and `M`, then `psi_b = 1`, `psi_a = 1 + V`, an
//! alphabet `(ell_a, ell_b)` with `log(ell_a/ell_b) > (1+V)B/V`, and finally
//! `lambda = log(ell_a/ell_b) V / B`.

use serde::{Deserialize, Serialize};

use crate::entropy::{binary_entropy, CarpetSpec, DerivedConstants};
use crate::error::{CarpetError, Result};
use crate::numeric::bisect;

/// The alphabet used by the worked example: 150 maps over `a`, one over `b`.
pub const PAPER_ALPHABET: (u64, u64) = (150, 1);

/// Slack for the algebraic self-checks of a synthesized set, relative to the
/// size of the quantities involved.
const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum AlphabetStrategy {
    PaperPreset,
    Minimal,
    Explicit { ell_a: u64, ell_b: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructionOptions {
    pub alphabet_strategy: AlphabetStrategy,
    pub root_tolerance: f64,
    pub grid_points: usize,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        Self {
            alphabet_strategy: AlphabetStrategy::PaperPreset,
            root_tolerance: 1e-12,
            grid_points: 4096,
        }
    }
}

impl ConstructionOptions {
    pub fn with_strategy(alphabet_strategy: AlphabetStrategy) -> Self {
        Self {
            alphabet_strategy,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.root_tolerance > 0.0 && self.root_tolerance <= 1e-6) {
            return Err(CarpetError::InvalidOptions(format!(
                "root_tolerance must lie in (0, 1e-6], got {}",
                self.root_tolerance
            )));
        }
        if self.grid_points < 64 {
            return Err(CarpetError::InvalidOptions(format!(
                "grid_points must be at least 64, got {}",
                self.grid_points
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityMargins {
    pub lambda_exceeds_psi: f64,
    pub horizontal_fit: f64,
    pub vertical_fit: f64,
    pub alphabet_inequality: f64,
    pub lambda_exceeds_1_plus_v: f64,
}

/// Outcome of every feasibility inequality; a margin is `bound - attained`,
/// positive when the check passes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub lambda_exceeds_psi: bool,
    pub horizontal_fit: bool,
    pub vertical_fit: bool,
    pub alphabet_inequality: bool,
    pub lambda_exceeds_1_plus_v: bool,
    pub all_pass: bool,
    pub margins: FeasibilityMargins,
}

/// A synthesized parameter set together with its feasibility report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Construction {
    pub spec: CarpetSpec,
    pub constants: DerivedConstants,
    pub feasibility: FeasibilityReport,
    /// Maximizer of `rho` in `(0, 1/2]`; `1 - argmax` is the mirror maximizer.
    pub rho_argmax: f64,
}

/// `rho(x) = B (x - 1/2)^2 + H(x)`.
pub fn rho(x: f64, b_param: f64) -> f64 {
    let t = x - 0.5;
    b_param * t * t + binary_entropy(x.clamp(0.0, 1.0)).unwrap_or(0.0)
}

/// `rho'(x) = 2B (x - 1/2) + log((1-x)/x)` on `(0, 1)`.
pub fn rho_derivative(x: f64, b_param: f64) -> f64 {
    2.0 * b_param * (x - 0.5) + (1.0 - x).ln() - x.ln()
}

/// Majorant height `A = max_{[0,1]} rho` and its maximizer in `(0, 1/2)`.
pub fn compute_a(b_param: f64, opts: &ConstructionOptions) -> Result<(f64, f64)> {
    check_curvature(b_param)?;
    maximize_rho(b_param, opts)
}

fn check_curvature(b_param: f64) -> Result<()> {
    if b_param.is_finite() && b_param > 2.0 {
        Ok(())
    } else {
        Err(CarpetError::CurvatureConditionViolated { b: b_param })
    }
}

/// Maximizes `rho` without the `B > 2` guard. For `B <= 2` the function is
/// concave and the maximum sits at `1/2`.
fn maximize_rho(b_param: f64, opts: &ConstructionOptions) -> Result<(f64, f64)> {
    opts.validate()?;
    if !(b_param.is_finite() && b_param > 0.0) {
        return Err(CarpetError::Domain(format!(
            "B must be positive and finite, got {b_param}"
        )));
    }
    // rho' runs from +inf at 0 to 0 at 1/2; for B > 2 it dips below zero first.
    let n = opts.grid_points;
    let node = |i: usize| 0.5 * i as f64 / n as f64;
    let mut prev = node(1);
    let mut bracket = None;
    for i in 2..n {
        let x = node(i);
        if rho_derivative(x, b_param) < 0.0 {
            bracket = Some((prev, x));
            break;
        }
        prev = x;
    }
    let argmax = match bracket {
        Some((lo, hi)) => bisect(lo, hi, opts.root_tolerance, |x| rho_derivative(x, b_param))
            .ok_or_else(|| CarpetError::Construction("bisection on rho' lost its bracket".into()))?,
        None if b_param <= 2.0 => 0.5,
        None => {
            return Err(CarpetError::Construction(format!(
                "no sign change of rho' found on a {n}-point scan for B = {b_param}; \
                 increase grid_points"
            )))
        }
    };
    Ok((rho(argmax, b_param), argmax))
}

/// Positive root of `(A - B/4) V^2 - B V - B = 0`.
pub fn compute_v(a_param: f64, b_param: f64) -> Result<f64> {
    check_positive(a_param, b_param)?;
    let denom = 4.0 * a_param - b_param;
    if denom.abs() < 1e-14 {
        return Err(CarpetError::DegenerateDenominator(denom));
    }
    if denom < 0.0 {
        return Err(CarpetError::Construction(format!(
            "4A - B = {denom} is negative; the quadratic has no positive root"
        )));
    }
    let v = (2.0 * b_param + 4.0 * (a_param * b_param).sqrt()) / denom;
    let lead = a_param - b_param / 4.0;
    let residual = lead * v * v - b_param * v - b_param;
    let scale = 1.0 + lead * v * v + b_param * v + b_param;
    if !(v > 0.0) || residual.abs() > IDENTITY_TOL * scale {
        return Err(CarpetError::Construction(format!(
            "V = {v} leaves quadratic residual {residual:e}"
        )));
    }
    Ok(v)
}

/// `U = sqrt(AB) - B/2`, cross-checked against `U V = B`.
pub fn compute_u(a_param: f64, b_param: f64) -> Result<f64> {
    check_positive(a_param, b_param)?;
    let u = (a_param * b_param).sqrt() - b_param / 2.0;
    let v = compute_v(a_param, b_param)?;
    if (u * v - b_param).abs() > IDENTITY_TOL * b_param.max(1.0) {
        return Err(CarpetError::Construction(format!(
            "UV = {} differs from B = {b_param}",
            u * v
        )));
    }
    Ok(u)
}

fn check_positive(a_param: f64, b_param: f64) -> Result<()> {
    if a_param.is_finite() && b_param.is_finite() && a_param > 0.0 && b_param > 0.0 {
        Ok(())
    } else {
        Err(CarpetError::Domain(format!(
            "A and B must be positive, got A = {a_param}, B = {b_param}"
        )))
    }
}

/// Lower bound `(1+V)B/V` that `log(ell_a/ell_b)` must strictly exceed.
pub fn alphabet_bound(v_param: f64, b_param: f64) -> f64 {
    (1.0 + v_param) * b_param / v_param
}

pub fn choose_alphabet(v_param: f64, b_param: f64, strategy: AlphabetStrategy) -> Result<(u64, u64)> {
    if !(v_param.is_finite() && v_param > 0.0) {
        return Err(CarpetError::Domain(format!("V must be positive, got {v_param}")));
    }
    let bound = alphabet_bound(v_param, b_param);
    let check = |ell_a: u64, ell_b: u64| {
        let attained = (ell_a as f64).ln() - (ell_b as f64).ln();
        if ell_a >= 1 && ell_b >= 1 && attained > bound {
            Ok((ell_a, ell_b))
        } else {
            Err(CarpetError::AlphabetInequality {
                ell_a,
                ell_b,
                attained,
                bound,
            })
        }
    };
    match strategy {
        AlphabetStrategy::PaperPreset => check(PAPER_ALPHABET.0, PAPER_ALPHABET.1),
        AlphabetStrategy::Explicit { ell_a, ell_b } => check(ell_a, ell_b),
        AlphabetStrategy::Minimal => {
            if !(bound.is_finite() && bound < 40.0) {
                return Err(CarpetError::Construction(format!(
                    "alphabet bound {bound} needs more than e^40 maps"
                )));
            }
            let mut ell_a = (bound.exp().floor() as u64).max(1);
            while ell_a > 1 && ((ell_a - 1) as f64).ln() > bound {
                ell_a -= 1;
            }
            while (ell_a as f64).ln() <= bound {
                ell_a += 1;
            }
            check(ell_a, 1)
        }
    }
}

/// `lambda = log(ell_a/ell_b) V / B`, which must exceed `1 + V`.
pub fn compute_lambda(ell_a: u64, ell_b: u64, v_param: f64, b_param: f64) -> Result<f64> {
    if ell_a == 0 || ell_b == 0 || !(v_param > 0.0) || !(b_param > 0.0) {
        return Err(CarpetError::Domain(format!(
            "compute_lambda needs positive inputs, got ell = ({ell_a}, {ell_b}), V = {v_param}, B = {b_param}"
        )));
    }
    let lambda = ((ell_a as f64).ln() - (ell_b as f64).ln()) * v_param / b_param;
    if !(lambda > 1.0 + v_param) {
        return Err(CarpetError::Construction(format!(
            "lambda = {lambda} does not exceed 1 + V = {}; the alphabet inequality does not hold",
            1.0 + v_param
        )));
    }
    Ok(lambda)
}

/// Evaluates every feasibility inequality. Failures are reported, not raised.
pub fn validate_feasibility(spec: &CarpetSpec, consts: &DerivedConstants) -> FeasibilityReport {
    let margins = FeasibilityMargins {
        lambda_exceeds_psi: spec.lambda - spec.psi_a.max(spec.psi_b),
        horizontal_fit: 1.0 - 3.0 * (-spec.lambda).exp() * spec.ell_a as f64,
        vertical_fit: 1.0 - ((-spec.psi_a).exp() + (-spec.psi_b).exp()),
        alphabet_inequality: spec.log_ratio() - alphabet_bound(consts.v_param, consts.b_param),
        lambda_exceeds_1_plus_v: spec.lambda - (1.0 + consts.v_param),
    };
    let pass = |m: f64| m > 0.0;
    let lambda_exceeds_psi = pass(margins.lambda_exceeds_psi);
    let horizontal_fit = pass(margins.horizontal_fit);
    let vertical_fit = pass(margins.vertical_fit);
    let alphabet_inequality = pass(margins.alphabet_inequality);
    let lambda_exceeds_1_plus_v = pass(margins.lambda_exceeds_1_plus_v);
    FeasibilityReport {
        lambda_exceeds_psi,
        horizontal_fit,
        vertical_fit,
        alphabet_inequality,
        lambda_exceeds_1_plus_v,
        all_pass: lambda_exceeds_psi
            && horizontal_fit
            && vertical_fit
            && alphabet_inequality
            && lambda_exceeds_1_plus_v,
        margins,
    }
}

/// Runs the full construction for `B > 2`.
pub fn synthesize(b_param: f64, opts: &ConstructionOptions) -> Result<Construction> {
    check_curvature(b_param)?;
    synthesize_inner(b_param, opts)
}

/// The same pipeline with the `B > 2` check removed, for `0 < B <= 2`
/// control experiments. The result is not a counterexample: its objective
/// has a single maximum at `1/2`.
#[doc(hidden)]
pub fn synthesize_without_curvature_guard(
    b_param: f64,
    opts: &ConstructionOptions,
) -> Result<Construction> {
    synthesize_inner(b_param, opts)
}

fn synthesize_inner(b_param: f64, opts: &ConstructionOptions) -> Result<Construction> {
    let (a_param, rho_argmax) = maximize_rho(b_param, opts)?;
    let v_param = compute_v(a_param, b_param)?;
    let u_param = compute_u(a_param, b_param)?;
    let m_param = a_param - b_param / 4.0;
    let constants = DerivedConstants {
        b_param,
        a_param,
        u_param,
        v_param,
        m_param,
    };
    let scale = 1.0 + b_param + v_param;
    if let Some(r) = constants
        .identity_residuals()
        .into_iter()
        .find(|r| !(r.abs() <= IDENTITY_TOL * scale))
    {
        return Err(CarpetError::Construction(format!(
            "derived constants violate their identities (residual {r:e})"
        )));
    }

    let psi_b = 1.0;
    let psi_a = 1.0 + v_param;
    let (ell_a, ell_b) = choose_alphabet(v_param, b_param, opts.alphabet_strategy)?;
    let lambda = compute_lambda(ell_a, ell_b, v_param, b_param)?;
    let spec = CarpetSpec::new(lambda, ell_a, ell_b, psi_a, psi_b)?;
    let feasibility = validate_feasibility(&spec, &constants);
    Ok(Construction {
        spec,
        constants,
        feasibility,
        rho_argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    const B1: f64 = 3.0 * LN_2;

    fn printed_v() -> f64 {
        12.8501046
    }

    #[test]
    fn compute_a_example_one() {
        let (a, x) = compute_a(B1, &ConstructionOptions::default()).unwrap();
        assert!((a - (3f64.ln() - 7.0 / 12.0 * LN_2)).abs() < 1e-12);
        assert!((a - 0.69427643).abs() < 5e-9);
        assert!((x - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rho_derivative_vanishes_at_one_third() {
        // 2 * 3log2 * (-1/6) + log 2 = 0
        assert!(rho_derivative(1.0 / 3.0, B1).abs() < 1e-15);
    }

    #[test]
    fn compute_a_rejects_subcritical() {
        let opts = ConstructionOptions::default();
        assert_eq!(
            compute_a(2.0, &opts),
            Err(CarpetError::CurvatureConditionViolated { b: 2.0 })
        );
        assert!(compute_a(1.0, &opts).is_err());
        assert!(compute_a(f64::NAN, &opts).is_err());
    }

    #[test]
    fn rho_argmax_is_symmetric_and_beats_midpoint() {
        for b in [2.01, 2.3, B1, 3.0, 3.9] {
            let (a, x0) = compute_a(b, &ConstructionOptions::default()).unwrap();
            assert!((rho(x0, b) - rho(1.0 - x0, b)).abs() < 1e-12);
            assert!(a > rho(0.5, b));
            assert!(x0 > 0.0 && x0 < 0.5);
        }
    }

    #[test]
    fn argmax_approaches_half_as_b_decreases() {
        let opts = ConstructionOptions::default();
        let (_, near) = compute_a(2.01, &opts).unwrap();
        let (_, far) = compute_a(3.0, &opts).unwrap();
        assert!((near - 0.5).abs() < (far - 0.5).abs());
    }

    #[test]
    fn options_are_validated() {
        let opts = ConstructionOptions { root_tolerance: 1e-3, ..Default::default() };
        assert!(matches!(compute_a(B1, &opts), Err(CarpetError::InvalidOptions(_))));
        let opts = ConstructionOptions { grid_points: 10, ..Default::default() };
        assert!(matches!(compute_a(B1, &opts), Err(CarpetError::InvalidOptions(_))));
    }

    #[test]
    fn compute_v_values() {
        let a = 3f64.ln() - 7.0 / 12.0 * LN_2;
        let v = compute_v(a, B1).unwrap();
        assert!((v - printed_v()).abs() < 5e-8);
        let v = compute_v(1.0, 1.0).unwrap();
        // (3/4) V^2 - V - 1 = 0
        assert!((0.75 * v * v - v - 1.0).abs() < 1e-14);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn compute_v_rejects_degenerate_denominator() {
        assert!(matches!(compute_v(0.5, 2.0), Err(CarpetError::DegenerateDenominator(_))));
        assert!(matches!(compute_v(0.4, 2.0), Err(CarpetError::Construction(_))));
        assert!(compute_v(-1.0, 2.0).is_err());
    }

    #[test]
    fn compute_u_values() {
        let a = 3f64.ln() - 7.0 / 12.0 * LN_2;
        let u = compute_u(a, B1).unwrap();
        assert!((u - 0.16182292).abs() < 1e-8);
        let v = compute_v(a, B1).unwrap();
        assert!((u * v - B1).abs() < 1e-10);
        let b = 3.0;
        assert!((compute_u(b, b).unwrap() - b / 2.0).abs() < 1e-15);
    }

    #[test]
    fn alphabet_strategies() {
        let v = printed_v();
        let bound = (1.0 + v) * B1 / v;
        assert!((bound - 2.2412645).abs() < 1e-6);
        assert_eq!(
            choose_alphabet(v, B1, AlphabetStrategy::PaperPreset).unwrap(),
            (150, 1)
        );
        // integer scan oracle
        let minimal = (1u64..).find(|&n| (n as f64).ln() > bound).unwrap();
        assert_eq!(minimal, 10);
        assert_eq!(
            choose_alphabet(v, B1, AlphabetStrategy::Minimal).unwrap(),
            (minimal, 1)
        );
        let err = choose_alphabet(v, B1, AlphabetStrategy::Explicit { ell_a: 2, ell_b: 1 })
            .unwrap_err();
        assert!(matches!(err, CarpetError::AlphabetInequality { ell_a: 2, ell_b: 1, .. }));
        assert!(err.to_string().contains("(1+V)B/V"));
    }

    #[test]
    fn paper_preset_fails_when_bound_exceeds_log_150() {
        // With V small the bound (1+V)B/V blows up.
        assert!(choose_alphabet(0.1, 3.0, AlphabetStrategy::PaperPreset).is_err());
    }

    #[test]
    fn compute_lambda_values() {
        let v = printed_v();
        let l150 = compute_lambda(150, 1, v, B1).unwrap();
        assert!((l150 - 30.9636922).abs() < 5e-7);
        let l10 = compute_lambda(10, 1, v, B1).unwrap();
        assert!((l10 - 10f64.ln() * v / B1).abs() < 1e-12);
        assert!((l10 - 14.229).abs() < 1e-3);
        assert!(l150 > 1.0 + v && l10 > 1.0 + v);
        assert!(matches!(
            compute_lambda(2, 1, v, B1),
            Err(CarpetError::Construction(_))
        ));
    }

    #[test]
    fn synthesize_example_one() {
        let c = synthesize(B1, &ConstructionOptions::default()).unwrap();
        assert_eq!((c.spec.ell_a, c.spec.ell_b), (150, 1));
        assert_eq!(c.spec.psi_b, 1.0);
        assert!((c.spec.psi_a - 13.8501046).abs() < 5e-7);
        assert!((c.spec.lambda - 30.9636922).abs() < 5e-7);
        let printed_m = 0.69427643 - B1 / 4.0;
        assert!((c.constants.m_param - printed_m).abs() < 1e-8);
        assert!((c.constants.m_param - 0.1744160).abs() < 1e-7);
        assert!(c.feasibility.all_pass);
    }

    #[test]
    fn synthesize_minimal_at_two_and_a_half() {
        let c = synthesize(2.5, &ConstructionOptions::with_strategy(AlphabetStrategy::Minimal))
            .unwrap();
        assert!(c.feasibility.all_pass, "{:?}", c.feasibility);
        assert_eq!(c.spec.ell_b, 1);
    }

    #[test]
    fn feasibility_example_one_margins() {
        let c = synthesize(B1, &ConstructionOptions::default()).unwrap();
        let m = c.feasibility.margins;
        assert!(m.horizontal_fit > 0.99);
        let vertical = (-c.spec.psi_a).exp() + (-1f64).exp();
        assert!((vertical - 0.3679).abs() < 1e-4);
        assert!((m.vertical_fit - (1.0 - vertical)).abs() < 1e-15);
    }

    #[test]
    fn feasibility_flags_small_lambda() {
        let c = synthesize(B1, &ConstructionOptions::default()).unwrap();
        let mut spec = c.spec;
        spec.lambda = 1.0;
        let r = validate_feasibility(&spec, &c.constants);
        assert!(!r.lambda_exceeds_psi);
        assert!(!r.all_pass);
        assert!(r.margins.lambda_exceeds_psi < 0.0);
    }

    #[test]
    fn unguarded_pipeline_below_two() {
        let opts = ConstructionOptions::with_strategy(AlphabetStrategy::Minimal);
        assert!(synthesize(1.5, &opts).is_err());
        let c = synthesize_without_curvature_guard(1.5, &opts).unwrap();
        assert_eq!(c.rho_argmax, 0.5);
        assert!((c.constants.a_param - LN_2).abs() < 1e-15);
    }
}
