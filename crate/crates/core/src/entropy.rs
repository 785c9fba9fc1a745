//! Entropy functions and the dimension objective of a two-column carpet.
//!
//! Everything here is a pure function of its arguments. Logarithms are
//! natural throughout, so `H'(x) = log((1-x)/x)`.

use serde::{Deserialize, Serialize};

use crate::error::{CarpetError, Result};

/// Tolerance on the total mass of a probability vector.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// The five parameters of a Gatzouras-Lalley carpet over the base alphabet `{a, b}`.
///
/// `lambda` is the horizontal log-contraction shared by every map, `psi_a` and
/// `psi_b` the vertical log-contractions over the two rows, and `ell_a`,
/// `ell_b` the number of maps sitting over each row symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarpetSpec {
    pub lambda: f64,
    pub ell_a: u64,
    pub ell_b: u64,
    pub psi_a: f64,
    pub psi_b: f64,
}

impl CarpetSpec {
    pub fn new(lambda: f64, ell_a: u64, ell_b: u64, psi_a: f64, psi_b: f64) -> Result<Self> {
        let spec = Self {
            lambda,
            ell_a,
            ell_b,
            psi_a,
            psi_b,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks positivity and finiteness only; the ordering `lambda > psi` is
    /// left to [`CarpetSpec::validate`].
    pub fn check_structure(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("psi_a", self.psi_a),
            ("psi_b", self.psi_b),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CarpetError::InvalidSpec(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.ell_a == 0 || self.ell_b == 0 {
            return Err(CarpetError::InvalidSpec(format!(
                "ell_a and ell_b must be at least 1, got ({}, {})",
                self.ell_a, self.ell_b
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.check_structure()?;
        if !(self.lambda > self.psi_a && self.lambda > self.psi_b) {
            return Err(CarpetError::InvalidSpec(format!(
                "lambda = {} must exceed both psi_a = {} and psi_b = {}",
                self.lambda, self.psi_a, self.psi_b
            )));
        }
        Ok(())
    }

    pub fn alphabet_size(&self) -> usize {
        (self.ell_a + self.ell_b) as usize
    }

    /// `log(ell_a / ell_b)`.
    pub fn log_ratio(&self) -> f64 {
        (self.ell_a as f64).ln() - (self.ell_b as f64).ln()
    }
}

/// Intermediate constants of the construction: curvature coefficient `B`,
/// majorant height `A`, and the derived `U`, `V`, `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub b_param: f64,
    pub a_param: f64,
    pub u_param: f64,
    pub v_param: f64,
    pub m_param: f64,
}

impl DerivedConstants {
    /// Residuals of `UV = B`, `MV - U = B` and `M = A - B/4`, in that order.
    pub fn identity_residuals(&self) -> [f64; 3] {
        let (a, b, u, v, m) = (
            self.a_param,
            self.b_param,
            self.u_param,
            self.v_param,
            self.m_param,
        );
        [u * v - b, m * v - u - b, m - (a - b / 4.0)]
    }

    /// Coefficients `(c0, c1, c2)` of `-(Ux - M)(1 + Vx)` as a polynomial in `x`.
    pub fn product_coefficients(&self) -> [f64; 3] {
        let (u, v, m) = (self.u_param, self.v_param, self.m_param);
        [m, m * v - u, -u * v]
    }

    /// Coefficients `(c0, c1, c2)` of `A - B(x - 1/2)^2`.
    pub fn majorant_coefficients(&self) -> [f64; 3] {
        let (a, b) = (self.a_param, self.b_param);
        [a - b / 4.0, b, -b]
    }
}

fn check_unit_interval(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(CarpetError::Domain(format!("x = {x} lies outside [0, 1]")))
    }
}

// 0 log 0 = 0
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `H(x) = -x log x - (1-x) log(1-x)`, extended by continuity to `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    Ok(-xlogx(x) - xlogx(1.0 - x))
}

/// `H'(x) = log((1-x)/x)`; infinite at the endpoints.
pub fn binary_entropy_derivative(x: f64) -> Result<f64> {
    check_unit_interval(x)?;
    Ok((1.0 - x).ln() - x.ln())
}

/// Shannon entropy `-sum p_i log p_i` of a probability vector, in nats.
pub fn shannon_entropy(p: &[f64]) -> Result<f64> {
    check_probability_vector(p)?;
    Ok(-p.iter().copied().map(xlogx).sum::<f64>())
}

pub fn check_probability_vector(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(CarpetError::Domain("empty probability vector".into()));
    }
    if let Some((i, v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        return Err(CarpetError::Domain(format!(
            "component {i} = {v} is not a nonnegative number"
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(CarpetError::Domain(format!(
            "components sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Vertical Lyapunov exponent `psi_a x + psi_b (1 - x)` of the row marginal.
fn vertical_exponent(x: f64, spec: &CarpetSpec) -> f64 {
    spec.psi_a * x + spec.psi_b * (1.0 - x)
}

/// The dimension objective
///
/// `f(x) = (log(ell_a/ell_b) x + log ell_b) / lambda + H(x) / (psi_a x + psi_b (1-x))`,
///
/// the value of the pressure functional at the Bernoulli measure giving mass
/// `x` to row `a` and spreading it uniformly over the columns.
pub fn objective_f(x: f64, spec: &CarpetSpec) -> Result<f64> {
    spec.validate()?;
    let h = binary_entropy(x)?;
    Ok(objective_unchecked(x, h, spec))
}

pub(crate) fn objective_unchecked(x: f64, h: f64, spec: &CarpetSpec) -> f64 {
    (spec.log_ratio() * x + (spec.ell_b as f64).ln()) / spec.lambda
        + h / vertical_exponent(x, spec)
}

/// Analytic `d f / d x` on the open interval `(0, 1)`.
pub fn objective_f_derivative(x: f64, spec: &CarpetSpec) -> Result<f64> {
    spec.validate()?;
    if !(x > 0.0 && x < 1.0) {
        return Err(CarpetError::Domain(format!(
            "derivative of f requires 0 < x < 1, got {x}"
        )));
    }
    let h = binary_entropy(x)?;
    let dh = binary_entropy_derivative(x)?;
    let d = vertical_exponent(x, spec);
    let dd = spec.psi_a - spec.psi_b;
    Ok(spec.log_ratio() / spec.lambda + (dh * d - h * dd) / (d * d))
}

/// `g(x) = U x - M + H(x) / (1 + V x)`.
pub fn gap_g(x: f64, consts: &DerivedConstants) -> Result<f64> {
    let h = binary_entropy(x)?;
    let denom = 1.0 + consts.v_param * x;
    if denom <= 0.0 {
        return Err(CarpetError::Domain(format!(
            "1 + Vx = {denom} is not positive at x = {x}"
        )));
    }
    Ok(consts.u_param * x - consts.m_param + h / denom)
}

/// Analytic `d g / d x` on `(0, 1)`.
pub fn gap_g_derivative(x: f64, consts: &DerivedConstants) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(CarpetError::Domain(format!(
            "derivative of g requires 0 < x < 1, got {x}"
        )));
    }
    let h = binary_entropy(x)?;
    let dh = binary_entropy_derivative(x)?;
    let denom = 1.0 + consts.v_param * x;
    if denom <= 0.0 {
        return Err(CarpetError::Domain(format!(
            "1 + Vx = {denom} is not positive at x = {x}"
        )));
    }
    Ok(consts.u_param + (dh * denom - h * consts.v_param) / (denom * denom))
}

/// Quadratic majorant `F(x) = A - B (x - 1/2)^2`.
pub fn majorant_f(x: f64, a_param: f64, b_param: f64) -> f64 {
    let t = x - 0.5;
    a_param - b_param * t * t
}

/// Curvature `|h''| / (1 + h'^2)^{3/2}` of a graph, from derivative values.
pub fn curvature(second_deriv: f64, first_deriv: f64) -> f64 {
    second_deriv.abs() / (1.0 + first_deriv * first_deriv).powf(1.5)
}

/// Two-term pressure functional at the Bernoulli measure with weights `p`.
///
/// The first `ell_a` components sit over row `a`, the remaining `ell_b` over
/// row `b`. With `x` the total `a`-mass the value is
/// `(h(p) - H(x)) / lambda + H(x) / (psi_a x + psi_b (1-x))`.
pub fn pressure_bernoulli(p: &[f64], spec: &CarpetSpec) -> Result<f64> {
    spec.validate()?;
    let n = spec.alphabet_size();
    if p.len() != n {
        return Err(CarpetError::DimensionMismatch {
            expected: n,
            got: p.len(),
        });
    }
    check_probability_vector(p)?;
    Ok(pressure_unchecked(p, spec))
}

/// Pressure functional without validating `p`; the row mass is the sum of the
/// first `ell_a` components and the weights are not renormalized.
pub(crate) fn pressure_unchecked(p: &[f64], spec: &CarpetSpec) -> f64 {
    let h_full = -p.iter().copied().map(xlogx).sum::<f64>();
    let x = p[..spec.ell_a as usize].iter().sum::<f64>().clamp(0.0, 1.0);
    let h_row = -xlogx(x) - xlogx(1.0 - x);
    (h_full - h_row) / spec.lambda + h_row / vertical_exponent(x, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn example_one() -> (CarpetSpec, DerivedConstants) {
        let b = 3.0 * LN_2;
        let a = 3f64.ln() - 7.0 / 12.0 * LN_2;
        let v = (2.0 * b + 4.0 * (a * b).sqrt()) / (4.0 * a - b);
        let u = (a * b).sqrt() - b / 2.0;
        let lambda = 150f64.ln() * v / b;
        (
            CarpetSpec::new(lambda, 150, 1, 1.0 + v, 1.0).unwrap(),
            DerivedConstants {
                b_param: b,
                a_param: a,
                u_param: u,
                v_param: v,
                m_param: a - b / 4.0,
            },
        )
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - LN_2).abs() < 1e-15);
        let third: f64 = 1.0 / 3.0;
        let direct = -(third * third.ln()) - (2.0 * third) * (2.0 * third).ln();
        let closed = third * 3f64.ln() + 2.0 / 3.0 * 1.5f64.ln();
        let h = binary_entropy(third).unwrap();
        assert!((h - direct).abs() < 1e-15);
        assert!((h - closed).abs() < 1e-15);
        assert!((h - 0.6365142).abs() < 1e-7);
    }

    #[test]
    fn binary_entropy_rejects_outside_unit_interval() {
        assert!(matches!(binary_entropy(-1e-9), Err(CarpetError::Domain(_))));
        assert!(matches!(binary_entropy(1.0 + 1e-9), Err(CarpetError::Domain(_))));
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn shannon_entropy_values() {
        assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!((shannon_entropy(&[0.5, 0.5]).unwrap() - LN_2).abs() < 1e-15);
        assert!((shannon_entropy(&[0.25; 4]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert!((4f64.ln() - 1.3862944).abs() < 1e-7);
    }

    #[test]
    fn shannon_entropy_rejects_bad_vectors() {
        assert!(shannon_entropy(&[0.6, 0.6]).is_err());
        assert!(shannon_entropy(&[1.5, -0.5]).is_err());
        assert!(shannon_entropy(&[]).is_err());
    }

    #[test]
    fn objective_on_example_one() {
        let (spec, _) = example_one();
        assert_eq!(objective_f(0.0, &spec).unwrap(), 0.0);
        let at_one = objective_f(1.0, &spec).unwrap();
        assert!((at_one - 150f64.ln() / 30.9636922).abs() < 1e-8);
        assert!((at_one - 0.1618229).abs() < 1e-7);
        let at_third = objective_f(1.0 / 3.0, &spec).unwrap();
        assert!((at_third - 0.1744160).abs() < 1e-7);
    }

    #[test]
    fn objective_matches_dense_grid_oracle() {
        // Independent evaluation of the objective formula, maximized on a dense grid.
        let (spec, _) = example_one();
        let lam = spec.lambda;
        let (psi_a, psi_b) = (spec.psi_a, spec.psi_b);
        let oracle = |x: f64| {
            let h = if x <= 0.0 || x >= 1.0 {
                0.0
            } else {
                -x * x.ln() - (1.0 - x) * (1.0 - x).ln()
            };
            150f64.ln() * x / lam + h / (psi_a * x + psi_b * (1.0 - x))
        };
        let n = 300_000;
        let best = (0..=n)
            .map(|i| oracle(i as f64 / n as f64))
            .fold(f64::MIN, f64::max);
        assert!((objective_f(1.0 / 3.0, &spec).unwrap() - best).abs() < 1e-9);
    }

    #[test]
    fn objective_requires_valid_spec() {
        let bad = CarpetSpec {
            lambda: 1.0,
            ell_a: 2,
            ell_b: 1,
            psi_a: 2.0,
            psi_b: 0.5,
        };
        assert!(matches!(objective_f(0.3, &bad), Err(CarpetError::InvalidSpec(_))));
        assert!(CarpetSpec::new(1.0, 0, 1, 0.5, 0.5).is_err());
        assert!(CarpetSpec::new(1.0, 1, 1, -0.5, 0.5).is_err());
    }

    #[test]
    fn gap_on_example_one() {
        let (_, c) = example_one();
        let at_zero = gap_g(0.0, &c).unwrap();
        let printed_m = 0.69427643 - 3.0 * LN_2 / 4.0;
        assert!((at_zero + printed_m).abs() < 1e-8);
        assert!(gap_g(1.0 / 3.0, &c).unwrap().abs() < 1e-10);
        assert!(gap_g(0.5, &c).unwrap() < 0.0);
    }

    #[test]
    fn gap_rejects_nonpositive_denominator() {
        let c = DerivedConstants {
            b_param: 3.0,
            a_param: 1.0,
            u_param: 1.0,
            v_param: -2.0,
            m_param: 0.0,
        };
        assert!(matches!(gap_g(0.75, &c), Err(CarpetError::Domain(_))));
    }

    #[test]
    fn majorant_values() {
        assert_eq!(majorant_f(0.5, 0.7, 3.0), 0.7);
        assert_eq!(majorant_f(0.0, 1.0, 2.0), 0.5);
        let (_, c) = example_one();
        let third = 1.0 / 3.0;
        assert!(
            (majorant_f(third, c.a_param, c.b_param) - binary_entropy(third).unwrap()).abs()
                < 1e-10
        );
    }

    #[test]
    fn curvature_values() {
        assert_eq!(curvature(-4.0, 0.0), 4.0);
        let b = 3.0 * LN_2;
        assert_eq!(curvature(-2.0 * b, 0.0), 2.0 * b);
        assert_eq!(curvature(0.0, 17.0), 0.0);
    }

    #[test]
    fn pressure_uniform_vector_closed_form() {
        let spec = CarpetSpec::new(4.0, 3, 2, 3.0, 1.0).unwrap();
        let p = [0.2; 5];
        let x: f64 = 0.6;
        let hx = -x * x.ln() - (1.0 - x) * (1.0 - x).ln();
        let expected = (5f64.ln() - hx) / 4.0 + hx / (3.0 * x + (1.0 - x));
        assert!((pressure_bernoulli(&p, &spec).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn pressure_with_uniform_conditionals_equals_objective() {
        let spec = CarpetSpec::new(4.0, 3, 2, 3.0, 1.0).unwrap();
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.81, 1.0] {
            let p = [x / 3.0, x / 3.0, x / 3.0, (1.0 - x) / 2.0, (1.0 - x) / 2.0];
            let lhs = pressure_bernoulli(&p, &spec).unwrap();
            let rhs = objective_f(x, &spec).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "x = {x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn pressure_of_point_mass_is_zero() {
        let spec = CarpetSpec::new(4.0, 3, 2, 3.0, 1.0).unwrap();
        let p = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(pressure_bernoulli(&p, &spec).unwrap(), 0.0);
        assert!(objective_f(1.0, &spec).unwrap() > 0.0);
    }

    #[test]
    fn pressure_rejects_wrong_length() {
        let spec = CarpetSpec::new(4.0, 3, 2, 3.0, 1.0).unwrap();
        assert_eq!(
            pressure_bernoulli(&[0.5, 0.5], &spec),
            Err(CarpetError::DimensionMismatch {
                expected: 5,
                got: 2
            })
        );
    }

    #[test]
    fn majorant_identity_example_one() {
        let (_, c) = example_one();
        let lhs = c.product_coefficients();
        let rhs = c.majorant_coefficients();
        for i in 0..3 {
            assert!((lhs[i] - rhs[i]).abs() < 1e-12);
        }
        for r in c.identity_residuals() {
            assert!(r.abs() < 1e-12);
        }
    }
}
