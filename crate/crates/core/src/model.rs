//! The three-component activator-inhibitor reaction system.
//!
//! The activator `u` and the two inhibitors `v`, `w` obey
//!
//! ```text
//! u_t - a1 Δu = σ - b1 u + u^p1 / (v^q1 (w^r1 + c))
//! v_t - a2 Δv =    - b2 v + u^p2 / (v^q2 w^r2)
//! w_t - a3 Δw =    - b3 w + u^p3 / (v^q3 w^r3)
//! ```
//!
//! with zero-flux boundaries. This module owns the coefficients, the pointwise
//! reaction terms and the exponent condition that selects which inhibitor
//! controls the activator's self-production.

use crate::error::{Error, Result};

/// Unvalidated coefficient record, as read from a config or a C caller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    /// Diffusion coefficients `a1, a2, a3`.
    pub a: [f64; 3],
    /// Linear decay rates `b1, b2, b3`.
    pub b: [f64; 3],
    /// Constant activator source.
    pub sigma: f64,
    /// Saturation constant in the activator denominator.
    pub c: f64,
    /// Activator exponents in the three numerators.
    pub p: [f64; 3],
    /// `v` exponents in the three denominators.
    pub q: [f64; 3],
    /// `w` exponents in the three denominators.
    pub r: [f64; 3],
}

/// How strictly coefficients are checked.
///
/// `Strict` is the admissible class of the global existence result:
/// `a_i, b_i, σ > 0`. `Relaxed` additionally allows `σ = 0` and `b_i = 0`,
/// which the calibration problems (pure ODE blow-up, pure decay) need.
/// Parameters outside the strict class can be simulated but not certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Admissibility {
    #[default]
    Strict,
    Relaxed,
}

/// Validated model coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmParams {
    raw: RawParams,
    admissibility: Admissibility,
}

const A_NAMES: [&str; 3] = ["a1", "a2", "a3"];
const B_NAMES: [&str; 3] = ["b1", "b2", "b3"];
const P_NAMES: [&str; 3] = ["p1", "p2", "p3"];
const Q_NAMES: [&str; 3] = ["q1", "q2", "q3"];
const R_NAMES: [&str; 3] = ["r1", "r2", "r3"];

impl RawParams {
    /// Strict validation. No value is ever clamped.
    pub fn validate(self) -> Result<GmParams> {
        self.validate_with(Admissibility::Strict)
    }

    pub fn validate_with(self, admissibility: Admissibility) -> Result<GmParams> {
        let finite = |x: f64, name| {
            if x.is_finite() || x.is_nan() {
                Ok(())
            } else {
                Err(Error::NonFiniteCoefficient(name))
            }
        };
        let positive = |x: f64, name| {
            finite(x, name)?;
            if x > 0.0 {
                Ok(())
            } else {
                Err(Error::NonPositiveCoefficient(name))
            }
        };
        let non_negative = |x: f64, name| {
            finite(x, name)?;
            if x >= 0.0 {
                Ok(())
            } else {
                Err(Error::NegativeExponent(name))
            }
        };
        let relaxed = admissibility == Admissibility::Relaxed;

        for i in 0..3 {
            positive(self.a[i], A_NAMES[i])?;
            if relaxed {
                non_negative(self.b[i], B_NAMES[i])
                    .map_err(|_| Error::NonPositiveCoefficient(B_NAMES[i]))?;
            } else {
                positive(self.b[i], B_NAMES[i])?;
            }
        }
        if relaxed {
            non_negative(self.sigma, "sigma").map_err(|_| Error::NonPositiveCoefficient("sigma"))?;
        } else {
            positive(self.sigma, "sigma")?;
        }
        non_negative(self.c, "c")?;
        for i in 0..3 {
            non_negative(self.p[i], P_NAMES[i])?;
            non_negative(self.q[i], Q_NAMES[i])?;
            non_negative(self.r[i], R_NAMES[i])?;
        }
        Ok(GmParams {
            raw: self,
            admissibility,
        })
    }
}

impl std::ops::Deref for GmParams {
    type Target = RawParams;

    fn deref(&self) -> &RawParams {
        &self.raw
    }
}

impl GmParams {
    pub fn raw(&self) -> RawParams {
        self.raw
    }

    pub fn admissibility(&self) -> Admissibility {
        self.admissibility
    }

    /// Fails unless the parameters passed strict validation.
    pub fn require_strict(&self) -> Result<()> {
        if self.admissibility == Admissibility::Strict {
            return Ok(());
        }
        // Report the first coefficient that is outside the strict class.
        for i in 0..3 {
            if !(self.b[i] > 0.0) {
                return Err(Error::NonPositiveCoefficient(B_NAMES[i]));
            }
        }
        if !(self.sigma > 0.0) {
            return Err(Error::NonPositiveCoefficient("sigma"));
        }
        self.raw.validate().map(|_| ())
    }

    /// Largest diffusion coefficient.
    pub fn max_diffusion(&self) -> f64 {
        self.a.iter().copied().fold(f64::MIN, f64::max)
    }

    /// Largest decay rate.
    pub fn max_decay(&self) -> f64 {
        self.b.iter().copied().fold(f64::MIN, f64::max)
    }

    /// The three fractional production terms at a point.
    #[inline]
    pub fn fractions(&self, u: f64, v: f64, w: f64) -> [f64; 3] {
        let (p, q, r) = (&self.p, &self.q, &self.r);
        [
            pow(u, p[0]) / (pow(v, q[0]) * (pow(w, r[0]) + self.c)),
            pow(u, p[1]) / (pow(v, q[1]) * pow(w, r[1])),
            pow(u, p[2]) / (pow(v, q[2]) * pow(w, r[2])),
        ]
    }
}

/// `x^e` for a non-negative real exponent. Small integral exponents use
/// repeated multiplication so that e.g. `u^2` is exact.
#[inline]
pub fn pow(x: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == e.trunc() && e <= 16.0 {
        x.powi(e as i32)
    } else {
        x.powf(e)
    }
}

/// Full reaction rates `(f, g, h)` at a strictly positive point.
pub fn reaction_rates(u: f64, v: f64, w: f64, params: &GmParams) -> Result<[f64; 3]> {
    let [fu, fv, fw] = checked_fractions(u, v, w, params)?;
    let out = [
        params.sigma + (fu - params.b[0] * u),
        fv - params.b[1] * v,
        fw - params.b[2] * w,
    ];
    if out.iter().all(|x| x.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NonFiniteRate { u, v, w })
    }
}

pub(crate) fn checked_fractions(u: f64, v: f64, w: f64, params: &GmParams) -> Result<[f64; 3]> {
    let ok = |x: f64| x.is_finite() && x > 0.0;
    if !(ok(u) && ok(v) && ok(w)) {
        return Err(Error::NonFiniteRate { u, v, w });
    }
    let fr = params.fractions(u, v, w);
    if fr.iter().all(|x| x.is_finite()) {
        Ok(fr)
    } else {
        Err(Error::NonFiniteRate { u, v, w })
    }
}

/// Which terms of the system are active. Both on is the physical model;
/// switching them off gives the reference problems used for calibration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub diffusion: bool,
    pub fractions: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Terms {
            diffusion: true,
            fractions: true,
        }
    }
}

/// Parameters together with the active terms; what the integrator advances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub params: GmParams,
    pub terms: Terms,
}

impl Model {
    pub fn new(params: GmParams) -> Self {
        Model {
            params,
            terms: Terms::default(),
        }
    }

    pub fn with_terms(params: GmParams, terms: Terms) -> Self {
        Model { params, terms }
    }

    /// Effective diffusion coefficients (zero when diffusion is off).
    pub fn diffusion(&self) -> [f64; 3] {
        if self.terms.diffusion {
            self.params.a
        } else {
            [0.0; 3]
        }
    }

    /// Nonlinear production terms, or zeros when switched off.
    pub fn production(&self, u: f64, v: f64, w: f64) -> Result<[f64; 3]> {
        if self.terms.fractions {
            checked_fractions(u, v, w, &self.params)
        } else {
            Ok([0.0; 3])
        }
    }

    /// Reaction rates honoring the term switches.
    pub fn rates(&self, u: f64, v: f64, w: f64) -> Result<[f64; 3]> {
        let [fu, fv, fw] = self.production(u, v, w)?;
        let b = &self.params.b;
        Ok([
            self.params.sigma + (fu - b[0] * u),
            fv - b[1] * v,
            fw - b[2] * w,
        ])
    }
}

/// Which inhibitor carries the estimate of the activator's self-production.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    ViaV,
    ViaW,
    Infeasible,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::ViaV => "via_v",
            Branch::ViaW => "via_w",
            Branch::Infeasible => "infeasible",
        }
    }

    pub fn parse(s: &str) -> Option<Branch> {
        match s {
            "via_v" => Some(Branch::ViaV),
            "via_w" => Some(Branch::ViaW),
            "infeasible" => Some(Branch::Infeasible),
            _ => None,
        }
    }
}

/// Outcome of the exponent condition
/// `0 < p1 - 1 < max(p2·min(q1/(q2+1), r1/r2, 1), p3·min(r1/(r3+1), q1/q3, 1))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchReport {
    /// `p1 - 1`.
    pub condition_value_left: f64,
    pub bound_v_branch: f64,
    pub bound_w_branch: f64,
    pub selected_branch: Branch,
}

/// Ratio with the conventions `x/0 = +inf` for `x > 0` and `0/0 = 0`.
pub fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        num / den
    }
}

/// Cross-inhibitor ratio `m/n` in the exponent condition. A zero `n` means
/// the other inhibitor does not feed back on this one, so the ratio places no
/// constraint and evaluates to `+∞` even when `m` is also zero.
pub fn cross_ratio(m: f64, n: f64) -> f64 {
    if n == 0.0 {
        f64::INFINITY
    } else {
        m / n
    }
}

/// Evaluates the exponent condition. Only the nine exponents matter.
pub fn check_exponent_condition(params: &GmParams) -> BranchReport {
    let (p, q, r) = (&params.p, &params.q, &params.r);
    let left = p[0] - 1.0;
    let bound_v = p[1] * ratio(q[0], q[1] + 1.0).min(cross_ratio(r[0], r[1])).min(1.0);
    let bound_w = p[2] * ratio(r[0], r[2] + 1.0).min(cross_ratio(q[0], q[2])).min(1.0);
    let selected_branch = if left > 0.0 && left < bound_v {
        Branch::ViaV
    } else if left > 0.0 && left < bound_w {
        Branch::ViaW
    } else {
        Branch::Infeasible
    };
    BranchReport {
        condition_value_left: left,
        bound_v_branch: bound_v,
        bound_w_branch: bound_w,
        selected_branch,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn phyllotaxis_raw() -> RawParams {
        RawParams {
            a: [1.0; 3],
            b: [1.0; 3],
            sigma: 0.1,
            c: 0.0,
            p: [2.0, 2.0, 1.0],
            q: [1.0, 0.0, 0.0],
            r: [1.0, 0.0, 0.0],
        }
    }

    #[test]
    fn phyllotaxis_exponents_validate() {
        assert!(phyllotaxis_raw().validate().is_ok());
    }

    #[test]
    fn zero_decay_is_rejected_by_name() {
        let mut raw = phyllotaxis_raw();
        raw.b[1] = 0.0;
        assert!(matches!(
            raw.validate(),
            Err(Error::NonPositiveCoefficient("b2"))
        ));
    }

    #[test]
    fn negative_exponent_is_rejected() {
        let mut raw = phyllotaxis_raw();
        raw.q[2] = -0.5;
        assert!(matches!(raw.validate(), Err(Error::NegativeExponent("q3"))));
    }

    #[test]
    fn zero_saturation_is_allowed() {
        let mut raw = phyllotaxis_raw();
        raw.c = 0.0;
        assert!(raw.validate().is_ok());
    }

    #[test]
    fn nan_coefficient_is_not_positive() {
        let mut raw = phyllotaxis_raw();
        raw.a[0] = f64::NAN;
        assert!(matches!(
            raw.validate(),
            Err(Error::NonPositiveCoefficient("a1"))
        ));
        raw.a[0] = f64::INFINITY;
        assert!(matches!(
            raw.validate(),
            Err(Error::NonFiniteCoefficient("a1"))
        ));
    }

    #[test]
    fn relaxed_admits_zero_source_and_decay() {
        let mut raw = phyllotaxis_raw();
        raw.sigma = 0.0;
        raw.b[0] = 0.0;
        assert!(raw.validate().is_err());
        let p = raw.validate_with(Admissibility::Relaxed).unwrap();
        assert!(p.require_strict().is_err());
        raw.a[0] = 0.0;
        assert!(raw.validate_with(Admissibility::Relaxed).is_err());
    }

    #[test]
    fn unit_state_is_an_equilibrium() {
        let mut raw = phyllotaxis_raw();
        raw.sigma = 0.0;
        let p = raw.validate_with(Admissibility::Relaxed).unwrap();
        assert_eq!(reaction_rates(1.0, 1.0, 1.0, &p).unwrap(), [0.0, 0.0, 0.0]);
        raw.sigma = 0.1;
        let p = raw.validate().unwrap();
        assert_eq!(reaction_rates(1.0, 1.0, 1.0, &p).unwrap(), [0.1, 0.0, 0.0]);
    }

    #[test]
    fn rates_by_hand() {
        let raw = RawParams {
            b: [1.0, 2.0, 3.0],
            c: 1.0,
            sigma: 0.3,
            ..phyllotaxis_raw()
        };
        let p = raw.validate().unwrap();
        let [f, g, h] = reaction_rates(2.0, 1.0, 1.0, &p).unwrap();
        assert_eq!(f, 0.3);
        assert_eq!(g, 2.0);
        assert_eq!(h, -1.0);
    }

    #[test]
    fn underflowing_inhibitor_is_reported() {
        let p = phyllotaxis_raw().validate().unwrap();
        assert!(matches!(
            reaction_rates(1.0, 0.0, 1.0, &p),
            Err(Error::NonFiniteRate { .. })
        ));
        assert!(reaction_rates(1e300, 1e-300, 1e-300, &p).is_err());
    }

    #[test]
    fn phyllotaxis_branch() {
        let rep = check_exponent_condition(&phyllotaxis_raw().validate().unwrap());
        assert_eq!(rep.condition_value_left, 1.0);
        assert_eq!(rep.bound_v_branch, 2.0);
        assert_eq!(rep.bound_w_branch, 1.0);
        assert_eq!(rep.selected_branch, Branch::ViaV);
    }

    #[test]
    fn rothe_embedding_branch() {
        let raw = RawParams {
            p: [2.0, 2.0, 0.0],
            q: [1.0, 0.0, 0.0],
            r: [0.0; 3],
            ..phyllotaxis_raw()
        };
        let rep = check_exponent_condition(&raw.validate().unwrap());
        assert_eq!(rep.condition_value_left, 1.0);
        assert_eq!(rep.bound_v_branch, 2.0);
        assert_eq!(rep.selected_branch, Branch::ViaV);
    }

    #[test]
    fn large_p1_is_infeasible() {
        let mut raw = phyllotaxis_raw();
        raw.p[0] = 4.0;
        let rep = check_exponent_condition(&raw.validate().unwrap());
        assert_eq!(rep.condition_value_left, 3.0);
        assert_eq!(rep.selected_branch, Branch::Infeasible);
    }

    #[test]
    fn p1_at_most_one_is_infeasible() {
        let mut raw = phyllotaxis_raw();
        raw.p[0] = 1.0;
        let rep = check_exponent_condition(&raw.validate().unwrap());
        assert_eq!(rep.selected_branch, Branch::Infeasible);
    }

    #[test]
    fn w_branch_is_selected_when_v_fails() {
        // v carries nothing (p2 = 0), w does: p3·min(r1/(r3+1), q1/q3, 1) = 2·min(1, inf, 1) = 2.
        let raw = RawParams {
            p: [2.0, 0.0, 2.0],
            q: [1.0, 0.0, 0.0],
            r: [1.0, 0.0, 0.0],
            ..phyllotaxis_raw()
        };
        let rep = check_exponent_condition(&raw.validate().unwrap());
        assert_eq!(rep.bound_v_branch, 0.0);
        assert_eq!(rep.bound_w_branch, 2.0);
        assert_eq!(rep.selected_branch, Branch::ViaW);
    }

    #[test]
    fn division_conventions() {
        assert_eq!(ratio(1.0, 0.0), f64::INFINITY);
        assert_eq!(ratio(0.0, 0.0), 0.0);
        assert_eq!(ratio(3.0, 2.0), 1.5);
        assert_eq!(cross_ratio(0.0, 0.0), f64::INFINITY);
        assert_eq!(cross_ratio(1.0, 2.0), 0.5);
    }

    #[test]
    fn masked_model_drops_terms() {
        let p = phyllotaxis_raw().validate().unwrap();
        let m = Model::with_terms(
            p,
            Terms {
                diffusion: false,
                fractions: false,
            },
        );
        assert_eq!(m.diffusion(), [0.0; 3]);
        assert_eq!(m.rates(2.0, 3.0, 4.0).unwrap(), [0.1 - 2.0, -3.0, -4.0]);
    }
}
