//! Brute-force checks of the analytic ingredients, independent of the code
//! that produced the constants.

use rayon::prelude::*;

use crate::certificate::{kappa_for_constant_forcing, Lemma1Constants};
use crate::error::{Error, Result};

/// Log-spaced sample box for `x ∈ [x_min, x_max]`, `y ∈ [y_min, y_max]`,
/// `z ∈ [z_min, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub counts: [usize; 3],
}

impl SampleSpec {
    /// `x ∈ [1e-6 x_max, x_max]`, `y ∈ [h, y_max]`, `z ∈ [l, z_max]`, `count`
    /// points per axis.
    pub fn cube(x_max: f64, h: f64, y_max: f64, l: f64, z_max: f64, count: usize) -> SampleSpec {
        SampleSpec {
            x_min: x_max * 1e-6,
            x_max,
            y_min: h,
            y_max,
            z_min: l,
            z_max,
            counts: [count; 3],
        }
    }

    fn validate(&self) -> Result<()> {
        let ranges = [
            ("x", self.x_min, self.x_max),
            ("y", self.y_min, self.y_max),
            ("z", self.z_min, self.z_max),
        ];
        for (name, lo, hi) in ranges {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::PreconditionViolated(format!(
                    "{name} range [{lo}, {hi}] must be positive and ordered"
                )));
            }
        }
        if self.counts.iter().any(|&c| c < 2) {
            return Err(Error::PreconditionViolated("need at least 2 samples per axis".into()));
        }
        Ok(())
    }
}

/// `count` log-spaced points from `lo` to `hi`, both included.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

/// A sample point where the estimate failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn violations_csv(violations: &[Violation]) -> String {
    let mut s = String::from("x,y,z,lhs,rhs\n");
    for v in violations {
        s.push_str(&format!("{:?},{:?},{:?},{:?},{:?}\n", v.x, v.y, v.z, v.lhs, v.rhs));
    }
    s
}

/// Evaluates
/// `α x^(p-1+α)/(y^(q+β) z^(m+γ)) <= β x^(r+α)/(y^(s+1+β) z^(n+γ)) + C (x^α/(y^β z^γ))^θ`
/// on every sample and returns the points where it fails (beyond a relative
/// rounding allowance of 1e-12).
pub fn verify_lemma1(constants: &Lemma1Constants, spec: &SampleSpec) -> Result<Vec<Violation>> {
    spec.validate()?;
    let e = constants.exponents;
    let gap = e.gap();
    if !(gap > 0.0) || !(e.r > 0.0) || !(e.p > 1.0) {
        return Err(Error::PreconditionViolated(format!(
            "exponents do not satisfy the estimate's hypothesis (gap {gap})"
        )));
    }
    let w = constants.weights;
    let (big_c, theta) = (constants.big_c, constants.theta);
    let xs = log_space(spec.x_min, spec.x_max, spec.counts[0]);
    let ys = log_space(spec.y_min, spec.y_max, spec.counts[1]);
    let zs = log_space(spec.z_min, spec.z_max, spec.counts[2]);
    let found: Vec<Vec<Violation>> = xs
        .par_iter()
        .map(|&x| {
            let mut out = Vec::new();
            for &y in &ys {
                for &z in &zs {
                    let lhs = w.alpha * x.powf(e.p - 1.0 + w.alpha)
                        / (y.powf(e.q + w.beta) * z.powf(e.m + w.gamma));
                    let absorbed = w.beta * x.powf(e.r + w.alpha)
                        / (y.powf(e.s + 1.0 + w.beta) * z.powf(e.n + w.gamma));
                    let base = x.powf(w.alpha) / (y.powf(w.beta) * z.powf(w.gamma));
                    let rhs = absorbed + big_c * base.powf(theta);
                    if !(lhs <= rhs * (1.0 + 1e-12)) {
                        out.push(Violation { x, y, z, lhs, rhs });
                    }
                }
            }
            out
        })
        .collect();
    Ok(found.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma2Check {
    pub max_w: f64,
    pub kappa: f64,
    pub holds: bool,
}

pub const LEMMA2_STEPS: usize = 10_000;

/// Integrates `W' = -μW + Σ f_j W^θ_j` by classical RK4 with `T/10⁴` steps
/// and compares the running maximum with `κ` from the root finder.
pub fn verify_lemma2(mu: f64, terms: &[(f64, f64)], w0: f64, horizon: f64) -> Result<Lemma2Check> {
    let kappa = kappa_for_constant_forcing(w0, mu, terms)?;
    let max_w = rk4_max(mu, terms, w0, horizon, LEMMA2_STEPS);
    Ok(Lemma2Check {
        max_w,
        kappa,
        holds: max_w <= kappa * (1.0 + 1e-8),
    })
}

/// Maximum of the RK4 trajectory of the comparison ODE (also returned at the
/// end point when `steps` is 0).
pub fn rk4_max(mu: f64, terms: &[(f64, f64)], w0: f64, horizon: f64, steps: usize) -> f64 {
    rk4_trajectory(mu, terms, w0, horizon, steps)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn rk4_trajectory(mu: f64, terms: &[(f64, f64)], w0: f64, horizon: f64, steps: usize) -> Vec<f64> {
    let rhs = |x: f64| {
        let x = x.max(0.0);
        -mu * x + terms.iter().map(|&(f, th)| f * x.powf(th)).sum::<f64>()
    };
    let h = horizon / steps.max(1) as f64;
    let mut w = w0;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(w);
    for _ in 0..steps {
        let k1 = rhs(w);
        let k2 = rhs(w + 0.5 * h * k1);
        let k3 = rhs(w + 0.5 * h * k2);
        let k4 = rhs(w + h * k3);
        w += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push(w);
    }
    out
}

/// Exact blow-up time `1/((p-1) u0^(p-1))` of `u' = u^p`.
pub fn ode_blowup_time(p: f64, u0: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::PreconditionViolated(format!("p must exceed 1, got {p}")));
    }
    if !(u0 > 0.0) {
        return Err(Error::PreconditionViolated(format!("u0 must be positive, got {u0}")));
    }
    Ok(1.0 / ((p - 1.0) * u0.powf(p - 1.0)))
}
