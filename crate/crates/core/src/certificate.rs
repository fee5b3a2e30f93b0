//! Computable form of the global-existence argument.
//!
//! A certificate bundles every constant the boundedness argument needs for a
//! given parameter set and initial data:
//!
//! 1. the exponent condition selects an inhibitor branch,
//! 2. an exponent triple `(α, β, γ)` makes the gradient quadratic form `Q`
//!    positive definite and the decay rate `μ = b1 α - b2 β - b3 γ` positive,
//! 3. the pointwise Young-type estimate on the self-production term yields
//!    `(ε, C, θ)` for floors `h`, `l` on the inhibitors over the horizon,
//! 4. Hölder turns those into `C2..C5`, and
//! 5. the comparison ODE `W' <= -μW + Σ f_j W^θ_j` gives the ceiling `κ`.
//!
//! Everything here is a pure function of its inputs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{check_exponent_condition, cross_ratio, ratio, Branch, BranchReport, GmParams, RawParams};

/// Exponents of the Lyapunov functional `∫ u^α / (v^β w^γ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentTriple {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ExponentTriple {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::InvalidTriple(format!("alpha must exceed 1, got {alpha}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidTriple(format!("beta must be positive, got {beta}")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidTriple(format!("gamma must be positive, got {gamma}")));
        }
        Ok(ExponentTriple { alpha, beta, gamma })
    }
}

/// Diffusion mismatch ratios `A_ij = (a_i + a_j) / (2 sqrt(a_i a_j))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplification {
    pub a12: f64,
    pub a13: f64,
    pub a23: f64,
}

pub fn amplification_ratios(a: [f64; 3]) -> Result<Amplification> {
    for (i, &ai) in a.iter().enumerate() {
        if !(ai > 0.0 && ai.is_finite()) {
            return Err(Error::NonPositiveCoefficient(["a1", "a2", "a3"][i]));
        }
    }
    let ratio = |x: f64, y: f64| (x + y) / (2.0 * (x * y).sqrt());
    Ok(Amplification {
        a12: ratio(a[0], a[1]),
        a13: ratio(a[0], a[2]),
        a23: ratio(a[1], a[2]),
    })
}

/// The three sufficient conditions on `(α, β, γ)` and the resulting decay rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleCheck {
    /// `α > 2 max(1, (b2 + b3) / b1)`.
    pub alpha_condition: bool,
    /// `1/β > 2 A12²`.
    pub beta_condition: bool,
    /// `(1/(2β) - A12²)(1/(2γ) - A13²) > ((α-1)/α A23 - A12 A13)²` with
    /// `1/(2γ) > A13²`.
    pub gamma_condition: bool,
    pub mu: f64,
    pub mu_positive: bool,
}

impl TripleCheck {
    pub fn all(&self) -> bool {
        self.alpha_condition && self.beta_condition && self.gamma_condition && self.mu_positive
    }
}

pub fn check_triple(triple: &ExponentTriple, params: &GmParams) -> Result<TripleCheck> {
    let amp = amplification_ratios(params.a)?;
    let b = params.b;
    let ExponentTriple { alpha, beta, gamma } = *triple;
    let alpha_condition = alpha > 2.0 * 1f64.max((b[1] + b[2]) / b[0]);
    let beta_condition = 1.0 / beta > 2.0 * amp.a12 * amp.a12;
    let beta_gap = 1.0 / (2.0 * beta) - amp.a12 * amp.a12;
    let gamma_gap = 1.0 / (2.0 * gamma) - amp.a13 * amp.a13;
    let cross = (alpha - 1.0) / alpha * amp.a23 - amp.a12 * amp.a13;
    let gamma_condition = gamma_gap > 0.0 && beta_gap * gamma_gap > cross * cross;
    let mu = b[0] * alpha - b[1] * beta - b[2] * gamma;
    Ok(TripleCheck {
        alpha_condition,
        beta_condition,
        gamma_condition,
        mu,
        mu_positive: mu > 0.0,
    })
}

pub const MAX_GAMMA_HALVINGS: usize = 128;

/// Deterministic schedule: `α = 2 max(1, (b2+b3)/b1) + 1`,
/// `β = 1/(2(A12² + 1))`, `γ` starting at `1/(2(A13² + 1))` and halved until
/// every condition holds.
pub fn find_admissible_triple(params: &GmParams) -> Result<ExponentTriple> {
    params.require_strict()?;
    let amp = amplification_ratios(params.a)?;
    let b = params.b;
    let alpha = 2.0 * 1f64.max((b[1] + b[2]) / b[0]) + 1.0;
    let beta = 1.0 / (2.0 * (amp.a12 * amp.a12 + 1.0));
    let mut gamma = 1.0 / (2.0 * (amp.a13 * amp.a13 + 1.0));
    for _ in 0..=MAX_GAMMA_HALVINGS {
        let triple = ExponentTriple::new(alpha, beta, gamma)?;
        if check_triple(&triple, params)?.all() {
            return Ok(triple);
        }
        gamma *= 0.5;
    }
    Err(Error::IterationLimit(MAX_GAMMA_HALVINGS))
}

/// Matrix of the gradient quadratic form in `T = (vw∇u, uw∇v, uv∇w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QForm {
    pub entries: [[f64; 3]; 3],
    /// Leading principal minors `Δ1, Δ2, Δ3`.
    pub minors: [f64; 3],
}

impl QForm {
    pub fn is_positive_definite(&self) -> bool {
        self.minors.iter().all(|&d| d > 0.0)
    }

    /// `(Q t) · t`.
    #[inline]
    pub fn eval(&self, t: [f64; 3]) -> f64 {
        let q = &self.entries;
        let mut s = 0.0;
        for i in 0..3 {
            s += t[i] * (q[i][0] * t[0] + q[i][1] * t[1] + q[i][2] * t[2]);
        }
        s
    }
}

pub fn leading_minors(q: &[[f64; 3]; 3]) -> [f64; 3] {
    let d1 = q[0][0];
    let d2 = q[0][0] * q[1][1] - q[0][1] * q[1][0];
    let d3 = q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1])
        - q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0])
        + q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
    [d1, d2, d3]
}

pub fn assemble_q(triple: &ExponentTriple, a: [f64; 3]) -> QForm {
    let ExponentTriple { alpha, beta, gamma } = *triple;
    let q01 = -alpha * beta * (a[0] + a[1]) / 2.0;
    let q02 = -alpha * gamma * (a[0] + a[2]) / 2.0;
    let q12 = beta * gamma * (a[1] + a[2]) / 2.0;
    let entries = [
        [a[0] * alpha * (alpha - 1.0), q01, q02],
        [q01, a[1] * beta * (beta + 1.0), q12],
        [q02, q12, a[2] * gamma * (gamma + 1.0)],
    ];
    QForm {
        entries,
        minors: leading_minors(&entries),
    }
}

/// Relative residual between `(α-1) Δ3` and its closed form in the `A_ij`.
pub fn minor_identity_check(qform: &QForm, triple: &ExponentTriple, a: [f64; 3]) -> Result<f64> {
    let amp = amplification_ratios(a)?;
    let ExponentTriple { alpha, beta, gamma } = *triple;
    let k = (alpha - 1.0) / alpha;
    let lhs = (alpha - 1.0) * qform.minors[2];
    let abg = alpha * beta * gamma;
    let t_beta = k * (beta + 1.0) / beta - amp.a12 * amp.a12;
    let t_gamma = k * (gamma + 1.0) / gamma - amp.a13 * amp.a13;
    let cross = k * amp.a23 - amp.a12 * amp.a13;
    let rhs = alpha * abg * abg * a[0] * a[1] * a[2] * (t_beta * t_gamma - cross * cross);
    let scale = lhs.abs().max(rhs.abs());
    Ok(if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    })
}

/// Closed form of `Δ2`.
pub fn second_minor_closed_form(triple: &ExponentTriple, a: [f64; 3]) -> Result<f64> {
    let amp = amplification_ratios(a)?;
    let ExponentTriple { alpha, beta, .. } = *triple;
    let k = (alpha - 1.0) / alpha;
    Ok(alpha * alpha * beta * beta * a[0] * a[1] * (k * (beta + 1.0) / beta - amp.a12 * amp.a12))
}

/// Exponents `(p, q, r, s, m, n)` of the pointwise estimate
/// `α x^(p-1+α)/(y^(q+β) z^(m+γ)) <= β x^(r+α)/(y^(s+1+β) z^(n+γ)) + C (x^α/(y^β z^γ))^θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaExponents {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub m: f64,
    pub n: f64,
}

impl LemmaExponents {
    /// Maps the model exponents onto the estimate for a branch. For `ViaV`
    /// `y = v`, `z = w`; for `ViaW` the roles swap (`y = w`, `z = v`).
    pub fn for_branch(branch: Branch, params: &RawParams) -> Option<LemmaExponents> {
        let (p, q, r) = (params.p, params.q, params.r);
        match branch {
            Branch::ViaV => Some(LemmaExponents {
                p: p[0],
                r: p[1],
                q: q[0],
                s: q[1],
                m: r[0],
                n: r[1],
            }),
            Branch::ViaW => Some(LemmaExponents {
                p: p[0],
                r: p[2],
                q: r[0],
                s: r[2],
                m: q[0],
                n: q[2],
            }),
            Branch::Infeasible => None,
        }
    }

    /// `min(q/(s+1), m/n, 1) - (p-1)/r`; the estimate needs it positive.
    pub fn gap(&self) -> f64 {
        ratio(self.q, self.s + 1.0).min(cross_ratio(self.m, self.n)).min(1.0) - ratio(self.p - 1.0, self.r)
    }
}

/// Constants of the pointwise estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma1Constants {
    pub exponents: LemmaExponents,
    /// `(α, β, γ)` as they enter the estimate; `β`, `γ` swap on the `ViaW` branch.
    pub weights: ExponentTriple,
    pub epsilon: f64,
    pub c1: f64,
    pub big_c: f64,
    pub theta: f64,
    /// Lower bound `h` for `y`.
    pub floor_y: f64,
    /// Lower bound `l` for `z`.
    pub floor_z: f64,
}

/// Maximum number of times `ε` is halved to bring `θ` into `(0, 1)`.
const MAX_EPSILON_HALVINGS: usize = 64;

/// Constants for explicit estimate exponents and weights.
pub fn lemma1_constants_for(
    exps: LemmaExponents,
    weights: ExponentTriple,
    floor_y: f64,
    floor_z: f64,
) -> Result<Lemma1Constants> {
    for (name, f) in [("floor_y", floor_y), ("floor_z", floor_z)] {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::PreconditionViolated(format!("{name} must be positive, got {f}")));
        }
    }
    let LemmaExponents { p, q, r, s, m, n } = exps;
    let gap = exps.gap();
    if !(r > 0.0) || !(p > 1.0) || !(gap > 0.0) || !gap.is_finite() {
        return Err(Error::DegenerateEpsilon(gap));
    }
    let ExponentTriple { alpha, beta, gamma } = weights;
    let k0 = (p - 1.0) / r;
    let theta_of = |eps: f64| 1.0 - r * eps / (alpha * (1.0 - k0 - eps));

    // Midpoint of the admissible interval; halved only if θ would leave (0, 1).
    let mut epsilon = 0.5 * gap;
    let mut halvings = 0;
    while !(theta_of(epsilon) > 0.0) {
        halvings += 1;
        if halvings > MAX_EPSILON_HALVINGS {
            return Err(Error::DegenerateEpsilon(gap));
        }
        epsilon *= 0.5;
    }
    let theta = theta_of(epsilon);
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::DegenerateEpsilon(gap));
    }

    let e_y = (s + 1.0) * k0 - q + epsilon * (s + 1.0) - beta * r * epsilon / alpha;
    let e_z = n * k0 - m + epsilon * n - gamma * r * epsilon / alpha;
    let c1 = alpha * beta.powf(-k0 - epsilon) * floor_y.powf(e_y) * floor_z.powf(e_z);
    let big_c = c1.powf(1.0 + (p - 1.0 + r * epsilon) / (r - (p - 1.0) - r * epsilon));
    if !c1.is_finite() || c1 <= 0.0 {
        return Err(Error::NonFiniteConstant("C1"));
    }
    if !big_c.is_finite() || big_c <= 0.0 {
        return Err(Error::NonFiniteConstant("C"));
    }
    Ok(Lemma1Constants {
        exponents: exps,
        weights,
        epsilon,
        c1,
        big_c,
        theta,
        floor_y,
        floor_z,
    })
}

/// Constants of the estimate on the selected branch, given floors for `v` and `w`.
pub fn lemma1_constants(
    branch: &BranchReport,
    triple: &ExponentTriple,
    params: &GmParams,
    floor_v: f64,
    floor_w: f64,
) -> Result<Lemma1Constants> {
    let exps = LemmaExponents::for_branch(branch.selected_branch, params)
        .ok_or_else(|| Error::InfeasibleBranch(infeasible_reason(branch)))?;
    match branch.selected_branch {
        Branch::ViaV => lemma1_constants_for(exps, *triple, floor_v, floor_w),
        _ => {
            let weights = ExponentTriple {
                alpha: triple.alpha,
                beta: triple.gamma,
                gamma: triple.beta,
            };
            lemma1_constants_for(exps, weights, floor_w, floor_v)
        }
    }
}

fn infeasible_reason(branch: &BranchReport) -> String {
    format!(
        "p1 - 1 = {} is not in (0, max({}, {}))",
        branch.condition_value_left, branch.bound_v_branch, branch.bound_w_branch
    )
}

/// Constants of the Hölder step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofConstants {
    /// `(1/C0)^((β+γ)/α)`.
    pub c2: f64,
    /// `C |Ω|^(1-θ)`.
    pub c3: f64,
    /// `C2 |Ω|^(1/α)`.
    pub c4: f64,
    /// `max(C3, C4)`.
    pub c5: f64,
}

pub fn proof_constants(
    triple: &ExponentTriple,
    lemma1: &Lemma1Constants,
    domain_measure: f64,
    c0: f64,
) -> Result<ProofConstants> {
    if !(c0 > 0.0) {
        return Err(Error::PreconditionViolated(format!("C0 must be positive, got {c0}")));
    }
    if !(domain_measure > 0.0) {
        return Err(Error::PreconditionViolated(format!(
            "domain measure must be positive, got {domain_measure}"
        )));
    }
    let ExponentTriple { alpha, beta, gamma } = *triple;
    let c2 = (1.0 / c0).powf((beta + gamma) / alpha);
    let c3 = lemma1.big_c * domain_measure.powf(1.0 - lemma1.theta);
    let c4 = c2 * domain_measure.powf(1.0 / alpha);
    Ok(ProofConstants {
        c2,
        c3,
        c4,
        c5: c3.max(c4),
    })
}

const KAPPA_REL_TOL: f64 = 1e-13;

/// Maximal root `κ` of `x - Σ c_j x^θ_j = W0`, with `c_j >= 0`, `θ_j ∈ (0, 1)`.
///
/// The left side minus `W0` is convex and non-positive at `x = W0`, so the
/// maximal root is the unique upward crossing. It is bracketed by doubling
/// from `max(W0, 1)` and then bisected; the returned value is the upper end
/// of the final bracket, so it never underestimates the root.
pub fn kappa_bound(w0: f64, mu: f64, terms: &[(f64, f64)]) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::NonPositiveMu(mu));
    }
    if !(w0 >= 0.0 && w0.is_finite()) {
        return Err(Error::PreconditionViolated(format!("W0 must be finite and >= 0, got {w0}")));
    }
    for &(c, th) in terms {
        if !(c >= 0.0 && c.is_finite()) || !(th > 0.0 && th < 1.0) {
            return Err(Error::PreconditionViolated(format!(
                "term (c = {c}, theta = {th}) needs c >= 0 finite and theta in (0, 1)"
            )));
        }
    }
    if terms.iter().all(|&(c, _)| c == 0.0) {
        return Ok(w0);
    }
    let g = |x: f64| x - terms.iter().map(|&(c, th)| c * x.powf(th)).sum::<f64>() - w0;

    let mut lo = w0;
    let mut hi = w0.max(1.0);
    while !(g(hi) > 0.0) {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::NonFiniteConstant("kappa"));
        }
    }
    for _ in 0..2000 {
        if hi - lo <= KAPPA_REL_TOL * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `κ` for forcing terms constant in time, where the supremum of
/// `∫_0^t e^(-μ(t-ξ)) f dξ` is bounded by `f/μ`.
pub fn kappa_for_constant_forcing(w0: f64, mu: f64, forcing: &[(f64, f64)]) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::NonPositiveMu(mu));
    }
    let terms: Vec<(f64, f64)> = forcing.iter().map(|&(f, th)| (f / mu, th)).collect();
    kappa_bound(w0, mu, &terms)
}

/// Every constant of the boundedness argument for one parameter set,
/// initial data and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub params: GmParams,
    pub triple: ExponentTriple,
    pub amplification: Amplification,
    pub checks: TripleCheck,
    pub qform: QForm,
    pub minors_positive: bool,
    pub branch: BranchReport,
    pub lemma1: Lemma1Constants,
    pub c0: f64,
    pub proof: ProofConstants,
    pub kappa: f64,
    pub horizon: f64,
    pub l0: f64,
    pub domain_measure: f64,
    pub ic_minima: [f64; 3],
}

impl Certificate {
    pub fn mu(&self) -> f64 {
        self.checks.mu
    }

    /// All conditions hold and `κ >= L(0)`.
    pub fn is_valid(&self) -> bool {
        self.checks.all() && self.minors_positive && self.kappa >= self.l0
    }

    /// The two forcing terms `(f_j, θ_j)` of the comparison ODE for `L`.
    pub fn forcing_terms(&self) -> [(f64, f64); 2] {
        let alpha = self.triple.alpha;
        [
            (self.proof.c3, self.lemma1.theta),
            (alpha * self.params.sigma * self.proof.c4, (alpha - 1.0) / alpha),
        ]
    }

    /// Recomputes `κ` from the stored constants.
    pub fn recompute_kappa(&self) -> Result<f64> {
        kappa_for_constant_forcing(self.l0, self.mu(), &self.forcing_terms())
    }

    /// Right side of the differential inequality for `L` in the aggregated
    /// form `-μL + C5 (L^θ + ασ L^((α-1)/α))`.
    pub fn growth_bound(&self, l: f64) -> f64 {
        let alpha = self.triple.alpha;
        -self.mu() * l
            + self.proof.c5
                * (l.powf(self.lemma1.theta)
                    + alpha * self.params.sigma * l.powf((alpha - 1.0) / alpha))
    }

    /// Flat `name = value` text, one entry per line, floats in shortest
    /// round-trip form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let f = |x: f64| fmt_f64(x);
        put("format", "gm3-certificate-1".into());
        put("valid", self.is_valid().to_string());
        let p = self.params.raw();
        for i in 0..3 {
            put(&format!("a{}", i + 1), f(p.a[i]));
        }
        for i in 0..3 {
            put(&format!("b{}", i + 1), f(p.b[i]));
        }
        put("sigma", f(p.sigma));
        put("c", f(p.c));
        for (name, arr) in [("p", p.p), ("q", p.q), ("r", p.r)] {
            for i in 0..3 {
                put(&format!("{name}{}", i + 1), f(arr[i]));
            }
        }
        put("branch", self.branch.selected_branch.as_str().into());
        put("condition_left", f(self.branch.condition_value_left));
        put("bound_v", f(self.branch.bound_v_branch));
        put("bound_w", f(self.branch.bound_w_branch));
        put("alpha", f(self.triple.alpha));
        put("beta", f(self.triple.beta));
        put("gamma", f(self.triple.gamma));
        put("A12", f(self.amplification.a12));
        put("A13", f(self.amplification.a13));
        put("A23", f(self.amplification.a23));
        put("alpha_condition", self.checks.alpha_condition.to_string());
        put("beta_condition", self.checks.beta_condition.to_string());
        put("gamma_condition", self.checks.gamma_condition.to_string());
        put("minors_positive", self.minors_positive.to_string());
        put("mu_positive", self.checks.mu_positive.to_string());
        put("mu", f(self.checks.mu));
        for i in 0..3 {
            for j in 0..3 {
                put(&format!("Q{}{}", i + 1, j + 1), f(self.qform.entries[i][j]));
            }
        }
        for i in 0..3 {
            put(&format!("delta{}", i + 1), f(self.qform.minors[i]));
        }
        let e = &self.lemma1.exponents;
        for (k, v) in [("lemma_p", e.p), ("lemma_q", e.q), ("lemma_r", e.r)] {
            put(k, f(v));
        }
        for (k, v) in [("lemma_s", e.s), ("lemma_m", e.m), ("lemma_n", e.n)] {
            put(k, f(v));
        }
        put("lemma_alpha", f(self.lemma1.weights.alpha));
        put("lemma_beta", f(self.lemma1.weights.beta));
        put("lemma_gamma", f(self.lemma1.weights.gamma));
        put("epsilon", f(self.lemma1.epsilon));
        put("C1", f(self.lemma1.c1));
        put("C", f(self.lemma1.big_c));
        put("theta", f(self.lemma1.theta));
        put("floor_y", f(self.lemma1.floor_y));
        put("floor_z", f(self.lemma1.floor_z));
        put("C0", f(self.c0));
        put("C2", f(self.proof.c2));
        put("C3", f(self.proof.c3));
        put("C4", f(self.proof.c4));
        put("C5", f(self.proof.c5));
        put("kappa", f(self.kappa));
        put("horizon", f(self.horizon));
        put("L0", f(self.l0));
        put("domain_measure", f(self.domain_measure));
        for (i, name) in ["ic_min_u", "ic_min_v", "ic_min_w"].iter().enumerate() {
            put(name, f(self.ic_minima[i]));
        }
        out
    }

    /// Reads a certificate back exactly as stored; nothing is recomputed, so
    /// a tampered file stays tampered.
    pub fn from_text(text: &str) -> Result<Certificate> {
        let kv = parse_kv(text)?;
        let get = |k: &str| -> Result<&str> {
            kv.iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| Error::CertificateFormat(format!("missing key `{k}`")))
        };
        let num = |k: &str| -> Result<f64> {
            let v = get(k)?;
            v.parse::<f64>()
                .map_err(|_| Error::CertificateFormat(format!("`{k}`: not a number: {v}")))
        };
        let flag = |k: &str| -> Result<bool> {
            match get(k)? {
                "true" => Ok(true),
                "false" => Ok(false),
                v => Err(Error::CertificateFormat(format!("`{k}`: not a boolean: {v}"))),
            }
        };
        let tri = |prefix: &str| -> Result<[f64; 3]> {
            Ok([
                num(&format!("{prefix}1"))?,
                num(&format!("{prefix}2"))?,
                num(&format!("{prefix}3"))?,
            ])
        };
        if get("format")? != "gm3-certificate-1" {
            return Err(Error::CertificateFormat("unknown format tag".into()));
        }
        let raw = RawParams {
            a: tri("a")?,
            b: tri("b")?,
            sigma: num("sigma")?,
            c: num("c")?,
            p: tri("p")?,
            q: tri("q")?,
            r: tri("r")?,
        };
        let params = raw.validate()?;
        let branch_name = get("branch")?;
        let selected_branch = Branch::parse(branch_name)
            .ok_or_else(|| Error::CertificateFormat(format!("unknown branch {branch_name}")))?;
        let mut entries = [[0.0; 3]; 3];
        for (i, row) in entries.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = num(&format!("Q{}{}", i + 1, j + 1))?;
            }
        }
        Ok(Certificate {
            params,
            triple: ExponentTriple::new(num("alpha")?, num("beta")?, num("gamma")?)?,
            amplification: Amplification {
                a12: num("A12")?,
                a13: num("A13")?,
                a23: num("A23")?,
            },
            checks: TripleCheck {
                alpha_condition: flag("alpha_condition")?,
                beta_condition: flag("beta_condition")?,
                gamma_condition: flag("gamma_condition")?,
                mu: num("mu")?,
                mu_positive: flag("mu_positive")?,
            },
            qform: QForm {
                entries,
                minors: tri("delta")?,
            },
            minors_positive: flag("minors_positive")?,
            branch: BranchReport {
                condition_value_left: num("condition_left")?,
                bound_v_branch: num("bound_v")?,
                bound_w_branch: num("bound_w")?,
                selected_branch,
            },
            lemma1: Lemma1Constants {
                exponents: LemmaExponents {
                    p: num("lemma_p")?,
                    q: num("lemma_q")?,
                    r: num("lemma_r")?,
                    s: num("lemma_s")?,
                    m: num("lemma_m")?,
                    n: num("lemma_n")?,
                },
                weights: ExponentTriple::new(
                    num("lemma_alpha")?,
                    num("lemma_beta")?,
                    num("lemma_gamma")?,
                )?,
                epsilon: num("epsilon")?,
                c1: num("C1")?,
                big_c: num("C")?,
                theta: num("theta")?,
                floor_y: num("floor_y")?,
                floor_z: num("floor_z")?,
            },
            c0: num("C0")?,
            proof: ProofConstants {
                c2: num("C2")?,
                c3: num("C3")?,
                c4: num("C4")?,
                c5: num("C5")?,
            },
            kappa: num("kappa")?,
            horizon: num("horizon")?,
            l0: num("L0")?,
            domain_measure: num("domain_measure")?,
            ic_minima: [num("ic_min_u")?, num("ic_min_v")?, num("ic_min_w")?],
        })
    }
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Parses `name = value` lines; `#` starts a comment, blank lines are skipped.
pub(crate) fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::CertificateFormat(format!("line {}: expected `name = value`", lineno + 1))
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Lower bounds `e^(-b_i T) min φ_i` at time `t` for the three components.
pub fn exponential_floors(t: f64, b: [f64; 3], minima: [f64; 3]) -> [f64; 3] {
    [
        (-b[0] * t).exp() * minima[0],
        (-b[1] * t).exp() * minima[1],
        (-b[2] * t).exp() * minima[2],
    ]
}

/// Runs the whole pipeline for given initial minima, domain measure, horizon
/// and initial Lyapunov value.
pub fn build_certificate(
    params: &GmParams,
    ic_minima: [f64; 3],
    domain_measure: f64,
    horizon: f64,
    l0: f64,
) -> Result<Certificate> {
    let branch = check_exponent_condition(params);
    if branch.selected_branch == Branch::Infeasible {
        return Err(Error::InfeasibleBranch(infeasible_reason(&branch)));
    }
    params.require_strict()?;
    for (i, &m) in ic_minima.iter().enumerate() {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::NonPositiveInitialData {
                component: ["u", "v", "w"][i],
                value: m,
            });
        }
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::PreconditionViolated(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let triple = find_admissible_triple(params)?;
    let checks = check_triple(&triple, params)?;
    let amplification = amplification_ratios(params.a)?;
    let qform = assemble_q(&triple, params.a);
    let [_, floor_v, floor_w] = exponential_floors(horizon, params.b, ic_minima);
    let c0 = floor_v.min(floor_w);
    let lemma1 = lemma1_constants(&branch, &triple, params, floor_v, floor_w)?;
    let proof = proof_constants(&triple, &lemma1, domain_measure, c0)?;
    let mut cert = Certificate {
        params: *params,
        triple,
        amplification,
        checks,
        minors_positive: qform.is_positive_definite(),
        qform,
        branch,
        lemma1,
        c0,
        proof,
        kappa: f64::NAN,
        horizon,
        l0,
        domain_measure,
        ic_minima,
    };
    cert.kappa = cert.recompute_kappa()?;
    Ok(cert)
}

/// Certificate for a concrete initial state on a grid; `L(0)` is evaluated
/// with the triple the certificate will use.
pub fn certify_state(
    params: &GmParams,
    initial: &crate::integrator::State,
    horizon: f64,
) -> Result<Certificate> {
    let branch = check_exponent_condition(params);
    if branch.selected_branch == Branch::Infeasible {
        return Err(Error::InfeasibleBranch(infeasible_reason(&branch)));
    }
    let triple = find_admissible_triple(params)?;
    let l0 = crate::monitor::lyapunov_value(initial, &triple)?;
    build_certificate(
        params,
        initial.minima(),
        initial.grid().measure(),
        horizon,
        l0,
    )
}

/// `|Ω|` of a grid, for callers that only hold the grid.
pub fn domain_measure(grid: &Grid) -> f64 {
    grid.measure()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phyllotaxis() -> GmParams {
        RawParams {
            a: [1.0; 3],
            b: [1.0; 3],
            sigma: 0.1,
            c: 0.0,
            p: [2.0, 2.0, 1.0],
            q: [1.0, 0.0, 0.0],
            r: [1.0, 0.0, 0.0],
        }
        .validate()
        .unwrap()
    }

    fn with_b(b: [f64; 3]) -> GmParams {
        RawParams { b, ..phyllotaxis().raw() }.validate().unwrap()
    }

    #[test]
    fn equal_diffusion_has_unit_ratios() {
        let amp = amplification_ratios([1.0, 1.0, 1.0]).unwrap();
        assert_eq!((amp.a12, amp.a13, amp.a23), (1.0, 1.0, 1.0));
        assert_eq!(amplification_ratios([1.0, 4.0, 1.0]).unwrap().a12, 1.25);
        assert!(amplification_ratios([1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn ratio_grows_like_half_root() {
        let mut prev = 1.0;
        for t in [4.0f64, 9.0, 16.0] {
            let a12 = amplification_ratios([1.0, t, 1.0]).unwrap().a12;
            assert!(a12 > prev);
            assert!((a12 - (1.0 + t) / (2.0 * t.sqrt())).abs() < 1e-15);
            prev = a12;
        }
    }

    #[test]
    fn triple_conditions_by_hand() {
        let p = phyllotaxis();
        let c = check_triple(&ExponentTriple::new(5.0, 0.25, 0.25).unwrap(), &p).unwrap();
        assert!(c.all());
        assert_eq!(c.mu, 4.5);
        let c = check_triple(&ExponentTriple::new(5.0, 0.6, 0.25).unwrap(), &p).unwrap();
        assert!(!c.beta_condition);
        let c = check_triple(&ExponentTriple::new(4.0, 0.25, 0.25).unwrap(), &with_b([1.0, 3.0, 3.0]))
            .unwrap();
        assert!(!c.alpha_condition);
    }

    #[test]
    fn schedule_for_unit_coefficients() {
        let t = find_admissible_triple(&phyllotaxis()).unwrap();
        assert_eq!((t.alpha, t.beta, t.gamma), (5.0, 0.25, 0.25));
        let t = find_admissible_triple(&with_b([1.0, 2.0, 2.0])).unwrap();
        assert_eq!((t.alpha, t.beta, t.gamma), (9.0, 0.25, 0.25));
    }

    #[test]
    fn q_for_the_unit_case() {
        let q = assemble_q(&ExponentTriple::new(5.0, 0.25, 0.25).unwrap(), [1.0; 3]);
        assert_eq!(
            q.entries,
            [[20.0, -1.25, -1.25], [-1.25, 0.3125, 0.0625], [-1.25, 0.0625, 0.3125]]
        );
        assert_eq!(q.minors[0], 20.0);
        assert!((q.minors[1] - 4.6875).abs() < 1e-14);
        assert!((q.minors[2] - 1.09375).abs() < 1e-14);
        let closed = second_minor_closed_form(&ExponentTriple::new(5.0, 0.25, 0.25).unwrap(), [1.0; 3])
            .unwrap();
        assert!((closed - 4.6875).abs() < 1e-14);
    }

    #[test]
    fn first_minor_vanishes_as_alpha_approaches_one() {
        let q = assemble_q(&ExponentTriple::new(1.0 + 1e-9, 0.3, 0.2).unwrap(), [1.0; 3]);
        assert!(q.minors[0] > 0.0 && q.minors[0] < 1e-8);
    }

    #[test]
    fn minor_identity_unit_case() {
        let t = ExponentTriple::new(5.0, 0.25, 0.25).unwrap();
        let q = assemble_q(&t, [1.0; 3]);
        assert!(minor_identity_check(&q, &t, [1.0; 3]).unwrap() < 1e-15);
        let t = ExponentTriple::new(3.0, 3.0, 3.0).unwrap();
        let a = [2.5; 3];
        assert!(minor_identity_check(&assemble_q(&t, a), &t, a).unwrap() < 1e-12);
    }

    #[test]
    fn lemma_constants_phyllotaxis() {
        let p = phyllotaxis();
        let branch = check_exponent_condition(&p);
        let t = ExponentTriple::new(5.0, 0.25, 0.25).unwrap();
        let l = lemma1_constants(&branch, &t, &p, 1.0, 1.0).unwrap();
        assert_eq!(
            l.exponents,
            LemmaExponents {
                p: 2.0,
                r: 2.0,
                q: 1.0,
                s: 0.0,
                m: 1.0,
                n: 0.0
            }
        );
        assert_eq!(l.epsilon, 0.25);
        assert!((l.theta - 0.6).abs() < 1e-15);
        let c1 = 5.0 * 0.25f64.powf(-0.75);
        assert!((l.c1 - c1).abs() < 1e-12 * c1);
        assert!((l.c1 - 14.142135623730951).abs() < 1e-9);
        assert!((l.big_c - c1.powi(4)).abs() < 1e-9 * l.big_c);
        assert!((l.big_c - 4.0e4).abs() < 1e-6 * 4.0e4);
    }

    #[test]
    fn epsilon_scales_with_the_gap() {
        let t = ExponentTriple::new(5.0, 0.25, 0.25).unwrap();
        let e1 = LemmaExponents { p: 2.0, q: 1.0, r: 2.0, s: 0.0, m: 1.0, n: 0.0 };
        // gap 0.5 -> 0.25 by moving (p-1)/r from 0.5 to 0.75
        let e2 = LemmaExponents { p: 2.5, ..e1 };
        let l1 = lemma1_constants_for(e1, t, 1.0, 1.0).unwrap();
        let l2 = lemma1_constants_for(e2, t, 1.0, 1.0).unwrap();
        assert!((e2.gap() - 0.5 * e1.gap()).abs() < 1e-15);
        assert!((l2.epsilon - 0.5 * l1.epsilon).abs() < 1e-15);
    }

    #[test]
    fn unit_floors_do_not_enter_c1() {
        let t = ExponentTriple::new(5.0, 0.25, 0.25).unwrap();
        let e = LemmaExponents { p: 2.0, q: 1.0, r: 2.0, s: 0.0, m: 1.0, n: 0.0 };
        let l = lemma1_constants_for(e, t, 1.0, 1.0).unwrap();
        let k0 = 0.5;
        assert_eq!(l.c1, 5.0 * 0.25f64.powf(-k0 - l.epsilon));
    }

    #[test]
    fn theta_is_kept_inside_the_unit_interval() {
        // r large relative to alpha pushes the midpoint θ below 0; ε is halved.
        let t = ExponentTriple::new(1.5, 0.25, 0.25).unwrap();
        let e = LemmaExponents { p: 1.5, q: 10.0, r: 20.0, s: 0.0, m: 10.0, n: 0.0 };
        let l = lemma1_constants_for(e, t, 1.0, 1.0).unwrap();
        assert!(l.theta > 0.0 && l.theta < 1.0);
        assert!(l.epsilon > 0.0 && l.epsilon < e.gap());
        assert!(l.epsilon < 0.5 * e.gap());
    }

    #[test]
    fn degenerate_gap_is_an_error() {
        let t = ExponentTriple::new(5.0, 0.25, 0.25).unwrap();
        let e = LemmaExponents { p: 3.0, q: 1.0, r: 2.0, s: 0.0, m: 1.0, n: 0.0 };
        assert!(matches!(
            lemma1_constants_for(e, t, 1.0, 1.0),
            Err(Error::DegenerateEpsilon(_))
        ));
    }

    #[test]
    fn infeasible_branch_has_no_constants() {
        let p = RawParams {
            p: [4.0, 2.0, 1.0],
            ..phyllotaxis().raw()
        }
        .validate()
        .unwrap();
        let branch = check_exponent_condition(&p);
        let t = ExponentTriple::new(5.0, 0.25, 0.25).unwrap();
        assert!(matches!(
            lemma1_constants(&branch, &t, &p, 1.0, 1.0),
            Err(Error::InfeasibleBranch(_))
        ));
    }

    #[test]
    fn proof_constants_normalizations() {
        let t = ExponentTriple::new(5.0, 0.25, 0.25).unwrap();
        let e = LemmaExponents { p: 2.0, q: 1.0, r: 2.0, s: 0.0, m: 1.0, n: 0.0 };
        let l = lemma1_constants_for(e, t, 1.0, 1.0).unwrap();
        let pc = proof_constants(&t, &l, 1.0, 1.0).unwrap();
        assert_eq!((pc.c2, pc.c3, pc.c4), (1.0, l.big_c, 1.0));
        let pc = proof_constants(&t, &l, 1.0, 0.25).unwrap();
        assert!((pc.c2 - 4f64.powf(0.1)).abs() < 1e-15);
        assert!((pc.c2 - 1.1487).abs() < 1e-4);
        let pc2 = proof_constants(&t, &l, 2.0, 0.25).unwrap();
        assert!((pc2.c3 / pc.c3 - 2f64.powf(1.0 - l.theta)).abs() < 1e-14);
        assert!(proof_constants(&t, &l, 1.0, 0.0).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_bound(3.0, 1.0, &[(0.0, 0.5)]).unwrap(), 3.0);
        assert_eq!(kappa_bound(3.0, 1.0, &[]).unwrap(), 3.0);
        assert!((kappa_bound(0.0, 1.0, &[(1.0, 0.5)]).unwrap() - 1.0).abs() < 1e-12);
        let analytic = ((1.0 + 17f64.sqrt()) / 2.0).powi(2);
        let k = kappa_bound(4.0, 1.0, &[(1.0, 0.5)]).unwrap();
        assert!((k - analytic).abs() < 1e-10 * analytic);
        assert!(k >= analytic);
        assert!(matches!(kappa_bound(1.0, 0.0, &[]), Err(Error::NonPositiveMu(_))));
        assert!(kappa_bound(1.0, 1.0, &[(1.0, 1.0)]).is_err());
    }

    #[test]
    fn certificate_for_phyllotaxis() {
        let p = phyllotaxis();
        let cert = build_certificate(&p, [1.0; 3], 1.0, 1.0, 1.0).unwrap();
        assert!(cert.is_valid());
        assert_eq!(
            (cert.triple.alpha, cert.triple.beta, cert.triple.gamma),
            (5.0, 0.25, 0.25)
        );
        assert_eq!(cert.mu(), 4.5);
        assert!(cert.kappa >= 1.0);
        assert_eq!(cert.c0, (-1f64).exp());
    }

    #[test]
    fn infeasible_certificate() {
        let p = RawParams {
            p: [4.0, 2.0, 1.0],
            ..phyllotaxis().raw()
        }
        .validate()
        .unwrap();
        assert!(matches!(
            build_certificate(&p, [1.0; 3], 1.0, 1.0, 1.0),
            Err(Error::InfeasibleBranch(_))
        ));
    }

    #[test]
    fn kappa_is_non_decreasing_in_horizon() {
        let p = phyllotaxis();
        let ks: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&t| build_certificate(&p, [1.0; 3], 1.0, t, 1.0).unwrap().kappa)
            .collect();
        assert!(ks[0] <= ks[1] && ks[1] <= ks[2], "{ks:?}");
    }

    #[test]
    fn text_round_trip_is_exact() {
        let cert = build_certificate(&phyllotaxis(), [0.9, 1.1, 0.95], 2.0, 1.5, 1.3).unwrap();
        let text = cert.to_text();
        let back = Certificate::from_text(&text).unwrap();
        assert_eq!(back, cert);
        assert_eq!(back.to_text(), text);
        assert!(text.lines().all(|l| l.contains(" = ")));
    }

    #[test]
    fn text_parse_errors() {
        assert!(Certificate::from_text("format = gm3-certificate-1\n").is_err());
        assert!(Certificate::from_text("no equals sign").is_err());
    }
}
