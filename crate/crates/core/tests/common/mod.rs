//! Reference computations shared by the integration tests. Nothing here
//! calls into the code under test except to build inputs.
#![allow(dead_code)]

use gm3_core::model::{GmParams, RawParams};
use nalgebra::{Matrix1, Matrix2, Matrix3};
use rand::Rng;

pub fn phyllotaxis_params() -> GmParams {
    RawParams {
        a: [1.0; 3],
        b: [1.0; 3],
        sigma: 0.1,
        c: 0.1,
        p: [2.0, 2.0, 1.0],
        q: [1.0, 0.0, 0.0],
        r: [1.0, 0.0, 0.0],
    }
    .validate()
    .unwrap()
}

/// Gradient-form matrix written out entry by entry from the expansion of
/// `∇(u^α v^-β w^-γ)` weighted by the diffusion coefficients.
pub fn reference_q(alpha: f64, beta: f64, gamma: f64, a: [f64; 3]) -> Matrix3<f64> {
    Matrix3::new(
        a[0] * alpha * (alpha - 1.0),
        -0.5 * alpha * beta * (a[0] + a[1]),
        -0.5 * alpha * gamma * (a[0] + a[2]),
        -0.5 * alpha * beta * (a[0] + a[1]),
        a[1] * beta * (beta + 1.0),
        0.5 * beta * gamma * (a[1] + a[2]),
        -0.5 * alpha * gamma * (a[0] + a[2]),
        0.5 * beta * gamma * (a[1] + a[2]),
        a[2] * gamma * (gamma + 1.0),
    )
}

/// Leading principal minors by LU determinants.
pub fn direct_minors(q: &Matrix3<f64>) -> [f64; 3] {
    let d1 = Matrix1::new(q[(0, 0)]).determinant();
    let d2 = Matrix2::new(q[(0, 0)], q[(0, 1)], q[(1, 0)], q[(1, 1)]).determinant();
    [d1, d2, q.lu().determinant()]
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Random parameters in the strict admissible class.
pub fn random_admissible(rng: &mut impl Rng) -> GmParams {
    let mut pos = |lo: f64, hi: f64| rng.gen_range(lo..hi);
    RawParams {
        a: [pos(0.05, 5.0), pos(0.05, 5.0), pos(0.05, 5.0)],
        b: [pos(0.1, 3.0), pos(0.1, 3.0), pos(0.1, 3.0)],
        sigma: pos(0.01, 1.0),
        c: pos(0.0, 1.0),
        p: [pos(1.1, 3.0), pos(0.5, 3.0), pos(0.5, 3.0)],
        q: [pos(0.1, 2.0), pos(0.0, 2.0), pos(0.0, 2.0)],
        r: [pos(0.1, 2.0), pos(0.0, 2.0), pos(0.0, 2.0)],
    }
    .validate()
    .unwrap()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(q: &Matrix3<f64>) -> f64 {
    q.symmetric_eigenvalues().min()
}
