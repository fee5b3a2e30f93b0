//! Diagnostics along a trajectory: the Lyapunov functional, exponential
//! floors, the sign of the gradient quadratic form and the comparison with
//! the certified ceiling `κ`.

use std::fmt::Write as _;

use crate::certificate::{fmt_f64, Certificate, ExponentTriple, QForm};
use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Dim};
use crate::integrator::State;
use crate::model::pow;

pub const CSV_HEADER: &str = "t,L,min_u,max_u,min_v,max_v,min_w,max_w,floor_margin_u,floor_margin_v,floor_margin_w,qform_min,kappa_margin";

/// Per-cell integrand `u^α / (v^β w^γ)`.
#[inline]
pub fn lyapunov_density(u: f64, v: f64, w: f64, triple: &ExponentTriple) -> f64 {
    pow(u, triple.alpha) / (pow(v, triple.beta) * pow(w, triple.gamma))
}

/// `∫ u^α / (v^β w^γ)` by midpoint quadrature.
pub fn lyapunov_value(state: &State, triple: &ExponentTriple) -> Result<f64> {
    let (u, v, w) = (state.u().values(), state.v().values(), state.w().values());
    let density: Vec<f64> = (0..u.len())
        .map(|k| lyapunov_density(u[k], v[k], w[k], triple))
        .collect();
    let value = pairwise_sum(&density) * state.grid().cell_volume();
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFiniteValue("Lyapunov functional"))
    }
}

/// `e^(-b_i (t - t0)) · minima_i`, the pointwise lower bounds for a solution
/// whose minima at `t0` are `minima`.
pub fn lemma3_floor(t: f64, b: [f64; 3], t0: f64, minima: [f64; 3]) -> [f64; 3] {
    let s = t - t0;
    [
        (-b[0] * s).exp() * minima[0],
        (-b[1] * s).exp() * minima[1],
        (-b[2] * s).exp() * minima[2],
    ]
}

/// Centered difference along one axis with mirrored ends.
#[inline]
fn centered(values: &[f64], k: usize, stride: usize, idx: usize, n: usize, h: f64) -> f64 {
    let lo = if idx == 0 { k } else { k - stride };
    let hi = if idx + 1 == n { k } else { k + stride };
    (values[hi] - values[lo]) / (2.0 * h)
}

/// Minimum over cells of `Σ_axes (Q T)·T / (1 + Σ_axes |T|²)` with
/// `T = (vw ∂u, uw ∂v, uv ∂w)`.
pub fn quadratic_form_min(state: &State, qform: &QForm) -> f64 {
    let grid = state.grid();
    let (u, v, w) = (state.u().values(), state.v().values(), state.w().values());
    let nx = grid.n(0);
    let ny = grid.n(1);
    let axes: &[usize] = match grid.dim() {
        Dim::One => &[0],
        Dim::Two => &[0, 1],
    };
    let mut min = f64::INFINITY;
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let mut form = 0.0;
            let mut norm2 = 0.0;
            for &ax in axes {
                let (stride, idx, n) = if ax == 0 { (1, i, nx) } else { (nx, j, ny) };
                let h = grid.spacing(ax);
                let du = centered(u, k, stride, idx, n, h);
                let dv = centered(v, k, stride, idx, n, h);
                let dw = centered(w, k, stride, idx, n, h);
                let t = [v[k] * w[k] * du, u[k] * w[k] * dv, u[k] * v[k] * dw];
                form += qform.eval(t);
                norm2 += t[0] * t[0] + t[1] * t[1] + t[2] * t[2];
            }
            min = min.min(form / (1.0 + norm2));
        }
    }
    min
}

/// One line of the monitor stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub l: f64,
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub floor_margin: [f64; 3],
    pub qform_min: f64,
    /// `κ - L`; NaN without a certificate.
    pub kappa_margin: f64,
}

impl MonitorRow {
    pub fn to_csv_line(&self) -> String {
        let mut s = fmt_f64(self.t);
        let vals = [
            self.l,
            self.min[0],
            self.max[0],
            self.min[1],
            self.max[1],
            self.min[2],
            self.max[2],
            self.floor_margin[0],
            self.floor_margin[1],
            self.floor_margin[2],
            self.qform_min,
            self.kappa_margin,
        ];
        for v in vals {
            let _ = write!(s, ",{}", fmt_f64(v));
        }
        s
    }

    pub fn parse_csv_line(line: &str) -> Result<MonitorRow> {
        let nums: Vec<f64> = line
            .split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad monitor value `{x}`")))
            })
            .collect::<Result<_>>()?;
        if nums.len() != 13 {
            return Err(Error::Config(format!(
                "monitor row needs 13 columns, found {}",
                nums.len()
            )));
        }
        Ok(MonitorRow {
            t: nums[0],
            l: nums[1],
            min: [nums[2], nums[4], nums[6]],
            max: [nums[3], nums[5], nums[7]],
            floor_margin: [nums[8], nums[9], nums[10]],
            qform_min: nums[11],
            kappa_margin: nums[12],
        })
    }
}

/// Parses a monitor CSV (header plus rows).
pub fn parse_monitor_csv(text: &str) -> Result<Vec<MonitorRow>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        Some(h) => return Err(Error::Config(format!("unexpected monitor header `{h}`"))),
        None => return Err(Error::Config("monitor CSV is empty".into())),
    }
    lines.map(MonitorRow::parse_csv_line).collect()
}

/// Turns states into rows for a fixed triple, floor origin and optional `κ`.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub triple: ExponentTriple,
    pub qform: QForm,
    pub b: [f64; 3],
    pub floor_origin: (f64, [f64; 3]),
    pub kappa: Option<f64>,
}

impl Monitor {
    /// Floors are measured from `initial`.
    pub fn new(triple: ExponentTriple, qform: QForm, b: [f64; 3], initial: &State, kappa: Option<f64>) -> Monitor {
        Monitor {
            triple,
            qform,
            b,
            floor_origin: (initial.t(), initial.minima()),
            kappa,
        }
    }

    pub fn for_certificate(cert: &Certificate, initial: &State) -> Monitor {
        Monitor::new(cert.triple, cert.qform, cert.params.b, initial, Some(cert.kappa))
    }

    /// A row; a Lyapunov value that overflows is reported as infinity.
    pub fn row(&self, state: &State) -> MonitorRow {
        let l = lyapunov_value(state, &self.triple).unwrap_or(f64::INFINITY);
        let min = state.minima();
        let max = state.maxima();
        let (t0, m0) = self.floor_origin;
        let floor = lemma3_floor(state.t(), self.b, t0, m0);
        MonitorRow {
            t: state.t(),
            l,
            min,
            max,
            floor_margin: [min[0] - floor[0], min[1] - floor[1], min[2] - floor[2]],
            qform_min: quadratic_form_min(state, &self.qform),
            kappa_margin: self.kappa.map_or(f64::NAN, |k| k - l),
        }
    }
}

/// Discretization allowance for the floor check, `10 (dt + h²)(1 + max b)`.
pub fn floor_tolerance(dt: f64, h: f64, max_b: f64) -> f64 {
    10.0 * (dt + h * h) * (1.0 + max_b)
}

pub const KAPPA_REL_SLACK: f64 = 1e-6;
pub const QFORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub certificate_present: bool,
    pub l_bounded_by_kappa: bool,
    pub floors_hold: bool,
    pub qform_nonneg: bool,
    /// The stored `κ` is at least the maximal root implied by the stored constants.
    pub kappa_consistent: bool,
    pub max_l: f64,
    pub argmax_t: f64,
    pub min_floor_margin: f64,
    pub min_qform: f64,
    /// Set when there were no rows to check.
    pub empty: bool,
}

impl VerificationReport {
    /// True only if a certificate was present and every check passed.
    pub fn passed(&self) -> bool {
        self.certificate_present
            && self.l_bounded_by_kappa
            && self.floors_hold
            && self.qform_nonneg
            && self.kappa_consistent
    }
}

/// Compares a run against a certificate. Without a certificate the `κ`
/// checks are vacuous and `passed()` is false: nothing is claimed.
pub fn check_run(rows: &[MonitorRow], certificate: Option<&Certificate>, floor_tol: f64) -> VerificationReport {
    let mut max_l = f64::NEG_INFINITY;
    let mut argmax_t = f64::NAN;
    let mut min_margin = f64::INFINITY;
    let mut min_q = f64::INFINITY;
    for r in rows {
        if !(r.l <= max_l) {
            max_l = r.l;
            argmax_t = r.t;
        }
        for m in r.floor_margin {
            min_margin = min_margin.min(m);
        }
        min_q = min_q.min(r.qform_min);
    }
    let floors_hold = rows.iter().all(|r| r.floor_margin.iter().all(|&m| m >= -floor_tol));
    let qform_nonneg = rows.iter().all(|r| r.qform_min >= -QFORM_TOL);
    let (l_bounded_by_kappa, kappa_consistent) = match certificate {
        Some(cert) => {
            let bounded = rows.iter().all(|r| r.l <= cert.kappa * (1.0 + KAPPA_REL_SLACK));
            let consistent = match cert.recompute_kappa() {
                Ok(k) => cert.kappa >= k * (1.0 - 1e-12),
                Err(_) => false,
            };
            (bounded, consistent)
        }
        None => (true, true),
    };
    VerificationReport {
        certificate_present: certificate.is_some(),
        l_bounded_by_kappa,
        floors_hold,
        qform_nonneg,
        kappa_consistent,
        max_l: if rows.is_empty() { f64::NAN } else { max_l },
        argmax_t,
        min_floor_margin: min_margin,
        min_qform: min_q,
        empty: rows.is_empty(),
    }
}

/// Largest excess of the sampled derivative of `L` over the right side of
/// the certified differential inequality.
pub fn inequality_excess(rows: &[MonitorRow], cert: &Certificate) -> f64 {
    rows.windows(2)
        .map(|w| {
            let d = w[1].t - w[0].t;
            (w[1].l - w[0].l) / d - cert.growth_bound(w[0].l)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificate::assemble_q;
    use crate::grid::{Field, Grid};

    fn triple(a: f64, b: f64, g: f64) -> ExponentTriple {
        ExponentTriple::new(a, b, g).unwrap()
    }

    #[test]
    fn unit_and_power_values() {
        let g = Grid::new_1d(8, 1.0).unwrap();
        let s = State::uniform(g, [1.0; 3]).unwrap();
        assert_eq!(lyapunov_value(&s, &triple(5.0, 0.25, 0.25)).unwrap(), 1.0);
        let g = Grid::new_1d(8, 2.0).unwrap();
        let s = State::uniform(g, [2.0, 1.0, 1.0]).unwrap();
        assert_eq!(lyapunov_value(&s, &triple(3.0, 0.5, 0.5)).unwrap(), 16.0);
    }

    #[test]
    fn linear_profile_integral() {
        let g = Grid::new_1d(256, 1.0).unwrap();
        let u = g.sample(|x, _| 1.0 + x);
        let s = State::new(u, Field::constant(g, 1.0), Field::constant(g, 1.0), 0.0).unwrap();
        let l = lyapunov_value(&s, &triple(2.0, 0.3, 0.3)).unwrap();
        assert!((l - 7.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn floors() {
        let m = [2.0, 3.0, 4.0];
        assert_eq!(lemma3_floor(0.0, [1.0, 2.0, 3.0], 0.0, m), m);
        let f = lemma3_floor(2f64.ln() / 0.5, [0.5, 1.0, 1.0], 0.0, m);
        assert!((f[0] - 1.0).abs() < 1e-15);
        let mut prev = m;
        for k in 1..20 {
            let f = lemma3_floor(k as f64 * 0.1, [0.5, 1.0, 2.0], 0.0, m);
            assert!((0..3).all(|i| f[i] <= prev[i]));
            prev = f;
        }
    }

    #[test]
    fn uniform_state_has_zero_form() {
        let g = Grid::new_2d(4, 5, 1.0, 1.0).unwrap();
        let s = State::uniform(g, [1.5, 0.7, 2.0]).unwrap();
        let q = assemble_q(&triple(5.0, 0.25, 0.25), [1.0; 3]);
        assert_eq!(quadratic_form_min(&s, &q), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let row = MonitorRow {
            t: 0.1,
            l: 1.25,
            min: [0.9, 0.8, 0.7],
            max: [1.1, 1.2, 1.3],
            floor_margin: [0.0, 1e-3, -1e-9],
            qform_min: 0.0,
            kappa_margin: f64::NAN,
        };
        let line = row.to_csv_line();
        assert_eq!(line.split(',').count(), 13);
        let back = MonitorRow::parse_csv_line(&line).unwrap();
        assert_eq!(back.to_csv_line(), line);
        assert!(back.kappa_margin.is_nan());
        let text = format!("{CSV_HEADER}\n{line}\n");
        assert_eq!(parse_monitor_csv(&text).unwrap().len(), 1);
        assert!(parse_monitor_csv("").is_err());
    }

    #[test]
    fn empty_rows_are_vacuous_with_warning() {
        let r = check_run(&[], None, 1e-3);
        assert!(r.empty);
        assert!(r.l_bounded_by_kappa && r.floors_hold && r.qform_nonneg);
        assert!(!r.certificate_present && !r.passed());
    }
}
