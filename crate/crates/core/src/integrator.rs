//! Time stepping for the three-component system on a grid.
//!
//! Two first-order schemes are available. Explicit Euler treats everything
//! explicitly and needs `dt <= h²/(2·dim·max a)`. The IMEX scheme moves
//! diffusion and linear decay to the implicit side and keeps the source and
//! the fractional production explicit; in 2D the implicit operator is split
//! into an x sweep (carrying the decay) followed by a y sweep.
//!
//! Time levels are `t_k = k·dt` with the last step shortened to land on
//! `t_end`, so a run resumed from a snapshot replays the same grid bit for bit.

use crate::error::{Error, Result};
use crate::grid::{laplacian_into, Dim, Field, Grid};
use crate::model::Model;
use crate::snapshot::Snapshot;
use crate::tridiag::NeumannLine;

pub const COMPONENTS: [&str; 3] = ["u", "v", "w"];

/// `(u, v, w)` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    fields: [Field; 3],
    t: f64,
    step: u64,
}

impl State {
    /// Builds a state at time `t`, step 0. Every value must be positive and finite.
    pub fn new(u: Field, v: Field, w: Field, t: f64) -> Result<State> {
        State::at_step(u, v, w, t, 0)
    }

    pub fn at_step(u: Field, v: Field, w: Field, t: f64, step: u64) -> Result<State> {
        if u.grid() != v.grid() || u.grid() != w.grid() {
            return Err(Error::InvalidGrid("u, v, w live on different grids".into()));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::PreconditionViolated(format!("time must be >= 0, got {t}")));
        }
        let fields = [u, v, w];
        for (name, f) in COMPONENTS.iter().zip(&fields) {
            let m = f.min();
            if !(m > 0.0) || !f.is_finite() {
                return Err(Error::NonPositiveInitialData {
                    component: name,
                    value: m,
                });
            }
        }
        Ok(State { fields, t, step })
    }

    pub fn uniform(grid: Grid, values: [f64; 3]) -> Result<State> {
        State::new(
            Field::constant(grid, values[0]),
            Field::constant(grid, values[1]),
            Field::constant(grid, values[2]),
            0.0,
        )
    }

    pub fn grid(&self) -> &Grid {
        self.fields[0].grid()
    }

    pub fn u(&self) -> &Field {
        &self.fields[0]
    }

    pub fn v(&self) -> &Field {
        &self.fields[1]
    }

    pub fn w(&self) -> &Field {
        &self.fields[2]
    }

    pub fn fields(&self) -> &[Field; 3] {
        &self.fields
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Index of this time level on the run's time grid.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn minima(&self) -> [f64; 3] {
        [self.fields[0].min(), self.fields[1].min(), self.fields[2].min()]
    }

    pub fn maxima(&self) -> [f64; 3] {
        [self.fields[0].max(), self.fields[1].max(), self.fields[2].max()]
    }

    pub fn to_snapshot(&self) -> Snapshot {
        Snapshot {
            grid: *self.grid(),
            time: self.t,
            step: self.step,
            fields: self.fields.to_vec(),
        }
    }

    pub fn from_snapshot(snap: Snapshot) -> Result<State> {
        if snap.fields.len() != 3 {
            return Err(Error::Snapshot(format!(
                "a state needs 3 components, found {}",
                snap.fields.len()
            )));
        }
        let mut it = snap.fields.into_iter();
        let (u, v, w) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        State::at_step(u, v, w, snap.time, snap.step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ExplicitEuler,
    ImexEuler,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ExplicitEuler => "explicit",
            Scheme::ImexEuler => "imex",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "explicit" => Some(Scheme::ExplicitEuler),
            "imex" => Some(Scheme::ImexEuler),
            _ => None,
        }
    }
}

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub blowup_threshold: f64,
    /// Monitor hook cadence in steps.
    pub output_every: u64,
    /// Stop once this step index is reached (for checkpointing long runs).
    pub max_steps: Option<u64>,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64, t_end: f64) -> SchemeConfig {
        SchemeConfig {
            scheme,
            dt,
            t_end,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            output_every: 1,
            max_steps: None,
        }
    }

    pub fn validate(&self, model: &Model, grid: &Grid) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidScheme(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidScheme(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::InvalidScheme(format!(
                "blow-up threshold must be positive, got {}",
                self.blowup_threshold
            )));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidScheme("output_every must be at least 1".into()));
        }
        if self.scheme == Scheme::ExplicitEuler {
            let bound = explicit_dt_bound(grid, model);
            if self.dt > bound {
                return Err(Error::InvalidScheme(format!(
                    "dt = {} exceeds the explicit stability bound {bound}",
                    self.dt
                )));
            }
        }
        Ok(())
    }

    /// Number of steps to reach `t_end`.
    pub fn step_count(&self) -> u64 {
        let ratio = self.t_end / self.dt;
        let nearest = ratio.round();
        // A ratio that is integral up to rounding must not add a sliver step.
        let n = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            nearest
        } else {
            ratio.ceil()
        };
        (n as u64).max(1)
    }

    /// Time of level `k`.
    pub fn time_at(&self, k: u64) -> f64 {
        if k >= self.step_count() {
            self.t_end
        } else {
            k as f64 * self.dt
        }
    }
}

/// `h²/(2·dim·max a)`; infinite when diffusion is off.
pub fn explicit_dt_bound(grid: &Grid, model: &Model) -> f64 {
    let amax = model.diffusion().iter().copied().fold(0.0, f64::max);
    if amax == 0.0 {
        return f64::INFINITY;
    }
    let h = grid.min_spacing();
    h * h / (2.0 * grid.dim().count() as f64 * amax)
}

fn check_new_values(name: &'static str, values: &[f64]) -> Result<()> {
    for (cell, &x) in values.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::NonFiniteValue(name));
        }
        if x <= 0.0 {
            return Err(Error::PositivityLoss {
                component: name,
                cell,
                value: x,
            });
        }
    }
    Ok(())
}

fn next_state(state: &State, new: [Vec<f64>; 3], dt: f64) -> Result<State> {
    for (name, vals) in COMPONENTS.iter().zip(&new) {
        check_new_values(name, vals)?;
    }
    let grid = *state.grid();
    let [u, v, w] = new;
    Ok(State {
        fields: [
            Field::new(grid, u)?,
            Field::new(grid, v)?,
            Field::new(grid, w)?,
        ],
        t: state.t + dt,
        step: state.step + 1,
    })
}

/// One forward Euler step of size `dt`.
pub fn step_explicit(state: &State, model: &Model, dt: f64) -> Result<State> {
    let grid = *state.grid();
    let n = grid.len();
    let a = model.diffusion();
    let mut new: [Vec<f64>; 3] = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut lap = vec![0.0; n];
    let vals = [state.u().values(), state.v().values(), state.w().values()];
    for c in 0..3 {
        if a[c] != 0.0 {
            laplacian_into(&grid, vals[c], &mut lap);
            for k in 0..n {
                new[c][k] = vals[c][k] + dt * a[c] * lap[k];
            }
        } else {
            new[c].copy_from_slice(vals[c]);
        }
    }
    for k in 0..n {
        let rates = model.rates(vals[0][k], vals[1][k], vals[2][k])?;
        for c in 0..3 {
            new[c][k] += dt * rates[c];
        }
    }
    next_state(state, new, dt)
}

/// Implicit operators for one IMEX step size.
#[derive(Debug, Clone)]
struct ImexOperators {
    dt: f64,
    /// Per component: x sweep (with decay), y sweep in 2D (pure diffusion).
    lines: Vec<(NeumannLine, Option<NeumannLine>)>,
}

impl ImexOperators {
    fn new(grid: &Grid, model: &Model, dt: f64) -> Result<ImexOperators> {
        let a = model.diffusion();
        let b = model.params.b;
        let mut lines = Vec::with_capacity(3);
        for c in 0..3 {
            let hx = grid.spacing(0);
            let x = NeumannLine::new(grid.n(0), dt * b[c], dt * a[c] / (hx * hx))?;
            let y = match grid.dim() {
                Dim::One => None,
                Dim::Two => {
                    let hy = grid.spacing(1);
                    Some(NeumannLine::new(grid.n(1), 0.0, dt * a[c] / (hy * hy))?)
                }
            };
            lines.push((x, y));
        }
        Ok(ImexOperators { dt, lines })
    }

    fn solve(&self, grid: &Grid, c: usize, buf: &mut [f64]) {
        let nx = grid.n(0);
        let (x, y) = &self.lines[c];
        for row in buf.chunks_mut(nx) {
            x.solve_in_place(row);
        }
        if let Some(y) = y {
            let mut scratch = vec![0.0; grid.n(1)];
            for i in 0..nx {
                y.solve_strided(buf, i, nx, &mut scratch);
            }
        }
    }
}

fn step_imex_with(state: &State, model: &Model, ops: &ImexOperators) -> Result<State> {
    let grid = *state.grid();
    let n = grid.len();
    let dt = ops.dt;
    let vals = [state.u().values(), state.v().values(), state.w().values()];
    let mut new: [Vec<f64>; 3] = [vals[0].to_vec(), vals[1].to_vec(), vals[2].to_vec()];
    let sigma = model.params.sigma;
    for k in 0..n {
        let prod = model.production(vals[0][k], vals[1][k], vals[2][k])?;
        new[0][k] += dt * (sigma + prod[0]);
        new[1][k] += dt * prod[1];
        new[2][k] += dt * prod[2];
    }
    for (c, buf) in new.iter_mut().enumerate() {
        ops.solve(&grid, c, buf);
    }
    next_state(state, new, dt)
}

/// One IMEX Euler step of size `dt`.
pub fn step_imex(state: &State, model: &Model, dt: f64) -> Result<State> {
    let ops = ImexOperators::new(state.grid(), model, dt)?;
    step_imex_with(state, model, &ops)
}

/// How a run ended.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    CompletedBounded,
    /// Some field exceeded the threshold or went non-finite.
    BlowUpSuspected { t: f64, component: &'static str },
    PositivityLoss {
        t: f64,
        component: &'static str,
        cell: usize,
        value: f64,
    },
    /// Stopped at `SchemeConfig::max_steps` before reaching `t_end`.
    Paused { t: f64, step: u64 },
}

impl RunOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            RunOutcome::CompletedBounded => "completed_bounded",
            RunOutcome::BlowUpSuspected { .. } => "blowup_suspected",
            RunOutcome::PositivityLoss { .. } => "positivity_loss",
            RunOutcome::Paused { .. } => "paused",
        }
    }

    /// Time attached to the outcome, if any.
    pub fn time(&self) -> Option<f64> {
        match self {
            RunOutcome::CompletedBounded => None,
            RunOutcome::BlowUpSuspected { t, .. }
            | RunOutcome::PositivityLoss { t, .. }
            | RunOutcome::Paused { t, .. } => Some(*t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: RunOutcome,
    /// Last state reached (for blow-up, the first state above the threshold
    /// or the last finite one).
    pub state: State,
    pub steps_taken: u64,
}

fn exceeded(state: &State, threshold: f64) -> Option<&'static str> {
    let maxima = state.maxima();
    COMPONENTS
        .iter()
        .zip(maxima)
        .find(|(_, m)| !(m.is_finite() && *m <= threshold))
        .map(|(name, _)| *name)
}

/// Advances `initial` to `cfg.t_end`. The hook sees the initial state, every
/// `output_every`-th level and the final level.
pub fn run<H>(initial: State, model: &Model, cfg: &SchemeConfig, mut hook: H) -> Result<RunResult>
where
    H: FnMut(&State) -> Result<()>,
{
    cfg.validate(model, initial.grid())?;
    let total = cfg.step_count();
    if initial.step > total {
        return Err(Error::InvalidScheme(format!(
            "initial step {} is past the end of the time grid ({total} steps)",
            initial.step
        )));
    }
    let ops = match cfg.scheme {
        Scheme::ImexEuler => Some(ImexOperators::new(initial.grid(), model, cfg.dt)?),
        Scheme::ExplicitEuler => None,
    };
    let mut last_ops: Option<ImexOperators> = None;
    let mut state = initial;
    let mut taken = 0;
    hook(&state)?;
    if let Some(component) = exceeded(&state, cfg.blowup_threshold) {
        let t = state.t;
        return Ok(RunResult {
            outcome: RunOutcome::BlowUpSuspected { t, component },
            state,
            steps_taken: 0,
        });
    }
    while state.step < total {
        if let Some(limit) = cfg.max_steps {
            if state.step >= limit {
                let (t, step) = (state.t, state.step);
                return Ok(RunResult {
                    outcome: RunOutcome::Paused { t, step },
                    state,
                    steps_taken: taken,
                });
            }
        }
        let k = state.step;
        let t_next = cfg.time_at(k + 1);
        let dt = t_next - cfg.time_at(k);
        let result = match &ops {
            None => step_explicit(&state, model, dt),
            Some(ops) if dt == ops.dt => step_imex_with(&state, model, ops),
            Some(_) => {
                // Shortened final step.
                if last_ops.as_ref().map(|o| o.dt) != Some(dt) {
                    last_ops = Some(ImexOperators::new(state.grid(), model, dt)?);
                }
                step_imex_with(&state, model, last_ops.as_ref().unwrap())
            }
        };
        match result {
            Ok(mut next) => {
                next.t = t_next;
                state = next;
                taken += 1;
            }
            Err(Error::PositivityLoss {
                component,
                cell,
                value,
            }) => {
                return Ok(RunResult {
                    outcome: RunOutcome::PositivityLoss {
                        t: t_next,
                        component,
                        cell,
                        value,
                    },
                    state,
                    steps_taken: taken,
                })
            }
            Err(Error::NonFiniteRate { .. }) | Err(Error::NonFiniteValue(_)) => {
                let component = exceeded(&state, cfg.blowup_threshold).unwrap_or("u");
                return Ok(RunResult {
                    outcome: RunOutcome::BlowUpSuspected {
                        t: t_next,
                        component,
                    },
                    state,
                    steps_taken: taken,
                });
            }
            Err(e) => return Err(e),
        }
        let last = state.step == total;
        if last || state.step.is_multiple_of(cfg.output_every) {
            hook(&state)?;
        }
        if let Some(component) = exceeded(&state, cfg.blowup_threshold) {
            if !(last || state.step.is_multiple_of(cfg.output_every)) {
                hook(&state)?;
            }
            let t = state.t;
            return Ok(RunResult {
                outcome: RunOutcome::BlowUpSuspected { t, component },
                state,
                steps_taken: taken,
            });
        }
    }
    Ok(RunResult {
        outcome: RunOutcome::CompletedBounded,
        state,
        steps_taken: taken,
    })
}

/// Classical RK4 for the spatially uniform system (no coupling), used as a
/// reference for uniform states.
pub fn uniform_rk4(model: &Model, y0: [f64; 3], t_end: f64, steps: usize) -> Result<[f64; 3]> {
    let h = t_end / steps as f64;
    let f = |y: [f64; 3]| model.rates(y[0], y[1], y[2]);
    let add = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y)?;
        let k2 = f(add(y, k1, h / 2.0))?;
        let k3 = f(add(y, k2, h / 2.0))?;
        let k4 = f(add(y, k3, h))?;
        for c in 0..3 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    Ok(y)
}
