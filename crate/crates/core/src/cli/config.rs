//! Run configuration: flat `key = value` text with `[section]` headers,
//! built-in presets and `--set` overrides.

use std::fmt::Write as _;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::certificate::fmt_f64;
use crate::error::{Error, Result};
use crate::grid::{Dim, Field, Grid};
use crate::integrator::{explicit_dt_bound, Scheme, SchemeConfig, State};
use crate::model::{Admissibility, GmParams, Model, RawParams, Terms};

/// Largest allowed relative perturbation amplitude.
pub const MAX_PERTURBATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// `cfl` times the explicit stability bound.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: RawParams,
    pub admissibility: Admissibility,
    pub terms: Terms,
    pub dim: Dim,
    /// Cells per axis.
    pub n: usize,
    /// Side length per axis.
    pub length: f64,
    pub method: Scheme,
    pub dt: TimeStep,
    pub cfl: f64,
    pub t_end: f64,
    pub blowup_threshold: f64,
    pub output_every: u64,
    /// Uniform initial values of `(u, v, w)`.
    pub initial: [f64; 3],
    pub perturbation: f64,
    pub modes: usize,
    pub snapshot: Option<PathBuf>,
    /// Certificate horizon; `None` uses `t_end`.
    pub horizon: Option<f64>,
    pub seed: u64,
    pub out: PathBuf,
}

pub const PRESETS: [&str; 3] = ["phyllotaxis", "gm2_rothe", "blowup_ode"];

pub fn preset(name: &str) -> Result<RunConfig> {
    let base = RunConfig {
        params: RawParams {
            a: [1.0; 3],
            b: [1.0; 3],
            sigma: 0.1,
            c: 0.1,
            p: [2.0, 2.0, 1.0],
            q: [1.0, 0.0, 0.0],
            r: [1.0, 0.0, 0.0],
        },
        admissibility: Admissibility::Strict,
        terms: Terms::default(),
        dim: Dim::One,
        n: 64,
        length: 1.0,
        method: Scheme::ExplicitEuler,
        dt: TimeStep::Auto,
        cfl: 0.5,
        t_end: 1.0,
        blowup_threshold: crate::integrator::DEFAULT_BLOWUP_THRESHOLD,
        output_every: 128,
        initial: [1.0; 3],
        perturbation: 0.05,
        modes: 4,
        snapshot: None,
        horizon: None,
        seed: 0,
        out: PathBuf::from("out"),
    };
    match name {
        // Three-substance plant model: u²/(v(w + c)) production, v and w fed by u², u.
        "phyllotaxis" => Ok(base),
        // Two-component model embedded with a passive third component (w → 1).
        "gm2_rothe" => Ok(RunConfig {
            params: RawParams {
                a: [0.5, 2.0, 1.0],
                b: [1.0; 3],
                sigma: 0.1,
                c: 0.0,
                p: [2.0, 2.0, 0.0],
                q: [1.0, 0.0, 0.0],
                r: [0.0; 3],
            },
            dt: TimeStep::Auto,
            ..base
        }),
        // u' = u² with inert inhibitors; exact blow-up at 1/u0.
        "blowup_ode" => Ok(RunConfig {
            params: RawParams {
                a: [1.0; 3],
                b: [0.0, 1.0, 1.0],
                sigma: 0.0,
                c: 0.0,
                p: [2.0, 0.0, 0.0],
                q: [0.0; 3],
                r: [0.0; 3],
            },
            admissibility: Admissibility::Relaxed,
            terms: Terms {
                diffusion: false,
                fractions: true,
            },
            n: 8,
            dt: TimeStep::Fixed(1e-4),
            output_every: 100,
            initial: [2.0, 1.0, 1.0],
            perturbation: 0.0,
            ..base
        }),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (available: {})",
            PRESETS.join(", ")
        ))),
    }
}

const SECTIONS: [(&str, &[&str]); 6] = [
    (
        "model",
        &[
            "a1", "a2", "a3", "b1", "b2", "b3", "sigma", "c", "p1", "p2", "p3", "q1", "q2", "q3",
            "r1", "r2", "r3", "admissibility", "diffusion", "fractions",
        ],
    ),
    ("grid", &["dim", "n", "length"]),
    (
        "scheme",
        &["method", "dt", "cfl", "t_end", "blowup_threshold", "output_every"],
    ),
    ("initial", &["u", "v", "w", "perturbation", "modes", "snapshot"]),
    ("certificate", &["horizon"]),
    ("run", &["seed", "out"]),
];

/// Resolves `key` or `section.key` to `(section, key)`.
pub fn resolve_key(name: &str) -> Result<(&'static str, &'static str)> {
    let (section, key) = match name.split_once('.') {
        Some((s, k)) => (Some(s), k),
        None => (None, name),
    };
    for (s, keys) in SECTIONS {
        if section.is_some_and(|want| want != s) {
            continue;
        }
        if let Some(k) = keys.iter().find(|k| **k == key) {
            return Ok((s, k));
        }
    }
    Err(Error::Config(format!("unknown config key `{name}`")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::Config(format!("`{key}`: expected a number, got `{v}`")))
}

fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse::<u64>()
        .map_err(|_| Error::Config(format!("`{key}`: expected a non-negative integer, got `{v}`")))
}

fn parse_switch(key: &str, v: &str) -> Result<bool> {
    match v {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected on/off, got `{v}`"))),
    }
}

fn switch(b: bool) -> &'static str {
    if b {
        "on"
    } else {
        "off"
    }
}

impl RunConfig {
    /// Sets one key (bare or `section.key`) from its textual value.
    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let (_, key) = resolve_key(name)?;
        let v = value.trim();
        let idx = |k: &str| (k.as_bytes()[1] - b'1') as usize;
        match key {
            "a1" | "a2" | "a3" => self.params.a[idx(key)] = parse_f64(key, v)?,
            "b1" | "b2" | "b3" => self.params.b[idx(key)] = parse_f64(key, v)?,
            "p1" | "p2" | "p3" => self.params.p[idx(key)] = parse_f64(key, v)?,
            "q1" | "q2" | "q3" => self.params.q[idx(key)] = parse_f64(key, v)?,
            "r1" | "r2" | "r3" => self.params.r[idx(key)] = parse_f64(key, v)?,
            "sigma" => self.params.sigma = parse_f64(key, v)?,
            "c" => self.params.c = parse_f64(key, v)?,
            "admissibility" => {
                self.admissibility = match v {
                    "strict" => Admissibility::Strict,
                    "relaxed" => Admissibility::Relaxed,
                    _ => return Err(Error::Config(format!("`admissibility`: expected strict/relaxed, got `{v}`"))),
                }
            }
            "diffusion" => self.terms.diffusion = parse_switch(key, v)?,
            "fractions" => self.terms.fractions = parse_switch(key, v)?,
            "dim" => {
                self.dim = match v {
                    "1" => Dim::One,
                    "2" => Dim::Two,
                    _ => return Err(Error::Config(format!("`dim`: expected 1 or 2, got `{v}`"))),
                }
            }
            "n" => self.n = parse_u64(key, v)? as usize,
            "length" => self.length = parse_f64(key, v)?,
            "method" => {
                self.method = Scheme::parse(v).ok_or_else(|| {
                    Error::Config(format!("`method`: expected explicit/imex, got `{v}`"))
                })?
            }
            "dt" => {
                self.dt = if v == "auto" {
                    TimeStep::Auto
                } else {
                    TimeStep::Fixed(parse_f64(key, v)?)
                }
            }
            "cfl" => self.cfl = parse_f64(key, v)?,
            "t_end" => self.t_end = parse_f64(key, v)?,
            "blowup_threshold" => self.blowup_threshold = parse_f64(key, v)?,
            "output_every" => self.output_every = parse_u64(key, v)?,
            "u" => self.initial[0] = parse_f64(key, v)?,
            "v" => self.initial[1] = parse_f64(key, v)?,
            "w" => self.initial[2] = parse_f64(key, v)?,
            "perturbation" => self.perturbation = parse_f64(key, v)?,
            "modes" => self.modes = parse_u64(key, v)? as usize,
            "snapshot" => {
                self.snapshot = if v.is_empty() || v == "none" {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "horizon" => {
                self.horizon = if v == "auto" {
                    None
                } else {
                    Some(parse_f64(key, v)?)
                }
            }
            "seed" => self.seed = parse_u64(key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => unreachable!("resolve_key only yields known keys"),
        }
        Ok(())
    }

    fn get(&self, key: &str) -> String {
        let idx = |k: &str| (k.as_bytes()[1] - b'1') as usize;
        let f = fmt_f64;
        match key {
            "a1" | "a2" | "a3" => f(self.params.a[idx(key)]),
            "b1" | "b2" | "b3" => f(self.params.b[idx(key)]),
            "p1" | "p2" | "p3" => f(self.params.p[idx(key)]),
            "q1" | "q2" | "q3" => f(self.params.q[idx(key)]),
            "r1" | "r2" | "r3" => f(self.params.r[idx(key)]),
            "sigma" => f(self.params.sigma),
            "c" => f(self.params.c),
            "admissibility" => match self.admissibility {
                Admissibility::Strict => "strict".into(),
                Admissibility::Relaxed => "relaxed".into(),
            },
            "diffusion" => switch(self.terms.diffusion).into(),
            "fractions" => switch(self.terms.fractions).into(),
            "dim" => self.dim.count().to_string(),
            "n" => self.n.to_string(),
            "length" => f(self.length),
            "method" => self.method.as_str().into(),
            "dt" => match self.dt {
                TimeStep::Auto => "auto".into(),
                TimeStep::Fixed(x) => f(x),
            },
            "cfl" => f(self.cfl),
            "t_end" => f(self.t_end),
            "blowup_threshold" => f(self.blowup_threshold),
            "output_every" => self.output_every.to_string(),
            "u" => f(self.initial[0]),
            "v" => f(self.initial[1]),
            "w" => f(self.initial[2]),
            "perturbation" => f(self.perturbation),
            "modes" => self.modes.to_string(),
            "snapshot" => self
                .snapshot
                .as_ref()
                .map_or_else(|| "none".into(), |p| p.display().to_string()),
            "horizon" => self.horizon.map_or_else(|| "auto".into(), f),
            "seed" => self.seed.to_string(),
            "out" => self.out.display().to_string(),
            _ => unreachable!("only called with known keys"),
        }
    }

    /// Applies a config text on top of `self`. Keys outside a section are
    /// resolved by name; keys inside one must belong to it.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(Error::Config(format!("line {}: unknown section [{name}]", lineno + 1)));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let k = k.trim();
            let full = match &section {
                Some(s) if !k.contains('.') => format!("{s}.{k}"),
                _ => k.to_string(),
            };
            self.set(&full, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(())
    }

    /// Full config text; parsing it onto any base reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (section, keys)) in SECTIONS.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{section}]");
            for k in keys.iter() {
                let _ = writeln!(out, "{k} = {}", self.get(k));
            }
        }
        out
    }

    pub fn validated_params(&self) -> Result<GmParams> {
        self.params.validate_with(self.admissibility)
    }

    pub fn model(&self) -> Result<Model> {
        Ok(Model::with_terms(self.validated_params()?, self.terms))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, [self.n, self.n], [self.length, self.length])
    }

    pub fn scheme_config(&self, model: &Model, grid: &Grid) -> Result<SchemeConfig> {
        let dt = match self.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => {
                if !(self.cfl > 0.0 && self.cfl <= 1.0) {
                    return Err(Error::Config(format!("cfl must be in (0, 1], got {}", self.cfl)));
                }
                let bound = explicit_dt_bound(grid, model);
                if !bound.is_finite() {
                    return Err(Error::Config(
                        "dt = auto needs diffusion; set an explicit dt".into(),
                    ));
                }
                self.cfl * bound
            }
        };
        let cfg = SchemeConfig {
            scheme: self.method,
            dt,
            t_end: self.t_end,
            blowup_threshold: self.blowup_threshold,
            output_every: self.output_every,
            max_steps: None,
        };
        cfg.validate(model, grid)?;
        Ok(cfg)
    }

    pub fn certificate_horizon(&self) -> f64 {
        self.horizon.unwrap_or(self.t_end)
    }

    /// Initial state: the snapshot if one is configured, otherwise the
    /// uniform values with a seeded cosine perturbation.
    pub fn initial_state(&self) -> Result<State> {
        if let Some(path) = &self.snapshot {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            return State::from_snapshot(crate::snapshot::decode(&bytes)?);
        }
        let grid = self.grid()?;
        if !(0.0..=MAX_PERTURBATION).contains(&self.perturbation) {
            return Err(Error::Config(format!(
                "perturbation must be in [0, {MAX_PERTURBATION}], got {}",
                self.perturbation
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut fields = Vec::with_capacity(3);
        for &base in &self.initial {
            let shape = cosine_perturbation(&grid, self.modes, &mut rng);
            let amp = self.perturbation;
            fields.push(Field::new(grid, shape.iter().map(|s| base * (1.0 + amp * s)).collect())?);
        }
        let w = fields.pop().unwrap();
        let v = fields.pop().unwrap();
        let u = fields.pop().unwrap();
        State::new(u, v, w, 0.0)
    }
}

/// Random combination of zero-flux cosine modes with sup norm at most 1.
fn cosine_perturbation(grid: &Grid, modes: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut terms: Vec<((usize, usize), f64)> = Vec::new();
    let ky_max = if grid.dim() == Dim::Two { modes } else { 0 };
    for kx in 0..=modes {
        for ky in 0..=ky_max {
            if kx == 0 && ky == 0 {
                continue;
            }
            terms.push(((kx, ky), rng.gen_range(-1.0..=1.0)));
        }
    }
    let total: f64 = terms.iter().map(|(_, a)| a.abs()).sum();
    let scale = if total > 0.0 { 1.0 / total } else { 0.0 };
    let (lx, ly) = (grid.length(0), grid.length(1));
    grid.sample(|x, y| {
        terms
            .iter()
            .map(|&((kx, ky), a)| {
                let cx = (kx as f64 * std::f64::consts::PI * x / lx).cos();
                let cy = (ky as f64 * std::f64::consts::PI * y / ly).cos();
                a * cx * cy
            })
            .sum::<f64>()
            * scale
    })
    .into_values()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            let text = cfg.to_text();
            let mut back = preset("phyllotaxis").unwrap();
            back.apply_text(&text).unwrap();
            assert_eq!(back, cfg, "{name}");
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn bare_and_qualified_keys() {
        let mut cfg = preset("phyllotaxis").unwrap();
        cfg.set("p1", "4").unwrap();
        cfg.set("grid.n", "32").unwrap();
        cfg.set("scheme.dt", "0.001").unwrap();
        assert_eq!(cfg.params.p[0], 4.0);
        assert_eq!(cfg.n, 32);
        assert_eq!(cfg.dt, TimeStep::Fixed(0.001));
        assert!(cfg.set("grid.p1", "1").is_err());
        assert!(cfg.set("kappa_u", "1").is_err());
        assert!(cfg.set("n", "many").is_err());
    }

    #[test]
    fn sections_scope_keys() {
        let mut cfg = preset("phyllotaxis").unwrap();
        cfg.apply_text("[model]\nsigma = 0.2 # comment\n\n[grid]\nn = 16\n").unwrap();
        assert_eq!(cfg.params.sigma, 0.2);
        assert_eq!(cfg.n, 16);
        assert!(cfg.apply_text("[grid]\nsigma = 1\n").is_err());
        assert!(cfg.apply_text("[nowhere]\n").is_err());
    }

    #[test]
    fn perturbation_is_seeded_and_bounded() {
        let mut cfg = preset("phyllotaxis").unwrap();
        cfg.seed = 7;
        let a = cfg.initial_state().unwrap();
        let b = cfg.initial_state().unwrap();
        assert_eq!(a, b);
        for f in a.fields() {
            assert!(f.min() >= 0.95 - 1e-15 && f.max() <= 1.05 + 1e-15);
            assert!(f.max() - f.min() > 1e-3);
        }
        cfg.seed = 8;
        assert_ne!(cfg.initial_state().unwrap(), a);
        cfg.perturbation = 0.2;
        assert!(cfg.initial_state().is_err());
    }

    #[test]
    fn auto_dt_is_half_the_bound() {
        let cfg = preset("phyllotaxis").unwrap();
        let model = cfg.model().unwrap();
        let grid = cfg.grid().unwrap();
        let s = cfg.scheme_config(&model, &grid).unwrap();
        assert_eq!(s.dt, 0.5 * (1.0 / 64.0f64).powi(2) / 2.0);
        let bu = preset("blowup_ode").unwrap();
        let s = bu.scheme_config(&bu.model().unwrap(), &bu.grid().unwrap()).unwrap();
        assert_eq!(s.dt, 1e-4);
    }
}
