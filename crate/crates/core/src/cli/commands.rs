//! `certify`, `simulate` and `verify`.

use std::fmt::Write as _;
use std::path::Path;

use crate::certificate::{
    assemble_q, certify_state, find_admissible_triple, minor_identity_check, Certificate,
    ExponentTriple,
};
use crate::error::{Error, Result};
use crate::integrator::{run, RunOutcome, RunResult, SchemeConfig, State};
use crate::model::Admissibility;
use crate::monitor::{check_run, floor_tolerance, Monitor, MonitorRow, VerificationReport, CSV_HEADER};
use crate::oracles::{verify_lemma1, verify_lemma2, SampleSpec};
use crate::snapshot::encode;

use super::{
    write_atomic, RunConfig, EXIT_BLOWUP, EXIT_CHECK_FAILED, EXIT_NO_CERTIFICATE, EXIT_OK,
    EXIT_POSITIVITY,
};

pub const CERTIFICATE_FILE: &str = "certificate.txt";
pub const MONITOR_FILE: &str = "monitor.csv";
pub const SNAPSHOT_FILE: &str = "final.gm3s";
pub const CONFIG_FILE: &str = "config.txt";

/// Triple used for monitoring when no certificate is available.
const FALLBACK_TRIPLE: (f64, f64, f64) = (2.0, 0.25, 0.25);

/// Everything a simulation produces.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub rows: Vec<MonitorRow>,
    pub result: RunResult,
    pub certificate: Option<Certificate>,
    /// Why no certificate was issued.
    pub certificate_error: Option<String>,
    pub scheme: SchemeConfig,
    pub floor_tol: f64,
}

impl Simulation {
    pub fn csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv_line());
            s.push('\n');
        }
        s
    }

    pub fn max_l(&self) -> f64 {
        self.rows.iter().map(|r| r.l).fold(f64::NAN, f64::max)
    }
}

/// Certificate for the configured initial state, or the reason there is none.
pub fn certify_config(cfg: &RunConfig, initial: &State) -> std::result::Result<Certificate, Error> {
    let params = cfg.validated_params()?;
    if cfg.admissibility == Admissibility::Relaxed {
        // Relaxed parameters may still satisfy the strict hypotheses.
        let strict = cfg.params.validate()?;
        return certify_state(&strict, initial, cfg.certificate_horizon());
    }
    certify_state(&params, initial, cfg.certificate_horizon())
}

/// Runs the configured simulation, optionally with a given certificate.
pub fn simulate(cfg: &RunConfig, stop_after: Option<u64>, given: Option<Certificate>) -> Result<Simulation> {
    let model = cfg.model()?;
    let initial = cfg.initial_state()?;
    let grid = *initial.grid();
    let mut scheme = cfg.scheme_config(&model, &grid)?;
    scheme.max_steps = stop_after;
    let (certificate, certificate_error) = match given {
        Some(c) => (Some(c), None),
        None => match certify_config(cfg, &initial) {
            Ok(c) => (Some(c), None),
            Err(e) => (None, Some(e.to_string())),
        },
    };
    let monitor = match &certificate {
        Some(c) => Monitor::for_certificate(c, &initial),
        None => {
            let triple = find_admissible_triple(&model.params).unwrap_or_else(|_| {
                let (a, b, g) = FALLBACK_TRIPLE;
                ExponentTriple { alpha: a, beta: b, gamma: g }
            });
            Monitor::new(triple, assemble_q(&triple, model.params.a), model.params.b, &initial, None)
        }
    };
    let mut rows = Vec::new();
    let result = run(initial, &model, &scheme, |s| {
        rows.push(monitor.row(s));
        Ok(())
    })?;
    let floor_tol = floor_tolerance(scheme.dt, grid.min_spacing(), model.params.max_decay());
    Ok(Simulation {
        rows,
        result,
        certificate,
        certificate_error,
        scheme,
        floor_tol,
    })
}

pub fn outcome_exit_code(outcome: &RunOutcome) -> i32 {
    match outcome {
        RunOutcome::CompletedBounded | RunOutcome::Paused { .. } => EXIT_OK,
        RunOutcome::BlowUpSuspected { .. } => EXIT_BLOWUP,
        RunOutcome::PositivityLoss { .. } => EXIT_POSITIVITY,
    }
}

pub fn describe_outcome(outcome: &RunOutcome) -> String {
    match outcome {
        RunOutcome::CompletedBounded => "completed_bounded".into(),
        RunOutcome::BlowUpSuspected { t, component } => {
            format!("blowup_suspected t={t:?} component={component}")
        }
        RunOutcome::PositivityLoss {
            t,
            component,
            cell,
            value,
        } => format!(
            "positivity_loss t={t:?} component={component} cell={cell} value={value:e} (try a smaller dt)"
        ),
        RunOutcome::Paused { t, step } => format!("paused t={t:?} step={step}"),
    }
}

pub fn certificate_summary(cert: &Certificate) -> String {
    let mut s = String::new();
    let b = &cert.branch;
    let _ = writeln!(
        s,
        "branch {} (p1-1 = {}, bounds {} / {})",
        b.selected_branch.as_str(),
        b.condition_value_left,
        b.bound_v_branch,
        b.bound_w_branch
    );
    let t = &cert.triple;
    let _ = writeln!(s, "triple alpha={} beta={} gamma={}", t.alpha, t.beta, t.gamma);
    let _ = writeln!(
        s,
        "minors {:e} {:e} {:e}, mu = {}",
        cert.qform.minors[0], cert.qform.minors[1], cert.qform.minors[2], cert.mu()
    );
    let l = &cert.lemma1;
    let _ = writeln!(s, "epsilon={} theta={} C={:e}", l.epsilon, l.theta, l.big_c);
    let p = &cert.proof;
    let _ = writeln!(
        s,
        "C0={:e} C2={:e} C3={:e} C4={:e} C5={:e}",
        cert.c0, p.c2, p.c3, p.c4, p.c5
    );
    let _ = writeln!(s, "L(0)={} kappa={:e} horizon={}", cert.l0, cert.kappa, cert.horizon);
    let _ = write!(s, "valid: {}", cert.is_valid());
    s
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<i32> {
    cfg.validated_params()?;
    let initial = cfg.initial_state()?;
    match certify_config(cfg, &initial) {
        Ok(cert) => {
            write_atomic(&cfg.out.join(CERTIFICATE_FILE), cert.to_text().as_bytes())?;
            println!("{}", certificate_summary(&cert));
            Ok(if cert.is_valid() { EXIT_OK } else { EXIT_NO_CERTIFICATE })
        }
        Err(Error::InfeasibleBranch(reason)) => {
            println!("infeasible: exponent condition fails: {reason}");
            Ok(EXIT_NO_CERTIFICATE)
        }
        Err(e @ (Error::Config(_) | Error::Io { .. } | Error::Snapshot(_) | Error::InvalidGrid(_))) => {
            Err(e)
        }
        Err(e) => {
            println!("no certificate: {e}");
            Ok(EXIT_NO_CERTIFICATE)
        }
    }
}

pub fn cmd_simulate(cfg: &RunConfig, stop_after: Option<u64>) -> Result<i32> {
    let sim = simulate(cfg, stop_after, None)?;
    match (&sim.certificate, &sim.certificate_error) {
        (Some(c), _) => write_atomic(&cfg.out.join(CERTIFICATE_FILE), c.to_text().as_bytes())?,
        (None, Some(reason)) => eprintln!("warning: running without a certificate ({reason})"),
        (None, None) => {}
    }
    write_atomic(&cfg.out.join(MONITOR_FILE), sim.csv().as_bytes())?;
    write_atomic(&cfg.out.join(SNAPSHOT_FILE), &encode(&sim.result.state.to_snapshot()))?;
    write_atomic(&cfg.out.join(CONFIG_FILE), cfg.to_text().as_bytes())?;
    println!(
        "{} ({} steps, {} rows)",
        describe_outcome(&sim.result.outcome),
        sim.result.steps_taken,
        sim.rows.len()
    );
    Ok(outcome_exit_code(&sim.result.outcome))
}

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Oracle checks on a certificate's constants.
pub fn lemma_checks(cert: &Certificate) -> Result<Vec<CheckLine>> {
    let mut out = Vec::new();
    let l = &cert.lemma1;
    let spec = SampleSpec::cube(10.0, l.floor_y, 10.0 * l.floor_y, l.floor_z, 10.0 * l.floor_z, 20);
    let violations = verify_lemma1(l, &spec)?;
    out.push(CheckLine {
        name: "pointwise_estimate",
        passed: violations.is_empty(),
        detail: format!("{} violations over 20^3 samples", violations.len()),
    });
    let l2 = verify_lemma2(cert.mu(), &cert.forcing_terms(), cert.l0, cert.horizon)?;
    out.push(CheckLine {
        name: "comparison_ode",
        passed: l2.holds && l2.max_w <= cert.kappa * (1.0 + 1e-8),
        detail: format!("max W = {:e}, kappa = {:e}", l2.max_w, cert.kappa),
    });
    let residual = minor_identity_check(&cert.qform, &cert.triple, cert.params.a)?;
    let fresh = assemble_q(&cert.triple, cert.params.a);
    out.push(CheckLine {
        name: "minor_identity",
        passed: residual < 1e-10 && fresh.is_positive_definite() && cert.minors_positive,
        detail: format!("relative residual {residual:e}"),
    });
    let recomputed = cert.recompute_kappa()?;
    out.push(CheckLine {
        name: "kappa_consistent",
        passed: cert.kappa >= recomputed * (1.0 - 1e-12),
        detail: format!("stored {:e}, recomputed {:e}", cert.kappa, recomputed),
    });
    Ok(out)
}

pub fn run_checks(report: &VerificationReport) -> Vec<CheckLine> {
    vec![
        CheckLine {
            name: "certificate_present",
            passed: report.certificate_present,
            detail: String::new(),
        },
        CheckLine {
            name: "lyapunov_below_kappa",
            passed: report.l_bounded_by_kappa && report.kappa_consistent,
            detail: format!("max L = {:e} at t = {:?}", report.max_l, report.argmax_t),
        },
        CheckLine {
            name: "floors_hold",
            passed: report.floors_hold,
            detail: format!("min margin {:e}", report.min_floor_margin),
        },
        CheckLine {
            name: "qform_nonneg",
            passed: report.qform_nonneg,
            detail: format!("min {:e}", report.min_qform),
        },
    ]
}

fn print_table(lines: &[CheckLine]) {
    for l in lines {
        let status = if l.passed { "PASS" } else { "FAIL" };
        if l.detail.is_empty() {
            println!("{status}  {}", l.name);
        } else {
            println!("{status}  {:<22} {}", l.name, l.detail);
        }
    }
}

pub fn cmd_verify(cfg: &RunConfig, lemmas_only: bool, certificate: Option<&Path>) -> Result<i32> {
    let given = match certificate {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(Certificate::from_text(&text)?)
        }
        None => None,
    };
    let cert = match given.clone() {
        Some(c) => c,
        None => {
            let initial = cfg.initial_state()?;
            match certify_config(cfg, &initial) {
                Ok(c) => c,
                Err(e) => {
                    println!("FAIL  certificate_present    {e}");
                    return Ok(EXIT_CHECK_FAILED);
                }
            }
        }
    };
    let mut lines = lemma_checks(&cert)?;
    if !lemmas_only {
        let sim = simulate(cfg, None, Some(cert.clone()))?;
        let report = check_run(&sim.rows, sim.certificate.as_ref(), sim.floor_tol);
        lines.push(CheckLine {
            name: "run_completed",
            passed: sim.result.outcome == RunOutcome::CompletedBounded,
            detail: describe_outcome(&sim.result.outcome),
        });
        lines.extend(run_checks(&report));
    }
    print_table(&lines);
    Ok(if lines.iter().all(|l| l.passed) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}
