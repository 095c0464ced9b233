//! Subcommand bodies shared by the binary and the integration tests. Each
//! returns its report text plus the process exit code instead of printing,
//! so tests can assert on both.

use crate::config::{ConfigError, ExperimentConfig};
use nullwave::algebra::{classify, parametrize, CoefficientTensor};
use nullwave::diag::{self, EnergyReport, FluxAccumulator, ReportInputs, Thresholds};
use nullwave::ghost::GhostWeightTable;
use nullwave::solver::{self, RunRecord};
use nullwave::Workers;
use std::fmt::Write as _;

/// Exit code meaning a well-formed tensor failed the null condition, or a
/// run ended in detected breakdown.
pub const EXIT_DEGENERATE: i32 = 2;
/// Exit code for unusable input: parse errors, bad config, I/O.
pub const EXIT_USAGE: i32 = 1;

/// Null / strong-null / CLM verdicts with the evidence: violated symbol
/// coefficients when the tensor is not null, the free parameters and basis
/// decomposition when it is.
pub fn classify_report(g: &CoefficientTensor) -> (String, i32) {
    let mut out = String::new();
    if !g.check_null() {
        out.push_str("null: no\n");
        let coeffs = g.full_symbol().nonzero_coeffs();
        let parts: Vec<String> = coeffs.iter().map(|(n, v)| format!("{n}={v}")).collect();
        let _ = writeln!(out, "violated symbol coefficients: {}", parts.join(", "));
        return (out, EXIT_DEGENERATE);
    }
    let d = classify(g).expect("null tensors always decompose");
    let p = parametrize(g).expect("null tensors always parametrize");
    out.push_str("null: yes\n");
    let _ = writeln!(out, "strong: {}", yes_no(g.check_strong_null()));
    let _ = writeln!(out, "clm: {}", yes_no(d.is_clm_class()));
    let params: Vec<String> = p
        .a
        .iter()
        .enumerate()
        .map(|(i, v)| format!("a{}={}", i + 1, v))
        .collect();
    let _ = writeln!(out, "parameters: {}", params.join(", "));
    let _ = writeln!(out, "decomposition: {d}");
    (out, 0)
}

/// Verdicts only, no evidence; same exit convention as classify.
pub fn check_report(g: &CoefficientTensor) -> (String, i32) {
    let null = g.check_null();
    let mut out = format!("null: {}\n", yes_no(null));
    let _ = writeln!(out, "strong: {}", yes_no(g.check_strong_null()));
    (out, if null { 0 } else { EXIT_DEGENERATE })
}

fn yes_no(v: bool) -> &'static str {
    if v {
        "yes"
    } else {
        "no"
    }
}

/// A completed or broken-down run with everything the summary needs.
pub struct RunOutcome {
    pub record: RunRecord,
    pub reports: Vec<EnergyReport>,
    pub csv: String,
    pub summary: String,
    pub exit: i32,
}

/// Drift ratios E_m(t)/E_m(start) across a run's reports; an identically
/// zero start (the ε = 0 run) pins every ratio to 1.
pub fn drift_ratios(reports: &[EnergyReport]) -> Vec<f64> {
    let base = reports.first().and_then(|r| r.energies.last()).copied();
    let base = match base {
        Some(b) if b > 0.0 => b,
        _ => return vec![1.0; reports.len()],
    };
    reports
        .iter()
        .map(|r| r.energies.last().copied().unwrap_or(0.0) / base)
        .collect()
}

/// Executes the configured run with the full diagnostics sink, collecting
/// one CSV row and one report per sample.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, ConfigError> {
    let tensor = cfg.resolve_tensor()?;
    run_with_tensor(cfg, tensor)
}

/// [`run_experiment`] with the tensor supplied directly, bypassing the
/// config's tensor source.
pub fn run_with_tensor(
    cfg: &ExperimentConfig,
    tensor: CoefficientTensor,
) -> Result<RunOutcome, ConfigError> {
    let solver_cfg = cfg.solver_config(tensor.clone());
    let t_final = solver_cfg.t_final;
    let m = solver_cfg.m_diag;
    let table = GhostWeightTable::shared();
    let workers = Workers::new(cfg.workers);

    let mut csv = diag::csv_header(m);
    csv.push('\n');
    let mut reports: Vec<EnergyReport> = Vec::new();
    let mut flux = FluxAccumulator::new();
    let mut sink_err: Option<diag::DiagError> = None;

    let record = solver::run::<f64>(solver_cfg, workers, |ctx| {
        if sink_err.is_some() {
            return;
        }
        let inputs = ReportInputs {
            hist: ctx.hist,
            active: ctx.active,
            workers: ctx.workers,
            tensor: &tensor,
            table,
            m,
            thresholds: Thresholds::default(),
        };
        match diag::energy_report(&inputs, &mut flux) {
            Ok(rep) => {
                let mut row = Vec::new();
                diag::write_csv_row(&mut row, &rep).expect("writing to a Vec cannot fail");
                csv.push_str(std::str::from_utf8(&row).expect("rows are ASCII"));
                reports.push(rep);
            }
            Err(e) => sink_err = Some(e),
        }
    })
    .map_err(|e| ConfigError::Tensor(e.to_string()))?;
    if let Some(e) = sink_err {
        return Err(ConfigError::Tensor(format!("diagnostics failed: {e}")));
    }

    let summary = summarize(&record, &reports, m, t_final);
    let exit = if record.completed() { 0 } else { EXIT_DEGENERATE };
    Ok(RunOutcome {
        record,
        reports,
        csv,
        summary,
        exit,
    })
}

/// Human-readable closing block printed after the CSV is written.
fn summarize(record: &RunRecord, reports: &[EnergyReport], m: usize, t_final: f64) -> String {
    let mut out = String::new();
    match &record.breakdown {
        None => {
            let _ = writeln!(
                out,
                "status: completed t={:.3} ({} steps, {} samples)",
                record.final_time, record.steps, record.samples
            );
        }
        Some(b) => {
            let _ = writeln!(out, "status: breakdown at t={:.3}: {}", b.time, b.reason);
        }
    }
    let ratios = drift_ratios(reports);
    if let (Some(first), Some(last)) = (ratios.first(), ratios.last()) {
        let lo = ratios.iter().cloned().fold(*first, f64::min);
        let hi = ratios.iter().cloned().fold(*first, f64::max);
        let _ = writeln!(
            out,
            "E_{m} drift ratio: final {last:.6}, range [{lo:.6}, {hi:.6}]"
        );
    }
    if let Some(last) = reports.last() {
        let _ = writeln!(out, "cumulative flux: {:.6e}", last.flux_cumulative);
    }
    let mut slopes = Vec::new();
    let picks: [(&str, fn(&EnergyReport) -> f64); 4] = [
        ("sup_du", |r| r.sup_du),
        ("interior_d2", |r| r.interior_d2),
        ("weighted_d2", |r| r.weighted_d2),
        ("T_du_sup", |r| r.t_du_sup),
    ];
    for (name, pick) in picks {
        let series: Vec<(f64, f64)> = reports.iter().map(|r| (r.t, pick(r))).collect();
        if let Some(s) = diag::fit_loglog_slope(&series, 10.0, t_final) {
            slopes.push(format!("{name} {s:+.3}"));
        }
    }
    if !slopes.is_empty() {
        let _ = writeln!(out, "slopes over [10, {t_final}]: {}", slopes.join(", "));
    }
    let _ = writeln!(
        out,
        "min denominator {:.6}, max gradient {:.6}",
        record.min_denominator, record.max_gradient
    );
    out
}
