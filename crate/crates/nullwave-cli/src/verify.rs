//! The verification suite: ten numbered criteria covering the exact
//! algebra (round-trips, checker equivalence, the strong-null dichotomy),
//! the discrete identities (ghost-energy and null-structure residuals, the
//! refined Hardy inequality), solver health (conservation, manufactured
//! convergence order), and the physical trend runs (strong-null energy
//! boundedness, dispersive decay, non-null contrast). Every criterion
//! reports measured against required and never panics on failure.

use crate::commands::{drift_ratios, run_experiment, run_with_tensor};
use crate::config::{parse_decomposition, ExperimentConfig, TensorSource};
use nullwave::algebra::{
    classify, preset_names, preset_tensor, random_decomposition, random_null_tensor, synthesize,
    CoefficientTensor,
};
use nullwave::diag::{self, DecayMonitor, FluxAccumulator, Thresholds};
use nullwave::ghost::GhostWeightTable;
use nullwave::grid::Grid2D;
use nullwave::history::MultiIndex;
use nullwave::profiles::{bump1d, bump_derivatives};
use nullwave::solver::{self, SolverConfig, SourceFn};
use nullwave::Workers;
use num::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::time::Instant;

/// Amplitude for the non-null contrast run, chosen so the g^{000} tensor
/// leaves the small-data regime inside the t ≤ 20 horizon while the
/// strong-null companion at the same amplitude keeps its second-order
/// energy within ±10%. Recorded here so the contrast is reproducible.
pub const CALIBRATED_NONNULL_EPSILON: f64 = 0.4;

/// One acceptance criterion: what was required, what was measured.
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub required: String,
    pub measured: String,
    pub pass: bool,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: measured {}; required {}",
            self.index,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.required
        )
    }
}

pub struct VerifyReport {
    pub results: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        for r in &self.results {
            out.push_str(&r.line());
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "verify: {}/{} criteria pass",
            self.results.iter().filter(|r| r.pass).count(),
            self.results.len()
        );
        out
    }
}

/// Ghost-weight sandwich and flux-monotonicity witnesses collected at every
/// sample of every run the suite performs.
#[derive(Default)]
struct SampleAudit {
    samples: u64,
    max_sandwich_excess: f64,
    max_flux_decrease: f64,
}

impl SampleAudit {
    /// `plain` is ∥∂u∥², `weighted` its ghost-weighted counterpart; the
    /// weight e^{q(r−t)} lies in [e^{−Q}, e^{Q}] with Q = q(∞), so the
    /// weighted energy must sit inside the corresponding two-sided bound.
    fn absorb(&mut self, plain: f64, weighted: f64, q_inf: f64, prev_cum: Option<f64>, cum: f64) {
        self.samples += 1;
        let lo = (-q_inf).exp() * plain;
        let hi = q_inf.exp() * plain;
        let scale = hi.abs().max(1e-300);
        let excess = ((lo - weighted).max(weighted - hi) / scale).max(0.0);
        self.max_sandwich_excess = self.max_sandwich_excess.max(excess);
        if let Some(p) = prev_cum {
            let drop = (p - cum) / p.abs().max(1e-300);
            self.max_flux_decrease = self.max_flux_decrease.max(drop);
        }
    }

    fn absorb_reports(&mut self, reports: &[diag::EnergyReport], q_inf: f64) {
        let mut prev = None;
        for r in reports {
            self.absorb(r.energies[0], r.weighted_energy, q_inf, prev, r.flux_cumulative);
            prev = Some(r.flux_cumulative);
        }
    }
}

/// Runs all ten criteria in order and collects their results.
pub fn run_all(workers: usize) -> VerifyReport {
    let workers = workers.max(1);
    let mut audit = SampleAudit::default();
    let results = vec![
        classification_round_trip(),
        checker_equivalence(),
        strong_null_dichotomy(),
        identity_refinement(workers),
        hardy_random_profiles(),
        linear_health(workers, &mut audit),
        strong_null_trend(workers, &mut audit),
        dispersive_decay(workers, &mut audit),
        non_null_contrast(workers, &mut audit),
        sandwich_and_monotonicity(&audit),
    ];
    VerifyReport { results }
}

/// 1. Synthesize → classify must invert exactly on random rational
/// decompositions, and quickly.
pub fn classification_round_trip() -> CriterionResult {
    const TRIALS: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1bd5_9ec1);
    let start = Instant::now();
    let mut exact = 0usize;
    for _ in 0..TRIALS {
        let d = random_decomposition(&mut rng);
        let g = synthesize(&d);
        if classify(&g).ok().as_ref() == Some(&d) {
            exact += 1;
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    CriterionResult {
        index: 1,
        name: "classification round-trip",
        required: format!("{TRIALS}/{TRIALS} exact in < 10 s"),
        measured: format!("{exact}/{TRIALS} exact in {elapsed:.2} s"),
        pass: exact == TRIALS && elapsed < 10.0,
    }
}

/// 2. The exact-symbol, closed-relation, and 64-point sampled versions of
/// both checkers agree on random null tensors and on every preset.
pub fn checker_equivalence() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7f4a_3c2d);
    let mut tensors: Vec<CoefficientTensor> =
        (0..1000).map(|_| random_null_tensor(&mut rng)).collect();
    for name in preset_names() {
        tensors.push(preset_tensor(name).expect("catalog names resolve"));
    }
    let total = tensors.len();
    let mut disagreements = 0usize;
    for g in &tensors {
        let null = [
            g.check_null(),
            g.check_null_relations(),
            g.check_null_sampled(64, 1e-12),
        ];
        let strong = [
            g.check_strong_null(),
            g.check_strong_null_relations(),
            g.check_strong_null_sampled(64, 1e-12),
        ];
        if null.iter().any(|&v| v != null[0]) || strong.iter().any(|&v| v != strong[0]) {
            disagreements += 1;
        }
    }
    CriterionResult {
        index: 2,
        name: "checker equivalence",
        required: format!("0 disagreements across {total} tensors"),
        measured: format!("{disagreements} disagreements across {total} tensors"),
        pass: disagreements == 0,
    }
}

/// 3. A/B presets are strong null, C/D presets are null but not strong,
/// and GC0 classifies as its documented combination.
pub fn strong_null_dichotomy() -> CriterionResult {
    let mut bad: Vec<String> = Vec::new();
    for name in preset_names() {
        let g = preset_tensor(name).expect("catalog names resolve");
        if name.starts_with("FA") || name.starts_with("FB") {
            if !g.check_strong_null() {
                bad.push(format!("{name} not strong"));
            }
        } else if name.starts_with("FC") || name.starts_with("FD") {
            if !g.check_null() || g.check_strong_null() {
                bad.push(format!("{name} not on the null-only side"));
            }
        }
    }
    let gc0 = classify(&preset_tensor("GC0").expect("GC0 in catalog"))
        .expect("GC0 is null");
    let expected =
        parse_decomposition("C1[1]=1/2, C2[1]=-1, C4[2]=-1").expect("fixed text parses");
    if gc0 != expected {
        bad.push(format!("GC0 = {gc0}"));
    }
    CriterionResult {
        index: 3,
        name: "strong-null dichotomy",
        required: "A/B strong, C/D null only, GC0 = C1[1]=1/2, C2[1]=-1, C4[2]=-1".into(),
        measured: if bad.is_empty() {
            format!("all {} presets on the expected side, GC0 = {gc0}", preset_names().len())
        } else {
            bad.join("; ")
        },
        pass: bad.is_empty(),
    }
}

/// 4. The discrete null-structure identity residual shrinks at second
/// order under mesh refinement for smooth test functions, for both a
/// strong-null and a null-only tensor.
pub fn identity_refinement(workers: usize) -> CriterionResult {
    let workers = Workers::new(workers);
    let f = |t: f64, x: f64, y: f64| {
        (-(x * x + y * y) / 1.8).exp() * (0.9 * t + 0.4 * x - 0.3 * y).sin()
    };
    let g = |t: f64, x: f64, y: f64| {
        (-(x * x + 0.8 * y * y) / 2.2).exp() * (0.7 * t - 0.2 * x + 0.5 * y).cos()
    };
    let mut measured = Vec::new();
    let mut pass = true;
    for name in ["FA0", "FD3"] {
        let tensor = preset_tensor(name).expect("catalog names resolve");
        let mut residuals = Vec::new();
        for k in 0..4 {
            let h = 0.25 / f64::powi(2.0, k);
            let grid = Grid2D::new(3.0, h).expect("commensurate grid");
            let r = diag::null_identity_residual(&tensor, &f, &g, grid, 2.0, &workers)
                .expect("null tensors pass the gate");
            residuals.push(r);
        }
        let ratios: Vec<f64> = residuals.windows(2).map(|w| w[0] / w[1]).collect();
        pass &= ratios.iter().all(|&r| (3.0..=5.0).contains(&r));
        measured.push(format!(
            "{name} ratios [{}]",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", ")
        ));
    }
    CriterionResult {
        index: 4,
        name: "null identity refinement",
        required: "residual ratio 4 ± 1 under h → h/2, three refinements, FA0 and FD3".into(),
        measured: measured.join("; "),
        pass,
    }
}

/// 5. The refined Hardy inequality with constant 4 holds for randomized
/// compactly supported radial profiles.
pub fn hardy_random_profiles() -> CriterionResult {
    const TRIALS: usize = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(0x52a6_01f7);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..TRIALS {
        let big_m = 1.0 + 5.0 * rng.random::<f64>();
        let pieces: Vec<(f64, f64, f64)> = (0..rng.random_range(1..=3))
            .map(|_| {
                let width = 0.2 + 0.8 * rng.random::<f64>();
                let center = rng.random::<f64>() * (big_m + 0.8 - width).max(0.0);
                let amp = 2.0 * rng.random::<f64>() - 1.0;
                (amp, center, width)
            })
            .collect();
        let f = move |rho: f64| {
            pieces
                .iter()
                .map(|&(a, c, w)| a * bump1d((rho - c) / w))
                .sum::<f64>()
        };
        match diag::hardy_check(&f, big_m) {
            Ok((lhs, rhs)) => {
                let excess = (lhs - 4.0 * rhs) / rhs.abs().max(1.0);
                worst = worst.max(excess);
                if excess > 1e-8 {
                    violations += 1;
                }
            }
            Err(_) => violations += 1,
        }
    }
    CriterionResult {
        index: 5,
        name: "refined Hardy inequality",
        required: format!("0 violations beyond 1e-8 in {TRIALS} profiles"),
        measured: format!("{violations} violations, worst relative excess {worst:.2e}"),
        pass: violations == 0,
    }
}

fn zero_tensor_config(h: f64, half_extent: f64, t_final: f64, m_diag: usize) -> SolverConfig {
    let mut cfg = SolverConfig::defaults(CoefficientTensor::zero());
    cfg.h = h;
    cfg.dt = h / 4.0;
    cfg.half_extent = half_extent;
    cfg.t_final = t_final;
    cfg.m_diag = m_diag;
    cfg.epsilon = 1.0;
    cfg.sample_stride = ((0.5 / cfg.dt).round() as usize).max(1);
    cfg
}

/// 6. Linear solver health: the conserved discrete energy of the g = 0 run
/// drifts below 1e−6 over t ∈ [2, 12], and a manufactured oscillating-bump
/// solution converges at global order 2.
fn linear_health(workers: usize, audit: &mut SampleAudit) -> CriterionResult {
    let table = GhostWeightTable::shared();
    let q_inf = table.q_infinity();

    let mut cfg = zero_tensor_config(1.0 / 64.0, 12.0, 12.0, 0);
    cfg.epsilon = 0.01;
    let mut drift = 0.0f64;
    let mut base = None;
    let mut flux = FluxAccumulator::new();
    let mut prev_cum = None;
    let run = solver::run::<f64>(cfg, Workers::new(workers), |ctx| {
        let e = ctx.staggered_energy;
        let b = *base.get_or_insert(e);
        if b > 0.0 {
            drift = drift.max((e / b - 1.0).abs());
        }
        let window = ctx.hist.window(1).expect("ring holds three levels");
        let plain = diag::du_l2_sq(&window, &ctx.active, ctx.workers);
        let (weighted, density) = diag::weighted_energy_and_flux(
            ctx.hist,
            MultiIndex::ZERO,
            &ctx.active,
            ctx.workers,
            table,
        )
        .expect("window depth suffices");
        let (_, cum) = flux.absorb(ctx.time, density);
        audit.absorb(plain, weighted, q_inf, prev_cum, cum);
        prev_cum = Some(cum);
    });
    let drift_ok = matches!(&run, Ok(r) if r.completed()) && drift < 1e-6;

    let omega = 1.3;
    let exact = move |t: f64, x: f64, y: f64| bump_derivatives(x, y).0 * (omega * (t - 2.0)).cos();
    let mut errors = Vec::new();
    for k in 0..3 {
        let h = 1.0 / 16.0 / f64::powi(2.0, k);
        let cfg = zero_tensor_config(h, 4.0, 4.0, 0);
        let source: SourceFn = Box::new(move |t: f64, x: f64, y: f64| {
            let (b, _, lap) = bump_derivatives(x, y);
            -(omega * (t - 2.0)).cos() * (omega * omega * b + lap)
        });
        let mut sup_err = 0.0f64;
        let mut flux = FluxAccumulator::new();
        let mut prev_cum = None;
        let mut sink = |ctx: &solver::SampleContext<'_, f64>| {
            let grid = ctx.hist.grid();
            let level = ctx.hist.level(ctx.hist.center_index());
            let t = ctx.time;
            let mut worst = 0.0f64;
            for i in ctx.active.rows() {
                for j in ctx.active.cols() {
                    let e = (level.get(i, j) - exact(t, grid.coord(i), grid.coord(j))).abs();
                    worst = worst.max(e);
                }
            }
            sup_err = worst;
            let window = ctx.hist.window(1).expect("ring holds three levels");
            let plain = diag::du_l2_sq(&window, &ctx.active, ctx.workers);
            let (weighted, density) = diag::weighted_energy_and_flux(
                ctx.hist,
                MultiIndex::ZERO,
                &ctx.active,
                ctx.workers,
                table,
            )
            .expect("window depth suffices");
            let (_, cum) = flux.absorb(ctx.time, density);
            audit.absorb(plain, weighted, q_inf, prev_cum, cum);
            prev_cum = Some(cum);
        };
        let rec =
            solver::run_with_source::<f64>(cfg, Workers::new(workers), Some(source), &mut sink);
        match rec {
            Ok(r) if r.completed() => errors.push(sup_err),
            _ => errors.push(f64::NAN),
        }
    }
    let order = if errors.iter().all(|e| e.is_finite() && *e > 0.0) {
        (errors[1] / errors[2]).log2()
    } else {
        f64::NAN
    };
    let order_ok = order.is_finite() && (order - 2.0).abs() <= 0.2;

    CriterionResult {
        index: 6,
        name: "linear solver health",
        required: "discrete energy drift < 1e-6 on [2,12]; manufactured order 2.0 ± 0.2".into(),
        measured: format!(
            "drift {drift:.2e}; sup errors [{}] → order {order:.2}",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", ")
        ),
        pass: drift_ok && order_ok,
    }
}

fn trend_config(tensor_name: &str) -> ExperimentConfig {
    ExperimentConfig {
        tensor: Some(TensorSource::Preset(tensor_name.into())),
        sample_interval: 1.0,
        ..ExperimentConfig::default()
    }
}

/// 7. The strong-null production run: second-order energy pinned near its
/// initial value for fifty time units, good-derivative flux saturating.
fn strong_null_trend(workers: usize, audit: &mut SampleAudit) -> CriterionResult {
    let start = Instant::now();
    let mut cfg = trend_config("FA0");
    cfg.workers = workers;
    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e) => {
            return CriterionResult {
                index: 7,
                name: "strong-null energy trend",
                required: "E2 ratio in [0.9, 1.1]; final-10-unit flux < 5%; < 30 min".into(),
                measured: format!("run failed: {e}"),
                pass: false,
            }
        }
    };
    let minutes = start.elapsed().as_secs_f64() / 60.0;
    audit.absorb_reports(&outcome.reports, GhostWeightTable::shared().q_infinity());

    let ratios = drift_ratios(&outcome.reports);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &r in &ratios {
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let total = outcome.reports.last().map_or(0.0, |r| r.flux_cumulative);
    let at_40 = outcome
        .reports
        .iter()
        .filter(|r| r.t <= 40.0 + 1e-9)
        .next_back()
        .map_or(0.0, |r| r.flux_cumulative);
    let tail_fraction = if total > 0.0 { (total - at_40) / total } else { 0.0 };
    let pass = outcome.record.completed()
        && lo >= 0.9
        && hi <= 1.1
        && tail_fraction < 0.05
        && minutes < 30.0;
    CriterionResult {
        index: 7,
        name: "strong-null energy trend",
        required: "E2 ratio in [0.9, 1.1]; final-10-unit flux < 5%; < 30 min".into(),
        measured: format!(
            "E2 ratio in [{lo:.4}, {hi:.4}]; tail flux {:.2}%; {minutes:.1} min",
            100.0 * tail_fraction
        ),
        pass,
    }
}

fn monitor_value(monitors: &[DecayMonitor], name: &str) -> f64 {
    monitors
        .iter()
        .find(|m| m.name == name)
        .map_or(f64::NAN, |m| m.value)
}

/// 8. Dispersive decay of the linear bump run: the gradient sup decays at
/// the cylindrical rate, the interior Hessian at least one power faster.
fn dispersive_decay(workers: usize, audit: &mut SampleAudit) -> CriterionResult {
    let table = GhostWeightTable::shared();
    let q_inf = table.q_infinity();
    let thresholds = Thresholds::default();
    let cfg = zero_tensor_config(1.0 / 32.0, 52.0, 50.0, 2);
    let mut sup_series = Vec::new();
    let mut interior_series = Vec::new();
    let mut flux = FluxAccumulator::new();
    let mut prev_cum = None;
    let mut failure = None;
    let run = solver::run::<f64>(cfg, Workers::new(workers), |ctx| {
        if failure.is_some() {
            return;
        }
        match diag::decay_monitors(ctx.hist, 2, &ctx.active, ctx.workers, &thresholds, table) {
            Ok(monitors) => {
                sup_series.push((ctx.time, monitor_value(&monitors, "sup_du")));
                interior_series.push((ctx.time, monitor_value(&monitors, "interior_hessian")));
            }
            Err(e) => failure = Some(e.to_string()),
        }
        let window = ctx.hist.window(1).expect("ring holds three levels");
        let plain = diag::du_l2_sq(&window, &ctx.active, ctx.workers);
        match diag::weighted_energy_and_flux(ctx.hist, MultiIndex::ZERO, &ctx.active, ctx.workers, table)
        {
            Ok((weighted, density)) => {
                let (_, cum) = flux.absorb(ctx.time, density);
                audit.absorb(plain, weighted, q_inf, prev_cum, cum);
                prev_cum = Some(cum);
            }
            Err(e) => failure = Some(e.to_string()),
        }
    });
    let sup_slope = diag::fit_loglog_slope(&sup_series, 10.0, 50.0);
    let interior_slope = diag::fit_loglog_slope(&interior_series, 10.0, 50.0);
    let (measured, pass) = match (&run, failure, sup_slope, interior_slope) {
        (Ok(rec), None, Some(s), Some(i)) if rec.completed() => (
            format!("sup|∂u| slope {s:+.3}, interior Hessian slope {i:+.3}, gap {:.3}", s - i),
            (s + 0.5).abs() <= 0.1 && i <= s - 0.5,
        ),
        (_, Some(e), _, _) => (format!("diagnostics failed: {e}"), false),
        _ => ("run did not complete or too few positive samples".into(), false),
    };
    CriterionResult {
        index: 8,
        name: "dispersive decay",
        required: "sup|∂u| slope -0.5 ± 0.1 on [10,50]; interior slope ≤ slope - 0.5".into(),
        measured,
        pass,
    }
}

/// 9. Non-null contrast: the g^{000} tensor at the calibrated amplitude
/// either breaks down or drifts at least five times more than the
/// strong-null companion, which itself stays within bounds.
fn non_null_contrast(workers: usize, audit: &mut SampleAudit) -> CriterionResult {
    let q_inf = GhostWeightTable::shared().q_infinity();
    let base = ExperimentConfig {
        tensor: None,
        epsilon: CALIBRATED_NONNULL_EPSILON,
        h: 1.0 / 16.0,
        half_extent: 21.0,
        t_final: 20.0,
        sample_interval: 1.0,
        workers,
        ..ExperimentConfig::default()
    };

    let mut g = CoefficientTensor::zero();
    g.set(0, 0, 0, BigRational::from_integer(1.into()));
    let nonnull = run_with_tensor(&base, g);

    let mut fa0_cfg = base.clone();
    fa0_cfg.tensor = Some(TensorSource::Preset("FA0".into()));
    let fa0 = run_experiment(&fa0_cfg);

    let (measured, pass) = match (nonnull, fa0) {
        (Ok(nn), Ok(comp)) => {
            audit.absorb_reports(&nn.reports, q_inf);
            audit.absorb_reports(&comp.reports, q_inf);
            let nn_ratio = drift_ratios(&nn.reports).last().copied().unwrap_or(f64::NAN);
            let comp_ratios = drift_ratios(&comp.reports);
            let comp_final = comp_ratios.last().copied().unwrap_or(f64::NAN);
            let comp_ok = comp.record.completed()
                && comp_ratios.iter().all(|&r| (0.9..=1.1).contains(&r));
            let broke = !nn.record.completed();
            let contrast = broke || nn_ratio >= 5.0 * comp_final;
            let nn_desc = match &nn.record.breakdown {
                Some(b) => format!("breakdown at t={:.2} ({})", b.time, b.reason),
                None => format!("completed with drift ratio {nn_ratio:.3}"),
            };
            (
                format!(
                    "ε={CALIBRATED_NONNULL_EPSILON}: non-null {nn_desc}; FA0 ratio {comp_final:.4} {}",
                    if comp_ok { "within bounds" } else { "out of bounds" }
                ),
                contrast && comp_ok,
            )
        }
        (Err(e), _) => (format!("non-null run failed to start: {e}"), false),
        (_, Err(e)) => (format!("companion run failed to start: {e}"), false),
    };
    CriterionResult {
        index: 9,
        name: "non-null contrast",
        required: "g^{000} breaks down or drifts ≥ 5× FA0; FA0 within [0.9, 1.1]".into(),
        measured,
        pass,
    }
}

/// 10. The ghost-weight sandwich and flux monotonicity held at every
/// sample the suite produced.
fn sandwich_and_monotonicity(audit: &SampleAudit) -> CriterionResult {
    CriterionResult {
        index: 10,
        name: "sandwich and flux monotonicity",
        required: "relative excess ≤ 1e-10 at every sample".into(),
        measured: format!(
            "max sandwich excess {:.2e}, max flux decrease {:.2e} across {} samples",
            audit.max_sandwich_excess, audit.max_flux_decrease, audit.samples
        ),
        pass: audit.samples > 0
            && audit.max_sandwich_excess <= 1e-10
            && audit.max_flux_decrease <= 1e-10,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_algebra_criteria_pass() {
        for r in [
            classification_round_trip(),
            checker_equivalence(),
            strong_null_dichotomy(),
        ] {
            assert!(r.pass, "{}", r.line());
        }
    }

    #[test]
    fn hardy_criterion_passes() {
        let r = hardy_random_profiles();
        assert!(r.pass, "{}", r.line());
    }

    #[test]
    fn identity_refinement_criterion_passes() {
        let r = identity_refinement(1);
        assert!(r.pass, "{}", r.line());
    }
}

#[cfg(test)]
mod probes {
    use super::*;

    #[test]
    fn probe_linear_health() {
        let t0 = Instant::now();
        let mut audit = SampleAudit::default();
        let r = linear_health(1, &mut audit);
        println!("{}", r.line());
        println!(
            "audit: {} samples, sandwich {:.2e}, flux drop {:.2e}",
            audit.samples, audit.max_sandwich_excess, audit.max_flux_decrease
        );
        println!("elapsed {:.1} s", t0.elapsed().as_secs_f64());
    }

    #[test]
    fn probe_nonnull_lifespan_eps01() {
        for (name, nonnull) in [("nonnull", true), ("FA0", false)] {
            let mut cfg = ExperimentConfig::default();
            cfg.epsilon = 0.1;
            cfg.h = 1.0 / 16.0;
            cfg.half_extent = 52.0;
            cfg.t_final = 50.0;
            cfg.m_diag = 0;
            cfg.sample_interval = 2.0;
            cfg.workers = 1;
            let tensor = if nonnull {
                let mut g = CoefficientTensor::zero();
                g.set(0, 0, 0, BigRational::from_integer(1.into()));
                g
            } else {
                preset_tensor("FA0").unwrap()
            };
            let start = std::time::Instant::now();
            match run_with_tensor(&cfg, tensor) {
                Ok(out) => println!(
                    "{name}: breakdown {:?}, final_time {:.3}, min_den {:.4}, max_grad {:.4}, {:.1}s",
                    out.record.breakdown.as_ref().map(|b| (b.time, b.reason.clone())),
                    out.record.final_time,
                    out.record.min_denominator,
                    out.record.max_gradient,
                    start.elapsed().as_secs_f64()
                ),
                Err(e) => println!("{name}: ERR {e} after {:.1}s", start.elapsed().as_secs_f64()),
            }
        }
    }

    #[test]
    fn probe_chain_truncation_exact_input() {
        use nullwave::grid::{ActiveBox, Grid2D, GridFunction};
        use nullwave::history::{apply_gamma, MultiIndex, TimeHistory};
        let width = 0.9_f64;
        let prof = move |z: f64| {
            let s = z / width;
            if s.abs() < 1.0 { (1.0 - s * s).powi(6) } else { 0.0 }
        };
        let dprof = move |z: f64| {
            let s = z / width;
            if s.abs() < 1.0 { -12.0 * s * (1.0 - s * s).powi(5) / width } else { 0.0 }
        };
        let ddprof = move |z: f64| {
            let s = z / width;
            if s.abs() < 1.0 {
                let q = 1.0 - s * s;
                -12.0 * q.powi(4) * (1.0 - 11.0 * s * s) / (width * width)
            } else {
                0.0
            }
        };
        let workers = Workers::new(1);
        for &t in &[20.0_f64, 50.0] {
            for lvl in 0..2 {
                let h = 1.0 / 16.0 / (1 << lvl) as f64;
                let dt = h / 4.0;
                let grid = Grid2D::new(t + 2.0, h).unwrap();
                let mut hist = TimeHistory::<f64>::new(grid, dt, 9);
                for k in 0..9 {
                    let tk = t + (k as f64 - 4.0) * dt;
                    hist.push(tk, GridFunction::from_fn(grid, &workers, |x, _| prof(x - tk)));
                }
                let interior = grid.interior();
                let bx = ActiveBox {
                    i0: grid.index_below(t - width - 0.5),
                    i1: grid.index_above(t + width + 0.5),
                    j0: interior.start,
                    j1: interior.end,
                };
                let l0 = apply_gamma(&hist, MultiIndex([0, 0, 0, 0, 1]), &bx, &workers).unwrap();
                let l0l0 = apply_gamma(&hist, MultiIndex([0, 0, 0, 0, 2]), &bx, &workers).unwrap();
                let (mut e1, mut s1, mut e2, mut s2) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
                let j = grid.origin();
                for i in bx.i0 + 3..bx.i1 - 3 {
                    let z = grid.coord(i) - t;
                    let exact1 = z * dprof(z);
                    let exact2 = z * dprof(z) + z * z * ddprof(z);
                    e1 = e1.max((l0.get(i, j) - exact1).abs());
                    s1 = s1.max(exact1.abs());
                    e2 = e2.max((l0l0.get(i, j) - exact2).abs());
                    s2 = s2.max(exact2.abs());
                }
                println!(
                    "t {:>4} h 1/{:>3}: L0 rel {:.4e}, L0L0 rel {:.4e}",
                    t,
                    (1.0 / h).round() as i64,
                    e1 / s1,
                    e2 / s2
                );
            }
        }
    }

    #[test]
    fn probe_linear_e2_trajectory_h32() {
        use nullwave::history::{gamma_levels, multi_indices_up_to};
        let mut cfg = zero_tensor_config(1.0 / 32.0, 14.0, 12.0, 2);
        cfg.sample_stride = (1.0 / cfg.dt).round() as usize;
        let workers = Workers::new(1);
        let alphas = multi_indices_up_to(2);
        let mut rows: Vec<(f64, f64)> = Vec::new();
        let res = solver::run::<f64>(cfg, workers, |ctx| {
            let sum: f64 = alphas
                .iter()
                .map(|&alpha| {
                    if alpha.order() == 0 {
                        let run = ctx.hist.window(1).unwrap();
                        diag::du_l2_sq(&run, &ctx.active, ctx.workers)
                    } else {
                        let run =
                            gamma_levels(ctx.hist, alpha, 1, &ctx.active, ctx.workers).unwrap();
                        diag::du_l2_sq(&run, &ctx.active, ctx.workers)
                    }
                })
                .sum();
            rows.push((ctx.time, sum));
        });
        let base = rows[0].1;
        for (t, v) in &rows {
            println!("t {:>5.2}: E2 ratio {:.3}", t, v / base);
        }
        println!("record: {:?}", res.map(|r| r.breakdown));
    }

    #[test]
    fn probe_gamma_growth_by_alpha() {
        use nullwave::history::{gamma_levels, multi_indices_up_to};
        let cfg = zero_tensor_config(1.0 / 16.0, 21.0, 20.0, 2);
        let workers = Workers::new(1);
        let mut first: Vec<f64> = Vec::new();
        let mut last: Vec<f64> = Vec::new();
        let alphas = multi_indices_up_to(2);
        let _ = solver::run::<f64>(cfg, workers, |ctx| {
            let vals: Vec<f64> = alphas
                .iter()
                .map(|&alpha| {
                    if alpha.order() == 0 {
                        let run = ctx.hist.window(1).unwrap();
                        diag::du_l2_sq(&run, &ctx.active, ctx.workers)
                    } else {
                        let run =
                            gamma_levels(ctx.hist, alpha, 1, &ctx.active, ctx.workers).unwrap();
                        diag::du_l2_sq(&run, &ctx.active, ctx.workers)
                    }
                })
                .collect();
            if first.is_empty() {
                first = vals.clone();
            }
            last = vals;
        });
        let tot_first: f64 = first.iter().sum();
        let tot_last: f64 = last.iter().sum();
        for (k, &alpha) in alphas.iter().enumerate() {
            println!(
                "alpha {:?} order {}: first {:.3e} last {:.3e} ratio {:.3}",
                alpha.0,
                alpha.order(),
                first[k],
                last[k],
                last[k] / first[k].max(1e-300)
            );
        }
        println!("total E2: first {tot_first:.6e} last {tot_last:.6e} ratio {:.4}", tot_last / tot_first);
    }
}
