//! Ghost-weighted energies, good-derivative fluxes, decay monitors, and
//! identity/inequality residuals computed from a time history.
//!
//! Conventions: ∂ = (∂_t, ∂_1, ∂_2); the commuting family Γ is
//! (∂_t, ∂_1, ∂_2, x_1∂_2 − x_2∂_1, t∂_t + r∂_r); the good derivatives are
//! T_i = ω_i ∂_t + ∂_i with ω_i = x_i/r and T_0 = 0, ω_0 = −1; the weight is
//! e^p with p = q(r − t) for the ghost rate q′(s) = ⟨s⟩^{-1} log(2+s²)^{-2}.
//! The multiplier identity behind the flux bookkeeping is
//!
//!   ½ d/dt ∥e^{p/2} ∂v∥² + ½ ∫ e^p q′ |Tv|² dx = ∫ (□v) ∂_t v e^p dx,
//!
//! valid for any smooth compactly supported v, which makes its discrete
//! residual a solver-independent consistency check.
//!
//! All integrals are trapezoidal sums h²Σ over grid nodes (exact pairing
//! with the zero frame), sup norms are over grid nodes, and every reduction
//! folds per-row partials in a fixed order so results do not depend on the
//! worker count.

use crate::algebra::{CoefficientTensor, TrigPoly};
use crate::exec::Workers;
use crate::ghost::GhostWeightTable;
use crate::grid::{ActiveBox, Grid2D, GridFunction};
use crate::history::{
    gamma_levels, multi_indices_up_to, HistoryError, Levels, MultiIndex, TimeHistory,
};
use crate::scalar::Scalar;
use crate::stencil;
use std::io::{self, Write};

/// Radial split fractions for the region-restricted monitors.
#[derive(Clone, Copy, Debug)]
pub struct Thresholds {
    /// Interior/exterior split: interior means r < interior_fraction · t.
    pub interior_fraction: f64,
    /// Wider interior used by second-derivative decay bounds, r < 2t/3.
    pub hessian_fraction: f64,
    /// Near-cone lower edge, r > t/10.
    pub near_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Thresholds {
        Thresholds {
            interior_fraction: 0.5,
            hessian_fraction: 2.0 / 3.0,
            near_fraction: 0.1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DiagError {
    #[error("history too shallow: need {needed} levels, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("tensor is not a null form")]
    NotNull,
    #[error("profile must vanish at the support edge: |f({at})| = {value:e}")]
    SupportViolation { at: f64, value: f64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<HistoryError> for DiagError {
    fn from(e: HistoryError) -> DiagError {
        match e {
            HistoryError::InsufficientHistory { needed, available } => {
                DiagError::InsufficientHistory { needed, available }
            }
        }
    }
}

/// One sup-norm decay monitor with the slope its decay theory predicts for
/// a log-log fit (logarithmic factors ignored).
#[derive(Clone, Debug)]
pub struct DecayMonitor {
    pub name: &'static str,
    pub value: f64,
    pub slope: f64,
}

/// Localized flux of the cone symbol h(θ) = g^{1ij}ω_1ω_iω_j + g^{2ij}ω_2ω_iω_j.
#[derive(Clone, Copy, Debug)]
pub struct ConeFlux {
    /// ∫ h(θ) ∂_+u ∂_t u ∂_{tt}u e^p φ(r/t) dx with the smooth cutoff φ
    /// equal to 1 on [2/3, 3/2] and supported in [1/3, 2].
    pub integral: f64,
    /// max_θ |h(θ)| by dense sampling.
    pub h_sup: f64,
    /// max_θ of the tangency symbol; exactly 0 for strong null forms.
    pub tangency_sup: f64,
}

/// Trapezoidal time integration of the instantaneous flux density.
#[derive(Clone, Debug, Default)]
pub struct FluxAccumulator {
    last: Option<(f64, f64)>,
    cumulative: f64,
}

impl FluxAccumulator {
    pub fn new() -> FluxAccumulator {
        FluxAccumulator::default()
    }

    /// Absorbs the flux density at time `t`, returning (increment,
    /// cumulative). The integrand is a weighted sum of squares, so the
    /// cumulative value never decreases while t advances.
    pub fn absorb(&mut self, t: f64, density: f64) -> (f64, f64) {
        let increment = match self.last {
            None => 0.0,
            Some((t0, d0)) => 0.5 * (t - t0) * (density + d0),
        };
        self.cumulative += increment;
        self.last = Some((t, density));
        (increment, self.cumulative)
    }

    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }
}

/// One diagnostic sample: energies through order m, the ghost-weighted
/// energy and its flux, and the sup-norm decay monitors.
#[derive(Clone, Debug)]
pub struct EnergyReport {
    pub t: f64,
    /// energies[k] = Σ_{|α| ≤ k} ∥∂Γ^α u∥², k = 0..m.
    pub energies: Vec<f64>,
    /// ∥e^{p/2} ∂u∥².
    pub weighted_energy: f64,
    pub flux_increment: f64,
    pub flux_cumulative: f64,
    /// sup_x |∂Γ^{≤m−2} u| (pointwise square sum over the family).
    pub sup_du: f64,
    /// sup of the spatial Hessian on r < t/2 (ordered index pairs).
    pub interior_d2: f64,
    /// sup ⟨r−t⟩ |∂²u| over the grid (ordered index pairs).
    pub weighted_d2: f64,
    /// sup |T∂u| over the grid.
    pub t_du_sup: f64,
    pub cone: ConeFlux,
    /// Discrete residual of the multiplier identity at α = 0, normalized
    /// by E_0.
    pub identity_residual: f64,
    /// sup of ⟨r−t⟩(|∂_{tt}u| + |∂_t∇u| + |Δu|) over
    /// (|∂Γ^{≤1}u| + (r+t)|□_h u| + 1e−30).
    pub sideris_ratio: f64,
}

/// Everything a diagnostic sample reads.
pub struct ReportInputs<'a, S: Scalar> {
    pub hist: &'a TimeHistory<S>,
    pub active: ActiveBox,
    pub workers: &'a Workers,
    pub tensor: &'a CoefficientTensor,
    pub table: &'a GhostWeightTable,
    pub m: usize,
    pub thresholds: Thresholds,
}

#[inline]
fn bracket(s: f64) -> f64 {
    (1.0 + s * s).sqrt()
}

/// Derivative triple (∂_t v, ∂_1 v, ∂_2 v) at node `idx` of the center
/// level, time derivative centered across the outer levels.
#[inline]
fn first_derivs<S: Scalar>(
    lo: &[S],
    mid: &[S],
    hi: &[S],
    idx: usize,
    n: usize,
    inv_2dt: f64,
    inv_2h: f64,
) -> (f64, f64, f64) {
    let dt = (hi[idx] - lo[idx]).as_f64() * inv_2dt;
    let d1 = (mid[idx + n] - mid[idx - n]).as_f64() * inv_2h;
    let d2 = (mid[idx + 1] - mid[idx - 1]).as_f64() * inv_2h;
    (dt, d1, d2)
}

/// Second derivatives [tt, t1, t2, 11, 12, 22] at node `idx`.
#[inline]
#[allow(clippy::too_many_arguments)]
fn second_derivs<S: Scalar>(
    lo: &[S],
    mid: &[S],
    hi: &[S],
    idx: usize,
    n: usize,
    inv_dt2: f64,
    inv_2h_2dt: f64,
    inv_h2: f64,
    inv_4h2: f64,
) -> [f64; 6] {
    let up = idx + n;
    let dn = idx - n;
    let dtt = (hi[idx] - mid[idx] - mid[idx] + lo[idx]).as_f64() * inv_dt2;
    let dt1 = (hi[up] - hi[dn] - (lo[up] - lo[dn])).as_f64() * inv_2h_2dt;
    let dt2 = (hi[idx + 1] - hi[idx - 1] - (lo[idx + 1] - lo[idx - 1])).as_f64() * inv_2h_2dt;
    let d11 = (mid[up] + mid[dn] - mid[idx] - mid[idx]).as_f64() * inv_h2;
    let d22 = (mid[idx + 1] + mid[idx - 1] - mid[idx] - mid[idx]).as_f64() * inv_h2;
    let d12 = (mid[up + 1] - mid[up - 1] - mid[dn + 1] + mid[dn - 1]).as_f64() * inv_4h2;
    [dtt, dt1, dt2, d11, d12, d22]
}

fn center_triple<S: Scalar>(run: &(impl Levels<S> + ?Sized)) -> (usize, f64) {
    let c = (run.len() - 1) / 2;
    (c, run.time_at(c))
}

/// ∥∂v∥² = h² Σ |∂v|² at the center of a run of at least three levels.
pub fn du_l2_sq<S: Scalar>(
    run: &(impl Levels<S> + ?Sized),
    bx: &ActiveBox,
    workers: &Workers,
) -> f64 {
    let grid = run.grid();
    let n = grid.n;
    let (c, _) = center_triple(run);
    let (lo, mid, hi) = (run.level(c - 1).values(), run.level(c).values(), run.level(c + 1).values());
    let inv_2dt = 1.0 / (2.0 * run.dt());
    let inv_2h = 1.0 / (2.0 * grid.h);
    let cols = bx.cols();
    let partials = workers.map_rows(bx.rows(), |i| {
        let mut acc = 0.0;
        for j in cols.clone() {
            let (dt, d1, d2) = first_derivs(lo, mid, hi, i * n + j, n, inv_2dt, inv_2h);
            acc += dt * dt + d1 * d1 + d2 * d2;
        }
        acc
    });
    grid.h * grid.h * partials.into_iter().sum::<f64>()
}

/// Adds |∂v|² at the run center into `acc` on the box rows.
fn accumulate_du_sq<S: Scalar>(
    run: &(impl Levels<S> + ?Sized),
    bx: &ActiveBox,
    workers: &Workers,
    acc: &mut [f64],
) {
    let grid = run.grid();
    let n = grid.n;
    let (c, _) = center_triple(run);
    let (lo, mid, hi) = (run.level(c - 1).values(), run.level(c).values(), run.level(c + 1).values());
    let inv_2dt = 1.0 / (2.0 * run.dt());
    let inv_2h = 1.0 / (2.0 * grid.h);
    let cols = bx.cols();
    workers.write_rows(acc, n, bx.rows(), |i, row| {
        for j in cols.clone() {
            let (dt, d1, d2) = first_derivs(lo, mid, hi, i * n + j, n, inv_2dt, inv_2h);
            row[j] += dt * dt + d1 * d1 + d2 * d2;
        }
    });
}

/// Ghost-weighted energy h² Σ e^p |∂v|² at level `k` of the run.
fn weighted_at<S: Scalar>(
    run: &(impl Levels<S> + ?Sized),
    k: usize,
    bx: &ActiveBox,
    workers: &Workers,
    table: &GhostWeightTable,
) -> f64 {
    let grid = run.grid();
    let n = grid.n;
    let t = run.time_at(k);
    let (lo, mid, hi) = (run.level(k - 1).values(), run.level(k).values(), run.level(k + 1).values());
    let inv_2dt = 1.0 / (2.0 * run.dt());
    let inv_2h = 1.0 / (2.0 * grid.h);
    let cols = bx.cols();
    let partials = workers.map_rows(bx.rows(), |i| {
        let x1 = grid.coord(i);
        let mut acc = 0.0;
        for j in cols.clone() {
            let (dt, d1, d2) = first_derivs(lo, mid, hi, i * n + j, n, inv_2dt, inv_2h);
            let x2 = grid.coord(j);
            let r = (x1 * x1 + x2 * x2).sqrt();
            acc += table.q(r - t).exp() * (dt * dt + d1 * d1 + d2 * d2);
        }
        acc
    });
    grid.h * grid.h * partials.into_iter().sum::<f64>()
}

/// Good-derivative flux density h² Σ e^p q′(r−t)(|T_1 v|² + |T_2 v|²) at
/// level `k` of the run.
fn flux_at<S: Scalar>(
    run: &(impl Levels<S> + ?Sized),
    k: usize,
    bx: &ActiveBox,
    workers: &Workers,
    table: &GhostWeightTable,
) -> f64 {
    let grid = run.grid();
    let n = grid.n;
    let t = run.time_at(k);
    let (lo, mid, hi) = (run.level(k - 1).values(), run.level(k).values(), run.level(k + 1).values());
    let inv_2dt = 1.0 / (2.0 * run.dt());
    let inv_2h = 1.0 / (2.0 * grid.h);
    let cols = bx.cols();
    let partials = workers.map_rows(bx.rows(), |i| {
        let x1 = grid.coord(i);
        let mut acc = 0.0;
        for j in cols.clone() {
            let (dt, d1, d2) = first_derivs(lo, mid, hi, i * n + j, n, inv_2dt, inv_2h);
            let x2 = grid.coord(j);
            let r = (x1 * x1 + x2 * x2).sqrt();
            let (w1, w2) = if r == 0.0 { (0.0, 0.0) } else { (x1 / r, x2 / r) };
            let t1 = w1 * dt + d1;
            let t2 = w2 * dt + d2;
            let s = r - t;
            acc += table.q(s).exp() * crate::ghost::ghost_weight_rate(s) * (t1 * t1 + t2 * t2);
        }
        acc
    });
    grid.h * grid.h * partials.into_iter().sum::<f64>()
}

/// h² Σ e^p (□_h v) ∂_t v at level `k`, the discrete source side of the
/// multiplier identity.
fn weighted_source_at<S: Scalar>(
    run: &(impl Levels<S> + ?Sized),
    k: usize,
    bx: &ActiveBox,
    workers: &Workers,
    table: &GhostWeightTable,
) -> f64 {
    let grid = run.grid();
    let n = grid.n;
    let t = run.time_at(k);
    let (lo, mid, hi) = (run.level(k - 1).values(), run.level(k).values(), run.level(k + 1).values());
    let dt_step = run.dt();
    let inv_2dt = 1.0 / (2.0 * dt_step);
    let inv_dt2 = 1.0 / (dt_step * dt_step);
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let cols = bx.cols();
    let partials = workers.map_rows(bx.rows(), |i| {
        let x1 = grid.coord(i);
        let mut acc = 0.0;
        for j in cols.clone() {
            let idx = i * n + j;
            let dtv = (hi[idx] - lo[idx]).as_f64() * inv_2dt;
            let dtt = (hi[idx] - mid[idx] - mid[idx] + lo[idx]).as_f64() * inv_dt2;
            let lap = (mid[idx + n] + mid[idx - n] + mid[idx + 1] + mid[idx - 1]
                - S::of_f64(4.0) * mid[idx])
                .as_f64()
                * inv_h2;
            let x2 = grid.coord(j);
            let r = (x1 * x1 + x2 * x2).sqrt();
            acc += table.q(r - t).exp() * (dtt - lap) * dtv;
        }
        acc
    });
    grid.h * grid.h * partials.into_iter().sum::<f64>()
}

/// E_m = Σ_{|α| ≤ m} ∥∂Γ^α u∥² at the ring center.
pub fn energy<S: Scalar>(
    hist: &TimeHistory<S>,
    m: usize,
    bx: &ActiveBox,
    workers: &Workers,
) -> Result<f64, DiagError> {
    let mut total = 0.0;
    for alpha in multi_indices_up_to(m) {
        if alpha.order() == 0 {
            total += du_l2_sq(&hist.window(1)?, bx, workers);
        } else {
            total += du_l2_sq(&gamma_levels(hist, alpha, 1, bx, workers)?, bx, workers);
        }
    }
    Ok(total)
}

/// (∥e^{p/2} ∂v∥², ∫ e^p q′ |Tv|²) for v = Γ^α u at the ring center.
pub fn weighted_energy_and_flux<S: Scalar>(
    hist: &TimeHistory<S>,
    alpha: MultiIndex,
    bx: &ActiveBox,
    workers: &Workers,
    table: &GhostWeightTable,
) -> Result<(f64, f64), DiagError> {
    if alpha.order() == 0 {
        let run = hist.window(1)?;
        let (c, _) = center_triple(&run);
        Ok((weighted_at(&run, c, bx, workers, table), flux_at(&run, c, bx, workers, table)))
    } else {
        let run = gamma_levels(hist, alpha, 1, bx, workers)?;
        let (c, _) = center_triple(&run);
        Ok((weighted_at(&run, c, bx, workers, table), flux_at(&run, c, bx, workers, table)))
    }
}

/// Discrete residual of the multiplier identity for v = Γ^α u:
/// |½ dW/dt + ½ F − ∫ e^p (□_h v) ∂_t v| / E_{|α|}, the time derivative
/// centered over one step. Second-order small under joint (h, Δt)
/// refinement for any smooth field.
pub fn energy_identity_residual<S: Scalar>(
    hist: &TimeHistory<S>,
    alpha: MultiIndex,
    bx: &ActiveBox,
    workers: &Workers,
    table: &GhostWeightTable,
) -> Result<f64, DiagError> {
    let run;
    let window;
    let levels: &dyn Levels<S> = if alpha.order() == 0 {
        window = hist.window(2)?;
        &window
    } else {
        run = gamma_levels(hist, alpha, 2, bx, workers)?;
        &run
    };
    let (c, _) = center_triple(levels);
    let w_minus = weighted_at(levels, c - 1, bx, workers, table);
    let w_plus = weighted_at(levels, c + 1, bx, workers, table);
    let flux = flux_at(levels, c, bx, workers, table);
    let source = weighted_source_at(levels, c, bx, workers, table);
    let dw = (w_plus - w_minus) / (2.0 * levels.dt());
    let norm = energy(hist, alpha.order(), bx, workers)?;
    let residual = (0.5 * dw + 0.5 * flux - source).abs();
    Ok(if norm == 0.0 { 0.0 } else { residual / norm })
}

/// Region-resolved second-order sup monitors from one pass over the ring
/// center: the interior spatial Hessian, the ⟨r−t⟩-weighted full Hessian
/// (global and near-cone), |T∂u| (global and exterior), the pointwise
/// wave-zone bound ratio, and the localized cone-symbol flux.
struct SecondOrderMonitors {
    interior_hessian: f64,
    weighted_d2: f64,
    near_cone_weighted_d2: f64,
    t_du: f64,
    exterior_t_du: f64,
    sideris_ratio: f64,
    cone_integral: f64,
}

fn second_order_pass<S: Scalar>(
    hist: &TimeHistory<S>,
    bx: &ActiveBox,
    workers: &Workers,
    thr: &Thresholds,
    table: &GhostWeightTable,
    h_coeffs: &[f64; 7],
    acc1: Option<&[f64]>,
) -> Result<SecondOrderMonitors, DiagError> {
    let run = hist.window(1)?;
    let grid = run.grid();
    let n = grid.n;
    let (c, t) = center_triple(&run);
    let (lo, mid, hi) = (run.level(c - 1).values(), run.level(c).values(), run.level(c + 1).values());
    let dt_step = run.dt();
    let inv_2dt = 1.0 / (2.0 * dt_step);
    let inv_2h = 1.0 / (2.0 * grid.h);
    let inv_dt2 = 1.0 / (dt_step * dt_step);
    let inv_2h_2dt = 1.0 / (2.0 * grid.h * 2.0 * dt_step);
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let inv_4h2 = 1.0 / (4.0 * grid.h * grid.h);
    let cols = bx.cols();
    let rows_out = workers.map_rows(bx.rows(), |i| {
        let x1 = grid.coord(i);
        let mut m = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for j in cols.clone() {
            let idx = i * n + j;
            let x2 = grid.coord(j);
            let r = (x1 * x1 + x2 * x2).sqrt();
            let (w1, w2) = if r == 0.0 { (0.0, 0.0) } else { (x1 / r, x2 / r) };
            let (dtv, d1v, d2v) = first_derivs(lo, mid, hi, idx, n, inv_2dt, inv_2h);
            let [dtt, dt1, dt2, d11, d12, d22] =
                second_derivs(lo, mid, hi, idx, n, inv_dt2, inv_2h_2dt, inv_h2, inv_4h2);
            let hessian_sp = (d11 * d11 + 2.0 * d12 * d12 + d22 * d22).sqrt();
            let full_d2 = (dtt * dtt
                + 2.0 * (dt1 * dt1 + dt2 * dt2)
                + d11 * d11
                + 2.0 * d12 * d12
                + d22 * d22)
                .sqrt();
            let weighted = bracket(r - t) * full_d2;
            let t1 = |a: f64, b: f64| w1 * a + b;
            let t2 = |a: f64, b: f64| w2 * a + b;
            let tdu = (t1(dtt, dt1).powi(2)
                + t1(dt1, d11).powi(2)
                + t1(dt2, d12).powi(2)
                + t2(dtt, dt2).powi(2)
                + t2(dt1, d12).powi(2)
                + t2(dt2, d22).powi(2))
            .sqrt();
            if r < thr.interior_fraction * t {
                m.0 = m.0.max(hessian_sp);
            }
            m.1 = m.1.max(weighted);
            if r > thr.near_fraction * t {
                m.2 = m.2.max(weighted);
            }
            m.3 = m.3.max(tdu);
            if r > thr.interior_fraction * t {
                m.4 = m.4.max(tdu);
            }
            if let Some(acc) = acc1 {
                let lap = d11 + d22;
                let lhs = bracket(r - t) * (dtt.abs() + (dt1 * dt1 + dt2 * dt2).sqrt() + lap.abs());
                let rhs = acc[idx].max(0.0).sqrt() + (r + t) * (dtt - lap).abs();
                m.5 = m.5.max(lhs / (rhs + 1e-30));
            }
            let plus = dtv + w1 * d1v + w2 * d2v;
            let phi = crate::profiles::cone_cutoff(r / t);
            if phi > 0.0 {
                let h_theta = TrigPoly::eval_from_direction(h_coeffs, w1, w2);
                m.6 += h_theta * plus * dtv * dtt * table.q(r - t).exp() * phi;
            }
        }
        m
    });
    let mut out = SecondOrderMonitors {
        interior_hessian: 0.0,
        weighted_d2: 0.0,
        near_cone_weighted_d2: 0.0,
        t_du: 0.0,
        exterior_t_du: 0.0,
        sideris_ratio: 0.0,
        cone_integral: 0.0,
    };
    for m in rows_out {
        out.interior_hessian = out.interior_hessian.max(m.0);
        out.weighted_d2 = out.weighted_d2.max(m.1);
        out.near_cone_weighted_d2 = out.near_cone_weighted_d2.max(m.2);
        out.t_du = out.t_du.max(m.3);
        out.exterior_t_du = out.exterior_t_du.max(m.4);
        out.sideris_ratio = out.sideris_ratio.max(m.5);
        out.cone_integral += m.6;
    }
    out.cone_integral *= grid.h * grid.h;
    Ok(out)
}

/// Pointwise square sum Σ_{|α| ≤ k} |∂Γ^α u|² accumulated over the box.
fn du_sq_accumulator<S: Scalar>(
    hist: &TimeHistory<S>,
    k: usize,
    bx: &ActiveBox,
    workers: &Workers,
) -> Result<Vec<f64>, DiagError> {
    let n = hist.grid().n;
    let mut acc = vec![0.0; n * n];
    for alpha in multi_indices_up_to(k) {
        if alpha.order() == 0 {
            accumulate_du_sq(&hist.window(1)?, bx, workers, &mut acc);
        } else {
            accumulate_du_sq(&gamma_levels(hist, alpha, 1, bx, workers)?, bx, workers, &mut acc);
        }
    }
    Ok(acc)
}

/// Sup-norm decay monitors with their predicted log-log slopes.
pub fn decay_monitors<S: Scalar>(
    hist: &TimeHistory<S>,
    m: usize,
    bx: &ActiveBox,
    workers: &Workers,
    thr: &Thresholds,
    table: &GhostWeightTable,
) -> Result<Vec<DecayMonitor>, DiagError> {
    let acc = du_sq_accumulator(hist, m.saturating_sub(2), bx, workers)?;
    let sup_du = acc.iter().fold(0.0f64, |a, &v| a.max(v)).sqrt();
    let mons =
        second_order_pass(hist, bx, workers, thr, table, &[0.0; 7], None)?;
    let d3 = exterior_weighted_d3(hist, bx, workers, thr)?;
    Ok(vec![
        DecayMonitor { name: "sup_du", value: sup_du, slope: -0.5 },
        DecayMonitor { name: "weighted_d2", value: mons.weighted_d2, slope: -0.5 },
        DecayMonitor {
            name: "near_cone_weighted_d2",
            value: mons.near_cone_weighted_d2,
            slope: -0.5,
        },
        DecayMonitor { name: "interior_hessian", value: mons.interior_hessian, slope: -1.5 },
        DecayMonitor { name: "t_du_sup", value: mons.t_du, slope: -1.5 },
        DecayMonitor { name: "exterior_t_du_sup", value: mons.exterior_t_du, slope: -1.5 },
        DecayMonitor { name: "exterior_weighted_d3", value: d3, slope: -0.5 },
    ])
}

/// sup over r ≥ t/2 of ⟨r−t⟩² |∂³u| (distinct third derivatives).
fn exterior_weighted_d3<S: Scalar>(
    hist: &TimeHistory<S>,
    bx: &ActiveBox,
    workers: &Workers,
    thr: &Thresholds,
) -> Result<f64, DiagError> {
    let run = hist.window(2)?;
    let grid = run.grid();
    let n = grid.n;
    let (c, t) = center_triple(&run);
    let u: Vec<&[S]> = (0..5).map(|k| run.level(c - 2 + k).values()).collect();
    let dt_step = run.dt();
    let h = grid.h;
    let inv_2dt3 = 1.0 / (2.0 * dt_step * dt_step * dt_step);
    let inv_dt2_2h = 1.0 / (dt_step * dt_step * 2.0 * h);
    let inv_2dt_h2 = 1.0 / (2.0 * dt_step * h * h);
    let inv_2dt_4h2 = 1.0 / (2.0 * dt_step * 4.0 * h * h);
    let inv_2h3 = 1.0 / (2.0 * h * h * h);
    let inv_h2_2h = 1.0 / (h * h * 2.0 * h);
    let cols = bx.cols();
    let split = thr.interior_fraction;
    let partials = workers.map_rows(bx.rows(), |i| {
        let x1 = grid.coord(i);
        let mut best = 0.0f64;
        for j in cols.clone() {
            let x2 = grid.coord(j);
            let r = (x1 * x1 + x2 * x2).sqrt();
            if r < split * t {
                continue;
            }
            let idx = i * n + j;
            let up = idx + n;
            let dn = idx - n;
            let f = |v: &[S], k: usize| v[k].as_f64();
            let ttt = (f(u[4], idx) - 2.0 * f(u[3], idx) + 2.0 * f(u[1], idx) - f(u[0], idx))
                * inv_2dt3;
            let second_t = |a: usize, b: usize| {
                (f(u[3], a) - 2.0 * f(u[2], a) + f(u[1], a)
                    - (f(u[3], b) - 2.0 * f(u[2], b) + f(u[1], b)))
                    * inv_dt2_2h
            };
            let tt1 = second_t(up, dn);
            let tt2 = second_t(idx + 1, idx - 1);
            let lap_like = |v: &[S], a: usize, mid_i: usize, b: usize| {
                f(v, a) - 2.0 * f(v, mid_i) + f(v, b)
            };
            let t11 = (lap_like(u[3], up, idx, dn) - lap_like(u[1], up, idx, dn)) * inv_2dt_h2;
            let t22 = (lap_like(u[3], idx + 1, idx, idx - 1)
                - lap_like(u[1], idx + 1, idx, idx - 1))
                * inv_2dt_h2;
            let cross = |v: &[S]| f(v, up + 1) - f(v, up - 1) - f(v, dn + 1) + f(v, dn - 1);
            let t12 = (cross(u[3]) - cross(u[1])) * inv_2dt_4h2;
            let d111 = (f(u[2], idx + 2 * n) - 2.0 * f(u[2], up) + 2.0 * f(u[2], dn)
                - f(u[2], idx - 2 * n))
                * inv_2h3;
            let d222 = (f(u[2], idx + 2) - 2.0 * f(u[2], idx + 1) + 2.0 * f(u[2], idx - 1)
                - f(u[2], idx - 2))
                * inv_2h3;
            let d112 = (lap_like(u[2], up + 1, idx + 1, dn + 1)
                - lap_like(u[2], up - 1, idx - 1, dn - 1))
                * inv_h2_2h;
            let d122 = (lap_like(u[2], up + 1, up, up - 1)
                - lap_like(u[2], dn + 1, dn, dn - 1))
                * inv_h2_2h;
            let sum_sq = ttt * ttt
                + tt1 * tt1
                + tt2 * tt2
                + t11 * t11
                + t12 * t12
                + t22 * t22
                + d111 * d111
                + d112 * d112
                + d122 * d122
                + d222 * d222;
            let w = bracket(r - t);
            best = best.max(w * w * sum_sq.sqrt());
        }
        best
    });
    Ok(partials.into_iter().fold(0.0, f64::max))
}

/// Localized flux of the cone symbol with v = u, plus the sampled sup of
/// h(θ) and of the tangency symbol.
pub fn localized_cone_flux<S: Scalar>(
    hist: &TimeHistory<S>,
    tensor: &CoefficientTensor,
    bx: &ActiveBox,
    workers: &Workers,
    thr: &Thresholds,
    table: &GhostWeightTable,
) -> Result<ConeFlux, DiagError> {
    let coeffs = tensor.h_symbol().coeffs_f64();
    let mons = second_order_pass(hist, bx, workers, thr, table, &coeffs, None)?;
    Ok(cone_flux_from_integral(mons.cone_integral, tensor))
}

/// Package a localized cone integral with the angular sups of the symbols
/// that bound it.
fn cone_flux_from_integral(integral: f64, tensor: &CoefficientTensor) -> ConeFlux {
    const SAMPLES: usize = 4096;
    let h_poly = tensor.h_symbol();
    let mut h_sup = 0.0f64;
    for k in 0..SAMPLES {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / SAMPLES as f64;
        h_sup = h_sup.max(h_poly.eval_f64(theta).abs());
    }
    ConeFlux {
        integral,
        h_sup,
        tangency_sup: tensor.max_sampled_tangency_symbol(SAMPLES),
    }
}

/// Both sides of the refined Hardy inequality
/// ∫_0^{M+1} f(ρ)² (2+M−ρ)^{-2} ρ dρ ≤ 4 ∫ f′(ρ)² ρ dρ
/// for a profile vanishing at ρ = M+1, by trapezoidal quadrature with the
/// derivative taken by centered differences.
pub fn hardy_check(f: &dyn Fn(f64) -> f64, big_m: f64) -> Result<(f64, f64), DiagError> {
    const PANELS: usize = 65536;
    let edge = big_m + 1.0;
    let step = edge / PANELS as f64;
    let mut scale = 0.0f64;
    for k in 0..=PANELS {
        scale = scale.max(f(k as f64 * step).abs());
    }
    let edge_value = f(edge).abs();
    if edge_value > 1e-10 * scale.max(1e-300) {
        return Err(DiagError::SupportViolation { at: edge, value: edge_value });
    }
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for k in 0..=PANELS {
        let rho = k as f64 * step;
        let w = if k == 0 || k == PANELS { 0.5 } else { 1.0 };
        let v = f(rho);
        let kernel = 2.0 + big_m - rho;
        lhs += w * v * v / (kernel * kernel) * rho;
        let slope = (f(rho + step) - f(rho - step)) / (2.0 * step);
        rhs += w * slope * slope * rho;
    }
    Ok((lhs * step, rhs * step))
}

/// Max residual over nodes with r ≥ 1 of the null-form derivative identity
///
///   g^{kij} ∂_k f ∂_{ij} h = g^{kij}(T_k f ∂_{ij} h − ω_k ∂_t f T_i ∂_j h
///                                     + ω_k ω_i ∂_t f T_j ∂_t h),
///
/// with every derivative discretized by the same centered stencil wherever
/// it appears: the left side uses direct second-derivative stencils, while
/// each good derivative on the right acts as the operator ω·∂_t + ∇ on the
/// sampled first-derivative fields of h. The two sides then agree to
/// O(h² + Δt²) for smooth test functions and to rounding when both test
/// functions are polynomials of degree at most two (all stencils exact).
pub fn null_identity_residual(
    tensor: &CoefficientTensor,
    f: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
    h: &(dyn Fn(f64, f64, f64) -> f64 + Sync),
    grid: Grid2D,
    t: f64,
    workers: &Workers,
) -> Result<f64, DiagError> {
    if !tensor.check_null() {
        return Err(DiagError::NotNull);
    }
    let raw = tensor.to_f64_entries();
    // Symmetric ordered coefficients g[k][i][j].
    let mut g = [[[0.0f64; 3]; 3]; 3];
    for k in 0..3 {
        for (p, &(i, j)) in crate::algebra::PAIRS.iter().enumerate() {
            g[k][i][j] = raw[6 * k + p];
            g[k][j][i] = raw[6 * k + p];
        }
    }
    let n = grid.n;
    let dt = grid.h / 4.0;
    let sample = |func: &(dyn Fn(f64, f64, f64) -> f64 + Sync), k: i64| {
        GridFunction::<f64>::from_fn(grid, workers, move |x, y| func(t + k as f64 * dt, x, y))
    };
    let hl: Vec<GridFunction<f64>> = (-2..=2).map(|k| sample(h, k)).collect();
    let fl: Vec<GridFunction<f64>> = (-1..=1).map(|k| sample(f, k)).collect();
    let inv_2dt = 1.0 / (2.0 * dt);
    let inv_2h = 1.0 / (2.0 * grid.h);
    let inv_dt2 = 1.0 / (dt * dt);
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let inv_4h2 = 1.0 / (4.0 * grid.h * grid.h);
    // Samples exist on the interior only, so derivative fields live one
    // node further in and the final scan one node further still.
    let field_box = ActiveBox { i0: 3, i1: n - 4, j0: 3, j1: n - 4 };
    let time_diff = |a: &GridFunction<f64>, b: &GridFunction<f64>| {
        let mut out = GridFunction::<f64>::zeros(grid);
        let (av, bv) = (a.values(), b.values());
        let cols = field_box.cols();
        workers.write_rows(out.values_mut(), n, field_box.rows(), |i, row| {
            for j in cols.clone() {
                row[j] = (av[i * n + j] - bv[i * n + j]) * inv_2dt;
            }
        });
        out
    };
    // w[l][b] = sampled ∂_b h at the three middle time levels, b = t, 1, 2.
    let w: Vec<[GridFunction<f64>; 3]> = (1..=3)
        .map(|l| {
            [
                time_diff(&hl[l + 1], &hl[l - 1]),
                stencil::d1(&hl[l], stencil::Axis::X1, &field_box, workers),
                stencil::d1(&hl[l], stencil::Axis::X2, &field_box, workers),
            ]
        })
        .collect();
    let wv: Vec<[&[f64]; 3]> = w.iter().map(|lvl| [lvl[0].values(), lvl[1].values(), lvl[2].values()]).collect();
    let (fl0, fl1, fl2) = (fl[0].values(), fl[1].values(), fl[2].values());
    let hm = [hl[1].values(), hl[2].values(), hl[3].values()];
    let rows = (field_box.i0 + 1)..field_box.i1;
    let cols = rows.clone();
    let partials = workers.map_rows(rows, |i| {
        let x1 = grid.coord(i);
        let mut worst = 0.0f64;
        for j in cols.clone() {
            let x2 = grid.coord(j);
            let r = (x1 * x1 + x2 * x2).sqrt();
            if r < 1.0 {
                continue;
            }
            let idx = i * n + j;
            let om = [-1.0, x1 / r, x2 / r];
            let (ft, f1, f2) = first_derivs(fl0, fl1, fl2, idx, n, inv_2dt, inv_2h);
            let df = [ft, f1, f2];
            let tf = [0.0, om[1] * ft + f1, om[2] * ft + f2];
            let mid = hm[1];
            let dtt = (hm[2][idx] - 2.0 * mid[idx] + hm[0][idx]) * inv_dt2;
            let dt1 = (wv[2][1][idx] - wv[0][1][idx]) * inv_2dt;
            let dt2 = (wv[2][2][idx] - wv[0][2][idx]) * inv_2dt;
            let d11 = (mid[idx + n] - 2.0 * mid[idx] + mid[idx - n]) * inv_h2;
            let d22 = (mid[idx + 1] - 2.0 * mid[idx] + mid[idx - 1]) * inv_h2;
            let d12 = (mid[idx + n + 1] - mid[idx + n - 1] - mid[idx - n + 1]
                + mid[idx - n - 1])
                * inv_4h2;
            let d2h = [[dtt, dt1, dt2], [dt1, d11, d12], [dt2, d12, d22]];
            // T_a ∂_b h = ω_a ∂_t(w_b) + ∂_a(w_b) on the derivative fields;
            // the a = 0 row is zero because T_0 = 0.
            let mut td = [[0.0f64; 3]; 3];
            for b in 0..3 {
                let w_dt = (wv[2][b][idx] - wv[0][b][idx]) * inv_2dt;
                let mid_b = wv[1][b];
                td[1][b] = om[1] * w_dt + (mid_b[idx + n] - mid_b[idx - n]) * inv_2h;
                td[2][b] = om[2] * w_dt + (mid_b[idx + 1] - mid_b[idx - 1]) * inv_2h;
            }
            let mut lhs = 0.0;
            let mut rhs = 0.0;
            for k in 0..3 {
                for a in 0..3 {
                    for b in 0..3 {
                        let c = g[k][a][b];
                        if c == 0.0 {
                            continue;
                        }
                        lhs += c * df[k] * d2h[a][b];
                        rhs += c
                            * (tf[k] * d2h[a][b] - om[k] * ft * td[a][b]
                                + om[k] * om[a] * ft * td[b][0]);
                    }
                }
            }
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    });
    Ok(partials.into_iter().fold(0.0, f64::max))
}

/// sup over box nodes of ⟨r−t⟩(|∂_{tt}u| + |∂_t∇u| + |Δu|) divided by
/// |∂Γ^{≤1}u| + (r+t)|□_h u| + 1e−30. The wave-zone second-derivative
/// bound asserts this stays below a fixed constant.
pub fn sideris_bound_check<S: Scalar>(
    hist: &TimeHistory<S>,
    bx: &ActiveBox,
    workers: &Workers,
    table: &GhostWeightTable,
) -> Result<f64, DiagError> {
    let acc = du_sq_accumulator(hist, 1, bx, workers)?;
    let mons = second_order_pass(
        hist,
        bx,
        workers,
        &Thresholds::default(),
        table,
        &[0.0; 7],
        Some(&acc),
    )?;
    Ok(mons.sideris_ratio)
}

/// Least-squares slope of log(value) against log(t) over the window
/// `t_lo ≤ t ≤ t_hi`, skipping nonpositive values. None when fewer than
/// two usable points remain.
pub fn fit_loglog_slope(series: &[(f64, f64)], t_lo: f64, t_hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, v)| *t >= t_lo && *t <= t_hi && *v > 0.0 && *t > 0.0)
        .map(|&(t, v)| (t.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

/// Builds the full diagnostic sample at the ring center.
pub fn energy_report<S: Scalar>(
    inp: &ReportInputs<'_, S>,
    flux: &mut FluxAccumulator,
) -> Result<EnergyReport, DiagError> {
    let hist = inp.hist;
    let bx = &inp.active;
    let workers = inp.workers;
    let t = hist.center_time();
    let n = hist.grid().n;

    let mut buckets = vec![0.0f64; inp.m + 1];
    let sup_order = inp.m.saturating_sub(2);
    let mut acc_sup = vec![0.0f64; n * n];
    let mut acc_1 = vec![0.0f64; n * n];
    for alpha in multi_indices_up_to(inp.m) {
        let ord = alpha.order();
        let e = if ord == 0 {
            let run = hist.window(1)?;
            if ord <= sup_order {
                accumulate_du_sq(&run, bx, workers, &mut acc_sup);
            }
            accumulate_du_sq(&run, bx, workers, &mut acc_1);
            du_l2_sq(&run, bx, workers)
        } else {
            let run = gamma_levels(hist, alpha, 1, bx, workers)?;
            if ord <= sup_order {
                accumulate_du_sq(&run, bx, workers, &mut acc_sup);
            }
            if ord <= 1 {
                accumulate_du_sq(&run, bx, workers, &mut acc_1);
            }
            du_l2_sq(&run, bx, workers)
        };
        buckets[ord] += e;
    }
    let mut energies = Vec::with_capacity(inp.m + 1);
    let mut running = 0.0;
    for b in &buckets {
        running += b;
        energies.push(running);
    }
    let sup_du = acc_sup.iter().fold(0.0f64, |a, &v| a.max(v)).sqrt();

    let (weighted_energy, flux_density) =
        weighted_energy_and_flux(hist, MultiIndex::ZERO, bx, workers, inp.table)?;
    let (flux_increment, flux_cumulative) = flux.absorb(t, flux_density);
    let identity_residual =
        energy_identity_residual(hist, MultiIndex::ZERO, bx, workers, inp.table)?;

    let h_coeffs = inp.tensor.h_symbol().coeffs_f64();
    let mons = second_order_pass(
        hist,
        bx,
        workers,
        &inp.thresholds,
        inp.table,
        &h_coeffs,
        Some(&acc_1),
    )?;
    let cone = cone_flux_from_integral(mons.cone_integral, inp.tensor);

    Ok(EnergyReport {
        t,
        energies,
        weighted_energy,
        flux_increment,
        flux_cumulative,
        sup_du,
        interior_d2: mons.interior_hessian,
        weighted_d2: mons.weighted_d2,
        t_du_sup: mons.t_du,
        cone,
        identity_residual,
        sideris_ratio: mons.sideris_ratio,
    })
}

/// Fixed CSV header for reports of order `m`.
pub fn csv_header(m: usize) -> String {
    let mut s = String::from("t");
    for k in 0..=m {
        s.push_str(&format!(",E{k}"));
    }
    s.push_str(
        ",weighted_energy,flux_inc,flux_cum,sup_du,interior_d2,weighted_d2,T_du_sup,identity_residual,sideris_ratio",
    );
    s
}

/// One CSV row, floats at 17 significant digits.
pub fn write_csv_row<W: Write>(w: &mut W, report: &EnergyReport) -> io::Result<()> {
    let mut fields = vec![format!("{:.16e}", report.t)];
    for e in &report.energies {
        fields.push(format!("{e:.16e}"));
    }
    for v in [
        report.weighted_energy,
        report.flux_increment,
        report.flux_cumulative,
        report.sup_du,
        report.interior_d2,
        report.weighted_d2,
        report.t_du_sup,
        report.identity_residual,
        report.sideris_ratio,
    ] {
        fields.push(format!("{v:.16e}"));
    }
    writeln!(w, "{}", fields.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::preset_tensor;
    use crate::grid::Grid2D;
    use num::BigRational;
    use std::sync::OnceLock;

    fn table() -> &'static GhostWeightTable {
        static T: OnceLock<GhostWeightTable> = OnceLock::new();
        T.get_or_init(GhostWeightTable::build)
    }

    fn filled_history(
        grid: Grid2D,
        dt: f64,
        depth: usize,
        t_center: f64,
        f: impl Fn(f64, f64, f64) -> f64 + Sync,
        workers: &Workers,
    ) -> TimeHistory<f64> {
        let mut hist = TimeHistory::new(grid, dt, depth);
        let half = (depth - 1) as f64 / 2.0;
        for k in 0..depth {
            let t = t_center + (k as f64 - half) * dt;
            hist.push(t, GridFunction::from_fn(grid, workers, |x, y| f(t, x, y)));
        }
        hist
    }

    fn smooth_bump(t: f64, x: f64, y: f64) -> f64 {
        let z = x * x + y * y;
        if z >= 4.0 {
            0.0
        } else {
            let s = 1.0 - z / 4.0;
            s * s * s * s * (1.3 + (0.7 * t).sin())
        }
    }

    fn inputs<'a>(
        hist: &'a TimeHistory<f64>,
        tensor: &'a CoefficientTensor,
        workers: &'a Workers,
    ) -> ReportInputs<'a, f64> {
        ReportInputs {
            hist,
            active: ActiveBox::full(&hist.grid()).grown(&hist.grid(), 0),
            workers,
            tensor,
            table: table(),
            m: 2,
            thresholds: Thresholds::default(),
        }
    }

    #[test]
    fn zero_field_report_is_identically_zero() {
        let workers = Workers::new(1);
        let grid = Grid2D::new(3.0, 0.125).unwrap();
        let hist = filled_history(grid, 0.03125, 11, 6.0, |_, _, _| 0.0, &workers);
        let tensor = preset_tensor("FA0").unwrap();
        let mut flux = FluxAccumulator::new();
        let report = energy_report(&inputs(&hist, &tensor, &workers), &mut flux).unwrap();
        assert!(report.energies.iter().all(|&e| e == 0.0));
        assert_eq!(report.weighted_energy, 0.0);
        assert_eq!(report.sup_du, 0.0);
        assert_eq!(report.interior_d2, 0.0);
        assert_eq!(report.weighted_d2, 0.0);
        assert_eq!(report.t_du_sup, 0.0);
        assert_eq!(report.identity_residual, 0.0);
        assert_eq!(report.sideris_ratio, 0.0);
        assert_eq!(report.cone.integral, 0.0);
    }

    #[test]
    fn energies_are_monotone_in_the_order() {
        let workers = Workers::new(2);
        let grid = Grid2D::new(3.0, 0.125).unwrap();
        let hist = filled_history(grid, 0.03125, 11, 6.0, smooth_bump, &workers);
        let bx = ActiveBox::full(&grid);
        let e0 = energy(&hist, 0, &bx, &workers).unwrap();
        let e1 = energy(&hist, 1, &bx, &workers).unwrap();
        let e2 = energy(&hist, 2, &bx, &workers).unwrap();
        assert!(e0 > 0.0);
        assert!(e1 >= e0);
        assert!(e2 >= e1);
    }

    #[test]
    fn weighted_energy_is_sandwiched_by_the_plain_energy() {
        let workers = Workers::new(1);
        let grid = Grid2D::new(3.0, 0.125).unwrap();
        let hist = filled_history(grid, 0.03125, 11, 6.0, smooth_bump, &workers);
        let bx = ActiveBox::full(&grid);
        let plain = du_l2_sq(&hist.window(1).unwrap(), &bx, &workers);
        let (weighted, flux) =
            weighted_energy_and_flux(&hist, MultiIndex::ZERO, &bx, &workers, table()).unwrap();
        let q_inf = table().q_infinity();
        assert!(weighted >= (-q_inf).exp() * plain - 1e-12);
        assert!(weighted <= q_inf.exp() * plain + 1e-12);
        assert!(flux >= 0.0);
    }

    #[test]
    fn identity_residual_refines_at_second_order() {
        let workers = Workers::new(1);
        let wave = |t: f64, x: f64, y: f64| smooth_bump(t, x, y) * (0.9 * t).cos();
        let mut residuals = Vec::new();
        for h in [0.25, 0.125] {
            let grid = Grid2D::new(3.0, h).unwrap();
            let dt = h / 4.0;
            let hist = filled_history(grid, dt, 7, 6.0, wave, &workers);
            let bx = ActiveBox::full(&grid);
            let r = energy_identity_residual(&hist, MultiIndex::ZERO, &bx, &workers, table())
                .unwrap();
            residuals.push(r);
        }
        let ratio = residuals[0] / residuals[1];
        assert!(
            (2.5..6.0).contains(&ratio),
            "expected near-quartering, got {residuals:?} (ratio {ratio})"
        );
    }

    #[test]
    fn hardy_inequality_holds_for_a_quadratic_profile() {
        let m = 3.0;
        let f = move |rho: f64| {
            let edge = m + 1.0;
            if rho >= edge {
                0.0
            } else {
                (edge - rho) * (edge - rho)
            }
        };
        let (lhs, rhs) = hardy_check(&f, m).unwrap();
        assert!(lhs > 0.0);
        assert!(lhs <= 4.0 * rhs, "lhs {lhs} rhs {rhs}");
    }

    #[test]
    fn hardy_rejects_profiles_alive_at_the_edge() {
        let err = hardy_check(&|_| 1.0, 2.0).unwrap_err();
        assert!(matches!(err, DiagError::SupportViolation { .. }));
    }

    #[test]
    fn null_identity_vanishes_for_quadratic_polynomials() {
        let grid = Grid2D::new(3.0, 0.125).unwrap();
        let workers = Workers::new(1);
        let f = |t: f64, x: f64, y: f64| 1.0 + t + 2.0 * x - y + t * t - x * y;
        let h = |t: f64, x: f64, y: f64| 0.5 - t + x + 3.0 * y + y * y + t * x;
        let tensor = preset_tensor("FD3").unwrap();
        let r = null_identity_residual(&tensor, &f, &h, grid, 2.0, &workers).unwrap();
        assert!(r < 1e-11, "degree-two test functions should be exact, got {r}");
    }

    #[test]
    fn null_identity_refines_at_second_order_for_smooth_functions() {
        let workers = Workers::new(1);
        let f = |t: f64, x: f64, y: f64| (-(x * x + y * y)).exp() * (1.1 * t).sin();
        let h = |t: f64, x: f64, y: f64| (-(0.7 * x * x + 1.3 * y * y)).exp() * (0.8 * t).cos();
        let tensor = preset_tensor("FA0").unwrap();
        let mut residuals = Vec::new();
        for step in [0.25, 0.125] {
            let grid = Grid2D::new(3.0, step).unwrap();
            residuals.push(null_identity_residual(&tensor, &f, &h, grid, 2.0, &workers).unwrap());
        }
        let ratio = residuals[0] / residuals[1];
        assert!((2.5..6.0).contains(&ratio), "residuals {residuals:?} ratio {ratio}");
    }

    #[test]
    fn null_identity_rejects_non_null_tensors() {
        let mut t = CoefficientTensor::zero();
        t.set(0, 0, 0, BigRational::from_integer(1.into()));
        let grid = Grid2D::new(2.0, 0.25).unwrap();
        let workers = Workers::new(1);
        let err =
            null_identity_residual(&t, &|_, _, _| 0.0, &|_, _, _| 0.0, grid, 2.0, &workers)
                .unwrap_err();
        assert!(matches!(err, DiagError::NotNull));
    }

    #[test]
    fn cone_flux_vanishes_for_the_zero_tensor_and_tangency_for_strong_null() {
        let workers = Workers::new(1);
        let grid = Grid2D::new(3.0, 0.125).unwrap();
        let hist = filled_history(grid, 0.03125, 7, 3.0, smooth_bump, &workers);
        let bx = ActiveBox::full(&grid);
        let thr = Thresholds::default();
        let zero =
            localized_cone_flux(&hist, &CoefficientTensor::zero(), &bx, &workers, &thr, table())
                .unwrap();
        assert_eq!(zero.integral, 0.0);
        assert_eq!(zero.h_sup, 0.0);
        assert_eq!(zero.tangency_sup, 0.0);

        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(7);
        let strong = crate::algebra::random_strong_null_tensor(&mut rng);
        let flux =
            localized_cone_flux(&hist, &strong, &bx, &workers, &thr, table()).unwrap();
        assert!(
            flux.tangency_sup < 1e-12,
            "strong null tangency symbol should vanish, got {}",
            flux.tangency_sup
        );

        let fc1 = localized_cone_flux(
            &hist,
            &preset_tensor("FC1").unwrap(),
            &bx,
            &workers,
            &thr,
            table(),
        )
        .unwrap();
        assert!(fc1.tangency_sup >= 1.0 - 1e-9, "FC1 tangency sup {}", fc1.tangency_sup);
    }

    #[test]
    fn flux_accumulator_is_nondecreasing_and_trapezoidal() {
        let mut acc = FluxAccumulator::new();
        let (inc0, cum0) = acc.absorb(2.0, 1.0);
        assert_eq!(inc0, 0.0);
        assert_eq!(cum0, 0.0);
        let (inc1, cum1) = acc.absorb(3.0, 3.0);
        assert!((inc1 - 2.0).abs() < 1e-15);
        assert!((cum1 - 2.0).abs() < 1e-15);
        let (_, cum2) = acc.absorb(4.0, 0.0);
        assert!(cum2 >= cum1);
    }

    #[test]
    fn loglog_fit_recovers_an_exact_power_law() {
        let series: Vec<(f64, f64)> =
            (1..60).map(|k| (2.0 + k as f64, 3.7 * (2.0 + k as f64).powf(-1.5))).collect();
        let slope = fit_loglog_slope(&series, 10.0, 60.0).unwrap();
        assert!((slope + 1.5).abs() < 1e-9, "slope {slope}");
    }

    #[test]
    fn csv_header_and_rows_have_matching_shape() {
        let header = csv_header(2);
        assert_eq!(
            header,
            "t,E0,E1,E2,weighted_energy,flux_inc,flux_cum,sup_du,interior_d2,weighted_d2,T_du_sup,identity_residual,sideris_ratio"
        );
        let report = EnergyReport {
            t: 2.0,
            energies: vec![0.1, 0.2, 0.3],
            weighted_energy: 0.15,
            flux_increment: 0.0,
            flux_cumulative: 0.0,
            sup_du: 0.01,
            interior_d2: 0.0,
            weighted_d2: 0.02,
            t_du_sup: 0.005,
            cone: ConeFlux { integral: 0.0, h_sup: 2.0, tangency_sup: 0.0 },
            identity_residual: 1e-5,
            sideris_ratio: 3.0,
        };
        let mut out = Vec::new();
        write_csv_row(&mut out, &report).unwrap();
        let row = String::from_utf8(out).unwrap();
        assert_eq!(row.trim_end().split(',').count(), header.split(',').count());
        assert!(row.contains("e0") || row.contains("e-"));
    }

    #[test]
    fn sup_du_matches_an_independent_gradient_bound() {
        let workers = Workers::new(1);
        let grid = Grid2D::new(3.0, 1.0 / 64.0).unwrap();
        let hist = filled_history(grid, 1.0 / 256.0, 11, 6.0, smooth_bump, &workers);
        let tensor = preset_tensor("FA0").unwrap();
        let mut flux = FluxAccumulator::new();
        let report = energy_report(&inputs(&hist, &tensor, &workers), &mut flux).unwrap();
        // At the ring center smooth_bump = s(z)^4 (1.3 + sin(0.7 t)); its
        // time derivative at a node is bounded by 0.7 s^4 and the spatial
        // gradient by 2|x| s^3 / 1 · amplitude; compare against a graded
        // numerical sweep of the analytic derivatives.
        let mut expected = 0.0f64;
        let tc = hist.center_time();
        for i in 0..grid.n {
            for j in 0..grid.n {
                let (x, y) = (grid.coord(i), grid.coord(j));
                let z = x * x + y * y;
                if z >= 4.0 {
                    continue;
                }
                let s = 1.0 - z / 4.0;
                let amp = 1.3 + (0.7 * tc).sin();
                let dt = s.powi(4) * 0.7 * (0.7 * tc).cos();
                let dx = -2.0 * x * s.powi(3) * amp;
                let dy = -2.0 * y * s.powi(3) * amp;
                expected = expected.max((dt * dt + dx * dx + dy * dy).sqrt());
            }
        }
        assert!(
            (report.sup_du - expected).abs() < 0.02 * expected,
            "sup_du {} vs analytic {}",
            report.sup_du,
            expected
        );
    }

    #[test]
    fn sideris_ratio_is_finite_and_modest_for_smooth_fields() {
        let workers = Workers::new(1);
        let grid = Grid2D::new(3.0, 0.125).unwrap();
        let wave = |t: f64, x: f64, y: f64| smooth_bump(t, x, y) * (0.5 * t).cos();
        let hist = filled_history(grid, 0.03125, 7, 6.0, wave, &workers);
        let bx = ActiveBox::full(&grid);
        let ratio = sideris_bound_check(&hist, &bx, &workers, table()).unwrap();
        assert!(ratio.is_finite());
        assert!(ratio > 0.0);
    }

    #[test]
    fn decay_monitor_set_has_fixed_names_and_slopes() {
        let workers = Workers::new(1);
        let grid = Grid2D::new(3.0, 0.125).unwrap();
        let hist = filled_history(grid, 0.03125, 7, 6.0, smooth_bump, &workers);
        let bx = ActiveBox::full(&grid);
        let mons =
            decay_monitors(&hist, 2, &bx, &workers, &Thresholds::default(), table()).unwrap();
        let names: Vec<&str> = mons.iter().map(|m| m.name).collect();
        assert_eq!(
            names,
            [
                "sup_du",
                "weighted_d2",
                "near_cone_weighted_d2",
                "interior_hessian",
                "t_du_sup",
                "exterior_t_du_sup",
                "exterior_weighted_d3"
            ]
        );
        assert!(mons.iter().all(|m| m.value.is_finite() && m.value >= 0.0));
        assert!(mons.iter().all(|m| m.slope < 0.0));
    }
}
