//! Ring of time levels and the commuting vector fields built on it.
//!
//! The solver pushes one snapshot per step into a [`TimeHistory`];
//! diagnostics read a centered window of levels and apply products of the
//! five generators ∂_t, ∂_1, ∂_2, ∂_θ = x1 ∂_2 − x2 ∂_1, and
//! L0 = t ∂_t + r ∂_r. The chain stencils are fourth-order centered
//! differences, so each temporal factor consumes two levels per side of
//! the window and a ring of depth 4 m + 3 supports every product of
//! order m with one spare level for the outer derivative.

use crate::exec::Workers;
use crate::grid::{ActiveBox, Grid2D, GridFunction};
use crate::scalar::Scalar;
use crate::stencil;
use std::collections::VecDeque;
use std::fmt;

/// Exponents (a1..a5) of the generator product
/// ∂_t^{a1} ∂_1^{a2} ∂_2^{a3} ∂_θ^{a4} L0^{a5}, applied right to left.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiIndex(pub [u8; 5]);

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex([0; 5]);

    pub fn order(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    /// Temporal factors (∂_t or L0) in the product; each consumes
    /// [`TEMPORAL_STRIDE`] levels per side of the window.
    pub fn temporal_weight(&self) -> usize {
        (self.0[0] + self.0[4]) as usize
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a1, a2, a3, a4, a5] = self.0;
        write!(f, "({a1},{a2},{a3},{a4},{a5})")
    }
}

/// Every multiindex of order at most `m`, in lexicographic order.
pub fn multi_indices_up_to(m: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let m = m as u8;
    for a1 in 0..=m {
        for a2 in 0..=m - a1 {
            for a3 in 0..=m - a1 - a2 {
                for a4 in 0..=m - a1 - a2 - a3 {
                    for a5 in 0..=m - a1 - a2 - a3 - a4 {
                        out.push(MultiIndex([a1, a2, a3, a4, a5]));
                    }
                }
            }
        }
    }
    out
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum HistoryError {
    #[error("operator chain needs {needed} time levels but the history holds {available}")]
    InsufficientHistory { needed: usize, available: usize },
}

/// Ring of uniformly spaced snapshots; the oldest level is evicted when a
/// push exceeds the capacity.
pub struct TimeHistory<S> {
    grid: Grid2D,
    dt: f64,
    capacity: usize,
    levels: VecDeque<GridFunction<S>>,
    newest_time: f64,
}

impl<S: Scalar> TimeHistory<S> {
    pub fn new(grid: Grid2D, dt: f64, capacity: usize) -> TimeHistory<S> {
        assert!(capacity >= 3, "a useful history holds at least 3 levels");
        assert!(dt > 0.0);
        TimeHistory {
            grid,
            dt,
            capacity,
            levels: VecDeque::with_capacity(capacity),
            newest_time: f64::NAN,
        }
    }

    /// Appends a snapshot at time `t`; spacing must match `dt`. Returns the
    /// evicted oldest level, handy as a reusable buffer.
    pub fn push(&mut self, t: f64, level: GridFunction<S>) -> Option<GridFunction<S>> {
        if !self.levels.is_empty() {
            let expected = self.newest_time + self.dt;
            assert!(
                (t - expected).abs() <= 1e-9 * self.dt.max(1.0),
                "history pushed at t={t}, expected {expected}"
            );
        }
        self.newest_time = t;
        let evicted = if self.levels.len() == self.capacity {
            self.levels.pop_front()
        } else {
            None
        };
        self.levels.push_back(level);
        evicted
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.levels.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn newest_time(&self) -> f64 {
        self.newest_time
    }

    /// Level `k` counted from the oldest.
    pub fn level(&self, k: usize) -> &GridFunction<S> {
        &self.levels[k]
    }

    pub fn time_of(&self, k: usize) -> f64 {
        self.newest_time - self.dt * (self.levels.len() - 1 - k) as f64
    }

    /// Index of the centered level that diagnostics evaluate at; defined
    /// once the ring is full with odd capacity.
    pub fn center_index(&self) -> usize {
        (self.levels.len() - 1) / 2
    }

    pub fn center_time(&self) -> f64 {
        self.time_of(self.center_index())
    }

    /// A borrowed window of `2 half + 1` levels centered on the ring
    /// center.
    pub fn window(&self, half: usize) -> Result<LevelSlice<'_, S>, HistoryError> {
        let needed = 2 * half + 1;
        let center = self.center_index();
        if self.levels.len() < needed
            || center < half
            || center + half >= self.levels.len()
        {
            return Err(HistoryError::InsufficientHistory {
                needed,
                available: self.levels.len(),
            });
        }
        let levels: Vec<&GridFunction<S>> =
            (center - half..=center + half).map(|k| &self.levels[k]).collect();
        Ok(LevelSlice {
            grid: self.grid,
            dt: self.dt,
            t0: self.time_of(center - half),
            levels,
        })
    }
}

/// Read access to a run of uniformly spaced levels.
pub trait Levels<S: Scalar>: Sync {
    fn grid(&self) -> Grid2D;
    fn dt(&self) -> f64;
    fn len(&self) -> usize;
    fn time_at(&self, k: usize) -> f64;
    fn level(&self, k: usize) -> &GridFunction<S>;

    fn center(&self) -> &GridFunction<S> {
        self.level((self.len() - 1) / 2)
    }

    fn center_time(&self) -> f64 {
        self.time_at((self.len() - 1) / 2)
    }
}

/// Borrowed window into a [`TimeHistory`].
pub struct LevelSlice<'a, S> {
    grid: Grid2D,
    dt: f64,
    t0: f64,
    levels: Vec<&'a GridFunction<S>>,
}

impl<S: Scalar> Levels<S> for LevelSlice<'_, S> {
    fn grid(&self) -> Grid2D {
        self.grid
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn len(&self) -> usize {
        self.levels.len()
    }
    fn time_at(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }
    fn level(&self, k: usize) -> &GridFunction<S> {
        self.levels[k]
    }
}

/// Owned run of levels produced by applying operators.
pub struct LevelField<S> {
    grid: Grid2D,
    dt: f64,
    t0: f64,
    levels: Vec<GridFunction<S>>,
}

impl<S: Scalar> Levels<S> for LevelField<S> {
    fn grid(&self) -> Grid2D {
        self.grid
    }
    fn dt(&self) -> f64 {
        self.dt
    }
    fn len(&self) -> usize {
        self.levels.len()
    }
    fn time_at(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }
    fn level(&self, k: usize) -> &GridFunction<S> {
        &self.levels[k]
    }
}

impl<S: Scalar> LevelField<S> {
    pub fn into_center(mut self) -> GridFunction<S> {
        let mid = (self.levels.len() - 1) / 2;
        self.levels.swap_remove(mid)
    }
}

/// One factor of the commuting family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Dt,
    D1,
    D2,
    Rotation,
    Scaling,
}

impl Generator {
    /// Multiindex slots in application order: the scaling factor acts
    /// first, ∂_t last.
    pub fn from_slot(slot: usize) -> Generator {
        match slot {
            0 => Generator::Dt,
            1 => Generator::D1,
            2 => Generator::D2,
            3 => Generator::Rotation,
            4 => Generator::Scaling,
            _ => panic!("generator slot {slot} out of range"),
        }
    }

    fn temporal(&self) -> bool {
        matches!(self, Generator::Dt | Generator::Scaling)
    }
}

/// Levels consumed per side of the window by one temporal factor: the
/// chain stencils are fourth-order centered differences, so ∂_t and L0
/// each read two levels on either side. Second-order chains are too
/// coarse here: the scaling coefficients t and r grow without bound, so
/// an O(h²) truncation swamps the conserved energies of Γ^α u by mid
/// run, while the fourth-order error stays negligible at working
/// resolutions.
pub const TEMPORAL_STRIDE: usize = 2;

/// Applies one generator to a run of levels. Temporal factors narrow the
/// run by [`TEMPORAL_STRIDE`] levels per side; spatial factors preserve
/// its length. Cells within two nodes of the frame stay zero, which is
/// exact for the compactly supported fields the solver produces.
pub fn apply_generator<S: Scalar>(
    src: &impl Levels<S>,
    g: Generator,
    bx: &ActiveBox,
    workers: &Workers,
) -> Result<LevelField<S>, HistoryError> {
    let grid = src.grid();
    let dt = src.dt();
    let depth = 2 * TEMPORAL_STRIDE + 1;
    if g.temporal() && src.len() < depth {
        return Err(HistoryError::InsufficientHistory { needed: depth, available: src.len() });
    }
    let n = grid.n;
    let safe = ActiveBox {
        i0: bx.i0.max(2),
        i1: bx.i1.min(n - 3),
        j0: bx.j0.max(2),
        j1: bx.j1.min(n - 3),
    };
    let eight = S::of_f64(8.0);
    let inv12h = S::of_f64(1.0 / (12.0 * grid.h));
    let inv12dt = S::of_f64(1.0 / (12.0 * dt));
    let d4 = move |pp: S, p: S, m: S, mm: S| (eight * (p - m) - (pp - mm)) * inv12h;
    let levels = match g {
        Generator::D1 => (0..src.len())
            .map(|l| {
                let f = src.level(l);
                combine_rows(grid, &safe, workers, |i, row| {
                    let up2 = f.row(i + 2);
                    let up1 = f.row(i + 1);
                    let dn1 = f.row(i - 1);
                    let dn2 = f.row(i - 2);
                    for j in safe.cols() {
                        row[j] = d4(up2[j], up1[j], dn1[j], dn2[j]);
                    }
                })
            })
            .collect(),
        Generator::D2 => (0..src.len())
            .map(|l| {
                let f = src.level(l);
                combine_rows(grid, &safe, workers, |i, row| {
                    let mid = f.row(i);
                    for j in safe.cols() {
                        row[j] = d4(mid[j + 2], mid[j + 1], mid[j - 1], mid[j - 2]);
                    }
                })
            })
            .collect(),
        Generator::Rotation => (0..src.len())
            .map(|l| {
                let f = src.level(l);
                combine_rows(grid, &safe, workers, |i, row| {
                    let up2 = f.row(i + 2);
                    let up1 = f.row(i + 1);
                    let mid = f.row(i);
                    let dn1 = f.row(i - 1);
                    let dn2 = f.row(i - 2);
                    let x1 = S::of_f64(grid.coord(i));
                    for j in safe.cols() {
                        let x2 = S::of_f64(grid.coord(j));
                        let df1 = d4(up2[j], up1[j], dn1[j], dn2[j]);
                        let df2 = d4(mid[j + 2], mid[j + 1], mid[j - 1], mid[j - 2]);
                        row[j] = x1 * df2 - x2 * df1;
                    }
                })
            })
            .collect(),
        Generator::Dt => (0..src.len() - 2 * TEMPORAL_STRIDE)
            .map(|l| {
                combine_rows(grid, &safe, workers, |i, row| {
                    let hi2 = src.level(l + 4).row(i);
                    let hi1 = src.level(l + 3).row(i);
                    let lo1 = src.level(l + 1).row(i);
                    let lo2 = src.level(l).row(i);
                    for j in safe.cols() {
                        row[j] = (eight * (hi1[j] - lo1[j]) - (hi2[j] - lo2[j])) * inv12dt;
                    }
                })
            })
            .collect(),
        Generator::Scaling => (0..src.len() - 2 * TEMPORAL_STRIDE)
            .map(|l| {
                let t = S::of_f64(src.time_at(l + TEMPORAL_STRIDE));
                combine_rows(grid, &safe, workers, |i, row| {
                    let hi2 = src.level(l + 4).row(i);
                    let hi1 = src.level(l + 3).row(i);
                    let lo1 = src.level(l + 1).row(i);
                    let lo2 = src.level(l).row(i);
                    let center = src.level(l + TEMPORAL_STRIDE);
                    let up2 = center.row(i + 2);
                    let up1 = center.row(i + 1);
                    let mid = center.row(i);
                    let dn1 = center.row(i - 1);
                    let dn2 = center.row(i - 2);
                    let x1 = S::of_f64(grid.coord(i));
                    for j in safe.cols() {
                        let x2 = S::of_f64(grid.coord(j));
                        let time_part =
                            t * (eight * (hi1[j] - lo1[j]) - (hi2[j] - lo2[j])) * inv12dt;
                        let radial = x1 * d4(up2[j], up1[j], dn1[j], dn2[j])
                            + x2 * d4(mid[j + 2], mid[j + 1], mid[j - 1], mid[j - 2]);
                        row[j] = time_part + radial;
                    }
                })
            })
            .collect(),
    };
    let t0 = if g.temporal() { src.time_at(TEMPORAL_STRIDE) } else { src.time_at(0) };
    Ok(LevelField { grid, dt, t0, levels })
}

fn combine_rows<S: Scalar>(
    grid: Grid2D,
    bx: &ActiveBox,
    workers: &Workers,
    f: impl Fn(usize, &mut [S]) + Sync,
) -> GridFunction<S> {
    let mut out = GridFunction::zeros(grid);
    workers.write_rows(out.values_mut(), grid.n, bx.rows(), f);
    out
}

/// Γ^α u on a centered run of `2 extra + 1` levels, factors applied right
/// to left (scaling first, ∂_t last).
pub fn gamma_levels<S: Scalar>(
    hist: &TimeHistory<S>,
    alpha: MultiIndex,
    extra: usize,
    bx: &ActiveBox,
    workers: &Workers,
) -> Result<LevelField<S>, HistoryError> {
    let half = TEMPORAL_STRIDE * alpha.temporal_weight() + extra;
    let window = hist.window(half)?;
    let mut ops = Vec::with_capacity(alpha.order());
    for slot in (0..5).rev() {
        for _ in 0..alpha.0[slot] {
            ops.push(Generator::from_slot(slot));
        }
    }
    let mut iter = ops.into_iter();
    let mut cur = match iter.next() {
        None => LevelField {
            grid: window.grid(),
            dt: window.dt(),
            t0: window.time_at(0),
            levels: window.levels.iter().map(|f| (*f).clone()).collect(),
        },
        Some(first) => apply_generator(&window, first, bx, workers)?,
    };
    for g in iter {
        cur = apply_generator(&cur, g, bx, workers)?;
    }
    Ok(cur)
}

/// Γ^α u at the ring center.
pub fn apply_gamma<S: Scalar>(
    hist: &TimeHistory<S>,
    alpha: MultiIndex,
    bx: &ActiveBox,
    workers: &Workers,
) -> Result<GridFunction<S>, HistoryError> {
    Ok(gamma_levels(hist, alpha, 0, bx, workers)?.into_center())
}

/// Good derivative T_i = ω_i ∂_t + ∂_i at the ring center; ω vanishes at
/// the origin node.
pub fn good_derivative<S: Scalar>(
    hist: &TimeHistory<S>,
    i: usize,
    bx: &ActiveBox,
    workers: &Workers,
) -> Result<GridFunction<S>, HistoryError> {
    assert!(i == 1 || i == 2, "good derivatives are indexed 1 and 2");
    let window = hist.window(1)?;
    let grid = window.grid();
    let inv2dt = S::of_f64(1.0 / (2.0 * window.dt()));
    let inv2h = S::of_f64(1.0 / (2.0 * grid.h));
    Ok(LevelField {
        grid,
        dt: window.dt(),
        t0: window.time_at(1),
        levels: vec![combine_rows(grid, bx, workers, |r, row| {
            let hi = window.level(2).row(r);
            let lo = window.level(0).row(r);
            let up = window.level(1).row(r + 1);
            let mid = window.level(1).row(r);
            let dn = window.level(1).row(r - 1);
            for j in bx.cols() {
                let (w1, w2) = stencil::omega(&grid, r, j);
                let w = S::of_f64(if i == 1 { w1 } else { w2 });
                let dt_part = (hi[j] - lo[j]) * inv2dt;
                let sp_part = if i == 1 {
                    (up[j] - dn[j]) * inv2h
                } else {
                    (mid[j + 1] - mid[j - 1]) * inv2h
                };
                row[j] = w * dt_part + sp_part;
            }
        })],
    }
    .into_center())
}
