//! Uniform square grids and compactly supported grid functions.
//!
//! A [`Grid2D`] covers `[-L, L]^2` with an odd number of nodes per axis so
//! the origin is a node. A [`GridFunction`] stores node values row-major
//! (`x1` selects the row, `x2` the column) and keeps the outermost two-cell
//! frame identically zero, which lets every interior node use centered
//! stencils without boundary cases. An [`ActiveBox`] tracks where a field
//! can be nonzero so sweeps skip the quiet exterior.

use crate::exec::Workers;
use crate::scalar::Scalar;
use std::io::{self, Read, Write};
use std::ops::Range;

/// Geometry of a square uniform grid centered at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2D {
    /// Nodes per axis; always odd.
    pub n: usize,
    /// Node spacing.
    pub h: f64,
    /// Half extent; nodes span `[-half_extent, half_extent]` on each axis.
    pub half_extent: f64,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("half extent {half_extent} is not an integer multiple of spacing {h}")]
    Incommensurate { half_extent: f64, h: f64 },
    #[error("grid needs at least 5 nodes per axis, got {0}")]
    TooSmall(usize),
    #[error("grid parameters must be positive and finite: L={half_extent}, h={h}")]
    BadParameters { half_extent: f64, h: f64 },
}

impl Grid2D {
    /// A grid on `[-half_extent, half_extent]^2` with spacing `h`. The half
    /// extent must be an integer multiple of `h` so that `n = 2L/h + 1` is
    /// an exact odd node count.
    pub fn new(half_extent: f64, h: f64) -> Result<Grid2D, GridError> {
        if !(half_extent.is_finite() && h.is_finite() && half_extent > 0.0 && h > 0.0) {
            return Err(GridError::BadParameters { half_extent, h });
        }
        let ratio = half_extent / h;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(GridError::Incommensurate { half_extent, h });
        }
        let n = 2 * (m as usize) + 1;
        if n < 5 {
            return Err(GridError::TooSmall(n));
        }
        Ok(Grid2D { n, h, half_extent })
    }

    /// Coordinate of node `idx` along either axis.
    #[inline]
    pub fn coord(&self, idx: usize) -> f64 {
        -self.half_extent + idx as f64 * self.h
    }

    /// Index of the origin node.
    #[inline]
    pub fn origin(&self) -> usize {
        (self.n - 1) / 2
    }

    pub fn node_count(&self) -> usize {
        self.n * self.n
    }

    /// Index range on which values may be nonzero; the two outermost cells
    /// on each side form the permanent zero frame.
    pub fn interior(&self) -> Range<usize> {
        2..self.n - 2
    }

    /// Nearest node index at or below coordinate `x`, clamped to the axis.
    pub fn index_below(&self, x: f64) -> usize {
        let raw = ((x + self.half_extent) / self.h).floor();
        raw.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Smallest node index whose coordinate is `>= x`, clamped to the axis.
    pub fn index_above(&self, x: f64) -> usize {
        let raw = ((x + self.half_extent) / self.h).ceil();
        raw.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Inclusive node-index bounds of the region where a field may be nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ActiveBox {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl ActiveBox {
    /// The whole writable interior.
    pub fn full(grid: &Grid2D) -> ActiveBox {
        let r = grid.interior();
        ActiveBox {
            i0: r.start,
            i1: r.end - 1,
            j0: r.start,
            j1: r.end - 1,
        }
    }

    /// The square of nodes with `|x1|, |x2| <= radius`, clamped to the
    /// interior.
    pub fn from_radius(grid: &Grid2D, radius: f64) -> ActiveBox {
        let lo = grid.index_below(-radius).max(grid.interior().start);
        let hi = grid.index_above(radius).min(grid.interior().end - 1);
        ActiveBox {
            i0: lo,
            i1: hi,
            j0: lo,
            j1: hi,
        }
    }

    /// Expanded by `margin` nodes on every side, clamped to the interior.
    pub fn grown(&self, grid: &Grid2D, margin: usize) -> ActiveBox {
        let lo = grid.interior().start;
        let hi = grid.interior().end - 1;
        ActiveBox {
            i0: self.i0.saturating_sub(margin).max(lo),
            i1: (self.i1 + margin).min(hi),
            j0: self.j0.saturating_sub(margin).max(lo),
            j1: (self.j1 + margin).min(hi),
        }
    }

    pub fn rows(&self) -> Range<usize> {
        self.i0..self.i1 + 1
    }

    pub fn cols(&self) -> Range<usize> {
        self.j0..self.j1 + 1
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && i <= self.i1 && j >= self.j0 && j <= self.j1
    }

    pub fn node_count(&self) -> usize {
        (self.i1 + 1 - self.i0) * (self.j1 + 1 - self.j0)
    }
}

/// Node values of a scalar field on a [`Grid2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<S> {
    grid: Grid2D,
    values: Vec<S>,
}

impl<S: Scalar> GridFunction<S> {
    pub fn zeros(grid: Grid2D) -> GridFunction<S> {
        GridFunction {
            grid,
            values: vec![S::zero(); grid.node_count()],
        }
    }

    /// Samples `f(x1, x2)` at every interior node; the zero frame is kept.
    pub fn from_fn(grid: Grid2D, workers: &Workers, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let mut out = GridFunction::zeros(grid);
        let interior = grid.interior();
        let cols = interior.clone();
        workers.write_rows(&mut out.values, grid.n, interior, |i, row| {
            let x1 = grid.coord(i);
            for j in cols.clone() {
                row[j] = S::of_f64(f(x1, grid.coord(j)));
            }
        });
        out
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.values[i * self.grid.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        debug_assert!(self.grid.interior().contains(&i) && self.grid.interior().contains(&j));
        self.values[i * self.grid.n + j] = v;
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    /// Mutable raw storage; callers must preserve the zero frame.
    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.values[i * self.grid.n..(i + 1) * self.grid.n]
    }

    pub fn fill_zero(&mut self) {
        self.values.fill(S::zero());
    }

    /// Supremum of `|f|` over `bx`, reduced in row order.
    pub fn sup_abs(&self, bx: &ActiveBox, workers: &Workers) -> S {
        let cols = bx.cols();
        let partials = workers.map_rows(bx.rows(), |i| {
            let row = self.row(i);
            let mut m = S::zero();
            for j in cols.clone() {
                m = m.max(row[j].abs());
            }
            m
        });
        partials.into_iter().fold(S::zero(), S::max)
    }

    /// Trapezoidal `L^2` norm squared, `h^2 * sum f^2`, over `bx`. Exact for
    /// compactly supported fields whose support lies inside `bx`.
    pub fn l2_sq(&self, bx: &ActiveBox, workers: &Workers) -> S {
        let cols = bx.cols();
        let partials = workers.map_rows(bx.rows(), |i| {
            let row = self.row(i);
            let mut acc = S::zero();
            for j in cols.clone() {
                acc += row[j] * row[j];
            }
            acc
        });
        let cell = S::of_f64(self.grid.h * self.grid.h);
        cell * partials.into_iter().fold(S::zero(), |a, b| a + b)
    }

    /// Smallest box containing every node with `|f| > threshold`, or `None`
    /// when the field is zero up to the threshold.
    pub fn support_box(&self, threshold: S, workers: &Workers) -> Option<ActiveBox> {
        let n = self.grid.n;
        let spans: Vec<Option<(usize, usize)>> = workers.map_rows(self.grid.interior(), |i| {
            let row = self.row(i);
            let mut lo = None;
            let mut hi = 0;
            for (j, v) in row.iter().enumerate() {
                if v.abs() > threshold {
                    if lo.is_none() {
                        lo = Some(j);
                    }
                    hi = j;
                }
            }
            lo.map(|l| (l, hi))
        });
        let start = self.grid.interior().start;
        let mut bx: Option<ActiveBox> = None;
        for (k, span) in spans.into_iter().enumerate() {
            if let Some((j0, j1)) = span {
                let i = start + k;
                bx = Some(match bx {
                    None => ActiveBox { i0: i, i1: i, j0, j1 },
                    Some(b) => ActiveBox {
                        i0: b.i0.min(i),
                        i1: b.i1.max(i),
                        j0: b.j0.min(j0),
                        j1: b.j1.max(j1),
                    },
                });
            }
        }
        let _ = n;
        bx
    }

    /// Flat binary snapshot: a 32-byte header (`n` as u64, then `h`,
    /// `half_extent`, `t` as f64, all little-endian) followed by row-major
    /// node values as f64.
    pub fn write_binary<W: Write>(&self, w: &mut W, t: f64) -> io::Result<()> {
        w.write_all(&(self.grid.n as u64).to_le_bytes())?;
        w.write_all(&self.grid.h.to_le_bytes())?;
        w.write_all(&self.grid.half_extent.to_le_bytes())?;
        w.write_all(&t.to_le_bytes())?;
        let mut buf = Vec::with_capacity(8 * self.grid.n);
        for i in 0..self.grid.n {
            buf.clear();
            for v in self.row(i) {
                buf.extend_from_slice(&v.as_f64().to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    /// Reads a snapshot written by [`write_binary`](Self::write_binary),
    /// returning the field and its time stamp.
    pub fn read_binary<R: Read>(r: &mut R) -> io::Result<(GridFunction<S>, f64)> {
        let mut u64buf = [0u8; 8];
        r.read_exact(&mut u64buf)?;
        let n = u64::from_le_bytes(u64buf) as usize;
        let mut f = [0u8; 8];
        r.read_exact(&mut f)?;
        let h = f64::from_le_bytes(f);
        r.read_exact(&mut f)?;
        let half_extent = f64::from_le_bytes(f);
        r.read_exact(&mut f)?;
        let t = f64::from_le_bytes(f);
        if n == 0 || n % 2 == 0 || n > 1 << 20 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("bad node count {n} in snapshot header"),
            ));
        }
        let grid = Grid2D { n, h, half_extent };
        let mut values = Vec::with_capacity(n * n);
        let mut rowbuf = vec![0u8; 8 * n];
        for _ in 0..n {
            r.read_exact(&mut rowbuf)?;
            for c in rowbuf.chunks_exact(8) {
                values.push(S::of_f64(f64::from_le_bytes(c.try_into().unwrap())));
            }
        }
        Ok((GridFunction { grid, values }, t))
    }

    /// CSV snapshot with header `x1,x2,value`, row-major. Meant for small
    /// grids; the binary form is the bulk format.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "x1,x2,value")?;
        for i in 0..self.grid.n {
            let x1 = self.grid.coord(i);
            for (j, v) in self.row(i).iter().enumerate() {
                writeln!(w, "{:.17e},{:.17e},{:.17e}", x1, self.grid.coord(j), v.as_f64())?;
            }
        }
        Ok(())
    }
}
