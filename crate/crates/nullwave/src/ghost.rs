//! The ghost weight e^p with p = q(r - t).
//!
//! q(s) integrates the rate ⟨τ⟩^{-1} (log(2+τ^2))^{-2} from 0 to s. It is
//! odd, strictly increasing, and bounded; the bound q(∞) is finite because
//! the rate is integrable. Values are computed once by high-order panel
//! quadrature on a fine lattice and linearly interpolated afterwards, so a
//! solver run pays table lookups only. The table can be persisted in the
//! directory named by the NULLWAVE_CACHE environment variable.

use crate::exec::Workers;
use crate::grid::{ActiveBox, Grid2D, GridFunction};
use crate::scalar::Scalar;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

/// Closed-form rate q'(s) = ⟨s⟩^{-1} (log(2+s^2))^{-2}.
#[inline]
pub fn ghost_weight_rate(s: f64) -> f64 {
    let bracket = (1.0 + s * s).sqrt();
    let l = (2.0 + s * s).ln();
    1.0 / (bracket * l * l)
}

/// Lattice step of the cached table. With max |q''| ~ 2.1 the linear
/// interpolation error stays below 1e-9 at this spacing.
const TABLE_STEP: f64 = 1.0 / 16384.0;
/// Half width of the cached lattice; |s| beyond this clamps to q(S_MAX),
/// which still sits strictly below q(∞).
const TABLE_S_MAX: f64 = 200.0;

const CACHE_MAGIC: &[u8; 4] = b"NWQT";
const CACHE_VERSION: u32 = 1;
const CACHE_FILE: &str = "ghost_q_v1.bin";

/// Gauss-Legendre nodes and weights on [-1, 1], four points: exact through
/// degree 7, far beyond what the smooth rate needs per panel.
const GAUSS_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS_W: [f64; 4] = [
    0.347_854_845_137_453_86,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_86,
];

fn gauss_panel(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for k in 0..4 {
        acc += GAUSS_W[k] * f(mid + half * GAUSS_X[k]);
    }
    acc * half
}

/// Cumulative q(s) on the nonnegative lattice plus the finite limit q(∞).
pub struct GhostWeightTable {
    step: f64,
    s_max: f64,
    values: Vec<f64>,
    q_inf: f64,
}

impl GhostWeightTable {
    /// Builds the table from scratch by panel quadrature of the rate.
    pub fn build() -> GhostWeightTable {
        let count = (TABLE_S_MAX / TABLE_STEP).round() as usize;
        let mut values = Vec::with_capacity(count + 1);
        values.push(0.0);
        // Kahan compensation keeps the cumulative sum at full precision
        // across millions of panels.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 0..count {
            let a = k as f64 * TABLE_STEP;
            let panel = gauss_panel(ghost_weight_rate, a, a + TABLE_STEP);
            let y = panel - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            values.push(sum);
        }
        let q_inf = sum + tail_beyond(TABLE_S_MAX);
        GhostWeightTable {
            step: TABLE_STEP,
            s_max: TABLE_S_MAX,
            values,
            q_inf,
        }
    }

    /// q(s): odd extension, linear interpolation on the lattice, clamped to
    /// ±q(s_max) outside (compact-support runs never reach the clamp).
    pub fn q(&self, s: f64) -> f64 {
        let mag = s.abs();
        let v = if mag >= self.s_max {
            *self.values.last().unwrap()
        } else {
            let pos = mag / self.step;
            let k = pos.floor() as usize;
            let frac = pos - k as f64;
            self.values[k] + frac * (self.values[k + 1] - self.values[k])
        };
        if s < 0.0 { -v } else { v }
    }

    /// The finite limit q(∞); e^{±q(∞)} bound the weight uniformly.
    pub fn q_infinity(&self) -> f64 {
        self.q_inf
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    /// Loads the table from `dir` when a valid cache file exists there,
    /// otherwise builds it and writes the cache (atomically, so concurrent
    /// processes never observe a partial file).
    pub fn load_or_build(dir: Option<&Path>) -> GhostWeightTable {
        let Some(dir) = dir else {
            return GhostWeightTable::build();
        };
        let path = dir.join(CACHE_FILE);
        if let Ok(table) = GhostWeightTable::read_cache(&path) {
            return table;
        }
        let table = GhostWeightTable::build();
        // Cache write failures are not errors; the table is already built.
        let _ = table.write_cache_atomic(dir, &path);
        table
    }

    /// Process-wide table, honoring NULLWAVE_CACHE on first use.
    pub fn shared() -> &'static GhostWeightTable {
        static SHARED: OnceLock<GhostWeightTable> = OnceLock::new();
        SHARED.get_or_init(|| {
            let dir = std::env::var_os("NULLWAVE_CACHE").map(PathBuf::from);
            GhostWeightTable::load_or_build(dir.as_deref())
        })
    }

    fn read_cache(path: &Path) -> io::Result<GhostWeightTable> {
        let mut f = io::BufReader::new(fs::File::open(path)?);
        let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(bad("bad magic"));
        }
        let mut b4 = [0u8; 4];
        f.read_exact(&mut b4)?;
        if u32::from_le_bytes(b4) != CACHE_VERSION {
            return Err(bad("bad version"));
        }
        let mut b8 = [0u8; 8];
        f.read_exact(&mut b8)?;
        let step = f64::from_le_bytes(b8);
        f.read_exact(&mut b8)?;
        let s_max = f64::from_le_bytes(b8);
        f.read_exact(&mut b8)?;
        let len = u64::from_le_bytes(b8) as usize;
        f.read_exact(&mut b8)?;
        let q_inf = f64::from_le_bytes(b8);
        let expected = (TABLE_S_MAX / TABLE_STEP).round() as usize + 1;
        if step != TABLE_STEP || s_max != TABLE_S_MAX || len != expected {
            return Err(bad("cache parameters do not match this build"));
        }
        let mut raw = vec![0u8; 8 * len];
        f.read_exact(&mut raw)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values[0] != 0.0 || !values.windows(2).all(|w| w[0] < w[1]) {
            return Err(bad("cache table is not strictly increasing from 0"));
        }
        if !(q_inf.is_finite() && q_inf > *values.last().unwrap()) {
            return Err(bad("cache limit is inconsistent"));
        }
        Ok(GhostWeightTable { step, s_max, values, q_inf })
    }

    fn write_cache_atomic(&self, dir: &Path, path: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!("{CACHE_FILE}.tmp.{}", std::process::id()));
        {
            let mut f = io::BufWriter::new(fs::File::create(&tmp)?);
            f.write_all(CACHE_MAGIC)?;
            f.write_all(&CACHE_VERSION.to_le_bytes())?;
            f.write_all(&self.step.to_le_bytes())?;
            f.write_all(&self.s_max.to_le_bytes())?;
            f.write_all(&(self.values.len() as u64).to_le_bytes())?;
            f.write_all(&self.q_inf.to_le_bytes())?;
            for v in &self.values {
                f.write_all(&v.to_le_bytes())?;
            }
            f.flush()?;
        }
        fs::rename(&tmp, path)
    }
}

/// Integral of the rate from `s0` to infinity. A log substitution makes the
/// integrand smooth out to 1e8; past that the rate equals 1/(4 τ log^2 τ)
/// to relative accuracy 3e-16, whose tail integrates to 1/(4 log T).
fn tail_beyond(s0: f64) -> f64 {
    let t1: f64 = 1e8;
    let in_log = |y: f64| {
        let tau = y.exp();
        ghost_weight_rate(tau) * tau
    };
    let (a, b) = (s0.ln(), t1.ln());
    let panels = 2048;
    let width = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        acc += gauss_panel(in_log, lo, lo + width);
    }
    acc + 1.0 / (4.0 * t1.ln())
}

/// The weight e^p, p = q(r - t), sampled at every interior node.
pub fn weight_field<S: Scalar>(
    grid: Grid2D,
    t: f64,
    table: &GhostWeightTable,
    workers: &Workers,
) -> GridFunction<S> {
    let mut out = GridFunction::zeros(grid);
    let bx = ActiveBox::full(&grid);
    let cols = bx.cols();
    workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
        let x1 = grid.coord(i);
        for j in cols.clone() {
            let x2 = grid.coord(j);
            let r = (x1 * x1 + x2 * x2).sqrt();
            row[j] = S::of_f64(table.q(r - t).exp());
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> &'static GhostWeightTable {
        static T: OnceLock<GhostWeightTable> = OnceLock::new();
        T.get_or_init(GhostWeightTable::build)
    }

    #[test]
    fn rate_at_zero_matches_closed_form() {
        let expected = 1.0 / (2.0f64.ln() * 2.0f64.ln());
        assert!((ghost_weight_rate(0.0) - expected).abs() < 1e-15);
        assert!((ghost_weight_rate(0.0) - 2.0814).abs() < 1e-4);
    }

    #[test]
    fn q_is_odd_and_zero_at_zero() {
        let t = table();
        assert_eq!(t.q(0.0), 0.0);
        for s in [0.3, 1.7, 25.0, 500.0] {
            assert_eq!(t.q(-s), -t.q(s));
            assert!(t.q(s) > 0.0);
        }
    }

    #[test]
    fn q_is_strictly_increasing_and_bounded_by_the_limit() {
        let t = table();
        let mut prev = t.q(-300.0);
        for k in 1..=600 {
            let s = -300.0 + k as f64;
            let cur = t.q(s);
            assert!(cur >= prev, "q must be monotone at s={s}");
            prev = cur;
        }
        assert!(t.q(199.9) < t.q_infinity());
        assert!(t.q(1e9) < t.q_infinity());
        assert!(t.q_infinity() - t.q(199.9) < 0.06);
    }

    #[test]
    fn q_matches_an_independent_simpson_integration() {
        // Composite Simpson with a step fine enough for 1e-11 accuracy.
        let quad = |s: f64| {
            let steps = 200_000usize;
            let w = s / steps as f64;
            let mut acc = ghost_weight_rate(0.0) + ghost_weight_rate(s);
            for k in 1..steps {
                let coeff = if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += coeff * ghost_weight_rate(k as f64 * w);
            }
            acc * w / 3.0
        };
        let t = table();
        for s in [0.5, 1.37, 4.0, 11.25] {
            let reference = quad(s);
            assert!(
                (t.q(s) - reference).abs() < 1e-9,
                "q({s}) = {} vs reference {reference}",
                t.q(s)
            );
        }
    }

    #[test]
    fn cache_round_trip_preserves_the_table() {
        let dir = tempfile::tempdir().unwrap();
        let first = GhostWeightTable::load_or_build(Some(dir.path()));
        assert!(dir.path().join(CACHE_FILE).exists());
        let second = GhostWeightTable::load_or_build(Some(dir.path()));
        assert_eq!(first.q_infinity(), second.q_infinity());
        for s in [0.1, 3.3, 77.7] {
            assert_eq!(first.q(s), second.q(s));
        }
    }

    #[test]
    fn corrupt_cache_is_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(CACHE_FILE), b"garbage").unwrap();
        let t = GhostWeightTable::load_or_build(Some(dir.path()));
        assert!((t.q(1.0) - table().q(1.0)).abs() < 1e-15);
    }

    #[test]
    fn weight_field_sits_inside_the_uniform_bounds() {
        let grid = Grid2D::new(3.0, 0.25).unwrap();
        let w = Workers::new(1);
        let t = table();
        let field: GridFunction<f64> = weight_field(grid, 2.0, t, &w);
        let (lo, hi) = ((-t.q_infinity()).exp(), t.q_infinity().exp());
        for i in grid.interior() {
            for j in grid.interior() {
                let v = field.get(i, j);
                assert!(v > lo && v < hi, "weight {v} escapes ({lo}, {hi})");
            }
        }
        let c = grid.origin();
        let expected = t.q(-2.0).exp();
        assert!((field.get(c, c) - expected).abs() < 1e-15);
    }
}
