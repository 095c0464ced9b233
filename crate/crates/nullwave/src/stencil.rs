//! Centered second-order difference stencils on grid functions.
//!
//! Every operator here is exact on polynomials of degree <= 2 in the
//! differenced variables. Outputs are written only inside the requested
//! active box; the zero frame is never touched. Callers are responsible
//! for passing a box large enough to contain the support of the result
//! (one node wider than the input support per derivative).

use crate::exec::Workers;
use crate::grid::{ActiveBox, Grid2D, GridFunction};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Centered first difference along `axis`.
pub fn d1<S: Scalar>(
    f: &GridFunction<S>,
    axis: Axis,
    bx: &ActiveBox,
    workers: &Workers,
) -> GridFunction<S> {
    let grid = *f.grid();
    let inv2h = S::of_f64(1.0 / (2.0 * grid.h));
    let mut out = GridFunction::zeros(grid);
    let cols = bx.cols();
    match axis {
        Axis::X1 => workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
            let up = f.row(i + 1);
            let dn = f.row(i - 1);
            for j in cols.clone() {
                row[j] = (up[j] - dn[j]) * inv2h;
            }
        }),
        Axis::X2 => workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
            let mid = f.row(i);
            for j in cols.clone() {
                row[j] = (mid[j + 1] - mid[j - 1]) * inv2h;
            }
        }),
    }
    out
}

/// Compact three-point second difference along `axis`.
pub fn d2<S: Scalar>(
    f: &GridFunction<S>,
    axis: Axis,
    bx: &ActiveBox,
    workers: &Workers,
) -> GridFunction<S> {
    let grid = *f.grid();
    let invh2 = S::of_f64(1.0 / (grid.h * grid.h));
    let two = S::of_f64(2.0);
    let mut out = GridFunction::zeros(grid);
    let cols = bx.cols();
    match axis {
        Axis::X1 => workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
            let up = f.row(i + 1);
            let mid = f.row(i);
            let dn = f.row(i - 1);
            for j in cols.clone() {
                row[j] = (up[j] - two * mid[j] + dn[j]) * invh2;
            }
        }),
        Axis::X2 => workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
            let mid = f.row(i);
            for j in cols.clone() {
                row[j] = (mid[j + 1] - two * mid[j] + mid[j - 1]) * invh2;
            }
        }),
    }
    out
}

/// Mixed second difference, the composition of the two centered first
/// differences.
pub fn d_cross<S: Scalar>(
    f: &GridFunction<S>,
    bx: &ActiveBox,
    workers: &Workers,
) -> GridFunction<S> {
    let grid = *f.grid();
    let inv4h2 = S::of_f64(1.0 / (4.0 * grid.h * grid.h));
    let mut out = GridFunction::zeros(grid);
    let cols = bx.cols();
    workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
        let up = f.row(i + 1);
        let dn = f.row(i - 1);
        for j in cols.clone() {
            row[j] = (up[j + 1] - up[j - 1] - dn[j + 1] + dn[j - 1]) * inv4h2;
        }
    });
    out
}

/// Unified entry point: first or second derivative along `axis`, or the
/// mixed second derivative when `mixed` names the other axis.
pub fn spatial_derivative<S: Scalar>(
    f: &GridFunction<S>,
    axis: Axis,
    order: u32,
    mixed: Option<Axis>,
    bx: &ActiveBox,
    workers: &Workers,
) -> GridFunction<S> {
    match (order, mixed) {
        (1, None) => d1(f, axis, bx, workers),
        (2, None) => d2(f, axis, bx, workers),
        (2, Some(other)) if other != axis => d_cross(f, bx, workers),
        (2, Some(_)) => d2(f, axis, bx, workers),
        _ => panic!("unsupported derivative order {order}"),
    }
}

/// Five-point discrete Laplacian.
pub fn laplacian<S: Scalar>(
    f: &GridFunction<S>,
    bx: &ActiveBox,
    workers: &Workers,
) -> GridFunction<S> {
    let grid = *f.grid();
    let invh2 = S::of_f64(1.0 / (grid.h * grid.h));
    let four = S::of_f64(4.0);
    let mut out = GridFunction::zeros(grid);
    let cols = bx.cols();
    workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
        let up = f.row(i + 1);
        let mid = f.row(i);
        let dn = f.row(i - 1);
        for j in cols.clone() {
            row[j] = (up[j] + dn[j] + mid[j + 1] + mid[j - 1] - four * mid[j]) * invh2;
        }
    });
    out
}

/// Rotation operator `x1 d2 - x2 d1`, the angular derivative in Cartesian
/// form.
pub fn rotation<S: Scalar>(
    f: &GridFunction<S>,
    bx: &ActiveBox,
    workers: &Workers,
) -> GridFunction<S> {
    let grid = *f.grid();
    let inv2h = S::of_f64(1.0 / (2.0 * grid.h));
    let mut out = GridFunction::zeros(grid);
    let cols = bx.cols();
    workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
        let x1 = S::of_f64(grid.coord(i));
        let up = f.row(i + 1);
        let mid = f.row(i);
        let dn = f.row(i - 1);
        for j in cols.clone() {
            let x2 = S::of_f64(grid.coord(j));
            row[j] = (x1 * (mid[j + 1] - mid[j - 1]) - x2 * (up[j] - dn[j])) * inv2h;
        }
    });
    out
}

/// Radial scaling operator `r d_r = x1 d1 + x2 d2`.
pub fn radial_scaling<S: Scalar>(
    f: &GridFunction<S>,
    bx: &ActiveBox,
    workers: &Workers,
) -> GridFunction<S> {
    let grid = *f.grid();
    let inv2h = S::of_f64(1.0 / (2.0 * grid.h));
    let mut out = GridFunction::zeros(grid);
    let cols = bx.cols();
    workers.write_rows(out.values_mut(), grid.n, bx.rows(), |i, row| {
        let x1 = S::of_f64(grid.coord(i));
        let up = f.row(i + 1);
        let mid = f.row(i);
        let dn = f.row(i - 1);
        for j in cols.clone() {
            let x2 = S::of_f64(grid.coord(j));
            row[j] = (x1 * (up[j] - dn[j]) + x2 * (mid[j + 1] - mid[j - 1])) * inv2h;
        }
    });
    out
}

/// Outward unit direction at a node: `x/r` away from the origin, zero at
/// the origin node (the only node with `r < h/2`).
#[inline]
pub fn omega(grid: &Grid2D, i: usize, j: usize) -> (f64, f64) {
    let x1 = grid.coord(i);
    let x2 = grid.coord(j);
    let r = (x1 * x1 + x2 * x2).sqrt();
    if r < 0.5 * grid.h {
        (0.0, 0.0)
    } else {
        (x1 / r, x2 / r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(h: f64) -> (Grid2D, ActiveBox, Workers) {
        let grid = Grid2D::new(2.0, h).unwrap();
        (grid, ActiveBox::full(&grid), Workers::new(1))
    }

    fn sup_err<S: Scalar>(
        got: &GridFunction<S>,
        want: impl Fn(f64, f64) -> f64,
        bx: &ActiveBox,
    ) -> f64 {
        let grid = got.grid();
        let mut m = 0.0f64;
        for i in bx.rows() {
            for j in bx.cols() {
                let e = (got.get(i, j).as_f64() - want(grid.coord(i), grid.coord(j))).abs();
                m = m.max(e);
            }
        }
        m
    }

    #[test]
    fn stencils_are_exact_on_quadratics() {
        let (grid, bx, w) = setup(0.25);
        // Quadratic masked to the interior; only check nodes whose stencil
        // never reads the masked frame.
        let f: GridFunction<f64> =
            GridFunction::from_fn(grid, &w, |x, y| 1.0 + 2.0 * x - y + 0.5 * x * x + x * y);
        let inner = ActiveBox::full(&grid).grown(&grid, 0);
        let inner = ActiveBox {
            i0: inner.i0 + 1,
            i1: inner.i1 - 1,
            j0: inner.j0 + 1,
            j1: inner.j1 - 1,
        };
        assert!(sup_err(&d1(&f, Axis::X1, &bx, &w), |x, y| 2.0 + x + y, &inner) < 1e-12);
        assert!(sup_err(&d1(&f, Axis::X2, &bx, &w), |x, _| -1.0 + x, &inner) < 1e-12);
        assert!(sup_err(&d2(&f, Axis::X1, &bx, &w), |_, _| 1.0, &inner) < 1e-12);
        assert!(sup_err(&d2(&f, Axis::X2, &bx, &w), |_, _| 0.0, &inner) < 1e-12);
        assert!(sup_err(&d_cross(&f, &bx, &w), |_, _| 1.0, &inner) < 1e-12);
        assert!(sup_err(&laplacian(&f, &bx, &w), |_, _| 1.0, &inner) < 1e-12);
    }

    #[test]
    fn first_derivative_of_sine_converges_at_second_order() {
        // Support strictly inside the box so the mask plays no role.
        let field = |x: f64, y: f64| {
            let r2 = x * x + y * y;
            if r2 < 1.0 {
                (-1.0 / (1.0 - r2)).exp() * (3.0 * x).sin()
            } else {
                0.0
            }
        };
        let d_field = |x: f64, y: f64| {
            let r2: f64 = x * x + y * y;
            if r2 < 1.0 {
                let b = (-1.0 / (1.0 - r2)).exp();
                b * (-2.0 * x / ((1.0 - r2) * (1.0 - r2)) * (3.0 * x).sin()
                    + 3.0 * (3.0 * x).cos())
            } else {
                0.0
            }
        };
        let mut errs = Vec::new();
        for h in [0.05, 0.025] {
            let (grid, bx, w) = setup(h);
            let f: GridFunction<f64> = GridFunction::from_fn(grid, &w, field);
            errs.push(sup_err(&d1(&f, Axis::X1, &bx, &w), d_field, &bx));
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.5..=4.5).contains(&ratio),
            "expected ratio near 4, got {ratio} from errors {errs:?}"
        );
    }

    #[test]
    fn rotation_kills_radial_functions() {
        let mut errs = Vec::new();
        for h in [0.05, 0.025] {
            let (grid, bx, w) = setup(h);
            let f: GridFunction<f64> = GridFunction::from_fn(grid, &w, |x, y| {
                let r2 = x * x + y * y;
                if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 }
            });
            errs.push(rotation(&f, &bx, &w).sup_abs(&bx, &w));
        }
        assert!(errs[1] < 5e-3, "rotation of radial field should be near zero: {errs:?}");
        let ratio = errs[0] / errs[1];
        assert!(
            (3.0..=5.0).contains(&ratio),
            "O(h^2) decay expected, ratio {ratio} from {errs:?}"
        );
    }

    #[test]
    fn radial_scaling_matches_r_dr_on_radial_quadratic() {
        let (grid, bx, w) = setup(0.25);
        let f: GridFunction<f64> = GridFunction::from_fn(grid, &w, |x, y| x * x + y * y);
        let inner = ActiveBox {
            i0: bx.i0 + 1,
            i1: bx.i1 - 1,
            j0: bx.j0 + 1,
            j1: bx.j1 - 1,
        };
        // r d_r (r^2) = 2 r^2.
        assert!(
            sup_err(&radial_scaling(&f, &bx, &w), |x, y| 2.0 * (x * x + y * y), &inner) < 1e-12
        );
    }

    #[test]
    fn omega_is_unit_away_from_origin_and_zero_there() {
        let grid = Grid2D::new(2.0, 0.5).unwrap();
        let c = grid.origin();
        assert_eq!(omega(&grid, c, c), (0.0, 0.0));
        let (w1, w2) = omega(&grid, c + 1, c);
        assert!((w1 - 1.0).abs() < 1e-15 && w2.abs() < 1e-15);
        let (w1, w2) = omega(&grid, c + 3, c + 4);
        assert!((w1 * w1 + w2 * w2 - 1.0).abs() < 1e-15);
        assert!((w1 - 0.6).abs() < 1e-15 && (w2 - 0.8).abs() < 1e-15);
    }

    #[test]
    fn spatial_derivative_dispatches_to_named_stencils() {
        let (grid, bx, w) = setup(0.25);
        let f: GridFunction<f64> = GridFunction::from_fn(grid, &w, |x, y| x * y);
        let a = spatial_derivative(&f, Axis::X1, 2, Some(Axis::X2), &bx, &w);
        let b = d_cross(&f, &bx, &w);
        assert_eq!(a.values(), b.values());
        let c = spatial_derivative(&f, Axis::X2, 1, None, &bx, &w);
        let d = d1(&f, Axis::X2, &bx, &w);
        assert_eq!(c.values(), d.values());
    }
}
