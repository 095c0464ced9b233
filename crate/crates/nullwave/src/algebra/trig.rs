//! Trigonometric polynomials in the cone angle θ, harmonics up to 3, with
//! exact rational coefficients.
//!
//! Restricting a coefficient tensor to null covectors (−1, cos θ, sin θ)
//! produces polynomials in cos nθ / sin nθ. Degree bookkeeping: the per-index
//! symbols α_k have harmonics ≤ 2, and one extra multiplication by cos θ or
//! sin θ raises the degree to at most 3, so a fixed 7-coefficient layout is
//! exact for everything this crate needs.

use num::BigRational;
use num::Zero;

/// Highest harmonic representable; fixed by the algebra (see module docs).
pub const MAX_HARMONIC: usize = 3;

/// c0 + Σ_{n=1..3} (cos_coeffs[n−1]·cos nθ + sin_coeffs[n−1]·sin nθ),
/// all coefficients exact rationals.
///
/// Invariant: the polynomial is identically zero iff all 7 stored
/// coefficients are zero (1, cos θ, sin θ, …, sin 3θ are linearly
/// independent functions).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrigPoly {
    pub c0: BigRational,
    pub cos_coeffs: [BigRational; MAX_HARMONIC],
    pub sin_coeffs: [BigRational; MAX_HARMONIC],
}

impl TrigPoly {
    pub fn zero() -> Self {
        let z = BigRational::zero;
        TrigPoly {
            c0: z(),
            cos_coeffs: [z(), z(), z()],
            sin_coeffs: [z(), z(), z()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.c0.is_zero()
            && self.cos_coeffs.iter().all(Zero::is_zero)
            && self.sin_coeffs.iter().all(Zero::is_zero)
    }

    /// Degree of the highest nonzero harmonic (0 for constants and zero).
    pub fn degree(&self) -> usize {
        for n in (0..MAX_HARMONIC).rev() {
            if !self.cos_coeffs[n].is_zero() || !self.sin_coeffs[n].is_zero() {
                return n + 1;
            }
        }
        0
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        let mut out = self.clone();
        out.c0 += &other.c0;
        for n in 0..MAX_HARMONIC {
            out.cos_coeffs[n] += &other.cos_coeffs[n];
            out.sin_coeffs[n] += &other.sin_coeffs[n];
        }
        out
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TrigPoly {
        let mut out = TrigPoly::zero();
        out.c0 = -self.c0.clone();
        for n in 0..MAX_HARMONIC {
            out.cos_coeffs[n] = -self.cos_coeffs[n].clone();
            out.sin_coeffs[n] = -self.sin_coeffs[n].clone();
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> TrigPoly {
        let mut out = self.clone();
        out.c0 *= s;
        for n in 0..MAX_HARMONIC {
            out.cos_coeffs[n] *= s;
            out.sin_coeffs[n] *= s;
        }
        out
    }

    /// Exact product with cos θ via product-to-sum identities.
    ///
    /// The input degree must be ≤ 2 so the result still fits in harmonics ≤ 3.
    pub fn mul_cos(&self) -> TrigPoly {
        assert!(self.degree() <= MAX_HARMONIC - 1, "harmonic overflow in mul_cos");
        let half = BigRational::new(1.into(), 2.into());
        let mut out = TrigPoly::zero();
        // c0·cosθ → cos θ
        out.cos_coeffs[0] += &self.c0;
        // cos nθ·cosθ = ½cos(n−1)θ + ½cos(n+1)θ
        for n in 1..MAX_HARMONIC {
            let c = &self.cos_coeffs[n - 1] * &half;
            if n == 1 {
                out.c0 += &c;
            } else {
                out.cos_coeffs[n - 2] += &c;
            }
            out.cos_coeffs[n] += &c;
        }
        // sin nθ·cosθ = ½sin(n+1)θ + ½sin(n−1)θ  (sin 0 = 0)
        for n in 1..MAX_HARMONIC {
            let c = &self.sin_coeffs[n - 1] * &half;
            out.sin_coeffs[n] += &c;
            if n >= 2 {
                out.sin_coeffs[n - 2] += &c;
            }
        }
        out
    }

    /// Exact product with sin θ via product-to-sum identities.
    ///
    /// The input degree must be ≤ 2 so the result still fits in harmonics ≤ 3.
    pub fn mul_sin(&self) -> TrigPoly {
        assert!(self.degree() <= MAX_HARMONIC - 1, "harmonic overflow in mul_sin");
        let half = BigRational::new(1.into(), 2.into());
        let mut out = TrigPoly::zero();
        // c0·sinθ → sin θ
        out.sin_coeffs[0] += &self.c0;
        // cos nθ·sinθ = ½sin(n+1)θ − ½sin(n−1)θ  (sin 0 = 0)
        for n in 1..MAX_HARMONIC {
            let c = &self.cos_coeffs[n - 1] * &half;
            out.sin_coeffs[n] += &c;
            if n >= 2 {
                out.sin_coeffs[n - 2] -= &c;
            }
        }
        // sin nθ·sinθ = ½cos(n−1)θ − ½cos(n+1)θ
        for n in 1..MAX_HARMONIC {
            let c = &self.sin_coeffs[n - 1] * &half;
            if n == 1 {
                out.c0 += &c;
            } else {
                out.cos_coeffs[n - 2] += &c;
            }
            out.cos_coeffs[n] -= &c;
        }
        out
    }

    /// Coefficients converted once to floating point, in the order
    /// (c0, cos1, cos2, cos3, sin1, sin2, sin3).
    pub fn coeffs_f64(&self) -> [f64; 7] {
        let f = |r: &BigRational| rational_to_f64(r);
        [
            f(&self.c0),
            f(&self.cos_coeffs[0]),
            f(&self.cos_coeffs[1]),
            f(&self.cos_coeffs[2]),
            f(&self.sin_coeffs[0]),
            f(&self.sin_coeffs[1]),
            f(&self.sin_coeffs[2]),
        ]
    }

    /// Evaluate at θ in floating point.
    pub fn eval_f64(&self, theta: f64) -> f64 {
        let c = self.coeffs_f64();
        let mut acc = c[0];
        for n in 1..=MAX_HARMONIC {
            let (s, co) = (n as f64 * theta).sin_cos();
            acc += c[n] * co + c[3 + n] * s;
        }
        acc
    }

    /// Evaluate from (cos θ, sin θ) without trigonometric calls, using the
    /// multiple-angle recurrences. Exact for unit vectors (c² + s² = 1).
    pub fn eval_from_direction(coeffs: &[f64; 7], c: f64, s: f64) -> f64 {
        let c2 = c * c - s * s;
        let s2 = 2.0 * c * s;
        let c3 = c2 * c - s2 * s;
        let s3 = s2 * c + c2 * s;
        coeffs[0] + coeffs[1] * c + coeffs[2] * c2 + coeffs[3] * c3 + coeffs[4] * s + coeffs[5] * s2 + coeffs[6] * s3
    }

    /// Nonzero coefficients with short labels, for reports and errors.
    pub fn nonzero_coeffs(&self) -> Vec<(String, BigRational)> {
        let mut out = Vec::new();
        if !self.c0.is_zero() {
            out.push(("const".into(), self.c0.clone()));
        }
        for n in 0..MAX_HARMONIC {
            if !self.cos_coeffs[n].is_zero() {
                out.push((format!("cos{}", n + 1), self.cos_coeffs[n].clone()));
            }
        }
        for n in 0..MAX_HARMONIC {
            if !self.sin_coeffs[n].is_zero() {
                out.push((format!("sin{}", n + 1), self.sin_coeffs[n].clone()));
            }
        }
        out
    }
}

/// Lossy conversion used only at the solver/report boundary.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().expect("rational out of f64 range")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::FromPrimitive;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn zero_iff_all_coeffs_zero() {
        let mut p = TrigPoly::zero();
        assert!(p.is_zero());
        p.sin_coeffs[2] = rat(1, 3);
        assert!(!p.is_zero());
        assert_eq!(p.degree(), 3);
    }

    #[test]
    fn eval_matches_coefficients() {
        let mut p = TrigPoly::zero();
        p.c0 = rat(1, 2);
        p.cos_coeffs[1] = rat(-3, 4);
        p.sin_coeffs[0] = rat(2, 1);
        let theta: f64 = 0.81;
        let want = 0.5 - 0.75 * (2.0 * theta).cos() + 2.0 * theta.sin();
        assert!((p.eval_f64(theta) - want).abs() < 1e-15);
    }

    #[test]
    fn products_match_numeric_evaluation() {
        let mut p = TrigPoly::zero();
        p.c0 = rat(2, 3);
        p.cos_coeffs[0] = rat(-1, 2);
        p.cos_coeffs[1] = rat(5, 7);
        p.sin_coeffs[0] = rat(1, 5);
        p.sin_coeffs[1] = rat(-4, 3);
        let pc = p.mul_cos();
        let ps = p.mul_sin();
        for k in 0..17 {
            let theta = 0.37 + 0.41 * k as f64;
            let base = p.eval_f64(theta);
            assert!((pc.eval_f64(theta) - base * theta.cos()).abs() < 1e-13);
            assert!((ps.eval_f64(theta) - base * theta.sin()).abs() < 1e-13);
        }
    }

    #[test]
    fn direction_evaluation_matches_angle_evaluation() {
        let mut p = TrigPoly::zero();
        p.c0 = rat(1, 7);
        p.cos_coeffs[2] = rat(3, 2);
        p.sin_coeffs[1] = rat(-2, 9);
        p.sin_coeffs[2] = rat(1, 4);
        let c = p.coeffs_f64();
        for k in 0..32 {
            let theta = 0.196 * k as f64;
            let direct = TrigPoly::eval_from_direction(&c, theta.cos(), theta.sin());
            assert!((direct - p.eval_f64(theta)).abs() < 1e-13);
        }
    }

    #[test]
    fn rational_conversion_is_exact_for_dyadics() {
        assert_eq!(rational_to_f64(&rat(-3, 8)), -0.375);
        assert_eq!(
            rational_to_f64(&BigRational::from_f64(0.1).unwrap()),
            0.1
        );
    }
}
