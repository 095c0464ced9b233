//! Smooth compactly supported data profiles and the cone cutoff.
//!
//! Every profile is C^∞, supported in the closed unit disk, and vanishes
//! identically (not merely small) outside it. The library covers a plain
//! bump, an annular bump, and an oscillatory bump with a wavenumber
//! parameter.

use std::fmt;

/// exp(-1/(1-z^2)) for |z| < 1, zero otherwise: the standard bump on a
/// unit interval of its argument.
#[inline]
pub fn bump1d(z: f64) -> f64 {
    if z.abs() < 1.0 {
        (-1.0 / (1.0 - z * z)).exp()
    } else {
        0.0
    }
}

/// The radial bump exp(-1/(1-|x|^2)) extended by zero.
#[inline]
pub fn bump(x1: f64, x2: f64) -> f64 {
    bump1d((x1 * x1 + x2 * x2).sqrt())
}

/// Value, gradient, and Laplacian of the radial bump in closed form.
///
/// With s = |x|^2 and B(s) = exp(-1/(1-s)): B' = -B/(1-s)^2,
/// B'' = B/(1-s)^4 - 2B/(1-s)^3, grad = 2 x_i B', Δ = 4 B' + 4 s B''.
pub fn bump_derivatives(x1: f64, x2: f64) -> (f64, [f64; 2], f64) {
    let s = x1 * x1 + x2 * x2;
    if s >= 1.0 {
        return (0.0, [0.0, 0.0], 0.0);
    }
    let om = 1.0 - s;
    let b = (-1.0 / om).exp();
    let b1 = -b / (om * om);
    let b2 = b / (om * om * om * om) - 2.0 * b / (om * om * om);
    (b, [2.0 * x1 * b1, 2.0 * x2 * b1], 4.0 * b1 + 4.0 * s * b2)
}

/// A named initial-data profile, supported in the unit disk.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    Zero,
    /// exp(-1/(1-|x|^2)), the default.
    Bump,
    /// Radial bump centered on the circle r = r0 with half width `width`;
    /// requires r0 + width <= 1 so the support stays in the unit disk.
    Annulus { r0: f64, width: f64 },
    /// Bump modulated by cos(2π k x1).
    Oscillatory { wavenumber: f64 },
}

impl Profile {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Bump => bump(x1, x2),
            Profile::Annulus { r0, width } => {
                let r = (x1 * x1 + x2 * x2).sqrt();
                bump1d((r - r0) / width)
            }
            Profile::Oscillatory { wavenumber } => {
                bump(x1, x2) * (2.0 * std::f64::consts::PI * wavenumber * x1).cos()
            }
        }
    }

    /// Parses `zero`, `bump`, `annulus(r0,width)`, or `oscillatory(k)`.
    pub fn parse(text: &str) -> Result<Profile, ProfileError> {
        let s = text.trim();
        let lower = s.to_ascii_lowercase();
        if lower == "zero" {
            return Ok(Profile::Zero);
        }
        if lower == "bump" {
            return Ok(Profile::Bump);
        }
        if let Some(args) = strip_call(&lower, "annulus") {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(ProfileError::BadArguments(s.to_string()));
            }
            let r0: f64 = parts[0].parse().map_err(|_| ProfileError::BadArguments(s.to_string()))?;
            let width: f64 =
                parts[1].parse().map_err(|_| ProfileError::BadArguments(s.to_string()))?;
            if !(width > 0.0 && r0 >= 0.0 && r0 + width <= 1.0) {
                return Err(ProfileError::OutsideUnitDisk { r0, width });
            }
            return Ok(Profile::Annulus { r0, width });
        }
        if let Some(args) = strip_call(&lower, "oscillatory") {
            let wavenumber: f64 =
                args.trim().parse().map_err(|_| ProfileError::BadArguments(s.to_string()))?;
            if !wavenumber.is_finite() {
                return Err(ProfileError::BadArguments(s.to_string()));
            }
            return Ok(Profile::Oscillatory { wavenumber });
        }
        Err(ProfileError::Unknown(s.to_string()))
    }
}

fn strip_call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "zero"),
            Profile::Bump => write!(f, "bump"),
            Profile::Annulus { r0, width } => write!(f, "annulus({r0},{width})"),
            Profile::Oscillatory { wavenumber } => write!(f, "oscillatory({wavenumber})"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProfileError {
    #[error("unknown profile '{0}' (expected zero, bump, annulus(r0,width), or oscillatory(k))")]
    Unknown(String),
    #[error("could not parse profile arguments in '{0}'")]
    BadArguments(String),
    #[error("annulus(r0={r0}, width={width}) leaves the unit disk; need r0 + width <= 1")]
    OutsideUnitDisk { r0: f64, width: f64 },
}

/// Smooth ramp rising from 0 at z <= 0 to 1 at z >= 1, built from the
/// exp-based partition of unity.
fn ramp(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / z).exp();
        let b = (-1.0 / (1.0 - z)).exp();
        a / (a + b)
    }
}

/// The cone cutoff φ: identically 1 on [2/3, 3/2], identically 0 outside
/// (1/3, 2), C^∞ in between.
pub fn cone_cutoff(z: f64) -> f64 {
    if z <= 1.0 / 3.0 || z >= 2.0 {
        0.0
    } else if z >= 2.0 / 3.0 && z <= 1.5 {
        1.0
    } else if z < 2.0 / 3.0 {
        ramp((z - 1.0 / 3.0) * 3.0)
    } else {
        ramp((2.0 - z) * 2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_vanishes_identically_outside_the_unit_disk() {
        assert_eq!(bump(1.0, 0.0), 0.0);
        assert_eq!(bump(0.8, 0.61), 0.0);
        assert_eq!(bump(100.0, -3.0), 0.0);
        assert!(bump(0.0, 0.0) > 0.36 && bump(0.0, 0.0) < 0.37);
        assert!(bump(0.5, 0.5) > 0.0);
    }

    #[test]
    fn bump_derivatives_match_finite_differences() {
        let d = 1e-6;
        for &(x, y) in &[(0.2, -0.3), (0.0, 0.0), (0.7, 0.1)] {
            let (_, grad, lap) = bump_derivatives(x, y);
            let g1 = (bump(x + d, y) - bump(x - d, y)) / (2.0 * d);
            let g2 = (bump(x, y + d) - bump(x, y - d)) / (2.0 * d);
            assert!((grad[0] - g1).abs() < 1e-6, "grad1 at ({x},{y})");
            assert!((grad[1] - g2).abs() < 1e-6, "grad2 at ({x},{y})");
            let l = (bump(x + d, y) + bump(x - d, y) + bump(x, y + d) + bump(x, y - d)
                - 4.0 * bump(x, y))
                / (d * d);
            assert!((lap - l).abs() < 1e-3, "laplacian at ({x},{y}): {lap} vs {l}");
        }
    }

    #[test]
    fn annulus_is_supported_in_the_stated_ring() {
        let p = Profile::Annulus { r0: 0.6, width: 0.3 };
        assert_eq!(p.eval(0.0, 0.0), 0.0);
        assert_eq!(p.eval(0.29, 0.0), 0.0);
        assert!(p.eval(0.6, 0.0) > 0.36);
        assert!(p.eval(0.0, 0.75) > 0.0);
        assert_eq!(p.eval(0.91, 0.0), 0.0);
    }

    #[test]
    fn oscillatory_modulates_the_bump() {
        let p = Profile::Oscillatory { wavenumber: 2.0 };
        assert_eq!(p.eval(0.25, 0.0), -bump(0.25, 0.0));
        assert_eq!(p.eval(1.1, 0.0), 0.0);
    }

    #[test]
    fn parser_round_trips_and_rejects_bad_input() {
        for text in ["zero", "bump", "annulus(0.6,0.3)", "oscillatory(2.5)"] {
            let p = Profile::parse(text).unwrap();
            assert_eq!(Profile::parse(&p.to_string()).unwrap(), p);
        }
        assert_eq!(Profile::parse(" Bump "), Ok(Profile::Bump));
        assert!(matches!(Profile::parse("spike"), Err(ProfileError::Unknown(_))));
        assert!(matches!(
            Profile::parse("annulus(0.9,0.3)"),
            Err(ProfileError::OutsideUnitDisk { .. })
        ));
        assert!(matches!(
            Profile::parse("oscillatory(two)"),
            Err(ProfileError::BadArguments(_))
        ));
    }

    #[test]
    fn cone_cutoff_has_the_required_plateaus() {
        for z in [0.0, 0.2, 1.0 / 3.0, 2.0, 2.5] {
            assert_eq!(cone_cutoff(z), 0.0, "z={z}");
        }
        for z in [2.0 / 3.0, 0.8, 1.0, 1.5] {
            assert_eq!(cone_cutoff(z), 1.0, "z={z}");
        }
        for z in [0.5, 1.7] {
            let v = cone_cutoff(z);
            assert!(v > 0.0 && v < 1.0, "transition at z={z} gave {v}");
        }
        // Monotone on each transition band.
        let mut prev = 0.0;
        for k in 0..=100 {
            let z = 1.0 / 3.0 + k as f64 * (1.0 / 300.0);
            let v = cone_cutoff(z);
            assert!(v >= prev);
            prev = v;
        }
    }
}
