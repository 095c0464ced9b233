//! The coefficient tensor g^{kij} of a quadratic quasilinear nonlinearity
//! g^{kij}∂_k u ∂_{ij}u, its cone symbols, and the null-condition checkers.
//!
//! Storage is over unordered pairs {i,j}, so the symmetry g^{kij} = g^{kji}
//! holds by construction: 3 values of k × 6 unordered pairs = 18 independent
//! exact rational entries. A full contraction Σ_{k,i,j} therefore counts each
//! off-diagonal entry twice.

use super::trig::{rational_to_f64, TrigPoly};
use super::AlgebraError;
use num::{BigRational, Signed, Zero};
use std::fmt;

/// Unordered pairs {i,j} in the fixed storage order.
pub const PAIRS: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Slot of the unordered pair {i,j} within [`PAIRS`].
pub fn pair_index(i: usize, j: usize) -> usize {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    match (lo, hi) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        (2, 2) => 5,
        _ => panic!("tensor index out of range: ({i},{j})"),
    }
}

fn entry_slot(k: usize, i: usize, j: usize) -> usize {
    assert!(k < 3, "tensor index out of range: k={k}");
    6 * k + pair_index(i, j)
}

/// Display name of a stored entry, with i ≤ j.
pub fn entry_name(slot: usize) -> String {
    let (i, j) = PAIRS[slot % 6];
    format!("g[{}][{}][{}]", slot / 6, i, j)
}

/// The 18 independent rational coefficients g^{kij} (k,i,j ∈ {0,1,2},
/// {i,j} unordered) defining a quadratic quasilinear nonlinearity.
#[derive(Clone, PartialEq, Eq)]
pub struct CoefficientTensor {
    entries: [BigRational; 18],
}

impl fmt::Debug for CoefficientTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoefficientTensor{{")?;
        let mut first = true;
        for (slot, v) in self.entries.iter().enumerate() {
            if !v.is_zero() {
                if !first {
                    write!(f, ", ")?;
                }
                write!(f, "{}={}", entry_name(slot), v)?;
                first = false;
            }
        }
        write!(f, "}}")
    }
}

impl CoefficientTensor {
    pub fn zero() -> Self {
        CoefficientTensor {
            entries: std::array::from_fn(|_| BigRational::zero()),
        }
    }

    /// Entry g^{kij}; either index order is accepted.
    pub fn get(&self, k: usize, i: usize, j: usize) -> &BigRational {
        &self.entries[entry_slot(k, i, j)]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, value: BigRational) {
        self.entries[entry_slot(k, i, j)] = value;
    }

    /// Add the tensor of the monomial c·∂_k u ∂_{ab}u. Off-diagonal {a,b}
    /// splits symmetrically so the round trip through contraction is exact.
    pub fn add_term(&mut self, k: usize, a: usize, b: usize, c: &BigRational) {
        let half = BigRational::new(1.into(), 2.into());
        let v = if a == b { c.clone() } else { c * &half };
        self.entries[entry_slot(k, a, b)] += v;
    }

    pub fn from_entries(items: &[(usize, usize, usize, BigRational)]) -> Self {
        let mut t = CoefficientTensor::zero();
        for (k, i, j, v) in items {
            t.set(*k, *i, *j, v.clone());
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn add(&self, other: &CoefficientTensor) -> CoefficientTensor {
        let mut out = self.clone();
        for (slot, v) in other.entries.iter().enumerate() {
            out.entries[slot] += v;
        }
        out
    }

    pub fn scale(&self, s: &BigRational) -> CoefficientTensor {
        let mut out = self.clone();
        for v in out.entries.iter_mut() {
            *v *= s;
        }
        out
    }

    /// Entries in storage order, for exact linear algebra.
    pub fn to_vector(&self) -> [BigRational; 18] {
        self.entries.clone()
    }

    pub fn from_vector(entries: [BigRational; 18]) -> Self {
        CoefficientTensor { entries }
    }

    /// The cone symbol α_k(θ) = g^{kij} ω_i ω_j at ω = (−1, cos θ, sin θ):
    /// (g^{k00} + (g^{k11}+g^{k22})/2) − 2g^{k01}cos θ − 2g^{k02}sin θ
    /// + ((g^{k11}−g^{k22})/2)cos 2θ + g^{k12}sin 2θ, exactly.
    pub fn cone_symbol(&self, k: usize) -> TrigPoly {
        assert!(k < 3, "cone symbol index out of range: k={k}");
        let two = BigRational::from_integer(2.into());
        let half = BigRational::new(1.into(), 2.into());
        let g = |i, j| self.get(k, i, j);
        let mut p = TrigPoly::zero();
        p.c0 = g(0, 0) + (g(1, 1) + g(2, 2)) * &half;
        p.cos_coeffs[0] = -(g(0, 1) * &two);
        p.sin_coeffs[0] = -(g(0, 2) * &two);
        p.cos_coeffs[1] = (g(1, 1) - g(2, 2)) * &half;
        p.sin_coeffs[1] = g(1, 2).clone();
        p
    }

    /// The full null symbol g^{kij} ω_k ω_i ω_j = −α_0 + cos θ·α_1 + sin θ·α_2,
    /// reduced exactly to harmonics ≤ 3. The tensor is a null form iff this
    /// vanishes identically.
    pub fn full_symbol(&self) -> TrigPoly {
        let a0 = self.cone_symbol(0);
        let a1 = self.cone_symbol(1);
        let a2 = self.cone_symbol(2);
        a1.mul_cos().add(&a2.mul_sin()).sub(&a0)
    }

    /// The tangency symbol (g^{1ij}ω_2 − g^{2ij}ω_1)ω_iω_j
    /// = −sin θ·α_1 + cos θ·α_2, reduced exactly to harmonics ≤ 3.
    pub fn tangency_symbol(&self) -> TrigPoly {
        let a1 = self.cone_symbol(1);
        let a2 = self.cone_symbol(2);
        a2.mul_cos().sub(&a1.mul_sin())
    }

    /// The reduced cone symbol h(θ) = cos θ·α_1 + sin θ·α_2 (the part of the
    /// full symbol carried by the spatial indices).
    pub fn h_symbol(&self) -> TrigPoly {
        let a1 = self.cone_symbol(1);
        let a2 = self.cone_symbol(2);
        a1.mul_cos().add(&a2.mul_sin())
    }

    /// Null condition via exact symbol vanishing.
    pub fn check_null(&self) -> bool {
        self.full_symbol().is_zero()
    }

    /// Null condition via the seven entry relations; must agree with
    /// [`check_null`] on every tensor.
    pub fn check_null_relations(&self) -> bool {
        let two = BigRational::from_integer(2.into());
        let half = BigRational::new(1.into(), 2.into());
        let g = |k, i, j| self.get(k, i, j);
        let r1 = g(1, 0, 1) * &two + g(0, 0, 0) + g(0, 1, 1);
        let r2 = g(2, 0, 2) * &two + g(0, 0, 0) + g(0, 2, 2);
        let r3 = g(0, 0, 1) * &two + g(1, 0, 0) + g(1, 1, 1);
        let r4 = g(0, 0, 2) * &two + g(2, 0, 0) + g(2, 2, 2);
        let r5 = g(0, 1, 2) + g(1, 0, 2) + g(2, 0, 1);
        let r6 = g(2, 1, 2) - (g(1, 1, 1) - g(1, 2, 2)) * &half;
        let r7 = g(1, 1, 2) + (g(2, 1, 1) - g(2, 2, 2)) * &half;
        [r1, r2, r3, r4, r5, r6, r7].iter().all(Zero::is_zero)
    }

    /// Null condition via floating-point sampling of the contraction at
    /// `samples` equispaced angles; agreement with the exact checkers is an
    /// acceptance property, not a definition.
    pub fn check_null_sampled(&self, samples: usize, tol: f64) -> bool {
        self.max_sampled_full_symbol(samples) <= tol
    }

    /// Strong null condition: null plus exact vanishing of the tangency symbol.
    pub fn check_strong_null(&self) -> bool {
        self.check_null() && self.tangency_symbol().is_zero()
    }

    /// Strong null condition via the five entry relations on top of the null
    /// relations; must agree with [`check_strong_null`] on every tensor.
    pub fn check_strong_null_relations(&self) -> bool {
        if !self.check_null_relations() {
            return false;
        }
        let g = |k, i, j| self.get(k, i, j);
        g(1, 0, 2).is_zero()
            && g(2, 0, 1).is_zero()
            && (g(1, 0, 1) - g(2, 0, 2)).is_zero()
            && (g(0, 0, 2) + g(1, 1, 2)).is_zero()
            && (g(0, 0, 1) + g(2, 1, 2)).is_zero()
    }

    /// Strong null condition via floating-point sampling of both symbols.
    pub fn check_strong_null_sampled(&self, samples: usize, tol: f64) -> bool {
        self.check_null_sampled(samples, tol) && self.max_sampled_tangency_symbol(samples) <= tol
    }

    /// max_θ |g^{kij} ω_k ω_i ω_j| over equispaced angles, evaluated by direct
    /// numeric contraction (floating point, full ordered index sum).
    pub fn max_sampled_full_symbol(&self, samples: usize) -> f64 {
        self.max_sampled(samples, |om, g| {
            let mut acc = 0.0;
            for k in 0..3 {
                for i in 0..3 {
                    for j in 0..3 {
                        acc += g[entry_slot(k, i, j)] * om[k] * om[i] * om[j];
                    }
                }
            }
            acc
        })
    }

    /// max_θ |(g^{1ij}ω_2 − g^{2ij}ω_1) ω_i ω_j| over equispaced angles.
    pub fn max_sampled_tangency_symbol(&self, samples: usize) -> f64 {
        self.max_sampled(samples, |om, g| {
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += (g[entry_slot(1, i, j)] * om[2] - g[entry_slot(2, i, j)] * om[1])
                        * om[i]
                        * om[j];
                }
            }
            acc
        })
    }

    fn max_sampled(&self, samples: usize, eval: impl Fn(&[f64; 3], &[f64; 18]) -> f64) -> f64 {
        let g = self.to_f64_entries();
        let mut max = 0.0f64;
        for s in 0..samples {
            let theta = 2.0 * std::f64::consts::PI * s as f64 / samples as f64;
            let om = [-1.0, theta.cos(), theta.sin()];
            max = max.max(eval(&om, &g).abs());
        }
        max
    }

    /// Largest |symbol coefficient| of the full symbol, as a near-null
    /// distance for reporting. Exactly zero iff the tensor is null.
    pub fn null_defect(&self) -> f64 {
        self.full_symbol()
            .coeffs_f64()
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Entries converted once to floating point, storage order.
    pub fn to_f64_entries(&self) -> [f64; 18] {
        std::array::from_fn(|slot| rational_to_f64(&self.entries[slot]))
    }

    /// Render as the text format, one `g[k][i][j] = value` line per nonzero
    /// entry (i ≤ j); the zero tensor renders as an empty string.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (slot, v) in self.entries.iter().enumerate() {
            if !v.is_zero() {
                out.push_str(&format!("{} = {}\n", entry_name(slot), v));
            }
        }
        out
    }
}

/// Numeric form of a tensor for solver callbacks: rationals converted once.
///
/// `terms` lists the nonzero monomials of the full contraction with
/// off-diagonal multiplicity folded into the coefficient, so
/// Σ terms c·du[k]·d2u[i][j] (i ≤ j) equals g^{kij}∂_k u ∂_{ij}u.
#[derive(Clone, Debug)]
pub struct NumericTensor {
    /// (k, pair slot, coefficient × multiplicity) for each nonzero entry.
    pub terms: Vec<(usize, usize, f64)>,
    /// g^{k00} entries, the coefficients of ∂_k u · ∂_tt u (quasilinear part).
    pub g_k00: [f64; 3],
    /// All 18 entries, storage order.
    pub entries: [f64; 18],
    /// True when every entry is zero (the linear wave equation).
    pub is_zero: bool,
}

impl NumericTensor {
    pub fn new(g: &CoefficientTensor) -> Self {
        let entries = g.to_f64_entries();
        let mut terms = Vec::new();
        for k in 0..3 {
            for (p, (i, j)) in PAIRS.iter().enumerate() {
                let v = entries[6 * k + p];
                if v != 0.0 {
                    let mult = if i == j { 1.0 } else { 2.0 };
                    terms.push((k, p, mult * v));
                }
            }
        }
        let g_k00 = [entries[0], entries[6], entries[12]];
        let is_zero = terms.is_empty();
        NumericTensor {
            terms,
            g_k00,
            entries,
            is_zero,
        }
    }

    /// Full contraction Σ g^{kij} du_k d2u_{ij} with d2u given on unordered
    /// pair slots in [`PAIRS`] order (tt, t1, t2, 11, 12, 22).
    pub fn contract(&self, du: &[f64; 3], d2u_pairs: &[f64; 6]) -> f64 {
        let mut acc = 0.0;
        for &(k, p, c) in &self.terms {
            acc += c * du[k] * d2u_pairs[p];
        }
        acc
    }
}

/// Σ g^{kij} du_k d2u_{ij} with the tensor rationals converted once and
/// cached inside `g`; `d2u` is a symmetric 3×3 of second derivatives.
pub fn evaluate_nonlinearity(g: &NumericTensor, du: &[f64; 3], d2u: &[[f64; 3]; 3]) -> f64 {
    let pairs: [f64; 6] = std::array::from_fn(|p| {
        let (i, j) = PAIRS[p];
        d2u[i][j]
    });
    g.contract(du, &pairs)
}

/// A semilinear null form A_l ∂_l (N_{ij} ∂_i u ∂_j u): a 3×3 rational matrix
/// N (not assumed symmetric) and a length-3 rational vector A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemilinearTensor {
    pub n: [[BigRational; 3]; 3],
    pub a: [BigRational; 3],
}

impl SemilinearTensor {
    pub fn zero() -> Self {
        SemilinearTensor {
            n: std::array::from_fn(|_| std::array::from_fn(|_| BigRational::zero())),
            a: std::array::from_fn(|_| BigRational::zero()),
        }
    }

    /// The classical semilinear null condition N_{ij} ω_i ω_j = 0 for all
    /// null ω, via the five entry relations.
    pub fn check_clm_null(&self) -> bool {
        let half = BigRational::new(1.into(), 2.into());
        let n = &self.n;
        let r1 = &n[0][0] + (&n[1][1] + &n[2][2]) * &half;
        let r2 = &n[0][1] + &n[1][0];
        let r3 = &n[0][2] + &n[2][0];
        let r4 = &n[1][2] + &n[2][1];
        let r5 = &n[1][1] - &n[2][2];
        [r1, r2, r3, r4, r5].iter().all(Zero::is_zero)
    }

    /// Expand A_l ∂_l (N_{ij} ∂_i u ∂_j u) = A_l N_{ij}(∂_{li}u ∂_j u +
    /// ∂_i u ∂_{lj}u) into a quasilinear coefficient tensor.
    pub fn to_coefficient_tensor(&self) -> CoefficientTensor {
        let mut t = CoefficientTensor::zero();
        for l in 0..3 {
            if self.a[l].is_zero() {
                continue;
            }
            for i in 0..3 {
                for j in 0..3 {
                    let c = &self.a[l] * &self.n[i][j];
                    if c.is_zero() {
                        continue;
                    }
                    // A_l N_{ij} ∂_j u ∂_{li}u  +  A_l N_{ij} ∂_i u ∂_{lj}u
                    t.add_term(j, l, i, &c);
                    t.add_term(i, l, j, &c);
                }
            }
        }
        t
    }
}

/// Parse the tensor text format: one `g[k][i][j] = value` assignment per
/// line, `#` comments, blank lines allowed. Values are exact rationals
/// (`p/q`, integers, or finite decimals). Specifying the same unordered entry
/// twice with conflicting values is an error; repeating the same value is
/// accepted.
pub fn parse_tensor(text: &str) -> Result<CoefficientTensor, AlgebraError> {
    let mut tensor = CoefficientTensor::zero();
    let mut seen: [Option<(usize, BigRational)>; 18] = std::array::from_fn(|_| None);
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (lhs, rhs) = line.split_once('=').ok_or_else(|| AlgebraError::Parse {
            line: line_no,
            msg: "expected `g[k][i][j] = value`".into(),
        })?;
        let (k, i, j) = parse_entry_name(lhs.trim()).map_err(|msg| AlgebraError::Parse {
            line: line_no,
            msg,
        })?;
        let value = parse_rational(rhs.trim()).map_err(|msg| AlgebraError::Parse {
            line: line_no,
            msg,
        })?;
        let slot = entry_slot(k, i, j);
        if let Some((first_line, ref prev)) = seen[slot] {
            if *prev != value {
                return Err(AlgebraError::Parse {
                    line: line_no,
                    msg: format!(
                        "conflicting values for {} (first set on line {})",
                        entry_name(slot),
                        first_line
                    ),
                });
            }
        } else {
            seen[slot] = Some((line_no, value.clone()));
            tensor.entries[slot] = value;
        }
    }
    Ok(tensor)
}

fn parse_entry_name(s: &str) -> Result<(usize, usize, usize), String> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let rest = compact
        .strip_prefix('g')
        .ok_or_else(|| format!("expected entry name like g[0][1][2], got `{s}`"))?;
    let mut idx = Vec::new();
    let mut chars = rest.chars();
    for _ in 0..3 {
        if chars.next() != Some('[') {
            return Err(format!("expected entry name like g[0][1][2], got `{s}`"));
        }
        let d = chars
            .next()
            .and_then(|c| c.to_digit(10))
            .ok_or_else(|| format!("expected digit index in `{s}`"))? as usize;
        if d > 2 {
            return Err(format!("tensor index out of range in `{s}`: indices are 0..2"));
        }
        if chars.next() != Some(']') {
            return Err(format!("expected entry name like g[0][1][2], got `{s}`"));
        }
        idx.push(d);
    }
    if chars.next().is_some() {
        return Err(format!("trailing characters in entry name `{s}`"));
    }
    Ok((idx[0], idx[1], idx[2]))
}

/// Parse an exact rational: `p/q`, an integer, or a finite decimal.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    use num::BigInt;
    use std::str::FromStr;
    let s = s.trim();
    if s.is_empty() {
        return Err("empty value".into());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| format!("bad numerator `{num}`"))?;
        let d = BigInt::from_str(den.trim()).map_err(|_| format!("bad denominator `{den}`"))?;
        if d.is_zero() {
            return Err("zero denominator".into());
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let sign = if whole.trim_start().starts_with('-') { -1 } else { 1 };
        let w = if whole.is_empty() || whole == "-" || whole == "+" {
            BigInt::from(0)
        } else {
            BigInt::from_str(whole).map_err(|_| format!("bad number `{s}`"))?
        };
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(format!("bad number `{s}`"));
        }
        let f = BigInt::from_str(frac).map_err(|_| format!("bad number `{s}`"))?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let whole_part = BigRational::from_integer(w);
        let frac_part = BigRational::new(f, scale) * BigRational::from_integer(sign.into());
        return Ok(whole_part + frac_part);
    }
    BigInt::from_str(s)
        .map(BigRational::from_integer)
        .map_err(|_| format!("bad number `{s}`"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn storage_is_symmetric_in_ij() {
        let mut t = CoefficientTensor::zero();
        t.set(1, 0, 2, rat(3, 7));
        assert_eq!(t.get(1, 2, 0), &rat(3, 7));
    }

    #[test]
    fn cone_symbol_of_single_sin2_entry() {
        // g^{112}=1 → α_1 has sin 2θ coefficient 1, all others 0.
        let mut t = CoefficientTensor::zero();
        t.set(1, 1, 2, rat(1, 1));
        let p = t.cone_symbol(1);
        assert_eq!(p.sin_coeffs[1], rat(1, 1));
        let mut expect = TrigPoly::zero();
        expect.sin_coeffs[1] = rat(1, 1);
        assert_eq!(p, expect);
    }

    #[test]
    fn cone_symbol_matches_numeric_contraction() {
        let mut t = CoefficientTensor::zero();
        let vals = [
            (0, 0, 0, 3, 5),
            (0, 1, 2, -2, 3),
            (1, 0, 1, 7, 2),
            (1, 2, 2, 1, 9),
            (2, 0, 2, -4, 7),
            (2, 1, 1, 5, 11),
        ];
        for (k, i, j, n, d) in vals {
            t.set(k, i, j, rat(n, d));
        }
        let g = t.to_f64_entries();
        for k in 0..3 {
            let sym = t.cone_symbol(k);
            for s in 0..37 {
                let theta = 0.17 * s as f64;
                let om = [-1.0, theta.cos(), theta.sin()];
                let mut direct = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        direct += g[super::entry_slot(k, i, j)] * om[i] * om[j];
                    }
                }
                assert!((sym.eval_f64(theta) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_symbol_of_g000_is_minus_one() {
        let mut t = CoefficientTensor::zero();
        t.set(0, 0, 0, rat(1, 1));
        let p = t.full_symbol();
        assert_eq!(p.c0, rat(-1, 1));
        assert_eq!(p.nonzero_coeffs().len(), 1);
        assert!(!t.check_null());
        assert!(!t.check_null_relations());
        assert!(!t.check_null_sampled(64, 1e-12));
    }

    #[test]
    fn zero_tensor_is_strongly_null() {
        let t = CoefficientTensor::zero();
        assert!(t.cone_symbol(0).is_zero());
        assert!(t.check_strong_null());
        assert!(t.check_strong_null_relations());
        assert!(t.check_strong_null_sampled(64, 1e-12));
    }

    #[test]
    fn clm_checker_examples() {
        let mut s = SemilinearTensor::zero();
        s.n[0][0] = rat(1, 1);
        s.n[1][1] = rat(-1, 1);
        s.n[2][2] = rat(-1, 1);
        assert!(s.check_clm_null());
        assert!(SemilinearTensor::zero().check_clm_null());
        let mut bad = SemilinearTensor::zero();
        bad.n[0][1] = rat(1, 1);
        assert!(!bad.check_clm_null());
    }

    #[test]
    fn antisymmetric_n_is_clm_null_and_contracts_to_zero_tensor() {
        let mut s = SemilinearTensor::zero();
        s.a[1] = rat(2, 3);
        s.n[0][1] = rat(1, 1);
        s.n[1][0] = rat(-1, 1);
        assert!(s.check_clm_null());
        assert!(s.to_coefficient_tensor().is_zero());
    }

    #[test]
    fn evaluate_nonlinearity_examples() {
        // FA0 tensor, du=(1,0,0), d2u_{00}=1 → 2.
        let fa0 = CoefficientTensor::from_entries(&[
            (0, 0, 0, rat(2, 1)),
            (1, 0, 1, rat(-1, 1)),
            (2, 0, 2, rat(-1, 1)),
        ]);
        let nt = NumericTensor::new(&fa0);
        let mut d2u = [[0.0; 3]; 3];
        d2u[0][0] = 1.0;
        assert_eq!(evaluate_nonlinearity(&nt, &[1.0, 0.0, 0.0], &d2u), 2.0);

        // FB0 tensor, du=(1,0,0), spatial identity block, d2u_{00}=2 → 0.
        let fb0 = CoefficientTensor::from_entries(&[
            (0, 0, 0, rat(1, 1)),
            (0, 1, 1, rat(-1, 1)),
            (0, 2, 2, rat(-1, 1)),
        ]);
        let nt = NumericTensor::new(&fb0);
        let d2u = [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(evaluate_nonlinearity(&nt, &[1.0, 0.0, 0.0], &d2u), 0.0);

        let zero = NumericTensor::new(&CoefficientTensor::zero());
        assert!(zero.is_zero);
        assert_eq!(evaluate_nonlinearity(&zero, &[1.0, 2.0, 3.0], &d2u), 0.0);
    }

    #[test]
    fn parse_round_trip_and_conflicts() {
        let text = "# comment\n g[0][0][0] = 2 \ng[1][0][1] = -1\ng[2][0][2] = -1\n";
        let t = parse_tensor(text).unwrap();
        assert_eq!(t.get(0, 0, 0), &rat(2, 1));
        assert_eq!(t.get(1, 1, 0), &rat(-1, 1));
        let again = parse_tensor(&t.to_text()).unwrap();
        assert_eq!(again, t);

        // Both orders with the same value: fine.
        let ok = "g[1][0][2] = 1/2\ng[1][2][0] = 1/2\n";
        assert!(parse_tensor(ok).is_ok());

        // Both orders with conflicting values: error with line number.
        let bad = "g[1][0][2] = 1/2\ng[1][2][0] = 1/3\n";
        match parse_tensor(bad) {
            Err(AlgebraError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rational_forms() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational("-5").unwrap(), rat(-5, 1));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }
}
