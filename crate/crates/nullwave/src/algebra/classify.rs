//! The null-form basis, exact decomposition of null tensors over it, the
//! free-parameter description of the null subspace, and named presets.
//!
//! The 11 forms FA0..FA2, FB0..FB2, FC1, FC2, FD1..FD3 span the space of
//! null tensors; the G forms are aliases or combinations of them. A null
//! tensor decomposes uniquely over the basis, and the strong-null tensors
//! are exactly the ones whose decomposition uses only the A and B families.

use super::tensor::{CoefficientTensor, SemilinearTensor};
use super::AlgebraError;
use num::{BigRational, Zero};
use rand::Rng;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

/// Named quadratic null forms. The first 11 are the decomposition basis;
/// the G forms reduce to combinations of them.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Form {
    Fa0,
    Fa1,
    Fa2,
    Fb0,
    Fb1,
    Fb2,
    Fc1,
    Fc2,
    Fd1,
    Fd2,
    Fd3,
    Gc0,
    Gc1,
    Gc2,
    Gd0,
    Gd1,
    Gd2,
}

/// Decomposition basis, in coefficient order (cA, cB, cC, cD).
pub const BASIS: [Form; 11] = [
    Form::Fa0,
    Form::Fa1,
    Form::Fa2,
    Form::Fb0,
    Form::Fb1,
    Form::Fb2,
    Form::Fc1,
    Form::Fc2,
    Form::Fd1,
    Form::Fd2,
    Form::Fd3,
];

impl Form {
    pub fn all() -> [Form; 17] {
        [
            Form::Fa0,
            Form::Fa1,
            Form::Fa2,
            Form::Fb0,
            Form::Fb1,
            Form::Fb2,
            Form::Fc1,
            Form::Fc2,
            Form::Fd1,
            Form::Fd2,
            Form::Fd3,
            Form::Gc0,
            Form::Gc1,
            Form::Gc2,
            Form::Gd0,
            Form::Gd1,
            Form::Gd2,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Form::Fa0 => "FA0",
            Form::Fa1 => "FA1",
            Form::Fa2 => "FA2",
            Form::Fb0 => "FB0",
            Form::Fb1 => "FB1",
            Form::Fb2 => "FB2",
            Form::Fc1 => "FC1",
            Form::Fc2 => "FC2",
            Form::Fd1 => "FD1",
            Form::Fd2 => "FD2",
            Form::Fd3 => "FD3",
            Form::Gc0 => "GC0",
            Form::Gc1 => "GC1",
            Form::Gc2 => "GC2",
            Form::Gd0 => "GD0",
            Form::Gd1 => "GD1",
            Form::Gd2 => "GD2",
        }
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Form {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_uppercase())
            .collect();
        let form = match key.as_str() {
            "FA0" => Form::Fa0,
            "FA1" => Form::Fa1,
            "FA2" => Form::Fa2,
            "FB0" => Form::Fb0,
            "FB1" => Form::Fb1,
            "FB2" => Form::Fb2,
            "FC1" => Form::Fc1,
            "FC2" => Form::Fc2,
            "FD1" => Form::Fd1,
            "FD2" => Form::Fd2,
            "FD3" => Form::Fd3,
            "GC0" => Form::Gc0,
            "GC1" => Form::Gc1,
            "GC2" => Form::Gc2,
            "GD0" => Form::Gd0,
            "GD1" => Form::Gd1,
            "GD2" => Form::Gd2,
            _ => return Err(AlgebraError::UnknownForm(s.to_string())),
        };
        Ok(form)
    }
}

/// The exact tensor whose contraction g^{kij}∂_k u ∂_{ij}u equals the named
/// form. Off-diagonal monomials are stored symmetrized (half per order).
pub fn basis_tensor(form: Form) -> CoefficientTensor {
    let rat = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    let entries: &[(usize, usize, usize, i64, i64)] = match form {
        // F^A_l = ∂_l(|∂_t u|² − |∇u|²)
        Form::Fa0 => &[(0, 0, 0, 2, 1), (1, 0, 1, -1, 1), (2, 0, 2, -1, 1)],
        Form::Fa1 => &[(0, 0, 1, 1, 1), (1, 1, 1, -2, 1), (2, 1, 2, -1, 1)],
        Form::Fa2 => &[(0, 0, 2, 1, 1), (1, 1, 2, -1, 1), (2, 2, 2, -2, 1)],
        // F^B_l = ∂_l u □u
        Form::Fb0 => &[(0, 0, 0, 1, 1), (0, 1, 1, -1, 1), (0, 2, 2, -1, 1)],
        Form::Fb1 => &[(1, 0, 0, 1, 1), (1, 1, 1, -1, 1), (1, 2, 2, -1, 1)],
        Form::Fb2 => &[(2, 0, 0, 1, 1), (2, 1, 1, -1, 1), (2, 2, 2, -1, 1)],
        // F^C_1 = ∂_0u∂_{12}u − ∂_1u∂_{02}u, F^C_2 = ∂_1u∂_{02}u − ∂_2u∂_{01}u
        Form::Fc1 => &[(0, 1, 2, 1, 2), (1, 0, 2, -1, 2)],
        Form::Fc2 => &[(1, 0, 2, 1, 2), (2, 0, 1, -1, 2)],
        // F^D_1 = ∂_0u∂_{11}u − ∂_1u∂_{01}u, F^D_2 = ∂_1u∂_{22}u − ∂_2u∂_{12}u,
        // F^D_3 = ∂_2u∂_{11}u − ∂_1u∂_{12}u
        Form::Fd1 => &[(0, 1, 1, 1, 1), (1, 0, 1, -1, 2)],
        Form::Fd2 => &[(1, 2, 2, 1, 1), (2, 1, 2, -1, 2)],
        Form::Fd3 => &[(2, 1, 1, 1, 1), (1, 1, 2, -1, 2)],
        // G^C_i = ∂_0u∂_1∂_iu − ∂_1u∂_0∂_iu; G^D_i = ∂_1u∂_2∂_iu − ∂_2u∂_1∂_iu.
        // GC1 = FD1, GC2 = FC1, GD0 = FC2, GD1 = −FD3, GD2 = FD2.
        Form::Gc0 => &[(0, 0, 1, 1, 2), (1, 0, 0, -1, 1)],
        Form::Gc1 => return basis_tensor(Form::Fd1),
        Form::Gc2 => return basis_tensor(Form::Fc1),
        Form::Gd0 => return basis_tensor(Form::Fc2),
        Form::Gd1 => &[(1, 1, 2, 1, 2), (2, 1, 1, -1, 1)],
        Form::Gd2 => return basis_tensor(Form::Fd2),
    };
    let mut t = CoefficientTensor::zero();
    for &(k, i, j, n, d) in entries {
        t.set(k, i, j, rat(n, d));
    }
    t
}

/// The 11 free parameters a_1..a_11 of a null tensor, stored as a[0..10].
///
/// The designated entries are a_1=g^{000}, a_2=g^{001}, a_3=g^{002},
/// a_4=g^{011}, a_5=g^{012}, a_6=g^{022}, a_7=g^{100}, a_8=g^{222},
/// a_9=g^{102}, a_10=g^{122}, a_11=g^{112}; the remaining seven entries are
/// determined by the null relations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParameterVector {
    pub a: [BigRational; 11],
}

impl ParameterVector {
    pub fn zero() -> Self {
        ParameterVector {
            a: std::array::from_fn(|_| BigRational::zero()),
        }
    }
}

/// Entry addresses (k,i,j) of the free parameters a_1..a_11, in order.
const FREE_ENTRIES: [(usize, usize, usize); 11] = [
    (0, 0, 0),
    (0, 0, 1),
    (0, 0, 2),
    (0, 1, 1),
    (0, 1, 2),
    (0, 2, 2),
    (1, 0, 0),
    (2, 2, 2),
    (1, 0, 2),
    (1, 2, 2),
    (1, 1, 2),
];

/// Read the free parameters off a null tensor.
///
/// Fails with [`AlgebraError::NotNull`] (listing the nonzero symbol
/// coefficients) when the tensor is not null, since only then do the
/// parameters determine the tensor.
pub fn parametrize(g: &CoefficientTensor) -> Result<ParameterVector, AlgebraError> {
    if !g.check_null() {
        return Err(not_null_error(g));
    }
    Ok(ParameterVector {
        a: std::array::from_fn(|m| {
            let (k, i, j) = FREE_ENTRIES[m];
            g.get(k, i, j).clone()
        }),
    })
}

/// Reconstruct the unique null tensor with the given free parameters: the
/// seven dependent entries follow from the null relations.
pub fn synthesize_from_parameters(p: &ParameterVector) -> CoefficientTensor {
    let two = BigRational::from_integer(2.into());
    let half = BigRational::new(1.into(), 2.into());
    let a = |m: usize| &p.a[m - 1];
    let mut g = CoefficientTensor::zero();
    for (m, &(k, i, j)) in FREE_ENTRIES.iter().enumerate() {
        g.set(k, i, j, p.a[m].clone());
    }
    g.set(1, 0, 1, -(a(1) + a(4)) * &half);
    g.set(2, 0, 2, -(a(1) + a(6)) * &half);
    g.set(1, 1, 1, -(a(2) * &two) - a(7));
    g.set(2, 0, 0, -(a(3) * &two) - a(8));
    g.set(2, 0, 1, -(a(5) + a(9)));
    g.set(2, 1, 2, -(a(2) * &two + a(7) + a(10)) * &half);
    g.set(2, 1, 1, a(8) - a(11) * &two);
    g
}

/// Coefficients over the null-form basis: cA[l] multiplies F^A_l (l=0..2),
/// cB[l] multiplies F^B_l (l=0..2), cC[l] multiplies F^C_{l+1} (l=0..1),
/// cD[l] multiplies F^D_{l+1} (l=0..2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub c_a: [BigRational; 3],
    pub c_b: [BigRational; 3],
    pub c_c: [BigRational; 2],
    pub c_d: [BigRational; 3],
}

impl Decomposition {
    pub fn zero() -> Self {
        Decomposition {
            c_a: std::array::from_fn(|_| BigRational::zero()),
            c_b: std::array::from_fn(|_| BigRational::zero()),
            c_c: std::array::from_fn(|_| BigRational::zero()),
            c_d: std::array::from_fn(|_| BigRational::zero()),
        }
    }

    /// Coefficients flattened in [`BASIS`] order.
    pub fn as_coefficients(&self) -> [BigRational; 11] {
        let mut v: Vec<BigRational> = Vec::with_capacity(11);
        v.extend(self.c_a.iter().cloned());
        v.extend(self.c_b.iter().cloned());
        v.extend(self.c_c.iter().cloned());
        v.extend(self.c_d.iter().cloned());
        v.try_into().unwrap()
    }

    pub fn from_coefficients(c: [BigRational; 11]) -> Self {
        let mut it = c.into_iter();
        let mut take = |n: usize| -> Vec<BigRational> { (0..n).map(|_| it.next().unwrap()).collect() };
        Decomposition {
            c_a: take(3).try_into().unwrap(),
            c_b: take(3).try_into().unwrap(),
            c_c: take(2).try_into().unwrap(),
            c_d: take(3).try_into().unwrap(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_coefficients().iter().all(Zero::is_zero)
    }

    /// True when only the A and B families appear (the strong-null span).
    pub fn is_strong(&self) -> bool {
        self.c_c.iter().all(Zero::is_zero) && self.c_d.iter().all(Zero::is_zero)
    }

    /// True when only the A family appears (the semilinear CLM class).
    pub fn is_clm_class(&self) -> bool {
        self.is_strong() && self.c_b.iter().all(Zero::is_zero)
    }

    /// Nonzero coefficients as (label, value) pairs; labels are `C1[l]` for
    /// cA, `C2[l]` for cB, `C3[l]` for cC (l = 1,2), `C4[l]` for cD (l =
    /// 1,2,3), matching the form subscripts.
    pub fn nonzero_terms(&self) -> Vec<(String, BigRational)> {
        let mut out = Vec::new();
        let groups: [(&str, &[BigRational], usize); 4] = [
            ("C1", &self.c_a, 0),
            ("C2", &self.c_b, 0),
            ("C3", &self.c_c, 1),
            ("C4", &self.c_d, 1),
        ];
        for (label, coeffs, base) in groups {
            for (l, c) in coeffs.iter().enumerate() {
                if !c.is_zero() {
                    out.push((format!("{}[{}]", label, l + base), c.clone()));
                }
            }
        }
        out
    }
}

impl fmt::Display for Decomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.nonzero_terms();
        if terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = terms.iter().map(|(l, c)| format!("{l}={c}")).collect();
        f.write_str(&parts.join(", "))
    }
}

/// The exact linear combination Σ cA[l]·F^A_l + cB[l]·F^B_l + cC[l]·F^C_{l+1}
/// + cD[l]·F^D_{l+1}; always a null tensor.
pub fn synthesize(d: &Decomposition) -> CoefficientTensor {
    let coeffs = d.as_coefficients();
    let mut g = CoefficientTensor::zero();
    for (form, c) in BASIS.iter().zip(coeffs.iter()) {
        if !c.is_zero() {
            g = g.add(&basis_tensor(*form).scale(c));
        }
    }
    g
}

/// Decompose a null tensor over the basis by exact Gaussian elimination.
///
/// The basis has rank 11 and spans the null subspace, so the solve succeeds
/// exactly when the tensor is null; the explicit null check up front turns
/// the failure into a [`AlgebraError::NotNull`] report instead.
pub fn classify(g: &CoefficientTensor) -> Result<Decomposition, AlgebraError> {
    if !g.check_null() {
        return Err(not_null_error(g));
    }
    let cols = basis_columns();
    let target = g.to_vector();
    let solution = solve_exact(cols, &target).ok_or(AlgebraError::SingularBasis)?;
    Ok(Decomposition::from_coefficients(solution))
}

fn not_null_error(g: &CoefficientTensor) -> AlgebraError {
    let parts: Vec<String> = g
        .full_symbol()
        .nonzero_coeffs()
        .iter()
        .map(|(label, c)| format!("{label}: {c}"))
        .collect();
    AlgebraError::NotNull(format!(
        "nonzero null-symbol coefficients: {}",
        parts.join(", ")
    ))
}

/// Vectorized basis tensors, built once. Independence (rank 11) is a tested
/// invariant, so classify's solve cannot hit a singular matrix.
fn basis_columns() -> &'static [[BigRational; 18]; 11] {
    static COLS: OnceLock<[[BigRational; 18]; 11]> = OnceLock::new();
    COLS.get_or_init(|| std::array::from_fn(|m| basis_tensor(BASIS[m]).to_vector()))
}

/// Solve Σ_m x_m col_m = target exactly. Returns None when the system is
/// inconsistent or the columns do not have full rank.
fn solve_exact(cols: &[[BigRational; 18]; 11], target: &[BigRational; 18]) -> Option<[BigRational; 11]> {
    const NROWS: usize = 18;
    const NCOLS: usize = 11;
    let mut m: Vec<Vec<BigRational>> = (0..NROWS)
        .map(|r| {
            let mut row: Vec<BigRational> = cols.iter().map(|c| c[r].clone()).collect();
            row.push(target[r].clone());
            row
        })
        .collect();
    let mut pivot_of_col = [usize::MAX; NCOLS];
    let mut next_row = 0;
    for col in 0..NCOLS {
        let Some(pr) = (next_row..NROWS).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(next_row, pr);
        let piv = m[next_row][col].clone();
        for x in m[next_row].iter_mut() {
            *x /= &piv;
        }
        for r in 0..NROWS {
            if r != next_row && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for c in col..=NCOLS {
                    let delta = &m[next_row][c] * &factor;
                    m[r][c] -= delta;
                }
            }
        }
        pivot_of_col[col] = next_row;
        next_row += 1;
    }
    if pivot_of_col.iter().any(|&p| p == usize::MAX) {
        return None;
    }
    // Rows beyond the pivots must have zero residual, else no solution.
    if (next_row..NROWS).any(|r| !m[r][NCOLS].is_zero()) {
        return None;
    }
    Some(std::array::from_fn(|c| m[pivot_of_col[c]][NCOLS].clone()))
}

/// Tensor for a preset name: any form name from [`Form`], `CLM` for the
/// semilinear prototype ∂_t(|∂_t u|² − |∇u|²), or `ZERO` for the linear
/// wave equation.
pub fn preset_tensor(name: &str) -> Result<CoefficientTensor, AlgebraError> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_uppercase())
        .collect();
    match key.as_str() {
        "CLM" => Ok(clm_prototype().to_coefficient_tensor()),
        "ZERO" => Ok(CoefficientTensor::zero()),
        _ => Form::from_str(name).map(basis_tensor),
    }
}

/// All preset names accepted by [`preset_tensor`].
pub fn preset_names() -> Vec<&'static str> {
    let mut names: Vec<&'static str> = Form::all().iter().map(|f| f.name()).collect();
    names.push("CLM");
    names.push("ZERO");
    names
}

/// The semilinear nonlinearity ∂_t(|∂_t u|² − |∇u|²): A=(1,0,0),
/// N=diag(1,−1,−1). Its quasilinear expansion equals F^A_0.
pub fn clm_prototype() -> SemilinearTensor {
    let one = BigRational::from_integer(1.into());
    let mut s = SemilinearTensor::zero();
    s.a[0] = one.clone();
    s.n[0][0] = one.clone();
    s.n[1][1] = -one.clone();
    s.n[2][2] = -one;
    s
}

fn random_rational(rng: &mut impl Rng, max_abs: i64, max_den: i64) -> BigRational {
    let n = rng.random_range(-max_abs..=max_abs);
    let d = rng.random_range(1..=max_den);
    BigRational::new(n.into(), d.into())
}

/// A random tensor in the null subspace, built from random free parameters.
pub fn random_null_tensor(rng: &mut impl Rng) -> CoefficientTensor {
    let p = ParameterVector {
        a: std::array::from_fn(|_| random_rational(rng, 12, 7)),
    };
    synthesize_from_parameters(&p)
}

/// A random tensor in the strong-null subspace (span of the A and B forms).
pub fn random_strong_null_tensor(rng: &mut impl Rng) -> CoefficientTensor {
    let mut d = Decomposition::zero();
    for c in d.c_a.iter_mut().chain(d.c_b.iter_mut()) {
        *c = random_rational(rng, 12, 7);
    }
    synthesize(&d)
}

/// A random decomposition with all 11 coefficients drawn at random.
pub fn random_decomposition(rng: &mut impl Rng) -> Decomposition {
    Decomposition::from_coefficients(std::array::from_fn(|_| random_rational(rng, 12, 7)))
}

/// A random tensor with no structure (generically non-null).
pub fn random_tensor(rng: &mut impl Rng) -> CoefficientTensor {
    CoefficientTensor::from_vector(std::array::from_fn(|_| random_rational(rng, 12, 7)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn every_form_parses_from_its_name() {
        for form in Form::all() {
            assert_eq!(form.name().parse::<Form>().unwrap(), form);
            assert_eq!(form.name().to_lowercase().parse::<Form>().unwrap(), form);
        }
        assert!(matches!(
            "FX9".parse::<Form>(),
            Err(AlgebraError::UnknownForm(_))
        ));
    }

    #[test]
    fn basis_tensors_are_null() {
        for form in Form::all() {
            let g = basis_tensor(form);
            assert!(g.check_null(), "{form} must be null");
            assert!(g.check_null_relations(), "{form} relations");
        }
    }

    #[test]
    fn strong_null_split_across_families() {
        for form in [Form::Fa0, Form::Fa1, Form::Fa2, Form::Fb0, Form::Fb1, Form::Fb2] {
            assert!(basis_tensor(form).check_strong_null(), "{form} strong");
        }
        for form in [Form::Fc1, Form::Fc2, Form::Fd1, Form::Fd2, Form::Fd3] {
            let g = basis_tensor(form);
            assert!(g.check_null() && !g.check_strong_null(), "{form} not strong");
        }
    }

    #[test]
    fn g_form_aliases() {
        assert_eq!(basis_tensor(Form::Gc1), basis_tensor(Form::Fd1));
        assert_eq!(basis_tensor(Form::Gc2), basis_tensor(Form::Fc1));
        assert_eq!(basis_tensor(Form::Gd0), basis_tensor(Form::Fc2));
        assert_eq!(basis_tensor(Form::Gd2), basis_tensor(Form::Fd2));
        let minus_one = rat(-1, 1);
        assert_eq!(
            basis_tensor(Form::Gd1),
            basis_tensor(Form::Fd3).scale(&minus_one)
        );
    }

    #[test]
    fn basis_has_rank_eleven() {
        // Solving for the zero target must succeed with the zero solution
        // and full rank; any rank deficiency would return None.
        let zero_target: [BigRational; 18] = std::array::from_fn(|_| BigRational::zero());
        let sol = solve_exact(basis_columns(), &zero_target).expect("full rank");
        assert!(sol.iter().all(Zero::is_zero));
    }

    #[test]
    fn classify_basis_elements() {
        let d = classify(&basis_tensor(Form::Fa0)).unwrap();
        assert_eq!(d.c_a[0], rat(1, 1));
        let rest: Vec<_> = d.nonzero_terms();
        assert_eq!(rest.len(), 1);
        assert_eq!(d.to_string(), "C1[0]=1");
        assert!(d.is_strong());
        assert!(d.is_clm_class());
    }

    #[test]
    fn classify_gc0_matches_known_expansion() {
        let d = classify(&basis_tensor(Form::Gc0)).unwrap();
        assert_eq!(d.c_a[1], rat(1, 2));
        assert_eq!(d.c_b[1], rat(-1, 1));
        assert_eq!(d.c_d[1], rat(-1, 1));
        assert_eq!(d.to_string(), "C1[1]=1/2, C2[1]=-1, C4[2]=-1");
        assert!(!d.is_strong());
    }

    #[test]
    fn classify_rejects_non_null() {
        let mut g = CoefficientTensor::zero();
        g.set(0, 0, 0, rat(1, 1));
        match classify(&g) {
            Err(AlgebraError::NotNull(msg)) => assert!(msg.contains("const")),
            other => panic!("expected NotNull, got {other:?}"),
        }
    }

    #[test]
    fn classify_round_trips_random_decompositions() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let d = random_decomposition(&mut rng);
            let g = synthesize(&d);
            assert!(g.check_null());
            assert_eq!(classify(&g).unwrap(), d);
        }
    }

    #[test]
    fn parametrize_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let p = ParameterVector {
                a: std::array::from_fn(|_| rat(rng.random_range(-9..=9), rng.random_range(1..=5))),
            };
            let g = synthesize_from_parameters(&p);
            assert!(g.check_null());
            assert_eq!(parametrize(&g).unwrap(), p);
        }
    }

    #[test]
    fn parametrize_fa0() {
        let p = parametrize(&basis_tensor(Form::Fa0)).unwrap();
        assert_eq!(p.a[0], rat(2, 1));
        assert!(p.a[1..].iter().all(Zero::is_zero));
    }

    #[test]
    fn strong_null_decompositions_use_only_a_and_b() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let g = random_strong_null_tensor(&mut rng);
            assert!(g.check_strong_null());
            assert!(classify(&g).unwrap().is_strong());
        }
    }

    #[test]
    fn presets_cover_forms_clm_and_zero() {
        for name in preset_names() {
            let g = preset_tensor(name).unwrap();
            assert!(g.check_null(), "preset {name} must be null");
        }
        assert_eq!(
            preset_tensor("CLM").unwrap(),
            basis_tensor(Form::Fa0),
            "the CLM prototype expands to F^A_0"
        );
        assert!(preset_tensor("ZERO").unwrap().is_zero());
        assert!(preset_tensor("nope").is_err());
    }

    #[test]
    fn clm_prototype_satisfies_semilinear_null_condition() {
        assert!(clm_prototype().check_clm_null());
    }
}
