//! Symmetric and positive definite matrix values.
//!
//! Every other module works with [`SymMatrix`] and [`SpdMatrix`] rather than
//! raw `DMatrix<f64>`: construction is where symmetry and definiteness are
//! checked, so downstream code can rely on them. Spectral functions (square
//! root, exponential, logarithm) go through the symmetric eigendecomposition.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, GeomError, Result};

/// Relative asymmetry `‖M − Mᵀ‖ / ‖M‖` above which input is rejected.
pub const ASYMMETRY_TOL: f64 = 1e-9;

/// Squared Cholesky pivots below this fraction of their diagonal entry are
/// treated as a failed factorization.
pub const PIVOT_FLOOR: f64 = 1e-13;

/// Spectral functions refuse matrices whose eigenvalue ratio falls below this.
pub const SPECTRAL_FLOOR: f64 = 1e-13;

/// A real symmetric matrix. The stored entries equal their transpose exactly.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Symmetrizes `m` as `(m + mᵀ)/2`, rejecting inputs whose relative
    /// asymmetry exceeds [`ASYMMETRY_TOL`].
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(GeomError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(GeomError::Domain("empty matrix".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::Domain("matrix has non-finite entries".into()));
        }
        let norm = m.norm();
        if norm > 0.0 {
            let asym = (&m - m.transpose()).norm() / norm;
            if asym > ASYMMETRY_TOL {
                return Err(GeomError::Asymmetric(asym));
            }
        }
        Ok(Self::symmetrize(m))
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        check_dim(n * n, entries.len())?;
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Unconditional symmetrization, for results of arithmetic that is
    /// symmetric up to round-off.
    pub(crate) fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self((m + t) * 0.5)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    /// Coordinates with respect to [`sym_basis`], in the same order.
    ///
    /// Since `S_ij = E_ij + E_ji` for `i < j`, the coordinates are the upper
    /// triangular entries read row by row.
    pub fn coords(&self) -> Vec<f64> {
        sym_basis_indices(self.dim())
            .into_iter()
            .map(|ix| self.0[(ix.i, ix.j)])
            .collect()
    }

    /// Inverse of [`SymMatrix::coords`].
    pub fn from_coords(n: usize, coords: &[f64]) -> Result<Self> {
        check_dim(sym_dim(n), coords.len())?;
        let mut m = DMatrix::zeros(n, n);
        for (ix, &c) in sym_basis_indices(n).iter().zip(coords) {
            m[(ix.i, ix.j)] = c;
            m[(ix.j, ix.i)] = c;
        }
        Ok(Self(m))
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix{}", self.0)
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 - &rhs.0)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        SymMatrix(-&self.0)
    }
}

/// A symmetric positive definite matrix with its Cholesky factor and inverse.
#[derive(Clone)]
pub struct SpdMatrix {
    sym: SymMatrix,
    chol: DMatrix<f64>,
    inv: DMatrix<f64>,
}

impl SpdMatrix {
    /// Validates definiteness by Cholesky factorization. Each squared pivot
    /// must exceed [`PIVOT_FLOOR`] times its diagonal entry, which rejects
    /// near-singular matrices but accepts badly scaled well-conditioned
    /// ones such as `diag(1, 1e-40)`.
    pub fn new(sym: SymMatrix) -> Result<Self> {
        let n = sym.dim();
        let max_diag = (0..n)
            .map(|i| sym.0[(i, i)])
            .fold(f64::NEG_INFINITY, f64::max);
        if max_diag.is_nan() || max_diag <= 0.0 {
            return Err(GeomError::SingularInput(
                "largest diagonal entry is not positive".into(),
            ));
        }
        let chol = Cholesky::new(sym.0.clone())
            .ok_or_else(|| GeomError::SingularInput("Cholesky factorization failed".into()))?;
        let l = chol.l();
        for k in 0..n {
            let pivot = l[(k, k)] * l[(k, k)];
            if pivot.is_nan() || pivot <= PIVOT_FLOOR * sym.0[(k, k)] {
                return Err(GeomError::SingularInput(format!(
                    "Cholesky pivot {k} is {pivot:.3e}, below floor"
                )));
            }
        }
        let inv = SymMatrix::symmetrize(chol.inverse()).into_matrix();
        Ok(Self { sym, chol: l, inv })
    }

    /// Like [`SpdMatrix::new`], additionally requiring the eigenvalue ratio
    /// `λ_min / λ_max` to exceed `margin`.
    pub fn with_margin(sym: SymMatrix, margin: f64) -> Result<Self> {
        let spd = Self::new(sym)?;
        let (vals, _) = spd.eigen();
        let (lo, hi) = (vals[0], vals[vals.len() - 1]);
        if lo <= margin * hi {
            return Err(GeomError::SingularInput(format!(
                "eigenvalue ratio {:.3e} within {margin:.0e} of the boundary",
                lo / hi
            )));
        }
        Ok(spd)
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMatrix::new(m)?)
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        Self::new(SymMatrix::from_row_slice(n, entries)?)
    }

    pub fn identity(n: usize) -> Self {
        Self::new(SymMatrix::identity(n)).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.sym.dim()
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.sym
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.sym.0
    }

    /// Lower triangular `L` with `L Lᵀ` equal to the matrix.
    pub fn chol_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    pub fn det(&self) -> f64 {
        self.log_det().exp()
    }

    /// Eigenvalues in ascending order and the matching orthonormal eigenvectors
    /// as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        sorted_eigen(self.sym.0.clone())
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpdMatrix{}", self.sym.0)
    }
}

impl PartialEq for SpdMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.sym == other.sym
    }
}

fn sorted_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

fn spectral_map(vecs: &DMatrix<f64>, vals: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&DVector::from_iterator(vecs.ncols(), vals));
    vecs * d * vecs.transpose()
}

fn checked_spectrum(p: &SpdMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (vals, vecs) = p.eigen();
    let (lo, hi) = (vals[0], vals[vals.len() - 1]);
    if lo <= SPECTRAL_FLOOR * hi {
        return Err(GeomError::SingularInput(format!(
            "smallest eigenvalue {lo:.3e} is negligible against {hi:.3e}"
        )));
    }
    Ok((vals, vecs))
}

/// Symmetric square root: the unique SPD `A` with `A·A = P`.
pub fn spd_sqrt(p: &SpdMatrix) -> Result<SpdMatrix> {
    let (vals, vecs) = checked_spectrum(p)?;
    SpdMatrix::from_matrix(spectral_map(&vecs, vals.into_iter().map(f64::sqrt)))
}

/// Inverse of the symmetric square root.
pub fn spd_inv_sqrt(p: &SpdMatrix) -> Result<SpdMatrix> {
    let (vals, vecs) = checked_spectrum(p)?;
    SpdMatrix::from_matrix(spectral_map(
        &vecs,
        vals.into_iter().map(|l| 1.0 / l.sqrt()),
    ))
}

/// Principal matrix logarithm of an SPD matrix.
pub fn sym_log(p: &SpdMatrix) -> Result<SymMatrix> {
    let (vals, vecs) = checked_spectrum(p)?;
    Ok(SymMatrix::symmetrize(spectral_map(
        &vecs,
        vals.into_iter().map(f64::ln),
    )))
}

/// Matrix exponential of a symmetric matrix.
pub fn sym_exp(s: &SymMatrix) -> Result<SpdMatrix> {
    let (vals, vecs) = sorted_eigen(s.0.clone());
    SpdMatrix::from_matrix(spectral_map(&vecs, vals.into_iter().map(f64::exp)))
}

/// Generalized eigenvalues of the pencil `(A, B)`, i.e. the eigenvalues of
/// `L⁻¹ A L⁻ᵀ` with `B = L Lᵀ`, sorted ascending.
pub fn gen_eigvals(a: &SpdMatrix, b: &SpdMatrix) -> Result<Vec<f64>> {
    check_dim(b.dim(), a.dim())?;
    let l = b.chol_factor();
    let y = l
        .solve_lower_triangular(a.as_matrix())
        .ok_or_else(|| GeomError::SingularInput("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| GeomError::SingularInput("triangular solve failed".into()))?;
    let (vals, _) = sorted_eigen(SymMatrix::symmetrize(c).into_matrix());
    Ok(vals)
}

/// An index pair `(i, j)` with `i <= j` enumerating coordinates of symmetric
/// matrices. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymBasisIndex {
    pub i: usize,
    pub j: usize,
}

/// Dimension `n(n+1)/2` of the space of symmetric `n×n` matrices.
pub fn sym_dim(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Index pairs `i <= j` in lexicographic order.
pub fn sym_basis_indices(n: usize) -> Vec<SymBasisIndex> {
    (0..n)
        .flat_map(|i| (i..n).map(move |j| SymBasisIndex { i, j }))
        .collect()
}

/// The symmetrized elementary matrix `S_ij = ((2 − δ_ij)/2)(E_ij + E_ji)`.
pub fn sym_basis_element(n: usize, ix: SymBasisIndex) -> SymMatrix {
    let mut m = DMatrix::zeros(n, n);
    m[(ix.i, ix.j)] = 1.0;
    m[(ix.j, ix.i)] = 1.0;
    SymMatrix(m)
}

/// Basis `S_ij`, `(i, j)` running over [`sym_basis_indices`].
pub fn sym_basis(n: usize) -> Vec<SymMatrix> {
    sym_basis_indices(n)
        .into_iter()
        .map(|ix| sym_basis_element(n, ix))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    fn spd_from_seed(n: usize, entries: &[f64], shift: f64) -> SpdMatrix {
        let g = DMatrix::from_row_slice(n, n, &entries[..n * n]);
        let m = &g * g.transpose() + DMatrix::identity(n, n) * shift;
        SpdMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn sym_basis_small_cases() {
        assert_eq!(sym_basis(1), vec![SymMatrix::identity(1)]);
        let b = sym_basis(2);
        assert_eq!(b.len(), 3);
        assert_eq!(
            b[0].as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
        );
        // (2 - δ_12)/2 = 1, so the off-diagonal element carries both unit entries.
        assert_eq!(
            b[1].as_matrix(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
        );
        assert_eq!(sym_basis(4).len(), 10);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(SymMatrix::new(m), Err(GeomError::Asymmetric(_))));
        let tiny = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5 + 1e-12, 1.0]);
        let s = SymMatrix::new(tiny).unwrap();
        assert_eq!(s.as_matrix()[(0, 1)], s.as_matrix()[(1, 0)]);
    }

    #[test]
    fn indefinite_and_near_singular_are_rejected() {
        let m = SymMatrix::from_row_slice(2, &[1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            SpdMatrix::new(m),
            Err(GeomError::SingularInput(_))
        ));
        let m = SymMatrix::from_row_slice(2, &[1.0, 1.0 - 1e-15, 1.0 - 1e-15, 1.0]).unwrap();
        assert!(SpdMatrix::new(m).is_err());
        let m = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(SpdMatrix::new(m).is_err());
        // diagonal scaling does not matter
        assert!(SpdMatrix::new(SymMatrix::from_diagonal(&[1.0, 1e-40])).is_ok());
        let m = SymMatrix::from_diagonal(&[1.0, 1e-11]);
        assert!(SpdMatrix::new(m.clone()).is_ok());
        assert!(SpdMatrix::with_margin(m, 1e-10).is_err());
    }

    #[test]
    fn sqrt_exp_log_fixed_values() {
        let i2 = SpdMatrix::identity(2);
        assert_eq!(spd_sqrt(&i2).unwrap().as_matrix(), i2.as_matrix());
        let d = SpdMatrix::new(SymMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        let r = spd_sqrt(&d).unwrap();
        assert_relative_eq!(r.as_matrix()[(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(r.as_matrix()[(1, 1)], 3.0, epsilon = 1e-14);
        assert!(sym_log(&i2).unwrap().as_matrix().norm() < 1e-15);
        let e = sym_exp(&SymMatrix::from_diagonal(&[1.0, -1.0])).unwrap();
        assert_relative_eq!(e.as_matrix()[(0, 0)], std::f64::consts::E, epsilon = 1e-14);
        assert_relative_eq!(
            e.as_matrix()[(1, 1)],
            1.0 / std::f64::consts::E,
            epsilon = 1e-14
        );
    }

    #[test]
    fn gen_eigvals_fixed_values() {
        let a = spd_from_seed(3, &[1.0, 0.2, 0.0, 0.3, 1.0, 0.1, 0.0, 0.4, 1.0], 0.5);
        let v = gen_eigvals(&a, &a).unwrap();
        for x in v {
            assert_relative_eq!(x, 1.0, epsilon = 1e-12);
        }
        let a = SpdMatrix::new(SymMatrix::from_diagonal(&[4.0, 1.0])).unwrap();
        let v = gen_eigvals(&a, &SpdMatrix::identity(2)).unwrap();
        assert_relative_eq!(v[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(v[1], 4.0, epsilon = 1e-14);
    }

    /// Roots of `det(A − λB)` for 2×2 pencils by sign scanning and bisection.
    fn pencil_roots_bruteforce(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
        let f = |l: f64| (a - b * l).determinant();
        let grid: Vec<f64> = (0..=4000)
            .map(|k| 10f64.powf(-6.0 + 12.0 * k as f64 / 4000.0))
            .collect();
        let mut roots = Vec::new();
        for w in grid.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            if f(lo).signum() == f(hi).signum() {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f(mid).signum() == f(lo).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        roots
    }

    #[test]
    fn gen_eigvals_matches_characteristic_polynomial_oracle() {
        let cases = [
            ([1.0, 0.3, -0.2, 0.8], 0.4, [0.5, -0.1, 0.7, 1.2], 0.3),
            ([2.0, 1.0, 0.0, 0.5], 0.1, [0.3, 0.2, -0.4, 0.9], 1.0),
            ([0.1, 0.0, 0.9, 1.5], 2.0, [1.1, 0.6, 0.6, 0.4], 0.05),
        ];
        for (ga, sa, gb, sb) in cases {
            let a = spd_from_seed(2, &ga, sa);
            let b = spd_from_seed(2, &gb, sb);
            let got = gen_eigvals(&a, &b).unwrap();
            let want = pencil_roots_bruteforce(a.as_matrix(), b.as_matrix());
            assert_eq!(want.len(), 2, "oracle must bracket both roots");
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-9 * w.max(1.0), "{g} vs {w}");
            }
        }
    }

    #[test]
    fn coords_reconstruct_exactly() {
        let s = SymMatrix::from_row_slice(3, &[1.5, -2.0, 0.25, -2.0, 3.0, 7.0, 0.25, 7.0, -1.0])
            .unwrap();
        let basis = sym_basis(3);
        let mut acc = SymMatrix::zeros(3);
        for (c, b) in s.coords().iter().zip(&basis) {
            acc = &acc + &b.scale(*c);
        }
        assert_eq!(acc, s);
        assert_eq!(SymMatrix::from_coords(3, &s.coords()).unwrap(), s);
    }

    fn spd_strategy() -> impl Strategy<Value = SpdMatrix> {
        (1usize..=5)
            .prop_flat_map(|n| {
                (
                    Just(n),
                    prop::collection::vec(-2.0..2.0f64, n * n),
                    0.05..2.0f64,
                )
            })
            .prop_map(|(n, g, s)| spd_from_seed(n, &g, s))
    }

    proptest! {
        #[test]
        fn sqrt_and_exp_log_roundtrip(p in spd_strategy()) {
            let r = spd_sqrt(&p).unwrap();
            prop_assert!(rel_err(&(r.as_matrix() * r.as_matrix()), p.as_matrix()) <= 1e-11);
            let back = sym_exp(&sym_log(&p).unwrap()).unwrap();
            prop_assert!(rel_err(back.as_matrix(), p.as_matrix()) <= 1e-11);
            let chol = p.chol_factor();
            prop_assert!(rel_err(&(chol * chol.transpose()), p.as_matrix()) <= 1e-12);
        }

        #[test]
        fn gen_eigvals_congruence_invariant(
            a in spd_strategy(),
            g in prop::collection::vec(-2.0..2.0f64, 25),
            h in prop::collection::vec(-2.0..2.0f64, 25),
        ) {
            let n = a.dim();
            let b = spd_from_seed(n, &h, 0.3);
            let c = DMatrix::from_row_slice(n, n, &g[..n * n]) + DMatrix::identity(n, n) * 3.0;
            prop_assume!(c.determinant().abs() > 1e-2);
            let ca = SpdMatrix::from_matrix(&c * a.as_matrix() * c.transpose()).unwrap();
            let cb = SpdMatrix::from_matrix(&c * b.as_matrix() * c.transpose()).unwrap();
            let before = gen_eigvals(&a, &b).unwrap();
            let after = gen_eigvals(&ca, &cb).unwrap();
            for (x, y) in before.iter().zip(&after) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
                prop_assert!(*x > 0.0);
            }
        }
    }
}
