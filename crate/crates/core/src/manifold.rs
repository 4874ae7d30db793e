//! The manifold of `n`-variate normal distributions `N = Pos(n) × ℝⁿ` with
//! its Fisher metric, Levi-Civita connection and curvature, and the isometric
//! action of the affine group.
//!
//! Tangent vectors are pairs `(X, v)` of a symmetric matrix (covariance
//! direction) and a vector (mean direction). Connection and curvature are
//! evaluated as tensors on constant-coefficient fields in the `(Σ, μ)` chart.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, GeomError, Result};
use crate::spd::{sym_dim, SpdMatrix, SymMatrix};

/// A normal distribution `(Σ, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPoint {
    sigma: SpdMatrix,
    mu: DVector<f64>,
}

impl GaussianPoint {
    pub fn new(sigma: SpdMatrix, mu: DVector<f64>) -> Result<Self> {
        check_dim(sigma.dim(), mu.len())?;
        if mu.iter().any(|x| !x.is_finite()) {
            return Err(GeomError::Domain("mean has non-finite entries".into()));
        }
        Ok(Self { sigma, mu })
    }

    /// Builds a point from a row-major covariance and a mean.
    pub fn from_slices(sigma_rows: &[f64], mu: &[f64]) -> Result<Self> {
        let n = mu.len();
        Self::new(
            SpdMatrix::from_row_slice(n, sigma_rows)?,
            DVector::from_column_slice(mu),
        )
    }

    /// The standard normal `(I, 0)`.
    pub fn standard(n: usize) -> Self {
        Self {
            sigma: SpdMatrix::identity(n),
            mu: DVector::zeros(n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sigma(&self) -> &SpdMatrix {
        &self.sigma
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        self.sigma.inverse()
    }

    /// Chart coordinates: upper triangle of `Σ` followed by `μ`.
    pub fn coords(&self) -> DVector<f64> {
        let mut c = self.sigma.as_sym().coords();
        c.extend(self.mu.iter());
        DVector::from_vec(c)
    }

    pub fn from_coords(n: usize, coords: &[f64]) -> Result<Self> {
        check_dim(tangent_dim(n), coords.len())?;
        let (s, m) = coords.split_at(sym_dim(n));
        Self::new(
            SpdMatrix::new(SymMatrix::from_coords(n, s)?)?,
            DVector::from_column_slice(m),
        )
    }

    /// The chart-linear displacement `(Σ + hX, μ + hv)`.
    pub fn offset(&self, t: &TangentVector, h: f64) -> Result<Self> {
        check_dim(self.dim(), t.dim())?;
        let sigma = SymMatrix::symmetrize(self.sigma.as_matrix() + t.x.as_matrix() * h);
        Self::new(SpdMatrix::new(sigma)?, &self.mu + &t.v * h)
    }
}

/// Dimension `n(n+1)/2 + n` of the manifold.
pub fn tangent_dim(n: usize) -> usize {
    sym_dim(n) + n
}

/// A tangent vector `(X, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    x: SymMatrix,
    v: DVector<f64>,
}

impl TangentVector {
    pub fn new(x: SymMatrix, v: DVector<f64>) -> Result<Self> {
        check_dim(x.dim(), v.len())?;
        Ok(Self { x, v })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            x: SymMatrix::zeros(n),
            v: DVector::zeros(n),
        }
    }

    /// A pure covariance direction `(X, 0)`.
    pub fn sigma_dir(x: SymMatrix) -> Self {
        let n = x.dim();
        Self {
            x,
            v: DVector::zeros(n),
        }
    }

    /// A pure mean direction `(0, v)`.
    pub fn mean_dir(v: DVector<f64>) -> Self {
        Self {
            x: SymMatrix::zeros(v.len()),
            v,
        }
    }

    pub fn from_slices(x_rows: &[f64], v: &[f64]) -> Result<Self> {
        Self::new(
            SymMatrix::from_row_slice(v.len(), x_rows)?,
            DVector::from_column_slice(v),
        )
    }

    pub(crate) fn from_parts_unchecked(x: DMatrix<f64>, v: DVector<f64>) -> Self {
        Self {
            x: SymMatrix::symmetrize(x),
            v,
        }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn x(&self) -> &SymMatrix {
        &self.x
    }

    pub fn v(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn coords(&self) -> DVector<f64> {
        let mut c = self.x.coords();
        c.extend(self.v.iter());
        DVector::from_vec(c)
    }

    pub fn from_coords(n: usize, coords: &[f64]) -> Result<Self> {
        check_dim(tangent_dim(n), coords.len())?;
        let (s, m) = coords.split_at(sym_dim(n));
        Self::new(SymMatrix::from_coords(n, s)?, DVector::from_column_slice(m))
    }

    /// Coordinate basis: `S_ij` directions first, then `e_k`.
    pub fn basis(n: usize) -> Vec<Self> {
        (0..tangent_dim(n))
            .map(|k| {
                let mut c = vec![0.0; tangent_dim(n)];
                c[k] = 1.0;
                Self::from_coords(n, &c).expect("basis coordinates")
            })
            .collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            x: self.x.scale(s),
            v: &self.v * s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            x: &self.x + &other.x,
            v: &self.v + &other.v,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            x: &self.x - &other.x,
            v: &self.v - &other.v,
        }
    }

    /// Max-norm of the coordinates.
    pub fn max_abs(&self) -> f64 {
        self.x
            .as_matrix()
            .iter()
            .chain(self.v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// An element `(A, b)` of the affine group acting by
/// `(Σ, μ) ↦ (AΣAᵀ, Aμ + b)`.
///
/// Any invertible `A` is accepted: the whole affine group acts by Fisher
/// isometries. Embedding into `SL(n+1)` additionally needs `det A > 0`, see
/// [`AffineElement::is_orientation_preserving`].
#[derive(Debug, Clone, PartialEq)]
pub struct AffineElement {
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl AffineElement {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(GeomError::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        check_dim(a.nrows(), b.len())?;
        let det = a.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(GeomError::Domain(format!(
                "linear part is not invertible (det {det})"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            a: DMatrix::identity(n, n),
            b: DVector::zeros(n),
        }
    }

    pub fn translation(b: DVector<f64>) -> Self {
        let n = b.len();
        Self {
            a: DMatrix::identity(n, n),
            b,
        }
    }

    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        Self::new(a, DVector::zeros(n))
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn det(&self) -> f64 {
        self.a.determinant()
    }

    pub fn is_orientation_preserving(&self) -> bool {
        self.det() > 0.0
    }

    /// Group law `(A₁, b₁)(A₂, b₂) = (A₁A₂, b₁ + A₁b₂)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            a: &self.a * &other.a,
            b: &self.b + &self.a * &other.b,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        let a_inv = self
            .a
            .clone()
            .try_inverse()
            .ok_or_else(|| GeomError::SingularInput("affine linear part".into()))?;
        let b = -(&a_inv * &self.b);
        Ok(Self { a: a_inv, b })
    }

    /// The element `(A, μ)` with `A = chol(Σ)`, mapping `(I, 0)` to `p`.
    pub fn from_point(p: &GaussianPoint) -> Self {
        Self {
            a: p.sigma().chol_factor().clone(),
            b: p.mu().clone(),
        }
    }
}

fn check_pair(p: &GaussianPoint, t: &TangentVector) -> Result<()> {
    check_dim(p.dim(), t.dim())
}

/// Fisher metric `vᵀΣ⁻¹w + ½ tr(Σ⁻¹XΣ⁻¹Y)`.
pub fn fisher_inner(p: &GaussianPoint, t1: &TangentVector, t2: &TangentVector) -> Result<f64> {
    check_pair(p, t1)?;
    check_pair(p, t2)?;
    let si = p.sigma_inv();
    let mean_part = t1.v.dot(&(si * &t2.v));
    let a = si * t1.x.as_matrix();
    let b = si * t2.x.as_matrix();
    Ok(mean_part + 0.5 * (a * b).trace())
}

pub fn fisher_norm(p: &GaussianPoint, t: &TangentVector) -> Result<f64> {
    Ok(fisher_inner(p, t, t)?.max(0.0).sqrt())
}

/// The Levi-Civita bilinear form `Γ(t1, t2)` on constant-coefficient fields:
///
/// * Σ-part: `−½(XΣ⁻¹Y + YΣ⁻¹X) + ½(vwᵀ + wvᵀ)`
/// * μ-part: `−½(XΣ⁻¹w + YΣ⁻¹v)`
///
/// The covariant derivative of a curve's velocity is `c'' + Γ(c', c')`.
pub fn connection_coeff(
    p: &GaussianPoint,
    t1: &TangentVector,
    t2: &TangentVector,
) -> Result<TangentVector> {
    check_pair(p, t1)?;
    check_pair(p, t2)?;
    let si = p.sigma_inv();
    let (x, y) = (t1.x.as_matrix(), t2.x.as_matrix());
    let (v, w) = (&t1.v, &t2.v);
    // both orders are formed so the result is bitwise symmetric in (t1, t2)
    let xy = x * si * y + y * si * x;
    let vw = v * w.transpose();
    let sigma_part = (&xy + xy.transpose()) * -0.25 + (&vw + vw.transpose()) * 0.5;
    let mean_part = (x * (si * w) + y * (si * v)) * -0.5;
    Ok(TangentVector::from_parts_unchecked(sigma_part, mean_part))
}

// The four curvature blocks. `si` is Σ⁻¹.

fn r_vvvv(si: &DMatrix<f64>, v: [&DVector<f64>; 4]) -> f64 {
    let g = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(si * b));
    0.25 * (g(v[1], v[2]) * g(v[0], v[3]) - g(v[0], v[2]) * g(v[1], v[3]))
}

fn r_xxxx(si: &DMatrix<f64>, x: [&DMatrix<f64>; 4]) -> f64 {
    let m: Vec<DMatrix<f64>> = x.iter().map(|xi| *xi * si).collect();
    let t2134 = (&m[1] * &m[0] * &m[2] * &m[3]).trace();
    let t1234 = (&m[0] * &m[1] * &m[2] * &m[3]).trace();
    0.25 * (t2134 - t1234)
}

fn r_vvxx(
    si: &DMatrix<f64>,
    v1: &DVector<f64>,
    v2: &DVector<f64>,
    x1: &DMatrix<f64>,
    x2: &DMatrix<f64>,
) -> f64 {
    let a = si * v1;
    let b = si * v2;
    let ab = a.dot(&(x1 * si * x2 * &b));
    let ba = a.dot(&(x2 * si * x1 * &b));
    0.25 * (ab - ba)
}

fn r_vxvx(
    si: &DMatrix<f64>,
    v1: &DVector<f64>,
    x1: &DMatrix<f64>,
    v2: &DVector<f64>,
    x2: &DMatrix<f64>,
) -> f64 {
    0.25 * (si * v1).dot(&(x1 * si * x2 * (si * v2)))
}

/// The (0,4) curvature tensor `R(t1, t2, t3, t4)`.
///
/// Each argument is split into its covariance and mean parts and the block
/// formulas are summed multilinearly. Blocks with an odd number of mean
/// arguments vanish (the reflection `(−I, 2μ)` fixes the base point and
/// negates mean directions); the remaining mixed blocks follow from the two
/// antisymmetries and pair symmetry.
pub fn curvature(p: &GaussianPoint, t: [&TangentVector; 4]) -> Result<f64> {
    for ti in t {
        check_pair(p, ti)?;
    }
    let si = p.sigma_inv();
    let x: [&DMatrix<f64>; 4] = t.map(|ti| ti.x.as_matrix());
    let v: [&DVector<f64>; 4] = t.map(|ti| &ti.v);

    let mut r = r_vvvv(si, v) + r_xxxx(si, x);
    // mean arguments in slots {1,2} and {3,4}
    r += r_vvxx(si, v[0], v[1], x[2], x[3]);
    r += r_vvxx(si, v[2], v[3], x[0], x[1]);
    // slots {1,3} and {2,4}
    r += r_vxvx(si, v[0], x[1], v[2], x[3]);
    r += r_vxvx(si, v[1], x[0], v[3], x[2]);
    // slots {1,4} and {2,3}
    r -= r_vxvx(si, v[0], x[1], v[3], x[2]);
    r -= r_vxvx(si, v[1], x[0], v[2], x[3]);
    Ok(r)
}

/// `(A, b)·(Σ, μ) = (AΣAᵀ, Aμ + b)`.
pub fn affine_act(g: &AffineElement, p: &GaussianPoint) -> Result<GaussianPoint> {
    check_dim(g.dim(), p.dim())?;
    let sigma = SymMatrix::symmetrize(&g.a * p.sigma().as_matrix() * g.a.transpose());
    GaussianPoint::new(SpdMatrix::new(sigma)?, &g.a * p.mu() + &g.b)
}

/// Differential of the affine action: `(X, v) ↦ (AXAᵀ, Av)`.
pub fn affine_act_tangent(g: &AffineElement, t: &TangentVector) -> Result<TangentVector> {
    check_dim(g.dim(), t.dim())?;
    Ok(TangentVector::from_parts_unchecked(
        &g.a * t.x.as_matrix() * g.a.transpose(),
        &g.a * &t.v,
    ))
}

/// Second fundamental form of a mean fiber `N(Σ₀, ·)`:
/// `B(e_i, e_j) = ½(E_ij + E_ji)` (zero-based indices).
pub fn fiber_second_fundamental_form(i: usize, j: usize, n: usize) -> Result<SymMatrix> {
    if i >= n || j >= n {
        return Err(GeomError::Domain(format!(
            "index ({i}, {j}) out of range for n = {n}"
        )));
    }
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] += 0.5;
    m[(j, i)] += 0.5;
    Ok(SymMatrix::symmetrize(m))
}
