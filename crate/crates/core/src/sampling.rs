//! Seeded random inputs for the verification suite, the comparison study and
//! tests.
//!
//! Covariances are `Q D Qᵀ` with `Q` the orthogonal factor of a Gaussian
//! matrix and `D` log-uniform in `[0.2, 5]`; means are standard Gaussian.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::manifold::{AffineElement, GaussianPoint, TangentVector};
use crate::spd::{SpdMatrix, SymMatrix};

pub const EIG_MIN: f64 = 0.2;
pub const EIG_MAX: f64 = 5.0;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn gaussian_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.normal())
    }

    pub fn gaussian_matrix(&mut self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| self.normal())
    }

    pub fn orthogonal(&mut self, n: usize) -> DMatrix<f64> {
        let qr = self.gaussian_matrix(n).qr();
        let (q, r) = (qr.q(), qr.r());
        // Fix column signs so the distribution is Haar.
        let mut q = q;
        for k in 0..n {
            if r[(k, k)] < 0.0 {
                q.column_mut(k).neg_mut();
            }
        }
        q
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }

    pub fn spd(&mut self, n: usize) -> SpdMatrix {
        let q = self.orthogonal(n);
        let d = DVector::from_fn(n, |_, _| self.log_uniform(EIG_MIN, EIG_MAX));
        let m = &q * DMatrix::from_diagonal(&d) * q.transpose();
        SpdMatrix::new(SymMatrix::symmetrize(m)).expect("well-conditioned sample")
    }

    pub fn point(&mut self, n: usize) -> GaussianPoint {
        let sigma = self.spd(n);
        let mu = self.gaussian_vector(n);
        GaussianPoint::new(sigma, mu).expect("matching dimensions")
    }

    pub fn sym(&mut self, n: usize) -> SymMatrix {
        SymMatrix::symmetrize(self.gaussian_matrix(n))
    }

    pub fn tangent(&mut self, n: usize) -> TangentVector {
        let x = self.sym(n);
        let v = self.gaussian_vector(n);
        TangentVector::new(x, v).expect("matching dimensions")
    }

    /// A random element with `det A > 0`, conditioning bounded by the same
    /// eigenvalue range as the covariance samples.
    pub fn affine(&mut self, n: usize) -> AffineElement {
        let q1 = self.orthogonal(n);
        let mut q2 = self.orthogonal(n);
        let s = DVector::from_fn(n, |_, _| self.log_uniform(EIG_MIN, EIG_MAX).sqrt());
        if (q1.determinant() * q2.determinant()) < 0.0 {
            q2.column_mut(0).neg_mut();
        }
        let a = q1 * DMatrix::from_diagonal(&s) * q2.transpose();
        let b = self.gaussian_vector(n);
        AffineElement::new(a, b).expect("invertible by construction")
    }
}
