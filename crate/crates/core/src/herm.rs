//! Type-safe Hermitian matrices with spectral calculus.
//!
//! A [`HermitianMat`] is Hermitian by construction: every constructor
//! symmetrizes `A <- (A + A†)/2`, so floating-point noise from products
//! cannot poison downstream pipelines. The trace and the pairing
//! [`HermitianMat::inner`] are manifestly real. General matrix multiplication
//! is deliberately not part of the surface; conjugation `M† H M` is, since it
//! preserves Hermiticity (and positivity).
//!
//! Scalar functions of a matrix go through the eigendecomposition,
//! `f(A) = U f(Λ) U†`. Conventions for functions with a singularity at zero
//! (`log 0 := 0`, `0^p := 0`) fire on eigenvalues within an absolute
//! tolerance of zero, so rank-deficient states behave like their exact
//! counterparts.

use crate::error::{Error, Result};
use crate::lapack;
use ndarray::Array2;
use num_complex::Complex64;
use serde::de;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Asymmetry tolerated by the strict constructor and the JSON decoder.
pub const HERMITIZE_TOL: f64 = 1e-12;
/// Absolute half-width of the "numerically zero" eigenvalue band used by the
/// log/power conventions.
pub const ZERO_EIG_TOL: f64 = 1e-10;
/// Largest supported matrix dimension.
pub const DIM_CAP: usize = 4096;

/// A `d x d` complex Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMat {
    data: Array2<Complex64>,
}

impl HermitianMat {
    /// Build from an arbitrary square complex array, symmetrizing it.
    pub fn from_array(a: Array2<Complex64>) -> Result<Self> {
        let (r, c) = (a.nrows(), a.ncols());
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        let mut m = a;
        hermitize(&mut m);
        Ok(HermitianMat { data: m })
    }

    /// Strict variant: rejects input whose asymmetry `max|A - A†|` exceeds
    /// `tol`, then symmetrizes the residual. Intended for test inputs and
    /// decoded files.
    pub fn strict(a: Array2<Complex64>, tol: f64) -> Result<Self> {
        let (r, c) = (a.nrows(), a.ncols());
        if r != c {
            return Err(Error::NotSquare { rows: r, cols: c });
        }
        let mut asym = 0.0f64;
        for i in 0..r {
            for j in 0..=i {
                let d = (a[(i, j)] - a[(j, i)].conj()).norm();
                asym = asym.max(d);
            }
        }
        if asym > tol {
            return Err(Error::NotHermitian { asymmetry: asym, tol });
        }
        Self::from_array(a)
    }

    /// Internal: wrap data already known Hermitian (e.g. `U f(Λ) U†` output).
    pub(crate) fn from_hermitian_parts(mut a: Array2<Complex64>) -> Self {
        hermitize(&mut a);
        HermitianMat { data: a }
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMat {
            data: Array2::zeros((dim, dim)),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMat {
            data: Array2::eye(dim),
        }
    }

    /// Diagonal matrix from real entries.
    pub fn diag(entries: &[f64]) -> Self {
        let d = entries.len();
        let mut m = Array2::zeros((d, d));
        for (i, &x) in entries.iter().enumerate() {
            m[(i, i)] = Complex64::new(x, 0.0);
        }
        HermitianMat { data: m }
    }

    /// A GUE-style random Hermitian matrix, deterministic in the seed.
    pub fn random(dim: usize, seed: u64) -> Self {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut g = Array2::zeros((dim, dim));
        for i in 0..dim {
            for j in 0..dim {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                g[(i, j)] = Complex64::new(re, im);
            }
        }
        Self::from_array(g).expect("square by construction")
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// The raw complex array; escape hatch for callers that need products.
    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<Complex64> {
        self.data
    }

    /// Trace, real by Hermiticity.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> HermitianMat {
        HermitianMat {
            data: self.data.mapv(|z| z * s),
        }
    }

    /// `Re Tr[A B]`; a real inner product on Hermitian matrices.
    ///
    /// For Hermitian `A`, `B` this equals `Σ_ij Re(A_ij conj(B_ij))`, so no
    /// matrix product is formed. Nonnegative when both operands are PSD.
    pub fn inner(&self, other: &HermitianMat) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(other.data.iter()) {
            acc += a.re * b.re + a.im * b.im;
        }
        Ok(acc)
    }

    /// Conjugation `M† H M` for a complex `d x c` matrix `M` with `d = dim(H)`.
    /// Hermitian by construction; maps PSD to PSD.
    pub fn conj_by(&self, m: &Array2<Complex64>) -> Result<HermitianMat> {
        if m.nrows() != self.dim() {
            return Err(Error::ConjShapeMismatch {
                rows: m.nrows(),
                cols: m.ncols(),
                operand: self.dim(),
            });
        }
        let hm = self.data.dot(m);
        let mdag = conj_transpose(m);
        Ok(HermitianMat::from_hermitian_parts(mdag.dot(&hm)))
    }

    /// Eigenvalues ascending; no eigenvectors.
    pub fn eigvalsh(&self) -> Result<Vec<f64>> {
        lapack::eigvalsh(&self.data)
    }

    /// Full spectral decomposition.
    pub fn eigh(&self) -> Result<Spectrum> {
        let (values, vectors) = lapack::eigh(&self.data)?;
        Ok(Spectrum { values, vectors })
    }

    /// `U f(Λ) U†` for an arbitrary scalar map applied to raw eigenvalues.
    /// Conventions near zero are the caller's business; see `log_m`, `sqrt_m`,
    /// `pow_m` for the standard ones.
    pub fn matfun<F: Fn(f64) -> f64>(&self, f: F) -> Result<HermitianMat> {
        Ok(self.eigh()?.apply(f))
    }

    /// Matrix logarithm with `log 0 := 0` on the numerically-zero eigenvalue
    /// band. Errors on eigenvalues below `-ZERO_EIG_TOL`.
    pub fn log_m(&self) -> Result<HermitianMat> {
        let spec = self.eigh()?;
        check_psd_band(&spec.values)?;
        Ok(spec.apply(|x| if x <= ZERO_EIG_TOL { 0.0 } else { x.ln() }))
    }

    /// Matrix square root; eigenvalues in `[-ZERO_EIG_TOL, 0]` are clamped to
    /// zero, anything lower is a PSD violation.
    pub fn sqrt_m(&self) -> Result<HermitianMat> {
        let spec = self.eigh()?;
        check_psd_band(&spec.values)?;
        Ok(spec.apply(|x| if x <= 0.0 { 0.0 } else { x.sqrt() }))
    }

    /// Real matrix power with `0^p := 0` for `p != 0` on the numerically-zero
    /// band (for `p = 0` this yields the support projector).
    pub fn pow_m(&self, p: f64) -> Result<HermitianMat> {
        let spec = self.eigh()?;
        check_psd_band(&spec.values)?;
        Ok(spec.apply(move |x| {
            if x <= ZERO_EIG_TOL {
                0.0
            } else if p == 0.0 {
                1.0
            } else {
                x.powf(p)
            }
        }))
    }

    /// Loewner comparison: `A <= B` iff `λ_min(B - A) >= -tol`.
    pub fn loewner_le(&self, other: &HermitianMat, tol: f64) -> Result<bool> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        let diff = other - self;
        let evs = diff.eigvalsh()?;
        Ok(evs[0] >= -tol)
    }

    /// Trace norm: sum of absolute eigenvalues.
    pub fn trace_norm(&self) -> Result<f64> {
        Ok(self.eigvalsh()?.iter().map(|x| x.abs()).sum())
    }

    /// Kronecker product, row-major composite index `i = i1 * d2 + i2`.
    pub fn kron(&self, other: &HermitianMat) -> HermitianMat {
        let data = ndarray::linalg::kron(&self.data, &other.data);
        HermitianMat { data }
    }

    /// `Some(c)` if the matrix is `c * I` within Frobenius tolerance.
    pub fn as_scalar(&self, tol: f64) -> Option<f64> {
        let d = self.dim();
        let c = self.trace() / d as f64;
        let mut dev = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j {
                    Complex64::new(c, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                dev += (self.data[(i, j)] - target).norm_sqr();
            }
        }
        if dev.sqrt() <= tol * self.frob_norm().max(1.0) {
            Some(c)
        } else {
            None
        }
    }
}

fn check_psd_band(values: &[f64]) -> Result<()> {
    if let Some(&min) = values.first() {
        if min < -ZERO_EIG_TOL {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
            });
        }
    }
    Ok(())
}

fn hermitize(m: &mut Array2<Complex64>) {
    let d = m.nrows();
    for i in 0..d {
        for j in 0..i {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
}

pub(crate) fn conj_transpose(m: &Array2<Complex64>) -> Array2<Complex64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut out = Array2::zeros((c, r));
    for i in 0..r {
        for j in 0..c {
            out[(j, i)] = m[(i, j)].conj();
        }
    }
    out
}

impl std::ops::Add for &HermitianMat {
    type Output = HermitianMat;
    fn add(self, rhs: &HermitianMat) -> HermitianMat {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in +");
        HermitianMat {
            data: &self.data + &rhs.data,
        }
    }
}

impl std::ops::Sub for &HermitianMat {
    type Output = HermitianMat;
    fn sub(self, rhs: &HermitianMat) -> HermitianMat {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch in -");
        HermitianMat {
            data: &self.data - &rhs.data,
        }
    }
}

/// Spectral data of a Hermitian matrix: eigenvalues ascending, orthonormal
/// eigenvector columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Array2<Complex64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U f(Λ) U†`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> HermitianMat {
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.axis_iter_mut(ndarray::Axis(1)).enumerate() {
            let fv = f(self.values[k]);
            col.mapv_inplace(|z| z * fv);
        }
        let vdag = conj_transpose(&self.vectors);
        let mut out = scaled.dot(&vdag);
        hermitize(&mut out);
        HermitianMat { data: out }
    }

    /// Orthogonal projector onto the span of the selected eigenvectors.
    pub fn projector(&self, indices: &[usize]) -> HermitianMat {
        let d = self.dim();
        let mut p = Array2::zeros((d, d));
        for &k in indices {
            for i in 0..d {
                for j in 0..d {
                    p[(i, j)] += self.vectors[(i, k)] * self.vectors[(j, k)].conj();
                }
            }
        }
        HermitianMat::from_hermitian_parts(p)
    }

    /// Expectation `<u_k| M |u_k>` of a Hermitian matrix in eigenvector `k`.
    pub fn expectation(&self, k: usize, m: &HermitianMat) -> f64 {
        let d = self.dim();
        let a = m.as_array();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..d {
                row += a[(i, j)] * self.vectors[(j, k)];
            }
            acc += self.vectors[(i, k)].conj() * row;
        }
        acc.re
    }

    /// Check reconstruction and unitarity against the decomposed matrix.
    pub fn verify(&self, original: &HermitianMat) -> Result<()> {
        let rec = self.apply(|x| x);
        let err = (&rec - original).frob_norm();
        let bound = 1e-10 * original.frob_norm().max(1.0);
        if err > bound {
            return Err(Error::EigenFailed {
                code: 0,
                norm: err,
            });
        }
        let d = self.dim();
        let vdag = conj_transpose(&self.vectors);
        let gram = vdag.dot(&self.vectors);
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                if (gram[(i, j)] - Complex64::new(target, 0.0)).norm() > 1e-10 {
                    return Err(Error::EigenFailed {
                        code: 0,
                        norm: (gram[(i, j)] - Complex64::new(target, 0.0)).norm(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Wire format: `{"dim": d, "entries": [[re, im], ...]}`, row-major, length d².
#[derive(Serialize, Deserialize)]
pub(crate) struct MatrixJson {
    pub dim: usize,
    pub entries: Vec<(f64, f64)>,
}

impl MatrixJson {
    pub fn of(m: &HermitianMat) -> Self {
        MatrixJson {
            dim: m.dim(),
            entries: m.data.iter().map(|z| (z.re, z.im)).collect(),
        }
    }

    pub fn decode(self) -> Result<HermitianMat> {
        if self.entries.len() != self.dim * self.dim {
            return Err(Error::DimMismatch {
                left: self.entries.len(),
                right: self.dim * self.dim,
            });
        }
        if self.dim == 0 || self.dim > DIM_CAP {
            return Err(Error::DimensionCap {
                requested: self.dim,
                cap: DIM_CAP,
            });
        }
        let data = Array2::from_shape_vec(
            (self.dim, self.dim),
            self.entries
                .iter()
                .map(|&(re, im)| Complex64::new(re, im))
                .collect(),
        )
        .expect("length checked");
        HermitianMat::strict(data, HERMITIZE_TOL)
    }
}

impl Serialize for HermitianMat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::of(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        raw.decode().map_err(de::Error::custom)
    }
}
