//! Thin safe wrapper over LAPACK's Hermitian eigensolver (zheevd).
//!
//! The system BLAS/LAPACK is linked directly; matrices are handed over in
//! column-major order, which for a Hermitian matrix is the conjugate of the
//! row-major layout, so eigenvalues are unaffected and eigenvectors come back
//! conjugated and are fixed up by the caller-facing functions here.

use crate::error::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;

extern "C" {
    fn zheevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut Complex64,
        lda: *const i32,
        w: *mut f64,
        work: *mut Complex64,
        lwork: *const i32,
        rwork: *mut f64,
        lrwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
}

fn zheevd(jobz: u8, n: usize, a: &mut [Complex64], w: &mut [f64]) -> i32 {
    assert_eq!(a.len(), n * n);
    assert_eq!(w.len(), n);
    let ni = n as i32;
    let mut info = 0i32;
    // workspace query
    let mut wkq = [Complex64::new(0.0, 0.0)];
    let mut rwkq = [0.0f64];
    let mut iwkq = [0i32];
    let m1 = -1i32;
    unsafe {
        zheevd_(
            &jobz,
            b"L".as_ptr(),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            wkq.as_mut_ptr(),
            &m1,
            rwkq.as_mut_ptr(),
            &m1,
            iwkq.as_mut_ptr(),
            &m1,
            &mut info,
        );
    }
    if info != 0 {
        return info;
    }
    let lwork = (wkq[0].re as i32).max(1);
    let lrwork = (rwkq[0] as i32).max(1);
    let liwork = iwkq[0].max(1);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    let mut rwork = vec![0.0f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        zheevd_(
            &jobz,
            b"L".as_ptr(),
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    info
}

fn frob(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &Array2<Complex64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    // zheevd reads the lower triangle; passing the row-major buffer as
    // column-major hands it the conjugate matrix, same spectrum.
    let mut buf: Vec<Complex64> = a.iter().copied().collect();
    let mut w = vec![0.0f64; n];
    let info = zheevd(b'N', n, &mut buf, &mut w);
    if info != 0 {
        return Err(Error::EigenFailed {
            code: info,
            norm: frob(a),
        });
    }
    Ok(w)
}

/// Full eigendecomposition of a Hermitian matrix.
///
/// Returns (eigenvalues ascending, eigenvectors as columns of a row-major
/// array).
pub fn eigh(a: &Array2<Complex64>) -> Result<(Vec<f64>, Array2<Complex64>)> {
    let n = a.nrows();
    let mut buf: Vec<Complex64> = a.iter().copied().collect();
    let mut w = vec![0.0f64; n];
    let info = zheevd(b'V', n, &mut buf, &mut w);
    if info != 0 {
        return Err(Error::EigenFailed {
            code: info,
            norm: frob(a),
        });
    }
    // buf now holds eigenvectors of conj(A) as column-major columns, i.e.
    // conjugated eigenvectors of A as row-major rows. Transposing the raw
    // buffer and conjugating yields eigenvector columns of A.
    let mut vecs = Array2::zeros((n, n));
    for j in 0..n {
        for i in 0..n {
            vecs[(i, j)] = buf[j * n + i].conj();
        }
    }
    Ok((w, vecs))
}
