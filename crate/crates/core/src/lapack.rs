//! Thin bindings to the system LAPACK dense eigensolvers.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

extern "C" {
    fn dsyevd_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );

    fn zheev_(
        jobz: *const u8,
        uplo: *const u8,
        n: *const i32,
        a: *mut C64,
        lda: *const i32,
        w: *mut f64,
        work: *mut C64,
        lwork: *const i32,
        rwork: *mut f64,
        info: *mut i32,
    );
}

/// Full eigendecomposition of a real symmetric matrix.
///
/// `a` is the dense `n x n` matrix; on return it holds the eigenvectors,
/// one per column in column-major layout (`a[i + j*n]` is row `i` of
/// eigenvector `j`). Eigenvalues come back ascending.
pub fn eigh_symmetric(a: &mut [f64], n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "matrix buffer has {} entries, expected {}",
            a.len(),
            n * n
        )));
    }
    let ni = i32::try_from(n)
        .map_err(|_| Error::InvalidParameter("matrix too large for LAPACK".into()))?;
    let mut w = vec![0.0f64; n];
    let mut info = 0i32;
    let (jobz, uplo) = (b'V', b'L');

    // Workspace query.
    let mut work_query = [0.0f64; 1];
    let mut iwork_query = [0i32; 1];
    let minus_one = -1i32;
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &minus_one,
            iwork_query.as_mut_ptr(),
            &minus_one,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Integration(format!(
            "dsyevd workspace query failed with info = {info}"
        )));
    }
    let lwork = work_query[0] as i32;
    let liwork = iwork_query[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        dsyevd_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Integration(format!(
            "dsyevd failed with info = {info}"
        )));
    }
    Ok(w)
}

/// Eigenvalues (ascending) of a Hermitian matrix; the buffer is clobbered.
pub fn eigvals_hermitian(a: &mut [C64], n: usize) -> Result<Vec<f64>> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "matrix buffer has {} entries, expected {}",
            a.len(),
            n * n
        )));
    }
    let ni = i32::try_from(n)
        .map_err(|_| Error::InvalidParameter("matrix too large for LAPACK".into()))?;
    let mut w = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; (3 * n).max(1)];
    let mut info = 0i32;
    let (jobz, uplo) = (b'N', b'L');

    let mut work_query = [C64::new(0.0, 0.0); 1];
    let minus_one = -1i32;
    unsafe {
        zheev_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work_query.as_mut_ptr(),
            &minus_one,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Integration(format!(
            "zheev workspace query failed with info = {info}"
        )));
    }
    let lwork = work_query[0].re as i32;
    let mut work = vec![C64::new(0.0, 0.0); lwork.max(1) as usize];
    unsafe {
        zheev_(
            &jobz,
            &uplo,
            &ni,
            a.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Integration(format!(
            "zheev failed with info = {info}"
        )));
    }
    Ok(w)
}
