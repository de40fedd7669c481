//! Singular-value helpers on top of LAPACK.
//!
//! The identification pipeline only ever needs the leading block of the SVD
//! (the model order is far smaller than the pencil), so the workhorse here is
//! [`truncated_svd`], a thin wrapper over `dgesvdx` that computes exactly the
//! top-k singular triplets. For a tall stack this is roughly half the cost of
//! an economy SVD and independent of how many orders are later realized from
//! the same factorization.

use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;

use crate::error::{Error, Result};

/// Top-`k` singular triplets of a real matrix.
///
/// Returns `(u, s, vt)` with `u` of shape `m x k`, `s` the `k` leading
/// singular values in descending order, and `vt` of shape `k x n`.
pub fn truncated_svd(a: &Array2<f64>, k: usize) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (m, n) = a.dim();
    let kmin = m.min(n);
    if k == 0 || k > kmin {
        return Err(Error::Computation(format!(
            "requested {k} singular triplets from a {m}x{n} matrix"
        )));
    }

    // dgesvdx wants column-major storage. Iterating the transpose view in
    // logical order yields exactly that irrespective of how `a` is laid out
    // in memory (an owned transpose may keep the original buffer order).
    let mut buf: Vec<f64> = a.t().iter().copied().collect();
    let mi = m as i32;
    let ni = n as i32;
    let ki = k as i32;

    let mut s = vec![0.0f64; kmin];
    let mut u = vec![0.0f64; m * k];
    let mut vt = vec![0.0f64; k * n];
    let mut iwork = vec![0i32; 12 * kmin];
    let mut ns: i32 = 0;
    let mut info: i32 = 0;
    let (vl, vu) = (0.0f64, 0.0f64);
    let (il, iu) = (1i32, ki);

    // Workspace query, then the real call.
    let mut work_query = [0.0f64];
    let lwork_query: i32 = -1;
    unsafe {
        lapack_sys::dgesvdx_(
            &(b'V' as i8),
            &(b'V' as i8),
            &(b'I' as i8),
            &mi,
            &ni,
            buf.as_mut_ptr(),
            &mi,
            &vl,
            &vu,
            &il,
            &iu,
            &mut ns,
            s.as_mut_ptr(),
            u.as_mut_ptr(),
            &mi,
            vt.as_mut_ptr(),
            &ki,
            work_query.as_mut_ptr(),
            &lwork_query,
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Computation(format!(
            "dgesvdx workspace query failed (info = {info})"
        )));
    }
    let lwork = work_query[0] as i32;
    let mut work = vec![0.0f64; lwork as usize];
    unsafe {
        lapack_sys::dgesvdx_(
            &(b'V' as i8),
            &(b'V' as i8),
            &(b'I' as i8),
            &mi,
            &ni,
            buf.as_mut_ptr(),
            &mi,
            &vl,
            &vu,
            &il,
            &iu,
            &mut ns,
            s.as_mut_ptr(),
            u.as_mut_ptr(),
            &mi,
            vt.as_mut_ptr(),
            &ki,
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Computation(format!("dgesvdx failed (info = {info})")));
    }
    if ns < ki {
        return Err(Error::Computation(format!(
            "dgesvdx returned {ns} of {k} requested singular values"
        )));
    }

    // Column-major m x k is row-major k x m (and likewise for vt), so a
    // transpose view undoes the layout difference.
    let u = Array2::from_shape_vec((k, m), u)
        .map_err(|e| Error::Computation(e.to_string()))?
        .t()
        .to_owned();
    let vt = Array2::from_shape_vec((n, k), vt)
        .map_err(|e| Error::Computation(e.to_string()))?
        .t()
        .to_owned();
    let s = Array1::from_vec(s[..k].to_vec());
    Ok((u, s, vt))
}

/// All singular values of a real matrix, descending.
pub fn singular_values(a: &Array2<f64>) -> Result<Array1<f64>> {
    let (_, s, _) = a
        .svd(false, false)
        .map_err(|e| Error::Computation(format!("singular value computation failed: {e}")))?;
    Ok(s)
}

/// Moore–Penrose pseudoinverse via SVD, discarding singular values below
/// `rel_tol` times the largest one.
pub fn pinv(a: &Array2<f64>, rel_tol: f64) -> Result<Array2<f64>> {
    let (u, s, vt) = a
        .svd(true, true)
        .map_err(|e| Error::Computation(format!("SVD failed in pseudoinverse: {e}")))?;
    let u = u.expect("requested U");
    let vt = vt.expect("requested Vt");
    let smax = s.iter().cloned().fold(0.0f64, f64::max);
    if smax == 0.0 {
        return Ok(Array2::zeros((a.ncols(), a.nrows())));
    }
    let cut = rel_tol * smax;
    // V * diag(1/s) * U^T, dropping directions below the cutoff.
    let mut ut = u.t().to_owned();
    for (i, &si) in s.iter().enumerate() {
        let w = if si > cut { 1.0 / si } else { 0.0 };
        ut.row_mut(i).mapv_inplace(|x| x * w);
    }
    Ok(vt.t().dot(&ut.slice(ndarray::s![..s.len(), ..])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn truncated_svd_matches_full_svd_on_small_matrix() {
        let a = array![
            [4.0, 0.0, 1.0],
            [0.0, 3.0, 0.0],
            [1.0, 0.0, 2.0],
            [0.5, -1.0, 0.0]
        ];
        let (u, s, vt) = truncated_svd(&a, 2).unwrap();
        let (_, s_full, _) = a.svd(false, false).unwrap();
        assert_abs_diff_eq!(s[0], s_full[0], epsilon = 1e-12);
        assert_abs_diff_eq!(s[1], s_full[1], epsilon = 1e-12);
        // Reconstruction with the top-2 triplets matches the rank-2 truncation:
        // residual equals the discarded singular value.
        let mut us = u.clone();
        for j in 0..2 {
            us.column_mut(j).mapv_inplace(|x| x * s[j]);
        }
        let a2 = us.dot(&vt);
        let resid = (&a - &a2).mapv(|x| x * x).sum().sqrt();
        assert_abs_diff_eq!(resid, s_full[2], epsilon = 1e-10);
    }

    #[test]
    fn pinv_of_invertible_matrix_is_inverse() {
        let a = array![[2.0, 1.0], [1.0, 3.0]];
        let p = pinv(&a, 1e-12).unwrap();
        let eye = a.dot(&p);
        assert_abs_diff_eq!(eye[[0, 0]], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eye[[0, 1]], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eye[[1, 0]], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eye[[1, 1]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pinv_handles_rank_deficiency() {
        // Rank-1 matrix: pinv must satisfy the Penrose identity a pinv a = a.
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        let p = pinv(&a, 1e-12).unwrap();
        let apa = a.dot(&p).dot(&a);
        for (x, y) in apa.iter().zip(a.iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }
}
