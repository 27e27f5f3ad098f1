//! Thin SVD of nalgebra matrices, computed by faer.
//!
//! nalgebra's implicit-shift SVD can return factors that do not recompose
//! the input when the matrix is exactly rank deficient (a rank-1 40×8
//! matrix is enough), which is the normal case for noise-free observation
//! matrices here.

use nalgebra::{DMatrix, DVector, Dim, Matrix, RawStorage};

use crate::error::{Error, Result};

/// `m = u · diag(s) · v_t` with `s` sorted in non-increasing order.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl ThinSvd {
    /// Best rank-`k` approximation `u_k · diag(s_k) · v_tₖ`.
    pub fn truncated(&self, k: usize) -> DMatrix<f64> {
        let k = k.min(self.s.len());
        let mut scaled = self.u.columns(0, k).into_owned();
        for c in 0..k {
            scaled.column_mut(c).scale_mut(self.s[c]);
        }
        scaled * self.v_t.rows(0, k)
    }
}

pub fn svd<R: Dim, C: Dim, S: RawStorage<f64, R, C>>(m: &Matrix<f64, R, C, S>) -> Result<ThinSvd> {
    let (rows, cols) = m.shape();
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let fm = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = fm
        .thin_svd()
        .map_err(|e| Error::RankDeficient(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    let k = rows.min(cols);
    let mut out = ThinSvd {
        u: DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
        s: DVector::from_fn(k, |i, _| s[i]),
        v_t: DMatrix::from_fn(k, cols, |i, j| v[(j, i)]),
    };
    sort_descending(&mut out);
    Ok(out)
}

fn sort_descending(d: &mut ThinSvd) {
    let mut order: Vec<usize> = (0..d.s.len()).collect();
    order.sort_by(|&a, &b| d.s[b].total_cmp(&d.s[a]));
    if order.iter().enumerate().all(|(i, &j)| i == j) {
        return;
    }
    d.u = DMatrix::from_fn(d.u.nrows(), order.len(), |i, j| d.u[(i, order[j])]);
    d.v_t = DMatrix::from_fn(order.len(), d.v_t.ncols(), |i, j| d.v_t[(order[i], j)]);
    d.s = DVector::from_fn(order.len(), |i, _| d.s[order[i]]);
}
