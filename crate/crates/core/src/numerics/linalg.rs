use nalgebra::{DMatrix, DVector};

use super::RESIDUAL_TOL;
use crate::error::{Error, Result};

/// Minimum-Euclidean-norm solution of `A x = b`, or `None` when the system is
/// inconsistent (residual above `1e-9` in the max norm).
pub fn least_norm_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    assert_eq!(a.nrows(), b.len(), "least_norm_solve: row count mismatch");
    if a.ncols() == 0 {
        return (b.amax() <= RESIDUAL_TOL).then(|| DVector::zeros(0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (smax * 1e-10).max(1e-14);
    let x = svd.solve(b, eps).ok()?;
    let residual = (a * &x - b).amax();
    (residual <= RESIDUAL_TOL).then_some(x)
}

/// Whether `target` lies in `Im(B_1^T) + ... + Im(B_k^T)`.
pub fn in_direct_sum(target: &DVector<f64>, blocks: &[&DMatrix<f64>]) -> bool {
    if target.amax() == 0.0 {
        return true;
    }
    if blocks.is_empty() {
        return false;
    }
    let rows = target.len();
    let cols: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut stacked = DMatrix::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), rows, "in_direct_sum: block width mismatch");
        stacked
            .columns_mut(off, b.nrows())
            .copy_from(&b.transpose());
        off += b.nrows();
    }
    least_norm_solve(&stacked, target).is_some()
}

/// Sherman-Morrison: returns `(G + x x^T)^{-1}` given `G^{-1}`.
pub fn rank1_inverse_update(g_inv: &DMatrix<f64>, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    let mut out = g_inv.clone();
    rank1_inverse_update_mut(&mut out, x)?;
    Ok(out)
}

/// In-place variant of [`rank1_inverse_update`].
pub fn rank1_inverse_update_mut(g_inv: &mut DMatrix<f64>, x: &DVector<f64>) -> Result<()> {
    if g_inv.nrows() != x.len() || g_inv.ncols() != x.len() {
        return Err(Error::Dimension(format!(
            "inverse is {}x{}, vector has length {}",
            g_inv.nrows(),
            g_inv.ncols(),
            x.len()
        )));
    }
    let gx = &*g_inv * x;
    let denom = 1.0 + x.dot(&gx);
    if denom <= 1e-12 {
        return Err(Error::NotPositiveDefinite(denom));
    }
    g_inv.ger(-1.0 / denom, &gx, &gx, 1.0);
    Ok(())
}
