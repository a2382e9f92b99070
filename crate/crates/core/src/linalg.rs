//! Thin deterministic wrapper over the LAPACK singular value decomposition.

use ndarray::{Array1, Array2, Axis};
use ndarray_linalg::SVD;

use crate::error::{Error, Result};

/// Full SVD `m = U · diag(S) · Vt` with singular values sorted descending and
/// a fixed sign convention: each column of `U` is flipped (together with the
/// matching row of `Vt`) so that its largest-magnitude entry is positive.
/// The convention removes the inherent sign ambiguity of the SVD so that
/// repeated runs produce identical factors.
pub fn svd(m: &Array2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array2<f64>)> {
    let (u, s, vt) = m
        .svd(true, true)
        .map_err(|e| Error::InvalidConfig(format!("svd failed: {e}")))?;
    let mut u = u.expect("requested U");
    let mut vt = vt.expect("requested Vt");
    let mut s = s;

    // LAPACK already returns descending singular values; enforce it anyway so
    // the contract does not depend on backend behavior.
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap().then(a.cmp(&b)));
    if order.iter().enumerate().any(|(i, &j)| i != j) {
        u = reorder_columns(&u, &order);
        vt = reorder_rows(&vt, &order);
        s = Array1::from_iter(order.iter().map(|&j| s[j]));
    }

    for j in 0..s.len() {
        let col = u.column(j);
        let mut best = 0;
        let mut best_abs = f64::NEG_INFINITY;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if u[[best, j]] < 0.0 {
            u.column_mut(j).mapv_inplace(|v| -v);
            vt.row_mut(j).mapv_inplace(|v| -v);
        }
    }
    Ok((u, s, vt))
}

fn reorder_columns(m: &Array2<f64>, order: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros(m.dim());
    for (dst, &src) in order.iter().enumerate() {
        out.column_mut(dst).assign(&m.column(src));
    }
    out
}

fn reorder_rows(m: &Array2<f64>, order: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros(m.dim());
    for (dst, &src) in order.iter().enumerate() {
        out.row_mut(dst).assign(&m.row(src));
    }
    out
}

/// First right singular vector of a row-per-sample matrix: the direction of
/// maximal (uncentered) variance of the rows.
pub fn first_right_singular_vector(rows: &Array2<f64>) -> Result<Array1<f64>> {
    if rows.nrows() < 2 {
        return Err(Error::InvalidConfig(
            "principal component undefined for fewer than two rows".into(),
        ));
    }
    let (_, _, vt) = svd(rows)?;
    Ok(vt.index_axis(Axis(0), 0).to_owned())
}
