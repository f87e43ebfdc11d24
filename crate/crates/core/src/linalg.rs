//! Thin wrappers over the dense SVD and Hermitian eigensolver.
//!
//! All factorizations run sequentially (`Par::Seq`) so results are
//! bit-identical whatever the trial-level thread count.

use faer::diag::Diag;
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::svd::{self, ComputeSvdVectors};
use faer::{Mat, MatRef, Par};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Singular values (nonincreasing) and optionally the singular vectors.
pub struct Svd {
    pub sigma: Vec<f64>,
    pub u: Option<Mat<Complex64>>,
    pub v: Option<Mat<Complex64>>,
}

fn cols(kind: ComputeSvdVectors, rows: usize, size: usize) -> Option<Mat<Complex64>> {
    match kind {
        ComputeSvdVectors::No => None,
        ComputeSvdVectors::Thin => Some(Mat::zeros(rows, size)),
        ComputeSvdVectors::Full => Some(Mat::zeros(rows, rows)),
    }
}

pub fn svd(
    a: MatRef<'_, Complex64>,
    left: ComputeSvdVectors,
    right: ComputeSvdVectors,
    context: impl FnOnce() -> String,
) -> Result<Svd> {
    let (m, n) = a.shape();
    let size = m.min(n);
    let mut s = Diag::<Complex64>::zeros(size);
    let mut u = cols(left, m, size);
    let mut v = cols(right, n, size);
    let req = svd::svd_scratch::<Complex64>(m, n, left, right, Par::Seq, Default::default());
    let mut buf = MemBuffer::new(req);
    svd::svd(
        a,
        s.as_mut(),
        u.as_mut().map(|u| u.as_mut()),
        v.as_mut().map(|v| v.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Decomposition {
        context: format!("{}: {e:?}", context()),
    })?;
    let sigma = s.column_vector().iter().map(|z| z.re).collect();
    Ok(Svd { sigma, u, v })
}

/// Permutation sorting `values` ascending; stable on ties.
pub fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix, read from
/// its lower triangle.
pub fn hermitian_eigen(a: MatRef<'_, Complex64>) -> Result<(Vec<f64>, Mat<Complex64>)> {
    let n = a.nrows();
    let mut s = Diag::<Complex64>::zeros(n);
    let mut u = Mat::<Complex64>::zeros(n, n);
    let req = evd::self_adjoint_evd_scratch::<Complex64>(n, ComputeEigenvectors::Yes, Par::Seq, Default::default());
    let mut buf = MemBuffer::new(req);
    evd::self_adjoint_evd(
        a,
        s.as_mut(),
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    )
    .map_err(|e| Error::Decomposition {
        context: format!("hermitian eigensolver: {e:?}"),
    })?;
    let values = s.column_vector().iter().map(|z| z.re).collect();
    Ok((values, u))
}
