use faer::Side as Triangle;

use super::{residual_norm, SolverKind, SolverMeta, SpectralResult};
use crate::operator::SparseSymmetricOperator;
use crate::{Error, Result};

/// Largest dimension accepted by the dense solvers.
pub const DENSE_THRESHOLD: usize = 4096;

fn check_size(h: &SparseSymmetricOperator) -> Result<()> {
    if h.dimension() > DENSE_THRESHOLD {
        return Err(Error::TooLargeForDense { dimension: h.dimension(), threshold: DENSE_THRESHOLD });
    }
    if h.dimension() == 0 {
        return Err(Error::invalid("empty operator"));
    }
    Ok(())
}

/// Residual bound `1e-10 · max(1, spectral span)` used by dense solves.
pub(crate) fn dense_tolerance(eigenvalues: &[f64]) -> f64 {
    let span = eigenvalues.last().unwrap_or(&0.0) - eigenvalues.first().unwrap_or(&0.0);
    let scale = eigenvalues.iter().fold(span, |m, v| m.max(v.abs()));
    1e-10 * scale.max(1.0)
}

/// All eigenpairs of a small operator, with per-pair residuals.
pub fn eig_full(h: &SparseSymmetricOperator) -> Result<SpectralResult> {
    check_size(h)?;
    let n = h.dimension();
    let evd = h
        .to_dense()
        .self_adjoint_eigen(Triangle::Lower)
        .map_err(|e| Error::Numerical(format!("dense eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let eigenvalues: Vec<f64> = (0..n).map(|i| s[i]).collect();
    let vectors: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| u[(i, j)]).collect()).collect();
    let residuals: Vec<f64> = vectors.iter().zip(&eigenvalues).map(|(v, &l)| residual_norm(h, v, l)).collect();
    let tolerance = dense_tolerance(&eigenvalues);
    if let Some(worst) = residuals.iter().cloned().reduce(f64::max) {
        if worst > tolerance {
            return Err(Error::Numerical(format!("dense residual {worst:e} above {tolerance:e}")));
        }
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors: Some(vectors),
        residuals,
        meta: SolverMeta { kind: SolverKind::Dense, iterations: 0, tolerance },
    })
}

/// All eigenvalues of a small operator, ascending. No vectors, no
/// residuals; meant for Monte Carlo loops.
pub fn eigenvalues_full(h: &SparseSymmetricOperator) -> Result<Vec<f64>> {
    check_size(h)?;
    if h.bandwidth() <= 1 {
        return Ok(super::tridiagonal::eigenvalues(h));
    }
    h.to_dense()
        .self_adjoint_eigenvalues(Triangle::Lower)
        .map_err(|e| Error::Numerical(format!("dense eigensolver failed: {e:?}")))
}
