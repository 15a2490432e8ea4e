//! Cholesky factorization of symmetric positive definite band matrices.

use crate::operator::SparseSymmetricOperator;

/// `L Lᵀ` factor of `scale·(H - shift·I)` stored as a lower band.
pub(crate) struct BandCholesky {
    n: usize,
    bw: usize,
    // row i holds L[i][i-bw..=i] at offsets 0..=bw
    band: Vec<f64>,
}

impl BandCholesky {
    /// Returns `None` when a pivot is not positive.
    pub(crate) fn factor(h: &SparseSymmetricOperator, scale: f64, shift: f64) -> Option<Self> {
        let n = h.dimension();
        let bw = h.bandwidth();
        let w = bw + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in h.row(i) {
                if j <= i {
                    let a = if i == j { scale * (v - shift) } else { scale * v };
                    band[i * w + (bw + j - i)] = a;
                }
            }
        }
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = band[i * w + (bw + j - i)];
                for k in k0..j {
                    sum -= band[i * w + (bw + k - i)] * band[j * w + (bw + k - j)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return None;
                    }
                    band[i * w + bw] = sum.sqrt();
                } else {
                    band[i * w + (bw + j - i)] = sum / band[j * w + bw];
                }
            }
        }
        Some(BandCholesky { n, bw, band })
    }

    /// Solves `L Lᵀ x = rhs` in place.
    pub(crate) fn solve_in_place(&self, x: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.band[i * w + (bw + k - i)] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= self.band[k * w + (bw + i - k)] * x[k];
            }
            x[i] = s / self.band[i * w + bw];
        }
    }

    /// Memory in `f64` words needed for a factor of `h`.
    pub(crate) fn footprint(h: &SparseSymmetricOperator) -> usize {
        h.dimension() * (h.bandwidth() + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LatticePoint;
    use crate::operator::{assemble_laplacian, BoxSpec};

    #[test]
    fn solves_shifted_laplacian() {
        let h = assemble_laplacian(&BoxSpec::new(LatticePoint::origin(2), 3));
        let f = BandCholesky::factor(&h, 1.0, -0.5).unwrap();
        let x: Vec<f64> = (0..h.dimension()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = h.mul_vec(&x);
        for (bi, xi) in b.iter_mut().zip(&x) {
            *bi += 0.5 * xi;
        }
        f.solve_in_place(&mut b);
        for (a, e) in b.iter().zip(&x) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let h = assemble_laplacian(&BoxSpec::new(LatticePoint::origin(1), 3));
        assert!(BandCholesky::factor(&h, 1.0, 1.0).is_none());
        assert!(BandCholesky::factor(&h, -1.0, 4.5).is_some());
    }
}
