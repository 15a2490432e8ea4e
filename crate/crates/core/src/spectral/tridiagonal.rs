//! Implicit QL iteration for symmetric tridiagonal matrices.

use crate::operator::SparseSymmetricOperator;

/// Eigen-decomposition of the tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off[i]` couples `i` and `i+1`).
///
/// Returns ascending eigenvalues and, if requested, the eigenvectors as
/// columns of a column-major `n × n` array.
pub(crate) fn tql(diag: &[f64], off: &[f64], vectors: bool) -> (Vec<f64>, Option<Vec<f64>>) {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    let mut z = vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    });

    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations <= 200, "tridiagonal QL failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_mut() {
                    let (left, right) = z.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_j = &mut right[..n];
                    for k in 0..n {
                        let f = col_j[k];
                        col_j[k] = s * col_i[k] + c * f;
                        col_i[k] = c * col_i[k] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| d[i]).collect();
    let vecs = z.map(|z| {
        let mut out = vec![0.0; n * n];
        for (dst, &src) in order.iter().enumerate() {
            out[dst * n..(dst + 1) * n].copy_from_slice(&z[src * n..(src + 1) * n]);
        }
        out
    });
    (values, vecs)
}

/// Eigenvalues of an operator whose bandwidth is at most one.
pub(crate) fn eigenvalues(h: &SparseSymmetricOperator) -> Vec<f64> {
    debug_assert!(h.bandwidth() <= 1);
    let n = h.dimension();
    let diag = h.diagonal();
    let off: Vec<f64> = (0..n.saturating_sub(1)).map(|i| h.get(i, i + 1)).collect();
    tql(&diag, &off, false).0
}

/// Number of eigenvalues strictly below `x` for an operator of bandwidth at
/// most one, from the signs of the `LDLᵀ` pivots of `H - x`.
pub(crate) fn count_below(h: &SparseSymmetricOperator, x: f64) -> usize {
    debug_assert!(h.bandwidth() <= 1);
    let n = h.dimension();
    let mut count = 0;
    let mut pivot = 1.0;
    for i in 0..n {
        let coupling = if i > 0 { h.get(i - 1, i) } else { 0.0 };
        pivot = h.get(i, i) - x - if i > 0 { coupling * coupling / pivot } else { 0.0 };
        if pivot == 0.0 {
            pivot = -f64::EPSILON * (h.get(i, i).abs() + coupling.abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn free_chain_closed_form() {
        let n = 50;
        let (vals, vecs) = tql(&vec![2.0; n], &vec![-1.0; n - 1], true);
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
        }
        let z = vecs.unwrap();
        // orthonormal columns
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n).map(|k| z[a * n + k] * z[b * n + k]).sum();
                assert!((dot - (a == b) as u8 as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sturm_count_matches_eigenvalues() {
        let b = crate::operator::BoxSpec::new(vec![0].into(), 20);
        let h = crate::operator::assemble_laplacian(&b);
        let vals = eigenvalues(&h);
        for x in [-1.0, 0.0, 0.3, 1.0, 2.05, 3.99, 5.0] {
            assert_eq!(count_below(&h, x), vals.iter().filter(|&&l| l < x).count());
        }
    }

    #[test]
    fn trivial_sizes() {
        assert_eq!(tql(&[3.0], &[], true).0, vec![3.0]);
        let (v, _) = tql(&[1.0, 1.0], &[1.0], false);
        assert!((v[0] - 0.0).abs() < 1e-15 && (v[1] - 2.0).abs() < 1e-15);
        assert!(tql(&[], &[], false).0.is_empty());
    }
}
