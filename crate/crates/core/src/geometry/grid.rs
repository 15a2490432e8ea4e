//! Separable box sums over row-major (last axis fastest) grids.

use std::ops::{Add, Sub};

pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; shape.len()];
    for axis in (0..shape.len().saturating_sub(1)).rev() {
        s[axis] = s[axis + 1] * shape[axis + 1];
    }
    s
}

/// Sums over every fully contained block of `width` sites per axis.
///
/// Entry `a` of the result holds the sum over `a + {0, …, width-1}^d`;
/// the result has `shape[i] - width + 1` sites along axis `i`.
pub(crate) fn valid_block_sums<T>(data: &[T], shape: &[usize], width: usize) -> (Vec<T>, Vec<usize>)
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T>,
{
    assert!(width >= 1 && shape.iter().all(|&s| s >= width));
    let mut cur = data.to_vec();
    let mut cur_shape = shape.to_vec();
    for axis in 0..shape.len() {
        let s = cur_shape[axis];
        let out_len = s - width + 1;
        let inner: usize = cur_shape[axis + 1..].iter().product();
        let outer: usize = cur_shape[..axis].iter().product();
        let mut out = vec![T::default(); outer * out_len * inner];
        let mut prefix = vec![T::default(); s + 1];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * s * inner + i;
                for k in 0..s {
                    prefix[k + 1] = prefix[k] + cur[base + k * inner];
                }
                let obase = o * out_len * inner + i;
                for k in 0..out_len {
                    out[obase + k * inner] = prefix[k + width] - prefix[k];
                }
            }
        }
        cur = out;
        cur_shape[axis] = out_len;
    }
    (cur, cur_shape)
}

/// Sums over `n + {-radius, …, radius}^d`, with zero outside the grid.
pub(crate) fn centered_block_sums<T>(data: &[T], shape: &[usize], radius: usize) -> Vec<T>
where
    T: Copy + Default + Add<Output = T> + Sub<Output = T>,
{
    let mut cur = data.to_vec();
    for axis in 0..shape.len() {
        let s = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        let mut out = vec![T::default(); cur.len()];
        let mut prefix = vec![T::default(); s + 1];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * s * inner + i;
                for k in 0..s {
                    prefix[k + 1] = prefix[k] + cur[base + k * inner];
                }
                for k in 0..s {
                    let lo = k.saturating_sub(radius);
                    let hi = (k + radius + 1).min(s);
                    out[base + k * inner] = prefix[hi] - prefix[lo];
                }
            }
        }
        cur = out;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_sums_1d() {
        let (s, shape) = valid_block_sums(&[1i64, 0, 0, 1, 0], &[5], 2);
        assert_eq!(shape, vec![4]);
        assert_eq!(s, vec![1, 0, 1, 1]);
    }

    #[test]
    fn centered_sums_match_brute_force_2d() {
        let shape = [4usize, 5];
        let data: Vec<i64> = (0..20).map(|i| (i * 7 % 5) as i64).collect();
        let got = centered_block_sums(&data, &shape, 1);
        for r in 0..4i64 {
            for c in 0..5i64 {
                let mut want = 0;
                for dr in -1..=1 {
                    for dc in -1..=1 {
                        let (rr, cc) = (r + dr, c + dc);
                        if (0..4).contains(&rr) && (0..5).contains(&cc) {
                            want += data[(rr * 5 + cc) as usize];
                        }
                    }
                }
                assert_eq!(got[(r * 5 + c) as usize], want);
            }
        }
    }

    #[test]
    fn strides_row_major() {
        assert_eq!(strides(&[2, 3, 4]), vec![12, 4, 1]);
    }
}
