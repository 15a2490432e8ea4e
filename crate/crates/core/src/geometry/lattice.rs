use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point of the integer lattice, in lattice units.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint(Vec<i64>);

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Self {
        assert!(!coords.is_empty(), "lattice points need at least one coordinate");
        LatticePoint(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Self::splat(dim, 0)
    }

    pub fn splat(dim: usize, value: i64) -> Self {
        Self::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// `|n|_∞`
    pub fn max_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// `|n|_1`, the graph distance to the origin.
    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn squared_norm(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn offset(&self, other: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), other.dim());
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn diff(&self, other: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), other.dim());
        LatticePoint(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn shifted(&self, delta: i64) -> LatticePoint {
        LatticePoint(self.0.iter().map(|c| c + delta).collect())
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(coords: Vec<i64>) -> Self {
        LatticePoint::new(coords)
    }
}

impl fmt::Display for LatticePoint {
    /// Coordinates joined by `;`, the form used in CSV cells.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// An axis-aligned block of lattice sites with inclusive bounds.
///
/// Sites are enumerated lexicographically with the last axis varying
/// fastest; [`Window::index_of`] and [`Window::point_at`] are inverse
/// bijections between the block and `0..len()`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    lo: LatticePoint,
    hi: LatticePoint,
}

impl Window {
    pub fn new(lo: LatticePoint, hi: LatticePoint) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return Err(Error::DimensionMismatch { expected: lo.dim(), got: hi.dim() });
        }
        if lo.coords().iter().zip(hi.coords()).any(|(l, h)| l > h) {
            return Err(Error::invalid(format!("empty window {lo}..{hi}")));
        }
        Ok(Window { lo, hi })
    }

    /// `[lo, hi]^d`
    pub fn cube_range(dim: usize, lo: i64, hi: i64) -> Result<Self> {
        Self::new(LatticePoint::splat(dim, lo), LatticePoint::splat(dim, hi))
    }

    /// `Λ_L(x) = x + {-L, …, L}^d`
    pub fn centered(center: &LatticePoint, half_width: usize) -> Self {
        let l = half_width as i64;
        Window { lo: center.shifted(-l), hi: center.shifted(l) }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn lo(&self) -> &LatticePoint {
        &self.lo
    }

    pub fn hi(&self) -> &LatticePoint {
        &self.hi
    }

    /// Number of sites along each axis.
    pub fn shape(&self) -> Vec<usize> {
        self.lo.coords().iter().zip(self.hi.coords()).map(|(l, h)| (h - l + 1) as usize).collect()
    }

    /// Smallest number of sites along any axis.
    pub fn min_side(&self) -> usize {
        self.shape().into_iter().min().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        p.dim() == self.dim()
            && p.coords().iter().zip(self.lo.coords().iter().zip(self.hi.coords())).all(|(c, (l, h))| l <= c && c <= h)
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    pub fn index_of(&self, p: &LatticePoint) -> Option<usize> {
        self.index_of_coords(p.coords())
    }

    pub(crate) fn index_of_coords(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim() {
            return None;
        }
        let mut idx = 0usize;
        for ((c, l), h) in coords.iter().zip(self.lo.coords()).zip(self.hi.coords()) {
            if c < l || c > h {
                return None;
            }
            idx = idx * (h - l + 1) as usize + (c - l) as usize;
        }
        Some(idx)
    }

    pub fn point_at(&self, index: usize) -> LatticePoint {
        let shape = self.shape();
        let mut coords = vec![0i64; shape.len()];
        let mut rest = index;
        for axis in (0..shape.len()).rev() {
            coords[axis] = self.lo.coords()[axis] + (rest % shape[axis]) as i64;
            rest /= shape[axis];
        }
        LatticePoint(coords)
    }

    pub fn iter(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        (0..self.len()).map(move |i| self.point_at(i))
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (l, h)) in self.lo.coords().iter().zip(self.hi.coords()).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{l}:{h}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norms() {
        let p = LatticePoint::new(vec![3, -4]);
        assert_eq!(p.max_norm(), 4);
        assert_eq!(p.l1_norm(), 7);
        assert_eq!(p.squared_norm(), 25);
    }

    #[test]
    fn window_rejects_inverted_bounds() {
        assert!(Window::new(vec![0, 5].into(), vec![3, 4].into()).is_err());
        assert!(Window::new(vec![0].into(), vec![3, 4].into()).is_err());
    }

    #[test]
    fn index_map_is_a_bijection() {
        let w = Window::new(vec![-1, 2, 0].into(), vec![1, 4, 3].into()).unwrap();
        assert_eq!(w.len(), 3 * 3 * 4);
        for i in 0..w.len() {
            let p = w.point_at(i);
            assert!(w.contains(&p));
            assert_eq!(w.index_of(&p), Some(i));
        }
        // last axis fastest
        assert_eq!(w.point_at(1), LatticePoint::new(vec![-1, 2, 1]));
        assert_eq!(w.index_of(&LatticePoint::new(vec![2, 2, 0])), None);
    }

    #[test]
    fn centered_cube() {
        let w = Window::centered(&LatticePoint::new(vec![5, -5]), 2);
        assert_eq!(w.to_string(), "3:7,-7:-3");
        assert_eq!(w.len(), 25);
    }
}
