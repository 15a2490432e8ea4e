use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::grid::valid_block_sums;
use super::lattice::{LatticePoint, Window};
use crate::{Error, Result};

/// A finite-window subset of the lattice together with its declared
/// Delone parameter `R`.
///
/// Points are kept sorted and duplicate free. Membership queries outside
/// the window answer `false`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeloneSet {
    window: Window,
    points: Vec<LatticePoint>,
    declared_r: u64,
    #[serde(skip)]
    occupied: Vec<bool>,
}

impl DeloneSet {
    pub fn new(window: Window, mut points: Vec<LatticePoint>, declared_r: u64) -> Result<Self> {
        if declared_r < 1 {
            return Err(Error::invalid("declared R must be at least 1"));
        }
        points.sort();
        let mut occupied = vec![false; window.len()];
        for (i, p) in points.iter().enumerate() {
            if p.dim() != window.dim() {
                return Err(Error::DimensionMismatch { expected: window.dim(), got: p.dim() });
            }
            let idx =
                window.index_of(p).ok_or_else(|| Error::OutOfWindow(format!("point {p} outside window {window}")))?;
            if i > 0 && points[i - 1] == *p {
                return Err(Error::invalid(format!("duplicate point {p}")));
            }
            occupied[idx] = true;
        }
        Ok(DeloneSet { window, points, declared_r, occupied })
    }

    /// Every site of the window; `R = 1`.
    pub fn full(window: Window) -> Self {
        let points: Vec<_> = window.iter().collect();
        let occupied = vec![true; window.len()];
        DeloneSet { window, points, declared_r: 1, occupied }
    }

    pub(crate) fn from_occupancy(window: Window, occupied: Vec<bool>, declared_r: u64) -> Self {
        debug_assert_eq!(occupied.len(), window.len());
        let points = occupied.iter().enumerate().filter(|(_, &o)| o).map(|(i, _)| window.point_at(i)).collect();
        DeloneSet { window, points, declared_r, occupied }
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn declared_r(&self) -> u64 {
        self.declared_r
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.window.index_of(p).is_some_and(|i| self.occupied[i])
    }

    pub(crate) fn contains_coords(&self, coords: &[i64]) -> bool {
        self.window.index_of_coords(coords).is_some_and(|i| self.occupied[i])
    }

    /// Checks the generator contract: `compute_r(self) <= declared_r`.
    pub fn check_declared_r(&self) -> Result<bool> {
        Ok(compute_r(self)? <= self.declared_r)
    }
}

/// Smallest `R >= 1` such that every integer-anchored cube
/// `{a, …, a+R}^d` lying inside the window contains a point.
///
/// Cubes that leave the window are not tested. Fails with
/// [`Error::NotDelone`] when even the largest cube fitting in the window
/// can be empty.
pub fn compute_r(set: &DeloneSet) -> Result<u64> {
    if set.is_empty() {
        return Err(Error::NotDelone("empty point set".into()));
    }
    let shape = set.window.shape();
    let max_r = set.window.min_side() - 1;
    if max_r < 1 {
        return Ok(1);
    }
    let occ: Vec<i64> = set.occupied.iter().map(|&o| o as i64).collect();
    let covered = |r: usize| {
        let (sums, _) = valid_block_sums(&occ, &shape, r + 1);
        sums.iter().all(|&s| s > 0)
    };
    if !covered(max_r) {
        return Err(Error::NotDelone(format!("an empty cube of side {max_r} fits inside window {}", set.window)));
    }
    // covering is monotone in R
    let (mut lo, mut hi) = (1usize, max_r);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if covered(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo as u64)
}

/// `kℤ^d ∩ window`, declared with `R = max(1, k-1)`.
pub fn generate_periodic(dim: usize, k: i64, window: &Window) -> Result<DeloneSet> {
    if k <= 0 {
        return Err(Error::invalid(format!("period must be positive, got {k}")));
    }
    if window.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: window.dim() });
    }
    let occupied = window.iter().map(|p| p.coords().iter().all(|c| c.rem_euclid(k) == 0)).collect();
    Ok(DeloneSet::from_occupancy(window.clone(), occupied, (k - 1).max(1) as u64))
}

/// Points within this distance of a Sturmian cut are reported by
/// [`sturmian_flagged_sites`].
pub const NEAR_CUT_TOLERANCE: f64 = 1e-15;

/// A rotation number stored as an unevaluated double-double sum `hi + lo`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rotation {
    hi: f64,
    lo: f64,
}

impl Rotation {
    pub fn new(alpha: f64) -> Self {
        Rotation { hi: alpha, lo: 0.0 }
    }

    pub fn from_parts(hi: f64, lo: f64) -> Self {
        Rotation { hi, lo }
    }

    /// `(√5 - 1) / 2` to double-double precision.
    pub fn golden() -> Self {
        let s = 5f64.sqrt();
        // Newton correction of the square root: √5 ≈ s + (5 - s²) / 2s.
        let sq_err = (-s).mul_add(s, 5.0);
        let s_lo = sq_err / (2.0 * s);
        let hi = (s - 1.0) / 2.0;
        let lo = ((s - 1.0) - 2.0 * hi + s_lo) / 2.0;
        Rotation { hi, lo }
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    /// `frac(n·α)` as `(head, tail)`, with `head ∈ [0, 1)` and `|tail|` tiny.
    fn frac_times(&self, n: i64) -> (f64, f64) {
        let p = n as f64;
        let prod = p * self.hi;
        let err = p.mul_add(self.hi, -prod) + p * self.lo;
        let mut head = prod - prod.floor();
        let mut tail = err;
        let s = head + tail;
        if s < 0.0 {
            head += 1.0;
        } else if s >= 1.0 {
            head -= 1.0;
        }
        // renormalize
        let t = head + tail;
        tail -= t - head;
        head = t;
        (head, tail)
    }

    /// Whether `frac(n·α) < β`, and whether the answer is within
    /// [`NEAR_CUT_TOLERANCE`] of either cut.
    fn classify(&self, n: i64, beta: f64) -> (bool, bool) {
        let (head, tail) = self.frac_times(n);
        let gap = (head - beta) + tail;
        let near = gap.abs() < NEAR_CUT_TOLERANCE
            || (head + tail).abs() < NEAR_CUT_TOLERANCE
            || (1.0 - head - tail).abs() < NEAR_CUT_TOLERANCE;
        (gap < 0.0, near)
    }
}

fn sturmian_axis_checks(alpha: Rotation, beta: f64, window: &Window, per_axis: bool) -> Result<Vec<Vec<(bool, bool)>>> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 1], got {beta}")));
    }
    if window.dim() > 1 && !per_axis {
        return Err(Error::invalid("Sturmian sets with d > 1 are built per axis"));
    }
    Ok((0..window.dim())
        .map(|axis| {
            (window.lo().coords()[axis]..=window.hi().coords()[axis])
                .map(|n| if beta >= 1.0 { (true, false) } else { alpha.classify(n, beta) })
                .collect()
        })
        .collect())
}

/// `{n ∈ window : frac(n·α) < β}` in one dimension, or the Cartesian
/// product of the one-dimensional sets along each axis.
///
/// The declared `R` is the exact value computed on the window.
pub fn generate_sturmian(alpha: Rotation, beta: f64, window: &Window, per_axis: bool) -> Result<DeloneSet> {
    let checks = sturmian_axis_checks(alpha, beta, window, per_axis)?;
    let lo = window.lo().coords();
    let occupied = window
        .iter()
        .map(|p| p.coords().iter().enumerate().all(|(axis, c)| checks[axis][(c - lo[axis]) as usize].0))
        .collect();
    let mut set = DeloneSet::from_occupancy(window.clone(), occupied, 1);
    set.declared_r = compute_r(&set)?;
    Ok(set)
}

/// Sites whose Sturmian classification lies within [`NEAR_CUT_TOLERANCE`]
/// of a cut along some axis.
pub fn sturmian_flagged_sites(
    alpha: Rotation,
    beta: f64,
    window: &Window,
    per_axis: bool,
) -> Result<Vec<LatticePoint>> {
    let checks = sturmian_axis_checks(alpha, beta, window, per_axis)?;
    let lo = window.lo().coords();
    Ok(window
        .iter()
        .filter(|p| p.coords().iter().enumerate().any(|(axis, c)| checks[axis][(c - lo[axis]) as usize].1))
        .collect())
}

/// One uniformly chosen site per aligned cell of `⌊(R+2)/2⌋` sites per
/// axis. Every integer cube of side `R` inside the window then contains a
/// whole cell, so the result is `R`-Delone by construction.
pub fn generate_random_cell(dim: usize, r: u64, window: &Window, seed: u64) -> Result<DeloneSet> {
    if r < 1 {
        return Err(Error::invalid("R must be at least 1"));
    }
    if window.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: window.dim() });
    }
    let cell = ((r + 2) / 2) as usize;
    let shape = window.shape();
    if shape.iter().any(|&s| s < cell) {
        return Err(Error::invalid(format!("window {window} is smaller than one cell of side {cell}")));
    }
    let cells_per_axis: Vec<usize> = shape.iter().map(|s| s.div_ceil(cell)).collect();
    let cell_grid = Window::new(
        LatticePoint::origin(dim),
        LatticePoint::new(cells_per_axis.iter().map(|&c| c as i64 - 1).collect()),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut occupied = vec![false; window.len()];
    for c in cell_grid.iter() {
        let coords: Vec<i64> = c
            .coords()
            .iter()
            .enumerate()
            .map(|(axis, &ci)| {
                let start = ci as usize * cell;
                let len = cell.min(shape[axis] - start);
                window.lo().coords()[axis] + (start + rng.random_range(0..len)) as i64
            })
            .collect();
        let idx = window.index_of_coords(&coords).expect("cell lies inside window");
        occupied[idx] = true;
    }
    Ok(DeloneSet::from_occupancy(window.clone(), occupied, r))
}

/// `window ∖ D`, with `R` recomputed.
pub fn complement(set: &DeloneSet) -> Result<DeloneSet> {
    let occupied: Vec<bool> = set.occupied.iter().map(|&o| !o).collect();
    let mut out = DeloneSet::from_occupancy(set.window.clone(), occupied, 1);
    out.declared_r = compute_r(&out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w1(lo: i64, hi: i64) -> Window {
        Window::cube_range(1, lo, hi).unwrap()
    }

    fn pts(set: &DeloneSet) -> Vec<i64> {
        set.points().iter().map(|p| p.coords()[0]).collect()
    }

    /// Brute force over all anchors and all sides; independent of the
    /// prefix-sum path.
    fn brute_force_r_1d(set: &DeloneSet) -> Option<u64> {
        let (lo, hi) = (set.window().lo().coords()[0], set.window().hi().coords()[0]);
        (1..=(hi - lo)).find_map(|r| {
            let ok = (lo..=hi - r).all(|a| (a..=a + r).any(|n| set.contains(&LatticePoint::new(vec![n]))));
            ok.then_some(r as u64)
        })
    }

    #[test]
    fn periodic_examples() {
        let s = generate_periodic(1, 3, &w1(0, 9)).unwrap();
        assert_eq!(pts(&s), vec![0, 3, 6, 9]);
        assert_eq!(s.declared_r(), 2);
        assert_eq!(brute_force_r_1d(&s), Some(2));
        assert_eq!(compute_r(&s).unwrap(), 2);

        let s = generate_periodic(1, 1, &w1(0, 9)).unwrap();
        assert_eq!(s.len(), 10);
        assert_eq!(s.declared_r(), 1);

        let s = generate_periodic(2, 2, &Window::cube_range(2, 0, 4).unwrap()).unwrap();
        assert_eq!(s.len(), 9);
        assert!(generate_periodic(1, 0, &w1(0, 9)).is_err());
        assert!(generate_periodic(1, -2, &w1(0, 9)).is_err());
    }

    #[test]
    fn periodic_handles_negative_coordinates() {
        let s = generate_periodic(1, 2, &w1(-3, 3)).unwrap();
        assert_eq!(pts(&s), vec![-2, 0, 2]);
    }

    #[test]
    fn compute_r_examples() {
        let s = DeloneSet::new(w1(0, 9), vec![vec![0].into(), vec![9].into()], 8).unwrap();
        assert_eq!(compute_r(&s).unwrap(), 8);
        assert_eq!(brute_force_r_1d(&s), Some(8));
        let full = DeloneSet::full(w1(0, 9));
        assert_eq!(compute_r(&full).unwrap(), 1);
        // the whole window is the only cube of side 10
        let lone = DeloneSet::new(w1(0, 9), vec![vec![0].into()], 9).unwrap();
        assert_eq!(compute_r(&lone).unwrap(), 9);
        let empty = DeloneSet::new(w1(0, 9), vec![], 1).unwrap();
        assert!(matches!(compute_r(&empty), Err(Error::NotDelone(_))));
    }

    #[test]
    fn compute_r_2d_against_brute_force() {
        let w = Window::cube_range(2, 0, 7).unwrap();
        for seed in 0..5 {
            let s = generate_random_cell(2, 3, &w, seed).unwrap();
            let r = compute_r(&s).unwrap();
            assert!(r <= 3);
            // brute force smallest R
            let brute = (1..=7i64)
                .find(|&r| {
                    (0..=7 - r).all(|a| {
                        (0..=7 - r).all(|b| (a..=a + r).any(|x| (b..=b + r).any(|y| s.contains(&vec![x, y].into()))))
                    })
                })
                .unwrap();
            assert_eq!(r, brute as u64);
        }
    }

    #[test]
    fn sturmian_golden_example() {
        let s = generate_sturmian(Rotation::golden(), 0.5, &w1(0, 9), false).unwrap();
        assert_eq!(pts(&s), vec![0, 2, 4, 5, 7]);
        let all = generate_sturmian(Rotation::golden(), 1.0, &w1(0, 9), false).unwrap();
        assert_eq!(all.len(), 10);
        assert!(generate_sturmian(Rotation::golden(), 0.0, &w1(0, 9), false).is_err());
    }

    #[test]
    fn golden_rotation_is_extended_precision() {
        let g = Rotation::golden();
        assert!((g.value() - (5f64.sqrt() - 1.0) / 2.0).abs() < 2e-16);
        assert!(g.lo != 0.0);
        // reference split of (√5-1)/2 from a 40-digit evaluation
        assert_eq!(g.hi, 0.618_033_988_749_894_9);
        assert!((g.lo - -5.432_115_203_682_506e-17).abs() < 1e-31);
    }

    #[test]
    fn sturmian_density() {
        let s = generate_sturmian(Rotation::golden(), 0.5, &w1(0, 100_000), false).unwrap();
        let density = s.len() as f64 / 100_001.0;
        assert!((density - 0.5).abs() < 1e-2);
        assert!(sturmian_flagged_sites(Rotation::golden(), 0.5, &w1(0, 1000), false)
            .unwrap()
            .iter()
            .all(|p| p.coords()[0] == 0));
    }

    #[test]
    fn sturmian_2d_needs_per_axis() {
        let w = Window::cube_range(2, 0, 9).unwrap();
        assert!(generate_sturmian(Rotation::golden(), 0.5, &w, false).is_err());
        let s = generate_sturmian(Rotation::golden(), 0.5, &w, true).unwrap();
        assert_eq!(s.len(), 25);
    }

    #[test]
    fn random_cell_examples() {
        let s = generate_random_cell(1, 1, &w1(0, 9), 42).unwrap();
        assert_eq!(s.len(), 10);
        let s = generate_random_cell(1, 3, &w1(0, 99), 7).unwrap();
        assert!(brute_force_r_1d(&s).unwrap() <= 3);
        assert!(s.check_declared_r().unwrap());
        let again = generate_random_cell(1, 3, &w1(0, 99), 7).unwrap();
        assert_eq!(s, again);
        assert!(generate_random_cell(1, 0, &w1(0, 9), 7).is_err());
    }

    #[test]
    fn complement_examples() {
        let even = generate_periodic(1, 2, &w1(0, 9)).unwrap();
        let odd = complement(&even).unwrap();
        assert_eq!(pts(&odd), vec![1, 3, 5, 7, 9]);
        assert_eq!(odd.declared_r(), 1);
        assert!(matches!(complement(&DeloneSet::full(w1(0, 9))), Err(Error::NotDelone(_))));
        let threes = generate_periodic(1, 3, &w1(0, 9)).unwrap();
        let c = complement(&threes).unwrap();
        assert_eq!(pts(&c), vec![1, 2, 4, 5, 7, 8]);
        assert_eq!(c.declared_r(), 1);
        let back = complement(&c).unwrap();
        assert_eq!(back.points(), threes.points());
    }

    #[test]
    fn new_rejects_bad_input() {
        let w = w1(0, 3);
        assert!(DeloneSet::new(w.clone(), vec![vec![4].into()], 1).is_err());
        assert!(DeloneSet::new(w.clone(), vec![vec![1].into(), vec![1].into()], 1).is_err());
        assert!(DeloneSet::new(w, vec![vec![1].into()], 0).is_err());
    }
}
