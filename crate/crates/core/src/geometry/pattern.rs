use std::collections::HashMap;

use num_rational::Ratio;
use serde::Serialize;

use super::delone::DeloneSet;
use super::lattice::{LatticePoint, Window};
use crate::{Error, Result};

/// Window content `D ∩ (a + {0, …, K}^d)` expressed relative to the anchor
/// `a`, so every offset lies in `{0, …, K}^d`.
///
/// Two occurrences are equivalent exactly when their normalized contents
/// are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Pattern {
    dim: usize,
    extent: usize,
    offsets: Vec<LatticePoint>,
}

impl Pattern {
    pub fn new(dim: usize, extent: usize, mut offsets: Vec<LatticePoint>) -> Result<Self> {
        for p in &offsets {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
            if p.coords().iter().any(|&c| c < 0 || c > extent as i64) {
                return Err(Error::invalid(format!("offset {p} outside the pattern cube")));
            }
        }
        offsets.sort();
        offsets.dedup();
        Ok(Pattern { dim, extent, offsets })
    }

    /// `{0}` with `K = 0`.
    pub fn singleton(dim: usize) -> Self {
        Pattern { dim, extent: 0, offsets: vec![LatticePoint::origin(dim)] }
    }

    /// Every site of `{0, …, K}^d`.
    pub fn full_cube(dim: usize, extent: usize) -> Self {
        Pattern { dim, extent, offsets: cube(dim, extent).iter().collect() }
    }

    /// The content of `set` in the cube anchored at `anchor`. Sites outside
    /// the set's window are empty.
    pub fn content_at(set: &DeloneSet, anchor: &LatticePoint, extent: usize) -> Self {
        let offsets = cube(set.dim(), extent).iter().filter(|o| set.contains(&anchor.offset(o))).collect();
        Pattern { dim: set.dim(), extent, offsets }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> usize {
        self.extent
    }

    pub fn offsets(&self) -> &[LatticePoint] {
        &self.offsets
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Idempotent; offsets are always stored sorted and deduplicated.
    pub fn normalized(&self) -> Self {
        let mut p = self.clone();
        p.offsets.sort();
        p.offsets.dedup();
        p
    }

    fn key(&self) -> Vec<u64> {
        let cube = cube(self.dim, self.extent);
        let mut bits = vec![0u64; cube.len().div_ceil(64)];
        for o in &self.offsets {
            let i = cube.index_of(o).expect("offset inside cube");
            bits[i / 64] |= 1 << (i % 64);
        }
        bits
    }
}

fn cube(dim: usize, extent: usize) -> Window {
    Window::cube_range(dim, 0, extent as i64).expect("nonempty cube")
}

/// Occupancy bitmask of the cube anchored at `anchor`, in the same bit
/// order as [`Pattern::key`].
fn content_key(set: &DeloneSet, anchor: &[i64], cube: &Window, scratch: &mut Vec<i64>) -> Vec<u64> {
    let mut bits = vec![0u64; cube.len().div_ceil(64)];
    for i in 0..cube.len() {
        let o = cube.point_at(i);
        scratch.clear();
        scratch.extend(anchor.iter().zip(o.coords()).map(|(a, b)| a + b));
        if set.contains_coords(scratch) {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    bits
}

fn anchors_fully_inside(set: &DeloneSet, extent: usize) -> Result<Window> {
    let w = set.window();
    if w.min_side() <= extent {
        return Err(Error::invalid(format!("pattern extent {extent} does not fit in window {w}")));
    }
    Window::new(w.lo().clone(), w.hi().shifted(-(extent as i64)))
}

/// The finite-local-complexity census: distinct normalized contents of all
/// cubes `a + {0, …, K}^d` inside the window, with occurrence counts.
///
/// Patterns are returned in ascending order; counts sum to the number of
/// admissible anchors.
pub fn enumerate_patterns(set: &DeloneSet, extent: usize) -> Result<Vec<(Pattern, usize)>> {
    let anchors = anchors_fully_inside(set, extent)?;
    let cube = cube(set.dim(), extent);
    let mut census: HashMap<Vec<u64>, (LatticePoint, usize)> = HashMap::new();
    let mut scratch = Vec::new();
    for a in anchors.iter() {
        let key = content_key(set, a.coords(), &cube, &mut scratch);
        census.entry(key).or_insert_with(|| (a.clone(), 0)).1 += 1;
    }
    let mut out: Vec<(Pattern, usize)> =
        census.into_values().map(|(a, count)| (Pattern::content_at(set, &a, extent), count)).collect();
    out.sort();
    Ok(out)
}

/// `η_{x,L}(Q)`: the fraction of anchors `y ∈ Λ_L(x)` whose content
/// equals `Q`.
///
/// The box `Λ_L(x)` must lie inside the window. Cubes of anchors near the
/// upper window edge are truncated there, as the set is empty outside.
pub fn pattern_frequency(
    set: &DeloneSet,
    pattern: &Pattern,
    center: &LatticePoint,
    half_width: usize,
) -> Result<Ratio<u64>> {
    let (hits, volume) = count_occurrences(set, pattern, center, half_width)?;
    Ok(Ratio::new(hits, volume))
}

fn count_occurrences(
    set: &DeloneSet,
    pattern: &Pattern,
    center: &LatticePoint,
    half_width: usize,
) -> Result<(u64, u64)> {
    if pattern.dim() != set.dim() || center.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: pattern.dim() });
    }
    let boxed = Window::centered(center, half_width);
    if !set.window().contains_window(&boxed) {
        return Err(Error::OutOfWindow(format!("Λ_{half_width}({center}) exceeds {}", set.window())));
    }
    let cube = cube(set.dim(), pattern.extent());
    let key = pattern.key();
    let mut scratch = Vec::new();
    let hits = boxed.iter().filter(|y| content_key(set, y.coords(), &cube, &mut scratch) == key).count() as u64;
    Ok((hits, boxed.len() as u64))
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyRow {
    pub center: LatticePoint,
    pub half_width: usize,
    pub hits: u64,
    pub volume: u64,
    pub value: f64,
}

/// Uniform-pattern-frequency diagnostic for one pattern.
#[derive(Clone, Debug, Serialize)]
pub struct FrequencyReport {
    pub pattern: Pattern,
    pub rows: Vec<FrequencyRow>,
    /// Mean over centers of `η_{x,L}` at the largest `L`.
    pub limit_estimate: f64,
    /// `max_{x,x'} |η_{x,L} - η_{x',L}|` at the largest `L`.
    pub uniformity_deviation: f64,
    /// The same spread for every tested `L`, in input order.
    pub deviation_by_l: Vec<(usize, f64)>,
    pub strictly_positive: bool,
}

pub fn supf_diagnostic(
    set: &DeloneSet,
    pattern: &Pattern,
    half_widths: &[usize],
    centers: &[LatticePoint],
) -> Result<FrequencyReport> {
    if half_widths.is_empty() || centers.is_empty() {
        return Err(Error::invalid("need at least one L and one center"));
    }
    let mut rows = Vec::with_capacity(half_widths.len() * centers.len());
    let mut deviation_by_l = Vec::with_capacity(half_widths.len());
    for &l in half_widths {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for x in centers {
            let (hits, volume) = count_occurrences(set, pattern, x, l)?;
            let value = hits as f64 / volume as f64;
            lo = lo.min(value);
            hi = hi.max(value);
            rows.push(FrequencyRow { center: x.clone(), half_width: l, hits, volume, value });
        }
        deviation_by_l.push((l, hi - lo));
    }
    let l_max = *half_widths.iter().max().expect("nonempty");
    let at_max: Vec<f64> = rows.iter().filter(|r| r.half_width == l_max).map(|r| r.value).collect();
    let limit_estimate = at_max.iter().sum::<f64>() / at_max.len() as f64;
    let uniformity_deviation =
        at_max.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - at_max.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FrequencyReport {
        pattern: pattern.clone(),
        rows,
        limit_estimate,
        uniformity_deviation,
        deviation_by_l,
        strictly_positive: limit_estimate > 0.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Repetitions {
    pub translations: Vec<LatticePoint>,
    /// Set when the search window ran out before `count` were found.
    pub insufficient: bool,
}

/// Greedy lexicographic search for translations `v ∈ search` whose cube
/// content equals `Q` and whose cubes are pairwise disjoint from the
/// previously selected ones. Only cubes inside the set's window are used.
pub fn find_disjoint_repetitions(
    set: &DeloneSet,
    pattern: &Pattern,
    count: usize,
    search: &Window,
) -> Result<Repetitions> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    if pattern.dim() != set.dim() || search.dim() != set.dim() {
        return Err(Error::DimensionMismatch { expected: set.dim(), got: pattern.dim() });
    }
    let k = pattern.extent() as i64;
    let cube = cube(set.dim(), pattern.extent());
    let key = pattern.key();
    let mut scratch = Vec::new();
    let mut found: Vec<LatticePoint> = Vec::new();
    for v in search.iter() {
        if found.len() == count {
            break;
        }
        if !set.window().contains(&v) || !set.window().contains(&v.shifted(k)) {
            continue;
        }
        let disjoint = found.iter().all(|w| v.coords().iter().zip(w.coords()).any(|(a, b)| (a - b).abs() > k));
        if disjoint && content_key(set, v.coords(), &cube, &mut scratch) == key {
            found.push(v);
        }
    }
    let insufficient = found.len() < count;
    Ok(Repetitions { translations: found, insufficient })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_periodic, generate_sturmian, Rotation};

    fn w1(lo: i64, hi: i64) -> Window {
        Window::cube_range(1, lo, hi).unwrap()
    }

    fn p1(offsets: &[i64], extent: usize) -> Pattern {
        Pattern::new(1, extent, offsets.iter().map(|&o| vec![o].into()).collect()).unwrap()
    }

    #[test]
    fn census_even_integers() {
        let d = generate_periodic(1, 2, &w1(0, 9)).unwrap();
        let census = enumerate_patterns(&d, 1).unwrap();
        assert_eq!(census, vec![(p1(&[0], 1), 5), (p1(&[1], 1), 4)]);
    }

    #[test]
    fn census_full_and_threes() {
        let full = crate::geometry::DeloneSet::full(w1(0, 9));
        for k in 0..5 {
            let c = enumerate_patterns(&full, k).unwrap();
            assert_eq!(c.len(), 1);
            assert_eq!(c[0].1, 10 - k);
        }
        let threes = generate_periodic(1, 3, &w1(0, 9)).unwrap();
        let c = enumerate_patterns(&threes, 2).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.iter().map(|x| x.1).sum::<usize>(), 8);
        assert!(enumerate_patterns(&threes, 10).is_err());
    }

    #[test]
    fn frequency_of_evens() {
        let d = generate_periodic(1, 2, &w1(-20, 20)).unwrap();
        let eta = pattern_frequency(&d, &Pattern::singleton(1), &vec![0].into(), 10).unwrap();
        assert_eq!(eta, Ratio::new(11, 21));
        assert!(pattern_frequency(&d, &Pattern::singleton(1), &vec![15].into(), 10).is_err());
    }

    #[test]
    fn frequency_full_cube_on_full_window() {
        // anchors 7..=10 see a truncated cube at the window edge
        let full = crate::geometry::DeloneSet::full(w1(0, 10));
        let eta = pattern_frequency(&full, &Pattern::full_cube(1, 3), &vec![5].into(), 5).unwrap();
        assert_eq!(eta, Ratio::new(8, 11));
    }

    #[test]
    fn supf_periodic_deviation_bound() {
        let d = generate_periodic(1, 2, &w1(-200, 200)).unwrap();
        let centers: Vec<LatticePoint> = (0..6).map(|c| vec![c].into()).collect();
        let ls = [5, 10, 50, 100];
        let rep = supf_diagnostic(&d, &Pattern::singleton(1), &ls, &centers).unwrap();
        for (l, dev) in &rep.deviation_by_l {
            assert!(*dev <= 1.0 / (2 * l + 1) as f64 + 1e-15);
        }
        assert!(rep.strictly_positive);
        assert!((rep.limit_estimate - 0.5).abs() < 0.01);
        assert!(rep.rows.iter().all(|r| (0.0..=1.0).contains(&r.value)));
    }

    #[test]
    fn supf_absent_pattern() {
        let d = generate_periodic(1, 2, &w1(-50, 50)).unwrap();
        let q = p1(&[0, 1], 1);
        let rep = supf_diagnostic(&d, &q, &[5, 10], &[vec![0].into()]).unwrap();
        assert!(rep.rows.iter().all(|r| r.value == 0.0));
        assert!(!rep.strictly_positive);
    }

    #[test]
    fn repetitions_greedy() {
        let d = generate_periodic(1, 2, &w1(-10, 120)).unwrap();
        let q = Pattern::content_at(&d, &vec![0].into(), 3);
        assert_eq!(q, p1(&[0, 2], 3));
        let rep = find_disjoint_repetitions(&d, &q, 3, &w1(0, 100)).unwrap();
        let got: Vec<i64> = rep.translations.iter().map(|p| p.coords()[0]).collect();
        assert_eq!(got, vec![0, 4, 8]);
        assert!(!rep.insufficient);

        let full = crate::geometry::DeloneSet::full(w1(0, 20));
        let rep = find_disjoint_repetitions(&full, &Pattern::full_cube(1, 2), 2, &w1(0, 20)).unwrap();
        let got: Vec<i64> = rep.translations.iter().map(|p| p.coords()[0]).collect();
        assert_eq!(got, vec![0, 3]);

        let rep = find_disjoint_repetitions(&full, &Pattern::full_cube(1, 2), 100, &w1(0, 20)).unwrap();
        assert!(rep.insufficient);
        // anchors 0, 3, …, 18
        assert_eq!(rep.translations.len(), 7);
    }

    #[test]
    fn repetitions_in_sturmian() {
        let w = w1(0, 100_000);
        let d = generate_sturmian(Rotation::golden(), 0.5, &w, false).unwrap();
        let q = Pattern::content_at(&d, &vec![37].into(), 6);
        let rep = find_disjoint_repetitions(&d, &q, 5, &w).unwrap();
        assert_eq!(rep.translations.len(), 5);
        for v in &rep.translations {
            assert_eq!(Pattern::content_at(&d, v, 6), q);
        }
    }
}
