//! Finite-volume operators on boxes `Λ_L(x)`.
//!
//! Every operator here is the simple (Dirichlet) restriction of a lattice
//! operator: the principal submatrix on the box sites. The diagonal of the
//! Laplacian part stays `2d` at boundary sites, so `0 <= H_{0,x,L} <= 4d`.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::disorder::DisorderSpec;
use crate::geometry::grid::{centered_block_sums, strides};
use crate::geometry::{DeloneSet, LatticePoint, Window};
use crate::rng::stream;
use crate::{Error, Result};

const PARALLEL_ROWS: usize = 1 << 15;

/// The box `Λ_L(x) = x + {-L, …, L}^d`.
///
/// Sites are indexed lexicographically, last axis fastest (see
/// [`Window::index_of`]); the sample streams depend on this order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct BoxSpec {
    pub center: LatticePoint,
    pub half_width: usize,
}

impl BoxSpec {
    pub fn new(center: LatticePoint, half_width: usize) -> Self {
        BoxSpec { center, half_width }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.side(); self.dim()]
    }

    /// `(2L + 1)^d`
    pub fn n_sites(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn window(&self) -> Window {
        Window::centered(&self.center, self.half_width)
    }

    pub fn site(&self, index: usize) -> LatticePoint {
        self.window().point_at(index)
    }

    pub fn index_of(&self, p: &LatticePoint) -> Option<usize> {
        self.window().index_of(p)
    }

    /// Indices of the box sites that belong to `set`, ascending.
    pub fn delone_sites(&self, set: &DeloneSet) -> Vec<usize> {
        self.window().iter().enumerate().filter(|(_, p)| set.contains(p)).map(|(i, _)| i).collect()
    }

    fn check_inside(&self, set: &DeloneSet) -> Result<()> {
        if set.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: set.dim(), got: self.dim() });
        }
        if !set.window().contains_window(&self.window()) {
            return Err(Error::OutOfWindow(format!("Λ_{}({}) exceeds {}", self.half_width, self.center, set.window())));
        }
        Ok(())
    }
}

/// A real symmetric matrix in compressed sparse row form.
///
/// Both triangles are stored; column indices are ascending within a row.
/// `bounds` encloses the spectrum and is used to rescale polynomial
/// propagators.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSymmetricOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    bounds: (f64, f64),
}

impl SparseSymmetricOperator {
    /// Builds from per-row `(column, value)` lists. Fails unless the
    /// stored entries are exactly symmetric.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, bounds: (f64, f64)) -> Result<Self> {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if c >= n {
                    return Err(Error::invalid(format!("column {c} out of range {n}")));
                }
                if cols.len() > *row_ptr.last().unwrap() && *cols.last().unwrap() == c {
                    return Err(Error::invalid(format!("duplicate entry in column {c}")));
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        let op = SparseSymmetricOperator { n, row_ptr, cols, vals, bounds };
        if !op.is_symmetric() {
            return Err(Error::invalid("stored entries are not symmetric"));
        }
        Ok(op)
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        SparseSymmetricOperator {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: diag.to_vec(),
            bounds: (lo.min(hi), hi.max(lo)),
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Spectral enclosure `(lower, upper)` known at assembly time.
    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Exact entrywise symmetry of the stored pattern and values.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i).to_bits() == v.to_bits()))
    }

    /// `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n).flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j))).max().unwrap_or(0)
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut d = 0.0;
            let mut off = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    d = v;
                } else {
                    off += v.abs();
                }
            }
            lo = lo.min(d - off);
            hi = hi.max(d + off);
        }
        (lo, hi)
    }

    /// `y = H x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// Rows are split across the rayon pool for large operators.
    pub fn apply_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        let row = |i: usize| -> Complex64 {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            self.cols[r.clone()].iter().zip(&self.vals[r]).map(|(&c, &v)| x[c] * v).sum()
        };
        if self.n >= PARALLEL_ROWS {
            y[..self.n].par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        } else {
            y[..self.n].iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.apply(x, &mut y);
        y
    }

    /// `⟨H x, x⟩`
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `scale·H + shift·I`, with the bounds mapped accordingly.
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = scale * self.vals[k];
                out.vals[k] = if self.cols[k] == i { v + shift } else { v };
            }
        }
        let (a, b) = (scale * self.bounds.0 + shift, scale * self.bounds.1 + shift);
        out.bounds = (a.min(b), a.max(b));
        out
    }

    pub fn to_dense(&self) -> faer::Mat<f64> {
        let mut m = faer::Mat::<f64>::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// `row col value` per stored entry, values to 17 significant digits.
    pub fn to_triplets(&self) -> String {
        let mut out = String::with_capacity(self.nnz() * 32);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                let _ = writeln!(out, "{i} {j} {v:.16e}");
            }
        }
        out
    }
}

/// Nearest-neighbor hopping term of a box with `off` on every bond and
/// `diag[i]` on the diagonal.
fn box_operator(b: &BoxSpec, diag: &[f64], off: f64, bounds: (f64, f64)) -> SparseSymmetricOperator {
    let shape = b.shape();
    let st = strides(&shape);
    let side = b.side();
    let n = b.n_sites();
    let d = b.dim();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(n * (2 * d + 1));
    let mut vals = Vec::with_capacity(n * (2 * d + 1));
    row_ptr.push(0);
    for i in 0..n {
        // axis with the largest stride first keeps columns ascending
        for axis in 0..d {
            if (i / st[axis]) % side > 0 {
                cols.push(i - st[axis]);
                vals.push(off);
            }
        }
        cols.push(i);
        vals.push(diag[i]);
        for axis in (0..d).rev() {
            if (i / st[axis]) % side + 1 < side {
                cols.push(i + st[axis]);
                vals.push(off);
            }
        }
        row_ptr.push(cols.len());
    }
    SparseSymmetricOperator { n, row_ptr, cols, vals, bounds }
}

/// `H_{0,x,L}`: diagonal `2d`, `-1` between box-internal nearest neighbors.
pub fn assemble_laplacian(b: &BoxSpec) -> SparseSymmetricOperator {
    let d = b.dim() as f64;
    box_operator(b, &vec![2.0 * d; b.n_sites()], -1.0, (0.0, 4.0 * d))
}

/// One draw of `ω` on `D ∩ Λ_L(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialSample {
    pub box_spec: BoxSpec,
    /// Box indices of `D ∩ Λ_L(x)`, ascending.
    pub sites: Vec<usize>,
    pub values: Vec<f64>,
    pub m: f64,
    pub master_seed: u64,
    pub sample_index: u64,
}

impl PotentialSample {
    /// A sample with explicitly given values on `D ∩ Λ_L(x)`.
    pub fn from_values(set: &DeloneSet, b: &BoxSpec, values: Vec<f64>, m: f64) -> Result<Self> {
        b.check_inside(set)?;
        let sites = b.delone_sites(set);
        if values.len() != sites.len() {
            return Err(Error::DimensionMismatch { expected: sites.len(), got: values.len() });
        }
        if values.iter().any(|v| !(0.0..=m).contains(v)) {
            return Err(Error::invalid(format!("potential values must lie in [0, {m}]")));
        }
        Ok(PotentialSample { box_spec: b.clone(), sites, values, m, master_seed: 0, sample_index: 0 })
    }

    /// `V_ω` as a full diagonal over the box, zero off `D`.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.box_spec.n_sites()];
        for (&s, &x) in self.sites.iter().zip(&self.values) {
            v[s] = x;
        }
        v
    }
}

/// i.i.d. draws, one per site of `D ∩ Λ_L(x)` in site order, from the
/// stream of `(master_seed, sample_index)`.
pub fn sample_potential(
    set: &DeloneSet,
    b: &BoxSpec,
    disorder: &DisorderSpec,
    master_seed: u64,
    sample_index: u64,
) -> Result<PotentialSample> {
    b.check_inside(set)?;
    let sites = b.delone_sites(set);
    let mut rng = stream(master_seed, sample_index);
    let values = sites.iter().map(|_| disorder.sample(&mut rng)).collect();
    Ok(PotentialSample { box_spec: b.clone(), sites, values, m: disorder.m, master_seed, sample_index })
}

fn check_sample(b: &BoxSpec, set: &DeloneSet, sample: &PotentialSample) -> Result<()> {
    if sample.box_spec != *b {
        return Err(Error::invalid("sample was drawn for a different box"));
    }
    b.check_inside(set)?;
    if sample.sites != b.delone_sites(set) {
        return Err(Error::invalid("sample sites differ from D ∩ Λ_L(x)"));
    }
    Ok(())
}

/// `H_{ω,x,L} = H_{0,x,L} + V_ω` restricted to the box.
pub fn assemble_hamiltonian(b: &BoxSpec, set: &DeloneSet, sample: &PotentialSample) -> Result<SparseSymmetricOperator> {
    check_sample(b, set, sample)?;
    let d = b.dim() as f64;
    let diag: Vec<f64> = sample.diagonal().iter().map(|v| 2.0 * d + v).collect();
    Ok(box_operator(b, &diag, -1.0, (0.0, 4.0 * d + sample.m)))
}

/// `V_{x,L}`: indicator of `D ∩ Λ_L(x)` over the box.
pub fn assemble_deterministic_delone_potential(b: &BoxSpec, set: &DeloneSet) -> Result<Vec<f64>> {
    b.check_inside(set)?;
    Ok(b.window().iter().map(|p| if set.contains(&p) { 1.0 } else { 0.0 }).collect())
}

/// `H̃ = (Δ + 4d) + M·χ_{Λ∖D} + ω̃·χ_D` with `ω̃ = M - ω`, assembled
/// directly. Equal to `(4d + M) - H_{ω,x,L}`.
pub fn assemble_reflected(
    b: &BoxSpec,
    set: &DeloneSet,
    disorder: &DisorderSpec,
    sample: &PotentialSample,
) -> Result<SparseSymmetricOperator> {
    check_sample(b, set, sample)?;
    if (sample.m - disorder.m).abs() > 0.0 {
        return Err(Error::invalid("sample and disorder disagree on M"));
    }
    let d = b.dim() as f64;
    let m = disorder.m;
    let mut background = vec![m; b.n_sites()];
    for (&s, &w) in sample.sites.iter().zip(&sample.values) {
        background[s] = m - w;
    }
    let diag: Vec<f64> = background.iter().map(|v| 2.0 * d + v).collect();
    Ok(box_operator(b, &diag, 1.0, (0.0, 4.0 * d + m)))
}

/// The affine route: `(4d + M)·I - H`.
pub fn reflect(h: &SparseSymmetricOperator, dim: usize, m: f64) -> SparseSymmetricOperator {
    h.affine(-1.0, 4.0 * dim as f64 + m)
}

/// `W(n) = (4RK+1)^{-d} Σ_{γ ∈ Λ_{2RK}(0)} V(n - γ)` with `V` extended by
/// zero outside the box.
pub fn averaged_potential(b: &BoxSpec, diag: &[f64], r: u64, k: u64) -> Result<Vec<f64>> {
    if r < 1 || k < 1 {
        return Err(Error::invalid("R and K must be at least 1"));
    }
    if diag.len() != b.n_sites() {
        return Err(Error::DimensionMismatch { expected: b.n_sites(), got: diag.len() });
    }
    if b.half_width as u64 <= r * k {
        return Err(Error::invalid(format!("need L > RK, got L = {}, RK = {}", b.half_width, r * k)));
    }
    let radius = (2 * r * k) as usize;
    let norm = ((2 * radius + 1) as f64).powi(b.dim() as i32);
    Ok(centered_block_sums(diag, &b.shape(), radius).into_iter().map(|s| s / norm).collect())
}

/// `#(D ∩ Λ_L(x) ∩ Λ_radius(n))` for every box site `n`, in exact integers.
pub(crate) fn neighborhood_counts(b: &BoxSpec, set: &DeloneSet, radius: usize) -> Result<Vec<i64>> {
    b.check_inside(set)?;
    let occ: Vec<i64> = b.window().iter().map(|p| set.contains(&p) as i64).collect();
    Ok(centered_block_sums(&occ, &b.shape(), radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::generate_periodic;

    fn line(lo: i64, hi: i64) -> Window {
        Window::cube_range(1, lo, hi).unwrap()
    }

    #[test]
    fn laplacian_single_site_and_chain() {
        let h = assemble_laplacian(&BoxSpec::new(vec![0].into(), 0));
        assert_eq!(h.dimension(), 1);
        assert_eq!(h.get(0, 0), 2.0);
        let h = assemble_laplacian(&BoxSpec::new(vec![0].into(), 1));
        assert_eq!(h.to_triplets().lines().count(), 7);
        assert_eq!(h.get(0, 1), -1.0);
        assert_eq!(h.get(0, 2), 0.0);
        assert_eq!(h.bandwidth(), 1);
    }

    #[test]
    fn laplacian_2d_structure() {
        let b = BoxSpec::new(vec![0, 0].into(), 2);
        let h = assemble_laplacian(&b);
        assert!(h.is_symmetric());
        assert_eq!(h.bandwidth(), 5);
        // corner has two neighbors, interior four
        assert_eq!(h.row(0).count(), 3);
        assert_eq!(h.row(12).count(), 5);
        for i in 0..h.dimension() {
            for (j, v) in h.row(i) {
                if i != j {
                    assert_eq!(v, -1.0);
                    assert_eq!(b.site(i).diff(&b.site(j)).l1_norm(), 1);
                }
            }
        }
        assert_eq!(h.gershgorin(), (0.0, 8.0));
    }

    #[test]
    fn delone_potential_parity() {
        let d = generate_periodic(1, 2, &line(-10, 10)).unwrap();
        let b = BoxSpec::new(vec![0].into(), 2);
        let v = assemble_deterministic_delone_potential(&b, &d).unwrap();
        assert_eq!(v, vec![1.0, 0.0, 1.0, 0.0, 1.0]);
        let full = DeloneSet::full(line(-10, 10));
        assert!(assemble_deterministic_delone_potential(&b, &full).unwrap().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn sampling_is_reproducible_and_bounded() {
        let d = generate_periodic(1, 3, &line(-50, 50)).unwrap();
        let b = BoxSpec::new(vec![0].into(), 20);
        let law = DisorderSpec::uniform(2.5).unwrap();
        let s1 = sample_potential(&d, &b, &law, 5, 9).unwrap();
        let s2 = sample_potential(&d, &b, &law, 5, 9).unwrap();
        let s3 = sample_potential(&d, &b, &law, 5, 10).unwrap();
        assert_eq!(s1, s2);
        assert_ne!(s1.values, s3.values);
        assert_eq!(s1.sites.len(), 13);
        assert!(s1.values.iter().all(|v| (0.0..=2.5).contains(v)));
        let outside = BoxSpec::new(vec![45].into(), 20);
        assert!(sample_potential(&d, &outside, &law, 5, 9).is_err());
    }

    #[test]
    fn zero_potential_is_laplacian() {
        let d = DeloneSet::full(Window::cube_range(2, -5, 5).unwrap());
        let b = BoxSpec::new(vec![0, 1].into(), 3);
        let zero = PotentialSample::from_values(&d, &b, vec![0.0; 49], 1.0).unwrap();
        let h = assemble_hamiltonian(&b, &d, &zero).unwrap();
        let h0 = assemble_laplacian(&b);
        assert_eq!(h.to_triplets(), h0.to_triplets());
    }

    #[test]
    fn reflected_single_site() {
        let d = DeloneSet::new(line(0, 0), vec![vec![0].into()], 1).unwrap();
        let b = BoxSpec::new(vec![0].into(), 0);
        let law = DisorderSpec::uniform(3.0).unwrap();
        let s = PotentialSample::from_values(&d, &b, vec![1.25], 3.0).unwrap();
        let ht = assemble_reflected(&b, &d, &law, &s).unwrap();
        assert_eq!(ht.get(0, 0), 2.0 + 3.0 - 1.25);
        let h = assemble_hamiltonian(&b, &d, &s).unwrap();
        assert_eq!(reflect(&h, 1, 3.0), ht);
    }

    #[test]
    fn reflected_at_top_of_support() {
        // ω ≡ M: background M on the complement only
        let d = generate_periodic(1, 2, &line(-6, 6)).unwrap();
        let b = BoxSpec::new(vec![0].into(), 3);
        let law = DisorderSpec::uniform(2.0).unwrap();
        let s = PotentialSample::from_values(&d, &b, vec![2.0; 3], 2.0).unwrap();
        let ht = assemble_reflected(&b, &d, &law, &s).unwrap();
        let diag = ht.diagonal();
        assert_eq!(diag, vec![4.0, 2.0, 4.0, 2.0, 4.0, 2.0, 4.0]);
        assert_eq!(ht.get(0, 1), 1.0);
    }

    #[test]
    fn averaged_potential_examples() {
        let d = DeloneSet::full(line(-20, 20));
        let b = BoxSpec::new(vec![0].into(), 5);
        let v = assemble_deterministic_delone_potential(&b, &d).unwrap();
        let w = averaged_potential(&b, &v, 1, 1).unwrap();
        assert_eq!(w[5], 1.0);
        assert!((w[10] - 0.6).abs() < 1e-15);
        let c = vec![0.7; 11];
        let w = averaged_potential(&b, &c, 1, 1).unwrap();
        assert!((w[5] - 0.7).abs() < 1e-15);
        assert!(averaged_potential(&b, &c, 5, 1).is_err());
        assert!(averaged_potential(&b, &c, 2, 3).is_err());
    }

    #[test]
    fn triplets_have_17_digits() {
        let h = assemble_laplacian(&BoxSpec::new(vec![0].into(), 0)).affine(1.0 / 3.0, 0.0);
        let line = h.to_triplets();
        let value: f64 = line.split_whitespace().nth(2).unwrap().parse().unwrap();
        assert_eq!(value, 2.0 / 3.0);
    }
}
