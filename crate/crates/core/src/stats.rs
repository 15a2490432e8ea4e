//! Monte Carlo scans for the Wegner estimate, the initial length scale
//! gap and the spectral edges.
//!
//! Sample `s` at center index `c` always uses the stream
//! `(derive_seed(master_seed, c), s)`, so samples are coupled across
//! energies, widths and interval lengths.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::disorder::DisorderSpec;
use crate::geometry::{compute_r, DeloneSet, LatticePoint};
use crate::operator::{assemble_hamiltonian, sample_potential, BoxSpec, SparseSymmetricOperator};
use crate::rng::derive_seed;
use crate::spectral::{eig_extremal, eigenvalues_full, lowest_eigenvalue, tridiagonal, Side};
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Tolerance for extremal eigenvalues computed by Lanczos.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Wilson score interval for `hits` successes in `n` trials.
pub fn wilson_ci(hits: usize, n: usize, z: f64) -> Result<(f64, f64)> {
    if n == 0 || hits > n {
        return Err(Error::invalid(format!("invalid counts {hits}/{n}")));
    }
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Ok(((center - half).max(0.0).min(p), (center + half).min(1.0).max(p)))
}

/// `|Λ_L| = (2L + 1)^d`
pub fn box_volume(b: &BoxSpec) -> f64 {
    b.n_sites() as f64
}

/// Spectral data of one sample that answers interval-count queries.
enum Counter {
    Sturm(SparseSymmetricOperator),
    Sorted(Vec<f64>),
}

impl Counter {
    fn new(h: SparseSymmetricOperator) -> Result<Self> {
        if h.bandwidth() <= 1 {
            Ok(Counter::Sturm(h))
        } else {
            Ok(Counter::Sorted(eigenvalues_full(&h)?))
        }
    }

    /// Whether some eigenvalue lies in `[e - eta, e + eta]`.
    fn hits(&self, e: f64, eta: f64) -> bool {
        let (a, b) = (e - eta, e + eta);
        match self {
            Counter::Sturm(h) => {
                let above = tridiagonal::count_below(h, b.next_up());
                above > tridiagonal::count_below(h, a)
            }
            Counter::Sorted(v) => {
                let i = v.partition_point(|&l| l < a);
                i < v.len() && v[i] <= b
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WegnerCell {
    pub energy: f64,
    pub eta: f64,
    pub half_width: usize,
    pub center: LatticePoint,
    pub center_index: usize,
    pub nsamples: usize,
    pub hits: usize,
    pub phat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub volume: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WegnerReport {
    pub cells: Vec<WegnerCell>,
    pub master_seed: u64,
    /// Set when the energy lies above the averaging threshold `E_W`.
    pub warnings: Vec<String>,
}

impl WegnerReport {
    pub const CSV_HEADER: &'static str = "E,eta,L,center,nsamples,phat,ci_lo,ci_hi";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                c.energy, c.eta, c.half_width, c.center, c.nsamples, c.phat, c.ci_lo, c.ci_hi
            );
        }
        out
    }

    /// The cells whose center index satisfies `keep`.
    pub fn filter_centers(&self, keep: impl Fn(usize) -> bool) -> WegnerReport {
        WegnerReport {
            cells: self.cells.iter().filter(|c| keep(c.center_index)).cloned().collect(),
            master_seed: self.master_seed,
            warnings: self.warnings.clone(),
        }
    }
}

/// `P(dist(σ(H_{ω,x,L}), E) <= η)` estimated per `(E, η, L, x)`.
///
/// `e_w`, when given, is the threshold the energy is compared against for
/// the warning.
#[allow(clippy::too_many_arguments)]
pub fn wegner_scan(
    set: &DeloneSet,
    disorder: &DisorderSpec,
    energy: f64,
    etas: &[f64],
    half_widths: &[usize],
    centers: &[LatticePoint],
    nsamples: usize,
    master_seed: u64,
    e_w: Option<f64>,
) -> Result<WegnerReport> {
    if etas.is_empty() || half_widths.is_empty() || centers.is_empty() || nsamples == 0 {
        return Err(Error::invalid("wegner scan needs etas, widths, centers and samples"));
    }
    if etas.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::invalid("eta must be nonnegative"));
    }
    let mut warnings = Vec::new();
    if let Some(e_w) = e_w {
        if energy > e_w {
            warnings.push(format!("E = {energy} lies above E_W = {e_w}"));
        }
    }
    let mut cells = Vec::new();
    for &l in half_widths {
        for (ci, center) in centers.iter().enumerate() {
            let b = BoxSpec::new(center.clone(), l);
            let seed = derive_seed(master_seed, ci as u64);
            let hits: Vec<Vec<bool>> = (0..nsamples)
                .into_par_iter()
                .map(|s| {
                    let sample = sample_potential(set, &b, disorder, seed, s as u64)?;
                    let counter = Counter::new(assemble_hamiltonian(&b, set, &sample)?)?;
                    Ok(etas.iter().map(|&eta| counter.hits(energy, eta)).collect())
                })
                .collect::<Result<_>>()?;
            for (k, &eta) in etas.iter().enumerate() {
                let count = hits.iter().filter(|h| h[k]).count();
                let (ci_lo, ci_hi) = wilson_ci(count, nsamples, Z95)?;
                cells.push(WegnerCell {
                    energy,
                    eta,
                    half_width: l,
                    center: center.clone(),
                    center_index: ci,
                    nsamples,
                    hits: count,
                    phat: count as f64 / nsamples as f64,
                    ci_lo,
                    ci_hi,
                    volume: box_volume(&b),
                });
            }
        }
    }
    Ok(WegnerReport { cells, master_seed, warnings })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QwFit {
    pub q_w: f64,
    /// `max_x Q_W(x) / min_x Q_W(x)`
    pub uniformity: f64,
    pub per_center: Vec<(usize, f64)>,
}

/// `Q_W = max_cells ci_hi / (η |Λ_L|)` and its spread over centers.
pub fn fit_qw(report: &WegnerReport) -> Result<QwFit> {
    if report.cells.is_empty() {
        return Err(Error::invalid("empty Wegner report"));
    }
    if report.cells.iter().any(|c| c.eta == 0.0) {
        return Err(Error::invalid("cells with eta = 0 cannot be fitted"));
    }
    let mut per_center: Vec<(usize, f64)> = Vec::new();
    for c in &report.cells {
        let q = c.ci_hi / (c.eta * c.volume);
        match per_center.iter_mut().find(|(i, _)| *i == c.center_index) {
            Some(entry) => entry.1 = entry.1.max(q),
            None => per_center.push((c.center_index, q)),
        }
    }
    per_center.sort_by_key(|e| e.0);
    let q_w = per_center.iter().map(|e| e.1).fold(0.0, f64::max);
    let q_min = per_center.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    Ok(QwFit { q_w, uniformity: q_w / q_min, per_center })
}

/// Fraction of cells with `P̂ <= Q_W η |Λ_L|`.
pub fn bound_coverage(report: &WegnerReport, q_w: f64) -> f64 {
    if report.cells.is_empty() {
        return 1.0;
    }
    let ok = report.cells.iter().filter(|c| c.phat <= q_w * c.eta * c.volume).count();
    ok as f64 / report.cells.len() as f64
}

/// `R^{-2(d+2)} (log L)^{-2/d}`
pub fn ilse_threshold_shape(d: usize, r: u64, half_width: usize) -> f64 {
    (r as f64).powi(-2 * (d as i32 + 2)) * (half_width as f64).ln().powf(-2.0 / d as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IlseCell {
    pub half_width: usize,
    pub center: LatticePoint,
    pub center_index: usize,
    /// In sample order.
    pub lambda_min: Vec<f64>,
    /// `λ_min(H_{0,L})`
    pub free_lambda_min: f64,
    /// Largest `c` meeting the probability requirement in this cell.
    pub c_cell: f64,
    /// Empirical probability of `λ_min >= C_fit · shape(L)`.
    pub exceed_probability: f64,
}

impl IlseCell {
    /// Empirical `q`-quantile (order statistic `floor(q n)`).
    pub fn quantile(&self, q: f64) -> f64 {
        let mut v = self.lambda_min.clone();
        v.sort_by(f64::total_cmp);
        let i = ((q * v.len() as f64).floor() as usize).min(v.len() - 1);
        v[i]
    }

    pub fn mean(&self) -> f64 {
        self.lambda_min.iter().sum::<f64>() / self.lambda_min.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IlseReport {
    pub cells: Vec<IlseCell>,
    pub r: u64,
    pub d: usize,
    /// The probability exponent.
    pub p: f64,
    /// Fitted stand-in for the constant of the gap estimate.
    pub c_fit: f64,
    /// Least-squares slope of `ln mean λ_min` against `ln ln L`; the
    /// threshold shape predicts `-2/d`, so a negative value is the
    /// expected sign.
    pub trend_slope: f64,
    pub master_seed: u64,
}

impl IlseReport {
    pub const CSV_HEADER: &'static str = "L,center,sample,lambda_min";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            for (s, l) in c.lambda_min.iter().enumerate() {
                let _ = writeln!(out, "{},{},{},{}", c.half_width, c.center, s, l);
            }
        }
        out
    }

    pub fn threshold(&self, half_width: usize) -> f64 {
        self.c_fit * ilse_threshold_shape(self.d, self.r, half_width)
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        f64::NAN
    } else {
        sxy / sxx
    }
}

/// Samples of `λ_min(H_{ω,x,L})` and the fitted gap constant.
///
/// In a cell with `n` samples, at most `floor(n L^{-pd})` of them may fall
/// below the threshold, so the cell admits `c = λ_(j) / shape(L)` with `λ_(j)`
/// the order statistic of that index. `C_fit` is the minimum over cells.
pub fn ilse_scan(
    set: &DeloneSet,
    disorder: &DisorderSpec,
    half_widths: &[usize],
    centers: &[LatticePoint],
    nsamples: usize,
    p: f64,
    master_seed: u64,
) -> Result<IlseReport> {
    if half_widths.is_empty() || centers.is_empty() || nsamples == 0 {
        return Err(Error::invalid("ilse scan needs widths, centers and samples"));
    }
    if half_widths.iter().any(|&l| l < 3) {
        return Err(Error::invalid("ilse scan needs L >= 3"));
    }
    if !(p > 0.0) {
        return Err(Error::invalid("probability exponent p must be positive"));
    }
    let r = compute_r(set)?;
    let d = set.dim();
    let mut cells = Vec::new();
    for &l in half_widths {
        for (ci, center) in centers.iter().enumerate() {
            let b = BoxSpec::new(center.clone(), l);
            let seed = derive_seed(master_seed, ci as u64);
            let lambda_min: Vec<f64> = (0..nsamples)
                .into_par_iter()
                .map(|s| {
                    let sample = sample_potential(set, &b, disorder, seed, s as u64)?;
                    lowest_eigenvalue(&assemble_hamiltonian(&b, set, &sample)?, EIGEN_TOLERANCE)
                })
                .collect::<Result<_>>()?;
            let mut sorted = lambda_min.clone();
            sorted.sort_by(f64::total_cmp);
            let allowed = (nsamples as f64 * (l as f64).powf(-p * d as f64)).floor() as usize;
            let c_cell = sorted[allowed.min(nsamples - 1)] / ilse_threshold_shape(d, r, l);
            let free_lambda_min = d as f64 * (2.0 - 2.0 * (std::f64::consts::PI / (2 * l + 2) as f64).cos());
            cells.push(IlseCell {
                half_width: l,
                center: center.clone(),
                center_index: ci,
                lambda_min,
                free_lambda_min,
                c_cell,
                exceed_probability: 0.0,
            });
        }
    }
    let c_fit = cells.iter().map(|c| c.c_cell).fold(f64::INFINITY, f64::min);
    for c in &mut cells {
        let thr = c_fit * ilse_threshold_shape(d, r, c.half_width);
        let above = c.lambda_min.iter().filter(|&&x| x >= thr).count();
        c.exceed_probability = above as f64 / c.lambda_min.len() as f64;
    }
    let mut widths: Vec<usize> = half_widths.to_vec();
    widths.sort_unstable();
    widths.dedup();
    let (xs, ys): (Vec<f64>, Vec<f64>) = widths
        .iter()
        .map(|&l| {
            let at_l: Vec<&IlseCell> = cells.iter().filter(|c| c.half_width == l).collect();
            let mean = at_l.iter().map(|c| c.mean()).sum::<f64>() / at_l.len() as f64;
            ((l as f64).ln().ln(), mean.ln())
        })
        .unzip();
    let trend_slope = least_squares_slope(&xs, &ys);
    Ok(IlseReport { cells, r, d, p, c_fit, trend_slope, master_seed })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeReport {
    pub half_width: usize,
    pub nsamples: usize,
    pub min_lambda_min: f64,
    pub max_lambda_max: f64,
    /// `4d + M`
    pub upper_bound: f64,
    /// `4d + M - max λ_max`
    pub upper_gap: f64,
    /// Every sample spectrum lies in `[0, 4d + M]` to `1e-10`.
    pub contained: bool,
}

/// Empirical extremes of the spectrum on boxes centered at the origin.
pub fn edge_scan(
    set: &DeloneSet,
    disorder: &DisorderSpec,
    half_width: usize,
    nsamples: usize,
    master_seed: u64,
) -> Result<EdgeReport> {
    if nsamples == 0 {
        return Err(Error::invalid("edge scan needs samples"));
    }
    let d = set.dim();
    let b = BoxSpec::new(LatticePoint::origin(d), half_width);
    let seed = derive_seed(master_seed, 0);
    let extremes: Vec<(f64, f64)> = (0..nsamples)
        .into_par_iter()
        .map(|s| {
            let sample = sample_potential(set, &b, disorder, seed, s as u64)?;
            let h = assemble_hamiltonian(&b, set, &sample)?;
            if h.bandwidth() <= 1 || h.dimension() <= 64 {
                let v = eigenvalues_full(&h)?;
                Ok((v[0], v[v.len() - 1]))
            } else {
                let lo = eig_extremal(&h, 1, Side::Low, EIGEN_TOLERANCE)?.eigenvalues[0];
                let hi = eig_extremal(&h, 1, Side::High, EIGEN_TOLERANCE)?.eigenvalues[0];
                Ok((lo, hi))
            }
        })
        .collect::<Result<_>>()?;
    let min_lambda_min = extremes.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let max_lambda_max = extremes.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let upper_bound = 4.0 * d as f64 + disorder.m;
    Ok(EdgeReport {
        half_width,
        nsamples,
        min_lambda_min,
        max_lambda_max,
        upper_bound,
        upper_gap: upper_bound - max_lambda_max,
        contained: min_lambda_min >= -1e-10 && max_lambda_max <= upper_bound + 1e-10,
    })
}

/// Fitted constants of a statistics run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsSummary {
    pub q_w: Option<f64>,
    pub uniformity: Option<f64>,
    pub c_fit: Option<f64>,
    pub p: Option<f64>,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;

    fn single_site() -> DeloneSet {
        DeloneSet::full(Window::cube_range(1, 0, 0).unwrap())
    }

    #[test]
    fn wilson_known_values() {
        // 0 of 10: upper bound z²/(n + z²)
        let (lo, hi) = wilson_ci(0, 10, Z95).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - Z95 * Z95 / (10.0 + Z95 * Z95)).abs() < 1e-15);
        let (lo, hi) = wilson_ci(10, 10, Z95).unwrap();
        assert!((lo - 10.0 / (10.0 + Z95 * Z95)).abs() < 1e-15);
        assert_eq!(hi, 1.0);
        // 50 of 100, symmetric about 1/2
        let (lo, hi) = wilson_ci(50, 100, Z95).unwrap();
        assert!((lo + hi - 1.0).abs() < 1e-15);
        assert!((hi - 0.596_168_469_634_004_4).abs() < 1e-12);
        assert!(wilson_ci(3, 2, Z95).is_err());
    }

    #[test]
    fn one_site_oracle() {
        let set = single_site();
        let law = DisorderSpec::uniform(1.0).unwrap();
        let origin = LatticePoint::origin(1);
        let rep = wegner_scan(&set, &law, 2.5, &[0.1], &[0], &[origin], 10_000, 3, None).unwrap();
        let c = &rep.cells[0];
        assert!(c.ci_lo <= 0.2 && 0.2 <= c.ci_hi);
        let fit = fit_qw(&rep).unwrap();
        assert!(fit.q_w >= 2.0);
        assert_eq!(fit.uniformity, 1.0);
    }

    #[test]
    fn trivial_eta() {
        let set = single_site();
        let law = DisorderSpec::uniform(1.0).unwrap();
        let origin = LatticePoint::origin(1);
        let rep = wegner_scan(&set, &law, 2.5, &[0.0, 10.0], &[0], &[origin], 200, 1, None).unwrap();
        assert_eq!(rep.cells[0].phat, 0.0);
        assert_eq!(rep.cells[1].phat, 1.0);
        assert!(fit_qw(&rep).is_err());
    }

    #[test]
    fn monotone_in_eta() {
        let set = DeloneSet::full(Window::cube_range(1, -10, 10).unwrap());
        let law = DisorderSpec::uniform(1.0).unwrap();
        let etas = [0.001, 0.01, 0.05, 0.1];
        let rep = wegner_scan(&set, &law, 0.2, &etas, &[5], &[LatticePoint::origin(1)], 300, 9, Some(0.1)).unwrap();
        assert_eq!(rep.warnings.len(), 1);
        for w in rep.cells.windows(2) {
            assert!(w[0].hits <= w[1].hits);
        }
        let dense = DeloneSet::full(Window::cube_range(2, -3, 3).unwrap());
        let rep2 = wegner_scan(&dense, &law, 0.5, &etas, &[2], &[LatticePoint::origin(2)], 50, 9, None).unwrap();
        for w in rep2.cells.windows(2) {
            assert!(w[0].hits <= w[1].hits);
        }
    }

    #[test]
    fn deterministic_shift_and_lift() {
        let set = DeloneSet::full(Window::cube_range(1, -20, 20).unwrap());
        let law = DisorderSpec::constant(1.0, 0.25).unwrap();
        let rep = ilse_scan(&set, &law, &[10], &[LatticePoint::origin(1)], 3, 1.0, 0).unwrap();
        let cell = &rep.cells[0];
        for l in &cell.lambda_min {
            assert!((l - cell.free_lambda_min - 0.25).abs() < 1e-12);
        }
        assert!(cell.exceed_probability >= 1.0 - 10f64.powf(-1.0));
    }

    #[test]
    fn lambda_min_above_free() {
        let set = DeloneSet::full(Window::cube_range(1, -40, 40).unwrap());
        let law = DisorderSpec::uniform(1.0).unwrap();
        let rep = ilse_scan(&set, &law, &[10, 30], &[LatticePoint::origin(1)], 40, 1.0, 5).unwrap();
        for c in &rep.cells {
            assert!(c.lambda_min.iter().all(|&l| l >= c.free_lambda_min - 1e-12));
            assert!(c.exceed_probability >= 1.0 - (c.half_width as f64).powi(-1) - 1e-12);
        }
        assert!(rep.to_csv().starts_with("L,center,sample,lambda_min\n"));
    }

    #[test]
    fn edges_free_and_shifted() {
        let set = DeloneSet::full(Window::cube_range(1, -30, 30).unwrap());
        let n = 21.0;
        let free_max = 2.0 + 2.0 * (std::f64::consts::PI / (n + 1.0)).cos();
        let zero = edge_scan(&set, &DisorderSpec::constant(1.0, 0.0).unwrap(), 10, 2, 0).unwrap();
        assert!((zero.max_lambda_max - free_max).abs() < 1e-12);
        assert!(zero.max_lambda_max < 4.0);
        let top = edge_scan(&set, &DisorderSpec::constant(1.0, 1.0).unwrap(), 10, 2, 0).unwrap();
        assert!((top.max_lambda_max - free_max - 1.0).abs() < 1e-12);
        assert!(top.contained);
        let set2 = DeloneSet::full(Window::cube_range(2, -12, 12).unwrap());
        let rnd = edge_scan(&set2, &DisorderSpec::uniform(2.0).unwrap(), 10, 3, 4).unwrap();
        assert!(rnd.contained && rnd.upper_gap > 0.0);
    }
}
