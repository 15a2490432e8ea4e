//! Checks of the spatial-averaging argument behind the Wegner and initial
//! length scale estimates.
//!
//! With `W_L` the average of the Delone indicator `V_{x,L}` over cubes of
//! radius `2R`, every `φ` in the spectral subspace of `H_{0,x,L}` below
//! `E_W` satisfies `⟨V_{x,L} φ, φ⟩ >= C ‖φ‖²` with
//!
//! ```text
//! Ẽ_W = (8√2 · d · R · (4R+1)^d)^{-2},   E_W = q² Ẽ_W,   C = (1 - q)(4R+1)^{-d}.
//! ```
//!
//! The functions here evaluate each link of that chain numerically.

use std::fmt::Write as _;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::disorder::DisorderSpec;
use crate::geometry::{compute_r, DeloneSet, LatticePoint};
use crate::operator::{
    assemble_deterministic_delone_potential, assemble_laplacian, averaged_potential, neighborhood_counts,
    sample_potential, BoxSpec, SparseSymmetricOperator,
};
use crate::rng::{derive_seed, stream, unit_sphere};
use crate::spectral::{eig_extremal, spectral_projection_basis, Side, DENSE_THRESHOLD};
use crate::{Error, Result};

/// Tolerance on every inequality check below.
pub const CHECK_TOLERANCE: f64 = 1e-10;

/// Default `q`.
pub const DEFAULT_Q: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub d: usize,
    pub r: u64,
    pub q: f64,
    pub tilde_e_w: f64,
    pub e_w: f64,
    pub c: f64,
}

/// The same thresholds in exact rational arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactThresholds {
    pub tilde_e_w: Ratio<i128>,
    pub e_w: Ratio<i128>,
    pub c: Ratio<i128>,
}

/// `(4R+1)^d` and `128 d² R² (4R+1)^{2d}` as exact integers.
fn threshold_denominators(d: usize, r: u64) -> Result<(i128, i128)> {
    if d < 1 || r < 1 {
        return Err(Error::invalid("d and R must be at least 1"));
    }
    let overflow = || Error::invalid(format!("thresholds overflow for d = {d}, R = {r}"));
    let base = 4 * r as i128 + 1;
    let cover = base.checked_pow(d as u32).ok_or_else(overflow)?;
    let tilde = cover
        .checked_mul(cover)
        .and_then(|v| v.checked_mul(128 * (d as i128).pow(2)))
        .and_then(|v| v.checked_mul((r as i128).pow(2)))
        .ok_or_else(overflow)?;
    Ok((cover, tilde))
}

pub fn compute_thresholds(d: usize, r: u64, q: f64) -> Result<Thresholds> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("q must lie in (0, 1), got {q}")));
    }
    let (cover, tilde) = threshold_denominators(d, r)?;
    let tilde_e_w = 1.0 / tilde as f64;
    Ok(Thresholds { d, r, q, tilde_e_w, e_w: q * q * tilde_e_w, c: (1.0 - q) / cover as f64 })
}

pub fn compute_thresholds_exact(d: usize, r: u64, q: Ratio<i128>) -> Result<ExactThresholds> {
    let zero = Ratio::from_integer(0);
    let one = Ratio::from_integer(1);
    if q <= zero || q >= one {
        return Err(Error::invalid(format!("q must lie in (0, 1), got {q}")));
    }
    let (cover, tilde) = threshold_denominators(d, r)?;
    let tilde_e_w = Ratio::new(1, tilde);
    Ok(ExactThresholds { tilde_e_w, e_w: q * q * tilde_e_w, c: (one - q) / cover })
}

/// `λ_min(H_{0,L})` in `d` dimensions: `d · (2 - 2cos(π / (2L + 2)))`.
pub fn free_ground_energy(d: usize, half_width: usize) -> f64 {
    let n = (2 * half_width + 1) as f64;
    d as f64 * (2.0 - 2.0 * (std::f64::consts::PI / (n + 1.0)).cos())
}

/// Smallest `L > R` for which `ran P_{0,L}([0, E_W])` is nonempty.
pub fn minimal_nonvacuous_half_width(d: usize, r: u64, e_w: f64) -> usize {
    let mut l = r as usize + 1;
    while free_ground_energy(d, l) > e_w {
        l += 1;
    }
    l
}

/// Outcome of one certification test.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AveragingReport {
    pub test: String,
    pub parameters: String,
    /// Smallest `lhs - bound` seen; `>= -tolerance` means pass.
    pub worst_margin: f64,
    /// Test-specific ratio at the worst point (see each function).
    pub worst_ratio: f64,
    pub worst_index: Option<usize>,
    pub pass: bool,
    /// The tested subspace was empty; never reported as a pass.
    pub vacuous: bool,
    pub nsamples: usize,
    pub tolerance: f64,
    pub recommended_half_width: Option<usize>,
    /// Empirical frequency for probabilistic tests.
    pub frequency: Option<f64>,
}

impl AveragingReport {
    pub const CSV_HEADER: &'static str = "test,parameter_set,worst_margin,pass,vacuous,nsamples";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{},{},{}",
            self.test,
            self.parameters.replace(',', ";"),
            self.worst_margin,
            self.pass,
            self.vacuous,
            self.nsamples
        )
    }
}

/// `test,parameter_set,worst_margin,pass,vacuous,nsamples`
pub fn reports_to_csv(reports: &[AveragingReport]) -> String {
    let mut out = String::from(AveragingReport::CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Covering condition `W_L(n) >= (4R+1)^{-d}` on every box site, checked
/// in exact integers. `worst_ratio` is `min_n (4R+1)^d W_L(n)`, i.e. the
/// smallest number of points of `D ∩ Λ_L` within sup-distance `2R`.
pub fn check_covering(set: &DeloneSet, b: &BoxSpec, r: u64) -> Result<AveragingReport> {
    if b.half_width as u64 <= r {
        return Err(Error::invalid(format!("need L > R, got L = {}, R = {r}", b.half_width)));
    }
    let counts = neighborhood_counts(b, set, 2 * r as usize)?;
    let (worst_index, &min_count) = counts.iter().enumerate().min_by_key(|(_, &c)| c).expect("box is nonempty");
    Ok(AveragingReport {
        test: "covering".into(),
        parameters: format!("center={} L={} R={r}", b.center, b.half_width),
        worst_margin: (min_count - 1) as f64,
        worst_ratio: min_count as f64,
        worst_index: Some(worst_index),
        pass: min_count >= 1,
        vacuous: false,
        nsamples: counts.len(),
        tolerance: 0.0,
        recommended_half_width: None,
        frequency: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftBound {
    /// `‖φ(· + γ) - φ‖` over the whole lattice, `φ` extended by zero.
    pub lhs: f64,
    /// `(2Rd + 1) √(2 ⟨H₀ φ, φ⟩)`
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

/// One instance of the shortest-path telescoping bound.
pub fn check_shift_bound(
    b: &BoxSpec,
    h0: &SparseSymmetricOperator,
    phi: &[f64],
    gamma: &LatticePoint,
    r: u64,
) -> Result<ShiftBound> {
    if gamma.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), got: gamma.dim() });
    }
    if gamma.max_norm() > 2 * r as i64 {
        return Err(Error::invalid(format!("|γ|_∞ = {} exceeds 2R = {}", gamma.max_norm(), 2 * r)));
    }
    if phi.len() != b.n_sites() || h0.dimension() != b.n_sites() {
        return Err(Error::DimensionMismatch { expected: b.n_sites(), got: phi.len() });
    }
    let w = b.window();
    let mut sq = 0.0;
    for (i, p) in w.iter().enumerate() {
        // n = p - γ pairs φ(n + γ) = φ(p) with φ(n)
        let n = p.diff(gamma);
        let other = w.index_of(&n).map_or(0.0, |j| phi[j]);
        sq += (phi[i] - other).powi(2);
        // n + γ outside the box: the term is |φ(n)|² with n = p
        if w.index_of(&p.offset(gamma)).is_none() {
            sq += phi[i].powi(2);
        }
    }
    let lhs = sq.sqrt();
    let form = h0.quadratic_form(phi).max(0.0);
    let rhs = (2 * r * b.dim() as u64 + 1) as f64 * (2.0 * form).sqrt();
    let margin = rhs - lhs;
    Ok(ShiftBound { lhs, rhs, margin, pass: margin >= -CHECK_TOLERANCE })
}

/// Lemma-level certificate: `⟨V_{x,L} φ, φ⟩ >= C ‖φ‖²` on every basis
/// vector of `ran P_{0,x,L}([0, E_W])` and on `nsamples` random unit
/// combinations of them. `R` is computed from the set.
///
/// `worst_ratio` is `min ⟨Vφ,φ⟩/‖φ‖²` and `worst_margin` is that minus `C`.
pub fn certify_lemma_we(
    set: &DeloneSet,
    b: &BoxSpec,
    q: f64,
    nsamples: usize,
    master_seed: u64,
) -> Result<AveragingReport> {
    let r = compute_r(set)?;
    if b.half_width as u64 <= r {
        return Err(Error::invalid(format!("need L > R, got L = {}, R = {r}", b.half_width)));
    }
    let thr = compute_thresholds(b.dim(), r, q)?;
    let v = assemble_deterministic_delone_potential(b, set)?;
    let h0 = assemble_laplacian(b);
    let basis = spectral_projection_basis(&h0, 0.0, thr.e_w)?;
    let parameters = format!("center={} L={} R={r} q={q} E_W={:e}", b.center, b.half_width, thr.e_w);
    if basis.is_empty() {
        return Ok(AveragingReport {
            test: "lemma_we".into(),
            parameters,
            worst_margin: f64::NAN,
            worst_ratio: f64::NAN,
            worst_index: None,
            pass: false,
            vacuous: true,
            nsamples: 0,
            tolerance: CHECK_TOLERANCE,
            recommended_half_width: Some(minimal_nonvacuous_half_width(b.dim(), r, thr.e_w)),
            frequency: None,
        });
    }
    let ratio = |phi: &[f64]| {
        let num: f64 = phi.iter().zip(&v).map(|(p, w)| w * p * p).sum();
        let den: f64 = phi.iter().map(|p| p * p).sum();
        num / den
    };
    let dim = basis.dimension();
    let mut ratios: Vec<f64> = basis.vectors.iter().map(|phi| ratio(phi)).collect();
    let random: Vec<f64> = (0..nsamples)
        .into_par_iter()
        .map(|s| {
            let coeffs = unit_sphere(&mut stream(master_seed, s as u64), dim);
            let mut phi = vec![0.0; v.len()];
            for (c, vec) in coeffs.iter().zip(&basis.vectors) {
                phi.iter_mut().zip(vec).for_each(|(p, x)| *p += c * x);
            }
            ratio(&phi)
        })
        .collect();
    ratios.extend(random);
    let (worst_index, &worst) = ratios.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    let margin = worst - thr.c;
    Ok(AveragingReport {
        test: "lemma_we".into(),
        parameters: format!("{parameters} dim={dim}"),
        worst_margin: margin,
        worst_ratio: worst,
        worst_index: Some(worst_index),
        pass: margin >= -CHECK_TOLERANCE,
        vacuous: false,
        nsamples: ratios.len(),
        tolerance: CHECK_TOLERANCE,
        recommended_half_width: None,
        frequency: None,
    })
}

/// Number of low-lying free eigenvectors spanning the test vectors of
/// [`certify_lifting`].
pub const LIFTING_LOW_MODES: usize = 8;

/// Random lifting check for the initial length scale estimate.
///
/// Per disorder sample, with `W_{ω,L}` the average of `V_ω χ_Λ` over cubes
/// of radius `2RK`:
///
/// - (a) whether `min_n W_{ω,L}(n) >= (5R)^{-d} μ̄ / 2`; the empirical
///   frequency is reported in `frequency`;
/// - (b) `|⟨(W - V)φ, φ⟩| <= 8√2 d M R K √⟨H₀φ, φ⟩` for `nphi` random unit
///   vectors `φ` in the span of the lowest free modes.
///
/// `pass` refers to (b), which holds deterministically; `worst_ratio` is
/// the largest `lhs / rhs` seen.
pub fn certify_lifting(
    set: &DeloneSet,
    b: &BoxSpec,
    disorder: &DisorderSpec,
    k: u64,
    nsamples: usize,
    nphi: usize,
    master_seed: u64,
) -> Result<AveragingReport> {
    let r = compute_r(set)?;
    if b.half_width as u64 <= r * k {
        return Err(Error::invalid(format!("need L > RK, got L = {}, RK = {}", b.half_width, r * k)));
    }
    if nsamples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let d = b.dim();
    let h0 = assemble_laplacian(b);
    let modes = LIFTING_LOW_MODES.min(h0.dimension());
    let low = if h0.dimension() <= DENSE_THRESHOLD {
        let res = crate::spectral::eig_full(&h0)?;
        let vecs = res.eigenvectors.expect("dense vectors");
        (res.eigenvalues[..modes].to_vec(), vecs[..modes].to_vec())
    } else {
        let res = eig_extremal(&h0, modes, Side::Low, 1e-9)?;
        (res.eigenvalues, res.eigenvectors.expect("lanczos vectors"))
    };
    let threshold = (5.0 * r as f64).powi(-(d as i32)) * disorder.mean() / 2.0;
    let chain_constant = 8.0 * 2f64.sqrt() * d as f64 * disorder.m * (r * k) as f64;
    let sample_seed = derive_seed(master_seed, 0);
    let phi_seed = derive_seed(master_seed, 1);

    let per_sample: Vec<(bool, f64, f64)> = (0..nsamples)
        .into_par_iter()
        .map(|s| {
            let sample = sample_potential(set, b, disorder, sample_seed, s as u64)?;
            let v = sample.diagonal();
            let w = averaged_potential(b, &v, r, k)?;
            let min_w = w.iter().cloned().fold(f64::INFINITY, f64::min);
            let mut rng = stream(phi_seed, s as u64);
            let mut worst_margin = f64::INFINITY;
            let mut worst_ratio: f64 = 0.0;
            for _ in 0..nphi {
                let c = unit_sphere(&mut rng, modes);
                let mut phi = vec![0.0; v.len()];
                for (ci, vec) in c.iter().zip(&low.1) {
                    phi.iter_mut().zip(vec).for_each(|(p, x)| *p += ci * x);
                }
                let energy: f64 = c.iter().zip(&low.0).map(|(ci, l)| ci * ci * l).sum();
                let lhs: f64 =
                    phi.iter().zip(w.iter().zip(&v)).map(|(p, (wi, vi))| (wi - vi) * p * p).sum::<f64>().abs();
                let rhs = chain_constant * energy.max(0.0).sqrt();
                worst_margin = worst_margin.min(rhs - lhs);
                if rhs > 0.0 {
                    worst_ratio = worst_ratio.max(lhs / rhs);
                }
            }
            Ok((min_w >= threshold, worst_margin, worst_ratio))
        })
        .collect::<Result<_>>()?;
    let hits = per_sample.iter().filter(|x| x.0).count();
    let (worst_index, worst_margin) =
        per_sample.iter().map(|x| x.1).enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).expect("nonempty");
    let worst_ratio = per_sample.iter().map(|x| x.2).fold(0.0, f64::max);
    let vacuous = nphi == 0;
    Ok(AveragingReport {
        test: "lifting".into(),
        parameters: format!(
            "center={} L={} R={r} K={k} M={} mean={} threshold={:e}",
            b.center,
            b.half_width,
            disorder.m,
            disorder.mean(),
            threshold
        ),
        worst_margin: if vacuous { f64::NAN } else { worst_margin },
        worst_ratio,
        worst_index: Some(worst_index),
        pass: !vacuous && worst_margin >= -CHECK_TOLERANCE,
        vacuous,
        nsamples,
        tolerance: CHECK_TOLERANCE,
        recommended_half_width: None,
        frequency: Some(hits as f64 / nsamples as f64),
    })
}
