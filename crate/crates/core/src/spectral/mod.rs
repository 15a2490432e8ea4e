//! Eigenvalues, spectral projections and integrated densities of states.

mod banded;
mod dense;
mod lanczos;
pub(crate) mod tridiagonal;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

pub use dense::{eig_full, eigenvalues_full, DENSE_THRESHOLD};
use lanczos::ExtremalSolver;

use crate::disorder::DisorderSpec;
use crate::geometry::{DeloneSet, LatticePoint};
use crate::operator::{assemble_hamiltonian, sample_potential, BoxSpec, SparseSymmetricOperator};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SolverKind {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverMeta {
    pub kind: SolverKind,
    pub iterations: usize,
    /// Residual bound every reported pair satisfies.
    pub tolerance: f64,
}

/// Which end of the spectrum [`eig_extremal`] targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Low,
    High,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Low => -1.0,
            Side::High => 1.0,
        }
    }
}

/// Eigenvalues in ascending order, optionally with orthonormal eigenvectors
/// and their residuals `‖Hv - λv‖`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub residuals: Vec<f64>,
    pub meta: SolverMeta,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `index,eigenvalue,residual`; the residual column is empty when no
    /// vectors were computed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue,residual\n");
        for (i, l) in self.eigenvalues.iter().enumerate() {
            match self.residuals.get(i) {
                Some(r) => writeln!(out, "{i},{l:.17e},{r:.3e}"),
                None => writeln!(out, "{i},{l:.17e},"),
            }
            .expect("writing to a String");
        }
        out
    }
}

pub(crate) fn residual_norm(h: &SparseSymmetricOperator, v: &[f64], lambda: f64) -> f64 {
    let hv = h.mul_vec(v);
    hv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

/// `k` eigenpairs at one end of the spectrum, each with
/// `‖Hv - λv‖ <= tol`. Non-convergence is an error carrying the best
/// residual reached.
pub fn eig_extremal(h: &SparseSymmetricOperator, k: usize, side: Side, tol: f64) -> Result<SpectralResult> {
    if k == 0 || k > h.dimension() {
        return Err(Error::invalid(format!("k = {k} outside 1..={}", h.dimension())));
    }
    let mut solver = ExtremalSolver::new(h, side, tol)?;
    let mut pairs = Vec::with_capacity(k);
    for _ in 0..k {
        pairs.push(solver.next_pair()?);
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (eigenvalues, vectors, residuals) =
        pairs.into_iter().fold((Vec::new(), Vec::new(), Vec::new()), |(mut l, mut v, mut r), (lambda, vec, res)| {
            l.push(lambda);
            v.push(vec);
            r.push(res);
            (l, v, r)
        });
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors: Some(vectors),
        residuals,
        meta: SolverMeta { kind: SolverKind::Lanczos, iterations: solver.iterations, tolerance: tol },
    })
}

/// Smallest eigenvalue; tridiagonal operators are solved exactly, others
/// by [`eig_extremal`].
pub fn lowest_eigenvalue(h: &SparseSymmetricOperator, tol: f64) -> Result<f64> {
    if h.bandwidth() <= 1 {
        return Ok(tridiagonal::eigenvalues(h)[0]);
    }
    Ok(eig_extremal(h, 1, Side::Low, tol)?.eigenvalues[0])
}

/// An orthonormal basis of `ran χ_I(H)` for `I = [a, b]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionBasis {
    pub interval: (f64, f64),
    pub eigenvalues: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl ProjectionBasis {
    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `χ_I(H) ψ`
    pub fn project(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; psi.len()];
        for v in &self.vectors {
            let c: f64 = v.iter().zip(psi).map(|(a, b)| a * b).sum();
            out.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
        }
        out
    }
}

/// Membership in `I` is decided on the eigenvalue with slack
/// `1e-12 · span`. Small operators use the dense solver; large ones are
/// served by locked Lanczos runs from the nearer band edge, which requires
/// `I` to touch that edge.
pub fn spectral_projection_basis(h: &SparseSymmetricOperator, a: f64, b: f64) -> Result<ProjectionBasis> {
    if !(a <= b) {
        return Err(Error::invalid(format!("empty interval [{a}, {b}]")));
    }
    let (lo, hi) = h.bounds();
    let slack = 1e-12 * (hi - lo).abs().max(1.0);
    if h.dimension() <= DENSE_THRESHOLD {
        let res = eig_full(h)?;
        let vectors = res.eigenvectors.expect("dense solve returns vectors");
        let (eigenvalues, vectors) =
            res.eigenvalues.into_iter().zip(vectors).filter(|(l, _)| *l >= a - slack && *l <= b + slack).unzip();
        return Ok(ProjectionBasis { interval: (a, b), eigenvalues, vectors });
    }
    let side = if a <= lo + slack {
        Side::Low
    } else if b >= hi - slack {
        Side::High
    } else {
        return Err(Error::invalid("interior intervals on large boxes need the dense path"));
    };
    let tol = 1e-9 * (hi - lo).abs().max(1.0);
    let mut solver = ExtremalSolver::new(h, side, tol)?;
    let mut eigenvalues = Vec::new();
    let mut vectors = Vec::new();
    for _ in 0..h.dimension() {
        let (lambda, v, _) = solver.next_pair()?;
        let inside = lambda >= a - slack && lambda <= b + slack;
        if !inside {
            break;
        }
        eigenvalues.push(lambda);
        vectors.push(v);
    }
    Ok(ProjectionBasis { interval: (a, b), eigenvalues, vectors })
}

/// `min_λ |λ - E|`
pub fn dist_to_spectrum(res: &SpectralResult, energy: f64) -> Result<f64> {
    dist_to_values(&res.eigenvalues, energy)
}

pub(crate) fn dist_to_values(sorted: &[f64], energy: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::invalid("empty spectrum"));
    }
    let i = sorted.partition_point(|&l| l < energy);
    let mut best = f64::INFINITY;
    if i < sorted.len() {
        best = best.min((sorted[i] - energy).abs());
    }
    if i > 0 {
        best = best.min((sorted[i - 1] - energy).abs());
    }
    Ok(best)
}

/// Empirical integrated density of states on an energy grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdsCurve {
    pub energies: Vec<f64>,
    pub centers: Vec<LatticePoint>,
    /// `per_center[c][e]`: sample mean of `N(E_e)` at center `c`.
    pub per_center: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Pointwise extremes over every (center, sample) curve.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Pointwise `max_c - min_c` of the center means.
    pub center_spread: Vec<f64>,
    /// `max_E center_spread(E)`
    pub uniformity: f64,
    pub nsamples: usize,
}

impl IdsCurve {
    /// `E,N_mean,N_min,N_max,center_spread`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E,N_mean,N_min,N_max,center_spread\n");
        for i in 0..self.energies.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                self.energies[i], self.mean[i], self.min[i], self.max[i], self.center_spread[i]
            );
        }
        out
    }
}

/// `N(E) = #{λ <= E} / |Λ_L|`, averaged over samples per center. Sample
/// `s` at center `c` uses the stream `(derive_seed(master_seed, c), s)`.
pub fn estimate_ids(
    set: &DeloneSet,
    disorder: &DisorderSpec,
    half_width: usize,
    centers: &[LatticePoint],
    nsamples: usize,
    energies: &[f64],
    master_seed: u64,
) -> Result<IdsCurve> {
    if centers.is_empty() || nsamples == 0 || energies.is_empty() {
        return Err(Error::invalid("need centers, samples and energies"));
    }
    let jobs: Vec<(usize, usize)> = (0..centers.len()).flat_map(|c| (0..nsamples).map(move |s| (c, s))).collect();
    let curves: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let b = BoxSpec::new(centers[c].clone(), half_width);
            let sample = sample_potential(set, &b, disorder, derive_seed(master_seed, c as u64), s as u64)?;
            let h = assemble_hamiltonian(&b, set, &sample)?;
            let eig = eigenvalues_full(&h)?;
            let vol = eig.len() as f64;
            Ok(energies.iter().map(|&e| eig.partition_point(|&l| l <= e) as f64 / vol).collect())
        })
        .collect::<Result<_>>()?;
    let ne = energies.len();
    let mut per_center = vec![vec![0.0; ne]; centers.len()];
    let mut min = vec![f64::INFINITY; ne];
    let mut max = vec![f64::NEG_INFINITY; ne];
    for (&(c, _), curve) in jobs.iter().zip(&curves) {
        for e in 0..ne {
            per_center[c][e] += curve[e] / nsamples as f64;
            min[e] = min[e].min(curve[e]);
            max[e] = max[e].max(curve[e]);
        }
    }
    let mean: Vec<f64> = (0..ne).map(|e| per_center.iter().map(|p| p[e]).sum::<f64>() / centers.len() as f64).collect();
    let center_spread: Vec<f64> = (0..ne)
        .map(|e| {
            let vals = per_center.iter().map(|p| p[e]);
            vals.clone().fold(f64::NEG_INFINITY, f64::max) - vals.fold(f64::INFINITY, f64::min)
        })
        .collect();
    let uniformity = center_spread.iter().cloned().fold(0.0, f64::max);
    Ok(IdsCurve {
        energies: energies.to_vec(),
        centers: centers.to_vec(),
        per_center,
        mean,
        min,
        max,
        center_spread,
        uniformity,
        nsamples,
    })
}
