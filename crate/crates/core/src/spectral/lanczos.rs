//! Extremal eigenpairs by Lanczos with full reorthogonalization.
//!
//! When the operator's band fits in memory the iteration runs on the
//! shift-inverted operator `(s(H - σ))^{-1}`, with `σ` just outside the
//! Gershgorin enclosure; otherwise it runs on `±H` directly. Eigenpairs are
//! found one at a time and locked, so each new run is orthogonal to every
//! pair already found. This also recovers degenerate eigenvalues, which a
//! single Krylov sequence cannot see.

use rand::Rng;

use super::banded::BandCholesky;
use super::tridiagonal::tql;
use super::{residual_norm, Side};
use crate::operator::SparseSymmetricOperator;
use crate::rng::stream;
use crate::{Error, Result};

/// Band factors above this many words fall back to plain Lanczos.
const MAX_FACTOR_WORDS: usize = 40_000_000;
const PLAIN_MAX_STEPS: usize = 400;
const SHIFT_INVERT_MAX_STEPS: usize = 300;

enum Transform {
    ShiftInvert { factor: BandCholesky },
    Plain { sign: f64 },
}

pub(crate) struct ExtremalSolver<'a> {
    h: &'a SparseSymmetricOperator,
    tol: f64,
    transform: Transform,
    span: f64,
    locked: Vec<Vec<f64>>,
    pub(crate) iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let nrm = dot(x, x).sqrt();
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    nrm
}

fn orthogonalize(x: &mut [f64], against: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in against {
            let c = dot(x, q);
            axpy(-c, q, x);
        }
    }
}

impl<'a> ExtremalSolver<'a> {
    pub(crate) fn new(h: &'a SparseSymmetricOperator, side: Side, tol: f64) -> Result<Self> {
        if h.dimension() == 0 {
            return Err(Error::invalid("empty operator"));
        }
        if !(tol > 0.0) {
            return Err(Error::invalid("tolerance must be positive"));
        }
        let (g_lo, g_hi) = h.gershgorin();
        let (b_lo, b_hi) = h.bounds();
        let lo = g_lo.max(b_lo);
        let hi = g_hi.min(b_hi);
        let span = (hi - lo).abs().max(f64::MIN_POSITIVE);
        let transform = if BandCholesky::footprint(h) <= MAX_FACTOR_WORDS {
            let mut delta = 1e-8 * span.max(1.0);
            let mut factor = None;
            for _ in 0..8 {
                factor = match side {
                    Side::Low => BandCholesky::factor(h, 1.0, lo - delta),
                    Side::High => BandCholesky::factor(h, -1.0, hi + delta),
                };
                if factor.is_some() {
                    break;
                }
                delta *= 100.0;
            }
            match factor {
                Some(factor) => Transform::ShiftInvert { factor },
                None => Transform::Plain { sign: side.sign() },
            }
        } else {
            Transform::Plain { sign: side.sign() }
        };
        Ok(ExtremalSolver { h, tol, transform, span, locked: Vec::new(), iterations: 0 })
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.transform {
            Transform::ShiftInvert { factor } => {
                y.copy_from_slice(x);
                factor.solve_in_place(y);
            }
            Transform::Plain { sign } => {
                self.h.apply(x, y);
                if *sign < 0.0 {
                    y.iter_mut().for_each(|v| *v = -*v);
                }
            }
        }
    }

    fn max_steps(&self) -> usize {
        let cap = match self.transform {
            Transform::ShiftInvert { .. } => SHIFT_INVERT_MAX_STEPS,
            Transform::Plain { .. } => PLAIN_MAX_STEPS,
        };
        cap.min(self.h.dimension() - self.locked.len())
    }

    /// The next extremal eigenpair orthogonal to all locked ones, as
    /// `(eigenvalue, vector, residual)`.
    pub(crate) fn next_pair(&mut self) -> Result<(f64, Vec<f64>, f64)> {
        let n = self.h.dimension();
        if self.locked.len() >= n {
            return Err(Error::invalid("all eigenpairs already found"));
        }
        let mut rng = stream(0x1a2c_2b5e_ed00, self.locked.len() as u64);
        let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        orthogonalize(&mut q, &self.locked);
        normalize(&mut q);

        let limit = self.max_steps();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(limit.min(64));
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut conv = 1e-10;
        let mut best = f64::INFINITY;
        let mut w = vec![0.0; n];
        basis.push(q);
        for j in 0..limit {
            self.iterations += 1;
            self.apply(&basis[j], &mut w);
            let alpha = dot(&w, &basis[j]);
            axpy(-alpha, &basis[j], &mut w);
            if j > 0 {
                axpy(-betas[j - 1], &basis[j - 1], &mut w);
            }
            orthogonalize(&mut w, &self.locked);
            orthogonalize(&mut w, &basis);
            let beta = dot(&w, &w).sqrt();
            alphas.push(alpha);

            let m = j + 1;
            let scale_hint = alphas.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let breakdown = beta <= 1e-14 * scale_hint.max(f64::MIN_POSITIVE);
            let last = m == limit;
            if breakdown || last || m % 5 == 0 || m < 5 {
                let (theta, s) = tql(&alphas, &betas, true);
                let s = s.expect("vectors requested");
                let top = m - 1;
                let ritz = theta[top];
                let est = (beta * s[top * m + (m - 1)]).abs();
                let scale = match self.transform {
                    Transform::ShiftInvert { .. } => ritz.abs(),
                    Transform::Plain { .. } => self.span,
                };
                if est <= conv * scale || breakdown || last {
                    let mut y = vec![0.0; n];
                    for (i, v) in basis.iter().enumerate() {
                        axpy(s[top * m + i], v, &mut y);
                    }
                    orthogonalize(&mut y, &self.locked);
                    normalize(&mut y);
                    let lambda = self.h.quadratic_form(&y);
                    let res = residual_norm(self.h, &y, lambda);
                    best = best.min(res);
                    if res <= self.tol {
                        self.locked.push(y.clone());
                        return Ok((lambda, y, res));
                    }
                    if breakdown || last {
                        break;
                    }
                    conv = (conv * 1e-2).max(1e-16);
                }
            }
            if breakdown {
                break;
            }
            betas.push(beta);
            let next: Vec<f64> = w.iter().map(|v| v / beta).collect();
            basis.push(next);
        }
        Err(Error::NotConverged { iterations: self.iterations, best_residual: best })
    }
}
