//! Time evolution `e^{-itH}` and spatial moments of evolved wave packets.

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::disorder::DisorderSpec;
use crate::geometry::{DeloneSet, LatticePoint};
use crate::operator::{assemble_hamiltonian, sample_potential, BoxSpec, SparseSymmetricOperator};
use crate::spectral::{eig_full, spectral_projection_basis, DENSE_THRESHOLD};
use crate::{Error, Result};

/// Coefficient magnitude below which the Chebyshev series is cut.
pub const CHEBYSHEV_CUTOFF: f64 = 1e-14;

/// Relative padding of the spectral interval before rescaling to `[-1, 1]`.
const SPECTRAL_PADDING: f64 = 1e-2;

/// `P_ω(I)ψ₀` norms below this are treated as empty.
pub const NEGLIGIBLE_NORM: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WavePacket {
    pub box_spec: BoxSpec,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl WavePacket {
    pub fn new(box_spec: BoxSpec, amplitudes: Vec<Complex64>, time: f64) -> Result<Self> {
        if amplitudes.len() != box_spec.n_sites() {
            return Err(Error::DimensionMismatch { expected: box_spec.n_sites(), got: amplitudes.len() });
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::invalid("wave packet amplitudes must be finite"));
        }
        Ok(WavePacket { box_spec, amplitudes, time })
    }

    pub fn from_real(box_spec: BoxSpec, amplitudes: &[f64]) -> Result<Self> {
        Self::new(box_spec, amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect(), 0.0)
    }

    /// `δ_x`
    pub fn delta(box_spec: BoxSpec, site: &LatticePoint) -> Result<Self> {
        let i = box_spec.index_of(site).ok_or_else(|| Error::OutOfWindow(format!("{site} is outside the box")))?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); box_spec.n_sites()];
        amplitudes[i] = Complex64::new(1.0, 0.0);
        Self::new(box_spec, amplitudes, 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨ψ, Hψ⟩`
    pub fn energy(&self, h: &SparseSymmetricOperator) -> f64 {
        let mut y = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        h.apply_complex(&self.amplitudes, &mut y);
        self.amplitudes.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn ipr(&self) -> Result<f64> {
        ipr_weights(self.amplitudes.iter().map(|a| a.norm_sqr()))
    }
}

fn check_operator(h: &SparseSymmetricOperator, psi: &WavePacket) -> Result<()> {
    if h.dimension() != psi.amplitudes.len() {
        return Err(Error::DimensionMismatch { expected: h.dimension(), got: psi.amplitudes.len() });
    }
    Ok(())
}

/// `ψ(t) = Σ_k e^{-itλ_k} ⟨v_k, ψ₀⟩ v_k` from the full eigendecomposition.
pub fn evolve_exact(h: &SparseSymmetricOperator, psi0: &WavePacket, times: &[f64]) -> Result<Vec<WavePacket>> {
    check_operator(h, psi0)?;
    if h.dimension() > DENSE_THRESHOLD {
        return Err(Error::TooLargeForDense { dimension: h.dimension(), threshold: DENSE_THRESHOLD });
    }
    let eig = eig_full(h)?;
    let vectors = eig.eigenvectors.expect("dense solve returns vectors");
    Ok(evolve_in_basis(&eig.eigenvalues, &vectors, psi0, times))
}

/// Evolution restricted to the span of the given orthonormal eigenpairs.
fn evolve_in_basis(eigenvalues: &[f64], vectors: &[Vec<f64>], psi0: &WavePacket, times: &[f64]) -> Vec<WavePacket> {
    let coeffs: Vec<Complex64> =
        vectors.iter().map(|v| v.iter().zip(&psi0.amplitudes).map(|(x, a)| a * x).sum()).collect();
    times
        .par_iter()
        .map(|&t| {
            let mut out = vec![Complex64::new(0.0, 0.0); psi0.amplitudes.len()];
            for ((lambda, v), c) in eigenvalues.iter().zip(vectors).zip(&coeffs) {
                let w = c * Complex64::from_polar(1.0, -(t - psi0.time) * lambda);
                out.iter_mut().zip(v).for_each(|(o, x)| *o += w * x);
            }
            WavePacket { box_spec: psi0.box_spec.clone(), amplitudes: out, time: t }
        })
        .collect()
}

/// `J_0(x), …, J_kmax(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0;
        return out;
    }
    if x < 0.0 {
        let mut out = bessel_j_sequence(-x, kmax);
        out.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
        return out;
    }
    let top = kmax.max(x.ceil() as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    let mut sum = 0.0;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            j.iter_mut().skip(k - 1).for_each(|v| *v *= 1e-250);
            sum *= 1e-250;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            sum += 2.0 * j[k - 1];
        }
    }
    sum += j[0];
    j.truncate(kmax + 1);
    j.iter_mut().for_each(|v| *v /= sum);
    j
}

/// A Chebyshev propagation step with its diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChebyshevEvolution {
    pub packet: WavePacket,
    /// Number of Chebyshev terms kept.
    pub order: usize,
    /// Sum of the magnitudes of the last three coefficients computed.
    pub tail_estimate: f64,
    /// `|‖ψ(t)‖ - ‖ψ₀‖| / ‖ψ₀‖`
    pub norm_drift: f64,
}

/// `e^{-i(t - t₀)H} ψ₀` by a Chebyshev expansion in the rescaled operator
/// `(H - b)/a`, where `[b - a, b + a]` pads the spectral bounds of `H`.
///
/// Fails if the relative norm drift exceeds `tol`.
pub fn evolve_chebyshev(
    h: &SparseSymmetricOperator,
    psi0: &WavePacket,
    t: f64,
    tol: f64,
) -> Result<ChebyshevEvolution> {
    check_operator(h, psi0)?;
    let (lo, hi) = h.bounds();
    let half = ((hi - lo) / 2.0).max(1e-12) * (1.0 + SPECTRAL_PADDING);
    let mid = (hi + lo) / 2.0;
    let dt = t - psi0.time;
    let x = half * dt;
    let kmax = (x.abs() + 10.0 * x.abs().cbrt() + 60.0).ceil() as usize;
    let bessel = bessel_j_sequence(x, kmax);
    let phase = Complex64::from_polar(1.0, -dt * mid);
    let minus_i = Complex64::new(0.0, -1.0);
    let mut coeffs = Vec::with_capacity(kmax + 1);
    let mut small = 0;
    let mut i_pow = Complex64::new(1.0, 0.0);
    for (k, jk) in bessel.iter().enumerate() {
        let c = if k == 0 { *jk * phase } else { 2.0 * jk * i_pow * phase };
        i_pow *= minus_i;
        coeffs.push(c);
        small = if c.norm() < CHEBYSHEV_CUTOFF { small + 1 } else { 0 };
        if small == 3 && k as f64 > x.abs() {
            break;
        }
    }
    if small < 3 {
        return Err(Error::NotConverged {
            iterations: coeffs.len(),
            best_residual: coeffs.last().map_or(0.0, |c| c.norm()),
        });
    }
    let order = coeffs.len();
    let tail_estimate = coeffs[order - 3..].iter().map(|c| c.norm()).sum();

    let n = psi0.amplitudes.len();
    let rescaled = h.affine(1.0 / half, -mid / half);
    let zero = Complex64::new(0.0, 0.0);
    let mut prev = psi0.amplitudes.clone();
    let mut cur = vec![zero; n];
    rescaled.apply_complex(&prev, &mut cur);
    let mut out: Vec<Complex64> = prev.iter().map(|p| coeffs[0] * p).collect();
    if order > 1 {
        out.iter_mut().zip(&cur).for_each(|(o, c)| *o += coeffs[1] * c);
    }
    let mut next = vec![zero; n];
    for c in coeffs.iter().skip(2) {
        rescaled.apply_complex(&cur, &mut next);
        next.iter_mut().zip(&prev).for_each(|(nx, p)| *nx = 2.0 * *nx - p);
        out.iter_mut().zip(&next).for_each(|(o, v)| *o += c * v);
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut cur, &mut next);
    }
    let packet = WavePacket { box_spec: psi0.box_spec.clone(), amplitudes: out, time: t };
    let n0 = psi0.norm();
    let norm_drift = if n0 > 0.0 { (packet.norm() - n0).abs() / n0 } else { packet.norm() };
    if !(norm_drift <= tol) {
        return Err(Error::Numerical(format!("Chebyshev norm drift {norm_drift:e} exceeds {tol:e} at order {order}")));
    }
    Ok(ChebyshevEvolution { packet, order, tail_estimate, norm_drift })
}

/// `‖⟨X⟩^{p/2} ψ‖` with `⟨X⟩(n) = (1 + |n - origin|²)^{1/2}`.
pub fn moment(psi: &WavePacket, p: f64, origin: &LatticePoint) -> Result<f64> {
    if !(p >= 0.0) {
        return Err(Error::invalid(format!("moment exponent must be nonnegative, got {p}")));
    }
    if origin.dim() != psi.box_spec.dim() {
        return Err(Error::DimensionMismatch { expected: psi.box_spec.dim(), got: origin.dim() });
    }
    let w = psi.box_spec.window();
    let sum: f64 = w
        .iter()
        .zip(&psi.amplitudes)
        .map(|(n, a)| (1.0 + n.diff(origin).squared_norm() as f64).powf(p / 2.0) * a.norm_sqr())
        .sum();
    Ok(sum.sqrt())
}

fn ipr_weights(weights: impl Iterator<Item = f64>) -> Result<f64> {
    let (s2, s4) = weights.fold((0.0, 0.0), |(a, b), w| (a + w, b + w * w));
    if s2 == 0.0 {
        return Err(Error::invalid("inverse participation ratio of the zero vector"));
    }
    Ok(s4 / (s2 * s2))
}

/// `Σ|ψ|⁴ / (Σ|ψ|²)²`
pub fn ipr(v: &[f64]) -> Result<f64> {
    ipr_weights(v.iter().map(|x| x * x))
}

/// `n` log-spaced times from `t_min` to `t_max`, preceded by `t = 0`.
pub fn log_time_grid(t_min: f64, t_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(t_min > 0.0 && t_max > t_min) || n < 2 {
        return Err(Error::invalid("need 0 < t_min < t_max and at least two points"));
    }
    let r = (t_max / t_min).ln() / (n - 1) as f64;
    let mut out = vec![0.0];
    out.extend((0..n).map(|k| if k == n - 1 { t_max } else { t_min * (r * k as f64).exp() }));
    Ok(out)
}

/// Sample-averaged `m_p(t) = ‖⟨X⟩^{p/2} e^{-itH_ω} P_ω(I) ψ₀‖`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentTrace {
    pub times: Vec<f64>,
    /// Mean over the samples with a non-negligible projection.
    pub values: Vec<f64>,
    pub max: Vec<f64>,
    /// `sup_{s <= t}` of `values`; a grid maximum, not the true supremum.
    pub running_sup: Vec<f64>,
    /// `per_sample[s][k]`, empty for negligible samples.
    pub per_sample: Vec<Vec<f64>>,
    /// `‖P_ω(I)ψ₀‖` per sample.
    pub projected_norms: Vec<f64>,
    pub negligible_samples: usize,
    pub p: f64,
    pub interval: (f64, f64),
    pub origin: LatticePoint,
}

impl MomentTrace {
    pub const CSV_HEADER: &'static str = "t,sample,m_p,p,interval_lo,interval_hi";

    /// All projections were negligible.
    pub fn is_vacuous(&self) -> bool {
        self.negligible_samples == self.per_sample.len()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (s, trace) in self.per_sample.iter().enumerate() {
            for (t, m) in self.times.iter().zip(trace) {
                let _ = writeln!(out, "{t},{s},{m},{},{},{}", self.p, self.interval.0, self.interval.1);
            }
        }
        out
    }

    /// `sup / inf` of the mean trace over grid times in `[t_lo, t_hi]`;
    /// `None` if the window holds no grid point or the trace is vacuous.
    pub fn saturation_ratio(&self, t_lo: f64, t_hi: f64) -> Option<f64> {
        if self.is_vacuous() {
            return None;
        }
        let window: Vec<f64> =
            self.times.iter().zip(&self.values).filter(|(t, _)| **t >= t_lo && **t <= t_hi).map(|(_, v)| *v).collect();
        if window.is_empty() {
            return None;
        }
        let sup = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let inf = window.iter().cloned().fold(f64::INFINITY, f64::min);
        Some(sup / inf)
    }

    pub fn summary(&self, t_lo: f64, t_hi: f64) -> MomentSummary {
        MomentSummary {
            p: self.p,
            interval: self.interval,
            running_sup: self.running_sup.last().copied().filter(|v| v.is_finite()),
            saturation_window: (t_lo, t_hi),
            saturation_ratio: self.saturation_ratio(t_lo, t_hi),
            nsamples: self.per_sample.len(),
            negligible_samples: self.negligible_samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSummary {
    pub p: f64,
    pub interval: (f64, f64),
    pub running_sup: Option<f64>,
    pub saturation_window: (f64, f64),
    pub saturation_ratio: Option<f64>,
    pub nsamples: usize,
    pub negligible_samples: usize,
}

/// Moment traces of `e^{-itH_ω} P_ω(I) ψ₀` over `nsamples` disorder draws.
///
/// The projection and the evolution both use the eigenpairs of `H_ω` in
/// `I`, so the propagation is exact on that subspace. Samples whose
/// projection has norm below [`NEGLIGIBLE_NORM`] are counted and left out
/// of the mean.
#[allow(clippy::too_many_arguments)]
pub fn localization_profile(
    set: &DeloneSet,
    disorder: &DisorderSpec,
    b: &BoxSpec,
    interval: (f64, f64),
    psi0: &WavePacket,
    times: &[f64],
    p: f64,
    origin: &LatticePoint,
    nsamples: usize,
    master_seed: u64,
) -> Result<MomentTrace> {
    let top = 4.0 * b.dim() as f64 + disorder.m;
    if !(interval.0 <= interval.1) || interval.1 < 0.0 || interval.0 > top {
        return Err(Error::invalid(format!("interval {interval:?} misses [0, {top}]")));
    }
    if times.is_empty() || nsamples == 0 {
        return Err(Error::invalid("need times and samples"));
    }
    if psi0.box_spec != *b {
        return Err(Error::invalid("initial packet lives on a different box"));
    }
    let runs: Vec<(f64, Vec<f64>)> = (0..nsamples)
        .into_par_iter()
        .map(|s| {
            let sample = sample_potential(set, b, disorder, master_seed, s as u64)?;
            let h = assemble_hamiltonian(b, set, &sample)?;
            let basis = spectral_projection_basis(&h, interval.0, interval.1)?;
            let norm = basis
                .vectors
                .iter()
                .map(|v| v.iter().zip(&psi0.amplitudes).map(|(x, a)| a * x).sum::<Complex64>().norm_sqr())
                .sum::<f64>()
                .sqrt();
            if norm < NEGLIGIBLE_NORM {
                return Ok((norm, Vec::new()));
            }
            let trace = evolve_in_basis(&basis.eigenvalues, &basis.vectors, psi0, times)
                .iter()
                .map(|w| moment(w, p, origin))
                .collect::<Result<Vec<f64>>>()?;
            Ok((norm, trace))
        })
        .collect::<Result<_>>()?;
    let (projected_norms, per_sample): (Vec<f64>, Vec<Vec<f64>>) = runs.into_iter().unzip();
    let live: Vec<&Vec<f64>> = per_sample.iter().filter(|t| !t.is_empty()).collect();
    let negligible_samples = nsamples - live.len();
    let nt = times.len();
    let mut values = vec![f64::NAN; nt];
    let mut max = vec![f64::NAN; nt];
    if !live.is_empty() {
        for k in 0..nt {
            values[k] = live.iter().map(|t| t[k]).sum::<f64>() / live.len() as f64;
            max[k] = live.iter().map(|t| t[k]).fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let mut running_sup = Vec::with_capacity(nt);
    let mut acc = f64::NEG_INFINITY;
    for v in &values {
        acc = acc.max(*v);
        running_sup.push(if v.is_nan() { f64::NAN } else { acc });
    }
    Ok(MomentTrace {
        times: times.to_vec(),
        values,
        max,
        running_sup,
        per_sample,
        projected_norms,
        negligible_samples,
        p,
        interval,
        origin: origin.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Window;
    use crate::operator::assemble_laplacian;

    #[test]
    fn bessel_reference_values() {
        let j = bessel_j_sequence(1.0, 3);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_55).abs() < 1e-15);
        let j = bessel_j_sequence(10.0, 5);
        assert!((j[5] + 0.234_061_528_186_793_6).abs() < 1e-14);
        let j = bessel_j_sequence(100.0, 0);
        assert!((j[0] - 0.019_985_850_304_223_12).abs() < 1e-14);
        let j = bessel_j_sequence(-2.5, 3);
        assert!((j[3] + 0.216_600_391_039_113_58).abs() < 1e-15);
        let j = bessel_j_sequence(90.0, 100);
        assert!((j[100] - 0.002_602_130_581_996_352).abs() < 1e-15);
        // far past the argument nothing overflows
        let j = bessel_j_sequence(1e-3, 400);
        assert!(j.iter().all(|v| v.is_finite()));
    }

    fn chain(l: usize) -> (BoxSpec, SparseSymmetricOperator) {
        let b = BoxSpec::new(vec![0].into(), l);
        let h = assemble_laplacian(&b);
        (b, h)
    }

    #[test]
    fn exact_identities() {
        let (b, h) = chain(20);
        let psi = WavePacket::delta(b.clone(), &vec![3].into()).unwrap();
        let out = evolve_exact(&h, &psi, &[0.0, 5.0, 50.0]).unwrap();
        for (a, c) in out[0].amplitudes.iter().zip(&psi.amplitudes) {
            assert!((a - c).norm() < 1e-12);
        }
        for w in &out {
            assert!((w.norm() - 1.0).abs() < 1e-10);
        }
        // stationary state
        let eig = eig_full(&h).unwrap();
        let v = &eig.eigenvectors.unwrap()[4];
        let lam = eig.eigenvalues[4];
        let psi = WavePacket::from_real(b, v).unwrap();
        let out = evolve_exact(&h, &psi, &[7.0]).unwrap();
        let phase = Complex64::from_polar(1.0, -7.0 * lam);
        for (a, x) in out[0].amplitudes.iter().zip(v) {
            assert!((a - phase * x).norm() < 1e-10);
        }
    }

    #[test]
    fn chebyshev_matches_exact() {
        let (b, h) = chain(60);
        let psi = WavePacket::delta(b, &vec![-7].into()).unwrap();
        for t in [0.0, 1.0, 10.0, 100.0] {
            let cheb = evolve_chebyshev(&h, &psi, t, 1e-10).unwrap();
            let exact = &evolve_exact(&h, &psi, &[t]).unwrap()[0];
            let diff =
                cheb.packet.amplitudes.iter().zip(&exact.amplitudes).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-11, "t = {t}: {diff}");
            if t == 0.0 {
                assert!(diff < 1e-14);
            }
        }
    }

    #[test]
    fn chebyshev_negative_time_inverts() {
        let (b, h) = chain(15);
        let psi = WavePacket::delta(b, &vec![0].into()).unwrap();
        let fwd = evolve_chebyshev(&h, &psi, 3.0, 1e-10).unwrap().packet;
        let back = evolve_chebyshev(&h, &fwd, 0.0, 1e-10).unwrap().packet;
        for (a, c) in back.amplitudes.iter().zip(&psi.amplitudes) {
            assert!((a - c).norm() < 1e-12);
        }
    }

    #[test]
    fn moment_examples() {
        let b = BoxSpec::new(vec![0, 0].into(), 3);
        let origin = LatticePoint::new(vec![1, 0]);
        let at_origin = WavePacket::delta(b.clone(), &origin).unwrap();
        assert_eq!(moment(&at_origin, 3.7, &origin).unwrap(), 1.0);
        let x = LatticePoint::new(vec![-2, 2]);
        let dx = WavePacket::delta(b.clone(), &x).unwrap();
        let expected = (1.0f64 + 13.0).powf(2.0 / 4.0);
        assert!((moment(&dx, 2.0, &origin).unwrap() - expected).abs() < 1e-12);
        let mut amps = vec![Complex64::new(0.5, 0.5); b.n_sites()];
        amps[3] = Complex64::new(-2.0, 0.0);
        let w = WavePacket::new(b, amps, 0.0).unwrap();
        assert!((moment(&w, 0.0, &origin).unwrap() - w.norm()).abs() < 1e-12);
        assert!(moment(&w, -1.0, &origin).is_err());
    }

    #[test]
    fn ipr_examples() {
        assert_eq!(ipr(&[0.0, 0.0, 3.0]).unwrap(), 1.0);
        assert!((ipr(&[1.0; 8]).unwrap() - 0.125).abs() < 1e-15);
        assert!(ipr(&[0.0; 4]).is_err());
    }

    #[test]
    fn energy_conserved() {
        let (b, h) = chain(40);
        let psi = WavePacket::delta(b, &vec![5].into()).unwrap();
        let e0 = psi.energy(&h);
        let out = evolve_chebyshev(&h, &psi, 40.0, 1e-10).unwrap();
        assert!((out.packet.energy(&h) - e0).abs() < 1e-10);
    }

    #[test]
    fn profile_initial_entry_is_projected_moment() {
        let set = DeloneSet::full(Window::cube_range(1, -20, 20).unwrap());
        let b = BoxSpec::new(vec![0].into(), 10);
        let origin = LatticePoint::origin(1);
        let psi = WavePacket::delta(b.clone(), &origin).unwrap();
        let law = DisorderSpec::uniform(1.0).unwrap();
        let times = log_time_grid(1.0, 100.0, 5).unwrap();
        let tr = localization_profile(&set, &law, &b, (0.0, 2.0), &psi, &times, 2.0, &origin, 3, 7).unwrap();
        for s in 0..3 {
            let sample = sample_potential(&set, &b, &law, 7, s).unwrap();
            let h = assemble_hamiltonian(&b, &set, &sample).unwrap();
            let basis = spectral_projection_basis(&h, 0.0, 2.0).unwrap();
            let proj = basis.project(&[vec![0.0; 10], vec![1.0], vec![0.0; 10]].concat());
            let w = WavePacket::from_real(b.clone(), &proj).unwrap();
            assert!((tr.per_sample[s as usize][0] - moment(&w, 2.0, &origin).unwrap()).abs() < 1e-12);
        }
        assert!(tr.running_sup.windows(2).all(|w| w[0] <= w[1]));
        let empty = localization_profile(&set, &law, &b, (0.0, 1e-6), &psi, &times, 2.0, &origin, 2, 7).unwrap();
        assert!(empty.is_vacuous());
        assert_eq!(empty.saturation_ratio(1.0, 100.0), None);
    }
}
