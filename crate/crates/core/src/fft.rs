//! FFT plumbing and the crate's Fourier conventions.
//!
//! Lattice sequences use the discrete transform
//!   â(θ_k) = Σ_n a_n e^{−inθ_k},   θ_k = 2πk/N,
//! with inverse a_n = (1/N) Σ_k â(θ_k) e^{inθ_k}, so Parseval reads
//! Σ|a_n|² = (1/N) Σ|â(θ_k)|².  Periodic fields of period P sampled at M
//! points use the same DFT; the analytic transform f̂(ξ) = ∫ f e^{−ixξ} dx
//! equals Δx times the DFT coefficient for band-limited data.
//!
//! Plans are cached behind a mutex-guarded planner; the plans themselves are
//! `Arc`s safe for concurrent use.

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

struct PlanCache {
    planner: FftPlanner<f64>,
    fwd: HashMap<usize, Arc<dyn Fft<f64>>>,
    inv: HashMap<usize, Arc<dyn Fft<f64>>>,
}

static PLANS: Lazy<Mutex<PlanCache>> = Lazy::new(|| {
    Mutex::new(PlanCache {
        planner: FftPlanner::new(),
        fwd: HashMap::new(),
        inv: HashMap::new(),
    })
});

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLANS.lock().unwrap();
    let PlanCache { planner, fwd, inv } = &mut *cache;
    let map = if forward { fwd } else { inv };
    map.entry(n)
        .or_insert_with(|| {
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

/// In-place forward DFT: x_k ← Σ_n x_n e^{−2πikn/N} (unnormalized).
pub fn fft_in_place(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

/// In-place inverse DFT with the 1/N normalization, so it inverts
/// [`fft_in_place`] exactly.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    let n = buf.len();
    plan(n, false).process(buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Forward DFT of a slice into a fresh vector.
pub fn fft(values: &[Complex64]) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    fft_in_place(&mut buf);
    buf
}

/// Inverse DFT (normalized) of a slice into a fresh vector.
pub fn ifft(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut buf = coeffs.to_vec();
    ifft_in_place(&mut buf);
    buf
}

/// Signed bin index for DFT bin `k` of an `n`-point transform:
/// 0, 1, …, n/2−1, −n/2, …, −1.  The Nyquist bin (n even) sits at −n/2.
#[inline]
pub fn signed_index(k: usize, n: usize) -> i64 {
    if 2 * k < n {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Lattice frequency θ_k ∈ [−π, π) for bin `k` of an `n`-point transform.
#[inline]
pub fn theta(k: usize, n: usize) -> f64 {
    2.0 * std::f64::consts::PI * signed_index(k, n) as f64 / n as f64
}

/// Continuum frequency ξ_m = 2π·m̃/P for bin `m` of an `m_total`-point grid
/// with period `period`.
#[inline]
pub fn xi(m: usize, m_total: usize, period: f64) -> f64 {
    2.0 * std::f64::consts::PI * signed_index(m, m_total) as f64 / period
}

/// ℓ² norm of a complex sequence.
pub fn l2_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max modulus of a complex sequence.
pub fn linf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
