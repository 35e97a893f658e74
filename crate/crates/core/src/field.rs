//! Periodic continuum fields with spectral representation.
//!
//! A [`ContinuumField`] holds complex samples on M equispaced points of a
//! torus of period P.  The analytic Fourier transform f̂(ξ_m) = ∫ f e^{−ixξ}dx
//! on the torus equals Δx times the DFT coefficient, exactly so for
//! band-limited data; norms and inner products below are phrased so that
//! Plancherel holds bin-by-bin.

use crate::bump::{lp_bump, raised_cosine_bump};
use crate::error::{Error, Result};
use crate::fft;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Taper used on the transition band of smooth frequency cutoffs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Taper {
    /// C^∞ exp-based bump (the default everywhere).
    SmoothExp,
    /// Raised cosine, for the taper-robustness experiment.
    RaisedCosine,
}

impl Taper {
    #[inline]
    pub fn eval(self, r: f64) -> f64 {
        match self {
            Taper::SmoothExp => lp_bump(r),
            Taper::RaisedCosine => raised_cosine_bump(r),
        }
    }
}

/// Wrap a coordinate difference onto [−P/2, P/2).
#[inline]
pub fn wrap_coord(x: f64, period: f64) -> f64 {
    let mut y = x.rem_euclid(period);
    if y >= period / 2.0 {
        y -= period;
    }
    y
}

#[derive(Debug, Clone)]
pub struct ContinuumField {
    pub period: f64,
    pub values: Vec<Complex64>,
}

impl ContinuumField {
    pub fn new(period: f64, values: Vec<Complex64>) -> Self {
        assert!(period > 0.0 && !values.is_empty());
        Self { period, values }
    }

    /// Zero field on `m` points.
    pub fn zeros(period: f64, m: usize) -> Self {
        Self::new(period, vec![Complex64::new(0.0, 0.0); m])
    }

    /// Sample `f` on the grid x_j = j·P/M.
    pub fn from_fn(period: f64, m: usize, f: impl Fn(f64) -> Complex64) -> Self {
        let dx = period / m as f64;
        Self::new(period, (0..m).map(|j| f(j as f64 * dx)).collect())
    }

    /// Build from DFT coefficients (the inverse of [`Self::spectrum`]).
    pub fn from_spectrum(period: f64, spectrum: &[Complex64]) -> Self {
        Self::new(period, fft::ifft(spectrum))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.period / self.len() as f64
    }

    #[inline]
    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    /// Continuum frequency of DFT bin m.
    #[inline]
    pub fn xi(&self, m: usize) -> f64 {
        fft::xi(m, self.len(), self.period)
    }

    /// DFT coefficients c_m = Σ_j f_j e^{−2πijm/M}; the analytic transform is
    /// f̂(ξ_m) = Δx·c_m.
    pub fn spectrum(&self) -> Vec<Complex64> {
        fft::fft(&self.values)
    }

    /// L² norm on the torus: (Δx Σ|f_j|²)^{1/2}.
    pub fn l2_norm(&self) -> f64 {
        (self.dx() * self.values.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        fft::linf_norm(&self.values)
    }

    /// H^s norm: ( Σ_m ⟨ξ_m⟩^{2s} |f̂(ξ_m)|² Δξ/2π )^{1/2} with Δξ/2π = 1/P.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let m = self.len() as f64;
        let spec = self.spectrum();
        let mut acc = 0.0;
        for (k, c) in spec.iter().enumerate() {
            let xi = self.xi(k);
            acc += (1.0 + xi * xi).powf(s) * c.norm_sqr();
        }
        (acc * self.period / (m * m)).sqrt()
    }

    /// L² pairing ∫ ḡ f dx (this field is g, the argument is f).
    pub fn l2_inner(&self, f: &ContinuumField) -> Complex64 {
        assert_eq!(self.len(), f.len());
        self.dx()
            * self
                .values
                .iter()
                .zip(&f.values)
                .map(|(g, v)| g.conj() * v)
                .sum::<Complex64>()
    }

    /// H¹ pairing Σ_m (1+ξ²) conj(ĝ) f̂ /P via spectra.
    pub fn h1_inner(&self, f: &ContinuumField) -> Complex64 {
        assert_eq!(self.len(), f.len());
        let m = self.len() as f64;
        let gs = self.spectrum();
        let fs = f.spectrum();
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, (g, v)) in gs.iter().zip(&fs).enumerate() {
            let xi = self.xi(k);
            acc += (1.0 + xi * xi) * g.conj() * v;
        }
        acc * self.period / (m * m)
    }

    /// Exact translation on the torus: returns x ↦ f(x + a).
    pub fn translate(&self, a: f64) -> Self {
        let m = self.len();
        let mut spec = self.spectrum();
        // e^{iaξ_m} with the phase reduced through a/P mod 1 to keep the
        // sin/cos arguments small.
        let r = (a / self.period).rem_euclid(1.0);
        for (k, c) in spec.iter_mut().enumerate() {
            let s = fft::signed_index(k, m) as f64;
            let phase = 2.0 * PI * (s * r).rem_euclid(1.0);
            *c *= Complex64::from_polar(1.0, phase);
        }
        Self::from_spectrum(self.period, &spec)
    }

    /// Spectral derivative of the given order.  Odd orders zero the unpaired
    /// Nyquist bin, which otherwise breaks conjugate symmetry.
    pub fn derivative(&self, order: u32) -> Self {
        let m = self.len();
        let mut spec = self.spectrum();
        for (k, c) in spec.iter_mut().enumerate() {
            if order % 2 == 1 && 2 * k == m {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let ixi = Complex64::new(0.0, self.xi(k));
            *c *= ixi.powu(order);
        }
        Self::from_spectrum(self.period, &spec)
    }

    /// Smooth low-pass P_{≤N_cut}: multiplies the spectrum by taper(ξ/N_cut).
    pub fn lowpass(&self, n_cut: f64, taper: Taper) -> Self {
        let mut spec = self.spectrum();
        for (k, c) in spec.iter_mut().enumerate() {
            *c *= taper.eval(self.xi(k) / n_cut);
        }
        Self::from_spectrum(self.period, &spec)
    }

    /// Resample onto `m_new` grid points of the same period by spectral
    /// zero-padding (exact for band-limited fields) or truncation.
    pub fn resample(&self, m_new: usize) -> Self {
        let m_old = self.len();
        if m_new == m_old {
            return self.clone();
        }
        let spec = self.spectrum();
        let mut out = vec![Complex64::new(0.0, 0.0); m_new];
        let keep = m_old.min(m_new);
        let scale = m_new as f64 / m_old as f64;
        // Copy bins by signed index; on shrink, drop what does not fit.
        for (k, &c) in spec.iter().enumerate() {
            let s = fft::signed_index(k, m_old);
            if s.unsigned_abs() as usize > keep / 2 {
                continue;
            }
            if 2 * (s.unsigned_abs() as usize) == keep && s > 0 {
                continue; // unpaired Nyquist only on the negative side
            }
            let idx = if s >= 0 {
                s as usize
            } else {
                (m_new as i64 + s) as usize
            };
            out[idx] = c * scale;
        }
        Self::from_spectrum(self.period, &out)
    }

    /// Relative spectral mass at |ξ| > b.
    pub fn spectral_mass_beyond(&self, b: f64) -> f64 {
        let spec = self.spectrum();
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let tail: f64 = spec
            .iter()
            .enumerate()
            .filter(|(k, _)| self.xi(*k).abs() > b)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        tail / total
    }

    /// Check the band-limitation invariant: spectral mass beyond `b` below
    /// 1e−12 relative.
    pub fn require_bandlimited(&self, b: f64) -> Result<()> {
        let mass = self.spectral_mass_beyond(b);
        if mass > 1e-12 {
            return Err(Error::SupportViolation(format!(
                "field has relative spectral mass {mass:.3e} beyond |xi| = {b}"
            )));
        }
        Ok(())
    }
}

/// Gaussian profile A·exp(−x̃²/(2σ²)) centered at `center` (wrapped onto the
/// torus).
pub fn gaussian_profile(
    period: f64,
    m: usize,
    amplitude: f64,
    sigma: f64,
    center: f64,
) -> ContinuumField {
    ContinuumField::from_fn(period, m, |x| {
        let d = wrap_coord(x - center, period);
        Complex64::new(amplitude * (-d * d / (2.0 * sigma * sigma)).exp(), 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn test_field(m: usize) -> ContinuumField {
        ContinuumField::from_fn(32.0, m, |x| {
            Complex64::new(
                (2.0 * PI * x / 32.0).sin() + 0.3 * (6.0 * PI * x / 32.0).cos(),
                0.2 * (4.0 * PI * x / 32.0).sin(),
            )
        })
    }

    #[test]
    fn l2_matches_spectral_parseval() {
        let f = test_field(128);
        let phys = f.l2_norm();
        let spec = f.sobolev_norm(0.0);
        assert!((phys - spec).abs() / phys < 1e-13);
    }

    #[test]
    fn h1_of_single_mode() {
        // Mode at ξ = 2 with unit L² mass: H¹ norm = √5.
        let period = PI; // ξ grid spacing 2, so ξ = 2 is bin 1
        let amp = (1.0 / period).sqrt();
        let f = ContinuumField::from_fn(period, 64, |x| {
            Complex64::from_polar(amp, 2.0 * x)
        });
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
        assert!((f.sobolev_norm(1.0) - 5.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn translate_round_trip_and_exactness() {
        let f = test_field(128);
        let a = 3.7391;
        let g = f.translate(a).translate(-a);
        for (u, v) in f.values.iter().zip(&g.values) {
            assert!((u - v).norm() < 1e-12);
        }
        // Translation by a full period is the identity.
        let h = f.translate(32.0);
        for (u, v) in f.values.iter().zip(&h.values) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let period = 2.0 * PI;
        let f = ContinuumField::from_fn(period, 64, |x| Complex64::new(x.sin(), 0.0));
        let df = f.derivative(1);
        for (j, v) in df.values.iter().enumerate() {
            let x = df.x(j);
            assert!((v.re - x.cos()).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn resample_preserves_bandlimited_values() {
        let f = test_field(64);
        let up = f.resample(256);
        for j in 0..64 {
            assert!((up.values[4 * j] - f.values[j]).norm() < 1e-12);
        }
        assert!((up.l2_norm() - f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn lowpass_is_identity_on_retained_band() {
        let f = test_field(128); // modes at |ξ| ≤ 3·2π/32 < 1
        let g = f.lowpass(1.0, Taper::SmoothExp);
        for (u, v) in f.values.iter().zip(&g.values) {
            assert!((u - v).norm() < 1e-13);
        }
        // A mode at 3·N_cut is annihilated.
        let h = ContinuumField::from_fn(32.0, 128, |x| Complex64::from_polar(1.0, 3.0 * x));
        let hl = h.lowpass(1.0, Taper::SmoothExp);
        assert!(hl.max_abs() < 1e-13);
    }

    #[test]
    fn lowpass_matches_tabulated_taper_bin_by_bin() {
        // White-spectrum field: every bin gets multiplied by the taper value.
        let m = 64;
        let spec: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(1.0, (k as f64 * 0.7).sin()))
            .collect();
        let f = ContinuumField::from_spectrum(16.0, &spec);
        let n_cut = 2.5;
        let g = f.lowpass(n_cut, Taper::SmoothExp);
        let gs = g.spectrum();
        for (k, (a, b)) in spec.iter().zip(&gs).enumerate() {
            let expect = a * lp_bump(f.xi(k) / n_cut);
            assert!((b - expect).norm() < 1e-12, "bin {k}");
        }
    }
}
