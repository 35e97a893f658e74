//! Fourier conventions, the initial-data sampling map, the reconstruction
//! operator, the moving-frame profile, Littlewood–Paley projections,
//! fractional symbols, and locality diagnostics.
//!
//! Reconstruction follows the Shannon sampling picture on the torus: a
//! lattice sequence c on N sites of mesh h maps to the unique field with
//! Fourier support in [−π/h, π/h] interpolating h⁻¹c_n at lattice points,
//! realized as a zero-padded inverse FFT.  It satisfies
//! ‖𝓡c‖²_{L²} = h⁻¹‖c‖²_{ℓ²} exactly.

use crate::bump::{lattice_bump, tightness_chi};
use crate::error::{Error, Result};
use crate::fft;
use crate::field::{wrap_coord, ContinuumField, Taper};
use crate::lattice::{Gauge, LatticeState, Sign};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Convention flag for a block of Fourier coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FourierConvention {
    /// â(θ_k), θ_k = 2πk/N ∈ [−π, π).
    Lattice,
    /// f̂(ξ_m), ξ_m = 2πm̃/period.
    Continuum { period: f64 },
}

#[derive(Debug, Clone)]
pub struct SpectralCoefficients {
    pub values: Vec<Complex64>,
    pub convention: FourierConvention,
}

/// Forward lattice transform â(θ_k) = Σ_n a_n e^{−inθ_k}.
pub fn lattice_fourier(c: &[Complex64]) -> SpectralCoefficients {
    SpectralCoefficients {
        values: fft::fft(c),
        convention: FourierConvention::Lattice,
    }
}

/// Inverse lattice transform a_n = (1/N) Σ_k â(θ_k) e^{inθ_k}.
pub fn lattice_fourier_inverse(spec: &SpectralCoefficients) -> Vec<Complex64> {
    fft::ifft(&spec.values)
}

/// Smooth low-pass P_{≤N_cut} on a continuum field (the C^∞ taper).
pub fn smooth_lowpass(f: &ContinuumField, n_cut: f64) -> ContinuumField {
    f.lowpass(n_cut, Taper::SmoothExp)
}

/// h₀ from the smallness condition: min{1, 1/(100‖φ₀‖²_{L²})}.
pub fn h_max_for(phi0: &ContinuumField) -> f64 {
    let mass = phi0.l2_norm().powi(2);
    if mass == 0.0 {
        1.0
    } else {
        (1.0 / (100.0 * mass)).min(1.0)
    }
}

fn lattice_site_count(phi0: &ContinuumField, h: f64) -> Result<usize> {
    let n_real = phi0.period / h;
    let n = n_real.round() as usize;
    if (n_real - n as f64).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "period {} is not an integer multiple of h = {h}",
            phi0.period
        )));
    }
    if n < 8 || n % 2 != 0 {
        return Err(Error::Precondition(format!(
            "period/h = {n} must be even and >= 8"
        )));
    }
    if phi0.len() % n != 0 {
        return Err(Error::Precondition(format!(
            "grid size {} must be divisible by the site count {n}",
            phi0.len()
        )));
    }
    Ok(n)
}

/// Initial-data sampling α_n(0) = h·[P_{≤π/(2h)}φ₀](hn), with a taper choice
/// for the projection's transition band.
pub fn sample_initial_data_with_taper(
    phi0: &ContinuumField,
    h: f64,
    sign: Sign,
    taper: Taper,
) -> Result<LatticeState> {
    let h0 = h_max_for(phi0);
    if h > h0 {
        let mass = phi0.l2_norm().powi(2);
        return Err(Error::Precondition(format!(
            "h = {h} exceeds h0 = min{{1, 1/(100*||phi0||_L2^2)}} = {h0:.6} \
             (||phi0||_L2^2 = {mass:.6})"
        )));
    }
    let n = lattice_site_count(phi0, h)?;
    let stride = phi0.len() / n;
    let projected = phi0.lowpass(PI / (2.0 * h), taper);
    let alpha: Vec<Complex64> = (0..n).map(|i| h * projected.values[i * stride]).collect();
    LatticeState::new(h, sign, Gauge::Mal, 0.0, alpha)
}

/// Initial-data sampling with the default C^∞ taper.
pub fn sample_initial_data(phi0: &ContinuumField, h: f64, sign: Sign) -> Result<LatticeState> {
    sample_initial_data_with_taper(phi0, h, sign, Taper::SmoothExp)
}

/// Embed lattice Fourier data into an `m_out`-point field spectrum so that
/// the resulting field is 𝓡c: band-limited to [−π/h, π/h], interpolating
/// h⁻¹c_n at lattice points.
fn embed_spectrum(spec_lattice: &[Complex64], h: f64, m_out: usize) -> Vec<Complex64> {
    let n = spec_lattice.len();
    assert!(m_out >= n);
    let scale = m_out as f64 / (n as f64 * h);
    let mut out = vec![Complex64::new(0.0, 0.0); m_out];
    for (k, &c) in spec_lattice.iter().enumerate() {
        let s = fft::signed_index(k, n);
        let idx = if s >= 0 {
            s as usize
        } else {
            (m_out as i64 + s) as usize
        };
        out[idx] = c * scale;
    }
    out
}

/// Reconstruction operator 𝓡 on `m_out` grid points (m_out ≥ N).
pub fn reconstruct_on(state: &LatticeState, m_out: usize) -> ContinuumField {
    let spec = embed_spectrum(&state.spectrum(), state.h, m_out);
    ContinuumField::from_spectrum(state.period(), &spec)
}

/// Reconstruction operator 𝓡 on the natural N-point grid.
pub fn reconstruct(state: &LatticeState) -> ContinuumField {
    reconstruct_on(state, state.n())
}

/// Sample a band-limited field back to a lattice sequence: c_n = h·f(nh).
/// The field grid must contain the lattice points.
pub fn sample_to_lattice(f: &ContinuumField, h: f64) -> Result<Vec<Complex64>> {
    let n_real = f.period / h;
    let n = n_real.round() as usize;
    if (n_real - n as f64).abs() > 1e-9 || f.len() % n != 0 {
        return Err(Error::Precondition(
            "field grid does not contain the lattice points".into(),
        ));
    }
    let stride = f.len() / n;
    Ok((0..n).map(|i| h * f.values[i * stride]).collect())
}

/// Band-limited pairing h Σ_n ḡ(nh) f(nh); equals ∫ ḡ f dx for fields with
/// Fourier support in (−π/h, π/h).
pub fn sampled_inner(g: &ContinuumField, f: &ContinuumField, h: f64) -> Result<Complex64> {
    let cf = sample_to_lattice(f, h)?;
    let cg = sample_to_lattice(g, h)?;
    Ok(cg
        .iter()
        .zip(&cf)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        / h)
}

/// Moving-frame profile φʰ(t,·) = 𝓣_t ∘ 𝓡 applied to α(3h⁻³t); the
/// translation by 6h⁻²t is an exact Fourier phase modulo the period.
pub fn moving_frame_profile(state: &LatticeState, t_cont: f64) -> Result<ContinuumField> {
    if state.gauge != Gauge::Mal {
        return Err(Error::Precondition(
            "moving-frame profile expects the mAL gauge".into(),
        ));
    }
    let h = state.h;
    let expected_tau = 3.0 * t_cont / (h * h * h);
    if (state.time - expected_tau).abs() > 1e-9 * expected_tau.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "time inconsistency: state at tau = {} but 3h^-3 t = {expected_tau}",
            state.time
        )));
    }
    Ok(reconstruct(state).translate(6.0 * t_cont / (h * h)))
}

/// Inverse of the moving frame: α_n(3h⁻³t) = h·φʰ(t, hn − 6h⁻²t·h·…), i.e.
/// translate back and sample at the lattice points.
pub fn moving_frame_inverse(
    phi_h: &ContinuumField,
    h: f64,
    t_cont: f64,
    sign: Sign,
) -> Result<LatticeState> {
    let shifted = phi_h.translate(-6.0 * t_cont / (h * h));
    let alpha = sample_to_lattice(&shifted, h)?;
    LatticeState::new(h, sign, Gauge::Mal, 3.0 * t_cont / (h * h * h), alpha)
}

/// The AL-side moving-frame profile: built from û(3h⁻³t, θ + π/2) with the
/// extra phase e^{6ih⁻³t}, which equals the mAL-path profile identically.
pub fn al_moving_frame_profile(state: &LatticeState, t_cont: f64) -> Result<ContinuumField> {
    if state.gauge != Gauge::Al {
        return Err(Error::Precondition(
            "AL moving-frame profile expects an AL-gauge state".into(),
        ));
    }
    let n = state.n();
    if n % 4 != 0 {
        return Err(Error::Precondition(
            "AL moving-frame profile needs N divisible by 4".into(),
        ));
    }
    let h = state.h;
    let expected_tau = 3.0 * t_cont / (h * h * h);
    if (state.time - expected_tau).abs() > 1e-9 * expected_tau.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "time inconsistency: state at tau = {} but 3h^-3 t = {expected_tau}",
            state.time
        )));
    }
    let uhat = state.spectrum();
    // û(θ_k + π/2) is the bin k + N/4 (mod N); the prefactor e^{6ih⁻³t}
    // carries the gauge's time phase e^{2iτ}.
    let phase = Complex64::from_polar(1.0, 2.0 * expected_tau);
    let shifted: Vec<Complex64> = (0..n).map(|k| phase * uhat[(k + n / 4) % n]).collect();
    let spec = embed_spectrum(&shifted, h, n);
    let field = ContinuumField::from_spectrum(state.period(), &spec);
    Ok(field.translate(6.0 * t_cont / (h * h)))
}

/// Relative lattice-spectrum mass outside |θ| ≤ theta_max.
pub fn lattice_mass_beyond(seq: &[Complex64], theta_max: f64) -> f64 {
    let n = seq.len();
    let spec = fft::fft(seq);
    let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    spec.iter()
        .enumerate()
        .filter(|(k, _)| fft::theta(*k, n).abs() > theta_max)
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        / total
}

/// Sharp projection of a lattice sequence to |θ| ≤ theta_max.
pub fn project_band(seq: &[Complex64], theta_max: f64) -> Vec<Complex64> {
    let n = seq.len();
    let mut spec = fft::fft(seq);
    for (k, c) in spec.iter_mut().enumerate() {
        if fft::theta(k, n).abs() > theta_max {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    fft::ifft(&spec)
}

/// Pointwise product of three lattice sequences whose Fourier support lies in
/// the arc |θ| ≤ 1, exposing the identity 𝓡[abc] = h²·𝓡a·𝓡b·𝓡c.
pub fn bandlimited_product(
    a: &[Complex64],
    b: &[Complex64],
    c: &[Complex64],
) -> Result<Vec<Complex64>> {
    for (name, seq) in [("a", a), ("b", b), ("c", c)] {
        let mass = lattice_mass_beyond(seq, 1.0);
        if mass > 1e-12 {
            return Err(Error::SupportViolation(format!(
                "factor {name} has relative spectral mass {mass:.3e} outside |theta| <= 1"
            )));
        }
    }
    Ok(a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| x * y * z)
        .collect())
}

/// σ-label of the discrete Littlewood–Paley family: + localizes near θ = 0,
/// − near θ = π (mod 2π).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpSigma {
    Plus,
    Minus,
}

fn require_dyadic(n: f64) -> Result<i32> {
    if n <= 0.0 {
        return Err(Error::Precondition(format!("dyadic scale must be > 0, got {n}")));
    }
    let l = n.log2();
    let k = l.round();
    if (l - k).abs() > 1e-12 {
        return Err(Error::Precondition(format!("{n} is not a power of two")));
    }
    Ok(k as i32)
}

fn lattice_lp_low_symbol(theta: f64, n_dyadic: f64, sigma: LpSigma) -> f64 {
    let centered = match sigma {
        LpSigma::Plus => wrap_theta(theta),
        LpSigma::Minus => wrap_theta(theta - PI),
    };
    lattice_bump(centered / n_dyadic)
}

fn wrap_theta(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t >= PI {
        t -= 2.0 * PI;
    }
    t
}

/// Discrete Littlewood–Paley projection P^σ_{≤N} (le = true) or P^σ_N
/// (le = false) at dyadic scale N ≤ 1.
pub fn lp_project_lattice(
    seq: &[Complex64],
    n_dyadic: f64,
    sigma: LpSigma,
    le: bool,
) -> Result<Vec<Complex64>> {
    require_dyadic(n_dyadic)?;
    if n_dyadic > 1.0 {
        return Err(Error::Precondition(format!(
            "lattice Littlewood-Paley scale must satisfy N <= 1, got {n_dyadic}"
        )));
    }
    let n = seq.len();
    let mut spec = fft::fft(seq);
    for (k, c) in spec.iter_mut().enumerate() {
        let th = fft::theta(k, n);
        let mult = if le {
            lattice_lp_low_symbol(th, n_dyadic, sigma)
        } else {
            lattice_lp_low_symbol(th, n_dyadic, sigma)
                - lattice_lp_low_symbol(th, n_dyadic / 2.0, sigma)
        };
        *c *= mult;
    }
    Ok(fft::ifft(&spec))
}

/// Continuum Littlewood–Paley projection P_{≤N} (le = true) or P_N.
pub fn lp_project_field(
    f: &ContinuumField,
    n_dyadic: f64,
    le: bool,
    taper: Taper,
) -> Result<ContinuumField> {
    require_dyadic(n_dyadic)?;
    let mut spec = f.spectrum();
    for (k, c) in spec.iter_mut().enumerate() {
        let xi = f.xi(k);
        let mult = if le {
            taper.eval(xi / n_dyadic)
        } else {
            taper.eval(xi / n_dyadic) - taper.eval(2.0 * xi / n_dyadic)
        };
        *c *= mult;
    }
    Ok(ContinuumField::from_spectrum(f.period, &spec))
}

/// Lattice fractional multiplier |D_d|^s with symbol |sin θ|^s.  For s < 0
/// the symbol's zero bins (θ = 0 and θ = π) must carry no data.
pub fn lattice_fractional(seq: &[Complex64], s: f64) -> Result<Vec<Complex64>> {
    let n = seq.len();
    let mut spec = fft::fft(seq);
    if s < 0.0 {
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        let bad = spec[0].norm_sqr() + spec[n / 2].norm_sqr();
        if total > 0.0 && bad / total > 1e-13 {
            return Err(Error::Precondition(format!(
                "negative-order |D_d|^s needs vanishing data at theta = 0 and pi \
                 (relative mass {:.3e})",
                bad / total
            )));
        }
    }
    for (k, c) in spec.iter_mut().enumerate() {
        let sym = fft::theta(k, n).sin().abs();
        *c *= if sym == 0.0 { 0.0 } else { sym.powf(s) };
    }
    Ok(fft::ifft(&spec))
}

/// Continuum fractional multiplier: |∇|^s (homogeneous) or ⟨∇⟩^s.
pub fn field_fractional(f: &ContinuumField, s: f64, homogeneous: bool) -> Result<ContinuumField> {
    let mut spec = f.spectrum();
    if homogeneous && s < 0.0 {
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        if total > 0.0 && spec[0].norm_sqr() / total > 1e-13 {
            return Err(Error::Precondition(
                "negative-order |nabla|^s needs zero mean".into(),
            ));
        }
    }
    for (k, c) in spec.iter_mut().enumerate() {
        let xi = f.xi(k);
        let sym = if homogeneous {
            let a = xi.abs();
            if a == 0.0 {
                0.0
            } else {
                a.powf(s)
            }
        } else {
            (1.0 + xi * xi).powf(s / 2.0)
        };
        *c *= sym;
    }
    Ok(ContinuumField::from_spectrum(f.period, &spec))
}

/// Grid surrogate of the Hardy–Littlewood maximal function: centered window
/// averages of |f| at dyadic half-widths {1, 2, 4, …, M/4}, maximized.
pub fn maximal_function(f: &ContinuumField) -> Vec<f64> {
    let m = f.len();
    let abs: Vec<f64> = f.values.iter().map(|z| z.norm()).collect();
    // prefix[j] = Σ_{i<j} abs[wrap(i)] over a doubled range for easy windows
    let mut prefix = vec![0.0; 2 * m + 1];
    for i in 0..2 * m {
        prefix[i + 1] = prefix[i] + abs[i % m];
    }
    let mut out = vec![0.0; m];
    let mut w = 1usize;
    while w <= m / 4 {
        let denom = (2 * w + 1) as f64;
        for j in 0..m {
            // window [j−w, j+w] on the torus, shifted by +m to stay in range
            let lo = j + m - w;
            let hi = j + m + w + 1;
            let avg = (prefix[hi] - prefix[lo]) / denom;
            if avg > out[j] {
                out[j] = avg;
            }
        }
        w *= 2;
    }
    out
}

/// Report for the reconstruction-locality diagnostic (tail of 𝓡c outside a
/// window against the (L/(hL′))‖c‖² bound).
#[derive(Debug, Clone, Copy)]
pub struct LocalityReport {
    /// ∫_{|x−τh| ≥ L+L′} |𝓡c|² dx (wrapped distance on the torus).
    pub tail_mass: f64,
    /// (L/(hL′))·‖c‖²_{ℓ²}.
    pub bound: f64,
}

/// Tail of the reconstruction outside the window around site center
/// `tau_center`, with the locality bound it is measured against.
pub fn locality_diagnostics(
    state: &LatticeState,
    tau_center: f64,
    l: f64,
    l_prime: f64,
) -> LocalityReport {
    let fine = reconstruct_on(state, 4 * state.n());
    let center = tau_center * state.h;
    let dx = fine.dx();
    let cutoff = l + l_prime;
    let tail_mass = fine
        .values
        .iter()
        .enumerate()
        .filter(|(j, _)| wrap_coord(fine.x(*j) - center, fine.period).abs() >= cutoff)
        .map(|(_, z)| z.norm_sqr() * dx)
        .sum();
    LocalityReport {
        tail_mass,
        bound: l / (state.h * l_prime) * state.l2_norm_sq(),
    }
}

/// Initial-data locality pair: ‖α(0)‖²_{ℓ²(|n|≥m)} and the maximal-function
/// bound h·‖𝓜φ₀‖²_{L²(|x| ≥ (m−½)h)}.
pub fn initial_locality(state0: &LatticeState, phi0: &ContinuumField, m: usize) -> (f64, f64) {
    let n = state0.n();
    let lhs: f64 = state0
        .alpha
        .iter()
        .enumerate()
        .filter(|(i, _)| fft::signed_index(*i, n).unsigned_abs() as usize >= m)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    let mf = maximal_function(phi0);
    let cutoff = (m as f64 - 0.5) * state0.h;
    let dx = phi0.dx();
    let rhs: f64 = mf
        .iter()
        .enumerate()
        .filter(|(j, _)| wrap_coord(phi0.x(*j), phi0.period).abs() >= cutoff)
        .map(|(_, v)| v * v * dx)
        .sum::<f64>()
        * state0.h;
    (lhs, rhs)
}

/// Localizing window χ_j(x) = sech(x−j)/[Σ_k sech⁶(x−k)]^{1/6} on the grid,
/// with distances wrapped on the torus and the k-sum truncated where
/// sech⁶ < 1e−18.  The window lattice has round(period) members so that
/// Σ_j χ_j⁶ ≡ 1 exactly.
pub fn chi_window(j: i64, period: f64, m: usize) -> Vec<f64> {
    let windows = chi_window_count(period);
    let dx = period / m as f64;
    (0..m)
        .map(|idx| {
            let x = idx as f64 * dx;
            let num = sech_wrapped(x, j as f64, period);
            if num == 0.0 {
                return 0.0;
            }
            let mut denom = 0.0;
            for k in 0..windows {
                let s = sech_wrapped(x, k as f64, period);
                denom += s.powi(6);
            }
            num / denom.powf(1.0 / 6.0)
        })
        .collect()
}

/// Number of χ windows on a torus of the given period.
pub fn chi_window_count(period: f64) -> i64 {
    period.round() as i64
}

fn sech_wrapped(x: f64, center: f64, period: f64) -> f64 {
    let d = wrap_coord(x - center, period).abs();
    // sech⁶(d) < 1e−18 for d > ~7.6; skip far windows.
    if d > 8.0 {
        0.0
    } else {
        1.0 / d.cosh()
    }
}

/// Tightness weight w(h, L; τ, n) = 1 − χ(2(n−2τ)h/L) with the moving center
/// 2τ wrapped periodically.
pub fn tightness_weight(h: f64, l: f64, tau: f64, site: usize, n: usize) -> f64 {
    let d = wrap_coord((site as f64 - 2.0 * tau) * h, n as f64 * h);
    1.0 - tightness_chi(2.0 * d / l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::gaussian_profile;
    use num_complex::Complex64 as C;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seq(n: usize, seed: u64) -> Vec<C> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn random_state(n: usize, h: f64, amp: f64, seed: u64) -> LatticeState {
        let seq: Vec<C> = random_seq(n, seed).iter().map(|z| amp * z).collect();
        LatticeState::new(h, Sign::Defocusing, Gauge::Mal, 0.0, seq).unwrap()
    }

    #[test]
    fn lattice_parseval() {
        let a = random_seq(64, 1);
        let spec = lattice_fourier(&a);
        let phys: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let four: f64 = spec.values.iter().map(|z| z.norm_sqr()).sum::<f64>() / 64.0;
        assert!((phys - four).abs() / phys < 1e-13);
        let back = lattice_fourier_inverse(&spec);
        for (x, y) in a.iter().zip(&back) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn lattice_mode_hits_single_bin() {
        let n = 32;
        let j = 5;
        let th = fft::theta(j, n);
        let a: Vec<C> = (0..n).map(|i| C::from_polar(1.0, th * i as f64)).collect();
        let spec = lattice_fourier(&a);
        for (k, c) in spec.values.iter().enumerate() {
            if k == j {
                assert!((c - C::new(n as f64, 0.0)).norm() < 1e-11);
            } else {
                assert!(c.norm() < 1e-11, "bin {k} leaked {c}");
            }
        }
    }

    #[test]
    fn sampling_respects_h0_bound() {
        // ||phi0||² = 4 forces h0 = 1/400.
        let phi0 = ContinuumField::from_fn(25.6, 512, |_| C::new((4.0f64 / 25.6).sqrt(), 0.0));
        assert!((phi0.l2_norm().powi(2) - 4.0).abs() < 1e-10);
        let err = sample_initial_data(&phi0, 0.1, Sign::Defocusing).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("h0"), "message should name the bound: {msg}");
        assert!(msg.contains("0.0025"), "message should compute it: {msg}");
    }

    #[test]
    fn sampling_zero_gives_zero() {
        let phi0 = ContinuumField::zeros(25.6, 256);
        let st = sample_initial_data(&phi0, 0.2, Sign::Defocusing).unwrap();
        assert_eq!(st.n(), 128);
        assert!(st.l2_norm_sq() == 0.0);
    }

    #[test]
    fn sampling_mass_inequality_and_alias_free_identity() {
        let period = 64.0;
        let h = 0.25;
        let phi0 = gaussian_profile(period, 1024, 0.07, 2.0, 0.0);
        let st = sample_initial_data(&phi0, h, Sign::Defocusing).unwrap();
        assert_eq!(st.n(), 256);
        // ‖α(0)‖² ≤ h‖φ₀‖²
        assert!(st.l2_norm_sq() <= h * phi0.l2_norm().powi(2) * (1.0 + 1e-12));

        // α̂(0, θ_k) = (P_{≤π/2h}φ₀)^(θ_k/h), evaluated directly per bin.
        let proj = smooth_lowpass(&phi0, PI / (2.0 * h));
        let proj_spec = proj.spectrum();
        let dx = proj.dx();
        let ahat = st.spectrum();
        let mf = proj.len();
        let mut worst = 0.0f64;
        for k in 0..st.n() {
            let s = fft::signed_index(k, st.n());
            let idx = if s >= 0 { s as usize } else { (mf as i64 + s) as usize };
            let direct = dx * proj_spec[idx];
            worst = worst.max((ahat[k] - direct).norm());
        }
        assert!(worst < 1e-10, "alias-free identity deviation {worst}");
    }

    #[test]
    fn reconstruct_delta_and_isometry_and_interpolation() {
        let n = 64;
        let h = 0.25;
        // delta sequence: 𝓡δ at x = 0 equals 1/h
        let mut delta = vec![C::new(0.0, 0.0); n];
        delta[0] = C::new(1.0, 0.0);
        let st = LatticeState::new(h, Sign::Defocusing, Gauge::Mal, 0.0, delta).unwrap();
        let f = reconstruct(&st);
        assert!((f.values[0] - C::new(1.0 / h, 0.0)).norm() < 1e-12);

        // random sequence: isometry and interpolation on a finer grid
        let st = random_state(n, h, 0.5, 7);
        let f = reconstruct_on(&st, 4 * n);
        let lhs = f.l2_norm().powi(2);
        let rhs = st.l2_norm_sq() / h;
        assert!((lhs - rhs).abs() / rhs < 1e-12, "isometry {lhs} vs {rhs}");
        for i in 0..n {
            let grid_idx = i * 4;
            let interp = f.values[grid_idx];
            let expect = st.alpha[i] / h;
            assert!((interp - expect).norm() < 1e-11, "site {i}");
        }
        f.require_bandlimited(PI / h * (1.0 + 1e-9)).unwrap();
    }

    #[test]
    fn zero_reconstructs_to_zero() {
        let st =
            LatticeState::new(0.5, Sign::Defocusing, Gauge::Mal, 0.0, vec![C::new(0.0, 0.0); 16])
                .unwrap();
        assert_eq!(reconstruct(&st).max_abs(), 0.0);
    }

    #[test]
    fn sampling_identity_on_bandlimited_pair() {
        // Eq.-(327)-type identity: ∫ ḡ f = h Σ ḡ(nh) f(nh) for band-limited f, g.
        let period = 32.0;
        let h = 0.25;
        let m = 512;
        let band = 0.9 * PI / h;
        let mk = |seed: u64| -> ContinuumField {
            let raw = ContinuumField::new(period, random_seq(m, seed));
            raw.lowpass(band / 2.0, Taper::SmoothExp) // support ≤ band < π/h
        };
        let f = mk(11);
        let g = mk(12);
        let exact = g.l2_inner(&f);
        let sampled = sampled_inner(&g, &f, h).unwrap();
        assert!(
            (exact - sampled).norm() / exact.norm() < 1e-10,
            "{exact} vs {sampled}"
        );
    }

    #[test]
    fn moving_frame_at_zero_is_projection() {
        let period = 64.0;
        let h = 0.25;
        let phi0 = gaussian_profile(period, 512, 0.07, 2.0, 0.0);
        let st = sample_initial_data(&phi0, h, Sign::Defocusing).unwrap();
        let profile = moving_frame_profile(&st, 0.0).unwrap();
        let proj = smooth_lowpass(&phi0, PI / (2.0 * h)).resample(profile.len());
        let diff: f64 = profile
            .values
            .iter()
            .zip(&proj.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
            * profile.dx().sqrt();
        assert!(diff < 1e-11, "phi^h(0) vs projected data: {diff}");
    }

    #[test]
    fn moving_frame_round_trip() {
        let n = 128;
        let h = 0.25;
        let mut st = random_state(n, h, 0.3, 21);
        let t_cont = 0.7;
        st.time = 3.0 * t_cont / (h * h * h);
        let profile = moving_frame_profile(&st, t_cont).unwrap();
        let back = moving_frame_inverse(&profile, h, t_cont, st.sign).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in st.alpha.iter().zip(&back.alpha) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-12, "round trip deviation {worst}");
        assert!((back.time - st.time).abs() < 1e-9);
    }

    #[test]
    fn moving_frame_time_consistency_enforced() {
        let st = random_state(64, 0.25, 0.2, 3); // time = 0
        assert!(moving_frame_profile(&st, 0.5).is_err());
    }

    #[test]
    fn bandlimited_product_identity_and_sharpness() {
        let n = 256;
        let h = 0.25;
        let period = n as f64 * h;
        let mk_state = |seq: Vec<C>| {
            LatticeState::new(h, Sign::Defocusing, Gauge::Mal, 0.0, seq).unwrap()
        };
        let narrow: Vec<Vec<C>> = (0..3)
            .map(|i| project_band(&random_seq(n, 30 + i), 1.0))
            .collect();
        let product = bandlimited_product(&narrow[0], &narrow[1], &narrow[2]).unwrap();

        let m_fine = 4 * n;
        let rp = reconstruct_on(&mk_state(product), m_fine);
        let factors: Vec<ContinuumField> = narrow
            .iter()
            .map(|s| reconstruct_on(&mk_state(s.clone()), m_fine))
            .collect();
        let mut worst = 0.0f64;
        for j in 0..m_fine {
            let rhs = h * h * factors[0].values[j] * factors[1].values[j] * factors[2].values[j];
            worst = worst.max((rp.values[j] - rhs).norm());
        }
        assert!(worst < 1e-10, "on-class identity deviation {worst}");
        let _ = period;

        // Off-class: widen supports to |θ| ≤ 2.5 and watch the identity fail.
        let wide: Vec<Vec<C>> = (0..3)
            .map(|i| project_band(&random_seq(n, 60 + i), 2.5))
            .collect();
        let product: Vec<C> = wide[0]
            .iter()
            .zip(&wide[1])
            .zip(&wide[2])
            .map(|((x, y), z)| x * y * z)
            .collect();
        assert!(bandlimited_product(&wide[0], &wide[1], &wide[2]).is_err());
        let rp = reconstruct_on(&mk_state(product), m_fine);
        let factors: Vec<ContinuumField> = wide
            .iter()
            .map(|s| reconstruct_on(&mk_state(s.clone()), m_fine))
            .collect();
        let mut worst = 0.0f64;
        for j in 0..m_fine {
            let rhs = h * h * factors[0].values[j] * factors[1].values[j] * factors[2].values[j];
            worst = worst.max((rp.values[j] - rhs).norm());
        }
        assert!(worst > 1e-3, "off-class identity should fail, got {worst}");
    }

    #[test]
    fn lattice_lp_resolution_of_identity() {
        let f = random_seq(128, 99);
        let n0 = 2.0_f64.powi(-6);
        let mut sum = vec![C::new(0.0, 0.0); 128];
        for sigma in [LpSigma::Plus, LpSigma::Minus] {
            let low = lp_project_lattice(&f, n0, sigma, true).unwrap();
            for (s, v) in sum.iter_mut().zip(&low) {
                *s += v;
            }
            let mut n = n0;
            while n < 1.0 {
                n *= 2.0;
                let band = lp_project_lattice(&f, n, sigma, false).unwrap();
                for (s, v) in sum.iter_mut().zip(&band) {
                    *s += v;
                }
            }
        }
        let mut worst = 0.0f64;
        for (s, v) in sum.iter().zip(&f) {
            worst = worst.max((s - v).norm());
        }
        assert!(worst < 1e-12, "resolution of identity deviation {worst}");
    }

    #[test]
    fn lp_mode_at_pi_is_pure_minus() {
        let n = 64;
        let f: Vec<C> = (0..n)
            .map(|i| C::from_polar(1.0, PI * i as f64))
            .collect();
        for scale in [1.0, 0.5, 0.25] {
            let plus = lp_project_lattice(&f, scale, LpSigma::Plus, true).unwrap();
            assert!(fft::linf_norm(&plus) < 1e-13, "sigma=+ leak at N={scale}");
        }
        let minus = lp_project_lattice(&f, 1.0, LpSigma::Minus, true).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in minus.iter().zip(&f) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-13);
    }

    #[test]
    fn lp_bernstein_constant_is_stable() {
        // ‖P_N f‖_∞ ≤ C N^{1/2} ‖P_N f‖_{ℓ²} with one C across scales.
        let f = random_seq(256, 123);
        let mut cs = Vec::new();
        for scale in [1.0, 0.5, 0.25, 0.125] {
            let piece = lp_project_lattice(&f, scale, LpSigma::Plus, false).unwrap();
            let linf = fft::linf_norm(&piece);
            let l2 = fft::l2_norm(&piece);
            if l2 > 1e-12 {
                cs.push(linf / (scale.sqrt() * l2));
            }
        }
        let cmax = cs.iter().cloned().fold(0.0, f64::max);
        assert!(cmax < 2.0, "Bernstein constants {cs:?}");
    }

    #[test]
    fn fractional_round_trip_on_clean_data() {
        let n = 128;
        let mut raw = random_seq(n, 5);
        // kill the symbol's zero bins (θ = 0 and θ = π)
        let mut spec = fft::fft(&raw);
        spec[0] = C::new(0.0, 0.0);
        spec[n / 2] = C::new(0.0, 0.0);
        raw = fft::ifft(&spec);
        let up = lattice_fractional(&raw, 0.375).unwrap();
        let back = lattice_fractional(&up, -0.375).unwrap();
        let mut worst = 0.0f64;
        for (a, b) in raw.iter().zip(&back) {
            worst = worst.max((a - b).norm());
        }
        assert!(worst < 1e-12);
    }

    #[test]
    fn fractional_rejects_zero_mode_content() {
        let raw = vec![C::new(1.0, 0.0); 32];
        assert!(lattice_fractional(&raw, -0.5).is_err());
        assert!(lattice_fractional(&raw, 0.5).is_ok());
    }

    #[test]
    fn fractional_s_zero_is_identity_and_symbol_value() {
        let n = 64;
        let raw = random_seq(n, 6);
        let same = lattice_fractional(&raw, 0.0).unwrap();
        for (a, b) in raw.iter().zip(&same) {
            assert!((a - b).norm() < 1e-13);
        }
        // pure mode at θ = π/2, s = 1 → multiplied by |sin(π/2)| = 1
        let k = n / 4;
        let th = fft::theta(k, n);
        assert!((th - PI / 2.0).abs() < 1e-12);
        let mode: Vec<C> = (0..n).map(|i| C::from_polar(1.0, th * i as f64)).collect();
        let out = lattice_fractional(&mode, 1.0).unwrap();
        for (a, b) in mode.iter().zip(&out) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn multipliers_commute() {
        let n = 128;
        let mut raw = random_seq(n, 77);
        let mut spec = fft::fft(&raw);
        spec[0] = C::new(0.0, 0.0);
        spec[n / 2] = C::new(0.0, 0.0);
        raw = fft::ifft(&spec);
        let a = lp_project_lattice(
            &lattice_fractional(&raw, 0.375).unwrap(),
            0.5,
            LpSigma::Plus,
            true,
        )
        .unwrap();
        let b = lattice_fractional(
            &lp_project_lattice(&raw, 0.5, LpSigma::Plus, true).unwrap(),
            0.375,
        )
        .unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn chi_partition_symmetry_derivative() {
        let period = 32.0;
        let m = 512;
        let windows = chi_window_count(period);
        let all: Vec<Vec<f64>> = (0..windows).map(|j| chi_window(j, period, m)).collect();
        // Σ_j χ_j⁶ ≡ 1
        for idx in 0..m {
            let s: f64 = all.iter().map(|w| w[idx].powi(6)).sum();
            assert!((s - 1.0).abs() < 1e-12, "partition at grid {idx}: {s}");
        }
        // translation structure: χ_j(x) = χ_0(x − j); the grid realizes this
        // as a rotation by j/dx cells when j is a multiple of dx.
        let dx = period / m as f64;
        let shift_cells = (1.0 / dx) as usize;
        for idx in 0..m {
            let a = all[1][idx];
            let b = all[0][(idx + m - shift_cells) % m];
            assert!((a - b).abs() < 1e-12);
        }
        // |χ_j'| ≤ C·χ_j with C ≈ 1 (finite differences away from the floor)
        let chi0 = &all[0];
        let mut cworst = 0.0f64;
        for idx in 0..m {
            let plus = chi0[(idx + 1) % m];
            let minus = chi0[(idx + m - 1) % m];
            let deriv = (plus - minus) / (2.0 * dx);
            if chi0[idx] > 1e-6 {
                cworst = cworst.max(deriv.abs() / chi0[idx]);
            }
        }
        assert!(cworst < 1.5, "derivative-domination constant {cworst}");
    }

    #[test]
    fn locality_tail_vanishes_for_wide_window() {
        let n = 512;
        let h = 0.25;
        let mut seq = vec![C::new(0.0, 0.0); n];
        for (i, v) in seq.iter_mut().enumerate().take(272).skip(240) {
            *v = C::new(0.1 * ((i as f64 - 256.0) / 8.0).cos(), 0.0);
        }
        let st = LatticeState::new(h, Sign::Defocusing, Gauge::Mal, 0.0, seq).unwrap();
        // windows that exceed the half-period leave no tail region at all
        let report = locality_diagnostics(&st, 256.0, 4.0, 100.0);
        assert_eq!(report.tail_mass, 0.0);
        // compact support: tail decays against the bound as L' grows
        let tight = locality_diagnostics(&st, 256.0, 4.0, 16.0);
        assert!(tight.tail_mass <= tight.bound, "{tight:?}");
    }

    #[test]
    fn initial_locality_pair_bounded() {
        let period = 64.0;
        let h = 0.25;
        let phi0 = gaussian_profile(period, 1024, 0.07, 2.0, 0.0);
        let st = sample_initial_data(&phi0, h, Sign::Defocusing).unwrap();
        let n = st.n();
        let mut ratio_max = 0.0f64;
        for m in [n / 8, n / 4, 3 * n / 8] {
            let (lhs, rhs) = initial_locality(&st, &phi0, m);
            if rhs > 1e-300 && lhs > 0.0 {
                ratio_max = ratio_max.max(lhs / rhs);
            }
        }
        // one recorded constant across the m sweep
        assert!(ratio_max < 4.0, "locality constant {ratio_max}");
    }

    #[test]
    fn tightness_weight_vanishes_near_moving_center() {
        let h = 0.2;
        let n = 256;
        let l = 8.0;
        let tau = 40.0;
        let center = 2.0 * tau; // site index
        let w_at_center = tightness_weight(h, l, tau, center as usize, n);
        assert_eq!(w_at_center, 0.0);
        let far = ((center + 3.0 * l / h) as usize) % n;
        let w_far = tightness_weight(h, l, tau, far, n);
        assert_eq!(w_far, 1.0);
    }
}
