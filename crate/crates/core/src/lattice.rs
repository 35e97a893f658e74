//! Lattice states, the two lattice flows, the gauge transform between them,
//! and the conserved functionals used as integrity checks.
//!
//! The mAL flow in the variables used here reads
//!     ∂_τ α_n = −(1 − α_n β_n)(α_{n+1} − α_{n−1}),    β_n = ±ᾱ_n,
//! with linear symbol Λ_d(θ) = −2 sin θ (so ∂_τ α = iΛ_d α + F[α] with
//! F_n = α_nβ_n(α_{n+1} − α_{n−1})).  The AL flow is
//!     i∂_t u_n = −(u_{n−1} − 2u_n + u_{n+1}) + u_n v_n (u_{n−1} + u_{n+1}),
//! with v_n = ±ū_n and dispersion relation ω_AL(θ) = 2 − 2cos θ.

use crate::error::{Error, Result};
use crate::fft;
use crate::integrate::Trajectory;
use num_complex::Complex64;

/// Amplitude at which the defocusing domain guard trips (conditioning margin
/// below the logarithm's singularity at 1).
pub const DEFOCUSING_GUARD: f64 = 0.9;

/// Focusing flag: β = sign·ᾱ (v = sign·ū on the AL side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Defocusing,
    Focusing,
}

impl Sign {
    /// +1 for defocusing (β = ᾱ), −1 for focusing (β = −ᾱ).
    #[inline]
    pub fn factor(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Defocusing => Sign::Focusing,
            Sign::Focusing => Sign::Defocusing,
        }
    }
}

/// Which frame the state lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    Al,
    Mal,
}

/// Complex field on a periodic lattice of N sites with mesh h.
/// β is never stored; it is derived from `sign` and `alpha`.
#[derive(Debug, Clone)]
pub struct LatticeState {
    pub h: f64,
    pub sign: Sign,
    pub gauge: Gauge,
    /// Lattice time τ (dimensionless).
    pub time: f64,
    pub alpha: Vec<Complex64>,
}

impl LatticeState {
    pub fn new(
        h: f64,
        sign: Sign,
        gauge: Gauge,
        time: f64,
        alpha: Vec<Complex64>,
    ) -> Result<Self> {
        let n = alpha.len();
        if n < 8 || n % 2 != 0 {
            return Err(Error::Precondition(format!(
                "lattice needs N >= 8 and N even, got N = {n}"
            )));
        }
        if !(h > 0.0 && h <= 1.0) {
            return Err(Error::Precondition(format!(
                "mesh size must satisfy 0 < h <= 1, got h = {h}"
            )));
        }
        Ok(Self {
            h,
            sign,
            gauge,
            time,
            alpha,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    /// Physical period N·h of the torus the lattice discretizes.
    #[inline]
    pub fn period(&self) -> f64 {
        self.n() as f64 * self.h
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.alpha.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn sup_abs(&self) -> f64 {
        fft::linf_norm(&self.alpha)
    }

    /// Lattice Fourier data â(θ_k) = Σ_n a_n e^{−inθ_k}.
    pub fn spectrum(&self) -> Vec<Complex64> {
        fft::fft(&self.alpha)
    }

    /// Defocusing domain guard (trips at 0.9, not 1.0).
    pub fn check_domain(&self) -> Result<()> {
        check_domain(&self.alpha, self.sign)
    }
}

pub fn check_domain(alpha: &[Complex64], sign: Sign) -> Result<()> {
    if sign == Sign::Defocusing {
        let sup = fft::linf_norm(alpha);
        if sup >= DEFOCUSING_GUARD {
            return Err(Error::RejectedState {
                sup,
                guard: DEFOCUSING_GUARD,
            });
        }
    }
    Ok(())
}

/// Λ_d(θ_k) = −2 sin θ_k for an N-site lattice.
pub fn mal_symbol(n: usize) -> Vec<f64> {
    (0..n).map(|k| -2.0 * fft::theta(k, n).sin()).collect()
}

/// AL linear symbol: ∂_t u = iΛu with Λ(θ) = 2 cos θ − 2 = −ω_AL(θ).
pub fn al_symbol(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * fft::theta(k, n).cos() - 2.0).collect()
}

/// Nonlinearity of the mAL flow: F_n = α_nβ_n(α_{n+1} − α_{n−1}).
pub fn mal_nonlinearity(alpha: &[Complex64], sign: Sign) -> Vec<Complex64> {
    let n = alpha.len();
    let s = sign.factor();
    (0..n)
        .map(|i| {
            let prev = alpha[(i + n - 1) % n];
            let next = alpha[(i + 1) % n];
            s * alpha[i].norm_sqr() * (next - prev)
        })
        .collect()
}

/// Nonlinearity of the AL flow solved for ∂_t u: F_n = −i·u_nv_n(u_{n−1}+u_{n+1}).
pub fn al_nonlinearity(u: &[Complex64], sign: Sign) -> Vec<Complex64> {
    let n = u.len();
    let s = sign.factor();
    (0..n)
        .map(|i| {
            let prev = u[(i + n - 1) % n];
            let next = u[(i + 1) % n];
            -Complex64::i() * s * u[i].norm_sqr() * (prev + next)
        })
        .collect()
}

/// Full mAL right-hand side ∂_τ α_n = −(1 − α_nβ_n)(α_{n+1} − α_{n−1}).
pub fn mal_rhs(state: &LatticeState) -> Result<Vec<Complex64>> {
    if state.gauge != Gauge::Mal {
        return Err(Error::Precondition("mal_rhs expects an mAL-gauge state".into()));
    }
    state.check_domain()?;
    let a = &state.alpha;
    let n = a.len();
    let s = state.sign.factor();
    Ok((0..n)
        .map(|i| {
            let prev = a[(i + n - 1) % n];
            let next = a[(i + 1) % n];
            -(1.0 - s * a[i].norm_sqr()) * (next - prev)
        })
        .collect())
}

/// Full AL right-hand side, solved for ∂_t u_n.
pub fn al_rhs(state: &LatticeState) -> Result<Vec<Complex64>> {
    if state.gauge != Gauge::Al {
        return Err(Error::Precondition("al_rhs expects an AL-gauge state".into()));
    }
    state.check_domain()?;
    let u = &state.alpha;
    let n = u.len();
    let s = state.sign.factor();
    Ok((0..n)
        .map(|i| {
            let prev = u[(i + n - 1) % n];
            let next = u[(i + 1) % n];
            Complex64::i() * (prev - 2.0 * u[i] + next)
                - Complex64::i() * s * u[i].norm_sqr() * (prev + next)
        })
        .collect())
}

/// Direction of the gauge change of variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaugeDirection {
    AlToMal,
    MalToAl,
}

/// α_n = (−i)^n e^{2it} u_n and its inverse.  The lattice must have N ≡ 0
/// (mod 4) so that (−i)^n is single-valued under periodic indexing.
pub fn gauge_transform(state: &LatticeState, direction: GaugeDirection) -> Result<LatticeState> {
    let n = state.n();
    if n % 4 != 0 {
        return Err(Error::Precondition(format!(
            "gauge transform needs N divisible by 4, got N = {n}"
        )));
    }
    let (want, target) = match direction {
        GaugeDirection::AlToMal => (Gauge::Al, Gauge::Mal),
        GaugeDirection::MalToAl => (Gauge::Mal, Gauge::Al),
    };
    if state.gauge != want {
        return Err(Error::Precondition(format!(
            "gauge transform source mismatch: state is {:?}",
            state.gauge
        )));
    }
    let t = state.time;
    // (−i)^n cycles (1, −i, −1, i); the inverse uses i^n e^{−2it}.
    let minus_i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
    ];
    let phase = match direction {
        GaugeDirection::AlToMal => Complex64::from_polar(1.0, 2.0 * t),
        GaugeDirection::MalToAl => Complex64::from_polar(1.0, -2.0 * t),
    };
    let alpha = state
        .alpha
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let p = match direction {
                GaugeDirection::AlToMal => minus_i_pow[i % 4],
                GaugeDirection::MalToAl => minus_i_pow[i % 4].conj(),
            };
            p * phase * z
        })
        .collect();
    LatticeState::new(state.h, state.sign, target, t, alpha)
}

/// The scalars conserved along the mAL flow that this crate monitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedSet {
    /// M(α) = −Σ ln(1 − α_nβ_n).
    pub mass: f64,
    /// E(α) = −Σ {α_nβ_{n+1} + α_{n+1}β_n + 2 ln(1 − α_nβ_n)}.
    pub energy: f64,
    /// Quadratic part of E: ±Σ |α_{n+1} − α_n|².
    pub energy_quadratic: f64,
    /// P(α) = Im Σ β_n(α_{n+1} − α_{n−1}).
    pub momentum: f64,
}

/// Evaluate M, E, E^[2] (sum form), and P on an mAL-gauge state.
pub fn conserved_quantities(state: &LatticeState) -> Result<ConservedSet> {
    if state.gauge != Gauge::Mal {
        return Err(Error::Precondition(
            "conserved quantities are defined in the mAL gauge".into(),
        ));
    }
    state.check_domain()?;
    let a = &state.alpha;
    let n = a.len();
    let s = state.sign.factor();
    let mut mass = 0.0;
    let mut hop = 0.0; // Σ (α_nβ_{n+1} + α_{n+1}β_n) = 2s Σ Re(α_n ᾱ_{n+1})
    let mut quad = 0.0; // Σ |α_{n+1} − α_n|²
    let mut mom = 0.0;
    for i in 0..n {
        let cur = a[i];
        let next = a[(i + 1) % n];
        let prev = a[(i + n - 1) % n];
        let x = s * cur.norm_sqr();
        mass -= (1.0 - x).ln();
        hop += 2.0 * s * (cur * next.conj()).re;
        quad += (next - cur).norm_sqr();
        mom += s * (cur.conj() * (next - prev)).im;
    }
    Ok(ConservedSet {
        mass,
        energy: -hop + 2.0 * mass, // −Σ hop − 2Σ ln(1−x), and Σ ln(1−x) = −M
        energy_quadratic: s * quad,
        momentum: mom,
    })
}

/// E^[2] through the Fourier identity ±(1/N) Σ_k 4 sin²(θ_k/2) |α̂(θ_k)|².
pub fn e2_fourier(state: &LatticeState) -> f64 {
    let n = state.n();
    let spec = state.spectrum();
    let s = state.sign.factor();
    let sum: f64 = spec
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let half = fft::theta(k, n) / 2.0;
            4.0 * half.sin().powi(2) * c.norm_sqr()
        })
        .sum();
    s * sum / n as f64
}

/// Mass equivalence ½|M| ≤ ‖α‖² ≤ 2|M|, valid whenever ‖α‖² ≤ 1/20.
pub fn mass_equivalence_holds(mass: f64, l2_sq: f64) -> bool {
    0.5 * mass.abs() <= l2_sq && l2_sq <= 2.0 * mass.abs()
}

/// Max over output times of the discrete Duhamel defect
/// ‖α(τ) − e^{iτΛ_d}α(0) − ∫₀^τ e^{i(τ−s)Λ_d} F[α(s)] ds‖_{ℓ²},
/// with the time integral by composite Simpson on the stored trajectory and
/// the propagator applied exactly in Fourier space.
pub fn discrete_duhamel_residual(traj: &Trajectory) -> Result<f64> {
    let n_times = traj.times.len();
    if n_times < 3 {
        return Err(Error::InsufficientData(format!(
            "Duhamel residual needs >= 3 stored times, got {n_times}"
        )));
    }
    traj.require_uniform_times()?;
    let model = traj.model;
    if !matches!(model.gauge(), Gauge::Mal) {
        return Err(Error::Precondition(
            "discrete Duhamel residual is defined for mAL trajectories".into(),
        ));
    }
    let n = traj.states[0].n();
    let symbol = mal_symbol(n);
    let dt = traj.times[1] - traj.times[0];

    // Spectra of the states and of e^{−i s Λ} F[α(s)] at each stored time.
    let spectra: Vec<Vec<Complex64>> = traj.states.iter().map(|st| st.spectrum()).collect();
    let twisted_f: Vec<Vec<Complex64>> = traj
        .states
        .iter()
        .enumerate()
        .map(|(j, st)| {
            let mut fh = fft::fft(&model.nonlinearity(&st.alpha));
            let s_j = traj.times[j];
            for (k, c) in fh.iter_mut().enumerate() {
                *c *= Complex64::from_polar(1.0, -s_j * symbol[k]);
            }
            fh
        })
        .collect();

    let sqrt_n = (n as f64).sqrt();
    let mut worst = 0.0f64;
    for j in 2..n_times {
        let w = crate::integrate::simpson_weights(j, dt);
        let tau = traj.times[j];
        let mut res_sq = 0.0;
        for k in 0..n {
            let mut integral = Complex64::new(0.0, 0.0);
            for (i, wi) in w.iter().enumerate() {
                integral += *wi * twisted_f[i][k];
            }
            let prop = Complex64::from_polar(1.0, tau * symbol[k]);
            let defect = spectra[j][k] - prop * (spectra[0][k] + integral);
            res_sq += defect.norm_sqr();
        }
        worst = worst.max(res_sq.sqrt() / sqrt_n);
    }
    Ok(worst)
}
