//! Exponential (integrating-factor) Runge–Kutta time stepping.
//!
//! The linear part of every model here is diagonal in Fourier with a real
//! symbol Λ (∂_t y = iΛy + F[y]), so the Lawson scheme applies the exact
//! propagator e^{i dt Λ} and integrates only the twisted nonlinearity with
//! classical RK4.  This stays well-defined where the symbol vanishes
//! (Λ_d has zeros at θ ∈ {0, ±π}), which is why it is preferred over ETDRK4.

use crate::error::{Error, Result};
use crate::fft;
use crate::lattice::{
    check_domain, conserved_quantities, gauge_transform, ConservedSet, Gauge, GaugeDirection,
    LatticeState, Sign,
};
use num_complex::Complex64;

/// Minimal step size before the adaptive controller gives up.
pub const DT_FLOOR: f64 = 1e-12;

/// A flow whose linear part is diagonal in the Fourier basis.
pub trait SpectralSystem: Sync {
    /// Real symbol Λ(k) per Fourier bin; the linear flow is e^{itΛ}.
    fn symbol(&self) -> &[f64];
    /// Nonlinear right-hand side, evaluated on physical-space values.
    fn nonlinear(&self, phys: &[Complex64]) -> Result<Vec<Complex64>>;
    /// Domain guard for accepted states.
    fn guard(&self, _phys: &[Complex64]) -> Result<()> {
        Ok(())
    }
}

/// Which lattice flow to integrate, and whether the nonlinearity is active
/// (tests disable it to compare against the exact linear propagator).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeModel {
    pub gauge: Gauge,
    pub sign: Sign,
    pub nonlinear: bool,
}

impl LatticeModel {
    pub fn mal(sign: Sign) -> Self {
        Self {
            gauge: Gauge::Mal,
            sign,
            nonlinear: true,
        }
    }

    pub fn al(sign: Sign) -> Self {
        Self {
            gauge: Gauge::Al,
            sign,
            nonlinear: true,
        }
    }

    pub fn linear_only(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn gauge(&self) -> Gauge {
        self.gauge
    }

    pub fn symbol(&self, n: usize) -> Vec<f64> {
        match self.gauge {
            Gauge::Mal => crate::lattice::mal_symbol(n),
            Gauge::Al => crate::lattice::al_symbol(n),
        }
    }

    pub fn nonlinearity(&self, values: &[Complex64]) -> Vec<Complex64> {
        if !self.nonlinear {
            return vec![Complex64::new(0.0, 0.0); values.len()];
        }
        match self.gauge {
            Gauge::Mal => crate::lattice::mal_nonlinearity(values, self.sign),
            Gauge::Al => crate::lattice::al_nonlinearity(values, self.sign),
        }
    }

    pub fn system(&self, n: usize) -> LatticeSystem {
        LatticeSystem {
            model: *self,
            symbol: self.symbol(n),
        }
    }
}

pub struct LatticeSystem {
    model: LatticeModel,
    symbol: Vec<f64>,
}

impl SpectralSystem for LatticeSystem {
    fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn nonlinear(&self, phys: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.model.nonlinear {
            check_domain(phys, self.model.sign)?;
        }
        Ok(self.model.nonlinearity(phys))
    }

    fn guard(&self, phys: &[Complex64]) -> Result<()> {
        if self.model.nonlinear {
            check_domain(phys, self.model.sign)?;
        }
        Ok(())
    }
}

/// System defined by a bare symbol and a nonlinearity closure; used by tests
/// that probe the stepper with custom symbols (e.g. Λ_d replaced by its
/// leading Taylor term).
pub struct FnSystem<F: Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync> {
    pub symbol: Vec<f64>,
    pub f: F,
}

impl<F: Fn(&[Complex64]) -> Result<Vec<Complex64>> + Sync> SpectralSystem for FnSystem<F> {
    fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    fn nonlinear(&self, phys: &[Complex64]) -> Result<Vec<Complex64>> {
        (self.f)(phys)
    }
}

fn require_finite(v: &[Complex64], t: f64) -> Result<()> {
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::StepFailure(t));
    }
    Ok(())
}

/// One classical Lawson-RK4 step on spectral data: transform to the rotating
/// frame of the exact linear flow, RK4 the twisted nonlinearity, transform
/// back.
pub fn lawson_rk4_step_spectral(
    sys: &dyn SpectralSystem,
    uhat: &[Complex64],
    t: f64,
    dt: f64,
) -> Result<Vec<Complex64>> {
    let n = uhat.len();
    let sym = sys.symbol();
    debug_assert_eq!(sym.len(), n);
    let e_half: Vec<Complex64> = sym
        .iter()
        .map(|&l| Complex64::from_polar(1.0, l * dt / 2.0))
        .collect();

    let nhat = |vhat: &[Complex64]| -> Result<Vec<Complex64>> {
        let phys = fft::ifft(vhat);
        require_finite(&phys, t)?;
        let f = sys.nonlinear(&phys)?;
        let mut fh = f;
        fft::fft_in_place(&mut fh);
        Ok(fh)
    };

    // a = N(u0)
    let a = nhat(uhat)?;
    // b = N(E½(u0 + dt/2·a))
    let stage: Vec<Complex64> = (0..n)
        .map(|k| e_half[k] * (uhat[k] + 0.5 * dt * a[k]))
        .collect();
    let b = nhat(&stage)?;
    // c = N(E½u0 + dt/2·b)
    let u_half: Vec<Complex64> = (0..n).map(|k| e_half[k] * uhat[k]).collect();
    let stage: Vec<Complex64> = (0..n).map(|k| u_half[k] + 0.5 * dt * b[k]).collect();
    let c = nhat(&stage)?;
    // d = N(E1·u0 + dt·E½·c)
    let u_full: Vec<Complex64> = (0..n).map(|k| e_half[k] * u_half[k]).collect();
    let stage: Vec<Complex64> = (0..n)
        .map(|k| u_full[k] + dt * e_half[k] * c[k])
        .collect();
    let d = nhat(&stage)?;

    let next: Vec<Complex64> = (0..n)
        .map(|k| {
            let e1 = e_half[k] * e_half[k];
            u_full[k] + dt / 6.0 * (e1 * a[k] + 2.0 * e_half[k] * (b[k] + c[k]) + d[k])
        })
        .collect();
    require_finite(&next, t + dt)?;
    Ok(next)
}

/// Physical-space wrapper around [`lawson_rk4_step_spectral`].
pub fn lawson_rk4_step(
    sys: &dyn SpectralSystem,
    phys: &[Complex64],
    t: f64,
    dt: f64,
) -> Result<Vec<Complex64>> {
    let uhat = fft::fft(phys);
    let next = lawson_rk4_step_spectral(sys, &uhat, t, dt)?;
    Ok(fft::ifft(&next))
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    /// Local error budget per unit time (step acceptance uses tol·dt).
    pub tol: f64,
    /// Number of uniform output intervals over [0, t_final].
    pub n_out: usize,
    /// Initial trial step.
    pub dt_init: f64,
    /// Bypass adaptivity with a fixed step (clipped per segment so outputs
    /// land exactly).
    pub fixed_dt: Option<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            n_out: 16,
            dt_init: 1e-2,
            fixed_dt: None,
        }
    }
}

/// Raw integrator output: physical states at uniform output times.
pub struct RawTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<Complex64>>,
    pub accepted: usize,
    pub rejected: usize,
}

/// Adaptive (step-doubling) evolution of a spectral system.
///
/// Acceptance compares one dt step against two dt/2 steps; the Richardson
/// difference is the error estimate, safety factor 0.9, growth clamped to
/// [0.2, 5].  The finer solution is propagated, keeping the observed order 4.
pub fn evolve_raw(
    sys: &dyn SpectralSystem,
    y0: &[Complex64],
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<RawTrajectory> {
    if t_final < 0.0 {
        return Err(Error::Precondition("t_final must be >= 0".into()));
    }
    if opts.tol <= 0.0 {
        return Err(Error::Precondition("tol must be > 0".into()));
    }
    sys.guard(y0)?;
    let n = y0.len();
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let mut times = vec![0.0];
    let mut states = vec![y0.to_vec()];
    if t_final == 0.0 {
        return Ok(RawTrajectory {
            times,
            states,
            accepted: 0,
            rejected: 0,
        });
    }

    let n_out = opts.n_out.max(1);
    let mut uhat = fft::fft(y0);
    let mut t = 0.0;
    let mut dt_ctrl = opts.dt_init.min(t_final / n_out as f64);
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    for seg in 1..=n_out {
        let t_end = t_final * seg as f64 / n_out as f64;
        if let Some(dt_fixed) = opts.fixed_dt {
            let span = t_end - t;
            let steps = (span / dt_fixed).ceil().max(1.0) as usize;
            let dt = span / steps as f64;
            for _ in 0..steps {
                uhat = lawson_rk4_step_spectral(sys, &uhat, t, dt)?;
                t += dt;
                accepted += 1;
            }
            t = t_end;
        } else {
            while t < t_end - 1e-14 * t_final {
                let dt = dt_ctrl.min(t_end - t);
                let attempt = (|| -> Result<(Vec<Complex64>, f64)> {
                    let big = lawson_rk4_step_spectral(sys, &uhat, t, dt)?;
                    let mid = lawson_rk4_step_spectral(sys, &uhat, t, dt / 2.0)?;
                    let fine = lawson_rk4_step_spectral(sys, &mid, t + dt / 2.0, dt / 2.0)?;
                    let err = big
                        .iter()
                        .zip(&fine)
                        .map(|(x, y)| (x - y).norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                        * inv_sqrt_n;
                    Ok((fine, err))
                })();
                match attempt {
                    Ok((fine, err)) => {
                        let tol_step = opts.tol * dt;
                        if err <= tol_step {
                            uhat = fine;
                            t += dt;
                            accepted += 1;
                            let grow = if err == 0.0 {
                                5.0
                            } else {
                                (0.9 * (tol_step / err).powf(0.2)).clamp(0.2, 5.0)
                            };
                            dt_ctrl = dt * grow;
                        } else {
                            rejected += 1;
                            let shrink = (0.9 * (tol_step / err).powf(0.2)).clamp(0.2, 5.0);
                            dt_ctrl = dt * shrink.min(0.9);
                        }
                    }
                    Err(e @ Error::StepFailure(_)) | Err(e @ Error::RejectedState { .. }) => {
                        rejected += 1;
                        dt_ctrl = dt * 0.2;
                        if dt_ctrl < DT_FLOOR {
                            return Err(e);
                        }
                    }
                    Err(e) => return Err(e),
                }
                if dt_ctrl < DT_FLOOR {
                    return Err(Error::Stiffness {
                        dt: dt_ctrl,
                        t,
                        norm: fft::l2_norm(&uhat) * inv_sqrt_n,
                    });
                }
            }
            t = t_end;
        }
        let phys = fft::ifft(&uhat);
        sys.guard(&phys)?;
        require_finite(&phys, t)?;
        times.push(t_end);
        states.push(phys);
    }

    Ok(RawTrajectory {
        times,
        states,
        accepted,
        rejected,
    })
}

/// Time-stamped lattice trajectory with integrator metadata and the
/// invariant-drift log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub model: LatticeModel,
    pub h: f64,
    /// Lattice times τ of the stored states (uniform).
    pub times: Vec<f64>,
    pub states: Vec<LatticeState>,
    pub accepted: usize,
    pub rejected: usize,
    /// M, E, E^[2], P per output time; empty when not measurable
    /// (e.g. AL gauge on a lattice with N not divisible by 4).
    pub drift: Vec<ConservedSet>,
}

impl Trajectory {
    pub fn initial(&self) -> &LatticeState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &LatticeState {
        self.states.last().unwrap()
    }

    pub fn require_uniform_times(&self) -> Result<()> {
        if self.times.len() < 2 {
            return Ok(());
        }
        let dt = self.times[1] - self.times[0];
        for w in self.times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-12 * dt.max(1.0) {
                return Err(Error::Precondition(
                    "trajectory output times are not uniform".into(),
                ));
            }
        }
        Ok(())
    }

    /// Keep every `stride`-th stored state (output-dt halving studies).
    pub fn subsample(&self, stride: usize) -> Trajectory {
        let pick = |i: usize| i % stride == 0;
        Trajectory {
            model: self.model,
            h: self.h,
            times: self
                .times
                .iter()
                .enumerate()
                .filter(|(i, _)| pick(*i))
                .map(|(_, t)| *t)
                .collect(),
            states: self
                .states
                .iter()
                .enumerate()
                .filter(|(i, _)| pick(*i))
                .map(|(_, s)| s.clone())
                .collect(),
            accepted: self.accepted,
            rejected: self.rejected,
            drift: Vec::new(),
        }
    }

    /// Max over output times of |Q(τ) − Q(0)| / max(|Q(0)|, 1e−14) for
    /// Q ∈ {M, E, P}.
    pub fn max_relative_drift(&self) -> Option<(f64, f64, f64)> {
        let first = self.drift.first()?;
        let rel = |q: f64, q0: f64| (q - q0).abs() / q0.abs().max(1e-14);
        let mut worst = (0.0f64, 0.0f64, 0.0f64);
        for cs in &self.drift {
            worst.0 = worst.0.max(rel(cs.mass, first.mass));
            worst.1 = worst.1.max(rel(cs.energy, first.energy));
            worst.2 = worst.2.max(rel(cs.momentum, first.momentum));
        }
        Some(worst)
    }
}

fn measure_drift(model: &LatticeModel, state: &LatticeState) -> Option<ConservedSet> {
    match model.gauge {
        Gauge::Mal => conserved_quantities(state).ok(),
        Gauge::Al => {
            let mal = gauge_transform(state, GaugeDirection::AlToMal).ok()?;
            conserved_quantities(&mal).ok()
        }
    }
}

/// Evolve a lattice state under the given model up to lattice time τ =
/// `t_final`, recording invariant drift at each output time.
pub fn evolve_model(
    state: &LatticeState,
    model: LatticeModel,
    t_final: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    if state.gauge != model.gauge {
        return Err(Error::Precondition(format!(
            "state gauge {:?} does not match model gauge {:?}",
            state.gauge, model.gauge
        )));
    }
    let sys = model.system(state.n());
    let raw = evolve_raw(&sys, &state.alpha, t_final, opts)?;
    let states: Vec<LatticeState> = raw
        .times
        .iter()
        .zip(&raw.states)
        .map(|(t, v)| LatticeState {
            h: state.h,
            sign: state.sign,
            gauge: state.gauge,
            time: state.time + t,
            alpha: v.clone(),
        })
        .collect();
    let drift: Vec<ConservedSet> = states
        .iter()
        .map(|st| measure_drift(&model, st))
        .collect::<Option<Vec<_>>>()
        .unwrap_or_default();
    Ok(Trajectory {
        model,
        h: state.h,
        times: raw.times,
        states,
        accepted: raw.accepted,
        rejected: raw.rejected,
        drift,
    })
}

/// Convenience wrapper: full nonlinear model inferred from the state.
pub fn evolve(state: &LatticeState, t_final: f64, tol: f64, n_out: usize) -> Result<Trajectory> {
    let model = LatticeModel {
        gauge: state.gauge,
        sign: state.sign,
        nonlinear: true,
    };
    evolve_model(
        state,
        model,
        t_final,
        &EvolveOptions {
            tol,
            n_out,
            ..Default::default()
        },
    )
}

/// 2/3-rule dealiasing: zero every mode with |m̃| > M/3.  Used by the mKdV
/// solver's cubic nonlinearity; the lattice models are pointwise on the
/// lattice and need no dealiasing.
pub fn dealias(spectrum: &mut [Complex64]) {
    let m = spectrum.len();
    let cut = m as f64 / 3.0;
    for (k, c) in spectrum.iter_mut().enumerate() {
        if (fft::signed_index(k, m) as f64).abs() > cut {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Composite Simpson weights for `panels` uniform panels of width `dt`
/// (panels + 1 nodes).  Odd panel counts close with Simpson 3/8 on the last
/// three panels, preserving 4th order.  Needs panels ≥ 2.
pub fn simpson_weights(panels: usize, dt: f64) -> Vec<f64> {
    assert!(panels >= 2, "Simpson needs at least 2 panels");
    let mut w = vec![0.0; panels + 1];
    let even_part = if panels % 2 == 0 { panels } else { panels - 3 };
    if even_part >= 2 {
        w[0] += dt / 3.0;
        w[even_part] += dt / 3.0;
        for i in 1..even_part {
            w[i] += if i % 2 == 1 { 4.0 * dt / 3.0 } else { 2.0 * dt / 3.0 };
        }
    }
    if panels % 2 == 1 {
        let base = panels - 3;
        let c = 3.0 * dt / 8.0;
        w[base] += c;
        w[base + 1] += 3.0 * c;
        w[base + 2] += 3.0 * c;
        w[base + 3] += c;
    }
    w
}
