//! h-refinement sweeps: error functionals, weak pairings, the tightness
//! diagnostic, empirical rate estimation, and CSV reports.

use crate::error::{Error, Result};
use crate::field::{gaussian_profile, wrap_coord, ContinuumField, Taper};
use crate::integrate::{evolve_model, EvolveOptions, LatticeModel, Trajectory};
use crate::lattice::{gauge_transform, GaugeDirection, LatticeState, Sign};
use crate::mkdv::{solve_mkdv_opts, MkdvOptions, MkdvSolution};
use crate::spectral::{
    al_moving_frame_profile, moving_frame_profile, sample_initial_data_with_taper,
    tightness_weight,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// One record of the sweep, one line of the report CSV.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    pub t: f64,
    pub s: f64,
    /// ‖φʰ(t) − φ(t)‖_{H^s}.
    pub err_hs: f64,
    /// h^{1/2}‖h⁻¹α_n(3h⁻³t) − φ(t, nh−2ht)‖_{ℓ²_n}.
    pub err_lattice: f64,
    /// |⟨ψ_k, φʰ(t) − φ(t)⟩_{H¹}| against the three fixed test profiles.
    pub weak: [f64; 3],
    pub tightness_sup: f64,
    pub mass_drift: f64,
    pub energy_drift: f64,
    pub runtime_s: f64,
}

impl ConvergenceRow {
    pub fn csv_header() -> &'static str {
        "h,t,s,err_hs,err_lattice,weak_g1,weak_g2,weak_g3,tightness_sup,mass_drift,energy_drift,runtime_s"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.3}",
            self.h,
            self.t,
            self.s,
            self.err_hs,
            self.err_lattice,
            self.weak[0],
            self.weak[1],
            self.weak[2],
            self.tightness_sup,
            self.mass_drift,
            self.energy_drift,
            self.runtime_s
        )
    }
}

/// ‖φʰ − φ‖_{H^s} after spectrally resampling both onto the finer of the
/// two grids.
pub fn hs_error(phih: &ContinuumField, phi: &ContinuumField, s: f64) -> Result<f64> {
    if (phih.period - phi.period).abs() > 1e-9 * phi.period {
        return Err(Error::Precondition(format!(
            "period mismatch: {} vs {}",
            phih.period, phi.period
        )));
    }
    let m = phih.len().max(phi.len());
    let a = phih.resample(m);
    let b = phi.resample(m);
    let diff: Vec<Complex64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x - y)
        .collect();
    Ok(ContinuumField::new(a.period, diff).sobolev_norm(s))
}

/// The lattice-side functional h^{1/2}‖h⁻¹α_n(3h⁻³t) − φ(t, nh−2ht)‖_{ℓ²_n},
/// with φ evaluated at the shifted lattice points by exact Fourier translation.
pub fn lattice_comparison(state: &LatticeState, phi: &ContinuumField, t: f64) -> Result<f64> {
    let h = state.h;
    let expected_tau = 3.0 * t / (h * h * h);
    if (state.time - expected_tau).abs() > 1e-9 * expected_tau.abs().max(1.0) {
        return Err(Error::Precondition(format!(
            "time inconsistency: state at tau = {} but 3h^-3 t = {expected_tau}",
            state.time
        )));
    }
    let n = state.n();
    if phi.len() % n != 0 {
        return Err(Error::Precondition(format!(
            "reference grid {} does not contain the {n} lattice points",
            phi.len()
        )));
    }
    // φ(t, nh − 2ht) = [translate by −2ht](nh)
    let shifted = phi.translate(-2.0 * h * t);
    let stride = phi.len() / n;
    let sum_sq: f64 = (0..n)
        .map(|i| {
            let diff = state.alpha[i] / h - shifted.values[i * stride];
            diff.norm_sqr()
        })
        .sum();
    Ok(h.sqrt() * sum_sq.sqrt())
}

/// sup over stored times of h⁻¹ Σ_n w(h,L;τ,n)|α_n(τ)|² with the smooth
/// moving-window weight.
pub fn tightness_profile(traj: &Trajectory, l: f64) -> f64 {
    let mut sup = 0.0f64;
    for (tau, state) in traj.times.iter().zip(&traj.states) {
        let n = state.n();
        let sum: f64 = state
            .alpha
            .iter()
            .enumerate()
            .map(|(site, z)| tightness_weight(state.h, l, *tau, site, n) * z.norm_sqr())
            .sum();
        sup = sup.max(sum / state.h);
    }
    sup
}

/// The three fixed test profiles for the weak-convergence surrogate:
/// Gaussian, Gaussian×x, modulated Gaussian.
pub fn weak_test_profiles(period: f64, m: usize) -> [ContinuumField; 3] {
    let sigma = 1.5;
    let g1 = gaussian_profile(period, m, 1.0, sigma, 0.0);
    let g2 = ContinuumField::from_fn(period, m, |x| {
        let d = wrap_coord(x, period);
        Complex64::new(d * (-d * d / (2.0 * sigma * sigma)).exp(), 0.0)
    });
    let g3 = ContinuumField::from_fn(period, m, |x| {
        let d = wrap_coord(x, period);
        Complex64::from_polar((-d * d / (2.0 * sigma * sigma)).exp(), 2.0 * d)
    });
    [g1, g2, g3]
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Initial profile on the reference grid; its period fixes N·h.
    pub phi0: ContinuumField,
    pub sign: Sign,
    /// Strictly decreasing mesh sizes.
    pub h_list: Vec<f64>,
    /// Comparison horizon T; comparison times are T/4, T/2, T (just {0} if T = 0).
    pub t_final: f64,
    pub s_list: Vec<f64>,
    /// Integrator tolerance per unit time.
    pub tol: f64,
    /// Tightness window size L.
    pub tightness_l: f64,
    pub taper: Taper,
    /// Deliberately solve the continuum reference with the opposite sign
    /// (control experiment; convergence must break down).
    pub mismatch_signs: bool,
    /// Stored outputs per lattice trajectory (multiple of 4).
    pub n_out: usize,
}

impl SweepConfig {
    pub fn new(phi0: ContinuumField, sign: Sign, h_list: Vec<f64>, t_final: f64) -> Self {
        Self {
            phi0,
            sign,
            h_list,
            t_final,
            s_list: vec![0.0],
            tol: 1e-10,
            tightness_l: 8.0,
            taper: Taper::SmoothExp,
            mismatch_signs: false,
            n_out: 16,
        }
    }

    /// Comparison times and the lattice output indices they live at.
    fn comparison_times(&self) -> Vec<(f64, usize)> {
        if self.t_final == 0.0 {
            return vec![(0.0, 0)];
        }
        let q = self.n_out / 4;
        vec![
            (self.t_final / 4.0, q),
            (self.t_final / 2.0, 2 * q),
            (self.t_final, 4 * q),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct RateRow {
    pub t: f64,
    pub s: f64,
    pub slope: f64,
    pub r_squared: f64,
    pub monotone: bool,
}

#[derive(Debug)]
pub struct SweepResult {
    pub rows: Vec<ConvergenceRow>,
    pub summary: Vec<RateRow>,
    /// L² gap between the AL-path and mAL-path profiles at t = T (coarsest h).
    pub gauge_gap: Option<f64>,
    pub warnings: Vec<String>,
    pub reference: MkdvSolution,
}

struct HRun {
    rows: Vec<ConvergenceRow>,
    gauge_gap: Option<f64>,
}

fn run_single_h(
    cfg: &SweepConfig,
    h: f64,
    reference: &MkdvSolution,
    check_gauge_path: bool,
) -> Result<HRun> {
    let start = Instant::now();
    let n_real = cfg.phi0.period / h;
    let n = n_real.round() as usize;
    if (n_real - n as f64).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "period {} not an integer multiple of h = {h}",
            cfg.phi0.period
        )));
    }
    let phi0_h = cfg.phi0.resample(2 * n);
    let alpha0 = sample_initial_data_with_taper(&phi0_h, h, cfg.sign, cfg.taper)?;
    let tau_max = 3.0 * cfg.t_final / (h * h * h);
    let model = LatticeModel::mal(cfg.sign);
    let traj = evolve_model(
        &alpha0,
        model,
        tau_max,
        &EvolveOptions {
            tol: cfg.tol,
            n_out: cfg.n_out,
            dt_init: 0.01,
            fixed_dt: None,
        },
    )?;
    let tightness_sup = tightness_profile(&traj, cfg.tightness_l);
    let (mass_drift, energy_drift, _) = traj.max_relative_drift().unwrap_or((0.0, 0.0, 0.0));

    let comparison = cfg.comparison_times();
    let profiles = weak_test_profiles(cfg.phi0.period, cfg.phi0.len());

    let mut rows = Vec::new();
    let mut gauge_gap = None;
    for (t, out_idx) in &comparison {
        // comparison indices address the uniform output grid 0..=n_out
        let state = traj.states[*out_idx].clone();
        debug_assert!((state.time - 3.0 * t / (h * h * h)).abs() <= 1e-9 * state.time.abs().max(1.0));
        let phi_ref = reference_at(reference, *t)?;
        let phih = moving_frame_profile(&state, *t)?;
        let err_lattice = lattice_comparison(&state, &phi_ref, *t)?;
        // Weak pairings against the difference on the common grid.
        let m_common = phih.len().max(phi_ref.len());
        let a = phih.resample(m_common);
        let b = phi_ref.resample(m_common);
        let diff = ContinuumField::new(
            a.period,
            a.values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| x - y)
                .collect(),
        );
        let weak = {
            let mut w = [0.0; 3];
            for (k, psi) in profiles.iter().enumerate() {
                w[k] = psi.resample(m_common).h1_inner(&diff).norm();
            }
            w
        };
        for &s in &cfg.s_list {
            rows.push(ConvergenceRow {
                h,
                t: *t,
                s,
                err_hs: hs_error(&phih, &phi_ref, s)?,
                err_lattice,
                weak,
                tightness_sup,
                mass_drift,
                energy_drift,
                runtime_s: start.elapsed().as_secs_f64(),
            });
        }
        // Gauge-path identity at the final comparison time only.
        if check_gauge_path && (*t - cfg.t_final).abs() <= 1e-12 * cfg.t_final.max(1.0) {
            gauge_gap = Some(gauge_path_gap(cfg, &alpha0, *t, &phih)?);
        }
    }
    // stamp the full runtime on every row of this h
    let elapsed = start.elapsed().as_secs_f64();
    for row in &mut rows {
        row.runtime_s = elapsed;
    }
    Ok(HRun { rows, gauge_gap })
}

/// Evolve the AL system from u_n(0) = i^n α_n(0) and build φʰ through the
/// frequency-shifted formula; compare with the mAL-path profile.
fn gauge_path_gap(
    cfg: &SweepConfig,
    alpha0: &LatticeState,
    t: f64,
    phih_mal: &ContinuumField,
) -> Result<f64> {
    let u0 = gauge_transform(alpha0, GaugeDirection::MalToAl)?;
    let h = alpha0.h;
    let tau = 3.0 * t / (h * h * h);
    let traj = evolve_model(
        &u0,
        LatticeModel::al(cfg.sign),
        tau,
        &EvolveOptions {
            tol: cfg.tol,
            n_out: 4,
            dt_init: 0.01,
            fixed_dt: None,
        },
    )?;
    let phih_al = al_moving_frame_profile(traj.final_state(), t)?;
    let m = phih_al.len().max(phih_mal.len());
    let a = phih_al.resample(m);
    let b = phih_mal.resample(m);
    let gap = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
        * a.dx().sqrt();
    Ok(gap)
}

fn reference_at(reference: &MkdvSolution, t: f64) -> Result<ContinuumField> {
    for (time, field) in reference.times.iter().zip(&reference.fields) {
        if (time - t).abs() <= 1e-9 * t.abs().max(1.0) {
            return Ok(field.clone());
        }
    }
    Err(Error::Precondition(format!(
        "reference solution has no stored output at t = {t}"
    )))
}

/// Full sweep: for each h build α(0), evolve mAL, form φʰ, compare against a
/// single finest-resolution mKdV solve, and fill rows; the coarsest h also
/// runs the AL gauge path.  Rows for an h that fails are dropped with a
/// recorded warning and the sweep continues.
pub fn run_convergence_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    for w in cfg.h_list.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Config("h_list must be strictly decreasing".into()));
        }
    }
    if cfg.n_out % 4 != 0 {
        return Err(Error::Config("n_out must be a multiple of 4".into()));
    }
    let ref_sign = if cfg.mismatch_signs {
        cfg.sign.flipped()
    } else {
        cfg.sign
    };
    let reference = if cfg.t_final == 0.0 {
        MkdvSolution {
            sign: ref_sign,
            nonlinear: true,
            times: vec![0.0],
            fields: vec![cfg.phi0.clone()],
            invariants: vec![crate::mkdv::mkdv_invariants(&cfg.phi0, ref_sign)],
            accepted: 0,
            rejected: 0,
        }
    } else {
        solve_mkdv_opts(
            &cfg.phi0,
            cfg.t_final,
            ref_sign,
            &MkdvOptions {
                tol: cfg.tol,
                n_out: 4,
                nonlinear: true,
            },
        )?
    };

    let coarsest = cfg.h_list[0];
    let outcomes: Vec<(f64, Result<HRun>)> = cfg
        .h_list
        .par_iter()
        .map(|&h| (h, run_single_h(cfg, h, &reference, h == coarsest)))
        .collect();

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut gauge_gap = None;
    for (h, outcome) in outcomes {
        match outcome {
            Ok(run) => {
                rows.extend(run.rows);
                if run.gauge_gap.is_some() {
                    gauge_gap = run.gauge_gap;
                }
            }
            Err(e) => warnings.push(format!("h = {h}: {e}")),
        }
    }
    let (summary, mut rate_warnings) = estimate_rates(&rows);
    warnings.append(&mut rate_warnings);
    Ok(SweepResult {
        rows,
        summary,
        gauge_gap,
        warnings,
        reference,
    })
}

/// Least-squares slope of y against x with the coefficient of determination.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if sxx == 0.0 {
        return (0.0, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// Per-(t, s) least-squares slope of log err against log h; groups with
/// fewer than 3 distinct h are skipped with a warning.
pub fn estimate_rates(rows: &[ConvergenceRow]) -> (Vec<RateRow>, Vec<String>) {
    let mut keys: Vec<(f64, f64)> = Vec::new();
    for row in rows {
        if !keys.iter().any(|(t, s)| *t == row.t && *s == row.s) {
            keys.push((row.t, row.s));
        }
    }
    let mut out = Vec::new();
    let mut warnings = Vec::new();
    for (t, s) in keys {
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.t == t && r.s == s)
            .map(|r| (r.h, r.err_hs))
            .collect();
        pts.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap()); // coarse → fine
        if pts.len() < 3 {
            warnings.push(format!(
                "group (t={t}, s={s}) has {} points; need 3 for a slope",
                pts.len()
            ));
            continue;
        }
        let floor = 1e-300;
        let xs: Vec<f64> = pts.iter().map(|(h, _)| h.ln()).collect();
        let ys: Vec<f64> = pts.iter().map(|(_, e)| e.max(floor).ln()).collect();
        let (slope, r2) = least_squares_slope(&xs, &ys);
        let monotone = pts.windows(2).all(|w| w[1].1 < w[0].1);
        out.push(RateRow {
            t,
            s,
            slope,
            r_squared: r2,
            monotone,
        });
    }
    (out, warnings)
}

/// Each err with decreasing h must shrink by at least `ratio` per step.
pub fn monotone_with_ratio(errs_coarse_to_fine: &[f64], ratio: f64) -> bool {
    errs_coarse_to_fine
        .windows(2)
        .all(|w| w[1] > 0.0 && w[0] / w[1] >= ratio)
}

pub fn write_rows_csv(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", ConvergenceRow::csv_header())?;
    for row in rows {
        writeln!(f, "{}", row.to_csv())?;
    }
    Ok(())
}

pub fn write_summary_csv(path: &Path, summary: &[RateRow]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "t,s,slope,r_squared,monotone")?;
    for r in summary {
        writeln!(
            f,
            "{},{},{:.6},{:.6},{}",
            r.t, r.s, r.slope, r.r_squared, r.monotone
        )?;
    }
    Ok(())
}

/// Plot-ready whitespace-separated table (gnuplot `using` friendly).
pub fn write_errors_dat(path: &Path, rows: &[ConvergenceRow]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "# h t s err_hs err_lattice weak_g1 weak_g2 weak_g3 tightness_sup"
    )?;
    for r in rows {
        writeln!(
            f,
            "{} {} {} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e}",
            r.h, r.t, r.s, r.err_hs, r.err_lattice, r.weak[0], r.weak[1], r.weak[2],
            r.tightness_sup
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C;
    use std::f64::consts::PI;

    #[test]
    fn hs_error_identical_fields_and_single_mode() {
        let f = gaussian_profile(32.0, 128, 0.5, 2.0, 0.0);
        assert_eq!(hs_error(&f, &f, 0.7).unwrap(), 0.0);

        // fields differing by a unit-L²-mass mode at ξ = 2: H¹ error √5
        let period = PI;
        let amp = (1.0 / period).sqrt();
        let zero = ContinuumField::zeros(period, 64);
        let mode = ContinuumField::from_fn(period, 64, |x| C::from_polar(amp, 2.0 * x));
        let e = hs_error(&mode, &zero, 1.0).unwrap();
        assert!((e - 5.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hs_error_monotone_in_s() {
        let a = gaussian_profile(32.0, 128, 0.5, 2.0, 0.0);
        let b = gaussian_profile(32.0, 128, 0.45, 1.9, 0.5);
        let e0 = hs_error(&a, &b, 0.0).unwrap();
        let e_half = hs_error(&a, &b, 0.5).unwrap();
        let e1 = hs_error(&a, &b, 1.0).unwrap();
        assert!(e0 <= e_half && e_half <= e1);
    }

    #[test]
    fn rate_estimation_on_synthetic_errors() {
        // err = h² → slope 2.00 ± 0.01; err = const → slope 0, non-monotone flag
        let mk_row = |h: f64, err: f64| ConvergenceRow {
            h,
            t: 1.0,
            s: 0.0,
            err_hs: err,
            err_lattice: err,
            weak: [0.0; 3],
            tightness_sup: 0.0,
            mass_drift: 0.0,
            energy_drift: 0.0,
            runtime_s: 0.0,
        };
        let rows: Vec<ConvergenceRow> =
            [0.4, 0.2, 0.1].iter().map(|&h| mk_row(h, h * h)).collect();
        let (summary, warnings) = estimate_rates(&rows);
        assert!(warnings.is_empty());
        assert!((summary[0].slope - 2.0).abs() < 0.01);
        assert!(summary[0].monotone);

        let rows: Vec<ConvergenceRow> = [0.4, 0.2, 0.1].iter().map(|&h| mk_row(h, 0.7)).collect();
        let (summary, _) = estimate_rates(&rows);
        assert!(summary[0].slope.abs() < 1e-12);
        assert!(!summary[0].monotone);
    }

    #[test]
    fn rate_estimation_skips_degenerate_groups() {
        let rows = vec![ConvergenceRow {
            h: 0.4,
            t: 1.0,
            s: 0.0,
            err_hs: 0.1,
            err_lattice: 0.1,
            weak: [0.0; 3],
            tightness_sup: 0.0,
            mass_drift: 0.0,
            energy_drift: 0.0,
            runtime_s: 0.0,
        }];
        let (summary, warnings) = estimate_rates(&rows);
        assert!(summary.is_empty());
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn tightness_zero_field_and_compact_support() {
        let n = 128;
        let h = 0.2;
        let zero = LatticeState::new(h, Sign::Defocusing, crate::lattice::Gauge::Mal, 0.0,
            vec![C::new(0.0, 0.0); n]).unwrap();
        let traj = Trajectory {
            model: LatticeModel::mal(Sign::Defocusing),
            h,
            times: vec![0.0],
            states: vec![zero],
            accepted: 0,
            rejected: 0,
            drift: Vec::new(),
        };
        assert_eq!(tightness_profile(&traj, 4.0), 0.0);

        // L at least the period: the weight vanishes everywhere reachable.
        let mut bump = vec![C::new(0.0, 0.0); n];
        for (i, v) in bump.iter_mut().enumerate().take(5) {
            *v = C::new(0.1 + i as f64 * 0.01, 0.0);
        }
        let st = LatticeState::new(h, Sign::Defocusing, crate::lattice::Gauge::Mal, 0.0, bump)
            .unwrap();
        let traj = Trajectory {
            model: LatticeModel::mal(Sign::Defocusing),
            h,
            times: vec![0.0],
            states: vec![st],
            accepted: 0,
            rejected: 0,
            drift: Vec::new(),
        };
        // wrapped |x| ≤ P/2, so w ≡ 0 once L ≥ P
        assert_eq!(tightness_profile(&traj, n as f64 * h), 0.0);
    }

    #[test]
    fn zero_sweep_at_t_zero() {
        // α ≡ 0 and φ ≡ 0: every error column is zero.
        let phi0 = ContinuumField::zeros(25.6, 256);
        let cfg = SweepConfig::new(phi0, Sign::Defocusing, vec![0.4, 0.2], 0.0);
        let result = run_convergence_sweep(&cfg).unwrap();
        assert!(result.warnings.iter().all(|w| w.contains("need 3")));
        for row in &result.rows {
            assert_eq!(row.err_hs, 0.0);
            assert_eq!(row.err_lattice, 0.0);
        }
    }
}
