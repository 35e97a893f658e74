//! Smooth spectral cutoffs and localizing windows.
//!
//! All C^∞ cutoffs are built from g(s) = exp(−1/s) (s > 0, else 0) through
//! the standard two-sided blend, so supports are exactly the stated
//! intervals rather than numerical approximations of them.

/// g(s) = exp(−1/s) for s > 0, identically 0 otherwise.
#[inline]
fn g(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth monotone step: 1 at u ≤ 0, 0 at u ≥ 1, with step(u) + step(1−u) = 1.
#[inline]
pub fn smooth_step(u: f64) -> f64 {
    if u <= 0.0 {
        1.0
    } else if u >= 1.0 {
        0.0
    } else {
        let a = g(1.0 - u);
        a / (a + g(u))
    }
}

/// Littlewood–Paley bump: 1 on |r| ≤ 1, 0 on |r| ≥ 2, smooth monotone decay
/// on 1 < |r| < 2 via g(2−r)/(g(2−r)+g(r−1)).
#[inline]
pub fn lp_bump(r: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let a = g(2.0 - r);
        a / (a + g(r - 1.0))
    }
}

/// Raised-cosine variant of [`lp_bump`] (C¹ only): used to check that results
/// are insensitive to the taper choice on the transition band.
#[inline]
pub fn raised_cosine_bump(r: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (r - 1.0)).cos())
    }
}

/// Smooth bump χ with χ = 1 on |x| ≤ 1 and χ = 0 on |x| ≥ 2, used for the
/// tightness weight w = 1 − χ(2(n−2τ)h/L).
#[inline]
pub fn tightness_chi(x: f64) -> f64 {
    lp_bump(x)
}

/// Even bump ρ for the discrete Littlewood–Paley theory: ρ = 1 on
/// |θ| ≤ π/4, ρ = 0 on |θ| ≥ 3π/4, and ρ(θ) + ρ(π − θ) = 1 on the
/// transition band, so that Σ_n ρ(θ + πn) ≡ 1.
#[inline]
pub fn lattice_bump(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let t = theta.abs();
    if t <= PI / 4.0 {
        1.0
    } else if t >= 3.0 * PI / 4.0 {
        0.0
    } else {
        smooth_step((t - PI / 4.0) / (PI / 2.0))
    }
}
