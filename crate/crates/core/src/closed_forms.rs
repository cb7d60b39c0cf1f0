//! Analytic effective widths and starting points for rectangular barriers,
//! rectangular wells and the δ-potential.
//!
//! For these potentials `F' ≡ 0`, so the transmission and reflection
//! effective widths coincide: `d_eff(k) = J'(k) − Λ'(k)` and
//! `x_start(k) = −Λ'(k)`.

use crate::model::Particle;
use crate::scalar::Scalar;

/// Per-wavenumber effective width and average starting point (both nm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForms<S> {
    pub d_eff: S,
    pub x_start: S,
}

impl<S: Scalar> ClosedForms<S> {
    /// `J' = d_eff − x_start`.
    pub fn transmission_phase_slope(&self) -> S {
        self.d_eff - self.x_start
    }

    /// `Λ' = −x_start`.
    pub fn lambda_slope(&self) -> S {
        -self.x_start
    }
}

/// `(cosh z − sinh z / z) / z²`
fn cosh_minus_shc<S: Scalar>(z: S) -> S {
    if z.abs() < S::lit(1e-2) {
        let z2 = z * z;
        S::lit(1.0 / 3.0) + z2 / S::lit(30.0) + z2 * z2 / S::lit(840.0)
    } else {
        (z.cosh() - z.sinhc()) / (z * z)
    }
}

/// `(sinh z / z − 1) / z²`
fn shc_minus_one<S: Scalar>(z: S) -> S {
    if z.abs() < S::lit(1e-2) {
        let z2 = z * z;
        S::lit(1.0 / 6.0) + z2 / S::lit(120.0) + z2 * z2 / S::lit(5040.0)
    } else {
        (z.sinhc() - S::one()) / (z * z)
    }
}

/// `(1 − sin z / z) / z²`
fn one_minus_sinc<S: Scalar>(z: S) -> S {
    if z.abs() < S::lit(1e-2) {
        let z2 = z * z;
        S::lit(1.0 / 6.0) - z2 / S::lit(120.0) + z2 * z2 / S::lit(5040.0)
    } else {
        (S::one() - z.sinc()) / (z * z)
    }
}

/// `(sin z / z − cos z) / z²`
fn sinc_minus_cos<S: Scalar>(z: S) -> S {
    if z.abs() < S::lit(1e-2) {
        let z2 = z * z;
        S::lit(1.0 / 3.0) - z2 / S::lit(30.0) + z2 * z2 / S::lit(840.0)
    } else {
        (z.sinc() - z.cos()) / (z * z)
    }
}

/// Rectangular barrier (`height > 0`) or well (`height < 0`) of width `d`.
///
/// Below the top (`E < V0`) the evanescent forms apply with
/// `κ = √(2m(V0−E))/ħ`; otherwise the oscillatory forms with
/// `κ = √(2m(E−V0))/ħ` and `β = sign(V0)`. `E = V0` is the common
/// `κ → 0` limit of both.
pub fn rect_closed_forms<S: Scalar>(height: S, d: S, k: S, particle: &Particle<S>) -> ClosedForms<S> {
    let two = S::lit(2.0);
    let four = S::lit(4.0);
    let k2 = k * k;
    let energy = particle.energy(k);
    let kappa0_sq = particle.k2_per_ev() * height.abs();
    let kappa0_4 = kappa0_sq * kappa0_sq;

    if energy < height {
        let kappa = (particle.k2_per_ev() * (height - energy)).sqrt();
        let z = kappa * d;
        if z < S::lit(20.0) {
            let shc = z.sinhc();
            let half = (z / two).sinh();
            let den = four * k2 + kappa0_4 * d * d * shc * shc;
            // (κ0² shc − k²)/κ² with κ² = κ0² − k²
            let ratio = S::one() + kappa0_sq * d * d * shc_minus_one(z);
            let d_eff = four * (k2 + kappa0_sq * half * half) * d * ratio / den;
            let x_start =
                -two * kappa0_sq * d * (shc + k2 * d * d * cosh_minus_shc(z)) / den;
            ClosedForms { d_eff, x_start }
        } else {
            // Everything divided through by e^{2z}; u = e^{-z}.
            let u = (-z).exp();
            let one = S::one();
            let den = four * k2 * kappa * kappa * u * u
                + kappa0_4 * (one - u * u) * (one - u * u) / four;
            let d_eff = four / kappa
                * (k2 * u + kappa0_sq * (one - u) * (one - u) / four)
                * (kappa0_sq * (one - u * u) / two - k2 * z * u)
                / den;
            let x_start = -two * kappa0_sq / kappa
                * ((kappa * kappa - k2) * (one - u * u) / two * u + k2 * z * (one + u * u) / two * u)
                / den;
            ClosedForms { d_eff, x_start }
        }
    } else {
        let beta = if height > S::zero() { S::one() } else { -S::one() };
        let kappa = (particle.k2_per_ev() * (energy - height)).sqrt();
        let z = kappa * d;
        let sc = z.sinc();
        let half = (z / two).sin();
        let den = four * k2 + kappa0_4 * d * d * sc * sc;
        // (k² − βκ0² sc)/κ² with κ² = k² − βκ0²
        let ratio = S::one() + beta * kappa0_sq * d * d * one_minus_sinc(z);
        let d_eff = four * (k2 - beta * kappa0_sq * half * half) * d * ratio / den;
        let x_start = -two * beta * kappa0_sq * d * (sc + k2 * d * d * sinc_minus_cos(z)) / den;
        ClosedForms { d_eff, x_start }
    }
}

/// δ-potential `V = W δ(x − a)`: `d_eff ≡ 0` and
/// `x_start = −mħ²W / (ħ⁴k² + m²W²)`.
///
/// The starting point is tied to the transmission phase by
/// `x_start = −J' = −|T'|/(2√(RT))·sign(W)`.
pub fn delta_closed_forms<S: Scalar>(strength: S, k: S, particle: &Particle<S>) -> ClosedForms<S> {
    let h2 = particle.hbar * particle.hbar;
    let m = particle.mass;
    let x_start = -m * h2 * strength / (h2 * h2 * k * k + m * m * strength * strength);
    ClosedForms {
        d_eff: S::zero(),
        x_start,
    }
}
