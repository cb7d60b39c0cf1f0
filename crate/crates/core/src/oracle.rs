//! Independent check on the transfer matrix: fixed-step RK4 integration of
//! the stationary Schrödinger equation with step doubling until converged.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::model::Particle;
use crate::potentials::PotentialSpec;
use crate::scalar::{cis, wrap_angle, Cx, Scalar};
use crate::scattering::{TransferMatrix, TunnelingParams};

const MAX_STEPS: usize = 1 << 22;
const T_TOL: f64 = 1e-11;
const PHASE_TOL: f64 = 1e-10;

/// One RK4 sweep from `b` to `a` with `resolution` steps per unit of
/// `max(|κ|, k) · width` in each layer.
fn integrate<S: Scalar>(
    pot: &PotentialSpec<S>,
    k: S,
    particle: &Particle<S>,
    resolution: usize,
) -> (Cx<S>, Cx<S>, usize) {
    let g = pot.geometry();
    let energy = particle.energy(k);
    let c = particle.k2_per_ev();
    let mut psi = cis(k * g.b);
    let mut dpsi = psi * Complex::new(S::zero(), k);
    let mut total = 0;
    for layer in pot.layers().iter().rev() {
        let coef = c * (layer.potential - energy);
        let rate = coef.abs().sqrt().max(k);
        let n = ((rate * layer.width).as_f64() * resolution as f64).ceil() as usize;
        let n = n.max(resolution / 4).max(8);
        total += n;
        let h = -layer.width / S::from_index(n);
        let half = h / S::lit(2.0);
        let sixth = h / S::lit(6.0);
        // y'' = coef·y as the system (y, z)' = (z, coef·y).
        for _ in 0..n {
            let k1y = dpsi;
            let k1z = psi * coef;
            let k2y = dpsi + k1z * half;
            let k2z = (psi + k1y * half) * coef;
            let k3y = dpsi + k2z * half;
            let k3z = (psi + k2y * half) * coef;
            let k4y = dpsi + k3z * h;
            let k4z = (psi + k3y * h) * coef;
            psi += (k1y + k2y * S::lit(2.0) + k3y * S::lit(2.0) + k4y) * sixth;
            dpsi += (k1z + k2z * S::lit(2.0) + k3z * S::lit(2.0) + k4z) * sixth;
        }
    }
    (psi, dpsi, total)
}

fn params_at<S: Scalar>(pot: &PotentialSpec<S>, k: S, psi: Cx<S>, dpsi: Cx<S>) -> TunnelingParams<S> {
    let g = pot.geometry();
    let half = S::lit(0.5);
    let ratio = dpsi / Complex::new(S::zero(), k);
    let q = (psi + ratio) * cis(-k * g.a) * half;
    let p = ((psi - ratio) * cis(k * g.a) * half).conj();
    let t = (S::one() / q.norm_sqr()).min(S::one());
    let kd = k * g.d;
    let j = kd - q.arg();
    let j = j + S::TAU() * ((kd - j) / S::TAU()).round();
    let f = wrap_angle(p.arg() - S::FRAC_PI_2() + k * g.s);
    TunnelingParams {
        k,
        transmission: t,
        reflection: S::one() - t,
        transmission_phase: j,
        reflection_phase: f,
        tm: TransferMatrix { q, p },
    }
}

/// `T`, `J`, `F` from direct integration across `[a, b]`, starting from
/// `e^{ikx}` on the right and matching plane waves at `a`.
///
/// Only slab potentials are accepted. The step is halved until successive
/// estimates of `T` and `J` agree to about `1e-11`.
pub fn ode_oracle<S: Scalar>(pot: &PotentialSpec<S>, k: S, particle: &Particle<S>) -> Result<TunnelingParams<S>> {
    if !(k > S::zero()) || !k.is_finite() {
        return Err(Error::NonPositiveWavenumber(k.as_f64()));
    }
    if let PotentialSpec::Delta { .. } = pot {
        return Err(Error::InvalidPotential("the ODE oracle needs a slab potential".into()));
    }
    pot.validate()?;
    let mut resolution = 32;
    let (psi, dpsi, _) = integrate(pot, k, particle, resolution);
    let mut prev = params_at(pot, k, psi, dpsi);
    loop {
        resolution *= 2;
        let (psi, dpsi, steps) = integrate(pot, k, particle, resolution);
        let next = params_at(pot, k, psi, dpsi);
        // RK4 error shrinks 16× per halving; the difference bounds the error.
        let dt = (next.transmission - prev.transmission).abs().as_f64() / 15.0;
        let dj = wrap_angle(next.transmission_phase - prev.transmission_phase).abs().as_f64() / 15.0;
        if dt < T_TOL && dj < PHASE_TOL {
            return Ok(next);
        }
        if steps >= MAX_STEPS {
            return Err(Error::OracleNotConverged {
                k: k.as_f64(),
                steps,
                residual: dt.max(dj),
            });
        }
        prev = next;
    }
}
