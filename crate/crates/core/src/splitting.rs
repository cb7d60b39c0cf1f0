//! Reflection and transmission wave functions for mirror-symmetric
//! potentials.
//!
//! Left of the barrier the reflection part is `√R(e^{iλ}e^{ikx} + e^{iθ}e^{−ikx})`
//! with `θ = J − F − π/2 + 2ka`; of the two admissible `λ` the one giving a
//! solution odd about the midpoint is kept, and the reflection part is cut
//! off at the midpoint. The transmission part is the remainder.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed_forms::{delta_closed_forms, rect_closed_forms};
use crate::error::{Error, Result};
use crate::model::{Channel, KGrid, Particle, XGrid};
use crate::potentials::{Geometry, PotentialSpec};
use crate::propagation::{march_left, Slabs};
use crate::scalar::{cis, unwrap_phase, Cx, Scalar};
use crate::scattering::{stencil_derivative, tunneling_params, DerivativeSource, ParamsTable, TunnelingParams};

/// Relative parity residual accepted for the odd solution, raised to
/// `1e4·ε` for single precision.
pub const PARITY_TOL: f64 = 1e-8;

/// Sign choice in `λ = ±arctan(√(T/R))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign<S: Scalar>(self) -> S {
        match self {
            Branch::Plus => S::one(),
            Branch::Minus => -S::one(),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }
}

/// Reflection-wave coefficients at one wavenumber.
///
/// `a_out_ref`, `b_in_ref` describe the continuation of the left-side form
/// past the barrier; the reflection wave itself is cut off at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitAmplitudes<S> {
    pub k: S,
    pub branch: Branch,
    /// λ of the chosen branch, in `[−π/2, π/2]`.
    pub lambda: S,
    /// `+1` if `λ ≥ 0`, else `−1`.
    pub alpha: S,
    pub a_in_ref: Cx<S>,
    pub b_out_ref: Cx<S>,
    pub a_out_ref: Cx<S>,
    pub b_in_ref: Cx<S>,
    pub phi_plus: S,
    pub phi_minus: S,
    /// `R` below resonance threshold: every coefficient is zero.
    pub vanishing: bool,
}

impl<S: Scalar> SplitAmplitudes<S> {
    /// `A_in^tr = 1 − A_in^ref = √T e^{i(λ − απ/2)}`.
    pub fn a_in_tr(&self) -> Cx<S> {
        Complex::new(S::one(), S::zero()) - self.a_in_ref
    }

    /// Reflection wave left of the barrier: `2√R e^{iφ+} cos(kx + φ−)`.
    pub fn left_value(&self, x: S) -> (Cx<S>, Cx<S>) {
        let e_p = cis(self.k * x);
        let e_m = e_p.conj();
        let ik = Complex::new(S::zero(), self.k);
        (
            self.a_in_ref * e_p + self.b_out_ref * e_m,
            ik * (self.a_in_ref * e_p - self.b_out_ref * e_m),
        )
    }

    /// Continuation right of the barrier.
    pub fn right_value(&self, x: S) -> Cx<S> {
        let e_p = cis(self.k * x);
        self.a_out_ref * e_p + self.b_in_ref * e_p.conj()
    }
}

/// Builds the reflection coefficients for one sign of `λ`.
///
/// `A_in^ref = √R e^{iλ}`, `B_out^ref = p*/q`, and the right-side
/// coefficients `A_out^ref = √R G* e^{iφ+}`, `B_in^ref = √R G e^{iφ+}` with
/// `G = ∓i exp[i(kb − (J + F + π/2 − λ)/2)]`, which equals
/// `q e^{−iφ−} − p* e^{iφ−}` without its cancellation for opaque barriers.
pub fn split_amplitudes<S: Scalar>(tp: &TunnelingParams<S>, geom: &Geometry<S>, branch: Branch) -> SplitAmplitudes<S> {
    let zero = Complex::new(S::zero(), S::zero());
    let two = S::lit(2.0);
    let k = tp.k;
    if tp.is_resonant() {
        return SplitAmplitudes {
            k,
            branch,
            lambda: branch.sign::<S>() * S::FRAC_PI_2(),
            alpha: branch.sign(),
            a_in_ref: zero,
            b_out_ref: zero,
            a_out_ref: zero,
            b_in_ref: zero,
            phi_plus: S::zero(),
            phi_minus: S::zero(),
            vanishing: true,
        };
    }
    let r = tp.reflection;
    let t = tp.transmission;
    let sqrt_r = r.sqrt();
    let lambda = branch.sign::<S>() * (t / r).sqrt().atan();
    let theta = tp.out_phase(geom.a);
    let phi_plus = (lambda + theta) / two;
    let phi_minus = (lambda - theta) / two;
    let j = tp.transmission_phase;
    let f = tp.reflection_phase;
    let g = Complex::new(S::zero(), -branch.sign::<S>())
        * cis(k * geom.b - (j + f + S::FRAC_PI_2() - lambda) / two);
    let front = cis(phi_plus) * sqrt_r;
    SplitAmplitudes {
        k,
        branch,
        lambda,
        alpha: if lambda >= S::zero() { S::one() } else { -S::one() },
        // Built from √R and √T directly so that Re = R holds to rounding.
        a_in_ref: Complex::new(r, branch.sign::<S>() * (r * t).sqrt()),
        b_out_ref: cis(theta) * sqrt_r,
        a_out_ref: front * g.conj(),
        b_in_ref: front * g,
        phi_plus,
        phi_minus,
        vanishing: false,
    }
}

/// Relative parity residual `max|ψ(x_mid+x′) + ψ(x_mid−x′)| / max|ψ|` over
/// probe points outside the barrier.
pub fn parity_residual<S: Scalar>(sa: &SplitAmplitudes<S>, geom: &Geometry<S>) -> S {
    if sa.vanishing {
        return S::zero();
    }
    let mut worst = S::zero();
    let mut scale = S::zero();
    for j in 0..8 {
        let off = geom.d / S::lit(2.0) + S::lit(0.37 + 0.7 * j as f64) / sa.k;
        let left = sa.left_value(geom.x_mid - off).0;
        let right = sa.right_value(geom.x_mid + off);
        worst = worst.max((left + right).norm());
        scale = scale.max(left.norm()).max(right.norm());
    }
    if scale > S::zero() {
        worst / scale
    } else {
        S::zero()
    }
}

/// Branch predicted by the reflection phase alone: `F ≈ 0` gives the upper
/// sign, `F ≈ π` the lower one.
pub fn branch_from_reflection_phase<S: Scalar>(f: S) -> Branch {
    if f.cos() >= S::zero() {
        Branch::Plus
    } else {
        Branch::Minus
    }
}

/// Chooses the sign of `λ` whose reflection solution is odd about the
/// midpoint, by probing both.
pub fn select_odd_branch<S: Scalar>(pot: &PotentialSpec<S>, tp: &TunnelingParams<S>) -> Result<Branch> {
    if !pot.is_symmetric() {
        return Err(Error::Asymmetric("odd-branch selection"));
    }
    let geom = pot.geometry();
    if tp.is_resonant() {
        return Ok(branch_from_reflection_phase(tp.reflection_phase));
    }
    let plus = parity_residual(&split_amplitudes(tp, &geom, Branch::Plus), &geom);
    let minus = parity_residual(&split_amplitudes(tp, &geom, Branch::Minus), &geom);
    let (best, res) = if plus <= minus {
        (Branch::Plus, plus)
    } else {
        (Branch::Minus, minus)
    };
    if res < S::lit(PARITY_TOL).max(S::epsilon() * S::lit(1e4)) {
        Ok(best)
    } else {
        Err(Error::BranchSelection {
            k: tp.k.as_f64(),
            plus: plus.as_f64(),
            minus: minus.as_f64(),
        })
    }
}

/// Per-wavenumber stationary data able to evaluate the full and reflection
/// waves (and their `x`-derivatives) anywhere.
#[derive(Debug, Clone)]
pub struct StationaryState<S> {
    pub params: TunnelingParams<S>,
    pub split: SplitAmplitudes<S>,
    geom: Geometry<S>,
    slabs: Slabs<S>,
    energy: S,
    particle: Particle<S>,
}

/// Full and reflection waves with derivatives at a set of points.
#[derive(Debug, Clone, Default)]
pub struct StationaryValues<S> {
    pub full: Vec<Cx<S>>,
    pub d_full: Vec<Cx<S>>,
    pub reflected: Vec<Cx<S>>,
    pub d_reflected: Vec<Cx<S>>,
}

impl<S: Scalar> StationaryState<S> {
    /// Uses the odd branch picked by [`select_odd_branch`].
    pub fn new(pot: &PotentialSpec<S>, tp: TunnelingParams<S>, particle: &Particle<S>) -> Result<Self> {
        let branch = select_odd_branch(pot, &tp)?;
        Ok(Self::with_branch(pot, tp, branch, particle))
    }

    /// Uses the given branch without checking parity.
    pub fn with_branch(pot: &PotentialSpec<S>, tp: TunnelingParams<S>, branch: Branch, particle: &Particle<S>) -> Self {
        let geom = pot.geometry();
        Self {
            split: split_amplitudes(&tp, &geom, branch),
            params: tp,
            geom,
            slabs: Slabs::new(pot),
            energy: particle.energy(tp.k),
            particle: *particle,
        }
    }

    pub fn k(&self) -> S {
        self.params.k
    }

    /// Evaluates at `xs` (any order).
    pub fn evaluate(&self, xs: &[S]) -> StationaryValues<S> {
        let k = self.params.k;
        let ik = Complex::new(S::zero(), k);
        let zero = Complex::new(S::zero(), S::zero());
        let g = &self.geom;
        let n = xs.len();
        let mut out = StationaryValues {
            full: vec![zero; n],
            d_full: vec![zero; n],
            reflected: vec![zero; n],
            d_reflected: vec![zero; n],
        };
        let b_out = self.params.b_out(g.a);
        let a_out = self.params.a_out(g.d);

        let mut inner_full: Vec<usize> = Vec::new();
        let mut inner_ref: Vec<usize> = Vec::new();
        for (i, &x) in xs.iter().enumerate() {
            if x <= g.a {
                let e = cis(k * x);
                let ec = e.conj();
                out.full[i] = e + b_out * ec;
                out.d_full[i] = ik * (e - b_out * ec);
                let (r, dr) = self.split.left_value(x);
                out.reflected[i] = r;
                out.d_reflected[i] = dr;
            } else {
                if x >= g.b {
                    let e = cis(k * x) * a_out;
                    out.full[i] = e;
                    out.d_full[i] = ik * e;
                } else {
                    inner_full.push(i);
                }
                if x < g.x_mid && !self.split.vanishing {
                    inner_ref.push(i);
                }
            }
        }

        if !inner_full.is_empty() {
            inner_full.sort_by(|&p, &q| xs[q].partial_cmp(&xs[p]).expect("finite positions"));
            let mut targets: Vec<S> = inner_full.iter().map(|&i| xs[i]).collect();
            targets.push(g.a);
            let start = (Complex::new(S::one(), S::zero()), ik);
            let m = march_left(&self.slabs, self.energy, &self.particle, g.b, start, &targets);
            let at_a = m[m.len() - 1];
            // ψ_full = e^{ika} χ(x) / u with u = (χ(a) + χ'(a)/ik)/2.
            let u = (at_a.psi + at_a.dpsi / ik) / S::lit(2.0);
            let factor = cis(k * g.a) / u;
            for (slot, st) in inner_full.iter().zip(&m) {
                let s = (st.log_scale - at_a.log_scale).exp();
                out.full[*slot] = factor * st.psi * s;
                out.d_full[*slot] = factor * st.dpsi * s;
            }
        }

        if !inner_ref.is_empty() {
            inner_ref.sort_by(|&p, &q| xs[q].partial_cmp(&xs[p]).expect("finite positions"));
            let mut targets: Vec<S> = inner_ref.iter().map(|&i| xs[i]).collect();
            targets.push(g.a);
            let start = (Complex::new(S::zero(), S::zero()), Complex::new(S::one(), S::zero()));
            let m = march_left(&self.slabs, self.energy, &self.particle, g.x_mid, start, &targets);
            let at_a = m[m.len() - 1];
            let c = self.match_at_a(at_a.psi, at_a.dpsi);
            for (slot, st) in inner_ref.iter().zip(&m) {
                let s = (st.log_scale - at_a.log_scale).exp();
                out.reflected[*slot] = c * st.psi * s;
                out.d_reflected[*slot] = c * st.dpsi * s;
            }
        }
        out
    }
}

impl<S: Scalar> StationaryState<S> {
    /// ψ_ref = C·g(x) with g(x_mid) = 0, g'(x_mid) = 1; C from whichever of
    /// the value or slope at `a` is better conditioned.
    fn match_at_a(&self, g_a: Cx<S>, dg_a: Cx<S>) -> Cx<S> {
        let (psi_a, dpsi_a) = self.split.left_value(self.geom.a);
        if g_a.norm() * self.params.k >= dg_a.norm() {
            psi_a / g_a
        } else {
            dpsi_a / dg_a
        }
    }

    /// `Ψ_full(x_mid)` and the left-sided slope `∂xΨ_ref(x_mid−)`.
    pub fn midpoint_values(&self) -> (Cx<S>, Cx<S>) {
        let g = &self.geom;
        let full = self.evaluate(&[g.x_mid]).full[0];
        if self.split.vanishing {
            return (full, Complex::new(S::zero(), S::zero()));
        }
        if !(g.d > S::zero()) {
            return (full, self.split.left_value(g.a).1);
        }
        let start = (Complex::new(S::zero(), S::zero()), Complex::new(S::one(), S::zero()));
        let m = march_left(&self.slabs, self.energy, &self.particle, g.x_mid, start, &[g.a]);
        let c = self.match_at_a(m[0].psi, m[0].dpsi);
        (full, c * (-m[0].log_scale).exp())
    }
}

/// Closed-form reflection wave inside a rectangular barrier or well for
/// `a ≤ x ≤ x_mid`:
/// `2√R e^{iφ+}[cos(ka+φ−) sinh(κd/2) − (k/κ) sin(ka+φ−) cosh(κd/2)] sinh(κ(x−x_mid))`
/// below the top, and the trigonometric counterpart above it.
///
/// Exact but cancellation-prone for opaque barriers; [`StationaryState`]
/// evaluates the same function by matching at `a`.
pub fn rect_reflection_interior<S: Scalar>(
    height: S,
    geom: &Geometry<S>,
    sa: &SplitAmplitudes<S>,
    particle: &Particle<S>,
    x: S,
) -> Cx<S> {
    let k = sa.k;
    let two = S::lit(2.0);
    let half = geom.d / two;
    let dx = x - geom.x_mid;
    let ang = k * geom.a + sa.phi_minus;
    let front = cis(sa.phi_plus) * (two * sa.a_in_ref.norm());
    let energy = particle.energy(k);
    let q2 = particle.k2_per_ev() * (height - energy);
    let kappa = q2.abs().sqrt();
    let bracket = if q2 >= S::zero() {
        // sinh(κd/2)·sinh(κΔ) and (k/κ)·sinh(κΔ) written with sinh(z)/z
        let sh = (kappa * dx).sinhc() * dx;
        ang.cos() * (kappa * half).sinh() * kappa * sh - k * ang.sin() * (kappa * half).cosh() * sh
    } else {
        let sn = (kappa * dx).sinc() * dx;
        -(ang.cos() * (kappa * half).sin() * kappa * sn + k * ang.sin() * (kappa * half).cos() * sn)
    };
    front * bracket
}

/// Full, transmission and reflection stationary waves on a grid.
#[derive(Debug, Clone)]
pub struct StationaryTriple<S> {
    pub k: S,
    pub grid: XGrid<S>,
    pub split: SplitAmplitudes<S>,
    pub transmission: S,
    pub phi_full: Vec<Cx<S>>,
    pub phi_tr: Vec<Cx<S>>,
    pub phi_ref: Vec<Cx<S>>,
    pub d_phi_full: Vec<Cx<S>>,
    pub d_phi_tr: Vec<Cx<S>>,
    pub d_phi_ref: Vec<Cx<S>>,
}

impl<S: Scalar> StationaryTriple<S> {
    /// `(ħ/m) Im(ψ* ψ′)` at node `i`, from the exact derivative.
    pub fn flux(&self, channel: Channel, i: usize, particle: &Particle<S>) -> S {
        let (v, d) = match channel {
            Channel::Full => (&self.phi_full, &self.d_phi_full),
            Channel::Transmission => (&self.phi_tr, &self.d_phi_tr),
            Channel::Reflection => (&self.phi_ref, &self.d_phi_ref),
        };
        particle.hbar / particle.mass * (v[i].conj() * d[i]).im
    }
}

/// Stationary full, transmission and reflection waves for unit incidence.
pub fn stationary_triple<S: Scalar>(
    pot: &PotentialSpec<S>,
    k: S,
    grid: &XGrid<S>,
    particle: &Particle<S>,
) -> Result<StationaryTriple<S>> {
    if !pot.is_symmetric() {
        return Err(Error::Asymmetric("the transmission/reflection split"));
    }
    let tp = tunneling_params(pot, k, particle)?;
    let state = StationaryState::new(pot, tp, particle)?;
    let xs = grid.nodes();
    let v = state.evaluate(&xs);
    let phi_tr = v.full.iter().zip(&v.reflected).map(|(f, r)| f - r).collect();
    let d_phi_tr = v.d_full.iter().zip(&v.d_reflected).map(|(f, r)| f - r).collect();
    Ok(StationaryTriple {
        k,
        grid: grid.clone(),
        split: state.split,
        transmission: tp.transmission,
        phi_full: v.full,
        phi_tr,
        phi_ref: v.reflected,
        d_phi_full: v.d_full,
        d_phi_tr,
        d_phi_ref: v.d_reflected,
    })
}

/// Odd-branch split amplitudes over a [`KGrid`], with `Λ` made continuous
/// modulo π and its derivative `Λ′`.
#[derive(Debug, Clone)]
pub struct SplitTable<S> {
    pub rows: Vec<SplitAmplitudes<S>>,
    /// Λ, continuous modulo π.
    pub lambda: Vec<S>,
    /// Λ′ (nm)
    pub d_lambda: Vec<S>,
    pub source: DerivativeSource,
}

impl<S: Scalar> SplitTable<S> {
    /// `Λ′` from the closed forms where available, stencils otherwise.
    pub fn build(pot: &PotentialSpec<S>, params: &ParamsTable<S>, particle: &Particle<S>) -> Result<Self> {
        Self::build_with(pot, params, particle, true)
    }

    pub fn build_stencil_only(pot: &PotentialSpec<S>, params: &ParamsTable<S>, particle: &Particle<S>) -> Result<Self> {
        Self::build_with(pot, params, particle, false)
    }

    fn build_with(pot: &PotentialSpec<S>, params: &ParamsTable<S>, particle: &Particle<S>, closed: bool) -> Result<Self> {
        if !pot.is_symmetric() {
            return Err(Error::Asymmetric("the transmission/reflection split"));
        }
        let geom = pot.geometry();
        let rows = params
            .rows
            .par_iter()
            .map(|tp| select_odd_branch(pot, tp).map(|b| split_amplitudes(tp, &geom, b)))
            .collect::<Result<Vec<_>>>()?;
        let mut lambda: Vec<S> = rows
            .iter()
            .map(|r| if r.vanishing { S::FRAC_PI_2() } else { r.lambda })
            .collect();
        unwrap_phase(&mut lambda, S::PI());
        let grid: &KGrid<S> = &params.grid;
        let nodes = grid.nodes();
        let closed_form: Option<Vec<S>> = if closed {
            match pot {
                PotentialSpec::Rectangular { height, .. } => Some(
                    nodes
                        .iter()
                        .map(|&k| rect_closed_forms(*height, geom.d, k, particle).lambda_slope())
                        .collect(),
                ),
                PotentialSpec::Delta { strength, .. } => Some(
                    nodes
                        .iter()
                        .map(|&k| delta_closed_forms(*strength, k, particle).lambda_slope())
                        .collect(),
                ),
                PotentialSpec::PiecewiseConstant { .. } => None,
            }
        } else {
            None
        };
        let (d_lambda, source) = match closed_form {
            Some(v) => (v, DerivativeSource::ClosedForm),
            None => (stencil_derivative(&lambda, grid.spacing()), DerivativeSource::Stencil),
        };
        Ok(Self {
            rows,
            lambda,
            d_lambda,
            source,
        })
    }
}
