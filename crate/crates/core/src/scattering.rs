//! Transfer matrix, real tunneling parameters and amplitude sets.

use num_complex::Complex;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed_forms::{delta_closed_forms, rect_closed_forms};
use crate::error::{Error, Result};
use crate::model::{KGrid, Particle};
use crate::potentials::PotentialSpec;
use crate::propagation::Step;
use crate::scalar::{cis, wrap_angle, Cx, Scalar};

pub use crate::oracle::ode_oracle;

/// Below this reflection probability `arg p` is treated as undefined.
pub const RESONANCE_R: f64 = 1e-14;

/// `Y = [[q, p], [p*, q*]]`, mapping right-side amplitudes `(A_out, B_in)`
/// to left-side amplitudes `(A_in, B_out)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferMatrix<S> {
    pub q: Cx<S>,
    pub p: Cx<S>,
}

impl<S: Scalar> TransferMatrix<S> {
    pub fn identity() -> Self {
        Self {
            q: Complex::new(S::one(), S::zero()),
            p: Complex::new(S::zero(), S::zero()),
        }
    }

    /// `|q|² − |p|²`, equal to 1 for any lossless potential.
    pub fn determinant(&self) -> S {
        self.q.norm_sqr() - self.p.norm_sqr()
    }
}

/// Transfer matrix together with the quantities needed to read off
/// `T`, `J`, `F` without overflow or large-phase cancellation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Solved<S> {
    tm: TransferMatrix<S>,
    /// `q e^{-ikd}` and `p* e^{-iks}` divided by `e^{log_scale}`.
    u: Cx<S>,
    v: Cx<S>,
    log_scale: S,
}

/// Propagates `(ψ, ψ')` from `b` to `a` for the solution that equals
/// `e^{ik(x−b)}` right of the barrier. Returns the values at `a` and the
/// accumulated log scale.
pub(crate) fn propagate_to_left_edge<S: Scalar>(
    pot: &PotentialSpec<S>,
    k: S,
    particle: &Particle<S>,
) -> (Cx<S>, Cx<S>, S) {
    let energy = particle.energy(k);
    let mut psi = Complex::new(S::one(), S::zero());
    let mut dpsi = Complex::new(S::zero(), k);
    let mut log_scale = S::zero();
    match pot {
        PotentialSpec::Delta { strength, .. } => {
            let (p, d) = Step::delta_leftward(*strength, particle).apply(psi, dpsi);
            psi = p;
            dpsi = d;
        }
        _ => {
            for layer in pot.layers().iter().rev() {
                let step = Step::through_layer(layer.potential, energy, -layer.width, particle);
                let (p, d) = step.apply(psi, dpsi);
                psi = p;
                dpsi = d;
                log_scale += step.log_scale;
            }
        }
    }
    (psi, dpsi, log_scale)
}

pub(crate) fn solve<S: Scalar>(pot: &PotentialSpec<S>, k: S, particle: &Particle<S>) -> Result<Solved<S>> {
    if !(k > S::zero()) || !k.is_finite() {
        return Err(Error::NonPositiveWavenumber(k.as_f64()));
    }
    let g = pot.geometry();
    let (psi, dpsi, log_scale) = propagate_to_left_edge(pot, k, particle);
    let half = S::lit(0.5);
    let ratio = dpsi / Complex::new(S::zero(), k);
    let u = (psi + ratio) * half;
    let v = (psi - ratio) * half;
    let scale = log_scale.exp();
    let q = u * cis(k * g.d) * scale;
    let p = (v * cis(k * g.s) * scale).conj();
    Ok(Solved {
        tm: TransferMatrix { q, p },
        u,
        v,
        log_scale,
    })
}

/// Transfer matrix of `pot` at wavenumber `k` (nm⁻¹).
pub fn transfer_matrix<S: Scalar>(pot: &PotentialSpec<S>, k: S, particle: &Particle<S>) -> Result<TransferMatrix<S>> {
    solve(pot, k, particle).map(|s| s.tm)
}

/// Real tunneling parameters at one wavenumber.
///
/// `J` is the representative of `kd − arg q` closest to `kd`; `F` is
/// wrapped into `(−π, π]`. Tables unwrap both along `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TunnelingParams<S> {
    pub k: S,
    pub transmission: S,
    pub reflection: S,
    /// J, rad
    pub transmission_phase: S,
    /// F, rad
    pub reflection_phase: S,
    pub tm: TransferMatrix<S>,
}

impl<S: Scalar> TunnelingParams<S> {
    fn from_solved(k: S, d: S, s: &Solved<S>) -> Self {
        let scaled_t = S::one() / s.u.norm_sqr();
        let t = if s.log_scale > S::zero() {
            scaled_t * (-S::lit(2.0) * s.log_scale).exp()
        } else {
            scaled_t
        };
        let t = t.max(S::zero()).min(S::one());
        // arg q = kd + arg u, so J = −arg u up to 2π; take the branch nearest kd.
        let j = -s.u.arg();
        let kd = k * d;
        let j = j + S::TAU() * ((kd - j) / S::TAU()).round();
        let f = wrap_angle(-s.v.arg() - S::FRAC_PI_2());
        Self {
            k,
            transmission: t,
            reflection: S::one() - t,
            transmission_phase: j,
            reflection_phase: f,
            tm: s.tm,
        }
    }

    pub fn is_resonant(&self) -> bool {
        self.reflection < S::lit(RESONANCE_R)
    }

    /// `1/q = √T e^{−i(kd − J)}`: transmitted amplitude for unit incidence.
    pub fn a_out(&self, d: S) -> Cx<S> {
        cis(self.transmission_phase - self.k * d) * self.transmission.sqrt()
    }

    /// `p*/q = √R e^{i(J − F − π/2 + 2ka)}`: reflected amplitude.
    pub fn b_out(&self, a: S) -> Cx<S> {
        cis(self.out_phase(a)) * self.reflection.sqrt()
    }

    /// `J − F − π/2 + 2ka`.
    pub fn out_phase(&self, a: S) -> S {
        self.transmission_phase - self.reflection_phase - S::FRAC_PI_2() + S::lit(2.0) * self.k * a
    }
}

/// `T`, `R`, `J`, `F` of `pot` at wavenumber `k`.
pub fn tunneling_params<S: Scalar>(pot: &PotentialSpec<S>, k: S, particle: &Particle<S>) -> Result<TunnelingParams<S>> {
    let s = solve(pot, k, particle)?;
    Ok(TunnelingParams::from_solved(k, pot.geometry().d, &s))
}

/// Plane-wave amplitudes of one stationary scattering state: incident and
/// reflected on the left (`a_in`, `b_out`), transmitted and incident on the
/// right (`a_out`, `b_in`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeSet<S> {
    pub a_in: Cx<S>,
    pub b_out: Cx<S>,
    pub a_out: Cx<S>,
    pub b_in: Cx<S>,
}

impl<S: Scalar> AmplitudeSet<S> {
    pub fn zero() -> Self {
        let z = Complex::new(S::zero(), S::zero());
        Self {
            a_in: z,
            b_out: z,
            a_out: z,
            b_in: z,
        }
    }

    /// Incoming minus outgoing probability flux in units of `ħk/m`.
    pub fn flux_balance(&self) -> S {
        self.a_in.norm_sqr() + self.b_in.norm_sqr() - self.a_out.norm_sqr() - self.b_out.norm_sqr()
    }
}

impl<S: Scalar> std::ops::Add for AmplitudeSet<S> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            a_in: self.a_in + o.a_in,
            b_out: self.b_out + o.b_out,
            a_out: self.a_out + o.a_out,
            b_in: self.b_in + o.b_in,
        }
    }
}

/// Unit incidence from the left: `{1, p*/q, 1/q, 0}`.
pub fn scattering_amplitudes<S: Scalar>(tm: &TransferMatrix<S>) -> AmplitudeSet<S> {
    let one = Complex::new(S::one(), S::zero());
    AmplitudeSet {
        a_in: one,
        b_out: tm.p.conj() / tm.q,
        a_out: one / tm.q,
        b_in: Complex::new(S::zero(), S::zero()),
    }
}

/// The two auxiliary problems whose sum is the unit-incidence state:
/// `{|p|²/|q|², p*/q, 0, p*/|q|²}` and `{1/|q|², 0, 1/q, −p*/|q|²}`.
pub fn auxiliary_amplitudes<S: Scalar>(tm: &TransferMatrix<S>) -> (AmplitudeSet<S>, AmplitudeSet<S>) {
    let zero = Complex::new(S::zero(), S::zero());
    let q2 = tm.q.norm_sqr();
    let r = tm.p.norm_sqr() / q2;
    let t = S::one() / q2;
    let b_out = tm.p.conj() / tm.q;
    let b_in = tm.p.conj() / q2;
    let first = AmplitudeSet {
        a_in: Complex::new(r, S::zero()),
        b_out,
        a_out: zero,
        b_in,
    };
    // a_in chosen so the pair sums to exactly 1 in floating point.
    let second = AmplitudeSet {
        a_in: Complex::new(S::one() - r, S::zero()),
        b_out: zero,
        a_out: Complex::new(S::one(), S::zero()) / tm.q,
        b_in: -b_in,
    };
    debug_assert!((second.a_in.re - t).abs() <= S::lit(1e-10) * S::one().max(t));
    (first, second)
}

/// How the `k`-derivatives of a table were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeSource {
    Stencil,
    ClosedForm,
}

/// Tunneling parameters over a [`KGrid`] with continuous phases and
/// `k`-derivatives.
#[derive(Debug, Clone)]
pub struct ParamsTable<S> {
    pub grid: KGrid<S>,
    pub rows: Vec<TunnelingParams<S>>,
    /// T′
    pub d_transmission: Vec<S>,
    /// J′ (nm)
    pub d_transmission_phase: Vec<S>,
    /// F′ (nm)
    pub d_reflection_phase: Vec<S>,
    pub source: DerivativeSource,
    pub symmetric: bool,
}

impl<S: Scalar> ParamsTable<S> {
    /// Builds the table; `J′` uses the closed forms for rectangular and δ
    /// potentials and five-point stencils otherwise.
    pub fn build(pot: &PotentialSpec<S>, grid: &KGrid<S>, particle: &Particle<S>) -> Result<Self> {
        Self::build_with(pot, grid, particle, true)
    }

    /// Same table with every derivative taken by finite differences.
    pub fn build_stencil_only(pot: &PotentialSpec<S>, grid: &KGrid<S>, particle: &Particle<S>) -> Result<Self> {
        Self::build_with(pot, grid, particle, false)
    }

    fn build_with(pot: &PotentialSpec<S>, grid: &KGrid<S>, particle: &Particle<S>, closed: bool) -> Result<Self> {
        pot.validate()?;
        let nodes = grid.nodes();
        let mut rows = nodes
            .par_iter()
            .map(|&k| tunneling_params(pot, k, particle))
            .collect::<Result<Vec<_>>>()?;

        let mut j: Vec<S> = rows.iter().map(|r| r.transmission_phase).collect();
        let base = j[0];
        crate::scalar::unwrap_phase(&mut j, S::TAU());
        let shift = base - j[0];
        for v in &mut j {
            *v += shift;
        }
        let f = continuous_reflection_phase(&rows);
        for (row, (jv, fv)) in rows.iter_mut().zip(j.iter().zip(&f)) {
            row.transmission_phase = *jv;
            row.reflection_phase = *fv;
        }

        let h = grid.spacing();
        let t: Vec<S> = rows.iter().map(|r| r.transmission).collect();
        let d_transmission = stencil_derivative(&t, h);
        let symmetric = pot.is_symmetric();
        let d_reflection_phase = if symmetric {
            vec![S::zero(); rows.len()]
        } else {
            stencil_derivative(&f, h)
        };

        let closed_j = if closed {
            match pot {
                PotentialSpec::Rectangular { height, .. } => Some(
                    nodes
                        .iter()
                        .map(|&k| rect_closed_forms(*height, pot.geometry().d, k, particle).transmission_phase_slope())
                        .collect::<Vec<_>>(),
                ),
                PotentialSpec::Delta { strength, .. } => Some(
                    nodes
                        .iter()
                        .map(|&k| delta_closed_forms(*strength, k, particle).transmission_phase_slope())
                        .collect(),
                ),
                PotentialSpec::PiecewiseConstant { .. } => None,
            }
        } else {
            None
        };
        let (d_transmission_phase, source) = match closed_j {
            Some(v) => (v, DerivativeSource::ClosedForm),
            None => (stencil_derivative(&j, h), DerivativeSource::Stencil),
        };

        Ok(Self {
            grid: grid.clone(),
            rows,
            d_transmission,
            d_transmission_phase,
            d_reflection_phase,
            source,
            symmetric,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn transmission(&self) -> Vec<S> {
        self.rows.iter().map(|r| r.transmission).collect()
    }

    pub fn reflection(&self) -> Vec<S> {
        self.rows.iter().map(|r| r.reflection).collect()
    }
}

/// Unwraps `F` over the non-resonant rows and fills resonant rows by linear
/// interpolation (nearest value past the ends, 0 if every row is resonant).
fn continuous_reflection_phase<S: Scalar>(rows: &[TunnelingParams<S>]) -> Vec<S> {
    let good: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i].is_resonant()).collect();
    if good.is_empty() {
        return vec![S::zero(); rows.len()];
    }
    let mut vals: Vec<S> = good.iter().map(|&i| rows[i].reflection_phase).collect();
    crate::scalar::unwrap_phase(&mut vals, S::TAU());
    let mut out = vec![S::zero(); rows.len()];
    for (&i, &v) in good.iter().zip(&vals) {
        out[i] = v;
    }
    let mut next = 0;
    for i in 0..rows.len() {
        while next < good.len() && good[next] < i {
            next += 1;
        }
        if next < good.len() && good[next] == i {
            continue;
        }
        out[i] = match (next.checked_sub(1).map(|g| good[g]), good.get(next)) {
            (Some(l), Some(&r)) => {
                let w = S::from_index(i - l) / S::from_index(r - l);
                out[l] + (out[r] - out[l]) * w
            }
            (Some(l), None) => out[l],
            (None, Some(&r)) => out[r],
            (None, None) => S::zero(),
        };
    }
    out
}

/// Five-point first derivative on a uniform grid: central in the interior,
/// one-sided at the two nodes nearest each end. Needs at least 5 samples.
pub fn stencil_derivative<S: Scalar>(f: &[S], h: S) -> Vec<S> {
    let n = f.len();
    assert!(n >= 5, "five-point stencil needs at least 5 samples");
    let c = |x: f64| S::lit(x);
    let twelve_h = c(12.0) * h;
    let mut d = vec![S::zero(); n];
    for i in 2..n - 2 {
        d[i] = (f[i - 2] - c(8.0) * f[i - 1] + c(8.0) * f[i + 1] - f[i + 2]) / twelve_h;
    }
    d[0] = (c(-25.0) * f[0] + c(48.0) * f[1] - c(36.0) * f[2] + c(16.0) * f[3] - c(3.0) * f[4]) / twelve_h;
    d[1] = (c(-3.0) * f[0] - c(10.0) * f[1] + c(18.0) * f[2] - c(6.0) * f[3] + f[4]) / twelve_h;
    d[n - 1] = (c(25.0) * f[n - 1] - c(48.0) * f[n - 2] + c(36.0) * f[n - 3] - c(16.0) * f[n - 4]
        + c(3.0) * f[n - 5])
        / twelve_h;
    d[n - 2] = (c(3.0) * f[n - 1] + c(10.0) * f[n - 2] - c(18.0) * f[n - 3] + c(6.0) * f[n - 4] - f[n - 5])
        / twelve_h;
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Layer;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn particle() -> Particle<f64> {
        Particle::with_relative_mass(0.067)
    }

    fn paper_barrier() -> PotentialSpec<f64> {
        PotentialSpec::rectangular(0.3, 500.0, 505.0).unwrap()
    }

    /// Textbook rectangular-barrier transmission, below the top.
    fn textbook_t(v0: f64, d: f64, k: f64, p: &Particle<f64>) -> f64 {
        let k2 = p.k2_per_ev();
        let kappa0_sq = k2 * v0;
        let kappa = (kappa0_sq - k * k).sqrt();
        let s = (kappa * d).sinh();
        1.0 / (1.0 + kappa0_sq * kappa0_sq * s * s / (4.0 * k * k * kappa * kappa))
    }

    #[test]
    fn free_case_is_identity() {
        let p = particle();
        let pot = PotentialSpec::free(500.0, 505.0).unwrap();
        let k = 0.66;
        let tm = transfer_matrix(&pot, k, &p).unwrap();
        assert!((tm.q - Complex::new(1.0, 0.0)).norm() < 1e-12);
        assert!(tm.p.norm() < 1e-12);
        let tp = tunneling_params(&pot, k, &p).unwrap();
        assert_eq!(tp.transmission, 1.0);
        assert!((tp.transmission_phase - k * 5.0).abs() < 1e-12);
    }

    #[test]
    fn paper_barrier_matches_textbook_transmission() {
        let p = particle();
        let k = p.wavenumber(0.25);
        assert!((k - 0.6631).abs() < 1e-3);
        let tp = tunneling_params(&paper_barrier(), k, &p).unwrap();
        let expect = textbook_t(0.3, 5.0, k, &p);
        assert!((tp.transmission - expect).abs() < 1e-13);
        assert!((tp.transmission - 0.113).abs() < 5e-4);
        assert!((tp.reflection - 0.887).abs() < 5e-4);
        let amp = scattering_amplitudes(&tp.tm);
        assert!((amp.b_out.norm_sqr() - 0.887).abs() < 5e-4);
    }

    #[test]
    fn delta_transmission_matches_jump_condition() {
        let p = particle();
        let w = 0.4;
        let pot = PotentialSpec::delta(w, 500.0).unwrap();
        for &k in &[0.2, 0.66, 1.5] {
            let tp = tunneling_params(&pot, k, &p).unwrap();
            let g = p.mass * w / (p.hbar * p.hbar);
            let expect = 1.0 / (1.0 + g * g / (k * k));
            assert!((tp.transmission - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn delta_is_limit_of_narrow_tall_barrier() {
        let p = particle();
        let w = 0.4;
        let k = 0.66;
        let delta = tunneling_params(&PotentialSpec::delta(w, 500.0).unwrap(), k, &p).unwrap();
        let width = 1e-4;
        let rect = PotentialSpec::rectangular(w / width, 500.0, 500.0 + width).unwrap();
        let thin = tunneling_params(&rect, k, &p).unwrap();
        assert!((thin.transmission - delta.transmission).abs() < 1e-5);
    }

    #[test]
    fn zero_wavenumber_rejected() {
        let p = particle();
        assert!(transfer_matrix(&paper_barrier(), 0.0, &p).is_err());
        assert!(transfer_matrix(&paper_barrier(), -0.1, &p).is_err());
    }

    #[test]
    fn barrier_top_is_regular() {
        let p = particle();
        let k = p.wavenumber(0.3);
        let at = tunneling_params(&paper_barrier(), k, &p).unwrap();
        let near = tunneling_params(&paper_barrier(), k * (1.0 + 1e-9), &p).unwrap();
        assert!(at.transmission.is_finite());
        assert!((at.transmission - near.transmission).abs() < 1e-7);
    }

    #[test]
    fn opaque_barrier_uses_scaled_form() {
        let p = particle();
        let pot = PotentialSpec::rectangular(5.0, 10.0, 510.0).unwrap();
        let tp = tunneling_params(&pot, 0.5, &p).unwrap();
        assert!(tp.transmission >= 0.0 && tp.transmission < 1e-300);
        assert_eq!(tp.reflection, 1.0);
        assert!(tp.transmission_phase.is_finite() && tp.reflection_phase.is_finite());
    }

    #[test]
    fn symmetric_barrier_reflection_phase_is_zero_or_pi() {
        let p = particle();
        for i in 0..50 {
            let k = 0.2 + 0.03 * i as f64;
            let tp = tunneling_params(&paper_barrier(), k, &p).unwrap();
            let f = tp.reflection_phase.rem_euclid(PI);
            assert!(f.min(PI - f) < 1e-8, "k = {k}, F = {}", tp.reflection_phase);
        }
    }

    #[test]
    fn amplitude_reconstruction_from_params() {
        let p = particle();
        let pot = paper_barrier();
        let g = pot.geometry();
        let tp = tunneling_params(&pot, 0.7, &p).unwrap();
        let amp = scattering_amplitudes(&tp.tm);
        assert!((tp.a_out(g.d) - amp.a_out).norm() < 1e-12);
        assert!((tp.b_out(g.a) - amp.b_out).norm() < 1e-10);
    }

    #[test]
    fn auxiliary_pair_sums_to_unit_incidence() {
        let p = particle();
        let tm = transfer_matrix(&paper_barrier(), p.wavenumber(0.25), &p).unwrap();
        let (first, second) = auxiliary_amplitudes(&tm);
        let sum = first + second;
        let full = scattering_amplitudes(&tm);
        assert_eq!(sum, full);
        assert!((first.a_in.re - 0.887).abs() < 5e-4);
        assert_eq!(first.a_in.im, 0.0);
        assert!(first.flux_balance().abs() < 1e-10);
        assert!(second.flux_balance().abs() < 1e-10);
    }

    #[test]
    fn auxiliary_free_case() {
        let (first, second) = auxiliary_amplitudes(&TransferMatrix::<f64>::identity());
        assert_eq!(first, AmplitudeSet::zero());
        let one = Complex::new(1.0, 0.0);
        let zero = Complex::new(0.0, 0.0);
        assert_eq!(
            second,
            AmplitudeSet {
                a_in: one,
                b_out: zero,
                a_out: one,
                b_in: zero
            }
        );
    }

    #[test]
    fn stencil_is_exact_on_quartics() {
        let h = 0.1;
        let f: Vec<f64> = (0..12).map(|i| (i as f64 * h).powi(4) - 2.0 * (i as f64 * h)).collect();
        let d = stencil_derivative(&f, h);
        for (i, di) in d.iter().enumerate() {
            let x = i as f64 * h;
            assert!((di - (4.0 * x.powi(3) - 2.0)).abs() < 1e-11, "node {i}");
        }
    }

    #[test]
    fn table_phases_are_continuous_and_match_closed_form() {
        let p = particle();
        let grid = KGrid::new(0.3, 1.1, 401).unwrap();
        let table = ParamsTable::build(&paper_barrier(), &grid, &p).unwrap();
        let stencil = ParamsTable::build_stencil_only(&paper_barrier(), &grid, &p).unwrap();
        assert_eq!(table.source, DerivativeSource::ClosedForm);
        for w in table.rows.windows(2) {
            assert!((w[1].transmission_phase - w[0].transmission_phase).abs() < PI);
        }
        for i in 2..grid.len() - 2 {
            let a = table.d_transmission_phase[i];
            let b = stencil.d_transmission_phase[i];
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "node {i}: {a} vs {b}");
        }
        assert!(table.d_reflection_phase.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn asymmetric_stack_has_nonzero_reflection_phase_slope() {
        let p = particle();
        let pot = PotentialSpec::piecewise(100.0, vec![Layer::new(0.1, 2.0), Layer::new(0.3, 3.0)]).unwrap();
        let grid = KGrid::new(0.3, 1.1, 201).unwrap();
        let table = ParamsTable::build(&pot, &grid, &p).unwrap();
        assert_eq!(table.source, DerivativeSource::Stencil);
        assert!(table.d_reflection_phase.iter().any(|f| f.abs() > 1e-3));
    }

    #[test]
    fn resonant_rows_are_interpolated() {
        // Free potential: every row resonant, F defaults to zero.
        let p = particle();
        let grid = KGrid::new(0.3, 1.1, 32).unwrap();
        let table = ParamsTable::build(&PotentialSpec::free(10.0, 20.0).unwrap(), &grid, &p).unwrap();
        assert!(table.rows.iter().all(|r| r.reflection_phase == 0.0 && (r.transmission - 1.0).abs() < 1e-14));
    }

    #[test]
    fn f32_build_runs() {
        let p = Particle::with_relative_mass(0.067_f32);
        let pot = PotentialSpec::rectangular(0.3_f32, 500.0, 505.0).unwrap();
        let tp = tunneling_params(&pot, p.wavenumber(0.25), &p).unwrap();
        assert!((tp.transmission - 0.113).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn flux_conservation_everywhere(
            v in -0.6f64..0.6,
            d in 0.5f64..20.0,
            k in 0.05f64..2.0,
        ) {
            let p = particle();
            let pot = PotentialSpec::rectangular(v, 50.0, 50.0 + d).unwrap();
            let tm = transfer_matrix(&pot, k, &p).unwrap();
            let cond = tm.q.norm_sqr().max(1.0);
            prop_assert!((tm.determinant() - 1.0).abs() < 1e-10 * cond);
            let amp = scattering_amplitudes(&tm);
            prop_assert!(amp.flux_balance().abs() < 1e-10);
        }
    }
}
