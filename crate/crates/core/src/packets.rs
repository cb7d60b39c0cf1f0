//! Gaussian spectra, time-dependent fields by superposition of stationary
//! states, and spectral averages over the transmitted and reflected parts.
//!
//! With `c_j = w_j A(k_j) e^{−iE_j t/ħ} / √(2π)` (trapezoid weights `w_j`)
//! the fields are
//!
//! ```text
//! x ≤ a:  Ψ_full = Σ c (e^{ikx} + b_out e^{−ikx})
//!         Ψ_ref  = Σ c (A_in^ref e^{ikx} + b_out e^{−ikx})
//! x ≥ b:  Ψ_full = Ψ_tr = Σ c a_out e^{ikx},  Ψ_ref = 0
//! ```
//!
//! and `Ψ_tr = Ψ_full − Ψ_ref` everywhere. When `Δk·Δx·N = 2π` for an integer
//! `N` covering both grids the plane-wave sums are evaluated by FFT.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{norm, Channel, KGrid, Particle, WaveField, XGrid};
use crate::potentials::{Geometry, PotentialSpec};
use crate::scalar::{cis, Cx, Scalar};
use crate::scattering::{tunneling_params, ParamsTable};
use crate::splitting::{select_odd_branch, split_amplitudes, SplitTable, StationaryState};

/// Norm defect of the full field above which the spatial grid is rejected.
pub const LEAK_TOL: f64 = 1e-6;
/// Averages weighted by `⟨T⟩` or `⟨R⟩` below this are undefined.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// Default half-width of the k grid in units of `σ_k = 1/(2l0)`.
pub const K_HALF_WIDTH: f64 = 11.0;

/// Incident amplitude `A_in(k)` sampled on a [`KGrid`], normalised so that
/// the trapezoid sum of `|A|²` is one.
#[derive(Debug, Clone)]
pub struct SpectralProfile<S> {
    pub grid: KGrid<S>,
    /// nm^{1/2}
    pub amplitude: Vec<Cx<S>>,
    pub k0: S,
    pub l0: S,
}

impl<S: Scalar> SpectralProfile<S> {
    /// User-supplied samples. `k0` and `l0` are taken from the first two
    /// moments (`l0 = 1/(2σ_k)`).
    pub fn from_samples(grid: KGrid<S>, amplitude: Vec<Cx<S>>) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        let mut prof = Self {
            grid,
            amplitude,
            k0: S::zero(),
            l0: S::zero(),
        };
        prof.normalise()?;
        prof.k0 = prof.mean_k();
        let var = prof.k_variance();
        if !(var > S::zero()) {
            return Err(Error::InvalidGrid("spectral profile has zero width".into()));
        }
        prof.l0 = S::one() / (S::lit(2.0) * var.sqrt());
        Ok(prof)
    }

    fn normalise(&mut self) -> Result<()> {
        let n = self.grid.integrate(&self.density());
        if !(n > S::zero()) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let s = n.sqrt();
        for a in &mut self.amplitude {
            *a = *a / s;
        }
        Ok(())
    }

    /// `|A(k)|²`
    pub fn density(&self) -> Vec<S> {
        self.amplitude.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `∫ f(k)|A(k)|² dk`
    pub fn average(&self, f: &[S]) -> S {
        let d: Vec<S> = self.density().iter().zip(f).map(|(p, v)| *p * *v).collect();
        self.grid.integrate(&d)
    }

    pub fn mean_k(&self) -> S {
        self.average(&self.grid.nodes())
    }

    pub fn k_variance(&self) -> S {
        let m = self.mean_k();
        let sq: Vec<S> = self.grid.nodes().iter().map(|k| (*k - m) * (*k - m)).collect();
        self.average(&sq)
    }

    /// Largest `|A|` at the two end nodes relative to the peak.
    pub fn edge_ratio(&self) -> S {
        let peak = self.amplitude.iter().fold(S::zero(), |m, a| m.max(a.norm()));
        let n = self.amplitude.len();
        self.amplitude[0].norm().max(self.amplitude[n - 1].norm()) / peak
    }
}

/// `A(k) ∝ exp(−l0²(k − k0)²)` on `grid`, renormalised after truncation.
/// The packet starts centred at `x = 0` with `⟨x²⟩ = l0²`.
pub fn gaussian_profile<S: Scalar>(k0: S, l0: S, grid: KGrid<S>) -> Result<SpectralProfile<S>> {
    let kl = k0 * l0;
    if !(kl >= S::lit(3.0)) {
        return Err(Error::IncompleteScattering(kl.as_f64()));
    }
    let amp = (l0 * l0 / S::PI()).sqrt().sqrt();
    let amplitude = grid
        .nodes()
        .iter()
        .map(|&k| Complex::new(amp * (-(l0 * l0) * (k - k0) * (k - k0)).exp(), S::zero()))
        .collect();
    let mut prof = SpectralProfile {
        grid,
        amplitude,
        k0,
        l0,
    };
    prof.normalise()?;
    Ok(prof)
}

/// Wavenumber and spatial grids sized for a packet followed up to `t_max`.
#[derive(Debug, Clone)]
pub struct SimulationGrids<S> {
    pub k: KGrid<S>,
    pub x: XGrid<S>,
}

fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Alias-period lengths, in units of the largest phase slope, reserved for
/// delayed tails (`e^{−16}` in amplitude).
const DELAY_TAIL: f64 = 16.0;
const MAX_PERIOD_PASSES: usize = 6;

/// `k` grid whose spacing makes `2π/(Δk·dx)` a 5-smooth integer covering
/// `period`, the `x` grid and the `k` grid.
fn k_grid_for_period<S: Scalar>(period: S, dx: S, k_lo: S, k_hi: S, n_x: usize) -> Result<KGrid<S>> {
    let n_period = (period / dx).ceil().to_usize().unwrap_or(usize::MAX);
    let mut n_fft = next_smooth(n_period.max(n_x));
    let mut dk = S::TAU() / (S::from_index(n_fft) * dx);
    let mut n_k = ((k_hi - k_lo) / dk).ceil().to_usize().unwrap_or(0) + 1;
    if n_k > n_fft {
        n_fft = next_smooth(n_k);
        dk = S::TAU() / (S::from_index(n_fft) * dx);
        n_k = ((k_hi - k_lo) / dk).ceil().to_usize().unwrap_or(0) + 1;
    }
    KGrid::with_spacing(k_lo, dk, n_k.max(16))
}

/// Largest phase slopes over the nodes carrying non-negligible Gaussian
/// weight: `max(|J′|, |J′ − F′|, |Λ′|)` and, separately, `max |Λ′|` (zero for
/// asymmetric potentials).
fn max_phase_slopes<S: Scalar>(
    pot: &PotentialSpec<S>,
    grid: &KGrid<S>,
    k0: S,
    l0: S,
    particle: &Particle<S>,
) -> Result<(S, S)> {
    let table = ParamsTable::build(pot, grid, particle)?;
    let lambda = if table.symmetric {
        Some(SplitTable::build(pot, &table, particle)?.d_lambda)
    } else {
        None
    };
    let cut = S::lit(2.0 * 36.0);
    let (mut worst, mut worst_lambda) = (S::zero(), S::zero());
    for (j, k) in grid.nodes().into_iter().enumerate() {
        let z = S::lit(2.0) * l0 * (k - k0);
        if z * z > cut {
            continue;
        }
        let dj = table.d_transmission_phase[j];
        let df = table.d_reflection_phase[j];
        worst = worst.max(dj.abs()).max((dj - df).abs());
        if let Some(l) = &lambda {
            worst_lambda = worst_lambda.max(l[j].abs());
        }
    }
    Ok((worst.max(worst_lambda), worst_lambda))
}

/// Default grids: `k0 ± 11σ_k` (clipped at `1e-4`), and an `x` range holding
/// the initial packet, the reflected packet and the transmitted packet up to
/// `t_max` with nine spreads to spare, widened on both sides by the reach of
/// the `Λ′`-shifted channel tails. The node spacing resolves the fastest
/// local wavelength and puts `a`, `x_mid` and `b` on nodes. The `k` spacing is
/// chosen so that the FFT path applies with an alias period well beyond every
/// packet image, including the slowly decaying tails behind sharp resonances.
pub fn default_grids<S: Scalar>(
    pot: &PotentialSpec<S>,
    k0: S,
    l0: S,
    t_max: S,
    particle: &Particle<S>,
) -> Result<SimulationGrids<S>> {
    pot.validate()?;
    let c = S::lit;
    let g = pot.geometry();
    let sigma_k = c(0.5) / l0;
    let k_lo = (k0 - c(K_HALF_WIDTH) * sigma_k).max(c(1e-4));
    let k_hi = k0 + c(K_HALF_WIDTH) * sigma_k;

    let t_max = t_max.max(S::zero());
    let spread = particle.hbar * t_max / (c(2.0) * particle.mass * l0 * l0);
    let sigma_x = l0 * (S::one() + spread * spread).sqrt();
    let v0 = particle.velocity(k0);
    let margin = c(9.0) * sigma_x + c(20.0);
    let x_lo = (-c(9.0) * l0 - c(20.0)).min(c(2.0) * g.a - v0 * t_max - margin);
    let x_hi = (g.b + c(9.0) * l0 + c(20.0)).max(v0 * t_max + g.d + margin);

    let depth = (-pot.layers().iter().fold(S::zero(), |m, l| m.min(l.potential))).max(S::zero());
    let k_local = (k_hi * k_hi + particle.k2_per_ev() * depth).sqrt();
    let mut dx = c(0.05).min(S::PI() / (c(12.0) * k_local));
    if g.d > S::zero() {
        let half = g.d / c(2.0);
        let n = (half / dx).ceil().max(S::one());
        dx = half / n;
    }
    // Sharp spectral features delay part of the packet by up to the local
    // phase slope, and shift the incident parts of the two channels by up to
    // |Λ′|. The alias period must hold the delayed tails and the x range the
    // shifted ones.
    let build = |shift: S, period: S| -> Result<(SimulationGrids<S>, S)> {
        let x = XGrid::anchored(x_lo - shift, x_hi + shift, dx, g.a)?.with_breaks_at(&[g.a, g.x_mid, g.b]);
        let reach = x.x_max().max(c(2.0) * (g.a + g.d));
        let base = c(1.25) * (reach - x.x_min()) + c(18.0) * sigma_x + c(200.0);
        let k = k_grid_for_period(period.max(base), dx, k_lo, k_hi, x.len())?;
        Ok((SimulationGrids { k, x }, base))
    };
    let (mut shift, mut period) = (S::zero(), S::zero());
    let (mut grids, mut base) = build(shift, period)?;
    for _ in 0..MAX_PERIOD_PASSES {
        let (slope, slope_lambda) = max_phase_slopes(pot, &grids.k, k0, l0, particle)?;
        let need_period = base + c(DELAY_TAIL) * slope;
        let need_shift = c(DELAY_TAIL) * slope_lambda;
        if need_period <= period.max(base) && need_shift <= shift {
            break;
        }
        shift = shift.max(need_shift);
        period = period.max(need_period);
        (grids, base) = build(shift, period)?;
    }
    Ok(grids)
}

/// The three channel fields at one time. `transmission` and `reflection` are
/// present only for mirror-symmetric potentials.
#[derive(Debug, Clone)]
pub struct ChannelFields<S> {
    pub full: WaveField<S>,
    pub transmission: Option<WaveField<S>>,
    pub reflection: Option<WaveField<S>>,
}

impl<S: Scalar> ChannelFields<S> {
    pub fn channel(&self, channel: Channel) -> Result<&WaveField<S>> {
        match channel {
            Channel::Full => Ok(&self.full),
            Channel::Transmission => self
                .transmission
                .as_ref()
                .ok_or(Error::Asymmetric("the transmission channel")),
            Channel::Reflection => self
                .reflection
                .as_ref()
                .ok_or(Error::Asymmetric("the reflection channel")),
        }
    }

    /// `max |Ψ_full − Ψ_tr − Ψ_ref|` over the grid.
    pub fn decomposition_residual(&self) -> Option<S> {
        let tr = self.transmission.as_ref()?;
        let rf = self.reflection.as_ref()?;
        Some(
            self.full
                .values
                .iter()
                .zip(&tr.values)
                .zip(&rf.values)
                .fold(S::zero(), |m, ((f, t), r)| m.max((*f - *t - *r).norm())),
        )
    }
}

struct FftPlan<S> {
    n: usize,
    forward: Arc<dyn Fft<S>>,
    inverse: Arc<dyn Fft<S>>,
    /// `e^{ijΔk x_min}`
    pre: Vec<Cx<S>>,
    /// `e^{ik_min x_i}`
    post: Vec<Cx<S>>,
}

/// Precomputed stationary data for repeated synthesis on fixed grids.
pub struct Synthesizer<S: Scalar> {
    grid: XGrid<S>,
    particle: Particle<S>,
    geom: Geometry<S>,
    split: bool,
    k: Vec<S>,
    energy: Vec<S>,
    /// `w_j A_j / √(2π)`
    base: Vec<Cx<S>>,
    a_out: Vec<Cx<S>>,
    b_out: Vec<Cx<S>>,
    a_ref: Vec<Cx<S>>,
    /// nodes `0..n_left` satisfy `x ≤ a`
    n_left: usize,
    /// nodes `right_start..` satisfy `x ≥ b`
    right_start: usize,
    /// interior values, row-major `[node − n_left][j]`
    inner_full: Vec<Cx<S>>,
    inner_ref: Vec<Cx<S>>,
    /// `Ψ_full(x_mid)`, `∂xΨ_ref(x_mid−)` per wavenumber
    mid: Vec<(Cx<S>, Cx<S>)>,
    fft: Option<FftPlan<S>>,
}

impl<S: Scalar> Synthesizer<S> {
    pub fn new(pot: &PotentialSpec<S>, prof: &SpectralProfile<S>, grid: &XGrid<S>, particle: &Particle<S>) -> Result<Self> {
        pot.validate()?;
        let geom = pot.geometry();
        if !(grid.x_min() < geom.a && grid.x_max() > geom.b) {
            return Err(Error::InvalidGrid(format!(
                "x grid [{}, {}] must enclose the potential [{}, {}]",
                grid.x_min(),
                grid.x_max(),
                geom.a,
                geom.b
            )));
        }
        let split = pot.is_symmetric();
        let ks = prof.grid.nodes();
        let nodes = grid.nodes();
        let n_left = nodes.partition_point(|&x| x <= geom.a);
        let right_start = nodes.partition_point(|&x| x < geom.b).max(n_left);
        let inner_x = &nodes[n_left..right_start];

        struct Row<S> {
            a_out: Cx<S>,
            b_out: Cx<S>,
            a_ref: Cx<S>,
            full: Vec<Cx<S>>,
            refl: Vec<Cx<S>>,
            mid: (Cx<S>, Cx<S>),
        }
        let rows = ks
            .par_iter()
            .map(|&k| -> Result<Row<S>> {
                let tp = tunneling_params(pot, k, particle)?;
                let a_out = tp.a_out(geom.d);
                let b_out = tp.b_out(geom.a);
                let (a_ref, state) = if split {
                    let branch = select_odd_branch(pot, &tp)?;
                    let sa = split_amplitudes(&tp, &geom, branch);
                    (sa.a_in_ref, StationaryState::with_branch(pot, tp, branch, particle))
                } else {
                    (Complex::new(S::zero(), S::zero()), StationaryState::with_branch(pot, tp, crate::splitting::Branch::Plus, particle))
                };
                let mid = if split { state.midpoint_values() } else { (Complex::new(S::zero(), S::zero()), Complex::new(S::zero(), S::zero())) };
                let (full, refl) = if inner_x.is_empty() {
                    (Vec::new(), Vec::new())
                } else {
                    let v = state.evaluate(inner_x);
                    (v.full, v.reflected)
                };
                Ok(Row {
                    a_out,
                    b_out,
                    a_ref,
                    full,
                    refl,
                    mid,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let n_k = ks.len();
        let n_in = inner_x.len();
        let zero = Complex::new(S::zero(), S::zero());
        let mut inner_full = vec![zero; n_in * n_k];
        let mut inner_ref = vec![zero; n_in * n_k];
        for (j, row) in rows.iter().enumerate() {
            for i in 0..n_in {
                inner_full[i * n_k + j] = row.full[i];
                if split {
                    inner_ref[i * n_k + j] = row.refl[i];
                }
            }
        }

        let inv_sqrt_2pi = S::one() / S::TAU().sqrt();
        let base = prof
            .grid
            .weights()
            .iter()
            .zip(&prof.amplitude)
            .map(|(w, a)| *a * (*w * inv_sqrt_2pi))
            .collect();

        Ok(Self {
            grid: grid.clone(),
            particle: *particle,
            geom,
            split,
            energy: ks.iter().map(|&k| particle.energy(k)).collect(),
            base,
            a_out: rows.iter().map(|r| r.a_out).collect(),
            b_out: rows.iter().map(|r| r.b_out).collect(),
            a_ref: rows.iter().map(|r| r.a_ref).collect(),
            n_left,
            right_start,
            inner_full,
            inner_ref,
            mid: rows.iter().map(|r| r.mid).collect(),
            fft: plan_fft(&prof.grid, grid),
            k: ks,
        })
    }

    pub fn grid(&self) -> &XGrid<S> {
        &self.grid
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    /// Forces direct summation.
    pub fn without_fft(mut self) -> Self {
        self.fft = None;
        self
    }

    /// All channels at time `t` (fs), with the leak check on the full field.
    pub fn fields(&self, t: S) -> Result<ChannelFields<S>> {
        let fields = self.fields_unchecked(t);
        let n = norm(&fields.full)?;
        let leak = (S::one() - n).abs();
        if leak > S::lit(LEAK_TOL) {
            return Err(Error::GridLeak {
                leak: leak.as_f64(),
                time: t.as_f64(),
            });
        }
        Ok(fields)
    }

    /// One channel at time `t`.
    pub fn field(&self, t: S, channel: Channel) -> Result<WaveField<S>> {
        if channel != Channel::Full && !self.split {
            return Err(Error::Asymmetric("the transmission/reflection split"));
        }
        let all = self.fields(t)?;
        Ok(match channel {
            Channel::Full => all.full,
            Channel::Transmission => all.transmission.expect("symmetric potential"),
            Channel::Reflection => all.reflection.expect("symmetric potential"),
        })
    }

    /// Fields without the leak check.
    pub fn fields_unchecked(&self, t: S) -> ChannelFields<S> {
        let hbar = self.particle.hbar;
        let c: Vec<Cx<S>> = self
            .base
            .iter()
            .zip(&self.energy)
            .map(|(b, e)| *b * cis(-*e * t / hbar))
            .collect();
        let c_ref: Vec<Cx<S>> = c.iter().zip(&self.a_ref).map(|(x, y)| *x * *y).collect();
        let c_b: Vec<Cx<S>> = c.iter().zip(&self.b_out).map(|(x, y)| *x * *y).collect();
        let c_a: Vec<Cx<S>> = c.iter().zip(&self.a_out).map(|(x, y)| *x * *y).collect();

        let n = self.grid.len();
        let zero = Complex::new(S::zero(), S::zero());
        let mut full = vec![zero; n];
        let mut tr = vec![zero; n];
        let mut rf = vec![zero; n];
        let nl = self.n_left;
        let rs = self.right_start;

        match &self.fft {
            Some(plan) => {
                let u1 = plan.sum(&c, 1, nl);
                let h3 = plan.sum(&c_b, -1, nl);
                let u4 = plan.sum(&c_a, 1, n);
                let u2 = if self.split { plan.sum(&c_ref, 1, nl) } else { vec![zero; nl] };
                for i in 0..nl {
                    full[i] = u1[i] + h3[i];
                    rf[i] = u2[i] + h3[i];
                    tr[i] = u1[i] - u2[i];
                }
                for i in rs..n {
                    full[i] = u4[i];
                    tr[i] = u4[i];
                }
            }
            None => {
                let nodes = self.grid.nodes();
                let split = self.split;
                let left: Vec<(Cx<S>, Cx<S>, Cx<S>)> = nodes[..nl]
                    .par_iter()
                    .map(|&x| {
                        let mut s = (zero, zero, zero);
                        for j in 0..self.k.len() {
                            let e = cis(self.k[j] * x);
                            s.0 += c[j] * e;
                            s.1 += c_b[j] * e.conj();
                            if split {
                                s.2 += c_ref[j] * e;
                            }
                        }
                        s
                    })
                    .collect();
                for (i, (u1, h3, u2)) in left.into_iter().enumerate() {
                    full[i] = u1 + h3;
                    rf[i] = u2 + h3;
                    tr[i] = u1 - u2;
                }
                let right: Vec<Cx<S>> = nodes[rs..]
                    .par_iter()
                    .map(|&x| (0..self.k.len()).fold(zero, |acc, j| acc + c_a[j] * cis(self.k[j] * x)))
                    .collect();
                for (i, v) in right.into_iter().enumerate() {
                    full[rs + i] = v;
                    tr[rs + i] = v;
                }
            }
        }

        let n_k = self.k.len();
        for i in nl..rs {
            let row = (i - nl) * n_k;
            let f = dot(&c, &self.inner_full[row..row + n_k]);
            let r = if self.split { dot(&c, &self.inner_ref[row..row + n_k]) } else { zero };
            full[i] = f;
            rf[i] = r;
            tr[i] = f - r;
        }

        let wf = |values, channel| WaveField::new(self.grid.clone(), values, t, channel);
        if self.split {
            ChannelFields {
                full: wf(full, Channel::Full),
                transmission: Some(wf(tr, Channel::Transmission)),
                reflection: Some(wf(rf, Channel::Reflection)),
            }
        } else {
            ChannelFields {
                full: wf(full, Channel::Full),
                transmission: None,
                reflection: None,
            }
        }
    }

    /// `dN_tr/dt = (ħ/m)·Im(Ψ_full*(x_mid, t)·∂xΨ_ref(x_mid−, t))` in fs⁻¹.
    ///
    /// The transmission wave has a slope discontinuity at the midpoint. For a
    /// single wavenumber it carries no flux, but the cross terms of a packet
    /// do, so the transmission norm (and with it the interference integral)
    /// varies while the packet overlaps the barrier. Zero in both asymptotes.
    pub fn transmission_norm_rate(&self, t: S) -> Result<S> {
        if !self.split {
            return Err(Error::Asymmetric("the transmission/reflection split"));
        }
        let zero = Complex::new(S::zero(), S::zero());
        let (mut f, mut r) = (zero, zero);
        for (j, (mf, mr)) in self.mid.iter().enumerate() {
            let c = self.base[j] * cis(-self.energy[j] * t / self.particle.hbar);
            f += c * *mf;
            r += c * *mr;
        }
        Ok(self.particle.hbar / self.particle.mass * (f.conj() * r).im)
    }

    pub fn geometry(&self) -> Geometry<S> {
        self.geom
    }

    pub fn is_split(&self) -> bool {
        self.split
    }
}

fn dot<S: Scalar>(a: &[Cx<S>], b: &[Cx<S>]) -> Cx<S> {
    a.iter()
        .zip(b)
        .fold(Complex::new(S::zero(), S::zero()), |acc, (x, y)| acc + *x * *y)
}

/// FFT applies when `N = 2π/(Δk Δx)` is an integer no smaller than either grid.
fn plan_fft<S: Scalar>(kg: &KGrid<S>, xg: &XGrid<S>) -> Option<FftPlan<S>> {
    let ratio = (S::TAU() / (kg.spacing() * xg.spacing())).as_f64();
    let n = ratio.round();
    if !(n.is_finite()) || (ratio - n).abs() > 1e-9 * n || n > 1e9 {
        return None;
    }
    let n = n as usize;
    if n < kg.len() || n < xg.len() {
        return None;
    }
    let mut planner = FftPlanner::new();
    let x0 = xg.x_min();
    let dk = kg.spacing();
    Some(FftPlan {
        n,
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
        pre: (0..kg.len()).map(|j| cis(S::from_index(j) * dk * x0)).collect(),
        post: (0..xg.len()).map(|i| cis(kg.k_min() * xg.node(i))).collect(),
    })
}

impl<S: Scalar> FftPlan<S> {
    /// `Σ_j g_j e^{±ik_j x_i}` for the first `count` nodes.
    fn sum(&self, g: &[Cx<S>], sign: i32, count: usize) -> Vec<Cx<S>> {
        let mut buf = vec![Complex::new(S::zero(), S::zero()); self.n];
        if sign > 0 {
            for (j, v) in g.iter().enumerate() {
                buf[j] = *v * self.pre[j];
            }
            self.inverse.process(&mut buf);
            buf.truncate(count);
            for (v, p) in buf.iter_mut().zip(&self.post) {
                *v = *v * *p;
            }
        } else {
            for (j, v) in g.iter().enumerate() {
                buf[j] = *v * self.pre[j].conj();
            }
            self.forward.process(&mut buf);
            buf.truncate(count);
            for (v, p) in buf.iter_mut().zip(&self.post) {
                *v = *v * p.conj();
            }
        }
        buf
    }
}

/// One channel of `pot` at time `t`.
pub fn synthesize<S: Scalar>(
    pot: &PotentialSpec<S>,
    prof: &SpectralProfile<S>,
    grid: &XGrid<S>,
    t: S,
    channel: Channel,
    particle: &Particle<S>,
) -> Result<WaveField<S>> {
    if channel != Channel::Full && !pot.is_symmetric() {
        return Err(Error::Asymmetric("the transmission/reflection split"));
    }
    Synthesizer::new(pot, prof, grid, particle)?.field(t, channel)
}

/// Spectral averages describing the out-asymptotes.
///
/// `k_ref` is the mean wavenumber of the reflected subensemble measured
/// along its incidence direction (positive); the outgoing reflected packet
/// moves with `−k_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutMoments<S> {
    pub k0: S,
    pub l0: S,
    /// ⟨T⟩
    pub mean_transmission: S,
    /// ⟨R⟩
    pub mean_reflection: S,
    /// ⟨T′⟩ = ∫T′|A|²dk (nm)
    pub mean_d_transmission: S,
    pub k_tr: Option<S>,
    pub k_ref: Option<S>,
    /// ⟨J′⟩_tr (nm)
    pub j_tr: Option<S>,
    /// ⟨J′ − F′⟩_ref (nm)
    pub jf_ref: Option<S>,
}

impl<S: Scalar> OutMoments<S> {
    /// `⟨k⟩_tr − k0`
    pub fn dk_tr(&self) -> Option<S> {
        self.k_tr.map(|k| k - self.k0)
    }

    /// `⟨−k⟩_ref,out − k0`
    pub fn dk_ref(&self) -> Option<S> {
        self.k_ref.map(|k| k - self.k0)
    }

    /// `⟨T′⟩/(4l0²)`, the Gaussian value of both `⟨T⟩Δk_tr` and `−⟨R⟩Δk_ref`.
    pub fn gaussian_shift(&self) -> S {
        self.mean_d_transmission / (S::lit(4.0) * self.l0 * self.l0)
    }

    /// Mean of the reflected packet's outgoing wavenumber (negative).
    pub fn k_ref_out(&self) -> Option<S> {
        self.k_ref.map(|k| -k)
    }
}

fn weighted<S: Scalar>(prof: &SpectralProfile<S>, weight: &[S], f: &[S], total: S) -> Option<S> {
    if !(total > S::lit(WEIGHT_FLOOR)) {
        return None;
    }
    let prod: Vec<S> = weight.iter().zip(f).map(|(w, v)| *w * *v).collect();
    Some(prof.average(&prod) / total)
}

fn check_grids<S: Scalar>(a: &KGrid<S>, b: &KGrid<S>) -> Result<()> {
    if a.len() != b.len()
        || (a.k_min() - b.k_min()).abs() > S::lit(1e-12) * a.k_min().abs().max(S::one())
        || (a.spacing() - b.spacing()).abs() > S::lit(1e-12) * a.spacing()
    {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Transmitted averages use `T|A|²/⟨T⟩`, reflected ones `R|A|²/⟨R⟩`.
pub fn out_asymptote_moments<S: Scalar>(prof: &SpectralProfile<S>, table: &ParamsTable<S>) -> Result<OutMoments<S>> {
    check_grids(&prof.grid, &table.grid)?;
    let t = table.transmission();
    let r = table.reflection();
    let ks = prof.grid.nodes();
    let mt = prof.average(&t);
    let mr = prof.average(&r);
    let jf: Vec<S> = table
        .d_transmission_phase
        .iter()
        .zip(&table.d_reflection_phase)
        .map(|(j, f)| *j - *f)
        .collect();
    Ok(OutMoments {
        k0: prof.k0,
        l0: prof.l0,
        mean_transmission: mt,
        mean_reflection: mr,
        mean_d_transmission: prof.average(&table.d_transmission),
        k_tr: weighted(prof, &t, &ks, mt),
        k_ref: weighted(prof, &r, &ks, mr),
        j_tr: weighted(prof, &t, &table.d_transmission_phase, mt),
        jf_ref: weighted(prof, &r, &jf, mr),
    })
}

/// Spectral averages of `Λ′` over the two subensembles and the resulting
/// average starting points `x_start = −⟨Λ′⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitMoments<S> {
    pub lambda_tr: Option<S>,
    pub lambda_ref: Option<S>,
    pub x_start_tr: Option<S>,
    pub x_start_ref: Option<S>,
}

pub fn split_in_asymptote_moments<S: Scalar>(
    prof: &SpectralProfile<S>,
    params: &ParamsTable<S>,
    split: &SplitTable<S>,
) -> Result<SplitMoments<S>> {
    check_grids(&prof.grid, &params.grid)?;
    if split.d_lambda.len() != params.len() {
        return Err(Error::GridMismatch);
    }
    let t = params.transmission();
    let r = params.reflection();
    let mt = prof.average(&t);
    let mr = prof.average(&r);
    let lambda_tr = weighted(prof, &t, &split.d_lambda, mt);
    let lambda_ref = weighted(prof, &r, &split.d_lambda, mr);
    Ok(SplitMoments {
        lambda_tr,
        lambda_ref,
        x_start_tr: lambda_tr.map(|v| -v),
        x_start_ref: lambda_ref.map(|v| -v),
    })
}

/// `|Ψ_full|² − |Ψ_tr|² − |Ψ_ref|²` pointwise.
pub fn interference_density<S: Scalar>(full: &WaveField<S>, tr: &WaveField<S>, rf: &WaveField<S>) -> Result<Vec<S>> {
    let same = |a: &WaveField<S>, b: &WaveField<S>| {
        a.grid.len() == b.grid.len()
            && a.grid.x_min() == b.grid.x_min()
            && a.grid.spacing() == b.grid.spacing()
            && a.time == b.time
            && a.values.len() == b.values.len()
    };
    if !same(full, tr) || !same(full, rf) {
        return Err(Error::GridMismatch);
    }
    Ok(full
        .values
        .iter()
        .zip(&tr.values)
        .zip(&rf.values)
        .map(|((f, t), r)| f.norm_sqr() - t.norm_sqr() - r.norm_sqr())
        .collect())
}
