//! Centre-of-mass tracking of the transmitted and reflected sub-packets and
//! the characteristic times built on it.
//!
//! Exact times come from roots of `⟨x⟩_tr(t) = a − L1`, `⟨x⟩_tr(t) = b + L2`
//! and `⟨x⟩_ref(t) = a − L1`; every expectation value is normalised by the
//! norm of the same channel at the same instant. Asymptotic times, effective
//! widths and the phase times of the full packet follow from spectral
//! averages alone.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{mean_position, Channel, Particle, XGrid};
use crate::packets::{
    default_grids, gaussian_profile, out_asymptote_moments, split_in_asymptote_moments, OutMoments,
    SpectralProfile, SplitMoments, Synthesizer,
};
use crate::potentials::PotentialSpec;
use crate::scalar::Scalar;
use crate::scattering::ParamsTable;
use crate::splitting::SplitTable;

pub use crate::closed_forms::{delta_closed_forms, rect_closed_forms, ClosedForms};

/// Bracketing step for root searches (fs).
pub const SCAN_STEP: f64 = 1.0;
/// Width of the final root bracket (fs).
pub const ROOT_TOL: f64 = 0.01;

/// Transmission and reflection times from the centre-of-mass trajectories;
/// `None` where the required crossing does not occur.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactTimes<S> {
    pub l1: S,
    pub l2: S,
    pub transmission: Option<S>,
    pub reflection: Option<S>,
    /// Smallest root of `⟨x⟩_tr = a − L1` and largest of `⟨x⟩_tr = b + L2`.
    pub tr_roots: Option<(S, S)>,
    pub ref_roots: Option<(S, S)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticTimes<S> {
    pub tau_tr: Option<S>,
    pub tau_ref: Option<S>,
    pub tau_tr_as: Option<S>,
    pub tau_ref_as: Option<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveWidths<S> {
    pub d_eff_tr: Option<S>,
    pub d_eff_ref: Option<S>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseTimes<S> {
    pub transmission: Option<S>,
    pub reflection: Option<S>,
}

fn both<A, B>(a: Option<A>, b: Option<B>) -> Option<(A, B)> {
    a.zip(b)
}

/// `τ_tr = m(⟨J′⟩_tr − ⟨Λ′⟩_tr + L1 + L2)/(ħ⟨k⟩_tr)`,
/// `τ_ref = m(⟨J′−F′⟩_ref − ⟨Λ′⟩_ref + 2L1)/(ħ⟨k⟩_ref)`. Never clamped.
pub fn asymptotic_times<S: Scalar>(
    out: &OutMoments<S>,
    inn: &SplitMoments<S>,
    particle: &Particle<S>,
    l1: S,
    l2: S,
) -> AsymptoticTimes<S> {
    let m_h = particle.mass / particle.hbar;
    let two = S::lit(2.0);
    let tr = both(out.k_tr, both(out.j_tr, inn.lambda_tr));
    let rf = both(out.k_ref, both(out.jf_ref, inn.lambda_ref));
    AsymptoticTimes {
        tau_tr: tr.map(|(k, (j, l))| m_h * (j - l + l1 + l2) / k),
        tau_ref: rf.map(|(k, (j, l))| m_h * (j - l + two * l1) / k),
        tau_tr_as: tr.map(|(k, (j, l))| m_h * (j - l) / k),
        tau_ref_as: rf.map(|(k, (j, l))| m_h * (j - l) / k),
    }
}

/// `d_eff_tr = ⟨J′⟩_tr − ⟨Λ′⟩_tr`, `d_eff_ref = ⟨J′−F′⟩_ref − ⟨Λ′⟩_ref`.
pub fn effective_widths<S: Scalar>(out: &OutMoments<S>, inn: &SplitMoments<S>) -> EffectiveWidths<S> {
    EffectiveWidths {
        d_eff_tr: both(out.j_tr, inn.lambda_tr).map(|(j, l)| j - l),
        d_eff_ref: both(out.jf_ref, inn.lambda_ref).map(|(j, l)| j - l),
    }
}

/// Phase times of the full packet, including the terms that depend on the
/// initial distance `a` to the barrier:
///
/// ```text
/// Δt_tr  = (m/ħ)[(⟨J′⟩_tr + L2)/⟨k⟩_tr + L1/k0 + a(1/⟨k⟩_tr − 1/k0)]
/// Δt_ref = (m/ħ)[(⟨J′−F′⟩_ref + L1)/⟨−k⟩_ref + L1/k0 + a(1/⟨−k⟩_ref − 1/k0)]
/// ```
pub fn swpa_phase_times<S: Scalar>(out: &OutMoments<S>, particle: &Particle<S>, l1: S, l2: S, a: S) -> PhaseTimes<S> {
    let m_h = particle.mass / particle.hbar;
    let k0 = out.k0;
    PhaseTimes {
        transmission: both(out.k_tr, out.j_tr)
            .map(|(k, j)| m_h * ((j + l2) / k + l1 / k0 + a * (S::one() / k - S::one() / k0))),
        reflection: both(out.k_ref, out.jf_ref)
            .map(|(k, j)| m_h * ((j + l1) / k + l1 / k0 + a * (S::one() / k - S::one() / k0))),
    }
}

/// Potential, spectrum, grids and precomputed tables for one scenario.
pub struct TimingAnalysis<S: Scalar> {
    pub potential: PotentialSpec<S>,
    pub particle: Particle<S>,
    pub profile: SpectralProfile<S>,
    pub params: ParamsTable<S>,
    pub split: SplitTable<S>,
    pub out: OutMoments<S>,
    pub inn: SplitMoments<S>,
    synth: Synthesizer<S>,
    /// End of the default root scan (fs).
    pub t_end: S,
}

impl<S: Scalar> TimingAnalysis<S> {
    /// Uses the given spectrum and spatial grid. `t_end` bounds root scans;
    /// without it the scan runs until both sub-packets have left
    /// `[a − L1, b + L2]` for `L1 = L2 = 0`.
    pub fn new(
        pot: &PotentialSpec<S>,
        profile: SpectralProfile<S>,
        grid: &XGrid<S>,
        particle: &Particle<S>,
        t_end: Option<S>,
    ) -> Result<Self> {
        if !pot.is_symmetric() {
            return Err(Error::Asymmetric("timing of the transmission/reflection sub-packets"));
        }
        let params = ParamsTable::build(pot, &profile.grid, particle)?;
        let split = SplitTable::build(pot, &params, particle)?;
        let out = out_asymptote_moments(&profile, &params)?;
        let inn = split_in_asymptote_moments(&profile, &params, &split)?;
        let synth = Synthesizer::new(pot, &profile, grid, particle)?;
        let t_end = t_end.unwrap_or_else(|| scan_end(pot, &out, profile.l0, particle, S::zero(), S::zero()));
        Ok(Self {
            potential: pot.clone(),
            particle: *particle,
            profile,
            params,
            split,
            out,
            inn,
            synth,
            t_end,
        })
    }

    /// Gaussian packet with default grids, sized so that both sub-packets have
    /// left the region `[a − L1, b + L2]` by the end of the scan.
    pub fn gaussian(pot: &PotentialSpec<S>, k0: S, l0: S, particle: &Particle<S>, l1: S, l2: S) -> Result<Self> {
        let trial = default_grids(pot, k0, l0, S::zero(), particle)?;
        let prof = gaussian_profile(k0, l0, trial.k)?;
        let params = ParamsTable::build(pot, &prof.grid, particle)?;
        let out = out_asymptote_moments(&prof, &params)?;
        let t_end = scan_end(pot, &out, l0, particle, l1, l2);
        let grids = default_grids(pot, k0, l0, t_end, particle)?;
        let prof = gaussian_profile(k0, l0, grids.k)?;
        Self::new(pot, prof, &grids.x, particle, Some(t_end))
    }

    pub fn synthesizer(&self) -> &Synthesizer<S> {
        &self.synth
    }

    /// `⟨x⟩` of a channel at time `t` (fs).
    pub fn cm(&self, channel: Channel, t: S) -> Result<S> {
        mean_position(&self.synth.field(t, channel)?)
    }

    /// `(t, ⟨x⟩)` for each requested time, evaluated in parallel.
    pub fn cm_trajectory(&self, channel: Channel, times: &[S]) -> Result<Vec<(S, S)>> {
        if channel == Channel::Full {
            return Err(Error::Config("centre-of-mass timing tracks the tr or ref channel".into()));
        }
        times
            .par_iter()
            .map(|&t| self.cm(channel, t).map(|x| (t, x)))
            .collect()
    }

    /// Exact times with the default scan (`0..t_end` in 1 fs steps).
    pub fn exact_times(&self, l1: S, l2: S) -> Result<ExactTimes<S>> {
        self.exact_times_with(l1, l2, self.t_end, S::lit(SCAN_STEP))
    }

    pub fn exact_times_with(&self, l1: S, l2: S, t_end: S, dt: S) -> Result<ExactTimes<S>> {
        if l1 < S::zero() || l2 < S::zero() {
            return Err(Error::Config("L1 and L2 must be non-negative".into()));
        }
        let g = self.potential.geometry();
        let n = (t_end / dt).ceil().to_usize().unwrap_or(0).max(1);
        let times: Vec<S> = (0..=n).map(|i| S::from_index(i) * dt).collect();
        let floor = S::lit(crate::packets::WEIGHT_FLOOR);
        let left = g.a - l1;
        let right = g.b + l2;

        let tr_roots = if self.out.mean_transmission > floor {
            let traj = self.cm_trajectory(Channel::Transmission, &times)?;
            let t1 = self.first_root(Channel::Transmission, &traj, left)?;
            let t2 = self.last_root(Channel::Transmission, &traj, right)?;
            both(t1, t2)
        } else {
            None
        };
        let (ref_roots, reflection) = if self.out.mean_reflection > floor {
            let traj = self.cm_trajectory(Channel::Reflection, &times)?;
            let t1 = self.first_root(Channel::Reflection, &traj, left)?;
            let t2 = self.last_root(Channel::Reflection, &traj, left)?;
            let roots = both(t1, t2);
            let time = match roots {
                Some((a, b)) => Some(b - a),
                None if l1 == S::zero() => Some(S::zero()),
                None => None,
            };
            (roots, time)
        } else {
            (None, None)
        };
        Ok(ExactTimes {
            l1,
            l2,
            transmission: tr_roots.map(|(a, b)| b - a),
            reflection,
            tr_roots,
            ref_roots,
        })
    }

    fn first_root(&self, ch: Channel, traj: &[(S, S)], level: S) -> Result<Option<S>> {
        for w in traj.windows(2) {
            if (w[0].1 - level) * (w[1].1 - level) <= S::zero() && w[0].1 != w[1].1 {
                return self.bisect(ch, level, w[0], w[1]).map(Some);
            }
        }
        Ok(None)
    }

    fn last_root(&self, ch: Channel, traj: &[(S, S)], level: S) -> Result<Option<S>> {
        for w in traj.windows(2).rev() {
            if (w[0].1 - level) * (w[1].1 - level) <= S::zero() && w[0].1 != w[1].1 {
                return self.bisect(ch, level, w[0], w[1]).map(Some);
            }
        }
        Ok(None)
    }

    fn bisect(&self, ch: Channel, level: S, lo: (S, S), hi: (S, S)) -> Result<S> {
        let (mut t0, mut f0) = (lo.0, lo.1 - level);
        let mut t1 = hi.0;
        while t1 - t0 > S::lit(ROOT_TOL) {
            let tm = (t0 + t1) / S::lit(2.0);
            let fm = self.cm(ch, tm)? - level;
            if fm * f0 <= S::zero() {
                t1 = tm;
            } else {
                t0 = tm;
                f0 = fm;
            }
        }
        Ok((t0 + t1) / S::lit(2.0))
    }

    pub fn asymptotic_times(&self, l1: S, l2: S) -> AsymptoticTimes<S> {
        asymptotic_times(&self.out, &self.inn, &self.particle, l1, l2)
    }

    pub fn effective_widths(&self) -> EffectiveWidths<S> {
        effective_widths(&self.out, &self.inn)
    }

    pub fn swpa_phase_times(&self, l1: S, l2: S) -> PhaseTimes<S> {
        swpa_phase_times(&self.out, &self.particle, l1, l2, self.potential.geometry().a)
    }

    pub fn report(&self, l1: S, l2: S, scenario: &str) -> Result<TimingReport<S>> {
        let exact = self.exact_times(l1, l2)?;
        for v in [exact.transmission, exact.reflection].into_iter().flatten() {
            if v < S::zero() {
                return Err(Error::Undefined("negative exact time"));
            }
        }
        Ok(TimingReport {
            scenario: scenario.to_string(),
            l1,
            l2,
            mean_transmission: self.out.mean_transmission,
            mean_reflection: self.out.mean_reflection,
            exact,
            asymptotic: self.asymptotic_times(l1, l2),
            widths: self.effective_widths(),
            x_start_tr: self.inn.x_start_tr,
            x_start_ref: self.inn.x_start_ref,
            swpa: self.swpa_phase_times(l1, l2),
        })
    }
}

/// Time by which both sub-packets are well past `[a − L1, b + L2]`, from the
/// out-asymptote positions `⟨x⟩_tr = ħt⟨k⟩_tr/m − ⟨J′⟩_tr + d` and
/// `⟨x⟩_ref = −ħt⟨k⟩_ref/m + ⟨J′−F′⟩_ref + 2a`.
pub fn scan_end<S: Scalar>(pot: &PotentialSpec<S>, out: &OutMoments<S>, l0: S, particle: &Particle<S>, l1: S, l2: S) -> S {
    let g = pot.geometry();
    let m_h = particle.mass / particle.hbar;
    let margin = S::lit(5.0) * l0 + S::lit(10.0);
    let t_tr = both(out.k_tr, out.j_tr)
        .map(|(k, j)| m_h * (g.b + l2 + margin + (j - g.d).max(S::zero())) / k)
        .unwrap_or(S::zero());
    let t_ref = both(out.k_ref, out.jf_ref)
        .map(|(k, j)| m_h * (g.a + l1 + margin + j.max(S::zero())) / k)
        .unwrap_or(S::zero());
    S::lit(1.2) * t_tr.max(t_ref) + S::lit(20.0)
}

/// Everything reported for one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct TimingReport<S> {
    pub scenario: String,
    pub l1: S,
    pub l2: S,
    pub mean_transmission: S,
    pub mean_reflection: S,
    pub exact: ExactTimes<S>,
    pub asymptotic: AsymptoticTimes<S>,
    pub widths: EffectiveWidths<S>,
    pub x_start_tr: Option<S>,
    pub x_start_ref: Option<S>,
    pub swpa: PhaseTimes<S>,
}

fn cell<S: Scalar>(v: Option<S>) -> String {
    match v {
        Some(x) => format!("{:.16e}", x),
        None => "absent".into(),
    }
}

impl<S: Scalar> TimingReport<S> {
    fn rows(&self) -> Vec<(&'static str, Option<S>)> {
        vec![
            ("L1_nm", Some(self.l1)),
            ("L2_nm", Some(self.l2)),
            ("mean_T", Some(self.mean_transmission)),
            ("mean_R", Some(self.mean_reflection)),
            ("exact_tr_fs", self.exact.transmission),
            ("exact_ref_fs", self.exact.reflection),
            ("tau_tr_fs", self.asymptotic.tau_tr),
            ("tau_ref_fs", self.asymptotic.tau_ref),
            ("tau_tr_as_fs", self.asymptotic.tau_tr_as),
            ("tau_ref_as_fs", self.asymptotic.tau_ref_as),
            ("d_eff_tr_nm", self.widths.d_eff_tr),
            ("d_eff_ref_nm", self.widths.d_eff_ref),
            ("x_start_tr_nm", self.x_start_tr),
            ("x_start_ref_nm", self.x_start_ref),
            ("swpa_tr_fs", self.swpa.transmission),
            ("swpa_ref_fs", self.swpa.reflection),
        ]
    }

    /// Header line and one data line; absent entries are written as `absent`.
    pub fn to_csv(&self) -> String {
        let rows = self.rows();
        let mut head = vec!["scenario".to_string()];
        let mut data = vec![self.scenario.clone()];
        for (k, v) in rows {
            head.push(k.to_string());
            data.push(cell(v));
        }
        format!("{}\n{}\n", head.join(","), data.join(","))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("scenario: {}\n", self.scenario);
        for (k, v) in self.rows() {
            let val = match v {
                Some(x) => format!("{:.6}", x.as_f64()),
                None => "absent".into(),
            };
            s.push_str(&format!("  {k:<16} {val}\n"));
        }
        s
    }
}
