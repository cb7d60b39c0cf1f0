//! Units, grids and the complex field container.
//!
//! Everything is expressed in nm / fs / eV. Masses carry units of
//! eV·fs²/nm² so that `ħ²k²/2m` comes out in eV for `k` in nm⁻¹.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Scalar};

/// ħ in eV·fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;
/// Electron rest mass in eV·fs²/nm² (511 keV / c², c = 299.792458 nm/fs).
pub const ELECTRON_MASS: f64 = 5.685_630;

/// Physical constants in the crate's unit system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants<S> {
    pub hbar: S,
    pub electron_mass: S,
}

impl<S: Scalar> Default for Constants<S> {
    fn default() -> Self {
        Self {
            hbar: S::lit(HBAR_EV_FS),
            electron_mass: S::lit(ELECTRON_MASS),
        }
    }
}

/// A particle of fixed mass: the kinematic conversions between wavenumber,
/// energy and group velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle<S> {
    pub hbar: S,
    pub mass: S,
}

impl<S: Scalar> Particle<S> {
    /// Particle whose mass is `ratio` electron masses.
    pub fn with_relative_mass(ratio: S) -> Self {
        let c = Constants::<S>::default();
        Self {
            hbar: c.hbar,
            mass: ratio * c.electron_mass,
        }
    }

    /// `E(k) = ħ²k²/2m` in eV.
    pub fn energy(&self, k: S) -> S {
        self.hbar * self.hbar * k * k / (S::lit(2.0) * self.mass)
    }

    /// Inverse of [`Particle::energy`] for `E ≥ 0`.
    pub fn wavenumber(&self, energy: S) -> S {
        (S::lit(2.0) * self.mass * energy).sqrt() / self.hbar
    }

    /// `ħk/m` in nm/fs.
    pub fn velocity(&self, k: S) -> S {
        self.hbar * k / self.mass
    }

    /// `2m/ħ²` in eV⁻¹·nm⁻²: converts an energy difference into a squared
    /// wavenumber.
    pub fn k2_per_ev(&self) -> S {
        S::lit(2.0) * self.mass / (self.hbar * self.hbar)
    }
}

/// Uniform wavenumber grid on `k > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KGrid<S> {
    k_min: S,
    spacing: S,
    n_points: usize,
}

impl<S: Scalar> KGrid<S> {
    pub fn new(k_min: S, k_max: S, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::InvalidGrid("k grid needs at least 16 points".into()));
        }
        let spacing = (k_max - k_min) / S::from_index(n_points - 1);
        Self::with_spacing(k_min, spacing, n_points)
    }

    /// Grid `k_min + j·spacing`, `j = 0..n_points`.
    pub fn with_spacing(k_min: S, spacing: S, n_points: usize) -> Result<Self> {
        if !(k_min > S::zero()) || !k_min.is_finite() {
            return Err(Error::InvalidGrid(format!("k_min must be > 0, got {k_min}")));
        }
        if !(spacing > S::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidGrid("k_max must exceed k_min".into()));
        }
        if n_points < 16 {
            return Err(Error::InvalidGrid(format!(
                "k grid needs at least 16 points, got {n_points}"
            )));
        }
        Ok(Self {
            k_min,
            spacing,
            n_points,
        })
    }

    pub fn k_min(&self) -> S {
        self.k_min
    }

    pub fn k_max(&self) -> S {
        self.node(self.n_points - 1)
    }

    pub fn spacing(&self) -> S {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    #[inline]
    pub fn node(&self, j: usize) -> S {
        self.k_min + S::from_index(j) * self.spacing
    }

    pub fn nodes(&self) -> Vec<S> {
        (0..self.n_points).map(|j| self.node(j)).collect()
    }

    /// Trapezoid weights (half weight on the two end nodes).
    pub fn weights(&self) -> Vec<S> {
        let mut w = vec![self.spacing; self.n_points];
        let half = self.spacing / S::lit(2.0);
        w[0] = half;
        w[self.n_points - 1] = half;
        w
    }

    /// Same range at half the spacing.
    pub fn refined(&self) -> Self {
        Self {
            k_min: self.k_min,
            spacing: self.spacing / S::lit(2.0),
            n_points: 2 * self.n_points - 1,
        }
    }

    /// Trapezoid integral of sampled values.
    pub fn integrate(&self, values: &[S]) -> S {
        debug_assert_eq!(values.len(), self.n_points);
        let mut acc = S::zero();
        for v in values {
            acc += *v;
        }
        acc -= (values[0] + values[self.n_points - 1]) / S::lit(2.0);
        acc * self.spacing
    }
}

/// Uniform spatial grid. `breaks` lists node indices where integrands may
/// have a derivative discontinuity (barrier edges and midpoint); the
/// quadrature treats each run between breaks as a separate panel.
#[derive(Debug, Clone, PartialEq)]
pub struct XGrid<S> {
    x_min: S,
    spacing: S,
    n_points: usize,
    breaks: Vec<usize>,
}

impl<S: Scalar> XGrid<S> {
    pub fn new(x_min: S, x_max: S, n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidGrid("x grid needs at least 3 points".into()));
        }
        if !(x_max > x_min) || !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "x grid requires x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            x_min,
            spacing: (x_max - x_min) / S::from_index(n_points - 1),
            n_points,
            breaks: Vec::new(),
        })
    }

    /// Grid of spacing `dx` covering `[lo, hi]` with `anchor` landing on a node.
    pub fn anchored(lo: S, hi: S, dx: S, anchor: S) -> Result<Self> {
        if !(dx > S::zero()) || !(hi > lo) {
            return Err(Error::InvalidGrid("anchored grid needs dx > 0 and hi > lo".into()));
        }
        let below = ((anchor - lo) / dx).ceil().max(S::zero());
        let above = ((hi - anchor) / dx).ceil().max(S::zero());
        let n_below = below.to_usize().unwrap_or(0);
        let n_above = above.to_usize().unwrap_or(0);
        let n = n_below + n_above + 1;
        if n < 3 {
            return Err(Error::InvalidGrid("anchored grid too small".into()));
        }
        Ok(Self {
            x_min: anchor - below * dx,
            spacing: dx,
            n_points: n,
            breaks: Vec::new(),
        })
    }

    /// Marks the nodes sitting on `positions` as panel breaks. Positions that
    /// do not coincide with a node (within 1e-6 of the spacing) are ignored.
    pub fn with_breaks_at(mut self, positions: &[S]) -> Self {
        let tol = S::lit(1e-6);
        let mut breaks = Vec::new();
        for &p in positions {
            let f = (p - self.x_min) / self.spacing;
            let r = f.round();
            if (f - r).abs() < tol && r > S::zero() {
                if let Some(i) = r.to_usize() {
                    if i + 1 < self.n_points {
                        breaks.push(i);
                    }
                }
            }
        }
        breaks.sort_unstable();
        breaks.dedup();
        self.breaks = breaks;
        self
    }

    pub fn x_min(&self) -> S {
        self.x_min
    }

    pub fn x_max(&self) -> S {
        self.node(self.n_points - 1)
    }

    pub fn spacing(&self) -> S {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn breaks(&self) -> &[usize] {
        &self.breaks
    }

    #[inline]
    pub fn node(&self, i: usize) -> S {
        self.x_min + S::from_index(i) * self.spacing
    }

    pub fn nodes(&self) -> Vec<S> {
        (0..self.n_points).map(|i| self.node(i)).collect()
    }

    /// Nearest node index to `x`, clamped to the grid.
    pub fn nearest(&self, x: S) -> usize {
        let f = ((x - self.x_min) / self.spacing).round();
        if f <= S::zero() {
            0
        } else {
            f.to_usize().unwrap_or(0).min(self.n_points - 1)
        }
    }

    /// Quadrature weights: composite trapezoid on each panel between breaks,
    /// with Gregory end corrections at every panel end so that a kink sitting
    /// on a break does not degrade the rule to second order.
    pub fn weights(&self) -> Vec<S> {
        let mut w = vec![S::zero(); self.n_points];
        let mut start = 0;
        let mut ends: Vec<usize> = self.breaks.clone();
        ends.push(self.n_points - 1);
        for &end in &ends {
            if end > start {
                add_panel_weights(&mut w[start..=end], self.spacing);
            }
            start = end;
        }
        w
    }

    /// Integral of sampled real values with [`XGrid::weights`].
    pub fn integrate(&self, values: &[S]) -> S {
        self.weights()
            .iter()
            .zip(values)
            .fold(S::zero(), |acc, (w, v)| acc + *w * *v)
    }
}

/// Gregory coefficients multiplying `∇ᵐf_n ± Δᵐf_0`, m = 1..=5.
const GREGORY: [f64; 5] = [
    1.0 / 12.0,
    1.0 / 24.0,
    19.0 / 720.0,
    3.0 / 160.0,
    863.0 / 60480.0,
];

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Adds Gregory-corrected trapezoid weights for one panel (all nodes of the
/// slice, both ends included) into `w`.
fn add_panel_weights<S: Scalar>(w: &mut [S], h: S) {
    let n = w.len() - 1;
    let mut local = vec![h; n + 1];
    local[0] = h / S::lit(2.0);
    local[n] = h / S::lit(2.0);
    // Correction order limited so that forward and backward stencils fit.
    let order = (n / 2).min(GREGORY.len());
    for m in 1..=order {
        let c = GREGORY[m - 1];
        let end_sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        for j in 0..=m {
            // ∇ᵐ f_n = Σ (-1)^j C(m,j) f_{n-j}
            let back = if j % 2 == 0 { 1.0 } else { -1.0 } * binomial(m, j);
            // Δᵐ f_0 = Σ (-1)^{m-j} C(m,j) f_j
            let fwd = if (m - j) % 2 == 0 { 1.0 } else { -1.0 } * binomial(m, j);
            local[n - j] -= h * S::lit(c * back);
            local[j] -= h * S::lit(c * end_sign * fwd);
        }
    }
    for (dst, src) in w.iter_mut().zip(local) {
        *dst += src;
    }
}

/// Which part of the scattering state a field describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Full,
    Transmission,
    Reflection,
}

impl Channel {
    pub fn tag(self) -> &'static str {
        match self {
            Channel::Full => "full",
            Channel::Transmission => "tr",
            Channel::Reflection => "ref",
        }
    }
}

/// Complex amplitude (nm^{-1/2}) sampled on an [`XGrid`] at one time.
#[derive(Debug, Clone)]
pub struct WaveField<S> {
    pub grid: XGrid<S>,
    pub values: Vec<Cx<S>>,
    /// fs
    pub time: S,
    pub channel: Channel,
}

impl<S: Scalar> WaveField<S> {
    pub fn new(grid: XGrid<S>, values: Vec<Cx<S>>, time: S, channel: Channel) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self {
            grid,
            values,
            time,
            channel,
        }
    }

    pub fn density(&self) -> Vec<S> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    fn check_finite(&self) -> Result<()> {
        match self
            .values
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            Some(i) => Err(Error::NonFinite(i)),
            None => Ok(()),
        }
    }
}

/// `∫|ψ|² dx` over the grid.
pub fn norm<S: Scalar>(field: &WaveField<S>) -> Result<S> {
    field.check_finite()?;
    Ok(field.grid.integrate(&field.density()))
}

/// Probability current `(ħ/m) Im(ψ* ∂ψ/∂x)` at an interior node, using a
/// second-order central difference. nm/fs.
pub fn flux<S: Scalar>(field: &WaveField<S>, index: usize, particle: &Particle<S>) -> Result<S> {
    let n = field.values.len();
    if index == 0 || index + 1 >= n {
        return Err(Error::BoundaryNode { index, len: n });
    }
    let v = &field.values;
    for i in [index - 1, index, index + 1] {
        if !v[i].re.is_finite() || !v[i].im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    let deriv = (v[index + 1] - v[index - 1]) / (S::lit(2.0) * field.grid.spacing());
    Ok(particle.hbar / particle.mass * (v[index].conj() * deriv).im)
}

/// `∫x|ψ|² dx / ∫|ψ|² dx`.
pub fn mean_position<S: Scalar>(field: &WaveField<S>) -> Result<S> {
    field.check_finite()?;
    let w = field.grid.weights();
    let mut num = S::zero();
    let mut den = S::zero();
    for (i, v) in field.values.iter().enumerate() {
        let p = w[i] * v.norm_sqr();
        den += p;
        num += p * field.grid.node(i);
    }
    if !(den > S::zero()) {
        return Err(Error::ZeroNorm);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn gaussian(grid: &XGrid<f64>, center: f64, l0: f64, k: f64) -> Vec<Complex<f64>> {
        let amp = (2.0 * std::f64::consts::PI * l0 * l0).powf(-0.25);
        grid.nodes()
            .iter()
            .map(|&x| {
                let g = amp * (-(x - center).powi(2) / (4.0 * l0 * l0)).exp();
                Complex::new(g * (k * x).cos(), g * (k * x).sin())
            })
            .collect()
    }

    #[test]
    fn electron_mass_matches_rest_energy() {
        // 510998.95 eV rest energy; the rounded 511 keV agrees to 2e-6.
        let c = 299.792458_f64;
        assert!((510_998.95 / (c * c) - ELECTRON_MASS).abs() < 1e-6);
        assert!((511_000.0 / (c * c) / ELECTRON_MASS - 1.0).abs() < 3e-6);
    }

    #[test]
    fn paper_wavenumber_for_quarter_ev() {
        let p = Particle::with_relative_mass(0.067_f64);
        let k = p.wavenumber(0.25);
        assert!((k - 0.6631).abs() < 1e-3, "k = {k}");
        assert!((p.energy(k) - 0.25).abs() < 1e-14);
    }

    #[test]
    fn kgrid_rejects_bad_input() {
        assert!(KGrid::new(0.0_f64, 1.0, 32).is_err());
        assert!(KGrid::new(0.5_f64, 0.4, 32).is_err());
        assert!(KGrid::new(0.1_f64, 1.0, 8).is_err());
        let g = KGrid::new(0.1_f64, 1.1, 101).unwrap();
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert!((g.k_max() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn gregory_panel_exact_for_low_degree_polynomials() {
        let grid = XGrid::new(0.0_f64, 3.0, 31).unwrap().with_breaks_at(&[1.0, 2.0]);
        assert_eq!(grid.breaks(), &[10, 20]);
        for deg in 0..=5 {
            let vals: Vec<f64> = grid.nodes().iter().map(|x| x.powi(deg)).collect();
            let exact = 3.0_f64.powi(deg + 1) / (deg + 1) as f64;
            let got = grid.integrate(&vals);
            assert!((got - exact).abs() < 1e-11 * exact.max(1.0), "deg {deg}: {got} vs {exact}");
        }
    }

    #[test]
    fn kinked_integrand_converges_fast_with_breaks() {
        // |x - 1| on [0, 2.5]: kink at x = 1.
        let f = |x: f64| (x - 1.0).abs() * (0.3 * x).cos();
        let reference = {
            let g = XGrid::new(0.0_f64, 2.5, 25001).unwrap().with_breaks_at(&[1.0]);
            g.integrate(&g.nodes().iter().map(|&x| f(x)).collect::<Vec<_>>())
        };
        let g = XGrid::new(0.0_f64, 2.5, 101).unwrap().with_breaks_at(&[1.0]);
        let got = g.integrate(&g.nodes().iter().map(|&x| f(x)).collect::<Vec<_>>());
        assert!((got - reference).abs() < 1e-10, "{got} vs {reference}");
    }

    #[test]
    fn norm_of_zero_field_is_zero() {
        let grid = XGrid::new(-10.0_f64, 10.0, 201).unwrap();
        let field = WaveField::new(grid, vec![Complex::new(0.0, 0.0); 201], 0.0, Channel::Full);
        assert_eq!(norm(&field).unwrap(), 0.0);
        assert!(matches!(mean_position(&field), Err(Error::ZeroNorm)));
    }

    #[test]
    fn normalized_gaussian_has_unit_norm_and_zero_mean() {
        let grid = XGrid::new(-150.0_f64, 150.0, 6001).unwrap();
        let values = gaussian(&grid, 0.0, 7.5, 0.66);
        let field = WaveField::new(grid, values, 0.0, Channel::Full);
        assert!((norm(&field).unwrap() - 1.0).abs() < 1e-9);
        assert!(mean_position(&field).unwrap().abs() < 1e-6);
    }

    #[test]
    fn translation_shifts_mean_position() {
        let grid = XGrid::new(-150.0_f64, 150.0, 6001).unwrap();
        let a = WaveField::new(grid.clone(), gaussian(&grid, 3.0, 7.5, 0.4), 0.0, Channel::Full);
        let b = WaveField::new(grid.clone(), gaussian(&grid, 13.0, 7.5, 0.4), 0.0, Channel::Full);
        let shift = mean_position(&b).unwrap() - mean_position(&a).unwrap();
        assert!((shift - 10.0).abs() < 1e-9);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let grid = XGrid::new(0.0_f64, 1.0, 11).unwrap();
        let mut values = vec![Complex::new(1.0, 0.0); 11];
        values[4] = Complex::new(f64::NAN, 0.0);
        let field = WaveField::new(grid, values, 0.0, Channel::Full);
        assert!(matches!(norm(&field), Err(Error::NonFinite(4))));
    }

    #[test]
    fn plane_wave_flux() {
        let p = Particle::with_relative_mass(0.067_f64);
        let k = 0.5;
        let grid = XGrid::new(0.0_f64, 10.0, 100_001).unwrap();
        let values = grid.nodes().iter().map(|&x| Complex::new((k * x).cos(), (k * x).sin())).collect();
        let field = WaveField::new(grid, values, 0.0, Channel::Full);
        // ħk/m with m = 0.067 mₑ
        let expect = HBAR_EV_FS * k / (0.067 * ELECTRON_MASS);
        assert!((expect - 0.8639).abs() < 1e-4);
        let got = flux(&field, 500, &p).unwrap();
        assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
        assert!(matches!(flux(&field, 0, &p), Err(Error::BoundaryNode { .. })));
        assert!(flux(&field, 100_000, &p).is_err());
    }

    #[test]
    fn real_field_carries_no_flux() {
        let p = Particle::with_relative_mass(0.067_f64);
        let grid = XGrid::new(0.0_f64, 10.0, 101).unwrap();
        let values = grid.nodes().iter().map(|&x| Complex::new((x * 0.7).sin(), 0.0)).collect();
        let field = WaveField::new(grid, values, 0.0, Channel::Full);
        for i in 1..100 {
            assert_eq!(flux(&field, i, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn anchored_grid_hits_anchor() {
        let g = XGrid::anchored(-37.3_f64, 612.0, 0.05, 500.0).unwrap();
        let i = g.nearest(500.0);
        assert!((g.node(i) - 500.0).abs() < 1e-9);
        assert!(g.x_min() <= -37.3 && g.x_max() >= 612.0);
    }
}
