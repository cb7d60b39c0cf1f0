//! Exact propagation of `(ψ, ψ')` across constant-potential slabs.

use crate::model::Particle;
use crate::potentials::PotentialSpec;
use crate::scalar::{Cx, Scalar};

/// Above this `κ|h|` evanescent steps are carried in scaled form.
const SCALE_THRESHOLD: f64 = 700.0;

/// Real 2×2 map taking `(ψ, ψ')(x)` to `(ψ, ψ')(x + h)`, stored as
/// `matrix · e^{log_scale}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Step<S> {
    pub m: [[S; 2]; 2],
    pub log_scale: S,
}

impl<S: Scalar> Step<S> {
    /// Step of length `h` (either sign) through potential `v` at energy `energy`.
    pub fn through_layer(v: S, energy: S, h: S, particle: &Particle<S>) -> Self {
        let q2 = particle.k2_per_ev() * (v - energy);
        if q2 < S::zero() {
            let kappa = (-q2).sqrt();
            let x = kappa * h;
            let (s, c) = x.sin_cos();
            Self {
                m: [[c, h * x.sinc()], [-kappa * s, c]],
                log_scale: S::zero(),
            }
        } else {
            let kappa = q2.sqrt();
            let x = kappa * h;
            if x.abs() <= S::lit(SCALE_THRESHOLD) {
                Self {
                    m: [[x.cosh(), h * x.sinhc()], [kappa * x.sinh(), x.cosh()]],
                    log_scale: S::zero(),
                }
            } else {
                let e = x.abs();
                let u = (-S::lit(2.0) * e).exp();
                let c = (S::one() + u) / S::lit(2.0);
                let s = x.signum() * (S::one() - u) / S::lit(2.0);
                Self {
                    m: [[c, s / kappa], [kappa * s, c]],
                    log_scale: e,
                }
            }
        }
    }

    /// Crossing a δ-potential of strength `w` (eV·nm) from right to left:
    /// `ψ'(a−) = ψ'(a+) − (2mW/ħ²) ψ(a)`.
    pub fn delta_leftward(w: S, particle: &Particle<S>) -> Self {
        let g = particle.k2_per_ev() * w;
        Self {
            m: [[S::one(), S::zero()], [-g, S::one()]],
            log_scale: S::zero(),
        }
    }

    /// Applies the unscaled matrix.
    #[inline]
    pub fn apply(&self, psi: Cx<S>, dpsi: Cx<S>) -> (Cx<S>, Cx<S>) {
        (
            psi * self.m[0][0] + dpsi * self.m[0][1],
            psi * self.m[1][0] + dpsi * self.m[1][1],
        )
    }
}

/// Slab layout of a potential as ascending edges with one height per slab.
#[derive(Debug, Clone)]
pub(crate) struct Slabs<S> {
    edges: Vec<S>,
    heights: Vec<S>,
}

impl<S: Scalar> Slabs<S> {
    pub fn new(pot: &PotentialSpec<S>) -> Self {
        let g = pot.geometry();
        let mut edges = vec![g.a];
        let mut heights = Vec::new();
        let mut x = g.a;
        for l in pot.layers() {
            x += l.width;
            edges.push(x);
            heights.push(l.potential);
        }
        if let Some(last) = edges.last_mut() {
            *last = g.b;
        }
        Self { edges, heights }
    }

    fn height_at(&self, x: S) -> S {
        if self.heights.is_empty() || x < self.edges[0] || x > self.edges[self.edges.len() - 1] {
            return S::zero();
        }
        let i = self.edges.partition_point(|&e| e <= x).saturating_sub(1);
        self.heights[i.min(self.heights.len() - 1)]
    }

    /// Largest slab edge strictly below `x`.
    fn edge_below(&self, x: S) -> Option<S> {
        let i = self.edges.partition_point(|&e| e < x);
        i.checked_sub(1).map(|j| self.edges[j])
    }
}

/// `(ψ, ψ')` at a target point, to be multiplied by `e^{log_scale}`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Marched<S> {
    pub psi: Cx<S>,
    pub dpsi: Cx<S>,
    pub log_scale: S,
}

/// Carries `(ψ, ψ')` from `x0` leftwards through each of `targets`
/// (descending, all `≤ x0`), stepping exactly across every slab edge.
/// The state is renormalised whenever it grows large.
pub(crate) fn march_left<S: Scalar>(
    slabs: &Slabs<S>,
    energy: S,
    particle: &Particle<S>,
    x0: S,
    start: (Cx<S>, Cx<S>),
    targets: &[S],
) -> Vec<Marched<S>> {
    let big = S::lit(1e150);
    let (mut psi, mut dpsi) = start;
    let mut log_scale = S::zero();
    let mut pos = x0;
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        debug_assert!(t <= pos);
        while pos > t {
            let next = match slabs.edge_below(pos) {
                Some(e) if e > t => e,
                _ => t,
            };
            let v = slabs.height_at((pos + next) / S::lit(2.0));
            let step = Step::through_layer(v, energy, next - pos, particle);
            let (p, d) = step.apply(psi, dpsi);
            psi = p;
            dpsi = d;
            log_scale += step.log_scale;
            pos = next;
            let size = psi.norm().max(dpsi.norm());
            if size > big {
                psi = psi / size;
                dpsi = dpsi / size;
                log_scale += size.ln();
            }
        }
        out.push(Marched {
            psi,
            dpsi,
            log_scale,
        });
    }
    out
}
