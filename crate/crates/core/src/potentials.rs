//! Barrier descriptions: geometry and mirror symmetry.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One constant-potential slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer<S> {
    /// eV
    pub potential: S,
    /// nm
    pub width: S,
}

impl<S> Layer<S> {
    pub fn new(potential: S, width: S) -> Self {
        Self { potential, width }
    }
}

/// Potential confined to `[a, b]`, zero outside.
///
/// Wells are rectangular barriers with a negative height.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec<S> {
    Rectangular { height: S, a: S, b: S },
    /// `V(x) = W δ(x − a)`; `strength` in eV·nm.
    Delta { strength: S, a: S },
    /// Layers laid out left to right starting at `a`.
    PiecewiseConstant { a: S, layers: Vec<Layer<S>> },
}

/// Geometric scalars of a potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry<S> {
    pub a: S,
    pub b: S,
    /// `b − a`
    pub d: S,
    /// `a + b`
    pub s: S,
    pub x_mid: S,
}

impl<S: Scalar> PotentialSpec<S> {
    pub fn rectangular(height: S, a: S, b: S) -> Result<Self> {
        let p = Self::Rectangular { height, a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn delta(strength: S, a: S) -> Result<Self> {
        let p = Self::Delta { strength, a };
        p.validate()?;
        Ok(p)
    }

    pub fn piecewise(a: S, layers: Vec<Layer<S>>) -> Result<Self> {
        let p = Self::PiecewiseConstant { a, layers };
        p.validate()?;
        Ok(p)
    }

    /// Free propagation over `[a, b]`.
    pub fn free(a: S, b: S) -> Result<Self> {
        Self::rectangular(S::zero(), a, b)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPotential(msg));
        match self {
            Self::Rectangular { height, a, b } => {
                if !(*a > S::zero()) {
                    return bad(format!("left edge a must be > 0, got {a}"));
                }
                if !(*b > *a) {
                    return bad(format!("need b > a, got a = {a}, b = {b}"));
                }
                if !height.is_finite() || !b.is_finite() {
                    return bad("non-finite barrier parameters".into());
                }
            }
            Self::Delta { strength, a } => {
                if !(*a > S::zero()) {
                    return bad(format!("position a must be > 0, got {a}"));
                }
                if !strength.is_finite() {
                    return bad("non-finite delta strength".into());
                }
            }
            Self::PiecewiseConstant { a, layers } => {
                if !(*a > S::zero()) {
                    return bad(format!("left edge a must be > 0, got {a}"));
                }
                if layers.is_empty() {
                    return bad("piecewise potential needs at least one layer".into());
                }
                for (i, l) in layers.iter().enumerate() {
                    if !(l.width > S::zero()) || !l.width.is_finite() {
                        return bad(format!("layer {i} width must be > 0"));
                    }
                    if !l.potential.is_finite() {
                        return bad(format!("layer {i} has non-finite height"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry<S> {
        let (a, b) = match self {
            Self::Rectangular { a, b, .. } => (*a, *b),
            Self::Delta { a, .. } => (*a, *a),
            Self::PiecewiseConstant { a, layers } => {
                (*a, layers.iter().fold(*a, |acc, l| acc + l.width))
            }
        };
        Geometry {
            a,
            b,
            d: b - a,
            s: a + b,
            x_mid: (a + b) / S::lit(2.0),
        }
    }

    /// Slabs left to right; empty for the δ-potential.
    pub fn layers(&self) -> Vec<Layer<S>> {
        match self {
            Self::Rectangular { height, a, b } => vec![Layer::new(*height, *b - *a)],
            Self::Delta { .. } => Vec::new(),
            Self::PiecewiseConstant { layers, .. } => layers.clone(),
        }
    }

    /// Exact check of `V(x_mid + x') = V(x_mid − x')` on the layer structure.
    pub fn is_symmetric(&self) -> bool {
        match self {
            Self::Rectangular { .. } | Self::Delta { .. } => true,
            Self::PiecewiseConstant { layers, .. } => {
                layers.iter().eq(layers.iter().rev())
            }
        }
    }

    /// Mirror image about the midpoint (same `[a, b]`).
    pub fn reversed(&self) -> Self {
        match self {
            Self::PiecewiseConstant { a, layers } => Self::PiecewiseConstant {
                a: *a,
                layers: layers.iter().rev().copied().collect(),
            },
            other => other.clone(),
        }
    }

    /// Copy translated by `shift` (nm).
    pub fn shifted(&self, shift: S) -> Self {
        match self {
            Self::Rectangular { height, a, b } => Self::Rectangular {
                height: *height,
                a: *a + shift,
                b: *b + shift,
            },
            Self::Delta { strength, a } => Self::Delta {
                strength: *strength,
                a: *a + shift,
            },
            Self::PiecewiseConstant { a, layers } => Self::PiecewiseConstant {
                a: *a + shift,
                layers: layers.clone(),
            },
        }
    }

    /// `V(x)` for the slab potentials (the δ-potential reports 0 everywhere).
    pub fn value_at(&self, x: S) -> S {
        let g = self.geometry();
        if x < g.a || x > g.b {
            return S::zero();
        }
        let mut left = g.a;
        for l in self.layers() {
            if x <= left + l.width {
                return l.potential;
            }
            left += l.width;
        }
        S::zero()
    }

    /// `β = sign(V0)` for a rectangular barrier (+1) or well (−1).
    pub fn barrier_sign(&self) -> S {
        match self {
            Self::Rectangular { height, .. } if *height < S::zero() => -S::one(),
            _ => S::one(),
        }
    }

    /// Largest `|V|` over the slabs, used for grid sizing.
    pub fn max_abs_height(&self) -> S {
        self.layers()
            .iter()
            .fold(S::zero(), |acc, l| acc.max(l.potential.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rectangular_geometry() {
        let p = PotentialSpec::rectangular(0.3_f64, 500.0, 505.0).unwrap();
        let g = p.geometry();
        assert_eq!((g.a, g.b, g.d, g.s, g.x_mid), (500.0, 505.0, 5.0, 1005.0, 502.5));
        assert!(p.is_symmetric());
        assert_eq!(p.barrier_sign(), 1.0);
    }

    #[test]
    fn delta_geometry_has_point_support() {
        let p = PotentialSpec::delta(1.5_f64, 500.0).unwrap();
        let g = p.geometry();
        assert_eq!(g.d, 0.0);
        assert_eq!(g.x_mid, 500.0);
        assert!(p.is_symmetric());
        assert!(p.layers().is_empty());
    }

    #[test]
    fn piecewise_geometry_sums_widths() {
        let p = PotentialSpec::piecewise(10.0_f64, vec![Layer::new(0.1, 2.0), Layer::new(0.2, 3.0)])
            .unwrap();
        let g = p.geometry();
        assert_eq!(g.b, 15.0);
        assert_eq!(g.d, 5.0);
        assert!(!p.is_symmetric());
        assert_eq!(p.value_at(11.0), 0.1);
        assert_eq!(p.value_at(13.0), 0.2);
        assert_eq!(p.value_at(16.0), 0.0);
    }

    #[test]
    fn well_sign() {
        let p = PotentialSpec::rectangular(-0.3_f64, 500.0, 505.0).unwrap();
        assert_eq!(p.barrier_sign(), -1.0);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(PotentialSpec::rectangular(0.3_f64, 0.0, 5.0).is_err());
        assert!(PotentialSpec::rectangular(0.3_f64, 5.0, 5.0).is_err());
        assert!(PotentialSpec::delta(1.0_f64, -1.0).is_err());
        assert!(PotentialSpec::<f64>::piecewise(1.0, vec![]).is_err());
        assert!(PotentialSpec::piecewise(1.0_f64, vec![Layer::new(0.1, 0.0)]).is_err());
    }

    proptest! {
        #[test]
        fn symmetry_survives_mirroring(
            heights in proptest::collection::vec(-0.5f64..0.5, 1..6),
            widths in proptest::collection::vec(0.5f64..5.0, 6),
            palindrome in any::<bool>(),
        ) {
            let mut layers: Vec<Layer<f64>> = heights
                .iter()
                .zip(&widths)
                .map(|(&v, &w)| Layer::new(v, w))
                .collect();
            if palindrome {
                let mirror: Vec<_> = layers.iter().rev().copied().collect();
                layers.extend(mirror);
            }
            let p = PotentialSpec::piecewise(20.0, layers).unwrap();
            prop_assert_eq!(p.reversed().is_symmetric(), p.is_symmetric());
            if palindrome {
                prop_assert!(p.is_symmetric());
            }
            prop_assert_eq!(p.geometry(), p.geometry());
        }
    }
}
