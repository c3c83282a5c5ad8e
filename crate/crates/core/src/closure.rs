//! Closure models for the front speed `m`.
//!
//! The kinematical laws alone do not determine `m`. Two closures are
//! provided:
//!
//! * `ConstantM`: `m ≡ m0`, which is linear ray theory.
//! * `Wnlrt`: the weakly nonlinear ray theory energy relation
//!   `g (m − 1)² e^{2(m − 1)} = const` along each ray. Rays are fixed cells
//!   in ray coordinates, so the constant is frozen per cell at start-up and
//!   `m` is recovered from the current metric. In 3-D the metric is replaced
//!   by the ray-tube area `g₁ g₂ |u × v|`.

use serde::{Deserialize, Serialize};

use crate::error::{KclError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosureKind {
    ConstantM,
    Wnlrt,
}

impl std::str::FromStr for ClosureKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant_m" => Ok(Self::ConstantM),
            "wnlrt" => Ok(Self::Wnlrt),
            other => Err(format!("unknown closure `{other}` (expected constant_m or wnlrt)")),
        }
    }
}

/// Closure state: the fixed speed, or the per-cell frozen invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Closure {
    ConstantM { m0: f64 },
    Wnlrt { invariant: Vec<f64> },
}

/// `G(m) = (m − 1)² e^{2(m − 1)}`, strictly increasing for `m > 1`.
pub fn wnlrt_g(m: f64) -> f64 {
    let z = m - 1.0;
    z * z * (2.0 * z).exp()
}

/// The quantity `measure · G(m)` conserved along a ray.
pub fn wnlrt_invariant(measure: f64, m: f64) -> f64 {
    measure * wnlrt_g(m)
}

const BRACKET_LO: f64 = 1e-14;
const BRACKET_HI: f64 = 20.0;
const MAX_ITER: usize = 100;

/// Unique `m > 1` with `measure · G(m) = invariant`.
///
/// Works on `z = m − 1` with `φ(z) = z e^z − sqrt(invariant / measure)`,
/// whose root is the same. Newton steps that leave the bracket fall back
/// to bisection.
pub fn recover_m(measure: f64, invariant: f64) -> Result<f64> {
    let fail = || KclError::ClosureInversion { g: measure, invariant };
    if !(measure > 0.0 && invariant > 0.0) || !measure.is_finite() || !invariant.is_finite() {
        return Err(fail());
    }
    let s = (invariant / measure).sqrt();
    let phi = |z: f64| z * z.exp() - s;
    let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
    if phi(lo) > 0.0 {
        // root below the bracket floor; z e^z ≈ z there
        return Ok(1.0 + s);
    }
    if phi(hi) < 0.0 {
        return Err(fail());
    }
    let mut z = s.clamp(lo, hi);
    for _ in 0..MAX_ITER {
        let f = phi(z);
        if f == 0.0 {
            return Ok(1.0 + z);
        }
        if f < 0.0 {
            lo = z;
        } else {
            hi = z;
        }
        let newton = z - f / ((1.0 + z) * z.exp());
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 1e-15 * z {
            return Ok(1.0 + next);
        }
        z = next;
    }
    Err(fail())
}

impl Closure {
    /// Builds the closure from initial cellwise `m` and geometric measure
    /// (`g` in 2-D, ray-tube area in 3-D).
    pub fn init(kind: ClosureKind, measure: &[f64], m: &[f64]) -> Result<Self> {
        if measure.len() != m.len() || m.is_empty() {
            return Err(KclError::InvalidInput("closure needs matching, nonempty measure and m".into()));
        }
        match kind {
            ClosureKind::ConstantM => {
                let m0 = m[0];
                if !(m0 > 0.0) {
                    return Err(KclError::InvalidInput(format!("constant_m needs m0 > 0, got {m0}")));
                }
                if m.iter().any(|&v| v != m0) {
                    return Err(KclError::InvalidInput("constant_m needs uniform initial m".into()));
                }
                Ok(Self::ConstantM { m0 })
            }
            ClosureKind::Wnlrt => {
                let mut invariant = Vec::with_capacity(m.len());
                for (cell, (&a, &mi)) in measure.iter().zip(m).enumerate() {
                    if !(mi > 1.0) {
                        return Err(KclError::SubsonicFront { cell, m: mi });
                    }
                    if !(a > 0.0) {
                        return Err(KclError::MetricCollapse { cell });
                    }
                    invariant.push(wnlrt_invariant(a, mi));
                }
                Ok(Self::Wnlrt { invariant })
            }
        }
    }

    pub fn kind(&self) -> ClosureKind {
        match self {
            Self::ConstantM { .. } => ClosureKind::ConstantM,
            Self::Wnlrt { .. } => ClosureKind::Wnlrt,
        }
    }

    /// Speed in `cell` for the given geometric measure.
    pub fn m_at(&self, cell: usize, measure: f64) -> Result<f64> {
        match self {
            Self::ConstantM { m0 } => Ok(*m0),
            Self::Wnlrt { invariant } => recover_m(measure, invariant[cell]),
        }
    }

    /// `dm/d(measure)` in `cell` by central differences of the closure.
    pub fn dm_dmeasure(&self, cell: usize, measure: f64) -> Result<f64> {
        match self {
            Self::ConstantM { .. } => Ok(0.0),
            Self::Wnlrt { .. } => {
                let h = 1e-6 * measure;
                Ok((self.m_at(cell, measure + h)? - self.m_at(cell, measure - h)?) / (2.0 * h))
            }
        }
    }

    /// Cellwise `m` for the current measures.
    pub fn update_m(&self, measure: &[f64]) -> Result<Vec<f64>> {
        measure.iter().enumerate().map(|(i, &a)| self.m_at(i, a)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_closure() {
        let c = Closure::init(ClosureKind::ConstantM, &[1.0, 2.0], &[1.0, 1.0]).unwrap();
        assert_eq!(c, Closure::ConstantM { m0: 1.0 });
        assert_eq!(c.update_m(&[5.0, 0.1]).unwrap(), vec![1.0, 1.0]);
        assert!(Closure::init(ClosureKind::ConstantM, &[1.0, 1.0], &[1.0, 1.1]).is_err());
        assert!(Closure::init(ClosureKind::ConstantM, &[1.0], &[0.0]).is_err());
    }

    #[test]
    fn wnlrt_invariant_value() {
        let c = Closure::init(ClosureKind::Wnlrt, &[1.0], &[1.2]).unwrap();
        let Closure::Wnlrt { invariant } = &c else { panic!() };
        // 0.04 e^0.4
        assert!((invariant[0] - 0.059_672_987_905_650_81).abs() < 1e-15);
    }

    #[test]
    fn wnlrt_rejects_subsonic() {
        let err = Closure::init(ClosureKind::Wnlrt, &[1.0, 1.0], &[1.2, 1.0]).unwrap_err();
        assert_eq!(err, KclError::SubsonicFront { cell: 1, m: 1.0 });
        assert!(err.to_string().starts_with("subsonic front: WNLRT closure undefined"));
    }

    #[test]
    fn recover_round_trip() {
        let f = wnlrt_invariant(1.0, 1.2);
        assert!((recover_m(1.0, f).unwrap() - 1.2).abs() < 1e-10);
        let g: Vec<f64> = (0..20).map(|i| 0.3 + 0.2 * i as f64).collect();
        let m: Vec<f64> = (0..20).map(|i| 1.01 + 0.07 * i as f64).collect();
        let c = Closure::init(ClosureKind::Wnlrt, &g, &m).unwrap();
        for (a, b) in c.update_m(&g).unwrap().iter().zip(&m) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn recovered_m_decreases_with_measure() {
        let f = wnlrt_invariant(1.0, 1.2);
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let m = recover_m(0.25 * k as f64, f).unwrap();
            assert!(m < prev && m > 1.0);
            prev = m;
        }
        // doubled metric at fixed invariant
        let m2 = recover_m(2.0, f).unwrap();
        assert!(m2 < 1.2);
        assert!((2.0 * wnlrt_g(m2) - f).abs() < 1e-12 * f);
    }

    #[test]
    fn small_invariant_tends_to_one() {
        let m = recover_m(1.0, 1e-20).unwrap();
        assert!(m > 1.0 && m - 1.0 < 1e-9);
    }

    #[test]
    fn inversion_errors() {
        assert!(recover_m(0.0, 1.0).is_err());
        assert!(recover_m(1.0, 0.0).is_err());
        assert!(recover_m(1.0, 1e40).is_err());
    }

    #[test]
    fn closure_kind_parse() {
        assert_eq!("wnlrt".parse::<ClosureKind>().unwrap(), ClosureKind::Wnlrt);
        assert!("srt".parse::<ClosureKind>().is_err());
    }
}
