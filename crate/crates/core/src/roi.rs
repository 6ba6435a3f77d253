//! Regions of interest over the sphere.
//!
//! `G` is the Freespace (overlay) EIRP and `G_body` the blocked one; `G_max`
//! and `G_max,body` are their maxima over valid points.
//!
//! | kind | membership |
//! |------|------------|
//! | R1(Δ1)     | `G >= G_max - Δ1` |
//! | R2(Δ1, Δ2) | R1 or `G_body >= G_max,body - Δ2` |
//! | R3(Δ1, Δ3) | R1 or `G_body >= G_max - Δ3` |
//! | R4(Δ1, Δ4) | R1 or `G_body >= Δ4` |
//! | R5(Δ5)     | `G >= Δ5` or `G_body >= Δ5` |
//!
//! Every inequality is non-strict. Masks are raw boolean fields; a region
//! may be any union of irregular pieces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, fraction_of_sphere, GridMask, Pattern, WeightField};

/// Formula used for relative improvement and relative coverage lost.
pub const RELATIVE_CONVENTION: &str = "rel = 100 * abs / coverage(base)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoiKind {
    R1,
    R2,
    R3,
    R4,
    R5,
}

/// Generating parameters of a mask. Deltas are in dB, absolute thresholds
/// (Δ4, Δ5) in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RoiDefinition {
    R1 { delta1: f64 },
    R2 { delta1: f64, delta2: f64 },
    R3 { delta1: f64, delta3: f64 },
    R4 { delta1: f64, delta4: f64 },
    R5 { delta5: f64 },
    /// R1 with Δ1 = G_max - Δ5: the Freespace-only baseline for R5.
    MatchedR1 { delta5: f64 },
}

impl RoiDefinition {
    pub fn kind(&self) -> RoiKind {
        match self {
            RoiDefinition::R1 { .. } | RoiDefinition::MatchedR1 { .. } => RoiKind::R1,
            RoiDefinition::R2 { .. } => RoiKind::R2,
            RoiDefinition::R3 { .. } => RoiKind::R3,
            RoiDefinition::R4 { .. } => RoiKind::R4,
            RoiDefinition::R5 { .. } => RoiKind::R5,
        }
    }

    pub fn evaluate(&self, free: &Pattern, blocked: &Pattern) -> Result<RoiMask> {
        match *self {
            RoiDefinition::R1 { delta1 } => roi_r1(free, delta1),
            RoiDefinition::R2 { delta1, delta2 } => roi_r2(free, blocked, delta1, delta2),
            RoiDefinition::R3 { delta1, delta3 } => roi_r3(free, blocked, delta1, delta3),
            RoiDefinition::R4 { delta1, delta4 } => roi_r4(free, blocked, delta1, delta4),
            RoiDefinition::R5 { delta5 } => roi_r5(free, blocked, delta5),
            RoiDefinition::MatchedR1 { delta5 } => matched_r1_for_r5(free, delta5),
        }
    }

    /// Short label such as `R4(Δ1=5, Δ4=-35)`.
    pub fn label(&self) -> String {
        match *self {
            RoiDefinition::R1 { delta1 } => format!("R1(Δ1={delta1})"),
            RoiDefinition::R2 { delta1, delta2 } => format!("R2(Δ1={delta1}, Δ2={delta2})"),
            RoiDefinition::R3 { delta1, delta3 } => format!("R3(Δ1={delta1}, Δ3={delta3})"),
            RoiDefinition::R4 { delta1, delta4 } => format!("R4(Δ1={delta1}, Δ4={delta4})"),
            RoiDefinition::R5 { delta5 } => format!("R5(Δ5={delta5})"),
            RoiDefinition::MatchedR1 { delta5 } => format!("R1(G>={delta5})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiMask {
    mask: GridMask,
    definition: RoiDefinition,
    g_max: f64,
    g_max_body: Option<f64>,
}

impl RoiMask {
    pub fn mask(&self) -> &GridMask {
        &self.mask
    }

    pub fn definition(&self) -> &RoiDefinition {
        &self.definition
    }

    pub fn kind(&self) -> RoiKind {
        self.definition.kind()
    }

    pub fn g_max(&self) -> f64 {
        self.g_max
    }

    pub fn g_max_body(&self) -> Option<f64> {
        self.g_max_body
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }
}

impl AsRef<GridMask> for RoiMask {
    fn as_ref(&self) -> &GridMask {
        &self.mask
    }
}

fn check_delta(name: &str, d: f64) -> Result<()> {
    if d >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be non-negative, got {d}")))
    }
}

fn check_level(name: &str, d: f64) -> Result<()> {
    if d.is_nan() {
        Err(Error::config(format!("{name} must be a number")))
    } else {
        Ok(())
    }
}

fn at_least(p: &Pattern, level: f64) -> GridMask {
    GridMask::from_predicate(p.grid().clone(), |i| p.value(i) >= level)
}

fn r1_mask(free: &Pattern, delta1: f64) -> Result<(GridMask, f64)> {
    check_delta("Δ1", delta1)?;
    let g_max = free.max_value();
    Ok((at_least(free, g_max - delta1), g_max))
}

pub fn roi_r1(free: &Pattern, delta1: f64) -> Result<RoiMask> {
    let (mask, g_max) = r1_mask(free, delta1)?;
    Ok(RoiMask { mask, definition: RoiDefinition::R1 { delta1 }, g_max, g_max_body: None })
}

pub fn roi_r2(free: &Pattern, blocked: &Pattern, delta1: f64, delta2: f64) -> Result<RoiMask> {
    ensure_same_grid(free.grid(), blocked.grid())?;
    check_delta("Δ2", delta2)?;
    let (r1, g_max) = r1_mask(free, delta1)?;
    let g_max_body = blocked.max_value();
    let mask = r1.union(&at_least(blocked, g_max_body - delta2))?;
    Ok(RoiMask { mask, definition: RoiDefinition::R2 { delta1, delta2 }, g_max, g_max_body: Some(g_max_body) })
}

pub fn roi_r3(free: &Pattern, blocked: &Pattern, delta1: f64, delta3: f64) -> Result<RoiMask> {
    ensure_same_grid(free.grid(), blocked.grid())?;
    check_delta("Δ3", delta3)?;
    let (r1, g_max) = r1_mask(free, delta1)?;
    let mask = r1.union(&at_least(blocked, g_max - delta3))?;
    Ok(RoiMask {
        mask,
        definition: RoiDefinition::R3 { delta1, delta3 },
        g_max,
        g_max_body: Some(blocked.max_value()),
    })
}

pub fn roi_r4(free: &Pattern, blocked: &Pattern, delta1: f64, delta4: f64) -> Result<RoiMask> {
    ensure_same_grid(free.grid(), blocked.grid())?;
    check_level("Δ4", delta4)?;
    let (r1, g_max) = r1_mask(free, delta1)?;
    let mask = r1.union(&at_least(blocked, delta4))?;
    Ok(RoiMask {
        mask,
        definition: RoiDefinition::R4 { delta1, delta4 },
        g_max,
        g_max_body: Some(blocked.max_value()),
    })
}

pub fn roi_r5(free: &Pattern, blocked: &Pattern, delta5: f64) -> Result<RoiMask> {
    ensure_same_grid(free.grid(), blocked.grid())?;
    check_level("Δ5", delta5)?;
    let mask = at_least(free, delta5).union(&at_least(blocked, delta5))?;
    Ok(RoiMask {
        mask,
        definition: RoiDefinition::R5 { delta5 },
        g_max: free.max_value(),
        g_max_body: Some(blocked.max_value()),
    })
}

/// `{G >= Δ5}`, i.e. R1 with Δ1 = G_max - Δ5. Empty when Δ5 exceeds G_max;
/// check [`RoiMask::is_empty`].
pub fn matched_r1_for_r5(free: &Pattern, delta5: f64) -> Result<RoiMask> {
    check_level("Δ5", delta5)?;
    Ok(RoiMask {
        mask: at_least(free, delta5),
        definition: RoiDefinition::MatchedR1 { delta5 },
        g_max: free.max_value(),
        g_max_body: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Improvement {
    pub base_pct: f64,
    pub enhanced_pct: f64,
    pub abs_pct: f64,
    /// Absent when the base region is empty.
    pub rel_pct: Option<f64>,
}

impl Improvement {
    pub fn from_percentages(base_pct: f64, enhanced_pct: f64) -> Self {
        let abs_pct = enhanced_pct - base_pct;
        let rel_pct = (base_pct != 0.0).then(|| 100.0 * abs_pct / base_pct);
        Self { base_pct, enhanced_pct, abs_pct, rel_pct }
    }
}

pub fn roi_improvement(base: &GridMask, enhanced: &GridMask, w: &WeightField) -> Result<Improvement> {
    ensure_same_grid(base.grid(), enhanced.grid())?;
    Ok(Improvement::from_percentages(fraction_of_sphere(base, w)?, fraction_of_sphere(enhanced, w)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{AngularGrid, PatternKind};
    use std::sync::Arc;

    fn grid() -> Arc<AngularGrid> {
        Arc::new(AngularGrid::make(30.0, 30.0, 150.0).unwrap())
    }

    fn ramp(g: &Arc<AngularGrid>) -> Pattern {
        Pattern::from_fn(g.clone(), PatternKind::Eirp, |phi, theta| -25.0 - phi / 12.0 - (theta - 90.0).abs() / 6.0)
            .unwrap()
    }

    #[test]
    fn r1_extremes() {
        let g = grid();
        let free = ramp(&g);
        let argmax = roi_r1(&free, 0.0).unwrap();
        assert_eq!(argmax.mask().count(), 1);
        assert!(argmax.mask().contains(free.max().0));
        let all = roi_r1(&free, 1000.0).unwrap();
        assert_eq!(all.mask().count(), g.n_valid());
        assert!(roi_r1(&free, -1.0).is_err());
    }

    #[test]
    fn unblocked_r2_r3_equal_r1() {
        let free = ramp(&grid());
        let r1 = roi_r1(&free, 5.0).unwrap();
        assert_eq!(roi_r2(&free, &free, 5.0, 5.0).unwrap().mask(), r1.mask());
        assert_eq!(roi_r3(&free, &free, 5.0, 5.0).unwrap().mask(), r1.mask());
    }

    #[test]
    fn r2_with_zero_delta_adds_blocked_argmax() {
        let g = grid();
        let free = ramp(&g);
        let blocked = Pattern::from_fn(g.clone(), PatternKind::Eirp, |phi, _| -40.0 + phi / 30.0).unwrap();
        let r2 = roi_r2(&free, &blocked, 5.0, 0.0).unwrap();
        let bmax = blocked.max_value();
        let expected = roi_r1(&free, 5.0)
            .unwrap()
            .mask()
            .union(&GridMask::from_predicate(g, |i| blocked.value(i) == bmax))
            .unwrap();
        assert_eq!(r2.mask(), &expected);
    }

    #[test]
    fn r3_with_weaker_blocked_is_r1() {
        let free = ramp(&grid());
        let blocked = free.shifted(-10.0).unwrap();
        let r1 = roi_r1(&free, 5.0).unwrap();
        assert_eq!(roi_r3(&free, &blocked, 5.0, 5.0).unwrap().mask(), r1.mask());
    }

    #[test]
    fn r4_extremes() {
        let free = ramp(&grid());
        let blocked = free.shifted(-3.0).unwrap();
        let low = roi_r4(&free, &blocked, 5.0, -1000.0).unwrap();
        assert_eq!(low.mask().count(), free.grid().n_valid());
        let high = roi_r4(&free, &blocked, 5.0, 1000.0).unwrap();
        assert_eq!(high.mask(), roi_r1(&free, 5.0).unwrap().mask());
    }

    #[test]
    fn r5_basics() {
        let g = grid();
        let free = ramp(&g);
        let r5 = roi_r5(&free, &free, -35.0).unwrap();
        assert_eq!(r5.mask(), &GridMask::from_predicate(g.clone(), |i| free.value(i) >= -35.0));
        let all = roi_r5(&free, &free.shifted(-20.0).unwrap(), -200.0).unwrap();
        assert_eq!(all.mask().count(), g.n_valid());
    }

    #[test]
    fn matched_r1_edges() {
        let g = grid();
        let free = ramp(&g);
        let gmax = free.max_value();
        assert_eq!(matched_r1_for_r5(&free, gmax).unwrap().mask().count(), 1);
        assert_eq!(matched_r1_for_r5(&free, -200.0).unwrap().mask().count(), g.n_valid());
        assert!(matched_r1_for_r5(&free, gmax + 1.0).unwrap().is_empty());
    }

    #[test]
    fn improvement_rows() {
        let a = Improvement::from_percentages(29.7, 30.8);
        assert!((a.abs_pct - 1.1).abs() < 1e-9);
        assert!((a.rel_pct.unwrap() - 3.7).abs() < 0.05);
        let b = Improvement::from_percentages(54.7, 57.2);
        assert!((b.abs_pct - 2.5).abs() < 1e-9);
        assert!((b.rel_pct.unwrap() - 4.6).abs() < 0.05);
        let c = Improvement::from_percentages(12.0, 12.0);
        assert_eq!((c.abs_pct, c.rel_pct), (0.0, Some(0.0)));
        assert_eq!(Improvement::from_percentages(0.0, 3.0).rel_pct, None);
    }

    #[test]
    fn definitions_round_trip_through_json() {
        let d = RoiDefinition::R4 { delta1: 5.0, delta4: -35.0 };
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"kind":"r4","delta1":5.0,"delta4":-35.0}"#);
        assert_eq!(serde_json::from_str::<RoiDefinition>(&s).unwrap(), d);
    }
}
