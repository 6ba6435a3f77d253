//! Blockage-loss fields and their weighted statistics over a region.

use serde::Serialize;
use statrs::function::erf::erfc;

use crate::analysis::{
    coverage_lost, overlay_best_beam, percentile_loss, weighted_cdf, CoverageLost, MASS_EPS,
};
use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, fraction_of_sphere, GridMask, Pattern, PatternKind, PatternSet, WeightField};
use crate::roi::{matched_r1_for_r5, roi_improvement, roi_r5, Improvement};

/// `free - blocked` per direction; negative values are reflection gains.
pub fn loss_field(free: &Pattern, blocked: &Pattern) -> Result<Pattern> {
    free.zip_with(blocked, PatternKind::Loss, |f, b| f - b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossStats {
    pub mean: f64,
    pub median: f64,
    pub std_dev: f64,
    /// Percentage of the sphere covered by the region.
    pub sphere_fraction: f64,
    pub n_points: usize,
}

fn region_samples(loss: &Pattern, roi: &GridMask, w: &WeightField) -> Result<Vec<(f64, f64)>> {
    ensure_same_grid(loss.grid(), roi.grid())?;
    ensure_same_grid(loss.grid(), w.grid())?;
    let samples: Vec<(f64, f64)> = roi.indices().map(|i| (loss.value(i), w.weight(i))).collect();
    if samples.is_empty() {
        return Err(Error::EmptyRoi);
    }
    Ok(samples)
}

/// Weighted mean, median and population standard deviation of `loss` over
/// `roi`. The median is the smallest value whose cumulative region weight
/// reaches one half.
pub fn loss_stats(loss: &Pattern, roi: &GridMask, w: &WeightField) -> Result<LossStats> {
    let mut samples = region_samples(loss, roi, w)?;
    let total: f64 = samples.iter().map(|s| s.1).sum();
    if !(total > 0.0) {
        return Err(Error::EmptyRoi);
    }
    // Accumulate around the first sample so a constant field gives its
    // value back exactly.
    let origin = samples[0].0;
    let mean = origin + samples.iter().map(|(v, wt)| (v - origin) * wt).sum::<f64>() / total;
    // Two-pass variance around the mean.
    let var = samples.iter().map(|(v, wt)| wt * (v - mean).powi(2)).sum::<f64>() / total;

    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut running = 0.0;
    let mut median = samples[samples.len() - 1].0;
    for (v, wt) in &samples {
        running += wt;
        if running / total >= 0.5 - MASS_EPS {
            median = *v;
            break;
        }
    }
    Ok(LossStats {
        mean,
        median,
        std_dev: var.sqrt(),
        sphere_fraction: fraction_of_sphere(roi, w)?,
        n_points: samples.len(),
    })
}

/// Normal model of the loss distribution, fitted by moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianFit {
    pub family: &'static str,
    pub mu: f64,
    pub sigma: f64,
}

impl GaussianFit {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { family: "gaussian", mu, sigma }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.sigma == 0.0 {
            return if x >= self.mu { 1.0 } else { 0.0 };
        }
        0.5 * erfc(-(x - self.mu) / (self.sigma * std::f64::consts::SQRT_2))
    }

    /// `(x, F(x))` at `n` evenly spaced points over `[lo, hi]`.
    pub fn curve(&self, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (x, self.cdf(x))
            })
            .collect()
    }
}

pub fn gaussian_fit(loss: &Pattern, roi: &GridMask, w: &WeightField) -> Result<GaussianFit> {
    let s = loss_stats(loss, roi, w)?;
    Ok(GaussianFit::new(s.mean, s.std_dev))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl IntoIterator<Item = f64>) -> Option<Range> {
        values.into_iter().fold(None, |acc, v| match acc {
            None => Some(Range { min: v, max: v }),
            Some(r) => Some(Range { min: r.min.min(v), max: r.max.max(v) }),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PercentileLoss {
    pub percentile: f64,
    pub loss_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub threshold_dbm: f64,
    pub coverage: CoverageLost,
    /// Matched R1 (Freespace-only) against R5 at this threshold.
    pub improvement: Improvement,
}

/// One study's worth of headline numbers: gross loss range over percentiles,
/// relative coverage lost over thresholds, and R5-over-R1 improvement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub gross_loss_db: Range,
    pub relative_coverage_lost_pct: Option<Range>,
    pub relative_roi_improvement_pct: Option<Range>,
    /// Descending percentile order.
    pub percentile_losses: Vec<PercentileLoss>,
    /// Descending threshold order.
    pub thresholds: Vec<ThresholdRow>,
}

fn sorted_desc_unique(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out.dedup();
    out
}

pub fn study_summary(
    free: &PatternSet,
    blocked: &PatternSet,
    thresholds: &[f64],
    percentiles: &[f64],
) -> Result<SummaryTable> {
    if thresholds.is_empty() || percentiles.is_empty() {
        return Err(Error::config("study summary needs at least one threshold and one percentile"));
    }
    ensure_same_grid(free.grid(), blocked.grid())?;
    let free = overlay_best_beam(free)?.pattern;
    let blocked = overlay_best_beam(blocked)?.pattern;
    let w = WeightField::solid_angle(free.grid().clone())?;
    let free_cdf = weighted_cdf(&free, &w)?;
    let blocked_cdf = weighted_cdf(&blocked, &w)?;

    let percentile_losses = sorted_desc_unique(percentiles)
        .into_iter()
        .map(|p| Ok(PercentileLoss { percentile: p, loss_db: percentile_loss(&free_cdf, &blocked_cdf, p)? }))
        .collect::<Result<Vec<_>>>()?;

    let rows = sorted_desc_unique(thresholds)
        .into_iter()
        .map(|t| {
            let base = matched_r1_for_r5(&free, t)?;
            let enhanced = roi_r5(&free, &blocked, t)?;
            Ok(ThresholdRow {
                threshold_dbm: t,
                coverage: coverage_lost(&free, &blocked, &w, t)?,
                improvement: roi_improvement(base.mask(), enhanced.mask(), &w)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SummaryTable {
        gross_loss_db: Range::of(percentile_losses.iter().map(|p| p.loss_db)).expect("nonempty"),
        relative_coverage_lost_pct: Range::of(rows.iter().filter_map(|r| r.coverage.rel_pct)),
        relative_roi_improvement_pct: Range::of(rows.iter().filter_map(|r| r.improvement.rel_pct)),
        percentile_losses,
        thresholds: rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AngularGrid;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid() -> Arc<AngularGrid> {
        Arc::new(AngularGrid::make(30.0, 30.0, 150.0).unwrap())
    }

    fn eirp(g: &Arc<AngularGrid>, f: impl Fn(f64, f64) -> f64) -> Pattern {
        Pattern::from_fn(g.clone(), PatternKind::Eirp, f).unwrap()
    }

    #[test]
    fn loss_of_uniform_shift_is_constant() {
        let g = grid();
        let free = eirp(&g, |phi, theta| -20.0 - phi / 20.0 - theta / 30.0);
        let loss = loss_field(&free, &free.shifted(-30.0).unwrap()).unwrap();
        assert_eq!(loss.kind(), PatternKind::Loss);
        for (_, v) in loss.valid_values() {
            assert!((v - 30.0).abs() < 1e-12);
        }
        let s = loss_stats(&loss, &GridMask::full(g.clone()), &WeightField::solid_angle(g).unwrap()).unwrap();
        assert!((s.mean - 30.0).abs() < 1e-12);
        assert!((s.median - 30.0).abs() < 1e-12);
        assert!(s.std_dev < 1e-12);
        assert!((s.sphere_fraction - 100.0).abs() < 1e-9);
    }

    #[test]
    fn exact_constant_loss_has_zero_spread() {
        let g = grid();
        let loss = Pattern::constant(g.clone(), PatternKind::Loss, 30.0).unwrap();
        let w = WeightField::solid_angle(g.clone()).unwrap();
        let s = loss_stats(&loss, &GridMask::full(g), &w).unwrap();
        assert_eq!((s.mean, s.median, s.std_dev), (30.0, 30.0, 0.0));
    }

    #[test]
    fn reflection_shows_as_negative_loss() {
        let g = grid();
        let free = eirp(&g, |_, _| -30.0);
        let blocked = eirp(&g, |phi, _| if phi == 60.0 { -24.0 } else { -30.0 });
        let loss = loss_field(&free, &blocked).unwrap();
        assert_eq!(loss.value(g.index(2, 0)), -6.0);
        assert_eq!(loss.value(g.index(0, 0)), 0.0);
    }

    #[test]
    fn two_point_stats() {
        let g = Arc::new(AngularGrid::new(vec![0.0, 90.0], vec![90.0], vec![true; 2]).unwrap());
        let loss = Pattern::new(g.clone(), vec![10.0, 20.0], PatternKind::Loss).unwrap();
        let w = WeightField::solid_angle(g.clone()).unwrap();
        let s = loss_stats(&loss, &GridMask::full(g.clone()), &w).unwrap();
        assert_eq!((s.mean, s.median, s.std_dev, s.n_points), (15.0, 10.0, 5.0, 2));
        let fit = gaussian_fit(&loss, &GridMask::full(g), &w).unwrap();
        assert_eq!((fit.mu, fit.sigma), (s.mean, s.std_dev));
        assert!((fit.cdf(15.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn empty_region_is_an_error() {
        let g = grid();
        let loss = Pattern::constant(g.clone(), PatternKind::Loss, 1.0).unwrap();
        let w = WeightField::solid_angle(g.clone()).unwrap();
        assert!(matches!(loss_stats(&loss, &GridMask::empty(g.clone()), &w), Err(Error::EmptyRoi)));
        assert!(matches!(gaussian_fit(&loss, &GridMask::empty(g), &w), Err(Error::EmptyRoi)));
    }

    #[test]
    fn degenerate_fit_is_a_step() {
        let fit = GaussianFit::new(4.0, 0.0);
        assert_eq!(fit.cdf(3.9), 0.0);
        assert_eq!(fit.cdf(4.0), 1.0);
        let c = fit.curve(0.0, 8.0, 5);
        assert_eq!(c.len(), 5);
        assert_eq!(c[2], (4.0, 1.0));
    }

    fn set(p: Pattern) -> PatternSet {
        PatternSet::new(vec![p]).unwrap()
    }

    #[test]
    fn summary_of_unblocked_study_is_zero() {
        let g = grid();
        let free = eirp(&g, |phi, theta| -20.0 - phi / 20.0 - theta / 30.0);
        let t = study_summary(&set(free.clone()), &set(free), &[-30.0, -35.0], &[90.0, 50.0]).unwrap();
        assert_eq!(t.gross_loss_db, Range { min: 0.0, max: 0.0 });
        assert_eq!(t.relative_coverage_lost_pct, Some(Range { min: 0.0, max: 0.0 }));
        assert_eq!(t.relative_roi_improvement_pct, Some(Range { min: 0.0, max: 0.0 }));
    }

    #[test]
    fn summary_of_uniform_shift() {
        let g = grid();
        let free = eirp(&g, |phi, theta| -20.0 - phi / 20.0 - theta / 30.0);
        let blocked = free.shifted(-10.0).unwrap();
        let t = study_summary(&set(free), &set(blocked), &[-30.0], &[90.0, 80.0, 50.0, 20.0]).unwrap();
        assert!((t.gross_loss_db.min - 10.0).abs() < 1e-12);
        assert!((t.gross_loss_db.max - 10.0).abs() < 1e-12);
    }

    #[test]
    fn summary_rejects_empty_lists() {
        let g = grid();
        let free = eirp(&g, |_, _| -20.0);
        assert!(study_summary(&set(free.clone()), &set(free.clone()), &[], &[50.0]).is_err());
        assert!(study_summary(&set(free.clone()), &set(free), &[-30.0], &[]).is_err());
    }

    proptest! {
        #[test]
        fn loss_identity_and_variance_forms(
            f in proptest::collection::vec(-80.0f64..0.0, 60),
            b in proptest::collection::vec(-80.0f64..0.0, 60),
        ) {
            let g = grid();
            let free = Pattern::new(g.clone(), f, PatternKind::Eirp).unwrap();
            let blocked = Pattern::new(g.clone(), b, PatternKind::Eirp).unwrap();
            let loss = loss_field(&free, &blocked).unwrap();
            for i in g.valid_indices() {
                prop_assert!((loss.value(i) + blocked.value(i) - free.value(i)).abs() < 1e-9);
            }
            let w = WeightField::solid_angle(g.clone()).unwrap();
            let s = loss_stats(&loss, &GridMask::full(g.clone()), &w).unwrap();
            let ex2: f64 = loss.valid_values().map(|(i, v)| w.weight(i) * v * v).sum();
            prop_assert!((s.std_dev.powi(2) - (ex2 - s.mean * s.mean)).abs() < 1e-9);
            // median rule
            let below: f64 = loss.valid_values().filter(|&(_, v)| v < s.median).map(|(i, _)| w.weight(i)).sum();
            let upto: f64 = loss.valid_values().filter(|&(_, v)| v <= s.median).map(|(i, _)| w.weight(i)).sum();
            prop_assert!(below < 0.5);
            prop_assert!(upto >= 0.5 - 1e-12);
        }

        #[test]
        fn summary_is_permutation_invariant(
            f in proptest::collection::vec(-60.0f64..-20.0, 60),
            d in proptest::collection::vec(-6.0f64..25.0, 60),
            rot in 0usize..4,
        ) {
            let g = grid();
            let free = Pattern::new(g.clone(), f.clone(), PatternKind::Eirp).unwrap();
            let blocked = Pattern::new(g.clone(), f.iter().zip(&d).map(|(a, b)| a - b).collect(), PatternKind::Eirp).unwrap();
            let mut th = vec![-30.0, -35.0, -40.0, -45.0];
            let mut pc = vec![90.0, 80.0, 50.0, 20.0];
            let base = study_summary(&set(free.clone()), &set(blocked.clone()), &th, &pc).unwrap();
            th.rotate_left(rot);
            pc.reverse();
            pc.rotate_left(rot);
            let perm = study_summary(&set(free), &set(blocked), &th, &pc).unwrap();
            prop_assert_eq!(base, perm);
        }
    }
}
