//! Best-of-codebook overlays, sin(theta)-weighted EIRP distributions and the
//! coverage / percentile queries built on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, GridMask, Pattern, PatternSet, WeightField};

/// How "percentile p" is read throughout the toolkit: the value exceeded over
/// p% of the weighted sphere. p = 90 probes weak directions, p = 20 strong ones.
pub const PERCENTILE_CONVENTION: &str =
    "top-p: value v such that at least p% of the weighted sphere has value >= v (largest such sample, no interpolation)";

/// All thresholds are applied as `value >= threshold`.
pub const THRESHOLD_CONVENTION: &str = "value >= threshold";

/// Slack for comparing accumulated weights against a target fraction.
pub(crate) const MASS_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct OverlayPattern {
    pub pattern: Pattern,
    /// Index of the winning beam at every grid point (0 at invalid points).
    pub best_beam: Vec<usize>,
}

/// Pointwise maximum over the codebook. Ties go to the lowest beam index.
pub fn overlay_best_beam(set: &PatternSet) -> Result<OverlayPattern> {
    overlay_of(set.beams())
}

pub fn overlay_of(beams: &[Pattern]) -> Result<OverlayPattern> {
    let first = beams.first().ok_or_else(|| Error::config("overlay needs at least one beam"))?;
    for b in &beams[1..] {
        ensure_same_grid(first.grid(), b.grid())?;
    }
    let grid = first.grid().clone();
    let mut values = first.values().to_vec();
    let mut best_beam = vec![0; grid.len()];
    for (k, beam) in beams.iter().enumerate().skip(1) {
        for i in grid.valid_indices() {
            if beam.value(i) > values[i] {
                values[i] = beam.value(i);
                best_beam[i] = k;
            }
        }
    }
    Ok(OverlayPattern { pattern: Pattern::new(grid, values, first.kind())?, best_beam })
}

/// Step CDF over distinct sample values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedCdf {
    values: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedCdf {
    /// From `(value, weight)` samples; zero-weight samples are dropped.
    pub fn from_samples(samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut s: Vec<(f64, f64)> = samples.into_iter().filter(|&(_, w)| w > 0.0).collect();
        if s.is_empty() {
            return Err(Error::EmptyRoi);
        }
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values = Vec::with_capacity(s.len());
        let mut mass = Vec::with_capacity(s.len());
        for (v, w) in s {
            if values.last() == Some(&v) {
                *mass.last_mut().unwrap() += w;
            } else {
                values.push(v);
                mass.push(w);
            }
        }
        let mut running = 0.0;
        let mut cumulative: Vec<f64> = mass
            .iter()
            .map(|w| {
                running += w;
                running
            })
            .collect();
        let total = running;
        for c in &mut cumulative {
            *c /= total;
        }
        Ok(Self { values, cumulative })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// F(x): mass at values <= x.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.partition_point(|&v| v <= x);
        if n == 0 {
            0.0
        } else {
            self.cumulative[n - 1]
        }
    }

    /// 1 - F(x-): mass at values >= x.
    pub fn exceedance(&self, x: f64) -> f64 {
        let n = self.values.partition_point(|&v| v < x);
        self.exceedance_at(n)
    }

    fn exceedance_at(&self, idx: usize) -> f64 {
        if idx == 0 {
            1.0
        } else {
            1.0 - self.cumulative[idx - 1]
        }
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

pub fn weighted_cdf(p: &Pattern, w: &WeightField) -> Result<WeightedCdf> {
    ensure_same_grid(p.grid(), w.grid())?;
    WeightedCdf::from_samples(p.valid_values().map(|(i, v)| (v, w.weight(i))))
}

/// Distribution restricted to `mask`, renormalized to total mass 1.
pub fn weighted_cdf_in(p: &Pattern, w: &WeightField, mask: &GridMask) -> Result<WeightedCdf> {
    ensure_same_grid(p.grid(), w.grid())?;
    ensure_same_grid(p.grid(), mask.grid())?;
    WeightedCdf::from_samples(mask.indices().map(|i| (p.value(i), w.weight(i))))
}

/// Percentage of the weighted sphere with value >= `threshold`.
pub fn coverage_above(p: &Pattern, w: &WeightField, threshold: f64) -> Result<f64> {
    ensure_same_grid(p.grid(), w.grid())?;
    let mut total = 0.0;
    let mut above = 0.0;
    for (i, v) in p.valid_values() {
        total += w.weight(i);
        if v >= threshold {
            above += w.weight(i);
        }
    }
    Ok(100.0 * above / total)
}

/// Value exceeded over `p`% of the weighted sphere (see
/// [`PERCENTILE_CONVENTION`]).
pub fn percentile_value(cdf: &WeightedCdf, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 100.0) {
        return Err(Error::config(format!("percentile {p} must lie strictly between 0 and 100")));
    }
    let target = p / 100.0 - MASS_EPS;
    // Exceedance is nonincreasing in the index; index 0 always qualifies.
    let idx = (0..cdf.values.len()).rev().find(|&i| cdf.exceedance_at(i) >= target).unwrap_or(0);
    Ok(cdf.values[idx])
}

/// Horizontal gap between the free and blocked CDFs at percentile `p`.
pub fn percentile_loss(free: &WeightedCdf, blocked: &WeightedCdf, p: f64) -> Result<f64> {
    Ok(percentile_value(free, p)? - percentile_value(blocked, p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageLost {
    pub free_pct: f64,
    pub blocked_pct: f64,
    pub abs_pct: f64,
    /// Absent when the free coverage is zero.
    pub rel_pct: Option<f64>,
}

impl CoverageLost {
    pub fn from_percentages(free_pct: f64, blocked_pct: f64) -> Self {
        let abs_pct = free_pct - blocked_pct;
        let rel_pct = (free_pct != 0.0).then(|| 100.0 * abs_pct / free_pct);
        Self { free_pct, blocked_pct, abs_pct, rel_pct }
    }
}

pub fn coverage_lost(free: &Pattern, blocked: &Pattern, w: &WeightField, threshold: f64) -> Result<CoverageLost> {
    ensure_same_grid(free.grid(), blocked.grid())?;
    Ok(CoverageLost::from_percentages(
        coverage_above(free, w, threshold)?,
        coverage_above(blocked, w, threshold)?,
    ))
}
