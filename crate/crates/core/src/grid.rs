//! Spherical sampling lattice, scalar fields on it, and solid-angle weighting.
//!
//! Points are addressed by a flat index `i_phi * n_theta + i_theta`. A point
//! may be marked invalid (not measured); invalid points carry no value, no
//! weight, and never belong to a mask.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

/// Lowest representable level in dB. Anything below (including `-inf` from
/// exact array nulls) is clamped to this value and counted as floored.
pub const FLOOR_DB: f64 = -200.0;

/// Tolerance used when matching angles and checking step uniformity.
const ANGLE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngularGrid {
    phi: Vec<f64>,
    theta: Vec<f64>,
    valid: Vec<bool>,
}

fn check_axis(name: &str, values: &[f64], lo: f64, hi: f64, hi_inclusive: bool) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(format!("{name} axis is empty")));
    }
    for &v in values {
        let above = if hi_inclusive { v > hi } else { v >= hi };
        if !v.is_finite() || v < lo || above {
            return Err(Error::config(format!("{name} value {v} outside allowed range")));
        }
    }
    for pair in values.windows(2) {
        if pair[1] - pair[0] <= ANGLE_EPS {
            return Err(Error::config(format!(
                "{name} values must be strictly ascending without duplicates ({} then {})",
                pair[0], pair[1]
            )));
        }
    }
    if values.len() > 2 {
        let step = values[1] - values[0];
        for pair in values.windows(2) {
            if ((pair[1] - pair[0]) - step).abs() > ANGLE_EPS * step.max(1.0) {
                return Err(Error::config(format!("{name} axis is not uniformly spaced")));
            }
        }
    }
    Ok(())
}

fn axis(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + step * i as f64).collect()
}

fn steps_in(span: f64, step: f64) -> Result<usize> {
    let n = span / step;
    let rounded = n.round();
    if (n - rounded).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::config(format!("step {step} does not divide range {span}")));
    }
    Ok(rounded as usize)
}

impl AngularGrid {
    /// Builds a grid from explicit axes. `phi` must lie in [0, 360), `theta`
    /// in (0, 180), both ascending and uniformly spaced.
    pub fn new(phi: Vec<f64>, theta: Vec<f64>, valid: Vec<bool>) -> Result<Self> {
        check_axis("phi", &phi, 0.0, 360.0, false)?;
        check_axis("theta", &theta, 0.0, 180.0, false)?;
        if theta.iter().any(|&t| t <= 0.0) {
            return Err(Error::config("theta values must be strictly positive"));
        }
        if valid.len() != phi.len() * theta.len() {
            return Err(Error::config(format!(
                "validity mask has {} entries, grid has {}",
                valid.len(),
                phi.len() * theta.len()
            )));
        }
        if !valid.iter().any(|&v| v) {
            return Err(Error::NoValidPoints);
        }
        Ok(Self { phi, theta, valid })
    }

    /// Full grid with the same step on both axes.
    pub fn make(step: f64, theta_min: f64, theta_max: f64) -> Result<Self> {
        Self::with_steps(step, step, theta_min, theta_max)
    }

    pub fn with_steps(phi_step: f64, theta_step: f64, theta_min: f64, theta_max: f64) -> Result<Self> {
        if !(phi_step > 0.0 && phi_step <= 90.0) {
            return Err(Error::config(format!("phi step {phi_step} must be in (0, 90]")));
        }
        if !(theta_step > 0.0) {
            return Err(Error::config(format!("theta step {theta_step} must be positive")));
        }
        if !(theta_min > 0.0 && theta_min < theta_max && theta_max < 180.0) {
            return Err(Error::config(format!(
                "theta range [{theta_min}, {theta_max}] must satisfy 0 < min < max < 180"
            )));
        }
        let n_phi = steps_in(360.0, phi_step)?;
        let n_theta = steps_in(theta_max - theta_min, theta_step)? + 1;
        let phi = axis(0.0, phi_step, n_phi);
        let theta = axis(theta_min, theta_step, n_theta);
        let valid = vec![true; n_phi * n_theta];
        Self::new(phi, theta, valid)
    }

    /// Same axes, different validity.
    pub fn with_validity(&self, valid: Vec<bool>) -> Result<Self> {
        Self::new(self.phi.clone(), self.theta.clone(), valid)
    }

    pub fn phi_values(&self) -> &[f64] {
        &self.phi
    }

    pub fn theta_values(&self) -> &[f64] {
        &self.theta
    }

    pub fn n_phi(&self) -> usize {
        self.phi.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }

    /// Total number of lattice points, valid or not.
    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn index(&self, i_phi: usize, i_theta: usize) -> usize {
        i_phi * self.theta.len() + i_theta
    }

    /// `(phi, theta)` in degrees for a flat index.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let n_theta = self.theta.len();
        (self.phi[idx / n_theta], self.theta[idx % n_theta])
    }

    pub fn is_valid(&self, idx: usize) -> bool {
        self.valid[idx]
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i)
    }

    /// Flat index of the lattice point at `(phi, theta)`, if there is one.
    pub fn find(&self, phi: f64, theta: f64) -> Option<usize> {
        let i_phi = self.phi.iter().position(|&p| (p - phi).abs() < ANGLE_EPS)?;
        let i_theta = self.theta.iter().position(|&t| (t - theta).abs() < ANGLE_EPS)?;
        Some(self.index(i_phi, i_theta))
    }

    pub fn phi_step(&self) -> Option<f64> {
        (self.phi.len() > 1).then(|| self.phi[1] - self.phi[0])
    }

    pub fn theta_step(&self) -> Option<f64> {
        (self.theta.len() > 1).then(|| self.theta[1] - self.theta[0])
    }
}

pub(crate) fn same_grid(a: &Arc<AngularGrid>, b: &Arc<AngularGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn ensure_same_grid(a: &Arc<AngularGrid>, b: &Arc<AngularGrid>) -> Result<()> {
    if same_grid(a, b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    /// Effective isotropic radiated power, dBm.
    Eirp,
    /// Blockage loss, dB. Negative values are reflection gains.
    Loss,
}

/// One scalar dB field on a grid.
///
/// EIRP values below [`FLOOR_DB`] are clamped; the number of clamped points is
/// kept in `floored_count`. Invalid grid points hold `NaN` and are never read.
#[derive(Debug, Clone)]
pub struct Pattern {
    grid: Arc<AngularGrid>,
    values: Vec<f64>,
    kind: PatternKind,
    floored: usize,
}

impl Pattern {
    pub fn new(grid: Arc<AngularGrid>, mut values: Vec<f64>, kind: PatternKind) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidValue(format!(
                "pattern has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        let mut floored = 0;
        for (idx, v) in values.iter_mut().enumerate() {
            if !grid.is_valid(idx) {
                *v = f64::NAN;
                continue;
            }
            if v.is_nan() || *v == f64::INFINITY {
                let (phi, theta) = grid.coords(idx);
                return Err(Error::InvalidValue(format!(
                    "non-finite value {v} at phi={phi}, theta={theta}"
                )));
            }
            match kind {
                PatternKind::Eirp => {
                    if *v < FLOOR_DB {
                        *v = FLOOR_DB;
                        floored += 1;
                    }
                }
                PatternKind::Loss => {
                    if !v.is_finite() {
                        return Err(Error::InvalidValue("loss values must be finite".into()));
                    }
                }
            }
        }
        Ok(Self { grid, values, kind, floored })
    }

    /// Evaluates `f(phi, theta)` at every valid point.
    pub fn from_fn(grid: Arc<AngularGrid>, kind: PatternKind, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|idx| {
                if grid.is_valid(idx) {
                    let (phi, theta) = grid.coords(idx);
                    f(phi, theta)
                } else {
                    f64::NAN
                }
            })
            .collect();
        Self::new(grid, values, kind)
    }

    pub fn constant(grid: Arc<AngularGrid>, kind: PatternKind, value: f64) -> Result<Self> {
        Self::from_fn(grid, kind, |_, _| value)
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        &self.grid
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    /// Raw values indexed like the grid; invalid points are `NaN`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn floored_count(&self) -> usize {
        self.floored
    }

    /// `(index, value)` over valid points.
    pub fn valid_values(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.grid.valid_indices().map(|i| (i, self.values[i]))
    }

    /// Largest value and the first index attaining it.
    pub fn max(&self) -> (usize, f64) {
        let mut best = (usize::MAX, f64::NEG_INFINITY);
        for (i, v) in self.valid_values() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    pub fn max_value(&self) -> f64 {
        self.max().1
    }

    /// Applies `f` to every valid value, keeping grid and kind.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Self::new(self.grid.clone(), values, self.kind)
    }

    /// Pointwise combination of two patterns on the same grid.
    pub fn zip_with(&self, other: &Pattern, kind: PatternKind, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.grid.clone(), values, kind)
    }

    pub fn shifted(&self, offset_db: f64) -> Result<Self> {
        self.map(|v| v + offset_db)
    }
}

/// One pattern per codebook beam, all on one grid.
#[derive(Debug, Clone)]
pub struct PatternSet {
    beams: Vec<Pattern>,
}

impl PatternSet {
    pub fn new(beams: Vec<Pattern>) -> Result<Self> {
        let first = beams.first().ok_or_else(|| Error::config("pattern set needs at least one beam"))?;
        for b in &beams[1..] {
            ensure_same_grid(first.grid(), b.grid())?;
            if b.kind() != first.kind() {
                return Err(Error::InvalidValue("pattern set mixes EIRP and loss patterns".into()));
            }
        }
        Ok(Self { beams })
    }

    pub fn beams(&self) -> &[Pattern] {
        &self.beams
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        self.beams[0].grid()
    }
}

/// Normalized quadrature weights, zero on invalid points.
#[derive(Debug, Clone)]
pub struct WeightField {
    grid: Arc<AngularGrid>,
    weights: Vec<f64>,
}

impl WeightField {
    fn normalized(grid: Arc<AngularGrid>, raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::NoValidPoints);
        }
        let weights = raw.into_iter().map(|w| w / total).collect();
        Ok(Self { grid, weights })
    }

    /// Weights proportional to sin(theta); with uniform steps this is the
    /// solid angle of each lattice cell up to a constant.
    pub fn solid_angle(grid: Arc<AngularGrid>) -> Result<Self> {
        let raw = (0..grid.len())
            .map(|i| if grid.is_valid(i) { grid.coords(i).1.to_radians().sin() } else { 0.0 })
            .collect();
        Self::normalized(grid, raw)
    }

    /// Equal weight on every valid point.
    pub fn uniform(grid: Arc<AngularGrid>) -> Result<Self> {
        let raw = (0..grid.len()).map(|i| if grid.is_valid(i) { 1.0 } else { 0.0 }).collect();
        Self::normalized(grid, raw)
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, idx: usize) -> f64 {
        self.weights[idx]
    }
}

/// Convenience wrapper matching the operation name used in reports.
pub fn solid_angle_weights(grid: &Arc<AngularGrid>) -> Result<WeightField> {
    WeightField::solid_angle(grid.clone())
}

/// Boolean subset of the valid points of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    grid: Arc<AngularGrid>,
    inside: Vec<bool>,
}

impl GridMask {
    /// Entries at invalid points are forced to `false`.
    pub fn new(grid: Arc<AngularGrid>, mut inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        for (flag, &ok) in inside.iter_mut().zip(grid.validity()) {
            *flag &= ok;
        }
        Ok(Self { grid, inside })
    }

    pub fn from_predicate(grid: Arc<AngularGrid>, pred: impl Fn(usize) -> bool) -> Self {
        let inside = (0..grid.len()).map(|i| grid.is_valid(i) && pred(i)).collect();
        Self { grid, inside }
    }

    pub fn full(grid: Arc<AngularGrid>) -> Self {
        Self::from_predicate(grid, |_| true)
    }

    pub fn empty(grid: Arc<AngularGrid>) -> Self {
        Self::from_predicate(grid, |_| false)
    }

    /// Points with `theta <= split` (the boundary row belongs to this half).
    pub fn upper_half(grid: Arc<AngularGrid>, split: f64) -> Self {
        let g = grid.clone();
        Self::from_predicate(grid, move |i| g.coords(i).1 <= split)
    }

    pub fn grid(&self) -> &Arc<AngularGrid> {
        &self.grid
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn flags(&self) -> &[bool] {
        &self.inside
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter(|(_, &v)| v).map(|(i, _)| i)
    }

    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&v| v).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&v| v)
    }

    fn combine(&self, other: &GridMask, f: impl Fn(bool, bool) -> bool) -> Result<GridMask> {
        ensure_same_grid(&self.grid, &other.grid)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(&a, &b)| f(a, b)).collect();
        Ok(GridMask { grid: self.grid.clone(), inside })
    }

    pub fn union(&self, other: &GridMask) -> Result<GridMask> {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &GridMask) -> Result<GridMask> {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &GridMask) -> Result<GridMask> {
        self.combine(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &GridMask) -> bool {
        same_grid(&self.grid, &other.grid) && self.inside.iter().zip(&other.inside).all(|(&a, &b)| !a || b)
    }
}

/// Percentage of the (valid) sphere covered by `mask`, by weight.
///
/// Invalid points are excluded from both numerator and denominator.
pub fn fraction_of_sphere(mask: &GridMask, weights: &WeightField) -> Result<f64> {
    ensure_same_grid(mask.grid(), weights.grid())?;
    let total: f64 = weights.weights().iter().sum();
    let covered: f64 = mask.indices().map(|i| weights.weight(i)).sum();
    Ok(100.0 * covered / total)
}
