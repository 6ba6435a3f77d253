//! Synthetic codebook beam patterns and parametric blockage masks.
//!
//! The array is a uniform linear array lying in the horizontal (theta = 90°)
//! plane. Its boresight points at azimuth `boresight_phi`, so the scan plane
//! is the theta = 90° cut and a beam steered by `+a` peaks at
//! `phi = boresight_phi + a`. Directions enter the element and array models
//! only through two direction cosines: `u` along the array axis and `c`
//! along boresight.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AngularGrid, Pattern, PatternKind, PatternSet, FLOOR_DB};

/// Patch roll-off exponent: gain goes as `cos^q` in field, which puts the
/// single-element half-power beamwidth at 90°.
pub const PATCH_ROLLOFF_Q: f64 = 1.0;

/// Level, relative to the element peak, below which element patterns are
/// filled in (back radiation of a patch, axial null of a dipole).
pub const ELEMENT_FLOOR_REL_DB: f64 = -30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Patch,
    Dipole,
    Isotropic,
}

fn default_spacing() -> f64 {
    0.5
}

fn default_boresight_phi() -> f64 {
    180.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    pub n_elements: usize,
    /// Element spacing in wavelengths.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    pub element: ElementKind,
    /// Phase-shifter resolution; 0 means unquantized.
    #[serde(default)]
    pub phase_bits: u32,
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub element_peak_gain_dbi: f64,
    #[serde(default = "default_boresight_phi")]
    pub boresight_phi: f64,
}

impl ArrayConfig {
    pub fn new(n_elements: usize, element: ElementKind) -> Self {
        Self {
            n_elements,
            spacing: default_spacing(),
            element,
            phase_bits: 0,
            tx_power_dbm: 0.0,
            element_peak_gain_dbi: 0.0,
            boresight_phi: default_boresight_phi(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_elements == 0 {
            return Err(Error::config("array needs at least one element"));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::config(format!("element spacing {} must be positive", self.spacing)));
        }
        if self.phase_bits > 8 {
            return Err(Error::config(format!("phase_bits {} exceeds 8", self.phase_bits)));
        }
        if !self.tx_power_dbm.is_finite() || !self.element_peak_gain_dbi.is_finite() {
            return Err(Error::config("tx power and element gain must be finite"));
        }
        if !(0.0..360.0).contains(&self.boresight_phi) {
            return Err(Error::config("boresight_phi must be in [0, 360)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    /// Degrees off boresight in the scan plane.
    pub scan_angle: f64,
    /// Per-element linear amplitude in [0, 1]; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude_taper: Option<Vec<f64>>,
}

impl BeamSpec {
    pub fn steered(scan_angle: f64) -> Self {
        Self { scan_angle, amplitude_taper: None }
    }
}

/// `(u, c)`: direction cosines along the array axis and along boresight.
pub fn array_frame(phi: f64, theta: f64, boresight_phi: f64) -> (f64, f64) {
    let s = theta.to_radians().sin();
    let d = (phi - boresight_phi).to_radians();
    (s * d.sin(), s * d.cos())
}

fn to_db_floored(amplitude: f64) -> f64 {
    let db = 20.0 * amplitude.log10();
    if db.is_nan() || db < FLOOR_DB {
        FLOOR_DB
    } else {
        db
    }
}

/// Element gain in dBi for a direction with cosines `(u, c)`.
pub fn element_gain_db(kind: ElementKind, peak_dbi: f64, u: f64, c: f64) -> f64 {
    let rel = match kind {
        ElementKind::Isotropic => 0.0,
        ElementKind::Patch => {
            if c <= 0.0 {
                ELEMENT_FLOOR_REL_DB
            } else {
                (20.0 * PATCH_ROLLOFF_Q * c.log10()).max(ELEMENT_FLOOR_REL_DB)
            }
        }
        ElementKind::Dipole => {
            let p = (1.0 - u * u).max(0.0);
            if p == 0.0 {
                ELEMENT_FLOOR_REL_DB
            } else {
                (10.0 * p.log10()).max(ELEMENT_FLOOR_REL_DB)
            }
        }
    };
    peak_dbi + rel
}

fn check_weights(config: &ArrayConfig, weights: &[Complex64]) -> Result<()> {
    if weights.len() != config.n_elements {
        return Err(Error::WeightCount { expected: config.n_elements, got: weights.len() });
    }
    if let Some(w) = weights.iter().find(|w| w.norm() > 1.0 + 1e-12) {
        return Err(Error::InvalidValue(format!("element weight {w} has magnitude above 1")));
    }
    Ok(())
}

fn array_sum(spacing: f64, weights: &[Complex64], u: f64) -> f64 {
    let step = 2.0 * PI * spacing * u;
    weights
        .iter()
        .enumerate()
        .map(|(k, w)| w * Complex64::from_polar(1.0, step * k as f64))
        .sum::<Complex64>()
        .norm()
}

/// Array factor in dB at `angle_deg` off boresight in the scan plane.
pub fn array_factor_db(config: &ArrayConfig, weights: &[Complex64], angle_deg: f64) -> Result<f64> {
    check_weights(config, weights)?;
    Ok(to_db_floored(array_sum(config.spacing, weights, angle_deg.to_radians().sin())))
}

/// Nearest level on a `2^bits` lattice over [0, 360); exact ties go to the
/// lower level. Returns a phase in [0, 360).
pub fn quantize_phase(phase_deg: f64, bits: u32) -> f64 {
    let wrapped = phase_deg.rem_euclid(360.0);
    if bits == 0 {
        return wrapped;
    }
    let levels = (1u32 << bits) as f64;
    let step = 360.0 / levels;
    let x = wrapped / step;
    let lower = x.floor();
    let level = if x - lower > 0.5 { lower + 1.0 } else { lower };
    (level * step).rem_euclid(360.0)
}

/// Per-element phase (degrees, before quantization) for a beam.
pub fn ideal_phases_deg(config: &ArrayConfig, scan_angle: f64) -> Vec<f64> {
    let s = scan_angle.to_radians().sin();
    (0..config.n_elements).map(|k| -360.0 * config.spacing * k as f64 * s).collect()
}

pub fn steering_weights(config: &ArrayConfig, beam: &BeamSpec) -> Result<Vec<Complex64>> {
    config.validate()?;
    if !(beam.scan_angle.abs() < 90.0) {
        return Err(Error::config(format!("scan angle {} must be within (-90, 90)", beam.scan_angle)));
    }
    let taper = match &beam.amplitude_taper {
        Some(t) if t.len() != config.n_elements => {
            return Err(Error::WeightCount { expected: config.n_elements, got: t.len() });
        }
        Some(t) => {
            if t.iter().any(|a| !(0.0..=1.0).contains(a)) {
                return Err(Error::config("amplitude taper entries must lie in [0, 1]"));
            }
            t.clone()
        }
        None => vec![1.0; config.n_elements],
    };
    Ok(ideal_phases_deg(config, beam.scan_angle)
        .into_iter()
        .zip(taper)
        .map(|(phase, amp)| {
            let q = if config.phase_bits > 0 { quantize_phase(phase, config.phase_bits) } else { phase };
            Complex64::from_polar(amp, q.to_radians())
        })
        .collect())
}

/// EIRP in dBm toward `(phi, theta)` for fixed element weights.
pub fn eirp_db(config: &ArrayConfig, weights: &[Complex64], phi: f64, theta: f64) -> f64 {
    let (u, c) = array_frame(phi, theta, config.boresight_phi);
    let element = element_gain_db(config.element, config.element_peak_gain_dbi, u, c);
    let af = to_db_floored(array_sum(config.spacing, weights, u));
    (config.tx_power_dbm + element + af).max(FLOOR_DB)
}

pub fn synth_pattern_set(config: &ArrayConfig, beams: &[BeamSpec], grid: &Arc<AngularGrid>) -> Result<PatternSet> {
    if beams.is_empty() {
        return Err(Error::config("codebook needs at least one beam"));
    }
    let mut patterns = Vec::with_capacity(beams.len());
    for beam in beams {
        let w = steering_weights(config, beam)?;
        check_weights(config, &w)?;
        patterns.push(Pattern::from_fn(grid.clone(), PatternKind::Eirp, |phi, theta| {
            eirp_db(config, &w, phi, theta)
        })?);
    }
    PatternSet::new(patterns)
}

/// Half-power beamwidth in the scan plane, by brute-force scan at `step_deg`.
/// Returns `(width, peak_angle)` in degrees off boresight.
pub fn scan_plane_beamwidth(config: &ArrayConfig, beam: &BeamSpec, step_deg: f64) -> Result<(f64, f64)> {
    let w = steering_weights(config, beam)?;
    let n = (180.0 / step_deg).floor() as usize;
    let angles: Vec<f64> = (0..n).map(|i| -90.0 + step_deg * (i as f64 + 0.5)).collect();
    let gains: Vec<f64> = angles
        .iter()
        .map(|a| eirp_db(config, &w, config.boresight_phi + a, 90.0))
        .collect();
    let (peak, peak_gain) = gains
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &g)| if g > best.1 { (i, g) } else { best });
    let half = peak_gain - 10.0 * 2f64.log10();
    let mut lo = peak;
    while lo > 0 && gains[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < gains.len() && gains[hi + 1] >= half {
        hi += 1;
    }
    Ok((angles[hi] - angles[lo], angles[peak]))
}

/// Rectangle in `(phi, theta)`. A `phi` interval with `lo > hi` wraps
/// through 0°.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngularRegion {
    pub phi: [f64; 2],
    pub theta: [f64; 2],
}

fn circular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

impl AngularRegion {
    pub fn everywhere() -> Self {
        Self { phi: [0.0, 360.0], theta: [0.0, 180.0] }
    }

    fn contains_phi(&self, phi: f64) -> bool {
        let [lo, hi] = self.phi;
        if hi - lo >= 360.0 {
            return true;
        }
        let p = phi.rem_euclid(360.0);
        if lo <= hi {
            (lo..=hi).contains(&p)
        } else {
            p >= lo || p <= hi
        }
    }

    pub fn contains(&self, phi: f64, theta: f64) -> bool {
        self.contains_phi(phi) && (self.theta[0]..=self.theta[1]).contains(&theta)
    }

    /// Largest per-axis angular distance from the region; 0 inside.
    pub fn distance_outside(&self, phi: f64, theta: f64) -> f64 {
        let dphi = if self.contains_phi(phi) {
            0.0
        } else {
            circular_gap(phi, self.phi[0]).min(circular_gap(phi, self.phi[1]))
        };
        let dtheta = if theta < self.theta[0] {
            self.theta[0] - theta
        } else if theta > self.theta[1] {
            theta - self.theta[1]
        } else {
            0.0
        };
        dphi.max(dtheta)
    }

    /// Checks bounds and that the region overlaps the grid's theta span.
    pub fn validate_for(&self, grid: &AngularGrid) -> Result<()> {
        let [plo, phi_hi] = self.phi;
        let [tlo, thi] = self.theta;
        let finite = [plo, phi_hi, tlo, thi].iter().all(|v| v.is_finite());
        if !finite || plo < 0.0 || phi_hi > 360.0 || plo > 360.0 || phi_hi < 0.0 {
            return Err(Error::config(format!("region phi interval {:?} outside [0, 360]", self.phi)));
        }
        if tlo < 0.0 || thi > 180.0 || tlo > thi {
            return Err(Error::config(format!("region theta interval {:?} invalid", self.theta)));
        }
        let thetas = grid.theta_values();
        if thi < thetas[0] || tlo > thetas[thetas.len() - 1] {
            return Err(Error::config(format!(
                "region theta interval {:?} lies outside the grid's theta range",
                self.theta
            )));
        }
        Ok(())
    }
}

/// One attenuating (positive delta) or reflecting (negative delta) region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRegion {
    #[serde(flatten)]
    pub region: AngularRegion,
    pub delta_db: f64,
    #[serde(default)]
    pub edge_taper_deg: f64,
}

impl MaskRegion {
    /// 1 inside, raised-cosine fall-off to 0 across `edge_taper_deg` outside.
    pub fn membership(&self, phi: f64, theta: f64) -> f64 {
        let d = self.region.distance_outside(phi, theta);
        if d == 0.0 {
            1.0
        } else if self.edge_taper_deg <= 0.0 || d >= self.edge_taper_deg {
            0.0
        } else {
            0.5 * (1.0 + (PI * d / self.edge_taper_deg).cos())
        }
    }
}

/// Ordered list of regions; later regions override earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockageMask {
    pub regions: Vec<MaskRegion>,
}

impl BlockageMask {
    pub fn delta_at(&self, phi: f64, theta: f64) -> f64 {
        self.regions.iter().fold(0.0, |acc, r| {
            let t = r.membership(phi, theta);
            if t == 1.0 {
                r.delta_db
            } else if t > 0.0 {
                t * r.delta_db + (1.0 - t) * acc
            } else {
                acc
            }
        })
    }

    pub fn validate_for(&self, grid: &AngularGrid) -> Result<()> {
        for r in &self.regions {
            r.region.validate_for(grid)?;
            if !r.delta_db.is_finite() {
                return Err(Error::config("mask delta must be finite"));
            }
            if !(r.edge_taper_deg >= 0.0) {
                return Err(Error::config("edge taper width must be non-negative"));
            }
        }
        Ok(())
    }
}

pub fn apply_blockage_mask(free: &PatternSet, mask: &BlockageMask) -> Result<PatternSet> {
    let grid = free.grid();
    mask.validate_for(grid)?;
    let deltas: Vec<f64> = (0..grid.len())
        .map(|i| {
            if grid.is_valid(i) {
                let (phi, theta) = grid.coords(i);
                mask.delta_at(phi, theta)
            } else {
                0.0
            }
        })
        .collect();
    let beams = free
        .beams()
        .iter()
        .map(|p| {
            let values = p
                .values()
                .iter()
                .zip(&deltas)
                .map(|(&v, &d)| if d == 0.0 { v } else { v - d })
                .collect();
            Pattern::new(grid.clone(), values, p.kind())
        })
        .collect::<Result<Vec<_>>>()?;
    PatternSet::new(beams)
}

/// Distribution of per-direction blockage loss used to generate scenarios
/// with known statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LossGenerator {
    Gaussian { mean: f64, std_dev: f64 },
    /// Two half-normals joined at `mode`, with separate spreads below and
    /// above it.
    SplitNormal { mode: f64, lower_sigma: f64, upper_sigma: f64 },
}

impl LossGenerator {
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match *self {
            LossGenerator::Gaussian { mean, std_dev } => mean + std_dev * z,
            LossGenerator::SplitNormal { mode, lower_sigma, upper_sigma } => {
                let u: f64 = rand::Rng::random(rng);
                if u * (lower_sigma + upper_sigma) < lower_sigma {
                    mode - lower_sigma * z.abs()
                } else {
                    mode + upper_sigma * z.abs()
                }
            }
        }
    }

    /// Independent draws at every valid point of `grid`.
    pub fn sample_field(&self, grid: &Arc<AngularGrid>, seed: u64) -> Result<Pattern> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.len())
            .map(|i| if grid.is_valid(i) { self.sample(&mut rng) } else { f64::NAN })
            .collect();
        Pattern::new(grid.clone(), values, PatternKind::Loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn patch4() -> ArrayConfig {
        ArrayConfig { phase_bits: 3, ..ArrayConfig::new(4, ElementKind::Patch) }
    }

    #[test]
    fn array_factor_examples() {
        let cfg = ArrayConfig::new(4, ElementKind::Isotropic);
        let w = vec![Complex64::new(1.0, 0.0); 4];
        let af0 = array_factor_db(&cfg, &w, 0.0).unwrap();
        assert!((af0 - 20.0 * 4f64.log10()).abs() < 1e-12);
        assert!((af0 - 12.04).abs() < 0.005);

        // 1 + e^{i pi/2} + e^{i pi} + e^{i 3pi/2} = 0 at 30 degrees.
        assert_eq!(array_factor_db(&cfg, &w, 30.0).unwrap(), FLOOR_DB);

        let one = ArrayConfig::new(1, ElementKind::Isotropic);
        let w1 = [Complex64::from_polar(1.0, 1.234)];
        assert!(array_factor_db(&one, &w1, 47.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn array_factor_rejects_wrong_weight_count() {
        let cfg = ArrayConfig::new(4, ElementKind::Isotropic);
        let w = vec![Complex64::new(1.0, 0.0); 3];
        assert!(matches!(
            array_factor_db(&cfg, &w, 0.0),
            Err(Error::WeightCount { expected: 4, got: 3 })
        ));
        let big = vec![Complex64::new(1.5, 0.0); 4];
        assert!(array_factor_db(&cfg, &big, 0.0).is_err());
    }

    #[test]
    fn quantization_examples() {
        assert_eq!(quantize_phase(50.0, 3), 45.0);
        assert_eq!(quantize_phase(22.5, 3), 0.0);
        assert_eq!(quantize_phase(22.6, 3), 45.0);
        assert_eq!(quantize_phase(-10.0, 3), 0.0);
        assert_eq!(quantize_phase(350.0, 3), 0.0);
        assert_eq!(quantize_phase(-90.0, 3), 270.0);
    }

    #[test]
    fn broadside_weights_have_zero_phase() {
        let w = steering_weights(&patch4(), &BeamSpec::steered(0.0)).unwrap();
        for wk in w {
            assert_eq!(wk, Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn thirty_degree_beam_lands_on_lattice() {
        let w = steering_weights(&patch4(), &BeamSpec::steered(30.0)).unwrap();
        for (k, wk) in w.iter().enumerate() {
            let expected = Complex64::from_polar(1.0, (-90.0 * k as f64).to_radians());
            assert!((wk - expected).norm() < 1e-12, "element {k}: {wk} vs {expected}");
        }
    }

    #[test]
    fn taper_length_must_match() {
        let beam = BeamSpec { scan_angle: 0.0, amplitude_taper: Some(vec![1.0, 0.5]) };
        assert!(steering_weights(&patch4(), &beam).is_err());
        assert!(steering_weights(&patch4(), &BeamSpec::steered(90.0)).is_err());
    }

    #[test]
    fn quantization_matches_brute_force_for_two_elements() {
        let cfg = ArrayConfig { phase_bits: 3, ..ArrayConfig::new(2, ElementKind::Isotropic) };
        let ideal = ArrayConfig { phase_bits: 0, ..cfg.clone() };
        for scan in (-85..=85).map(|a| a as f64) {
            let beam = BeamSpec::steered(scan);
            let q = array_factor_db(&cfg, &steering_weights(&cfg, &beam).unwrap(), scan).unwrap();
            let i = array_factor_db(&ideal, &steering_weights(&ideal, &beam).unwrap(), scan).unwrap();
            let mut best = f64::NEG_INFINITY;
            for a in 0..8 {
                for b in 0..8 {
                    let w = [
                        Complex64::from_polar(1.0, (45.0 * a as f64).to_radians()),
                        Complex64::from_polar(1.0, (45.0 * b as f64).to_radians()),
                    ];
                    best = best.max(array_factor_db(&cfg, &w, scan).unwrap());
                }
            }
            assert!(q <= i + 1e-12);
            assert!((q - best).abs() < 1e-9, "scan {scan}: rounded {q}, best {best}");
            assert!(i - q <= 0.3);
        }
    }

    #[test]
    fn isotropic_single_element_is_flat() {
        let cfg = ArrayConfig { tx_power_dbm: 4.0, ..ArrayConfig::new(1, ElementKind::Isotropic) };
        let grid = Arc::new(AngularGrid::make(15.0, 15.0, 165.0).unwrap());
        let set = synth_pattern_set(&cfg, &[BeamSpec::steered(0.0)], &grid).unwrap();
        for (_, v) in set.beams()[0].valid_values() {
            assert!((v - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn broadside_pattern_is_symmetric() {
        let grid = Arc::new(AngularGrid::make(5.0, 5.0, 175.0).unwrap());
        let set = synth_pattern_set(&patch4(), &[BeamSpec::steered(0.0)], &grid).unwrap();
        let p = &set.beams()[0];
        for i in grid.valid_indices() {
            let (phi, theta) = grid.coords(i);
            let mirror = grid.find((360.0 - phi).rem_euclid(360.0), theta).unwrap();
            assert!((p.value(i) - p.value(mirror)).abs() < 1e-9);
            let flip = grid.find(phi, 180.0 - theta).unwrap();
            assert!((p.value(i) - p.value(flip)).abs() < 1e-9);
        }
    }

    #[test]
    fn four_elements_add_twelve_db_over_one() {
        let grid = Arc::new(AngularGrid::make(5.0, 5.0, 175.0).unwrap());
        let one = ArrayConfig { phase_bits: 3, ..ArrayConfig::new(1, ElementKind::Patch) };
        let beams = [BeamSpec::steered(0.0), BeamSpec::steered(30.0), BeamSpec::steered(-30.0)];
        let four = synth_pattern_set(&patch4(), &beams, &grid).unwrap();
        let single = synth_pattern_set(&one, &beams[..1], &grid).unwrap();
        let max4 = four.beams().iter().map(|p| p.max_value()).fold(f64::MIN, f64::max);
        let max1 = single.beams()[0].max_value();
        assert!((max4 - max1 - 12.04).abs() <= 0.3);
    }

    #[test]
    fn codebook_beamwidths() {
        for scan in [0.0, 30.0, -30.0] {
            let (bw, _) = scan_plane_beamwidth(&patch4(), &BeamSpec::steered(scan), 0.1).unwrap();
            assert!((25.0..=30.0).contains(&bw), "patch beam {scan}: {bw}");
        }
        let dipole = ArrayConfig { spacing: 0.6, phase_bits: 3, ..ArrayConfig::new(2, ElementKind::Dipole) };
        for scan in [0.0, 45.0, -45.0] {
            let (bw, _) = scan_plane_beamwidth(&dipole, &BeamSpec::steered(scan), 0.1).unwrap();
            assert!((40.0..=45.0).contains(&bw), "dipole beam {scan}: {bw}");
        }
    }

    fn toy_set() -> PatternSet {
        let grid = Arc::new(AngularGrid::make(10.0, 10.0, 170.0).unwrap());
        synth_pattern_set(&patch4(), &[BeamSpec::steered(0.0), BeamSpec::steered(30.0)], &grid).unwrap()
    }

    #[test]
    fn everywhere_mask_drops_thirty_db() {
        let free = toy_set();
        let mask = BlockageMask {
            regions: vec![MaskRegion { region: AngularRegion::everywhere(), delta_db: 30.0, edge_taper_deg: 0.0 }],
        };
        let blocked = apply_blockage_mask(&free, &mask).unwrap();
        for (f, b) in free.beams().iter().zip(blocked.beams()) {
            for (i, v) in f.valid_values() {
                if v - 30.0 > FLOOR_DB {
                    assert_eq!(b.value(i), v - 30.0);
                }
            }
        }
    }

    #[test]
    fn empty_mask_is_identity() {
        let free = toy_set();
        let blocked = apply_blockage_mask(&free, &BlockageMask::default()).unwrap();
        for (f, b) in free.beams().iter().zip(blocked.beams()) {
            for (i, v) in f.valid_values() {
                assert_eq!(b.value(i).to_bits(), v.to_bits());
            }
        }
    }

    #[test]
    fn reflection_region_raises_only_inside() {
        let free = toy_set();
        let region = AngularRegion { phi: [100.0, 140.0], theta: [60.0, 120.0] };
        let mask = BlockageMask { regions: vec![MaskRegion { region, delta_db: -6.0, edge_taper_deg: 0.0 }] };
        let blocked = apply_blockage_mask(&free, &mask).unwrap();
        let grid = free.grid();
        for (f, b) in free.beams().iter().zip(blocked.beams()) {
            for (i, v) in f.valid_values() {
                let (phi, theta) = grid.coords(i);
                if region.contains(phi, theta) {
                    assert_eq!(b.value(i), v + 6.0);
                } else {
                    assert_eq!(b.value(i), v);
                }
            }
        }
    }

    #[test]
    fn later_regions_override_and_taper_blends() {
        let a = MaskRegion { region: AngularRegion::everywhere(), delta_db: 10.0, edge_taper_deg: 0.0 };
        let b = MaskRegion {
            region: AngularRegion { phi: [90.0, 180.0], theta: [60.0, 120.0] },
            delta_db: -4.0,
            edge_taper_deg: 20.0,
        };
        let mask = BlockageMask { regions: vec![a, b] };
        assert_eq!(mask.delta_at(120.0, 90.0), -4.0);
        assert_eq!(mask.delta_at(300.0, 90.0), 10.0);
        // Halfway through the taper: equal blend.
        assert!((mask.delta_at(190.0, 90.0) - 3.0).abs() < 1e-12);
        // Wrapping phi interval.
        let wrap = AngularRegion { phi: [350.0, 10.0], theta: [0.0, 180.0] };
        assert!(wrap.contains(355.0, 40.0) && wrap.contains(5.0, 40.0) && !wrap.contains(20.0, 40.0));
        assert!((wrap.distance_outside(20.0, 40.0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn region_outside_grid_is_rejected() {
        let free = toy_set();
        let mask = BlockageMask {
            regions: vec![MaskRegion {
                region: AngularRegion { phi: [0.0, 90.0], theta: [175.0, 180.0] },
                delta_db: 5.0,
                edge_taper_deg: 0.0,
            }],
        };
        assert!(apply_blockage_mask(&free, &mask).is_err());
    }

    proptest! {
        #[test]
        fn mask_then_inverse_restores(delta in -20.0f64..20.0, p0 in 0.0f64..300.0, t0 in 10.0f64..90.0) {
            let free = toy_set();
            let region = AngularRegion { phi: [p0, p0 + 50.0], theta: [t0, t0 + 60.0] };
            let fwd = BlockageMask { regions: vec![MaskRegion { region, delta_db: delta, edge_taper_deg: 0.0 }] };
            let back = BlockageMask { regions: vec![MaskRegion { region, delta_db: -delta, edge_taper_deg: 0.0 }] };
            let restored = apply_blockage_mask(&apply_blockage_mask(&free, &fwd).unwrap(), &back).unwrap();
            for (f, r) in free.beams().iter().zip(restored.beams()) {
                for (i, v) in f.valid_values() {
                    if v - delta.abs() > FLOOR_DB {
                        prop_assert!((r.value(i) - v).abs() < 1e-12);
                    }
                }
            }
        }

        #[test]
        fn quantization_deficit_is_bounded(n in 1usize..=8, scan in -80.0f64..80.0) {
            let cfg = ArrayConfig { phase_bits: 3, ..ArrayConfig::new(n, ElementKind::Isotropic) };
            let ideal = ArrayConfig { phase_bits: 0, ..cfg.clone() };
            let beam = BeamSpec::steered(scan);
            let q = array_factor_db(&cfg, &steering_weights(&cfg, &beam).unwrap(), scan).unwrap();
            let i = array_factor_db(&ideal, &steering_weights(&ideal, &beam).unwrap(), scan).unwrap();
            prop_assert!(q <= i + 1e-9);
            prop_assert!(i - q <= 0.3);
        }
    }
}
