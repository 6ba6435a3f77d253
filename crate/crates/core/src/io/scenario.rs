//! Scenario JSON: array, codebook, grip masks and analysis parameters for one
//! synthetic study.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::AngularGrid;
use crate::io::scan::{Mode, ScanData};
use crate::models::{ModelSpec, COMPARISON_PERCENTILES, PRESET_3GPP_FLAT_30, PRESET_PRIOR_HAND};
use crate::roi::RoiDefinition;
use crate::synth::{apply_blockage_mask, synth_pattern_set, ArrayConfig, BeamSpec, BlockageMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyLabel {
    pub subarray: String,
    pub orientation: String,
    pub grip: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_step")]
    pub step_deg: f64,
    #[serde(default = "default_theta_min")]
    pub theta_min: f64,
    #[serde(default = "default_theta_max")]
    pub theta_max: f64,
}

fn default_step() -> f64 {
    5.0
}
fn default_theta_min() -> f64 {
    5.0
}
fn default_theta_max() -> f64 {
    175.0
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { step_deg: default_step(), theta_min: default_theta_min(), theta_max: default_theta_max() }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<AngularGrid> {
        AngularGrid::make(self.step_deg, self.theta_min, self.theta_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    /// EIRP thresholds in dBm.
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    /// Coverage percentiles for gross loss.
    #[serde(default = "default_percentiles")]
    pub percentiles: Vec<f64>,
    /// Threshold for the R5 region used by loss statistics and model
    /// comparison; the highest threshold when absent.
    #[serde(default)]
    pub delta5: Option<f64>,
    #[serde(default)]
    pub rois: Option<Vec<RoiDefinition>>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
}

fn default_thresholds() -> Vec<f64> {
    vec![-35.0, -40.0, -45.0]
}
fn default_percentiles() -> Vec<f64> {
    COMPARISON_PERCENTILES.to_vec()
}
fn default_models() -> Vec<ModelSpec> {
    vec![ModelSpec::Preset(PRESET_3GPP_FLAT_30.into()), ModelSpec::Preset(PRESET_PRIOR_HAND.into())]
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            thresholds: default_thresholds(),
            percentiles: default_percentiles(),
            delta5: None,
            rois: None,
            models: default_models(),
        }
    }
}

impl AnalysisSpec {
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::config("thresholds must be a non-empty list of finite values"));
        }
        if self.percentiles.is_empty() || self.percentiles.iter().any(|p| !(*p > 0.0 && *p < 100.0)) {
            return Err(Error::config("percentiles must lie strictly between 0 and 100"));
        }
        if let Some(d) = self.delta5 {
            if !d.is_finite() {
                return Err(Error::config("delta5 must be finite"));
            }
        }
        for m in &self.models {
            m.build()?;
        }
        Ok(())
    }

    pub fn delta5(&self) -> f64 {
        self.delta5.unwrap_or_else(|| self.thresholds.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// The explicit list, or R1 at 5 and 10 dB, R2/R3 at (5, 5) and (5, 10),
    /// R4 and R5 at every threshold.
    pub fn roi_list(&self) -> Vec<RoiDefinition> {
        if let Some(r) = &self.rois {
            return r.clone();
        }
        let mut out = vec![
            RoiDefinition::R1 { delta1: 5.0 },
            RoiDefinition::R1 { delta1: 10.0 },
            RoiDefinition::R2 { delta1: 5.0, delta2: 5.0 },
            RoiDefinition::R2 { delta1: 5.0, delta2: 10.0 },
            RoiDefinition::R3 { delta1: 5.0, delta3: 5.0 },
            RoiDefinition::R3 { delta1: 5.0, delta3: 10.0 },
        ];
        out.extend(self.thresholds.iter().map(|&t| RoiDefinition::R4 { delta1: 5.0, delta4: t }));
        out.extend(self.thresholds.iter().map(|&t| RoiDefinition::R5 { delta5: t }));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub study: Option<StudyLabel>,
    #[serde(default)]
    pub grid: GridSpec,
    pub array: ArrayConfig,
    pub beams: Vec<BeamSpec>,
    pub true_hand: BlockageMask,
    #[serde(default)]
    pub phantom: Option<BlockageMask>,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        if self.beams.is_empty() {
            return Err(Error::config("scenario needs at least one beam"));
        }
        let grid = self.grid.build()?;
        self.true_hand.validate_for(&grid)?;
        if let Some(p) = &self.phantom {
            p.validate_for(&grid)?;
        }
        self.analysis.validate()
    }

    /// Freespace, true-hand and (if configured) phantom pattern sets.
    pub fn synthesize(&self) -> Result<ScanData> {
        let grid = Arc::new(self.grid.build()?);
        let free = synth_pattern_set(&self.array, &self.beams, &grid)?;
        let mut out = ScanData::new();
        out.insert(Mode::TrueHand, apply_blockage_mask(&free, &self.true_hand)?);
        if let Some(p) = &self.phantom {
            out.insert(Mode::Phantom, apply_blockage_mask(&free, p)?);
        }
        out.insert(Mode::Freespace, free);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "mini",
        "array": {"n_elements": 4, "element": "patch", "phase_bits": 3, "tx_power_dbm": -40},
        "beams": [{"scan_angle": -30}, {"scan_angle": 0}, {"scan_angle": 30}],
        "true_hand": {"regions": [{"phi": [150, 210], "theta": [60, 120], "delta_db": 20}]}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.grid, GridSpec::default());
        assert_eq!(s.analysis.thresholds, vec![-35.0, -40.0, -45.0]);
        assert_eq!(s.analysis.delta5(), -35.0);
        assert_eq!(s.analysis.roi_list().len(), 12);
        assert_eq!(s.array.spacing, 0.5);
    }

    #[test]
    fn synthesize_gives_blocked_below_free() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        let data = s.synthesize().unwrap();
        assert_eq!(data.len(), 2);
        let free = &data[&Mode::Freespace];
        let hand = &data[&Mode::TrueHand];
        assert_eq!(free.len(), 3);
        let g = free.grid();
        let inside = g.find(180.0, 90.0).unwrap();
        let outside = g.find(0.0, 90.0).unwrap();
        assert!((free.beams()[1].value(inside) - hand.beams()[1].value(inside) - 20.0).abs() < 1e-12);
        assert_eq!(free.beams()[1].value(outside), hand.beams()[1].value(outside));
    }

    #[test]
    fn unknown_field_is_rejected() {
        let text = MINIMAL.replace("\"name\"", "\"nmae\"");
        assert!(Scenario::from_json(&text).is_err());
    }

    #[test]
    fn bad_percentile_is_rejected() {
        let text = MINIMAL.replace("\"name\": \"mini\",", "\"name\": \"mini\", \"analysis\": {\"percentiles\": [100]},");
        assert!(matches!(Scenario::from_json(&text), Err(Error::Config(_))));
    }
}
