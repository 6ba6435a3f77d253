//! Competing blockage models applied to Freespace patterns, and CDF-level
//! comparison of their outputs.

use serde::{Deserialize, Serialize};

use crate::analysis::{percentile_value, weighted_cdf_in, WeightedCdf};
use crate::error::{Error, Result};
use crate::grid::{ensure_same_grid, GridMask, Pattern, PatternKind, WeightField};
use crate::synth::AngularRegion;

pub const PRESET_3GPP_FLAT_30: &str = "3gpp-flat-30";
pub const PRESET_PRIOR_HAND: &str = "prior-hand-15.3";
pub const PRESET_PRIOR_BODY: &str = "prior-body-8.5";

/// Default self-blocking rectangle for the flat-loss preset (portrait
/// geometry: azimuth 260° ± 60°, elevation 100° ± 40°).
pub const FLAT_REGION_DEFAULT: AngularRegion = AngularRegion { phi: [200.0, 320.0], theta: [60.0, 140.0] };

pub const FLAT_LOSS_DEFAULT_DB: f64 = 30.0;

pub const COMPARISON_PERCENTILES: [f64; 4] = [90.0, 80.0, 50.0, 20.0];

#[derive(Debug, Clone)]
pub enum BlockageModel {
    /// Uniform loss inside an angular rectangle, none outside.
    FlatRegion { region: AngularRegion, loss_db: f64 },
    ConstantLoss { loss_db: f64 },
    /// Per-direction loss taken from a measured (or synthetic) loss field.
    MeasuredMask { loss: Pattern },
}

/// JSON form of a model: a preset name or an explicit parameter object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Preset(String),
    Explicit(ExplicitModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExplicitModel {
    FlatRegion {
        name: String,
        #[serde(default)]
        region: Option<AngularRegion>,
        #[serde(default = "default_flat_loss")]
        loss_db: f64,
    },
    ConstantLoss {
        name: String,
        loss_db: f64,
    },
}

fn default_flat_loss() -> f64 {
    FLAT_LOSS_DEFAULT_DB
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        match self {
            ModelSpec::Preset(n) => n,
            ModelSpec::Explicit(ExplicitModel::FlatRegion { name, .. })
            | ModelSpec::Explicit(ExplicitModel::ConstantLoss { name, .. }) => name,
        }
    }

    pub fn build(&self) -> Result<BlockageModel> {
        match self {
            ModelSpec::Preset(name) => BlockageModel::preset(name),
            ModelSpec::Explicit(ExplicitModel::FlatRegion { region, loss_db, .. }) => Ok(BlockageModel::FlatRegion {
                region: region.unwrap_or(FLAT_REGION_DEFAULT),
                loss_db: *loss_db,
            }),
            ModelSpec::Explicit(ExplicitModel::ConstantLoss { loss_db, .. }) => {
                Ok(BlockageModel::ConstantLoss { loss_db: *loss_db })
            }
        }
    }
}

impl BlockageModel {
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            PRESET_3GPP_FLAT_30 => {
                Ok(BlockageModel::FlatRegion { region: FLAT_REGION_DEFAULT, loss_db: FLAT_LOSS_DEFAULT_DB })
            }
            PRESET_PRIOR_HAND => Ok(BlockageModel::ConstantLoss { loss_db: 15.3 }),
            PRESET_PRIOR_BODY => Ok(BlockageModel::ConstantLoss { loss_db: 8.5 }),
            other => Err(Error::config(format!(
                "unknown model preset {other:?} (known: {PRESET_3GPP_FLAT_30}, {PRESET_PRIOR_HAND}, {PRESET_PRIOR_BODY})"
            ))),
        }
    }

    fn validate(&self, free: &Pattern) -> Result<()> {
        match self {
            BlockageModel::FlatRegion { region, loss_db } => {
                region.validate_for(free.grid())?;
                finite(*loss_db)
            }
            BlockageModel::ConstantLoss { loss_db } => finite(*loss_db),
            BlockageModel::MeasuredMask { loss } => ensure_same_grid(free.grid(), loss.grid()),
        }
    }
}

fn finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config("model loss must be finite"))
    }
}

pub fn apply_model(free: &Pattern, model: &BlockageModel) -> Result<Pattern> {
    model.validate(free)?;
    let grid = free.grid();
    match model {
        BlockageModel::FlatRegion { region, loss_db } => {
            let values = (0..grid.len())
                .map(|i| {
                    let (phi, theta) = grid.coords(i);
                    if region.contains(phi, theta) {
                        free.value(i) - loss_db
                    } else {
                        free.value(i)
                    }
                })
                .collect();
            Pattern::new(grid.clone(), values, PatternKind::Eirp)
        }
        BlockageModel::ConstantLoss { loss_db } => free.map(|v| v - loss_db),
        BlockageModel::MeasuredMask { loss } => free.zip_with(loss, PatternKind::Eirp, |v, l| v - l),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PercentileDelta {
    pub percentile: f64,
    pub value_dbm: f64,
    /// Freespace value minus candidate value.
    pub delta_db: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateComparison {
    pub name: String,
    pub percentiles: Vec<PercentileDelta>,
    #[serde(skip)]
    pub cdf: WeightedCdf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossover {
    pub first: usize,
    pub second: usize,
    /// EIRP where the sign of `F_first - F_second` flips, at 0.1 dB resolution.
    pub eirp_dbm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub freespace: Vec<PercentileDelta>,
    pub candidates: Vec<CandidateComparison>,
    pub crossovers: Vec<Crossover>,
    #[serde(skip)]
    pub freespace_cdf: WeightedCdf,
}

const CDF_EPS: f64 = 1e-12;

/// EIRP values where `a - b` changes sign, evaluated on the merged value set.
/// Stretches where the CDFs agree do not count as a sign; a crossing is
/// located at the first value where the earlier sign stops holding.
pub fn cdf_crossovers(a: &WeightedCdf, b: &WeightedCdf) -> Vec<f64> {
    let mut xs: Vec<f64> = a.values().iter().chain(b.values()).copied().collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let mut out = Vec::new();
    let mut last_sign = 0i8;
    let mut tie_start: Option<f64> = None;
    for x in xs {
        let d = a.eval(x) - b.eval(x);
        let sign = if d > CDF_EPS {
            1
        } else if d < -CDF_EPS {
            -1
        } else {
            0
        };
        if sign == 0 {
            tie_start.get_or_insert(x);
            continue;
        }
        if last_sign != 0 && sign != last_sign {
            let at = (tie_start.unwrap_or(x) * 10.0).round() / 10.0;
            // Flips that collapse onto one reported value count once.
            if out.last() != Some(&at) {
                out.push(at);
            }
        }
        tie_start = None;
        last_sign = sign;
    }
    out
}

pub fn compare_models(
    free: &Pattern,
    candidates: &[(String, Pattern)],
    roi: &GridMask,
    w: &WeightField,
) -> Result<ComparisonReport> {
    let freespace_cdf = weighted_cdf_in(free, w, roi)?;
    let free_values = COMPARISON_PERCENTILES
        .iter()
        .map(|&p| percentile_value(&freespace_cdf, p))
        .collect::<Result<Vec<_>>>()?;
    let freespace = COMPARISON_PERCENTILES
        .iter()
        .zip(&free_values)
        .map(|(&p, &v)| PercentileDelta { percentile: p, value_dbm: v, delta_db: 0.0 })
        .collect();

    let mut entries = Vec::with_capacity(candidates.len());
    for (name, pattern) in candidates {
        ensure_same_grid(free.grid(), pattern.grid())?;
        let cdf = weighted_cdf_in(pattern, w, roi)?;
        let percentiles = COMPARISON_PERCENTILES
            .iter()
            .zip(&free_values)
            .map(|(&p, &fv)| {
                let v = percentile_value(&cdf, p)?;
                Ok(PercentileDelta { percentile: p, value_dbm: v, delta_db: fv - v })
            })
            .collect::<Result<Vec<_>>>()?;
        entries.push(CandidateComparison { name: name.clone(), percentiles, cdf });
    }

    let mut crossovers = Vec::new();
    for i in 0..entries.len() {
        for j in i + 1..entries.len() {
            for eirp_dbm in cdf_crossovers(&entries[i].cdf, &entries[j].cdf) {
                crossovers.push(Crossover { first: i, second: j, eirp_dbm });
            }
        }
    }
    Ok(ComparisonReport { freespace, candidates: entries, crossovers, freespace_cdf })
}
