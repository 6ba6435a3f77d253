//! Full analysis of one study and its on-disk bundle.
//!
//! Bundle layout:
//!
//! | file | content |
//! |------|---------|
//! | `summary.csv` | one Table-I style row |
//! | `summary.json` | everything below plus the full parameter set |
//! | `coverage.csv` | coverage lost and R5-over-R1 gain per mode and threshold |
//! | `percentile_loss.csv` | gross loss per mode and percentile |
//! | `roi_stats.csv` | loss statistics per mode, region and weighting |
//! | `model_comparison.csv` | percentile values of every candidate model |
//! | `overlay_<mode>.svg`, `eirp_cdf.svg`, `loss_cdf.svg`, `model_cdf.svg` | plots |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::analysis::{
    overlay_best_beam, weighted_cdf, weighted_cdf_in, PERCENTILE_CONVENTION, THRESHOLD_CONVENTION,
};
use crate::error::{Error, Result};
use crate::grid::{GridMask, Pattern, WeightField};
use crate::io::scan::{Mode, ScanData};
use crate::io::scenario::{AnalysisSpec, Scenario, StudyLabel};
use crate::io::svg::{heatmap_svg, line_chart_svg, Series};
use crate::models::{apply_model, compare_models, ComparisonReport};
use crate::roi::{roi_r5, RoiDefinition, RELATIVE_CONVENTION};
use crate::stats::{gaussian_fit, loss_field, loss_stats, study_summary, GaussianFit, LossStats, Range, SummaryTable};

pub const SUMMARY_HEADER: &str =
    "study,subarray,orientation,grip,gross_loss_db,relative_sphere_lost_pct,relative_roi_improvement_pct";

#[derive(Debug, Clone, Serialize)]
pub struct Conventions {
    pub percentile: &'static str,
    pub threshold: &'static str,
    pub relative: &'static str,
    pub weighting: &'static str,
    pub loss: &'static str,
    pub overlay: &'static str,
    pub median: &'static str,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            percentile: PERCENTILE_CONVENTION,
            threshold: THRESHOLD_CONVENTION,
            relative: RELATIVE_CONVENTION,
            weighting: "sin(theta), normalized to 1 over valid points",
            loss: "freespace overlay minus blocked overlay, dB",
            overlay: "max over codebook beams, ties to lowest beam index",
            median: "smallest value with cumulative weight >= 0.5",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub phi_step_deg: Option<f64>,
    pub theta_step_deg: Option<f64>,
    pub theta_min_deg: f64,
    pub theta_max_deg: f64,
    pub n_phi: usize,
    pub n_theta: usize,
    pub n_valid: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Parameters {
    pub grid: GridInfo,
    pub thresholds_dbm: Vec<f64>,
    pub percentiles: Vec<f64>,
    pub delta5_dbm: f64,
    pub rois: Vec<RoiDefinition>,
    pub analysis: AnalysisSpec,
    /// Present when the patterns were synthesized from a scenario.
    pub scenario: Option<Scenario>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoiRow {
    pub roi: RoiDefinition,
    pub label: String,
    /// `None` when the region is empty.
    pub weighted: Option<LossStats>,
    pub uniform: Option<LossStats>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub mode: Mode,
    pub summary: SummaryTable,
    pub r5_loss: Option<LossStats>,
    pub gaussian_fit: Option<GaussianFit>,
    pub rois: Vec<RoiRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedCrossover {
    pub first: String,
    pub second: String,
    pub eirp_dbm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelComparison {
    pub reference_mode: Mode,
    pub roi: RoiDefinition,
    pub candidates: Vec<String>,
    pub report: ComparisonReport,
    pub crossovers: Vec<NamedCrossover>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub study: String,
    pub subarray: String,
    pub orientation: String,
    pub grip: String,
    pub mode: Mode,
    pub gross_loss_db: Range,
    pub relative_sphere_lost_pct: Option<Range>,
    pub relative_roi_improvement_pct: Option<Range>,
}

fn fmt_1dp(v: f64) -> String {
    let s = format!("{v:.1}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

fn fmt_range(r: Option<Range>) -> String {
    match r {
        Some(r) => format!("{} to {}", fmt_1dp(r.min), fmt_1dp(r.max)),
        None => "n/a".into(),
    }
}

impl SummaryRow {
    pub fn csv_line(&self) -> String {
        [
            self.study.as_str(),
            &self.subarray,
            &self.orientation,
            &self.grip,
            &fmt_range(Some(self.gross_loss_db)),
            &fmt_range(self.relative_sphere_lost_pct),
            &fmt_range(self.relative_roi_improvement_pct),
        ]
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub study: String,
    pub label: Option<StudyLabel>,
    pub conventions: Conventions,
    pub parameters: Parameters,
    pub summary: SummaryRow,
    pub modes: Vec<ModeReport>,
    pub model_comparison: Option<ModelComparison>,
}

/// A report and its rendered files, keyed by file name.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub report: Report,
    pub files: BTreeMap<String, String>,
}

impl ReportBundle {
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

fn opt_stats(loss: &Pattern, roi: &GridMask, w: &WeightField) -> Result<Option<LossStats>> {
    match loss_stats(loss, roi, w) {
        Ok(s) => Ok(Some(s)),
        Err(Error::EmptyRoi) => Ok(None),
        Err(e) => Err(e),
    }
}

fn num(v: f64) -> String {
    format!("{v:.6}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Analyse `data` (Freespace plus at least one blocked mode). The summary
/// row and model comparison use the true hand when present, else the
/// phantom.
pub fn build_report(
    study: &str,
    label: Option<StudyLabel>,
    analysis: &AnalysisSpec,
    scenario: Option<&Scenario>,
    data: &ScanData,
) -> Result<ReportBundle> {
    analysis.validate()?;
    let free_set = data.get(&Mode::Freespace).ok_or_else(|| Error::config("scan has no freespace patterns"))?;
    let blocked_modes: Vec<Mode> = data.keys().copied().filter(|m| *m != Mode::Freespace).collect();
    let primary = if data.contains_key(&Mode::TrueHand) {
        Mode::TrueHand
    } else {
        *blocked_modes.first().ok_or_else(|| Error::config("scan has no blocked (phantom or true_hand) patterns"))?
    };

    let grid = free_set.grid().clone();
    let w = WeightField::solid_angle(grid.clone())?;
    let w_uniform = WeightField::uniform(grid.clone())?;
    let free = overlay_best_beam(free_set)?.pattern;
    let delta5 = analysis.delta5();
    let rois = analysis.roi_list();

    let mut modes = Vec::new();
    let mut overlays = BTreeMap::new();
    for &mode in &blocked_modes {
        let set = &data[&mode];
        let blocked = overlay_best_beam(set)?.pattern;
        let summary = study_summary(free_set, set, &analysis.thresholds, &analysis.percentiles)?;
        let loss = loss_field(&free, &blocked)?;
        let r5 = roi_r5(&free, &blocked, delta5)?;
        let r5_loss = opt_stats(&loss, r5.mask(), &w)?;
        let fit = match r5_loss {
            Some(_) => Some(gaussian_fit(&loss, r5.mask(), &w)?),
            None => None,
        };
        let roi_rows = rois
            .iter()
            .map(|def| {
                let m = def.evaluate(&free, &blocked)?;
                Ok(RoiRow {
                    roi: *def,
                    label: def.label(),
                    weighted: opt_stats(&loss, m.mask(), &w)?,
                    uniform: opt_stats(&loss, m.mask(), &w_uniform)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        modes.push(ModeReport { mode, summary, r5_loss, gaussian_fit: fit, rois: roi_rows });
        overlays.insert(mode, (blocked, loss, r5));
    }

    let (primary_blocked, primary_loss, primary_r5) = &overlays[&primary];
    let primary_report = modes.iter().find(|m| m.mode == primary).expect("primary mode analysed");
    let primary_fit = primary_report.gaussian_fit;

    let label_or = |f: fn(&StudyLabel) -> &String| label.as_ref().map(|l| f(l).clone()).unwrap_or_default();
    let summary = SummaryRow {
        study: study.to_string(),
        subarray: label_or(|l| &l.subarray),
        orientation: label_or(|l| &l.orientation),
        grip: label_or(|l| &l.grip),
        mode: primary,
        gross_loss_db: primary_report.summary.gross_loss_db,
        relative_sphere_lost_pct: primary_report.summary.relative_coverage_lost_pct,
        relative_roi_improvement_pct: primary_report.summary.relative_roi_improvement_pct,
    };

    // Model comparison over R5(delta5) of the primary mode.
    let model_comparison = if primary_r5.is_empty() {
        None
    } else {
        let mut candidates = vec![(primary.to_string(), primary_blocked.clone())];
        for spec in &analysis.models {
            candidates.push((spec.name().to_string(), apply_model(&free, &spec.build()?)?));
        }
        let report = compare_models(&free, &candidates, primary_r5.mask(), &w)?;
        let names: Vec<String> = candidates.iter().map(|c| c.0.clone()).collect();
        let crossovers = report
            .crossovers
            .iter()
            .map(|c| NamedCrossover { first: names[c.first].clone(), second: names[c.second].clone(), eirp_dbm: c.eirp_dbm })
            .collect();
        Some(ModelComparison { reference_mode: primary, roi: *primary_r5.definition(), candidates: names, report, crossovers })
    };

    let parameters = Parameters {
        grid: GridInfo {
            phi_step_deg: grid.phi_step(),
            theta_step_deg: grid.theta_step(),
            theta_min_deg: grid.theta_values()[0],
            theta_max_deg: grid.theta_values()[grid.n_theta() - 1],
            n_phi: grid.n_phi(),
            n_theta: grid.n_theta(),
            n_valid: grid.n_valid(),
        },
        thresholds_dbm: analysis.thresholds.clone(),
        percentiles: analysis.percentiles.clone(),
        delta5_dbm: delta5,
        rois,
        analysis: analysis.clone(),
        scenario: scenario.cloned(),
    };

    let report = Report {
        study: study.to_string(),
        label,
        conventions: Conventions::default(),
        parameters,
        summary,
        modes,
        model_comparison,
    };

    let mut files = BTreeMap::new();
    files.insert("summary.csv".into(), format!("{SUMMARY_HEADER}\n{}\n", report.summary.csv_line()));
    files.insert("summary.json".into(), serde_json::to_string_pretty(&report)? + "\n");
    files.insert("coverage.csv".into(), coverage_csv(&report));
    files.insert("percentile_loss.csv".into(), percentile_csv(&report));
    files.insert("roi_stats.csv".into(), roi_csv(&report));
    if let Some(mc) = &report.model_comparison {
        files.insert("model_comparison.csv".into(), model_csv(mc));
    }

    // Plots.
    files.insert("overlay_freespace.svg".into(), heatmap_svg(&free, "Freespace overlay EIRP", "dBm"));
    let mut eirp_series = vec![Series::cdf("freespace", &weighted_cdf(&free, &w)?)];
    for (mode, (blocked, _, _)) in &overlays {
        files.insert(format!("overlay_{mode}.svg"), heatmap_svg(blocked, &format!("{mode} overlay EIRP"), "dBm"));
        eirp_series.push(Series::cdf(mode.to_string(), &weighted_cdf(blocked, &w)?));
    }
    files.insert(
        "eirp_cdf.svg".into(),
        line_chart_svg(&format!("{study}: overlay EIRP over the sphere"), "EIRP (dBm)", "CDF", &eirp_series),
    );

    let loss_title = format!("{study}: {primary} loss over R5(Δ5={delta5})");
    let loss_series = match (primary_fit, weighted_cdf_in(primary_loss, &w, primary_r5.mask())) {
        (Some(fit), Ok(cdf)) => {
            let span = (cdf.max() - cdf.min()).max(1.0);
            vec![
                Series::cdf("empirical", &cdf),
                Series::line(
                    format!("gaussian mu={:.1} sigma={:.1}", fit.mu, fit.sigma),
                    fit.curve(cdf.min() - 0.1 * span, cdf.max() + 0.1 * span, 121),
                ),
            ]
        }
        _ => Vec::new(),
    };
    files.insert("loss_cdf.svg".into(), line_chart_svg(&loss_title, "loss (dB)", "CDF", &loss_series));

    let mut model_series = Vec::new();
    if let Some(mc) = &report.model_comparison {
        model_series.push(Series::cdf("freespace", &mc.report.freespace_cdf));
        for c in &mc.report.candidates {
            model_series.push(Series::cdf(c.name.clone(), &c.cdf));
        }
    }
    files.insert(
        "model_cdf.svg".into(),
        line_chart_svg(&format!("{study}: blockage models over R5(Δ5={delta5})"), "EIRP (dBm)", "CDF", &model_series),
    );

    Ok(ReportBundle { report, files })
}

fn coverage_csv(r: &Report) -> String {
    let mut out = String::from(
        "mode,threshold_dbm,free_pct,blocked_pct,lost_abs_pct,lost_rel_pct,r1_pct,r5_pct,improvement_abs_pct,improvement_rel_pct\n",
    );
    for m in &r.modes {
        for row in &m.summary.thresholds {
            let c = &row.coverage;
            let i = &row.improvement;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                m.mode,
                row.threshold_dbm,
                num(c.free_pct),
                num(c.blocked_pct),
                num(c.abs_pct),
                opt_num(c.rel_pct),
                num(i.base_pct),
                num(i.enhanced_pct),
                num(i.abs_pct),
                opt_num(i.rel_pct)
            );
        }
    }
    out
}

fn percentile_csv(r: &Report) -> String {
    let mut out = String::from("mode,percentile,loss_db\n");
    for m in &r.modes {
        for p in &m.summary.percentile_losses {
            let _ = writeln!(out, "{},{},{}", m.mode, p.percentile, num(p.loss_db));
        }
    }
    out
}

fn roi_csv(r: &Report) -> String {
    let mut out = String::from("mode,roi,weighting,sphere_fraction_pct,n_points,mean_db,median_db,std_db\n");
    for m in &r.modes {
        for row in &m.rois {
            for (weighting, stats) in [("sin_theta", &row.weighted), ("uniform", &row.uniform)] {
                let _ = match stats {
                    Some(s) => writeln!(
                        out,
                        "{},{},{weighting},{},{},{},{},{}",
                        m.mode,
                        csv_field(&row.label),
                        num(s.sphere_fraction),
                        s.n_points,
                        num(s.mean),
                        num(s.median),
                        num(s.std_dev)
                    ),
                    None => writeln!(out, "{},{},{weighting},0,0,,,", m.mode, csv_field(&row.label)),
                };
            }
        }
    }
    out
}

fn model_csv(mc: &ModelComparison) -> String {
    let mut out = String::from("candidate,percentile,value_dbm,delta_db\n");
    for p in &mc.report.freespace {
        let _ = writeln!(out, "freespace,{},{},{}", p.percentile, num(p.value_dbm), num(p.delta_db));
    }
    for c in &mc.report.candidates {
        for p in &c.percentiles {
            let _ = writeln!(out, "{},{},{},{}", csv_field(&c.name), p.percentile, num(p.value_dbm), num(p.delta_db));
        }
    }
    out
}

/// Bundle for a synthesized scenario.
pub fn scenario_report(scenario: &Scenario) -> Result<ReportBundle> {
    let data = scenario.synthesize()?;
    build_report(&scenario.name, scenario.study.clone(), &scenario.analysis, Some(scenario), &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> Scenario {
        Scenario::from_json(
            r#"{
            "name": "t",
            "study": {"subarray": "4x1 patch", "orientation": "portrait", "grip": "hard"},
            "grid": {"step_deg": 10, "theta_min": 10, "theta_max": 170},
            "array": {"n_elements": 4, "element": "patch", "phase_bits": 3, "tx_power_dbm": -40, "element_peak_gain_dbi": 5},
            "beams": [{"scan_angle": -30}, {"scan_angle": 0}, {"scan_angle": 30}],
            "true_hand": {"regions": [{"phi": [120, 240], "theta": [40, 140], "delta_db": 20, "edge_taper_deg": 10}]},
            "phantom": {"regions": [{"phi": [150, 210], "theta": [60, 120], "delta_db": 10}]}
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn bundle_has_all_files_and_table_one_shape() {
        let b = scenario_report(&scenario()).unwrap();
        for f in [
            "summary.csv",
            "summary.json",
            "coverage.csv",
            "roi_stats.csv",
            "overlay_freespace.svg",
            "overlay_true_hand.svg",
            "overlay_phantom.svg",
            "eirp_cdf.svg",
            "loss_cdf.svg",
            "model_cdf.svg",
        ] {
            assert!(b.files.contains_key(f), "missing {f}");
        }
        let csv = &b.files["summary.csv"];
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split(',').count(), 7);
        assert_eq!(lines[1].split(',').count(), 7);
        assert!(lines[1].starts_with("t,4x1 patch,portrait,hard,"));
        assert_eq!(b.report.summary.mode, Mode::TrueHand);
        assert_eq!(b.report.modes.len(), 2);
    }

    #[test]
    fn bundle_is_deterministic() {
        let a = scenario_report(&scenario()).unwrap();
        let b = scenario_report(&scenario()).unwrap();
        assert_eq!(a.files, b.files);
    }

    #[test]
    fn json_embeds_parameters() {
        let b = scenario_report(&scenario()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&b.files["summary.json"]).unwrap();
        assert_eq!(v["parameters"]["delta5_dbm"], -35.0);
        assert_eq!(v["parameters"]["thresholds_dbm"].as_array().unwrap().len(), 3);
        assert!(v["conventions"]["percentile"].is_string());
        assert_eq!(v["parameters"]["scenario"]["array"]["n_elements"], 4);
    }

    #[test]
    fn freespace_only_scan_is_rejected() {
        let mut data = scenario().synthesize().unwrap();
        data.retain(|m, _| *m == Mode::Freespace);
        let s = scenario();
        assert!(matches!(build_report("x", None, &s.analysis, None, &data), Err(Error::Config(_))));
    }
}
