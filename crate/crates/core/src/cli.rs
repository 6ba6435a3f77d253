//! `mmwave-blockage` command line.
//!
//! Exit status: 0 on success, 2 on usage errors, 1 when the input data or
//! configuration cannot be processed. Diagnostics go to stderr.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    coverage_above, overlay_best_beam, percentile_value, weighted_cdf, PERCENTILE_CONVENTION, THRESHOLD_CONVENTION,
};
use crate::error::{Error, Result};
use crate::grid::{fraction_of_sphere, Pattern, WeightField};
use crate::io::report::{build_report, scenario_report};
use crate::io::scan::{parse_scan_csv, write_mask_csv, write_scan_csv, Mode, ScanData};
use crate::io::scenario::{AnalysisSpec, Scenario};
use crate::io::svg::{heatmap_svg, line_chart_svg, Series};
use crate::models::{apply_model, compare_models, ModelSpec};
use crate::roi::{RoiDefinition, RELATIVE_CONVENTION};
use crate::stats::{gaussian_fit, loss_field, loss_stats};

#[derive(Debug, Parser)]
#[command(name = "mmwave-blockage", version, about = "Hand and body blockage analysis for mmWave UE beam patterns")]
pub struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a scan CSV from a scenario file.
    Synth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Best-beam overlay of one mode.
    Overlay {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "freespace")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Weighted EIRP CDFs, coverage at thresholds and percentile values.
    Cdf {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        levels: Levels,
        #[arg(long)]
        out: PathBuf,
    },
    /// Region-of-interest mask and its sphere coverage.
    Roi {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        roi: RoiArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Loss statistics and Gaussian fit over a region of interest.
    Stats {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        roi: RoiArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare blockage models against the measured blocked pattern.
    Compare {
        #[command(flatten)]
        input: Input,
        /// Blocked mode used as the reference candidate.
        #[arg(long, value_enum, default_value = "true-hand")]
        mode: ModeArg,
        #[arg(long, allow_negative_numbers = true)]
        delta5: Option<f64>,
        /// Model presets or JSON model objects, comma separated.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Full report bundle: summary tables, statistics and plots.
    Report {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        levels: Levels,
        #[arg(long, allow_negative_numbers = true)]
        delta5: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
        /// Study name when reading a scan file (defaults to the file stem).
        #[arg(long)]
        study: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Input {
    /// Scenario JSON; patterns are synthesized.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Scan CSV (`phi,theta,beam_id,mode,value_dbm`).
    #[arg(long)]
    pub scan: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Levels {
    /// EIRP thresholds in dBm, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub threshold: Option<Vec<f64>>,
    /// Coverage percentiles, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub percentiles: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Freespace,
    Phantom,
    TrueHand,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Freespace => Mode::Freespace,
            ModeArg::Phantom => Mode::Phantom,
            ModeArg::TrueHand => Mode::TrueHand,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoiKindArg {
    R1,
    R2,
    R3,
    R4,
    R5,
}

#[derive(Debug, Args)]
pub struct RoiArgs {
    #[arg(long, value_enum, default_value = "r5")]
    pub roi_kind: RoiKindArg,
    #[arg(long, default_value_t = 5.0)]
    pub delta1: f64,
    #[arg(long, default_value_t = 5.0)]
    pub delta2: f64,
    #[arg(long, default_value_t = 5.0)]
    pub delta3: f64,
    #[arg(long, default_value_t = -35.0, allow_negative_numbers = true)]
    pub delta4: f64,
    #[arg(long, default_value_t = -35.0, allow_negative_numbers = true)]
    pub delta5: f64,
    /// Blocked mode paired with the Freespace pattern.
    #[arg(long, value_enum, default_value = "true-hand")]
    pub mode: ModeArg,
}

impl RoiArgs {
    fn definition(&self) -> RoiDefinition {
        match self.roi_kind {
            RoiKindArg::R1 => RoiDefinition::R1 { delta1: self.delta1 },
            RoiKindArg::R2 => RoiDefinition::R2 { delta1: self.delta1, delta2: self.delta2 },
            RoiKindArg::R3 => RoiDefinition::R3 { delta1: self.delta1, delta3: self.delta3 },
            RoiKindArg::R4 => RoiDefinition::R4 { delta1: self.delta1, delta4: self.delta4 },
            RoiKindArg::R5 => RoiDefinition::R5 { delta5: self.delta5 },
        }
    }
}

/// Parse `argv` (including the program name), run, and return the exit
/// status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct Loaded {
    name: String,
    scenario: Option<Scenario>,
    data: ScanData,
}

fn load(input: &Input, verbose: bool) -> Result<Loaded> {
    if let Some(path) = &input.scenario {
        if verbose {
            eprintln!("synthesizing patterns from {}", path.display());
        }
        let s = Scenario::load(path)?;
        let data = s.synthesize()?;
        Ok(Loaded { name: s.name.clone(), scenario: Some(s), data })
    } else {
        let path = input.scan.as_ref().expect("clap enforces one input");
        if verbose {
            eprintln!("reading {}", path.display());
        }
        let data = parse_scan_csv(path)?;
        let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "scan".into());
        Ok(Loaded { name, scenario: None, data })
    }
}

fn mode_pattern(data: &ScanData, mode: Mode) -> Result<Pattern> {
    let set = data.get(&mode).ok_or_else(|| Error::config(format!("no {mode} patterns in input")))?;
    Ok(overlay_best_beam(set)?.pattern)
}

fn write(dir: &Path, name: &str, body: impl AsRef<[u8]>) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), body)?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    write(dir, name, serde_json::to_string_pretty(value)? + "\n")
}

fn parse_models(raw: &[String]) -> Result<Vec<ModelSpec>> {
    raw.iter()
        .map(|s| {
            let s = s.trim();
            if s.starts_with('{') {
                Ok(serde_json::from_str(s)?)
            } else {
                Ok(ModelSpec::Preset(s.to_string()))
            }
        })
        .collect()
}

/// Scenario analysis settings with command-line overrides applied.
fn analysis_for(
    loaded: &Loaded,
    levels: Option<&Levels>,
    delta5: Option<f64>,
    models: Option<&Vec<String>>,
) -> Result<AnalysisSpec> {
    let mut a = loaded.scenario.as_ref().map(|s| s.analysis.clone()).unwrap_or_default();
    if let Some(l) = levels {
        if let Some(t) = &l.threshold {
            a.thresholds = t.clone();
            // Scenario RoI lists are tied to the scenario thresholds.
            a.rois = None;
        }
        if let Some(p) = &l.percentiles {
            a.percentiles = p.clone();
        }
    }
    if delta5.is_some() {
        a.delta5 = delta5;
    }
    if let Some(m) = models {
        a.models = parse_models(m)?;
    }
    a.validate()?;
    Ok(a)
}

#[derive(Serialize)]
struct SynthMeta<'a> {
    scenario: &'a Scenario,
    n_phi: usize,
    n_theta: usize,
    modes: Vec<Mode>,
    beams: usize,
}

#[derive(Serialize)]
struct CdfMode {
    mode: Mode,
    coverage_pct: Vec<(f64, f64)>,
    percentile_dbm: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct CdfReport<'a> {
    percentile_convention: &'a str,
    threshold_convention: &'a str,
    thresholds_dbm: &'a [f64],
    percentiles: &'a [f64],
    modes: Vec<CdfMode>,
}

#[derive(Serialize)]
struct RoiReport {
    roi: RoiDefinition,
    label: String,
    blocked_mode: Mode,
    threshold_convention: &'static str,
    points: usize,
    sphere_fraction_pct: f64,
    g_max_dbm: f64,
    g_max_body_dbm: Option<f64>,
}

#[derive(Serialize)]
struct StatsReport {
    roi: RoiDefinition,
    label: String,
    blocked_mode: Mode,
    weighted: crate::stats::LossStats,
    uniform: crate::stats::LossStats,
    gaussian_fit: crate::stats::GaussianFit,
}

#[derive(Serialize)]
struct CompareReport<'a> {
    roi: RoiDefinition,
    relative_convention: &'a str,
    percentile_convention: &'a str,
    candidates: Vec<String>,
    models: &'a [ModelSpec],
    comparison: &'a crate::models::ComparisonReport,
}

fn execute(cli: &Cli) -> Result<()> {
    let verbose = cli.verbose;
    match &cli.command {
        Command::Synth { scenario, out } => {
            let s = Scenario::load(scenario)?;
            let data = s.synthesize()?;
            fs::create_dir_all(out)?;
            write_scan_csv(out.join("scan.csv"), &data)?;
            let grid = data[&Mode::Freespace].grid();
            let meta = SynthMeta {
                scenario: &s,
                n_phi: grid.n_phi(),
                n_theta: grid.n_theta(),
                modes: data.keys().copied().collect(),
                beams: s.beams.len(),
            };
            write_json(out, "metadata.json", &meta)?;
        }
        Command::Overlay { input, mode, out } => {
            let loaded = load(input, verbose)?;
            let mode = Mode::from(*mode);
            let set = loaded.data.get(&mode).ok_or_else(|| Error::config(format!("no {mode} patterns in input")))?;
            let overlay = overlay_best_beam(set)?;
            let grid = overlay.pattern.grid();
            let mut csv = String::from("phi,theta,eirp_dbm,best_beam\n");
            for (i, v) in overlay.pattern.valid_values() {
                let (phi, theta) = grid.coords(i);
                let _ = writeln!(csv, "{phi},{theta},{v:.6},{}", overlay.best_beam[i]);
            }
            write(out, "overlay.csv", csv)?;
            write(out, &format!("overlay_{mode}.svg"), heatmap_svg(&overlay.pattern, &format!("{mode} overlay EIRP"), "dBm"))?;
        }
        Command::Cdf { input, levels, out } => {
            let loaded = load(input, verbose)?;
            let a = analysis_for(&loaded, Some(levels), None, None)?;
            let mut csv = String::from("mode,eirp_dbm,cdf\n");
            let mut modes = Vec::new();
            let mut series = Vec::new();
            for (mode, set) in &loaded.data {
                let p = overlay_best_beam(set)?.pattern;
                let w = WeightField::solid_angle(p.grid().clone())?;
                let cdf = weighted_cdf(&p, &w)?;
                for (v, c) in cdf.values().iter().zip(cdf.cumulative()) {
                    let _ = writeln!(csv, "{mode},{v:.6},{c:.12}");
                }
                modes.push(CdfMode {
                    mode: *mode,
                    coverage_pct: a.thresholds.iter().map(|&t| Ok((t, coverage_above(&p, &w, t)?))).collect::<Result<_>>()?,
                    percentile_dbm: a.percentiles.iter().map(|&q| Ok((q, percentile_value(&cdf, q)?))).collect::<Result<_>>()?,
                });
                series.push(Series::cdf(mode.to_string(), &cdf));
            }
            write(out, "cdf.csv", csv)?;
            let report = CdfReport {
                percentile_convention: PERCENTILE_CONVENTION,
                threshold_convention: THRESHOLD_CONVENTION,
                thresholds_dbm: &a.thresholds,
                percentiles: &a.percentiles,
                modes,
            };
            write_json(out, "coverage.json", &report)?;
            write(out, "eirp_cdf.svg", line_chart_svg(&format!("{}: overlay EIRP", loaded.name), "EIRP (dBm)", "CDF", &series))?;
        }
        Command::Roi { input, roi, out } => {
            let loaded = load(input, verbose)?;
            let def = roi.definition();
            let free = mode_pattern(&loaded.data, Mode::Freespace)?;
            let blocked_mode = Mode::from(roi.mode);
            let blocked = match def {
                RoiDefinition::R1 { .. } => loaded.data.get(&blocked_mode).map(|s| overlay_best_beam(s).map(|o| o.pattern)).transpose()?.unwrap_or_else(|| free.clone()),
                _ => mode_pattern(&loaded.data, blocked_mode)?,
            };
            let m = def.evaluate(&free, &blocked)?;
            let w = WeightField::solid_angle(free.grid().clone())?;
            let mut csv = Vec::new();
            write_mask_csv(&mut csv, m.mask())?;
            write(out, "mask.csv", csv)?;
            let report = RoiReport {
                roi: def,
                label: def.label(),
                blocked_mode,
                threshold_convention: THRESHOLD_CONVENTION,
                points: m.mask().count(),
                sphere_fraction_pct: fraction_of_sphere(m.mask(), &w)?,
                g_max_dbm: m.g_max(),
                g_max_body_dbm: m.g_max_body(),
            };
            write_json(out, "coverage.json", &report)?;
        }
        Command::Stats { input, roi, out } => {
            let loaded = load(input, verbose)?;
            let def = roi.definition();
            let blocked_mode = Mode::from(roi.mode);
            let free = mode_pattern(&loaded.data, Mode::Freespace)?;
            let blocked = mode_pattern(&loaded.data, blocked_mode)?;
            let m = def.evaluate(&free, &blocked)?;
            let loss = loss_field(&free, &blocked)?;
            let w = WeightField::solid_angle(free.grid().clone())?;
            let wu = WeightField::uniform(free.grid().clone())?;
            let fit = gaussian_fit(&loss, m.mask(), &w)?;
            let report = StatsReport {
                roi: def,
                label: def.label(),
                blocked_mode,
                weighted: loss_stats(&loss, m.mask(), &w)?,
                uniform: loss_stats(&loss, m.mask(), &wu)?,
                gaussian_fit: fit,
            };
            write_json(out, "stats.json", &report)?;
            let cdf = crate::analysis::weighted_cdf_in(&loss, &w, m.mask())?;
            let span = (cdf.max() - cdf.min()).max(1.0);
            let series = vec![
                Series::cdf("empirical", &cdf),
                Series::line(
                    format!("gaussian mu={:.1} sigma={:.1}", fit.mu, fit.sigma),
                    fit.curve(cdf.min() - 0.1 * span, cdf.max() + 0.1 * span, 121),
                ),
            ];
            write(out, "loss_cdf.svg", line_chart_svg(&format!("{blocked_mode} loss over {}", def.label()), "loss (dB)", "CDF", &series))?;
        }
        Command::Compare { input, mode, delta5, models, out } => {
            let loaded = load(input, verbose)?;
            let a = analysis_for(&loaded, None, *delta5, models.as_ref())?;
            let blocked_mode = Mode::from(*mode);
            let free = mode_pattern(&loaded.data, Mode::Freespace)?;
            let blocked = mode_pattern(&loaded.data, blocked_mode)?;
            let def = RoiDefinition::R5 { delta5: a.delta5() };
            let roi = def.evaluate(&free, &blocked)?;
            let w = WeightField::solid_angle(free.grid().clone())?;
            let mut candidates = vec![(blocked_mode.to_string(), blocked)];
            for spec in &a.models {
                candidates.push((spec.name().to_string(), apply_model(&free, &spec.build()?)?));
            }
            let cmp = compare_models(&free, &candidates, roi.mask(), &w)?;
            let names: Vec<String> = candidates.iter().map(|c| c.0.clone()).collect();
            let report = CompareReport {
                roi: def,
                relative_convention: RELATIVE_CONVENTION,
                percentile_convention: PERCENTILE_CONVENTION,
                candidates: names,
                models: &a.models,
                comparison: &cmp,
            };
            write_json(out, "comparison.json", &report)?;
            let mut series = vec![Series::cdf("freespace", &cmp.freespace_cdf)];
            series.extend(cmp.candidates.iter().map(|c| Series::cdf(c.name.clone(), &c.cdf)));
            write(out, "model_cdf.svg", line_chart_svg(&format!("blockage models over {}", def.label()), "EIRP (dBm)", "CDF", &series))?;
        }
        Command::Report { input, levels, delta5, models, study, out } => {
            let loaded = load(input, verbose)?;
            let overrides = levels.threshold.is_some() || levels.percentiles.is_some() || delta5.is_some() || models.is_some();
            let bundle = match (&loaded.scenario, overrides) {
                (Some(s), false) => scenario_report(s)?,
                _ => {
                    let a = analysis_for(&loaded, Some(levels), *delta5, models.as_ref())?;
                    let name = study.clone().unwrap_or_else(|| loaded.name.clone());
                    let label = loaded.scenario.as_ref().and_then(|s| s.study.clone());
                    build_report(&name, label, &a, loaded.scenario.as_ref(), &loaded.data)?
                }
            };
            bundle.write_to(out)?;
            if verbose {
                eprintln!("wrote {} files to {}", bundle.files.len(), out.display());
            }
        }
    }
    Ok(())
}
