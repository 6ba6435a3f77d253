//! File formats and report emission: scan CSV, scenario JSON, link-budget
//! calibration, SVG plots and the report bundle.

pub mod link_budget;
pub mod report;
pub mod scan;
pub mod scenario;
pub mod svg;

pub use link_budget::{eirp_from_prx, friis_path_loss_db, prx_from_eirp, LinkBudget};
pub use scan::{parse_scan_csv, read_scan, write_mask_csv, write_scan, write_scan_csv, Mode, ScanData, ScanRecord};
pub use scenario::{AnalysisSpec, GridSpec, Scenario, StudyLabel};
