//! Scan CSV: one row per `(phi, theta, beam, mode)` sample.
//!
//! ```text
//! phi,theta,beam_id,mode,value_dbm
//! 0,5,0,freespace,-41.250000
//! ```
//!
//! The grid is inferred from the distinct angles in the file. A point with
//! no rows at all becomes an invalid grid point; a point that some beam of
//! some mode lacks is an error.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AngularGrid, GridMask, Pattern, PatternKind, PatternSet};

pub const SCAN_HEADER: [&str; 5] = ["phi", "theta", "beam_id", "mode", "value_dbm"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Freespace,
    Phantom,
    TrueHand,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Freespace => "freespace",
            Mode::Phantom => "phantom",
            Mode::TrueHand => "true_hand",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "freespace" => Ok(Mode::Freespace),
            "phantom" => Ok(Mode::Phantom),
            "true_hand" => Ok(Mode::TrueHand),
            other => Err(format!("unknown mode {other:?} (expected freespace, phantom or true_hand)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub phi: f64,
    pub theta: f64,
    pub beam_id: u32,
    pub mode: Mode,
    pub value_dbm: f64,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    phi: f64,
    theta: f64,
    beam_id: u32,
    mode: String,
    value_dbm: String,
}

pub type ScanData = BTreeMap<Mode, PatternSet>;

fn angle_key(a: f64) -> i64 {
    (a * 1e6).round() as i64
}

pub fn parse_scan_csv(path: impl AsRef<Path>) -> Result<ScanData> {
    read_scan(File::open(path)?)
}

pub fn read_scan<R: Read>(reader: R) -> Result<ScanData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != SCAN_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {:?}, found {:?}", SCAN_HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut records = Vec::new();
    let mut seen: HashMap<(i64, i64, u32, Mode), u64> = HashMap::new();
    for row in rdr.deserialize::<RawRecord>() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::Parse { line, message: e.to_string() }
        })?;
        let line = records.len() as u64 + 2;
        let mode = Mode::from_str(&row.mode).map_err(|message| Error::Parse { line, message })?;
        let value_dbm = row
            .value_dbm
            .parse::<f64>()
            .map_err(|e| Error::Parse { line, message: format!("bad value {:?}: {e}", row.value_dbm) })?;
        if !row.phi.is_finite() || !row.theta.is_finite() {
            return Err(Error::Parse { line, message: "angles must be finite".into() });
        }
        let key = (angle_key(row.phi), angle_key(row.theta), row.beam_id, mode);
        if let Some(first) = seen.insert(key, line) {
            return Err(Error::Parse {
                line,
                message: format!(
                    "duplicate record for phi={}, theta={}, beam {}, mode {mode} (first seen on line {first})",
                    row.phi, row.theta, row.beam_id
                ),
            });
        }
        records.push((line, ScanRecord { phi: row.phi, theta: row.theta, beam_id: row.beam_id, mode, value_dbm }));
    }
    if records.is_empty() {
        return Err(Error::Parse { line: 1, message: "scan file has no records".into() });
    }
    assemble(&records)
}

fn assemble(records: &[(u64, ScanRecord)]) -> Result<ScanData> {
    let phis: BTreeSet<i64> = records.iter().map(|(_, r)| angle_key(r.phi)).collect();
    let thetas: BTreeSet<i64> = records.iter().map(|(_, r)| angle_key(r.theta)).collect();
    let phi_axis: Vec<f64> = phis.iter().map(|&k| k as f64 / 1e6).collect();
    let theta_axis: Vec<f64> = thetas.iter().map(|&k| k as f64 / 1e6).collect();
    let phi_pos: HashMap<i64, usize> = phis.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let theta_pos: HashMap<i64, usize> = thetas.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let n_theta = theta_axis.len();
    let n = phi_axis.len() * n_theta;

    let index = |r: &ScanRecord| phi_pos[&angle_key(r.phi)] * n_theta + theta_pos[&angle_key(r.theta)];
    let mut valid = vec![false; n];
    for (_, r) in records {
        valid[index(r)] = true;
    }
    let grid = Arc::new(AngularGrid::new(phi_axis, theta_axis, valid.clone())?);

    let mut beams: BTreeMap<Mode, BTreeMap<u32, Vec<f64>>> = BTreeMap::new();
    for (_, r) in records {
        beams
            .entry(r.mode)
            .or_default()
            .entry(r.beam_id)
            .or_insert_with(|| vec![f64::NAN; n])[index(r)] = r.value_dbm;
    }

    let mut out = ScanData::new();
    for (mode, by_beam) in beams {
        let mut patterns = Vec::with_capacity(by_beam.len());
        for (expected, (beam_id, values)) in by_beam.into_iter().enumerate() {
            if beam_id as usize != expected {
                return Err(Error::config(format!("mode {mode}: beam ids must run 0..n without gaps (missing {expected})")));
            }
            if let Some(i) = (0..n).find(|&i| valid[i] && values[i].is_nan()) {
                let (phi, theta) = grid.coords(i);
                return Err(Error::config(format!(
                    "mode {mode}, beam {beam_id}: missing value at phi={phi}, theta={theta}"
                )));
            }
            patterns.push(Pattern::new(grid.clone(), values, PatternKind::Eirp)?);
        }
        out.insert(mode, PatternSet::new(patterns)?);
    }
    Ok(out)
}

pub fn write_scan<W: Write>(mut w: W, data: &ScanData) -> Result<()> {
    writeln!(w, "{}", SCAN_HEADER.join(","))?;
    for (mode, set) in data {
        for (beam, pattern) in set.beams().iter().enumerate() {
            let grid = pattern.grid();
            for (i, v) in pattern.valid_values() {
                let (phi, theta) = grid.coords(i);
                writeln!(w, "{phi},{theta},{beam},{mode},{v:.6}")?;
            }
        }
    }
    Ok(())
}

pub fn write_scan_csv(path: impl AsRef<Path>, data: &ScanData) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_scan(&mut w, data)?;
    w.flush()?;
    Ok(())
}

/// `phi,theta,in_roi` for every valid grid point.
pub fn write_mask_csv<W: Write>(mut w: W, mask: &GridMask) -> Result<()> {
    writeln!(w, "phi,theta,in_roi")?;
    let grid = mask.grid();
    for i in grid.valid_indices() {
        let (phi, theta) = grid.coords(i);
        writeln!(w, "{phi},{theta},{}", u8::from(mask.contains(i)))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SMALL: &str = "phi,theta,beam_id,mode,value_dbm
0,45,0,freespace,-30
0,135,0,freespace,-31
90,45,0,freespace,-32
90,135,0,freespace,-33
0,45,1,freespace,-40
0,135,1,freespace,-41
90,45,1,freespace,-42
90,135,1,freespace,-43
";

    #[test]
    fn small_file_gives_two_beams_on_four_points() {
        let data = read_scan(SMALL.as_bytes()).unwrap();
        assert_eq!(data.len(), 1);
        let set = &data[&Mode::Freespace];
        assert_eq!(set.len(), 2);
        assert_eq!(set.grid().len(), 4);
        assert_eq!(set.grid().n_valid(), 4);
        let g = set.grid();
        assert_eq!(set.beams()[1].value(g.find(90.0, 135.0).unwrap()), -43.0);
    }

    #[test]
    fn duplicate_row_reports_line() {
        let text = format!("{SMALL}90,45,1,freespace,-1\n");
        match read_scan(text.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 10);
                assert!(message.contains("duplicate"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let text = "phi,theta,beam_id,mode,value_dbm\n0,45,0,glove,-30\n";
        assert!(matches!(read_scan(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let text = "phi,theta,beam,mode,value\n0,45,0,freespace,-30\n";
        assert!(matches!(read_scan(text.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn non_uniform_grid_is_rejected() {
        let text = "phi,theta,beam_id,mode,value_dbm
0,45,0,freespace,-30
10,45,0,freespace,-30
30,45,0,freespace,-30
";
        assert!(matches!(read_scan(text.as_bytes()), Err(Error::Config(_))));
    }

    #[test]
    fn point_missing_everywhere_becomes_invalid() {
        let text: String = SMALL.lines().filter(|l| !l.starts_with("90,135")).map(|l| format!("{l}\n")).collect();
        let data = read_scan(text.as_bytes()).unwrap();
        let g = data[&Mode::Freespace].grid();
        assert_eq!(g.n_valid(), 3);
        assert!(!g.is_valid(g.find(90.0, 135.0).unwrap()));
    }

    #[test]
    fn point_missing_for_one_beam_is_an_error() {
        let text: String = SMALL.lines().filter(|l| *l != "90,135,1,freespace,-43").map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_scan(text.as_bytes()), Err(Error::Config(_))));
    }

    #[test]
    fn mask_csv_lists_valid_points() {
        let data = read_scan(SMALL.as_bytes()).unwrap();
        let g = data[&Mode::Freespace].grid().clone();
        let mask = GridMask::from_predicate(g.clone(), |i| g.coords(i).0 == 0.0);
        let mut buf = Vec::new();
        write_mask_csv(&mut buf, &mask).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "phi,theta,in_roi\n0,45,1\n0,135,1\n90,45,0\n90,135,0\n");
    }

    proptest! {
        #[test]
        fn write_then_read_preserves_values(
            vals in proptest::collection::vec(-199.0f64..40.0, 3 * 2 * 24),
        ) {
            let g = Arc::new(AngularGrid::make(30.0, 30.0, 60.0).unwrap());
            let n = g.len();
            let mut data = ScanData::new();
            for (m, mode) in [Mode::Freespace, Mode::TrueHand, Mode::Phantom].into_iter().enumerate() {
                let beams = (0..2)
                    .map(|b| {
                        let start = (m * 2 + b) * n;
                        Pattern::new(g.clone(), vals[start..start + n].to_vec(), PatternKind::Eirp).unwrap()
                    })
                    .collect();
                data.insert(mode, PatternSet::new(beams).unwrap());
            }
            let mut buf = Vec::new();
            write_scan(&mut buf, &data).unwrap();
            let back = read_scan(buf.as_slice()).unwrap();
            prop_assert_eq!(back.len(), 3);
            for (mode, set) in &data {
                let other = &back[mode];
                prop_assert_eq!(other.grid().as_ref(), set.grid().as_ref());
                for (a, b) in set.beams().iter().zip(other.beams()) {
                    for (i, v) in a.valid_values() {
                        prop_assert!((b.value(i) - v).abs() <= 5e-7);
                    }
                }
            }
        }
    }
}
