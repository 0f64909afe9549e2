//! Trip CSV files.
//!
//! Two schemas are accepted, selected by header:
//!
//! - geodetic: `t,lat,lon,alt[,speed][,heading][,yaw_rate][,accel_lon]`
//! - pre-converted: `t,x_enu,y_enu[,speed][,heading]`
//!
//! Times are seconds, positions degrees/meters, speed m/s. Angles are
//! degrees in files; `heading` is a compass bearing (clockwise from north)
//! and becomes an ENU angle (counterclockwise from east) in radians on load.
//! The file stem is the trip id.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::channels::{extract_channels, split_at_gaps, Position, RawTripRecord, Trajectory};
use super::enu::Geodetic;
use crate::error::{Error, Result};

pub fn bearing_deg_to_enu_rad(bearing_deg: f64) -> f64 {
    (90.0 - bearing_deg).to_radians()
}

pub fn enu_rad_to_bearing_deg(heading: f64) -> f64 {
    90.0 - heading.to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Schema {
    Geodetic,
    Enu,
}

struct Columns {
    schema: Schema,
    t: usize,
    a: usize,
    b: usize,
    c: Option<usize>,
    speed: Option<usize>,
    heading: Option<usize>,
    yaw_rate: Option<usize>,
    accel_lon: Option<usize>,
}

fn schema_error(file: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Schema {
        file: file.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn resolve_columns(file: &Path, header: &csv::StringRecord) -> Result<Columns> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let find = |name: &str| names.iter().position(|n| *n == name);
    let geodetic_allowed = ["t", "lat", "lon", "alt", "speed", "heading", "yaw_rate", "accel_lon"];
    let enu_allowed = ["t", "x_enu", "y_enu", "speed", "heading"];
    let schema = if find("lat").is_some() || find("lon").is_some() {
        Schema::Geodetic
    } else if find("x_enu").is_some() || find("y_enu").is_some() {
        Schema::Enu
    } else {
        return Err(schema_error(file, 1, "header has neither lat/lon/alt nor x_enu/y_enu"));
    };
    let allowed: &[&str] = match schema {
        Schema::Geodetic => &geodetic_allowed,
        Schema::Enu => &enu_allowed,
    };
    for n in &names {
        if !allowed.contains(n) {
            return Err(schema_error(file, 1, format!("unexpected column '{n}'")));
        }
    }
    for (i, n) in names.iter().enumerate() {
        if names[..i].contains(n) {
            return Err(schema_error(file, 1, format!("duplicate column '{n}'")));
        }
    }
    let need = |name: &str| find(name).ok_or_else(|| schema_error(file, 1, format!("missing column '{name}'")));
    Ok(match schema {
        Schema::Geodetic => Columns {
            schema,
            t: need("t")?,
            a: need("lat")?,
            b: need("lon")?,
            c: Some(need("alt")?),
            speed: find("speed"),
            heading: find("heading"),
            yaw_rate: find("yaw_rate"),
            accel_lon: find("accel_lon"),
        },
        Schema::Enu => Columns {
            schema,
            t: need("t")?,
            a: need("x_enu")?,
            b: need("y_enu")?,
            c: None,
            speed: find("speed"),
            heading: find("heading"),
            yaw_rate: None,
            accel_lon: None,
        },
    })
}

pub fn read_trip_csv(path: &Path) -> Result<Vec<RawTripRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = reader.headers()?.clone();
    let cols = resolve_columns(path, &header)?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| schema_error(path, line, e.to_string()))?;
        let field = |idx: usize, name: &str| -> Result<f64> {
            let raw = rec
                .get(idx)
                .ok_or_else(|| schema_error(path, line, format!("missing field '{name}'")))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| schema_error(path, line, format!("'{raw}' is not a number in column '{name}'")))?;
            if !v.is_finite() {
                return Err(schema_error(path, line, format!("non-finite value in column '{name}'")));
            }
            Ok(v)
        };
        let optional = |idx: Option<usize>, name: &str| -> Result<Option<f64>> {
            match idx {
                Some(i) if rec.get(i).is_some_and(|s| !s.is_empty()) => Ok(Some(field(i, name)?)),
                _ => Ok(None),
            }
        };
        let t = field(cols.t, "t")?;
        let position = match cols.schema {
            Schema::Geodetic => {
                let g = Geodetic::new(
                    field(cols.a, "lat")?,
                    field(cols.b, "lon")?,
                    field(cols.c.expect("geodetic has alt"), "alt")?,
                );
                if !g.is_valid() {
                    return Err(schema_error(path, line, "latitude/longitude out of range"));
                }
                Position::Geodetic(g)
            }
            Schema::Enu => Position::Enu {
                x: field(cols.a, "x_enu")?,
                y: field(cols.b, "y_enu")?,
            },
        };
        out.push(RawTripRecord {
            t,
            position,
            speed: optional(cols.speed, "speed")?,
            heading: optional(cols.heading, "heading")?.map(bearing_deg_to_enu_rad),
            yaw_rate: optional(cols.yaw_rate, "yaw_rate")?.map(f64::to_radians),
            accel_lon: optional(cols.accel_lon, "accel_lon")?,
        });
    }
    if let Some(w) = out.windows(2).position(|w| !(w[1].t > w[0].t)) {
        return Err(schema_error(path, w + 3, "time is not strictly increasing"));
    }
    Ok(out)
}

/// Write a trajectory in the pre-converted schema.
pub fn write_trajectory_csv<W: Write>(tr: &Trajectory, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x_enu", "y_enu", "speed", "heading"])?;
    for i in 0..tr.len() {
        w.write_record([
            tr.t[i].to_string(),
            tr.x_enu[i].to_string(),
            tr.y_enu[i].to_string(),
            tr.speed[i].to_string(),
            enu_rad_to_bearing_deg(tr.heading_unwrapped[i]).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_file(tr: &Trajectory, dir: &Path) -> Result<PathBuf> {
    let path = dir.join(format!("{}.csv", tr.trip_id));
    let file = fs::File::create(&path)?;
    write_trajectory_csv(tr, std::io::BufWriter::new(file))?;
    Ok(path)
}

/// Outcome of loading a directory of trip files.
#[derive(Debug, Default)]
pub struct CorpusLoad {
    pub trips: Vec<Trajectory>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Load every `*.csv` in `dir` (sorted by file name), splitting trips at
/// gaps and dropping segments shorter than `min_len`.
pub fn load_corpus_dir(dir: &Path, min_len: usize) -> Result<CorpusLoad> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    files.sort();
    let mut load = CorpusLoad::default();
    for file in files {
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| schema_error(&file, 0, "file name is not valid UTF-8"))?
            .to_string();
        let records = read_trip_csv(&file)?;
        let (segments, dropped) = split_at_gaps(&stem, &records, min_len);
        if segments.len() > 1 || dropped > 0 {
            load.warnings.push(format!(
                "{stem}: split at gaps into {} segment(s), {dropped} short remnant(s) dropped",
                segments.len()
            ));
        }
        if segments.is_empty() {
            load.warnings.push(format!("{stem}: too short, skipped"));
        }
        for (id, recs) in segments {
            match extract_channels(&id, &recs, min_len) {
                Ok(tr) => load.trips.push(tr),
                Err(e @ Error::TooShort { .. }) => load.warnings.push(e.to_string()),
                Err(e) => return Err(e),
            }
        }
        load.files.push(file);
    }
    Ok(load)
}
