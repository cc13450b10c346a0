//! Trajectory file formats.
//!
//! JSON: `{"dim":3,"dt":0.05,"positions":[[..]],"accelerations":[[..]]?,"orientations":[[w,x,y,z]]?}`
//!
//! CSV: header `t,x,y[,z][,ax,ay[,az]]`, one row per sample in time order.
//! When accelerations are missing they are recovered with
//! [`numeric_accelerations`](crate::trajectory::numeric_accelerations).

use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{numeric_accelerations, vector_from_slice, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Json,
    Csv,
}

impl FileFormat {
    /// Guess from the file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Json,
        }
    }
}

impl FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(FileFormat::Json),
            "csv" => Ok(FileFormat::Csv),
            other => Err(Error::parse(format!("unknown format {other:?}"))),
        }
    }
}

/// Serialized form of a [`Trajectory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub dim: usize,
    pub dt: f64,
    pub positions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accelerations: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientations: Option<Vec<[f64; 4]>>,
}

fn rows_to_vectors(dim: usize, rows: &[Vec<f64>]) -> Result<Vec<Vector3<f64>>> {
    rows.iter().map(|r| vector_from_slice(dim, r)).collect()
}

fn vectors_to_rows(dim: usize, vs: &[Vector3<f64>]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.as_slice()[..dim].to_vec()).collect()
}

impl TrajectoryFile {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let dim = traj.dim();
        Self {
            dim,
            dt: traj.dt(),
            positions: vectors_to_rows(dim, traj.positions()),
            accelerations: Some(vectors_to_rows(dim, traj.accelerations())),
            orientations: traj.orientations().map(|qs| {
                qs.iter()
                    .map(|q| {
                        let q = q.as_ref();
                        [q.w, q.i, q.j, q.k]
                    })
                    .collect()
            }),
        }
    }

    pub fn into_trajectory(self) -> Result<Trajectory> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::validation(format!("dim must be 2 or 3, got {}", self.dim)));
        }
        let positions = rows_to_vectors(self.dim, &self.positions)?;
        let accelerations = match &self.accelerations {
            Some(rows) => rows_to_vectors(self.dim, rows)?,
            None => numeric_accelerations(&positions, self.dt)?,
        };
        let traj = Trajectory::new(self.dim, self.dt, positions, accelerations)?;
        match self.orientations {
            Some(qs) => traj.with_orientations(
                qs.iter()
                    .map(|q| UnitQuaternion::new_unchecked(Quaternion::new(q[0], q[1], q[2], q[3])))
                    .collect(),
            ),
            None => Ok(traj),
        }
    }
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    let file: TrajectoryFile = serde_json::from_str(text)?;
    file.into_trajectory()
}

pub fn trajectory_to_json(traj: &Trajectory) -> String {
    serde_json::to_string(&TrajectoryFile::from_trajectory(traj)).expect("finite values serialize")
}

fn parse_f64(field: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::parse(format!("row {row}: {field:?}: {e}")))
}

pub fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let (dim, has_acc) = match header.as_slice() {
        ["t", "x", "y"] => (2, false),
        ["t", "x", "y", "ax", "ay"] => (2, true),
        ["t", "x", "y", "z"] => (3, false),
        ["t", "x", "y", "z", "ax", "ay", "az"] => (3, true),
        other => {
            return Err(Error::parse(format!(
                "unexpected CSV header {other:?}, expected t,x,y[,z][,ax,ay[,az]]"
            )))
        }
    };

    let mut times = Vec::new();
    let mut positions = Vec::new();
    let mut accelerations = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::parse(format!(
                "row {i} has {} fields, expected {}",
                record.len(),
                header.len()
            )));
        }
        let vals = record
            .iter()
            .map(|f| parse_f64(f, i))
            .collect::<Result<Vec<_>>>()?;
        times.push(vals[0]);
        positions.push(vector_from_slice(dim, &vals[1..1 + dim])?);
        if has_acc {
            accelerations.push(vector_from_slice(dim, &vals[1 + dim..1 + 2 * dim])?);
        }
    }
    if times.len() < 2 {
        return Err(Error::validation(format!(
            "trajectory needs at least 2 samples, got {}",
            times.len()
        )));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(Error::validation("timestamps must be strictly increasing"));
    }
    for (i, t) in times.iter().enumerate() {
        let expected = times[0] + i as f64 * dt;
        if (t - expected).abs() > 1e-6 * dt.max(expected.abs()) {
            return Err(Error::validation(format!(
                "non-uniform timestep at row {i}: t={t}, expected {expected}"
            )));
        }
    }
    if has_acc {
        Trajectory::new(dim, dt, positions, accelerations)
    } else {
        Trajectory::from_positions(dim, dt, positions)
    }
}

pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let dim = traj.dim();
    let mut out = String::from(if dim == 2 { "t,x,y,ax,ay\n" } else { "t,x,y,z,ax,ay,az\n" });
    for (i, (x, a)) in traj.positions().iter().zip(traj.accelerations()).enumerate() {
        let mut fields = vec![(i as f64 * traj.dt()).to_string()];
        fields.extend(x.as_slice()[..dim].iter().map(f64::to_string));
        fields.extend(a.as_slice()[..dim].iter().map(f64::to_string));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Reads a whole file, naming the path in any error.
pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn load_trajectory(path: &Path, format: FileFormat) -> Result<Trajectory> {
    let text = read_text(path)?;
    match format {
        FileFormat::Json => trajectory_from_json(&text),
        FileFormat::Csv => trajectory_from_csv(&text),
    }
}

pub fn save_trajectory(traj: &Trajectory, path: &Path, format: FileFormat) -> Result<()> {
    let text = match format {
        FileFormat::Json => trajectory_to_json(traj),
        FileFormat::Csv => trajectory_to_csv(traj),
    };
    fs::write(path, text)?;
    Ok(())
}
