//! File formats: profile snapshots, series CSV, checkpoints and manifests.
//!
//! Floats are written with 17 significant digits so every value survives a
//! write/read cycle bit for bit.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::fnv1a;
use crate::error::{LabError, Result};
use crate::flow::{Sample, SeriesRecord, SERIES_COLUMNS};
use crate::geometry::RadialProfile;

pub const FORMAT_VERSION: &str = "1.0";
const FORMAT_MAJOR: u64 = 1;

/// Pretty JSON with floats in `{:.16e}`.
struct Exact<'a>(PrettyFormatter<'a>);

impl Formatter for Exact<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        write!(w, "{value:.8e}")
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with 17 significant digits per float. Non-finite floats become null.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Exact(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("json is utf-8"))
}

/// Deserializes a float that may have been written as null (NaN).
pub fn null_as_nan<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

/// Accepts any "1.x"; rejects newer majors and malformed versions.
pub fn check_version(v: &str) -> Result<()> {
    let major = v
        .split('.')
        .next()
        .and_then(|m| m.parse::<u64>().ok())
        .ok_or_else(|| LabError::Format(format!("malformed format_version {v:?}")))?;
    if major > FORMAT_MAJOR {
        return Err(LabError::Format(format!(
            "format_version {v} is newer than supported {FORMAT_VERSION}"
        )));
    }
    if major == 0 {
        return Err(LabError::Format(format!("unsupported format_version {v}")));
    }
    Ok(())
}

/// Parses a versioned JSON document of the given kind.
pub fn from_json<T: DeserializeOwned>(text: &str, kind: &str) -> Result<T> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LabError::Format(format!("{kind}: {e}")))?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| LabError::Format(format!("{kind}: missing field `format_version`")))?;
    check_version(version)?;
    match value.get("kind").and_then(|v| v.as_str()) {
        Some(k) if k == kind => {}
        Some(k) => return Err(LabError::Format(format!("expected a {kind} document, found {k:?}"))),
        None => return Err(LabError::Format(format!("{kind}: missing field `kind`"))),
    }
    serde_json::from_value(value).map_err(|e| LabError::Format(format!("{kind}: {e}")))
}

/// Writes through a temporary file so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub format_version: String,
    pub kind: String,
    #[serde(default)]
    pub t: Option<f64>,
    pub n: usize,
    pub grid: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    pub tol_bc: f64,
}

impl Snapshot {
    pub fn new(profile: &RadialProfile, t: Option<f64>) -> Self {
        Snapshot {
            format_version: FORMAT_VERSION.into(),
            kind: "profile".into(),
            t,
            n: profile.n,
            grid: profile.grid.clone(),
            f: profile.f.clone(),
            tol_bc: profile.tol_bc,
        }
    }

    pub fn profile(&self) -> RadialProfile {
        RadialProfile { n: self.n, grid: self.grid.clone(), f: self.f.clone(), tol_bc: self.tol_bc }
    }
}

pub fn snapshot_to_string(profile: &RadialProfile, t: Option<f64>) -> Result<String> {
    to_json(&Snapshot::new(profile, t))
}

/// Parses a snapshot and validates the profile it holds.
pub fn snapshot_from_str(text: &str) -> Result<(RadialProfile, Option<f64>)> {
    let snap: Snapshot = from_json(text, "profile")?;
    let p = snap.profile();
    p.validate()?;
    Ok((p, snap.t))
}

pub fn write_snapshot(path: &Path, profile: &RadialProfile, t: Option<f64>) -> Result<()> {
    write_atomic(path, snapshot_to_string(profile, t)?.as_bytes())
}

pub fn read_snapshot(path: &Path) -> Result<(RadialProfile, Option<f64>)> {
    snapshot_from_str(&fs::read_to_string(path)?)
}

pub fn series_to_string(records: &[SeriesRecord]) -> String {
    let mut out = format!("# kahlerlab series format_version {FORMAT_VERSION}\n");
    out.push_str(&SERIES_COLUMNS.join(","));
    out.push('\n');
    for r in records {
        let row: Vec<String> = r.values().iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn series_from_str(text: &str) -> Result<Vec<SeriesRecord>> {
    let mut lines = text.lines().enumerate();
    let mut header = None;
    for (_, line) in lines.by_ref() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("kahlerlab series format_version") {
                check_version(v.trim())?;
            }
            continue;
        }
        header = Some(line);
        break;
    }
    let header = header.ok_or_else(|| LabError::Format("series: missing header".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names != SERIES_COLUMNS {
        return Err(LabError::Format(format!("series: unexpected columns {names:?}")));
    }
    let mut out = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != SERIES_COLUMNS.len() {
            return Err(LabError::Format(format!("series line {}: expected 11 cells, got {}", k + 1, cells.len())));
        }
        let mut v = [0.0; 11];
        for (j, c) in cells.iter().enumerate() {
            v[j] = c.trim().parse().map_err(|_| {
                LabError::Format(format!("series line {}, column {}: bad number {c:?}", k + 1, SERIES_COLUMNS[j]))
            })?;
        }
        out.push(SeriesRecord::from_values(&v));
    }
    Ok(out)
}

pub fn write_series(path: &Path, records: &[SeriesRecord]) -> Result<()> {
    write_atomic(path, series_to_string(records).as_bytes())
}

pub fn read_series(path: &Path) -> Result<Vec<SeriesRecord>> {
    series_from_str(&fs::read_to_string(path)?)
}

/// Everything needed to continue a run bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: String,
    pub kind: String,
    pub config_hash: String,
    pub n: usize,
    pub grid: Vec<f64>,
    pub t: f64,
    pub step: u64,
    #[serde(deserialize_with = "null_as_nan")]
    pub rho: f64,
    pub phi: Vec<f64>,
    pub samples: Vec<Sample>,
}

impl Checkpoint {
    pub fn new(config_hash: &str, n: usize, grid: &[f64], t: f64, step: u64, rho: f64, phi: &[f64], samples: &[Sample]) -> Self {
        Checkpoint {
            format_version: FORMAT_VERSION.into(),
            kind: "checkpoint".into(),
            config_hash: config_hash.into(),
            n,
            grid: grid.to_vec(),
            t,
            step,
            rho,
            phi: phi.to_vec(),
            samples: samples.to_vec(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, to_json(self)?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let c: Checkpoint = from_json(&fs::read_to_string(path)?, "checkpoint")?;
        if c.phi.len() != c.grid.len() {
            return Err(LabError::Format("checkpoint: phi and grid lengths differ".into()));
        }
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: u64,
    pub fnv1a: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: String,
    pub kind: String,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    #[serde(default)]
    pub config_hash: Option<String>,
    pub exit_code: i32,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    /// Lists `names` inside `dir` with sizes and content hashes.
    pub fn collect(dir: &Path, command: &str, config_hash: Option<String>, exit_code: i32, names: &[String]) -> Result<Self> {
        let mut files = Vec::new();
        for name in names {
            let bytes = fs::read(dir.join(name))?;
            files.push(ManifestEntry {
                name: name.clone(),
                bytes: bytes.len() as u64,
                fnv1a: format!("{:016x}", fnv1a(&bytes)),
            });
        }
        Ok(Manifest {
            format_version: FORMAT_VERSION.into(),
            kind: "manifest".into(),
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash,
            exit_code,
            files,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("manifest.json"), to_json(self)?.as_bytes())
    }
}
