//! On-disk formats: a structured key-value text format shared by
//! sidecars, configs, and manifests; CSV and binary recording codecs;
//! dense-Laplacian, edge-list, and metric CSVs; the learned-result
//! directory layout; and the synthesis spec parser.
//!
//! Every float is written with the exponential shortest-round-trip
//! formatter, so reading a written file reproduces the exact bit
//! pattern and rerunning a pipeline yields byte-identical data files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use thiserror::Error;

use crate::analysis::{ClassMetrics, ElectrodeScore};
use crate::graph::{edge_count, edge_pairs, EdgeWeightVector, GraphError, GraphLaplacian};
use crate::learn::{LearnConfig, LearnResult};
use crate::signal::{Recording, SignalError, WindowLabel};
use crate::synth::{
    ring_weights, sample_planted_nodes, PlantedCommunity, Regime, SynthError, SynthOutput,
    SynthSpec,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("missing key '{key}' in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("key '{key}' in section [{section}]: {message}")]
    BadValue {
        section: String,
        key: String,
        message: String,
    },
    #[error("channel '{0}' is not part of the recording")]
    UnknownChannel(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Exponential shortest-round-trip rendering: parsing the output
/// recovers the identical f64.
pub fn format_float(x: f64) -> String {
    format!("{x:e}")
}

fn parse_float(token: &str, path: &Path, line: usize) -> Result<f64, IoError> {
    token
        .trim()
        .parse::<f64>()
        .map_err(|_| parse_err(path, line, format!("'{token}' is not a number")))
}

fn parse_int(token: &str, path: &Path, line: usize) -> Result<usize, IoError> {
    token
        .trim()
        .parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("'{token}' is not a nonnegative integer")))
}

fn read_lines(path: &Path) -> Result<Vec<String>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Channel names become CSV header cells and sidecar list entries, so
/// they must be free of separators.
fn check_name(name: &str, path: &Path) -> Result<(), IoError> {
    if name.is_empty() || name.contains(',') || name.contains('\n') || name.contains('\r') {
        return Err(format_err(
            path,
            format!("channel name '{name}' is empty or contains a separator"),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Structured key-value text
// ---------------------------------------------------------------------

/// An ordered list of `[section]` blocks of `key = value` lines, with
/// `#` comments. Rendering then parsing reproduces the document, which
/// keeps manifests and sidecars diffable and byte-stable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDocument {
    sections: Vec<(String, Vec<(String, String)>)>,
}

impl KvDocument {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends (or extends) a section and returns `self` for chaining.
    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) -> &mut Self {
        let value = value.into();
        match self.sections.iter_mut().find(|(name, _)| name == section) {
            Some((_, entries)) => {
                if let Some(entry) = entries.iter_mut().find(|(k, _)| k == key) {
                    entry.1 = value;
                } else {
                    entries.push((key.to_owned(), value));
                }
            }
            None => self
                .sections
                .push((section.to_owned(), vec![(key.to_owned(), value)])),
        }
        self
    }

    pub fn set_float(&mut self, section: &str, key: &str, value: f64) -> &mut Self {
        self.set(section, key, format_float(value))
    }

    pub fn set_list(&mut self, section: &str, key: &str, values: &[String]) -> &mut Self {
        self.set(section, key, values.join(", "))
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .iter()
            .find(|(name, _)| name == section)
            .and_then(|(_, entries)| entries.iter().find(|(k, _)| k == key))
            .map(|(_, v)| v.as_str())
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.iter().any(|(name, _)| name == section)
    }

    pub fn sections(&self) -> impl Iterator<Item = (&str, &[(String, String)])> {
        self.sections
            .iter()
            .map(|(name, entries)| (name.as_str(), entries.as_slice()))
    }

    pub fn require(&self, section: &str, key: &str) -> Result<&str, IoError> {
        self.get(section, key).ok_or_else(|| IoError::MissingKey {
            section: section.to_owned(),
            key: key.to_owned(),
        })
    }

    fn bad_value(section: &str, key: &str, message: impl Into<String>) -> IoError {
        IoError::BadValue {
            section: section.to_owned(),
            key: key.to_owned(),
            message: message.into(),
        }
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, IoError> {
        self.get(section, key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Self::bad_value(section, key, format!("'{v}' is not a number")))
            })
            .transpose()
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, IoError> {
        self.get(section, key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    Self::bad_value(section, key, format!("'{v}' is not a nonnegative integer"))
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>, IoError> {
        self.get(section, key)
            .map(|v| {
                v.parse::<u64>().map_err(|_| {
                    Self::bad_value(section, key, format!("'{v}' is not a 64-bit integer"))
                })
            })
            .transpose()
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>, IoError> {
        self.get(section, key)
            .map(|v| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(Self::bad_value(
                    section,
                    key,
                    format!("'{other}' is not 'true' or 'false'"),
                )),
            })
            .transpose()
    }

    /// Comma-separated list; an absent key and an empty value both give
    /// an empty list.
    pub fn get_list(&self, section: &str, key: &str) -> Vec<String> {
        self.get(section, key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (name, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (key, value) in entries {
                let _ = writeln!(out, "{key} = {value}");
            }
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, IoError> {
        let mut doc = KvDocument::new();
        let mut current: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if name.is_empty() {
                    return Err(parse_err(path, line_no, "empty section name"));
                }
                if doc.sections.iter().any(|(n, _)| n == name) {
                    return Err(parse_err(path, line_no, format!("duplicate section [{name}]")));
                }
                doc.sections.push((name.to_owned(), Vec::new()));
                current = Some(doc.sections.len() - 1);
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(parse_err(
                    path,
                    line_no,
                    format!("expected '[section]' or 'key = value', got '{line}'"),
                ));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(parse_err(path, line_no, "empty key"));
            }
            let Some(section_idx) = current else {
                return Err(parse_err(path, line_no, "key before any [section] header"));
            };
            let entries = &mut doc.sections[section_idx].1;
            if entries.iter().any(|(k, _)| k == key) {
                return Err(parse_err(path, line_no, format!("duplicate key '{key}'")));
            }
            entries.push((key.to_owned(), value.to_owned()));
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::parse(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        fs::write(path, self.render()).map_err(|e| io_err(path, e))
    }
}

// ---------------------------------------------------------------------
// Recording codecs
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecordingFormat {
    #[default]
    Csv,
    Binary,
}

impl std::str::FromStr for RecordingFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(RecordingFormat::Csv),
            "binary" => Ok(RecordingFormat::Binary),
            other => Err(format!("unknown format '{other}' (expected 'csv' or 'binary')")),
        }
    }
}

impl std::fmt::Display for RecordingFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RecordingFormat::Csv => "csv",
            RecordingFormat::Binary => "binary",
        })
    }
}

/// CSV layout: first row channel names, each later row one sample across
/// all channels. The in-memory matrix is channels x samples, so rows and
/// columns transpose on the way through.
pub fn write_recording_csv(
    path: &Path,
    channel_names: &[String],
    samples: &Array2<f64>,
) -> Result<(), IoError> {
    let (n_channels, n_samples) = samples.dim();
    if channel_names.len() != n_channels {
        return Err(format_err(
            path,
            format!(
                "{} channel names for {} sample rows",
                channel_names.len(),
                n_channels
            ),
        ));
    }
    for name in channel_names {
        check_name(name, path)?;
    }
    let mut out = String::new();
    out.push_str(&channel_names.join(","));
    out.push('\n');
    for t in 0..n_samples {
        for c in 0..n_channels {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format_float(samples[[c, t]]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_recording_csv(path: &Path) -> Result<(Vec<String>, Array2<f64>), IoError> {
    let lines = read_lines(path)?;
    let mut iter = lines.iter().enumerate();
    let (_, header) = iter
        .next()
        .ok_or_else(|| format_err(path, "empty file"))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_owned()).collect();
    if names.iter().any(|n| n.is_empty()) {
        return Err(parse_err(path, 1, "empty channel name in header"));
    }
    let n_channels = names.len();
    let mut data: Vec<f64> = Vec::new();
    let mut n_samples = 0usize;
    for (idx, line) in iter {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n_channels {
            return Err(parse_err(
                path,
                idx + 1,
                format!("row has {} cells, header has {}", cells.len(), n_channels),
            ));
        }
        for cell in cells {
            data.push(parse_float(cell, path, idx + 1)?);
        }
        n_samples += 1;
    }
    if n_samples == 0 {
        return Err(format_err(path, "no sample rows"));
    }
    // Rows were sample-major; transpose into channels x samples.
    let by_sample = Array2::from_shape_vec((n_samples, n_channels), data)
        .expect("dimensions counted during parsing");
    Ok((names, by_sample.reversed_axes().as_standard_layout().to_owned()))
}

pub const BINARY_MAGIC: [u8; 4] = *b"STGL";
pub const BINARY_VERSION: u16 = 1;

/// Binary layout: magic, version u16, n_channels u32, n_samples u64,
/// sample_rate f64, then channel-major little-endian f64 samples.
/// Channel names travel in the annotation sidecar.
pub fn write_recording_binary(
    path: &Path,
    sample_rate: f64,
    samples: &Array2<f64>,
) -> Result<(), IoError> {
    let (n_channels, n_samples) = samples.dim();
    let mut out: Vec<u8> =
        Vec::with_capacity(4 + 2 + 4 + 8 + 8 + 8 * n_channels * n_samples);
    out.extend_from_slice(&BINARY_MAGIC);
    out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
    out.extend_from_slice(&(n_channels as u32).to_le_bytes());
    out.extend_from_slice(&(n_samples as u64).to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    for c in 0..n_channels {
        for t in 0..n_samples {
            out.extend_from_slice(&samples[[c, t]].to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_recording_binary(path: &Path) -> Result<(f64, Array2<f64>), IoError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let header_len = 4 + 2 + 4 + 8 + 8;
    if bytes.len() < header_len {
        return Err(format_err(path, "file shorter than the header"));
    }
    if bytes[0..4] != BINARY_MAGIC {
        return Err(format_err(path, "bad magic (expected 'STGL')"));
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != BINARY_VERSION {
        return Err(format_err(
            path,
            format!("unsupported version {version} (expected {BINARY_VERSION})"),
        ));
    }
    let n_channels = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let n_samples = u64::from_le_bytes(bytes[10..18].try_into().unwrap()) as usize;
    let sample_rate = f64::from_le_bytes(bytes[18..26].try_into().unwrap());
    let expected = header_len + 8 * n_channels * n_samples;
    if bytes.len() != expected {
        return Err(format_err(
            path,
            format!(
                "sample count mismatch: header implies {expected} bytes, file has {}",
                bytes.len()
            ),
        ));
    }
    let mut data = Vec::with_capacity(n_channels * n_samples);
    for chunk in bytes[header_len..].chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
    }
    let samples = Array2::from_shape_vec((n_channels, n_samples), data)
        .map_err(|_| format_err(path, "inconsistent sample dimensions"))?;
    Ok((sample_rate, samples))
}

// ---------------------------------------------------------------------
// Annotation sidecar
// ---------------------------------------------------------------------

/// Optional labels accompanying a data file: onset position, channel
/// names (required by the binary format), onset-zone and bad channel
/// lists, and a sample-rate override (required by the CSV format, which
/// has no embedded rate).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations {
    pub sample_rate: Option<f64>,
    pub onset_sample: Option<usize>,
    pub channels: Option<Vec<String>>,
    pub soz: Vec<String>,
    pub bad: Vec<String>,
}

pub const ANNOTATION_SECTION: &str = "annotation";

impl Annotations {
    pub fn from_document(doc: &KvDocument) -> Result<Self, IoError> {
        let s = ANNOTATION_SECTION;
        Ok(Annotations {
            sample_rate: doc.get_f64(s, "sample_rate")?,
            onset_sample: doc.get_usize(s, "onset_sample")?,
            channels: doc.get(s, "channels").map(|_| doc.get_list(s, "channels")),
            soz: doc.get_list(s, "soz"),
            bad: doc.get_list(s, "bad"),
        })
    }

    pub fn to_document(&self) -> KvDocument {
        let mut doc = KvDocument::new();
        let s = ANNOTATION_SECTION;
        if let Some(rate) = self.sample_rate {
            doc.set_float(s, "sample_rate", rate);
        }
        if let Some(onset) = self.onset_sample {
            doc.set(s, "onset_sample", onset.to_string());
        }
        if let Some(channels) = &self.channels {
            doc.set_list(s, "channels", channels);
        }
        if !self.soz.is_empty() {
            doc.set_list(s, "soz", &self.soz);
        }
        if !self.bad.is_empty() {
            doc.set_list(s, "bad", &self.bad);
        }
        if !doc.has_section(s) {
            doc.set(s, "onset_sample", "0");
        }
        doc
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Self::from_document(&KvDocument::load(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), IoError> {
        self.to_document().save(path)
    }
}

/// Reads a data file plus its optional annotation sidecar into a
/// validated [`Recording`], resolving name lists into per-channel labels
/// and dropping annotated bad channels.
pub fn load_recording(
    data_path: &Path,
    format: RecordingFormat,
    annotation_path: Option<&Path>,
) -> Result<Recording, IoError> {
    let annotations = match annotation_path {
        Some(p) => Annotations::load(p)?,
        None => Annotations::default(),
    };
    let (names, sample_rate, samples) = match format {
        RecordingFormat::Csv => {
            let (names, samples) = read_recording_csv(data_path)?;
            let rate = annotations.sample_rate.ok_or_else(|| {
                format_err(
                    data_path,
                    "CSV carries no sample rate; the annotation sidecar must set one",
                )
            })?;
            (names, rate, samples)
        }
        RecordingFormat::Binary => {
            let (embedded_rate, samples) = read_recording_binary(data_path)?;
            let names = match &annotations.channels {
                Some(names) => {
                    if names.len() != samples.nrows() {
                        return Err(format_err(
                            data_path,
                            format!(
                                "sidecar names {} channels, data has {}",
                                names.len(),
                                samples.nrows()
                            ),
                        ));
                    }
                    names.clone()
                }
                None => (0..samples.nrows()).map(|i| format!("ch{i:04}")).collect(),
            };
            (names, annotations.sample_rate.unwrap_or(embedded_rate), samples)
        }
    };

    for listed in annotations.soz.iter().chain(&annotations.bad) {
        if !names.contains(listed) {
            return Err(IoError::UnknownChannel(listed.clone()));
        }
    }
    let soz: Vec<bool> = names.iter().map(|n| annotations.soz.contains(n)).collect();
    let recording = Recording::new(
        names,
        sample_rate,
        samples,
        annotations.onset_sample.unwrap_or(0),
        soz,
        Vec::new(),
    )?;
    if annotations.bad.is_empty() {
        Ok(recording)
    } else {
        Ok(recording.drop_channels(&annotations.bad)?)
    }
}

/// Writes the data file and a sidecar carrying everything the data file
/// cannot: names, rate (for CSV), onset, and label lists.
pub fn save_recording(
    recording: &Recording,
    data_path: &Path,
    format: RecordingFormat,
    annotation_path: &Path,
) -> Result<(), IoError> {
    match format {
        RecordingFormat::Csv => {
            write_recording_csv(data_path, recording.channel_names(), recording.samples())?
        }
        RecordingFormat::Binary => {
            write_recording_binary(data_path, recording.sample_rate(), recording.samples())?
        }
    }
    let soz_names: Vec<String> = recording
        .channel_names()
        .iter()
        .zip(recording.soz())
        .filter(|(_, &s)| s)
        .map(|(n, _)| n.clone())
        .collect();
    Annotations {
        sample_rate: Some(recording.sample_rate()),
        onset_sample: Some(recording.onset_sample()),
        channels: Some(recording.channel_names().to_vec()),
        soz: soz_names,
        bad: Vec::new(),
    }
    .save(annotation_path)
}

// ---------------------------------------------------------------------
// Graph CSVs
// ---------------------------------------------------------------------

/// Dense symmetric matrix with a node-name header row.
pub fn write_laplacian_csv(
    path: &Path,
    laplacian: &GraphLaplacian,
    node_names: &[String],
) -> Result<(), IoError> {
    let n = laplacian.n_nodes();
    if node_names.len() != n {
        return Err(format_err(
            path,
            format!("{} node names for {} nodes", node_names.len(), n),
        ));
    }
    for name in node_names {
        check_name(name, path)?;
    }
    let mut out = String::new();
    out.push_str(&node_names.join(","));
    out.push('\n');
    let m = laplacian.matrix();
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format_float(m[[i, j]]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_laplacian_csv(path: &Path) -> Result<(Vec<String>, GraphLaplacian), IoError> {
    let lines = read_lines(path)?;
    if lines.is_empty() {
        return Err(format_err(path, "empty file"));
    }
    let names: Vec<String> = lines[0].split(',').map(|s| s.trim().to_owned()).collect();
    let n = names.len();
    let rows: Vec<&String> = lines[1..]
        .iter()
        .filter(|l| !l.trim().is_empty())
        .collect();
    if rows.len() != n {
        return Err(format_err(
            path,
            format!("{} matrix rows for {} header names", rows.len(), n),
        ));
    }
    let mut matrix = Array2::<f64>::zeros((n, n));
    for (i, line) in rows.iter().enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != n {
            return Err(parse_err(
                path,
                i + 2,
                format!("row has {} cells, expected {n}", cells.len()),
            ));
        }
        for (j, cell) in cells.iter().enumerate() {
            matrix[[i, j]] = parse_float(cell, path, i + 2)?;
        }
    }
    Ok((names, GraphLaplacian::from_matrix(matrix)?))
}

/// Every canonical node pair on its own `i,j,value` row (zeros
/// included), so the node count is implied by the row count and reading
/// back needs no side information. Values may be negative when the list
/// encodes a difference of graphs.
pub fn write_edge_list_csv(path: &Path, n_nodes: usize, values: &[f64]) -> Result<(), IoError> {
    if values.len() != edge_count(n_nodes) {
        return Err(format_err(
            path,
            format!(
                "{} values for {} canonical edges of {n_nodes} nodes",
                values.len(),
                edge_count(n_nodes)
            ),
        ));
    }
    let mut out = String::from("i,j,weight\n");
    for ((i, j), v) in edge_pairs(n_nodes).zip(values) {
        let _ = writeln!(out, "{i},{j},{}", format_float(*v));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_edge_list_csv(path: &Path) -> Result<(usize, Vec<f64>), IoError> {
    let lines = read_lines(path)?;
    if lines.first().map(|l| l.trim()) != Some("i,j,weight") {
        return Err(format_err(path, "expected 'i,j,weight' header"));
    }
    let rows: Vec<&String> = lines[1..]
        .iter()
        .filter(|l| !l.trim().is_empty())
        .collect();
    let m = rows.len();
    // m = n(n-1)/2 inverts to n.
    let n = (1.0 + (1.0 + 8.0 * m as f64).sqrt()) / 2.0;
    let n = n.round() as usize;
    if edge_count(n) != m {
        return Err(format_err(
            path,
            format!("{m} edge rows do not form a complete canonical list"),
        ));
    }
    let mut values = vec![0.0f64; m];
    for (row_idx, (line, (i, j))) in rows.iter().zip(edge_pairs(n)).enumerate() {
        let line_no = row_idx + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(parse_err(path, line_no, "expected 'i,j,weight'"));
        }
        let gi = parse_int(cells[0], path, line_no)?;
        let gj = parse_int(cells[1], path, line_no)?;
        if (gi, gj) != (i, j) {
            return Err(parse_err(
                path,
                line_no,
                format!("expected canonical pair ({i},{j}), got ({gi},{gj})"),
            ));
        }
        values[row_idx] = parse_float(cells[2], path, line_no)?;
    }
    Ok((n, values))
}

pub fn write_objective_trace_csv(path: &Path, trace: &[f64]) -> Result<(), IoError> {
    let mut out = String::from("iteration,objective\n");
    for (i, v) in trace.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", format_float(*v));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_objective_trace_csv(path: &Path) -> Result<Vec<f64>, IoError> {
    let lines = read_lines(path)?;
    if lines.first().map(|l| l.trim()) != Some("iteration,objective") {
        return Err(format_err(path, "expected 'iteration,objective' header"));
    }
    let mut trace = Vec::new();
    for (idx, line) in lines[1..].iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let Some((iter_cell, value_cell)) = line.split_once(',') else {
            return Err(parse_err(path, line_no, "expected 'iteration,objective'"));
        };
        let iteration = parse_int(iter_cell, path, line_no)?;
        if iteration != trace.len() {
            return Err(parse_err(
                path,
                line_no,
                format!("expected iteration {}, got {iteration}", trace.len()),
            ));
        }
        trace.push(parse_float(value_cell, path, line_no)?);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------
// Window metadata
// ---------------------------------------------------------------------

pub fn write_windows_csv(
    path: &Path,
    labels: &[WindowLabel],
    starts: &[usize],
) -> Result<(), IoError> {
    if labels.len() != starts.len() {
        return Err(format_err(
            path,
            format!("{} labels for {} starts", labels.len(), starts.len()),
        ));
    }
    let mut out = String::from("window,label,start_sample\n");
    for (i, (label, start)) in labels.iter().zip(starts).enumerate() {
        let _ = writeln!(out, "{i},{label},{start}");
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_windows_csv(path: &Path) -> Result<(Vec<WindowLabel>, Vec<usize>), IoError> {
    let lines = read_lines(path)?;
    if lines.first().map(|l| l.trim()) != Some("window,label,start_sample") {
        return Err(format_err(path, "expected 'window,label,start_sample' header"));
    }
    let mut labels = Vec::new();
    let mut starts = Vec::new();
    for (idx, line) in lines[1..].iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 3 {
            return Err(parse_err(path, line_no, "expected 'window,label,start_sample'"));
        }
        let window = parse_int(cells[0], path, line_no)?;
        if window != labels.len() {
            return Err(parse_err(
                path,
                line_no,
                format!("expected window {}, got {window}", labels.len()),
            ));
        }
        labels.push(
            cells[1]
                .trim()
                .parse::<WindowLabel>()
                .map_err(|e| parse_err(path, line_no, e))?,
        );
        starts.push(parse_int(cells[2], path, line_no)?);
    }
    Ok((labels, starts))
}

// ---------------------------------------------------------------------
// Learned-result directory
// ---------------------------------------------------------------------

pub const TEMPORAL_FILE: &str = "temporal.csv";
pub const TRACE_FILE: &str = "objective_trace.csv";
pub const WINDOWS_FILE: &str = "windows.csv";
pub const CONFIG_FILE: &str = "config.txt";

pub fn spatial_file_name(index_one_based: usize) -> String {
    format!("spatial_{index_one_based:04}.csv")
}

fn window_names(m: usize) -> Vec<String> {
    (0..m).map(|i| format!("w{i:04}")).collect()
}

/// Serializes a learning run: one dense Laplacian CSV per window
/// (1-based numbering), the temporal graph, the objective trace, window
/// metadata, and the configuration with result summary.
pub fn write_learn_result(
    dir: &Path,
    result: &LearnResult,
    config: &LearnConfig,
    channel_names: &[String],
    labels: &[WindowLabel],
    starts: &[usize],
) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    for (idx, lap) in result.spatial.iter().enumerate() {
        write_laplacian_csv(&dir.join(spatial_file_name(idx + 1)), lap, channel_names)?;
    }
    write_laplacian_csv(
        &dir.join(TEMPORAL_FILE),
        &result.temporal,
        &window_names(result.temporal.n_nodes()),
    )?;
    write_objective_trace_csv(&dir.join(TRACE_FILE), &result.objective_trace)?;
    write_windows_csv(&dir.join(WINDOWS_FILE), labels, starts)?;

    let mut doc = KvDocument::new();
    doc.set_float("learn", "beta", config.beta)
        .set("learn", "max_outer_iter", config.max_outer_iter.to_string())
        .set_float("learn", "outer_rel_tol", config.outer_rel_tol)
        .set_float("learn", "kkt_tol", config.kkt_tol)
        .set("learn", "solver_max_iter", config.solver_max_iter.to_string())
        .set("learn", "sweep", config.sweep.to_string())
        .set(
            "learn",
            "normalize_distances",
            config.normalize_distances.to_string(),
        )
        .set("learn", "threads", config.threads.to_string())
        .set("result", "converged", result.converged.to_string())
        .set("result", "outer_iterations", result.outer_iterations.to_string());
    if let Some(last) = result.objective_trace.last() {
        doc.set_float("result", "final_objective", *last);
    }
    doc.save(&dir.join(CONFIG_FILE))
}

/// A learning run read back from disk.
#[derive(Debug, Clone)]
pub struct StoredLearnResult {
    pub spatial: Vec<GraphLaplacian>,
    pub temporal: GraphLaplacian,
    pub objective_trace: Vec<f64>,
    pub channel_names: Vec<String>,
    pub labels: Vec<WindowLabel>,
    pub window_starts: Vec<usize>,
}

pub fn read_learn_result(dir: &Path) -> Result<StoredLearnResult, IoError> {
    let mut spatial = Vec::new();
    let mut channel_names = Vec::new();
    for idx in 1.. {
        let path = dir.join(spatial_file_name(idx));
        if !path.exists() {
            break;
        }
        let (names, lap) = read_laplacian_csv(&path)?;
        if idx == 1 {
            channel_names = names;
        } else if names != channel_names {
            return Err(format_err(&path, "channel names differ between windows"));
        }
        spatial.push(lap);
    }
    if spatial.is_empty() {
        return Err(format_err(dir, "no spatial_0001.csv found"));
    }
    let (_, temporal) = read_laplacian_csv(&dir.join(TEMPORAL_FILE))?;
    let objective_trace = read_objective_trace_csv(&dir.join(TRACE_FILE))?;
    let (labels, window_starts) = read_windows_csv(&dir.join(WINDOWS_FILE))?;
    if labels.len() != spatial.len() {
        return Err(format_err(
            dir,
            format!(
                "{} window labels for {} spatial graphs",
                labels.len(),
                spatial.len()
            ),
        ));
    }
    Ok(StoredLearnResult {
        spatial,
        temporal,
        objective_trace,
        channel_names,
        labels,
        window_starts,
    })
}

// ---------------------------------------------------------------------
// Analysis CSVs
// ---------------------------------------------------------------------

pub fn write_scores_csv(path: &Path, scores: &[ElectrodeScore]) -> Result<(), IoError> {
    let mut out = String::from("rank,channel,score,predicted_soz,true_soz\n");
    for (rank, s) in scores.iter().enumerate() {
        check_name(&s.channel, path)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            rank + 1,
            s.channel,
            format_float(s.score),
            s.predicted_soz,
            s.true_soz
        );
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_dominance_csv(
    path: &Path,
    labels: &[WindowLabel],
    ratios: &[(f64, f64)],
) -> Result<(), IoError> {
    if labels.len() != ratios.len() {
        return Err(format_err(
            path,
            format!("{} labels for {} ratio rows", labels.len(), ratios.len()),
        ));
    }
    let mut out = String::from("window,label,soz_ratio,nonsoz_ratio\n");
    for (i, (label, (soz, non))) in labels.iter().zip(ratios).enumerate() {
        let _ = writeln!(out, "{i},{label},{},{}", format_float(*soz), format_float(*non));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_contrast_csv(path: &Path, within_mean: f64, across_mean: f64) -> Result<(), IoError> {
    let out = format!(
        "within_mean,across_mean\n{},{}\n",
        format_float(within_mean),
        format_float(across_mean)
    );
    fs::write(path, out).map_err(|e| io_err(path, e))
}

const METRICS_HEADER: &str =
    "recording,class0_accuracy,class1_accuracy,total_accuracy,support0,support1";

/// One metrics row per recording id; the id column pairs rows across
/// files when two methods are compared.
pub fn write_metrics_csv(path: &Path, rows: &[(String, ClassMetrics)]) -> Result<(), IoError> {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for (id, m) in rows {
        check_name(id, path)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            id,
            format_float(m.class0_accuracy),
            format_float(m.class1_accuracy),
            format_float(m.total_accuracy),
            m.support0,
            m.support1
        );
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<(String, ClassMetrics)>, IoError> {
    let lines = read_lines(path)?;
    if lines.first().map(|l| l.trim()) != Some(METRICS_HEADER) {
        return Err(format_err(path, format!("expected '{METRICS_HEADER}' header")));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines[1..].iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 2;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 6 {
            return Err(parse_err(path, line_no, "expected 6 cells"));
        }
        rows.push((
            cells[0].trim().to_owned(),
            ClassMetrics {
                class0_accuracy: parse_float(cells[1], path, line_no)?,
                class1_accuracy: parse_float(cells[2], path, line_no)?,
                total_accuracy: parse_float(cells[3], path, line_no)?,
                support0: parse_int(cells[4], path, line_no)?,
                support1: parse_int(cells[5], path, line_no)?,
            },
        ));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------
// Synthesis spec and ground truth
// ---------------------------------------------------------------------

pub const SYNTH_SECTION: &str = "synth";
pub const TRUTH_FILE: &str = "truth.txt";

fn regime_file_name(index: usize) -> String {
    format!("regime_{index:04}.csv")
}

/// Builds a [`SynthSpec`] from a `[synth]` section, starting from the
/// stock two-regime experiment and overriding whatever keys are present.
///
/// Keys: `seed`, `n_nodes`, `m_windows`, `samples_per_window`,
/// `sample_rate`, `noise_std`, `regimes` (e.g. `0..3:ring, 3..13:uniform`),
/// `planted` (`auto:3`, explicit node list, or `none`), `boost`,
/// `active_regimes`.
pub fn parse_synth_spec(doc: &KvDocument) -> Result<SynthSpec, IoError> {
    let s = SYNTH_SECTION;
    let seed = doc.get_u64(s, "seed")?.unwrap_or(0);
    let mut spec = crate::synth::default_two_regime(seed);

    if let Some(n) = doc.get_usize(s, "n_nodes")? {
        spec.n_nodes = n;
    }
    if let Some(m) = doc.get_usize(s, "m_windows")? {
        spec.m_windows = m;
    }
    if let Some(k) = doc.get_usize(s, "samples_per_window")? {
        spec.samples_per_window = k;
    }
    if let Some(rate) = doc.get_f64(s, "sample_rate")? {
        spec.sample_rate = rate;
    }
    if let Some(std) = doc.get_f64(s, "noise_std")? {
        spec.noise_std = std;
    }

    let bad = |key: &str, msg: String| IoError::BadValue {
        section: s.to_owned(),
        key: key.to_owned(),
        message: msg,
    };

    let explicit_regimes = doc.get(s, "regimes").is_some();
    if explicit_regimes {
        let mut regimes = Vec::new();
        for item in doc.get_list(s, "regimes") {
            let (range, kind) = item
                .split_once(':')
                .ok_or_else(|| bad("regimes", format!("'{item}' is not 'a..b:kind'")))?;
            let (lo, hi) = range
                .trim()
                .split_once("..")
                .ok_or_else(|| bad("regimes", format!("'{range}' is not a range 'a..b'")))?;
            let lo: usize = lo
                .trim()
                .parse()
                .map_err(|_| bad("regimes", format!("'{lo}' is not an integer")))?;
            let hi: usize = hi
                .trim()
                .parse()
                .map_err(|_| bad("regimes", format!("'{hi}' is not an integer")))?;
            let weights = match kind.trim() {
                "ring" => ring_weights(spec.n_nodes),
                "uniform" => EdgeWeightVector::uniform(spec.n_nodes),
                other => {
                    return Err(bad(
                        "regimes",
                        format!("unknown regime kind '{other}' (expected 'ring' or 'uniform')"),
                    ))
                }
            };
            regimes.push(Regime {
                windows: lo..hi,
                weights,
            });
        }
        spec.regimes = regimes;
    } else if spec.n_nodes != 10 || spec.m_windows != 13 {
        // Default regimes were built for the stock geometry; rebuild
        // them for the overridden one.
        let split = (spec.m_windows / 4).max(1);
        spec.regimes = vec![
            Regime {
                windows: 0..split,
                weights: ring_weights(spec.n_nodes),
            },
            Regime {
                windows: split..spec.m_windows,
                weights: EdgeWeightVector::uniform(spec.n_nodes),
            },
        ];
    }

    let boost = doc.get_f64(s, "boost")?;
    let active = if doc.get(s, "active_regimes").is_some() {
        let mut idx = Vec::new();
        for item in doc.get_list(s, "active_regimes") {
            idx.push(
                item.parse::<usize>()
                    .map_err(|_| bad("active_regimes", format!("'{item}' is not an integer")))?,
            );
        }
        Some(idx)
    } else {
        None
    };
    match doc.get(s, "planted") {
        Some("none") => spec.planted = None,
        Some(value) => {
            let nodes = if let Some(count) = value.strip_prefix("auto:") {
                let count: usize = count
                    .trim()
                    .parse()
                    .map_err(|_| bad("planted", format!("'{count}' is not an integer")))?;
                sample_planted_nodes(spec.n_nodes, count, seed)
            } else {
                let mut nodes = Vec::new();
                for item in doc.get_list(s, "planted") {
                    nodes.push(
                        item.parse::<usize>()
                            .map_err(|_| bad("planted", format!("'{item}' is not an integer")))?,
                    );
                }
                nodes
            };
            spec.planted = Some(PlantedCommunity {
                nodes,
                boost: boost.unwrap_or(3.0),
                active_regimes: active.unwrap_or_else(|| vec![spec.regimes.len() - 1]),
            });
        }
        None => {
            // Keep the default community but rebase it onto the possibly
            // overridden geometry.
            if let Some(p) = &mut spec.planted {
                if spec.n_nodes != 10 {
                    p.nodes = sample_planted_nodes(spec.n_nodes, 3, seed);
                }
                if let Some(b) = boost {
                    p.boost = b;
                }
                if let Some(a) = active {
                    p.active_regimes = a;
                } else if p.active_regimes.iter().any(|&r| r >= spec.regimes.len()) {
                    p.active_regimes = vec![spec.regimes.len() - 1];
                }
            }
        }
    }

    spec.seed = seed;
    spec.validate()?;
    Ok(spec)
}

/// Ground-truth sidecar: the generating graphs as edge-list CSVs plus a
/// text index mapping windows to regimes and naming the planted
/// channels.
pub fn write_truth_sidecar(dir: &Path, output: &SynthOutput) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let names = output.recording.channel_names();
    let soz_names: Vec<String> = names
        .iter()
        .zip(&output.soz_mask)
        .filter(|(_, &s)| s)
        .map(|(n, _)| n.clone())
        .collect();
    let regimes: Vec<String> = output.window_regimes.iter().map(|r| r.to_string()).collect();
    let mut doc = KvDocument::new();
    doc.set("truth", "n_nodes", output.recording.n_channels().to_string())
        .set("truth", "regime_count", output.regime_graphs.len().to_string())
        .set_list("truth", "soz", &soz_names)
        .set_list("truth", "window_regimes", &regimes);
    doc.save(&dir.join(TRUTH_FILE))?;
    for (idx, graph) in output.regime_graphs.iter().enumerate() {
        let weights = graph.edge_weights();
        write_edge_list_csv(
            &dir.join(regime_file_name(idx)),
            graph.n_nodes(),
            weights.weights(),
        )?;
    }
    Ok(())
}

/// Ground truth read back from a synthesis output directory.
#[derive(Debug, Clone)]
pub struct StoredTruth {
    pub soz_names: Vec<String>,
    pub window_regimes: Vec<usize>,
    pub regime_graphs: Vec<GraphLaplacian>,
}

pub fn read_truth_sidecar(dir: &Path) -> Result<StoredTruth, IoError> {
    let doc = KvDocument::load(&dir.join(TRUTH_FILE))?;
    let regime_count = doc
        .get_usize("truth", "regime_count")?
        .ok_or_else(|| IoError::MissingKey {
            section: "truth".into(),
            key: "regime_count".into(),
        })?;
    let mut window_regimes = Vec::new();
    for item in doc.get_list("truth", "window_regimes") {
        window_regimes.push(item.parse::<usize>().map_err(|_| IoError::BadValue {
            section: "truth".into(),
            key: "window_regimes".into(),
            message: format!("'{item}' is not an integer"),
        })?);
    }
    let mut regime_graphs = Vec::new();
    for idx in 0..regime_count {
        let (n, values) = read_edge_list_csv(&dir.join(regime_file_name(idx)))?;
        regime_graphs.push(EdgeWeightVector::new(n, values)?.to_laplacian());
    }
    Ok(StoredTruth {
        soz_names: doc.get_list("truth", "soz"),
        window_regimes,
        regime_graphs,
    })
}
