//! On-disk dataset format.
//!
//! One procedure per UTF-8 file, one JSON object per line. Line 1 is the
//! header, lines `2..=N+1` are frames `t = 1..=N`. Device values are stored in
//! raw units and normalized when read back.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChannelSet, DataError, DeviceSample, Frame, ProcedureRecord, ProcedureType};

pub const FORMAT_VERSION: u32 = 1;

/// File extension used for procedure files.
pub const RECORD_EXTENSION: &str = "jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordHeader {
    pub format_version: u32,
    pub id: String,
    pub ptype: u8,
    /// Duration in seconds. Optional only for live streams fed to a session.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub channels: ChannelSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameLine {
    t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    device: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tools: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    img: Option<Vec<f64>>,
}

/// Parses and validates a header line.
pub fn parse_header(line: &str) -> Result<RecordHeader, String> {
    let header: RecordHeader =
        serde_json::from_str(line).map_err(|e| format!("malformed header: {e}"))?;
    if header.format_version != FORMAT_VERSION {
        return Err(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            header.format_version
        ));
    }
    ProcedureType::new(header.ptype).map_err(|e| e.to_string())?;
    super::record::validate_id(&header.id).map_err(|e| e.to_string())?;
    if header.channels.image && header.channels.d_img == 0 {
        return Err("image channel enabled with d_img = 0".into());
    }
    if !header.channels.image && header.channels.d_img != 0 {
        return Err("d_img must be 0 when the image channel is absent".into());
    }
    Ok(header)
}

/// Parses one frame line and checks it against the declared channels.
pub fn parse_frame(line: &str, channels: &ChannelSet, expected_t: usize) -> Result<Frame, String> {
    let raw: FrameLine = serde_json::from_str(line).map_err(|e| format!("malformed frame: {e}"))?;
    if raw.t != expected_t {
        return Err(DataError::NonConsecutive {
            expected: expected_t,
            found: raw.t,
        }
        .to_string());
    }
    let device = raw
        .device
        .map(|values| {
            if values.len() != super::DEVICE_SIGNALS {
                return Err(DataError::Dimension {
                    channel: "device",
                    expected: super::DEVICE_SIGNALS,
                    found: values.len(),
                });
            }
            DeviceSample::from_raw(values)
        })
        .transpose()
        .map_err(|e| e.to_string())?;
    let frame = Frame {
        t: raw.t,
        device,
        tools: raw.tools,
        image: raw.img,
    };
    frame.check(channels).map_err(|e| e.to_string())?;
    Ok(frame)
}

fn parse_error(file: &Path, line: usize, reason: impl Into<String>) -> DataError {
    DataError::Parse {
        file: file.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads a single procedure file.
pub fn load_record(path: &Path) -> Result<ProcedureRecord, DataError> {
    let file = fs::File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = BufReader::new(file).lines();
    let mut next_line = |lineno: usize| -> Result<Option<String>, DataError> {
        match lines.next() {
            None => Ok(None),
            Some(Ok(line)) => Ok(Some(line)),
            Some(Err(e)) => Err(parse_error(path, lineno, format!("unreadable line: {e}"))),
        }
    };

    let header_line = next_line(1)?.ok_or_else(|| parse_error(path, 1, "empty file"))?;
    let header = parse_header(&header_line).map_err(|r| parse_error(path, 1, r))?;
    let n = header
        .n
        .ok_or_else(|| parse_error(path, 1, "header is missing duration `n`"))?;
    if n == 0 {
        return Err(parse_error(path, 1, "duration n must be at least 1"));
    }

    let mut frames = Vec::with_capacity(n);
    for t in 1..=n {
        let lineno = t + 1;
        let line = next_line(lineno)?.ok_or_else(|| {
            parse_error(
                path,
                lineno,
                format!(
                    "truncated: header declares n = {n} but only {} frames",
                    t - 1
                ),
            )
        })?;
        frames.push(
            parse_frame(&line, &header.channels, t).map_err(|r| parse_error(path, lineno, r))?,
        );
    }
    if let Some(extra) = next_line(n + 2)? {
        if !extra.trim().is_empty() || next_line(n + 3)?.is_some() {
            return Err(parse_error(
                path,
                n + 2,
                format!("trailing content after {n} declared frames"),
            ));
        }
    }

    let ptype =
        ProcedureType::new(header.ptype).map_err(|e| parse_error(path, 1, e.to_string()))?;
    ProcedureRecord::new(header.id, ptype, header.channels, frames)
        .map_err(|e| parse_error(path, 1, e.to_string()))
}

/// Loads a dataset from a directory of procedure files (sorted by file name)
/// or from a single procedure file.
pub fn load_dataset(path: &Path) -> Result<Vec<ProcedureRecord>, DataError> {
    if path.is_file() {
        return Ok(vec![load_record(path)?]);
    }
    let entries = fs::read_dir(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let p = entry.path();
        if p.is_file() && p.extension().is_some_and(|e| e == RECORD_EXTENSION) {
            files.push(p);
        }
    }
    files.sort();

    let mut records = Vec::with_capacity(files.len());
    let mut seen = std::collections::HashSet::new();
    for file in &files {
        let record = load_record(file)?;
        if !seen.insert(record.id().to_string()) {
            return Err(parse_error(
                file,
                1,
                format!("duplicate procedure id {}", record.id()),
            ));
        }
        records.push(record);
    }
    Ok(records)
}

/// Serializes one record into the line format.
pub fn write_record<W: Write>(record: &ProcedureRecord, mut out: W) -> std::io::Result<()> {
    let header = RecordHeader {
        format_version: FORMAT_VERSION,
        id: record.id().to_string(),
        ptype: record.ptype().id(),
        n: Some(record.duration()),
        channels: *record.channels(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for frame in record.frames() {
        let line = FrameLine {
            t: frame.t,
            device: frame.device.as_ref().map(|d| d.raw().to_vec()),
            tools: frame.tools.clone(),
            img: frame.image.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// File name used for the `index`-th record of a dataset. The numeric prefix
/// keeps directory order equal to dataset order.
pub fn record_file_name(index: usize, record: &ProcedureRecord) -> String {
    format!("{index:06}_{}.{RECORD_EXTENSION}", record.id())
}

/// Writes every record into `dir`, creating it if needed.
pub fn save_dataset(records: &[ProcedureRecord], dir: &Path) -> Result<(), DataError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| DataError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (index, record) in records.iter().enumerate() {
        let path = dir.join(record_file_name(index, record));
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut writer = std::io::BufWriter::new(file);
        write_record(record, &mut writer).map_err(io_err(&path))?;
        writer.flush().map_err(io_err(&path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::{DEVICE_SIGNALS, TOOL_COUNT};

    fn two_frame_file() -> String {
        let header = r#"{"format_version":1,"id":"p1","ptype":2,"n":2,"channels":{"device":true,"tools":true,"image":false,"d_img":0}}"#;
        let dev = vec!["1.5"; DEVICE_SIGNALS].join(",");
        let tools = vec!["0"; TOOL_COUNT].join(",");
        format!(
            "{header}\n{{\"t\":1,\"device\":[{dev}],\"tools\":[{tools}]}}\n{{\"t\":2,\"device\":[{dev}],\"tools\":[{tools}]}}\n"
        )
    }

    fn write_tmp(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn loads_well_formed_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "a.jsonl", &two_frame_file());
        let rec = load_record(&p).unwrap();
        assert_eq!(rec.duration(), 2);
        assert_eq!(rec.ptype().id(), 2);
        let dev = rec.frames()[0].device.as_ref().unwrap();
        assert_eq!(dev.raw()[0], 1.5);
        assert_eq!(dev.normalized()[0], 1.5 / 215.0);
    }

    #[test]
    fn short_device_vector_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let body = two_frame_file().replacen("[1.5,", "[", 2);
        let p = write_tmp(dir.path(), "a.jsonl", &body);
        let err = load_record(&p).unwrap_err();
        match err {
            DataError::Parse { line, reason, .. } => {
                assert_eq!(line, 2);
                assert!(reason.contains("device"), "{reason}");
                assert!(reason.contains("13"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gap_in_t_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let body = two_frame_file().replace("{\"t\":2", "{\"t\":3");
        let p = write_tmp(dir.path(), "a.jsonl", &body);
        let err = load_record(&p).unwrap_err();
        assert!(matches!(err, DataError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn empty_dataset_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("empty");
        save_dataset(&[], &target).unwrap();
        assert!(target.is_dir());
        assert!(load_dataset(&target).unwrap().is_empty());
    }

    #[test]
    fn header_version_checked() {
        let bad = r#"{"format_version":2,"id":"p1","ptype":2,"n":2,"channels":{"device":true,"tools":true,"image":false,"d_img":0}}"#;
        assert!(parse_header(bad).unwrap_err().contains("format_version"));
    }
}
