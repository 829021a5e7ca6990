use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::datamodel::{save_dataset, ProcedureRecord};

use super::{SynthError, SynthOutput};

pub const TRACE_FILE_NAME: &str = "trace.json";
pub const TRACE_VERSION: u32 = 1;

/// Hidden ground truth of one generated procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcedureTrace {
    pub id: String,
    pub ptype: u8,
    pub n: usize,
    /// Last frame (1-based, inclusive) of every phase.
    pub phase_ends: Vec<usize>,
    /// Per-procedure multiplier of the insufflated volume.
    pub volume_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRun {
    pub phase: usize,
    pub start: usize,
    pub end: usize,
}

impl ProcedureTrace {
    /// Contiguous phase runs partitioning 1..=n.
    pub fn runs(&self) -> Vec<PhaseRun> {
        let mut start = 1;
        self.phase_ends
            .iter()
            .enumerate()
            .map(|(phase, &end)| {
                let run = PhaseRun { phase, start, end };
                start = end + 1;
                run
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthTrace {
    pub format_version: u32,
    pub seed: u64,
    pub procedures: Vec<ProcedureTrace>,
}

impl SynthTrace {
    pub fn new(seed: u64, procedures: Vec<ProcedureTrace>) -> Self {
        Self {
            format_version: TRACE_VERSION,
            seed,
            procedures,
        }
    }

    pub fn find(&self, id: &str) -> Option<&ProcedureTrace> {
        self.procedures.iter().find(|p| p.id == id)
    }
}

/// True progress and hidden phase per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleProgress {
    pub progress: Vec<f64>,
    pub phases: Vec<usize>,
}

pub fn oracle_progress(
    record: &ProcedureRecord,
    trace: &SynthTrace,
) -> Result<OracleProgress, SynthError> {
    let foreign = || SynthError::ForeignRecord(record.id().to_string());
    let t = trace.find(record.id()).ok_or_else(foreign)?;
    if t.n != record.duration() || t.ptype != record.ptype().id() {
        return Err(foreign());
    }
    let n = t.n;
    let progress = (1..=n).map(|i| i as f64 / n as f64).collect();
    let mut phases = Vec::with_capacity(n);
    for run in t.runs() {
        phases.extend(std::iter::repeat_n(run.phase, run.end + 1 - run.start));
    }
    Ok(OracleProgress { progress, phases })
}

/// Writes the records in the dataset format plus the trace sidecar.
pub fn save_synthetic(out: &SynthOutput, dir: &Path) -> Result<(), SynthError> {
    save_dataset(&out.records, dir)?;
    let path = dir.join(TRACE_FILE_NAME);
    let mut text = serde_json::to_string_pretty(&out.trace).expect("trace serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|source| SynthError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads a trace from a file or from `trace.json` inside a directory.
pub fn load_trace(path: &Path) -> Result<SynthTrace, SynthError> {
    let path = if path.is_dir() {
        path.join(TRACE_FILE_NAME)
    } else {
        path.to_path_buf()
    };
    let text = fs::read_to_string(&path).map_err(|source| SynthError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| SynthError::Trace(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::progress_label;
    use crate::synthgen::{generate, SynthSpec};

    fn out() -> SynthOutput {
        generate(&SynthSpec {
            n_procedures: 5,
            seed: 11,
            d_img: 4,
            ..SynthSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn oracle_matches_labels_and_runs() {
        let o = out();
        for r in &o.records {
            let or = oracle_progress(r, &o.trace).unwrap();
            let n = r.duration();
            for i in 1..=n {
                assert_eq!(or.progress[i - 1], progress_label(i, n).unwrap());
            }
            assert_eq!(or.phases.len(), n);
            assert!(or
                .phases
                .windows(2)
                .all(|w| w[1] == w[0] || w[1] == w[0] + 1));
            assert_eq!((or.phases[0], or.phases[n - 1]), (0, 5));
        }
    }

    #[test]
    fn foreign_records_rejected() {
        let a = out();
        let b = generate(&SynthSpec {
            n_procedures: 5,
            seed: 12,
            d_img: 4,
            ..SynthSpec::default()
        })
        .unwrap();
        // Same ids, different procedures.
        let mismatched = b.records.iter().any(|r| {
            matches!(
                oracle_progress(r, &a.trace),
                Err(SynthError::ForeignRecord(_))
            )
        });
        assert!(mismatched);
        let empty = SynthTrace::new(0, vec![]);
        assert!(oracle_progress(&a.records[0], &empty).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let o = out();
        let dir = tempfile::tempdir().unwrap();
        save_synthetic(&o, dir.path()).unwrap();
        assert_eq!(load_trace(dir.path()).unwrap(), o.trace);
        assert_eq!(
            crate::datamodel::load_dataset(dir.path()).unwrap(),
            o.records
        );
    }
}
