//! `.gsk` skeleton files: a JSON document
//! `{"name", "joints": [n labels], "times": [T], "frames": [T][n][16]}`
//! with each pose a row-major 4x4 matrix.

use std::fs;
use std::path::Path;

use gora_core::{Pose, SkeletonSequence};
use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("line {line}: {message}")]
    Text { line: usize, message: String },
    #[error("{0}")]
    Layout(String),
    #[error("frame {frame}, joint {joint}: {source}")]
    Pose {
        frame: usize,
        joint: usize,
        source: gora_core::Error,
    },
    #[error(transparent)]
    Sequence(#[from] gora_core::Error),
}

impl FormatError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        FormatError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Document {
    name: String,
    joints: Vec<String>,
    times: Vec<f64>,
    frames: Vec<Vec<Vec<f64>>>,
}

/// Parses a `.gsk` document. Time stamps may use any unit; they are mapped
/// affinely onto `[0, 1]`.
pub fn parse_gsk(text: &str) -> Result<SkeletonSequence, FormatError> {
    let doc: Document = serde_json::from_str(text)?;
    let n = doc.joints.len();
    if n == 0 {
        return Err(FormatError::Layout("no joints".into()));
    }
    if doc.frames.len() != doc.times.len() {
        return Err(FormatError::Layout(format!(
            "{} frames but {} times",
            doc.frames.len(),
            doc.times.len()
        )));
    }
    if let Some(i) = doc.times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(FormatError::Layout(format!(
            "non-monotone times at frame {}",
            i + 1
        )));
    }
    let mut poses = Vec::with_capacity(n * doc.frames.len());
    for (i, frame) in doc.frames.iter().enumerate() {
        if frame.len() != n {
            return Err(FormatError::Layout(format!(
                "frame {i} has {} joints, expected {n}",
                frame.len()
            )));
        }
        for (j, values) in frame.iter().enumerate() {
            if values.len() != 16 {
                return Err(FormatError::Layout(format!(
                    "frame {i}, joint {j}: expected 16 matrix entries, got {}",
                    values.len()
                )));
            }
            let m = Matrix4::from_row_slice(values);
            poses.push(Pose::new(m).map_err(|source| FormatError::Pose {
                frame: i,
                joint: j,
                source,
            })?);
        }
    }
    Ok(SkeletonSequence::with_normalized_times(
        doc.name, doc.joints, doc.times, poses,
    )?)
}

pub fn to_gsk_string(seq: &SkeletonSequence) -> String {
    let frames = (0..seq.len())
        .map(|i| {
            seq.frame(i)
                .iter()
                .map(|p| {
                    let m = p.matrix();
                    (0..4)
                        .flat_map(|r| (0..4).map(move |c| m[(r, c)]))
                        .collect()
                })
                .collect()
        })
        .collect();
    let doc = Document {
        name: seq.name().to_string(),
        joints: seq.joint_labels().to_vec(),
        times: seq.times().to_vec(),
        frames,
    };
    serde_json::to_string(&doc).expect("plain data always serializes")
}

pub fn read_gsk(path: &Path) -> Result<SkeletonSequence, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_gsk(&text)
}

pub fn write_gsk(seq: &SkeletonSequence, path: &Path) -> Result<(), FormatError> {
    fs::write(path, to_gsk_string(seq)).map_err(|e| FormatError::io(path, e))
}
