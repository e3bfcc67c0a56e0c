//! Reader for the NTU RGB+D `.skeleton` text layout.
//!
//! ```text
//! <frame count>
//! per frame:
//!   <body count>
//!   per body:
//!     <10 body fields: id, clipped edges, hand states, lean x/y, tracking>
//!     <joint count = 25>
//!     per joint: x y z depthX depthY colorX colorY qw qx qy qz tracking
//! ```
//!
//! Only the first body of each frame is used and frames without a body are
//! skipped. Positions are in metres at 30 frames per second. Joints whose
//! orientation quaternion is zero in any kept frame (Kinect reports none for
//! the extremities) are dropped.

use std::path::Path;

use gora_core::{Pose, SkeletonSequence};
use nalgebra::{Quaternion, UnitQuaternion, Vector3};

use crate::gsk::FormatError;

pub const NTU_JOINTS: [&str; 25] = [
    "SpineBase",
    "SpineMid",
    "Neck",
    "Head",
    "ShoulderLeft",
    "ElbowLeft",
    "WristLeft",
    "HandLeft",
    "ShoulderRight",
    "ElbowRight",
    "WristRight",
    "HandRight",
    "HipLeft",
    "KneeLeft",
    "AnkleLeft",
    "FootLeft",
    "HipRight",
    "KneeRight",
    "AnkleRight",
    "FootRight",
    "SpineShoulder",
    "HandTipLeft",
    "ThumbLeft",
    "HandTipRight",
    "ThumbRight",
];

const FRAME_RATE: f64 = 30.0;
const BODY_FIELDS: usize = 10;
const JOINT_FIELDS: usize = 12;

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> FormatError {
        FormatError::Text {
            line: self.line,
            message: message.into(),
        }
    }

    fn fields(&mut self) -> Result<Vec<&'a str>, FormatError> {
        loop {
            let (i, l) = self.inner.next().ok_or_else(|| FormatError::Text {
                line: self.line + 1,
                message: "unexpected end of file".into(),
            })?;
            self.line = i + 1;
            let f: Vec<&str> = l.split_whitespace().collect();
            if !f.is_empty() {
                return Ok(f);
            }
        }
    }

    fn count(&mut self) -> Result<usize, FormatError> {
        let f = self.fields()?;
        match f.as_slice() {
            [v] => v
                .parse()
                .map_err(|_| self.err(format!("expected a count, got {v:?}"))),
            _ => Err(self.err(format!("expected a single count, got {} fields", f.len()))),
        }
    }

    fn numbers(&mut self, expected: usize) -> Result<Vec<f64>, FormatError> {
        let f = self.fields()?;
        if f.len() != expected {
            return Err(self.err(format!("expected {expected} fields, got {}", f.len())));
        }
        f.iter()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| self.err(format!("not a number: {v:?}")))
            })
            .collect()
    }
}

type JointRecord = (Vector3<f64>, [f64; 4]);

pub fn parse_ntu(name: &str, text: &str) -> Result<SkeletonSequence, FormatError> {
    let mut lines = Lines::new(text);
    let frame_count = lines.count()?;
    let mut kept: Vec<(usize, Vec<JointRecord>)> = Vec::new();
    for frame in 0..frame_count {
        let bodies = lines.count()?;
        let mut first = None;
        for body in 0..bodies {
            lines.numbers(BODY_FIELDS)?;
            let joints = lines.count()?;
            if joints != NTU_JOINTS.len() {
                return Err(lines.err(format!(
                    "expected {} joints, got {joints}",
                    NTU_JOINTS.len()
                )));
            }
            let mut records = Vec::with_capacity(joints);
            for _ in 0..joints {
                let v = lines.numbers(JOINT_FIELDS)?;
                records.push((Vector3::new(v[0], v[1], v[2]), [v[7], v[8], v[9], v[10]]));
            }
            if body == 0 {
                first = Some(records);
            }
        }
        if let Some(records) = first {
            kept.push((frame, records));
        }
    }
    if kept.len() < 2 {
        return Err(FormatError::Layout(format!(
            "only {} frames contain a body",
            kept.len()
        )));
    }

    let oriented: Vec<usize> = (0..NTU_JOINTS.len())
        .filter(|&j| kept.iter().all(|(_, r)| r[j].1.iter().any(|&q| q != 0.0)))
        .collect();
    if oriented.is_empty() {
        return Err(FormatError::Layout(
            "no joint carries an orientation".into(),
        ));
    }
    let mut poses = Vec::with_capacity(kept.len() * oriented.len());
    for (frame, records) in &kept {
        for &j in &oriented {
            let (p, [w, x, y, z]) = records[j];
            let q = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
            let pose =
                Pose::from_parts(q.to_rotation_matrix().into_inner(), p).map_err(|source| {
                    FormatError::Pose {
                        frame: *frame,
                        joint: j,
                        source,
                    }
                })?;
            poses.push(pose);
        }
    }
    let times = kept.iter().map(|(f, _)| *f as f64 / FRAME_RATE).collect();
    let labels = oriented.iter().map(|&j| NTU_JOINTS[j]);
    Ok(SkeletonSequence::with_normalized_times(
        name, labels, times, poses,
    )?)
}

pub fn read_ntu(path: &Path) -> Result<SkeletonSequence, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_ntu(&name, &text)
}
