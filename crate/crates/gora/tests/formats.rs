use gora::gsk::{parse_gsk, read_gsk, to_gsk_string, write_gsk, FormatError};
use gora::ntu::{parse_ntu, NTU_JOINTS};
use gora_core::sequence::generate_synthetic;

#[test]
fn gsk_round_trip_is_bit_identical() {
    let seq = generate_synthetic(3, 17, 4, 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.gsk");
    write_gsk(&seq, &path).unwrap();
    let back = read_gsk(&path).unwrap();
    assert_eq!(back.name(), seq.name());
    assert_eq!(back.joint_labels(), seq.joint_labels());
    assert_eq!(back.times(), seq.times());
    for i in 0..seq.len() {
        for (p, q) in seq.frame(i).iter().zip(back.frame(i)) {
            assert_eq!(p.matrix(), q.matrix());
        }
    }
}

fn document(times: &str, pose_of: impl Fn(usize, usize) -> [f64; 16]) -> String {
    let t: Vec<f64> = serde_json::from_str(times).unwrap();
    let frames: Vec<Vec<Vec<f64>>> = (0..t.len())
        .map(|i| (0..4).map(|j| pose_of(i, j).to_vec()).collect())
        .collect();
    serde_json::json!({"name": "x", "joints": ["a", "b", "c", "d"], "times": t, "frames": frames})
        .to_string()
}

const IDENTITY: [f64; 16] = [
    1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.,
];

#[test]
fn gsk_rejects_non_monotone_times() {
    let err = parse_gsk(&document("[0.0, 0.5, 0.4, 1.0]", |_, _| IDENTITY)).unwrap_err();
    assert!(
        err.to_string().contains("non-monotone times at frame 2"),
        "{err}"
    );
}

#[test]
fn gsk_names_the_improper_rotation() {
    let text = document("[0.0, 1.0, 2.0]", |i, j| {
        let mut m = IDENTITY;
        if (i, j) == (0, 3) {
            m[0] = -1.0;
        }
        m
    });
    match parse_gsk(&text).unwrap_err() {
        FormatError::Pose {
            frame,
            joint,
            source,
        } => {
            assert_eq!((frame, joint), (0, 3));
            assert!(!source.is_numerical_degeneracy());
        }
        other => panic!("unexpected error {other}"),
    }
}

#[test]
fn gsk_times_are_normalized() {
    let seq = parse_gsk(&document("[10.0, 12.0, 14.0, 18.0]", |_, _| IDENTITY)).unwrap();
    assert_eq!(seq.times(), &[0.0, 0.25, 0.5, 1.0]);
    let text = to_gsk_string(&seq);
    assert_eq!(parse_gsk(&text).unwrap().times(), seq.times());
}

fn ntu_body(frame: usize, zero_quat_joint: Option<usize>) -> String {
    let mut s = String::from("72057594037931101 0 1 1 1 1 0 0.1 0.2 2\n25\n");
    for j in 0..25 {
        let x = 0.01 * frame as f64 + 0.1 * j as f64;
        let q = if Some(j) == zero_quat_joint {
            "0 0 0 0"
        } else {
            "0.9238795 0 0.3826834 0"
        };
        s += &format!("{x} 0.5 3.0 100 200 300 400 {q} 2\n");
    }
    s
}

#[test]
fn ntu_keeps_first_body_and_drops_unoriented_joints() {
    let mut text = String::from("4\n");
    text += &format!("1\n{}", ntu_body(0, Some(3)));
    text += "0\n";
    text += &format!("2\n{}{}", ntu_body(2, None), ntu_body(50, None));
    text += &format!("1\n{}", ntu_body(3, None));
    let seq = parse_ntu("clip", &text).unwrap();
    assert_eq!(seq.len(), 3);
    assert_eq!(seq.joint_count(), 24);
    assert!(seq.joint_index(NTU_JOINTS[3]).is_none());
    assert_eq!(seq.times(), &[0.0, 2.0 / 3.0, 1.0]);
    let p = seq.pose(1, seq.joint_index(NTU_JOINTS[0]).unwrap());
    assert!((p.translation().x - 0.02).abs() < 1e-12);
}

#[test]
fn ntu_reports_truncation_line() {
    let text = format!("2\n1\n{}", ntu_body(0, None));
    match parse_ntu("clip", &text).unwrap_err() {
        FormatError::Text { line, .. } => assert_eq!(line, 30),
        other => panic!("unexpected error {other}"),
    }
}
