//! Exact DTW and FastDTW under the skeleton frame distance.

use alloc::vec;
use alloc::vec::Vec;

use crate::align::frame_distance;
use crate::error::{Error, Result};
use crate::liegroup::{project_to_so3, Pose, WeightMatrix};
use crate::sequence::SkeletonSequence;

/// An optimal monotone alignment between two frame sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Warping {
    /// Accumulated frame distance along the path.
    pub cost: f64,
    /// Frame index pairs from `(0, 0)` to `(T₁ − 1, T₂ − 1)`.
    pub path: Vec<(usize, usize)>,
    /// `cost` divided by the number of path nodes.
    pub normalized_cost: f64,
}

/// Inclusive column range searched in each row of the cost grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    rows: Vec<(usize, usize)>,
    cols: usize,
}

impl Window {
    pub fn full(rows: usize, cols: usize) -> Self {
        Window {
            rows: vec![(0, cols.saturating_sub(1)); rows],
            cols,
        }
    }

    pub fn from_ranges(rows: Vec<(usize, usize)>, cols: usize) -> Result<Self> {
        if rows.is_empty() || cols == 0 {
            return Err(Error::InvalidParameter("empty DTW window".into()));
        }
        if rows.iter().any(|&(lo, hi)| lo > hi || hi >= cols) {
            return Err(Error::InvalidParameter(
                "DTW window row out of bounds".into(),
            ));
        }
        Ok(Window { rows, cols })
    }

    pub fn rows(&self) -> &[(usize, usize)] {
        &self.rows
    }

    /// Number of cells searched.
    pub fn cells(&self) -> usize {
        self.rows.iter().map(|(lo, hi)| hi - lo + 1).sum()
    }
}

/// Poses of a sequence viewed frame by frame.
#[derive(Debug, Clone)]
struct Frames {
    joints: usize,
    poses: Vec<Pose>,
}

impl Frames {
    fn of(seq: &SkeletonSequence) -> Self {
        Frames {
            joints: seq.joint_count(),
            poses: seq.frames().to_vec(),
        }
    }

    fn len(&self) -> usize {
        self.poses.len() / self.joints
    }

    fn frame(&self, i: usize) -> &[Pose] {
        &self.poses[i * self.joints..(i + 1) * self.joints]
    }

    /// Halves the frame rate: adjacent pairs are merged by averaging
    /// translations and projecting the mean rotation back onto SO(3). An odd
    /// trailing frame is kept as is.
    fn coarsen(&self) -> Result<Self> {
        let t = self.len();
        let mut poses = Vec::with_capacity(t.div_ceil(2) * self.joints);
        for k in 0..t / 2 {
            for (a, b) in self.frame(2 * k).iter().zip(self.frame(2 * k + 1)) {
                let r = project_to_so3(&((a.rotation() + b.rotation()) * 0.5))?;
                let p = (a.translation() + b.translation()) * 0.5;
                poses.push(Pose::from_parts_unchecked(r, p));
            }
        }
        if t % 2 == 1 {
            poses.extend_from_slice(self.frame(t - 1));
        }
        Ok(Frames {
            joints: self.joints,
            poses,
        })
    }
}

fn check_pair(a: &SkeletonSequence, b: &SkeletonSequence) -> Result<()> {
    if a.joint_count() != b.joint_count() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{} joints vs {} joints",
            a.joint_count(),
            b.joint_count()
        )));
    }
    Ok(())
}

/// Exact DTW over the full `T₁ × T₂` grid.
pub fn dtw(a: &SkeletonSequence, b: &SkeletonSequence, w: &WeightMatrix) -> Result<Warping> {
    check_pair(a, b)?;
    run_window(
        &Frames::of(a),
        &Frames::of(b),
        w,
        &Window::full(a.len(), b.len()),
    )
}

/// DTW restricted to `window`; cells outside it are unreachable.
pub fn dtw_windowed(
    a: &SkeletonSequence,
    b: &SkeletonSequence,
    w: &WeightMatrix,
    window: &Window,
) -> Result<Warping> {
    check_pair(a, b)?;
    if window.rows.len() != a.len() || window.cols != b.len() {
        return Err(Error::ShapeMismatch(alloc::format!(
            "window is {}x{}, grid is {}x{}",
            window.rows.len(),
            window.cols,
            a.len(),
            b.len()
        )));
    }
    run_window(&Frames::of(a), &Frames::of(b), w, window)
}

/// Multi-resolution approximate DTW searching `radius` cells around the
/// path projected up from half resolution.
pub fn fastdtw(
    a: &SkeletonSequence,
    b: &SkeletonSequence,
    w: &WeightMatrix,
    radius: usize,
) -> Result<Warping> {
    check_pair(a, b)?;
    fast(&Frames::of(a), &Frames::of(b), w, radius)
}

fn fast(a: &Frames, b: &Frames, w: &WeightMatrix, radius: usize) -> Result<Warping> {
    let min_size = radius + 2;
    let (ta, tb) = (a.len(), b.len());
    if ta <= min_size || tb <= min_size {
        return run_window(a, b, w, &Window::full(ta, tb));
    }
    let coarse = fast(&a.coarsen()?, &b.coarsen()?, w, radius)?;
    let window = expand_window(&coarse.path, ta, tb, radius);
    run_window(a, b, w, &window)
}

/// Widens a half-resolution path by `radius` cells and maps it onto the
/// full-resolution grid.
fn expand_window(path: &[(usize, usize)], ta: usize, tb: usize, radius: usize) -> Window {
    let ca = ta.div_ceil(2);
    let cb = tb.div_ceil(2);
    let mut span = vec![(usize::MAX, 0usize); ca];
    for &(i, j) in path {
        let s = &mut span[i];
        s.0 = s.0.min(j);
        s.1 = s.1.max(j);
    }
    let mut rows = Vec::with_capacity(ta);
    for ci in 0..ca {
        let (mut lo, mut hi) = (usize::MAX, 0usize);
        for &(a, b) in &span[ci.saturating_sub(radius)..=(ci + radius).min(ca - 1)] {
            lo = lo.min(a.saturating_sub(radius));
            hi = hi.max(b + radius);
        }
        let hi = hi.min(cb - 1);
        let range = (2 * lo, (2 * hi + 1).min(tb - 1));
        for fine in [2 * ci, 2 * ci + 1] {
            if fine < ta {
                rows.push(range);
            }
        }
    }
    Window { rows, cols: tb }
}

fn run_window(a: &Frames, b: &Frames, w: &WeightMatrix, window: &Window) -> Result<Warping> {
    let rows = &window.rows;
    let mut acc: Vec<Vec<f64>> = Vec::with_capacity(rows.len());
    let at = |acc: &Vec<Vec<f64>>, i: usize, j: usize| -> f64 {
        let (lo, hi) = rows[i];
        if j < lo || j > hi {
            f64::INFINITY
        } else {
            acc[i][j - lo]
        }
    };
    for (i, &(lo, hi)) in rows.iter().enumerate() {
        let mut row = Vec::with_capacity(hi - lo + 1);
        for j in lo..=hi {
            let c = frame_distance(a.frame(i), b.frame(j), w)?;
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let left = if j > lo {
                    row[j - lo - 1]
                } else {
                    f64::INFINITY
                };
                let (diag, up) = if i > 0 {
                    (
                        if j > 0 {
                            at(&acc, i - 1, j - 1)
                        } else {
                            f64::INFINITY
                        },
                        at(&acc, i - 1, j),
                    )
                } else {
                    (f64::INFINITY, f64::INFINITY)
                };
                diag.min(up).min(left)
            };
            row.push(best + c);
        }
        acc.push(row);
    }
    let (mut i, mut j) = (rows.len() - 1, window.cols - 1);
    let cost = at(&acc, i, j);
    if !cost.is_finite() {
        return Err(Error::InvalidParameter(
            "DTW window does not connect the corners".into(),
        ));
    }
    let mut path = vec![(i, j)];
    while i > 0 || j > 0 {
        let diag = if i > 0 && j > 0 {
            at(&acc, i - 1, j - 1)
        } else {
            f64::INFINITY
        };
        let up = if i > 0 {
            at(&acc, i - 1, j)
        } else {
            f64::INFINITY
        };
        let left = if j > 0 {
            at(&acc, i, j - 1)
        } else {
            f64::INFINITY
        };
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i, j));
    }
    path.reverse();
    let normalized_cost = cost / path.len() as f64;
    Ok(Warping {
        cost,
        path,
        normalized_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instrument::measure;
    use crate::liegroup::{exp_se3, Twist};
    use crate::sequence::{generate_synthetic, uniform_grid};
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sequence(rng: &mut ChaCha8Rng, t: usize, n: usize) -> SkeletonSequence {
        let frames = (0..t * n)
            .map(|_| {
                let mut v = || rng.random_range(-1.0..1.0);
                exp_se3(&Twist::new(
                    Vector3::new(v(), v(), v()),
                    Vector3::new(v(), v(), v()),
                ))
            })
            .collect();
        SkeletonSequence::new(
            "rand",
            (0..n).map(|j| alloc::format!("j{j}")),
            uniform_grid(t),
            frames,
        )
        .unwrap()
    }

    /// Enumerates every monotone path and keeps the cheapest, summing costs
    /// in path order.
    fn brute_force(a: &SkeletonSequence, b: &SkeletonSequence, w: &WeightMatrix) -> (f64, usize) {
        fn walk(
            cost: &[Vec<f64>],
            i: usize,
            j: usize,
            acc: f64,
            nodes: usize,
            best: &mut (f64, usize),
        ) {
            let acc = acc + cost[i][j];
            let nodes = nodes + 1;
            if i == cost.len() - 1 && j == cost[0].len() - 1 {
                if acc < best.0 {
                    *best = (acc, nodes);
                }
                return;
            }
            if i + 1 < cost.len() && j + 1 < cost[0].len() {
                walk(cost, i + 1, j + 1, acc, nodes, best);
            }
            if i + 1 < cost.len() {
                walk(cost, i + 1, j, acc, nodes, best);
            }
            if j + 1 < cost[0].len() {
                walk(cost, i, j + 1, acc, nodes, best);
            }
        }
        let cost: Vec<Vec<f64>> = (0..a.len())
            .map(|i| {
                (0..b.len())
                    .map(|j| frame_distance(a.frame(i), b.frame(j), w).unwrap())
                    .collect()
            })
            .collect();
        let mut best = (f64::INFINITY, 0);
        walk(&cost, 0, 0, 0.0, 0, &mut best);
        best
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = WeightMatrix::unit_sphere();
        let a = random_sequence(&mut rng, 4, 2);
        let b = random_sequence(&mut rng, 5, 2);
        let got = dtw(&a, &b, &w).unwrap();
        let (cost, nodes) = brute_force(&a, &b, &w);
        assert!((got.cost - cost).abs() <= 1e-12);
        assert!((got.normalized_cost - cost / nodes as f64).abs() <= 1e-12);
        assert_eq!(got.path.first(), Some(&(0, 0)));
        assert_eq!(got.path.last(), Some(&(3, 4)));
        for s in got.path.windows(2) {
            let (di, dj) = (s[1].0 - s[0].0, s[1].1 - s[0].1);
            assert!(di <= 1 && dj <= 1 && di + dj >= 1);
        }
    }

    #[test]
    fn identical_and_repeated() {
        let w = WeightMatrix::unit_sphere();
        let a = generate_synthetic(5, 9, 3, 2).unwrap();
        let got = dtw(&a, &a, &w).unwrap();
        assert_eq!(got.normalized_cost, 0.0);
        assert_eq!(got.path, (0..9).map(|i| (i, i)).collect::<Vec<_>>());
        for r in [0, 1, 3] {
            assert_eq!(fastdtw(&a, &a, &w, r).unwrap().normalized_cost, 0.0);
        }

        let mut frames = a.frames().to_vec();
        let dup = a.frame(4).to_vec();
        frames.splice(15..15, dup);
        let b = SkeletonSequence::new("dup", a.joint_labels().to_vec(), uniform_grid(10), frames)
            .unwrap();
        assert_eq!(dtw(&a, &b, &w).unwrap().normalized_cost, 0.0);
    }

    #[test]
    fn full_radius_equals_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = WeightMatrix::unit_sphere();
        let a = random_sequence(&mut rng, 23, 2);
        let b = random_sequence(&mut rng, 31, 2);
        let exact = dtw(&a, &b, &w).unwrap();
        assert_eq!(fastdtw(&a, &b, &w, 31).unwrap(), exact);
    }

    #[test]
    fn approximate_is_bounded_below() {
        let w = WeightMatrix::unit_sphere();
        let a = generate_synthetic(1, 60, 3, 3).unwrap();
        let b = generate_synthetic(2, 47, 3, 3).unwrap();
        let exact = dtw(&a, &b, &w).unwrap();
        for r in [0, 1, 5, 20] {
            let approx = fastdtw(&a, &b, &w, r).unwrap();
            assert!(approx.cost >= exact.cost - 1e-12);
            assert_eq!(approx.path.last(), Some(&(59, 46)));
        }
    }

    #[test]
    fn operation_counts() {
        let w = WeightMatrix::unit_sphere();
        let a = generate_synthetic(1, 40, 3, 3).unwrap();
        let b = generate_synthetic(2, 40, 3, 3).unwrap();
        let (_, ops) = measure(|| dtw(&a, &b, &w).unwrap());
        assert_eq!(ops.norm_evals, 3 * 40 * 40);
        let (_, ops) = measure(|| fastdtw(&a, &b, &w, 1).unwrap());
        assert!(ops.norm_evals < 3 * 40 * 40 / 2);
    }

    #[test]
    fn windowed_validation() {
        let w = WeightMatrix::unit_sphere();
        let a = generate_synthetic(1, 5, 1, 3).unwrap();
        let diag = Window::from_ranges((0..5).map(|i| (i, i)).collect(), 5).unwrap();
        assert_eq!(diag.cells(), 5);
        let got = dtw_windowed(&a, &a, &w, &diag).unwrap();
        assert_eq!(got.path.len(), 5);
        let broken = Window::from_ranges(vec![(0, 0), (0, 0), (0, 0), (0, 0), (0, 0)], 5).unwrap();
        assert!(dtw_windowed(&a, &a, &w, &broken).is_err());
        assert!(Window::from_ranges(vec![(2, 1)], 5).is_err());
    }

    #[test]
    fn coarsening_halves() {
        let a = generate_synthetic(1, 7, 2, 3).unwrap();
        let c = Frames::of(&a).coarsen().unwrap();
        assert_eq!(c.len(), 4);
        assert_eq!(c.frame(3), a.frame(6));
        for p in &c.poses {
            assert!(Pose::new(*p.matrix()).is_ok());
        }
    }
}
