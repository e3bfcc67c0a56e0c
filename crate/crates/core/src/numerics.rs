//! One-dimensional kernels: Fornberg finite-difference weights, cumulative
//! quadrature, monotone inversion and piecewise-linear lookup.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Samples whose values differ by no more than this count as a tie when
/// inverting a monotone function.
pub const TIE_TOLERANCE: f64 = 1e-14;

/// A real function sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        check_grid(&times)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at sample {i}"
            )));
        }
        Ok(SampledFunction { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// True when the grid runs exactly from 0 to 1.
    pub fn is_unit_interval(&self) -> bool {
        self.times[0] == 0.0 && self.times[self.times.len() - 1] == 1.0
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.times, self.values)
    }
}

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if let Some(i) = times.iter().position(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid(format!("non-finite time at sample {i}")));
    }
    if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "times not strictly increasing at sample {}",
            i + 1
        )));
    }
    Ok(())
}

/// Fornberg's recursion for the weights `w` such that
/// `Σ w_i f(nodes_i) ≈ f^(order)(x0)`, exact for polynomials of degree
/// below `nodes.len()`.
pub fn fornberg_weights(nodes: &[f64], x0: f64, order: usize) -> Result<Vec<f64>> {
    let n = nodes.len();
    if order >= n {
        return Err(Error::InsufficientStencil { order, nodes: n });
    }
    for i in 0..n {
        if !nodes[i].is_finite() {
            return Err(Error::InvalidGrid(format!("non-finite node {i}")));
        }
        for j in 0..i {
            if nodes[i] == nodes[j] {
                return Err(Error::InvalidGrid(format!("duplicate nodes {j} and {i}")));
            }
        }
    }

    let cols = order + 1;
    let mut c = vec![0.0; n * cols];
    c[0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i * cols + k] = c1
                        * (k as f64 * c[(i - 1) * cols + k - 1] - c5 * c[(i - 1) * cols + k])
                        / c2;
                }
                c[i * cols] = -c1 * c5 * c[(i - 1) * cols] / c2;
            }
            for k in (1..=mn).rev() {
                c[j * cols + k] = (c4 * c[j * cols + k] - k as f64 * c[j * cols + k - 1]) / c3;
            }
            c[j * cols] = c4 * c[j * cols] / c3;
        }
        c1 = c2;
    }
    let mut w: Vec<f64> = (0..n).map(|i| c[i * cols + order]).collect();
    // In exact arithmetic the weights sum to 1 (order 0) or 0. Fold the
    // rounding drift into the smallest weight, whose ulp is finest.
    let target = if order == 0 { 1.0 } else { 0.0 };
    let smallest = (0..n)
        .min_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()))
        .unwrap_or(0);
    let drift = compensated_sum(&w) - target;
    w[smallest] -= drift;
    Ok(w)
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum(xs: &[f64]) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + carry
}

/// First-derivative stencils for every node of a grid, computed once and
/// applied to any number of sampled channels.
///
/// Node `i` uses the `size` consecutive nodes starting at
/// `i - (size - 1) / 2`, shifted inward at the boundaries. A size-2 operator
/// is therefore a forward difference everywhere but the last node.
#[derive(Debug, Clone)]
pub struct DerivativeOperator {
    size: usize,
    starts: Vec<usize>,
    weights: Vec<f64>,
}

impl DerivativeOperator {
    pub fn new(times: &[f64], stencil_size: usize) -> Result<Self> {
        if stencil_size < 2 {
            return Err(Error::InsufficientStencil {
                order: 1,
                nodes: stencil_size,
            });
        }
        if times.len() < stencil_size {
            return Err(Error::InsufficientData {
                needed: stencil_size,
                got: times.len(),
            });
        }
        check_grid(times)?;
        let t = times.len();
        let back = (stencil_size - 1) / 2;
        let mut starts = Vec::with_capacity(t);
        let mut weights = Vec::with_capacity(t * stencil_size);
        for (i, &x0) in times.iter().enumerate() {
            let start = i.saturating_sub(back).min(t - stencil_size);
            starts.push(start);
            weights.extend(fornberg_weights(
                &times[start..start + stencil_size],
                x0,
                1,
            )?);
        }
        Ok(DerivativeOperator {
            size: stencil_size,
            starts,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    pub fn stencil_size(&self) -> usize {
        self.size
    }

    /// First node index and weights used at node `i`. The weights sum to
    /// zero, so they may be applied to differences from the value at node
    /// `i`; constant signals then differentiate to exactly zero.
    pub fn stencil(&self, i: usize) -> (usize, &[f64]) {
        (
            self.starts[i],
            &self.weights[i * self.size..(i + 1) * self.size],
        )
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(
            values.len(),
            self.len(),
            "channel length must match the grid"
        );
        (0..self.len())
            .map(|i| {
                let (start, w) = self.stencil(i);
                w.iter()
                    .zip(&values[start..])
                    .map(|(a, b)| a * (b - values[i]))
                    .sum()
            })
            .collect()
    }
}

/// Derivative estimate at every sample; exact for polynomials of degree
/// below `stencil_size`, on regular or irregular grids.
pub fn differentiate_sequence(f: &SampledFunction, stencil_size: usize) -> Result<SampledFunction> {
    let op = DerivativeOperator::new(f.times(), stencil_size)?;
    Ok(SampledFunction {
        times: f.times.clone(),
        values: op.apply(f.values()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Composite trapezoid.
    #[default]
    Trapezoid,
    /// Left-endpoint rectangles: each interval takes its left sample.
    LeftEndpoint,
}

/// Composite-trapezoid running integral starting at 0.
pub fn integrate_cumulative(f: &SampledFunction) -> SampledFunction {
    integrate_cumulative_with(f, Quadrature::Trapezoid)
}

pub fn integrate_cumulative_with(f: &SampledFunction, rule: Quadrature) -> SampledFunction {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(acc);
    for i in 1..f.len() {
        let h = f.times[i] - f.times[i - 1];
        acc += match rule {
            Quadrature::Trapezoid => 0.5 * h * (f.values[i] + f.values[i - 1]),
            Quadrature::LeftEndpoint => h * f.values[i - 1],
        };
        out.push(acc);
    }
    SampledFunction {
        times: f.times.clone(),
        values: out,
    }
}

/// Result of a piecewise-linear lookup. `clamped` is set when any query fell
/// outside the sampled range and was pinned to the nearest endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub values: Vec<f64>,
    pub clamped: bool,
}

fn lerp_lookup(xs: &[f64], ys: &[f64], queries: &[f64]) -> Lookup {
    let lo = xs[0];
    let hi = xs[xs.len() - 1];
    let mut clamped = false;
    let values = queries
        .iter()
        .map(|&q| {
            if q.is_nan() || q < lo || q > hi {
                clamped = true;
            }
            if !(q > lo) {
                return ys[0];
            }
            if !(q < hi) {
                return ys[ys.len() - 1];
            }
            let k = xs.partition_point(|&x| x <= q);
            let (x0, x1) = (xs[k - 1], xs[k]);
            let s = (q - x0) / (x1 - x0);
            ys[k - 1] + s * (ys[k] - ys[k - 1])
        })
        .collect();
    Lookup { values, clamped }
}

/// Piecewise-linear interpolation of `f`; exact at the nodes.
pub fn interpolate_scalar(f: &SampledFunction, queries: &[f64]) -> Lookup {
    lerp_lookup(&f.times, &f.values, queries)
}

/// Solves `F(τ) = q` for each query by linear interpolation of the times as
/// a function of the values. Samples within [`TIE_TOLERANCE`] of the
/// previously kept sample are dropped as ties.
pub fn invert_monotone(f: &SampledFunction, queries: &[f64]) -> Result<Lookup> {
    let mut xs = Vec::with_capacity(f.len());
    let mut ys = Vec::with_capacity(f.len());
    xs.push(f.values[0]);
    ys.push(f.times[0]);
    for i in 1..f.len() {
        let last = xs[xs.len() - 1];
        let v = f.values[i];
        if v < last - TIE_TOLERANCE {
            return Err(Error::NonMonotone { index: i });
        }
        if v > last + TIE_TOLERANCE {
            xs.push(v);
            ys.push(f.times[i]);
        }
    }
    if xs.len() < 2 && f.len() > 1 {
        return Err(Error::NonMonotone { index: f.len() - 1 });
    }
    Ok(lerp_lookup(&xs, &ys, queries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn uniform(t: usize) -> Vec<f64> {
        (0..t).map(|i| i as f64 / (t - 1) as f64).collect()
    }

    #[test]
    fn fornberg_examples() {
        let w = fornberg_weights(&[-1.0, 0.0, 1.0], 0.0, 1).unwrap();
        assert_abs_diff_eq!(w.as_slice(), [-0.5, 0.0, 0.5].as_slice(), epsilon = 1e-15);
        let w = fornberg_weights(&[0.0, 1.0], 0.0, 0).unwrap();
        assert_abs_diff_eq!(w.as_slice(), [1.0, 0.0].as_slice(), epsilon = 1e-15);
        let w = fornberg_weights(&[-1.0, 0.0, 1.0], 0.0, 2).unwrap();
        assert_abs_diff_eq!(w.as_slice(), [1.0, -2.0, 1.0].as_slice(), epsilon = 1e-15);
    }

    #[test]
    fn fornberg_errors() {
        assert!(matches!(
            fornberg_weights(&[0.0, 0.5, 0.5], 0.0, 1),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            fornberg_weights(&[0.0, 1.0], 0.0, 2),
            Err(Error::InsufficientStencil { order: 2, nodes: 2 })
        ));
    }

    #[test]
    fn derivative_of_constant_and_linear() {
        let t = uniform(30);
        let c = SampledFunction::new(t.clone(), vec![4.2; 30]).unwrap();
        let d = differentiate_sequence(&c, 5).unwrap();
        assert!(d.values().iter().all(|v| v.abs() < 1e-12));

        let irregular: Vec<f64> = (0..30).map(|i| (i as f64 / 29.0).powf(1.7)).collect();
        let lin = SampledFunction::new(irregular.clone(), irregular.clone()).unwrap();
        let d = differentiate_sequence(&lin, 3).unwrap();
        assert!(d.values().iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn derivative_of_cubic_on_irregular_grid() {
        let mut state = 17u64;
        let mut t: Vec<f64> = (0..50)
            .map(|i| {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let jitter = ((state >> 33) as f64 / (1u64 << 31) as f64 - 0.5) * 0.6;
                (i as f64 + jitter) / 49.0
            })
            .collect();
        t[0] = 0.0;
        t[49] = 1.0;
        let f = SampledFunction::new(t.clone(), t.iter().map(|x| x * x * x).collect()).unwrap();
        let d = differentiate_sequence(&f, 5).unwrap();
        let err = d
            .values()
            .iter()
            .zip(&t)
            .map(|(v, x)| (v - 3.0 * x * x).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "max error {err}");
    }

    #[test]
    fn derivative_needs_enough_samples() {
        let f = SampledFunction::new(uniform(4), vec![0.0; 4]).unwrap();
        assert!(matches!(
            differentiate_sequence(&f, 5),
            Err(Error::InsufficientData { needed: 5, got: 4 })
        ));
    }

    #[test]
    fn size_two_stencil_is_forward_then_backward() {
        let op = DerivativeOperator::new(&[0.0, 0.5, 2.0], 2).unwrap();
        assert_eq!(op.stencil(0).0, 0);
        assert_eq!(op.stencil(1).0, 1);
        assert_eq!(op.stencil(2).0, 1);
        assert_abs_diff_eq!(
            op.stencil(1).1,
            [-1.0 / 1.5, 1.0 / 1.5].as_slice(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn trapezoid_examples() {
        let t = uniform(11);
        let one = SampledFunction::new(t.clone(), vec![1.0; 11]).unwrap();
        assert_eq!(*integrate_cumulative(&one).values().last().unwrap(), 1.0);
        let lin = SampledFunction::new(t.clone(), t.clone()).unwrap();
        let i = integrate_cumulative(&lin);
        assert_eq!(i.values()[0], 0.0);
        assert_abs_diff_eq!(*i.values().last().unwrap(), 0.5, epsilon = 1e-15);

        let t = uniform(101);
        let sq = SampledFunction::new(t.clone(), t.iter().map(|x| x * x).collect()).unwrap();
        let i = integrate_cumulative(&sq);
        assert_abs_diff_eq!(*i.values().last().unwrap(), 1.0 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn left_endpoint_rule() {
        let f = SampledFunction::new(vec![0.0, 0.5, 1.0], vec![1.0, 3.0, 100.0]).unwrap();
        let i = integrate_cumulative_with(&f, Quadrature::LeftEndpoint);
        assert_eq!(i.values(), &[0.0, 0.5, 2.0]);
    }

    #[test]
    fn inversion_examples() {
        let t = uniform(21);
        let id = SampledFunction::new(t.clone(), t.clone()).unwrap();
        let q = [0.0, 0.13, 0.5, 0.999, 1.0];
        let out = invert_monotone(&id, &q).unwrap();
        assert_abs_diff_eq!(out.values.as_slice(), q.as_slice(), epsilon = 1e-15);
        assert!(!out.clamped);

        let t = uniform(1001);
        let sq = SampledFunction::new(t.clone(), t.iter().map(|x| x * x).collect()).unwrap();
        let q = uniform(101);
        let out = invert_monotone(&sq, &q).unwrap();
        for (tau, x) in out.values.iter().zip(&q) {
            assert!((tau - x.sqrt()).abs() < 1e-3);
        }
        let out = invert_monotone(&sq, &[0.0]).unwrap();
        assert_eq!(out.values, vec![0.0]);
    }

    #[test]
    fn inversion_errors_and_clamping() {
        let f = SampledFunction::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.6, 0.4]).unwrap();
        assert!(matches!(
            invert_monotone(&f, &[0.1]),
            Err(Error::NonMonotone { index: 2 })
        ));
        let f = SampledFunction::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.6, 1.0]).unwrap();
        let out = invert_monotone(&f, &[-0.5, 1.5]).unwrap();
        assert!(out.clamped);
        assert_eq!(out.values, vec![0.0, 1.0]);
        // Ties are skipped instead of failing.
        let f = SampledFunction::new(vec![0.0, 0.25, 0.5, 1.0], vec![0.0, 0.5, 0.5 + 1e-16, 1.0])
            .unwrap();
        let out = invert_monotone(&f, &[0.5, 0.75]).unwrap();
        assert_abs_diff_eq!(
            out.values.as_slice(),
            [0.25, 0.625].as_slice(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn interpolation_examples() {
        let f = SampledFunction::new(vec![0.0, 0.5, 1.0], vec![2.0, 4.0, -1.0]).unwrap();
        let out = interpolate_scalar(&f, &[0.5, 0.25, 0.75]);
        assert_eq!(out.values, vec![4.0, 3.0, 1.5]);
        assert!(!out.clamped);
        assert!(interpolate_scalar(&f, &[1.2]).clamped);

        let t = uniform(1001);
        let sq = SampledFunction::new(t.clone(), t.iter().map(|x| x * x).collect()).unwrap();
        assert_abs_diff_eq!(
            interpolate_scalar(&sq, &[0.5]).values[0],
            0.25,
            epsilon = 1e-6
        );
    }

    #[test]
    fn sampled_function_validation() {
        assert!(SampledFunction::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
        assert!(SampledFunction::new(vec![0.0, 1.0], vec![1.0, 2.0])
            .unwrap()
            .is_unit_interval());
    }

    fn irregular_grid() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.2f64..1.0, 8..40).prop_map(|gaps| {
            let mut acc = 0.0;
            let mut t = vec![0.0];
            for g in &gaps {
                acc += g;
                t.push(acc);
            }
            t.iter().map(|x| x / acc).collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(2000))]

        #[test]
        fn fornberg_weight_sums(
            first in -1.0f64..0.0,
            gaps in proptest::collection::vec(0.05f64..0.3, 1..8),
            x0 in -1.0f64..1.0,
            order in 0usize..4,
        ) {
            let mut nodes = vec![first];
            for g in &gaps {
                nodes.push(nodes[nodes.len() - 1] + g);
            }
            let order = order.min(nodes.len() - 1);
            let w = fornberg_weights(&nodes, x0, order).unwrap();
            // Naive summation alone loses ~1e-12 on weights of order 1e4.
            let sum = compensated_sum(&w);
            let expect = if order == 0 { 1.0 } else { 0.0 };
            prop_assert!((sum - expect).abs() < 1e-12, "sum {sum}");
        }

        #[test]
        fn derivative_exact_on_polynomials(t in irregular_grid(), size in 2usize..=6, coeffs in proptest::collection::vec(-2.0f64..2.0, 6)) {
            prop_assume!(t.len() >= size);
            let degree = size - 1;
            let p = |x: f64| (0..=degree).map(|k| coeffs[k] * x.powi(k as i32)).sum::<f64>();
            let dp = |x: f64| (1..=degree).map(|k| k as f64 * coeffs[k] * x.powi(k as i32 - 1)).sum::<f64>();
            let f = SampledFunction::new(t.clone(), t.iter().map(|&x| p(x)).collect()).unwrap();
            let d = differentiate_sequence(&f, size).unwrap();
            for (v, &x) in d.values().iter().zip(&t) {
                prop_assert!((v - dp(x)).abs() < 1e-8, "{v} vs {}", dp(x));
            }
        }

        #[test]
        fn inversion_undoes_forward_evaluation(t in irregular_grid(), bend in 0.2f64..3.0) {
            let values: Vec<f64> = t.iter().map(|x| x.powf(bend) + 0.1 * x).collect();
            let f = SampledFunction::new(t.clone(), values.clone()).unwrap();
            let out = invert_monotone(&f, &values).unwrap();
            let spacing = t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            for (tau, x) in out.values.iter().zip(&t) {
                prop_assert!((tau - x).abs() <= 2.0 * spacing);
            }
        }

        #[test]
        fn integration_is_linear(t in irregular_grid(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let f: Vec<f64> = t.iter().map(|x| (3.0 * x).sin()).collect();
            let g: Vec<f64> = t.iter().map(|x| x * x - 0.3).collect();
            let combo: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
            let i_f = integrate_cumulative(&SampledFunction::new(t.clone(), f).unwrap());
            let i_g = integrate_cumulative(&SampledFunction::new(t.clone(), g).unwrap());
            let i_c = integrate_cumulative(&SampledFunction::new(t.clone(), combo).unwrap());
            for k in 0..t.len() {
                let lhs = i_c.values()[k];
                let rhs = a * i_f.values()[k] + b * i_g.values()[k];
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }
}
