//! Sampled continuous paths.
//!
//! A [`HistoryPath`] is an element of `C([-tau, 0], R^d)` stored as values on a
//! strictly increasing grid and evaluated by piecewise-linear interpolation. A
//! [`Trajectory`] is the same object on `[-tau, T]`; its [`Trajectory::window`]
//! is the restriction `t -> x_t` with `x_t(s) = x(t + s)`.
//!
//! Sup norms and path distances are taken over grid nodes. For a piecewise
//! linear path the Euclidean norm is convex along each segment, so the node
//! maximum is exact for norms; for differences of paths sampled on different
//! grids both operands are first resampled onto the union grid.

use crate::error::{invalid, shape, Error, Result};

/// A point of `R^d`.
pub type Point = Vec<f64>;

/// Relative tolerance used to identify grid times that agree up to rounding.
pub(crate) const TIME_TOL: f64 = 1e-9;

/// Read access to a history segment `sigma in C([-tau, 0], R^d)`.
///
/// This is what interaction kernels see. Implementations clamp `s` into
/// `[-tau, 0]`; callers are expected to stay inside the domain.
pub trait History {
    fn tau(&self) -> f64;
    fn dim(&self) -> usize;
    fn eval_into(&self, s: f64, out: &mut [f64]);

    fn eval_point(&self, s: f64) -> Point {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(s, &mut out);
        out
    }
}

/// The constant history `sigma(s) = c`.
#[derive(Clone, Debug)]
pub struct ConstantHistory<'a> {
    pub tau: f64,
    pub value: &'a [f64],
}

impl History for ConstantHistory<'_> {
    fn tau(&self) -> f64 {
        self.tau
    }
    fn dim(&self) -> usize {
        self.value.len()
    }
    fn eval_into(&self, _s: f64, out: &mut [f64]) {
        out.copy_from_slice(self.value);
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn lerp_into(a: &[f64], b: &[f64], theta: f64, out: &mut [f64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = (1.0 - theta) * x + theta * y;
    }
}

/// Validates a sample grid on `[lo, hi]`, snapping endpoints that agree up to
/// rounding.
fn check_grid(grid: &mut [f64], lo: f64, hi: f64) -> Result<()> {
    if grid.len() < 2 {
        return Err(shape("a path needs at least two grid nodes"));
    }
    let scale = TIME_TOL * (hi - lo).abs().max(1.0);
    let last = grid.len() - 1;
    if (grid[0] - lo).abs() > scale {
        return Err(shape(format!("grid starts at {} instead of {}", grid[0], lo)));
    }
    if (grid[last] - hi).abs() > scale {
        return Err(shape(format!("grid ends at {} instead of {}", grid[last], hi)));
    }
    grid[0] = lo;
    grid[last] = hi;
    if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(shape(format!(
            "grid is not strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Index of the segment containing `s` and the local coordinate in it.
fn locate(grid: &[f64], s: f64) -> (usize, f64) {
    let k = grid.partition_point(|&g| g <= s);
    if k == 0 {
        return (0, 0.0);
    }
    if k >= grid.len() {
        return (grid.len() - 2, 1.0);
    }
    let seg = k - 1;
    let theta = (s - grid[seg]) / (grid[seg + 1] - grid[seg]);
    (seg, theta)
}

/// Merges two sorted grids, dropping nodes that coincide up to `tol`.
pub(crate) fn union_grid(a: &[f64], b: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1]
        } else {
            j += 1;
            b[j - 1]
        };
        match out.last() {
            Some(&prev) if next - prev <= tol => {}
            _ => out.push(next),
        }
    }
    out
}

/// A sampled element of `C([-tau, 0], R^d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HistoryPath {
    tau: f64,
    dim: usize,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl HistoryPath {
    /// Builds a path from one point per grid node.
    pub fn new(tau: f64, grid: Vec<f64>, values: Vec<Point>) -> Result<Self> {
        let dim = values.first().map_or(0, Vec::len);
        if values.iter().any(|v| v.len() != dim) {
            return Err(shape("path values have inconsistent dimensions"));
        }
        Self::from_flat(tau, dim, grid, values.concat())
    }

    /// Builds a path from row-major values (`grid.len() * dim` entries).
    pub fn from_flat(tau: f64, dim: usize, mut grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("delay tau must be positive, got {tau}")));
        }
        if dim == 0 {
            return Err(shape("dimension must be positive"));
        }
        check_grid(&mut grid, -tau, 0.0)?;
        if values.len() != grid.len() * dim {
            return Err(shape(format!(
                "{} values for {} nodes of dimension {}",
                values.len(),
                grid.len(),
                dim
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("path values must be finite"));
        }
        Ok(Self {
            tau,
            dim,
            grid,
            values,
        })
    }

    /// Samples `f` on the uniform grid with `segments` intervals.
    pub fn from_fn(tau: f64, dim: usize, segments: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        if segments == 0 {
            return Err(invalid("a path needs at least one segment"));
        }
        let grid = uniform_grid(tau, segments);
        let mut values = Vec::with_capacity(grid.len() * dim);
        for &s in &grid {
            let v = f(s);
            if v.len() != dim {
                return Err(shape("sampled value has the wrong dimension"));
            }
            values.extend(v);
        }
        Self::from_flat(tau, dim, grid, values)
    }

    pub fn constant(tau: f64, value: &[f64], segments: usize) -> Result<Self> {
        Self::from_fn(tau, value.len(), segments, |_| value.to_vec())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Row-major node values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// The present value `sigma(0)`.
    pub fn head(&self) -> &[f64] {
        self.node(self.grid.len() - 1)
    }

    /// `sigma(s)`, by linear interpolation; exact at grid nodes.
    pub fn eval(&self, s: f64) -> Result<Point> {
        let slack = TIME_TOL * self.tau;
        if !(s >= -self.tau - slack && s <= slack) {
            return Err(Error::Domain {
                what: "s",
                value: s,
                lo: -self.tau,
                hi: 0.0,
            });
        }
        Ok(self.eval_point(s))
    }

    /// `||sigma||_inf` over grid nodes.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks_exact(self.dim)
            .map(norm)
            .fold(0.0, f64::max)
    }

    /// Sup-norm distance, after resampling both paths to their union grid.
    pub fn distance(&self, other: &HistoryPath) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.distance_unchecked(other))
    }

    pub(crate) fn check_compatible(&self, other: &HistoryPath) -> Result<()> {
        if self.dim != other.dim {
            return Err(shape(format!("path dimensions {} and {}", self.dim, other.dim)));
        }
        if (self.tau - other.tau).abs() > TIME_TOL * self.tau {
            return Err(shape(format!("path delays {} and {}", self.tau, other.tau)));
        }
        Ok(())
    }

    pub(crate) fn distance_unchecked(&self, other: &HistoryPath) -> f64 {
        if self.grid == other.grid {
            return self
                .values
                .chunks_exact(self.dim)
                .zip(other.values.chunks_exact(self.dim))
                .map(|(a, b)| dist(a, b))
                .fold(0.0, f64::max);
        }
        let grid = union_grid(&self.grid, &other.grid, TIME_TOL * self.tau);
        let mut a = vec![0.0; self.dim];
        let mut b = vec![0.0; self.dim];
        grid.iter().fold(0.0, |acc, &s| {
            self.eval_into(s, &mut a);
            other.eval_into(s, &mut b);
            acc.max(dist(&a, &b))
        })
    }

    /// The same path represented on `grid` (which must cover `[-tau, 0]`).
    pub fn resample(&self, grid: &[f64]) -> Result<HistoryPath> {
        let mut values = Vec::with_capacity(grid.len() * self.dim);
        let mut buf = vec![0.0; self.dim];
        for &s in grid {
            self.eval_into(s, &mut buf);
            values.extend_from_slice(&buf);
        }
        HistoryPath::from_flat(self.tau, self.dim, grid.to_vec(), values)
    }

    /// Adds a constant vector to every value.
    pub fn translated(&self, offset: &[f64]) -> Result<HistoryPath> {
        if offset.len() != self.dim {
            return Err(shape("offset has the wrong dimension"));
        }
        let mut values = self.values.clone();
        for chunk in values.chunks_exact_mut(self.dim) {
            for (v, o) in chunk.iter_mut().zip(offset) {
                *v += o;
            }
        }
        Ok(HistoryPath {
            values,
            ..self.clone()
        })
    }

    /// `prefix` on `[-tau, h]` followed by `suffix` on `[h, 0]`.
    ///
    /// The two paths must meet at `h` up to `1e-9 * (1 + max sup norm)`.
    pub fn splice(prefix: &HistoryPath, suffix: &HistoryPath, h: f64) -> Result<HistoryPath> {
        prefix.check_compatible(suffix)?;
        let tau = prefix.tau;
        let p = prefix.eval(h)?;
        let q = suffix.eval(h)?;
        let tol = 1e-9 * (1.0 + prefix.sup_norm().max(suffix.sup_norm()));
        let gap = dist(&p, &q);
        if gap > tol {
            return Err(Error::Discontinuity { at: h, gap, tol });
        }
        let eps = TIME_TOL * tau;
        let h = h.clamp(-tau, 0.0);
        let dim = prefix.dim;
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for (k, &s) in prefix.grid.iter().enumerate() {
            if s < h - eps {
                grid.push(s);
                values.extend_from_slice(prefix.node(k));
            }
        }
        grid.push(h);
        values.extend_from_slice(&p);
        for (k, &s) in suffix.grid.iter().enumerate() {
            if s > h + eps {
                grid.push(s);
                values.extend_from_slice(suffix.node(k));
            }
        }
        HistoryPath::from_flat(tau, dim, grid, values)
    }
}

impl History for HistoryPath {
    fn tau(&self) -> f64 {
        self.tau
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, s: f64, out: &mut [f64]) {
        let (k, theta) = locate(&self.grid, s);
        lerp_into(self.node(k), self.node(k + 1), theta.clamp(0.0, 1.0), out);
    }
}

/// `segments + 1` equally spaced times from `-tau` to `0`, endpoints exact.
pub fn uniform_grid(tau: f64, segments: usize) -> Vec<f64> {
    (0..=segments)
        .map(|k| {
            if k == segments {
                0.0
            } else {
                -tau + tau * k as f64 / segments as f64
            }
        })
        .collect()
}

/// A sampled path on `[-tau, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    tau: f64,
    horizon: f64,
    dim: usize,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn from_flat(
        tau: f64,
        horizon: f64,
        dim: usize,
        mut grid: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("delay tau must be positive, got {tau}")));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be nonnegative, got {horizon}")));
        }
        if dim == 0 {
            return Err(shape("dimension must be positive"));
        }
        check_grid(&mut grid, -tau, horizon)?;
        if values.len() != grid.len() * dim {
            return Err(shape("trajectory values do not match its grid"));
        }
        Ok(Self {
            tau,
            horizon,
            dim,
            grid,
            values,
        })
    }

    /// Concatenates an initial segment with values at positive times.
    pub fn from_history(history: &HistoryPath, times: &[f64], values: &[f64]) -> Result<Self> {
        let dim = history.dim();
        let horizon = times.last().copied().unwrap_or(0.0);
        let mut grid = history.grid().to_vec();
        grid.extend_from_slice(times);
        let mut all = history.values().to_vec();
        all.extend_from_slice(values);
        Self::from_flat(history.tau(), horizon, dim, grid, all)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn eval(&self, t: f64) -> Result<Point> {
        let slack = TIME_TOL * (self.tau + self.horizon);
        if !(t >= -self.tau - slack && t <= self.horizon + slack) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo: -self.tau,
                hi: self.horizon,
            });
        }
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out);
        Ok(out)
    }

    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let (k, theta) = locate(&self.grid, t);
        lerp_into(self.node(k), self.node(k + 1), theta.clamp(0.0, 1.0), out);
    }

    /// Node index equal to `t` up to rounding, if any.
    fn node_at(&self, t: f64) -> Option<usize> {
        let eps = TIME_TOL * self.tau;
        let k = self.grid.partition_point(|&g| g < t - eps);
        (k < self.grid.len() && (self.grid[k] - t).abs() <= eps).then_some(k)
    }

    /// The restriction `x_t`, i.e. `s -> x(t + s)` on `[-tau, 0]`.
    pub fn window(&self, t: f64) -> Result<HistoryPath> {
        let slack = TIME_TOL * self.tau;
        if !(t >= -slack && t <= self.horizon + slack) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.horizon,
            });
        }
        let start = t - self.tau;
        let eps = TIME_TOL * self.tau;
        let mut grid = vec![-self.tau];
        let mut values = Vec::new();
        let mut buf = vec![0.0; self.dim];
        match self.node_at(start) {
            Some(k) => values.extend_from_slice(self.node(k)),
            None => {
                self.eval_into(start, &mut buf);
                values.extend_from_slice(&buf);
            }
        }
        let first = self.grid.partition_point(|&g| g <= start + eps);
        for k in first..self.grid.len() {
            let g = self.grid[k];
            if g >= t - eps {
                break;
            }
            grid.push(g - t);
            values.extend_from_slice(self.node(k));
        }
        grid.push(0.0);
        match self.node_at(t) {
            Some(k) => values.extend_from_slice(self.node(k)),
            None => {
                self.eval_into(t, &mut buf);
                values.extend_from_slice(&buf);
            }
        }
        HistoryPath::from_flat(self.tau, self.dim, grid, values)
    }

    /// The segment on `[-tau, 0]`.
    pub fn initial_segment(&self) -> HistoryPath {
        self.window(0.0).expect("t = 0 is always in range")
    }
}
