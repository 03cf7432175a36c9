//! Time integration by the method of steps.
//!
//! Trajectories are advanced on a uniform grid `t_n = n dt` with an explicit
//! Runge-Kutta scheme. Delayed values are read from what is already known:
//! the initial segment for `t <= 0`, the scheme's continuous extension inside
//! completed steps, and, inside the step being taken, the straight line from
//! `x_n` to the current stage state. A read at the stage time itself returns
//! the stage state exactly, so the coupled particle system and a Picard
//! iteration against frozen copies of the same trajectories share one
//! discrete right-hand side.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::kernels::{compose_imperfect, DelayKernel, DelayMeasure, PointKernel, STACK_DIM};
use crate::meanfield::PathMeasureCurve;
use crate::paths::{norm, History, HistoryPath, Point, Trajectory};

/// Relative tolerance for identifying a time with a grid node.
const NODE_TOL: f64 = 1e-9;
/// The run aborts when a position exceeds this multiple of the a-priori bound.
const GUARD_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Euler,
    Rk4,
}

impl Scheme {
    fn nodes(self) -> &'static [f64] {
        match self {
            Scheme::Euler => &[0.0],
            Scheme::Rk4 => &[0.0, 0.5, 0.5, 1.0],
        }
    }

    fn stages(self) -> usize {
        self.nodes().len()
    }

    /// Continuous-extension weights `b_i(theta)`; `b_i(1)` are the step weights.
    fn dense_weights(self, theta: f64) -> [f64; 4] {
        match self {
            Scheme::Euler => [theta, 0.0, 0.0, 0.0],
            Scheme::Rk4 => {
                let (t2, t3) = (theta * theta, theta * theta * theta);
                let mid = t2 - 2.0 * t3 / 3.0;
                [
                    theta - 1.5 * t2 + 2.0 * t3 / 3.0,
                    mid,
                    mid,
                    -0.5 * t2 + 2.0 * t3 / 3.0,
                ]
            }
        }
    }

    /// `Y_i = x + dt * sum_j a_ij k_j`, written into `out`.
    fn stage_state(self, i: usize, x: &[f64], slopes: &[&[f64]], dt: f64, out: &mut [f64]) {
        out.copy_from_slice(x);
        let (coef, from) = match (self, i) {
            (_, 0) => return,
            (Scheme::Rk4, 1) => (0.5 * dt, 0),
            (Scheme::Rk4, 2) => (0.5 * dt, 1),
            (Scheme::Rk4, 3) => (dt, 2),
            _ => unreachable!("stage index out of range"),
        };
        for (o, k) in out.iter_mut().zip(slopes[from]) {
            *o += coef * k;
        }
    }

    fn combine(self, x: &[f64], slopes: &[&[f64]], dt: f64, out: &mut [f64]) {
        match self {
            Scheme::Euler => {
                for ((o, a), k) in out.iter_mut().zip(x).zip(slopes[0]) {
                    *o = a + dt * k;
                }
            }
            Scheme::Rk4 => {
                for (c, o) in out.iter_mut().enumerate() {
                    let s = slopes[0][c] + 2.0 * slopes[1][c] + 2.0 * slopes[2][c] + slopes[3][c];
                    *o = x[c] + dt / 6.0 * s;
                }
            }
        }
    }
}

/// Step size, scheme and horizon of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub horizon: f64,
}

fn ratio_steps(what: &str, len: f64, dt: f64) -> Result<usize> {
    let q = len / dt;
    let r = q.round();
    if (q - r).abs() > NODE_TOL * q.max(1.0) {
        return Err(invalid(format!(
            "{what}/dt = {q} must be an integer ({what} = {len}, dt = {dt})"
        )));
    }
    Ok(r as usize)
}

impl IntegratorConfig {
    pub fn new(dt: f64, scheme: Scheme, horizon: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(invalid(format!("horizon must be nonnegative, got {horizon}")));
        }
        let c = Self {
            dt,
            scheme,
            horizon,
        };
        ratio_steps("T", horizon, dt)?;
        Ok(c)
    }

    /// The largest step `dt <= dt_max` with `tau / dt` an integer, and the
    /// horizon rounded to the nearest multiple of it.
    pub fn aligned(tau: f64, dt_max: f64, horizon: f64, scheme: Scheme) -> Result<Self> {
        if !(tau > 0.0 && dt_max > 0.0) {
            return Err(invalid("tau and dt must be positive"));
        }
        let per_delay = (tau / dt_max - NODE_TOL).ceil().max(1.0);
        let dt = tau / per_delay;
        let steps = (horizon / dt).round();
        Self::new(dt, scheme, steps * dt)
    }

    /// Checks `tau / dt` and `T / dt` are integers.
    pub fn validate(&self, tau: f64) -> Result<()> {
        let m = ratio_steps("tau", tau, self.dt)?;
        if m == 0 {
            return Err(invalid("dt must not exceed tau"));
        }
        ratio_steps("T", self.horizon, self.dt)?;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Step index of a grid time.
    pub fn step_of(&self, t: f64) -> Result<usize> {
        if t < -NODE_TOL * self.dt {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.horizon,
            });
        }
        ratio_steps("t", t.max(0.0), self.dt)
    }
}

/// A trajectory under construction, with everything needed to read it at
/// arbitrary past times.
#[derive(Clone, Debug)]
pub struct DenseTrajectory {
    history: HistoryPath,
    dt: f64,
    scheme: Scheme,
    dim: usize,
    nodes: Vec<f64>,
    stage_states: Vec<f64>,
    slopes: Vec<f64>,
}

impl DenseTrajectory {
    pub fn new(history: HistoryPath, dt: f64, scheme: Scheme) -> Self {
        let dim = history.dim();
        let nodes = history.head().to_vec();
        Self {
            history,
            dt,
            scheme,
            dim,
            nodes,
            stage_states: Vec::new(),
            slopes: Vec::new(),
        }
    }

    pub fn history(&self) -> &HistoryPath {
        &self.history
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of completed steps.
    pub fn steps(&self) -> usize {
        self.nodes.len() / self.dim - 1
    }

    /// `x(t_k)`.
    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    fn block(&self, n: usize, i: usize) -> std::ops::Range<usize> {
        let at = (n * self.scheme.stages() + i) * self.dim;
        at..at + self.dim
    }

    fn stage(&self, n: usize, i: usize) -> &[f64] {
        &self.stage_states[self.block(n, i)]
    }

    fn slope(&self, n: usize, i: usize) -> &[f64] {
        &self.slopes[self.block(n, i)]
    }

    /// Drops all steps after step `k`.
    pub(crate) fn truncate(&mut self, k: usize) {
        let s = self.scheme.stages();
        self.nodes.truncate((k + 1) * self.dim);
        self.stage_states.truncate(k * s * self.dim);
        self.slopes.truncate(k * s * self.dim);
    }

    /// Extends by steps with zero velocity up to step `k`.
    pub(crate) fn freeze_until(&mut self, k: usize) {
        let s = self.scheme.stages();
        while self.steps() < k {
            let x = self.node(self.steps()).to_vec();
            for _ in 0..s {
                self.stage_states.extend_from_slice(&x);
                self.slopes.extend(std::iter::repeat_n(0.0, self.dim));
            }
            self.nodes.extend_from_slice(&x);
        }
    }

    fn dense(&self, m: usize, theta: f64, out: &mut [f64]) {
        let b = self.scheme.dense_weights(theta);
        out.copy_from_slice(self.node(m));
        for (i, bi) in b.iter().take(self.scheme.stages()).enumerate() {
            let k = self.slope(m, i);
            for (o, ki) in out.iter_mut().zip(k) {
                *o += self.dt * bi * ki;
            }
        }
    }

    /// Reads the trajectory at time `q dt` while stage `i` of step `n` is
    /// being evaluated; `q` may not exceed `n + c_i`.
    pub(crate) fn read(&self, q: f64, n: usize, i: usize, out: &mut [f64]) {
        let r = q.round();
        let near_node = (q - r).abs() <= NODE_TOL * q.abs().max(1.0);
        if q <= 0.0 || (near_node && r == 0.0) {
            if near_node && r == 0.0 {
                out.copy_from_slice(self.node(0));
            } else {
                let tau = self.history.tau();
                let q = if near_node { r } else { q };
                self.history.eval_into((q * self.dt).max(-tau), out);
            }
            return;
        }
        if near_node && r <= n as f64 {
            out.copy_from_slice(self.node(r as usize));
            return;
        }
        let nf = n as f64;
        if q < nf {
            let m = q.floor();
            self.dense(m as usize, q - m, out);
            return;
        }
        let c = self.scheme.nodes()[i];
        let x = self.node(n);
        if c == 0.0 {
            out.copy_from_slice(x);
            return;
        }
        let theta = ((q - nf) / c).clamp(0.0, 1.0);
        let y = self.stage(n, i);
        for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
            *o = (1.0 - theta) * a + theta * b;
        }
    }

    /// `x(t)` for `-tau <= t <= steps * dt`, using the continuous extension.
    pub fn eval(&self, t: f64) -> Result<Point> {
        let end = self.steps() as f64 * self.dt;
        let tau = self.history.tau();
        if !(t >= -tau - NODE_TOL * tau && t <= end + NODE_TOL * self.dt) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo: -tau,
                hi: end,
            });
        }
        let mut out = vec![0.0; self.dim];
        let n = self.steps();
        let q = (t / self.dt).min(n as f64);
        self.read(q, n, 0, &mut out);
        Ok(out)
    }

    /// The sampled trajectory: initial grid followed by the step nodes.
    pub fn to_trajectory(&self) -> Trajectory {
        let n = self.steps();
        let times: Vec<f64> = (1..=n).map(|k| k as f64 * self.dt).collect();
        Trajectory::from_history(&self.history, &times, &self.nodes[self.dim..])
            .expect("grid is increasing by construction")
    }

    /// Largest norm over the initial segment and all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.nodes
            .chunks_exact(self.dim)
            .map(norm)
            .fold(self.history.sup_norm(), f64::max)
    }
}

/// A path history `x_{t+s}` seen by a kernel during a stage evaluation.
struct TrackWindow<'a> {
    track: &'a DenseTrajectory,
    q: f64,
    n: usize,
    i: usize,
}

impl History for TrackWindow<'_> {
    fn tau(&self) -> f64 {
        self.track.history.tau()
    }

    fn dim(&self) -> usize {
        self.track.dim
    }

    fn eval_into(&self, s: f64, out: &mut [f64]) {
        let s = s.clamp(-self.tau(), 0.0);
        self.track.read(self.q + s / self.track.dt, self.n, self.i, out);
    }
}

/// An interaction law, either a general path kernel or `K~` with `rho`.
#[derive(Clone, Debug)]
pub enum Model {
    Path(DelayKernel),
    Imperfect(PointKernel, DelayMeasure),
}

impl From<DelayKernel> for Model {
    /// Uses the imperfect route whenever the kernel keeps its `(K~, rho)` parts.
    fn from(kernel: DelayKernel) -> Self {
        match kernel.parts() {
            Some((k, rho)) => Model::Imperfect(k.clone(), rho.clone()),
            None => Model::Path(kernel),
        }
    }
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Path(k) => k.dim(),
            Model::Imperfect(k, _) => k.dim(),
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            Model::Path(k) => k.tau(),
            Model::Imperfect(_, r) => r.tau(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Model::Path(k) => k.lipschitz(),
            Model::Imperfect(k, _) => k.lipschitz(),
        }
    }

    /// `max(L, |K(0, 0)|)`.
    pub fn growth_constant(&self) -> f64 {
        match self {
            Model::Path(k) => k.growth_constant(),
            Model::Imperfect(k, r) => compose_imperfect(k, r).growth_constant(),
        }
    }

    /// The equivalent path kernel.
    pub fn kernel(&self) -> DelayKernel {
        match self {
            Model::Path(k) => k.clone(),
            Model::Imperfect(k, r) => compose_imperfect(k, r),
        }
    }

    fn check_history(&self, h: &HistoryPath) -> Result<()> {
        if h.dim() != self.dim() {
            return Err(shape(format!("history of dimension {} for a model of dimension {}", h.dim(), self.dim())));
        }
        if (h.tau() - self.tau()).abs() > NODE_TOL * self.tau() {
            return Err(shape(format!("history delay {} but model delay {}", h.tau(), self.tau())));
        }
        Ok(())
    }
}

/// The velocity field `F(x) = sum_b w_b K(x, track_b window)` at one stage.
enum Prepared<'a> {
    Path {
        kernel: &'a DelayKernel,
        windows: Vec<TrackWindow<'a>>,
        weights: &'a [f64],
    },
    Imperfect {
        ktilde: &'a PointKernel,
        rho: &'a [f64],
        /// `y_b(t + s_k)` stored at `(k * len + b) * dim`.
        samples: Vec<f64>,
        weights: &'a [f64],
    },
}

impl<'a> Prepared<'a> {
    fn new(model: &'a Model, tracks: &'a [DenseTrajectory], weights: &'a [f64], n: usize, i: usize) -> Self {
        let c = tracks[0].scheme.nodes()[i];
        let q = n as f64 + c;
        match model {
            Model::Path(kernel) => Prepared::Path {
                kernel,
                windows: tracks
                    .iter()
                    .map(|track| TrackWindow { track, q, n, i })
                    .collect(),
                weights,
            },
            Model::Imperfect(ktilde, rho) => {
                let d = ktilde.dim();
                let len = tracks.len();
                let mut samples = vec![0.0; rho.len() * len * d];
                for (k, &s) in rho.atoms().iter().enumerate() {
                    for (b, track) in tracks.iter().enumerate() {
                        let at = (k * len + b) * d;
                        track.read(q + s / track.dt, n, i, &mut samples[at..at + d]);
                    }
                }
                Prepared::Imperfect {
                    ktilde,
                    rho: rho.weights(),
                    samples,
                    weights,
                }
            }
        }
    }

    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        if d <= STACK_DIM {
            let (mut v, mut acc) = ([0.0; STACK_DIM], [0.0; STACK_DIM]);
            self.eval_with(x, out, &mut v[..d], &mut acc[..d]);
        } else {
            self.eval_with(x, out, &mut vec![0.0; d], &mut vec![0.0; d]);
        }
    }

    fn eval_with(&self, x: &[f64], out: &mut [f64], v: &mut [f64], acc: &mut [f64]) {
        out.fill(0.0);
        match self {
            Prepared::Path {
                kernel,
                windows,
                weights,
            } => {
                for (win, &w) in windows.iter().zip(weights.iter()) {
                    kernel.eval_into(x, win, v);
                    for (o, vi) in out.iter_mut().zip(v.iter()) {
                        *o += w * vi;
                    }
                }
            }
            Prepared::Imperfect {
                ktilde,
                rho,
                samples,
                weights,
            } => {
                let d = x.len();
                let len = weights.len();
                for (k, &r) in rho.iter().enumerate() {
                    acc.fill(0.0);
                    for (b, &w) in weights.iter().enumerate() {
                        let at = (k * len + b) * d;
                        ktilde.eval_into(x, &samples[at..at + d], v);
                        for (a, vi) in acc.iter_mut().zip(v.iter()) {
                            *a += w * vi;
                        }
                    }
                    for (o, a) in out.iter_mut().zip(acc.iter()) {
                        *o += r * a;
                    }
                }
            }
        }
    }
}

/// A-priori radius used by the divergence guard.
#[derive(Clone, Copy, Debug)]
enum Guard {
    /// All particles interact: `R(t) = (R0 + 1/2) e^{2Ct} - 1/2`.
    Coupled { growth: f64, r0: f64 },
    /// Frozen interaction partners within `frozen`:
    /// `|x(t)| <= |x0| e^{Ct} + (e^{Ct} - 1)(1 + frozen)`.
    Frozen { growth: f64, x0: f64, frozen: f64 },
}

impl Guard {
    fn bound(&self, t: f64) -> f64 {
        let b = match *self {
            Guard::Coupled { growth, r0 } => (r0 + 0.5) * (2.0 * growth * t).exp() - 0.5,
            Guard::Frozen { growth, x0, frozen } => {
                let e = (growth * t).exp();
                x0 * e + (e - 1.0) * (1.0 + frozen)
            }
        };
        GUARD_FACTOR * b + f64::EPSILON
    }
}

fn check_state(xs: &[f64], d: usize, guards: &[Guard], step: usize, dt: f64) -> Result<()> {
    let t = step as f64 * dt;
    for (a, x) in xs.chunks_exact(d).enumerate() {
        let r = norm(x);
        if !r.is_finite() {
            return Err(Error::Divergence {
                step,
                time: t,
                reason: format!("particle {a} has a non-finite coordinate"),
            });
        }
        let g = guards[a.min(guards.len() - 1)];
        let limit = g.bound(t);
        if r > limit {
            return Err(Error::Divergence {
                step,
                time: t,
                reason: format!("|x| = {r:e} for particle {a} exceeds the a-priori limit {limit:e}"),
            });
        }
    }
    Ok(())
}

/// Advances `particles` from their current step to step `to`, reading the
/// interaction partners from `frozen` if given, otherwise from the particles
/// themselves.
pub(crate) fn advance(
    model: &Model,
    particles: &mut [DenseTrajectory],
    frozen: Option<&[DenseTrajectory]>,
    weights: &[f64],
    to: usize,
) -> Result<()> {
    let Some(first) = particles.first() else {
        return Ok(());
    };
    let (scheme, dt, d) = (first.scheme, first.dt, first.dim);
    let growth = model.growth_constant();
    let guards: Vec<Guard> = match frozen {
        None => vec![Guard::Coupled {
            growth,
            r0: particles.iter().map(DenseTrajectory::sup_norm).fold(0.0, f64::max),
        }],
        Some(tracks) => {
            let radius = tracks.iter().map(DenseTrajectory::sup_norm).fold(0.0, f64::max);
            particles
                .iter()
                .map(|p| Guard::Frozen {
                    growth,
                    x0: norm(p.node(0)),
                    frozen: radius,
                })
                .collect()
        }
    };
    if let Some(tracks) = frozen {
        if tracks.iter().any(|t| t.steps() < to) {
            return Err(invalid("frozen trajectories do not cover the requested horizon"));
        }
    }
    let stages = scheme.stages();
    let len = particles.len();
    let mut ys = vec![0.0; len * d];
    let mut ks = vec![0.0; len * d];
    let mut next = vec![0.0; len * d];
    let from = first.steps();
    if particles.iter().any(|p| p.steps() != from) {
        return Err(shape("particles are at different steps"));
    }
    for n in from..to {
        for i in 0..stages {
            for (a, p) in particles.iter_mut().enumerate() {
                let slopes: Vec<&[f64]> = (0..i).map(|j| p.slope(n, j)).collect();
                scheme.stage_state(i, p.node(n), &slopes, dt, &mut ys[a * d..(a + 1) * d]);
                drop(slopes);
                p.stage_states.extend_from_slice(&ys[a * d..(a + 1) * d]);
            }
            {
                let tracks: &[DenseTrajectory] = match frozen {
                    Some(t) => t,
                    None => particles,
                };
                let field = Prepared::new(model, tracks, weights, n, i);
                ks.par_chunks_mut(d)
                    .zip(ys.par_chunks(d))
                    .for_each(|(k, y)| field.eval(y, k));
            }
            for (a, p) in particles.iter_mut().enumerate() {
                p.slopes.extend_from_slice(&ks[a * d..(a + 1) * d]);
            }
        }
        for (a, p) in particles.iter().enumerate() {
            let slopes: Vec<&[f64]> = (0..stages).map(|j| p.slope(n, j)).collect();
            scheme.combine(p.node(n), &slopes, dt, &mut next[a * d..(a + 1) * d]);
        }
        check_state(&next, d, &guards, n + 1, dt)?;
        for (a, p) in particles.iter_mut().enumerate() {
            p.nodes.extend_from_slice(&next[a * d..(a + 1) * d]);
        }
    }
    Ok(())
}

fn start_tracks(model: &Model, initial: &[HistoryPath], config: &IntegratorConfig) -> Result<Vec<DenseTrajectory>> {
    if initial.is_empty() {
        return Err(shape("at least one particle is required"));
    }
    config.validate(model.tau())?;
    for h in initial {
        model.check_history(h)?;
    }
    Ok(initial
        .iter()
        .map(|h| DenseTrajectory::new(h.clone(), config.dt, config.scheme))
        .collect())
}

/// Runs the coupled system with the given particle weights.
pub(crate) fn run_coupled(
    model: &Model,
    initial: &[HistoryPath],
    weights: &[f64],
    config: &IntegratorConfig,
) -> Result<Vec<DenseTrajectory>> {
    let mut tracks = start_tracks(model, initial, config)?;
    if weights.len() != tracks.len() {
        return Err(shape("one weight per particle is required"));
    }
    advance(model, &mut tracks, None, weights, config.steps())?;
    Ok(tracks)
}

/// Runs `x_i' = (1/N) sum_j K(x_i, x_{j,t})` and returns dense trajectories.
pub fn simulate_model(model: &Model, initial: &[HistoryPath], config: &IntegratorConfig) -> Result<Vec<DenseTrajectory>> {
    let n = initial.len().max(1);
    run_coupled(model, initial, &vec![1.0 / n as f64; n], config)
}

/// The `N`-particle system with a general delay kernel.
pub fn simulate_particles(
    kernel: &DelayKernel,
    initial: &[HistoryPath],
    config: &IntegratorConfig,
) -> Result<Vec<Trajectory>> {
    let tracks = simulate_model(&Model::Path(kernel.clone()), initial, config)?;
    Ok(tracks.iter().map(DenseTrajectory::to_trajectory).collect())
}

/// The `N`-particle system with `K(x, sigma) = int K~(x, sigma(s)) d rho(s)`.
///
/// Delayed positions are sampled once per stage and shared by all particles.
pub fn simulate_imperfect(
    ktilde: &PointKernel,
    rho: &DelayMeasure,
    initial: &[HistoryPath],
    config: &IntegratorConfig,
) -> Result<Vec<Trajectory>> {
    let model = Model::Imperfect(ktilde.clone(), rho.clone());
    let tracks = simulate_model(&model, initial, config)?;
    Ok(tracks.iter().map(DenseTrajectory::to_trajectory).collect())
}

/// The flow `T(s, t, x; mu)` of `x' = F[mu](t, x)` for a frozen curve `mu`.
#[derive(Clone, Debug)]
pub struct FlowMap {
    curve: PathMeasureCurve,
    model: Model,
    config: IntegratorConfig,
}

impl FlowMap {
    pub fn new(curve: PathMeasureCurve, kernel: DelayKernel) -> Result<Self> {
        Self::with_model(curve, Model::Path(kernel))
    }

    pub fn with_model(curve: PathMeasureCurve, model: Model) -> Result<Self> {
        if curve.dim() != model.dim() {
            return Err(shape("curve and model dimensions differ"));
        }
        if (curve.tau() - model.tau()).abs() > NODE_TOL * model.tau() {
            return Err(shape("curve and model delays differ"));
        }
        let config = *curve.config();
        Ok(Self {
            curve,
            model,
            config,
        })
    }

    pub fn curve(&self) -> &PathMeasureCurve {
        &self.curve
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    /// `T(s, t, x)` for grid times `0 <= s <= t <= T`.
    pub fn flow(&self, s: f64, t: f64, x: &[f64]) -> Result<Point> {
        let (ns, nt) = (self.config.step_of(s)?, self.config.step_of(t)?);
        if nt < ns {
            return Err(invalid("the flow runs forward in time (t >= s)"));
        }
        if nt > self.curve.steps() {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.curve.horizon(),
            });
        }
        if x.len() != self.model.dim() {
            return Err(shape("point has the wrong dimension"));
        }
        // a probe is a particle whose own history is never read
        let tau = self.model.tau();
        let probe = HistoryPath::constant(tau, x, 1)?;
        let mut p = DenseTrajectory::new(probe, self.config.dt, self.config.scheme);
        p.nodes = x.repeat(ns + 1);
        let s_len = self.config.scheme.stages() * ns * x.len();
        p.stage_states.resize(s_len, 0.0);
        p.slopes.resize(s_len, 0.0);
        let mut probes = vec![p];
        advance(
            &self.model,
            &mut probes,
            Some(self.curve.tracks()),
            self.curve.weights(),
            nt,
        )?;
        Ok(probes[0].node(nt).to_vec())
    }

    /// `T(0, t_n, x)` at every grid time `t_n` for each starting point.
    pub fn flow_grid(&self, xs: &[Point]) -> Result<Vec<Vec<Point>>> {
        let tau = self.model.tau();
        let mut probes = xs
            .iter()
            .map(|x| {
                if x.len() != self.model.dim() {
                    return Err(shape("point has the wrong dimension"));
                }
                let probe = HistoryPath::constant(tau, x, 1)?;
                Ok(DenseTrajectory::new(probe, self.config.dt, self.config.scheme))
            })
            .collect::<Result<Vec<_>>>()?;
        let nt = self.curve.steps();
        advance(&self.model, &mut probes, Some(self.curve.tracks()), self.curve.weights(), nt)?;
        Ok(probes
            .iter()
            .map(|p| (0..=nt).map(|k| p.node(k).to_vec()).collect())
            .collect())
    }

    /// `ext[mu] sigma`: `sigma` on `[-tau, 0]`, then `T(0, t, sigma(0))`.
    pub fn extend(&self, initial: &HistoryPath, horizon: f64) -> Result<Trajectory> {
        Ok(self.extend_dense(initial, horizon)?.to_trajectory())
    }

    pub(crate) fn extend_dense(&self, initial: &HistoryPath, horizon: f64) -> Result<DenseTrajectory> {
        self.model.check_history(initial)?;
        let nt = self.config.step_of(horizon)?;
        if nt > self.curve.steps() {
            return Err(Error::Domain {
                what: "horizon",
                value: horizon,
                lo: 0.0,
                hi: self.curve.horizon(),
            });
        }
        let mut p = vec![DenseTrajectory::new(initial.clone(), self.config.dt, self.config.scheme)];
        advance(&self.model, &mut p, Some(self.curve.tracks()), self.curve.weights(), nt)?;
        Ok(p.pop().expect("one probe"))
    }
}
