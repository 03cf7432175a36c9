//! Measure-valued solvers.
//!
//! A curve of measures on path space is stored in Lagrangian form: one
//! trajectory per atom of the initial measure, each carrying that atom's
//! weight for all times. The window `x_t` of every trajectory is the atom of
//! `mu(t)`. This makes the fixed-point operator
//! `Gamma(mu)(t) = (res[t] o ext[mu]) # mu_in` a matter of integrating every
//! initial atom against the frozen curve `mu`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dde::{advance, DenseTrajectory, IntegratorConfig, Model};
use crate::error::{invalid, shape, Error, Result};
use crate::kernels::{DelayKernel, DelayMeasure, PointKernel};
use crate::measures::{wasserstein1, DiscreteMeasure, MeasureCurve};
use crate::paths::{HistoryPath, Point, Trajectory, TIME_TOL};

/// One Picard step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PicardRecord {
    pub iter: usize,
    pub window_start: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPointConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub integrator: IntegratorConfig,
    /// Continuation windows have length `min(T, window_factor / L)`.
    pub window_factor: f64,
}

impl FixedPointConfig {
    pub fn new(tol: f64, max_iters: usize, integrator: IntegratorConfig) -> Result<Self> {
        let c = Self {
            tol,
            max_iters,
            integrator,
            window_factor: 0.5,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(invalid("max_iters must be at least 1"));
        }
        if !(self.window_factor > 0.0 && self.window_factor.is_finite()) {
            return Err(invalid("window factor must be positive"));
        }
        Ok(())
    }

    /// Steps per continuation window.
    pub fn window_steps(&self, lipschitz: f64) -> usize {
        let total = self.integrator.steps();
        if lipschitz <= 0.0 {
            return total.max(1);
        }
        let len = self.integrator.horizon.min(self.window_factor / lipschitz);
        ((len / self.integrator.dt + TIME_TOL).floor() as usize).clamp(1, total.max(1))
    }
}

/// `t -> mu(t)` on `[0, T]` with `mu(t)` a discrete measure on path space.
#[derive(Clone, Debug)]
pub struct PathMeasureCurve {
    config: IntegratorConfig,
    weights: Vec<f64>,
    tracks: Vec<DenseTrajectory>,
}

impl PathMeasureCurve {
    pub(crate) fn from_tracks(
        tracks: Vec<DenseTrajectory>,
        weights: Vec<f64>,
        config: IntegratorConfig,
    ) -> Result<Self> {
        if tracks.is_empty() || tracks.len() != weights.len() {
            return Err(shape("one weight per trajectory is required"));
        }
        Ok(Self {
            config,
            weights,
            tracks,
        })
    }

    /// The curve of the coupled particle system started from the atoms of
    /// `initial`, each particle carrying its atom's weight.
    pub fn from_particles(
        model: &Model,
        initial: &DiscreteMeasure<HistoryPath>,
        config: &IntegratorConfig,
    ) -> Result<Self> {
        let tracks = crate::dde::run_coupled(model, initial.atoms(), initial.weights(), config)?;
        Self::from_tracks(tracks, initial.weights().to_vec(), *config)
    }

    /// Every atom of `initial` continued with zero velocity up to `T`.
    pub fn frozen(initial: &DiscreteMeasure<HistoryPath>, config: &IntegratorConfig) -> Result<Self> {
        config.validate(initial.tau())?;
        let tracks = initial
            .atoms()
            .iter()
            .map(|h| {
                let mut t = DenseTrajectory::new(h.clone(), config.dt, config.scheme);
                t.freeze_until(config.steps());
                t
            })
            .collect();
        Self::from_tracks(tracks, initial.weights().to_vec(), *config)
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    pub fn tau(&self) -> f64 {
        self.tracks[0].history().tau()
    }

    pub fn dim(&self) -> usize {
        self.tracks[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn tracks(&self) -> &[DenseTrajectory] {
        &self.tracks
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    /// Number of steps covered.
    pub fn steps(&self) -> usize {
        self.tracks[0].steps()
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.config.dt
    }

    /// Grid times `t_n = n dt` on `[0, T]`.
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps()).map(|n| n as f64 * self.config.dt).collect()
    }

    pub fn trajectories(&self) -> Vec<Trajectory> {
        self.tracks.par_iter().map(DenseTrajectory::to_trajectory).collect()
    }

    /// `mu(t_n)`: the law of the windows `x_{t_n}`.
    pub fn measure_at_step(&self, n: usize) -> Result<DiscreteMeasure<HistoryPath>> {
        self.window_measure(&self.trajectories(), n)
    }

    fn window_measure(&self, trajs: &[Trajectory], n: usize) -> Result<DiscreteMeasure<HistoryPath>> {
        if n > self.steps() {
            return Err(invalid(format!("step {n} is beyond the curve ({} steps)", self.steps())));
        }
        let t = n as f64 * self.config.dt;
        let atoms = trajs.iter().map(|x| x.window(t)).collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(atoms, self.weights.clone())
    }

    /// All measures `mu(t_n)`, `n = 0..=steps`.
    pub fn measures(&self) -> Result<Vec<DiscreteMeasure<HistoryPath>>> {
        let trajs = self.trajectories();
        (0..=self.steps())
            .into_par_iter()
            .map(|n| self.window_measure(&trajs, n))
            .collect()
    }

    /// `ev(s) # mu(t_n)`, the law of `x(t_n + s)`.
    pub fn ev_pushforward(&self, n: usize, s: f64) -> Result<DiscreteMeasure<Point>> {
        let tau = self.tau();
        if !(s >= -tau * (1.0 + TIME_TOL) && s <= TIME_TOL * tau) {
            return Err(Error::Domain {
                what: "s",
                value: s,
                lo: -tau,
                hi: 0.0,
            });
        }
        let t = n as f64 * self.config.dt + s;
        let atoms = self
            .tracks
            .iter()
            .map(|x| x.eval(t))
            .collect::<Result<Vec<_>>>()?;
        DiscreteMeasure::new(atoms, self.weights.clone())
    }

    /// `ev(0) # mu(t_n)`, the positions at `t_n`.
    pub fn positions(&self, n: usize) -> Result<DiscreteMeasure<Point>> {
        let atoms = self.tracks.iter().map(|x| x.node(n).to_vec()).collect();
        DiscreteMeasure::new(atoms, self.weights.clone())
    }

    /// Largest sup norm of an atom over the whole curve.
    pub fn support_radius(&self) -> f64 {
        self.tracks
            .iter()
            .map(DenseTrajectory::sup_norm)
            .fold(0.0, f64::max)
    }

    /// The curve of position measures on `[-tau, T]`; the atoms must share
    /// their initial grid.
    pub fn position_curve(&self) -> Result<MeasureCurve<Point>> {
        let grid = self.tracks[0].history().grid();
        if self.tracks.iter().any(|x| x.history().grid() != grid) {
            return Err(shape("atoms do not share an initial grid"));
        }
        let last = grid.len() - 1;
        let mut times: Vec<f64> = grid[..last].to_vec();
        let mut measures = Vec::with_capacity(last + self.steps() + 1);
        for k in 0..last {
            let atoms = self.tracks.iter().map(|x| x.history().node(k).to_vec()).collect();
            measures.push(DiscreteMeasure::new(atoms, self.weights.clone())?);
        }
        for n in 0..=self.steps() {
            times.push(n as f64 * self.config.dt);
            measures.push(self.positions(n)?);
        }
        MeasureCurve::new(self.tau(), times, measures)
    }
}

/// Whether Picard residuals compare path windows or positions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Residual {
    Paths,
    Positions,
}

fn check_initial(model: &Model, mu_in: &DiscreteMeasure<HistoryPath>, fp: &FixedPointConfig) -> Result<()> {
    fp.validate()?;
    if mu_in.dim() != model.dim() {
        return Err(shape("initial measure and model dimensions differ"));
    }
    if (mu_in.tau() - model.tau()).abs() > TIME_TOL * model.tau() {
        return Err(shape("initial measure and model delays differ"));
    }
    fp.integrator.validate(model.tau())
}

/// `Gamma(mu)`: every atom of `mu_in` extended by the flow of `F[mu]`.
pub fn gamma(
    mu: &PathMeasureCurve,
    mu_in: &DiscreteMeasure<HistoryPath>,
    kernel: &DelayKernel,
) -> Result<PathMeasureCurve> {
    gamma_model(mu, mu_in, &Model::Path(kernel.clone()))
}

pub fn gamma_model(
    mu: &PathMeasureCurve,
    mu_in: &DiscreteMeasure<HistoryPath>,
    model: &Model,
) -> Result<PathMeasureCurve> {
    let config = *mu.config();
    let mut tracks: Vec<DenseTrajectory> = mu_in
        .atoms()
        .iter()
        .map(|h| DenseTrajectory::new(h.clone(), config.dt, config.scheme))
        .collect();
    advance(model, &mut tracks, Some(mu.tracks()), mu.weights(), mu.steps())?;
    PathMeasureCurve::from_tracks(tracks, mu_in.weights().to_vec(), config)
}

fn residual(
    kind: Residual,
    new: &[DenseTrajectory],
    old: &[DenseTrajectory],
    weights: &[f64],
    from: usize,
    to: usize,
) -> Result<f64> {
    let values: Vec<f64> = match kind {
        Residual::Positions => (from..=to)
            .into_par_iter()
            .map(|n| {
                let a = DiscreteMeasure::new(new.iter().map(|x| x.node(n).to_vec()).collect(), weights.to_vec())?;
                let b = DiscreteMeasure::new(old.iter().map(|x| x.node(n).to_vec()).collect(), weights.to_vec())?;
                wasserstein1(&a, &b)
            })
            .collect::<Result<_>>()?,
        Residual::Paths => {
            let ta: Vec<Trajectory> = new.par_iter().map(DenseTrajectory::to_trajectory).collect();
            let tb: Vec<Trajectory> = old.par_iter().map(DenseTrajectory::to_trajectory).collect();
            let dt = new[0].dt();
            (from..=to)
                .into_par_iter()
                .map(|n| {
                    let t = n as f64 * dt;
                    let wa = ta.iter().map(|x| x.window(t)).collect::<Result<Vec<_>>>()?;
                    let wb = tb.iter().map(|x| x.window(t)).collect::<Result<Vec<_>>>()?;
                    wasserstein1(
                        &DiscreteMeasure::new(wa, weights.to_vec())?,
                        &DiscreteMeasure::new(wb, weights.to_vec())?,
                    )
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// Picard iteration with windowed continuation.
fn picard(
    model: &Model,
    mu_in: &DiscreteMeasure<HistoryPath>,
    fp: &FixedPointConfig,
    kind: Residual,
) -> Result<(PathMeasureCurve, Vec<PicardRecord>)> {
    check_initial(model, mu_in, fp)?;
    let config = fp.integrator;
    let weights = mu_in.weights().to_vec();
    let total = config.steps();
    let window = fp.window_steps(model.lipschitz());
    let mut current: Vec<DenseTrajectory> = mu_in
        .atoms()
        .iter()
        .map(|h| DenseTrajectory::new(h.clone(), config.dt, config.scheme))
        .collect();
    let mut trace = Vec::new();
    let mut start = 0;
    while start < total {
        let end = (start + window).min(total);
        for x in &mut current {
            x.freeze_until(end);
        }
        let window_start = start as f64 * config.dt;
        let mut converged = false;
        let mut last = f64::INFINITY;
        for iter in 1..=fp.max_iters {
            let mut next = current.clone();
            for x in &mut next {
                x.truncate(start);
            }
            advance(model, &mut next, Some(&current), &weights, end)?;
            last = residual(kind, &next, &current, &weights, start, end)?;
            trace.push(PicardRecord {
                iter,
                window_start,
                residual: last,
            });
            current = next;
            if last <= fp.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                iterations: fp.max_iters,
                last,
                trace,
            });
        }
        start = end;
    }
    Ok((PathMeasureCurve::from_tracks(current, weights, config)?, trace))
}

/// A converged curve with its residual history.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub curve: PathMeasureCurve,
    pub trace: Vec<PicardRecord>,
}

/// Solves `mu(t) = (res[t] o ext[mu]) # mu_in` on `[0, T]`.
///
/// Starts from `mu_in` frozen in time and iterates `Gamma` on windows of
/// length `min(T, window_factor / L)` until the window's sup-in-time `W1`
/// residual drops below `tol`.
pub fn solve_fixed_point(
    mu_in: &DiscreteMeasure<HistoryPath>,
    kernel: &DelayKernel,
    fp: &FixedPointConfig,
) -> Result<FixedPoint> {
    solve_fixed_point_model(mu_in, &Model::Path(kernel.clone()), fp)
}

pub fn solve_fixed_point_model(
    mu_in: &DiscreteMeasure<HistoryPath>,
    model: &Model,
    fp: &FixedPointConfig,
) -> Result<FixedPoint> {
    let (curve, trace) = picard(model, mu_in, fp, Residual::Paths)?;
    Ok(FixedPoint { curve, trace })
}

/// The solution of the transport equation with its residual history.
#[derive(Clone, Debug)]
pub struct TransportSolution {
    pub curve: MeasureCurve<Point>,
    pub trace: Vec<PicardRecord>,
    /// The underlying atom trajectories.
    pub lagrangian: PathMeasureCurve,
}

/// Reads the atoms of a curve of measures as initial paths.
///
/// Every measure must list the same number of atoms with the same weights,
/// atom `b` at every time being the position of one labelled particle.
pub fn curve_to_paths(curve: &MeasureCurve<Point>) -> Result<DiscreteMeasure<HistoryPath>> {
    let tau = curve.tau();
    if curve.horizon().abs() > TIME_TOL * tau {
        return Err(shape("the initial curve must end at t = 0"));
    }
    let first = &curve.measures()[0];
    for m in curve.measures() {
        if m.len() != first.len()
            || m
                .weights()
                .iter()
                .zip(first.weights())
                .any(|(a, b)| (a - b).abs() > 1e-15)
        {
            return Err(shape(
                "initial measures must carry the same labelled atoms with the same weights at every time",
            ));
        }
    }
    let times = curve.times().to_vec();
    let atoms = (0..first.len())
        .map(|b| {
            let values = curve.measures().iter().map(|m| m.atoms()[b].clone()).collect();
            HistoryPath::new(tau, times.clone(), values)
        })
        .collect::<Result<Vec<_>>>()?;
    DiscreteMeasure::new(atoms, first.weights().to_vec())
}

/// `ev(s) # mu_in` on the union of the atoms' grids, as a curve on `[-tau, 0]`.
pub fn ev_curve(mu_in: &DiscreteMeasure<HistoryPath>) -> Result<MeasureCurve<Point>> {
    let tau = mu_in.tau();
    let mut grid = mu_in.atoms()[0].grid().to_vec();
    for a in &mu_in.atoms()[1..] {
        grid = crate::paths::union_grid(&grid, a.grid(), TIME_TOL * tau);
    }
    let measures = grid
        .iter()
        .map(|&s| mu_in.ev_pushforward(s))
        .collect::<Result<Vec<_>>>()?;
    MeasureCurve::new(tau, grid, measures)
}

/// Solves the transport equation for `K(x, sigma) = int K~(x, sigma(s)) d rho(s)`
/// with initial curve `mu_in` on `[-tau, 0]`, by Picard iteration on the
/// push-forward of `mu_in(0)`.
pub fn solve_transport(
    mu_in: &MeasureCurve<Point>,
    ktilde: &PointKernel,
    rho: &DelayMeasure,
    fp: &FixedPointConfig,
) -> Result<TransportSolution> {
    let model = Model::Imperfect(ktilde.clone(), rho.clone());
    let paths = curve_to_paths(mu_in)?;
    let (lagrangian, trace) = picard(&model, &paths, fp, Residual::Positions)?;
    let curve = lagrangian.position_curve()?;
    Ok(TransportSolution {
        curve,
        trace,
        lagrangian,
    })
}

/// Agreement between the path-space solution and the transport solution.
#[derive(Clone, Debug, Serialize)]
pub struct CoherenceReport {
    pub times: Vec<f64>,
    /// `W1(ev(0) # mu(t), mu~(t))` per grid time.
    pub gap: Vec<f64>,
    /// Largest `W1(ev(s) # mu(t), mu~(t + s))` over the sampled `(t, s)`.
    pub compatibility: f64,
    pub fixed_point_trace: Vec<PicardRecord>,
    pub transport_trace: Vec<PicardRecord>,
}

impl CoherenceReport {
    pub fn max_gap(&self) -> f64 {
        self.gap.iter().copied().fold(0.0, f64::max)
    }
}

/// Solves the path-space problem with `K = K~ * rho` and the transport problem
/// started from `ev(s) # mu_in`, then compares them.
pub fn coherence_check(
    mu_in: &DiscreteMeasure<HistoryPath>,
    ktilde: &PointKernel,
    rho: &DelayMeasure,
    fp: &FixedPointConfig,
) -> Result<CoherenceReport> {
    let kernel = crate::kernels::compose_imperfect(ktilde, rho);
    let path = solve_fixed_point(mu_in, &kernel, fp)?;
    let transport = solve_transport(&ev_curve(mu_in)?, ktilde, rho, fp)?;
    let curve = &path.curve;
    let steps = curve.steps();
    let dt = fp.integrator.dt;
    let gap = (0..=steps)
        .into_par_iter()
        .map(|n| wasserstein1(&curve.positions(n)?, transport.curve.at(n as f64 * dt)?))
        .collect::<Result<Vec<_>>>()?;

    let tau = curve.tau();
    let per_delay = (tau / dt).round() as usize;
    let n_stride = (steps / 20).max(1);
    let s_stride = (per_delay / 10).max(1);
    let mut pairs = Vec::new();
    for n in (0..=steps).step_by(n_stride) {
        for m in (0..=per_delay).step_by(s_stride) {
            pairs.push((n, m));
        }
    }
    let compat = pairs
        .par_iter()
        .map(|&(n, m)| {
            let s = -(m as f64) * dt;
            let t = n as f64 * dt + s;
            match transport.curve.index_of(t) {
                Some(k) => wasserstein1(&curve.ev_pushforward(n, s)?, &transport.curve.measures()[k]),
                None => Ok(0.0),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoherenceReport {
        times: curve.times(),
        gap,
        compatibility: compat.into_iter().fold(0.0, f64::max),
        fixed_point_trace: path.trace,
        transport_trace: transport.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dde::Scheme;
    use crate::kernels::{compose_imperfect, linear_attraction, pure_delay_linear, zero};
    use crate::measures::wasserstein1_paths;
    use approx::assert_abs_diff_eq;

    fn consensus() -> DelayKernel {
        compose_imperfect(&linear_attraction(1).unwrap(), &DelayMeasure::present(1.0).unwrap())
    }

    fn fp(dt: f64, horizon: f64) -> FixedPointConfig {
        FixedPointConfig::new(1e-10, 60, IntegratorConfig::new(dt, Scheme::Rk4, horizon).unwrap()).unwrap()
    }

    fn two_points() -> DiscreteMeasure<HistoryPath> {
        DiscreteMeasure::uniform(vec![
            HistoryPath::constant(1.0, &[-1.0], 10).unwrap(),
            HistoryPath::constant(1.0, &[1.0], 10).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn zero_kernel_converges_immediately() {
        let k = compose_imperfect(&zero(1).unwrap(), &DelayMeasure::present(1.0).unwrap());
        let sol = solve_fixed_point(&two_points(), &k, &fp(0.1, 1.0)).unwrap();
        assert_eq!(sol.trace.len(), 1);
        assert_eq!(sol.trace[0].residual, 0.0);
        let m = sol.curve.measure_at_step(10).unwrap();
        assert_eq!(wasserstein1_paths(&m, &two_points()).unwrap(), 0.0);
    }

    #[test]
    fn gamma_starts_at_initial_measure() {
        let mu_in = two_points();
        let config = IntegratorConfig::new(0.1, Scheme::Rk4, 1.0).unwrap();
        let frozen = PathMeasureCurve::frozen(&mu_in, &config).unwrap();
        let g = gamma(&frozen, &mu_in, &consensus()).unwrap();
        assert_eq!(g.measure_at_step(0).unwrap(), mu_in);
        let single = DiscreteMeasure::dirac(HistoryPath::constant(1.0, &[2.0], 10).unwrap());
        let g = gamma(&frozen, &single, &consensus()).unwrap();
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn fixed_point_matches_particles() {
        let mu_in = DiscreteMeasure::uniform(
            (0..5)
                .map(|i| HistoryPath::from_fn(1.0, 1, 20, move |s| vec![i as f64 - 2.0 + 0.3 * s]).unwrap())
                .collect(),
        )
        .unwrap();
        let cfg = fp(0.05, 2.0);
        let model = Model::Path(consensus());
        let sol = solve_fixed_point(&mu_in, &consensus(), &cfg).unwrap();
        let particles = PathMeasureCurve::from_particles(&model, &mu_in, &cfg.integrator).unwrap();
        let (a, b) = (sol.curve.measures().unwrap(), particles.measures().unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!(wasserstein1_paths(x, y).unwrap() <= 1e-8);
        }
        // residuals shrink geometrically within the first window
        let first: Vec<f64> = sol.trace.iter().filter(|r| r.window_start == 0.0).map(|r| r.residual).collect();
        assert!(first.windows(2).all(|w| w[1] < w[0] || w[1] == 0.0));
    }

    #[test]
    fn transport_linear_consensus() {
        let times = vec![-1.0, 0.0];
        let m = DiscreteMeasure::uniform(vec![vec![-1.0], vec![1.0]]).unwrap();
        let curve = MeasureCurve::new(1.0, times, vec![m.clone(), m]).unwrap();
        let sol = solve_transport(
            &curve,
            &linear_attraction(1).unwrap(),
            &DelayMeasure::present(1.0).unwrap(),
            &fp(0.01, 1.0),
        )
        .unwrap();
        let e = (-1.0f64).exp();
        let expected = DiscreteMeasure::uniform(vec![vec![-e], vec![e]]).unwrap();
        assert!(wasserstein1(sol.curve.at(1.0).unwrap(), &expected).unwrap() <= 1e-6);
        assert_eq!(sol.curve.at(-1.0).unwrap().atoms(), &[vec![-1.0], vec![1.0]]);
    }

    #[test]
    fn transport_rejects_unlabelled_curves() {
        let a = DiscreteMeasure::uniform(vec![vec![-1.0], vec![1.0]]).unwrap();
        let b = DiscreteMeasure::dirac(vec![0.0]);
        let curve = MeasureCurve::new(1.0, vec![-1.0, 0.0], vec![a, b]).unwrap();
        let r = solve_transport(
            &curve,
            &linear_attraction(1).unwrap(),
            &DelayMeasure::present(1.0).unwrap(),
            &fp(0.1, 1.0),
        );
        assert!(matches!(r, Err(Error::Shape(_))));
    }

    #[test]
    fn coherence_of_zero_kernel_is_exact() {
        let mu_in = DiscreteMeasure::uniform(vec![
            HistoryPath::from_fn(1.0, 1, 10, |s| vec![s]).unwrap(),
            HistoryPath::from_fn(1.0, 1, 10, |s| vec![1.0 - s * s]).unwrap(),
        ])
        .unwrap();
        let report = coherence_check(
            &mu_in,
            &zero(1).unwrap(),
            &DelayMeasure::present(1.0).unwrap(),
            &fp(0.1, 1.0),
        )
        .unwrap();
        assert_eq!(report.max_gap(), 0.0);
        assert!(report.compatibility <= 1e-14);
    }

    #[test]
    fn single_atom_cosine() {
        use std::f64::consts::FRAC_PI_2;
        let tau = FRAC_PI_2;
        let per = 200;
        let dt = tau / per as f64;
        let h = HistoryPath::from_fn(tau, 1, 2 * per, |s| vec![s.cos()]).unwrap();
        let k = pure_delay_linear(1, tau).unwrap();
        let cfg = FixedPointConfig::new(1e-12, 80, IntegratorConfig::new(dt, Scheme::Rk4, 2.0 * tau).unwrap()).unwrap();
        let sol = solve_fixed_point(&DiscreteMeasure::dirac(h), &k, &cfg).unwrap();
        for (n, t) in sol.curve.times().iter().enumerate() {
            assert_abs_diff_eq!(sol.curve.positions(n).unwrap().atoms()[0][0], t.cos(), epsilon = 1e-8);
        }
    }

    #[test]
    fn non_convergence_carries_trace() {
        let cfg = FixedPointConfig::new(1e-14, 1, IntegratorConfig::new(0.05, Scheme::Rk4, 1.0).unwrap()).unwrap();
        match solve_fixed_point(&two_points(), &consensus(), &cfg) {
            Err(Error::NonConvergence { iterations, trace, .. }) => {
                assert_eq!(iterations, 1);
                assert_eq!(trace.len(), 1);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
