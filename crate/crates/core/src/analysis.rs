//! Bound evaluators and numerical studies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dde::{IntegratorConfig, Model};
use crate::error::{invalid, shape, Result};
use crate::kernels::{DelayMeasure, PointKernel};
use crate::measures::{wasserstein1, DiscreteMeasure, MeasureCurve};
use crate::meanfield::{solve_fixed_point_model, solve_transport, FixedPointConfig, PathMeasureCurve};
use crate::paths::{norm, HistoryPath, Point};

/// Constants entering the a-priori flow estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// `L`.
    pub lipschitz: f64,
    /// `C = max(L, |K(0, 0)|)`.
    pub growth: f64,
    /// `R0`, the initial support radius.
    pub r0: f64,
    pub tau: f64,
}

impl BoundParams {
    pub fn new(lipschitz: f64, growth: f64, r0: f64, tau: f64) -> Result<Self> {
        for (what, v) in [("L", lipschitz), ("C", growth), ("R0", r0)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{what} must be finite and nonnegative, got {v}")));
            }
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("tau must be positive, got {tau}")));
        }
        Ok(Self {
            lipschitz,
            growth,
            r0,
            tau,
        })
    }

    pub fn for_model(model: &Model, r0: f64) -> Result<Self> {
        Self::new(model.lipschitz(), model.growth_constant(), r0, model.tau())
    }
}

fn check_nonnegative(what: &str, v: &[f64]) -> Result<()> {
    if let Some(x) = v.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(invalid(format!("{what} must be nonnegative and finite (found {x})")));
    }
    Ok(())
}

/// `u(t) = a(t) + b(t) int_0^t a(h) exp(int_h^t b) dh` on a uniform grid.
///
/// Both integrals use the trapezoid rule; the inner exponential is carried by
/// the recursion `I_{n+1} = e^{B_{n+1} - B_n} I_n + dt/2 (a_n e^{B_{n+1} - B_n} + a_{n+1})`.
pub fn groenwall_envelope(a: &[f64], b: &[f64], dt: f64) -> Result<Vec<f64>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(shape("a and b must be sampled on the same nonempty grid"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt must be positive"));
    }
    check_nonnegative("a", a)?;
    check_nonnegative("b", b)?;
    let mut out = Vec::with_capacity(a.len());
    let mut integral = 0.0;
    out.push(a[0]);
    for n in 0..a.len() - 1 {
        let growth = (0.5 * dt * (b[n] + b[n + 1])).exp();
        integral = growth * integral + 0.5 * dt * (a[n] * growth + a[n + 1]);
        out.push(a[n + 1] + b[n + 1] * integral);
    }
    Ok(out)
}

/// Sub-steps used when evaluating envelopes on a coarse output grid.
const ENVELOPE_DT: f64 = 1e-4;

/// The continuous-dependence rate `r(t)` at `t_k = k dt`, `k = 0..=steps`.
///
/// `r` is the Gronwall envelope with `a(t) = e^{Lt}` and `b(t) = L e^{Lt}`;
/// it is evaluated on a grid refined to at most `1e-4` and sampled back.
pub fn stability_rate(lipschitz: f64, dt: f64, steps: usize) -> Result<Vec<f64>> {
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(invalid("L must be finite and nonnegative"));
    }
    let refine = ((dt / ENVELOPE_DT).ceil() as usize).max(1);
    let h = dt / refine as f64;
    let fine = steps * refine;
    let a: Vec<f64> = (0..=fine).map(|k| (lipschitz * k as f64 * h).exp()).collect();
    let b: Vec<f64> = a.iter().map(|e| lipschitz * e).collect();
    let u = groenwall_envelope(&a, &b, h)?;
    Ok((0..=steps).map(|k| u[k * refine]).collect())
}

/// Right-hand sides of the flow estimates at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowBounds {
    /// Bound on `|T(t, x)|`.
    pub support: f64,
    /// Bound on `|T(t, x) - T(t, y)| / |x - y|`.
    pub lip: f64,
    /// Bound on `|T(t, x; mu) - T(t, x; nu)|`, when a distance curve was given.
    pub sensitivity: Option<f64>,
}

/// Evaluates the three flow estimates.
///
/// `w`, if given, holds `W1(mu(h), nu(h))` on a uniform grid of `[0, t]`.
pub fn flow_bounds(params: &BoundParams, t: f64, x_norm: f64, w: Option<&[f64]>) -> Result<FlowBounds> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t must be nonnegative"));
    }
    let e = (params.growth * t).exp();
    let sensitivity = match w {
        None => None,
        Some(w) if w.len() == 1 => Some(0.0),
        Some(w) => {
            let dt = t / (w.len() - 1) as f64;
            sensitivity_bound(params.lipschitz, w, dt)?.last().copied()
        }
    };
    Ok(FlowBounds {
        support: x_norm * e + (e - 1.0) * (1.0 + 2.0 * params.r0),
        lip: (params.lipschitz * t).exp(),
        sensitivity,
    })
}

/// `L int_0^t (W(h) + L int_0^h W(r) dr e^{L(t-h)}) dh` at every grid time.
pub fn sensitivity_bound(lipschitz: f64, w: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_nonnegative("W", w)?;
    if w.is_empty() || !(dt > 0.0) {
        return Err(invalid("need a nonempty curve and positive dt"));
    }
    let l = lipschitz;
    let growth = (l * dt).exp();
    let (mut inner, mut outer) = (0.0, 0.0);
    let mut out = vec![0.0];
    for n in 0..w.len() - 1 {
        let next_inner = inner + 0.5 * dt * (w[n] + w[n + 1]);
        outer = growth * outer + 0.5 * dt * (inner * growth + next_inner);
        inner = next_inner;
        out.push(l * inner + l * l * outer);
    }
    Ok(out)
}

/// `L e^{Lt} int_0^t W(s) ds` at every grid time, where `W(s)` is the windowed
/// distance `max_{h in [-tau, 0]} W1(mu(s + h), nu(s + h))`.
pub fn imperfect_sensitivity_bound(lipschitz: f64, w_window: &[f64], dt: f64) -> Result<Vec<f64>> {
    check_nonnegative("W", w_window)?;
    if w_window.is_empty() || !(dt > 0.0) {
        return Err(invalid("need a nonempty curve and positive dt"));
    }
    let mut integral = 0.0;
    let mut out = vec![0.0];
    for n in 0..w_window.len() - 1 {
        integral += 0.5 * dt * (w_window[n] + w_window[n + 1]);
        let t = (n + 1) as f64 * dt;
        out.push(lipschitz * (lipschitz * t).exp() * integral);
    }
    Ok(out)
}

/// Random initial paths inside `B_0(radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSampler {
    /// `sigma(s) = p` with `p` uniform in the cube, scaled into the ball.
    Constant { radius: f64 },
    /// `sigma(s) = p + s v` with `p, v` uniform in the cube, scaled so that
    /// `||sigma||_inf <= radius`.
    Affine { radius: f64 },
}

impl InitialSampler {
    pub fn radius(&self) -> f64 {
        match *self {
            InitialSampler::Constant { radius } | InitialSampler::Affine { radius } => radius,
        }
    }

    /// Draws `n` paths sampled on `segments` uniform intervals.
    pub fn sample(
        &self,
        rng: &mut impl Rng,
        n: usize,
        dim: usize,
        tau: f64,
        segments: usize,
    ) -> Result<Vec<HistoryPath>> {
        let radius = self.radius();
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid("sampler radius must be nonnegative"));
        }
        let cube = |rng: &mut dyn FnMut() -> f64| -> Point { (0..dim).map(|_| rng()).collect() };
        (0..n)
            .map(|_| {
                let mut draw = || {
                    if radius > 0.0 {
                        rng.random_range(-radius..=radius)
                    } else {
                        0.0
                    }
                };
                let p = cube(&mut draw);
                let v = match self {
                    InitialSampler::Constant { .. } => vec![0.0; dim],
                    InitialSampler::Affine { .. } => cube(&mut draw),
                };
                let path = HistoryPath::from_fn(tau, dim, segments, |s| {
                    p.iter().zip(&v).map(|(a, b)| a + s * b).collect()
                })?;
                let sup = path.sup_norm();
                if sup > radius {
                    let f = radius / sup;
                    let scaled = path.values().iter().map(|x| x * f).collect();
                    HistoryPath::from_flat(tau, dim, path.grid().to_vec(), scaled)
                } else {
                    Ok(path)
                }
            })
            .collect()
    }

    /// Draws from the ChaCha8 stream seeded with `seed`.
    pub fn sample_seeded(&self, seed: u64, n: usize, dim: usize, tau: f64, segments: usize) -> Result<Vec<HistoryPath>> {
        self.sample(&mut ChaCha8Rng::seed_from_u64(seed), n, dim, tau, segments)
    }
}

/// One `W1(mu^N(t), mu^ref(t))` measurement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub seed: u64,
    pub t: f64,
    pub w1: f64,
}

/// The median over seeds for one `(N, t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceMedian {
    pub n: usize,
    pub t: f64,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub n_ref: usize,
    pub rows: Vec<ConvergenceRow>,
    pub medians: Vec<ConvergenceMedian>,
}

impl ConvergenceTable {
    /// Medians at time `t` in increasing `N`.
    pub fn medians_at(&self, t: f64) -> Vec<f64> {
        self.medians
            .iter()
            .filter(|m| (m.t - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|m| m.median)
            .collect()
    }

    /// Whether the medians strictly decrease in `N` at time `t`.
    pub fn strictly_decreasing_at(&self, t: f64) -> bool {
        self.medians_at(t).windows(2).all(|w| w[1] < w[0])
    }
}

/// Parameters of an `N -> infinity` study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSetup {
    pub n_list: Vec<usize>,
    /// Size of the reference population.
    pub n_ref: usize,
    pub seeds: Vec<u64>,
    /// Output times (grid times of the integrator).
    pub times: Vec<f64>,
    pub sampler: InitialSampler,
    /// Intervals per initial path.
    pub segments: usize,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Distance of `N`-particle position measures to a reference population.
///
/// For each seed, `n_ref` paths are drawn once; the run with `N` particles
/// uses the first `N` of them, and the reference is the run with all `n_ref`.
pub fn convergence_study(model: &Model, setup: &ConvergenceSetup, config: &IntegratorConfig) -> Result<ConvergenceTable> {
    if setup.n_list.is_empty() || setup.seeds.is_empty() || setup.times.is_empty() {
        return Err(invalid("n_list, seeds and times must be nonempty"));
    }
    if setup.n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_list must be strictly increasing"));
    }
    if setup.n_list.iter().any(|&n| n == 0 || n > setup.n_ref) {
        return Err(invalid("every N must lie in 1..=n_ref"));
    }
    config.validate(model.tau())?;
    let steps: Vec<usize> = setup
        .times
        .iter()
        .map(|&t| config.step_of(t))
        .collect::<Result<_>>()?;
    if steps.iter().any(|&k| k > config.steps()) {
        return Err(invalid("output times exceed the horizon"));
    }
    let population = |seed: u64| {
        setup
            .sampler
            .sample_seeded(seed, setup.n_ref, model.dim(), model.tau(), setup.segments)
    };
    let run = |paths: &[HistoryPath]| -> Result<Vec<DiscreteMeasure<Point>>> {
        let mu = DiscreteMeasure::uniform(paths.to_vec())?;
        let curve = PathMeasureCurve::from_particles(model, &mu, config)?;
        steps.iter().map(|&k| curve.positions(k)).collect()
    };
    let jobs: Vec<(u64, Option<usize>)> = setup
        .seeds
        .iter()
        .flat_map(|&s| std::iter::once((s, None)).chain(setup.n_list.iter().map(move |&n| (s, Some(n)))))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(seed, n)| {
            let paths = population(seed)?;
            let take = n.unwrap_or(setup.n_ref);
            Ok(((seed, n), run(&paths[..take])?))
        })
        .collect::<Result<Vec<_>>>()?;
    let reference = |seed: u64| {
        &results
            .iter()
            .find(|((s, n), _)| *s == seed && n.is_none())
            .expect("reference run")
            .1
    };
    let mut rows = Vec::new();
    for ((seed, n), measures) in &results {
        let Some(n) = n else { continue };
        let refs = reference(*seed);
        for (j, &t) in setup.times.iter().enumerate() {
            rows.push(ConvergenceRow {
                n: *n,
                seed: *seed,
                t,
                w1: wasserstein1(&measures[j], &refs[j])?,
            });
        }
    }
    rows.sort_by(|a, b| a.n.cmp(&b.n).then(a.t.total_cmp(&b.t)).then(a.seed.cmp(&b.seed)));
    let mut medians = Vec::new();
    for &n in &setup.n_list {
        for &t in &setup.times {
            let vals = rows.iter().filter(|r| r.n == n && r.t == t).map(|r| r.w1).collect();
            medians.push(ConvergenceMedian { n, t, median: median(vals) });
        }
    }
    Ok(ConvergenceTable {
        n_ref: setup.n_ref,
        rows,
        medians,
    })
}

/// One time of a stability study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRow {
    pub t: f64,
    pub measured: f64,
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub epsilon: f64,
    /// Distance between the two initial data.
    pub w1_in: f64,
    pub tolerance: f64,
    pub rows: Vec<StabilityRow>,
    pub pass: bool,
    /// Smallest `envelope - measured`.
    pub margin: f64,
}

fn report(epsilon: f64, w1_in: f64, tolerance: f64, times: Vec<f64>, measured: Vec<f64>, r: Vec<f64>) -> StabilityReport {
    let rows: Vec<StabilityRow> = times
        .into_iter()
        .zip(measured)
        .zip(r)
        .map(|((t, m), r)| StabilityRow {
            t,
            measured: m,
            envelope: r * w1_in,
        })
        .collect();
    let margin = rows
        .iter()
        .map(|r| r.envelope - r.measured)
        .fold(f64::INFINITY, f64::min);
    StabilityReport {
        epsilon,
        w1_in,
        tolerance,
        pass: rows.iter().all(|r| r.measured <= r.envelope + tolerance),
        rows,
        margin,
    }
}

fn translate_first(x: &[f64], epsilon: f64) -> Point {
    let mut y = x.to_vec();
    y[0] += epsilon;
    y
}

/// Solves the path-space problem from `base` and from `base` translated by
/// `epsilon e_1` and compares `W1(mu(t), nu(t))` with `r(t) W1(mu_in, nu_in)`.
pub fn stability_study(
    model: &Model,
    base: &DiscreteMeasure<HistoryPath>,
    epsilon: f64,
    fp: &FixedPointConfig,
    tolerance: f64,
) -> Result<StabilityReport> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon must be nonnegative"));
    }
    let mut offset = vec![0.0; base.dim()];
    offset[0] = epsilon;
    let moved = base.push_forward(|p| p.translated(&offset).expect("matching dimension"))?;
    let w1_in = wasserstein1(base, &moved)?;
    let (a, b) = rayon::join(
        || solve_fixed_point_model(base, model, fp),
        || solve_fixed_point_model(&moved, model, fp),
    );
    let (ma, mb) = (a?.curve.measures()?, b?.curve.measures()?);
    let measured = ma
        .par_iter()
        .zip(mb.par_iter())
        .map(|(x, y)| wasserstein1(x, y))
        .collect::<Result<Vec<_>>>()?;
    let cfg = fp.integrator;
    let r = stability_rate(model.lipschitz(), cfg.dt, cfg.steps())?;
    let times = (0..=cfg.steps()).map(|k| k as f64 * cfg.dt).collect();
    Ok(report(epsilon, w1_in, tolerance, times, measured, r))
}

/// `sup_{h in [-tau, 0]} W1(mu(t + h), nu(t + h))` for every curve time `t >= 0`.
fn windowed_sup(a: &MeasureCurve<Point>, b: &MeasureCurve<Point>) -> Result<(Vec<f64>, Vec<f64>)> {
    let pointwise = a
        .measures()
        .par_iter()
        .zip(b.measures().par_iter())
        .map(|(x, y)| wasserstein1(x, y))
        .collect::<Result<Vec<_>>>()?;
    let tau = a.tau();
    let times = a.times();
    let mut out_t = Vec::new();
    let mut out = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        if t < -1e-12 {
            continue;
        }
        let lo = times.partition_point(|&u| u < t - tau - 1e-9 * tau);
        out_t.push(t);
        out.push(pointwise[lo..=k].iter().copied().fold(0.0, f64::max));
    }
    Ok((out_t, out))
}

/// The transport-equation analogue of [`stability_study`], comparing
/// windowed sup distances.
pub fn stability_study_transport(
    ktilde: &PointKernel,
    rho: &DelayMeasure,
    base: &MeasureCurve<Point>,
    epsilon: f64,
    fp: &FixedPointConfig,
    tolerance: f64,
) -> Result<StabilityReport> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(invalid("epsilon must be nonnegative"));
    }
    let moved_measures = base
        .measures()
        .iter()
        .map(|m| m.push_forward(|x| translate_first(x, epsilon)))
        .collect::<Result<Vec<_>>>()?;
    let moved = MeasureCurve::new(base.tau(), base.times().to_vec(), moved_measures)?;
    let (w_in_t, w_in) = windowed_sup(base, &moved)?;
    debug_assert_eq!(w_in_t.len(), 1);
    let w1_in = w_in[0];
    let (a, b) = rayon::join(
        || solve_transport(base, ktilde, rho, fp),
        || solve_transport(&moved, ktilde, rho, fp),
    );
    let (times, measured) = windowed_sup(&a?.curve, &b?.curve)?;
    let cfg = fp.integrator;
    let r = stability_rate(ktilde.lipschitz(), cfg.dt, cfg.steps())?;
    if r.len() != times.len() {
        return Err(shape("transport curve does not match the integrator grid"));
    }
    Ok(report(epsilon, w1_in, tolerance, times, measured, r))
}

/// Largest `|x|` over a set of points.
pub fn max_norm(points: &[Point]) -> f64 {
    points.iter().map(|p| norm(p)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(f: impl Fn(f64) -> f64, dt: f64, steps: usize) -> Vec<f64> {
        (0..=steps).map(|k| f(k as f64 * dt)).collect()
    }

    #[test]
    fn constant_coefficients_give_exponential() {
        let (dt, steps) = (1e-4, 20_000);
        let u = groenwall_envelope(&vec![1.5; steps + 1], &vec![0.8; steps + 1], dt).unwrap();
        for k in [0, 5_000, 20_000] {
            let t = k as f64 * dt;
            assert_abs_diff_eq!(u[k], 1.5 * (0.8 * t).exp(), epsilon = 1e-8);
        }
    }

    #[test]
    fn zero_feedback_returns_a() {
        let a = grid(|t| 1.0 + t * t, 0.01, 100);
        let u = groenwall_envelope(&a, &vec![0.0; 101], 0.01).unwrap();
        assert_eq!(u, a);
        assert!(groenwall_envelope(&[-1.0, 0.0], &[0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn stability_rate_matches_closed_form() {
        // r(t) = e^{Lt} exp(e^{Lt} - 1) solves the Gronwall recipe exactly
        for l in [0.0, 0.5, 1.0, 1.9717] {
            let r = stability_rate(l, 0.01, 200).unwrap();
            assert_eq!(r[0], 1.0);
            for (k, v) in r.iter().enumerate() {
                let e = (l * k as f64 * 0.01).exp();
                let exact = e * (e - 1.0).exp();
                assert!((v - exact).abs() <= 1e-6 * exact, "L = {l}, k = {k}: {v} vs {exact}");
            }
            assert!(r.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn flow_bound_examples() {
        let p = BoundParams::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let b = flow_bounds(&p, 0.0, 2.5, Some(&[0.3])).unwrap();
        assert_eq!((b.support, b.lip, b.sensitivity), (2.5, 1.0, Some(0.0)));
        let b = flow_bounds(&p, 2f64.ln(), 0.0, None).unwrap();
        assert_abs_diff_eq!(b.support, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn sensitivity_for_constant_distance() {
        // L int_0^t (w + L w h e^{L(t-h)}) dh = w (e^{Lt} - 1)
        let (l, w, dt, steps) = (1.3, 0.2, 1e-4, 15_000);
        let s = sensitivity_bound(l, &vec![w; steps + 1], dt).unwrap();
        for k in [1_000, 15_000] {
            let t = k as f64 * dt;
            assert_abs_diff_eq!(s[k], w * ((l * t).exp() - 1.0), epsilon = 1e-8);
        }
        let p = BoundParams::new(l, l, 1.0, 1.0).unwrap();
        let t = steps as f64 * dt;
        let b = flow_bounds(&p, t, 0.0, Some(&vec![w; steps + 1])).unwrap();
        assert_abs_diff_eq!(b.sensitivity.unwrap(), w * ((l * t).exp() - 1.0), epsilon = 1e-8);
        let e = imperfect_sensitivity_bound(l, &vec![w; steps + 1], dt).unwrap();
        assert_abs_diff_eq!(e[steps], l * (l * t).exp() * w * t, epsilon = 1e-10);
    }

    #[test]
    fn samplers_respect_radius_and_seed() {
        for s in [InitialSampler::Constant { radius: 0.7 }, InitialSampler::Affine { radius: 0.7 }] {
            let a = s.sample_seeded(11, 50, 3, 1.0, 4).unwrap();
            assert!(a.iter().all(|p| p.sup_norm() <= 0.7 + 1e-15));
            assert_eq!(a, s.sample_seeded(11, 50, 3, 1.0, 4).unwrap());
            assert_ne!(a, s.sample_seeded(12, 50, 3, 1.0, 4).unwrap());
        }
        let c = InitialSampler::Constant { radius: 1.0 }.sample_seeded(1, 5, 2, 1.0, 3).unwrap();
        assert!(c.iter().all(|p| p.node(0) == p.head()));
    }

    #[test]
    fn median_handles_even_counts() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    proptest! {
        #[test]
        fn envelope_is_monotone(
            a in prop::collection::vec(0.0f64..3.0, 20),
            b in prop::collection::vec(0.0f64..2.0, 20),
            da in prop::collection::vec(0.0f64..1.0, 20),
            db in prop::collection::vec(0.0f64..1.0, 20),
        ) {
            let a2: Vec<f64> = a.iter().zip(&da).map(|(x, y)| x + y).collect();
            let b2: Vec<f64> = b.iter().zip(&db).map(|(x, y)| x + y).collect();
            let u = groenwall_envelope(&a, &b, 0.05).unwrap();
            let v = groenwall_envelope(&a2, &b2, 0.05).unwrap();
            prop_assert!(u.iter().zip(&v).all(|(x, y)| x <= y));
        }

        #[test]
        fn bounds_are_monotone(l in 0.0f64..3.0, c in 0.0f64..3.0, r0 in 0.0f64..3.0, t in 0.0f64..2.0, x in 0.0f64..3.0, d in 0.0f64..1.0) {
            let lo = flow_bounds(&BoundParams::new(l, c, r0, 1.0).unwrap(), t, x, None).unwrap();
            let hi = flow_bounds(&BoundParams::new(l + d, c + d, r0 + d, 1.0).unwrap(), t, x + d, None).unwrap();
            prop_assert!(lo.support <= hi.support && lo.lip <= hi.lip);
            let w: Vec<f64> = (0..30).map(|k| (k as f64 * 0.1).sin().abs()).collect();
            let w2: Vec<f64> = w.iter().map(|v| v + d).collect();
            let s1 = sensitivity_bound(l, &w, 0.05).unwrap();
            let s2 = sensitivity_bound(l + d, &w2, 0.05).unwrap();
            prop_assert!(s1.iter().zip(&s2).all(|(a, b)| a <= b));
            let r1 = stability_rate(l, 0.1, 10).unwrap();
            let r2 = stability_rate(l + d, 0.1, 10).unwrap();
            prop_assert!(r1.iter().zip(&r2).all(|(a, b)| a <= b));
        }
    }
}
