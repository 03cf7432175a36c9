//! Interaction laws.
//!
//! A [`DelayKernel`] maps a position and a history segment to a velocity,
//! `K(x, sigma)`. A [`PointKernel`] `K~(x, y)` only sees one past position;
//! [`compose_imperfect`] averages it against a [`DelayMeasure`] to obtain
//! `K(x, sigma) = sum_k w_k K~(x, sigma(s_k))`.
//!
//! Every kernel carries the Lipschitz constant `L` of
//! `|K(x, s) - K(x', s')| <= L (|x - x'| + ||s - s'||_inf)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, shape, Error, Result};
use crate::measures::MASS_TOL;
use crate::paths::{norm, ConstantHistory, History, Point, TIME_TOL};

/// Dimensions up to this size use stack scratch space.
pub(crate) const STACK_DIM: usize = 8;

type PointFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
type PathFn = dyn Fn(&[f64], &dyn History, &mut [f64]) + Send + Sync;

fn check_lipschitz(l: f64) -> Result<()> {
    if !(l >= 0.0 && l.is_finite()) {
        return Err(invalid(format!("Lipschitz constant must be finite and nonnegative, got {l}")));
    }
    Ok(())
}

fn positive(what: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(format!("{what} must be positive, got {v}")));
    }
    Ok(())
}

/// `K~ : R^d x R^d -> R^d`.
#[derive(Clone)]
pub struct PointKernel {
    name: String,
    dim: usize,
    lipschitz: f64,
    f: Arc<PointFn>,
}

impl fmt::Debug for PointKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointKernel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl PointKernel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        lipschitz: f64,
        f: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(shape("dimension must be positive"));
        }
        check_lipschitz(lipschitz)?;
        Ok(Self {
            name: name.into(),
            dim,
            lipschitz,
            f: Arc::new(f),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Writes `K~(x, y)` into `out`.
    #[inline]
    pub fn eval_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.f)(x, y, out)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Point {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, y, &mut out);
        out
    }
}

/// An atomic probability measure on `[-tau, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayMeasure {
    tau: f64,
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DelayMeasure {
    /// Builds `rho = sum_k w_k delta_{s_k}` from `(s_k, w_k)` pairs.
    pub fn new(tau: f64, pairs: &[(f64, f64)]) -> Result<Self> {
        positive("delay tau", tau)?;
        if pairs.is_empty() {
            return Err(shape("a delay measure needs at least one atom"));
        }
        let mut atoms = Vec::with_capacity(pairs.len());
        let mut weights = Vec::with_capacity(pairs.len());
        for &(s, w) in pairs {
            let slack = TIME_TOL * tau;
            if !(s >= -tau - slack && s <= slack) {
                return Err(Error::Domain {
                    what: "delay atom",
                    value: s,
                    lo: -tau,
                    hi: 0.0,
                });
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(invalid("delay weights must be nonnegative"));
            }
            atoms.push(s.clamp(-tau, 0.0));
            weights.push(w);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Self {
            tau,
            atoms,
            weights,
        })
    }

    /// `rho = delta_{0}`: no memory.
    pub fn present(tau: f64) -> Result<Self> {
        Self::new(tau, &[(0.0, 1.0)])
    }

    /// Trail weights decaying to zero towards `s = -tau`.
    ///
    /// Atoms sit at `s_k = -k tau / m`, `k = 0..m`, with weights proportional to
    /// `(exp(decay (1 - |s| / tau)) - 1) / (exp(decay) - 1)`.
    pub fn pheromone(tau: f64, decay: f64, atoms: usize) -> Result<Self> {
        positive("delay tau", tau)?;
        positive("decay", decay)?;
        if atoms == 0 {
            return Err(invalid("the trail needs at least one atom"));
        }
        let shape_of = |s: f64| ((decay * (1.0 - s.abs() / tau)).exp() - 1.0) / decay.exp_m1();
        let times: Vec<f64> = (0..atoms).map(|k| -(k as f64) * tau / atoms as f64).collect();
        let raw: Vec<f64> = times.iter().map(|&s| shape_of(s)).collect();
        let total: f64 = raw.iter().sum();
        let pairs: Vec<(f64, f64)> = times.into_iter().zip(raw.iter().map(|w| w / total)).collect();
        Self::new(tau, &pairs)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.atoms.iter().copied().zip(self.weights.iter().copied()).collect()
    }
}

/// `K : R^d x C([-tau, 0], R^d) -> R^d`.
#[derive(Clone)]
pub struct DelayKernel {
    name: String,
    dim: usize,
    tau: f64,
    lipschitz: f64,
    f: Arc<PathFn>,
    parts: Option<(PointKernel, DelayMeasure)>,
}

impl fmt::Debug for DelayKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DelayKernel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("tau", &self.tau)
            .field("lipschitz", &self.lipschitz)
            .field("parts", &self.parts)
            .finish()
    }
}

impl DelayKernel {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        tau: f64,
        lipschitz: f64,
        f: impl Fn(&[f64], &dyn History, &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(shape("dimension must be positive"));
        }
        positive("delay tau", tau)?;
        check_lipschitz(lipschitz)?;
        Ok(Self {
            name: name.into(),
            dim,
            tau,
            lipschitz,
            f: Arc::new(f),
            parts: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// The `(K~, rho)` pair when the kernel was built by [`compose_imperfect`].
    pub fn parts(&self) -> Option<(&PointKernel, &DelayMeasure)> {
        self.parts.as_ref().map(|(k, r)| (k, r))
    }

    #[inline]
    pub fn eval_into(&self, x: &[f64], sigma: &dyn History, out: &mut [f64]) {
        (self.f)(x, sigma, out)
    }

    pub fn eval(&self, x: &[f64], sigma: &dyn History) -> Point {
        let mut out = vec![0.0; self.dim];
        self.eval_into(x, sigma, &mut out);
        out
    }

    /// `max(L, |K(0, 0)|)`, the constant of `|K(x, s)| <= C (1 + |x| + ||s||)`.
    pub fn growth_constant(&self) -> f64 {
        let zero = vec![0.0; self.dim];
        let sigma = ConstantHistory {
            tau: self.tau,
            value: &zero,
        };
        self.lipschitz.max(norm(&self.eval(&zero, &sigma)))
    }
}

/// `K(x, sigma) = sum_k w_k K~(x, sigma(s_k))`, with the same constant `L`.
pub fn compose_imperfect(ktilde: &PointKernel, rho: &DelayMeasure) -> DelayKernel {
    let (k, r) = (ktilde.clone(), rho.clone());
    let dim = ktilde.dim;
    let f = move |x: &[f64], sigma: &dyn History, out: &mut [f64]| {
        let accumulate = |y: &mut [f64], v: &mut [f64], out: &mut [f64]| {
            out.fill(0.0);
            for (&s, &w) in r.atoms.iter().zip(&r.weights) {
                sigma.eval_into(s, y);
                k.eval_into(x, y, v);
                for (o, vi) in out.iter_mut().zip(v.iter()) {
                    *o += w * vi;
                }
            }
        };
        if dim <= STACK_DIM {
            let (mut y, mut v) = ([0.0; STACK_DIM], [0.0; STACK_DIM]);
            accumulate(&mut y[..dim], &mut v[..dim], out);
        } else {
            accumulate(&mut vec![0.0; dim], &mut vec![0.0; dim], out);
        }
    };
    DelayKernel {
        name: format!("{}[rho]", ktilde.name),
        dim,
        tau: rho.tau,
        lipschitz: ktilde.lipschitz,
        f: Arc::new(f),
        parts: Some((ktilde.clone(), rho.clone())),
    }
}

/// `K~ = 0`.
pub fn zero(dim: usize) -> Result<PointKernel> {
    PointKernel::new("zero", dim, 0.0, |_, _, out| out.fill(0.0))
}

/// `K~ = v`, a constant drift.
pub fn constant(velocity: Point) -> Result<PointKernel> {
    if velocity.iter().any(|v| !v.is_finite()) {
        return Err(invalid("velocity must be finite"));
    }
    let dim = velocity.len();
    PointKernel::new("constant", dim, 0.0, move |_, _, out| {
        out.copy_from_slice(&velocity)
    })
}

/// `K~(x, y) = y - x`.
pub fn linear_attraction(dim: usize) -> Result<PointKernel> {
    PointKernel::new("linear_attraction", dim, 1.0, |x, y, out| {
        for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
            *o = b - a;
        }
    })
}

/// The `C^1` cutoff: 1 on `[0, R/2]`, cubic ramp to 0 at `R`, 0 beyond.
pub fn cutoff(r: f64, radius: f64) -> f64 {
    if r <= 0.5 * radius {
        1.0
    } else if r >= radius {
        0.0
    } else {
        let u = (2.0 * r - radius) / radius;
        1.0 - 3.0 * u * u + 2.0 * u * u * u
    }
}

/// Lipschitz constant of `z -> cutoff(|z|) z`.
///
/// The Jacobian has eigenvalues `phi(r)` (tangential) and `(r phi)'(r)`
/// (radial). On the ramp `(r phi)' = 1 - 6u - 3u^2 + 8u^3`, whose minimum over
/// `u in [0, 1]` sits at `u = (1 + sqrt 17) / 8`.
pub fn bounded_confidence_lipschitz() -> f64 {
    let u = (1.0 + 17f64.sqrt()) / 8.0;
    let slope = 1.0 - 6.0 * u - 3.0 * u * u + 8.0 * u * u * u;
    // covers rounding in the closed form
    slope.abs() * (1.0 + 1e-12)
}

/// `K~(x, y) = phi_R(|y - x|) (y - x)`.
pub fn bounded_confidence(dim: usize, radius: f64) -> Result<PointKernel> {
    positive("radius", radius)?;
    PointKernel::new(
        "bounded_confidence",
        dim,
        bounded_confidence_lipschitz(),
        move |x, y, out| {
            let mut r2 = 0.0;
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = b - a;
                r2 += *o * *o;
            }
            let phi = cutoff(r2.sqrt(), radius);
            for o in out.iter_mut() {
                *o *= phi;
            }
        },
    )
}

/// `K~(x, y) = kappa sin(y - x)` on the line.
pub fn kuramoto(coupling: f64) -> Result<PointKernel> {
    positive("coupling", coupling)?;
    PointKernel::new("kuramoto", 1, coupling, move |x, y, out| {
        out[0] = coupling * (y[0] - x[0]).sin();
    })
}

/// `K(x, sigma) = -sigma(-tau)`.
pub fn pure_delay_linear(dim: usize, tau: f64) -> Result<DelayKernel> {
    DelayKernel::new("pure_delay_linear", dim, tau, 1.0, move |_, sigma, out| {
        sigma.eval_into(-tau, out);
        for o in out.iter_mut() {
            *o = -*o;
        }
    })
}

/// Bounded-confidence attraction towards a decaying trail of past positions.
pub fn pheromone(dim: usize, tau: f64, radius: f64, decay: f64, atoms: usize) -> Result<DelayKernel> {
    let rho = DelayMeasure::pheromone(tau, decay, atoms)?;
    let mut k = compose_imperfect(&bounded_confidence(dim, radius)?, &rho);
    k.name = "pheromone".into();
    Ok(k)
}

/// A named kernel with parameters, as written in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kernel", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Zero {},
    Constant { velocity: Vec<f64> },
    LinearAttraction {},
    BoundedConfidence { radius: f64 },
    Kuramoto { coupling: f64 },
    PureDelayLinear {},
    Pheromone { radius: f64, decay: f64, atoms: usize },
}

impl KernelSpec {
    /// The point kernel, for models defined through `K~`.
    pub fn point_kernel(&self, dim: usize) -> Result<Option<PointKernel>> {
        let k = match self {
            KernelSpec::Zero {} => zero(dim)?,
            KernelSpec::Constant { velocity } => {
                if velocity.len() != dim {
                    return Err(shape(format!(
                        "velocity has dimension {}, model has {}",
                        velocity.len(),
                        dim
                    )));
                }
                constant(velocity.clone())?
            }
            KernelSpec::LinearAttraction {} => linear_attraction(dim)?,
            KernelSpec::BoundedConfidence { radius } => bounded_confidence(dim, *radius)?,
            KernelSpec::Kuramoto { coupling } => {
                if dim != 1 {
                    return Err(shape("the Kuramoto kernel lives on the line (dim = 1)"));
                }
                kuramoto(*coupling)?
            }
            KernelSpec::PureDelayLinear {} | KernelSpec::Pheromone { .. } => return Ok(None),
        };
        Ok(Some(k))
    }

    /// Whether the model carries its own delay measure.
    pub fn has_own_rho(&self) -> bool {
        matches!(self, KernelSpec::PureDelayLinear {} | KernelSpec::Pheromone { .. })
    }

    /// Builds `K`. Point kernels are composed with `rho` (`delta_0` if absent).
    pub fn build(&self, dim: usize, tau: f64, rho: Option<&DelayMeasure>) -> Result<DelayKernel> {
        match self {
            KernelSpec::PureDelayLinear {} | KernelSpec::Pheromone { .. } if rho.is_some() => Err(
                invalid("this kernel defines its own delay weighting; remove `rho`"),
            ),
            KernelSpec::PureDelayLinear {} => pure_delay_linear(dim, tau),
            KernelSpec::Pheromone {
                radius,
                decay,
                atoms,
            } => pheromone(dim, tau, *radius, *decay, *atoms),
            _ => {
                let k = self.point_kernel(dim)?.expect("point kernel");
                let rho = match rho {
                    Some(r) => r.clone(),
                    None => DelayMeasure::present(tau)?,
                };
                if (rho.tau() - tau).abs() > TIME_TOL * tau {
                    return Err(shape("rho and the model use different delays"));
                }
                Ok(compose_imperfect(&k, &rho))
            }
        }
    }
}

/// One line of the model catalog.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub form: &'static str,
    pub parameters: &'static str,
    pub lipschitz: &'static str,
    pub notes: &'static str,
}

/// The built-in models, sorted by name.
pub fn builtin_kernels() -> Vec<CatalogEntry> {
    let mut v = vec![
        CatalogEntry {
            name: "bounded_confidence",
            form: "K~(x, y) = phi_R(|y - x|) (y - x)",
            parameters: "radius > 0",
            lipschitz: "1.9717 (independent of radius)",
            notes: "phi_R = 1 on [0, R/2], C^1 cubic ramp to 0 at R; combined with rho",
        },
        CatalogEntry {
            name: "constant",
            form: "K~(x, y) = v",
            parameters: "velocity: [v_1, ..., v_d]",
            lipschitz: "0",
            notes: "uniform drift",
        },
        CatalogEntry {
            name: "kuramoto",
            form: "K~(x, y) = kappa sin(y - x)",
            parameters: "coupling kappa > 0; dim = 1",
            lipschitz: "kappa",
            notes: "phase synchronisation; combined with rho",
        },
        CatalogEntry {
            name: "linear_attraction",
            form: "K~(x, y) = y - x",
            parameters: "none",
            lipschitz: "1",
            notes: "linear consensus; combined with rho",
        },
        CatalogEntry {
            name: "pheromone",
            form: "K(x, sigma) = sum_k w_k phi_R(|sigma(s_k) - x|) (sigma(s_k) - x)",
            parameters: "radius > 0, decay > 0, atoms >= 1",
            lipschitz: "1.9717",
            notes: "trail of past positions at s_k = -k tau / atoms; weights proportional to \
                    (exp(decay (1 - |s|/tau)) - 1) / (exp(decay) - 1), fading to 0 as s -> -tau",
        },
        CatalogEntry {
            name: "pure_delay_linear",
            form: "K(x, sigma) = -sigma(-tau)",
            parameters: "none",
            lipschitz: "1",
            notes: "with one particle, x'(t) = -x(t - tau)",
        },
        CatalogEntry {
            name: "zero",
            form: "K~(x, y) = 0",
            parameters: "none",
            lipschitz: "0",
            notes: "frozen dynamics",
        },
    ];
    v.sort_by_key(|e| e.name);
    v
}
