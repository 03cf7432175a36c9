//! Discrete probability measures, push-forwards and Wasserstein-1 distances.

use rayon::prelude::*;

use crate::error::{invalid, shape, Error, Result};
use crate::ot;
use crate::paths::{dist, norm, HistoryPath, Point, TIME_TOL};

/// Tolerance on the total mass of a probability measure.
pub const MASS_TOL: f64 = 1e-12;
/// Atoms with less mass than this are ignored by transport solvers.
pub const PRUNE_TOL: f64 = 1e-15;

/// A metric space that measures can live on.
pub trait Ground: Clone + Send + Sync {
    /// Fails if the two elements cannot be compared (different dimension or delay).
    fn check_compatible(&self, other: &Self) -> Result<()>;
    fn ground_distance(&self, other: &Self) -> f64;
    /// Distance to the origin.
    fn magnitude(&self) -> f64;
    /// The coordinate of a one-dimensional point.
    fn as_scalar(&self) -> Option<f64> {
        None
    }
}

impl Ground for Point {
    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(shape(format!("points of dimension {} and {}", self.len(), other.len())));
        }
        Ok(())
    }

    fn ground_distance(&self, other: &Self) -> f64 {
        dist(self, other)
    }

    fn magnitude(&self) -> f64 {
        norm(self)
    }

    fn as_scalar(&self) -> Option<f64> {
        (self.len() == 1).then(|| self[0])
    }
}

impl Ground for HistoryPath {
    fn check_compatible(&self, other: &Self) -> Result<()> {
        HistoryPath::check_compatible(self, other)
    }

    fn ground_distance(&self, other: &Self) -> f64 {
        self.distance_unchecked(other)
    }

    fn magnitude(&self) -> f64 {
        self.sup_norm()
    }
}

/// A finitely supported probability measure.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<G> {
    atoms: Vec<G>,
    weights: Vec<f64>,
}

impl<G: Ground> DiscreteMeasure<G> {
    pub fn new(atoms: Vec<G>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(shape("a measure needs at least one atom"));
        }
        if atoms.len() != weights.len() {
            return Err(shape(format!("{} atoms but {} weights", atoms.len(), weights.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(invalid("weights must be nonnegative and finite"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MASS_TOL {
            return Err(Error::NotNormalized { sum });
        }
        for a in &atoms[1..] {
            atoms[0].check_compatible(a)?;
        }
        Ok(Self { atoms, weights })
    }

    /// The empirical measure `(1/N) sum delta_{x_i}`.
    pub fn uniform(atoms: Vec<G>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn dirac(atom: G) -> Self {
        Self {
            atoms: vec![atom],
            weights: vec![1.0],
        }
    }

    pub fn atoms(&self) -> &[G] {
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

    pub fn iter(&self) -> impl Iterator<Item = (&G, f64)> {
        self.atoms.iter().zip(self.weights.iter().copied())
    }

    /// `f # mu`: atoms are mapped one by one, weights kept, nothing merged.
    pub fn push_forward<H: Ground>(&self, f: impl Fn(&G) -> H) -> Result<DiscreteMeasure<H>> {
        let atoms: Vec<H> = self.atoms.iter().map(f).collect();
        for a in &atoms[1..] {
            atoms[0].check_compatible(a)?;
        }
        Ok(DiscreteMeasure {
            atoms,
            weights: self.weights.clone(),
        })
    }

    /// `int phi d(mu)`.
    pub fn integrate(&self, phi: impl Fn(&G) -> f64) -> f64 {
        self.iter().map(|(a, w)| w * phi(a)).sum()
    }

    /// Largest distance of an atom with positive weight from the origin.
    pub fn support_radius(&self) -> f64 {
        self.iter()
            .filter(|(_, w)| *w > 0.0)
            .map(|(a, _)| a.magnitude())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        self.atoms[0].check_compatible(&other.atoms[0])
    }
}

impl DiscreteMeasure<Point> {
    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }
}

impl DiscreteMeasure<HistoryPath> {
    pub fn tau(&self) -> f64 {
        self.atoms[0].tau()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].dim()
    }

    /// `ev(s) # mu`, the law of `sigma(s)`.
    pub fn ev_pushforward(&self, s: f64) -> Result<DiscreteMeasure<Point>> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| a.eval(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscreteMeasure {
            atoms,
            weights: self.weights.clone(),
        })
    }
}

/// Drops atoms with negligible weight, keeping indices into the original.
fn kept(weights: &[f64]) -> Vec<usize> {
    (0..weights.len()).filter(|&i| weights[i] > PRUNE_TOL).collect()
}

/// `W1` with an arbitrary cost between atom indices, by network simplex.
pub fn wasserstein1_with(a: &[f64], b: &[f64], cost: impl Fn(usize, usize) -> f64 + Sync) -> Result<f64> {
    let ka = kept(a);
    let kb = kept(b);
    if ka.is_empty() || kb.is_empty() {
        return Err(shape("transport between measures without mass"));
    }
    let n = kb.len();
    let mut matrix = vec![0.0; ka.len() * n];
    matrix
        .par_chunks_mut(n)
        .zip(ka.par_iter())
        .for_each(|(row, &i)| {
            for (c, &j) in row.iter_mut().zip(&kb) {
                *c = cost(i, j);
            }
        });
    let wa: Vec<f64> = ka.iter().map(|&i| a[i]).collect();
    let wb: Vec<f64> = kb.iter().map(|&j| b[j]).collect();
    ot::transport_cost(&wa, &wb, &matrix)
}

/// `W1` between measures on the real line, `int |F_mu - F_nu| dx`.
pub fn wasserstein1_sorted<G: Ground>(mu: &DiscreteMeasure<G>, nu: &DiscreteMeasure<G>) -> Result<f64> {
    mu.check_compatible(nu)?;
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(mu.len() + nu.len());
    for (sign, m) in [(1.0, mu), (-1.0, nu)] {
        for (a, w) in m.iter() {
            let x = a
                .as_scalar()
                .ok_or_else(|| shape("sorted W1 needs one-dimensional atoms"))?;
            events.push((x, sign * w));
        }
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut cdf_gap = 0.0;
    let mut total = 0.0;
    for pair in events.windows(2) {
        cdf_gap += pair[0].1;
        total += cdf_gap.abs() * (pair[1].0 - pair[0].0);
    }
    Ok(total)
}

/// `W1` by network simplex on the ground-distance cost matrix.
pub fn wasserstein1_simplex<G: Ground>(mu: &DiscreteMeasure<G>, nu: &DiscreteMeasure<G>) -> Result<f64> {
    mu.check_compatible(nu)?;
    wasserstein1_with(&mu.weights, &nu.weights, |i, j| {
        mu.atoms[i].ground_distance(&nu.atoms[j])
    })
}

/// The Monge-Kantorovich distance with the ground metric as cost.
///
/// One-dimensional instances use the closed form; all others are solved
/// exactly by network simplex.
pub fn wasserstein1<G: Ground>(mu: &DiscreteMeasure<G>, nu: &DiscreteMeasure<G>) -> Result<f64> {
    mu.check_compatible(nu)?;
    if mu.atoms[0].as_scalar().is_some() {
        wasserstein1_sorted(mu, nu)
    } else {
        wasserstein1_simplex(mu, nu)
    }
}

/// `W1` on path space with the sup-norm ground metric.
pub fn wasserstein1_paths(
    mu: &DiscreteMeasure<HistoryPath>,
    nu: &DiscreteMeasure<HistoryPath>,
) -> Result<f64> {
    wasserstein1(mu, nu)
}

/// A time-indexed family of measures on `[-tau, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureCurve<G> {
    tau: f64,
    times: Vec<f64>,
    measures: Vec<DiscreteMeasure<G>>,
}

impl<G: Ground> MeasureCurve<G> {
    pub fn new(tau: f64, mut times: Vec<f64>, measures: Vec<DiscreteMeasure<G>>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid(format!("delay tau must be positive, got {tau}")));
        }
        if times.len() < 2 || times.len() != measures.len() {
            return Err(shape("a curve needs matching times and measures (at least two)"));
        }
        if (times[0] + tau).abs() > TIME_TOL * tau {
            return Err(shape(format!("curve starts at {} instead of {}", times[0], -tau)));
        }
        times[0] = -tau;
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(shape("curve times must be strictly increasing"));
        }
        if *times.last().unwrap() < -TIME_TOL * tau {
            return Err(shape("curve must reach t = 0"));
        }
        for m in &measures[1..] {
            measures[0].check_compatible(m)?;
        }
        Ok(Self {
            tau,
            times,
            measures,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn measures(&self) -> &[DiscreteMeasure<G>] {
        &self.measures
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Index of the grid time equal to `t` up to rounding.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let eps = TIME_TOL * self.tau.max(1.0);
        let k = self.times.partition_point(|&g| g < t - eps);
        (k < self.times.len() && (self.times[k] - t).abs() <= eps).then_some(k)
    }

    /// The measure at grid time `t`.
    pub fn at(&self, t: f64) -> Result<&DiscreteMeasure<G>> {
        self.index_of(t)
            .map(|k| &self.measures[k])
            .ok_or_else(|| shape(format!("t = {t} is not a grid time of the curve")))
    }

    /// The sub-curve on `[t - tau, t]`, re-indexed to `[-tau, 0]`.
    pub fn window(&self, t: f64) -> Result<MeasureCurve<G>> {
        if !(t >= -TIME_TOL * self.tau && t <= self.horizon() + TIME_TOL * self.tau) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                lo: 0.0,
                hi: self.horizon(),
            });
        }
        let lo = self
            .index_of(t - self.tau)
            .ok_or_else(|| shape("window start is not a grid time"))?;
        let hi = self
            .index_of(t)
            .ok_or_else(|| shape("window end is not a grid time"))?;
        let times = self.times[lo..=hi].iter().map(|u| u - self.times[hi]).collect();
        MeasureCurve::new(self.tau, times, self.measures[lo..=hi].to_vec())
    }
}

/// `sup_{t in [lo, hi]} W1(mu(t), nu(t))` over the shared grid times.
pub fn sup_wasserstein<G: Ground>(
    a: &MeasureCurve<G>,
    b: &MeasureCurve<G>,
    window: (f64, f64),
) -> Result<f64> {
    let eps = TIME_TOL * a.tau.max(1.0);
    let pick = |c: &MeasureCurve<G>| -> Vec<usize> {
        (0..c.times.len())
            .filter(|&k| c.times[k] >= window.0 - eps && c.times[k] <= window.1 + eps)
            .collect()
    };
    let (ia, ib) = (pick(a), pick(b));
    if ia.len() != ib.len()
        || ia
            .iter()
            .zip(&ib)
            .any(|(&i, &j)| (a.times[i] - b.times[j]).abs() > eps)
    {
        return Err(shape("curves do not share a time grid on the window"));
    }
    if ia.is_empty() {
        return Err(shape("no grid times inside the window"));
    }
    let values = ia
        .par_iter()
        .zip(ib.par_iter())
        .map(|(&i, &j)| wasserstein1(&a.measures[i], &b.measures[j]))
        .collect::<Result<Vec<_>>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pts(xs: &[f64]) -> Vec<Point> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn push_forward_examples() {
        let mu = DiscreteMeasure::uniform(pts(&[0.0, 2.0])).unwrap();
        assert_eq!(mu.push_forward(|x| x.clone()).unwrap(), mu);
        let shifted = mu.push_forward(|x| vec![x[0] + 1.0]).unwrap();
        assert_eq!(shifted.atoms(), pts(&[1.0, 3.0]).as_slice());
        assert_eq!(shifted.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn ev_pushforward_examples() {
        let consts: Vec<HistoryPath> = [1.0, -2.0, 0.5]
            .iter()
            .map(|&c| HistoryPath::constant(1.0, &[c], 4).unwrap())
            .collect();
        let mu = DiscreteMeasure::uniform(consts).unwrap();
        assert_eq!(mu.ev_pushforward(-0.3).unwrap().atoms(), pts(&[1.0, -2.0, 0.5]).as_slice());

        let id = HistoryPath::from_fn(1.0, 1, 4, |s| vec![s]).unwrap();
        let d = DiscreteMeasure::dirac(id);
        assert_eq!(d.ev_pushforward(-0.5).unwrap().atoms(), &[vec![-0.5]]);
        assert!(d.ev_pushforward(0.5).is_err());

        let up = HistoryPath::from_fn(1.0, 1, 4, |s| vec![s + 0.5]).unwrap();
        let down = HistoryPath::from_fn(1.0, 1, 4, |s| vec![-s - 0.5]).unwrap();
        let pair = DiscreteMeasure::uniform(vec![up, down]).unwrap();
        let at_h = pair.ev_pushforward(-0.5).unwrap();
        let point = DiscreteMeasure::dirac(vec![0.0]);
        assert_eq!(wasserstein1(&at_h, &point).unwrap(), 0.0);
    }

    #[test]
    fn w1_examples() {
        let mu = DiscreteMeasure::uniform(pts(&[0.0, 2.0])).unwrap();
        assert_eq!(wasserstein1(&mu, &mu).unwrap(), 0.0);
        let a = DiscreteMeasure::dirac(vec![0.0]);
        let b = DiscreteMeasure::dirac(vec![1.0]);
        assert_eq!(wasserstein1(&a, &b).unwrap(), 1.0);
        let nu = DiscreteMeasure::uniform(pts(&[1.0, 3.0])).unwrap();
        assert_abs_diff_eq!(wasserstein1(&mu, &nu).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(wasserstein1_simplex(&mu, &nu).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn w1_rejects_bad_inputs() {
        let a = DiscreteMeasure::dirac(vec![0.0]);
        let b = DiscreteMeasure::dirac(vec![0.0, 1.0]);
        assert!(matches!(wasserstein1(&a, &b), Err(Error::Shape(_))));
        assert!(matches!(
            DiscreteMeasure::new(pts(&[0.0, 1.0]), vec![0.5, 0.6]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn w1_path_examples() {
        let zero = HistoryPath::constant(1.0, &[0.0], 5).unwrap();
        let one = HistoryPath::constant(1.0, &[1.0], 5).unwrap();
        let a = DiscreteMeasure::dirac(zero.clone());
        let b = DiscreteMeasure::dirac(one);
        assert_eq!(wasserstein1_paths(&a, &b).unwrap(), 1.0);
        assert_eq!(wasserstein1_paths(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn curve_window_and_sup() {
        let times: Vec<f64> = (0..=4).map(|k| -1.0 + 0.5 * k as f64).collect();
        let base: Vec<_> = times.iter().map(|&t| DiscreteMeasure::dirac(vec![t])).collect();
        let c = MeasureCurve::new(1.0, times.clone(), base.clone()).unwrap();
        let mut moved = base.clone();
        moved[3] = DiscreteMeasure::dirac(vec![times[3] + 0.3]);
        let d = MeasureCurve::new(1.0, times.clone(), moved).unwrap();
        assert_eq!(sup_wasserstein(&c, &c, (-1.0, 1.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(sup_wasserstein(&c, &d, (-1.0, 1.0)).unwrap(), 0.3, epsilon = 1e-15);
        assert_eq!(sup_wasserstein(&c, &d, (-1.0, 0.0)).unwrap(), 0.0);

        let w = c.window(1.0).unwrap();
        assert_eq!(w.times(), &[-1.0, -0.5, 0.0]);
        assert_eq!(w.measures()[0].atoms(), &[vec![0.0]]);
        assert!(c.window(1.5).is_err());
    }

    fn arb_measure(d: usize) -> impl Strategy<Value = DiscreteMeasure<Point>> {
        (1usize..8).prop_flat_map(move |n| {
            (
                prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), n),
                prop::collection::vec(0.05f64..1.0, n),
            )
                .prop_map(|(atoms, w)| {
                    let s: f64 = w.iter().sum();
                    DiscreteMeasure::new(atoms, w.iter().map(|x| x / s).collect()).unwrap()
                })
        })
    }

    proptest! {
        #[test]
        fn w1_metric_axioms(a in arb_measure(2), b in arb_measure(2), c in arb_measure(2)) {
            let ab = wasserstein1(&a, &b).unwrap();
            let ba = wasserstein1(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-9);
            prop_assert!(wasserstein1(&a, &a).unwrap() <= 1e-12);
            let ac = wasserstein1(&a, &c).unwrap();
            let cb = wasserstein1(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-9);
        }

        #[test]
        fn sorted_and_simplex_agree(a in arb_measure(1), b in arb_measure(1)) {
            let x = wasserstein1_sorted(&a, &b).unwrap();
            let y = wasserstein1_simplex(&a, &b).unwrap();
            prop_assert!((x - y).abs() <= 1e-9, "{} vs {}", x, y);
        }

        #[test]
        fn affine_maps_scale_w1(a in arb_measure(2), b in arb_measure(2), s in -3.0f64..3.0, t in -2.0f64..2.0) {
            let f = |x: &Point| vec![s * x[0] + t, s * x[1] - t];
            let lhs = wasserstein1(&a.push_forward(f).unwrap(), &b.push_forward(f).unwrap()).unwrap();
            prop_assert!(lhs <= s.abs() * wasserstein1(&a, &b).unwrap() + 1e-9);
        }

        #[test]
        fn lipschitz_duality(a in arb_measure(2), b in arb_measure(2), angle in 0.0f64..6.3, c in -1.0f64..1.0) {
            let (u, v) = (angle.cos(), angle.sin());
            let phi = |x: &Point| (u * x[0] + v * x[1]).abs() + c;
            let gap = (a.integrate(phi) - b.integrate(phi)).abs();
            prop_assert!(gap <= wasserstein1(&a, &b).unwrap() + 1e-9);
        }
    }
}
