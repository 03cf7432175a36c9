use delaykinetic::measures::{wasserstein1_simplex, wasserstein1_sorted};
use delaykinetic::{wasserstein1, DiscreteMeasure, HistoryPath, Point};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// min <C, P> over couplings, solved as a dense LP.
fn lp_transport(a: &[f64], b: &[f64], cost: impl Fn(usize, usize) -> f64) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = (0..a.len())
        .map(|i| (0..b.len()).map(|j| lp.add_var(cost(i, j), (0.0, f64::INFINITY))).collect())
        .collect();
    for (i, &ai) in a.iter().enumerate() {
        let row: Vec<_> = vars[i].iter().map(|&v| (v, 1.0)).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, ai);
    }
    // one marginal constraint is redundant; dropping it keeps the LP full rank
    for (j, &bj) in b.iter().enumerate().skip(1) {
        let col: Vec<_> = vars.iter().map(|r| (r[j], 1.0)).collect();
        lp.add_constraint(&col, ComparisonOp::Eq, bj);
    }
    lp.solve().expect("feasible transport LP").objective()
}

fn weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.01..1.0) })
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return vec![1.0 / n as f64; n];
    }
    raw.iter().map(|w| w / total).collect()
}

fn euclid(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn interp(path: &HistoryPath, s: f64) -> Point {
    let g = path.grid();
    let k = g.iter().rposition(|&t| t <= s).unwrap_or(0).min(g.len() - 2);
    let th = ((s - g[k]) / (g[k + 1] - g[k])).clamp(0.0, 1.0);
    path.node(k)
        .iter()
        .zip(path.node(k + 1))
        .map(|(a, b)| a + th * (b - a))
        .collect()
}

/// Sup distance checked at every node of either grid.
fn sup_distance(p: &HistoryPath, q: &HistoryPath) -> f64 {
    p.grid()
        .iter()
        .chain(q.grid())
        .map(|&s| euclid(&interp(p, s), &interp(q, s)))
        .fold(0.0, f64::max)
}

fn random_path(rng: &mut ChaCha8Rng, dim: usize) -> HistoryPath {
    let tau = 1.0;
    let mut grid: Vec<f64> = (0..rng.random_range(0..5)).map(|_| rng.random_range(-0.99..-0.01)).collect();
    grid.push(-tau);
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values = (0..grid.len() * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
    HistoryPath::from_flat(tau, dim, grid, values).unwrap()
}

#[test]
fn point_measures_match_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..150 {
        let dim = 1 + case % 3;
        let (n, m) = (rng.random_range(1..=50), rng.random_range(1..=50));
        let xs: Vec<Point> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let ys: Vec<Point> = (0..m).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let (wa, wb) = (weights(&mut rng, n), weights(&mut rng, m));
        let oracle = lp_transport(&wa, &wb, |i, j| euclid(&xs[i], &ys[j]));
        let mu = DiscreteMeasure::new(xs, wa).unwrap();
        let nu = DiscreteMeasure::new(ys, wb).unwrap();
        let w = wasserstein1_simplex(&mu, &nu).unwrap();
        assert!((w - oracle).abs() <= 1e-8, "case {case}: {w} vs {oracle}");
        if dim == 1 {
            let fast = wasserstein1_sorted(&mu, &nu).unwrap();
            assert!((fast - w).abs() <= 1e-9, "case {case}: sorted {fast} vs simplex {w}");
            assert_eq!(wasserstein1(&mu, &nu).unwrap(), fast);
        }
    }
}

#[test]
fn path_measures_match_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..50 {
        let dim = 1 + case % 3;
        let (n, m) = (rng.random_range(1..=20), rng.random_range(1..=20));
        let ps: Vec<HistoryPath> = (0..n).map(|_| random_path(&mut rng, dim)).collect();
        let qs: Vec<HistoryPath> = (0..m).map(|_| random_path(&mut rng, dim)).collect();
        let (wa, wb) = (weights(&mut rng, n), weights(&mut rng, m));
        let oracle = lp_transport(&wa, &wb, |i, j| sup_distance(&ps[i], &qs[j]));
        let mu = DiscreteMeasure::new(ps, wa).unwrap();
        let nu = DiscreteMeasure::new(qs, wb).unwrap();
        let w = wasserstein1(&mu, &nu).unwrap();
        assert!((w - oracle).abs() <= 1e-8, "case {case}: {w} vs {oracle}");
    }
}
