//! Fixtures shared by the benchmarks.

use delaykinetic::kernels::{linear_attraction, pheromone};
use delaykinetic::{DelayMeasure, DiscreteMeasure, HistoryPath, InitialSampler, Model, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform measure on `n` points drawn from `[-1, 1]^dim`.
pub fn point_cloud(seed: u64, n: usize, dim: usize) -> DiscreteMeasure<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    DiscreteMeasure::uniform(atoms).expect("nonempty")
}

/// Uniform measure on `n` affine histories in `B_0(1)`.
pub fn path_cloud(seed: u64, n: usize, dim: usize, tau: f64, segments: usize) -> DiscreteMeasure<HistoryPath> {
    let paths = InitialSampler::Affine { radius: 1.0 }
        .sample_seeded(seed, n, dim, tau, segments)
        .expect("valid sampler");
    DiscreteMeasure::uniform(paths).expect("nonempty")
}

/// `K~(x, y) = y - x` with `rho = delta_0`, on the line.
pub fn consensus() -> Model {
    Model::Imperfect(linear_attraction(1).expect("dim 1"), DelayMeasure::present(1.0).expect("tau 1"))
}

/// Planar bounded-confidence attraction to a five-atom trail.
pub fn ants() -> Model {
    Model::from(pheromone(2, 1.0, 1.0, 2.0, 5).expect("valid parameters"))
}
