//! Seeded sample generators and shared fixtures.
//!
//! Everything here is deterministic in the seed: the same seed always
//! produces the same spaces, walls, and instances, which keeps the
//! self-test and the property suites reproducible across runs and
//! machines.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::BitSet;
use crate::error::Result;
use crate::lift::WallsTriple;
use crate::metric::{check_dense, cycle_space, path_space, DenseMap, FiniteMetricSpace};
use crate::rational::{qr, qzero, Q};
use crate::walls::{cycle_walls, path_walls, WallsStructure};
use crate::wreath::WreathInstance;

/// The one random stream used across the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected graph on `n` vertices with its shortest-path metric: a random
/// spanning tree plus a few extra edges.
pub fn random_connected_graph_space(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetricSpace {
    let labels = (0..n).map(|i| i.to_string()).collect();
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for _ in 0..n / 2 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
    }
    FiniteMetricSpace::word_metric(labels, &edges).expect("spanning tree keeps the graph connected")
}

/// Random measured walls on `n` labelled points: up to `max_walls` random
/// sides with small rational weights. Degenerate sides are dropped and
/// parallel ones merged by the loader.
pub fn random_walls(rng: &mut ChaCha8Rng, n: usize, max_walls: usize) -> Result<WallsStructure> {
    let labels = (0..n).map(|i| i.to_string()).collect();
    let count = rng.gen_range(1..=max_walls.max(1));
    let mut raw = Vec::with_capacity(count);
    for _ in 0..count {
        let indices: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let weight = qr(rng.gen_range(1..=8), rng.gen_range(1..=4));
        raw.push((BitSet::from_indices(n, &indices), weight));
    }
    WallsStructure::new(labels, raw)
}

/// Random wreath instance over small connected graphs. The covering
/// constant is taken to be the exact covering radius of the random map, so
/// the instance is dense by construction.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Result<WreathInstance> {
    let xn = rng.gen_range(2..=3);
    let x = random_connected_graph_space(rng, xn);
    let basepoint = rng.gen_range(0..x.n());
    let yn = rng.gen_range(4..=7);
    let y = random_connected_graph_space(rng, yn);
    let zn = rng.gen_range(3..=7);
    let z = random_connected_graph_space(rng, zn);
    let values: Vec<usize> = (0..y.n()).map(|_| rng.gen_range(0..z.n())).collect();
    let probe = DenseMap::new(values.clone(), z.n(), qzero())?;
    let covering = check_dense(&probe, &z)?.worst_distance;
    let p = DenseMap::new(values, z.n(), covering)?;
    WreathInstance::new(x, basepoint, y, z, p)
}

/// Lamplighter over a random cycle, with the canonical walls on every
/// factor: the shape for which the two-sided comparison is certified. The
/// cycle is long enough that the whole space exceeds 500 points.
pub fn random_certified_instance(
    rng: &mut ChaCha8Rng,
) -> Result<(WreathInstance, WallsTriple)> {
    let n = rng.gen_range(7..=9);
    lamplighter_over_cycle(n)
}

/// Lamplighter instance over the `n`-cycle: two-point fibre with its one
/// wall, identity position map, cycle walls on both remaining factors.
pub fn lamplighter_over_cycle(n: usize) -> Result<(WreathInstance, WallsTriple)> {
    let x = path_space(2);
    let p = DenseMap::new((0..n).collect(), n, qzero())?;
    let inst = WreathInstance::new(x, 0, cycle_space(n), cycle_space(n), p)?;
    let triple = WallsTriple::new(path_walls(2)?, cycle_walls(n)?, cycle_walls(n)?);
    Ok((inst, triple))
}

/// The five-cycle lamplighter fixture used across the test suites.
pub fn lamplighter_fixture() -> Result<(WreathInstance, WallsTriple)> {
    lamplighter_over_cycle(5)
}

/// A grid of rational radii `0, step, 2·step, …` with `count` entries.
pub fn radius_grid(step: &Q, count: usize) -> Vec<Q> {
    (0..count).map(|k| step * crate::rational::qi(k as i64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricMode;

    #[test]
    fn graphs_are_deterministic_in_the_seed() {
        let a = random_connected_graph_space(&mut rng(7), 6);
        let b = random_connected_graph_space(&mut rng(7), 6);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(a.d(i, j), b.d(i, j));
            }
        }
        assert!(a.validate(MetricMode::Metric).is_valid());
    }

    #[test]
    fn random_walls_are_loadable_and_seeded() {
        let w1 = random_walls(&mut rng(3), 7, 10).unwrap();
        let w2 = random_walls(&mut rng(3), 7, 10).unwrap();
        assert_eq!(w1.halfspaces().len(), w2.halfspaces().len());
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(w1.wall_metric(i, j), w2.wall_metric(i, j));
            }
        }
    }

    #[test]
    fn random_instances_are_dense_by_construction() {
        for seed in 0..5 {
            let inst = random_instance(&mut rng(seed)).unwrap();
            let report = check_dense(&inst.p, &inst.z).unwrap();
            assert!(report.dense);
        }
    }

    #[test]
    fn fixture_matches_direct_construction() {
        let (inst, triple) = lamplighter_fixture().unwrap();
        assert_eq!(inst.x.n(), 2);
        assert_eq!(inst.y.n(), 5);
        assert_eq!(inst.z.n(), 5);
        assert_eq!(triple.mu.halfspaces().len(), 5);
    }
}
