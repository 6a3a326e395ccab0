use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linop::Space;

/// Draws from the observation law of a score operator: the codomain's
/// probability weights, sampled by inverse CDF over its nodes.
#[derive(Debug, Clone)]
pub struct Sampler {
    space: Space,
    cdf: Vec<f64>,
}

/// `n` draws: node indices and their coordinates, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub dim: usize,
    pub indices: Vec<usize>,
    pub points: Vec<f64>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }
}

impl Sampler {
    pub fn new(space: &Space) -> Result<Self> {
        if space.is_empty() {
            return Err(Error::invalid("cannot sample from an empty space"));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = space
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Sampler { space: space.clone(), cdf })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn draw_index(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|c| *c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Samples {
        let dim = self.space.dim();
        let indices: Vec<usize> = (0..n).map(|_| self.draw_index(rng)).collect();
        let mut points = Vec::with_capacity(n * dim);
        for &i in &indices {
            points.extend_from_slice(self.space.node(i));
        }
        Samples { dim, indices, points }
    }
}

/// Generator for replication `rep` of an experiment seeded with `seed`:
/// ChaCha8 keyed by `seed`, on stream `rep`. Streams never overlap, so the
/// result does not depend on which thread runs which replication.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// `n` i.i.d. draws from the observation law on `space`.
pub fn simulate(space: &Space, n: usize, seed: u64) -> Result<Samples> {
    let sampler = Sampler::new(space)?;
    Ok(sampler.sample(n, &mut replication_rng(seed, 0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::WeightedSpace;

    #[test]
    fn empty_and_deterministic() {
        let s = WeightedSpace::probability("p", 1, vec![0.0, 1.0, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        assert!(simulate(&s, 0, 1).unwrap().is_empty());
        assert_eq!(simulate(&s, 100, 9).unwrap(), simulate(&s, 100, 9).unwrap());
        assert_ne!(simulate(&s, 100, 9).unwrap(), simulate(&s, 100, 10).unwrap());
    }

    #[test]
    fn frequencies_match_weights() {
        let s = WeightedSpace::probability("p", 1, vec![0.0, 1.0, 2.0], vec![0.2, 0.5, 0.3]).unwrap();
        let x = simulate(&s, 20_000, 3).unwrap();
        let ones = x.indices.iter().filter(|&&i| i == 1).count() as f64 / 20_000.0;
        assert!((ones - 0.5).abs() < 4.0 / (20_000f64).sqrt());
    }
}
