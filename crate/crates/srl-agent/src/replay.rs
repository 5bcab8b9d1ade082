use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ExperienceTuple;

/// Ring buffer of transitions with seeded uniform sampling. Tuples from
/// both controllers share the one buffer.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    data: Vec<ExperienceTuple>,
    capacity: usize,
    write: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        assert!(capacity > 0);
        Self {
            data: Vec::with_capacity(capacity.min(1 << 20)),
            capacity,
            write: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Appends a tuple, evicting the oldest once at capacity.
    pub fn store(&mut self, t: ExperienceTuple) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.write] = t;
        }
        self.write = (self.write + 1) % self.capacity;
    }

    pub fn get(&self, idx: usize) -> &ExperienceTuple {
        &self.data[idx]
    }

    /// Uniform indices over the stored tuples.
    pub fn sample_indices(&mut self, count: usize) -> Vec<usize> {
        let n = self.data.len();
        (0..count).map(|_| self.rng.random_range(0..n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{ActionSource, Observation};
    use nalgebra::SVector;
    use srl_core::TrackingError;

    fn tuple(step: usize, source: ActionSource) -> ExperienceTuple {
        let o = Observation {
            d_wp: step as f64,
            psi_wp: 0.0,
            e: TrackingError::zeroed(),
        };
        ExperienceTuple {
            o,
            a: SVector::zeros(),
            o_next: o,
            r: 0.0,
            source,
            step,
        }
    }

    #[test]
    fn capacity_evicts_oldest() {
        let mut buf = ReplayBuffer::new(2, 0);
        buf.store(tuple(0, ActionSource::Student));
        buf.store(tuple(1, ActionSource::Student));
        buf.store(tuple(2, ActionSource::Student));
        assert_eq!(buf.len(), 2);
        let steps: Vec<usize> = (0..2).map(|i| buf.get(i).step).collect();
        assert!(steps.contains(&1) && steps.contains(&2));
    }

    #[test]
    fn teacher_tuples_share_the_buffer() {
        let mut buf = ReplayBuffer::new(32, 0);
        for k in 0..10 {
            buf.store(tuple(k, ActionSource::Teacher));
        }
        assert_eq!(buf.len(), 10);
        assert!((0..10).all(|i| buf.get(i).source == ActionSource::Teacher));
    }

    #[test]
    fn sampling_is_uniform_by_chi_square() {
        let mut buf = ReplayBuffer::new(10, 7);
        for k in 0..10 {
            buf.store(tuple(k, ActionSource::Student));
        }
        let draws = 100_000;
        let mut counts = [0usize; 10];
        for idx in buf.sample_indices(draws) {
            counts[idx] += 1;
        }
        let expected = draws as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        // 9 degrees of freedom; 3-sigma-ish upper bound.
        assert!(chi2 < 33.0, "chi-square {chi2} too large for uniformity");
    }

    #[test]
    fn sampling_is_deterministic_for_fixed_seed() {
        let mut a = ReplayBuffer::new(16, 9);
        let mut b = ReplayBuffer::new(16, 9);
        for k in 0..16 {
            a.store(tuple(k, ActionSource::Student));
            b.store(tuple(k, ActionSource::Student));
        }
        assert_eq!(a.sample_indices(64), b.sample_indices(64));
    }
}
