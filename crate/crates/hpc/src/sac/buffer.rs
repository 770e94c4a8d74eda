use rand::RngCore;

/// Fixed-capacity ring buffer with uniform without-replacement batch
/// sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    capacity: usize,
    data: Vec<T>,
    next: usize,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            data: Vec::new(),
            next: 0,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.data.len() < self.capacity {
            self.data.push(item);
        } else {
            self.data[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, idx: usize) -> &T {
        &self.data[idx]
    }

    /// Uniform sample of distinct indices.
    pub fn sample_indices(&self, batch: usize, rng: &mut dyn RngCore) -> Vec<usize> {
        let n = self.data.len();
        let batch = batch.min(n);
        rand::seq::index::sample(rng, n, batch).into_vec()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    use super::*;

    #[test]
    fn ring_overwrites_the_oldest_entries_in_order() {
        let mut buf = ReplayBuffer::new(3);
        for v in 1..=5 {
            buf.push(v);
        }
        assert_eq!(buf.len(), 3);
        // Slots 0 and 1 were recycled for items 4 and 5.
        assert_eq!((*buf.get(0), *buf.get(1), *buf.get(2)), (4, 5, 3));
    }

    #[test]
    fn batches_are_distinct_and_in_range() {
        let mut buf = ReplayBuffer::new(100);
        for v in 0..40 {
            buf.push(v);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let idx = buf.sample_indices(40, &mut rng);
        assert_eq!(idx.len(), 40);
        let mut seen = idx.clone();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 40);
        assert!(idx.iter().all(|&i| i < 40));
        // Requesting more than stored clips to the population size.
        assert_eq!(buf.sample_indices(1000, &mut rng).len(), 40);
    }

    #[test]
    fn sampling_is_uniform_over_the_population() {
        let mut buf = ReplayBuffer::new(10);
        for v in 0..10 {
            buf.push(v);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let draws = 100_000usize;
        let mut counts = [0usize; 10];
        for _ in 0..draws {
            counts[buf.sample_indices(1, &mut rng)[0]] += 1;
        }
        let expect = draws as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // Chi-squared critical value, 9 degrees of freedom, p = 0.001.
        assert!(chi2 < 27.877, "chi2 {chi2}");
    }

    #[test]
    #[should_panic(expected = "capacity must be positive")]
    fn zero_capacity_is_rejected() {
        let _ = ReplayBuffer::<i32>::new(0);
    }
}
