use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::envmodel::Transition;
use crate::searchctl::StatePool;
use crate::{Error, Result};

/// Bounded FIFO of real transitions stored in a ring.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { items: Vec::new(), capacity, next: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Stores `t`, overwriting the oldest entry when full. Returns its slot.
    pub fn push(&mut self, t: Transition) -> usize {
        let slot = self.next;
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[slot] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        slot
    }

    pub fn get(&self, slot: usize) -> &Transition {
        &self.items[slot]
    }

    pub fn sample_index(&self, rng: &mut dyn RngCore) -> Result<usize> {
        if self.items.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok(rng.random_range(0..self.items.len()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }
}

impl StatePool for ReplayBuffer {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn state(&self, index: usize) -> &[f64] {
        &self.items[index].s
    }
}

/// Binary tree over leaf priorities where each internal node holds the sum
/// of its children; a parallel tree of maxima gives the current largest
/// priority.
#[derive(Debug, Clone)]
pub struct SumTree {
    leaves: usize,
    sums: Vec<f64>,
    maxima: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self { leaves, sums: vec![0.0; 2 * leaves], maxima: vec![0.0; 2 * leaves] }
    }

    pub fn capacity(&self) -> usize {
        self.leaves
    }

    pub fn total(&self) -> f64 {
        self.sums[1]
    }

    pub fn max_priority(&self) -> f64 {
        self.maxima[1]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.sums[self.leaves + index]
    }

    /// Sets leaf `index` and recomputes every ancestor from its children.
    pub fn update(&mut self, index: usize, priority: f64) {
        assert!(priority >= 0.0 && priority.is_finite(), "priorities must be finite and non-negative");
        let mut node = self.leaves + index;
        self.sums[node] = priority;
        self.maxima[node] = priority;
        while node > 1 {
            node /= 2;
            self.sums[node] = self.sums[2 * node] + self.sums[2 * node + 1];
            self.maxima[node] = self.maxima[2 * node].max(self.maxima[2 * node + 1]);
        }
    }

    /// Leaf whose cumulative-sum interval contains `u`, for `u` in `[0, total)`.
    /// Never returns a zero-priority leaf while the total is positive.
    pub fn find(&self, u: f64) -> usize {
        let mut u = u;
        let mut node = 1;
        while node < self.leaves {
            let left = 2 * node;
            if u < self.sums[left] || self.sums[left + 1] == 0.0 {
                node = left;
            } else {
                u -= self.sums[left];
                node = left + 1;
            }
        }
        node - self.leaves
    }

    /// Every internal node minus the sum of its children; zero by construction.
    pub fn max_internal_error(&self) -> f64 {
        (1..self.leaves)
            .map(|n| (self.sums[n] - (self.sums[2 * n] + self.sums[2 * n + 1])).abs())
            .fold(0.0, f64::max)
    }
}

/// Half the indices proportional to priority, the rest uniform over the
/// `len` stored items.
pub fn prioritized_sample(tree: &SumTree, len: usize, k: usize, rng: &mut dyn RngCore) -> Result<Vec<usize>> {
    if len == 0 || !(tree.total() > 0.0) {
        return Err(Error::EmptyBuffer);
    }
    let proportional = k / 2;
    let mut out = Vec::with_capacity(k);
    for _ in 0..proportional {
        let u = rng.random::<f64>() * tree.total();
        out.push(tree.find(u).min(len - 1));
    }
    for _ in proportional..k {
        out.push(rng.random_range(0..len));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn tr(x: f64) -> Transition {
        Transition { s: vec![x], a: 0, s_next: vec![x], r: -1.0, terminal: false }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(3);
        for k in 0..5 {
            b.push(tr(k as f64));
        }
        assert_eq!(b.len(), 3);
        let mut xs: Vec<f64> = b.iter().map(|t| t.s[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn prefix_descent() {
        let mut t = SumTree::new(3);
        for (i, p) in [0.5, 1.5, 2.0].iter().enumerate() {
            t.update(i, *p);
        }
        assert_eq!(t.find(2.1), 2);
        assert_eq!(t.find(0.49), 0);
        assert_eq!(t.find(0.5), 1);
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.max_priority(), 2.0);
    }

    #[test]
    fn proportional_frequencies() {
        let mut t = SumTree::new(2);
        t.update(0, 1.0);
        t.update(1, 3.0);
        let mut rng = stream(1, Stream::Sampling);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| t.find(rng.random::<f64>() * t.total()) == 1).count();
        let f = hits as f64 / n as f64;
        assert!((f - 0.75).abs() < 0.005, "{f}");
    }

    #[test]
    fn equal_priorities_sample_uniformly() {
        let k = 8;
        let mut t = SumTree::new(k);
        (0..k).for_each(|i| t.update(i, 2.5));
        let mut rng = stream(2, Stream::Sampling);
        let mut counts = vec![0usize; k];
        let n = 80_000;
        for _ in 0..n {
            counts[t.find(rng.random::<f64>() * t.total())] += 1;
        }
        let expected = n as f64 / k as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99th percentile of chi-square with 7 degrees of freedom.
        assert!(chi2 < 18.475, "{chi2}");
    }

    #[test]
    fn root_tracks_flat_oracle() {
        let n = 1000;
        let mut t = SumTree::new(n);
        let mut flat = vec![0.0; n];
        let mut rng = stream(3, Stream::Sampling);
        for _ in 0..100_000 {
            if rng.random::<f64>() < 0.7 {
                let i = rng.random_range(0..n);
                let p = rng.random::<f64>() * 10.0;
                t.update(i, p);
                flat[i] = p;
            } else if t.total() > 0.0 {
                let i = t.find(rng.random::<f64>() * t.total());
                assert!(flat[i] > 0.0);
            }
        }
        let oracle: f64 = flat.iter().sum();
        assert!((t.total() - oracle).abs() < 1e-9 * oracle.max(1.0));
        assert_eq!(t.max_internal_error(), 0.0);
        assert_eq!(t.max_priority(), flat.iter().cloned().fold(0.0, f64::max));
    }

    #[test]
    fn mixed_sample_composition() {
        let mut t = SumTree::new(4);
        t.update(3, 1.0);
        let idx = prioritized_sample(&t, 4, 32, &mut stream(4, Stream::Sampling)).unwrap();
        assert_eq!(idx.len(), 32);
        assert!(idx[..16].iter().all(|&i| i == 3));
        assert!(prioritized_sample(&SumTree::new(4), 0, 32, &mut stream(4, Stream::Sampling)).is_err());
    }
}
