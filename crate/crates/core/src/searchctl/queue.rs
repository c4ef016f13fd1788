use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::StateVec;

/// Read access to a collection of states, for drawing hill-climbing starts.
pub trait StatePool {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn state(&self, index: usize) -> &[f64];
}

/// Bounded FIFO of hill-climbed states; the oldest entry is evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchControlQueue {
    items: VecDeque<StateVec>,
    capacity: usize,
}

impl SearchControlQueue {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "queue capacity must be positive");
        Self { items: VecDeque::new(), capacity }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn push(&mut self, s: StateVec) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(s);
    }

    pub fn iter(&self) -> impl Iterator<Item = &StateVec> {
        self.items.iter()
    }

    pub fn snapshot(&self) -> Vec<StateVec> {
        self.items.iter().cloned().collect()
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }
}

impl StatePool for SearchControlQueue {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn state(&self, index: usize) -> &[f64] {
        &self.items[index]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn evicts_oldest_first() {
        let mut q = SearchControlQueue::new(2);
        q.push(vec![1.0]);
        q.push(vec![2.0]);
        q.push(vec![3.0]);
        assert_eq!(q.snapshot(), vec![vec![2.0], vec![3.0]]);
    }

    proptest! {
        #[test]
        fn size_never_exceeds_capacity(cap in 1usize..20, pushes in 0usize..100) {
            let mut q = SearchControlQueue::new(cap);
            for k in 0..pushes {
                q.push(vec![k as f64]);
                prop_assert!(q.len() <= cap);
            }
            prop_assert_eq!(q.len(), pushes.min(cap));
            if pushes > 0 {
                prop_assert_eq!(q.state(q.len() - 1)[0], (pushes - 1) as f64);
                prop_assert_eq!(q.state(0)[0], pushes.saturating_sub(cap) as f64);
            }
        }
    }
}
