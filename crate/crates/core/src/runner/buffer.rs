use std::collections::VecDeque;

use rand::Rng;

/// Bounded FIFO replay buffer; the oldest item is evicted on overflow.
#[derive(Clone, Debug)]
pub struct ReplayBuffer<T> {
    items: VecDeque<T>,
    capacity: usize,
    pushed: u64,
    evicted: u64,
    sampled: u64,
}

impl<T: Clone> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
            capacity,
            pushed: 0,
            evicted: 0,
            sampled: 0,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
            self.evicted += 1;
        }
        self.items.push_back(item);
        self.pushed += 1;
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = T>) {
        for x in items {
            self.push(x);
        }
    }

    /// Removes and returns the oldest item.
    pub fn pop(&mut self) -> Option<T> {
        let x = self.items.pop_front()?;
        self.evicted += 1;
        Some(x)
    }

    /// `size` items drawn uniformly with replacement; empty when the buffer is.
    pub fn sample_batch<R: Rng + ?Sized>(&mut self, size: usize, rng: &mut R) -> Vec<T> {
        if self.items.is_empty() {
            return Vec::new();
        }
        self.sampled += size as u64;
        (0..size)
            .map(|_| self.items[rng.random_range(0..self.items.len())].clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    /// Items that left the buffer, by eviction or [`Self::pop`].
    pub fn evicted(&self) -> u64 {
        self.evicted
    }

    pub fn sampled(&self) -> u64 {
        self.sampled
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }
}
