use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

/// Fixed-capacity FIFO of experiences.
#[derive(Debug, Clone)]
pub struct ReplayMemory<E> {
    capacity: usize,
    buf: VecDeque<E>,
}

impl<E> ReplayMemory<E> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self { capacity, buf: VecDeque::with_capacity(capacity) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    /// Appends, evicting the oldest entry when full.
    pub fn push(&mut self, e: E) {
        if self.is_full() {
            self.buf.pop_front();
        }
        self.buf.push_back(e);
    }

    pub fn iter(&self) -> impl Iterator<Item = &E> {
        self.buf.iter()
    }

    /// Uniform sample without replacement; `None` until `batch` entries exist.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Option<Vec<&E>> {
        if batch == 0 || batch > self.buf.len() {
            return None;
        }
        Some(index::sample(rng, self.buf.len(), batch).into_iter().map(|i| &self.buf[i]).collect())
    }
}
