//! Fixed measurement latency.

use std::collections::VecDeque;

/// Delay in whole sensor periods: nearest integer, halves rounded up.
pub fn delay_steps(delay_s: f64, period_s: f64) -> usize {
    if !(delay_s > 0.0) || !(period_s > 0.0) {
        return 0;
    }
    // Guard against 2.4999999 from binary fractions of exact halves.
    let ratio = delay_s / period_s;
    (ratio + 0.5 + 1e-9).floor() as usize
}

/// Ring buffer returning the value pushed `delay` pushes ago (or the oldest
/// value while the buffer is filling).
#[derive(Debug, Clone)]
pub struct DelayBuffer<T> {
    delay: usize,
    items: VecDeque<T>,
}

impl<T: Clone> DelayBuffer<T> {
    pub fn new(delay: usize) -> Self {
        Self { delay, items: VecDeque::with_capacity(delay + 1) }
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Push the newest value and return the delayed one.
    pub fn push(&mut self, value: T) -> T {
        self.items.push_back(value);
        while self.items.len() > self.delay + 1 {
            self.items.pop_front();
        }
        self.items.front().cloned().expect("buffer holds at least the pushed value")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(delay_steps(0.1, 0.04), 3);
        assert_eq!(delay_steps(0.1, 0.1), 1);
        assert_eq!(delay_steps(0.1, 0.05), 2);
        assert_eq!(delay_steps(0.0, 0.04), 0);
        assert_eq!(delay_steps(0.13, 0.1), 1);
        assert_eq!(delay_steps(0.15, 0.1), 2);
    }

    #[test]
    fn buffer_semantics() {
        let mut b = DelayBuffer::new(3);
        let out: Vec<i32> = (0..8).map(|k| b.push(k)).collect();
        assert_eq!(out, vec![0, 0, 0, 0, 1, 2, 3, 4]);
        let mut z = DelayBuffer::new(0);
        assert_eq!(z.push(7), 7);
        assert_eq!(z.push(8), 8);
    }
}
