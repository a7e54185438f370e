use std::collections::VecDeque;

/// Per-user concurrency cap with a FIFO overflow queue.
#[derive(Clone, Debug)]
pub struct Admission<T> {
    pub cap: usize,
    pub queue_cap: usize,
    active: usize,
    queue: VecDeque<T>,
}

#[derive(Debug, PartialEq, Eq)]
pub enum Admit<T> {
    Admitted(T),
    Queued,
    Rejected(T),
}

impl<T> Admission<T> {
    pub fn new(cap: usize, queue_cap: usize) -> Self {
        Self {
            cap,
            queue_cap,
            active: 0,
            queue: VecDeque::new(),
        }
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn queued(&self) -> usize {
        self.queue.len()
    }

    pub fn offer(&mut self, item: T) -> Admit<T> {
        if self.active < self.cap && self.queue.is_empty() {
            self.active += 1;
            Admit::Admitted(item)
        } else if self.queue.len() < self.queue_cap {
            self.queue.push_back(item);
            Admit::Queued
        } else {
            Admit::Rejected(item)
        }
    }

    /// One admitted item finished; returns the next queued item, now admitted.
    pub fn release(&mut self) -> Option<T> {
        assert!(self.active > 0, "release without admission");
        self.active -= 1;
        let next = self.queue.pop_front()?;
        self.active += 1;
        Some(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thousand_admitted_then_queue() {
        let mut a = Admission::new(1000, 10);
        for i in 0..1000 {
            assert_eq!(a.offer(i), Admit::Admitted(i));
        }
        assert_eq!(a.offer(1000), Admit::Queued);
        assert_eq!(a.active(), 1000);
        assert_eq!(a.release(), Some(1000));
        assert_eq!(a.active(), 1000);
        assert_eq!(a.release(), None);
        assert_eq!(a.active(), 999);
    }

    #[test]
    fn overflow_rejected() {
        let mut a = Admission::new(1, 1);
        assert_eq!(a.offer('a'), Admit::Admitted('a'));
        assert_eq!(a.offer('b'), Admit::Queued);
        assert_eq!(a.offer('c'), Admit::Rejected('c'));
    }
}
