use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Ordering class for events scheduled at the same instant. Lower runs
/// first; within a class, insertion order wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Priority {
    /// Neighbor-table refresh, so tables are current before decisions.
    Beacon = 0,
    Control = 1,
    Data = 2,
}

struct Entry<E> {
    time: f64,
    class: Priority,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Time-ordered event queue; ties go by priority class, then FIFO.
pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    seq: u64,
    now: f64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0.0,
        }
    }
}

impl<E> EventQueue<E> {
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn schedule(&mut self, time: f64, class: Priority, event: E) {
        debug_assert!(time >= self.now, "scheduling into the past");
        self.heap.push(Entry {
            time,
            class,
            seq: self.seq,
            event,
        });
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(f64, E)> {
        let e = self.heap.pop()?;
        self.now = e.time;
        Some((e.time, e.event))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_then_class_then_fifo() {
        let mut q = EventQueue::default();
        q.schedule(2.0, Priority::Data, "late");
        q.schedule(1.0, Priority::Data, "d1");
        q.schedule(1.0, Priority::Data, "d2");
        q.schedule(1.0, Priority::Beacon, "b");
        q.schedule(0.5, Priority::Control, "c");
        let order: Vec<_> = std::iter::from_fn(|| q.pop().map(|e| e.1)).collect();
        assert_eq!(order, vec!["c", "b", "d1", "d2", "late"]);
        assert_eq!(q.now(), 2.0);
    }
}
