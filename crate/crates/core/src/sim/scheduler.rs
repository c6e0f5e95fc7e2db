use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Discrete-event queue ordered by time, then by insertion order, so events
/// scheduled for the same millisecond run first-in first-out.
#[derive(Debug)]
pub struct Scheduler<E> {
    heap: BinaryHeap<Reverse<Slot<E>>>,
    next_seq: u64,
    now_ms: u64,
}

#[derive(Debug)]
struct Slot<E> {
    time_ms: u64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Slot<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.time_ms, self.seq) == (other.time_ms, other.seq)
    }
}

impl<E> Eq for Slot<E> {}

impl<E> PartialOrd for Slot<E> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Slot<E> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time_ms, self.seq).cmp(&(other.time_ms, other.seq))
    }
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Scheduler {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now_ms: 0,
        }
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now_ms(&self) -> u64 {
        self.now_ms
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Events in the past are clamped to the current time.
    pub fn schedule(&mut self, time_ms: u64, event: E) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Slot {
            time_ms: time_ms.max(self.now_ms),
            seq,
            event,
        }));
    }

    pub fn pop(&mut self) -> Option<(u64, E)> {
        let Reverse(slot) = self.heap.pop()?;
        self.now_ms = slot.time_ms;
        Some((slot.time_ms, slot.event))
    }

    pub fn peek_time(&self) -> Option<u64> {
        self.heap.peek().map(|Reverse(s)| s.time_ms)
    }
}
