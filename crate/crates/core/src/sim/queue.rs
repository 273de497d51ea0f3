use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{SimError, SimTime};

/// Opaque handle returned by [`Engine::schedule`]. It is the insertion
/// sequence number, which is also the tie breaker between equal times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventHandle(pub u64);

struct Entry<E> {
    at: SimTime,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

/// Pending events ordered by `(time, insertion sequence)`.
pub struct EventQueue<E> {
    heap: BinaryHeap<Reverse<Entry<E>>>,
    next_seq: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
        }
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, at: SimTime, event: E) -> EventHandle {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Entry { at, seq, event }));
        EventHandle(seq)
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(e)| e.at)
    }

    pub fn pop(&mut self) -> Option<(SimTime, EventHandle, E)> {
        self.heap
            .pop()
            .map(|Reverse(e)| (e.at, EventHandle(e.seq), e.event))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub events_processed: u64,
    pub final_time: SimTime,
}

/// Single-threaded event loop. Handlers receive the engine back so they can
/// schedule follow-up events or halt the run.
pub struct Engine<E> {
    now: SimTime,
    queue: EventQueue<E>,
    processed: u64,
    halted: bool,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self {
            now: 0,
            queue: EventQueue::new(),
            processed: 0,
            halted: false,
        }
    }
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn schedule(&mut self, at: SimTime, event: E) -> Result<EventHandle, SimError> {
        if at < self.now {
            return Err(SimError::ScheduledInPast { at, now: self.now });
        }
        Ok(self.queue.push(at, event))
    }

    /// Stops the current `run_until` after the handler returns. The clock
    /// stays at the time of the event being handled.
    pub fn halt(&mut self) {
        self.halted = true;
    }

    /// Processes every event with time `<= end`. If the queue drains (and
    /// nothing halted the run) the clock advances to `end`.
    pub fn run_until<F>(&mut self, end: SimTime, mut handler: F) -> Result<RunSummary, SimError>
    where
        F: FnMut(&mut Self, SimTime, E) -> Result<(), SimError>,
    {
        let start_count = self.processed;
        self.halted = false;
        while let Some(at) = self.queue.peek_time() {
            if at > end {
                break;
            }
            let (at, _, event) = self.queue.pop().expect("peeked");
            self.now = at;
            self.processed += 1;
            handler(self, at, event)?;
            if self.halted {
                return Ok(RunSummary {
                    events_processed: self.processed - start_count,
                    final_time: self.now,
                });
            }
        }
        self.now = self.now.max(end);
        Ok(RunSummary {
            events_processed: self.processed - start_count,
            final_time: self.now,
        })
    }
}
