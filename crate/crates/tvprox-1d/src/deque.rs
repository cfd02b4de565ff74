//! Fixed-capacity segment queue used by the classic taut-string solver.

/// One straight piece of a hull, measured between two tube points.
#[derive(Clone, Copy, Debug)]
pub struct Segment {
    /// Horizontal extent in tube positions, at least 1.
    pub x_span: usize,
    /// Total vertical rise over the span.
    pub y_rise: f64,
    /// y_rise / x_span. The hull maintenance compares slopes on every step,
    /// so this is worth precomputing once per segment.
    pub slope: f64,
}

impl Segment {
    pub fn new(x_span: usize, y_rise: f64) -> Self {
        debug_assert!(x_span >= 1, "segments must span at least one position");
        Segment {
            x_span,
            y_rise,
            slope: y_rise / x_span as f64,
        }
    }
}

/// Double-ended queue over one contiguous allocation of fixed capacity.
///
/// Segments enter at the tail, merge at the tail and leave from the head;
/// there is no circular indexing, just the two cursors. `reset_chord` compacts
/// everything back to the start of the array, and that compaction is what
/// keeps a capacity of n sufficient for an entire solver run.
pub struct SegmentDeque {
    buf: Vec<Segment>,
    head: usize,
    tail: usize,
}

impl SegmentDeque {
    pub fn new(capacity: usize) -> Self {
        SegmentDeque {
            buf: Vec::with_capacity(capacity),
            head: 0,
            tail: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.tail - self.head
    }

    pub fn is_empty(&self) -> bool {
        self.head == self.tail
    }

    pub fn front(&self) -> &Segment {
        &self.buf[self.head]
    }

    pub fn back(&self) -> &Segment {
        &self.buf[self.tail - 1]
    }

    /// The segment just before the back one; callers check len() >= 2.
    pub fn penultimate(&self) -> &Segment {
        &self.buf[self.tail - 2]
    }

    pub fn push_back(&mut self, seg: Segment) {
        assert!(
            self.tail < self.buf.capacity(),
            "segment deque overflow: the capacity-n bound was violated"
        );
        if self.tail == self.buf.len() {
            self.buf.push(seg);
        } else {
            self.buf[self.tail] = seg;
        }
        self.tail += 1;
    }

    pub fn pop_front(&mut self) -> Segment {
        let seg = self.buf[self.head];
        self.head += 1;
        seg
    }

    /// Replaces the last two segments by their union.
    pub fn merge_back_pair(&mut self) {
        debug_assert!(self.len() >= 2);
        let last = self.buf[self.tail - 1];
        let prev = self.buf[self.tail - 2];
        self.buf[self.tail - 2] = Segment::new(prev.x_span + last.x_span, prev.y_rise + last.y_rise);
        self.tail -= 1;
    }

    pub fn clear(&mut self) {
        self.head = 0;
        self.tail = 0;
    }

    /// Drops everything and restarts the queue with a single chord segment,
    /// compacted to the start of the array.
    pub fn reset_chord(&mut self, seg: Segment) {
        self.head = 0;
        self.tail = 0;
        self.push_back(seg);
    }

    /// Live segments head to tail, for inspection in tests.
    pub fn segments(&self) -> &[Segment] {
        &self.buf[self.head..self.tail]
    }
}
