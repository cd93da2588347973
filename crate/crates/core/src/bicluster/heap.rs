/// Binary min-heap over items `0..capacity` with decrease-key.
///
/// `pos[item]` is the item's slot in `heap`, or `NONE` when absent.
#[derive(Clone, Debug)]
pub struct IndexedMinHeap<K> {
    heap: Vec<usize>,
    pos: Vec<usize>,
    keys: Vec<Option<K>>,
}

const NONE: usize = usize::MAX;

impl<K: Ord + Copy> IndexedMinHeap<K> {
    pub fn with_capacity(capacity: usize) -> Self {
        IndexedMinHeap {
            heap: Vec::with_capacity(capacity),
            pos: vec![NONE; capacity],
            keys: vec![None; capacity],
        }
    }

    /// Builds a heap holding every item `0..keys.len()` in O(n).
    pub fn from_keys(keys: Vec<K>) -> Self {
        let n = keys.len();
        let mut h = IndexedMinHeap {
            heap: (0..n).collect(),
            pos: (0..n).collect(),
            keys: keys.into_iter().map(Some).collect(),
        };
        for slot in (0..n / 2).rev() {
            h.sift_down(slot);
        }
        h
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, item: usize) -> bool {
        self.pos.get(item).is_some_and(|&p| p != NONE)
    }

    pub fn key(&self, item: usize) -> Option<K> {
        if self.contains(item) {
            self.keys[item]
        } else {
            None
        }
    }

    pub fn push(&mut self, item: usize, key: K) {
        assert!(!self.contains(item), "item {item} already queued");
        self.keys[item] = Some(key);
        self.pos[item] = self.heap.len();
        self.heap.push(item);
        self.sift_up(self.heap.len() - 1);
    }

    pub fn peek(&self) -> Option<(usize, K)> {
        self.heap.first().map(|&i| (i, self.keys[i].unwrap()))
    }

    pub fn pop(&mut self) -> Option<(usize, K)> {
        let top = *self.heap.first()?;
        let last = self.heap.len() - 1;
        self.swap(0, last);
        self.heap.pop();
        self.pos[top] = NONE;
        if !self.heap.is_empty() {
            self.sift_down(0);
        }
        Some((top, self.keys[top].take().unwrap()))
    }

    /// Lowers the key of a queued item. Panics if `key` is larger.
    pub fn decrease_key(&mut self, item: usize, key: K) {
        let slot = self.pos[item];
        assert!(slot != NONE, "item {item} not queued");
        assert!(key <= self.keys[item].unwrap(), "decrease_key would raise the key");
        self.keys[item] = Some(key);
        self.sift_up(slot);
    }

    fn key_at(&self, slot: usize) -> K {
        self.keys[self.heap[slot]].unwrap()
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a]] = a;
        self.pos[self.heap[b]] = b;
    }

    fn sift_up(&mut self, mut slot: usize) {
        while slot > 0 {
            let parent = (slot - 1) / 2;
            if self.key_at(slot) < self.key_at(parent) {
                self.swap(slot, parent);
                slot = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut slot: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * slot + 1, 2 * slot + 2);
            let mut min = slot;
            if l < n && self.key_at(l) < self.key_at(min) {
                min = l;
            }
            if r < n && self.key_at(r) < self.key_at(min) {
                min = r;
            }
            if min == slot {
                break;
            }
            self.swap(slot, min);
            slot = min;
        }
    }
}
