//! Fenwick tree over non-negative integer weights with weighted sampling.

#[derive(Debug, Clone, Default)]
pub struct Fenwick {
    tree: Vec<i64>,
    total: i64,
}

impl Fenwick {
    pub fn new(n: usize) -> Self {
        Self {
            tree: vec![0; n + 1],
            total: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total(&self) -> i64 {
        self.total
    }

    pub fn add(&mut self, i: usize, delta: i64) {
        self.total += delta;
        let mut k = i + 1;
        while k < self.tree.len() {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    pub fn prefix(&self, i: usize) -> i64 {
        let mut k = i;
        let mut s = 0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    /// Index `i` with `prefix(i) <= r < prefix(i + 1)`, for `0 <= r < total`.
    pub fn find(&self, mut r: i64) -> usize {
        debug_assert!(0 <= r && r < self.total);
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= r {
                pos = next;
                r -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
