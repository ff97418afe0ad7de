/// Binary tree of partial sums over a power-of-two number of leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    leaves: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    /// Holds at least `capacity` leaves, rounded up to a power of two.
    pub fn new(capacity: usize) -> Self {
        let leaves = capacity.max(1).next_power_of_two();
        Self {
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn capacity(&self) -> usize {
        self.leaves
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, leaf: usize) -> f64 {
        self.nodes[self.leaves + leaf]
    }

    pub fn leaves(&self) -> &[f64] {
        &self.nodes[self.leaves..]
    }

    /// Sets a leaf and repairs the sums on its path to the root.
    pub fn set(&mut self, leaf: usize, value: f64) {
        assert!(leaf < self.leaves, "leaf {leaf} out of range");
        assert!(value >= 0.0 && value.is_finite(), "priority {value} must be finite and non-negative");
        let mut i = self.leaves + leaf;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Leaf whose cumulative interval contains `mass`, skipping empty leaves.
    pub fn find(&self, mass: f64) -> usize {
        let mut m = mass.clamp(0.0, self.total());
        let mut i = 1;
        while i < self.leaves {
            let left = 2 * i;
            if m < self.nodes[left] || self.nodes[left + 1] <= 0.0 {
                i = left;
            } else {
                m -= self.nodes[left];
                i = left + 1;
            }
        }
        // rounding can land on a zero leaf at an interval boundary
        let mut leaf = i - self.leaves;
        while self.get(leaf) <= 0.0 && leaf > 0 {
            leaf -= 1;
        }
        leaf
    }

    /// Largest deviation between an internal node and the sum of its children.
    pub fn max_inconsistency(&self) -> f64 {
        (1..self.leaves)
            .map(|i| (self.nodes[i] - self.nodes[2 * i] - self.nodes[2 * i + 1]).abs())
            .fold(0.0, f64::max)
    }
}
