use crate::distance::Slot;

/// Marks an empty neighbor slot.
pub const SENTINEL: Slot = Slot::MAX;

/// Dense `capacity x degree` neighbor table. Every node owns exactly
/// `degree` slots; unused slots hold [`SENTINEL`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    degree: usize,
    capacity: usize,
    data: Vec<Slot>,
}

impl AdjacencyMatrix {
    pub fn new(capacity: usize, degree: usize) -> Self {
        Self {
            degree,
            capacity,
            data: vec![SENTINEL; capacity * degree],
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    #[inline]
    pub fn row(&self, node: usize) -> &[Slot] {
        &self.data[node * self.degree..(node + 1) * self.degree]
    }

    #[inline]
    pub fn row_mut(&mut self, node: usize) -> &mut [Slot] {
        &mut self.data[node * self.degree..(node + 1) * self.degree]
    }

    /// Live (non-sentinel) neighbors of `node`.
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = Slot> + '_ {
        self.row(node).iter().copied().filter(|&v| v != SENTINEL)
    }

    /// Overwrites a row; entries past `neighbors.len()` become sentinel.
    pub fn set_row(&mut self, node: usize, neighbors: &[Slot]) {
        assert!(neighbors.len() <= self.degree, "row wider than the degree budget");
        let row = self.row_mut(node);
        row[..neighbors.len()].copy_from_slice(neighbors);
        row[neighbors.len()..].fill(SENTINEL);
    }

    /// Rows `[0, count)` as one contiguous slice.
    pub fn rows(&self, count: usize) -> &[Slot] {
        &self.data[..count * self.degree]
    }

    /// Mutable view of rows `[start, end)` for disjoint parallel writers.
    pub fn rows_mut(&mut self, count: usize) -> &mut [Slot] {
        &mut self.data[..count * self.degree]
    }

    /// Checks the structural invariants over rows `[0, count)`: targets are
    /// live, there are no self-loops and no duplicates within a row.
    pub fn check(&self, count: usize) -> Result<(), String> {
        for u in 0..count {
            let live: Vec<Slot> = self.neighbors(u).collect();
            for (i, &v) in live.iter().enumerate() {
                if v as usize >= count {
                    return Err(format!("row {u} points at unpublished slot {v}"));
                }
                if v as usize == u {
                    return Err(format!("row {u} has a self-loop"));
                }
                if live[..i].contains(&v) {
                    return Err(format!("row {u} repeats neighbor {v}"));
                }
            }
        }
        Ok(())
    }
}
