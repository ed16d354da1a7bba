pub const GRID_SIZE: usize = 20;

/// Visit counts over a `GRID_SIZE × GRID_SIZE` partition of the unit square.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisitGrid {
    counts: Vec<u64>,
}

impl Default for VisitGrid {
    fn default() -> Self {
        VisitGrid { counts: vec![0; GRID_SIZE * GRID_SIZE] }
    }
}

impl VisitGrid {
    pub fn new() -> Self {
        Self::default()
    }

    fn cell(v: f64) -> usize {
        ((v.clamp(0.0, 1.0) * GRID_SIZE as f64) as usize).min(GRID_SIZE - 1)
    }

    pub fn update(&mut self, position: [f64; 2]) {
        let (i, j) = (Self::cell(position[0]), Self::cell(position[1]));
        self.counts[j * GRID_SIZE + i] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn merge(&mut self, other: &VisitGrid) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }
}
