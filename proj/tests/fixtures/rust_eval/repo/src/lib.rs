//! Small dense grid of integers.

/// Row-major grid.
pub struct Grid {
    pub width: usize,
    pub height: usize,
    cells: Vec<i64>,
}

impl Grid {
    /// Grid of the given shape filled with zeros.
    pub fn new(width: usize, height: usize) -> Grid {
        Grid { width, height, cells: vec![0; width * height] }
    }

    /// Value at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> i64 {
        self.cells[y * self.width + x]
    }

    /// Stores `v` at column `x`, row `y`.
    pub fn set(&mut self, x: usize, y: usize, v: i64) {
        self.cells[y * self.width + x] = v;
    }

    /// Sum of the values in row `y`.
    pub fn row_sum(&self, y: usize) -> i64 {
        let mut total = 0;
        for x in 0..self.width {
            total += self.get(x, y);
        }
        total
    }

    /// Largest value in the grid, or None when it is empty.
    pub fn max_cell(&self) -> Option<i64> {
        self.cells.iter().copied().max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Grid {
        let mut g = Grid::new(3, 2);
        g.set(0, 0, 1);
        g.set(1, 0, 2);
        g.set(2, 0, 3);
        g.set(0, 1, -4);
        g.set(2, 1, 9);
        g
    }

    #[test]
    fn row_sums() {
        let g = sample();
        assert_eq!(g.row_sum(0), 6);
        assert_eq!(g.row_sum(1), 5);
    }

    #[test]
    fn max_cell_of_grid() {
        assert_eq!(sample().max_cell(), Some(9));
        assert_eq!(Grid::new(0, 0).max_cell(), None);
    }
}
