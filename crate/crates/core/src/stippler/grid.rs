//! Uniform bucket grid for exact nearest-seed queries.

use super::Point;

pub(super) struct SeedGrid<'a> {
    points: &'a [Point],
    cell: f64,
    cols: usize,
    rows: usize,
    /// CSR layout: seeds of cell `c` are `order[start[c]..start[c + 1]]`,
    /// ascending by seed index.
    start: Vec<usize>,
    order: Vec<u32>,
}

impl<'a> SeedGrid<'a> {
    pub(super) fn new(points: &'a [Point], width: f64, height: f64) -> Self {
        let n = points.len().max(1) as f64;
        let cell = ((width * height / n).sqrt() * 1.5).max(1.0);
        let cols = ((width / cell).ceil() as usize).max(1);
        let rows = ((height / cell).ceil() as usize).max(1);
        let cell_of = |p: &Point| -> usize {
            let cx = ((p[0] / cell) as usize).min(cols - 1);
            let cy = ((p[1] / cell) as usize).min(rows - 1);
            cy * cols + cx
        };
        let mut counts = vec![0usize; cols * rows + 1];
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let start = counts.clone();
        let mut fill = counts;
        let mut order = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            order[fill[c]] = i as u32;
            fill[c] += 1;
        }
        Self {
            points,
            cell,
            cols,
            rows,
            start,
            order,
        }
    }

    /// Index of the nearest seed to `q`; ties go to the lowest index.
    pub(super) fn nearest(&self, q: Point) -> usize {
        let cx = ((q[0] / self.cell) as isize).clamp(0, self.cols as isize - 1);
        let cy = ((q[1] / self.cell) as isize).clamp(0, self.rows as isize - 1);
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        let max_ring = self.cols.max(self.rows) as isize;
        for r in 0..=max_ring {
            let (x0, x1, y0, y1) = (cx - r, cx + r, cy - r, cy + r);
            for y in y0.max(0)..=y1.min(self.rows as isize - 1) {
                let on_edge_row = y == y0 || y == y1;
                let mut x = x0.max(0);
                while x <= x1.min(self.cols as isize - 1) {
                    if on_edge_row || x == x0 || x == x1 {
                        let c = y as usize * self.cols + x as usize;
                        for &i in &self.order[self.start[c]..self.start[c + 1]] {
                            let p = self.points[i as usize];
                            let d = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                            if d < best_d || (d == best_d && (i as usize) < best) {
                                best_d = d;
                                best = i as usize;
                            }
                        }
                        x += 1;
                    } else {
                        // interior of the ring was scanned earlier
                        x = x1;
                    }
                }
            }
            if best != usize::MAX {
                // distance from q to the nearest unscanned cell
                let mut gap = f64::INFINITY;
                if x0 > 0 {
                    gap = gap.min(q[0] - x0 as f64 * self.cell);
                }
                if x1 < self.cols as isize - 1 {
                    gap = gap.min((x1 + 1) as f64 * self.cell - q[0]);
                }
                if y0 > 0 {
                    gap = gap.min(q[1] - y0 as f64 * self.cell);
                }
                if y1 < self.rows as isize - 1 {
                    gap = gap.min((y1 + 1) as f64 * self.cell - q[1]);
                }
                if best_d < gap * gap {
                    break;
                }
            }
        }
        best
    }
}
