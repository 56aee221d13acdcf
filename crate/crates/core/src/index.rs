//! Uniform-grid spatial index used for range-limited pair scans and
//! (restricted) nearest-neighbour queries.

use crate::geometry::{sub, Vec3};
use crate::pattern::PointPattern;

/// Ordered pair `(i, j)` with difference `d = x_j - x_i`.
#[derive(Debug, Clone, Copy)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub d: Vec3,
    pub dist: f64,
}

pub struct GridIndex<'a> {
    pattern: &'a PointPattern,
    lo: Vec3,
    cell: f64,
    ncell: [usize; 3],
    start: Vec<usize>,
    items: Vec<usize>,
}

const MAX_CELLS_PER_POINT: usize = 4;

impl<'a> GridIndex<'a> {
    /// Index with cells of side at least `cell` (enlarged when the grid
    /// would otherwise be much finer than the point density warrants).
    pub fn new(pattern: &'a PointPattern, cell: f64) -> Self {
        let dim = pattern.dim();
        let w = pattern.window();
        let n = pattern.len().max(1);
        let mut cell = if cell.is_finite() && cell > 0.0 {
            cell
        } else {
            w.sides().into_iter().fold(0.0, f64::max)
        };
        // Bound the total number of cells.
        loop {
            let total: usize = (0..dim)
                .map(|j| ((w.side(j) / cell).ceil() as usize).max(1))
                .product();
            if total <= MAX_CELLS_PER_POINT * n + 64 {
                break;
            }
            cell *= 1.5;
        }
        let mut ncell = [1usize; 3];
        let mut lo = [0.0; 3];
        for j in 0..dim {
            ncell[j] = ((w.side(j) / cell).ceil() as usize).max(1);
            lo[j] = w.lo()[j];
        }
        let total = ncell[0] * ncell[1] * ncell[2];
        let mut counts = vec![0usize; total + 1];
        let cells: Vec<usize> = (0..pattern.len())
            .map(|i| {
                let c = Self::cell_of(&lo, cell, &ncell, pattern.point(i));
                counts[c + 1] += 1;
                c
            })
            .collect();
        for k in 0..total {
            counts[k + 1] += counts[k];
        }
        let start = counts.clone();
        let mut fill = counts;
        let mut items = vec![0usize; pattern.len()];
        for (i, &c) in cells.iter().enumerate() {
            items[fill[c]] = i;
            fill[c] += 1;
        }
        GridIndex {
            pattern,
            lo,
            cell,
            ncell,
            start,
            items,
        }
    }

    fn coord_cell(lo: f64, cell: f64, n: usize, x: f64) -> usize {
        let k = ((x - lo) / cell).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(n - 1)
        }
    }

    fn cell_of(lo: &Vec3, cell: f64, ncell: &[usize; 3], x: &[f64]) -> usize {
        let mut c = [0usize; 3];
        for j in 0..x.len() {
            c[j] = Self::coord_cell(lo[j], cell, ncell[j], x[j]);
        }
        (c[2] * ncell[1] + c[1]) * ncell[0] + c[0]
    }

    fn cell_coords(&self, x: &[f64]) -> [usize; 3] {
        let mut c = [0usize; 3];
        for j in 0..x.len() {
            c[j] = Self::coord_cell(self.lo[j], self.cell, self.ncell[j], x[j]);
        }
        c
    }

    fn cell_items(&self, c: [usize; 3]) -> &[usize] {
        let k = (c[2] * self.ncell[1] + c[1]) * self.ncell[0] + c[0];
        &self.items[self.start[k]..self.start[k + 1]]
    }

    /// Visit every cell whose Chebyshev distance from `center` is exactly `ring`.
    fn for_ring(&self, center: [usize; 3], ring: usize, mut f: impl FnMut(&[usize])) {
        let dim = self.pattern.dim();
        let r = ring as isize;
        let range = |j: usize| -> (isize, isize) {
            if j < dim {
                let c = center[j] as isize;
                ((c - r).max(0), (c + r).min(self.ncell[j] as isize - 1))
            } else {
                (0, 0)
            }
        };
        let (x0, x1) = range(0);
        let (y0, y1) = range(1);
        let (z0, z1) = range(2);
        for z in z0..=z1 {
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let cheb = (x - center[0] as isize)
                        .abs()
                        .max((y - center[1] as isize).abs())
                        .max((z - center[2] as isize).abs());
                    if cheb == r {
                        f(self.cell_items([x as usize, y as usize, z as usize]));
                    }
                }
            }
        }
    }

    fn max_ring(&self) -> usize {
        self.ncell.iter().copied().max().unwrap_or(1)
    }

    /// Indices `j != i` with `||x_j - x_i|| <= r`, in a fixed order.
    pub fn neighbours_within(&self, i: usize, r: f64, out: &mut Vec<(usize, Vec3, f64)>) {
        out.clear();
        let x = self.pattern.point(i);
        let c = self.cell_coords(x);
        let rings = ((r / self.cell).ceil() as usize).min(self.max_ring());
        let r2 = r * r;
        for ring in 0..=rings {
            self.for_ring(c, ring, |cell| {
                for &j in cell {
                    if j == i {
                        continue;
                    }
                    let d = sub(self.pattern.point(j), x);
                    let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    if d2 <= r2 {
                        out.push((j, d, d2.sqrt()));
                    }
                }
            });
        }
    }

    /// All ordered pairs within distance `r`.
    pub fn pairs_within(&self, r: f64) -> Vec<Pair> {
        let mut pairs = Vec::new();
        let mut buf = Vec::new();
        for i in 0..self.pattern.len() {
            self.neighbours_within(i, r, &mut buf);
            pairs.extend(buf.iter().map(|&(j, d, dist)| Pair { i, j, d, dist }));
        }
        pairs
    }

    /// Nearest `j != i` with `accept(d)` true for `d = x_j - x_i`; ties go to
    /// the lowest index.
    pub fn nearest_where(
        &self,
        i: usize,
        accept: impl Fn(&Vec3) -> bool,
    ) -> Option<(usize, Vec3, f64)> {
        let x = self.pattern.point(i);
        let c = self.cell_coords(x);
        let mut best: Option<(f64, usize, Vec3)> = None;
        for ring in 0..=self.max_ring() {
            self.for_ring(c, ring, |cell| {
                for &j in cell {
                    if j == i {
                        continue;
                    }
                    let d = sub(self.pattern.point(j), x);
                    let d2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                    let better = match best {
                        None => true,
                        Some((b2, bj, _)) => d2 < b2 || (d2 == b2 && j < bj),
                    };
                    if better && accept(&d) {
                        best = Some((d2, j, d));
                    }
                }
            });
            if let Some((b2, _, _)) = best {
                // Unvisited cells lie at least `ring * cell` away.
                let bound = ring as f64 * self.cell;
                if b2.sqrt() < bound {
                    break;
                }
            }
        }
        best.map(|(d2, j, d)| (j, d, d2.sqrt()))
    }
}
