//! Uniform-grid nearest-neighbor index over a fixed point set. Cells are
//! cubes sized for about one point each; queries scan outward ring by ring
//! and stop once no farther ring can beat the best hit, so results are exact.
//! Points can be deactivated, which the greedy subsampler relies on.

use crate::geom::Vec3;

pub struct GridIndex {
    points: Vec<Vec3>,
    alive: Vec<bool>,
    alive_count: usize,
    origin: Vec3,
    cell: f64,
    dims: [usize; 3],
    cells: Vec<Vec<u32>>,
}

impl GridIndex {
    pub fn new(points: &[Vec3]) -> GridIndex {
        assert!(!points.is_empty(), "cannot index zero points");
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.min_component_wise(*p);
            hi = hi.max_component_wise(*p);
        }
        let ext = hi - lo;
        let span = ext.x.max(ext.y).max(ext.z).max(1e-12);
        // About one point per cell, capped to keep degenerate (flat or
        // collinear) clouds from exploding one axis.
        let cell = (ext.x.max(1e-3 * span) * ext.y.max(1e-3 * span) * ext.z.max(1e-3 * span)
            / points.len() as f64)
            .cbrt()
            .max(1e-9 * span);
        let dim = |e: f64| ((e / cell).floor() as usize + 1).min(1 << 10);
        let dims = [dim(ext.x), dim(ext.y), dim(ext.z)];
        let mut cells = vec![Vec::new(); dims[0] * dims[1] * dims[2]];
        let index = GridIndex {
            points: points.to_vec(),
            alive: vec![true; points.len()],
            alive_count: points.len(),
            origin: lo,
            cell,
            dims,
            cells: Vec::new(),
        };
        for (i, p) in points.iter().enumerate() {
            let c = index.cell_of(*p);
            cells[index.flat(c)].push(i as u32);
        }
        GridIndex { cells, ..index }
    }

    fn cell_of(&self, p: Vec3) -> [usize; 3] {
        let f = |v: f64, o: f64, d: usize| {
            (((v - o) / self.cell).floor().max(0.0) as usize).min(d - 1)
        };
        [
            f(p.x, self.origin.x, self.dims[0]),
            f(p.y, self.origin.y, self.dims[1]),
            f(p.z, self.origin.z, self.dims[2]),
        ]
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn alive_count(&self) -> usize {
        self.alive_count
    }

    pub fn position(&self, id: u32) -> Vec3 {
        self.points[id as usize]
    }

    pub fn deactivate(&mut self, id: u32) {
        if std::mem::replace(&mut self.alive[id as usize], false) {
            self.alive_count -= 1;
        }
    }

    /// Nearest active point to `q`, optionally excluding one id. Ties break
    /// toward the lower index. None if nothing is active.
    pub fn nearest(&self, q: Vec3, exclude: Option<u32>) -> Option<(u32, f64)> {
        let center = self.cell_of(q);
        let max_ring = self.dims[0].max(self.dims[1]).max(self.dims[2]);
        let mut best: Option<(u32, f64)> = None;
        for ring in 0..=max_ring {
            if let Some((_, d)) = best {
                // Any cell in this ring is at least (ring - 1) cells away.
                if ring >= 1 && d <= (ring - 1) as f64 * self.cell {
                    break;
                }
            }
            self.for_ring(center, ring, |cell_id| {
                for &i in &self.cells[cell_id] {
                    if !self.alive[i as usize] || exclude == Some(i) {
                        continue;
                    }
                    let d = self.points[i as usize].distance(q);
                    let better = match best {
                        None => true,
                        Some((bi, bd)) => d < bd || (d == bd && i < bi),
                    };
                    if better {
                        best = Some((i, d));
                    }
                }
            });
        }
        best
    }

    /// Visit flat indices of cells on the Chebyshev ring at distance `ring`
    /// from `center`, clipped to the grid.
    fn for_ring(&self, center: [usize; 3], ring: usize, mut f: impl FnMut(usize)) {
        let r = ring as i64;
        let c = [center[0] as i64, center[1] as i64, center[2] as i64];
        let clip = |v: i64, d: usize| v >= 0 && v < d as i64;
        let visit = |x: i64, y: i64, z: i64, f: &mut dyn FnMut(usize)| {
            if clip(x, self.dims[0]) && clip(y, self.dims[1]) && clip(z, self.dims[2]) {
                f(self.flat([x as usize, y as usize, z as usize]));
            }
        };
        if ring == 0 {
            visit(c[0], c[1], c[2], &mut f);
            return;
        }
        for z in (c[2] - r)..=(c[2] + r) {
            for y in (c[1] - r)..=(c[1] + r) {
                if (z - c[2]).abs() == r || (y - c[1]).abs() == r {
                    for x in (c[0] - r)..=(c[0] + r) {
                        visit(x, y, z, &mut f);
                    }
                } else {
                    visit(c[0] - r, y, z, &mut f);
                    visit(c[0] + r, y, z, &mut f);
                }
            }
        }
    }
}
