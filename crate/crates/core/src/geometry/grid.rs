use super::{Position, Window, MAX_DIM};

/// Cells per axis are capped so the index never dominates memory.
const MAX_CELLS_PER_AXIS: [usize; MAX_DIM] = [1 << 16, 1024, 128];

/// Uniform grid of cubic cells mapping cell -> point ids.
#[derive(Debug, Clone)]
pub(crate) struct Grid {
    dim: usize,
    per_axis: usize,
    width: f64,
    periodic: bool,
    cells: Vec<Vec<u32>>,
}

impl Grid {
    pub(crate) fn new(window: &Window, cell_hint: f64) -> Self {
        let dim = window.dim();
        let side = window.side();
        let hint = if cell_hint.is_finite() && cell_hint > 0.0 { cell_hint } else { side / 16.0 };
        let per_axis = ((side / hint).floor() as usize).clamp(1, MAX_CELLS_PER_AXIS[dim - 1]);
        Self {
            dim,
            per_axis,
            width: side / per_axis as f64,
            periodic: window.is_periodic(),
            cells: vec![Vec::new(); per_axis.pow(dim as u32)],
        }
    }

    fn axis_cell(&self, x: f64) -> usize {
        ((x / self.width).floor().max(0.0) as usize).min(self.per_axis - 1)
    }

    fn flat(&self, idx: &[usize; MAX_DIM]) -> usize {
        let mut flat = 0;
        for &i in idx[..self.dim].iter().rev() {
            flat = flat * self.per_axis + i;
        }
        flat
    }

    pub(crate) fn cell_of(&self, p: &Position) -> usize {
        let mut idx = [0; MAX_DIM];
        for (axis, i) in idx.iter_mut().enumerate().take(self.dim) {
            *i = self.axis_cell(p.coord(axis));
        }
        self.flat(&idx)
    }

    pub(crate) fn insert(&mut self, id: usize, p: &Position) {
        let c = self.cell_of(p);
        self.cells[c].push(id as u32);
    }

    pub(crate) fn remove(&mut self, id: usize, p: &Position) {
        let c = self.cell_of(p);
        let cell = &mut self.cells[c];
        if let Some(k) = cell.iter().position(|&v| v as usize == id) {
            cell.swap_remove(k);
        }
    }

    pub(crate) fn relabel(&mut self, from: usize, to: usize, p: &Position) {
        let c = self.cell_of(p);
        if let Some(v) = self.cells[c].iter_mut().find(|v| **v as usize == from) {
            *v = to as u32;
        }
    }

    /// Cell indices touched by a search of radius `r` around `p`, one list
    /// per axis (each index at most once).
    fn axis_ranges(&self, p: &Position, r: f64) -> [Vec<usize>; MAX_DIM] {
        let mut out: [Vec<usize>; MAX_DIM] = Default::default();
        let n = self.per_axis as i64;
        for (axis, list) in out.iter_mut().enumerate() {
            if axis >= self.dim {
                list.push(0);
                continue;
            }
            let x = p.coord(axis);
            let lo = ((x - r) / self.width).floor() as i64;
            let hi = ((x + r) / self.width).floor() as i64;
            if self.periodic {
                if hi - lo + 1 >= n {
                    list.extend(0..self.per_axis);
                } else {
                    list.extend((lo..=hi).map(|i| i.rem_euclid(n) as usize));
                }
            } else {
                let lo = lo.clamp(0, n - 1) as usize;
                let hi = hi.clamp(0, n - 1) as usize;
                list.extend(lo..=hi);
            }
        }
        out
    }

    /// Calls `f` for every id stored in a cell that may hold a point within
    /// distance `r` of `p`. Each id is visited once.
    pub(crate) fn visit_candidates(&self, p: &Position, r: f64, mut f: impl FnMut(usize)) {
        let ranges = self.axis_ranges(p, r);
        for &k in &ranges[2] {
            for &j in &ranges[1] {
                for &i in &ranges[0] {
                    let flat = self.flat(&[i, j, k]);
                    for &id in &self.cells[flat] {
                        f(id as usize);
                    }
                }
            }
        }
    }

    /// Sorted per-cell contents, for comparing against a rebuilt index.
    pub(crate) fn canonical(&self) -> Vec<Vec<u32>> {
        self.cells
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.sort_unstable();
                c
            })
            .collect()
    }
}
