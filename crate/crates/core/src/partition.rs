//! Adaptive hypercube cover of the unit box.
//!
//! The cover starts as a uniform grid of `m^d <= T^q` cells. Each cell owns
//! the observations that fall inside it and an independent GP fitted to
//! them. After every observation a single split pass bisects, along every
//! side, each cell whose diameter `rho` satisfies `rho^(-1/b) < n + 1`, where
//! `n` is the number of observations it owns.
//!
//! Ownership is half-open, `[lower, upper)`, except on the faces of the unit
//! box, which are closed, so every point of `[0, 1]^d` has exactly one owner.

use crate::error::{check_finite, Error, Result};
use crate::gp::GpModel;
use crate::kernels::KernelSpec;

/// Cover exponents `(b, q)` for dimension `d` and Matérn smoothness `nu`:
/// `b = (d + 1) / (d + 2 nu)`, `q = d (d + 1) / (d (d + 2) + 2 nu)`.
pub fn cover_exponents(dim: usize, nu: f64) -> (f64, f64) {
    let d = dim as f64;
    let b = (d + 1.0) / (d + 2.0 * nu);
    let q = d * (d + 1.0) / (d * (d + 2.0) + 2.0 * nu);
    (b, q)
}

/// Cells per side of the initial grid, `max(1, floor(T^(q/d)))`.
pub fn initial_cells_per_side(horizon: usize, dim: usize, q: f64) -> usize {
    let m = (horizon as f64).powf(q / dim as f64).floor() as usize;
    // guard against powf landing just below an exact integer
    let m = if ((m + 1) as f64).powf(dim as f64 / q) <= horizon as f64 * (1.0 + 1e-12) {
        m + 1
    } else {
        m
    };
    m.max(1)
}

/// Whether a cell of the given diameter holding `count` points must split.
pub fn split_rule(diameter: f64, count: usize, b: f64) -> bool {
    diameter.powf(-1.0 / b) < count as f64 + 1.0
}

#[derive(Debug, Clone)]
pub struct Cell {
    lower: Vec<f64>,
    upper: Vec<f64>,
    diameter: f64,
    depth: u32,
    created_at: usize,
    model: GpModel,
    /// Largest information gain this cell's model has carried.
    peak_info_gain: f64,
}

impl Cell {
    fn new(lower: Vec<f64>, upper: Vec<f64>, diameter: f64, depth: u32, created_at: usize, model: GpModel) -> Self {
        let peak_info_gain = model.accumulated_info_gain();
        Self {
            lower,
            upper,
            diameter,
            depth,
            created_at,
            model,
            peak_info_gain,
        }
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Euclidean length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Iteration at which the cell entered the cover (0 for the initial grid).
    pub fn created_at(&self) -> usize {
        self.created_at
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn local_count(&self) -> usize {
        self.model.len()
    }

    pub fn peak_info_gain(&self) -> f64 {
        self.peak_info_gain
    }

    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).product()
    }

    /// Ownership test under the half-open rule.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| lo <= v && (v < hi || (hi == 1.0 && v <= hi)))
    }

    /// Largest coordinate this cell owns along each axis.
    pub fn owned_upper(&self) -> Vec<f64> {
        self.upper
            .iter()
            .map(|&hi| if hi == 1.0 { hi } else { hi.next_down() })
            .collect()
    }

    pub fn recomputed_diameter(&self) -> f64 {
        crate::kernels::euclidean(&self.lower, &self.upper)
    }

    fn children(&self, t: usize) -> Result<Vec<Cell>> {
        let d = self.lower.len();
        let mid: Vec<f64> = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect();
        let mut out = Vec::with_capacity(1 << d);
        for code in 0..(1usize << d) {
            let (lower, upper): (Vec<f64>, Vec<f64>) = (0..d)
                .map(|j| {
                    if code >> j & 1 == 0 {
                        (self.lower[j], mid[j])
                    } else {
                        (mid[j], self.upper[j])
                    }
                })
                .unzip();
            let mut child = Cell::new(
                lower,
                upper,
                self.diameter / 2.0,
                self.depth + 1,
                t,
                GpModel::new(*self.model.kernel(), self.model.lambda(), d)?,
            );
            let (pts, ys): (Vec<Vec<f64>>, Vec<f64>) = self
                .model
                .points()
                .zip(self.model.observations())
                .filter(|(p, _)| child.contains(p))
                .map(|(p, &y)| (p.to_vec(), y))
                .unzip();
            if !pts.is_empty() {
                child.model = GpModel::fit(*self.model.kernel(), self.model.lambda(), d, &pts, &ys)?;
                child.peak_info_gain = child.model.accumulated_info_gain();
            }
            out.push(child);
        }
        Ok(out)
    }
}

/// One executed split, kept for auditing the split rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEvent {
    pub iteration: usize,
    pub depth: u32,
    pub diameter: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct Cover {
    cells: Vec<Cell>,
    dim: usize,
    b: f64,
    q: f64,
    horizon: usize,
    cells_per_side: usize,
    cells_ever: usize,
    total_points: usize,
    splits: Vec<SplitEvent>,
    /// Peak information gain over cells already replaced by their children.
    retired_peak_gain: f64,
}

impl Cover {
    /// Uniform grid over `[0, 1]^d` with empty local models.
    pub fn initial(kernel: KernelSpec, lambda: f64, dim: usize, horizon: usize, b: f64, q: f64) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if dim == 0 || dim > 16 {
            return Err(Error::InvalidArgument(format!("unsupported dimension {dim}")));
        }
        if !(b > 0.0 && q > 0.0) {
            return Err(Error::InvalidArgument(format!("cover exponents must be positive, got b={b}, q={q}")));
        }
        let m = initial_cells_per_side(horizon, dim, q);
        let side = 1.0 / m as f64;
        let diameter = (dim as f64).sqrt() * side;
        let total = m.pow(dim as u32);
        let mut cells = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rest = flat;
            let mut lower = Vec::with_capacity(dim);
            let mut upper = Vec::with_capacity(dim);
            for _ in 0..dim {
                let i = rest % m;
                rest /= m;
                lower.push(i as f64 / m as f64);
                upper.push((i + 1) as f64 / m as f64);
            }
            cells.push(Cell::new(lower, upper, diameter, 0, 0, GpModel::new(kernel, lambda, dim)?));
        }
        Ok(Self {
            cells,
            dim,
            b,
            q,
            horizon,
            cells_per_side: m,
            cells_ever: total,
            total_points: 0,
            splits: Vec::new(),
            retired_peak_gain: 0.0,
        })
    }

    /// Cover for a Matérn kernel with exponents derived from its smoothness.
    pub fn for_matern(kernel: KernelSpec, lambda: f64, dim: usize, horizon: usize) -> Result<Self> {
        let nu = kernel.nu().ok_or_else(|| {
            Error::InvalidArgument("the cover exponents need a Matérn kernel".into())
        })?;
        let (b, q) = cover_exponents(dim, nu);
        Self::initial(kernel, lambda, dim, horizon, b, q)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    /// Number of distinct cells that have ever been part of the cover.
    pub fn cells_ever(&self) -> usize {
        self.cells_ever
    }

    pub fn total_points(&self) -> usize {
        self.total_points
    }

    pub fn max_depth(&self) -> u32 {
        self.cells.iter().map(Cell::depth).max().unwrap_or(0)
    }

    pub fn splits(&self) -> &[SplitEvent] {
        &self.splits
    }

    /// Largest information gain any cell has reached, including cells that
    /// were split away.
    pub fn max_cell_info_gain(&self) -> f64 {
        self.cells
            .iter()
            .map(Cell::peak_info_gain)
            .fold(self.retired_peak_gain, f64::max)
    }

    /// `|cells ever| / T^q`.
    pub fn cardinality_ratio(&self) -> f64 {
        self.cells_ever as f64 / (self.horizon as f64).powf(self.q)
    }

    /// Index of the unique cell owning `x`.
    pub fn locate(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "point has dimension {}, cover has {}",
                x.len(),
                self.dim
            )));
        }
        check_finite(x, "cover point")?;
        if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidArgument(format!("point {x:?} lies outside the unit box")));
        }
        self.cells
            .iter()
            .position(|c| c.contains(x))
            .ok_or_else(|| Error::InvalidArgument(format!("no cell owns {x:?}")))
    }

    /// Adds an observation to the owning cell's model; returns that cell's index.
    pub fn insert(&mut self, x: &[f64], y: f64) -> Result<usize> {
        let idx = self.locate(x)?;
        let cell = &mut self.cells[idx];
        cell.model.update(x, y)?;
        cell.peak_info_gain = cell.peak_info_gain.max(cell.model.accumulated_info_gain());
        self.total_points += 1;
        Ok(idx)
    }

    /// Splits `cells[index]` if the rule demands it. Returns the number of
    /// cells that replaced it (1 when unchanged).
    pub fn maybe_split(&mut self, index: usize, iteration: usize) -> Result<usize> {
        let cell = &self.cells[index];
        if !split_rule(cell.diameter, cell.local_count(), self.b) {
            return Ok(1);
        }
        let children = cell.children(iteration)?;
        let n = children.len();
        self.splits.push(SplitEvent {
            iteration,
            depth: cell.depth,
            diameter: cell.diameter,
            count: cell.local_count(),
        });
        self.retired_peak_gain = self.retired_peak_gain.max(cell.peak_info_gain);
        self.cells_ever += n;
        self.cells.splice(index..=index, children);
        Ok(n)
    }

    /// One pass over the cells present at the start of the pass; children
    /// created here are checked on the next pass.
    pub fn split_pass(&mut self, iteration: usize) -> Result<usize> {
        let mut i = 0;
        let mut splits = 0;
        while i < self.cells.len() {
            let n = self.maybe_split(i, iteration)?;
            if n > 1 {
                splits += 1;
            }
            i += n;
        }
        Ok(splits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernel() -> KernelSpec {
        KernelSpec::matern(2.5, 0.2).unwrap()
    }

    #[test]
    fn exponents() {
        let (b, q) = cover_exponents(3, 2.5);
        assert_relative_eq!(b, 0.5, max_relative = 1e-15);
        assert_relative_eq!(q, 0.6, max_relative = 1e-15);
        let (b, q) = cover_exponents(1, 1.5);
        assert_relative_eq!(b, 0.5, max_relative = 1e-15);
        assert_relative_eq!(q, 1.0 / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn initial_grid_sizes() {
        let c = Cover::for_matern(kernel(), 0.01, 3, 100).unwrap();
        assert_eq!(c.cells_per_side(), 2);
        assert_eq!(c.len(), 8);
        assert!((c.len() as f64) <= 100f64.powf(c.q()));
        let one = Cover::for_matern(kernel(), 0.01, 2, 1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.cells()[0].lower(), &[0.0, 0.0]);
        assert_eq!(one.cells()[0].upper(), &[1.0, 1.0]);
        // exact power: q/d = 1/2, T = 16 -> 4 per side
        let exact = Cover::initial(kernel(), 0.01, 2, 16, 0.5, 1.0).unwrap();
        assert_eq!(exact.cells_per_side(), 4);
    }

    #[test]
    fn boundary_ownership() {
        let c = Cover::initial(kernel(), 0.01, 1, 4, 0.5, 0.5).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.locate(&[0.5]).unwrap(), 1);
        assert_eq!(c.locate(&[0.0]).unwrap(), 0);
        assert_eq!(c.locate(&[1.0]).unwrap(), 1);
        assert_eq!(c.locate(&[0.4999]).unwrap(), 0);
        assert!(c.locate(&[1.0001]).is_err());
        assert!(c.locate(&[-0.1]).is_err());
        assert!(c.locate(&[f64::NAN]).is_err());
    }

    #[test]
    fn random_points_have_one_owner() {
        let c = Cover::for_matern(kernel(), 0.01, 3, 100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            assert_eq!(c.cells().iter().filter(|cell| cell.contains(&x)).count(), 1);
        }
    }

    #[test]
    fn split_rule_examples() {
        assert!(!split_rule(1.0, 0, 0.5));
        assert!(split_rule(0.5, 4, 0.5));
        assert!(!split_rule(0.5, 3, 0.5));
        for &rho in &[1.0, 0.9, 0.3, 0.01] {
            assert!(!split_rule(rho, 0, 0.5));
        }
    }

    #[test]
    fn split_bisects_every_side_and_moves_points() {
        let mut c = Cover::initial(kernel(), 0.01, 2, 1, 0.5, 0.5).unwrap();
        // diameter sqrt(2) > 1: the rule fires even for an empty cell
        let pts = [[0.1, 0.1], [0.7, 0.2], [0.2, 0.9], [0.6, 0.6], [0.5, 0.5]];
        for (i, p) in pts.iter().enumerate() {
            c.insert(p, i as f64).unwrap();
        }
        assert_eq!(c.split_pass(1).unwrap(), 1);
        assert_eq!(c.len(), 4);
        assert_eq!(c.cells_ever(), 5);
        for cell in c.cells() {
            assert_relative_eq!(cell.diameter(), 2f64.sqrt() / 2.0, max_relative = 1e-15);
            assert!((cell.recomputed_diameter() - cell.diameter()).abs() < 1e-12);
            assert_eq!(cell.depth(), 1);
            assert_eq!(cell.created_at(), 1);
            for p in cell.model().points() {
                assert!(cell.contains(p));
            }
        }
        let counts: usize = c.cells().iter().map(Cell::local_count).sum();
        assert_eq!(counts, pts.len());
        // the centre point belongs to the upper-right child
        assert_eq!(c.cells()[3].local_count(), 2);
        assert_eq!(c.splits()[0].count, 5);
    }

    #[test]
    fn split_example_half_diameter() {
        // d = 2, b = 0.5: a cell of diameter 0.5 holding 4 points splits.
        let mut c = Cover::initial(kernel(), 0.01, 2, 1, 0.5, 0.5).unwrap();
        c.split_pass(0).unwrap(); // sqrt(2) -> four cells of diameter ~0.707
        c.split_pass(0).unwrap(); // 0.707^-2 = 2 > 1: no split while empty
        assert_eq!(c.len(), 4);
        let mut c2 = Cover::initial(kernel(), 0.01, 2, 1, 0.5, 0.5).unwrap();
        c2.cells[0].diameter = 0.5;
        c2.cells[0].upper = vec![0.5 / 2f64.sqrt(); 2];
        for p in [[0.01, 0.01], [0.02, 0.3], [0.3, 0.02], [0.3, 0.3]] {
            c2.insert(&p, 1.0).unwrap();
        }
        assert_eq!(c2.maybe_split(0, 1).unwrap(), 4);
        assert!(c2.cells()[..4].iter().all(|c| c.diameter() == 0.25));
    }
}
