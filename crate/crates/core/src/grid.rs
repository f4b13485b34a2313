//! Uniform tensor-product Dirichlet grids on boxes (d ∈ {1, 2}), nodal
//! functions and the discrete L² inner product.
//!
//! Only the interior nodes are stored; the homogeneous Dirichlet condition is
//! the implicit zero extension beyond them. Compact-support test vectors (the
//! discrete stand-in for smooth compactly supported functions) are produced
//! by [`random_compact_support`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("dimension {0} unsupported (d must be 1 or 2)")]
    BadDimension(usize),
    #[error("axis {axis}: need at least 3 interior points, got {n}")]
    TooFewPoints { axis: usize, n: usize },
    #[error("axis {axis}: empty interval [{a}, {b}]")]
    EmptyInterval { axis: usize, a: f64, b: f64 },
    #[error("grid mismatch between operands")]
    Mismatch,
    #[error("margin {margin} leaves no interior nodes")]
    EmptySupport { margin: f64 },
}

/// One axis of the box: interval `[a, b]` with `n` interior nodes and
/// spacing `h = (b − a)/(n + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Axis {
    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }
    /// Coordinate of interior node `j` (0-based).
    pub fn coord(&self, j: usize) -> f64 {
        self.a + (j + 1) as f64 * self.h()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self, GridError> {
        let d = axes.len();
        if d == 0 || d > 2 {
            return Err(GridError::BadDimension(d));
        }
        for (i, ax) in axes.iter().enumerate() {
            if !(ax.b > ax.a) {
                return Err(GridError::EmptyInterval {
                    axis: i + 1,
                    a: ax.a,
                    b: ax.b,
                });
            }
            if ax.n < 3 {
                return Err(GridError::TooFewPoints {
                    axis: i + 1,
                    n: ax.n,
                });
            }
        }
        Ok(Grid { axes })
    }

    pub fn line(a: f64, b: f64, n: usize) -> Result<Self, GridError> {
        Grid::new(vec![Axis { a, b, n }])
    }

    pub fn rect(ax: (f64, f64, usize), ay: (f64, f64, usize)) -> Result<Self, GridError> {
        Grid::new(vec![
            Axis {
                a: ax.0,
                b: ax.1,
                n: ax.2,
            },
            Axis {
                a: ay.0,
                b: ay.1,
                n: ay.2,
            },
        ])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Total number of interior nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Product of the spacings, the quadrature weight of one node cell.
    pub fn cell(&self) -> f64 {
        self.axes.iter().map(|a| a.h()).product()
    }

    /// Multi-index of node `idx` (lexicographic, axis 1 fastest).
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.axes.len() {
            1 => [idx, 0],
            _ => {
                let n0 = self.axes[0].n;
                [idx % n0, idx / n0]
            }
        }
    }

    pub fn ravel(&self, ji: [usize; 2]) -> usize {
        match self.axes.len() {
            1 => ji[0],
            _ => ji[0] + ji[1] * self.axes[0].n,
        }
    }

    /// Coordinates of node `idx`; the second entry is 0 in one dimension.
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let ji = self.unravel(idx);
        match self.axes.len() {
            1 => [self.axes[0].coord(ji[0]), 0.0],
            _ => [self.axes[0].coord(ji[0]), self.axes[1].coord(ji[1])],
        }
    }

    /// Euclidean norm of the node's coordinate vector.
    pub fn radius(&self, idx: usize) -> f64 {
        let c = self.coord(idx);
        match self.dim() {
            1 => c[0].abs(),
            _ => (c[0] * c[0] + c[1] * c[1]).sqrt(),
        }
    }

    /// Index of the grid node closest to `p`.
    pub fn nearest_node(&self, p: &[f64]) -> usize {
        let mut ji = [0usize; 2];
        for (k, ax) in self.axes.iter().enumerate() {
            let t = ((p.get(k).copied().unwrap_or(0.0) - ax.a) / ax.h() - 1.0).round();
            ji[k] = t.clamp(0.0, (ax.n - 1) as f64) as usize;
        }
        self.ravel(ji)
    }

    pub fn zeros(self: &Arc<Self>) -> GridFunction {
        GridFunction {
            grid: self.clone(),
            values: vec![Complex64::new(0.0, 0.0); self.len()],
        }
    }

    /// Samples a closure on every node.
    pub fn sample_fn(
        self: &Arc<Self>,
        mut f: impl FnMut(&[f64]) -> Complex64,
    ) -> GridFunction {
        let d = self.dim();
        let values = (0..self.len())
            .map(|i| {
                let c = self.coord(i);
                f(&c[..d])
            })
            .collect();
        GridFunction {
            grid: self.clone(),
            values,
        }
    }
}

/// Complex nodal values on the interior of a [`Grid`]; zero beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Mismatch);
        }
        Ok(GridFunction { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn scale(&mut self, alpha: Complex64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Discrete inner product ⟨u, v⟩ₕ = (Π hᵢ) Σⱼ uⱼ conj(vⱼ).
pub fn inner(u: &GridFunction, v: &GridFunction) -> Result<Complex64, GridError> {
    if !u.same_grid(v) {
        return Err(GridError::Mismatch);
    }
    let cell = u.grid.cell();
    let mut s = Complex64::new(0.0, 0.0);
    for (a, b) in u.values.iter().zip(v.values.iter()) {
        s += a * b.conj();
    }
    Ok(s * cell)
}

/// Discrete L² norm, `sqrt(⟨u, u⟩ₕ)`.
pub fn norm(u: &GridFunction) -> f64 {
    let cell = u.grid.cell();
    let s: f64 = u.values.iter().map(|v| v.norm_sqr()).sum();
    (s * cell).sqrt()
}

/// Pseudo-random complex nodal values supported at distance at least
/// `margin`×(box width) from the boundary on every axis; zero elsewhere.
/// Deterministic for a fixed seed.
pub fn random_compact_support(
    grid: &Arc<Grid>,
    margin: f64,
    seed: u64,
) -> Result<GridFunction, GridError> {
    assert!(margin > 0.0 && margin < 0.5, "margin must be in (0, 0.5)");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = grid.zeros();
    let d = grid.dim();
    let mut any = false;
    for i in 0..grid.len() {
        let c = grid.coord(i);
        let mut inside = true;
        for (k, ax) in grid.axes().iter().enumerate().take(d) {
            let w = ax.b - ax.a;
            if c[k] - ax.a < margin * w || ax.b - c[k] < margin * w {
                inside = false;
                break;
            }
        }
        // draw for every interior candidate so the stream stays aligned
        // with the node enumeration regardless of support size
        if inside {
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            f.values[i] = Complex64::new(re, im);
            any = true;
        }
    }
    if !any {
        return Err(GridError::EmptySupport { margin });
    }
    Ok(f)
}

/// Writes `x1[,x2], Re, Im, Abs` rows, one per node, with a one-line header.
pub fn write_csv<W: Write>(u: &GridFunction, mut w: W) -> std::io::Result<()> {
    let d = u.grid.dim();
    if d == 1 {
        writeln!(w, "x1,re,im,abs")?;
    } else {
        writeln!(w, "x1,x2,re,im,abs")?;
    }
    for i in 0..u.grid.len() {
        let c = u.grid.coord(i);
        let v = u.values[i];
        if d == 1 {
            writeln!(w, "{},{},{},{}", c[0], v.re, v.im, v.norm())?;
        } else {
            writeln!(w, "{},{},{},{},{}", c[0], c[1], v.re, v.im, v.norm())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn spacing_and_counts() {
        let g = Grid::line(0.0, 1.0, 99).unwrap();
        assert!((g.axes()[0].h() - 0.01).abs() < 1e-15);
        assert_eq!(g.len(), 99);
        let g2 = Grid::rect((0.0, 1.0, 4), (0.0, 2.0, 5)).unwrap();
        assert_eq!(g2.len(), 20);
        assert_eq!(g2.unravel(7), [3, 1]);
        assert_eq!(g2.ravel([3, 1]), 7);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            Grid::line(0.0, 1.0, 2),
            Err(GridError::TooFewPoints { .. })
        ));
        assert!(matches!(
            Grid::line(1.0, 1.0, 5),
            Err(GridError::EmptyInterval { .. })
        ));
    }

    #[test]
    fn indicator_inner_product_is_cell_volume() {
        let g = Arc::new(Grid::line(0.0, 1.0, 9).unwrap()); // h = 0.1
        let mut u = g.zeros();
        u.values_mut()[4] = Complex64::new(1.0, 0.0);
        let ip = inner(&u, &u).unwrap();
        assert!((ip.re - 0.1).abs() < 1e-15);
        assert_eq!(ip.im, 0.0);
    }

    #[test]
    fn discrete_sine_modes_are_orthogonal() {
        let g = Arc::new(Grid::line(0.0, PI, 64).unwrap());
        let s1 = g.sample_fn(|x| Complex64::new(x[0].sin(), 0.0));
        let s2 = g.sample_fn(|x| Complex64::new((2.0 * x[0]).sin(), 0.0));
        assert!(inner(&s1, &s2).unwrap().norm() < 1e-14);
    }

    #[test]
    fn quadrature_counts_node_cells_exactly() {
        let g = Arc::new(Grid::line(0.0, 1.0, 9).unwrap());
        let ones = g.sample_fn(|_| Complex64::new(1.0, 0.0));
        let total = inner(&ones, &ones).unwrap().re;
        assert!((total - g.cell() * g.len() as f64).abs() < 1e-15);
        assert!((total - 0.9).abs() < 1e-15); // 1 − 2h with h = 0.1... i.e. N·h
    }

    #[test]
    fn compact_support_respects_margin() {
        let g = Arc::new(Grid::line(0.0, 1.0, 99).unwrap());
        let u = random_compact_support(&g, 0.25, 7).unwrap();
        let nonzero: Vec<usize> = (0..g.len())
            .filter(|&i| u.values()[i].norm() > 0.0)
            .collect();
        assert!(!nonzero.is_empty());
        for &i in &nonzero {
            let x = g.coord(i)[0];
            assert!(x >= 0.25 && x <= 0.75, "x={x}");
        }
        assert!((nonzero.len() as i64 - 49).unsigned_abs() <= 2);
        // same seed, same vector
        let v = random_compact_support(&g, 0.25, 7).unwrap();
        assert_eq!(u, v);
        let w = random_compact_support(&g, 0.25, 8).unwrap();
        assert_ne!(u, w);
    }

    #[test]
    fn tight_margin_on_tiny_grid() {
        let g = Arc::new(Grid::line(0.0, 1.0, 9).unwrap());
        // nodes at 0.1..0.9; margin 0.49 keeps only x ∈ [0.49, 0.51] → x=0.5
        match random_compact_support(&g, 0.49, 3) {
            Ok(u) => {
                let nz = u.values().iter().filter(|v| v.norm() > 0.0).count();
                assert_eq!(nz, 1);
            }
            Err(GridError::EmptySupport { .. }) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    proptest! {
        #[test]
        fn inner_is_hermitian_and_norm_scales(seed in 0u64..500, re in -3.0..3.0f64, im in -3.0..3.0f64) {
            let g = Arc::new(Grid::line(-1.0, 1.0, 17).unwrap());
            let u = random_compact_support(&g, 0.1, seed).unwrap();
            let v = random_compact_support(&g, 0.1, seed.wrapping_add(1)).unwrap();
            let a = inner(&u, &v).unwrap();
            let b = inner(&v, &u).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-14);

            let alpha = Complex64::new(re, im);
            let mut su = u.clone();
            su.scale(alpha);
            prop_assert!((norm(&su) - alpha.norm() * norm(&u)).abs() <= 1e-14 * (1.0 + norm(&u)));
        }
    }
}
