//! Log-polar tensor grids on annuli and the sampled scalar fields that live
//! on them.
//!
//! All rearrangement-based norms in this crate act on *weighted samples*:
//! pairs `(|value|, cell_area)`. The grids here produce exact cell areas
//! (each cell area is the exact area of its annular sector), so the total
//! measure of a sampled field is exact and the only discretization error is
//! the sampling of the function values themselves.

use crate::error::{Error, Result};

/// A tensor grid on the annulus `r_in < |z| < r_out`, uniform in `log r` and
/// in `θ`. Nodes sit at cell centers: radially at the geometric mean of the
/// cell's ring edges, angularly at the sector midline.
#[derive(Debug, Clone)]
pub struct AnnulusGrid {
    /// Inner radius of the annulus.
    pub r_in: f64,
    /// Outer radius of the annulus.
    pub r_out: f64,
    /// Number of radial cells.
    pub n_r: usize,
    /// Number of angular cells.
    pub n_theta: usize,
    /// Ring edges, length `n_r + 1`, geometric progression from `r_in` to `r_out`.
    pub ring_edges: Vec<f64>,
    /// Cell-center radii, length `n_r`.
    pub radii: Vec<f64>,
    /// Exact area of one cell in ring `i` (all sectors of a ring are congruent).
    pub cell_area: Vec<f64>,
}

impl AnnulusGrid {
    /// Builds a log-polar grid with `n_r × n_theta` cells.
    pub fn new(r_in: f64, r_out: f64, n_r: usize, n_theta: usize) -> Result<Self> {
        if !(r_in > 0.0 && r_in < r_out) {
            return Err(Error::Domain(format!(
                "annulus requires 0 < r_in < r_out, got [{r_in}, {r_out}]"
            )));
        }
        if n_r == 0 || n_theta == 0 {
            return Err(Error::Domain("grid must have at least one cell".into()));
        }
        let log_step = (r_out / r_in).ln() / n_r as f64;
        let ring_edges: Vec<f64> = (0..=n_r)
            .map(|i| r_in * (log_step * i as f64).exp())
            .collect();
        let radii: Vec<f64> = (0..n_r)
            .map(|i| (ring_edges[i] * ring_edges[i + 1]).sqrt())
            .collect();
        let cell_area: Vec<f64> = (0..n_r)
            .map(|i| {
                std::f64::consts::PI * (ring_edges[i + 1].powi(2) - ring_edges[i].powi(2))
                    / n_theta as f64
            })
            .collect();
        Ok(Self {
            r_in,
            r_out,
            n_r,
            n_theta,
            ring_edges,
            radii,
            cell_area,
        })
    }

    /// Angular node (sector midline) for column `j`.
    #[inline]
    pub fn theta(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * (j as f64 + 0.5) / self.n_theta as f64
    }

    /// Total number of cells.
    #[inline]
    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    /// Whether the grid has no cells (never true for a constructed grid).
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Exact area of the annulus.
    pub fn total_area(&self) -> f64 {
        std::f64::consts::PI * (self.r_out.powi(2) - self.r_in.powi(2))
    }
}

/// A nonnegative scalar field sampled on an [`AnnulusGrid`], stored ring-major
/// (`values[i * n_theta + j]` is ring `i`, sector `j`).
///
/// Norm routines act on `|f|`, so values are clamped conceptually to their
/// absolute value by the callers that build fields.
#[derive(Debug, Clone)]
pub struct SampledAnnulusField {
    /// The underlying grid.
    pub grid: AnnulusGrid,
    /// Sample values, one per cell.
    pub values: Vec<f64>,
}

impl SampledAnnulusField {
    /// Builds a field from per-cell values; checks finiteness and shape.
    pub fn new(grid: AnnulusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(z)` at every cell center.
    pub fn from_fn(grid: AnnulusGrid, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r {
            let r = grid.radii[i];
            for j in 0..grid.n_theta {
                values.push(f(r, grid.theta(j)));
            }
        }
        Self::new(grid, values)
    }

    /// Iterates `(|value|, cell_area)` pairs.
    pub fn weighted_samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.values.iter().enumerate().map(move |(idx, &v)| {
            let ring = idx / self.grid.n_theta;
            (v.abs(), self.grid.cell_area[ring])
        })
    }

    /// Area-weighted mean of the field.
    pub fn mean(&self) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (idx, &v) in self.values.iter().enumerate() {
            let a = self.grid.cell_area[idx / self.grid.n_theta];
            num += v * a;
            den += a;
        }
        num / den
    }

    /// Quadrature of `∫ f dA` over the annulus.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(idx, &v)| v * self.grid.cell_area[idx / self.grid.n_theta])
            .sum()
    }

    /// Quadrature of `∫ |f|^p dA`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(idx, &v)| v.abs().powf(p) * self.grid.cell_area[idx / self.grid.n_theta])
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cell_areas_sum_to_annulus_area() {
        let g = AnnulusGrid::new(1e-3, 2.0, 128, 256).unwrap();
        let total: f64 = (0..g.n_r)
            .map(|i| g.cell_area[i] * g.n_theta as f64)
            .sum();
        assert_relative_eq!(total, g.total_area(), max_relative = 1e-12);
    }

    #[test]
    fn rejects_bad_annulus() {
        assert!(AnnulusGrid::new(2.0, 1.0, 8, 8).is_err());
        assert!(AnnulusGrid::new(0.0, 1.0, 8, 8).is_err());
    }

    #[test]
    fn field_mean_of_constant() {
        let g = AnnulusGrid::new(0.5, 1.0, 16, 32).unwrap();
        let f = SampledAnnulusField::from_fn(g, |_, _| 3.25).unwrap();
        assert_relative_eq!(f.mean(), 3.25, max_relative = 1e-14);
    }
}
