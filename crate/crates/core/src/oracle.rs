//! Brute-force grid minimization.
//!
//! This is the independent ground truth the iterative solvers are checked
//! against. Scans are exhaustive over a tensor grid, run in parallel when the
//! `parallel` feature is on, and break ties by the lowest global node index so
//! the result does not depend on chunking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Default cap on the number of grid nodes per scan.
pub const DEFAULT_NODE_BUDGET: u128 = 10_000_000;

/// Environment variable overriding [`DEFAULT_NODE_BUDGET`].
pub const BUDGET_ENV: &str = "PMOREAU_ORACLE_BUDGET";

/// Current node budget: `PMOREAU_ORACLE_BUDGET` if set and parseable, else 10⁷.
pub fn node_budget() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .unwrap_or(DEFAULT_NODE_BUDGET)
}

/// A tensor grid `[lo, hi]` with `points_per_axis` equispaced nodes per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub points_per_axis: usize,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, points_per_axis: usize) -> Result<Self> {
        let g = Self {
            lo,
            hi,
            points_per_axis,
        };
        g.validate()?;
        Ok(g)
    }

    /// One-dimensional grid `[lo, hi]`.
    pub fn line(lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], points)
    }

    /// Cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64, points: usize) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim], points)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() {
            return Err(Error::param("grid must have at least one axis"));
        }
        Error::check_dim(self.lo.len(), self.hi.len())?;
        if self.points_per_axis < 2 {
            return Err(Error::param("points_per_axis must be at least 2"));
        }
        for (l, h) in self.lo.iter().zip(&self.hi) {
            if !(l.is_finite() && h.is_finite() && l < h) {
                return Err(Error::param(format!(
                    "grid bounds must satisfy lo < hi, got [{l}, {h}]"
                )));
            }
        }
        let nodes = self.node_count();
        let budget = node_budget();
        if nodes > budget {
            return Err(Error::Budget { nodes, budget });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn node_count(&self) -> u128 {
        (self.points_per_axis as u128).saturating_pow(self.lo.len() as u32)
    }

    /// Grid spacing along `axis`.
    pub fn step(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.points_per_axis - 1) as f64
    }

    pub fn max_step(&self) -> f64 {
        (0..self.dim()).map(|k| self.step(k)).fold(0.0, f64::max)
    }

    /// Coordinate of node `j` on `axis`. Written as a convex combination so
    /// symmetric grids hit their midpoint exactly.
    pub fn coord(&self, axis: usize, j: usize) -> f64 {
        let s = j as f64 / (self.points_per_axis - 1) as f64;
        if j == self.points_per_axis - 1 {
            return self.hi[axis];
        }
        self.lo[axis] * (1.0 - s) + self.hi[axis] * s
    }

    /// Per-axis indices of the global node `index`; axis 0 varies slowest.
    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let n = self.points_per_axis;
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = index % n;
            index /= n;
        }
        out
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .into_iter()
            .enumerate()
            .map(|(k, j)| self.coord(k, j))
            .collect()
    }

    pub fn nodes(&self) -> Vec<Vec<f64>> {
        (0..self.node_count() as usize)
            .map(|i| self.node(i))
            .collect()
    }

    pub fn is_boundary(&self, index: usize) -> bool {
        self.multi_index(index)
            .into_iter()
            .any(|j| j == 0 || j == self.points_per_axis - 1)
    }
}

/// Result of a grid scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMin {
    pub argmin: Vec<f64>,
    pub min: f64,
    /// Global node index of the argmin in the last grid scanned.
    pub index: usize,
}

/// Exhaustive scan; NaN values count as `+inf`.
pub fn grid_minimize<F>(objective: F, grid: &GridSpec) -> Result<GridMin>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    grid.validate()?;
    let n = grid.node_count() as usize;
    let (index, min) =
        par::argmin_range(n, |i| objective(&grid.node(i))).ok_or(Error::InfeasibleGrid)?;
    finish(grid, index, min)
}

/// Sequential variant of [`grid_minimize`]; bit-identical output.
pub fn grid_minimize_sequential<F>(objective: F, grid: &GridSpec) -> Result<GridMin>
where
    F: Fn(&[f64]) -> f64,
{
    grid.validate()?;
    let n = grid.node_count() as usize;
    let (index, min) = par::argmin_range_sequential(n, |i| objective(&grid.node(i)))
        .ok_or(Error::InfeasibleGrid)?;
    finish(grid, index, min)
}

fn finish(grid: &GridSpec, index: usize, min: f64) -> Result<GridMin> {
    if !min.is_finite() {
        return Err(Error::InfeasibleGrid);
    }
    Ok(GridMin {
        argmin: grid.node(index),
        min,
        index,
    })
}

/// Zoom refinement: after the initial scan, each of `rounds` passes rescans a
/// window ten times narrower centred on the incumbent (never narrower than
/// two old grid steps on each side, so the incumbent's cell stays covered).
///
/// Assumes the objective is unimodal along the zoom path, which holds for
/// convex objectives. The reported minimum never increases across rounds.
pub fn grid_refine<F>(objective: F, grid: &GridSpec, rounds: usize) -> Result<GridMin>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let mut best = grid_minimize(&objective, grid)?;
    let mut g = grid.clone();
    for _ in 0..rounds {
        let mut lo = Vec::with_capacity(g.dim());
        let mut hi = Vec::with_capacity(g.dim());
        for k in 0..g.dim() {
            let width = g.hi[k] - g.lo[k];
            let half = (width / 20.0).max(2.0 * g.step(k));
            lo.push(best.argmin[k] - half);
            hi.push(best.argmin[k] + half);
        }
        let next_grid = GridSpec {
            lo,
            hi,
            points_per_axis: g.points_per_axis,
        };
        if next_grid.validate().is_err() {
            // window collapsed below floating-point resolution
            break;
        }
        let next = grid_minimize(&objective, &next_grid)?;
        if next.min <= best.min {
            best = next;
        }
        g = next_grid;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_on_grid() {
        let g = GridSpec::line(0.0, 4.0, 401).unwrap();
        let r = grid_minimize(|v| (v[0] - 2.0).powi(2), &g).unwrap();
        assert_eq!(r.argmin, vec![2.0]);
        assert_eq!(r.min, 0.0);
        let g = GridSpec::line(-1.0, 1.0, 201).unwrap();
        let r = grid_minimize(|v| v[0].abs(), &g).unwrap();
        assert_eq!(r.argmin, vec![0.0]);
        assert_eq!(r.min, 0.0);
    }

    #[test]
    fn soft_threshold_envelope_objective() {
        let obj = |v: &[f64]| 0.5 * (3.0 - v[0]).powi(2) + v[0].abs();
        let g = GridSpec::line(-10.0, 10.0, 20001).unwrap();
        let r = grid_minimize(obj, &g).unwrap();
        assert!((r.argmin[0] - 2.0).abs() <= 1e-3);
        assert!((r.min - 2.5).abs() <= 1e-3);
        let fine = grid_refine(obj, &g, 4).unwrap();
        assert!((fine.argmin[0] - 2.0).abs() <= 1e-8);
        assert!((fine.min - 2.5).abs() <= 1e-12);
    }

    #[test]
    fn refine_examples() {
        let r = grid_refine(
            |v| (v[0] - 2.0).powi(2),
            &GridSpec::line(0.0, 4.0, 41).unwrap(),
            4,
        )
        .unwrap();
        assert!((r.argmin[0] - 2.0).abs() <= 1e-6);
        let pi = std::f64::consts::PI;
        let r = grid_refine(
            |v| (v[0] - pi).abs(),
            &GridSpec::line(0.0, 10.0, 101).unwrap(),
            5,
        )
        .unwrap();
        assert!((r.argmin[0] - pi).abs() <= 1e-6, "{:?}", r);
    }

    #[test]
    fn refine_is_monotone_and_deterministic() {
        let obj = |v: &[f64]| (v[0] - 0.123456).powi(2) + (v[1] + 0.7).abs();
        let g = GridSpec::cube(2, -2.0, 2.0, 31).unwrap();
        let mut prev = f64::INFINITY;
        for rounds in 0..6 {
            let r = grid_refine(obj, &g, rounds).unwrap();
            assert!(r.min <= prev);
            prev = r.min;
            let again = grid_refine(obj, &g, rounds).unwrap();
            assert_eq!(r.argmin, again.argmin);
            assert_eq!(r.min.to_bits(), again.min.to_bits());
        }
    }

    #[test]
    fn infeasible_and_invalid_grids() {
        let g = GridSpec::line(0.0, 1.0, 11).unwrap();
        assert_eq!(
            grid_minimize(|_| f64::INFINITY, &g),
            Err(Error::InfeasibleGrid)
        );
        assert!(GridSpec::line(1.0, 0.0, 11).is_err());
        assert!(GridSpec::line(0.0, 1.0, 1).is_err());
        assert!(matches!(
            GridSpec::cube(3, 0.0, 1.0, 1000),
            Err(Error::Budget { .. })
        ));
    }

    #[test]
    fn ties_go_to_lowest_index_and_match_sequential() {
        let g = GridSpec::cube(2, -1.0, 1.0, 21).unwrap();
        // minimum 0 along the lines v0 = ±0.5; the first such node is (-0.5, -1)
        let obj = |v: &[f64]| (v[0].abs() - 0.5).abs();
        let a = grid_minimize(obj, &g).unwrap();
        let b = grid_minimize_sequential(obj, &g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.index, 5 * 21);
        assert_eq!(grid_minimize(|_| 1.0, &g).unwrap().index, 0);
    }

    #[test]
    fn symmetric_grid_hits_zero() {
        let g = GridSpec::line(-2.0, 2.0, 81).unwrap();
        assert_eq!(g.coord(0, 40), 0.0);
        assert_eq!(g.coord(0, 80), 2.0);
        assert!(g.is_boundary(0) && g.is_boundary(80) && !g.is_boundary(40));
        assert_eq!(
            GridSpec::cube(2, 0.0, 1.0, 3).unwrap().multi_index(5),
            vec![1, 2]
        );
    }
}
