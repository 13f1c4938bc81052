//! Lax–Oleinik solutions of `u_t + (1/p*)‖d_x u‖_*^{p*} = 0, u(0) = f`.
//!
//! The solution at time `t` is the envelope with `ε = t`, so field values come
//! straight from [`prox`] and match envelope values bit for bit.

use serde::{Deserialize, Serialize};

use crate::envelope::prox;
use crate::error::{Error, Result};
use crate::functions::ConvexFn;
use crate::io::{ext_real_vec, fmt_f64};
use crate::oracle::GridSpec;
use crate::par;
use crate::spaces::{conjugate_exponent, PowerParams, SpaceSpec};

/// `|second central difference| > KINK_FACTOR · h` marks a kink node.
pub const KINK_FACTOR: f64 = 10.0;

/// Values `u(t, x)` over `t_values × x_grid`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeField {
    pub x_grid: GridSpec,
    pub t_values: Vec<f64>,
    /// `values[i][j]` is `u(t_i, node j)`.
    pub values: Vec<Values>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Values(#[serde(with = "ext_real_vec")] pub Vec<f64>);

impl SpaceTimeField {
    pub fn value(&self, ti: usize, node: usize) -> f64 {
        self.values[ti].0[node]
    }

    pub fn csv_header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string()];
        h.extend((0..self.x_grid.dim()).map(|k| format!("x{k}")));
        h.push("u".into());
        h
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for (ti, t) in self.t_values.iter().enumerate() {
            for j in 0..self.x_grid.node_count() as usize {
                let mut row = vec![fmt_f64(*t)];
                row.extend(self.x_grid.node(j).into_iter().map(fmt_f64));
                row.push(fmt_f64(self.value(ti, j)));
                rows.push(row);
            }
        }
        rows
    }
}

/// `u(t, x) = inf_y (t/p)‖(x − y)/t‖^p + f(y)` on the product grid.
pub fn lax_oleinik(
    f: &ConvexFn,
    space: &SpaceSpec,
    p: f64,
    x_grid: &GridSpec,
    t_values: &[f64],
) -> Result<SpaceTimeField> {
    x_grid.validate()?;
    Error::check_dim(space.dim(), x_grid.dim())?;
    if x_grid.dim() > 2 {
        return Err(Error::Unsupported(
            "space-time fields are limited to 1 or 2 space dimensions".into(),
        ));
    }
    if t_values.is_empty() || t_values[0] <= 0.0 || t_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(
            "t_values must be positive and strictly increasing",
        ));
    }
    let nodes = x_grid.nodes();
    let mut values = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let params = PowerParams::new(p, t)?;
        let row: Result<Vec<f64>> = par::map_slice(&nodes, |x| {
            prox(f, space, &params, x).map(|s| s.envelope_value)
        })
        .into_iter()
        .collect();
        values.push(Values(row?));
    }
    Ok(SpaceTimeField {
        x_grid: x_grid.clone(),
        t_values: t_values.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjResidual {
    /// Max `|u_t + (1/p*)‖d_x u‖_*^{p*}|` over smooth interior nodes.
    pub max_residual: f64,
    /// Smooth interior nodes included in the max.
    pub interior_count: usize,
    /// Interior nodes excluded as kinks.
    pub kink_count: usize,
    /// Larger of the t and x steps.
    pub h: f64,
}

/// Central-difference residual of the HJ equation at interior nodes.
pub fn hj_residual(field: &SpaceTimeField, space: &SpaceSpec, p: f64) -> Result<HjResidual> {
    let g = &field.x_grid;
    Error::check_dim(space.dim(), g.dim())?;
    let nt = field.t_values.len();
    if nt < 3 || g.points_per_axis < 3 {
        return Err(Error::param(
            "residual needs at least 3 t-values and 3 x-nodes per axis",
        ));
    }
    let p_star = conjugate_exponent(p);
    let n = g.points_per_axis;
    let dim = g.dim();
    let dt_max = field
        .t_values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0, f64::max);
    let h = dt_max.max(g.max_step());
    let stride: Vec<usize> = (0..dim).map(|k| n.pow((dim - 1 - k) as u32)).collect();
    let interior: Vec<usize> = (0..g.node_count() as usize)
        .filter(|&j| !g.is_boundary(j))
        .collect();

    // (residual or None if kink) per interior (t, x) node
    let per_t = par::map_range(nt - 2, |i| {
        let ti = i + 1;
        let (tm, tp) = (field.t_values[ti - 1], field.t_values[ti + 1]);
        let (dtm, dtp) = (field.t_values[ti] - tm, tp - field.t_values[ti]);
        interior
            .iter()
            .map(|&j| {
                let u0 = field.value(ti, j);
                let (um, up) = (field.value(ti - 1, j), field.value(ti + 1, j));
                let mut kink = (dtm * (up - u0) / dtp - (u0 - um)).abs() > KINK_FACTOR * h;
                let ut = (up - um) / (tp - tm);
                let mut grad = vec![0.0; dim];
                for k in 0..dim {
                    let (a, b) = (
                        field.value(ti, j - stride[k]),
                        field.value(ti, j + stride[k]),
                    );
                    kink |= (b - 2.0 * u0 + a).abs() > KINK_FACTOR * h;
                    grad[k] = (b - a) / (2.0 * g.step(k));
                }
                if kink {
                    None
                } else {
                    Some((ut + space.dual_norm_unchecked(&grad).powf(p_star) / p_star).abs())
                }
            })
            .collect::<Vec<_>>()
    });
    let mut max_residual: f64 = 0.0;
    let (mut interior_count, mut kink_count) = (0, 0);
    for r in per_t.into_iter().flatten() {
        match r {
            Some(r) => {
                interior_count += 1;
                max_residual = if r.is_nan() {
                    f64::NAN
                } else {
                    max_residual.max(r)
                };
            }
            None => kink_count += 1,
        }
    }
    Ok(HjResidual {
        max_residual,
        interior_count,
        kink_count,
        h,
    })
}

/// `n` equispaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}
