//! Finite-dimensional Mosco convergence harness.
//!
//! In ℝⁿ weak and strong convergence coincide, so Mosco convergence of a
//! fixture family is certified through pointwise liminf and recovery checks on
//! grid nodes plus uniform envelope gaps on the grid. Both pointwise checks
//! estimate the limit in `n` by Richardson extrapolation of the values at
//! `n_max/2` and `n_max`, which removes the leading `1/n` term.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envelope::prox;
use crate::error::{Error, Result};
use crate::functions::{validate_convexity, AffinePiece, ConvexFn, ConvexityReport};
use crate::io::{ext_real, fmt_f64};
use crate::oracle::{self, GridSpec};
use crate::par;
use crate::spaces::{PowerParams, SpaceSpec};

/// Header attached to every pointwise and envelope report.
pub const SURROGATE_NOTE: &str = "finite-dimensional surrogate: weak and strong convergence coincide in R^n, \
so Mosco convergence is checked by pointwise liminf/recovery estimates on grid nodes and uniform envelope gaps on the grid";

/// Recovery search objective `|f_n(v) − f(u)| + λ‖v − u‖`. A small λ keeps
/// the distance term from tying with the value mismatch at `v = u`.
pub const RECOVERY_WEIGHT: f64 = 1e-3;
/// Out-of-domain envelope values must exceed this where the scale allows.
pub const DIVERGENCE_THRESHOLD: f64 = 1e3;

type Member = Arc<dyn Fn(usize) -> ConvexFn + Send + Sync>;

/// An indexed family `f_n` (n ≥ 1) with its declared limit.
#[derive(Clone)]
pub struct FunctionSequence {
    member: Member,
    limit: ConvexFn,
    label: String,
}

impl std::fmt::Debug for FunctionSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionSequence")
            .field("label", &self.label)
            .finish()
    }
}

impl FunctionSequence {
    pub fn new(
        label: impl Into<String>,
        member: impl Fn(usize) -> ConvexFn + Send + Sync + 'static,
        limit: ConvexFn,
    ) -> Self {
        Self {
            member: Arc::new(member),
            limit,
            label: label.into(),
        }
    }

    /// `f_n = f` for every n.
    pub fn constant(f: ConvexFn) -> Self {
        let g = f.clone();
        Self::new(format!("constant({})", f.label()), move |_| g.clone(), f)
    }

    pub fn member(&self, n: usize) -> ConvexFn {
        (self.member)(n)
    }

    pub fn limit(&self) -> &ConvexFn {
        &self.limit
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Convexity audit of `f_n` for each listed n and of the limit (last entry).
    pub fn validate(
        &self,
        ns: &[usize],
        dim: usize,
        samples: usize,
        seed: u64,
    ) -> Vec<ConvexityReport> {
        let mut out: Vec<ConvexityReport> = ns
            .iter()
            .map(|&n| validate_convexity(&self.member(n), dim, samples, seed))
            .collect();
        out.push(validate_convexity(&self.limit, dim, samples, seed));
        out
    }
}

/// A shipped family with the grid and ε schedule it is certified on.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub seq: FunctionSequence,
    pub space: SpaceSpec,
    pub grid: GridSpec,
    /// `ε_n` for [`diagonal_convergence`].
    pub eps_schedule: fn(usize) -> f64,
    /// First n from which envelope gaps are expected to be non-increasing.
    pub burn_in: usize,
}

pub const FIXTURE_NAMES: [&str; 7] = [
    "shifted_one_norm",
    "constant",
    "quadratic_offset",
    "scaled_quadratic",
    "shrinking_box",
    "growing_box",
    "max_affine_slopes",
];

/// Name of the extra divergence-branch fixture (constant `indicator_point(0)`).
pub const POINT_FIXTURE: &str = "point";

fn inv(n: usize) -> f64 {
    1.0 / n as f64
}

fn inv_sq(n: usize) -> f64 {
    1.0 / (n * n) as f64
}

/// Looks up a shipped fixture by name.
pub fn fixture(name: &str) -> Option<Fixture> {
    let space = SpaceSpec::euclidean(1);
    let grid = GridSpec::line(-2.0, 2.0, 81).expect("fixture grid is valid");
    let q =
        |a: f64, c: f64| ConvexFn::quadratic(vec![vec![a]], vec![0.0], c).expect("valid quadratic");
    let bx = |lo: f64, hi: f64| ConvexFn::indicator_box(vec![lo], vec![hi]).expect("valid box");
    let (seq, eps_schedule): (FunctionSequence, fn(usize) -> f64) = match name {
        "shifted_one_norm" => (
            FunctionSequence::new(
                name,
                |n| ConvexFn::shifted_one_norm(vec![inv(n)]),
                ConvexFn::one_norm(),
            ),
            inv,
        ),
        "constant" => (FunctionSequence::constant(ConvexFn::one_norm()), inv),
        "quadratic_offset" => (
            FunctionSequence::new(name, move |n| q(2.0, inv(n)), q(2.0, 0.0)),
            inv_sq,
        ),
        "scaled_quadratic" => (
            FunctionSequence::new(name, move |n| q(1.0 + inv(n), 0.0), q(1.0, 0.0)),
            inv,
        ),
        "shrinking_box" => (
            FunctionSequence::new(
                name,
                move |n| bx(-1.0 - inv(n), 1.0 + inv(n)),
                bx(-1.0, 1.0),
            ),
            inv_sq,
        ),
        "growing_box" => (
            FunctionSequence::new(
                name,
                move |n| bx(-1.0 + inv(n), 1.0 - inv(n)),
                bx(-1.0, 1.0),
            ),
            inv_sq,
        ),
        "max_affine_slopes" => {
            let member = |n: usize| {
                ConvexFn::max_affine_1d(&[(-1.0, 0.0), (1.0 + 0.5 * inv(n), 0.0)])
                    .expect("valid pieces")
            };
            let limit = ConvexFn::max_affine(vec![
                AffinePiece {
                    slope: vec![-1.0],
                    intercept: 0.0,
                },
                AffinePiece {
                    slope: vec![1.0],
                    intercept: 0.0,
                },
            ])
            .expect("valid pieces");
            (FunctionSequence::new(name, member, limit), inv)
        }
        POINT_FIXTURE => (
            FunctionSequence::constant(ConvexFn::indicator_point(vec![0.0]).expect("valid point")),
            inv_sq,
        ),
        _ => return None,
    };
    let name = FIXTURE_NAMES
        .iter()
        .chain([POINT_FIXTURE].iter())
        .find(|s| **s == name)?;
    Some(Fixture {
        name,
        seq,
        space,
        grid,
        eps_schedule,
        burn_in: 1,
    })
}

/// `(n2 a2 − n1 a1)/(n2 − n1)`: the limit of `a + c/n` from two samples.
fn richardson(n1: usize, a1: f64, n2: usize, a2: f64) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    (n2 * a2 - n1 * a1) / (n2 - n1)
}

fn sample_indices(n_max: usize) -> Result<Vec<usize>> {
    match n_max {
        0 => Err(Error::param("n_max must be positive")),
        1 => Ok(vec![1]),
        _ => Ok(vec![n_max / 2, n_max]),
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMargin {
    pub node: Vec<f64>,
    #[serde(with = "ext_real")]
    pub limit_value: f64,
    /// Extrapolated `lim f_n(u_n)` (liminf) or `lim f_n(û_n)` (recovery).
    #[serde(with = "ext_real")]
    pub estimate: f64,
    /// Amount by which the inequality fails; `≤ tol` passes.
    #[serde(with = "ext_real")]
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseReport {
    pub check: String,
    pub sequence: String,
    pub note: String,
    pub n_max: usize,
    pub tol: f64,
    pub nodes: Vec<NodeMargin>,
    #[serde(with = "ext_real")]
    pub worst_excess: f64,
    pub violations: usize,
}

impl PointwiseReport {
    fn finish(
        check: &str,
        seq: &FunctionSequence,
        n_max: usize,
        tol: f64,
        nodes: Vec<NodeMargin>,
    ) -> Self {
        let worst_excess = nodes
            .iter()
            .map(|m| m.excess)
            .fold(f64::NEG_INFINITY, f64::max);
        let violations = nodes.iter().filter(|m| !(m.excess <= tol)).count();
        Self {
            check: check.into(),
            sequence: seq.label().into(),
            note: SURROGATE_NOTE.into(),
            n_max,
            tol,
            nodes,
            worst_excess,
            violations,
        }
    }

    pub fn csv_header() -> [&'static str; 4] {
        ["n", "node", "margin", "estimate"]
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        self.nodes
            .iter()
            .map(|m| {
                vec![
                    self.n_max.to_string(),
                    m.node
                        .iter()
                        .map(|x| fmt_f64(*x))
                        .collect::<Vec<_>>()
                        .join(" "),
                    fmt_f64(m.excess),
                    fmt_f64(m.estimate),
                ]
            })
            .collect()
    }
}

/// Liminf inequality `f(u) ≤ liminf f_n(u_n)` along the forcing sequence
/// `u_n = argmin over grid of f_n(v) + n²‖v − u‖²`.
///
/// At nodes with `f(u) = +∞` the forcing sequence need not approach `u`, so the
/// check uses the penalized value `f_n(u_n) + n²‖u_n − u‖²` instead and
/// requires divergence: infinite at `n_max` or at least doubling from `n_max/2`.
pub fn liminf_check(
    seq: &FunctionSequence,
    grid: &GridSpec,
    n_max: usize,
    tol: f64,
) -> Result<PointwiseReport> {
    grid.validate()?;
    let ns = sample_indices(n_max)?;
    let nodes = grid.nodes();
    let member_vals: Vec<Vec<f64>> = ns
        .iter()
        .map(|&n| {
            let f = seq.member(n);
            par::map_slice(&nodes, |v| f.evaluate(v))
        })
        .collect();
    let margins = par::map_range(nodes.len(), |i| {
        let u = &nodes[i];
        let scans: Vec<(f64, f64)> = ns
            .iter()
            .zip(&member_vals)
            .map(|(&n, vals)| {
                let pen = (n * n) as f64;
                let mut best = (f64::INFINITY, f64::INFINITY);
                for (v, &fv) in nodes.iter().zip(vals) {
                    if fv.is_finite() {
                        let obj = fv + pen * sq_dist(u, v);
                        if obj < best.0 {
                            best = (obj, fv);
                        }
                    }
                }
                best
            })
            .collect();
        let limit_value = seq.limit().evaluate(u);
        let a: Vec<f64> = scans.iter().map(|s| s.1).collect();
        let penalized: Vec<f64> = scans.iter().map(|s| s.0).collect();
        let last = *a.last().expect("at least one sample");
        let estimate = if a.len() == 2 && a[0].is_finite() && a[1].is_finite() {
            richardson(ns[0], a[0], ns[1], a[1])
        } else {
            last
        };
        let excess = if limit_value.is_finite() {
            limit_value - estimate
        } else {
            let (first, last) = (
                penalized[0],
                *penalized.last().expect("at least one sample"),
            );
            let diverging = last == f64::INFINITY
                || (penalized.len() == 2 && first > 0.0 && last >= 2.0 * first);
            if diverging {
                0.0
            } else {
                f64::INFINITY
            }
        };
        NodeMargin {
            node: u.clone(),
            limit_value,
            estimate,
            excess,
        }
    });
    Ok(PointwiseReport::finish("liminf", seq, n_max, tol, margins))
}

/// Recovery inequality `limsup f_n(û_n) ≤ f(u)` with
/// `û_n = argmin over ‖v − u‖ ≤ 4(1 + ‖u‖)/n of |f_n(v) − f(u)| + λ‖v − u‖`,
/// found by grid refinement on the shrinking window.
pub fn recovery_check(
    seq: &FunctionSequence,
    grid: &GridSpec,
    n_max: usize,
    tol: f64,
) -> Result<PointwiseReport> {
    grid.validate()?;
    let ns = sample_indices(n_max)?;
    let members: Vec<ConvexFn> = ns.iter().map(|&n| seq.member(n)).collect();
    let nodes = grid.nodes();
    let margins = par::try_map_range(nodes.len(), |i| -> Result<NodeMargin> {
        let u = &nodes[i];
        let limit_value = seq.limit().evaluate(u);
        if !limit_value.is_finite() {
            return Ok(NodeMargin {
                node: u.clone(),
                limit_value,
                estimate: f64::NEG_INFINITY,
                excess: f64::NEG_INFINITY,
            });
        }
        let norm_u = sq_dist(u, &vec![0.0; u.len()]).sqrt();
        let mut b = Vec::with_capacity(ns.len());
        for (&n, f) in ns.iter().zip(&members) {
            let r = 4.0 * (1.0 + norm_u) / n as f64;
            let window = GridSpec::new(
                u.iter().map(|x| x - r).collect(),
                u.iter().map(|x| x + r).collect(),
                if u.len() == 1 { 41 } else { 21 },
            )?;
            let objective = |v: &[f64]| {
                (f.evaluate(v) - limit_value).abs() + RECOVERY_WEIGHT * sq_dist(u, v).sqrt()
            };
            let value = match oracle::grid_refine(objective, &window, 10) {
                Ok(best) => f.evaluate(&best.argmin),
                Err(Error::InfeasibleGrid) => f64::INFINITY,
                Err(e) => return Err(e),
            };
            b.push(value - limit_value);
        }
        let last = *b.last().expect("at least one sample");
        let excess = if b.len() == 2 && b.iter().all(|x| x.is_finite()) {
            richardson(ns[0], b[0], ns[1], b[1])
        } else {
            last
        };
        Ok(NodeMargin {
            node: u.clone(),
            limit_value,
            estimate: limit_value + excess,
            excess,
        })
    })?;
    Ok(PointwiseReport::finish(
        "recovery", seq, n_max, tol, margins,
    ))
}

fn envelope_values(
    f: &ConvexFn,
    space: &SpaceSpec,
    params: &PowerParams,
    nodes: &[Vec<f64>],
) -> Result<Vec<f64>> {
    par::map_slice(nodes, |u| {
        prox(f, space, params, u).map(|s| s.envelope_value)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n: usize,
    pub eps: f64,
    #[serde(with = "ext_real")]
    pub sup_gap: f64,
    /// Node attaining the sup.
    pub node: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub sequence: String,
    pub note: String,
    pub p: f64,
    pub rows: Vec<GapRow>,
    pub burn_in: usize,
    /// Steps after `burn_in` where the sup gap increased (slack 1e−12).
    pub monotone_violations: usize,
}

impl EnvelopeReport {
    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.sup_gap)
    }

    pub fn csv_header() -> [&'static str; 4] {
        ["n", "node", "gap", "eps"]
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        gap_rows_csv(&self.rows)
    }
}

fn gap_rows_csv(rows: &[GapRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.node
                    .iter()
                    .map(|x| fmt_f64(*x))
                    .collect::<Vec<_>>()
                    .join(" "),
                fmt_f64(r.sup_gap),
                fmt_f64(r.eps),
            ]
        })
        .collect()
}

fn sup_gap(values: &[f64], reference: &[f64], nodes: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let mut best = (0.0, nodes[0].clone());
    for ((a, b), u) in values.iter().zip(reference).zip(nodes) {
        if b.is_finite() {
            let g = (a - b).abs();
            if !(g <= best.0) {
                best = (g, u.clone());
            }
        }
    }
    best
}

/// `sup over grid of |f_n^ε(u) − f^ε(u)|` for `n = 1..=n_max`.
pub fn envelope_preserves(
    seq: &FunctionSequence,
    space: &SpaceSpec,
    params: &PowerParams,
    grid: &GridSpec,
    n_max: usize,
    burn_in: usize,
) -> Result<EnvelopeReport> {
    sample_indices(n_max)?;
    Error::check_dim(space.dim(), grid.dim())?;
    grid.validate()?;
    let nodes = grid.nodes();
    let reference = envelope_values(seq.limit(), space, params, &nodes)?;
    let rows = par::try_map_range(n_max, |k| -> Result<GapRow> {
        let n = k + 1;
        let vals = envelope_values(&seq.member(n), space, params, &nodes)?;
        let (sup_gap, node) = sup_gap(&vals, &reference, &nodes);
        Ok(GapRow {
            n,
            eps: params.eps(),
            sup_gap,
            node,
        })
    })?;
    let monotone_violations = rows
        .windows(2)
        .filter(|w| w[0].n >= burn_in && w[1].sup_gap > w[0].sup_gap + 1e-12)
        .count();
    Ok(EnvelopeReport {
        sequence: seq.label().into(),
        note: SURROGATE_NOTE.into(),
        p: params.p(),
        rows,
        burn_in,
        monotone_violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceSummary {
    /// Out-of-domain nodes whose own-member scale `dist^p/(p ε^{p−1})` exceeds the threshold at `n_max`.
    pub qualifying_nodes: usize,
    /// Smallest envelope value over the qualifying nodes.
    #[serde(with = "ext_real")]
    pub min_qualifying_value: f64,
    /// Out-of-domain nodes whose value did not grow from `n_max/2` to `n_max`.
    pub growth_failures: usize,
    pub out_of_domain_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalReport {
    pub sequence: String,
    pub p: f64,
    /// In-domain sup gaps `|f_n^{ε_n}(u) − f(u)|`.
    pub rows: Vec<GapRow>,
    pub divergence: Option<DivergenceSummary>,
}

impl DiagonalReport {
    pub fn final_gap(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.sup_gap)
    }

    pub fn csv_header() -> [&'static str; 4] {
        EnvelopeReport::csv_header()
    }

    pub fn csv_rows(&self) -> Vec<Vec<String>> {
        gap_rows_csv(&self.rows)
    }
}

/// Diagonal regularization `f_n^{ε_n}` against the limit `f`: uniform gaps on
/// in-domain nodes, divergence on out-of-domain nodes.
pub fn diagonal_convergence(
    seq: &FunctionSequence,
    space: &SpaceSpec,
    p: f64,
    eps_schedule: fn(usize) -> f64,
    grid: &GridSpec,
    n_max: usize,
) -> Result<DiagonalReport> {
    sample_indices(n_max)?;
    Error::check_dim(space.dim(), grid.dim())?;
    grid.validate()?;
    let nodes = grid.nodes();
    let limit: Vec<f64> = nodes.iter().map(|u| seq.limit().evaluate(u)).collect();
    let all = par::try_map_range(n_max, |k| -> Result<(GapRow, Vec<f64>)> {
        let n = k + 1;
        let eps = eps_schedule(n);
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::param(format!(
                "eps schedule must lie in (0, 1], got {eps} at n = {n}"
            )));
        }
        let vals = envelope_values(&seq.member(n), space, &PowerParams::new(p, eps)?, &nodes)?;
        let (sup_gap, node) = sup_gap(&vals, &limit, &nodes);
        Ok((
            GapRow {
                n,
                eps,
                sup_gap,
                node,
            },
            vals,
        ))
    })?;
    let outside: Vec<usize> = (0..nodes.len())
        .filter(|&i| !limit[i].is_finite())
        .collect();
    let divergence = if outside.is_empty() {
        None
    } else {
        let last = &all[n_max - 1].1;
        let eps = eps_schedule(n_max);
        let member = seq.member(n_max);
        let mut qualifying_nodes = 0;
        let mut min_qualifying_value = f64::INFINITY;
        for &i in &outside {
            let proj = member.feasible_point(&nodes[i]);
            let d: Vec<f64> = nodes[i].iter().zip(&proj).map(|(a, b)| a - b).collect();
            let scale = space.norm(&d)?.powf(p) / (p * eps.powf(p - 1.0));
            if scale > DIVERGENCE_THRESHOLD {
                qualifying_nodes += 1;
                min_qualifying_value = min_qualifying_value.min(last[i]);
            }
        }
        let growth_failures = if n_max >= 2 {
            let half = &all[n_max / 2 - 1].1;
            outside.iter().filter(|&&i| !(last[i] > half[i])).count()
        } else {
            0
        };
        Some(DivergenceSummary {
            qualifying_nodes,
            min_qualifying_value,
            growth_failures,
            out_of_domain_nodes: outside.len(),
        })
    };
    Ok(DiagonalReport {
        sequence: seq.label().into(),
        p,
        rows: all.into_iter().map(|(r, _)| r).collect(),
        divergence,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperlinearRow {
    pub radius: f64,
    #[serde(with = "ext_real")]
    pub ratio: f64,
}

/// 16 unit directions of `space` (coordinate axes with both signs first,
/// then fixed pseudo-random ones), deduplicated in one dimension.
pub fn unit_directions(space: &SpaceSpec, dual: bool) -> Vec<Vec<f64>> {
    let n = space.dim();
    let norm = |v: &[f64]| {
        if dual {
            space.dual_norm_unchecked(v)
        } else {
            space.norm_unchecked(v)
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1EC_0000 + n as u64);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(16);
    for k in 0..n.min(8) {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[k] = s;
            out.push(e);
        }
    }
    if n == 1 {
        return out;
    }
    while out.len() < 16 {
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if d.iter().any(|x| x.abs() > 0.1) {
            out.push(d);
        }
    }
    out.into_iter()
        .map(|d| {
            let nd = norm(&d);
            d.into_iter().map(|x| x / nd).collect()
        })
        .collect()
}

/// `inf over ε ∈ eps_set and ‖v‖ = R of f^ε(v)/R` for each radius.
pub fn superlinearity_profile(
    f: &ConvexFn,
    space: &SpaceSpec,
    p: f64,
    eps_set: &[f64],
    radii: &[f64],
) -> Result<Vec<SuperlinearRow>> {
    if eps_set.iter().any(|e| !(*e > 0.0 && *e <= 1.0)) {
        return Err(Error::param("eps_set values must lie in (0, 1]"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| *r <= 0.0) {
        return Err(Error::param("radii must be positive and increasing"));
    }
    let dirs = unit_directions(space, false);
    par::try_map_range(radii.len(), |k| {
        let r = radii[k];
        let mut ratio = f64::INFINITY;
        for &eps in eps_set {
            let params = PowerParams::new(p, eps)?;
            for d in &dirs {
                let v: Vec<f64> = d.iter().map(|x| r * x).collect();
                ratio = ratio.min(prox(f, space, &params, &v)?.envelope_value / r);
            }
        }
        Ok(SuperlinearRow { radius: r, ratio })
    })
}

/// `inf over ‖ξ‖_* = R of ((ε/p*)R^{p*} + f*(ξ))/R`, the conjugate of the
/// envelope divided by the dual norm.
pub fn conjugate_superlinearity(
    f: &ConvexFn,
    space: &SpaceSpec,
    params: &PowerParams,
    radii: &[f64],
) -> Result<Vec<SuperlinearRow>> {
    let dirs = unit_directions(space, true);
    radii
        .iter()
        .map(|&r| {
            let mut ratio = f64::INFINITY;
            for d in &dirs {
                let xi: Vec<f64> = d.iter().map(|x| r * x).collect();
                let c = f.conjugate(&xi).ok_or_else(|| {
                    Error::Unsupported(format!("{} has no analytic conjugate", f.label()))
                })?;
                ratio =
                    ratio.min((params.eps() / params.p_star() * r.powf(params.p_star()) + c) / r);
            }
            Ok(SuperlinearRow { radius: r, ratio })
        })
        .collect()
}
