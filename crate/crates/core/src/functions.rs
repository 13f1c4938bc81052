//! Proper, lower semicontinuous, convex test functions.
//!
//! Values live in the extended reals: `f64::INFINITY` marks points outside the
//! effective domain, and IEEE arithmetic gives `∞ + r = ∞`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::GridSpec;
use crate::par;
use crate::spaces::{dot, euclid, NormKind, PowerParams, SpaceSpec};

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type SubgradFn = Arc<dyn Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync>;

/// One affine piece `v ↦ ⟨slope, v⟩ + intercept` of a max-affine function.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

/// A user-supplied function given by closures.
#[derive(Clone)]
pub struct CustomFn {
    eval: EvalFn,
    subgradient: SubgradFn,
    smooth: bool,
    dim: Option<usize>,
}

impl CustomFn {
    /// `subgradient` returns `None` outside the domain of the subdifferential.
    /// Set `smooth` when `subgradient` is the gradient of a C¹ function.
    pub fn new(
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        subgradient: impl Fn(&[f64]) -> Option<Vec<f64>> + Send + Sync + 'static,
        smooth: bool,
    ) -> Self {
        Self {
            eval: Arc::new(eval),
            subgradient: Arc::new(subgradient),
            smooth,
            dim: None,
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = Some(dim);
        self
    }
}

#[derive(Clone)]
enum FnKind {
    Zero,
    Quadratic {
        a: DMatrix<f64>,
        b: Vec<f64>,
        c: f64,
        chol: Option<DMatrix<f64>>,
    },
    OneNorm {
        center: Option<Vec<f64>>,
    },
    IndicatorBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    IndicatorPoint {
        z: Vec<f64>,
    },
    MaxAffine {
        pieces: Vec<AffinePiece>,
    },
    PowerOfNorm {
        r: f64,
        space: SpaceSpec,
    },
    Custom(CustomFn),
}

/// A proper convex function with its subgradient selector and, for catalog
/// members, analytic conjugate and Euclidean proximal map.
#[derive(Clone)]
pub struct ConvexFn {
    kind: FnKind,
    label: String,
}

impl fmt::Debug for ConvexFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvexFn")
            .field("label", &self.label)
            .finish()
    }
}

impl ConvexFn {
    pub fn zero() -> Self {
        Self {
            kind: FnKind::Zero,
            label: "zero".into(),
        }
    }

    /// `v ↦ ½ vᵀAv + bᵀv + c` with `A` symmetric positive semidefinite.
    pub fn quadratic(a: Vec<Vec<f64>>, b: Vec<f64>, c: f64) -> Result<Self> {
        let n = b.len();
        if n == 0 || a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::param("quadratic needs a square A matching b"));
        }
        let a = DMatrix::from_fn(n, n, |i, j| a[i][j]);
        if (0..n).any(|i| {
            (0..n).any(|j| (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * (1.0 + a[(i, j)].abs()))
        }) {
            return Err(Error::param("quadratic matrix must be symmetric"));
        }
        if a.iter().chain(b.iter()).any(|x| !x.is_finite()) || !c.is_finite() {
            return Err(Error::param("quadratic coefficients must be finite"));
        }
        let eig = a.clone().symmetric_eigenvalues();
        let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = eig.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        if min_eig < -1e-12 * scale {
            return Err(Error::param(
                "quadratic matrix must be positive semidefinite",
            ));
        }
        let chol = if min_eig > 1e-12 * scale {
            a.clone().cholesky().map(|c| c.inverse())
        } else {
            None
        };
        Ok(Self {
            kind: FnKind::Quadratic { a, b, c, chol },
            label: "quadratic".into(),
        })
    }

    /// One-dimensional `v ↦ a v² / 2`.
    pub fn scalar_quadratic(a: f64) -> Result<Self> {
        Self::quadratic(vec![vec![a]], vec![0.0], 0.0)
    }

    pub fn one_norm() -> Self {
        Self {
            kind: FnKind::OneNorm { center: None },
            label: "one_norm".into(),
        }
    }

    /// `v ↦ ‖v − center‖₁`.
    pub fn shifted_one_norm(center: Vec<f64>) -> Self {
        Self {
            kind: FnKind::OneNorm {
                center: Some(center),
            },
            label: "one_norm".into(),
        }
    }

    pub fn indicator_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Error::check_dim(lo.len(), hi.len())?;
        if lo.is_empty()
            || lo
                .iter()
                .zip(&hi)
                .any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite())
        {
            return Err(Error::param("indicator_box needs finite lo <= hi"));
        }
        Ok(Self {
            kind: FnKind::IndicatorBox { lo, hi },
            label: "indicator_box".into(),
        })
    }

    pub fn indicator_point(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() || z.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("indicator_point needs a finite point"));
        }
        Ok(Self {
            kind: FnKind::IndicatorPoint { z },
            label: "indicator_point".into(),
        })
    }

    pub fn max_affine(pieces: Vec<AffinePiece>) -> Result<Self> {
        let d = pieces
            .first()
            .map(|p| p.slope.len())
            .ok_or_else(|| Error::param("max_affine needs a piece"))?;
        if d == 0 {
            return Err(Error::param("max_affine slopes must be non-empty"));
        }
        for p in &pieces {
            Error::check_dim(d, p.slope.len())?;
            if p.slope.iter().any(|x| !x.is_finite()) || !p.intercept.is_finite() {
                return Err(Error::param("max_affine coefficients must be finite"));
            }
        }
        Ok(Self {
            kind: FnKind::MaxAffine { pieces },
            label: "max_affine".into(),
        })
    }

    /// One-dimensional `v ↦ maxᵢ (sᵢ v + bᵢ)` from `(slope, intercept)` pairs.
    pub fn max_affine_1d(pieces: &[(f64, f64)]) -> Result<Self> {
        Self::max_affine(
            pieces
                .iter()
                .map(|&(s, b)| AffinePiece {
                    slope: vec![s],
                    intercept: b,
                })
                .collect(),
        )
    }

    /// `v ↦ ‖v‖^r / r` in `space`, `r ≥ 1`.
    pub fn power_of_norm(r: f64, space: SpaceSpec) -> Result<Self> {
        if !(r.is_finite() && r >= 1.0) {
            return Err(Error::param(format!("power_of_norm needs r >= 1, got {r}")));
        }
        Ok(Self {
            kind: FnKind::PowerOfNorm { r, space },
            label: "power_of_norm".into(),
        })
    }

    pub fn custom(f: CustomFn) -> Self {
        Self {
            kind: FnKind::Custom(f),
            label: "custom".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The dimension fixed by the function's data, if any.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            FnKind::Zero => None,
            FnKind::Quadratic { b, .. } => Some(b.len()),
            FnKind::OneNorm { center } => center.as_ref().map(Vec::len),
            FnKind::IndicatorBox { lo, .. } => Some(lo.len()),
            FnKind::IndicatorPoint { z } => Some(z.len()),
            FnKind::MaxAffine { pieces } => Some(pieces[0].slope.len()),
            FnKind::PowerOfNorm { space, .. } => Some(space.dim()),
            FnKind::Custom(c) => c.dim,
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.dim() {
            Some(d) => Error::check_dim(d, dim),
            None => Ok(()),
        }
    }

    /// Whether `subgradient` is the gradient of a C¹ function on the whole space.
    pub fn is_smooth(&self) -> bool {
        match &self.kind {
            FnKind::Zero | FnKind::Quadratic { .. } => true,
            FnKind::PowerOfNorm { r, .. } => *r > 1.0,
            FnKind::Custom(c) => c.smooth,
            _ => false,
        }
    }

    /// Whether the function is an indicator of a closed convex set.
    pub fn is_indicator(&self) -> bool {
        matches!(
            self.kind,
            FnKind::IndicatorBox { .. } | FnKind::IndicatorPoint { .. }
        )
    }

    pub fn evaluate(&self, v: &[f64]) -> f64 {
        match &self.kind {
            FnKind::Zero => 0.0,
            FnKind::Quadratic { a, b, c, .. } => {
                let x = DVector::from_column_slice(v);
                0.5 * x.dot(&(a * &x)) + dot(b, v) + c
            }
            FnKind::OneNorm { center } => match center {
                None => v.iter().map(|x| x.abs()).sum(),
                Some(c) => v.iter().zip(c).map(|(x, y)| (x - y).abs()).sum(),
            },
            FnKind::IndicatorBox { lo, hi } => {
                if v.iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(x, (l, h))| l <= x && x <= h)
                {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FnKind::IndicatorPoint { z } => {
                if v == z.as_slice() {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            FnKind::MaxAffine { pieces } => pieces
                .iter()
                .map(|p| dot(&p.slope, v) + p.intercept)
                .fold(f64::NEG_INFINITY, f64::max),
            FnKind::PowerOfNorm { r, space } => space.norm_unchecked(v).powf(*r) / r,
            FnKind::Custom(c) => {
                let y = (c.eval)(v);
                if y.is_nan() {
                    f64::INFINITY
                } else {
                    y
                }
            }
        }
    }

    pub fn domain_contains(&self, v: &[f64]) -> bool {
        self.evaluate(v) < f64::INFINITY
    }

    /// A point of the domain close to `near` (the Euclidean projection for indicators).
    pub fn feasible_point(&self, near: &[f64]) -> Vec<f64> {
        match &self.kind {
            FnKind::IndicatorBox { lo, hi } => near
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (l, h))| x.clamp(*l, *h))
                .collect(),
            FnKind::IndicatorPoint { z } => z.clone(),
            _ => near.to_vec(),
        }
    }

    /// One element of `∂f(v)`: the minimal Euclidean-norm element at kinks.
    pub fn subgradient(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        self.minimal_section(&SpaceSpec::euclidean(v.len()), v)
    }

    /// `argmin{‖ξ‖_* : ξ ∈ ∂f(v)}` for the dual norm of `space`.
    ///
    /// Box and interval subdifferentials are handled coordinatewise, which is
    /// exact for every norm family here since each is monotone in `|ξᵢ|`.
    /// Custom functions return their own selection.
    pub fn minimal_section(&self, space: &SpaceSpec, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v.len())?;
        Error::check_dim(space.dim(), v.len())?;
        let outside = || {
            Err(Error::Domain(format!(
                "{} has empty subdifferential at {v:?}",
                self.label
            )))
        };
        match &self.kind {
            FnKind::Zero => Ok(vec![0.0; v.len()]),
            FnKind::Quadratic { a, b, .. } => {
                let g = a * DVector::from_column_slice(v);
                Ok(g.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            FnKind::OneNorm { center } => Ok(v
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let d = x - center.as_ref().map_or(0.0, |c| c[i]);
                    if d == 0.0 {
                        0.0
                    } else {
                        d.signum()
                    }
                })
                .collect()),
            FnKind::IndicatorBox { .. } | FnKind::IndicatorPoint { .. } => {
                if self.domain_contains(v) {
                    Ok(vec![0.0; v.len()])
                } else {
                    outside()
                }
            }
            FnKind::MaxAffine { pieces } => max_affine_min_section(pieces, space, v),
            FnKind::PowerOfNorm { r, space: own } => {
                if *r > 1.0 {
                    Ok(own.duality_map_unchecked(*r, v))
                } else if own.norm_unchecked(v) == 0.0 {
                    Ok(vec![0.0; v.len()])
                } else {
                    let nv = own.norm_unchecked(v);
                    Ok(own
                        .duality_map_unchecked(2.0, v)
                        .into_iter()
                        .map(|x| x / nv)
                        .collect())
                }
            }
            FnKind::Custom(c) => match (c.subgradient)(v) {
                Some(g) => Ok(g),
                None => outside(),
            },
        }
    }

    /// Analytic Legendre–Fenchel conjugate, when known. May be `+inf`.
    pub fn conjugate(&self, xi: &[f64]) -> Option<f64> {
        const BALL_SLACK: f64 = 1e-12;
        match &self.kind {
            FnKind::Zero => Some(if xi.iter().all(|x| *x == 0.0) {
                0.0
            } else {
                f64::INFINITY
            }),
            FnKind::Quadratic { a, b, c, chol } => {
                let d = DVector::from_iterator(xi.len(), xi.iter().zip(b).map(|(x, y)| x - y));
                if let Some(inv) = chol {
                    Some(0.5 * d.dot(&(inv * &d)) - c)
                } else if a.iter().all(|x| *x == 0.0) {
                    Some(if d.iter().all(|x| *x == 0.0) {
                        -c
                    } else {
                        f64::INFINITY
                    })
                } else {
                    None
                }
            }
            FnKind::OneNorm { center } => {
                if xi.iter().all(|x| x.abs() <= 1.0 + BALL_SLACK) {
                    Some(center.as_ref().map_or(0.0, |c| dot(xi, c)))
                } else {
                    Some(f64::INFINITY)
                }
            }
            FnKind::IndicatorBox { lo, hi } => Some(
                xi.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(x, (l, h))| (x * l).max(x * h))
                    .sum(),
            ),
            FnKind::IndicatorPoint { z } => Some(dot(xi, z)),
            FnKind::MaxAffine { pieces } if xi.len() == 1 => {
                Some(max_affine_conjugate_1d(pieces, xi[0]))
            }
            FnKind::MaxAffine { .. } => None,
            FnKind::PowerOfNorm { r, space } => {
                let d = space.dual_norm_unchecked(xi);
                if *r > 1.0 {
                    let rs = r / (r - 1.0);
                    Some(d.powf(rs) / rs)
                } else if d <= 1.0 + BALL_SLACK {
                    Some(0.0)
                } else {
                    Some(f64::INFINITY)
                }
            }
            FnKind::Custom(_) => None,
        }
    }

    /// Euclidean proximal map `argmin_v { f(v) + ‖v − x‖² / (2 step) }`, when
    /// available in closed form or by exact active-set enumeration.
    pub fn euclidean_prox(&self, x: &[f64], step: f64) -> Option<Vec<f64>> {
        match &self.kind {
            FnKind::Zero => Some(x.to_vec()),
            FnKind::Quadratic { a, b, .. } => {
                let n = x.len();
                let m = DMatrix::identity(n, n) + a * step;
                let rhs = DVector::from_iterator(n, x.iter().zip(b).map(|(xi, bi)| xi - step * bi));
                m.cholesky()
                    .map(|c| c.solve(&rhs).iter().cloned().collect())
            }
            FnKind::OneNorm { center } => Some(
                x.iter()
                    .enumerate()
                    .map(|(i, xi)| {
                        let c = center.as_ref().map_or(0.0, |c| c[i]);
                        c + soft_threshold(xi - c, step)
                    })
                    .collect(),
            ),
            FnKind::IndicatorBox { .. } | FnKind::IndicatorPoint { .. } => {
                Some(self.feasible_point(x))
            }
            FnKind::MaxAffine { pieces } => max_affine_prox(pieces, x, step),
            FnKind::PowerOfNorm { r, space } if space.is_euclidean() => {
                Some(radial_power_prox(*r, x, step))
            }
            _ => None,
        }
    }

    /// Registered closed-form proximal points of the p-Moreau–Yosida objective
    /// `v ↦ ‖u − v‖^p / (p ε^{p−1}) + f(v)`.
    ///
    /// Available for the zero function and `indicator_point` in every space,
    /// and for `one_norm`, `quadratic` and `indicator_box` when `p = 2` in the
    /// Euclidean norm.
    pub fn prox_closed_form(
        &self,
        space: &SpaceSpec,
        params: &PowerParams,
        u: &[f64],
    ) -> Option<Vec<f64>> {
        match &self.kind {
            FnKind::Zero => Some(u.to_vec()),
            FnKind::IndicatorPoint { z } => Some(z.clone()),
            FnKind::OneNorm { .. } | FnKind::Quadratic { .. } | FnKind::IndicatorBox { .. }
                if params.p() == 2.0 && space.is_euclidean() =>
            {
                self.euclidean_prox(u, params.eps())
            }
            _ => None,
        }
    }

    /// Serializable description of catalog members.
    pub fn spec(&self) -> Option<FnSpec> {
        Some(match &self.kind {
            FnKind::Zero => FnSpec::Zero,
            FnKind::Quadratic { a, b, c, .. } => FnSpec::Quadratic {
                a: (0..b.len())
                    .map(|i| (0..b.len()).map(|j| a[(i, j)]).collect())
                    .collect(),
                b: Some(b.clone()),
                c: *c,
            },
            FnKind::OneNorm { center } => FnSpec::OneNorm {
                center: center.clone(),
            },
            FnKind::IndicatorBox { lo, hi } => FnSpec::IndicatorBox {
                lo: lo.clone(),
                hi: hi.clone(),
            },
            FnKind::IndicatorPoint { z } => FnSpec::IndicatorPoint { z: z.clone() },
            FnKind::MaxAffine { pieces } => FnSpec::MaxAffine {
                pieces: pieces
                    .iter()
                    .map(|p| {
                        let s = if p.slope.len() == 1 {
                            Slope::Scalar(p.slope[0])
                        } else {
                            Slope::Vector(p.slope.clone())
                        };
                        (s, p.intercept)
                    })
                    .collect(),
            },
            FnKind::PowerOfNorm { r, .. } => FnSpec::PowerOfNorm { r: *r },
            FnKind::Custom(_) => return None,
        })
    }

    /// Draws a point of the domain (uniform in the box for indicators, in
    /// `[−3, 3]^dim` around the data otherwise).
    pub(crate) fn sample_domain<R: Rng>(&self, rng: &mut R, dim: usize) -> Vec<f64> {
        match &self.kind {
            FnKind::IndicatorBox { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| {
                    if l == h {
                        *l
                    } else {
                        rng.random_range(*l..=*h)
                    }
                })
                .collect(),
            FnKind::IndicatorPoint { z } => z.clone(),
            FnKind::OneNorm { center: Some(c) } => {
                c.iter().map(|x| x + rng.random_range(-3.0..3.0)).collect()
            }
            _ => (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect(),
        }
    }
}

pub(crate) fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Euclidean prox of `step · ‖·‖^r / r`: radial, with radius `ρ` solving `ρ + step ρ^{r−1} = ‖x‖`.
fn radial_power_prox(r: f64, x: &[f64], step: f64) -> Vec<f64> {
    let nx = euclid(x);
    if nx == 0.0 {
        return x.to_vec();
    }
    let rho = if r == 1.0 {
        (nx - step).max(0.0)
    } else if r == 2.0 {
        nx / (1.0 + step)
    } else {
        let (mut lo, mut hi) = (0.0f64, nx);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + step * mid.powf(r - 1.0) > nx {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= f64::EPSILON * nx {
                break;
            }
        }
        0.5 * (lo + hi)
    };
    x.iter().map(|xi| xi * rho / nx).collect()
}

fn active_pieces(pieces: &[AffinePiece], v: &[f64]) -> Vec<usize> {
    let vals: Vec<f64> = pieces
        .iter()
        .map(|p| dot(&p.slope, v) + p.intercept)
        .collect();
    let m = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // exact ties only: a tolerance would return slopes that are not subgradients
    (0..pieces.len()).filter(|&i| vals[i] == m).collect()
}

/// Non-empty subsets of `items`, in lexicographic bitmask order.
fn subsets(items: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (1u32..(1u32 << items.len())).map(move |mask| {
        items
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, &i)| i)
            .collect()
    })
}

const MAX_ENUMERATED_PIECES: usize = 12;

/// Minimal dual-norm element of `conv{slopes of active pieces}`.
fn max_affine_min_section(
    pieces: &[AffinePiece],
    space: &SpaceSpec,
    v: &[f64],
) -> Result<Vec<f64>> {
    let active = active_pieces(pieces, v);
    if active.len() == 1 {
        return Ok(pieces[active[0]].slope.clone());
    }
    if v.len() == 1 {
        let (lo, hi) = active
            .iter()
            .map(|&i| pieces[i].slope[0])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
                (a.min(s), b.max(s))
            });
        return Ok(vec![0.0f64.clamp(lo, hi)]);
    }
    // Hilbert norms: exact min-norm point of the hull by enumerating faces,
    // after rescaling weighted coordinates to the plain Euclidean case.
    let scale: Vec<f64> = match space.norm_kind() {
        NormKind::Euclidean => vec![1.0; v.len()],
        NormKind::WeightedEuclidean { weights } => weights.iter().map(|w| 1.0 / w.sqrt()).collect(),
        NormKind::QNorm { .. } => {
            return Err(Error::Unsupported(
                "minimal section of a multi-piece max_affine kink under an lq dual norm".into(),
            ))
        }
    };
    if active.len() > MAX_ENUMERATED_PIECES {
        return Err(Error::Unsupported(
            "too many active max_affine pieces".into(),
        ));
    }
    let scaled = |i: usize| -> Vec<f64> {
        pieces[i]
            .slope
            .iter()
            .zip(&scale)
            .map(|(s, c)| s * c)
            .collect()
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for face in subsets(&active) {
        let k = face.len();
        let vecs: Vec<Vec<f64>> = face.iter().map(|&i| scaled(i)).collect();
        // [G 1; 1ᵀ 0][λ; μ] = [0; 1] with G the Gram matrix of the face
        let mut m = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = dot(&vecs[i], &vecs[j]);
            }
            m[(i, k)] = 1.0;
            m[(k, i)] = 1.0;
        }
        rhs[k] = 1.0;
        let Some(sol) = m.lu().solve(&rhs) else {
            continue;
        };
        if (0..k).any(|i| sol[i] < -1e-12 || !sol[i].is_finite()) {
            continue;
        }
        let xi: Vec<f64> = (0..v.len())
            .map(|d| {
                face.iter()
                    .enumerate()
                    .map(|(t, &i)| sol[t] * pieces[i].slope[d])
                    .sum()
            })
            .collect();
        let nrm = space.dual_norm_unchecked(&xi);
        if best.as_ref().is_none_or(|(b, _)| nrm < *b) {
            best = Some((nrm, xi));
        }
    }
    best.map(|(_, xi)| xi)
        .ok_or_else(|| Error::Unsupported("degenerate max_affine kink".into()))
}

/// Euclidean prox of a max-affine function by enumerating which pieces are
/// active at the solution: `v = x − step Σ λᵢ aᵢ` with the active values equal.
fn max_affine_prox(pieces: &[AffinePiece], x: &[f64], step: f64) -> Option<Vec<f64>> {
    if pieces.len() > MAX_ENUMERATED_PIECES {
        return None;
    }
    let n = x.len();
    let all: Vec<usize> = (0..pieces.len()).collect();
    let value = |v: &[f64]| -> f64 {
        let f = pieces
            .iter()
            .map(|p| dot(&p.slope, v) + p.intercept)
            .fold(f64::NEG_INFINITY, f64::max);
        f + v.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (2.0 * step)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for face in subsets(&all) {
        let k = face.len();
        if k > n + 1 {
            continue;
        }
        // unknowns λ₁..λ_k, t:  aᵢ·x − step Σⱼ (aᵢ·aⱼ) λⱼ + bᵢ − t = 0,  Σ λ = 1
        let mut m = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for (r, &i) in face.iter().enumerate() {
            for (c, &j) in face.iter().enumerate() {
                m[(r, c)] = step * dot(&pieces[i].slope, &pieces[j].slope);
            }
            m[(r, k)] = 1.0;
            rhs[r] = dot(&pieces[i].slope, x) + pieces[i].intercept;
        }
        for c in 0..k {
            m[(k, c)] = 1.0;
        }
        rhs[k] = 1.0;
        let Some(sol) = m.lu().solve(&rhs) else {
            continue;
        };
        if (0..k).any(|i| sol[i] < -1e-10 || !sol[i].is_finite()) {
            continue;
        }
        let v: Vec<f64> = (0..n)
            .map(|d| {
                x[d] - step
                    * face
                        .iter()
                        .enumerate()
                        .map(|(t, &i)| sol[t] * pieces[i].slope[d])
                        .sum::<f64>()
            })
            .collect();
        let t = face
            .iter()
            .map(|&i| dot(&pieces[i].slope, &v) + pieces[i].intercept)
            .fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-9 * (1.0 + t.abs());
        if pieces
            .iter()
            .any(|p| dot(&p.slope, &v) + p.intercept > t + tol)
        {
            continue;
        }
        let val = value(&v);
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, v));
        }
    }
    best.map(|(_, v)| v)
}

/// `f*(ξ) = inf{ −Σλᵢbᵢ : λ ∈ Δ, Σλᵢsᵢ = ξ }` for one-dimensional max-affine `f`.
fn max_affine_conjugate_1d(pieces: &[AffinePiece], xi: f64) -> f64 {
    let mut best = f64::INFINITY;
    for p in pieces {
        for q in pieces {
            let (s, t) = (p.slope[0], q.slope[0]);
            if s == xi {
                best = best.min(-p.intercept);
            } else if s < xi && xi < t {
                let w = (xi - s) / (t - s);
                best = best.min(-(1.0 - w) * p.intercept - w * q.intercept);
            }
        }
    }
    best
}

/// Scalar or vector slope in the JSON form of `max_affine`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Slope {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// JSON description of a catalog member, tagged by `"fn"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnSpec {
    Zero,
    OneNorm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    Quadratic {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(default)]
        b: Option<Vec<f64>>,
        #[serde(default)]
        c: f64,
    },
    IndicatorBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    MaxAffine {
        pieces: Vec<(Slope, f64)>,
    },
    IndicatorPoint {
        z: Vec<f64>,
    },
    PowerOfNorm {
        r: f64,
    },
}

impl FnSpec {
    /// Builds the function; `power_of_norm` takes its norm from `space`.
    pub fn build(&self, space: &SpaceSpec) -> Result<ConvexFn> {
        let f = match self {
            FnSpec::Zero => ConvexFn::zero(),
            FnSpec::OneNorm { center } => match center {
                Some(c) => ConvexFn::shifted_one_norm(c.clone()),
                None => ConvexFn::one_norm(),
            },
            FnSpec::Quadratic { a, b, c } => {
                let b = b.clone().unwrap_or_else(|| vec![0.0; a.len()]);
                ConvexFn::quadratic(a.clone(), b, *c)?
            }
            FnSpec::IndicatorBox { lo, hi } => ConvexFn::indicator_box(lo.clone(), hi.clone())?,
            FnSpec::MaxAffine { pieces } => ConvexFn::max_affine(
                pieces
                    .iter()
                    .map(|(s, b)| AffinePiece {
                        slope: match s {
                            Slope::Scalar(x) => vec![*x],
                            Slope::Vector(v) => v.clone(),
                        },
                        intercept: *b,
                    })
                    .collect(),
            )?,
            FnSpec::IndicatorPoint { z } => ConvexFn::indicator_point(z.clone())?,
            FnSpec::PowerOfNorm { r } => ConvexFn::power_of_norm(*r, space.clone())?,
        };
        f.check_dim(space.dim())?;
        Ok(f)
    }
}

/// Brute-force conjugate `max over grid nodes of ⟨ξ, v⟩ − f(v)`.
///
/// Fails with a coverage error when the maximum is attained only on the grid
/// boundary, since the true supremum may then lie outside.
pub fn conjugate_numeric<F>(f: F, xi: &[f64], grid: &GridSpec) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    conjugate_on_nodes(grid, xi, |i| f(&grid.node(i)))
}

/// [`conjugate_numeric`] with the function given by its value at each global node index.
pub(crate) fn conjugate_on_nodes<F>(grid: &GridSpec, xi: &[f64], value_at: F) -> Result<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    Error::check_dim(grid.dim(), xi.len())?;
    grid.validate()?;
    let n = grid.node_count() as usize;
    let objective = |i: usize| value_at(i) - dot(xi, &grid.node(i));
    let (index, min) = par::argmin_range(n, objective).ok_or(Error::InfeasibleGrid)?;
    if !min.is_finite() {
        return Err(Error::InfeasibleGrid);
    }
    if grid.is_boundary(index) {
        let interior = par::argmin_range(n, |i| {
            if grid.is_boundary(i) {
                f64::INFINITY
            } else {
                objective(i)
            }
        });
        match interior {
            Some((_, m)) if m <= min => {}
            _ => {
                return Err(Error::Coverage {
                    node: grid.node(index),
                })
            }
        }
    }
    Ok(-min)
}

/// Category of a failed convexity probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Properness,
    Convexity,
    SubgradientInequality,
    FenchelYoung,
    FenchelYoungEquality,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityViolation {
    pub kind: ViolationKind,
    pub witness: Vec<Vec<f64>>,
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub label: String,
    pub checks: usize,
    pub violations: Vec<ConvexityViolation>,
}

impl ConvexityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Randomized audit of the convex-analysis hypotheses: midpoint convexity at
/// `t ∈ {¼, ½, ¾}`, the subgradient inequality, properness, and the
/// Fenchel–Young inequality (with equality at the selected subgradient) when
/// an analytic conjugate exists. Violations are data, not errors.
pub fn validate_convexity(f: &ConvexFn, dim: usize, samples: usize, seed: u64) -> ConvexityReport {
    const SLACK: f64 = 1e-9;
    let per_sample = par::map_range(samples, |k| {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let v = f.sample_domain(&mut rng, dim);
        let w = f.sample_domain(&mut rng, dim);
        let xi: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut checks = 0;
        let mut found = Vec::new();
        let (fv, fw) = (f.evaluate(&v), f.evaluate(&w));
        if fv.is_finite() && fw.is_finite() {
            for t in [0.25, 0.5, 0.75] {
                checks += 1;
                let m: Vec<f64> = v
                    .iter()
                    .zip(&w)
                    .map(|(a, b)| t * a + (1.0 - t) * b)
                    .collect();
                let excess = f.evaluate(&m) - (t * fv + (1.0 - t) * fw);
                if excess > SLACK {
                    found.push(ConvexityViolation {
                        kind: ViolationKind::Convexity,
                        witness: vec![v.clone(), w.clone(), vec![t]],
                        amount: excess,
                    });
                }
            }
        }
        if fv.is_finite() {
            if let Ok(g) = f.subgradient(&v) {
                checks += 1;
                let lin: f64 = fv + dot(&g, &w) - dot(&g, &v);
                let deficit = lin - fw;
                if deficit > SLACK {
                    found.push(ConvexityViolation {
                        kind: ViolationKind::SubgradientInequality,
                        witness: vec![v.clone(), w.clone()],
                        amount: deficit,
                    });
                }
                if let Some(cg) = f.conjugate(&g) {
                    checks += 1;
                    let gap = (fv + cg - dot(&g, &v)).abs();
                    if gap > 1e-8 * (1.0 + fv.abs()) || !gap.is_finite() {
                        found.push(ConvexityViolation {
                            kind: ViolationKind::FenchelYoungEquality,
                            witness: vec![v.clone(), g],
                            amount: gap,
                        });
                    }
                }
            }
            if let Some(cx) = f.conjugate(&xi) {
                checks += 1;
                let deficit = dot(&xi, &v) - fv - cx;
                if deficit > SLACK {
                    found.push(ConvexityViolation {
                        kind: ViolationKind::FenchelYoung,
                        witness: vec![v.clone(), xi.clone()],
                        amount: deficit,
                    });
                }
            }
        }
        (checks, found, fv.is_finite() || fw.is_finite())
    });
    let mut report = ConvexityReport {
        label: f.label().to_string(),
        checks: 0,
        violations: Vec::new(),
    };
    let mut proper = false;
    for (c, v, finite) in per_sample {
        report.checks += c;
        report.violations.extend(v);
        proper |= finite;
    }
    report.checks += 1;
    if !proper {
        report.violations.push(ConvexityViolation {
            kind: ViolationKind::Properness,
            witness: vec![],
            amount: f64::INFINITY,
        });
    }
    report
}
