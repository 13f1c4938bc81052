//! Norms, dual norms and p-duality maps on ℝⁿ.
//!
//! Three strictly convex, smooth norm families are supported: Euclidean,
//! ℓq with `1 < q < ∞`, and weighted Euclidean `‖v‖² = Σ wᵢ vᵢ²`. The dual
//! space is identified with ℝⁿ through the dot product.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm family of a [`SpaceSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum NormKind {
    Euclidean,
    QNorm { q: f64 },
    WeightedEuclidean { weights: Vec<f64> },
}

/// A finite-dimensional normed space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct SpaceSpec {
    dim: usize,
    norm: NormKind,
}

impl SpaceSpec {
    pub fn new(dim: usize, norm: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dimension must be at least 1"));
        }
        match &norm {
            NormKind::Euclidean => {}
            NormKind::QNorm { q } => {
                if !(q.is_finite() && *q > 1.0) {
                    return Err(Error::param(format!("q must lie in (1, inf), got {q}")));
                }
            }
            NormKind::WeightedEuclidean { weights } => {
                Error::check_dim(dim, weights.len())?;
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return Err(Error::param("weights must be finite and positive"));
                }
            }
        }
        Ok(Self { dim, norm })
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(dim, NormKind::Euclidean).expect("dim >= 1")
    }

    pub fn q_norm(dim: usize, q: f64) -> Result<Self> {
        Self::new(dim, NormKind::QNorm { q })
    }

    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        Self::new(weights.len(), NormKind::WeightedEuclidean { weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm_kind(&self) -> &NormKind {
        &self.norm
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.norm, NormKind::Euclidean)
    }

    /// Conjugate exponent of the ℓq family (`None` for the Hilbert families).
    pub fn dual_exponent(&self) -> Option<f64> {
        match self.norm {
            NormKind::QNorm { q } => Some(conjugate_exponent(q)),
            _ => None,
        }
    }

    /// Same norm family in another dimension. Weighted spaces cannot be resized.
    pub fn with_dim(&self, dim: usize) -> Result<Self> {
        match &self.norm {
            NormKind::WeightedEuclidean { weights } if weights.len() != dim => {
                Err(Error::Dimension {
                    expected: weights.len(),
                    got: dim,
                })
            }
            n => Self::new(dim, n.clone()),
        }
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        Error::check_dim(self.dim, v.len())
    }

    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        Ok(self.norm_unchecked(v))
    }

    pub fn dual_norm(&self, xi: &[f64]) -> Result<f64> {
        self.check(xi)?;
        Ok(self.dual_norm_unchecked(xi))
    }

    pub(crate) fn norm_unchecked(&self, v: &[f64]) -> f64 {
        match &self.norm {
            NormKind::Euclidean => euclid(v),
            NormKind::QNorm { q } => lq(v, *q),
            NormKind::WeightedEuclidean { weights } => v
                .iter()
                .zip(weights)
                .map(|(x, w)| w * x * x)
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub(crate) fn dual_norm_unchecked(&self, xi: &[f64]) -> f64 {
        match &self.norm {
            NormKind::Euclidean => euclid(xi),
            NormKind::QNorm { q } => lq(xi, conjugate_exponent(*q)),
            NormKind::WeightedEuclidean { weights } => xi
                .iter()
                .zip(weights)
                .map(|(x, w)| x * x / w)
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// The p-duality map `F^p(v) = ∂(‖·‖^p / p)(v)`.
    ///
    /// The result `ξ` satisfies `⟨ξ, v⟩ = ‖v‖^p = ‖ξ‖_*^{p*}`, and `F^p(0) = 0`.
    /// The power `p` is independent of the ℓq exponent of the norm.
    pub fn duality_map(&self, p: f64, v: &[f64]) -> Result<Vec<f64>> {
        check_power(p)?;
        self.check(v)?;
        Ok(self.duality_map_unchecked(p, v))
    }

    pub(crate) fn duality_map_unchecked(&self, p: f64, v: &[f64]) -> Vec<f64> {
        let nv = self.norm_unchecked(v);
        if nv == 0.0 {
            return vec![0.0; v.len()];
        }
        let scale = nv.powf(p - 1.0);
        match &self.norm {
            NormKind::Euclidean => v.iter().map(|x| scale * x / nv).collect(),
            NormKind::WeightedEuclidean { weights } => v
                .iter()
                .zip(weights)
                .map(|(x, w)| scale * w * x / nv)
                .collect(),
            // ξᵢ = ‖v‖^{p-1} (|vᵢ|/‖v‖)^{q-1} sgn(vᵢ); the q-1 > 0 power sends vᵢ = 0 to 0.
            NormKind::QNorm { q } => v
                .iter()
                .map(|x| {
                    let r = x.abs() / nv;
                    scale * r.powf(q - 1.0) * x.signum()
                })
                .collect(),
        }
    }

    /// Both sides of the monotonicity inequality of the duality map:
    /// `lhs = ⟨F^p(u) − F^p(v), u − v⟩`, `rhs = (‖u‖^{p−1} − ‖v‖^{p−1})(‖u‖ − ‖v‖)`.
    pub fn duality_monotonicity_gap(&self, p: f64, u: &[f64], v: &[f64]) -> Result<(f64, f64)> {
        check_power(p)?;
        self.check(u)?;
        self.check(v)?;
        let fu = self.duality_map_unchecked(p, u);
        let fv = self.duality_map_unchecked(p, v);
        let lhs = fu
            .iter()
            .zip(&fv)
            .zip(u.iter().zip(v))
            .map(|((a, b), (x, y))| (a - b) * (x - y))
            .sum();
        let (nu, nv) = (self.norm_unchecked(u), self.norm_unchecked(v));
        let rhs = (nu.powf(p - 1.0) - nv.powf(p - 1.0)) * (nu - nv);
        Ok((lhs, rhs))
    }
}

/// The pair `(p, ε)` of a p-Moreau–Yosida regularization together with `p* = p/(p−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerParams {
    p: f64,
    eps: f64,
    p_star: f64,
}

impl PowerParams {
    pub fn new(p: f64, eps: f64) -> Result<Self> {
        check_power(p)?;
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::param(format!(
                "eps must be positive and finite, got {eps}"
            )));
        }
        Ok(Self {
            p,
            eps,
            p_star: conjugate_exponent(p),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.p, eps)
    }
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

pub(crate) fn check_power(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "power p must lie in (1, inf), got {p}"
        )))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn lq(v: &[f64], q: f64) -> f64 {
    let m = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * v
        .iter()
        .map(|x| (x.abs() / m).powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    dim: usize,
    norm: NormRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NormRepr {
    Name(String),
    Q { q: f64 },
    Weights { weights: Vec<f64> },
}

impl TryFrom<SpaceRepr> for SpaceSpec {
    type Error = Error;

    fn try_from(r: SpaceRepr) -> Result<Self> {
        let norm = match r.norm {
            NormRepr::Name(s) if s == "euclidean" => NormKind::Euclidean,
            NormRepr::Name(s) => return Err(Error::param(format!("unknown norm '{s}'"))),
            NormRepr::Q { q } => NormKind::QNorm { q },
            NormRepr::Weights { weights } => NormKind::WeightedEuclidean { weights },
        };
        SpaceSpec::new(r.dim, norm)
    }
}

impl From<SpaceSpec> for SpaceRepr {
    fn from(s: SpaceSpec) -> Self {
        let norm = match s.norm {
            NormKind::Euclidean => NormRepr::Name("euclidean".into()),
            NormKind::QNorm { q } => NormRepr::Q { q },
            NormKind::WeightedEuclidean { weights } => NormRepr::Weights { weights },
        };
        SpaceRepr { dim: s.dim, norm }
    }
}
