//! The constraint-set description language and its geometric oracles.
//!
//! A [`SetSpec`] describes a non-empty bounded subset of `R^n` as a tree of
//! primitives (points, balls, boxes, segments, ellipsoids, ℓ¹ balls, convex
//! hulls) and combinators (scaling, translation, products, unions, Minkowski
//! sums). Every spec exposes:
//!
//! * [`SetSpec::dist`] — Euclidean distance to the closed set;
//! * [`SetSpec::project`] — a nearest point of the set;
//! * [`SetSpec::support`] — the support function `h_A(x) = sup_θ ⟨θ, x⟩`;
//! * [`SetSpec::sup_quadratic`] — `sup_θ [⟨θ,x⟩ − ‖θ‖²/2]`, the exponent of
//!   the Gaussian representation used by the Monte Carlo regret estimator;
//! * [`SetSpec::diameter`] — exact for primitives, a flagged upper bound for
//!   composites.
//!
//! All oracles are pure functions over immutable specs and safe to call
//! concurrently. Specs serialize as JSON with a `type` discriminator, e.g.
//! `{"type":"ellipsoid","axes":[3,1,0.5]}`; see [`parse_spec`].

mod ellipsoid;
mod hull;

pub(crate) use ellipsoid::project_to_ellipsoid;
pub(crate) use hull::project_to_hull;

use crate::num::{dist_sq, dot, norm};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Maximum nesting depth accepted by [`SetSpec::validate`].
const MAX_DEPTH: usize = 64;
/// Cap on the size of an explicitly enumerated Minkowski sumset.
const MAX_SUMSET: usize = 100_000;

/// Description of a non-empty bounded subset of `R^n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetSpec {
    /// A single point.
    Point { at: Vec<f64> },
    /// A finite set of points, all of the same dimension.
    FinitePoints { points: Vec<Vec<f64>> },
    /// Closed Euclidean ball.
    Ball { center: Vec<f64>, radius: f64 },
    /// Axis-aligned box `[corner, corner + sides]`.
    Box { corner: Vec<f64>, sides: Vec<f64> },
    /// Closed segment between two points.
    Segment { endpoints: [Vec<f64>; 2] },
    /// Axis-aligned solid ellipsoid with semi-axes sorted non-increasing.
    Ellipsoid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        axes: Vec<f64>,
    },
    /// Scaled ℓ¹ ball `{x : ‖x‖₁ ≤ alpha}` in the given dimension.
    L1Ball { alpha: f64, dim: usize },
    /// Convex hull of finitely many points.
    ConvexHull { points: Vec<Vec<f64>> },
    /// Dilation `factor · inner` with `factor > 0`.
    Scale { factor: f64, inner: Box<SetSpec> },
    /// Translation `inner + by`.
    Translate { by: Vec<f64>, inner: Box<SetSpec> },
    /// Cartesian product; the dimension is the sum of part dimensions.
    Product { parts: Vec<SetSpec> },
    /// Union of same-dimension parts.
    Union { parts: Vec<SetSpec> },
    /// Minkowski sum of same-dimension parts.
    ///
    /// Distance is supported when at most one part is not a ball (balls are
    /// merged exactly) or when every part is a finite point set (the sumset
    /// is enumerated); other compositions report an unsupported-composition
    /// error rather than an approximation.
    MinkowskiSum { parts: Vec<SetSpec> },
}

/// A diameter value together with its exactness flag: `exact` for primitives
/// and products of primitives, an upper bound (via bounding balls) otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiameterBound {
    pub value: f64,
    pub exact: bool,
}

/// Parse and validate a JSON spec document.
pub fn parse_spec(json: &str) -> Result<SetSpec> {
    let spec: SetSpec =
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("spec JSON: {e}")))?;
    spec.validate()?;
    Ok(spec)
}

/// Serialize a spec to its JSON document form.
pub fn spec_to_json(spec: &SetSpec) -> String {
    serde_json::to_string(spec).expect("spec serialization is infallible")
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl SetSpec {
    /// Ambient dimension. Valid only on validated specs (a malformed spec may
    /// report an arbitrary value here but never panics).
    pub fn dim(&self) -> usize {
        match self {
            SetSpec::Point { at } => at.len(),
            SetSpec::FinitePoints { points } => points.first().map_or(0, Vec::len),
            SetSpec::Ball { center, .. } => center.len(),
            SetSpec::Box { corner, .. } => corner.len(),
            SetSpec::Segment { endpoints } => endpoints[0].len(),
            SetSpec::Ellipsoid { axes, .. } => axes.len(),
            SetSpec::L1Ball { dim, .. } => *dim,
            SetSpec::ConvexHull { points } => points.first().map_or(0, Vec::len),
            SetSpec::Scale { inner, .. } => inner.dim(),
            SetSpec::Translate { by, .. } => by.len(),
            SetSpec::Product { parts } => parts.iter().map(SetSpec::dim).sum(),
            SetSpec::Union { parts } | SetSpec::MinkowskiSum { parts } => {
                parts.first().map_or(0, SetSpec::dim)
            }
        }
    }

    /// Check every structural invariant: non-empty, bounded, finite
    /// coordinates, consistent dimensions, positive sizes, sorted ellipsoid
    /// axes, bounded nesting.
    pub fn validate(&self) -> Result<()> {
        self.validate_depth(0)
    }

    fn validate_depth(&self, depth: usize) -> Result<()> {
        if depth > MAX_DEPTH {
            return Err(Error::InvalidSpec(format!("nesting deeper than {MAX_DEPTH}")));
        }
        let positive_dim = |d: usize| {
            if d == 0 {
                Err(Error::InvalidSpec("dimension must be at least 1".into()))
            } else {
                Ok(())
            }
        };
        match self {
            SetSpec::Point { at } => {
                positive_dim(at.len())?;
                if !all_finite(at) {
                    return Err(Error::InvalidSpec("point has non-finite coordinate".into()));
                }
            }
            SetSpec::FinitePoints { points } | SetSpec::ConvexHull { points } => {
                let first = points
                    .first()
                    .ok_or_else(|| Error::InvalidSpec("empty point list".into()))?;
                positive_dim(first.len())?;
                for p in points {
                    if p.len() != first.len() {
                        return Err(Error::InvalidSpec("points of mixed dimension".into()));
                    }
                    if !all_finite(p) {
                        return Err(Error::InvalidSpec("non-finite point coordinate".into()));
                    }
                }
            }
            SetSpec::Ball { center, radius } => {
                positive_dim(center.len())?;
                if !all_finite(center) || !radius.is_finite() || *radius <= 0.0 {
                    return Err(Error::InvalidSpec("ball needs finite center, radius > 0".into()));
                }
            }
            SetSpec::Box { corner, sides } => {
                positive_dim(corner.len())?;
                if corner.len() != sides.len() {
                    return Err(Error::InvalidSpec("box corner/sides length mismatch".into()));
                }
                if !all_finite(corner) || !sides.iter().all(|s| s.is_finite() && *s > 0.0) {
                    return Err(Error::InvalidSpec("box needs finite corner, sides > 0".into()));
                }
            }
            SetSpec::Segment { endpoints } => {
                positive_dim(endpoints[0].len())?;
                if endpoints[0].len() != endpoints[1].len() {
                    return Err(Error::InvalidSpec("segment endpoints of mixed dimension".into()));
                }
                if !all_finite(&endpoints[0]) || !all_finite(&endpoints[1]) {
                    return Err(Error::InvalidSpec("non-finite segment endpoint".into()));
                }
            }
            SetSpec::Ellipsoid { center, axes } => {
                positive_dim(axes.len())?;
                if !axes.iter().all(|a| a.is_finite() && *a > 0.0) {
                    return Err(Error::InvalidSpec("ellipsoid axes must be positive".into()));
                }
                if axes.windows(2).any(|w| w[0] < w[1]) {
                    return Err(Error::InvalidSpec(
                        "ellipsoid axes must be sorted non-increasing".into(),
                    ));
                }
                if let Some(c) = center {
                    if c.len() != axes.len() {
                        return Err(Error::InvalidSpec("ellipsoid center/axes mismatch".into()));
                    }
                    if !all_finite(c) {
                        return Err(Error::InvalidSpec("non-finite ellipsoid center".into()));
                    }
                }
            }
            SetSpec::L1Ball { alpha, dim } => {
                positive_dim(*dim)?;
                if !alpha.is_finite() || *alpha <= 0.0 {
                    return Err(Error::InvalidSpec("l1 ball needs alpha > 0".into()));
                }
            }
            SetSpec::Scale { factor, inner } => {
                if !factor.is_finite() || *factor <= 0.0 {
                    return Err(Error::InvalidSpec("scale factor must be positive".into()));
                }
                inner.validate_depth(depth + 1)?;
            }
            SetSpec::Translate { by, inner } => {
                positive_dim(by.len())?;
                if !all_finite(by) {
                    return Err(Error::InvalidSpec("non-finite translation".into()));
                }
                inner.validate_depth(depth + 1)?;
                if inner.dim() != by.len() {
                    return Err(Error::DimensionMismatch {
                        expected: by.len(),
                        got: inner.dim(),
                    });
                }
            }
            SetSpec::Product { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidSpec("empty product".into()));
                }
                for p in parts {
                    p.validate_depth(depth + 1)?;
                }
            }
            SetSpec::Union { parts } | SetSpec::MinkowskiSum { parts } => {
                let first = parts
                    .first()
                    .ok_or_else(|| Error::InvalidSpec("empty part list".into()))?;
                for p in parts {
                    p.validate_depth(depth + 1)?;
                    if p.dim() != first.dim() {
                        return Err(Error::DimensionMismatch {
                            expected: first.dim(),
                            got: p.dim(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// True only when convexity is provable from the constructor tree.
    pub fn is_convex(&self) -> bool {
        match self {
            SetSpec::Point { .. }
            | SetSpec::Ball { .. }
            | SetSpec::Box { .. }
            | SetSpec::Segment { .. }
            | SetSpec::Ellipsoid { .. }
            | SetSpec::L1Ball { .. }
            | SetSpec::ConvexHull { .. } => true,
            SetSpec::FinitePoints { points } => points.len() == 1,
            SetSpec::Scale { inner, .. } | SetSpec::Translate { inner, .. } => inner.is_convex(),
            SetSpec::Product { parts } | SetSpec::MinkowskiSum { parts } => {
                parts.iter().all(SetSpec::is_convex)
            }
            SetSpec::Union { parts } => parts.len() == 1 && parts[0].is_convex(),
        }
    }

    /// True only when symmetry about the origin is provable from the
    /// constructor tree.
    pub fn is_symmetric(&self) -> bool {
        let neg_in = |points: &[Vec<f64>], p: &[f64]| {
            points.iter().any(|q| q.iter().zip(p).all(|(a, b)| *a == -*b))
        };
        match self {
            SetSpec::Point { at } => at.iter().all(|v| *v == 0.0),
            SetSpec::FinitePoints { points } | SetSpec::ConvexHull { points } => {
                points.iter().all(|p| neg_in(points, p))
            }
            SetSpec::Ball { center, .. } => center.iter().all(|v| *v == 0.0),
            SetSpec::Box { corner, sides } => {
                corner.iter().zip(sides).all(|(c, s)| *c == -0.5 * s)
            }
            SetSpec::Segment { endpoints } => {
                endpoints[0].iter().zip(&endpoints[1]).all(|(a, b)| *a == -*b)
            }
            SetSpec::Ellipsoid { center, .. } => {
                center.as_ref().map_or(true, |c| c.iter().all(|v| *v == 0.0))
            }
            SetSpec::L1Ball { .. } => true,
            SetSpec::Scale { inner, .. } => inner.is_symmetric(),
            SetSpec::Translate { by, inner } => {
                by.iter().all(|v| *v == 0.0) && inner.is_symmetric()
            }
            SetSpec::Product { parts }
            | SetSpec::Union { parts }
            | SetSpec::MinkowskiSum { parts } => parts.iter().all(SetSpec::is_symmetric),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Euclidean distance from `x` to the closed set (absolute accuracy
    /// 1e-10 for the iterative routes, exact otherwise).
    pub fn dist(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.dist_unchecked(x)
    }

    fn dist_unchecked(&self, x: &[f64]) -> Result<f64> {
        match self {
            SetSpec::Point { at } => Ok(dist_sq(x, at).sqrt()),
            SetSpec::FinitePoints { points } => Ok(points
                .iter()
                .map(|p| dist_sq(x, p))
                .fold(f64::INFINITY, f64::min)
                .sqrt()),
            SetSpec::Ball { center, radius } => {
                Ok((dist_sq(x, center).sqrt() - radius).max(0.0))
            }
            SetSpec::Box { corner, sides } => {
                let mut s = 0.0;
                for i in 0..x.len() {
                    let below = corner[i] - x[i];
                    let above = x[i] - corner[i] - sides[i];
                    let excess = below.max(above).max(0.0);
                    s += excess * excess;
                }
                Ok(s.sqrt())
            }
            SetSpec::Segment { endpoints } => {
                let (a, b) = (&endpoints[0], &endpoints[1]);
                let len_sq: f64 = dist_sq(a, b);
                if len_sq == 0.0 {
                    return Ok(dist_sq(x, a).sqrt());
                }
                let t = (x.iter().zip(a.iter().zip(b)).map(|(xi, (ai, bi))| (xi - ai) * (bi - ai)))
                    .sum::<f64>()
                    / len_sq;
                let t = t.clamp(0.0, 1.0);
                let s: f64 = (0..x.len())
                    .map(|i| {
                        let f = a[i] + t * (b[i] - a[i]);
                        (x[i] - f) * (x[i] - f)
                    })
                    .sum();
                Ok(s.sqrt())
            }
            SetSpec::Ellipsoid { center, axes } => {
                let y: Vec<f64> = match center {
                    Some(c) => x.iter().zip(c).map(|(a, b)| a - b).collect(),
                    None => x.to_vec(),
                };
                Ok(project_to_ellipsoid(axes, &y).dist)
            }
            SetSpec::L1Ball { alpha, .. } => Ok(l1_ball_dist(*alpha, x)),
            SetSpec::ConvexHull { points } => Ok(project_to_hull(points, x)?.dist),
            SetSpec::Scale { factor, inner } => {
                let y: Vec<f64> = x.iter().map(|v| v / factor).collect();
                Ok(factor * inner.dist_unchecked(&y)?)
            }
            SetSpec::Translate { by, inner } => {
                let y: Vec<f64> = x.iter().zip(by).map(|(a, b)| a - b).collect();
                inner.dist_unchecked(&y)
            }
            SetSpec::Product { parts } => {
                // dist²((x_1,..,x_k), A_1×..×A_k) = Σ dist²(x_i, A_i).
                let mut offset = 0;
                let mut s = 0.0;
                for p in parts {
                    let d = p.dim();
                    let di = p.dist_unchecked(&x[offset..offset + d])?;
                    s += di * di;
                    offset += d;
                }
                Ok(s.sqrt())
            }
            SetSpec::Union { parts } => {
                let mut best = f64::INFINITY;
                for p in parts {
                    best = best.min(p.dist_unchecked(x)?);
                }
                Ok(best)
            }
            SetSpec::MinkowskiSum { parts } => {
                // Fast path body + ball, avoiding the general flatten.
                if parts.len() == 2 {
                    let pair = match (&parts[0], &parts[1]) {
                        (SetSpec::Ball { center, radius }, other)
                        | (other, SetSpec::Ball { center, radius })
                            if !matches!(other, SetSpec::Ball { .. }) =>
                        {
                            Some((center, *radius, other))
                        }
                        _ => None,
                    };
                    if let Some((center, radius, other)) = pair {
                        let shifted: Vec<f64> =
                            x.iter().zip(center).map(|(a, b)| a - b).collect();
                        return Ok((other.dist_unchecked(&shifted)? - radius).max(0.0));
                    }
                }
                match flatten_minkowski(parts)? {
                    MinkowskiForm::Points(points) => {
                        SetSpec::FinitePoints { points }.dist_unchecked(x)
                    }
                    MinkowskiForm::BallPlus { center, radius, rest } => {
                        let shifted: Vec<f64> =
                            x.iter().zip(&center).map(|(a, b)| a - b).collect();
                        let inner = match rest {
                            Some(part) => part.dist_unchecked(&shifted)?,
                            None => norm(&shifted),
                        };
                        Ok((inner - radius).max(0.0))
                    }
                }
            }
        }
    }

    /// A nearest point of the set to `x` (any minimizer when not unique).
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        match self {
            SetSpec::Point { at } => Ok(at.clone()),
            SetSpec::FinitePoints { points } => {
                let best = points
                    .iter()
                    .min_by(|p, q| {
                        dist_sq(x, p).partial_cmp(&dist_sq(x, q)).expect("finite")
                    })
                    .expect("validated non-empty");
                Ok(best.clone())
            }
            SetSpec::Ball { center, radius } => {
                let d = dist_sq(x, center).sqrt();
                if d <= *radius {
                    return Ok(x.to_vec());
                }
                Ok(center
                    .iter()
                    .zip(x)
                    .map(|(c, xi)| c + (xi - c) * radius / d)
                    .collect())
            }
            SetSpec::Box { corner, sides } => Ok((0..x.len())
                .map(|i| x[i].clamp(corner[i], corner[i] + sides[i]))
                .collect()),
            SetSpec::Segment { endpoints } => {
                let (a, b) = (&endpoints[0], &endpoints[1]);
                let len_sq = dist_sq(a, b);
                if len_sq == 0.0 {
                    return Ok(a.clone());
                }
                let t = (x.iter().zip(a.iter().zip(b)).map(|(xi, (ai, bi))| (xi - ai) * (bi - ai)))
                    .sum::<f64>()
                    / len_sq;
                let t = t.clamp(0.0, 1.0);
                Ok((0..x.len()).map(|i| a[i] + t * (b[i] - a[i])).collect())
            }
            SetSpec::Ellipsoid { center, axes } => {
                let y: Vec<f64> = match center {
                    Some(c) => x.iter().zip(c).map(|(a, b)| a - b).collect(),
                    None => x.to_vec(),
                };
                let mut foot = project_to_ellipsoid(axes, &y).foot;
                if let Some(c) = center {
                    for (f, ci) in foot.iter_mut().zip(c) {
                        *f += ci;
                    }
                }
                Ok(foot)
            }
            SetSpec::L1Ball { alpha, .. } => Ok(l1_ball_project(*alpha, x)),
            SetSpec::ConvexHull { points } => Ok(project_to_hull(points, x)?.foot),
            SetSpec::Scale { factor, inner } => {
                let y: Vec<f64> = x.iter().map(|v| v / factor).collect();
                let mut foot = inner.project(&y)?;
                for f in foot.iter_mut() {
                    *f *= factor;
                }
                Ok(foot)
            }
            SetSpec::Translate { by, inner } => {
                let y: Vec<f64> = x.iter().zip(by).map(|(a, b)| a - b).collect();
                let mut foot = inner.project(&y)?;
                for (f, b) in foot.iter_mut().zip(by) {
                    *f += b;
                }
                Ok(foot)
            }
            SetSpec::Product { parts } => {
                let mut foot = Vec::with_capacity(x.len());
                let mut offset = 0;
                for p in parts {
                    let d = p.dim();
                    foot.extend(p.project(&x[offset..offset + d])?);
                    offset += d;
                }
                Ok(foot)
            }
            SetSpec::Union { parts } => {
                let mut best: Option<(f64, &SetSpec)> = None;
                for p in parts {
                    let d = p.dist_unchecked(x)?;
                    if best.map_or(true, |(bd, _)| d < bd) {
                        best = Some((d, p));
                    }
                }
                best.expect("validated non-empty").1.project(x)
            }
            SetSpec::MinkowskiSum { parts } => match flatten_minkowski(parts)? {
                MinkowskiForm::Points(points) => SetSpec::FinitePoints { points }.project(x),
                MinkowskiForm::BallPlus { center, radius, rest } => {
                    let shifted: Vec<f64> = x.iter().zip(&center).map(|(a, b)| a - b).collect();
                    let inner_foot = match rest {
                        Some(part) => part.project(&shifted)?,
                        None => vec![0.0; x.len()],
                    };
                    let gap = dist_sq(&shifted, &inner_foot).sqrt();
                    let step = if gap > radius { radius / gap } else { 1.0 };
                    Ok((0..x.len())
                        .map(|i| inner_foot[i] + center[i] + step * (shifted[i] - inner_foot[i]))
                        .collect())
                }
            },
        }
    }

    /// Support function `h_A(x) = sup_{θ ∈ A} ⟨θ, x⟩` (finite for every
    /// bounded spec; distributes over unions as a max).
    pub fn support(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.support_unchecked(x)
    }

    fn support_unchecked(&self, x: &[f64]) -> Result<f64> {
        match self {
            SetSpec::Point { at } => Ok(dot(at, x)),
            SetSpec::FinitePoints { points } | SetSpec::ConvexHull { points } => Ok(points
                .iter()
                .map(|p| dot(p, x))
                .fold(f64::NEG_INFINITY, f64::max)),
            SetSpec::Ball { center, radius } => Ok(dot(center, x) + radius * norm(x)),
            SetSpec::Box { corner, sides } => {
                let mut s = dot(corner, x);
                for i in 0..x.len() {
                    s += sides[i] * x[i].max(0.0);
                }
                Ok(s)
            }
            SetSpec::Segment { endpoints } => {
                Ok(dot(&endpoints[0], x).max(dot(&endpoints[1], x)))
            }
            SetSpec::Ellipsoid { center, axes } => {
                let radial: f64 =
                    axes.iter().zip(x).map(|(a, xi)| (a * xi) * (a * xi)).sum::<f64>().sqrt();
                let c = center.as_ref().map_or(0.0, |c| dot(c, x));
                Ok(c + radial)
            }
            SetSpec::L1Ball { alpha, .. } => {
                Ok(alpha * x.iter().map(|v| v.abs()).fold(0.0, f64::max))
            }
            SetSpec::Scale { factor, inner } => Ok(factor * inner.support_unchecked(x)?),
            SetSpec::Translate { by, inner } => Ok(dot(by, x) + inner.support_unchecked(x)?),
            SetSpec::Product { parts } => {
                let mut s = 0.0;
                let mut offset = 0;
                for p in parts {
                    let d = p.dim();
                    s += p.support_unchecked(&x[offset..offset + d])?;
                    offset += d;
                }
                Ok(s)
            }
            SetSpec::Union { parts } => {
                let mut best = f64::NEG_INFINITY;
                for p in parts {
                    best = best.max(p.support_unchecked(x)?);
                }
                Ok(best)
            }
            SetSpec::MinkowskiSum { parts } => {
                let mut s = 0.0;
                for p in parts {
                    s += p.support_unchecked(x)?;
                }
                Ok(s)
            }
        }
    }

    /// `sup_{θ ∈ A} [⟨θ, x⟩ − ‖θ‖²/2] = (‖x‖² − dist²(x, A))/2`.
    pub fn sup_quadratic(&self, x: &[f64]) -> Result<f64> {
        let d = self.dist(x)?;
        let n2: f64 = x.iter().map(|v| v * v).sum();
        Ok(0.5 * (n2 - d * d))
    }

    /// Diameter: exact for primitives and products, a bounding-ball upper
    /// bound (flagged) for unions and Minkowski sums.
    pub fn diameter(&self) -> DiameterBound {
        match self {
            SetSpec::Point { .. } => DiameterBound { value: 0.0, exact: true },
            SetSpec::FinitePoints { points } | SetSpec::ConvexHull { points } => {
                let mut best = 0.0f64;
                for (i, p) in points.iter().enumerate() {
                    for q in &points[i + 1..] {
                        best = best.max(dist_sq(p, q));
                    }
                }
                DiameterBound { value: best.sqrt(), exact: true }
            }
            SetSpec::Ball { radius, .. } => DiameterBound { value: 2.0 * radius, exact: true },
            SetSpec::Box { sides, .. } => DiameterBound { value: norm(sides), exact: true },
            SetSpec::Segment { endpoints } => DiameterBound {
                value: dist_sq(&endpoints[0], &endpoints[1]).sqrt(),
                exact: true,
            },
            SetSpec::Ellipsoid { axes, .. } => {
                DiameterBound { value: 2.0 * axes[0], exact: true }
            }
            SetSpec::L1Ball { alpha, .. } => DiameterBound { value: 2.0 * alpha, exact: true },
            SetSpec::Scale { factor, inner } => {
                let d = inner.diameter();
                DiameterBound { value: factor * d.value, exact: d.exact }
            }
            SetSpec::Translate { inner, .. } => inner.diameter(),
            SetSpec::Product { parts } => {
                // diam(A×B)² = diam(A)² + diam(B)²: the sup over coordinate
                // blocks is attained jointly, so exactness is preserved.
                let mut s = 0.0;
                let mut exact = true;
                for p in parts {
                    let d = p.diameter();
                    s += d.value * d.value;
                    exact &= d.exact;
                }
                DiameterBound { value: s.sqrt(), exact }
            }
            SetSpec::Union { parts } => {
                if parts.len() == 1 {
                    return parts[0].diameter();
                }
                let balls: Vec<(Vec<f64>, f64)> =
                    parts.iter().map(SetSpec::bounding_ball).collect();
                let mut best = 0.0f64;
                for (i, (ci, ri)) in balls.iter().enumerate() {
                    best = best.max(2.0 * ri);
                    for (cj, rj) in &balls[i + 1..] {
                        best = best.max(dist_sq(ci, cj).sqrt() + ri + rj);
                    }
                }
                DiameterBound { value: best, exact: false }
            }
            SetSpec::MinkowskiSum { parts } => {
                if parts.len() == 1 {
                    return parts[0].diameter();
                }
                let value = parts.iter().map(|p| p.diameter().value).sum();
                DiameterBound { value, exact: false }
            }
        }
    }

    /// An enclosing ball (center, radius); not minimal, but exact enough for
    /// quadrature margins and composite diameter bounds.
    pub fn bounding_ball(&self) -> (Vec<f64>, f64) {
        match self {
            SetSpec::Point { at } => (at.clone(), 0.0),
            SetSpec::FinitePoints { points } | SetSpec::ConvexHull { points } => {
                let d = points[0].len();
                let mut c = vec![0.0; d];
                for p in points {
                    for i in 0..d {
                        c[i] += p[i];
                    }
                }
                for v in c.iter_mut() {
                    *v /= points.len() as f64;
                }
                let r = points
                    .iter()
                    .map(|p| dist_sq(p, &c))
                    .fold(0.0f64, f64::max)
                    .sqrt();
                (c, r)
            }
            SetSpec::Ball { center, radius } => (center.clone(), *radius),
            SetSpec::Box { corner, sides } => {
                let c: Vec<f64> =
                    corner.iter().zip(sides).map(|(a, s)| a + 0.5 * s).collect();
                (c, 0.5 * norm(sides))
            }
            SetSpec::Segment { endpoints } => {
                let c: Vec<f64> = endpoints[0]
                    .iter()
                    .zip(&endpoints[1])
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect();
                (c, 0.5 * dist_sq(&endpoints[0], &endpoints[1]).sqrt())
            }
            SetSpec::Ellipsoid { center, axes } => (
                center.clone().unwrap_or_else(|| vec![0.0; axes.len()]),
                axes[0],
            ),
            SetSpec::L1Ball { alpha, dim } => (vec![0.0; *dim], *alpha),
            SetSpec::Scale { factor, inner } => {
                let (mut c, r) = inner.bounding_ball();
                for v in c.iter_mut() {
                    *v *= factor;
                }
                (c, factor * r)
            }
            SetSpec::Translate { by, inner } => {
                let (mut c, r) = inner.bounding_ball();
                for (v, b) in c.iter_mut().zip(by) {
                    *v += b;
                }
                (c, r)
            }
            SetSpec::Product { parts } => {
                let mut c = Vec::with_capacity(self.dim());
                let mut r2 = 0.0;
                for p in parts {
                    let (ci, ri) = p.bounding_ball();
                    c.extend(ci);
                    r2 += ri * ri;
                }
                (c, r2.sqrt())
            }
            SetSpec::Union { parts } => {
                let balls: Vec<(Vec<f64>, f64)> =
                    parts.iter().map(SetSpec::bounding_ball).collect();
                let d = balls[0].0.len();
                let mut c = vec![0.0; d];
                for (ci, _) in &balls {
                    for i in 0..d {
                        c[i] += ci[i];
                    }
                }
                for v in c.iter_mut() {
                    *v /= balls.len() as f64;
                }
                let r = balls
                    .iter()
                    .map(|(ci, ri)| dist_sq(ci, &c).sqrt() + ri)
                    .fold(0.0f64, f64::max);
                (c, r)
            }
            SetSpec::MinkowskiSum { parts } => {
                let d = self.dim();
                let mut c = vec![0.0; d];
                let mut r = 0.0;
                for p in parts {
                    let (ci, ri) = p.bounding_ball();
                    for i in 0..d {
                        c[i] += ci[i];
                    }
                    r += ri;
                }
                (c, r)
            }
        }
    }

    /// Rewrite the spec into an evaluation-friendly equivalent: Minkowski
    /// sums of point sets are enumerated once, balls are merged, so that the
    /// per-call distance work stays proportional to the normalized size.
    /// Fails exactly where [`SetSpec::dist`] would (unsupported sums,
    /// oversized enumerations).
    pub fn normalized(&self) -> Result<SetSpec> {
        Ok(match self {
            SetSpec::Scale { factor, inner } => SetSpec::Scale {
                factor: *factor,
                inner: Box::new(inner.normalized()?),
            },
            SetSpec::Translate { by, inner } => SetSpec::Translate {
                by: by.clone(),
                inner: Box::new(inner.normalized()?),
            },
            SetSpec::Product { parts } => SetSpec::Product {
                parts: parts.iter().map(SetSpec::normalized).collect::<Result<_>>()?,
            },
            SetSpec::Union { parts } => SetSpec::Union {
                parts: parts.iter().map(SetSpec::normalized).collect::<Result<_>>()?,
            },
            SetSpec::MinkowskiSum { parts } => {
                let parts: Vec<SetSpec> =
                    parts.iter().map(SetSpec::normalized).collect::<Result<_>>()?;
                match flatten_minkowski(&parts)? {
                    MinkowskiForm::Points(points) => SetSpec::FinitePoints { points },
                    MinkowskiForm::BallPlus { center, radius, rest } => {
                        if radius == 0.0 {
                            // No ball part was present; at most a single
                            // pass-through part remains.
                            match rest {
                                Some(r) => r,
                                None => SetSpec::Point { at: center },
                            }
                        } else {
                            let ball = SetSpec::Ball { center, radius };
                            match rest {
                                Some(r) => SetSpec::MinkowskiSum { parts: vec![ball, r] },
                                None => ball,
                            }
                        }
                    }
                }
            }
            other => other.clone(),
        })
    }

    /// Tight axis-aligned bounding box `(lo, hi)`; exact for every variant.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            SetSpec::Point { at } => (at.clone(), at.clone()),
            SetSpec::FinitePoints { points } | SetSpec::ConvexHull { points } => {
                let d = points[0].len();
                let mut lo = points[0].clone();
                let mut hi = points[0].clone();
                for p in points {
                    for i in 0..d {
                        lo[i] = lo[i].min(p[i]);
                        hi[i] = hi[i].max(p[i]);
                    }
                }
                (lo, hi)
            }
            SetSpec::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            SetSpec::Box { corner, sides } => (
                corner.clone(),
                corner.iter().zip(sides).map(|(c, s)| c + s).collect(),
            ),
            SetSpec::Segment { endpoints } => (
                endpoints[0]
                    .iter()
                    .zip(&endpoints[1])
                    .map(|(a, b)| a.min(*b))
                    .collect(),
                endpoints[0]
                    .iter()
                    .zip(&endpoints[1])
                    .map(|(a, b)| a.max(*b))
                    .collect(),
            ),
            SetSpec::Ellipsoid { center, axes } => {
                let zero = vec![0.0; axes.len()];
                let c = center.as_ref().unwrap_or(&zero);
                (
                    c.iter().zip(axes).map(|(ci, a)| ci - a).collect(),
                    c.iter().zip(axes).map(|(ci, a)| ci + a).collect(),
                )
            }
            SetSpec::L1Ball { alpha, dim } => {
                (vec![-*alpha; *dim], vec![*alpha; *dim])
            }
            SetSpec::Scale { factor, inner } => {
                let (lo, hi) = inner.bounding_box();
                (
                    lo.iter().map(|v| v * factor).collect(),
                    hi.iter().map(|v| v * factor).collect(),
                )
            }
            SetSpec::Translate { by, inner } => {
                let (lo, hi) = inner.bounding_box();
                (
                    lo.iter().zip(by).map(|(v, b)| v + b).collect(),
                    hi.iter().zip(by).map(|(v, b)| v + b).collect(),
                )
            }
            SetSpec::Product { parts } => {
                let mut lo = Vec::with_capacity(self.dim());
                let mut hi = Vec::with_capacity(self.dim());
                for p in parts {
                    let (l, h) = p.bounding_box();
                    lo.extend(l);
                    hi.extend(h);
                }
                (lo, hi)
            }
            SetSpec::Union { parts } => {
                let (mut lo, mut hi) = parts[0].bounding_box();
                for p in &parts[1..] {
                    let (l, h) = p.bounding_box();
                    for i in 0..lo.len() {
                        lo[i] = lo[i].min(l[i]);
                        hi[i] = hi[i].max(h[i]);
                    }
                }
                (lo, hi)
            }
            SetSpec::MinkowskiSum { parts } => {
                let (mut lo, mut hi) = parts[0].bounding_box();
                for p in &parts[1..] {
                    let (l, h) = p.bounding_box();
                    for i in 0..lo.len() {
                        lo[i] += l[i];
                        hi[i] += h[i];
                    }
                }
                (lo, hi)
            }
        }
    }
}

enum MinkowskiForm {
    /// The sum is a finite point set, enumerated explicitly.
    Points(Vec<Vec<f64>>),
    /// One merged ball plus at most one non-ball part.
    BallPlus { center: Vec<f64>, radius: f64, rest: Option<SetSpec> },
}

/// Reduce Minkowski-sum parts to a supported normal form. Balls merge
/// exactly (B(c,r) + B(c',r') = B(c+c', r+r')); finite point sets combine by
/// enumeration; anything else must appear at most once.
fn flatten_minkowski(parts: &[SetSpec]) -> Result<MinkowskiForm> {
    let dim = parts[0].dim();
    let mut ball: Option<(Vec<f64>, f64)> = None;
    let mut points: Option<Vec<Vec<f64>>> = None;
    let mut rest: Option<SetSpec> = None;
    for p in parts {
        match p {
            SetSpec::Ball { center, radius } => {
                ball = Some(match ball {
                    None => (center.clone(), *radius),
                    Some((c, r)) => (
                        c.iter().zip(center).map(|(a, b)| a + b).collect(),
                        r + radius,
                    ),
                });
            }
            SetSpec::Point { at } => {
                points = Some(sum_points(
                    points.unwrap_or_else(|| vec![vec![0.0; dim]]),
                    std::slice::from_ref(at),
                )?);
            }
            SetSpec::FinitePoints { points: qs } => {
                points =
                    Some(sum_points(points.unwrap_or_else(|| vec![vec![0.0; dim]]), qs)?);
            }
            other => {
                if rest.is_some() {
                    return Err(Error::UnsupportedComposition(
                        "minkowski_sum supports at most one part that is not a \
                         ball or finite point set"
                            .into(),
                    ));
                }
                rest = Some(other.clone());
            }
        }
    }
    let rest = match (points, rest) {
        (None, r) => r,
        (Some(ps), None) => {
            if ball.is_none() {
                return Ok(MinkowskiForm::Points(ps));
            }
            Some(SetSpec::FinitePoints { points: ps })
        }
        (Some(ps), Some(r)) => {
            if ps.len() == 1 {
                Some(SetSpec::Translate { by: ps.into_iter().next().expect("one"), inner: Box::new(r) })
            } else {
                return Err(Error::UnsupportedComposition(
                    "minkowski_sum cannot mix a multi-point set with another body".into(),
                ));
            }
        }
    };
    let (center, radius) = ball.unwrap_or((vec![0.0; dim], 0.0));
    if radius == 0.0 {
        match rest {
            Some(SetSpec::FinitePoints { points }) if center.iter().all(|c| *c == 0.0) => {
                return Ok(MinkowskiForm::Points(points));
            }
            _ => {}
        }
    }
    Ok(MinkowskiForm::BallPlus { center, radius, rest })
}

fn sum_points(a: Vec<Vec<f64>>, b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if a.len().saturating_mul(b.len()) > MAX_SUMSET {
        return Err(Error::UnsupportedComposition(format!(
            "enumerated sumset would exceed {MAX_SUMSET} points"
        )));
    }
    let mut out = Vec::with_capacity(a.len() * b.len());
    for p in &a {
        for q in b {
            out.push(p.iter().zip(q).map(|(x, y)| x + y).collect());
        }
    }
    Ok(out)
}

/// Distance from `x` to the ℓ¹ ball of radius `alpha`, via the exact
/// sort-and-threshold projection.
fn l1_ball_dist(alpha: f64, x: &[f64]) -> f64 {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= alpha {
        return 0.0;
    }
    let p = l1_ball_project(alpha, x);
    dist_sq(x, &p).sqrt()
}

/// Euclidean projection onto `{y : ‖y‖₁ ≤ alpha}`: soft-thresholding at the
/// level that makes the ℓ¹ norm exactly `alpha` (found by sorting).
fn l1_ball_project(alpha: f64, x: &[f64]) -> Vec<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= alpha {
        return x.to_vec();
    }
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumulative += m;
        let candidate = (cumulative - alpha) / (k as f64 + 1.0);
        if k + 1 == mags.len() || candidate >= mags[k + 1] {
            tau = candidate;
            break;
        }
    }
    x.iter()
        .map(|v| v.signum() * (v.abs() - tau).max(0.0))
        .collect()
}
