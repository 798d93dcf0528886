//! Intrinsic-volume sequences: exact closed forms for balls and boxes,
//! Gaussian-projection Monte Carlo for ellipsoids and polytopes, Steiner
//! polynomials, and the volume-sum form of the minimax regret.
//!
//! Conventions: `V_0 = 1` for every non-empty body, `V_j` carries units of
//! `length^j`, and the unit-ball volumes `κ_j` come from the two-term
//! recurrence `κ_j = κ_{j−2}·2π/j` (never from Γ evaluations, which overflow
//! long before the recurrence loses accuracy).

use crate::num::{binomial_row, log_sum_exp, LN_2PI};
use crate::rng::{chunk_rng, STREAM_SAMPLING};
use crate::set::SetSpec;
use crate::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Unit-ball volumes κ_0..κ_n.
#[derive(Clone, Debug)]
pub struct KappaTable {
    values: Vec<f64>,
}

impl KappaTable {
    /// Table up to dimension `n` via κ_j = κ_{j−2}·2π/j with κ_0 = 1,
    /// κ_1 = 2.
    pub fn up_to(n: usize) -> KappaTable {
        let mut values = Vec::with_capacity(n + 1);
        values.push(1.0);
        if n >= 1 {
            values.push(2.0);
        }
        for j in 2..=n {
            let prev = values[j - 2];
            values.push(prev * 2.0 * std::f64::consts::PI / j as f64);
        }
        KappaTable { values }
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }
}

/// Origin of a volume sequence's values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    MonteCarlo,
}

/// The sequence `V_0..V_n` of intrinsic volumes of a convex body in `R^n`.
#[derive(Clone, Debug, Serialize)]
pub struct IntrinsicVolumeSeq {
    pub dim: usize,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub std_errors: Option<Vec<f64>>,
}

impl IntrinsicVolumeSeq {
    /// Build an exact sequence, checking `V_0 = 1`, non-negativity, and the
    /// one-sided log-concavity `(j+1)·V_{j+1}·V_{j−1} ≤ j·V_j²` (1e-9
    /// relative slack).
    pub fn new_exact(values: Vec<f64>) -> Result<IntrinsicVolumeSeq> {
        if values.is_empty() || values[0] != 1.0 {
            return Err(Error::InvalidSpec("volume sequence must start at V_0 = 1".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidSpec("volumes must be finite and non-negative".into()));
        }
        let seq = IntrinsicVolumeSeq {
            dim: values.len() - 1,
            values,
            provenance: Provenance::Exact,
            std_errors: None,
        };
        if !seq.is_log_concave(1e-9) {
            return Err(Error::InvalidSpec("volume sequence violates log-concavity".into()));
        }
        Ok(seq)
    }

    /// `(j+1)·V_{j+1}·V_{j−1} ≤ j·V_j²` for 1 ≤ j ≤ n−1, with relative
    /// slack `tol`.
    pub fn is_log_concave(&self, tol: f64) -> bool {
        for j in 1..self.dim {
            let lhs = (j as f64 + 1.0) * self.values[j + 1] * self.values[j - 1];
            let rhs = j as f64 * self.values[j] * self.values[j];
            if lhs > rhs + tol * lhs.max(rhs) {
                return false;
            }
        }
        true
    }
}

/// Intrinsic volumes of the radius-`r` ball in `R^n`:
/// `V_j = C(n,j)·κ_n/κ_{n−j}·r^j`.
pub fn ball_volumes(n: usize, r: f64) -> Result<IntrinsicVolumeSeq> {
    if n == 0 {
        return Err(Error::InvalidSpec("dimension must be at least 1".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidSpec("ball radius must be positive".into()));
    }
    let kappa = KappaTable::up_to(n);
    let binom = binomial_row(n);
    let mut values = Vec::with_capacity(n + 1);
    for j in 0..=n {
        values.push(binom[j] * kappa.get(n) / kappa.get(n - j) * r.powi(j as i32));
    }
    IntrinsicVolumeSeq::new_exact(values)
}

/// Intrinsic volumes of an axis-aligned box: `V_j` is the j-th elementary
/// symmetric polynomial of the side lengths, via the `∏(1 + a_i t)`
/// coefficient recurrence (stable, O(n²)).
pub fn box_volumes(sides: &[f64]) -> Result<IntrinsicVolumeSeq> {
    if sides.is_empty() {
        return Err(Error::InvalidSpec("box needs at least one side".into()));
    }
    if sides.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidSpec("box sides must be positive".into()));
    }
    let mut coeff = vec![0.0; sides.len() + 1];
    coeff[0] = 1.0;
    for (k, a) in sides.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            coeff[j] += a * coeff[j - 1];
        }
    }
    IntrinsicVolumeSeq::new_exact(coeff)
}

/// Volume sequence of a Cartesian product: the Cauchy product of the parts'
/// generating polynomials `Σ_j V_j t^j`.
pub fn product_volumes(parts: &[IntrinsicVolumeSeq]) -> Result<IntrinsicVolumeSeq> {
    if parts.is_empty() {
        return Err(Error::InvalidSpec("empty product".into()));
    }
    if parts.iter().any(|p| p.provenance != Provenance::Exact) {
        return Err(Error::Unsupported("product of volume sequences needs exact parts".into()));
    }
    let mut acc = vec![1.0];
    for part in parts {
        let mut next = vec![0.0; acc.len() + part.dim];
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in part.values.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    IntrinsicVolumeSeq::new_exact(acc)
}

/// Exact intrinsic volumes for the specs that admit them: balls, boxes,
/// segments, points, their scalings/translations/products, single-part
/// unions, and Minkowski sums that normalize to one of those.
pub fn exact_volumes(spec: &SetSpec) -> Option<IntrinsicVolumeSeq> {
    match spec {
        SetSpec::Point { at } => {
            let mut values = vec![0.0; at.len() + 1];
            values[0] = 1.0;
            IntrinsicVolumeSeq::new_exact(values).ok()
        }
        SetSpec::FinitePoints { points } if points.len() == 1 => {
            exact_volumes(&SetSpec::Point { at: points[0].clone() })
        }
        SetSpec::Ball { center, radius } => ball_volumes(center.len(), *radius).ok(),
        SetSpec::Box { sides, .. } => box_volumes(sides).ok(),
        SetSpec::Segment { endpoints } => {
            let len = crate::num::dist_sq(&endpoints[0], &endpoints[1]).sqrt();
            if len == 0.0 {
                exact_volumes(&SetSpec::Point { at: endpoints[0].clone() })
            } else {
                // Intrinsic volumes are rotation-invariant: a segment of
                // length L matches the 1-dim box [0, L], padded to live in
                // the ambient dimension (higher V_j vanish).
                let mut values = vec![0.0; endpoints[0].len() + 1];
                values[0] = 1.0;
                values[1] = len;
                IntrinsicVolumeSeq::new_exact(values).ok()
            }
        }
        SetSpec::Ellipsoid { axes, .. } if axes.len() == 1 => {
            // A 1-dim ellipsoid is the segment [−a, a].
            box_volumes(&[2.0 * axes[0]]).ok()
        }
        SetSpec::L1Ball { alpha, dim } if *dim == 1 => box_volumes(&[2.0 * alpha]).ok(),
        SetSpec::Scale { factor, inner } => {
            let seq = exact_volumes(inner)?;
            let values = seq
                .values
                .iter()
                .enumerate()
                .map(|(j, v)| v * factor.powi(j as i32))
                .collect();
            IntrinsicVolumeSeq::new_exact(values).ok()
        }
        SetSpec::Translate { inner, .. } => exact_volumes(inner),
        SetSpec::Product { parts } => {
            let seqs: Option<Vec<_>> = parts.iter().map(exact_volumes).collect();
            product_volumes(&seqs?).ok()
        }
        SetSpec::Union { parts } if parts.len() == 1 => exact_volumes(&parts[0]),
        SetSpec::MinkowskiSum { .. } => {
            let normalized = spec.normalized().ok()?;
            if matches!(normalized, SetSpec::MinkowskiSum { .. }) {
                None
            } else {
                exact_volumes(&normalized)
            }
        }
        _ => None,
    }
}

/// Steiner polynomial: `vol_n(K + r·B) = Σ_j V_{n−j}(K)·κ_j·r^j`.
/// Meaningful for exact sequences (MC standard errors are not propagated).
pub fn steiner_parallel_volume(seq: &IntrinsicVolumeSeq, r: f64) -> f64 {
    let kappa = KappaTable::up_to(seq.dim);
    let mut total = 0.0;
    for j in 0..=seq.dim {
        total += seq.values[seq.dim - j] * kappa.get(j) * r.powi(j as i32);
    }
    total
}

/// Minimax regret of the dilated body `t·K` from its volume sequence:
/// `log Σ_j V_j(K)·(t/√2π)^j`, in nats.
pub fn regret_from_volumes(seq: &IntrinsicVolumeSeq, t: f64) -> f64 {
    regret_from_volumes_with_se(seq, t).0
}

/// Same as [`regret_from_volumes`] plus a first-order standard error when
/// the sequence carries Monte Carlo errors (0 for exact sequences).
pub fn regret_from_volumes_with_se(seq: &IntrinsicVolumeSeq, t: f64) -> (f64, f64) {
    let log_tau = t.ln() - 0.5 * LN_2PI;
    let log_terms: Vec<f64> = seq
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(j, v)| v.ln() + j as f64 * log_tau)
        .collect();
    let value = log_sum_exp(&log_terms);
    let se = match &seq.std_errors {
        None => 0.0,
        Some(errs) => {
            // Delta method on log Σ: SE ≈ √(Σ (SE_j τ^j)²) / Σ V_j τ^j.
            let tau = t / crate::num::SQRT_2PI;
            let total: f64 = seq
                .values
                .iter()
                .enumerate()
                .map(|(j, v)| v * tau.powi(j as i32))
                .sum();
            let var: f64 = errs
                .iter()
                .enumerate()
                .map(|(j, e)| {
                    let s = e * tau.powi(j as i32);
                    s * s
                })
                .sum();
            var.sqrt() / total
        }
    };
    (value, se)
}

/// Bounds on the regret of `t·K` through the largest dilated volume.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaxIntrinsicBounds {
    /// `log max_{1≤j≤n} v_j` with `v_j = V_j(K)·(t/√2π)^j`.
    pub lower: f64,
    /// `8·log max_{k≥0} v_{2^k}` over power-of-two indices within range.
    pub upper: f64,
    /// False when the precondition `v_1 ≥ 2` fails; the bounds are then not
    /// certified and are reported as NaN.
    pub applicable: bool,
}

/// Sandwich the volume-sum regret between functions of the single largest
/// dilated intrinsic volume, restricted to a geometric index grid on the
/// upper side. Applies when `v_1 = V_1(K)·t/√2π ≥ 2`; the sandwich
/// `lower ≤ regret ≤ upper` is asserted internally for applicable inputs.
pub fn max_intrinsic_bounds(seq: &IntrinsicVolumeSeq, t: f64) -> MaxIntrinsicBounds {
    let tau = t / crate::num::SQRT_2PI;
    let v: Vec<f64> = seq
        .values
        .iter()
        .enumerate()
        .map(|(j, val)| val * tau.powi(j as i32))
        .collect();
    if seq.dim < 1 || !(v[1] >= 2.0) {
        return MaxIntrinsicBounds { lower: f64::NAN, upper: f64::NAN, applicable: false };
    }
    let max_all = v[1..].iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let mut max_pow2 = f64::NEG_INFINITY;
    let mut j = 1usize;
    while j <= seq.dim {
        max_pow2 = max_pow2.max(v[j]);
        j *= 2;
    }
    let bounds = MaxIntrinsicBounds {
        lower: max_all.ln(),
        upper: 8.0 * max_pow2.ln(),
        applicable: true,
    };
    let regret = regret_from_volumes(seq, t);
    assert!(
        bounds.lower <= regret + 1e-12 && regret <= bounds.upper + 1e-12,
        "volume-max sandwich violated: {} ≤ {regret} ≤ {} (t = {t})",
        bounds.lower,
        bounds.upper,
    );
    bounds
}

/// The dominant-dimension expansion report for repeated observations.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RissanenReport {
    /// argmax over 1 ≤ j ≤ n of `V_j(K)·t^j` at `t = √(n_rep/2π)`, ties
    /// broken toward the smaller index.
    pub dominant_index: usize,
    /// `(d/2)·log(n_rep/2π) + log V_d` at the dominant index `d`, in nats.
    pub expansion_value: f64,
    /// Whether the top-dimensional term dominates its neighbor:
    /// `V_n·t^n ≥ V_{n−1}·t^{n−1}`.
    pub full_dim_dominates_neighbor: bool,
    /// Sample count at which the direct adjacent-term comparison flips:
    /// `2π·(V_{n−1}/V_n)²`.
    pub threshold_direct: f64,
    /// The classical sufficient sample size `8π·(surface/volume)²`, with
    /// surface area `2·V_{n−1}` and volume `V_n`; conservative by design.
    pub threshold_surface_ratio: f64,
}

/// Report which dilated volume dominates at sample size `n_rep` and both
/// sample-size thresholds for full-dimensional dominance. Requires an exact
/// sequence with `V_n > 0`.
pub fn rissanen_report(seq: &IntrinsicVolumeSeq, n_rep: u64) -> Result<RissanenReport> {
    if n_rep == 0 {
        return Err(Error::InvalidSpec("sample count must be positive".into()));
    }
    let n = seq.dim;
    let vn = seq.values[n];
    if vn <= 0.0 {
        return Err(Error::DegenerateSpread(
            "top intrinsic volume is zero; the body is lower-dimensional".into(),
        ));
    }
    let t = (n_rep as f64 / (2.0 * std::f64::consts::PI)).sqrt();
    let mut dominant = 1usize;
    let mut best = f64::NEG_INFINITY;
    for j in 1..=n {
        let term = if seq.values[j] > 0.0 {
            seq.values[j].ln() + j as f64 * t.ln()
        } else {
            f64::NEG_INFINITY
        };
        // Strict improvement only: ties resolve to the smaller index.
        if term > best + 1e-15 {
            best = term;
            dominant = j;
        }
    }
    let d = dominant as f64;
    let expansion_value =
        0.5 * d * (n_rep as f64 / (2.0 * std::f64::consts::PI)).ln() + seq.values[dominant].ln();
    let ratio = seq.values[n - 1] / vn;
    let threshold_direct = 2.0 * std::f64::consts::PI * ratio * ratio;
    let surface_ratio = 2.0 * seq.values[n - 1] / vn;
    let threshold_surface_ratio = 8.0 * std::f64::consts::PI * surface_ratio * surface_ratio;
    let report = RissanenReport {
        dominant_index: dominant,
        expansion_value,
        full_dim_dominates_neighbor: vn * t.powi(n as i32)
            >= seq.values[n - 1] * t.powi(n as i32 - 1),
        threshold_direct,
        threshold_surface_ratio,
    };
    // The direct threshold is exact for the adjacent comparison; combined
    // with log-concavity (decreasing ratios) it forces the dominant index to
    // the top dimension. Strict margin so an exact tie (which resolves to
    // the smaller index) does not trip the check.
    if n_rep as f64 > threshold_direct * (1.0 + 1e-9) {
        debug_assert_eq!(report.dominant_index, n);
    }
    Ok(report)
}

/// A Monte Carlo scalar estimate with its batch-means standard error.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct McVolumeEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
}

const MC_BATCHES: u64 = 16;
const MAX_HULL_VERTICES: usize = 64;

/// Monte Carlo estimate of `V_j(K/√2π)` via random Gaussian projections:
/// the mean of `(1/j!)·vol_j(G K)/κ_j` over i.i.d. j×n standard Gaussian
/// matrices `G`. Supports ellipsoids (any `1 ≤ j ≤ n`, via
/// `√det(G·diag(a²)·Gᵀ)/j!`) and convex hulls (`j ≤ 3`, exact projected
/// hull measure). Deterministic given `(seed, samples)`; standard error by
/// batch means over 16 fixed batches.
pub fn mc_tsirelson(
    spec: &SetSpec,
    j: usize,
    samples: u64,
    seed: u64,
) -> Result<McVolumeEstimate> {
    spec.validate()?;
    let n = spec.dim();
    if j < 1 || j > n {
        return Err(Error::Unsupported(format!(
            "projection order {j} out of range 1..={n}"
        )));
    }
    enum Body<'a> {
        Ellipsoid(&'a [f64]),
        Hull(&'a [Vec<f64>]),
    }
    let body = match spec {
        SetSpec::Ellipsoid { axes, .. } => Body::Ellipsoid(axes),
        SetSpec::ConvexHull { points } => {
            if j > 3 {
                return Err(Error::Unsupported(
                    "hull projections support order j ≤ 3 only".into(),
                ));
            }
            if points.len() > MAX_HULL_VERTICES {
                return Err(Error::Unsupported(format!(
                    "hull volume enumeration capped at {MAX_HULL_VERTICES} vertices"
                )));
            }
            Body::Hull(points)
        }
        _ => {
            return Err(Error::Unsupported(
                "Gaussian-projection volumes support ellipsoid and convex_hull specs".into(),
            ))
        }
    };
    if samples < MC_BATCHES {
        return Err(Error::InvalidSpec(format!(
            "need at least {MC_BATCHES} samples"
        )));
    }

    let factorial: f64 = (1..=j).map(|k| k as f64).product();
    let kappa_j = KappaTable::up_to(j).get(j);
    let per_batch = samples / MC_BATCHES;
    let remainder = samples % MC_BATCHES;

    let batch_means: Vec<f64> = (0..MC_BATCHES)
        .into_par_iter()
        .map(|batch| {
            let mut rng = chunk_rng(seed, STREAM_SAMPLING, batch);
            let count = per_batch + if batch < remainder { 1 } else { 0 };
            let mut g = vec![0.0f64; j * n];
            let mut sum = 0.0;
            for _ in 0..count {
                for v in g.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let value = match &body {
                    Body::Ellipsoid(axes) => {
                        // M = G·diag(a²)·Gᵀ; the projected ellipsoid's
                        // volume is κ_j·√det M, so κ_j cancels.
                        let mut m = nalgebra::DMatrix::zeros(j, j);
                        for r in 0..j {
                            for c in r..j {
                                let mut acc = 0.0;
                                for k in 0..n {
                                    acc += g[r * n + k] * axes[k] * axes[k] * g[c * n + k];
                                }
                                m[(r, c)] = acc;
                                m[(c, r)] = acc;
                            }
                        }
                        match m.cholesky() {
                            Some(chol) => {
                                let l = chol.unpack();
                                let mut root_det = 1.0;
                                for k in 0..j {
                                    root_det *= l[(k, k)];
                                }
                                root_det / factorial
                            }
                            // Numerically non-PD means a (near-)singular
                            // projection: its volume contribution is 0.
                            None => 0.0,
                        }
                    }
                    Body::Hull(points) => {
                        let projected: Vec<Vec<f64>> = points
                            .iter()
                            .map(|p| {
                                (0..j)
                                    .map(|r| {
                                        (0..n).map(|k| g[r * n + k] * p[k]).sum::<f64>()
                                    })
                                    .collect()
                            })
                            .collect();
                        let vol = match j {
                            1 => {
                                let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                                for q in &projected {
                                    lo = lo.min(q[0]);
                                    hi = hi.max(q[0]);
                                }
                                hi - lo
                            }
                            2 => polygon_hull_area(&projected),
                            3 => polytope_hull_volume_3d(&projected),
                            _ => unreachable!("j ≤ 3 enforced above"),
                        };
                        vol / factorial / kappa_j
                    }
                };
                sum += value;
            }
            sum / count as f64
        })
        .collect();

    let mean = batch_means.iter().sum::<f64>() / MC_BATCHES as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (MC_BATCHES as f64 - 1.0);
    let std_error = (var / MC_BATCHES as f64).sqrt();
    Ok(McVolumeEstimate { value: mean, std_error, samples, seed })
}

/// Indices of the convex hull of a planar point set, in counter-clockwise
/// boundary order (Andrew's monotone chain; collinear boundary points are
/// dropped). Fewer than 3 returned indices means a degenerate hull.
fn convex_hull_indices(pts: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).expect("finite"));
    order.dedup_by(|a, b| pts[*a] == pts[*b]);
    if order.len() < 3 {
        return order;
    }
    let cross = |o: usize, a: usize, b: usize| {
        (pts[a].0 - pts[o].0) * (pts[b].1 - pts[o].1)
            - (pts[a].1 - pts[o].1) * (pts[b].0 - pts[o].0)
    };
    let mut lower: Vec<usize> = Vec::new();
    for &i in &order {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], i) <= 0.0
        {
            lower.pop();
        }
        lower.push(i);
    }
    let mut upper: Vec<usize> = Vec::new();
    for &i in order.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], i) <= 0.0
        {
            upper.pop();
        }
        upper.push(i);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Area of the convex hull of a planar point set (0 for degenerate inputs).
fn polygon_hull_area(points: &[Vec<f64>]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    let hull = convex_hull_indices(&pts);
    if hull.len() < 3 {
        return 0.0;
    }
    let mut twice_area = 0.0;
    for i in 0..hull.len() {
        let (x1, y1) = pts[hull[i]];
        let (x2, y2) = pts[hull[(i + 1) % hull.len()]];
        twice_area += x1 * y2 - x2 * y1;
    }
    0.5 * twice_area.abs()
}

/// Volume of the convex hull of a 3-D point set by supporting-plane
/// enumeration: each facet plane is discovered through its triples, counted
/// exactly once (via its lexicographically first spanning triple), and the
/// full facet polygon is fan-triangulated against the global centroid.
/// Handles coplanar facets with any number of vertices; quadratic-size safe
/// for the small vertex sets used here.
fn polytope_hull_volume_3d(points: &[Vec<f64>]) -> f64 {
    let m = points.len();
    if m < 4 {
        return 0.0;
    }
    let mut centroid = [0.0f64; 3];
    for p in points {
        for i in 0..3 {
            centroid[i] += p[i];
        }
    }
    for c in centroid.iter_mut() {
        *c /= m as f64;
    }
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |a, b| a.max(b.abs()))
        .max(1e-300);
    let normal_tol = 1e-12 * scale * scale;
    let side_tol = 1e-10 * scale * scale * scale;

    let normal_of = |i: usize, j: usize, k: usize| -> [f64; 3] {
        let u = [
            points[j][0] - points[i][0],
            points[j][1] - points[i][1],
            points[j][2] - points[i][2],
        ];
        let v = [
            points[k][0] - points[i][0],
            points[k][1] - points[i][1],
            points[k][2] - points[i][2],
        ];
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    };
    let norm3 = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();

    let mut volume = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let normal = normal_of(i, j, k);
                if norm3(&normal) <= normal_tol {
                    continue;
                }
                let mut pos = false;
                let mut neg = false;
                let mut facet: Vec<usize> = Vec::new();
                for (idx, p) in points.iter().enumerate() {
                    let side = normal[0] * (p[0] - points[i][0])
                        + normal[1] * (p[1] - points[i][1])
                        + normal[2] * (p[2] - points[i][2]);
                    if side > side_tol {
                        pos = true;
                    } else if side < -side_tol {
                        neg = true;
                    } else {
                        facet.push(idx);
                    }
                    if pos && neg {
                        break;
                    }
                }
                if pos && neg {
                    continue;
                }
                // Count the facet once: only at its first spanning triple.
                let mut first_triple = None;
                'outer: for (ai, &a) in facet.iter().enumerate() {
                    for (bi, &b) in facet.iter().enumerate().skip(ai + 1) {
                        for &c in facet.iter().skip(bi + 1) {
                            if norm3(&normal_of(a, b, c)) > normal_tol {
                                first_triple = Some((a, b, c));
                                break 'outer;
                            }
                        }
                    }
                }
                if first_triple != Some((i, j, k)) {
                    continue;
                }
                // Order the facet polygon in its own plane and
                // fan-triangulate against the centroid.
                let nn = norm3(&normal);
                let unit = [normal[0] / nn, normal[1] / nn, normal[2] / nn];
                let mut e1 = if unit[0].abs() < 0.9 {
                    [1.0, 0.0, 0.0]
                } else {
                    [0.0, 1.0, 0.0]
                };
                let proj = e1[0] * unit[0] + e1[1] * unit[1] + e1[2] * unit[2];
                for t in 0..3 {
                    e1[t] -= proj * unit[t];
                }
                let n1 = norm3(&e1);
                for t in e1.iter_mut() {
                    *t /= n1;
                }
                let e2 = [
                    unit[1] * e1[2] - unit[2] * e1[1],
                    unit[2] * e1[0] - unit[0] * e1[2],
                    unit[0] * e1[1] - unit[1] * e1[0],
                ];
                let flat: Vec<(f64, f64)> = facet
                    .iter()
                    .map(|&idx| {
                        let p = &points[idx];
                        (
                            p[0] * e1[0] + p[1] * e1[1] + p[2] * e1[2],
                            p[0] * e2[0] + p[1] * e2[1] + p[2] * e2[2],
                        )
                    })
                    .collect();
                let ring = convex_hull_indices(&flat);
                if ring.len() < 3 {
                    continue;
                }
                for t in 1..ring.len() - 1 {
                    let a = &points[facet[ring[0]]];
                    let b = &points[facet[ring[t]]];
                    let c = &points[facet[ring[t + 1]]];
                    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                    let w = [
                        centroid[0] - a[0],
                        centroid[1] - a[1],
                        centroid[2] - a[2],
                    ];
                    let det = u[0] * (v[1] * w[2] - v[2] * w[1])
                        - u[1] * (v[0] * w[2] - v[2] * w[0])
                        + u[2] * (v[0] * w[1] - v[1] * w[0]);
                    volume += det.abs() / 6.0;
                }
            }
        }
    }
    volume
}
