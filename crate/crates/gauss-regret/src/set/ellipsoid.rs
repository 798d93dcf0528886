//! Euclidean projection onto a centered axis-aligned solid ellipsoid
//! `{y : Σ y_i²/a_i² ≤ 1}`.
//!
//! For an exterior point `x` the nearest boundary point has the closed
//! parametric form `y_i = a_i² x_i / (a_i² + μ)` where `μ > 0` is the unique
//! positive root of the secular function
//!
//! ```text
//! f(μ) = Σ a_i² x_i² / (a_i² + μ)² − 1.
//! ```
//!
//! `f` is strictly decreasing and convex on `μ ∈ (−a_min², ∞)`, and
//! `f(0) > 0` exactly when `x` is exterior, so Newton iteration started at
//! `μ = 0` increases monotonically to the root without overshooting. A
//! bisection safeguard keeps the iterate inside a bracket in case rounding
//! ever produces a step outside it.

pub(crate) struct Projection {
    pub dist: f64,
    pub foot: Vec<f64>,
}

/// Project `x` (coordinates relative to the ellipsoid center) onto the solid
/// ellipsoid with semi-axes `axes`. Interior points return distance zero.
pub(crate) fn project_to_ellipsoid(axes: &[f64], x: &[f64]) -> Projection {
    debug_assert_eq!(axes.len(), x.len());
    let level: f64 = x
        .iter()
        .zip(axes)
        .map(|(xi, a)| (xi / a) * (xi / a))
        .sum();
    if level <= 1.0 {
        return Projection { dist: 0.0, foot: x.to_vec() };
    }

    // f(hi) ≤ Σ a_i²x_i²/hi² − 1 = 0 at hi = ‖(a_i x_i)‖, so the root lies
    // in (0, hi].
    let mut hi = x
        .iter()
        .zip(axes)
        .map(|(xi, a)| (a * xi) * (a * xi))
        .sum::<f64>()
        .sqrt();
    let mut lo = 0.0f64;
    let mut mu = 0.0f64;
    for _ in 0..200 {
        let mut f = -1.0;
        let mut fp = 0.0;
        for (xi, a) in x.iter().zip(axes) {
            let a2 = a * a;
            let denom = a2 + mu;
            let t = a2 * xi * xi / (denom * denom);
            f += t;
            fp -= 2.0 * t / denom;
        }
        if f > 0.0 {
            lo = mu;
        } else {
            hi = mu;
        }
        if f.abs() <= 1e-15 {
            break;
        }
        let newton = mu - f / fp;
        mu = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }

    let foot: Vec<f64> = x
        .iter()
        .zip(axes)
        .map(|(xi, a)| a * a * xi / (a * a + mu))
        .collect();
    let dist = x
        .iter()
        .zip(&foot)
        .map(|(xi, fi)| (xi - fi) * (xi - fi))
        .sum::<f64>()
        .sqrt();
    Projection { dist, foot }
}
