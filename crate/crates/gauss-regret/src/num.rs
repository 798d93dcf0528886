//! Small numeric building blocks: stable log-sum-exp accumulation, adaptive
//! Simpson quadrature on the line, golden-section minimization, bisection,
//! and binomial coefficients.

/// ln(2π), used throughout the Gaussian log-density normalizations.
pub const LN_2PI: f64 = 1.8378770664093453;

/// √(2π).
pub const SQRT_2PI: f64 = 2.5066282746310002;

/// log(a) ⊕ log(b) -> log(a + b), stable for any ordering of magnitudes.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// log of Σ exp(x_i); NEG_INFINITY on an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY || !hi.is_finite() {
        return hi;
    }
    let sum: f64 = xs.iter().map(|x| (x - hi).exp()).sum();
    hi + sum.ln()
}

/// Streaming log-mean-exp accumulator: absorbs exponents one at a time and
/// reports log((1/n) Σ e^{x_i}) without materializing raw exponentials.
#[derive(Clone, Debug)]
pub struct LogMeanExp {
    log_sum: f64,
    count: u64,
}

impl LogMeanExp {
    pub fn new() -> Self {
        Self { log_sum: f64::NEG_INFINITY, count: 0 }
    }

    pub fn push(&mut self, exponent: f64) {
        self.log_sum = log_add_exp(self.log_sum, exponent);
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// log of the running sum Σ e^{x_i}.
    pub fn log_sum(&self) -> f64 {
        self.log_sum
    }

    /// log of the running mean; NEG_INFINITY when empty.
    pub fn log_mean(&self) -> f64 {
        if self.count == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_sum - (self.count as f64).ln()
        }
    }
}

impl Default for LogMeanExp {
    fn default() -> Self {
        Self::new()
    }
}

/// Combine per-batch log-means into the grand log-mean and the standard error
/// of the grand mean propagated to the log scale.
///
/// Batches are re-centered at their max before moving to the linear scale, so
/// the computation never overflows. Returns `(log_mean, se_log)` where
/// `se_log = sd(batch means)/√B / grand mean` (the delta method on log).
/// `se_log` is 0 when every batch mean is identical.
pub fn combine_batch_log_means(batch_log_means: &[f64]) -> (f64, f64) {
    let b = batch_log_means.len();
    assert!(b >= 2, "need at least two batches");
    let hi = batch_log_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = batch_log_means.iter().map(|m| (m - hi).exp()).collect();
    let mean: f64 = scaled.iter().sum::<f64>() / b as f64;
    let var: f64 =
        scaled.iter().map(|u| (u - mean) * (u - mean)).sum::<f64>() / (b as f64 - 1.0);
    let se_of_mean = (var / b as f64).sqrt();
    (hi + mean.ln(), se_of_mean / mean)
}

/// Adaptive Simpson integration of `f` on `[a, b]` to absolute tolerance
/// `tol`. Deterministic; panics only on NaN endpoints.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 48)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF via adaptive Simpson on the density (no erf
/// approximation; absolute error well below 1e-12 on the tested range).
pub fn normal_cdf(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - normal_cdf(-x);
    }
    let upper = x.min(40.0);
    0.5 + integrate_1d(&normal_pdf, 0.0, upper, 1e-14)
}

/// Golden-section minimization of a unimodal `f` on `[a, b]` to interval
/// width `rel_tol·max(|a|,|b|,1)`; returns `(argmin, min)`.
pub fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.6180339887498949;
    let tol = rel_tol * a.abs().max(b.abs()).max(1.0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Bisection root of a function with `f(lo) ≥ 0 ≥ f(hi)` (sign convention of
/// a decreasing crossing); returns the midpoint after the bracket shrinks to
/// `tol`.
pub fn bisect_decreasing<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Binomial coefficients C(n, 0..=n) via Pascal's rule (exact in f64 for the
/// dimensions used here).
pub fn binomial_row(n: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for j in 1..row.len() {
            next[j] = row[j - 1] + row[j];
        }
        row = next;
    }
    row
}

/// Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Squared Euclidean distance between two points of equal dimension.
pub fn dist_sq(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Inner product.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}
