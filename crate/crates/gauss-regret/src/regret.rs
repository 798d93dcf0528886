//! Minimax regret of Gaussian location families with means constrained to a
//! bounded set, in nats.
//!
//! The central quantity is the log of the set's Gaussian-smoothed volume at
//! noise scale `√2π`: for a convex body it expands into intrinsic volumes as
//! `log Σ_j V_j(K/√2π)`, and for an arbitrary bounded set it is
//! `log (2π)^{−n/2} ∫ e^{−dist²(x,A)/2} dx`. Three estimators cover the
//! spectrum:
//!
//! * [`regret_exact`]: the intrinsic-volume closed form, for specs whose
//!   volume sequence is available exactly (points, segments, balls, boxes,
//!   and scalings/translations/products of those).
//! * [`regret_quadrature`]: deterministic tensor-grid integration in
//!   dimension ≤ 4, with an explicit discretization + tail error budget.
//! * [`regret_mc`]: seeded Monte Carlo via the Gaussian representation
//!   `R* = log E exp(sup_θ [⟨θ,X⟩ − ‖θ‖²/2])`, accumulated in log-domain
//!   with batch-means standard errors.
//!
//! [`regret_auto`] dispatches exact → quadrature → Monte Carlo. Rescaling
//! laws ([`regret_at_noise`], [`regret_repeated`]), the mixture upper bound
//! for unions, elementary width-based bounds, and the large-dilation volume
//! comparison ([`large_scale_report`]) round out the module.

use crate::num::{combine_batch_log_means, LogMeanExp, LN_2PI};
use crate::quadrature::log_gauss_integral;
use crate::rng::{chunk_rng, fill_standard_normal, STREAM_REGRET};
use crate::set::SetSpec;
use crate::volumes::{exact_volumes, regret_from_volumes};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How a [`RegretEstimate`] was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Quadrature,
    MonteCarlo,
    BoundUpper,
    BoundLower,
}

/// A regret value in nats together with its provenance and uncertainty.
///
/// `half_width` is 0 exactly when the value is exact: quadrature reports its
/// declared truncation + discretization budget, Monte Carlo reports twice the
/// batch-means standard error on the log value, and bounds inherit the
/// uncertainty of the estimates they were assembled from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegretEstimate {
    pub value: f64,
    pub method: Method,
    pub half_width: f64,
    pub samples: u64,
    pub seed: u64,
}

impl RegretEstimate {
    fn exact(value: f64) -> RegretEstimate {
        RegretEstimate {
            value,
            method: Method::Exact,
            half_width: 0.0,
            samples: 0,
            seed: 0,
        }
    }
}

/// Sampling plan for [`regret_mc`] and the other Monte Carlo estimators.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MCConfig {
    pub samples: u64,
    pub batches: u64,
    pub seed: u64,
}

impl MCConfig {
    pub fn new(samples: u64, batches: u64, seed: u64) -> Result<MCConfig> {
        let cfg = MCConfig { samples, batches, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.batches < 2 || self.samples < self.batches {
            return Err(Error::InvalidSpec(format!(
                "Monte Carlo config needs samples >= batches >= 2, got \
                 samples {} batches {}",
                self.samples, self.batches
            )));
        }
        Ok(())
    }
}

impl Default for MCConfig {
    fn default() -> MCConfig {
        MCConfig { samples: 1 << 20, batches: 16, seed: 17 }
    }
}

/// Closed-form regret `log Σ_j V_j(A/√2π)` for specs with an exact intrinsic
/// volume sequence. Translations are a no-op (the functional is isometry
/// invariant) and products add.
pub fn regret_exact(spec: &SetSpec) -> Result<RegretEstimate> {
    spec.validate()?;
    let seq = exact_volumes(spec).ok_or_else(|| {
        Error::Unsupported(
            "no closed-form volume sequence for this spec; use quadrature or \
             Monte Carlo"
                .into(),
        )
    })?;
    Ok(RegretEstimate::exact(regret_from_volumes(&seq, 1.0)))
}

/// Deterministic tensor-grid estimate in dimension ≤ 4. The half-width is
/// the step-halving agreement budget `tol` plus the analytic bound on the
/// Gaussian tail outside the integration box.
pub fn regret_quadrature(spec: &SetSpec, tol: f64) -> Result<RegretEstimate> {
    let out = log_gauss_integral(spec, tol)?;
    Ok(RegretEstimate {
        value: out.log_value,
        method: Method::Quadrature,
        half_width: out.half_width,
        samples: out.cells,
        seed: 0,
    })
}

/// Monte Carlo estimate via the Gaussian representation: draws standard
/// normal `X` and averages `exp(sup_quadratic(A, X))` in log-domain.
///
/// Work is split into `cfg.batches` independent streams with derived seeds,
/// so the result is bitwise reproducible for a fixed `(seed, samples,
/// batches)` regardless of thread scheduling. The reported half-width is
/// twice the batch-means standard error propagated to the log value; a zero
/// spread across batches is reported as an error rather than a zero-width
/// interval.
pub fn regret_mc(spec: &SetSpec, cfg: &MCConfig) -> Result<RegretEstimate> {
    spec.validate()?;
    cfg.validate()?;
    if cfg.batches < 16 {
        return Err(Error::InvalidSpec(format!(
            "regret_mc needs at least 16 batches for a stable batch-means \
             standard error, got {}",
            cfg.batches
        )));
    }
    let per_batch = cfg.samples / cfg.batches;
    let n = spec.dim();
    let batch_means: Result<Vec<f64>> = (0..cfg.batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = chunk_rng(cfg.seed, STREAM_REGRET, b);
            let mut x = vec![0.0f64; n];
            let mut acc = LogMeanExp::new();
            for _ in 0..per_batch {
                fill_standard_normal(&mut rng, &mut x);
                acc.push(spec.sup_quadratic(&x)?);
            }
            Ok(acc.log_mean())
        })
        .collect();
    let batch_means = batch_means?;
    let (value, se) = combine_batch_log_means(&batch_means);
    if se == 0.0 {
        return Err(Error::DegenerateSpread(format!(
            "all {} batch means equal {value}; the estimator cannot assess \
             its own error on this spec",
            cfg.batches
        )));
    }
    Ok(RegretEstimate {
        value,
        method: Method::MonteCarlo,
        half_width: 2.0 * se,
        samples: per_batch * cfg.batches,
        seed: cfg.seed,
    })
}

/// Dispatch: exact closed form, else quadrature when the dimension allows
/// it, else Monte Carlo. Only "this estimator does not apply" failures fall
/// through; structural errors (invalid specs, unsupported compositions)
/// propagate immediately, since the next estimator would fail the same way.
pub fn regret_auto(spec: &SetSpec, tol: f64, cfg: &MCConfig) -> Result<RegretEstimate> {
    match regret_exact(spec) {
        Ok(est) => return Ok(est),
        Err(Error::Unsupported(_)) => {}
        Err(e) => return Err(e),
    }
    if spec.dim() <= 4 {
        match regret_quadrature(spec, tol) {
            Ok(est) => return Ok(est),
            Err(Error::Unsupported(_) | Error::NoConvergence(_)) => {}
            Err(e) => return Err(e),
        }
    }
    regret_mc(spec, cfg)
}

/// Regret at noise level `σ`: evaluates the functional on `A/σ`.
pub fn regret_at_noise(
    spec: &SetSpec,
    sigma: f64,
    tol: f64,
    cfg: &MCConfig,
) -> Result<RegretEstimate> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "noise level must be positive, got {sigma}"
        )));
    }
    let scaled = SetSpec::Scale { factor: 1.0 / sigma, inner: Box::new(spec.clone()) };
    regret_auto(&scaled, tol, cfg)
}

/// Regret of the repeated observation model: `n_rep` looks at the same mean
/// average to one look at noise `1/√n_rep`, i.e. the functional on
/// `√n_rep · A`.
pub fn regret_repeated(
    spec: &SetSpec,
    n_rep: u64,
    tol: f64,
    cfg: &MCConfig,
) -> Result<RegretEstimate> {
    if n_rep == 0 {
        return Err(Error::InvalidSpec("repetition count must be >= 1".into()));
    }
    let scaled = SetSpec::Scale {
        factor: (n_rep as f64).sqrt(),
        inner: Box::new(spec.clone()),
    };
    regret_auto(&scaled, tol, cfg)
}

/// Upper bound for a union from per-part estimates: predicting with the
/// uniform mixture of the per-part strategies costs at most
/// `max_i R*(A_i) + log N`.
pub fn mixture_upper_bound(
    parts: &[SetSpec],
    part_regrets: &[RegretEstimate],
) -> Result<RegretEstimate> {
    if parts.is_empty() || parts.len() != part_regrets.len() {
        return Err(Error::InvalidSpec(format!(
            "mixture bound needs one estimate per part, got {} parts and {} \
             estimates",
            parts.len(),
            part_regrets.len()
        )));
    }
    let dim = parts[0].dim();
    for p in parts {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
        }
    }
    let worst = part_regrets
        .iter()
        .map(|e| e.value)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(RegretEstimate {
        value: worst + (parts.len() as f64).ln(),
        method: Method::BoundUpper,
        half_width: part_regrets.iter().map(|e| e.half_width).fold(0.0, f64::max),
        samples: part_regrets.iter().map(|e| e.samples).sum(),
        seed: 0,
    })
}

/// Elementary width-based sandwich in nats, from a Gaussian width estimate
/// `w ≈ E sup_{θ∈A} ⟨G, θ⟩` and the diameter: the regret is at most `w`,
/// and at least `w − diam²/2`; convex specs also admit the `log(1 + w)`
/// lower bound. The lower bound may be negative (vacuous) for spread-out
/// sets; it is returned as computed.
pub fn width_bounds(spec: &SetSpec, w_est: f64, diam: f64) -> (f64, f64) {
    let mut lower = w_est - 0.5 * diam * diam;
    if spec.is_convex() {
        lower = lower.max(w_est.ln_1p());
    }
    (lower, w_est)
}

/// Convergence report for large dilations: as `t` grows, `R*(tA) − n log t`
/// falls to `log vol_n(A/√2π)`, the log volume term of the expansion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LargeScaleReport {
    /// `R*(tA) − n·log t`.
    pub shifted_regret: f64,
    /// `log vol_n(A/√2π) = log V_n(A) − (n/2)·log 2π`.
    pub log_volume: f64,
    /// `shifted_regret − log_volume`; positive and decreasing in `t`.
    pub gap: f64,
    /// The underlying estimate of `R*(tA)`.
    pub estimate: RegretEstimate,
}

/// Compares `R*(tA) − n log t` against the limiting volume term. Needs the
/// closed-form volume sequence for the volume side; the regret side goes
/// through the usual dispatch.
pub fn large_scale_report(
    spec: &SetSpec,
    t: f64,
    tol: f64,
    cfg: &MCConfig,
) -> Result<LargeScaleReport> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidSpec(format!("dilation must be positive, got {t}")));
    }
    spec.validate()?;
    let n = spec.dim();
    let seq = exact_volumes(spec).ok_or_else(|| {
        Error::Unsupported(
            "large-scale report needs a closed-form volume sequence for the \
             volume term"
                .into(),
        )
    })?;
    let vn = seq.values[n];
    if vn <= 0.0 {
        return Err(Error::InvalidSpec(
            "large-scale comparison needs positive n-dimensional volume".into(),
        ));
    }
    let log_volume = vn.ln() - 0.5 * n as f64 * LN_2PI;
    let scaled = SetSpec::Scale { factor: t, inner: Box::new(spec.clone()) };
    let estimate = regret_auto(&scaled, tol, cfg)?;
    let shifted_regret = estimate.value - n as f64 * t.ln();
    Ok(LargeScaleReport {
        shifted_regret,
        log_volume,
        gap: shifted_regret - log_volume,
        estimate,
    })
}

#[cfg(test)]
mod tests;
