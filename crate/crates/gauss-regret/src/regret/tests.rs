use super::*;
use crate::num::SQRT_2PI;
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn segment_theta(theta: f64) -> SetSpec {
    SetSpec::Segment { endpoints: [vec![0.0], vec![SQRT_2PI * theta]] }
}

fn ball(center: Vec<f64>, radius: f64) -> SetSpec {
    SetSpec::Ball { center, radius }
}

/// E‖G_n‖ = √2·Γ((n+1)/2)/Γ(n/2). The Γ ratio obeys
/// ratio(n+1) = (n/2)/ratio(n) from Γ(z+1) = z·Γ(z), seeded by
/// ratio(1) = Γ(1)/Γ(1/2) = 1/√π.
fn expected_norm(n: usize) -> f64 {
    let mut ratio = 1.0 / std::f64::consts::PI.sqrt();
    for k in 1..n {
        ratio = (k as f64 / 2.0) / ratio;
    }
    std::f64::consts::SQRT_2 * ratio
}

#[test]
fn exact_point_segment_product() {
    let p = regret_exact(&SetSpec::Point { at: vec![0.0, 0.0] }).unwrap();
    assert_eq!(p.value, 0.0);
    assert_eq!(p.half_width, 0.0);
    assert_eq!(p.method, Method::Exact);

    // Segment of length √2π·θ has regret log(1 + θ); θ = 3 gives log 4.
    let s = regret_exact(&segment_theta(3.0)).unwrap();
    assert!((s.value - 4.0f64.ln()).abs() < 1e-12, "got {}", s.value);

    let prod = SetSpec::Product { parts: vec![segment_theta(3.0), segment_theta(3.0)] };
    let pr = regret_exact(&prod).unwrap();
    assert!((pr.value - 2.0 * 4.0f64.ln()).abs() < 1e-12);
}

#[test]
fn exact_translate_is_noop_and_products_add() {
    let b = ball(vec![0.0, 0.0], 1.3);
    let plain = regret_exact(&b).unwrap().value;
    let moved = SetSpec::Translate { by: vec![5.0, -2.0], inner: Box::new(b.clone()) };
    assert_eq!(regret_exact(&moved).unwrap().value, plain);

    let bx = SetSpec::Box { corner: vec![0.0], sides: vec![2.0] };
    let sum = regret_exact(&bx).unwrap().value + plain;
    let prod = SetSpec::Product { parts: vec![bx, b] };
    assert!((regret_exact(&prod).unwrap().value - sum).abs() < 1e-12);
}

#[test]
fn exact_reports_unsupported_specs() {
    let hull = SetSpec::ConvexHull {
        points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
    };
    assert!(matches!(regret_exact(&hull), Err(Error::Unsupported(_))));
    let union = SetSpec::Union {
        parts: vec![ball(vec![0.0], 1.0), ball(vec![4.0], 1.0)],
    };
    assert!(matches!(regret_exact(&union), Err(Error::Unsupported(_))));
}

#[test]
fn quadrature_frozen_examples() {
    // Unit-scale segment: log(1 + 1) = log 2.
    let s = regret_quadrature(&segment_theta(1.0), 1e-6).unwrap();
    assert!((s.value - 2.0f64.ln()).abs() < 1e-5, "got {}", s.value);
    assert!(s.half_width <= 1e-5);
    assert_eq!(s.method, Method::Quadrature);
    assert!(s.samples > 0);

    // A point carries no mass beyond the Gaussian itself.
    let p = regret_quadrature(&SetSpec::Point { at: vec![0.0, 0.0] }, 1e-6).unwrap();
    assert!(p.value.abs() < 1e-5, "got {}", p.value);
    assert!(p.half_width <= 1e-5);
}

#[test]
fn quadrature_matches_exact_on_ball() {
    let spec = ball(vec![0.2, -0.4], 1.3);
    let exact = regret_exact(&spec).unwrap().value;
    let quad = regret_quadrature(&spec, 1e-6).unwrap();
    assert!(
        (quad.value - exact).abs() <= quad.half_width + 1e-9,
        "quad {} vs exact {exact} (hw {})",
        quad.value,
        quad.half_width
    );
}

#[test]
fn quadrature_two_far_points() {
    // dist(x, {0, s}) switches branch at s/2, so the smoothed mass is
    // Φ(s/2) + (1 − Φ(−s/2)) = 2Φ(s/2); at s = 10 that is barely under 2.
    let spec = SetSpec::FinitePoints { points: vec![vec![0.0], vec![10.0]] };
    let est = regret_quadrature(&spec, 1e-7).unwrap();
    let ln2 = 2.0f64.ln();
    assert!(est.value <= ln2 + 1e-6, "got {}", est.value);
    assert!(est.value > ln2 - 1e-3);
    let oracle = (2.0 * crate::num::normal_cdf(5.0)).ln();
    assert!((est.value - oracle).abs() <= est.half_width + 1e-7);
}

#[test]
fn quadrature_handles_unions_exactly() {
    // Two far-separated unit-scale segments: the overlap deficit is below
    // e^{−60}, so the smoothed masses add and the regret is log(2 + 2).
    let a = segment_theta(1.0);
    let b = SetSpec::Translate { by: vec![10.0 * SQRT_2PI], inner: Box::new(segment_theta(1.0)) };
    let union = SetSpec::Union { parts: vec![a, b] };
    let est = regret_quadrature(&union, 1e-6).unwrap();
    assert!(
        (est.value - 4.0f64.ln()).abs() <= est.half_width + 1e-6,
        "got {}",
        est.value
    );
}

#[test]
fn mc_matches_exact_on_ball_and_box() {
    let cfg = MCConfig { samples: 1 << 20, batches: 16, seed: 11 };

    let b = ball(vec![0.0, 0.0, 0.0], 1.5);
    let exact = regret_exact(&b).unwrap().value;
    let mc = regret_mc(&b, &cfg).unwrap();
    assert!(mc.half_width > 0.0);
    assert_eq!(mc.samples, 1 << 20);
    assert!(
        (mc.value - exact).abs() <= 3.0 * mc.half_width,
        "mc {} vs exact {exact} (hw {})",
        mc.value,
        mc.half_width
    );

    // √2π·[0,1]² has regret log(1+1)² = log 4.
    let bx = SetSpec::Box { corner: vec![0.0, 0.0], sides: vec![SQRT_2PI, SQRT_2PI] };
    let mcb = regret_mc(&bx, &cfg).unwrap();
    assert!((mcb.value - 4.0f64.ln()).abs() <= 3.0 * mcb.half_width);
}

#[test]
fn mc_is_bitwise_deterministic() {
    let cfg = MCConfig { samples: 1 << 16, batches: 16, seed: 5 };
    let spec = ball(vec![0.3, -0.1], 0.8);
    let a = regret_mc(&spec, &cfg).unwrap();
    let b = regret_mc(&spec, &cfg).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.half_width.to_bits(), b.half_width.to_bits());
    // A different seed moves the value.
    let c = regret_mc(&spec, &MCConfig { seed: 6, ..cfg }).unwrap();
    assert_ne!(a.value.to_bits(), c.value.to_bits());
}

#[test]
fn mc_small_scale_tracks_width() {
    // At scale t → 0 the regret behaves like t·w(A); for the unit ball in
    // R⁵ the Gaussian width is E‖G₅‖ = √2·Γ(3)/Γ(2.5) = √2·2/(0.75·√π).
    let w = expected_norm(5);
    assert!((w - 2.127692162140974).abs() < 1e-12);
    let t = 1e-3;
    let spec = SetSpec::Scale {
        factor: t,
        inner: Box::new(ball(vec![0.0; 5], 1.0)),
    };
    let cfg = MCConfig { samples: 1 << 20, batches: 16, seed: 3 };
    let est = regret_mc(&spec, &cfg).unwrap();
    assert!(
        (est.value - t * w).abs() <= 0.02 * t * w,
        "mc {} vs t·w {}",
        est.value,
        t * w
    );
}

#[test]
fn mc_respects_isometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let pts: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect();
    let g = DMatrix::from_fn(3, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let shift = [0.7, -0.3, 0.2];
    let moved: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            (0..3)
                .map(|i| (0..3).map(|j| q[(i, j)] * p[j]).sum::<f64>() + shift[i])
                .collect()
        })
        .collect();
    let cfg = MCConfig { samples: 1 << 19, batches: 16, seed: 7 };
    let a = regret_mc(&SetSpec::FinitePoints { points: pts }, &cfg).unwrap();
    let b = regret_mc(&SetSpec::FinitePoints { points: moved }, &cfg).unwrap();
    assert!(
        (a.value - b.value).abs() <= 3.0 * (a.half_width + b.half_width),
        "rotated copy moved the estimate: {} vs {}",
        a.value,
        b.value
    );
}

#[test]
fn mc_union_agrees_with_quadrature_oracle() {
    // A union of two nearby segments, where standard Gaussian samples cover
    // both parts. (A far-separated union is outside Monte Carlo's reach: the
    // sampler essentially never lands near the distant part, so its mass is
    // invisible at any practical sample size; the quadrature path is the
    // right tool there.)
    let a = segment_theta(1.0);
    let b = SetSpec::Translate { by: vec![-2.0], inner: Box::new(segment_theta(0.5)) };
    let union = SetSpec::Union { parts: vec![a, b] };
    let oracle = regret_quadrature(&union, 1e-7).unwrap();
    let cfg = MCConfig { samples: 1 << 20, batches: 16, seed: 23 };
    let est = regret_mc(&union, &cfg).unwrap();
    assert!(
        (est.value - oracle.value).abs() <= 3.0 * est.half_width + oracle.half_width,
        "mc {} vs quadrature {} (hw {})",
        est.value,
        oracle.value,
        est.half_width
    );
}

#[test]
fn mc_rejects_bad_configs() {
    let spec = ball(vec![0.0], 1.0);
    assert!(regret_mc(&spec, &MCConfig { samples: 8, batches: 16, seed: 0 }).is_err());
    assert!(regret_mc(&spec, &MCConfig { samples: 100, batches: 4, seed: 0 }).is_err());
    assert!(MCConfig::new(100, 1, 0).is_err());
    // A point has identically zero integrand exponent: every batch agrees
    // and the estimator reports the degenerate spread.
    let point = SetSpec::Point { at: vec![0.0] };
    assert!(matches!(
        regret_mc(&point, &MCConfig { samples: 1 << 10, batches: 16, seed: 0 }),
        Err(Error::DegenerateSpread(_))
    ));
}

#[test]
fn estimates_order_under_inclusion() {
    // Ball of radius 1 sits inside [−1,1]², so its regret is no larger.
    let b = regret_exact(&ball(vec![0.0, 0.0], 1.0)).unwrap().value;
    let bx = regret_exact(&SetSpec::Box { corner: vec![-1.0, -1.0], sides: vec![2.0, 2.0] })
        .unwrap()
        .value;
    assert!(b <= bx);

    // Monte Carlo variant on nested point clouds.
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let cloud: Vec<Vec<f64>> = (0..8)
        .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let small = SetSpec::FinitePoints { points: cloud[..4].to_vec() };
    let big = SetSpec::FinitePoints { points: cloud };
    let cfg = MCConfig { samples: 1 << 18, batches: 16, seed: 8 };
    let es = regret_mc(&small, &cfg).unwrap();
    let eb = regret_mc(&big, &cfg).unwrap();
    assert!(es.value <= eb.value + 3.0 * (es.half_width + eb.half_width));
}

#[test]
fn scaling_laws_on_a_grid() {
    // R*(tA) increases in t while R*(tA)/t decreases.
    let base = ball(vec![0.0, 0.0], 1.0);
    let grid = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
    let vals: Vec<f64> = grid
        .iter()
        .map(|&t| {
            regret_exact(&SetSpec::Scale { factor: t, inner: Box::new(base.clone()) })
                .unwrap()
                .value
        })
        .collect();
    for w in vals.windows(2) {
        assert!(w[0] < w[1], "regret must increase with scale: {vals:?}");
    }
    let ratios: Vec<f64> = grid.iter().zip(&vals).map(|(t, v)| v / t).collect();
    for w in ratios.windows(2) {
        assert!(w[0] >= w[1] - 1e-12, "regret/t must decrease: {ratios:?}");
    }
}

#[test]
fn noise_and_repetition_rescale() {
    let cfg = MCConfig::default();
    let spec = ball(vec![0.1, 0.2], 0.9);
    let plain = regret_exact(&spec).unwrap();
    let at_one = regret_at_noise(&spec, 1.0, 1e-6, &cfg).unwrap();
    assert_eq!(at_one.value.to_bits(), plain.value.to_bits());

    // Four repetitions double the effective scale of a segment:
    // log(1 + 2θ) at θ = 0.75 is log 2.5.
    let rep = regret_repeated(&segment_theta(0.75), 4, 1e-6, &cfg).unwrap();
    assert!((rep.value - 2.5f64.ln()).abs() < 1e-12, "got {}", rep.value);

    // Halving the noise is the same as doubling the set.
    let at_half = regret_at_noise(&spec, 0.5, 1e-6, &cfg).unwrap();
    let doubled = regret_exact(&SetSpec::Scale { factor: 2.0, inner: Box::new(spec.clone()) })
        .unwrap();
    assert!((at_half.value - doubled.value).abs() < 1e-12);

    // Monotone in the repetition count.
    let bx = SetSpec::Box { corner: vec![0.0, 0.0], sides: vec![1.0, 1.5] };
    let mut prev = f64::NEG_INFINITY;
    for n_rep in 1..=6 {
        let v = regret_repeated(&bx, n_rep, 1e-6, &cfg).unwrap().value;
        assert!(v > prev, "n_rep={n_rep}: {v} vs {prev}");
        prev = v;
    }

    assert!(regret_at_noise(&spec, 0.0, 1e-6, &cfg).is_err());
    assert!(regret_repeated(&spec, 0, 1e-6, &cfg).is_err());
}

#[test]
fn mixture_bound_examples() {
    let p1 = SetSpec::Point { at: vec![0.0, 0.0] };
    let p2 = SetSpec::Point { at: vec![3.0, 1.0] };
    let ests = vec![regret_exact(&p1).unwrap(), regret_exact(&p2).unwrap()];
    let bound = mixture_upper_bound(&[p1, p2], &ests).unwrap();
    assert!((bound.value - 2.0f64.ln()).abs() < 1e-15);
    assert_eq!(bound.method, Method::BoundUpper);

    // N identical parts cost exactly log N over one part.
    let b = ball(vec![0.0, 0.0], 1.2);
    let one = regret_exact(&b).unwrap();
    let parts = vec![b.clone(); 5];
    let ests = vec![one.clone(); 5];
    let bound = mixture_upper_bound(&parts, &ests).unwrap();
    assert!((bound.value - (one.value + 5.0f64.ln())).abs() < 1e-12);

    // A 4-piece cover of the θ = 4 segment upper-bounds the exact value.
    let whole = regret_exact(&segment_theta(4.0)).unwrap().value;
    let pieces: Vec<SetSpec> = (0..4)
        .map(|i| SetSpec::Segment {
            endpoints: [vec![i as f64 * SQRT_2PI], vec![(i + 1) as f64 * SQRT_2PI]],
        })
        .collect();
    let ests: Vec<RegretEstimate> =
        pieces.iter().map(|p| regret_exact(p).unwrap()).collect();
    let bound = mixture_upper_bound(&pieces, &ests).unwrap();
    assert!(bound.value >= whole, "bound {} below exact {whole}", bound.value);

    // Mismatched dims caught.
    let bad = mixture_upper_bound(
        &[SetSpec::Point { at: vec![0.0] }, SetSpec::Point { at: vec![0.0, 0.0] }],
        &[RegretEstimate::exact(0.0), RegretEstimate::exact(0.0)],
    );
    assert!(bad.is_err());
}

#[test]
fn width_bounds_pinch_and_degenerate_cases() {
    // Ball of radius θ/√n: both bounds close in on θ as n grows.
    let n = 400;
    let theta = 0.5;
    let r = theta / (n as f64).sqrt();
    let spec = ball(vec![0.0; n], r);
    let w = r * expected_norm(n);
    let diam = 2.0 * r;
    let (lo, hi) = width_bounds(&spec, w, diam);
    assert!(lo > theta - 0.01, "lower {lo}");
    assert!(hi <= theta + 1e-9, "upper {hi}");
    let exact = regret_exact(&spec).unwrap().value;
    assert!(
        lo - 1e-9 <= exact && exact <= hi + 1e-9,
        "exact {exact} outside [{lo}, {hi}]"
    );

    // Segment: the convex log(1+w) lower bound is tight.
    let theta = 1.5;
    let seg = segment_theta(theta);
    let w = theta; // E sup_{θ∈[0,v]} ⟨G,θ⟩ = ‖v‖·E g⁺ = ‖v‖/√2π
    let diam = SQRT_2PI * theta;
    let (lo, hi) = width_bounds(&seg, w, diam);
    let exact = regret_exact(&seg).unwrap().value;
    assert!((lo - exact).abs() < 1e-12, "tight lower {lo} vs exact {exact}");
    assert!(hi >= exact);

    // Two far points: lower bound vacuous (negative), upper is w = t/√2π.
    let t = 50.0;
    let two = SetSpec::FinitePoints { points: vec![vec![0.0], vec![t]] };
    let (lo, hi) = width_bounds(&two, t / SQRT_2PI, t);
    assert!(lo < 0.0, "expected vacuous lower bound, got {lo}");
    assert!((hi - t / SQRT_2PI).abs() < 1e-12);
}

#[test]
fn large_scale_gap_closes() {
    let cfg = MCConfig::default();
    // √2π·[0,1]² at t = 50: R*(tA) = 2·log(1+t), n log t = 2 log t, and the
    // volume term is 0, so the gap is 2·log(1 + 1/t) ≈ 0.0396.
    let square = SetSpec::Box { corner: vec![0.0, 0.0], sides: vec![SQRT_2PI, SQRT_2PI] };
    let rep = large_scale_report(&square, 50.0, 1e-6, &cfg).unwrap();
    assert!(rep.gap > 0.0 && rep.gap <= 0.05, "gap {}", rep.gap);
    assert!((rep.log_volume - 0.0).abs() < 1e-12);

    // √2π·[0,1] at t = 100: gap = log(1 + 1/t) ≈ 0.00995.
    let interval = SetSpec::Box { corner: vec![0.0], sides: vec![SQRT_2PI] };
    let rep = large_scale_report(&interval, 100.0, 1e-6, &cfg).unwrap();
    assert!(rep.gap > 0.0 && rep.gap <= 0.02, "gap {}", rep.gap);

    // Ball in R²: gap positive and decreasing along a dilation grid.
    let b = ball(vec![0.0, 0.0], 1.0);
    let gaps: Vec<f64> = [2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&t| large_scale_report(&b, t, 1e-6, &cfg).unwrap().gap)
        .collect();
    for w in gaps.windows(2) {
        assert!(w[0] > w[1] && w[1] > 0.0, "gaps not decreasing: {gaps:?}");
    }

    // Zero-volume specs are rejected: a segment in R² has V_2 = 0. (The 1-D
    // segment is full-dimensional and fine.)
    let flat = SetSpec::Segment { endpoints: [vec![0.0, 0.0], vec![1.0, 1.0]] };
    assert!(large_scale_report(&flat, 10.0, 1e-6, &cfg).is_err());
    assert!(large_scale_report(&segment_theta(1.0), 10.0, 1e-6, &cfg).is_ok());
}

#[test]
fn large_scale_exact_path_agrees_with_quadrature() {
    // Independent check of the closed form behind the report: integrate the
    // t = 20 square directly and compare with log Σ V_j.
    let t = 20.0;
    let scaled = SetSpec::Scale {
        factor: t,
        inner: Box::new(SetSpec::Box {
            corner: vec![0.0, 0.0],
            sides: vec![SQRT_2PI, SQRT_2PI],
        }),
    };
    let exact = regret_exact(&scaled).unwrap().value;
    assert!((exact - 2.0 * (1.0 + t).ln()).abs() < 1e-12);
    let quad = regret_quadrature(&scaled, 3e-4).unwrap();
    assert!(
        (quad.value - exact).abs() <= quad.half_width,
        "quad {} vs exact {exact} (hw {})",
        quad.value,
        quad.half_width
    );
}

#[test]
fn auto_dispatch_prefers_cheapest_valid_method() {
    let cfg = MCConfig { samples: 1 << 18, batches: 16, seed: 2 };
    let exact = regret_auto(&ball(vec![0.0, 0.0], 1.0), 1e-6, &cfg).unwrap();
    assert_eq!(exact.method, Method::Exact);

    let hull = SetSpec::ConvexHull {
        points: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
    };
    let quad = regret_auto(&hull, 1e-4, &cfg).unwrap();
    assert_eq!(quad.method, Method::Quadrature);

    // 5-dimensional cloud: no closed form, too high for the grid.
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let cloud: Vec<Vec<f64>> = (0..5)
        .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mc = regret_auto(&SetSpec::FinitePoints { points: cloud }, 1e-4, &cfg).unwrap();
    assert_eq!(mc.method, Method::MonteCarlo);
}

#[test]
fn estimate_serializes_with_snake_case_method() {
    let est = RegretEstimate {
        value: 1.25,
        method: Method::MonteCarlo,
        half_width: 0.01,
        samples: 1024,
        seed: 7,
    };
    let json = serde_json::to_string(&est).unwrap();
    assert!(json.contains("\"method\":\"monte_carlo\""), "{json}");
    let back: RegretEstimate = serde_json::from_str(&json).unwrap();
    assert_eq!(back.method, Method::MonteCarlo);
    assert_eq!(back.samples, 1024);

    for (m, name) in [
        (Method::Exact, "\"exact\""),
        (Method::Quadrature, "\"quadrature\""),
        (Method::BoundUpper, "\"bound_upper\""),
        (Method::BoundLower, "\"bound_lower\""),
    ] {
        assert_eq!(serde_json::to_string(&m).unwrap(), name);
    }
}
