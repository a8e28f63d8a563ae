use polardem::eari::{directional_fields, Direction};
use polardem::mosaic::angle_mask;
use polardem::{
    convolve, demosaick_mpfa_eari, guide_image, mosaic_mpfa, Angle, BorderMode, EariParams, GuidedFilterParams,
    Kernel2D, MpfaPattern, PlaneImage, PolarizationStack, Smoothing,
};
use proptest::prelude::*;

fn image(w: usize, h: usize) -> impl Strategy<Value = PlaneImage> {
    prop::collection::vec(0.0f64..1.0, w * h).prop_map(move |v| PlaneImage::from_vec(w, h, v).unwrap())
}

fn kernel() -> impl Strategy<Value = Kernel2D> {
    prop_oneof![Just(1usize), Just(3), Just(5), Just(7)]
        .prop_flat_map(|n| prop::collection::vec(-1.0f64..1.0, n * n).prop_map(move |t| Kernel2D::new(n, t).unwrap()))
}

fn naive(img: &PlaneImage, k: &Kernel2D, border: BorderMode) -> PlaneImage {
    let (w, h) = img.dims();
    let a = k.anchor() as isize;
    PlaneImage::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for r in 0..k.size() {
            for c in 0..k.size() {
                let yy = border.resolve(y as isize + r as isize - a, h);
                let xx = border.resolve(x as isize + c as isize - a, w);
                acc += k.tap(r, c) * img.get(xx, yy);
            }
        }
        acc
    })
    .unwrap()
}

fn max_diff(a: &PlaneImage, b: &PlaneImage) -> f64 {
    a.samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Smooth Stokes-consistent scene plus per-pixel noise, so the mosaic has
/// texture everywhere.
fn noisy_stack(w: usize, h: usize, noise: &[f64]) -> PolarizationStack {
    let planes = Angle::ALL.map(|a| {
        PlaneImage::from_fn(w, h, |x, y| {
            let s0 = 0.5 + 0.3 * ((x as f64) * 0.4).sin() * ((y as f64) * 0.3).cos();
            let s1 = 0.2 * ((x + y) as f64 * 0.2).cos();
            let s2 = 0.1;
            let t = 2.0 * a.radians();
            0.5 * (s0 + s1 * t.cos() + s2 * t.sin()) + noise[(y * w + x) % noise.len()]
        })
        .unwrap()
    });
    PolarizationStack::from_planes(planes).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_is_linear(p in image(16, 16), q in image(16, 16), k in kernel(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let mix = p.zip_map(&q, |x, y| a * x + b * y).unwrap();
        let lhs = convolve(&mix, &k, BorderMode::Replicate);
        let cp = convolve(&p, &k, BorderMode::Replicate);
        let cq = convolve(&q, &k, BorderMode::Replicate);
        let rhs = cp.zip_map(&cq, |x, y| a * x + b * y).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) < 1e-10);
    }

    #[test]
    fn interior_ignores_border_mode(p in image(16, 12), k in kernel()) {
        let rep = convolve(&p, &k, BorderMode::Replicate);
        let sym = convolve(&p, &k, BorderMode::Symmetric);
        let m = k.anchor();
        for y in m..12 - m {
            for x in m..16 - m {
                prop_assert_eq!(rep.get(x, y), sym.get(x, y));
            }
        }
    }

    #[test]
    fn convolution_matches_naive_loop(p in image(32, 32), k in kernel()) {
        for border in [BorderMode::Replicate, BorderMode::Symmetric, BorderMode::Reflect101] {
            prop_assert!(max_diff(&convolve(&p, &k, border), &naive(&p, &k, border)) < 1e-12);
        }
    }

    #[test]
    fn guide_is_convex_combination(raw in image(12, 10), full in any::<bool>()) {
        let params = EariParams {
            smoothing: if full { Smoothing::Full } else { Smoothing::OneSided },
            ..EariParams::default()
        };
        let g = guide_image(&raw, &params).unwrap();
        let fields = directional_fields(&raw, &params);
        for y in 0..10 {
            for x in 0..12 {
                let xs = fields.each_ref().map(|f| f.estimate.get(x, y));
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let v = g.get(x, y);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "({x},{y}) {v} outside [{lo},{hi}]");
            }
        }
    }

    #[test]
    fn guide_is_scale_equivariant(noise in prop::collection::vec(-0.05f64..0.05, 97), a in 0.1f64..10.0) {
        let raw = mosaic_mpfa(&noisy_stack(16, 16, &noise), &MpfaPattern::default());
        let params = EariParams::default();
        let fields = directional_fields(&raw, &params);
        let g = guide_image(&raw, &params).unwrap();
        let ga = guide_image(&raw.scale(a), &params).unwrap();
        let mut checked = 0;
        for i in 0..g.len() {
            // Exact zeros in the smoothed differences let the offset dominate; the
            // convex-combination property covers those pixels.
            if fields.iter().any(|f| f.smoothed_difference.samples()[i] <= 1e-6) {
                continue;
            }
            let (u, v) = (g.samples()[i], ga.samples()[i]);
            prop_assert!((v - a * u).abs() <= 1e-10 * (a * u).abs(), "{v} vs {}", a * u);
            checked += 1;
        }
        prop_assert!(checked > 100, "only {checked} pixels checked");
    }

    #[test]
    fn eari_keeps_samples_and_bounded_overshoot(noise in prop::collection::vec(-0.1f64..0.1, 61), seed_shift in 0usize..4) {
        let pat = MpfaPattern::default().shifted(seed_shift % 2, seed_shift / 2);
        let stack = noisy_stack(20, 18, &noise);
        let raw = mosaic_mpfa(&stack, &pat);
        let out = demosaick_mpfa_eari(&raw, &pat, &EariParams::default(), &GuidedFilterParams::default()).unwrap();
        for a in Angle::ALL {
            let mask = angle_mask(&pat, 20, 18, a);
            let plane = out.plane(a);
            for y in 0..18 {
                for x in 0..20 {
                    let v = plane.get(x, y);
                    prop_assert!(v.is_finite());
                    prop_assert!(v > -0.5 && v < 1.5, "overshoot {v}");
                    if mask.get(x, y) {
                        prop_assert!((v - raw.get(x, y)).abs() <= 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn vertical_polarized_step_favours_same_side() {
    // Left: S=(0.4, 0.3, 0). Right: S=(0.9, -0.3, 0.2). Step between columns 3 and 4.
    let (w, h, c) = (8usize, 8usize, 4usize);
    let stokes = |x: usize| if x < c { (0.4, 0.3, 0.0) } else { (0.9, -0.3, 0.2) };
    let planes = Angle::ALL.map(|a| {
        PlaneImage::from_fn(w, h, |x, _| {
            let (s0, s1, s2) = stokes(x);
            let t = 2.0 * a.radians();
            0.5 * (s0 + s1 * t.cos() + s2 * t.sin())
        })
        .unwrap()
    });
    let raw = mosaic_mpfa(
        &PolarizationStack::from_planes(planes).unwrap(),
        &MpfaPattern::default(),
    );
    let params = EariParams::default();
    let fields = directional_fields(&raw, &params);
    let g = guide_image(&raw, &params).unwrap();
    let d = |dir: Direction, x, y| fields[dir.index()].smoothed_difference.get(x, y);
    for y in 2..h - 2 {
        for x in [c - 1, c] {
            let across = d(Direction::East, x, y).max(d(Direction::West, x, y));
            let along = d(Direction::North, x, y).max(d(Direction::South, x, y));
            assert!(across > along, "({x},{y}) across {across} along {along}");
            let same_side = stokes(x).0 / 2.0;
            let plain = fields.iter().map(|f| f.estimate.get(x, y)).sum::<f64>() / 4.0;
            assert!(
                (g.get(x, y) - same_side).abs() < (plain - same_side).abs(),
                "({x},{y}) guide {} plain {plain} target {same_side}",
                g.get(x, y)
            );
        }
    }
}

#[test]
fn unpolarized_constant_is_reproduced() {
    let raw = PlaneImage::filled(10, 8, 0.37).unwrap();
    let g = guide_image(&raw, &EariParams::default()).unwrap();
    assert!(g.samples().iter().all(|v| (v - 0.37).abs() < 1e-15));
    let out = demosaick_mpfa_eari(
        &raw,
        &MpfaPattern::default(),
        &EariParams::default(),
        &GuidedFilterParams::default(),
    )
    .unwrap();
    for a in Angle::ALL {
        assert!(out.plane(a).samples().iter().all(|v| (v - 0.37).abs() < 1e-12));
    }
}
