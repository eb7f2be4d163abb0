mod common;

use proptest::prelude::*;
use vbokeh::attention::{mpi_attention, AttentionMask, GateParams, TokenMatrix};
use vbokeh::metrics::{self, RoiMask};
use vbokeh::optics::{self, layer_thresholds};
use vbokeh::perturb::{self, MorphOp};
use vbokeh::rng;
use vbokeh::temporal::{blend_weight, plan_segments, Blend};
use vbokeh::{mpi, BokehParams, DisparityMap, FocalSpec, Frame};

fn frame_strategy() -> impl Strategy<Value = Frame> {
    (4usize..20, 4usize..20, any::<u64>()).prop_map(|(w, h, seed)| common::random_frame(w, h, seed))
}

fn disparity_for(frame: &Frame, seed: u64) -> DisparityMap {
    common::random_disparity(frame.width(), frame.height(), seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn thresholds_increase_and_stay_in_unit_interval(n in 2usize..64, df in 0.01f64..20.0) {
        let h = layer_thresholds(n, FocalSpec::new(df).unwrap()).unwrap();
        prop_assert_eq!(h.thresholds().len(), n - 1);
        prop_assert!(h.thresholds().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(h.thresholds().iter().all(|&t| t > 0.0 && t < 1.0));
    }

    #[test]
    fn masks_nest_and_cover(frame in frame_strategy(), seed in any::<u64>(), df in 0.05f64..1.0, n in 2usize..20) {
        let d = disparity_for(&frame, seed);
        let f = FocalSpec::new(df).unwrap();
        let norm = optics::clip_norm_constant(std::slice::from_ref(&d), f);
        let mask = optics::build_mpi_mask(&d, f, n, norm).unwrap();
        for i in 1..n {
            prop_assert!(mask.layer(i).iter().zip(mask.layer(i + 1)).all(|(a, b)| !a || b));
        }
        prop_assert!(mask.layer(n).iter().all(|&b| b));
        let bands = optics::exclusive_bands(&mask);
        for p in 0..d.values().len() {
            prop_assert_eq!(bands.iter().filter(|b| b[p]).count(), 1);
        }
    }

    #[test]
    fn vd_map_is_normalized(frame in frame_strategy(), seed in any::<u64>(), df in 0.05f64..1.0) {
        let d = disparity_for(&frame, seed);
        let f = FocalSpec::new(df).unwrap();
        let vd = optics::vd_map(&d, f, optics::clip_norm_constant(std::slice::from_ref(&d), f));
        prop_assert!(vd.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        prop_assert!(vd.values().iter().any(|&v| v == 1.0));
    }

    #[test]
    fn zero_strength_is_identity(frame in frame_strategy(), seed in any::<u64>(), df in 0.05f64..1.0, n in 2usize..24) {
        let d = disparity_for(&frame, seed);
        let f = FocalSpec::new(df).unwrap();
        let params = BokehParams::new(f, 0.0, n).unwrap();
        let out = mpi::render_bokeh_frame(&frame, &d, &params, optics::clip_norm_constant(std::slice::from_ref(&d), f)).unwrap();
        prop_assert!(out.max_abs_diff(&frame) <= 1e-6);
    }

    #[test]
    fn render_is_a_convex_combination(frame in frame_strategy(), seed in any::<u64>(), k in 0.0f64..20.0) {
        let d = disparity_for(&frame, seed);
        let f = FocalSpec::new(0.5).unwrap();
        let out = mpi::render_bokeh_frame(&frame, &d, &BokehParams::new(f, k, 8).unwrap(), 0.5).unwrap();
        for c in 0..3 {
            let channel = |fr: &Frame| fr.data().iter().skip(c).step_by(3).copied().collect::<Vec<f32>>();
            let src = channel(&frame);
            let (lo, hi) = src.iter().fold((f32::MAX, f32::MIN), |(a, b), &v| (a.min(v), b.max(v)));
            prop_assert!(channel(&out).iter().all(|&v| v >= lo - 1e-5 && v <= hi + 1e-5));
        }
    }

    #[test]
    fn flat_colour_stays_flat(w in 4usize..24, h in 4usize..24, seed in any::<u64>(), k in 0.0f64..30.0) {
        let frame = Frame::filled(w, h, [0.2, 0.5, 0.8]).unwrap();
        let d = common::random_disparity(w, h, seed);
        let out = mpi::render_bokeh_frame(&frame, &d, &BokehParams::new(FocalSpec::new(0.4).unwrap(), k, 16).unwrap(), 0.6).unwrap();
        prop_assert!(out.max_abs_diff(&frame) < 1e-5);
    }

    #[test]
    fn blend_weights_are_complementary(l in 1usize..32, j in 0usize..32) {
        let j = j.min(l);
        for blend in [Blend::Cosine, Blend::Linear] {
            let a = blend_weight(j, l, blend).unwrap();
            let b = blend_weight(l - j, l, blend).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn segment_plans_cover_every_frame(total in 1usize..200, overlap in 1usize..16) {
        let plan = plan_segments(total, overlap).unwrap();
        prop_assert!((0..total).all(|t| plan.coverage(t) >= 1));
        prop_assert_eq!(plan.segments().last().unwrap().end, total);
        if total >= 2 * overlap {
            prop_assert!(plan.segments().iter().all(|s| s.len() == 2 * overlap));
        }
        prop_assert!(plan.segments().windows(2).all(|p| p[0].start < p[1].start && p[1].start < p[0].end));
    }

    #[test]
    fn morphology_orders_and_settles(w in 3usize..24, h in 3usize..24, seed in any::<u64>(), r in 1usize..4) {
        let d = common::random_disparity(w, h, seed);
        let er = perturb::morphological(&d, MorphOp::Erode, r).unwrap();
        let di = perturb::morphological(&d, MorphOp::Dilate, r).unwrap();
        let op = perturb::morphological(&d, MorphOp::Open, r).unwrap();
        let cl = perturb::morphological(&d, MorphOp::Close, r).unwrap();
        for i in 0..d.values().len() {
            let v = d.values()[i];
            prop_assert!(er.values()[i] <= v && v <= di.values()[i]);
            prop_assert!(op.values()[i] <= v && v <= cl.values()[i]);
        }
        prop_assert_eq!(perturb::morphological(&op, MorphOp::Open, r).unwrap(), op);
        prop_assert_eq!(perturb::morphological(&cl, MorphOp::Close, r).unwrap(), cl);
    }

    #[test]
    fn perturbations_keep_disparity_positive(w in 8usize..32, h in 8usize..32, seed in any::<u64>(), alpha in 0.0f64..8.0, amp in 0.0f64..2.0) {
        let d = common::random_disparity(w, h, seed);
        let warped = perturb::elastic_transform(&d, alpha, 3.0, seed).unwrap();
        let noisy = perturb::perlin_noise_add(&warped, amp, 8.0, seed).unwrap();
        prop_assert!(noisy.values().iter().all(|&v| v > 0.0 && v.is_finite()));
        let (lo, hi) = d.min_max();
        prop_assert!(warped.values().iter().all(|&v| v >= lo - 1e-6 && v <= hi + 1e-6));
    }

    #[test]
    fn frame_metrics_are_symmetric_and_bounded(w in 11usize..24, h in 11usize..24, a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (common::random_frame(w, h, a), common::random_frame(w, h, b));
        prop_assert_eq!(metrics::psnr(&x, &y).unwrap(), metrics::psnr(&y, &x).unwrap());
        let s = metrics::ssim(&x, &y).unwrap();
        prop_assert!((s - metrics::ssim(&y, &x).unwrap()).abs() < 1e-12);
        prop_assert!(s <= 1.0 + 1e-12);
        let v = metrics::vepi(&x, &y, &RoiMask::full(w, h)).unwrap();
        prop_assert!((-1.0..=1.0).contains(&v));
    }

    #[test]
    fn attention_rows_are_distributions(nq in 1usize..6, nv in 1usize..12, dim in 1usize..8, seed in any::<u64>(), gamma in -3.0f64..3.0) {
        let q = TokenMatrix::random(nq, dim, seed).unwrap();
        let v = TokenMatrix::random(nv, 5, seed ^ 1).unwrap();
        let bits: Vec<bool> = (0..nv).map(|i| rng::uniform(&[seed, i as u64]) < 0.5).collect();
        let mask = AttentionMask::from_tokens(&bits);
        let params = GateParams::random(dim, 5, 3, gamma, seed).unwrap();
        let out = mpi_attention(&q, &v, 7.5, &mask, &params).unwrap();
        for row in &out.weights {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for (w, &ok) in row.iter().zip(mask.admissible()) {
                prop_assert!(*w >= 0.0 && (ok || *w == 0.0));
            }
        }
    }

    #[test]
    fn lens_samples_stay_on_the_unit_disk(u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (x, y) = rng::concentric_disk(u, v);
        prop_assert!(x * x + y * y <= 1.0 + 1e-12);
    }
}
