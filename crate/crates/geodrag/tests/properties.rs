//! Randomized invariants over the sampling and metric primitives.

use geodrag::eval::mean_distance;
use geodrag::field::{patch_l1, sample_patch, Extractor, LatentField, Patch, PatchBlock};
use geodrag::geometry::Point2;
use proptest::prelude::*;

fn field_strategy(h: usize, w: usize, c: usize) -> impl Strategy<Value = LatentField> {
    proptest::collection::vec(-10.0f64..10.0, h * w * c)
        .prop_map(move |data| LatentField::from_data(h, w, c, data).unwrap())
}

fn block_strategy(radius: usize, channels: usize) -> impl Strategy<Value = PatchBlock> {
    let side = 2 * radius + 1;
    proptest::collection::vec(-10.0f64..10.0, side * side * channels).prop_map(move |data| PatchBlock {
        radius,
        channels,
        data,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_linear_in_the_field(
        a in field_strategy(10, 10, 2),
        b in field_strategy(10, 10, 2),
        fx in 0.0f64..0.999,
        fy in 0.0f64..0.999,
    ) {
        let patch = Patch::new(Point2::new(4.0 + fx, 4.0 + fy), 2);
        let ex = Extractor::binomial3x3(2);
        let sum = a.add_scaled(&b, 1.0).unwrap();
        let sampled_sum = sample_patch(&sum, &ex, &patch).unwrap();
        let sa = sample_patch(&a, &ex, &patch).unwrap();
        let sb = sample_patch(&b, &ex, &patch).unwrap();
        for ((s, x), y) in sampled_sum.data.iter().zip(sa.data.iter()).zip(sb.data.iter()) {
            prop_assert!((s - (x + y)).abs() <= 1e-12, "linearity violated: {s} vs {}", x + y);
        }
    }

    #[test]
    fn patch_l1_is_a_metric(
        a in block_strategy(1, 3),
        b in block_strategy(1, 3),
        c in block_strategy(1, 3),
    ) {
        let ab = patch_l1(&a, &b).unwrap();
        let ba = patch_l1(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(patch_l1(&a, &a).unwrap(), 0.0);
        if a.data != b.data {
            prop_assert!(ab > 0.0);
        }
        let ac = patch_l1(&a, &c).unwrap();
        let cb = patch_l1(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12, "triangle inequality: {ab} > {ac} + {cb}");
    }

    #[test]
    fn mean_distance_is_permutation_invariant_and_scales(
        coords in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0), 1..12),
        scale in 1.0f64..16.0,
    ) {
        let points: Vec<Point2> = coords.iter().map(|(x, y, _, _)| Point2::new(*x, *y)).collect();
        let targets: Vec<Point2> = coords.iter().map(|(_, _, x, y)| Point2::new(*x, *y)).collect();
        let md = mean_distance(&points, &targets, 1.0).unwrap();
        let scaled = mean_distance(&points, &targets, scale).unwrap();
        prop_assert!((scaled - md * scale).abs() <= 1e-9 * (1.0 + md * scale));

        let mut reversed_points = points.clone();
        let mut reversed_targets = targets.clone();
        reversed_points.reverse();
        reversed_targets.reverse();
        let md_rev = mean_distance(&reversed_points, &reversed_targets, 1.0).unwrap();
        prop_assert!((md - md_rev).abs() <= 1e-12);
    }

    #[test]
    fn integral_sampling_reads_cells_bit_exactly(
        field in field_strategy(9, 9, 3),
        x in 2usize..7,
        y in 2usize..7,
    ) {
        let block = sample_patch(&field, &Extractor::Identity, &Patch::new(Point2::new(x as f64, y as f64), 2)).unwrap();
        for dy in 0..5usize {
            for dx in 0..5usize {
                for c in 0..3 {
                    let direct = field.get(x + dx - 2, y + dy - 2, c);
                    prop_assert_eq!(block.get(dx, dy, c).to_bits(), direct.to_bits());
                }
            }
        }
    }
}
