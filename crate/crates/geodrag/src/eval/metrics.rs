//! Dragging-accuracy metrics.

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Mean Euclidean distance between final points and targets, converted to
/// image pixels by the latent-to-image scale factor.
pub fn mean_distance(final_points: &[Point2], targets: &[Point2], scale: f64) -> Result<f64> {
    if final_points.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} targets", final_points.len()),
            got: format!("{}", targets.len()),
        });
    }
    if final_points.is_empty() {
        return Err(Error::invalid("mean_distance over zero points"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!("scale must be > 0 (got {scale})")));
    }
    let total: f64 = final_points
        .iter()
        .zip(targets.iter())
        .map(|(p, g)| p.distance(g))
        .sum();
    Ok(total / final_points.len() as f64 * scale)
}

/// Rescales a pixel-space mean distance to the 512-pixel-wide convention,
/// for comparability across image resolutions.
pub fn normalize_to_512(md_pixels: f64, image_width: usize) -> f64 {
    md_pixels * 512.0 / image_width as f64
}

/// Median of a sample; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_when_points_hit_targets() {
        let pts = vec![Point2::new(1.0, 2.0), Point2::new(3.0, 4.0)];
        assert_eq!(mean_distance(&pts, &pts, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn three_four_five_triangle() {
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(9.0, 9.0)];
        let targets = vec![Point2::new(3.0, 4.0), Point2::new(9.0, 9.0)];
        assert_eq!(mean_distance(&pts, &targets, 1.0).unwrap(), 2.5);
    }

    #[test]
    fn matches_enumeration_oracle() {
        // oracle: accumulate the pairwise distances one by one
        let pts: Vec<Point2> = (0..10)
            .map(|i| Point2::new((i * 7 % 13) as f64, (i * 5 % 11) as f64))
            .collect();
        let targets: Vec<Point2> = (0..10)
            .map(|i| Point2::new((i * 3 % 17) as f64, (i * 11 % 7) as f64))
            .collect();
        let mut acc = 0.0;
        for i in 0..10 {
            let dx = pts[i].x - targets[i].x;
            let dy = pts[i].y - targets[i].y;
            acc += (dx * dx + dy * dy).sqrt();
        }
        let expect = acc / 10.0 * 3.0;
        let got = mean_distance(&pts, &targets, 3.0).unwrap();
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let pts = vec![Point2::new(0.0, 0.0)];
        assert!(mean_distance(&pts, &[], 1.0).is_err());
    }

    #[test]
    fn scales_linearly() {
        let pts = vec![Point2::new(0.0, 0.0)];
        let targets = vec![Point2::new(1.0, 0.0)];
        let md1 = mean_distance(&pts, &targets, 1.0).unwrap();
        let md8 = mean_distance(&pts, &targets, 8.0).unwrap();
        assert_eq!(md8, 8.0 * md1);
    }

    #[test]
    fn permutation_invariance() {
        let pts = vec![Point2::new(0.0, 0.0), Point2::new(5.0, 5.0), Point2::new(2.0, 8.0)];
        let targets = vec![Point2::new(1.0, 1.0), Point2::new(5.0, 9.0), Point2::new(0.0, 8.0)];
        let md = mean_distance(&pts, &targets, 1.0).unwrap();
        let perm = [2, 0, 1];
        let pts_p: Vec<Point2> = perm.iter().map(|&i| pts[i]).collect();
        let targets_p: Vec<Point2> = perm.iter().map(|&i| targets[i]).collect();
        let md_p = mean_distance(&pts_p, &targets_p, 1.0).unwrap();
        assert!((md - md_p).abs() < 1e-12);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
