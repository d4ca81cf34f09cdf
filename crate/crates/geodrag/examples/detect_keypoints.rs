//! Re-detects annotated keypoints in a transformed feature field by cosine
//! similarity, the mechanism that re-locates reference points after the
//! image content has been restyled or edited.

use geodrag::eval::{generate_synthetic_case, SyntheticSpec};
use geodrag::field::{detect_points, Extractor, LatentField};
use geodrag::geometry::Point2;

fn main() -> Result<(), geodrag::Error> {
    let case = generate_synthetic_case(&SyntheticSpec {
        blob_count: 3,
        drags: vec![[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
        seed: 99,
        ..SyntheticSpec::default()
    })?;

    // shift the whole field by (+5, +3); the detector should follow
    let (dx, dy) = (5i64, 3i64);
    let shifted = LatentField::from_fn(64, 64, 4, |x, y, c| {
        let sx = x as i64 - dx;
        let sy = y as i64 - dy;
        if (0..64).contains(&sx) && (0..64).contains(&sy) {
            case.field.get(sx as usize, sy as usize, c)
        } else {
            0.0
        }
    });

    let extractor = Extractor::binomial3x3(4);
    let feat_ref = extractor.apply(&case.field)?;
    let feat_new = extractor.apply(&shifted)?;
    let annotated: Vec<Point2> = case.centers.clone();
    let detections = detect_points(&feat_ref, &feat_new, &annotated)?;

    println!("field shifted by ({dx}, {dy}); detections:");
    for (annotated, detection) in annotated.iter().zip(&detections) {
        println!(
            "  {} -> ({}, {})  similarity {:.4}, ties {}",
            annotated,
            detection.position.0,
            detection.position.1,
            detection.similarity,
            detection.tie_count
        );
        assert_eq!(detection.position.0 as i64, annotated.x as i64 + dx);
        assert_eq!(detection.position.1 as i64, annotated.y as i64 + dy);
    }
    println!("all keypoints recovered at the shifted positions");
    Ok(())
}
