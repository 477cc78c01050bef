//! Scale-invariant geometric primitives: eye aspect ratio and inter-vector
//! angles at the facial centroid.

use super::FeatureError;
use crate::types::{LandmarkLayout, Point, Region};
use serde::{Deserialize, Serialize};

/// Default degeneracy threshold for vanishing distances.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Eye openness: sum of the two vertical eyelid distances over twice the
/// horizontal corner distance. `p` is ordered p1..p6 with p1/p4 the corners.
pub fn eye_aspect_ratio(p: &[Point; 6], eps: f64) -> Result<f64, FeatureError> {
    let horizontal = p[0].distance(&p[3]);
    if horizontal < eps {
        return Err(FeatureError::DegenerateEye { width: horizontal });
    }
    let v1 = p[1].distance(&p[5]);
    let v2 = p[2].distance(&p[4]);
    Ok((v1 + v2) / (2.0 * horizontal))
}

/// Angle in [0, pi] at `c` between the vectors toward `a` and `b`:
/// arccos of the cosine clamped to [-1, 1].
pub fn inter_vector_angle(c: Point, a: Point, b: Point, eps: f64) -> Result<f64, FeatureError> {
    let (ux, uy) = (a.x - c.x, a.y - c.y);
    let (vx, vy) = (b.x - c.x, b.y - c.y);
    let nu = (ux * ux + uy * uy).sqrt();
    let nv = (vx * vx + vy * vy).sqrt();
    if nu < eps || nv < eps {
        return Err(FeatureError::DegenerateVector { pair_index: None });
    }
    let cos = ((ux * vx + uy * vy) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// How the facial centroid is derived from a frame's landmarks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidRule {
    /// Mean of the nose-region landmarks.
    NoseMean,
    /// A single fixed landmark index.
    Index(usize),
}

/// The pair list and centroid rule defining the inter-vector-angle vector.
/// Pair order is fixed at construction, so outputs are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleSpec {
    pub pairs: Vec<(usize, usize)>,
    /// Landmark indices averaged to form the centroid.
    pub centroid_indices: Vec<usize>,
}

impl TriangleSpec {
    /// Default enumeration: all unordered within-region landmark pairs,
    /// regions in canonical order, pairs in ascending index order.
    /// `stride` keeps every n-th pair (1 = all).
    pub fn within_region(layout: &LandmarkLayout, rule: &CentroidRule, stride: usize) -> Self {
        let stride = stride.max(1);
        let mut pairs = Vec::new();
        for region in Region::ALL {
            let idx = layout.region_indices(region);
            for a in 0..idx.len() {
                for b in (a + 1)..idx.len() {
                    pairs.push((idx[a], idx[b]));
                }
            }
        }
        let pairs = pairs.into_iter().step_by(stride).collect();
        let centroid_indices = match rule {
            CentroidRule::NoseMean => layout.region_indices(Region::NoseCenter),
            CentroidRule::Index(i) => vec![*i],
        };
        TriangleSpec {
            pairs,
            centroid_indices,
        }
    }

    pub fn centroid(&self, landmarks: &[Point]) -> Point {
        let n = self.centroid_indices.len().max(1) as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for &i in &self.centroid_indices {
            sx += landmarks[i].x;
            sy += landmarks[i].y;
        }
        Point::new(sx / n, sy / n)
    }

    /// Stable hex digest of the pair list and centroid rule.
    pub fn digest(&self) -> String {
        let mut enc = String::new();
        for &i in &self.centroid_indices {
            enc.push_str(&format!("c{i};"));
        }
        for &(a, b) in &self.pairs {
            enc.push_str(&format!("{a},{b};"));
        }
        crate::io::bytes_digest(enc.as_bytes())
    }
}

/// One inter-vector angle per spec pair, in spec order.
pub fn iva_raw(
    landmarks: &[Point],
    spec: &TriangleSpec,
    eps: f64,
) -> Result<Vec<f64>, FeatureError> {
    let c = spec.centroid(landmarks);
    let mut out = Vec::with_capacity(spec.pairs.len());
    for (k, &(i, j)) in spec.pairs.iter().enumerate() {
        let angle = inter_vector_angle(c, landmarks[i], landmarks[j], eps).map_err(|e| match e {
            FeatureError::DegenerateVector { .. } => FeatureError::DegenerateVector {
                pair_index: Some(k),
            },
            other => other,
        })?;
        out.push(angle);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn ear_symmetric_synthetic_eye() {
        let p = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(3.0, 1.0),
            Point::new(4.0, 0.0),
            Point::new(3.0, -1.0),
            Point::new(1.0, -1.0),
        ];
        assert_abs_diff_eq!(eye_aspect_ratio(&p, DEFAULT_EPS).unwrap(), 0.5);
    }

    #[test]
    fn ear_closed_eye_is_zero() {
        let p = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(4.0, 0.0),
            Point::new(3.0, 0.0),
            Point::new(1.0, 0.0),
        ];
        assert_abs_diff_eq!(eye_aspect_ratio(&p, DEFAULT_EPS).unwrap(), 0.0);
    }

    #[test]
    fn ear_zero_width_is_degenerate() {
        let p = [Point::new(1.0, 1.0); 6];
        assert!(matches!(
            eye_aspect_ratio(&p, DEFAULT_EPS),
            Err(FeatureError::DegenerateEye { .. })
        ));
    }

    #[test]
    fn iva_perpendicular_unit_vectors() {
        let c = Point::new(0.0, 0.0);
        let angle =
            inter_vector_angle(c, Point::new(1.0, 0.0), Point::new(0.0, 1.0), DEFAULT_EPS).unwrap();
        assert_abs_diff_eq!(angle, FRAC_PI_2, epsilon = 1e-15);
    }

    #[test]
    fn iva_identical_vectors_zero() {
        let c = Point::new(2.0, 3.0);
        let a = Point::new(5.0, 7.0);
        assert_abs_diff_eq!(inter_vector_angle(c, a, a, DEFAULT_EPS).unwrap(), 0.0);
    }

    #[test]
    fn iva_opposite_rays_pi() {
        let c = Point::new(0.0, 0.0);
        let angle =
            inter_vector_angle(c, Point::new(1.0, 0.0), Point::new(-2.0, 0.0), DEFAULT_EPS)
                .unwrap();
        assert_abs_diff_eq!(angle, PI, epsilon = 1e-15);
    }

    #[test]
    fn iva_degenerate_vector_rejected() {
        let c = Point::new(1.0, 1.0);
        assert!(matches!(
            inter_vector_angle(c, c, Point::new(2.0, 2.0), DEFAULT_EPS),
            Err(FeatureError::DegenerateVector { .. })
        ));
    }

    #[test]
    fn iva_raw_single_pair_and_invariance() {
        // Single-pair spec with a perpendicular layout at the centroid index.
        let landmarks = vec![Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(0.0, 3.0)];
        let spec = TriangleSpec {
            pairs: vec![(1, 2)],
            centroid_indices: vec![0],
        };
        let base = iva_raw(&landmarks, &spec, DEFAULT_EPS).unwrap();
        assert_eq!(base.len(), 1);
        assert_abs_diff_eq!(base[0], FRAC_PI_2, epsilon = 1e-12);

        let scaled: Vec<Point> = landmarks.iter().map(|p| Point::new(p.x * 3.0, p.y * 3.0)).collect();
        let shifted: Vec<Point> =
            landmarks.iter().map(|p| Point::new(p.x + 5.0, p.y - 7.0)).collect();
        assert_abs_diff_eq!(
            iva_raw(&scaled, &spec, DEFAULT_EPS).unwrap()[0],
            base[0],
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            iva_raw(&shifted, &spec, DEFAULT_EPS).unwrap()[0],
            base[0],
            epsilon = 1e-12
        );
    }

    #[test]
    fn default_pair_list_counts_within_regions() {
        let layout = LandmarkLayout::default();
        let spec = TriangleSpec::within_region(&layout, &CentroidRule::NoseMean, 1);
        // C(5,2)+C(36,2)+C(10,2)*2+C(16,2)*2+C(38,2)+C(2,2)
        let expect = 10 + 630 + 45 * 2 + 120 * 2 + 703 + 1;
        assert_eq!(spec.pairs.len(), expect);
        assert_eq!(spec.centroid_indices.len(), 5);
        // Digest is stable for a fixed spec.
        assert_eq!(spec.digest(), spec.digest());
    }
}
