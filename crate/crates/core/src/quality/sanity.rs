use serde::{Deserialize, Serialize};

use crate::landmarks::template::{LEFT_EYE, MOUTH, RIGHT_EYE};
use crate::render::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonFinite,
    OutOfBounds,
    EyesBelowMouth,
    EyesCoincide,
    WrongCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub frame: usize,
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landmark: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub frames_checked: usize,
    pub violations: Vec<Violation>,
}

impl SanityReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn frames_with(&self, kind: ViolationKind) -> Vec<usize> {
        let mut f: Vec<usize> = self.violations.iter().filter(|v| v.kind == kind).map(|v| v.frame).collect();
        f.dedup();
        f
    }
}

fn centroid(pts: &[Point2]) -> Point2 {
    let n = pts.len() as f64;
    [pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n]
}

/// Per-frame checks on pixel landmarks: finite, inside a `width x height`
/// frame, eyes above the mouth (smaller y) and distinct eye centres.
pub fn landmark_sanity(frames: &[Vec<Point2>], width: u32, height: u32) -> SanityReport {
    let (w, h) = (f64::from(width), f64::from(height));
    let mut violations = Vec::new();
    for (f, pts) in frames.iter().enumerate() {
        if pts.len() != crate::landmarks::N_LANDMARKS {
            violations.push(Violation {
                frame: f,
                kind: ViolationKind::WrongCount,
                landmark: None,
            });
            continue;
        }
        let mut finite = true;
        for (i, p) in pts.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) {
                finite = false;
                violations.push(Violation {
                    frame: f,
                    kind: ViolationKind::NonFinite,
                    landmark: Some(i),
                });
            } else if p[0] < 0.0 || p[1] < 0.0 || p[0] > w - 1.0 || p[1] > h - 1.0 {
                violations.push(Violation {
                    frame: f,
                    kind: ViolationKind::OutOfBounds,
                    landmark: Some(i),
                });
            }
        }
        if !finite {
            continue;
        }
        let (re, le, mouth) = (centroid(&pts[RIGHT_EYE]), centroid(&pts[LEFT_EYE]), centroid(&pts[MOUTH]));
        if (re[1] + le[1]) / 2.0 >= mouth[1] {
            violations.push(Violation {
                frame: f,
                kind: ViolationKind::EyesBelowMouth,
                landmark: None,
            });
        }
        if ((re[0] - le[0]).powi(2) + (re[1] - le[1]).powi(2)).sqrt() <= 0.0 {
            violations.push(Violation {
                frame: f,
                kind: ViolationKind::EyesCoincide,
                landmark: None,
            });
        }
    }
    SanityReport {
        frames_checked: frames.len(),
        violations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, p: Point2) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    /// Clips to the pixel-centre extent of a `width x height` frame.
    pub fn clipped(&self, width: u32, height: u32) -> Self {
        let (w, h) = (f64::from(width) - 1.0, f64::from(height) - 1.0);
        Self {
            x0: self.x0.clamp(0.0, w),
            y0: self.y0.clamp(0.0, h),
            x1: self.x1.clamp(0.0, w),
            y1: self.y1.clamp(0.0, h),
        }
    }
}

/// Landmark extent grown by `margin_frac` of its width/height on each side.
pub fn face_box(points: &[Point2], margin_frac: f64) -> BoundingBox {
    let mut b = BoundingBox {
        x0: f64::INFINITY,
        y0: f64::INFINITY,
        x1: f64::NEG_INFINITY,
        y1: f64::NEG_INFINITY,
    };
    for p in points {
        b.x0 = b.x0.min(p[0]);
        b.y0 = b.y0.min(p[1]);
        b.x1 = b.x1.max(p[0]);
        b.y1 = b.y1.max(p[1]);
    }
    let (mx, my) = (margin_frac * b.width(), margin_frac * b.height());
    BoundingBox {
        x0: b.x0 - mx,
        y0: b.y0 - my,
        x1: b.x1 + mx,
        y1: b.y1 + my,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmarks::LandmarkTemplate;
    use crate::render::Camera;

    fn template_px() -> Vec<Point2> {
        Camera::default().project_frame(&LandmarkTemplate::canonical().points)
    }

    #[test]
    fn template_passes() {
        let r = landmark_sanity(&vec![template_px(); 5], 256, 256);
        assert!(r.pass());
        assert_eq!(r.frames_checked, 5);
    }

    #[test]
    fn outside_point_is_flagged_on_its_frame() {
        let mut frames = vec![template_px(); 3];
        frames[1][10] = [-5.0, 10.0];
        let r = landmark_sanity(&frames, 256, 256);
        assert_eq!(
            r.violations,
            vec![Violation {
                frame: 1,
                kind: ViolationKind::OutOfBounds,
                landmark: Some(10)
            }]
        );
    }

    #[test]
    fn flipped_face_has_eyes_below_mouth() {
        let flipped: Vec<Point2> = template_px().iter().map(|p| [p[0], 255.0 - p[1]]).collect();
        let r = landmark_sanity(&[template_px(), flipped], 256, 256);
        assert_eq!(r.frames_with(ViolationKind::EyesBelowMouth), vec![1]);
    }

    #[test]
    fn nan_is_flagged() {
        let mut f = template_px();
        f[0][1] = f64::NAN;
        assert_eq!(landmark_sanity(&[f], 256, 256).violations[0].kind, ViolationKind::NonFinite);
    }

    #[test]
    fn unit_square_box() {
        let b = face_box(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 0.1);
        for (got, want) in [(b.x0, -0.1), (b.y0, -0.1), (b.x1, 1.1), (b.y1, 1.1)] {
            assert!((got - want).abs() < 1e-12);
        }
        let c = b.clipped(256, 256);
        assert_eq!((c.x0, c.y0), (0.0, 0.0));
        let big = face_box(&[[-20.0, 3.0], [400.0, 300.0]], 0.0).clipped(256, 128);
        assert_eq!((big.x0, big.x1, big.y1), (0.0, 255.0, 127.0));
    }
}
