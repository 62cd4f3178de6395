use serde::{Deserialize, Serialize};

use crate::landmarks::{LandmarkSequence, LandmarkTemplate};

pub type Point2 = [f64; 2];

/// Orthographic camera: `x_px = scale * x + cx`, `y_px = scale * y + cy`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub scale: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Default for Camera {
    /// Frames the canonical template inside a 256 x 256 image.
    fn default() -> Self {
        Self {
            scale: 180.0,
            cx: 128.0,
            cy: 128.0,
        }
    }
}

impl Camera {
    pub fn project_point(&self, p: &[f64; 3]) -> Point2 {
        [self.scale * p[0] + self.cx, self.scale * p[1] + self.cy]
    }

    pub fn project_frame(&self, frame: &[[f64; 3]]) -> Vec<Point2> {
        frame.iter().map(|p| self.project_point(p)).collect()
    }

    /// Least-squares scale and offset taking the template's (x, y) onto `points`.
    pub fn fit(template: &LandmarkTemplate, points: &[Point2]) -> Self {
        let n = points.len().min(template.points.len()) as f64;
        let (mut mx, mut my, mut px, mut py) = (0.0, 0.0, 0.0, 0.0);
        for (t, p) in template.points.iter().zip(points) {
            mx += t[0] / n;
            my += t[1] / n;
            px += p[0] / n;
            py += p[1] / n;
        }
        let (mut num, mut den) = (0.0, 0.0);
        for (t, p) in template.points.iter().zip(points) {
            let (ax, ay) = (t[0] - mx, t[1] - my);
            num += ax * (p[0] - px) + ay * (p[1] - py);
            den += ax * ax + ay * ay;
        }
        let scale = if den > 0.0 { num / den } else { 1.0 };
        Self {
            scale,
            cx: px - scale * mx,
            cy: py - scale * my,
        }
    }
}

/// Per-frame 2D pixel landmarks; z is dropped.
pub fn project(seq: &LandmarkSequence, camera: &Camera) -> Vec<Vec<Point2>> {
    seq.frames().iter().map(|f| camera.project_frame(f)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_camera_passes_coordinates_through() {
        let c = Camera {
            scale: 1.0,
            cx: 0.0,
            cy: 0.0,
        };
        assert_eq!(c.project_point(&[0.3, -0.2, 5.0]), [0.3, -0.2]);
    }

    #[test]
    fn doubling_scale_doubles_centred_coordinates() {
        let t = LandmarkTemplate::canonical();
        let a = Camera::default();
        let b = Camera { scale: 2.0 * a.scale, ..a };
        for p in &t.points {
            let (pa, pb) = (a.project_point(p), b.project_point(p));
            assert!(((pb[0] - b.cx) - 2.0 * (pa[0] - a.cx)).abs() < 1e-12);
            assert!(((pb[1] - b.cy) - 2.0 * (pa[1] - a.cy)).abs() < 1e-12);
        }
    }

    #[test]
    fn default_camera_frames_the_template() {
        let t = LandmarkTemplate::canonical();
        for p in Camera::default().project_frame(&t.points) {
            assert!(p[0] > 0.0 && p[0] < 255.0 && p[1] > 0.0 && p[1] < 255.0, "{p:?}");
        }
    }

    #[test]
    fn fit_recovers_a_known_camera() {
        let t = LandmarkTemplate::canonical();
        let c = Camera {
            scale: 150.0,
            cx: 120.0,
            cy: 131.0,
        };
        let f = Camera::fit(&t, &c.project_frame(&t.points));
        assert!((f.scale - 150.0).abs() < 1e-9 && (f.cx - 120.0).abs() < 1e-9 && (f.cy - 131.0).abs() < 1e-9);
    }
}
