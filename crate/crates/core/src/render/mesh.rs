use serde::{Deserialize, Serialize};
use spade::{DelaunayTriangulation, Point2 as SpadePoint, Triangulation};

use super::camera::Point2;
use crate::error::{Error, Result};

/// Smallest triangle area (px^2) treated as non-degenerate.
pub const MIN_TRIANGLE_AREA: f64 = 1e-6;

/// Delaunay triangulation over the landmarks followed by the image border anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleMesh {
    pub vertices: Vec<Point2>,
    /// Counter-clockwise in y-up terms, i.e. positive [`signed_area`].
    pub triangles: Vec<[usize; 3]>,
}

/// Corners and edge midpoints of a `width x height` image, in pixel-centre coordinates.
pub fn border_anchors(width: u32, height: u32) -> [Point2; 8] {
    let (w, h) = (f64::from(width) - 1.0, f64::from(height) - 1.0);
    [
        [0.0, 0.0],
        [w / 2.0, 0.0],
        [w, 0.0],
        [w, h / 2.0],
        [w, h],
        [w / 2.0, h],
        [0.0, h],
        [0.0, h / 2.0],
    ]
}

/// Twice-signed area halved: positive when `a, b, c` turn counter-clockwise
/// in a y-up frame.
pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Delaunay triangulation of `points`, keeping their indices.
pub fn delaunay(points: &[Point2]) -> Result<TriangleMesh> {
    let mut tri: DelaunayTriangulation<SpadePoint<f64>> = DelaunayTriangulation::new();
    for (i, p) in points.iter().enumerate() {
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::Degenerate(format!("vertex {i} is not finite")));
        }
        let handle = tri
            .insert(SpadePoint::new(p[0], p[1]))
            .map_err(|e| Error::Degenerate(format!("vertex {i}: {e:?}")))?;
        if handle.index() != i {
            return Err(Error::Degenerate(format!("vertex {i} duplicates vertex {}", handle.index())));
        }
    }
    let mut triangles = Vec::new();
    for face in tri.inner_faces() {
        let [a, b, c] = face.vertices().map(|v| v.fix().index());
        let area = signed_area(points[a], points[b], points[c]);
        if area.abs() <= MIN_TRIANGLE_AREA {
            continue;
        }
        triangles.push(if area > 0.0 { [a, b, c] } else { [a, c, b] });
    }
    if triangles.is_empty() {
        return Err(Error::Degenerate("all points are collinear".into()));
    }
    Ok(TriangleMesh {
        vertices: points.to_vec(),
        triangles,
    })
}

/// Delaunay mesh over 68 landmarks plus the eight border anchors of the image.
pub fn triangulate(landmarks: &[Point2], width: u32, height: u32) -> Result<TriangleMesh> {
    let mut pts = landmarks.to_vec();
    pts.extend(border_anchors(width, height));
    delaunay(&pts)
}

impl TriangleMesh {
    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }
}

/// Area of the convex hull (monotone chain).
pub fn convex_hull_area(points: &[Point2]) -> f64 {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return 0.0;
    }
    let cross = |o: Point2, a: Point2, b: Point2| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let n = hull.len();
    (0..n)
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_gives_two_triangles() {
        let m = delaunay(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).unwrap();
        assert_eq!(m.triangles.len(), 2);
        assert!((m.total_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(delaunay(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
        assert!(delaunay(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(delaunay(&[[0.0, 0.0], [f64::NAN, 0.0], [0.0, 1.0]]).is_err());
    }

    #[test]
    fn hull_area_of_a_square_with_interior_points() {
        let pts = [[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0], [1.0, 1.0], [0.5, 1.5]];
        assert!((convex_hull_area(&pts) - 4.0).abs() < 1e-12);
    }
}
