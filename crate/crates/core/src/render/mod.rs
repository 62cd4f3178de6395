//! Frame rendering: procedural seed faces and piecewise-affine warping
//! driven by landmark sequences.

mod camera;
mod face;
mod mesh;
mod warp;

pub use camera::{project, Camera, Point2};
pub use face::{generate_test_face, read_landmarks2d, write_landmarks2d, FaceParams, SeedFace};
pub use mesh::{border_anchors, convex_hull_area, delaunay, signed_area, triangulate, TriangleMesh, MIN_TRIANGLE_AREA};
pub use warp::{render_clip, target_landmarks, warp_frame, ClipFrames, ClipMeta, FrameFlag, WarpedFrame};
