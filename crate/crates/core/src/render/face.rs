//! Seed faces: the still image a clip is animated from, with its 2D landmarks.

use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::camera::{Camera, Point2};
use crate::error::{Error, Result};
use crate::landmarks::{LandmarkTemplate, N_LANDMARKS};

#[derive(Debug, Clone, PartialEq)]
pub struct SeedFace {
    pub id: String,
    pub image: RgbImage,
    pub landmarks: Vec<Point2>,
    /// Maps template coordinates onto this face; fitted for external images.
    pub camera: Camera,
}

impl SeedFace {
    /// Validates the landmark count and bounds and fits the camera.
    pub fn new(id: impl Into<String>, image: RgbImage, landmarks: Vec<Point2>) -> Result<Self> {
        if landmarks.len() != N_LANDMARKS {
            return Err(Error::invalid("landmarks", format!("expected 68 points, got {}", landmarks.len())));
        }
        let (w, h) = (f64::from(image.width()), f64::from(image.height()));
        if let Some(i) = landmarks
            .iter()
            .position(|p| !(p[0].is_finite() && p[1].is_finite() && p[0] >= 0.0 && p[1] >= 0.0 && p[0] <= w - 1.0 && p[1] <= h - 1.0))
        {
            return Err(Error::invalid("landmarks", format!("point {i} {:?} is outside the image", landmarks[i])));
        }
        let camera = Camera::fit(&LandmarkTemplate::canonical(), &landmarks);
        if !(camera.scale > 0.0) {
            return Err(Error::invalid("landmarks", "layout does not resemble a face"));
        }
        Ok(Self {
            id: id.into(),
            image,
            landmarks,
            camera,
        })
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }

    /// Loads an RGB image and a landmark CSV with header `idx,x,y`.
    pub fn load(id: impl Into<String>, image_path: impl AsRef<Path>, landmarks_path: impl AsRef<Path>) -> Result<Self> {
        let image = image::open(image_path.as_ref())?.to_rgb8();
        let path = landmarks_path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let landmarks = read_landmarks2d(file)?;
        Self::new(id, image, landmarks)
    }

    pub fn save(&self, image_path: impl AsRef<Path>, landmarks_path: impl AsRef<Path>) -> Result<()> {
        self.image.save(image_path.as_ref())?;
        let path = landmarks_path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_landmarks2d(&self.landmarks, file)
    }
}

#[derive(Deserialize)]
struct Row2 {
    idx: usize,
    x: f64,
    y: f64,
}

pub fn read_landmarks2d<R: std::io::Read>(reader: R) -> Result<Vec<Point2>> {
    let mut pts = vec![None; N_LANDMARKS];
    for (n, row) in csv::Reader::from_reader(reader).deserialize::<Row2>().enumerate() {
        let row = row.map_err(|e| Error::parse(format!("landmark row {}", n + 2), e.to_string()))?;
        if row.idx >= N_LANDMARKS {
            return Err(Error::parse(format!("landmark row {}", n + 2), "index out of range"));
        }
        pts[row.idx] = Some([row.x, row.y]);
    }
    pts.into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| Error::parse("landmarks", "expected all 68 points"))
}

pub fn write_landmarks2d<W: std::io::Write>(points: &[Point2], writer: W) -> Result<()> {
    let err = |e: csv::Error| Error::parse("landmark csv", e.to_string());
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["idx", "x", "y"]).map_err(err)?;
    for (i, p) in points.iter().enumerate() {
        w.write_record(&[i.to_string(), p[0].to_string(), p[1].to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| Error::parse("landmark csv", e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaceParams {
    pub width: u32,
    pub height: u32,
}

impl Default for FaceParams {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
        }
    }
}

type Color = [f64; 3];

fn mix(a: Color, b: Color, t: f64) -> Color {
    [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
}

fn to_rgb(c: Color) -> Rgb<u8> {
    Rgb(c.map(|v| v.round().clamp(0.0, 255.0) as u8))
}

fn pick(rng: &mut ChaCha8Rng, lo: Color, hi: Color) -> Color {
    mix(lo, hi, rng.random_range(0.0..1.0))
}

/// Even-odd point-in-polygon test.
fn inside(poly: &[Point2], x: f64, y: f64) -> bool {
    let mut c = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + n - 1) % n]);
        if (a[1] > y) != (b[1] > y) && x < (b[0] - a[0]) * (y - a[1]) / (b[1] - a[1]) + a[0] {
            c = !c;
        }
    }
    c
}

fn seg_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

struct Canvas {
    px: Vec<Color>,
    w: usize,
    h: usize,
}

impl Canvas {
    fn bbox(&self, pts: &[Point2], pad: f64) -> (usize, usize, usize, usize) {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in pts {
            x0 = x0.min(p[0]);
            y0 = y0.min(p[1]);
            x1 = x1.max(p[0]);
            y1 = y1.max(p[1]);
        }
        let clampx = |v: f64| v.clamp(0.0, (self.w - 1) as f64) as usize;
        let clampy = |v: f64| v.clamp(0.0, (self.h - 1) as f64) as usize;
        (clampx((x0 - pad).floor()), clampy((y0 - pad).floor()), clampx((x1 + pad).ceil()), clampy((y1 + pad).ceil()))
    }

    /// Fills `poly` with `shade(x, y)`, 2x2 supersampled at the edges.
    fn fill(&mut self, poly: &[Point2], shade: impl Fn(f64, f64) -> Color) {
        let (x0, y0, x1, y1) = self.bbox(poly, 1.0);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (fx, fy) = (x as f64, y as f64);
                let cover = [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)]
                    .iter()
                    .filter(|(dx, dy)| inside(poly, fx + dx, fy + dy))
                    .count() as f64
                    / 4.0;
                if cover > 0.0 {
                    let i = y * self.w + x;
                    self.px[i] = mix(self.px[i], shade(fx, fy), cover);
                }
            }
        }
    }

    fn stroke(&mut self, line: &[Point2], width: f64, color: Color) {
        let (x0, y0, x1, y1) = self.bbox(line, width + 1.0);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = [x as f64, y as f64];
                let d = line.windows(2).map(|s| seg_dist(p, s[0], s[1])).fold(f64::MAX, f64::min);
                let a = (width / 2.0 + 0.5 - d).clamp(0.0, 1.0);
                if a > 0.0 {
                    let i = y * self.w + x;
                    self.px[i] = mix(self.px[i], color, a);
                }
            }
        }
    }

    fn disc(&mut self, c: Point2, r: f64, clip: Option<&[Point2]>, color: Color) {
        let (x0, y0, x1, y1) = self.bbox(&[[c[0] - r, c[1] - r], [c[0] + r, c[1] + r]], 1.0);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let (fx, fy) = (x as f64, y as f64);
                if clip.is_some_and(|poly| !inside(poly, fx, fy)) {
                    continue;
                }
                let d = ((fx - c[0]).powi(2) + (fy - c[1]).powi(2)).sqrt();
                let a = (r + 0.5 - d).clamp(0.0, 1.0);
                if a > 0.0 {
                    let i = y * self.w + x;
                    self.px[i] = mix(self.px[i], color, a);
                }
            }
        }
    }
}

fn centre(pts: &[Point2]) -> Point2 {
    let n = pts.len() as f64;
    [pts.iter().map(|p| p[0]).sum::<f64>() / n, pts.iter().map(|p| p[1]).sum::<f64>() / n]
}

/// Procedural face drawn directly from its landmark layout, so the
/// annotation is exact. Seeded variation covers framing, jaw and mouth
/// width, colours and a fine skin texture.
pub fn generate_test_face(params: &FaceParams, seed: u64) -> Result<SeedFace> {
    if params.width < 128 || params.height < 128 {
        return Err(Error::invalid(
            "face size",
            format!("{}x{} is below the 128x128 minimum", params.width, params.height),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (params.width as usize, params.height as usize);
    let side = params.width.min(params.height) as f64;
    let camera = Camera {
        scale: side * rng.random_range(0.64..0.72),
        cx: f64::from(params.width) / 2.0 + rng.random_range(-4.0..4.0),
        cy: f64::from(params.height) / 2.0 + rng.random_range(-4.0..4.0),
    };
    let jaw_width = rng.random_range(0.94..1.04);
    let mouth_width = rng.random_range(0.9..1.1);

    let mut t = LandmarkTemplate::canonical();
    for (i, p) in t.points.iter_mut().enumerate() {
        if i < 17 {
            p[0] *= jaw_width;
        } else if i >= 48 {
            p[0] *= mouth_width;
        }
    }
    let lm: Vec<Point2> = camera.project_frame(&t.points);

    let skin = pick(&mut rng, [236.0, 200.0, 170.0], [150.0, 100.0, 70.0]);
    let bg_top = pick(&mut rng, [60.0, 90.0, 140.0], [170.0, 200.0, 160.0]);
    let bg_bottom = mix(bg_top, [30.0, 30.0, 40.0], 0.5);
    let hair = pick(&mut rng, [30.0, 20.0, 15.0], [160.0, 110.0, 50.0]);
    let iris = pick(&mut rng, [60.0, 40.0, 20.0], [70.0, 130.0, 160.0]);
    let lips = mix(skin, pick(&mut rng, [190.0, 80.0, 90.0], [150.0, 60.0, 70.0]), 0.7);
    let texture_phase: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));

    let mut cv = Canvas {
        px: Vec::with_capacity(w * h),
        w,
        h,
    };
    for y in 0..h {
        let c = mix(bg_top, bg_bottom, y as f64 / (h - 1) as f64);
        for _ in 0..w {
            let n: f64 = rng.random_range(-6.0..6.0);
            cv.px.push([c[0] + n, c[1] + n, c[2] + n]);
        }
    }

    // Head outline: jaw plus an arc over the forehead.
    let mut head: Vec<Point2> = lm[..17].to_vec();
    let top = camera.scale * 0.55;
    let (hc, hw) = ((lm[0][0] + lm[16][0]) / 2.0, (lm[16][0] - lm[0][0]) / 2.0);
    let base_y = (lm[0][1] + lm[16][1]) / 2.0;
    for k in 1..16 {
        let a = std::f64::consts::PI * k as f64 / 16.0;
        head.push([hc + hw * a.cos(), base_y - top * a.sin()]);
    }
    let face_c = centre(&lm[..17]);
    let radius = hw.max(1.0);
    let tex = move |x: f64, y: f64| {
        let v = (x * 0.9 + texture_phase[0]).sin() * (y * 0.7 + texture_phase[1]).sin()
            + 0.5 * (x * 0.37 + y * 0.23 + texture_phase[2]).sin()
            + 0.3 * (x * 1.7 - y * 1.3 + texture_phase[3]).sin();
        v * 5.0
    };
    cv.fill(&head, |x, y| {
        let d = (((x - face_c[0]) / radius).powi(2) + ((y - face_c[1]) / (1.3 * radius)).powi(2)).sqrt();
        let shade = 1.0 - 0.18 * d.min(1.2);
        let n = tex(x, y);
        [skin[0] * shade + n, skin[1] * shade + n, skin[2] * shade + n]
    });
    // Hair cap over the upper forehead.
    let hairline: Vec<Point2> = head[17..]
        .iter()
        .copied()
        .chain((1..16).rev().map(|k| {
            let a = std::f64::consts::PI * k as f64 / 16.0;
            [hc + 0.85 * hw * a.cos(), base_y - top * 0.72 * a.sin()]
        }))
        .collect();
    cv.fill(&hairline, |x, y| {
        let n = tex(y, x) * 1.5;
        [hair[0] + n, hair[1] + n, hair[2] + n]
    });

    let dark = mix(skin, [20.0, 10.0, 10.0], 0.55);
    cv.stroke(&lm[27..31], 2.0, mix(skin, dark, 0.35));
    cv.stroke(&lm[31..36], 2.0, mix(skin, dark, 0.6));
    cv.stroke(&lm[17..22], 3.5, mix(hair, dark, 0.3));
    cv.stroke(&lm[22..27], 3.5, mix(hair, dark, 0.3));

    for eye in [&lm[36..42], &lm[42..48]] {
        cv.fill(eye, |_, _| [240.0, 238.0, 232.0]);
        let c = centre(eye);
        let r = (eye[4][1] - eye[2][1]).abs() * 0.55 + 1.0;
        cv.disc(c, r, Some(eye), iris);
        cv.disc(c, r * 0.45, Some(eye), [15.0, 15.0, 20.0]);
        let mut ring = eye.to_vec();
        ring.push(eye[0]);
        cv.stroke(&ring, 1.2, dark);
    }

    cv.fill(&lm[48..60], |x, y| {
        let n = tex(x, y) * 0.6;
        [lips[0] + n, lips[1] + n, lips[2] + n]
    });
    cv.fill(&lm[60..68], |_, _| [70.0, 25.0, 30.0]);
    let mut lip_line = lm[60..65].to_vec();
    lip_line.push(lm[64]);
    cv.stroke(&lip_line, 1.0, mix(lips, dark, 0.6));

    let mut image = RgbImage::new(params.width, params.height);
    for (i, c) in cv.px.iter().enumerate() {
        image.put_pixel((i % w) as u32, (i / w) as u32, to_rgb(*c));
    }
    let mut face = SeedFace::new(format!("face-{seed}"), image, lm)?;
    // The generating camera, not the least-squares fit of the reshaped face.
    face.camera = camera;
    Ok(face)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        let a = generate_test_face(&FaceParams::default(), 4).unwrap();
        let b = generate_test_face(&FaceParams::default(), 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn twenty_seeds_give_distinct_images_with_landmarks_inside() {
        let faces: Vec<SeedFace> = (0..20).map(|s| generate_test_face(&FaceParams::default(), s).unwrap()).collect();
        for (i, a) in faces.iter().enumerate() {
            for p in &a.landmarks {
                assert!(p[0] > 0.0 && p[0] < 255.0 && p[1] > 0.0 && p[1] < 255.0);
            }
            for b in &faces[i + 1..] {
                assert_ne!(a.image, b.image);
            }
        }
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(generate_test_face(&FaceParams { width: 64, height: 256 }, 0).is_err());
    }

    #[test]
    fn landmark_file_round_trip() {
        let f = generate_test_face(&FaceParams::default(), 2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (ip, lp) = (dir.path().join("seed.png"), dir.path().join("seed.csv"));
        f.save(&ip, &lp).unwrap();
        let back = SeedFace::load("face-2", &ip, &lp).unwrap();
        assert_eq!(back.image, f.image);
        assert_eq!(back.landmarks, f.landmarks);
    }

    #[test]
    fn out_of_bounds_landmarks_are_rejected() {
        let f = generate_test_face(&FaceParams::default(), 1).unwrap();
        let mut lm = f.landmarks.clone();
        lm[5] = [-5.0, 10.0];
        assert!(SeedFace::new("x", f.image.clone(), lm).is_err());
        assert!(SeedFace::new("x", f.image, vec![[1.0, 1.0]; 10]).is_err());
    }
}
