//! Piecewise-affine warping of a seed face onto target landmarks.

use std::path::Path;

use image::{Rgb, RgbImage};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::Point2;
use super::face::SeedFace;
use super::mesh::{border_anchors, signed_area, triangulate, TriangleMesh, MIN_TRIANGLE_AREA};
use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::landmarks::{LandmarkSequence, LandmarkTemplate, N_LANDMARKS};

/// Edge-function slack so pixels on shared edges are never dropped.
const EDGE_EPS: f64 = 1e-9;

fn sample_bilinear(img: &RgbImage, x: f64, y: f64) -> [f64; 3] {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let px = |xx: usize, yy: usize| img.get_pixel(xx as u32, yy as u32).0;
    let (a, b, c, d) = (px(x0, y0), px(x1, y0), px(x0, y1), px(x1, y1));
    std::array::from_fn(|k| {
        let top = f64::from(a[k]) * (1.0 - fx) + f64::from(b[k]) * fx;
        let bottom = f64::from(c[k]) * (1.0 - fx) + f64::from(d[k]) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

/// Calls `f(x, y, l1, l2, l3)` for each pixel centre inside triangle `t`
/// (positively oriented), with barycentric weights.
fn rasterize(t: [Point2; 3], width: u32, height: u32, mut f: impl FnMut(u32, u32, f64, f64, f64)) {
    let area2 = 2.0 * signed_area(t[0], t[1], t[2]);
    if area2 <= 0.0 {
        return;
    }
    let lo = |k: usize| t.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
    let hi = |k: usize| t.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
    let x0 = lo(0).ceil().max(0.0) as u32;
    let y0 = lo(1).ceil().max(0.0) as u32;
    let x1 = (hi(0).floor().min(f64::from(width) - 1.0)).max(-1.0);
    let y1 = (hi(1).floor().min(f64::from(height) - 1.0)).max(-1.0);
    if x1 < 0.0 || y1 < 0.0 {
        return;
    }
    for y in y0..=y1 as u32 {
        for x in x0..=x1 as u32 {
            let p = [f64::from(x), f64::from(y)];
            let l1 = 2.0 * signed_area(p, t[1], t[2]) / area2;
            let l2 = 2.0 * signed_area(t[0], p, t[2]) / area2;
            let l3 = 1.0 - l1 - l2;
            if l1 >= -EDGE_EPS && l2 >= -EDGE_EPS && l3 >= -EDGE_EPS {
                f(x, y, l1, l2, l3);
            }
        }
    }
}

/// A warped frame plus the mesh triangles whose target was degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedFrame {
    pub image: RgbImage,
    pub degenerate: Vec<usize>,
}

/// Warps the seed image so mesh vertex `i` lands on `target[i]` (the 68
/// landmarks; border anchors stay put). Triangles that collapse or flip are
/// skipped and their source region is filled from `fallback`. Pixels no
/// triangle covers keep the seed colour.
pub fn warp_frame(seed: &SeedFace, mesh: &TriangleMesh, target: &[Point2], fallback: &RgbImage) -> Result<WarpedFrame> {
    if target.len() != N_LANDMARKS {
        return Err(Error::DimensionMismatch {
            expected: N_LANDMARKS,
            got: target.len(),
        });
    }
    if let Some(i) = target.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
        return Err(Error::NonFinite(i));
    }
    let (w, h) = (seed.width(), seed.height());
    if fallback.dimensions() != (w, h) {
        return Err(Error::invalid("fallback", "frame size differs from the seed image"));
    }
    let mut dst: Vec<Point2> = target.to_vec();
    dst.extend(border_anchors(w, h));
    if dst.len() != mesh.vertices.len() {
        return Err(Error::DimensionMismatch {
            expected: mesh.vertices.len(),
            got: dst.len(),
        });
    }

    let mut out = seed.image.clone();
    let mut covered = vec![false; (w * h) as usize];
    let mut degenerate = Vec::new();
    for (ti, &[a, b, c]) in mesh.triangles.iter().enumerate() {
        let t = [dst[a], dst[b], dst[c]];
        if signed_area(t[0], t[1], t[2]) <= MIN_TRIANGLE_AREA {
            degenerate.push(ti);
            continue;
        }
        let s = [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]];
        rasterize(t, w, h, |x, y, l1, l2, l3| {
            let sx = l1 * s[0][0] + l2 * s[1][0] + l3 * s[2][0];
            let sy = l1 * s[0][1] + l2 * s[1][1] + l3 * s[2][1];
            let v = sample_bilinear(&seed.image, sx, sy);
            out.put_pixel(x, y, Rgb(v.map(|c| c.round().clamp(0.0, 255.0) as u8)));
            covered[(y * w + x) as usize] = true;
        });
    }
    for &ti in &degenerate {
        let [a, b, c] = mesh.triangles[ti];
        let s = [mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]];
        rasterize(s, w, h, |x, y, _, _, _| {
            if !covered[(y * w + x) as usize] {
                out.put_pixel(x, y, *fallback.get_pixel(x, y));
            }
        });
    }
    Ok(WarpedFrame { image: out, degenerate })
}

/// Pixel landmarks for each frame: the seed's own points moved by the
/// projected displacement of the animation from the canonical template.
pub fn target_landmarks(seed: &SeedFace, seq: &LandmarkSequence) -> Vec<Vec<Point2>> {
    let template = LandmarkTemplate::canonical();
    let rest = seed.camera.project_frame(&template.points);
    seq.frames()
        .iter()
        .map(|frame| {
            seed.landmarks
                .iter()
                .zip(frame)
                .zip(&rest)
                .map(|((s, p), r)| {
                    let q = seed.camera.project_point(p);
                    [s[0] + (q[0] - r[0]), s[1] + (q[1] - r[1])]
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipFrames {
    pub frames: Vec<RgbImage>,
    pub fps: f64,
    pub landmarks2d: Vec<Vec<Point2>>,
    /// Degenerate triangle indices per frame; empty for clean frames.
    pub flags: Vec<Vec<usize>>,
    pub audio: AudioClip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameFlag {
    pub frame: usize,
    pub degenerate_triangles: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipMeta {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub n_frames: usize,
    pub audio: String,
    pub flags: Vec<FrameFlag>,
}

impl ClipFrames {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn flagged_frames(&self) -> Vec<FrameFlag> {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_empty())
            .map(|(frame, f)| FrameFlag {
                frame,
                degenerate_triangles: f.clone(),
            })
            .collect()
    }

    pub fn meta(&self, audio_path: &str) -> ClipMeta {
        let (width, height) = self.frames.first().map_or((0, 0), |f| f.dimensions());
        ClipMeta {
            fps: self.fps,
            width,
            height,
            n_frames: self.frames.len(),
            audio: audio_path.to_string(),
            flags: self.flagged_frames(),
        }
    }

    /// Writes `frames/00001.png ...`, `landmarks2d.csv` and `meta.json` into
    /// `dir`. `audio_path` is recorded in the metadata as given.
    pub fn write(&self, dir: impl AsRef<Path>, audio_path: &str) -> Result<()> {
        let dir = dir.as_ref();
        let frames_dir = dir.join("frames");
        std::fs::create_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
        self.frames
            .par_iter()
            .enumerate()
            .try_for_each(|(i, f)| f.save(frames_dir.join(format!("{:05}.png", i + 1))).map_err(Error::from))?;

        let path = dir.join("landmarks2d.csv");
        let err = |e: csv::Error| Error::parse("landmarks2d.csv", e.to_string());
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(["frame", "idx", "x", "y"]).map_err(err)?;
        for (f, pts) in self.landmarks2d.iter().enumerate() {
            for (i, p) in pts.iter().enumerate() {
                w.write_record(&[f.to_string(), i.to_string(), p[0].to_string(), p[1].to_string()])
                    .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("meta.json");
        let json = serde_json::to_string_pretty(&self.meta(audio_path))?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))
    }
}

/// One warped frame per landmark frame. Frames render in parallel against
/// the seed; any frame with degenerate triangles is then redone in order so
/// its holes are filled from the previous frame.
pub fn render_clip(seed: &SeedFace, seq: &LandmarkSequence, audio: &AudioClip) -> Result<ClipFrames> {
    let fps = seq.fps();
    if (audio.duration_seconds() - seq.duration_s()).abs() > 1.0 / fps + 1e-9 {
        return Err(Error::invalid(
            "audio",
            format!(
                "duration {:.3} s does not match the {:.3} s landmark sequence",
                audio.duration_seconds(),
                seq.duration_s()
            ),
        ));
    }
    let mesh = triangulate(&seed.landmarks, seed.width(), seed.height())?;
    let targets = target_landmarks(seed, seq);
    let mut warped = targets
        .par_iter()
        .map(|t| warp_frame(seed, &mesh, t, &seed.image))
        .collect::<Result<Vec<_>>>()?;
    for i in 1..warped.len() {
        if !warped[i].degenerate.is_empty() {
            warped[i] = warp_frame(seed, &mesh, &targets[i], &warped[i - 1].image)?;
        }
    }
    let (frames, flags) = warped.into_iter().map(|w| (w.image, w.degenerate)).unzip();
    Ok(ClipFrames {
        frames,
        fps,
        landmarks2d: targets,
        flags,
        audio: audio.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::face::{generate_test_face, FaceParams};

    fn face() -> SeedFace {
        generate_test_face(&FaceParams::default(), 7).unwrap()
    }

    fn mesh(f: &SeedFace) -> TriangleMesh {
        triangulate(&f.landmarks, f.width(), f.height()).unwrap()
    }

    #[test]
    fn identity_warp_is_exact() {
        let f = face();
        let out = warp_frame(&f, &mesh(&f), &f.landmarks, &f.image).unwrap();
        assert!(out.degenerate.is_empty());
        assert_eq!(out.image, f.image);
    }

    #[test]
    fn translation_is_recovered_by_cross_correlation() {
        let f = face();
        let moved: Vec<Point2> = f.landmarks.iter().map(|p| [p[0] + 5.0, p[1]]).collect();
        let out = warp_frame(&f, &mesh(&f), &moved, &f.image).unwrap().image;
        let gray = |img: &RgbImage, x: i64, y: i64| {
            let p = img.get_pixel(x as u32, y as u32).0;
            p.iter().map(|&c| f64::from(c)).sum::<f64>()
        };
        // Interior region around the eyes and nose.
        let (x0, x1) = (f.landmarks[36][0] as i64, f.landmarks[45][0] as i64);
        let (y0, y1) = (f.landmarks[19][1] as i64, f.landmarks[33][1] as i64);
        let score = |d: i64| {
            let mut s = 0.0;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    s += gray(&out, x + d, y) * gray(&f.image, x, y);
                }
            }
            s
        };
        let (mut best, mut best_d) = (f64::MIN, 0);
        // Normalized by the shifted-window energy so brighter windows don't win.
        for d in -10..=10 {
            let energy: f64 = (y0..=y1)
                .flat_map(|y| (x0..=x1).map(move |x| (x, y)))
                .map(|(x, y)| gray(&out, x + d, y).powi(2))
                .sum();
            let v = score(d) / energy.sqrt();
            if v > best {
                best = v;
                best_d = d;
            }
        }
        assert!((best_d - 5).abs() <= 1, "{best_d}");
    }

    #[test]
    fn opening_the_mouth_changes_the_mouth_but_not_the_border() {
        let f = face();
        let mut t = f.landmarks.clone();
        for i in [56, 57, 58, 65, 66, 67] {
            t[i][1] += 8.0;
        }
        let out = warp_frame(&f, &mesh(&f), &t, &f.image).unwrap().image;
        let y_top = f.landmarks[62][1].round() as u32;
        let y_bot = (f.landmarks[66][1] + 8.0).round() as u32;
        let x_mid = f.landmarks[62][0].round() as u32;
        let changed = (y_top..=y_bot).any(|y| out.get_pixel(x_mid, y) != f.image.get_pixel(x_mid, y));
        assert!(changed);
        for x in 0..f.width() {
            for y in [0, 1, 2, f.height() - 3, f.height() - 2, f.height() - 1] {
                assert_eq!(out.get_pixel(x, y), f.image.get_pixel(x, y));
            }
        }
    }

    #[test]
    fn collapsed_triangles_are_flagged_and_filled() {
        let f = face();
        let mut t = f.landmarks.clone();
        // Fold the lower lip over the upper lip.
        for i in [56, 57, 58] {
            t[i][1] = f.landmarks[50][1] - 6.0;
        }
        let fallback = RgbImage::from_pixel(f.width(), f.height(), Rgb([1, 2, 3]));
        let out = warp_frame(&f, &mesh(&f), &t, &fallback).unwrap();
        assert!(!out.degenerate.is_empty());
    }

    #[test]
    fn bad_targets_are_rejected() {
        let f = face();
        let m = mesh(&f);
        assert!(warp_frame(&f, &m, &f.landmarks[..10], &f.image).is_err());
        let mut t = f.landmarks.clone();
        t[3][0] = f64::NAN;
        assert!(warp_frame(&f, &m, &t, &f.image).is_err());
    }

    #[test]
    fn zero_displacement_clip_repeats_the_seed() {
        let f = face();
        let seq = LandmarkSequence::constant(&LandmarkTemplate::canonical().points, 25.0, 3.5).unwrap();
        let audio = AudioClip::silence(3.5, 16_000).unwrap();
        let clip = render_clip(&f, &seq, &audio).unwrap();
        assert_eq!(clip.len(), 88);
        assert!(clip.frames.iter().all(|fr| *fr == f.image));
        assert!(clip.flags.iter().all(|fl| fl.is_empty()));
        assert_eq!(clip.audio, audio);
    }

    #[test]
    fn duration_mismatch_is_rejected() {
        let f = face();
        let seq = LandmarkSequence::constant(&LandmarkTemplate::canonical().points, 25.0, 3.5).unwrap();
        assert!(render_clip(&f, &seq, &AudioClip::silence(3.0, 16_000).unwrap()).is_err());
        assert!(render_clip(&f, &seq, &AudioClip::silence(3.53, 16_000).unwrap()).is_ok());
    }

    #[test]
    fn written_clip_layout() {
        let f = face();
        let seq = LandmarkSequence::constant(&LandmarkTemplate::canonical().points, 25.0, 0.2).unwrap();
        let clip = render_clip(&f, &seq, &AudioClip::silence(0.2, 16_000).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        clip.write(dir.path(), "audio.wav").unwrap();
        assert!(dir.path().join("frames/00001.png").exists());
        assert!(dir.path().join("frames/00005.png").exists());
        let meta: ClipMeta = serde_json::from_str(&std::fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
        assert_eq!((meta.n_frames, meta.width, meta.height), (5, 256, 256));
    }
}
