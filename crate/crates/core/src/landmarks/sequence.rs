use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::template::N_LANDMARKS;
use super::LandmarkFrame;
use crate::error::{Error, Result};

/// `ceil(duration_s * fps)`, tolerant of rounding in the product.
pub fn frame_count(duration_s: f64, fps: f64) -> usize {
    let x = duration_s * fps;
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Time in seconds of the centre of video frame `f`.
pub fn frame_center(f: usize, fps: f64) -> f64 {
    (f as f64 + 0.5) / fps
}

fn check_fps(fps: f64) -> Result<()> {
    if fps.is_finite() && fps > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("fps", format!("{fps} must be > 0")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkSequence {
    frames: Vec<LandmarkFrame>,
    fps: f64,
    duration_s: f64,
}

impl LandmarkSequence {
    pub fn new(frames: Vec<LandmarkFrame>, fps: f64, duration_s: f64) -> Result<Self> {
        check_fps(fps)?;
        if !(duration_s.is_finite() && duration_s >= 0.0) {
            return Err(Error::invalid("duration_s", format!("{duration_s}")));
        }
        let expected = frame_count(duration_s, fps);
        if frames.len() != expected {
            return Err(Error::invalid(
                "frames",
                format!("{} frames for {duration_s} s at {fps} fps, expected {expected}", frames.len()),
            ));
        }
        for (f, frame) in frames.iter().enumerate() {
            if frame.len() != N_LANDMARKS {
                return Err(Error::invalid("frames", format!("frame {f} has {} points", frame.len())));
            }
            if frame.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::invalid("frames", format!("frame {f} has a non-finite coordinate")));
            }
        }
        Ok(Self {
            frames,
            fps,
            duration_s,
        })
    }

    /// Every frame equal to `frame`.
    pub fn constant(frame: &LandmarkFrame, fps: f64, duration_s: f64) -> Result<Self> {
        check_fps(fps)?;
        Self::new(vec![frame.clone(); frame_count(duration_s, fps)], fps, duration_s)
    }

    pub fn frames(&self) -> &[LandmarkFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<LandmarkFrame> {
        self.frames
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Same timing, new frames. The count must not change.
    pub fn with_frames(&self, frames: Vec<LandmarkFrame>) -> Result<Self> {
        Self::new(frames, self.fps, self.duration_s)
    }

    /// Rows `frame,idx,x,y,z` with 0-based frame and landmark indices.
    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::parse("landmark csv", e.to_string());
        w.write_record(["frame", "idx", "x", "y", "z"]).map_err(err)?;
        for (f, frame) in self.frames.iter().enumerate() {
            for (i, p) in frame.iter().enumerate() {
                w.write_record(&[
                    f.to_string(),
                    i.to_string(),
                    p[0].to_string(),
                    p[1].to_string(),
                    p[2].to_string(),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| Error::parse("landmark csv", e.to_string()))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }

    /// Reads a `frame,idx,x,y,z` file. The duration is taken as `frames / fps`.
    pub fn read_csv_from<R: Read>(reader: R, fps: f64) -> Result<Self> {
        check_fps(fps)?;
        let frames = read_frames(reader)?;
        let duration = frames.len() as f64 / fps;
        Self::new(frames, fps, duration)
    }

    pub fn read_csv(path: impl AsRef<Path>, fps: f64) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv_from(std::io::BufReader::new(file), fps)
    }
}

#[derive(Deserialize)]
struct Row {
    frame: usize,
    idx: usize,
    x: f64,
    y: f64,
    z: f64,
}

/// Parses `frame,idx,x,y,z` rows into dense frames; every frame must list
/// all 68 points.
fn read_frames<R: Read>(reader: R) -> Result<Vec<LandmarkFrame>> {
    let mut frames: Vec<Vec<Option<[f64; 3]>>> = Vec::new();
    for (n, row) in csv::Reader::from_reader(reader).deserialize::<Row>().enumerate() {
        let what = || format!("landmark csv row {}", n + 2);
        let row = row.map_err(|e| Error::parse(what(), e.to_string()))?;
        if row.idx >= N_LANDMARKS {
            return Err(Error::parse(what(), format!("landmark index {} out of range", row.idx)));
        }
        if row.frame >= frames.len() {
            frames.resize(row.frame + 1, vec![None; N_LANDMARKS]);
        }
        frames[row.frame][row.idx] = Some([row.x, row.y, row.z]);
    }
    frames
        .into_iter()
        .enumerate()
        .map(|(f, pts)| {
            pts.into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::parse("landmark csv", format!("frame {f} is missing landmarks")))
        })
        .collect()
}

/// Per-frame head rotation `(yaw, pitch, roll)` in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseTrack {
    angles: Vec<[f64; 3]>,
}

impl PoseTrack {
    pub fn new(angles: Vec<[f64; 3]>) -> Result<Self> {
        if angles.iter().flatten().any(|a| !a.is_finite()) {
            return Err(Error::invalid("pose", "angles must be finite"));
        }
        Ok(Self { angles })
    }

    pub fn zeros(n_frames: usize) -> Self {
        Self {
            angles: vec![[0.0; 3]; n_frames],
        }
    }

    /// Slow seeded sway: each angle is a sum of two sinusoids between 0.1
    /// and 0.4 Hz, peaking at about 0.12 rad yaw, 0.06 pitch and 0.04 roll.
    pub fn gentle(n_frames: usize, fps: f64, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = [0.12, 0.06, 0.04];
        let comps: Vec<[(f64, f64); 2]> = (0..3)
            .map(|_| {
                [
                    (rng.random_range(0.1..0.4), rng.random_range(0.0..std::f64::consts::TAU)),
                    (rng.random_range(0.1..0.4), rng.random_range(0.0..std::f64::consts::TAU)),
                ]
            })
            .collect();
        let angles = (0..n_frames)
            .map(|f| {
                let t = f as f64 / fps;
                let mut a = [0.0; 3];
                for k in 0..3 {
                    let s: f64 = comps[k]
                        .iter()
                        .map(|(freq, ph)| (std::f64::consts::TAU * freq * t + ph).sin())
                        .sum();
                    a[k] = amps[k] * s / 2.0;
                }
                a
            })
            .collect();
        Self { angles }
    }

    pub fn angles(&self) -> &[[f64; 3]] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
        let err = |e: csv::Error| Error::parse("pose csv", e.to_string());
        w.write_record(["frame", "yaw", "pitch", "roll"]).map_err(err)?;
        for (f, a) in self.angles.iter().enumerate() {
            w.write_record(&[f.to_string(), a[0].to_string(), a[1].to_string(), a[2].to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct PoseRow {
            frame: usize,
            yaw: f64,
            pitch: f64,
            roll: f64,
        }
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut angles = Vec::new();
        for (n, row) in csv::Reader::from_reader(file).deserialize::<PoseRow>().enumerate() {
            let row = row.map_err(|e| Error::parse(format!("pose csv row {}", n + 2), e.to_string()))?;
            if row.frame != angles.len() {
                return Err(Error::parse(
                    format!("pose csv row {}", n + 2),
                    format!("expected frame {}, got {}", angles.len(), row.frame),
                ));
            }
            angles.push([row.yaw, row.pitch, row.roll]);
        }
        Self::new(angles)
    }
}
