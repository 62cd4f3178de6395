//! Generation manifests: JSON describing subjects, sentences and settings.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quality::QualityThresholds;
use crate::speaker::SENTENCE_BANK;
use crate::tts::{adult_profile, child_profile, VoiceProfile};
use crate::voice::ChildifyParams;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "FORGE_OUTPUT_ROOT";
pub const DEFAULT_FPS: f64 = 25.0;
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
pub const DEMO_SUBJECTS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FaceSource {
    /// Procedural face from [`crate::render::generate_test_face`].
    Generated { seed: u64 },
    /// RGB image plus an `idx,x,y` landmark CSV.
    Files { image: PathBuf, landmarks: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VoiceSpec {
    Child { seed: u64 },
    Adult { seed: u64 },
    Profile(VoiceProfile),
    /// `key=value` profile file.
    ProfileFile(PathBuf),
}

impl VoiceSpec {
    pub fn resolve(&self, base: &Path) -> Result<VoiceProfile> {
        let p = match self {
            VoiceSpec::Child { seed } => child_profile(*seed),
            VoiceSpec::Adult { seed } => adult_profile(*seed),
            VoiceSpec::Profile(p) => p.clone(),
            VoiceSpec::ProfileFile(path) => VoiceProfile::load(base.join(path))?,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectSpec {
    pub id: String,
    pub face: FaceSource,
    pub voice: VoiceSpec,
    /// Applied to the synthesized audio when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub childify: Option<ChildifyParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnimatorSpec {
    Procedural,
    /// Trained animator checkpoint; the speaker embedding comes from
    /// `speaker_model` when given, otherwise it is all zeros.
    Learned {
        model: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        speaker_model: Option<PathBuf>,
    },
}

impl Default for AnimatorSpec {
    fn default() -> Self {
        AnimatorSpec::Procedural
    }
}

fn default_fps() -> f64 {
    DEFAULT_FPS
}
fn default_sample_rate() -> u32 {
    DEFAULT_SAMPLE_RATE
}
fn default_true() -> bool {
    true
}
fn default_frame_size() -> [u32; 2] {
    [256, 256]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationManifest {
    pub subjects: Vec<SubjectSpec>,
    pub sentences: Vec<String>,
    #[serde(default = "default_fps")]
    pub fps: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    #[serde(default)]
    pub global_seed: u64,
    /// Relative to the manifest; defaults to `$FORGE_OUTPUT_ROOT` or `out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub animator: AnimatorSpec,
    #[serde(default = "default_true")]
    pub blinks: bool,
    #[serde(default = "default_true")]
    pub head_pose: bool,
    /// Width and height of generated seed faces.
    #[serde(default = "default_frame_size")]
    pub frame_size: [u32; 2],
    #[serde(default)]
    pub thresholds: QualityThresholds,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn check_id(what: &'static str, id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id != "."
        && id != ".."
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(what, format!("{id:?} must be non-empty and use only [A-Za-z0-9._-]")))
    }
}

impl GenerationManifest {
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        let mut m: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| Error::Manifest {
            path: e.path().to_string(),
            reason: e.inner().to_string(),
        })?;
        m.base_dir = base_dir.into();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, base)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, reason: String| Error::Manifest {
            path: path.into(),
            reason,
        };
        if self.subjects.is_empty() {
            return Err(bad("subjects", "at least one subject is required".into()));
        }
        if self.sentences.is_empty() {
            return Err(bad("sentences", "at least one sentence is required".into()));
        }
        for (i, s) in self.sentences.iter().enumerate() {
            if !s.chars().any(char::is_alphanumeric) {
                return Err(bad(&format!("sentences[{i}]"), "sentence has no speakable text".into()));
            }
        }
        let mut seen = BTreeSet::new();
        for (i, s) in self.subjects.iter().enumerate() {
            check_id("subject id", &s.id).map_err(|e| bad(&format!("subjects[{i}].id"), e.to_string()))?;
            if !seen.insert(s.id.as_str()) {
                return Err(bad(&format!("subjects[{i}].id"), format!("duplicate subject id {:?}", s.id)));
            }
            if let Some(c) = &s.childify {
                c.validate().map_err(|e| bad(&format!("subjects[{i}].childify"), e.to_string()))?;
            }
            if let VoiceSpec::Profile(p) = &s.voice {
                p.validate().map_err(|e| bad(&format!("subjects[{i}].voice"), e.to_string()))?;
            }
        }
        if self.sample_rate < 8000 {
            return Err(bad("sample_rate", format!("{} is below 8000", self.sample_rate)));
        }
        if !(self.fps.is_finite() && self.fps > 0.0 && self.fps <= 120.0) {
            return Err(bad("fps", format!("{} must be in (0, 120]", self.fps)));
        }
        if self.frame_size.iter().any(|&d| d < 128) {
            return Err(bad("frame_size", format!("{:?} is below 128 x 128", self.frame_size)));
        }
        let t = &self.thresholds;
        if ![t.identity_min, t.lip_sync_min, t.histogram_nonzero_min].iter().all(|v| v.is_finite()) {
            return Err(bad("thresholds", "thresholds must be finite".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        self.base_dir.join(path)
    }

    /// `output_dir` if set, else `$FORGE_OUTPUT_ROOT`, else `out`, relative
    /// to the manifest directory.
    pub fn output_root(&self) -> PathBuf {
        let dir = self
            .output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        self.resolve(&dir)
    }

    /// 20 procedural subjects saying one sentence. Even subjects use a child
    /// voice directly; odd ones an adult voice passed through `childify`.
    pub fn demo() -> Self {
        let subjects = (0..DEMO_SUBJECTS)
            .map(|i| {
                let seed = i as u64 + 1;
                let (voice, childify) = if i % 2 == 0 {
                    (VoiceSpec::Child { seed }, None)
                } else {
                    (VoiceSpec::Adult { seed }, Some(ChildifyParams::default()))
                };
                SubjectSpec {
                    id: format!("subject-{:02}", i + 1),
                    face: FaceSource::Generated { seed },
                    voice,
                    childify,
                }
            })
            .collect();
        Self {
            subjects,
            sentences: vec![SENTENCE_BANK[0].to_string()],
            fps: DEFAULT_FPS,
            sample_rate: DEFAULT_SAMPLE_RATE,
            global_seed: 0,
            output_dir: None,
            animator: AnimatorSpec::Procedural,
            blinks: true,
            head_pose: true,
            frame_size: default_frame_size(),
            thresholds: QualityThresholds::default(),
            base_dir: PathBuf::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "subjects": [{"id": "a", "face": {"generated": {"seed": 1}}, "voice": {"child": {"seed": 2}}}],
        "sentences": ["hello there"]
    }"#;

    #[test]
    fn minimal_manifest_gets_defaults() {
        let m = GenerationManifest::from_json(MINIMAL, "/tmp").unwrap();
        assert_eq!((m.fps, m.sample_rate, m.global_seed), (25.0, 16_000, 0));
        assert_eq!(m.animator, AnimatorSpec::Procedural);
        assert!(m.blinks && m.head_pose);
        assert_eq!(m.thresholds, QualityThresholds::default());
    }

    #[test]
    fn duplicate_ids_are_named() {
        let text = r#"{
            "subjects": [
                {"id": "kid", "face": {"generated": {"seed": 1}}, "voice": {"child": {"seed": 2}}},
                {"id": "kid", "face": {"generated": {"seed": 3}}, "voice": {"child": {"seed": 4}}}
            ],
            "sentences": ["hi"]
        }"#;
        let err = GenerationManifest::from_json(text, "").unwrap_err().to_string();
        assert!(err.contains("\"kid\""), "{err}");
    }

    #[test]
    fn low_sample_rate_is_a_range_error() {
        let text = MINIMAL.replace("\"sentences\"", "\"sample_rate\": 4000, \"sentences\"");
        let err = GenerationManifest::from_json(&text, "").unwrap_err();
        assert!(matches!(err, Error::Manifest { ref path, .. } if path == "sample_rate"), "{err}");
    }

    #[test]
    fn schema_errors_carry_the_field_path() {
        let text = MINIMAL.replace("{\"seed\": 2}", "{\"seed\": \"two\"}");
        match GenerationManifest::from_json(&text, "").unwrap_err() {
            Error::Manifest { path, .. } => assert_eq!(path, "subjects[0].voice.child.seed"),
            e => panic!("{e}"),
        }
        assert!(GenerationManifest::from_json(r#"{"subjects": [], "sentences": ["x"]}"#, "").is_err());
        assert!(GenerationManifest::from_json(&MINIMAL.replace("\"a\"", "\"../a\""), "").is_err());
    }

    #[test]
    fn demo_round_trips() {
        let m = GenerationManifest::demo();
        m.validate().unwrap();
        assert_eq!(m.subjects.len(), 20);
        let back = GenerationManifest::from_json(&m.to_json().unwrap(), "").unwrap();
        assert_eq!(back, m);
    }
}
