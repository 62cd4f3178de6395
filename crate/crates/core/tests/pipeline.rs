use std::path::Path;

use forge_core::landmarks::{toy_animator_corpus, train_animator, AnimatorConfig};
use forge_core::pipeline::{run, summarize, AnimatorSpec, FaceSource, GenerationManifest, JobStatus};
use forge_core::render::{generate_test_face, FaceParams};

fn small_manifest(dir: &Path) -> GenerationManifest {
    let face = generate_test_face(&FaceParams::default(), 42).unwrap();
    face.save(dir.join("face.png"), dir.join("face.csv")).unwrap();
    let text = r#"{
        "subjects": [
            {"id": "zoe", "face": {"files": {"image": "face.png", "landmarks": "face.csv"}}, "voice": {"child": {"seed": 3}}},
            {"id": "adam", "face": {"generated": {"seed": 5}}, "voice": {"adult": {"seed": 1}},
             "childify": {"pitch_up_semitones": 5.0, "rate_factor": 0.9}}
        ],
        "sentences": ["The bus was late again", "We made a sandcastle"],
        "output_dir": "out",
        "global_seed": 7
    }"#;
    GenerationManifest::from_json(text, dir).unwrap()
}

#[test]
fn small_run_writes_the_dataset_tree() {
    let dir = tempfile::tempdir().unwrap();
    let m = small_manifest(dir.path());
    let s = run(&m, Some(2)).unwrap();
    assert_eq!(s.results.len(), 4);
    let order: Vec<(&str, usize)> = s.results.iter().map(|r| (r.job.subject.as_str(), r.job.sentence_index)).collect();
    assert_eq!(order, [("adam", 0), ("adam", 1), ("zoe", 0), ("zoe", 1)]);
    for r in &s.results {
        assert_eq!(r.status, JobStatus::Passed, "{r:?}");
        for f in ["audio.wav", "landmarks.csv", "quality.json", "meta.json", "seed.png", "frames/00001.png"] {
            assert!(r.clip_dir.join(f).exists(), "{}/{f}", r.clip_dir.display());
        }
        assert!(r.clip_dir.starts_with(dir.path().join("out").join(&r.job.subject)));
    }
    assert!(dir.path().join("out/run_summary.json").exists());

    std::fs::remove_file(dir.path().join("out/zoe/clip-002/quality.json")).unwrap();
    let summary = summarize(dir.path().join("out")).unwrap();
    assert_eq!(summary.rows.len(), 3);
    assert_eq!(summary.missing_quality.len(), 1);
}

#[test]
fn unwritable_output_fails_before_any_job() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = small_manifest(dir.path());
    std::fs::write(dir.path().join("blocker"), b"file").unwrap();
    m.output_dir = Some(dir.path().join("blocker/out"));
    assert!(run(&m, None).is_err());
}

#[test]
fn failing_jobs_do_not_stop_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = small_manifest(dir.path());
    m.subjects[0].face = FaceSource::Files {
        image: "missing.png".into(),
        landmarks: "missing.csv".into(),
    };
    let s = run(&m, None).unwrap();
    assert_eq!(s.count(JobStatus::Error), 2);
    assert_eq!(s.count(JobStatus::Passed), 2);
    assert!(!s.all_passed());
}

#[test]
fn learned_animator_mode_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = AnimatorConfig {
        epochs: 30,
        ..AnimatorConfig::default()
    };
    let corpus = toy_animator_corpus(2, 4, 0, 16, 1, &cfg).unwrap();
    let (model, _) = train_animator(&corpus.train, &cfg).unwrap();
    model.save(dir.path().join("animator.json")).unwrap();
    let mut m = small_manifest(dir.path());
    m.sentences.truncate(1);
    m.animator = AnimatorSpec::Learned {
        model: "animator.json".into(),
        speaker_model: None,
    };
    let s = run(&m, None).unwrap();
    assert!(s.results.iter().all(|r| r.status != JobStatus::Error), "{:?}", s.results);
}
