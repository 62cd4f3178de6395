//! End-to-end acceptance checks. Runs every criterion, prints one line per
//! criterion and exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use forge_core::audio::{read_wav, write_wav, AudioClip};
use forge_core::landmarks::{
    animate, articulate_clip, toy_animator_corpus, train_animator, AnimatorConfig, AnimatorExample, AnimatorModel,
    ArticulationConfig, LandmarkSequence, LandmarkTemplate,
};
use forge_core::nn::Parameters;
use forge_core::pipeline::{run, summarize, GenerationManifest, DEMO_SUBJECTS};
use forge_core::quality::{aggregate_mos, lip_sync_score, MosResponse, QualityReport, REFERENCE_OVERALL_RATIO};
use forge_core::render::{generate_test_face, render_clip, triangulate, warp_frame, FaceParams, Point2};
use forge_core::speaker::{
    centroid, embedding_separation, ge2e_loss, toy_corpus, train_encoder, EmbeddingBatch, EncoderConfig, EncoderModel,
    Ge2eParams, ToySpeaker,
};
use forge_core::voice::{childify, pitch_shift, time_stretch, time_stretch_bpf, BreakpointFunction, ChildifyParams, SYNTH_HOP};

type Check = Result<(bool, String), String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Gate {
    results: Vec<bool>,
}

impl Gate {
    fn check(&mut self, n: usize, name: &str, budget: Duration, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, d)) => (ok, d),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = elapsed <= budget;
        let pass = ok && in_time;
        let timing = if in_time {
            format!("{:.1} s", elapsed.as_secs_f64())
        } else {
            format!("{:.1} s, over the {:.0} s budget", elapsed.as_secs_f64(), budget.as_secs_f64())
        };
        println!("[{}] {n:>2}. {name}: {detail} ({timing})", if pass { "PASS" } else { "FAIL" });
        self.results.push(pass);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// (channels, sample rate, byte rate, block align, bits, data bytes) read
/// straight from the RIFF chunks.
fn wav_header(bytes: &[u8]) -> Result<(u16, u32, u32, u16, u16, u32), String> {
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err("not a RIFF/WAVE file".into());
    }
    let (mut fmt, mut data) = (None, None);
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let size = le_u32(bytes, at + 4) as usize;
        match &bytes[at..at + 4] {
            b"fmt " => {
                if le_u16(bytes, at + 8) != 1 {
                    return Err("not PCM".into());
                }
                fmt = Some((
                    le_u16(bytes, at + 10),
                    le_u32(bytes, at + 12),
                    le_u32(bytes, at + 16),
                    le_u16(bytes, at + 20),
                    le_u16(bytes, at + 22),
                ));
            }
            b"data" => data = Some(size as u32),
            _ => {}
        }
        at += 8 + size + size % 2;
    }
    let (c, sr, br, ba, bits) = fmt.ok_or("no fmt chunk")?;
    Ok((c, sr, br, ba, bits, data.ok_or("no data chunk")?))
}

fn audio_format() -> Check {
    let dir = tempfile::tempdir().map_err(fail)?;
    let speech = forge_core::tts::synthesize(
        "It's raining so we will plan some other day",
        &forge_core::tts::child_profile(1),
        16_000,
        0,
    )
    .map_err(fail)?;
    let p1 = dir.path().join("speech.wav");
    write_wav(&speech, &p1).map_err(fail)?;
    let (c, sr, br, ba, bits, _) = wav_header(&std::fs::read(&p1).map_err(fail)?)?;
    let tone = AudioClip::sine(440.0, 0.5, 3.5, 16_000).map_err(fail)?;
    let p2 = dir.path().join("tone.wav");
    write_wav(&tone, &p2).map_err(fail)?;
    let (.., data) = wav_header(&std::fs::read(&p2).map_err(fail)?)?;
    let samples = data / 2;
    let back = read_wav(&p2).map_err(fail)?.len();
    let ok = (c, sr, br, ba, bits) == (1, 16_000, 32_000, 2, 16) && samples == 56_000 && back == 56_000;
    Ok((
        ok,
        format!("{c} ch, {sr} Hz, {br} B/s, {bits}-bit; 3.5 s -> {samples} samples in header, {back} read back"),
    ))
}

fn tone(freq: f64) -> Result<AudioClip, String> {
    AudioClip::new(common::sine(freq, 2.0, 16_000), 16_000).map_err(fail)
}

fn pitch_law() -> Check {
    let up12 = pitch_shift(&tone(220.0)?, 12.0).map_err(fail)?;
    let f12 = common::dominant_frequency(up12.samples(), 16_000.0, 100.0, 1000.0);
    let up6 = pitch_shift(&tone(300.0)?, 6.0).map_err(fail)?;
    let f6 = common::dominant_frequency(up6.samples(), 16_000.0, 100.0, 1000.0);
    let want6 = 300.0 * 2f64.sqrt();
    let ok = (f12 - 440.0).abs() <= 2.0 && (f6 - want6).abs() <= 2.0;
    Ok((ok, format!("220 Hz +12 st -> {f12:.2} Hz; 300 Hz +6 st -> {f6:.2} Hz (want {want6:.2})")))
}

fn stretch_law() -> Check {
    let hop = SYNTH_HOP as f64 / 16_000.0;
    let src = tone(440.0)?;
    let s = time_stretch(&src, 1.5).map_err(fail)?;
    let f = common::dominant_frequency(s.samples(), 16_000.0, 100.0, 1000.0);
    let bpf = BreakpointFunction::new(vec![(0.0, 1.0), (2.0, 2.0)]).map_err(fail)?;
    let v = time_stretch_bpf(&src, &bpf).map_err(fail)?;
    let ok = (s.duration_seconds() - 3.0).abs() <= hop && (f - 440.0).abs() <= 2.0 && (v.duration_seconds() - 3.0).abs() <= hop;
    Ok((
        ok,
        format!(
            "x1.5 -> {:.4} s at {f:.2} Hz; ramp 1->2 -> {:.4} s (tolerance {hop:.4} s)",
            s.duration_seconds(),
            v.duration_seconds()
        ),
    ))
}

fn ge2e() -> Check {
    let orth = vec![vec![vec![1.0, 0.0], vec![1.0, 0.0]], vec![vec![0.0, 1.0], vec![0.0, 1.0]]];
    let p = Ge2eParams { w: 1.0, b: 0.0 };
    let got = ge2e_loss(&EmbeddingBatch::from_vectors(orth.clone()).map_err(fail)?, &p).map_err(fail)?;
    let want = 4.0 * (-1.0 + (1.0 + std::f64::consts::E).ln());
    let oracle = common::ge2e_reference(&orth, 1.0, 0.0);

    let (n, m) = (3usize, 4usize);
    let same = vec![vec![vec![0.6, 0.8]; m]; n];
    let deg = ge2e_loss(&EmbeddingBatch::from_vectors(same).map_err(fail)?, &Ge2eParams::default()).map_err(fail)?;
    let want_deg = (n * m) as f64 * (n as f64).ln();
    let ok = (got - want).abs() < 1e-6 && (oracle - want).abs() < 1e-6 && (deg - want_deg).abs() < 1e-6;
    Ok((
        ok,
        format!("orthogonal 2x2 {got:.7} (want {want:.7}, direct {oracle:.7}); identical 3x4 {deg:.7} (want {want_deg:.7})"),
    ))
}

struct SpeakerFixture {
    corpus: Vec<ToySpeaker>,
    model: EncoderModel,
}

fn encoder_training(slot: &mut Option<SpeakerFixture>) -> Check {
    let corpus = toy_corpus(8, 10, 16_000, 1).map_err(fail)?;
    let train: Vec<_> = corpus.iter().map(|s| s.head(8)).collect();
    let held: Vec<_> = corpus.iter().map(|s| s.tail(8)).collect();
    let (model, report) = train_encoder(&train, &EncoderConfig::default()).map_err(fail)?;
    let ratio = report.final_loss() / report.initial_loss();
    let sep = embedding_separation(&model, &held).map_err(fail)?;
    let ok = ratio < 0.2 && sep.margin() >= 0.3;
    *slot = Some(SpeakerFixture { corpus, model });
    Ok((
        ok,
        format!(
            "loss {:.3} -> {:.3} ({:.1}% of initial); held-out same {:.3} - cross {:.3} = {:.3}",
            report.initial_loss(),
            report.final_loss(),
            100.0 * ratio,
            sep.same_speaker,
            sep.cross_speaker,
            sep.margin()
        ),
    ))
}

fn childify_direction(fx: Option<&SpeakerFixture>) -> Check {
    let fx = fx.ok_or("needs the encoder trained by criterion 5")?;
    let embed = |c: &AudioClip| fx.model.embed_clip(c).map_err(fail);
    let children = fx
        .corpus
        .iter()
        .filter(|s| s.is_child)
        .flat_map(|s| s.clips.iter())
        .map(embed)
        .collect::<Result<Vec<_>, _>>()?;
    let child_centroid = centroid(&children).map_err(fail)?;
    let params = ChildifyParams::default();
    let (mut up, mut total) = (0, 0);
    let mut deltas = Vec::new();
    for s in fx.corpus.iter().filter(|s| !s.is_child) {
        let (mut before, mut after) = (0.0, 0.0);
        for clip in &s.clips {
            before += embed(clip)?.cosine(&child_centroid).map_err(fail)?;
            after += embed(&childify(clip, &params).map_err(fail)?)?.cosine(&child_centroid).map_err(fail)?;
        }
        let n = s.clips.len() as f64;
        deltas.push(format!("{:+.3}", (after - before) / n));
        total += 1;
        up += usize::from(after > before);
    }
    let frac = up as f64 / total as f64;
    Ok((
        frac >= 0.8,
        format!("{up}/{total} adults moved toward the child centroid ({})", deltas.join(", ")),
    ))
}

fn animator_checks() -> Check {
    // Gradient check on a full-size model over a short real example.
    let cfg = AnimatorConfig::default();
    let corpus = toy_animator_corpus(2, 8, 2, 16, 3, &cfg).map_err(fail)?;
    let short = AnimatorExample {
        content: corpus.train[0].content[10..16].to_vec(),
        speaker: corpus.train[0].speaker.clone(),
        target: corpus.train[0].target[10..16].to_vec(),
    };
    let rows: Vec<Vec<f64>> = corpus.train.iter().flat_map(|e| e.content.iter().cloned()).collect();
    let st = forge_core::nn::Standardizer::fit(&rows).map_err(fail)?;
    let model = AnimatorModel::new(cfg.clone(), st, 16).map_err(fail)?;
    let batch = [short];
    let (_, grad) = model.loss_and_gradient(&batch).map_err(fail)?;
    let (flat, analytic) = (model.to_flat(), grad.to_flat());
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = model.clone();
    for k in 0..flat.len() {
        let mut f = flat.clone();
        f[k] += h;
        probe.set_flat(&f).map_err(fail)?;
        let up = probe.loss(&batch).map_err(fail)?;
        f[k] -= 2.0 * h;
        probe.set_flat(&f).map_err(fail)?;
        let down = probe.loss(&batch).map_err(fail)?;
        let numeric = (up - down) / (2.0 * h);
        worst = worst.max((numeric - analytic[k]).abs() / (numeric.abs() + analytic[k].abs()).max(1e-8));
    }

    let (trained, _) = train_animator(&corpus.train, &cfg).map_err(fail)?;
    let template = LandmarkTemplate::canonical();
    let (mut learned_min, mut proc_min) = (f64::INFINITY, f64::INFINITY);
    for (clip, s) in &corpus.held_out {
        let feats = forge_core::audio::features(clip, &cfg.features).map_err(fail)?;
        let seq = animate(&trained, &feats, corpus.speakers[*s].as_slice(), &template, cfg.fps, clip.duration_seconds())
            .map_err(fail)?;
        learned_min = learned_min.min(lip_sync_score(&seq, clip).map_err(fail)?);
        let p = articulate_clip(clip, &template, cfg.fps, &cfg.features, &ArticulationConfig::default()).map_err(fail)?;
        proc_min = proc_min.min(lip_sync_score(&p, clip).map_err(fail)?);
    }
    let ok = worst <= 1e-4 && learned_min >= 0.8 && proc_min >= 0.99;
    Ok((
        ok,
        format!(
            "worst gradient rel. error {worst:.2e} over {} parameters; held-out lip-sync r min {learned_min:.3} (learned), {proc_min:.4} (procedural)",
            flat.len()
        ),
    ))
}

fn renderer() -> Check {
    let face = generate_test_face(&FaceParams::default(), 11).map_err(fail)?;
    let mesh = triangulate(&face.landmarks, face.width(), face.height()).map_err(fail)?;
    let identity = warp_frame(&face, &mesh, &face.landmarks, &face.image).map_err(fail)?;
    let max_diff = identity
        .image
        .as_raw()
        .iter()
        .zip(face.image.as_raw())
        .map(|(a, b)| a.abs_diff(*b))
        .max()
        .unwrap_or(0);

    let moved: Vec<Point2> = face.landmarks.iter().map(|p| [p[0] + 5.0, p[1]]).collect();
    let shifted = warp_frame(&face, &mesh, &moved, &face.image).map_err(fail)?.image;
    let lm = &face.landmarks;
    let window = (lm[36][0] as u32, lm[19][1] as u32, lm[45][0] as u32, lm[33][1] as u32);
    let shift = common::best_horizontal_shift(&face.image, &shifted, window, 10);

    let seq = LandmarkSequence::constant(&LandmarkTemplate::canonical().points, 25.0, 3.5).map_err(fail)?;
    let clip = render_clip(&face, &seq, &AudioClip::silence(3.5, 16_000).map_err(fail)?).map_err(fail)?;
    let all_seed = clip.frames.iter().all(|f| *f == face.image);
    let ok = max_diff == 0 && (shift - 5).abs() <= 1 && all_seed && clip.len() == 88;
    Ok((
        ok,
        format!(
            "identity max channel diff {max_diff}; 5 px shift recovered as {shift} px; {} zero-displacement frames equal the seed: {all_seed}",
            clip.len()
        ),
    ))
}

fn end_to_end() -> Check {
    let dirs = [tempfile::tempdir().map_err(fail)?, tempfile::tempdir().map_err(fail)?];
    let mut summaries = Vec::new();
    let mut first_run = 0.0;
    for (k, d) in dirs.iter().enumerate() {
        let mut m = GenerationManifest::demo();
        m.output_dir = Some(d.path().to_path_buf());
        let t = Instant::now();
        summaries.push(run(&m, None).map_err(fail)?);
        if k == 0 {
            first_run = t.elapsed().as_secs_f64();
        }
    }
    let s = &summaries[0];
    let mut problems = Vec::new();
    if s.results.len() != DEMO_SUBJECTS {
        problems.push(format!("{} clips", s.results.len()));
    }
    let (mut id_min, mut sync_min, mut hist_min) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut identical = 0;
    for r in &s.results {
        let q = QualityReport::read(r.clip_dir.join("quality.json")).map_err(fail)?;
        id_min = id_min.min(q.identity.min);
        sync_min = sync_min.min(q.lip_sync.r.unwrap_or(f64::NEG_INFINITY));
        hist_min = hist_min.min(q.histograms.nonzero_fraction);
        if !(q.landmark_sanity.pass && q.identity.min >= 0.80 && q.lip_sync.r.is_some_and(|r| r >= 0.8) && q.histograms.nonzero_fraction > 0.9) {
            problems.push(format!("{} fails quality", r.job.subject));
        }
        let other = dirs[1].path().join(&r.job.subject).join(r.job.clip_name());
        for name in ["audio.wav", "landmarks.csv"] {
            let a = std::fs::read(r.clip_dir.join(name)).map_err(fail)?;
            let b = std::fs::read(other.join(name)).map_err(fail)?;
            if a == b {
                identical += 1;
            } else {
                problems.push(format!("{}/{name} differs between runs", r.job.subject));
            }
        }
        let frames = std::fs::read_dir(r.clip_dir.join("frames")).map_err(fail)?;
        for entry in frames {
            let path = entry.map_err(fail)?.path();
            let name = path.file_name().unwrap_or_default();
            if std::fs::read(&path).map_err(fail)? != std::fs::read(other.join("frames").join(name)).map_err(fail)? {
                problems.push(format!("{}/frames/{} differs between runs", r.job.subject, name.to_string_lossy()));
            }
        }
    }
    let rows = summarize(dirs[0].path()).map_err(fail)?.rows.len();
    if rows != DEMO_SUBJECTS {
        problems.push(format!("summary lists {rows} clips"));
    }
    if first_run > 600.0 {
        problems.push(format!("single run took {first_run:.0} s"));
    }
    Ok((
        problems.is_empty(),
        format!(
            "{} clips; identity min {id_min:.3}, lip-sync min {sync_min:.3}, nonzero histogram transitions min {:.1}%; {identical}/{} audio+landmark files byte-identical across runs; one run {first_run:.1} s{}",
            s.results.len(),
            100.0 * hist_min,
            2 * s.results.len(),
            if problems.is_empty() { String::new() } else { format!("; problems: {}", problems.join("; ")) }
        ),
    ))
}

fn mos() -> Check {
    let answers = |a: [bool; 3]| a.map(|x| if x { "agree" } else { "disagree" });
    let rows = [
        [true, true, true],
        [true, true, true],
        [true, true, true],
        [true, true, true],
        [true, false, true],
        [false, false, false],
    ];
    let responses = rows
        .iter()
        .enumerate()
        .map(|(i, r)| MosResponse::new(&format!("p{i}"), &["clip".to_string()], &answers(*r)).map_err(fail))
        .collect::<Result<Vec<_>, _>>()?;
    let s = aggregate_mos(&responses).map_err(fail)?;
    let want = [5.0 / 6.0, 4.0 / 6.0, 5.0 / 6.0];
    let ok = s.per_question.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-3)
        && (s.overall - 0.778).abs() < 1e-3
        && s.to_string().contains(&format!("{:.1}%", 100.0 * REFERENCE_OVERALL_RATIO));
    Ok((
        ok,
        format!(
            "ratios ({:.3}, {:.3}, {:.3}), overall {:.3}; report line: {}",
            s.per_question[0],
            s.per_question[1],
            s.per_question[2],
            s.overall,
            s.to_string().lines().last().unwrap_or_default()
        ),
    ))
}

fn main() {
    let mut gate = Gate { results: Vec::new() };
    gate.check(1, "audio format fidelity", secs(1), audio_format);
    gate.check(2, "pitch law", secs(5), pitch_law);
    gate.check(3, "stretch law", secs(5), stretch_law);
    gate.check(4, "GE2E correctness", secs(5), ge2e);
    let mut fixture = None;
    gate.check(5, "speaker encoder training", secs(300), || encoder_training(&mut fixture));
    gate.check(6, "childify direction", secs(180), || childify_direction(fixture.as_ref()));
    gate.check(7, "animator", secs(300), animator_checks);
    gate.check(8, "renderer", secs(60), renderer);
    gate.check(9, "end-to-end demo dataset", secs(1200), end_to_end);
    gate.check(10, "MOS arithmetic", secs(1), mos);
    let passed = gate.results.iter().filter(|&&p| p).count();
    println!("{passed}/{} acceptance criteria passed", gate.results.len());
    if passed != gate.results.len() {
        std::process::exit(1);
    }
}
