use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use forge_core::audio::{plot_decimate, read_wav, write_plot, write_wav};
use forge_core::landmarks::{toy_animator_corpus, train_animator, AnimatorConfig};
use forge_core::pipeline::{run, summarize, GenerationManifest, JobStatus};
use forge_core::quality::{aggregate_mos, collect_mos, evaluate_dir, read_mos, QualityThresholds, MOS_QUESTIONS};
use forge_core::speaker::{centroid, rank_adults, toy_corpus, train_encoder, EncoderConfig, EncoderModel, SpeakerClips};
use forge_core::tts::{adult_profile, child_profile, synthesize, VoiceProfile};
use forge_core::voice::{childify, BreakpointFunction, ChildifyParams};

use crate::{AnimatorAction, Command, ManifestAction, MosAction, SpeakerAction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Voice {
    Child,
    Adult,
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

pub fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gen {
            manifest,
            demo,
            output,
            workers,
            seed,
        } => gen(manifest, demo, output, workers, seed),
        Command::Manifest { action } => {
            let m = match action {
                ManifestAction::Check { path } => GenerationManifest::load(&path)?,
                ManifestAction::Demo => GenerationManifest::demo(),
            };
            println!("{}", m.to_json()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Childify {
            input,
            output,
            pitch,
            rate,
            pitch_bpf,
            rate_bpf,
        } => {
            let mut params = ChildifyParams::new(pitch, rate)?;
            params.pitch_bpf = pitch_bpf.map(BreakpointFunction::load).transpose()?;
            params.rate_bpf = rate_bpf.map(BreakpointFunction::load).transpose()?;
            params.validate()?;
            let clip = read_wav(&input)?;
            let out = childify(&clip, &params)?;
            write_wav(&out, &output)?;
            eprintln!(
                "{}: {:.3} s -> {}: {:.3} s",
                input.display(),
                clip.duration_seconds(),
                output.display(),
                out.duration_seconds()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Tts {
            text,
            output,
            voice,
            seed,
            profile,
            sample_rate,
        } => {
            let p = match profile {
                Some(path) => VoiceProfile::load(path)?,
                None if voice == Voice::Child => child_profile(seed),
                None => adult_profile(seed),
            };
            let clip = synthesize(&text, &p, sample_rate, seed)?;
            if clip.is_empty() {
                bail!("text {text:?} produced no audio");
            }
            write_wav(&clip, &output)?;
            eprintln!("{} ({}): {:.3} s", output.display(), p.name, clip.duration_seconds());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { clip_dir, write } => {
            let thresholds = read_thresholds(&clip_dir).unwrap_or_default();
            let report = evaluate_dir(&clip_dir, &thresholds)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if write {
                report.write(clip_dir.join("quality.json"))?;
            }
            Ok(status(report.pass))
        }
        Command::Mos { action } => mos(action),
        Command::Summarize { root, json } => {
            let s = summarize(&root)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&s)?);
            } else {
                println!("{s}");
            }
            Ok(status(s.all_passed()))
        }
        Command::Speaker { action } => speaker(action),
        Command::Animator { action } => animator(action),
        Command::Plot { input, output, points } => {
            let clip = read_wav(&input)?;
            write_plot(&plot_decimate(&clip, points), &output)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Thresholds recorded in an existing quality.json, so re-evaluation uses
/// the same bar the clip was generated with.
fn read_thresholds(dir: &Path) -> Option<QualityThresholds> {
    forge_core::quality::QualityReport::read(dir.join("quality.json"))
        .ok()
        .map(|q| q.thresholds)
}

fn gen(
    manifest: Option<PathBuf>,
    demo: bool,
    output: Option<PathBuf>,
    workers: Option<usize>,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let mut m = match (&manifest, demo) {
        (Some(path), _) => GenerationManifest::load(path)?,
        (None, true) => GenerationManifest::demo(),
        (None, false) => bail!("either --manifest or --demo is required"),
    };
    if let Some(out) = output {
        // Command-line paths are relative to the working directory.
        m.output_dir = Some(std::path::absolute(out)?);
    }
    if let Some(s) = seed {
        m.global_seed = s;
    }
    let summary = run(&m, workers)?;
    for r in &summary.results {
        let tag = match r.status {
            JobStatus::Passed => "pass",
            JobStatus::QualityFailed => "FAIL",
            JobStatus::Error => "ERROR",
        };
        let detail = match (&r.error, r.identity_min, r.lip_sync) {
            (Some(e), _, _) => e.clone(),
            (None, Some(id), sync) => format!(
                "identity {id:.3}  lip-sync {}",
                sync.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
            ),
            _ => String::new(),
        };
        println!("{tag:<5} {}/{}  {detail}", r.job.subject, r.job.clip_name());
    }
    println!(
        "{} clips under {}: {} passed, {} failed quality, {} errors",
        summary.results.len(),
        summary.output_dir.display(),
        summary.count(JobStatus::Passed),
        summary.count(JobStatus::QualityFailed),
        summary.count(JobStatus::Error)
    );
    Ok(status(summary.all_passed()))
}

fn mos(action: MosAction) -> Result<ExitCode> {
    match action {
        MosAction::Add {
            survey,
            participant,
            clip,
            answers,
        } => {
            let answers: Vec<&str> = answers.iter().map(String::as_str).collect();
            let r = collect_mos(&survey, &participant, &clip, &answers)?;
            eprintln!("recorded {} for {} in {}", r.participant, r.clip, survey.display());
        }
        MosAction::Report { survey, json } => {
            let rows = read_mos(&survey)?;
            let s = aggregate_mos(&rows)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&s)?);
            } else {
                println!("{s}");
            }
        }
        MosAction::Questions => {
            for (i, q) in MOS_QUESTIONS.iter().enumerate() {
                println!("q{}: {q}", i + 1);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn wav_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    v.sort();
    Ok(v)
}

fn speaker(action: SpeakerAction) -> Result<ExitCode> {
    match action {
        SpeakerAction::Train {
            output,
            data,
            toy_speakers,
            toy_utterances,
            epochs,
            seed,
        } => {
            let corpus: Vec<SpeakerClips> = match data {
                Some(dir) => {
                    let mut speakers = Vec::new();
                    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&dir)
                        .with_context(|| format!("reading {}", dir.display()))?
                        .filter_map(|e| e.ok().map(|e| e.path()))
                        .filter(|p| p.is_dir())
                        .collect();
                    dirs.sort();
                    for d in dirs {
                        let clips = wav_files(&d)?.iter().map(read_wav).collect::<Result<Vec<_>, _>>()?;
                        let name = d.file_name().unwrap_or_default().to_string_lossy().into_owned();
                        speakers.push(SpeakerClips { name, clips });
                    }
                    speakers
                }
                None => toy_corpus(toy_speakers, toy_utterances, 16_000, seed)?
                    .iter()
                    .map(|s| s.head(usize::MAX))
                    .collect(),
            };
            let mut cfg = EncoderConfig {
                seed,
                ..EncoderConfig::default()
            };
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            let (model, report) = train_encoder(&corpus, &cfg)?;
            model.save(&output)?;
            eprintln!(
                "trained on {} speakers ({} partials each): loss {:.4} -> {:.4}; saved {}",
                corpus.len(),
                report.partials_per_speaker,
                report.initial_loss(),
                report.final_loss(),
                output.display()
            );
        }
        SpeakerAction::Embed { model, inputs } => {
            let model = EncoderModel::load(&model)?;
            let mut out = BTreeMap::new();
            for p in inputs {
                let e = model.embed_clip(&read_wav(&p)?)?;
                out.insert(p.display().to_string(), e.as_slice().to_vec());
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        SpeakerAction::Rank { model, target, adult } => {
            let model = EncoderModel::load(&model)?;
            let targets = target
                .iter()
                .map(|p| Ok(model.embed_clip(&read_wav(p)?)?))
                .collect::<Result<Vec<_>>>()?;
            let target = centroid(&targets)?;
            let mut by_name: BTreeMap<String, Vec<_>> = BTreeMap::new();
            for spec in &adult {
                let (name, path) = spec
                    .split_once('=')
                    .with_context(|| format!("--adult {spec:?} must look like name=path.wav"))?;
                by_name.entry(name.to_string()).or_default().push(model.embed_clip(&read_wav(path)?)?);
            }
            let adults = by_name
                .into_iter()
                .map(|(n, es)| Ok((n, centroid(&es)?)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            for (rank, (name, sim)) in rank_adults(&adults, &target)?.iter().enumerate() {
                println!("{:>2}. {name:<20} {sim:.4}", rank + 1);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn animator(action: AnimatorAction) -> Result<ExitCode> {
    let AnimatorAction::Train {
        output,
        speakers,
        clips_per_speaker,
        embedding_dim,
        epochs,
        seed,
    } = action;
    let mut cfg = AnimatorConfig {
        seed,
        ..AnimatorConfig::default()
    };
    if let Some(e) = epochs {
        cfg.epochs = e;
    }
    let corpus = toy_animator_corpus(speakers, clips_per_speaker, 0, embedding_dim, seed, &cfg)?;
    let (model, report) = train_animator(&corpus.train, &cfg)?;
    model.save(&output)?;
    eprintln!(
        "trained on {} clips: loss {:.3e} -> {:.3e}; saved {}",
        corpus.train.len(),
        report.losses.first().copied().unwrap_or(f64::NAN),
        report.losses.last().copied().unwrap_or(f64::NAN),
        output.display()
    );
    Ok(ExitCode::SUCCESS)
}
