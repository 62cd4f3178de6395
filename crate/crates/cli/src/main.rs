use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

/// Synthetic talking-face dataset generator.
#[derive(Parser)]
#[command(name = "forge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate every clip of a manifest (or the 20-subject demo).
    Gen {
        /// Manifest JSON; paths inside it are relative to its directory.
        #[arg(short, long, required_unless_present = "demo")]
        manifest: Option<PathBuf>,
        /// Use the built-in 20-subject demo manifest.
        #[arg(long, conflicts_with = "manifest")]
        demo: bool,
        /// Output root, overriding the manifest and FORGE_OUTPUT_ROOT.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(short, long)]
        workers: Option<usize>,
        /// Override the manifest's global seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Validate a manifest and print it with defaults filled in, or print the demo manifest.
    Manifest {
        #[command(subcommand)]
        action: ManifestAction,
    },
    /// Raise pitch and slow down a WAV recording.
    Childify {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        pitch: f64,
        #[arg(long, default_value_t = 0.92)]
        rate: f64,
        /// Breakpoint file of (time, frequency ratio) pairs; replaces --pitch.
        #[arg(long)]
        pitch_bpf: Option<PathBuf>,
        /// Breakpoint file of (time, rate factor) pairs; replaces --rate.
        #[arg(long)]
        rate_bpf: Option<PathBuf>,
    },
    /// Synthesize a sentence with the formant voice.
    Tts {
        text: String,
        #[arg(short, long)]
        output: PathBuf,
        /// Built-in voice family.
        #[arg(long, value_enum, default_value_t = commands::Voice::Child)]
        voice: commands::Voice,
        /// Seed for the voice parameters and the synthesis noise.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `key=value` profile file; replaces --voice.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 16_000)]
        sample_rate: u32,
    },
    /// Recompute quality checks for one clip directory.
    Eval {
        clip_dir: PathBuf,
        /// Overwrite the clip's quality.json with the new report.
        #[arg(long)]
        write: bool,
    },
    /// Opinion survey: append responses or report ratios.
    Mos {
        #[command(subcommand)]
        action: MosAction,
    },
    /// Tabulate quality reports under a dataset root.
    Summarize {
        root: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Train, apply and query the speaker encoder.
    Speaker {
        #[command(subcommand)]
        action: SpeakerAction,
    },
    /// Train the audio-to-landmark animator on a toy corpus.
    Animator {
        #[command(subcommand)]
        action: AnimatorAction,
    },
    /// Write a decimated waveform as `time_s,amplitude` CSV.
    Plot {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = forge_core::audio::DEFAULT_PLOT_POINTS)]
        points: usize,
    },
}

#[derive(Subcommand)]
enum ManifestAction {
    Check { path: PathBuf },
    Demo,
}

#[derive(Subcommand)]
enum MosAction {
    Add {
        #[arg(long, env = "FORGE_SURVEY", default_value = "survey.csv")]
        survey: PathBuf,
        #[arg(short, long)]
        participant: String,
        /// Clip(s) the answers refer to.
        #[arg(short, long, required = true)]
        clip: Vec<String>,
        /// Three answers, `agree` or `disagree`.
        answers: Vec<String>,
    },
    Report {
        #[arg(long, env = "FORGE_SURVEY", default_value = "survey.csv")]
        survey: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Print the survey questions.
    Questions,
}

#[derive(Subcommand)]
enum SpeakerAction {
    Train {
        #[arg(short, long)]
        output: PathBuf,
        /// Directory with one sub-directory of WAV files per speaker;
        /// the toy corpus is used when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 8)]
        toy_speakers: usize,
        #[arg(long, default_value_t = 10)]
        toy_utterances: usize,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the embedding of each WAV file as JSON.
    Embed {
        #[arg(short, long)]
        model: PathBuf,
        inputs: Vec<PathBuf>,
    },
    /// Rank adult voices by similarity to the centroid of target clips.
    Rank {
        #[arg(short, long)]
        model: PathBuf,
        /// Target (e.g. child) recordings.
        #[arg(long, required = true)]
        target: Vec<PathBuf>,
        /// Candidate voices as `name=path.wav`; repeat per clip.
        #[arg(long, required = true)]
        adult: Vec<String>,
    },
}

#[derive(Subcommand)]
enum AnimatorAction {
    Train {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 4)]
        speakers: usize,
        #[arg(long, default_value_t = 4)]
        clips_per_speaker: usize,
        #[arg(long, default_value_t = 16)]
        embedding_dim: usize,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
