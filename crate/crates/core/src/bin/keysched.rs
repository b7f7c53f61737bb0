use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use keysched::audiofeat::{mel_spectrogram, patch_token_count, PATCH_KERNEL, SPECTROGRAM_FRAMES};
use keysched::eval::{average_precision, parse_instances, Threshold};
use keysched::flow::{motion_curve, FlowParams};
use keysched::ingest::{
    load_frame_sequence, load_wav, read_schedule_json, read_scores_csv, schedule_to_json, write_atomic,
    write_scores_csv,
};
use keysched::pipeline::{analyze, schedule_from_scores, DetectionParams};
use keysched::plot::{render_svg, PlotSpec};
use keysched::schedule::{freenoise_windows, DEFAULT_STRIDE, DEFAULT_WINDOW};
use keysched::select::{SelectionParams, DEFAULT_KEYFRAMES};
use keysched::Error;

const EXIT_IO: u8 = 2;
const EXIT_FLOW: u8 = 3;
const EXIT_SELECT: u8 = 4;
const EXIT_AUDIO: u8 = 5;
const EXIT_GEOMETRY: u8 = 6;
const EXIT_EVAL: u8 = 7;
const EXIT_PLOT: u8 = 8;
const EXIT_USAGE: u8 = 64;

const EXIT_CODES: &str = "\
Exit codes:
  0   success, all outputs written
  2   input/output error (missing or malformed frames, WAV, CSV, JSON; write failure)
  3   optical flow error (frames too small, fewer than 2 frames, bad flow parameters)
  4   keyframe selection error (invalid --k, bad detection parameters)
  5   audio feature error (wrong sample rate, clip too short, kernel larger than input)
  6   window geometry error (stride > window or window > frames)
  7   evaluation error (no instance with ground-truth keypoints)
  8   plot error
  64  command-line usage error

Set KEYSCHED_THREADS to cap the number of worker threads.";

#[derive(Parser, Debug)]
#[command(name = "keysched", version, about = "Keyframe scheduling for audio-driven video generation", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute per-frame motion scores from a directory of PGM frames.
    Score {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value_t = 24.0)]
        fps: f64,
        /// Divide each score by the pixel count.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 15.0)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Select keyframes from a motion-score CSV.
    Select {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = DEFAULT_KEYFRAMES)]
        k: usize,
        /// Pick peaks at random (seeded) instead of by prominence.
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        window: usize,
        #[arg(long, default_value_t = 5)]
        min_distance: usize,
        #[arg(long, default_value_t = 0.1)]
        prominence: f64,
    },
    /// Write a 128-band log-mel spectrogram of a 16 kHz mono WAV as CSV.
    Spectrogram {
        #[arg(long)]
        wav: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the number of patches along the time axis.
    Patches {
        #[arg(long = "t-a", default_value_t = SPECTROGRAM_FRAMES)]
        t_a: usize,
        #[arg(long, default_value_t = PATCH_KERNEL)]
        kernel: usize,
        #[arg(long, default_value_t = 4)]
        stride: usize,
    },
    /// Emit an overlapping window plan as JSON.
    Windows {
        #[arg(long, default_value_t = 48)]
        frames: usize,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_STRIDE)]
        stride: usize,
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute AP@t over a keypoint instance file.
    EvalAp {
        #[arg(long)]
        instances: PathBuf,
        #[arg(long, default_value_t = 3)]
        t: usize,
        /// Require distance strictly below t.
        #[arg(long)]
        strict: bool,
    },
    /// Render a motion curve with peaks, valleys and keyframes as SVG.
    Plot {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 800)]
        width: u32,
        #[arg(long, default_value_t = 300)]
        height: u32,
    },
}

struct Failure {
    code: u8,
    error: Error,
}

trait Stage<T> {
    fn stage(self, code: u8) -> Result<T, Failure>;
}

impl<T> Stage<T> for keysched::Result<T> {
    fn stage(self, code: u8) -> Result<T, Failure> {
        self.map_err(|error| Failure { code, error })
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("KEYSCHED_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        // Only fails if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    write_atomic(path, text.as_bytes()).stage(EXIT_IO)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Score {
            frames,
            fps,
            normalize,
            out,
            alpha,
            iterations,
            levels,
        } => {
            let seq = load_frame_sequence(&frames, fps).stage(EXIT_IO)?;
            let params = FlowParams {
                alpha,
                iterations,
                pyramid_levels: levels,
                ..FlowParams::default()
            };
            let curve = motion_curve(&seq, &params, normalize).stage(EXIT_FLOW)?;
            write_scores_csv(&curve, &out).stage(EXIT_IO)
        }
        Command::Select {
            scores,
            k,
            random,
            seed,
            out,
            window,
            min_distance,
            prominence,
        } => {
            let raw = read_scores_csv(&scores).stage(EXIT_IO)?;
            let detection = DetectionParams {
                smooth_window: window,
                min_distance,
                min_prominence: prominence,
            };
            let selection = if random {
                SelectionParams::seeded_random(k, seed)
            } else {
                SelectionParams::new(k)
            };
            let (_, schedule) = schedule_from_scores(&raw, &detection, &selection).stage(EXIT_SELECT)?;
            write_text(&out, &schedule_to_json(&schedule).stage(EXIT_SELECT)?)
        }
        Command::Spectrogram { wav, out } => {
            let clip = load_wav(&wav, true).stage(EXIT_IO)?;
            let mel = mel_spectrogram(&clip).stage(EXIT_AUDIO)?;
            write_text(&out, &mel.to_csv())
        }
        Command::Patches { t_a, kernel, stride } => {
            let n = patch_token_count(t_a, kernel, stride).stage(EXIT_AUDIO)?;
            println!("{n}");
            Ok(())
        }
        Command::Windows {
            frames,
            window,
            stride,
            out,
        } => {
            let plan = freenoise_windows(frames, window, stride).stage(EXIT_GEOMETRY)?;
            let mut json = serde_json::to_string_pretty(&plan).expect("window plan serializes");
            json.push('\n');
            match out {
                Some(path) => write_text(&path, &json),
                None => {
                    print!("{json}");
                    Ok(())
                }
            }
        }
        Command::EvalAp { instances, t, strict } => {
            let text = fs::read_to_string(&instances)
                .map_err(|e| Error::Io {
                    path: instances.clone(),
                    source: e,
                })
                .stage(EXIT_IO)?;
            let parsed = parse_instances(&text).stage(EXIT_IO)?;
            let mode = if strict { Threshold::Strict } else { Threshold::Inclusive };
            let ap = average_precision(&parsed, t, mode).stage(EXIT_EVAL)?;
            println!("{ap}");
            Ok(())
        }
        Command::Plot {
            scores,
            schedule,
            out,
            width,
            height,
        } => {
            let raw = read_scores_csv(&scores).stage(EXIT_IO)?;
            let schedule = schedule.map(|p| read_schedule_json(&p)).transpose().stage(EXIT_IO)?;
            let analysis = analyze(&raw, &DetectionParams::default()).stage(EXIT_PLOT)?;
            let svg = render_svg(&PlotSpec {
                width,
                height,
                curve: &analysis.curve,
                extrema: &analysis.extrema,
                schedule: schedule.as_ref(),
            })
            .stage(EXIT_PLOT)?;
            write_text(&out, &svg)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("keysched: {error}");
            ExitCode::from(code)
        }
    }
}
