use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use multisync::analysis::{
    crossmodal_offset_report, crosscorr_lag_with, frame_level_sync_check, interevent_durations,
    summarize_lags, LagMeasurement, LagOptions, DEFAULT_MAX_LAG,
};
use multisync::audio::{read_wav, WavFormat, WavSink, WavSource};
use multisync::ltc::{
    extract_timecodes_with, samples_per_bit, Demodulator, FrameExtractor, LtcFrame, Modulator,
    DEFAULT_SEARCH_HALFWIDTH,
};
use multisync::signal::{
    detect_event_boundaries, generate_schedule, render_beep_track, EventBoundaries, EventSchedule,
    DEFAULT_MIN_GAP_SECS, DEFAULT_THRESHOLD,
};
use multisync::sim::{measure_sim_latency, run_simulation, TopologyConfig};
use multisync::{Error, FrameRate, Result, Timecode};

/// Timecode, lag and crossmodal alignment tools for multimodal capture rigs.
#[derive(Parser)]
#[command(name = "multisync", version)]
struct Cli {
    /// Exit with status 1 when any tolerance verdict fails.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode or decode linear timecode audio.
    #[command(subcommand)]
    Ltc(LtcCommand),
    /// Sub-frame lag between two recordings by cross-correlation.
    Lag(LagArgs),
    /// Stimulus schedules, beep tracks and event-based alignment.
    #[command(subcommand)]
    Events(EventsCommand),
    /// Simulate the capture network and report offset distributions.
    Simulate(SimulateArgs),
}

#[derive(Subcommand)]
enum LtcCommand {
    /// Write a WAV file of biphase-mark modulated timecode.
    Encode(EncodeArgs),
    /// Decode timecode frames from a WAV file to CSV (anchor_sample,timecode).
    Decode(DecodeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SampleFormat {
    Int16,
    Float32,
}

impl From<SampleFormat> for WavFormat {
    fn from(f: SampleFormat) -> Self {
        match f {
            SampleFormat::Int16 => WavFormat::Int16,
            SampleFormat::Float32 => WavFormat::Float32,
        }
    }
}

#[derive(Args)]
struct EncodeArgs {
    /// First timecode, HH:MM:SS:FF.
    #[arg(long, default_value = "00:00:00:00")]
    start: String,
    /// Length in seconds, rounded up to whole frames.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value_t = 30)]
    fps: u32,
    #[arg(long, default_value_t = 192_000)]
    sample_rate: u32,
    /// Peak level of the square wave.
    #[arg(long, default_value_t = 0.5)]
    amplitude: f32,
    #[arg(long, value_enum, default_value_t = SampleFormat::Int16)]
    format: SampleFormat,
    out_wav: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long, default_value_t = 30)]
    fps: u32,
    /// Edge search window either side of the expected bit boundary, in samples.
    #[arg(long, default_value_t = DEFAULT_SEARCH_HALFWIDTH)]
    halfwidth: usize,
    in_wav: PathBuf,
    /// Output CSV; standard output when omitted.
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct LagArgs {
    /// First recording (reference).
    #[arg(required_unless_present_any = ["batch", "lags"])]
    wav_a: Option<PathBuf>,
    /// Second recording; a positive lag means it leads the first.
    #[arg(required_unless_present_any = ["batch", "lags"])]
    wav_b: Option<PathBuf>,
    /// CSV with columns wav_a,wav_b; relative paths resolve against the CSV's directory.
    #[arg(long, conflicts_with_all = ["wav_a", "wav_b", "lags"])]
    batch: Option<PathBuf>,
    /// Summarize a list of lags in samples instead of measuring, e.g. 79,80,-43.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with_all = ["wav_a", "wav_b"])]
    lags: Option<Vec<i64>>,
    /// Sample rate for --lags.
    #[arg(long, default_value_t = 192_000)]
    sample_rate: u32,
    /// Largest lag searched in either direction, in samples.
    #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
    max_lag: usize,
    /// Score by normalized rather than raw correlation.
    #[arg(long)]
    normalized: bool,
    /// Frame rate used for the frame-level timecode check.
    #[arg(long, default_value_t = 30)]
    fps: u32,
    /// Print a JSON report instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum EventsCommand {
    /// Random stimulus schedule CSV (onset_seconds).
    Generate {
        #[arg(long, short, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        out_csv: PathBuf,
    },
    /// Render a schedule as a beep track.
    Render {
        #[arg(long, default_value_t = 48_000)]
        sample_rate: u32,
        /// Beep length in seconds.
        #[arg(long, default_value_t = 0.2)]
        beep_duration: f64,
        #[arg(long, value_enum, default_value_t = SampleFormat::Int16)]
        format: SampleFormat,
        schedule_csv: PathBuf,
        out_wav: PathBuf,
    },
    /// Detect event boundaries in a recording (onset_sample,offset_sample).
    Detect {
        /// Envelope level that marks an event.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f32,
        /// Shortest silence separating two events, in seconds.
        #[arg(long, default_value_t = DEFAULT_MIN_GAP_SECS)]
        min_gap: f64,
        in_wav: PathBuf,
        out_csv: PathBuf,
    },
    /// Compare inter-event durations of two streams with the schedule.
    Align {
        boundaries_a: PathBuf,
        boundaries_b: PathBuf,
        /// Stimulus schedule the recordings were made from.
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        rate_a: u32,
        #[arg(long, default_value_t = 48_000)]
        rate_b: u32,
        #[arg(long, default_value_t = 0.2)]
        beep_duration: f64,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-event offsets CSV.
        #[arg(long)]
        events_csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML topology config; `--print-default-config` gives a starting point.
    #[arg(required_unless_present = "print_default_config")]
    config: Option<PathBuf>,
    /// Directory for trace.csv, sync_log.csv and latency.json.
    #[arg(required_unless_present = "print_default_config")]
    out_dir: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Print the default config as TOML and exit.
    #[arg(long)]
    print_default_config: bool,
}

enum Outcome {
    Pass,
    VerdictFailed,
}

fn check_input(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("input file {} not found", path.display())))
    }
}

fn check_output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => {
            Err(Error::InvalidParameter(format!("output directory {} does not exist", dir.display())))
        }
        _ => Ok(()),
    }
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn ltc_encode(a: &EncodeArgs) -> Result<Outcome> {
    check_output(&a.out_wav)?;
    let rate = FrameRate::from_fps(a.fps)?;
    let mut tc = Timecode::parse(&a.start, rate)?;
    if !(a.duration.is_finite() && a.duration > 0.0) {
        return Err(Error::InvalidParameter(format!("duration {} must be positive", a.duration)));
    }
    let spb = samples_per_bit(a.sample_rate, a.fps)?;
    let n_frames = (a.duration * f64::from(a.fps) - 1e-9).ceil() as u64;
    let mut sink = WavSink::create(&a.out_wav, a.sample_rate, a.format.into())?;
    let mut modulator = Modulator::new(a.amplitude);
    let mut buf = Vec::new();
    for k in 0..n_frames {
        modulator.push_frame(&LtcFrame::new(tc), spb, &mut buf);
        tc = tc.increment();
        if buf.len() >= 1 << 16 || k + 1 == n_frames {
            sink.write(&buf)?;
            buf.clear();
        }
    }
    sink.finalize()?;
    println!(
        "wrote {n_frames} frames ({} samples at {} Hz) to {}",
        n_frames * 80 * spb as u64,
        a.sample_rate,
        a.out_wav.display()
    );
    Ok(Outcome::Pass)
}

fn ltc_decode(a: &DecodeArgs) -> Result<Outcome> {
    check_input(&a.in_wav)?;
    if let Some(p) = &a.out_csv {
        check_output(p)?;
    }
    let rate = FrameRate::from_fps(a.fps)?;
    let mut src = WavSource::open(&a.in_wav)?;
    let spb = samples_per_bit(src.sample_rate(), a.fps)?;
    let mut demod = Demodulator::new(spb, a.halfwidth)?;
    let mut extractor = FrameExtractor::new(rate);
    let mut chunk = Vec::new();
    while src.read_chunk(&mut chunk, 1 << 16)? > 0 {
        demod.push(&chunk, &mut extractor);
    }
    demod.finish(&mut extractor);
    let out = extractor.finish();
    if out.frames.is_empty() && out.failures.is_empty() && out.partial == 0 {
        return Err(Error::NoCarrierDetected);
    }

    let sink: Box<dyn Write> = match &a.out_csv {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["anchor_sample", "timecode"])?;
    for f in &out.frames {
        w.write_record([f.anchor_sample.to_string(), f.timecode().to_string()])?;
    }
    w.flush()?;
    let summary = format!(
        "decoded {} frames, {} decode failures, {} discontinuities",
        out.frames.len(),
        out.failures.len(),
        out.discontinuities()
    );
    if a.out_csv.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(Outcome::Pass)
}

fn measure_pair(a: &Path, b: &Path, args: &LagArgs) -> Result<(LagMeasurement, Option<String>, bool)> {
    check_input(a)?;
    check_input(b)?;
    let sa = read_wav(a)?;
    let sb = read_wav(b)?;
    let opts = LagOptions { max_lag: args.max_lag, normalized: args.normalized };
    let m = crosscorr_lag_with(&sa, &sb, &opts)?;

    let frame_check = (|| -> Result<String> {
        let rate = FrameRate::from_fps(args.fps)?;
        let spb = samples_per_bit(sa.sample_rate(), args.fps)?;
        let ta = extract_timecodes_with(&sa, spb, DEFAULT_SEARCH_HALFWIDTH, rate)?.timecodes();
        let tb = extract_timecodes_with(&sb, spb, DEFAULT_SEARCH_HALFWIDTH, rate)?.timecodes();
        let r = frame_level_sync_check(&ta, &tb)?;
        Ok(if r.synchronized() {
            format!("synchronized ({} frames compared)", r.compared)
        } else {
            format!(
                "{} of {} frames mismatched (first at frame {})",
                r.mismatches,
                r.compared,
                r.first_mismatch.unwrap_or(0)
            )
        })
    })();
    let (text, ok) = match frame_check {
        Ok(s) => {
            let ok = s.starts_with("synchronized");
            (Some(s), ok)
        }
        Err(_) => (None, true),
    };
    Ok((m, text, ok))
}

fn lag(args: &LagArgs) -> Result<Outcome> {
    if let Some(lags) = &args.lags {
        let s = summarize_lags(lags, args.sample_rate)?;
        if args.json {
            println!("{}", to_json(&s)?);
        } else {
            print_lag_summary(&s);
        }
        return Ok(Outcome::Pass);
    }

    let pairs: Vec<(PathBuf, PathBuf)> = match &args.batch {
        Some(list) => {
            check_input(list)?;
            let base = list.parent().unwrap_or(Path::new("")).to_path_buf();
            let mut r = csv::Reader::from_path(list)?;
            let mut pairs = Vec::new();
            for row in r.records() {
                let row = row?;
                let (Some(a), Some(b)) = (row.get(0), row.get(1)) else {
                    return Err(Error::InvalidParameter("batch rows need wav_a,wav_b".into()));
                };
                pairs.push((base.join(a.trim()), base.join(b.trim())));
            }
            pairs
        }
        None => vec![(args.wav_a.clone().unwrap(), args.wav_b.clone().unwrap())],
    };

    let mut all_ok = true;
    let mut measurements = Vec::new();
    let mut rows = Vec::new();
    for (a, b) in &pairs {
        let (m, frame, ok) = measure_pair(a, b, args)?;
        all_ok &= ok;
        rows.push(serde_json::json!({
            "wav_a": a, "wav_b": b, "lag": m, "frame_level": frame,
        }));
        if !args.json {
            let prefix = if pairs.len() > 1 { format!("{} vs {}: ", a.display(), b.display()) } else { String::new() };
            println!("{prefix}lag {} samples ({:.1} µs)", m.lag_samples, m.lag_micros());
            if let Some(f) = frame {
                println!("{prefix}frame-level: {f}");
            }
        }
        measurements.push(m);
    }
    if pairs.len() > 1 {
        let lags: Vec<i64> = measurements.iter().map(|m| m.lag_samples).collect();
        let s = summarize_lags(&lags, measurements[0].sample_rate)?;
        if args.json {
            println!("{}", to_json(&serde_json::json!({ "pairs": rows, "summary": s }))?);
        } else {
            print_lag_summary(&s);
        }
    } else if args.json {
        println!("{}", to_json(&rows[0])?);
    }
    Ok(if all_ok { Outcome::Pass } else { Outcome::VerdictFailed })
}

fn print_lag_summary(s: &multisync::analysis::LagSummary) {
    println!(
        "mean {:.3} samples ({:.2} µs), median {:.1} samples ({:.2} µs) over {} lags",
        s.mean_samples,
        s.mean_micros,
        s.median_samples,
        s.median_micros,
        s.lags_samples.len()
    );
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::InvalidParameter(e.to_string()))
}

fn events(cmd: &EventsCommand) -> Result<Outcome> {
    match cmd {
        EventsCommand::Generate { n, seed, out_csv } => {
            check_output(out_csv)?;
            let s = generate_schedule(*n, *seed)?;
            s.write_csv(out_csv)?;
            let gaps: Vec<String> = s.gaps().iter().map(|g| format!("{g}")).collect();
            println!("{} events, gaps [{}] s", s.len(), gaps.join(", "));
        }
        EventsCommand::Render { sample_rate, beep_duration, format, schedule_csv, out_wav } => {
            check_input(schedule_csv)?;
            check_output(out_wav)?;
            let s = EventSchedule::read_csv(schedule_csv, *beep_duration)?;
            let track = render_beep_track(&s, *sample_rate)?;
            multisync::audio::write_wav(out_wav, &track, (*format).into())?;
            println!("rendered {} events, {} samples at {} Hz", s.len(), track.len(), sample_rate);
        }
        EventsCommand::Detect { threshold, min_gap, in_wav, out_csv } => {
            check_input(in_wav)?;
            check_output(out_csv)?;
            let sig = read_wav(in_wav)?;
            let b = detect_event_boundaries(&sig, *threshold, *min_gap)?;
            b.write_csv(out_csv)?;
            println!("detected {} events at {} Hz", b.len(), b.sample_rate);
        }
        EventsCommand::Align {
            boundaries_a,
            boundaries_b,
            schedule,
            rate_a,
            rate_b,
            beep_duration,
            out,
            events_csv,
        } => {
            for p in [boundaries_a, boundaries_b, schedule] {
                check_input(p)?;
            }
            for p in out.iter().chain(events_csv) {
                check_output(p)?;
            }
            let sched = EventSchedule::read_csv(schedule, *beep_duration)?;
            let da = interevent_durations(&EventBoundaries::read_csv(boundaries_a, *rate_a)?)?;
            let db = interevent_durations(&EventBoundaries::read_csv(boundaries_b, *rate_b)?)?;
            let report = crossmodal_offset_report(&da, &db, &sched.ground_truth_durations())?;
            let json = to_json(&report)?;
            match out {
                Some(p) => {
                    std::fs::write(p, json + "\n")?;
                    println!(
                        "conservative bound {:.3} ms: 40 ms {}, 80 ms {}, 1000 ms {}",
                        report.conservative_bound * 1e3,
                        pass_fail(report.verdicts.within_behavioral_window),
                        pass_fail(report.verdicts.within_perception_skew),
                        pass_fail(report.verdicts.within_upper_window),
                    );
                }
                None => println!("{json}"),
            }
            if let Some(p) = events_csv {
                report.write_event_csv(p)?;
            }
            if !report.verdicts.all_pass() {
                return Ok(Outcome::VerdictFailed);
            }
        }
    }
    Ok(Outcome::Pass)
}

fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    if a.print_default_config {
        print!("{}", TopologyConfig::default().to_toml_string());
        return Ok(Outcome::Pass);
    }
    let (Some(config), Some(out_dir)) = (&a.config, &a.out_dir) else {
        unreachable!("clap enforces both paths")
    };
    check_input(config)?;
    let mut cfg = TopologyConfig::from_file(config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let trace = run_simulation(&cfg)?;
    let latency = measure_sim_latency(&trace)?;
    trace.write_csv(out_dir.join("trace.csv"))?;
    trace.write_sync_log_csv(out_dir.join("sync_log.csv"))?;
    latency.write_json(out_dir.join("latency.json"))?;
    println!(
        "{} packets, wearable mean |offset| {:.3} ms, camera mean |offset| {:.3} ms",
        trace.records.len(),
        latency.wearable.mean_abs * 1e3,
        latency.camera.mean_abs * 1e3
    );
    println!(
        "max crossmodal offset {:.1} ms: {}",
        latency.crossmodal.max_abs * 1e3,
        pass_fail(latency.verdicts.within_behavioral_window)
    );
    Ok(if latency.verdicts.all_pass() { Outcome::Pass } else { Outcome::VerdictFailed })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ltc(LtcCommand::Encode(a)) => ltc_encode(a),
        Command::Ltc(LtcCommand::Decode(a)) => ltc_decode(a),
        Command::Lag(a) => lag(a),
        Command::Events(c) => events(c),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::VerdictFailed) if cli.strict => {
            eprintln!("tolerance check failed (--strict)");
            ExitCode::from(1)
        }
        Ok(Outcome::VerdictFailed) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
