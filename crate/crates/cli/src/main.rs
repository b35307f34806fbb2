//! `gms` command-line tool: gradient, segmentation, baseline segmentation,
//! truth masks, verification and synthetic scenes, all over GMS1/GMSV files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use gms::baseline::{ccs_cloud_mask, ccs_segment, CcsConfig, DEFAULT_LEVELS, DEFAULT_MIN_AREA};
use gms::codec::{read_cloud_mask, read_raster_file, read_volume_file, write_raster_file, write_volume_file};
use gms::markers::{MarkerConfig, DEFAULT_BINS, DEFAULT_MIN_SEED_AREA};
use gms::morphology::multispectral_gradient;
use gms::pipeline::{segment_with_bt, GmsConfig};
use gms::synth::{generate_scene, Preset, SceneSpec};
use gms::truth::{derive_truth_mask, HydrometeorVolume, DEFAULT_TRUTH_THRESHOLD};
use gms::watershed::{RegionStats, DEFAULT_CLEAR_SKY_CUTOFF};
use gms::{contingency, verify, GradientConfig, Image};

const EXIT_IO: u8 = 2;
const EXIT_PRECONDITION: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "gms", version, about = "Gradient-based cloud segmentation of brightness temperature rasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the multiscale multispectral gradient as a one-channel raster.
    Gradient(GradientArgs),
    /// Gradient, Otsu markers, watershed and cloud classification.
    Segment(SegmentArgs),
    /// Threshold-based seeded region growing baseline.
    Ccs(CcsArgs),
    /// Cloud mask from a hydrometeor volume.
    TruthMask(TruthArgs),
    /// Compare a predicted mask against a truth mask; writes a JSON report.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic scene and its hydrometeor volume.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct GradientOpts {
    /// Number of structuring-element scales.
    #[arg(long, default_value_t = GradientConfig::default().n_scales, value_parser = parse_positive)]
    scales: usize,
    /// Comma-separated channel ids; all channels when omitted.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<String>>,
    /// Divide each channel gradient by its maximum before summing.
    #[arg(long)]
    normalize_channels: bool,
}

impl GradientOpts {
    fn config(&self) -> GradientConfig {
        GradientConfig { n_scales: self.scales, normalize_channels: self.normalize_channels }
    }

    fn select(&self, image: Image) -> Result<Image, Failure> {
        match &self.channels {
            None => Ok(image),
            Some(ids) => {
                let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
                image.select(&ids).map_err(|e| Failure::Usage(e.to_string()))
            }
        }
    }
}

#[derive(Args, Debug)]
struct GradientArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    gradient: GradientOpts,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output segment map (GMS1, u32).
    #[arg(long)]
    segments: Option<PathBuf>,
    /// Output cloud mask (GMS1, u8).
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Output per-region statistics (CSV).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Channel holding brightness temperature in kelvin.
    #[arg(long, default_value = "ir_window")]
    bt_channel: String,
    #[command(flatten)]
    gradient: GradientOpts,
    /// Histogram bins for the Otsu threshold.
    #[arg(long, default_value_t = DEFAULT_BINS, value_parser = parse_bins)]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_MIN_SEED_AREA, value_parser = parse_positive)]
    min_seed_area: usize,
    /// Merge regions smaller than this many pixels; 0 disables merging.
    #[arg(long, default_value_t = 0)]
    min_area: usize,
    /// Regions with mean brightness temperature below this are cloud (K).
    #[arg(long, default_value_t = DEFAULT_CLEAR_SKY_CUTOFF, value_parser = parse_finite)]
    clear_sky_cutoff: f64,
}

#[derive(Args, Debug)]
struct CcsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    segments: Option<PathBuf>,
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Strictly ascending comma-separated thresholds in kelvin.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_LEVELS, value_parser = parse_finite)]
    levels: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_MIN_AREA, value_parser = parse_positive)]
    min_area: usize,
    #[arg(long, default_value = "ir_window")]
    bt_channel: String,
}

#[derive(Args, Debug)]
struct TruthArgs {
    /// Hydrometeor volume (GMSV).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Mixing ratio above which a column is cloudy (kg/kg).
    #[arg(long, default_value_t = DEFAULT_TRUTH_THRESHOLD, value_parser = parse_non_negative)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    prediction: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec", value_parser = parse_preset)]
    preset: Option<Preset>,
    /// Scene description in `key = value` form.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Noise seed; overrides the seed of a spec file.
    #[arg(long)]
    seed: Option<u64>,
    /// Noise standard deviation in kelvin; overrides the spec file.
    #[arg(long, value_parser = parse_non_negative)]
    noise_sigma: Option<f64>,
    /// Preset grid width.
    #[arg(long, conflicts_with = "spec", value_parser = parse_positive)]
    width: Option<usize>,
    /// Preset grid height.
    #[arg(long, conflicts_with = "spec", value_parser = parse_positive)]
    height: Option<usize>,
    /// Scene raster (GMS1, f32).
    #[arg(long)]
    output: PathBuf,
    /// Hydrometeor volume (GMSV).
    #[arg(long)]
    volume: Option<PathBuf>,
    /// Also write the resolved scene description.
    #[arg(long)]
    emit_spec: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(gms::Error),
    Output(PathBuf, String),
}

impl From<gms::Error> for Failure {
    fn from(e: gms::Error) -> Self {
        match e {
            gms::Error::InvalidParameter(msg) => Failure::Usage(msg),
            other => Failure::Core(other),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Core(e) if e.is_precondition() => EXIT_PRECONDITION,
            Failure::Core(_) | Failure::Output(..) => EXIT_IO,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(msg) => format!("usage: {msg}"),
            Failure::Core(e) => e.to_string(),
            Failure::Output(path, msg) => format!("{}: {msg}", path.display()),
        }
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_bins(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 2 => Ok(v),
        Ok(_) => Err("must be at least 2".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err("must be finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v = parse_finite(s)?;
    if v < 0.0 {
        return Err("must not be negative".into());
    }
    Ok(v)
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    Preset::from_str(s).map_err(|_| {
        let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset {s:?}; expected one of {}", names.join(", "))
    })
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::Output(path.to_path_buf(), e.to_string()))
}

fn write_stats(path: &Path, stats: &[RegionStats]) -> Result<(), Failure> {
    let fail = |e: csv::Error| Failure::Output(path.to_path_buf(), e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(["label", "area", "mean_bt", "min_bt", "mean_gradient", "is_cloud"]).map_err(fail)?;
    for s in stats {
        w.write_record([
            s.label.to_string(),
            s.area.to_string(),
            s.mean_bt.to_string(),
            s.min_bt.to_string(),
            s.mean_gradient.to_string(),
            s.is_cloud.to_string(),
        ])
        .map_err(fail)?;
    }
    w.flush().map_err(|e| Failure::Output(path.to_path_buf(), e.to_string()))
}

fn cmd_gradient(args: GradientArgs) -> Result<(), Failure> {
    let image = args.gradient.select(read_raster_file::<f64>(&args.input)?)?;
    let field = multispectral_gradient(&image, &args.gradient.config())?;
    let out = Image::single("gradient", field.into_raster())?;
    write_raster_file(&out, &args.output)?;
    Ok(())
}

fn cmd_segment(args: SegmentArgs) -> Result<(), Failure> {
    let image = read_raster_file::<f64>(&args.input)?;
    let bt = image
        .channel(&args.bt_channel)
        .ok_or_else(|| Failure::Usage(format!("input has no channel {:?}", args.bt_channel)))?
        .clone();
    let selected = args.gradient.select(image)?;
    let cfg = GmsConfig {
        gradient: args.gradient.config(),
        markers: MarkerConfig { bins: args.bins, min_seed_area: args.min_seed_area },
        min_area: args.min_area,
        clear_sky_cutoff: args.clear_sky_cutoff,
    };
    let out = segment_with_bt(&selected, &bt, &cfg)?;
    if let Some(path) = &args.segments {
        write_raster_file(&out.segments, path)?;
    }
    if let Some(path) = &args.mask {
        write_raster_file(&out.mask, path)?;
    }
    if let Some(path) = &args.stats {
        write_stats(path, &out.stats)?;
    }
    Ok(())
}

fn cmd_ccs(args: CcsArgs) -> Result<(), Failure> {
    let image = read_raster_file::<f64>(&args.input)?;
    let bt = image
        .channel(&args.bt_channel)
        .ok_or_else(|| Failure::Usage(format!("input has no channel {:?}", args.bt_channel)))?;
    let cfg = CcsConfig::new(args.levels, args.min_area)?;
    let seg = ccs_segment(bt, &cfg)?;
    if let Some(path) = &args.segments {
        write_raster_file(&seg, path)?;
    }
    if let Some(path) = &args.mask {
        write_raster_file(&ccs_cloud_mask(&seg), path)?;
    }
    Ok(())
}

fn cmd_truth_mask(args: TruthArgs) -> Result<(), Failure> {
    let vol = HydrometeorVolume::<f64>::from_gms_volume(&read_volume_file(&args.input)?)
        .map_err(|e| Failure::Core(gms::Error::Format { path: args.input.clone(), source: into_format(e) }))?;
    write_raster_file(&derive_truth_mask(&vol, args.threshold), &args.output)?;
    Ok(())
}

fn into_format(e: gms::Error) -> gms::FormatError {
    match e {
        gms::Error::Decode(f) => f,
        other => gms::FormatError::InvalidPayload { kind: "volume", reason: other.to_string() },
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let pred = read_cloud_mask(&args.prediction)?;
    let truth = read_cloud_mask(&args.truth)?;
    let report = verify(&contingency(&pred, &truth)?)?;
    let mut json = report.to_json();
    json.push('\n');
    match &args.output {
        Some(path) => write_bytes(path, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(preset), _) => {
            let size = gms::synth::DEFAULT_PRESET_SIZE;
            preset.spec(args.width.unwrap_or(size), args.height.unwrap_or(size), args.seed.unwrap_or(0))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|source| Failure::Core(gms::Error::Io { path: path.clone(), source }))?;
            SceneSpec::parse(&text).map_err(|e| Failure::Output(path.clone(), e.to_string()))?
        }
        (None, None) => return Err(Failure::Usage("one of --preset or --spec is required".into())),
    };
    if let Some(seed) = args.seed {
        spec.rng_seed = seed;
    }
    if let Some(sigma) = args.noise_sigma {
        spec.noise_sigma = sigma;
    }
    let (image, volume) = generate_scene::<f64>(&spec)?;
    write_raster_file(&image, &args.output)?;
    if let Some(path) = &args.volume {
        write_volume_file(&volume.to_gms_volume()?, path)?;
    }
    if let Some(path) = &args.emit_spec {
        write_bytes(path, spec.to_text().as_bytes())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gradient(a) => cmd_gradient(a),
        Command::Segment(a) => cmd_segment(a),
        Command::Ccs(a) => cmd_ccs(a),
        Command::TruthMask(a) => cmd_truth_mask(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gms: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
