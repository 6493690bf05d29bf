mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gamma_saliency::Error;

/// Gamma-kernel saliency, foveation, fixation traces and evaluation.
#[derive(Parser, Debug)]
#[command(name = "gsal", version)]
pub struct Cli {
    /// Root for relative output paths.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,

    /// Worker threads for batch commands (default: all cores).
    #[arg(long, global = true, env = "GSAL_JOBS")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bottom-up saliency map for one image or every image in a manifest.
    Saliency(SaliencyArgs),
    /// Foveated rendering around a fixation point.
    Foveate(FoveateArgs),
    /// Fixation trace, scan frames and an annotated image.
    Scanpath(ScanpathArgs),
    /// Class-conditioned saliency from feature-map tensors.
    #[command(subcommand)]
    Topdown(TopdownCommand),
    /// Score saliency maps against fixation data.
    Eval(EvalArgs),
    /// Time the bottom-up pipeline.
    Bench(BenchArgs),
    /// Write the default configuration.
    Config(ConfigArgs),
}

#[derive(Args, Debug)]
pub struct SaliencyArgs {
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub input: Option<PathBuf>,
    /// Batch mode: one map and heatmap per entry, named by image id.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, alias = "config")]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out_map: Option<PathBuf>,
    #[arg(long)]
    pub out_png: Option<PathBuf>,
    /// Blend the heatmap over the working image with this weight.
    #[arg(long)]
    pub overlay: Option<f64>,
}

#[derive(Args, Debug)]
pub struct FoveateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub x: usize,
    #[arg(long)]
    pub y: usize,
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScanpathArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "trace.tsv")]
    pub out_trace: PathBuf,
    #[arg(long)]
    pub out_frames: Option<PathBuf>,
    #[arg(long)]
    pub annotated_png: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum TopdownCommand {
    /// Learn per-class feature-map weights from labeled boxes.
    Train(TrainArgs),
    /// Fixation trace on the fused bottom-up and top-down map.
    Search(SearchArgs),
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Manifest with boxes (image pixels) and a class per entry.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory holding `<image id>.gsal` feature tensors.
    #[arg(long)]
    pub features_dir: PathBuf,
    #[arg(long, default_value = "model.tsv")]
    pub out_model: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub class: String,
    /// Image pixels per feature cell (default: image width / feature width).
    #[arg(long)]
    pub spatial_scale: Option<f64>,
    /// Target box `x0,y0,x1,y1` in image pixels; reports saccades to target.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "search_trace.tsv")]
    pub out_trace: PathBuf,
    #[arg(long)]
    pub annotated_png: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory holding `<image id>.gsal` saliency maps.
    #[arg(long)]
    pub maps_dir: PathBuf,
    /// Manifest with a fixation file per entry.
    #[arg(long)]
    pub fixations: PathBuf,
    #[arg(long, default_value = "judd,borji,sim,cc,nss")]
    pub metrics: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "eval.csv")]
    pub out_csv: PathBuf,
    /// Writes one Judd ROC curve per image.
    #[arg(long)]
    pub out_roc: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, required_unless_present = "manifest", conflicts_with = "manifest")]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long, default_value = "bench.csv")]
    pub out_csv: PathBuf,
}

#[derive(Args, Debug)]
pub struct ConfigArgs {
    #[arg(long, default_value = "gsal.conf")]
    pub out: PathBuf,
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_MISSING: u8 = 3;
pub const EXIT_INVALID: u8 = 4;
pub const EXIT_FORMAT: u8 = 5;

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(e) = err.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return 1;
    };
    match e {
        Error::NotFound(_) | Error::ManifestMissing { .. } => EXIT_MISSING,
        Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING,
        Error::Invalid(_)
        | Error::KernelSupport { .. }
        | Error::KernelTooLarge { .. }
        | Error::ShapeMismatch { .. }
        | Error::UnknownClass(_) => EXIT_INVALID,
        Error::Parse { .. } | Error::Tensor(_) | Error::Image(_) => EXIT_FORMAT,
        Error::Io { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gsal: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
