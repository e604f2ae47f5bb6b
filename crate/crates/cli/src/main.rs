use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use piv_core::colormap::{render_colormap, ColorScale};
use piv_core::config::PipelineConfig;
use piv_core::correlate::Method;
use piv_core::csv_io::{export_scalars, export_vectors, import_scalars, import_vectors};
use piv_core::derive::{derive_quantity, Calibration};
use piv_core::image_io::{save_pgm, BitDepth};
use piv_core::make_grid;
use piv_core::pipeline::{run_pipeline, PipelineError, RunOptions, Stage};
use piv_core::synth::{gen_pair, FlowSpec, SynthParams};
use piv_core::{PivError, Quantity};

#[derive(Parser)]
#[command(name = "piv", version, about = "Particle image velocimetry pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on a frame pair described by a config file.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic frame pair with its ground-truth field.
    Synth(SynthArgs),
    /// Recompute scalar fields from a vector CSV.
    Derive(DeriveArgs),
    /// Colormap a scalar CSV into a PPM image.
    Render(RenderArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dcc,
    Fft,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dcc => Method::Dcc,
            MethodArg::Fft => Method::Fft,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "PIV_THREADS", default_value_t = 0)]
    threads: usize,
    /// Forces every pass onto one correlation backend.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowKind {
    Uniform,
    RigidRotation,
    Rankine,
    Shear,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "uniform")]
    flow: FlowKind,
    #[arg(long, default_value_t = 3.7, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, default_value_t = -2.1, allow_hyphen_values = true)]
    v: f64,
    /// Rotation in radians per frame.
    #[arg(long, default_value_t = 0.02, allow_hyphen_values = true)]
    omega: f64,
    /// Rankine circulation in px^2 per frame.
    #[arg(long, default_value_t = 2000.0, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, default_value_t = 40.0)]
    core_radius: f64,
    #[arg(long, default_value_t = 0.02, allow_hyphen_values = true)]
    rate: f64,
    /// Flow center; defaults to the frame center.
    #[arg(long)]
    cx: Option<f64>,
    #[arg(long)]
    cy: Option<f64>,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    /// Particles per pixel.
    #[arg(long, default_value_t = 0.03)]
    density: f64,
    #[arg(long, default_value_t = 3.0)]
    diameter: f64,
    #[arg(long, default_value_t = 0.8)]
    peak: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Grid of the ground-truth CSV.
    #[arg(long, default_value_t = 32)]
    window: usize,
    #[arg(long, default_value_t = 16)]
    step: usize,
    #[arg(long, default_value_t = 8, value_parser = parse_bits)]
    bits: u8,
}

fn parse_bits(s: &str) -> Result<u8, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        _ => Err(format!("bit depth must be 8 or 16, got {s}")),
    }
}

#[derive(Args)]
struct DeriveArgs {
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "vorticity,magnitude", value_parser = parse_quantity)]
    fields: Vec<Quantity>,
    #[arg(long, default_value_t = 1.0)]
    units_per_pixel: f64,
    /// Time between the frames.
    #[arg(long, default_value_t = 1.0)]
    frame_interval: f64,
    /// Pixels per node side in the colormaps; 0 skips them.
    #[arg(long, default_value_t = 1)]
    cell: usize,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    scalars: PathBuf,
    #[arg(long, value_parser = parse_quantity, default_value = "vorticity")]
    quantity: Quantity,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    cell: usize,
}

fn parse_quantity(s: &str) -> Result<Quantity, String> {
    Quantity::parse(s).ok_or_else(|| format!("unknown quantity {s}"))
}

type CliResult<T> = Result<T, PipelineError>;

fn at<T>(r: piv_core::Result<T>, stage: Stage) -> CliResult<T> {
    r.map_err(|source| PipelineError { stage, source })
}

fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    let mut cfg = at(PipelineConfig::load(&args.config), Stage::Config)?;
    if let Some(out) = args.out {
        cfg.output.dir = out;
    }
    let opts = RunOptions {
        threads: args.threads,
        method: args.method.map(Method::from),
    };
    let report = run_pipeline(&cfg, &opts)?;
    eprintln!(
        "{}x{} nodes, {} measured, {} interpolated, mean ({:.4}, {:.4}) px",
        report.nx, report.ny, report.measured, report.interpolated, report.mean_u, report.mean_v
    );
    Ok(())
}

fn synth(args: SynthArgs) -> CliResult<()> {
    let cx = args.cx.unwrap_or(args.width as f64 / 2.0);
    let cy = args.cy.unwrap_or(args.height as f64 / 2.0);
    let flow = match args.flow {
        FlowKind::Uniform => FlowSpec::Uniform {
            u: args.u,
            v: args.v,
        },
        FlowKind::RigidRotation => FlowSpec::RigidRotation {
            cx,
            cy,
            omega: args.omega,
        },
        FlowKind::Rankine => FlowSpec::Rankine {
            cx,
            cy,
            gamma: args.gamma,
            core_radius: args.core_radius,
        },
        FlowKind::Shear => FlowSpec::Shear { rate: args.rate },
    };
    let params = SynthParams {
        width: args.width,
        height: args.height,
        particle_count: (args.density * (args.width * args.height) as f64).round() as usize,
        particle_diameter: args.diameter,
        peak_intensity: args.peak,
        noise_sigma: args.noise,
        seed: args.seed,
    };
    let grid = at(
        make_grid(args.width, args.height, args.window, args.step),
        Stage::Grid,
    )?;
    let pair = at(gen_pair(&flow, &params), Stage::Config)?;
    let depth = if args.bits == 16 {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    };
    let out = &args.out;
    at(
        std::fs::create_dir_all(out).map_err(|e| io_error(out, e)),
        Stage::Write,
    )?;
    at(
        save_pgm(&pair.frame_a, out.join("frame_a.pgm"), depth),
        Stage::Write,
    )?;
    at(
        save_pgm(&pair.frame_b, out.join("frame_b.pgm"), depth),
        Stage::Write,
    )?;
    at(
        export_vectors(&pair.ground_truth(grid), out.join("truth.csv")),
        Stage::Write,
    )?;
    let mut cfg = PipelineConfig::for_frames("frame_a.pgm", "frame_b.pgm");
    cfg.output.dir = PathBuf::from("out");
    let path = out.join("piv.toml");
    at(
        std::fs::write(&path, cfg.to_toml_string()).map_err(|e| io_error(&path, e)),
        Stage::Write,
    )
}

fn io_error(path: &Path, e: std::io::Error) -> PivError {
    PivError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn derive(args: DeriveArgs) -> CliResult<()> {
    let field = at(import_vectors(&args.vectors), Stage::Load)?;
    let cal = Calibration {
        units_per_pixel: args.units_per_pixel,
        frame_interval: args.frame_interval,
    };
    let out = &args.out;
    at(
        std::fs::create_dir_all(out).map_err(|e| io_error(out, e)),
        Stage::Write,
    )?;
    for &q in &args.fields {
        let s = at(derive_quantity(&field, q, &cal), Stage::Derive)?;
        let name = q.as_str();
        at(
            export_scalars(&s, out.join(format!("{name}.csv"))),
            Stage::Write,
        )?;
        if args.cell > 0 {
            let scale = ColorScale::for_field(&s);
            at(
                render_colormap(&s, &scale, out.join(format!("{name}.ppm")), args.cell),
                Stage::Write,
            )?;
        }
    }
    Ok(())
}

fn render(args: RenderArgs) -> CliResult<()> {
    let s = at(import_scalars(&args.scalars, args.quantity), Stage::Load)?;
    let scale = ColorScale::for_field(&s);
    at(
        render_colormap(&s, &scale, &args.out, args.cell),
        Stage::Write,
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Synth(a) => synth(a),
        Command::Derive(a) => derive(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("piv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
