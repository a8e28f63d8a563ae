use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use polardem::bench::{
    run_experiment, synth_color_scene, synth_scene, ExperimentConfig, SceneKind, Stokes, SynthParams,
};
use polardem::eari::guide_image;
use polardem::io::{read_image, write_image, write_rgb, BitDepth};
use polardem::polar::{aop, dop, stokes_from_stack, StokesMaps};
use polardem::viz::{legend, render_aop_dop, VizMode};
use polardem::{
    demosaick_cpfa_method, demosaick_mpfa, mosaic_cpfa, mosaic_mpfa, Angle, BayerMethod, Color, ColorPolarizationStack,
    CpfaMethod, CpfaPattern, MethodParams, MpfaMethod, MpfaPattern, PlaneImage, PolarizationStack, Smoothing,
};

#[derive(Parser)]
#[command(name = "polardem", version, about = "Polarization filter array demosaicking")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Demosaick monochrome polarization mosaics.
    DemosaickMpfa(MpfaArgs),
    /// Demosaick color polarization (quad-Bayer) mosaics.
    DemosaickCpfa(CpfaArgs),
    /// Run a benchmark experiment from a JSON or TOML config.
    Bench(BenchArgs),
    /// Generate a synthetic ground-truth scene and its mosaic.
    Synth(SynthArgs),
    /// Compute Stokes, DoP and AoP images from four orientation images.
    Stokes(StackArgs),
    /// Render the AoP-DoP false-color image of four orientation images.
    Viz(VizArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON or TOML file supplying pattern and method parameters; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bit depth of the input codes.
    #[arg(long, default_value_t = 10)]
    bit_depth: u8,
    /// Bit depth of the written images.
    #[arg(long, default_value_t = 16)]
    out_bit_depth: u8,
    #[arg(short, long, default_value = "out")]
    output: PathBuf,
    /// Guided filter window radius.
    #[arg(long)]
    radius: Option<usize>,
    /// Guided filter regularization.
    #[arg(long)]
    eps_gf: Option<f64>,
    /// Offset in the directional weights.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Smoothing footprint of the directional differences: onesided or full.
    #[arg(long)]
    smoothing: Option<Smoothing>,
    /// Also write Stokes, DoP, AoP and AoP-DoP images.
    #[arg(long)]
    products: bool,
    #[arg(long = "viz", default_value = "flat")]
    viz_mode: VizMode,
}

#[derive(Args)]
struct MpfaArgs {
    /// Raw mosaic images.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// bilinear, bicubic, eari or non-edge-aware.
    #[arg(long, default_value = "eari")]
    method: MpfaMethod,
    /// 2x2 angle layout, e.g. "[[90,45],[135,0]]".
    #[arg(long)]
    pattern: Option<MpfaPattern>,
    /// Write the EARI guide image.
    #[arg(long)]
    dump_guide: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct CpfaArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// bilinear12 or pipeline-<mpfa method>.
    #[arg(long, default_value = "pipeline-eari")]
    method: CpfaMethod,
    /// JSON file holding a 4x4 table of tokens such as "R90".
    #[arg(long)]
    pattern_file: Option<PathBuf>,
    /// Color demosaicker of the pipeline: bilinear or gradient.
    #[arg(long)]
    color_method: Option<BayerMethod>,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct BenchArgs {
    config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Overrides the method list (comma separated).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    save_images: bool,
    #[arg(long)]
    save_viz: bool,
    #[arg(long = "viz")]
    viz_mode: Option<VizMode>,
}

#[derive(Args)]
struct SynthArgs {
    /// constant, ramp, step, disk or sinusoid.
    #[arg(long, default_value = "disk")]
    kind: SceneKind,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Primary Stokes state "S0,S1,S2".
    #[arg(long, value_parser = parse_stokes, default_value = "1,0.3,0.2")]
    primary: Stokes,
    /// Secondary Stokes state "S0,S1,S2".
    #[arg(long, value_parser = parse_stokes, default_value = "0.6,-0.2,0.1")]
    secondary: Stokes,
    /// Step edge column; defaults to the middle.
    #[arg(long)]
    edge_column: Option<f64>,
    /// Disk radius; defaults to a quarter of the smaller side.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, default_value_t = 16.0)]
    period: f64,
    #[arg(long, default_value_t = 0.0)]
    orientation: f64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Twelve-plane scene and quad-Bayer mosaic.
    #[arg(long)]
    color: bool,
    #[arg(long)]
    pattern: Option<MpfaPattern>,
    #[arg(long, default_value_t = 10)]
    bit_depth: u8,
    #[arg(long, default_value = "scene")]
    id: String,
    #[arg(short, long, default_value = "synth")]
    output: PathBuf,
}

#[derive(Args)]
struct StackArgs {
    /// Images at 0°, 45°, 90° and 135°.
    #[arg(num_args = 4, required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    bit_depth: u8,
    #[arg(long, default_value_t = 16)]
    out_bit_depth: u8,
    #[arg(long = "viz", default_value = "flat")]
    viz_mode: VizMode,
    #[arg(short, long, default_value = "out")]
    output: PathBuf,
}

#[derive(Args)]
struct VizArgs {
    /// Images at 0°, 45°, 90° and 135°.
    #[arg(num_args = 4, required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    bit_depth: u8,
    #[arg(long = "viz", default_value = "flat")]
    viz_mode: VizMode,
    #[arg(short, long, default_value = "aop_dop.png")]
    output: PathBuf,
    /// Also write a color-wheel legend.
    #[arg(long)]
    legend: Option<PathBuf>,
}

fn parse_stokes(s: &str) -> std::result::Result<Stokes, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [s0, s1, s2] => Ok(Stokes(s0, s1, s2)),
        _ => Err(format!("expected S0,S1,S2, got {s:?}")),
    }
}

/// Error chain joined with ": ", skipping causes already spelled out by
/// their parent's message.
fn describe(e: &anyhow::Error) -> String {
    let mut out = e.to_string();
    for cause in e.chain().skip(1) {
        let c = cause.to_string();
        if !out.contains(&c) {
            out = format!("{out}: {c}");
        }
    }
    out
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "image".into())
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

impl CommonArgs {
    /// Config file values with flag overrides applied.
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        let p = &mut cfg.params;
        if let Some(r) = self.radius {
            p.guided_filter.radius = r;
        }
        if let Some(e) = self.eps_gf {
            p.guided_filter.eps = e;
        }
        if let Some(e) = self.epsilon {
            p.eari.epsilon = e;
        }
        if let Some(s) = self.smoothing {
            p.eari.smoothing = s;
        }
        p.eari.validate()?;
        p.guided_filter.validate()?;
        Ok(cfg)
    }

    fn depths(&self) -> Result<(BitDepth, BitDepth)> {
        Ok((BitDepth::new(self.bit_depth)?, BitDepth::new(self.out_bit_depth)?))
    }
}

/// Maps Stokes products into [0, 1] for storage: S0/2, (S1+1)/2, (S2+1)/2,
/// DoP, and (AoP+90)/180.
fn write_products(stokes: &StokesMaps, prefix: &Path, depth: BitDepth, mode: VizMode) -> Result<()> {
    let name = |suffix: &str| PathBuf::from(format!("{}_{suffix}.png", prefix.display()));
    write_image(&stokes.s0.map(|v| v / 2.0), name("S0"), depth)?;
    write_image(&stokes.s1.map(|v| (v + 1.0) / 2.0), name("S1"), depth)?;
    write_image(&stokes.s2.map(|v| (v + 1.0) / 2.0), name("S2"), depth)?;
    write_image(&dop(stokes), name("DoP"), depth)?;
    write_image(&aop(stokes).map(|v| (v + 90.0) / 180.0), name("AoP"), depth)?;
    let rgb = render_aop_dop(stokes, mode);
    write_rgb([&rgb[0], &rgb[1], &rgb[2]], name("aop_dop"), BitDepth::EIGHT)?;
    Ok(())
}

/// Runs `f` on every input, logging failures. Returns the failure count.
fn for_each_input(inputs: &[PathBuf], mut f: impl FnMut(&Path) -> Result<()>) -> usize {
    let mut failed = 0;
    for input in inputs {
        match f(input) {
            Ok(()) => info!("{}: done", input.display()),
            Err(e) => {
                let msg = describe(&e);
                let label = input.display().to_string();
                if msg.starts_with(&label) {
                    eprintln!("error: {msg}");
                } else {
                    eprintln!("error: {label}: {msg}");
                }
                failed += 1;
            }
        }
    }
    failed
}

fn cmd_mpfa(args: &MpfaArgs) -> Result<usize> {
    let cfg = args.common.resolve()?;
    let pattern = args.pattern.unwrap_or(cfg.pattern);
    let (in_depth, out_depth) = args.common.depths()?;
    ensure_dir(&args.common.output)?;
    Ok(for_each_input(&args.inputs, |input| {
        let raw = read_image(input, in_depth)?;
        let stack = demosaick_mpfa(&raw, &pattern, args.method, &cfg.params)?;
        let prefix = args.common.output.join(stem(input));
        for a in Angle::ALL {
            write_image(stack.plane(a), format!("{}_I{a}.png", prefix.display()), out_depth)?;
        }
        if args.dump_guide {
            let g = guide_image(&raw, &cfg.params.eari)?;
            write_image(&g, format!("{}_guide.png", prefix.display()), out_depth)?;
        }
        if args.common.products {
            write_products(&stokes_from_stack(&stack), &prefix, out_depth, args.common.viz_mode)?;
        }
        Ok(())
    }))
}

fn cmd_cpfa(args: &CpfaArgs) -> Result<usize> {
    let cfg = args.common.resolve()?;
    let pattern: CpfaPattern = match &args.pattern_file {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => cfg.cpfa_pattern,
    };
    let params = MethodParams {
        color_method: args.color_method.unwrap_or(cfg.params.color_method),
        ..cfg.params
    };
    let (in_depth, out_depth) = args.common.depths()?;
    ensure_dir(&args.common.output)?;
    Ok(for_each_input(&args.inputs, |input| {
        let raw = read_image(input, in_depth)?;
        let out = demosaick_cpfa_method(&raw, &pattern, args.method, &params)?;
        let prefix = args.common.output.join(stem(input));
        for c in Color::ALL {
            for a in Angle::ALL {
                let p = format!("{}_{}{a}.png", prefix.display(), c.letter());
                write_image(out.plane(c, a), p, out_depth)?;
            }
        }
        if args.common.products {
            for c in Color::ALL {
                let p = PathBuf::from(format!("{}_{}", prefix.display(), c.letter()));
                write_products(&stokes_from_stack(out.channel(c)), &p, out_depth, args.common.viz_mode)?;
            }
        }
        Ok(())
    }))
}

fn cmd_bench(args: &BenchArgs) -> Result<usize> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(o) = &args.output {
        cfg.output_dir = Some(o.clone());
    }
    if cfg.output_dir.is_none() {
        cfg.output_dir = Some(PathBuf::from("bench_out"));
    }
    if let Some(m) = &args.methods {
        cfg.methods = m.clone();
    }
    if let Some(d) = &args.dataset {
        cfg.dataset = Some(d.clone());
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.save_images |= args.save_images;
    cfg.save_viz |= args.save_viz;
    if let Some(v) = args.viz_mode {
        cfg.viz_mode = v;
    }
    let report = run_experiment(&cfg)?;
    print!("{}", report.average_csv()?);
    for f in &report.failures {
        eprintln!("error: scene {}: {}", f.id, f.reason);
    }
    if let Some(dir) = &cfg.output_dir {
        info!("reports written to {}", dir.display());
    }
    Ok(report.failures.len())
}

fn cmd_synth(args: &SynthArgs) -> Result<usize> {
    let (w, h) = (args.width, args.height);
    let params = SynthParams {
        width: w,
        height: h,
        primary: args.primary,
        secondary: args.secondary,
        edge_column: args.edge_column.unwrap_or((w / 2) as f64),
        center: (w as f64 / 2.0, h as f64 / 2.0),
        radius: args.radius.unwrap_or(w.min(h) as f64 / 4.0),
        period: args.period,
        orientation: args.orientation,
        noise: args.noise,
        ..SynthParams::default()
    };
    let depth = BitDepth::new(args.bit_depth)?;
    ensure_dir(&args.output)?;
    let prefix = args.output.join(&args.id);
    let path = |suffix: &str| PathBuf::from(format!("{}_{suffix}.png", prefix.display()));
    let mut files = Vec::new();
    if args.color {
        let scene: ColorPolarizationStack = synth_color_scene(args.kind, &params, args.seed)?;
        for a in Angle::ALL {
            let p = Color::ALL.map(|c| scene.plane(c, a));
            let f = path(&a.to_string());
            write_rgb(p, &f, depth)?;
            files.push(f);
        }
        write_image(&mosaic_cpfa(&scene, &CpfaPattern::default()), path("cpfa"), depth)?;
    } else {
        let scene: PolarizationStack = synth_scene(args.kind, &params, args.seed)?;
        for a in Angle::ALL {
            let f = path(&a.to_string());
            write_image(scene.plane(a), &f, depth)?;
            files.push(f);
        }
        let pat = args.pattern.unwrap_or_default();
        write_image(&mosaic_mpfa(&scene, &pat), path("mpfa"), depth)?;
    }
    let names: Vec<String> = files
        .iter()
        .map(|f| f.file_name().expect("file").to_string_lossy().into_owned())
        .collect();
    let manifest = serde_json::json!({
        "scenes": [{
            "id": args.id,
            "bit_depth": args.bit_depth,
            "files": { "0": names[0], "45": names[1], "90": names[2], "135": names[3] },
        }]
    });
    let mpath = args.output.join("manifest.json");
    std::fs::write(&mpath, serde_json::to_string_pretty(&manifest)? + "\n")
        .with_context(|| format!("writing {}", mpath.display()))?;
    info!("wrote {}", mpath.display());
    Ok(0)
}

fn read_stack(inputs: &[PathBuf], depth: BitDepth) -> Result<PolarizationStack> {
    let planes: Vec<PlaneImage> = inputs
        .iter()
        .map(|p| read_image(p, depth).map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;
    let planes: [PlaneImage; 4] = match planes.try_into() {
        Ok(p) => p,
        Err(_) => bail!("expected four images"),
    };
    Ok(PolarizationStack::from_planes(planes)?)
}

fn cmd_stokes(args: &StackArgs) -> Result<usize> {
    let stack = read_stack(&args.inputs, BitDepth::new(args.bit_depth)?)?;
    ensure_dir(&args.output)?;
    let prefix = args.output.join(stem(&args.inputs[0]));
    write_products(
        &stokes_from_stack(&stack),
        &prefix,
        BitDepth::new(args.out_bit_depth)?,
        args.viz_mode,
    )?;
    Ok(0)
}

fn cmd_viz(args: &VizArgs) -> Result<usize> {
    let stack = read_stack(&args.inputs, BitDepth::new(args.bit_depth)?)?;
    let rgb = render_aop_dop(&stokes_from_stack(&stack), args.viz_mode);
    write_rgb([&rgb[0], &rgb[1], &rgb[2]], &args.output, BitDepth::EIGHT)?;
    if let Some(l) = &args.legend {
        let img = legend(256, 64)?;
        write_rgb([&img[0], &img[1], &img[2]], l, BitDepth::EIGHT)?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::DemosaickMpfa(a) => cmd_mpfa(a),
        Command::DemosaickCpfa(a) => cmd_cpfa(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Stokes(a) => cmd_stokes(a),
        Command::Viz(a) => cmd_viz(a),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} scene(s) failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
