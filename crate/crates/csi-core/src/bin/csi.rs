//! Command-line front end for the correlated spiral imaging engine.
//!
//! Every artifact file starts with `#` comment lines carrying the resolved
//! configuration and its hash; a `manifest.csv` in the output directory
//! lists each artifact with its content hash. Nothing embeds timestamps,
//! so identical invocations produce identical bytes.

use clap::{Args, Parser, Subcommand};
use csi_core::amplitudes::{compute_table, QuadratureGrid};
use csi_core::error::{Error, Result};
use csi_core::experiments::{
    rotation_trial, sha256_hex, symmetry_audit, translation_sweep, RotationTrialParams, SweepParams,
};
use csi_core::imaging;
use csi_core::scene::{SceneTransform, Shape, TransmissionMap};
use csi_core::spectra::{self, SpdcSource};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Print a line, ignoring a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "csi",
    version,
    about = "Correlated spiral imaging: mode-space tables, spectra, and reconstructions",
    propagate_version = true
)]
struct Cli {
    /// Output directory for artifacts (default: $CSI_OUT_DIR, else ".")
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Cap the worker thread count; results do not depend on it
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..=1024))]
    threads: Option<u64>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the shape grammar, or render one shape to a PGM preview
    Shapes(ShapesCmd),
    /// Compute the mode-transition amplitude table of an object
    Amplitudes(AmplitudesCmd),
    /// Compute the joint coincidence spectrum
    Spectrum(SpectrumCmd),
    /// Compute the mutual information of the joint spectrum
    MutualInfo(MutualInfoCmd),
    /// Reconstruct the object image from its amplitude table
    Reconstruct(ReconstructCmd),
    /// Extract the phases of one (p_out, p_in) slice of the table
    PhaseSpectrum(PhaseSpectrumCmd),
    /// Sweep a shrunken object along +x and record mutual information
    Sweep(SweepCmd),
    /// Compare fixed-orientation acquisition with per-entry random rotation
    RotateRandom(RotateRandomCmd),
    /// Score leakage from an N-fold mode-index selection rule
    Audit(AuditCmd),
}

fn parse_shape_desc(s: &str) -> std::result::Result<String, String> {
    Shape::parse(s).map_err(|e| e.to_string())?;
    Ok(s.to_string())
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
    let x: f64 = a.trim().parse().map_err(|e| format!("bad X `{a}`: {e}"))?;
    let y: f64 = b.trim().parse().map_err(|e| format!("bad Y `{b}`: {e}"))?;
    Ok((x, y))
}

fn parse_weights(s: &str) -> std::result::Result<SpdcSource, String> {
    if s == "flat" {
        return Ok(SpdcSource::flat());
    }
    if let Some(g) = s.strip_prefix("geometric:").or_else(|| s.strip_prefix("geo:")) {
        let gamma: f64 = g.parse().map_err(|e| format!("bad decay `{g}`: {e}"))?;
        return SpdcSource::geometric(gamma).map_err(|e| e.to_string());
    }
    Err(format!("expected `flat` or `geometric:GAMMA`, got `{s}`"))
}

/// Object selection shared by most subcommands: an analytic shape or a PGM
/// raster, plus a pose and the opacity convention.
#[derive(Args)]
struct ObjectOpts {
    /// Shape description: identity | disc[:R] | annulus:RIN:ROUT | rect:W:H |
    /// star:N[:ROUT[:RIN]] | fan:N[:RIN:ROUT:DUTY] | polygon:x,y;x,y;...
    #[arg(long, default_value = "identity", value_parser = parse_shape_desc)]
    shape: String,

    /// PGM (P2/P5) transmission raster; overrides --shape
    #[arg(long, requires = "pitch")]
    raster: Option<PathBuf>,

    /// World width of one raster pixel, in beam waists
    #[arg(long, requires = "raster")]
    pitch: Option<f64>,

    /// World position of the raster center, as X,Y
    #[arg(long, value_parser = parse_pair, default_value = "0,0")]
    origin: (f64, f64),

    /// Flip the transmission convention (T -> 1 - T)
    #[arg(long)]
    invert: bool,

    /// Object displacement along x, in beam waists
    #[arg(long, default_value_t = 0.0)]
    dx: f64,

    /// Object displacement along y, in beam waists
    #[arg(long, default_value_t = 0.0)]
    dy: f64,

    /// Clockwise object rotation, radians
    #[arg(long, default_value_t = 0.0)]
    theta: f64,

    /// Isotropic object scale factor
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

impl ObjectOpts {
    fn echo(&self, cfg: &mut BTreeMap<String, String>) {
        match &self.raster {
            Some(p) => {
                cfg.insert("raster".into(), p.display().to_string());
                cfg.insert("pitch".into(), self.pitch.unwrap_or(0.0).to_string());
                cfg.insert("origin".into(), format!("{},{}", self.origin.0, self.origin.1));
            }
            None => {
                cfg.insert("shape".into(), self.shape.clone());
            }
        }
        cfg.insert("invert".into(), self.invert.to_string());
        cfg.insert("dx".into(), self.dx.to_string());
        cfg.insert("dy".into(), self.dy.to_string());
        cfg.insert("theta".into(), self.theta.to_string());
        cfg.insert("scale".into(), self.scale.to_string());
    }

    fn build(&self, cfg: &mut BTreeMap<String, String>) -> Result<TransmissionMap> {
        let base = match &self.raster {
            Some(path) => {
                let bytes = std::fs::read(path)?;
                cfg.insert("raster_sha256".into(), sha256_hex(&bytes));
                let pitch = self.pitch.expect("clap enforces --pitch with --raster");
                TransmissionMap::load_raster(&bytes, pitch, [self.origin.0, self.origin.1])?
            }
            None => {
                let shape = Shape::parse(&self.shape).expect("validated at parse time");
                TransmissionMap::from_shape(shape)?
            }
        };
        let posed = base.with_pose(SceneTransform {
            rotation: self.theta,
            translation: [self.dx, self.dy],
            scale: self.scale,
        })?;
        Ok(posed.with_invert(self.invert))
    }
}

#[derive(Args)]
struct GridOpts {
    /// Quadrature half-width, in beam waists
    #[arg(long = "grid-l", default_value_t = csi_core::amplitudes::DEFAULT_HALF_WIDTH)]
    grid_l: f64,

    /// Quadrature nodes per axis
    #[arg(long = "grid-n", default_value_t = csi_core::amplitudes::DEFAULT_RESOLUTION)]
    grid_n: usize,
}

impl GridOpts {
    fn echo(&self, cfg: &mut BTreeMap<String, String>) {
        cfg.insert("grid_half_width".into(), self.grid_l.to_string());
        cfg.insert("grid_n".into(), self.grid_n.to_string());
    }

    fn build(&self) -> Result<QuadratureGrid> {
        QuadratureGrid::new(self.grid_l, self.grid_n)
    }
}

#[derive(Args)]
struct RangeOpts {
    /// Largest |l| on each side of the table
    #[arg(long, default_value_t = 10)]
    lmax: u32,

    /// Largest radial index p on each side of the table
    #[arg(long, default_value_t = 7)]
    pmax: u32,
}

impl RangeOpts {
    fn echo(&self, cfg: &mut BTreeMap<String, String>) {
        cfg.insert("l_max".into(), self.lmax.to_string());
        cfg.insert("p_max".into(), self.pmax.to_string());
    }
}

fn weights_echo(source: &SpdcSource, cfg: &mut BTreeMap<String, String>) {
    let text = match source.weights {
        spectra::SourceWeights::Flat => "flat".to_string(),
        spectra::SourceWeights::Geometric { gamma } => format!("geometric:{gamma}"),
    };
    cfg.insert("weights".into(), text);
}

#[derive(Args)]
struct ShapesCmd {
    /// Render this shape instead of listing the grammar
    #[arg(long, value_parser = parse_shape_desc)]
    shape: Option<String>,

    /// Preview resolution in pixels per axis
    #[arg(long, default_value_t = 256)]
    render: usize,

    /// Preview half-width, in beam waists
    #[arg(long, default_value_t = 2.0)]
    extent: f64,
}

#[derive(Args)]
struct AmplitudesCmd {
    #[command(flatten)]
    object: ObjectOpts,
    #[command(flatten)]
    grid: GridOpts,
    #[command(flatten)]
    range: RangeOpts,
}

#[derive(Args)]
struct SpectrumCmd {
    #[command(flatten)]
    object: ObjectOpts,
    #[command(flatten)]
    grid: GridOpts,
    #[command(flatten)]
    range: RangeOpts,

    /// Down-conversion weights: flat | geometric:GAMMA
    #[arg(long, default_value = "flat", value_parser = parse_weights)]
    weights: SpdcSource,

    /// Remove the conserved diagonal l_out = -l_ref before writing
    #[arg(long)]
    zero_diagonal: bool,

    /// With --zero-diagonal, keep raw masses instead of renormalizing
    #[arg(long, requires = "zero_diagonal")]
    no_renormalize: bool,
}

#[derive(Args)]
struct MutualInfoCmd {
    #[command(flatten)]
    object: ObjectOpts,
    #[command(flatten)]
    grid: GridOpts,
    #[command(flatten)]
    range: RangeOpts,

    /// Down-conversion weights: flat | geometric:GAMMA
    #[arg(long, default_value = "flat", value_parser = parse_weights)]
    weights: SpdcSource,

    /// Score the off-diagonal (diagonal-removed, renormalized) spectrum
    #[arg(long)]
    zero_diagonal: bool,
}

#[derive(Args)]
struct ReconstructCmd {
    #[command(flatten)]
    object: ObjectOpts,
    #[command(flatten)]
    grid: GridOpts,
    #[command(flatten)]
    range: RangeOpts,

    /// Image resolution in pixels per axis
    #[arg(long, default_value_t = 256)]
    res: usize,

    /// Image half-width, in beam waists
    #[arg(long, default_value_t = 3.0)]
    extent: f64,

    /// Also score fidelity against the object inside this radius
    #[arg(long)]
    region: Option<f64>,
}

#[derive(Args)]
struct PhaseSpectrumCmd {
    #[command(flatten)]
    object: ObjectOpts,
    #[command(flatten)]
    grid: GridOpts,
    #[command(flatten)]
    range: RangeOpts,

    /// Output-side radial index of the slice
    #[arg(long, default_value_t = 0)]
    pout: u32,

    /// Input-side radial index of the slice
    #[arg(long, default_value_t = 0)]
    pin: u32,

    /// Magnitude floor as a fraction of the slice maximum
    #[arg(long, default_value_t = 0.01)]
    floor: f64,
}

#[derive(Args)]
struct SweepCmd {
    #[command(flatten)]
    object: ObjectOpts,
    #[command(flatten)]
    grid: GridOpts,

    /// Largest |l| on each side of the table
    #[arg(long, default_value_t = 10)]
    lmax: u32,

    /// Largest radial index p on each side of the table
    #[arg(long, default_value_t = 3)]
    pmax: u32,

    /// Number of displacement samples, starting at zero
    #[arg(long, default_value_t = 13)]
    steps: usize,

    /// Displacement increment along +x, in beam waists
    #[arg(long, default_value_t = 0.25)]
    step: f64,

    /// Scale-down factor applied to the object before sweeping
    #[arg(long, default_value_t = 4.0)]
    shrink: f64,

    /// Down-conversion weights: flat | geometric:GAMMA
    #[arg(long, default_value = "flat", value_parser = parse_weights)]
    weights: SpdcSource,
}

#[derive(Args)]
struct RotateRandomCmd {
    #[command(flatten)]
    object: ObjectOpts,
    #[command(flatten)]
    grid: GridOpts,

    /// Largest |l| on each side of the table
    #[arg(long, default_value_t = 10)]
    lmax: u32,

    /// Largest radial index p on each side of the table
    #[arg(long, default_value_t = 0)]
    pmax: u32,

    /// Seed for the per-entry orientation streams
    #[arg(long, default_value_t = 7)]
    seed: u64,

    /// Down-conversion weights: flat | geometric:GAMMA
    #[arg(long, default_value = "flat", value_parser = parse_weights)]
    weights: SpdcSource,

    /// Reconstruction resolution in pixels per axis
    #[arg(long, default_value_t = 128)]
    res: usize,

    /// Reconstruction half-width, in beam waists
    #[arg(long, default_value_t = 3.0)]
    extent: f64,

    /// Ring-sampling radius for the azimuthal-structure score
    #[arg(long, default_value_t = 2.4)]
    radius: f64,
}

#[derive(Args)]
struct AuditCmd {
    #[command(flatten)]
    object: ObjectOpts,
    #[command(flatten)]
    grid: GridOpts,
    #[command(flatten)]
    range: RangeOpts,

    /// Selection-rule fold count N
    #[arg(long)]
    fold: u32,
}

/// Artifact sink: resolves the output directory, stamps every file with the
/// configuration header, and accumulates manifest rows.
struct Run {
    out: PathBuf,
    header: Vec<String>,
    config_sha: String,
    manifest: Vec<(String, String)>,
}

impl Run {
    fn new(out: PathBuf, subcommand: &str, cfg: &BTreeMap<String, String>) -> Self {
        let mut text = format!("subcommand={subcommand}\n");
        for (k, v) in cfg {
            let _ = writeln!(text, "{k}={v}");
        }
        let config_sha = sha256_hex(text.as_bytes());
        let mut header: Vec<String> =
            text.lines().map(str::to_string).collect();
        header.push(format!("config_sha256={config_sha}"));
        Run { out, header, config_sha, manifest: Vec::new() }
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        std::fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        std::fs::write(&path, bytes)?;
        self.manifest.push((name.to_string(), sha256_hex(bytes)));
        say!("wrote {}", path.display());
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if self.manifest.is_empty() {
            return Ok(());
        }
        let mut text = String::from("artifact,config_sha256,content_sha256\n");
        for (name, sha) in &self.manifest {
            let _ = writeln!(text, "{name},{},{sha}", self.config_sha);
        }
        let path = self.out.join("manifest.csv");
        std::fs::write(&path, text)?;
        say!("wrote {}", path.display());
        Ok(())
    }
}

fn out_dir(cli_out: &Option<PathBuf>) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| std::env::var_os("CSI_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn main() {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        // ignore failure: the pool can only be set once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t as usize).build_global();
    }
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {}: {e}", e.kind());
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let out = out_dir(&cli.out);
    match cli.cmd {
        Cmd::Shapes(c) => run_shapes(out, c),
        Cmd::Amplitudes(c) => run_amplitudes(out, c),
        Cmd::Spectrum(c) => run_spectrum(out, c),
        Cmd::MutualInfo(c) => run_mutual_info(out, c),
        Cmd::Reconstruct(c) => run_reconstruct(out, c),
        Cmd::PhaseSpectrum(c) => run_phase_spectrum(out, c),
        Cmd::Sweep(c) => run_sweep(out, c),
        Cmd::RotateRandom(c) => run_rotate_random(out, c),
        Cmd::Audit(c) => run_audit(out, c),
    }
}

fn run_shapes(out: PathBuf, c: ShapesCmd) -> Result<()> {
    let Some(desc) = c.shape else {
        say!("identity                          fully transparent plane");
        say!("disc[:R]                          opaque disc, default R=1");
        say!("annulus:RIN:ROUT                  opaque ring");
        say!("rect:W:H                          opaque axis-aligned rectangle");
        say!("star:N[:ROUT[:RIN]]               N-pointed star, defaults ROUT=0.45 RIN=ROUT/2");
        say!("fan:N[:RIN:ROUT:DUTY]             N opaque angular bands, defaults 0.25 3 0.5");
        say!("polygon:x,y;x,y;...               opaque simple polygon (even-odd rule)");
        say!();
        say!("All lengths are in beam waists. Pose flags --dx --dy --theta --scale");
        say!("apply scale, then clockwise rotation, then translation.");
        return Ok(());
    };
    if c.render < 2 {
        return Err(Error::InvalidConfig(format!("preview needs at least 2 pixels, got {}", c.render)));
    }
    let mut cfg = BTreeMap::new();
    cfg.insert("shape".into(), desc.clone());
    cfg.insert("render".into(), c.render.to_string());
    cfg.insert("extent".into(), c.extent.to_string());
    let mut run = Run::new(out, "shapes", &cfg);

    let map = TransmissionMap::from_shape(Shape::parse(&desc).expect("validated at parse time"))?;
    let n = c.render;
    let h = 2.0 * c.extent / n as f64;
    let mut samples = Vec::with_capacity(n * n);
    for row in 0..n {
        let y = c.extent - (row as f64 + 0.5) * h;
        for col in 0..n {
            let x = -c.extent + (col as f64 + 0.5) * h;
            samples.push((map.sample(x, y) * 255.0).round() as u16);
        }
    }
    let pgm = csi_core::pgm::Pgm { width: n, height: n, maxval: 255, samples };
    run.write("shape_preview.pgm", &csi_core::pgm::write_p5(&pgm, &run.header.clone()))?;
    run.finish()
}

fn run_amplitudes(out: PathBuf, c: AmplitudesCmd) -> Result<()> {
    let mut cfg = BTreeMap::new();
    c.object.echo(&mut cfg);
    c.grid.echo(&mut cfg);
    c.range.echo(&mut cfg);
    let map = c.object.build(&mut cfg)?;
    let grid = c.grid.build()?;
    let mut run = Run::new(out, "amplitudes", &cfg);

    let table = compute_table(&map, c.range.lmax, c.range.pmax, &grid)?;
    run.write("amplitudes.csv", table.to_csv(&run.header.clone()).as_bytes())?;
    run.finish()
}

fn run_spectrum(out: PathBuf, c: SpectrumCmd) -> Result<()> {
    let mut cfg = BTreeMap::new();
    c.object.echo(&mut cfg);
    c.grid.echo(&mut cfg);
    c.range.echo(&mut cfg);
    weights_echo(&c.weights, &mut cfg);
    cfg.insert("zero_diagonal".into(), c.zero_diagonal.to_string());
    cfg.insert("renormalize".into(), (!c.no_renormalize).to_string());
    let map = c.object.build(&mut cfg)?;
    let grid = c.grid.build()?;
    let mut run = Run::new(out, "spectrum", &cfg);

    let table = compute_table(&map, c.range.lmax, c.range.pmax, &grid)?;
    let mut spectrum = spectra::joint_spectrum(&table, &c.weights)?;
    if c.zero_diagonal {
        spectrum = spectra::zero_diagonal(&spectrum, !c.no_renormalize)?;
    }
    run.write("spectrum.csv", spectrum.to_csv(&run.header.clone()).as_bytes())?;
    let collapsed = spectra::collapsed(&spectrum);
    run.write("spectrum_collapsed.csv", collapsed.to_csv(&run.header.clone()).as_bytes())?;
    run.finish()
}

fn run_mutual_info(out: PathBuf, c: MutualInfoCmd) -> Result<()> {
    let mut cfg = BTreeMap::new();
    c.object.echo(&mut cfg);
    c.grid.echo(&mut cfg);
    c.range.echo(&mut cfg);
    weights_echo(&c.weights, &mut cfg);
    cfg.insert("zero_diagonal".into(), c.zero_diagonal.to_string());
    let map = c.object.build(&mut cfg)?;
    let grid = c.grid.build()?;
    let mut run = Run::new(out, "mutual-info", &cfg);

    let table = compute_table(&map, c.range.lmax, c.range.pmax, &grid)?;
    let mut spectrum = spectra::joint_spectrum(&table, &c.weights)?;
    if c.zero_diagonal {
        spectrum = spectra::zero_diagonal(&spectrum, true)?;
    }
    let mi = spectra::mutual_information(&spectrum);
    say!("mutual_information_bits={mi:.16e}");

    let mut text = String::new();
    for line in &run.header {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "zero_diagonal,mutual_information_bits");
    let _ = writeln!(text, "{},{mi:.16e}", c.zero_diagonal as u8);
    run.write("mutual_info.csv", text.as_bytes())?;
    run.finish()
}

fn run_reconstruct(out: PathBuf, c: ReconstructCmd) -> Result<()> {
    let mut cfg = BTreeMap::new();
    c.object.echo(&mut cfg);
    c.grid.echo(&mut cfg);
    c.range.echo(&mut cfg);
    cfg.insert("res".into(), c.res.to_string());
    cfg.insert("extent".into(), c.extent.to_string());
    if let Some(r) = c.region {
        cfg.insert("region".into(), r.to_string());
    }
    let map = c.object.build(&mut cfg)?;
    let grid = c.grid.build()?;
    if c.res < 2 {
        return Err(Error::InvalidConfig(format!("image needs at least 2 pixels, got {}", c.res)));
    }
    let mut run = Run::new(out, "reconstruct", &cfg);

    let table = compute_table(&map, c.range.lmax, c.range.pmax, &grid)?;
    let image = imaging::reconstruct(&table, c.res, c.extent);
    run.write("recon.pgm", &csi_core::pgm::write_p5(&image.magnitude_pgm(65535), &run.header.clone()))?;
    run.write("recon.csv", image.to_csv(&run.header.clone()).as_bytes())?;

    if let Some(region) = c.region {
        let report = imaging::image_error(&image, &map, region)?;
        say!("rmse={:.16e}", report.rmse);
        say!("correlation={:.16e}", report.correlation);
        let mut text = String::new();
        for line in &run.header {
            let _ = writeln!(text, "# {line}");
        }
        let _ = writeln!(text, "region_radius,rmse,correlation");
        let _ = writeln!(text, "{region},{:.16e},{:.16e}", report.rmse, report.correlation);
        run.write("recon_error.csv", text.as_bytes())?;
    }
    run.finish()
}

fn run_phase_spectrum(out: PathBuf, c: PhaseSpectrumCmd) -> Result<()> {
    let mut cfg = BTreeMap::new();
    c.object.echo(&mut cfg);
    c.grid.echo(&mut cfg);
    c.range.echo(&mut cfg);
    cfg.insert("p_out_slice".into(), c.pout.to_string());
    cfg.insert("p_in_slice".into(), c.pin.to_string());
    cfg.insert("floor".into(), c.floor.to_string());
    let map = c.object.build(&mut cfg)?;
    let grid = c.grid.build()?;
    let mut run = Run::new(out, "phase-spectrum", &cfg);

    let table = compute_table(&map, c.range.lmax, c.range.pmax, &grid)?;
    let phases = imaging::phase_spectrum(&table, c.pout, c.pin, c.floor)?;
    say!("below_floor_mass={:.16e}", phases.below_floor_mass);
    run.write("phase.csv", phases.to_csv(&run.header.clone()).as_bytes())?;
    run.finish()
}

fn run_sweep(out: PathBuf, c: SweepCmd) -> Result<()> {
    let mut cfg = BTreeMap::new();
    c.object.echo(&mut cfg);
    c.grid.echo(&mut cfg);
    cfg.insert("l_max".into(), c.lmax.to_string());
    cfg.insert("p_max".into(), c.pmax.to_string());
    cfg.insert("steps".into(), c.steps.to_string());
    cfg.insert("step".into(), c.step.to_string());
    cfg.insert("shrink".into(), c.shrink.to_string());
    weights_echo(&c.weights, &mut cfg);
    let map = c.object.build(&mut cfg)?;
    let grid = c.grid.build()?;
    let mut run = Run::new(out, "sweep", &cfg);

    let params = SweepParams {
        steps: c.steps,
        step_size: c.step,
        shrink: c.shrink,
        l_max: c.lmax,
        p_max: c.pmax,
        grid,
        source: c.weights,
    };
    let result = translation_sweep(&map, &params)?;
    say!("points={}", result.points.len());
    run.write("sweep.csv", result.to_csv(&run.header.clone()).as_bytes())?;
    run.finish()
}

fn run_rotate_random(out: PathBuf, c: RotateRandomCmd) -> Result<()> {
    let mut cfg = BTreeMap::new();
    c.object.echo(&mut cfg);
    c.grid.echo(&mut cfg);
    cfg.insert("l_max".into(), c.lmax.to_string());
    cfg.insert("p_max".into(), c.pmax.to_string());
    cfg.insert("seed".into(), c.seed.to_string());
    cfg.insert("res".into(), c.res.to_string());
    cfg.insert("extent".into(), c.extent.to_string());
    cfg.insert("radius".into(), c.radius.to_string());
    weights_echo(&c.weights, &mut cfg);
    let map = c.object.build(&mut cfg)?;
    let grid = c.grid.build()?;
    let mut run = Run::new(out, "rotate-random", &cfg);

    let params = RotationTrialParams {
        seed: c.seed,
        l_max: c.lmax,
        p_max: c.pmax,
        grid,
        source: c.weights,
        recon_resolution: c.res,
        recon_half_width: c.extent,
        variance_radius: c.radius,
        ..RotationTrialParams::default()
    };
    let report = rotation_trial(&map, &params)?;
    say!("total_variation={:.16e}", report.total_variation);
    say!("fixed_variance={:.16e}", report.fixed_variance);
    say!("random_variance={:.16e}", report.random_variance);

    let header = run.header.clone();
    run.write("rotation_random_spectrum.csv", report.random_spectrum.to_csv(&header).as_bytes())?;
    run.write("rotation_fixed_spectrum.csv", report.fixed_spectrum.to_csv(&header).as_bytes())?;
    run.write(
        "rotation_random_recon.pgm",
        &csi_core::pgm::write_p5(&report.random_image.magnitude_pgm(65535), &header),
    )?;
    run.write(
        "rotation_fixed_recon.pgm",
        &csi_core::pgm::write_p5(&report.fixed_image.magnitude_pgm(65535), &header),
    )?;
    let mut text = String::new();
    for line in &header {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "total_variation,fixed_variance,random_variance");
    let _ = writeln!(
        text,
        "{:.16e},{:.16e},{:.16e}",
        report.total_variation, report.fixed_variance, report.random_variance
    );
    run.write("rotation_report.csv", text.as_bytes())?;
    run.finish()
}

fn run_audit(out: PathBuf, c: AuditCmd) -> Result<()> {
    let mut cfg = BTreeMap::new();
    c.object.echo(&mut cfg);
    c.grid.echo(&mut cfg);
    c.range.echo(&mut cfg);
    cfg.insert("fold".into(), c.fold.to_string());
    let map = c.object.build(&mut cfg)?;
    let grid = c.grid.build()?;
    let mut run = Run::new(out, "audit", &cfg);

    let table = compute_table(&map, c.range.lmax, c.range.pmax, &grid)?;
    let leakage = symmetry_audit(&table, c.fold)?;
    say!("leakage_fraction={leakage:.16e}");

    let mut text = String::new();
    for line in &run.header {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "fold,leakage_fraction");
    let _ = writeln!(text, "{},{leakage:.16e}", c.fold);
    run.write("audit.csv", text.as_bytes())?;
    run.finish()
}
