//! The `ade` command line.
//!
//! Every subcommand reads its parameters from flags, then from the config
//! file given by `--config` or `ADE_CONFIG`, then from built-in defaults.
//! Commands that write artifacts also write a run manifest next to them;
//! passing that manifest back as `--config` replays the run.
//!
//! Failures print one line to stderr,
//! `error kind=<kind> message="<text>"`, and exit with status 1. Usage
//! errors exit with status 2.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, SpectrumProfile};
use crate::corruption::{self, ChainMeta, ChainParams, CorruptionChain, DATASET_MANIFEST};
use crate::error::{AdeError, Result};
use crate::field::FieldStack;
use crate::io::config::{format_band, parse_band, parse_peclet_reference, Config};
use crate::io::manifest::{fmt_f64, RunManifest};
use crate::io::tensor::{read_tensor, DType, Tensor};
use crate::io::{self, pnm};
use crate::lattice::Precision;
use crate::noise::NormalStream;
use crate::reverse::{self, ExternalPredictor, GaussianNoise, OraclePredictor, Predictor, ZeroPredictor};
use crate::schedule::{self, DiffusionSchedule, ScheduleParams};
use crate::turbulence::{AmplitudeConvention, TurbulenceGenerator, TurbulenceSpec};

#[derive(Debug, Parser)]
#[command(name = "ade", version, about = "Advection-diffusion image corruption engine")]
pub struct Cli {
    /// Config file of `key = value` lines (defaults to $ADE_CONFIG).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel kernels.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a Fourier-number schedule and its lattice plan.
    Schedule(ScheduleArgs),
    /// Write a turbulent velocity sequence as a [K, 2, N, N] tensor.
    GenVelocity(GenVelocityArgs),
    /// Corrupt one image into a chain tensor.
    Corrupt(CorruptArgs),
    /// Precompute chains for every image in a directory.
    Chain(DatasetArgs),
    /// Run the reverse sampler on a stored chain.
    Reverse(ReverseArgs),
    /// Radial energy spectra as tables and optional plots.
    Spectrum(SpectrumArgs),
    /// Mass-drift report of a chain.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub fo_min: Option<f64>,
    #[arg(long)]
    pub fo_max: Option<f64>,
    /// Blur scales in pixels, used when Fo bounds are not given.
    #[arg(long)]
    pub sigma_min: Option<f64>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Characteristic length in nodes (image width).
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub pe: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub cap: Option<f64>,
    /// `per-interval` or `constant:<alpha>`.
    #[arg(long)]
    pub peclet_reference: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct ChainArgs {
    #[arg(long)]
    pub sigma_min: Option<f64>,
    #[arg(long)]
    pub sigma_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub pe: Option<f64>,
    #[arg(long)]
    pub tau_max: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `f32` or `f64`.
    #[arg(long)]
    pub precision: Option<String>,
    /// Enable or disable the turbulence generator.
    #[arg(long)]
    pub turbulence: Option<bool>,
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    /// `default` or `lo,hi` in radians per node.
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub dt_turb: Option<f64>,
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long)]
    pub sharpness: Option<f64>,
    /// `energy` or `amplitude`.
    #[arg(long)]
    pub convention: Option<String>,
    #[arg(long)]
    pub peclet_reference: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenVelocityArgs {
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Target RMS speed before limiting.
    #[arg(long)]
    pub rms: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    #[arg(long)]
    pub band: Option<String>,
    #[arg(long)]
    pub dt_turb: Option<f64>,
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long)]
    pub sharpness: Option<f64>,
    #[arg(long)]
    pub convention: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the prior (last snapshot) as a portable map.
    #[arg(long)]
    pub prior: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub in_dir: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct ReverseArgs {
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// `oracle`, `zero` or `extern:<dir>`.
    #[arg(long)]
    pub predictor: Option<String>,
    /// Reconstruction: `.adet` tensor or `.pgm`/`.ppm` image.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub sigma_s: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the `[K + 1, C, H, W]` trajectory here.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Seconds to wait for an external predictor per step.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    /// Image (`.pgm`/`.ppm`) or tensor (`.adet`; 4-D tensors are chains).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Profile table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Log-log plot of all profiles as a PGM.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Compare a blur chain of the image against additive Gaussian noise.
    #[arg(long)]
    pub compare: bool,
    /// Largest noise level of the comparison.
    #[arg(long)]
    pub noise_max: Option<f64>,
    /// Drop the one-pixel wall ring before transforming.
    #[arg(long)]
    pub interior: bool,
    #[command(flatten)]
    pub chain: ChainArgs,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Fail when any drift exceeds this.
    #[arg(long)]
    pub max_drift: Option<f64>,
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AdeError::Config(format!("threads: {e}")))
            .and_then(|pool| {
                let mut buf = Vec::new();
                let r = pool.install(|| dispatch(&cli, &mut buf));
                out.write_all(&buf).map_err(stdout_err)?;
                r
            }),
        None => dispatch(&cli, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            let _ = writeln!(err, "error kind={} message={:?}", e.kind(), msg);
            1
        }
    }
}

/// Entry point for the binary.
pub fn main_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let cfg = Config::resolve(cli.config.as_deref())?;
    match &cli.command {
        Command::Schedule(a) => cmd_schedule(a, &cfg, out),
        Command::GenVelocity(a) => cmd_gen_velocity(a, &cfg, out),
        Command::Corrupt(a) => cmd_corrupt(a, &cfg, out),
        Command::Chain(a) => cmd_chain(a, &cfg, out),
        Command::Reverse(a) => cmd_reverse(a, &cfg, out),
        Command::Spectrum(a) => cmd_spectrum(a, &cfg, out),
        Command::Audit(a) => cmd_audit(a, &cfg, out),
    }
}

fn pick<T: std::str::FromStr + Clone>(flag: &Option<T>, cfg: &Config, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v.clone())),
        None => cfg.get_parsed(key),
    }
}

fn require<T>(v: Option<T>, what: &str) -> Result<T> {
    v.ok_or_else(|| AdeError::Config(format!("missing required parameter '{what}'")))
}

fn wrap_config(e: AdeError) -> AdeError {
    match e {
        AdeError::Config(_) => e,
        other => AdeError::Config(other.to_string()),
    }
}

impl ChainArgs {
    fn resolve(&self, cfg: &Config) -> Result<ChainParams> {
        let mut p = ChainParams::default();
        cfg.apply_chain_params(&mut p)?;
        macro_rules! over {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { p.$f = v; })* };
        }
        over!(sigma_min, sigma_max, steps, pe, tau_max, seed, turbulence, slope, dt_turb, cap, sharpness);
        if let Some(v) = &self.precision {
            p.precision = v.parse::<Precision>().map_err(wrap_config)?;
        }
        if let Some(v) = &self.convention {
            p.convention = v.parse::<AmplitudeConvention>().map_err(wrap_config)?;
        }
        if let Some(v) = &self.band {
            p.band = parse_band(v)?;
        }
        if let Some(v) = &self.peclet_reference {
            p.peclet_reference = parse_peclet_reference(v)?;
        }
        Ok(p)
    }
}

fn sibling_manifest(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

fn write_with_hash(path: &Path, bytes: &[u8]) -> Result<String> {
    io::atomic_write(path, bytes)?;
    Ok(io::sha256_hex(bytes))
}

fn cmd_schedule(a: &ScheduleArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let length = pick(&a.length, cfg, "length")?.unwrap_or(128);
    let steps = pick(&a.steps, cfg, "steps")?.unwrap_or(10);
    let l = length as f64;
    let fo_min = match pick(&a.fo_min, cfg, "fo_min")? {
        Some(f) => f,
        None => schedule::sigma_to_fo(
            pick(&a.sigma_min, cfg, "sigma_min")?.unwrap_or(schedule::DEFAULT_SIGMA_MIN),
            l,
        )?,
    };
    let fo_max = match pick(&a.fo_max, cfg, "fo_max")? {
        Some(f) => f,
        None => schedule::sigma_to_fo(pick(&a.sigma_max, cfg, "sigma_max")?.unwrap_or(16.0), l)?,
    };
    let peclet_reference = match pick(&a.peclet_reference, cfg, "peclet_reference")? {
        Some(s) => parse_peclet_reference(&s)?,
        None => schedule::PecletReference::PerInterval,
    };
    let params = ScheduleParams {
        fo_min,
        fo_max,
        steps,
        length,
        pe: pick(&a.pe, cfg, "pe")?.unwrap_or(0.0),
        tau_max: pick(&a.tau_max, cfg, "tau_max")?.unwrap_or(schedule::DEFAULT_TAU_MAX),
        velocity_cap: pick(&a.cap, cfg, "cap")?.unwrap_or(schedule::DEFAULT_VELOCITY_CAP),
        peclet_reference,
    };
    let s = DiffusionSchedule::new(&params)?;
    let fo: Vec<String> = s.fo.iter().map(|f| format!("{f:e}")).collect();
    writeln!(out, "fo={}", fo.join(",")).map_err(stdout_err)?;
    write!(out, "{}", s.describe()).map_err(stdout_err)?;
    Ok(())
}

fn stdout_err(e: std::io::Error) -> AdeError {
    AdeError::io("<stdout>", e)
}

fn cmd_gen_velocity(a: &GenVelocityArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let n = require(pick(&a.size, cfg, "size")?, "size")?;
    let seed = pick(&a.seed, cfg, "seed")?.unwrap_or(0);
    let steps = pick(&a.steps, cfg, "steps")?.unwrap_or(1);
    let path = require(pick(&a.out, cfg, "output")?, "out")?;
    let mut spec = TurbulenceSpec::square(n);
    if let Some(v) = pick(&a.slope, cfg, "slope")? {
        spec.slope = v;
    }
    if let Some(v) = pick(&a.band, cfg, "band")? {
        spec.band = parse_band(&v)?;
    }
    if let Some(v) = pick(&a.dt_turb, cfg, "dt_turb")? {
        spec.dt_turb = v;
    }
    if let Some(v) = pick(&a.cap, cfg, "cap")? {
        spec.cap = v;
    }
    if let Some(v) = pick(&a.sharpness, cfg, "sharpness")? {
        spec.sharpness = v;
    }
    if let Some(v) = pick(&a.convention, cfg, "convention")? {
        spec.convention = v.parse().map_err(wrap_config)?;
    }
    let rms = pick(&a.rms, cfg, "rms")?.unwrap_or(0.5 * spec.cap);
    let generator = TurbulenceGenerator::new(spec.clone(), seed)?;
    let mut data = Vec::with_capacity(steps as usize * 2 * n * n);
    let mut peak: f64 = 0.0;
    for step in 0..steps {
        let v = generator.generate(step, rms)?;
        peak = peak.max(v.max_speed());
        data.extend_from_slice(&v.vx);
        data.extend_from_slice(&v.vy);
    }
    let bytes = Tensor::from_f64(vec![steps as usize, 2, n, n], data)?.to_bytes();
    let hash = write_with_hash(&path, &bytes)?;

    let mut m = RunManifest::new();
    m.set("command", "gen-velocity");
    m.set("size", n.to_string());
    m.set("seed", seed.to_string());
    m.set("steps", steps.to_string());
    m.set("rms", fmt_f64(rms));
    m.set("slope", fmt_f64(spec.slope));
    m.set("band", format_band(spec.band));
    m.set("dt_turb", fmt_f64(spec.dt_turb));
    m.set("cap", fmt_f64(spec.cap));
    m.set("sharpness", fmt_f64(spec.sharpness));
    m.set("convention", spec.convention.as_str());
    m.set("output", path.display().to_string());
    m.set("output_sha256", hash.clone());
    m.write(&sibling_manifest(&path))?;
    writeln!(out, "wrote {} [{steps}, 2, {n}, {n}] max_speed={peak:e} sha256={hash}", path.display())
        .map_err(stdout_err)
}

fn read_input_image(path: &Path, cfg: &Config) -> Result<(pnm::PnmImage, String)> {
    let bytes = io::read_bytes(path)?;
    let hash = io::sha256_hex(&bytes);
    if let Some(expected) = cfg.get("input_sha256") {
        if cfg.get("input").map(Path::new) == Some(path) && expected != hash {
            return Err(AdeError::Input(format!(
                "{} does not match the recorded input hash",
                path.display()
            )));
        }
    }
    Ok((pnm::decode(&bytes)?, hash))
}

fn cmd_corrupt(a: &CorruptArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let input = require(pick(&a.input, cfg, "input")?, "in")?;
    let path = require(pick(&a.out, cfg, "output")?, "out")?;
    let params = a.chain.resolve(cfg)?;
    let (img, in_hash) = read_input_image(&input, cfg)?;
    let (w, h) = (img.stack.width, img.stack.height);
    let config = params.forward_config(w, h, params.seed)?;
    let chain = corruption::forward_chain(&img.stack, &config)?;
    let hash = write_with_hash(&path, &chain.to_tensor().to_bytes())?;

    let mut m = RunManifest::for_chain_params(&params);
    m.set("command", "corrupt");
    m.record_schedule(&config.schedule.fo, w);
    m.set("input", input.display().to_string());
    m.set("input_sha256", in_hash);
    m.set("output", path.display().to_string());
    m.set("output_sha256", hash.clone());
    if let Some(prior) = &a.prior {
        pnm::write_image(prior, &chain.prior(), img.maxval)?;
        m.set("prior", prior.display().to_string());
    }
    m.write(&sibling_manifest(&path))?;
    writeln!(
        out,
        "wrote {} [{}, {}, {h}, {w}] lattice_steps={} sha256={hash}",
        path.display(),
        chain.steps + 1,
        chain.channels,
        config.schedule.total_lattice_steps()
    )
    .map_err(stdout_err)
}

fn cmd_chain(a: &DatasetArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let input = require(pick(&a.in_dir, cfg, "input_dir")?, "in-dir")?;
    let out_dir = require(pick(&a.out_dir, cfg, "output_dir")?, "out-dir")?;
    let params = a.chain.resolve(cfg)?;
    let report = corruption::precompute_dataset(&input, &params, &out_dir)?;
    for p in &report.written {
        writeln!(out, "wrote {}", p.display()).map_err(stdout_err)?;
    }
    for (p, e) in &report.failures {
        writeln!(out, "skipped {}: {e}", p.display()).map_err(stdout_err)?;
    }
    writeln!(out, "manifest {}", out_dir.join(DATASET_MANIFEST).display()).map_err(stdout_err)
}

/// Reads a `[K + 1, C, H, W]` chain tensor. Only the precision of the
/// metadata is recoverable from the file.
pub fn read_chain(path: &Path) -> Result<CorruptionChain> {
    let t = read_tensor(path)?;
    let precision = match t.dtype() {
        DType::F32 => Precision::F32,
        DType::F64 => Precision::F64,
    };
    let length = t.dims().get(3).copied().unwrap_or(0);
    CorruptionChain::from_tensor(
        &t,
        ChainMeta {
            seed: 0,
            pe: 0.0,
            fo: Vec::new(),
            length,
            turbulence: None,
            precision,
        },
    )
}

fn write_stack(path: &Path, stack: &FieldStack) -> Result<String> {
    let bytes = if pnm::has_pnm_extension(path) {
        pnm::encode(stack, 255)?
    } else {
        Tensor::from_f64(vec![stack.channels, stack.height, stack.width], stack.data.clone())?.to_bytes()
    };
    write_with_hash(path, &bytes)
}

fn cmd_reverse(a: &ReverseArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let chain_path = require(pick(&a.chain, cfg, "chain")?, "chain")?;
    let kind = pick(&a.predictor, cfg, "predictor")?.unwrap_or_else(|| "oracle".to_string());
    let sigma_s = pick(&a.sigma_s, cfg, "sigma_s")?.unwrap_or(0.0);
    let seed = pick(&a.seed, cfg, "seed")?.unwrap_or(0);
    let chain_bytes = io::read_bytes(&chain_path)?;
    let chain = read_chain(&chain_path)?;
    let predictor: Box<dyn Predictor> = match kind.as_str() {
        "oracle" => Box::new(OraclePredictor::new(&chain)),
        "zero" => Box::new(ZeroPredictor),
        other => match other.strip_prefix("extern:") {
            Some(dir) => {
                let mut p = ExternalPredictor::new(dir)?;
                if let Some(t) = pick(&a.timeout, cfg, "timeout")? {
                    p = p.with_timeout(Duration::from_secs_f64(t));
                }
                Box::new(p)
            }
            None => {
                return Err(AdeError::Config(format!(
                    "predictor must be oracle, zero or extern:<dir>, got '{other}'"
                )))
            }
        },
    };
    let trajectory = pick(&a.trajectory, cfg, "trajectory")?;
    let s = reverse::sample(
        &chain.prior(),
        predictor.as_ref(),
        chain.steps,
        sigma_s,
        &mut GaussianNoise::new(seed),
        trajectory.is_some(),
    )?;
    let err = s.output.max_abs_diff(&chain.snapshot(0));

    let mut m = RunManifest::new();
    m.set("command", "reverse");
    m.set("chain", chain_path.display().to_string());
    m.set("chain_sha256", io::sha256_hex(&chain_bytes));
    m.set("predictor", kind.clone());
    m.set("sigma_s", fmt_f64(sigma_s));
    m.set("seed", seed.to_string());
    m.set("max_abs_error", fmt_f64(err));
    let manifest_at = match pick(&a.out, cfg, "output")? {
        Some(path) => {
            let hash = write_stack(&path, &s.output)?;
            m.set("output", path.display().to_string());
            m.set("output_sha256", hash);
            Some(sibling_manifest(&path))
        }
        None => None,
    };
    if let (Some(path), Some(t)) = (&trajectory, s.trajectory_tensor()) {
        let hash = write_with_hash(path, &t.to_bytes())?;
        m.set("trajectory", path.display().to_string());
        m.set("trajectory_sha256", hash);
    }
    if let Some(mp) = manifest_at.or_else(|| trajectory.as_deref().map(sibling_manifest)) {
        m.write(&mp)?;
    }
    writeln!(out, "steps={} predictor={kind} max_abs_error={err:e}", chain.steps).map_err(stdout_err)
}

fn profiles_of_tensor(t: &Tensor, interior: bool) -> Result<Vec<(String, SpectrumProfile)>> {
    let d = t.dims();
    let data = t.to_f64_vec();
    let (count, c, h, w) = match d.len() {
        2 => (1, 1, d[0], d[1]),
        3 => (1, d[0], d[1], d[2]),
        4 => (d[0], d[1], d[2], d[3]),
        _ => return Err(AdeError::Shape(format!("cannot take spectra of a {}-D tensor", d.len()))),
    };
    let per = c * h * w;
    (0..count)
        .map(|k| {
            let stack = FieldStack::from_vec(c, h, w, data[k * per..(k + 1) * per].to_vec())?;
            let name = if count == 1 { "field".to_string() } else { format!("snapshot_{k}") };
            Ok((name, stack_profile(&stack, interior)?))
        })
        .collect()
}

/// Sum of the per-channel profiles.
fn stack_profile(stack: &FieldStack, interior: bool) -> Result<SpectrumProfile> {
    let mut total: Option<SpectrumProfile> = None;
    let stack = if interior { stack.interior()? } else { stack.clone() };
    for f in stack.channel_fields() {
        let p = analysis::radial_energy_spectrum(&f)?;
        total = Some(match total {
            None => p,
            Some(mut t) => {
                t.dc += p.dc;
                t.energy.iter_mut().zip(&p.energy).for_each(|(a, b)| *a += b);
                t
            }
        });
    }
    total.ok_or_else(|| AdeError::Shape("field has no channels".into()))
}

fn cmd_spectrum(a: &SpectrumArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let input = require(pick(&a.input, cfg, "input")?, "in")?;
    let bytes = io::read_bytes(&input)?;
    let is_image = pnm::has_pnm_extension(&input);
    let mut m = RunManifest::new();
    m.set("command", "spectrum");
    m.set("input", input.display().to_string());
    m.set("input_sha256", io::sha256_hex(&bytes));
    let interior = a.interior || cfg.get_bool("interior")? == Some(true);
    if interior {
        m.set("interior", "true");
    }

    let curves: Vec<(String, SpectrumProfile)> = if a.compare || cfg.get_bool("compare")? == Some(true) {
        if !is_image {
            return Err(AdeError::Input("--compare needs a portable-map image".into()));
        }
        let img = pnm::decode(&bytes)?.stack;
        let mut params = a.chain.resolve(cfg)?;
        params.pe = 0.0;
        params.turbulence = false;
        let noise_max = pick(&a.noise_max, cfg, "noise_max")?.unwrap_or(0.5);
        let chain = corruption::forward_chain(&img, &params.forward_config(img.width, img.height, params.seed)?)?;
        let mut curves = Vec::new();
        let mut rng = NormalStream::new(params.seed, crate::noise::streams::TRAINING_NOISE);
        for k in 0..=chain.steps {
            curves.push((format!("blur_{k}"), stack_profile(&chain.snapshot(k), interior)?));
        }
        for k in 0..=chain.steps {
            let sigma = noise_max * k as f64 / chain.steps.max(1) as f64;
            let noisy = corruption::add_training_noise(&img, sigma, &mut rng)?;
            curves.push((format!("noise_{k}"), stack_profile(&noisy, interior)?));
        }
        m.set("compare", "true");
        m.set("noise_max", fmt_f64(noise_max));
        for (k, v) in RunManifest::for_chain_params(&params).entries() {
            m.set(k, v.clone());
        }
        curves
    } else if is_image {
        vec![("image".to_string(), stack_profile(&pnm::decode(&bytes)?.stack, interior)?)]
    } else {
        profiles_of_tensor(&Tensor::from_bytes(&bytes)?, interior)?
    };

    let mut table = String::from("curve,k,count,energy\n");
    for (name, p) in &curves {
        table.push_str(&format!("{name},0,1,{:e}\n", p.dc));
        for ((k, c), e) in p.wavenumbers.iter().zip(&p.counts).zip(&p.energy) {
            table.push_str(&format!("{name},{k},{c},{e:e}\n"));
        }
    }
    for (name, p) in &curves {
        writeln!(out, "{name} top_quartile_energy={:e} total={:e}", p.top_quartile_energy(), p.total())
            .map_err(stdout_err)?;
    }
    let mut manifest_at = None;
    if let Some(path) = pick(&a.out, cfg, "output")? {
        m.set("output", path.display().to_string());
        m.set("output_sha256", write_with_hash(&path, table.as_bytes())?);
        manifest_at = Some(sibling_manifest(&path));
    } else {
        write!(out, "{table}").map_err(stdout_err)?;
    }
    if let Some(path) = pick(&a.plot, cfg, "plot")? {
        let refs: Vec<&SpectrumProfile> = curves.iter().map(|(_, p)| p).collect();
        let img = analysis::plot_loglog(&refs, 256, 192)?;
        m.set("plot", path.display().to_string());
        m.set("plot_sha256", write_with_hash(&path, &pnm::encode(&img, 255)?)?);
        manifest_at = manifest_at.or_else(|| Some(sibling_manifest(&path)));
    }
    if let Some(mp) = manifest_at {
        m.write(&mp)?;
    }
    Ok(())
}

fn cmd_audit(a: &AuditArgs, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let path = require(pick(&a.chain, cfg, "chain")?, "chain")?;
    let audit = analysis::mass_audit(&read_chain(&path)?);
    write!(out, "{}", audit.report()).map_err(stdout_err)?;
    if let (Some(tol), Some(max)) = (pick(&a.max_drift, cfg, "max_drift")?, audit.max_drift()) {
        if max > tol {
            return Err(AdeError::Domain(format!("mass drift {max:e} exceeds {tol:e}")));
        }
    }
    Ok(())
}
