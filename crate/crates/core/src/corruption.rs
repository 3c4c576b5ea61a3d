//! Forward corruption chains.
//!
//! A chain is the sequence of noiseless lattice states `u_0, u_1, .., u_K`
//! taken at the schedule nodes. Training and sampling noise never enter the
//! chain itself; they are added on the fly by [`add_training_noise`] and the
//! reverse sampler.
//!
//! Snapshots are stored on the [`EXACT_GRID`](crate::field::EXACT_GRID) so
//! that `u_hat + (u_{k-1} - u_hat)` reproduces `u_{k-1}` bit for bit.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{AdeError, Result};
use crate::field::{fixed_order_sum, snap_to_grid, FieldStack, VelocityField};
use crate::io::manifest::RunManifest;
use crate::io::{self, pnm, tensor::Tensor};
use crate::lattice::{self, check_step_tau, init_from_image, macro_update, Precision, Real};
use crate::noise::{mix_seed, NormalStream};
use crate::schedule::{DiffusionSchedule, PecletReference, ScheduleParams, DEFAULT_SIGMA_MIN};
use crate::turbulence::{AmplitudeConvention, TurbulenceGenerator, TurbulenceSpec};

/// Provenance carried by every chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainMeta {
    pub seed: u64,
    pub pe: f64,
    pub fo: Vec<f64>,
    pub length: usize,
    /// `None` when advection was disabled.
    pub turbulence: Option<TurbulenceSpec>,
    pub precision: Precision,
}

/// `K + 1` noiseless snapshots laid out `[K + 1, C, H, W]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionChain {
    pub steps: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub snapshots: Vec<f64>,
    pub meta: ChainMeta,
}

impl CorruptionChain {
    /// Chain from raw snapshots, e.g. read back from a tensor file.
    pub fn from_snapshots(
        snapshots: Vec<FieldStack>,
        meta: ChainMeta,
    ) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| AdeError::Shape("chain needs at least one snapshot".into()))?;
        let [c, h, w] = first.shape();
        let mut data = Vec::with_capacity(snapshots.len() * c * h * w);
        for s in &snapshots {
            if s.shape() != [c, h, w] {
                return Err(AdeError::Shape("snapshots differ in shape".into()));
            }
            data.extend_from_slice(&s.data);
        }
        Ok(CorruptionChain {
            steps: snapshots.len() - 1,
            channels: c,
            height: h,
            width: w,
            snapshots: data,
            meta,
        })
    }

    fn snapshot_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn snapshot_slice(&self, k: usize) -> &[f64] {
        let n = self.snapshot_len();
        &self.snapshots[k * n..(k + 1) * n]
    }

    pub fn snapshot(&self, k: usize) -> FieldStack {
        FieldStack {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.snapshot_slice(k).to_vec(),
        }
    }

    /// Terminal (blurriest) state `u_K`.
    pub fn prior(&self) -> FieldStack {
        self.snapshot(self.steps)
    }

    /// Per-channel totals of snapshot `k`, summed in a fixed order.
    pub fn channel_mass(&self, k: usize) -> Vec<f64> {
        let plane = self.height * self.width;
        self.snapshot_slice(k)
            .chunks_exact(plane)
            .map(fixed_order_sum)
            .collect()
    }

    pub fn to_tensor(&self) -> Tensor {
        let dims = vec![self.steps + 1, self.channels, self.height, self.width];
        match self.meta.precision {
            Precision::F32 => Tensor::from_f32(dims, self.snapshots.iter().map(|&v| v as f32).collect()),
            Precision::F64 => Tensor::from_f64(dims, self.snapshots.clone()),
        }
        .expect("chain dims match its data")
    }

    /// Chain from a `[K + 1, C, H, W]` tensor.
    pub fn from_tensor(t: &Tensor, meta: ChainMeta) -> Result<Self> {
        if t.dims().len() != 4 {
            return Err(AdeError::Shape(format!(
                "chain tensor must be 4-D [K+1, C, H, W], got {:?}",
                t.dims()
            )));
        }
        let d = t.dims();
        if d[0] == 0 {
            return Err(AdeError::Shape("chain tensor has no snapshots".into()));
        }
        Ok(CorruptionChain {
            steps: d[0] - 1,
            channels: d[1],
            height: d[2],
            width: d[3],
            snapshots: t.to_f64_vec(),
            meta,
        })
    }
}

/// Training and sampling noise levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub sigma_t: f64,
    pub sigma_s: f64,
}

impl NoiseParams {
    pub const DEFAULT_SIGMA_T: f64 = 0.01;
    pub const TRAIN_TO_SAMPLE_RATIO: f64 = 1.25;

    /// Sampling noise fixed at `sigma_t / 1.25`.
    pub fn from_training(sigma_t: f64) -> Result<Self> {
        Self::new(sigma_t, sigma_t / Self::TRAIN_TO_SAMPLE_RATIO)
    }

    pub fn new(sigma_t: f64, sigma_s: f64) -> Result<Self> {
        if !(sigma_t >= 0.0) || !(sigma_s >= 0.0) {
            return Err(AdeError::Spec(format!(
                "noise levels must be non-negative, got {sigma_t} / {sigma_s}"
            )));
        }
        Ok(NoiseParams { sigma_t, sigma_s })
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self::from_training(Self::DEFAULT_SIGMA_T).unwrap()
    }
}

/// Everything [`forward_chain`] needs besides the image.
#[derive(Debug, Clone)]
pub struct ForwardConfig {
    pub schedule: DiffusionSchedule,
    /// `None` disables advection entirely.
    pub turbulence: Option<TurbulenceSpec>,
    pub seed: u64,
    pub precision: Precision,
}

struct ScheduledTurbulence<'a> {
    generator: Option<TurbulenceGenerator>,
    schedule: &'a DiffusionSchedule,
    nx: usize,
    ny: usize,
}

impl ScheduledTurbulence<'_> {
    fn velocity(&self, step: u64) -> Result<VelocityField> {
        match &self.generator {
            Some(g) => g.generate(step, self.schedule.target_rms_at(step)),
            None => Ok(VelocityField::zeros(self.nx, self.ny)),
        }
    }
}

/// Runs the lattice solver through every interval of the schedule and
/// records the state at each schedule node.
///
/// All channels share one velocity sequence.
pub fn forward_chain(u0: &FieldStack, config: &ForwardConfig) -> Result<CorruptionChain> {
    u0.ensure_finite("initial image")?;
    match config.precision {
        Precision::F32 => run_chain::<f32>(u0, config),
        Precision::F64 => run_chain::<f64>(u0, config),
    }
}

fn run_chain<F: Real>(u0: &FieldStack, config: &ForwardConfig) -> Result<CorruptionChain> {
    let (nx, ny) = (u0.width, u0.height);
    let generator = match &config.turbulence {
        Some(spec) => {
            if spec.nx != nx || spec.ny != ny {
                return Err(AdeError::Shape(format!(
                    "turbulence grid {}x{} does not match image {nx}x{ny}",
                    spec.nx, spec.ny
                )));
            }
            Some(TurbulenceGenerator::new(spec.clone(), config.seed)?)
        }
        None => None,
    };
    let source = ScheduledTurbulence {
        generator,
        schedule: &config.schedule,
        nx,
        ny,
    };

    let start = FieldStack {
        data: u0.data.iter().map(|&v| snap_to_grid(v)).collect(),
        ..u0.clone()
    };
    let mut states = start
        .channel_fields()
        .iter()
        .map(init_from_image::<F>)
        .collect::<Result<Vec<_>>>()?;

    let k_total = config.schedule.plan.len();
    let mut snapshots = Vec::with_capacity((k_total + 1) * start.data.len());
    snapshots.extend_from_slice(&start.data);

    let mut step = 0u64;
    for (k, plan) in config.schedule.plan.iter().enumerate() {
        let wrap = |e: AdeError| AdeError::Interval {
            interval: k,
            source: Box::new(e),
        };
        if plan.n_steps > 0 {
            check_step_tau(plan.tau).map_err(wrap)?;
        }
        for _ in 0..plan.n_steps {
            let v = source.velocity(step).map_err(wrap)?;
            states
                .par_iter_mut()
                .try_for_each(|s| lattice::step_with_velocity(s, &v, plan.tau))
                .map_err(wrap)?;
            step += 1;
        }
        for s in &states {
            let u = macro_update(s);
            u.ensure_finite("lattice state").map_err(wrap)?;
            snapshots.extend(u.values.iter().map(|&v| snap_to_grid(v)));
        }
    }

    Ok(CorruptionChain {
        steps: k_total,
        channels: u0.channels,
        height: ny,
        width: nx,
        snapshots,
        meta: ChainMeta {
            seed: config.seed,
            pe: config.schedule.pe,
            fo: config.schedule.fo.clone(),
            length: config.schedule.length,
            turbulence: config.turbulence.clone(),
            precision: F::PRECISION,
        },
    })
}

/// Returns `u + eps` with `eps ~ N(0, sigma^2)` per pixel.
pub fn add_training_noise(u: &FieldStack, sigma: f64, rng: &mut NormalStream) -> Result<FieldStack> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(AdeError::Spec(format!("noise level {sigma} must be non-negative")));
    }
    let mut out = u.clone();
    if sigma == 0.0 {
        return Ok(out);
    }
    for v in out.data.iter_mut() {
        *v += sigma * rng.next_standard();
    }
    Ok(out)
}

/// Network input and regression target for one chain step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub step: usize,
    /// `u_hat_k = u_k + eps_T`.
    pub input: FieldStack,
    /// `u_{k-1} - u_hat_k`: adding it to the input recovers `u_{k-1}`.
    pub target: FieldStack,
}

impl TrainingPair {
    /// Squared L2 distance between a predicted difference and the target.
    pub fn loss(&self, prediction: &FieldStack) -> Result<f64> {
        if !prediction.same_shape(&self.target) {
            return Err(AdeError::Shape("prediction does not match target shape".into()));
        }
        Ok(prediction
            .data
            .iter()
            .zip(&self.target.data)
            .map(|(p, t)| (p - t) * (p - t))
            .sum())
    }
}

pub fn make_training_pair(
    chain: &CorruptionChain,
    k: usize,
    noise: &NoiseParams,
    rng: &mut NormalStream,
) -> Result<TrainingPair> {
    if k == 0 || k > chain.steps {
        return Err(AdeError::Index(format!(
            "training step {k} outside 1..={}",
            chain.steps
        )));
    }
    let mut input = add_training_noise(&chain.snapshot(k), noise.sigma_t, rng)?;
    input.data.iter_mut().for_each(|v| *v = snap_to_grid(*v));
    let prev = chain.snapshot_slice(k - 1);
    let target = FieldStack {
        data: prev.iter().zip(&input.data).map(|(p, u)| p - u).collect(),
        ..input.clone()
    };
    Ok(TrainingPair {
        step: k,
        input,
        target,
    })
}

/// Chain parameters in user-facing units (blur scales in pixels of the image
/// width).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub steps: usize,
    pub pe: f64,
    pub tau_max: f64,
    pub seed: u64,
    pub precision: Precision,
    pub turbulence: bool,
    pub slope: f64,
    pub band: Option<[f64; 2]>,
    pub dt_turb: f64,
    pub cap: f64,
    pub sharpness: f64,
    pub convention: AmplitudeConvention,
    pub peclet_reference: PecletReference,
}

impl Default for ChainParams {
    fn default() -> Self {
        let t = TurbulenceSpec::square(2);
        ChainParams {
            sigma_min: DEFAULT_SIGMA_MIN,
            sigma_max: 16.0,
            steps: 10,
            pe: 0.0,
            tau_max: crate::schedule::DEFAULT_TAU_MAX,
            seed: 0,
            precision: Precision::F64,
            turbulence: true,
            slope: t.slope,
            band: None,
            dt_turb: t.dt_turb,
            cap: t.cap,
            sharpness: t.sharpness,
            convention: t.convention,
            peclet_reference: PecletReference::PerInterval,
        }
    }
}

impl ChainParams {
    pub fn schedule(&self, width: usize) -> Result<DiffusionSchedule> {
        let mut p = ScheduleParams::from_sigmas(self.sigma_min, self.sigma_max, self.steps, width, self.pe)?;
        p.tau_max = self.tau_max;
        p.velocity_cap = self.cap;
        p.peclet_reference = self.peclet_reference;
        DiffusionSchedule::new(&p)
    }

    pub fn turbulence_spec(&self, width: usize, height: usize) -> TurbulenceSpec {
        TurbulenceSpec {
            nx: width,
            ny: height,
            slope: self.slope,
            band: self.band,
            dt_turb: self.dt_turb,
            cap: self.cap,
            sharpness: self.sharpness,
            convention: self.convention,
        }
    }

    pub fn forward_config(&self, width: usize, height: usize, seed: u64) -> Result<ForwardConfig> {
        Ok(ForwardConfig {
            schedule: self.schedule(width)?,
            turbulence: self.turbulence.then(|| self.turbulence_spec(width, height)),
            seed,
            precision: self.precision,
        })
    }
}

/// Outcome of [`precompute_dataset`].
#[derive(Debug, Clone, Default)]
pub struct DatasetReport {
    pub written: Vec<PathBuf>,
    pub failures: Vec<(PathBuf, String)>,
    pub manifest: PathBuf,
}

/// Name of the manifest written next to precomputed chains.
pub const DATASET_MANIFEST: &str = "dataset.manifest";

/// Precomputes one chain tensor per portable-map image in `input_dir`.
///
/// Images are processed in file-name order; image `i` is seeded with
/// `mix_seed(params.seed, i)`. Unreadable or mis-sized images are reported
/// and skipped.
pub fn precompute_dataset(input_dir: &Path, params: &ChainParams, out_dir: &Path) -> Result<DatasetReport> {
    let mut inputs: Vec<PathBuf> = std::fs::read_dir(input_dir)
        .map_err(|e| AdeError::io(input_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && pnm::has_pnm_extension(p))
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        return Err(AdeError::Input(format!(
            "no .pgm/.ppm images in {}",
            input_dir.display()
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| AdeError::io(out_dir, e))?;

    let loaded: Vec<Result<(pnm::PnmImage, String)>> = inputs
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| AdeError::io(p, e))?;
            let img = pnm::decode(&bytes)?;
            Ok((img, io::sha256_hex(&bytes)))
        })
        .collect();
    let reference = loaded
        .iter()
        .find_map(|r| r.as_ref().ok().map(|(img, _)| img.stack.shape()));

    let results: Vec<Result<(PathBuf, String, u64)>> = inputs
        .par_iter()
        .zip(loaded.par_iter())
        .enumerate()
        .map(|(i, (path, img))| {
            let (img, _) = img.as_ref().map_err(|e| AdeError::Input(e.to_string()))?;
            if Some(img.stack.shape()) != reference {
                return Err(AdeError::Shape(format!(
                    "image is {:?}, dataset uses {:?}",
                    img.stack.shape(),
                    reference
                )));
            }
            let seed = mix_seed(params.seed, i as u64);
            let cfg = params.forward_config(img.stack.width, img.stack.height, seed)?;
            let chain = forward_chain(&img.stack, &cfg)?;
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
            let out = out_dir.join(format!("{stem}.chain.adet"));
            let bytes = chain.to_tensor().to_bytes();
            io::atomic_write(&out, &bytes)?;
            Ok((out, io::sha256_hex(&bytes), seed))
        })
        .collect();

    let mut report = DatasetReport::default();
    let mut manifest = RunManifest::for_chain_params(params);
    manifest.set("command", "chain");
    manifest.set("input_dir", input_dir.display().to_string());
    manifest.set("output_dir", out_dir.display().to_string());
    let mut index = 0usize;
    for ((path, res), load) in inputs.iter().zip(results).zip(&loaded) {
        match res {
            Ok((out, hash, seed)) => {
                let name = path.file_name().unwrap().to_string_lossy().to_string();
                manifest.set(&format!("image.{index}.name"), name);
                manifest.set(&format!("image.{index}.seed"), seed.to_string());
                if let Ok((_, in_hash)) = load {
                    manifest.set(&format!("image.{index}.input_sha256"), in_hash.clone());
                }
                manifest.set(&format!("image.{index}.output_sha256"), hash);
                report.written.push(out);
                index += 1;
            }
            Err(e) => report.failures.push((path.clone(), e.to_string())),
        }
    }
    manifest.set("images", index.to_string());
    manifest.set("failures", report.failures.len().to_string());
    let mpath = out_dir.join(DATASET_MANIFEST);
    io::atomic_write(&mpath, manifest.to_text().as_bytes())?;
    report.manifest = mpath;
    Ok(report)
}
