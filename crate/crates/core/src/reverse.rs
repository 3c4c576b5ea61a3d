//! Reverse-chain sampling.
//!
//! Starting from a blurry prior `u_K`, each step perturbs the state with
//! sampling noise, asks a [`Predictor`] for the difference to the previous
//! state and adds it:
//!
//! ```text
//! for k = K..1:  u_hat = u + sigma_s * eps;  u = u_hat + predict(u_hat, k)
//! ```
//!
//! The learned network is replaced by the [`Predictor`] trait. The oracle
//! predictor reads a stored forward chain; [`ExternalPredictor`] exchanges
//! tensor files with a separate process.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::corruption::{CorruptionChain, NoiseParams};
use crate::error::{AdeError, Result};
use crate::field::{snap_to_grid, FieldStack};
use crate::io::tensor::{read_tensor, write_tensor, Tensor};
use crate::noise::{streams, NormalStream};

/// Per-step difference model.
///
/// Implementations are shared across threads; stateful ones serialise
/// internally.
pub trait Predictor: Sync {
    /// Returns `delta` with the same shape as `u_hat` so that `u_hat + delta`
    /// estimates the state at step `k - 1`.
    fn predict(&self, u_hat: &FieldStack, k: usize) -> Result<FieldStack>;
}

/// Returns `snapshot_{k-1} - u_hat` from a stored chain.
#[derive(Debug, Clone)]
pub struct OraclePredictor {
    chain: CorruptionChain,
}

impl OraclePredictor {
    pub fn new(chain: &CorruptionChain) -> Self {
        let mut chain = chain.clone();
        chain.snapshots.iter_mut().for_each(|v| *v = snap_to_grid(*v));
        OraclePredictor { chain }
    }

    pub fn chain(&self) -> &CorruptionChain {
        &self.chain
    }
}

impl Predictor for OraclePredictor {
    fn predict(&self, u_hat: &FieldStack, k: usize) -> Result<FieldStack> {
        if k == 0 || k > self.chain.steps {
            return Err(AdeError::Index(format!(
                "oracle chain has steps 1..={}, asked for {k}",
                self.chain.steps
            )));
        }
        let c = &self.chain;
        if u_hat.shape() != [c.channels, c.height, c.width] {
            return Err(AdeError::Shape(format!(
                "state {:?} does not match chain {:?}",
                u_hat.shape(),
                [c.channels, c.height, c.width]
            )));
        }
        let prev = c.snapshot_slice(k - 1);
        Ok(FieldStack {
            data: prev.iter().zip(&u_hat.data).map(|(p, u)| p - u).collect(),
            ..u_hat.clone()
        })
    }
}

/// Always predicts zero change.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPredictor;

impl Predictor for ZeroPredictor {
    fn predict(&self, u_hat: &FieldStack, _k: usize) -> Result<FieldStack> {
        Ok(FieldStack::zeros(u_hat.channels, u_hat.height, u_hat.width))
    }
}

/// File handshake with an out-of-process model.
///
/// For step `k` the sampler writes `request_<k>.adet` (the `[C, H, W]` state)
/// into the exchange directory and waits for the peer to write
/// `response_<k>.adet` holding the difference. Step numbers are zero padded
/// to six digits. Both files are removed once the response is read. Peers
/// should write the response under a temporary name and rename it.
#[derive(Debug)]
pub struct ExternalPredictor {
    dir: PathBuf,
    timeout: Duration,
    poll: Duration,
    lock: Mutex<()>,
}

impl ExternalPredictor {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| AdeError::io(&dir, e))?;
        Ok(ExternalPredictor {
            dir,
            timeout: Self::DEFAULT_TIMEOUT,
            poll: Duration::from_millis(5),
            lock: Mutex::new(()),
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn request_path(dir: &Path, k: usize) -> PathBuf {
        dir.join(format!("request_{k:06}.adet"))
    }

    pub fn response_path(dir: &Path, k: usize) -> PathBuf {
        dir.join(format!("response_{k:06}.adet"))
    }
}

impl Predictor for ExternalPredictor {
    fn predict(&self, u_hat: &FieldStack, k: usize) -> Result<FieldStack> {
        let _guard = self.lock.lock().unwrap_or_else(|p| p.into_inner());
        let req = Self::request_path(&self.dir, k);
        let resp = Self::response_path(&self.dir, k);
        let dims = vec![u_hat.channels, u_hat.height, u_hat.width];
        write_tensor(&req, &Tensor::from_f64(dims.clone(), u_hat.data.clone())?)?;
        let start = Instant::now();
        while !resp.exists() {
            if start.elapsed() > self.timeout {
                let _ = std::fs::remove_file(&req);
                return Err(AdeError::Input(format!(
                    "no response at {} after {:?}",
                    resp.display(),
                    self.timeout
                )));
            }
            std::thread::sleep(self.poll);
        }
        let t = read_tensor(&resp)?;
        let _ = std::fs::remove_file(&resp);
        let _ = std::fs::remove_file(&req);
        if t.dims() != dims.as_slice() {
            return Err(AdeError::Shape(format!(
                "response has shape {:?}, expected {dims:?}",
                t.dims()
            )));
        }
        FieldStack::from_vec(u_hat.channels, u_hat.height, u_hat.width, t.to_f64_vec())
    }
}

/// Source of standard-normal sampling noise, one draw per pixel per step.
pub trait NoiseSource {
    fn fill(&mut self, k: usize, out: &mut [f64]) -> Result<()>;
}

/// Independent Gaussian draws from one seeded stream.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    stream: NormalStream,
}

impl GaussianNoise {
    pub fn new(seed: u64) -> Self {
        GaussianNoise {
            stream: NormalStream::new(seed, streams::SAMPLING_NOISE),
        }
    }
}

impl NoiseSource for GaussianNoise {
    fn fill(&mut self, _k: usize, out: &mut [f64]) -> Result<()> {
        self.stream.fill_standard(out);
        Ok(())
    }
}

/// SLERP between the draws of two seeded Gaussian streams.
#[derive(Debug, Clone)]
pub struct SlerpNoise {
    a: NormalStream,
    b: NormalStream,
    t: f64,
    scratch: (Vec<f64>, Vec<f64>),
}

impl SlerpNoise {
    pub fn new(seed_a: u64, seed_b: u64, t: f64) -> Self {
        SlerpNoise {
            a: NormalStream::new(seed_a, streams::SAMPLING_NOISE),
            b: NormalStream::new(seed_b, streams::SAMPLING_NOISE),
            t,
            scratch: (Vec::new(), Vec::new()),
        }
    }
}

impl NoiseSource for SlerpNoise {
    fn fill(&mut self, _k: usize, out: &mut [f64]) -> Result<()> {
        let (a, b) = &mut self.scratch;
        a.resize(out.len(), 0.0);
        b.resize(out.len(), 0.0);
        self.a.fill_standard(a);
        self.b.fill_standard(b);
        out.copy_from_slice(&slerp(a, b, self.t)?);
        Ok(())
    }
}

/// Below this angle the endpoints are treated as collinear.
pub const SLERP_LINEAR_ANGLE: f64 = 1e-7;

/// Spherical linear interpolation between two vectors.
pub fn slerp(a: &[f64], b: &[f64], t: f64) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(AdeError::Shape(format!("slerp of lengths {} and {}", a.len(), b.len())));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(AdeError::Domain(format!("slerp parameter {t} outside [0, 1]")));
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if !(na > 0.0) || !(nb > 0.0) {
        return Err(AdeError::Domain("slerp of a zero vector".into()));
    }
    if t == 0.0 {
        return Ok(a.to_vec());
    }
    if t == 1.0 {
        return Ok(b.to_vec());
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let omega = (dot / (na * nb)).clamp(-1.0, 1.0).acos();
    if omega < SLERP_LINEAR_ANGLE {
        return Ok(a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect());
    }
    if std::f64::consts::PI - omega < SLERP_LINEAR_ANGLE {
        return Err(AdeError::Domain("slerp between opposite vectors is undefined".into()));
    }
    let s = omega.sin();
    let (ca, cb) = (((1.0 - t) * omega).sin() / s, (t * omega).sin() / s);
    Ok(a.iter().zip(b).map(|(x, y)| ca * x + cb * y).collect())
}

/// Result of [`sample`].
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub output: FieldStack,
    /// `u_K, .., u_0` stored in chain order (index `k` holds `u_k`) when
    /// recording was requested.
    pub trajectory: Option<Vec<FieldStack>>,
}

impl Sample {
    /// Trajectory as a `[K + 1, C, H, W]` tensor.
    pub fn trajectory_tensor(&self) -> Option<Tensor> {
        let t = self.trajectory.as_ref()?;
        let [c, h, w] = t[0].shape();
        let data: Vec<f64> = t.iter().flat_map(|s| s.data.iter().copied()).collect();
        Tensor::from_f64(vec![t.len(), c, h, w], data).ok()
    }
}

/// Runs `k = steps..1` reverse steps from `prior`.
///
/// States are kept on the exact grid after noise injection, so that a
/// predictor returning `target - u_hat` lands on `target` without rounding.
/// Intermediate states are never clamped.
pub fn sample(
    prior: &FieldStack,
    predictor: &dyn Predictor,
    steps: usize,
    sigma_s: f64,
    noise: &mut dyn NoiseSource,
    record: bool,
) -> Result<Sample> {
    if steps == 0 {
        return Err(AdeError::Spec("reverse sampling needs at least one step".into()));
    }
    if !(sigma_s >= 0.0) || !sigma_s.is_finite() {
        return Err(AdeError::Spec(format!("sampling noise {sigma_s} must be non-negative")));
    }
    prior.ensure_finite("prior")?;
    let mut u = prior.clone();
    let mut eps = vec![0.0; u.data.len()];
    let mut trajectory = record.then(|| {
        let mut t = vec![FieldStack::zeros(0, 0, 0); steps + 1];
        t[steps] = u.clone();
        t
    });
    for k in (1..=steps).rev() {
        let wrap = |e: AdeError| AdeError::Predictor {
            step: k,
            source: Box::new(e),
        };
        noise.fill(k, &mut eps).map_err(wrap)?;
        for (v, e) in u.data.iter_mut().zip(&eps) {
            *v = snap_to_grid(*v + sigma_s * e);
        }
        let delta = predictor.predict(&u, k).map_err(wrap)?;
        if !delta.same_shape(&u) {
            return Err(wrap(AdeError::Shape(format!(
                "prediction {:?} for state {:?}",
                delta.shape(),
                u.shape()
            ))));
        }
        for (v, d) in u.data.iter_mut().zip(&delta.data) {
            *v += d;
        }
        u.ensure_finite("reverse state").map_err(wrap)?;
        if let Some(t) = trajectory.as_mut() {
            t[k - 1] = u.clone();
        }
    }
    Ok(Sample {
        output: u,
        trajectory,
    })
}

/// `(1 - lambda) * prior(A) + lambda * prior(B)`.
pub fn interpolate_priors(a: &CorruptionChain, b: &CorruptionChain, lambda: f64) -> Result<FieldStack> {
    if [a.steps, a.channels, a.height, a.width] != [b.steps, b.channels, b.height, b.width] {
        return Err(AdeError::Shape("chains differ in shape".into()));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(AdeError::Domain(format!("lambda {lambda} outside [0, 1]")));
    }
    let (pa, pb) = (a.snapshot_slice(a.steps), b.snapshot_slice(b.steps));
    let data = if lambda == 0.0 {
        pa.to_vec()
    } else if lambda == 1.0 {
        pb.to_vec()
    } else {
        pa.iter().zip(pb).map(|(x, y)| (1.0 - lambda) * x + lambda * y).collect()
    };
    FieldStack::from_vec(a.channels, a.height, a.width, data)
}

/// One generated image per `lambda`: the interpolated prior is denoised with
/// sampling noise that is, at every step, the SLERP of the per-seed draws.
pub fn interpolation_run(
    a: &CorruptionChain,
    b: &CorruptionChain,
    predictor: &dyn Predictor,
    lambdas: &[f64],
    noise: &NoiseParams,
    seed_a: u64,
    seed_b: u64,
) -> Result<Vec<FieldStack>> {
    lambdas
        .par_iter()
        .map(|&lambda| {
            let prior = interpolate_priors(a, b, lambda)?;
            let mut source = SlerpNoise::new(seed_a, seed_b, lambda);
            Ok(sample(&prior, predictor, a.steps, noise.sigma_s, &mut source, false)?.output)
        })
        .collect()
}

/// Evenly spaced grid `0, 1/(n-1), .., 1`.
pub fn lambda_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| if i == n - 1 { 1.0 } else { i as f64 / (n - 1) as f64 })
            .collect(),
    }
}
