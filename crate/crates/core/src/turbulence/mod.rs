//! Random-Fourier-mode turbulence.
//!
//! Each velocity component is synthesised in Fourier space as
//! `A(|k|) exp(i (phi(k) + omega(k) t))` with phases drawn once per generator,
//! brought back to real space with an inverse 2D DFT (real part), rescaled to
//! a target standard deviation, and finally passed through a tanh speed
//! limiter so that no node exceeds the cap.

pub mod fft;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{AdeError, Result};
use crate::field::VelocityField;
use crate::noise::{streams, UniformStream};
use fft::{frequency_index, Fft2};

/// Below this target RMS the generator returns the zero field.
pub const ZERO_RMS_GUARD: f64 = 1e-14;

/// Magnitudes below this use a fixed direction factor in the limiter.
pub const SMALL_MAGNITUDE: f64 = 1e-9;

/// How the spectral exponent maps to Fourier amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmplitudeConvention {
    /// `A = |k|^((slope - 1) / 2)`: the shell-summed energy spectrum of the
    /// synthesised field falls off as `|k|^slope`.
    #[default]
    EnergySpectrum,
    /// `A = |k|^slope`: the power law is assigned to the amplitude directly.
    Amplitude,
}

impl AmplitudeConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            AmplitudeConvention::EnergySpectrum => "energy",
            AmplitudeConvention::Amplitude => "amplitude",
        }
    }
}

impl std::str::FromStr for AmplitudeConvention {
    type Err = AdeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy" => Ok(AmplitudeConvention::EnergySpectrum),
            "amplitude" => Ok(AmplitudeConvention::Amplitude),
            other => Err(AdeError::Spec(format!("unknown amplitude convention '{other}'"))),
        }
    }
}

/// Parameters of a turbulence generator.
#[derive(Debug, Clone, PartialEq)]
pub struct TurbulenceSpec {
    pub nx: usize,
    pub ny: usize,
    /// Spectral exponent.
    pub slope: f64,
    /// `[k_min, k_max]` in radians per grid length; `None` selects the
    /// default band.
    pub band: Option<[f64; 2]>,
    /// Phase advance per step is `|k| * dt_turb`.
    pub dt_turb: f64,
    /// Maximum node speed after limiting.
    pub cap: f64,
    pub sharpness: f64,
    pub convention: AmplitudeConvention,
}

impl TurbulenceSpec {
    pub fn square(n: usize) -> Self {
        Self::rect(n, n)
    }

    pub fn rect(nx: usize, ny: usize) -> Self {
        TurbulenceSpec {
            nx,
            ny,
            slope: -2.0,
            band: None,
            dt_turb: 1e-4,
            cap: 1e-3,
            sharpness: 1.0,
            convention: AmplitudeConvention::default(),
        }
    }

    /// `[2 pi / N, min(1024 * 2 pi / N, pi N)]` with `N = min(nx, ny)`.
    pub fn default_band(nx: usize, ny: usize) -> [f64; 2] {
        let n = nx.min(ny) as f64;
        let k_min = TAU / n;
        let nyquist = PI * n;
        [k_min, (1024.0 * TAU / n).min(nyquist)]
    }

    pub fn resolved_band(&self) -> [f64; 2] {
        self.band.unwrap_or_else(|| Self::default_band(self.nx, self.ny))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(AdeError::Spec(format!(
                "turbulence grid must be at least 2x2, got {}x{}",
                self.nx, self.ny
            )));
        }
        let [lo, hi] = self.resolved_band();
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(AdeError::Spec(format!("empty wavenumber band [{lo}, {hi}]")));
        }
        if !(self.cap > 0.0) || !self.cap.is_finite() {
            return Err(AdeError::Spec(format!("velocity cap {} must be positive", self.cap)));
        }
        if !self.slope.is_finite() || !self.dt_turb.is_finite() || !(self.sharpness > 0.0) {
            return Err(AdeError::Spec("slope, dt_turb and sharpness must be finite, sharpness > 0".into()));
        }
        Ok(())
    }
}

/// Per-mode tables fixed at generator construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTable {
    pub phase_u: Vec<f64>,
    pub phase_v: Vec<f64>,
    pub omega: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// Wavenumber magnitude `|k|` per bin.
    pub wavenumber: Vec<f64>,
}

/// Immutable turbulence generator; `generate` may be called concurrently.
#[derive(Debug, Clone)]
pub struct TurbulenceGenerator {
    spec: TurbulenceSpec,
    seed: u64,
    table: PhaseTable,
    fft: Fft2,
}

impl TurbulenceGenerator {
    pub fn new(spec: TurbulenceSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let (nx, ny) = (spec.nx, spec.ny);
        let [k_min, k_max] = spec.resolved_band();
        let mut wavenumber = Vec::with_capacity(nx * ny);
        for y in 0..ny {
            let ky = TAU * frequency_index(y, ny) as f64;
            for x in 0..nx {
                let kx = TAU * frequency_index(x, nx) as f64;
                wavenumber.push((kx * kx + ky * ky).sqrt());
            }
        }
        let exponent = match spec.convention {
            AmplitudeConvention::EnergySpectrum => 0.5 * (spec.slope - 1.0),
            AmplitudeConvention::Amplitude => spec.slope,
        };
        let amplitude = wavenumber
            .iter()
            .map(|&k| {
                if k != 0.0 && k >= k_min && k <= k_max {
                    k.powf(exponent)
                } else {
                    0.0
                }
            })
            .collect();
        let omega = wavenumber.iter().map(|&k| k * spec.dt_turb).collect();
        let mut pu = UniformStream::new(seed, streams::PHASE_U);
        let mut pv = UniformStream::new(seed, streams::PHASE_V);
        let phase_u = (0..nx * ny).map(|_| TAU * pu.next_unit()).collect();
        let phase_v = (0..nx * ny).map(|_| TAU * pv.next_unit()).collect();
        let fft = Fft2::new(nx, ny)?;
        Ok(TurbulenceGenerator {
            spec,
            seed,
            table: PhaseTable {
                phase_u,
                phase_v,
                omega,
                amplitude,
                wavenumber,
            },
            fft,
        })
    }

    pub fn spec(&self) -> &TurbulenceSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn table(&self) -> &PhaseTable {
        &self.table
    }

    fn component(&self, phases: &[f64], step: u64) -> Result<Vec<f64>> {
        let t = step as f64;
        let mut hat: Vec<Complex64> = self
            .table
            .amplitude
            .iter()
            .zip(phases)
            .zip(&self.table.omega)
            .map(|((&a, &phi), &w)| Complex64::from_polar(a, phi + w * t))
            .collect();
        self.fft.inverse(&mut hat)?;
        Ok(hat.into_iter().map(|c| c.re).collect())
    }

    /// Raw real-space components before RMS rescaling and limiting.
    pub fn synthesize(&self, step: u64) -> Result<VelocityField> {
        let vx = self.component(&self.table.phase_u, step)?;
        let vy = self.component(&self.table.phase_v, step)?;
        VelocityField::from_components(self.spec.nx, self.spec.ny, vx, vy)
    }

    /// Field rescaled so each component has standard deviation `target_rms`,
    /// without the speed limiter.
    pub fn generate_unlimited(&self, step: u64, target_rms: f64) -> Result<VelocityField> {
        if !(target_rms >= 0.0) || !target_rms.is_finite() {
            return Err(AdeError::Spec(format!("target RMS {target_rms} must be non-negative")));
        }
        let (nx, ny) = (self.spec.nx, self.spec.ny);
        if target_rms < ZERO_RMS_GUARD {
            return Ok(VelocityField::zeros(nx, ny));
        }
        let mut field = self.synthesize(step)?;
        let sx = population_std(&field.vx);
        let sy = population_std(&field.vy);
        if sx == 0.0 || sy == 0.0 {
            return Ok(VelocityField::zeros(nx, ny));
        }
        let (gx, gy) = (target_rms / sx, target_rms / sy);
        field.vx.iter_mut().for_each(|v| *v *= gx);
        field.vy.iter_mut().for_each(|v| *v *= gy);
        Ok(field)
    }

    /// Rescaled and speed-limited field for `step`.
    pub fn generate(&self, step: u64, target_rms: f64) -> Result<VelocityField> {
        let mut field = self.generate_unlimited(step, target_rms)?;
        if target_rms < ZERO_RMS_GUARD {
            return Ok(field);
        }
        limit_velocity(&mut field, -self.spec.cap, self.spec.cap, self.spec.sharpness)?;
        Ok(field)
    }
}

/// Population standard deviation (divides by N).
pub fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Smooth clamp of `x` into `(min_val, max_val)` centred on their midpoint.
pub fn tanh_limiter(x: f64, min_val: f64, max_val: f64, sharpness: f64) -> Result<f64> {
    if !(min_val < max_val) {
        return Err(AdeError::Spec(format!(
            "limiter bounds [{min_val}, {max_val}] are empty"
        )));
    }
    let mid = 0.5 * (max_val + min_val);
    let range = 0.5 * (max_val - min_val);
    Ok(mid + range * (sharpness * (x - mid) / range).tanh())
}

fn speed(vx: f64, vy: f64) -> f64 {
    (vx * vx + vy * vy).sqrt()
}

/// Limits each node's speed with [`tanh_limiter`], keeping its direction.
///
/// Nodes slower than [`SMALL_MAGNITUDE`] are scaled by that constant instead.
pub fn limit_velocity(
    field: &mut VelocityField,
    min_val: f64,
    max_val: f64,
    sharpness: f64,
) -> Result<()> {
    if !(min_val < max_val) {
        return Err(AdeError::Spec(format!(
            "limiter bounds [{min_val}, {max_val}] are empty"
        )));
    }
    for (vx, vy) in field.vx.iter_mut().zip(field.vy.iter_mut()) {
        let m = speed(*vx, *vy);
        if m < SMALL_MAGNITUDE {
            *vx *= SMALL_MAGNITUDE;
            *vy *= SMALL_MAGNITUDE;
            continue;
        }
        // tanh saturates to 1.0 in floating point; keep the speed strictly inside the band
        let target = tanh_limiter(m, min_val, max_val, sharpness)?.min(max_val.next_down());
        let mut factor = target / m;
        while factor > 0.0 && speed(*vx * factor, *vy * factor) > target {
            factor = factor.next_down();
        }
        *vx *= factor;
        *vy *= factor;
    }
    Ok(())
}
