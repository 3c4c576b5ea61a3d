//! Dimensionless scheduling.
//!
//! A chain is specified in Fourier numbers (`Fo = alpha t / L^2`) so that the
//! same schedule applies to any resolution. Each interval between consecutive
//! schedule nodes is turned into an integer number of lattice steps at a
//! constant relaxation time, chosen so that the lattice diffusion budget of
//! the interval equals its `dFo` exactly.

use crate::error::{AdeError, Result};
use crate::lattice::{tau_from_alpha, TAU_MAX_STABLE};

pub const DEFAULT_TAU_MAX: f64 = 1.0;
pub const DEFAULT_VELOCITY_CAP: f64 = 1e-3;
/// Blur scale (pixels) of the default first schedule node.
pub const DEFAULT_SIGMA_MIN: f64 = 0.5;

/// `Fo_t = (fo_max / fo_min)^(t / (T - 1)) fo_min` for `t = 0..T`.
pub fn exp_schedule(fo_min: f64, fo_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(fo_min > 0.0) || !(fo_min < fo_max) || !fo_max.is_finite() {
        return Err(AdeError::Spec(format!(
            "exponential schedule needs 0 < fo_min < fo_max, got [{fo_min}, {fo_max}]"
        )));
    }
    if steps < 2 {
        return Err(AdeError::Spec(format!("schedule needs at least 2 steps, got {steps}")));
    }
    let ratio = fo_max / fo_min;
    let last = (steps - 1) as f64;
    let mut fo: Vec<f64> = (0..steps)
        .map(|t| ratio.powf(t as f64 / last) * fo_min)
        .collect();
    fo[0] = fo_min;
    fo[steps - 1] = fo_max;
    Ok(fo)
}

/// Fourier number of a Gaussian blur of width `sigma` pixels on length `L`:
/// `Fo = sigma^2 / (2 L^2)`.
pub fn sigma_to_fo(sigma: f64, length: f64) -> Result<f64> {
    if !(sigma >= 0.0) || !(length > 0.0) {
        return Err(AdeError::Spec(format!(
            "sigma {sigma} must be >= 0 and length {length} > 0"
        )));
    }
    Ok(sigma * sigma / (2.0 * length * length))
}

/// Inverse of [`sigma_to_fo`]: `sigma = L sqrt(2 Fo)`.
pub fn fo_to_sigma(fo: f64, length: f64) -> Result<f64> {
    if !(fo >= 0.0) || !(length > 0.0) {
        return Err(AdeError::Spec(format!(
            "Fo {fo} must be >= 0 and length {length} > 0"
        )));
    }
    Ok(length * (2.0 * fo).sqrt())
}

/// Characteristic advection speed for a Peclet number: `V = Pe alpha / L`.
pub fn peclet_velocity(pe: f64, alpha: f64, length: f64) -> Result<f64> {
    if !(pe >= 0.0) || !(alpha >= 0.0) || !(length > 0.0) {
        return Err(AdeError::Spec(format!(
            "Pe {pe}, alpha {alpha} must be >= 0 and length {length} > 0"
        )));
    }
    Ok(pe * alpha / length)
}

/// Lattice work for one schedule interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalPlan {
    pub n_steps: u64,
    pub tau: f64,
    /// Lattice diffusivity `(tau - 1/2) / 3`.
    pub alpha: f64,
    /// Per-component velocity standard deviation requested from the
    /// turbulence generator during this interval.
    pub target_rms: f64,
}

fn check_tau_max(tau_max: f64) -> Result<()> {
    if !(tau_max > 0.5 && tau_max <= TAU_MAX_STABLE) {
        return Err(AdeError::Spec(format!(
            "tau_max {tau_max} must lie in (0.5, {TAU_MAX_STABLE}]"
        )));
    }
    Ok(())
}

/// Plans a single interval of width `d_fo > 0`.
fn plan_one(d_fo: f64, length: f64, tau_max: f64) -> Result<IntervalPlan> {
    let budget = d_fo * length * length;
    let tau_for = |n: u64| -> f64 { 3.0 * (budget / n as f64) + 0.5 };
    let alpha_max = (tau_max - 0.5) / 3.0;
    let mut n = ((budget / alpha_max).ceil() as u64).max(1);
    while tau_for(n) > tau_max {
        n += 1;
    }
    while n > 1 && tau_for(n - 1) <= tau_max {
        n -= 1;
    }
    let alpha = budget / n as f64;
    Ok(IntervalPlan {
        n_steps: n,
        tau: tau_from_alpha(alpha)?,
        alpha,
        target_rms: 0.0,
    })
}

/// For each consecutive pair of `fo`, the smallest `n >= 1` such that
/// `alpha = dFo L^2 / n` keeps `tau = 3 alpha + 1/2 <= tau_max`.
///
/// The returned plans carry `target_rms = 0`; see [`DiffusionSchedule`] for
/// the Peclet mapping.
pub fn plan_intervals(fo: &[f64], length: f64, tau_max: f64) -> Result<Vec<IntervalPlan>> {
    check_tau_max(tau_max)?;
    if !(length > 0.0) {
        return Err(AdeError::Spec(format!("length {length} must be positive")));
    }
    fo.windows(2)
        .enumerate()
        .map(|(i, w)| {
            let d = w[1] - w[0];
            if !(d > 0.0) || !d.is_finite() {
                return Err(AdeError::Monotonicity(format!(
                    "interval {i}: Fo goes from {} to {}",
                    w[0], w[1]
                )));
            }
            plan_one(d, length, tau_max)
        })
        .collect()
}

/// How the Peclet number becomes a velocity scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PecletReference {
    /// `V_k = Pe alpha_k / L` with each interval's own diffusivity.
    PerInterval,
    /// `V = Pe alpha_ref / L` for the whole chain.
    Constant(f64),
}

/// Builder inputs for a [`DiffusionSchedule`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleParams {
    pub fo_min: f64,
    pub fo_max: f64,
    pub steps: usize,
    pub length: usize,
    pub pe: f64,
    pub tau_max: f64,
    pub velocity_cap: f64,
    pub peclet_reference: PecletReference,
}

impl ScheduleParams {
    /// Schedule from blur scales in pixels on a grid of width `length`.
    pub fn from_sigmas(sigma_min: f64, sigma_max: f64, steps: usize, length: usize, pe: f64) -> Result<Self> {
        let l = length as f64;
        Ok(ScheduleParams {
            fo_min: sigma_to_fo(sigma_min, l)?,
            fo_max: sigma_to_fo(sigma_max, l)?,
            steps,
            length,
            pe,
            tau_max: DEFAULT_TAU_MAX,
            velocity_cap: DEFAULT_VELOCITY_CAP,
            peclet_reference: PecletReference::PerInterval,
        })
    }
}

/// A Fourier-number schedule together with its lattice plan.
///
/// Interval `k` runs from `Fo_{k-1}` to `Fo_k`, with `Fo_{-1} = 0`, so the
/// plan has one entry per schedule node and chain snapshot `k + 1` is taken
/// at `Fo_k`. Zero-width intervals are allowed here and plan zero lattice
/// steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    pub fo: Vec<f64>,
    pub length: usize,
    pub pe: f64,
    pub tau_max: f64,
    pub velocity_cap: f64,
    pub peclet_reference: PecletReference,
    pub plan: Vec<IntervalPlan>,
}

impl DiffusionSchedule {
    pub fn new(params: &ScheduleParams) -> Result<Self> {
        let fo = exp_schedule(params.fo_min, params.fo_max, params.steps)?;
        Self::from_fo(
            fo,
            params.length,
            params.pe,
            params.tau_max,
            params.velocity_cap,
            params.peclet_reference,
        )
    }

    /// Schedule over an explicit non-decreasing Fo sequence starting at or
    /// above zero.
    pub fn from_fo(
        fo: Vec<f64>,
        length: usize,
        pe: f64,
        tau_max: f64,
        velocity_cap: f64,
        peclet_reference: PecletReference,
    ) -> Result<Self> {
        check_tau_max(tau_max)?;
        if fo.is_empty() {
            return Err(AdeError::Spec("schedule needs at least one node".into()));
        }
        if length == 0 {
            return Err(AdeError::Spec("length must be positive".into()));
        }
        if !(pe >= 0.0) || !pe.is_finite() {
            return Err(AdeError::Spec(format!("Peclet number {pe} must be >= 0")));
        }
        let l = length as f64;
        let mut plan = Vec::with_capacity(fo.len());
        let mut prev = 0.0;
        for (k, &f) in fo.iter().enumerate() {
            let d = f - prev;
            if !(d >= 0.0) || !f.is_finite() {
                return Err(AdeError::Monotonicity(format!(
                    "interval {k}: Fo goes from {prev} to {f}"
                )));
            }
            let mut p = if d == 0.0 {
                IntervalPlan {
                    n_steps: 0,
                    tau: tau_max,
                    alpha: 0.0,
                    target_rms: 0.0,
                }
            } else {
                plan_one(d, l, tau_max)?
            };
            if p.n_steps > 0 {
                let alpha_ref = match peclet_reference {
                    PecletReference::PerInterval => p.alpha,
                    PecletReference::Constant(a) => a,
                };
                p.target_rms = peclet_velocity(pe, alpha_ref, l)?;
            }
            plan.push(p);
            prev = f;
        }
        Ok(DiffusionSchedule {
            fo,
            length,
            pe,
            tau_max,
            velocity_cap,
            peclet_reference,
            plan,
        })
    }

    /// Number of chain steps K; the chain has K + 1 snapshots.
    pub fn chain_steps(&self) -> usize {
        self.fo.len()
    }

    pub fn total_lattice_steps(&self) -> u64 {
        self.plan.iter().map(|p| p.n_steps).sum()
    }

    /// Index of the interval that contains global lattice step `step`.
    pub fn interval_of_step(&self, step: u64) -> Option<usize> {
        let mut end = 0;
        for (k, p) in self.plan.iter().enumerate() {
            end += p.n_steps;
            if step < end {
                return Some(k);
            }
        }
        None
    }

    /// Target RMS speed in force at global lattice step `step`.
    pub fn target_rms_at(&self, step: u64) -> f64 {
        self.interval_of_step(step)
            .map(|k| self.plan[k].target_rms)
            .unwrap_or(0.0)
    }

    /// Key=value description followed by the plan table.
    pub fn describe(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "steps={}", self.fo.len());
        let _ = writeln!(s, "length={}", self.length);
        let _ = writeln!(s, "pe={}", self.pe);
        let _ = writeln!(s, "tau_max={}", self.tau_max);
        let _ = writeln!(s, "velocity_cap={}", self.velocity_cap);
        match self.peclet_reference {
            PecletReference::PerInterval => {
                let _ = writeln!(s, "peclet_reference=per-interval");
            }
            PecletReference::Constant(a) => {
                let _ = writeln!(s, "peclet_reference=constant:{a:?}");
            }
        }
        let _ = writeln!(s, "fo_min={:e}", self.fo[0]);
        let _ = writeln!(s, "fo_max={:e}", self.fo[self.fo.len() - 1]);
        let _ = writeln!(s, "# k\tfo\tsigma_px\tn_steps\ttau\talpha\ttarget_rms");
        let l = self.length as f64;
        for (k, (fo, p)) in self.fo.iter().zip(&self.plan).enumerate() {
            let sigma = fo_to_sigma(*fo, l).unwrap_or(f64::NAN);
            let _ = writeln!(
                s,
                "{k}\t{fo:e}\t{sigma:.6}\t{}\t{:.15}\t{:e}\t{:e}",
                p.n_steps, p.tau, p.alpha, p.target_rms
            );
        }
        s
    }
}
