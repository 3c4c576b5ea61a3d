//! D2Q9 lattice Boltzmann solver for the advection-diffusion equation.
//!
//! Nine velocity directions on the square lattice:
//! ```text
//!   6   2   5
//!    \  |  /
//!   3 - 0 - 1
//!    /  |  \
//!   7   4   8
//! ```
//!
//! The outer one-node ring of the grid is a bounce-back wall: its nodes never
//! collide, they reverse whatever streamed into them and send it back on the
//! next step. Streaming uses the pull scheme; a population whose source would
//! lie outside the grid is taken from the same node's opposite direction, so
//! streaming is a permutation of all populations and total mass is conserved
//! to rounding.
//!
//! One [`solver_step`] runs: stream → macroscopic update → collide →
//! fetch next velocity → bounce-back. The velocity used by collision at step
//! `s` is therefore the one fetched at step `s - 1` (zero at the first step).

use std::fmt::Debug;

use num_traits::Float;
use rayon::prelude::*;

use crate::error::{AdeError, Result};
use crate::field::{fixed_order_sum, ScalarField, VelocityField};

/// Largest relaxation time accepted by [`solver_step`].
pub const TAU_MAX_STABLE: f64 = 1.1;

const Q: usize = 9;

/// Floating-point type a lattice can run in.
pub trait Real: Float + Send + Sync + Debug + Default + 'static {
    const PRECISION: Precision;
    fn of(x: f64) -> Self;
    fn widen(self) -> f64;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::F32;
    #[inline]
    fn of(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn widen(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::F64;
    #[inline]
    fn of(x: f64) -> Self {
        x
    }
    #[inline]
    fn widen(self) -> f64 {
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = AdeError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(AdeError::Spec(format!("unknown precision '{other}'"))),
        }
    }
}

/// D2Q9 velocity set.
pub struct D2Q9;

impl D2Q9 {
    pub const Q: usize = Q;

    pub const DIRECTIONS: [[i32; 2]; Q] = [
        [0, 0],
        [1, 0],
        [0, 1],
        [-1, 0],
        [0, -1],
        [1, 1],
        [-1, 1],
        [-1, -1],
        [1, -1],
    ];

    /// Bounce-back partner: `DIRECTIONS[OPPOSITE[k]] == -DIRECTIONS[k]`.
    pub const OPPOSITE: [usize; Q] = [0, 3, 4, 1, 2, 7, 8, 5, 6];

    /// Weights as exact (numerator, denominator) pairs.
    pub const WEIGHT_RATIOS: [(i64, i64); Q] = [
        (4, 9),
        (1, 9),
        (1, 9),
        (1, 9),
        (1, 9),
        (1, 36),
        (1, 36),
        (1, 36),
        (1, 36),
    ];

    pub const WEIGHTS: [f64; Q] = [
        4.0 / 9.0,
        1.0 / 9.0,
        1.0 / 9.0,
        1.0 / 9.0,
        1.0 / 9.0,
        1.0 / 36.0,
        1.0 / 36.0,
        1.0 / 36.0,
        1.0 / 36.0,
    ];

    /// Lattice speed of sound squared, 1/3.
    pub const CS2_RATIO: (i64, i64) = (1, 3);
    pub const CS2: f64 = 1.0 / 3.0;
}

#[inline(always)]
fn weights<F: Real>() -> [F; Q] {
    D2Q9::WEIGHTS.map(F::of)
}

#[inline(always)]
fn feq_into<F: Real>(w: &[F; Q], rho: F, vx: F, vy: F, out: &mut [F; Q]) {
    let three = F::of(3.0);
    let four_half = F::of(4.5);
    let one_half = F::of(1.5);
    let uv = vx * vx + vy * vy;
    for k in 0..Q {
        let [cx, cy] = D2Q9::DIRECTIONS[k];
        let eu = F::of(cx as f64) * vx + F::of(cy as f64) * vy;
        out[k] = w[k] * rho * (F::one() + three * eu + four_half * eu * eu - one_half * uv);
    }
}

/// Equilibrium populations `w_i u [1 + 3 c·v + 4.5 (c·v)^2 - 1.5 v^2]`.
pub fn equilibrium(u: f64, v: [f64; 2]) -> Result<[f64; Q]> {
    if !u.is_finite() || !v[0].is_finite() || !v[1].is_finite() {
        return Err(AdeError::NonFinite(format!(
            "equilibrium(u={u}, v=({}, {}))",
            v[0], v[1]
        )));
    }
    let mut out = [0.0; Q];
    feq_into(&D2Q9::WEIGHTS, u, v[0], v[1], &mut out);
    Ok(out)
}

/// Diffusivity for a relaxation time: `alpha = (tau - 1/2) / 3`.
pub fn alpha_from_tau(tau: f64) -> Result<f64> {
    if !(tau >= 0.5) || !tau.is_finite() {
        return Err(AdeError::Stability(format!(
            "relaxation time {tau} is below 1/2"
        )));
    }
    Ok(D2Q9::CS2 * (tau - 0.5))
}

/// Relaxation time for a diffusivity: `tau = 3 alpha + 1/2`.
pub fn tau_from_alpha(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(AdeError::Stability(format!(
            "diffusivity {alpha} must be non-negative"
        )));
    }
    Ok(3.0 * alpha + 0.5)
}

/// Supplies the advection velocity fetched after collision at a given step.
pub trait VelocitySource {
    fn velocity(&self, step: u64) -> Result<VelocityField>;
}

/// No advection.
#[derive(Debug, Clone, Copy)]
pub struct ZeroVelocity {
    pub nx: usize,
    pub ny: usize,
}

impl VelocitySource for ZeroVelocity {
    fn velocity(&self, _step: u64) -> Result<VelocityField> {
        Ok(VelocityField::zeros(self.nx, self.ny))
    }
}

/// The same field at every step.
impl VelocitySource for VelocityField {
    fn velocity(&self, _step: u64) -> Result<VelocityField> {
        Ok(self.clone())
    }
}

/// Distribution functions of a D2Q9 lattice plus the streaming double buffer.
///
/// Populations are stored node-major (`(y * nx + x) * 9 + k`) so that a grid
/// row is one contiguous chunk for row-parallel kernels.
#[derive(Debug, Clone)]
pub struct LatticeState<F: Real> {
    nx: usize,
    ny: usize,
    f: Vec<F>,
    f_new: Vec<F>,
    rho: Vec<F>,
    vel: Vec<[F; 2]>,
}

impl<F: Real> LatticeState<F> {
    /// Empty lattice with every population zero.
    pub fn zeros(nx: usize, ny: usize) -> Self {
        LatticeState {
            nx,
            ny,
            f: vec![F::zero(); nx * ny * Q],
            f_new: vec![F::zero(); nx * ny * Q],
            rho: vec![F::zero(); nx * ny],
            vel: vec![[F::zero(); 2]; nx * ny],
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn precision(&self) -> Precision {
        F::PRECISION
    }

    #[inline]
    fn idx(&self, x: usize, y: usize, k: usize) -> usize {
        (y * self.nx + x) * Q + k
    }

    pub fn populations(&self, x: usize, y: usize) -> [F; Q] {
        let i = self.idx(x, y, 0);
        self.f[i..i + Q].try_into().unwrap()
    }

    pub fn post_collision(&self, x: usize, y: usize) -> [F; Q] {
        let i = self.idx(x, y, 0);
        self.f_new[i..i + Q].try_into().unwrap()
    }

    pub fn set_populations(&mut self, x: usize, y: usize, values: [F; Q]) {
        let i = self.idx(x, y, 0);
        self.f[i..i + Q].copy_from_slice(&values);
    }

    pub fn set_post_collision(&mut self, x: usize, y: usize, values: [F; Q]) {
        let i = self.idx(x, y, 0);
        self.f_new[i..i + Q].copy_from_slice(&values);
    }

    /// Replace the velocity that the next collision will use.
    pub fn set_velocity(&mut self, vel: &VelocityField) -> Result<()> {
        check_velocity_shape(self.nx, self.ny, vel)?;
        for (dst, (&vx, &vy)) in self.vel.iter_mut().zip(vel.vx.iter().zip(&vel.vy)) {
            *dst = [F::of(vx), F::of(vy)];
        }
        Ok(())
    }

    pub fn velocity(&self) -> VelocityField {
        VelocityField {
            nx: self.nx,
            ny: self.ny,
            vx: self.vel.iter().map(|v| v[0].widen()).collect(),
            vy: self.vel.iter().map(|v| v[1].widen()).collect(),
        }
    }

    /// Sum of all populations over every node, in a fixed order.
    pub fn total_mass(&self) -> f64 {
        fixed_order_sum(&macro_update(self).values)
    }

    pub fn all_finite(&self) -> bool {
        self.f.iter().all(|v| v.is_finite())
    }
}

fn check_velocity_shape(nx: usize, ny: usize, vel: &VelocityField) -> Result<()> {
    if vel.nx != nx || vel.ny != ny || vel.vx.len() != nx * ny || vel.vy.len() != nx * ny {
        return Err(AdeError::Shape(format!(
            "velocity field {}x{} does not match lattice {nx}x{ny}",
            vel.nx, vel.ny
        )));
    }
    Ok(())
}

fn check_tau_positive_diffusivity(tau: f64) -> Result<()> {
    if !(tau > 0.5) || !tau.is_finite() {
        return Err(AdeError::Stability(format!(
            "relaxation time {tau} must exceed 1/2"
        )));
    }
    Ok(())
}

/// Equilibrium initialisation at zero velocity: `f_i = w_i u0`.
pub fn init_from_image<F: Real>(u0: &ScalarField) -> Result<LatticeState<F>> {
    u0.ensure_finite("initial field")?;
    let mut state = LatticeState::zeros(u0.nx, u0.ny);
    let w = weights::<F>();
    for (node, &u) in u0.values.iter().enumerate() {
        let u = F::of(u);
        for k in 0..Q {
            state.f[node * Q + k] = w[k] * u;
        }
        state.rho[node] = u;
    }
    state.f_new.copy_from_slice(&state.f);
    Ok(state)
}

/// BGK relaxation of every node toward its local equilibrium.
///
/// Writes `f_new = (1 - 1/tau) f + (1/tau) f_eq(sum f, v)`.
pub fn collide<F: Real>(state: &mut LatticeState<F>, vel: &VelocityField, tau: f64) -> Result<()> {
    check_tau_positive_diffusivity(tau)?;
    check_velocity_shape(state.nx, state.ny, vel)?;
    let omega = F::of(1.0 / tau);
    let w = weights::<F>();
    let nx = state.nx;
    let f = &state.f;
    let rho = &mut state.rho;
    state
        .f_new
        .par_chunks_mut(nx * Q)
        .zip(rho.par_chunks_mut(nx))
        .enumerate()
        .for_each(|(y, (row_new, row_rho))| {
            let mut feq = [F::zero(); Q];
            for x in 0..nx {
                let node = y * nx + x;
                let pops = &f[node * Q..node * Q + Q];
                let r = pops.iter().fold(F::zero(), |a, &b| a + b);
                row_rho[x] = r;
                feq_into(&w, r, F::of(vel.vx[node]), F::of(vel.vy[node]), &mut feq);
                for k in 0..Q {
                    row_new[x * Q + k] = (F::one() - omega) * pops[k] + feq[k] * omega;
                }
            }
        });
    Ok(())
}

/// Interior-only collision using the macroscopic fields stored in the state.
fn collide_interior<F: Real>(state: &mut LatticeState<F>, omega: F) {
    let (nx, ny) = (state.nx, state.ny);
    let w = weights::<F>();
    let f = &state.f;
    let vel = &state.vel;
    let rho = &mut state.rho;
    state
        .f_new
        .par_chunks_mut(nx * Q)
        .zip(rho.par_chunks_mut(nx))
        .enumerate()
        .skip(1)
        .take(ny.saturating_sub(2))
        .for_each(|(y, (row_new, row_rho))| {
            let mut feq = [F::zero(); Q];
            for x in 1..nx - 1 {
                let node = y * nx + x;
                let pops = &f[node * Q..node * Q + Q];
                let r = pops.iter().fold(F::zero(), |a, &b| a + b);
                row_rho[x] = r;
                let [vx, vy] = vel[node];
                feq_into(&w, r, vx, vy, &mut feq);
                for k in 0..Q {
                    row_new[x * Q + k] = (F::one() - omega) * pops[k] + feq[k] * omega;
                }
            }
        });
}

/// Pull-scheme streaming: `f_i(x) = f_new_i(x - c_i)`.
///
/// Sources outside the grid read the same node's opposite population, which
/// is exactly the population that would otherwise leave the domain.
pub fn stream<F: Real>(state: &mut LatticeState<F>) {
    let (nx, ny) = (state.nx, state.ny);
    let f_new = &state.f_new;
    state
        .f
        .par_chunks_mut(nx * Q)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..nx {
                for k in 0..Q {
                    let [cx, cy] = D2Q9::DIRECTIONS[k];
                    let sx = x as i64 - cx as i64;
                    let sy = y as i64 - cy as i64;
                    row[x * Q + k] = if sx >= 0 && sy >= 0 && (sx as usize) < nx && (sy as usize) < ny
                    {
                        f_new[(sy as usize * nx + sx as usize) * Q + k]
                    } else {
                        f_new[(y * nx + x) * Q + D2Q9::OPPOSITE[k]]
                    };
                }
            }
        });
}

#[inline]
fn bounce_node<F: Real>(f: &mut [F], f_new: &mut [F], node: usize) {
    let p = &mut f[node * Q..node * Q + Q];
    for k in [1, 2, 5, 6] {
        p.swap(k, k + 2);
    }
    f_new[node * Q..node * Q + Q].copy_from_slice(p);
}

/// Reverses the populations of every node on the outer ring and copies them
/// into the streaming buffer.
pub fn apply_bounce_back<F: Real>(state: &mut LatticeState<F>) -> Result<()> {
    let (nx, ny) = (state.nx, state.ny);
    if nx < 3 || ny < 3 {
        return Err(AdeError::DegenerateDomain(format!(
            "bounce-back needs at least 3x3 nodes, got {nx}x{ny}"
        )));
    }
    for x in 0..nx {
        bounce_node(&mut state.f, &mut state.f_new, x);
        bounce_node(&mut state.f, &mut state.f_new, (ny - 1) * nx + x);
    }
    for y in 1..ny - 1 {
        bounce_node(&mut state.f, &mut state.f_new, y * nx);
        bounce_node(&mut state.f, &mut state.f_new, y * nx + nx - 1);
    }
    Ok(())
}

/// Macroscopic intensity `u = sum_i f_i` over every node, for export.
pub fn macro_update<F: Real>(state: &LatticeState<F>) -> ScalarField {
    let values = state
        .f
        .chunks_exact(Q)
        .map(|p| p.iter().fold(F::zero(), |a, &b| a + b).widen())
        .collect();
    ScalarField {
        nx: state.nx,
        ny: state.ny,
        values,
    }
}

/// One full lattice iteration.
pub fn solver_step<F: Real>(
    state: &mut LatticeState<F>,
    velocities: &dyn VelocitySource,
    tau: f64,
    step_index: u64,
) -> Result<()> {
    check_step_tau(tau)?;
    let next = velocities.velocity(step_index)?;
    step_with_velocity(state, &next, tau)
}

pub(crate) fn check_step_tau(tau: f64) -> Result<()> {
    check_tau_positive_diffusivity(tau)?;
    if tau > TAU_MAX_STABLE {
        return Err(AdeError::Stability(format!(
            "relaxation time {tau} exceeds the stable limit {TAU_MAX_STABLE}"
        )));
    }
    Ok(())
}

/// [`solver_step`] with the post-collision velocity already fetched.
pub(crate) fn step_with_velocity<F: Real>(
    state: &mut LatticeState<F>,
    next_velocity: &VelocityField,
    tau: f64,
) -> Result<()> {
    if state.nx < 3 || state.ny < 3 {
        return Err(AdeError::DegenerateDomain(format!(
            "solver needs at least 3x3 nodes, got {}x{}",
            state.nx, state.ny
        )));
    }
    check_velocity_shape(state.nx, state.ny, next_velocity)?;
    stream(state);
    collide_interior(state, F::of(1.0 / tau));
    state.set_velocity(next_velocity)?;
    apply_bounce_back(state)
}
