//! Plain 2D fields shared by every module.
//!
//! All fields are stored row-major: the value at column `x`, row `y` lives at
//! `y * nx + x`.

use crate::error::{AdeError, Result};

/// Spacing of the dyadic grid that chain snapshots and noisy reverse-chain
/// states are snapped onto. Sums and differences of grid values with
/// magnitude below 32 are exact in f64.
pub const EXACT_GRID: f64 = 1.0 / (1u64 << 48) as f64;

/// Rounds `x` to the nearest multiple of [`EXACT_GRID`].
#[inline]
pub fn snap_to_grid(x: f64) -> f64 {
    (x * (1u64 << 48) as f64).round() * EXACT_GRID
}

/// Scalar intensity field u(x, y) for a single channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self::filled(nx, ny, 0.0)
    }

    pub fn filled(nx: usize, ny: usize, value: f64) -> Self {
        ScalarField {
            nx,
            ny,
            values: vec![value; nx * ny],
        }
    }

    pub fn from_vec(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(AdeError::Shape(format!(
                "{} values for a {nx}x{ny} field",
                values.len()
            )));
        }
        Ok(ScalarField { nx, ny, values })
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for y in 0..ny {
            for x in 0..nx {
                values.push(f(x, y));
            }
        }
        ScalarField { nx, ny, values }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.nx + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.nx + x] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(AdeError::NonFinite(format!(
                "{what} at node ({}, {})",
                i % self.nx,
                i / self.nx
            ))),
        }
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    /// Largest absolute pointwise difference.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Two-component advection field in lattice units.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub nx: usize,
    pub ny: usize,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl VelocityField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        VelocityField {
            nx,
            ny,
            vx: vec![0.0; nx * ny],
            vy: vec![0.0; nx * ny],
        }
    }

    pub fn uniform(nx: usize, ny: usize, v: [f64; 2]) -> Self {
        VelocityField {
            nx,
            ny,
            vx: vec![v[0]; nx * ny],
            vy: vec![v[1]; nx * ny],
        }
    }

    pub fn from_components(nx: usize, ny: usize, vx: Vec<f64>, vy: Vec<f64>) -> Result<Self> {
        if vx.len() != nx * ny || vy.len() != nx * ny {
            return Err(AdeError::Shape(format!(
                "velocity components of length {}/{} for a {nx}x{ny} grid",
                vx.len(),
                vy.len()
            )));
        }
        Ok(VelocityField { nx, ny, vx, vy })
    }

    pub fn max_speed(&self) -> f64 {
        self.vx
            .iter()
            .zip(&self.vy)
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Multi-channel stack of fields, laid out `[C, H, W]`.
///
/// Images, chain snapshots, priors and predictor inputs/outputs all use this
/// shape.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStack {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl FieldStack {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        FieldStack {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(AdeError::Shape(format!(
                "{} values for a [{channels}, {height}, {width}] stack",
                data.len()
            )));
        }
        Ok(FieldStack {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn from_channels(fields: &[ScalarField]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| AdeError::Shape("stack needs at least one channel".into()))?;
        let mut data = Vec::with_capacity(fields.len() * first.values.len());
        for f in fields {
            if !f.same_shape(first) {
                return Err(AdeError::Shape("channels differ in size".into()));
            }
            data.extend_from_slice(&f.values);
        }
        Ok(FieldStack {
            channels: fields.len(),
            height: first.ny,
            width: first.nx,
            data,
        })
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn same_shape(&self, other: &FieldStack) -> bool {
        self.shape() == other.shape()
    }

    pub fn channel_slice(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel(&self, c: usize) -> ScalarField {
        ScalarField {
            nx: self.width,
            ny: self.height,
            values: self.channel_slice(c).to_vec(),
        }
    }

    pub fn channel_fields(&self) -> Vec<ScalarField> {
        (0..self.channels).map(|c| self.channel(c)).collect()
    }

    /// Every channel without its outermost ring of pixels (the lattice walls).
    pub fn interior(&self) -> Result<FieldStack> {
        if self.width < 3 || self.height < 3 {
            return Err(AdeError::Shape(format!(
                "{}x{} field has no interior",
                self.width, self.height
            )));
        }
        let (w, h) = (self.width - 2, self.height - 2);
        let mut data = Vec::with_capacity(self.channels * w * h);
        for c in 0..self.channels {
            let plane = self.channel_slice(c);
            for y in 1..=h {
                data.extend_from_slice(&plane[y * self.width + 1..y * self.width + 1 + w]);
            }
        }
        FieldStack::from_vec(self.channels, h, w, data)
    }

    pub fn max_abs_diff(&self, other: &FieldStack) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(AdeError::NonFinite(what.to_string()))
        }
    }

    pub fn bitwise_eq(&self, other: &FieldStack) -> bool {
        self.same_shape(other)
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// Deterministic sequential sum with Neumaier compensation.
///
/// The evaluation order is the slice order, so results never depend on the
/// thread count.
pub fn fixed_order_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
