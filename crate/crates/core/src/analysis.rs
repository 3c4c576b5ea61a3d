//! Diagnostics: radial energy spectra, power-law fits, mass audits, field
//! statistics and simple raster plots.

use std::fmt::Write;

use num_complex::Complex64;

use crate::corruption::CorruptionChain;
use crate::error::{AdeError, Result};
use crate::field::{fixed_order_sum, FieldStack, ScalarField};
use crate::turbulence::fft::{frequency_index, Fft2};

/// Radially binned spectral energy of a 2D field.
///
/// Mode energies are `|X(k)|^2 / (nx ny)`, so that the DC energy plus all band
/// energies equals the spatial sum of squares. Bin `r` collects the modes
/// whose integer wavenumber vector has length rounding to `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumProfile {
    /// Energy of the `k = 0` mode.
    pub dc: f64,
    /// Bin centres `1, 2, ..`.
    pub wavenumbers: Vec<f64>,
    pub energy: Vec<f64>,
    pub counts: Vec<usize>,
    /// Largest radius with complete annuli, `min(nx, ny) / 2`.
    pub nyquist: usize,
}

impl SpectrumProfile {
    pub fn total(&self) -> f64 {
        self.dc + fixed_order_sum(&self.energy)
    }

    /// Bin index of wavenumber `r` (`r >= 1`).
    pub fn bin(&self, r: usize) -> Option<usize> {
        (r >= 1 && r <= self.energy.len()).then(|| r - 1)
    }

    /// Summed energy of the bins in the top quarter of `1..=nyquist`.
    pub fn top_quartile_energy(&self) -> f64 {
        let lo = (3 * self.nyquist) / 4 + 1;
        let hi = self.nyquist.min(self.energy.len());
        if lo > hi {
            return 0.0;
        }
        fixed_order_sum(&self.energy[lo - 1..hi])
    }

    /// `k,count,energy` rows, DC first as `k = 0`.
    pub fn to_table(&self) -> String {
        let mut s = String::from("k,count,energy\n");
        let _ = writeln!(s, "0,1,{:e}", self.dc);
        for ((k, c), e) in self.wavenumbers.iter().zip(&self.counts).zip(&self.energy) {
            let _ = writeln!(s, "{k},{c},{e:e}");
        }
        s
    }
}

pub fn radial_energy_spectrum(field: &ScalarField) -> Result<SpectrumProfile> {
    let (nx, ny) = (field.nx, field.ny);
    if nx < 2 || ny < 2 {
        return Err(AdeError::Shape(format!("spectrum needs at least 2x2, got {nx}x{ny}")));
    }
    let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft2::new(nx, ny)?.forward(&mut data)?;
    let norm = 1.0 / (nx * ny) as f64;
    let max_r = {
        let (hx, hy) = ((nx / 2) as f64, (ny / 2) as f64);
        (hx * hx + hy * hy).sqrt().round() as usize
    };
    let mut energy = vec![0.0; max_r];
    let mut counts = vec![0usize; max_r];
    let mut dc = 0.0;
    for j in 0..ny {
        let ky = frequency_index(j, ny) as f64;
        for i in 0..nx {
            let kx = frequency_index(i, nx) as f64;
            let e = data[j * nx + i].norm_sqr() * norm;
            let r = (kx * kx + ky * ky).sqrt().round() as usize;
            if r == 0 {
                dc += e;
            } else {
                energy[r - 1] += e;
                counts[r - 1] += 1;
            }
        }
    }
    Ok(SpectrumProfile {
        dc,
        wavenumbers: (1..=max_r).map(|r| r as f64).collect(),
        energy,
        counts,
        nyquist: nx.min(ny) / 2,
    })
}

/// Per-bin average of several profiles of the same grid.
pub fn mean_profile(profiles: &[SpectrumProfile]) -> Result<SpectrumProfile> {
    let first = profiles
        .first()
        .ok_or_else(|| AdeError::Input("no profiles to average".into()))?;
    let mut out = first.clone();
    for p in &profiles[1..] {
        if p.energy.len() != out.energy.len() {
            return Err(AdeError::Shape("profiles differ in bin count".into()));
        }
        out.dc += p.dc;
        out.energy.iter_mut().zip(&p.energy).for_each(|(a, b)| *a += b);
    }
    let n = profiles.len() as f64;
    out.dc /= n;
    out.energy.iter_mut().for_each(|e| *e /= n);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual of `log E` about the fitted line.
    pub residual: f64,
    pub points: usize,
    /// One entry per excluded bin.
    pub warnings: Vec<String>,
}

/// Least-squares line through `(ln k, ln E)` over the bins whose wavenumber
/// lies in `[k_lo, k_hi]`.
pub fn fit_loglog_slope(profile: &SpectrumProfile, k_lo: f64, k_hi: f64) -> Result<SlopeFit> {
    let mut warnings = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&k, &e) in profile.wavenumbers.iter().zip(&profile.energy) {
        if k < k_lo || k > k_hi {
            continue;
        }
        if e > 0.0 && e.is_finite() {
            xs.push(k.ln());
            ys.push(e.ln());
        } else {
            warnings.push(format!("bin k={k} has energy {e}, excluded"));
        }
    }
    fit_line(&xs, &ys).map(|(slope, intercept, residual)| SlopeFit {
        slope,
        intercept,
        residual,
        points: xs.len(),
        warnings,
    })
}

fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 3 {
        return Err(AdeError::Fit(format!("{n} usable points, need at least 3")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(AdeError::Fit("all points share one wavenumber".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok((slope, intercept, (ss / n as f64).sqrt()))
}

/// Relative mass drift of every snapshot against snapshot 0, per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MassAudit {
    /// `drift[k][c]`, `None` where the initial mass of channel `c` is zero.
    pub drift: Vec<Vec<Option<f64>>>,
}

impl MassAudit {
    /// Largest defined drift, or `None` if every channel started massless.
    pub fn max_drift(&self) -> Option<f64> {
        self.drift
            .iter()
            .flatten()
            .flatten()
            .copied()
            .fold(None, |m, d| Some(m.map_or(d, |m: f64| m.max(d))))
    }

    pub fn report(&self) -> String {
        let mut s = String::from("step,channel,drift\n");
        for (k, row) in self.drift.iter().enumerate() {
            for (c, d) in row.iter().enumerate() {
                match d {
                    Some(d) => writeln!(s, "{k},{c},{d:e}"),
                    None => writeln!(s, "{k},{c},undefined"),
                }
                .unwrap();
            }
        }
        match self.max_drift() {
            Some(m) => writeln!(s, "# max_drift={m:e}"),
            None => writeln!(s, "# max_drift=undefined"),
        }
        .unwrap();
        s
    }
}

pub fn mass_audit(chain: &CorruptionChain) -> MassAudit {
    let m0 = chain.channel_mass(0);
    let drift = (0..=chain.steps)
        .map(|k| {
            chain
                .channel_mass(k)
                .iter()
                .zip(&m0)
                .map(|(&m, &z)| (z != 0.0).then(|| ((m - z) / z).abs()))
                .collect()
        })
        .collect();
    MassAudit { drift }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

pub fn field_stats(values: &[f64]) -> Result<FieldStats> {
    if values.is_empty() {
        return Err(AdeError::Input("statistics of an empty field".into()));
    }
    let n = values.len() as f64;
    let mean = fixed_order_sum(values) / n;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    Ok(FieldStats {
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std: (fixed_order_sum(&sq) / n).sqrt(),
    })
}

/// `log10` power spectrum with `k = 0` at the centre, scaled to `[0, 1]`.
pub fn power_heatmap(field: &ScalarField) -> Result<FieldStack> {
    let (nx, ny) = (field.nx, field.ny);
    let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft2::new(nx, ny)?.forward(&mut data)?;
    let mut img = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let p = data[j * nx + i].norm_sqr();
            let (x, y) = ((i + nx / 2) % nx, (j + ny / 2) % ny);
            img[y * nx + x] = (p + 1e-30).log10();
        }
    }
    normalize(&mut img);
    FieldStack::from_vec(1, ny, nx, img)
}

/// Rasterises `ln E` against `ln k` for each profile as dark polylines on a
/// white `width x height` canvas.
pub fn plot_loglog(profiles: &[&SpectrumProfile], width: usize, height: usize) -> Result<FieldStack> {
    if width < 4 || height < 4 {
        return Err(AdeError::Shape("plot canvas too small".into()));
    }
    let curves: Vec<Vec<(f64, f64)>> = profiles
        .iter()
        .map(|p| {
            p.wavenumbers
                .iter()
                .zip(&p.energy)
                .filter(|(_, &e)| e > 0.0)
                .map(|(&k, &e)| (k.ln(), e.ln()))
                .collect()
        })
        .collect();
    let pts = curves.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let mut img = vec![1.0; width * height];
    if !(x1 > x0) || !(y1 >= y0) {
        return FieldStack::from_vec(1, height, width, img);
    }
    let span_y = if y1 > y0 { y1 - y0 } else { 1.0 };
    let to_px = |(x, y): (f64, f64)| {
        let px = (x - x0) / (x1 - x0) * (width - 1) as f64;
        let py = (1.0 - (y - y0) / span_y) * (height - 1) as f64;
        (px, py)
    };
    for (c, curve) in curves.iter().enumerate() {
        let shade = 0.6 * c as f64 / profiles.len().max(1) as f64;
        for w in curve.windows(2) {
            let (a, b) = (to_px(w[0]), to_px(w[1]));
            let n = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize).max(1);
            for s in 0..=n {
                let t = s as f64 / n as f64;
                let x = (a.0 + t * (b.0 - a.0)).round() as usize;
                let y = (a.1 + t * (b.1 - a.1)).round() as usize;
                img[y.min(height - 1) * width + x.min(width - 1)] = shade;
            }
        }
    }
    FieldStack::from_vec(1, height, width, img)
}

fn normalize(v: &mut [f64]) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for x in v.iter_mut() {
        *x = if span > 0.0 { (*x - lo) / span } else { 0.0 };
    }
}
