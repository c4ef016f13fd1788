use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::fft::{fft, fft2, fftfreq};
use super::fields::Field;
use super::quad::simpson;
use crate::{Error, Result};

/// Uniform grid of `n` points per axis on the cube `[lo, hi)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid("only 1D and 2D grids are supported"));
        }
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::invalid("points per axis must be a power of two"));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("grid box must be finite and non-empty"));
        }
        Ok(Self { dim, n, lo, hi })
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of linear index `idx` (row-major, first axis slowest).
    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let h = self.spacing();
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            out[axis] = self.lo + (rest % self.n) as f64 * h;
            rest /= self.n;
        }
    }
}

/// Field values on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: Grid,
    values: Vec<f64>,
}

impl SampledField {
    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        crate::error::check_dim(grid.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sampled values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn sample(field: &dyn Field, grid: Grid) -> Result<Self> {
        crate::error::check_dim(grid.dim, field.dim())?;
        let mut y = vec![0.0; grid.dim];
        let values = (0..grid.len())
            .map(|idx| {
                grid.point(idx, &mut y);
                field.value(&y)
            })
            .collect();
        Self::from_values(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Discrete local Fourier transform of a field windowed to a ball.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpectrum {
    pub dim: usize,
    pub n: usize,
    /// Frequency spacing per axis, `1 / (n h)`.
    pub dk: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    /// `f̂(k)` on the FFT bin layout, scaled by the spatial cell volume.
    pub coeffs: Vec<Complex64>,
    /// `Σ |f̂|² Δk`: the ball energy seen by the spectrum.
    pub energy: f64,
    /// Relative gap between the spectral energy and the grid sum `Σ f_x² h`.
    pub parseval_rel_error: f64,
}

impl LocalSpectrum {
    pub fn cell_volume(&self) -> f64 {
        self.dk.powi(self.dim as i32)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Squared frequency norm of bin `idx`.
    pub fn k_norm_sq(&self, idx: usize) -> f64 {
        let h = 1.0 / (self.n as f64 * self.dk);
        let mut rest = idx;
        let mut sum = 0.0;
        for _ in 0..self.dim {
            let k = fftfreq(rest % self.n, self.n, h);
            sum += k * k;
            rest /= self.n;
        }
        sum
    }

    /// Local frequency density `|f̂(k)|² / E`.
    pub fn density(&self, idx: usize) -> f64 {
        self.coeffs[idx].norm_sqr() / self.energy
    }

    /// `Σ π(k) Δk`; one up to rounding.
    pub fn total_mass(&self) -> f64 {
        (0..self.len()).map(|i| self.density(i)).sum::<f64>() * self.cell_volume()
    }

    /// `∫ π(k) ‖k‖^(2p) dk`, truncated at the grid's Nyquist frequency.
    pub fn frequency_moment(&self, p: u32) -> f64 {
        (0..self.len()).map(|i| self.density(i) * self.k_norm_sq(i).powi(p as i32)).sum::<f64>() * self.cell_volume()
    }

    /// `‖k‖` of the bin with the largest magnitude.
    pub fn peak_frequency(&self) -> f64 {
        let mut best = 0;
        for i in 1..self.len() {
            if self.coeffs[i].norm_sqr() > self.coeffs[best].norm_sqr() {
                best = i;
            }
        }
        libm::sqrt(self.k_norm_sq(best))
    }
}

fn inside_ball(y: &[f64], center: &[f64], radius: f64) -> bool {
    y.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < radius * radius
}

/// Windows the sampled field by the indicator of `B(center, radius)` and
/// takes its DFT scaled by the cell volume `hⁿ`, so that coefficients
/// approximate the continuous transform on the bins `k = j / (n h)`.
pub fn local_fourier(field: &SampledField, center: &[f64], radius: f64) -> Result<LocalSpectrum> {
    let grid = field.grid;
    crate::error::check_dim(grid.dim, center.len())?;
    if !(radius > 0.0) || center.iter().any(|c| c - radius < grid.lo || c + radius > grid.hi) {
        return Err(Error::BallOutsideBox { radius });
    }
    let h = grid.spacing();
    let cell = h.powi(grid.dim as i32);
    let mut y = vec![0.0; grid.dim];
    let mut grid_energy = 0.0;
    let mut data: Vec<Complex64> = field
        .values
        .iter()
        .enumerate()
        .map(|(idx, &v)| {
            grid.point(idx, &mut y);
            let w = if inside_ball(&y, center, radius) { v } else { 0.0 };
            grid_energy += w * w * cell;
            Complex64::new(w, 0.0)
        })
        .collect();
    if grid_energy == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    match grid.dim {
        1 => fft(&mut data),
        _ => fft2(&mut data, grid.n),
    }
    data.iter_mut().for_each(|c| *c *= cell);
    let dk = 1.0 / (grid.n as f64 * h);
    let energy = data.iter().map(|c| c.norm_sqr()).sum::<f64>() * dk.powi(grid.dim as i32);
    Ok(LocalSpectrum {
        dim: grid.dim,
        n: grid.n,
        dk,
        center: center.to_vec(),
        radius,
        coeffs: data,
        energy,
        parseval_rel_error: libm::fabs(energy - grid_energy) / grid_energy,
    })
}

/// `∫_{B(center, radius)} g(y) dy`: Simpson in 1D, polar Simpson × periodic
/// trapezoid in 2D.
fn ball_integral<G: FnMut(&[f64]) -> f64>(dim: usize, center: &[f64], radius: f64, mut g: G) -> f64 {
    match dim {
        1 => simpson(|t| g(&[t]), center[0] - radius, center[0] + radius, 200_000),
        _ => {
            let angles = 1024;
            let mut total = 0.0;
            let mut y = [0.0; 2];
            for a in 0..angles {
                let theta = 2.0 * PI * a as f64 / angles as f64;
                let (s, c) = (libm::sin(theta), libm::cos(theta));
                total += simpson(
                    |rho| {
                        y[0] = center[0] + rho * c;
                        y[1] = center[1] + rho * s;
                        g(&y) * rho
                    },
                    0.0,
                    radius,
                    1000,
                );
            }
            total * 2.0 * PI / angles as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCheck {
    pub order: u32,
    /// `∫_B ‖∇f‖²` or `∫_B ‖H_f‖²_F` by quadrature.
    pub lhs: f64,
    /// `(2π)^(2·order) E ∫ π ‖k‖^(2·order) dk` from the spectrum.
    pub rhs: f64,
    pub ratio: f64,
    pub moment: f64,
    /// Ball energy from the spectrum.
    pub energy_spectral: f64,
    /// Ball energy by quadrature of the analytic field.
    pub energy_quadrature: f64,
}

/// Compares the derivative energy on the ball with the frequency moment of
/// the local spectrum.
pub fn check_connection(field: &dyn Field, grid: Grid, center: &[f64], radius: f64, order: u32) -> Result<ConnectionCheck> {
    if !(1..=2).contains(&order) {
        return Err(Error::invalid("order must be 1 or 2"));
    }
    let sampled = SampledField::sample(field, grid)?;
    let spectrum = local_fourier(&sampled, center, radius)?;
    let n = grid.dim;
    let mut buf = vec![0.0; n * n];
    let lhs = ball_integral(n, center, radius, |y| {
        if order == 1 {
            field.gradient(y, &mut buf[..n]);
            buf[..n].iter().map(|v| v * v).sum()
        } else {
            field.hessian(y, &mut buf);
            buf.iter().map(|v| v * v).sum()
        }
    });
    let energy_quadrature = ball_integral(n, center, radius, |y| {
        let v = field.value(y);
        v * v
    });
    let moment = spectrum.frequency_moment(order);
    let rhs = (2.0 * PI).powi(2 * order as i32) * spectrum.energy * moment;
    Ok(ConnectionCheck {
        order,
        lhs,
        rhs,
        ratio: rhs / lhs,
        moment,
        energy_spectral: spectrum.energy,
        energy_quadrature,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyCheck {
    /// `∫_B (y - x)² f²`
    pub dispersion: f64,
    /// `∫_B f'²`
    pub gradient_integral: f64,
    /// `∫_B f²`
    pub energy: f64,
    /// `dispersion · gradient_integral / energy²`; at least 1/4 for fields
    /// vanishing on the ball boundary.
    pub product: f64,
}

impl UncertaintyCheck {
    pub const BOUND: f64 = 0.25;

    pub fn passes(&self, tol: f64) -> bool {
        self.product >= Self::BOUND * (1.0 - tol)
    }
}

/// Spatial spread times derivative energy of a 1D field on `B(x, 1)`.
pub fn uncertainty_check(field: &dyn Field, x: f64) -> Result<UncertaintyCheck> {
    if field.dim() != 1 {
        return Err(Error::invalid("uncertainty check is one-dimensional"));
    }
    let c = [x];
    let energy = ball_integral(1, &c, 1.0, |y| field.value(y).powi(2));
    if energy == 0.0 {
        return Err(Error::ZeroEnergy);
    }
    let dispersion = ball_integral(1, &c, 1.0, |y| (y[0] - x).powi(2) * field.value(y).powi(2));
    let mut g = [0.0];
    let gradient_integral = ball_integral(1, &c, 1.0, |y| {
        field.gradient(y, &mut g);
        g[0] * g[0]
    });
    Ok(UncertaintyCheck {
        dispersion,
        gradient_integral,
        energy,
        product: dispersion * gradient_integral / (energy * energy),
    })
}
