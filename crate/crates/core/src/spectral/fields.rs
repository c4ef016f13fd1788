use core::f64::consts::PI;

/// A smooth scalar field with analytic first and second derivatives.
pub trait Field {
    fn dim(&self) -> usize;

    fn value(&self, y: &[f64]) -> f64;

    /// Writes `∇f(y)` into `out` (length `dim`).
    fn gradient(&self, y: &[f64], out: &mut [f64]);

    /// Writes the row-major Hessian into `out` (length `dim²`).
    fn hessian(&self, y: &[f64], out: &mut [f64]);
}

/// `c` everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl Field for Constant {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _y: &[f64]) -> f64 {
        self.value
    }
    fn gradient(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
    fn hessian(&self, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// `sin(2π m y)` in one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sine1D {
    pub cycles: f64,
}

impl Field for Sine1D {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, y: &[f64]) -> f64 {
        libm::sin(2.0 * PI * self.cycles * y[0])
    }
    fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let w = 2.0 * PI * self.cycles;
        out[0] = w * libm::cos(w * y[0]);
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        let w = 2.0 * PI * self.cycles;
        out[0] = -w * w * libm::sin(w * y[0]);
    }
}

/// `1 - cos(2π m y)`; with integer `m` it vanishes to first order at `y = ±1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneMinusCos1D {
    pub cycles: f64,
}

impl Field for OneMinusCos1D {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, y: &[f64]) -> f64 {
        1.0 - libm::cos(2.0 * PI * self.cycles * y[0])
    }
    fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let w = 2.0 * PI * self.cycles;
        out[0] = w * libm::sin(w * y[0]);
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        let w = 2.0 * PI * self.cycles;
        out[0] = w * w * libm::cos(w * y[0]);
    }
}

/// `exp(-(y - c)² / (2σ²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian1D {
    pub center: f64,
    pub sigma: f64,
}

impl Field for Gaussian1D {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, y: &[f64]) -> f64 {
        let u = (y[0] - self.center) / self.sigma;
        libm::exp(-0.5 * u * u)
    }
    fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let s2 = self.sigma * self.sigma;
        out[0] = -(y[0] - self.center) / s2 * self.value(y);
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        let s2 = self.sigma * self.sigma;
        let d = y[0] - self.center;
        out[0] = (d * d / (s2 * s2) - 1.0 / s2) * self.value(y);
    }
}

/// `cos(2π m y₁)` in two dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cos2D {
    pub cycles: f64,
}

impl Field for Cos2D {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, y: &[f64]) -> f64 {
        libm::cos(2.0 * PI * self.cycles * y[0])
    }
    fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let w = 2.0 * PI * self.cycles;
        out[0] = -w * libm::sin(w * y[0]);
        out[1] = 0.0;
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        let w = 2.0 * PI * self.cycles;
        out.fill(0.0);
        out[0] = -w * w * libm::cos(w * y[0]);
    }
}

/// Radial Bessel field `J₀(z‖y‖)` in two dimensions. Its Fourier transform
/// lives on the circle `‖k‖ = z/2π`; when `z` is a zero of `J₀` the field also
/// vanishes on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselJ0 {
    pub z: f64,
}

impl BesselJ0 {
    /// Second zero of `J₀`.
    pub const J0_ZERO_2: f64 = 5.520_078_110_286_311;

    /// Radial derivatives `(f_r, f_rr, f_r / r)` at radius `r`.
    fn radial(&self, r: f64) -> (f64, f64, f64) {
        let z = self.z;
        let x = z * r;
        if x < 1e-8 {
            return (0.0, -0.5 * z * z, -0.5 * z * z);
        }
        let (j0, j1) = (libm::j0(x), libm::j1(x));
        let fr = -z * j1;
        (fr, z * z * (-j0 + j1 / x), fr / r)
    }
}

impl Field for BesselJ0 {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, y: &[f64]) -> f64 {
        libm::j0(self.z * libm::hypot(y[0], y[1]))
    }
    fn gradient(&self, y: &[f64], out: &mut [f64]) {
        let r = libm::hypot(y[0], y[1]);
        let (_, _, fr_over_r) = self.radial(r);
        out[0] = fr_over_r * y[0];
        out[1] = fr_over_r * y[1];
    }
    fn hessian(&self, y: &[f64], out: &mut [f64]) {
        let r = libm::hypot(y[0], y[1]);
        let (_, frr, fr_over_r) = self.radial(r);
        let (u0, u1) = if r > 0.0 { (y[0] / r, y[1] / r) } else { (1.0, 0.0) };
        // H = f_rr uuᵀ + (f_r / r)(I - uuᵀ)
        out[0] = frr * u0 * u0 + fr_over_r * (1.0 - u0 * u0);
        out[1] = (frr - fr_over_r) * u0 * u1;
        out[2] = out[1];
        out[3] = frr * u1 * u1 + fr_over_r * (1.0 - u1 * u1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn check_derivatives(f: &dyn Field, y: &[f64]) {
        let n = f.dim();
        let h = 1e-5;
        let mut g = vec![0.0; n];
        let mut hess = vec![0.0; n * n];
        f.gradient(y, &mut g);
        f.hessian(y, &mut hess);
        for i in 0..n {
            let mut p = y.to_vec();
            let mut m = y.to_vec();
            p[i] += h;
            m[i] -= h;
            let fd = (f.value(&p) - f.value(&m)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0), "grad {i}: {fd} vs {}", g[i]);
            let (mut gp, mut gm) = (vec![0.0; n], vec![0.0; n]);
            f.gradient(&p, &mut gp);
            f.gradient(&m, &mut gm);
            for j in 0..n {
                let fd = (gp[j] - gm[j]) / (2.0 * h);
                let an = hess[j * n + i];
                assert!((fd - an).abs() < 1e-5 * an.abs().max(1.0), "hess {i}{j}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let fields: Vec<(&dyn Field, Vec<f64>)> = vec![
            (&Sine1D { cycles: 1.0 }, vec![0.3]),
            (&OneMinusCos1D { cycles: 1.0 }, vec![-0.7]),
            (&Gaussian1D { center: 0.1, sigma: 0.2 }, vec![0.25]),
            (&Cos2D { cycles: 1.0 }, vec![0.2, -0.4]),
            (&BesselJ0 { z: BesselJ0::J0_ZERO_2 }, vec![0.3, -0.4]),
            (&BesselJ0 { z: BesselJ0::J0_ZERO_2 }, vec![1e-3, 2e-3]),
        ];
        for (f, y) in fields {
            check_derivatives(f, &y);
        }
    }

    #[test]
    fn bessel_field_vanishes_on_the_unit_circle() {
        let f = BesselJ0 { z: BesselJ0::J0_ZERO_2 };
        assert!(f.value(&[0.6, 0.8]).abs() < 1e-12);
        assert_eq!(f.value(&[0.0, 0.0]), 1.0);
    }
}
